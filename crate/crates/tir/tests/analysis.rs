//! Cross-checks the flow analyses and pass algebra against brute-force
//! oracles on the bundled programs.

mod common;

use common::{load_corpus, platform_path};
use tir::cfg::{compute_cfg, compute_dominators};
use tir::passes::{apply_phase_by_name, run_sequence, PHASE_NAMES};
use tir::platform::{load_platform, profile, PlatformModel};
use tir::NUM_KINDS;

/// Blocks reachable from entry when `avoid` is deleted from the graph.
fn reachable_avoiding(succs: &[Vec<usize>], avoid: usize) -> Vec<bool> {
    let mut seen = vec![false; succs.len()];
    if avoid == 0 {
        return seen;
    }
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(b) = stack.pop() {
        for &s in &succs[b] {
            if s != avoid && !seen[s] {
                seen[s] = true;
                stack.push(s);
            }
        }
    }
    seen
}

#[test]
fn dominators_match_removal_reachability() {
    for (stem, _, module) in load_corpus() {
        for f in &module.functions {
            let cfg = compute_cfg(f);
            let doms = compute_dominators(f, &cfg);
            for a in 0..f.blocks.len() {
                let cut = reachable_avoiding(&cfg.succs, a);
                for b in 0..f.blocks.len() {
                    if !cfg.reachable[b] {
                        continue;
                    }
                    let expect = if a == b { true } else { !cut[b] };
                    assert_eq!(
                        doms.dominates(a, b),
                        expect,
                        "{stem}/@{}: dominates({a}, {b})",
                        f.name
                    );
                }
            }
        }
    }
}

#[test]
fn cleanup_phases_are_idempotent_on_the_corpus() {
    for (stem, _, module) in load_corpus() {
        for phase in ["dce", "simplifycfg", "jumpthread", "deadstore"] {
            let once = apply_phase_by_name(&module, phase).unwrap();
            let twice = apply_phase_by_name(&once.module, phase).unwrap();
            assert!(
                !twice.changed,
                "{phase} not idempotent on {stem}"
            );
        }
    }
}

fn assert_not_worse(before: f64, after: f64, what: &str, stem: &str) {
    assert!(
        after <= before + 1e-15,
        "{stem}: {what} grew from {before} to {after} after dce"
    );
}

#[test]
fn removing_dead_code_never_raises_the_accumulated_costs() {
    let platforms: Vec<PlatformModel> = ["vulcan", "ember"]
        .iter()
        .map(|n| load_platform(&platform_path(n)).unwrap())
        .collect();
    let mut fired = 0;
    for (stem, _, module) in load_corpus() {
        let out = apply_phase_by_name(&module, "dce").unwrap();
        if !out.changed {
            continue;
        }
        fired += 1;
        for p in &platforms {
            let (before, _) = profile(&module, p, tir::exec::DEFAULT_FUEL).unwrap();
            let (after, _) = profile(&out.module, p, tir::exec::DEFAULT_FUEL).unwrap();
            assert_not_worse(before.exec_time_s, after.exec_time_s, "exec time", &stem);
            assert_not_worse(before.energy_j, after.energy_j, "energy", &stem);
            assert!(after.executed_instructions <= before.executed_instructions, "{stem}");
            assert!(after.code_size_bytes <= before.code_size_bytes, "{stem}");
        }
    }
    assert!(fired >= 1, "dce fired nowhere; the oracle checked nothing");
}

/// With energy proportional to cycles and no static draw, average power is a
/// platform constant, so dce must leave it unchanged.
#[test]
fn average_power_is_flat_on_a_proportional_table() {
    let vulcan = load_platform(&platform_path("vulcan")).unwrap();
    let prop = PlatformModel {
        name: "prop".into(),
        clock_hz: 1_000_000,
        static_power_mw: 0.0,
        cycles: vulcan.cycles,
        energy_nj: {
            let mut e = [0.0; NUM_KINDS];
            for (i, c) in vulcan.cycles.iter().enumerate() {
                e[i] = *c as f64;
            }
            e
        },
        bytes: vulcan.bytes,
    };
    for (stem, _, module) in load_corpus() {
        let out = apply_phase_by_name(&module, "dce").unwrap();
        if !out.changed {
            continue;
        }
        let (before, _) = profile(&module, &prop, tir::exec::DEFAULT_FUEL).unwrap();
        let (after, _) = profile(&out.module, &prop, tir::exec::DEFAULT_FUEL).unwrap();
        let rel = (after.avg_power_w - before.avg_power_w).abs() / before.avg_power_w;
        assert!(rel <= 1e-12, "{stem}: avg power moved by {rel}");
    }
}

#[test]
fn phase_order_changes_the_outcome() {
    let forward: Vec<usize> = ["inline", "constprop", "constfold", "dce"]
        .iter()
        .map(|n| PHASE_NAMES.iter().position(|p| p == n).unwrap())
        .collect();
    let mut backward = forward.clone();
    backward.reverse();

    let mut somewhere_smaller = false;
    for (_, _, module) in load_corpus() {
        let (fwd, _) = run_sequence(&module, &forward).unwrap();
        let (bwd, _) = run_sequence(&module, &backward).unwrap();
        if fwd.instr_count() < bwd.instr_count() {
            somewhere_smaller = true;
        }
    }
    assert!(somewhere_smaller, "phase order never mattered on the corpus");
}
