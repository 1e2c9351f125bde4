//! Loop-invariant code motion. A trap-free pure instruction whose operands
//! are all defined outside the loop is hoisted to the loop preheader when
//! that is safe: the destination has a single in-loop definition that
//! dominates all in-loop uses and is dead on every loop exit (so runs with
//! zero iterations cannot observe the hoisted value). A preheader is
//! created on demand, only when a hoist actually happens.

use crate::cfg::{compute_cfg, compute_dominators, compute_loops, Cfg, Dominators, Liveness, LoopInfo};
use crate::ir::{InstKind, Instr, TirFunction, TirModule};
use std::collections::HashSet;

pub fn run(m: &TirModule) -> TirModule {
    let mut m = m.clone();
    for f in &mut m.functions {
        while hoist_one(f) {}
    }
    m
}

/// Find the first hoistable instruction (loops by header order, blocks by
/// index, instructions in order) and move it. Returns false when none exists.
fn hoist_one(f: &mut TirFunction) -> bool {
    let cfg = compute_cfg(f);
    let doms = compute_dominators(f, &cfg);
    let loops = compute_loops(f, &cfg, &doms);
    let lv = crate::cfg::compute_liveness(f, &cfg);
    let mut action = None;
    'search: for lp in &loops {
        for &bi in &lp.body {
            for (ii, i) in f.blocks[bi].instrs.iter().enumerate() {
                if hoistable(f, &cfg, &doms, &lv, lp, bi, ii, i) {
                    action = Some((lp.clone(), bi, ii));
                    break 'search;
                }
            }
        }
    }
    let Some((lp, bi, ii)) = action else {
        return false;
    };
    let instr = f.blocks[bi].instrs.remove(ii);
    let ph = match lp.preheader {
        Some(p) => p,
        None => create_preheader(f, &cfg, &lp),
    };
    let at = f.blocks[ph].instrs.len() - 1;
    f.blocks[ph].instrs.insert(at, instr);
    true
}

#[allow(clippy::too_many_arguments)]
fn hoistable(
    f: &TirFunction,
    cfg: &Cfg,
    doms: &Dominators,
    lv: &Liveness,
    lp: &LoopInfo,
    bi: usize,
    ii: usize,
    i: &Instr,
) -> bool {
    if !i.kind.is_trap_free_pure() {
        return false;
    }
    let Some(d) = i.dest.as_deref() else {
        return false;
    };
    // Operands must come from outside the loop.
    let defined_in_loop = |r: &str| {
        lp.body
            .iter()
            .any(|&b| f.blocks[b].instrs.iter().any(|x| x.dest.as_deref() == Some(r)))
    };
    if i.used_regs().any(defined_in_loop) {
        return false;
    }
    // Single in-loop definition of d (this one).
    let defs: usize = lp
        .body
        .iter()
        .map(|&b| {
            f.blocks[b]
                .instrs
                .iter()
                .filter(|x| x.dest.as_deref() == Some(d))
                .count()
        })
        .sum();
    if defs != 1 {
        return false;
    }
    // The definition dominates every in-loop use.
    for &ub in &lp.body {
        for (ui, u) in f.blocks[ub].instrs.iter().enumerate() {
            if !u.used_regs().any(|r| r == d) {
                continue;
            }
            let dominated = if ub == bi { ii < ui } else { doms.dominates(bi, ub) };
            if !dominated {
                return false;
            }
        }
    }
    // Dead at every loop exit edge.
    for &xb in &lp.body {
        for &s in &cfg.succs[xb] {
            if !lp.body.contains(&s) && lv.live_in[s].contains(d) {
                return false;
            }
        }
    }
    true
}

/// Insert a fresh block `HEADER.ph: jmp HEADER` before the header and
/// retarget every out-of-loop predecessor of the header to it.
fn create_preheader(f: &mut TirFunction, cfg: &Cfg, lp: &LoopInfo) -> usize {
    let header_label = f.blocks[lp.header].label.clone();
    let taken: HashSet<String> = f.blocks.iter().map(|b| b.label.clone()).collect();
    let label = super::unique_label(&taken, &format!("{header_label}.ph"));
    for (pi, b) in f.blocks.iter_mut().enumerate() {
        if lp.body.contains(&pi) || !cfg.preds[lp.header].contains(&pi) {
            continue;
        }
        let term = b.instrs.last_mut().expect("verified block");
        for t in &mut term.targets {
            if *t == header_label {
                *t = label.clone();
            }
        }
    }
    let mut jmp = Instr::new(InstKind::Jmp, None, Vec::new());
    jmp.targets.push(header_label);
    f.blocks.insert(
        lp.header,
        crate::ir::TirBlock {
            label,
            instrs: vec![jmp],
        },
    );
    lp.header
}
