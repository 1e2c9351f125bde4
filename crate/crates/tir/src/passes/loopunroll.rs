//! Full unrolling of innermost counted loops with trip count at most 8.
//! The loop body region (body minus header) is cloned once per iteration
//! with labels renamed `LABEL.uN`; registers are not renamed, the copies
//! execute sequentially exactly like the original iterations. The header
//! compare/branch disappears; a zero-trip loop reduces to a jump to the
//! exit. Loops that become innermost because of this are left for a later
//! application.

use crate::cfg::{compute_cfg, compute_dominators, compute_loops, detect_counted};
use crate::ir::{TirBlock, TirFunction, TirModule};
use std::collections::{HashMap, HashSet};

const MAX_TRIP: u64 = 8;

pub fn run(m: &TirModule) -> TirModule {
    let mut m = m.clone();
    for f in &mut m.functions {
        let initial: Vec<String> = {
            let cfg = compute_cfg(f);
            let doms = compute_dominators(f, &cfg);
            let loops = compute_loops(f, &cfg, &doms);
            loops
                .iter()
                .filter(|lp| {
                    detect_counted(f, lp, &loops).is_some_and(|c| c.trip <= MAX_TRIP)
                })
                .map(|lp| f.blocks[lp.header].label.clone())
                .collect()
        };
        for label in initial {
            unroll_by_header(f, &label);
        }
    }
    m
}

fn unroll_by_header(f: &mut TirFunction, header_label: &str) {
    let cfg = compute_cfg(f);
    let doms = compute_dominators(f, &cfg);
    let loops = compute_loops(f, &cfg, &doms);
    let Some(lp) = loops
        .iter()
        .find(|l| f.blocks[l.header].label == header_label)
    else {
        return;
    };
    let Some(c) = detect_counted(f, lp, &loops) else {
        return;
    };
    if c.trip > MAX_TRIP {
        return;
    }
    let k = c.trip as usize;

    let region: Vec<usize> = lp.body.iter().copied().filter(|&b| b != lp.header).collect();
    let exit_label = f.blocks[c.exit].label.clone();
    let body_entry_label = f.blocks[c.body_entry].label.clone();

    let mut taken: HashSet<String> = f.blocks.iter().map(|b| b.label.clone()).collect();
    let mut copy_names: Vec<HashMap<String, String>> = Vec::with_capacity(k);
    for ci in 0..k {
        let mut map = HashMap::new();
        for &b in &region {
            let orig = f.blocks[b].label.clone();
            let fresh = super::unique_label(&taken, &format!("{orig}.u{ci}"));
            taken.insert(fresh.clone());
            map.insert(orig, fresh);
        }
        copy_names.push(map);
    }

    let mut copies: Vec<TirBlock> = Vec::new();
    for ci in 0..k {
        let continuation = if ci + 1 < k {
            copy_names[ci + 1][&body_entry_label].clone()
        } else {
            exit_label.clone()
        };
        for &b in &region {
            let mut nb = f.blocks[b].clone();
            nb.label = copy_names[ci][&nb.label].clone();
            if let Some(last) = nb.instrs.last_mut() {
                for t in &mut last.targets {
                    if *t == *header_label {
                        *t = continuation.clone();
                    } else if let Some(mapped) = copy_names[ci].get(t.as_str()) {
                        *t = mapped.clone();
                    }
                }
            }
            copies.push(nb);
        }
    }

    let first = if k > 0 {
        copy_names[0][&body_entry_label].clone()
    } else {
        exit_label
    };
    let term = f.blocks[c.preheader].instrs.last_mut().expect("verified block");
    for t in &mut term.targets {
        if *t == *header_label {
            *t = first.clone();
        }
    }

    let header_idx = lp.header;
    let remove: HashSet<usize> = lp.body.iter().copied().collect();
    let old: Vec<TirBlock> = std::mem::take(&mut f.blocks);
    for (bi, b) in old.into_iter().enumerate() {
        if bi == header_idx {
            f.blocks.append(&mut copies);
        }
        if !remove.contains(&bi) {
            f.blocks.push(b);
        }
    }
}
