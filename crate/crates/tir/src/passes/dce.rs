//! Dead code elimination: remove side-effect free, trap free instructions
//! whose destination is not live afterwards. Runs to a per-function fixpoint
//! so chains of dead definitions disappear in one application.

use crate::cfg::{compute_cfg, compute_liveness};
use crate::ir::TirModule;
use std::collections::BTreeSet;

pub fn run(m: &TirModule) -> TirModule {
    let mut m = m.clone();
    for f in &mut m.functions {
        loop {
            let cfg = compute_cfg(f);
            let lv = compute_liveness(f, &cfg);
            let mut removed_any = false;
            for (bi, b) in f.blocks.iter_mut().enumerate() {
                let mut live: BTreeSet<String> = lv.live_out[bi].clone();
                let mut keep = vec![true; b.instrs.len()];
                for (ii, i) in b.instrs.iter().enumerate().rev() {
                    let dead_dest = i.dest.as_ref().is_some_and(|d| !live.contains(d));
                    if i.kind.is_trap_free_pure() && dead_dest {
                        keep[ii] = false;
                        removed_any = true;
                        continue;
                    }
                    if let Some(d) = &i.dest {
                        live.remove(d);
                    }
                    for r in i.used_regs() {
                        live.insert(r.to_string());
                    }
                }
                let mut idx = 0;
                b.instrs.retain(|_| {
                    let k = keep[idx];
                    idx += 1;
                    k
                });
            }
            if !removed_any {
                break;
            }
        }
    }
    m
}
