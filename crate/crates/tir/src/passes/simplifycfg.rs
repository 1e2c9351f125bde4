//! Control-flow cleanup, iterated to a fixpoint per function:
//! unreachable blocks are deleted, branches on literal conditions become
//! jumps, and a block ending in a jump to a block with no other
//! predecessors absorbs that block.

use crate::cfg::compute_cfg;
use crate::ir::{InstKind, Instr, TirModule};

pub fn run(m: &TirModule) -> TirModule {
    let mut m = m.clone();
    for f in &mut m.functions {
        loop {
            let mut changed = false;

            let cfg = compute_cfg(f);
            if cfg.reachable.iter().any(|r| !r) {
                let mut idx = 0;
                f.blocks.retain(|_| {
                    let keep = cfg.reachable[idx];
                    idx += 1;
                    keep
                });
                changed = true;
            }

            for b in &mut f.blocks {
                let Some(last) = b.instrs.last_mut() else { continue };
                if last.kind == InstKind::Br {
                    if let Some(v) = last.operands[0].as_lit() {
                        let target = last.targets[if v != 0 { 0 } else { 1 }].clone();
                        let mut jmp = Instr::new(InstKind::Jmp, None, Vec::new());
                        jmp.targets.push(target);
                        *last = jmp;
                        changed = true;
                    }
                }
            }

            let cfg = compute_cfg(f);
            let mut merge: Option<(usize, usize)> = None;
            for bi in 0..f.blocks.len() {
                let term = f.blocks[bi].instrs.last().expect("verified block");
                if term.kind != InstKind::Jmp {
                    continue;
                }
                let ti = f.block_index(&term.targets[0]).expect("verified target");
                if ti == bi || ti == 0 || cfg.preds[ti].len() != 1 {
                    continue;
                }
                merge = Some((bi, ti));
                break;
            }
            if let Some((bi, ti)) = merge {
                let absorbed = f.blocks.remove(ti);
                let bi = if ti < bi { bi - 1 } else { bi };
                let b = &mut f.blocks[bi];
                b.instrs.pop();
                b.instrs.extend(absorbed.instrs);
                changed = true;
            }

            if !changed {
                break;
            }
        }
    }
    m
}
