//! Strength reduction: multiplications by a power-of-two literal become
//! shifts, multiplications by one and additions of zero become copies.
//! Two-literal cases are left for constant folding.

use crate::ir::{InstKind, Instr, Operand, TirModule};

pub fn run(m: &TirModule) -> TirModule {
    let mut m = m.clone();
    for f in &mut m.functions {
        for b in &mut f.blocks {
            for i in &mut b.instrs {
                if !matches!(i.kind, InstKind::Mul | InstKind::Add) {
                    continue;
                }
                let (lit, other) = match (i.operands[0].as_lit(), i.operands[1].as_lit()) {
                    (Some(_), Some(_)) | (None, None) => continue,
                    (Some(v), None) => (v, i.operands[1].clone()),
                    (None, Some(v)) => (v, i.operands[0].clone()),
                };
                match i.kind {
                    InstKind::Mul => {
                        if lit == 1 {
                            *i = Instr::new(InstKind::Copy, i.dest.clone(), vec![other]);
                        } else if lit > 0 && lit.count_ones() == 1 {
                            let shift = lit.trailing_zeros() as i64;
                            *i = Instr::new(
                                InstKind::Shl,
                                i.dest.clone(),
                                vec![other, Operand::Lit(shift)],
                            );
                        }
                    }
                    InstKind::Add => {
                        if lit == 0 {
                            *i = Instr::new(InstKind::Copy, i.dest.clone(), vec![other]);
                        }
                    }
                    _ => {}
                }
            }
        }
    }
    m
}
