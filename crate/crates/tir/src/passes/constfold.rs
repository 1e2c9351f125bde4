//! Constant folding: rewrite an instruction whose value is known at compile
//! time into `const`. Works per block with a local known-constants map.
//! Division and remainder with a zero divisor are left alone (they trap).

use crate::ir::{InstKind, Instr, Operand, TirModule};
use std::collections::HashMap;

fn value_of(known: &HashMap<String, i64>, op: &Operand) -> Option<i64> {
    match op {
        Operand::Lit(v) => Some(*v),
        Operand::Reg(r) => known.get(r).copied(),
        Operand::Global(_) => None,
    }
}

pub fn run(m: &TirModule) -> TirModule {
    let mut m = m.clone();
    for f in &mut m.functions {
        for b in &mut f.blocks {
            let mut known: HashMap<String, i64> = HashMap::new();
            for i in &mut b.instrs {
                let folded = if i.kind.is_binop() {
                    match (value_of(&known, &i.operands[0]), value_of(&known, &i.operands[1])) {
                        (Some(a), Some(bv)) => i.kind.eval_binop(a, bv),
                        _ => None,
                    }
                } else if i.kind == InstKind::Copy {
                    value_of(&known, &i.operands[0])
                } else {
                    None
                };
                if let Some(v) = folded {
                    *i = Instr::new(InstKind::Const, i.dest.clone(), vec![Operand::Lit(v)]);
                }
                if let Some(d) = &i.dest {
                    if i.kind == InstKind::Const {
                        known.insert(d.clone(), i.operands[0].as_lit().unwrap());
                    } else {
                        known.remove(d);
                    }
                }
            }
        }
    }
    m
}
