//! Constant propagation: replace register operands whose value is known from
//! a dominating `const` in the same block with the literal itself.

use crate::ir::{InstKind, Operand, TirModule};
use std::collections::HashMap;

pub fn run(m: &TirModule) -> TirModule {
    let mut m = m.clone();
    for f in &mut m.functions {
        for b in &mut f.blocks {
            let mut known: HashMap<String, i64> = HashMap::new();
            for i in &mut b.instrs {
                for op in &mut i.operands {
                    if let Operand::Reg(r) = op {
                        if let Some(v) = known.get(r.as_str()) {
                            *op = Operand::Lit(*v);
                        }
                    }
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
