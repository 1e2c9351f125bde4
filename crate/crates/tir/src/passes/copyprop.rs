//! Copy propagation: within a block, uses of a register assigned by `copy`
//! are rewritten to the copy's source while that source is unchanged.

use crate::ir::{InstKind, Operand, TirModule};
use std::collections::HashMap;

pub fn run(m: &TirModule) -> TirModule {
    let mut m = m.clone();
    for f in &mut m.functions {
        for b in &mut f.blocks {
            // dest -> fully resolved source (register or literal)
            let mut map: HashMap<String, Operand> = HashMap::new();
            for i in &mut b.instrs {
                for op in &mut i.operands {
                    if let Operand::Reg(r) = op {
                        if let Some(src) = map.get(r.as_str()) {
                            *op = src.clone();
                        }
                    }
                }
                if let Some(d) = i.dest.clone() {
                    map.retain(|k, v| *k != d && v.as_reg() != Some(d.as_str()));
                    if i.kind == InstKind::Copy && i.operands[0].as_reg() != Some(d.as_str()) {
                        map.insert(d, i.operands[0].clone());
                    }
                }
            }
        }
    }
    m
}
