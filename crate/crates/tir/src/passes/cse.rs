//! Common subexpression elimination within blocks: a recomputation of an
//! already-available pure expression becomes a copy of the earlier result.
//! div/rem participate: with identical operands and no redefinition in
//! between, the earlier instance traps exactly when the later one would.

use crate::ir::{InstKind, Instr, Operand, TirModule};
use std::collections::HashMap;

fn cse_candidate(i: &Instr) -> bool {
    (i.kind.is_binop() || i.kind == InstKind::Const) && i.dest.is_some()
}

pub fn run(m: &TirModule) -> TirModule {
    let mut m = m.clone();
    for f in &mut m.functions {
        for b in &mut f.blocks {
            // (kind, operands) -> register holding the value
            let mut table: HashMap<(InstKind, Vec<Operand>), String> = HashMap::new();
            for i in &mut b.instrs {
                let mut matched = false;
                if cse_candidate(i) {
                    let key = (i.kind, i.operands.clone());
                    if let Some(prev) = table.get(&key) {
                        *i = Instr::new(
                            InstKind::Copy,
                            i.dest.clone(),
                            vec![Operand::Reg(prev.clone())],
                        );
                        matched = true;
                    }
                }
                if let Some(d) = i.dest.clone() {
                    table.retain(|k, v| {
                        *v != d && !k.1.iter().any(|o| o.as_reg() == Some(d.as_str()))
                    });
                    if !matched && cse_candidate(i) && i.used_regs().all(|r| r != d) {
                        table.insert((i.kind, i.operands.clone()), d);
                    }
                }
            }
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_module;
    use crate::printer::print_module;

    fn opt(src: &str) -> String {
        print_module(&run(&parse_module(src).unwrap()))
    }

    const WRAP: &str = "func @main(){ bb0: %r = call @f, 7, 3  ret %r }";

    #[test]
    fn repeated_expression_becomes_copy() {
        let out = opt(&format!(
            "func @f(%x, %y){{ bb0: %a = add %x, %y  %b = add %x, %y  ret %b }} {WRAP}"
        ));
        assert!(out.contains("%b = copy %a"));
    }

    #[test]
    fn operand_redefinition_blocks_reuse() {
        let out = opt(&format!(
            "func @f(%x, %y){{ bb0: %a = add %x, %y  %x = add %x, 1  %b = add %x, %y  ret %b }} {WRAP}"
        ));
        assert!(out.contains("%b = add %x, %y"));
    }

    #[test]
    fn result_redefinition_blocks_reuse() {
        let out = opt(&format!(
            "func @f(%x, %y){{ bb0: %a = add %x, %y  %a = const 0  %b = add %x, %y  ret %b }} {WRAP}"
        ));
        assert!(out.contains("%b = add %x, %y"));
    }

    #[test]
    fn division_with_same_operands_is_shared() {
        let out = opt(&format!(
            "func @f(%x, %y){{ bb0: %a = div %x, %y  %b = div %x, %y  ret %b }} {WRAP}"
        ));
        assert!(out.contains("%b = copy %a"));
    }

    #[test]
    fn repeated_const_is_shared() {
        let out = opt("func @main(){ bb0: %a = const 42  %b = const 42  ret %b }");
        assert!(out.contains("%b = copy %a"));
    }

    #[test]
    fn self_referential_definitions_are_not_reused() {
        let out = opt(&format!(
            "func @f(%x, %y){{ bb0: %x = add %x, %x  %y = add %x, %x  ret %y }} {WRAP}"
        ));
        assert!(out.contains("%y = add %x, %x"));
    }

    #[test]
    fn loads_are_not_shared() {
        let out = opt(
            "global @g[2]
             func @main(){ bb0: %a = load @g, 0  %b = load @g, 0  ret %b }",
        );
        assert!(out.contains("%b = load @g, 0"));
    }
}
