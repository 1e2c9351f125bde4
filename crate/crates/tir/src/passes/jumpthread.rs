//! Jump threading: branch/jump targets that point at a block containing
//! only a single `jmp` are redirected to that jump's final destination.
//! Chains resolve in one application; cycles of empty jumps resolve to a
//! member of the cycle (the program loops forever either way).

use crate::ir::{InstKind, TirModule};
use std::collections::{HashMap, HashSet};

pub fn run(m: &TirModule) -> TirModule {
    let mut m = m.clone();
    for f in &mut m.functions {
        let mut resolved: HashMap<String, String> = HashMap::new();
        for b in &f.blocks {
            resolved.insert(b.label.clone(), resolve(f, &b.label));
        }
        for b in &mut f.blocks {
            let Some(last) = b.instrs.last_mut() else { continue };
            if matches!(last.kind, InstKind::Br | InstKind::Jmp) {
                for t in &mut last.targets {
                    *t = resolved[t.as_str()].clone();
                }
            }
        }
    }
    m
}

fn resolve(f: &crate::ir::TirFunction, start: &str) -> String {
    let mut seen: HashSet<String> = HashSet::new();
    let mut cur = start.to_string();
    loop {
        let bi = f.block_index(&cur).expect("verified label");
        let b = &f.blocks[bi];
        let trivial = b.instrs.len() == 1 && b.instrs[0].kind == InstKind::Jmp;
        if !trivial || !seen.insert(cur.clone()) {
            return cur;
        }
        cur = b.instrs[0].targets[0].clone();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_module;
    use crate::printer::print_module;

    fn opt(src: &str) -> String {
        print_module(&run(&parse_module(src).unwrap()))
    }

    #[test]
    fn chain_of_trivial_jumps_is_skipped() {
        let out = opt(
            "func @main(){ bb0: jmp a
             a: jmp b
             b: jmp c
             c: ret 0 }",
        );
        assert!(out.contains("bb0:\n  jmp c"), "{out}");
    }

    #[test]
    fn both_branch_arms_are_threaded() {
        let out = opt(
            "func @f(%c){ bb0: br %c, a, b
             a: jmp t
             b: jmp t
             t: ret 0 }
             func @main(){ bb0: %r = call @f, 1  ret %r }",
        );
        assert!(out.contains("br %c, t, t"));
    }

    #[test]
    fn blocks_with_work_are_not_skipped() {
        let out = opt(
            "func @main(){ bb0: jmp a
             a: %x = const 1  jmp b
             b: ret %x }",
        );
        assert!(out.contains("bb0:\n  jmp a"));
        assert!(out.contains("jmp b"));
    }

    #[test]
    fn jump_cycle_terminates_resolution() {
        let out = opt(
            "func @main(){ bb0: jmp a
             a: jmp b
             b: jmp a }",
        );
        // Resolution stops somewhere inside the cycle and the pass terminates.
        assert!(out.contains("jmp"));
    }

    #[test]
    fn idempotent_on_its_own_output() {
        let src = "func @f(%c){ bb0: br %c, a, b
             a: jmp t
             b: jmp t
             t: ret 0 }
             func @main(){ bb0: %r = call @f, 1  ret %r }";
        let once = run(&parse_module(src).unwrap());
        let twice = run(&once);
        assert!(crate::ir::structurally_equal(&once, &twice));
    }
}
