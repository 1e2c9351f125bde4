//! Dead store elimination within blocks: a store to a literal-indexed
//! global cell that is overwritten by a later store to the same cell, with
//! no load or call in between, is removed. Stores through register indices
//! are kept and, conservatively, neither shadow nor unshadow anything.

use crate::ir::{InstKind, Operand, TirModule};
use std::collections::HashSet;

pub fn run(m: &TirModule) -> TirModule {
    let mut m = m.clone();
    for f in &mut m.functions {
        for b in &mut f.blocks {
            let mut pending: HashSet<(String, i64)> = HashSet::new();
            let mut keep = vec![true; b.instrs.len()];
            for (ii, i) in b.instrs.iter().enumerate().rev() {
                match i.kind {
                    InstKind::Load | InstKind::Call => pending.clear(),
                    InstKind::Store => {
                        let Operand::Global(g) = &i.operands[1] else {
                            continue;
                        };
                        if let Some(idx) = i.operands[2].as_lit() {
                            if !pending.insert((g.clone(), idx)) {
                                keep[ii] = false;
                            }
                        }
                    }
                    _ => {}
                }
            }
            let mut idx = 0;
            b.instrs.retain(|_| {
                let k = keep[idx];
                idx += 1;
                k
            });
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::interpret;
    use crate::parse::parse_module;

    fn opt(src: &str) -> crate::ir::TirModule {
        run(&parse_module(src).unwrap())
    }

    #[test]
    fn shadowed_store_is_removed() {
        let src = "global @g[2]
             func @main(){ bb0: %a = const 1  store %a, @g, 0  %b = const 2  store %b, @g, 0  %r = load @g, 0  ret %r }";
        let m = opt(src);
        assert_eq!(m.kind_counts()[InstKind::Store.index()], 1);
        assert_eq!(interpret(&m, 1_000).unwrap().exit_value, 2);
    }

    #[test]
    fn intervening_load_protects_the_store() {
        let src = "global @g[1]
             func @main(){ bb0: %a = const 1  store %a, @g, 0  %x = load @g, 0  store %x, @g, 0  ret %x }";
        let m = opt(src);
        assert_eq!(m.kind_counts()[InstKind::Store.index()], 2);
    }

    #[test]
    fn intervening_call_protects_the_store() {
        let src = "global @g[1]
             func @peek(){ bb0: %v = load @g, 0  ret %v }
             func @main(){ bb0: %a = const 1  store %a, @g, 0  %r = call @peek  %b = const 2  store %b, @g, 0  ret %r }";
        let m = opt(src);
        assert_eq!(m.kind_counts()[InstKind::Store.index()], 2);
        assert_eq!(interpret(&m, 1_000).unwrap().exit_value, 1);
    }

    #[test]
    fn different_cells_do_not_shadow() {
        let src = "global @g[2]
             func @main(){ bb0: %a = const 1  store %a, @g, 0  store %a, @g, 1  ret 0 }";
        let m = opt(src);
        assert_eq!(m.kind_counts()[InstKind::Store.index()], 2);
    }

    #[test]
    fn register_index_stores_are_kept_but_do_not_block_shadowing() {
        // Whatever cell the register store hits, the final value of cell 0
        // comes from the last literal store, so the first one can go.
        let src = "global @g[2]
             func @main(){ bb0: %a = const 1  %i = const 1  store %a, @g, 0  store %a, @g, %i  %b = const 2  store %b, @g, 0  %r = load @g, 0  ret %r }";
        let m0 = parse_module(src).unwrap();
        let m = run(&m0);
        assert_eq!(m.kind_counts()[InstKind::Store.index()], 2);
        assert_eq!(
            interpret(&m0, 1_000).unwrap().exit_value,
            interpret(&m, 1_000).unwrap().exit_value
        );
        assert_eq!(interpret(&m, 1_000).unwrap().exit_value, 2);
    }

    #[test]
    fn shadowing_does_not_cross_blocks() {
        let src = "global @g[1]
             func @main(){ bb0: %a = const 1  store %a, @g, 0  jmp next
             next: %b = const 2  store %b, @g, 0  ret 0 }";
        let m = opt(src);
        assert_eq!(m.kind_counts()[InstKind::Store.index()], 2);
    }
}
