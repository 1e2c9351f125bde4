//! Function inlining. Call sites whose callee is small (at most 12
//! instructions) and non-recursive (cannot reach itself in the call graph)
//! are replaced by the callee body. Eligibility and bodies come from a
//! snapshot of the input module, so one application inlines one layer and
//! never chases newly created sites.
//!
//! Renaming scheme for the nth site processed in a function: labels and
//! registers of the inlined body get the prefix `inN.`, the remainder of
//! the call block becomes `inN.cont`, and each `ret V` becomes a copy of V
//! into the call destination followed by a jump to the continuation.

use crate::ir::{InstKind, Instr, Operand, TirBlock, TirFunction, TirModule};
use std::collections::{HashSet, VecDeque};

const MAX_CALLEE_INSTRS: usize = 12;

fn callee_name(i: &Instr) -> Option<&str> {
    if i.kind != InstKind::Call {
        return None;
    }
    match &i.operands[0] {
        Operand::Global(g) => Some(g),
        _ => None,
    }
}

/// Functions reachable from `from` by call edges, in `m`.
fn reaches(m: &TirModule, from: &str) -> HashSet<String> {
    let mut seen: HashSet<String> = HashSet::new();
    let mut queue: VecDeque<&str> = VecDeque::from([from]);
    while let Some(cur) = queue.pop_front() {
        let Some(f) = m.function(cur) else { continue };
        for b in &f.blocks {
            for i in &b.instrs {
                if let Some(c) = callee_name(i) {
                    if seen.insert(c.to_string()) {
                        queue.push_back(c);
                    }
                }
            }
        }
    }
    seen
}

pub fn run(m: &TirModule) -> TirModule {
    let snapshot = m.clone();
    let mut m = m.clone();
    let eligible: HashSet<String> = snapshot
        .functions
        .iter()
        .filter(|f| {
            f.instr_count() <= MAX_CALLEE_INSTRS && !reaches(&snapshot, &f.name).contains(&f.name)
        })
        .map(|f| f.name.clone())
        .collect();
    for fi in 0..m.functions.len() {
        // Sites from the snapshot, block-major; processing the flat list in
        // reverse keeps earlier indices in the same block valid after splits.
        let sites: Vec<(String, usize)> = snapshot.functions[fi]
            .blocks
            .iter()
            .flat_map(|b| {
                b.instrs
                    .iter()
                    .enumerate()
                    .filter(|(_, i)| callee_name(i).is_some_and(|c| eligible.contains(c)))
                    .map(|(ii, _)| (b.label.clone(), ii))
            })
            .collect();
        let mut counter = next_prefix_number(&m.functions[fi]);
        for (label, ii) in sites.iter().rev() {
            inline_site(&mut m.functions[fi], label, *ii, &snapshot, counter);
            counter += 1;
        }
    }
    m
}

/// Smallest n such that no label or register in f starts with "in<n>.".
fn next_prefix_number(f: &TirFunction) -> u64 {
    let mut max: Option<u64> = None;
    let mut note = |s: &str| {
        if let Some(rest) = s.strip_prefix("in") {
            if let Some(dot) = rest.find('.') {
                if let Ok(n) = rest[..dot].parse::<u64>() {
                    max = Some(max.map_or(n, |m| m.max(n)));
                }
            }
        }
    };
    for b in &f.blocks {
        note(&b.label);
        for i in &b.instrs {
            if let Some(d) = &i.dest {
                note(d);
            }
            for op in &i.operands {
                if let Operand::Reg(r) = op {
                    note(r);
                }
            }
        }
    }
    max.map_or(0, |m| m + 1)
}

fn inline_site(f: &mut TirFunction, block_label: &str, ii: usize, snapshot: &TirModule, n: u64) {
    let bi = f.block_index(block_label).expect("stable block label");
    let call = f.blocks[bi].instrs[ii].clone();
    let callee = snapshot
        .function(callee_name(&call).expect("call site"))
        .expect("verified callee");
    let pfx = format!("in{n}.");
    let cont_label = format!("{pfx}cont");
    let dest = call.dest.clone().expect("call has a destination");

    let tail: Vec<Instr> = f.blocks[bi].instrs.split_off(ii + 1);
    f.blocks[bi].instrs.pop();
    for (p, arg) in callee.params.iter().zip(&call.operands[1..]) {
        f.blocks[bi].instrs.push(Instr::new(
            InstKind::Copy,
            Some(format!("{pfx}{p}")),
            vec![arg.clone()],
        ));
    }
    let mut enter = Instr::new(InstKind::Jmp, None, Vec::new());
    enter
        .targets
        .push(format!("{pfx}{}", callee.blocks[0].label));
    f.blocks[bi].instrs.push(enter);

    let mut body: Vec<TirBlock> = Vec::new();
    for cb in &callee.blocks {
        let mut nb = TirBlock {
            label: format!("{pfx}{}", cb.label),
            instrs: Vec::new(),
        };
        for i in &cb.instrs {
            if i.kind == InstKind::Ret {
                let mut val = i.operands[0].clone();
                if let Operand::Reg(r) = &val {
                    val = Operand::Reg(format!("{pfx}{r}"));
                }
                nb.instrs
                    .push(Instr::new(InstKind::Copy, Some(dest.clone()), vec![val]));
                let mut jmp = Instr::new(InstKind::Jmp, None, Vec::new());
                jmp.targets.push(cont_label.clone());
                nb.instrs.push(jmp);
                continue;
            }
            let mut ni = i.clone();
            if let Some(d) = &mut ni.dest {
                *d = format!("{pfx}{d}");
            }
            for op in &mut ni.operands {
                if let Operand::Reg(r) = op {
                    *r = format!("{pfx}{r}");
                }
            }
            for t in &mut ni.targets {
                *t = format!("{pfx}{t}");
            }
            nb.instrs.push(ni);
        }
        body.push(nb);
    }
    body.push(TirBlock {
        label: cont_label,
        instrs: tail,
    });
    // Splice the callee body and continuation right after the call block.
    let at = bi + 1;
    f.blocks.splice(at..at, body);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::interpret;
    use crate::parse::parse_module;
    use crate::printer::print_module;

    fn opt(src: &str) -> crate::ir::TirModule {
        run(&parse_module(src).unwrap())
    }

    #[test]
    fn small_leaf_call_is_expanded() {
        let src = "func @double(%x){ bb0: %r = mul %x, 2  ret %r }
             func @main(){ bb0: %a = const 21  %b = call @double, %a  ret %b }";
        let m0 = parse_module(src).unwrap();
        let m = opt(src);
        assert_eq!(m.kind_counts()[InstKind::Call.index()], 0);
        let out = print_module(&m);
        assert!(out.contains("%in0.x = copy %a"));
        assert!(out.contains("%in0.r = mul %in0.x, 2"));
        assert!(out.contains("%b = copy %in0.r"));
        assert!(out.contains("in0.cont:"));
        let a = interpret(&m0, 1_000).unwrap();
        let b = interpret(&m, 1_000).unwrap();
        assert_eq!(a.exit_value, b.exit_value);
        assert_eq!(b.exit_value, 42);
    }

    #[test]
    fn recursive_functions_are_never_inlined() {
        let src = "func @f(%x){ bb0: %c = le %x, 0  br %c, base, rec
             base: ret 0
             rec: %y = sub %x, 1  %r = call @f, %y  ret %r }
             func @main(){ bb0: %r = call @f, 3  ret %r }";
        let m = opt(src);
        assert!(m.kind_counts()[InstKind::Call.index()] > 0);
    }

    #[test]
    fn mutual_recursion_is_detected() {
        let src = "func @even(%x){ bb0: %c = eq %x, 0  br %c, y, n
             y: ret 1
             n: %d = sub %x, 1  %r = call @odd, %d  ret %r }
             func @odd(%x){ bb0: %c = eq %x, 0  br %c, y, n
             y: ret 0
             n: %d = sub %x, 1  %r = call @even, %d  ret %r }
             func @main(){ bb0: %r = call @even, 4  ret %r }";
        let m = opt(src);
        assert_eq!(
            m.kind_counts()[InstKind::Call.index()],
            parse_module(src).unwrap().kind_counts()[InstKind::Call.index()]
        );
    }

    #[test]
    fn large_callees_are_left_alone() {
        let body: String = (0..13).map(|i| format!("%a{i} = const {i}  ")).collect();
        let src = format!(
            "func @big(){{ bb0: {body}ret %a0 }}
             func @main(){{ bb0: %r = call @big  ret %r }}"
        );
        let m = opt(&src);
        assert_eq!(m.kind_counts()[InstKind::Call.index()], 1);
    }

    #[test]
    fn two_sites_in_one_block_both_expand() {
        let src = "func @inc(%x){ bb0: %r = add %x, 1  ret %r }
             func @main(){ bb0: %a = call @inc, 1  %b = call @inc, %a  ret %b }";
        let m0 = parse_module(src).unwrap();
        let m = opt(src);
        assert_eq!(m.kind_counts()[InstKind::Call.index()], 0);
        let a = interpret(&m0, 1_000).unwrap();
        let b = interpret(&m, 1_000).unwrap();
        assert_eq!(a.exit_value, b.exit_value);
        assert_eq!(b.exit_value, 3);
    }

    #[test]
    fn multi_block_callee_with_two_returns() {
        let src = "func @abs(%x){ bb0: %c = lt %x, 0  br %c, neg, pos
             neg: %y = sub 0, %x  ret %y
             pos: ret %x }
             func @main(){ bb0: %a = const -5  %r = call @abs, %a  %s = call @abs, %r  ret %s }";
        let m0 = parse_module(src).unwrap();
        let m = opt(src);
        assert_eq!(m.kind_counts()[InstKind::Call.index()], 0);
        let a = interpret(&m0, 1_000).unwrap();
        let b = interpret(&m, 1_000).unwrap();
        assert_eq!(a.exit_value, b.exit_value);
        assert_eq!(b.exit_value, 5);
    }

    #[test]
    fn one_layer_per_application() {
        let src = "func @base(%x){ bb0: %r = add %x, 1  ret %r }
             func @mid(%x){ bb0: %r = call @base, %x  ret %r }
             func @main(){ bb0: %r = call @mid, 40  ret %r }";
        let m0 = parse_module(src).unwrap();
        let once = run(&m0);
        // main's call to mid became a call to base (via mid's body); one
        // more application clears it.
        assert!(once.kind_counts()[InstKind::Call.index()] > 0);
        let twice = run(&once);
        let main = twice.function("main").unwrap();
        let calls_in_main: u64 = main
            .blocks
            .iter()
            .flat_map(|b| &b.instrs)
            .filter(|i| i.kind == InstKind::Call)
            .count() as u64;
        assert_eq!(calls_in_main, 0);
        for m in [&once, &twice] {
            assert_eq!(interpret(m, 1_000).unwrap().exit_value, 41);
        }
    }

    #[test]
    fn prefix_numbers_avoid_existing_names() {
        let src = "func @inc(%x){ bb0: %r = add %x, 1  ret %r }
             func @main(){ bb0: %in3.z = const 0  %a = call @inc, %in3.z  ret %a }";
        let m0 = parse_module(src).unwrap();
        let m = run(&m0);
        let out = print_module(&m);
        assert!(out.contains("%in4.x = copy %in3.z"), "{out}");
        assert_eq!(interpret(&m, 1_000).unwrap().exit_value, 1);
    }
}
