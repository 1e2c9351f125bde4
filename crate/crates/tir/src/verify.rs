//! Module well-formedness checks. Every module returned by the parser or an
//! optimization phase passes these; the interpreter never reads an undefined
//! register on a verified module.

use crate::ir::{InstKind, Operand, TirBlock, TirFunction, TirModule};
use std::collections::{BTreeSet, HashMap, HashSet};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("verify error in {context}: {msg}")]
pub struct VerifyError {
    /// Function/block/instruction path, e.g. `@main/bb2#3`.
    pub context: String,
    pub msg: String,
}

fn err(context: impl Into<String>, msg: impl Into<String>) -> VerifyError {
    VerifyError {
        context: context.into(),
        msg: msg.into(),
    }
}

/// Expected operand shape per kind; `targets` length is checked separately.
fn check_operand_shape(
    m: &TirModule,
    f: &TirFunction,
    i: &crate::ir::Instr,
    ctx: &str,
) -> Result<(), VerifyError> {
    let reg_or_lit = |op: &Operand| matches!(op, Operand::Reg(_) | Operand::Lit(_));
    let shape_err = |what: &str| Err(err(ctx, format!("{} {}", i.kind.name(), what)));
    match i.kind {
        InstKind::Const => {
            if i.operands.len() != 1 || !matches!(i.operands[0], Operand::Lit(_)) {
                return shape_err("takes one literal operand");
            }
        }
        InstKind::Copy => {
            if i.operands.len() != 1 || !reg_or_lit(&i.operands[0]) {
                return shape_err("takes one register or literal operand");
            }
        }
        k if k.is_binop() => {
            if i.operands.len() != 2 || !i.operands.iter().all(reg_or_lit) {
                return shape_err("takes two register or literal operands");
            }
        }
        InstKind::Load => {
            if i.operands.len() != 2 || !reg_or_lit(&i.operands[1]) {
                return shape_err("takes a global and an index");
            }
            match &i.operands[0] {
                Operand::Global(g) if m.global(g).is_some() => {}
                Operand::Global(g) => return Err(err(ctx, format!("undefined global @{g}"))),
                _ => return shape_err("takes a global and an index"),
            }
        }
        InstKind::Store => {
            if i.operands.len() != 3 || !reg_or_lit(&i.operands[0]) || !reg_or_lit(&i.operands[2]) {
                return shape_err("takes a value, a global and an index");
            }
            match &i.operands[1] {
                Operand::Global(g) if m.global(g).is_some() => {}
                Operand::Global(g) => return Err(err(ctx, format!("undefined global @{g}"))),
                _ => return shape_err("takes a value, a global and an index"),
            }
        }
        InstKind::Call => {
            let callee = match i.operands.first() {
                Some(Operand::Global(name)) => name,
                _ => return shape_err("takes a callee name then arguments"),
            };
            let target = m
                .function(callee)
                .ok_or_else(|| err(ctx, format!("undefined function @{callee}")))?;
            let args = i.operands.len() - 1;
            if args != target.params.len() {
                return Err(err(
                    ctx,
                    format!(
                        "call to @{callee} passes {args} arguments, expected {}",
                        target.params.len()
                    ),
                ));
            }
            if !i.operands[1..].iter().all(reg_or_lit) {
                return shape_err("arguments must be registers or literals");
            }
        }
        InstKind::Ret | InstKind::Print | InstKind::Br => {
            if i.operands.len() != 1 || !reg_or_lit(&i.operands[0]) {
                return shape_err("takes one register or literal operand");
            }
        }
        InstKind::Jmp => {
            if !i.operands.is_empty() {
                return shape_err("takes no operands");
            }
        }
        _ => unreachable!(),
    }
    let want_targets = match i.kind {
        InstKind::Br => 2,
        InstKind::Jmp => 1,
        _ => 0,
    };
    if i.targets.len() != want_targets {
        return shape_err("has wrong target count");
    }
    for t in &i.targets {
        if f.block_index(t).is_none() {
            return Err(err(ctx, format!("undefined block target {t}")));
        }
    }
    if i.dest.is_some() != i.kind.has_dest() {
        return shape_err("destination mismatch");
    }
    Ok(())
}

/// Forward must-defined dataflow: every register read is definitely assigned
/// on all paths from entry. Unreachable blocks are vacuously fine.
fn check_def_before_use(f: &TirFunction) -> Result<(), VerifyError> {
    let n = f.blocks.len();
    let mut all_regs: BTreeSet<&str> = f.params.iter().map(|s| s.as_str()).collect();
    for b in &f.blocks {
        for i in &b.instrs {
            if let Some(d) = &i.dest {
                all_regs.insert(d);
            }
        }
    }
    let universe: HashSet<&str> = all_regs.iter().copied().collect();
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (bi, b) in f.blocks.iter().enumerate() {
        if let Some(t) = b.instrs.last() {
            for target in &t.targets {
                preds[f.block_index(target).unwrap()].push(bi);
            }
        }
    }
    let mut out: Vec<HashSet<&str>> = vec![universe.clone(); n];
    let entry_in: HashSet<&str> = f.params.iter().map(|s| s.as_str()).collect();
    loop {
        let mut changed = false;
        for bi in 0..n {
            let mut inset = if bi == 0 {
                entry_in.clone()
            } else if preds[bi].is_empty() {
                universe.clone()
            } else {
                let mut it = preds[bi].iter();
                let mut s = out[*it.next().unwrap()].clone();
                for p in it {
                    s.retain(|r| out[*p].contains(r));
                }
                s
            };
            for i in &f.blocks[bi].instrs {
                if let Some(d) = &i.dest {
                    inset.insert(d.as_str());
                }
            }
            if inset != out[bi] {
                out[bi] = inset;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    for (bi, b) in f.blocks.iter().enumerate() {
        let mut defined = if bi == 0 {
            entry_in.clone()
        } else if preds[bi].is_empty() {
            universe.clone()
        } else {
            let mut it = preds[bi].iter();
            let mut s = out[*it.next().unwrap()].clone();
            for p in it {
                s.retain(|r| out[*p].contains(r));
            }
            s
        };
        for (ii, i) in b.instrs.iter().enumerate() {
            for r in i.used_regs() {
                if !defined.contains(r) {
                    return Err(err(
                        format!("@{}/{}#{}", f.name, b.label, ii),
                        format!("register %{r} may be used before definition"),
                    ));
                }
            }
            if let Some(d) = &i.dest {
                defined.insert(d.as_str());
            }
        }
    }
    Ok(())
}

fn check_function(m: &TirModule, f: &TirFunction) -> Result<(), VerifyError> {
    let fctx = format!("@{}", f.name);
    if f.blocks.is_empty() {
        return Err(err(&fctx, "function has no blocks"));
    }
    let mut labels = HashSet::new();
    for b in &f.blocks {
        if !labels.insert(b.label.as_str()) {
            return Err(err(&fctx, format!("duplicate block label {}", b.label)));
        }
    }
    let mut params = HashSet::new();
    for p in &f.params {
        if !params.insert(p.as_str()) {
            return Err(err(&fctx, format!("duplicate parameter %{p}")));
        }
    }
    for b in &f.blocks {
        check_block(m, f, b)?;
    }
    check_def_before_use(f)
}

fn check_block(m: &TirModule, f: &TirFunction, b: &TirBlock) -> Result<(), VerifyError> {
    let bctx = format!("@{}/{}", f.name, b.label);
    match b.instrs.last() {
        None => return Err(err(&bctx, "block is empty")),
        Some(last) if !last.kind.is_terminator() => {
            return Err(err(&bctx, "block does not end with a terminator"))
        }
        _ => {}
    }
    for (ii, i) in b.instrs.iter().enumerate() {
        let ctx = format!("{bctx}#{ii}");
        if i.kind.is_terminator() && ii + 1 != b.instrs.len() {
            return Err(err(&ctx, "terminator before end of block"));
        }
        check_operand_shape(m, f, i, &ctx)?;
    }
    Ok(())
}

/// Verify a whole module.
pub fn verify(m: &TirModule) -> Result<(), VerifyError> {
    let mut names = HashMap::new();
    for f in &m.functions {
        if names.insert(f.name.as_str(), ()).is_some() {
            return Err(err("module", format!("duplicate function @{}", f.name)));
        }
    }
    let mut gnames = HashMap::new();
    for g in &m.globals {
        if gnames.insert(g.name.as_str(), ()).is_some() {
            return Err(err("module", format!("duplicate global @{}", g.name)));
        }
        if g.len == 0 {
            return Err(err("module", format!("global @{} has zero length", g.name)));
        }
    }
    let entry = m
        .function(&m.entry)
        .ok_or_else(|| err("module", format!("missing entry function @{}", m.entry)))?;
    if !entry.params.is_empty() {
        return Err(err("module", format!("entry @{} must take no parameters", m.entry)));
    }
    for f in &m.functions {
        check_function(m, f)?;
    }
    Ok(())
}
