//! Canonical textual form. The printed form defines structural equality, so
//! the formatting here is fixed: two-space indent, single spaces, `, `
//! separated operands, one blank line between top-level items.

use crate::ir::{InstKind, Instr, Operand, TirModule};
use std::fmt::Write;

fn write_operand(out: &mut String, op: &Operand) {
    match op {
        Operand::Reg(r) => {
            out.push('%');
            out.push_str(r);
        }
        Operand::Lit(v) => {
            let _ = write!(out, "{v}");
        }
        Operand::Global(g) => {
            out.push('@');
            out.push_str(g);
        }
    }
}

fn write_instr(out: &mut String, i: &Instr) {
    out.push_str("  ");
    match i.kind {
        InstKind::Store => {
            out.push_str("store ");
            write_operand(out, &i.operands[0]);
            out.push_str(", ");
            write_operand(out, &i.operands[1]);
            out.push_str(", ");
            write_operand(out, &i.operands[2]);
        }
        InstKind::Br => {
            out.push_str("br ");
            write_operand(out, &i.operands[0]);
            let _ = write!(out, ", {}, {}", i.targets[0], i.targets[1]);
        }
        InstKind::Jmp => {
            let _ = write!(out, "jmp {}", i.targets[0]);
        }
        InstKind::Ret | InstKind::Print => {
            out.push_str(i.kind.name());
            out.push(' ');
            write_operand(out, &i.operands[0]);
        }
        _ => {
            let _ = write!(out, "%{} = {} ", i.dest.as_deref().unwrap(), i.kind.name());
            for (n, op) in i.operands.iter().enumerate() {
                if n > 0 {
                    out.push_str(", ");
                }
                write_operand(out, op);
            }
        }
    }
    out.push('\n');
}

/// Render a module in canonical form.
pub fn print_module(m: &TirModule) -> String {
    let mut out = String::new();
    for g in &m.globals {
        let _ = writeln!(out, "global @{}[{}]", g.name, g.len);
    }
    for f in &m.functions {
        if !out.is_empty() {
            out.push('\n');
        }
        out.push_str("func @");
        out.push_str(&f.name);
        out.push('(');
        for (n, p) in f.params.iter().enumerate() {
            if n > 0 {
                out.push_str(", ");
            }
            out.push('%');
            out.push_str(p);
        }
        out.push_str(") {\n");
        for b in &f.blocks {
            out.push_str(&b.label);
            out.push_str(":\n");
            for i in &b.instrs {
                write_instr(&mut out, i);
            }
        }
        out.push_str("}\n");
    }
    out
}
