//! Core IR data model: modules, functions, blocks, instructions.
//!
//! Registers are function-local, hold signed 64-bit integers and may be
//! reassigned freely (the IR is not SSA). Globals are fixed-length
//! zero-initialized i64 arrays and are the only memory.

use serde::{Deserialize, Serialize};

/// Number of instruction kinds; cost tables and count vectors have this length.
pub const NUM_KINDS: usize = 22;

/// Instruction kind. The declaration order here is the canonical kind order
/// used by count vectors, cost tables and the feature layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstKind {
    Const,
    Copy,
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Lt,
    Le,
    Eq,
    And,
    Or,
    Xor,
    Shl,
    Shr,
    Load,
    Store,
    Call,
    Ret,
    Br,
    Jmp,
    Print,
}

impl InstKind {
    pub const ALL: [InstKind; NUM_KINDS] = [
        InstKind::Const,
        InstKind::Copy,
        InstKind::Add,
        InstKind::Sub,
        InstKind::Mul,
        InstKind::Div,
        InstKind::Rem,
        InstKind::Lt,
        InstKind::Le,
        InstKind::Eq,
        InstKind::And,
        InstKind::Or,
        InstKind::Xor,
        InstKind::Shl,
        InstKind::Shr,
        InstKind::Load,
        InstKind::Store,
        InstKind::Call,
        InstKind::Ret,
        InstKind::Br,
        InstKind::Jmp,
        InstKind::Print,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InstKind::Const => "const",
            InstKind::Copy => "copy",
            InstKind::Add => "add",
            InstKind::Sub => "sub",
            InstKind::Mul => "mul",
            InstKind::Div => "div",
            InstKind::Rem => "rem",
            InstKind::Lt => "lt",
            InstKind::Le => "le",
            InstKind::Eq => "eq",
            InstKind::And => "and",
            InstKind::Or => "or",
            InstKind::Xor => "xor",
            InstKind::Shl => "shl",
            InstKind::Shr => "shr",
            InstKind::Load => "load",
            InstKind::Store => "store",
            InstKind::Call => "call",
            InstKind::Ret => "ret",
            InstKind::Br => "br",
            InstKind::Jmp => "jmp",
            InstKind::Print => "print",
        }
    }

    pub fn from_name(s: &str) -> Option<InstKind> {
        InstKind::ALL.iter().copied().find(|k| k.name() == s)
    }

    /// Position in the canonical kind order.
    pub fn index(self) -> usize {
        InstKind::ALL.iter().position(|k| *k == self).unwrap()
    }

    pub fn has_dest(self) -> bool {
        !matches!(
            self,
            InstKind::Store | InstKind::Ret | InstKind::Br | InstKind::Jmp | InstKind::Print
        )
    }

    pub fn is_terminator(self) -> bool {
        matches!(self, InstKind::Ret | InstKind::Br | InstKind::Jmp)
    }

    /// Two-operand computational kinds.
    pub fn is_binop(self) -> bool {
        matches!(
            self,
            InstKind::Add
                | InstKind::Sub
                | InstKind::Mul
                | InstKind::Div
                | InstKind::Rem
                | InstKind::Lt
                | InstKind::Le
                | InstKind::Eq
                | InstKind::And
                | InstKind::Or
                | InstKind::Xor
                | InstKind::Shl
                | InstKind::Shr
        )
    }

    /// Side-effect free and trap free: safe to delete when dead and to hoist.
    /// Excludes div/rem (trap on zero divisor) and load (trap on bad index).
    pub fn is_trap_free_pure(self) -> bool {
        matches!(
            self,
            InstKind::Const
                | InstKind::Copy
                | InstKind::Add
                | InstKind::Sub
                | InstKind::Mul
                | InstKind::Lt
                | InstKind::Le
                | InstKind::Eq
                | InstKind::And
                | InstKind::Or
                | InstKind::Xor
                | InstKind::Shl
                | InstKind::Shr
        )
    }

    /// Evaluate a binop with wrapping i64 semantics. None means a zero-divisor trap.
    /// Shift amounts are masked to 0..=63; shr is arithmetic.
    pub fn eval_binop(self, a: i64, b: i64) -> Option<i64> {
        Some(match self {
            InstKind::Add => a.wrapping_add(b),
            InstKind::Sub => a.wrapping_sub(b),
            InstKind::Mul => a.wrapping_mul(b),
            InstKind::Div => {
                if b == 0 {
                    return None;
                }
                a.wrapping_div(b)
            }
            InstKind::Rem => {
                if b == 0 {
                    return None;
                }
                a.wrapping_rem(b)
            }
            InstKind::Lt => (a < b) as i64,
            InstKind::Le => (a <= b) as i64,
            InstKind::Eq => (a == b) as i64,
            InstKind::And => a & b,
            InstKind::Or => a | b,
            InstKind::Xor => a ^ b,
            InstKind::Shl => a.wrapping_shl((b & 63) as u32),
            InstKind::Shr => a.wrapping_shr((b & 63) as u32),
            _ => panic!("eval_binop on non-binop {:?}", self),
        })
    }
}

/// Instruction operand: a register, a decimal literal, or a global/function name.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Operand {
    Reg(String),
    Lit(i64),
    Global(String),
}

impl Operand {
    pub fn as_reg(&self) -> Option<&str> {
        match self {
            Operand::Reg(r) => Some(r),
            _ => None,
        }
    }

    pub fn as_lit(&self) -> Option<i64> {
        match self {
            Operand::Lit(v) => Some(*v),
            _ => None,
        }
    }
}

/// One instruction. `targets` holds branch labels (2 for br, 1 for jmp).
/// For call, operands[0] names the callee and the rest are arguments.
#[derive(Debug, Clone, PartialEq)]
pub struct Instr {
    pub kind: InstKind,
    pub dest: Option<String>,
    pub operands: Vec<Operand>,
    pub targets: Vec<String>,
}

impl Instr {
    pub fn new(kind: InstKind, dest: Option<String>, operands: Vec<Operand>) -> Instr {
        Instr {
            kind,
            dest,
            operands,
            targets: Vec::new(),
        }
    }

    /// Registers read by this instruction.
    pub fn used_regs(&self) -> impl Iterator<Item = &str> {
        self.operands.iter().filter_map(|o| o.as_reg())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TirBlock {
    pub label: String,
    pub instrs: Vec<Instr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TirFunction {
    pub name: String,
    pub params: Vec<String>,
    pub blocks: Vec<TirBlock>,
}

impl TirFunction {
    pub fn block_index(&self, label: &str) -> Option<usize> {
        self.blocks.iter().position(|b| b.label == label)
    }

    pub fn instr_count(&self) -> usize {
        self.blocks.iter().map(|b| b.instrs.len()).sum()
    }
}

/// A fixed-length zero-initialized i64 array.
#[derive(Debug, Clone, PartialEq)]
pub struct Global {
    pub name: String,
    pub len: u64,
}

/// A whole program: globals, functions and the entry function name.
/// The entry is always `main` (the textual format has no entry declaration).
#[derive(Debug, Clone, PartialEq)]
pub struct TirModule {
    pub globals: Vec<Global>,
    pub functions: Vec<TirFunction>,
    pub entry: String,
}

impl TirModule {
    pub fn function(&self, name: &str) -> Option<&TirFunction> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn global(&self, name: &str) -> Option<&Global> {
        self.globals.iter().find(|g| g.name == name)
    }

    pub fn instr_count(&self) -> usize {
        self.functions.iter().map(|f| f.instr_count()).sum()
    }

    /// Static per-kind instruction counts in canonical kind order.
    pub fn kind_counts(&self) -> [u64; NUM_KINDS] {
        let mut counts = [0u64; NUM_KINDS];
        for f in &self.functions {
            for b in &f.blocks {
                for i in &b.instrs {
                    counts[i.kind.index()] += 1;
                }
            }
        }
        counts
    }
}

/// Structural equality is defined as equality of canonical printed form.
pub fn structurally_equal(a: &TirModule, b: &TirModule) -> bool {
    crate::printer::print_module(a) == crate::printer::print_module(b)
}
