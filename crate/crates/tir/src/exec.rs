//! Reference interpreter. Uses an explicit frame stack (deep recursion in the
//! interpreted program cannot overflow the host stack) and charges one unit of
//! fuel per executed instruction.

use crate::ir::{InstKind, Instr, Operand, TirModule, NUM_KINDS};
use std::collections::HashMap;
use thiserror::Error;

pub const DEFAULT_FUEL: u64 = 10_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum InterpError {
    #[error("division by zero at {0}")]
    DivisionByZero(String),
    #[error("fuel exhausted at {0}")]
    FuelExhausted(String),
    #[error("global index out of bounds at {0}")]
    OutOfBounds(String),
    /// Unreachable for verified modules; kept as a soundness guard.
    #[error("undefined register %{1} read at {0}")]
    UndefinedRegister(String, String),
}

/// Platform-independent result of running a module.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecOutcome {
    pub exit_value: i64,
    pub print_trace: Vec<i64>,
    /// Executed-instruction counts in canonical kind order.
    pub kind_counts: [u64; NUM_KINDS],
    /// Total executed instructions (sum of kind_counts).
    pub executed_instructions: u64,
}

struct Frame {
    func: usize,
    block: usize,
    instr: usize,
    regs: HashMap<String, i64>,
    /// Destination register in the caller for the return value.
    ret_dest: Option<String>,
}

struct Machine<'m> {
    m: &'m TirModule,
    globals: Vec<Vec<i64>>,
    counts: [u64; NUM_KINDS],
    executed: u64,
    fuel: u64,
    trace: Vec<i64>,
}

impl<'m> Machine<'m> {
    fn at(&self, frame: &Frame) -> String {
        let f = &self.m.functions[frame.func];
        format!("@{}/{}#{}", f.name, f.blocks[frame.block].label, frame.instr)
    }

    fn value(&self, frame: &Frame, op: &Operand, at: &str) -> Result<i64, InterpError> {
        match op {
            Operand::Lit(v) => Ok(*v),
            Operand::Reg(r) => frame
                .regs
                .get(r)
                .copied()
                .ok_or_else(|| InterpError::UndefinedRegister(at.to_string(), r.clone())),
            Operand::Global(_) => unreachable!("globals are not value operands"),
        }
    }

    fn global_slot(&self, op: &Operand) -> usize {
        let name = match op {
            Operand::Global(g) => g,
            _ => unreachable!(),
        };
        self.m.globals.iter().position(|g| g.name == *name).unwrap()
    }
}

/// Run the module's entry function until `ret`, a trap, or fuel exhaustion.
pub fn interpret(m: &TirModule, fuel: u64) -> Result<ExecOutcome, InterpError> {
    let entry = m
        .functions
        .iter()
        .position(|f| f.name == m.entry)
        .expect("verified entry");
    let mut mach = Machine {
        m,
        globals: m.globals.iter().map(|g| vec![0i64; g.len as usize]).collect(),
        counts: [0; NUM_KINDS],
        executed: 0,
        fuel,
        trace: Vec::new(),
    };
    let mut stack = vec![Frame {
        func: entry,
        block: 0,
        instr: 0,
        regs: HashMap::new(),
        ret_dest: None,
    }];
    loop {
        let frame = stack.last_mut().unwrap();
        let func = &m.functions[frame.func];
        let instr: &Instr = &func.blocks[frame.block].instrs[frame.instr];
        let at = mach.at(frame);
        if mach.executed >= mach.fuel {
            return Err(InterpError::FuelExhausted(at));
        }
        mach.executed += 1;
        mach.counts[instr.kind.index()] += 1;
        match instr.kind {
            InstKind::Const | InstKind::Copy => {
                let v = mach.value(frame, &instr.operands[0], &at)?;
                frame.regs.insert(instr.dest.clone().unwrap(), v);
                frame.instr += 1;
            }
            k if k.is_binop() => {
                let a = mach.value(frame, &instr.operands[0], &at)?;
                let b = mach.value(frame, &instr.operands[1], &at)?;
                let v = k
                    .eval_binop(a, b)
                    .ok_or_else(|| InterpError::DivisionByZero(at.clone()))?;
                frame.regs.insert(instr.dest.clone().unwrap(), v);
                frame.instr += 1;
            }
            InstKind::Load => {
                let slot = mach.global_slot(&instr.operands[0]);
                let idx = mach.value(frame, &instr.operands[1], &at)?;
                let arr = &mach.globals[slot];
                if idx < 0 || idx as usize >= arr.len() {
                    return Err(InterpError::OutOfBounds(at));
                }
                let v = arr[idx as usize];
                frame.regs.insert(instr.dest.clone().unwrap(), v);
                frame.instr += 1;
            }
            InstKind::Store => {
                let v = mach.value(frame, &instr.operands[0], &at)?;
                let slot = mach.global_slot(&instr.operands[1]);
                let idx = mach.value(frame, &instr.operands[2], &at)?;
                let arr = &mut mach.globals[slot];
                if idx < 0 || idx as usize >= arr.len() {
                    return Err(InterpError::OutOfBounds(at));
                }
                arr[idx as usize] = v;
                frame.instr += 1;
            }
            InstKind::Print => {
                let v = mach.value(frame, &instr.operands[0], &at)?;
                mach.trace.push(v);
                frame.instr += 1;
            }
            InstKind::Jmp => {
                frame.block = func.block_index(&instr.targets[0]).unwrap();
                frame.instr = 0;
            }
            InstKind::Br => {
                let c = mach.value(frame, &instr.operands[0], &at)?;
                let target = if c != 0 { &instr.targets[0] } else { &instr.targets[1] };
                frame.block = func.block_index(target).unwrap();
                frame.instr = 0;
            }
            InstKind::Call => {
                let callee_name = match &instr.operands[0] {
                    Operand::Global(g) => g,
                    _ => unreachable!(),
                };
                let callee = m
                    .functions
                    .iter()
                    .position(|f| &f.name == callee_name)
                    .unwrap();
                let mut regs = HashMap::new();
                for (p, a) in m.functions[callee].params.iter().zip(&instr.operands[1..]) {
                    regs.insert(p.clone(), mach.value(frame, a, &at)?);
                }
                let dest = instr.dest.clone();
                frame.instr += 1; // resume after the call
                stack.push(Frame {
                    func: callee,
                    block: 0,
                    instr: 0,
                    regs,
                    ret_dest: dest,
                });
            }
            InstKind::Ret => {
                let v = mach.value(frame, &instr.operands[0], &at)?;
                let done = stack.pop().unwrap();
                match stack.last_mut() {
                    None => {
                        return Ok(ExecOutcome {
                            exit_value: v,
                            print_trace: mach.trace,
                            kind_counts: mach.counts,
                            executed_instructions: mach.executed,
                        })
                    }
                    Some(caller) => {
                        if let Some(d) = done.ret_dest {
                            caller.regs.insert(d, v);
                        }
                    }
                }
            }
            _ => unreachable!(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_module;

    fn run(src: &str) -> ExecOutcome {
        interpret(&parse_module(src).unwrap(), DEFAULT_FUEL).unwrap()
    }

    #[test]
    fn sum_one_to_ten() {
        let out = run(
            "func @main(){ pre: %s = const 0  %i = const 1  jmp h
             h: %c = le %i, 10  br %c, b, e
             b: %s = add %s, %i  %i = add %i, 1  jmp h
             e: ret %s }",
        );
        assert_eq!(out.exit_value, 55);
        assert_eq!(out.kind_counts[InstKind::Add.index()], 20);
    }

    #[test]
    fn print_trace_is_ordered() {
        let out = run("func @main(){ bb0: print 3  print 1  print 2  ret 0 }");
        assert_eq!(out.print_trace, vec![3, 1, 2]);
        assert_eq!(out.executed_instructions, 4);
        assert_eq!(out.kind_counts.iter().sum::<u64>(), out.executed_instructions);
    }

    #[test]
    fn calls_bind_params_and_return() {
        let out = run(
            "func @main(){ bb0: %r = call @mad, 3, 4, 5  ret %r }
             func @mad(%a, %b, %c){ e: %t = mul %a, %b  %t = add %t, %c  ret %t }",
        );
        assert_eq!(out.exit_value, 17);
        assert_eq!(out.kind_counts[InstKind::Call.index()], 1);
        assert_eq!(out.kind_counts[InstKind::Ret.index()], 2);
    }

    #[test]
    fn division_by_zero_traps_with_location() {
        let m = parse_module("func @main(){ bb0: %z = const 0  %r = div 7, %z  ret %r }").unwrap();
        assert_eq!(
            interpret(&m, DEFAULT_FUEL),
            Err(InterpError::DivisionByZero("@main/bb0#1".into()))
        );
    }

    #[test]
    fn infinite_loop_exhausts_fuel() {
        let m = parse_module("func @main(){ bb0: jmp bb0 }").unwrap();
        match interpret(&m, 1000) {
            Err(InterpError::FuelExhausted(at)) => assert_eq!(at, "@main/bb0#0"),
            other => panic!("expected fuel exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn fuel_counts_executed_instructions_exactly() {
        let src = "func @main(){ bb0: %a = const 1  %b = add %a, 1  ret %b }";
        let m = parse_module(src).unwrap();
        assert!(interpret(&m, 3).is_ok());
        assert_eq!(
            interpret(&m, 2),
            Err(InterpError::FuelExhausted("@main/bb0#2".into()))
        );
    }

    #[test]
    fn globals_zero_initialized_and_bounds_checked() {
        let out = run(
            "global @g[4]
             func @main(){ bb0: %a = load @g, 3  store 9, @g, 2  %b = load @g, 2  %r = add %a, %b  ret %r }",
        );
        assert_eq!(out.exit_value, 9);
        let m = parse_module("global @g[4] func @main(){ bb0: %v = load @g, 4  ret %v }").unwrap();
        assert_eq!(
            interpret(&m, DEFAULT_FUEL),
            Err(InterpError::OutOfBounds("@main/bb0#0".into()))
        );
        let m = parse_module("global @g[4] func @main(){ bb0: %v = load @g, -1  ret %v }").unwrap();
        assert!(matches!(interpret(&m, DEFAULT_FUEL), Err(InterpError::OutOfBounds(_))));
    }

    #[test]
    fn deep_recursion_burns_fuel_not_stack() {
        // f(n) = f(n-1) forever; fuel must stop it cleanly.
        let m = parse_module(
            "func @main(){ bb0: %r = call @f, 0  ret %r }
             func @f(%n){ e: %n = add %n, 1  %r = call @f, %n  ret %r }",
        )
        .unwrap();
        assert!(matches!(
            interpret(&m, 300_000),
            Err(InterpError::FuelExhausted(_))
        ));
    }
}
