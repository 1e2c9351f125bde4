//! Optimization phase catalog. Twelve phases in a frozen registry order;
//! each is module -> module, semantics preserving, and reports whether it
//! structurally changed anything.

mod constfold;
mod constprop;
mod copyprop;
mod cse;
mod dce;
mod deadstore;
mod inline;
mod jumpthread;
mod licm;
mod loopunroll;
mod simplifycfg;
mod strengthred;

use crate::ir::{structurally_equal, TirModule};
use crate::verify::VerifyError;
use thiserror::Error;

pub const NUM_PHASES: usize = 12;

/// Registry order is frozen; index 0 is constfold.
pub const PHASE_NAMES: [&str; NUM_PHASES] = [
    "constfold",
    "constprop",
    "copyprop",
    "dce",
    "cse",
    "simplifycfg",
    "jumpthread",
    "licm",
    "loopunroll",
    "strengthred",
    "inline",
    "deadstore",
];

const PHASE_FNS: [fn(&TirModule) -> TirModule; NUM_PHASES] = [
    constfold::run,
    constprop::run,
    copyprop::run,
    dce::run,
    cse::run,
    simplifycfg::run,
    jumpthread::run,
    licm::run,
    loopunroll::run,
    strengthred::run,
    inline::run,
    deadstore::run,
];

#[derive(Debug, Error)]
pub enum PhaseError {
    #[error("unknown phase '{0}'")]
    UnknownPhase(String),
    #[error("phase '{phase}' produced an invalid module: {source}")]
    BrokenOutput {
        phase: &'static str,
        source: VerifyError,
    },
}

/// Names in registry order.
pub fn list_phases() -> &'static [&'static str] {
    &PHASE_NAMES
}

pub fn phase_index(name: &str) -> Option<usize> {
    PHASE_NAMES.iter().position(|n| *n == name)
}

#[derive(Debug, Clone)]
pub struct PhaseResult {
    pub module: TirModule,
    /// True exactly when the output is not structurally equal to the input.
    pub changed: bool,
}

/// Apply one phase by registry index. The output is re-verified.
pub fn apply_phase(m: &TirModule, phase: usize) -> Result<PhaseResult, PhaseError> {
    assert!(phase < NUM_PHASES, "phase index out of range");
    let out = PHASE_FNS[phase](m);
    crate::verify::verify(&out).map_err(|source| PhaseError::BrokenOutput {
        phase: PHASE_NAMES[phase],
        source,
    })?;
    let changed = !structurally_equal(m, &out);
    Ok(PhaseResult { module: out, changed })
}

pub fn apply_phase_by_name(m: &TirModule, name: &str) -> Result<PhaseResult, PhaseError> {
    let idx = phase_index(name).ok_or_else(|| PhaseError::UnknownPhase(name.to_string()))?;
    apply_phase(m, idx)
}

/// Apply phases left to right; returns the final module and per-step changed flags.
pub fn run_sequence(m: &TirModule, seq: &[usize]) -> Result<(TirModule, Vec<bool>), PhaseError> {
    let mut cur = m.clone();
    let mut flags = Vec::with_capacity(seq.len());
    for &p in seq {
        let r = apply_phase(&cur, p)?;
        cur = r.module;
        flags.push(r.changed);
    }
    Ok((cur, flags))
}

/// A label not yet in `taken`; `base` itself when free, else `base.1`, `base.2`, ...
pub(crate) fn unique_label(taken: &std::collections::HashSet<String>, base: &str) -> String {
    if !taken.contains(base) {
        return base.to_string();
    }
    for n in 1.. {
        let cand = format!("{base}.{n}");
        if !taken.contains(&cand) {
            return cand;
        }
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_module;

    #[test]
    fn registry_is_frozen() {
        let names = list_phases();
        assert_eq!(names.len(), 12);
        assert_eq!(names[0], "constfold");
        assert_eq!(
            names,
            &[
                "constfold",
                "constprop",
                "copyprop",
                "dce",
                "cse",
                "simplifycfg",
                "jumpthread",
                "licm",
                "loopunroll",
                "strengthred",
                "inline",
                "deadstore"
            ]
        );
        for (i, n) in names.iter().enumerate() {
            assert_eq!(phase_index(n), Some(i));
        }
        assert_eq!(phase_index("unknown"), None);
    }

    #[test]
    fn changed_flag_tracks_structural_equality() {
        let m = parse_module("func @main(){ bb0: %a = const 1  %r = const 2  ret %r }").unwrap();
        let r = apply_phase_by_name(&m, "dce").unwrap();
        assert!(r.changed);
        assert!(!crate::ir::structurally_equal(&m, &r.module));
        let r2 = apply_phase_by_name(&r.module, "dce").unwrap();
        assert!(!r2.changed);
        assert!(crate::ir::structurally_equal(&r.module, &r2.module));
    }

    #[test]
    fn sequence_beats_each_single_phase_on_a_constant_chain() {
        let src = "func @main(){ bb0: %a = const 2  %b = add %a, 3  %c = add %b, %a  ret %c }";
        let m = parse_module(src).unwrap();
        let seq: Vec<usize> = ["constprop", "constfold", "dce"]
            .iter()
            .map(|n| phase_index(n).unwrap())
            .collect();
        let (opt, _) = run_sequence(&m, &seq).unwrap();
        for &p in &seq {
            let single = apply_phase(&m, p).unwrap().module;
            assert!(
                opt.instr_count() < single.instr_count(),
                "sequence should beat single phase {}",
                PHASE_NAMES[p]
            );
        }
        assert_eq!(opt.instr_count(), 2);
    }
}
