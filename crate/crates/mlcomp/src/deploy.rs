//! Deployment: drive the optimizer with a trained policy and no estimator.
//! At each step phases are ranked by predicted probability and tried in
//! order until one changes the program; unchanged attempts accumulate into
//! an inactive streak that ends the run.

use crate::features::extract_features;
use crate::policy::{PhasePolicy, PssError, TerminalReason};
use serde::{Deserialize, Serialize};
use tir::passes::{apply_phase, NUM_PHASES};
use tir::TirModule;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeReport {
    /// Names of the phases that changed the program, in application order.
    pub applied: Vec<String>,
    /// Every phase application, including ones that changed nothing.
    pub attempts: usize,
    pub terminal: TerminalReason,
    pub initial_instructions: usize,
    pub final_instructions: usize,
}

/// Phase indices sorted by descending probability; ties go to the lower
/// registry index.
fn ranked(probs: &mlkit::DVector<f64>) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..probs.len()).collect();
    idx.sort_by(|&a, &b| probs[b].partial_cmp(&probs[a]).unwrap().then(a.cmp(&b)));
    idx
}

/// Apply the policy's choices until the changed-phase budget is spent or the
/// inactive streak hits its cap. Deterministic: deployment picks the ranked
/// phases in order instead of sampling.
pub fn optimize_program(
    program: &TirModule,
    policy: &PhasePolicy,
    max_sequence_len: usize,
    max_inactive_len: usize,
) -> Result<(TirModule, Vec<usize>, OptimizeReport), PssError> {
    let initial_instructions = program.instr_count();
    let mut module = program.clone();
    let mut applied = Vec::new();
    let mut attempts = 0usize;
    let mut streak = 0usize;
    let mut ranks = ranked(&policy.forward(&extract_features(&module))?);
    let mut next_rank = 0usize;
    let terminal = loop {
        if applied.len() >= max_sequence_len {
            break TerminalReason::LengthCap;
        }
        if streak >= max_inactive_len {
            break TerminalReason::InactiveCap;
        }
        // An unchanged module keeps its ranking; wrapping just retries the
        // list until the streak cap fires.
        let phase = ranks[next_rank % NUM_PHASES];
        let result = apply_phase(&module, phase)?;
        attempts += 1;
        if result.changed {
            module = result.module;
            applied.push(phase);
            streak = 0;
            ranks = ranked(&policy.forward(&extract_features(&module))?);
            next_rank = 0;
        } else {
            streak += 1;
            next_rank += 1;
        }
    };
    let report = OptimizeReport {
        applied: applied
            .iter()
            .map(|&p| policy.registry[p].clone())
            .collect(),
        attempts,
        terminal,
        initial_instructions,
        final_instructions: module.instr_count(),
    };
    Ok((module, applied, report))
}
