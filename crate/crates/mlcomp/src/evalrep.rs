//! Evaluation: profile five variants of every program (unoptimized, a fixed
//! canonical pipeline, the best and median of a random-sequence pool, and
//! the policy's output) with the ground-truth profiler, then report metrics
//! relative to unoptimized code as CSV and JSON.
//!
//! Nothing here touches an estimator bundle; every number comes from actual
//! interpretation under the platform cost tables.

use crate::dataset::{random_phase_sequence, splitmix64};
use crate::deploy::optimize_program;
use crate::policy::{PhasePolicy, PssError};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;
use tir::exec::DEFAULT_FUEL;
use tir::passes::{phase_index, run_sequence};
use tir::platform::{profile, DynamicFeatures, PlatformModel};
use tir::TirModule;

pub const EVAL_VARIANTS: [&str; 5] = [
    "unoptimized",
    "fixed-O",
    "random-best",
    "random-median",
    "policy",
];

/// Hand-ordered reference pipeline standing in for a production -O level:
/// expose code by inlining, canonicalize, propagate and fold constants, then
/// run the loop work, and sweep the leftovers last.
pub fn canonical_fixed_sequence() -> Vec<usize> {
    [
        "inline",
        "simplifycfg",
        "constprop",
        "constfold",
        "copyprop",
        "cse",
        "strengthred",
        "licm",
        "loopunroll",
        "jumpthread",
        "simplifycfg",
        "deadstore",
        "dce",
    ]
    .iter()
    .map(|n| phase_index(n).expect("registry name"))
    .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    /// Size of the random-sequence pool behind the two random baselines.
    pub k_random: usize,
    /// Length cap on each random pool sequence.
    pub random_max_len: usize,
    pub seed: u64,
    pub fuel: u64,
    /// Deployment caps for the policy variant.
    pub max_sequence_len: usize,
    pub max_inactive_len: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            k_random: 30,
            random_max_len: 32,
            seed: 0,
            fuel: DEFAULT_FUEL,
            max_sequence_len: 128,
            max_inactive_len: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub program_id: String,
    pub variant: String,
    /// True when profiling this variant trapped or ran out of fuel.
    pub trapped: bool,
    pub dynamics: Option<DynamicFeatures>,
    pub rel_time: Option<f64>,
    pub rel_energy: Option<f64>,
    pub rel_size: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantSummary {
    pub variant: String,
    /// Programs with usable ground truth for this variant.
    pub rows_profiled: usize,
    pub geomean_rel_time: Option<f64>,
    pub geomean_rel_energy: Option<f64>,
    pub geomean_rel_size: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub programs: usize,
    pub variants: Vec<VariantSummary>,
    /// Programs whose policy variant degrades none of the reported relatives.
    pub policy_no_degradation: usize,
}

fn geomean(vals: &[f64]) -> Option<f64> {
    if vals.is_empty() {
        return None;
    }
    Some((vals.iter().map(|v| v.ln()).sum::<f64>() / vals.len() as f64).exp())
}

fn median(mut vals: Vec<f64>) -> f64 {
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = vals.len();
    if n % 2 == 1 {
        vals[n / 2]
    } else {
        (vals[n / 2 - 1] + vals[n / 2]) / 2.0
    }
}

/// Ground truth for one module, or None when execution traps.
fn profiled(m: &TirModule, platform: &PlatformModel, fuel: u64) -> Option<DynamicFeatures> {
    profile(m, platform, fuel).ok().map(|(d, _)| d)
}

fn aggregate(pool: &[DynamicFeatures], pick: impl Fn(Vec<f64>) -> f64) -> DynamicFeatures {
    let take = |f: &dyn Fn(&DynamicFeatures) -> f64| pick(pool.iter().map(|d| f(d)).collect());
    DynamicFeatures {
        exec_time_s: take(&|d| d.exec_time_s),
        energy_j: take(&|d| d.energy_j),
        executed_instructions: take(&|d| d.executed_instructions as f64).round() as u64,
        avg_power_w: take(&|d| d.avg_power_w),
        code_size_bytes: take(&|d| d.code_size_bytes as f64).round() as u64,
    }
}

fn relative(value: f64, base: f64) -> Option<f64> {
    if base > 0.0 {
        Some(value / base)
    } else {
        None
    }
}

fn make_row(
    program_id: &str,
    variant: &str,
    dynamics: Option<DynamicFeatures>,
    base: Option<&DynamicFeatures>,
) -> EvalRow {
    let rel = |f: fn(&DynamicFeatures) -> f64| match (&dynamics, base) {
        (Some(d), Some(b)) => relative(f(d), f(b)),
        _ => None,
    };
    EvalRow {
        program_id: program_id.to_string(),
        variant: variant.to_string(),
        trapped: dynamics.is_none(),
        rel_time: rel(|d| d.exec_time_s),
        rel_energy: rel(|d| d.energy_j),
        rel_size: rel(|d| d.code_size_bytes as f64),
        dynamics,
    }
}

/// Profile all five variants of every program. A variant that traps is kept
/// as a marked row; the remaining variants still evaluate.
pub fn evaluate_policy(
    corpus: &[(String, TirModule)],
    policy: &PhasePolicy,
    platform: &PlatformModel,
    cfg: &EvalConfig,
) -> Result<(Vec<EvalRow>, EvalSummary), PssError> {
    let mut rows = Vec::with_capacity(corpus.len() * EVAL_VARIANTS.len());
    for (pi, (id, module)) in corpus.iter().enumerate() {
        let unopt = profiled(module, platform, cfg.fuel);
        let base = unopt.as_ref();
        let mut row = make_row(id, "unoptimized", unopt.clone(), base);
        if !row.trapped {
            // x/x carries rounding for denormals; the base is 1 by definition.
            row.rel_time = Some(1.0);
            row.rel_energy = Some(1.0);
            row.rel_size = Some(1.0);
        }
        rows.push(row);

        let (fixed, _) = run_sequence(module, &canonical_fixed_sequence())?;
        rows.push(make_row(id, "fixed-O", profiled(&fixed, platform, cfg.fuel), base));

        let mut pool = Vec::with_capacity(cfg.k_random);
        for k in 0..cfg.k_random {
            let pair = (pi * cfg.k_random + k) as u64;
            let seq = random_phase_sequence(splitmix64(cfg.seed ^ pair), cfg.random_max_len);
            let (m, _) = run_sequence(module, &seq)?;
            if let Some(d) = profiled(&m, platform, cfg.fuel) {
                pool.push(d);
            }
        }
        let (best, med) = if pool.is_empty() {
            (None, None)
        } else {
            (
                Some(aggregate(&pool, |v| {
                    v.into_iter().fold(f64::INFINITY, f64::min)
                })),
                Some(aggregate(&pool, median)),
            )
        };
        rows.push(make_row(id, "random-best", best, base));
        rows.push(make_row(id, "random-median", med, base));

        let (opt, _, _) =
            optimize_program(module, policy, cfg.max_sequence_len, cfg.max_inactive_len)?;
        rows.push(make_row(id, "policy", profiled(&opt, platform, cfg.fuel), base));
    }

    let mut variants = Vec::with_capacity(EVAL_VARIANTS.len());
    for variant in EVAL_VARIANTS {
        let picked: Vec<&EvalRow> = rows.iter().filter(|r| r.variant == variant).collect();
        let collect = |f: fn(&EvalRow) -> Option<f64>| -> Vec<f64> {
            picked.iter().filter_map(|r| f(r)).collect()
        };
        variants.push(VariantSummary {
            variant: variant.to_string(),
            rows_profiled: picked.iter().filter(|r| !r.trapped).count(),
            geomean_rel_time: geomean(&collect(|r| r.rel_time)),
            geomean_rel_energy: geomean(&collect(|r| r.rel_energy)),
            geomean_rel_size: geomean(&collect(|r| r.rel_size)),
        });
    }
    let policy_no_degradation = rows
        .iter()
        .filter(|r| r.variant == "policy")
        .filter(|r| {
            [r.rel_time, r.rel_energy, r.rel_size]
                .iter()
                .all(|rel| rel.is_some_and(|v| v <= 1.0))
        })
        .count();
    let summary = EvalSummary {
        programs: corpus.len(),
        variants,
        policy_no_degradation,
    };
    Ok((rows, summary))
}

fn csv_f64(v: Option<f64>) -> String {
    match v {
        Some(x) => x.to_string(),
        None => f64::NAN.to_string(),
    }
}

fn csv_u64(v: Option<u64>) -> String {
    match v {
        Some(x) => x.to_string(),
        None => f64::NAN.to_string(),
    }
}

/// Write the per-row table as CSV and the rows-plus-summary mirror as JSON.
pub fn emit_report(
    rows: &[EvalRow],
    summary: &EvalSummary,
    csv_path: &Path,
    json_path: &Path,
) -> std::io::Result<()> {
    let mut csv = String::from(
        "program,variant,exec_time_s,energy_j,executed_instructions,avg_power_w,code_size_bytes,rel_time,rel_energy,rel_size\n",
    );
    for r in rows {
        let d = r.dynamics.as_ref();
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.program_id,
            r.variant,
            csv_f64(d.map(|d| d.exec_time_s)),
            csv_f64(d.map(|d| d.energy_j)),
            csv_u64(d.map(|d| d.executed_instructions)),
            csv_f64(d.map(|d| d.avg_power_w)),
            csv_u64(d.map(|d| d.code_size_bytes)),
            csv_f64(r.rel_time),
            csv_f64(r.rel_energy),
            csv_f64(r.rel_size),
        ));
    }
    std::fs::write(csv_path, csv)?;

    #[derive(Serialize)]
    struct Report<'a> {
        rows: &'a [EvalRow],
        summary: &'a EvalSummary,
    }
    let mut f = std::fs::File::create(json_path)?;
    let json = serde_json::to_string_pretty(&Report { rows, summary })
        .map_err(std::io::Error::other)?;
    f.write_all(json.as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}
