//! Platform cost models and the ground-truth profiler. A platform is a flat
//! key/value text file assigning each instruction kind a cycle count, a
//! dynamic energy (nanojoules) and a code size (bytes), plus a clock rate
//! and a static power draw.

use crate::exec::{interpret, InterpError};
use crate::ir::{InstKind, TirModule, NUM_KINDS};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlatformError {
    #[error("platform read failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("platform file line {0}: {1}")]
    Syntax(usize, String),
    #[error("platform file: missing entry {0}")]
    Missing(String),
    #[error("platform file: {0}")]
    Invalid(String),
}

/// Deterministic cost tables for one target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatformModel {
    pub name: String,
    pub clock_hz: u64,
    pub static_power_mw: f64,
    /// Indexed by canonical kind order.
    pub cycles: [u64; NUM_KINDS],
    pub energy_nj: [f64; NUM_KINDS],
    pub bytes: [u64; NUM_KINDS],
}

impl PlatformModel {
    /// Static code size of a module under this platform's size table.
    pub fn code_size_bytes(&self, m: &TirModule) -> u64 {
        m.kind_counts()
            .iter()
            .zip(self.bytes.iter())
            .map(|(c, b)| c * b)
            .sum()
    }
}

/// The five ground-truth metrics of one run on one platform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicFeatures {
    pub exec_time_s: f64,
    pub energy_j: f64,
    pub executed_instructions: u64,
    pub avg_power_w: f64,
    pub code_size_bytes: u64,
}

/// Parse a platform file. All 22 kinds must be costed in each table.
pub fn load_platform(path: &Path) -> Result<PlatformModel, PlatformError> {
    let text = std::fs::read_to_string(path)?;
    parse_platform(&text)
}

pub fn parse_platform(text: &str) -> Result<PlatformModel, PlatformError> {
    let mut name: Option<String> = None;
    let mut clock_hz: Option<u64> = None;
    let mut static_power_mw: Option<f64> = None;
    let mut cycles: [Option<u64>; NUM_KINDS] = [None; NUM_KINDS];
    let mut energy: [Option<f64>; NUM_KINDS] = [None; NUM_KINDS];
    let mut bytes: [Option<u64>; NUM_KINDS] = [None; NUM_KINDS];

    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let lno = ln + 1;
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| PlatformError::Syntax(lno, "expected 'key = value'".into()))?;
        let (key, value) = (key.trim(), value.trim());
        let kind_of = |k: &str| {
            InstKind::from_name(k)
                .ok_or_else(|| PlatformError::Syntax(lno, format!("unknown instruction kind '{k}'")))
        };
        let as_u64 = |v: &str| {
            v.parse::<u64>()
                .map_err(|_| PlatformError::Syntax(lno, format!("expected integer, got '{v}'")))
        };
        let as_f64 = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| PlatformError::Syntax(lno, format!("expected number, got '{v}'")))
        };
        if let Some(k) = key.strip_prefix("cycles.") {
            cycles[kind_of(k)?.index()] = Some(as_u64(value)?);
        } else if let Some(k) = key.strip_prefix("energy_nj.") {
            energy[kind_of(k)?.index()] = Some(as_f64(value)?);
        } else if let Some(k) = key.strip_prefix("bytes.") {
            bytes[kind_of(k)?.index()] = Some(as_u64(value)?);
        } else {
            match key {
                "name" => name = Some(value.to_string()),
                "clock_hz" => clock_hz = Some(as_u64(value)?),
                "static_power_mw" => static_power_mw = Some(as_f64(value)?),
                other => {
                    return Err(PlatformError::Syntax(lno, format!("unknown key '{other}'")))
                }
            }
        }
    }

    let take = |table: &[Option<u64>; NUM_KINDS], what: &str| -> Result<[u64; NUM_KINDS], PlatformError> {
        let mut out = [0u64; NUM_KINDS];
        for (i, v) in table.iter().enumerate() {
            out[i] = v.ok_or_else(|| {
                PlatformError::Missing(format!("{what}.{}", InstKind::ALL[i].name()))
            })?;
        }
        Ok(out)
    };
    let cycles = take(&cycles, "cycles")?;
    let bytes_t = take(&bytes, "bytes")?;
    let mut energy_t = [0f64; NUM_KINDS];
    for (i, v) in energy.iter().enumerate() {
        energy_t[i] = v.ok_or_else(|| {
            PlatformError::Missing(format!("energy_nj.{}", InstKind::ALL[i].name()))
        })?;
        if energy_t[i] < 0.0 || !energy_t[i].is_finite() {
            return Err(PlatformError::Invalid(format!(
                "energy_nj.{} must be finite and non-negative",
                InstKind::ALL[i].name()
            )));
        }
    }
    if bytes_t.iter().any(|&b| b == 0) {
        return Err(PlatformError::Invalid("bytes must be positive".into()));
    }
    let clock_hz = clock_hz.ok_or_else(|| PlatformError::Missing("clock_hz".into()))?;
    if clock_hz == 0 {
        return Err(PlatformError::Invalid("clock_hz must be positive".into()));
    }
    let static_power_mw =
        static_power_mw.ok_or_else(|| PlatformError::Missing("static_power_mw".into()))?;
    if static_power_mw < 0.0 || !static_power_mw.is_finite() {
        return Err(PlatformError::Invalid(
            "static_power_mw must be finite and non-negative".into(),
        ));
    }
    Ok(PlatformModel {
        name: name.ok_or_else(|| PlatformError::Missing("name".into()))?,
        clock_hz,
        static_power_mw,
        cycles,
        energy_nj: energy_t,
        bytes: bytes_t,
    })
}

/// Run the module and price the outcome with the platform tables:
/// time = cycles / clock, energy = dynamic + static_power * time,
/// avg power = energy / time (0 when time is 0).
pub fn profile(
    m: &TirModule,
    p: &PlatformModel,
    fuel: u64,
) -> Result<(DynamicFeatures, crate::exec::ExecOutcome), InterpError> {
    let outcome = interpret(m, fuel)?;
    Ok((dynamics_of(&outcome.kind_counts, outcome.executed_instructions, m, p), outcome))
}

/// Price already-collected execution counts; shared by profile and tests.
pub fn dynamics_of(
    kind_counts: &[u64; NUM_KINDS],
    executed: u64,
    m: &TirModule,
    p: &PlatformModel,
) -> DynamicFeatures {
    let total_cycles: u64 = kind_counts
        .iter()
        .zip(p.cycles.iter())
        .map(|(c, cy)| c * cy)
        .sum();
    let exec_time_s = total_cycles as f64 / p.clock_hz as f64;
    let dynamic_nj: f64 = kind_counts
        .iter()
        .zip(p.energy_nj.iter())
        .map(|(c, e)| *c as f64 * e)
        .sum();
    let energy_j = dynamic_nj * 1e-9 + p.static_power_mw * 1e-3 * exec_time_s;
    let avg_power_w = if exec_time_s > 0.0 {
        energy_j / exec_time_s
    } else {
        0.0
    };
    DynamicFeatures {
        exec_time_s,
        energy_j,
        executed_instructions: executed,
        avg_power_w,
        code_size_bytes: p.code_size_bytes(m),
    }
}
