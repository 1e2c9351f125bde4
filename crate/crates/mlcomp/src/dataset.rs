//! Estimator training data: random phase sequences applied to corpus
//! programs, profiled on one platform, persisted as line-delimited JSON.
//!
//! The file layout is a header record on the first line (version, platform,
//! seed, accounting) followed by one sample record per line. Samples whose
//! profiling traps are dropped and counted in the header.

use crate::features::{extract_features, FeatureVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use tir::passes::{run_sequence, PhaseError, NUM_PHASES, PHASE_NAMES};
use tir::platform::{profile, DynamicFeatures, PlatformModel};
use tir::{TirModule, NUM_KINDS};

pub const DATASET_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub program_id: String,
    pub platform_name: String,
    pub phase_sequence: Vec<String>,
    pub static_features: FeatureVector,
    pub platform_instruction_counts: Vec<u64>,
    pub dynamics: DynamicFeatures,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    manifest_version: u32,
    platform: String,
    seed: u64,
    requested: u64,
    dropped_trapped: u64,
    corpus: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub manifest_version: u32,
    pub platform_name: String,
    pub seed: u64,
    /// (program, sequence) pairs attempted, including dropped ones.
    pub requested: u64,
    pub dropped_trapped: u64,
    pub corpus: Vec<String>,
    pub samples: Vec<Sample>,
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("record {line}: {source}")]
    Record {
        line: usize,
        source: serde_json::Error,
    },
    #[error("dataset version {found}, this build reads {expect}")]
    VersionMismatch { found: u32, expect: u32 },
    #[error("dataset file is empty")]
    Empty,
    #[error("phase failure on '{program}': {source}")]
    Phase {
        program: String,
        source: PhaseError,
    },
    #[error("parse failure in '{program}': {source}")]
    Parse {
        program: String,
        source: tir::parse::ModuleError,
    },
}

/// Load every `.tir` file in `dir`, sorted by file name; program ids are the
/// file stems.
pub fn load_corpus(dir: &Path) -> Result<Vec<(String, TirModule)>, DatasetError> {
    let mut paths: Vec<std::path::PathBuf> = std::fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "tir"));
    paths.sort();
    let mut corpus = Vec::with_capacity(paths.len());
    for p in paths {
        let id = p
            .file_stem()
            .expect("tir files have stems")
            .to_string_lossy()
            .into_owned();
        let text = std::fs::read_to_string(&p)?;
        let module = tir::parse_module(&text).map_err(|source| DatasetError::Parse {
            program: id.clone(),
            source,
        })?;
        corpus.push((id, module));
    }
    Ok(corpus)
}

/// Mix a base seed with a pair index into an independent per-pair seed.
pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// A sequence of uniform-random phase indices with length uniform in
/// [0, max_len]. Deterministic per seed.
pub fn random_phase_sequence(rng_seed: u64, max_len: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let len = rng.random_range(0..=max_len);
    (0..len).map(|_| rng.random_range(0..NUM_PHASES)).collect()
}

/// Build one sample: run the sequence, extract features and counts from the
/// optimized module, profile it. None when execution traps.
fn build_sample(
    program_id: &str,
    module: &TirModule,
    seq: &[usize],
    platform: &PlatformModel,
    fuel: u64,
) -> Result<Option<Sample>, DatasetError> {
    let (optimized, _) = run_sequence(module, seq).map_err(|source| DatasetError::Phase {
        program: program_id.to_string(),
        source,
    })?;
    let Ok((dynamics, _)) = profile(&optimized, platform, fuel) else {
        return Ok(None);
    };
    Ok(Some(Sample {
        program_id: program_id.to_string(),
        platform_name: platform.name.clone(),
        phase_sequence: seq.iter().map(|&p| PHASE_NAMES[p].to_string()).collect(),
        static_features: extract_features(&optimized),
        platform_instruction_counts: optimized.kind_counts().to_vec(),
        dynamics,
    }))
}

pub fn extract_dataset(
    corpus: &[(String, TirModule)],
    platform: &PlatformModel,
    n_sequences_per_program: u64,
    max_len: usize,
    seed: u64,
    fuel: u64,
) -> Result<Dataset, DatasetError> {
    let mut samples = Vec::new();
    let mut dropped = 0u64;
    for (pi, (id, module)) in corpus.iter().enumerate() {
        for si in 0..n_sequences_per_program {
            let pair = (pi as u64) * n_sequences_per_program + si;
            let seq = random_phase_sequence(splitmix64(seed ^ pair), max_len);
            match build_sample(id, module, &seq, platform, fuel)? {
                Some(s) => samples.push(s),
                None => dropped += 1,
            }
        }
    }
    Ok(Dataset {
        manifest_version: DATASET_VERSION,
        platform_name: platform.name.clone(),
        seed,
        requested: corpus.len() as u64 * n_sequences_per_program,
        dropped_trapped: dropped,
        corpus: corpus.iter().map(|(id, _)| id.clone()).collect(),
        samples,
    })
}

pub fn write_dataset(d: &Dataset, path: &Path) -> Result<(), DatasetError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    let header = Header {
        manifest_version: d.manifest_version,
        platform: d.platform_name.clone(),
        seed: d.seed,
        requested: d.requested,
        dropped_trapped: d.dropped_trapped,
        corpus: d.corpus.clone(),
    };
    writeln!(out, "{}", serde_json::to_string(&header).expect("header json"))?;
    for s in &d.samples {
        writeln!(out, "{}", serde_json::to_string(s).expect("sample json"))?;
    }
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<Dataset, DatasetError> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut lines = reader.lines();
    let first = lines.next().ok_or(DatasetError::Empty)??;
    let header: Header =
        serde_json::from_str(&first).map_err(|source| DatasetError::Record { line: 1, source })?;
    if header.manifest_version != DATASET_VERSION {
        return Err(DatasetError::VersionMismatch {
            found: header.manifest_version,
            expect: DATASET_VERSION,
        });
    }
    let mut samples = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let s: Sample = serde_json::from_str(&line)
            .map_err(|source| DatasetError::Record { line: i + 2, source })?;
        samples.push(s);
    }
    Ok(Dataset {
        manifest_version: header.manifest_version,
        platform_name: header.platform,
        seed: header.seed,
        requested: header.requested,
        dropped_trapped: header.dropped_trapped,
        corpus: header.corpus,
        samples,
    })
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

const _: () = assert!(NUM_KINDS == 22);
