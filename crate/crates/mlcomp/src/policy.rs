//! Phase selection policy: static features are centered and projected onto
//! their whitened principal components, then a small tanh network maps the
//! projected state to a probability distribution over the phase registry.
//!
//! The network and the state projection are frozen together in one
//! self-describing text file; the file also snapshots the registry order so
//! a build with a different phase catalog refuses to load it.

use crate::doc::{Doc, DocError, DocWriter};
use crate::features::{FeatureVector, FEATURE_MANIFEST_VERSION};
use crate::pe::PeError;
use mlkit::preprocess::{Pca, PcaDim};
use mlkit::{DMatrix, DVector, MlkitError};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;
use tir::passes::{PhaseError, NUM_PHASES, PHASE_NAMES};

pub const POLICY_VERSION: u32 = 1;
const POLICY_MAGIC: &str = "mlcomp-policy";

/// Floor for the per-component variance used in whitening; keeps
/// near-constant directions from amplifying rounding noise without bound.
const WHITEN_FLOOR: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum PssError {
    #[error("bad training config: {0}")]
    BadConfig(String),
    #[error("feature manifest {found} does not match the policy's {expect}")]
    ManifestMismatch { found: u32, expect: u32 },
    #[error("state has {got} features, the policy expects {expect}")]
    StateDim { expect: usize, got: usize },
    #[error("episode-start estimate for {metric} is {value}, must be positive")]
    NonPositiveBaseline { metric: &'static str, value: f64 },
    #[error("estimator: {0}")]
    Pe(#[from] PeError),
    #[error("phase application: {0}")]
    Phase(#[from] PhaseError),
    #[error("state projection fit: {0}")]
    Mlkit(#[from] MlkitError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("policy file: {0}")]
    Doc(#[from] DocError),
    #[error("policy file version {found}, this build reads {expect}")]
    VersionMismatch { found: u32, expect: u32 },
    #[error("policy file lists {found} phases, this build has {expect}")]
    RegistrySize { found: usize, expect: usize },
    #[error("policy phase {index} is '{found}', this build has '{expect}'")]
    RegistryMismatch {
        index: usize,
        found: String,
        expect: String,
    },
    #[error("policy file is inconsistent: {0}")]
    Corrupt(String),
}

/// How an episode or a deployment run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminalReason {
    /// The changed-phase budget was spent.
    LengthCap,
    /// Too many consecutive applications left the program unchanged.
    InactiveCap,
}

/// Numerically safe softmax: shifts by the max logit before exponentiating.
pub fn softmax(logits: &DVector<f64>) -> DVector<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps = logits.map(|l| (l - m).exp());
    let sum: f64 = exps.iter().sum();
    exps / sum
}

/// Affine state map fit once on episode-start features: principal components
/// scaled to unit variance, folded with centering into `z = proj * (x - mean)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePrep {
    pub mean: DVector<f64>,
    /// d x input_dim.
    pub proj: DMatrix<f64>,
}

impl StatePrep {
    /// Rows of `x` are the start-state feature vectors. Fewer than two rows,
    /// or rows with no varying column, fall back to plain centering.
    pub fn fit(x: &DMatrix<f64>) -> Result<StatePrep, MlkitError> {
        let p = x.ncols();
        let n = x.nrows();
        let mean = DVector::from_fn(p, |c, _| x.column(c).iter().sum::<f64>() / n as f64);
        if n < 2 {
            return Ok(StatePrep {
                mean,
                proj: DMatrix::identity(p, p),
            });
        }
        let pca = Pca::fit(x, PcaDim::Mle)?;
        let d = pca.out_dim();
        if d == 0 {
            return Ok(StatePrep {
                mean,
                proj: DMatrix::identity(p, p),
            });
        }
        let mut proj = DMatrix::zeros(d, p);
        for r in 0..d {
            let s = 1.0 / pca.eigenvalues[r].max(WHITEN_FLOOR).sqrt();
            for (j, &c) in pca.kept.iter().enumerate() {
                proj[(r, c)] = pca.components[(r, j)] * s;
            }
        }
        Ok(StatePrep { mean, proj })
    }

    pub fn input_dim(&self) -> usize {
        self.proj.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.proj.nrows()
    }

    pub fn apply(&self, values: &[f64]) -> DVector<f64> {
        let x = DVector::from_column_slice(values);
        &self.proj * (x - &self.mean)
    }
}

/// Dense tanh network; the last layer is linear and produces logits.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    /// (weights out x in, bias) per layer.
    pub layers: Vec<(DMatrix<f64>, DVector<f64>)>,
}

/// Parameter-shaped gradient accumulator.
#[derive(Debug, Clone)]
pub struct MlpGrads {
    pub layers: Vec<(DMatrix<f64>, DVector<f64>)>,
}

impl Mlp {
    /// `dims` lists layer widths input-first, output-last. Weights are
    /// uniform in +-1/sqrt(fan_in); biases start at zero.
    pub fn init(dims: &[usize], rng: &mut impl Rng) -> Mlp {
        assert!(dims.len() >= 2, "need at least one layer");
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for pair in dims.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            let w = DMatrix::from_fn(fan_out, fan_in, |_, _| rng.random_range(-bound..=bound));
            layers.push((w, DVector::zeros(fan_out)));
        }
        Mlp { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].0.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().0.nrows()
    }

    /// All intermediate activations; entry 0 is the input, the last entry
    /// holds the logits.
    fn trace(&self, x: &DVector<f64>) -> Vec<DVector<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.clone());
        for (i, (w, b)) in self.layers.iter().enumerate() {
            let mut a = w * acts.last().unwrap() + b;
            if i + 1 < self.layers.len() {
                a = a.map(f64::tanh);
            }
            acts.push(a);
        }
        acts
    }

    pub fn logits(&self, x: &DVector<f64>) -> DVector<f64> {
        self.trace(x).pop().unwrap()
    }

    pub fn zero_grads(&self) -> MlpGrads {
        MlpGrads {
            layers: self
                .layers
                .iter()
                .map(|(w, b)| (DMatrix::zeros(w.nrows(), w.ncols()), DVector::zeros(b.len())))
                .collect(),
        }
    }

    /// Accumulate `coeff * d/dtheta log softmax(f(x))[action]` into `g`.
    pub fn accumulate_log_prob_grad(
        &self,
        x: &DVector<f64>,
        action: usize,
        coeff: f64,
        g: &mut MlpGrads,
    ) {
        let acts = self.trace(x);
        let probs = softmax(acts.last().unwrap());
        let mut delta = &probs * (-coeff);
        delta[action] += coeff;
        for i in (0..self.layers.len()).rev() {
            g.layers[i].0 += &delta * acts[i].transpose();
            g.layers[i].1 += &delta;
            if i > 0 {
                let mut back = self.layers[i].0.transpose() * &delta;
                for (k, v) in back.iter_mut().enumerate() {
                    *v *= 1.0 - acts[i][k] * acts[i][k];
                }
                delta = back;
            }
        }
    }

    /// Gradient-ascent step: `theta += lr * g`.
    pub fn ascend(&mut self, g: &MlpGrads, lr: f64) {
        for ((w, b), (gw, gb)) in self.layers.iter_mut().zip(&g.layers) {
            *w += gw * lr;
            *b += gb * lr;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhasePolicy {
    pub feature_manifest_version: u32,
    /// Snapshot of the phase registry the network's outputs index into.
    pub registry: Vec<String>,
    pub prep: StatePrep,
    pub mlp: Mlp,
}

impl PhasePolicy {
    /// Fresh random policy over the built-in registry. `n_layers` counts
    /// weight layers; hidden widths are all `hidden_size`.
    pub fn init(prep: StatePrep, n_layers: usize, hidden_size: usize, rng: &mut impl Rng) -> PhasePolicy {
        assert!(n_layers >= 1 && hidden_size >= 1);
        let mut dims = Vec::with_capacity(n_layers + 1);
        dims.push(prep.out_dim());
        dims.extend(std::iter::repeat_n(hidden_size, n_layers - 1));
        dims.push(NUM_PHASES);
        PhasePolicy {
            feature_manifest_version: FEATURE_MANIFEST_VERSION,
            registry: PHASE_NAMES.iter().map(|n| n.to_string()).collect(),
            prep,
            mlp: Mlp::init(&dims, rng),
        }
    }

    /// Probability distribution over the registry for one program state.
    pub fn forward(&self, f: &FeatureVector) -> Result<DVector<f64>, PssError> {
        if f.manifest_version != self.feature_manifest_version {
            return Err(PssError::ManifestMismatch {
                found: f.manifest_version,
                expect: self.feature_manifest_version,
            });
        }
        if f.values.len() != self.prep.input_dim() {
            return Err(PssError::StateDim {
                expect: self.prep.input_dim(),
                got: f.values.len(),
            });
        }
        Ok(softmax(&self.mlp.logits(&self.prep.apply(&f.values))))
    }
}

pub fn save_policy(p: &PhasePolicy, path: &Path) -> Result<(), PssError> {
    let mut w = DocWriter::new(POLICY_MAGIC, POLICY_VERSION);
    w.kv("feature_manifest", p.feature_manifest_version);
    w.kv("phases", p.registry.len());
    w.kv("state_dim", p.prep.out_dim());
    let mut dims = vec![p.mlp.input_dim()];
    dims.extend(p.mlp.layers.iter().map(|(m, _)| m.nrows()));
    w.kv_usize_list("dims", &dims);

    w.section("registry");
    for (i, name) in p.registry.iter().enumerate() {
        w.kv(&format!("phase.{i}"), name);
    }

    w.section("prep");
    let mean: Vec<f64> = p.prep.mean.iter().cloned().collect();
    w.kv_f64_list("mean", &mean);
    w.kv_matrix("proj", &p.prep.proj);

    for (i, (wm, b)) in p.mlp.layers.iter().enumerate() {
        w.section(&format!("layer.{i}"));
        w.kv_matrix("w", wm);
        let bv: Vec<f64> = b.iter().cloned().collect();
        w.kv_f64_list("b", &bv);
    }
    std::fs::write(path, w.finish())?;
    Ok(())
}

pub fn load_policy(path: &Path) -> Result<PhasePolicy, PssError> {
    let text = std::fs::read_to_string(path)?;
    let doc = Doc::parse(&text, POLICY_MAGIC)?;
    if doc.version != POLICY_VERSION {
        return Err(PssError::VersionMismatch {
            found: doc.version,
            expect: POLICY_VERSION,
        });
    }
    let head = doc.head();
    let feature_manifest: u32 = head.parsed("feature_manifest")?;
    if feature_manifest != FEATURE_MANIFEST_VERSION {
        return Err(PssError::ManifestMismatch {
            found: feature_manifest,
            expect: FEATURE_MANIFEST_VERSION,
        });
    }

    let phases: usize = head.parsed("phases")?;
    if phases != NUM_PHASES {
        return Err(PssError::RegistrySize {
            found: phases,
            expect: NUM_PHASES,
        });
    }
    let reg = doc.section("registry")?;
    let mut registry = Vec::with_capacity(phases);
    for i in 0..phases {
        let name = reg.get(&format!("phase.{i}"))?;
        if name != PHASE_NAMES[i] {
            return Err(PssError::RegistryMismatch {
                index: i,
                found: name.to_string(),
                expect: PHASE_NAMES[i].to_string(),
            });
        }
        registry.push(name.to_string());
    }

    let prep_sec = doc.section("prep")?;
    let prep = StatePrep {
        mean: DVector::from_vec(prep_sec.f64_list("mean")?),
        proj: prep_sec.matrix("proj")?,
    };
    if prep.mean.len() != prep.input_dim() {
        return Err(PssError::Corrupt(format!(
            "prep mean has {} entries for input width {}",
            prep.mean.len(),
            prep.input_dim()
        )));
    }

    let dims = head.usize_list("dims")?;
    if dims.len() < 2 {
        return Err(PssError::Corrupt("dims lists fewer than two widths".into()));
    }
    let mut layers = Vec::with_capacity(dims.len() - 1);
    for i in 0..dims.len() - 1 {
        let sec = doc.section(&format!("layer.{i}"))?;
        let wm = sec.matrix("w")?;
        let b = DVector::from_vec(sec.f64_list("b")?);
        if wm.nrows() != dims[i + 1] || wm.ncols() != dims[i] || b.len() != dims[i + 1] {
            return Err(PssError::Corrupt(format!(
                "layer {i} is {}x{} with bias {}, dims say {}x{}",
                wm.nrows(),
                wm.ncols(),
                b.len(),
                dims[i + 1],
                dims[i],
            )));
        }
        layers.push((wm, b));
    }
    if dims[0] != prep.out_dim() {
        return Err(PssError::Corrupt(format!(
            "network input width {} does not match projection output {}",
            dims[0],
            prep.out_dim()
        )));
    }
    if *dims.last().unwrap() != NUM_PHASES {
        return Err(PssError::Corrupt(format!(
            "network output width {} does not match the {NUM_PHASES}-phase registry",
            dims.last().unwrap()
        )));
    }
    Ok(PhasePolicy {
        feature_manifest_version: feature_manifest,
        registry,
        prep,
        mlp: Mlp { layers },
    })
}
