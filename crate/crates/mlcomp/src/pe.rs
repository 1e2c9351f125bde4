//! Performance estimator search: try (preprocessor, regressor) pairs with
//! randomly drawn hyperparameters on a train/test split, keep the most
//! accurate configuration, refit it on the full dataset, and ship the result
//! as a self-describing text bundle.
//!
//! Estimator input is the concatenation of the 63 static features and the
//! 22 static per-kind instruction counts (85 values); one regressor per
//! predicted metric shares one preprocessor.

use crate::dataset::{Dataset, Sample};
use crate::doc::{Doc, DocError, DocWriter, Section};
use crate::features::{FeatureVector, FEATURE_MANIFEST_VERSION, NUM_FEATURES};
use mlkit::metrics::{regression_metrics, RegressionMetrics};
use mlkit::preprocess::{fit_preprocessor, Pca, PcaRule, Preprocessor, Scaler, ScalerKind};
use mlkit::regress::{fit_regressor, Regressor, RegressorSpec};
use mlkit::tree::{Node, Tree, TreeParams};
use mlkit::forest::{Forest, ForestParams};
use mlkit::{DMatrix, DVector, MlkitError};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::path::Path;
use tir::platform::DynamicFeatures;
use tir::NUM_KINDS;

pub const PE_BUNDLE_VERSION: u32 = 1;
const PE_MAGIC: &str = "mlcomp-pe";

/// Metrics the estimator predicts, in bundle order. Code size is not
/// estimated; it is exact and supplied by the caller.
pub const PE_METRICS: [&str; 4] = [
    "exec_time_s",
    "energy_j",
    "executed_instructions",
    "avg_power_w",
];

/// Estimator input width: static features plus static kind counts.
pub const PE_INPUT_DIM: usize = NUM_FEATURES + NUM_KINDS;

#[derive(Debug, Clone, PartialEq)]
pub struct PairSpec {
    pub preprocessor: String,
    pub regressor: String,
}

/// Every preprocessor crossed with every regressor family.
pub fn default_pairs() -> Vec<PairSpec> {
    let mut pairs = Vec::new();
    for p in mlkit::preprocess::PREPROCESSOR_KINDS {
        for r in mlkit::regress::REGRESSOR_KINDS {
            pairs.push(PairSpec {
                preprocessor: p.to_string(),
                regressor: r.to_string(),
            });
        }
    }
    pairs
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeSearchConfig {
    /// Search stops once best accuracy (1 - mean test mape) exceeds this.
    pub accuracy_thr: f64,
    pub pairs: Vec<PairSpec>,
    pub trials_per_pair: usize,
    pub split_fraction: f64,
    pub seed: u64,
}

impl Default for PeSearchConfig {
    fn default() -> Self {
        PeSearchConfig {
            accuracy_thr: 0.98,
            pairs: default_pairs(),
            trials_per_pair: 8,
            split_fraction: 0.8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub preprocessor: String,
    pub regressor: String,
    pub hyperparams: String,
    /// None when the trial failed to fit or score.
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeBundle {
    pub manifest_version: u32,
    pub feature_manifest_version: u32,
    pub platform_name: String,
    pub preprocessor: Preprocessor,
    /// One regressor per metric, in PE_METRICS order.
    pub regressors: Vec<(String, Regressor)>,
    /// Held-out metrics of the winning trial, in PE_METRICS order.
    pub test_metrics: Vec<(String, RegressionMetrics)>,
    pub search_log: Vec<TrialRecord>,
    pub best_trial: usize,
    pub split_seed: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum PeError {
    #[error("dataset has {got} samples, need at least {need}")]
    DatasetTooSmall { need: usize, got: usize },
    #[error("bad search config: {0}")]
    BadConfig(String),
    #[error("every search trial failed")]
    AllTrialsFailed,
    #[error("model fit: {0}")]
    Mlkit(#[from] MlkitError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bundle file: {0}")]
    Doc(#[from] DocError),
    #[error("bundle version {found}, this build reads {expect}")]
    VersionMismatch { found: u32, expect: u32 },
    #[error("feature manifest {found} does not match bundle's {expect}")]
    ManifestMismatch { found: u32, expect: u32 },
}

/// Row-per-sample design matrix: [static features | static kind counts].
pub fn design_matrix(samples: &[&Sample]) -> DMatrix<f64> {
    DMatrix::from_fn(samples.len(), PE_INPUT_DIM, |r, c| {
        let s = samples[r];
        if c < NUM_FEATURES {
            s.static_features.values[c]
        } else {
            s.platform_instruction_counts[c - NUM_FEATURES] as f64
        }
    })
}

fn metric_value(d: &DynamicFeatures, metric: usize) -> f64 {
    match metric {
        0 => d.exec_time_s,
        1 => d.energy_j,
        2 => d.executed_instructions as f64,
        3 => d.avg_power_w,
        _ => unreachable!("metric index"),
    }
}

fn targets(samples: &[&Sample], metric: usize) -> DVector<f64> {
    DVector::from_fn(samples.len(), |r, _| metric_value(&samples[r].dynamics, metric))
}

/// Deterministic shuffled split into ceil(fraction*n) train rows (capped so
/// the test side is never empty) and the rest.
pub fn split_dataset(
    d: &Dataset,
    fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>), PeError> {
    let n = d.samples.len();
    if n < 5 {
        return Err(PeError::DatasetTooSmall { need: 5, got: n });
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(PeError::BadConfig(format!(
            "split_fraction {fraction} outside (0, 1)"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    let train_n = ((fraction * n as f64).ceil() as usize).min(n - 1);
    let test = idx.split_off(train_n);
    Ok((idx, test))
}

/// Draw a regressor spec for one trial. Ranges are fixed and documented by
/// the rendered hyperparameter string.
fn draw_spec(kind: &str, rng: &mut ChaCha8Rng, n_train: usize) -> Result<RegressorSpec, PeError> {
    Ok(match kind {
        "ols" => RegressorSpec::Ols,
        "ridge" => RegressorSpec::Ridge {
            lambda: 10f64.powf(rng.random_range(-8.0..=1.0)),
        },
        "knn" => RegressorSpec::Knn {
            k: rng.random_range(1..=8.min(n_train.max(1))),
        },
        "tree" => RegressorSpec::Tree {
            max_depth: rng.random_range(2..=12),
            min_leaf: rng.random_range(1..=4),
        },
        "forest" => RegressorSpec::Forest {
            n_trees: rng.random_range(4..=12),
            max_depth: rng.random_range(3..=12),
            feature_subsample: rng.random_range(0.3..=1.0),
        },
        other => {
            return Err(PeError::BadConfig(format!(
                "unknown regressor kind '{other}'"
            )))
        }
    })
}

fn describe_spec(spec: &RegressorSpec) -> String {
    match spec {
        RegressorSpec::Ols => String::new(),
        RegressorSpec::Ridge { lambda } => format!("lambda={lambda}"),
        RegressorSpec::Knn { k } => format!("k={k}"),
        RegressorSpec::Tree { max_depth, min_leaf } => {
            format!("max_depth={max_depth} min_leaf={min_leaf}")
        }
        RegressorSpec::Forest {
            n_trees,
            max_depth,
            feature_subsample,
        } => format!(
            "n_trees={n_trees} max_depth={max_depth} feature_subsample={feature_subsample}"
        ),
    }
}

fn clamped(preds: DVector<f64>) -> Vec<f64> {
    preds.iter().map(|p| p.max(0.0)).collect()
}

struct Winner {
    trial: usize,
    accuracy: f64,
    preprocessor: String,
    spec: RegressorSpec,
    fit_seed: u64,
    test_metrics: Vec<(String, RegressionMetrics)>,
}

/// Fit and score one configuration on the split. Any error is a failed trial.
fn score_trial(
    pre_kind: &str,
    spec: &RegressorSpec,
    fit_seed: u64,
    x_train: &DMatrix<f64>,
    x_test: &DMatrix<f64>,
    y_train: &[DVector<f64>],
    y_test: &[DVector<f64>],
) -> Result<(f64, Vec<(String, RegressionMetrics)>), MlkitError> {
    let pre = fit_preprocessor(pre_kind, x_train)?;
    let z_train = pre.transform(x_train)?;
    let z_test = pre.transform(x_test)?;
    let mut metrics = Vec::new();
    let mut mape_sum = 0.0;
    for (mi, name) in PE_METRICS.iter().enumerate() {
        let reg = fit_regressor(spec, &z_train, &y_train[mi], fit_seed)?;
        let preds = clamped(reg.predict(&z_test)?);
        let m = regression_metrics(y_test[mi].as_slice(), &preds)?;
        mape_sum += m.mape;
        metrics.push((name.to_string(), m));
    }
    Ok((1.0 - mape_sum / PE_METRICS.len() as f64, metrics))
}

pub fn model_search(d: &Dataset, cfg: &PeSearchConfig) -> Result<PeBundle, PeError> {
    if cfg.pairs.is_empty() {
        return Err(PeError::BadConfig("empty model list".into()));
    }
    if cfg.trials_per_pair == 0 {
        return Err(PeError::BadConfig("trials_per_pair must be at least 1".into()));
    }
    let (train_idx, test_idx) = split_dataset(d, cfg.split_fraction, cfg.seed)?;
    let train: Vec<&Sample> = train_idx.iter().map(|&i| &d.samples[i]).collect();
    let test: Vec<&Sample> = test_idx.iter().map(|&i| &d.samples[i]).collect();
    let x_train = design_matrix(&train);
    let x_test = design_matrix(&test);
    let y_train: Vec<DVector<f64>> = (0..4).map(|m| targets(&train, m)).collect();
    let y_test: Vec<DVector<f64>> = (0..4).map(|m| targets(&test, m)).collect();

    let mut log = Vec::new();
    let mut winner: Option<Winner> = None;
    'search: for (pi, pair) in cfg.pairs.iter().enumerate() {
        for t in 0..cfg.trials_per_pair {
            let trial = log.len();
            // Stream depends on (pair, trial-in-pair) only, so growing
            // trials_per_pair reruns a superset of the same trials.
            let stream = ((pi as u64) << 32) | (t as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(stream.wrapping_add(1));
            let fit_seed = cfg.seed ^ stream;

            let spec = draw_spec(&pair.regressor, &mut rng, train.len())?;
            let outcome = score_trial(
                &pair.preprocessor,
                &spec,
                fit_seed,
                &x_train,
                &x_test,
                &y_train,
                &y_test,
            );
            let accuracy = outcome.as_ref().ok().map(|(a, _)| *a);
            log.push(TrialRecord {
                trial,
                preprocessor: pair.preprocessor.clone(),
                regressor: pair.regressor.clone(),
                hyperparams: describe_spec(&spec),
                accuracy,
            });
            if let Ok((acc, metrics)) = outcome {
                if winner.as_ref().is_none_or(|w| acc > w.accuracy) {
                    winner = Some(Winner {
                        trial,
                        accuracy: acc,
                        preprocessor: pair.preprocessor.clone(),
                        spec: spec.clone(),
                        fit_seed,
                        test_metrics: metrics,
                    });
                }
            }
            if winner.as_ref().is_some_and(|w| w.accuracy > cfg.accuracy_thr) {
                break 'search;
            }
        }
    }
    let w = winner.ok_or(PeError::AllTrialsFailed)?;

    // Refit the winning configuration on the whole dataset.
    let all: Vec<&Sample> = d.samples.iter().collect();
    let x_all = design_matrix(&all);
    let pre = fit_preprocessor(&w.preprocessor, &x_all)?;
    let z_all = pre.transform(&x_all)?;
    let mut regressors = Vec::new();
    for (mi, name) in PE_METRICS.iter().enumerate() {
        let y = targets(&all, mi);
        regressors.push((name.to_string(), fit_regressor(&w.spec, &z_all, &y, w.fit_seed)?));
    }

    Ok(PeBundle {
        manifest_version: PE_BUNDLE_VERSION,
        feature_manifest_version: FEATURE_MANIFEST_VERSION,
        platform_name: d.platform_name.clone(),
        preprocessor: pre,
        regressors,
        test_metrics: w.test_metrics,
        search_log: log,
        best_trial: w.trial,
        split_seed: cfg.seed,
    })
}

impl PeBundle {
    /// Predict the four dynamic metrics for one program state. Estimates are
    /// clamped at zero; code size is exact and passed through.
    pub fn predict_dynamics(
        &self,
        f: &FeatureVector,
        counts: &[u64; NUM_KINDS],
        code_size_bytes: u64,
    ) -> Result<DynamicFeatures, PeError> {
        if f.manifest_version != self.feature_manifest_version {
            return Err(PeError::ManifestMismatch {
                found: f.manifest_version,
                expect: self.feature_manifest_version,
            });
        }
        let x = DMatrix::from_fn(1, PE_INPUT_DIM, |_, c| {
            if c < NUM_FEATURES {
                f.values[c]
            } else {
                counts[c - NUM_FEATURES] as f64
            }
        });
        let z = self.preprocessor.transform(&x)?;
        let mut est = [0.0f64; 4];
        for (mi, (_, reg)) in self.regressors.iter().enumerate() {
            est[mi] = reg.predict(&z)?[0].max(0.0);
        }
        Ok(DynamicFeatures {
            exec_time_s: est[0],
            energy_j: est[1],
            executed_instructions: est[2].round() as u64,
            avg_power_w: est[3],
            code_size_bytes,
        })
    }
}

fn write_metrics(w: &mut DocWriter, name: &str, m: &RegressionMetrics) {
    w.section(&format!("metrics.{name}"));
    w.kv("mape", m.mape);
    w.kv("max_ape", m.max_ape);
    w.kv("r2", m.r2);
    w.kv("excluded_zero_targets", m.excluded_zero_targets);
}

fn read_metrics(s: &Section) -> Result<RegressionMetrics, DocError> {
    Ok(RegressionMetrics {
        mape: s.parsed("mape")?,
        max_ape: s.parsed("max_ape")?,
        r2: s.parsed("r2")?,
        excluded_zero_targets: s.parsed("excluded_zero_targets")?,
    })
}

fn write_preprocessor(w: &mut DocWriter, section: &str, p: &Preprocessor) {
    w.section(section);
    match p {
        Preprocessor::Scaler(s) => {
            w.kv("kind", s.kind.name());
            w.kv_f64_list("center", &s.center);
            w.kv_f64_list("scale", &s.scale);
        }
        Preprocessor::Pca(p) => {
            w.kv("kind", "pca");
            w.kv("rule", p.rule.name());
            w.kv("input_dim", p.input_dim);
            w.kv_usize_list("kept", &p.kept);
            w.kv_f64_list("mean", &p.mean);
            w.kv_f64_list("eigenvalues", &p.eigenvalues);
            w.kv_matrix("components", &p.components);
        }
    }
}

fn read_preprocessor(s: &Section) -> Result<Preprocessor, DocError> {
    let kind = s.get("kind")?;
    let scaler_kind = match kind {
        "mean-std" => Some(ScalerKind::MeanStd),
        "min-max" => Some(ScalerKind::MinMax),
        "max-abs" => Some(ScalerKind::MaxAbs),
        "robust" => Some(ScalerKind::Robust),
        _ => None,
    };
    if let Some(k) = scaler_kind {
        return Ok(Preprocessor::Scaler(Scaler {
            kind: k,
            center: s.f64_list("center")?,
            scale: s.f64_list("scale")?,
        }));
    }
    if kind != "pca" {
        return Err(DocError::BadValue {
            key: "kind".into(),
            msg: format!("unknown preprocessor '{kind}'"),
        });
    }
    let rule = match s.get("rule")? {
        "mle" => PcaRule::Mle,
        "variance-fallback" => PcaRule::VarianceFallback,
        "fixed" => PcaRule::Fixed,
        other => {
            return Err(DocError::BadValue {
                key: "rule".into(),
                msg: format!("unknown rule '{other}'"),
            })
        }
    };
    Ok(Preprocessor::Pca(Pca {
        input_dim: s.parsed("input_dim")?,
        kept: s.usize_list("kept")?,
        mean: s.f64_list("mean")?,
        components: s.matrix("components")?,
        eigenvalues: s.f64_list("eigenvalues")?,
        rule,
    }))
}

fn write_nodes(w: &mut DocWriter, prefix: &str, root: &Node) {
    fn push(out: &mut Vec<String>, n: &Node) {
        match n {
            Node::Leaf(v) => out.push(format!("leaf {v}")),
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                out.push(format!("split {feature} {threshold}"));
                push(out, left);
                push(out, right);
            }
        }
    }
    let mut lines = Vec::new();
    push(&mut lines, root);
    w.kv(&format!("{prefix}.nodes"), lines.len());
    for (i, line) in lines.iter().enumerate() {
        w.kv(&format!("{prefix}.node.{i}"), line);
    }
}

fn read_nodes(s: &Section, prefix: &str) -> Result<Node, DocError> {
    let count: usize = s.parsed(&format!("{prefix}.nodes"))?;
    fn build(s: &Section, prefix: &str, cursor: &mut usize, count: usize) -> Result<Node, DocError> {
        if *cursor >= count {
            return Err(DocError::BadValue {
                key: format!("{prefix}.nodes"),
                msg: "node list ended early".into(),
            });
        }
        let key = format!("{prefix}.node.{}", *cursor);
        *cursor += 1;
        let line = s.get(&key)?;
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some("leaf") => {
                let v: f64 = toks
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| DocError::BadValue {
                        key: key.clone(),
                        msg: "bad leaf".into(),
                    })?;
                Ok(Node::Leaf(v))
            }
            Some("split") => {
                let feature: usize = toks
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| DocError::BadValue {
                        key: key.clone(),
                        msg: "bad split feature".into(),
                    })?;
                let threshold: f64 = toks
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| DocError::BadValue {
                        key: key.clone(),
                        msg: "bad split threshold".into(),
                    })?;
                let left = build(s, prefix, cursor, count)?;
                let right = build(s, prefix, cursor, count)?;
                Ok(Node::Split {
                    feature,
                    threshold,
                    left: Box::new(left),
                    right: Box::new(right),
                })
            }
            _ => Err(DocError::BadValue {
                key,
                msg: format!("bad node line '{line}'"),
            }),
        }
    }
    let mut cursor = 0;
    let root = build(s, prefix, &mut cursor, count)?;
    if cursor != count {
        return Err(DocError::BadValue {
            key: format!("{prefix}.nodes"),
            msg: format!("{} nodes declared, {} consumed", count, cursor),
        });
    }
    Ok(root)
}

fn write_tree_body(w: &mut DocWriter, prefix: &str, t: &Tree) {
    w.kv(&format!("{prefix}.max_depth"), t.params.max_depth);
    w.kv(&format!("{prefix}.min_leaf"), t.params.min_leaf);
    w.kv(&format!("{prefix}.input_dim"), t.input_dim);
    write_nodes(w, prefix, &t.root);
}

fn read_tree_body(s: &Section, prefix: &str) -> Result<Tree, DocError> {
    Ok(Tree {
        params: TreeParams {
            max_depth: s.parsed(&format!("{prefix}.max_depth"))?,
            min_leaf: s.parsed(&format!("{prefix}.min_leaf"))?,
        },
        input_dim: s.parsed(&format!("{prefix}.input_dim"))?,
        root: read_nodes(s, prefix)?,
    })
}

fn write_regressor(w: &mut DocWriter, section: &str, r: &Regressor) {
    w.section(section);
    match r {
        Regressor::Linear {
            spec,
            weights,
            intercept,
            fell_back,
        } => {
            w.kv("kind", spec.kind_name());
            if let RegressorSpec::Ridge { lambda } = spec {
                w.kv("lambda", lambda);
            }
            let ws: Vec<f64> = weights.iter().cloned().collect();
            w.kv_f64_list("weights", &ws);
            w.kv("intercept", intercept);
            w.kv("fell_back", fell_back);
        }
        Regressor::Knn { k, xs, ys } => {
            w.kv("kind", "knn");
            w.kv("k", k);
            w.kv_matrix("xs", xs);
            let y: Vec<f64> = ys.iter().cloned().collect();
            w.kv_f64_list("ys", &y);
        }
        Regressor::Tree(t) => {
            w.kv("kind", "tree");
            write_tree_body(w, "tree", t);
        }
        Regressor::Forest(f) => {
            w.kv("kind", "forest");
            w.kv("n_trees", f.params.n_trees);
            w.kv("max_depth", f.params.max_depth);
            w.kv("feature_subsample", f.params.feature_subsample);
            w.kv("input_dim", f.input_dim);
            for (i, t) in f.trees.iter().enumerate() {
                write_tree_body(w, &format!("tree.{i}"), t);
            }
        }
    }
}

fn read_regressor(s: &Section) -> Result<Regressor, DocError> {
    match s.get("kind")? {
        "ols" | "ridge" => {
            let spec = if s.get("kind")? == "ols" {
                RegressorSpec::Ols
            } else {
                RegressorSpec::Ridge {
                    lambda: s.parsed("lambda")?,
                }
            };
            let weights = s.f64_list("weights")?;
            Ok(Regressor::Linear {
                spec,
                weights: DVector::from_vec(weights),
                intercept: s.parsed("intercept")?,
                fell_back: s.parsed("fell_back")?,
            })
        }
        "knn" => Ok(Regressor::Knn {
            k: s.parsed("k")?,
            xs: s.matrix("xs")?,
            ys: DVector::from_vec(s.f64_list("ys")?),
        }),
        "tree" => Ok(Regressor::Tree(read_tree_body(s, "tree")?)),
        "forest" => {
            let n_trees: usize = s.parsed("n_trees")?;
            let mut trees = Vec::new();
            for i in 0..n_trees {
                trees.push(read_tree_body(s, &format!("tree.{i}"))?);
            }
            Ok(Regressor::Forest(Forest {
                params: ForestParams {
                    n_trees,
                    max_depth: s.parsed("max_depth")?,
                    feature_subsample: s.parsed("feature_subsample")?,
                },
                input_dim: s.parsed("input_dim")?,
                trees,
            }))
        }
        other => Err(DocError::BadValue {
            key: "kind".into(),
            msg: format!("unknown regressor '{other}'"),
        }),
    }
}

pub fn save_pe(b: &PeBundle, path: &Path) -> Result<(), PeError> {
    let mut w = DocWriter::new(PE_MAGIC, b.manifest_version);
    w.kv("feature_manifest", b.feature_manifest_version);
    w.kv("platform", &b.platform_name);
    w.kv("split_seed", b.split_seed);
    w.kv("best_trial", b.best_trial);
    w.kv("trials", b.search_log.len());

    for t in &b.search_log {
        w.section(&format!("trial.{}", t.trial));
        w.kv("preprocessor", &t.preprocessor);
        w.kv("regressor", &t.regressor);
        w.kv("hyperparams", &t.hyperparams);
        match t.accuracy {
            Some(a) => w.kv("accuracy", a),
            None => w.kv("accuracy", "failed"),
        }
    }
    for (name, m) in &b.test_metrics {
        write_metrics(&mut w, name, m);
    }
    write_preprocessor(&mut w, "preprocessor", &b.preprocessor);
    for (name, r) in &b.regressors {
        write_regressor(&mut w, &format!("regressor.{name}"), r);
    }
    std::fs::write(path, w.finish())?;
    Ok(())
}

pub fn load_pe(path: &Path) -> Result<PeBundle, PeError> {
    let text = std::fs::read_to_string(path)?;
    let doc = Doc::parse(&text, PE_MAGIC)?;
    if doc.version != PE_BUNDLE_VERSION {
        return Err(PeError::VersionMismatch {
            found: doc.version,
            expect: PE_BUNDLE_VERSION,
        });
    }
    let head = doc.head();
    let trials: usize = head.parsed("trials")?;
    let mut search_log = Vec::new();
    for i in 0..trials {
        let s = doc.section(&format!("trial.{i}"))?;
        let acc_raw = s.get("accuracy")?;
        search_log.push(TrialRecord {
            trial: i,
            preprocessor: s.get("preprocessor")?.to_string(),
            regressor: s.get("regressor")?.to_string(),
            hyperparams: s.get("hyperparams").unwrap_or("").to_string(),
            accuracy: if acc_raw == "failed" {
                None
            } else {
                Some(acc_raw.parse().map_err(|_| DocError::BadValue {
                    key: "accuracy".into(),
                    msg: format!("bad accuracy '{acc_raw}'"),
                })?)
            },
        });
    }
    let mut test_metrics = Vec::new();
    let mut regressors = Vec::new();
    for name in PE_METRICS {
        test_metrics.push((name.to_string(), read_metrics(&doc.section(&format!("metrics.{name}"))?)?));
        regressors.push((name.to_string(), read_regressor(&doc.section(&format!("regressor.{name}"))?)?));
    }
    Ok(PeBundle {
        manifest_version: doc.version,
        feature_manifest_version: head.parsed("feature_manifest")?,
        platform_name: head.get("platform")?.to_string(),
        preprocessor: read_preprocessor(&doc.section("preprocessor")?)?,
        regressors,
        test_metrics,
        search_log,
        best_trial: head.parsed("best_trial")?,
        split_seed: head.parsed("split_seed")?,
    })
}
