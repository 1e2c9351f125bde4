//! Column scalers and principal component analysis with automatic
//! dimensionality selection.
//!
//! Degenerate (constant) columns never abort a fit: scalers send them to 0,
//! PCA drops them before the eigendecomposition and restores zeros on
//! inverse transformation.

use crate::MlkitError;
use nalgebra::DMatrix;
use statrs::function::gamma::ln_gamma;

pub const PREPROCESSOR_KINDS: [&str; 5] = ["mean-std", "min-max", "max-abs", "robust", "pca"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalerKind {
    MeanStd,
    MinMax,
    MaxAbs,
    Robust,
}

impl ScalerKind {
    pub fn name(self) -> &'static str {
        match self {
            ScalerKind::MeanStd => "mean-std",
            ScalerKind::MinMax => "min-max",
            ScalerKind::MaxAbs => "max-abs",
            ScalerKind::Robust => "robust",
        }
    }
}

/// Per-column affine map (x - center) / scale. A zero scale marks a column
/// that carried no information at fit time; such columns transform to 0 and
/// invert back to their center.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    pub kind: ScalerKind,
    pub center: Vec<f64>,
    pub scale: Vec<f64>,
}

/// Linear-interpolation quantile of an ascending slice.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

impl Scaler {
    pub fn fit(kind: ScalerKind, x: &DMatrix<f64>) -> Result<Scaler, MlkitError> {
        let n = x.nrows();
        if n < 2 {
            return Err(MlkitError::TooFewSamples { need: 2, got: n });
        }
        let mut center = Vec::with_capacity(x.ncols());
        let mut scale = Vec::with_capacity(x.ncols());
        for c in 0..x.ncols() {
            let col: Vec<f64> = x.column(c).iter().cloned().collect();
            let min = col.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if min == max {
                center.push(min);
                scale.push(0.0);
                continue;
            }
            match kind {
                ScalerKind::MeanStd => {
                    let mean = col.iter().sum::<f64>() / n as f64;
                    let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
                    center.push(mean);
                    scale.push(var.sqrt());
                }
                ScalerKind::MinMax => {
                    center.push(min);
                    scale.push(max - min);
                }
                ScalerKind::MaxAbs => {
                    center.push(0.0);
                    scale.push(col.iter().map(|v| v.abs()).fold(0.0, f64::max));
                }
                ScalerKind::Robust => {
                    let mut sorted = col.clone();
                    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
                    center.push(quantile(&sorted, 0.5));
                    scale.push(iqr);
                }
            }
        }
        Ok(Scaler { kind, center, scale })
    }

    pub fn input_dim(&self) -> usize {
        self.center.len()
    }

    pub fn out_dim(&self) -> usize {
        self.center.len()
    }

    pub fn transform(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>, MlkitError> {
        self.check(x.ncols())?;
        let mut z = x.clone();
        for c in 0..z.ncols() {
            for r in 0..z.nrows() {
                z[(r, c)] = if self.scale[c] == 0.0 {
                    0.0
                } else {
                    (x[(r, c)] - self.center[c]) / self.scale[c]
                };
            }
        }
        Ok(z)
    }

    pub fn inverse_transform(&self, z: &DMatrix<f64>) -> Result<DMatrix<f64>, MlkitError> {
        self.check(z.ncols())?;
        let mut x = z.clone();
        for c in 0..x.ncols() {
            for r in 0..x.nrows() {
                x[(r, c)] = z[(r, c)] * self.scale[c] + self.center[c];
            }
        }
        Ok(x)
    }

    fn check(&self, got: usize) -> Result<(), MlkitError> {
        if got != self.center.len() {
            return Err(MlkitError::DimensionMismatch {
                expect: self.center.len(),
                got,
            });
        }
        Ok(())
    }
}

/// How the output dimension of a PCA fit is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcaDim {
    /// Minka's profile-likelihood rule, falling back to the smallest
    /// dimension explaining 95% of variance when the profile is degenerate.
    Mle,
    Fixed(usize),
}

/// Which rule actually decided the dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcaRule {
    Mle,
    VarianceFallback,
    Fixed,
}

impl PcaRule {
    pub fn name(self) -> &'static str {
        match self {
            PcaRule::Mle => "mle",
            PcaRule::VarianceFallback => "variance-fallback",
            PcaRule::Fixed => "fixed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    pub input_dim: usize,
    /// Input columns that were not constant at fit time.
    pub kept: Vec<usize>,
    /// Mean of each kept column.
    pub mean: Vec<f64>,
    /// d x kept.len(); rows are orthonormal principal directions.
    pub components: DMatrix<f64>,
    /// Sample variance along each kept direction, descending.
    pub eigenvalues: Vec<f64>,
    pub rule: PcaRule,
}

impl Pca {
    pub fn fit(x: &DMatrix<f64>, dim: PcaDim) -> Result<Pca, MlkitError> {
        let n = x.nrows();
        if n < 2 {
            return Err(MlkitError::TooFewSamples { need: 2, got: n });
        }
        let kept: Vec<usize> = (0..x.ncols())
            .filter(|&c| {
                let col = x.column(c);
                let first = col[0];
                col.iter().any(|&v| v != first)
            })
            .collect();
        let p = kept.len();
        if p == 0 {
            return Ok(Pca {
                input_dim: x.ncols(),
                kept,
                mean: Vec::new(),
                components: DMatrix::zeros(0, 0),
                eigenvalues: Vec::new(),
                rule: PcaRule::Fixed,
            });
        }

        let mean: Vec<f64> = kept
            .iter()
            .map(|&c| x.column(c).iter().sum::<f64>() / n as f64)
            .collect();
        let mut centered = DMatrix::zeros(n, p);
        for (j, &c) in kept.iter().enumerate() {
            for r in 0..n {
                centered[(r, j)] = x[(r, c)] - mean[j];
            }
        }
        // Spectrum via SVD of the centered data, not an eigendecomposition
        // of the covariance: squaring singular values pushes rounding noise
        // in the tail far below the validity cutoff of the MLE rule.
        let svd = centered.svd_unordered(false, true);
        let v_t = svd.v_t.expect("right singular vectors requested");
        let q = svd.singular_values.len();
        let mut order: Vec<usize> = (0..q).collect();
        order.sort_by(|&a, &b| {
            svd.singular_values[b]
                .partial_cmp(&svd.singular_values[a])
                .unwrap()
        });
        let spectrum: Vec<f64> = order
            .iter()
            .map(|&i| svd.singular_values[i].powi(2) / (n as f64 - 1.0))
            .collect();

        let (d, rule) = match dim {
            PcaDim::Fixed(k) => (k.min(q), PcaRule::Fixed),
            PcaDim::Mle => match minka_mle(&spectrum, n) {
                Some(k) => (k, PcaRule::Mle),
                None => (variance_dim(&spectrum, 0.95), PcaRule::VarianceFallback),
            },
        };

        let mut components = DMatrix::zeros(d, p);
        for (row, &i) in order.iter().take(d).enumerate() {
            let v = v_t.row(i);
            // Deterministic sign: largest-magnitude entry is positive.
            let lead = v
                .iter()
                .cloned()
                .max_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap())
                .unwrap_or(1.0);
            let flip = if lead < 0.0 { -1.0 } else { 1.0 };
            for j in 0..p {
                components[(row, j)] = v[j] * flip;
            }
        }

        Ok(Pca {
            input_dim: x.ncols(),
            kept,
            mean,
            components,
            eigenvalues: spectrum.into_iter().take(d).collect(),
            rule,
        })
    }

    pub fn out_dim(&self) -> usize {
        self.components.nrows()
    }

    pub fn transform(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>, MlkitError> {
        if x.ncols() != self.input_dim {
            return Err(MlkitError::DimensionMismatch {
                expect: self.input_dim,
                got: x.ncols(),
            });
        }
        let n = x.nrows();
        let p = self.kept.len();
        let mut centered = DMatrix::zeros(n, p);
        for (j, &c) in self.kept.iter().enumerate() {
            for r in 0..n {
                centered[(r, j)] = x[(r, c)] - self.mean[j];
            }
        }
        Ok(centered * self.components.transpose())
    }

    /// Rank-d reconstruction. Columns dropped as constant come back as zeros.
    pub fn inverse_transform(&self, z: &DMatrix<f64>) -> Result<DMatrix<f64>, MlkitError> {
        if z.ncols() != self.out_dim() {
            return Err(MlkitError::DimensionMismatch {
                expect: self.out_dim(),
                got: z.ncols(),
            });
        }
        let back = z * &self.components;
        let mut x = DMatrix::zeros(z.nrows(), self.input_dim);
        for (j, &c) in self.kept.iter().enumerate() {
            for r in 0..z.nrows() {
                x[(r, c)] = back[(r, j)] + self.mean[j];
            }
        }
        Ok(x)
    }
}

/// Smallest dimension whose eigenvalues explain at least `frac` of total
/// variance (at least 1).
fn variance_dim(spectrum: &[f64], frac: f64) -> usize {
    let total: f64 = spectrum.iter().sum();
    if total <= 0.0 {
        return 1.min(spectrum.len());
    }
    let mut acc = 0.0;
    for (i, v) in spectrum.iter().enumerate() {
        acc += v;
        if acc / total >= frac {
            return i + 1;
        }
    }
    spectrum.len()
}

/// Profile log-likelihood of `rank` signal dimensions under an isotropic
/// noise tail, after Minka's model-selection derivation.
fn minka_ll(spectrum: &[f64], rank: usize, n: usize) -> f64 {
    const EPS: f64 = 1e-15;
    let p = spectrum.len();
    if spectrum[rank - 1] < EPS {
        return f64::NEG_INFINITY;
    }
    let nf = n as f64;
    let pf = p as f64;
    let kf = rank as f64;

    let mut pu = -kf * 2.0f64.ln();
    for i in 1..=rank {
        let half = (pf - i as f64 + 1.0) / 2.0;
        pu += ln_gamma(half) - std::f64::consts::PI.ln() * half;
    }
    let pl: f64 = -spectrum[..rank].iter().map(|v| v.ln()).sum::<f64>() * nf / 2.0;
    let v = (spectrum[rank..].iter().sum::<f64>() / (pf - kf)).max(EPS);
    let pv = -v.ln() * nf * (pf - kf) / 2.0;
    let m = pf * kf - kf * (kf + 1.0) / 2.0;
    let pp = (2.0 * std::f64::consts::PI).ln() * (m + kf) / 2.0;

    let tilde = |j: usize| if j < rank { spectrum[j] } else { v };
    let mut pa = 0.0;
    for i in 0..rank {
        for j in (i + 1)..p {
            let gap = (spectrum[i] - spectrum[j]) * (1.0 / tilde(j) - 1.0 / tilde(i));
            if gap <= 0.0 {
                return f64::NEG_INFINITY;
            }
            pa += gap.ln() + nf.ln();
        }
    }

    pu + pl + pv + pp - pa / 2.0 - kf * nf.ln() / 2.0
}

/// Minka's MLE dimension, or None when the likelihood profile is degenerate
/// or not unimodal (the caller then applies the variance fallback).
fn minka_mle(spectrum: &[f64], n: usize) -> Option<usize> {
    let p = spectrum.len();
    if p < 2 || n < 3 {
        return None;
    }
    let ll: Vec<f64> = (1..p).map(|k| minka_ll(spectrum, k, n)).collect();
    let best = ll
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())?
        .0;
    if !ll[best].is_finite() {
        return None;
    }
    // The profile must rise to its peak and fall after it; anything else is
    // treated as degenerate.
    let tol = 1e-9 * (1.0 + ll[best].abs());
    for i in 0..best {
        if ll[i] > ll[i + 1] + tol {
            return None;
        }
    }
    for i in best..ll.len() - 1 {
        if ll[i] + tol < ll[i + 1] {
            return None;
        }
    }
    Some(best + 1)
}

/// A fitted preprocessing transform of any supported kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Preprocessor {
    Scaler(Scaler),
    Pca(Pca),
}

pub fn fit_preprocessor(kind: &str, x: &DMatrix<f64>) -> Result<Preprocessor, MlkitError> {
    match kind {
        "mean-std" => Ok(Preprocessor::Scaler(Scaler::fit(ScalerKind::MeanStd, x)?)),
        "min-max" => Ok(Preprocessor::Scaler(Scaler::fit(ScalerKind::MinMax, x)?)),
        "max-abs" => Ok(Preprocessor::Scaler(Scaler::fit(ScalerKind::MaxAbs, x)?)),
        "robust" => Ok(Preprocessor::Scaler(Scaler::fit(ScalerKind::Robust, x)?)),
        "pca" => Ok(Preprocessor::Pca(Pca::fit(x, PcaDim::Mle)?)),
        other => Err(MlkitError::BadHyperparameter(format!(
            "unknown preprocessor kind '{other}'"
        ))),
    }
}

impl Preprocessor {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Preprocessor::Scaler(s) => s.kind.name(),
            Preprocessor::Pca(_) => "pca",
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Preprocessor::Scaler(s) => s.input_dim(),
            Preprocessor::Pca(p) => p.input_dim,
        }
    }

    pub fn out_dim(&self) -> usize {
        match self {
            Preprocessor::Scaler(s) => s.out_dim(),
            Preprocessor::Pca(p) => p.out_dim(),
        }
    }

    pub fn transform(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>, MlkitError> {
        match self {
            Preprocessor::Scaler(s) => s.transform(x),
            Preprocessor::Pca(p) => p.transform(x),
        }
    }

    pub fn inverse_transform(&self, z: &DMatrix<f64>) -> Result<DMatrix<f64>, MlkitError> {
        match self {
            Preprocessor::Scaler(s) => s.inverse_transform(z),
            Preprocessor::Pca(p) => p.inverse_transform(z),
        }
    }
}
