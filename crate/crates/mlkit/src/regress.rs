//! Regression families behind one fit/predict interface: linear least
//! squares (plain and ridge), k-nearest-neighbour averaging, a single
//! regression tree, and a random forest.

use crate::forest::{Forest, ForestParams};
use crate::tree::{Tree, TreeParams};
use crate::MlkitError;
use nalgebra::{DMatrix, DVector};

pub const REGRESSOR_KINDS: [&str; 5] = ["ols", "ridge", "knn", "tree", "forest"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegressorSpec {
    Ols,
    Ridge { lambda: f64 },
    Knn { k: usize },
    Tree { max_depth: usize, min_leaf: usize },
    Forest { n_trees: usize, max_depth: usize, feature_subsample: f64 },
}

impl RegressorSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            RegressorSpec::Ols => "ols",
            RegressorSpec::Ridge { .. } => "ridge",
            RegressorSpec::Knn { .. } => "knn",
            RegressorSpec::Tree { .. } => "tree",
            RegressorSpec::Forest { .. } => "forest",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Regressor {
    Linear {
        spec: RegressorSpec,
        weights: DVector<f64>,
        intercept: f64,
        /// True when plain least squares was singular and a ridge jitter
        /// rescued the solve.
        fell_back: bool,
    },
    Knn {
        k: usize,
        xs: DMatrix<f64>,
        ys: DVector<f64>,
    },
    Tree(Tree),
    Forest(Forest),
}

/// Solve the (possibly regularized) normal equations with an intercept.
/// Returns the weight vector, intercept, and whether a fallback fired.
fn solve_linear(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda: f64,
) -> Result<(DVector<f64>, f64, bool), MlkitError> {
    let n = x.nrows();
    let p = x.ncols();
    let mut aug = DMatrix::zeros(n, p + 1);
    aug.view_mut((0, 0), (n, p)).copy_from(x);
    for r in 0..n {
        aug[(r, p)] = 1.0;
    }
    let gram = aug.transpose() * &aug;
    let rhs = aug.transpose() * y;

    let mean_diag = gram.diagonal().sum() / (p + 1) as f64;
    let attempt = |reg: f64| -> Option<DVector<f64>> {
        let mut g = gram.clone();
        for i in 0..p {
            g[(i, i)] += reg;
        }
        g.cholesky()
            .map(|ch| ch.solve(&rhs))
            .filter(|w| w.iter().all(|v| v.is_finite()))
    };

    let mut fell_back = false;
    let mut solution = attempt(lambda);
    if solution.is_none() {
        // Singular system: escalate a scale-aware jitter until it factors.
        fell_back = true;
        let mut jitter = 1e-8 * (1.0 + mean_diag);
        while solution.is_none() {
            solution = attempt(lambda + jitter);
            jitter *= 100.0;
        }
    }
    let w = solution.unwrap();
    Ok((w.rows(0, p).into_owned(), w[p], fell_back))
}

pub fn fit_regressor(
    spec: &RegressorSpec,
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    seed: u64,
) -> Result<Regressor, MlkitError> {
    if x.nrows() != y.len() {
        return Err(MlkitError::RowTargetMismatch {
            rows: x.nrows(),
            targets: y.len(),
        });
    }
    if x.nrows() < 2 {
        return Err(MlkitError::TooFewSamples { need: 2, got: x.nrows() });
    }
    match *spec {
        RegressorSpec::Ols => {
            let (weights, intercept, fell_back) = solve_linear(x, y, 0.0)?;
            Ok(Regressor::Linear { spec: *spec, weights, intercept, fell_back })
        }
        RegressorSpec::Ridge { lambda } => {
            if lambda < 0.0 {
                return Err(MlkitError::BadHyperparameter("ridge lambda must be >= 0".into()));
            }
            let (weights, intercept, fell_back) = solve_linear(x, y, lambda)?;
            Ok(Regressor::Linear { spec: *spec, weights, intercept, fell_back })
        }
        RegressorSpec::Knn { k } => {
            if k == 0 {
                return Err(MlkitError::BadHyperparameter("knn needs k >= 1".into()));
            }
            Ok(Regressor::Knn { k, xs: x.clone(), ys: y.clone() })
        }
        RegressorSpec::Tree { max_depth, min_leaf } => Ok(Regressor::Tree(Tree::fit(
            x,
            y,
            TreeParams { max_depth, min_leaf },
        )?)),
        RegressorSpec::Forest { n_trees, max_depth, feature_subsample } => {
            Ok(Regressor::Forest(Forest::fit(
                x,
                y,
                ForestParams { n_trees, max_depth, feature_subsample },
                seed,
            )?))
        }
    }
}

impl Regressor {
    pub fn input_dim(&self) -> usize {
        match self {
            Regressor::Linear { weights, .. } => weights.len(),
            Regressor::Knn { xs, .. } => xs.ncols(),
            Regressor::Tree(t) => t.input_dim,
            Regressor::Forest(f) => f.input_dim,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Regressor::Linear { spec, .. } => spec.kind_name(),
            Regressor::Knn { .. } => "knn",
            Regressor::Tree(_) => "tree",
            Regressor::Forest(_) => "forest",
        }
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<DVector<f64>, MlkitError> {
        if x.ncols() != self.input_dim() {
            return Err(MlkitError::DimensionMismatch {
                expect: self.input_dim(),
                got: x.ncols(),
            });
        }
        match self {
            Regressor::Linear { weights, intercept, .. } => {
                Ok(x * weights + DVector::from_element(x.nrows(), *intercept))
            }
            Regressor::Knn { k, xs, ys } => {
                let kk = (*k).min(xs.nrows());
                Ok(DVector::from_fn(x.nrows(), |r, _| {
                    let mut dist: Vec<(f64, usize)> = (0..xs.nrows())
                        .map(|i| {
                            let d2: f64 = (0..xs.ncols())
                                .map(|c| (x[(r, c)] - xs[(i, c)]).powi(2))
                                .sum();
                            (d2, i)
                        })
                        .collect();
                    dist.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    dist[..kk].iter().map(|&(_, i)| ys[i]).sum::<f64>() / kk as f64
                }))
            }
            Regressor::Tree(t) => t.predict(x),
            Regressor::Forest(f) => f.predict(x),
        }
    }
}
