//! Regression tree minimizing summed squared error, with deterministic
//! tie-breaking: lowest feature index first, then lowest threshold.

use crate::MlkitError;
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        /// Rows with value <= threshold go left.
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub params: TreeParams,
    pub input_dim: usize,
    pub root: Node,
}

struct Builder<'a> {
    x: &'a DMatrix<f64>,
    y: &'a DVector<f64>,
    params: TreeParams,
    sampler: &'a mut dyn FnMut(usize) -> Vec<usize>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl Builder<'_> {
    fn build(&mut self, idx: &[usize], depth: usize) -> Node {
        let n = idx.len();
        let mean = idx.iter().map(|&i| self.y[i]).sum::<f64>() / n as f64;
        if depth >= self.params.max_depth || n < 2 * self.params.min_leaf {
            return Node::Leaf(mean);
        }
        let sse: f64 = idx.iter().map(|&i| (self.y[i] - mean).powi(2)).sum();
        if sse <= 0.0 {
            return Node::Leaf(mean);
        }

        let candidates = (self.sampler)(self.x.ncols());
        let Some(best) = self.best_split(idx, &candidates) else {
            return Node::Leaf(mean);
        };

        let (mut left, mut right) = (Vec::new(), Vec::new());
        for &i in idx {
            if self.x[(i, best.feature)] <= best.threshold {
                left.push(i);
            } else {
                right.push(i);
            }
        }
        Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left: Box::new(self.build(&left, depth + 1)),
            right: Box::new(self.build(&right, depth + 1)),
        }
    }

    fn best_split(&self, idx: &[usize], candidates: &[usize]) -> Option<BestSplit> {
        let n = idx.len();
        let min_leaf = self.params.min_leaf.max(1);
        let mut best: Option<BestSplit> = None;

        for &f in candidates {
            let mut pairs: Vec<(f64, f64)> =
                idx.iter().map(|&i| (self.x[(i, f)], self.y[i])).collect();
            pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

            let total_sum: f64 = pairs.iter().map(|p| p.1).sum();
            let total_sq: f64 = pairs.iter().map(|p| p.1 * p.1).sum();
            let mut left_sum = 0.0;
            let mut left_sq = 0.0;

            for k in 1..n {
                left_sum += pairs[k - 1].1;
                left_sq += pairs[k - 1].1 * pairs[k - 1].1;
                if pairs[k - 1].0 == pairs[k].0 {
                    continue;
                }
                if k < min_leaf || n - k < min_leaf {
                    continue;
                }
                let right_sum = total_sum - left_sum;
                let right_sq = total_sq - left_sq;
                let score = (left_sq - left_sum * left_sum / k as f64)
                    + (right_sq - right_sum * right_sum / (n - k) as f64);
                if best.as_ref().is_none_or(|b| score < b.score) {
                    best = Some(BestSplit {
                        feature: f,
                        threshold: (pairs[k - 1].0 + pairs[k].0) / 2.0,
                        score,
                    });
                }
            }
        }
        best
    }
}

impl Tree {
    pub fn fit(x: &DMatrix<f64>, y: &DVector<f64>, params: TreeParams) -> Result<Tree, MlkitError> {
        let mut all = |p: usize| (0..p).collect();
        Tree::fit_with_feature_sampler(x, y, params, &mut all)
    }

    /// `sampler` picks the candidate feature set for each split; the forest
    /// passes a seeded random subset, the plain tree passes everything.
    pub(crate) fn fit_with_feature_sampler(
        x: &DMatrix<f64>,
        y: &DVector<f64>,
        params: TreeParams,
        sampler: &mut dyn FnMut(usize) -> Vec<usize>,
    ) -> Result<Tree, MlkitError> {
        if x.nrows() != y.len() {
            return Err(MlkitError::RowTargetMismatch {
                rows: x.nrows(),
                targets: y.len(),
            });
        }
        if x.nrows() < 2 {
            return Err(MlkitError::TooFewSamples { need: 2, got: x.nrows() });
        }
        if params.max_depth == 0 || params.min_leaf == 0 {
            return Err(MlkitError::BadHyperparameter(
                "tree needs max_depth >= 1 and min_leaf >= 1".into(),
            ));
        }
        let idx: Vec<usize> = (0..x.nrows()).collect();
        let mut b = Builder { x, y, params, sampler };
        let root = b.build(&idx, 0);
        Ok(Tree {
            params,
            input_dim: x.ncols(),
            root,
        })
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf(v) => return *v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if row[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<DVector<f64>, MlkitError> {
        if x.ncols() != self.input_dim {
            return Err(MlkitError::DimensionMismatch {
                expect: self.input_dim,
                got: x.ncols(),
            });
        }
        Ok(DVector::from_fn(x.nrows(), |r, _| {
            let row: Vec<f64> = x.row(r).iter().cloned().collect();
            self.predict_row(&row)
        }))
    }
}
