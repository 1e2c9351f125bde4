//! Random forest over the regression tree. Trees all see the full training
//! rows; diversity comes from per-split feature subsampling, so a forest of
//! one tree with full subsampling is exactly the plain tree.

use crate::tree::{Tree, TreeParams};
use crate::MlkitError;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    /// Fraction of features offered to each split, in (0, 1].
    pub feature_subsample: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub params: ForestParams,
    pub input_dim: usize,
    pub trees: Vec<Tree>,
}

impl Forest {
    pub fn fit(
        x: &DMatrix<f64>,
        y: &DVector<f64>,
        params: ForestParams,
        seed: u64,
    ) -> Result<Forest, MlkitError> {
        if params.n_trees == 0 {
            return Err(MlkitError::BadHyperparameter("forest needs n_trees >= 1".into()));
        }
        if !(params.feature_subsample > 0.0 && params.feature_subsample <= 1.0) {
            return Err(MlkitError::BadHyperparameter(
                "feature_subsample must lie in (0, 1]".into(),
            ));
        }
        let tree_params = TreeParams {
            max_depth: params.max_depth,
            min_leaf: 1,
        };
        let mut trees = Vec::with_capacity(params.n_trees);
        for t in 0..params.n_trees {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let mut sampler = |p: usize| -> Vec<usize> {
                if params.feature_subsample >= 1.0 {
                    return (0..p).collect();
                }
                let k = ((params.feature_subsample * p as f64).ceil() as usize).clamp(1, p);
                let mut picked: Vec<usize> = rand::seq::index::sample(&mut rng, p, k).into_vec();
                picked.sort_unstable();
                picked
            };
            trees.push(Tree::fit_with_feature_sampler(x, y, tree_params, &mut sampler)?);
        }
        Ok(Forest {
            params,
            input_dim: x.ncols(),
            trees,
        })
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<DVector<f64>, MlkitError> {
        let mut acc = DVector::zeros(x.nrows());
        for t in &self.trees {
            acc += t.predict(x)?;
        }
        Ok(acc / self.trees.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;

    fn dataset(n: usize, p: usize, seed: u64) -> (DMatrix<f64>, DVector<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: DMatrix<f64> = DMatrix::from_fn(n, p, |_, _| rng.random_range(0.0..10.0));
        let y = DVector::from_fn(n, |r, _| x[(r, 0)] * 2.0 + x[(r, 1)].sin() * 5.0);
        (x, y)
    }

    #[test]
    fn one_full_tree_is_exactly_the_plain_tree() {
        let (x, y) = dataset(40, 5, 1);
        let f = Forest::fit(
            &x,
            &y,
            ForestParams { n_trees: 1, max_depth: 4, feature_subsample: 1.0 },
            99,
        )
        .unwrap();
        let t = Tree::fit(&x, &y, TreeParams { max_depth: 4, min_leaf: 1 }).unwrap();
        assert_eq!(f.predict(&x).unwrap(), t.predict(&x).unwrap());
    }

    #[test]
    fn same_seed_reproduces_the_forest() {
        let (x, y) = dataset(40, 6, 2);
        let params = ForestParams { n_trees: 8, max_depth: 5, feature_subsample: 0.5 };
        let a = Forest::fit(&x, &y, params, 7).unwrap();
        let b = Forest::fit(&x, &y, params, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn predictions_average_the_trees() {
        let (x, y) = dataset(30, 4, 3);
        let f = Forest::fit(
            &x,
            &y,
            ForestParams { n_trees: 5, max_depth: 3, feature_subsample: 0.6 },
            11,
        )
        .unwrap();
        let preds = f.predict(&x).unwrap();
        for r in 0..x.nrows() {
            let row = x.rows(r, 1).into_owned();
            let mean: f64 = f
                .trees
                .iter()
                .map(|t| t.predict(&row).unwrap()[0])
                .sum::<f64>()
                / f.trees.len() as f64;
            assert!((preds[r] - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_hyperparameters() {
        let (x, y) = dataset(10, 3, 4);
        assert!(Forest::fit(
            &x,
            &y,
            ForestParams { n_trees: 0, max_depth: 3, feature_subsample: 0.5 },
            0
        )
        .is_err());
        assert!(Forest::fit(
            &x,
            &y,
            ForestParams { n_trees: 2, max_depth: 3, feature_subsample: 0.0 },
            0
        )
        .is_err());
    }
}
