//! Regression accuracy metrics. Percentage errors skip zero targets (a
//! percentage of nothing is undefined); the skip count is reported so
//! callers can notice when it matters.

use crate::MlkitError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionMetrics {
    /// Mean |(pred - true) / true| over nonzero targets.
    pub mape: f64,
    /// Max of the same.
    pub max_ape: f64,
    pub r2: f64,
    pub excluded_zero_targets: usize,
}

pub fn regression_metrics(
    y_true: &[f64],
    y_pred: &[f64],
) -> Result<RegressionMetrics, MlkitError> {
    if y_true.len() != y_pred.len() {
        return Err(MlkitError::RowTargetMismatch {
            rows: y_true.len(),
            targets: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(MlkitError::TooFewSamples { need: 1, got: 0 });
    }

    let mut ape_sum = 0.0;
    let mut ape_max = 0.0f64;
    let mut counted = 0usize;
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t == 0.0 {
            continue;
        }
        let ape = ((p - t) / t).abs();
        ape_sum += ape;
        ape_max = ape_max.max(ape);
        counted += 1;
    }
    if counted == 0 {
        return Err(MlkitError::AllZeroTargets);
    }

    let n = y_true.len() as f64;
    let mean = y_true.iter().sum::<f64>() / n;
    let ss_tot: f64 = y_true.iter().map(|t| (t - mean).powi(2)).sum();
    let ss_res: f64 = y_true
        .iter()
        .zip(y_pred)
        .map(|(t, p)| (t - p).powi(2))
        .sum();
    let r2 = if ss_tot == 0.0 {
        if ss_res == 0.0 {
            1.0
        } else {
            f64::NEG_INFINITY
        }
    } else {
        1.0 - ss_res / ss_tot
    };

    Ok(RegressionMetrics {
        mape: ape_sum / counted as f64,
        max_ape: ape_max,
        r2,
        excluded_zero_targets: y_true.len() - counted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_prediction_scores_zero_error_and_unit_r2() {
        let y = [3.0, 5.0, 9.0];
        let m = regression_metrics(&y, &y).unwrap();
        assert_eq!(m.mape, 0.0);
        assert_eq!(m.max_ape, 0.0);
        assert_eq!(m.r2, 1.0);
        assert_eq!(m.excluded_zero_targets, 0);
    }

    #[test]
    fn two_percent_off_is_two_percent() {
        let m = regression_metrics(&[100.0], &[98.0]).unwrap();
        assert_eq!(m.mape, 0.02);
        assert_eq!(m.max_ape, 0.02);
    }

    #[test]
    fn zero_targets_are_skipped_and_counted() {
        let m = regression_metrics(&[0.0, 10.0], &[5.0, 11.0]).unwrap();
        assert_eq!(m.excluded_zero_targets, 1);
        assert!((m.mape - 0.1).abs() < 1e-15);
    }

    #[test]
    fn all_zero_targets_is_an_error() {
        assert_eq!(
            regression_metrics(&[0.0, 0.0], &[1.0, 2.0]),
            Err(MlkitError::AllZeroTargets)
        );
    }

    #[test]
    fn matches_an_independent_recomputation_on_a_random_case() {
        // Fixed pseudo-random data; oracle written as directly as possible.
        let y_true: Vec<f64> = (1..=100).map(|i| (i * i % 97 + 1) as f64).collect();
        let y_pred: Vec<f64> = y_true
            .iter()
            .enumerate()
            .map(|(i, t)| t * (1.0 + ((i as f64).sin()) * 0.05))
            .collect();
        let m = regression_metrics(&y_true, &y_pred).unwrap();

        let apes: Vec<f64> = y_true
            .iter()
            .zip(&y_pred)
            .map(|(t, p)| ((p - t) / t).abs())
            .collect();
        let mape = apes.iter().sum::<f64>() / apes.len() as f64;
        let max_ape = apes.iter().cloned().fold(0.0f64, f64::max);
        let mean = y_true.iter().sum::<f64>() / 100.0;
        let r2 = 1.0
            - y_true
                .iter()
                .zip(&y_pred)
                .map(|(t, p)| (t - p) * (t - p))
                .sum::<f64>()
                / y_true.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>();

        assert!((m.mape - mape).abs() < 1e-12);
        assert!((m.max_ape - max_ape).abs() < 1e-12);
        assert!((m.r2 - r2).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn mape_nonnegative_and_r2_at_most_one(
            ys in proptest::collection::vec((1.0f64..1e6, -1e6f64..1e6), 1..40)
        ) {
            let (t, p): (Vec<f64>, Vec<f64>) = ys.into_iter().unzip();
            let m = regression_metrics(&t, &p).unwrap();
            prop_assert!(m.mape >= 0.0);
            prop_assert!(m.max_ape >= m.mape);
            prop_assert!(m.r2 <= 1.0);
        }
    }
}
