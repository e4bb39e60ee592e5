use super::{NumericsError, Result};

/// Tempered softmax `q_i = exp(tau*s_i) / sum_j exp(tau*s_j)`.
///
/// The maximum score is subtracted before scaling, so adding an exactly
/// representable constant to every score leaves the output bitwise unchanged.
pub fn softmax(scores: &[f64], tau: f64) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(NumericsError::EmptyPopulation);
    }
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(NumericsError::Invalid(format!("temperature {tau}")));
    }
    if !super::all_finite(scores) {
        return Err(NumericsError::NonFinite("scores"));
    }
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut q: Vec<f64> = scores.iter().map(|s| (tau * (s - max)).exp()).collect();
    let total: f64 = q.iter().sum();
    for v in &mut q {
        *v /= total;
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn equal_scores_are_uniform() {
        let q = softmax(&[5.0, 5.0, 5.0], 3.0).unwrap();
        for v in q {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_temperature_is_uniform() {
        let q = softmax(&[-3.0, 0.5, 100.0, 2.0], 0.0).unwrap();
        assert!(q.iter().all(|&v| v == 0.25));
    }

    #[test]
    fn two_point_example() {
        // e/(1+e) by hand
        let q = softmax(&[1.0, 2.0], 1.0).unwrap();
        assert!((q[0] - 0.26894).abs() < 1e-5);
        assert!((q[1] - 0.73106).abs() < 1e-5);
    }

    #[test]
    fn empty_is_an_error() {
        assert_eq!(softmax(&[], 1.0), Err(NumericsError::EmptyPopulation));
    }

    #[test]
    fn extreme_gap_does_not_overflow() {
        let q = softmax(&[0.0, 1e6], 5.0).unwrap();
        assert_eq!(q, vec![0.0, 1.0]);
    }

    proptest! {
        #[test]
        fn sums_to_one_and_in_unit_interval(
            scores in prop::collection::vec(-50.0f64..50.0, 1..40),
            tau in 0.0f64..20.0,
        ) {
            let q = softmax(&scores, tau).unwrap();
            let total: f64 = q.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            // entries can underflow to 0 only for scores far below the max
            prop_assert!(q.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }

        #[test]
        fn bitwise_shift_invariance(
            scores in prop::collection::vec(-1000i32..1000, 1..40),
            shift in -100_000i32..100_000,
            tau in 0.0f64..5.0,
        ) {
            let s: Vec<f64> = scores.iter().map(|&v| v as f64 / 8.0).collect();
            let shifted: Vec<f64> = s.iter().map(|v| v + shift as f64).collect();
            prop_assert_eq!(softmax(&s, tau).unwrap(), softmax(&shifted, tau).unwrap());
        }

        #[test]
        fn monotone_in_score(
            scores in prop::collection::vec(-10.0f64..10.0, 2..30),
            tau in 0.001f64..10.0,
        ) {
            let q = softmax(&scores, tau).unwrap();
            for i in 0..scores.len() {
                for j in 0..scores.len() {
                    if scores[i] >= scores[j] {
                        prop_assert!(q[i] >= q[j]);
                    }
                }
            }
        }
    }
}
