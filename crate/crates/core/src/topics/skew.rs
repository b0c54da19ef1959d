/// Pearson's second skewness coefficient, `3 (mean − median) / σ`, with the
/// population standard deviation. Returns 0 when σ = 0. The median of an
/// even-length vector is the mean of the two middle values.
pub fn skewness(probs: &[f64]) -> f64 {
    let n = probs.len();
    if n == 0 {
        return 0.0;
    }
    let mut sorted = probs.to_vec();
    sorted.sort_by(f64::total_cmp);
    // A constant vector has σ = 0, but its rounded mean can sit one ulp off
    // the entries and leave a spurious σ ≈ 1e-17.
    if sorted[0] == sorted[n - 1] {
        return 0.0;
    }
    let mean = probs.iter().sum::<f64>() / n as f64;
    let var = probs.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / n as f64;
    let sd = var.sqrt();
    if sd == 0.0 {
        return 0.0;
    }
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    3.0 * (mean - median) / sd
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_vectors_are_exactly_zero() {
        for k in 2..=20 {
            assert_eq!(skewness(&vec![1.0 / k as f64; k]), 0.0, "k = {k}");
        }
    }

    #[test]
    fn hand_computed_cases() {
        assert_eq!(skewness(&[0.5, 0.5]), 0.0);
        // μ = 0.2, M = 0.1, σ = sqrt(0.063)
        assert!((skewness(&[0.7, 0.1, 0.1, 0.05, 0.05]) - 0.3 / 0.063f64.sqrt()).abs() < 1e-12);
        assert!((skewness(&[0.7, 0.1, 0.1, 0.05, 0.05]) - 1.1952).abs() < 1e-3);
        // μ = 0.2, M = 0.3, σ = sqrt(0.015)
        assert!((skewness(&[0.3, 0.3, 0.3, 0.05, 0.05]) - (-2.4495)).abs() < 1e-3);
    }

    #[test]
    fn two_topics_are_never_skewed() {
        for a in [0.0, 0.1, 0.37, 0.5, 0.93] {
            assert_eq!(skewness(&[a, 1.0 - a]), 0.0);
        }
    }

    proptest! {
        #[test]
        fn sign_and_scale(raw in prop::collection::vec(0.001f64..1.0, 2..20), scale in 0.1f64..10.0) {
            let total: f64 = raw.iter().sum();
            let probs: Vec<f64> = raw.iter().map(|v| v / total).collect();
            let s = skewness(&probs);
            let mean = 1.0 / probs.len() as f64;
            let mut sorted = probs.clone();
            sorted.sort_by(f64::total_cmp);
            let n = sorted.len();
            let median = if n % 2 == 1 { sorted[n / 2] } else { (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0 };
            if (mean - median).abs() > 1e-9 {
                prop_assert_eq!(s > 0.0, mean > median);
            }
            let scaled: Vec<f64> = probs.iter().map(|p| p * scale).collect();
            prop_assert!((skewness(&scaled) - s).abs() <= 1e-9 * (1.0 + s.abs()));
        }
    }
}
