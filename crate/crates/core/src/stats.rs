//! Small numeric helpers, generic over the scalar type.

use num_traits::Float;

/// Arithmetic mean. Returns zero for an empty slice.
pub fn mean<F: Float>(values: &[F]) -> F {
    if values.is_empty() {
        return F::zero();
    }
    let sum = values.iter().fold(F::zero(), |a, &b| a + b);
    sum / F::from(values.len()).unwrap()
}

/// Population standard deviation. Returns zero for fewer than two values.
pub fn stddev<F: Float>(values: &[F]) -> F {
    if values.len() < 2 {
        return F::zero();
    }
    let m = mean(values);
    let var = values
        .iter()
        .fold(F::zero(), |a, &b| a + (b - m) * (b - m))
        / F::from(values.len()).unwrap();
    var.sqrt()
}

/// `count` points spaced evenly on a log scale over `[lo, hi]` inclusive.
pub fn log_spaced<F: Float>(lo: F, hi: F, count: usize) -> Vec<F> {
    assert!(count >= 2, "log spacing needs at least the two endpoints");
    assert!(lo > F::zero() && hi > lo);
    let (llo, lhi) = (lo.ln(), hi.ln());
    let step = (lhi - llo) / F::from(count - 1).unwrap();
    (0..count)
        .map(|k| (llo + step * F::from(k).unwrap()).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_stddev_basics() {
        assert_eq!(mean::<f64>(&[]), 0.0);
        assert_eq!(mean(&[2.0_f64, 4.0]), 3.0);
        assert_eq!(stddev(&[5.0_f64]), 0.0);
        // population stddev of {1,3} is 1
        assert!((stddev(&[1.0_f64, 3.0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_spacing_hits_endpoints() {
        let v = log_spaced(100.0_f64, 100_000.0, 10);
        assert_eq!(v.len(), 10);
        assert!((v[0] - 100.0).abs() < 1e-9);
        assert!((v[9] - 100_000.0).abs() < 1e-6);
        // also valid at f32 precision
        let w = log_spaced(0.02_f32, 0.25, 6);
        assert!((w[0] - 0.02).abs() < 1e-6);
        assert!((w[5] - 0.25).abs() < 1e-6);
    }
}
