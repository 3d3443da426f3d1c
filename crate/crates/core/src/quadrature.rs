//! Trapezoidal quadrature on uniform grids.

use num_complex::Complex64;

/// Trapezoidal weight of node `i` among `n` nodes spaced by `dx`.
#[inline]
pub fn trapezoid_weight(i: usize, n: usize, dx: f64) -> f64 {
    if n == 1 {
        0.0
    } else if i == 0 || i + 1 == n {
        0.5 * dx
    } else {
        dx
    }
}

/// ∫|f|² dx by the trapezoidal rule.
pub fn trapezoid_norm(values: &[Complex64], dx: f64) -> f64 {
    let n = values.len();
    values
        .iter()
        .enumerate()
        .map(|(i, v)| trapezoid_weight(i, n, dx) * v.norm_sqr())
        .sum()
}

/// ∫ f* g dx by the trapezoidal rule over the common length.
pub fn trapezoid_inner(f: &[Complex64], g: &[Complex64], dx: f64) -> Complex64 {
    let n = f.len().min(g.len());
    f.iter()
        .zip(g)
        .enumerate()
        .map(|(i, (a, b))| a.conj() * b * trapezoid_weight(i, n, dx))
        .sum()
}

/// ∫ f dx by the trapezoidal rule.
pub fn trapezoid(values: &[f64], dx: f64) -> f64 {
    let n = values.len();
    values
        .iter()
        .enumerate()
        .map(|(i, v)| trapezoid_weight(i, n, dx) * v)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn zero_series_has_zero_norm() {
        assert_eq!(trapezoid_norm(&[Complex64::new(0.0, 0.0); 7], 0.1), 0.0);
    }

    #[test]
    fn single_interior_sample() {
        let mut v = vec![Complex64::new(0.0, 0.0); 9];
        v[4] = Complex64::new(3.0, -4.0);
        assert_relative_eq!(trapezoid_norm(&v, 0.01), 25.0 * 0.01);
    }

    #[test]
    fn integrates_linear_exactly() {
        let v: Vec<f64> = (0..11).map(|i| 2.0 * i as f64 * 0.1 + 1.0).collect();
        assert_relative_eq!(trapezoid(&v, 0.1), 2.0, epsilon = 1e-14);
    }

    proptest! {
        #[test]
        fn norm_is_nonnegative(v in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..40),
                               dx in 1e-4f64..1.0) {
            let v: Vec<_> = v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect();
            prop_assert!(trapezoid_norm(&v, dx) >= 0.0);
            let inner = trapezoid_inner(&v, &v, dx);
            prop_assert!((inner.re - trapezoid_norm(&v, dx)).abs() <= 1e-12 * (1.0 + inner.re));
        }
    }
}
