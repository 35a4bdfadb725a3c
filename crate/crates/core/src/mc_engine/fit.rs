//! Weighted polynomial fit in `x = ln ε` and evaluation at `x = 0`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct PolyFit {
    /// Ascending coefficients in `x`.
    pub coefficients: Vec<f64>,
    pub at_zero: f64,
    pub at_zero_err: f64,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Least-squares fit of `ys` against a degree-`degree` polynomial in `xs`.
///
/// Abscissae are centred and scaled to `[-1, 1]` before forming the normal
/// equations. Weights are `1/σ²` when every `σ > 0`, otherwise uniform. The
/// value at `x = 0` is a linear functional `Σ ℓᵢ yᵢ` of the data and its
/// uncertainty is `√(Σ ℓᵢ² σᵢ²)`.
pub(crate) fn fit_at_zero(xs: &[f64], ys: &[f64], sigmas: &[f64], degree: usize) -> Result<PolyFit> {
    let n = xs.len();
    let cols = degree + 1;
    if n < cols || ys.len() != n || sigmas.len() != n {
        return Err(Error::domain(format!("a degree-{degree} fit needs at least {cols} points, got {n}")));
    }
    let centre = xs.iter().sum::<f64>() / n as f64;
    let scale = xs.iter().map(|x| (x - centre).abs()).fold(0.0, f64::max);
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let ts: Vec<f64> = xs.iter().map(|x| (x - centre) / scale).collect();

    let weighted = sigmas.iter().all(|&s| s > 0.0);
    let weights: Vec<f64> = if weighted { sigmas.iter().map(|s| 1.0 / (s * s)).collect() } else { vec![1.0; n] };

    let design = DMatrix::from_fn(n, cols, |i, k| ts[i].powi(k as i32));
    let w = DMatrix::from_diagonal(&DVector::from_vec(weights));
    let normal = design.transpose() * &w * &design;
    let chol = normal.cholesky().ok_or_else(|| Error::domain("polynomial fit is singular (repeated abscissae?)"))?;

    let y = DVector::from_column_slice(ys);
    let coef_t = chol.solve(&(design.transpose() * &w * &y));

    let t0 = -centre / scale;
    let probe = DVector::from_fn(cols, |k, _| t0.powi(k as i32));
    let functional = &w * &design * chol.solve(&probe);
    let at_zero = functional.dot(&y);
    let at_zero_err = functional.iter().zip(sigmas).map(|(l, s)| (l * s).powi(2)).sum::<f64>().sqrt();

    // p(x) = Σ_k c_k ((x − centre)/scale)^k, re-expanded in powers of x.
    let mut coefficients = vec![0.0; cols];
    for (k, c) in coef_t.iter().enumerate() {
        let ck = c / scale.powi(k as i32);
        for (j, slot) in coefficients.iter_mut().enumerate().take(k + 1) {
            *slot += ck * binomial(k, j) * (-centre).powi((k - j) as i32);
        }
    }

    Ok(PolyFit { coefficients, at_zero, at_zero_err })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_quartic() {
        let poly = |x: f64| 1.5 - 2.0 * x + 0.25 * x * x - 0.01 * x.powi(3) + 0.003 * x.powi(4);
        let xs: Vec<f64> = (0..8).map(|i| -4.6 - 1.3 * i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| poly(x)).collect();
        let fit = fit_at_zero(&xs, &ys, &[0.1; 8], 4).unwrap();
        assert!((fit.at_zero - 1.5).abs() < 1e-8);
        let expected = [1.5, -2.0, 0.25, -0.01, 0.003];
        for (c, e) in fit.coefficients.iter().zip(expected) {
            assert!((c - e).abs() < 1e-8 * (1.0 + e.abs()), "{c} vs {e}");
        }
    }

    #[test]
    fn line_error_matches_textbook_formula() {
        // unweighted straight line through equal-σ points
        let xs = [-1.0, -2.0, -3.0, -4.0];
        let ys = [0.0; 4];
        let sigma = 0.5;
        let fit = fit_at_zero(&xs, &ys, &[sigma; 4], 1).unwrap();
        let mean = -2.5;
        let sxx: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
        let expected = sigma * (1.0 / 4.0 + mean * mean / sxx).sqrt();
        assert!((fit.at_zero_err - expected).abs() < 1e-12);
    }

    #[test]
    fn zero_sigmas_fall_back_to_unweighted() {
        let xs = [-1.0, -2.0, -3.0];
        let ys = [2.0, 3.0, 4.0];
        let fit = fit_at_zero(&xs, &ys, &[0.0; 3], 1).unwrap();
        assert!((fit.at_zero - 1.0).abs() < 1e-12);
        assert_eq!(fit.at_zero_err, 0.0);
    }

    #[test]
    fn too_few_points_or_repeated_abscissae() {
        assert!(fit_at_zero(&[-1.0, -2.0], &[0.0, 0.0], &[1.0, 1.0], 2).is_err());
        assert!(fit_at_zero(&[-1.0, -1.0, -1.0], &[0.0; 3], &[1.0; 3], 1).is_err());
    }
}
