//! Least-squares autoregressive fits.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArFit {
    /// Intercept; zero when fitted without one.
    pub phi0: f64,
    /// φ₁..φ_k, coefficient of x_{t−i} at index i − 1.
    pub phi: Vec<f64>,
}

impl ArFit {
    /// φ_i with 1-based lag index.
    pub fn coef(&self, i: usize) -> Option<f64> {
        i.checked_sub(1).and_then(|j| self.phi.get(j).copied())
    }
}

/// Ordinary least squares of x_t on (1, x_{t−1}, …, x_{t−k}).
pub fn ar_fit(signal: &[f64], k: usize, with_intercept: bool) -> Result<ArFit> {
    if k == 0 {
        return Err(Error::invalid("AR order must be at least 1"));
    }
    let n = signal.len();
    if n < k + 2 {
        return Err(Error::invalid(format!(
            "AR({k}) needs at least {} samples, got {n}",
            k + 2
        )));
    }
    let rows = n - k;
    let cols = k + usize::from(with_intercept);
    if rows < cols {
        return Err(Error::undefined(format!("AR({k}): {rows} equations for {cols} unknowns")));
    }
    let off = usize::from(with_intercept);
    let design = DMatrix::from_fn(rows, cols, |r, c| {
        let t = r + k;
        if with_intercept && c == 0 {
            1.0
        } else {
            signal[t - (c + 1 - off)]
        }
    });
    let target = DVector::from_iterator(rows, signal[k..].iter().copied());

    let svd = design.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || smin <= smax * 1e-11 * (rows.max(cols) as f64) {
        return Err(Error::undefined(format!(
            "rank-deficient AR({k}) design (condition {:.3e})",
            if smin > 0.0 { smax / smin } else { f64::INFINITY }
        )));
    }
    let beta = svd
        .solve(&target, 0.0)
        .map_err(|e| Error::undefined(format!("AR solve failed: {e}")))?;
    let phi0 = if with_intercept { beta[0] } else { 0.0 };
    Ok(ArFit {
        phi0,
        phi: beta.iter().skip(off).copied().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ar1_recursion() {
        let mut x = vec![1.0];
        for _ in 1..100 {
            let last = *x.last().unwrap();
            x.push(0.5 * last);
        }
        let fit = ar_fit(&x, 1, false).unwrap();
        assert!((fit.phi[0] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn ar2_recursion_with_intercept() {
        let mut x = vec![1.0, -0.3];
        for t in 2..200 {
            let v = 0.2 + 0.75 * x[t - 1] - 0.125 * x[t - 2];
            x.push(v);
        }
        let fit = ar_fit(&x, 2, true).unwrap();
        assert!((fit.phi0 - 0.2).abs() < 1e-9);
        assert!((fit.phi[0] - 0.75).abs() < 1e-9);
        assert!((fit.phi[1] + 0.125).abs() < 1e-9);
        assert_eq!(fit.coef(2), Some(fit.phi[1]));
        assert_eq!(fit.coef(0), None);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(ar_fit(&[1.0, 2.0, 3.0], 2, false).is_err());
        assert!(matches!(ar_fit(&[2.0; 50], 3, true), Err(Error::Undefined(_))));
    }
}
