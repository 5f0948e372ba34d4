//! Time-domain statistics of a single phase.

use crate::error::{Error, Result};

/// Empirical quantile with linear interpolation between order statistics
/// (position q·(n−1)).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Mean absolute consecutive change inside the amplitude corridor
/// `[quantile(ql), quantile(qh)]`. Only pairs with both samples inside
/// the corridor count; returns 0 when there are none.
pub fn change_quantile(signal: &[f64], ql: f64, qh: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&ql) || !(0.0..=1.0).contains(&qh) || ql >= qh {
        return Err(Error::invalid(format!("need 0 <= ql < qh <= 1, got ({ql}, {qh})")));
    }
    if signal.len() < 2 {
        return Ok(0.0);
    }
    let mut sorted = signal.to_vec();
    sorted.sort_by(f64::total_cmp);
    let lo = quantile(&sorted, ql);
    let hi = quantile(&sorted, qh);
    let inside = |v: f64| v >= lo && v <= hi;
    let (sum, count) = signal
        .windows(2)
        .filter(|w| inside(w[0]) && inside(w[1]))
        .fold((0.0, 0usize), |(s, c), w| (s + (w[1] - w[0]).abs(), c + 1));
    Ok(if count == 0 { 0.0 } else { sum / count as f64 })
}

/// Number of template pairs (i < j) among the first `count` templates of
/// length `len` whose Chebyshev distance is below `r`.
fn matching_pairs(x: &[f64], len: usize, count: usize, r: f64) -> u64 {
    let mut matches = 0;
    for i in 0..count {
        for j in i + 1..count {
            if (0..len).all(|k| (x[i + k] - x[j + k]).abs() < r) {
                matches += 1;
            }
        }
    }
    matches
}

/// −ln(A/B) with B counting length-m template matches and A length-(m+1)
/// matches over the same n − m starting points, self-matches excluded.
pub fn sample_entropy(signal: &[f64], m: usize, r: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::invalid("template length m must be at least 1"));
    }
    if signal.len() <= m + 1 {
        return Err(Error::invalid(format!(
            "sample entropy needs more than {} samples",
            m + 1
        )));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::invalid("tolerance r must be positive"));
    }
    let count = signal.len() - m;
    let b = matching_pairs(signal, m, count, r);
    let a = matching_pairs(signal, m + 1, count, r);
    if a == 0 || b == 0 {
        return Err(Error::undefined(format!(
            "no template matches (A = {a}, B = {b}) at r = {r}"
        )));
    }
    Ok(-(a as f64 / b as f64).ln())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    /// Population variance (divides by n).
    pub variance: f64,
    /// μ₄/σ⁴ − 3; `None` when the signal has zero variance.
    pub excess_kurtosis: Option<f64>,
}

impl Moments {
    pub fn kurtosis(&self) -> Result<f64> {
        self.excess_kurtosis
            .ok_or_else(|| Error::undefined("kurtosis of a zero-variance signal"))
    }
}

pub fn moments(signal: &[f64]) -> Result<Moments> {
    let n = signal.len();
    if n < 2 {
        return Err(Error::invalid("moments need at least two samples"));
    }
    let nf = n as f64;
    let mean = signal.iter().sum::<f64>() / nf;
    let (m2, m4) = signal.iter().fold((0.0, 0.0), |(s2, s4), &x| {
        let d = x - mean;
        let d2 = d * d;
        (s2 + d2, s4 + d2 * d2)
    });
    let variance = m2 / nf;
    let excess_kurtosis = if variance > 0.0 {
        Some((m4 / nf) / (variance * variance) - 3.0)
    } else {
        None
    };
    Ok(Moments {
        mean,
        variance,
        excess_kurtosis,
    })
}

/// Complexity-invariant distance: sqrt(Σ (x_{t+1} − x_t)²).
pub fn complexity_invariant_distance(signal: &[f64]) -> f64 {
    signal
        .windows(2)
        .map(|w| (w[1] - w[0]).powi(2))
        .sum::<f64>()
        .sqrt()
}

pub fn std_dev(signal: &[f64]) -> f64 {
    moments(signal).map(|m| m.variance.sqrt()).unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn change_quantile_examples() {
        assert_eq!(change_quantile(&[2.0; 20], 0.2, 0.8).unwrap(), 0.0);
        assert_eq!(change_quantile(&[0.0, 1.0, 0.0, 1.0], 0.0, 1.0).unwrap(), 1.0);
        assert!(change_quantile(&[1.0, 2.0], 0.8, 0.4).is_err());
        // corridor [0.6, 2.2] keeps 1, 2 and the pair (1, 2)
        let x = [0.0, 1.0, 2.0, 3.0];
        assert!((quantile(&x, 0.2) - 0.6).abs() < 1e-15);
        assert_eq!(change_quantile(&x, 0.2, 0.4).unwrap(), 0.0);
        assert_eq!(change_quantile(&x, 0.2, 0.8).unwrap(), 1.0);
    }

    #[test]
    fn sample_entropy_examples() {
        assert_eq!(sample_entropy(&[1.0; 10], 2, 0.1).unwrap(), 0.0);
        // [1,2,3] repeated: with n − m = 8 templates, B counts pairs of
        // equal length-2 templates, A of length-3 ones
        let x = [1.0, 2.0, 3.0, 1.0, 2.0, 3.0, 1.0, 2.0, 3.0, 1.0];
        // length-2 templates: 12,23,31,12,23,31,12,23 → 3+3+1 = 7 pairs
        // length-3 templates: 123,231,312,123,231,312,123,231 → 3+3+1 = 7
        assert!((sample_entropy(&x, 2, 0.5).unwrap() - 0.0).abs() < 1e-15);
        assert!(sample_entropy(&[1.0, 2.0, 3.0], 2, 0.5).is_err());
        assert!(matches!(sample_entropy(&[1.0, 5.0, 9.0, 13.0, 17.0], 1, 0.5), Err(Error::Undefined(_))));
    }

    #[test]
    fn moments_examples() {
        let c = moments(&[4.0; 6]).unwrap();
        assert_eq!(c.variance, 0.0);
        assert!(c.kurtosis().is_err());
        let alt = moments(&[1.0, -1.0, 1.0, -1.0]).unwrap();
        assert_eq!(alt.variance, 1.0);
        assert_eq!(alt.kurtosis().unwrap(), -2.0);
        assert_eq!(moments(&[0.0, 2.0]).unwrap().variance, 1.0);
    }

    #[test]
    fn cid_examples() {
        assert_eq!(complexity_invariant_distance(&[5.0; 9]), 0.0);
        let ramp: Vec<f64> = (0..=10).map(f64::from).collect();
        assert!((complexity_invariant_distance(&ramp) - 10f64.sqrt()).abs() < 1e-15);
    }
}
