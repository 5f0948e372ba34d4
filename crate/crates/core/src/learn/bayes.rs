//! Gaussian-process Bayesian optimization with expected improvement.
//!
//! Inputs are encoded into the unit cube (categorical axes one-hot); the
//! squared-exponential kernel's length scale and signal variance are
//! chosen per iteration by maximizing the log marginal likelihood over a
//! fixed 8×8 grid, with observation noise 1e-6 on standardized targets.
//! EI is maximized over 1,024 Halton points given a fresh random
//! Cranley–Patterson shift each iteration.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Axis {
    Real { name: String, low: f64, high: f64 },
    Integer { name: String, low: i64, high: i64 },
    Categorical { name: String, choices: Vec<String> },
}

impl Axis {
    pub fn name(&self) -> &str {
        match self {
            Axis::Real { name, .. } | Axis::Integer { name, .. } | Axis::Categorical { name, .. } => name,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            Axis::Real { low, high, .. } => low.is_finite() && high.is_finite() && low < high,
            Axis::Integer { low, high, .. } => low <= high,
            Axis::Categorical { choices, .. } => !choices.is_empty(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("axis {} has an empty range", self.name())))
        }
    }

    /// Natural-unit value from a unit-interval coordinate.
    fn decode(&self, u: f64) -> f64 {
        match self {
            Axis::Real { low, high, .. } => low + u * (high - low),
            Axis::Integer { low, high, .. } => {
                let span = (high - low + 1) as f64;
                (*low as f64 + (u * span).floor()).min(*high as f64)
            }
            Axis::Categorical { choices, .. } => ((u * choices.len() as f64).floor()).min(choices.len() as f64 - 1.0),
        }
    }

    fn encode(&self, z: f64, out: &mut Vec<f64>) {
        match self {
            Axis::Real { low, high, .. } => out.push((z - low) / (high - low)),
            Axis::Integer { low, high, .. } => out.push(if high > low {
                (z - *low as f64) / (high - low) as f64
            } else {
                0.0
            }),
            Axis::Categorical { choices, .. } => {
                out.extend((0..choices.len()).map(|c| f64::from(u8::from(c as f64 == z))));
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesResult {
    /// Best observed point in natural units (categorical axes as choice index).
    pub best_z: Vec<f64>,
    pub best_y: f64,
    pub history: Vec<(Vec<f64>, f64)>,
}

const PRIMES: [u32; 24] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89];
pub const N_CANDIDATES: usize = 1024;
const NOISE: f64 = 1e-6;

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % b) as f64;
        i /= b;
    }
    r
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

struct Gp {
    x: Vec<Vec<f64>>,
    chol: Cholesky<f64, nalgebra::Dyn>,
    alpha: DVector<f64>,
    length: f64,
    signal: f64,
}

impl Gp {
    fn fit(x: &[Vec<f64>], y: &DVector<f64>) -> Option<Gp> {
        let n = x.len();
        let mut best: Option<(f64, Gp)> = None;
        for li in 0..8 {
            // length scales 0.05 … 2 and signal variances 0.1 … 10, log-spaced
            let length = 0.05 * (2.0f64 / 0.05).powf(li as f64 / 7.0);
            for si in 0..8 {
                let signal = 0.1 * 100f64.powf(si as f64 / 7.0);
                let k = DMatrix::from_fn(n, n, |i, j| {
                    signal * (-sq_dist(&x[i], &x[j]) / (2.0 * length * length)).exp() + if i == j { NOISE } else { 0.0 }
                });
                let Some(chol) = Cholesky::new(k) else { continue };
                let alpha = chol.solve(y);
                let log_det: f64 = chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum();
                let lml = -0.5 * y.dot(&alpha) - log_det - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
                if best.as_ref().is_none_or(|(b, _)| lml > *b) {
                    best = Some((
                        lml,
                        Gp {
                            x: x.to_vec(),
                            chol,
                            alpha,
                            length,
                            signal,
                        },
                    ));
                }
            }
        }
        best.map(|(_, g)| g)
    }

    fn predict(&self, q: &[f64]) -> (f64, f64) {
        let ks = DVector::from_iterator(
            self.x.len(),
            self.x.iter().map(|xi| self.signal * (-sq_dist(xi, q) / (2.0 * self.length * self.length)).exp()),
        );
        let mean = ks.dot(&self.alpha);
        let v = self.chol.l().solve_lower_triangular(&ks).expect("triangular factor is nonsingular");
        let var = (self.signal + NOISE - v.dot(&v)).max(0.0);
        (mean, var.sqrt())
    }
}

fn expected_improvement(mean: f64, sd: f64, best: f64) -> f64 {
    let imp = mean - best;
    if sd <= 1e-12 {
        return imp.max(0.0);
    }
    let z = imp / sd;
    let cdf = 0.5 * (1.0 + libm::erf(z / std::f64::consts::SQRT_2));
    let pdf = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    imp * cdf + sd * pdf
}

/// Maximizes `objective` over the box/categorical space.
pub fn bayes_opt(
    mut objective: impl FnMut(&[f64]) -> f64,
    space: &[Axis],
    n_init: usize,
    n_iter: usize,
    seed: u64,
) -> Result<BayesResult> {
    if space.is_empty() {
        return Err(Error::invalid("empty search space"));
    }
    if space.len() > PRIMES.len() {
        return Err(Error::invalid(format!("at most {} axes are supported", PRIMES.len())));
    }
    if n_init < 2 {
        return Err(Error::invalid("n_init must be at least 2"));
    }
    space.iter().try_for_each(Axis::validate)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let decode = |u: &[f64]| space.iter().zip(u).map(|(a, &ui)| a.decode(ui)).collect::<Vec<f64>>();
    let encode = |z: &[f64]| {
        let mut out = Vec::new();
        for (a, &zi) in space.iter().zip(z) {
            a.encode(zi, &mut out);
        }
        out
    };

    let mut history: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut evaluate = |z: Vec<f64>, history: &mut Vec<(Vec<f64>, f64)>| -> Result<()> {
        let y = objective(&z);
        if !y.is_finite() {
            return Err(Error::invalid(format!("objective returned {y} at {z:?}")));
        }
        history.push((z, y));
        Ok(())
    };
    for _ in 0..n_init {
        let u: Vec<f64> = (0..space.len()).map(|_| rng.random::<f64>()).collect();
        evaluate(decode(&u), &mut history)?;
    }
    for _ in 0..n_iter {
        let ys: Vec<f64> = history.iter().map(|h| h.1).collect();
        let mean = ys.iter().sum::<f64>() / ys.len() as f64;
        let sd = (ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / ys.len() as f64).sqrt();
        let sd = if sd > 0.0 { sd } else { 1.0 };
        let y = DVector::from_iterator(ys.len(), ys.iter().map(|y| (y - mean) / sd));
        let x: Vec<Vec<f64>> = history.iter().map(|h| encode(&h.0)).collect();
        let gp = Gp::fit(&x, &y).ok_or_else(|| Error::undefined("GP kernel matrix is not positive definite"))?;
        let best = y.max();
        let shift: Vec<f64> = (0..space.len()).map(|_| rng.random::<f64>()).collect();
        let mut choice: Option<(f64, Vec<f64>)> = None;
        for i in 1..=N_CANDIDATES as u64 {
            let u: Vec<f64> = shift
                .iter()
                .zip(PRIMES)
                .map(|(s, p)| (radical_inverse(i, p) + s).fract())
                .collect();
            let z = decode(&u);
            let (m, s) = gp.predict(&encode(&z));
            let ei = expected_improvement(m, s, best);
            if choice.as_ref().is_none_or(|(b, _)| ei > *b) {
                choice = Some((ei, z));
            }
        }
        let (_, z) = choice.expect("candidate set is nonempty");
        evaluate(z, &mut history)?;
    }
    let mut best = 0;
    for (i, h) in history.iter().enumerate() {
        if h.1 > history[best].1 {
            best = i;
        }
    }
    Ok(BayesResult {
        best_z: history[best].0.clone(),
        best_y: history[best].1,
        history,
    })
}
