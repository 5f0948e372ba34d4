//! Time-domain solution of magnetically coupled RL coils.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::matrices::InductanceMatrix;
use crate::error::{Error, Result};

/// Per-coil current traces on a uniform time grid starting at t = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledTrace {
    pub t: Vec<f64>,
    /// `currents[k][n]` is the current in coil k at `t[n]`.
    pub currents: Vec<Vec<f64>>,
    /// Energy delivered by the sources minus resistive losses, per step.
    pub net_energy: Vec<f64>,
}

impl CoupledTrace {
    /// Magnetic energy ½·iᵀLi at sample `n`.
    pub fn stored_energy(&self, l: &InductanceMatrix, n: usize) -> f64 {
        let k = l.order();
        let mut e = 0.0;
        for a in 0..k {
            for b in 0..k {
                e += self.currents[a][n] * l.get(a, b) * self.currents[b][n];
            }
        }
        0.5 * e
    }
}

/// Integrates v = R·i + L·di/dt from i(0) = 0 with the trapezoidal rule.
///
/// `sources[k]` gives the voltage applied to coil k as a function of time.
pub fn simulate_coupled(
    l: &InductanceMatrix,
    series_resistance: &[f64],
    sources: &[&dyn Fn(f64) -> f64],
    duration_s: f64,
    dt_s: f64,
) -> Result<CoupledTrace> {
    let k = l.order();
    if series_resistance.len() != k || sources.len() != k {
        return Err(Error::invalid(format!(
            "expected {k} resistances and sources, got {} and {}",
            series_resistance.len(),
            sources.len()
        )));
    }
    if series_resistance.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
        return Err(Error::invalid("resistances must be finite and non-negative"));
    }
    if !(dt_s > 0.0 && duration_s > 0.0 && dt_s <= duration_s) {
        return Err(Error::invalid("need 0 < dt_s <= duration_s"));
    }
    let steps = (duration_s / dt_s).round() as usize;

    let lm = l.to_dmatrix();
    let r = DMatrix::from_diagonal(&DVector::from_column_slice(series_resistance));
    let lhs = &lm + &r * (0.5 * dt_s);
    let rhs_m = &lm - &r * (0.5 * dt_s);
    let lu = lhs.lu();
    // scale-aware singularity check on the pivots
    let u = lu.u();
    let scale = lm.amax().max(r.amax() * dt_s).max(f64::MIN_POSITIVE);
    if (0..k).any(|d| u[(d, d)].abs() <= 1e-13 * scale) {
        return Err(Error::invalid(
            "inductance matrix is singular and resistance does not regularize it",
        ));
    }

    let mut t = Vec::with_capacity(steps + 1);
    let mut currents = vec![Vec::with_capacity(steps + 1); k];
    let mut net_energy = Vec::with_capacity(steps + 1);
    let mut i = DVector::<f64>::zeros(k);
    let volts = |time: f64| DVector::from_iterator(k, sources.iter().map(|s| s(time)));
    let mut v_prev = volts(0.0);
    let mut energy = 0.0;
    t.push(0.0);
    net_energy.push(0.0);
    for (c, trace) in currents.iter_mut().enumerate() {
        trace.push(i[c]);
    }
    for n in 1..=steps {
        let time = n as f64 * dt_s;
        let v = volts(time);
        let rhs = &rhs_m * &i + (&v_prev + &v) * (0.5 * dt_s);
        let i_next = lu.solve(&rhs).ok_or_else(|| Error::invalid("singular system"))?;
        // power balance in the midpoint form the trapezoidal rule conserves
        let i_sum = &i + &i_next;
        energy += 0.25 * dt_s * (i_sum.dot(&(&v_prev + &v)) - i_sum.dot(&(&r * &i_sum)));
        i = i_next;
        v_prev = v;
        t.push(time);
        net_energy.push(energy);
        for (c, trace) in currents.iter_mut().enumerate() {
            trace.push(i[c]);
        }
    }
    Ok(CoupledTrace {
        t,
        currents,
        net_energy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::txmodel::matrices::{two_winding_matrix, TwoWindingParams, WindingFaultSpec};

    #[test]
    fn zero_source_gives_zero_current() {
        let l = InductanceMatrix::from_rows(&[vec![0.1, 0.05], vec![0.05, 0.2]]).unwrap();
        let zero = |_: f64| 0.0;
        let tr = simulate_coupled(&l, &[1.0, 1.0], &[&zero, &zero], 0.05, 1e-4).unwrap();
        assert!(tr.currents.iter().flatten().all(|&x| x == 0.0));
    }

    #[test]
    fn rl_step_response() {
        let (lv, rv, v) = (0.1, 2.0, 10.0);
        let l = InductanceMatrix::from_rows(&[vec![lv]]).unwrap();
        let step = |_: f64| v;
        let tau = lv / rv;
        let tr = simulate_coupled(&l, &[rv], &[&step], 3.0 * tau, tau / 2000.0).unwrap();
        let end = *tr.currents[0].last().unwrap();
        let exact = v / rv * (1.0 - (-3.0f64).exp());
        assert!((end - exact).abs() / exact < 5e-3, "{end} vs {exact}");
    }

    #[test]
    fn lossless_energy_balance() {
        let p = TwoWindingParams {
            mva: 100.0,
            v1: 138.0,
            v2: 69.0,
            f: 60.0,
            im: 0.1,
            xl: 0.12,
        };
        let l = two_winding_matrix(&p, &WindingFaultSpec::new(40.0, 70.0).unwrap()).unwrap();
        let w = 2.0 * std::f64::consts::PI * 60.0;
        let s1 = move |t: f64| (w * t).sin();
        let s2 = move |t: f64| 0.5 * (w * t).cos();
        let zero = |_: f64| 0.0;
        let srcs: [&dyn Fn(f64) -> f64; 4] = [&s1, &zero, &s2, &zero];
        let tr = simulate_coupled(&l, &[0.0; 4], &srcs, 0.045, 1.0 / 6000.0).unwrap();
        let n = tr.t.len() - 1;
        let stored = tr.stored_energy(&l, n);
        let delivered = tr.net_energy[n];
        assert!((stored - delivered).abs() <= 0.01 * stored.abs().max(1e-30), "{stored} {delivered}");
    }

    #[test]
    fn singular_without_resistance_is_rejected() {
        let p = TwoWindingParams {
            mva: 100.0,
            v1: 138.0,
            v2: 69.0,
            f: 60.0,
            im: 0.1,
            xl: 0.12,
        };
        let l = two_winding_matrix(&p, &WindingFaultSpec::new(100.0, 50.0).unwrap()).unwrap();
        let zero = |_: f64| 0.0;
        let srcs: [&dyn Fn(f64) -> f64; 4] = [&zero, &zero, &zero, &zero];
        assert!(simulate_coupled(&l, &[0.0; 4], &srcs, 0.01, 1e-4).is_err());
        assert!(simulate_coupled(&l, &[1.0; 4], &srcs, 0.01, 1e-4).is_ok());
    }
}
