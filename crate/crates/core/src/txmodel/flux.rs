//! Closed-form flux and phase-shifter identities.

use crate::error::{Error, Result};

/// Core flux after energization at switching instant `t_switch_s`:
/// Φ(t) = Φ_R + Φ_m·cos ωt′ − Φ_m·cos ω(t + t′).
pub fn inrush_flux(phi_r: f64, phi_m: f64, t_switch_s: f64, t_s: f64, omega: f64) -> f64 {
    phi_r + phi_m * (omega * t_switch_s).cos() - phi_m * (omega * (t_s + t_switch_s)).cos()
}

/// Flux increment per cycle driving sympathetic inrush:
/// ∫ [(R_sys + R_par)·i1 + R_sys·i2] dt over one cycle, trapezoidal.
pub fn sympathetic_flux_increment(
    r_sys: f64,
    r_par: f64,
    i1_cycle: &[f64],
    i2_cycle: &[f64],
    dt_s: f64,
) -> Result<f64> {
    if i1_cycle.len() != i2_cycle.len() {
        return Err(Error::invalid(format!(
            "current sequences differ in length ({} vs {})",
            i1_cycle.len(),
            i2_cycle.len()
        )));
    }
    if i1_cycle.len() < 2 {
        return Err(Error::invalid("need at least two samples to integrate"));
    }
    if !(dt_s > 0.0) {
        return Err(Error::invalid("dt_s must be positive"));
    }
    let g = |k: usize| (r_sys + r_par) * i1_cycle[k] + r_sys * i2_cycle[k];
    let n = i1_cycle.len();
    let inner: f64 = (1..n - 1).map(g).sum();
    Ok(dt_s * (0.5 * (g(0) + g(n - 1)) + inner))
}

/// Quadrature voltage magnitude needed for a phase shift α: ΔV = 2·V·sin(α/2).
pub fn quadrature_voltage(v_ph: f64, alpha_deg: f64) -> Result<f64> {
    if alpha_deg.abs() > 180.0 {
        return Err(Error::invalid("|alpha_deg| must not exceed 180"));
    }
    Ok(v_ph * 2.0 * (alpha_deg.to_radians() / 2.0).sin())
}

/// Real power through a line with a phase-angle regulator in series:
/// P = V_s·V_l / (X_line + X_par) · sin(δ + α).
pub fn par_power(v_s: f64, v_l: f64, x_line: f64, x_par: f64, delta_deg: f64, alpha_deg: f64) -> Result<f64> {
    let x = x_line + x_par;
    if !(x > 0.0) {
        return Err(Error::invalid("total reactance must be positive"));
    }
    Ok(v_s * v_l / x * (delta_deg + alpha_deg).to_radians().sin())
}
