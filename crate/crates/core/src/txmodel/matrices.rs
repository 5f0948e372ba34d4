//! Self/mutual inductance matrices of tapped 2- and 3-winding single-phase
//! transformer fault models.
//!
//! Each winding is split at a fault tap into two coils. Leakage inductance
//! is shared between the sub-coils in proportion to their turn fraction,
//! magnetizing inductance in proportion to the turn fraction squared, and
//! every pair of coils couples through the geometric mean of their
//! magnetizing inductances.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoWindingParams {
    /// Rating in MVA.
    pub mva: f64,
    /// Winding voltages in kV.
    pub v1: f64,
    pub v2: f64,
    pub f: f64,
    /// Reactive no-load current as a fraction of rated current.
    pub im: f64,
    /// Per-unit leakage reactance.
    pub xl: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThreeWindingParams {
    pub mva: f64,
    pub v1: f64,
    pub v2: f64,
    pub v3: f64,
    pub f: f64,
    pub im: f64,
    /// Pairwise short-circuit reactances, per unit.
    pub x12: f64,
    pub x13: f64,
    pub x23: f64,
}

/// Fault tap positions in percent of turns for the first two windings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindingFaultSpec {
    pub fault1_pct: f64,
    pub fault2_pct: f64,
}

impl WindingFaultSpec {
    pub fn new(fault1_pct: f64, fault2_pct: f64) -> Result<Self> {
        check_pct("fault1_pct", fault1_pct)?;
        check_pct("fault2_pct", fault2_pct)?;
        Ok(Self {
            fault1_pct,
            fault2_pct,
        })
    }
}

fn check_pct(name: &str, v: f64) -> Result<()> {
    if !(0.0..=100.0).contains(&v) {
        return Err(Error::invalid(format!("{name} = {v} outside [0, 100]")));
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::invalid(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

impl TwoWindingParams {
    pub fn validate(&self) -> Result<()> {
        for (n, v) in [
            ("mva", self.mva),
            ("v1", self.v1),
            ("v2", self.v2),
            ("f", self.f),
            ("im", self.im),
            ("xl", self.xl),
        ] {
            check_positive(n, v)?;
        }
        if self.im >= 1.0 {
            return Err(Error::invalid("im must be below 1"));
        }
        Ok(())
    }
}

impl ThreeWindingParams {
    pub fn validate(&self) -> Result<()> {
        for (n, v) in [
            ("mva", self.mva),
            ("v1", self.v1),
            ("v2", self.v2),
            ("v3", self.v3),
            ("f", self.f),
            ("im", self.im),
            ("x12", self.x12),
            ("x13", self.x13),
            ("x23", self.x23),
        ] {
            check_positive(n, v)?;
        }
        if self.im >= 1.0 {
            return Err(Error::invalid("im must be below 1"));
        }
        Ok(())
    }

    /// Star-equivalent winding reactances (X1, X2, X3) from the pairwise data.
    pub fn star_reactances(&self) -> [f64; 3] {
        [
            (self.x13 - self.x23 + self.x12) / 2.0,
            (self.x23 - self.x13 + self.x12) / 2.0,
            (self.x13 - self.x12 + self.x23) / 2.0,
        ]
    }
}

/// Symmetric coil inductance matrix in henries (order 4 or 6).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InductanceMatrix {
    order: usize,
    entries: Vec<f64>,
    /// Leakage component of each diagonal entry.
    leakage: Vec<f64>,
    /// Magnetizing component of each diagonal entry.
    magnetizing: Vec<f64>,
}

impl InductanceMatrix {
    fn from_parts(leakage: Vec<f64>, magnetizing: Vec<f64>) -> Self {
        let n = leakage.len();
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                entries[i * n + j] = if i == j {
                    leakage[i] + magnetizing[i]
                } else {
                    (magnetizing[i] * magnetizing[j]).sqrt()
                };
            }
        }
        Self {
            order: n,
            entries,
            leakage,
            magnetizing,
        }
    }

    /// Arbitrary symmetric matrix, e.g. for decoupled test circuits.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("inductance matrix must be square and non-empty"));
        }
        let mut entries = Vec::with_capacity(n * n);
        for r in rows {
            entries.extend_from_slice(r);
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("inductance matrix has non-finite entries"));
        }
        let scale = entries.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        for i in 0..n {
            for j in 0..i {
                if (entries[i * n + j] - entries[j * n + i]).abs() > 1e-12 * scale {
                    return Err(Error::invalid("inductance matrix must be symmetric"));
                }
            }
        }
        let leakage = (0..n).map(|i| entries[i * n + i]).collect();
        Ok(Self {
            order: n,
            entries,
            leakage,
            magnetizing: vec![0.0; n],
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.order + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.order).map(<[f64]>::to_vec).collect()
    }

    pub fn leakage(&self) -> &[f64] {
        &self.leakage
    }

    pub fn magnetizing(&self) -> &[f64] {
        &self.magnetizing
    }

    pub fn to_dmatrix(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_slice(self.order, self.order, &self.entries)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// 4×4 matrix of a 2-winding transformer with one tap per winding.
///
/// Coil order: winding-1 part a, part b, winding-2 part c, part d.
pub fn two_winding_matrix(p: &TwoWindingParams, f: &WindingFaultSpec) -> Result<InductanceMatrix> {
    p.validate()?;
    check_pct("fault1_pct", f.fault1_pct)?;
    check_pct("fault2_pct", f.fault2_pct)?;
    let fa = f.fault1_pct * 0.01;
    let fb = 1.0 - fa;
    let fc = f.fault2_pct * 0.01;
    let fd = 1.0 - fc;
    let i1 = p.mva / p.v1;
    let i2 = p.mva / p.v2;
    let z1 = p.v1 / i1;
    let z2 = p.v2 / i2;
    let w = 2.0 * PI * p.f;
    let l1 = p.v1 / (w * p.im * i1);
    let l2 = p.v2 / (w * p.im * i2);
    let lk1 = p.xl * z1 / w;
    let lk2 = p.xl * z2 / w;
    let leakage = vec![lk1 / 2.0 * fa, lk1 / 2.0 * fb, lk2 / 2.0 * fc, lk2 / 2.0 * fd];
    let magnetizing = vec![l1 * fa * fa, l1 * fb * fb, l2 * fc * fc, l2 * fd * fd];
    Ok(InductanceMatrix::from_parts(leakage, magnetizing))
}

/// 6×6 matrix of a 3-winding transformer with one tap per winding.
///
/// Coil order: (1a, 1b, 2c, 2d, 3e, 3f). Unlike the 2-winding model the
/// full winding leakage (not half) is divided between the sub-coils.
pub fn three_winding_matrix(
    p: &ThreeWindingParams,
    f1_pct: f64,
    f2_pct: f64,
    f3_pct: f64,
) -> Result<InductanceMatrix> {
    p.validate()?;
    check_pct("f1_pct", f1_pct)?;
    check_pct("f2_pct", f2_pct)?;
    check_pct("f3_pct", f3_pct)?;
    let [x1, x2, x3] = p.star_reactances();
    if x1 < 0.0 || x2 < 0.0 || x3 < 0.0 {
        return Err(Error::invalid(format!(
            "inconsistent short-circuit data: star reactances ({x1}, {x2}, {x3}) must be non-negative"
        )));
    }
    let fa = f1_pct * 0.01;
    let fb = 1.0 - fa;
    let fc = f2_pct * 0.01;
    let fd = 1.0 - fc;
    let fe = f3_pct * 0.01;
    let ff = 1.0 - fe;
    let w = 2.0 * PI * p.f;
    let i = [p.mva / p.v1, p.mva / p.v2, p.mva / p.v3];
    let v = [p.v1, p.v2, p.v3];
    let z = [v[0] / i[0], v[1] / i[1], v[2] / i[2]];
    let l = [0, 1, 2].map(|k| v[k] / (w * p.im * i[k]));
    let lk = [x1 * z[0] / w, x2 * z[1] / w, x3 * z[2] / w];
    let leakage = vec![lk[0] * fa, lk[0] * fb, lk[1] * fc, lk[1] * fd, lk[2] * fe, lk[2] * ff];
    let magnetizing = vec![
        l[0] * fa * fa,
        l[0] * fb * fb,
        l[1] * fc * fc,
        l[1] * fd * fd,
        l[2] * fe * fe,
        l[2] * ff * ff,
    ];
    Ok(InductanceMatrix::from_parts(leakage, magnetizing))
}
