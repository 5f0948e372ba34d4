//! Ground-fault impedance measurement with zero-sequence compensation and
//! zone characteristics for a distance element.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ar_rules::Zone;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum ZoneShape {
    MhoCircle,
    /// Reaches for zone 1 in secondary ohms; `None` derives x from the
    /// zone-1 reach and r = 3·|x|. Zone 2 scales both by the reach ratio.
    Quadrilateral {
        #[serde(default)]
        r_reach: Option<f64>,
        #[serde(default)]
        x_reach: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImpedanceParams {
    /// Positive-sequence line impedance, Ω/km.
    pub z1_per_km: Complex64,
    /// Zero-sequence line impedance, Ω/km.
    pub z0_per_km: Complex64,
    pub line_km: f64,
    pub ct_ratio: f64,
    pub vt_ratio: f64,
    #[serde(default = "default_zone1")]
    pub zone1_reach: f64,
    #[serde(default = "default_zone2")]
    pub zone2_reach: f64,
    #[serde(default = "default_shape")]
    pub zone_shape: ZoneShape,
}

fn default_zone1() -> f64 {
    0.8
}
fn default_zone2() -> f64 {
    1.2
}
fn default_shape() -> ZoneShape {
    ZoneShape::MhoCircle
}

impl ImpedanceParams {
    /// The 500 kV line example: Z₁ = 0.189∠84°, Z₀ = 1.06∠84.17° Ω/km,
    /// CT 500, VT 2021, and a length reproducing the 4.69 Ω zone-1 reach.
    pub fn example_line() -> Self {
        let deg = std::f64::consts::PI / 180.0;
        Self {
            z1_per_km: Complex64::from_polar(0.189, 84.0 * deg),
            z0_per_km: Complex64::from_polar(1.06, 84.17 * deg),
            line_km: 125.4,
            ct_ratio: 500.0,
            vt_ratio: 2021.0,
            zone1_reach: 0.8,
            zone2_reach: 1.2,
            zone_shape: ZoneShape::MhoCircle,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |c: Complex64| c.re.is_finite() && c.im.is_finite();
        if !finite(self.z1_per_km) || self.z1_per_km.norm() == 0.0 || !finite(self.z0_per_km) {
            return Err(Error::invalid("line impedances must be finite and Z1 nonzero"));
        }
        if !(self.line_km > 0.0 && self.line_km.is_finite()) {
            return Err(Error::invalid("line_km must be positive"));
        }
        if !(self.ct_ratio > 0.0 && self.vt_ratio > 0.0 && self.ct_ratio.is_finite() && self.vt_ratio.is_finite()) {
            return Err(Error::invalid("CT and VT ratios must be positive"));
        }
        for r in [self.zone1_reach, self.zone2_reach] {
            if !(r > 0.0 && r <= 2.0) {
                return Err(Error::invalid(format!("zone reach {r} outside (0, 2]")));
            }
        }
        if let ZoneShape::Quadrilateral { r_reach, x_reach } = self.zone_shape {
            if r_reach.is_some_and(|r| !(r > 0.0 && r.is_finite())) || x_reach.is_some_and(|x| !(x > 0.0 && x.is_finite())) {
                return Err(Error::invalid("quadrilateral reaches must be positive"));
            }
        }
        Ok(())
    }

    /// Secondary-to-primary factor R = Nc/Nv.
    pub fn ratio(&self) -> f64 {
        self.ct_ratio / self.vt_ratio
    }

    /// Zero-sequence compensation factor (Z₀ − Z₁)/(3Z₁).
    pub fn k0(&self) -> Complex64 {
        (self.z0_per_km - self.z1_per_km) / (3.0 * self.z1_per_km)
    }

    /// Reach impedance of a zone in secondary ohms.
    pub fn reach(&self, zone: Zone) -> Complex64 {
        let frac = match zone {
            Zone::Zone1 => self.zone1_reach,
            Zone::Zone2 => self.zone2_reach,
        };
        self.z1_per_km * (frac * self.line_km * self.ratio())
    }
}

/// Z_A = V_A / (I_A + 3k₀I₀), scaled to secondary ohms.
pub fn measure_impedance(v_a: Complex64, i_a: Complex64, i_0: Complex64, p: &ImpedanceParams) -> Result<Complex64> {
    p.validate()?;
    let comp = i_a + 3.0 * p.k0() * i_0;
    if comp.norm() == 0.0 || !comp.norm().is_finite() {
        return Err(Error::undefined("compensated current is zero"));
    }
    Ok(v_a / comp * p.ratio())
}

pub fn in_zone(z: Complex64, p: &ImpedanceParams, zone: Zone) -> bool {
    let reach = p.reach(zone);
    match p.zone_shape {
        ZoneShape::MhoCircle => (z - reach / 2.0).norm() <= reach.norm() / 2.0,
        ZoneShape::Quadrilateral { r_reach, x_reach } => {
            let scale = match zone {
                Zone::Zone1 => 1.0,
                Zone::Zone2 => p.zone2_reach / p.zone1_reach,
            };
            let x1 = x_reach.unwrap_or_else(|| p.reach(Zone::Zone1).im.abs());
            let r1 = r_reach.unwrap_or(3.0 * x1);
            let (x, r) = (x1 * scale, r1 * scale);
            (0.0..=x).contains(&z.im) && (-r / 10.0..=r).contains(&z.re)
        }
    }
}
