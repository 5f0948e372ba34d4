//! Autoregressive-coefficient rules for balanced faults near a type-3
//! wind farm: φ₂ of all three phase currents at or below th1 marks a fault
//! fed by the wind farm (forward), and φ₇ of all three at or below th2
//! places a forward fault in zone 2.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{ar_fit, normalize_for_ar};
use crate::waveform::{Phase, ThreePhaseRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArRelayConfig {
    #[serde(default = "default_lag")]
    pub lag: usize,
    /// Direction threshold on φ₂.
    #[serde(default = "default_th1")]
    pub th1: f64,
    /// Zone threshold on φ₇.
    #[serde(default = "default_th2")]
    pub th2: f64,
}

fn default_lag() -> usize {
    10
}
fn default_th1() -> f64 {
    -0.7
}
fn default_th2() -> f64 {
    -0.1
}

impl Default for ArRelayConfig {
    fn default() -> Self {
        Self {
            lag: 10,
            th1: -0.7,
            th2: -0.1,
        }
    }
}

impl ArRelayConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lag < 8 {
            return Err(Error::invalid("AR relay lag must be at least 8 to provide φ₇"));
        }
        if !self.th1.is_finite() || !self.th2.is_finite() {
            return Err(Error::invalid("AR relay thresholds must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    DfigFed,
    GridFed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Zone {
    Zone1,
    Zone2,
}

/// Inclusive threshold rule on precomputed φ₂ values.
pub fn direction_rule(phi2: [f64; 3], th1: f64) -> Direction {
    if phi2.iter().all(|&p| p <= th1) {
        Direction::DfigFed
    } else {
        Direction::GridFed
    }
}

/// Inclusive threshold rule on precomputed φ₇ values.
pub fn zone_rule(phi7: [f64; 3], th2: f64) -> Zone {
    if phi7.iter().all(|&p| p <= th2) {
        Zone::Zone2
    } else {
        Zone::Zone1
    }
}

/// φ_coef of each phase from a no-intercept AR(lag) fit to the
/// mean-removed, peak-normalized phase current.
pub fn ar_coefficients(record: &ThreePhaseRecord, lag: usize, coef: usize) -> Result<[f64; 3]> {
    if coef == 0 || coef > lag {
        return Err(Error::invalid(format!("coefficient {coef} outside 1..={lag}")));
    }
    let mut out = [0.0; 3];
    for p in Phase::ALL {
        let fit = ar_fit(&normalize_for_ar(record.phase(p)), lag, false)
            .map_err(|e| Error::invalid(format!("AR fit failed on {}: {e}", p.tag())))?;
        out[p.index()] = fit.phi[coef - 1];
    }
    Ok(out)
}

pub fn ar_direction(record: &ThreePhaseRecord, cfg: &ArRelayConfig) -> Result<Direction> {
    cfg.validate()?;
    Ok(direction_rule(ar_coefficients(record, cfg.lag, 2)?, cfg.th1))
}

pub fn ar_zone(record: &ThreePhaseRecord, cfg: &ArRelayConfig) -> Result<Zone> {
    cfg.validate()?;
    Ok(zone_rule(ar_coefficients(record, cfg.lag, 7)?, cfg.th2))
}

/// One reference row of AR coefficients with the class it belongs to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArTableRow {
    pub system: &'static str,
    /// Fault location (direction tables) or zone (zone table).
    pub group: &'static str,
    pub fault_resistance_ohm: f64,
    pub crowbar_ohm: f64,
    pub phi: [f64; 3],
}

macro_rules! rows {
    ($sys:literal, $group:literal, $( ($rf:expr, $cb:expr, $a:expr, $b:expr, $c:expr) ),+ $(,)?) => {
        [$(ArTableRow { system: $sys, group: $group, fault_resistance_ohm: $rf, crowbar_ohm: $cb, phi: [$a, $b, $c] }),+]
    };
}

const GRID_4BUS: [ArTableRow; 9] = rows!("4-bus", "location 2",
    (2.0, 0.0, 0.238, 0.268, 0.262), (2.0, 0.01, 0.212, 0.220, 0.212), (2.0, 0.1, -0.178, -0.209, -0.227),
    (20.0, 0.0, 0.238, 0.268, 0.262), (20.0, 0.01, 0.212, 0.220, 0.212), (20.0, 0.1, -0.178, -0.209, -0.227),
    (200.0, 0.0, 0.237, 0.267, 0.261), (200.0, 0.01, 0.212, 0.220, 0.212), (200.0, 0.1, -0.180, -0.211, -0.229));
const DFIG_4BUS: [ArTableRow; 9] = rows!("4-bus", "location 4",
    (2.0, 0.0, -1.429, -1.258, -1.065), (2.0, 0.01, -2.157, -1.777, -1.417), (2.0, 0.1, -1.022, -1.676, -1.255),
    (20.0, 0.0, -1.439, -1.163, -1.086), (20.0, 0.01, -2.080, -1.693, -1.382), (20.0, 0.1, -1.001, -1.650, -1.198),
    (200.0, 0.0, -1.494, -1.214, -1.057), (200.0, 0.01, -2.082, -1.783, -1.475), (200.0, 0.1, -1.040, -1.628, -1.203));
const GRID_9BUS: [ArTableRow; 9] = rows!("9-bus", "location 2",
    (2.0, 0.0, 0.483, 0.307, 0.434), (2.0, 0.01, 0.495, 0.369, 0.436), (2.0, 0.1, 0.463, 0.403, 0.420),
    (20.0, 0.0, 0.482, 0.307, 0.435), (20.0, 0.01, 0.492, 0.368, 0.436), (20.0, 0.1, 0.451, 0.399, 0.421),
    (200.0, 0.0, 0.483, 0.306, 0.433), (200.0, 0.01, 0.493, 0.367, 0.435), (200.0, 0.1, 0.454, 0.398, 0.416));
const DFIG_9BUS: [ArTableRow; 9] = rows!("9-bus", "location 4",
    (2.0, 0.0, -1.868, -1.659, -1.331), (2.0, 0.01, -2.398, -2.237, -1.823), (2.0, 0.1, -2.192, -2.451, -1.788),
    (20.0, 0.0, -1.879, -1.645, -1.467), (20.0, 0.01, -2.195, -2.584, -1.771), (20.0, 0.1, -1.133, -1.583, -0.932),
    (200.0, 0.0, -1.936, -1.621, -1.333), (200.0, 0.01, -2.374, -2.136, -1.818), (200.0, 0.1, -2.168, -2.530, -1.734));
const GRID_39BUS: [ArTableRow; 9] = rows!("39-bus", "location 2",
    (2.0, 0.0, 0.206, 0.169, -0.087), (2.0, 0.01, 0.250, 0.079, -0.090), (2.0, 0.1, 0.032, -0.082, -0.176),
    (20.0, 0.0, 0.207, 0.170, -0.087), (20.0, 0.01, 0.251, 0.080, -0.091), (20.0, 0.1, 0.035, -0.080, -0.179),
    (200.0, 0.0, 0.207, 0.170, -0.086), (200.0, 0.01, 0.252, 0.080, -0.092), (200.0, 0.1, 0.036, -0.079, -0.178));
const DFIG_39BUS: [ArTableRow; 9] = rows!("39-bus", "location 4",
    (2.0, 0.0, -1.170, -0.667, -1.441), (2.0, 0.01, -2.270, -1.972, -2.047), (2.0, 0.1, -2.289, -2.287, -1.963),
    (20.0, 0.0, -1.266, -0.762, -1.506), (20.0, 0.01, -2.202, -1.930, -2.098), (20.0, 0.1, -2.239, -2.170, -1.826),
    (200.0, 0.0, -1.202, -0.708, -1.534), (200.0, 0.01, -2.244, -2.009, -2.072), (200.0, 0.1, -2.195, -2.231, -1.892));

const ZONE1_4BUS: [ArTableRow; 9] = rows!("4-bus", "zone 1",
    (2.0, 0.0, 1.141, 0.834, 0.799), (2.0, 0.01, 1.036, 0.843, 0.814), (2.0, 0.1, 1.066, 0.925, 0.828),
    (20.0, 0.0, 0.880, 0.953, 1.002), (20.0, 0.01, 0.775, 0.951, 0.901), (20.0, 0.1, 0.813, 1.090, 0.976),
    (200.0, 0.0, 1.042, 1.152, 0.818), (200.0, 0.01, 1.005, 1.154, 0.764), (200.0, 0.1, 1.074, 1.165, 0.863));
const ZONE2_4BUS: [ArTableRow; 9] = rows!("4-bus", "zone 2",
    (2.0, 0.0, -0.400, -0.997, -0.926), (2.0, 0.01, -0.417, -0.947, -0.903), (2.0, 0.1, -0.485, -0.945, -0.902),
    (20.0, 0.0, 0.123, -0.906, -0.828), (20.0, 0.01, -0.366, -1.008, -0.967), (20.0, 0.1, -0.382, -1.004, -0.961),
    (50.0, 0.0, -0.417, -0.947, -0.903), (50.0, 0.01, 0.093, -0.916, -0.834), (50.0, 0.1, 0.159, -0.917, -0.839));

/// Published φ₂ rows (4-, 9- and 39-bus systems) with their known source:
/// location 2 is grid-fed, location 4 is fed by the wind farm.
pub fn direction_table() -> Vec<(ArTableRow, Direction)> {
    let mut out = Vec::new();
    for (grid, dfig) in [(GRID_4BUS, DFIG_4BUS), (GRID_9BUS, DFIG_9BUS), (GRID_39BUS, DFIG_39BUS)] {
        out.extend(grid.iter().map(|r| (*r, Direction::GridFed)));
        out.extend(dfig.iter().map(|r| (*r, Direction::DfigFed)));
    }
    out
}

/// Published φ₇ rows of the 4-bus zone study.
pub fn zone_table() -> Vec<(ArTableRow, Zone)> {
    ZONE1_4BUS
        .iter()
        .map(|r| (*r, Zone::Zone1))
        .chain(ZONE2_4BUS.iter().map(|r| (*r, Zone::Zone2)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::{RecordKind, SamplingSpec};

    #[test]
    fn rule_examples() {
        assert_eq!(direction_rule([-1.429, -1.258, -1.065], -0.7), Direction::DfigFed);
        assert_eq!(direction_rule([0.238, 0.268, 0.262], -0.7), Direction::GridFed);
        assert_eq!(direction_rule([-0.7; 3], -0.7), Direction::DfigFed);
        assert_eq!(zone_rule([1.141, 0.834, 0.799], -0.1), Zone::Zone1);
        assert_eq!(zone_rule([-0.400, -0.997, -0.926], -0.1), Zone::Zone2);
        assert_eq!(zone_rule([-0.1; 3], -0.1), Zone::Zone2);
    }

    #[test]
    fn table_sizes() {
        assert_eq!(direction_table().len(), 54);
        assert_eq!(zone_table().len(), 18);
    }

    #[test]
    fn scaling_does_not_change_verdicts() {
        let spec = SamplingSpec::new(1920.0, 60.0).unwrap();
        let phases = [0.0, 2.1, 4.2].map(|ph: f64| {
            (0..256)
                .map(|i| {
                    let t = i as f64 / 1920.0;
                    (377.0 * t + ph).sin() * (-t * 8.0).exp() + 0.3 * (-t * 20.0).exp() + 0.05 * ((i * 31 % 17) as f64 / 17.0)
                })
                .collect::<Vec<_>>()
        });
        let rec = ThreePhaseRecord::new(phases, RecordKind::Current, spec).unwrap();
        let cfg = ArRelayConfig::default();
        let base = ar_coefficients(&rec, 10, 2).unwrap();
        let scaled = ar_coefficients(&rec.scaled(37.5).unwrap(), 10, 2).unwrap();
        for (a, b) in base.iter().zip(&scaled) {
            assert!((a - b).abs() < 1e-9);
        }
        assert_eq!(ar_direction(&rec, &cfg).unwrap(), ar_direction(&rec.scaled(37.5).unwrap(), &cfg).unwrap());
        assert_eq!(ar_zone(&rec, &cfg).unwrap(), ar_zone(&rec.scaled(0.01).unwrap(), &cfg).unwrap());
        assert!(ar_direction(&rec, &ArRelayConfig { lag: 5, ..cfg }).is_err());
    }
}
