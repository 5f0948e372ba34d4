//! Parametric waveform synthesizer.
//!
//! Each event family is a compact caricature of the waveform seen by a
//! differential or distance relay, not a circuit solution. The output is
//! deterministic in the scenario (including its seed).

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::flux::inrush_flux;
use crate::error::{Error, Result};
use crate::waveform::{
    Category, FaultType, FaultUnit, RecordKind, SamplingSpec, Stability, Symmetry,
    ThreePhaseRecord, TransientLabel,
};

const PHASE_SHIFT: [f64; 3] = [0.0, -2.0 * PI / 3.0, 2.0 * PI / 3.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Steady pre-event waveform followed by the labelled event.
    #[default]
    Event,
    /// Steady-state sinusoid only; the label is carried but no event occurs.
    Steady,
}

fn default_slip() -> f64 {
    1.5
}

fn default_base() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisScenario {
    pub label: TransientLabel,
    /// Event magnitude in per unit of the steady pre-event current.
    pub amplitude_pu: f64,
    pub dc_tau_s: f64,
    /// Harmonic order → amplitude fraction of the event waveform.
    #[serde(default)]
    pub harmonic_mix: BTreeMap<u32, f64>,
    /// Saturation flux (inrush families) or CT clipping knee, in per unit.
    pub saturation_knee: f64,
    pub inception_index: usize,
    pub seed: u64,
    #[serde(default)]
    pub kind: ScenarioKind,
    /// Slip frequency for swing families, Hz.
    #[serde(default = "default_slip")]
    pub slip_hz: f64,
    /// Steady pre-event amplitude.
    #[serde(default = "default_base")]
    pub base_pu: f64,
}

impl SynthesisScenario {
    pub fn new(label: TransientLabel, inception_index: usize, seed: u64) -> Self {
        Self {
            label,
            amplitude_pu: 4.0,
            dc_tau_s: 0.03,
            harmonic_mix: BTreeMap::new(),
            saturation_knee: 1.2,
            inception_index,
            seed,
            kind: ScenarioKind::Event,
            slip_hz: default_slip(),
            base_pu: default_base(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude_pu.is_finite() && self.amplitude_pu > 0.0) {
            return Err(Error::invalid("amplitude_pu must be positive"));
        }
        if !(self.dc_tau_s.is_finite() && self.dc_tau_s > 0.0) {
            return Err(Error::invalid("dc_tau_s must be positive"));
        }
        if self.harmonic_mix.values().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid("harmonic fractions must be non-negative"));
        }
        if self.harmonic_mix.keys().any(|&h| h < 2) {
            return Err(Error::invalid("harmonic orders start at 2"));
        }
        if !(self.saturation_knee.is_finite() && self.saturation_knee > 0.0) {
            return Err(Error::invalid("saturation_knee must be positive"));
        }
        if !(self.base_pu.is_finite() && self.base_pu > 0.0) {
            return Err(Error::invalid("base_pu must be positive"));
        }
        if self.is_swing() && !(0.3..=7.0).contains(&self.slip_hz) {
            return Err(Error::invalid("slip_hz must lie in [0.3, 7] Hz"));
        }
        Ok(())
    }

    fn is_swing(&self) -> bool {
        matches!(
            self.label.category(),
            Category::PowerSwing | Category::FaultDuringSwing
        )
    }
}

/// Random quantities shared by every family, drawn once per scenario.
struct Draws {
    psi: f64,
    jitter: [f64; 3],
    osc_mult: f64,
}

impl Draws {
    fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            psi: rng.random_range(0.0..2.0 * PI),
            jitter: [0, 1, 2].map(|_| rng.random_range(0.9..1.1)),
            osc_mult: rng.random_range(8.0..16.0),
        }
    }
}

/// Fault current shape: fundamental with a fully offset, exponentially
/// decaying DC component, plus harmonics. Continuous at τ = 0.
fn fault_wave(a: f64, w: f64, tau: f64, phi: f64, dc_tau: f64, harmonics: &BTreeMap<u32, f64>) -> f64 {
    let mut v = (w * tau + phi).sin() - phi.sin() * (-tau / dc_tau).exp();
    for (&h, &frac) in harmonics {
        v += frac * (h as f64 * (w * tau + phi)).sin();
    }
    a * v
}

fn merged(mut base: BTreeMap<u32, f64>, extra: &[(u32, f64)]) -> BTreeMap<u32, f64> {
    for &(h, f) in extra {
        *base.entry(h).or_insert(0.0) += f;
    }
    base
}

/// Per-unit signature of an internal fault: (amplitude factor, harmonics).
fn unit_signature(unit: Option<FaultUnit>) -> (f64, &'static [(u32, f64)]) {
    match unit {
        None | Some(FaultUnit::PowerTransformer) => (1.0, &[]),
        Some(FaultUnit::IsparSeries) => (0.85, &[(3, 0.25)]),
        Some(FaultUnit::IsparExciting) => (0.6, &[(2, 0.12), (5, 0.2)]),
    }
}

/// Per-phase fault current multipliers for a fault type. Ground faults
/// leak a zero-sequence share into healthy phases; phase-phase faults
/// return through the partner phase.
fn fault_pattern(ft: FaultType) -> [f64; 3] {
    use FaultType::*;
    match ft {
        WaG => [1.0, 0.15, 0.15],
        WbG => [0.15, 1.0, 0.15],
        WcG => [0.15, 0.15, 1.0],
        WaWbG => [1.0, 0.9, 0.2],
        WaWcG => [1.0, 0.2, 0.9],
        WbWcG => [0.2, 1.0, 0.9],
        WaWb => [1.0, -1.0, 0.0],
        WaWc => [1.0, 0.0, -1.0],
        WbWc => [0.0, 1.0, -1.0],
        ThreePhase => [1.0, 1.0, 1.0],
        ThreePhaseG => [1.0, 1.1, 0.9],
        WindingToWinding => [0.55, 0.0, 0.0],
        TurnToTurn => [0.2, 0.0, 0.0],
    }
}

/// Builds a labelled current record of `n_cycles` nominal cycles.
pub fn synthesize(scenario: &SynthesisScenario, spec: &SamplingSpec, n_cycles: usize) -> Result<ThreePhaseRecord> {
    let phases = synthesize_phases(scenario, spec, n_cycles, false)?;
    let rec = ThreePhaseRecord::new(phases, RecordKind::Current, *spec)?
        .with_label(Some(scenario.label))
        .with_meta("inception_index", scenario.inception_index.to_string())
        .with_meta("seed", scenario.seed.to_string());
    Ok(rec)
}

/// Builds the (voltage, current) pair seen by a distance relay for swing
/// and line-fault scenarios.
pub fn synthesize_swing_pair(
    scenario: &SynthesisScenario,
    spec: &SamplingSpec,
    n_cycles: usize,
) -> Result<(ThreePhaseRecord, ThreePhaseRecord)> {
    let current = synthesize(scenario, spec, n_cycles)?;
    let volts = synthesize_phases(scenario, spec, n_cycles, true)?;
    let voltage = ThreePhaseRecord::new(volts, RecordKind::Voltage, *spec)?
        .with_label(Some(scenario.label))
        .with_meta("inception_index", scenario.inception_index.to_string())
        .with_meta("seed", scenario.seed.to_string());
    Ok((voltage, current))
}

fn synthesize_phases(
    sc: &SynthesisScenario,
    spec: &SamplingSpec,
    n_cycles: usize,
    voltage: bool,
) -> Result<[Vec<f64>; 3]> {
    sc.validate()?;
    if n_cycles < 3 {
        return Err(Error::invalid("n_cycles must be at least 3"));
    }
    let n = n_cycles * spec.samples_per_cycle();
    if sc.inception_index >= n {
        return Err(Error::OutOfRange(format!(
            "inception_index {} beyond record length {n}",
            sc.inception_index
        )));
    }
    let d = Draws::new(sc.seed);
    let w = spec.omega();
    let dt = spec.dt();
    let s = sc.inception_index;
    let a = sc.amplitude_pu;
    let base = sc.base_pu;
    let cat = sc.label.category();

    let mut out = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for (p, trace) in out.iter_mut().enumerate() {
        let th = d.psi + PHASE_SHIFT[p];
        let steady = |i: usize| base * (w * i as f64 * dt + th).sin();
        if sc.kind == ScenarioKind::Steady {
            for (i, x) in trace.iter_mut().enumerate() {
                *x = steady(i);
            }
            continue;
        }
        if voltage {
            fill_voltage(trace, sc, &d, p, w, dt);
            continue;
        }
        for (i, x) in trace.iter_mut().enumerate() {
            let t = i as f64 * dt;
            let tau = t - s as f64 * dt;
            let after = i >= s;
            *x = match cat {
                Category::InternalFault => {
                    let fd = sc.label.fault_detail().expect("validated label");
                    let (gain, extra) = unit_signature(fd.unit);
                    let k = fault_pattern(fd.fault_type)[p];
                    let mut v = steady(i);
                    if after && k != 0.0 {
                        let h = merged(sc.harmonic_mix.clone(), extra);
                        v += fault_wave(a * gain * k * d.jitter[p], w, tau, w * s as f64 * dt + th, sc.dc_tau_s, &h);
                    }
                    v
                }
                Category::MagnetizingInrush => {
                    // de-energized until switching; unipolar saturation bursts
                    if after {
                        inrush_current(sc, &d, p, w, tau, 1.0)
                    } else {
                        0.0
                    }
                }
                Category::SympatheticInrush => {
                    // already energized; flux offset builds up, bursts of
                    // opposite polarity grow from cycle to cycle
                    let mut v = 0.3 * steady(i);
                    if after {
                        let growth = 1.0 - (-tau / sc.dc_tau_s).exp();
                        v -= growth * inrush_current(sc, &d, p, w, tau, 0.0);
                    }
                    v
                }
                Category::Overexcitation => {
                    if after {
                        let g = 1.0 + 0.5 * a;
                        let h = merged(sc.harmonic_mix.clone(), &[(3, 0.35), (5, 0.18), (7, 0.08)]);
                        let ph = w * t + th;
                        let mut v = ph.sin();
                        for (&k, &f) in &h {
                            v += f * (k as f64 * ph).sin();
                        }
                        base * g * v
                    } else {
                        steady(i)
                    }
                }
                Category::ExternalFaultCtSat => {
                    if after {
                        let phi = w * s as f64 * dt + th;
                        let ideal = base * (w * t + th).sin()
                            + fault_wave(a, w, tau, phi, sc.dc_tau_s, &sc.harmonic_mix);
                        let clip = a * 0.6 / sc.saturation_knee;
                        ideal.clamp(-clip, clip)
                    } else {
                        steady(i)
                    }
                }
                Category::Ferroresonance => {
                    if after {
                        let ph = w * t + th;
                        let sub = (ph / 3.0).sin();
                        let burst = ph.sin().powi(7);
                        base * (0.6 * steady(i) / base + a * (0.5 * sub + 0.9 * burst))
                    } else {
                        steady(i)
                    }
                }
                Category::CapacitorSwitching => {
                    if after {
                        let wo = d.osc_mult * w;
                        let osc = a * (-tau / (0.25 * sc.dc_tau_s)).exp() * (wo * tau + th).sin();
                        1.15 * steady(i) + osc
                    } else {
                        steady(i)
                    }
                }
                Category::NonlinearLoadSwitching => {
                    if after {
                        let h = merged(sc.harmonic_mix.clone(), &[(5, 0.22), (7, 0.15), (11, 0.09), (13, 0.06)]);
                        let ph = w * t + th;
                        let g = 1.0 + 0.4 * a;
                        let mut v = ph.sin();
                        for (&k, &f) in &h {
                            v += f * (k as f64 * ph).sin();
                        }
                        base * g * v
                    } else {
                        steady(i)
                    }
                }
                Category::PowerSwing => swing_current(sc, &d, p, w, t, tau, after),
                Category::FaultDuringSwing => {
                    let mut v = swing_current(sc, &d, p, w, t, tau, true);
                    if after {
                        let fd = sc.label.fault_detail().expect("validated label");
                        let k = fault_pattern(fd.fault_type)[p];
                        if k != 0.0 {
                            let phi = w * s as f64 * dt + th;
                            v += fault_wave(a * k * d.jitter[p], w, tau, phi, sc.dc_tau_s, &sc.harmonic_mix);
                        }
                    }
                    v
                }
            };
        }
    }
    Ok(out)
}

/// Unipolar inrush burst: current flows only while the core flux exceeds
/// the saturation knee. The DC flux offset decays with `dc_tau_s`.
/// `phase_excursion` scales the per-phase switching angle offset.
fn inrush_current(sc: &SynthesisScenario, d: &Draws, p: usize, w: f64, tau: f64, phase_excursion: f64) -> f64 {
    let knee = sc.saturation_knee;
    // residual flux chosen so that every phase peaks 0.3–0.7 pu over the knee
    let lift = 0.3 + 0.4 * (d.jitter[p] - 0.9) / 0.2;
    let t_switch = phase_excursion * PHASE_SHIFT[p].rem_euclid(2.0 * PI) / w;
    let cos0 = (w * t_switch).cos();
    let peak0 = knee + lift;
    // Φ = Φ_R + cos ωt′ − cos ω(τ+t′) peaks at Φ_R + cos ωt′ + 1
    let phi_r0 = peak0 - cos0 - 1.0;
    let settle = knee - 1.0 - cos0 - 0.05;
    let phi_r = settle + (phi_r0 - settle) * (-tau / sc.dc_tau_s.max(1e-6) / 4.0).exp();
    let flux = inrush_flux(phi_r, 1.0, t_switch, tau, w);
    let excess = (flux - knee).max(0.0);
    sc.amplitude_pu * (excess / lift).powf(1.5)
}

/// Slip-frequency swing seen in the line current.
fn swing_current(sc: &SynthesisScenario, d: &Draws, p: usize, w: f64, t: f64, tau: f64, after: bool) -> f64 {
    let th = d.psi + PHASE_SHIFT[p];
    let base = sc.base_pu;
    if sc.label.category() == Category::FaultDuringSwing {
        // slow pre-existing swing with a small modulation index
        let ws = 2.0 * PI * sc.slip_hz;
        let m = 0.08;
        return base * (1.0 + m * (ws * t).sin()) * (w * t + th + m * (ws * t).sin()).sin();
    }
    if !after {
        return base * (w * t + th).sin();
    }
    let sd = sc.label.swing_detail().expect("validated label");
    let ws = 2.0 * PI * sc.slip_hz;
    let sym = match sd.symmetry {
        Symmetry::Symmetrical => 1.0,
        Symmetry::Asymmetrical => [1.0, 0.65, 1.3][p],
    };
    let level = base * (1.0 + 0.5 * sc.amplitude_pu);
    let (env, delta) = match sd.stability {
        Stability::Stable => {
            let damp = (-tau / 0.4).exp();
            (1.0 + 0.35 * damp * (ws * tau).sin(), 0.5 * damp * (ws * tau).sin())
        }
        Stability::Unstable => {
            // pole slip: angle grows without bound, current peaks at δ = π
            let delta = ws * tau + 0.5 * (ws * tau).powi(2);
            (1.0 + 1.2 * (delta / 2.0).sin().abs(), delta)
        }
    };
    level * sym * env * (w * t + th + delta).sin()
}

fn fill_voltage(trace: &mut [f64], sc: &SynthesisScenario, d: &Draws, p: usize, w: f64, dt: f64) {
    let s = sc.inception_index;
    let th = d.psi + PHASE_SHIFT[p];
    let ws = 2.0 * PI * sc.slip_hz;
    for (i, x) in trace.iter_mut().enumerate() {
        let t = i as f64 * dt;
        let tau = t - s as f64 * dt;
        let after = i >= s;
        let mut mag = 1.0;
        let mut delta = 0.0;
        match sc.label.category() {
            Category::PowerSwing if after => {
                let sd = sc.label.swing_detail().expect("validated label");
                let sym = match sd.symmetry {
                    Symmetry::Symmetrical => 1.0,
                    Symmetry::Asymmetrical => [1.0, 1.4, 0.7][p],
                };
                match sd.stability {
                    Stability::Stable => {
                        let damp = (-tau / 0.4).exp();
                        mag -= 0.15 * sym * damp * (ws * tau).sin().abs();
                        delta = 0.2 * damp * (ws * tau).sin();
                    }
                    Stability::Unstable => {
                        let slip = ws * tau + 0.5 * (ws * tau).powi(2);
                        mag -= 0.6 * sym * (slip / 2.0).sin().abs();
                        delta = 0.5 * slip;
                    }
                }
            }
            Category::FaultDuringSwing | Category::InternalFault => {
                if sc.label.category() == Category::FaultDuringSwing {
                    mag += 0.05 * (ws * t).sin();
                }
                if after {
                    let fd = sc.label.fault_detail().expect("validated label");
                    let k = fault_pattern(fd.fault_type)[p].abs();
                    mag *= 1.0 - 0.75 * k.min(1.0);
                }
            }
            _ => {}
        }
        *x = sc.base_pu * mag * (w * t + th + delta).sin();
    }
}
