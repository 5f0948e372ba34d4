//! Randomized, labelled corpora built from the synthesizer.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::synth::{synthesize, synthesize_swing_pair, SynthesisScenario};
use crate::error::{Error, Result};
use crate::waveform::{
    Category, FaultType, FaultUnit, SamplingSpec, Stability, Symmetry, ThreePhaseRecord,
    TransientLabel,
};

/// The twelve classes of the differential-relay corpus: one per faulted
/// unit plus every non-fault family.
pub const DIFFERENTIAL_CLASSES: [&str; 12] = [
    "internal_fault/power_transformer",
    "internal_fault/ispar_series",
    "internal_fault/ispar_exciting",
    "magnetizing_inrush",
    "sympathetic_inrush",
    "overexcitation",
    "external_fault_ct_sat",
    "ferroresonance",
    "capacitor_switching",
    "nonlinear_load_switching",
    "power_swing",
    "fault_during_swing",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSpec {
    pub per_class: usize,
    pub n_cycles: usize,
    /// Noise level; `None` leaves records noise-free.
    #[serde(default)]
    pub snr_db: Option<f64>,
    pub seed: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            per_class: 200,
            n_cycles: 6,
            snr_db: Some(30.0),
            seed: 2024,
        }
    }
}

/// SplitMix64 step; decorrelates per-record seeds derived from one base seed.
pub fn derive_seed(base: u64, a: u64, b: u64) -> u64 {
    let mut z = base
        .wrapping_add(a.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(b.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn random_fault_type(rng: &mut ChaCha8Rng) -> FaultType {
    FaultType::ALL[rng.random_range(0..FaultType::ALL.len())]
}

fn harmonics(rng: &mut ChaCha8Rng, orders: &[u32], max_frac: f64) -> BTreeMap<u32, f64> {
    orders.iter().map(|&h| (h, rng.random_range(0.0..max_frac))).collect()
}

/// Draws a random scenario of the given differential corpus class.
pub fn random_scenario(class: usize, spec: &SamplingSpec, n_cycles: usize, seed: u64) -> Result<SynthesisScenario> {
    if class >= DIFFERENTIAL_CLASSES.len() {
        return Err(Error::OutOfRange(format!("corpus class {class}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nc = spec.samples_per_cycle();
    if n_cycles < 5 {
        return Err(Error::invalid("corpus records need at least 5 cycles"));
    }
    let inception = 2 * nc + rng.random_range(0..nc / 4);
    let label = match class {
        0 => TransientLabel::internal_fault(FaultUnit::PowerTransformer, random_fault_type(&mut rng)),
        1 => TransientLabel::internal_fault(FaultUnit::IsparSeries, random_fault_type(&mut rng)),
        2 => TransientLabel::internal_fault(FaultUnit::IsparExciting, random_fault_type(&mut rng)),
        10 => TransientLabel::power_swing(
            if rng.random_bool(0.5) { Stability::Stable } else { Stability::Unstable },
            if rng.random_bool(0.5) { Symmetry::Symmetrical } else { Symmetry::Asymmetrical },
        ),
        11 => TransientLabel::fault_during_swing(random_fault_type(&mut rng)),
        _ => {
            let cat: Category = DIFFERENTIAL_CLASSES[class].parse()?;
            TransientLabel::disturbance(cat)?
        }
    };
    let mut sc = SynthesisScenario::new(label, inception, rng.random());
    let cat = label.category();
    sc.amplitude_pu = match cat {
        Category::InternalFault | Category::FaultDuringSwing => rng.random_range(3.0..10.0),
        Category::MagnetizingInrush | Category::SympatheticInrush => rng.random_range(2.0..6.0),
        Category::ExternalFaultCtSat => rng.random_range(4.0..12.0),
        Category::CapacitorSwitching => rng.random_range(0.5..2.0),
        _ => rng.random_range(0.5..1.5),
    };
    sc.dc_tau_s = match cat {
        Category::MagnetizingInrush | Category::SympatheticInrush => rng.random_range(0.05..0.2),
        _ => rng.random_range(0.01..0.08),
    };
    sc.saturation_knee = rng.random_range(1.05..1.35);
    sc.harmonic_mix = match cat {
        Category::InternalFault | Category::FaultDuringSwing | Category::ExternalFaultCtSat => {
            harmonics(&mut rng, &[2, 3], 0.05)
        }
        _ => BTreeMap::new(),
    };
    sc.slip_hz = match cat {
        Category::FaultDuringSwing => rng.random_range(0.3..2.0),
        _ => rng.random_range(0.3..7.0),
    };
    Ok(sc)
}

/// `per_class` current records for each of the twelve classes, in class
/// order, with optional noise. Internal faults cycle through the winding
/// fault types so that every (unit, type) pair is equally represented.
pub fn generate_corpus(spec: &SamplingSpec, cs: &CorpusSpec) -> Result<Vec<ThreePhaseRecord>> {
    let mut out = Vec::with_capacity(cs.per_class * DIFFERENTIAL_CLASSES.len());
    for class in 0..DIFFERENTIAL_CLASSES.len() {
        for k in 0..cs.per_class {
            let seed = derive_seed(cs.seed, class as u64, k as u64);
            let mut sc = random_scenario(class, spec, cs.n_cycles, seed)?;
            if let Some(unit) = sc.label.fault_detail().and_then(|d| d.unit) {
                sc.label = TransientLabel::internal_fault(unit, FaultType::ALL[k % FaultType::ALL.len()]);
            }
            let mut rec = synthesize(&sc, spec, cs.n_cycles)?;
            if let Some(snr) = cs.snr_db {
                rec = rec.add_noise(snr, derive_seed(seed, 1, 0))?;
            }
            out.push(rec.with_meta("class", DIFFERENTIAL_CLASSES[class]));
        }
    }
    Ok(out)
}

/// Swing-scheme classes: line fault, fault during swing, and the four
/// stability × symmetry swing variants.
pub const SWING_CLASSES: [&str; 6] = [
    "fault",
    "fault_during_swing",
    "power_swing/stable/symmetrical",
    "power_swing/stable/asymmetrical",
    "power_swing/unstable/symmetrical",
    "power_swing/unstable/asymmetrical",
];

/// Voltage/current pairs for the swing pipeline.
pub fn generate_swing_corpus(
    spec: &SamplingSpec,
    cs: &CorpusSpec,
) -> Result<Vec<(ThreePhaseRecord, ThreePhaseRecord)>> {
    if cs.n_cycles < 13 {
        return Err(Error::invalid("swing records need at least 13 cycles"));
    }
    let nc = spec.samples_per_cycle();
    let mut out = Vec::new();
    for (class, name) in SWING_CLASSES.iter().enumerate() {
        for k in 0..cs.per_class {
            let seed = derive_seed(cs.seed ^ 0x5157_494e_47, class as u64, k as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let label = match class {
                0 => TransientLabel::new(
                    Category::InternalFault,
                    Some(crate::waveform::FaultDetail {
                        unit: None,
                        fault_type: random_fault_type(&mut rng),
                    }),
                    None,
                )?,
                1 => TransientLabel::fault_during_swing(random_fault_type(&mut rng)),
                _ => name.parse()?,
            };
            let inception = nc + rng.random_range(0..nc / 4);
            let mut sc = SynthesisScenario::new(label, inception, rng.random());
            sc.amplitude_pu = match class {
                0 | 1 => rng.random_range(3.0..10.0),
                _ => rng.random_range(0.5..1.5),
            };
            sc.dc_tau_s = rng.random_range(0.01..0.08);
            sc.slip_hz = if class == 1 {
                rng.random_range(0.3..2.0)
            } else {
                rng.random_range(0.5..7.0)
            };
            let (mut v, mut i) = synthesize_swing_pair(&sc, spec, cs.n_cycles)?;
            if let Some(snr) = cs.snr_db {
                v = v.add_noise(snr, derive_seed(seed, 2, 0))?;
                i = i.add_noise(snr, derive_seed(seed, 3, 0))?;
            }
            out.push((v.with_meta("class", *name), i.with_meta("class", *name)));
        }
    }
    Ok(out)
}
