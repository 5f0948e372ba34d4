//! Feature catalog and per-record feature assembly.
//!
//! Features are computed per phase and concatenated in phase order a, b, c;
//! within a phase they follow the registry order of the chosen set. Names
//! are `ph{A,B,C}.<feature>`.

mod ar;
mod dwt;
mod filters;
mod spectral;
mod td;
mod trend;

use serde::{Deserialize, Serialize};

pub use ar::{ar_fit, ArFit};
pub use dwt::{
    dwt, dwt_unchecked, idwt, max_level, wavelet_energy, Decomposition, ExtensionMode,
    FilterBank, WaveletFamily, WaveletSpec, MAX_FILTER_LEN,
};
pub use spectral::{fft_coefficients, welch_density, WelchConfig, WelchSpectrum, WindowKind};
pub use td::{change_quantile, complexity_invariant_distance, moments, quantile, sample_entropy, std_dev, Moments};
pub use trend::{fit_line, linear_trend, LineFit, TrendAgg, TrendAttr};

use crate::error::{Error, Result};
use crate::waveform::{Phase, RecordKind, ThreePhaseRecord};

/// Named feature values with a per-entry quality flag. A flagged entry was
/// mathematically undefined for this record and has been replaced by 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub names: Vec<String>,
    pub values: Vec<f64>,
    pub degenerate: Vec<bool>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn push(&mut self, name: String, value: Result<f64>) -> Result<()> {
        match value {
            Ok(v) if v.is_finite() => {
                self.names.push(name);
                self.values.push(v);
                self.degenerate.push(false);
            }
            Ok(_) | Err(Error::Undefined(_)) => {
                self.names.push(name);
                self.values.push(0.0);
                self.degenerate.push(true);
            }
            Err(e) => return Err(Error::invalid(format!("feature {name}: {e}"))),
        }
        Ok(())
    }

    pub fn degenerate_names(&self) -> impl Iterator<Item = &str> {
        self.names
            .iter()
            .zip(&self.degenerate)
            .filter(|(_, &d)| d)
            .map(|(n, _)| n.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSet {
    /// Change quantile, sample entropy, variance, kurtosis, CID.
    Td5,
    /// Detail-band energies of six wavelets.
    We6,
    /// Raw detail coefficients of one wavelet band.
    Wc,
    /// Change quantiles, DFT magnitudes, linear trends, Welch density and
    /// AR coefficients, in per-stage quantities.
    F5,
    /// Voltage fundamental magnitudes and current trend slopes.
    Swing6,
    /// One AR coefficient per phase for the direction/zone rules.
    ArRelay,
}

/// Named quantities of the change-quantile / FFT / trend / Welch / AR
/// family tuned for one cascade stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum F5Preset {
    /// 2 + 1 + 1 + 1 + 1 per phase (18).
    Detect,
    /// 2 + 2 + 2 per phase (18).
    Locate,
    /// 3 + 1 + 2 + 1 per phase (21).
    FaultTypeSeries,
    /// 3 + 2 + 2 per phase (21).
    FaultTypeOther,
    /// 2 + 1 + 1 + 1 (AR) per phase (15).
    Disturbance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendStat {
    pub attr: TrendAttr,
    pub agg: TrendAgg,
}

fn default_lag() -> usize {
    10
}
fn default_m() -> usize {
    2
}
fn default_r() -> f64 {
    0.2
}
fn default_chunk() -> usize {
    40
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureConfig {
    pub set: FeatureSet,
    /// Wavelet for `wc`, or level override for `we6` (family ignored).
    #[serde(default)]
    pub wavelet: Option<WaveletSpec>,
    /// Wavelets whose energies form `we6`.
    #[serde(default)]
    pub we_wavelets: Vec<String>,
    #[serde(default)]
    pub change_quantile_bounds: Vec<(f64, f64)>,
    #[serde(default = "default_lag")]
    pub ar_lag: usize,
    /// 1-based AR coefficient indices to emit.
    #[serde(default)]
    pub ar_coefs: Vec<usize>,
    #[serde(default)]
    pub fft_bins: Vec<usize>,
    #[serde(default)]
    pub welch: WelchConfig,
    #[serde(default)]
    pub welch_bins: Vec<usize>,
    #[serde(default = "default_chunk")]
    pub trend_chunk_len: usize,
    #[serde(default)]
    pub trend_stats: Vec<TrendStat>,
    #[serde(default = "default_m")]
    pub sampen_m: usize,
    /// Sample-entropy tolerance as a multiple of the phase standard deviation.
    #[serde(default = "default_r")]
    pub sampen_r: f64,
}

impl FeatureConfig {
    fn base(set: FeatureSet) -> Self {
        Self {
            set,
            wavelet: None,
            we_wavelets: Vec::new(),
            change_quantile_bounds: Vec::new(),
            ar_lag: 10,
            ar_coefs: Vec::new(),
            fft_bins: Vec::new(),
            welch: WelchConfig::default(),
            welch_bins: Vec::new(),
            trend_chunk_len: 40,
            trend_stats: Vec::new(),
            sampen_m: 2,
            sampen_r: 0.2,
        }
    }

    pub fn td5() -> Self {
        Self {
            change_quantile_bounds: vec![(0.4, 0.8)],
            ..Self::base(FeatureSet::Td5)
        }
    }

    /// Wavelet energies of rbio3.1, sym10, bior3.9, rbio3.9, coif5 and db10
    /// at each wavelet's maximum level for the record length.
    pub fn we6() -> Self {
        Self {
            we_wavelets: ["rbio3.1", "sym10", "bior3.9", "rbio3.9", "coif5", "db10"]
                .map(String::from)
                .to_vec(),
            ..Self::base(FeatureSet::We6)
        }
    }

    pub fn wc(wavelet: WaveletSpec) -> Self {
        Self {
            wavelet: Some(wavelet),
            ..Self::base(FeatureSet::Wc)
        }
    }

    pub fn f5(preset: F5Preset) -> Self {
        use TrendAgg::*;
        use TrendAttr::*;
        let stat = |attr, agg| TrendStat { attr, agg };
        let cq2 = vec![(0.4, 0.8), (0.2, 0.8)];
        let cq3 = vec![(0.4, 0.8), (0.2, 0.8), (0.0, 1.0)];
        let base = Self::base(FeatureSet::F5);
        match preset {
            F5Preset::Detect => Self {
                change_quantile_bounds: cq2,
                fft_bins: vec![1],
                trend_stats: vec![stat(Slope, Max)],
                welch_bins: vec![0],
                ar_coefs: vec![1],
                ..base
            },
            F5Preset::Locate => Self {
                change_quantile_bounds: cq2,
                fft_bins: vec![3, 9],
                trend_stats: vec![stat(Slope, Max), stat(Stderr, Mean)],
                ..base
            },
            F5Preset::FaultTypeSeries => Self {
                change_quantile_bounds: cq3,
                fft_bins: vec![3],
                trend_stats: vec![stat(Slope, Max), stat(Intercept, Mean)],
                welch_bins: vec![0],
                ..base
            },
            F5Preset::FaultTypeOther => Self {
                change_quantile_bounds: cq3,
                fft_bins: vec![3, 9],
                trend_stats: vec![stat(Slope, Max), stat(Intercept, Mean)],
                ..base
            },
            F5Preset::Disturbance => Self {
                change_quantile_bounds: cq2,
                fft_bins: vec![6],
                trend_stats: vec![stat(Slope, Max)],
                ar_coefs: vec![1],
                ..base
            },
        }
    }

    pub fn swing6() -> Self {
        Self {
            trend_chunk_len: 20,
            trend_stats: vec![TrendStat {
                attr: TrendAttr::Slope,
                agg: TrendAgg::Max,
            }],
            ..Self::base(FeatureSet::Swing6)
        }
    }

    /// φ_coef per phase at lag 10 (φ₂ for direction, φ₇ for zone).
    pub fn ar_relay(coef: usize) -> Self {
        Self {
            ar_coefs: vec![coef],
            ..Self::base(FeatureSet::ArRelay)
        }
    }

    pub fn validate(&self) -> Result<()> {
        for &(ql, qh) in &self.change_quantile_bounds {
            if !(0.0..=1.0).contains(&ql) || !(0.0..=1.0).contains(&qh) || ql >= qh {
                return Err(Error::invalid(format!("change quantile bounds ({ql}, {qh}) need 0 <= ql < qh <= 1")));
            }
        }
        if self.ar_lag == 0 {
            return Err(Error::invalid("ar_lag must be at least 1"));
        }
        if let Some(&c) = self.ar_coefs.iter().find(|&&c| c == 0 || c > self.ar_lag) {
            return Err(Error::invalid(format!("AR coefficient index {c} outside 1..={}", self.ar_lag)));
        }
        if self.trend_chunk_len < 2 {
            return Err(Error::invalid("trend_chunk_len must be at least 2"));
        }
        if !(self.sampen_r > 0.0) || self.sampen_m == 0 {
            return Err(Error::invalid("sample entropy needs m >= 1 and r > 0"));
        }
        match self.set {
            FeatureSet::Td5 if self.change_quantile_bounds.is_empty() => {
                Err(Error::invalid("td5 needs one change-quantile corridor"))
            }
            FeatureSet::We6 if self.we_wavelets.is_empty() => Err(Error::invalid("we6 needs a wavelet list")),
            FeatureSet::Wc if self.wavelet.is_none() => Err(Error::invalid("wc needs a wavelet")),
            FeatureSet::ArRelay if self.ar_coefs.len() != 1 => {
                Err(Error::invalid("ar_relay takes exactly one AR coefficient index"))
            }
            FeatureSet::Swing6 if self.trend_stats.len() != 1 => {
                Err(Error::invalid("swing6 takes exactly one trend statistic"))
            }
            _ => Ok(()),
        }
    }

    /// Number of values produced for a record of `len` samples, where fixed.
    pub fn width(&self) -> Option<usize> {
        let per_phase = match self.set {
            FeatureSet::Td5 => 5,
            FeatureSet::We6 => self.we_wavelets.len(),
            FeatureSet::Wc => return None,
            FeatureSet::F5 => {
                self.change_quantile_bounds.len()
                    + self.fft_bins.len()
                    + self.trend_stats.len()
                    + self.welch_bins.len()
                    + self.ar_coefs.len()
            }
            FeatureSet::Swing6 => 2,
            FeatureSet::ArRelay => 1,
        };
        Some(3 * per_phase)
    }
}

/// Mean-removed, peak-normalized copy used before AR fitting so that
/// coefficients do not depend on units, offset or scaling.
pub fn normalize_for_ar(signal: &[f64]) -> Vec<f64> {
    let mean = signal.iter().sum::<f64>() / signal.len().max(1) as f64;
    let centred: Vec<f64> = signal.iter().map(|v| v - mean).collect();
    let peak = centred.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        centred.iter().map(|v| v / peak).collect()
    } else {
        centred
    }
}

fn trend_name(s: &TrendStat, chunk: usize) -> String {
    format!("trend.{}.{}.c{chunk}", s.attr.as_str(), s.agg.as_str())
}

fn phase_features(
    out: &mut FeatureVector,
    x: &[f64],
    tag: &str,
    cfg: &FeatureConfig,
    sample_rate_hz: f64,
) -> Result<()> {
    let name = |f: &str| format!("{tag}.{f}");
    match cfg.set {
        FeatureSet::Td5 => {
            let (ql, qh) = cfg.change_quantile_bounds[0];
            out.push(name("change_q1"), change_quantile(x, ql, qh))?;
            let sd = std_dev(x);
            let sampen = if sd > 0.0 {
                sample_entropy(x, cfg.sampen_m, cfg.sampen_r * sd)
            } else {
                Err(Error::undefined("zero-variance phase"))
            };
            out.push(name("sampen"), sampen)?;
            let m = moments(x);
            out.push(name("var"), m.as_ref().map(|m| m.variance).map_err(clone_err))?;
            out.push(name("kurt"), m.and_then(|m| m.kurtosis()))?;
            out.push(name("cid"), Ok(complexity_invariant_distance(x)))?;
        }
        FeatureSet::We6 => {
            for w in &cfg.we_wavelets {
                let bank = FilterBank::by_name(w)?;
                let fname = name(&format!("we.{w}"));
                let level = match &cfg.wavelet {
                    Some(spec) => spec.level,
                    None => max_level(x.len(), bank.len())
                        .map_err(|e| Error::invalid(format!("feature {fname}: {e}")))?,
                };
                let spec = WaveletSpec::from_name(w, level.max(1))?;
                let energy = dwt(x, &spec, ExtensionMode::Symmetric)
                    .map(|d| wavelet_energy(&d.details[level.max(1) - 1]));
                out.push(fname, energy)?;
            }
        }
        FeatureSet::Wc => {
            let spec = cfg.wavelet.as_ref().expect("validated");
            let dec = dwt(x, spec, ExtensionMode::Symmetric)
                .map_err(|e| Error::invalid(format!("feature {}: {e}", name("wc"))))?;
            for (k, v) in dec.details[spec.level - 1].iter().enumerate() {
                out.push(name(&format!("wc.{}.d{}.k{k}", spec.name(), spec.level)), Ok(*v))?;
            }
        }
        FeatureSet::F5 => {
            for &(ql, qh) in &cfg.change_quantile_bounds {
                out.push(name(&format!("change_q.{ql}-{qh}")), change_quantile(x, ql, qh))?;
            }
            if !cfg.fft_bins.is_empty() {
                let spectrum = fft_coefficients(x)?;
                for &k in &cfg.fft_bins {
                    let fname = name(&format!("fft.k{k}"));
                    let v = spectrum
                        .get(k)
                        .map(|c| c.norm())
                        .ok_or_else(|| Error::invalid(format!("bin {k} beyond {} samples", x.len())));
                    out.push(fname, v)?;
                }
            }
            for s in &cfg.trend_stats {
                out.push(name(&trend_name(s, cfg.trend_chunk_len)), linear_trend(x, cfg.trend_chunk_len, s.attr, s.agg))?;
            }
            if !cfg.welch_bins.is_empty() {
                let spec = welch_density(x, sample_rate_hz, &cfg.welch);
                for &b in &cfg.welch_bins {
                    let fname = name(&format!("welch.b{b}"));
                    let v = match &spec {
                        Ok(s) => s
                            .psd
                            .get(b)
                            .copied()
                            .ok_or_else(|| Error::invalid(format!("Welch bin {b} out of range"))),
                        Err(e) => Err(Error::invalid(e.to_string())),
                    };
                    out.push(fname, v)?;
                }
            }
            if !cfg.ar_coefs.is_empty() {
                let fit = ar_fit(&normalize_for_ar(x), cfg.ar_lag, false);
                for &c in &cfg.ar_coefs {
                    let v = fit.as_ref().map(|f| f.phi[c - 1]).map_err(clone_err);
                    out.push(name(&format!("arcoef.k{}.phi{c}", cfg.ar_lag)), v)?;
                }
            }
        }
        FeatureSet::ArRelay => {
            let c = cfg.ar_coefs[0];
            let v = ar_fit(&normalize_for_ar(x), cfg.ar_lag, false).map(|f| f.phi[c - 1]);
            out.push(name(&format!("arcoef.k{}.phi{c}", cfg.ar_lag)), v)?;
        }
        FeatureSet::Swing6 => unreachable!("swing6 is assembled from two records"),
    }
    Ok(())
}

fn clone_err(e: &Error) -> Error {
    match e {
        Error::Undefined(m) => Error::Undefined(m.clone()),
        other => Error::InvalidInput(other.to_string()),
    }
}

/// Per-phase features of one record.
pub fn extract(record: &ThreePhaseRecord, cfg: &FeatureConfig) -> Result<FeatureVector> {
    cfg.validate()?;
    if cfg.set == FeatureSet::Swing6 {
        return Err(Error::invalid(
            "swing6 needs voltage and current channels; use extract_swing",
        ));
    }
    let mut out = FeatureVector {
        names: Vec::new(),
        values: Vec::new(),
        degenerate: Vec::new(),
    };
    let fs = record.sampling().sample_rate_hz();
    for p in Phase::ALL {
        phase_features(&mut out, record.phase(p), p.tag(), cfg, fs)?;
    }
    Ok(out)
}

/// Swing features: per phase the fundamental magnitude of the voltage
/// (amplitude-scaled DFT at the bin nearest the nominal frequency), then
/// per phase the configured trend statistic of the current.
pub fn extract_swing(voltage: &ThreePhaseRecord, current: &ThreePhaseRecord, cfg: &FeatureConfig) -> Result<FeatureVector> {
    cfg.validate()?;
    if cfg.set != FeatureSet::Swing6 {
        return Err(Error::invalid("extract_swing requires the swing6 set"));
    }
    if voltage.kind() != RecordKind::Voltage || current.kind() != RecordKind::Current {
        return Err(Error::invalid("swing6 needs a voltage record and a current record"));
    }
    if voltage.len() != current.len() {
        return Err(Error::invalid("voltage and current captures differ in length"));
    }
    let mut out = FeatureVector {
        names: Vec::new(),
        values: Vec::new(),
        degenerate: Vec::new(),
    };
    let n = voltage.len();
    let nc = voltage.sampling().samples_per_cycle();
    let k = ((n as f64 / nc as f64).round() as usize).max(1);
    for p in Phase::ALL {
        let spectrum = fft_coefficients(voltage.phase(p))?;
        let v = spectrum
            .get(k)
            .map(|c| 2.0 * c.norm() / n as f64)
            .ok_or_else(|| Error::invalid(format!("voltage capture too short for bin {k}")));
        out.push(format!("{}.v_fft.k{k}", p.tag()), v)?;
    }
    let s = cfg.trend_stats[0];
    for p in Phase::ALL {
        let v = linear_trend(current.phase(p), cfg.trend_chunk_len, s.attr, s.agg);
        out.push(format!("{}.i_{}", p.tag(), trend_name(&s, cfg.trend_chunk_len)), v)?;
    }
    Ok(out)
}
