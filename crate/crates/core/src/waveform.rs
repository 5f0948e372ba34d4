//! Signal containers for sampled three-phase transient records, plus
//! noise injection, windowing and CSV/JSON persistence.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sampling rate and nominal system frequency of a record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSampling", into = "RawSampling")]
pub struct SamplingSpec {
    sample_rate_hz: f64,
    nominal_freq_hz: f64,
    samples_per_cycle: usize,
}

#[derive(Serialize, Deserialize)]
struct RawSampling {
    sample_rate_hz: f64,
    nominal_freq_hz: f64,
}

impl TryFrom<RawSampling> for SamplingSpec {
    type Error = Error;
    fn try_from(raw: RawSampling) -> Result<Self> {
        SamplingSpec::new(raw.sample_rate_hz, raw.nominal_freq_hz)
    }
}

impl From<SamplingSpec> for RawSampling {
    fn from(s: SamplingSpec) -> Self {
        RawSampling {
            sample_rate_hz: s.sample_rate_hz,
            nominal_freq_hz: s.nominal_freq_hz,
        }
    }
}

impl SamplingSpec {
    /// `samples_per_cycle` is `round(sample_rate / nominal_freq)`, so
    /// 10 kHz at 60 Hz gives 167.
    pub fn new(sample_rate_hz: f64, nominal_freq_hz: f64) -> Result<Self> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::invalid("sample_rate_hz must be positive"));
        }
        if !(nominal_freq_hz.is_finite() && nominal_freq_hz > 0.0) {
            return Err(Error::invalid("nominal_freq_hz must be positive"));
        }
        if sample_rate_hz <= 2.0 * nominal_freq_hz {
            return Err(Error::invalid(
                "sample_rate_hz must exceed twice the nominal frequency",
            ));
        }
        let samples_per_cycle = (sample_rate_hz / nominal_freq_hz).round() as usize;
        if samples_per_cycle < 8 {
            return Err(Error::invalid(format!(
                "{samples_per_cycle} samples per cycle, at least 8 required"
            )));
        }
        Ok(Self {
            sample_rate_hz,
            nominal_freq_hz,
            samples_per_cycle,
        })
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn nominal_freq_hz(&self) -> f64 {
        self.nominal_freq_hz
    }

    pub fn samples_per_cycle(&self) -> usize {
        self.samples_per_cycle
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate_hz
    }

    pub fn omega(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.nominal_freq_hz
    }

    /// Whole nominal cycles contained in `seconds`.
    pub fn cycle_count(&self, seconds: f64) -> Result<u64> {
        if !(seconds.is_finite() && seconds >= 0.0) {
            return Err(Error::invalid("seconds must be finite and non-negative"));
        }
        // 1e-9 absorbs representation error such as (1/60)*60 = 0.99999...
        Ok((seconds * self.nominal_freq_hz + 1e-9).floor() as u64)
    }

    /// Number of samples covering `cycles` nominal cycles, truncated.
    pub fn cycles_to_samples(&self, cycles: f64) -> usize {
        (cycles * self.samples_per_cycle as f64 + 1e-9).floor() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordKind {
    Current,
    Voltage,
}

impl RecordKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            RecordKind::Current => "current",
            RecordKind::Voltage => "voltage",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Phase {
    #[serde(rename = "a")]
    A,
    #[serde(rename = "b")]
    B,
    #[serde(rename = "c")]
    C,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::A, Phase::B, Phase::C];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn tag(self) -> &'static str {
        match self {
            Phase::A => "phA",
            Phase::B => "phB",
            Phase::C => "phC",
        }
    }
}

macro_rules! string_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $text)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(&self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(Error::invalid(format!(
                        concat!("unknown ", stringify!($name), " '{}'"),
                        other
                    ))),
                }
            }
        }
    };
}

string_enum!(
    /// Event classes produced by the synthesizer and predicted by the cascade.
    Category {
        InternalFault => "internal_fault",
        MagnetizingInrush => "magnetizing_inrush",
        SympatheticInrush => "sympathetic_inrush",
        Overexcitation => "overexcitation",
        ExternalFaultCtSat => "external_fault_ct_sat",
        Ferroresonance => "ferroresonance",
        CapacitorSwitching => "capacitor_switching",
        NonlinearLoadSwitching => "nonlinear_load_switching",
        PowerSwing => "power_swing",
        FaultDuringSwing => "fault_during_swing",
    }
);

string_enum!(
    FaultUnit {
        PowerTransformer => "power_transformer",
        IsparSeries => "ispar_series",
        IsparExciting => "ispar_exciting",
    }
);

string_enum!(
    /// Winding fault types: single/double/triple phase with and without
    /// ground, plus winding-to-winding and turn-to-turn.
    FaultType {
        WaG => "wa-g",
        WbG => "wb-g",
        WcG => "wc-g",
        WaWbG => "wa-wb-g",
        WaWcG => "wa-wc-g",
        WbWcG => "wb-wc-g",
        WaWb => "wa-wb",
        WaWc => "wa-wc",
        WbWc => "wb-wc",
        ThreePhase => "3-ph",
        ThreePhaseG => "3-ph-g",
        WindingToWinding => "w-w",
        TurnToTurn => "t-t",
    }
);

string_enum!(
    Stability {
        Stable => "stable",
        Unstable => "unstable",
    }
);

string_enum!(
    Symmetry {
        Symmetrical => "symmetrical",
        Asymmetrical => "asymmetrical",
    }
);

impl FaultType {
    /// Phases carrying fault current, and whether ground is involved.
    pub fn involvement(self) -> ([bool; 3], bool) {
        use FaultType::*;
        match self {
            WaG => ([true, false, false], true),
            WbG => ([false, true, false], true),
            WcG => ([false, false, true], true),
            WaWbG => ([true, true, false], true),
            WaWcG => ([true, false, true], true),
            WbWcG => ([false, true, true], true),
            WaWb => ([true, true, false], false),
            WaWc => ([true, false, true], false),
            WbWc => ([false, true, true], false),
            ThreePhase => ([true, true, true], false),
            ThreePhaseG => ([true, true, true], true),
            WindingToWinding => ([true, false, false], false),
            TurnToTurn => ([true, false, false], false),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FaultDetail {
    /// Faulted transformer unit; absent for line faults.
    #[serde(default)]
    pub unit: Option<FaultUnit>,
    #[serde(rename = "type")]
    pub fault_type: FaultType,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SwingDetail {
    pub stability: Stability,
    pub symmetry: Symmetry,
}

/// Ground-truth class of a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawLabel", into = "RawLabel")]
pub struct TransientLabel {
    category: Category,
    fault_detail: Option<FaultDetail>,
    swing_detail: Option<SwingDetail>,
}

#[derive(Serialize, Deserialize)]
struct RawLabel {
    category: Category,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fault_detail: Option<FaultDetail>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    swing_detail: Option<SwingDetail>,
}

impl TryFrom<RawLabel> for TransientLabel {
    type Error = Error;
    fn try_from(raw: RawLabel) -> Result<Self> {
        TransientLabel::new(raw.category, raw.fault_detail, raw.swing_detail)
    }
}

impl From<TransientLabel> for RawLabel {
    fn from(l: TransientLabel) -> Self {
        RawLabel {
            category: l.category,
            fault_detail: l.fault_detail,
            swing_detail: l.swing_detail,
        }
    }
}

impl TransientLabel {
    pub fn new(
        category: Category,
        fault_detail: Option<FaultDetail>,
        swing_detail: Option<SwingDetail>,
    ) -> Result<Self> {
        let wants_fault = matches!(
            category,
            Category::InternalFault | Category::FaultDuringSwing
        );
        let wants_swing = category == Category::PowerSwing;
        if wants_fault != fault_detail.is_some() {
            return Err(Error::invalid(format!(
                "fault_detail must be present exactly for fault categories (got {category})"
            )));
        }
        if wants_swing != swing_detail.is_some() {
            return Err(Error::invalid(format!(
                "swing_detail must be present exactly for power_swing (got {category})"
            )));
        }
        Ok(Self {
            category,
            fault_detail,
            swing_detail,
        })
    }

    /// Label for a category without fault or swing detail.
    pub fn disturbance(category: Category) -> Result<Self> {
        Self::new(category, None, None)
    }

    pub fn internal_fault(unit: FaultUnit, fault_type: FaultType) -> Self {
        Self {
            category: Category::InternalFault,
            fault_detail: Some(FaultDetail {
                unit: Some(unit),
                fault_type,
            }),
            swing_detail: None,
        }
    }

    pub fn fault_during_swing(fault_type: FaultType) -> Self {
        Self {
            category: Category::FaultDuringSwing,
            fault_detail: Some(FaultDetail {
                unit: None,
                fault_type,
            }),
            swing_detail: None,
        }
    }

    pub fn power_swing(stability: Stability, symmetry: Symmetry) -> Self {
        Self {
            category: Category::PowerSwing,
            fault_detail: None,
            swing_detail: Some(SwingDetail {
                stability,
                symmetry,
            }),
        }
    }

    pub fn category(&self) -> Category {
        self.category
    }

    pub fn fault_detail(&self) -> Option<FaultDetail> {
        self.fault_detail
    }

    pub fn swing_detail(&self) -> Option<SwingDetail> {
        self.swing_detail
    }
}

/// Compact text form used in the CSV `label` column:
/// `internal_fault/ispar_series/wa-g`, `fault_during_swing/-/3-ph`,
/// `power_swing/unstable/symmetrical`, or the bare category.
impl fmt::Display for TransientLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.category)?;
        if let Some(fd) = self.fault_detail {
            let unit = fd.unit.map(|u| u.as_str()).unwrap_or("-");
            write!(f, "/{unit}/{}", fd.fault_type)?;
        }
        if let Some(sd) = self.swing_detail {
            write!(f, "/{}/{}", sd.stability, sd.symmetry)?;
        }
        Ok(())
    }
}

impl FromStr for TransientLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split('/').collect();
        let category: Category = parts[0].parse()?;
        match (category, parts.len()) {
            (Category::InternalFault | Category::FaultDuringSwing, 3) => {
                let unit = match parts[1] {
                    "-" => None,
                    u => Some(u.parse()?),
                };
                let fault_type = parts[2].parse()?;
                Self::new(category, Some(FaultDetail { unit, fault_type }), None)
            }
            (Category::PowerSwing, 3) => Self::new(
                category,
                None,
                Some(SwingDetail {
                    stability: parts[1].parse()?,
                    symmetry: parts[2].parse()?,
                }),
            ),
            (_, 1) => Self::new(category, None, None),
            _ => Err(Error::invalid(format!("malformed label '{s}'"))),
        }
    }
}

/// A sampled three-phase current or voltage window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreePhaseRecord {
    phases: [Vec<f64>; 3],
    kind: RecordKind,
    sampling: SamplingSpec,
    #[serde(default)]
    label: Option<TransientLabel>,
    #[serde(default)]
    meta: BTreeMap<String, String>,
}

impl ThreePhaseRecord {
    pub fn new(phases: [Vec<f64>; 3], kind: RecordKind, sampling: SamplingSpec) -> Result<Self> {
        let n = phases[0].len();
        if n == 0 {
            return Err(Error::invalid("record must contain at least one sample"));
        }
        if phases.iter().any(|p| p.len() != n) {
            return Err(Error::invalid("phase sequences differ in length"));
        }
        if phases.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::invalid("record contains non-finite samples"));
        }
        Ok(Self {
            phases,
            kind,
            sampling,
            label: None,
            meta: BTreeMap::new(),
        })
    }

    pub fn with_label(mut self, label: Option<TransientLabel>) -> Self {
        self.label = label;
        self
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.meta.insert(key.into(), value.into());
        self
    }

    pub fn len(&self) -> usize {
        self.phases[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn phase(&self, p: Phase) -> &[f64] {
        &self.phases[p.index()]
    }

    pub fn phases(&self) -> &[Vec<f64>; 3] {
        &self.phases
    }

    pub fn kind(&self) -> RecordKind {
        self.kind
    }

    pub fn sampling(&self) -> SamplingSpec {
        self.sampling
    }

    pub fn label(&self) -> Option<TransientLabel> {
        self.label
    }

    pub fn meta(&self) -> &BTreeMap<String, String> {
        &self.meta
    }

    pub fn max_abs(&self) -> f64 {
        self.phases
            .iter()
            .flatten()
            .fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// Every sample multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let phases = self
            .phases
            .clone()
            .map(|p| p.into_iter().map(|x| x * factor).collect::<Vec<_>>());
        let mut out = Self::new(phases, self.kind, self.sampling)?;
        out.label = self.label;
        out.meta = self.meta.clone();
        Ok(out)
    }

    /// Exact slice `[start, start + length)` keeping label, kind and sampling.
    pub fn window(&self, start: usize, length: usize) -> Result<Self> {
        let end = start
            .checked_add(length)
            .ok_or_else(|| Error::OutOfRange("window overflow".into()))?;
        if length == 0 || end > self.len() {
            return Err(Error::OutOfRange(format!(
                "window [{start}, {end}) outside record of length {}",
                self.len()
            )));
        }
        let phases = [0, 1, 2].map(|i| self.phases[i][start..end].to_vec());
        Ok(Self {
            phases,
            kind: self.kind,
            sampling: self.sampling,
            label: self.label,
            meta: self.meta.clone(),
        })
    }

    /// Adds zero-mean Gaussian noise to each phase so that the per-phase
    /// ratio of mean signal power to noise power equals `snr_db` over the
    /// whole record. The realized noise is re-centred and rescaled to the
    /// exact target power. An infinite SNR returns an unchanged copy.
    pub fn add_noise(&self, snr_db: f64, seed: u64) -> Result<Self> {
        if snr_db.is_infinite() && snr_db > 0.0 {
            return Ok(self.clone());
        }
        if !snr_db.is_finite() {
            return Err(Error::invalid("snr_db must be finite or +inf"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.len();
        let mut phases = self.phases.clone();
        for (pi, phase) in phases.iter_mut().enumerate() {
            let power = phase.iter().map(|x| x * x).sum::<f64>() / n as f64;
            if power == 0.0 {
                return Err(Error::undefined(format!(
                    "phase {} is all zero, SNR undefined",
                    Phase::ALL[pi].tag()
                )));
            }
            let target = power / 10f64.powf(snr_db / 10.0);
            let mut noise: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            if n > 1 {
                let mean = noise.iter().sum::<f64>() / n as f64;
                noise.iter_mut().for_each(|v| *v -= mean);
            }
            let realized = noise.iter().map(|v| v * v).sum::<f64>() / n as f64;
            let gain = if realized > 0.0 {
                (target / realized).sqrt()
            } else {
                0.0
            };
            for (x, v) in phase.iter_mut().zip(noise) {
                *x += gain * v;
            }
        }
        let mut out = Self::new(phases, self.kind, self.sampling)?;
        out.label = self.label;
        out.meta = self.meta.clone();
        Ok(out)
    }
}

/// Whole nominal cycles in `seconds` for `spec`.
pub fn cycle_count(spec: &SamplingSpec, seconds: f64) -> Result<u64> {
    spec.cycle_count(seconds)
}

/// Sidecar metadata written next to each CSV file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSidecar {
    pub kind: RecordKind,
    pub sample_rate_hz: f64,
    pub nominal_freq_hz: f64,
    pub units: String,
    /// Per-record metadata in file order; omitted when every map is empty.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub records: Vec<BTreeMap<String, String>>,
}

impl Default for CsvSidecar {
    fn default() -> Self {
        Self {
            kind: RecordKind::Current,
            sample_rate_hz: 10_000.0,
            nominal_freq_hz: 60.0,
            units: "pu".into(),
            records: Vec::new(),
        }
    }
}

/// Path of the JSON sidecar belonging to a CSV file.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

pub const CSV_HEADER: [&str; 5] = ["t", "pa", "pb", "pc", "label"];

/// Writes records as rows of `t,pa,pb,pc,label` plus a JSON sidecar.
///
/// Records are delimited by `t` restarting at zero. All records must share
/// kind and sampling. Samples are written in shortest round-trip form.
pub fn write_csv(records: &[ThreePhaseRecord], path: &Path) -> Result<()> {
    let mut sidecar = CsvSidecar::default();
    if let Some(first) = records.first() {
        sidecar.kind = first.kind;
        sidecar.sample_rate_hz = first.sampling.sample_rate_hz;
        sidecar.nominal_freq_hz = first.sampling.nominal_freq_hz;
        sidecar.units = first
            .meta
            .get("units")
            .cloned()
            .unwrap_or_else(|| "pu".into());
        for r in records {
            if r.kind != first.kind || r.sampling != first.sampling {
                return Err(Error::invalid(
                    "all records in one CSV file must share kind and sampling",
                ));
            }
        }
        if records.iter().any(|r| !r.meta.is_empty()) {
            sidecar.records = records.iter().map(|r| r.meta.clone()).collect();
        }
    }

    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(file));
    let csv_err = |e: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        line: 0,
        message: e.to_string(),
    };
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    let dt = 1.0 / sidecar.sample_rate_hz;
    for r in records {
        let label = r.label.map(|l| l.to_string()).unwrap_or_default();
        for i in 0..r.len() {
            let t = i as f64 * dt;
            w.write_record([
                t.to_string(),
                r.phases[0][i].to_string(),
                r.phases[1][i].to_string(),
                r.phases[2][i].to_string(),
                label.clone(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;

    let side = sidecar_path(path);
    let mut f = BufWriter::new(File::create(&side).map_err(|e| Error::io(&side, e))?);
    serde_json::to_writer_pretty(&mut f, &sidecar)?;
    f.write_all(b"\n").map_err(|e| Error::io(&side, e))?;
    Ok(())
}

/// Reads a CSV written by [`write_csv`] (or shaped like it).
///
/// Malformed headers, ragged rows, unparsable or non-finite values are
/// reported with their 1-based line number.
pub fn read_csv(path: &Path) -> Result<Vec<ThreePhaseRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(BufReader::new(file));
    let bad = |line: u64, message: String| Error::Csv {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut rows = rdr.records();
    match rows.next() {
        None => return Err(bad(1, "missing header".into())),
        Some(Err(e)) => return Err(bad(1, e.to_string())),
        Some(Ok(h)) => {
            let fields: Vec<&str> = h.iter().map(str::trim).collect();
            if fields != CSV_HEADER {
                return Err(bad(1, format!("expected header t,pa,pb,pc,label, got {}", fields.join(","))));
            }
        }
    }

    struct Pending {
        phases: [Vec<f64>; 3],
        label: Option<TransientLabel>,
        label_text: String,
        last_t: f64,
    }
    let mut pending: Vec<Pending> = Vec::new();
    for row in rows {
        let row = row.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            bad(line, e.to_string())
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() != 5 {
            return Err(bad(line, format!("expected 5 fields, found {}", row.len())));
        }
        let mut vals = [0.0; 4];
        for (k, v) in vals.iter_mut().enumerate() {
            let text = row[k].trim();
            *v = text
                .parse::<f64>()
                .map_err(|_| bad(line, format!("cannot parse '{text}' in column {}", CSV_HEADER[k])))?;
            if !v.is_finite() {
                return Err(bad(line, format!("non-finite value in column {}", CSV_HEADER[k])));
            }
        }
        let label_text = row[4].trim();
        let starts_new = match pending.last() {
            None => true,
            Some(p) => vals[0] <= p.last_t || p.label_text != label_text,
        };
        if starts_new {
            let label = if label_text.is_empty() {
                None
            } else {
                Some(label_text.parse().map_err(|e: Error| bad(line, e.to_string()))?)
            };
            pending.push(Pending {
                phases: [Vec::new(), Vec::new(), Vec::new()],
                label,
                label_text: label_text.to_string(),
                last_t: vals[0],
            });
        }
        let p = pending.last_mut().expect("pending record");
        p.last_t = vals[0];
        for k in 0..3 {
            p.phases[k].push(vals[k + 1]);
        }
    }
    if pending.is_empty() {
        return Ok(Vec::new());
    }

    let side = sidecar_path(path);
    let text = std::fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let sidecar: CsvSidecar = serde_json::from_str(&text)?;
    let sampling = SamplingSpec::new(sidecar.sample_rate_hz, sidecar.nominal_freq_hz)?;
    if !sidecar.records.is_empty() && sidecar.records.len() != pending.len() {
        return Err(Error::invalid(format!(
            "sidecar lists {} records but CSV holds {}",
            sidecar.records.len(),
            pending.len()
        )));
    }
    pending
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut r = ThreePhaseRecord::new(p.phases, sidecar.kind, sampling)?.with_label(p.label);
            if let Some(meta) = sidecar.records.get(i) {
                r.meta = meta.clone();
            }
            Ok(r)
        })
        .collect()
}
