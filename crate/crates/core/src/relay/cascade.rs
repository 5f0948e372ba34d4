//! Staged classifier cascades behind the trip/restrain/block decision.
//!
//! Every stage owns its capture window (cycles before/after the detector
//! trigger), its feature configuration and a trained model. Stages are
//! trained independently on the records whose ground-truth label routes
//! to them; at run time the detector gates the cascade and each stage's
//! prediction selects the next.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ar_rules::{ar_direction, ar_zone, ArRelayConfig, Direction, Zone};
use crate::detector::{capture_at, cdf_scan, ed_scan, DetectionResult, DetectorConfig};
use crate::error::{Error, Result};
use crate::features::{extract, extract_swing, F5Preset, FeatureConfig, FeatureSet, FeatureVector};
use crate::learn::{cross_val_score, train, ConfusionMatrix, Dataset, Metric, TrainedModel, TrainerConfig};
use crate::txmodel::derive_seed;
use crate::waveform::{Category, FaultType, FaultUnit, Stability, Symmetry, ThreePhaseRecord, TransientLabel};

pub const CASCADE_VERSION: &str = "cascade_v1";

/// Fewest training rows a stage accepts for any of its classes.
pub const MIN_ROWS_PER_CLASS: usize = 10;

const DETECT_FAULT: &str = "internal_fault";
const DETECT_OTHER: &str = "disturbance";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StageKind {
    /// Internal fault vs. everything else.
    Detect,
    /// Faulted unit.
    Locate,
    /// Winding fault type within one unit.
    FaultType { unit: FaultUnit },
    /// Category of a non-fault event.
    DisturbanceType,
    /// Fault, fault during swing, or power swing.
    SwingEvent,
    SwingStability,
    SwingSymmetry,
}

impl StageKind {
    /// The class a labelled record contributes to this stage, if any.
    pub fn target(&self, label: &TransientLabel) -> Option<String> {
        let cat = label.category();
        let fault = label.fault_detail();
        let swing = label.swing_detail();
        match self {
            StageKind::Detect => Some(if cat == Category::InternalFault { DETECT_FAULT } else { DETECT_OTHER }.into()),
            StageKind::Locate => fault.and_then(|f| f.unit).map(|u| u.as_str().into()),
            StageKind::FaultType { unit } => fault
                .filter(|f| f.unit == Some(*unit))
                .map(|f| f.fault_type.as_str().into()),
            StageKind::DisturbanceType => (cat != Category::InternalFault).then(|| cat.as_str().into()),
            StageKind::SwingEvent => match cat {
                Category::InternalFault => Some("fault".into()),
                Category::FaultDuringSwing | Category::PowerSwing => Some(cat.as_str().into()),
                _ => None,
            },
            StageKind::SwingStability => swing.map(|s| s.stability.as_str().into()),
            StageKind::SwingSymmetry => swing.map(|s| s.symmetry.as_str().into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageSpec {
    pub name: String,
    pub kind: StageKind,
    pub features: FeatureConfig,
    pub pre_cycles: f64,
    pub post_cycles: f64,
}

impl StageSpec {
    pub fn new(name: &str, kind: StageKind, features: FeatureConfig, pre_cycles: f64, post_cycles: f64) -> Self {
        Self {
            name: name.into(),
            kind,
            features,
            pre_cycles,
            post_cycles,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pre_cycles >= 0.0 && self.post_cycles > 0.0 && self.pre_cycles.is_finite() && self.post_cycles.is_finite()) {
            return Err(Error::invalid(format!("stage {}: capture needs pre >= 0 and post > 0 cycles", self.name)));
        }
        if self.pre_cycles + self.post_cycles < 1.0 {
            return Err(Error::invalid(format!("stage {}: capture shorter than one cycle", self.name)));
        }
        self.features
            .validate()
            .map_err(|e| Error::invalid(format!("stage {}: {e}", self.name)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    Ed,
    #[default]
    Cdf,
}

fn default_folds() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CascadeConfig {
    #[serde(default)]
    pub detector: DetectorConfig,
    #[serde(default)]
    pub detector_kind: DetectorKind,
    pub stages: Vec<StageSpec>,
    pub trainer: TrainerConfig,
    /// Folds for the per-stage CV score; 0 skips cross-validation.
    #[serde(default = "default_folds")]
    pub cv_folds: usize,
    #[serde(default)]
    pub seed: u64,
}

impl CascadeConfig {
    fn with_stages(stages: Vec<StageSpec>, trainer: TrainerConfig) -> Self {
        Self {
            detector: DetectorConfig::default(),
            detector_kind: DetectorKind::Cdf,
            stages,
            trainer,
            cv_folds: 5,
            seed: 0,
        }
    }

    /// Six classifiers: detection on 1.5 cycles, unit location and
    /// per-unit fault type and disturbance type on 3 cycles.
    pub fn differential(trainer: TrainerConfig) -> Self {
        let mut stages = vec![
            StageSpec::new("detect", StageKind::Detect, FeatureConfig::f5(F5Preset::Detect), 0.5, 1.0),
            StageSpec::new("locate", StageKind::Locate, FeatureConfig::f5(F5Preset::Locate), 0.5, 2.5),
        ];
        for unit in FaultUnit::ALL {
            let preset = if *unit == FaultUnit::IsparSeries {
                F5Preset::FaultTypeSeries
            } else {
                F5Preset::FaultTypeOther
            };
            stages.push(StageSpec::new(
                &format!("fault_type/{}", unit.as_str()),
                StageKind::FaultType { unit: *unit },
                FeatureConfig::f5(preset),
                0.5,
                2.5,
            ));
        }
        stages.push(StageSpec::new(
            "disturbance_type",
            StageKind::DisturbanceType,
            FeatureConfig::f5(F5Preset::Disturbance),
            0.5,
            2.5,
        ));
        Self::with_stages(stages, trainer)
    }

    /// Three classifiers on one-cycle wavelet-energy captures: internal
    /// fault detection, faulty-unit location and disturbance type, gated
    /// by the ED detector.
    pub fn three_stage(trainer: TrainerConfig) -> Self {
        let stages = vec![
            StageSpec::new("detect", StageKind::Detect, FeatureConfig::we6(), 0.0, 1.0),
            StageSpec::new("locate", StageKind::Locate, FeatureConfig::we6(), 0.0, 1.0),
            StageSpec::new("disturbance_type", StageKind::DisturbanceType, FeatureConfig::we6(), 0.0, 1.0),
        ];
        Self {
            detector_kind: DetectorKind::Ed,
            ..Self::with_stages(stages, trainer)
        }
    }

    /// Swing pipeline: event type from one post-trigger cycle, then
    /// stability and symmetry from ten.
    pub fn swing(trainer: TrainerConfig) -> Self {
        let stages = vec![
            StageSpec::new("swing_event", StageKind::SwingEvent, FeatureConfig::swing6(), 0.0, 1.0),
            StageSpec::new("swing_stability", StageKind::SwingStability, FeatureConfig::swing6(), 0.0, 10.0),
            StageSpec::new("swing_symmetry", StageKind::SwingSymmetry, FeatureConfig::swing6(), 0.0, 10.0),
        ];
        Self::with_stages(stages, trainer)
    }

    pub fn validate(&self) -> Result<()> {
        self.detector.validate()?;
        if self.stages.is_empty() {
            return Err(Error::invalid("cascade has no stages"));
        }
        let mut names = BTreeSet::new();
        let mut kinds = Vec::new();
        for s in &self.stages {
            s.validate()?;
            if !names.insert(s.name.as_str()) {
                return Err(Error::invalid(format!("duplicate stage name {:?}", s.name)));
            }
            if kinds.contains(&s.kind) {
                return Err(Error::invalid(format!("stage {}: kind {:?} appears twice", s.name, s.kind)));
            }
            kinds.push(s.kind);
        }
        if self.cv_folds == 1 {
            return Err(Error::invalid("cv_folds must be 0 (skip) or at least 2"));
        }
        Ok(())
    }

    /// Detector settings whose lookahead covers the longest stage capture.
    pub fn effective_detector(&self) -> DetectorConfig {
        let post = self.stages.iter().map(|s| s.post_cycles).fold(self.detector.post_cycles, f64::max);
        DetectorConfig {
            post_cycles: post,
            ..self.detector
        }
    }

    pub fn detect(&self, current: &ThreePhaseRecord) -> Result<DetectionResult> {
        let det = self.effective_detector();
        match self.detector_kind {
            DetectorKind::Ed => ed_scan(current, &det),
            DetectorKind::Cdf => cdf_scan(current, &det),
        }
    }

    fn stage(&self, kind: StageKind) -> Option<usize> {
        self.stages.iter().position(|s| s.kind == kind)
    }
}

/// Feature vector of one stage for an event triggered at `trigger`.
pub fn stage_features(
    spec: &StageSpec,
    current: &ThreePhaseRecord,
    voltage: Option<&ThreePhaseRecord>,
    trigger: usize,
) -> Result<FeatureVector> {
    let ci = capture_at(current, trigger, spec.pre_cycles, spec.post_cycles)?;
    let fv = if spec.features.set == FeatureSet::Swing6 {
        let v = voltage.ok_or_else(|| Error::invalid(format!("stage {}: swing6 needs voltage channels", spec.name)))?;
        let cv = capture_at(v, trigger, spec.pre_cycles, spec.post_cycles)?;
        extract_swing(&cv, &ci, &spec.features)
    } else {
        extract(&ci, &spec.features)
    };
    fv.map_err(|e| Error::invalid(format!("stage {}: {e}", spec.name)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedStage {
    pub spec: StageSpec,
    pub feature_names: Vec<String>,
    pub model: TrainedModel,
    /// Mean cross-validated balanced accuracy, when CV ran.
    pub cv_score: Option<f64>,
    pub class_counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeModel {
    pub version: String,
    pub config: CascadeConfig,
    pub stages: Vec<TrainedStage>,
    /// Training records on which the detector did not fire.
    pub untriggered: usize,
}

struct Event<'a> {
    current: &'a ThreePhaseRecord,
    voltage: Option<&'a ThreePhaseRecord>,
}

impl Event<'_> {
    fn label(&self) -> Option<TransientLabel> {
        self.current.label().or_else(|| self.voltage.and_then(|v| v.label()))
    }
}

fn current_events(records: &[ThreePhaseRecord]) -> Vec<Event<'_>> {
    records.iter().map(|r| Event { current: r, voltage: None }).collect()
}

fn swing_events(pairs: &[(ThreePhaseRecord, ThreePhaseRecord)]) -> Vec<Event<'_>> {
    pairs
        .iter()
        .map(|(v, i)| Event {
            current: i,
            voltage: Some(v),
        })
        .collect()
}

/// Trains every stage on labelled current records.
pub fn build_cascade(records: &[ThreePhaseRecord], cfg: &CascadeConfig) -> Result<CascadeModel> {
    build(&current_events(records), cfg)
}

/// Trains every stage on labelled (voltage, current) pairs.
pub fn build_swing_cascade(pairs: &[(ThreePhaseRecord, ThreePhaseRecord)], cfg: &CascadeConfig) -> Result<CascadeModel> {
    build(&swing_events(pairs), cfg)
}

fn triggers(events: &[Event], cfg: &CascadeConfig) -> Result<Vec<Option<usize>>> {
    events.iter().map(|e| Ok(cfg.detect(e.current)?.trigger_index)).collect()
}

fn build(events: &[Event], cfg: &CascadeConfig) -> Result<CascadeModel> {
    cfg.validate()?;
    let labels = events
        .iter()
        .enumerate()
        .map(|(i, e)| e.label().ok_or_else(|| Error::invalid(format!("training record {i} has no label"))))
        .collect::<Result<Vec<_>>>()?;
    let trig = triggers(events, cfg)?;
    let untriggered = trig.iter().filter(|t| t.is_none()).count();
    let mut stages = Vec::new();
    for (si, spec) in cfg.stages.iter().enumerate() {
        let mut vectors = Vec::new();
        let mut targets = Vec::new();
        for ((e, label), t) in events.iter().zip(&labels).zip(&trig) {
            let (Some(t), Some(target)) = (t, spec.kind.target(label)) else { continue };
            vectors.push(stage_features(spec, e.current, e.voltage, *t)?);
            targets.push(target);
        }
        let class_names: Vec<String> = targets.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
        if class_names.len() < 2 {
            return Err(Error::invalid(format!(
                "stage {}: needs at least 2 classes, found {}",
                spec.name,
                class_names.len()
            )));
        }
        let y: Vec<usize> = targets
            .iter()
            .map(|t| class_names.binary_search(t).expect("target collected above"))
            .collect();
        let mut counts = vec![0usize; class_names.len()];
        y.iter().for_each(|&c| counts[c] += 1);
        if let Some(c) = counts.iter().position(|&n| n < MIN_ROWS_PER_CLASS) {
            return Err(Error::invalid(format!(
                "stage {}: class {} has {} rows, need at least {MIN_ROWS_PER_CLASS}",
                spec.name, class_names[c], counts[c]
            )));
        }
        let feature_names = vectors[0].names.clone();
        let rows = vectors.into_iter().map(|v| v.values).collect();
        let d = Dataset::new(rows, y, class_names)?;
        let cv_score = if cfg.cv_folds > 0 {
            Some(cross_val_score(
                &d,
                &cfg.trainer,
                cfg.cv_folds,
                Metric::BalancedAccuracy,
                derive_seed(cfg.seed, si as u64, 0xc5),
            )?)
        } else {
            None
        };
        let model = train(&d, &cfg.trainer).map_err(|e| Error::Model(format!("stage {}: {e}", spec.name)))?;
        stages.push(TrainedStage {
            spec: spec.clone(),
            feature_names,
            model,
            cv_score,
            class_counts: counts,
        });
    }
    CascadeModel::assemble(cfg.clone(), stages, untriggered)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Trip,
    Restrain,
    Block,
    NoEvent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelayDecision {
    pub verdict: Verdict,
    pub category: Option<Category>,
    #[serde(rename = "unit")]
    pub faulty_unit: Option<FaultUnit>,
    pub fault_type: Option<FaultType>,
    pub stability: Option<Stability>,
    pub symmetry: Option<Symmetry>,
    pub direction: Option<Direction>,
    pub zone: Option<Zone>,
    /// Winning-class score of every stage that ran.
    pub stage_confidences: BTreeMap<String, f64>,
    pub trigger_index: Option<usize>,
}

impl RelayDecision {
    fn empty(verdict: Verdict, trigger_index: Option<usize>) -> Self {
        Self {
            verdict,
            category: None,
            faulty_unit: None,
            fault_type: None,
            stability: None,
            symmetry: None,
            direction: None,
            zone: None,
            stage_confidences: BTreeMap::new(),
            trigger_index,
        }
    }

    pub fn no_event() -> Self {
        Self::empty(Verdict::NoEvent, None)
    }

    /// Adds the autoregressive direction and zone verdicts computed on
    /// `capture`; the zone is only meaningful for forward faults.
    pub fn annotate_ar(&mut self, capture: &ThreePhaseRecord, cfg: &ArRelayConfig) -> Result<()> {
        let dir = ar_direction(capture, cfg)?;
        self.direction = Some(dir);
        self.zone = if dir == Direction::DfigFed {
            Some(ar_zone(capture, cfg)?)
        } else {
            None
        };
        Ok(())
    }
}

/// Per-stage held-out metrics. Recall is `None` for classes with no true
/// rows; balanced accuracy averages the others.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageEvaluation {
    pub name: String,
    pub class_names: Vec<String>,
    pub confusion: ConfusionMatrix,
    pub per_class_recall: Vec<Option<f64>>,
    pub balanced_accuracy: f64,
    /// Rows whose true class the stage never saw in training.
    pub unseen: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeEvaluation {
    pub stages: Vec<StageEvaluation>,
    pub untriggered: usize,
}

/// Mean recall over classes that have true rows.
pub fn present_balanced_accuracy(cm: &ConfusionMatrix) -> (Vec<Option<f64>>, f64) {
    let recall: Vec<Option<f64>> = cm
        .counts
        .iter()
        .enumerate()
        .map(|(k, row)| {
            let total: u64 = row.iter().sum();
            (total > 0).then(|| row[k] as f64 / total as f64)
        })
        .collect();
    let present: Vec<f64> = recall.iter().flatten().copied().collect();
    let ba = if present.is_empty() {
        f64::NAN
    } else {
        present.iter().sum::<f64>() / present.len() as f64
    };
    (recall, ba)
}

impl CascadeModel {
    /// Checks that every stage's model accepts its feature layout.
    pub fn assemble(config: CascadeConfig, stages: Vec<TrainedStage>, untriggered: usize) -> Result<Self> {
        config.validate()?;
        if stages.len() != config.stages.len() {
            return Err(Error::Model(format!("{} trained stages for {} configured", stages.len(), config.stages.len())));
        }
        for (s, spec) in stages.iter().zip(&config.stages) {
            if s.spec != *spec {
                return Err(Error::Model(format!("stage {}: spec differs from the configuration", spec.name)));
            }
            let width = s.feature_names.len();
            if s.model.n_features != width || spec.features.width().is_some_and(|w| w != width) {
                return Err(Error::Model(format!(
                    "stage {}: model expects {} features, stage produces {width}",
                    spec.name, s.model.n_features
                )));
            }
        }
        Ok(Self {
            version: CASCADE_VERSION.into(),
            config,
            stages,
            untriggered,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Model(format!("malformed cascade: {e}")))?;
        match v.get("version").and_then(|s| s.as_str()) {
            Some(CASCADE_VERSION) => {}
            Some(other) => {
                return Err(Error::Model(format!("unsupported cascade version {other:?}, expected {CASCADE_VERSION}")))
            }
            None => return Err(Error::Model("cascade file has no version field".into())),
        }
        let m: CascadeModel = serde_json::from_value(v).map_err(|e| Error::Model(format!("malformed cascade: {e}")))?;
        Self::assemble(m.config, m.stages, m.untriggered)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Predicted class name and its score for one stage.
    fn run_stage(&self, si: usize, current: &ThreePhaseRecord, voltage: Option<&ThreePhaseRecord>, trigger: usize) -> Result<(String, f64)> {
        let st = &self.stages[si];
        let fv = stage_features(&st.spec, current, voltage, trigger)?;
        if fv.len() != st.model.n_features {
            return Err(Error::Model(format!(
                "stage {}: {} features, model expects {}",
                st.spec.name,
                fv.len(),
                st.model.n_features
            )));
        }
        let p = st.model.predict_rows([fv.values.as_slice()])?;
        let k = p.labels[0];
        Ok((st.model.class_names[k].clone(), p.scores[0][k]))
    }

    fn evaluate_events(&self, events: &[Event]) -> Result<CascadeEvaluation> {
        let trig = triggers(events, &self.config)?;
        let mut out = Vec::new();
        for (si, st) in self.stages.iter().enumerate() {
            let names = &st.model.class_names;
            let mut cm = ConfusionMatrix::new(names.len());
            let mut unseen = 0;
            for (e, t) in events.iter().zip(&trig) {
                let (Some(t), Some(label)) = (t, e.label()) else { continue };
                let Some(target) = st.spec.kind.target(&label) else { continue };
                let Some(truth) = names.iter().position(|n| *n == target) else {
                    unseen += 1;
                    continue;
                };
                let (pred, _) = self.run_stage(si, e.current, e.voltage, *t)?;
                let p = names.iter().position(|n| *n == pred).expect("prediction is a model class");
                cm.counts[truth][p] += 1;
            }
            let (per_class_recall, balanced_accuracy) = present_balanced_accuracy(&cm);
            out.push(StageEvaluation {
                name: st.spec.name.clone(),
                class_names: names.clone(),
                confusion: cm,
                per_class_recall,
                balanced_accuracy,
                unseen,
            });
        }
        Ok(CascadeEvaluation {
            stages: out,
            untriggered: trig.iter().filter(|t| t.is_none()).count(),
        })
    }

    /// Each stage scored on the labelled records that route to it, with
    /// the ground-truth routing (stage errors do not compound).
    pub fn evaluate(&self, records: &[ThreePhaseRecord]) -> Result<CascadeEvaluation> {
        self.evaluate_events(&current_events(records))
    }

    pub fn evaluate_swing(&self, pairs: &[(ThreePhaseRecord, ThreePhaseRecord)]) -> Result<CascadeEvaluation> {
        self.evaluate_events(&swing_events(pairs))
    }
}

fn parse_class<T: std::str::FromStr<Err = Error>>(stage: &str, name: &str) -> Result<T> {
    name.parse()
        .map_err(|e| Error::Model(format!("stage {stage}: class {name:?} is not recognised: {e}")))
}

/// Differential-relay decision for one current record.
pub fn classify_event(m: &CascadeModel, record: &ThreePhaseRecord) -> Result<RelayDecision> {
    let cfg = &m.config;
    let det_stage = cfg
        .stage(StageKind::Detect)
        .ok_or_else(|| Error::Model("cascade has no detect stage".into()))?;
    let det = cfg.detect(record)?;
    let Some(t) = det.trigger_index else {
        return Ok(RelayDecision::no_event());
    };
    let mut d = RelayDecision::empty(Verdict::Restrain, Some(t));
    let (cls, conf) = m.run_stage(det_stage, record, None, t)?;
    d.stage_confidences.insert(cfg.stages[det_stage].name.clone(), conf);
    if cls == DETECT_FAULT {
        d.verdict = Verdict::Trip;
        d.category = Some(Category::InternalFault);
        if let Some(si) = cfg.stage(StageKind::Locate) {
            let (cls, conf) = m.run_stage(si, record, None, t)?;
            d.stage_confidences.insert(cfg.stages[si].name.clone(), conf);
            let unit: FaultUnit = parse_class(&cfg.stages[si].name, &cls)?;
            d.faulty_unit = Some(unit);
            if let Some(si) = cfg.stage(StageKind::FaultType { unit }) {
                let (cls, conf) = m.run_stage(si, record, None, t)?;
                d.stage_confidences.insert(cfg.stages[si].name.clone(), conf);
                d.fault_type = Some(parse_class(&cfg.stages[si].name, &cls)?);
            }
        }
    } else if let Some(si) = cfg.stage(StageKind::DisturbanceType) {
        let (cls, conf) = m.run_stage(si, record, None, t)?;
        d.stage_confidences.insert(cfg.stages[si].name.clone(), conf);
        d.category = Some(parse_class(&cfg.stages[si].name, &cls)?);
    }
    Ok(d)
}

/// Swing-scheme decision for one (voltage, current) record pair: the
/// detector gates, the event stage trips on faults, and a swing is blocked
/// when the stability stage calls it unstable.
pub fn classify_swing(m: &CascadeModel, voltage: &ThreePhaseRecord, current: &ThreePhaseRecord) -> Result<RelayDecision> {
    let cfg = &m.config;
    let ev = cfg
        .stage(StageKind::SwingEvent)
        .ok_or_else(|| Error::Model("cascade has no swing_event stage".into()))?;
    let det = cfg.detect(current)?;
    let Some(t) = det.trigger_index else {
        return Ok(RelayDecision::no_event());
    };
    let mut d = RelayDecision::empty(Verdict::Restrain, Some(t));
    let (cls, conf) = m.run_stage(ev, current, Some(voltage), t)?;
    d.stage_confidences.insert(cfg.stages[ev].name.clone(), conf);
    match cls.as_str() {
        "fault" => {
            d.verdict = Verdict::Trip;
            d.category = Some(Category::InternalFault);
        }
        "fault_during_swing" => {
            d.verdict = Verdict::Trip;
            d.category = Some(Category::FaultDuringSwing);
        }
        "power_swing" => {
            d.category = Some(Category::PowerSwing);
            if let Some(si) = cfg.stage(StageKind::SwingStability) {
                let (cls, conf) = m.run_stage(si, current, Some(voltage), t)?;
                d.stage_confidences.insert(cfg.stages[si].name.clone(), conf);
                let s: Stability = parse_class(&cfg.stages[si].name, &cls)?;
                d.stability = Some(s);
                if s == Stability::Unstable {
                    d.verdict = Verdict::Block;
                }
            }
            if let Some(si) = cfg.stage(StageKind::SwingSymmetry) {
                let (cls, conf) = m.run_stage(si, current, Some(voltage), t)?;
                d.stage_confidences.insert(cfg.stages[si].name.clone(), conf);
                d.symmetry = Some(parse_class(&cfg.stages[si].name, &cls)?);
            }
        }
        other => {
            return Err(Error::Model(format!(
                "stage {}: unexpected class {other:?}",
                cfg.stages[ev].name
            )))
        }
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::{BoostConfig, TreeConfig};
    use crate::txmodel::{generate_corpus, generate_swing_corpus, CorpusSpec};
    use crate::waveform::{RecordKind, SamplingSpec};

    fn spec() -> SamplingSpec {
        SamplingSpec::new(10_000.0, 60.0).unwrap()
    }

    fn corpus(per_class: usize) -> Vec<ThreePhaseRecord> {
        let cs = CorpusSpec {
            per_class,
            n_cycles: 6,
            snr_db: Some(40.0),
            seed: 11,
        };
        generate_corpus(&spec(), &cs).unwrap()
    }

    fn tree() -> TrainerConfig {
        TrainerConfig::DecisionTree(TreeConfig::default())
    }

    fn steady() -> ThreePhaseRecord {
        let phases = [0.0, 2.0944, 4.18879].map(|ph: f64| {
            (0..1002).map(|i| (2.0 * std::f64::consts::PI * 60.0 * i as f64 / 10_000.0 + ph).sin()).collect::<Vec<_>>()
        });
        ThreePhaseRecord::new(phases, RecordKind::Current, spec()).unwrap()
    }

    #[test]
    fn two_stage_cascade_reports_scores() {
        let mut cfg = CascadeConfig::differential(tree());
        cfg.stages.retain(|s| matches!(s.kind, StageKind::Detect | StageKind::DisturbanceType));
        cfg.cv_folds = 3;
        let m = build_cascade(&corpus(12), &cfg).unwrap();
        assert_eq!(m.stages.len(), 2);
        assert!(m.stages.iter().all(|s| s.cv_score.is_some()));
        let back = CascadeModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);

        assert_eq!(classify_event(&m, &steady()).unwrap().verdict, Verdict::NoEvent);

        let mut broken = m.clone();
        broken.stages[0].feature_names.pop();
        assert!(CascadeModel::assemble(broken.config, broken.stages, 0).is_err());
        let bad = m.to_json().unwrap().replace(CASCADE_VERSION, "cascade_v0");
        assert!(matches!(CascadeModel::from_json(&bad), Err(Error::Model(_))));
    }

    #[test]
    fn under_populated_stage_is_named() {
        let cfg = CascadeConfig::differential(tree());
        let err = build_cascade(&corpus(12), &cfg).unwrap_err().to_string();
        assert!(err.contains("stage fault_type/"), "{err}");
    }

    #[test]
    fn trip_only_on_detected_faults() {
        let records = corpus(30);
        let mut cfg = CascadeConfig::differential(TrainerConfig::Boosted(BoostConfig {
            n_stages: 30,
            ..BoostConfig::default()
        }));
        cfg.stages.retain(|s| !matches!(s.kind, StageKind::FaultType { .. }));
        cfg.cv_folds = 0;
        let m = build_cascade(&records, &cfg).unwrap();
        let mut correct = 0;
        for r in &records {
            let d = classify_event(&m, r).unwrap();
            if d.verdict == Verdict::Trip {
                assert_eq!(d.category, Some(Category::InternalFault));
                assert!(d.faulty_unit.is_some());
                assert!(d.trigger_index.is_some());
            }
            let truth = r.label().unwrap().category();
            let expect = if truth == Category::InternalFault { Verdict::Trip } else { Verdict::Restrain };
            correct += usize::from(d.verdict == expect);
        }
        assert!(correct as f64 / records.len() as f64 > 0.95, "{correct}/{}", records.len());
    }

    #[test]
    fn swing_pipeline_verdicts() {
        let cs = CorpusSpec {
            per_class: 12,
            n_cycles: 13,
            snr_db: None,
            seed: 5,
        };
        let pairs = generate_swing_corpus(&spec(), &cs).unwrap();
        let mut cfg = CascadeConfig::swing(tree());
        cfg.cv_folds = 0;
        let m = build_swing_cascade(&pairs, &cfg).unwrap();
        let eval = m.evaluate_swing(&pairs).unwrap();
        assert_eq!(eval.stages.len(), 3);
        for (v, i) in &pairs {
            let d = classify_swing(&m, v, i).unwrap();
            let label = i.label().unwrap();
            match label.category() {
                Category::InternalFault | Category::FaultDuringSwing => assert_eq!(d.verdict, Verdict::Trip),
                _ => {
                    let unstable = label.swing_detail().unwrap().stability == Stability::Unstable;
                    assert_eq!(d.verdict, if unstable { Verdict::Block } else { Verdict::Restrain });
                }
            }
        }
        assert!(classify_event(&m, &pairs[0].1).is_err());
    }
}
