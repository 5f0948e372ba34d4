//! Relay decision layer: classifier cascades, autoregressive direction and
//! zone rules, and ground-fault impedance measurement.

mod ar_rules;
mod cascade;
mod impedance;

pub use ar_rules::{
    ar_coefficients, ar_direction, ar_zone, direction_rule, direction_table, zone_rule, zone_table, ArRelayConfig,
    ArTableRow, Direction, Zone,
};
pub use cascade::{
    build_cascade, build_swing_cascade, classify_event, classify_swing, present_balanced_accuracy, stage_features,
    CascadeConfig, CascadeEvaluation, CascadeModel, DetectorKind, RelayDecision, StageEvaluation, StageKind, StageSpec,
    TrainedStage, Verdict, CASCADE_VERSION, MIN_ROWS_PER_CLASS,
};
pub use impedance::{in_zone, measure_impedance, ImpedanceParams, ZoneShape};
