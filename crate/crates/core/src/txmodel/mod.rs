//! Transformer fault models, flux identities and the scenario synthesizer.

mod corpus;
mod coupled;
mod flux;
mod matrices;
mod synth;

pub use corpus::{
    derive_seed, generate_corpus, generate_swing_corpus, random_scenario, CorpusSpec,
    DIFFERENTIAL_CLASSES, SWING_CLASSES,
};
pub use coupled::{simulate_coupled, CoupledTrace};
pub use flux::{inrush_flux, par_power, quadrature_voltage, sympathetic_flux_increment};
pub use matrices::{
    three_winding_matrix, two_winding_matrix, InductanceMatrix, ThreeWindingParams,
    TwoWindingParams, WindingFaultSpec,
};
pub use synth::{synthesize, synthesize_swing_pair, ScenarioKind, SynthesisScenario};
