//! Black-box maximizers used by the outer alternating loop.
//!
//! * [`ga`]: fitness-proportional genetic algorithms, one over real genomes
//!   (phases followed by powers) and one over bit vectors.
//! * [`adam`]: Adam ascent driven by central finite differences.

pub mod adam;
pub mod ga;

pub use adam::{adam_maximize, finite_diff_gradient, AdamConfig, AdamOutcome, AdamState};
pub use ga::{
    crossover_blend, crossover_single_point, ga_binary_run, ga_continuous_run, mutate_continuous,
    repair_power, selection_sample, GaConfig, GaOutcome, GenomeLayout, PowerBounds,
};
