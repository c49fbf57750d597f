//! Spike ("pimple") renormings of Euclidean space and the display pipeline
//! built on them.

pub mod display;
pub mod embed;
pub mod lambda;
pub mod norm;
pub mod schedule;

pub use display::{default_sequence, display_and_verify, display_renorm, isometry_group_from_extremes, norm_deviation, DisplayConfig, DisplayResult, IsometryReport};
pub use lambda::{check_pimple_properties, select_lambda, LambdaConfig, PropertyReport, SpikeLevel};
pub use norm::{min_single_norm, single_pimple_norm, single_pimple_norm_with, PimpleSolution, PimpleSpace, Spike};
pub use schedule::{build_y_sequence, distinguished_mu, MuSchedule, SeparationReport};
