//! Interference and coverage for wireless networks whose blockage field is
//! a radial multiplicative cascade: closed-form Laplace-transform solvers
//! for several correlation structures, sectorized-beam coverage with beam
//! selection and switching, and a Monte Carlo simulator used as an
//! independent cross-check.

pub mod analytic;
pub mod beams;
pub mod blockage;
pub mod error;
pub mod geometry;
pub mod montecarlo;
pub mod params;

pub use analytic::{box_lt, db_to_lin, lin_to_db, AnalyticSolver, CoverageCurve};
pub use beams::{shared_depth, BeamConfig, BeamSolver};
pub use blockage::{independent_penetration, sample_tree, BlockageTree};
pub use error::{CascadeError, Result};
pub use geometry::{normalize_angle, CascadeGeometry, StageMode};
pub use montecarlo::{
    estimate_conditional, estimate_coverage, interference, interference_per_beam,
    sample_realization, tail_mean_bound, Estimate, Realization, Strategy,
};
pub use params::{ModelParams, Stages, Variant};
