//! Finite pointed Gromov distances, metric and dilatation profiles, their
//! equivalence test, and the actions on structures that profiles are
//! compared across.

mod actions;
mod curve;
mod gh;
mod sample;

pub use actions::{ensemble_action, EnsembleAction};
pub use curve::{
    dilatation_profile, metric_profile, profile_equivalence, tolerance_budget, EquivalenceReport,
    ProfileCurve, ProfileKind, ProfilePoint, ScaleComparison, OPTIMIZER_RELATIVE_TOL,
};
pub use gh::{gh_distance, GhMode, GhResult, BOUND_RESTARTS, EXACT_MAX_POINTS};
pub use sample::PointedSample;
