//! Time averages along stationary trajectories, moment identities,
//! structure functions and scaling fits.

mod accumulator;
mod convergence;
mod fit;
mod identities;
mod observables;
mod structure;
mod synthetic;

pub use accumulator::{batch_stderr, Accumulator, BatchPolicy};
pub use convergence::{measure_convergence_report, ConvergenceReport, DistanceRow, PanelSummary, TrendRow};
pub use fit::{least_squares, scaling_fit, FitRange, OrderFit, ScalingFit};
pub use identities::{
    enstrophy_identity_check, ou_closed_form_checks, p_moment_identity_check, vorticity_moment_identity_check, Balance,
    IdentityReport, MomentForm, SingleModeOu, MIN_BATCHES,
};
pub use observables::{identity_panel, Evaluator, Observable, Part, StatsObserver};
pub use structure::{
    increment_moment, rescaling_check, structure_functions, IncrementKind, RescalingReport,
    StructureConfig, StructureObserver, StructureRow, StructureTable,
};
pub use synthetic::synthetic_field;
