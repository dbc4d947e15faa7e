//! Steady-state model: closed-form roots, stability, folds and spectra.

pub mod cubic;
pub mod folds;
pub mod spectra;
pub mod steady;

pub use cubic::Root;
pub use folds::{
    bistable_map, branch_exists, calibrate_loop_phase, calibrate_p_sat, fold_points, hysteresis_width, locate_bp,
    saturated_coupling, BistableMap, FoldPoints, Tunable,
};
pub use spectra::{
    max_responsivity, polariton_eigenvalues, reflection_spectrum, responsivity, responsivity_at, PolaritonSpectrum,
    Responsivity,
};
pub use steady::{
    classify_stability, oscillation_roots, photon_number_at, stable_branches, steady_state_solutions, BranchLabel,
    SteadyStateBranch,
};
