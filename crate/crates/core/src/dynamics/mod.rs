//! Stochastic time-domain dynamics and the protocols built on it.

pub mod fit;
pub mod integrate;
pub mod series;
pub mod sweeps;

pub use fit::{fit_power_law, fit_stretched_exponential, PowerLawFit, StretchedExpFit};
pub use integrate::{
    integrate, integrate_driven, max_dt, mean_frequency, thermal_noise_amplitude, Coeffs, Integrator, SimConfig,
    State,
};
pub use series::{Samples, SeriesKind, TimeSeries};
pub use sweeps::{
    adiabatic_dwell, encircle, encircle_batch, nearest_stable, sweep_hysteresis, transition_edge,
    transition_edge_sweep, transition_edge_with, Direction, EncircleResult, HysteresisSweep, Interpolation, ParameterTrajectory,
    TracePoint, TransitionEdge, Waypoint, ARRIVAL_FRACTION,
};
