//! Small chemical reaction networks treated as communication channels.
//!
//! The crate computes exact steady states of the chemical master equation
//! over enumerated microstates, turns them into input/output joint pmfs of a
//! binary Z-channel, and evaluates mutual information, capacity bounds and
//! closed-form retroactivity constants. A linear-noise pipeline covers the
//! high-count regime, and a seeded Gillespie simulator serves as an
//! independent statistical oracle.

pub mod channel;
pub mod cme;
pub mod crn;
pub mod linalg;
pub mod lna;
pub mod retro;
pub mod ssa;
pub mod state_space;
pub mod validate;

pub use channel::{
    awgn_capacity, capacity_bounds, capacity_lower_bound, capacity_upper_bound,
    capacity_via_optimization, conditional_entropy, entropy, extract_a, joint_io_pmf,
    kl_divergence, mi_closed_form, mutual_information, sweep_bounds, unit_grid, z_channel_capacity,
    CapacityBounds, ChannelError, InputEnsemble, JointIoPmf, SweepTable, ZChannelParam,
};
pub use cme::{build_generator, stationary_from_initial, steady_state, CmeError, GeneratorMatrix, SteadyStatePmf};
pub use crn::{
    derive_conservation_laws, parse_network, ConservationLaw, CrnError, ModelKind, ModelPreset,
    PresetRates, PresetTotals, Reaction, ReactionNetwork, Species,
};
pub use lna::{lna_analyze, LnaError, LnaParams, LnaReport, LnaResult, RateEquationSystem};
pub use retro::{a0, a0_exact, a0_mimo, a_mac, a_n, an_mimo_numeric, b_constant, AConstant, RateSet, RetroError};
pub use ssa::{empirical_steady_pmf, gillespie_run, SsaConfig, SsaError, Trajectory};
pub use state_space::{enumerate_microstates, reachable_component, Microstate, StateSpace, StateSpaceError};
pub use validate::{validation_report, ValidateConfig, ValidateError, ValidationReport, ValidationRow};
