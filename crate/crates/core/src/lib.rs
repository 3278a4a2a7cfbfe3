//! Extended Dicke quantum battery: `N` driven two-level atoms with
//! dipole–dipole flip-flop couplings, charged by a truncated single cavity
//! mode.
//!
//! The crate assembles the Hamiltonians on the full `2^N × (N_ph + 1)` joint
//! space, propagates the charging dynamics with a fourth-order
//! commutator-free Magnus integrator (checked against a dense exponential
//! oracle), and extracts stored energy, charging power, energy fluctuation,
//! scaling exponents and ground-state magnetization.

pub mod analysis;
pub mod dynamics;
pub mod eigen;
pub mod error;
pub mod model;
pub mod observables;
pub mod operators;
pub mod output;

pub use analysis::{
    convergence_check, find_max, find_max_in, fit_linear, fit_power_law, FitResult, LinearFit,
    MaxRecord, Series, TruncationDeviation,
};
pub use dynamics::{
    evolve_with, final_state, oracle_propagate, propagate, step_magnus4, Method, PropagationConfig,
    Trajectory,
};
pub use error::{Error, Result};
pub use model::{
    build_h_battery, build_h_static, build_h_undriven, dipole_coupling, drive_coefficient,
    hamiltonian_at, initial_state, CouplingMode, EtaMatrix, ModelHamiltonian, ModelParams,
};
pub use observables::{
    charging_power, energy_fluctuation, ground_state, ground_state_with, magnetization,
    stored_energy, BatteryProbe, GroundStateResult,
};
pub use operators::{
    build_boson, build_collective_spin, build_pauli, expectation, partial_trace_spin, BosonKind,
    HilbertDims, PauliAxis, SparseOperator, SpinAxis, StateVector, C64,
};
