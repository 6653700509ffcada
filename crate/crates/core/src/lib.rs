//! Simulation core for a 64-spin all-to-all continuous-time Ising machine.
//!
//! The machine stores spins as capacitor voltages that are driven by
//! current-mode coupling units programmed with 31-level coefficients. The
//! coupling array is refreshed column by column; gating the refresh DACs off
//! zeroes the selected column, which transiently reshapes the energy landscape
//! before the original Hamiltonian is restored.
//!
//! This crate is `no_std` (it needs `alloc`) and holds only the algorithms:
//!
//! * [`ising`]: instances, spin vectors, the Hamiltonian and the Max-Cut mapping.
//! * [`lfsr`]: the 64-bit initialization register.
//! * [`dynamics`]: forward integration of the node equations.
//! * [`perturbation`]: column refresh, DAC gating and leakage.
//! * [`instances`]: seeded random QUBO ensembles.
//! * [`solvers`]: exhaustive and Tabu oracles for best-known energies.
//! * [`metrics`]: success judgment, time- and energy-to-solution.
//!
//! File formats, configuration and the command line live in the `cim-sim`
//! companion crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod dynamics;
pub mod error;
pub mod instances;
pub mod ising;
pub mod lfsr;
pub mod metrics;
pub mod perturbation;
pub mod solvers;

pub use dynamics::{run_anneal, DynamicsConfig, MachineState, RunResult, TracePoint};
pub use error::{Error, Result};
pub use instances::{generate_random_qubo, EnsembleSpec};
pub use ising::{hamiltonian, local_field, MaxCutGraph, ProblemInstance, SpinVector};
pub use lfsr::Lfsr;
pub use metrics::{BatchStats, RunStats};
pub use perturbation::{ColumnStatus, PerturbationSchedule};
pub use solvers::{brute_force, tabu_search, OracleMethod, OracleResult, TabuParams};

/// Largest coupling magnitude the coupling units can represent.
pub const COEFF_MAX: i8 = 15;

/// Number of distinct coefficient levels (4-bit magnitude plus sign, with one zero).
pub const COEFF_LEVELS: u32 = 31;

/// Spin count of the hardware array.
pub const MAX_SPINS: usize = 64;
