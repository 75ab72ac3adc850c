//! Quantum Brownian motion of a tagged particle in a thermal oscillator bath.
//!
//! The crate covers both sides of the quantum/classical correspondence for
//! the damped particle:
//!
//! - [`bath`] — the thermal fluctuation kernel K_T and its antisymmetric
//!   (commutator) counterpart, under a hard or Drude frequency cutoff;
//! - [`noise`] — stationary Gaussian realizations of the colored noise with
//!   covariance K_T (circulant embedding or spectral synthesis), with
//!   reproducible counter-based seeding;
//! - [`classical`] — the classical Langevin equation driven by a sampled
//!   noise path, plus ensemble statistics;
//! - [`kubo`] — the stochastic Liouville equation for the noisy density
//!   matrix in operator form, integrated in a truncated oscillator basis;
//! - [`heisenberg`] — exact operator solutions of the linear quantum
//!   Langevin equation via Green's functions and a finite mode bath, used to
//!   compare the equal-time commutator [x̂_t, p̂_t] under quantum versus
//!   commutative noise algebras;
//! - [`verify`] — the acceptance checks wired into the CLI `verify`
//!   subcommand, backed by the independent oracles in [`reference`].

pub mod bath;
pub mod classical;
pub mod error;
pub mod heisenberg;
pub mod io;
pub mod kubo;
pub mod noise;
pub mod quad;
pub mod reference;
pub mod verify;

pub use bath::{evaluate_antisymmetric_kernel, evaluate_kernel, tabulate_kernel};
pub use bath::{BathSpec, Cutoff, KernelGrid};
pub use classical::{ensemble_statistics, integrate, potential_force};
pub use classical::{MomentsReport, Potential, SystemSpec, Trajectory};
pub use error::{Error, Result};
pub use heisenberg::{
    commutator_trace, commutator_trace_commutative, greens_function, symmetric_noise_correlation,
    CommutatorTrace, GreensFunction, ModeBath, NoiseAlgebra,
};
pub use kubo::{
    average_ensemble, build_operators, evolve_noisy, observable, DensityMatrix, EvolveOptions,
    KuboRun, OperatorMatrix,
};
pub use noise::{empirical_covariance, sample_ensemble, sample_path};
pub use noise::{EnsembleSpec, NoisePath, SamplingMethod};
