//! Numerics for the quantum Rabi model: a two-level atom coupled to a single
//! cavity mode,
//!
//! ```text
//! H = sigma_z * delta + omega * a'a + g * sigma_x * (a + a')
//! ```
//!
//! with `delta >= 0` the atom gap, `omega > 0` the cavity frequency and `g`
//! the coupling. The crate provides three routes into the same physics:
//!
//! * truncated Fock-space diagonalization, reduced to the two parity sectors
//!   of the model ([`hamiltonian`], [`tridiag`], [`spectra`]),
//! * the closed-form Jaynes-Cummings spectrum, its ground-energy envelope and
//!   its exact level-crossing couplings ([`jc`]),
//! * a Feynman-Kac path sampler that estimates matrix elements of the
//!   semigroup `exp(-tH)` in the oscillator ground measure, built from
//!   Ornstein-Uhlenbeck paths decorated with Poisson spin flips
//!   ([`ou`], [`jumps`], [`fk`]).
//!
//! The spectral routes are deterministic; the Monte Carlo route is
//! reproducible given a seed and a worker layout. The crate is `no_std`
//! compatible (with `alloc`); the `std` feature (default) only switches the
//! float math from `libm` to the intrinsics.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod error;
pub mod fk;
pub mod hamiltonian;
pub mod jc;
pub mod jumps;
mod math;
pub mod ou;
pub mod params;
pub mod spectra;
pub mod tridiag;

pub use error::{Error, Result};
pub use params::{FockTruncation, ModelParams, ParitySector, Spin};
