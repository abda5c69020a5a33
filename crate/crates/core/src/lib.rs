//! Gaussian simulation of continuous-variable cloning machines that take
//! `N` replicas of a coherent state `|α⟩` together with `N` replicas of its
//! phase conjugate `|α*⟩`.
//!
//! The machines are built from beam splitters, homodyne detection and
//! feed-forward displacement, optionally with an EPR ancilla that recovers
//! the phase-conjugate outputs. Each circuit can be evaluated three ways:
//!
//! - [`engine::run_heisenberg`]: exact operator expansions over the inputs,
//! - [`engine::run_phase_space`]: covariance-matrix propagation with
//!   Schur-complement homodyne conditioning,
//! - [`montecarlo::run_monte_carlo`]: Wigner-function sampling.
//!
//! Quadratures follow `a = (X + iP)/2`, so the vacuum has unit variance.
//!
//! ```
//! use cvclone::circuits::{build_pci_cloner, ClonerParams};
//! use cvclone::cloning::{fidelity_unity_gain, ref_clone_variance};
//! use cvclone::engine::run_heisenberg;
//!
//! let machine = build_pci_cloner(&ClonerParams::new(1, 2)).unwrap();
//! let out = run_heisenberg(&machine.circuit).unwrap();
//! let var = out[0].moments.var_x;
//! assert!((var - ref_clone_variance(1, 2, 1.0).unwrap()).abs() < 1e-12);
//! assert!((fidelity_unity_gain(var, var).unwrap() - 16.0 / 17.0).abs() < 1e-12);
//! ```

pub mod circuits;
pub mod cloning;
pub mod engine;
pub mod error;
pub mod gaussian;
pub mod heisenberg;
pub mod montecarlo;

pub use error::{Error, Result};
