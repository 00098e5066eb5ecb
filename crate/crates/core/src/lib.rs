//! Irregular anisotropic wavelet frames.
//!
//! Frames `{D_{A^j} T_λ ψ}` generated by an expansive matrix `A` and an
//! arbitrary well-spread node set `Λ`, together with:
//!
//! * painless band-limited windows and their Calderón duals ([`window`]),
//! * balayage coefficients expressing lattice translates through `Λ` ([`balayage`]),
//! * analysis, synthesis, reconstruction and frame-bound estimation ([`frame`]),
//! * anisotropic Besov and Triebel-Lizorkin norms ([`norms`]),
//! * compactly supported moment-corrected windows and molecule checks ([`compact`]).
//!
//! Signals live on a periodic box `[-T/2, T/2)^d` sampled on an `N^d` grid,
//! `d ∈ {1, 2}`. Windows are carried as closed-form frequency profiles so
//! arbitrary real translations and non-integer dilations stay exact.

pub mod aniso;
pub mod balayage;
pub mod bump;
pub mod compact;
pub mod config;
pub mod error;
pub mod frame;
pub mod nodes;
pub mod norms;
pub mod verify;
pub mod window;

pub use aniso::{check_expansive, AnisoCube, ExpansiveDilation, Grid, SampledSignal, Spectrum};
pub use error::{Error, Result};

pub use num_complex::Complex64;
