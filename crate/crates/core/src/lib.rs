//! Simulation and exact analysis of balanced, tenable, irreducible
//! d-colour Pólya urns.
//!
//! The crate is `no_std` and only needs `alloc`. Everything that touches
//! files, clocks or threads lives in the `urnlab` crate; the replica loops
//! here are generic over an [`exec::Executor`] so callers can plug in a
//! parallel runner without changing results.
//!
//! Conventions used throughout:
//!
//! * compositions are column vectors and one draw of colour `c` adds row
//!   `c` of `R`, so the mean dynamics are driven by `Rᵀ`. Jordan chains
//!   (`v`, the chain basis, projectors) therefore live in the column space
//!   of `Rᵀ`, and the dual functional `u_dual` is a right eigenvector of `R`;
//! * `W` estimates for discrete time use the `n^{λ/S} ln^ν n` scaling and
//!   continuous time the `t^ν e^{λt}` scaling, both at the ring/step count
//!   the caller asks for.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod density;
pub mod distributions;
pub mod error;
pub mod exec;
pub mod fixpoint;
pub mod linalg;
pub mod moments;
pub mod poly;
pub mod rng;
pub mod simulate;
pub mod special;
pub mod spectral;
pub mod stats;
pub mod urn;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64;
