//! Design of incoherent sensing matrices for compressed sensing.
//!
//! Three projection optimizers act on a fixed dictionary `D`:
//!
//! - [`elad`]: iterative shrinkage of the effective Gram matrix,
//! - [`sapiro`]: one pass of rank-one updates on the eigenbasis of `DDᵀ`,
//! - [`altproj`]: alternating projections between a clipped-correlation
//!   set and the rank-`m` PSD matrices.
//!
//! [`pursuit`] provides OMP, basis pursuit and an exhaustive ℓ0 oracle,
//! [`dictlearn`] K-SVD and Coupled-KSVD, and [`harness`] the benchmark that
//! compares reconstruction under random and optimized projections.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]

#[cfg_attr(test, macro_use)]
extern crate alloc;

pub mod altproj;
pub mod coherence;
pub mod dictlearn;
pub mod elad;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod lp;
pub mod pursuit;
pub mod rng;
pub mod sapiro;

pub use error::{Error, Result};
pub use linalg::{Dictionary, EffectiveDictionary, GramMatrix, ProjectionMatrix};
