//! One-bit quantized, box-constrained precoding for large multi-user MISO
//! downlinks.
//!
//! The crate has two halves that are meant to be checked against each other:
//!
//! * deterministic asymptotic predictors ([`saddle`], [`theory`]) built on the
//!   soft-clipped Gaussian kernels in [`gaussmoments`], and
//! * a seeded finite-size simulator ([`precoder`], [`montecarlo`]) that solves
//!   the box-constrained regularized least-squares precoder, quantizes it to
//!   `±L` and measures power, SDNR, BER and Wasserstein-2 distances.
//!
//! [`tuner`] picks `ρ`, `L`, `λ` and `A` for target transmit SNRs and [`cli`]
//! drives experiments from JSON configs.

pub mod cli;
pub mod error;
pub mod gaussmoments;
pub mod montecarlo;
pub mod params;
pub mod precoder;
pub mod saddle;
pub mod theory;
pub mod tuner;

pub use error::{Error, Result};
pub use gaussmoments::{clip_moments, normal_pdf, q_tail, ClipMoments};
pub use params::{BoxBound, SystemParams};
pub use saddle::{phi_value, solve_saddle, SaddlePoint};
