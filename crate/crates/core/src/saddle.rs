//! The deterministic scalar max-min problem that parameterizes every
//! asymptotic law of the box precoder.
//!
//! ```text
//! φ(τ, β) = τβδ/2 + ρβ/(2τ) − β²/4 + E_H[ min_{|x|≤A} (β/(2τ) + λ)x² − βHx ]
//! ```
//!
//! The inner minimizer is `clamp(H/α, ±A)` with `α = 1/τ + 2λ/β`, so the
//! expectation is `(β/(2τ) + λ)·E[X²] − β·E[HX]` and needs no sampling. The
//! saddle point solves
//!
//! ```text
//! τ²δ = ρ + E[X²]          β = 2τδ − 2E[HX]
//! ```
//!
//! which is found by nested bisection: `β(τ)` from the second equation for
//! fixed `τ`, then `τ` from the first.

use crate::error::{Error, Result};
use crate::gaussmoments::{clip_moments, ClipMoments};
use crate::params::SystemParams;

const BISECTION_TOL: f64 = 1e-12;
const MAX_ITER: usize = 200;
/// Acceptance threshold on both fixed-point residuals.
pub const RESIDUAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddlePoint {
    pub tau: f64,
    pub beta: f64,
    /// `1/τ + 2λ/β`
    pub alpha: f64,
    /// `φ(τ, β)` evaluated directly.
    pub phi: f64,
    pub moments: ClipMoments,
    /// Set for `δ = 1, λ = 0` with a finite box.
    pub boundary_regime: bool,
}

impl SaddlePoint {
    /// Variance of the Gaussian part of the distortion, `τ²δ − ρ`.
    pub fn excess(&self, params: &SystemParams) -> f64 {
        self.tau * self.tau * params.delta - params.rho
    }

    /// `β/(2τδ)`, the fraction of the symbol lost to regularization.
    pub fn shrinkage(&self, params: &SystemParams) -> f64 {
        self.beta / (2.0 * self.tau * params.delta)
    }
}

/// `α = 1/τ + 2λ/β`. With `λ = 0` the second term is dropped exactly.
pub fn alpha_of(tau: f64, beta: f64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        1.0 / tau
    } else {
        1.0 / tau + 2.0 * lambda / beta
    }
}

/// The two fixed-point residuals `(τ²δ − ρ − E[X²], β − 2τδ + 2E[HX])`.
pub fn fixed_point_residuals(params: &SystemParams, tau: f64, beta: f64) -> Result<(f64, f64)> {
    let m = clip_moments(alpha_of(tau, beta, params.lambda), params.a)?;
    Ok((tau * tau * params.delta - params.rho - m.e_sq, beta - 2.0 * tau * params.delta + 2.0 * m.e_xh))
}

/// Evaluates `φ(τ, β)` in closed form.
pub fn phi_value(tau: f64, beta: f64, params: &SystemParams) -> Result<f64> {
    if !(tau > 0.0 && beta > 0.0) {
        return Err(Error::domain(format!("phi is defined for tau, beta > 0 (got tau={tau}, beta={beta})")));
    }
    let m = clip_moments(alpha_of(tau, beta, params.lambda), params.a)?;
    let curvature = beta / (2.0 * tau) + params.lambda;
    let inner = curvature * m.e_sq - beta * m.e_xh;
    Ok(tau * beta * params.delta / 2.0 + params.rho * beta / (2.0 * tau) - beta * beta / 4.0 + inner)
}

/// Bisection for an increasing function with `f(lo) < 0 < f(hi)`.
fn bisect_increasing<F>(mut lo: f64, mut hi: f64, what: &'static str, mut f: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    for _ in 0..MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= BISECTION_TOL * hi.abs().max(1.0) || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if f(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NoConvergence { solver: what, iterations: MAX_ITER, residual: hi - lo })
}

/// `β(τ)` solving `β = 2τδ − 2E[H·X(H)]` at fixed `τ`.
///
/// The map `β ↦ β − 2τδ + 2E[HX]` is strictly increasing (α falls with β,
/// so `E[HX]` rises), negative as `β → 0⁺` and positive at `β = 2τδ`.
fn beta_given_tau(params: &SystemParams, tau: f64) -> Result<f64> {
    let two_tau_delta = 2.0 * tau * params.delta;
    if params.lambda == 0.0 {
        let m = clip_moments(1.0 / tau, params.a)?;
        return Ok(two_tau_delta - 2.0 * m.e_xh);
    }
    bisect_increasing(0.0, two_tau_delta, "saddle inner (beta) bisection", |beta| {
        let m = clip_moments(alpha_of(tau, beta, params.lambda), params.a)?;
        Ok(beta - two_tau_delta + 2.0 * m.e_xh)
    })
}

fn outer_residual(params: &SystemParams, tau: f64) -> Result<f64> {
    let beta = beta_given_tau(params, tau)?;
    if !(beta > 0.0) {
        // Only reachable in the excluded zero-forcing corner; treat as "τ too small".
        return Ok(-1.0);
    }
    let m = clip_moments(alpha_of(tau, beta, params.lambda), params.a)?;
    Ok(tau * tau * params.delta - params.rho - m.e_sq)
}

/// Solves the scalar saddle-point system for `params`.
pub fn solve_saddle(params: &SystemParams) -> Result<SaddlePoint> {
    params.validate()?;
    let tau_lo = (params.rho / params.delta).sqrt() * (1.0 + 1e-12);
    let mut tau_hi = 2.0 * tau_lo;
    let mut expansions = 0;
    while outer_residual(params, tau_hi)? < 0.0 {
        tau_hi *= 2.0;
        expansions += 1;
        if expansions > MAX_ITER {
            return Err(Error::NoConvergence {
                solver: "saddle bracket expansion",
                iterations: expansions,
                residual: outer_residual(params, tau_hi)?,
            });
        }
    }
    let tau = bisect_increasing(tau_lo, tau_hi, "saddle outer (tau) bisection", |t| outer_residual(params, t))?;
    let beta = beta_given_tau(params, tau)?;
    let (r1, r2) = fixed_point_residuals(params, tau, beta)?;
    let worst = r1.abs().max(r2.abs());
    if !(worst < RESIDUAL_TOL) || !(beta > 0.0) {
        return Err(Error::NoConvergence { solver: "saddle point", iterations: MAX_ITER, residual: worst });
    }
    let alpha = alpha_of(tau, beta, params.lambda);
    Ok(SaddlePoint {
        tau,
        beta,
        alpha,
        phi: phi_value(tau, beta, params)?,
        moments: clip_moments(alpha, params.a)?,
        boundary_regime: params.is_boundary_regime(),
    })
}
