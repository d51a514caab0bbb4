//! Closed-form large-system predictions for the box precoder, the quantized
//! precoder, and the Bussgang heuristic applied to the latter.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussmoments::{q_tail, MEAN_ABS_NORMAL};
use crate::params::SystemParams;
use crate::saddle::SaddlePoint;

/// Box precoder: received signal behaves like `sig_coef·S + dist_std·G + Z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoxTheory {
    /// Per-antenna power `δτ² − ρ`.
    pub p_bar: f64,
    /// Jensen lower bound on the user-averaged SDNR.
    pub sdnr_lb: f64,
    pub ber: f64,
    /// Receiver scaling `ς = 1/sig_coef`.
    pub varsigma: f64,
    pub dist_std: f64,
    pub sig_coef: f64,
}

/// Quantized precoder: distortion behaves like `ξ·S + √ζ·G`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantTheory {
    pub xi: f64,
    pub zeta: f64,
    pub sdnr_lb: f64,
    pub ber: f64,
    /// Receiver scaling `κ = 1/ξ`.
    pub kappa: f64,
}

/// Bussgang-decomposition prediction for the quantized precoder, which treats
/// the unquantized precoder output as Gaussian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BussgangTheory {
    pub theta_b: f64,
    pub resid_var: f64,
    pub sig_coef: f64,
    pub noise_var: f64,
    pub ber: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Pipeline {
    Box,
    Quantized,
}

pub fn box_theory(params: &SystemParams, sp: &SaddlePoint) -> Result<BoxTheory> {
    let shrink = sp.shrinkage(params);
    if !(shrink < 1.0) {
        return Err(Error::domain(format!("beta/(2 tau delta) = {shrink} >= 1, receiver scaling undefined")));
    }
    let excess = sp.excess(params);
    if excess < 0.0 {
        return Err(Error::domain(format!("tau^2 delta - rho = {excess} < 0")));
    }
    let sig_coef = params.rho.sqrt() * (1.0 - shrink);
    let dist_std = sp.beta * excess.sqrt() / (2.0 * sp.tau * params.delta);
    let denom = dist_std * dist_std + params.sigma2;
    Ok(BoxTheory {
        p_bar: excess,
        sdnr_lb: sig_coef * sig_coef / denom,
        ber: q_tail(sig_coef / denom.sqrt()),
        varsigma: 1.0 / sig_coef,
        dist_std,
        sig_coef,
    })
}

fn require_unit_rho(params: &SystemParams, what: &str) -> Result<()> {
    if params.rho != 1.0 {
        return Err(Error::domain(format!("{what} is defined for the rho = 1 pipeline, got rho = {}", params.rho)));
    }
    Ok(())
}

pub fn quant_theory(params: &SystemParams, sp: &SaddlePoint) -> Result<QuantTheory> {
    require_unit_rho(params, "quantized theory")?;
    let l = params.level;
    let td = sp.tau * params.delta;
    let xi = l * MEAN_ABS_NORMAL / td;
    let zeta = l * l - 2.0 * l * l * MEAN_ABS_NORMAL * sp.moments.e_abs / td
        + l * l * MEAN_ABS_NORMAL * MEAN_ABS_NORMAL * sp.excess(params) / (td * td);
    let denom = zeta + params.sigma2;
    Ok(QuantTheory { xi, zeta, sdnr_lb: xi * xi / denom, ber: q_tail(xi / denom.sqrt()), kappa: 1.0 / xi })
}

pub fn bussgang_theory(params: &SystemParams, sp: &SaddlePoint) -> Result<BussgangTheory> {
    require_unit_rho(params, "Bussgang theory")?;
    let var_x = params.delta * sp.tau * sp.tau - 1.0;
    if !(var_x > 0.0) {
        return Err(Error::domain(format!("delta tau^2 - 1 = {var_x} <= 0")));
    }
    let l = params.level;
    let theta_b = l * MEAN_ABS_NORMAL / var_x.sqrt();
    let resid_var = l * l * (1.0 - MEAN_ABS_NORMAL * MEAN_ABS_NORMAL);
    let shrink = sp.shrinkage(params);
    let sig_coef = theta_b * (1.0 - shrink);
    let noise_var = theta_b * theta_b * sp.beta * sp.beta * var_x
        / (4.0 * sp.tau * sp.tau * params.delta * params.delta)
        + resid_var
        + params.sigma2;
    Ok(BussgangTheory { theta_b, resid_var, sig_coef, noise_var, ber: q_tail(sig_coef / noise_var.sqrt()) })
}

/// Transmit SNR: `P̄_b/σ²` for the box precoder, `L²/σ²` for the quantized one.
pub fn snr_tx(params: &SystemParams, which: Pipeline, sp: &SaddlePoint) -> Result<f64> {
    if !(params.sigma2 > 0.0) {
        return Err(Error::domain("transmit SNR needs sigma2 > 0"));
    }
    Ok(match which {
        Pipeline::Box => sp.excess(params) / params.sigma2,
        Pipeline::Quantized => params.level * params.level / params.sigma2,
    })
}
