//! Seeded Monte Carlo experiments: finite-size power, SDNR and BER of both
//! precoders, plus Wasserstein-2 distances between the empirical
//! distortion/symbol law and its Gaussian-mixture prediction.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussmoments::normal_quantile;
use crate::params::SystemParams;
use crate::precoder::{generate_realization, solve_box_qp, PrecoderSolution, Realization};
use crate::saddle::solve_saddle;
use crate::theory::{box_theory, quant_theory, BoxTheory, QuantTheory};

/// A sample mean together with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct W2Distance {
    pub distance: f64,
    /// One symbol class had no samples; its prior-weighted target variance
    /// was charged instead.
    pub empty_class: bool,
}

/// Wasserstein-2 distance between the joint empirical law of `(d_k, s_k)`
/// and `(mean_plus·S + std·G, S)` with `S` uniform on `±1`.
///
/// Samples are split by symbol; within each class the 1-D distance to
/// `N(±mean_plus, std²)` uses sorted samples against the Gaussian quantiles
/// at `(i − ½)/k`. The result is the square root of the class-weighted mean
/// of squared distances.
pub fn wasserstein2_to_theory(d: &[f64], s: &[f64], mean_plus: f64, std: f64) -> Result<W2Distance> {
    if d.len() != s.len() {
        return Err(Error::domain(format!("distortion has {} entries, symbols {}", d.len(), s.len())));
    }
    if !(std > 0.0) {
        return Err(Error::domain(format!("target std must be positive, got {std}")));
    }
    if d.is_empty() {
        return Err(Error::domain("no samples"));
    }
    let total = d.len() as f64;
    let mut sq = 0.0;
    let mut empty_class = false;
    for sign in [1.0, -1.0] {
        let mut class: Vec<f64> =
            d.iter().zip(s).filter(|(_, &sk)| (sk > 0.0) == (sign > 0.0)).map(|(&dk, _)| dk).collect();
        if class.is_empty() {
            empty_class = true;
            sq += 0.5 * std * std;
            continue;
        }
        class.sort_by(f64::total_cmp);
        let k = class.len() as f64;
        let center = sign * mean_plus;
        let class_sq: f64 = class
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let q = center + std * normal_quantile((i as f64 + 0.5) / k);
                (v - q).powi(2)
            })
            .sum::<f64>()
            / k;
        sq += (k / total) * class_sq;
    }
    Ok(W2Distance { distance: sq.sqrt(), empty_class })
}

/// Per-trial measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialMetrics {
    pub ber_box: f64,
    pub ber_quant: f64,
    /// Per user `(ς·h_kᵀx̂ − s_k)²`.
    pub sq_err_box: Vec<f64>,
    /// Per user `(κ·h_kᵀx_q − s_k)²`.
    pub sq_err_quant: Vec<f64>,
    /// `‖x̂‖²/n`
    pub power_box: f64,
    /// `‖x_q‖²/n`
    pub power_quant: f64,
    pub w2_box: W2Distance,
    pub w2_quant: W2Distance,
}

fn bit_errors(y: &DVector<f64>, s: &DVector<f64>) -> f64 {
    let wrong = y.iter().zip(s.iter()).filter(|(&yk, &sk)| (if yk >= 0.0 { 1.0 } else { -1.0 }) != sk).count();
    wrong as f64 / s.len() as f64
}

/// Measures one realization.
///
/// `box_sol` is the box precoder at the experiment's `ρ`; `quant_sol` is the
/// `ρ = 1` solution whose quantized vector `x_q` is transmitted. When `ρ = 1`
/// both may be the same solution.
pub fn empirical_metrics(
    real: &Realization,
    box_sol: &PrecoderSolution,
    quant_sol: &PrecoderSolution,
    bt: &BoxTheory,
    qt: &QuantTheory,
) -> Result<TrialMetrics> {
    let (m, n) = real.h.shape();
    if real.s.len() != m || real.z.len() != m || box_sol.x_hat.len() != n || quant_sol.x_q.len() != n {
        return Err(Error::domain("realization and solution shapes disagree"));
    }
    let e_box = &real.h * &box_sol.x_hat;
    let d_q = &real.h * &quant_sol.x_q;
    let sq_err = |dist: &DVector<f64>, scale: f64| -> Vec<f64> {
        dist.iter().zip(real.s.iter()).map(|(&e, &s)| (scale * e - s).powi(2)).collect()
    };
    let s = real.s.as_slice();
    Ok(TrialMetrics {
        ber_box: bit_errors(&(&e_box + &real.z), &real.s),
        ber_quant: bit_errors(&(&d_q + &real.z), &real.s),
        sq_err_box: sq_err(&e_box, bt.varsigma),
        sq_err_quant: sq_err(&d_q, qt.kappa),
        power_box: box_sol.x_hat.norm_squared() / n as f64,
        power_quant: quant_sol.x_q.norm_squared() / n as f64,
        w2_box: wasserstein2_to_theory(e_box.as_slice(), s, bt.sig_coef, bt.dist_std)?,
        w2_quant: wasserstein2_to_theory(d_q.as_slice(), s, qt.xi, qt.zeta.sqrt())?,
    })
}

/// Aggregates over all trials of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalReport {
    pub trials: usize,
    pub n: usize,
    pub m: usize,
    pub ber_box: MeanSe,
    pub ber_quant: MeanSe,
    pub sdnr_lb_box: f64,
    pub sdnr_lb_quant: f64,
    pub sdnr_avg_box: f64,
    pub sdnr_avg_quant: f64,
    /// Mean of `‖x̂‖²/n` for the box precoder.
    pub p_b_empirical: MeanSe,
    /// Mean of `‖x_q‖²/n`; equals `L²` exactly.
    pub p_q_empirical: f64,
    /// Mean over users and trials of the scaled squared distortion error.
    pub mse_box: MeanSe,
    pub mse_quant: MeanSe,
    pub w2_box: MeanSe,
    pub w2_quant: MeanSe,
    pub w2_empty_class: bool,
}

fn mean_se(values: impl Iterator<Item = f64> + Clone) -> MeanSe {
    let count = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / count;
    let se = if count > 1.0 {
        let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1.0);
        (var / count).sqrt()
    } else {
        0.0
    };
    MeanSe { mean, se }
}

fn ber_summary(per_trial: impl Iterator<Item = f64>, trials: usize, m: usize) -> MeanSe {
    let p = per_trial.sum::<f64>() / trials as f64;
    MeanSe { mean: p, se: (p * (1.0 - p) / (trials * m) as f64).sqrt() }
}

/// `(lower bound, average)` SDNR from per-trial per-user squared errors.
fn sdnr_pair(per_trial: &[&Vec<f64>], noise: f64) -> (f64, f64) {
    let m = per_trial[0].len();
    let trials = per_trial.len() as f64;
    let per_user: Vec<f64> = (0..m).map(|k| per_trial.iter().map(|t| t[k]).sum::<f64>() / trials).collect();
    let mean_err = per_user.iter().sum::<f64>() / m as f64;
    let lb = 1.0 / (mean_err + noise);
    let avg = per_user.iter().map(|e| 1.0 / (e + noise)).sum::<f64>() / m as f64;
    (lb, avg)
}

/// Deterministic fold of trial metrics (in trial order) into a report.
pub fn aggregate(
    params: &SystemParams,
    bt: &BoxTheory,
    qt: &QuantTheory,
    metrics: &[TrialMetrics],
) -> Result<EmpiricalReport> {
    if metrics.is_empty() {
        return Err(Error::domain("no trials to aggregate"));
    }
    let trials = metrics.len();
    let m = metrics[0].sq_err_box.len();
    let box_err: Vec<&Vec<f64>> = metrics.iter().map(|t| &t.sq_err_box).collect();
    let q_err: Vec<&Vec<f64>> = metrics.iter().map(|t| &t.sq_err_quant).collect();
    let (sdnr_lb_box, sdnr_avg_box) = sdnr_pair(&box_err, bt.varsigma.powi(2) * params.sigma2);
    let (sdnr_lb_quant, sdnr_avg_quant) = sdnr_pair(&q_err, qt.kappa.powi(2) * params.sigma2);
    Ok(EmpiricalReport {
        trials,
        n: params.n,
        m,
        ber_box: ber_summary(metrics.iter().map(|t| t.ber_box), trials, m),
        ber_quant: ber_summary(metrics.iter().map(|t| t.ber_quant), trials, m),
        sdnr_lb_box,
        sdnr_lb_quant,
        sdnr_avg_box,
        sdnr_avg_quant,
        p_b_empirical: mean_se(metrics.iter().map(|t| t.power_box)),
        p_q_empirical: metrics.iter().map(|t| t.power_quant).sum::<f64>() / trials as f64,
        mse_box: mean_se(metrics.iter().flat_map(|t| t.sq_err_box.iter().copied())),
        mse_quant: mean_se(metrics.iter().flat_map(|t| t.sq_err_quant.iter().copied())),
        w2_box: mean_se(metrics.iter().map(|t| t.w2_box.distance)),
        w2_quant: mean_se(metrics.iter().map(|t| t.w2_quant.distance)),
        w2_empty_class: metrics.iter().any(|t| t.w2_box.empty_class || t.w2_quant.empty_class),
    })
}

/// Theory needed by a simulation: box predictions at `params.rho` and
/// quantized predictions on the `ρ = 1` pipeline.
pub fn experiment_theory(params: &SystemParams) -> Result<(BoxTheory, QuantTheory)> {
    let sp = solve_saddle(params)?;
    let bt = box_theory(params, &sp)?;
    let unit = params.with_rho(1.0);
    let sp_q = if params.rho == 1.0 { sp } else { solve_saddle(&unit)? };
    Ok((bt, quant_theory(&unit, &sp_q)?))
}

/// Runs trial `index` of an experiment, seeded with `base_seed + index`.
pub fn run_trial(
    params: &SystemParams,
    bt: &BoxTheory,
    qt: &QuantTheory,
    base_seed: u64,
    index: usize,
) -> Result<TrialMetrics> {
    let wrap = |e: Error| Error::Trial { trial: index, source: Box::new(e) };
    let real = generate_realization(params, base_seed.wrapping_add(index as u64));
    let box_sol = solve_box_qp(&real, params).map_err(wrap)?;
    let metrics = if params.rho == 1.0 {
        empirical_metrics(&real, &box_sol, &box_sol, bt, qt)
    } else {
        let quant_sol = solve_box_qp(&real, &params.with_rho(1.0)).map_err(wrap)?;
        empirical_metrics(&real, &box_sol, &quant_sol, bt, qt)
    };
    metrics.map_err(wrap)
}

/// All per-trial metrics, in trial order. Trials run on the current rayon pool.
pub fn run_trials(params: &SystemParams, trials: usize, base_seed: u64) -> Result<Vec<TrialMetrics>> {
    params.validate()?;
    if trials == 0 {
        return Err(Error::domain("trials must be at least 1"));
    }
    let (bt, qt) = experiment_theory(params)?;
    (0..trials).into_par_iter().map(|i| run_trial(params, &bt, &qt, base_seed, i)).collect()
}

pub fn run_experiment(params: &SystemParams, trials: usize, base_seed: u64) -> Result<EmpiricalReport> {
    let metrics = run_trials(params, trials, base_seed)?;
    let (bt, qt) = experiment_theory(params)?;
    aggregate(params, &bt, &qt, &metrics)
}
