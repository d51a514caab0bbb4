//! Parameter selection on top of the asymptotic predictors: `ρ` for a target
//! per-antenna power, `L` for a target transmit SNR, and exhaustive grid
//! searches over `λ` (box precoder) or `(λ, A)` (quantized precoder).

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{BoxBound, SystemParams};
use crate::saddle::solve_saddle;
use crate::theory::{box_theory, quant_theory};

const MAX_ITER: usize = 200;
const POWER_TOL: f64 = 1e-10;

/// One evaluated grid point. `metric` is `None` when evaluation failed, in
/// which case `error` says why.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridPoint {
    pub lambda: f64,
    pub a: BoxBound,
    pub rho: f64,
    pub metric: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuneResult {
    pub params: SystemParams,
    pub objective: f64,
    pub grid_trace: Vec<GridPoint>,
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
        }
    }
}

/// 15 points in `[1e−3, 1e2]`.
pub fn default_lambda_grid() -> Vec<f64> {
    logspace(1e-3, 1e2, 15)
}

/// 25 points in `[5e−2, 2e1]`.
pub fn default_a_grid() -> Vec<BoxBound> {
    logspace(5e-2, 2e1, 25).into_iter().map(BoxBound::Finite).collect()
}

/// Asymptotic per-antenna power `P̄_b = δτ² − ρ` of the box precoder.
pub fn box_power(params: &SystemParams) -> Result<f64> {
    let sp = solve_saddle(params)?;
    Ok(sp.excess(params))
}

/// `P̄_b` at each `ρ` of `rhos`.
pub fn power_curve(template: &SystemParams, rhos: &[f64]) -> Vec<GridPoint> {
    rhos.par_iter()
        .map(|&rho| {
            let p = template.with_rho(rho);
            point(&p, box_power(&p))
        })
        .collect()
}

fn point(p: &SystemParams, r: Result<f64>) -> GridPoint {
    let (metric, error) = match r {
        Ok(v) => (Some(v), None),
        Err(e) => (None, Some(e.to_string())),
    };
    GridPoint { lambda: p.lambda, a: p.a, rho: p.rho, metric, error }
}

/// Finds `ρ` with `|P̄_b(ρ) − target_p| < 1e−8`.
///
/// Brackets geometrically around `ρ = target_p`, then bisects in `log ρ`.
/// `P̄_b` is assumed increasing in `ρ`; a bracket whose end signs do not
/// straddle the target is reported instead of extrapolated.
pub fn tune_rho_for_power(params: &SystemParams, target_p: f64) -> Result<TuneResult> {
    params.validate()?;
    if !(target_p > 0.0 && target_p.is_finite()) {
        return Err(Error::domain(format!("target power must be positive, got {target_p}")));
    }
    if let BoxBound::Finite(a) = params.a {
        if target_p >= a * a {
            return Err(Error::domain(format!("target power {target_p} is not below the box cap A^2 = {}", a * a)));
        }
    }
    let mut trace = Vec::new();
    let mut eval = |rho: f64| -> Result<f64> {
        let p = params.with_rho(rho);
        let r = box_power(&p);
        trace.push(point(&p, r.clone()));
        r.map(|v| v - target_p)
    };

    let mut lo = target_p;
    let mut f_lo = eval(lo)?;
    let mut hi = lo;
    let mut f_hi = f_lo;
    let mut steps = 0;
    while f_lo > 0.0 {
        hi = lo;
        f_hi = f_lo;
        lo /= 2.0;
        f_lo = eval(lo)?;
        steps += 1;
        if steps > MAX_ITER {
            return Err(Error::NoConvergence { solver: "rho bracket (down)", iterations: steps, residual: f_lo });
        }
    }
    while f_hi < 0.0 {
        lo = hi;
        f_lo = f_hi;
        hi *= 2.0;
        f_hi = eval(hi)?;
        steps += 1;
        if steps > MAX_ITER {
            return Err(Error::NoConvergence { solver: "rho bracket (up)", iterations: steps, residual: f_hi });
        }
    }
    if !(f_lo <= 0.0 && f_hi >= 0.0) {
        return Err(Error::NoConvergence {
            solver: "rho bracket",
            iterations: steps,
            residual: f_lo.abs().min(f_hi.abs()),
        });
    }

    let (mut best, mut best_f) = if f_lo.abs() < f_hi.abs() { (lo, f_lo) } else { (hi, f_hi) };
    let mut iters = 0;
    while best_f.abs() >= POWER_TOL && iters < MAX_ITER {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = eval(mid)?;
        if f_mid.abs() < best_f.abs() {
            best = mid;
            best_f = f_mid;
        }
        if f_mid < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iters += 1;
    }
    if best_f.abs() >= 1e-8 {
        return Err(Error::NoConvergence { solver: "rho bisection", iterations: iters, residual: best_f });
    }
    trace.sort_by(|a, b| a.rho.total_cmp(&b.rho));
    trace.dedup_by(|a, b| a.rho == b.rho);
    Ok(TuneResult { params: params.with_rho(best), objective: best_f + target_p, grid_trace: trace })
}

/// `L = √(σ²·10^{SNR_dB/10})`.
pub fn tune_l_for_snr(sigma2: f64, snr_tx_db: f64) -> Result<f64> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::domain(format!("sigma2 must be positive, got {sigma2}")));
    }
    Ok((sigma2 * db_to_linear(snr_tx_db)).sqrt())
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn box_ber_at_power(template: &SystemParams, lambda: f64, target_p: f64) -> (SystemParams, Result<f64>) {
    let p = template.with_lambda(lambda);
    match tune_rho_for_power(&p, target_p) {
        Ok(t) => {
            let r = solve_saddle(&t.params).and_then(|sp| box_theory(&t.params, &sp)).map(|bt| bt.ber);
            (t.params, r)
        }
        Err(e) => (p, Err(e)),
    }
}

/// First strictly smallest metric in trace order.
fn argmin(trace: &[GridPoint]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, g) in trace.iter().enumerate() {
        if let Some(v) = g.metric {
            if best.is_none_or(|(_, b)| v < b) {
                best = Some((i, v));
            }
        }
    }
    best.map(|(i, _)| i)
}

fn all_failed(trace: &[GridPoint]) -> Error {
    let first = trace.iter().find_map(|g| g.error.clone()).unwrap_or_else(|| "empty grid".into());
    Error::domain(format!("every grid point failed; first failure: {first}"))
}

fn sorted_lambdas(grid: &[f64]) -> Result<Vec<f64>> {
    if grid.is_empty() {
        return Err(Error::domain("lambda grid is empty"));
    }
    let mut g = grid.to_vec();
    g.sort_by(f64::total_cmp);
    g.dedup();
    Ok(g)
}

/// For each `λ`, tunes `ρ` so that `P̄_b = σ²·SNR_tx` and evaluates the box
/// BER; returns the best `λ`. Ties go to the smaller `λ`.
pub fn optimize_box(template: &SystemParams, snr_tx_db: f64, lambda_grid: &[f64]) -> Result<TuneResult> {
    if !(template.sigma2 > 0.0) {
        return Err(Error::domain("box tuning needs sigma2 > 0"));
    }
    let lambdas = sorted_lambdas(lambda_grid)?;
    let target_p = template.sigma2 * db_to_linear(snr_tx_db);
    let trace: Vec<GridPoint> = lambdas
        .par_iter()
        .map(|&lambda| {
            let (p, r) = box_ber_at_power(template, lambda, target_p);
            point(&p, r)
        })
        .collect();
    let best = argmin(&trace).ok_or_else(|| all_failed(&trace))?;
    let g = &trace[best];
    Ok(TuneResult {
        params: template.with_lambda(g.lambda).with_rho(g.rho),
        objective: g.metric.unwrap_or(f64::NAN),
        grid_trace: trace,
    })
}

fn bound_key(a: &BoxBound) -> f64 {
    a.value()
}

/// Exhaustive `(λ, A)` search for the quantized precoder at `ρ = 1` and
/// `L = √(σ²·SNR_tx)`. Ties go to the smaller `λ`, then the smaller `A`.
pub fn optimize_quant(
    template: &SystemParams,
    snr_tx_db: f64,
    lambda_grid: &[f64],
    a_grid: &[BoxBound],
) -> Result<TuneResult> {
    let lambdas = sorted_lambdas(lambda_grid)?;
    if a_grid.is_empty() {
        return Err(Error::domain("A grid is empty"));
    }
    let mut bounds = a_grid.to_vec();
    bounds.sort_by(|x, y| bound_key(x).total_cmp(&bound_key(y)));
    bounds.dedup();
    let level = tune_l_for_snr(template.sigma2, snr_tx_db)?;
    let base = template.with_rho(1.0).with_level(level);
    let cells: Vec<SystemParams> =
        lambdas.iter().flat_map(|&l| bounds.iter().map(move |&a| base.with_lambda(l).with_bound(a))).collect();
    let trace: Vec<GridPoint> = cells
        .par_iter()
        .map(|p| {
            let r = solve_saddle(p).and_then(|sp| quant_theory(p, &sp)).map(|qt| qt.ber);
            point(p, r)
        })
        .collect();
    let best = argmin(&trace).ok_or_else(|| all_failed(&trace))?;
    let g = &trace[best];
    Ok(TuneResult {
        params: base.with_lambda(g.lambda).with_bound(g.a),
        objective: g.metric.unwrap_or(f64::NAN),
        grid_trace: trace,
    })
}
