//! Turns a validated config into a result table.

use rayon::prelude::*;

use super::config::{apply_axis, resolve_params, AxisValue, ExperimentConfig, Mode, ParamsConfig, Tune};
use super::output::{Cell, Table};
use crate::error::{Error, Result};
use crate::montecarlo::run_experiment;
use crate::params::{BoxBound, SystemParams};
use crate::saddle::solve_saddle;
use crate::theory::{box_theory, bussgang_theory, quant_theory};
use crate::tuner::{default_a_grid, default_lambda_grid, optimize_box, optimize_quant};

pub const BASE_COLUMNS: &[&str] = &["n", "m", "delta", "lambda", "a", "l", "sigma2", "rho", "snr_tx_db"];
pub const SADDLE_COLUMNS: &[&str] = &["tau", "beta", "alpha", "phi", "boundary_regime", "p_bar"];
pub const BOX_COLUMNS: &[&str] = &[
    "box_lambda",
    "box_rho",
    "box_tau",
    "box_beta",
    "box_alpha",
    "box_phi",
    "box_p_bar",
    "box_sdnr_lb",
    "box_ber",
    "box_varsigma",
    "box_dist_std",
    "box_sig_coef",
];
pub const QUANT_COLUMNS: &[&str] = &[
    "quant_lambda",
    "quant_a",
    "quant_tau",
    "quant_beta",
    "quant_alpha",
    "quant_xi",
    "quant_zeta",
    "quant_sdnr_lb",
    "quant_ber",
    "quant_kappa",
    "bussgang_theta",
    "bussgang_noise_var",
    "bussgang_ber",
];
pub const EMP_COLUMNS: &[&str] = &[
    "trials",
    "emp_ber_box",
    "emp_ber_box_se",
    "emp_sdnr_lb_box",
    "emp_sdnr_avg_box",
    "emp_p_b",
    "emp_p_b_se",
    "emp_mse_box",
    "emp_w2_box",
    "emp_ber_quant",
    "emp_ber_quant_se",
    "emp_sdnr_lb_quant",
    "emp_sdnr_avg_quant",
    "emp_p_q",
    "emp_mse_quant",
    "emp_mse_quant_se",
    "emp_w2_quant",
    "emp_w2_empty_class",
];

/// A solver failure at a specific grid point.
#[derive(Debug)]
pub struct RunError {
    pub point: String,
    pub source: Error,
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "solver error at {}: {}", self.point, self.source)
    }
}

impl std::error::Error for RunError {}

type Named = Vec<(&'static str, Cell)>;

pub fn bound_cell(a: BoxBound) -> Cell {
    match a {
        BoxBound::Finite(v) => Cell::Num(v),
        BoxBound::Unbounded => Cell::Text("inf".into()),
    }
}

fn describe(p: &SystemParams, snr: Option<f64>) -> String {
    let mut s = format!(
        "n={} delta={} lambda={} a={} l={} sigma2={} rho={}",
        p.n, p.delta, p.lambda, p.a, p.level, p.sigma2, p.rho
    );
    if let Some(v) = snr {
        s.push_str(&format!(" snr_tx_db={v}"));
    }
    s
}

fn base_cells(p: &SystemParams, snr: Option<f64>) -> Named {
    vec![
        ("n", Cell::Int(p.n as u64)),
        ("m", Cell::Int(p.m() as u64)),
        ("delta", Cell::num(p.delta)),
        ("lambda", Cell::num(p.lambda)),
        ("a", bound_cell(p.a)),
        ("l", Cell::num(p.level)),
        ("sigma2", Cell::num(p.sigma2)),
        ("rho", Cell::num(p.rho)),
        ("snr_tx_db", snr.map_or(Cell::Empty, Cell::num)),
    ]
}

pub fn saddle_cells(p: &SystemParams) -> Result<Named> {
    let sp = solve_saddle(p)?;
    Ok(vec![
        ("tau", Cell::num(sp.tau)),
        ("beta", Cell::num(sp.beta)),
        ("alpha", Cell::num(sp.alpha)),
        ("phi", Cell::num(sp.phi)),
        ("boundary_regime", Cell::Bool(sp.boundary_regime)),
        ("p_bar", Cell::num(sp.excess(p))),
    ])
}

/// Theory columns of the box precoder run at `p`.
pub fn box_cells(p: &SystemParams) -> Result<Named> {
    let sp = solve_saddle(p)?;
    let bt = box_theory(p, &sp)?;
    Ok(vec![
        ("box_tau", Cell::num(sp.tau)),
        ("box_beta", Cell::num(sp.beta)),
        ("box_alpha", Cell::num(sp.alpha)),
        ("box_phi", Cell::num(sp.phi)),
        ("box_p_bar", Cell::num(bt.p_bar)),
        ("box_sdnr_lb", Cell::num(bt.sdnr_lb)),
        ("box_ber", Cell::num(bt.ber)),
        ("box_varsigma", Cell::num(bt.varsigma)),
        ("box_dist_std", Cell::num(bt.dist_std)),
        ("box_sig_coef", Cell::num(bt.sig_coef)),
    ])
}

/// Theory columns of the quantized precoder; `p` must have `ρ = 1`.
pub fn quant_cells(p: &SystemParams) -> Result<Named> {
    let sp = solve_saddle(p)?;
    let qt = quant_theory(p, &sp)?;
    let mut out = vec![
        ("quant_tau", Cell::num(sp.tau)),
        ("quant_beta", Cell::num(sp.beta)),
        ("quant_alpha", Cell::num(sp.alpha)),
        ("quant_xi", Cell::num(qt.xi)),
        ("quant_zeta", Cell::num(qt.zeta)),
        ("quant_sdnr_lb", Cell::num(qt.sdnr_lb)),
        ("quant_ber", Cell::num(qt.ber)),
        ("quant_kappa", Cell::num(qt.kappa)),
    ];
    // The Bussgang model is only defined while δτ² > 1.
    if let Ok(bg) = bussgang_theory(p, &sp) {
        out.extend([
            ("bussgang_theta", Cell::num(bg.theta_b)),
            ("bussgang_noise_var", Cell::num(bg.noise_var)),
            ("bussgang_ber", Cell::num(bg.ber)),
        ]);
    }
    Ok(out)
}

/// Domain errors leave the section empty with a note; solver failures abort.
fn section(r: Result<Named>, what: &str, notes: &mut Vec<String>) -> Result<Named> {
    match r {
        Ok(cells) => Ok(cells),
        Err(e) if !e.is_solver_failure() => {
            notes.push(format!("{what}: {e}"));
            Ok(Vec::new())
        }
        Err(e) => Err(e),
    }
}

struct Point {
    params: SystemParams,
    snr: Option<f64>,
}

struct Plan<'a> {
    cfg: &'a ExperimentConfig,
    tune: Tune,
    simulate: bool,
    lambda_grid: Vec<f64>,
    a_grid: Vec<BoxBound>,
}

impl Plan<'_> {
    fn evaluate(&self, pt: &Point) -> Result<Named> {
        let p = &pt.params;
        let mut row = base_cells(p, pt.snr);
        let mut notes = Vec::new();

        let tuned_box = if matches!(self.tune, Tune::Box | Tune::Both) {
            let snr = pt.snr.expect("validated: tuning has an SNR");
            match optimize_box(p, snr, &self.lambda_grid) {
                Ok(t) => Some(t.params),
                Err(e) if !e.is_solver_failure() => {
                    notes.push(format!("box tuning: {e}"));
                    None
                }
                Err(e) => return Err(e),
            }
        } else {
            Some(*p)
        };
        if let Some(pb) = &tuned_box {
            row.push(("box_lambda", Cell::num(pb.lambda)));
            row.push(("box_rho", Cell::num(pb.rho)));
            row.extend(section(box_cells(pb), "box theory", &mut notes)?);
        }

        let tuned_quant = if matches!(self.tune, Tune::Quant | Tune::Both) {
            let snr = pt.snr.expect("validated: tuning has an SNR");
            match optimize_quant(p, snr, &self.lambda_grid, &self.a_grid) {
                Ok(t) => Some(t.params),
                Err(e) if !e.is_solver_failure() => {
                    notes.push(format!("quant tuning: {e}"));
                    None
                }
                Err(e) => return Err(e),
            }
        } else {
            Some(p.with_rho(1.0))
        };
        if let Some(pq) = &tuned_quant {
            row.push(("quant_lambda", Cell::num(pq.lambda)));
            row.push(("quant_a", bound_cell(pq.a)));
            row.extend(section(quant_cells(pq), "quant theory", &mut notes)?);
        }

        if self.simulate {
            row.push(("trials", Cell::Int(self.cfg.trials as u64)));
            row.extend(self.simulate_cells(tuned_box.as_ref(), tuned_quant.as_ref(), &mut notes)?);
        }
        if !notes.is_empty() {
            row.push(("note", Cell::Text(notes.join("; "))));
        }
        Ok(row)
    }

    fn simulate_cells(
        &self,
        pb: Option<&SystemParams>,
        pq: Option<&SystemParams>,
        notes: &mut Vec<String>,
    ) -> Result<Named> {
        let (trials, seed) = (self.cfg.trials, self.cfg.base_seed);
        let mut out = Vec::new();
        // One run covers both pipelines when they share λ and A.
        let shared = matches!((pb, pq), (Some(b), Some(q)) if b.with_rho(1.0) == *q);
        if let Some(b) = pb {
            match run_experiment(b, trials, seed) {
                Ok(r) => {
                    out.extend([
                        ("emp_ber_box", Cell::num(r.ber_box.mean)),
                        ("emp_ber_box_se", Cell::num(r.ber_box.se)),
                        ("emp_sdnr_lb_box", Cell::num(r.sdnr_lb_box)),
                        ("emp_sdnr_avg_box", Cell::num(r.sdnr_avg_box)),
                        ("emp_p_b", Cell::num(r.p_b_empirical.mean)),
                        ("emp_p_b_se", Cell::num(r.p_b_empirical.se)),
                        ("emp_mse_box", Cell::num(r.mse_box.mean)),
                        ("emp_w2_box", Cell::num(r.w2_box.mean)),
                    ]);
                    if shared {
                        out.extend(quant_emp(&r));
                        out.push(("emp_w2_empty_class", Cell::Bool(r.w2_empty_class)));
                        return Ok(out);
                    }
                }
                Err(e) if !e.is_solver_failure() => notes.push(format!("box simulation: {e}")),
                Err(e) => return Err(e),
            }
        }
        if let Some(q) = pq {
            match run_experiment(q, trials, seed) {
                Ok(r) => {
                    out.extend(quant_emp(&r));
                    out.push(("emp_w2_empty_class", Cell::Bool(r.w2_empty_class)));
                }
                Err(e) if !e.is_solver_failure() => notes.push(format!("quant simulation: {e}")),
                Err(e) => return Err(e),
            }
        }
        Ok(out)
    }
}

fn quant_emp(r: &crate::montecarlo::EmpiricalReport) -> Named {
    vec![
        ("emp_ber_quant", Cell::num(r.ber_quant.mean)),
        ("emp_ber_quant_se", Cell::num(r.ber_quant.se)),
        ("emp_sdnr_lb_quant", Cell::num(r.sdnr_lb_quant)),
        ("emp_sdnr_avg_quant", Cell::num(r.sdnr_avg_quant)),
        ("emp_p_q", Cell::num(r.p_q_empirical)),
        ("emp_mse_quant", Cell::num(r.mse_quant.mean)),
        ("emp_mse_quant_se", Cell::num(r.mse_quant.se)),
        ("emp_w2_quant", Cell::num(r.w2_quant.mean)),
    ]
}

fn points(cfg: &ExperimentConfig) -> Vec<Point> {
    let resolve =
        |pc: &ParamsConfig, snr| Point { params: resolve_params(pc, snr).expect("config was validated"), snr };
    let Some(sweep) = cfg.sweep.as_ref().filter(|_| cfg.mode == Mode::Sweep) else {
        return vec![resolve(&cfg.params, cfg.snr_tx_db)];
    };
    let mut combos: Vec<Vec<AxisValue>> = vec![Vec::new()];
    for axis in &sweep.axes {
        combos = combos
            .into_iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |v| {
                    let mut c = prefix.clone();
                    c.push(*v);
                    c
                })
            })
            .collect();
    }
    combos
        .into_iter()
        .map(|combo| {
            let (mut pc, mut snr) = (cfg.params.clone(), cfg.snr_tx_db);
            for (axis, v) in sweep.axes.iter().zip(combo) {
                (pc, snr) = apply_axis(&pc, snr, axis.param, v).expect("config was validated");
            }
            resolve(&pc, snr)
        })
        .collect()
}

/// Column order for a config.
pub fn schema(cfg: &ExperimentConfig) -> Vec<&'static str> {
    let mut cols = BASE_COLUMNS.to_vec();
    if cfg.mode == Mode::Saddle {
        cols.extend(SADDLE_COLUMNS);
    } else {
        cols.extend(BOX_COLUMNS);
        cols.extend(QUANT_COLUMNS);
        if simulates(cfg) {
            cols.extend(EMP_COLUMNS);
        }
    }
    cols.push("note");
    cols
}

fn simulates(cfg: &ExperimentConfig) -> bool {
    cfg.mode == Mode::Simulate || (cfg.mode == Mode::Sweep && cfg.simulate)
}

/// Evaluates every point of a validated config, in grid order.
pub fn execute(cfg: &ExperimentConfig) -> std::result::Result<Table, RunError> {
    let tune = match cfg.mode {
        Mode::TuneBox => Tune::Box,
        Mode::TuneQuant => Tune::Quant,
        Mode::Sweep => cfg.sweep.as_ref().map_or(Tune::None, |s| s.tune),
        _ => Tune::None,
    };
    let plan = Plan {
        cfg,
        tune,
        simulate: simulates(cfg),
        lambda_grid: cfg.lambda_grid.clone().unwrap_or_else(default_lambda_grid),
        a_grid: cfg.a_grid.clone().unwrap_or_else(default_a_grid),
    };
    let pts = points(cfg);
    let rows: Vec<Named> = pts
        .par_iter()
        .map(|pt| {
            let r = if cfg.mode == Mode::Saddle {
                saddle_cells(&pt.params).map(|s| {
                    let mut row = base_cells(&pt.params, pt.snr);
                    row.extend(s);
                    row
                })
            } else {
                plan.evaluate(pt)
            };
            r.map_err(|source| RunError { point: describe(&pt.params, pt.snr), source })
        })
        .collect::<std::result::Result<_, _>>()?;
    Ok(Table::from_named(&schema(cfg), rows))
}
