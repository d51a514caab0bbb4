//! Python bindings: a `Params` class plus the predictors, tuners and the
//! Monte Carlo driver. Results come back as plain dicts.

use boxquant::montecarlo::{self, MeanSe};
use boxquant::theory::{self, Pipeline};
use boxquant::tuner::{self, default_a_grid, default_lambda_grid};
use boxquant::{BoxBound, Error, SystemParams};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    if e.is_solver_failure() {
        PyRuntimeError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn bound(a: Option<f64>) -> PyResult<BoxBound> {
    match a {
        None => Ok(BoxBound::Unbounded),
        Some(v) if v == f64::INFINITY => Ok(BoxBound::Unbounded),
        Some(v) => BoxBound::finite(v).map_err(to_py),
    }
}

/// System parameters. `a=None` (or `inf`) means no box.
#[pyclass(frozen, eq, skip_from_py_object, module = "pyboxquant")]
#[derive(Clone, PartialEq)]
struct Params {
    inner: SystemParams,
}

#[pymethods]
impl Params {
    #[new]
    #[pyo3(signature = (delta, lambda_, a=None, rho=1.0, n=1000, sigma2=0.0, level=1.0))]
    fn new(delta: f64, lambda_: f64, a: Option<f64>, rho: f64, n: usize, sigma2: f64, level: f64) -> PyResult<Self> {
        let inner = SystemParams::new(delta, lambda_, bound(a)?, rho).with_n(n).with_sigma2(sigma2).with_level(level);
        inner.validate().map_err(to_py)?;
        Ok(Params { inner })
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.inner.delta
    }
    #[getter]
    fn lambda_(&self) -> f64 {
        self.inner.lambda
    }
    #[getter]
    fn a(&self) -> f64 {
        self.inner.a.value()
    }
    #[getter]
    fn rho(&self) -> f64 {
        self.inner.rho
    }
    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }
    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }
    #[getter]
    fn sigma2(&self) -> f64 {
        self.inner.sigma2
    }
    #[getter]
    fn level(&self) -> f64 {
        self.inner.level
    }

    /// Copy with some fields replaced.
    #[pyo3(signature = (*, delta=None, lambda_=None, a=None, rho=None, n=None, sigma2=None, level=None))]
    #[allow(clippy::too_many_arguments)]
    fn replace(
        &self,
        delta: Option<f64>,
        lambda_: Option<f64>,
        a: Option<f64>,
        rho: Option<f64>,
        n: Option<usize>,
        sigma2: Option<f64>,
        level: Option<f64>,
    ) -> PyResult<Self> {
        let p = &self.inner;
        let a = match a {
            Some(v) => Some(v),
            None => p.a.is_finite().then(|| p.a.value()),
        };
        Params::new(
            delta.unwrap_or(p.delta),
            lambda_.unwrap_or(p.lambda),
            a,
            rho.unwrap_or(p.rho),
            n.unwrap_or(p.n),
            sigma2.unwrap_or(p.sigma2),
            level.unwrap_or(p.level),
        )
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "Params(delta={}, lambda_={}, a={}, rho={}, n={}, sigma2={}, level={})",
            p.delta, p.lambda, p.a, p.rho, p.n, p.sigma2, p.level
        )
    }
}

/// `(E|X|, E X², E XH)` of the clipped Gaussian `clamp(H/alpha, ±a)`.
#[pyfunction]
#[pyo3(signature = (alpha, a=None))]
fn clip_moments(alpha: f64, a: Option<f64>) -> PyResult<(f64, f64, f64)> {
    let cm = boxquant::clip_moments(alpha, bound(a)?).map_err(to_py)?;
    Ok((cm.e_abs, cm.e_sq, cm.e_xh))
}

/// Gaussian tail probability `Q(x)`.
#[pyfunction]
fn q_tail(x: f64) -> f64 {
    boxquant::q_tail(x)
}

#[pyfunction]
fn solve_saddle<'py>(py: Python<'py>, params: &Params) -> PyResult<Bound<'py, PyDict>> {
    let sp = boxquant::solve_saddle(&params.inner).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("tau", sp.tau)?;
    d.set_item("beta", sp.beta)?;
    d.set_item("alpha", sp.alpha)?;
    d.set_item("phi", sp.phi)?;
    d.set_item("e_abs", sp.moments.e_abs)?;
    d.set_item("e_sq", sp.moments.e_sq)?;
    d.set_item("e_xh", sp.moments.e_xh)?;
    d.set_item("boundary_regime", sp.boundary_regime)?;
    Ok(d)
}

#[pyfunction]
fn box_theory<'py>(py: Python<'py>, params: &Params) -> PyResult<Bound<'py, PyDict>> {
    let p = &params.inner;
    let sp = boxquant::solve_saddle(p).map_err(to_py)?;
    let bt = theory::box_theory(p, &sp).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("p_bar", bt.p_bar)?;
    d.set_item("sdnr_lb", bt.sdnr_lb)?;
    d.set_item("ber", bt.ber)?;
    d.set_item("varsigma", bt.varsigma)?;
    d.set_item("dist_std", bt.dist_std)?;
    d.set_item("sig_coef", bt.sig_coef)?;
    d.set_item("snr_tx", theory::snr_tx(p, Pipeline::Box, &sp).ok())?;
    Ok(d)
}

/// Quantized-precoder predictor; requires `rho == 1`.
#[pyfunction]
fn quant_theory<'py>(py: Python<'py>, params: &Params) -> PyResult<Bound<'py, PyDict>> {
    let p = &params.inner;
    let sp = boxquant::solve_saddle(p).map_err(to_py)?;
    let qt = theory::quant_theory(p, &sp).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("xi", qt.xi)?;
    d.set_item("zeta", qt.zeta)?;
    d.set_item("sdnr_lb", qt.sdnr_lb)?;
    d.set_item("ber", qt.ber)?;
    d.set_item("kappa", qt.kappa)?;
    d.set_item("snr_tx", theory::snr_tx(p, Pipeline::Quantized, &sp).ok())?;
    Ok(d)
}

#[pyfunction]
fn bussgang_theory<'py>(py: Python<'py>, params: &Params) -> PyResult<Bound<'py, PyDict>> {
    let p = &params.inner;
    let sp = boxquant::solve_saddle(p).map_err(to_py)?;
    let bg = theory::bussgang_theory(p, &sp).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("theta", bg.theta_b)?;
    d.set_item("resid_var", bg.resid_var)?;
    d.set_item("sig_coef", bg.sig_coef)?;
    d.set_item("noise_var", bg.noise_var)?;
    d.set_item("ber", bg.ber)?;
    Ok(d)
}

#[pyfunction]
fn tune_rho_for_power(params: &Params, target_p: f64) -> PyResult<Params> {
    let t = tuner::tune_rho_for_power(&params.inner, target_p).map_err(to_py)?;
    Ok(Params { inner: t.params })
}

#[pyfunction]
fn tune_l_for_snr(sigma2: f64, snr_tx_db: f64) -> PyResult<f64> {
    tuner::tune_l_for_snr(sigma2, snr_tx_db).map_err(to_py)
}

/// Best `λ` for the box precoder; returns `(params, ber)`.
#[pyfunction]
#[pyo3(signature = (params, snr_tx_db, lambda_grid=None))]
fn optimize_box(
    py: Python<'_>,
    params: &Params,
    snr_tx_db: f64,
    lambda_grid: Option<Vec<f64>>,
) -> PyResult<(Params, f64)> {
    let grid = lambda_grid.unwrap_or_else(default_lambda_grid);
    let p = params.inner;
    let t = py.detach(|| tuner::optimize_box(&p, snr_tx_db, &grid)).map_err(to_py)?;
    Ok((Params { inner: t.params }, t.objective))
}

/// Best `(λ, A)` for the quantized precoder; returns `(params, ber)`.
/// `inf` in `a_grid` stands for no box.
#[pyfunction]
#[pyo3(signature = (params, snr_tx_db, lambda_grid=None, a_grid=None))]
fn optimize_quant(
    py: Python<'_>,
    params: &Params,
    snr_tx_db: f64,
    lambda_grid: Option<Vec<f64>>,
    a_grid: Option<Vec<f64>>,
) -> PyResult<(Params, f64)> {
    let lambdas = lambda_grid.unwrap_or_else(default_lambda_grid);
    let bounds = match a_grid {
        None => default_a_grid(),
        Some(g) => g.into_iter().map(|v| bound(Some(v))).collect::<PyResult<_>>()?,
    };
    let p = params.inner;
    let t = py.detach(|| tuner::optimize_quant(&p, snr_tx_db, &lambdas, &bounds)).map_err(to_py)?;
    Ok((Params { inner: t.params }, t.objective))
}

fn mean_se<'py>(py: Python<'py>, v: MeanSe) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("mean", v.mean)?;
    d.set_item("se", v.se)?;
    Ok(d)
}

/// Monte Carlo over `trials` seeded realizations; trial `t` uses seed
/// `base_seed + t`.
#[pyfunction]
#[pyo3(signature = (params, trials, base_seed=0))]
fn run_experiment<'py>(
    py: Python<'py>,
    params: &Params,
    trials: usize,
    base_seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let p = params.inner;
    let r = py.detach(|| montecarlo::run_experiment(&p, trials, base_seed)).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("trials", r.trials)?;
    d.set_item("n", r.n)?;
    d.set_item("m", r.m)?;
    d.set_item("ber_box", mean_se(py, r.ber_box)?)?;
    d.set_item("ber_quant", mean_se(py, r.ber_quant)?)?;
    d.set_item("sdnr_lb_box", r.sdnr_lb_box)?;
    d.set_item("sdnr_lb_quant", r.sdnr_lb_quant)?;
    d.set_item("sdnr_avg_box", r.sdnr_avg_box)?;
    d.set_item("sdnr_avg_quant", r.sdnr_avg_quant)?;
    d.set_item("p_b", mean_se(py, r.p_b_empirical)?)?;
    d.set_item("p_q", r.p_q_empirical)?;
    d.set_item("mse_box", mean_se(py, r.mse_box)?)?;
    d.set_item("mse_quant", mean_se(py, r.mse_quant)?)?;
    d.set_item("w2_box", mean_se(py, r.w2_box)?)?;
    d.set_item("w2_quant", mean_se(py, r.w2_quant)?)?;
    d.set_item("w2_empty_class", r.w2_empty_class)?;
    Ok(d)
}

#[pymodule]
fn pyboxquant(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Params>()?;
    m.add_function(wrap_pyfunction!(clip_moments, m)?)?;
    m.add_function(wrap_pyfunction!(q_tail, m)?)?;
    m.add_function(wrap_pyfunction!(solve_saddle, m)?)?;
    m.add_function(wrap_pyfunction!(box_theory, m)?)?;
    m.add_function(wrap_pyfunction!(quant_theory, m)?)?;
    m.add_function(wrap_pyfunction!(bussgang_theory, m)?)?;
    m.add_function(wrap_pyfunction!(tune_rho_for_power, m)?)?;
    m.add_function(wrap_pyfunction!(tune_l_for_snr, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_box, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_quant, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
