//! Box-constrained regularized least-squares precoder followed by one-bit
//! quantization.
//!
//! ```text
//! x̂   = argmin_{‖x‖_∞ ≤ A}  ‖Hx − √ρ·s‖²/n + λ‖x‖²/n
//! x_q = L·sign(x̂)
//! ```

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::params::{BoxBound, SystemParams};

/// One draw of channel, symbols and receiver noise. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    /// `m × n`, entries `N(0, 1/n)`.
    pub h: DMatrix<f64>,
    /// BPSK symbols in `{−1, +1}`.
    pub s: DVector<f64>,
    /// Receiver noise, entries `N(0, σ²)`.
    pub z: DVector<f64>,
    pub seed: u64,
}

/// Draws a realization from a ChaCha8 stream seeded with `seed`.
///
/// Sampling order is fixed: `H` row by row (user-major), then `s`, then
/// the unit-variance noise, which is scaled by `σ`.
pub fn generate_realization(params: &SystemParams, seed: u64) -> Realization {
    let n = params.n;
    let m = params.m();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / (n as f64).sqrt();
    let mut h = DMatrix::zeros(m, n);
    for k in 0..m {
        for i in 0..n {
            let g: f64 = rng.sample(StandardNormal);
            h[(k, i)] = g * scale;
        }
    }
    let s = DVector::from_fn(m, |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 });
    let sigma = params.sigma2.sqrt();
    let z = DVector::from_fn(m, |_, _| {
        let g: f64 = rng.sample(StandardNormal);
        g * sigma
    });
    Realization { h, s, z, seed }
}

/// `L·sign(x)` entrywise, with `sign(0) = +1`.
pub fn quantize(x_hat: &DVector<f64>, level: f64) -> DVector<f64> {
    x_hat.map(|v| if v >= 0.0 { level } else { -level })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop once the KKT residual drops below this.
    pub tol: f64,
    pub max_iter: usize,
    pub power_iters: usize,
    /// Record the objective after every iteration.
    pub trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-9, max_iter: 20_000, power_iters: 50, trace: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSolution {
    pub x_hat: DVector<f64>,
    pub x_q: DVector<f64>,
    pub cost: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    /// Objective per iteration; empty unless tracing was requested.
    pub cost_trace: Vec<f64>,
}

/// A concrete box-constrained least-squares problem.
#[derive(Debug, Clone, Copy)]
pub struct BoxQp<'a> {
    pub h: &'a DMatrix<f64>,
    pub s: &'a DVector<f64>,
    pub rho: f64,
    pub lambda: f64,
    pub bound: BoxBound,
}

/// Minimizer and diagnostics of a [`BoxQp`], before quantization.
#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub x: DVector<f64>,
    pub cost: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub cost_trace: Vec<f64>,
}

impl<'a> BoxQp<'a> {
    pub fn new(h: &'a DMatrix<f64>, s: &'a DVector<f64>, rho: f64, lambda: f64, bound: BoxBound) -> Result<Self> {
        if s.len() != h.nrows() {
            return Err(Error::domain(format!("symbol vector has {} entries but H has {} rows", s.len(), h.nrows())));
        }
        if h.ncols() == 0 {
            return Err(Error::domain("H has no columns"));
        }
        if !(rho > 0.0) || !(lambda >= 0.0) {
            return Err(Error::domain(format!("need rho > 0 and lambda >= 0 (rho={rho}, lambda={lambda})")));
        }
        Ok(BoxQp { h, s, rho, lambda, bound })
    }

    fn n(&self) -> f64 {
        self.h.ncols() as f64
    }

    /// `P(x)` from a precomputed `Hx`.
    fn cost_from(&self, hx: &DVector<f64>, x: &DVector<f64>) -> f64 {
        let sr = self.rho.sqrt();
        let misfit: f64 = hx.iter().zip(self.s.iter()).map(|(a, b)| (a - sr * b).powi(2)).sum();
        (misfit + self.lambda * x.norm_squared()) / self.n()
    }

    pub fn cost(&self, x: &DVector<f64>) -> f64 {
        self.cost_from(&(self.h * x), x)
    }

    fn gradient_from(&self, hx: &DVector<f64>, x: &DVector<f64>) -> DVector<f64> {
        let resid = hx - self.s * self.rho.sqrt();
        let mut g = self.h.tr_mul(&resid);
        g.axpy(self.lambda, x, 1.0);
        g * (2.0 / self.n())
    }

    /// `(2/n)(Hᵀ(Hx − √ρ s) + λx)`.
    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.gradient_from(&(self.h * x), x)
    }

    /// Largest projected-gradient stationarity violation at a feasible `x`.
    pub fn kkt_residual(&self, x: &DVector<f64>, g: &DVector<f64>) -> f64 {
        x.iter()
            .zip(g.iter())
            .map(|(&xi, &gi)| match self.bound {
                BoxBound::Finite(a) if xi >= a => gi.max(0.0),
                BoxBound::Finite(a) if xi <= -a => (-gi).max(0.0),
                _ => gi.abs(),
            })
            .fold(0.0, f64::max)
    }

    fn project(&self, v: &mut DVector<f64>) {
        if let BoxBound::Finite(a) = self.bound {
            v.apply(|x| *x = x.clamp(-a, a));
        }
    }

    /// Power-method estimate of `‖H‖₂²`.
    fn spectral_norm_sq(&self, iters: usize) -> f64 {
        let n = self.h.ncols();
        let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
        let mut est = 0.0;
        for _ in 0..iters {
            let w = self.h.tr_mul(&(self.h * &v));
            let norm = w.norm();
            if norm == 0.0 {
                return 0.0;
            }
            est = v.dot(&w);
            v = w / norm;
        }
        est
    }

    /// Accelerated projected gradient with objective-increase restarts and
    /// backtracking on the step size.
    pub fn solve(&self, opts: &SolverOptions) -> Result<QpSolution> {
        let n = self.h.ncols();
        let inv_n2 = 2.0 / self.n();
        // Power iteration underestimates; start slightly above and let
        // backtracking catch the rest.
        let mut lip = 1.05 * inv_n2 * (self.spectral_norm_sq(opts.power_iters) + self.lambda);
        if !(lip > 0.0) {
            lip = inv_n2 * (1.0 + self.lambda);
        }

        let mut x = DVector::zeros(n);
        let mut hx = DVector::zeros(self.h.nrows());
        let mut gx = self.gradient_from(&hx, &x);
        let mut fx = self.cost_from(&hx, &x);
        let (mut x_prev, mut hx_prev, mut gx_prev) = (x.clone(), hx.clone(), gx.clone());
        let mut t = 1.0_f64;
        let mut trace = Vec::new();
        let mut residual = self.kkt_residual(&x, &gx);
        if opts.trace {
            trace.push(fx);
        }
        if residual < opts.tol {
            return Ok(QpSolution { x, cost: fx, kkt_residual: residual, iterations: 0, cost_trace: trace });
        }

        for iter in 1..=opts.max_iter {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let mu = (t - 1.0) / t_next;
            let (cand, hc, fc, restarted) = {
                // The objective is quadratic, so Hy and ∇f(y) extrapolate
                // linearly from the last two iterates.
                let y = &x + (&x - &x_prev) * mu;
                let hy = &hx + (&hx - &hx_prev) * mu;
                let gy = &gx + (&gx - &gx_prev) * mu;
                let fy = self.cost_from(&hy, &y);
                let (c, hc, fc) = self.backtracked_step(&y, &gy, fy, &mut lip);
                if fc > fx {
                    let (c, hc, fc) = self.backtracked_step(&x, &gx, fx, &mut lip);
                    (c, hc, fc, true)
                } else {
                    (c, hc, fc, false)
                }
            };
            let gc = self.gradient_from(&hc, &cand);
            residual = self.kkt_residual(&cand, &gc);
            x_prev = std::mem::replace(&mut x, cand);
            hx_prev = std::mem::replace(&mut hx, hc);
            gx_prev = std::mem::replace(&mut gx, gc);
            fx = fc;
            t = if restarted { 1.0 } else { t_next };
            if opts.trace {
                trace.push(fx);
            }
            if residual < opts.tol {
                return Ok(QpSolution { x, cost: fx, kkt_residual: residual, iterations: iter, cost_trace: trace });
            }
        }
        Err(Error::NoConvergence { solver: "accelerated projected gradient", iterations: opts.max_iter, residual })
    }

    /// Projected step from `y` with the sufficient-decrease test of the
    /// quadratic upper model; doubles `lip` until it holds.
    fn backtracked_step(
        &self,
        y: &DVector<f64>,
        gy: &DVector<f64>,
        fy: f64,
        lip: &mut f64,
    ) -> (DVector<f64>, DVector<f64>, f64) {
        loop {
            let mut c = y - gy / *lip;
            self.project(&mut c);
            let hc = self.h * &c;
            let fc = self.cost_from(&hc, &c);
            let d = &c - y;
            let model = fy + gy.dot(&d) + 0.5 * *lip * d.norm_squared();
            if fc <= model + 1e-15 * fy.abs().max(1.0) || *lip > 1e300 {
                return (c, hc, fc);
            }
            *lip *= 2.0;
        }
    }
}

/// Solves the box precoder for `real` at `params.rho` and quantizes at `params.level`.
pub fn solve_box_qp(real: &Realization, params: &SystemParams) -> Result<PrecoderSolution> {
    solve_box_qp_with(real, params, &SolverOptions::default())
}

pub fn solve_box_qp_with(real: &Realization, params: &SystemParams, opts: &SolverOptions) -> Result<PrecoderSolution> {
    params.validate()?;
    if real.h.nrows() != params.m() || real.h.ncols() != params.n {
        return Err(Error::domain(format!(
            "realization is {}x{} but params expect {}x{}",
            real.h.nrows(),
            real.h.ncols(),
            params.m(),
            params.n
        )));
    }
    let qp = BoxQp::new(&real.h, &real.s, params.rho, params.lambda, params.a)?;
    let sol = qp.solve(opts)?;
    Ok(PrecoderSolution {
        x_q: quantize(&sol.x, params.level),
        x_hat: sol.x,
        cost: sol.cost,
        kkt_residual: sol.kkt_residual,
        iterations: sol.iterations,
        cost_trace: sol.cost_trace,
    })
}
