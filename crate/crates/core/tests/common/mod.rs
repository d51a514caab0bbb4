//! Reference computations that share no code path with the library: plain
//! adaptive quadrature for the clipped-Gaussian moments, a damped fixed-point
//! iteration for the saddle point, and active-set enumeration for tiny
//! box-constrained least-squares problems.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let pair = f(c - x) + f(c + x);
        kron += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kron * h, (kron - gauss).abs() * h)
}

/// Adaptive Gauss–Kronrod (7/15) with absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (val, err) = gk15(f, a, b);
        // Also stop once the error estimate is at rounding level of the value.
        if err <= tol.max(8.0 * f64::EPSILON * val.abs()) || depth >= 50 || (b - a) < 1e-14 {
            return val;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, 0.5 * tol, depth + 1) + rec(f, m, b, 0.5 * tol, depth + 1)
    }
    rec(f, a, b, tol, 0)
}

pub fn phi(h: f64) -> f64 {
    (-0.5 * h * h).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `(E|X|, E[X²], E[HX])` for `X = clamp(H/alpha, ±a)` by quadrature over
/// `[−40, 40]`, split at the clipping kinks.
pub fn quad_moments(alpha: f64, a: f64) -> (f64, f64, f64) {
    let x = move |h: f64| {
        let v = h / alpha;
        if v > a {
            a
        } else if v < -a {
            -a
        } else {
            v
        }
    };
    // Fixed unit breakpoints keep the rule from stepping over the bulk of
    // the density; the kinks at ±t are added on top.
    let t = a * alpha;
    let mut cuts: Vec<f64> = (-12..=12).map(f64::from).collect();
    cuts.extend([-40.0, 40.0]);
    if t < 40.0 {
        cuts.extend([-t, t]);
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    // Absolute tolerance scaled to the size of X² so huge moments do not
    // force subdivision below rounding level.
    let scale = (a * a).min(1.0 / (alpha * alpha)).max(1.0);
    let tol = 1e-15 * scale / cuts.len() as f64;
    let mut out = (0.0, 0.0, 0.0);
    for w in cuts.windows(2) {
        out.0 += integrate(&|h| x(h).abs() * phi(h), w[0], w[1], tol);
        out.1 += integrate(&|h| x(h) * x(h) * phi(h), w[0], w[1], tol);
        out.2 += integrate(&|h| h * x(h) * phi(h), w[0], w[1], tol);
    }
    out
}

/// Damped fixed-point iteration on `(τ, β)` using quadrature moments.
/// Returns `None` if it fails to settle to `tol`.
pub fn fixed_point_saddle(
    delta: f64,
    lambda: f64,
    a: f64,
    rho: f64,
    start: (f64, f64),
    tol: f64,
) -> Option<(f64, f64)> {
    let (mut tau, mut beta) = start;
    let damping = 0.5;
    for _ in 0..20_000 {
        let alpha = 1.0 / tau + 2.0 * lambda / beta;
        let (_, e_sq, e_xh) = quad_moments(alpha, a);
        let tau_new = ((rho + e_sq) / delta).sqrt();
        let mut beta_new = 2.0 * tau * delta - 2.0 * e_xh;
        if !(beta_new > 0.0) {
            // Overshoot from a far start: retreat toward zero instead.
            beta_new = 0.5 * beta;
        }
        let nt = (1.0 - damping) * tau + damping * tau_new;
        let nb = (1.0 - damping) * beta + damping * beta_new;
        let step = (nt - tau).abs().max((nb - beta).abs());
        tau = nt;
        beta = nb;
        if step < tol {
            return Some((tau, beta));
        }
    }
    None
}

/// Exact minimum of `‖Hx − √ρ s‖²/n + λ‖x‖²/n` over `‖x‖_∞ ≤ a` by trying
/// every free/upper/lower pattern (`3^n` systems). Requires `λ > 0`.
pub fn enumerate_box_qp(h: &DMatrix<f64>, s: &DVector<f64>, rho: f64, lambda: f64, a: f64) -> (f64, DVector<f64>) {
    let n = h.ncols();
    let q = h.transpose() * h + DMatrix::identity(n, n) * lambda;
    let b = h.transpose() * s * rho.sqrt();
    let cost = |x: &DVector<f64>| ((h * x - s * rho.sqrt()).norm_squared() + lambda * x.norm_squared()) / n as f64;
    let mut best = (f64::INFINITY, DVector::zeros(n));
    let patterns = 3usize.pow(n as u32);
    for code in 0..patterns {
        let mut state = vec![0u8; n];
        let mut c = code;
        for st in state.iter_mut() {
            *st = (c % 3) as u8;
            c /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 0).collect();
        let mut x = DVector::zeros(n);
        for i in 0..n {
            x[i] = match state[i] {
                1 => a,
                2 => -a,
                _ => 0.0,
            };
        }
        if !free.is_empty() {
            let k = free.len();
            let mut qff = DMatrix::zeros(k, k);
            let mut rhs = DVector::zeros(k);
            for (r, &i) in free.iter().enumerate() {
                rhs[r] = b[i];
                for j in 0..n {
                    if state[j] != 0 {
                        rhs[r] -= q[(i, j)] * x[j];
                    }
                }
                for (cc, &j) in free.iter().enumerate() {
                    qff[(r, cc)] = q[(i, j)];
                }
            }
            let Some(sol) = qff.cholesky().map(|ch| ch.solve(&rhs)) else { continue };
            if sol.iter().any(|v| v.abs() > a + 1e-12) {
                continue;
            }
            for (r, &i) in free.iter().enumerate() {
                x[i] = sol[r];
            }
        }
        let c = cost(&x);
        if c < best.0 {
            best = (c, x);
        }
    }
    best
}

/// Deterministic standard-normal stream for oracle inputs (Box–Muller on
/// a 64-bit LCG), independent of the library's sampler.
pub struct Lcg(u64);

impl Lcg {
    pub fn new(seed: u64) -> Self {
        Lcg(seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407))
    }

    pub fn uniform(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((self.0 >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

/// Gaussian tail by quadrature over `[x, x + 40]` in half-unit pieces.
pub fn q_oracle(x: f64) -> f64 {
    if x < 0.0 {
        return 1.0 - q_oracle(-x);
    }
    let scale = phi(x) / (1.0 + x);
    (0..80).map(|k| integrate(&phi, x + 0.5 * k as f64, x + 0.5 * (k + 1) as f64, 1e-17 * scale)).sum()
}
