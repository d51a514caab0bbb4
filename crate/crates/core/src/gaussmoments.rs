//! Standard-normal kernels and the moments of the soft-clipped Gaussian
//! `X(H) = clamp(H/α, −A, A)`, `H ~ N(0, 1)`.
//!
//! Splitting the Gaussian integral at `±t`, `t = A·α`, gives
//!
//! ```text
//! m2(t)      = ∫_{−t}^{t} h² φ(h) dh = 1 − 2Q(t) − 2t·φ(t)
//! E[X²]      = m2(t)/α² + 2A²·Q(t)
//! E[H·X]     = m2(t)/α  + 2A·φ(t)
//! E[|X|]     = √(2/π)·(1 − e^{−t²/2})/α + 2A·Q(t)
//! ```

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::params::BoxBound;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// `E|H|` for a standard normal, `√(2/π)`.
pub const MEAN_ABS_NORMAL: f64 = 0.797_884_560_802_865_4;

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Gaussian tail `Q(x) = P[N(0,1) > x]`.
///
/// Goes through `erfc`, which keeps full relative precision deep into the
/// upper tail (BER values of 1e−6 and below stay meaningful).
pub fn q_tail(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Standard normal CDF `Φ(x) = Q(−x)`.
pub fn normal_cdf(x: f64) -> f64 {
    q_tail(-x)
}

/// Moments of `X(H)` used by the saddle-point system and the predictors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClipMoments {
    /// `E|X(H)|`
    pub e_abs: f64,
    /// `E[X(H)²]`
    pub e_sq: f64,
    /// `E[H·X(H)]`
    pub e_xh: f64,
}

/// `∫_{−t}^{t} h² φ(h) dh`.
fn central_second_moment(t: f64) -> f64 {
    if t < 0.5 {
        // 1 − 2Q(t) and 2tφ(t) cancel to O(t³); sum the Taylor series of
        // the integrand instead.
        let t2 = t * t;
        let mut term = 1.0; // (−1/2)^k / k!
        let mut pow = t * t2; // t^{2k+3}
        let mut sum = 0.0;
        for k in 0..30 {
            let contrib = term * pow / (2 * k + 3) as f64;
            sum += contrib;
            if contrib.abs() < 1e-18 * sum.abs() {
                break;
            }
            term *= -0.5 / (k + 1) as f64;
            pow *= t2;
        }
        2.0 * INV_SQRT_2PI * sum
    } else {
        1.0 - 2.0 * q_tail(t) - 2.0 * t * normal_pdf(t)
    }
}

/// Closed-form moments of `clamp(H/alpha, −A, A)`.
pub fn clip_moments(alpha: f64, a: BoxBound) -> Result<ClipMoments> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::domain(format!("clip_moments needs alpha > 0, got {alpha}")));
    }
    Ok(match a {
        BoxBound::Unbounded => {
            ClipMoments { e_abs: MEAN_ABS_NORMAL / alpha, e_sq: 1.0 / (alpha * alpha), e_xh: 1.0 / alpha }
        }
        BoxBound::Finite(amp) => {
            if !(amp > 0.0) {
                return Err(Error::domain(format!("clip level must be positive, got {amp}")));
            }
            let t = amp * alpha;
            let m2 = central_second_moment(t);
            let tail = q_tail(t);
            let dens = normal_pdf(t);
            ClipMoments {
                e_abs: MEAN_ABS_NORMAL * (-(-0.5 * t * t).exp_m1()) / alpha + 2.0 * amp * tail,
                e_sq: m2 / (alpha * alpha) + 2.0 * amp * amp * tail,
                e_xh: m2 / alpha + 2.0 * amp * dens,
            }
        }
    })
}

/// CDF of the law of `X(H)`: Gaussian in the interior with atoms of mass
/// `Q(Aα)` at `±A`.
pub fn clip_cdf(x: f64, alpha: f64, a: BoxBound) -> f64 {
    match a {
        BoxBound::Finite(amp) if x < -amp => 0.0,
        BoxBound::Finite(amp) if x >= amp => 1.0,
        _ => normal_cdf(alpha * x),
    }
}

/// Inverse standard normal CDF.
pub fn normal_quantile(p: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    Normal::standard().inverse_cdf(p)
}
