//! The design tuple shared by every predictor and simulator.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Per-antenna amplitude limit `‖x‖_∞ ≤ A`.
///
/// `Unbounded` is the exact `A = ∞` limit (plain regularized zero forcing),
/// kept separate from large finite values so that limit formulas stay exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoxBound {
    Finite(f64),
    Unbounded,
}

impl BoxBound {
    pub fn finite(a: f64) -> Result<Self> {
        if a.is_finite() && a > 0.0 {
            Ok(BoxBound::Finite(a))
        } else if a == f64::INFINITY {
            Ok(BoxBound::Unbounded)
        } else {
            Err(Error::domain(format!("box amplitude must be positive, got {a}")))
        }
    }

    /// The amplitude as a float, `f64::INFINITY` when unbounded.
    pub fn value(self) -> f64 {
        match self {
            BoxBound::Finite(a) => a,
            BoxBound::Unbounded => f64::INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, BoxBound::Finite(_))
    }

    pub fn clamp(self, x: f64) -> f64 {
        match self {
            BoxBound::Finite(a) => x.clamp(-a, a),
            BoxBound::Unbounded => x,
        }
    }
}

impl fmt::Display for BoxBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoxBound::Finite(a) => write!(f, "{a}"),
            BoxBound::Unbounded => f.write_str("inf"),
        }
    }
}

impl FromStr for BoxBound {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "+inf" | "unbounded" => Ok(BoxBound::Unbounded),
            other => {
                let a: f64 = other.parse().map_err(|_| Error::domain(format!("cannot parse box amplitude {s:?}")))?;
                BoxBound::finite(a)
            }
        }
    }
}

// JSON has no infinity, so the unbounded box travels as the string "inf".
impl Serialize for BoxBound {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            BoxBound::Finite(a) => serializer.serialize_f64(*a),
            BoxBound::Unbounded => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for BoxBound {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        let parsed = match Raw::deserialize(deserializer)? {
            Raw::Num(a) => BoxBound::finite(a),
            Raw::Text(s) => s.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

/// System and design parameters.
///
/// `n` is the antenna count and `m = round(δ·n)` the user count. The
/// quantization level `level` (L) and `sigma2` only enter the quantized and
/// noisy metrics; the saddle point depends on `(δ, λ, A, ρ)` alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub n: usize,
    pub delta: f64,
    pub lambda: f64,
    pub a: BoxBound,
    #[serde(rename = "l")]
    pub level: f64,
    pub sigma2: f64,
    pub rho: f64,
}

impl SystemParams {
    /// Parameters with `n = 1000`, `L = 1` and a noiseless receiver.
    pub fn new(delta: f64, lambda: f64, a: BoxBound, rho: f64) -> Self {
        SystemParams { n: 1000, delta, lambda, a, level: 1.0, sigma2: 0.0, rho }
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn with_level(mut self, level: f64) -> Self {
        self.level = level;
        self
    }

    pub fn with_sigma2(mut self, sigma2: f64) -> Self {
        self.sigma2 = sigma2;
        self
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_bound(mut self, a: BoxBound) -> Self {
        self.a = a;
        self
    }

    /// Number of users, `round(δ·n)`.
    pub fn m(&self) -> usize {
        (self.delta * self.n as f64).round() as usize
    }

    /// `δ = 1`, `λ = 0` with a finite box: the saddle is still unique, but
    /// this is the edge of the admissible set (any smaller `δ` is rejected).
    pub fn is_boundary_regime(&self) -> bool {
        self.lambda == 0.0 && self.delta == 1.0 && self.a.is_finite()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::domain(format!("{name} must be positive and finite, got {v}")))
            }
        };
        let nonneg = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::domain(format!("{name} must be nonnegative and finite, got {v}")))
            }
        };
        positive("delta", self.delta)?;
        nonneg("lambda", self.lambda)?;
        positive("l", self.level)?;
        nonneg("sigma2", self.sigma2)?;
        positive("rho", self.rho)?;
        if let BoxBound::Finite(a) = self.a {
            positive("a", a)?;
        }
        if self.n == 0 {
            return Err(Error::domain("n must be at least 1"));
        }
        if self.m() == 0 {
            return Err(Error::domain(format!("round(delta*n) = 0 users for delta={} n={}", self.delta, self.n)));
        }
        if self.lambda == 0.0 && self.delta < 1.0 {
            return Err(Error::domain(format!("lambda = 0 requires delta >= 1 (got delta = {})", self.delta)));
        }
        if self.lambda == 0.0 && self.delta == 1.0 && !self.a.is_finite() {
            return Err(Error::domain("delta = 1, lambda = 0, A = inf (zero forcing) has no unique saddle point"));
        }
        Ok(())
    }
}
