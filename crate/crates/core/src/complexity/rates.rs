//! Regret rates as functions of the horizon for the three entropy regimes.
//!
//! The plain rates set every constant to 1 and are normalized by `n`, except
//! the optimistic bounds, which are unnormalized regret. The
//! `_with_constants` variants keep the constants produced by the chaining
//! arguments with the scales chosen there.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::protocol::optimistic_conversion;
use crate::report::fmt_real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    Finite { size: usize },
    Parametric { d: f64 },
    Nonparametric { p: f64 },
}

impl Regime {
    fn validate(self) -> Result<Self> {
        match self {
            Regime::Finite { size } if size == 0 => {
                Err(Error::range("finite class size must be at least 1"))
            }
            Regime::Parametric { d } if !(d >= 1.0) => Err(Error::range(format!(
                "dimension d must be at least 1, got {d}"
            ))),
            Regime::Nonparametric { p } if !(p > 0.0) || !p.is_finite() => Err(Error::range(
                format!("entropy exponent p must be positive, got {p}"),
            )),
            ok => Ok(ok),
        }
    }
}

impl FromStr for Regime {
    type Err = Error;

    /// `finite:size=<k>`, `parametric:d=<v>`, `p=<v>` or `nonparametric:p=<v>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::range(format!("unknown regime `{s}`"));
        let regime = if let Some(v) = s.strip_prefix("finite:size=") {
            Regime::Finite {
                size: v.parse().map_err(|_| bad())?,
            }
        } else if let Some(v) = s.strip_prefix("parametric:d=") {
            Regime::Parametric {
                d: v.parse().map_err(|_| bad())?,
            }
        } else if let Some(v) = s
            .strip_prefix("nonparametric:p=")
            .or_else(|| s.strip_prefix("p="))
        {
            Regime::Nonparametric {
                p: v.parse().map_err(|_| bad())?,
            }
        } else {
            return Err(bad());
        };
        regime.validate()
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regime::Finite { size } => write!(f, "finite:size={size}"),
            Regime::Parametric { d } => write!(f, "parametric:d={}", fmt_real(*d)),
            Regime::Nonparametric { p } => write!(f, "p={}", fmt_real(*p)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSpec {
    pub regime: Regime,
    pub horizon_n: usize,
    pub bound_b: f64,
}

impl RateSpec {
    pub fn new(regime: Regime, horizon_n: usize, bound_b: f64) -> Result<Self> {
        if horizon_n == 0 {
            return Err(Error::range("horizon n must be at least 1"));
        }
        if !(bound_b > 0.0) {
            return Err(Error::range(format!(
                "bound B must be positive, got {bound_b}"
            )));
        }
        Ok(Self {
            regime: regime.validate()?,
            horizon_n,
            bound_b,
        })
    }

    fn checked(&self) -> Result<(Regime, f64)> {
        Ok((self.regime.validate()?, self.horizon_n as f64))
    }
}

/// Upper rate on `V_n / n`.
pub fn theorem1_rate(spec: &RateSpec) -> Result<f64> {
    let (regime, n) = spec.checked()?;
    Ok(match regime {
        Regime::Nonparametric { p } if p > 2.0 => n.powf(-1.0 / p),
        Regime::Nonparametric { p } if p == 2.0 => n.ln() / n.sqrt(),
        Regime::Nonparametric { p } => n.powf(-2.0 / (2.0 + p)),
        Regime::Parametric { d } => d * n.ln() / n,
        Regime::Finite { size } => (size as f64).ln() / n,
    })
}

/// The upper rate with the constants of the chaining argument, normalized by `n`.
pub fn theorem1_rate_with_constants(spec: &RateSpec) -> Result<f64> {
    let (regime, n) = spec.checked()?;
    let b = spec.bound_b;
    let total = match regime {
        Regime::Nonparametric { p } if p > 2.0 => {
            b * (4.0 + 24.0 / (p - 2.0)) * n.powf(1.0 - 1.0 / p)
        }
        // γ = n^{-1/4}, ρ = 1/n: the integral of 1/δ contributes (3/4) log n.
        Regime::Nonparametric { p } if p == 2.0 => {
            32.0 * b * b * n.sqrt() + 4.0 * b + 9.0 * b * n.sqrt() * n.ln()
        }
        Regime::Nonparametric { p } => {
            4.0 * b + (32.0 * b * b + 24.0 * b / (2.0 - p)) * n.powf(p / (p + 2.0))
        }
        Regime::Parametric { d } => {
            16.0 * b * b * d * n.ln() + 4.0 * b + 12.0 * b * (d * n.ln()).sqrt()
        }
        Regime::Finite { size } => 32.0 * b * b * (size as f64).ln(),
    };
    Ok(total / n)
}

/// Lower rate on `V_n / n`, logarithmic factors dropped.
pub fn theorem2_lower_rate(spec: &RateSpec) -> Result<f64> {
    let (regime, n) = spec.checked()?;
    Ok(match regime {
        Regime::Nonparametric { p } if p >= 2.0 => n.powf(-1.0 / p),
        Regime::Nonparametric { p } => n.powf(-2.0 / (2.0 + p)),
        Regime::Parametric { d } => d * n.ln() / n,
        Regime::Finite { size } => (size as f64).ln() / n,
    })
}

/// `U1` such that `α`-regret is at most `U1/α`.
fn optimistic_u1(regime: Regime, n: f64, b: f64) -> f64 {
    let log_nb = (n * b).ln().max(0.0);
    match regime {
        Regime::Nonparametric { p } if p > 2.0 => {
            let growth = n.powf((p - 2.0) / (p - 1.0));
            4.0 * growth + 16.0 / p * n.ln() / (p - 2.0) * growth
        }
        Regime::Nonparametric { p } if p == 2.0 => 4.0 + 16.0 * log_nb * log_nb,
        Regime::Nonparametric { p } => 4.0 + 16.0 * log_nb / (2.0 - p),
        Regime::Parametric { d } => 4.0 + 4.0 * d * log_nb,
        Regime::Finite { size } => 16.0 * (size as f64).ln(),
    }
}

/// Optimistic bound on unnormalized regret, constants set to 1.
pub fn theorem3_optimistic_bound(spec: &RateSpec, l_star: f64) -> Result<f64> {
    let (regime, n) = spec.checked()?;
    if !(l_star >= 0.0) {
        return Err(Error::range(format!(
            "L* must be nonnegative, got {l_star}"
        )));
    }
    let complexity = match regime {
        Regime::Nonparametric { p } if p > 2.0 => n.powf(1.0 - 1.0 / (p - 1.0)) * n.ln(),
        Regime::Nonparametric { p } if p == 2.0 => n.ln() * n.ln(),
        Regime::Nonparametric { .. } => n.ln(),
        Regime::Parametric { d } => d * n.ln(),
        Regime::Finite { size } => (size as f64).ln(),
    };
    Ok((l_star * complexity).sqrt() + complexity)
}

/// The optimistic bound obtained by feeding the chaining constant into the
/// `L*` conversion.
pub fn theorem3_optimistic_bound_with_constants(spec: &RateSpec, l_star: f64) -> Result<f64> {
    let (regime, n) = spec.checked()?;
    optimistic_conversion(optimistic_u1(regime, n, spec.bound_b), 0.0, l_star)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesovRegime {
    /// `e` in the unnormalized rate `O(n^e)`.
    pub exponent: f64,
    pub smooth: bool,
}

/// Rate regime of a Besov ball, without checking the embedding condition.
pub fn besov_regime(s: f64, d: usize, p_besov: f64) -> Result<BesovRegime> {
    if !(s > 0.0) || d == 0 || !(p_besov >= 1.0) {
        return Err(Error::range("Besov parameters need s > 0, d ≥ 1 and p ≥ 1"));
    }
    let d = d as f64;
    let smooth = s >= d / 2.0 || p_besov > 1.0 + d / (2.0 * s);
    let exponent = if smooth {
        2.0 * s / (2.0 * s + d)
    } else {
        1.0 - 1.0 / p_besov
    };
    Ok(BesovRegime { exponent, smooth })
}

/// [`besov_regime`] for balls embedded in bounded functions, `s > d/p`.
pub fn besov_rate(s: f64, d: usize, p_besov: f64) -> Result<BesovRegime> {
    if !(s > d as f64 / p_besov) {
        return Err(Error::precondition(format!(
            "Besov smoothness s = {s} must exceed d/p = {}",
            d as f64 / p_besov
        )));
    }
    besov_regime(s, d, p_besov)
}

/// `s log(eM/s) + s log(1/β)`, the log cover size of `s`-sparse linear
/// predictors over a dictionary of size `M`.
pub fn sparse_class_entropy_bound(m: f64, s: usize, beta: f64) -> Result<f64> {
    let sf = s as f64;
    if s == 0 || sf > m {
        return Err(Error::range(format!(
            "need 1 ≤ s ≤ M, got s = {s}, M = {m}"
        )));
    }
    if !(beta > 0.0) {
        return Err(Error::range(format!("beta must be positive, got {beta}")));
    }
    Ok(sf * (std::f64::consts::E * m / sf).ln() + sf * (1.0 / beta).ln())
}
