//! Entropy functions and the two chaining bounds on offset complexity.

use std::path::Path;
use std::str::FromStr;

use statrs::function::erf::erf;

use crate::error::{Error, Result};
use crate::numerics::integrate;

/// Relative tolerance of the adaptive quadrature.
pub const QUADRATURE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L2,
    LInf,
}

impl FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l2" | "L2" => Ok(Norm::L2),
            "linf" | "Linf" | "LInf" | "inf" => Ok(Norm::LInf),
            other => Err(Error::range(format!(
                "unknown norm `{other}`, expected l2 or linf"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Constant(f64),
    /// `δ^{-p}`
    Power(f64),
    /// `d log(1/δ)`, zero for `δ ≥ 1`
    ParamLog(f64),
    /// `(β, entropy)` sorted by `β`, interpolated linearly in `log β`.
    Table(Vec<(f64, f64)>),
}

/// A scale-indexed entropy `δ ↦ log N(δ)` with the norm it refers to.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyFunction {
    shape: Shape,
    norm: Norm,
}

impl EntropyFunction {
    pub fn constant(value: f64, norm: Norm) -> Result<Self> {
        if !(value >= 0.0) || !value.is_finite() {
            return Err(Error::range(format!(
                "entropy must be finite and nonnegative, got {value}"
            )));
        }
        Ok(Self {
            shape: Shape::Constant(value),
            norm,
        })
    }

    pub fn power(p: f64, norm: Norm) -> Result<Self> {
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::range(format!(
                "entropy exponent p must be positive, got {p}"
            )));
        }
        Ok(Self {
            shape: Shape::Power(p),
            norm,
        })
    }

    pub fn param_log(d: f64, norm: Norm) -> Result<Self> {
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::range(format!(
                "dimension d must be positive, got {d}"
            )));
        }
        Ok(Self {
            shape: Shape::ParamLog(d),
            norm,
        })
    }

    /// Table of `(β, entropy)` pairs; must be nonincreasing in `β`.
    pub fn table(mut points: Vec<(f64, f64)>, norm: Norm) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::precondition("entropy table is empty"));
        }
        if let Some(&(b, e)) = points
            .iter()
            .find(|(b, e)| !(*b > 0.0) || !(*e >= 0.0) || !b.is_finite() || !e.is_finite())
        {
            return Err(Error::range(format!("bad entropy table point ({b}, {e})")));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if points.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::precondition("entropy table repeats a scale"));
        }
        if points.windows(2).any(|w| w[1].1 > w[0].1) {
            return Err(Error::precondition(
                "entropy table must be nonincreasing in the scale",
            ));
        }
        Ok(Self {
            shape: Shape::Table(points),
            norm,
        })
    }

    /// Reads a `beta,entropy` CSV with a header row.
    pub fn load_table(path: &Path, norm: Norm) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)?;
        let mut points = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record?;
            let line = i + 2;
            let field = |k: usize| -> Result<f64> {
                record
                    .get(k)
                    .ok_or_else(|| Error::Parse {
                        line,
                        message: "expected two columns".into(),
                    })?
                    .parse()
                    .map_err(|e| Error::Parse {
                        line,
                        message: format!("{e}"),
                    })
            };
            points.push((field(0)?, field(1)?));
        }
        Self::table(points, norm)
    }

    /// `power:p=<v>`, `paramlog:d=<v>`, `const:v=<v>`, or a path to a table.
    pub fn parse(spec: &str, norm: Norm) -> Result<Self> {
        let arg = |prefix: &str| -> Option<Result<f64>> {
            spec.strip_prefix(prefix).map(|v| {
                v.parse()
                    .map_err(|_| Error::range(format!("bad number in entropy spec `{spec}`")))
            })
        };
        if let Some(p) = arg("power:p=") {
            Self::power(p?, norm)
        } else if let Some(d) = arg("paramlog:d=") {
            Self::param_log(d?, norm)
        } else if let Some(v) = arg("const:v=") {
            Self::constant(v?, norm)
        } else {
            Self::load_table(Path::new(spec), norm)
        }
    }

    pub fn norm(&self) -> Norm {
        self.norm
    }

    /// Entropy at scale `delta > 0`. Tables are held constant to the right
    /// of their largest scale and extrapolated along their first segment to
    /// the left of the smallest.
    pub fn eval(&self, delta: f64) -> f64 {
        match &self.shape {
            Shape::Constant(c) => *c,
            Shape::Power(p) => delta.powf(-p),
            Shape::ParamLog(d) => d * (-delta.ln()).max(0.0),
            Shape::Table(points) => {
                let last = points[points.len() - 1];
                if points.len() == 1 || delta >= last.0 {
                    return if delta >= last.0 { last.1 } else { points[0].1 };
                }
                let i = points
                    .partition_point(|(b, _)| *b <= delta)
                    .clamp(1, points.len() - 1);
                let (b0, e0) = points[i - 1];
                let (b1, e1) = points[i];
                let t = (delta.ln() - b0.ln()) / (b1.ln() - b0.ln());
                (e0 + t * (e1 - e0)).max(0.0)
            }
        }
    }

    /// `∫_ρ^γ sqrt(entropy(δ)) dδ` in closed form, when one exists.
    fn sqrt_integral_closed(&self, rho: f64, gamma: f64) -> Option<f64> {
        match self.shape {
            Shape::Constant(c) => Some(c.sqrt() * (gamma - rho)),
            Shape::Power(p) => Some(power_integral(1.0 - p / 2.0, rho, gamma)),
            Shape::ParamLog(d) => {
                let (a, b) = (rho.min(1.0), gamma.min(1.0));
                Some(
                    d.sqrt()
                        * (lower_gamma_three_halves(-a.ln()) - lower_gamma_three_halves(-b.ln())),
                )
            }
            Shape::Table(_) => None,
        }
    }

    /// `∫_ρ^γ δ entropy(δ) dδ` in closed form, when one exists.
    fn weighted_integral_closed(&self, rho: f64, gamma: f64) -> Option<f64> {
        match self.shape {
            Shape::Constant(c) => Some(0.5 * c * (gamma * gamma - rho * rho)),
            Shape::Power(p) => Some(power_integral(2.0 - p, rho, gamma)),
            Shape::ParamLog(d) => {
                let antiderivative = |x: f64| d * (-0.5 * x * x * x.ln() + 0.25 * x * x);
                let (a, b) = (rho.min(1.0), gamma.min(1.0));
                Some(antiderivative(b) - antiderivative(a))
            }
            Shape::Table(_) => None,
        }
    }
}

/// `∫_ρ^γ δ^{q-1} dδ`
fn power_integral(q: f64, rho: f64, gamma: f64) -> f64 {
    if q.abs() < 1e-12 {
        (gamma / rho).ln()
    } else {
        (gamma.powf(q) - rho.powf(q)) / q
    }
}

/// Lower incomplete gamma function at shape `3/2`.
fn lower_gamma_three_halves(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    0.5 * std::f64::consts::PI.sqrt() * erf(x.sqrt()) - x.sqrt() * (-x).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integration {
    /// Closed form when available, quadrature otherwise.
    #[default]
    Auto,
    Quadrature,
}

fn integral(
    closed: Option<f64>,
    integrand: impl Fn(f64) -> f64,
    rho: f64,
    gamma: f64,
    method: Integration,
) -> Result<f64> {
    let value = match (method, closed) {
        (Integration::Auto, Some(v)) => v,
        _ => integrate(integrand, rho, gamma, QUADRATURE_TOL)?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Evaluation(format!(
            "entropy integral over ({rho}, {gamma}) is not finite"
        )))
    }
}

fn check_grid(rho_grid: &[f64], gamma: f64) -> Result<()> {
    if rho_grid.is_empty() {
        return Err(Error::precondition("rho grid is empty"));
    }
    if let Some(rho) = rho_grid.iter().find(|&&r| !(r > 0.0 && r < gamma)) {
        return Err(Error::range(format!("rho = {rho} is outside (0, {gamma})")));
    }
    Ok(())
}

fn entropy_at(entropy: &EntropyFunction, gamma: f64) -> Result<f64> {
    let e = entropy.eval(gamma);
    if e.is_finite() {
        Ok(e)
    } else {
        Err(Error::Evaluation(format!(
            "entropy at scale {gamma} is not finite"
        )))
    }
}

/// `32B² entropy(γ) + B min_ρ [4ρn + 12 sqrt(n) ∫_ρ^γ sqrt(entropy(δ)) dδ]`
pub fn dudley_offset_bound(
    entropy: &EntropyFunction,
    gamma: f64,
    n: usize,
    bound_b: f64,
    rho_grid: &[f64],
) -> Result<f64> {
    dudley_offset_bound_with(entropy, gamma, n, bound_b, rho_grid, Integration::Auto)
}

pub fn dudley_offset_bound_with(
    entropy: &EntropyFunction,
    gamma: f64,
    n: usize,
    bound_b: f64,
    rho_grid: &[f64],
    method: Integration,
) -> Result<f64> {
    if !(bound_b > 0.0) {
        return Err(Error::range(format!(
            "bound B must be positive, got {bound_b}"
        )));
    }
    let coarse = |e: f64| 32.0 * bound_b * bound_b * e;
    // A finite class has the same entropy at every scale, so the chain can
    // stop at scale zero.
    if gamma == 0.0 {
        if let Shape::Constant(c) = entropy.shape {
            return Ok(coarse(c));
        }
    }
    if !(gamma > 0.0) {
        return Err(Error::range(format!("gamma must be positive, got {gamma}")));
    }
    check_grid(rho_grid, gamma)?;
    let n_f = n as f64;
    let mut best = f64::INFINITY;
    for &rho in rho_grid {
        let tail = integral(
            entropy.sqrt_integral_closed(rho, gamma),
            |d| entropy.eval(d).sqrt(),
            rho,
            gamma,
            method,
        )?;
        best = best.min(4.0 * rho * n_f + 12.0 * n_f.sqrt() * tail);
    }
    Ok(coarse(entropy_at(entropy, gamma)?) + bound_b * best)
}

/// `α⁻¹ 16A² entropy(γ) + α⁻¹ min_ρ [4ρn + 16 log(γ/ρ) ∫_ρ^γ δ entropy(δ) dδ]`
/// for an `ℓ∞` entropy.
pub fn dudley_offset_bound_optimistic(
    entropy: &EntropyFunction,
    gamma: f64,
    n: usize,
    alpha: f64,
    a: f64,
    rho_grid: &[f64],
) -> Result<f64> {
    dudley_optimistic_bound_with(entropy, gamma, n, alpha, a, rho_grid, Integration::Auto)
}

pub fn dudley_optimistic_bound_with(
    entropy: &EntropyFunction,
    gamma: f64,
    n: usize,
    alpha: f64,
    a: f64,
    rho_grid: &[f64],
    method: Integration,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::range(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    if entropy.norm() != Norm::LInf {
        return Err(Error::precondition(
            "the optimistic chaining bound needs an l-infinity entropy",
        ));
    }
    let coarse = |e: f64| 16.0 * a * a * e / alpha;
    if gamma == 0.0 {
        if let Shape::Constant(c) = entropy.shape {
            return Ok(coarse(c));
        }
    }
    if !(gamma > 0.0) {
        return Err(Error::range(format!("gamma must be positive, got {gamma}")));
    }
    check_grid(rho_grid, gamma)?;
    let mut best = f64::INFINITY;
    for &rho in rho_grid {
        let tail = integral(
            entropy.weighted_integral_closed(rho, gamma),
            |d| d * entropy.eval(d),
            rho,
            gamma,
            method,
        )?;
        best = best.min(4.0 * rho * n as f64 + 16.0 * (gamma / rho).ln() * tail);
    }
    Ok(coarse(entropy_at(entropy, gamma)?) + best / alpha)
}
