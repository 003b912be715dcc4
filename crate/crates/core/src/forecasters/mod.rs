//! Forecasters obtained from relaxations.
//!
//! A relaxation maps the data seen so far to a real number. If it is
//! admissible (see [`admissibility_check`]) and convex in the latest
//! response, the forecaster
//!
//! ```text
//! ŷ_t = Clip( (Rel(x_{1:t}, (y_{1:t-1}, B)) - Rel(x_{1:t}, (y_{1:t-1}, -B))) / 4B )
//! ```
//!
//! has regret at most the relaxation's initial value. Two concrete
//! relaxations live in the submodules: exponential weights over a finite
//! class and the Vovk-Azoury-Warmuth forecaster for linear regression.

pub mod finite;
pub mod vaw;

use crate::error::{Error, Result};
use crate::protocol::{Forecaster, Round};

pub use finite::{
    finite_class_predict, finite_class_relaxation, FiniteClassRelaxation, FiniteClassState,
    FiniteExperts,
};
pub use vaw::{
    class_features, ridge_best_loss, unit_ball_features, vaw_observe, vaw_predict,
    vaw_regret_bound, Features, LinearRidge, SolveMode, VawForecaster, VawRelaxation, VawState,
};

/// Projection onto `[-B, B]`.
pub fn clip(v: f64, bound: f64) -> Result<f64> {
    if !(bound > 0.0) {
        return Err(Error::range(format!(
            "clip bound must be positive, got {bound}"
        )));
    }
    Ok(v.clamp(-bound, bound))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxationValue {
    pub value: f64,
    pub conditioned_rounds: usize,
}

impl RelaxationValue {
    pub(crate) fn checked(value: f64, conditioned_rounds: usize) -> Result<Self> {
        if value.is_finite() {
            Ok(Self {
                value,
                conditioned_rounds,
            })
        } else {
            Err(Error::Evaluation(format!(
                "relaxation value {value} after {conditioned_rounds} rounds"
            )))
        }
    }
}

/// A relaxation `Rel_n(x_{1:t}, y_{1:t})`, represented by a state that is
/// advanced one observed round at a time.
pub trait Relaxation {
    type State: Clone;

    fn bound(&self) -> f64;
    fn domain_size(&self) -> usize;
    fn initial(&self) -> Self::State;
    fn advance(&self, state: &Self::State, x: usize, y: f64) -> Result<Self::State>;
    fn evaluate(&self, state: &Self::State) -> Result<RelaxationValue>;

    /// Whether `(ŷ - y)² + Rel(…, y)` is convex in `y`, which lets the
    /// supremum over responses be taken at `±B` only.
    fn convex_in_response(&self) -> bool {
        true
    }
}

/// The clipped difference forecast for a relaxation convex in `y_t`.
pub fn relaxation_predict<R: Relaxation>(rel: &R, state: &R::State, x: usize) -> Result<f64> {
    let b = rel.bound();
    let up = rel.evaluate(&rel.advance(state, x, b)?)?.value;
    let down = rel.evaluate(&rel.advance(state, x, -b)?)?.value;
    clip((up - down) / (4.0 * b), b)
}

/// Forecaster driven by any relaxation through [`relaxation_predict`].
#[derive(Debug, Clone)]
pub struct RelaxationForecaster<R: Relaxation> {
    relaxation: R,
    state: R::State,
}

impl<R: Relaxation> RelaxationForecaster<R> {
    pub fn new(relaxation: R) -> Self {
        let state = relaxation.initial();
        Self { relaxation, state }
    }

    pub fn relaxation(&self) -> &R {
        &self.relaxation
    }

    pub fn state(&self) -> &R::State {
        &self.state
    }

    pub fn current_value(&self) -> Result<RelaxationValue> {
        self.relaxation.evaluate(&self.state)
    }
}

impl<R: Relaxation> Forecaster for RelaxationForecaster<R> {
    fn predict(&self, x: usize) -> Result<f64> {
        relaxation_predict(&self.relaxation, &self.state, x)
    }

    fn observe(&mut self, x: usize, y: f64) -> Result<()> {
        self.state = self.relaxation.advance(&self.state, x, y)?;
        Ok(())
    }

    fn bound(&self) -> f64 {
        self.relaxation.bound()
    }

    fn domain_size(&self) -> usize {
        self.relaxation.domain_size()
    }
}

/// Outcome of checking the admissibility inequality at one history.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    pub passed: bool,
    /// `min_x [Rel(history) - inf_ŷ sup_y {(ŷ - y)² + Rel(history, (x, y))}]`;
    /// negative values are violations.
    pub worst_slack: f64,
    pub worst_x: usize,
}

impl AdmissibilityReport {
    pub fn violation(&self) -> f64 {
        (-self.worst_slack).max(0.0)
    }
}

/// Checks, for every `x` in `x_grid`,
///
/// ```text
/// inf_{ŷ} sup_{y} { (ŷ - y)² + Rel(history, (x, y)) } ≤ Rel(history) + tol
/// ```
///
/// The infimum runs over `y_grid` together with the relaxation's own
/// forecast at `x`. The supremum runs over `{-B, B}` for relaxations convex
/// in the response and over `y_grid` otherwise.
pub fn admissibility_check<R: Relaxation>(
    rel: &R,
    history: &R::State,
    x_grid: &[usize],
    y_grid: &[f64],
    tol: f64,
) -> Result<AdmissibilityReport> {
    if x_grid.is_empty() || y_grid.is_empty() {
        return Err(Error::precondition(
            "admissibility check needs nonempty x and y grids",
        ));
    }
    let b = rel.bound();
    if let Some(y) = y_grid.iter().find(|y| !(y.abs() <= b)) {
        return Err(Error::range(format!(
            "grid response {y} outside [-{b}, {b}]"
        )));
    }
    let before = rel.evaluate(history)?.value;
    let extremes = [-b, b];
    let responses: &[f64] = if rel.convex_in_response() {
        &extremes
    } else {
        y_grid
    };

    let mut report = AdmissibilityReport {
        passed: true,
        worst_slack: f64::INFINITY,
        worst_x: x_grid[0],
    };
    for &x in x_grid {
        let after: Vec<(f64, f64)> = responses
            .iter()
            .map(|&y| Ok((y, rel.evaluate(&rel.advance(history, x, y)?)?.value)))
            .collect::<Result<_>>()?;
        let own = relaxation_predict(rel, history, x)?;
        let value = y_grid
            .iter()
            .copied()
            .chain(std::iter::once(own))
            .map(|y_hat| {
                after
                    .iter()
                    .map(|&(y, r)| (y_hat - y).powi(2) + r)
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .fold(f64::INFINITY, f64::min);
        let slack = before - value;
        if slack < report.worst_slack {
            report.worst_slack = slack;
            report.worst_x = x;
        }
    }
    report.passed = report.worst_slack >= -tol;
    Ok(report)
}

/// `n` evenly spaced responses covering `[-B, B]` including both ends.
pub fn response_grid(bound: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n)
            .map(|i| -bound + 2.0 * bound * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// One round of the relaxation ledger along a played transcript.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerEntry {
    pub before: f64,
    pub after: f64,
    pub loss: f64,
}

impl LedgerEntry {
    /// `Rel(t-1) - Rel(t) - (ŷ_t - y_t)²`, nonnegative when the round is
    /// paid for by the relaxation.
    pub fn slack(&self) -> f64 {
        self.before - self.after - self.loss
    }
}

/// Evaluates the relaxation before and after every round of `rounds`.
pub fn relaxation_ledger<R: Relaxation>(rel: &R, rounds: &[Round]) -> Result<Vec<LedgerEntry>> {
    let mut state = rel.initial();
    let mut before = rel.evaluate(&state)?.value;
    let mut ledger = Vec::with_capacity(rounds.len());
    for r in rounds {
        state = rel.advance(&state, r.x, r.y)?;
        let after = rel.evaluate(&state)?.value;
        ledger.push(LedgerEntry {
            before,
            after,
            loss: r.loss(),
        });
        before = after;
    }
    Ok(ledger)
}

/// Wraps a relaxation and lowers its value by `shift` on histories of
/// exactly `at_round` rounds. Used to exercise the admissibility checker
/// on a relaxation known to violate the recursion.
#[derive(Debug, Clone)]
pub struct ShiftedRelaxation<R> {
    pub inner: R,
    pub at_round: usize,
    pub shift: f64,
}

impl<R: Relaxation> Relaxation for ShiftedRelaxation<R> {
    type State = R::State;

    fn bound(&self) -> f64 {
        self.inner.bound()
    }

    fn domain_size(&self) -> usize {
        self.inner.domain_size()
    }

    fn initial(&self) -> Self::State {
        self.inner.initial()
    }

    fn advance(&self, state: &Self::State, x: usize, y: f64) -> Result<Self::State> {
        self.inner.advance(state, x, y)
    }

    fn evaluate(&self, state: &Self::State) -> Result<RelaxationValue> {
        let mut v = self.inner.evaluate(state)?;
        if v.conditioned_rounds == self.at_round {
            v.value -= self.shift;
        }
        Ok(v)
    }

    fn convex_in_response(&self) -> bool {
        self.inner.convex_in_response()
    }
}
