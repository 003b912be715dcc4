//! The online regression game and its regret accounting.
//!
//! On round `t` the environment reveals a covariate `x_t`, the forecaster
//! predicts `ŷ_t ∈ [-B, B]`, and the environment then reveals
//! `y_t ∈ [-B, B]`, having seen everything up to and including `ŷ_t`.
//! All regret quantities here are unnormalized sums over rounds; callers
//! divide by `n` when comparing against normalized rates.

use std::io::Write;

use crate::class::FunctionClass;
use crate::error::{Error, Result};
use crate::report::{fmt_real, write_table};

/// Slack allowed when checking that values stay inside `[-B, B]`.
const RANGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Round {
    pub x: usize,
    pub y_hat: f64,
    pub y: f64,
}

impl Round {
    pub fn loss(&self) -> f64 {
        (self.y_hat - self.y).powi(2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub rounds: Vec<Round>,
    pub bound_b: f64,
    pub horizon_n: usize,
}

impl Transcript {
    pub fn new(bound_b: f64, horizon_n: usize) -> Self {
        Self {
            rounds: Vec::with_capacity(horizon_n),
            bound_b,
            horizon_n,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.rounds.len() == self.horizon_n
    }

    /// `Σ_t (ŷ_t - y_t)²`.
    pub fn forecaster_loss(&self) -> f64 {
        self.rounds.iter().map(Round::loss).sum()
    }

    /// Per-round CSV: `t,x,y_hat,y,loss_forecaster,loss_best_cumulative`.
    ///
    /// `loss_forecaster` is the forecaster's loss on round `t` and
    /// `loss_best_cumulative` the comparator's best cumulative loss over
    /// rounds `1..=t`.
    pub fn write_csv<W: Write>(&self, comparator: &dyn Comparator, out: W) -> Result<()> {
        let mut rows = Vec::with_capacity(self.rounds.len());
        for (i, r) in self.rounds.iter().enumerate() {
            let best = comparator.best_loss(&self.rounds[..=i])?;
            rows.push(vec![
                (i + 1).to_string(),
                r.x.to_string(),
                fmt_real(r.y_hat),
                fmt_real(r.y),
                fmt_real(r.loss()),
                fmt_real(best),
            ]);
        }
        write_table(
            out,
            &[
                "t",
                "x",
                "y_hat",
                "y",
                "loss_forecaster",
                "loss_best_cumulative",
            ],
            &rows,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GameConfig {
    pub horizon_n: usize,
    pub bound_b: f64,
    pub alpha: f64,
    pub seed: u64,
}

impl GameConfig {
    pub fn new(horizon_n: usize, bound_b: f64, alpha: f64, seed: u64) -> Result<Self> {
        if !(bound_b > 0.0 && bound_b.is_finite()) {
            return Err(Error::range(format!(
                "bound B must be positive, got {bound_b}"
            )));
        }
        check_alpha(alpha)?;
        Ok(Self {
            horizon_n,
            bound_b,
            alpha,
            seed,
        })
    }
}

/// The learner. `predict` must not change state; `observe` is the only
/// mutator and is called once per round after `y_t` is revealed.
pub trait Forecaster {
    fn predict(&self, x: usize) -> Result<f64>;
    fn observe(&mut self, x: usize, y: f64) -> Result<()>;
    fn bound(&self) -> f64;
    fn domain_size(&self) -> usize;
}

/// Nature. Sees the full history and the current prediction before
/// choosing `y_t`. Emitted responses must already lie in `[-B, B]`.
pub trait Environment {
    fn reset(&mut self, seed: u64);
    fn next_x(&mut self, history: &[Round]) -> Result<usize>;
    fn next_y(&mut self, history: &[Round], x: usize, y_hat: f64) -> Result<f64>;
    fn bound(&self) -> f64;
    fn domain_size(&self) -> usize;
}

/// Benchmark side of a regret: the smallest cumulative loss achievable
/// by the comparator family on the given rounds.
pub trait Comparator {
    fn best_loss(&self, rounds: &[Round]) -> Result<f64>;
}

impl Comparator for FunctionClass {
    fn best_loss(&self, rounds: &[Round]) -> Result<f64> {
        best_member(self, rounds).map(|(_, loss)| loss)
    }
}

/// Plays `config.horizon_n` rounds. The environment is reset with
/// `config.seed` first, so a fresh forecaster and the same config always
/// yield the same transcript.
pub fn run_game(
    forecaster: &mut dyn Forecaster,
    environment: &mut dyn Environment,
    config: &GameConfig,
) -> Result<Transcript> {
    let b = config.bound_b;
    if forecaster.domain_size() != environment.domain_size() {
        return Err(Error::precondition(format!(
            "forecaster domain {} differs from environment domain {}",
            forecaster.domain_size(),
            environment.domain_size()
        )));
    }
    for (who, bound) in [
        ("forecaster", forecaster.bound()),
        ("environment", environment.bound()),
    ] {
        if (bound - b).abs() > RANGE_TOL * b.max(1.0) {
            return Err(Error::precondition(format!(
                "{who} uses B = {bound}, game uses B = {b}"
            )));
        }
    }
    environment.reset(config.seed);
    let mut transcript = Transcript::new(b, config.horizon_n);
    for _ in 0..config.horizon_n {
        let x = environment.next_x(&transcript.rounds)?;
        if x >= environment.domain_size() {
            return Err(Error::UnknownCovariate(x));
        }
        let y_hat = forecaster.predict(x)?;
        if !(y_hat.abs() <= b + RANGE_TOL) {
            return Err(Error::range(format!(
                "prediction {y_hat} outside [-{b}, {b}]"
            )));
        }
        let y = environment.next_y(&transcript.rounds, x, y_hat)?;
        if !(y.abs() <= b + RANGE_TOL) {
            return Err(Error::range(format!("response {y} outside [-{b}, {b}]")));
        }
        forecaster.observe(x, y)?;
        transcript.rounds.push(Round { x, y_hat, y });
    }
    Ok(transcript)
}

/// Index and cumulative loss of the best member on `rounds`; ties go to
/// the lowest index.
pub fn best_member(class: &FunctionClass, rounds: &[Round]) -> Result<(usize, f64)> {
    if class.is_empty() {
        return Err(Error::EmptyClass);
    }
    for r in rounds {
        class.check_covariate(r.x)?;
    }
    let mut best = (0, f64::INFINITY);
    for (i, row) in class.rows().iter().enumerate() {
        let loss: f64 = rounds.iter().map(|r| (row[r.x] - r.y).powi(2)).sum();
        if loss < best.1 {
            best = (i, loss);
        }
    }
    Ok(best)
}

/// `L* = min_f Σ_t (f(x_t) - y_t)²`.
pub fn cumulative_best_loss(transcript: &Transcript, class: &FunctionClass) -> Result<f64> {
    best_member(class, &transcript.rounds).map(|(_, loss)| loss)
}

/// `Σ_t (ŷ_t - y_t)² - L*`.
pub fn regret(transcript: &Transcript, comparator: &dyn Comparator) -> Result<f64> {
    Ok(transcript.forecaster_loss() - comparator.best_loss(&transcript.rounds)?)
}

/// `(1 - α) Σ_t (ŷ_t - y_t)² - L*` for `α ∈ [0, 1)`.
pub fn alpha_regret(
    transcript: &Transcript,
    comparator: &dyn Comparator,
    alpha: f64,
) -> Result<f64> {
    check_alpha(alpha)?;
    Ok((1.0 - alpha) * transcript.forecaster_loss() - comparator.best_loss(&transcript.rounds)?)
}

/// Converts an `α`-regret bound of the form `U1/α + U2` into a bound on
/// plain regret: `4 sqrt(L* U1) + 12 U1 + 4 U2`.
pub fn optimistic_conversion(u1: f64, u2: f64, l_star: f64) -> Result<f64> {
    for (name, v) in [("U1", u1), ("U2", u2), ("L*", l_star)] {
        if !(v >= 0.0) {
            return Err(Error::range(format!("{name} must be nonnegative, got {v}")));
        }
    }
    Ok(4.0 * (l_star * u1).sqrt() + 12.0 * u1 + 4.0 * u2)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::range(format!(
            "alpha must lie in [0, 1), got {alpha}"
        )))
    }
}
