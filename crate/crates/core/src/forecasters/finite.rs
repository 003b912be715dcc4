//! Exponential-weights relaxation over a finite class:
//!
//! ```text
//! Rel(x_{1:t}, y_{1:t}) = c B² log Σ_f exp(-L_t(f) / (c B²)),   L_t(f) = Σ_{j≤t} (f(x_j) - y_j)²
//! ```
//!
//! with temperature multiplier `c = 1` by default. The initial value
//! `c B² log|F|` is the regret bound the relaxation certifies when it is
//! admissible. Square loss on `[-B, B]` is mixable only up to rate
//! `1/(2B²)`, so admissibility is guaranteed for `c ≥ 2`; at `c = 1` the
//! recursion can fail (see the tests below and the acceptance suite).

use std::sync::Arc;

use super::{clip, Relaxation, RelaxationValue};
use crate::class::FunctionClass;
use crate::error::{Error, Result};
use crate::numerics::log_sum_exp;
use crate::protocol::Forecaster;

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteClassState {
    pub cumulative_losses: Vec<f64>,
    pub bound_b: f64,
    pub rounds: usize,
}

impl FiniteClassState {
    pub fn new(class_size: usize, bound_b: f64) -> Self {
        Self {
            cumulative_losses: vec![0.0; class_size],
            bound_b,
            rounds: 0,
        }
    }

    pub fn record(&mut self, class: &FunctionClass, x: usize, y: f64) -> Result<()> {
        class.check_covariate(x)?;
        for (loss, f) in self.cumulative_losses.iter_mut().zip(class.column(x)) {
            *loss += (f - y).powi(2);
        }
        self.rounds += 1;
        Ok(())
    }
}

/// `B² log Σ_f exp(-B⁻² L(f))` at the unit temperature.
pub fn finite_class_relaxation(state: &FiniteClassState) -> Result<RelaxationValue> {
    scaled_value(state, 1.0)
}

fn scaled_value(state: &FiniteClassState, scale: f64) -> Result<RelaxationValue> {
    if state.cumulative_losses.is_empty() {
        return Err(Error::EmptyClass);
    }
    let eta_inv = scale * state.bound_b * state.bound_b;
    let lse = log_sum_exp(state.cumulative_losses.iter().map(|l| -l / eta_inv));
    RelaxationValue::checked(eta_inv * lse, state.rounds)
}

/// Closed form of the relaxation forecast at unit temperature:
///
/// ```text
/// Clip( (B/4) log[ Σ_f exp(-B⁻²(L(f) + (f(x) - B)²)) / Σ_f exp(-B⁻²(L(f) + (f(x) + B)²)) ] )
/// ```
pub fn finite_class_predict(
    state: &FiniteClassState,
    x: usize,
    class: &FunctionClass,
) -> Result<f64> {
    scaled_predict(state, x, class, 1.0)
}

fn scaled_predict(
    state: &FiniteClassState,
    x: usize,
    class: &FunctionClass,
    scale: f64,
) -> Result<f64> {
    class.check_covariate(x)?;
    if class.is_empty() {
        return Err(Error::EmptyClass);
    }
    let b = state.bound_b;
    let eta_inv = scale * b * b;
    let terms = |target: f64| {
        state
            .cumulative_losses
            .iter()
            .zip(class.column(x))
            .map(move |(l, f)| -(l + (f - target).powi(2)) / eta_inv)
    };
    let up = log_sum_exp(terms(b));
    let down = log_sum_exp(terms(-b));
    clip(scale * b / 4.0 * (up - down), b)
}

/// The finite-class relaxation as a [`Relaxation`].
#[derive(Debug, Clone)]
pub struct FiniteClassRelaxation {
    class: Arc<FunctionClass>,
    bound_b: f64,
    scale: f64,
}

impl FiniteClassRelaxation {
    pub fn new(class: Arc<FunctionClass>, bound_b: f64) -> Result<Self> {
        Self::with_scale(class, bound_b, 1.0)
    }

    /// Temperature `1 / (scale · B²)`; the certified bound becomes
    /// `scale · B² log|F|`.
    pub fn with_scale(class: Arc<FunctionClass>, bound_b: f64, scale: f64) -> Result<Self> {
        if class.is_empty() {
            return Err(Error::EmptyClass);
        }
        if !(bound_b > 0.0) || !(scale > 0.0) {
            return Err(Error::range(format!(
                "need B > 0 and scale > 0, got B = {bound_b}, scale = {scale}"
            )));
        }
        Ok(Self {
            class,
            bound_b,
            scale,
        })
    }

    pub fn class(&self) -> &FunctionClass {
        &self.class
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// The regret bound certified by the initial value.
    pub fn regret_bound(&self) -> f64 {
        self.scale * self.bound_b * self.bound_b * (self.class.len() as f64).ln()
    }
}

impl Relaxation for FiniteClassRelaxation {
    type State = FiniteClassState;

    fn bound(&self) -> f64 {
        self.bound_b
    }

    fn domain_size(&self) -> usize {
        self.class.domain_size()
    }

    fn initial(&self) -> Self::State {
        FiniteClassState::new(self.class.len(), self.bound_b)
    }

    fn advance(&self, state: &Self::State, x: usize, y: f64) -> Result<Self::State> {
        let mut next = state.clone();
        next.record(&self.class, x, y)?;
        Ok(next)
    }

    fn evaluate(&self, state: &Self::State) -> Result<RelaxationValue> {
        scaled_value(state, self.scale)
    }
}

/// Exponential-weights forecaster using the closed-form prediction.
#[derive(Debug, Clone)]
pub struct FiniteExperts {
    relaxation: FiniteClassRelaxation,
    state: FiniteClassState,
}

impl FiniteExperts {
    pub fn new(class: Arc<FunctionClass>, bound_b: f64) -> Result<Self> {
        Self::from_relaxation(FiniteClassRelaxation::new(class, bound_b)?)
    }

    pub fn with_scale(class: Arc<FunctionClass>, bound_b: f64, scale: f64) -> Result<Self> {
        Self::from_relaxation(FiniteClassRelaxation::with_scale(class, bound_b, scale)?)
    }

    fn from_relaxation(relaxation: FiniteClassRelaxation) -> Result<Self> {
        let state = relaxation.initial();
        Ok(Self { relaxation, state })
    }

    pub fn state(&self) -> &FiniteClassState {
        &self.state
    }

    pub fn relaxation(&self) -> &FiniteClassRelaxation {
        &self.relaxation
    }

    pub fn regret_bound(&self) -> f64 {
        self.relaxation.regret_bound()
    }
}

impl Forecaster for FiniteExperts {
    fn predict(&self, x: usize) -> Result<f64> {
        scaled_predict(
            &self.state,
            x,
            &self.relaxation.class,
            self.relaxation.scale,
        )
    }

    fn observe(&mut self, x: usize, y: f64) -> Result<()> {
        self.state.record(&self.relaxation.class, x, y)
    }

    fn bound(&self) -> f64 {
        self.relaxation.bound_b
    }

    fn domain_size(&self) -> usize {
        self.relaxation.class.domain_size()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forecasters::{admissibility_check, relaxation_predict, response_grid};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn state(losses: &[f64], b: f64) -> FiniteClassState {
        FiniteClassState {
            cumulative_losses: losses.to_vec(),
            bound_b: b,
            rounds: 0,
        }
    }

    #[test]
    fn initial_value_is_b2_log_size() {
        let v = finite_class_relaxation(&state(&[0.0; 5], 2.0)).unwrap();
        assert_abs_diff_eq!(v.value, 4.0 * 5f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn single_expert_value_is_minus_loss() {
        let v = finite_class_relaxation(&state(&[3.7], 1.5)).unwrap();
        assert_abs_diff_eq!(v.value, -3.7, epsilon = 1e-12);
    }

    #[test]
    fn three_experts_scalar_oracle() {
        // log(1 + e^-1 + e^-4) = 0.32656264126747045..., evaluated with mpmath at 30 digits.
        let v = finite_class_relaxation(&state(&[0.0, 1.0, 4.0], 1.0)).unwrap();
        assert_abs_diff_eq!(v.value, 0.326_562_641_267_470_46, epsilon = 1e-12);
    }

    #[test]
    fn huge_losses_do_not_underflow() {
        let v = finite_class_relaxation(&state(&[1e6, 1e6 + 1.0], 1.0)).unwrap();
        assert_abs_diff_eq!(v.value, -1e6 + (1.0 + (-1f64).exp()).ln(), epsilon = 1e-6);
    }

    #[test]
    fn single_expert_prediction_collapses_to_clipped_value() {
        // log-ratio: [-(f-B)² + (f+B)²] / B² = 4f/B, times B/4 gives f.
        for (f, b) in [(0.3, 1.0), (-0.9, 2.0), (1.0, 0.5)] {
            let class = FunctionClass::constants(1, &[f]).unwrap();
            let s = FiniteClassState::new(1, b);
            assert_abs_diff_eq!(
                finite_class_predict(&s, 0, &class).unwrap(),
                f.clamp(-b, b),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn antisymmetric_pair_predicts_zero() {
        let class = FunctionClass::constants(1, &[1.0, -1.0]).unwrap();
        let s = state(&[0.7, 0.7], 1.0);
        assert_abs_diff_eq!(
            finite_class_predict(&s, 0, &class).unwrap(),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn closed_form_matches_scalar_reevaluation() {
        let class =
            FunctionClass::from_rows(2, vec![vec![0.2, -0.5], vec![-0.8, 0.9], vec![0.6, 0.1]])
                .unwrap();
        let losses = [1.3, 0.4, 2.2];
        let b = 1.0;
        let s = state(&losses, b);
        // Direct evaluation of the displayed ratio without log-sum-exp.
        let num: f64 = (0..3)
            .map(|i| (-(losses[i] + (class.value(i, 1) - b).powi(2)) / (b * b)).exp())
            .sum();
        let den: f64 = (0..3)
            .map(|i| (-(losses[i] + (class.value(i, 1) + b).powi(2)) / (b * b)).exp())
            .sum();
        let expected = (b / 4.0 * (num / den).ln()).clamp(-b, b);
        assert_abs_diff_eq!(
            finite_class_predict(&s, 1, &class).unwrap(),
            expected,
            epsilon = 1e-12
        );

        let rel = FiniteClassRelaxation::new(Arc::new(class), b).unwrap();
        let generic = relaxation_predict(&rel, &s, 1).unwrap();
        assert_abs_diff_eq!(generic, expected, epsilon = 1e-12);
    }

    #[test]
    fn losses_are_nondecreasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let class = FunctionClass::random(&mut rng, 4, 3);
        let mut s = FiniteClassState::new(4, 1.0);
        for _ in 0..20 {
            let prev = s.cumulative_losses.clone();
            s.record(&class, rng.random_range(0..3), rng.random_range(-1.0..1.0))
                .unwrap();
            assert!(s
                .cumulative_losses
                .iter()
                .zip(&prev)
                .all(|(a, b)| a >= b && *a >= 0.0));
        }
    }

    #[test]
    fn unit_temperature_fails_admissibility_for_opposed_experts() {
        // Experts ±1, B = 1: any forecast loses 1 against y = -sign(ŷ) while
        // the best expert loses 0, so one round already costs more than log 2.
        let class = Arc::new(FunctionClass::constants(1, &[1.0, -1.0]).unwrap());
        let rel = FiniteClassRelaxation::new(class.clone(), 1.0).unwrap();
        let report =
            admissibility_check(&rel, &rel.initial(), &[0], &response_grid(1.0, 41), 1e-9).unwrap();
        assert!(!report.passed);
        assert!(report.worst_slack < -0.3);

        let mixable = FiniteClassRelaxation::with_scale(class, 1.0, 2.0).unwrap();
        let report = admissibility_check(
            &mixable,
            &mixable.initial(),
            &[0],
            &response_grid(1.0, 41),
            1e-9,
        )
        .unwrap();
        assert!(report.passed, "{report:?}");
    }

    #[test]
    fn double_temperature_is_admissible_on_random_histories() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let b = if rng.random_bool(0.5) { 1.0 } else { 2.0 };
            let size = rng.random_range(1..8);
            let class = Arc::new(FunctionClass::random(&mut rng, size, 3));
            let rel = FiniteClassRelaxation::with_scale(class, b, 2.0).unwrap();
            let mut s = rel.initial();
            for _ in 0..10 {
                let report =
                    admissibility_check(&rel, &s, &[0, 1, 2], &response_grid(b, 41), 1e-9).unwrap();
                assert!(report.passed, "{report:?}");
                s = rel
                    .advance(&s, rng.random_range(0..3), rng.random_range(-b..=b))
                    .unwrap();
            }
        }
    }
}
