//! Clipped Vovk-Azoury-Warmuth forecaster for online linear regression.
//!
//! The relaxation is
//!
//! ```text
//! Rel(x_{1:t}, y_{1:t}) = ‖Σ_{j≤t} y_j x_j‖²_{G_t⁻¹} - Σ_{j≤t} y_j² + 4B² log((n/d)^d / det G_t),
//! G_t = Σ_{j≤t} x_j x_jᵀ + λI,
//! ```
//!
//! and its difference forecast reduces to
//! `Clip(x_tᵀ G_t⁻¹ Σ_{j<t} y_j x_j)`: the Gram matrix already contains the
//! current covariate while the moment vector does not. The construction
//! that appends a zero coordinate to each covariate is not needed here,
//! because that coordinate never reaches the prediction or the relaxation.
//! The classical, unclipped forecaster is recovered by skipping the final
//! clip.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::{clip, Relaxation, RelaxationValue};
use crate::class::FunctionClass;
use crate::error::{Error, Result};
use crate::protocol::{Comparator, Forecaster, Round};

/// Largest Gram condition number accepted before a solve.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolveMode {
    /// Dense symmetric solve every round.
    #[default]
    Dense,
    /// Maintain `G⁻¹` with rank-one Sherman–Morrison updates.
    ShermanMorrison,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VawState {
    pub gram: DMatrix<f64>,
    pub moment: DVector<f64>,
    pub lambda: f64,
    pub bound_b: f64,
    pub rounds: usize,
    inverse: Option<DMatrix<f64>>,
}

impl VawState {
    pub fn new(dim: usize, lambda: f64, bound_b: f64, mode: SolveMode) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::range(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        if !(bound_b > 0.0) {
            return Err(Error::range(format!(
                "bound B must be positive, got {bound_b}"
            )));
        }
        let inverse = match mode {
            SolveMode::Dense => None,
            SolveMode::ShermanMorrison => Some(DMatrix::identity(dim, dim) / lambda),
        };
        Ok(Self {
            gram: DMatrix::identity(dim, dim) * lambda,
            moment: DVector::zeros(dim),
            lambda,
            bound_b,
            rounds: 0,
            inverse,
        })
    }

    pub fn dim(&self) -> usize {
        self.moment.len()
    }

    fn check_dim(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() == self.dim() {
            Ok(())
        } else {
            Err(Error::Shape {
                expected: self.dim(),
                got: x.len(),
            })
        }
    }

    /// Adds `x xᵀ` to the Gram matrix. Called at prediction time of the
    /// round in which `x` is revealed, before the response is known.
    pub fn absorb_covariate(&mut self, x: &DVector<f64>) -> Result<()> {
        self.check_dim(x)?;
        self.gram.ger(1.0, x, x, 1.0);
        if let Some(inv) = self.inverse.as_mut() {
            let u = &*inv * x;
            let denom = 1.0 + x.dot(&u);
            inv.ger(-1.0 / denom, &u, &u, 1.0);
        }
        Ok(())
    }

    /// `G⁻¹ v`, guarded by the condition number of `G`.
    fn solve(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        if let Some(inv) = &self.inverse {
            return Ok(inv * v);
        }
        solve_spd(&self.gram, v)
    }
}

fn solve_spd(gram: &DMatrix<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
    let eigen = gram.clone().symmetric_eigen();
    let (lo, hi) = eigen
        .eigenvalues
        .iter()
        .fold((f64::INFINITY, 0f64), |(lo, hi), &e| {
            (lo.min(e), hi.max(e.abs()))
        });
    if !(lo > 0.0) || hi / lo > MAX_CONDITION {
        return Err(Error::Numerical(format!(
            "Gram matrix condition number {:.3e} exceeds {MAX_CONDITION:e}",
            hi / lo
        )));
    }
    let chol = gram
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("Gram matrix is not positive definite".into()))?;
    Ok(chol.solve(v))
}

fn log_det_spd(gram: &DMatrix<f64>) -> Result<f64> {
    let chol = gram
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("Gram matrix is not positive definite".into()))?;
    Ok(2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

/// `Clip(xᵀ G⁻¹ m)` where `G` must already include `x xᵀ`.
pub fn vaw_predict(state: &VawState, x: &DVector<f64>) -> Result<f64> {
    state.check_dim(x)?;
    let raw = x.dot(&state.solve(&state.moment)?);
    clip(raw, state.bound_b)
}

/// Adds `y x` to the moment vector once the response is revealed.
pub fn vaw_observe(state: &mut VawState, x: &DVector<f64>, y: f64) -> Result<()> {
    state.check_dim(x)?;
    if !(y.abs() <= state.bound_b) {
        return Err(Error::range(format!(
            "response {y} outside [-{b}, {b}]",
            b = state.bound_b
        )));
    }
    state.moment.axpy(y, x, 1.0);
    state.rounds += 1;
    Ok(())
}

/// `(λ/2)‖f‖² + 4 d B² log(n / (λ d))`, the log floored at zero.
pub fn vaw_regret_bound(n: usize, d: usize, lambda: f64, bound_b: f64, f_norm_sq: f64) -> f64 {
    let log_term = (n as f64 / (lambda * d as f64)).ln().max(0.0);
    0.5 * lambda * f_norm_sq + 4.0 * d as f64 * bound_b * bound_b * log_term
}

/// Covariate table shared by the linear forecaster, relaxation and
/// comparator: covariate id `i` stands for the vector `features[i]`.
pub type Features = Arc<Vec<DVector<f64>>>;

/// Feature table whose covariate `x` maps to `(f_1(x), …, f_k(x)) / sqrt(k)`,
/// so linear predictors aggregate the members of `class` and `‖x‖ ≤ 1`.
pub fn class_features(class: &FunctionClass) -> Features {
    let scale = 1.0 / (class.len().max(1) as f64).sqrt();
    Arc::new(
        (0..class.domain_size())
            .map(|x| DVector::from_iterator(class.len(), class.column(x)) * scale)
            .collect(),
    )
}

/// `count` covariates drawn uniformly from the cube and pulled into the
/// unit ball.
pub fn unit_ball_features<R: Rng + ?Sized>(rng: &mut R, count: usize, dim: usize) -> Features {
    Arc::new(
        (0..count)
            .map(|_| {
                let v = DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0));
                let norm = v.norm();
                if norm > 1.0 {
                    v / norm
                } else {
                    v
                }
            })
            .collect(),
    )
}

fn feature(features: &Features, x: usize) -> Result<&DVector<f64>> {
    features.get(x).ok_or(Error::UnknownCovariate(x))
}

#[derive(Debug, Clone)]
pub struct VawForecaster {
    features: Features,
    state: VawState,
}

impl VawForecaster {
    pub fn new(features: Features, lambda: f64, bound_b: f64, mode: SolveMode) -> Result<Self> {
        let dim = features.first().map_or(0, |v| v.len());
        if let Some(bad) = features.iter().find(|v| v.len() != dim) {
            return Err(Error::Shape {
                expected: dim,
                got: bad.len(),
            });
        }
        Ok(Self {
            features,
            state: VawState::new(dim, lambda, bound_b, mode)?,
        })
    }

    pub fn state(&self) -> &VawState {
        &self.state
    }
}

impl Forecaster for VawForecaster {
    fn predict(&self, x: usize) -> Result<f64> {
        let v = feature(&self.features, x)?;
        let mut next = self.state.clone();
        next.absorb_covariate(v)?;
        vaw_predict(&next, v)
    }

    fn observe(&mut self, x: usize, y: f64) -> Result<()> {
        let v = feature(&self.features, x)?;
        self.state.absorb_covariate(v)?;
        vaw_observe(&mut self.state, v, y)
    }

    fn bound(&self) -> f64 {
        self.state.bound_b
    }

    fn domain_size(&self) -> usize {
        self.features.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VawRelaxationState {
    pub gram: DMatrix<f64>,
    pub moment: DVector<f64>,
    pub sum_y_sq: f64,
    pub rounds: usize,
}

#[derive(Debug, Clone)]
pub struct VawRelaxation {
    features: Features,
    lambda: f64,
    bound_b: f64,
    horizon_n: usize,
}

impl VawRelaxation {
    pub fn new(features: Features, lambda: f64, bound_b: f64, horizon_n: usize) -> Result<Self> {
        if !(lambda > 0.0) || !(bound_b > 0.0) || horizon_n == 0 {
            return Err(Error::range(
                "VAW relaxation needs lambda > 0, B > 0 and n ≥ 1",
            ));
        }
        Ok(Self {
            features,
            lambda,
            bound_b,
            horizon_n,
        })
    }

    fn dim(&self) -> usize {
        self.features.first().map_or(0, |v| v.len())
    }
}

impl Relaxation for VawRelaxation {
    type State = VawRelaxationState;

    fn bound(&self) -> f64 {
        self.bound_b
    }

    fn domain_size(&self) -> usize {
        self.features.len()
    }

    fn initial(&self) -> Self::State {
        let d = self.dim();
        VawRelaxationState {
            gram: DMatrix::identity(d, d) * self.lambda,
            moment: DVector::zeros(d),
            sum_y_sq: 0.0,
            rounds: 0,
        }
    }

    fn advance(&self, state: &Self::State, x: usize, y: f64) -> Result<Self::State> {
        let v = feature(&self.features, x)?;
        if v.len() != state.moment.len() {
            return Err(Error::Shape {
                expected: state.moment.len(),
                got: v.len(),
            });
        }
        let mut next = state.clone();
        next.gram.ger(1.0, v, v, 1.0);
        next.moment.axpy(y, v, 1.0);
        next.sum_y_sq += y * y;
        next.rounds += 1;
        Ok(next)
    }

    fn evaluate(&self, state: &Self::State) -> Result<RelaxationValue> {
        let d = state.moment.len() as f64;
        let quad = state.moment.dot(&solve_spd(&state.gram, &state.moment)?);
        let log_volume = d * (self.horizon_n as f64 / d).ln() - log_det_spd(&state.gram)?;
        let b2 = self.bound_b * self.bound_b;
        RelaxationValue::checked(quad - state.sum_y_sq + 4.0 * b2 * log_volume, state.rounds)
    }
}

/// `min_f Σ_t (fᵀx_t - y_t)² + λ‖f‖²` by the ridge closed form
/// `Σ y² - bᵀ (Σ x xᵀ + λI)⁻¹ b`.
pub fn ridge_best_loss(features: &Features, lambda: f64, rounds: &[Round]) -> Result<f64> {
    let d = features.first().map_or(0, |v| v.len());
    let mut gram = DMatrix::identity(d, d) * lambda;
    let mut moment = DVector::zeros(d);
    let mut sum_y_sq = 0.0;
    for r in rounds {
        let v = feature(features, r.x)?;
        gram.ger(1.0, v, v, 1.0);
        moment.axpy(r.y, v, 1.0);
        sum_y_sq += r.y * r.y;
    }
    Ok(sum_y_sq - moment.dot(&solve_spd(&gram, &moment)?))
}

/// Linear comparators with a ridge penalty, `f ↦ Σ (fᵀx - y)² + λ‖f‖²`.
#[derive(Debug, Clone)]
pub struct LinearRidge {
    pub features: Features,
    pub lambda: f64,
}

impl Comparator for LinearRidge {
    fn best_loss(&self, rounds: &[Round]) -> Result<f64> {
        ridge_best_loss(&self.features, self.lambda, rounds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forecasters::{admissibility_check, relaxation_predict, response_grid};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn vec(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    #[test]
    fn first_round_predicts_zero() {
        let mut s = VawState::new(2, 1.0, 1.0, SolveMode::Dense).unwrap();
        let x = vec(&[0.3, -0.4]);
        s.absorb_covariate(&x).unwrap();
        assert_eq!(vaw_predict(&s, &x).unwrap(), 0.0);
    }

    #[test]
    fn scalar_hand_computation() {
        // gram = λ + x_1² + x_2² = 3, moment = y_1 x_1 = 1, prediction 1/3.
        let mut s = VawState::new(1, 1.0, 1.0, SolveMode::Dense).unwrap();
        let x = vec(&[1.0]);
        s.absorb_covariate(&x).unwrap();
        vaw_observe(&mut s, &x, 1.0).unwrap();
        s.absorb_covariate(&x).unwrap();
        assert_abs_diff_eq!(vaw_predict(&s, &x).unwrap(), 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_moment_predicts_zero() {
        let mut s = VawState::new(3, 0.5, 2.0, SolveMode::Dense).unwrap();
        for x in [vec(&[1.0, 0.0, 0.2]), vec(&[0.1, 0.9, -0.3])] {
            s.absorb_covariate(&x).unwrap();
            vaw_observe(&mut s, &x, 0.0).unwrap();
        }
        let x = vec(&[0.5, 0.5, 0.5]);
        s.absorb_covariate(&x).unwrap();
        assert_eq!(vaw_predict(&s, &x).unwrap(), 0.0);
    }

    #[test]
    fn zero_vector_and_zero_response_are_no_ops() {
        let mut s = VawState::new(2, 1.0, 1.0, SolveMode::Dense).unwrap();
        let before = (s.gram.clone(), s.moment.clone());
        let zero = vec(&[0.0, 0.0]);
        s.absorb_covariate(&zero).unwrap();
        vaw_observe(&mut s, &zero, 0.7).unwrap();
        assert_eq!((s.gram.clone(), s.moment.clone()), before);

        let x = vec(&[0.6, 0.8]);
        vaw_observe(&mut s, &x, 0.0).unwrap();
        assert_eq!(s.moment, before.1);
    }

    #[test]
    fn gram_matches_scratch_accumulation() {
        let xs = [vec(&[0.5, -0.2]), vec(&[0.1, 0.7]), vec(&[-0.9, 0.3])];
        let ys = [0.4, -0.6, 1.0];
        let lambda = 0.8;
        let mut s = VawState::new(2, lambda, 1.0, SolveMode::Dense).unwrap();
        for (x, &y) in xs.iter().zip(&ys) {
            s.absorb_covariate(x).unwrap();
            vaw_observe(&mut s, x, y).unwrap();
        }
        for i in 0..2 {
            for j in 0..2 {
                let expected: f64 =
                    xs.iter().map(|x| x[i] * x[j]).sum::<f64>() + if i == j { lambda } else { 0.0 };
                assert_abs_diff_eq!(s.gram[(i, j)], expected, epsilon = 1e-14);
            }
            let m: f64 = xs.iter().zip(&ys).map(|(x, y)| y * x[i]).sum();
            assert_abs_diff_eq!(s.moment[i], m, epsilon = 1e-14);
        }
    }

    #[test]
    fn dimension_mismatch_is_shape_error() {
        let mut s = VawState::new(2, 1.0, 1.0, SolveMode::Dense).unwrap();
        assert!(matches!(
            vaw_observe(&mut s, &vec(&[1.0]), 0.0),
            Err(Error::Shape {
                expected: 2,
                got: 1
            })
        ));
        assert!(matches!(
            s.absorb_covariate(&vec(&[1.0, 2.0, 3.0])),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn ill_conditioned_gram_is_rejected() {
        let mut s = VawState::new(2, 1e-14, 1.0, SolveMode::Dense).unwrap();
        let x = vec(&[1.0, 0.0]);
        s.absorb_covariate(&x).unwrap();
        assert!(matches!(vaw_predict(&s, &x), Err(Error::Numerical(_))));
    }

    #[test]
    fn sherman_morrison_agrees_with_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let features = unit_ball_features(&mut rng, 30, 4);
        let mut dense = VawForecaster::new(features.clone(), 0.7, 1.0, SolveMode::Dense).unwrap();
        let mut fast = VawForecaster::new(features, 0.7, 1.0, SolveMode::ShermanMorrison).unwrap();
        for _ in 0..200 {
            let x = rng.random_range(0..30);
            let a = dense.predict(x).unwrap();
            let b = fast.predict(x).unwrap();
            assert!((a - b).abs() <= 1e-8, "{a} vs {b}");
            let y = rng.random_range(-1.0..=1.0);
            dense.observe(x, y).unwrap();
            fast.observe(x, y).unwrap();
        }
    }

    #[test]
    fn relaxation_forecast_equals_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let features = unit_ball_features(&mut rng, 10, 3);
        let rel = VawRelaxation::new(features.clone(), 1.0, 1.0, 50).unwrap();
        let mut forecaster = VawForecaster::new(features, 1.0, 1.0, SolveMode::Dense).unwrap();
        let mut state = rel.initial();
        for _ in 0..40 {
            let x = rng.random_range(0..10);
            let generic = relaxation_predict(&rel, &state, x).unwrap();
            assert_abs_diff_eq!(generic, forecaster.predict(x).unwrap(), epsilon = 1e-9);
            let y = rng.random_range(-1.0..=1.0);
            forecaster.observe(x, y).unwrap();
            state = rel.advance(&state, x, y).unwrap();
        }
    }

    #[test]
    fn relaxation_is_admissible_on_random_histories() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let features = unit_ball_features(&mut rng, 8, 2);
            let rel = VawRelaxation::new(features, 1.0, 1.0, 30).unwrap();
            let mut state = rel.initial();
            let grid = response_grid(1.0, 41);
            for _ in 0..30 {
                let xs: Vec<usize> = (0..8).collect();
                let report = admissibility_check(&rel, &state, &xs, &grid, 1e-9).unwrap();
                assert!(report.passed, "{report:?}");
                state = rel
                    .advance(&state, rng.random_range(0..8), rng.random_range(-1.0..=1.0))
                    .unwrap();
            }
        }
    }

    #[test]
    fn predictions_are_rotation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let features = unit_ball_features(&mut rng, 12, 3);
        let q = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0))
            .qr()
            .q();
        let rotated: Features = Arc::new(features.iter().map(|v| &q * v).collect());
        let mut a = VawForecaster::new(features, 0.5, 1.0, SolveMode::Dense).unwrap();
        let mut b = VawForecaster::new(rotated, 0.5, 1.0, SolveMode::Dense).unwrap();
        for _ in 0..60 {
            let x = rng.random_range(0..12);
            assert_abs_diff_eq!(
                a.predict(x).unwrap(),
                b.predict(x).unwrap(),
                epsilon = 1e-10
            );
            let y = rng.random_range(-1.0..=1.0);
            a.observe(x, y).unwrap();
            b.observe(x, y).unwrap();
        }
    }

    #[test]
    fn regret_bound_values() {
        assert_eq!(vaw_regret_bound(3, 3, 1.0, 1.0, 0.0), 0.0);
        // n = e·λd puts the log at exactly 1; n is an integer, so use λ = n/(e d).
        let lambda = 10.0 / std::f64::consts::E;
        assert_abs_diff_eq!(
            vaw_regret_bound(10, 1, lambda, 1.0, 0.0),
            4.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            vaw_regret_bound(100, 3, 1.0, 1.0, 2.0),
            1.0 + 12.0 * (100.0f64 / 3.0).ln(),
            epsilon = 1e-12
        );
        assert_eq!(vaw_regret_bound(2, 3, 1.0, 1.0, 0.0), 0.0);
    }

    #[test]
    fn class_features_stay_in_the_unit_ball() {
        let class = FunctionClass::all_signs(3).unwrap();
        let features = class_features(&class);
        assert_eq!(features.len(), 3);
        for v in features.iter() {
            assert_eq!(v.len(), 8);
            assert_abs_diff_eq!(v.norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn ridge_comparator_matches_normal_equations() {
        let features: Features = Arc::new(vec![vec(&[1.0, 0.0]), vec(&[0.0, 1.0])]);
        let rounds = [
            Round {
                x: 0,
                y_hat: 0.0,
                y: 1.0,
            },
            Round {
                x: 1,
                y_hat: 0.0,
                y: -0.5,
            },
        ];
        // Separable: min over f of (f1 - 1)² + f1² + (f2 + 0.5)² + f2² = 1/2 + 1/8.
        assert_abs_diff_eq!(
            ridge_best_loss(&features, 1.0, &rounds).unwrap(),
            0.625,
            epsilon = 1e-12
        );
    }
}
