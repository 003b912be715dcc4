//! Environments: an i.i.d. sanity generator and the lower-bound adversaries
//! built from shattered trees.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::class::FunctionClass;
use crate::complexity::is_beta_shattered;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::protocol::{regret, run_game, Comparator, Environment, Forecaster, GameConfig, Round};
use crate::tree::{CovariateTree, RealTree};

fn fair_sign(rng: &mut ChaCha8Rng) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}

/// `y = μ + (B/2) ε` on a certified `β`-shattered tree: `x_t` follows the
/// path of the signs drawn so far and `ε_t` is a fresh fair sign.
///
/// Responses are clamped to `[-B, B]`, which only matters when a witness
/// exceeds `B/2` in magnitude; [`ShatteringAdversary::clamped`] counts
/// those rounds.
#[derive(Debug, Clone)]
pub struct ShatteringAdversary {
    x_tree: CovariateTree,
    witness: RealTree,
    beta: f64,
    bound_b: f64,
    domain_size: usize,
    rng: ChaCha8Rng,
    node: usize,
    round: usize,
    clamped: usize,
}

impl ShatteringAdversary {
    /// Fails unless `(x_tree, witness)` is `β`-shattered by `class`.
    pub fn new(
        x_tree: CovariateTree,
        witness: RealTree,
        class: &FunctionClass,
        beta: f64,
        bound_b: f64,
    ) -> Result<Self> {
        if !(bound_b > 0.0) {
            return Err(Error::range(format!(
                "bound B must be positive, got {bound_b}"
            )));
        }
        if !is_beta_shattered(&x_tree, &witness, class, beta)? {
            return Err(Error::precondition(format!(
                "the tree is not {beta}-shattered by the class"
            )));
        }
        Ok(Self {
            x_tree,
            witness,
            beta,
            bound_b,
            domain_size: class.domain_size(),
            rng: ChaCha8Rng::seed_from_u64(0),
            node: 0,
            round: 0,
            clamped: 0,
        })
    }

    pub fn depth(&self) -> usize {
        self.x_tree.depth()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn clamped(&self) -> usize {
        self.clamped
    }

    fn response(&mut self, mu: f64, eps: f64) -> f64 {
        let raw = mu + 0.5 * self.bound_b * eps;
        let y = raw.clamp(-self.bound_b, self.bound_b);
        if y != raw {
            self.clamped += 1;
        }
        y
    }

    fn check_round(&self, horizon: usize) -> Result<()> {
        if self.round >= horizon {
            return Err(Error::Resource {
                what: "adversary rounds".into(),
                reached: self.round + 1,
            });
        }
        Ok(())
    }
}

impl Environment for ShatteringAdversary {
    fn reset(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.node = 0;
        self.round = 0;
        self.clamped = 0;
    }

    fn next_x(&mut self, _history: &[Round]) -> Result<usize> {
        self.check_round(self.depth())?;
        Ok(*self.x_tree.node(self.node))
    }

    fn next_y(&mut self, _history: &[Round], _x: usize, _y_hat: f64) -> Result<f64> {
        self.check_round(self.depth())?;
        let eps = fair_sign(&mut self.rng);
        let y = self.response(*self.witness.node(self.node), eps);
        self.node = 2 * self.node + if eps > 0.0 { 2 } else { 1 };
        self.round += 1;
        Ok(y)
    }

    fn bound(&self) -> f64 {
        self.bound_b
    }

    fn domain_size(&self) -> usize {
        self.domain_size
    }
}

/// Stretches a shattering adversary over `k · depth` rounds: level `i` of
/// the tree is played for the `k` rounds of block `i`, and the path moves
/// on by the majority sign of that block (ties go to `+1`). All `k` signs
/// of a block are drawn when the block starts and revealed one per round.
#[derive(Debug, Clone)]
pub struct BlockAdversary {
    base: ShatteringAdversary,
    k: usize,
    block_signs: Vec<f64>,
}

impl BlockAdversary {
    pub fn new(base: ShatteringAdversary, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::range("block size k must be at least 1"));
        }
        Ok(Self {
            base,
            k,
            block_signs: Vec::new(),
        })
    }

    /// `k = ⌈n / depth⌉`, the block size stretching the tree over `n` rounds.
    pub fn for_horizon(base: ShatteringAdversary, n: usize) -> Result<Self> {
        let k = n.div_ceil(base.depth()).max(1);
        Self::new(base, k)
    }

    pub fn block_size(&self) -> usize {
        self.k
    }

    /// `k · depth`
    pub fn effective_horizon(&self) -> usize {
        self.k * self.base.depth()
    }

    pub fn clamped(&self) -> usize {
        self.base.clamped
    }
}

/// `sign(Σ signs)` with `sign(0) = +1`.
pub fn majority(signs: &[f64]) -> f64 {
    if signs.iter().sum::<f64>() >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

impl Environment for BlockAdversary {
    fn reset(&mut self, seed: u64) {
        self.base.reset(seed);
        self.block_signs.clear();
    }

    fn next_x(&mut self, _history: &[Round]) -> Result<usize> {
        self.base.check_round(self.effective_horizon())?;
        if self.base.round % self.k == 0 {
            let rng = &mut self.base.rng;
            self.block_signs = (0..self.k).map(|_| fair_sign(rng)).collect();
        }
        Ok(*self.base.x_tree.node(self.base.node))
    }

    fn next_y(&mut self, _history: &[Round], _x: usize, _y_hat: f64) -> Result<f64> {
        self.base.check_round(self.effective_horizon())?;
        let within = self.base.round % self.k;
        if self.block_signs.len() != self.k {
            return Err(Error::precondition("next_y called before next_x"));
        }
        let eps = self.block_signs[within];
        let y = self
            .base
            .response(*self.base.witness.node(self.base.node), eps);
        self.base.round += 1;
        if within + 1 == self.k {
            let step = majority(&self.block_signs);
            self.base.node = 2 * self.base.node + if step > 0.0 { 2 } else { 1 };
        }
        Ok(y)
    }

    fn bound(&self) -> f64 {
        self.base.bound_b
    }

    fn domain_size(&self) -> usize {
        self.base.domain_size
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LowerRegime {
    /// Entropy exponent above 2.
    Large,
    /// Entropy exponent at most 2.
    Small,
}

/// Unnormalized minimax lower bound: `nβ` when `p > 2` (played on a tree of
/// depth `n`), `(1/4)(2√2 β √(n·fat) - nβ²)` when `p ≤ 2`.
pub fn lower_bound_value(beta: f64, n: usize, fat: usize, regime: LowerRegime) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::range(format!("beta must be positive, got {beta}")));
    }
    let nf = n as f64;
    match regime {
        LowerRegime::Large => Ok(nf * beta),
        LowerRegime::Small => {
            if fat > n {
                return Err(Error::precondition(format!("fat = {fat} exceeds n = {n}")));
            }
            Ok(0.25
                * (2.0 * std::f64::consts::SQRT_2 * beta * (nf * fat as f64).sqrt()
                    - nf * beta * beta))
        }
    }
}

/// Covariates uniform over the domain, `y = f*(x) + N(0, σ²)` clamped to
/// `[-B, B]`.
#[derive(Debug, Clone)]
pub struct StochasticEnvironment {
    f_star: Vec<f64>,
    noise: Option<Normal<f64>>,
    bound_b: f64,
    rng: ChaCha8Rng,
    truncations: usize,
}

/// Builds the i.i.d. environment around `f_star`, given by its value at each
/// covariate.
pub fn stochastic_environment(
    f_star: Vec<f64>,
    noise_sd: f64,
    bound_b: f64,
) -> Result<StochasticEnvironment> {
    if !(bound_b > 0.0) {
        return Err(Error::range(format!(
            "bound B must be positive, got {bound_b}"
        )));
    }
    if f_star.is_empty() {
        return Err(Error::precondition("f* needs at least one covariate"));
    }
    if let Some(v) = f_star.iter().find(|v| !(v.abs() <= bound_b)) {
        return Err(Error::range(format!(
            "f* value {v} outside [-{bound_b}, {bound_b}]"
        )));
    }
    let noise = match noise_sd {
        sd if sd == 0.0 => None,
        sd if sd > 0.0 && sd.is_finite() => {
            Some(Normal::new(0.0, sd).map_err(|e| Error::range(e.to_string()))?)
        }
        sd => {
            return Err(Error::range(format!(
                "noise sd must be nonnegative, got {sd}"
            )))
        }
    };
    Ok(StochasticEnvironment {
        f_star,
        noise,
        bound_b,
        rng: ChaCha8Rng::seed_from_u64(0),
        truncations: 0,
    })
}

impl StochasticEnvironment {
    /// Responses clamped since the last reset.
    pub fn truncations(&self) -> usize {
        self.truncations
    }
}

impl Environment for StochasticEnvironment {
    fn reset(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.truncations = 0;
    }

    fn next_x(&mut self, _history: &[Round]) -> Result<usize> {
        Ok(self.rng.random_range(0..self.f_star.len()))
    }

    fn next_y(&mut self, _history: &[Round], x: usize, _y_hat: f64) -> Result<f64> {
        let mean = *self.f_star.get(x).ok_or(Error::UnknownCovariate(x))?;
        let raw = match &self.noise {
            Some(n) => mean + n.sample(&mut self.rng),
            None => mean,
        };
        let y = raw.clamp(-self.bound_b, self.bound_b);
        if y != raw {
            self.truncations += 1;
        }
        Ok(y)
    }

    fn bound(&self) -> f64 {
        self.bound_b
    }

    fn domain_size(&self) -> usize {
        self.f_star.len()
    }
}

/// Regret of `episodes` independent games. Episode `i` is played with seed
/// `config.seed + i` on a forecaster and environment freshly built by
/// `setup`; results come back in episode order.
pub fn episode_regrets<S>(
    episodes: usize,
    config: &GameConfig,
    exec: Execution,
    setup: S,
) -> Result<Vec<f64>>
where
    S: Fn(
            u64,
        ) -> Result<(
            Box<dyn Forecaster>,
            Box<dyn Environment>,
            Box<dyn Comparator>,
        )> + Sync,
{
    exec.map(episodes, |i| {
        let seed = config.seed.wrapping_add(i as u64);
        let (mut forecaster, mut environment, comparator) = setup(seed)?;
        let transcript = run_game(
            forecaster.as_mut(),
            environment.as_mut(),
            &GameConfig { seed, ..*config },
        )?;
        regret(&transcript, comparator.as_ref())
    })
    .into_iter()
    .collect()
}

/// Sample mean and its standard error.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
