//! Offset sequential Rademacher complexity of a finite class,
//!
//! ```text
//! E_ε max_f Σ_t [ 4B ε_t (f(x_t(ε)) - μ_t(ε)) - (f(x_t(ε)) - μ_t(ε))² ],
//! ```
//!
//! by exact path enumeration or seeded Monte Carlo, and its supremum over
//! small trees.

use rand::Rng;

use crate::class::FunctionClass;
use crate::error::{Error, Result};
use crate::exec::{stream_rng, Execution};
use crate::tree::{path_nodes, path_sign, CovariateTree, LabeledTree, RealTree};

pub const MAX_EXACT_DEPTH: usize = 20;
pub const MAX_SUP_DEPTH: usize = 4;
/// Samples (or enumerated paths) per work item. Work items are the unit of
/// seeding and of ordered reduction.
pub const MC_CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    Exact,
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    /// Zero for exact enumeration, NaN for a single Monte-Carlo sample.
    pub stderr: f64,
    pub exact: bool,
}

impl Estimate {
    pub fn mode(&self) -> &'static str {
        if self.exact {
            "exact"
        } else {
            "monte_carlo"
        }
    }
}

fn check_inputs(
    class: &FunctionClass,
    x_tree: &CovariateTree,
    mu_tree: &RealTree,
    bound_b: f64,
) -> Result<()> {
    if class.is_empty() {
        return Err(Error::EmptyClass);
    }
    if mu_tree.depth() != x_tree.depth() {
        return Err(Error::Shape {
            expected: x_tree.depth(),
            got: mu_tree.depth(),
        });
    }
    if !(bound_b > 0.0) {
        return Err(Error::range(format!(
            "bound B must be positive, got {bound_b}"
        )));
    }
    for &x in x_tree.labels() {
        class.check_covariate(x)?;
    }
    Ok(())
}

fn path_value(
    class: &FunctionClass,
    x_tree: &CovariateTree,
    mu_tree: &RealTree,
    bound_b: f64,
    mask: u64,
    square_weight: f64,
) -> f64 {
    let depth = x_tree.depth();
    (0..class.len())
        .map(|f| {
            path_nodes(depth, mask)
                .enumerate()
                .map(|(t, node)| {
                    let g = class.value(f, *x_tree.node(node)) - mu_tree.node(node);
                    4.0 * bound_b * path_sign(depth, mask, t) * g - square_weight * g * g
                })
                .sum::<f64>()
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// The inner maximum along the single path `mask`.
pub fn offset_rademacher_path(
    class: &FunctionClass,
    x_tree: &CovariateTree,
    mu_tree: &RealTree,
    bound_b: f64,
    mask: u64,
) -> Result<f64> {
    check_inputs(class, x_tree, mu_tree, bound_b)?;
    Ok(path_value(class, x_tree, mu_tree, bound_b, mask, 1.0))
}

/// Running count, mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.count += 1.0;
        let delta = v - self.mean;
        self.mean += delta / self.count;
        self.m2 += delta * (v - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if other.count == 0.0 {
            return self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        Moments {
            count,
            mean: self.mean + delta * other.count / count,
            m2: self.m2 + other.m2 + delta * delta * self.count * other.count / count,
        }
    }
}

pub fn offset_rademacher(
    class: &FunctionClass,
    x_tree: &CovariateTree,
    mu_tree: &RealTree,
    bound_b: f64,
    estimator: Estimator,
    exec: Execution,
) -> Result<Estimate> {
    estimate(class, x_tree, mu_tree, bound_b, estimator, exec, 1.0)
}

fn estimate(
    class: &FunctionClass,
    x_tree: &CovariateTree,
    mu_tree: &RealTree,
    bound_b: f64,
    estimator: Estimator,
    exec: Execution,
    square_weight: f64,
) -> Result<Estimate> {
    check_inputs(class, x_tree, mu_tree, bound_b)?;
    let depth = x_tree.depth();
    let value = |mask| path_value(class, x_tree, mu_tree, bound_b, mask, square_weight);
    match estimator {
        Estimator::Exact => {
            if depth > MAX_EXACT_DEPTH {
                return Err(Error::Resource {
                    what: "exact enumeration depth".into(),
                    reached: depth,
                });
            }
            let paths = 1usize << depth;
            let sums = exec.map(paths.div_ceil(MC_CHUNK), |c| {
                (c * MC_CHUNK..((c + 1) * MC_CHUNK).min(paths))
                    .map(|mask| value(mask as u64))
                    .sum::<f64>()
            });
            Ok(Estimate {
                value: sums.iter().sum::<f64>() / paths as f64,
                stderr: 0.0,
                exact: true,
            })
        }
        Estimator::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::range(
                    "Monte-Carlo estimation needs at least one sample",
                ));
            }
            let width_mask = if depth == 64 {
                u64::MAX
            } else {
                (1u64 << depth) - 1
            };
            let chunks = exec.map(samples.div_ceil(MC_CHUNK), |c| {
                let mut rng = stream_rng(seed, c as u64);
                let mut m = Moments::default();
                for _ in c * MC_CHUNK..((c + 1) * MC_CHUNK).min(samples) {
                    m.push(value(rng.random::<u64>() & width_mask));
                }
                m
            });
            let total = chunks.into_iter().fold(Moments::default(), Moments::merge);
            let stderr = if samples > 1 {
                (total.m2 / (total.count - 1.0) / total.count).sqrt()
            } else {
                f64::NAN
            };
            Ok(Estimate {
                value: total.mean,
                stderr,
                exact: false,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OffsetSup {
    pub value: f64,
    pub x_tree: CovariateTree,
    pub mu_tree: RealTree,
}

struct SupSearch {
    /// `(covariate, μ, increments for ε = +1, increments for ε = -1)`
    moves: Vec<(usize, f64, Vec<f64>, Vec<f64>)>,
}

impl SupSearch {
    fn shifted(acc: &[f64], inc: &[f64]) -> Vec<f64> {
        acc.iter().zip(inc).map(|(a, g)| a + g).collect()
    }

    fn value_of(&self, depth: usize, acc: &[f64], m: usize) -> f64 {
        let (_, _, plus, minus) = &self.moves[m];
        0.5 * (self.best(depth - 1, &Self::shifted(acc, plus)).0
            + self.best(depth - 1, &Self::shifted(acc, minus)).0)
    }

    /// Value of the best subtree of `depth` levels given the accumulated
    /// per-member sums, and the move taken at its root.
    fn best(&self, depth: usize, acc: &[f64]) -> (f64, usize) {
        if depth == 0 {
            return (acc.iter().copied().fold(f64::NEG_INFINITY, f64::max), 0);
        }
        let mut top = (f64::NEG_INFINITY, 0);
        for m in 0..self.moves.len() {
            let v = self.value_of(depth, acc, m);
            if v > top.0 {
                top = (v, m);
            }
        }
        top
    }

    fn build(&self, depth: usize, acc: &[f64], node: usize, xs: &mut [usize], mus: &mut [f64]) {
        if depth == 0 {
            return;
        }
        let (_, m) = self.best(depth, acc);
        let (x, mu, plus, minus) = &self.moves[m];
        xs[node] = *x;
        mus[node] = *mu;
        self.build(depth - 1, &Self::shifted(acc, minus), 2 * node + 1, xs, mus);
        self.build(depth - 1, &Self::shifted(acc, plus), 2 * node + 2, xs, mus);
    }
}

/// Maximum of the exact offset complexity over every covariate tree and
/// every `μ` tree with labels in `mu_grid`, with a maximizing pair.
///
/// The outer supremum decomposes node by node: the subtrees below the two
/// children of a node are chosen independently, so the search recurses on
/// the per-member running sums instead of enumerating whole trees.
pub fn offset_rademacher_sup(
    class: &FunctionClass,
    depth: usize,
    bound_b: f64,
    mu_grid: &[f64],
    exec: Execution,
) -> Result<OffsetSup> {
    if class.is_empty() {
        return Err(Error::EmptyClass);
    }
    if depth == 0 || depth > MAX_SUP_DEPTH {
        return Err(Error::Resource {
            what: "offset supremum depth".into(),
            reached: depth,
        });
    }
    if mu_grid.is_empty() {
        return Err(Error::precondition("the mu grid is empty"));
    }
    if !(bound_b > 0.0) {
        return Err(Error::range(format!(
            "bound B must be positive, got {bound_b}"
        )));
    }
    let mut moves = Vec::new();
    for x in 0..class.domain_size() {
        for &mu in mu_grid {
            let g: Vec<f64> = class.column(x).map(|v| v - mu).collect();
            let plus = g.iter().map(|g| 4.0 * bound_b * g - g * g).collect();
            let minus = g.iter().map(|g| -4.0 * bound_b * g - g * g).collect();
            moves.push((x, mu, plus, minus));
        }
    }
    let search = SupSearch { moves };
    let zero = vec![0.0; class.len()];
    let values = exec.map(search.moves.len(), |m| search.value_of(depth, &zero, m));
    let (root, value) = values
        .iter()
        .enumerate()
        .fold(
            (0, f64::NEG_INFINITY),
            |top, (m, &v)| if v > top.1 { (m, v) } else { top },
        );
    let nodes = (1 << depth) - 1;
    let mut xs = vec![0; nodes];
    let mut mus = vec![0.0; nodes];
    let (x, mu, plus, minus) = &search.moves[root];
    xs[0] = *x;
    mus[0] = *mu;
    search.build(
        depth - 1,
        &SupSearch::shifted(&zero, minus),
        1,
        &mut xs,
        &mut mus,
    );
    search.build(
        depth - 1,
        &SupSearch::shifted(&zero, plus),
        2,
        &mut xs,
        &mut mus,
    );
    Ok(OffsetSup {
        value,
        x_tree: LabeledTree::new(depth, xs)?,
        mu_tree: LabeledTree::new(depth, mus)?,
    })
}

/// `min(B²/(2C), A²/(2α)) · log|W|`, reading `x/0` as `+∞`. `w_size` may be
/// any real `≥ 1`.
pub fn finite_maximal_bound(w_size: f64, bound_b: f64, a: f64, c: f64, alpha: f64) -> Result<f64> {
    if !(w_size >= 1.0) {
        return Err(Error::range(format!(
            "|W| must be at least 1, got {w_size}"
        )));
    }
    if !(c >= 0.0) || !(alpha >= 0.0) {
        return Err(Error::range("offsets C and alpha must be nonnegative"));
    }
    if c == 0.0 && alpha == 0.0 {
        return Err(Error::precondition(
            "the bound is undefined when both offsets vanish",
        ));
    }
    let ratio = |num: f64, den: f64| if den == 0.0 { f64::INFINITY } else { num / den };
    let factor = ratio(bound_b * bound_b, 2.0 * c).min(ratio(a * a, 2.0 * alpha));
    let log_w = w_size.ln();
    Ok(if log_w == 0.0 { 0.0 } else { factor * log_w })
}
