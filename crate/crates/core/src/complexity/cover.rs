//! Sequential covers of a finite class on a covariate tree.
//!
//! A cover of size `k` assigns `k` real values at every node. Walking down a
//! path, each cover tree keeps the set of members it still approximates;
//! the search tracks these per-tree states (one column per tree), branches
//! on the values placed at the current node and memoizes on
//! `(node, sorted columns)`. Larger columns are never worse, so at each node
//! only maximal updates of a column are tried, and identical columns are
//! filled in nondecreasing option order.
//!
//! `ℓ∞` candidates are the midpoints of maximal value windows of width
//! `2β`, which makes the search exact. `ℓ2` candidates are member values and
//! pairwise midpoints; the result is exact over that grid and never exceeds
//! the `ℓ∞` size.

use std::collections::HashMap;
use std::hash::Hash;

use super::shattering::{fat_shattering_dim, FatOptions};
use super::Norm;
use crate::class::FunctionClass;
use crate::error::{Error, Result};
use crate::tree::{path_nodes, CovariateTree};

const MAX_COVER_DEPTH: usize = 12;
const MAX_EXACT_MEMBERS: usize = 64;
const TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoverMode {
    Exact,
    /// Exact over the candidate value grid.
    GridExact,
    UpperBoundOnly,
}

impl CoverMode {
    pub fn as_str(self) -> &'static str {
        match self {
            CoverMode::Exact => "exact",
            CoverMode::GridExact => "grid_exact",
            CoverMode::UpperBoundOnly => "upper_bound_only",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoverResult {
    pub size: usize,
    pub mode: CoverMode,
}

#[derive(Debug, Clone, Copy)]
pub struct CoverOptions {
    /// Search nodes expanded per cover size before giving up on exactness.
    pub node_budget: usize,
}

impl Default for CoverOptions {
    fn default() -> Self {
        Self {
            node_budget: 2_000_000,
        }
    }
}

pub fn sequential_cover_size(
    class: &FunctionClass,
    x_tree: &CovariateTree,
    beta: f64,
    norm: Norm,
) -> Result<CoverResult> {
    sequential_cover_size_with(class, x_tree, beta, norm, CoverOptions::default())
}

pub fn sequential_cover_size_with(
    class: &FunctionClass,
    x_tree: &CovariateTree,
    beta: f64,
    norm: Norm,
    options: CoverOptions,
) -> Result<CoverResult> {
    if !(beta >= 0.0) {
        return Err(Error::range(format!(
            "beta must be nonnegative, got {beta}"
        )));
    }
    let depth = x_tree.depth();
    if depth > MAX_COVER_DEPTH {
        return Err(Error::Resource {
            what: "cover tree depth".into(),
            reached: depth,
        });
    }
    for &x in x_tree.labels() {
        class.check_covariate(x)?;
    }
    let proj = Projection::new(class, x_tree);
    if proj.members() == 0 {
        return Ok(CoverResult {
            size: 0,
            mode: CoverMode::Exact,
        });
    }
    let sup_dist = |p: &[usize], f: usize, g: usize| {
        p.iter()
            .map(|&n| (proj.values[f][n] - proj.values[g][n]).abs())
            .fold(0.0, f64::max)
    };
    let linf_spans = path_spans(&proj, sup_dist);
    let linf_model = LinfModel {
        proj: &proj,
        beta,
        spans: linf_spans.as_ref(),
    };
    let linf = solve(
        &proj,
        linf_greedy(&proj, beta),
        linf_lower_bound(&proj, beta),
        CoverMode::Exact,
        |k| search(&linf_model, &proj, k, options.node_budget),
    );
    match norm {
        Norm::LInf => Ok(linf),
        Norm::L2 => {
            let upper = linf.size.min(l2_greedy(&proj, beta));
            let l2_dist = |p: &[usize], f: usize, g: usize| {
                p.iter()
                    .map(|&n| (proj.values[f][n] - proj.values[g][n]).powi(2))
                    .sum::<f64>()
                    .sqrt()
            };
            let l2_spans = path_spans(&proj, l2_dist);
            let caps = budget_caps(&proj);
            let exact = L2Model {
                proj: &proj,
                beta,
                caps: &caps,
                spans: l2_spans.as_ref(),
                rounding: Rounding::Exact,
            };
            let root = proj.depth as f64 * beta * beta;
            let l2 = solve(
                &proj,
                upper,
                l2_lower_bound(&proj, beta),
                CoverMode::GridExact,
                |k| {
                    // Coarse budget grids first: rounding up can only certify
                    // infeasibility and rounding down only feasibility.
                    for step in [8.0, 64.0, 512.0] {
                        if root == 0.0 {
                            break;
                        }
                        let q = root / step;
                        let up = L2Model {
                            rounding: Rounding::Up(q),
                            ..exact
                        };
                        if search(&up, &proj, k, options.node_budget / 4) == Some(false) {
                            return Some(false);
                        }
                        let down = L2Model {
                            rounding: Rounding::Down(q),
                            ..exact
                        };
                        if search(&down, &proj, k, options.node_budget / 4) == Some(true) {
                            return Some(true);
                        }
                    }
                    search(&exact, &proj, k, options.node_budget)
                },
            );
            Ok(match (l2.mode, linf.mode) {
                (CoverMode::UpperBoundOnly, _) => l2,
                _ => CoverResult {
                    size: l2.size,
                    mode: CoverMode::GridExact,
                },
            })
        }
    }
}

/// Distinct member evaluations on the nodes of the tree.
struct Projection {
    depth: usize,
    /// `values[f][node]`
    values: Vec<Vec<f64>>,
}

impl Projection {
    fn new(class: &FunctionClass, x_tree: &CovariateTree) -> Self {
        let mut values: Vec<Vec<f64>> = (0..class.len())
            .map(|f| x_tree.labels().iter().map(|&x| class.value(f, x)).collect())
            .collect();
        values.sort_by(|a, b| {
            a.iter()
                .zip(b)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        values.dedup();
        Self {
            depth: x_tree.depth(),
            values,
        }
    }

    fn members(&self) -> usize {
        self.values.len()
    }

    fn full_mask(&self) -> u64 {
        if self.members() == 64 {
            u64::MAX
        } else {
            (1u64 << self.members()) - 1
        }
    }

    fn max_path_sq(&self, f: usize, g: usize) -> f64 {
        (0..1u64 << self.depth)
            .map(|mask| {
                path_nodes(self.depth, mask)
                    .map(|node| (self.values[f][node] - self.values[g][node]).powi(2))
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

/// Greedy cover by member evaluation trees: repeatedly take the member whose
/// ball holds the most uncovered members.
fn greedy(members: usize, covers: impl Fn(usize, usize) -> bool) -> usize {
    let mut uncovered: Vec<bool> = vec![true; members];
    let mut count = 0;
    while uncovered.iter().any(|&u| u) {
        let best = (0..members)
            .max_by_key(|&g| {
                (0..members)
                    .filter(|&f| uncovered[f] && covers(g, f))
                    .count()
            })
            .expect("nonempty");
        for f in 0..members {
            if covers(best, f) {
                uncovered[f] = false;
            }
        }
        count += 1;
    }
    count
}

fn linf_greedy(proj: &Projection, beta: f64) -> usize {
    greedy(proj.members(), |g, f| {
        proj.values[f]
            .iter()
            .zip(&proj.values[g])
            .all(|(a, b)| (a - b).abs() <= beta + TOL)
    })
}

fn l2_greedy(proj: &Projection, beta: f64) -> usize {
    let n = proj.depth as f64;
    greedy(proj.members(), |g, f| {
        proj.max_path_sq(f, g) <= n * beta * beta + TOL
    })
}

/// Members pairwise more than `2β` apart along one path need distinct cover
/// trees, so the largest such set over all paths bounds the cover size
/// from below.
fn packing_lower_bound(proj: &Projection, far: impl Fn(&[usize], usize, usize) -> bool) -> usize {
    let m = proj.members();
    (0..1u64 << proj.depth)
        .map(|mask| {
            let nodes: Vec<usize> = path_nodes(proj.depth, mask).collect();
            let adj: Vec<u64> = (0..m)
                .map(|f| {
                    (0..m)
                        .filter(|&g| g != f && far(&nodes, f, g))
                        .fold(0u64, |a, g| a | 1 << g)
                })
                .collect();
            max_clique(&adj, proj.full_mask(), 0, 0)
        })
        .max()
        .unwrap_or(1)
        .max(1)
}

fn max_clique(adj: &[u64], candidates: u64, size: usize, best: usize) -> usize {
    if candidates == 0 {
        return size.max(best);
    }
    if size + candidates.count_ones() as usize <= best {
        return best;
    }
    let v = candidates.trailing_zeros() as usize;
    let with = max_clique(adj, candidates & adj[v], size + 1, best);
    max_clique(adj, candidates & !(1u64 << v), size, with)
}

fn linf_lower_bound(proj: &Projection, beta: f64) -> usize {
    packing_lower_bound(proj, |nodes, f, g| {
        nodes
            .iter()
            .any(|&n| (proj.values[f][n] - proj.values[g][n]).abs() > 2.0 * beta + TOL)
    })
}

fn l2_lower_bound(proj: &Projection, beta: f64) -> usize {
    let limit = 4.0 * proj.depth as f64 * beta * beta + TOL;
    packing_lower_bound(proj, |nodes, f, g| {
        nodes
            .iter()
            .map(|&n| (proj.values[f][n] - proj.values[g][n]).powi(2))
            .sum::<f64>()
            > limit
    })
}

/// Per member, the largest squared error it can still pay from `node` to a
/// leaf (`need`) and strictly below `node` (`below`). Cover values never
/// leave the range of member values, so budgets past these are as good as
/// infinite.
struct Caps {
    below: Vec<Vec<f64>>,
    need: Vec<Vec<f64>>,
}

fn budget_caps(proj: &Projection) -> Caps {
    let nodes = crate::tree::node_count(proj.depth);
    let range: Vec<(f64, f64)> = (0..nodes)
        .map(|n| {
            proj.values
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                    (lo.min(r[n]), hi.max(r[n]))
                })
        })
        .collect();
    let mut caps = Caps {
        below: Vec::new(),
        need: Vec::new(),
    };
    for row in &proj.values {
        let mut below = vec![0.0f64; nodes];
        let mut need = vec![0.0f64; nodes];
        for n in (0..nodes).rev() {
            let child = |c: usize| if c < nodes { need[c] } else { 0.0 };
            below[n] = child(2 * n + 1).max(child(2 * n + 2));
            need[n] = below[n] + (row[n] - range[n].0).max(range[n].1 - row[n]).powi(2);
        }
        caps.below.push(below);
        caps.need.push(need);
    }
    caps
}

trait ColumnModel {
    type Col: Clone + Eq + Hash + Ord;
    fn root(&self) -> Self::Col;
    fn mask(&self, col: &Self::Col) -> u64;
    /// Maximal nonempty updates of `col` at `node`.
    fn options(&self, node: usize, col: &Self::Col) -> Vec<Self::Col>;
    /// Whether the state at `node` is already known to be infeasible.
    fn refutes(&self, _node: usize, _cols: &[Self::Col]) -> bool {
        false
    }
    /// Whether every continuation open to `small` is open to `big`.
    fn within(&self, small: &Self::Col, big: &Self::Col) -> bool;
}

struct LinfModel<'a> {
    proj: &'a Projection,
    beta: f64,
    spans: Option<&'a Spans>,
}

impl ColumnModel for LinfModel<'_> {
    type Col = u64;

    fn root(&self) -> u64 {
        self.proj.full_mask()
    }

    fn mask(&self, col: &u64) -> u64 {
        *col
    }

    fn within(&self, small: &u64, big: &u64) -> bool {
        small & !big == 0
    }

    fn options(&self, node: usize, col: &u64) -> Vec<u64> {
        let mut members: Vec<(f64, usize)> = (0..self.proj.members())
            .filter(|f| col >> f & 1 == 1)
            .map(|f| (self.proj.values[f][node], f))
            .collect();
        members.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<u64> = Vec::new();
        let mut last_end = 0;
        for i in 0..members.len() {
            let mut end = i;
            while end + 1 < members.len()
                && members[end + 1].0 - members[i].0 <= 2.0 * self.beta + TOL
            {
                end += 1;
            }
            // Windows are intervals; one ending where the previous ended is
            // contained in it.
            if i == 0 || end > last_end {
                out.push(members[i..=end].iter().fold(0u64, |m, &(_, f)| m | 1 << f));
            }
            last_end = end;
        }
        out
    }

    fn refutes(&self, node: usize, cols: &[u64]) -> bool {
        let Some(spans) = self.spans else {
            return false;
        };
        let m = self.proj.members();
        let limit = 2.0 * self.beta + TOL;
        spans[node].iter().any(|dist| {
            crowded(m, cols.len(), |f, g| {
                dist[f * m + g] <= limit && cols.iter().any(|c| c >> f & c >> g & 1 == 1)
            })
        })
    }
}

/// Remaining squared-error budget per member; dropped members are `-inf`.
#[derive(Debug, Clone)]
struct Budget(Vec<f64>);

impl PartialEq for Budget {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other).is_eq()
    }
}
impl Eq for Budget {}
impl PartialOrd for Budget {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Budget {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    }
}
impl Hash for Budget {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        for v in &self.0 {
            v.to_bits().hash(state);
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Rounding {
    Exact,
    /// Budgets rounded down to multiples of the step after every node.
    Down(f64),
    /// Budgets rounded up to multiples of the step after every node.
    Up(f64),
}

struct L2Model<'a> {
    proj: &'a Projection,
    beta: f64,
    caps: &'a Caps,
    spans: Option<&'a Spans>,
    rounding: Rounding,
}

impl L2Model<'_> {
    fn round(&self, v: f64) -> f64 {
        match self.rounding {
            Rounding::Exact => v,
            Rounding::Down(q) => (v / q).floor() * q,
            Rounding::Up(q) => (v / q).ceil() * q,
        }
    }
}

impl ColumnModel for L2Model<'_> {
    type Col = Budget;

    fn root(&self) -> Budget {
        Budget(vec![
            self.proj.depth as f64 * self.beta * self.beta;
            self.proj.members()
        ])
    }

    fn mask(&self, col: &Budget) -> u64 {
        col.0
            .iter()
            .enumerate()
            .filter(|(_, b)| b.is_finite())
            .fold(0, |m, (f, _)| m | 1 << f)
    }

    fn within(&self, small: &Budget, big: &Budget) -> bool {
        small.0.iter().zip(&big.0).all(|(a, b)| a <= b)
    }

    fn options(&self, node: usize, col: &Budget) -> Vec<Budget> {
        let mut values: Vec<f64> = self.proj.values.iter().map(|row| row[node]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        let mut grid = values.clone();
        for (i, a) in values.iter().enumerate() {
            grid.extend(values[i + 1..].iter().map(|b| 0.5 * (a + b)));
        }
        let mut out: Vec<Budget> = grid
            .iter()
            .map(|&v| {
                Budget(
                    col.0
                        .iter()
                        .enumerate()
                        .map(|(f, &b)| {
                            let left = b - (self.proj.values[f][node] - v).powi(2);
                            if left >= -TOL {
                                self.round(left.clamp(0.0, self.caps.below[f][node]))
                            } else {
                                f64::NEG_INFINITY
                            }
                        })
                        .collect(),
                )
            })
            .filter(|b| b.0.iter().any(|v| v.is_finite()))
            .collect();
        out.sort();
        out.dedup();
        let dominated =
            |a: &Budget, b: &Budget| a != b && a.0.iter().zip(&b.0).all(|(x, y)| x <= y);
        let keep: Vec<bool> = out
            .iter()
            .map(|a| !out.iter().any(|b| dominated(a, b)))
            .collect();
        let mut out: Vec<Budget> = out
            .into_iter()
            .zip(keep)
            .filter_map(|(b, k)| k.then_some(b))
            .collect();
        // Roomier options first, so that feasible covers are found early.
        let room = |b: &Budget| {
            let alive = b.0.iter().filter(|v| v.is_finite());
            (alive.clone().count(), alive.sum::<f64>())
        };
        out.sort_by(|a, b| {
            let (ca, sa) = room(a);
            let (cb, sb) = room(b);
            cb.cmp(&ca).then(sb.total_cmp(&sa)).then_with(|| a.cmp(b))
        });
        out
    }

    fn refutes(&self, node: usize, cols: &[Budget]) -> bool {
        let Some(spans) = self.spans else {
            return false;
        };
        let m = self.proj.members();
        // Rounding up may still add up to one step per remaining node.
        let slack = match self.rounding {
            Rounding::Up(q) => q * (self.proj.depth - level_of(node)) as f64,
            _ => 0.0,
        };
        spans[node].iter().any(|dist| {
            crowded(m, cols.len(), |f, g| {
                cols.iter().any(|c| {
                    let (a, b) = (c.0[f], c.0[g]);
                    a.is_finite()
                        && b.is_finite()
                        && dist[f * m + g] <= (a + slack).sqrt() + (b + slack).sqrt() + TOL
                })
            })
        })
    }
}

/// More members than columns that pairwise cannot share a column, or a
/// member no column can hold.
fn crowded(members: usize, columns: usize, share: impl Fn(usize, usize) -> bool) -> bool {
    let mut adj = vec![0u64; members];
    for f in 0..members {
        if !share(f, f) {
            return true;
        }
        for g in f + 1..members {
            if !share(f, g) {
                adj[f] |= 1 << g;
                adj[g] |= 1 << f;
            }
        }
    }
    let all = if members == 64 {
        u64::MAX
    } else {
        (1u64 << members) - 1
    };
    max_clique(&adj, all, 0, columns) > columns
}

fn level_of(node: usize) -> usize {
    (usize::BITS - 1 - (node + 1).leading_zeros()) as usize
}

type Spans = Vec<Vec<Vec<f64>>>;

/// Largest table of per-path distances built for the refutation test.
const MAX_SPAN_ENTRIES: usize = 1 << 22;

/// For every node, one `members × members` distance table per path from
/// that node down to a leaf. `None` when the tables would be too large.
fn path_spans(proj: &Projection, metric: impl Fn(&[usize], usize, usize) -> f64) -> Option<Spans> {
    let m = proj.members();
    if proj.depth * (1usize << proj.depth) * m * m > MAX_SPAN_ENTRIES {
        return None;
    }
    let nodes = crate::tree::node_count(proj.depth);
    let mut below: Vec<Vec<Vec<usize>>> = vec![Vec::new(); nodes];
    for n in (0..nodes).rev() {
        below[n] = if 2 * n + 1 < nodes {
            [2 * n + 1, 2 * n + 2]
                .iter()
                .flat_map(|&c| {
                    below[c]
                        .iter()
                        .map(move |p| std::iter::once(n).chain(p.iter().copied()).collect())
                })
                .collect()
        } else {
            vec![vec![n]]
        };
    }
    Some(
        below
            .iter()
            .map(|paths| {
                paths
                    .iter()
                    .map(|p| (0..m * m).map(|i| metric(p, i / m, i % m)).collect())
                    .collect()
            })
            .collect(),
    )
}

struct BudgetExceeded;

const DEAD_WINDOW: usize = 64;

struct CoverSearch<'a, M: ColumnModel> {
    model: &'a M,
    depth: usize,
    full: u64,
    memo: HashMap<(usize, Vec<M::Col>), bool>,
    /// Recent infeasible states per node, for subsumption.
    dead: HashMap<usize, Vec<Vec<M::Col>>>,
    expanded: usize,
    budget: usize,
}

impl<M: ColumnModel> CoverSearch<'_, M> {
    fn feasible(
        &mut self,
        node: usize,
        level: usize,
        cols: Vec<M::Col>,
    ) -> std::result::Result<bool, BudgetExceeded> {
        if level == self.depth {
            return Ok(true);
        }
        let key = (node, cols);
        if let Some(&known) = self.memo.get(&key) {
            return Ok(known);
        }
        if let Some(dead) = self.dead.get(&node) {
            if dead
                .iter()
                .rev()
                .take(DEAD_WINDOW)
                .any(|d| self.subsumed(&key.1, d))
            {
                return Ok(false);
            }
        }
        self.expanded += 1;
        if self.expanded > self.budget {
            return Err(BudgetExceeded);
        }
        if self.model.refutes(node, &key.1) {
            self.memo.insert(key, false);
            return Ok(false);
        }
        let cols = &key.1;
        let options: Vec<Vec<M::Col>> = cols.iter().map(|c| self.model.options(node, c)).collect();
        let reach: Vec<u64> = options
            .iter()
            .map(|opts| opts.iter().fold(0, |m, c| m | self.model.mask(c)))
            .collect();
        let mut suffix = vec![0u64; cols.len() + 1];
        for j in (0..cols.len()).rev() {
            suffix[j] = suffix[j + 1] | reach[j];
        }
        let mut picks = vec![0usize; cols.len()];
        let found = self.assign(node, level, cols, &options, &suffix, 0, 0, &mut picks)?;
        if !found {
            self.dead.entry(node).or_default().push(key.1.clone());
        }
        self.memo.insert(key, found);
        Ok(found)
    }

    /// Whether the columns of `small` embed, one to one, into those of `big`.
    fn subsumed(&self, small: &[M::Col], big: &[M::Col]) -> bool {
        fn place<M: ColumnModel>(model: &M, small: &[M::Col], big: &[M::Col], used: u64) -> bool {
            let Some((first, rest)) = small.split_first() else {
                return true;
            };
            (0..big.len()).any(|j| {
                used >> j & 1 == 0
                    && model.within(first, &big[j])
                    && place(model, rest, big, used | 1 << j)
            })
        }
        small.len() <= big.len() && place(self.model, small, big, 0)
    }

    #[allow(clippy::too_many_arguments)]
    fn assign(
        &mut self,
        node: usize,
        level: usize,
        cols: &[M::Col],
        options: &[Vec<M::Col>],
        suffix: &[u64],
        j: usize,
        covered: u64,
        picks: &mut [usize],
    ) -> std::result::Result<bool, BudgetExceeded> {
        if (covered | suffix[j]) != self.full {
            return Ok(false);
        }
        if j == cols.len() {
            let mut next: Vec<M::Col> = picks
                .iter()
                .zip(options)
                .filter_map(|(&p, opts)| opts.get(p).cloned())
                .collect();
            next.sort();
            return Ok(self.feasible(2 * node + 1, level + 1, next.clone())?
                && self.feasible(2 * node + 2, level + 1, next)?);
        }
        if options[j].is_empty() {
            picks[j] = usize::MAX;
            return self.assign(node, level, cols, options, suffix, j + 1, covered, picks);
        }
        let start = if j > 0 && cols[j] == cols[j - 1] {
            picks[j - 1]
        } else {
            0
        };
        for p in start..options[j].len() {
            picks[j] = p;
            let m = self.model.mask(&options[j][p]);
            if self.assign(
                node,
                level,
                cols,
                options,
                suffix,
                j + 1,
                covered | m,
                picks,
            )? {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

/// Whether `k` cover trees suffice; `None` when the search runs out of nodes.
fn search<M: ColumnModel>(model: &M, proj: &Projection, k: usize, budget: usize) -> Option<bool> {
    let mut search = CoverSearch {
        model,
        depth: proj.depth,
        full: proj.full_mask(),
        memo: HashMap::new(),
        dead: HashMap::new(),
        expanded: 0,
        budget,
    };
    search.feasible(0, 0, vec![model.root(); k]).ok()
}

/// Smallest feasible size in `[lower, upper)`, or `upper` when none is.
fn solve(
    proj: &Projection,
    upper: usize,
    lower: usize,
    mode: CoverMode,
    mut decide: impl FnMut(usize) -> Option<bool>,
) -> CoverResult {
    if proj.members() > MAX_EXACT_MEMBERS {
        return CoverResult {
            size: upper,
            mode: CoverMode::UpperBoundOnly,
        };
    }
    for k in lower.max(1)..upper {
        match decide(k) {
            Some(true) => return CoverResult { size: k, mode },
            Some(false) => {}
            None => {
                return CoverResult {
                    size: upper,
                    mode: CoverMode::UpperBoundOnly,
                }
            }
        }
    }
    CoverResult { size: upper, mode }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverFatReport {
    pub n2: CoverResult,
    pub n_inf: CoverResult,
    pub fat: usize,
    /// `(2en/β)^fat`
    pub fat_bound: f64,
    pub passed: bool,
}

/// Computes `N_2`, `N_∞` on `x_tree` and the fat-shattering dimension of the
/// class, and checks `N_2 ≤ N_∞ ≤ (2en/β)^fat`.
pub fn cover_fat_relation_check(
    class: &FunctionClass,
    x_tree: &CovariateTree,
    beta: f64,
) -> Result<CoverFatReport> {
    const MAX_CHECK_DEPTH: usize = 6;
    if x_tree.depth() > MAX_CHECK_DEPTH {
        return Err(Error::Resource {
            what: "cover-fat check depth".into(),
            reached: x_tree.depth(),
        });
    }
    if !(beta > 0.0) {
        return Err(Error::range(format!("beta must be positive, got {beta}")));
    }
    let n2 = sequential_cover_size(class, x_tree, beta, Norm::L2)?;
    let n_inf = sequential_cover_size(class, x_tree, beta, Norm::LInf)?;
    // A shattered tree of depth d needs 2^d distinct members.
    let members = class.len().max(1);
    let max_depth = (usize::BITS - 1 - members.leading_zeros()) as usize;
    let fat = fat_shattering_dim(
        class,
        beta,
        &FatOptions {
            max_depth,
            ..Default::default()
        },
    )?
    .dimension;
    let n = x_tree.depth() as f64;
    let fat_bound = (2.0 * std::f64::consts::E * n / beta).powi(fat as i32);
    let passed = n2.size <= n_inf.size && n_inf.size as f64 <= fat_bound * (1.0 + 1e-12);
    Ok(CoverFatReport {
        n2,
        n_inf,
        fat,
        fat_bound,
        passed,
    })
}
