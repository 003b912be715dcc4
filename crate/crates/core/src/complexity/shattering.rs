//! Sequential fat-shattering.

use std::collections::HashMap;

use super::Members;
use crate::class::FunctionClass;
use crate::error::{Error, Result};
use crate::tree::{CovariateTree, LabeledTree, RealTree};

pub const MAX_SHATTER_DEPTH: usize = 12;

/// Slack granted to the margin comparisons so that witnesses computed as
/// midpoints do not fail on rounding.
const MARGIN_TOL: f64 = 1e-12;

/// Whether `(x_tree, witness)` is `β`-shattered by `class`: every sign path
/// `ε` is realized by some `f` with `ε_t (f(x_t(ε)) - s_t(ε)) ≥ β/2` for all `t`.
pub fn is_beta_shattered(
    x_tree: &CovariateTree,
    witness: &RealTree,
    class: &FunctionClass,
    beta: f64,
) -> Result<bool> {
    if !(beta > 0.0) {
        return Err(Error::range(format!("beta must be positive, got {beta}")));
    }
    let depth = x_tree.depth();
    if witness.depth() != depth {
        return Err(Error::Shape {
            expected: depth,
            got: witness.depth(),
        });
    }
    if depth > MAX_SHATTER_DEPTH {
        return Err(Error::Resource {
            what: "shattering check depth".into(),
            reached: depth,
        });
    }
    for &x in x_tree.labels() {
        class.check_covariate(x)?;
    }
    let all: Vec<usize> = (0..class.len()).collect();
    Ok(shatters_below(
        x_tree,
        witness,
        class,
        beta / 2.0,
        0,
        depth,
        &all,
    ))
}

fn shatters_below(
    x_tree: &CovariateTree,
    witness: &RealTree,
    class: &FunctionClass,
    margin: f64,
    node: usize,
    remaining: usize,
    members: &[usize],
) -> bool {
    if members.is_empty() {
        return false;
    }
    if remaining == 0 {
        return true;
    }
    let x = *x_tree.node(node);
    let s = *witness.node(node);
    let (plus, minus): (Vec<usize>, Vec<usize>) = (
        members
            .iter()
            .copied()
            .filter(|&f| class.value(f, x) - s >= margin - MARGIN_TOL)
            .collect(),
        members
            .iter()
            .copied()
            .filter(|&f| s - class.value(f, x) >= margin - MARGIN_TOL)
            .collect(),
    );
    shatters_below(
        x_tree,
        witness,
        class,
        margin,
        2 * node + 1,
        remaining - 1,
        &minus,
    ) && shatters_below(
        x_tree,
        witness,
        class,
        margin,
        2 * node + 2,
        remaining - 1,
        &plus,
    )
}

#[derive(Debug, Clone)]
pub struct FatOptions {
    pub max_depth: usize,
    /// Witness values to try at every node. `None` uses the midpoints of
    /// every pair of member values at the candidate covariate, which loses
    /// nothing: only the position of the witness relative to those values
    /// matters.
    pub witness_grid: Option<Vec<f64>>,
    /// Cap on memoized search states.
    pub state_budget: usize,
}

impl Default for FatOptions {
    fn default() -> Self {
        Self {
            max_depth: 6,
            witness_grid: None,
            state_budget: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FatResult {
    pub dimension: usize,
    /// A shattered pair of depth `dimension`, absent when the dimension is 0.
    pub trees: Option<(CovariateTree, RealTree)>,
}

type Choice = Option<(usize, f64)>;

struct FatSearch<'a> {
    class: &'a FunctionClass,
    margin: f64,
    grid: Option<&'a [f64]>,
    memo: HashMap<(usize, Members), Choice>,
    budget: usize,
}

impl FatSearch<'_> {
    fn split(&self, members: &Members, x: usize, s: f64) -> (Members, Members) {
        let mut plus = Members::empty(self.class.len());
        let mut minus = Members::empty(self.class.len());
        for f in members.iter() {
            let v = self.class.value(f, x);
            if v - s >= self.margin - MARGIN_TOL {
                plus.insert(f);
            }
            if s - v >= self.margin - MARGIN_TOL {
                minus.insert(f);
            }
        }
        (plus, minus)
    }

    fn witnesses(&self, members: &Members, x: usize) -> Vec<f64> {
        if let Some(grid) = self.grid {
            return grid.to_vec();
        }
        let mut values: Vec<f64> = members.iter().map(|f| self.class.value(f, x)).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        let mut mids = Vec::new();
        for (i, a) in values.iter().enumerate() {
            for b in &values[i + 1..] {
                if b - a >= 2.0 * self.margin - 2.0 * MARGIN_TOL {
                    mids.push(0.5 * (a + b));
                }
            }
        }
        mids
    }

    /// `Some` choice of root covariate and witness when `members` shatters
    /// some tree of depth `depth`; a depth-0 tree only needs a member.
    fn shattered(&mut self, depth: usize, members: &Members) -> Result<Option<Choice>> {
        let count = members.count();
        if depth == 0 {
            return Ok((count > 0).then_some(None));
        }
        // Paths of a shattered tree pairwise split at some node, so they need
        // distinct members.
        if depth >= usize::BITS as usize || count < 1 << depth {
            return Ok(None);
        }
        let key = (depth, members.clone());
        if let Some(found) = self.memo.get(&key) {
            return Ok(found.map(Some));
        }
        if self.memo.len() >= self.budget {
            return Err(Error::Resource {
                what: "fat-shattering search states".into(),
                reached: depth,
            });
        }
        let mut found = None;
        'outer: for x in 0..self.class.domain_size() {
            for s in self.witnesses(members, x) {
                let (plus, minus) = self.split(members, x, s);
                if self.shattered(depth - 1, &minus)?.is_some()
                    && self.shattered(depth - 1, &plus)?.is_some()
                {
                    found = Some((x, s));
                    break 'outer;
                }
            }
        }
        self.memo.insert(key, found);
        Ok(found.map(Some))
    }

    fn build(
        &mut self,
        depth: usize,
        members: &Members,
        node: usize,
        xs: &mut [usize],
        ss: &mut [f64],
    ) -> Result<()> {
        if depth == 0 {
            return Ok(());
        }
        let (x, s) = self
            .shattered(depth, members)?
            .flatten()
            .expect("built only along shattered states");
        xs[node] = x;
        ss[node] = s;
        let (plus, minus) = self.split(members, x, s);
        self.build(depth - 1, &minus, 2 * node + 1, xs, ss)?;
        self.build(depth - 1, &plus, 2 * node + 2, xs, ss)
    }
}

/// Largest `d ≤ max_depth` such that some covariate tree of depth `d` is
/// `β`-shattered, by exhaustive search over covariate labelings and
/// witnesses.
pub fn fat_shattering_dim(
    class: &FunctionClass,
    beta: f64,
    options: &FatOptions,
) -> Result<FatResult> {
    if !(beta > 0.0) {
        return Err(Error::range(format!("beta must be positive, got {beta}")));
    }
    if options.max_depth > MAX_SHATTER_DEPTH {
        return Err(Error::Resource {
            what: "fat-shattering depth".into(),
            reached: options.max_depth,
        });
    }
    let mut search = FatSearch {
        class,
        margin: beta / 2.0,
        grid: options.witness_grid.as_deref(),
        memo: HashMap::new(),
        budget: options.state_budget,
    };
    let all = Members::full(class.len());
    let mut dimension = 0;
    while dimension < options.max_depth && search.shattered(dimension + 1, &all)?.is_some() {
        dimension += 1;
    }
    if dimension == 0 {
        return Ok(FatResult {
            dimension,
            trees: None,
        });
    }
    let nodes = (1 << dimension) - 1;
    let mut xs = vec![0; nodes];
    let mut ss = vec![0.0; nodes];
    search.build(dimension, &all, 0, &mut xs, &mut ss)?;
    Ok(FatResult {
        dimension,
        trees: Some((
            LabeledTree::new(dimension, xs)?,
            LabeledTree::new(dimension, ss)?,
        )),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_constants(beta: f64) -> FunctionClass {
        FunctionClass::constants(3, &[beta, -beta]).unwrap()
    }

    /// Checks every path separately instead of splitting member sets.
    fn shattered_by_paths(
        x: &CovariateTree,
        s: &RealTree,
        class: &FunctionClass,
        beta: f64,
    ) -> bool {
        let d = x.depth();
        (0..1u64 << d).all(|mask| {
            let nodes: Vec<usize> = crate::tree::path_nodes(d, mask).collect();
            (0..class.len()).any(|f| {
                nodes.iter().enumerate().all(|(t, &node)| {
                    let eps = crate::tree::path_sign(d, mask, t);
                    eps * (class.value(f, *x.node(node)) - s.node(node)) >= beta / 2.0 - 1e-12
                })
            })
        })
    }

    #[test]
    fn constants_shatter_depth_one_only() {
        let class = two_constants(0.5);
        let x1 = LabeledTree::constant(1, 0).unwrap();
        let s1 = LabeledTree::constant(1, 0.0).unwrap();
        assert!(is_beta_shattered(&x1, &s1, &class, 0.5).unwrap());
        let x2 = LabeledTree::constant(2, 1).unwrap();
        let s2 = LabeledTree::constant(2, 0.0).unwrap();
        assert!(!is_beta_shattered(&x2, &s2, &class, 0.5).unwrap());
        assert!(!shattered_by_paths(&x2, &s2, &class, 0.5));
    }

    #[test]
    fn empty_class_shatters_nothing() {
        let class = FunctionClass::from_rows(2, vec![]).unwrap();
        let x = LabeledTree::constant(1, 0).unwrap();
        let s = LabeledTree::constant(1, 0.0).unwrap();
        assert!(!is_beta_shattered(&x, &s, &class, 1.0).unwrap());
    }

    #[test]
    fn depth_limit_is_enforced() {
        let class = two_constants(1.0);
        let x = LabeledTree::constant(13, 0).unwrap();
        let s = LabeledTree::constant(13, 0.0).unwrap();
        assert!(matches!(
            is_beta_shattered(&x, &s, &class, 1.0),
            Err(Error::Resource { .. })
        ));
    }

    #[test]
    fn path_class_shatters_its_tree() {
        for depth in 1..=6 {
            let class = FunctionClass::path_signs(depth, 0.5).unwrap();
            let x = LabeledTree::from_fn(depth, |i| i).unwrap();
            let s = LabeledTree::constant(depth, 0.0).unwrap();
            assert!(is_beta_shattered(&x, &s, &class, 1.0).unwrap());
            assert!(!is_beta_shattered(&x, &s, &class, 1.01).unwrap());
        }
    }

    #[test]
    fn split_recursion_agrees_with_path_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..300 {
            use rand::Rng;
            let size = rng.random_range(1..8);
            let class = FunctionClass::random(&mut rng, size, 3);
            let depth = rng.random_range(1..4);
            let x = LabeledTree::from_fn(depth, |_| rng.random_range(0..3)).unwrap();
            let s = LabeledTree::from_fn(depth, |_| rng.random_range(-0.5..0.5)).unwrap();
            let beta = rng.random_range(0.05..1.0);
            assert_eq!(
                is_beta_shattered(&x, &s, &class, beta).unwrap(),
                shattered_by_paths(&x, &s, &class, beta)
            );
        }
    }

    #[test]
    fn fat_dimension_examples() {
        let r = fat_shattering_dim(&two_constants(0.5), 1.0, &FatOptions::default()).unwrap();
        assert_eq!(r.dimension, 1);
        let single = FunctionClass::constants(4, &[0.3]).unwrap();
        assert_eq!(
            fat_shattering_dim(&single, 0.1, &FatOptions::default())
                .unwrap()
                .dimension,
            0
        );
        // Below the separation of the two constants they no longer shatter.
        assert_eq!(
            fat_shattering_dim(&two_constants(0.5), 1.01, &FatOptions::default())
                .unwrap()
                .dimension,
            0
        );
    }

    #[test]
    fn sign_functions_reach_domain_size() {
        for m in 1..=4 {
            let class = FunctionClass::all_signs(m).unwrap();
            let r = fat_shattering_dim(
                &class,
                2.0,
                &FatOptions {
                    witness_grid: Some(vec![0.0]),
                    ..Default::default()
                },
            )
            .unwrap();
            assert_eq!(r.dimension, m);
            let capped = FatOptions {
                max_depth: 2,
                ..Default::default()
            };
            assert_eq!(
                fat_shattering_dim(&class, 2.0, &capped).unwrap().dimension,
                m.min(2)
            );
        }
    }

    #[test]
    fn returned_trees_are_certified() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            use rand::Rng;
            let size = rng.random_range(2..10);
            let class = FunctionClass::random(&mut rng, size, 3);
            let beta = rng.random_range(0.1..1.0);
            let r = fat_shattering_dim(&class, beta, &FatOptions::default()).unwrap();
            if let Some((x, s)) = &r.trees {
                assert_eq!(x.depth(), r.dimension);
                assert!(is_beta_shattered(x, s, &class, beta).unwrap());
            }
        }
    }

    #[test]
    fn budget_exhaustion_reports_depth() {
        let class = FunctionClass::all_signs(4).unwrap();
        let tight = FatOptions {
            state_budget: 1,
            ..Default::default()
        };
        assert!(matches!(
            fat_shattering_dim(&class, 2.0, &tight),
            Err(Error::Resource { .. })
        ));
    }
}
