//! Complete binary trees with labeled nodes, the basic object of sequential
//! complexity.
//!
//! Labels live in a flat array of `2^depth - 1` entries in level order: the
//! root is node 0 and the children of node `i` are `2i + 1` (sign `-1`) and
//! `2i + 2` (sign `+1`). The label at level `t` of a path therefore depends
//! only on the first `t - 1` signs.
//!
//! Sign paths are passed either as `±1` slices or, in hot loops, as a bit
//! mask whose most significant of `depth` bits is the first sign
//! (`1` meaning `+1`).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_DEPTH: usize = 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledTree<T> {
    depth: usize,
    labels: Vec<T>,
}

pub type CovariateTree = LabeledTree<usize>;
pub type RealTree = LabeledTree<f64>;

pub fn node_count(depth: usize) -> usize {
    (1usize << depth) - 1
}

/// Node indices visited by the path `mask`, root first.
pub fn path_nodes(depth: usize, mask: u64) -> impl Iterator<Item = usize> {
    let mut node = 0usize;
    (0..depth).map(move |t| {
        let here = node;
        let plus = (mask >> (depth - 1 - t)) & 1 == 1;
        node = 2 * node + if plus { 2 } else { 1 };
        here
    })
}

/// Sign `ε_t ∈ {-1, +1}` (0-based `t`) of the path `mask`.
pub fn path_sign(depth: usize, mask: u64, t: usize) -> f64 {
    if (mask >> (depth - 1 - t)) & 1 == 1 {
        1.0
    } else {
        -1.0
    }
}

/// Converts a `±1` slice into a path mask.
pub fn mask_from_signs(signs: &[i8]) -> Result<u64> {
    if signs.len() > 63 {
        return Err(Error::Resource {
            what: "path length".into(),
            reached: signs.len(),
        });
    }
    signs.iter().try_fold(0u64, |acc, &s| match s {
        1 => Ok(acc << 1 | 1),
        -1 => Ok(acc << 1),
        other => Err(Error::range(format!("sign must be ±1, got {other}"))),
    })
}

impl<T: Clone> LabeledTree<T> {
    pub fn new(depth: usize, labels: Vec<T>) -> Result<Self> {
        if depth > MAX_DEPTH {
            return Err(Error::Resource {
                what: "tree depth".into(),
                reached: depth,
            });
        }
        if labels.len() != node_count(depth) {
            return Err(Error::Shape {
                expected: node_count(depth),
                got: labels.len(),
            });
        }
        Ok(Self { depth, labels })
    }

    pub fn constant(depth: usize, label: T) -> Result<Self> {
        if depth > MAX_DEPTH {
            return Err(Error::Resource {
                what: "tree depth".into(),
                reached: depth,
            });
        }
        Ok(Self {
            depth,
            labels: vec![label; node_count(depth)],
        })
    }

    /// Tree whose node `i` carries `label(i)`.
    pub fn from_fn(depth: usize, label: impl FnMut(usize) -> T) -> Result<Self> {
        Self::new(depth, (0..node_count(depth)).map(label).collect())
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn labels(&self) -> &[T] {
        &self.labels
    }

    pub fn node(&self, index: usize) -> &T {
        &self.labels[index]
    }

    /// Label at 1-based `level` reached by the sign prefix `prefix`
    /// (which must have `level - 1` entries).
    pub fn at(&self, level: usize, prefix: &[i8]) -> Result<&T> {
        if level == 0 || level > self.depth {
            return Err(Error::range(format!(
                "level {level} outside 1..={}",
                self.depth
            )));
        }
        if prefix.len() != level - 1 {
            return Err(Error::Shape {
                expected: level - 1,
                got: prefix.len(),
            });
        }
        let offset = mask_from_signs(prefix)? as usize;
        Ok(&self.labels[node_count(level - 1) + offset])
    }

    /// `(z_1(ε), …, z_n(ε))`: labels along the path, left on `-1`, right on `+1`.
    pub fn path_eval(&self, epsilon: &[i8]) -> Result<Vec<T>> {
        if epsilon.len() != self.depth {
            return Err(Error::Shape {
                expected: self.depth,
                got: epsilon.len(),
            });
        }
        let mask = mask_from_signs(epsilon)?;
        Ok(self.path_labels(mask).cloned().collect())
    }

    pub fn path_labels(&self, mask: u64) -> impl Iterator<Item = &T> + '_ {
        path_nodes(self.depth, mask).map(move |i| &self.labels[i])
    }

    pub fn map<U: Clone>(&self, f: impl FnMut(&T) -> U) -> LabeledTree<U> {
        LabeledTree {
            depth: self.depth,
            labels: self.labels.iter().map(f).collect(),
        }
    }
}

impl<T> LabeledTree<T>
where
    T: Clone + Serialize + for<'de> Deserialize<'de>,
{
    /// `{"depth": n, "labels": [..]}` with labels in level order.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("tree serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw<T> {
            depth: usize,
            labels: Vec<T>,
        }
        let raw: Raw<T> = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        Self::new(raw.depth, raw.labels)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
