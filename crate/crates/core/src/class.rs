//! Finite, tabulated function classes over a finite covariate domain
//! `{0, …, m-1}`, plus the JSON class-file format used by the CLI.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite class of real functions on `{0, …, domain_size - 1}`, stored as
/// one value vector per member. Member order is significant only for tie
/// breaking (lowest index wins).
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionClass {
    domain_size: usize,
    names: Vec<String>,
    values: Vec<Vec<f64>>,
}

impl FunctionClass {
    pub fn new(domain_size: usize, members: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let mut names = Vec::with_capacity(members.len());
        let mut values = Vec::with_capacity(members.len());
        for (name, row) in members {
            if row.len() != domain_size {
                return Err(Error::Shape {
                    expected: domain_size,
                    got: row.len(),
                });
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::range(format!(
                    "function {name} has non-finite value {v}"
                )));
            }
            names.push(name);
            values.push(row);
        }
        Ok(Self {
            domain_size,
            names,
            values,
        })
    }

    /// Unnamed members; names default to `f0`, `f1`, ….
    pub fn from_rows(domain_size: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        let members = rows
            .into_iter()
            .enumerate()
            .map(|(i, r)| (format!("f{i}"), r))
            .collect();
        Self::new(domain_size, members)
    }

    /// One constant function per entry of `levels`.
    pub fn constants(domain_size: usize, levels: &[f64]) -> Result<Self> {
        Self::from_rows(
            domain_size,
            levels.iter().map(|&c| vec![c; domain_size]).collect(),
        )
    }

    /// All `2^m` functions `{0..m} -> {-1, +1}`.
    pub fn all_signs(m: usize) -> Result<Self> {
        if m > 20 {
            return Err(Error::Resource {
                what: "sign class size".into(),
                reached: m,
            });
        }
        let rows = (0..1usize << m)
            .map(|mask| {
                (0..m)
                    .map(|x| if mask >> x & 1 == 1 { 1.0 } else { -1.0 })
                    .collect()
            })
            .collect();
        Self::from_rows(m, rows)
    }

    /// The canonical class shattering the complete tree of depth `depth`
    /// whose node `i` is labeled by covariate `i`.
    ///
    /// Member `mask` corresponds to the sign path whose `t`-th sign is bit
    /// `depth - t` of `mask` (first sign most significant, `1` meaning `+1`).
    /// It takes value `±amplitude` on the nodes of its path, following the
    /// path's signs, and `0` elsewhere. Against the all-zero witness this
    /// realizes every sign pattern with margin `amplitude`.
    pub fn path_signs(depth: usize, amplitude: f64) -> Result<Self> {
        if depth == 0 || depth > 16 {
            return Err(Error::Resource {
                what: "path class depth".into(),
                reached: depth,
            });
        }
        let nodes = (1usize << depth) - 1;
        let rows = (0..1usize << depth)
            .map(|mask| {
                let mut row = vec![0.0; nodes];
                let mut node = 0usize;
                for t in 0..depth {
                    let plus = mask >> (depth - 1 - t) & 1 == 1;
                    row[node] = if plus { amplitude } else { -amplitude };
                    node = 2 * node + if plus { 2 } else { 1 };
                }
                row
            })
            .collect();
        Self::from_rows(nodes, rows)
    }

    /// `size` members with i.i.d. uniform values in `[-1, 1]`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, size: usize, domain_size: usize) -> Self {
        let rows = (0..size)
            .map(|_| {
                (0..domain_size)
                    .map(|_| rng.random_range(-1.0..=1.0))
                    .collect()
            })
            .collect();
        Self::from_rows(domain_size, rows).expect("finite values")
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn value(&self, member: usize, x: usize) -> f64 {
        self.values[member][x]
    }

    pub fn check_covariate(&self, x: usize) -> Result<()> {
        if x < self.domain_size {
            Ok(())
        } else {
            Err(Error::UnknownCovariate(x))
        }
    }

    /// Values of every member at `x`, in member order.
    pub fn column(&self, x: usize) -> impl Iterator<Item = f64> + Clone + '_ {
        self.values.iter().map(move |row| row[x])
    }

    /// `max |f(x)|` over members and covariates (0 for an empty class).
    pub fn sup_norm(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn push(&mut self, name: impl Into<String>, row: Vec<f64>) -> Result<()> {
        if row.len() != self.domain_size {
            return Err(Error::Shape {
                expected: self.domain_size,
                got: row.len(),
            });
        }
        self.names.push(name.into());
        self.values.push(row);
        Ok(())
    }

    /// Members reordered so that new member `i` is old member `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        Self {
            domain_size: self.domain_size,
            names: order.iter().map(|&i| self.names[i].clone()).collect(),
            values: order.iter().map(|&i| self.values[i].clone()).collect(),
        }
    }

    /// Every value multiplied by `-1`.
    pub fn negated(&self) -> Self {
        Self {
            domain_size: self.domain_size,
            names: self.names.clone(),
            values: self
                .values
                .iter()
                .map(|r| r.iter().map(|v| -v).collect())
                .collect(),
        }
    }

    pub fn to_class_file(&self) -> ClassFile {
        ClassFile {
            domain_size: self.domain_size,
            functions: self
                .names
                .iter()
                .cloned()
                .zip(self.values.iter().cloned())
                .collect(),
        }
    }
}

/// On-disk class description:
/// `{"domain_size": m, "functions": {"name": [v0, …, v_{m-1}]}}`.
///
/// Members are ordered by name. All values must lie in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassFile {
    pub domain_size: usize,
    pub functions: BTreeMap<String, Vec<f64>>,
}

impl ClassFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: ClassFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        for (name, row) in &file.functions {
            if row.len() != file.domain_size {
                return Err(Error::Parse {
                    line: line_of(text, name),
                    message: format!(
                        "function {name} has {} values, domain_size is {}",
                        row.len(),
                        file.domain_size
                    ),
                });
            }
            if let Some(v) = row.iter().find(|v| !(-1.0..=1.0).contains(*v)) {
                return Err(Error::Parse {
                    line: line_of(text, name),
                    message: format!("function {name} has value {v} outside [-1, 1]"),
                });
            }
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn into_class(self) -> Result<FunctionClass> {
        FunctionClass::new(self.domain_size, self.functions.into_iter().collect())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("class file serializes")
    }
}

fn line_of(text: &str, name: &str) -> usize {
    let quoted = format!("\"{name}\"");
    text.lines()
        .position(|l| l.contains(&quoted))
        .map_or(1, |i| i + 1)
}
