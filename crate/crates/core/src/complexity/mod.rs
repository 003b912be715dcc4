//! Sequential complexity of finite classes on explicit trees, and the
//! closed-form chaining bounds and rate tables built on top of them.

mod chaining;
mod cover;
mod offset;
mod rates;
mod shattering;

pub use chaining::{
    dudley_offset_bound, dudley_offset_bound_optimistic, dudley_offset_bound_with,
    dudley_optimistic_bound_with, EntropyFunction, Integration, Norm, QUADRATURE_TOL,
};
pub use cover::{
    cover_fat_relation_check, sequential_cover_size, sequential_cover_size_with, CoverFatReport,
    CoverMode, CoverOptions, CoverResult,
};
pub use offset::{
    finite_maximal_bound, offset_rademacher, offset_rademacher_path, offset_rademacher_sup,
    Estimate, Estimator, OffsetSup, MAX_EXACT_DEPTH, MAX_SUP_DEPTH, MC_CHUNK,
};
pub use rates::{
    besov_rate, besov_regime, sparse_class_entropy_bound, theorem1_rate,
    theorem1_rate_with_constants, theorem2_lower_rate, theorem3_optimistic_bound,
    theorem3_optimistic_bound_with_constants, BesovRegime, RateSpec, Regime,
};
pub use shattering::{
    fat_shattering_dim, is_beta_shattered, FatOptions, FatResult, MAX_SHATTER_DEPTH,
};

use std::io::Write;

use crate::error::Result;
use crate::report::{fmt_real, write_table};

/// One line of the complexity CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityRecord {
    pub quantity: String,
    pub value: f64,
    pub mode: String,
    pub stderr: Option<f64>,
}

impl ComplexityRecord {
    pub fn new(quantity: impl Into<String>, value: f64, mode: impl Into<String>) -> Self {
        Self {
            quantity: quantity.into(),
            value,
            mode: mode.into(),
            stderr: None,
        }
    }

    pub fn with_stderr(mut self, stderr: f64) -> Self {
        self.stderr = Some(stderr);
        self
    }
}

/// Writes records as `quantity,value,mode,stderr`; a missing standard
/// error is left empty.
pub fn write_complexity_csv<W: Write>(out: W, records: &[ComplexityRecord]) -> Result<()> {
    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            vec![
                r.quantity.clone(),
                fmt_real(r.value),
                r.mode.clone(),
                r.stderr.map(fmt_real).unwrap_or_default(),
            ]
        })
        .collect();
    write_table(out, &["quantity", "value", "mode", "stderr"], &rows)
}

/// Fixed-width bit set over class members, used as a memo key.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) struct Members(Vec<u64>);

impl Members {
    pub(crate) fn empty(len: usize) -> Self {
        Members(vec![0; len.div_ceil(64)])
    }

    pub(crate) fn full(len: usize) -> Self {
        let mut s = Self::empty(len);
        for i in 0..len {
            s.insert(i);
        }
        s
    }

    pub(crate) fn insert(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    pub(crate) fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub(crate) fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(w, &bits)| {
            (0..64)
                .filter(move |b| bits >> b & 1 == 1)
                .map(move |b| w * 64 + b)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn member_set_round_trip() {
        let mut s = Members::empty(130);
        for i in [0, 63, 64, 129] {
            s.insert(i);
        }
        assert_eq!(s.count(), 4);
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![0, 63, 64, 129]);
        assert_eq!(Members::full(70).count(), 70);
    }

    #[test]
    fn csv_layout() {
        let mut out = Vec::new();
        let records = [
            ComplexityRecord::new("fat", 2.0, "exact"),
            ComplexityRecord::new("offset_rademacher", 1.5, "monte_carlo").with_stderr(0.25),
        ];
        write_complexity_csv(&mut out, &records).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "quantity,value,mode,stderr\nfat,2,exact,\noffset_rademacher,1.5,monte_carlo,0.25\n"
        );
    }
}
