use std::path::PathBuf;

use clap::{Args, ValueEnum};
use onreg::complexity::{
    cover_fat_relation_check, fat_shattering_dim, offset_rademacher, offset_rademacher_sup,
    sequential_cover_size, write_complexity_csv, ComplexityRecord, Estimator, FatOptions, Norm,
    MAX_EXACT_DEPTH,
};
use onreg::exec::Execution;
use onreg::report::fmt_real;
use onreg::tree::{CovariateTree, RealTree};

use crate::common::{usage, ClassArgs, CliError, CommandResult, Outcome};
use crate::Globals;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Quantity {
    Fat,
    #[value(name = "cover_l2")]
    CoverL2,
    #[value(name = "cover_linf")]
    CoverLinf,
    Offset,
    #[value(name = "offset_sup")]
    OffsetSup,
    /// Checks `N_2 ≤ N_∞ ≤ (2en/β)^fat` on the covariate tree.
    Chain,
}

#[derive(Debug, Args)]
pub struct ComplexityArgs {
    #[command(flatten)]
    class: ClassArgs,
    /// Covariate tree file (`{"depth": d, "labels": [..]}`).
    #[arg(long, conflicts_with = "depth")]
    tree: Option<PathBuf>,
    /// Depth of the default covariate tree, whose node `i` is labeled `i mod m`.
    #[arg(long, default_value_t = 3)]
    depth: usize,
    /// Centering tree for the offset complexity (default: all zero).
    #[arg(long)]
    mu: Option<PathBuf>,
    #[arg(long, default_value_t = 0.25)]
    beta: f64,
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_value = "fat,cover_l2,cover_linf,offset"
    )]
    quantities: Vec<Quantity>,
    /// Monte-Carlo paths for the offset complexity (default: exact enumeration).
    #[arg(long)]
    samples: Option<usize>,
    /// Candidate centering values for the supremum over trees.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    mu_grid: Vec<f64>,
    #[arg(long, default_value_t = 2)]
    sup_depth: usize,
}

impl ComplexityArgs {
    fn x_tree(&self, domain: usize) -> Result<CovariateTree, CliError> {
        match &self.tree {
            Some(path) => Ok(CovariateTree::load(path)?),
            None => Ok(CovariateTree::from_fn(self.depth, |i| i % domain)?),
        }
    }
}

pub fn execute(args: &ComplexityArgs, globals: &Globals) -> CommandResult {
    if args.quantities.is_empty() {
        return Err(usage("--quantities needs at least one entry"));
    }
    let class = args.class.load(globals.seed)?;
    let bound_b = globals.bound_or(1.0);
    let x_tree = args.x_tree(class.domain_size())?;
    let exec = Execution::default();

    let mut records = Vec::new();
    let mut failure = None;
    for q in &args.quantities {
        match q {
            Quantity::Fat => {
                let fat = fat_shattering_dim(&class, args.beta, &FatOptions::default())?;
                records.push(ComplexityRecord::new("fat", fat.dimension as f64, "exact"));
            }
            Quantity::CoverL2 | Quantity::CoverLinf => {
                let (name, norm) = if *q == Quantity::CoverL2 {
                    ("cover_l2", Norm::L2)
                } else {
                    ("cover_linf", Norm::LInf)
                };
                let cover = sequential_cover_size(&class, &x_tree, args.beta, norm)?;
                records.push(ComplexityRecord::new(
                    name,
                    cover.size as f64,
                    cover.mode.as_str(),
                ));
            }
            Quantity::Offset => {
                let mu = match &args.mu {
                    Some(path) => RealTree::load(path)?,
                    None => RealTree::constant(x_tree.depth(), 0.0)?,
                };
                let estimator = match args.samples {
                    Some(samples) => Estimator::MonteCarlo {
                        samples,
                        seed: globals.seed,
                    },
                    None if x_tree.depth() <= MAX_EXACT_DEPTH => Estimator::Exact,
                    None => {
                        return Err(usage(format!(
                            "depth {} is too deep to enumerate; pass --samples",
                            x_tree.depth()
                        )))
                    }
                };
                let est = offset_rademacher(&class, &x_tree, &mu, bound_b, estimator, exec)?;
                records.push(
                    ComplexityRecord::new("offset", est.value, est.mode()).with_stderr(est.stderr),
                );
            }
            Quantity::OffsetSup => {
                let sup =
                    offset_rademacher_sup(&class, args.sup_depth, bound_b, &args.mu_grid, exec)?;
                records.push(ComplexityRecord::new("offset_sup", sup.value, "exact"));
            }
            Quantity::Chain => {
                let report = cover_fat_relation_check(&class, &x_tree, args.beta)?;
                records.push(ComplexityRecord::new(
                    "chain_cover_l2",
                    report.n2.size as f64,
                    report.n2.mode.as_str(),
                ));
                records.push(ComplexityRecord::new(
                    "chain_cover_linf",
                    report.n_inf.size as f64,
                    report.n_inf.mode.as_str(),
                ));
                records.push(ComplexityRecord::new(
                    "chain_fat",
                    report.fat as f64,
                    "exact",
                ));
                records.push(ComplexityRecord::new(
                    "chain_fat_bound",
                    report.fat_bound,
                    "exact",
                ));
                records.push(ComplexityRecord::new(
                    "chain_passed",
                    if report.passed { 1.0 } else { 0.0 },
                    "exact",
                ));
                if !report.passed {
                    failure = Some(format!(
                        "N_2 = {}, N_inf = {}, (2en/beta)^fat = {}",
                        report.n2.size,
                        report.n_inf.size,
                        fmt_real(report.fat_bound)
                    ));
                }
            }
        }
    }
    let mut csv = Vec::new();
    write_complexity_csv(&mut csv, &records)?;
    let outcome = match failure {
        Some(reason) => Outcome::Failed(reason),
        None => Outcome::Passed,
    };
    Ok((csv, outcome))
}
