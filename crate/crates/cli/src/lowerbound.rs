use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, ValueEnum};
use onreg::adversary::{
    episode_regrets, lower_bound_value, mean_and_stderr, BlockAdversary, LowerRegime,
    ShatteringAdversary,
};
use onreg::class::{ClassFile, FunctionClass};
use onreg::exec::Execution;
use onreg::forecasters::FiniteExperts;
use onreg::report::fmt_real;
use onreg::tree::{CovariateTree, RealTree};
use onreg::{Comparator, Environment, Forecaster, GameConfig};

use crate::common::{table, usage, CliError, CommandResult, Outcome};
use crate::Globals;

/// Standard errors of slack allowed below the lower bound.
const STDERR_SLACK: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LowerEnv {
    Shatter,
    Block,
}

#[derive(Debug, Args)]
pub struct LowerboundArgs {
    #[arg(long, value_enum, default_value = "shatter")]
    env: LowerEnv,
    /// Class file (default: the canonical path class of the tree depth).
    #[arg(long)]
    class: Option<PathBuf>,
    /// Covariate tree (default: node `i` labeled `i`).
    #[arg(long, requires = "witness")]
    tree: Option<PathBuf>,
    /// Witness tree (default: all zero).
    #[arg(long, requires = "tree")]
    witness: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    depth: usize,
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    #[arg(long, default_value_t = 2000)]
    episodes: usize,
    /// Horizon for the block adversary (default: the tree depth).
    #[arg(long)]
    horizon: Option<usize>,
    /// Temperature scale of the finite-experts forecaster, in units of B².
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
}

pub fn execute(args: &LowerboundArgs, globals: &Globals) -> CommandResult {
    if args.episodes < 2 {
        return Err(usage("--episodes must be at least 2"));
    }
    let bound_b = globals.bound_or(4.0);
    let (x_tree, witness) = match (&args.tree, &args.witness) {
        (Some(t), Some(w)) => (CovariateTree::load(t)?, RealTree::load(w)?),
        _ => (
            CovariateTree::from_fn(args.depth, |i| i)?,
            RealTree::constant(args.depth, 0.0)?,
        ),
    };
    let class = Arc::new(match &args.class {
        Some(path) => ClassFile::load(path)?.into_class()?,
        None => FunctionClass::path_signs(x_tree.depth(), args.beta / 2.0)?,
    });
    let depth = x_tree.depth();
    let n = match args.env {
        LowerEnv::Shatter => depth,
        LowerEnv::Block => args.horizon.unwrap_or(depth),
    };
    // Fails early, with a clear error, if the trees are not shattered.
    ShatteringAdversary::new(x_tree.clone(), witness.clone(), &class, args.beta, bound_b)?;

    let config = GameConfig::new(n, bound_b, 0.0, globals.seed)?;
    let setup = |_seed: u64| -> onreg::Result<(
        Box<dyn Forecaster>,
        Box<dyn Environment>,
        Box<dyn Comparator>,
    )> {
        let base =
            ShatteringAdversary::new(x_tree.clone(), witness.clone(), &class, args.beta, bound_b)?;
        let env: Box<dyn Environment> = match args.env {
            LowerEnv::Shatter => Box::new(base),
            LowerEnv::Block => Box::new(BlockAdversary::for_horizon(base, n)?),
        };
        Ok((
            Box::new(FiniteExperts::with_scale(
                class.clone(),
                bound_b,
                args.scale,
            )?),
            env,
            Box::new((*class).clone()),
        ))
    };
    let regrets = episode_regrets(args.episodes, &config, Execution::default(), setup)
        .map_err(CliError::from)?;
    let (mean, stderr) = mean_and_stderr(&regrets);
    let regime = if n == depth {
        LowerRegime::Large
    } else {
        LowerRegime::Small
    };
    let lower = lower_bound_value(args.beta, n, depth.min(n), regime)?;
    let passed = mean >= lower - STDERR_SLACK * stderr;

    let env_name = match args.env {
        LowerEnv::Shatter => "shatter",
        LowerEnv::Block => "block",
    };
    let row = vec![
        env_name.to_string(),
        n.to_string(),
        depth.to_string(),
        fmt_real(args.beta),
        args.episodes.to_string(),
        fmt_real(mean),
        fmt_real(stderr),
        fmt_real(lower),
        passed.to_string(),
    ];
    let csv = table(
        &[
            "env",
            "n",
            "fat",
            "beta",
            "episodes",
            "mean_regret",
            "stderr",
            "lower_bound",
            "passed",
        ],
        &[row],
    )?;
    Ok((
        csv,
        Outcome::failed_if(!passed, || {
            format!(
                "mean regret {} is below the lower bound {}",
                fmt_real(mean),
                fmt_real(lower)
            )
        }),
    ))
}
