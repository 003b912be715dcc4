use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, ValueEnum};
use onreg::adversary::{stochastic_environment, BlockAdversary, ShatteringAdversary};
use onreg::class::FunctionClass;
use onreg::complexity::{fat_shattering_dim, FatOptions};
use onreg::exec::Execution;
use onreg::forecasters::{
    class_features, vaw_regret_bound, FiniteExperts, LinearRidge, SolveMode, VawForecaster,
};
use onreg::report::fmt_real;
use onreg::tree::{CovariateTree, RealTree};
use onreg::{alpha_regret, regret, run_game, Comparator, Environment, Forecaster, GameConfig};

use crate::common::{
    parse_seeds, table, usage, ClassArgs, CliError, CommandResult, ForecasterKind, Outcome,
};
use crate::Globals;

/// Regret above the bound by more than this counts as a violation.
const VIOLATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EnvKind {
    /// Uniform covariates, responses from the first class member plus Gaussian noise.
    Iid,
    /// Shattering adversary; the horizon may not exceed the tree depth.
    Shatter,
    /// Shattering adversary stretched over the horizon in blocks.
    Block,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, value_enum, default_value = "finite")]
    forecaster: ForecasterKind,
    #[command(flatten)]
    class: ClassArgs,
    /// Ridge parameter of the VAW forecaster.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Temperature scale of the finite-experts relaxation, in units of B².
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long, value_enum, default_value = "iid")]
    env: EnvKind,
    /// Shattering scale for the adversarial environments.
    #[arg(long, default_value_t = 0.25)]
    beta: f64,
    /// Block length of the block adversary (default: ceil(n / depth)).
    #[arg(long)]
    blocks_k: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    noise_sd: f64,
    #[arg(long, value_delimiter = ',', default_value = "50")]
    horizons: Vec<usize>,
    /// `a..b` or a comma-separated list (default: the global seed).
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Directory for per-round transcripts, one CSV per (n, seed).
    #[arg(long)]
    transcripts: Option<PathBuf>,
    /// Covariate tree for the adversaries (default: found by the fat-shattering search).
    #[arg(long, requires = "witness")]
    tree: Option<PathBuf>,
    #[arg(long, requires = "tree")]
    witness: Option<PathBuf>,
}

struct Plan {
    class: Arc<FunctionClass>,
    bound_b: f64,
    trees: Option<(CovariateTree, RealTree)>,
}

struct GameRow {
    n: usize,
    seed: u64,
    regret: f64,
    alpha_regret: f64,
    bound: f64,
    transcript_csv: Option<Vec<u8>>,
}

impl RunArgs {
    fn forecaster(
        &self,
        plan: &Plan,
    ) -> Result<(Box<dyn Forecaster>, Box<dyn Comparator>, &'static str), CliError> {
        Ok(match self.forecaster {
            ForecasterKind::Finite => (
                Box::new(FiniteExperts::with_scale(
                    plan.class.clone(),
                    plan.bound_b,
                    self.scale,
                )?),
                Box::new((*plan.class).clone()),
                "finite_experts",
            ),
            ForecasterKind::Vaw => {
                let features = class_features(&plan.class);
                (
                    Box::new(VawForecaster::new(
                        features.clone(),
                        self.lambda,
                        plan.bound_b,
                        SolveMode::Dense,
                    )?),
                    Box::new(LinearRidge {
                        features,
                        lambda: self.lambda,
                    }),
                    "vaw",
                )
            }
        })
    }

    fn bound(&self, plan: &Plan, forecaster: &dyn Forecaster, n: usize) -> f64 {
        match self.forecaster {
            ForecasterKind::Finite => {
                self.scale * plan.bound_b * plan.bound_b * (plan.class.len() as f64).ln()
            }
            ForecasterKind::Vaw => {
                vaw_regret_bound(n, plan.class.len(), self.lambda, forecaster.bound(), 0.0)
            }
        }
    }

    fn environment(&self, plan: &Plan, n: usize) -> Result<Box<dyn Environment>, CliError> {
        let trees = || {
            plan.trees
                .clone()
                .ok_or_else(|| usage(format!("the class shatters no tree at scale {}", self.beta)))
        };
        Ok(match self.env {
            EnvKind::Iid => {
                let f_star = plan.class.rows()[0]
                    .iter()
                    .map(|v| v.clamp(-plan.bound_b, plan.bound_b))
                    .collect();
                Box::new(stochastic_environment(f_star, self.noise_sd, plan.bound_b)?)
            }
            EnvKind::Shatter => {
                let (x, s) = trees()?;
                Box::new(ShatteringAdversary::new(
                    x,
                    s,
                    &plan.class,
                    self.beta,
                    plan.bound_b,
                )?)
            }
            EnvKind::Block => {
                let (x, s) = trees()?;
                let base = ShatteringAdversary::new(x, s, &plan.class, self.beta, plan.bound_b)?;
                Box::new(match self.blocks_k {
                    Some(k) => BlockAdversary::new(base, k)?,
                    None => BlockAdversary::for_horizon(base, n)?,
                })
            }
        })
    }

    fn play(&self, plan: &Plan, n: usize, seed: u64) -> Result<GameRow, CliError> {
        let (mut forecaster, comparator, _) = self.forecaster(plan)?;
        let mut environment = self.environment(plan, n)?;
        let config = GameConfig::new(n, plan.bound_b, self.alpha, seed)?;
        let transcript = run_game(forecaster.as_mut(), environment.as_mut(), &config)?;
        let transcript_csv = match &self.transcripts {
            Some(_) => {
                let mut buf = Vec::new();
                transcript.write_csv(comparator.as_ref(), &mut buf)?;
                Some(buf)
            }
            None => None,
        };
        Ok(GameRow {
            n,
            seed,
            regret: regret(&transcript, comparator.as_ref())?,
            alpha_regret: alpha_regret(&transcript, comparator.as_ref(), self.alpha)?,
            bound: self.bound(plan, forecaster.as_ref(), n),
            transcript_csv,
        })
    }
}

pub fn execute(args: &RunArgs, globals: &Globals) -> CommandResult {
    if args.horizons.is_empty() {
        return Err(usage("--horizons needs at least one value"));
    }
    let seeds = match &args.seeds {
        Some(spec) => parse_seeds(spec).map_err(usage)?,
        None => vec![globals.seed],
    };
    let class = args.class.load(globals.seed)?;
    let trees = match (&args.tree, &args.witness) {
        (Some(t), Some(w)) => Some((CovariateTree::load(t)?, RealTree::load(w)?)),
        _ if args.env == EnvKind::Iid => None,
        _ => fat_shattering_dim(&class, args.beta, &FatOptions::default())?.trees,
    };
    let plan = Plan {
        class,
        bound_b: globals.bound_or(1.0),
        trees,
    };
    let (_, _, bound_name) = args.forecaster(&plan)?;

    let mut jobs: Vec<(usize, u64)> = args
        .horizons
        .iter()
        .flat_map(|&n| seeds.iter().map(move |&s| (n, s)))
        .collect();
    jobs.sort_unstable();
    jobs.dedup();
    let games = Execution::default()
        .map(jobs.len(), |i| args.play(&plan, jobs[i].0, jobs[i].1))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;

    if let Some(dir) = &args.transcripts {
        std::fs::create_dir_all(dir)?;
        for g in &games {
            if let Some(csv) = &g.transcript_csv {
                std::fs::write(dir.join(format!("n{}_seed{}.csv", g.n, g.seed)), csv)?;
            }
        }
    }

    let mut worst = 0.0f64;
    let rows: Vec<Vec<String>> = games
        .iter()
        .map(|g| {
            let violation = (g.regret - g.bound).max(0.0);
            worst = worst.max(violation);
            vec![
                g.n.to_string(),
                g.seed.to_string(),
                fmt_real(g.regret),
                fmt_real(g.alpha_regret),
                fmt_real(g.bound),
                bound_name.to_string(),
                fmt_real(violation),
                "false".to_string(),
            ]
        })
        .collect();
    let csv = table(
        &[
            "n",
            "seed",
            "regret",
            "alpha_regret",
            "bound",
            "bound_name",
            "violation",
            "normalized",
        ],
        &rows,
    )?;
    Ok((
        csv,
        Outcome::failed_if(worst > VIOLATION_TOL, || {
            format!("regret exceeds the bound by {}", fmt_real(worst))
        }),
    ))
}
