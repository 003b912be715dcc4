use clap::{Args, ValueEnum};
use onreg::exec::{stream_rng, Execution};
use onreg::forecasters::{
    admissibility_check, response_grid, unit_ball_features, FiniteClassRelaxation, Relaxation,
    ShiftedRelaxation, VawRelaxation,
};
use onreg::report::fmt_real;
use rand::Rng;

use crate::common::{table, usage, ClassArgs, CliError, CommandResult, Outcome};
use crate::Globals;

/// Most negative slack still counted as admissible.
const SLACK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RelaxationKind {
    Finite,
    Vaw,
    /// The VAW relaxation lowered by `--shift` after `--shift-round` rounds.
    Corrupted,
}

#[derive(Debug, Args)]
pub struct AdmissibilityArgs {
    #[arg(long, value_enum, default_value = "finite")]
    relaxation: RelaxationKind,
    #[command(flatten)]
    class: ClassArgs,
    #[arg(long, default_value_t = 50)]
    histories: usize,
    #[arg(long, default_value_t = 20)]
    rounds: usize,
    /// Points in the response grid over `[-B, B]`.
    #[arg(long, default_value_t = 41)]
    grid: usize,
    /// Temperature scale of the finite-class relaxation, in units of B².
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Feature dimension of the VAW relaxation.
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 1.0)]
    shift: f64,
    #[arg(long, default_value_t = 5)]
    shift_round: usize,
}

/// Worst slack at each round of `histories` random histories. History `h`
/// draws its covariates and responses from stream `h + 1` of `seed`.
fn worst_slacks<R>(rel: &R, args: &AdmissibilityArgs, seed: u64) -> Result<Vec<f64>, CliError>
where
    R: Relaxation + Sync,
    R::State: Send,
{
    let b = rel.bound();
    let y_grid = response_grid(b, args.grid);
    let x_grid: Vec<usize> = (0..rel.domain_size()).collect();
    let per_history = Execution::default().map(args.histories, |h| -> onreg::Result<Vec<f64>> {
        let mut rng = stream_rng(seed, h as u64 + 1);
        let mut state = rel.initial();
        let mut slacks = Vec::with_capacity(args.rounds);
        for _ in 0..args.rounds {
            slacks.push(admissibility_check(rel, &state, &x_grid, &y_grid, SLACK_TOL)?.worst_slack);
            let x = rng.random_range(0..x_grid.len());
            let y = rng.random_range(-b..=b);
            state = rel.advance(&state, x, y)?;
        }
        Ok(slacks)
    });
    let mut worst = vec![f64::INFINITY; args.rounds];
    for slacks in per_history {
        for (w, s) in worst.iter_mut().zip(slacks?) {
            *w = w.min(s);
        }
    }
    Ok(worst)
}

pub fn execute(args: &AdmissibilityArgs, globals: &Globals) -> CommandResult {
    if args.histories == 0 || args.rounds == 0 {
        return Err(usage("--histories and --rounds must be positive"));
    }
    if args.grid < 2 {
        return Err(usage("--grid needs at least 2 points"));
    }
    let bound_b = globals.bound_or(1.0);
    let vaw = || -> Result<VawRelaxation, CliError> {
        let features = unit_ball_features(
            &mut stream_rng(globals.seed, 0),
            args.class.domain,
            args.dim,
        );
        Ok(VawRelaxation::new(
            features,
            args.lambda,
            bound_b,
            args.rounds,
        )?)
    };
    let worst = match args.relaxation {
        RelaxationKind::Finite => {
            let rel = FiniteClassRelaxation::with_scale(
                args.class.load(globals.seed)?,
                bound_b,
                args.scale,
            )?;
            worst_slacks(&rel, args, globals.seed)?
        }
        RelaxationKind::Vaw => worst_slacks(&vaw()?, args, globals.seed)?,
        RelaxationKind::Corrupted => {
            let rel = ShiftedRelaxation {
                inner: vaw()?,
                at_round: args.shift_round,
                shift: args.shift,
            };
            worst_slacks(&rel, args, globals.seed)?
        }
    };

    let mut failed = Vec::new();
    let rows: Vec<Vec<String>> = worst
        .iter()
        .enumerate()
        .map(|(t, &slack)| {
            let passed = slack >= -SLACK_TOL;
            if !passed {
                failed.push(t + 1);
            }
            vec![
                (t + 1).to_string(),
                fmt_real(slack),
                fmt_real((-slack).max(0.0)),
                passed.to_string(),
            ]
        })
        .collect();
    let csv = table(&["round", "worst_slack", "violation", "passed"], &rows)?;
    Ok((
        csv,
        Outcome::failed_if(!failed.is_empty(), || {
            format!("admissibility fails at rounds {failed:?}")
        }),
    ))
}
