use clap::Args;
use onreg::complexity::{
    dudley_offset_bound, theorem1_rate, theorem1_rate_with_constants, theorem2_lower_rate,
    theorem3_optimistic_bound, theorem3_optimistic_bound_with_constants, EntropyFunction, Norm,
    RateSpec, Regime,
};
use onreg::report::fmt_real;

use crate::common::{table, usage, CliError, CommandResult, Outcome};
use crate::Globals;

/// Relative slack when checking the chaining bound against the closed-form rate.
const CONSISTENCY_TOL: f64 = 1e-9;

#[derive(Debug, Args)]
pub struct BoundArgs {
    /// `finite:size=<k>`, `parametric:d=<v>`, `p=<v>` or `nonparametric:p=<v>`.
    #[arg(long)]
    regime: String,
    #[arg(long, value_delimiter = ',', default_value = "100,1000,10000")]
    horizons: Vec<usize>,
    /// Use the constants of the proofs instead of setting them to 1.
    #[arg(long)]
    with_constants: bool,
    /// Best comparator loss fed to the optimistic bound.
    #[arg(long, default_value_t = 0.0)]
    l_star: f64,
    /// Entropy for the chaining column (default: the one matching the regime).
    #[arg(long)]
    entropy: Option<String>,
    /// Scale at which the chain starts (default: the regime's choice).
    #[arg(long)]
    gamma: Option<f64>,
    /// Candidate finest scales (default: the regime's choice).
    #[arg(long, value_delimiter = ',')]
    rho_grid: Option<Vec<f64>>,
}

/// The entropy of the regime together with the coarsest scale `γ` and
/// finest scale `ρ` that balance the chaining bound at horizon `n`.
fn chain_for(regime: Regime, n: f64) -> Result<(EntropyFunction, f64, f64), CliError> {
    Ok(match regime {
        Regime::Finite { size } => (
            EntropyFunction::constant((size as f64).ln(), Norm::L2)?,
            0.0,
            0.0,
        ),
        Regime::Parametric { d } => (
            EntropyFunction::param_log(d, Norm::L2)?,
            n.powf(-0.5),
            1.0 / n,
        ),
        Regime::Nonparametric { p } if p > 2.0 => {
            (EntropyFunction::power(p, Norm::L2)?, 1.0, n.powf(-1.0 / p))
        }
        Regime::Nonparametric { p } if p == 2.0 => {
            (EntropyFunction::power(p, Norm::L2)?, n.powf(-0.25), 1.0 / n)
        }
        Regime::Nonparametric { p } => (
            EntropyFunction::power(p, Norm::L2)?,
            n.powf(-1.0 / (2.0 + p)),
            1.0 / n,
        ),
    })
}

pub fn execute(args: &BoundArgs, globals: &Globals) -> CommandResult {
    let regime: Regime = args.regime.parse().map_err(|e| usage(format!("{e}")))?;
    if args.horizons.is_empty() {
        return Err(usage("--horizons needs at least one value"));
    }
    let bound_b = globals.bound_or(1.0);
    let entropy_override = match &args.entropy {
        Some(spec) => Some(EntropyFunction::parse(spec, Norm::L2)?),
        None => None,
    };

    let mut rows = Vec::with_capacity(args.horizons.len());
    let mut inconsistent = Vec::new();
    for &n in &args.horizons {
        let spec = RateSpec::new(regime, n, bound_b)?;
        let nf = n as f64;
        let (upper, optimistic) = if args.with_constants {
            (
                theorem1_rate_with_constants(&spec)?,
                theorem3_optimistic_bound_with_constants(&spec, args.l_star)?,
            )
        } else {
            (
                theorem1_rate(&spec)?,
                theorem3_optimistic_bound(&spec, args.l_star)?,
            )
        };
        let (entropy, gamma, rho) = chain_for(regime, nf)?;
        let entropy = entropy_override.clone().unwrap_or(entropy);
        let gamma = args.gamma.unwrap_or(gamma);
        let rho_grid = args.rho_grid.clone().unwrap_or_else(|| vec![rho]);
        let dudley = dudley_offset_bound(&entropy, gamma, n, bound_b, &rho_grid)? / nf;
        if args.with_constants
            && entropy_override.is_none()
            && dudley > upper * (1.0 + CONSISTENCY_TOL)
        {
            inconsistent.push(n);
        }
        rows.push(vec![
            n.to_string(),
            regime.to_string(),
            fmt_real(upper),
            fmt_real(theorem2_lower_rate(&spec)?),
            fmt_real(optimistic / nf),
            fmt_real(dudley),
            "true".to_string(),
        ]);
    }
    let csv = table(
        &[
            "n",
            "regime",
            "upper",
            "lower",
            "optimistic",
            "dudley",
            "normalized",
        ],
        &rows,
    )?;
    let outcome = Outcome::failed_if(!inconsistent.is_empty(), || {
        format!("chaining bound exceeds the stated upper rate at n = {inconsistent:?}")
    });
    Ok((csv, outcome))
}
