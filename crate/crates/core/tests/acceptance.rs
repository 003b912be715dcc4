//! Acceptance suite. Prints one `PASS`/`FAIL` line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Criterion 9 drives the `onreg` binary, which `cargo test --workspace`
//! builds next to this test's `deps/` directory.

use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::sync::Arc;
use std::time::{Duration, Instant};

use onreg::adversary::{
    episode_regrets, lower_bound_value, mean_and_stderr, stochastic_environment, BlockAdversary,
    LowerRegime, ShatteringAdversary,
};
use onreg::complexity::{
    cover_fat_relation_check, dudley_offset_bound_with, fat_shattering_dim, offset_rademacher,
    theorem1_rate, EntropyFunction, Estimator, FatOptions, Integration, Norm, RateSpec, Regime,
};
use onreg::exec::{stream_rng, Execution};
use onreg::forecasters::{
    admissibility_check, relaxation_ledger, relaxation_predict, response_grid, unit_ball_features,
    vaw_regret_bound, FiniteClassRelaxation, FiniteExperts, Relaxation, SolveMode, VawForecaster,
    VawRelaxation,
};
use onreg::{
    regret, run_game, Comparator, CovariateTree, Environment, Forecaster, FunctionClass,
    GameConfig, RealTree, Round,
};
use rand::Rng;

struct Verdict {
    passed: bool,
    detail: String,
}

impl Verdict {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self {
            passed,
            detail: detail.into(),
        }
    }

    fn within(self, elapsed: Duration, limit: Option<Duration>) -> Self {
        match limit {
            Some(limit) if elapsed > limit => {
                Verdict::new(false, format!("{}; runtime over {:?}", self.detail, limit))
            }
            _ => self,
        }
    }
}

type Outcome = onreg::Result<Verdict>;

fn criterion1() -> Outcome {
    const GAMES: u64 = 200;
    const N: usize = 50;
    const BETA: f64 = 0.25;
    let mut games = 0usize;
    let mut violations = 0usize;
    let mut worst = f64::NEG_INFINITY;
    for size in [2usize, 5, 16] {
        for bound_b in [1.0, 2.0] {
            for shattering in [false, true] {
                let regrets = Execution::Parallel.map(
                    GAMES as usize,
                    |i| -> onreg::Result<Option<(f64, f64)>> {
                        let seed = 1_000 * size as u64 + i as u64;
                        let class =
                            Arc::new(FunctionClass::random(&mut stream_rng(seed, 0), size, 8));
                        let mut env: Box<dyn Environment> = if shattering {
                            let Some((x, s)) =
                                fat_shattering_dim(&class, BETA, &FatOptions::default())?.trees
                            else {
                                return Ok(None);
                            };
                            let base = ShatteringAdversary::new(x, s, &class, BETA, bound_b)?;
                            Box::new(BlockAdversary::for_horizon(base, N)?)
                        } else {
                            let f_star = class.rows()[0].clone();
                            Box::new(stochastic_environment(f_star, 0.5, bound_b)?)
                        };
                        let mut forecaster = FiniteExperts::new(class.clone(), bound_b)?;
                        let config = GameConfig::new(N, bound_b, 0.0, seed)?;
                        let transcript = run_game(&mut forecaster, env.as_mut(), &config)?;
                        Ok(Some((
                            regret(&transcript, class.as_ref())?,
                            forecaster.regret_bound(),
                        )))
                    },
                );
                for r in regrets {
                    if let Some((reg, bound)) = r? {
                        games += 1;
                        worst = worst.max(reg - bound);
                        if reg > bound + 1e-9 {
                            violations += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(Verdict::new(
        violations == 0 && games > 0,
        format!("{games} games, {violations} violations, max(regret - B²log|F|) = {worst:.4}"),
    ))
}

fn criterion2() -> Outcome {
    const SEEDS: u64 = 100;
    const N: usize = 200;
    const D: usize = 3;
    const LAMBDA: f64 = 1.0;
    let lattice: Vec<f64> = (0..=40).map(|k| -2.0 + 0.1 * k as f64).collect();
    let bound = vaw_regret_bound(N, D, LAMBDA, 1.0, 0.0) + 1e-6;
    let results = Execution::Parallel.map(SEEDS as usize, |seed| -> onreg::Result<f64> {
        let mut rng = stream_rng(seed as u64, 0);
        let features = unit_ball_features(&mut rng, 32, D);
        let w: Vec<f64> = (0..D)
            .map(|_| rng.random_range(-1.0..=1.0) / (D as f64).sqrt())
            .collect();
        let f_star = features
            .iter()
            .map(|x| (0..D).map(|j| w[j] * x[j]).sum())
            .collect();
        let mut env = stochastic_environment(f_star, 0.5, 1.0)?;
        let mut forecaster = VawForecaster::new(features.clone(), LAMBDA, 1.0, SolveMode::Dense)?;
        let transcript = run_game(
            &mut forecaster,
            &mut env,
            &GameConfig::new(N, 1.0, 0.0, seed as u64)?,
        )?;

        // Σ(fᵀx - y)² = fᵀGf - 2fᵀb + Σy², evaluated over the whole lattice.
        let mut g = [[0.0; D]; D];
        let mut b = [0.0; D];
        let mut yy = 0.0;
        for r in &transcript.rounds {
            let x = &features[r.x];
            for i in 0..D {
                b[i] += x[i] * r.y;
                for j in 0..D {
                    g[i][j] += x[i] * x[j];
                }
            }
            yy += r.y * r.y;
        }
        let mut best = f64::INFINITY;
        for &f0 in &lattice {
            for &f1 in &lattice {
                for &f2 in &lattice {
                    let f = [f0, f1, f2];
                    let mut quad = 0.0;
                    for i in 0..D {
                        for j in 0..D {
                            quad += f[i] * g[i][j] * f[j];
                        }
                    }
                    let lin: f64 = (0..D).map(|i| f[i] * b[i]).sum();
                    let norm: f64 = f.iter().map(|v| v * v).sum();
                    best = best.min(quad - 2.0 * lin + yy + LAMBDA * norm);
                }
            }
        }
        Ok(transcript.forecaster_loss() - best)
    });
    let regrets = results.into_iter().collect::<onreg::Result<Vec<_>>>()?;
    let violations = regrets.iter().filter(|&&r| r > bound).count();
    let worst = regrets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(Verdict::new(
        violations == 0,
        format!(
            "{SEEDS} seeds, {violations} violations, max regret {worst:.4} vs bound {bound:.4}"
        ),
    ))
}

struct AdmissibilitySummary {
    worst_slack: f64,
    /// `min over histories of Rel(∅) - regret`, with `Rel(∅)` recovered by
    /// telescoping the ledger.
    worst_ledger_margin: f64,
}

fn admissibility_sweep<R>(
    rel: &R,
    comparator: &(dyn Comparator + Sync),
    seed: u64,
) -> onreg::Result<AdmissibilitySummary>
where
    R: Relaxation + Sync,
{
    const HISTORIES: usize = 50;
    const ROUNDS: usize = 20;
    let b = rel.bound();
    let y_grid = response_grid(b, 41);
    let x_grid: Vec<usize> = (0..rel.domain_size()).collect();
    let per_history = Execution::Parallel.map(HISTORIES, |h| -> onreg::Result<(f64, f64)> {
        let mut rng = stream_rng(seed, h as u64 + 1);
        let mut state = rel.initial();
        let mut worst = f64::INFINITY;
        let mut rounds = Vec::with_capacity(ROUNDS);
        for _ in 0..ROUNDS {
            worst =
                worst.min(admissibility_check(rel, &state, &x_grid, &y_grid, 1e-9)?.worst_slack);
            let x = rng.random_range(0..x_grid.len());
            let y = rng.random_range(-b..=b);
            rounds.push(Round {
                x,
                y_hat: relaxation_predict(rel, &state, x)?,
                y,
            });
            state = rel.advance(&state, x, y)?;
        }
        let ledger = relaxation_ledger(rel, &rounds)?;
        let telescoped: f64 =
            ledger.iter().map(|e| e.before - e.after).sum::<f64>() + ledger[ROUNDS - 1].after;
        let reg: f64 =
            rounds.iter().map(Round::loss).sum::<f64>() - comparator.best_loss(&rounds)?;
        Ok((worst, telescoped - reg))
    });
    let mut summary = AdmissibilitySummary {
        worst_slack: f64::INFINITY,
        worst_ledger_margin: f64::INFINITY,
    };
    for r in per_history {
        let (slack, margin) = r?;
        summary.worst_slack = summary.worst_slack.min(slack);
        summary.worst_ledger_margin = summary.worst_ledger_margin.min(margin);
    }
    Ok(summary)
}

fn criterion3() -> Outcome {
    let class = Arc::new(FunctionClass::random(&mut stream_rng(3, 0), 4, 6));
    let finite = FiniteClassRelaxation::new(class.clone(), 1.0)?;
    let fin = admissibility_sweep(&finite, class.as_ref(), 3)?;

    let features = unit_ball_features(&mut stream_rng(3, 0), 8, 2);
    let vaw = VawRelaxation::new(features.clone(), 1.0, 1.0, 20)?;
    let ridge = onreg::forecasters::LinearRidge {
        features,
        lambda: 1.0,
    };
    let lin = admissibility_sweep(&vaw, &ridge, 3)?;

    let ok = |s: &AdmissibilitySummary| s.worst_slack >= -1e-9 && s.worst_ledger_margin >= -1e-9;
    Ok(Verdict::new(
        ok(&fin) && ok(&lin),
        format!(
            "finite: worst slack {:.4}, ledger margin {:.4}; vaw: worst slack {:.4}, ledger margin {:.4}",
            fin.worst_slack, fin.worst_ledger_margin, lin.worst_slack, lin.worst_ledger_margin
        ),
    ))
}

fn criterion4() -> Outcome {
    const DEPTH: usize = 10;
    const BETA: f64 = 0.5;
    const B: f64 = 4.0;
    const EPISODES: usize = 2000;
    let class = Arc::new(FunctionClass::path_signs(DEPTH, BETA / 2.0)?);
    let x_tree = CovariateTree::from_fn(DEPTH, |i| i)?;
    let witness = RealTree::constant(DEPTH, 0.0)?;
    let config = GameConfig::new(DEPTH, B, 0.0, 4)?;
    let setup = |_seed: u64| -> onreg::Result<(
        Box<dyn Forecaster>,
        Box<dyn Environment>,
        Box<dyn Comparator>,
    )> {
        let env = ShatteringAdversary::new(x_tree.clone(), witness.clone(), &class, BETA, B)?;
        Ok((
            Box::new(FiniteExperts::new(class.clone(), B)?),
            Box::new(env),
            Box::new((*class).clone()),
        ))
    };
    let regrets = episode_regrets(EPISODES, &config, Execution::Parallel, setup)?;
    let (mean, stderr) = mean_and_stderr(&regrets);
    let lower = lower_bound_value(BETA, DEPTH, DEPTH, LowerRegime::Large)?;
    Ok(Verdict::new(
        mean >= lower - 4.0 * stderr,
        format!("mean regret {mean:.4} (stderr {stderr:.2e}) vs nβ = {lower}"),
    ))
}

fn criterion5() -> Outcome {
    const DEPTH: usize = 10;
    const TRIALS: u64 = 100;
    let hits = Execution::Sequential.map(TRIALS as usize, |trial| -> onreg::Result<bool> {
        let mut rng = stream_rng(trial as u64, 0);
        let class = FunctionClass::random(&mut rng, 6, 6);
        let x = CovariateTree::from_fn(DEPTH, |_| rng.random_range(0..6))?;
        let mu = RealTree::from_fn(DEPTH, |_| rng.random_range(-1.0..=1.0))?;
        let exact = offset_rademacher(&class, &x, &mu, 1.0, Estimator::Exact, Execution::Parallel)?;
        let mc = offset_rademacher(
            &class,
            &x,
            &mu,
            1.0,
            Estimator::MonteCarlo {
                samples: 2000,
                seed: trial as u64,
            },
            Execution::Parallel,
        )?;
        Ok((mc.value - exact.value).abs() <= 4.0 * mc.stderr)
    });
    let hits = hits
        .into_iter()
        .collect::<onreg::Result<Vec<_>>>()?
        .into_iter()
        .filter(|&h| h)
        .count();

    let mut rng = stream_rng(5, 1);
    let single = FunctionClass::random(&mut rng, 1, 6);
    let x = CovariateTree::from_fn(DEPTH, |_| rng.random_range(0..6))?;
    let mu = x.map(|&xi| single.value(0, xi));
    let zero =
        offset_rademacher(&single, &x, &mu, 1.0, Estimator::Exact, Execution::Parallel)?.value;
    Ok(Verdict::new(
        hits >= 95 && zero == 0.0,
        format!("{hits}/{TRIALS} trials within 4 stderr; singleton value {zero}"),
    ))
}

fn criterion6() -> Outcome {
    let p = 4.0;
    let entropy = EntropyFunction::power(p, Norm::L2)?;
    let mut worst_gap = 0.0f64;
    let mut worst_agreement = 0.0f64;
    let mut gaps = Vec::new();
    for n in [1_000usize, 10_000, 100_000] {
        let nf = n as f64;
        let rho = [nf.powf(-1.0 / p)];
        let analytic = dudley_offset_bound_with(&entropy, 1.0, n, 1.0, &rho, Integration::Auto)?;
        let quadrature =
            dudley_offset_bound_with(&entropy, 1.0, n, 1.0, &rho, Integration::Quadrature)?;
        let proof = (4.0 + 24.0 / (p - 2.0)) * nf.powf(1.0 - 1.0 / p);
        let gap = analytic / proof - 1.0;
        gaps.push(format!("{n}: {:+.2}%", 100.0 * gap));
        worst_gap = worst_gap.max(gap.abs());
        worst_agreement = worst_agreement.max((analytic - quadrature).abs() / analytic.abs());
    }
    Ok(Verdict::new(
        worst_gap <= 0.05 && worst_agreement <= 1e-6,
        format!(
            "gap to the closed form [{}]; analytic vs quadrature {worst_agreement:.1e}",
            gaps.join(", ")
        ),
    ))
}

fn criterion7() -> Outcome {
    const INSTANCES: u64 = 1000;
    let results = Execution::Parallel.map(INSTANCES as usize, |i| -> onreg::Result<(bool, bool)> {
        let mut rng = stream_rng(7, i as u64);
        let depth = rng.random_range(1..=4);
        let size = rng.random_range(1..=6);
        let domain = rng.random_range(1..=4);
        let beta = rng.random_range(0.1..=1.0);
        let class = FunctionClass::random(&mut rng, size, domain);
        let x = CovariateTree::from_fn(depth, |_| rng.random_range(0..domain))?;
        let report = cover_fat_relation_check(&class, &x, beta)?;
        let exact = report.n2.mode.as_str() != "upper_bound_only"
            && report.n_inf.mode.as_str() != "upper_bound_only";
        Ok((report.passed, exact))
    });
    let mut violations = 0;
    let mut inexact = 0;
    for r in results {
        let (passed, exact) = r?;
        violations += usize::from(!passed);
        inexact += usize::from(!exact);
    }
    Ok(Verdict::new(
        violations == 0 && inexact == 0,
        format!("{INSTANCES} instances, {violations} violations, {inexact} covers hit the search budget"),
    ))
}

fn loglog_slope(p: f64) -> onreg::Result<f64> {
    let pts = (10..=20)
        .map(|k| {
            let n = 1usize << k;
            Ok((
                (n as f64).ln(),
                theorem1_rate(&RateSpec::new(Regime::Nonparametric { p }, n, 1.0)?)?.ln(),
            ))
        })
        .collect::<onreg::Result<Vec<_>>>()?;
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let cov: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    Ok(cov / var)
}

fn criterion8() -> Outcome {
    let s4 = loglog_slope(4.0)?;
    let s1 = loglog_slope(1.0)?;
    Ok(Verdict::new(
        (s4 + 0.25).abs() <= 0.01 && (s1 + 2.0 / 3.0).abs() <= 0.01,
        format!(
            "slope {s4:.4} at p=4 (want -0.25), {s1:.4} at p=1 (want -0.6667); formula level only"
        ),
    ))
}

fn cli_binary() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let bin = exe
        .parent()?
        .parent()?
        .join(format!("onreg{}", std::env::consts::EXE_SUFFIX));
    bin.exists().then_some(bin)
}

fn criterion9() -> Outcome {
    let Some(bin) = cli_binary() else {
        return Ok(Verdict::new(
            false,
            "onreg binary not found; run through `cargo test --workspace`",
        ));
    };
    let dir = std::env::temp_dir().join(format!("onreg-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let commands: [&[&str]; 8] = [
        &["run", "--seeds", "0..6", "--horizons", "10,50"],
        &["run", "--env", "block", "--seeds", "0..4"],
        &[
            "run",
            "--forecaster",
            "vaw",
            "--seeds",
            "0..4",
            "--horizons",
            "100",
        ],
        &["bound", "--regime", "p=4", "--with-constants"],
        &[
            "complexity",
            "--depth",
            "3",
            "--quantities",
            "fat,cover_l2,cover_linf,offset,offset_sup,chain",
        ],
        &[
            "complexity",
            "--depth",
            "10",
            "--quantities",
            "offset",
            "--samples",
            "20000",
        ],
        &["lowerbound", "--episodes", "200"],
        &["admissibility", "--relaxation", "vaw"],
    ];
    let mut differing = Vec::new();
    for (i, args) in commands.iter().enumerate() {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let out = dir.join(format!("{i}-{run}.csv"));
            let status = Command::new(&bin)
                .args(["--seed", "11", "--out"])
                .arg(&out)
                .args(*args)
                .stderr(Stdio::null())
                .status()?;
            outputs.push((status.code(), std::fs::read(&out).unwrap_or_default()));
        }
        if outputs[0] != outputs[1] || outputs[0].1.is_empty() {
            differing.push(args.join(" "));
        }
    }
    std::fs::remove_dir_all(&dir).ok();
    Ok(Verdict::new(
        differing.is_empty(),
        format!(
            "{} commands run twice, differing: {differing:?}",
            commands.len()
        ),
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Option<u64>); 9] = [
        ("finite-experts regret bound", criterion1, Some(10)),
        ("VAW regret bound", criterion2, Some(30)),
        ("admissibility and ledger", criterion3, Some(20)),
        ("lower-bound witnessing", criterion4, Some(60)),
        ("offset Rademacher consistency", criterion5, None),
        ("chaining-bound arithmetic", criterion6, None),
        ("cover-fat chain", criterion7, None),
        ("phase transition slopes", criterion8, None),
        ("CLI determinism", criterion9, None),
    ];
    let mut failed = 0;
    for (i, (name, check, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let verdict = match check() {
            Ok(v) => v.within(start.elapsed(), limit.map(Duration::from_secs)),
            Err(e) => Verdict::new(false, format!("error: {e}")),
        };
        let tag = if verdict.passed { "PASS" } else { "FAIL" };
        failed += usize::from(!verdict.passed);
        println!(
            "criterion {} {tag} {name}: {} ({:.2}s)",
            i + 1,
            verdict.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
