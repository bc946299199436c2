//! Command-line front end: problem files in, tables on stdout,
//! machine-readable reports on request.
//!
//! Exit codes: 0 for a sound result, 1 for any error, 2 for a result the
//! step condition could not certify (or a failed verification). A result
//! flagged unsound never exits 0.

use crate::bounds::InequalityKind;
use crate::ctmc::{transition_bounds, Resolution, TransitionReport};
use crate::error::{Error, Result};
use crate::interval::{IntervalMatrix, IntervalVector};
use crate::linalg::DenseVector;
use crate::oracle::{
    brute_force_envelope, derive_seed, inequality_fuzz, random_monotone_instance, sample_trajectory,
};
use crate::partition::Partition;
use crate::problem::{
    load_enclosure_report, load_problem, write_json, EnclosureReport, ProblemFile,
    SelftestReportFile, TransitionReportFile, VerifyReportFile, VerifyTarget, WitnessPair,
    SCHEMA_VERSION,
};
use crate::propagation::{propagate, steps_for_tolerance, PropagationOptions};
use clap::{Args, Parser, Subcommand};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;

pub const EXIT_SOUND: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_UNSOUND: i32 = 2;

const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(
    name = "imexp",
    version,
    about = "Guaranteed componentwise bounds for x' = Q(t)x over a matrix set, \
             with a Markov chain front end"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Enclose the solutions of x' = Q(t) x at the horizon
    ExpmBounds(ExpmArgs),
    /// Bound the transition matrix of a set-valued Markov generator
    Ctmc(CtmcArgs),
    /// Sample admissible trajectories and check them against the bounds
    Verify(VerifyArgs),
    /// Fixed-seed randomized battery: inequality fuzz and exhaustive
    /// envelope equivalence
    Selftest(SelftestArgs),
}

#[derive(Args)]
pub struct ExpmArgs {
    /// Problem file (JSON)
    pub problem: PathBuf,
    /// Override the step count from the problem file
    #[arg(long, conflicts_with = "tol")]
    pub steps: Option<u64>,
    /// Override with a target radius instead
    #[arg(long)]
    pub tol: Option<f64>,
    /// Write a machine-readable report here
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Record the per-step extremal matrices in the report
    #[arg(long)]
    pub witnesses: bool,
}

#[derive(Args)]
pub struct CtmcArgs {
    /// Problem file (JSON) with zero_row_sums
    pub problem: PathBuf,
    /// Override the step count from the problem file
    #[arg(long, conflicts_with = "tol")]
    pub steps: Option<u64>,
    /// Override with a target radius instead
    #[arg(long)]
    pub tol: Option<f64>,
    /// Write a machine-readable report here
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct VerifyArgs {
    /// Problem file (JSON); omit when checking an existing report
    #[arg(required_unless_present = "against", conflicts_with = "against")]
    pub problem: Option<PathBuf>,
    /// Check the bounds recorded in this report instead of recomputing
    #[arg(long)]
    pub against: Option<PathBuf>,
    /// Trajectories per target vector
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Largest switching-grid piece count a sample may use
    #[arg(long, default_value_t = 4)]
    pub max_pieces: usize,
    /// Override the step count from the problem file
    #[arg(long, conflicts_with = "tol")]
    pub steps: Option<u64>,
    /// Override with a target radius instead
    #[arg(long)]
    pub tol: Option<f64>,
    /// Write a machine-readable report here
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct SelftestArgs {
    #[arg(long, default_value_t = 500)]
    pub trials: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Exhaustive-envelope equivalence instances
    #[arg(long, default_value_t = 20)]
    pub envelope_checks: usize,
    /// Write a machine-readable report here
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(cli: Cli) -> i32 {
    let outcome = match cli.command {
        Command::ExpmBounds(args) => cmd_expm_bounds(&args),
        Command::Ctmc(args) => cmd_ctmc(&args),
        Command::Verify(args) => cmd_verify(&args),
        Command::Selftest(args) => cmd_selftest(&args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

/// Effective step rule: command-line flags override the file.
fn resolution(file: &ProblemFile, steps: Option<u64>, tol: Option<f64>) -> Resolution {
    if let Some(n) = steps {
        Resolution::Steps(n)
    } else if let Some(t) = tol {
        Resolution::Tolerance(t)
    } else if let Some(n) = file.steps {
        Resolution::Steps(n)
    } else {
        Resolution::Tolerance(file.tolerance.expect("validated problem"))
    }
}

fn resolve_step_count(
    matrix: &IntervalMatrix,
    x0: &IntervalVector,
    horizon: f64,
    how: Resolution,
) -> Result<u64> {
    match how {
        Resolution::Steps(0) => Err(Error::InvalidParameter {
            name: "steps",
            value: 0.0,
        }),
        Resolution::Steps(n) => Ok(n),
        Resolution::Tolerance(tol) => steps_for_tolerance(matrix, x0, horizon, tol),
    }
}

fn sound_exit(sound: bool) -> i32 {
    if sound {
        EXIT_SOUND
    } else {
        EXIT_UNSOUND
    }
}

fn print_interval_table(lower: &DenseVector, upper: &DenseVector) {
    println!("{:>9} {:>12} {:>12}", "component", "lower", "upper");
    for i in 0..lower.dim() {
        println!("{:>9} {:>12.4} {:>12.4}", i, lower.get(i), upper.get(i));
    }
}

fn print_matrix(label: &str, entries: &[f64], n: usize) {
    println!("{label}:");
    for i in 0..n {
        let row: Vec<String> = (0..n)
            .map(|j| format!("{:>9.4}", entries[i * n + j]))
            .collect();
        println!("  {}", row.join(" "));
    }
}

fn cmd_expm_bounds(args: &ExpmArgs) -> Result<i32> {
    let problem = load_problem(&args.problem)?;
    let x0 = problem.required_initial_interval()?;
    let matrix = problem.interval_matrix()?;
    let how = resolution(&problem, args.steps, args.tol);

    let (report, steps) = if problem.horizon == 0.0 {
        (zero_horizon_report(&x0), 0)
    } else {
        let steps = resolve_step_count(&matrix, &x0, problem.horizon, how)?;
        let grid = Partition::uniform(steps as usize, 0.0, problem.horizon)?;
        let options = PropagationOptions {
            record_witnesses: args.witnesses,
        };
        (
            propagate(&matrix, &x0, problem.horizon, &grid, &options)?,
            steps,
        )
    };

    println!(
        "enclosure at t = {:.4} ({} steps, {} norm)",
        problem.horizon, steps, report.norm
    );
    print_interval_table(report.result.lower(), report.result.upper());
    println!(
        "radius {:.4}  sound {}",
        report.radius,
        if report.sound { "yes" } else { "no" }
    );
    if !report.sound {
        println!("note: step condition failed; endpoints are heuristic, not certified");
    }

    if let Some(out) = &args.out {
        let witnesses = report.witnesses.as_ref().map(|ws| {
            ws.iter()
                .map(|w| WitnessPair {
                    step: w.step,
                    lower: w.lower.as_row_major().to_vec(),
                    upper: w.upper.as_row_major().to_vec(),
                })
                .collect()
        });
        let file = EnclosureReport {
            schema_version: SCHEMA_VERSION,
            tool_version: TOOL_VERSION.to_string(),
            command: "expm-bounds".to_string(),
            norm: report.norm.to_string(),
            scheme: report.scheme.to_string(),
            sound: report.sound,
            horizon: problem.horizon,
            steps,
            radius: report.radius,
            params: report.params.clone(),
            lower: report.result.lower().as_slice().to_vec(),
            upper: report.result.upper().as_slice().to_vec(),
            witnesses,
            problem: problem.clone(),
        };
        write_json(out, &file)?;
        println!("report written to {}", out.display());
    }
    Ok(sound_exit(report.sound))
}

fn zero_horizon_report(x0: &IntervalVector) -> crate::propagation::BoundReport {
    crate::propagation::BoundReport {
        result: x0.clone(),
        radius: 0.0,
        params: crate::bounds::BoundParams {
            steps: Some(0),
            set_norm: Some(0.0),
            ..crate::bounds::BoundParams::default()
        },
        sound: true,
        witnesses: None,
        norm: crate::propagation::NORM_NAME,
        scheme: crate::propagation::SCHEME_NAME,
    }
}

fn cmd_ctmc(args: &CtmcArgs) -> Result<i32> {
    let problem = load_problem(&args.problem)?;
    let generator = problem.generator()?;
    let how = resolution(&problem, args.steps, args.tol);
    let report: TransitionReport = transition_bounds(&generator, problem.horizon, how)?;
    let n = generator.dim();

    let p_lower = report.p_lower.as_row_major().to_vec();
    let p_upper = report.p_upper.as_row_major().to_vec();
    let row_sums_lower: Vec<f64> = (0..n)
        .map(|i| p_lower[i * n..(i + 1) * n].iter().sum())
        .collect();
    let row_sums_upper: Vec<f64> = (0..n)
        .map(|i| p_upper[i * n..(i + 1) * n].iter().sum())
        .collect();
    let steps = report.params.steps.unwrap_or(0);

    println!(
        "transition bounds at t = {:.4} ({} steps, {} norm)",
        report.horizon, steps, report.norm
    );
    print_matrix("P lower", &p_lower, n);
    print_matrix("P upper", &p_upper, n);
    let fmt = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:.4}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    println!("row sums, lower: {}", fmt(&row_sums_lower));
    println!("row sums, upper: {}", fmt(&row_sums_upper));
    println!(
        "radius {:.4}  sound {}",
        report.radius,
        if report.sound { "yes" } else { "no" }
    );
    if !report.sound {
        println!("note: step condition failed; bounds are heuristic, not certified");
    }

    if let Some(out) = &args.out {
        let file = TransitionReportFile {
            schema_version: SCHEMA_VERSION,
            tool_version: TOOL_VERSION.to_string(),
            command: "ctmc".to_string(),
            norm: report.norm.to_string(),
            sound: report.sound,
            horizon: report.horizon,
            steps,
            radius: report.radius,
            params: report.params.clone(),
            p_lower,
            p_upper,
            row_sums_lower,
            row_sums_upper,
            problem: problem.clone(),
        };
        write_json(out, &file)?;
        println!("report written to {}", out.display());
    }
    Ok(sound_exit(report.sound))
}

/// Bounds for one verification target, however they were obtained.
struct TargetBounds {
    name: String,
    x0: IntervalVector,
    lower: DenseVector,
    upper: DenseVector,
    radius: f64,
    sound: bool,
}

fn computed_targets(
    problem: &ProblemFile,
    matrix: &IntervalMatrix,
    how: Resolution,
) -> Result<Vec<TargetBounds>> {
    let n = matrix.dim();
    let starts: Vec<(String, IntervalVector)> = match problem.initial_interval()? {
        Some(x0) => vec![("x0".to_string(), x0)],
        None => (0..n)
            .map(|j| {
                (
                    format!("e{j}"),
                    IntervalVector::degenerate(DenseVector::basis(n, j)),
                )
            })
            .collect(),
    };
    starts
        .into_iter()
        .map(|(name, x0)| {
            let steps = resolve_step_count(matrix, &x0, problem.horizon, how)?;
            let grid = Partition::uniform(steps as usize, 0.0, problem.horizon)?;
            let report = propagate(
                matrix,
                &x0,
                problem.horizon,
                &grid,
                &PropagationOptions::default(),
            )?;
            Ok(TargetBounds {
                name,
                x0,
                lower: report.result.lower().clone(),
                upper: report.result.upper().clone(),
                radius: report.radius,
                sound: report.sound,
            })
        })
        .collect()
}

/// Checks sampled trajectory endpoints against one target's bounds.
fn check_target(
    matrix: &IntervalMatrix,
    horizon: f64,
    target: &TargetBounds,
    samples: usize,
    seed: u64,
    max_pieces: usize,
) -> Result<VerifyTarget> {
    let n = matrix.dim();
    let mut observed_lower = vec![f64::INFINITY; n];
    let mut observed_upper = vec![f64::NEG_INFINITY; n];
    let mut violations = 0usize;
    for k in 0..samples {
        let sample_seed = derive_seed(seed, k as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(sample_seed);
        let pieces = rng.gen_range(1..=max_pieces.max(1));
        let start = DenseVector::new(
            (0..n)
                .map(|i| {
                    let (lo, hi) = (target.x0.lower().get(i), target.x0.upper().get(i));
                    if lo == hi {
                        lo
                    } else {
                        rng.gen_range(lo..=hi)
                    }
                })
                .collect(),
        )?;
        let inner_seed: u64 = rng.gen();
        let sample = sample_trajectory(matrix, &start, horizon, pieces, inner_seed)?;
        let mut violated = false;
        for i in 0..n {
            let e = sample.endpoint.get(i);
            observed_lower[i] = observed_lower[i].min(e);
            observed_upper[i] = observed_upper[i].max(e);
            if e < target.lower.get(i) - target.radius - 1e-9
                || e > target.upper.get(i) + target.radius + 1e-9
            {
                violated = true;
            }
        }
        if violated {
            violations += 1;
        }
    }

    let mut max_tightness = 0.0f64;
    for i in 0..n {
        for dist in [
            observed_lower[i] - (target.lower.get(i) - target.radius),
            (target.upper.get(i) + target.radius) - observed_upper[i],
        ] {
            let ratio = if target.radius > 0.0 {
                dist / target.radius
            } else if dist.abs() <= 1e-9 {
                1.0
            } else {
                f64::INFINITY
            };
            max_tightness = max_tightness.max(ratio);
        }
    }

    Ok(VerifyTarget {
        target: target.name.clone(),
        lower: target.lower.as_slice().to_vec(),
        upper: target.upper.as_slice().to_vec(),
        radius: target.radius,
        observed_lower,
        observed_upper,
        violations,
        max_tightness,
    })
}

fn cmd_verify(args: &VerifyArgs) -> Result<i32> {
    let (problem, targets) = if let Some(report_path) = &args.against {
        let report = load_enclosure_report(report_path)?;
        let problem = report.problem.clone();
        let x0 = problem.required_initial_interval()?;
        let n = problem.dimension;
        if report.lower.len() != n || report.upper.len() != n {
            return Err(Error::Schema(format!(
                "report bounds must hold {n} entries"
            )));
        }
        let targets = vec![TargetBounds {
            name: "x0".to_string(),
            x0,
            lower: DenseVector::new(report.lower.clone())?,
            upper: DenseVector::new(report.upper.clone())?,
            radius: report.radius,
            sound: report.sound,
        }];
        (problem, targets)
    } else {
        let path = args.problem.as_ref().expect("clap requires problem");
        let problem = load_problem(path)?;
        let matrix = problem.interval_matrix()?;
        let how = resolution(&problem, args.steps, args.tol);
        let targets = computed_targets(&problem, &matrix, how)?;
        (problem, targets)
    };

    let matrix = problem.interval_matrix()?;
    let sound = targets.iter().all(|t| t.sound);
    let mut results = Vec::with_capacity(targets.len());
    for (idx, target) in targets.iter().enumerate() {
        let target_seed = derive_seed(args.seed, 0x5eed ^ idx as u64);
        results.push(check_target(
            &matrix,
            problem.horizon,
            target,
            args.samples,
            target_seed,
            args.max_pieces,
        )?);
    }

    let violations: usize = results.iter().map(|r| r.violations).sum();
    let max_tightness = results
        .iter()
        .map(|r| r.max_tightness)
        .fold(0.0f64, f64::max);

    println!(
        "verify: {} samples per target, seed {}, up to {} pieces",
        args.samples, args.seed, args.max_pieces
    );
    println!(
        "{:>8} {:>11} {:>14}",
        "target", "violations", "max tightness"
    );
    for r in &results {
        println!(
            "{:>8} {:>11} {:>14.4}",
            r.target, r.violations, r.max_tightness
        );
    }
    println!(
        "total violations {violations}  sound {}",
        if sound { "yes" } else { "no" }
    );

    if let Some(out) = &args.out {
        let file = VerifyReportFile {
            schema_version: SCHEMA_VERSION,
            tool_version: TOOL_VERSION.to_string(),
            command: "verify".to_string(),
            samples: args.samples,
            seed: args.seed,
            max_pieces: args.max_pieces,
            sound,
            violations,
            max_tightness,
            targets: results,
            problem: problem.clone(),
        };
        write_json(out, &file)?;
        println!("report written to {}", out.display());
    }

    if violations > 0 {
        println!("note: sampled trajectories escaped the bounds; see table");
        return Ok(EXIT_UNSOUND);
    }
    Ok(sound_exit(sound))
}

fn cmd_selftest(args: &SelftestArgs) -> Result<i32> {
    println!(
        "selftest: {} trials per inequality, {} envelope instances, seed {}",
        args.trials, args.envelope_checks, args.seed
    );
    let mut fuzz = Vec::new();
    let mut all_pass = true;
    println!(
        "{:>14} {:>7} {:>10} {:>10} {:>11}",
        "inequality", "trials", "violations", "max ratio", "max lhs"
    );
    for (k, kind) in InequalityKind::ALL.into_iter().enumerate() {
        let report = inequality_fuzz(kind, args.trials, derive_seed(args.seed, k as u64))?;
        println!(
            "{:>14} {:>7} {:>10} {:>10.4} {:>11.4}",
            report.kind, report.trials, report.violations, report.max_ratio, report.max_lhs
        );
        all_pass &= report.violations == 0;
        fuzz.push(report);
    }

    let mut envelope_max_gap = 0.0f64;
    for k in 0..args.envelope_checks {
        let (matrix, x0, grid) =
            random_monotone_instance(derive_seed(args.seed, 0x1000 + k as u64))?;
        let brute = brute_force_envelope(&matrix, &x0, &grid)?;
        let greedy = propagate(
            &matrix,
            &IntervalVector::degenerate(x0),
            grid.last(),
            &grid,
            &PropagationOptions::default(),
        )?;
        for i in 0..matrix.dim() {
            let gap = (brute.lower().get(i) - greedy.result.lower().get(i))
                .abs()
                .max((brute.upper().get(i) - greedy.result.upper().get(i)).abs());
            envelope_max_gap = envelope_max_gap.max(gap);
        }
    }
    println!(
        "envelope equivalence: {} instances, max gap {:.3e}",
        args.envelope_checks, envelope_max_gap
    );
    all_pass &= envelope_max_gap <= 1e-9;
    println!("selftest {}", if all_pass { "passed" } else { "FAILED" });

    if let Some(out) = &args.out {
        let file = SelftestReportFile {
            schema_version: SCHEMA_VERSION,
            tool_version: TOOL_VERSION.to_string(),
            command: "selftest".to_string(),
            seed: args.seed,
            trials_per_kind: args.trials,
            fuzz,
            envelope_checks: args.envelope_checks,
            envelope_max_gap,
            passed: all_pass,
        };
        write_json(out, &file)?;
        println!("report written to {}", out.display());
    }
    Ok(if all_pass { EXIT_SOUND } else { EXIT_ERROR })
}
