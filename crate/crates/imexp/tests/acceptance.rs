//! Acceptance checks for the published three-state example, the error
//! calculus, and the sampling oracles. Each test prints one PASS or FAIL
//! line so a log scan shows the full scorecard.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use imexp::bounds::{linear_product_bound, refinement_distance_bound, InequalityKind};
use imexp::ctmc::{transition_bounds, validate_generator, Resolution, TransitionReport};
use imexp::interval::IntervalVector;
use imexp::linalg::{DenseMatrix, DenseVector};
use imexp::oracle::{
    brute_force_envelope, derive_seed, inequality_fuzz, random_monotone_instance, sample_trajectory,
};
use imexp::partition::Partition;
use imexp::problem::load_problem;
use imexp::propagation::{propagate, PropagationOptions};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn verdict(pass: bool, name: &str, detail: &str) {
    println!("{}: {name} ({detail})", if pass { "PASS" } else { "FAIL" });
}

/// Published three-state tables, t = 0.2, 80 uniform steps.
const TABLE_80_LOWER: [[f64; 3]; 3] = [
    [0.3164, 0.3839, 0.0421],
    [0.1545, 0.5826, 0.0927],
    [0.0635, 0.3340, 0.4019],
];
const TABLE_80_UPPER: [[f64; 3]; 3] = [
    [0.4945, 0.4984, 0.2338],
    [0.2864, 0.6921, 0.2338],
    [0.1853, 0.4432, 0.5323],
];

/// Same example at 200 uniform steps.
const TABLE_200_LOWER: [[f64; 3]; 3] = [
    [0.3181, 0.3830, 0.0420],
    [0.1541, 0.5836, 0.0924],
    [0.0633, 0.3332, 0.4033],
];
const TABLE_200_UPPER: [[f64; 3]; 3] = [
    [0.4957, 0.4972, 0.2333],
    [0.2858, 0.6928, 0.2333],
    [0.1849, 0.4421, 0.5334],
];

fn max_table_deviation(
    p_lower: &[f64],
    p_upper: &[f64],
    want_lower: &[[f64; 3]; 3],
    want_upper: &[[f64; 3]; 3],
) -> f64 {
    let mut dev = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            dev = dev.max((p_lower[i * 3 + j] - want_lower[i][j]).abs());
            dev = dev.max((p_upper[i * 3 + j] - want_upper[i][j]).abs());
        }
    }
    dev
}

fn fixture_transition(steps: u64) -> TransitionReport {
    let problem = load_problem(&fixture("three_state.json")).unwrap();
    let generator = problem.generator().unwrap();
    transition_bounds(&generator, problem.horizon, Resolution::Steps(steps)).unwrap()
}

#[test]
fn published_tables_reproduce_at_eighty_steps() {
    // Run the shipped binary on the shipped problem file and read the
    // report it writes, so the whole command path is covered.
    let dir = tempfile::tempdir().unwrap();
    let report_path = dir.path().join("report.json");
    let start = Instant::now();
    let status = std::process::Command::new(env!("CARGO_BIN_EXE_imexp"))
        .arg("ctmc")
        .arg(fixture("three_state.json"))
        .arg("--out")
        .arg(&report_path)
        .stdout(std::process::Stdio::null())
        .status()
        .unwrap();
    let elapsed = start.elapsed();
    assert!(status.success());

    let value: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    let read = |key: &str| -> Vec<f64> {
        value[key]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_f64().unwrap())
            .collect()
    };
    let dev = max_table_deviation(
        &read("p_lower"),
        &read("p_upper"),
        &TABLE_80_LOWER,
        &TABLE_80_UPPER,
    );

    let pass = dev < 5e-4 && elapsed.as_secs_f64() < 1.0;
    verdict(
        pass,
        "published tables reproduce at 80 steps",
        &format!(
            "max entry deviation {dev:.2e}, tolerance 5e-4, {:.2} s",
            elapsed.as_secs_f64()
        ),
    );
    assert!(pass, "deviation {dev:.3e}, elapsed {elapsed:?}");
}

#[test]
fn published_tables_reproduce_at_two_hundred_steps() {
    let report_80 = fixture_transition(80);
    let report_200 = fixture_transition(200);
    let dev = max_table_deviation(
        report_200.p_lower.as_row_major(),
        report_200.p_upper.as_row_major(),
        &TABLE_200_LOWER,
        &TABLE_200_UPPER,
    );

    // Successive approximations must agree to within the coarse grid's
    // own distance bound on both sides of the true envelope.
    let allowed = 2.0 * report_80.radius;
    let mut drift = 0.0f64;
    for (a, b) in report_200
        .p_lower
        .as_row_major()
        .iter()
        .zip(report_80.p_lower.as_row_major())
    {
        drift = drift.max((a - b).abs());
    }
    for (a, b) in report_200
        .p_upper
        .as_row_major()
        .iter()
        .zip(report_80.p_upper.as_row_major())
    {
        drift = drift.max((a - b).abs());
    }

    let pass = dev < 5e-4 && drift <= allowed;
    verdict(
        pass,
        "published tables reproduce at 200 steps",
        &format!("max entry deviation {dev:.2e}, cross-grid drift {drift:.2e} <= {allowed:.2e}"),
    );
    assert!(
        pass,
        "deviation {dev:.3e}, drift {drift:.3e} vs {allowed:.3e}"
    );
}

#[test]
fn radius_dominates_sampled_trajectories_and_scales_linearly() {
    let mut violations = 0usize;
    let mut samples = 0usize;
    for k in 0..200u64 {
        let (matrix, x0, grid) = random_monotone_instance(derive_seed(0xACC3, k)).unwrap();
        let horizon = grid.last();
        let report = propagate(
            &matrix,
            &IntervalVector::degenerate(x0.clone()),
            horizon,
            &grid,
            &PropagationOptions::default(),
        )
        .unwrap();
        assert!(report.sound, "instance {k} must satisfy the step condition");
        let lo = report.result.lower();
        let hi = report.result.upper();
        for s in 0..3u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(k, 0x0bb0 + s));
            let pieces = rng.gen_range(1..=3);
            let sample = sample_trajectory(&matrix, &x0, horizon, pieces, rng.gen()).unwrap();
            samples += 1;
            for i in 0..matrix.dim() {
                let e = sample.endpoint.get(i);
                if e < lo.get(i) - report.radius - 1e-9 || e > hi.get(i) + report.radius + 1e-9 {
                    violations += 1;
                }
            }
        }
    }

    let r80 = fixture_transition(80).radius;
    let r200 = fixture_transition(200).radius;
    let ratio = r200 / r80;
    let pass = violations == 0 && ratio <= 80.0 / 200.0 + 0.05;
    verdict(
        pass,
        "radius dominates sampled trajectories and scales like 1/N",
        &format!("{violations} violations over {samples} samples, radius ratio {ratio:.4}"),
    );
    assert!(pass, "{violations} violations, ratio {ratio:.4}");
}

#[test]
fn point_generator_bounds_match_the_matrix_exponential() {
    let start = Instant::now();
    let mut max_dev = 0.0f64;
    for k in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(0xDE6E, k));
        let n = rng.gen_range(2..=5);
        // Off-diagonal rates on a dyadic lattice keep the row sums exactly
        // zero after negation.
        let mut q = DenseMatrix::zeros(n);
        for i in 0..n {
            let mut total = 0.0;
            for j in 0..n {
                if i != j {
                    let rate = rng.gen_range(1..=2_000_000) as f64 / 1_048_576.0;
                    q.set(i, j, rate);
                    total += rate;
                }
            }
            q.set(i, i, -total);
        }
        let target: f64 = rng.gen_range(0.3..3.0);
        let horizon = target / q.inf_norm();

        let generator = validate_generator(&q, &q).unwrap();
        let report = transition_bounds(&generator, horizon, Resolution::Tolerance(1e-4)).unwrap();
        let truth = q.scaled(horizon).exp().unwrap();
        max_dev = max_dev
            .max(report.p_lower.sub(&truth).inf_norm())
            .max(report.p_upper.sub(&truth).inf_norm());
    }
    let elapsed = start.elapsed();

    let pass = max_dev <= 1e-4 && elapsed.as_secs_f64() < 10.0;
    verdict(
        pass,
        "point-generator bounds match the matrix exponential",
        &format!(
            "max operator-norm deviation {max_dev:.2e} over 100 generators, {:.2} s",
            elapsed.as_secs_f64()
        ),
    );
    assert!(pass, "deviation {max_dev:.3e}, elapsed {elapsed:?}");
}

#[test]
fn greedy_propagation_equals_brute_force_enumeration() {
    let mut max_gap = 0.0f64;
    for k in 0..50u64 {
        let (matrix, x0, grid) = random_monotone_instance(derive_seed(0xB007, k)).unwrap();
        let brute = brute_force_envelope(&matrix, &x0, &grid).unwrap();
        let greedy = propagate(
            &matrix,
            &IntervalVector::degenerate(x0),
            grid.last(),
            &grid,
            &PropagationOptions::default(),
        )
        .unwrap();
        for i in 0..matrix.dim() {
            max_gap = max_gap
                .max((brute.lower().get(i) - greedy.result.lower().get(i)).abs())
                .max((brute.upper().get(i) - greedy.result.upper().get(i)).abs());
        }
    }

    let pass = max_gap <= 1e-9;
    verdict(
        pass,
        "greedy propagation equals brute-force enumeration",
        &format!("max componentwise gap {max_gap:.2e} over 50 instances"),
    );
    assert!(pass, "gap {max_gap:.3e}");
}

#[test]
fn factor_inequalities_survive_fuzzing_and_halving_contracts() {
    let start = Instant::now();
    let mut fuzz_violations = 0usize;
    for (k, kind) in InequalityKind::ALL.into_iter().enumerate() {
        let report = inequality_fuzz(kind, 1000, derive_seed(0xF022, k as u64)).unwrap();
        fuzz_violations += report.violations;
    }

    // Halving every gap at least halves the refinement distance bound.
    let mut halving_violations = 0usize;
    let mut rng = ChaCha8Rng::seed_from_u64(0x4a1f);
    for _ in 0..100 {
        let steps: u64 = rng.gen_range(1..=1000);
        let max_gap: f64 = rng.gen_range(1e-3..0.5);
        let set_norm: f64 = rng.gen_range(0.01..3.0);
        let base = refinement_distance_bound(steps, max_gap, set_norm);
        for depth in 1..=10u32 {
            let scale = (1u64 << depth) as f64;
            let refined = refinement_distance_bound(steps << depth, max_gap / scale, set_norm);
            if refined > base / scale {
                halving_violations += 1;
            }
        }
    }
    let elapsed = start.elapsed();

    let pass = fuzz_violations == 0 && halving_violations == 0 && elapsed.as_secs_f64() < 60.0;
    verdict(
        pass,
        "factor inequalities survive fuzzing and halving contracts",
        &format!(
            "{fuzz_violations} fuzz violations in 9x1000 trials, {halving_violations} halving violations, {:.1} s",
            elapsed.as_secs_f64()
        ),
    );
    assert!(
        pass,
        "fuzz {fuzz_violations}, halving {halving_violations}, elapsed {elapsed:?}"
    );
}

#[test]
fn sampled_trajectories_stay_inside_and_reach_the_bounds() {
    let problem = load_problem(&fixture("three_state.json")).unwrap();
    let matrix = problem.interval_matrix().unwrap();
    let grid = Partition::uniform(80, 0.0, problem.horizon).unwrap();

    let mut violations = 0usize;
    let mut unreached_faces = 0usize;
    for j in 0..3 {
        let x0 = DenseVector::basis(3, j);
        let report = propagate(
            &matrix,
            &IntervalVector::degenerate(x0.clone()),
            problem.horizon,
            &grid,
            &PropagationOptions::default(),
        )
        .unwrap();
        let lo = report.result.lower();
        let hi = report.result.upper();

        let mut seen_low = vec![f64::INFINITY; 3];
        let mut seen_high = vec![f64::NEG_INFINITY; 3];
        for k in 0..500u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(0x7e57 + j as u64, k));
            let pieces = rng.gen_range(1..=4);
            let sample =
                sample_trajectory(&matrix, &x0, problem.horizon, pieces, rng.gen()).unwrap();
            for i in 0..3 {
                let e = sample.endpoint.get(i);
                if e < lo.get(i) - report.radius - 1e-9 || e > hi.get(i) + report.radius + 1e-9 {
                    violations += 1;
                }
                seen_low[i] = seen_low[i].min(e);
                seen_high[i] = seen_high[i].max(e);
            }
        }

        // Non-vacuity: some sample must come within a tenth of the
        // interval width of every bound face.
        for i in 0..3 {
            let width = hi.get(i) - lo.get(i);
            if seen_low[i] > lo.get(i) + 0.1 * width {
                unreached_faces += 1;
            }
            if seen_high[i] < hi.get(i) - 0.1 * width {
                unreached_faces += 1;
            }
        }
    }

    let pass = violations == 0 && unreached_faces == 0;
    verdict(
        pass,
        "sampled trajectories stay inside and reach the bounds",
        &format!("{violations} violations, {unreached_faces} unreached faces, 1500 samples"),
    );
    assert!(
        pass,
        "{violations} violations, {unreached_faces} unreached faces"
    );
}

#[test]
fn enclosures_nest_under_dyadic_grid_refinement() {
    let problem = load_problem(&fixture("three_state.json")).unwrap();
    let matrix = problem.interval_matrix().unwrap();
    let base = Partition::uniform(80, 0.0, problem.horizon).unwrap();

    let mut violations = 0usize;
    let mut worst: Option<String> = None;
    for j in 0..3 {
        let x0 = IntervalVector::degenerate(DenseVector::basis(3, j));
        let mut previous: Option<(DenseVector, DenseVector)> = None;
        for depth in 0..=3u32 {
            let grid = base.dyadic_refine(depth).unwrap();
            let report = propagate(
                &matrix,
                &x0,
                problem.horizon,
                &grid,
                &PropagationOptions::default(),
            )
            .unwrap();
            let lo = report.result.lower().clone();
            let hi = report.result.upper().clone();
            if let Some((prev_lo, prev_hi)) = &previous {
                for i in 0..3 {
                    if lo.get(i) > prev_lo.get(i) + 1e-12 {
                        violations += 1;
                        worst.get_or_insert_with(|| {
                            format!(
                                "start e{j}, component {i}, depth {depth}: lower {:.4} -> {:.4}",
                                prev_lo.get(i),
                                lo.get(i)
                            )
                        });
                    }
                    if hi.get(i) < prev_hi.get(i) - 1e-12 {
                        violations += 1;
                        worst.get_or_insert_with(|| {
                            format!(
                                "start e{j}, component {i}, depth {depth}: upper {:.4} -> {:.4}",
                                prev_hi.get(i),
                                hi.get(i)
                            )
                        });
                    }
                }
            }
            previous = Some((lo, hi));
        }
    }

    let pass = violations == 0;
    verdict(
        pass,
        "enclosures nest under dyadic grid refinement",
        &format!(
            "{violations} monotonicity violations{}",
            worst.map(|w| format!("; first: {w}")).unwrap_or_default()
        ),
    );
    assert!(pass, "{violations} violations: refined grids do not nest");
}
