//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured quantities once its assertions hold. Run with
//! `cargo test -p synclift-cli --test acceptance -- --nocapture` to see them.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use synclift_core::config::Tolerances;
use synclift_core::correlations::{
    check_table, correlation_from_rep, gram_psd_check, pipeline_correlations, table_distance,
    ConvergenceMetric,
};
use synclift_core::games::{classical_sync_value, game_value, graph_coloring_game};
use synclift_core::io::{from_json_str, ApproxRepSequenceJson, CorrelationTableJson};
use synclift_core::lift::{orthogonalize_tuple, spectral_round, RoundingMode};
use synclift_core::linalg::{
    random_positive_contraction, state_two_norm, HermitianMatrix, StateVectorSpec,
};
use synclift_core::player::{
    deterministic_rep, perturb_rep, qubit_mub_rep, random_rep, validate_player_rep, PlayerRep,
    PositiveTuple, TraceSpec,
};
use synclift_core::rng::{derive_seed, rng_from_seed};

fn tol() -> Tolerances {
    Tolerances::default()
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// Criterion 1: the certified rounding bound holds for 1000 seeded random
/// positive contractions across dims {1,2,3,4,8,16}, each checked under the
/// normalized trace plus 5 random faithful states, within 1e-10, in <= 10 s.
#[test]
fn acceptance_1_certified_bound_corpus() {
    let started = Instant::now();
    let t = tol();
    let dims = [1usize, 2, 3, 4, 8, 16];
    let mut checks = 0usize;
    let mut max_ratio: f64 = 0.0;
    for trial in 0..1000u64 {
        let dim = dims[trial as usize % dims.len()];
        let mut rng = rng_from_seed(derive_seed(7, trial));
        let a = random_positive_contraction(dim, &mut rng);
        let mut states = vec![StateVectorSpec::normalized_trace(dim)];
        for _ in 0..5 {
            states.push(StateVectorSpec::random_faithful(dim, &mut rng));
        }
        for phi in &states {
            let (_, report) = spectral_round(&a, phi, &t).unwrap();
            assert!(
                report.distance <= report.bound + 1e-10,
                "trial {trial} dim {dim}: {} > {}",
                report.distance,
                report.bound
            );
            if report.bound > 1e-12 {
                max_ratio = max_ratio.max(report.distance / report.bound);
            }
            checks += 1;
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() <= 10.0, "took {elapsed:?}, budget 10 s");
    println!(
        "ACCEPTANCE 1 PASS - certified bound held in {checks} checks, max ratio {max_ratio:.6}, {elapsed:?}"
    );
}

/// Criterion 2: half the identity saturates the bound exactly
/// (both sides 1/2 under the normalized trace, within 1e-12) for
/// n in {1, 2, 4, 8}.
#[test]
fn acceptance_2_half_identity_witness() {
    let t = tol();
    for n in [1usize, 2, 4, 8] {
        let a = HermitianMatrix::identity(n).scale(0.5);
        let phi = StateVectorSpec::normalized_trace(n);
        let (_, report) = spectral_round(&a, &phi, &t).unwrap();
        assert!((report.distance - 0.5).abs() <= 1e-12, "n {n}: distance {}", report.distance);
        assert!((report.bound - 0.5).abs() <= 1e-12, "n {n}: bound {}", report.bound);
    }
    println!("ACCEPTANCE 2 PASS - half-identity witness achieves 1/2 = 1/2 for n in {{1,2,4,8}}");
}

/// Criterion 3: the scalar inequality |x - step(x)| <= 2|x^2 - x| holds on
/// the 10^4-point grid of [0, 1].
#[test]
fn acceptance_3_scalar_grid() {
    let thresh = tol().thresh;
    for i in 0..=10_000u32 {
        let x = f64::from(i) * 1e-4;
        let p = if x >= 0.5 - thresh { 1.0 } else { 0.0 };
        assert!(
            (x - p).abs() <= 2.0 * (x * x - x).abs() + 1e-12,
            "violated at x = {x}"
        );
    }
    println!("ACCEPTANCE 3 PASS - scalar inequality on 10001 grid points");
}

/// Corpus shared by criteria 4 and 5: (dim, answers, eps, rep seed, noise
/// seed) combinations yielding exactly 100 two-question instances, i.e. 200
/// perturbed tuples.
fn rounding_corpus() -> Vec<(usize, usize, f64, u64, u64)> {
    let dims = [2usize, 3, 4, 8, 16];
    let answer_counts = [2usize, 3, 4];
    let eps_levels = [0.01f64, 0.05, 0.1];
    let mut corpus = Vec::new();
    let mut k = 0u64;
    while corpus.len() < 100 {
        let dim = dims[k as usize % dims.len()];
        let answers = answer_counts[(k / 2) as usize % answer_counts.len()].min(dim);
        let eps = eps_levels[(k / 3) as usize % eps_levels.len()];
        corpus.push((dim, answers, eps, derive_seed(100, k), derive_seed(200, k)));
        k += 1;
    }
    corpus
}

/// Criterion 4: rounding 200 seeded perturbed tuples (eps in
/// {0.01, 0.05, 0.1}, dims <= 16, answers <= 4) yields exact PVMs within
/// 1e-10 and every rounding step within its certified bound + 1e-10,
/// in <= 30 s.
#[test]
fn acceptance_4_rounding_correctness() {
    let started = Instant::now();
    let t = tol();
    let mut tuples_rounded = 0usize;
    for (dim, answers, eps, rep_seed, noise_seed) in rounding_corpus() {
        let rep = random_rep(dim, 2, answers, rep_seed).unwrap();
        let tuples = perturb_rep(&rep, eps, noise_seed, &t).unwrap();
        let phi = StateVectorSpec::normalized_trace(dim);
        let mut pvms = Vec::new();
        for tuple in &tuples {
            let (projections, report) =
                orthogonalize_tuple(tuple, &phi, RoundingMode::PadLast, &t).unwrap();
            for e in &report.per_element {
                assert!(
                    e.rounding_distance <= e.certified_bound + 1e-10,
                    "dim {dim} answers {answers} eps {eps}: step distance {} > bound {}",
                    e.rounding_distance,
                    e.certified_bound
                );
            }
            pvms.push(synclift_core::player::PVM::from_projections(projections).unwrap());
            tuples_rounded += 1;
        }
        let rounded = PlayerRep::from_pvms(pvms).unwrap();
        let validation = validate_player_rep(&rounded, 1e-10);
        assert!(
            validation.valid,
            "dim {dim} answers {answers} eps {eps}: defects {validation:?}"
        );
    }
    assert_eq!(tuples_rounded, 200);
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() <= 30.0, "took {elapsed:?}, budget 30 s");
    println!("ACCEPTANCE 4 PASS - 200 perturbed tuples rounded to valid PVMs, {elapsed:?}");
}

/// Criterion 5: exact PVM inputs across the same corpus are fixed points up
/// to 1e-9 entrywise.
#[test]
fn acceptance_5_fixed_point() {
    let t = tol();
    let mut max_change: f64 = 0.0;
    for (dim, answers, _, rep_seed, _) in rounding_corpus() {
        let rep = random_rep(dim, 2, answers, rep_seed).unwrap();
        let phi = StateVectorSpec::normalized_trace(dim);
        for pvm in rep.pvms() {
            let tuple = PositiveTuple::from_elements(pvm.projections().to_vec()).unwrap();
            let (projections, _) =
                orthogonalize_tuple(&tuple, &phi, RoundingMode::PadLast, &t).unwrap();
            for (p, original) in projections.iter().zip(pvm.projections()) {
                let change = p.max_entry_distance(original);
                max_change = max_change.max(change);
                assert!(change <= 1e-9, "dim {dim} answers {answers}: change {change}");
            }
        }
    }
    println!("ACCEPTANCE 5 PASS - exact PVMs unchanged up to {max_change:.2e} entrywise");
}

/// Independent triple-loop two-moment evaluation used by criterion 6.
fn brute_force_table(rep: &PlayerRep) -> Vec<f64> {
    let (dim, qs, ans) = (rep.dim(), rep.questions(), rep.answers());
    let mut values = Vec::with_capacity(ans * ans * qs * qs);
    for a in 0..ans {
        for b in 0..ans {
            for x in 0..qs {
                for y in 0..qs {
                    let e = rep.projection(a, x).as_matrix();
                    let f = rep.projection(b, y).as_matrix();
                    let mut trace = num_complex::Complex64::default();
                    for i in 0..dim {
                        for k in 0..dim {
                            trace += e[(i, k)] * f[(k, i)];
                        }
                    }
                    values.push(trace.re / dim as f64);
                }
            }
        }
    }
    values
}

/// Criterion 6: every table from the seed corpus satisfies synchronicity,
/// normalization, nonnegativity and swap symmetry within 1e-10, its moment
/// matrix has min eigenvalue >= -1e-9, and small cases agree with the
/// brute-force oracle within 1e-12.
#[test]
fn acceptance_6_correlation_properties() {
    let t = tol();
    let mut reps: Vec<PlayerRep> = vec![
        deterministic_rep(&[0, 1], 2).unwrap(),
        deterministic_rep(&[0, 1, 1], 3).unwrap(),
        qubit_mub_rep(),
    ];
    for seed in 1..=8u64 {
        reps.push(random_rep(4 + (seed as usize % 3), 2, 2 + (seed as usize % 2), seed).unwrap());
    }
    for rep in &reps {
        let tau = TraceSpec::single_block(rep.dim());
        let table = correlation_from_rep(rep, &tau, &t).unwrap();
        let report = check_table(&table, 1e-10);
        assert!(report.valid, "table defects {report:?}");
        let psd = gram_psd_check(rep, &tau, &t).unwrap();
        assert!(psd.min_eigenvalue >= -1e-9, "moment matrix min {}", psd.min_eigenvalue);
    }
    // Brute-force agreement at small sizes.
    for (dim, qs, ans, seed) in [(2usize, 2usize, 2usize, 3u64), (3, 3, 3, 4), (3, 2, 3, 5)] {
        let rep = random_rep(dim, qs, ans, seed).unwrap();
        let table = correlation_from_rep(&rep, &TraceSpec::single_block(dim), &t).unwrap();
        let slow = brute_force_table(&rep);
        for (fast, slow) in table.values().iter().zip(&slow) {
            assert!((fast - slow).abs() <= 1e-12, "{fast} vs {slow}");
        }
    }
    println!(
        "ACCEPTANCE 6 PASS - {} corpus tables valid, moment matrices PSD, oracle agreement at dims <= 3",
        reps.len()
    );
}

/// Criterion 7: on the checked-in shrinking-defect sequence the lifted
/// correlations reach sup-distance <= 1e-3 to the target, every per-index
/// distance is dominated by the reported certified bounds (their sum plus
/// twice the perturbation level of that index), and the run fits in 20 s.
#[test]
fn acceptance_7_pipeline_convergence() {
    let started = Instant::now();
    let t = tol();
    let seq_json: ApproxRepSequenceJson = from_json_str(
        &std::fs::read_to_string(fixtures().join("sequences/shrinking_eps.json")).unwrap(),
    )
    .unwrap();
    let sequence = seq_json.to_sequence(&t).unwrap();
    let target_json: CorrelationTableJson = from_json_str(
        &std::fs::read_to_string(fixtures().join("sequences/shrinking_eps_target.json")).unwrap(),
    )
    .unwrap();
    let target = target_json.to_table().unwrap();

    let report = pipeline_correlations(&sequence, &target, ConvergenceMetric::Sup, &t).unwrap();
    assert_eq!(report.rows.len(), 12);

    // Recompute the per-index bound sums from a fresh lift so the domination
    // check sees every certified bound, not only the row maximum.
    let lift = synclift_core::lift::lift_sequence(&sequence, RoundingMode::PadLast, &t);
    for (row, outcome) in report.rows.iter().zip(&lift.outcomes) {
        assert_eq!(row.status, "ok", "index {} failed: {}", row.index, row.status);
        let lifted = match outcome {
            synclift_core::lift::IndexLiftOutcome::Lifted(l) => l,
            synclift_core::lift::IndexLiftOutcome::Failed(f) => {
                panic!("index {} failed: {}", f.index, f.message)
            }
        };
        let bound_sum: f64 = lifted
            .reports
            .iter()
            .flat_map(|r| r.per_element.iter().map(|e| e.certified_bound))
            .sum();
        // The fixture's perturbation level at this index (capped at the
        // generator's 0.2 domain limit).
        let eps = 0.2f64.min(2f64.powi(-(row.index as i32 + 1)));
        let distance = row.distance.unwrap();
        assert!(
            distance <= bound_sum + 2.0 * eps + 1e-9,
            "index {}: distance {distance} vs bounds {bound_sum} + 2*{eps}",
            row.index
        );
    }
    let final_distance = report.convergence.final_distance;
    assert!(final_distance <= 1e-3, "final distance {final_distance}");
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() <= 20.0, "took {elapsed:?}, budget 20 s");
    println!(
        "ACCEPTANCE 7 PASS - pipeline final sup-distance {final_distance:.3e} <= 1e-3, per-index distances dominated, {elapsed:?}"
    );
}

/// Criterion 8: triangle coloring oracle values. Three colors win exactly
/// (up to the float sum of the nine ninths of question mass); two colors
/// match an independently enumerated brute-force maximum bit for bit and
/// reproduce across repeated runs.
#[test]
fn acceptance_8_classical_oracle() {
    let t = tol();
    let triangle = [(0usize, 1usize), (1, 2), (0, 2)];
    let three = graph_coloring_game(3, &triangle, 3, &t).unwrap();
    let result3 = classical_sync_value(&three).unwrap();
    assert!((result3.value - 1.0).abs() <= 1e-14, "3-coloring value {}", result3.value);

    let two = graph_coloring_game(3, &triangle, 2, &t).unwrap();
    let result2 = classical_sync_value(&two).unwrap();
    // Independent enumeration of all 8 strategies through the table path.
    let mut best = f64::NEG_INFINITY;
    for codeword in 0..8usize {
        let f = [codeword & 1, (codeword >> 1) & 1, (codeword >> 2) & 1];
        let rep = deterministic_rep(&f, 2).unwrap();
        let table = correlation_from_rep(&rep, &TraceSpec::single_block(1), &t).unwrap();
        best = best.max(game_value(&two, &table).unwrap());
    }
    assert_eq!(result2.value.to_bits(), best.to_bits(), "oracle disagrees with enumeration");
    assert!((result2.value - 7.0 / 9.0).abs() <= 1e-12);
    let again = classical_sync_value(&two).unwrap();
    assert_eq!(result2.value.to_bits(), again.value.to_bits());
    assert_eq!(result2.argmax, again.argmax);
    println!(
        "ACCEPTANCE 8 PASS - triangle 3-coloring value {:.15}, 2-coloring value {:.15} bit-reproducible",
        result3.value, result2.value
    );
}

/// Criterion 9: every CLI command re-run with identical inputs and seed
/// produces byte-identical primary output files.
#[test]
fn acceptance_9_cli_determinism() {
    let bin = env!("CARGO_BIN_EXE_synclift");
    let fixtures = fixtures();
    let runs: Vec<(Vec<String>, Vec<&str>)> = vec![
        (
            vec![
                "verify-bound".into(),
                "--trials".into(),
                "60".into(),
                "--dims".into(),
                "1,2,4".into(),
                "--seed".into(),
                "7".into(),
            ],
            vec!["verify_bound.csv"],
        ),
        (
            vec![
                "round".into(),
                fixtures.join("reps/perturbed_d4_x2a2_eps005.json").display().to_string(),
                "--format".into(),
                "csv".into(),
            ],
            vec![
                "perturbed_d4_x2a2_eps005.rounded.json",
                "perturbed_d4_x2a2_eps005.report.json",
                "perturbed_d4_x2a2_eps005.report.csv",
            ],
        ),
        (
            vec![
                "correlate".into(),
                fixtures.join("reps/mub_x2a2.json").display().to_string(),
                fixtures.join("traces/single_block_d2.json").display().to_string(),
                "--format".into(),
                "csv".into(),
            ],
            vec!["mub_x2a2.table.json", "mub_x2a2.table.csv"],
        ),
        (
            vec![
                "pipeline".into(),
                fixtures.join("sequences/shrinking_eps.json").display().to_string(),
                fixtures.join("sequences/shrinking_eps_target.json").display().to_string(),
            ],
            vec!["shrinking_eps.convergence.csv"],
        ),
        (
            vec![
                "game".into(),
                fixtures.join("games/k3_3col.json").display().to_string(),
                "--seed".into(),
                "3".into(),
                "seesaw".into(),
                "--dim".into(),
                "3".into(),
                "--iters".into(),
                "25".into(),
            ],
            vec!["k3_3col.seesaw.json"],
        ),
        (
            vec![
                "game".into(),
                fixtures.join("games/k3_2col.json").display().to_string(),
                "classical".into(),
            ],
            vec!["k3_2col.classical.json"],
        ),
    ];

    for (args, outputs) in &runs {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        for dir in [dir_a.path(), dir_b.path()] {
            let out = Command::new(bin)
                .args(args)
                .arg("--out")
                .arg(dir)
                .output()
                .expect("command runs");
            assert!(
                out.status.success(),
                "{args:?}: {}",
                String::from_utf8_lossy(&out.stderr)
            );
        }
        for file in outputs {
            let a = std::fs::read(dir_a.path().join(file)).unwrap();
            let b = std::fs::read(dir_b.path().join(file)).unwrap();
            assert_eq!(a, b, "{file} differs across reruns of {args:?}");
        }
    }
    println!("ACCEPTANCE 9 PASS - {} command invocations byte-identical across reruns", runs.len());
}
