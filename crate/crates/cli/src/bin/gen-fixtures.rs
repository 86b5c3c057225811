//! Regenerates the checked-in fixture corpus under `fixtures/`.
//!
//! Everything here is deterministic: the games are fixed combinatorial
//! objects, and the random representations and perturbation schedules are
//! pinned to named seeds (see the constants below). Running this binary
//! again must reproduce the files byte for byte.

use std::path::PathBuf;

use synclift_core::config::Tolerances;
use synclift_core::correlations::correlation_from_rep;
use synclift_core::games::graph_coloring_game;
use synclift_core::io::{
    to_json_string, write_atomic, ApproxRepSequenceJson, CorrelationTableJson, GameJson,
    MatrixJson, PlayerRepJson, TraceSpecJson,
};
use synclift_core::lift::{ApproxRepSequence, SequenceIndex};
use synclift_core::player::{
    deterministic_rep, perturb_rep, qubit_mub_rep, random_rep, TraceBlock, TraceSpec,
};
use synclift_core::rng::derive_seed;

/// Seed of the base representation behind the shrinking-defect sequence.
const BASE_REP_SEED: u64 = 42;
/// Root seed for the per-index perturbations of that sequence.
const SEQUENCE_NOISE_SEED: u64 = 2024;
/// Seed of the standalone random representation fixture.
const RANDOM_REP_SEED: u64 = 7;
/// Perturbation strength and seed of the standalone perturbed fixture.
const PERTURBED_EPS: f64 = 0.05;
const PERTURBED_SEED: u64 = 11;

fn write(path: &PathBuf, text: &str) {
    write_atomic(path, text).expect("write fixture");
    println!("wrote {}", path.display());
}

fn rep_shaped_json(dim: usize, tuples: &[synclift_core::player::PositiveTuple]) -> PlayerRepJson {
    PlayerRepJson {
        dim,
        questions: tuples.len(),
        answers: tuples[0].len(),
        pvms: tuples
            .iter()
            .map(|t| t.elements().iter().map(MatrixJson::from_hermitian).collect())
            .collect(),
    }
}

fn main() {
    let root = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
    });
    let tol = Tolerances::default();

    // -- games ---------------------------------------------------------
    let triangle = [(0usize, 1usize), (1, 2), (0, 2)];
    let pentagon = [(0usize, 1usize), (1, 2), (2, 3), (3, 4), (0, 4)];
    let games = [
        ("k3_2col.json", graph_coloring_game(3, &triangle, 2, &tol).unwrap()),
        ("k3_3col.json", graph_coloring_game(3, &triangle, 3, &tol).unwrap()),
        ("pentagon_3col.json", graph_coloring_game(5, &pentagon, 3, &tol).unwrap()),
    ];
    for (file, game) in &games {
        write(&root.join("games").join(file), &to_json_string(&GameJson::from_game(game)).unwrap());
    }
    // Trivial games: everything wins / a single question demanding agreement.
    let all_win = synclift_core::games::Game::new(
        2,
        2,
        false,
        vec![0.25; 4],
        vec![1u8; 16],
        &tol,
    )
    .unwrap();
    write(
        &root.join("games/all_win_x2a2.json"),
        &to_json_string(&GameJson::from_game(&all_win)).unwrap(),
    );
    let agree = synclift_core::games::Game::new(
        1,
        2,
        true,
        vec![1.0],
        vec![1, 0, 0, 1],
        &tol,
    )
    .unwrap();
    write(
        &root.join("games/single_question_agree.json"),
        &to_json_string(&GameJson::from_game(&agree)).unwrap(),
    );

    // -- representations ------------------------------------------------
    let det = deterministic_rep(&[0, 1], 2).unwrap();
    write(
        &root.join("reps/deterministic_identity_x2a2.json"),
        &to_json_string(&PlayerRepJson::from_rep(&det)).unwrap(),
    );
    write(
        &root.join("reps/mub_x2a2.json"),
        &to_json_string(&PlayerRepJson::from_rep(&qubit_mub_rep())).unwrap(),
    );
    let random = random_rep(4, 2, 2, RANDOM_REP_SEED).unwrap();
    write(
        &root.join("reps/random_d4_x2a2_seed7.json"),
        &to_json_string(&PlayerRepJson::from_rep(&random)).unwrap(),
    );
    let perturbed = perturb_rep(&random, PERTURBED_EPS, PERTURBED_SEED, &tol).unwrap();
    write(
        &root.join("reps/perturbed_d4_x2a2_eps005.json"),
        &to_json_string(&rep_shaped_json(4, &perturbed)).unwrap(),
    );

    // -- traces -----------------------------------------------------------
    for dim in [1usize, 2, 4] {
        write(
            &root.join(format!("traces/single_block_d{dim}.json")),
            &to_json_string(&TraceSpecJson::from_spec(&TraceSpec::single_block(dim))).unwrap(),
        );
    }
    let blocks = TraceSpec::new(
        vec![TraceBlock { dim: 2, weight: 0.35 }, TraceBlock { dim: 3, weight: 0.65 }],
        &tol,
    )
    .unwrap();
    write(
        &root.join("traces/blocks_2_3_w35.json"),
        &to_json_string(&TraceSpecJson::from_spec(&blocks)).unwrap(),
    );

    // -- shrinking-defect sequence and its target -------------------------
    // Perturbation levels 2^-n for indices n = 1..12; the first two levels
    // exceed the perturbation generator's 0.2 domain cap, so they are
    // clamped to it.
    let base = random_rep(4, 2, 2, BASE_REP_SEED).unwrap();
    let indices: Vec<SequenceIndex> = (1..=12u32)
        .map(|n| {
            let eps = 0.2f64.min(2f64.powi(-(n as i32)));
            SequenceIndex {
                dim: 4,
                tuples: perturb_rep(&base, eps, derive_seed(SEQUENCE_NOISE_SEED, n as u64), &tol)
                    .unwrap(),
            }
        })
        .collect();
    let sequence = ApproxRepSequence::new(2, 2, indices).unwrap();
    write(
        &root.join("sequences/shrinking_eps.json"),
        &to_json_string(&ApproxRepSequenceJson::from_sequence(&sequence)).unwrap(),
    );
    let target =
        correlation_from_rep(&base, &TraceSpec::single_block(4), &tol).unwrap();
    write(
        &root.join("sequences/shrinking_eps_target.json"),
        &to_json_string(&CorrelationTableJson::from_table(&target)).unwrap(),
    );

    // Constant exact sequence: three copies of the base representation.
    let exact_indices: Vec<SequenceIndex> = (0..3)
        .map(|_| SequenceIndex {
            dim: 4,
            tuples: base
                .pvms()
                .iter()
                .map(|p| {
                    synclift_core::player::PositiveTuple::from_elements(
                        p.projections().to_vec(),
                    )
                    .unwrap()
                })
                .collect(),
        })
        .collect();
    let exact = ApproxRepSequence::new(2, 2, exact_indices).unwrap();
    write(
        &root.join("sequences/constant_exact.json"),
        &to_json_string(&ApproxRepSequenceJson::from_sequence(&exact)).unwrap(),
    );
}
