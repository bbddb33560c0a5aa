//! Release gates for the crate, one test per criterion. Each prints a
//! bracketed scorecard line; run with `--nocapture` to see them all.

use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use mofn::baselines::{mlp_loss_grad, sets_loss_grad, DummyModel, MlpModel};
use mofn::model::objective_from_errors;
use mofn::pipeline::{cmd_ingest, cmd_report, cmd_train, Method, RunConfig};
use mofn::solver::{
    bound_partial, brute_force_oracle, solve_checklist, CandidateSet, OracleCaps, SearchState,
    SolverConfig,
};
use mofn::synth::{planted_instance, write_synthetic_psv_dir};
use mofn::{
    classification_metrics, dummy_fit, mean_threshold_solve, objective_value, FeatureMatrix,
    Labels,
};

const LAMBDA_CYCLE: [f64; 3] = [0.5, 1.0, 2.0];

/// Random instance whose values sit on a five-point grid, so every feature
/// has at most four midpoint candidates plus the sentinel.
fn grid_instance(seed: u64) -> (FeatureMatrix, Labels, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(10..=40);
    let d = rng.gen_range(1..=4);
    let values: Vec<f64> = (0..n * d).map(|_| rng.gen_range(0..5) as f64).collect();
    let names = (0..d).map(|j| format!("g{j}")).collect();
    let x = FeatureMatrix::new(values, n, d, names).unwrap();
    let y = Labels::new((0..n).map(|_| rng.gen_bool(0.4)).collect()).unwrap();
    let lambda = LAMBDA_CYCLE[(seed % 3) as usize];
    (x, y, lambda)
}

#[test]
fn exact_solver_matches_exhaustive_enumeration_across_seeded_instances() {
    let started = Instant::now();
    for s in 0..50u64 {
        let (x, y, lambda) = grid_instance(1000 + s);
        let candidates = CandidateSet::from_matrix(&x).unwrap();
        assert!(candidates.max_per_feature() <= 5);
        let config = SolverConfig::for_matrix(&x, lambda).unwrap();
        let solved = solve_checklist(&x, &y, &candidates, &config).unwrap();
        let oracle = brute_force_oracle(&x, &y, &candidates, &config, OracleCaps::default())
            .unwrap();
        assert!(solved.certified_optimal, "instance {s}: no certificate");
        assert_eq!(
            solved.objective, oracle.objective,
            "instance {s}: solver {} vs enumeration {}",
            solved.objective, oracle.objective
        );
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "took {elapsed:.1}s, budget is 60s");
    println!(
        "[PASS] exact solver equals exhaustive enumeration on 50 seeded instances ({elapsed:.1}s)"
    );
}

#[test]
fn planted_checklist_is_recovered_clean_and_under_label_noise() {
    let clean = planted_instance(500, 8, 4, 2, 0.0, 21).unwrap();
    let candidates = CandidateSet::from_matrix(&clean.x).unwrap();
    let config = SolverConfig::for_matrix(&clean.x, 1.0).unwrap();
    let result = solve_checklist(&clean.x, &clean.y, &candidates, &config).unwrap();
    let counts = result.best.evaluate(&clean.x, &clean.y).unwrap();
    assert_eq!(counts.l_plus(), 0, "missed positives on noiseless labels");
    assert_eq!(counts.l_minus(), 0, "false positives on noiseless labels");
    let planted_counts = clean.planted.evaluate(&clean.x, &clean.y).unwrap();
    let planted_objective = objective_value(
        &planted_counts,
        clean.planted.n_rules(),
        clean.planted.m_required(),
        &config.weights,
    );
    assert!(result.objective <= planted_objective);

    let noisy = planted_instance(500, 8, 4, 2, 0.05, 22).unwrap();
    let candidates = CandidateSet::from_matrix(&noisy.x).unwrap();
    let mut config = SolverConfig::for_matrix(&noisy.x, 1.0).unwrap();
    config.time_budget = 10.0;
    let result = solve_checklist(&noisy.x, &noisy.y, &candidates, &config).unwrap();
    let floor_counts = noisy.planted.evaluate(&noisy.x, &noisy.y).unwrap();
    let floor = objective_value(
        &floor_counts,
        noisy.planted.n_rules(),
        noisy.planted.m_required(),
        &config.weights,
    );
    assert!(
        result.objective <= floor,
        "objective {} above the planted noise floor {floor}",
        result.objective
    );
    println!(
        "[PASS] planted 2-of-4 recovered exactly from clean labels and to the noise floor under 5% flips"
    );
}

#[test]
fn error_trade_off_moves_monotonically_with_lambda() {
    let inst = planted_instance(60, 3, 2, 1, 0.1, 33).unwrap();
    let candidates = CandidateSet::from_matrix(&inst.x).unwrap();
    let mut trajectory = Vec::new();
    for lambda in [0.25, 0.5, 1.0, 2.0, 4.0] {
        let config = SolverConfig::for_matrix(&inst.x, lambda).unwrap();
        let result = solve_checklist(&inst.x, &inst.y, &candidates, &config).unwrap();
        assert!(result.certified_optimal, "lambda {lambda}: no certificate");
        let counts = result.best.evaluate(&inst.x, &inst.y).unwrap();
        trajectory.push((lambda, counts.l_plus(), counts.l_minus()));
    }
    for pair in trajectory.windows(2) {
        let (l0, plus0, minus0) = pair[0];
        let (l1, plus1, minus1) = pair[1];
        assert!(
            minus1 <= minus0,
            "false positives rose from {minus0} to {minus1} as lambda went {l0} -> {l1}"
        );
        assert!(
            plus1 >= plus0,
            "missed positives fell from {plus0} to {plus1} as lambda went {l0} -> {l1}"
        );
    }
    println!(
        "[PASS] certified optima trade errors monotonically over lambda {:?}",
        trajectory.iter().map(|&(l, ..)| l).collect::<Vec<_>>()
    );
}

#[test]
fn learned_thresholds_never_lose_to_column_mean_binarization() {
    for s in 0..12u64 {
        let (x, y, lambda) = if s % 2 == 0 {
            grid_instance(7000 + s)
        } else {
            let inst = planted_instance(40, 3, 2, 1, 0.05, 100 + s).unwrap();
            (inst.x, inst.y, LAMBDA_CYCLE[(s % 3) as usize])
        };
        let candidates = CandidateSet::from_matrix(&x).unwrap();
        let config = SolverConfig::for_matrix(&x, lambda).unwrap();
        let learned = solve_checklist(&x, &y, &candidates, &config).unwrap();
        let fixed = mean_threshold_solve(&x, &y, &config).unwrap();
        assert!(learned.certified_optimal, "instance {s}: learned solve uncertified");
        assert!(fixed.certified_optimal, "instance {s}: mean-threshold solve uncertified");
        assert!(
            learned.objective <= fixed.objective,
            "instance {s}: learned {} worse than mean binarization {}",
            learned.objective,
            fixed.objective
        );
    }
    println!(
        "[PASS] learned thresholds dominate column-mean binarization on all 12 instances"
    );
}

#[test]
fn analytic_gradients_match_central_differences() {
    let h = 1e-5;
    for s in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(4000 + s);
        let n = 20 + s as usize;
        let d = 3 + (s % 3) as usize;
        let values: Vec<f64> =
            (0..n * d).map(|_| (rng.gen_range(0.0..10.0f64) * 100.0).round() / 100.0).collect();
        let names = (0..d).map(|j| format!("v{j}")).collect();
        let x = FeatureMatrix::new(values, n, d, names).unwrap();
        let y = Labels::new((0..n).map(|_| rng.gen_bool(0.5)).collect()).unwrap();

        let phi: Vec<f64> = (0..d).map(|_| rng.gen_range(2.0..8.0)).collect();
        let w: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b = rng.gen_range(-0.5..0.5);
        let (tau, l2) = (0.5, 1e-3);
        let (_, grad_phi, _, _) = sets_loss_grad(&x, &y, &phi, tau, &w, b, l2).unwrap();
        let mut numeric = vec![0.0; d];
        for j in 0..d {
            let mut hi = phi.clone();
            hi[j] += h;
            let mut lo = phi.clone();
            lo[j] -= h;
            let (lhi, ..) = sets_loss_grad(&x, &y, &hi, tau, &w, b, l2).unwrap();
            let (llo, ..) = sets_loss_grad(&x, &y, &lo, tau, &w, b, l2).unwrap();
            numeric[j] = (lhi - llo) / (2.0 * h);
        }
        let rel = relative_vec_error(&grad_phi, &numeric);
        assert!(rel < 1e-4, "instance {s}: soft cut-point gradient off by {rel:.2e}");

        let mut init_rng = ChaCha8Rng::seed_from_u64(5000 + s);
        let model = MlpModel::init_seeded(d, 8, &mut init_rng).unwrap();
        let (_, grad) = mlp_loss_grad(&model, &x, &y, l2, None).unwrap();
        let params = model.flat_params();
        let mut numeric = vec![0.0; params.len()];
        let mut probe = model.clone();
        for p in 0..params.len() {
            let mut hi = params.clone();
            hi[p] += h;
            probe.set_flat_params(&hi).unwrap();
            let (lhi, _) = mlp_loss_grad(&probe, &x, &y, l2, None).unwrap();
            let mut lo = params.clone();
            lo[p] -= h;
            probe.set_flat_params(&lo).unwrap();
            let (llo, _) = mlp_loss_grad(&probe, &x, &y, l2, None).unwrap();
            numeric[p] = (lhi - llo) / (2.0 * h);
        }
        let rel = relative_vec_error(&grad, &numeric);
        assert!(rel < 1e-3, "instance {s}: network gradient off by {rel:.2e}");
    }
    println!(
        "[PASS] analytic gradients match central differences on 10 instances (soft cut points < 1e-4, network < 1e-3)"
    );
}

fn relative_vec_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
    let na: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    diff / na.max(nb).max(1e-12)
}

#[test]
fn partial_state_bounds_never_exceed_any_completion_objective() {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut checked = 0usize;
    let mut instance = 0u64;
    while checked < 1000 {
        let n = 12;
        let d = 3;
        let values: Vec<f64> =
            (0..n * d).map(|_| rng.gen_range(0..4) as f64).collect();
        let names = (0..d).map(|j| format!("b{j}")).collect();
        let x = FeatureMatrix::new(values, n, d, names).unwrap();
        let y = Labels::new((0..n).map(|_| rng.gen_bool(0.5)).collect()).unwrap();
        let candidates = CandidateSet::from_matrix(&x).unwrap();
        let weights = SolverConfig::for_matrix(&x, LAMBDA_CYCLE[(instance % 3) as usize])
            .unwrap()
            .weights;
        instance += 1;

        for _ in 0..250 {
            if checked >= 1000 {
                break;
            }
            let next = rng.gen_range(0..=d);
            let mut chosen = Vec::new();
            for j in 0..next {
                if rng.gen_bool(0.5) {
                    chosen.push((j, rng.gen_range(0..candidates.feature(j).len())));
                }
            }
            let m = rng.gen_range(1..=d);
            let state = SearchState::from_choices(&x, &candidates, &chosen, next).unwrap();
            let Some(best_completion) =
                min_completion_objective(&x, &y, &candidates, &state, m, &weights)
            else {
                continue;
            };
            let bound = bound_partial(&state, &y, m, &weights, d - next);
            assert!(
                bound <= best_completion,
                "bound {bound} exceeds best completion {best_completion} at state {chosen:?}, next {next}, m {m}"
            );
            checked += 1;
        }
    }
    println!(
        "[PASS] partial-state bounds are admissible for {checked} sampled states against exhaustive completions"
    );
}

/// Minimum objective over every completion of `state` that ends with at
/// least `m` rules; `None` when no completion is a valid checklist.
fn min_completion_objective(
    x: &FeatureMatrix,
    y: &Labels,
    candidates: &CandidateSet,
    state: &SearchState,
    m: usize,
    weights: &mofn::ObjectiveWeights,
) -> Option<f64> {
    let d = x.n_features();
    let mut best: Option<f64> = None;
    let mut counts = state.counts().to_vec();
    fn recurse(
        x: &FeatureMatrix,
        y: &Labels,
        candidates: &CandidateSet,
        j: usize,
        d: usize,
        n_rules: usize,
        m: usize,
        weights: &mofn::ObjectiveWeights,
        counts: &mut Vec<u32>,
        best: &mut Option<f64>,
    ) {
        if j == d {
            if n_rules < m {
                return;
            }
            let mut misses = 0;
            let mut fps = 0;
            for (i, &c) in counts.iter().enumerate() {
                if y.value(i) {
                    if (c as usize) < m {
                        misses += 1;
                    }
                } else if c as usize >= m {
                    fps += 1;
                }
            }
            let objective = objective_from_errors(misses, fps, n_rules, m, weights);
            if best.is_none() || objective < best.unwrap() {
                *best = Some(objective);
            }
            return;
        }
        recurse(x, y, candidates, j + 1, d, n_rules, m, weights, counts, best);
        for &t in candidates.feature(j) {
            for i in 0..x.n_rows() {
                if x.value(i, j) > t {
                    counts[i] += 1;
                }
            }
            recurse(x, y, candidates, j + 1, d, n_rules + 1, m, weights, counts, best);
            for i in 0..x.n_rows() {
                if x.value(i, j) > t {
                    counts[i] -= 1;
                }
            }
        }
    }
    recurse(
        x,
        y,
        candidates,
        state.next_feature(),
        d,
        state.chosen().len(),
        m,
        weights,
        &mut counts,
        &mut best,
    );
    best
}

#[test]
fn reports_are_byte_identical_across_worker_counts() {
    let root = tempfile::tempdir().unwrap();
    let data = root.path().join("data");
    write_synthetic_psv_dir(&data, 60, 1).unwrap();

    let mut outputs = Vec::new();
    for threads in [1usize, 2, 8] {
        let mut config = RunConfig::default();
        config.data_dir = data.clone();
        config.output_dir = root.path().join(format!("out{threads}"));
        config.seed = 9;
        config.threads = threads;
        config.k_features = 5;
        config.folds.n_folds = 2;
        config.folds.fold_size = 16;
        config.folds.target_pos_fraction = 0.5;
        config.solver.time_budget_secs = 10.0;
        config.validate().unwrap();

        cmd_ingest(&config).unwrap();
        for method in [Method::Mip, Method::Lr, Method::Dummy] {
            cmd_train(&config, method).unwrap();
        }
        cmd_report(&config).unwrap();
        let text = std::fs::read(config.output_dir.join("report.txt")).unwrap();
        let json = std::fs::read(config.output_dir.join("report.json")).unwrap();
        outputs.push((threads, text, json));
    }
    for pair in outputs.windows(2) {
        let (t0, text0, json0) = &pair[0];
        let (t1, text1, json1) = &pair[1];
        assert_eq!(text0, text1, "report.txt differs between {t0} and {t1} workers");
        assert_eq!(json0, json1, "report.json differs between {t0} and {t1} workers");
    }
    println!("[PASS] pipeline reports are byte-identical across 1, 2, and 8 worker threads");
}

#[test]
fn all_negative_predictor_on_an_imbalanced_fold_scores_as_documented() {
    let n = 2200;
    let n_pos = 814;
    let mut bits = vec![false; n];
    for b in bits.iter_mut().take(n_pos) {
        *b = true;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    bits.shuffle(&mut rng);
    let y = Labels::new(bits).unwrap();
    let model: DummyModel = dummy_fit(&y);
    let predictions = model.predict(n);
    assert!(predictions.iter().all(|&p| !p), "majority class is negative");
    let m = classification_metrics(&y, &predictions).unwrap();
    assert!(
        (m.accuracy - 0.63).abs() <= 0.005,
        "accuracy {} not within 0.005 of 0.63",
        m.accuracy
    );
    assert_eq!(m.precision, 0.0);
    assert_eq!(m.recall, 0.0);
    assert_eq!(m.specificity, 1.0);
    println!(
        "[PASS] all-negative predictor on a 37%-positive fold: accuracy {:.4}, precision 0, recall 0",
        m.accuracy
    );
}

/// Directional check against the published full-scale numbers; needs a
/// local corpus of patient .psv files and a long budget, so it only runs
/// when pointed at one.
#[test]
#[ignore = "set MOFN_CLINICAL_DIR to a directory of patient .psv files and run with --ignored"]
fn full_scale_clinical_benchmark_is_directionally_reproduced() {
    let Ok(dir) = std::env::var("MOFN_CLINICAL_DIR") else {
        println!("[SKIP] full-scale benchmark: MOFN_CLINICAL_DIR not set");
        return;
    };
    let root = tempfile::tempdir().unwrap();
    let mut config = RunConfig::default();
    config.data_dir = dir.into();
    config.output_dir = root.path().join("out");
    config.solver.time_budget_secs = 900.0;
    config.validate().unwrap();

    cmd_ingest(&config).unwrap();
    let report = cmd_train(&config, Method::Mip).unwrap();
    let folds = report.per_fold_test.len() as f64;
    let accuracy: f64 = report.per_fold_test.iter().map(|m| m.accuracy).sum::<f64>() / folds;
    let recall: f64 = report.per_fold_test.iter().map(|m| m.recall).sum::<f64>() / folds;
    assert!(
        (accuracy - 0.6369).abs() <= 0.03,
        "mean accuracy {accuracy:.4} outside 63.69 +/- 3 points"
    );
    assert!((recall - 0.40).abs() <= 0.15, "mean recall {recall:.3} outside 0.40 +/- 0.15");
    for m in &report.per_fold_test {
        let n_rules = m.n_rules.expect("checklist size recorded");
        let m_required = m.m_required.expect("required count recorded");
        assert!(n_rules <= 10, "checklist grew to {n_rules} rules");
        assert!(m_required <= n_rules);
    }
    println!(
        "[PASS] full-scale benchmark: accuracy {accuracy:.4}, recall {recall:.3} within the published bands"
    );
}
