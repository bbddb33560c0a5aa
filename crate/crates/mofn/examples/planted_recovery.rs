//! Verify the solver against data with known structure: on noiseless
//! planted labels the learned checklist reaches zero training error, and
//! under label noise its objective never exceeds the planted checklist's.

use mofn::model::objective_value;
use mofn::solver::{solve_checklist, CandidateSet, SolverConfig};
use mofn::synth::planted_instance;

fn main() -> mofn::Result<()> {
    let clean = planted_instance(500, 8, 4, 2, 0.0, 21)?;
    let config = SolverConfig::for_matrix(&clean.x, 1.0)?;
    let candidates = CandidateSet::from_matrix(&clean.x)?;
    let result = solve_checklist(&clean.x, &clean.y, &candidates, &config)?;
    let counts = result.best.evaluate(&clean.x, &clean.y)?;
    println!(
        "noiseless: objective {:.6}, errors {}+{}, certified {}",
        result.objective,
        counts.l_plus(),
        counts.l_minus(),
        result.certified_optimal
    );
    assert_eq!(counts.l_plus() + counts.l_minus(), 0, "clean labels must be fit exactly");

    let noisy = planted_instance(500, 8, 4, 2, 0.05, 21)?;
    println!("flipped {} of {} labels", noisy.flipped.len(), noisy.y.len());
    let config = SolverConfig::for_matrix(&noisy.x, 1.0)?;
    let candidates = CandidateSet::from_matrix(&noisy.x)?;
    let result = solve_checklist(&noisy.x, &noisy.y, &candidates, &config)?;
    let planted_counts = noisy.planted.evaluate(&noisy.x, &noisy.y)?;
    let planted_objective = objective_value(
        &planted_counts,
        noisy.planted.n_rules(),
        noisy.planted.m_required(),
        &config.weights,
    );
    println!(
        "noisy: learned objective {:.6} <= planted objective {:.6}",
        result.objective, planted_objective
    );
    assert!(
        result.objective <= planted_objective + 1e-12,
        "an exact solver can never lose to the planted checklist"
    );
    Ok(())
}
