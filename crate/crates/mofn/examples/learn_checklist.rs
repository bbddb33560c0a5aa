//! Learn a checklist on a small synthetic instance and print the solver's
//! report: the rules, the required count, the objective, and whether the
//! result is certified optimal.

use mofn::solver::{solve_checklist, CandidateSet, SolverConfig};
use mofn::synth::planted_instance;

fn main() -> mofn::Result<()> {
    // 150 rows, 5 features, labels from a hidden 2-of-3 checklist
    let inst = planted_instance(150, 5, 3, 2, 0.0, 7)?;
    println!(
        "instance: {} rows, {} features, {} positive",
        inst.x.n_rows(),
        inst.x.n_features(),
        inst.y.n_pos()
    );

    let config = SolverConfig::for_matrix(&inst.x, 1.0)?;
    let candidates = CandidateSet::from_matrix(&inst.x)?;
    let result = solve_checklist(&inst.x, &inst.y, &candidates, &config)?;

    print!("{}", result.render_report(inst.x.feature_names())?);
    println!("nodes explored: {}", result.nodes_explored);

    let counts = result.best.evaluate(&inst.x, &inst.y)?;
    println!(
        "training errors: {} missed positives, {} false alarms",
        counts.l_plus(),
        counts.l_minus()
    );
    Ok(())
}
