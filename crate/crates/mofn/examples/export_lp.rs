//! Export the exact training problem as LP-format text, the form accepted
//! by off-the-shelf integer-programming solvers, and show its header next
//! to the solution our own search finds.

use mofn::solver::{export_mip_form, solve_checklist, CandidateSet, SolverConfig};
use mofn::synth::planted_instance;

fn main() -> mofn::Result<()> {
    let inst = planted_instance(30, 3, 2, 2, 0.0, 5)?;
    let config = SolverConfig::for_matrix(&inst.x, 1.0)?;
    let candidates = CandidateSet::from_matrix(&inst.x)?;

    let text = export_mip_form(&inst.x, &inst.y, Some(&candidates), &config)?;
    let path = std::env::temp_dir().join("checklist_training.lp");
    std::fs::write(&path, &text)?;
    println!("wrote {} ({} lines)\n", path.display(), text.lines().count());

    println!("first lines:");
    for line in text.lines().take(12) {
        println!("  {line}");
    }

    let result = solve_checklist(&inst.x, &inst.y, &candidates, &config)?;
    println!(
        "\nour own search: objective {:.6}, certified {}",
        result.objective, result.certified_optimal
    );
    Ok(())
}
