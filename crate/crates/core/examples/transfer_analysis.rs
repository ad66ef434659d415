//! Column averages, relative gains, negative transfer and family ranking for
//! the bundled transfer grid, then the best-effort task selection it implies.

use taskmix::analytics::analyze_transfer;
use taskmix::bundled;
use taskmix::rates::best_effort_selection;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let matrix = bundled::reference_transfer_matrix();
    let report = analyze_transfer(&matrix)?;
    print!("{}", report.to_tsv());

    let chosen = best_effort_selection(&matrix, &bundled::reference_registry(), 4)?;
    let fams: Vec<&str> = report.top(4).iter().map(|f| f.tag()).collect();
    println!(
        "best-effort mixture from {}: {} tasks, {} examples",
        fams.join(", "),
        chosen.len(),
        chosen.totals().example_total
    );
    Ok(())
}
