//! Load the bundled registry, print totals and per-family counts, and show
//! one formatted example.

use std::collections::BTreeMap;

use taskmix::bundled;
use taskmix::registry::{filter_by_family, format_example, Family};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let reg = bundled::reference_registry();
    let totals = reg.totals();
    println!(
        "{} tasks, {} training examples",
        totals.task_count, totals.example_total
    );

    for fam in Family::ALL {
        let sub = filter_by_family(&reg, &[fam])?;
        let t = sub.totals();
        println!(
            "  {:<5} {:>3} tasks {:>10} examples",
            fam.tag(),
            t.task_count,
            t.example_total
        );
    }

    let rep = bundled::representative_registry();
    println!(
        "representative subset: {} tasks, {} examples",
        rep.len(),
        rep.totals().example_total
    );

    let squad = reg.get("squad").expect("bundled task");
    let fields = BTreeMap::from([
        ("question".to_string(), "Where is the Eiffel Tower?".to_string()),
        ("context".to_string(), "The Eiffel Tower is in Paris.".to_string()),
        ("answer".to_string(), "Paris".to_string()),
    ]);
    let rec = format_example(squad, &fields)?;
    println!("{}", serde_json::to_string(&rec)?);
    Ok(())
}
