//! Capped proportional rates, a family-pair mixture and an R-ratio binding.

use taskmix::bundled;
use taskmix::rates::{capped_proportional, family_pair_rates, normalize, r_combine, Cap, RRatio, DEFAULT_CAP};
use taskmix::registry::{filter_by_family, Family};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let reg = bundled::reference_registry();
    let rates = normalize(&capped_proportional(&reg, DEFAULT_CAP)?)?;
    let mut top: Vec<(&str, f64)> = rates.iter().collect();
    top.sort_by(|a, b| b.1.total_cmp(&a.1));
    println!("largest rates under a {DEFAULT_CAP} cap:");
    for (task, r) in top.iter().take(5) {
        println!("  {task:<24} {r:.5}");
    }

    let pair = filter_by_family(&bundled::representative_registry(), &[Family::Nli, Family::Cls])?;
    let rt = family_pair_rates(&pair, Family::Nli, Family::Cls, Cap::Unlimited)?;
    println!("NLI + CLS family-pair mixture:");
    for (task, r) in rt.iter() {
        println!("  {task:<24} {r:.5}");
    }

    let mix = r_combine(&rates, RRatio::new(2.0)?, "c4")?;
    println!(
        "R = 2: {:.4} unsupervised, {:.4} supervised",
        mix.unsupervised_fraction(),
        mix.supervised.total()
    );
    Ok(())
}
