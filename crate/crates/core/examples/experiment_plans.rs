//! Experiment manifests and compute accounting.

use taskmix::analytics::{compare_schedules, plan_pairwise, plan_sample_efficiency, plan_scaling, tokens_seen};
use taskmix::bundled;
use taskmix::rates::RRatio;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pairwise = plan_pairwise(&bundled::TRANSFER_FAMILIES, 200_000, 128)?;
    println!(
        "pairwise study: {} runs, first {:?}, last {:?}",
        pairwise.len(),
        pairwise[0].id,
        pairwise[35].id
    );

    let reg = bundled::reference_registry();
    let scaling = plan_scaling(&reg, &[30, 55, 80], &[0, 1, 2], RRatio::new(2.0)?, 200_000, &[128, 512])?;
    println!("task scaling: {} runs", scaling.len());
    for m in scaling
        .iter()
        .filter(|m| m.subset_seed == Some(0) && m.batch_size == 128)
    {
        println!("  {} first tasks {:?}", m.id, &m.mixture.tasks[..3]);
    }

    let efficiency = plan_sample_efficiency(&[20_000, 50_000, 100_000, 200_000], 200_000, 128)?;
    println!("sample efficiency: {} runs", efficiency.len());

    println!(
        "tokens for 1M steps x 2048 x 512: {}",
        tokens_seen(1_000_000, 2048, 512)?
    );
    let steps = compare_schedules(1_000_000, 200_000, 200_000)?;
    println!(
        "steps: vanilla {}, pre-finetuning {}, multi-task pre-training {}",
        steps.vanilla, steps.prefinetune, steps.multitask_pretrain
    );
    let tokens = steps.in_tokens(2048, 512)?;
    println!(
        "tokens: vanilla {}, pre-finetuning {}, multi-task pre-training {}",
        tokens.vanilla, tokens.prefinetune, tokens.multitask_pretrain
    );
    Ok(())
}
