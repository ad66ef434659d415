//! Sample a sharded stream, snapshot it, resume it and tally its composition.

use taskmix::bundled;
use taskmix::rates::{capped_proportional, normalize, r_combine, RRatio, DEFAULT_CAP};
use taskmix::stream::{
    composition_stats, write_jsonl, MixtureStream, SourceSet, StreamConfig, StreamState, SyntheticSource,
    SyntheticTextSource,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let reg = bundled::representative_registry();
    let rates = normalize(&capped_proportional(&reg, DEFAULT_CAP)?)?;
    let mix = r_combine(&rates, RRatio::new(2.0)?, "web")?;

    let mut sources = SourceSet::new().with_unsupervised("web", SyntheticTextSource::new(1_000, 7, 20, 60));
    for t in reg.tasks() {
        sources.insert_task(&t.name, t.family, SyntheticSource::new(&t.name, t.train_size as usize));
    }

    let cfg = StreamConfig::new(42).with_shard(0, 2);
    let mut stream = MixtureStream::open(&mix, &sources, cfg)?;
    let first = stream.next_batch()?;
    write_jsonl(&mut std::io::stdout().lock(), first.iter().take(4))?;

    let saved = stream.snapshot().to_json();
    let expected = stream.next_record()?;
    let mut resumed = MixtureStream::resume(&mix, &sources, cfg, &StreamState::from_json(&saved)?)?;
    assert_eq!(resumed.next_record()?, expected);
    println!("resumed at draw {} and matched", resumed.draws() - 1);

    let report = composition_stats(&mut resumed, 20_000)?;
    print!("{}", report.to_tsv());
    Ok(())
}
