use std::collections::BTreeMap;
use std::fmt::Write as _;

use indexmap::IndexMap;
use serde::Serialize;

use super::{MixtureStream, SourceSet, StreamConfig, StreamError};
use crate::rates::MixtureSpec;
use crate::registry::Family;

/// Empirical composition of a run of draws.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompositionReport {
    pub total: u64,
    pub unsupervised: u64,
    /// Supervised tasks in order of first appearance.
    pub tasks: IndexMap<String, u64>,
    pub families: BTreeMap<Family, u64>,
}

impl CompositionReport {
    fn fraction(&self, count: u64) -> f64 {
        count as f64 / self.total as f64
    }

    pub fn task_count(&self, task: &str) -> u64 {
        self.tasks.get(task).copied().unwrap_or(0)
    }

    pub fn task_fraction(&self, task: &str) -> f64 {
        self.fraction(self.task_count(task))
    }

    pub fn family_fraction(&self, family: Family) -> f64 {
        self.fraction(self.families.get(&family).copied().unwrap_or(0))
    }

    pub fn unsupervised_fraction(&self) -> f64 {
        self.fraction(self.unsupervised)
    }

    /// `kind  name  count  fraction` rows: unsupervised, then tasks, then families.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("kind\tname\tcount\tfraction\n");
        let mut row = |kind: &str, name: &str, count: u64| {
            let _ = writeln!(out, "{kind}\t{name}\t{count}\t{:.6}", self.fraction(count));
        };
        row("total", "-", self.total);
        row("unsupervised", "-", self.unsupervised);
        for (task, &n) in &self.tasks {
            row("task", task, n);
        }
        for (fam, &n) in &self.families {
            row("family", fam.tag(), n);
        }
        out
    }
}

/// Consumes `n` draws from `stream` and tallies them.
pub fn composition_stats(stream: &mut MixtureStream<'_>, n: u64) -> Result<CompositionReport, StreamError> {
    if n == 0 {
        return Err(StreamError::InvalidConfig("composition needs at least one draw".into()));
    }
    let mut report = CompositionReport {
        total: n,
        unsupervised: 0,
        tasks: IndexMap::new(),
        families: BTreeMap::new(),
    };
    for _ in 0..n {
        let r = stream.next_record()?;
        match r.family {
            None => report.unsupervised += 1,
            Some(f) => {
                *report.tasks.entry(r.task).or_default() += 1;
                *report.families.entry(f).or_default() += 1;
            }
        }
    }
    Ok(report)
}

/// Replays every shard twice for `n` draws. True iff each shard reproduces
/// itself and no two shards emit the same sequence.
pub fn shard_partition_check(
    mix: &MixtureSpec,
    sources: &SourceSet,
    seed: u64,
    shard_count: u64,
    n: usize,
) -> Result<bool, StreamError> {
    if shard_count == 0 {
        return Err(StreamError::InvalidConfig("shard_count must be positive".into()));
    }
    let run = |shard: u64| -> Result<Vec<_>, StreamError> {
        let cfg = StreamConfig::new(seed).with_shard(shard, shard_count);
        MixtureStream::open(mix, sources, cfg)?.take(n).collect()
    };
    let mut streams = Vec::with_capacity(shard_count as usize);
    for shard in 0..shard_count {
        let first = run(shard)?;
        if first != run(shard)? {
            return Ok(false);
        }
        streams.push(first);
    }
    for (i, a) in streams.iter().enumerate() {
        if streams[i + 1..].iter().any(|b| a == b) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates::{RRatio, RateTable};
    use crate::stream::{SyntheticSource, SyntheticTextSource};

    #[test]
    fn report_sums_to_total() {
        let table = RateTable::new([("a".to_string(), 2.0), ("b".to_string(), 1.0)]).unwrap();
        let mix = MixtureSpec::new(table, RRatio::new(1.0).unwrap(), None).unwrap();
        let src = SourceSet::new()
            .with_task("a", Family::Nli, SyntheticSource::new("a", 10))
            .with_task("b", Family::Cls, SyntheticSource::new("b", 10))
            .with_unsupervised("web", SyntheticTextSource::new(10, 0, 4, 8));
        let mut s = MixtureStream::open(&mix, &src, StreamConfig::new(5)).unwrap();
        let rep = composition_stats(&mut s, 1000).unwrap();
        assert_eq!(rep.unsupervised + rep.tasks.values().sum::<u64>(), 1000);
        assert_eq!(rep.families.values().sum::<u64>(), rep.tasks.values().sum::<u64>());
        let fr = rep.unsupervised_fraction() + rep.task_fraction("a") + rep.task_fraction("b");
        assert!((fr - 1.0).abs() < 1e-9);
        assert_eq!(s.draws(), 1000);
        assert!(composition_stats(&mut s, 0).is_err());
        assert!(rep
            .to_tsv()
            .starts_with("kind\tname\tcount\tfraction\ntotal\t-\t1000\t1.000000\n"));
    }

    #[test]
    fn shards_differ_and_replay() {
        let table = RateTable::new([("a".to_string(), 1.0), ("b".to_string(), 1.0)]).unwrap();
        let mix = MixtureSpec::new(table, RRatio::new(0.0).unwrap(), None).unwrap();
        let src = SourceSet::new()
            .with_task("a", Family::Nli, SyntheticSource::new("a", 10))
            .with_task("b", Family::Cls, SyntheticSource::new("b", 10));
        assert!(shard_partition_check(&mix, &src, 0, 1, 64).unwrap());
        assert!(shard_partition_check(&mix, &src, 0, 4, 64).unwrap());
        assert!(shard_partition_check(&mix, &src, 0, 0, 64).is_err());
    }
}
