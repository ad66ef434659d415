//! Deterministic, shardable interleaving of per-task example sources.
//!
//! Draw `t` of shard `s` takes `u = unit(splitmix(key(seed, s), t))` and picks
//! the first category whose cumulative mass exceeds `u`. Categories are the
//! unsupervised stream (when `R > 0`) followed by every positive-weight task in
//! table order. Because each draw depends only on `(seed, shard, t)`, a stream
//! can be resumed from nothing more than its draw counter and cursors.
//!
//! Each task walks its examples in a seeded Fisher–Yates order that is redrawn
//! for every epoch. Unsupervised documents are split on whitespace and
//! span-corrupted with the stream's corruption settings.

mod report;
mod source;

use std::io::Write;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corruption::{apply_spans, corrupt, CorruptionConfig, CorruptionError};
use crate::rates::MixtureSpec;
use crate::registry::{ExampleRecord, Family};
use crate::rng::{counter_value, derive_key, domain, fnv1a64, unit_f64, SplitMix64};

pub use report::{composition_stats, shard_partition_check, CompositionReport};
pub use source::{
    ExampleSource, SourceSet, SyntheticSource, SyntheticTextSource, TaskSource, TextPair, TextSource, VecSource,
    VecTextSource,
};

/// Version tag written into every [`StreamState`] snapshot.
pub const STATE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum StreamError {
    #[error("invalid stream config: {0}")]
    InvalidConfig(String),
    #[error("no source for task {0:?}")]
    MissingSource(String),
    #[error("source for {0:?} has no examples")]
    EmptySource(String),
    #[error("{0}")]
    SourceMismatch(String),
    #[error("mixture has no positive weight to sample from")]
    EmptyMixture,
    #[error("non-repeatable source {0:?} is exhausted")]
    Exhausted(String),
    #[error("corrupting draw {draw}: {source}")]
    Corruption {
        draw: u64,
        #[source]
        source: CorruptionError,
    },
    #[error("cannot restore state: {0}")]
    State(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamConfig {
    pub seed: u64,
    pub shard_index: u64,
    pub shard_count: u64,
    pub batch_size: usize,
    /// Whitespace-token budgets; longer texts keep their head and are flagged.
    pub max_input_len: usize,
    pub max_target_len: usize,
    pub corruption: CorruptionConfig,
}

impl StreamConfig {
    /// Single shard, batch of 128, 512/512 token budgets, default corruption.
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            shard_index: 0,
            shard_count: 1,
            batch_size: 128,
            max_input_len: 512,
            max_target_len: 512,
            corruption: CorruptionConfig::default(),
        }
    }

    pub fn with_shard(mut self, index: u64, count: u64) -> Self {
        self.shard_index = index;
        self.shard_count = count;
        self
    }

    pub fn validate(&self) -> Result<(), StreamError> {
        let bad = |m: String| Err(StreamError::InvalidConfig(m));
        if self.shard_count == 0 || self.shard_index >= self.shard_count {
            return bad(format!("shard {}/{} out of range", self.shard_index, self.shard_count));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        if self.max_input_len == 0 || self.max_target_len == 0 {
            return bad("length budgets must be positive".into());
        }
        self.corruption
            .validate()
            .map_err(|e| StreamError::InvalidConfig(e.to_string()))
    }
}

/// Position within the current epoch, and how many full passes preceded it.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cursor {
    pub position: u64,
    pub epoch: u64,
}

/// Everything needed to resume a stream exactly. Serialized as JSON; all
/// integers are exact and the PRNG key is a fixed-width hex string.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamState {
    pub version: u32,
    pub seed: u64,
    pub shard_index: u64,
    pub shard_count: u64,
    /// Total records emitted; the PRNG counter for the next draw.
    pub draws: u64,
    /// Hex key of the counter-based PRNG for this shard.
    pub prng_key: String,
    /// Hash of the mixture and the record-shaping config.
    pub fingerprint: String,
    pub cursors: IndexMap<String, Cursor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unsupervised: Option<Cursor>,
}

impl StreamState {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("state serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, StreamError> {
        serde_json::from_str(text).map_err(|e| StreamError::State(e.to_string()))
    }
}

struct Lane<'a> {
    name: String,
    family: Option<Family>,
    len: u64,
    repeatable: bool,
    cursor: Cursor,
    order: Option<(u64, Vec<u32>)>,
    supervised: Option<&'a dyn ExampleSource>,
    text: Option<&'a dyn TextSource>,
}

impl Lane<'_> {
    /// Advances the cursor and returns the source index to read.
    fn advance(&mut self, seed: u64, shard: u64) -> Result<u64, StreamError> {
        if self.cursor.position == self.len {
            if !self.repeatable {
                return Err(StreamError::Exhausted(self.name.clone()));
            }
            self.cursor.epoch += 1;
            self.cursor.position = 0;
        }
        let pos = self.cursor.position;
        let idx = if self.repeatable {
            let epoch = self.cursor.epoch;
            if self.order.as_ref().map(|(e, _)| *e) != Some(epoch) {
                let key = derive_key(&[domain::RESHUFFLE, seed, shard, fnv1a64(self.name.as_bytes()), epoch]);
                let mut order: Vec<u32> = (0..self.len as u32).collect();
                SplitMix64::new(key).shuffle(&mut order);
                self.order = Some((epoch, order));
            }
            self.order.as_ref().expect("order cached").1[pos as usize] as u64
        } else {
            pos
        };
        self.cursor.position += 1;
        Ok(idx)
    }
}

/// A single-owner stream handle over borrowed sources.
pub struct MixtureStream<'a> {
    cfg: StreamConfig,
    key: u64,
    fingerprint: u64,
    draws: u64,
    /// Cumulative masses, one per lane; the last is `+inf`.
    cumulative: Vec<f64>,
    lanes: Vec<Lane<'a>>,
    has_unsupervised: bool,
    corruption: CorruptionConfig,
}

fn fingerprint(mix: &MixtureSpec, cfg: &StreamConfig) -> u64 {
    let c = &cfg.corruption;
    let text = format!(
        "{}budgets={},{}\ncorruption={},{},{}\n",
        mix.to_tsv(),
        cfg.max_input_len,
        cfg.max_target_len,
        c.noise_density,
        c.mean_span_length,
        c.seed
    );
    fnv1a64(text.as_bytes())
}

/// Keeps the first `max` whitespace tokens of `s`, or `None` if it already fits.
fn truncate_words(s: &str, max: usize) -> Option<&str> {
    let mut words = s.split_whitespace();
    let last = words.nth(max.checked_sub(1)?)?;
    words.next()?;
    let end = last.as_ptr() as usize - s.as_ptr() as usize + last.len();
    Some(&s[..end])
}

impl<'a> MixtureStream<'a> {
    pub fn open(mix: &MixtureSpec, sources: &'a SourceSet, cfg: StreamConfig) -> Result<Self, StreamError> {
        cfg.validate()?;
        let r = mix.r_ratio;
        let wants_unsupervised = r.get() > 0.0;
        match (&sources.unsupervised, wants_unsupervised) {
            (None, true) => {
                return Err(StreamError::SourceMismatch(format!(
                    "r_ratio {r} needs an unsupervised text source"
                )))
            }
            (Some((id, _)), false) => {
                return Err(StreamError::SourceMismatch(format!(
                    "unsupervised source {id:?} given but r_ratio is 0"
                )))
            }
            (Some((id, _)), true) => {
                if let Some(want) = &mix.unsupervised_source {
                    if want != id {
                        return Err(StreamError::SourceMismatch(format!(
                            "mixture expects unsupervised source {want:?}, got {id:?}"
                        )));
                    }
                }
            }
            (None, false) => {}
        }

        let mut masses = Vec::new();
        let mut lanes = Vec::new();
        if let Some((id, src)) = &sources.unsupervised {
            if src.is_empty() {
                return Err(StreamError::EmptySource(id.clone()));
            }
            masses.push(r.unsupervised_fraction());
            lanes.push(Lane {
                name: id.clone(),
                family: None,
                len: src.len() as u64,
                repeatable: src.is_repeatable(),
                cursor: Cursor::default(),
                order: None,
                supervised: None,
                text: Some(src.as_ref()),
            });
        }
        let sup_fraction = r.supervised_fraction();
        if sup_fraction > 0.0 {
            let total = mix.supervised.total();
            if total <= 0.0 {
                return Err(StreamError::EmptyMixture);
            }
            for (task, w) in mix.supervised.iter().filter(|(_, w)| *w > 0.0) {
                let ts = sources
                    .task(task)
                    .ok_or_else(|| StreamError::MissingSource(task.to_string()))?;
                if ts.source.is_empty() {
                    return Err(StreamError::EmptySource(task.to_string()));
                }
                if ts.source.len() > u32::MAX as usize {
                    return Err(StreamError::InvalidConfig(format!(
                        "source {task:?} exceeds 2^32 examples"
                    )));
                }
                masses.push(sup_fraction * w / total);
                lanes.push(Lane {
                    name: task.to_string(),
                    family: Some(ts.family),
                    len: ts.source.len() as u64,
                    repeatable: ts.source.is_repeatable(),
                    cursor: Cursor::default(),
                    order: None,
                    supervised: Some(ts.source.as_ref()),
                    text: None,
                });
            }
        }
        if lanes.is_empty() {
            return Err(StreamError::EmptyMixture);
        }

        let sum: f64 = masses.iter().sum();
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = masses
            .iter()
            .map(|m| {
                acc += m / sum;
                acc
            })
            .collect();
        *cumulative.last_mut().expect("non-empty") = f64::INFINITY;

        Ok(Self {
            key: derive_key(&[domain::STREAM, cfg.seed, cfg.shard_index]),
            fingerprint: fingerprint(mix, &cfg),
            draws: 0,
            cumulative,
            has_unsupervised: sources.unsupervised.is_some(),
            corruption: CorruptionConfig {
                seed: derive_key(&[cfg.corruption.seed, cfg.shard_index]),
                ..cfg.corruption
            },
            lanes,
            cfg,
        })
    }

    /// Opens a stream and fast-forwards it to a saved state.
    pub fn resume(
        mix: &MixtureSpec,
        sources: &'a SourceSet,
        cfg: StreamConfig,
        state: &StreamState,
    ) -> Result<Self, StreamError> {
        let mut s = Self::open(mix, sources, cfg)?;
        s.restore(state)?;
        Ok(s)
    }

    pub fn config(&self) -> &StreamConfig {
        &self.cfg
    }

    /// Records emitted so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    /// Cursor of a task or of the unsupervised source, by name.
    pub fn cursor(&self, name: &str) -> Option<Cursor> {
        self.lanes.iter().find(|l| l.name == name).map(|l| l.cursor)
    }

    /// Emits the next record.
    pub fn next_record(&mut self) -> Result<ExampleRecord, StreamError> {
        let t = self.draws;
        let u = unit_f64(counter_value(self.key, t));
        let lane_idx = self
            .cumulative
            .iter()
            .position(|&c| u < c)
            .expect("last cumulative is infinite");
        let (seed, shard) = (self.cfg.seed, self.cfg.shard_index);
        let lane = &mut self.lanes[lane_idx];
        let saved = lane.cursor;
        let idx = lane.advance(seed, shard)?;

        let (task, family) = (lane.name.clone(), lane.family);
        let (inputs, targets, index) = if let Some(src) = lane.supervised {
            let ex = src.example(idx as usize);
            (ex.inputs, ex.targets, idx)
        } else {
            let doc = lane.text.expect("text lane").document(idx as usize);
            let words: Vec<&str> = doc.split_whitespace().collect();
            let pair = if words.len() < 2 {
                apply_spans(&words, &[])
            } else {
                match corrupt(&words, &self.corruption, t) {
                    Ok(p) => p,
                    Err(source) => {
                        let lane = &mut self.lanes[lane_idx];
                        lane.cursor = saved;
                        return Err(StreamError::Corruption { draw: t, source });
                    }
                }
            };
            let (i, o) = pair.render();
            (i, o, t)
        };

        let mut truncated = false;
        let inputs = match truncate_words(&inputs, self.cfg.max_input_len) {
            Some(head) => {
                truncated = true;
                head.to_string()
            }
            None => inputs,
        };
        let targets = match truncate_words(&targets, self.cfg.max_target_len) {
            Some(head) => {
                truncated = true;
                head.to_string()
            }
            None => targets,
        };
        self.draws += 1;
        Ok(ExampleRecord {
            task,
            family,
            inputs,
            targets,
            index,
            truncated,
        })
    }

    /// The next `batch_size` records.
    pub fn next_batch(&mut self) -> Result<Vec<ExampleRecord>, StreamError> {
        (0..self.cfg.batch_size).map(|_| self.next_record()).collect()
    }

    pub fn snapshot(&self) -> StreamState {
        let mut cursors = IndexMap::new();
        let mut unsupervised = None;
        for lane in &self.lanes {
            if lane.text.is_some() {
                unsupervised = Some(lane.cursor);
            } else {
                cursors.insert(lane.name.clone(), lane.cursor);
            }
        }
        StreamState {
            version: STATE_VERSION,
            seed: self.cfg.seed,
            shard_index: self.cfg.shard_index,
            shard_count: self.cfg.shard_count,
            draws: self.draws,
            prng_key: format!("{:016x}", self.key),
            fingerprint: format!("{:016x}", self.fingerprint),
            cursors,
            unsupervised,
        }
    }

    pub fn restore(&mut self, state: &StreamState) -> Result<(), StreamError> {
        let fail = |m: String| Err(StreamError::State(m));
        if state.version != STATE_VERSION {
            return fail(format!("unsupported version {}", state.version));
        }
        if (state.seed, state.shard_index, state.shard_count)
            != (self.cfg.seed, self.cfg.shard_index, self.cfg.shard_count)
        {
            return fail(format!(
                "snapshot is for seed {} shard {}/{}",
                state.seed, state.shard_index, state.shard_count
            ));
        }
        if state.prng_key != format!("{:016x}", self.key) {
            return fail("PRNG key mismatch".into());
        }
        if state.fingerprint != format!("{:016x}", self.fingerprint) {
            return fail("mixture or config differs from the snapshot".into());
        }
        if state.unsupervised.is_some() != self.has_unsupervised {
            return fail("unsupervised cursor presence differs".into());
        }
        let supervised = self.lanes.iter().filter(|l| l.text.is_none()).count();
        if state.cursors.len() != supervised {
            return fail(format!(
                "expected {supervised} task cursors, got {}",
                state.cursors.len()
            ));
        }
        let mut total = 0u64;
        let mut restored = Vec::with_capacity(self.lanes.len());
        for lane in &self.lanes {
            let cur = if lane.text.is_some() {
                state.unsupervised.expect("checked above")
            } else {
                match state.cursors.get(&lane.name) {
                    Some(c) => *c,
                    None => return fail(format!("no cursor for task {:?}", lane.name)),
                }
            };
            if cur.position > lane.len || (!lane.repeatable && cur.epoch > 0) {
                return fail(format!("cursor for {:?} is out of range", lane.name));
            }
            let consumed = cur
                .epoch
                .checked_mul(lane.len)
                .and_then(|n| n.checked_add(cur.position))
                .ok_or_else(|| StreamError::State(format!("cursor for {:?} overflows", lane.name)))?;
            total = total.saturating_add(consumed);
            restored.push(cur);
        }
        if total != state.draws {
            return fail(format!(
                "cursors account for {total} draws, snapshot says {}",
                state.draws
            ));
        }
        for (lane, cur) in self.lanes.iter_mut().zip(restored) {
            lane.cursor = cur;
            lane.order = None;
        }
        self.draws = state.draws;
        Ok(())
    }
}

impl Iterator for MixtureStream<'_> {
    type Item = Result<ExampleRecord, StreamError>;

    fn next(&mut self) -> Option<Self::Item> {
        Some(self.next_record())
    }
}

/// Writes one JSON object per line.
pub fn write_jsonl<'r>(
    out: &mut impl Write,
    records: impl IntoIterator<Item = &'r ExampleRecord>,
) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut *out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
