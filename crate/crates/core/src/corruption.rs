//! Span-denoising example construction and its inverse.
//!
//! A sequence of `n` tokens loses `round(n·density)` tokens in
//! `max(1, round(n·density / mean_span_length))` contiguous spans. Each span is
//! replaced in the input by a sentinel `<extra_id_k>` (k counting up from 0 left
//! to right); the target lists `sentinel_k, span_k` for every span and ends with
//! one more sentinel.
//!
//! Placement: the corrupted budget is split into positive span lengths by a
//! uniform stars-and-bars draw, then the surviving tokens are split into
//! `m + 1` gaps (interior gaps ≥ 1, edge gaps ≥ 0) by a second uniform draw.
//! Both draws use splitmix64 keyed by `(seed, draw_counter)`.

use std::fmt;

use thiserror::Error;

use crate::rng::{derive_key, domain, SplitMix64};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorruptionError {
    #[error("invalid corruption config: {0}")]
    InvalidConfig(String),
    #[error("sequence of length {0} is too short (need at least 2 tokens)")]
    TooShort(usize),
    #[error("{noise} of {n} tokens would be corrupted; at least one must survive")]
    NoSurvivor { n: usize, noise: usize },
    #[error("cannot separate {spans} spans with only {survivors} surviving tokens")]
    CannotSeparate { spans: usize, survivors: usize },
    #[error("sentinel {found} out of order; expected {expected}")]
    MalformedOrder { expected: u32, found: u32 },
    #[error("sentinel {0} appears in the input but not in the target")]
    MissingSentinel(u32),
    #[error("target must start with sentinel 0")]
    TargetStart,
    #[error("target has {found} sentinels but input implies {expected}")]
    SentinelCount { expected: usize, found: usize },
}

pub const DEFAULT_NOISE_DENSITY: f64 = 0.15;
pub const DEFAULT_MEAN_SPAN_LENGTH: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorruptionConfig {
    pub noise_density: f64,
    pub mean_span_length: f64,
    pub seed: u64,
}

impl Default for CorruptionConfig {
    fn default() -> Self {
        Self {
            noise_density: DEFAULT_NOISE_DENSITY,
            mean_span_length: DEFAULT_MEAN_SPAN_LENGTH,
            seed: 0,
        }
    }
}

impl CorruptionConfig {
    pub fn new(noise_density: f64, mean_span_length: f64, seed: u64) -> Result<Self, CorruptionError> {
        let cfg = Self {
            noise_density,
            mean_span_length,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CorruptionError> {
        if !(0.0..1.0).contains(&self.noise_density) {
            return Err(CorruptionError::InvalidConfig(format!(
                "noise_density {} not in [0, 1)",
                self.noise_density
            )));
        }
        if !(self.mean_span_length >= 1.0 && self.mean_span_length.is_finite()) {
            return Err(CorruptionError::InvalidConfig(format!(
                "mean_span_length {} must be >= 1",
                self.mean_span_length
            )));
        }
        Ok(())
    }

    /// `round(n · density)`.
    pub fn noise_tokens(&self, n: usize) -> usize {
        (n as f64 * self.noise_density).round() as usize
    }

    /// `max(1, round(n · density / mean_span_length))`, or 0 when nothing is corrupted.
    pub fn span_count(&self, n: usize) -> usize {
        if self.noise_tokens(n) == 0 {
            return 0;
        }
        ((n as f64 * self.noise_density / self.mean_span_length).round() as usize).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Span {
    pub start: usize,
    pub len: usize,
}

impl Span {
    pub fn end(&self) -> usize {
        self.start + self.len
    }
}

/// Either an original token or a sentinel standing for span `k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Token<T> {
    Plain(T),
    Sentinel(u32),
}

impl<T: fmt::Display> fmt::Display for Token<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Plain(t) => t.fmt(f),
            Token::Sentinel(k) => write!(f, "<extra_id_{k}>"),
        }
    }
}

/// Parses `<extra_id_k>`.
pub fn parse_sentinel(s: &str) -> Option<u32> {
    let digits = s.strip_prefix("<extra_id_")?.strip_suffix('>')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) || (digits.len() > 1 && digits.starts_with('0'))
    {
        return None;
    }
    digits.parse().ok()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenoisingPair<T> {
    pub input: Vec<Token<T>>,
    pub target: Vec<Token<T>>,
}

impl<T: fmt::Display> DenoisingPair<T> {
    /// Space-joined rendering of `(input, target)`.
    pub fn render(&self) -> (String, String) {
        let join = |ts: &[Token<T>]| ts.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ");
        (join(&self.input), join(&self.target))
    }
}

/// Deterministic span plan for a sequence of length `n`.
pub fn plan_spans(n: usize, cfg: &CorruptionConfig, draw_counter: u64) -> Result<Vec<Span>, CorruptionError> {
    cfg.validate()?;
    if n < 2 {
        return Err(CorruptionError::TooShort(n));
    }
    let noise = cfg.noise_tokens(n);
    if noise == 0 {
        return Ok(Vec::new());
    }
    if noise >= n {
        return Err(CorruptionError::NoSurvivor { n, noise });
    }
    let spans = cfg.span_count(n);
    let survivors = n - noise;
    if survivors + 1 < spans {
        return Err(CorruptionError::CannotSeparate { spans, survivors });
    }

    let mut rng = SplitMix64::new(derive_key(&[domain::CORRUPTION, cfg.seed, draw_counter]));

    // Span lengths: positive composition of `noise` into `spans` parts.
    let cuts = rng.sample_sorted(noise as u64 - 1, spans as u64 - 1);
    let mut lengths = Vec::with_capacity(spans);
    let mut prev = 0usize;
    for c in cuts {
        let c = c as usize + 1;
        lengths.push(c - prev);
        prev = c;
    }
    lengths.push(noise - prev);

    // Gaps: `spans + 1` nonnegative parts of the free survivors, interior gaps get +1.
    let free = survivors - (spans - 1);
    let bars = rng.sample_sorted((free + spans) as u64, spans as u64);
    let mut gaps = Vec::with_capacity(spans + 1);
    let mut prev = 0usize;
    for b in bars {
        let b = b as usize;
        gaps.push(b - prev);
        prev = b + 1;
    }
    gaps.push(free + spans - prev);

    let mut out = Vec::with_capacity(spans);
    let mut pos = gaps[0];
    for (k, &len) in lengths.iter().enumerate() {
        out.push(Span { start: pos, len });
        pos += len + gaps[k + 1] + usize::from(k + 1 < spans);
    }
    debug_assert_eq!(pos, n);
    Ok(out)
}

/// Replaces `spans` (sorted, non-overlapping, in range) with sentinels.
pub fn apply_spans<T: Clone>(tokens: &[T], spans: &[Span]) -> DenoisingPair<T> {
    let mut input = Vec::with_capacity(tokens.len());
    let mut target = Vec::new();
    let mut pos = 0;
    for (k, span) in spans.iter().enumerate() {
        let k = k as u32;
        input.extend(tokens[pos..span.start].iter().cloned().map(Token::Plain));
        input.push(Token::Sentinel(k));
        target.push(Token::Sentinel(k));
        target.extend(tokens[span.start..span.end()].iter().cloned().map(Token::Plain));
        pos = span.end();
    }
    input.extend(tokens[pos..].iter().cloned().map(Token::Plain));
    target.push(Token::Sentinel(spans.len() as u32));
    DenoisingPair { input, target }
}

pub fn corrupt<T: Clone>(
    tokens: &[T],
    cfg: &CorruptionConfig,
    draw_counter: u64,
) -> Result<DenoisingPair<T>, CorruptionError> {
    let spans = plan_spans(tokens.len(), cfg, draw_counter)?;
    Ok(apply_spans(tokens, &spans))
}

/// Inverse of [`corrupt`].
pub fn reconstruct<T: Clone>(pair: &DenoisingPair<T>) -> Result<Vec<T>, CorruptionError> {
    // Target: sentinel_0 span_0 sentinel_1 span_1 ... sentinel_m.
    let mut spans: Vec<Vec<T>> = Vec::new();
    for tok in &pair.target {
        match tok {
            Token::Sentinel(k) if *k as usize == spans.len() => spans.push(Vec::new()),
            Token::Sentinel(_) if spans.is_empty() => return Err(CorruptionError::TargetStart),
            Token::Sentinel(k) => {
                return Err(CorruptionError::MalformedOrder {
                    expected: spans.len() as u32,
                    found: *k,
                })
            }
            Token::Plain(t) => match spans.last_mut() {
                Some(cur) => cur.push(t.clone()),
                None => return Err(CorruptionError::TargetStart),
            },
        }
    }
    let Some(terminal) = spans.pop() else {
        return Err(CorruptionError::TargetStart);
    };
    if !terminal.is_empty() {
        return Err(CorruptionError::SentinelCount {
            expected: spans.len(),
            found: spans.len() + 1,
        });
    }

    let mut out = Vec::new();
    let mut next = 0u32;
    for tok in &pair.input {
        match tok {
            Token::Plain(t) => out.push(t.clone()),
            Token::Sentinel(k) => {
                if *k != next {
                    return Err(CorruptionError::MalformedOrder {
                        expected: next,
                        found: *k,
                    });
                }
                let span = spans.get(*k as usize).ok_or(CorruptionError::MissingSentinel(*k))?;
                out.extend(span.iter().cloned());
                next += 1;
            }
        }
    }
    if next as usize != spans.len() {
        return Err(CorruptionError::SentinelCount {
            expected: next as usize,
            found: spans.len(),
        });
    }
    Ok(out)
}

/// Whitespace-token adapter: corrupts `text` and renders both sides with
/// `<extra_id_k>` sentinels.
pub fn corrupt_text(
    text: &str,
    cfg: &CorruptionConfig,
    draw_counter: u64,
) -> Result<(String, String), CorruptionError> {
    let words: Vec<&str> = text.split_whitespace().collect();
    Ok(corrupt(&words, cfg, draw_counter)?.render())
}

/// Parses a rendered pair back into tokens; words of the form `<extra_id_k>`
/// become sentinels.
pub fn parse_rendered(input: &str, target: &str) -> DenoisingPair<String> {
    let toks = |s: &str| {
        s.split_whitespace()
            .map(|w| parse_sentinel(w).map_or_else(|| Token::Plain(w.to_string()), Token::Sentinel))
            .collect()
    };
    DenoisingPair {
        input: toks(input),
        target: toks(target),
    }
}
