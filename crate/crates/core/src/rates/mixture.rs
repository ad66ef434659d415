use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{RateError, RateTable};

/// Expected number of unsupervised examples per supervised example.
/// `INFINITE` means no supervised examples at all.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct RRatio(f64);

impl RRatio {
    pub const INFINITE: RRatio = RRatio(f64::INFINITY);

    pub fn new(r: f64) -> Result<Self, RateError> {
        if r.is_nan() || r < 0.0 {
            return Err(RateError::BadRRatio(r.to_string()));
        }
        Ok(RRatio(r))
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// `R / (R + 1)`, exactly 1 for infinite R.
    pub fn unsupervised_fraction(self) -> f64 {
        if self.is_infinite() {
            1.0
        } else {
            self.0 / (self.0 + 1.0)
        }
    }

    /// `1 / (R + 1)`, exactly 0 for infinite R.
    pub fn supervised_fraction(self) -> f64 {
        if self.is_infinite() {
            0.0
        } else {
            1.0 / (self.0 + 1.0)
        }
    }
}

impl fmt::Display for RRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl FromStr for RRatio {
    type Err = RateError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") {
            return Ok(RRatio::INFINITE);
        }
        let r: f64 = s.parse().map_err(|_| RateError::BadRRatio(s.to_string()))?;
        RRatio::new(r)
    }
}

impl Serialize for RRatio {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RRatio {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Supervised rates (already scaled by `1/(R+1)`) bound to an unsupervised
/// raw-text stream that receives the remaining `R/(R+1)` of the mass.
///
/// File form: an `r_ratio=<R>` line, an `unsupervised_source=<id>` line (the
/// id may be empty), then a tab-separated table with header `task`, `weight`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSpec {
    pub supervised: RateTable,
    pub r_ratio: RRatio,
    pub unsupervised_source: Option<String>,
}

impl MixtureSpec {
    pub fn new(supervised: RateTable, r_ratio: RRatio, unsupervised_source: Option<String>) -> Result<Self, RateError> {
        if let Some(s) = &unsupervised_source {
            if s.trim().is_empty() || s.contains(['\t', '\n', '=']) {
                return Err(RateError::Parse {
                    line: 0,
                    message: format!("invalid unsupervised source id {s:?}"),
                });
            }
        }
        Ok(Self {
            supervised,
            r_ratio,
            unsupervised_source,
        })
    }

    pub fn unsupervised_fraction(&self) -> f64 {
        self.r_ratio.unsupervised_fraction()
    }

    pub fn supervised_fraction(&self) -> f64 {
        self.r_ratio.supervised_fraction()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "r_ratio={}", self.r_ratio);
        let _ = writeln!(
            out,
            "unsupervised_source={}",
            self.unsupervised_source.as_deref().unwrap_or("")
        );
        out.push_str("task\tweight\n");
        for (task, w) in self.supervised.iter() {
            let _ = writeln!(out, "{task}\t{w}");
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self, RateError> {
        let err = |line: usize, message: String| RateError::Parse { line, message };
        let mut r_ratio = None;
        let mut source: Option<Option<String>> = None;
        let mut in_table = false;
        let mut entries = IndexMap::new();

        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            let lineno = i + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            if !in_table {
                if let Some(v) = line.strip_prefix("r_ratio=") {
                    r_ratio = Some(v.parse::<RRatio>().map_err(|e| err(lineno, e.to_string()))?);
                } else if let Some(v) = line.strip_prefix("unsupervised_source=") {
                    source = Some((!v.trim().is_empty()).then(|| v.trim().to_string()));
                } else if line.split('\t').map(str::trim).eq(["task", "weight"]) {
                    in_table = true;
                } else {
                    return Err(err(lineno, format!("unexpected line {line:?}")));
                }
                continue;
            }
            let (task, w) = line
                .split_once('\t')
                .ok_or_else(|| err(lineno, "expected `task<TAB>weight`".into()))?;
            let weight: f64 = w
                .trim()
                .parse()
                .ok()
                .filter(|w: &f64| w.is_finite() && *w >= 0.0)
                .ok_or_else(|| err(lineno, format!("bad weight {w:?}")))?;
            if entries.insert(task.trim().to_string(), weight).is_some() {
                return Err(err(lineno, format!("duplicate task {task:?}")));
            }
        }
        let r_ratio = r_ratio.ok_or_else(|| err(0, "missing r_ratio= header".into()))?;
        let source = source.ok_or_else(|| err(0, "missing unsupervised_source= header".into()))?;
        if !in_table {
            return Err(err(0, "missing `task<TAB>weight` header".into()));
        }
        MixtureSpec::new(RateTable::from_parts(entries, false), r_ratio, source)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RateError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| RateError::Parse {
            line: 0,
            message: format!("{}: {e}", path.display()),
        })?;
        Self::from_tsv(&text)
    }
}
