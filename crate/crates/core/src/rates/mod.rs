//! Sampling-rate tables for every mixing policy: capped proportional,
//! family-pair balanced, uniform, R-ratio combination with an unsupervised
//! stream, seeded nested subsets and best-effort family selection.

mod mixture;

use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::{self, AnalyticsError, TransferMatrix};
use crate::registry::{Family, Registry};
use crate::rng::{derive_key, domain, SplitMix64};

pub use mixture::{MixtureSpec, RRatio};

/// Sampling-rate cap used for the full reference mixture.
pub const DEFAULT_CAP: Cap = Cap::Limit(300_000);

#[derive(Debug, Error)]
pub enum RateError {
    #[error("registry is empty")]
    EmptyRegistry,
    #[error("family {0} has no tasks in the registry")]
    EmptyFamily(Family),
    #[error("family-pair mixing needs two distinct families, got {0} twice")]
    SameFamily(Family),
    #[error("rate table has zero total weight")]
    ZeroTotal,
    #[error("weight for {task:?} is negative or not finite: {weight}")]
    BadWeight { task: String, weight: f64 },
    #[error("cap must be at least 1")]
    ZeroCap,
    #[error("cap must be a positive integer or inf, got {0:?}")]
    BadCap(String),
    #[error("r_ratio must be a nonnegative number or inf, got {0}")]
    BadRRatio(String),
    #[error("supervised table must be normalized before combining")]
    NotNormalized,
    #[error("subset sizes must be strictly ascending and at most {max}: {sizes:?}")]
    BadSubsetSizes { sizes: Vec<usize>, max: usize },
    #[error("top_k must be in 1..={max}, got {got}")]
    BadTopK { got: usize, max: usize },
    #[error("transfer-matrix family {0} has no tasks in the registry")]
    FamilyMismatch(Family),
    #[error("mixture file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
}

/// Per-task ceiling on effective examples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cap {
    Limit(u64),
    Unlimited,
}

impl Cap {
    pub fn new(limit: u64) -> Result<Self, RateError> {
        if limit == 0 {
            return Err(RateError::ZeroCap);
        }
        Ok(Cap::Limit(limit))
    }

    pub fn apply(self, size: u64) -> u64 {
        match self {
            Cap::Limit(k) => size.min(k),
            Cap::Unlimited => size,
        }
    }
}

impl fmt::Display for Cap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cap::Limit(k) => write!(f, "{k}"),
            Cap::Unlimited => f.write_str("inf"),
        }
    }
}

impl FromStr for Cap {
    type Err = RateError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "none" | "unlimited" => Ok(Cap::Unlimited),
            other => other
                .replace('_', "")
                .parse::<u64>()
                .map_err(|_| RateError::BadCap(s.to_string()))
                .and_then(Cap::new),
        }
    }
}

impl Serialize for Cap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Cap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixingMode {
    CappedProportional,
    FamilyPair,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RatePolicy {
    pub cap: Cap,
    pub mode: MixingMode,
}

/// Task name → nonnegative sampling weight, in registry order.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    entries: IndexMap<String, f64>,
    normalized: bool,
}

impl RateTable {
    pub fn new(entries: impl IntoIterator<Item = (String, f64)>) -> Result<Self, RateError> {
        let entries: IndexMap<String, f64> = entries.into_iter().collect();
        if let Some((task, &weight)) = entries.iter().find(|(_, w)| !(w.is_finite() && **w >= 0.0)) {
            return Err(RateError::BadWeight {
                task: task.clone(),
                weight,
            });
        }
        Ok(Self {
            entries,
            normalized: false,
        })
    }

    pub fn get(&self, task: &str) -> Option<f64> {
        self.entries.get(task).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(k, &v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.entries.values().sum()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Multiplies every weight by `factor`; the result is no longer normalized.
    pub fn scaled(&self, factor: f64) -> RateTable {
        RateTable {
            entries: self.entries.iter().map(|(k, v)| (k.clone(), v * factor)).collect(),
            normalized: false,
        }
    }

    pub(crate) fn from_parts(entries: IndexMap<String, f64>, normalized: bool) -> Self {
        Self { entries, normalized }
    }
}

/// Divides every weight by the table total.
pub fn normalize(rt: &RateTable) -> Result<RateTable, RateError> {
    let total = rt.total();
    if total <= 0.0 {
        return Err(RateError::ZeroTotal);
    }
    Ok(RateTable {
        entries: rt.entries.iter().map(|(k, v)| (k.clone(), v / total)).collect(),
        normalized: true,
    })
}

/// Unnormalized weights `min(train_size, cap)`.
pub fn capped_proportional(reg: &Registry, cap: Cap) -> Result<RateTable, RateError> {
    if reg.is_empty() {
        return Err(RateError::EmptyRegistry);
    }
    RateTable::new(
        reg.tasks()
            .iter()
            .map(|t| (t.name.clone(), cap.apply(t.train_size) as f64)),
    )
}

/// Equal unnormalized weight 1 per task.
pub fn uniform_rates(reg: &Registry) -> Result<RateTable, RateError> {
    if reg.is_empty() {
        return Err(RateError::EmptyRegistry);
    }
    RateTable::new(reg.names().map(|n| (n.to_string(), 1.0)))
}

/// Normalized rates that are proportional (capped) within each family and
/// split 1:1 between the two families.
pub fn family_pair_rates(reg: &Registry, fam_a: Family, fam_b: Family, cap: Cap) -> Result<RateTable, RateError> {
    if fam_a == fam_b {
        return Err(RateError::SameFamily(fam_a));
    }
    let family_total = |fam: Family| -> Result<f64, RateError> {
        let total: u64 = reg
            .tasks()
            .iter()
            .filter(|t| t.family == fam)
            .map(|t| cap.apply(t.train_size))
            .sum();
        if total == 0 {
            return Err(RateError::EmptyFamily(fam));
        }
        Ok(total as f64)
    };
    let (total_a, total_b) = (family_total(fam_a)?, family_total(fam_b)?);
    let entries = reg
        .tasks()
        .iter()
        .filter_map(|t| {
            let total = if t.family == fam_a {
                total_a
            } else if t.family == fam_b {
                total_b
            } else {
                return None;
            };
            Some((t.name.clone(), 0.5 * cap.apply(t.train_size) as f64 / total))
        })
        .collect();
    Ok(RateTable::from_parts(entries, true))
}

/// Binds a normalized supervised table to an unsupervised stream at ratio
/// `R` unsupervised : 1 supervised.
pub fn r_combine(
    supervised: &RateTable,
    r_ratio: RRatio,
    unsupervised_source: impl Into<String>,
) -> Result<MixtureSpec, RateError> {
    if !supervised.is_normalized() {
        return Err(RateError::NotNormalized);
    }
    let source = unsupervised_source.into();
    MixtureSpec::new(
        supervised.scaled(r_ratio.supervised_fraction()),
        r_ratio,
        (!source.is_empty()).then_some(source),
    )
}

/// Nested random subsets: one seeded Fisher–Yates shuffle of the registry,
/// then prefixes of each requested size. Tasks keep registry order inside
/// each subset.
pub fn random_subset_chain(reg: &Registry, sizes: &[usize], seed: u64) -> Result<Vec<Registry>, RateError> {
    let ascending = sizes.windows(2).all(|w| w[0] < w[1]);
    if !ascending || sizes.first() == Some(&0) || sizes.last().is_some_and(|&m| m > reg.len()) {
        return Err(RateError::BadSubsetSizes {
            sizes: sizes.to_vec(),
            max: reg.len(),
        });
    }
    let mut order: Vec<usize> = (0..reg.len()).collect();
    SplitMix64::new(derive_key(&[domain::SUBSET, seed])).shuffle(&mut order);
    Ok(sizes
        .iter()
        .map(|&k| {
            let mut keep = vec![false; reg.len()];
            for &i in &order[..k] {
                keep[i] = true;
            }
            let mut idx = 0;
            reg.retain(|_| {
                idx += 1;
                keep[idx - 1]
            })
        })
        .collect())
}

/// Every registry task whose family is among the `top_k` families ranked by
/// average relative transfer gain.
pub fn best_effort_selection(matrix: &TransferMatrix, reg: &Registry, top_k: usize) -> Result<Registry, RateError> {
    let present = reg.families();
    if let Some(&missing) = matrix.families().iter().find(|f| !present.contains(f)) {
        return Err(RateError::FamilyMismatch(missing));
    }
    if top_k == 0 || top_k > matrix.size() {
        return Err(RateError::BadTopK {
            got: top_k,
            max: matrix.size(),
        });
    }
    let delta = analytics::delta_avg(matrix)?;
    let ranking = analytics::rank_families(matrix.families(), &delta);
    let chosen = &ranking[..top_k];
    Ok(reg.retain(|t| chosen.contains(&t.family)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry::TaskSpec;

    fn reg(rows: &[(&str, Family, u64)]) -> Registry {
        Registry::new(
            rows.iter()
                .map(|&(n, f, s)| TaskSpec::new(n, f, "-", s, "{x}", "{y}").unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn cap_saturates() {
        let r = reg(&[("big", Family::Cls, 1_804_874), ("small", Family::Sum, 14_372)]);
        let rt = capped_proportional(&r, Cap::new(300_000).unwrap()).unwrap();
        assert_eq!(rt.get("big"), Some(300_000.0));
        assert_eq!(rt.get("small"), Some(14_372.0));
        let rt = capped_proportional(&r, Cap::Unlimited).unwrap();
        assert_eq!(rt.get("big"), Some(1_804_874.0));
        assert!(!rt.is_normalized());
        assert!(matches!(
            capped_proportional(&Registry::default(), Cap::Unlimited),
            Err(RateError::EmptyRegistry)
        ));
    }

    #[test]
    fn normalize_examples() {
        let rt = RateTable::new([("A".into(), 1.0), ("B".into(), 1.0)]).unwrap();
        let n = normalize(&rt).unwrap();
        assert_eq!((n.get("A"), n.get("B")), (Some(0.5), Some(0.5)));
        assert!(n.is_normalized());
        let rt = RateTable::new([("A".into(), 300_000.0), ("B".into(), 100_000.0)]).unwrap();
        let n = normalize(&rt).unwrap();
        assert_eq!((n.get("A"), n.get("B")), (Some(0.75), Some(0.25)));
        let zero = RateTable::new([("A".into(), 0.0), ("B".into(), 0.0)]).unwrap();
        assert!(matches!(normalize(&zero), Err(RateError::ZeroTotal)));
        assert!(matches!(
            RateTable::new([("A".into(), -1.0)]),
            Err(RateError::BadWeight { .. })
        ));
    }

    #[test]
    fn family_pair_examples() {
        let r = reg(&[("X", Family::Nli, 100), ("Y", Family::Cls, 900)]);
        let rt = family_pair_rates(&r, Family::Nli, Family::Cls, Cap::Unlimited).unwrap();
        assert_eq!((rt.get("X"), rt.get("Y")), (Some(0.5), Some(0.5)));

        // Hand computation: X = 0.5·100/400, Z = 0.5·300/400, Y = 0.5.
        let r = reg(&[("X", Family::Nli, 100), ("Y", Family::Cls, 7), ("Z", Family::Nli, 300)]);
        let rt = family_pair_rates(&r, Family::Nli, Family::Cls, Cap::Unlimited).unwrap();
        assert_eq!(rt.get("X"), Some(0.125));
        assert_eq!(rt.get("Z"), Some(0.375));
        assert_eq!(rt.get("Y"), Some(0.5));
        assert!(rt.is_normalized());

        assert!(matches!(
            family_pair_rates(&r, Family::Nli, Family::Sem, Cap::Unlimited),
            Err(RateError::EmptyFamily(Family::Sem))
        ));
        assert!(matches!(
            family_pair_rates(&r, Family::Nli, Family::Nli, Cap::Unlimited),
            Err(RateError::SameFamily(_))
        ));
    }

    #[test]
    fn family_pair_applies_cap_within_family() {
        let r = reg(&[("A", Family::Nli, 600), ("B", Family::Nli, 200), ("C", Family::Cls, 5)]);
        let rt = family_pair_rates(&r, Family::Nli, Family::Cls, Cap::new(200).unwrap()).unwrap();
        assert_eq!(rt.get("A"), Some(0.25));
        assert_eq!(rt.get("B"), Some(0.25));
    }

    #[test]
    fn r_combine_fractions() {
        let sup = normalize(&RateTable::new([("A".into(), 1.0), ("B".into(), 3.0)]).unwrap()).unwrap();
        let mix = r_combine(&sup, RRatio::new(2.0).unwrap(), "c4").unwrap();
        assert!((mix.unsupervised_fraction() - 2.0 / 3.0).abs() < 1e-15);
        assert!((mix.supervised.total() - 1.0 / 3.0).abs() < 1e-15);

        let mix = r_combine(&sup, RRatio::new(0.0).unwrap(), "").unwrap();
        assert_eq!(mix.unsupervised_fraction(), 0.0);
        assert_eq!(mix.supervised.total(), 1.0);

        let mix = r_combine(&sup, RRatio::INFINITE, "c4").unwrap();
        assert_eq!(mix.unsupervised_fraction(), 1.0);
        assert_eq!(mix.supervised.total(), 0.0);

        assert!(RRatio::new(-1.0).is_err());
        let raw = RateTable::new([("A".into(), 1.0)]).unwrap();
        assert!(matches!(
            r_combine(&raw, RRatio::INFINITE, "c4"),
            Err(RateError::NotNormalized)
        ));
    }

    #[test]
    fn subset_chain_nests_and_is_seeded() {
        let rows: Vec<(String, Family, u64)> = (0..20).map(|i| (format!("t{i}"), Family::Other, 1)).collect();
        let r = Registry::new(
            rows.iter()
                .map(|(n, f, s)| TaskSpec::new(n.clone(), *f, "-", *s, "a", "b").unwrap())
                .collect(),
        )
        .unwrap();
        let chain = random_subset_chain(&r, &[3, 8, 20], 9).unwrap();
        assert_eq!(chain.iter().map(Registry::len).collect::<Vec<_>>(), [3, 8, 20]);
        for w in chain.windows(2) {
            assert!(w[0].names().all(|n| w[1].contains(n)));
        }
        assert_eq!(chain[2], r);
        assert_eq!(random_subset_chain(&r, &[3, 8], 9).unwrap()[..2], chain[..2]);
        assert_ne!(random_subset_chain(&r, &[8], 10).unwrap()[0], chain[1]);

        for bad in [&[8usize, 3][..], &[3, 3], &[0], &[21]] {
            assert!(matches!(
                random_subset_chain(&r, bad, 1),
                Err(RateError::BadSubsetSizes { .. })
            ));
        }
    }

    #[test]
    fn cap_parsing() {
        assert_eq!("300000".parse::<Cap>().unwrap(), Cap::Limit(300_000));
        assert_eq!("inf".parse::<Cap>().unwrap(), Cap::Unlimited);
        assert!("0".parse::<Cap>().is_err());
        assert!("x".parse::<Cap>().is_err());
    }
}
