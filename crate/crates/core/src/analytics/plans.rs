//! Experiment manifests and compute accounting.

use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::rates::{random_subset_chain, Cap, MixingMode, RRatio, DEFAULT_CAP};
use crate::registry::{Family, Registry};

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

/// Model count stated in prose for the eight-family pairwise study; the
/// `F + F(F-1)/2` formula gives 36.
pub const REPORTED_PAIRWISE_MODEL_COUNT: usize = 34;

/// What a manifest trains on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureRef {
    pub mode: MixingMode,
    pub cap: Cap,
    /// Families drawn from; empty means "all tasks listed in `tasks`".
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub families: Vec<Family>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tasks: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_ratio: Option<RRatio>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub schema_version: u32,
    pub id: String,
    pub mixture: MixtureRef,
    pub train_steps: u64,
    pub batch_size: u64,
    pub learning_rate_note: String,
    pub eval_suite: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pretrain_steps: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subset_seed: Option<u64>,
}

impl ExperimentManifest {
    fn new(
        id: String,
        mixture: MixtureRef,
        train_steps: u64,
        batch_size: u64,
        lr: &str,
        eval: &str,
    ) -> Result<Self, AnalyticsError> {
        if train_steps == 0 || batch_size == 0 {
            return Err(AnalyticsError::Invalid(format!(
                "{id}: train_steps and batch_size must be positive"
            )));
        }
        Ok(Self {
            schema_version: MANIFEST_SCHEMA_VERSION,
            id,
            mixture,
            train_steps,
            batch_size,
            learning_rate_note: lr.to_string(),
            eval_suite: eval.to_string(),
            pretrain_steps: None,
            subset_seed: None,
        })
    }
}

pub fn manifests_to_json(manifests: &[ExperimentManifest]) -> String {
    let mut s = serde_json::to_string_pretty(manifests).expect("manifests serialize");
    s.push('\n');
    s
}

pub fn manifests_from_json(text: &str) -> Result<Vec<ExperimentManifest>, AnalyticsError> {
    let manifests: Vec<ExperimentManifest> = serde_json::from_str(text).map_err(|e| AnalyticsError::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;
    if let Some(m) = manifests.iter().find(|m| m.schema_version != MANIFEST_SCHEMA_VERSION) {
        return Err(AnalyticsError::Invalid(format!(
            "{}: unsupported schema_version {}",
            m.id, m.schema_version
        )));
    }
    Ok(manifests)
}

/// `F + C(F, 2)`.
pub fn pairwise_model_count(families: usize) -> usize {
    families + families * families.saturating_sub(1) / 2
}

/// One intra-family run per family plus one family-pair run per unordered pair.
/// Mixtures are uncapped: within-family proportions follow raw dataset sizes.
pub fn plan_pairwise(families: &[Family], steps: u64, batch: u64) -> Result<Vec<ExperimentManifest>, AnalyticsError> {
    if families.is_empty() {
        return Err(AnalyticsError::Invalid("need at least one family".into()));
    }
    const LR: &str = "constant 1e-3, fine-tuned from a pre-trained base checkpoint";
    let mut out = Vec::with_capacity(pairwise_model_count(families.len()));
    for &f in families {
        let mixture = MixtureRef {
            mode: MixingMode::CappedProportional,
            cap: Cap::Unlimited,
            families: vec![f],
            tasks: vec![],
            r_ratio: None,
        };
        out.push(ExperimentManifest::new(
            format!("intra-{}", f.tag().to_lowercase()),
            mixture,
            steps,
            batch,
            LR,
            "family held-out datasets",
        )?);
    }
    for (i, &a) in families.iter().enumerate() {
        for &b in &families[i + 1..] {
            let mixture = MixtureRef {
                mode: MixingMode::FamilyPair,
                cap: Cap::Unlimited,
                families: vec![a, b],
                tasks: vec![],
                r_ratio: None,
            };
            out.push(ExperimentManifest::new(
                format!("pair-{}-{}", a.tag().to_lowercase(), b.tag().to_lowercase()),
                mixture,
                steps,
                batch,
                LR,
                "family held-out datasets",
            )?);
        }
    }
    Ok(out)
}

/// `|sizes| × |seeds| × |batches|` pre-training runs over nested random task
/// subsets (one chain per seed).
pub fn plan_scaling(
    reg: &Registry,
    sizes: &[usize],
    seeds: &[u64],
    r_ratio: RRatio,
    steps: u64,
    batches: &[u64],
) -> Result<Vec<ExperimentManifest>, AnalyticsError> {
    let mut out = Vec::with_capacity(sizes.len() * seeds.len() * batches.len());
    for &seed in seeds {
        let chain = random_subset_chain(reg, sizes, seed).map_err(|e| AnalyticsError::Invalid(e.to_string()))?;
        for (subset, &size) in chain.iter().zip(sizes) {
            for &batch in batches {
                let mixture = MixtureRef {
                    mode: MixingMode::CappedProportional,
                    cap: DEFAULT_CAP,
                    families: vec![],
                    tasks: subset.names().map(str::to_string).collect(),
                    r_ratio: Some(r_ratio),
                };
                let mut m = ExperimentManifest::new(
                    format!("scaling-seed{seed}-tasks{size}-batch{batch}"),
                    mixture,
                    steps,
                    batch,
                    "pre-training schedule; fine-tune on the evaluation suite afterwards",
                    "SuperGLUE",
                )?;
                m.subset_seed = Some(seed);
                out.push(m);
            }
        }
    }
    Ok(out)
}

/// One fine-tuning run per intermediate pre-training checkpoint.
pub fn plan_sample_efficiency(
    checkpoints: &[u64],
    finetune_steps: u64,
    batch: u64,
) -> Result<Vec<ExperimentManifest>, AnalyticsError> {
    if !checkpoints.windows(2).all(|w| w[0] < w[1]) {
        return Err(AnalyticsError::Invalid(format!(
            "checkpoints must be strictly ascending: {checkpoints:?}"
        )));
    }
    checkpoints
        .iter()
        .map(|&ckpt| {
            let mixture = MixtureRef {
                mode: MixingMode::CappedProportional,
                cap: Cap::Unlimited,
                families: vec![],
                tasks: vec![],
                r_ratio: None,
            };
            let mut m = ExperimentManifest::new(
                format!("sample-efficiency-{ckpt}"),
                mixture,
                finetune_steps,
                batch,
                "fine-tune from the intermediate checkpoint; best checkpoint per task",
                "SuperGLUE",
            )?;
            m.pretrain_steps = Some(ckpt);
            Ok(m)
        })
        .collect()
}

/// `steps × batch × seq_len`, rejected past `i64::MAX`.
pub fn tokens_seen(steps: u64, batch: u64, seq_len: u64) -> Result<u64, AnalyticsError> {
    if steps == 0 || batch == 0 || seq_len == 0 {
        return Err(AnalyticsError::Invalid(
            "steps, batch and seq_len must be positive".into(),
        ));
    }
    let total = steps as u128 * batch as u128 * seq_len as u128;
    if total > i64::MAX as u128 {
        return Err(AnalyticsError::Overflow);
    }
    Ok(total as u64)
}

/// Step totals for vanilla pre-training, pre-finetuning and multi-task
/// pre-training followed by the same fine-tuning stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ScheduleComparison {
    pub vanilla: u64,
    pub prefinetune: u64,
    pub multitask_pretrain: u64,
}

impl ScheduleComparison {
    /// The same comparison denominated in tokens.
    pub fn in_tokens(&self, batch: u64, seq_len: u64) -> Result<ScheduleComparison, AnalyticsError> {
        let conv = |steps: u64| {
            if steps == 0 {
                Ok(0)
            } else {
                tokens_seen(steps, batch, seq_len)
            }
        };
        Ok(ScheduleComparison {
            vanilla: conv(self.vanilla)?,
            prefinetune: conv(self.prefinetune)?,
            multitask_pretrain: conv(self.multitask_pretrain)?,
        })
    }
}

pub fn compare_schedules(
    pretrain_steps: u64,
    prefinetune_steps: u64,
    finetune_steps: u64,
) -> Result<ScheduleComparison, AnalyticsError> {
    let base = pretrain_steps
        .checked_add(finetune_steps)
        .ok_or(AnalyticsError::Overflow)?;
    Ok(ScheduleComparison {
        vanilla: base,
        prefinetune: base.checked_add(prefinetune_steps).ok_or(AnalyticsError::Overflow)?,
        multitask_pretrain: base,
    })
}
