//! The `taskmix` command line. Every subcommand is a thin wrapper over a
//! library call plus that module's serialization.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or validation error.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analytics::{
    analyze_transfer, compare_schedules, manifests_to_json, pairwise_model_count, plan_pairwise,
    plan_sample_efficiency, plan_scaling, TransferMatrix, REPORTED_PAIRWISE_MODEL_COUNT,
};
use crate::bundled;
use crate::corruption::{apply_spans, corrupt, CorruptionConfig};
use crate::rates::{
    best_effort_selection, capped_proportional, family_pair_rates, normalize, r_combine, random_subset_chain,
    uniform_rates, Cap, MixtureSpec, RRatio, RateTable, DEFAULT_CAP,
};
use crate::registry::{filter_by_family, load_registry, load_registry_with_overlay, Family, Registry};
use crate::stream::{
    composition_stats, write_jsonl, MixtureStream, SourceSet, StreamConfig, StreamState, SyntheticSource,
    SyntheticTextSource, VecSource, VecTextSource,
};

#[derive(Debug, Parser)]
#[command(
    name = "taskmix",
    version,
    about = "Multi-task mixture compiler, stream sampler and analytics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Inspect a task registry.
    #[command(subcommand)]
    Registry(RegistryCmd),
    /// Build sampling-rate tables.
    #[command(subcommand)]
    Mixture(MixtureCmd),
    /// Draw records from a mixture.
    #[command(subcommand)]
    Stream(StreamCmd),
    /// Span-corrupt text.
    #[command(subcommand)]
    Corrupt(CorruptCmd),
    /// Transfer-matrix statistics.
    #[command(subcommand)]
    Analyze(AnalyzeCmd),
    /// Emit experiment manifests and compute accounting.
    #[command(subcommand)]
    Plan(PlanCmd),
}

#[derive(Debug, Args)]
struct RegistryArgs {
    /// Registry TSV; the bundled reference registry when omitted.
    #[arg(long)]
    registry: Option<PathBuf>,
    /// Size overlay for rows whose size is `external`.
    #[arg(long)]
    overlay: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum RegistryCmd {
    /// Parse and check the registry.
    Validate(RegistryArgs),
    /// Print task count and example total.
    Totals(RegistryArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Capped,
    FamilyPair,
    Uniform,
}

#[derive(Debug, Subcommand)]
enum MixtureCmd {
    /// Compile a mixture TSV.
    Compile(CompileArgs),
}

#[derive(Debug, Args)]
struct CompileArgs {
    #[command(flatten)]
    registry: RegistryArgs,
    /// Per-task cap on effective examples, or `inf`.
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: Cap,
    #[arg(long, value_enum, default_value = "capped")]
    mode: ModeArg,
    /// Restrict to these families (comma separated); family-pair needs exactly two.
    #[arg(long)]
    families: Option<String>,
    /// Restrict to the 24 representative tasks of the transfer study.
    #[arg(long)]
    representative: bool,
    /// Keep only the families of the top-K transfer sources.
    #[arg(long, value_name = "K")]
    best_effort: Option<usize>,
    /// Transfer table for --best-effort; bundled when omitted.
    #[arg(long, requires = "best_effort")]
    matrix: Option<PathBuf>,
    /// Nested random subsets, e.g. `30,55,80`; needs --seed.
    #[arg(long, value_delimiter = ',', requires = "seed")]
    subset_sizes: Option<Vec<usize>>,
    #[arg(long)]
    seed: Option<u64>,
    /// Unsupervised examples per supervised example; `inf` for none supervised.
    #[arg(long)]
    r_ratio: Option<RRatio>,
    /// Identifier of the raw-text stream bound by --r-ratio.
    #[arg(long, default_value = "c4")]
    unsupervised_source: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ShardArg {
    One(u64, u64),
    All(u64),
}

fn parse_shard(s: &str) -> Result<ShardArg, String> {
    let (i, n) = s.split_once('/').ok_or("expected i/N or all/N")?;
    let n: u64 = n.parse().map_err(|_| format!("bad shard count {n:?}"))?;
    if n == 0 {
        return Err("shard count must be positive".into());
    }
    if i == "all" {
        return Ok(ShardArg::All(n));
    }
    let i: u64 = i.parse().map_err(|_| format!("bad shard index {i:?}"))?;
    if i >= n {
        return Err(format!("shard index {i} out of range for {n} shards"));
    }
    Ok(ShardArg::One(i, n))
}

#[derive(Debug, Args)]
struct StreamArgs {
    #[command(flatten)]
    registry: RegistryArgs,
    /// Mixture TSV; the capped mixture over the registry when omitted.
    #[arg(long)]
    mixture: Option<PathBuf>,
    /// Directory of `<task>.jsonl` field records; synthetic examples when omitted.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Raw-text file, one document per line; synthetic text when omitted.
    #[arg(long)]
    text: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value = "0/1", value_parser = parse_shard)]
    shard: ShardArg,
    #[arg(long, default_value_t = 512)]
    max_input_len: usize,
    #[arg(long, default_value_t = 512)]
    max_target_len: usize,
    #[arg(long, default_value_t = crate::corruption::DEFAULT_NOISE_DENSITY)]
    density: f64,
    #[arg(long, default_value_t = crate::corruption::DEFAULT_MEAN_SPAN_LENGTH)]
    mean_span: f64,
}

#[derive(Debug, Subcommand)]
enum StreamCmd {
    /// Write `n` records as JSONL.
    Sample {
        #[command(flatten)]
        stream: StreamArgs,
        #[arg(long)]
        n: u64,
        /// Output path; with `--shard all/N` shard i goes to `<out>.shard<i>`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Resume from a saved state instead of draw 0.
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Save the stream state after sampling.
        #[arg(long)]
        save_state: Option<PathBuf>,
    },
    /// Tally the composition of `n` draws.
    Stats {
        #[command(flatten)]
        stream: StreamArgs,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum CorruptCmd {
    /// Corrupt each input line and print `{"input", "target"}` JSON lines.
    Demo {
        #[arg(long, default_value_t = crate::corruption::DEFAULT_NOISE_DENSITY)]
        density: f64,
        #[arg(long, default_value_t = crate::corruption::DEFAULT_MEAN_SPAN_LENGTH)]
        mean_span: f64,
        #[arg(long)]
        seed: u64,
        /// Input text; stdin when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum AnalyzeCmd {
    /// Column averages, relative gains, negative transfer and ranking.
    Transfer {
        /// Transfer table TSV; bundled when omitted.
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum PlanCmd {
    /// One intra-family run per family and one run per family pair.
    Pairwise {
        #[arg(long)]
        families: Option<String>,
        #[arg(long, default_value_t = 200_000)]
        steps: u64,
        #[arg(long, default_value_t = 128)]
        batch: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Nested task-subset pre-training runs.
    Scaling {
        #[command(flatten)]
        registry: RegistryArgs,
        #[arg(long, value_delimiter = ',', default_value = "30,55,80")]
        sizes: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        seeds: Vec<u64>,
        #[arg(long, value_delimiter = ',', default_value = "128,512")]
        batches: Vec<u64>,
        #[arg(long, default_value_t = 200_000)]
        steps: u64,
        #[arg(long, default_value = "2")]
        r_ratio: RRatio,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fine-tuning runs from intermediate checkpoints.
    SampleEfficiency {
        #[arg(long, value_delimiter = ',', default_value = "20000,50000,100000,200000")]
        checkpoints: Vec<u64>,
        #[arg(long, default_value_t = 200_000)]
        finetune_steps: u64,
        #[arg(long, default_value_t = 128)]
        batch: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Step (and optionally token) totals of three training schedules.
    Schedules {
        #[arg(long, default_value_t = 1_000_000)]
        pretrain_steps: u64,
        #[arg(long, default_value_t = 200_000)]
        prefinetune_steps: u64,
        #[arg(long, default_value_t = 200_000)]
        finetune_steps: u64,
        /// With --seq-len, also report tokens.
        #[arg(long, requires = "seq_len")]
        batch: Option<u64>,
        #[arg(long, requires = "batch")]
        seq_len: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// A data or validation failure (exit 2).
#[derive(Debug)]
struct Failure(String);

impl<E: std::error::Error> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

fn fail<T>(msg: impl Display) -> Result<T, Failure> {
    Err(Failure(msg.to_string()))
}

type Res<T = ()> = Result<T, Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    1
                }
            };
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(()) => 0,
        Err(Failure(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            2
        }
    }
}

fn dispatch(cmd: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Res {
    match cmd {
        Command::Registry(c) => registry_cmd(c, stdout),
        Command::Mixture(MixtureCmd::Compile(a)) => mixture_compile(a, stdout),
        Command::Stream(c) => stream_cmd(c, stdout),
        Command::Corrupt(CorruptCmd::Demo {
            density,
            mean_span,
            seed,
            input,
            out,
        }) => corrupt_demo(density, mean_span, seed, input, out, stdout),
        Command::Analyze(AnalyzeCmd::Transfer { matrix, out }) => {
            let m = load_matrix(matrix.as_deref())?;
            emit(out, stdout, analyze_transfer(&m)?.to_tsv())
        }
        Command::Plan(c) => plan_cmd(c, stdout, stderr),
    }
}

/// Writes to `--out` when given, else to stdout.
fn emit(out: Option<PathBuf>, stdout: &mut dyn Write, text: String) -> Res {
    match out {
        Some(path) => write_file(&path, text.as_bytes()),
        None => Ok(stdout.write_all(text.as_bytes())?),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Res {
    fs::write(path, bytes).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn read_file(path: &Path) -> Res<String> {
    fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn load_registry_args(a: &RegistryArgs) -> Res<Registry> {
    Ok(match (&a.registry, &a.overlay) {
        (None, None) => bundled::reference_registry(),
        (None, Some(overlay)) => load_registry_with_overlay_text(bundled::REFERENCE_REGISTRY_TSV, overlay)?,
        (Some(reg), None) => load_registry(reg)?,
        (Some(reg), Some(overlay)) => load_registry_with_overlay(reg, overlay)?,
    })
}

fn load_registry_with_overlay_text(registry: &str, overlay: &Path) -> Res<Registry> {
    let overlay = crate::registry::SizeOverlay::from_tsv(&read_file(overlay)?)
        .map_err(|e| Failure(format!("{}: {e}", overlay.display())))?;
    Ok(Registry::from_tsv(registry, Some(&overlay))?)
}

fn load_matrix(path: Option<&Path>) -> Res<TransferMatrix> {
    match path {
        None => Ok(bundled::reference_transfer_matrix()),
        Some(p) => TransferMatrix::from_tsv(&read_file(p)?).map_err(|e| Failure(format!("{}: {e}", p.display()))),
    }
}

fn registry_cmd(cmd: RegistryCmd, stdout: &mut dyn Write) -> Res {
    match cmd {
        RegistryCmd::Validate(a) => {
            let reg = load_registry_args(&a)?;
            let fams: Vec<&str> = reg.families().into_iter().map(Family::tag).collect();
            writeln!(stdout, "ok\t{} tasks\t{}", reg.len(), fams.join(","))?;
        }
        RegistryCmd::Totals(a) => {
            let t = load_registry_args(&a)?.totals();
            writeln!(
                stdout,
                "task_count\t{}\nexample_total\t{}",
                t.task_count, t.example_total
            )?;
        }
    }
    Ok(())
}

fn mixture_compile(a: CompileArgs, stdout: &mut dyn Write) -> Res {
    let mut reg = load_registry_args(&a.registry)?;
    if a.representative {
        reg = reg.retain(|t| {
            bundled::REPRESENTATIVE_TASKS
                .iter()
                .any(|(_, names)| names.contains(&t.name.as_str()))
        });
    }
    if let Some(k) = a.best_effort {
        reg = best_effort_selection(&load_matrix(a.matrix.as_deref())?, &reg, k)?;
    }
    let families = a.families.as_deref().map(Family::parse_list).transpose()?;
    if let Some(fams) = &families {
        reg = filter_by_family(&reg, fams)?;
    }

    let table_for = |reg: &Registry| -> Res<RateTable> {
        Ok(match a.mode {
            ModeArg::Capped => capped_proportional(reg, a.cap)?,
            ModeArg::Uniform => uniform_rates(reg)?,
            ModeArg::FamilyPair => match families.as_deref() {
                Some(&[x, y]) => family_pair_rates(reg, x, y, a.cap)?,
                _ => return fail("--mode family-pair needs --families with exactly two families"),
            },
        })
    };
    let spec_for = |table: RateTable| -> Res<MixtureSpec> {
        Ok(match a.r_ratio {
            Some(r) => r_combine(&normalize(&table)?, r, a.unsupervised_source.clone())?,
            None => MixtureSpec::new(table, RRatio::new(0.0)?, None)?,
        })
    };

    let text = match (&a.subset_sizes, a.seed) {
        (Some(sizes), Some(seed)) => {
            let chain = random_subset_chain(&reg, sizes, seed)?;
            let mut docs = Vec::with_capacity(chain.len());
            for (sub, size) in chain.iter().zip(sizes) {
                docs.push(format!(
                    "# subset {size} seed {seed}\n{}",
                    spec_for(table_for(sub)?)?.to_tsv()
                ));
            }
            docs.join("---\n")
        }
        _ => spec_for(table_for(&reg)?)?.to_tsv(),
    };
    emit(a.out, stdout, text)
}

fn stream_config(a: &StreamArgs, shard: u64, count: u64) -> Res<StreamConfig> {
    let cfg = StreamConfig {
        max_input_len: a.max_input_len,
        max_target_len: a.max_target_len,
        corruption: CorruptionConfig::new(a.density, a.mean_span, a.seed)?,
        ..StreamConfig::new(a.seed).with_shard(shard, count)
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Resolves the mixture and builds sources for every positive-weight task.
fn stream_inputs(a: &StreamArgs) -> Res<(MixtureSpec, SourceSet)> {
    let reg = load_registry_args(&a.registry)?;
    let mix = match &a.mixture {
        Some(p) => MixtureSpec::from_tsv(&read_file(p)?).map_err(|e| Failure(format!("{}: {e}", p.display())))?,
        None => MixtureSpec::new(capped_proportional(&reg, DEFAULT_CAP)?, RRatio::new(0.0)?, None)?,
    };
    let mut sources = SourceSet::new();
    if mix.r_ratio.supervised_fraction() > 0.0 {
        for (name, w) in mix.supervised.iter() {
            if w <= 0.0 {
                continue;
            }
            let Some(task) = reg.get(name) else {
                return fail(format!("mixture task {name:?} is not in the registry"));
            };
            match &a.data {
                Some(dir) => {
                    let path = dir.join(format!("{name}.jsonl"));
                    let rows = read_field_rows(&path)?;
                    let src =
                        VecSource::formatted(task, &rows).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
                    sources.insert_task(name, task.family, src);
                }
                None => sources.insert_task(name, task.family, SyntheticSource::new(name, task.train_size as usize)),
            }
        }
    }
    if mix.r_ratio.get() > 0.0 {
        let id = mix.unsupervised_source.clone().unwrap_or_else(|| "text".to_string());
        sources = match &a.text {
            Some(p) => sources.with_unsupervised(id, VecTextSource::from_lines(&read_file(p)?)),
            None => sources.with_unsupervised(id, SyntheticTextSource::new(100_000, a.seed, 16, 256)),
        };
    }
    Ok((mix, sources))
}

/// One JSON object of string fields per line.
fn read_field_rows(path: &Path) -> Res<Vec<BTreeMap<String, String>>> {
    let text = read_file(path)?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: BTreeMap<String, String> =
            serde_json::from_str(line).map_err(|e| Failure(format!("{}:{}: {e}", path.display(), i + 1)))?;
        rows.push(row);
    }
    Ok(rows)
}

fn stream_cmd(cmd: StreamCmd, stdout: &mut dyn Write) -> Res {
    match cmd {
        StreamCmd::Sample {
            stream,
            n,
            out,
            resume,
            save_state,
        } => {
            let (mix, sources) = stream_inputs(&stream)?;
            let shards: Vec<(u64, u64)> = match stream.shard {
                ShardArg::One(i, c) => vec![(i, c)],
                ShardArg::All(c) => (0..c).map(|i| (i, c)).collect(),
            };
            if shards.len() > 1 && (resume.is_some() || save_state.is_some()) {
                return fail("--resume and --save-state need a single shard");
            }
            for &(i, c) in &shards {
                let cfg = stream_config(&stream, i, c)?;
                let mut s = match &resume {
                    Some(p) => MixtureStream::resume(&mix, &sources, cfg, &StreamState::from_json(&read_file(p)?)?)?,
                    None => MixtureStream::open(&mix, &sources, cfg)?,
                };
                let mut buf = Vec::new();
                for _ in 0..n {
                    write_jsonl(&mut buf, [&s.next_record()?])?;
                }
                match (&out, shards.len()) {
                    (Some(p), 1) => write_file(p, &buf)?,
                    (Some(p), _) => write_file(&PathBuf::from(format!("{}.shard{i}", p.display())), &buf)?,
                    (None, _) => stdout.write_all(&buf)?,
                }
                if let Some(p) = &save_state {
                    write_file(p, s.snapshot().to_json().as_bytes())?;
                }
            }
            Ok(())
        }
        StreamCmd::Stats { stream, n, out } => {
            let (mix, sources) = stream_inputs(&stream)?;
            let ShardArg::One(i, c) = stream.shard else {
                return fail("stream stats takes a single shard");
            };
            let mut s = MixtureStream::open(&mix, &sources, stream_config(&stream, i, c)?)?;
            emit(out, stdout, composition_stats(&mut s, n)?.to_tsv())
        }
    }
}

fn corrupt_demo(
    density: f64,
    mean_span: f64,
    seed: u64,
    input: Option<PathBuf>,
    out: Option<PathBuf>,
    stdout: &mut dyn Write,
) -> Res {
    let cfg = CorruptionConfig::new(density, mean_span, seed)?;
    let lines: Vec<String> = match &input {
        Some(p) => read_file(p)?.lines().map(str::to_string).collect(),
        None => io::stdin().lock().lines().collect::<Result<_, _>>()?,
    };
    let mut text = String::new();
    for (i, line) in lines.iter().enumerate() {
        let words: Vec<&str> = line.split_whitespace().collect();
        if words.is_empty() {
            continue;
        }
        let pair = if words.len() < 2 {
            apply_spans(&words, &[])
        } else {
            corrupt(&words, &cfg, i as u64).map_err(|e| Failure(format!("line {}: {e}", i + 1)))?
        };
        let (inp, tgt) = pair.render();
        text.push_str(&serde_json::json!({ "input": inp, "target": tgt }).to_string());
        text.push('\n');
    }
    emit(out, stdout, text)
}

fn plan_cmd(cmd: PlanCmd, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Res {
    match cmd {
        PlanCmd::Pairwise {
            families,
            steps,
            batch,
            out,
        } => {
            let fams = match families {
                Some(s) => Family::parse_list(&s)?,
                None => bundled::TRANSFER_FAMILIES.to_vec(),
            };
            let plans = plan_pairwise(&fams, steps, batch)?;
            if fams.len() == bundled::TRANSFER_FAMILIES.len() {
                writeln!(
                    stderr,
                    "note: {} manifests = F + F(F-1)/2 for F = {}; the published study quotes {}",
                    pairwise_model_count(fams.len()),
                    fams.len(),
                    REPORTED_PAIRWISE_MODEL_COUNT
                )?;
            }
            emit(out, stdout, manifests_to_json(&plans))
        }
        PlanCmd::Scaling {
            registry,
            sizes,
            seeds,
            batches,
            steps,
            r_ratio,
            out,
        } => {
            let reg = load_registry_args(&registry)?;
            emit(
                out,
                stdout,
                manifests_to_json(&plan_scaling(&reg, &sizes, &seeds, r_ratio, steps, &batches)?),
            )
        }
        PlanCmd::SampleEfficiency {
            checkpoints,
            finetune_steps,
            batch,
            out,
        } => emit(
            out,
            stdout,
            manifests_to_json(&plan_sample_efficiency(&checkpoints, finetune_steps, batch)?),
        ),
        PlanCmd::Schedules {
            pretrain_steps,
            prefinetune_steps,
            finetune_steps,
            batch,
            seq_len,
            out,
        } => {
            let steps = compare_schedules(pretrain_steps, prefinetune_steps, finetune_steps)?;
            let mut value = serde_json::json!({ "steps": steps });
            if let (Some(b), Some(l)) = (batch, seq_len) {
                value["tokens"] = serde_json::to_value(steps.in_tokens(b, l)?)?;
            }
            let mut text = serde_json::to_string_pretty(&value)?;
            text.push('\n');
            emit(out, stdout, text)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("taskmix").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn shard_syntax() {
        assert_eq!(parse_shard("1/4"), Ok(ShardArg::One(1, 4)));
        assert_eq!(parse_shard("all/3"), Ok(ShardArg::All(3)));
        assert!(parse_shard("4/4").is_err());
        assert!(parse_shard("0/0").is_err());
        assert!(parse_shard("x").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(call(&["registry", "totals"]).0, 0);
        assert_eq!(call(&["registry", "totals", "--bogus"]).0, 1);
        assert_eq!(call(&[]).0, 1);
        let (code, out, _) = call(&["stream", "sample", "--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("--seed"));
        assert_eq!(call(&["registry", "totals", "--registry", "/nonexistent.tsv"]).0, 2);
    }

    #[test]
    fn randomized_commands_need_a_seed() {
        assert_eq!(call(&["stream", "sample", "--n", "1"]).0, 1);
        assert_eq!(call(&["corrupt", "demo"]).0, 1);
        assert_eq!(call(&["mixture", "compile", "--subset-sizes", "3"]).0, 1);
        assert_eq!(call(&["plan", "scaling"]).0, 1);
    }
}
