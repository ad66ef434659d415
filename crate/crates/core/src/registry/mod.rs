//! Task registry: load, validate and query the task table, and format raw
//! field maps into text-to-text examples.
//!
//! Registry files are UTF-8 TSV with the header
//! `name family collection train_size input_template target_template`.
//! Lines starting with `#` are comments. A `train_size` of `external` defers
//! the size to a size-overlay file (`name train_size`).

mod template;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use template::{Template, TemplateError};

pub const REGISTRY_HEADER: [&str; 6] = [
    "name",
    "family",
    "collection",
    "train_size",
    "input_template",
    "target_template",
];
pub const OVERLAY_HEADER: [&str; 2] = ["name", "train_size"];
const EXTERNAL: &str = "external";

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: duplicate task name {name:?}")]
    DuplicateName { line: usize, name: String },
    #[error("line {line}: task {name:?} has non-positive train_size")]
    NonPositiveSize { line: usize, name: String },
    #[error("task {0:?} has an external train_size but no overlay supplies it")]
    UnresolvedSize(String),
    #[error("overlay line {line}: {message}")]
    Overlay { line: usize, message: String },
    #[error("unknown task family {0:?}")]
    UnknownFamily(String),
    #[error("family set is empty")]
    EmptyFamilySet,
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("task {task}: no value for placeholder {field:?}")]
    MissingField { task: String, field: String },
    #[error("task {task}: field {field:?} is not a placeholder of either template")]
    UnknownField { task: String, field: String },
    #[error("task {task}: formatted {side} is empty")]
    EmptyText { task: String, side: &'static str },
}

/// Task family tags. Declaration order is the tie-break order used when
/// ranking families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Family {
    Sum,
    Dlg,
    Nli,
    Cls,
    Sem,
    Cmns,
    Cbqa,
    Rc,
    Other,
}

impl Family {
    pub const ALL: [Family; 9] = [
        Family::Sum,
        Family::Dlg,
        Family::Nli,
        Family::Cls,
        Family::Sem,
        Family::Cmns,
        Family::Cbqa,
        Family::Rc,
        Family::Other,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Family::Sum => "SUM",
            Family::Dlg => "DLG",
            Family::Nli => "NLI",
            Family::Cls => "CLS",
            Family::Sem => "SEM",
            Family::Cmns => "CMNS",
            Family::Cbqa => "CBQA",
            Family::Rc => "RC",
            Family::Other => "OTHER",
        }
    }

    /// Parses a comma-separated list such as `NLI,CLS`.
    pub fn parse_list(s: &str) -> Result<Vec<Family>, RegistryError> {
        s.split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(str::parse)
            .collect()
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Family {
    type Err = RegistryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let upper = s.trim().to_ascii_uppercase();
        Family::ALL
            .into_iter()
            .find(|f| f.tag() == upper)
            .ok_or_else(|| RegistryError::UnknownFamily(s.to_string()))
    }
}

impl From<Family> for String {
    fn from(f: Family) -> String {
        f.tag().to_string()
    }
}

impl TryFrom<String> for Family {
    type Error = RegistryError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// One registered task.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskSpec {
    pub name: String,
    pub family: Family,
    pub collection: String,
    pub train_size: u64,
    pub input_template: Template,
    pub target_template: Template,
}

impl TaskSpec {
    pub fn new(
        name: impl Into<String>,
        family: Family,
        collection: impl Into<String>,
        train_size: u64,
        input_template: &str,
        target_template: &str,
    ) -> Result<Self, TemplateError> {
        Ok(Self {
            name: name.into(),
            family,
            collection: collection.into(),
            train_size,
            input_template: Template::parse(input_template)?,
            target_template: Template::parse(target_template)?,
        })
    }

    /// Union of both templates' placeholders.
    pub fn fields(&self) -> BTreeSet<&str> {
        self.input_template
            .fields()
            .into_iter()
            .chain(self.target_template.fields())
            .collect()
    }
}

/// A single text-to-text example with task provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleRecord {
    pub task: String,
    /// `None` for records drawn from the unsupervised stream.
    pub family: Option<Family>,
    pub inputs: String,
    pub targets: String,
    pub index: u64,
    #[serde(default)]
    pub truncated: bool,
}

/// Ordered, name-unique collection of tasks. Immutable once built.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Registry {
    tasks: Vec<TaskSpec>,
    by_name: HashMap<String, usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RegistryTotals {
    pub task_count: usize,
    pub example_total: u64,
}

impl Registry {
    pub fn new(tasks: Vec<TaskSpec>) -> Result<Self, RegistryError> {
        let mut by_name = HashMap::with_capacity(tasks.len());
        for (i, t) in tasks.iter().enumerate() {
            if t.train_size == 0 {
                return Err(RegistryError::NonPositiveSize {
                    line: i + 1,
                    name: t.name.clone(),
                });
            }
            if by_name.insert(t.name.clone(), i).is_some() {
                return Err(RegistryError::DuplicateName {
                    line: i + 1,
                    name: t.name.clone(),
                });
            }
        }
        Ok(Self { tasks, by_name })
    }

    pub fn tasks(&self) -> &[TaskSpec] {
        &self.tasks
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&TaskSpec> {
        self.by_name.get(name).map(|&i| &self.tasks[i])
    }

    pub fn contains(&self, name: &str) -> bool {
        self.by_name.contains_key(name)
    }

    pub fn families(&self) -> BTreeSet<Family> {
        self.tasks.iter().map(|t| t.family).collect()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tasks.iter().map(|t| t.name.as_str())
    }

    pub fn totals(&self) -> RegistryTotals {
        registry_totals(self)
    }

    /// Keeps the tasks accepted by `keep`, preserving order.
    pub fn retain(&self, mut keep: impl FnMut(&TaskSpec) -> bool) -> Registry {
        let tasks: Vec<TaskSpec> = self.tasks.iter().filter(|t| keep(t)).cloned().collect();
        let by_name = tasks.iter().enumerate().map(|(i, t)| (t.name.clone(), i)).collect();
        Registry { tasks, by_name }
    }

    /// Parses registry TSV. Sizes marked `external` are resolved from `overlay`.
    pub fn from_tsv(text: &str, overlay: Option<&SizeOverlay>) -> Result<Self, RegistryError> {
        let mut tasks = Vec::new();
        let mut seen: HashMap<String, usize> = HashMap::new();
        let mut used_overlay = BTreeSet::new();
        let mut header_seen = false;

        for (lineno, line) in numbered_lines(text) {
            if !header_seen {
                expect_header(lineno, line, &REGISTRY_HEADER)?;
                header_seen = true;
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != REGISTRY_HEADER.len() {
                return Err(parse_err(
                    lineno,
                    format!("expected {} columns, found {}", REGISTRY_HEADER.len(), cols.len()),
                ));
            }
            let name = cols[0].trim();
            if name.is_empty() {
                return Err(parse_err(lineno, "empty task name"));
            }
            let family: Family = cols[1]
                .parse()
                .map_err(|_| parse_err(lineno, format!("unknown family {:?}", cols[1])))?;
            let size_field = cols[3].trim();
            let train_size = if size_field == EXTERNAL {
                let size = overlay
                    .and_then(|o| o.get(name))
                    .ok_or_else(|| RegistryError::UnresolvedSize(name.to_string()))?;
                used_overlay.insert(name.to_string());
                size
            } else {
                let size: i128 = size_field
                    .parse()
                    .map_err(|_| parse_err(lineno, format!("bad train_size {size_field:?}")))?;
                if size <= 0 {
                    return Err(RegistryError::NonPositiveSize {
                        line: lineno,
                        name: name.to_string(),
                    });
                }
                u64::try_from(size).map_err(|_| parse_err(lineno, "train_size too large"))?
            };
            if train_size == 0 {
                return Err(RegistryError::NonPositiveSize {
                    line: lineno,
                    name: name.to_string(),
                });
            }
            if seen.insert(name.to_string(), lineno).is_some() {
                return Err(RegistryError::DuplicateName {
                    line: lineno,
                    name: name.to_string(),
                });
            }
            let task = TaskSpec::new(name, family, cols[2].trim(), train_size, cols[4], cols[5])
                .map_err(|e| parse_err(lineno, format!("template: {e}")))?;
            tasks.push(task);
        }

        if let Some(o) = overlay {
            if let Some(stray) = o.names().find(|n| !used_overlay.contains(*n)) {
                return Err(RegistryError::Overlay {
                    line: o.line_of(stray),
                    message: format!("{stray:?} is not an external-size task of this registry"),
                });
            }
        }
        Registry::new(tasks)
    }

    /// Serializes with every size resolved to an integer.
    pub fn to_tsv(&self) -> String {
        let mut out = REGISTRY_HEADER.join("\t");
        out.push('\n');
        for t in &self.tasks {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\n",
                t.name, t.family, t.collection, t.train_size, t.input_template, t.target_template
            ));
        }
        out
    }
}

/// Sizes for tasks whose registry row says `external`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SizeOverlay {
    sizes: BTreeMap<String, (u64, usize)>,
}

impl SizeOverlay {
    pub fn from_tsv(text: &str) -> Result<Self, RegistryError> {
        let mut sizes = BTreeMap::new();
        let mut header_seen = false;
        for (lineno, line) in numbered_lines(text) {
            if !header_seen {
                expect_header(lineno, line, &OVERLAY_HEADER).map_err(|e| overlay_err(lineno, e.to_string()))?;
                header_seen = true;
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 2 {
                return Err(overlay_err(lineno, format!("expected 2 columns, found {}", cols.len())));
            }
            let name = cols[0].trim();
            let size: u64 = cols[1]
                .trim()
                .parse()
                .map_err(|_| overlay_err(lineno, format!("bad train_size {:?}", cols[1])))?;
            if size == 0 {
                return Err(overlay_err(lineno, format!("{name:?} has non-positive train_size")));
            }
            if sizes.insert(name.to_string(), (size, lineno)).is_some() {
                return Err(overlay_err(lineno, format!("duplicate name {name:?}")));
            }
        }
        Ok(Self { sizes })
    }

    pub fn get(&self, name: &str) -> Option<u64> {
        self.sizes.get(name).map(|&(s, _)| s)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.sizes.keys().map(String::as_str)
    }

    fn line_of(&self, name: &str) -> usize {
        self.sizes.get(name).map(|&(_, l)| l).unwrap_or(0)
    }
}

fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

fn expect_header(lineno: usize, line: &str, expected: &[&str]) -> Result<(), RegistryError> {
    let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
    if cols != expected {
        return Err(parse_err(
            lineno,
            format!("expected header {:?}, found {:?}", expected.join("\t"), line),
        ));
    }
    Ok(())
}

fn parse_err(line: usize, message: impl Into<String>) -> RegistryError {
    RegistryError::Parse {
        line,
        message: message.into(),
    }
}

fn overlay_err(line: usize, message: impl Into<String>) -> RegistryError {
    RegistryError::Overlay {
        line,
        message: message.into(),
    }
}

fn read(path: &Path) -> Result<String, RegistryError> {
    std::fs::read_to_string(path).map_err(|source| RegistryError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Loads a registry file whose sizes are all explicit.
pub fn load_registry(path: impl AsRef<Path>) -> Result<Registry, RegistryError> {
    Registry::from_tsv(&read(path.as_ref())?, None)
}

/// Loads a registry file, resolving `external` sizes from an overlay file.
pub fn load_registry_with_overlay(
    path: impl AsRef<Path>,
    overlay: impl AsRef<Path>,
) -> Result<Registry, RegistryError> {
    let overlay = SizeOverlay::from_tsv(&read(overlay.as_ref())?)?;
    Registry::from_tsv(&read(path.as_ref())?, Some(&overlay))
}

pub fn save_registry(reg: &Registry, path: impl AsRef<Path>) -> Result<(), RegistryError> {
    let path = path.as_ref();
    std::fs::write(path, reg.to_tsv()).map_err(|source| RegistryError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn registry_totals(reg: &Registry) -> RegistryTotals {
    RegistryTotals {
        task_count: reg.len(),
        example_total: reg.tasks.iter().map(|t| t.train_size).sum(),
    }
}

pub fn filter_by_family(reg: &Registry, fams: &[Family]) -> Result<Registry, RegistryError> {
    if fams.is_empty() {
        return Err(RegistryError::EmptyFamilySet);
    }
    Ok(reg.retain(|t| fams.contains(&t.family)))
}

/// Substitutes `fields` into both templates of `task`.
///
/// Every placeholder needs a value, and every supplied key must be a
/// placeholder of at least one template.
pub fn format_example(task: &TaskSpec, fields: &BTreeMap<String, String>) -> Result<ExampleRecord, FormatError> {
    let declared = task.fields();
    if let Some(unknown) = fields.keys().find(|k| !declared.contains(k.as_str())) {
        return Err(FormatError::UnknownField {
            task: task.name.clone(),
            field: unknown.clone(),
        });
    }
    let missing = |field: String| FormatError::MissingField {
        task: task.name.clone(),
        field,
    };
    let inputs = task.input_template.render(fields).map_err(missing)?;
    let targets = task.target_template.render(fields).map_err(missing)?;
    for (side, text) in [("inputs", &inputs), ("targets", &targets)] {
        if text.is_empty() {
            return Err(FormatError::EmptyText {
                task: task.name.clone(),
                side,
            });
        }
    }
    Ok(ExampleRecord {
        task: task.name.clone(),
        family: Some(task.family),
        inputs,
        targets,
        index: 0,
        truncated: false,
    })
}

/// Renders entity annotations as the ordered tag/entity target sequence used
/// for sequence-to-sequence NER: `[("PER","Alice"),("LOC","New York")]`
/// becomes `[PER] Alice [LOC] New York`.
pub fn ner_target<'a>(entities: impl IntoIterator<Item = (&'a str, &'a str)>) -> String {
    entities
        .into_iter()
        .map(|(tag, text)| format!("[{tag}] {text}"))
        .collect::<Vec<_>>()
        .join(" ")
}
