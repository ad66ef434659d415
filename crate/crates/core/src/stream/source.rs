use std::collections::BTreeMap;

use indexmap::IndexMap;

use crate::registry::{format_example, Family, FormatError, TaskSpec};
use crate::rng::{counter_value, derive_key, fnv1a64};

/// A supervised example before it is stamped with task provenance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextPair {
    pub inputs: String,
    pub targets: String,
}

impl TextPair {
    pub fn new(inputs: impl Into<String>, targets: impl Into<String>) -> Self {
        Self {
            inputs: inputs.into(),
            targets: targets.into(),
        }
    }
}

/// Random-access supervised examples for one task.
///
/// Repeatable sources are revisited in a fresh seeded order every epoch;
/// non-repeatable ones are read once, in index order.
pub trait ExampleSource: Send + Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn is_repeatable(&self) -> bool {
        true
    }

    fn example(&self, index: usize) -> TextPair;
}

/// Raw text documents for the unsupervised denoising stream.
pub trait TextSource: Send + Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn is_repeatable(&self) -> bool {
        true
    }

    fn document(&self, index: usize) -> String;
}

/// In-memory examples.
#[derive(Debug, Clone, Default)]
pub struct VecSource {
    examples: Vec<TextPair>,
    repeatable: bool,
}

impl VecSource {
    pub fn new(examples: Vec<TextPair>) -> Self {
        Self {
            examples,
            repeatable: true,
        }
    }

    /// A source that is exhausted after one pass.
    pub fn once(examples: Vec<TextPair>) -> Self {
        Self {
            examples,
            repeatable: false,
        }
    }

    /// Formats raw field maps through the task's templates.
    pub fn formatted(task: &TaskSpec, rows: &[BTreeMap<String, String>]) -> Result<Self, FormatError> {
        let examples = rows
            .iter()
            .map(|fields| format_example(task, fields).map(|r| TextPair::new(r.inputs, r.targets)))
            .collect::<Result<_, _>>()?;
        Ok(Self::new(examples))
    }
}

impl ExampleSource for VecSource {
    fn len(&self) -> usize {
        self.examples.len()
    }

    fn is_repeatable(&self) -> bool {
        self.repeatable
    }

    fn example(&self, index: usize) -> TextPair {
        self.examples[index].clone()
    }
}

/// Deterministic placeholder examples (`"<task> input #i"`), for demos and
/// tests where only the sampling behaviour matters.
#[derive(Debug, Clone)]
pub struct SyntheticSource {
    task: String,
    len: usize,
}

impl SyntheticSource {
    pub fn new(task: impl Into<String>, len: usize) -> Self {
        Self { task: task.into(), len }
    }
}

impl ExampleSource for SyntheticSource {
    fn len(&self) -> usize {
        self.len
    }

    fn example(&self, index: usize) -> TextPair {
        TextPair::new(
            format!("{} input #{index}", self.task),
            format!("{} target #{index}", self.task),
        )
    }
}

#[derive(Debug, Clone, Default)]
pub struct VecTextSource {
    docs: Vec<String>,
}

impl VecTextSource {
    pub fn new(docs: Vec<String>) -> Self {
        Self { docs }
    }

    /// One document per non-empty line.
    pub fn from_lines(text: &str) -> Self {
        Self::new(
            text.lines()
                .filter(|l| !l.trim().is_empty())
                .map(str::to_string)
                .collect(),
        )
    }
}

impl TextSource for VecTextSource {
    fn len(&self) -> usize {
        self.docs.len()
    }

    fn document(&self, index: usize) -> String {
        self.docs[index].clone()
    }
}

/// Pseudo-random word documents drawn from a small fixed vocabulary.
#[derive(Debug, Clone)]
pub struct SyntheticTextSource {
    len: usize,
    seed: u64,
    min_words: usize,
    max_words: usize,
}

const VOCAB: [&str; 32] = [
    "the", "a", "model", "data", "task", "text", "learn", "many", "of", "to", "and", "in", "language", "every",
    "mixture", "large", "small", "example", "train", "sample", "rate", "family", "transfer", "span", "noise", "token",
    "corpus", "with", "from", "new", "scale", "step",
];

impl SyntheticTextSource {
    pub fn new(len: usize, seed: u64, min_words: usize, max_words: usize) -> Self {
        assert!(min_words <= max_words, "min_words > max_words");
        Self {
            len,
            seed,
            min_words,
            max_words,
        }
    }
}

impl TextSource for SyntheticTextSource {
    fn len(&self) -> usize {
        self.len
    }

    fn document(&self, index: usize) -> String {
        let key = derive_key(&[fnv1a64(b"synthetic-text"), self.seed, index as u64]);
        let span = (self.max_words - self.min_words + 1) as u64;
        let n = self.min_words + (counter_value(key, 0) % span) as usize;
        (0..n)
            .map(|i| VOCAB[(counter_value(key, i as u64 + 1) % VOCAB.len() as u64) as usize])
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// A task's example source together with its family tag.
pub struct TaskSource {
    pub family: Family,
    pub source: Box<dyn ExampleSource>,
}

/// All sources a stream reads from: supervised tasks by name, plus an
/// optional unsupervised text stream.
#[derive(Default)]
pub struct SourceSet {
    pub(crate) tasks: IndexMap<String, TaskSource>,
    pub(crate) unsupervised: Option<(String, Box<dyn TextSource>)>,
}

impl SourceSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_task(mut self, name: impl Into<String>, family: Family, source: impl ExampleSource + 'static) -> Self {
        self.insert_task(name, family, source);
        self
    }

    pub fn insert_task(&mut self, name: impl Into<String>, family: Family, source: impl ExampleSource + 'static) {
        self.tasks.insert(
            name.into(),
            TaskSource {
                family,
                source: Box::new(source),
            },
        );
    }

    pub fn with_unsupervised(mut self, id: impl Into<String>, source: impl TextSource + 'static) -> Self {
        self.unsupervised = Some((id.into(), Box::new(source)));
        self
    }

    pub fn task(&self, name: &str) -> Option<&TaskSource> {
        self.tasks.get(name)
    }

    pub fn unsupervised_id(&self) -> Option<&str> {
        self.unsupervised.as_ref().map(|(id, _)| id.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_text_is_deterministic_and_bounded() {
        let s = SyntheticTextSource::new(10, 3, 5, 9);
        for i in 0..10 {
            let doc = s.document(i);
            assert_eq!(doc, s.document(i));
            let n = doc.split_whitespace().count();
            assert!((5..=9).contains(&n), "{n}");
        }
        assert_ne!(s.document(0), s.document(1));
    }

    #[test]
    fn formatted_source_uses_templates() {
        let task = TaskSpec::new("q", Family::Cbqa, "-", 2, "question: {q}", "{a}").unwrap();
        let rows: Vec<BTreeMap<String, String>> = vec![
            [("q".into(), "who?".into()), ("a".into(), "me".into())].into(),
            [("q".into(), "why?".into()), ("a".into(), "because".into())].into(),
        ];
        let src = VecSource::formatted(&task, &rows).unwrap();
        assert_eq!(src.len(), 2);
        assert_eq!(src.example(1), TextPair::new("question: why?", "because"));
    }

    #[test]
    fn lines_become_documents() {
        let s = VecTextSource::from_lines("one two\n\n three four \n");
        assert_eq!(s.len(), 2);
        assert_eq!(s.document(1), " three four ");
    }
}
