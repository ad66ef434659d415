use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("unclosed placeholder starting at byte {0}")]
    Unclosed(usize),
    #[error("stray '}}' at byte {0} (write '}}}}' for a literal brace)")]
    StrayClose(usize),
    #[error("invalid placeholder name {0:?}")]
    BadName(String),
    #[error("template contains a tab or newline")]
    ControlChar,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Piece {
    Text(String),
    Field(String),
}

/// A text template with single-brace named placeholders (`{question}`).
/// `{{` and `}}` produce literal braces.
#[derive(Clone, PartialEq, Eq)]
pub struct Template {
    source: String,
    pieces: Vec<Piece>,
}

impl Template {
    pub fn parse(source: &str) -> Result<Self, TemplateError> {
        if source.contains(['\t', '\n', '\r']) {
            return Err(TemplateError::ControlChar);
        }
        let mut pieces = Vec::new();
        let mut text = String::new();
        let mut chars = source.char_indices().peekable();
        while let Some((at, c)) = chars.next() {
            match c {
                '{' if matches!(chars.peek(), Some((_, '{'))) => {
                    chars.next();
                    text.push('{');
                }
                '}' if matches!(chars.peek(), Some((_, '}'))) => {
                    chars.next();
                    text.push('}');
                }
                '}' => return Err(TemplateError::StrayClose(at)),
                '{' => {
                    let mut name = String::new();
                    let mut closed = false;
                    for (_, c) in chars.by_ref() {
                        if c == '}' {
                            closed = true;
                            break;
                        }
                        name.push(c);
                    }
                    if !closed {
                        return Err(TemplateError::Unclosed(at));
                    }
                    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                        return Err(TemplateError::BadName(name));
                    }
                    if !text.is_empty() {
                        pieces.push(Piece::Text(std::mem::take(&mut text)));
                    }
                    pieces.push(Piece::Field(name));
                }
                c => text.push(c),
            }
        }
        if !text.is_empty() {
            pieces.push(Piece::Text(text));
        }
        Ok(Self {
            source: source.to_owned(),
            pieces,
        })
    }

    pub fn as_str(&self) -> &str {
        &self.source
    }

    /// Placeholder names in order of first appearance.
    pub fn fields(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for p in &self.pieces {
            if let Piece::Field(name) = p {
                if !out.contains(&name.as_str()) {
                    out.push(name);
                }
            }
        }
        out
    }

    /// Substitutes every placeholder. Returns the first missing name on failure.
    pub fn render(&self, values: &BTreeMap<String, String>) -> Result<String, String> {
        let mut out = String::new();
        for p in &self.pieces {
            match p {
                Piece::Text(t) => out.push_str(t),
                Piece::Field(name) => match values.get(name) {
                    Some(v) => out.push_str(v),
                    None => return Err(name.clone()),
                },
            }
        }
        Ok(out)
    }
}

impl fmt::Debug for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Template({:?})", self.source)
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vals(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn direct_substitution() {
        let t = Template::parse("q: {q} a:").unwrap();
        assert_eq!(t.fields(), vec!["q"]);
        assert_eq!(t.render(&vals(&[("q", "who?")])).unwrap(), "q: who? a:");
    }

    #[test]
    fn escaped_braces_are_literal() {
        let t = Template::parse("{{x}} {y} }}").unwrap();
        assert_eq!(t.fields(), vec!["y"]);
        assert_eq!(t.render(&vals(&[("y", "1")])).unwrap(), "{x} 1 }");
    }

    #[test]
    fn constant_template() {
        let t = Template::parse("yes").unwrap();
        assert!(t.fields().is_empty());
        assert_eq!(t.render(&BTreeMap::new()).unwrap(), "yes");
    }

    #[test]
    fn malformed() {
        assert_eq!(Template::parse("a {b"), Err(TemplateError::Unclosed(2)));
        assert_eq!(Template::parse("a } b"), Err(TemplateError::StrayClose(2)));
        assert!(matches!(Template::parse("{}"), Err(TemplateError::BadName(_))));
        assert!(matches!(Template::parse("{a b}"), Err(TemplateError::BadName(_))));
        assert_eq!(Template::parse("a\tb"), Err(TemplateError::ControlChar));
    }

    #[test]
    fn missing_value_is_reported() {
        let t = Template::parse("{a} {b}").unwrap();
        assert_eq!(t.render(&vals(&[("a", "x")])), Err("b".to_string()));
    }
}
