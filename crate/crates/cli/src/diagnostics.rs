use std::fmt;

/// A validation message anchored to a 1-based line and column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl Diagnostic {
    pub fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        Diagnostic {
            line,
            column,
            message: message.into(),
        }
    }

    /// Anchors `message` at the first quoted occurrence of `needle` after
    /// the key `section`, falling back to anywhere in `text`, then to the
    /// section key itself, then to the start of the file.
    pub fn at(text: &str, section: Option<&str>, needle: Option<&str>, message: impl Into<String>) -> Self {
        let (line, column) = anchor(text, section, needle);
        Diagnostic::new(line, column, message)
    }

    pub fn render(&self, path: &str) -> String {
        format!("{path}:{}:{}: error: {}", self.line, self.column, self.message)
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: error: {}", self.line, self.column, self.message)
    }
}

fn quoted(s: &str) -> String {
    serde_json::to_string(s).unwrap_or_else(|_| format!("\"{s}\""))
}

fn key_offset(text: &str, key: &str) -> Option<usize> {
    text.find(&format!("{}:", quoted(key)))
        .or_else(|| text.find(&format!("{} :", quoted(key))))
        .or_else(|| text.find(&quoted(key)))
}

fn anchor(text: &str, section: Option<&str>, needle: Option<&str>) -> (usize, usize) {
    let start = section.and_then(|s| key_offset(text, s));
    let offset = needle
        .and_then(|n| {
            let q = quoted(n);
            start
                .and_then(|s| text[s..].find(&q).map(|i| s + i))
                .or_else(|| text.find(&q))
        })
        .or(start)
        .unwrap_or(0);
    line_col(text, offset)
}

/// 1-based line and column of a byte offset.
pub fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}
