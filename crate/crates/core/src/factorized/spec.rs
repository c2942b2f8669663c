use std::path::Path;

use crate::error::{Error, Result};

/// Attributes taken from one table. `None` selects every feature column.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableSelection {
    pub table: String,
    pub attrs: Option<Vec<String>>,
}

/// Equality join between two tables, possibly on several column pairs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JoinEdge {
    pub left: String,
    pub right: String,
    pub left_keys: Vec<String>,
    pub right_keys: Vec<String>,
}

/// A user-supplied join tree. The first table listed is the root (the fact
/// table when imputing).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JoinSpec {
    pub tables: Vec<TableSelection>,
    pub edges: Vec<JoinEdge>,
}

impl JoinSpec {
    /// Parses the line format:
    ///
    /// ```text
    /// # tables, root first; an optional attribute list follows the colon
    /// sales: units, price
    /// stores
    /// # joins
    /// sales.store = stores.store
    /// ```
    ///
    /// Several `=` lines between the same pair of tables form one composite
    /// key.
    pub fn parse(text: &str) -> Result<Self> {
        let mut tables: Vec<TableSelection> = Vec::new();
        let mut edges: Vec<JoinEdge> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |what: &str| Error::usage(format!("join spec line {}: {what}: '{line}'", lineno + 1));
            if let Some((l, r)) = line.split_once('=') {
                let (lt, lc) = qualified(l.trim()).ok_or_else(|| bad("expected table.column"))?;
                let (rt, rc) = qualified(r.trim()).ok_or_else(|| bad("expected table.column"))?;
                if lt == rt {
                    return Err(bad("a table cannot join itself"));
                }
                if let Some(e) = edges.iter_mut().find(|e| e.left == lt && e.right == rt) {
                    e.left_keys.push(lc.to_string());
                    e.right_keys.push(rc.to_string());
                } else if let Some(e) = edges.iter_mut().find(|e| e.left == rt && e.right == lt) {
                    e.left_keys.push(rc.to_string());
                    e.right_keys.push(lc.to_string());
                } else {
                    edges.push(JoinEdge {
                        left: lt.to_string(),
                        right: rt.to_string(),
                        left_keys: vec![lc.to_string()],
                        right_keys: vec![rc.to_string()],
                    });
                }
                continue;
            }
            let (name, attrs) = match line.split_once(':') {
                Some((n, rest)) => {
                    let attrs: Vec<String> = rest
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(String::from)
                        .collect();
                    (n.trim(), Some(attrs))
                }
                None => (line, None),
            };
            if name.is_empty() || name.contains(char::is_whitespace) || name.contains('.') {
                return Err(bad("bad table name"));
            }
            if tables.iter().any(|t| t.table == name) {
                return Err(bad("table listed twice"));
            }
            tables.push(TableSelection {
                table: name.to_string(),
                attrs,
            });
        }
        if tables.is_empty() {
            return Err(Error::usage("join spec lists no tables"));
        }
        for e in &edges {
            for t in [&e.left, &e.right] {
                if !tables.iter().any(|s| &s.table == t) {
                    return Err(Error::usage(format!("join references unlisted table '{t}'")));
                }
            }
        }
        Ok(Self { tables, edges })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::usage(format!("cannot read join spec {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn root(&self) -> &str {
        &self.tables[0].table
    }
}

fn qualified(s: &str) -> Option<(&str, &str)> {
    let (t, c) = s.split_once('.')?;
    let (t, c) = (t.trim(), c.trim());
    (!t.is_empty() && !c.is_empty()).then_some((t, c))
}
