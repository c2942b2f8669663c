use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ring::AttrKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Feature,
    JoinKey,
    Id,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnDef {
    pub name: String,
    pub kind: AttrKind,
    pub role: Role,
}

impl ColumnDef {
    pub fn feature(name: impl Into<String>, kind: AttrKind) -> Self {
        Self {
            name: name.into(),
            kind,
            role: Role::Feature,
        }
    }
}

/// Column definitions of a table. Names are unique.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    columns: Vec<ColumnDef>,
}

impl Schema {
    pub fn new(columns: Vec<ColumnDef>) -> Result<Self> {
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::usage(format!("duplicate column name '{}'", c.name)));
            }
        }
        Ok(Self { columns })
    }

    pub fn columns(&self) -> &[ColumnDef] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Column indices with the feature role, in schema order.
    pub fn feature_columns(&self) -> Vec<usize> {
        (0..self.columns.len())
            .filter(|&i| self.columns[i].role == Role::Feature)
            .collect()
    }

    /// Parses the line-oriented `name,kind,role` format. Blank lines and
    /// lines starting with `#` are ignored; a missing role means `feature`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut columns = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = |what: &str| Error::usage(format!("schema line {}: {what}: '{line}'", lineno + 1));
            if parts.len() < 2 || parts.len() > 3 || parts[0].is_empty() {
                return Err(bad("expected name,kind[,role]"));
            }
            let kind = match parts[1] {
                "continuous" => AttrKind::Continuous,
                "categorical" => AttrKind::Categorical,
                _ => return Err(bad("kind must be continuous or categorical")),
            };
            let role = match parts.get(2).copied().unwrap_or("feature") {
                "feature" => Role::Feature,
                "join-key" | "key" => Role::JoinKey,
                "id" => Role::Id,
                _ => return Err(bad("role must be feature, join-key or id")),
            };
            columns.push(ColumnDef {
                name: parts[0].to_string(),
                kind,
                role,
            });
        }
        if columns.is_empty() {
            return Err(Error::usage("schema declares no columns"));
        }
        Self::new(columns)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::usage(format!("cannot read schema file {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| e.context(format!("schema {}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_schema_lines() {
        let s = Schema::parse("# flights\nid,categorical,id\nAirTime,continuous,feature\n\nDiverted,categorical\n")
            .unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.columns()[0].role, Role::Id);
        assert_eq!(s.columns()[2].role, Role::Feature);
        assert_eq!(s.feature_columns(), vec![1, 2]);
    }

    #[test]
    fn rejects_duplicates_and_bad_kinds() {
        assert!(Schema::parse("a,continuous\na,continuous").is_err());
        assert!(Schema::parse("a,text").is_err());
        assert!(Schema::parse("").is_err());
    }
}
