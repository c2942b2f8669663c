use serde::{Deserialize, Serialize};

/// Whether an attribute is real valued or an integer-coded category.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttrKind {
    Continuous,
    Categorical,
}

impl AttrKind {
    /// Key arity contributed by one attribute of this kind.
    pub fn arity(self) -> usize {
        match self {
            AttrKind::Continuous => 0,
            AttrKind::Categorical => 1,
        }
    }
}

/// A single attribute value as seen by the ring.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Value {
    Num(f64),
    Cat(u32),
}

impl Value {
    pub fn kind(self) -> AttrKind {
        match self {
            Value::Num(_) => AttrKind::Continuous,
            Value::Cat(_) => AttrKind::Categorical,
        }
    }

    pub fn as_num(self) -> Option<f64> {
        match self {
            Value::Num(x) => Some(x),
            Value::Cat(_) => None,
        }
    }

    pub fn as_cat(self) -> Option<u32> {
        match self {
            Value::Cat(c) => Some(c),
            Value::Num(_) => None,
        }
    }
}

/// The ordered attribute universe every triple is interpreted against.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttrSpace {
    names: Vec<String>,
    kinds: Vec<AttrKind>,
}

impl AttrSpace {
    pub fn new(attrs: impl IntoIterator<Item = (String, AttrKind)>) -> Self {
        let (names, kinds) = attrs.into_iter().unzip();
        Self { names, kinds }
    }

    /// A space of `m` continuous attributes named `x0..x{m-1}`.
    pub fn continuous(m: usize) -> Self {
        Self::new((0..m).map(|i| (format!("x{i}"), AttrKind::Continuous)))
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn kind(&self, i: usize) -> AttrKind {
        self.kinds[i]
    }

    pub fn kinds(&self) -> &[AttrKind] {
        &self.kinds
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}
