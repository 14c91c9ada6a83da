use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// An interned coordinate name such as `q1`, `p2` or `v1`.
///
/// Symbols compare in natural order: alphabetic prefix first, then the numeric
/// suffix as a number, so `p2 < p10 < q1`. This is the fixed global variable
/// order used by every normal form.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(name: &str) -> Self {
        Symbol(Arc::from(name))
    }

    /// Builds `prefix` followed by a 1-based index, e.g. `indexed("p", 2) == "p2"`.
    pub fn indexed(prefix: &str, index: usize) -> Self {
        Symbol::new(&format!("{prefix}{index}"))
    }

    pub fn name(&self) -> &str {
        &self.0
    }

    fn split(&self) -> (&str, Option<u64>) {
        let s = self.name();
        let cut = s
            .char_indices()
            .rev()
            .take_while(|(_, c)| c.is_ascii_digit())
            .last()
            .map(|(i, _)| i)
            .unwrap_or(s.len());
        let (head, tail) = s.split_at(cut);
        (head, tail.parse().ok())
    }
}

impl Ord for Symbol {
    fn cmp(&self, other: &Self) -> Ordering {
        let (ha, na) = self.split();
        let (hb, nb) = other.split();
        ha.cmp(hb)
            .then_with(|| na.cmp(&nb))
            .then_with(|| self.name().cmp(other.name()))
    }
}

impl PartialOrd for Symbol {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Self {
        Symbol::new(s)
    }
}

impl Serialize for Symbol {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Symbol {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(Symbol::new(&s))
    }
}

/// What a coordinate means inside the system it belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    State,
    Costate,
    Control,
    FactorState,
    FactorCostate,
    FactorControl,
}

/// Ordered list of distinct symbols, each tagged with its role.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CoordinateFrame {
    entries: Vec<(Symbol, Role)>,
}

impl CoordinateFrame {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a symbol. Returns `false` (and leaves the frame unchanged) if the
    /// name is already present.
    pub fn push(&mut self, symbol: Symbol, role: Role) -> bool {
        if self.contains(&symbol) {
            return false;
        }
        self.entries.push((symbol, role));
        true
    }

    pub fn with(mut self, symbols: impl IntoIterator<Item = Symbol>, role: Role) -> Self {
        for s in symbols {
            self.push(s, role);
        }
        self
    }

    pub fn contains(&self, symbol: &Symbol) -> bool {
        self.entries.iter().any(|(s, _)| s == symbol)
    }

    pub fn lookup(&self, name: &str) -> Option<&Symbol> {
        self.entries.iter().map(|(s, _)| s).find(|s| s.name() == name)
    }

    pub fn role(&self, symbol: &Symbol) -> Option<Role> {
        self.entries.iter().find(|(s, _)| s == symbol).map(|(_, r)| *r)
    }

    pub fn symbols(&self) -> impl Iterator<Item = &Symbol> {
        self.entries.iter().map(|(s, _)| s)
    }

    pub fn with_role(&self, role: Role) -> Vec<Symbol> {
        self.entries
            .iter()
            .filter(|(_, r)| *r == role)
            .map(|(s, _)| s.clone())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
