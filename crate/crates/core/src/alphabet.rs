//! Ranked alphabets and the `%terminals` declaration line.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::parse::ParseError;

/// Index of a symbol inside its [`RankedAlphabet`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(pub u32);

impl Symbol {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Name of the delay emitted when an application is inspected.
pub const DELAY_APP: &str = "R";
/// Name of the delay emitted when a beta-reduction is performed.
pub const DELAY_BETA: &str = "b";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlphabetError {
    #[error("duplicate symbol `{0}`")]
    Duplicate(String),
    #[error("unknown symbol `{0}`")]
    Unknown(String),
    #[error("symbol `{name}` has arity {found}, expected {expected}")]
    ArityMismatch {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("alphabets differ")]
    Mismatch,
}

#[derive(Debug, PartialEq, Eq, Hash)]
struct AlphabetData {
    symbols: Vec<(String, usize)>,
}

/// An ordered list of symbols with arities. Cheap to clone.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RankedAlphabet {
    data: Arc<AlphabetData>,
}

impl fmt::Debug for RankedAlphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RankedAlphabet({})", self.declaration())
    }
}

impl RankedAlphabet {
    pub fn new<S: Into<String>>(symbols: impl IntoIterator<Item = (S, usize)>) -> Result<Self, AlphabetError> {
        let mut seen = HashMap::new();
        let mut list = Vec::new();
        for (name, arity) in symbols {
            let name = name.into();
            if seen.insert(name.clone(), ()).is_some() {
                return Err(AlphabetError::Duplicate(name));
            }
            list.push((name, arity));
        }
        Ok(RankedAlphabet {
            data: Arc::new(AlphabetData { symbols: list }),
        })
    }

    pub fn len(&self) -> usize {
        self.data.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.symbols.is_empty()
    }

    pub fn symbols(&self) -> impl Iterator<Item = Symbol> + '_ {
        (0..self.len() as u32).map(Symbol)
    }

    pub fn name(&self, s: Symbol) -> &str {
        &self.data.symbols[s.index()].0
    }

    pub fn arity(&self, s: Symbol) -> usize {
        self.data.symbols[s.index()].1
    }

    /// Maximal arity `N` (0 for the empty alphabet).
    pub fn max_arity(&self) -> usize {
        self.data.symbols.iter().map(|s| s.1).max().unwrap_or(0)
    }

    pub fn lookup(&self, name: &str) -> Option<Symbol> {
        self.data
            .symbols
            .iter()
            .position(|(n, _)| n == name)
            .map(|i| Symbol(i as u32))
    }

    pub fn symbol(&self, name: &str) -> Result<Symbol, AlphabetError> {
        self.lookup(name)
            .ok_or_else(|| AlphabetError::Unknown(name.to_string()))
    }

    /// True when every symbol has arity one.
    pub fn is_word_alphabet(&self) -> bool {
        self.data.symbols.iter().all(|s| s.1 == 1)
    }

    /// The alphabet extended by the two unary delay symbols.
    pub fn with_delays(&self) -> Result<Self, AlphabetError> {
        let mut syms = self.data.symbols.clone();
        syms.push((DELAY_APP.to_string(), 1));
        syms.push((DELAY_BETA.to_string(), 1));
        RankedAlphabet::new(syms)
    }

    pub fn has_delays(&self) -> bool {
        matches!(self.lookup(DELAY_APP), Some(s) if self.arity(s) == 1)
            && matches!(self.lookup(DELAY_BETA), Some(s) if self.arity(s) == 1)
    }

    /// `f:2 g:1 a:0`
    pub fn declaration(&self) -> String {
        self.data
            .symbols
            .iter()
            .map(|(n, a)| format!("{n}:{a}"))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Parses the body of a `%terminals` line (without the keyword).
    pub fn parse_declaration(body: &str, line: usize) -> Result<Self, ParseError> {
        let mut syms = Vec::new();
        let mut col = 1;
        for tok in body.split_whitespace() {
            let (name, arity) = tok
                .split_once(':')
                .ok_or_else(|| ParseError::new(line, col, format!("expected name:arity, got `{tok}`")))?;
            if !crate::parse::is_ident(name) {
                return Err(ParseError::new(line, col, format!("bad symbol name `{name}`")));
            }
            let arity: usize = arity
                .parse()
                .map_err(|_| ParseError::new(line, col, format!("bad arity in `{tok}`")))?;
            syms.push((name.to_string(), arity));
            col += tok.len() + 1;
        }
        RankedAlphabet::new(syms).map_err(|e| ParseError::new(line, 1, e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn declaration_round_trip() {
        let a = RankedAlphabet::parse_declaration("f:2 g:1 a:0", 1).unwrap();
        assert_eq!(a.len(), 3);
        assert_eq!(a.max_arity(), 2);
        assert_eq!(a.arity(a.symbol("g").unwrap()), 1);
        assert_eq!(a.declaration(), "f:2 g:1 a:0");
    }

    #[test]
    fn duplicates_rejected() {
        assert!(RankedAlphabet::parse_declaration("f:2 f:1", 1).is_err());
        assert!(RankedAlphabet::parse_declaration("f2", 1).is_err());
    }

    #[test]
    fn delays_appended() {
        let a = RankedAlphabet::parse_declaration("f:2 g:1 a:0", 1).unwrap();
        let s = a.with_delays().unwrap();
        assert!(s.has_delays());
        assert_eq!(s.lookup("f"), a.lookup("f"));
        assert!(s.with_delays().is_err());
    }
}
