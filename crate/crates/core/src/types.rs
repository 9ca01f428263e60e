//! Simple types over one base type, written `o`.

use std::fmt;
use std::sync::Arc;

use crate::parse::ParseError;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SimpleType {
    Base,
    Arrow(Arc<SimpleType>, Arc<SimpleType>),
}

impl fmt::Debug for SimpleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for SimpleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimpleType::Base => f.write_str("o"),
            SimpleType::Arrow(a, b) => {
                if a.is_base() {
                    write!(f, "o->{b}")
                } else {
                    write!(f, "({a})->{b}")
                }
            }
        }
    }
}

impl SimpleType {
    pub fn arrow(a: SimpleType, b: SimpleType) -> Self {
        SimpleType::Arrow(Arc::new(a), Arc::new(b))
    }

    /// `args[0] -> args[1] -> ... -> result`
    pub fn curried(args: impl IntoIterator<Item = SimpleType>, result: SimpleType) -> Self {
        let args: Vec<SimpleType> = args.into_iter().collect();
        args.into_iter().rev().fold(result, |acc, a| SimpleType::arrow(a, acc))
    }

    /// The type of a terminal of the given arity.
    pub fn first_order(arity: usize) -> Self {
        Self::curried(std::iter::repeat_n(SimpleType::Base, arity), SimpleType::Base)
    }

    pub fn is_base(&self) -> bool {
        matches!(self, SimpleType::Base)
    }

    pub fn split(&self) -> Option<(&SimpleType, &SimpleType)> {
        match self {
            SimpleType::Base => None,
            SimpleType::Arrow(a, b) => Some((a, b)),
        }
    }

    /// Argument types of the curried form.
    pub fn args(&self) -> Vec<&SimpleType> {
        let mut out = Vec::new();
        let mut t = self;
        while let Some((a, b)) = t.split() {
            out.push(a);
            t = b;
        }
        out
    }

    pub fn arity(&self) -> usize {
        self.args().len()
    }

    pub fn order(&self) -> usize {
        match self {
            SimpleType::Base => 0,
            SimpleType::Arrow(a, b) => (a.order() + 1).max(b.order()),
        }
    }

    /// Parses `o`, `o->o`, `(o->o)->o->o`; arrows associate to the right.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let chars: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
        let mut pos = 0;
        let t = parse_arrow(&chars, &mut pos)?;
        if pos != chars.len() {
            return Err(ParseError::new(1, pos + 1, format!("trailing input in type `{text}`")));
        }
        Ok(t)
    }
}

fn parse_arrow(s: &[char], pos: &mut usize) -> Result<SimpleType, ParseError> {
    let lhs = match s.get(*pos) {
        Some('o') => {
            *pos += 1;
            SimpleType::Base
        }
        Some('(') => {
            *pos += 1;
            let t = parse_arrow(s, pos)?;
            if s.get(*pos) != Some(&')') {
                return Err(ParseError::new(1, *pos + 1, "expected `)` in type"));
            }
            *pos += 1;
            t
        }
        _ => return Err(ParseError::new(1, *pos + 1, "expected `o` or `(` in type")),
    };
    if s.get(*pos) == Some(&'-') && s.get(*pos + 1) == Some(&'>') {
        *pos += 2;
        Ok(SimpleType::arrow(lhs, parse_arrow(s, pos)?))
    } else {
        Ok(lhs)
    }
}
