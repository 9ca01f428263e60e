//! The safety fragment of CTL and its compilation to trivial automata.
//!
//! ```text
//! φ ::= f | !f | φ \/ φ | φ /\ φ | EX φ | AX φ | EG φ | AG φ | ( φ )
//! ```
//! Unary operators bind tighter than `/\`, which binds tighter than `\/`.

use std::fmt;

use crate::alphabet::{AlphabetError, RankedAlphabet, Symbol};
use crate::automaton::{
    intersection, letter_automaton, lift_ag, lift_ax, lift_eg, lift_ex, union, union_many, TrivialAutomaton,
};
use crate::parse::ParseError;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SafetyFormula {
    Letter(Symbol),
    NotLetter(Symbol),
    Or(Box<SafetyFormula>, Box<SafetyFormula>),
    And(Box<SafetyFormula>, Box<SafetyFormula>),
    Ex(Box<SafetyFormula>),
    Ax(Box<SafetyFormula>),
    Eg(Box<SafetyFormula>),
    Ag(Box<SafetyFormula>),
}

impl SafetyFormula {
    pub fn size(&self) -> usize {
        use SafetyFormula::*;
        match self {
            Letter(_) | NotLetter(_) => 1,
            Or(a, b) | And(a, b) => 1 + a.size() + b.size(),
            Ex(a) | Ax(a) | Eg(a) | Ag(a) => 1 + a.size(),
        }
    }

    pub fn display<'a>(&'a self, alphabet: &'a RankedAlphabet) -> impl fmt::Display + 'a {
        FormulaDisplay { phi: self, alphabet }
    }
}

struct FormulaDisplay<'a> {
    phi: &'a SafetyFormula,
    alphabet: &'a RankedAlphabet,
}

impl fmt::Display for FormulaDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_formula(f, self.phi, self.alphabet)
    }
}

fn write_formula(f: &mut fmt::Formatter<'_>, phi: &SafetyFormula, al: &RankedAlphabet) -> fmt::Result {
    use SafetyFormula::*;
    let (op, a) = match phi {
        Letter(s) => return f.write_str(al.name(*s)),
        NotLetter(s) => return write!(f, "!{}", al.name(*s)),
        Or(a, b) | And(a, b) => {
            f.write_str("(")?;
            write_formula(f, a, al)?;
            f.write_str(if matches!(phi, Or(..)) { " \\/ " } else { " /\\ " })?;
            write_formula(f, b, al)?;
            return f.write_str(")");
        }
        Ex(a) => ("EX ", a),
        Ax(a) => ("AX ", a),
        Eg(a) => ("EG ", a),
        Ag(a) => ("AG ", a),
    };
    f.write_str(op)?;
    write_formula(f, a, al)
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Or,
    And,
    Not,
    Open,
    Close,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        match c {
            _ if c.is_whitespace() => i += 1,
            '(' => {
                out.push((Tok::Open, col));
                i += 1
            }
            ')' => {
                out.push((Tok::Close, col));
                i += 1
            }
            '!' => {
                out.push((Tok::Not, col));
                i += 1
            }
            '\\' if chars.get(i + 1) == Some(&'/') => {
                out.push((Tok::Or, col));
                i += 2
            }
            '/' if chars.get(i + 1) == Some(&'\\') => {
                out.push((Tok::And, col));
                i += 2
            }
            _ if crate::parse::is_ident_start(c) => {
                let start = i;
                while i < chars.len() && crate::parse::is_ident_char(chars[i]) {
                    i += 1;
                }
                out.push((Tok::Ident(chars[start..i].iter().collect()), col));
            }
            _ => return Err(ParseError::new(1, col, format!("unexpected character `{c}`"))),
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    alphabet: &'a RankedAlphabet,
    end: usize,
}

impl Parser<'_> {
    fn col(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.1).unwrap_or(self.end)
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError::new(1, self.col(), msg)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn or(&mut self) -> Result<SafetyFormula, ParseError> {
        let mut lhs = self.and()?;
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            lhs = SafetyFormula::Or(Box::new(lhs), Box::new(self.and()?));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<SafetyFormula, ParseError> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            lhs = SafetyFormula::And(Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn letter(&self, name: &str) -> Result<Symbol, ParseError> {
        self.alphabet.symbol(name).map_err(|e| self.err(e.to_string()))
    }

    fn unary(&mut self) -> Result<SafetyFormula, ParseError> {
        use SafetyFormula::*;
        match self.peek().cloned() {
            Some(Tok::Open) => {
                self.pos += 1;
                let inner = self.or()?;
                if self.peek() != Some(&Tok::Close) {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(Tok::Not) => {
                self.pos += 1;
                match self.peek().cloned() {
                    Some(Tok::Ident(n)) if !is_keyword(&n) => {
                        let s = self.letter(&n)?;
                        self.pos += 1;
                        Ok(NotLetter(s))
                    }
                    _ => Err(self.err("negation applies to letters only")),
                }
            }
            Some(Tok::Ident(n)) => {
                self.pos += 1;
                let wrap: Option<fn(Box<SafetyFormula>) -> SafetyFormula> = match n.as_str() {
                    "EX" => Some(Ex),
                    "AX" => Some(Ax),
                    "EG" => Some(Eg),
                    "AG" => Some(Ag),
                    _ => None,
                };
                match wrap {
                    Some(w) => Ok(w(Box::new(self.unary()?))),
                    None => {
                        self.pos -= 1;
                        let s = self.letter(&n)?;
                        self.pos += 1;
                        Ok(Letter(s))
                    }
                }
            }
            _ => Err(self.err("expected a formula")),
        }
    }
}

fn is_keyword(s: &str) -> bool {
    matches!(s, "EX" | "AX" | "EG" | "AG")
}

pub fn parse_formula(text: &str, alphabet: &RankedAlphabet) -> Result<SafetyFormula, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        alphabet,
        end: text.chars().count() + 1,
    };
    let phi = p.or()?;
    if p.pos != p.toks.len() {
        return Err(p.err("trailing input"));
    }
    Ok(phi)
}

/// Structural compilation through the closure constructions.
pub fn compile(phi: &SafetyFormula, alphabet: &RankedAlphabet) -> Result<TrivialAutomaton, AlphabetError> {
    use SafetyFormula::*;
    Ok(match phi {
        Letter(s) => letter_automaton(alphabet, *s)?,
        NotLetter(s) => {
            let others: Vec<TrivialAutomaton> = alphabet
                .symbols()
                .filter(|g| g != s)
                .map(|g| letter_automaton(alphabet, g))
                .collect::<Result<_, _>>()?;
            if others.is_empty() {
                // nothing satisfies the negation of the only letter
                TrivialAutomaton::from_parts(alphabet.clone(), Vec::new(), [], Vec::new())
            } else {
                union_many(&others)?
            }
        }
        Or(a, b) => union(&compile(a, alphabet)?, &compile(b, alphabet)?)?,
        And(a, b) => intersection(&compile(a, alphabet)?, &compile(b, alphabet)?)?,
        Ex(a) => lift_ex(&compile(a, alphabet)?),
        Ax(a) => lift_ax(&compile(a, alphabet)?),
        Eg(a) => lift_eg(&compile(a, alphabet)?),
        Ag(a) => lift_ag(&compile(a, alphabet)?),
    })
}

/// State count of the compiled automaton, computed without building it.
pub fn compiled_state_count(phi: &SafetyFormula, alphabet: &RankedAlphabet) -> u128 {
    use SafetyFormula::*;
    match phi {
        Letter(_) => 2,
        NotLetter(_) => 2 * (alphabet.len() as u128).saturating_sub(1),
        Or(a, b) => compiled_state_count(a, alphabet).saturating_add(compiled_state_count(b, alphabet)),
        And(a, b) => compiled_state_count(a, alphabet).saturating_mul(compiled_state_count(b, alphabet)),
        Ex(a) => compiled_state_count(a, alphabet).saturating_add(2),
        Ax(a) => compiled_state_count(a, alphabet).saturating_add(1),
        Eg(a) => 2u128
            .saturating_pow(compiled_state_count(a, alphabet).min(127) as u32)
            .saturating_mul(2),
        Ag(a) => 2u128.saturating_pow(compiled_state_count(a, alphabet).min(127) as u32),
    }
}
