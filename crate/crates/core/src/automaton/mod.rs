//! Nondeterministic top-down tree automata with trivial acceptance.

mod closure;
mod run;
mod words;

pub use closure::{
    intersection, letter_automaton, lift_ag, lift_ax, lift_delays, lift_eg, lift_ex, project_automaton, union,
    union_many,
};
pub use run::{accepts_complete, accepts_up_to, run_up_to, RunLabeling, RunSearch};
pub use words::{lasso_accepts, pump, PumpError};

use std::collections::{BTreeSet, HashMap};
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::alphabet::{AlphabetError, RankedAlphabet, Symbol};
use crate::parse::{strip_comment, ParseError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateId(pub u32);

impl StateId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AutomatonError {
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("duplicate state `{0}`")]
    DuplicateState(String),
    #[error("bad state name `{0}`")]
    BadStateName(String),
    #[error("initial state `{0}` is not declared")]
    InitialNotInStates(String),
    #[error("transition for `{symbol}` from `{state}` has {found} targets, arity is {arity}")]
    Arity {
        state: String,
        symbol: String,
        arity: usize,
        found: usize,
    },
    #[error(transparent)]
    Alphabet(#[from] AlphabetError),
}

/// Validation failure listing every problem found.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
pub struct ValidationErrors(pub Vec<AutomatonError>);

/// An automaton described by names, before validation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AutomatonDescription {
    pub terminals: Vec<(String, usize)>,
    pub states: Vec<String>,
    pub initial: Vec<String>,
    pub transitions: Vec<(String, String, Vec<String>)>,
}

/// Checks the structural invariants of a described automaton.
pub fn validate(desc: &AutomatonDescription) -> Result<(), ValidationErrors> {
    desc.build().map(|_| ())
}

pub(crate) fn valid_state_name(s: &str) -> bool {
    !s.is_empty()
        && !s.starts_with('%')
        && s != "->"
        && !s
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, '(' | ')' | ',' | '#'))
}

impl AutomatonDescription {
    pub fn build(&self) -> Result<TrivialAutomaton, ValidationErrors> {
        let mut errs = Vec::new();
        let alphabet = match RankedAlphabet::new(self.terminals.iter().cloned()) {
            Ok(a) => a,
            Err(e) => return Err(ValidationErrors(vec![e.into()])),
        };
        let mut index = HashMap::new();
        for (i, s) in self.states.iter().enumerate() {
            if !valid_state_name(s) {
                errs.push(AutomatonError::BadStateName(s.clone()));
            }
            if index.insert(s.as_str(), StateId(i as u32)).is_some() {
                errs.push(AutomatonError::DuplicateState(s.clone()));
            }
        }
        let mut initial = BTreeSet::new();
        for i in &self.initial {
            match index.get(i.as_str()) {
                Some(&q) => {
                    initial.insert(q);
                }
                None => errs.push(AutomatonError::InitialNotInStates(i.clone())),
            }
        }
        let mut delta = vec![vec![BTreeSet::new(); alphabet.len()]; self.states.len()];
        for (q, f, tuple) in &self.transitions {
            let Some(&qi) = index.get(q.as_str()) else {
                errs.push(AutomatonError::UnknownState(q.clone()));
                continue;
            };
            let fs = match alphabet.symbol(f) {
                Ok(s) => s,
                Err(e) => {
                    errs.push(e.into());
                    continue;
                }
            };
            if tuple.len() != alphabet.arity(fs) {
                errs.push(AutomatonError::Arity {
                    state: q.clone(),
                    symbol: f.clone(),
                    arity: alphabet.arity(fs),
                    found: tuple.len(),
                });
                continue;
            }
            let mut t = Vec::with_capacity(tuple.len());
            for s in tuple {
                match index.get(s.as_str()) {
                    Some(&x) => t.push(x),
                    None => errs.push(AutomatonError::UnknownState(s.clone())),
                }
            }
            if t.len() == tuple.len() {
                delta[qi.index()][fs.index()].insert(t);
            }
        }
        if !errs.is_empty() {
            return Err(ValidationErrors(errs));
        }
        Ok(TrivialAutomaton {
            alphabet,
            states: self.states.clone(),
            initial: initial.into_iter().collect(),
            delta: delta
                .into_iter()
                .map(|row| row.into_iter().map(|s| s.into_iter().collect()).collect())
                .collect(),
        })
    }
}

/// `(Q, I, δ)` over a ranked alphabet. Transition tuples have exact arity
/// and each transition set is kept sorted.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct TrivialAutomaton {
    alphabet: RankedAlphabet,
    states: Vec<String>,
    initial: Vec<StateId>,
    delta: Vec<Vec<Vec<Vec<StateId>>>>,
}

impl fmt::Debug for TrivialAutomaton {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl fmt::Display for TrivialAutomaton {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl TrivialAutomaton {
    /// Assembles an automaton from already resolved parts; state names are
    /// made unique by appending primes.
    pub(crate) fn from_parts(
        alphabet: RankedAlphabet,
        names: Vec<String>,
        initial: impl IntoIterator<Item = StateId>,
        mut delta: Vec<Vec<Vec<Vec<StateId>>>>,
    ) -> Self {
        let mut seen = std::collections::HashSet::new();
        let states = names
            .into_iter()
            .map(|mut n| {
                while !seen.insert(n.clone()) {
                    n.push('\'');
                }
                n
            })
            .collect();
        for row in &mut delta {
            for set in row.iter_mut() {
                set.sort();
                set.dedup();
            }
        }
        let mut initial: Vec<StateId> = initial.into_iter().collect();
        initial.sort();
        initial.dedup();
        TrivialAutomaton {
            alphabet,
            states,
            initial,
            delta,
        }
    }

    pub fn alphabet(&self) -> &RankedAlphabet {
        &self.alphabet
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> {
        (0..self.states.len() as u32).map(StateId)
    }

    pub fn state_name(&self, q: StateId) -> &str {
        &self.states[q.index()]
    }

    pub fn state(&self, name: &str) -> Result<StateId, AutomatonError> {
        self.states
            .iter()
            .position(|s| s == name)
            .map(|i| StateId(i as u32))
            .ok_or_else(|| AutomatonError::UnknownState(name.to_string()))
    }

    pub fn initial(&self) -> &[StateId] {
        &self.initial
    }

    pub fn is_initial(&self, q: StateId) -> bool {
        self.initial.binary_search(&q).is_ok()
    }

    /// `δ(q, f)`, sorted.
    pub fn delta(&self, q: StateId, f: Symbol) -> &[Vec<StateId>] {
        &self.delta[q.index()][f.index()]
    }

    pub fn transition_count(&self) -> usize {
        self.delta.iter().flatten().map(|s| s.len()).sum()
    }

    /// The states reachable from `q`, in declaration order, with `q` as the
    /// only initial state. Runs from `q` are unchanged.
    pub fn reachable_from(&self, q: StateId) -> (Self, StateId) {
        let mut seen = vec![false; self.state_count()];
        let mut stack = vec![q];
        seen[q.index()] = true;
        while let Some(p) = stack.pop() {
            for t in self.delta[p.index()].iter().flatten().flatten() {
                if !std::mem::replace(&mut seen[t.index()], true) {
                    stack.push(*t);
                }
            }
        }
        let mut renumber = vec![None; self.state_count()];
        let mut names = Vec::new();
        for p in self.states().filter(|p| seen[p.index()]) {
            renumber[p.index()] = Some(StateId(names.len() as u32));
            names.push(self.state_name(p).to_string());
        }
        let new = |p: &StateId| renumber[p.index()].expect("reachable");
        let delta = (self.states().filter(|p| seen[p.index()]))
            .map(|p| {
                self.delta[p.index()]
                    .iter()
                    .map(|set| set.iter().map(|t| t.iter().map(new).collect()).collect())
                    .collect()
            })
            .collect();
        let q = new(&q);
        (
            TrivialAutomaton::from_parts(self.alphabet.clone(), names, [q], delta),
            q,
        )
    }

    /// The same automaton read over `target`, matching symbols by name.
    /// Symbols of `target` unknown to the automaton get no transitions.
    pub fn over_alphabet(&self, target: &RankedAlphabet) -> Result<Self, AlphabetError> {
        if target == &self.alphabet {
            return Ok(self.clone());
        }
        let mut map = Vec::with_capacity(target.len());
        for s in target.symbols() {
            let name = target.name(s);
            match self.alphabet.lookup(name) {
                Some(o) if self.alphabet.arity(o) != target.arity(s) => {
                    return Err(AlphabetError::ArityMismatch {
                        name: name.to_string(),
                        expected: target.arity(s),
                        found: self.alphabet.arity(o),
                    })
                }
                other => map.push(other),
            }
        }
        let delta = self
            .delta
            .iter()
            .map(|row| {
                map.iter()
                    .map(|m| m.map(|o| row[o.index()].clone()).unwrap_or_default())
                    .collect()
            })
            .collect();
        Ok(TrivialAutomaton {
            alphabet: target.clone(),
            states: self.states.clone(),
            initial: self.initial.clone(),
            delta,
        })
    }

    pub fn to_description(&self) -> AutomatonDescription {
        let mut transitions = Vec::new();
        for q in self.states() {
            for f in self.alphabet.symbols() {
                for t in self.delta(q, f) {
                    transitions.push((
                        self.state_name(q).to_string(),
                        self.alphabet.name(f).to_string(),
                        t.iter().map(|&s| self.state_name(s).to_string()).collect(),
                    ));
                }
            }
        }
        AutomatonDescription {
            terminals: (self.alphabet.symbols())
                .map(|s| (self.alphabet.name(s).to_string(), self.alphabet.arity(s)))
                .collect(),
            states: self.states.clone(),
            initial: self.initial.iter().map(|&q| self.state_name(q).to_string()).collect(),
            transitions,
        }
    }

    /// Canonical text form: states in declaration order, then symbols, then
    /// sorted tuples.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "%terminals {}", self.alphabet.declaration());
        let _ = writeln!(out, "%states {}", self.states.join(" "));
        let init: Vec<&str> = self.initial.iter().map(|&q| self.state_name(q)).collect();
        let _ = writeln!(out, "%initial {}", init.join(" "));
        for q in self.states() {
            for f in self.alphabet.symbols() {
                for t in self.delta(q, f) {
                    let names: Vec<&str> = t.iter().map(|&s| self.state_name(s)).collect();
                    let _ = writeln!(
                        out,
                        "{} {} -> ({})",
                        self.state_name(q),
                        self.alphabet.name(f),
                        names.join(",")
                    );
                }
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut desc = AutomatonDescription::default();
        let (mut saw_terms, mut saw_states, mut saw_init) = (false, false, false);
        for (ln, raw) in text.lines().enumerate() {
            let ln = ln + 1;
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("%terminals") {
                let a = RankedAlphabet::parse_declaration(rest, ln)?;
                desc.terminals = a.symbols().map(|s| (a.name(s).to_string(), a.arity(s))).collect();
                saw_terms = true;
            } else if let Some(rest) = line.strip_prefix("%states") {
                desc.states = rest.split_whitespace().map(str::to_string).collect();
                saw_states = true;
            } else if let Some(rest) = line.strip_prefix("%initial") {
                desc.initial = rest.split_whitespace().map(str::to_string).collect();
                saw_init = true;
            } else if line.starts_with('%') {
                return Err(ParseError::new(ln, 1, format!("unknown directive `{line}`")));
            } else {
                desc.transitions.push(parse_transition(line, ln)?);
            }
        }
        for (seen, what) in [
            (saw_terms, "%terminals"),
            (saw_states, "%states"),
            (saw_init, "%initial"),
        ] {
            if !seen {
                return Err(ParseError::new(1, 1, format!("missing {what} line")));
            }
        }
        desc.build().map_err(|e| ParseError::new(1, 1, e.to_string()))
    }
}

fn parse_transition(line: &str, ln: usize) -> Result<(String, String, Vec<String>), ParseError> {
    let bad = |msg: &str| ParseError::new(ln, 1, format!("{msg} in `{line}`"));
    let (lhs, rhs) = line.split_once("->").ok_or_else(|| bad("expected `->`"))?;
    let mut it = lhs.split_whitespace();
    let (Some(q), Some(f), None) = (it.next(), it.next(), it.next()) else {
        return Err(bad("expected `state symbol`"));
    };
    let rhs = rhs.trim();
    let inner = rhs
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| bad("expected parenthesized target tuple"))?;
    let targets = if inner.trim().is_empty() {
        Vec::new()
    } else {
        inner.split(',').map(|s| s.trim().to_string()).collect()
    };
    if targets.iter().any(|t| t.is_empty()) {
        return Err(bad("empty target"));
    }
    Ok((q.to_string(), f.to_string(), targets))
}

/// Sample automata used by tests, benchmarks and the shipped data files.
pub mod samples {
    use super::TrivialAutomaton;

    /// Every maximal chain of `g` has even length.
    pub const EVEN_CHAINS: &str = "%terminals f:2 g:1 a:0
%states q2 q1
%initial q2
q2 f -> (q2,q2)
q2 g -> (q1)
q2 a -> ()
q1 g -> (q2)
";

    pub fn even_chains() -> TrivialAutomaton {
        TrivialAutomaton::parse(EVEN_CHAINS).expect("static automaton")
    }
}
