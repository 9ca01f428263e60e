//! Word automata: pumping of accepted prefixes and lasso membership.

use thiserror::Error;

use super::{run_up_to, StateId, TrivialAutomaton};
use crate::alphabet::Symbol;
use crate::term::TermSource;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PumpError {
    #[error("automaton is not over a word alphabet")]
    NotWordAlphabet,
    #[error("word and automaton use different alphabets")]
    AlphabetMismatch,
    #[error("no run up to level {0}")]
    NoRun(usize),
}

/// Splits an accepted prefix of `w` of length `|Q| + 1` into `u v` such
/// that `u v^ω` is accepted: among the first `|Q| + 1` run states two must
/// coincide.
pub fn pump(a: &TrivialAutomaton, w: &TermSource) -> Result<(Vec<Symbol>, Vec<Symbol>), PumpError> {
    if !a.alphabet().is_word_alphabet() {
        return Err(PumpError::NotWordAlphabet);
    }
    if a.alphabet() != w.alphabet() {
        return Err(PumpError::AlphabetMismatch);
    }
    let n = a.state_count() + 1;
    let run = a
        .initial()
        .iter()
        .find_map(|&q| run_up_to(a, w, n, q))
        .ok_or(PumpError::NoRun(n))?;
    let states = run.path_states(w, &vec![0; n]);
    let mut letters = Vec::with_capacity(n);
    let mut id = w.root();
    for _ in 0..n {
        letters.push(w.label(id));
        id = w.child_ids(id)[0];
    }
    for j in 1..n {
        if let Some(i) = (0..j).find(|&i| states[i] == states[j]) {
            return Ok((letters[..i].to_vec(), letters[i..j].to_vec()));
        }
    }
    unreachable!("pigeonhole over {n} run states")
}

fn post(a: &TrivialAutomaton, from: &[bool], word: &[Symbol]) -> Vec<bool> {
    let mut cur = from.to_vec();
    for &f in word {
        let mut next = vec![false; cur.len()];
        for (q, _) in cur.iter().enumerate().filter(|x| *x.1) {
            for t in a.delta(StateId(q as u32), f) {
                next[t[0].index()] = true;
            }
        }
        cur = next;
    }
    cur
}

/// Decides whether `u v^ω` has an infinite run. After `|Q|` rounds of `v`
/// a surviving path must have repeated a state at a `v` boundary.
pub fn lasso_accepts(a: &TrivialAutomaton, u: &[Symbol], v: &[Symbol]) -> bool {
    assert!(!v.is_empty(), "the repeated part of a lasso must be non-empty");
    let mut cur = vec![false; a.state_count()];
    for &q in a.initial() {
        cur[q.index()] = true;
    }
    cur = post(a, &cur, u);
    for _ in 0..=a.state_count() {
        if !cur.iter().any(|&b| b) {
            return false;
        }
        cur = post(a, &cur, v);
    }
    cur.iter().any(|&b| b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::lasso_named;

    fn word_even() -> TrivialAutomaton {
        TrivialAutomaton::parse(
            "%terminals g:1 h:1\n%states q2 q1\n%initial q2\nq2 g -> (q1)\nq2 h -> (q2)\nq1 g -> (q2)\n",
        )
        .unwrap()
    }

    fn syms(a: &TrivialAutomaton, names: &[&str]) -> Vec<Symbol> {
        names.iter().map(|n| a.alphabet().symbol(n).unwrap()).collect()
    }

    #[test]
    fn lassos_over_even_chains() {
        let a = word_even();
        assert!(lasso_accepts(&a, &[], &syms(&a, &["g", "g"])));
        // g then (g g)^ω keeps alternating and never blocks
        assert!(lasso_accepts(&a, &syms(&a, &["g"]), &syms(&a, &["g", "g"])));
        // after an odd number of g the h is blocked
        assert!(!lasso_accepts(&a, &syms(&a, &["g"]), &syms(&a, &["h"])));
    }

    #[test]
    fn pump_on_ggh() {
        let a = word_even();
        let w = lasso_named(a.alphabet(), &[], &["g", "g", "h"]).unwrap();
        let (u, v) = pump(&a, &w).unwrap();
        assert!(!v.is_empty() && u.len() + v.len() <= 3);
        assert!(lasso_accepts(&a, &u, &v));
    }

    #[test]
    fn pump_single_letter_loop() {
        let a = TrivialAutomaton::parse("%terminals a:1\n%states p q\n%initial p\np a -> (q)\nq a -> (q)\n").unwrap();
        let w = lasso_named(a.alphabet(), &[], &["a"]).unwrap();
        let (u, v) = pump(&a, &w).unwrap();
        assert!(lasso_accepts(&a, &u, &v));
        assert!(v.iter().all(|&s| s == Symbol(0)));
    }

    #[test]
    fn pump_requires_a_run() {
        let a = word_even();
        let w = lasso_named(a.alphabet(), &["g"], &["h"]).unwrap();
        assert_eq!(pump(&a, &w), Err(PumpError::NoRun(3)));
    }
}
