//! Closure constructions: letters, boolean operations, projection, the
//! CTL-style lifts and delay lifting.

use super::{StateId, TrivialAutomaton};
use crate::alphabet::{AlphabetError, Symbol};
use crate::term::Projection;

type Delta = Vec<Vec<Vec<Vec<StateId>>>>;

fn empty_delta(states: usize, symbols: usize) -> Delta {
    vec![vec![Vec::new(); symbols]; states]
}

/// All tuples picking one element from each slot.
fn tuples<T: Clone>(slots: &[Vec<T>]) -> Vec<Vec<T>> {
    let mut out = vec![Vec::new()];
    for slot in slots {
        let mut next = Vec::with_capacity(out.len() * slot.len());
        for prefix in &out {
            for x in slot {
                let mut t = prefix.clone();
                t.push(x.clone());
                next.push(t);
            }
        }
        out = next;
    }
    out
}

/// Accepts exactly the trees whose root is labelled `f`.
pub fn letter_automaton(alphabet: &crate::RankedAlphabet, f: Symbol) -> Result<TrivialAutomaton, AlphabetError> {
    if f.index() >= alphabet.len() {
        return Err(AlphabetError::Unknown(format!("#{}", f.0)));
    }
    let (q0, q1) = (StateId(0), StateId(1));
    let mut delta = empty_delta(2, alphabet.len());
    delta[0][f.index()].push(vec![q1; alphabet.arity(f)]);
    for g in alphabet.symbols() {
        delta[1][g.index()].push(vec![q1; alphabet.arity(g)]);
    }
    Ok(TrivialAutomaton::from_parts(
        alphabet.clone(),
        vec!["q0".into(), "q1".into()],
        [q0],
        delta,
    ))
}

/// Disjoint union of any number of automata; state `q` of operand `i` is
/// named `q@i`.
pub fn union_many(parts: &[TrivialAutomaton]) -> Result<TrivialAutomaton, AlphabetError> {
    let Some(first) = parts.first() else {
        return Err(AlphabetError::Mismatch);
    };
    let alphabet = first.alphabet().clone();
    if parts.iter().any(|p| p.alphabet() != &alphabet) {
        return Err(AlphabetError::Mismatch);
    }
    let mut names = Vec::new();
    let mut initial = Vec::new();
    let mut delta = Vec::new();
    for (i, p) in parts.iter().enumerate() {
        let off = names.len() as u32;
        let shift = |q: StateId| StateId(q.0 + off);
        for q in p.states() {
            names.push(format!("{}@{i}", p.state_name(q)));
            delta.push(
                alphabet
                    .symbols()
                    .map(|f| {
                        p.delta(q, f)
                            .iter()
                            .map(|t| t.iter().map(|&s| shift(s)).collect())
                            .collect()
                    })
                    .collect(),
            );
        }
        initial.extend(p.initial().iter().map(|&q| shift(q)));
    }
    Ok(TrivialAutomaton::from_parts(alphabet, names, initial, delta))
}

pub fn union(a: &TrivialAutomaton, b: &TrivialAutomaton) -> Result<TrivialAutomaton, AlphabetError> {
    union_many(&[a.clone(), b.clone()])
}

/// Product automaton; the pair `(p, q)` is named `p.q`.
pub fn intersection(a: &TrivialAutomaton, b: &TrivialAutomaton) -> Result<TrivialAutomaton, AlphabetError> {
    if a.alphabet() != b.alphabet() {
        return Err(AlphabetError::Mismatch);
    }
    let alphabet = a.alphabet().clone();
    let nb = b.state_count() as u32;
    let pair = |p: StateId, q: StateId| StateId(p.0 * nb + q.0);
    let mut names = Vec::new();
    let mut delta = Vec::new();
    for p in a.states() {
        for q in b.states() {
            names.push(format!("{}.{}", a.state_name(p), b.state_name(q)));
            delta.push(
                alphabet
                    .symbols()
                    .map(|f| {
                        let mut set = Vec::new();
                        for s in a.delta(p, f) {
                            for t in b.delta(q, f) {
                                set.push(s.iter().zip(t).map(|(&x, &y)| pair(x, y)).collect());
                            }
                        }
                        set
                    })
                    .collect(),
            );
        }
    }
    let initial: Vec<StateId> = a
        .initial()
        .iter()
        .flat_map(|&p| b.initial().iter().map(move |&q| pair(p, q)))
        .collect();
    Ok(TrivialAutomaton::from_parts(alphabet, names, initial, delta))
}

/// Reads the automaton through an arity-preserving relabelling: the new
/// transitions on `g` are the union of the old ones on every preimage of `g`.
pub fn project_automaton(a: &TrivialAutomaton, pi: &Projection) -> Result<TrivialAutomaton, AlphabetError> {
    if pi.source() != a.alphabet() {
        return Err(AlphabetError::Mismatch);
    }
    let target = pi.target().clone();
    let mut delta = empty_delta(a.state_count(), target.len());
    for q in a.states() {
        for f in a.alphabet().symbols() {
            delta[q.index()][pi.apply(f).index()].extend(a.delta(q, f).iter().cloned());
        }
    }
    Ok(TrivialAutomaton::from_parts(
        target,
        a.states().map(|q| a.state_name(q).to_string()).collect(),
        a.initial().iter().copied(),
        delta,
    ))
}

fn copy_delta(a: &TrivialAutomaton, extra: usize) -> Delta {
    let syms = a.alphabet().len();
    let mut delta: Delta = a
        .states()
        .map(|q| a.alphabet().symbols().map(|f| a.delta(q, f).to_vec()).collect())
        .collect();
    delta.extend((0..extra).map(|_| vec![Vec::new(); syms]));
    delta
}

fn names_with(a: &TrivialAutomaton, fresh: &[&str]) -> Vec<String> {
    let mut names: Vec<String> = a.states().map(|q| a.state_name(q).to_string()).collect();
    for f in fresh {
        let mut n = f.to_string();
        while names.contains(&n) {
            n.push('\'');
        }
        names.push(n);
    }
    names
}

/// Some child is accepted.
pub fn lift_ex(a: &TrivialAutomaton) -> TrivialAutomaton {
    let n = a.state_count() as u32;
    let (start, top) = (StateId(n), StateId(n + 1));
    let alphabet = a.alphabet().clone();
    let mut delta = copy_delta(a, 2);
    for f in alphabet.symbols() {
        let k = alphabet.arity(f);
        for i in 0..k {
            for &q in a.initial() {
                let mut t = vec![top; k];
                t[i] = q;
                delta[start.index()][f.index()].push(t);
            }
        }
        delta[top.index()][f.index()].push(vec![top; k]);
    }
    TrivialAutomaton::from_parts(alphabet, names_with(a, &["ex", "top"]), [start], delta)
}

/// Every child is accepted.
pub fn lift_ax(a: &TrivialAutomaton) -> TrivialAutomaton {
    let start = StateId(a.state_count() as u32);
    let alphabet = a.alphabet().clone();
    let mut delta = copy_delta(a, 1);
    let init: Vec<StateId> = a.initial().to_vec();
    for f in alphabet.symbols() {
        let slots = vec![init.clone(); alphabet.arity(f)];
        delta[start.index()][f.index()] = tuples(&slots);
    }
    TrivialAutomaton::from_parts(alphabet, names_with(a, &["ax"]), [start], delta)
}

/// Subsets of states as bitmasks, in increasing order.
struct Powerset<'a> {
    a: &'a TrivialAutomaton,
    size: usize,
    init_mask: u64,
}

impl<'a> Powerset<'a> {
    fn new(a: &'a TrivialAutomaton) -> Self {
        let n = a.state_count();
        assert!(n < 32, "powerset construction limited to 31 states");
        let init_mask = a.initial().iter().fold(0u64, |m, q| m | 1 << q.0);
        Powerset {
            a,
            size: 1 << n,
            init_mask,
        }
    }

    fn name(&self, m: u64) -> String {
        let parts: Vec<&str> = self
            .a
            .states()
            .filter(|q| m >> q.0 & 1 == 1)
            .map(|q| self.a.state_name(q))
            .collect();
        format!("{{{}}}", parts.join("|"))
    }

    fn seeded(&self) -> Vec<u64> {
        (0..self.size as u64).filter(|m| m & self.init_mask != 0).collect()
    }

    /// Every state of `m` has a transition on `f` landing inside `kids`.
    fn covers(&self, m: u64, f: Symbol, kids: &[u64]) -> bool {
        self.a.states().filter(|q| m >> q.0 & 1 == 1).all(|q| {
            self.a
                .delta(q, f)
                .iter()
                .any(|t| t.iter().zip(kids).all(|(s, k)| k >> s.0 & 1 == 1))
        })
    }
}

/// Every subtree is accepted. States are sets of states of `a`; a node
/// labelled `M` is accepted from every member of `M`, and every child set
/// must meet the initial states.
pub fn lift_ag(a: &TrivialAutomaton) -> TrivialAutomaton {
    let ps = Powerset::new(a);
    let alphabet = a.alphabet().clone();
    let seeded = ps.seeded();
    let mut delta = empty_delta(ps.size, alphabet.len());
    for m in 0..ps.size as u64 {
        for f in alphabet.symbols() {
            let slots = vec![seeded.clone(); alphabet.arity(f)];
            for kids in tuples(&slots) {
                if ps.covers(m, f, &kids) {
                    delta[m as usize][f.index()].push(kids.iter().map(|&k| StateId(k as u32)).collect());
                }
            }
        }
    }
    let names = (0..ps.size as u64).map(|m| ps.name(m)).collect();
    let initial = seeded.iter().map(|&m| StateId(m as u32));
    TrivialAutomaton::from_parts(alphabet, names, initial, delta)
}

/// Some maximal path has all its subtrees accepted. States are set states
/// of `a`, each either on the chosen path (`+M`, child sets on the path
/// must meet the initial states) or released (`-M`, obligations of the
/// members only). `-{}` accepts everything.
pub fn lift_eg(a: &TrivialAutomaton) -> TrivialAutomaton {
    let ps = Powerset::new(a);
    let alphabet = a.alphabet().clone();
    let seeded = ps.seeded();
    let all: Vec<u64> = (0..ps.size as u64).collect();
    let on = |m: u64| StateId(m as u32);
    let off = |m: u64| StateId((ps.size as u64 + m) as u32);
    let mut delta = empty_delta(2 * ps.size, alphabet.len());
    for m in 0..ps.size as u64 {
        for f in alphabet.symbols() {
            let k = alphabet.arity(f);
            for kids in tuples(&vec![all.clone(); k]) {
                if !ps.covers(m, f, &kids) {
                    continue;
                }
                delta[off(m).index()][f.index()].push(kids.iter().map(|&x| off(x)).collect());
                for j in 0..k {
                    if kids[j] & ps.init_mask == 0 {
                        continue;
                    }
                    let t = (0..k)
                        .map(|i| if i == j { on(kids[i]) } else { off(kids[i]) })
                        .collect();
                    delta[on(m).index()][f.index()].push(t);
                }
                if k == 0 {
                    delta[on(m).index()][f.index()].push(Vec::new());
                }
            }
        }
    }
    let mut names: Vec<String> = (0..ps.size as u64).map(|m| format!("+{}", ps.name(m))).collect();
    names.extend((0..ps.size as u64).map(|m| format!("-{}", ps.name(m))));
    TrivialAutomaton::from_parts(alphabet, names, seeded.iter().map(|&m| on(m)), delta)
}

/// Extends the alphabet by the two delay symbols, read without changing
/// state.
pub fn lift_delays(a: &TrivialAutomaton) -> Result<TrivialAutomaton, AlphabetError> {
    let sigma = a.alphabet().with_delays()?;
    let old = a.alphabet().len();
    let mut delta = copy_delta(a, 0);
    for (i, row) in delta.iter_mut().enumerate() {
        let q = StateId(i as u32);
        row.push(vec![vec![q]]);
        row.push(vec![vec![q]]);
        debug_assert_eq!(row.len(), old + 2);
    }
    Ok(TrivialAutomaton::from_parts(
        sigma,
        a.states().map(|q| a.state_name(q).to_string()).collect(),
        a.initial().iter().copied(),
        delta,
    ))
}
