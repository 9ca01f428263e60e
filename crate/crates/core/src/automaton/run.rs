//! Runs up to a level, searched top-down with memoization.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::{StateId, TrivialAutomaton};
use crate::term::TreeAccess;

/// A run up to level `n`, stored as the chosen transition tuple for each
/// visited `(node, remaining levels, state)`. Shared subtrees are stored once.
#[derive(Clone, Debug)]
pub struct RunLabeling<Id> {
    pub root: Id,
    pub state: StateId,
    pub level: usize,
    choices: HashMap<(Id, usize, StateId), Vec<StateId>>,
}

impl<Id: Copy + Eq + std::hash::Hash> RunLabeling<Id> {
    /// The tuple assigned to the children of a node at `rem` levels above
    /// the frontier, or `None` when the node carries no obligation.
    pub fn choice(&self, id: Id, rem: usize, q: StateId) -> Option<&[StateId]> {
        self.choices.get(&(id, rem, q)).map(|v| v.as_slice())
    }

    /// States along a path given by child positions, starting at the root.
    pub fn path_states<T: TreeAccess<Id = Id>>(&self, tree: &T, path: &[usize]) -> Vec<StateId> {
        let mut out = vec![self.state];
        let (mut id, mut q, mut rem) = (self.root, self.state, self.level);
        for &k in path {
            let Some(t) = self.choice(id, rem, q) else { break };
            let Some(kids) = tree.children(id) else { break };
            id = kids[k];
            q = t[k];
            rem -= 1;
            out.push(q);
        }
        out
    }

    /// Re-checks the labeling against the automaton.
    pub fn is_valid<T: TreeAccess<Id = Id>>(&self, a: &TrivialAutomaton, tree: &T) -> bool {
        let mut stack = vec![(self.root, self.level, self.state)];
        let mut seen = std::collections::HashSet::new();
        while let Some((id, rem, q)) = stack.pop() {
            if rem == 0 || !seen.insert((id, rem, q)) {
                continue;
            }
            let Some(kids) = tree.children(id) else { continue };
            let Some(t) = self.choice(id, rem, q) else { return false };
            if !a.delta(q, tree.label(id)).iter().any(|x| x == t) {
                return false;
            }
            stack.extend(kids.into_iter().zip(t).map(|(c, &s)| (c, rem - 1, s)));
        }
        true
    }

    /// One line per labelled node in depth-first order: `path label state`,
    /// with the root path written `.`. At most `limit` lines.
    pub fn render<T: TreeAccess<Id = Id>>(&self, a: &TrivialAutomaton, tree: &T, limit: usize) -> String {
        let mut out = String::new();
        let mut count = 0;
        let mut stack = vec![(self.root, self.level, self.state, String::new())];
        while let Some((id, rem, q, path)) = stack.pop() {
            if count == limit {
                out.push_str("...\n");
                break;
            }
            count += 1;
            let shown = if path.is_empty() { "." } else { path.as_str() };
            let _ = writeln!(
                out,
                "{shown} {} {}",
                tree.alphabet().name(tree.label(id)),
                a.state_name(q)
            );
            if rem == 0 {
                continue;
            }
            if let (Some(kids), Some(t)) = (tree.children(id), self.choice(id, rem, q)) {
                for (k, (c, &s)) in kids.into_iter().zip(t).enumerate().rev() {
                    let p = if path.is_empty() {
                        k.to_string()
                    } else {
                        format!("{path}.{k}")
                    };
                    stack.push((c, rem - 1, s, p));
                }
            }
        }
        out
    }
}

/// Memoized run search over one tree. The memo is keyed on remaining
/// levels, so it can be reused across increasing levels.
pub struct RunSearch<'a, T: TreeAccess> {
    automaton: &'a TrivialAutomaton,
    tree: &'a T,
    memo: HashMap<(T::Id, usize, StateId), Option<Vec<StateId>>>,
}

impl<'a, T: TreeAccess> RunSearch<'a, T> {
    pub fn new(automaton: &'a TrivialAutomaton, tree: &'a T) -> Self {
        RunSearch {
            automaton,
            tree,
            memo: HashMap::new(),
        }
    }

    /// Is there a run on the subtree at `id` from `q` for `rem` more levels?
    pub fn holds(&mut self, id: T::Id, rem: usize, q: StateId) -> bool {
        if rem == 0 {
            return true;
        }
        if let Some(r) = self.memo.get(&(id, rem, q)) {
            return r.is_some();
        }
        let Some(kids) = self.tree.children(id) else {
            // unexpanded frontier of a prefix
            return true;
        };
        let label = self.tree.label(id);
        let mut found = None;
        let tuples = self.automaton.delta(q, label);
        for t in tuples {
            if kids.iter().zip(t).all(|(&c, &s)| self.holds(c, rem - 1, s)) {
                found = Some(t.clone());
                break;
            }
        }
        self.memo.insert((id, rem, q), found.clone());
        found.is_some()
    }

    pub fn labeling(&mut self, level: usize, q: StateId) -> Option<RunLabeling<T::Id>> {
        let root = self.tree.root();
        if !self.holds(root, level, q) {
            return None;
        }
        let mut choices = HashMap::new();
        let mut stack = vec![(root, level, q)];
        while let Some((id, rem, s)) = stack.pop() {
            if rem == 0 || choices.contains_key(&(id, rem, s)) {
                continue;
            }
            let Some(kids) = self.tree.children(id) else { continue };
            let t = self.memo[&(id, rem, s)].clone().expect("successful subgoal");
            stack.extend(kids.into_iter().zip(t.iter()).map(|(c, &x)| (c, rem - 1, x)));
            choices.insert((id, rem, s), t);
        }
        Some(RunLabeling {
            root,
            state: q,
            level,
            choices,
        })
    }

    /// Smallest `n <= max` with no run from `q`, if any.
    pub fn first_failing_level(&mut self, q: StateId, max: usize) -> Option<usize> {
        let root = self.tree.root();
        (0..=max).find(|&n| !self.holds(root, n, q))
    }
}

/// A run up to level `n` from `q`: obligations on nodes at distance `< n`.
pub fn run_up_to<T: TreeAccess>(a: &TrivialAutomaton, t: &T, n: usize, q: StateId) -> Option<RunLabeling<T::Id>> {
    RunSearch::new(a, t).labeling(n, q)
}

pub fn accepts_up_to<T: TreeAccess>(a: &TrivialAutomaton, t: &T, n: usize) -> bool {
    let mut s = RunSearch::new(a, t);
    a.initial().iter().any(|&q| s.holds(t.root(), n, q))
}

/// Acceptance of a finite, fully expanded tree: every node, including the
/// leaves, must satisfy its transition condition.
pub fn accepts_complete<T: TreeAccess>(a: &TrivialAutomaton, t: &T) -> bool {
    fn height<T: TreeAccess>(t: &T, id: T::Id) -> usize {
        let kids = t.children(id).expect("fully expanded tree");
        kids.into_iter().map(|c| height(t, c) + 1).max().unwrap_or(0)
    }
    accepts_up_to(a, t, height(t, t.root()) + 1)
}

#[cfg(test)]
mod tests {
    use super::super::samples::even_chains;
    use super::*;
    use crate::term::samples::{doubling_chains, growing_chains, sigma};
    use crate::term::{expand_prefix, lasso_named, FiniteTerm, TermSource};

    #[test]
    fn even_chains_on_growing_tree() {
        let a = even_chains();
        let q2 = a.state("q2").unwrap();
        let t = growing_chains();
        let run = run_up_to(&a, &t, 3, q2).expect("run up to level three");
        assert!(run.is_valid(&a, &t));
        assert!(run_up_to(&a, &t, 4, q2).is_none());
        assert!(accepts_up_to(&a, &t, 3));
        assert!(!accepts_up_to(&a, &t, 4));
        assert_eq!(RunSearch::new(&a, &t).first_failing_level(q2, 10), Some(4));
    }

    #[test]
    fn level_zero_always_runs() {
        let a = even_chains();
        let t = growing_chains();
        for q in a.states() {
            let r = run_up_to(&a, &t, 0, q).unwrap();
            assert_eq!(r.state, q);
        }
    }

    #[test]
    fn even_chains_on_doubling_tree() {
        let a = even_chains();
        let t = doubling_chains();
        assert!(run_up_to(&a, &t, 12, a.state("q2").unwrap()).is_some());
    }

    #[test]
    fn unary_loop_never_dies() {
        let a = even_chains();
        let g = lasso_named(&sigma(), &[], &["g"]).unwrap();
        // q2 -> q1 -> q2 ... is always available on g alone
        assert!(accepts_up_to(&a, &g, 1));
        assert!(accepts_up_to(&a, &g, 2));
        assert!(accepts_up_to(&a, &g, 30));
    }

    #[test]
    fn complete_labeling_checks_leaves() {
        let a = even_chains();
        let s = sigma();
        let ok = TermSource::finite(FiniteTerm::parse(&s, "f(a, g(g(a)))").unwrap()).unwrap();
        let bad = TermSource::finite(FiniteTerm::parse(&s, "f(a, g(a))").unwrap()).unwrap();
        assert!(accepts_complete(&a, &expand_prefix(&ok, 10)));
        assert!(accepts_complete(&a, &ok));
        assert!(!accepts_complete(&a, &bad));
    }

    #[test]
    fn render_lists_paths() {
        let a = even_chains();
        let t = growing_chains();
        let run = run_up_to(&a, &t, 1, a.state("q2").unwrap()).unwrap();
        assert_eq!(run.render(&a, &t, 10), ". f q2\n0 a q2\n1 f q2\n");
        assert_eq!(run.path_states(&t, &[1]), vec![StateId(0), StateId(0)]);
    }
}
