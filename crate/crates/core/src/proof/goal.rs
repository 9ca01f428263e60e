//! Goal-directed proof search from the root claim.
//!
//! Existentials are instantiated from finite candidate pools: at an
//! application the argument value `u` comes from a pool for the argument's
//! type and the function value is the step function `[u |-> c]` for a
//! minimal `c`. Abstractions only need body values at the points where their
//! value is not bottom. The explored goals form a finite graph on which the
//! greatest fixed point is taken, so cycles are assumed to hold.
//!
//! The pools are a heuristic: an exhausted search is not a refutation.

use std::collections::HashMap;

use crate::graph::NodeKind;
use crate::semantics::{SemContext, SemanticValue, StateSet};
use crate::types::SimpleType;

use super::certificate::{CertEntry, ProofCertificate, Witness};
use super::{Judgment, ProofProblem};

#[derive(Clone, Debug)]
pub struct GoalOptions {
    pub max_goals: usize,
    /// Composition depth for generated first-order argument values.
    pub pool_depth: usize,
    /// Bound on generated values per argument type.
    pub pool_limit: usize,
}

impl Default for GoalOptions {
    fn default() -> Self {
        GoalOptions {
            max_goals: 200_000,
            pool_depth: 3,
            pool_limit: 48,
        }
    }
}

/// A goal that failed its own clause, as opposed to failing through its
/// premises.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalFailure {
    pub judgment: Judgment,
    pub clause: &'static str,
    pub reason: String,
}

#[derive(Clone, Debug)]
pub struct SearchExhausted {
    pub goals: usize,
    pub budget_hit: bool,
    /// Reachable local failures, variables first.
    pub failures: Vec<LocalFailure>,
}

#[derive(Clone, Debug)]
enum Choice {
    App { f: SemanticValue, u: SemanticValue },
    Abs { a: SemanticValue, b: SemanticValue },
}

#[derive(Debug)]
struct Alt {
    premises: Vec<usize>,
    choice: Choice,
}

#[derive(Debug)]
struct Goal {
    j: Judgment,
    /// All clauses must hold; a clause holds when one alternative does.
    clauses: Vec<Vec<Alt>>,
    alive: bool,
    failure: Option<(&'static str, String)>,
    expanded: bool,
}

struct Search<'a> {
    p: &'a ProofProblem,
    opts: &'a GoalOptions,
    goals: Vec<Goal>,
    index: HashMap<Judgment, usize>,
    pools: HashMap<SimpleType, Vec<SemanticValue>>,
}

pub fn goal_search(
    p: &ProofProblem,
    q0: crate::automaton::StateId,
    opts: &GoalOptions,
) -> Result<ProofCertificate, SearchExhausted> {
    let mut s = Search {
        p,
        opts,
        goals: Vec::new(),
        index: HashMap::new(),
        pools: HashMap::new(),
    };
    let root = s.intern(Judgment {
        node: p.graph().root(),
        gamma: SemContext::empty(),
        value: SemanticValue::Base(StateSet::singleton(q0)),
    });
    let mut budget_hit = false;
    let mut i = 0;
    while i < s.goals.len() {
        if s.goals.len() > opts.max_goals {
            budget_hit = true;
            break;
        }
        s.expand(i);
        i += 1;
    }
    for g in &mut s.goals {
        if !g.expanded {
            g.alive = false;
        }
    }
    s.fixpoint();
    if s.goals[root].alive {
        Ok(s.certificate(root, q0))
    } else {
        Err(SearchExhausted {
            goals: s.goals.len(),
            budget_hit,
            failures: s.failures(root),
        })
    }
}

impl Search<'_> {
    fn intern(&mut self, j: Judgment) -> usize {
        if let Some(&i) = self.index.get(&j) {
            return i;
        }
        let i = self.goals.len();
        self.index.insert(j.clone(), i);
        self.goals.push(Goal {
            j,
            clauses: Vec::new(),
            alive: true,
            failure: None,
            expanded: false,
        });
        i
    }

    /// Premise goal, or `None` when the value is bottom and holds outright.
    fn premise(&mut self, j: Judgment) -> Option<usize> {
        if self.p.semantics().is_bottom(&j.value) {
            None
        } else {
            Some(self.intern(j))
        }
    }

    fn expand(&mut self, i: usize) {
        let p = self.p;
        let sem = p.semantics();
        let j = self.goals[i].j.clone();
        let ty = p.ty(j.node).clone();
        let mut clauses = Vec::new();
        let mut failure = None;
        match p.graph().node(j.node).kind {
            NodeKind::Var(x) => {
                let gx = j.gamma.get(x).expect("free variable in context");
                if !sem.leq(&j.value, gx, &ty) {
                    failure = Some((
                        "var",
                        format!("{} is not below {}", sem.display(&j.value, &ty), sem.display(gx, &ty)),
                    ));
                }
            }
            NodeKind::Term(f) => {
                if !sem.below_terminal(p.automaton(), f, &[], &j.value) {
                    failure = Some((
                        "term",
                        format!(
                            "{} exceeds `{}`",
                            sem.display(&j.value, &ty),
                            p.graph().alphabet().name(f)
                        ),
                    ));
                }
            }
            NodeKind::App(s, t) => {
                let (ts, tt) = (p.ty(s).clone(), p.ty(t).clone());
                let gs = j.gamma.restrict(p.fv(s));
                let gt = j.gamma.restrict(p.fv(t));
                let mut alts = Vec::new();
                let cs = p.preimages(&j.value, &ty, true);
                for u in self.pool(t, &j.gamma, &tt) {
                    for c in &cs {
                        let f = sem.step_function(std::slice::from_ref(&u), c.clone(), &ts);
                        let premises = [
                            self.premise(Judgment {
                                node: s,
                                gamma: gs.clone(),
                                value: f.clone(),
                            }),
                            self.premise(Judgment {
                                node: t,
                                gamma: gt.clone(),
                                value: u.clone(),
                            }),
                        ];
                        alts.push(Alt {
                            premises: premises.into_iter().flatten().collect(),
                            choice: Choice::App { f, u: u.clone() },
                        });
                    }
                }
                if alts.is_empty() {
                    failure = Some(("app", "no candidate function and argument values".into()));
                }
                clauses.push(alts);
            }
            NodeKind::Abs(x, body) => {
                let sigma = ty.split().expect("abstraction has arrow type").1.clone();
                for (a, r) in sem.points(&j.value, &ty) {
                    let gb = j.gamma.with(x, a.clone()).restrict(p.fv(body));
                    let mut alts = Vec::new();
                    for b in p.preimages(&r, &sigma, false) {
                        let prem = self.premise(Judgment {
                            node: body,
                            gamma: gb.clone(),
                            value: b.clone(),
                        });
                        alts.push(Alt {
                            premises: prem.into_iter().collect(),
                            choice: Choice::Abs { a: a.clone(), b },
                        });
                    }
                    if alts.is_empty() {
                        failure = Some((
                            "abs",
                            format!("no body value for {}", sem.display(&a, ty.split().unwrap().0)),
                        ));
                    }
                    clauses.push(alts);
                }
            }
        }
        let g = &mut self.goals[i];
        g.alive = failure.is_none();
        g.failure = failure;
        g.clauses = clauses;
        g.expanded = true;
    }

    /// Candidate argument values for `t` under `gamma`, most specific first.
    fn pool(&mut self, t: crate::graph::NodeRef, gamma: &SemContext, rho: &SimpleType) -> Vec<SemanticValue> {
        let sem = self.p.semantics();
        let base_pool = || {
            let all = sem.all_states();
            if sem.state_count() <= 4 {
                return submasks(all).map(|m| SemanticValue::Base(StateSet(m))).collect();
            }
            let mut v = vec![SemanticValue::Base(all)];
            v.extend(
                sem.all_states()
                    .iter()
                    .map(|q| SemanticValue::Base(StateSet::singleton(q))),
            );
            v.push(SemanticValue::Base(StateSet::EMPTY));
            v
        };
        if let NodeKind::Var(x) = self.p.graph().node(t).kind {
            let gx = gamma.get(x).expect("free variable in context").clone();
            return match gx {
                // Values outside Γ(x) only fail, but they keep the search
                // going far enough to blame the variable.
                SemanticValue::Base(m) => {
                    let mut v: Vec<_> = submasks(m).map(|m| SemanticValue::Base(StateSet(m))).collect();
                    for u in base_pool() {
                        if !v.contains(&u) {
                            v.push(u);
                        }
                    }
                    v
                }
                v => vec![v],
            };
        }
        if rho.is_base() {
            return base_pool();
        }
        let mut out = self.generated(rho);
        for (x, v) in gamma.entries() {
            if self.p.var_ty(*x) == rho && !out.contains(v) {
                out.push(v.clone());
            }
        }
        let bot = sem.bottom(rho);
        if !out.contains(&bot) {
            out.push(bot);
        }
        out
    }

    /// First-order functions computed by small contexts over the automaton's
    /// symbols: projections and constants closed under the terminal readings.
    fn generated(&mut self, rho: &SimpleType) -> Vec<SemanticValue> {
        if let Some(v) = self.pools.get(rho) {
            return v.clone();
        }
        let sem = self.p.semantics();
        let a = self.p.automaton();
        let k = rho.arity();
        let n = 1usize << sem.state_count();
        let first_order = rho.args().iter().all(|t| t.is_base());
        let points = n.checked_pow(k as u32).filter(|&m| m <= 4096);
        let mut out = Vec::new();
        if let (true, Some(points), Some(_)) = (first_order, points, sem.domain_size(rho)) {
            let digit = |t: usize, i: usize| (t / n.pow((k - 1 - i) as u32)) % n;
            let mut tables: Vec<Vec<u64>> = (0..k)
                .map(|i| (0..points).map(|t| digit(t, i) as u64).collect())
                .collect();
            let syms: Vec<_> = a.alphabet().symbols().collect();
            for &f in &syms {
                if a.alphabet().arity(f) == 0 {
                    let c = sem.terminal_bound(a, f, &[]).0;
                    push_new(&mut tables, vec![c; points]);
                }
            }
            for _ in 0..self.opts.pool_depth {
                let current = tables.clone();
                for &f in &syms {
                    let m = a.alphabet().arity(f);
                    if m == 0 || current.len().checked_pow(m as u32).is_none_or(|c| c > 20_000) {
                        continue;
                    }
                    let mut pick = vec![0usize; m];
                    'tuples: loop {
                        let table: Vec<u64> = (0..points)
                            .map(|t| {
                                let args: Vec<StateSet> = pick.iter().map(|&g| StateSet(current[g][t])).collect();
                                sem.terminal_bound(a, f, &args).0
                            })
                            .collect();
                        push_new(&mut tables, table);
                        if tables.len() >= self.opts.pool_limit {
                            break;
                        }
                        for d in pick.iter_mut().rev() {
                            *d += 1;
                            if *d < current.len() {
                                continue 'tuples;
                            }
                            *d = 0;
                        }
                        break;
                    }
                }
            }
            for table in tables {
                let look = |args: &[StateSet]| StateSet(table[args.iter().fold(0, |t, m| t * n + m.0 as usize)]);
                let v = sem.tabulate(rho, &[], &look);
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        }
        self.pools.insert(rho.clone(), out.clone());
        out
    }

    fn fixpoint(&mut self) {
        let live = self.gfp(None);
        for (g, l) in self.goals.iter_mut().zip(live) {
            g.alive = l;
        }
    }

    /// Greatest set of goals closed under the clauses, starting from the
    /// expanded goals without a local failure. `forced` is assumed to hold.
    fn gfp(&self, forced: Option<usize>) -> Vec<bool> {
        let mut live: Vec<bool> = self.goals.iter().map(|g| g.expanded && g.failure.is_none()).collect();
        if let Some(f) = forced {
            live[f] = true;
        }
        loop {
            let mut changed = false;
            for i in 0..self.goals.len() {
                if !live[i] || Some(i) == forced {
                    continue;
                }
                let ok = self.goals[i]
                    .clauses
                    .iter()
                    .all(|alts| alts.iter().any(|alt| alt.premises.iter().all(|&q| live[q])));
                if !ok {
                    live[i] = false;
                    changed = true;
                }
            }
            if !changed {
                return live;
            }
        }
    }

    fn chosen(&self, i: usize) -> Vec<&Alt> {
        self.goals[i]
            .clauses
            .iter()
            .map(|alts| {
                alts.iter()
                    .find(|alt| alt.premises.iter().all(|&q| self.goals[q].alive))
                    .expect("alive goal has a live alternative")
            })
            .collect()
    }

    fn certificate(&self, root: usize, q0: crate::automaton::StateId) -> ProofCertificate {
        let mut seen = vec![false; self.goals.len()];
        let mut stack = vec![root];
        let mut entries = Vec::new();
        while let Some(i) = stack.pop() {
            if std::mem::replace(&mut seen[i], true) {
                continue;
            }
            let alts = self.chosen(i);
            let witness = match self.p.graph().node(self.goals[i].j.node).kind {
                NodeKind::Var(_) | NodeKind::Term(_) => Witness::None,
                NodeKind::App(..) => match &alts[0].choice {
                    Choice::App { f, u } => Witness::App {
                        f: f.clone(),
                        u: u.clone(),
                    },
                    Choice::Abs { .. } => unreachable!(),
                },
                NodeKind::Abs(..) => Witness::Abs(
                    alts.iter()
                        .map(|alt| match &alt.choice {
                            Choice::Abs { a, b } => (a.clone(), b.clone()),
                            Choice::App { .. } => unreachable!(),
                        })
                        .collect(),
                ),
            };
            for alt in &alts {
                stack.extend(alt.premises.iter().copied());
            }
            entries.push(CertEntry {
                judgment: self.goals[i].j.clone(),
                witness,
            });
        }
        let mut cert = ProofCertificate {
            scheme: String::new(),
            automaton: String::new(),
            state: self.p.automaton().state_name(q0).to_string(),
            root: self.p.graph().root(),
            entries,
        };
        cert.sort();
        cert
    }

    /// Local failures reachable from the root. A failure is critical when
    /// assuming it alone makes the root provable. Critical failures come
    /// first, variables before other clauses, small demands before large
    /// ones, and shorter repaired proofs first.
    fn failures(&self, root: usize) -> Vec<LocalFailure> {
        let mut seen = vec![false; self.goals.len()];
        let mut queue = std::collections::VecDeque::from([root]);
        let mut found = Vec::new();
        while let Some(i) = queue.pop_front() {
            if std::mem::replace(&mut seen[i], true) {
                continue;
            }
            let g = &self.goals[i];
            if g.failure.is_some() {
                found.push(i);
            }
            for alts in &g.clauses {
                for alt in alts {
                    queue.extend(alt.premises.iter().copied());
                }
            }
        }
        let size = |v: &SemanticValue| v.as_base().map_or(usize::MAX, |m| m.iter().count());
        let mut ranked: Vec<_> = found
            .iter()
            .enumerate()
            .map(|(k, &i)| {
                let g = &self.goals[i];
                let proof = if k < CRITICAL_PROBES {
                    let live = self.gfp(Some(i));
                    live[root].then(|| self.proof_size(&live, root))
                } else {
                    None
                };
                let var = g.failure.as_ref().is_some_and(|f| f.0 == "var");
                (proof.is_none(), !var, size(&g.j.value), proof, i)
            })
            .collect();
        ranked.sort();
        ranked
            .into_iter()
            .take(8)
            .map(|(.., i)| {
                let g = &self.goals[i];
                let (clause, reason) = g.failure.clone().expect("failing goal");
                LocalFailure {
                    judgment: g.j.clone(),
                    clause,
                    reason,
                }
            })
            .collect()
    }
}

impl Search<'_> {
    /// Goals used by the first-choice proof under `live`.
    fn proof_size(&self, live: &[bool], root: usize) -> usize {
        let mut seen = vec![false; self.goals.len()];
        let mut stack = vec![root];
        let mut n = 0;
        while let Some(i) = stack.pop() {
            if std::mem::replace(&mut seen[i], true) {
                continue;
            }
            n += 1;
            for alts in &self.goals[i].clauses {
                if let Some(alt) = alts.iter().find(|alt| alt.premises.iter().all(|&q| live[q])) {
                    stack.extend(alt.premises.iter().copied());
                }
            }
        }
        n
    }
}

/// Failures tested for criticality; each probe reruns the fixed point.
const CRITICAL_PROBES: usize = 64;

fn push_new(tables: &mut Vec<Vec<u64>>, t: Vec<u64>) {
    if !tables.contains(&t) {
        tables.push(t);
    }
}

/// Submasks of `m`, largest first.
fn submasks(m: StateSet) -> impl Iterator<Item = u64> {
    let m = m.0;
    let mut next = Some(m);
    std::iter::from_fn(move || {
        let cur = next?;
        next = if cur == 0 { None } else { Some((cur - 1) & m) };
        Some(cur)
    })
}
