//! The greatest fixed point of the rule clauses over the full judgment
//! space, computed by iterated removal.
//!
//! Judgments are never materialized at their full type. For a node `n` of
//! type `r1 -> ... -> rk -> s`, a key `(n, gamma, [u1..ui])` stands for the
//! set `{ f u1 .. ui | f provable at n }`, a downward closed subset of the
//! remaining type. Application clauses only look at their function part
//! through such applied sets, so only argument types and the remaining types
//! of demanded keys are enumerated. The terminal `f : o -> o -> o` at two
//! states, say, is only queried pointwise and its 2^32 element domain never
//! appears.

use std::collections::HashMap;
use std::sync::Arc;

use fixedbitset::FixedBitSet;

use crate::graph::{NodeKind, NodeRef, VarId};
use crate::semantics::{Enumeration, SemContext, SemanticValue, StateSet};
use crate::types::SimpleType;

use super::certificate::{CertEntry, ProofCertificate, Witness};
use super::{Judgment, ProofError, ProofProblem};

/// Default bound on the number of applied keys.
pub const KEY_BUDGET: usize = 1 << 20;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Key {
    node: NodeRef,
    /// Indices into the enumerations of the free variables' types.
    env: Vec<(VarId, u32)>,
    /// Indices into the enumerations of the node's first argument types.
    prefix: Vec<u32>,
}

#[derive(Debug)]
enum Op {
    Fixed(FixedBitSet),
    App { arg: usize, fun: Vec<usize> },
    AbsAt { body: usize },
    AbsAll { bodies: Vec<usize> },
}

#[derive(Debug)]
struct Slot {
    key: Key,
    /// The remaining type, after the prefix.
    ty: SimpleType,
    dom: Arc<Enumeration>,
    op: Op,
}

/// The fixed point, one downward closed set per applied key.
#[derive(Debug)]
pub struct ExactFixpoint {
    slots: Vec<Slot>,
    sets: Vec<FixedBitSet>,
    index: HashMap<Key, usize>,
    /// Total size of the sets after each iteration, starting from the full
    /// space.
    pub level_sizes: Vec<usize>,
}

/// Computes the greatest fixed point. Fails when an argument or remaining
/// type of a demanded key is above the enumeration cap.
pub fn gfp_exact(p: &ProofProblem) -> Result<ExactFixpoint, ProofError> {
    gfp_exact_with_budget(p, KEY_BUDGET)
}

pub fn gfp_exact_with_budget(p: &ProofProblem, budget: usize) -> Result<ExactFixpoint, ProofError> {
    let mut b = Builder {
        p,
        slots: Vec::new(),
        index: HashMap::new(),
        budget,
    };
    let root = Key {
        node: p.graph().root(),
        env: Vec::new(),
        prefix: Vec::new(),
    };
    b.intern(root)?;
    let mut i = 0;
    while i < b.slots.len() {
        b.expand(i)?;
        i += 1;
    }
    let Builder { slots, index, .. } = b;
    let mut sets: Vec<FixedBitSet> = slots
        .iter()
        .map(|s| match &s.op {
            Op::Fixed(f) => f.clone(),
            _ => full(s.dom.len()),
        })
        .collect();
    let total = |sets: &[FixedBitSet]| sets.iter().map(|s| s.count_ones(..)).sum::<usize>();
    let mut level_sizes = vec![slots.iter().map(|s| s.dom.len()).sum(), total(&sets)];
    loop {
        // each sweep reads only the previous iterate
        let next: Vec<FixedBitSet> = (0..slots.len()).map(|k| step(p, &slots, &sets, k)).collect();
        if next == sets {
            break;
        }
        sets = next;
        level_sizes.push(total(&sets));
    }
    Ok(ExactFixpoint {
        slots,
        sets,
        index,
        level_sizes,
    })
}

fn full(n: usize) -> FixedBitSet {
    let mut s = FixedBitSet::with_capacity(n);
    s.insert_range(..);
    s
}

fn step(p: &ProofProblem, slots: &[Slot], sets: &[FixedBitSet], k: usize) -> FixedBitSet {
    let s = &slots[k];
    match &s.op {
        Op::Fixed(f) => f.clone(),
        Op::App { arg, fun } => {
            let mut u = FixedBitSet::with_capacity(s.dom.len());
            for v in sets[*arg].ones() {
                u.union_with(&sets[fun[v]]);
            }
            down_lift(p, s, &u, true)
        }
        Op::AbsAt { body } => down_lift(p, s, &sets[*body], false),
        Op::AbsAll { bodies } => {
            let allowed: Vec<FixedBitSet> = bodies
                .iter()
                .map(|&b| down_lift(p, &slots[b], &sets[b], false))
                .collect();
            let width = slots[bodies[0]].dom.len();
            let mut out = FixedBitSet::with_capacity(s.dom.len());
            for c in 0..s.dom.len() {
                // entry a of table c is digit a, most significant first
                let mut rest = c;
                let mut ok = true;
                for a in (0..bodies.len()).rev() {
                    if !allowed[a].contains(rest % width) {
                        ok = false;
                        break;
                    }
                    rest /= width;
                }
                if ok {
                    out.insert(c);
                }
            }
            out
        }
    }
}

/// `{ c | c <= lift(d) for some d in set }` over the slot's domain.
fn down_lift(p: &ProofProblem, s: &Slot, set: &FixedBitSet, app: bool) -> FixedBitSet {
    let identity = if app { p.app_identity } else { p.beta_identity };
    if identity {
        return set.clone();
    }
    let sem = p.semantics();
    let images: Vec<SemanticValue> = set
        .ones()
        .map(|d| {
            let v = s.dom.value(d);
            if app {
                p.lift_app(v, &s.ty)
            } else {
                p.lift_beta(v, &s.ty)
            }
        })
        .collect();
    let mut out = FixedBitSet::with_capacity(s.dom.len());
    for c in 0..s.dom.len() {
        let cv = s.dom.value(c);
        if images.iter().any(|d| sem.leq(cv, d, &s.ty)) {
            out.insert(c);
        }
    }
    out
}

struct Builder<'a> {
    p: &'a ProofProblem,
    slots: Vec<Slot>,
    index: HashMap<Key, usize>,
    budget: usize,
}

impl Builder<'_> {
    fn intern(&mut self, key: Key) -> Result<usize, ProofError> {
        if let Some(&i) = self.index.get(&key) {
            return Ok(i);
        }
        if self.slots.len() >= self.budget {
            return Err(ProofError::JudgmentBudget(self.budget));
        }
        let mut ty = self.p.ty(key.node).clone();
        for _ in 0..key.prefix.len() {
            ty = ty.split().expect("prefix within arity").1.clone();
        }
        let dom = self.p.semantics().enumeration(&ty)?;
        let i = self.slots.len();
        self.slots.push(Slot {
            key: key.clone(),
            ty,
            dom,
            op: Op::Fixed(FixedBitSet::new()),
        });
        self.index.insert(key, i);
        Ok(i)
    }

    fn env_value(&self, env: &[(VarId, u32)], x: VarId) -> Result<SemanticValue, ProofError> {
        let i = env[env.binary_search_by_key(&x, |e| e.0).expect("free variable bound")].1;
        Ok(self
            .p
            .semantics()
            .enumeration(self.p.var_ty(x))?
            .value(i as usize)
            .clone())
    }

    fn prefix_values(&self, node: NodeRef, prefix: &[u32]) -> Result<Vec<SemanticValue>, ProofError> {
        let args = self.p.ty(node).args();
        prefix
            .iter()
            .zip(args)
            .map(|(&i, t)| Ok(self.p.semantics().enumeration(t)?.value(i as usize).clone()))
            .collect()
    }

    fn restrict(&self, env: &[(VarId, u32)], n: NodeRef) -> Vec<(VarId, u32)> {
        let fv = self.p.fv(n);
        env.iter()
            .filter(|(x, _)| fv.binary_search(x).is_ok())
            .copied()
            .collect()
    }

    fn expand(&mut self, i: usize) -> Result<(), ProofError> {
        let key = self.slots[i].key.clone();
        let sem = self.p.semantics();
        let op = match self.p.graph().node(key.node).kind {
            NodeKind::Var(x) => {
                let v = self.env_value(&key.env, x)?;
                let args = self.prefix_values(key.node, &key.prefix)?;
                let bound = sem.apply_all(&v, &args, self.p.var_ty(x));
                Op::Fixed(self.below(i, &bound))
            }
            NodeKind::Term(f) => {
                let args: Vec<StateSet> = self
                    .prefix_values(key.node, &key.prefix)?
                    .iter()
                    .map(|v| v.as_base().expect("terminal arguments are ground"))
                    .collect();
                let bound = sem.terminal_value(self.p.automaton(), f, &args, &self.slots[i].ty);
                Op::Fixed(self.below(i, &bound))
            }
            NodeKind::App(s, t) => {
                let rho = self.p.ty(t).clone();
                let n = sem.enumeration(&rho)?.len();
                let arg = self.intern(Key {
                    node: t,
                    env: self.restrict(&key.env, t),
                    prefix: Vec::new(),
                })?;
                let env_s = self.restrict(&key.env, s);
                let mut fun = Vec::with_capacity(n);
                for v in 0..n as u32 {
                    let mut prefix = vec![v];
                    prefix.extend_from_slice(&key.prefix);
                    fun.push(self.intern(Key {
                        node: s,
                        env: env_s.clone(),
                        prefix,
                    })?);
                }
                Op::App { arg, fun }
            }
            NodeKind::Abs(x, body) => {
                let bind = |a: u32| {
                    let mut env = key.env.clone();
                    let at = env.partition_point(|e| e.0 < x);
                    env.insert(at, (x, a));
                    self.restrict(&env, body)
                };
                if let Some((&a, rest)) = key.prefix.split_first() {
                    let k = Key {
                        node: body,
                        env: bind(a),
                        prefix: rest.to_vec(),
                    };
                    Op::AbsAt { body: self.intern(k)? }
                } else {
                    let n = sem.enumeration(self.p.var_ty(x))?.len() as u32;
                    let keys: Vec<Key> = (0..n)
                        .map(|a| Key {
                            node: body,
                            env: bind(a),
                            prefix: Vec::new(),
                        })
                        .collect();
                    let bodies = keys.into_iter().map(|k| self.intern(k)).collect::<Result<_, _>>()?;
                    Op::AbsAll { bodies }
                }
            }
        };
        self.slots[i].op = op;
        Ok(())
    }

    fn below(&self, i: usize, bound: &SemanticValue) -> FixedBitSet {
        let s = &self.slots[i];
        let sem = self.p.semantics();
        let mut out = FixedBitSet::with_capacity(s.dom.len());
        for (c, v) in s.dom.values().iter().enumerate() {
            if sem.leq(v, bound, &s.ty) {
                out.insert(c);
            }
        }
        out
    }
}

impl ExactFixpoint {
    pub fn key_count(&self) -> usize {
        self.slots.len()
    }

    pub fn iterations(&self) -> usize {
        self.level_sizes.len() - 1
    }

    /// Whether `{q0}` is provable at the root.
    pub fn holds(&self, q: crate::automaton::StateId) -> bool {
        self.sets[0].contains(StateSet::singleton(q).0 as usize)
    }

    fn key_for(&self, p: &ProofProblem, node: NodeRef, gamma: &SemContext, prefix: &[SemanticValue]) -> Option<usize> {
        let sem = p.semantics();
        let env = gamma
            .entries()
            .iter()
            .map(|(x, v)| Some((*x, sem.enumeration(p.var_ty(*x)).ok()?.index_of(v)? as u32)))
            .collect::<Option<Vec<_>>>()?;
        let args = p.ty(node).args();
        let prefix = prefix
            .iter()
            .zip(args)
            .map(|(v, t)| Some(sem.enumeration(t).ok()?.index_of(v)? as u32))
            .collect::<Option<Vec<_>>>()?;
        self.index.get(&Key { node, env, prefix }).copied()
    }

    /// Membership of `c` in the applied set `(node, gamma, prefix)`; `None`
    /// when that key was never demanded.
    pub fn contains_applied(
        &self,
        p: &ProofProblem,
        node: NodeRef,
        gamma: &SemContext,
        prefix: &[SemanticValue],
        c: &SemanticValue,
    ) -> Option<bool> {
        let k = self.key_for(p, node, gamma, prefix)?;
        let i = self.slots[k].dom.index_of(c)?;
        Some(self.sets[k].contains(i))
    }

    /// The provable values of a demanded key, as `(prefix, c)` pairs: each
    /// stands for `[prefix |-> c]` at the node.
    pub fn applied_sets(&self, p: &ProofProblem) -> Vec<(Judgment, Vec<SemanticValue>)> {
        let sem = p.semantics();
        let mut out = Vec::new();
        for (k, s) in self.slots.iter().enumerate() {
            let gamma = SemContext::from_entries(
                s.key
                    .env
                    .iter()
                    .map(|&(x, i)| {
                        (
                            x,
                            sem.enumeration(p.var_ty(x))
                                .expect("enumerated")
                                .value(i as usize)
                                .clone(),
                        )
                    })
                    .collect(),
            );
            let prefix = self.prefix(p, k);
            for c in self.sets[k].ones() {
                out.push((
                    Judgment {
                        node: s.key.node,
                        gamma: gamma.clone(),
                        value: sem.step_function(&prefix, s.dom.value(c).clone(), p.ty(s.key.node)),
                    },
                    prefix.clone(),
                ));
            }
        }
        out
    }

    fn prefix(&self, p: &ProofProblem, k: usize) -> Vec<SemanticValue> {
        let s = &self.slots[k];
        s.key
            .prefix
            .iter()
            .zip(p.ty(s.key.node).args())
            .map(|(&i, t)| {
                p.semantics()
                    .enumeration(t)
                    .expect("enumerated")
                    .value(i as usize)
                    .clone()
            })
            .collect()
    }

    fn gamma(&self, p: &ProofProblem, k: usize) -> SemContext {
        let sem = p.semantics();
        SemContext::from_entries(
            self.slots[k]
                .key
                .env
                .iter()
                .map(|&(x, i)| {
                    (
                        x,
                        sem.enumeration(p.var_ty(x))
                            .expect("enumerated")
                            .value(i as usize)
                            .clone(),
                    )
                })
                .collect(),
        )
    }

    /// A certificate for `{q0}` at the root, if it holds. Arguments are
    /// chosen largest first and results smallest first, which keeps
    /// annotations close to the natural reading of each subterm.
    pub fn certificate(&self, p: &ProofProblem, q0: crate::automaton::StateId) -> Option<ProofCertificate> {
        if !self.holds(q0) {
            return None;
        }
        let sem = p.semantics();
        let mut entries = Vec::new();
        let mut done = std::collections::HashSet::new();
        let mut stack = vec![(0usize, StateSet::singleton(q0).0 as usize)];
        while let Some((k, c)) = stack.pop() {
            let s = &self.slots[k];
            if !done.insert((k, c)) || sem.is_bottom(s.dom.value(c)) {
                continue;
            }
            let node = s.key.node;
            let prefix = self.prefix(p, k);
            let cv = s.dom.value(c).clone();
            let witness = match &s.op {
                Op::Fixed(_) => Witness::None,
                Op::App { arg, fun } => {
                    let NodeKind::App(fnode, _) = p.graph().node(node).kind else {
                        unreachable!()
                    };
                    let (v, d) = self.sets[*arg]
                        .ones()
                        .rev()
                        .find_map(|v| {
                            let fs = &self.slots[fun[v]];
                            self.sets[fun[v]]
                                .ones()
                                .find(|&d| sem.leq(&cv, &p.lift_app(fs.dom.value(d), &fs.ty), &s.ty))
                                .map(|d| (v, d))
                        })
                        .expect("application in the fixed point has a witness");
                    stack.push((fun[v], d));
                    stack.push((*arg, v));
                    let uv = self.slots[*arg].dom.value(v).clone();
                    let mut fargs = vec![uv.clone()];
                    fargs.extend(prefix.iter().cloned());
                    Witness::App {
                        f: sem.step_function(&fargs, self.slots[fun[v]].dom.value(d).clone(), p.ty(fnode)),
                        u: uv,
                    }
                }
                Op::AbsAt { body } => {
                    let bs = &self.slots[*body];
                    let b = self.sets[*body]
                        .ones()
                        .find(|&b| sem.leq(&cv, &p.lift_beta(bs.dom.value(b), &bs.ty), &s.ty))
                        .expect("abstraction in the fixed point has a witness");
                    stack.push((*body, b));
                    let body_ty = p.ty(node).split().expect("arrow").1;
                    Witness::Abs(vec![(
                        prefix[0].clone(),
                        sem.step_function(&prefix[1..], bs.dom.value(b).clone(), body_ty),
                    )])
                }
                Op::AbsAll { bodies } => {
                    let (rho, sigma) = s.ty.split().expect("arrow");
                    let args = sem.enumeration(rho).expect("enumerated");
                    let mut fam = Vec::new();
                    for (a, &bk) in bodies.iter().enumerate() {
                        let ca = sem.apply(&cv, args.value(a), &s.ty);
                        if sem.is_bottom(&ca) {
                            continue;
                        }
                        let bs = &self.slots[bk];
                        let b = self.sets[bk]
                            .ones()
                            .find(|&b| sem.leq(&ca, &p.lift_beta(bs.dom.value(b), &bs.ty), sigma))
                            .expect("abstraction in the fixed point has a witness");
                        stack.push((bk, b));
                        fam.push((args.value(a).clone(), bs.dom.value(b).clone()));
                    }
                    Witness::Abs(fam)
                }
            };
            entries.push(CertEntry {
                judgment: Judgment {
                    node,
                    gamma: self.gamma(p, k),
                    value: sem.step_function(&prefix, cv, p.ty(node)),
                },
                witness,
            });
        }
        let mut cert = ProofCertificate {
            scheme: String::new(),
            automaton: String::new(),
            state: p.automaton().state_name(q0).to_string(),
            root: p.graph().root(),
            entries,
        };
        cert.sort();
        Some(cert)
    }
}
