//! Continuous normalization of a closed ground lambda graph into a lazy
//! Σ-term, where Σ adds the delays `R` (an application was inspected) and
//! `b` (a beta step was performed) to the terminals.
//!
//! Substitution is realized by closures: a closure pairs a graph node with
//! an environment restricted to the node's free variables, and closures are
//! hash-consed so equal configurations share one output node.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::alphabet::{AlphabetError, RankedAlphabet, Symbol, DELAY_APP, DELAY_BETA};
use crate::graph::{check_types, NodeKind, NodeRef, RegularLambdaGraph, VarId};
use crate::term::{PrefixNode, PrefixTree, TermSource, TreeAccess, Unfold};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClosureId(pub u32);

/// A head closure applied to a stack of argument closures, first argument
/// on top (index 0).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CnConfig {
    pub head: ClosureId,
    pub args: Vec<ClosureId>,
}

/// One unfolding of the normalization equations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HeadStep {
    /// Emit `R`: the head was an application, its argument is pushed.
    App(CnConfig),
    /// Emit `b`: the head was an abstraction, the top argument is bound.
    Beta(CnConfig),
    /// Emit a terminal; its collected arguments continue independently.
    Terminal(Symbol, Vec<CnConfig>),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CnError {
    #[error("graph is not closed")]
    NotClosed,
    #[error("graph root has type {0}, expected o")]
    NotGround(String),
    #[error("graph is ill-typed: {0}")]
    IllTyped(String),
    #[error(transparent)]
    Alphabet(#[from] AlphabetError),
}

type Env = Arc<[(VarId, ClosureId)]>;

#[derive(Default)]
struct ClosureTable {
    entries: Vec<(NodeRef, Env)>,
    index: HashMap<(NodeRef, Env), ClosureId>,
}

/// The normalization machine for one graph.
pub struct Normalizer {
    graph: Arc<RegularLambdaGraph>,
    sigma: RankedAlphabet,
    delay_app: Symbol,
    delay_beta: Symbol,
    table: Mutex<ClosureTable>,
}

impl std::fmt::Debug for Normalizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Normalizer")
            .field("nodes", &self.graph.len())
            .field("closures", &self.closure_count())
            .finish()
    }
}

impl Normalizer {
    pub fn new(graph: &RegularLambdaGraph) -> Result<Arc<Self>, CnError> {
        let ty = check_types(graph)
            .map_err(|e| CnError::IllTyped(e.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; ")))?;
        if !ty.is_base() {
            return Err(CnError::NotGround(ty.to_string()));
        }
        if !graph.is_closed() {
            return Err(CnError::NotClosed);
        }
        let sigma = graph.alphabet().with_delays()?;
        Ok(Arc::new(Normalizer {
            delay_app: sigma.symbol(DELAY_APP)?,
            delay_beta: sigma.symbol(DELAY_BETA)?,
            sigma,
            graph: Arc::new(graph.clone()),
            table: Mutex::new(ClosureTable::default()),
        }))
    }

    pub fn graph(&self) -> &RegularLambdaGraph {
        &self.graph
    }

    /// The output alphabet: terminals followed by `R` and `b`.
    pub fn alphabet(&self) -> &RankedAlphabet {
        &self.sigma
    }

    pub fn closure_count(&self) -> usize {
        self.table.lock().expect("closure table poisoned").entries.len()
    }

    pub fn closure(&self, c: ClosureId) -> (NodeRef, Vec<(VarId, ClosureId)>) {
        let t = self.table.lock().expect("closure table poisoned");
        let (n, env) = &t.entries[c.0 as usize];
        (*n, env.to_vec())
    }

    /// The configuration for the graph root with no arguments.
    pub fn initial(&self) -> CnConfig {
        CnConfig {
            head: self.make_closure(self.graph.root(), &[]),
            args: Vec::new(),
        }
    }

    /// Closure of `node` under `env`. Variables are resolved immediately,
    /// so no closure has a variable node.
    fn make_closure(&self, node: NodeRef, env: &[(VarId, ClosureId)]) -> ClosureId {
        if let NodeKind::Var(x) = self.graph.node(node).kind {
            return lookup(env, x);
        }
        let fv = self.graph.free_variables(node);
        let restricted: Env = env
            .iter()
            .filter(|(v, _)| fv.binary_search(v).is_ok())
            .copied()
            .collect();
        let mut t = self.table.lock().expect("closure table poisoned");
        if let Some(&id) = t.index.get(&(node, restricted.clone())) {
            return id;
        }
        let id = ClosureId(t.entries.len() as u32);
        t.entries.push((node, restricted.clone()));
        t.index.insert((node, restricted), id);
        id
    }

    pub fn head_step(&self, c: &CnConfig) -> HeadStep {
        let (node, env) = {
            let t = self.table.lock().expect("closure table poisoned");
            t.entries[c.head.0 as usize].clone()
        };
        match self.graph.node(node).kind {
            NodeKind::App(f, a) => {
                let mut args = Vec::with_capacity(c.args.len() + 1);
                args.push(self.make_closure(a, &env));
                args.extend_from_slice(&c.args);
                HeadStep::App(CnConfig {
                    head: self.make_closure(f, &env),
                    args,
                })
            }
            NodeKind::Abs(x, body) => {
                let (&arg, rest) = c
                    .args
                    .split_first()
                    .expect("abstraction at ground type has an argument");
                let mut e: Vec<(VarId, ClosureId)> = env.iter().copied().filter(|(v, _)| *v != x).collect();
                let at = e.partition_point(|(v, _)| *v < x);
                e.insert(at, (x, arg));
                HeadStep::Beta(CnConfig {
                    head: self.make_closure(body, &e),
                    args: rest.to_vec(),
                })
            }
            NodeKind::Term(f) => HeadStep::Terminal(
                f,
                c.args
                    .iter()
                    .map(|&a| CnConfig {
                        head: a,
                        args: Vec::new(),
                    })
                    .collect(),
            ),
            NodeKind::Var(_) => unreachable!("variable closures are resolved on creation"),
        }
    }

    /// The lazily normalized term.
    pub fn source(self: &Arc<Self>) -> TermSource {
        let init = self.initial();
        TermSource::from_unfold(self.sigma.clone(), init, CnUnfold(self.clone()))
    }
}

fn lookup(env: &[(VarId, ClosureId)], x: VarId) -> ClosureId {
    env.binary_search_by_key(&x, |e| e.0)
        .map(|i| env[i].1)
        .expect("closure environment covers the free variables")
}

struct CnUnfold(Arc<Normalizer>);

impl Unfold for CnUnfold {
    type Seed = CnConfig;
    fn step(&self, c: &CnConfig) -> (Symbol, Vec<CnConfig>) {
        match self.0.head_step(c) {
            HeadStep::App(n) => (self.0.delay_app, vec![n]),
            HeadStep::Beta(n) => (self.0.delay_beta, vec![n]),
            // terminals keep their index in the extended alphabet
            HeadStep::Terminal(f, kids) => (f, kids),
        }
    }
}

/// The continuous normal form of a closed graph of type `o`.
pub fn cn(g: &RegularLambdaGraph) -> Result<TermSource, CnError> {
    Ok(Normalizer::new(g)?.source())
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("no terminal after {delays} consecutive delays at path {}", render_path(.path))]
pub struct DelayTimeout {
    /// Child positions in the delay-free tree leading to the stuck node.
    pub path: Vec<usize>,
    pub delays: usize,
}

fn render_path(p: &[usize]) -> String {
    if p.is_empty() {
        ".".into()
    } else {
        p.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(".")
    }
}

/// Removes delays from a Σ-term and expands the result to `depth`.
/// `fuel` bounds the number of consecutive delays skipped on any branch.
pub fn erase_delays<T: TreeAccess>(t: &T, depth: usize, fuel: usize) -> Result<PrefixTree, DelayTimeout> {
    let sigma = t.alphabet();
    let delay_app = sigma.lookup(DELAY_APP);
    let delay_beta = sigma.lookup(DELAY_BETA);
    let is_delay = |s: Symbol| Some(s) == delay_app || Some(s) == delay_beta;
    let terminals: Vec<(String, usize)> = sigma
        .symbols()
        .filter(|&s| !is_delay(s))
        .map(|s| (sigma.name(s).to_string(), sigma.arity(s)))
        .collect();
    let target = RankedAlphabet::new(terminals).expect("subset of a valid alphabet");
    let mut nodes = Vec::new();
    let mut stack = vec![(t.root(), 0usize, Vec::new(), None::<(usize, usize)>)];
    while let Some((mut id, d, path, parent)) = stack.pop() {
        let mut delays = 0;
        while is_delay(t.label(id)) {
            if delays == fuel {
                return Err(DelayTimeout { path, delays });
            }
            delays += 1;
            match t.children(id) {
                Some(k) => id = k[0],
                None => return Err(DelayTimeout { path, delays }),
            }
        }
        let l = t.label(id);
        let label = target.symbol(sigma.name(l)).expect("terminal present");
        let me = nodes.len();
        nodes.push(PrefixNode {
            label,
            depth: d,
            children: if sigma.arity(l) == 0 { Some(Vec::new()) } else { None },
        });
        if let Some((p, k)) = parent {
            let kids: &mut Vec<usize> = match &mut nodes[p] {
                PrefixNode { children: Some(c), .. } => c,
                _ => unreachable!("parent children initialised"),
            };
            kids[k] = me;
        }
        if d < depth && sigma.arity(l) > 0 {
            if let Some(kids) = t.children(id) {
                nodes[me].children = Some(vec![usize::MAX; kids.len()]);
                for (k, c) in kids.into_iter().enumerate().rev() {
                    let mut p = path.clone();
                    p.push(k);
                    stack.push((c, d + 1, p, Some((me, k))));
                }
            }
        }
    }
    Ok(reorder(PrefixTree::from_parts(target, depth, nodes)))
}

/// Renumbers a prefix in depth-first order so that equal trees compare equal.
fn reorder(p: PrefixTree) -> PrefixTree {
    let old = p.nodes();
    let mut out = Vec::with_capacity(old.len());
    fn go(old: &[PrefixNode], i: usize, out: &mut Vec<PrefixNode>) -> usize {
        let me = out.len();
        out.push(PrefixNode {
            label: old[i].label,
            depth: old[i].depth,
            children: None,
        });
        if let Some(k) = &old[i].children {
            let ids = k.iter().map(|&c| go(old, c, out)).collect();
            out[me].children = Some(ids);
        }
        me
    }
    if !old.is_empty() {
        go(old, 0, &mut out);
    }
    PrefixTree::from_parts(p.alphabet().clone(), p.depth(), out)
}

/// A delay chain whose counts do not add up.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("chain at path {} ends in `{terminal}`: {pending} + {apps} R != {betas} b + arity {arity}", render_path(.path))]
pub struct JustificationViolation {
    pub path: Vec<usize>,
    pub terminal: String,
    pub pending: usize,
    pub apps: usize,
    pub betas: usize,
    pub arity: usize,
}

/// Checks `pending + #R = #b + arity` on every maximal delay chain that ends
/// in a terminal inside the prefix. The root chain starts with `k0` pending
/// arguments, chains below a terminal with none. Returns the number of
/// chains checked.
pub fn justification_check(prefix: &PrefixTree, k0: usize) -> Result<usize, JustificationViolation> {
    let sigma = prefix.alphabet();
    let delay_app = sigma.lookup(DELAY_APP);
    let delay_beta = sigma.lookup(DELAY_BETA);
    let mut checked = 0;
    let mut stack = vec![(0usize, k0, 0usize, 0usize, Vec::new())];
    while let Some((i, k, apps, betas, path)) = stack.pop() {
        let n = &prefix.nodes()[i];
        let is_app = Some(n.label) == delay_app;
        if is_app || Some(n.label) == delay_beta {
            if let Some(c) = &n.children {
                let (a, b) = if is_app { (apps + 1, betas) } else { (apps, betas + 1) };
                stack.push((c[0], k, a, b, path.clone()));
            }
            continue;
        }
        let arity = sigma.arity(n.label);
        checked += 1;
        if k + apps != betas + arity {
            return Err(JustificationViolation {
                path,
                terminal: sigma.name(n.label).to_string(),
                pending: k,
                apps,
                betas,
                arity,
            });
        }
        if let Some(c) = &n.children {
            for (j, &ch) in c.iter().enumerate() {
                let mut p = path.clone();
                p.push(j);
                stack.push((ch, 0, 0, 0, p));
            }
        }
    }
    Ok(checked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::samples::*;
    use crate::scheme::{parse_scheme, to_lambda_graph};
    use crate::term::expand_prefix;
    use crate::GraphBuilder;

    fn graph(text: &str) -> RegularLambdaGraph {
        to_lambda_graph(&parse_scheme(text).unwrap()).unwrap()
    }

    #[test]
    fn application_of_unary_terminal() {
        let s = RankedAlphabet::parse_declaration("f1:1 a:0", 1).unwrap();
        let mut b = GraphBuilder::new(s.clone());
        let f = b.term(s.symbol("f1").unwrap());
        let a = b.term(s.symbol("a").unwrap());
        let r = b.app(f, a);
        let g = b.intern(r).unwrap();
        let t = cn(&g).unwrap();
        assert_eq!(expand_prefix(&t, 3).render(), "R(f1(a))");
        assert_eq!(erase_delays(&t, 10, 10).unwrap().render(), "f1(a)");
        let n = Normalizer::new(&g).unwrap();
        let HeadStep::App(next) = n.head_step(&n.initial()) else {
            panic!("expected R")
        };
        assert_eq!(next.args.len(), 1);
        let HeadStep::Terminal(sym, kids) = n.head_step(&next) else {
            panic!("expected f1")
        };
        assert_eq!((sym, kids.len()), (s.symbol("f1").unwrap(), 1));
    }

    #[test]
    fn growing_chains_prefix() {
        let t = cn(&graph(GROWING_CHAINS)).unwrap();
        let p = expand_prefix(&t, 4);
        assert_eq!(p.render(), "R(b(R(R(f(..., ...)))))");
        assert_eq!(justification_check(&p, 0), Ok(1));
        let e = erase_delays(&t, 2, 50).unwrap();
        assert_eq!(e.render(), "f(a, f(g(...), f(..., ...)))");
    }

    #[test]
    fn fixpoint_identity_only_delays() {
        let t = cn(&graph(FIXPOINT_IDENTITY)).unwrap();
        assert_eq!(expand_prefix(&t, 3).render(), "R(b(R(b(...))))");
        let e = erase_delays(&t, 0, 10_000).unwrap_err();
        assert_eq!(e.delays, 10_000);
        assert!(e.path.is_empty());
        // finitely many configurations
        assert!(t.materialized() < 10);
    }

    #[test]
    fn doubling_chains_erased() {
        let t = cn(&graph(DOUBLING_CHAINS)).unwrap();
        let e = erase_delays(&t, 3, 100).unwrap();
        assert_eq!(e.render(), "f(g(g(a)), f(g(g(...)), f(g(...), f(..., ...))))");
        assert!(justification_check(&expand_prefix(&t, 30), 0).unwrap() > 3);
    }

    #[test]
    fn justification_counts() {
        let s = RankedAlphabet::parse_declaration("f:2 f1:1 a:0 R:1 b:1", 1).unwrap();
        let ok = PrefixTree::parse(&s, "R(f1(a))").unwrap();
        assert_eq!(justification_check(&ok, 0), Ok(2));
        let bad = PrefixTree::parse(&s, "b(f(a, a))").unwrap();
        let v = justification_check(&bad, 0).unwrap_err();
        assert_eq!((v.apps, v.betas, v.arity), (0, 1, 2));
        let chain = PrefixTree::parse(&s, "R(b(R(R(f(..., ...)))))").unwrap();
        assert_eq!(justification_check(&chain, 0), Ok(1));
    }

    #[test]
    fn rejects_open_or_functional_graphs() {
        let s = RankedAlphabet::parse_declaration("g:1 a:0", 1).unwrap();
        let mut b = GraphBuilder::new(s.clone());
        let g = b.term(s.symbol("g").unwrap());
        let gr = b.intern(g).unwrap();
        assert!(matches!(cn(&gr), Err(CnError::NotGround(_))));
        let x = b.fresh_var("x", crate::SimpleType::Base);
        let vx = b.var(x);
        let gx = b.app(g, vx);
        let gr = b.intern(gx).unwrap();
        assert_eq!(cn(&gr).unwrap_err(), CnError::NotClosed);
    }
}
