//! Generators and independent oracles shared by the integration tests.
//!
//! The oracles deliberately use different algorithms from the library:
//! bottom-up state sets instead of top-down run search, literal
//! substitution instead of closures, explicit lasso graphs instead of
//! subset iteration.

#![allow(dead_code)]

use std::rc::Rc;

use hors_core::alphabet::DELAY_BETA;
use hors_core::graph::GraphBuilder;
use hors_core::term::{FiniteTerm, TermSource};
use hors_core::{
    parse_scheme, to_lambda_graph, NodeKind, NodeRef, RankedAlphabet, RegularLambdaGraph, SimpleType, StateId, Symbol,
    TreeAccess, TrivialAutomaton, VarId,
};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- schemes

/// Terminal sets for generated schemes. `b` is avoided: it names a delay.
const TERMINAL_SETS: [&str; 4] = ["f:2 g:1 a:0", "f:2 a:0 c:0", "g:1 h:1 a:0", "f:2 g:1 a:0 c:0"];

#[derive(Clone, Copy, Debug)]
pub struct SchemeShape {
    pub max_rules: usize,
    pub max_arity: usize,
    pub body_depth: usize,
}

impl Default for SchemeShape {
    fn default() -> Self {
        SchemeShape {
            max_rules: 4,
            max_arity: 2,
            body_depth: 3,
        }
    }
}

struct Terminals {
    names: Vec<(String, usize)>,
}

impl Terminals {
    fn nullary(&self) -> Vec<&str> {
        self.names.iter().filter(|t| t.1 == 0).map(|t| t.0.as_str()).collect()
    }
    fn proper(&self) -> Vec<(&str, usize)> {
        self.names
            .iter()
            .filter(|t| t.1 > 0)
            .map(|t| (t.0.as_str(), t.1))
            .collect()
    }
}

/// A random order-1 scheme whose every rule body is headed by a terminal
/// or by a later nonterminal, so head reduction always reaches a terminal.
pub fn random_productive_scheme(rng: &mut ChaCha8Rng, shape: SchemeShape) -> String {
    let decl = TERMINAL_SETS[rng.gen_range(0..TERMINAL_SETS.len())];
    let terms = Terminals {
        names: decl
            .split_whitespace()
            .map(|d| {
                let (n, a) = d.split_once(':').unwrap();
                (n.to_string(), a.parse().unwrap())
            })
            .collect(),
    };
    let names = ["S", "F", "G", "H", "K", "L"];
    let count = rng.gen_range(1..=shape.max_rules.min(names.len()));
    let arities: Vec<usize> = (0..count)
        .map(|i| if i == 0 { 0 } else { rng.gen_range(0..=shape.max_arity) })
        .collect();
    let mut out = format!("%terminals {decl}\n%nonterminals");
    for i in 0..count {
        let ty = vec!["o"; arities[i] + 1].join("->");
        out.push_str(&format!(" {}:{ty}", names[i]));
    }
    out.push_str("\n%start S\n");
    let params = ["x", "y", "z"];
    for i in 0..count {
        let ps = &params[..arities[i]];
        let g = Gen {
            terms: &terms,
            names: &names[..count],
            arities: &arities,
            params: ps,
        };
        let body = if i + 1 < count && rng.gen_bool(0.35) {
            let j = rng.gen_range(i + 1..count);
            g.apply(rng, names[j], arities[j], shape.body_depth)
        } else {
            let (f, ar) = *terms.proper().choose(rng).unwrap();
            g.apply(rng, f, ar, shape.body_depth)
        };
        let lhs: Vec<&str> = std::iter::once(names[i]).chain(ps.iter().copied()).collect();
        out.push_str(&format!("{} = {body}.\n", lhs.join(" ")));
    }
    out
}

struct Gen<'a> {
    terms: &'a Terminals,
    names: &'a [&'a str],
    arities: &'a [usize],
    params: &'a [&'a str],
}

impl Gen<'_> {
    fn apply(&self, rng: &mut ChaCha8Rng, head: &str, arity: usize, depth: usize) -> String {
        let mut s = head.to_string();
        for _ in 0..arity {
            let e = self.expr(rng, depth.saturating_sub(1));
            if e.contains(' ') {
                s.push_str(&format!(" ({e})"));
            } else {
                s.push(' ');
                s.push_str(&e);
            }
        }
        s
    }

    fn leaf(&self, rng: &mut ChaCha8Rng) -> String {
        let nullary = self.terms.nullary();
        if !self.params.is_empty() && rng.gen_bool(0.6) {
            self.params.choose(rng).unwrap().to_string()
        } else {
            nullary.choose(rng).unwrap().to_string()
        }
    }

    fn expr(&self, rng: &mut ChaCha8Rng, depth: usize) -> String {
        if depth == 0 {
            return self.leaf(rng);
        }
        match rng.gen_range(0..10) {
            0..=2 => self.leaf(rng),
            3..=5 => {
                let (f, ar) = *self.terms.proper().choose(rng).unwrap();
                self.apply(rng, f, ar, depth)
            }
            _ => {
                let j = rng.gen_range(0..self.names.len());
                self.apply(rng, self.names[j], self.arities[j], depth)
            }
        }
    }
}

pub fn graph_of(text: &str) -> RegularLambdaGraph {
    let s = parse_scheme(text).unwrap_or_else(|e| panic!("{e}\n{text}"));
    to_lambda_graph(&s).unwrap_or_else(|e| panic!("{e:?}\n{text}"))
}

// -------------------------------------------------------------- automata

/// A random automaton: each tuple is a transition with probability `p`.
pub fn random_automaton(rng: &mut ChaCha8Rng, alphabet: &RankedAlphabet, states: usize, p: f64) -> TrivialAutomaton {
    let names: Vec<String> = (0..states).map(|i| format!("p{i}")).collect();
    let mut init: Vec<&str> = names.iter().filter(|_| rng.gen_bool(0.5)).map(|s| s.as_str()).collect();
    if init.is_empty() {
        init.push(&names[0]);
    }
    let mut text = format!(
        "%terminals {}\n%states {}\n%initial {}\n",
        alphabet.declaration(),
        names.join(" "),
        init.join(" ")
    );
    for q in &names {
        for s in alphabet.symbols() {
            let ar = alphabet.arity(s);
            for t in tuples(states, ar) {
                if rng.gen_bool(p) {
                    let kids: Vec<&str> = t.iter().map(|&i| names[i].as_str()).collect();
                    text.push_str(&format!("{q} {} -> ({})\n", alphabet.name(s), kids.join(",")));
                }
            }
        }
    }
    TrivialAutomaton::parse(&text).unwrap()
}

pub fn tuples(states: usize, arity: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..arity {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..states).map(move |q| {
                    let mut t = t.clone();
                    t.push(q);
                    t
                })
            })
            .collect();
    }
    out
}

/// A random alphabet of at most three symbols, arity at most two, with a
/// nullary symbol.
pub fn random_alphabet(rng: &mut ChaCha8Rng) -> RankedAlphabet {
    let mut decl = vec!["a:0".to_string()];
    let extra = rng.gen_range(0..=2);
    for (i, name) in ["f", "g"].iter().take(extra).enumerate() {
        let ar = if i == 0 {
            rng.gen_range(1..=2)
        } else {
            rng.gen_range(0..=2)
        };
        decl.push(format!("{name}:{ar}"));
    }
    RankedAlphabet::parse_declaration(&decl.join(" "), 1).unwrap()
}

// ----------------------------------------------------------------- trees

/// An explicit finite tree, the oracles' view of a term.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tree {
    pub label: Symbol,
    pub kids: Vec<Tree>,
}

impl Tree {
    pub fn render(&self, alphabet: &RankedAlphabet) -> String {
        let name = alphabet.name(self.label);
        if self.kids.is_empty() {
            return name.to_string();
        }
        let kids: Vec<String> = self.kids.iter().map(|k| k.render(alphabet)).collect();
        format!("{name}({})", kids.join(", "))
    }

    pub fn source(&self, alphabet: &RankedAlphabet) -> TermSource {
        TermSource::finite(FiniteTerm::parse(alphabet, &self.render(alphabet)).unwrap()).unwrap()
    }

    pub fn size(&self) -> usize {
        1 + self.kids.iter().map(Tree::size).sum::<usize>()
    }

    pub fn subtrees(&self) -> Vec<&Tree> {
        let mut out = vec![self];
        for k in &self.kids {
            out.extend(k.subtrees());
        }
        out
    }
}

/// A random fully expanded tree of depth at most `depth`; leaves are
/// nullary.
pub fn random_tree(rng: &mut ChaCha8Rng, alphabet: &RankedAlphabet, depth: usize) -> Tree {
    let syms: Vec<Symbol> = alphabet.symbols().collect();
    let nullary: Vec<Symbol> = syms.iter().copied().filter(|&s| alphabet.arity(s) == 0).collect();
    let s = if depth == 0 || rng.gen_bool(0.3) {
        *nullary.choose(rng).unwrap()
    } else {
        *syms.choose(rng).unwrap()
    };
    Tree {
        label: s,
        kids: (0..alphabet.arity(s))
            .map(|_| random_tree(rng, alphabet, depth.saturating_sub(1)))
            .collect(),
    }
}

/// States from which the whole finite tree has a complete run, computed
/// bottom-up.
pub fn accepting_states(a: &TrivialAutomaton, t: &Tree) -> Vec<bool> {
    let kids: Vec<Vec<bool>> = t.kids.iter().map(|k| accepting_states(a, k)).collect();
    a.states()
        .map(|q| {
            a.delta(q, t.label)
                .iter()
                .any(|tuple| tuple.iter().zip(&kids).all(|(s, k)| k[s.index()]))
        })
        .collect()
}

pub fn accepts_tree(a: &TrivialAutomaton, t: &Tree) -> bool {
    let acc = accepting_states(a, t);
    a.initial().iter().any(|q| acc[q.index()])
}

/// Literal enumeration of all state labelings; only for small trees.
pub fn accepts_by_labelings(a: &TrivialAutomaton, t: &Tree) -> bool {
    let nodes = t.subtrees();
    let n = nodes.len();
    let k = a.state_count();
    assert!(k.pow(n as u32) <= 1 << 16, "tree too large for enumeration");
    // child indices in the preorder numbering
    let mut kid_index = Vec::with_capacity(n);
    fn number(t: &Tree, next: &mut usize, out: &mut Vec<Vec<usize>>) -> usize {
        let me = *next;
        *next += 1;
        out.push(Vec::new());
        let ks: Vec<usize> = t.kids.iter().map(|c| number(c, next, out)).collect();
        out[me] = ks;
        me
    }
    number(t, &mut 0, &mut kid_index);
    let mut label = vec![0usize; n];
    loop {
        let ok = a.is_initial(StateId(label[0] as u32))
            && (0..n).all(|i| {
                let want: Vec<StateId> = kid_index[i].iter().map(|&c| StateId(label[c] as u32)).collect();
                a.delta(StateId(label[i] as u32), nodes[i].label).contains(&want)
            });
        if ok {
            return true;
        }
        let mut i = 0;
        loop {
            if i == n {
                return false;
            }
            label[i] += 1;
            if label[i] < k {
                break;
            }
            label[i] = 0;
            i += 1;
        }
    }
}

// ----------------------------------------------------------------- words

/// Decides `u v^ω` acceptance on the explicit lasso graph: a run exists iff
/// some reachable configuration lies on a cycle.
pub fn lasso_oracle(a: &TrivialAutomaton, u: &[Symbol], v: &[Symbol]) -> bool {
    let len = u.len() + v.len();
    let letter = |i: usize| if i < u.len() { u[i] } else { v[i - u.len()] };
    let next_pos = |i: usize| if i + 1 == len { u.len() } else { i + 1 };
    let k = a.state_count();
    let id = |q: usize, i: usize| q * len + i;
    let succ = |c: usize| -> Vec<usize> {
        let (q, i) = (c / len, c % len);
        a.delta(StateId(q as u32), letter(i))
            .iter()
            .map(|t| id(t[0].index(), next_pos(i)))
            .collect()
    };
    // configurations with an infinite path: greatest fixed point
    let mut alive = vec![true; k * len];
    loop {
        let mut changed = false;
        for c in 0..k * len {
            if alive[c] && !succ(c).iter().any(|&d| alive[d]) {
                alive[c] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    a.initial().iter().any(|q| alive[id(q.index(), 0)])
}

// ---------------------------------------------------- head reduction

/// Lambda terms over a graph, unfolded on demand. Graph nodes without the
/// substituted variable free are kept shared.
#[derive(Clone, Debug)]
pub enum Lam {
    Node(NodeRef),
    App(Rc<Lam>, Rc<Lam>),
    Abs(VarId, Rc<Lam>),
    Var(VarId),
    Term(Symbol),
}

fn unfold(g: &RegularLambdaGraph, n: NodeRef) -> Lam {
    match g.node(n).kind {
        NodeKind::App(f, a) => Lam::App(Rc::new(Lam::Node(f)), Rc::new(Lam::Node(a))),
        NodeKind::Abs(x, b) => Lam::Abs(x, Rc::new(Lam::Node(b))),
        NodeKind::Var(x) => Lam::Var(x),
        NodeKind::Term(f) => Lam::Term(f),
    }
}

/// `t[s/x]` for closed `s`.
pub fn subst(g: &RegularLambdaGraph, t: &Rc<Lam>, x: VarId, s: &Rc<Lam>) -> Rc<Lam> {
    match &**t {
        Lam::Node(n) => {
            if g.free_variables(*n).contains(&x) {
                subst(g, &Rc::new(unfold(g, *n)), x, s)
            } else {
                t.clone()
            }
        }
        Lam::App(f, a) => Rc::new(Lam::App(subst(g, f, x, s), subst(g, a, x, s))),
        Lam::Abs(y, _) if *y == x => t.clone(),
        Lam::Abs(y, b) => Rc::new(Lam::Abs(*y, subst(g, b, x, s))),
        Lam::Var(y) if *y == x => s.clone(),
        Lam::Var(_) | Lam::Term(_) => t.clone(),
    }
}

/// Result of head-reducing a closed ground term to a terminal head.
pub struct HeadNormal {
    /// `R` per application unwound, `b` per beta step, in order.
    pub delays: String,
    pub head: Symbol,
    pub args: Vec<Rc<Lam>>,
}

/// Head reduction by literal substitution; `None` after `fuel` steps.
pub fn head_reduce(g: &RegularLambdaGraph, t: Rc<Lam>, fuel: usize) -> Option<HeadNormal> {
    let mut head = t;
    // innermost argument last
    let mut stack: Vec<Rc<Lam>> = Vec::new();
    let mut delays = String::new();
    for _ in 0..fuel {
        let next = match &*head {
            Lam::Node(n) => Rc::new(unfold(g, *n)),
            Lam::App(f, a) => {
                delays.push('R');
                stack.push(a.clone());
                f.clone()
            }
            Lam::Abs(x, b) => {
                delays.push('b');
                let arg = stack.pop().expect("ground type: abstraction has an argument");
                subst(g, b, *x, &arg)
            }
            Lam::Term(f) => {
                stack.reverse();
                return Some(HeadNormal {
                    delays,
                    head: *f,
                    args: stack,
                });
            }
            Lam::Var(_) => panic!("closed term reached a free variable"),
        };
        head = next;
    }
    None
}

/// Walks `source` (a normal form with delays) against the oracle for
/// `levels` terminal levels. Returns the number of terminals compared, or
/// a description of the first disagreement.
pub fn compare_head_reduction(
    g: &RegularLambdaGraph,
    source: &TermSource,
    levels: usize,
    fuel: usize,
) -> Result<usize, String> {
    let sigma = source.alphabet().clone();
    let mut compared = 0;
    let mut work = vec![(source.root(), Rc::new(Lam::Node(g.root())), 0usize)];
    while let Some((mut id, term, level)) = work.pop() {
        if level == levels {
            continue;
        }
        let hn = head_reduce(g, term, fuel).ok_or("oracle ran out of fuel")?;
        let mut seen = String::new();
        loop {
            let name = sigma.name(source.label(id));
            if name == "R" || name == DELAY_BETA {
                seen.push_str(name);
                id = source.children(id).unwrap()[0];
                if seen.len() > fuel {
                    return Err("normal form ran out of fuel".into());
                }
            } else {
                if name != g.alphabet().name(hn.head) {
                    return Err(format!(
                        "terminal {name} where the oracle has {}",
                        g.alphabet().name(hn.head)
                    ));
                }
                break;
            }
        }
        if seen != hn.delays {
            return Err(format!("delays {seen} where the oracle has {}", hn.delays));
        }
        compared += 1;
        let kids = source.children(id).unwrap();
        for (k, a) in kids.into_iter().zip(hn.args) {
            work.push((k, a, level + 1));
        }
    }
    Ok(compared)
}

// ---------------------------------------------------------------- grafts

/// Two graphs whose lambda trees agree at distance below `k`: the tree of
/// `g` is copied down to depth `k`, where one copy keeps the original
/// subgraphs and the other gets closed constants of the same type.
pub fn graft_pair(g: &RegularLambdaGraph, k: usize, rng: &mut ChaCha8Rng) -> (RegularLambdaGraph, RegularLambdaGraph) {
    let alphabet = g.alphabet().clone();
    let nullary: Vec<Symbol> = alphabet.symbols().filter(|&s| alphabet.arity(s) == 0).collect();
    let make = |replace: bool, rng: &mut ChaCha8Rng| {
        let mut b = GraphBuilder::new(alphabet.clone());
        for v in 0..g.var_count() {
            let info = g.var(VarId(v as u32));
            b.fresh_var(info.name.clone(), info.ty.clone());
        }
        for n in g.nodes() {
            let r = b.reserve(g.node(n).ty.clone());
            assert_eq!(r, n);
        }
        for n in g.nodes() {
            b.define(n, g.node(n).kind).unwrap();
        }
        let root = copy(g, &mut b, g.root(), 0, k, replace, &nullary, rng);
        b.intern(root).unwrap()
    };
    let seed: u64 = rng.gen();
    let keep = make(false, &mut self::rng(seed));
    let graft = make(true, &mut self::rng(seed));
    (keep, graft)
}

#[allow(clippy::too_many_arguments)]
fn copy(
    g: &RegularLambdaGraph,
    b: &mut GraphBuilder,
    n: NodeRef,
    d: usize,
    k: usize,
    replace: bool,
    nullary: &[Symbol],
    rng: &mut ChaCha8Rng,
) -> NodeRef {
    if d == k {
        return if replace {
            constant(b, &g.node(n).ty, nullary, rng)
        } else {
            n
        };
    }
    match g.node(n).kind {
        NodeKind::App(f, a) => {
            let f = copy(g, b, f, d + 1, k, replace, nullary, rng);
            let a = copy(g, b, a, d + 1, k, replace, nullary, rng);
            b.app(f, a)
        }
        NodeKind::Abs(x, body) => {
            let body = copy(g, b, body, d + 1, k, replace, nullary, rng);
            b.abs(x, body)
        }
        NodeKind::Var(x) => b.var(x),
        NodeKind::Term(f) => b.term(f),
    }
}

/// `λy1 … ym. c` for a random nullary `c`.
fn constant(b: &mut GraphBuilder, ty: &SimpleType, nullary: &[Symbol], rng: &mut ChaCha8Rng) -> NodeRef {
    match ty.split() {
        None => b.term(*nullary.choose(rng).unwrap()),
        Some((rho, sigma)) => {
            let y = b.fresh_var("y", rho.clone());
            let body = constant(b, sigma, nullary, rng);
            b.abs(y, body)
        }
    }
}
