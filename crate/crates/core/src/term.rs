//! Possibly infinite ranked terms delivered on demand, and finite views of them.
//!
//! A [`TermSource`] is pull-based: querying a node runs one step of its
//! generator and memoizes the result. Nodes produced from equal seeds are
//! shared, so a regular tree is stored as a finite graph and repeated
//! deepening only pays for new nodes.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::hash::Hash;
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::alphabet::{AlphabetError, RankedAlphabet, Symbol};

/// Node handle inside a [`TermSource`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

/// Read access to a (possibly partial) ranked tree.
///
/// `children` returns `None` for a node whose children were not
/// materialized (the frontier of a [`PrefixTree`]).
pub trait TreeAccess {
    type Id: Copy + Eq + Hash;
    fn alphabet(&self) -> &RankedAlphabet;
    fn root(&self) -> Self::Id;
    fn label(&self, id: Self::Id) -> Symbol;
    fn children(&self, id: Self::Id) -> Option<Vec<Self::Id>>;
}

/// One generator step: the node label and the seeds of its children.
pub trait Unfold: Send + Sync + 'static {
    type Seed: Clone + Eq + Hash + Send + Sync + 'static;
    fn step(&self, seed: &Self::Seed) -> (Symbol, Vec<Self::Seed>);
}

#[derive(Clone, Debug)]
struct Expanded {
    label: Symbol,
    children: Arc<[NodeId]>,
}

trait DynSource: Send + Sync {
    fn node(&self, id: NodeId) -> Expanded;
    fn materialized(&self) -> usize;
}

struct MemoState<S> {
    seeds: Vec<S>,
    index: HashMap<S, NodeId>,
    expanded: Vec<Option<Expanded>>,
}

struct Memo<U: Unfold> {
    unfold: U,
    arities: Vec<usize>,
    state: Mutex<MemoState<U::Seed>>,
}

impl<U: Unfold> Memo<U> {
    fn intern(st: &mut MemoState<U::Seed>, seed: U::Seed) -> NodeId {
        if let Some(&id) = st.index.get(&seed) {
            return id;
        }
        let id = NodeId(st.seeds.len() as u32);
        st.seeds.push(seed.clone());
        st.index.insert(seed, id);
        st.expanded.push(None);
        id
    }
}

impl<U: Unfold> DynSource for Memo<U> {
    fn node(&self, id: NodeId) -> Expanded {
        let mut st = self.state.lock().expect("term source poisoned");
        if let Some(e) = &st.expanded[id.0 as usize] {
            return e.clone();
        }
        let seed = st.seeds[id.0 as usize].clone();
        let (label, kids) = self.unfold.step(&seed);
        assert_eq!(
            kids.len(),
            self.arities[label.index()],
            "generator produced a node with the wrong number of children"
        );
        let children: Arc<[NodeId]> = kids
            .into_iter()
            .map(|s| Self::intern(&mut st, s))
            .collect::<Vec<_>>()
            .into();
        let e = Expanded { label, children };
        st.expanded[id.0 as usize] = Some(e.clone());
        e
    }

    fn materialized(&self) -> usize {
        self.state.lock().expect("term source poisoned").seeds.len()
    }
}

/// A lazily generated, memoizing Σ-term. Cloning shares the memo table.
#[derive(Clone)]
pub struct TermSource {
    alphabet: RankedAlphabet,
    inner: Arc<dyn DynSource>,
}

impl fmt::Debug for TermSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TermSource")
            .field("alphabet", &self.alphabet)
            .field("materialized", &self.inner.materialized())
            .finish()
    }
}

struct FnUnfold<S, F> {
    f: F,
    _seed: std::marker::PhantomData<fn() -> S>,
}

impl<S, F> Unfold for FnUnfold<S, F>
where
    S: Clone + Eq + Hash + Send + Sync + 'static,
    F: Fn(&S) -> (Symbol, Vec<S>) + Send + Sync + 'static,
{
    type Seed = S;
    fn step(&self, seed: &S) -> (Symbol, Vec<S>) {
        (self.f)(seed)
    }
}

impl TermSource {
    pub fn from_unfold<U: Unfold>(alphabet: RankedAlphabet, root: U::Seed, unfold: U) -> Self {
        let arities = alphabet.symbols().map(|s| alphabet.arity(s)).collect();
        let mut st = MemoState {
            seeds: Vec::new(),
            index: HashMap::new(),
            expanded: Vec::new(),
        };
        Memo::<U>::intern(&mut st, root);
        TermSource {
            alphabet,
            inner: Arc::new(Memo {
                unfold,
                arities,
                state: Mutex::new(st),
            }),
        }
    }

    /// Builds a source from a step closure over hashable seeds.
    pub fn unfold<S, F>(alphabet: RankedAlphabet, root: S, f: F) -> Self
    where
        S: Clone + Eq + Hash + Send + Sync + 'static,
        F: Fn(&S) -> (Symbol, Vec<S>) + Send + Sync + 'static,
    {
        Self::from_unfold(
            alphabet,
            root,
            FnUnfold {
                f,
                _seed: std::marker::PhantomData,
            },
        )
    }

    /// A finite, fully expanded term.
    pub fn finite(tree: FiniteTerm) -> Result<Self, TermError> {
        tree.check()?;
        let alphabet = tree.alphabet.clone();
        let tree = Arc::new(tree);
        Ok(Self::unfold(alphabet, 0usize, move |&i| {
            let n = &tree.nodes[i];
            (n.0, n.1.clone())
        }))
    }

    pub fn alphabet(&self) -> &RankedAlphabet {
        &self.alphabet
    }

    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    pub fn label(&self, id: NodeId) -> Symbol {
        self.inner.node(id).label
    }

    pub fn child_ids(&self, id: NodeId) -> Arc<[NodeId]> {
        self.inner.node(id).children
    }

    /// Number of distinct nodes generated so far.
    pub fn materialized(&self) -> usize {
        self.inner.materialized()
    }
}

impl TreeAccess for TermSource {
    type Id = NodeId;
    fn alphabet(&self) -> &RankedAlphabet {
        &self.alphabet
    }
    fn root(&self) -> NodeId {
        NodeId(0)
    }
    fn label(&self, id: NodeId) -> Symbol {
        TermSource::label(self, id)
    }
    fn children(&self, id: NodeId) -> Option<Vec<NodeId>> {
        Some(self.child_ids(id).to_vec())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TermError {
    #[error(transparent)]
    Alphabet(#[from] AlphabetError),
    #[error("word alphabet required, `{0}` is not unary")]
    NotUnary(String),
    #[error("the repeated part of a lasso must be non-empty")]
    EmptyLoop,
    #[error("node {node} labelled `{label}` has {found} children, arity is {arity}")]
    BadShape {
        node: usize,
        label: String,
        arity: usize,
        found: usize,
    },
    #[error("finite term is not a tree rooted at node 0")]
    NotATree,
}

/// A finite term given as a node table; node 0 is the root.
#[derive(Clone, Debug)]
pub struct FiniteTerm {
    alphabet: RankedAlphabet,
    nodes: Vec<(Symbol, Vec<usize>)>,
}

impl FiniteTerm {
    pub fn builder() -> FiniteTermBuilder {
        FiniteTermBuilder::default()
    }

    pub fn alphabet(&self) -> &RankedAlphabet {
        &self.alphabet
    }

    fn check(&self) -> Result<(), TermError> {
        for (i, (l, kids)) in self.nodes.iter().enumerate() {
            let arity = self.alphabet.arity(*l);
            if kids.len() != arity {
                return Err(TermError::BadShape {
                    node: i,
                    label: self.alphabet.name(*l).to_string(),
                    arity,
                    found: kids.len(),
                });
            }
            if kids.iter().any(|&k| k <= i || k >= self.nodes.len()) {
                return Err(TermError::NotATree);
            }
        }
        if self.nodes.is_empty() {
            return Err(TermError::NotATree);
        }
        Ok(())
    }

    /// Parses `f(a, g(a))` style text over `alphabet`.
    pub fn parse(alphabet: &RankedAlphabet, text: &str) -> Result<Self, TermError> {
        fn go(
            alphabet: &RankedAlphabet,
            s: &[u8],
            pos: &mut usize,
            out: &mut Vec<(Symbol, Vec<usize>)>,
        ) -> Result<usize, TermError> {
            while *pos < s.len() && s[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            let start = *pos;
            while *pos < s.len() && crate::parse::is_ident_char(s[*pos] as char) {
                *pos += 1;
            }
            let name = std::str::from_utf8(&s[start..*pos]).unwrap_or("");
            let sym = alphabet.symbol(name)?;
            let me = out.len();
            out.push((sym, Vec::new()));
            let mut kids = Vec::new();
            if *pos < s.len() && s[*pos] == b'(' {
                *pos += 1;
                loop {
                    kids.push(go(alphabet, s, pos, out)?);
                    while *pos < s.len() && s[*pos].is_ascii_whitespace() {
                        *pos += 1;
                    }
                    match s.get(*pos) {
                        Some(b',') => *pos += 1,
                        Some(b')') => {
                            *pos += 1;
                            break;
                        }
                        _ => return Err(TermError::NotATree),
                    }
                }
            }
            out[me].1 = kids;
            Ok(me)
        }
        let mut out = Vec::new();
        let mut pos = 0;
        go(alphabet, text.as_bytes(), &mut pos, &mut out)?;
        let t = FiniteTerm {
            alphabet: alphabet.clone(),
            nodes: out,
        };
        t.check()?;
        Ok(t)
    }
}

#[derive(Default)]
pub struct FiniteTermBuilder {
    nodes: Vec<(Symbol, Vec<usize>)>,
}

impl FiniteTermBuilder {
    /// Appends a node; children must be added afterwards with higher ids.
    pub fn node(&mut self, label: Symbol) -> usize {
        self.nodes.push((label, Vec::new()));
        self.nodes.len() - 1
    }

    pub fn set_children(&mut self, parent: usize, children: Vec<usize>) {
        self.nodes[parent].1 = children;
    }

    pub fn build(self, alphabet: &RankedAlphabet) -> Result<FiniteTerm, TermError> {
        let t = FiniteTerm {
            alphabet: alphabet.clone(),
            nodes: self.nodes,
        };
        t.check()?;
        Ok(t)
    }
}

/// A finite prefix of a term: every node at distance at most `depth`.
/// Frontier nodes at distance `depth` with positive arity keep their label
/// but have no children.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrefixTree {
    alphabet: RankedAlphabet,
    depth: usize,
    nodes: Vec<PrefixNode>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrefixNode {
    pub label: Symbol,
    pub depth: usize,
    pub children: Option<Vec<usize>>,
}

impl PrefixTree {
    pub(crate) fn from_parts(alphabet: RankedAlphabet, depth: usize, nodes: Vec<PrefixNode>) -> Self {
        PrefixTree { alphabet, depth, nodes }
    }

    /// Parses the rendered form; a node whose children are all `...` is a
    /// frontier node. The depth is that of the deepest node.
    pub fn parse(alphabet: &RankedAlphabet, text: &str) -> Result<Self, TermError> {
        fn skip_ws(s: &[u8], pos: &mut usize) {
            while *pos < s.len() && s[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
        }
        fn go(
            alphabet: &RankedAlphabet,
            s: &[u8],
            pos: &mut usize,
            depth: usize,
            out: &mut Vec<PrefixNode>,
        ) -> Result<Option<usize>, TermError> {
            skip_ws(s, pos);
            if s[*pos..].starts_with(b"...") {
                *pos += 3;
                return Ok(None);
            }
            let start = *pos;
            while *pos < s.len() && crate::parse::is_ident_char(s[*pos] as char) {
                *pos += 1;
            }
            let name = std::str::from_utf8(&s[start..*pos]).unwrap_or("");
            let label = alphabet.symbol(name)?;
            let me = out.len();
            out.push(PrefixNode {
                label,
                depth,
                children: Some(Vec::new()),
            });
            skip_ws(s, pos);
            let mut kids = Vec::new();
            if s.get(*pos) == Some(&b'(') {
                *pos += 1;
                loop {
                    kids.push(go(alphabet, s, pos, depth + 1, out)?);
                    skip_ws(s, pos);
                    match s.get(*pos) {
                        Some(b',') => *pos += 1,
                        Some(b')') => {
                            *pos += 1;
                            break;
                        }
                        _ => return Err(TermError::NotATree),
                    }
                }
            }
            let arity = alphabet.arity(label);
            if kids.len() != arity {
                return Err(TermError::BadShape {
                    node: me,
                    label: name.to_string(),
                    arity,
                    found: kids.len(),
                });
            }
            out[me].children = if kids.iter().all(Option::is_none) && arity > 0 {
                None
            } else if kids.iter().all(Option::is_some) {
                Some(kids.into_iter().flatten().collect())
            } else {
                return Err(TermError::NotATree);
            };
            Ok(Some(me))
        }
        let s = text.as_bytes();
        let mut pos = 0;
        let mut nodes = Vec::new();
        if go(alphabet, s, &mut pos, 0, &mut nodes)?.is_none() {
            return Err(TermError::NotATree);
        }
        skip_ws(s, &mut pos);
        if pos != s.len() {
            return Err(TermError::NotATree);
        }
        let depth = nodes.iter().map(|n| n.depth).max().unwrap_or(0);
        Ok(PrefixTree {
            alphabet: alphabet.clone(),
            depth,
            nodes,
        })
    }

    pub fn alphabet(&self) -> &RankedAlphabet {
        &self.alphabet
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn nodes(&self) -> &[PrefixNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Relabels every node through `f`.
    pub fn map_labels(&self, alphabet: RankedAlphabet, f: impl Fn(Symbol) -> Symbol) -> Self {
        PrefixTree {
            alphabet,
            depth: self.depth,
            nodes: self
                .nodes
                .iter()
                .map(|n| PrefixNode {
                    label: f(n.label),
                    depth: n.depth,
                    children: n.children.clone(),
                })
                .collect(),
        }
    }

    /// Parenthesized rendering; unexpanded children print as `...`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        if !self.nodes.is_empty() {
            self.render_node(0, &mut out);
        }
        out
    }

    fn render_node(&self, i: usize, out: &mut String) {
        let n = &self.nodes[i];
        out.push_str(self.alphabet.name(n.label));
        let arity = self.alphabet.arity(n.label);
        if arity == 0 {
            return;
        }
        out.push('(');
        match &n.children {
            Some(kids) => {
                for (k, &c) in kids.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    self.render_node(c, out);
                }
            }
            None => {
                for k in 0..arity {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    out.push_str("...");
                }
            }
        }
        out.push(')');
    }
}

impl fmt::Display for PrefixTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl TreeAccess for PrefixTree {
    type Id = usize;
    fn alphabet(&self) -> &RankedAlphabet {
        &self.alphabet
    }
    fn root(&self) -> usize {
        0
    }
    fn label(&self, id: usize) -> Symbol {
        self.nodes[id].label
    }
    fn children(&self, id: usize) -> Option<Vec<usize>> {
        self.nodes[id].children.clone()
    }
}

/// Materializes every node at distance at most `depth`.
pub fn expand_prefix<T: TreeAccess>(source: &T, depth: usize) -> PrefixTree {
    let mut nodes = Vec::new();
    fn go<T: TreeAccess>(t: &T, id: T::Id, d: usize, max: usize, nodes: &mut Vec<PrefixNode>) -> usize {
        let label = t.label(id);
        let me = nodes.len();
        nodes.push(PrefixNode {
            label,
            depth: d,
            children: None,
        });
        let arity = t.alphabet().arity(label);
        if arity == 0 {
            nodes[me].children = Some(Vec::new());
        } else if d < max {
            if let Some(kids) = t.children(id) {
                let ids = kids.into_iter().map(|k| go(t, k, d + 1, max, nodes)).collect();
                nodes[me].children = Some(ids);
            }
        }
        me
    }
    go(source, source.root(), 0, depth, &mut nodes);
    PrefixTree {
        alphabet: source.alphabet().clone(),
        depth,
        nodes,
    }
}

/// `a ~k b`: both trees coincide on all nodes at distance below `k`.
///
/// Nodes that are not materialized (prefix frontier) compare by label only.
pub fn similar_up_to<A, B>(a: &A, b: &B, k: usize) -> bool
where
    A: TreeAccess,
    B: TreeAccess,
{
    let mut memo = HashMap::new();
    fn go<A: TreeAccess, B: TreeAccess>(
        a: &A,
        b: &B,
        x: A::Id,
        y: B::Id,
        k: usize,
        memo: &mut HashMap<(A::Id, B::Id), usize>,
    ) -> bool {
        if k == 0 {
            return true;
        }
        // memo holds the largest k already confirmed for the pair
        if memo.get(&(x, y)).is_some_and(|&done| done >= k) {
            return true;
        }
        let (lx, ly) = (a.label(x), b.label(y));
        if a.alphabet().name(lx) != b.alphabet().name(ly) {
            return false;
        }
        let ok = match (a.children(x), b.children(y)) {
            (Some(cx), Some(cy)) => {
                cx.len() == cy.len() && cx.into_iter().zip(cy).all(|(p, q)| go(a, b, p, q, k - 1, memo))
            }
            _ => true,
        };
        if ok {
            memo.insert((x, y), k);
        }
        ok
    }
    go(a, b, a.root(), b.root(), k, &mut memo)
}

/// An arity-preserving relabelling between alphabets.
#[derive(Clone, Debug)]
pub struct Projection {
    source: RankedAlphabet,
    target: RankedAlphabet,
    map: Vec<Symbol>,
}

impl Projection {
    /// `pairs` maps source names to target names; unmapped source symbols map
    /// to the target symbol of the same name.
    pub fn new(
        source: &RankedAlphabet,
        target: &RankedAlphabet,
        pairs: &[(&str, &str)],
    ) -> Result<Self, AlphabetError> {
        let mut map = Vec::with_capacity(source.len());
        for s in source.symbols() {
            let name = source.name(s);
            let img = pairs.iter().find(|p| p.0 == name).map(|p| p.1).unwrap_or(name);
            let t = target.symbol(img)?;
            if target.arity(t) != source.arity(s) {
                return Err(AlphabetError::ArityMismatch {
                    name: img.to_string(),
                    expected: source.arity(s),
                    found: target.arity(t),
                });
            }
            map.push(t);
        }
        for p in pairs {
            source.symbol(p.0)?;
        }
        Ok(Projection {
            source: source.clone(),
            target: target.clone(),
            map,
        })
    }

    pub fn identity(alphabet: &RankedAlphabet) -> Self {
        Projection {
            source: alphabet.clone(),
            target: alphabet.clone(),
            map: alphabet.symbols().collect(),
        }
    }

    pub fn source(&self) -> &RankedAlphabet {
        &self.source
    }

    pub fn target(&self) -> &RankedAlphabet {
        &self.target
    }

    pub fn apply(&self, s: Symbol) -> Symbol {
        self.map[s.index()]
    }
}

/// Relabels `source` through `pi`, keeping the shape.
pub fn project_term(pi: &Projection, source: &TermSource) -> Result<TermSource, AlphabetError> {
    if pi.source() != source.alphabet() {
        return Err(AlphabetError::Mismatch);
    }
    let inner = source.clone();
    let pi2 = pi.clone();
    Ok(TermSource::unfold(pi.target().clone(), source.root(), move |&id| {
        let l = inner.label(id);
        (pi2.apply(l), inner.child_ids(id).to_vec())
    }))
}

/// The ω-word `u v v v ...` over a word alphabet.
pub fn lasso_word(alphabet: &RankedAlphabet, u: &[Symbol], v: &[Symbol]) -> Result<TermSource, TermError> {
    if v.is_empty() {
        return Err(TermError::EmptyLoop);
    }
    for s in u.iter().chain(v) {
        if alphabet.arity(*s) != 1 {
            return Err(TermError::NotUnary(alphabet.name(*s).to_string()));
        }
    }
    let word: Vec<Symbol> = u.iter().chain(v).copied().collect();
    let ulen = u.len();
    let total = word.len();
    Ok(TermSource::unfold(alphabet.clone(), 0usize, move |&i| {
        let next = if i + 1 == total { ulen } else { i + 1 };
        (word[i], vec![next])
    }))
}

/// Convenience: lasso from symbol names.
pub fn lasso_named(alphabet: &RankedAlphabet, u: &[&str], v: &[&str]) -> Result<TermSource, TermError> {
    let conv = |xs: &[&str]| -> Result<Vec<Symbol>, TermError> { xs.iter().map(|n| Ok(alphabet.symbol(n)?)).collect() };
    lasso_word(alphabet, &conv(u)?, &conv(v)?)
}

/// Writes the labels of a unary chain prefix, for diagnostics.
pub fn word_prefix(t: &TermSource, len: usize) -> String {
    let mut out = String::new();
    let mut id = t.root();
    for i in 0..len {
        let l = t.label(id);
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{}", t.alphabet().name(l));
        match t.child_ids(id).first() {
            Some(&c) => id = c,
            None => break,
        }
    }
    out
}

/// Small fixed trees over `f:2 g:1 a:0`, used by tests and benchmarks.
pub mod samples {
    use super::*;

    pub fn sigma() -> RankedAlphabet {
        RankedAlphabet::parse_declaration("f:2 g:1 a:0", 1).expect("static declaration")
    }

    /// f(a, f(g a, f(g g a, ...)))
    pub fn growing_chains() -> TermSource {
        let s = sigma();
        let (f, g, a) = (s.symbol("f").unwrap(), s.symbol("g").unwrap(), s.symbol("a").unwrap());
        #[derive(Clone, PartialEq, Eq, Hash)]
        enum Seed {
            Spine(u32),
            Chain(u32),
        }
        TermSource::unfold(s, Seed::Spine(0), move |seed| match *seed {
            Seed::Spine(k) => (f, vec![Seed::Chain(k), Seed::Spine(k + 1)]),
            Seed::Chain(0) => (a, vec![]),
            Seed::Chain(j) => (g, vec![Seed::Chain(j - 1)]),
        })
    }

    /// f(g^2 a, f(g^4 a, f(g^8 a, ...)))
    pub fn doubling_chains() -> TermSource {
        let s = sigma();
        let (f, g, a) = (s.symbol("f").unwrap(), s.symbol("g").unwrap(), s.symbol("a").unwrap());
        #[derive(Clone, PartialEq, Eq, Hash)]
        enum Seed {
            Spine(u32),
            Chain(u64),
        }
        TermSource::unfold(s, Seed::Spine(1), move |seed| match *seed {
            Seed::Spine(k) => (f, vec![Seed::Chain(1u64 << k.min(63)), Seed::Spine(k + 1)]),
            Seed::Chain(0) => (a, vec![]),
            Seed::Chain(j) => (g, vec![Seed::Chain(j - 1)]),
        })
    }
}
