//! Regular infinitary lambda trees as finite cyclic graphs with maximal
//! sharing.

use std::collections::{HashMap, VecDeque};
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::alphabet::{RankedAlphabet, Symbol};
use crate::types::SimpleType;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeRef(pub u32);

impl NodeRef {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A bound variable. Identity is the id; the name is only for display.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarInfo {
    pub name: String,
    pub ty: SimpleType,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeKind {
    App(NodeRef, NodeRef),
    Abs(VarId, NodeRef),
    Var(VarId),
    Term(Symbol),
}

impl NodeKind {
    pub fn children(&self) -> Vec<NodeRef> {
        match *self {
            NodeKind::App(f, a) => vec![f, a],
            NodeKind::Abs(_, b) => vec![b],
            NodeKind::Var(_) | NodeKind::Term(_) => Vec::new(),
        }
    }

    fn map(&self, f: impl Fn(NodeRef) -> NodeRef) -> NodeKind {
        match *self {
            NodeKind::App(x, y) => NodeKind::App(f(x), f(y)),
            NodeKind::Abs(v, b) => NodeKind::Abs(v, f(b)),
            k => k,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub kind: NodeKind,
    pub ty: SimpleType,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("node {0} was reserved but never defined")]
    Dangling(u32),
    #[error("node {0} defined twice")]
    Redefined(u32),
    #[error("node {0} does not exist")]
    NoSuchNode(u32),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("node {node}: {message}")]
pub struct TypeError {
    pub node: NodeRef,
    pub message: String,
}

/// Builds a graph node by node. Cycles are made with [`reserve`] and
/// [`define`].
///
/// [`reserve`]: GraphBuilder::reserve
/// [`define`]: GraphBuilder::define
#[derive(Clone, Debug)]
pub struct GraphBuilder {
    alphabet: RankedAlphabet,
    vars: Vec<VarInfo>,
    nodes: Vec<(Option<NodeKind>, SimpleType)>,
}

impl GraphBuilder {
    pub fn new(alphabet: RankedAlphabet) -> Self {
        GraphBuilder {
            alphabet,
            vars: Vec::new(),
            nodes: Vec::new(),
        }
    }

    pub fn alphabet(&self) -> &RankedAlphabet {
        &self.alphabet
    }

    pub fn fresh_var(&mut self, name: impl Into<String>, ty: SimpleType) -> VarId {
        self.vars.push(VarInfo { name: name.into(), ty });
        VarId(self.vars.len() as u32 - 1)
    }

    pub fn var_info(&self, v: VarId) -> &VarInfo {
        &self.vars[v.index()]
    }

    pub fn type_of(&self, n: NodeRef) -> &SimpleType {
        &self.nodes[n.index()].1
    }

    fn push(&mut self, kind: NodeKind, ty: SimpleType) -> NodeRef {
        self.nodes.push((Some(kind), ty));
        NodeRef(self.nodes.len() as u32 - 1)
    }

    /// A placeholder of the given type, to be defined later.
    pub fn reserve(&mut self, ty: SimpleType) -> NodeRef {
        self.nodes.push((None, ty));
        NodeRef(self.nodes.len() as u32 - 1)
    }

    pub fn define(&mut self, at: NodeRef, kind: NodeKind) -> Result<(), GraphError> {
        match self.nodes.get_mut(at.index()) {
            None => Err(GraphError::NoSuchNode(at.0)),
            Some((Some(_), _)) => Err(GraphError::Redefined(at.0)),
            Some(slot) => {
                slot.0 = Some(kind);
                Ok(())
            }
        }
    }

    /// Makes `at` an alias of the already built node `target`.
    pub fn define_as(&mut self, at: NodeRef, target: NodeRef) -> Result<(), GraphError> {
        let kind = self
            .nodes
            .get(target.index())
            .and_then(|n| n.0)
            .ok_or(GraphError::Dangling(target.0))?;
        self.define(at, kind)
    }

    /// Application; a non-arrow function position yields a base-typed node
    /// that [`check_types`] rejects.
    pub fn app(&mut self, f: NodeRef, a: NodeRef) -> NodeRef {
        let ty = self
            .type_of(f)
            .split()
            .map(|(_, r)| r.clone())
            .unwrap_or(SimpleType::Base);
        self.push(NodeKind::App(f, a), ty)
    }

    pub fn apps(&mut self, f: NodeRef, args: &[NodeRef]) -> NodeRef {
        args.iter().fold(f, |acc, &a| self.app(acc, a))
    }

    pub fn abs(&mut self, x: VarId, body: NodeRef) -> NodeRef {
        let ty = SimpleType::arrow(self.vars[x.index()].ty.clone(), self.type_of(body).clone());
        self.push(NodeKind::Abs(x, body), ty)
    }

    pub fn var(&mut self, x: VarId) -> NodeRef {
        let ty = self.vars[x.index()].ty.clone();
        self.push(NodeKind::Var(x), ty)
    }

    pub fn term(&mut self, f: Symbol) -> NodeRef {
        let ty = SimpleType::first_order(self.alphabet.arity(f));
        self.push(NodeKind::Term(f), ty)
    }

    /// A node with an explicitly given type, checked later.
    pub fn node_with_type(&mut self, kind: NodeKind, ty: SimpleType) -> NodeRef {
        self.push(kind, ty)
    }

    /// Quotients by bisimilarity, drops unreachable nodes and renumbers in
    /// breadth-first order from `root`.
    pub fn intern(&self, root: NodeRef) -> Result<RegularLambdaGraph, GraphError> {
        let n = self.nodes.len();
        if root.index() >= n {
            return Err(GraphError::NoSuchNode(root.0));
        }
        let mut kinds = Vec::with_capacity(n);
        for (i, (k, _)) in self.nodes.iter().enumerate() {
            let k = k.ok_or(GraphError::Dangling(i as u32))?;
            for c in k.children() {
                if c.index() >= n {
                    return Err(GraphError::NoSuchNode(c.0));
                }
            }
            kinds.push(k);
        }
        // Partition refinement: start from local labels, split by the
        // classes of the children until stable.
        #[derive(PartialEq, Eq, Hash)]
        enum Label<'a> {
            App,
            Abs(VarId),
            Var(VarId),
            Term(Symbol),
            Typed(&'a SimpleType),
        }
        let mut class = vec![0usize; n];
        {
            let mut ids = HashMap::new();
            for i in 0..n {
                let l = match kinds[i] {
                    NodeKind::App(..) => Label::App,
                    NodeKind::Abs(x, _) => Label::Abs(x),
                    NodeKind::Var(x) => Label::Var(x),
                    NodeKind::Term(f) => Label::Term(f),
                };
                let key = (l, Label::Typed(&self.nodes[i].1));
                let next = ids.len();
                class[i] = *ids.entry(key).or_insert(next);
            }
        }
        loop {
            let mut ids = HashMap::new();
            let mut next_class = vec![0usize; n];
            for i in 0..n {
                let sig = (
                    class[i],
                    kinds[i].children().iter().map(|c| class[c.index()]).collect::<Vec<_>>(),
                );
                let next = ids.len();
                next_class[i] = *ids.entry(sig).or_insert(next);
            }
            let stable = ids.len() == class.iter().copied().max().map_or(0, |m| m + 1);
            class = next_class;
            if stable {
                break;
            }
        }
        // BFS renumbering over class representatives.
        let mut rep: HashMap<usize, usize> = HashMap::new();
        for (i, &c) in class.iter().enumerate() {
            rep.entry(c).or_insert(i);
        }
        let mut order: HashMap<usize, u32> = HashMap::new();
        let mut queue = VecDeque::new();
        let mut reps = Vec::new();
        order.insert(class[root.index()], 0);
        queue.push_back(class[root.index()]);
        while let Some(c) = queue.pop_front() {
            let r = rep[&c];
            reps.push(r);
            for ch in kinds[r].children() {
                let cc = class[ch.index()];
                if !order.contains_key(&cc) {
                    order.insert(cc, order.len() as u32);
                    queue.push_back(cc);
                }
            }
        }
        let nodes: Vec<Node> = reps
            .iter()
            .map(|&r| Node {
                kind: kinds[r].map(|c| NodeRef(order[&class[c.index()]])),
                ty: self.nodes[r].1.clone(),
            })
            .collect();
        Ok(RegularLambdaGraph::new(
            self.alphabet.clone(),
            self.vars.clone(),
            nodes,
            NodeRef(0),
        ))
    }
}

/// A finite, possibly cyclic, typed lambda graph over terminals Σ′.
#[derive(Clone, PartialEq, Eq)]
pub struct RegularLambdaGraph {
    alphabet: RankedAlphabet,
    vars: Vec<VarInfo>,
    nodes: Vec<Node>,
    root: NodeRef,
    free: Vec<Vec<VarId>>,
}

impl fmt::Debug for RegularLambdaGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dump())
    }
}

impl RegularLambdaGraph {
    fn new(alphabet: RankedAlphabet, vars: Vec<VarInfo>, nodes: Vec<Node>, root: NodeRef) -> Self {
        let free = compute_free(&nodes);
        RegularLambdaGraph {
            alphabet,
            vars,
            nodes,
            root,
            free,
        }
    }

    pub fn alphabet(&self) -> &RankedAlphabet {
        &self.alphabet
    }

    pub fn root(&self) -> NodeRef {
        self.root
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, n: NodeRef) -> &Node {
        &self.nodes[n.index()]
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeRef> {
        (0..self.nodes.len() as u32).map(NodeRef)
    }

    pub fn var(&self, v: VarId) -> &VarInfo {
        &self.vars[v.index()]
    }

    pub fn var_count(&self) -> usize {
        self.vars.len()
    }

    /// Variables that occur in the graph (bound or free).
    pub fn used_vars(&self) -> Vec<VarId> {
        let mut vs: Vec<VarId> = self
            .nodes
            .iter()
            .filter_map(|n| match n.kind {
                NodeKind::Abs(x, _) | NodeKind::Var(x) => Some(x),
                _ => None,
            })
            .collect();
        vs.sort();
        vs.dedup();
        vs
    }

    /// Sorted free variables of the subgraph at `n`.
    pub fn free_variables(&self, n: NodeRef) -> &[VarId] {
        &self.free[n.index()]
    }

    pub fn is_closed(&self) -> bool {
        self.free[self.root.index()].is_empty()
    }

    pub fn var_label(&self, v: VarId) -> String {
        format!("{}#{}", self.vars[v.index()].name, v.0)
    }

    /// `id: App(1,2) : o`, one line per node, after a `root: id` line.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "root: {}", self.root);
        for (i, n) in self.nodes.iter().enumerate() {
            let k = match n.kind {
                NodeKind::App(f, a) => format!("App({f},{a})"),
                NodeKind::Abs(x, b) => format!("Abs({},{b})", self.var_label(x)),
                NodeKind::Var(x) => format!("Var({})", self.var_label(x)),
                NodeKind::Term(f) => format!("Term({})", self.alphabet.name(f)),
            };
            let _ = writeln!(out, "{i}: {k} : {}", n.ty);
        }
        out
    }
}

fn compute_free(nodes: &[Node]) -> Vec<Vec<VarId>> {
    let mut free: Vec<Vec<VarId>> = vec![Vec::new(); nodes.len()];
    loop {
        let mut changed = false;
        for i in 0..nodes.len() {
            let mut s: Vec<VarId> = match nodes[i].kind {
                NodeKind::Var(x) => vec![x],
                NodeKind::Term(_) => Vec::new(),
                NodeKind::App(f, a) => {
                    let mut v = free[f.index()].clone();
                    v.extend_from_slice(&free[a.index()]);
                    v
                }
                NodeKind::Abs(x, b) => free[b.index()].iter().copied().filter(|&y| y != x).collect(),
            };
            s.sort();
            s.dedup();
            if s != free[i] {
                free[i] = s;
                changed = true;
            }
        }
        if !changed {
            return free;
        }
    }
}

/// Checks every node's local typing and returns the root type.
pub fn check_types(g: &RegularLambdaGraph) -> Result<SimpleType, Vec<TypeError>> {
    let mut errs = Vec::new();
    for n in g.nodes() {
        let node = g.node(n);
        let bad = |m: String| TypeError { node: n, message: m };
        match node.kind {
            NodeKind::App(f, a) => match g.node(f).ty.split() {
                None => errs.push(bad(format!("function position has type {}", g.node(f).ty))),
                Some((p, r)) => {
                    if p != &g.node(a).ty {
                        errs.push(bad(format!("argument has type {}, expected {p}", g.node(a).ty)));
                    }
                    if r != &node.ty {
                        errs.push(bad(format!("application has type {r}, annotated {}", node.ty)));
                    }
                }
            },
            NodeKind::Abs(x, b) => {
                let want = SimpleType::arrow(g.var(x).ty.clone(), g.node(b).ty.clone());
                if want != node.ty {
                    errs.push(bad(format!("abstraction has type {want}, annotated {}", node.ty)));
                }
            }
            NodeKind::Var(x) => {
                if g.var(x).ty != node.ty {
                    errs.push(bad(format!("variable has type {}, annotated {}", g.var(x).ty, node.ty)));
                }
            }
            NodeKind::Term(f) => {
                let want = SimpleType::first_order(g.alphabet().arity(f));
                if want != node.ty {
                    errs.push(bad(format!("terminal has type {want}, annotated {}", node.ty)));
                }
            }
        }
    }
    if errs.is_empty() {
        Ok(g.node(g.root()).ty.clone())
    } else {
        Err(errs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::samples::sigma;

    /// `S = F a`, `F x = f x (F (g x))`, with `F` a shared back-edge.
    pub(crate) fn chain_graph() -> RegularLambdaGraph {
        let s = sigma();
        let mut b = GraphBuilder::new(s.clone());
        let io = SimpleType::first_order(1);
        let fnode = b.reserve(io.clone());
        let x = b.fresh_var("x", SimpleType::Base);
        let f = b.term(s.symbol("f").unwrap());
        let g = b.term(s.symbol("g").unwrap());
        let vx = b.var(x);
        let gx = b.app(g, vx);
        let rec = b.app(fnode, gx);
        let body = b.apps(f, &[vx, rec]);
        let lam = b.abs(x, body);
        b.define_as(fnode, lam).unwrap();
        let a = b.term(s.symbol("a").unwrap());
        let root = b.app(fnode, a);
        b.intern(root).unwrap()
    }

    #[test]
    fn chain_graph_types_and_closed() {
        let g = chain_graph();
        assert_eq!(check_types(&g).unwrap(), SimpleType::Base);
        assert!(g.is_closed());
        assert_eq!(g.len(), 10);
        assert_eq!(g.node(NodeRef(0)).kind, NodeKind::App(NodeRef(1), NodeRef(2)));
        assert!(g.dump().starts_with("root: 0\n0: App(1,2) : o\n1: Abs(x#0,3) : o->o\n"));
    }

    #[test]
    fn ill_typed_application() {
        let s = sigma();
        let mut b = GraphBuilder::new(s.clone());
        let a = b.term(s.symbol("a").unwrap());
        let a2 = b.term(s.symbol("a").unwrap());
        let bad = b.app(a, a2);
        let g = b.intern(bad).unwrap();
        let errs = check_types(&g).unwrap_err();
        assert_eq!(errs.len(), 1);
        assert!(errs[0].message.contains("function position"));
    }

    #[test]
    fn identity_and_free_variables() {
        let s = sigma();
        let mut b = GraphBuilder::new(s);
        let x = b.fresh_var("x", SimpleType::Base);
        let y = b.fresh_var("y", SimpleType::first_order(1));
        let vx = b.var(x);
        let id1 = b.abs(x, vx);
        let vx2 = b.var(x);
        let id2 = b.abs(x, vx2);
        let vy = b.var(y);
        let yx = b.app(vy, vx);
        let lam = b.abs(x, yx);
        let pair = b.node_with_type(NodeKind::App(id1, id2), SimpleType::Base);
        let g = b.intern(id1).unwrap();
        assert_eq!(check_types(&g).unwrap().to_string(), "o->o");
        assert_eq!(g.free_variables(NodeRef(1)), &[x]);
        let g = b.intern(lam).unwrap();
        assert_eq!(g.free_variables(g.root()), &[y]);
        // both copies of the identity collapse
        let g = b.intern(pair).unwrap();
        assert_eq!(g.node(g.root()).kind, NodeKind::App(NodeRef(1), NodeRef(1)));
    }

    #[test]
    fn distinct_terms_stay_distinct() {
        let s = sigma();
        let mut b = GraphBuilder::new(s.clone());
        let g = b.term(s.symbol("g").unwrap());
        let a = b.term(s.symbol("a").unwrap());
        let ga = b.app(g, a);
        let gga = b.app(g, ga);
        let f = b.term(s.symbol("f").unwrap());
        let t = b.apps(f, &[ga, gga]);
        let gr = b.intern(t).unwrap();
        assert_eq!(gr.len(), 7);
    }

    #[test]
    fn dangling_reserve() {
        let mut b = GraphBuilder::new(sigma());
        let r = b.reserve(SimpleType::Base);
        assert_eq!(b.intern(r).unwrap_err(), GraphError::Dangling(0));
    }
}
