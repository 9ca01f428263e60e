//! Certificates: finite sets of judgments with the witnesses of their rule
//! clauses, checked entry by entry.
//!
//! ```text
//! %certificate
//! %scheme doubling
//! %automaton even-sigma
//! %state q2
//! %root 0
//! node 0 | - |- {q2} ; witnesses: app [id |-> {q2}] @ id
//! node 4 | phi#0=id |- {q2} ; witnesses: app ...
//! node 9 | - |- [id |-> {q2}] ; witnesses: abs id => {q2}
//! ```
//!
//! A premise holds when it is bottom or lies below the value of an entry
//! for the same node and context.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::graph::{NodeKind, NodeRef, VarId};
use crate::parse::ParseError;
use crate::semantics::{split_top, SemContext, SemanticValue, StateSet};

use super::{Judgment, ProofProblem};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Witness {
    /// Variables and terminals.
    None,
    /// The function and argument values of an application.
    App { f: SemanticValue, u: SemanticValue },
    /// Body values for the arguments the abstraction's value uses.
    Abs(Vec<(SemanticValue, SemanticValue)>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CertEntry {
    pub judgment: Judgment,
    pub witness: Witness,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofCertificate {
    pub scheme: String,
    pub automaton: String,
    pub state: String,
    pub root: NodeRef,
    pub entries: Vec<CertEntry>,
}

/// One failed check. `entry` indexes `ProofCertificate::entries`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub entry: Option<usize>,
    pub clause: &'static str,
    pub reason: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.entry {
            Some(i) => write!(f, "entry {i} ({}): {}", self.clause, self.reason),
            None => write!(f, "{}: {}", self.clause, self.reason),
        }
    }
}

impl ProofCertificate {
    pub fn sort(&mut self) {
        self.entries.sort();
        self.entries.dedup();
    }

    pub fn to_text(&self, p: &ProofProblem) -> String {
        let sem = p.semantics();
        let mut out = String::new();
        let _ = writeln!(out, "%certificate");
        let _ = writeln!(out, "%scheme {}", self.scheme);
        let _ = writeln!(out, "%automaton {}", self.automaton);
        let _ = writeln!(out, "%state {}", self.state);
        let _ = writeln!(out, "%root {}", self.root);
        for e in &self.entries {
            let j = &e.judgment;
            let w = match &e.witness {
                Witness::None => "none".to_string(),
                Witness::App { f, u } => {
                    let (s, t) = app_children(p, j.node);
                    format!("app {} @ {}", sem.display(f, p.ty(s)), sem.display(u, p.ty(t)))
                }
                Witness::Abs(fam) => {
                    let ty = p.ty(j.node);
                    let (rho, sigma) = ty.split().expect("abstraction has arrow type");
                    let parts: Vec<String> = fam
                        .iter()
                        .map(|(a, b)| format!("{} => {}", sem.display(a, rho), sem.display(b, sigma)))
                        .collect();
                    if parts.is_empty() {
                        "abs".into()
                    } else {
                        format!("abs {}", parts.join(" && "))
                    }
                }
            };
            let _ = writeln!(out, "{} ; witnesses: {w}", p.display_judgment(j));
        }
        out
    }

    /// Reads a certificate against the problem it claims to solve; node
    /// ids, variables and value types are resolved in its graph.
    pub fn parse(text: &str, p: &ProofProblem) -> Result<Self, ParseError> {
        let sem = p.semantics();
        let g = p.graph();
        let mut header: HashMap<&str, String> = HashMap::new();
        let mut entries = Vec::new();
        let mut seen_magic = false;
        for (ln, raw) in text.lines().enumerate() {
            let line_no = ln + 1;
            let line = raw.trim();
            let err = |col: usize, msg: String| ParseError::new(line_no, col, msg);
            // value errors carry columns within the fragment only
            let at = |e: ParseError| ParseError::new(line_no, e.column, e.message);
            if line.is_empty() || line.starts_with("//") {
                continue;
            }
            if let Some(rest) = line.strip_prefix('%') {
                let (key, val) = rest.split_once(' ').unwrap_or((rest, ""));
                match key {
                    "certificate" => seen_magic = true,
                    "scheme" | "automaton" | "state" | "root" => {
                        header.insert(key, val.trim().to_string());
                    }
                    _ => return Err(err(1, format!("unknown header `%{key}`"))),
                }
                continue;
            }
            if !seen_magic {
                return Err(err(1, "missing `%certificate` header".into()));
            }
            let body = line
                .strip_prefix("node ")
                .ok_or_else(|| err(1, "expected `node <id> | ...`".into()))?;
            let (id, rest) = body
                .split_once(" | ")
                .ok_or_else(|| err(6, "expected ` | ` after node id".into()))?;
            let node: u32 = id.trim().parse().map_err(|_| err(6, format!("bad node id `{id}`")))?;
            if node as usize >= g.len() {
                return Err(err(6, format!("no node {node} in the graph")));
            }
            let node = NodeRef(node);
            let (gamma_text, rest) = rest
                .split_once(" |- ")
                .ok_or_else(|| err(1, "expected ` |- `".into()))?;
            let (value_text, wit_text) = rest
                .split_once(" ; witnesses: ")
                .ok_or_else(|| err(1, "expected ` ; witnesses: `".into()))?;
            let mut gamma = Vec::new();
            if gamma_text.trim() != "-" {
                for part in split_top(gamma_text, ", ") {
                    let (label, v) = part
                        .split_once('=')
                        .ok_or_else(|| err(1, format!("bad context entry `{part}`")))?;
                    let x = parse_var(label.trim(), p).ok_or_else(|| err(1, format!("unknown variable `{label}`")))?;
                    gamma.push((x, sem.parse_value(v.trim(), p.var_ty(x)).map_err(at)?));
                }
            }
            let ty = p.ty(node);
            let value = sem.parse_value(value_text.trim(), ty).map_err(at)?;
            let wit = wit_text.trim();
            let witness = if wit == "none" {
                Witness::None
            } else if let Some(w) = wit.strip_prefix("app ") {
                let parts = split_top(w, " @ ");
                let NodeKind::App(s, t) = g.node(node).kind else {
                    return Err(err(1, format!("node {node} is not an application")));
                };
                if parts.len() != 2 {
                    return Err(err(1, "expected `app <f> @ <u>`".into()));
                }
                Witness::App {
                    f: sem.parse_value(parts[0].trim(), p.ty(s)).map_err(at)?,
                    u: sem.parse_value(parts[1].trim(), p.ty(t)).map_err(at)?,
                }
            } else if wit == "abs" || wit.starts_with("abs ") {
                let (rho, sigma) = ty
                    .split()
                    .ok_or_else(|| err(1, format!("node {node} is not an abstraction")))?;
                let mut fam = Vec::new();
                let w = wit[3..].trim();
                if !w.is_empty() {
                    for part in split_top(w, " && ") {
                        let ab = split_top(part, " => ");
                        if ab.len() != 2 {
                            return Err(err(1, format!("expected `a => b`, found `{part}`")));
                        }
                        fam.push((
                            sem.parse_value(ab[0].trim(), rho).map_err(at)?,
                            sem.parse_value(ab[1].trim(), sigma).map_err(at)?,
                        ));
                    }
                }
                Witness::Abs(fam)
            } else {
                return Err(err(1, format!("unknown witness `{wit}`")));
            };
            entries.push(CertEntry {
                judgment: Judgment {
                    node,
                    gamma: SemContext::from_entries(gamma),
                    value,
                },
                witness,
            });
        }
        if !seen_magic {
            return Err(ParseError::new(1, 1, "missing `%certificate` header"));
        }
        let get = |k: &str| {
            header
                .get(k)
                .cloned()
                .ok_or_else(|| ParseError::new(1, 1, format!("missing `%{k}` header")))
        };
        let root_text = get("root")?;
        let root = root_text
            .parse::<u32>()
            .map(NodeRef)
            .map_err(|_| ParseError::new(1, 1, format!("bad root `{root_text}`")))?;
        Ok(ProofCertificate {
            scheme: get("scheme")?,
            automaton: get("automaton")?,
            state: get("state")?,
            root,
            entries,
        })
    }
}

fn app_children(p: &ProofProblem, n: NodeRef) -> (NodeRef, NodeRef) {
    match p.graph().node(n).kind {
        NodeKind::App(s, t) => (s, t),
        _ => panic!("app witness on a non-application"),
    }
}

/// `name#id` as printed by the graph.
fn parse_var(label: &str, p: &ProofProblem) -> Option<VarId> {
    let (name, id) = label.rsplit_once('#')?;
    let x = VarId(id.parse().ok()?);
    (x.index() < p.graph().var_count() && p.graph().var(x).name == name).then_some(x)
}

/// Checks the root claim and every entry's rule clause, independently of
/// how the certificate was produced.
pub fn verify_certificate(p: &ProofProblem, cert: &ProofCertificate) -> Result<(), Vec<Violation>> {
    let sem = p.semantics();
    let g = p.graph();
    let mut out = Vec::new();
    let mut index: HashMap<(NodeRef, &SemContext), Vec<&SemanticValue>> = HashMap::new();
    for e in &cert.entries {
        index
            .entry((e.judgment.node, &e.judgment.gamma))
            .or_default()
            .push(&e.judgment.value);
    }
    let holds = |n: NodeRef, gamma: &SemContext, v: &SemanticValue| {
        sem.is_bottom(v)
            || index
                .get(&(n, gamma))
                .is_some_and(|vs| vs.iter().any(|w| sem.leq(v, w, p.ty(n))))
    };

    if cert.root != g.root() {
        out.push(Violation {
            entry: None,
            clause: "root",
            reason: format!("certificate root {} is not the graph root {}", cert.root, g.root()),
        });
    }
    match p.state(&cert.state) {
        Ok(q) => {
            let claim = SemanticValue::Base(StateSet::singleton(q));
            if !holds(g.root(), &SemContext::empty(), &claim) {
                out.push(Violation {
                    entry: None,
                    clause: "root",
                    reason: format!("no entry proves {{{}}} at the root", cert.state),
                });
            }
        }
        Err(e) => out.push(Violation {
            entry: None,
            clause: "root",
            reason: e.to_string(),
        }),
    }

    for (i, e) in cert.entries.iter().enumerate() {
        let j = &e.judgment;
        let mut bad = |clause: &'static str, reason: String| {
            out.push(Violation {
                entry: Some(i),
                clause,
                reason,
            })
        };
        if j.node.index() >= g.len() {
            bad("context", format!("no node {}", j.node));
            continue;
        }
        let ty = p.ty(j.node);
        if j.gamma.domain() != p.fv(j.node) {
            bad("context", "context domain differs from the free variables".into());
            continue;
        }
        if let Some(err) = j
            .gamma
            .entries()
            .iter()
            .find_map(|(x, v)| sem.check(v, p.var_ty(*x)).err())
            .or_else(|| sem.check(&j.value, ty).err())
        {
            bad("context", err.to_string());
            continue;
        }
        match (g.node(j.node).kind, &e.witness) {
            (NodeKind::Var(x), Witness::None) => {
                let gx = j.gamma.get(x).expect("free variable in context");
                if !sem.leq(&j.value, gx, ty) {
                    bad(
                        "var",
                        format!(
                            "{} is not below {} = {}",
                            sem.display(&j.value, ty),
                            g.var_label(x),
                            sem.display(gx, ty)
                        ),
                    );
                }
            }
            (NodeKind::Term(f), Witness::None) => {
                if !sem.below_terminal(p.automaton(), f, &[], &j.value) {
                    bad(
                        "term",
                        format!(
                            "{} exceeds what `{}` allows",
                            sem.display(&j.value, ty),
                            g.alphabet().name(f)
                        ),
                    );
                }
            }
            (NodeKind::App(s, t), Witness::App { f, u }) => {
                let (ts, tt) = (p.ty(s), p.ty(t));
                if let Some(err) = sem.check(f, ts).err().or_else(|| sem.check(u, tt).err()) {
                    bad("app", err.to_string());
                    continue;
                }
                let fu = p.lift_app(&sem.apply(f, u, ts), ty);
                if !sem.leq(&j.value, &fu, ty) {
                    bad(
                        "app",
                        format!(
                            "{} is not below R(f u) = {}",
                            sem.display(&j.value, ty),
                            sem.display(&fu, ty)
                        ),
                    );
                }
                let gs = j.gamma.restrict(p.fv(s));
                if !holds(s, &gs, f) {
                    bad(
                        "premise",
                        format!(
                            "missing node {s} | {} |- {}",
                            p.display_context(&gs),
                            sem.display(f, ts)
                        ),
                    );
                }
                let gt = j.gamma.restrict(p.fv(t));
                if !holds(t, &gt, u) {
                    bad(
                        "premise",
                        format!(
                            "missing node {t} | {} |- {}",
                            p.display_context(&gt),
                            sem.display(u, tt)
                        ),
                    );
                }
            }
            (NodeKind::Abs(x, body), Witness::Abs(fam)) => {
                let (rho, sigma) = ty.split().expect("abstraction has arrow type");
                let mut covered = Vec::new();
                for (a, b) in fam {
                    if let Some(err) = sem.check(a, rho).err().or_else(|| sem.check(b, sigma).err()) {
                        bad("abs", err.to_string());
                        continue;
                    }
                    let fa = sem.apply(&j.value, a, ty);
                    let lb = p.lift_beta(b, sigma);
                    if !sem.leq(&fa, &lb, sigma) {
                        bad(
                            "abs",
                            format!(
                                "value at {} is {}, not below b({})",
                                sem.display(a, rho),
                                sem.display(&fa, sigma),
                                sem.display(b, sigma)
                            ),
                        );
                    }
                    let gb = j.gamma.with(x, a.clone()).restrict(p.fv(body));
                    if !holds(body, &gb, b) {
                        bad(
                            "premise",
                            format!(
                                "missing node {body} | {} |- {}",
                                p.display_context(&gb),
                                sem.display(b, p.ty(body))
                            ),
                        );
                    }
                    covered.push(a);
                }
                // arguments outside the family default to a bottom body value
                for (a, _) in sem.points(&j.value, ty) {
                    if !covered.contains(&&a) {
                        bad("abs", format!("no body value for argument {}", sem.display(&a, rho)));
                    }
                }
            }
            (_, w) => bad("witness", format!("witness {w:?} does not fit the node")),
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}
