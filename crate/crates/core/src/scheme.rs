//! Recursion schemes: text format, elaboration and translation into a
//! closed regular lambda graph.
//!
//! ```text
//! %terminals f:2 g:1 a:0
//! %nonterminals S:o F:(o->o)->o W:(o->o)->o->o
//! %start S
//! S = F (W g).
//! F phi = f (phi a) (F (W phi)).
//! W phi x = phi (phi x).
//! ```
//! Lambdas (`\x -> e`, or `\x:(o->o) -> e` where the type is not implied)
//! are lifted into fresh nonterminals named `_lamN` that take the captured
//! variables first.

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::alphabet::{RankedAlphabet, Symbol};
use crate::graph::{GraphBuilder, NodeRef, RegularLambdaGraph, VarId};
use crate::parse::{is_ident_char, is_ident_start, strip_comment, ParseError};
use crate::types::SimpleType;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Head {
    /// Index into the rule's parameter list.
    Param(usize),
    Nonterminal(usize),
    Terminal(Symbol),
}

/// An applicative expression `head arg1 ... argk`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Expr {
    pub head: Head,
    pub args: Vec<Expr>,
}

impl Expr {
    pub fn leaf(head: Head) -> Self {
        Expr { head, args: Vec::new() }
    }

    /// Number of heads in the expression.
    pub fn size(&self) -> usize {
        1 + self.args.iter().map(Expr::size).sum::<usize>()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Nonterminal {
    pub name: String,
    pub ty: SimpleType,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub params: Vec<String>,
    pub body: Expr,
}

/// Terminals, typed nonterminals, one rule per nonterminal (aligned by
/// index) and a start symbol.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecursionScheme {
    pub alphabet: RankedAlphabet,
    pub nonterminals: Vec<Nonterminal>,
    pub rules: Vec<Rule>,
    pub start: usize,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SchemeError {
    #[error("rule count {rules} differs from nonterminal count {nonterminals}")]
    RuleCount { rules: usize, nonterminals: usize },
    #[error("start symbol `{0}` must have type o")]
    StartNotGround(String),
    #[error("rule for `{name}` has {found} parameters, its type needs {expected}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("rule for `{name}`: {message}")]
    IllTyped { name: String, message: String },
    #[error("nonterminal `{0}` is defined through a cycle of bare nonterminals")]
    Unguarded(String),
    #[error("name `{0}` is both a terminal and a nonterminal")]
    NameClash(String),
    #[error("index out of range in rule for `{0}`")]
    BadIndex(String),
}

impl RecursionScheme {
    pub fn start_name(&self) -> &str {
        &self.nonterminals[self.start].name
    }

    pub fn nonterminal(&self, name: &str) -> Option<usize> {
        self.nonterminals.iter().position(|n| n.name == name)
    }

    /// Total number of heads on all right-hand sides.
    pub fn size(&self) -> usize {
        self.rules.iter().map(|r| r.params.len() + r.body.size()).sum()
    }

    /// Canonical text form, re-readable by [`parse_scheme`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "%terminals {}", self.alphabet.declaration());
        let decls: Vec<String> = self
            .nonterminals
            .iter()
            .map(|n| format!("{}:{}", n.name, n.ty))
            .collect();
        let _ = writeln!(out, "%nonterminals {}", decls.join(" "));
        let _ = writeln!(out, "%start {}", self.start_name());
        for (nt, rule) in self.nonterminals.iter().zip(&self.rules) {
            let mut lhs = nt.name.clone();
            for p in &rule.params {
                lhs.push(' ');
                lhs.push_str(p);
            }
            let _ = writeln!(out, "{lhs} = {}.", self.show(rule, &rule.body, false));
        }
        out
    }

    fn show(&self, rule: &Rule, e: &Expr, nested: bool) -> String {
        let head = match e.head {
            Head::Param(i) => rule.params[i].clone(),
            Head::Nonterminal(i) => self.nonterminals[i].name.clone(),
            Head::Terminal(s) => self.alphabet.name(s).to_string(),
        };
        if e.args.is_empty() {
            return head;
        }
        let mut s = head;
        for a in &e.args {
            s.push(' ');
            s.push_str(&self.show(rule, a, true));
        }
        if nested {
            format!("({s})")
        } else {
            s
        }
    }

    fn head_type(&self, rule_ty: &SimpleType, h: Head) -> Option<SimpleType> {
        Some(match h {
            Head::Param(i) => rule_ty.args().get(i).map(|t| (*t).clone())?,
            Head::Nonterminal(i) => self.nonterminals.get(i)?.ty.clone(),
            Head::Terminal(s) => {
                if s.index() >= self.alphabet.len() {
                    return None;
                }
                SimpleType::first_order(self.alphabet.arity(s))
            }
        })
    }

    fn expr_type(&self, rule_ty: &SimpleType, e: &Expr) -> Result<SimpleType, String> {
        let mut t = self.head_type(rule_ty, e.head).ok_or("reference out of range")?;
        for a in &e.args {
            let at = self.expr_type(rule_ty, a)?;
            let (p, r) = match t.split() {
                Some((p, r)) => (p.clone(), r.clone()),
                None => return Err(format!("too many arguments for a head of type {t}")),
            };
            if p != at {
                return Err(format!("argument of type {at} where {p} is expected"));
            }
            t = r;
        }
        Ok(t)
    }

    /// Ground nonterminals whose rule body is a bare nonterminal, resolved
    /// to the nonterminal they finally stand for.
    fn alias_targets(&self) -> Result<Vec<usize>, SchemeError> {
        let n = self.nonterminals.len();
        let mut target = vec![usize::MAX; n];
        for (i, slot) in target.iter_mut().enumerate() {
            let mut seen = vec![false; n];
            let mut cur = i;
            loop {
                if seen[cur] {
                    return Err(SchemeError::Unguarded(self.nonterminals[i].name.clone()));
                }
                seen[cur] = true;
                let r = &self.rules[cur];
                match (&r.body.head, r.body.args.is_empty(), r.params.is_empty()) {
                    (Head::Nonterminal(j), true, true) => cur = *j,
                    _ => break,
                }
            }
            *slot = cur;
        }
        Ok(target)
    }
}

/// Checks all invariants of a scheme built programmatically.
pub fn validate_scheme(s: &RecursionScheme) -> Result<(), Vec<SchemeError>> {
    let mut errs = Vec::new();
    if s.rules.len() != s.nonterminals.len() {
        return Err(vec![SchemeError::RuleCount {
            rules: s.rules.len(),
            nonterminals: s.nonterminals.len(),
        }]);
    }
    match s.nonterminals.get(s.start) {
        Some(n) if n.ty.is_base() => {}
        Some(n) => errs.push(SchemeError::StartNotGround(n.name.clone())),
        None => errs.push(SchemeError::BadIndex("%start".into())),
    }
    for nt in &s.nonterminals {
        if s.alphabet.lookup(&nt.name).is_some() {
            errs.push(SchemeError::NameClash(nt.name.clone()));
        }
    }
    for (nt, rule) in s.nonterminals.iter().zip(&s.rules) {
        if rule.params.len() != nt.ty.arity() {
            errs.push(SchemeError::Arity {
                name: nt.name.clone(),
                expected: nt.ty.arity(),
                found: rule.params.len(),
            });
            continue;
        }
        match s.expr_type(&nt.ty, &rule.body) {
            Ok(t) if t.is_base() => {}
            Ok(t) => errs.push(SchemeError::IllTyped {
                name: nt.name.clone(),
                message: format!("body has type {t}, expected o"),
            }),
            Err(m) => errs.push(SchemeError::IllTyped {
                name: nt.name.clone(),
                message: m,
            }),
        }
    }
    if errs.is_empty() {
        if let Err(e) = s.alias_targets() {
            errs.push(e);
        }
    }
    if errs.is_empty() {
        Ok(())
    } else {
        Err(errs)
    }
}

/// The associated lambda graph: each nonterminal becomes one shared
/// abstraction spine and every occurrence is an edge to it.
pub fn to_lambda_graph(s: &RecursionScheme) -> Result<RegularLambdaGraph, Vec<SchemeError>> {
    validate_scheme(s)?;
    let alias = s.alias_targets().map_err(|e| vec![e])?;
    let mut b = GraphBuilder::new(s.alphabet.clone());
    let spine: Vec<NodeRef> = s.nonterminals.iter().map(|n| b.reserve(n.ty.clone())).collect();
    for (i, (nt, rule)) in s.nonterminals.iter().zip(&s.rules).enumerate() {
        if alias[i] != i {
            continue;
        }
        let tys = nt.ty.args();
        let vars: Vec<VarId> = rule
            .params
            .iter()
            .zip(&tys)
            .map(|(p, t)| b.fresh_var(p.clone(), (*t).clone()))
            .collect();
        let body = build_expr(&mut b, &rule.body, &vars, &spine, &alias);
        let lam = vars.iter().rev().fold(body, |acc, &x| b.abs(x, acc));
        b.define_as(spine[i], lam).expect("fresh spine node");
    }
    for i in 0..spine.len() {
        if alias[i] != i {
            b.define_as(spine[i], spine[alias[i]]).expect("resolved alias");
        }
    }
    let g = b.intern(spine[alias[s.start]]).expect("all spines defined");
    Ok(g)
}

fn build_expr(b: &mut GraphBuilder, e: &Expr, vars: &[VarId], spine: &[NodeRef], alias: &[usize]) -> NodeRef {
    let head = match e.head {
        Head::Param(i) => b.var(vars[i]),
        Head::Nonterminal(j) => spine[alias[j]],
        Head::Terminal(f) => b.term(f),
    };
    let args: Vec<NodeRef> = e.args.iter().map(|a| build_expr(b, a, vars, spine, alias)).collect();
    b.apps(head, &args)
}

// ---- text format -------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Eq,
    Dot,
    Open,
    Close,
    Lambda,
    Arrow,
    Colon,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Pos {
    line: usize,
    col: usize,
}

impl Pos {
    fn err(self, m: impl Into<String>) -> ParseError {
        ParseError::new(self.line, self.col, m)
    }
}

#[derive(Clone, Debug)]
enum Raw {
    Ident(String, Pos),
    App(Box<Raw>, Box<Raw>),
    Lam(Vec<(String, Option<SimpleType>, Pos)>, Box<Raw>, Pos),
}

impl Raw {
    fn pos(&self) -> Pos {
        match self {
            Raw::Ident(_, p) | Raw::Lam(_, _, p) => *p,
            Raw::App(f, _) => f.pos(),
        }
    }

    fn free_names(&self, bound: &mut Vec<String>, out: &mut Vec<String>) {
        match self {
            Raw::Ident(n, _) => {
                if !bound.contains(n) && !out.contains(n) {
                    out.push(n.clone());
                }
            }
            Raw::App(f, a) => {
                f.free_names(bound, out);
                a.free_names(bound, out);
            }
            Raw::Lam(bs, body, _) => {
                let k = bound.len();
                bound.extend(bs.iter().map(|b| b.0.clone()));
                body.free_names(bound, out);
                bound.truncate(k);
            }
        }
    }
}

fn lex_rules(lines: &[(usize, String)]) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let mut out = Vec::new();
    for (ln, text) in lines {
        let chars: Vec<char> = text.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let pos = Pos { line: *ln, col: i + 1 };
            let single = match c {
                '=' => Some(Tok::Eq),
                '.' => Some(Tok::Dot),
                '(' => Some(Tok::Open),
                ')' => Some(Tok::Close),
                '\\' => Some(Tok::Lambda),
                ':' => Some(Tok::Colon),
                _ => None,
            };
            if let Some(t) = single {
                out.push((t, pos));
                i += 1;
            } else if c.is_whitespace() {
                i += 1;
            } else if c == '-' && chars.get(i + 1) == Some(&'>') {
                out.push((Tok::Arrow, pos));
                i += 2;
            } else if is_ident_start(c) {
                let s = i;
                while i < chars.len() && is_ident_char(chars[i]) {
                    i += 1;
                }
                out.push((Tok::Ident(chars[s..i].iter().collect()), pos));
            } else {
                return Err(pos.err(format!("unexpected character `{c}`")));
            }
        }
    }
    Ok(out)
}

/// Name, position, parameters and body of one rule.
type ParsedRule = (String, Pos, Vec<(String, Pos)>, Raw);

struct RuleParser {
    toks: Vec<(Tok, Pos)>,
    pos: usize,
    end: Pos,
}

impl RuleParser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn here(&self) -> Pos {
        self.toks.get(self.pos).map(|t| t.1).unwrap_or(self.end)
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<Pos, ParseError> {
        if self.peek() == Some(&t) {
            self.pos += 1;
            Ok(self.toks[self.pos - 1].1)
        } else {
            Err(self.here().err(format!("expected {what}")))
        }
    }

    fn ident(&mut self) -> Result<(String, Pos), ParseError> {
        match self.toks.get(self.pos) {
            Some((Tok::Ident(n), p)) => {
                self.pos += 1;
                Ok((n.clone(), *p))
            }
            _ => Err(self.here().err("expected an identifier")),
        }
    }

    fn rule(&mut self) -> Result<ParsedRule, ParseError> {
        let (name, p) = self.ident()?;
        let mut params = Vec::new();
        while let Some(Tok::Ident(_)) = self.peek() {
            params.push(self.ident()?);
        }
        self.expect(Tok::Eq, "`=`")?;
        let body = self.expr()?;
        self.expect(Tok::Dot, "`.` at the end of the rule")?;
        Ok((name, p, params, body))
    }

    fn expr(&mut self) -> Result<Raw, ParseError> {
        if self.peek() == Some(&Tok::Lambda) {
            return self.lambda();
        }
        let mut e = self.atom()?;
        loop {
            match self.peek() {
                Some(Tok::Ident(_)) | Some(Tok::Open) => {
                    let a = self.atom()?;
                    e = Raw::App(Box::new(e), Box::new(a));
                }
                Some(Tok::Lambda) => {
                    let a = self.lambda()?;
                    return Ok(Raw::App(Box::new(e), Box::new(a)));
                }
                _ => return Ok(e),
            }
        }
    }

    fn lambda(&mut self) -> Result<Raw, ParseError> {
        let at = self.expect(Tok::Lambda, "`\\`")?;
        let mut binders = Vec::new();
        while let Some(Tok::Ident(_)) = self.peek() {
            let (n, p) = self.ident()?;
            let ty = if self.peek() == Some(&Tok::Colon) {
                self.pos += 1;
                Some(self.atype()?)
            } else {
                None
            };
            binders.push((n, ty, p));
        }
        if binders.is_empty() {
            return Err(self.here().err("expected a binder after `\\`"));
        }
        self.expect(Tok::Arrow, "`->` after lambda binders")?;
        let body = self.expr()?;
        Ok(Raw::Lam(binders, Box::new(body), at))
    }

    /// `o` or a parenthesized type.
    fn atype(&mut self) -> Result<SimpleType, ParseError> {
        let p = self.here();
        match self.peek() {
            Some(Tok::Ident(n)) if n == "o" => {
                self.pos += 1;
                Ok(SimpleType::Base)
            }
            Some(Tok::Open) => {
                self.pos += 1;
                let mut text = String::from("(");
                let mut depth = 1;
                while depth > 0 {
                    match self.toks.get(self.pos).map(|t| &t.0) {
                        Some(Tok::Open) => {
                            depth += 1;
                            text.push('(')
                        }
                        Some(Tok::Close) => {
                            depth -= 1;
                            text.push(')')
                        }
                        Some(Tok::Arrow) => text.push_str("->"),
                        Some(Tok::Ident(n)) if n == "o" => text.push('o'),
                        _ => return Err(p.err("malformed type annotation")),
                    }
                    self.pos += 1;
                }
                SimpleType::parse(&text).map_err(|e| p.err(e.message))
            }
            _ => Err(p.err("expected a type annotation")),
        }
    }

    fn atom(&mut self) -> Result<Raw, ParseError> {
        match self.peek() {
            Some(Tok::Open) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(Tok::Close, "`)`")?;
                Ok(e)
            }
            Some(Tok::Ident(_)) => {
                let (n, p) = self.ident()?;
                Ok(Raw::Ident(n, p))
            }
            _ => Err(self.here().err("expected an expression")),
        }
    }
}

struct Elaborator<'a> {
    alphabet: &'a RankedAlphabet,
    nonterminals: Vec<Nonterminal>,
    rules: Vec<Option<Rule>>,
    lambdas: usize,
    index: HashMap<String, usize>,
}

impl Elaborator<'_> {
    fn lookup(&self, scope: &[(String, SimpleType)], name: &str, p: Pos) -> Result<(Head, SimpleType), ParseError> {
        if let Some(i) = scope.iter().rposition(|s| s.0 == name) {
            return Ok((Head::Param(i), scope[i].1.clone()));
        }
        if let Some(&j) = self.index.get(name) {
            return Ok((Head::Nonterminal(j), self.nonterminals[j].ty.clone()));
        }
        if let Some(f) = self.alphabet.lookup(name) {
            return Ok((Head::Terminal(f), SimpleType::first_order(self.alphabet.arity(f))));
        }
        Err(p.err(format!("unknown name `{name}`")))
    }

    /// Elaborates `e`, checking it against `want` when given.
    fn elab(
        &mut self,
        e: &Raw,
        scope: &[(String, SimpleType)],
        want: Option<&SimpleType>,
    ) -> Result<(Expr, SimpleType), ParseError> {
        let (expr, ty) = match e {
            Raw::Ident(n, p) => {
                let (h, t) = self.lookup(scope, n, *p)?;
                (Expr::leaf(h), t)
            }
            Raw::App(..) => {
                let mut spine = Vec::new();
                let mut cur = e;
                while let Raw::App(f, a) = cur {
                    spine.push(a.as_ref());
                    cur = f;
                }
                spine.reverse();
                let (mut head, mut t) = self.elab(cur, scope, None)?;
                for a in spine {
                    let (p, r) = match t.split() {
                        Some((p, r)) => (p.clone(), r.clone()),
                        None => return Err(a.pos().err(format!("too many arguments: head has type {t}"))),
                    };
                    let (ae, _) = self.elab(a, scope, Some(&p))?;
                    head.args.push(ae);
                    t = r;
                }
                (head, t)
            }
            Raw::Lam(binders, body, _) => self.lift_lambda(binders, body, scope, want)?,
        };
        if let Some(w) = want {
            if w != &ty {
                return Err(e.pos().err(format!("expression has type {ty}, expected {w}")));
            }
        }
        Ok((expr, ty))
    }

    fn lift_lambda(
        &mut self,
        binders: &[(String, Option<SimpleType>, Pos)],
        body: &Raw,
        scope: &[(String, SimpleType)],
        want: Option<&SimpleType>,
    ) -> Result<(Expr, SimpleType), ParseError> {
        let mut tys = Vec::new();
        let mut rest = want.cloned();
        for (n, ann, bp) in binders {
            let from_want = rest
                .as_ref()
                .and_then(|t| t.split().map(|(a, r)| (a.clone(), r.clone())));
            let t = match (ann, &from_want) {
                (Some(a), Some((w, _))) if a != w => {
                    return Err(bp.err(format!("binder `{n}` annotated {a}, expected {w}")))
                }
                (Some(a), _) => a.clone(),
                (None, Some((w, _))) => w.clone(),
                (None, None) => return Err(bp.err(format!("cannot infer the type of `{n}`; annotate it"))),
            };
            rest = from_want.map(|(_, r)| r);
            if tys.iter().any(|(m, _): &(String, SimpleType)| m == n) {
                return Err(bp.err(format!("binder `{n}` repeated")));
            }
            tys.push((n.clone(), t));
        }
        let mut names = Vec::new();
        body.free_names(&mut binders.iter().map(|b| b.0.clone()).collect(), &mut names);
        let captured: Vec<(String, SimpleType)> = scope.iter().filter(|(n, _)| names.contains(n)).cloned().collect();
        let name = format!("_lam{}", self.lambdas);
        self.lambdas += 1;
        let lam_ty = SimpleType::curried(tys.iter().map(|t| t.1.clone()), SimpleType::Base);
        let full_ty = SimpleType::curried(captured.iter().map(|c| c.1.clone()), lam_ty.clone());
        let idx = self.nonterminals.len();
        self.nonterminals.push(Nonterminal {
            name: name.clone(),
            ty: full_ty,
        });
        self.rules.push(None);
        self.index.insert(name, idx);
        let inner: Vec<(String, SimpleType)> = captured.iter().cloned().chain(tys.iter().cloned()).collect();
        let (b, _) = self.elab(body, &inner, Some(&SimpleType::Base))?;
        self.rules[idx] = Some(Rule {
            params: inner.into_iter().map(|s| s.0).collect(),
            body: b,
        });
        let args = captured
            .iter()
            .map(|(n, _)| Expr::leaf(Head::Param(scope.iter().rposition(|s| &s.0 == n).expect("captured"))))
            .collect();
        Ok((
            Expr {
                head: Head::Nonterminal(idx),
                args,
            },
            lam_ty,
        ))
    }
}

/// Parses and elaborates the scheme text format.
pub fn parse_scheme(text: &str) -> Result<RecursionScheme, ParseError> {
    let mut alphabet = None;
    let mut decls: Vec<(String, SimpleType, Pos)> = Vec::new();
    let mut start: Option<(String, Pos)> = None;
    let mut body_lines = Vec::new();
    let mut last = Pos { line: 1, col: 1 };
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = strip_comment(raw);
        let t = line.trim();
        last = Pos {
            line: ln,
            col: line.len() + 1,
        };
        if let Some(rest) = t.strip_prefix("%terminals") {
            alphabet = Some(RankedAlphabet::parse_declaration(rest, ln)?);
        } else if let Some(rest) = t.strip_prefix("%nonterminals") {
            for tok in rest.split_whitespace() {
                let (n, ty) = tok
                    .split_once(':')
                    .ok_or_else(|| ParseError::new(ln, 1, format!("expected name:type, got `{tok}`")))?;
                if !crate::parse::is_ident(n) {
                    return Err(ParseError::new(ln, 1, format!("bad nonterminal name `{n}`")));
                }
                let ty = SimpleType::parse(ty).map_err(|e| ParseError::new(ln, 1, e.message))?;
                decls.push((n.to_string(), ty, Pos { line: ln, col: 1 }));
            }
        } else if let Some(rest) = t.strip_prefix("%start") {
            start = Some((rest.trim().to_string(), Pos { line: ln, col: 1 }));
        } else if t.starts_with('%') {
            return Err(ParseError::new(ln, 1, format!("unknown directive `{t}`")));
        } else {
            body_lines.push((ln, line.to_string()));
        }
    }
    let alphabet = alphabet.ok_or_else(|| ParseError::new(1, 1, "missing %terminals line"))?;
    let (start, start_pos) = start.ok_or_else(|| ParseError::new(1, 1, "missing %start line"))?;
    let mut index = HashMap::new();
    for (i, (n, _, p)) in decls.iter().enumerate() {
        if index.insert(n.clone(), i).is_some() {
            return Err(p.err(format!("nonterminal `{n}` declared twice")));
        }
        if alphabet.lookup(n).is_some() {
            return Err(p.err(SchemeError::NameClash(n.clone()).to_string()));
        }
    }
    let start_idx = *index
        .get(&start)
        .ok_or_else(|| start_pos.err(format!("start symbol `{start}` is not a nonterminal")))?;
    let toks = lex_rules(&body_lines)?;
    let mut rp = RuleParser {
        toks,
        pos: 0,
        end: last,
    };
    let mut el = Elaborator {
        alphabet: &alphabet,
        nonterminals: decls
            .iter()
            .map(|d| Nonterminal {
                name: d.0.clone(),
                ty: d.1.clone(),
            })
            .collect(),
        rules: vec![None; decls.len()],
        lambdas: 0,
        index: index.clone(),
    };
    while rp.pos < rp.toks.len() {
        let (name, p, params, body) = rp.rule()?;
        let &i = index
            .get(&name)
            .ok_or_else(|| p.err(format!("rule for undeclared nonterminal `{name}`")))?;
        if el.rules[i].is_some() {
            return Err(p.err(format!("second rule for `{name}`")));
        }
        let ty = decls[i].1.clone();
        let arg_tys = ty.args();
        if params.len() != arg_tys.len() {
            return Err(p.err(
                SchemeError::Arity {
                    name: name.clone(),
                    expected: arg_tys.len(),
                    found: params.len(),
                }
                .to_string(),
            ));
        }
        let mut scope: Vec<(String, SimpleType)> = Vec::new();
        for ((pn, pp), t) in params.iter().zip(&arg_tys) {
            if scope.iter().any(|s| &s.0 == pn) {
                return Err(pp.err(format!("parameter `{pn}` repeated")));
            }
            scope.push((pn.clone(), (*t).clone()));
        }
        let (b, _) = el.elab(&body, &scope, Some(&SimpleType::Base))?;
        el.rules[i] = Some(Rule {
            params: params.into_iter().map(|p| p.0).collect(),
            body: b,
        });
    }
    let mut rules = Vec::with_capacity(el.rules.len());
    for (i, r) in el.rules.into_iter().enumerate() {
        match r {
            Some(r) => rules.push(r),
            None => {
                return Err(decls
                    .get(i)
                    .map(|d| d.2)
                    .unwrap_or(last)
                    .err(format!("no rule for `{}`", el.nonterminals[i].name)))
            }
        }
    }
    let scheme = RecursionScheme {
        alphabet: alphabet.clone(),
        nonterminals: el.nonterminals,
        rules,
        start: start_idx,
    };
    if let Err(errs) = validate_scheme(&scheme) {
        let msg = errs.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; ");
        return Err(start_pos.err(msg));
    }
    Ok(scheme)
}

impl fmt::Display for RecursionScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Scheme texts used by tests, benchmarks and the shipped data files.
pub mod samples {
    /// Denotes `f(a, f(g a, f(g g a, ...)))`.
    pub const GROWING_CHAINS: &str = "%terminals f:2 g:1 a:0
%nonterminals S:o F:o->o
%start S
S = F a.
F x = f x (F (g x)).
";

    /// Denotes `f(g^2 a, f(g^4 a, ...))`: `W` doubles its function argument.
    pub const DOUBLING_CHAINS: &str = "%terminals f:2 g:1 a:0
%nonterminals S:o F:(o->o)->o W:(o->o)->o->o
%start S
S = F (W g).
F phi = f (phi a) (F (W phi)).
W phi x = phi (phi x).
";

    /// A fixpoint combinator applied to the identity; never produces a
    /// terminal.
    pub const FIXPOINT_IDENTITY: &str = "%terminals f:2 g:1 a:0
%nonterminals S:o Y:(o->o)->o I:o->o
%start S
S = Y I.
Y phi = phi (Y phi).
I x = x.
";
}
