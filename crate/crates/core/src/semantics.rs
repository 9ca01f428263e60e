//! The finite semantics of simple types relative to an automaton: sets of
//! states at the base type, all functions at arrow types.
//!
//! A value of a type whose domain fits under the cap is stored as a full
//! table indexed by the argument enumeration. Larger types only have step
//! functions: finite joins of `[p |-> r]`, which send exactly `p` to `r` and
//! everything else to bottom. The representation is a function of the type,
//! so structural equality is extensional equality.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::alphabet::{Symbol, DELAY_APP, DELAY_BETA};
use crate::automaton::{StateId, TrivialAutomaton};
use crate::graph::VarId;
use crate::parse::{is_ident_char, ParseError};
use crate::types::SimpleType;

pub const DEFAULT_CAP: u64 = 1 << 20;
/// State sets are bitmasks.
/// Largest state count for which `id` names the identity in text.
const NAMED_IDENTITY_STATES: usize = 4;

pub const MAX_STATES: usize = 64;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateSet(pub u64);

impl StateSet {
    pub const EMPTY: StateSet = StateSet(0);

    pub fn full(n: usize) -> Self {
        if n >= 64 {
            StateSet(u64::MAX)
        } else {
            StateSet((1u64 << n) - 1)
        }
    }

    pub fn singleton(q: StateId) -> Self {
        StateSet(1 << q.0)
    }

    pub fn contains(self, q: StateId) -> bool {
        self.0 >> q.0 & 1 == 1
    }

    pub fn insert(&mut self, q: StateId) {
        self.0 |= 1 << q.0;
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset(self, other: StateSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(self, other: StateSet) -> Self {
        StateSet(self.0 | other.0)
    }

    pub fn iter(self) -> impl Iterator<Item = StateId> {
        (0..64u32).filter(move |i| self.0 >> i & 1 == 1).map(StateId)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum SemanticValue {
    Base(StateSet),
    /// Results in the order of the argument enumeration.
    Table(Arc<[SemanticValue]>),
    /// Sorted by pattern, patterns distinct, results never bottom.
    Steps(Arc<[(SemanticValue, SemanticValue)]>),
}

impl SemanticValue {
    pub fn as_base(&self) -> Option<StateSet> {
        match self {
            SemanticValue::Base(s) => Some(*s),
            _ => None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SemanticsError {
    #[error("the domain of type {0} exceeds the enumeration cap")]
    TooLarge(SimpleType),
    #[error("{0} states exceed the supported maximum of 64")]
    TooManyStates(usize),
    #[error("value does not have type {0}")]
    TypeMismatch(SimpleType),
    #[error("automaton alphabet lacks the unary delay symbols")]
    MissingDelays,
    #[error("automaton has {found} states, the semantics {expected}")]
    StateCount { expected: usize, found: usize },
}

/// All elements of one type, in canonical order.
#[derive(Debug)]
pub struct Enumeration {
    pub ty: SimpleType,
    values: Vec<SemanticValue>,
    index: HashMap<SemanticValue, u32>,
}

impl Enumeration {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[SemanticValue] {
        &self.values
    }

    pub fn value(&self, i: usize) -> &SemanticValue {
        &self.values[i]
    }

    /// Position of a canonical value of this type.
    pub fn index_of(&self, v: &SemanticValue) -> Option<usize> {
        self.index.get(v).map(|&i| i as usize)
    }
}

/// `|[[tau]]|` for `q` states, or `None` above `cap`.
pub fn domain_size(tau: &SimpleType, q: usize, cap: u64) -> Option<u64> {
    let n = match tau.split() {
        None => {
            if q >= 64 {
                return None;
            }
            1u64 << q
        }
        Some((rho, sigma)) => {
            let r = domain_size(rho, q, cap)?;
            let s = domain_size(sigma, q, cap)?;
            if s <= 1 {
                s
            } else {
                let e = u32::try_from(r).ok()?;
                s.checked_pow(e)?
            }
        }
    };
    (n <= cap).then_some(n)
}

/// The semantic domains for one state set.
pub struct Semantics {
    names: Arc<[String]>,
    cap: u64,
    cache: Mutex<HashMap<SimpleType, Arc<Enumeration>>>,
}

impl std::fmt::Debug for Semantics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Semantics")
            .field("states", &self.names)
            .field("cap", &self.cap)
            .finish()
    }
}

impl Semantics {
    pub fn new(names: Vec<String>, cap: u64) -> Result<Self, SemanticsError> {
        if names.len() > MAX_STATES {
            return Err(SemanticsError::TooManyStates(names.len()));
        }
        Ok(Semantics {
            names: names.into(),
            cap,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn for_automaton(a: &TrivialAutomaton, cap: u64) -> Result<Self, SemanticsError> {
        Self::new(a.states().map(|q| a.state_name(q).to_string()).collect(), cap)
    }

    pub fn state_count(&self) -> usize {
        self.names.len()
    }

    pub fn state_name(&self, q: StateId) -> &str {
        &self.names[q.index()]
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    pub fn all_states(&self) -> StateSet {
        StateSet::full(self.state_count())
    }

    pub fn domain_size(&self, tau: &SimpleType) -> Option<u64> {
        domain_size(tau, self.state_count(), self.cap)
    }

    fn tabular(&self, tau: &SimpleType) -> bool {
        !tau.is_base() && self.domain_size(tau).is_some()
    }

    pub fn enumeration(&self, tau: &SimpleType) -> Result<Arc<Enumeration>, SemanticsError> {
        if let Some(e) = self.cache.lock().expect("enumeration cache poisoned").get(tau) {
            return Ok(e.clone());
        }
        let size = self
            .domain_size(tau)
            .ok_or_else(|| SemanticsError::TooLarge(tau.clone()))? as usize;
        let values: Vec<SemanticValue> = match tau.split() {
            None => (0..size as u64).map(|m| SemanticValue::Base(StateSet(m))).collect(),
            Some((rho, sigma)) => {
                let args = self.enumeration(rho)?.len();
                let res = self.enumeration(sigma)?;
                let mut out = Vec::with_capacity(size);
                let mut digits = vec![0usize; args];
                for _ in 0..size {
                    out.push(SemanticValue::Table(
                        digits.iter().map(|&d| res.value(d).clone()).collect(),
                    ));
                    // the first entry is the most significant digit
                    for d in digits.iter_mut().rev() {
                        *d += 1;
                        if *d < res.len() {
                            break;
                        }
                        *d = 0;
                    }
                }
                out
            }
        };
        let index = values.iter().enumerate().map(|(i, v)| (v.clone(), i as u32)).collect();
        let e = Arc::new(Enumeration {
            ty: tau.clone(),
            values,
            index,
        });
        self.cache
            .lock()
            .expect("enumeration cache poisoned")
            .insert(tau.clone(), e.clone());
        Ok(e)
    }

    /// Every element of `tau` exactly once, in canonical order.
    pub fn enumerate(&self, tau: &SimpleType) -> Result<Vec<SemanticValue>, SemanticsError> {
        Ok(self.enumeration(tau)?.values.clone())
    }

    pub fn bottom(&self, tau: &SimpleType) -> SemanticValue {
        match tau.split() {
            None => SemanticValue::Base(StateSet::EMPTY),
            Some((rho, sigma)) if self.tabular(tau) => {
                let n = self
                    .enumeration(rho)
                    .expect("tabular type has enumerable arguments")
                    .len();
                SemanticValue::Table(vec![self.bottom(sigma); n].into())
            }
            Some(_) => SemanticValue::Steps(Arc::from(Vec::new())),
        }
    }

    pub fn is_bottom(&self, v: &SemanticValue) -> bool {
        match v {
            SemanticValue::Base(s) => s.is_empty(),
            SemanticValue::Table(t) => t.iter().all(|x| self.is_bottom(x)),
            SemanticValue::Steps(s) => s.is_empty(),
        }
    }

    /// Checks that `v` is a canonical value of `tau`.
    pub fn check(&self, v: &SemanticValue, tau: &SimpleType) -> Result<(), SemanticsError> {
        let bad = || SemanticsError::TypeMismatch(tau.clone());
        match (v, tau.split()) {
            (SemanticValue::Base(s), None) => {
                if s.is_subset(self.all_states()) {
                    Ok(())
                } else {
                    Err(bad())
                }
            }
            (SemanticValue::Table(t), Some((rho, sigma))) if self.tabular(tau) => {
                if t.len() != self.enumeration(rho)?.len() {
                    return Err(bad());
                }
                t.iter().try_for_each(|x| self.check(x, sigma))
            }
            (SemanticValue::Steps(s), Some((rho, sigma))) if !self.tabular(tau) => {
                for w in s.windows(2) {
                    if w[0].0 >= w[1].0 {
                        return Err(bad());
                    }
                }
                for (p, r) in s.iter() {
                    self.check(p, rho)?;
                    self.check(r, sigma)?;
                    if self.is_bottom(r) {
                        return Err(bad());
                    }
                }
                Ok(())
            }
            _ => Err(bad()),
        }
    }

    pub fn leq(&self, a: &SemanticValue, b: &SemanticValue, tau: &SimpleType) -> bool {
        use SemanticValue::*;
        match (a, b) {
            (Base(x), Base(y)) => x.is_subset(*y),
            (Table(x), Table(y)) => {
                let sigma = tau.split().expect("arrow type").1;
                x.iter().zip(y.iter()).all(|(p, q)| self.leq(p, q, sigma))
            }
            _ => {
                let sigma = tau.split().expect("arrow type").1;
                self.points(a, tau)
                    .iter()
                    .all(|(p, r)| self.leq(r, &self.apply(b, p, tau), sigma))
            }
        }
    }

    pub fn join(&self, a: &SemanticValue, b: &SemanticValue, tau: &SimpleType) -> SemanticValue {
        use SemanticValue::*;
        match (a, b) {
            (Base(x), Base(y)) => Base(x.union(*y)),
            (Table(x), Table(y)) => {
                let sigma = tau.split().expect("arrow type").1;
                Table(x.iter().zip(y.iter()).map(|(p, q)| self.join(p, q, sigma)).collect())
            }
            _ => {
                let sigma = tau.split().expect("arrow type").1;
                let mut pts: Vec<(SemanticValue, SemanticValue)> = self.points(a, tau);
                for (p, r) in self.points(b, tau) {
                    match pts.iter_mut().find(|(q, _)| *q == p) {
                        Some(e) => e.1 = self.join(&e.1, &r, sigma),
                        None => pts.push((p, r)),
                    }
                }
                self.value_of_points(pts, tau)
            }
        }
    }

    /// `f a` for `f` of type `tau`.
    pub fn apply(&self, f: &SemanticValue, a: &SemanticValue, tau: &SimpleType) -> SemanticValue {
        let (rho, sigma) = tau.split().expect("apply at an arrow type");
        match f {
            SemanticValue::Table(t) => {
                let i = self
                    .enumeration(rho)
                    .expect("tabular type has enumerable arguments")
                    .index_of(a)
                    .expect("argument is a canonical value");
                t[i].clone()
            }
            SemanticValue::Steps(s) => match s.binary_search_by(|(p, _)| p.cmp(a)) {
                Ok(i) => s[i].1.clone(),
                Err(_) => self.bottom(sigma),
            },
            SemanticValue::Base(_) => panic!("base value applied"),
        }
    }

    pub fn apply_all(&self, f: &SemanticValue, args: &[SemanticValue], tau: &SimpleType) -> SemanticValue {
        let mut v = f.clone();
        let mut t = tau;
        for a in args {
            v = self.apply(&v, a, t);
            t = t.split().expect("enough arrows").1;
        }
        v
    }

    /// The arguments with a non-bottom result, with their results.
    pub fn points(&self, f: &SemanticValue, tau: &SimpleType) -> Vec<(SemanticValue, SemanticValue)> {
        match f {
            SemanticValue::Table(t) => {
                let rho = tau.split().expect("arrow type").0;
                let args = self.enumeration(rho).expect("tabular type has enumerable arguments");
                t.iter()
                    .enumerate()
                    .filter(|(_, r)| !self.is_bottom(r))
                    .map(|(i, r)| (args.value(i).clone(), r.clone()))
                    .collect()
            }
            SemanticValue::Steps(s) => s.to_vec(),
            SemanticValue::Base(_) => panic!("points of a base value"),
        }
    }

    /// The function with the given non-bottom points. Patterns must be
    /// distinct and canonical.
    fn value_of_points(&self, mut pts: Vec<(SemanticValue, SemanticValue)>, tau: &SimpleType) -> SemanticValue {
        if self.tabular(tau) {
            let rho = tau.split().expect("arrow type").0;
            let args = self.enumeration(rho).expect("tabular type has enumerable arguments");
            let SemanticValue::Table(t) = self.bottom(tau) else {
                unreachable!()
            };
            let mut t = t.to_vec();
            for (p, r) in pts {
                t[args.index_of(&p).expect("canonical pattern")] = r;
            }
            SemanticValue::Table(t.into())
        } else {
            pts.retain(|(_, r)| !self.is_bottom(r));
            pts.sort_by(|a, b| a.0.cmp(&b.0));
            SemanticValue::Steps(pts.into())
        }
    }

    /// `[args |-> result]`, curried over the arguments.
    pub fn step_function(&self, args: &[SemanticValue], result: SemanticValue, tau: &SimpleType) -> SemanticValue {
        let mut types = vec![tau];
        for _ in args {
            types.push(types.last().unwrap().split().expect("enough arrows").1);
        }
        let mut v = result;
        for (i, a) in args.iter().enumerate().rev() {
            v = self.value_of_points(vec![(a.clone(), v)], types[i]);
        }
        v
    }

    /// `[[iota -> iota]]`'s identity. It has `2^|Q|` points.
    pub fn identity(&self) -> SemanticValue {
        let ty = SimpleType::first_order(1);
        let pts = (0..=self.all_states().0)
            .map(|m| (SemanticValue::Base(StateSet(m)), SemanticValue::Base(StateSet(m))))
            .collect();
        self.value_of_points(pts, &ty)
    }

    /// The function exchanging the two states of a two-state semantics.
    pub fn swap(&self) -> Option<SemanticValue> {
        if self.state_count() != 2 {
            return None;
        }
        let ty = SimpleType::first_order(1);
        let b = |m| SemanticValue::Base(StateSet(m));
        Some(self.value_of_points(vec![(b(1), b(2)), (b(2), b(1)), (b(3), b(3))], &ty))
    }

    fn check_states(&self, a: &TrivialAutomaton) -> Result<(), SemanticsError> {
        if a.state_count() != self.state_count() {
            return Err(SemanticsError::StateCount {
                expected: self.state_count(),
                found: a.state_count(),
            });
        }
        Ok(())
    }

    /// Precomposition with one step on the unary symbol `sym`.
    pub fn lift(&self, a: &TrivialAutomaton, sym: Symbol, f: &SemanticValue, tau: &SimpleType) -> SemanticValue {
        match f {
            SemanticValue::Base(s) => {
                let mut out = StateSet::EMPTY;
                for q in a.states() {
                    if a.delta(q, sym).iter().any(|t| s.contains(t[0])) {
                        out.insert(q);
                    }
                }
                SemanticValue::Base(out)
            }
            SemanticValue::Table(t) => {
                let sigma = tau.split().expect("arrow type").1;
                SemanticValue::Table(t.iter().map(|x| self.lift(a, sym, x, sigma)).collect())
            }
            SemanticValue::Steps(s) => {
                let sigma = tau.split().expect("arrow type").1;
                let pts = s
                    .iter()
                    .map(|(p, r)| (p.clone(), self.lift(a, sym, r, sigma)))
                    .collect();
                self.value_of_points(pts, tau)
            }
        }
    }

    fn delay(&self, a: &TrivialAutomaton, name: &str) -> Result<Symbol, SemanticsError> {
        self.check_states(a)?;
        match a.alphabet().lookup(name) {
            Some(s) if a.alphabet().arity(s) == 1 => Ok(s),
            _ => Err(SemanticsError::MissingDelays),
        }
    }

    pub fn lift_r(
        &self,
        a: &TrivialAutomaton,
        f: &SemanticValue,
        tau: &SimpleType,
    ) -> Result<SemanticValue, SemanticsError> {
        Ok(self.lift(a, self.delay(a, DELAY_APP)?, f, tau))
    }

    pub fn lift_beta(
        &self,
        a: &TrivialAutomaton,
        f: &SemanticValue,
        tau: &SimpleType,
    ) -> Result<SemanticValue, SemanticsError> {
        Ok(self.lift(a, self.delay(a, DELAY_BETA)?, f, tau))
    }

    /// `{q | some (q1..qk) in delta(q, f) has qi in args[i]}`.
    pub fn terminal_bound(&self, a: &TrivialAutomaton, f: Symbol, args: &[StateSet]) -> StateSet {
        let mut out = StateSet::EMPTY;
        for q in a.states() {
            if a.delta(q, f)
                .iter()
                .any(|t| t.iter().zip(args).all(|(&s, m)| m.contains(s)))
            {
                out.insert(q);
            }
        }
        out
    }

    /// Whether `v` lies below the automaton's reading of terminal `f`,
    /// after the base arguments in `prefix` have been supplied.
    pub fn below_terminal(&self, a: &TrivialAutomaton, f: Symbol, prefix: &[StateSet], v: &SemanticValue) -> bool {
        match v {
            SemanticValue::Base(s) => s.is_subset(self.terminal_bound(a, f, prefix)),
            SemanticValue::Table(t) => t.iter().enumerate().all(|(m, x)| {
                let mut p = prefix.to_vec();
                p.push(StateSet(m as u64));
                self.below_terminal(a, f, &p, x)
            }),
            SemanticValue::Steps(s) => s.iter().all(|(pat, x)| {
                let mut p = prefix.to_vec();
                p.push(pat.as_base().expect("terminal arguments are ground"));
                self.below_terminal(a, f, &p, x)
            }),
        }
    }

    /// The automaton's reading of `f` with `prefix` supplied, as a value of
    /// the remaining type.
    pub fn terminal_value(
        &self,
        a: &TrivialAutomaton,
        f: Symbol,
        prefix: &[StateSet],
        tau: &SimpleType,
    ) -> SemanticValue {
        self.tabulate(tau, prefix, &|args: &[StateSet]| self.terminal_bound(a, f, args))
    }

    /// The first-order value of `tau` computing `f` on the full argument
    /// list, `prefix` included.
    pub fn tabulate(
        &self,
        tau: &SimpleType,
        prefix: &[StateSet],
        f: &dyn Fn(&[StateSet]) -> StateSet,
    ) -> SemanticValue {
        match tau.split() {
            None => SemanticValue::Base(f(prefix)),
            Some((_, sigma)) => {
                let pts = (0..=self.all_states().0)
                    .map(|m| {
                        let mut p = prefix.to_vec();
                        p.push(StateSet(m));
                        (SemanticValue::Base(StateSet(m)), self.tabulate(sigma, &p, f))
                    })
                    .collect();
                self.value_of_points(pts, tau)
            }
        }
    }

    pub fn display(&self, v: &SemanticValue, tau: &SimpleType) -> String {
        let mut s = String::new();
        self.write_value(&mut s, v, tau);
        s
    }

    fn write_value(&self, out: &mut String, v: &SemanticValue, tau: &SimpleType) {
        if let SemanticValue::Base(s) = v {
            out.push('{');
            let names: Vec<&str> = s.iter().map(|q| self.state_name(q)).collect();
            out.push_str(&names.join(","));
            out.push('}');
            return;
        }
        if *tau == SimpleType::first_order(1) && self.state_count() <= NAMED_IDENTITY_STATES {
            if *v == self.identity() {
                out.push_str("id");
                return;
            }
            if Some(v) == self.swap().as_ref() {
                out.push_str("swap");
                return;
            }
        }
        let (rho, sigma) = tau.split().expect("arrow type");
        let pts = self.points(v, tau);
        if pts.is_empty() {
            out.push_str("[]");
        }
        for (i, (p, r)) in pts.iter().enumerate() {
            if i > 0 {
                out.push_str(" \\/ ");
            }
            out.push('[');
            self.write_value(out, p, rho);
            out.push_str(" |-> ");
            self.write_value(out, r, sigma);
            out.push(']');
        }
    }

    /// Reads the display syntax back at type `tau`.
    pub fn parse_value(&self, text: &str, tau: &SimpleType) -> Result<SemanticValue, ParseError> {
        let mut p = ValueParser {
            sem: self,
            src: text,
            pos: 0,
        };
        let v = p.join(tau)?;
        p.skip_ws();
        if p.pos != text.len() {
            return Err(p.error("trailing input after value"));
        }
        Ok(v)
    }
}

struct ValueParser<'a> {
    sem: &'a Semantics,
    src: &'a str,
    pos: usize,
}

impl ValueParser<'_> {
    fn error(&self, msg: &str) -> ParseError {
        ParseError::new(1, self.pos + 1, format!("{msg} in `{}`", self.src))
    }

    fn skip_ws(&mut self) {
        while self.src[self.pos..].starts_with(' ') {
            self.pos += 1;
        }
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn join(&mut self, tau: &SimpleType) -> Result<SemanticValue, ParseError> {
        let mut v = self.atom(tau)?;
        while self.eat("\\/") {
            let w = self.atom(tau)?;
            v = self.sem.join(&v, &w, tau);
        }
        Ok(v)
    }

    fn ident(&mut self) -> &str {
        self.skip_ws();
        let start = self.pos;
        while self.src[self.pos..].starts_with(is_ident_char) {
            self.pos += self.src[self.pos..].chars().next().map_or(1, char::len_utf8);
        }
        &self.src[start..self.pos]
    }

    fn atom(&mut self, tau: &SimpleType) -> Result<SemanticValue, ParseError> {
        if self.eat("(") {
            let v = self.join(tau)?;
            if !self.eat(")") {
                return Err(self.error("expected `)`"));
            }
            return Ok(v);
        }
        let Some((rho, sigma)) = tau.split() else {
            if !self.eat("{") {
                return Err(self.error("expected a state set"));
            }
            let mut set = StateSet::EMPTY;
            if !self.eat("}") {
                loop {
                    let name = self.ident().to_string();
                    let q = (0..self.sem.state_count() as u32)
                        .map(StateId)
                        .find(|&q| self.sem.state_name(q) == name)
                        .ok_or_else(|| self.error(&format!("unknown state `{name}`")))?;
                    set.insert(q);
                    if self.eat("}") {
                        break;
                    }
                    if !self.eat(",") {
                        return Err(self.error("expected `,` or `}`"));
                    }
                }
            }
            return Ok(SemanticValue::Base(set));
        };
        if self.eat("[") {
            if self.eat("]") {
                return Ok(self.sem.bottom(tau));
            }
            let p = self.join(rho)?;
            if !self.eat("|->") {
                return Err(self.error("expected `|->`"));
            }
            let r = self.join(sigma)?;
            if !self.eat("]") {
                return Err(self.error("expected `]`"));
            }
            return Ok(self.sem.step_function(&[p], r, tau));
        }
        let save = self.pos;
        let small = self.sem.state_count() <= NAMED_IDENTITY_STATES;
        let name = self.ident();
        if *tau == SimpleType::first_order(1) {
            match name {
                "id" if small => return Ok(self.sem.identity()),
                "swap" => {
                    if let Some(s) = self.sem.swap() {
                        return Ok(s);
                    }
                }
                _ => {}
            }
        }
        self.pos = save;
        Err(self.error("expected a function value"))
    }
}

/// Values for free variables, sorted by variable.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SemContext(Vec<(VarId, SemanticValue)>);

impl SemContext {
    pub fn empty() -> Self {
        SemContext(Vec::new())
    }

    pub fn entries(&self) -> &[(VarId, SemanticValue)] {
        &self.0
    }

    pub fn get(&self, x: VarId) -> Option<&SemanticValue> {
        self.0.binary_search_by_key(&x, |e| e.0).ok().map(|i| &self.0[i].1)
    }

    /// The context with `x` mapped to `a`, bound or not before.
    pub fn with(&self, x: VarId, a: SemanticValue) -> Self {
        let mut v = self.0.clone();
        match v.binary_search_by_key(&x, |e| e.0) {
            Ok(i) => v[i].1 = a,
            Err(i) => v.insert(i, (x, a)),
        }
        SemContext(v)
    }

    /// Restriction to a sorted variable list.
    pub fn restrict(&self, vars: &[VarId]) -> Self {
        SemContext(
            self.0
                .iter()
                .filter(|(x, _)| vars.binary_search(x).is_ok())
                .cloned()
                .collect(),
        )
    }

    pub fn domain(&self) -> Vec<VarId> {
        self.0.iter().map(|e| e.0).collect()
    }

    pub fn from_entries(mut entries: Vec<(VarId, SemanticValue)>) -> Self {
        entries.sort_by_key(|e| e.0);
        entries.dedup_by(|a, b| a.0 == b.0);
        SemContext(entries)
    }

    /// `x#0=id, y#1={q2}`, or `-` when empty.
    pub fn display(&self, sem: &Semantics, label: impl Fn(VarId) -> (String, SimpleType)) -> String {
        if self.0.is_empty() {
            return "-".into();
        }
        let mut s = String::new();
        for (i, (x, v)) in self.0.iter().enumerate() {
            if i > 0 {
                s.push_str(", ");
            }
            let (name, ty) = label(*x);
            let _ = write!(s, "{name}={}", sem.display(v, &ty));
        }
        s
    }
}

/// Splits at top-level occurrences of `sep`, outside brackets and braces.
pub(crate) fn split_top<'a>(text: &'a str, sep: &str) -> Vec<&'a str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    let b = text.as_bytes();
    let mut i = 0;
    while i < b.len() {
        match b[i] {
            b'[' | b'{' | b'(' => depth += 1,
            b']' | b'}' | b')' => depth -= 1,
            _ => {}
        }
        if depth == 0 && text[i..].starts_with(sep) {
            out.push(&text[start..i]);
            i += sep.len();
            start = i;
            continue;
        }
        i += 1;
    }
    out.push(&text[start..]);
    out
}
