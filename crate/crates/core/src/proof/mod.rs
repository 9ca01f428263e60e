//! Annotation proofs: judgments `node; gamma |- value`, closed under the
//! rule clauses for variables, applications, abstractions and terminals.
//! A set of judgments closed under the clauses proves the existence of an
//! infinite run on the normal form.
//!
//! Two engines produce such sets. The exact engine computes the greatest
//! fixed point over the whole (finite) judgment space and is complete. Goal
//! search explores step-function annotations from the root claim; it scales
//! to larger types but failing to find a proof is not a refutation.

mod certificate;
mod decide;
mod exact;
mod goal;

pub use certificate::{verify_certificate, CertEntry, ProofCertificate, Violation, Witness};
pub use decide::{decide, refute_by_depth, DecideOptions, Engine, Verdict};
pub use exact::{gfp_exact, ExactFixpoint};
pub use goal::{goal_search, GoalOptions, LocalFailure, SearchExhausted};

use thiserror::Error;

use crate::alphabet::{AlphabetError, Symbol, DELAY_APP, DELAY_BETA};
use crate::automaton::{AutomatonError, StateId, TrivialAutomaton};
use crate::graph::{check_types, NodeRef, RegularLambdaGraph, VarId};
use crate::normalize::CnError;
use crate::semantics::{SemContext, SemanticValue, Semantics, SemanticsError, StateSet};
use crate::types::SimpleType;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProofError {
    #[error(transparent)]
    Graph(#[from] CnError),
    #[error(transparent)]
    Alphabet(#[from] AlphabetError),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error(transparent)]
    State(#[from] AutomatonError),
    #[error("exact engine needs {0} judgments, over its budget; use goal search")]
    JudgmentBudget(usize),
    #[error("engine produced a certificate that does not verify: {0}")]
    Unverified(String),
}

/// `node; gamma |- value`, with `gamma` over the node's free variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Judgment {
    pub node: NodeRef,
    pub gamma: SemContext,
    pub value: SemanticValue,
}

/// A closed graph of type `o` together with an automaton over its
/// terminals and the two delays, and the semantics of the automaton.
#[derive(Debug)]
pub struct ProofProblem {
    graph: RegularLambdaGraph,
    automaton: TrivialAutomaton,
    sem: Semantics,
    delay_app: Symbol,
    delay_beta: Symbol,
    app_identity: bool,
    beta_identity: bool,
}

impl ProofProblem {
    /// `automaton` is read over the graph's terminals plus `R` and `b`;
    /// symbols it does not mention get no transitions.
    pub fn new(graph: &RegularLambdaGraph, automaton: &TrivialAutomaton, cap: u64) -> Result<Self, ProofError> {
        let ty = check_types(graph)
            .map_err(|e| CnError::IllTyped(e.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; ")))?;
        if !ty.is_base() {
            return Err(CnError::NotGround(ty.to_string()).into());
        }
        if !graph.is_closed() {
            return Err(CnError::NotClosed.into());
        }
        let sigma = graph.alphabet().with_delays()?;
        if !automaton.alphabet().has_delays() {
            return Err(SemanticsError::MissingDelays.into());
        }
        let automaton = automaton.over_alphabet(&sigma)?;
        let delay_app = sigma.symbol(DELAY_APP)?;
        let delay_beta = sigma.symbol(DELAY_BETA)?;
        let preserving = |s: Symbol| automaton.states().all(|q| automaton.delta(q, s) == [vec![q]]);
        Ok(ProofProblem {
            app_identity: preserving(delay_app),
            beta_identity: preserving(delay_beta),
            sem: Semantics::for_automaton(&automaton, cap)?,
            graph: graph.clone(),
            automaton,
            delay_app,
            delay_beta,
        })
    }

    pub fn graph(&self) -> &RegularLambdaGraph {
        &self.graph
    }

    pub fn automaton(&self) -> &TrivialAutomaton {
        &self.automaton
    }

    pub fn semantics(&self) -> &Semantics {
        &self.sem
    }

    pub fn state(&self, name: &str) -> Result<StateId, ProofError> {
        Ok(self.automaton.state(name)?)
    }

    pub(crate) fn ty(&self, n: NodeRef) -> &SimpleType {
        &self.graph.node(n).ty
    }

    pub(crate) fn var_ty(&self, x: VarId) -> &SimpleType {
        &self.graph.var(x).ty
    }

    pub(crate) fn fv(&self, n: NodeRef) -> &[VarId] {
        self.graph.free_variables(n)
    }

    pub(crate) fn lift_app(&self, v: &SemanticValue, ty: &SimpleType) -> SemanticValue {
        if self.app_identity {
            v.clone()
        } else {
            self.sem.lift(&self.automaton, self.delay_app, v, ty)
        }
    }

    pub(crate) fn lift_beta(&self, v: &SemanticValue, ty: &SimpleType) -> SemanticValue {
        if self.beta_identity {
            v.clone()
        } else {
            self.sem.lift(&self.automaton, self.delay_beta, v, ty)
        }
    }

    /// Minimal values `c` with `target <= lift(c)`. The pointwise choice at
    /// arrow types keeps one canonical preimage per point.
    pub(crate) fn preimages(&self, target: &SemanticValue, ty: &SimpleType, app: bool) -> Vec<SemanticValue> {
        if (app && self.app_identity) || (!app && self.beta_identity) {
            return vec![target.clone()];
        }
        let lift = |v: &SemanticValue, t: &SimpleType| if app { self.lift_app(v, t) } else { self.lift_beta(v, t) };
        match target {
            SemanticValue::Base(_) => {
                let all = self.sem.all_states().0;
                let ok: Vec<u64> = (0..=all)
                    .filter(|&m| self.sem.leq(target, &lift(&SemanticValue::Base(StateSet(m)), ty), ty))
                    .collect();
                ok.iter()
                    .filter(|&&m| !ok.iter().any(|&o| o != m && o & !m == 0))
                    .map(|&m| SemanticValue::Base(StateSet(m)))
                    .collect()
            }
            _ => {
                let sigma = ty.split().expect("arrow type").1;
                let mut pts = Vec::new();
                for (p, r) in self.sem.points(target, ty) {
                    match self.preimages(&r, sigma, app).into_iter().next() {
                        Some(c) => pts.push((p, c)),
                        None => return Vec::new(),
                    }
                }
                let mut v = self.sem.bottom(ty);
                for (p, c) in pts {
                    v = self.sem.join(&v, &self.sem.step_function(&[p], c, ty), ty);
                }
                vec![v]
            }
        }
    }

    pub fn display_context(&self, gamma: &SemContext) -> String {
        gamma.display(&self.sem, |x| (self.graph.var_label(x), self.var_ty(x).clone()))
    }

    pub fn display_judgment(&self, j: &Judgment) -> String {
        format!(
            "node {} | {} |- {}",
            j.node,
            self.display_context(&j.gamma),
            self.sem.display(&j.value, self.ty(j.node))
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::lift_delays;
    use crate::automaton::samples::even_chains;
    use crate::scheme::samples::*;
    use crate::scheme::{parse_scheme, to_lambda_graph};
    use crate::semantics::DEFAULT_CAP;

    fn problem(text: &str) -> ProofProblem {
        let g = to_lambda_graph(&parse_scheme(text).unwrap()).unwrap();
        ProofProblem::new(&g, &lift_delays(&even_chains()).unwrap(), DEFAULT_CAP).unwrap()
    }

    fn q2(p: &ProofProblem) -> StateId {
        p.state("q2").unwrap()
    }

    #[test]
    fn exact_engine_verdicts() {
        let p = problem(DOUBLING_CHAINS);
        let fix = gfp_exact(&p).unwrap();
        assert!(fix.holds(q2(&p)));
        assert!(fix.level_sizes.windows(2).all(|w| w[0] >= w[1]));
        let cert = fix.certificate(&p, q2(&p)).unwrap();
        assert_eq!(verify_certificate(&p, &cert), Ok(()));
        let text = cert.to_text(&p);
        assert!(text.contains("| phi#0=id |- {q2}"), "{text}");
        assert!(text.contains("app [id |-> {q2}] @ id"), "{text}");

        let p = problem(GROWING_CHAINS);
        let fix = gfp_exact(&p).unwrap();
        assert!(!fix.holds(q2(&p)));
        assert!(fix.certificate(&p, q2(&p)).is_none());
    }

    #[test]
    fn goal_search_annotations() {
        let p = problem(DOUBLING_CHAINS);
        let cert = goal_search(&p, q2(&p), &GoalOptions::default()).unwrap();
        assert_eq!(verify_certificate(&p, &cert), Ok(()));
        let text = cert.to_text(&p);
        for needle in ["phi#0=id", "phi#1=swap", "[id |-> {q2}]", "@ swap"] {
            assert!(text.contains(needle), "missing {needle} in\n{text}");
        }
        let back = ProofCertificate::parse(&text, &p).unwrap();
        assert_eq!(back, cert);

        let p = problem(GROWING_CHAINS);
        let e = goal_search(&p, q2(&p), &GoalOptions::default()).unwrap_err();
        let f = &e.failures[0];
        assert_eq!(f.clause, "var");
        assert_eq!(
            p.semantics().display(&f.judgment.value, &crate::SimpleType::Base),
            "{q1}"
        );
        assert_eq!(f.reason, "{q1} is not below {q2}");
        assert!(!e.budget_hit);
    }

    #[test]
    fn mutated_and_empty_certificates_fail() {
        let p = problem(DOUBLING_CHAINS);
        let cert = goal_search(&p, q2(&p), &GoalOptions::default()).unwrap();
        let text = cert.to_text(&p);
        let line = text.lines().find(|l| l.contains("|- {q2} ; witnesses: none")).unwrap();
        let bad = text.replacen(line, &line.replace("|- {q2}", "|- {q1}"), 1);
        let bad = ProofCertificate::parse(&bad, &p).unwrap();
        assert!(verify_certificate(&p, &bad).is_err());

        let empty = ProofCertificate {
            entries: Vec::new(),
            ..cert
        };
        let vs = verify_certificate(&p, &empty).unwrap_err();
        assert_eq!(vs[0].clause, "root");
    }

    #[test]
    fn decide_and_refute() {
        let opts = DecideOptions::default();
        let p = problem(DOUBLING_CHAINS);
        assert!(decide(&p, q2(&p), &opts).unwrap().is_yes());
        assert_eq!(refute_by_depth(&p, q2(&p), 64), None);
        let p = problem(FIXPOINT_IDENTITY);
        assert!(decide(&p, q2(&p), &opts).unwrap().is_yes());
        let goal = DecideOptions {
            engine: Engine::Goal,
            ..DecideOptions::default()
        };
        assert!(decide(&p, q2(&p), &goal).unwrap().is_yes());
        let p = problem(GROWING_CHAINS);
        let v = decide(&p, q2(&p), &opts).unwrap();
        let Verdict::No { refutation: Some(n) } = v else {
            panic!("{v:?}")
        };
        assert!(n > 4);
        assert_eq!(refute_by_depth(&p, q2(&p), 64), Some(n));
    }
}
