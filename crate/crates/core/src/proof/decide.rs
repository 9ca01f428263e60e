use crate::automaton::{RunSearch, StateId};
use crate::normalize::Normalizer;

use super::certificate::{verify_certificate, ProofCertificate};
use super::exact::{gfp_exact_with_budget, KEY_BUDGET};
use super::goal::{goal_search, GoalOptions, SearchExhausted};
use super::{ProofError, ProofProblem};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Engine {
    Exact,
    Goal,
    /// Exact when the demanded types fit the cap, goal search otherwise.
    Auto,
}

#[derive(Clone, Debug)]
pub struct DecideOptions {
    pub engine: Engine,
    /// Levels tried by the refuter.
    pub refute_fuel: usize,
    pub key_budget: usize,
    pub goal: GoalOptions,
}

impl Default for DecideOptions {
    fn default() -> Self {
        DecideOptions {
            engine: Engine::Auto,
            refute_fuel: 64,
            key_budget: KEY_BUDGET,
            goal: GoalOptions::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Verdict {
    /// The certificate has been verified.
    Yes {
        certificate: ProofCertificate,
        engine: Engine,
    },
    /// The exact engine found no proof, which is authoritative. The level
    /// is the refuter's confirmation, when found within fuel.
    No { refutation: Option<usize> },
    /// Goal search ran out of candidates. A refutation level turns this
    /// into a definite no.
    Exhausted {
        refutation: Option<usize>,
        search: SearchExhausted,
    },
}

impl Verdict {
    pub fn is_yes(&self) -> bool {
        matches!(self, Verdict::Yes { .. })
    }

    /// `Some(true)` for yes, `Some(false)` for a definite no.
    pub fn answer(&self) -> Option<bool> {
        match self {
            Verdict::Yes { .. } => Some(true),
            Verdict::No { .. }
            | Verdict::Exhausted {
                refutation: Some(_), ..
            } => Some(false),
            Verdict::Exhausted { refutation: None, .. } => None,
        }
    }
}

/// Does the automaton have an infinite run from `q0` on the normal form?
pub fn decide(p: &ProofProblem, q0: StateId, opts: &DecideOptions) -> Result<Verdict, ProofError> {
    if opts.engine != Engine::Goal {
        match gfp_exact_with_budget(p, opts.key_budget) {
            Ok(fix) => {
                return match fix.certificate(p, q0) {
                    Some(certificate) => {
                        checked(p, &certificate)?;
                        Ok(Verdict::Yes {
                            certificate,
                            engine: Engine::Exact,
                        })
                    }
                    None => Ok(Verdict::No {
                        refutation: refute_by_depth(p, q0, opts.refute_fuel),
                    }),
                };
            }
            Err(ProofError::Semantics(_) | ProofError::JudgmentBudget(_)) if opts.engine == Engine::Auto => {}
            Err(e) => return Err(e),
        }
    }
    match goal_search(p, q0, &opts.goal) {
        Ok(certificate) => {
            checked(p, &certificate)?;
            Ok(Verdict::Yes {
                certificate,
                engine: Engine::Goal,
            })
        }
        Err(search) => Ok(Verdict::Exhausted {
            refutation: refute_by_depth(p, q0, opts.refute_fuel),
            search,
        }),
    }
}

fn checked(p: &ProofProblem, cert: &ProofCertificate) -> Result<(), ProofError> {
    verify_certificate(p, cert)
        .map_err(|vs| ProofError::Unverified(vs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")))
}

/// The smallest level `n <= max_n` at which the normal form has no run
/// from `q0`.
pub fn refute_by_depth(p: &ProofProblem, q0: StateId, max_n: usize) -> Option<usize> {
    let source = Normalizer::new(p.graph())
        .expect("problem graph is closed and ground")
        .source();
    RunSearch::new(p.automaton(), &source).first_failing_level(q0, max_n)
}
