//! Workloads shared by the benchmarks.

use hors_core::automaton::lift_delays;
use hors_core::automaton::samples::even_chains;
use hors_core::scheme::samples::{DOUBLING_CHAINS, FIXPOINT_IDENTITY, GROWING_CHAINS};
use hors_core::semantics::DEFAULT_CAP;
use hors_core::{parse_scheme, to_lambda_graph, ProofProblem, RegularLambdaGraph, StateId};

pub fn graph(text: &str) -> RegularLambdaGraph {
    to_lambda_graph(&parse_scheme(text).expect("workload parses")).expect("workload is well formed")
}

/// Like the doubling chains, but each step applies `W` `k` times, so the
/// chains grow by a factor `2^k`.
pub fn nested_doubling(k: usize) -> String {
    let mut arg = String::from("phi");
    for _ in 0..k {
        arg = format!("(W {arg})");
    }
    format!(
        "%terminals f:2 g:1 a:0
%nonterminals S:o F:(o->o)->o W:(o->o)->o->o
%start S
S = F (W g).
F phi = f (phi a) (F {arg}).
W phi x = phi (phi x).
"
    )
}

pub struct Workload {
    pub name: &'static str,
    pub problem: ProofProblem,
    pub start: StateId,
}

/// The shipped schemes against the even-chains automaton.
pub fn workloads() -> Vec<Workload> {
    let a = lift_delays(&even_chains()).expect("even chains has no delays");
    [
        ("growing", GROWING_CHAINS.to_string()),
        ("doubling", DOUBLING_CHAINS.to_string()),
        ("yi", FIXPOINT_IDENTITY.to_string()),
        ("doubling-4", nested_doubling(4)),
    ]
    .into_iter()
    .map(|(name, text)| {
        let problem = ProofProblem::new(&graph(&text), &a, DEFAULT_CAP).expect("workload is closed and ground");
        let start = problem.state("q2").expect("even chains has q2");
        Workload { name, problem, start }
    })
    .collect()
}
