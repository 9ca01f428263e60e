//! Model checking of higher-order recursion schemes against trivial tree
//! automata, by continuous normalization and a finite semantics.

pub mod alphabet;
pub mod automaton;
pub mod ctl;
pub mod graph;
pub mod normalize;
pub mod parse;
pub mod proof;
pub mod scheme;
pub mod semantics;
pub mod term;
pub mod types;

pub use alphabet::{AlphabetError, RankedAlphabet, Symbol};
pub use automaton::{StateId, TrivialAutomaton};
pub use graph::{GraphBuilder, NodeKind, NodeRef, RegularLambdaGraph, VarId};
pub use normalize::{cn, erase_delays, justification_check, Normalizer};
pub use parse::ParseError;
pub use proof::{
    decide, gfp_exact, goal_search, refute_by_depth, verify_certificate, ProofCertificate, ProofProblem, Verdict,
};
pub use scheme::{parse_scheme, to_lambda_graph, RecursionScheme};
pub use semantics::{domain_size, SemContext, SemanticValue, Semantics, SemanticsError, StateSet};
pub use term::{expand_prefix, similar_up_to, PrefixTree, TermSource, TreeAccess};
pub use types::SimpleType;
