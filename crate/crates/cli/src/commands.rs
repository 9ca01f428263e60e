use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use hors_core::automaton::{
    intersection, lift_ag, lift_ax, lift_delays, lift_eg, lift_ex, project_automaton, run_up_to, union_many,
};
use hors_core::ctl::{compile, compiled_state_count, parse_formula};
use hors_core::proof::{DecideOptions, Engine, GoalOptions, ProofError};
use hors_core::semantics::{DEFAULT_CAP, MAX_STATES};
use hors_core::term::Projection;
use hors_core::{
    decide, erase_delays, expand_prefix, parse_scheme, to_lambda_graph, verify_certificate, Normalizer,
    ProofCertificate, ProofProblem, RankedAlphabet, RegularLambdaGraph, StateId, TrivialAutomaton, Verdict,
};

use crate::{AutomatonOp, CheckArgs, CtlArgs, EngineArg, NormalizeArgs, OracleArgs, Output, Status, VerifyArgs};

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_graph(path: &Path) -> Result<RegularLambdaGraph> {
    let text = read(path)?;
    let scheme = parse_scheme(&text).map_err(|e| anyhow!("{}:{e}", path.display()))?;
    to_lambda_graph(&scheme).map_err(|es| {
        let lines: Vec<String> = es.iter().map(|e| format!("{}: {e}", path.display())).collect();
        anyhow!("{}", lines.join("\n"))
    })
}

fn load_automaton(path: &Path) -> Result<TrivialAutomaton> {
    let text = read(path)?;
    TrivialAutomaton::parse(&text).map_err(|e| anyhow!("{}:{e}", path.display()))
}

/// Automata are written over the plain terminals; the delays follow the
/// state they are read in.
fn with_delays(a: TrivialAutomaton) -> Result<TrivialAutomaton> {
    if a.alphabet().has_delays() {
        Ok(a)
    } else {
        Ok(lift_delays(&a)?)
    }
}

fn start_state(a: &TrivialAutomaton, name: Option<&str>) -> Result<StateId> {
    match name {
        Some(n) => Ok(a.state(n)?),
        None => a
            .initial()
            .first()
            .copied()
            .ok_or_else(|| anyhow!("automaton has no initial state")),
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn shorten(s: &str, max: usize) -> String {
    match s.char_indices().nth(max) {
        Some((i, _)) => format!("{} ...", &s[..i]),
        None => s.to_string(),
    }
}

fn write_out(out: &Output, text: &str) -> Result<()> {
    match &out.output {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn compile_formula(text: &str, alphabet: &RankedAlphabet) -> Result<TrivialAutomaton> {
    let phi = parse_formula(text, alphabet).map_err(|e| anyhow!("formula:{e}"))?;
    let n = compiled_state_count(&phi, alphabet);
    if n > MAX_STATES as u128 {
        bail!("formula compiles to {n} states, more than the {MAX_STATES} supported");
    }
    Ok(compile(&phi, alphabet)?)
}

pub fn check(args: CheckArgs) -> Result<Status> {
    let g = load_graph(&args.scheme)?;
    let (base, source) = match (&args.automaton, &args.ctl) {
        (Some(p), _) => (load_automaton(p)?, stem(p)),
        (None, Some(f)) => (compile_formula(f, g.alphabet())?, format!("ctl {f}")),
        (None, None) => bail!("one of --automaton and --ctl is required"),
    };
    let q0 = start_state(&base, args.state.as_deref())?;
    let state = base.state_name(q0).to_string();
    let (base, _) = base.reachable_from(q0);
    let p = ProofProblem::new(&g, &with_delays(base)?, DEFAULT_CAP)?;
    let q0 = p.state(&state)?;
    let opts = DecideOptions {
        engine: match args.engine {
            EngineArg::Exact => Engine::Exact,
            EngineArg::Goal => Engine::Goal,
            EngineArg::Auto => Engine::Auto,
        },
        refute_fuel: args.refute_fuel,
        goal: GoalOptions {
            max_goals: args.max_goals,
            ..GoalOptions::default()
        },
        ..DecideOptions::default()
    };
    let verdict = match decide(&p, q0, &opts) {
        Ok(v) => v,
        Err(
            e @ (ProofError::Semantics(hors_core::SemanticsError::TooLarge(_))
            | ProofError::JudgmentBudget(_)
            | ProofError::Unverified(_)),
        ) => {
            println!("UNKNOWN");
            println!("{e}");
            return Ok(Status::Inconclusive);
        }
        Err(e) => return Err(e.into()),
    };
    match verdict {
        Verdict::Yes {
            mut certificate,
            engine,
        } => {
            println!("YES");
            println!("engine: {}", if engine == Engine::Exact { "exact" } else { "goal" });
            println!("entries: {}", certificate.entries.len());
            if let Some(out) = &args.certificate {
                certificate.scheme = stem(&args.scheme);
                certificate.automaton = source;
                fs::write(out, certificate.to_text(&p)).with_context(|| format!("cannot write {}", out.display()))?;
                println!("certificate: {}", out.display());
            }
            Ok(Status::Yes)
        }
        Verdict::No { refutation } => {
            println!("NO");
            match refutation {
                Some(n) => println!("no run from {state} at level {n}"),
                None => println!("no proof exists; no failing level within {}", args.refute_fuel),
            }
            Ok(Status::No)
        }
        Verdict::Exhausted { refutation, search } => {
            println!("{}", if refutation.is_some() { "NO" } else { "UNKNOWN" });
            println!(
                "goal search exhausted after {} goals{}",
                search.goals,
                if search.budget_hit { " (budget reached)" } else { "" }
            );
            for f in &search.failures {
                let line = format!(
                    "{} : {} clause: {}",
                    p.display_judgment(&f.judgment),
                    f.clause,
                    f.reason
                );
                println!("  {}", shorten(&line, 160));
            }
            match refutation {
                Some(n) => {
                    println!("no run from {state} at level {n}");
                    Ok(Status::No)
                }
                None => {
                    println!("no failing level within {}", args.refute_fuel);
                    Ok(Status::Inconclusive)
                }
            }
        }
    }
}

pub fn normalize(args: NormalizeArgs) -> Result<Status> {
    if args.depth == 0 {
        bail!("--depth must be at least 1");
    }
    let g = load_graph(&args.scheme)?;
    let source = Normalizer::new(&g)?.source();
    if args.keep_delays {
        println!("{}", expand_prefix(&source, args.depth - 1).render());
        return Ok(Status::Yes);
    }
    match erase_delays(&source, args.depth - 1, args.fuel) {
        Ok(t) => {
            println!("{}", t.render());
            Ok(Status::Yes)
        }
        Err(t) => {
            println!("timeout: {t}");
            Ok(Status::Inconclusive)
        }
    }
}

pub fn automaton(op: AutomatonOp) -> Result<Status> {
    let (result, out) = match op {
        AutomatonOp::Union(m) => {
            let parts = m.inputs.iter().map(|p| load_automaton(p)).collect::<Result<Vec<_>>>()?;
            (union_many(&parts)?, m.out)
        }
        AutomatonOp::Intersect(t) => (
            intersection(&load_automaton(&t.left)?, &load_automaton(&t.right)?)?,
            t.out,
        ),
        AutomatonOp::Project(p) => {
            let a = load_automaton(&p.input)?;
            let target = RankedAlphabet::parse_declaration(&p.to, 1).map_err(|e| anyhow!("--to:{e}"))?;
            let pairs = p
                .map
                .iter()
                .map(|m| m.split_once('=').map(|(a, b)| (a.trim(), b.trim())))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| anyhow!("--map entries are written from=to"))?;
            let pi = Projection::new(a.alphabet(), &target, &pairs)?;
            (project_automaton(&a, &pi)?, p.out)
        }
        AutomatonOp::Ex(o) => (lift_ex(&load_automaton(&o.input)?), o.out),
        AutomatonOp::Ax(o) => (lift_ax(&load_automaton(&o.input)?), o.out),
        AutomatonOp::Eg(o) => (lift_eg(&load_automaton(&o.input)?), o.out),
        AutomatonOp::Ag(o) => (lift_ag(&load_automaton(&o.input)?), o.out),
        AutomatonOp::LiftDelays(o) => (lift_delays(&load_automaton(&o.input)?)?, o.out),
    };
    write_out(&out, &result.to_text())?;
    if out.output.is_some() {
        println!("{} states", result.state_count());
    }
    Ok(Status::Yes)
}

pub fn ctl(args: CtlArgs) -> Result<Status> {
    let alphabet = match (&args.terminals, &args.scheme) {
        (Some(t), _) => RankedAlphabet::parse_declaration(t, 1).map_err(|e| anyhow!("--terminals:{e}"))?,
        (None, Some(p)) => load_graph(p)?.alphabet().clone(),
        (None, None) => bail!("one of --terminals and --scheme is required"),
    };
    let a = compile_formula(&args.formula, &alphabet)?;
    write_out(&args.out, &a.to_text())?;
    if args.out.output.is_some() {
        println!("{} states", a.state_count());
    }
    Ok(Status::Yes)
}

pub fn oracle(args: OracleArgs) -> Result<Status> {
    let g = load_graph(&args.scheme)?;
    let a = load_automaton(&args.automaton)?;
    let source = Normalizer::new(&g)?.source();
    let report = |a: &TrivialAutomaton, found: Option<String>| -> Result<Status> {
        let q0 = start_state(a, args.state.as_deref())?;
        match found {
            Some(run) => {
                println!("run up to level {} from {}", args.level, a.state_name(q0));
                print!("{run}");
                Ok(Status::Yes)
            }
            None => {
                println!("no run");
                Ok(Status::No)
            }
        }
    };
    if args.erase {
        let tree = match erase_delays(&source, args.level, args.fuel) {
            Ok(t) => t,
            Err(t) => {
                println!("timeout: {t}");
                return Ok(Status::Inconclusive);
            }
        };
        let a = a.over_alphabet(&tree.alphabet().clone())?;
        let q0 = start_state(&a, args.state.as_deref())?;
        let run = run_up_to(&a, &tree, args.level, q0).map(|r| r.render(&a, &tree, args.limit));
        report(&a, run)
    } else {
        let a = with_delays(a)?.over_alphabet(hors_core::TreeAccess::alphabet(&source))?;
        let q0 = start_state(&a, args.state.as_deref())?;
        let run = run_up_to(&a, &source, args.level, q0).map(|r| r.render(&a, &source, args.limit));
        report(&a, run)
    }
}

pub fn verify(args: VerifyArgs) -> Result<Status> {
    let g = load_graph(&args.scheme)?;
    let text = read(&args.certificate)?;
    // certificates are stated over the states reachable from their start
    let a = load_automaton(&args.automaton)?;
    let state = text.lines().find_map(|l| l.strip_prefix("%state ")).map(str::trim);
    let (a, _) = a.reachable_from(start_state(&a, state)?);
    let p = ProofProblem::new(&g, &with_delays(a)?, DEFAULT_CAP)?;
    let cert = ProofCertificate::parse(&text, &p).map_err(|e| anyhow!("{}:{e}", args.certificate.display()))?;
    match verify_certificate(&p, &cert) {
        Ok(()) => {
            println!("ok");
            Ok(Status::Yes)
        }
        Err(vs) => {
            println!("rejected: {} violations", vs.len());
            for v in &vs {
                println!("  {v}");
            }
            Ok(Status::No)
        }
    }
}
