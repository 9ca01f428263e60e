//! The acceptance checks, one line per criterion. Exits non-zero if any
//! criterion fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use hors_core::automaton::samples::even_chains;
use hors_core::automaton::{
    accepts_complete, accepts_up_to, intersection, lasso_accepts, lift_ag, lift_ax, lift_delays, lift_eg, lift_ex,
    project_automaton, pump, union, RunSearch,
};
use hors_core::proof::{DecideOptions, Engine};
use hors_core::scheme::samples::{DOUBLING_CHAINS, FIXPOINT_IDENTITY, GROWING_CHAINS};
use hors_core::semantics::DEFAULT_CAP;
use hors_core::term::{lasso_word, samples as trees, Projection};
use hors_core::{
    cn, decide, erase_delays, expand_prefix, justification_check, refute_by_depth, similar_up_to, verify_certificate,
    PrefixTree, ProofProblem, RankedAlphabet, SemanticValue, Semantics, SimpleType, StateId, Symbol, TrivialAutomaton,
    Verdict,
};
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(t: Instant, limit: Duration) -> Result<(), String> {
    ensure(t.elapsed() < limit, || {
        format!("took {:.2?}, limit {limit:?}", t.elapsed())
    })
}

fn even_sigma() -> TrivialAutomaton {
    lift_delays(&even_chains()).unwrap()
}

fn problem(scheme: &str, a: &TrivialAutomaton) -> ProofProblem {
    ProofProblem::new(&graph_of(scheme), a, DEFAULT_CAP).unwrap()
}

/// Run up to level `n` on an expanded prefix, by plain recursion.
fn prefix_run(a: &TrivialAutomaton, t: &PrefixTree, i: usize, n: usize, q: StateId) -> bool {
    if n == 0 {
        return true;
    }
    let node = &t.nodes()[i];
    let Some(kids) = &node.children else {
        panic!("prefix too shallow")
    };
    a.delta(q, node.label)
        .iter()
        .any(|tuple| tuple.iter().zip(kids).all(|(&s, &c)| prefix_run(a, t, c, n - 1, s)))
}

fn levels() -> Outcome {
    let t = Instant::now();
    let erased = erase_delays(&cn(&graph_of(GROWING_CHAINS)).unwrap(), 8, 10_000).map_err(|e| e.to_string())?;
    ensure(similar_up_to(&erased, &trees::growing_chains(), 9), || {
        "erased tree differs from the chains".into()
    })?;
    let a = even_chains().over_alphabet(erased.alphabet()).unwrap();
    let q2 = a.state("q2").unwrap();
    let got: Vec<bool> = (0..=6).map(|n| accepts_up_to(&a, &erased, n)).collect();
    let oracle: Vec<bool> = (0..=6).map(|n| prefix_run(&a, &erased, 0, n, q2)).collect();
    ensure(got == oracle, || format!("library {got:?}, oracle {oracle:?}"))?;
    ensure(got[3] && !got[4], || format!("levels {got:?}"))?;
    within(t, Duration::from_secs(1))?;
    Ok(format!("run up to level 3, none at 4 ({:.0?})", t.elapsed()))
}

fn verdicts() -> Outcome {
    let a = even_sigma();
    let t = Instant::now();
    let p = problem(DOUBLING_CHAINS, &a);
    let q2 = p.state("q2").unwrap();
    let v = decide(&p, q2, &DecideOptions::default()).map_err(|e| e.to_string())?;
    let Verdict::Yes { certificate, .. } = v else {
        return Err(format!("doubling: {v:?}"));
    };
    ensure(verify_certificate(&p, &certificate).is_ok(), || {
        "certificate rejected".into()
    })?;
    let text = certificate.to_text(&p);
    let root = certificate
        .entries
        .iter()
        .find(|e| e.judgment.node == certificate.root)
        .ok_or("no root entry")?;
    ensure(
        root.judgment
            .value
            .as_base()
            .map(|s| s.contains(q2) && s.iter().count() == 1)
            == Some(true),
        || "root value is not {q2}".into(),
    )?;
    ensure(text.contains("| phi#0=id |- {q2}"), || "no entry with phi = id".into())?;
    within(t, Duration::from_secs(10))?;
    let doubling = t.elapsed();

    let t = Instant::now();
    let p = problem(GROWING_CHAINS, &a);
    let v = decide(&p, p.state("q2").unwrap(), &DecideOptions::default()).map_err(|e| e.to_string())?;
    ensure(v.answer() == Some(false), || format!("growing: {v:?}"))?;
    within(t, Duration::from_secs(10))?;
    Ok(format!(
        "doubling YES with {} entries ({doubling:.0?}), growing NO ({:.0?})",
        certificate.entries.len(),
        t.elapsed()
    ))
}

fn divergent() -> Outcome {
    let g = graph_of(FIXPOINT_IDENTITY);
    let source = cn(&g).unwrap();
    for k in 1..=16 {
        let got = expand_prefix(&source, 2 * k - 1).render();
        let want = format!("{}...{}", "R(b(".repeat(k), ")".repeat(2 * k));
        ensure(got == want, || format!("k = {k}: {got}"))?;
    }
    for fuel in [1, 10, 100, 1_000, 10_000] {
        ensure(erase_delays(&source, 0, fuel).is_err(), || {
            format!("a terminal within fuel {fuel}")
        })?;
    }
    let p = problem(FIXPOINT_IDENTITY, &even_sigma());
    let v = decide(&p, p.state("q2").unwrap(), &DecideOptions::default()).map_err(|e| e.to_string())?;
    ensure(v.is_yes(), || format!("{v:?}"))?;
    Ok("(Rb)^k for k <= 16, erasure times out up to fuel 10^4, YES".into())
}

/// Delay chains of a prefix, checked directly: every chain from the root
/// or a terminal's child to the next terminal has `#R = #b + arity`.
fn count_chains(t: &PrefixTree) -> Result<usize, String> {
    let sigma = t.alphabet();
    let mut chains = 0;
    let mut starts = vec![0usize];
    while let Some(mut i) = starts.pop() {
        let (mut r, mut b) = (0, 0);
        loop {
            let n = &t.nodes()[i];
            let name = sigma.name(n.label);
            match name {
                "R" => r += 1,
                "b" => b += 1,
                _ => {
                    chains += 1;
                    if r != b + sigma.arity(n.label) {
                        return Err(format!("{name} after {r} R and {b} b"));
                    }
                    starts.extend(n.children.iter().flatten().copied());
                    break;
                }
            }
            // a chain cut by the frontier is not maximal
            let Some(kids) = &n.children else { break };
            i = kids[0];
        }
    }
    Ok(chains)
}

fn justification() -> Outcome {
    let mut rng = rng(4);
    let mut chains = 0;
    for _ in 0..100 {
        let text = random_productive_scheme(&mut rng, SchemeShape::default());
        let prefix = expand_prefix(&cn(&graph_of(&text)).unwrap(), 20);
        let n = justification_check(&prefix, 0).map_err(|v| format!("{v:?}\n{text}"))?;
        let m = count_chains(&prefix).map_err(|e| format!("{e}\n{text}"))?;
        ensure(n == m, || format!("library counted {n} chains, oracle {m}\n{text}"))?;
        chains += n;
    }
    Ok(format!("{chains} chains in 100 schemes, no violation"))
}

fn head_reduction() -> Outcome {
    let mut rng = rng(5);
    let mut schemes: Vec<String> = [GROWING_CHAINS, DOUBLING_CHAINS]
        .iter()
        .map(|s| s.to_string())
        .collect();
    schemes.extend((0..50).map(|_| random_productive_scheme(&mut rng, SchemeShape::default())));
    let mut terminals = 0;
    for text in &schemes {
        let g = graph_of(text);
        let source = cn(&g).unwrap();
        terminals += compare_head_reduction(&g, &source, 6, 100_000).map_err(|e| format!("{e}\n{text}"))?;
    }
    Ok(format!("{terminals} terminals in {} schemes agree", schemes.len()))
}

fn closures() -> Outcome {
    let t = Instant::now();
    let mut rng = rng(6);
    let mut checks = 0usize;
    let mut accepted = 0usize;
    let mut check = |what: &str, got: bool, want: bool, tree: &Tree, sigma: &RankedAlphabet| {
        checks += 1;
        accepted += got as usize;
        ensure(got == want, || {
            format!("{what} on {}: constructed {got}, oracle {want}", tree.render(sigma))
        })
    };
    let constructions = ["union", "intersection", "projection", "EX", "AX", "AG", "EG"];
    for &c in &constructions {
        for _ in 0..30 {
            let sigma = random_alphabet(&mut rng);
            let (na, nb) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
            let a = random_automaton(&mut rng, &sigma, na, 0.4);
            let b = random_automaton(&mut rng, &sigma, nb, 0.4);
            // target alphabet: one symbol per arity
            let mut arities: Vec<usize> = sigma.symbols().map(|s| sigma.arity(s)).collect();
            arities.sort();
            arities.dedup();
            let decl: Vec<String> = arities.iter().map(|k| format!("t{k}:{k}")).collect();
            let target = RankedAlphabet::parse_declaration(&decl.join(" "), 1).unwrap();
            let names: Vec<(String, String)> = sigma
                .symbols()
                .map(|s| (sigma.name(s).to_string(), format!("t{}", sigma.arity(s))))
                .collect();
            let pairs: Vec<(&str, &str)> = names.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
            let pi = Projection::new(&sigma, &target, &pairs).unwrap();
            let built = match c {
                "union" => union(&a, &b).unwrap(),
                "intersection" => intersection(&a, &b).unwrap(),
                "projection" => project_automaton(&a, &pi).unwrap(),
                "EX" => lift_ex(&a),
                "AX" => lift_ax(&a),
                "AG" => lift_ag(&a),
                _ => lift_eg(&a),
            };
            for _ in 0..200 {
                if c == "projection" {
                    let tree = random_tree(&mut rng, &target, 4);
                    let got = accepts_complete(&built, &tree.source(&target));
                    check(c, got, projection_oracle(&a, &pi, &tree), &tree, &target)?;
                    continue;
                }
                let tree = random_tree(&mut rng, &sigma, 4);
                let got = accepts_complete(&built, &tree.source(&sigma));
                let acc = |t: &Tree| accepts_tree(&a, t);
                let want = match c {
                    "union" => acc(&tree) || accepts_tree(&b, &tree),
                    "intersection" => acc(&tree) && accepts_tree(&b, &tree),
                    "EX" => tree.kids.iter().any(acc),
                    "AX" => tree.kids.iter().all(acc),
                    "AG" => tree.subtrees().into_iter().all(acc),
                    _ => eg_oracle(&a, &tree),
                };
                if tree.size() <= 8 && a.state_count().pow(tree.size() as u32) <= 1 << 16 {
                    ensure(accepts_by_labelings(&a, &tree) == acc(&tree), || {
                        "oracles disagree".into()
                    })?;
                }
                check(c, got, want, &tree, &sigma)?;
            }
        }
    }
    within(t, Duration::from_secs(60))?;
    Ok(format!(
        "{checks} checks over {} constructions, {accepted} accepted, no mismatch ({:.1?})",
        constructions.len(),
        t.elapsed()
    ))
}

/// Some subtree chain from the root to a leaf with every subtree accepted.
fn eg_oracle(a: &TrivialAutomaton, t: &Tree) -> bool {
    accepts_tree(a, t) && (t.kids.is_empty() || t.kids.iter().any(|k| eg_oracle(a, k)))
}

/// Some preimage of the tree is accepted, by enumerating preimages when
/// there are few and by dynamic programming otherwise.
fn projection_oracle(a: &TrivialAutomaton, pi: &Projection, t: &Tree) -> bool {
    let sigma = pi.source();
    let pre = |g: Symbol| -> Vec<Symbol> { sigma.symbols().filter(|&s| pi.apply(s) == g).collect() };
    fn preimages(t: &Tree, pre: &dyn Fn(Symbol) -> Vec<Symbol>, limit: usize) -> Option<Vec<Tree>> {
        let mut out: Vec<Tree> = pre(t.label)
            .into_iter()
            .map(|s| Tree {
                label: s,
                kids: Vec::new(),
            })
            .collect();
        for k in &t.kids {
            let ks = preimages(k, pre, limit)?;
            out = out
                .into_iter()
                .flat_map(|p| {
                    ks.iter().map(move |k| {
                        let mut p = p.clone();
                        p.kids.push(k.clone());
                        p
                    })
                })
                .collect();
            if out.len() > limit {
                return None;
            }
        }
        Some(out)
    }
    fn dp(a: &TrivialAutomaton, t: &Tree, pre: &dyn Fn(Symbol) -> Vec<Symbol>) -> Vec<bool> {
        let kids: Vec<Vec<bool>> = t.kids.iter().map(|k| dp(a, k, pre)).collect();
        a.states()
            .map(|q| {
                pre(t.label).into_iter().any(|s| {
                    a.delta(q, s)
                        .iter()
                        .any(|tuple| tuple.iter().zip(&kids).all(|(r, k)| k[r.index()]))
                })
            })
            .collect()
    }
    match preimages(t, &pre, 512) {
        Some(all) => all.iter().any(|p| accepts_tree(a, p)),
        None => {
            let acc = dp(a, t, &pre);
            a.initial().iter().any(|q| acc[q.index()])
        }
    }
}

fn pumping() -> Outcome {
    let mut rng = rng(7);
    let sigma = RankedAlphabet::parse_declaration("a:1 b:1", 1).unwrap();
    let (la, lb) = (sigma.symbol("a").unwrap(), sigma.symbol("b").unwrap());
    let (mut pumped, mut repeated) = (0, 0);
    for _ in 0..100 {
        let states = rng.gen_range(1..=4);
        let a = random_automaton(&mut rng, &sigma, states, 0.5);
        let n = a.state_count() + 1;
        // a random accepted prefix, as a lasso, if one is found
        for _ in 0..20 {
            let letters = [la, lb];
            let u: Vec<Symbol> = (0..rng.gen_range(0..4)).map(|_| letters[rng.gen_range(0..2)]).collect();
            let v: Vec<Symbol> = (0..rng.gen_range(1..4)).map(|_| letters[rng.gen_range(0..2)]).collect();
            let w = lasso_word(&sigma, &u, &v).unwrap();
            if !accepts_up_to(&a, &w, n) {
                continue;
            }
            let (pu, pv) = pump(&a, &w).map_err(|e| e.to_string())?;
            ensure(pu.len() + pv.len() <= n && !pv.is_empty(), || {
                format!("bad split {pu:?} {pv:?}")
            })?;
            ensure(lasso_accepts(&a, &pu, &pv), || format!("{pu:?} {pv:?} not accepted"))?;
            ensure(lasso_oracle(&a, &pu, &pv), || format!("oracle rejects {pu:?} {pv:?}"))?;
            let word: Vec<Symbol> = u.iter().chain(v.iter().cycle()).take(n).copied().collect();
            let split: Vec<Symbol> = pu.iter().chain(pv.iter()).copied().collect();
            ensure(word.starts_with(&split), || "split is not a prefix of the word".into())?;
            pumped += 1;
            break;
        }
        // a^(k+1) b a^ω accepted implies a^ω accepted, for k = |Q|
        let u: Vec<Symbol> = std::iter::repeat_n(la, a.state_count() + 1).chain([lb]).collect();
        let before = lasso_accepts(&a, &u, &[la]);
        ensure(before == lasso_oracle(&a, &u, &[la]), || {
            "lasso decision differs from the oracle".into()
        })?;
        if before {
            repeated += 1;
            ensure(lasso_accepts(&a, &[], &[la]), || "a^ω rejected".into())?;
        }
    }
    Ok(format!(
        "{pumped} prefixes pumped, {repeated} a^(k+1) b a^ω instances, no violation"
    ))
}

fn leq_matrix(sem: &Semantics, vals: &[SemanticValue], ty: &SimpleType) -> Vec<Vec<bool>> {
    vals.iter()
        .map(|a| vals.iter().map(|b| sem.leq(a, b, ty)).collect())
        .collect()
}

fn order_laws(sem: &Semantics, ty: &SimpleType) -> Result<usize, String> {
    let vals = sem.enumerate(ty).map_err(|e| e.to_string())?;
    let m = leq_matrix(sem, &vals, ty);
    let n = vals.len();
    for i in 0..n {
        ensure(m[i][i], || format!("{ty}: not reflexive"))?;
        for j in 0..n {
            ensure(!(m[i][j] && m[j][i]) || i == j, || format!("{ty}: not antisymmetric"))?;
            let join = sem.join(&vals[i], &vals[j], ty);
            let ji = vals.iter().position(|v| *v == join).ok_or("join outside the domain")?;
            for k in 0..n {
                ensure(!(m[i][j] && m[j][k]) || m[i][k], || format!("{ty}: not transitive"))?;
                let upper = m[i][k] && m[j][k];
                ensure(upper == m[ji][k], || format!("{ty}: join is not the least upper bound"))?;
            }
        }
    }
    Ok(n)
}

fn semantics() -> Outcome {
    let o = SimpleType::Base;
    let oo = SimpleType::first_order(1);
    let two = Semantics::new(vec!["p".into(), "q".into()], DEFAULT_CAP).unwrap();
    let sizes = (two.domain_size(&o), two.domain_size(&oo));
    ensure(sizes == (Some(4), Some(256)), || format!("domain sizes {sizes:?}"))?;

    let even = even_sigma();
    let sem = Semantics::for_automaton(&even, DEFAULT_CAP).unwrap();
    for ty in [&o, &oo] {
        for f in sem.enumerate(ty).unwrap() {
            let r = sem.lift_r(&even, &f, ty).unwrap();
            let b = sem.lift_beta(&even, &f, ty).unwrap();
            ensure(r == f && b == f, || format!("lifting moves {}", sem.display(&f, ty)))?;
        }
    }

    let mut checked = 0;
    let one = Semantics::new(vec!["p".into()], DEFAULT_CAP).unwrap();
    for (sem, ty) in [
        (&one, &o),
        (&one, &oo),
        (&one, &SimpleType::first_order(2)),
        (&two, &o),
        (&two, &oo),
    ] {
        checked += order_laws(sem, ty)?;
    }

    // lifting monotonicity for every relation on R at two states
    let mut lifts = 0;
    for rel in 0..16u32 {
        let mut text = String::from("%terminals a:0 R:1 b:1\n%states p q\n%initial p\np a -> ()\nq a -> ()\n");
        for (i, (from, to)) in [("p", "p"), ("p", "q"), ("q", "p"), ("q", "q")].iter().enumerate() {
            if rel >> i & 1 == 1 {
                text.push_str(&format!("{from} R -> ({to})\n"));
            }
        }
        text.push_str("p b -> (p)\nq b -> (q)\n");
        let a = TrivialAutomaton::parse(&text).unwrap();
        for ty in [&o, &oo] {
            let vals = two.enumerate(ty).unwrap();
            let lifted: Vec<SemanticValue> = vals.iter().map(|f| two.lift_r(&a, f, ty).unwrap()).collect();
            let m = leq_matrix(&two, &vals, ty);
            let ml = leq_matrix(&two, &lifted, ty);
            for i in 0..vals.len() {
                for j in 0..vals.len() {
                    ensure(!m[i][j] || ml[i][j], || {
                        format!("lifting along relation {rel} is not monotone")
                    })?;
                }
            }
            lifts += vals.len();
        }
    }
    Ok(format!(
        "sizes 4 and 256, lifts are identities, order laws on {checked} values, {lifts} monotone lifts"
    ))
}

fn cross_validation() -> Outcome {
    let mut rng = rng(9);
    let mut pairs: Vec<(String, TrivialAutomaton)> = [GROWING_CHAINS, DOUBLING_CHAINS, FIXPOINT_IDENTITY]
        .iter()
        .map(|s| (s.to_string(), even_sigma()))
        .collect();
    let root_f = TrivialAutomaton::parse(include_str!("../../../data/root-f.ta")).unwrap();
    pairs.push((GROWING_CHAINS.to_string(), lift_delays(&root_f).unwrap()));
    pairs.push((DOUBLING_CHAINS.to_string(), lift_delays(&root_f).unwrap()));
    for _ in 0..50 {
        let text = random_productive_scheme(
            &mut rng,
            SchemeShape {
                max_rules: 3,
                ..SchemeShape::default()
            },
        );
        let sigma = graph_of(&text).alphabet().clone();
        let states = rng.gen_range(1..=3);
        let a = random_automaton(&mut rng, &sigma, states, 0.6);
        pairs.push((text, lift_delays(&a).unwrap()));
    }
    let (mut yes, mut no, mut agree, mut skipped) = (0, 0, 0, 0);
    let exact = DecideOptions {
        engine: Engine::Exact,
        ..DecideOptions::default()
    };
    let goal = DecideOptions {
        engine: Engine::Goal,
        ..DecideOptions::default()
    };
    for (text, a) in &pairs {
        let p = problem(text, a);
        for q in p.automaton().initial().to_vec() {
            let show = || format!("state {}\n{text}{}", p.automaton().state_name(q), a.to_text());
            let Ok(ve) = decide(&p, q, &exact) else {
                skipped += 1;
                continue;
            };
            let source = cn(p.graph()).unwrap();
            match ve.answer() {
                Some(true) => {
                    yes += 1;
                    let fail = RunSearch::new(p.automaton(), &source).first_failing_level(q, 40);
                    ensure(fail.is_none(), || {
                        format!("YES but no run at level {fail:?}: {}", show())
                    })?;
                }
                _ => {
                    no += 1;
                    ensure(refute_by_depth(&p, q, 64).is_some(), || {
                        format!("NO without refutation: {}", show())
                    })?;
                }
            }
            let vg = decide(&p, q, &goal).map_err(|e| e.to_string())?;
            ensure(vg.answer() == ve.answer(), || {
                format!("exact {:?}, goal {:?}: {}", ve.answer(), vg.answer(), show())
            })?;
            agree += 1;
        }
    }
    Ok(format!(
        "{} pairs: {yes} YES confirmed to level 40, {no} NO refuted, engines agree on {agree}, {skipped} beyond the exact engine",
        pairs.len()
    ))
}

fn continuity() -> Outcome {
    let mut rng = rng(10);
    let mut deeper = 0;
    for i in 0..100 {
        let text = random_productive_scheme(&mut rng, SchemeShape::default());
        let g = graph_of(&text);
        let k = 1 + i % 8;
        let (keep, graft) = graft_pair(&g, k, &mut rng);
        let (c1, c2) = (cn(&keep).unwrap(), cn(&graft).unwrap());
        ensure(similar_up_to(&c1, &c2, k), || {
            format!("outputs differ below level {k}\n{text}")
        })?;
        ensure(similar_up_to(&c1, &cn(&g).unwrap(), 30), || {
            "the unfolded copy changed the output".into()
        })?;
        deeper += !similar_up_to(&c1, &c2, 40) as usize;
    }
    Ok(format!(
        "100 pairs similar to their level, {deeper} of them differ deeper"
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("levels of the growing chains", levels),
        ("end-to-end verdicts", verdicts),
        ("divergent scheme", divergent),
        ("delay justification", justification),
        ("head reduction correspondence", head_reduction),
        ("closure constructions", closures),
        ("pumping", pumping),
        ("finite semantics", semantics),
        ("cross-validation", cross_validation),
        ("uniform continuity", continuity),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or(e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        match outcome {
            Ok(msg) => println!("criterion {}: PASS {name}: {msg} [{:.1?}]", i + 1, t.elapsed()),
            Err(msg) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {msg} [{:.1?}]", i + 1, t.elapsed());
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
