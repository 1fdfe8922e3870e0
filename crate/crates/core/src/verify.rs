//! Exhaustive checks of the constructions at desk scale.
//!
//! Each check returns a one-line summary or a counterexample. Bounds are
//! the number of events of the enumerated traces; `Config::bound` caps all
//! of them at once.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::time::{Duration, Instant};

use crate::alphabet::{ActionId, DistributedAlphabet};
use crate::atm::{wreath_support, WreathAtm, WreathElem};
use crate::automaton::AsyncAutomaton;
use crate::cascade::{
    local_cascade, local_cascade_run, simulate_global_by_local, wpp_decompose, wpp_inverse, Cascade, CascadeMode,
    WreathMorphism,
};
use crate::decompose::{acyclic_kr, check_simulation, group_divisions, validate_factors, TraceMorphism};
use crate::fixtures as fx;
use crate::gossip::{gossip_latest, GossipAutomaton, Knowledge};
use crate::loctl::{self, Formula, TraceFormula};
use crate::monoid::holonomy::krohn_rhodes_word;
use crate::monoid::{check_simulation_word, Division, WordMorphism, CLOSURE_LIMIT};
use crate::trace::{enumerate_traces, Trace};
use crate::transducer::{global_transducer, local_transducer, ExtendedAlphabet};

#[derive(Debug, Clone, Copy, Default)]
pub struct Config {
    /// Overrides every trace-length bound when set.
    pub bound: Option<usize>,
}

impl Config {
    fn n(&self, default: usize) -> usize {
        self.bound.unwrap_or(default)
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub id: usize,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub budget: Duration,
}

impl Report {
    pub fn line(&self) -> String {
        let over = if self.elapsed > self.budget { " over budget" } else { "" };
        format!(
            "[{}] {:>2} {}: {} ({:.2}s of {}s{over})",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.detail,
            self.elapsed.as_secs_f64(),
            self.budget.as_secs()
        )
    }
}

type Check = fn(&Config) -> Outcome;
type Outcome = std::result::Result<String, String>;

fn fail<T>(msg: impl Into<String>) -> std::result::Result<T, String> {
    Err(msg.into())
}

fn lib<T>(r: crate::Result<T>) -> std::result::Result<T, String> {
    r.map_err(|e| format!("error: {e}"))
}

fn word(alph: &DistributedAlphabet, t: &Trace) -> String {
    if t.is_empty() {
        "ε".into()
    } else {
        alph.word_to_string(t.labels())
    }
}

pub const CRITERIA: [(usize, &str, u64, Check); 12] = [
    (1, "trace monoid soundness", 10, c1_trace_equality),
    (2, "run linearization invariance", 30, c2_linearizations),
    (3, "transition duality", 30, c3_duality),
    (4, "wreath composition law", 5, c4_wreath_law),
    (5, "support lemma", 5, c5_support),
    (6, "wreath product principle", 60, c6_wpp),
    (7, "local cascade laws", 30, c7_local_cascade),
    (8, "gossip correctness", 60, c8_gossip),
    (9, "global-by-local simulation", 60, c9_global_by_local),
    (10, "acyclic decomposition", 120, c10_acyclic_kr),
    (11, "word decomposition", 30, c11_word_kr),
    (12, "temporal logic compilers", 120, c12_loctl),
];

pub fn run_one(id: usize, cfg: &Config) -> Option<Report> {
    let &(id, title, budget, check) = CRITERIA.iter().find(|c| c.0 == id)?;
    let start = Instant::now();
    let out = check(cfg);
    let elapsed = start.elapsed();
    let (passed, detail) = match out {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    Some(Report {
        id,
        title,
        passed,
        detail,
        elapsed,
        budget: Duration::from_secs(budget),
    })
}

pub fn run_all(cfg: &Config) -> Vec<Report> {
    CRITERIA.iter().filter_map(|c| run_one(c.0, cfg)).collect()
}

// 1 -------------------------------------------------------------------------

/// All words obtained from `w` by swapping adjacent independent letters.
fn swap_class(alph: &DistributedAlphabet, w: &[ActionId]) -> HashSet<Vec<ActionId>> {
    let mut seen: HashSet<Vec<ActionId>> = HashSet::from([w.to_vec()]);
    let mut queue = VecDeque::from([w.to_vec()]);
    while let Some(u) = queue.pop_front() {
        for k in 1..u.len() {
            if alph.independent(u[k - 1], u[k]) {
                let mut v = u.clone();
                v.swap(k - 1, k);
                if seen.insert(v.clone()) {
                    queue.push_back(v);
                }
            }
        }
    }
    seen
}

fn all_words(n: usize, letters: usize) -> Vec<Vec<ActionId>> {
    let mut layer = vec![Vec::new()];
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        layer = layer
            .iter()
            .flat_map(|w| {
                (0..letters).map(move |a| {
                    let mut v: Vec<ActionId> = w.clone();
                    v.push(a);
                    v
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

fn c1_trace_equality(cfg: &Config) -> Outcome {
    let alph = fx::sigma_ex();
    let n = cfg.n(6);
    let words = all_words(n, alph.num_actions());
    let traces: Vec<Trace> = words.iter().map(|w| Trace::from_word(&alph, w)).collect::<crate::Result<_>>().map_err(|e| e.to_string())?;
    let mut pairs = 0usize;
    for (i, w) in words.iter().enumerate() {
        let class = swap_class(&alph, w);
        for (j, v) in words.iter().enumerate() {
            if v.len() != w.len() {
                continue;
            }
            pairs += 1;
            if lib(traces[i].trace_equal(&traces[j]))? != class.contains(v) {
                return fail(format!(
                    "{} vs {}",
                    alph.word_to_string(w),
                    alph.word_to_string(v)
                ));
            }
        }
    }
    Ok(format!("{} words, {pairs} pairs, lengths ≤ {n}", words.len()))
}

// 2, 3 ----------------------------------------------------------------------

fn duality_fixtures() -> Vec<(&'static str, AsyncAutomaton, BTreeSet<usize>)> {
    let u2 = fx::u2_ex();
    let ctr = fx::counter_ex();
    let relay = fx::relay_four();
    let u2_f = [u2.space().encode(&[1, 0, 0])].into();
    let ctr_f = (0..ctr.space().total()).filter(|&g| ctr.space().component(g, 2) == 2).collect();
    let relay_f = (0..relay.space().total()).filter(|&g| relay.space().component(g, 3) == 1).collect();
    vec![("U2[p1]", u2, u2_f), ("counter", ctr, ctr_f), ("relay", relay, relay_f)]
}

fn c2_linearizations(cfg: &Config) -> Outcome {
    let n = cfg.n(5);
    let mut lins = 0usize;
    for (name, a, _) in duality_fixtures() {
        for t in enumerate_traces(a.alphabet(), n) {
            let expect = a.run_final(&t);
            for w in t.linearizations() {
                lins += 1;
                if a.run_word(&w) != expect {
                    return fail(format!("{name}: {} ran differently from {}", a.alphabet().word_to_string(&w), word(a.alphabet(), &t)));
                }
            }
            let run = lib(a.run(&t))?;
            for c in lib(t.configurations())? {
                if run.state_at(&c) != Some(a.run_word(&t.word_of(&c))) {
                    return fail(format!("{name}: configuration state on {}", word(a.alphabet(), &t)));
                }
            }
        }
    }
    Ok(format!("3 automata, {lins} linearizations, ≤ {n} events"))
}

fn c3_duality(cfg: &Config) -> Outcome {
    let n = cfg.n(6);
    let mut count = 0usize;
    for (name, a, finals) in duality_fixtures() {
        for t in enumerate_traces(a.alphabet(), n) {
            count += 1;
            let phi = a.morphism().evaluate(&t);
            if a.accepts(&finals, &t) != finals.contains(&(phi.apply(a.initial() as u32) as usize)) {
                return fail(format!("{name} on {}", word(a.alphabet(), &t)));
            }
        }
    }
    Ok(format!("3 automata, {count} traces, ≤ {n} events"))
}

// 4, 5 ----------------------------------------------------------------------

fn c4_wreath_law(_: &Config) -> Outcome {
    let mut parts = Vec::new();
    for (name, (w, gens)) in [("U2≀U2", fx::u2_wreath_u2()), ("Z2≀Z3", fx::z2_wreath_z3())] {
        let els: Vec<WreathElem> = lib(w.generate(&gens, 10_000))?;
        let flat: Vec<_> = els.iter().map(|e| w.to_transformation(e)).collect();
        for (i, x) in els.iter().enumerate() {
            for (j, y) in els.iter().enumerate() {
                if w.to_transformation(&w.compose(x, y)) != flat[i].then(&flat[j]) {
                    return fail(format!("{name}: elements {i} and {j}"));
                }
            }
        }
        parts.push(format!("{name} {} elements", els.len()));
    }
    Ok(parts.join(", "))
}

fn wreath_fixtures() -> Vec<(&'static str, WreathMorphism)> {
    vec![("U2≀U2", fx::eta_two()), ("Z2≀Z3", fx::eta_group()), ("Σex", fx::eta_ex())]
}

fn c5_support(_: &Config) -> Outcome {
    let mut letters = 0;
    let mut sampled = false;
    for (name, eta) in wreath_fixtures() {
        let alph = eta.alphabet();
        for (a, e) in eta.images().iter().enumerate() {
            letters += 1;
            let r = lib(wreath_support(eta.wreath(), e, alph.loc(a)))?;
            sampled |= r.sampled;
            if !r.holds() {
                return fail(format!("{name}: letter {} {r:?}", alph.action_name(a)));
            }
        }
    }
    Ok(format!(
        "3 morphisms, {letters} letter images{}",
        if sampled { " (sampled)" } else { "" }
    ))
}

// 6 -------------------------------------------------------------------------

fn final_sets(w: &WreathAtm) -> Vec<BTreeSet<(usize, usize)>> {
    let all: Vec<(usize, usize)> = (0..w.left.total())
        .flat_map(|s| (0..w.right.total()).map(move |q| (s, q)))
        .collect();
    if all.len() <= 6 {
        return (0u32..1 << all.len())
            .map(|m| all.iter().enumerate().filter(|(k, _)| m >> k & 1 == 1).map(|(_, p)| *p).collect())
            .collect();
    }
    let mut out = Vec::new();
    for i in 0..all.len() {
        for j in i..all.len() {
            let s: BTreeSet<_> = [all[i], all[j]].into();
            let co: BTreeSet<_> = all.iter().filter(|p| !s.contains(p)).copied().collect();
            out.push(s);
            out.push(co);
        }
    }
    out
}

fn c6_wpp(cfg: &Config) -> Outcome {
    let n = cfg.n(6);
    let mut checks = 0usize;
    for f in fx::wpp_fixtures() {
        let rec = lib(wpp_inverse(&f.automaton, &f.psi, f.q_in, &f.finals))?;
        let ext = lib(ExtendedAlphabet::local_of(&f.automaton))?;
        let oracle = |t: &Trace| -> std::result::Result<bool, String> {
            let x = lib(local_transducer(&f.automaton, &ext, t))?;
            Ok(f.finals.contains(&f.psi.apply_word(f.q_in, x.labels())))
        };
        for t in enumerate_traces(f.automaton.alphabet(), n) {
            checks += 1;
            if rec.accepts(&t) != oracle(&t)? {
                return fail(format!("{}: inverse image on {}", f.name, word(f.automaton.alphabet(), &t)));
            }
        }
        // the fixture must separate traces whatever the bound
        let sample = enumerate_traces(f.automaton.alphabet(), 6);
        let hits = sample.iter().map(&oracle).collect::<std::result::Result<Vec<_>, _>>()?;
        if hits.iter().all(|&h| h) || hits.iter().all(|&h| !h) {
            return fail(format!("{}: language is trivial up to 6 events", f.name));
        }
    }
    let mut unions = 0usize;
    for (name, eta) in wreath_fixtures() {
        let alph = eta.alphabet().clone();
        let traces = enumerate_traces(&alph, n);
        let reached: Vec<(usize, usize)> = traces.iter().map(|t| eta.apply(t, 0, 0)).collect();
        for finals in final_sets(eta.wreath()) {
            unions += 1;
            let d = lib(wpp_decompose(&eta, 0, 0, &finals))?;
            for (t, pair) in traces.iter().zip(&reached) {
                checks += 1;
                if lib(d.accepts(t))? != finals.contains(pair) {
                    return fail(format!("{name}: union for {finals:?} on {}", word(&alph, t)));
                }
            }
        }
    }
    Ok(format!("3 inverse images, {unions} unions over 3 morphisms, {checks} trace checks, ≤ {n} events"))
}

// 7 -------------------------------------------------------------------------

fn c7_local_cascade(cfg: &Config) -> Outcome {
    let n = cfg.n(5);
    let mut count = 0usize;
    for (name, a1) in [("U2", fx::u2_ex()), ("counter", fx::counter_ex())] {
        let a2 = fx::second_local(&a1);
        let flat = lib(local_cascade(&a1, &a2))?;
        let pair = lib(WreathAtm::new(a1.space().clone(), a2.space().clone()))?;
        let e1 = lib(ExtendedAlphabet::local_of(&a1))?;
        let e2 = lib(ExtendedAlphabet::local_of(&a2))?;
        let ef = lib(ExtendedAlphabet::local_of(&flat))?;
        for t in enumerate_traces(a1.alphabet(), n) {
            count += 1;
            let (s, q) = lib(local_cascade_run(&a1, &a2, &t))?;
            if flat.run_final(&t) != pair.pair_index(s, q) {
                return fail(format!("{name}: flattening on {}", word(a1.alphabet(), &t)));
            }
            let two = lib(local_transducer(&a2, &e2, &lib(local_transducer(&a1, &e1, &t))?))?;
            let one = lib(local_transducer(&flat, &ef, &t))?;
            for ev in 0..t.len() {
                let (b1, fa) = ef.split(one.label(ev));
                let (l1, qa) = e2.split(two.label(ev));
                let (b2, sa) = e1.split(l1);
                let ps = t.loc_of(ev);
                let sp = flat.space().joint_decode(ps, fa);
                let ss = a1.space().joint_decode(ps, sa);
                let qs = a2.space().joint_decode(ps, qa);
                let same = b1 == b2
                    && (0..ps.len()).all(|k| sp[k] == ss[k] * a2.space().size(ps[k]) as u32 + qs[k]);
                if !same {
                    return fail(format!("{name}: transducers differ at event {ev} of {}", word(a1.alphabet(), &t)));
                }
            }
        }
    }
    Ok(format!("2 cascades, {count} traces, ≤ {n} events"))
}

// 8 -------------------------------------------------------------------------

fn c8_gossip(cfg: &Config) -> Outcome {
    let n = cfg.n(6);
    let mut configs = 0usize;
    for (name, a) in [("U2", fx::u2_ex()), ("counter", fx::counter_ex())] {
        let g = GossipAutomaton::new(&a);
        let ext = lib(ExtendedAlphabet::global_of(&a))?;
        let alph = a.alphabet().clone();
        let np = alph.num_processes();
        for t in enumerate_traces(&alph, n) {
            for c in lib(t.configurations())? {
                configs += 1;
                let know = g.run_config(&t, &c);
                for i in 0..np {
                    let v = t.view(&c, i);
                    for j in 0..np {
                        let seen = v.ones().filter(|&e| t.is_process_event(e, j)).count();
                        if know[i].clock[j] as usize != seen {
                            return fail(format!("{name}: clock of p{i} for p{j} on {}", word(&alph, &t)));
                        }
                    }
                }
                for mask in 1u32..1 << np {
                    let ps: Vec<usize> = (0..np).filter(|i| mask >> i & 1 == 1).collect();
                    let parts: Vec<(usize, &Knowledge)> = ps.iter().map(|&i| (i, &know[i])).collect();
                    for j in 0..np {
                        if gossip_latest(&parts, j) != lib(t.latest(&c, &ps, j))? {
                            return fail(format!("{name}: latest for {ps:?}, {j} on {}", word(&alph, &t)));
                        }
                    }
                }
            }
            if lib(g.realize_global(&ext, &t))? != lib(global_transducer(&a, &ext, &t))? {
                return fail(format!("{name}: global transducer on {}", word(&alph, &t)));
            }
        }
    }
    Ok(format!("2 automata, {configs} configurations, ≤ {n} events"))
}

// 9 -------------------------------------------------------------------------

fn c9_global_by_local(cfg: &Config) -> Outcome {
    let n = cfg.n(6);
    let mut count = 0usize;
    for (name, a1) in [("U2", fx::u2_ex()), ("counter", fx::counter_ex())] {
        let a2 = fx::second_global(&a1);
        let gc = lib(Cascade::new(CascadeMode::Global, vec![a1.clone(), a2.clone()]))?;
        let sim = lib(simulate_global_by_local(&a1, &a2))?;
        let finals: BTreeSet<usize> = (0..gc.space().total()).filter(|&g| gc.split(g)[1] != 0).collect();
        for t in enumerate_traces(a1.alphabet(), n) {
            count += 1;
            if lib(sim.accepts(&finals, &t))? != lib(gc.accepts(&finals, &t))?
                || lib(sim.final_state(&t))? != lib(gc.final_state(&t))?
            {
                return fail(format!("{name}: on {}", word(a1.alphabet(), &t)));
            }
        }
    }
    Ok(format!("2 cascades, {count} traces, ≤ {n} events"))
}

// 10, 11 --------------------------------------------------------------------

fn c10_acyclic_kr(cfg: &Config) -> Outcome {
    let n = cfg.n(6);
    let cases: Vec<(&str, TraceMorphism)> = vec![
        ("U2 on Σex", fx::kr_u2_ex()),
        ("flip-flop on Σex", fx::kr_flipflop_ex()),
        ("mod 3 on two processes", fx::kr_mod3_two()),
        ("parity relay on four processes", fx::kr_relay_four()),
    ];
    let mut parts = Vec::new();
    let mut kinds = (false, false);
    for (name, phi) in cases {
        let sim = lib(acyclic_kr(&phi))?;
        lib(validate_factors(&sim))?;
        let check = lib(check_simulation(&phi, &sim, n))?;
        if !check.holds() {
            return fail(format!("{name}: {check:?}"));
        }
        if check.sampled {
            return fail(format!("{name}: letter check was sampled, not exhaustive"));
        }
        let m = lib(phi.monoid(CLOSURE_LIMIT))?;
        if m.is_aperiodic() {
            kinds.0 = true;
            if !sim.chain.is_reset_only() {
                return fail(format!("{name}: aperiodic but got a group factor"));
            }
        } else {
            for (k, d) in lib(group_divisions(&phi, &sim))? {
                if matches!(d, Division::NotFound) {
                    return fail(format!("{name}: group factor {k} does not divide the monoid"));
                }
                kinds.1 = true;
            }
        }
        parts.push(format!("{name} [{}]", sim.factor_summary().join(" ")));
    }
    if !(kinds.0 && kinds.1) {
        return fail("fixtures must include an aperiodic and a group case");
    }
    Ok(format!("{}; ≤ {n} events", parts.join("; ")))
}

fn c11_word_kr(cfg: &Config) -> Outcome {
    let n = cfg.n(6);
    let mut parts = Vec::new();
    let cases: Vec<(&str, WordMorphism)> = vec![("table", fx::table1()), ("U2", fx::word_u2())];
    for (name, phi) in cases {
        let m = lib(phi.monoid(CLOSURE_LIMIT))?;
        if name == "table" && m.len() != 5 {
            return fail(format!("table monoid has {} elements", m.len()));
        }
        let d = lib(krohn_rhodes_word(&phi))?;
        let r = lib(check_simulation_word(&phi, &d.flat_morphism(), &d.f, n))?;
        if !r.holds() {
            return fail(format!("{name}: {r:?}"));
        }
        if m.is_aperiodic() && !d.is_reset_only() {
            return fail(format!("{name}: aperiodic but got a group factor"));
        }
        parts.push(format!("{name}: {} factors, {} words", d.chain.len(), r.words_checked));
    }
    Ok(parts.join(", "))
}

// 12 ------------------------------------------------------------------------

fn readout_check(c: &loctl::CompiledCascade, f: &Formula, traces: &[Trace]) -> std::result::Result<(), String> {
    for t in traces {
        let truth = loctl::eval_all(t, f);
        if let Some((e, i)) = lib(c.readout_mismatch(t, &truth))? {
            return fail(format!("readout at event {e}, process {i} of {}", word(t.alphabet(), t)));
        }
    }
    Ok(())
}

fn language_check(
    accepts: impl Fn(&Trace) -> crate::Result<bool>,
    b: &TraceFormula,
    traces: &[Trace],
) -> std::result::Result<(), String> {
    for t in traces {
        if lib(accepts(t))? != loctl::eval_trace(t, b) {
            return fail(format!("on {}", word(t.alphabet(), t)));
        }
    }
    Ok(())
}

fn c12_loctl(cfg: &Config) -> Outcome {
    let alph = fx::sigma_ex();
    let n = cfg.n(6);
    let traces = enumerate_traces(&alph, n);
    let mut compiled = 0usize;
    for src in fx::EVENT_CORPUS {
        let f = lib(loctl::parse_event(&alph, src))?;
        if loctl::is_since_only(&f) {
            let c = lib(loctl::compile_local(&alph, &f))?;
            readout_check(&c, &f, &traces).map_err(|e| format!("local `{src}`: {e}"))?;
            compiled += 1;
        } else if loctl::compile_local(&alph, &f).is_ok() {
            return fail(format!("local compiler accepted `{src}`"));
        }
        let c = lib(loctl::compile_global(&alph, &f))?;
        readout_check(&c, &f, &traces).map_err(|e| format!("global `{src}`: {e}"))?;
        compiled += 1;
    }
    let mut round_trips = 0usize;
    for src in fx::TRACE_CORPUS {
        let b = lib(loctl::parse_trace(&alph, src))?;
        let mut modes = vec![CascadeMode::Global];
        if loctl::trace_is_since_only(&b) {
            modes.push(CascadeMode::Local);
        }
        for mode in modes {
            let acc = lib(loctl::acceptor(&alph, &b, mode))?;
            language_check(|t| acc.accepts(t), &b, &traces).map_err(|e| format!("{mode:?} acceptor `{src}`: {e}"))?;
            let back = lib(loctl::cascade_to_formula(&acc.cascade, &acc.accept))?;
            if mode == CascadeMode::Local && !loctl::trace_is_since_only(&back) {
                return fail(format!("extraction from a local cascade used yesterday for `{src}`"));
            }
            language_check(|t| Ok(loctl::eval_trace(t, &back)), &b, &traces).map_err(|e| format!("{mode:?} extraction `{src}`: {e}"))?;
            round_trips += 1;
        }
    }
    // non-strict since against its rewriting
    let n5 = cfg.n(5);
    let short = enumerate_traces(&alph, n5);
    let atoms: Vec<Formula> = (0..alph.num_actions()).map(loctl::letter).chain([loctl::tt()]).collect();
    let mut pairs = 0usize;
    for i in 0..alph.num_processes() {
        for x in &atoms {
            for y in &atoms {
                pairs += 1;
                let weak: Formula = std::rc::Rc::new(loctl::Ev::WeakSince(i, x.clone(), y.clone()));
                let sugar = loctl::desugar_nonstrict(&alph, i, x, y);
                for t in &short {
                    if loctl::eval_all(t, &weak) != loctl::eval_all(t, &sugar) {
                        return fail(format!(
                            "desugaring `{}` on {}",
                            loctl::print_event(&alph, &weak),
                            word(&alph, t)
                        ));
                    }
                }
            }
        }
    }
    Ok(format!(
        "{compiled} compilations, {round_trips} acceptor round trips over {} traces (≤ {n}), {pairs} desugarings (≤ {n5})",
        traces.len()
    ))
}
