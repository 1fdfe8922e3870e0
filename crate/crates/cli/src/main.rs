//! Command line front end.
//!
//! Exit status: 0 on success, 1 when a checked property fails (a
//! counterexample is printed), 2 on bad usage or unreadable input.

mod input;

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use trace_wreath::cascade::CascadeMode;
use trace_wreath::decompose::{acyclic_kr, check_simulation, group_divisions, validate_factors, TraceMorphism};
use trace_wreath::gossip::GossipAutomaton;
use trace_wreath::loctl::{self, AnyFormula, U2Cascade};
use trace_wreath::monoid::{
    check_simulation_word, krohn_rhodes_word, Division, WordMorphism, WordMorphismJson, CLOSURE_LIMIT,
};
use trace_wreath::trace::enumerate_traces;
use trace_wreath::transducer::{global_transducer, local_transducer, ExtendedAlphabet};
use trace_wreath::verify;
use trace_wreath::{fixtures, DistributedAlphabet, Trace};

#[derive(Parser)]
#[command(name = "trace-wreath", version, about = "Traces, asynchronous automata, cascades and decompositions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct AlphabetArg {
    /// Alphabet JSON (file or inline); defaults to the three-process example.
    #[arg(long, global = true)]
    alphabet: Option<String>,
    /// Comma separated action order used for canonical forms.
    #[arg(long, global = true)]
    order: Option<String>,
}

impl AlphabetArg {
    fn load(&self) -> Result<Arc<DistributedAlphabet>> {
        let a = input::alphabet(self.alphabet.as_deref())?;
        self.reorder(a)
    }

    fn reorder(&self, a: Arc<DistributedAlphabet>) -> Result<Arc<DistributedAlphabet>> {
        match &self.order {
            None => Ok(a),
            Some(o) => {
                let names: Vec<&str> = o.split(',').map(str::trim).collect();
                Ok(Arc::new((*a).clone().with_action_order(&names)?))
            }
        }
    }

    /// The alphabet when one was given explicitly.
    fn explicit(&self) -> Result<Option<Arc<DistributedAlphabet>>> {
        self.alphabet.as_ref().map(|_| self.load()).transpose()
    }
}

#[derive(Subcommand)]
enum Command {
    /// Inspect a distributed alphabet.
    Alphabet {
        #[command(subcommand)]
        cmd: AlphabetCmd,
    },
    /// Traces: canonical forms, Hasse diagrams, enumeration.
    Trace {
        #[command(subcommand)]
        cmd: TraceCmd,
        #[command(flatten)]
        alph: AlphabetArg,
    },
    /// Transformation monoids of word morphisms.
    Monoid {
        #[command(subcommand)]
        cmd: MonoidCmd,
    },
    /// Run asynchronous automata.
    Automaton {
        #[command(subcommand)]
        cmd: AutomatonCmd,
        #[command(flatten)]
        alph: AlphabetArg,
    },
    /// Annotate a trace with the local or global states of an automaton.
    Transduce {
        mode: Mode,
        automaton: String,
        trace: String,
        #[command(flatten)]
        alph: AlphabetArg,
    },
    /// Vector clock gossip along a trace.
    Gossip {
        #[command(subcommand)]
        cmd: GossipCmd,
        #[command(flatten)]
        alph: AlphabetArg,
    },
    /// Local and global cascade products.
    Cascade {
        #[command(subcommand)]
        cmd: CascadeCmd,
        #[command(flatten)]
        alph: AlphabetArg,
    },
    /// Decompose a trace morphism over an acyclic alphabet.
    Decompose {
        /// Alphabet JSON.
        alphabet: String,
        /// Morphism JSON: `{"degree": n, "generators": {"a": [..], ..}}`.
        morphism: String,
        #[arg(long, default_value_t = 6)]
        verify_bound: usize,
    },
    /// Local temporal logic.
    Logic {
        #[command(subcommand)]
        cmd: LogicCmd,
        #[command(flatten)]
        alph: AlphabetArg,
    },
    /// Run the built-in acceptance checks.
    Verify {
        #[command(subcommand)]
        cmd: VerifyCmd,
    },
}

#[derive(Subcommand)]
enum AlphabetCmd {
    /// Print dependence, independence and the communication graph.
    Check {
        file: String,
        /// Print the communication graph as DOT instead.
        #[arg(long)]
        dot: bool,
    },
}

#[derive(Subcommand)]
enum TraceCmd {
    /// Print the canonical word.
    Normalize { trace: String },
    /// Print the Hasse diagram as DOT.
    Dot { trace: String },
    /// List every trace with at most `bound` events.
    Enumerate {
        #[arg(long, default_value_t = 4)]
        bound: usize,
    },
}

#[derive(Subcommand)]
enum MonoidCmd {
    /// Generate the transformation monoid.
    Closure {
        morphism: String,
        #[arg(long, default_value_t = CLOSURE_LIMIT)]
        limit: usize,
    },
    /// Krohn-Rhodes decomposition of a word morphism.
    Kr {
        morphism: String,
        #[arg(long, default_value_t = 6)]
        verify_bound: usize,
    },
    /// Check that `psi` with the map `f` simulates `phi`.
    CheckSim {
        phi: String,
        psi: String,
        /// JSON array giving `f` on the states of `psi`.
        f: String,
        #[arg(long, default_value_t = 6)]
        bound: usize,
    },
}

#[derive(Subcommand)]
enum AutomatonCmd {
    /// Print the global state after each event.
    Run { automaton: String, trace: String },
    /// Whether the final state is listed under `final`.
    Accepts { automaton: String, trace: String },
}

#[derive(Subcommand)]
enum GossipCmd {
    /// Print every event's merged state and clocks.
    Demo {
        trace: String,
        /// Automaton whose global state is tracked; defaults to a counter
        /// on the example alphabet.
        #[arg(long)]
        automaton: Option<String>,
    },
}

#[derive(Subcommand)]
enum CascadeCmd {
    /// Print the state of every stage after the trace.
    Run { cascade: String, trace: String },
    /// Whether the final state is listed under `final`.
    Accepts { cascade: String, trace: String },
    /// Print the single automaton equivalent to the cascade, as JSON.
    Flatten { cascade: String },
}

#[derive(Subcommand)]
enum LogicCmd {
    /// Evaluate a formula on a trace.
    Eval { formula: String, trace: String },
    /// Compile a formula into a cascade of two-state reset stages.
    Compile {
        formula: String,
        #[arg(long, value_enum, default_value_t = Mode::Local)]
        mode: Mode,
        /// Print the stage wiring as DOT.
        #[arg(long)]
        dot: bool,
    },
    /// Compare two formulas on every trace up to a bound.
    CheckEquiv {
        first: String,
        second: String,
        #[arg(long, default_value_t = 5)]
        bound: usize,
    },
    /// Compile a trace formula and read a formula back off the cascade.
    Extract {
        formula: String,
        #[arg(long, value_enum, default_value_t = Mode::Local)]
        mode: Mode,
        #[arg(long, default_value_t = 5)]
        bound: usize,
    },
}

#[derive(Subcommand)]
enum VerifyCmd {
    /// Every acceptance criterion.
    All {
        /// Cap on the length of enumerated traces.
        #[arg(long)]
        bound: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Mode {
    Local,
    Global,
}

impl Mode {
    fn cascade(self) -> CascadeMode {
        match self {
            Mode::Local => CascadeMode::Local,
            Mode::Global => CascadeMode::Global,
        }
    }
}

/// `Ok(true)` on success, `Ok(false)` on a property violation.
type Outcome = Result<bool>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cmd: Command) -> Outcome {
    match cmd {
        Command::Alphabet { cmd: AlphabetCmd::Check { file, dot } } => alphabet_check(&file, dot),
        Command::Trace { cmd, alph } => trace_cmd(cmd, &alph),
        Command::Monoid { cmd } => monoid_cmd(cmd),
        Command::Automaton { cmd, alph } => automaton_cmd(cmd, &alph),
        Command::Transduce {
            mode,
            automaton,
            trace,
            alph,
        } => transduce(mode, &automaton, &trace, &alph),
        Command::Gossip {
            cmd: GossipCmd::Demo { trace, automaton },
            alph,
        } => gossip_demo(&trace, automaton.as_deref(), &alph),
        Command::Cascade { cmd, alph } => cascade_cmd(cmd, &alph),
        Command::Decompose {
            alphabet,
            morphism,
            verify_bound,
        } => decompose(&alphabet, &morphism, verify_bound),
        Command::Logic { cmd, alph } => logic_cmd(cmd, &alph),
        Command::Verify { cmd: VerifyCmd::All { bound } } => verify_all(bound),
    }
}

fn show(t: &Trace) -> String {
    if t.is_empty() {
        "ε".into()
    } else {
        t.to_string()
    }
}

fn alphabet_check(file: &str, dot: bool) -> Outcome {
    let alph = input::alphabet(Some(file))?;
    if dot {
        print!("{}", alph.communication_graph().to_dot(&alph));
        return Ok(true);
    }
    print!("{}", alph.describe());
    let n = alph.num_actions();
    let name = |a| alph.action_name(a);
    let mut dep = Vec::new();
    let mut ind = Vec::new();
    for a in 0..n {
        for b in a..n {
            if alph.dependent(a, b) {
                dep.push(format!("({},{})", name(a), name(b)));
            } else {
                ind.push(format!("({},{})", name(a), name(b)));
            }
        }
    }
    println!("dependent: {}", dep.join(" "));
    println!("independent: {}", ind.join(" "));
    let edges: Vec<String> = alph
        .communication_graph()
        .edges()
        .iter()
        .map(|&(i, j)| format!("{}-{}", alph.process_name(i), alph.process_name(j)))
        .collect();
    println!("edges: {}", edges.join(" "));
    Ok(true)
}

fn trace_cmd(cmd: TraceCmd, a: &AlphabetArg) -> Outcome {
    let alph = a.load()?;
    match cmd {
        TraceCmd::Normalize { trace } => {
            let t = input::trace(&alph, &trace)?;
            println!("{}", show(&t));
        }
        TraceCmd::Dot { trace } => print!("{}", input::trace(&alph, &trace)?.to_dot()),
        TraceCmd::Enumerate { bound } => {
            for t in enumerate_traces(&alph, bound) {
                println!("{}", show(&t));
            }
        }
    }
    Ok(true)
}

fn word_morphism(arg: &str) -> Result<WordMorphism> {
    let j: WordMorphismJson = serde_json::from_value(input::json(arg)?)?;
    Ok(WordMorphism::from_json(&j)?)
}

fn monoid_cmd(cmd: MonoidCmd) -> Outcome {
    match cmd {
        MonoidCmd::Closure { morphism, limit } => {
            let phi = word_morphism(&morphism)?;
            let m = phi.monoid(limit)?;
            println!("degree {} elements {}", m.degree(), m.len());
            println!("aperiodic: {}", m.is_aperiodic());
            for (i, t) in m.elements().iter().enumerate() {
                let w: Vec<&str> = m.witness(i).iter().map(|&a| phi.letters()[a].as_str()).collect();
                let w = if w.is_empty() { "ε".to_string() } else { w.join(" ") };
                println!("{i}: {t} = {w}");
            }
            Ok(true)
        }
        MonoidCmd::Kr { morphism, verify_bound } => {
            let phi = word_morphism(&morphism)?;
            let d = krohn_rhodes_word(&phi)?;
            let factors: Vec<String> = d
                .chain
                .factors()
                .iter()
                .map(|f| if f.is_group() { format!("G{}", f.size()) } else { "U2".into() })
                .collect();
            println!("chain: {}", factors.join(" "));
            println!("states: {}", d.chain.num_states());
            for (k, l) in d.levels.iter().enumerate() {
                println!(
                    "level {k}: height {} tiles {} group order {} factors {:?} division {}",
                    l.height,
                    l.tiles,
                    l.group_order,
                    l.factors,
                    division(&l.division)
                );
            }
            println!("f: {:?}", d.f);
            let r = check_simulation_word(&phi, &d.flat_morphism(), &d.f, verify_bound)?;
            report_word_sim(&phi, &r)
        }
        MonoidCmd::CheckSim { phi, psi, f, bound } => {
            let phi = word_morphism(&phi)?;
            let psi = word_morphism(&psi)?;
            let f: Vec<u32> = serde_json::from_value(input::json(&f)?)?;
            let r = check_simulation_word(&phi, &psi, &f, bound)?;
            report_word_sim(&phi, &r)
        }
    }
}

fn division(d: &Division) -> String {
    match d {
        Division::Divides { idempotent, preimages } => format!("at idempotent {idempotent} via {preimages:?}"),
        Division::NotFound => "not found".into(),
        Division::Unverified => "unverified".into(),
    }
}

fn report_word_sim(phi: &WordMorphism, r: &trace_wreath::monoid::SimulationReport) -> Outcome {
    match r.counterexample {
        None => {
            println!("simulation holds ({} words checked)", r.words_checked);
            Ok(true)
        }
        Some((a, y)) => {
            println!("simulation fails: letter {} at state {y}", phi.letters()[a]);
            Ok(false)
        }
    }
}

fn automaton_cmd(cmd: AutomatonCmd, a: &AlphabetArg) -> Outcome {
    let given = a.explicit()?;
    match cmd {
        AutomatonCmd::Run { automaton, trace } => {
            let (aut, _) = input::automaton(&automaton, given.as_ref())?;
            let t = input::trace(aut.alphabet(), &trace)?;
            let after = aut.states_after_events(&t);
            println!("initial {}", aut.format_state(aut.initial()));
            for (e, g) in after.iter().enumerate() {
                println!("e{e} {} {}", aut.alphabet().action_name(t.label(e)), aut.format_state(*g));
            }
            println!("final {}", aut.format_state(aut.run_final(&t)));
            Ok(true)
        }
        AutomatonCmd::Accepts { automaton, trace } => {
            let (aut, finals) = input::automaton(&automaton, given.as_ref())?;
            let Some(finals) = finals else { bail!("automaton lists no final states") };
            let t = input::trace(aut.alphabet(), &trace)?;
            let ok = aut.accepts(&finals, &t);
            println!("{} ({})", if ok { "accepted" } else { "rejected" }, aut.format_state(aut.run_final(&t)));
            Ok(true)
        }
    }
}

fn transduce(mode: Mode, automaton: &str, trace: &str, a: &AlphabetArg) -> Outcome {
    let (aut, _) = input::automaton(automaton, a.explicit()?.as_ref())?;
    let t = input::trace(aut.alphabet(), trace)?;
    let out = match mode {
        Mode::Local => local_transducer(&aut, &ExtendedAlphabet::local_of(&aut)?, &t)?,
        Mode::Global => global_transducer(&aut, &ExtendedAlphabet::global_of(&aut)?, &t)?,
    };
    // keep the input's event order, not the extended alphabet's canonical one
    let mut names = Vec::new();
    for e in 0..t.len() {
        names.push(out.alphabet().action_name(out.label(e)).to_string());
    }
    println!("{}", names.join(" "));
    Ok(true)
}

fn gossip_demo(trace: &str, automaton: Option<&str>, a: &AlphabetArg) -> Outcome {
    let aut = match automaton {
        Some(p) => input::automaton(p, a.explicit()?.as_ref())?.0,
        None => fixtures::counter_ex(),
    };
    let t = input::trace(aut.alphabet(), trace)?;
    print!("{}", GossipAutomaton::new(&aut).demo(&t));
    Ok(true)
}

fn cascade_cmd(cmd: CascadeCmd, a: &AlphabetArg) -> Outcome {
    let given = a.explicit()?;
    match cmd {
        CascadeCmd::Run { cascade, trace } => {
            let (c, _) = input::cascade(&cascade, given.as_ref())?;
            let t = input::trace(c.alphabet(), &trace)?;
            let per = c.stage_finals(&t)?;
            for (k, (st, s)) in c.stages().iter().zip(&per).enumerate() {
                println!("stage {k} {}", st.format_state(*s));
            }
            Ok(true)
        }
        CascadeCmd::Accepts { cascade, trace } => {
            let (c, finals) = input::cascade(&cascade, given.as_ref())?;
            let Some(finals) = finals else { bail!("cascade lists no final states") };
            let t = input::trace(c.alphabet(), &trace)?;
            let ok = c.accepts(&finals, &t)?;
            println!("{} ({})", if ok { "accepted" } else { "rejected" }, c.format_state(c.final_state(&t)?));
            Ok(true)
        }
        CascadeCmd::Flatten { cascade } => {
            let (c, _) = input::cascade(&cascade, given.as_ref())?;
            println!("{}", serde_json::to_string_pretty(&c.flatten()?.to_json())?);
            Ok(true)
        }
    }
}

fn decompose(alphabet: &str, morphism: &str, bound: usize) -> Outcome {
    let alph = input::alphabet(Some(alphabet))?;
    let phi = TraceMorphism::from_json(&alph, &serde_json::from_value(input::json(morphism)?)?)?;
    let sim = acyclic_kr(&phi)?;
    validate_factors(&sim)?;
    println!("chain: {}", sim.factor_summary().join(" "));
    println!("states: {}", sim.chain.num_states());
    println!("f:");
    for (y, x) in sim.f.iter().enumerate() {
        println!("  {y} -> {x}");
    }
    for (k, d) in group_divisions(&phi, &sim)? {
        println!("factor {k} divides the monoid: {}", division(&d));
    }
    let r = check_simulation(&phi, &sim, bound)?;
    println!(
        "checked {} states{} and {} traces up to {bound} events",
        r.states_checked,
        if r.sampled { " (sampled)" } else { "" },
        r.traces_checked
    );
    if let Some((a, y)) = r.letter_counterexample {
        println!("fails: letter {} at chain state {y}", alph.action_name(a));
    }
    for &a in &r.non_local {
        println!("fails: image of {} is not local", alph.action_name(a));
    }
    if let Some((w, x)) = &r.trace_counterexample {
        println!("fails: trace {} from state {x}", alph.word_to_string(w));
    }
    if r.holds() {
        println!("simulation holds");
    }
    Ok(r.holds())
}

fn formula(alph: &DistributedAlphabet, arg: &str) -> Result<AnyFormula> {
    Ok(loctl::parse_any(alph, &input::formula(arg)?)?)
}

/// Readout and acceptance expressions name stages by their labels.
fn render(c: &U2Cascade, e: &loctl::BitExpr) -> String {
    e.render(&|k| c.stages()[k].label.clone())
}

fn wiring_dot(c: &U2Cascade) -> String {
    let alph = c.alphabet();
    let mut s = String::from("digraph cascade {\n");
    for (k, st) in c.stages().iter().enumerate() {
        let _ = writeln!(
            s,
            "  s{k} [label=\"{}\\n{}\"];",
            st.label.replace('"', "\\\""),
            alph.process_name(st.location)
        );
    }
    for (k, st) in c.stages().iter().enumerate() {
        let deps: BTreeSet<usize> = st.rules.iter().flatten().flat_map(|r| r.deps.iter().copied()).collect();
        for d in deps {
            let _ = writeln!(s, "  s{d} -> s{k};");
        }
    }
    s.push_str("}\n");
    s
}

fn logic_cmd(cmd: LogicCmd, a: &AlphabetArg) -> Outcome {
    let alph = a.load()?;
    match cmd {
        LogicCmd::Eval { formula: f, trace } => {
            let t = input::trace(&alph, &trace)?;
            match formula(&alph, &f)? {
                AnyFormula::Trace(b) => println!("{}", loctl::eval_trace(&t, &b)),
                AnyFormula::Event(f) => {
                    for (e, v) in loctl::eval_all(&t, &f).iter().enumerate() {
                        println!("e{e} {} {v}", alph.action_name(t.label(e)));
                    }
                }
            }
            Ok(true)
        }
        LogicCmd::Compile { formula: f, mode, dot } => {
            let (cascade, lines) = match formula(&alph, &f)? {
                AnyFormula::Trace(b) => {
                    let acc = loctl::acceptor(&alph, &b, mode.cascade())?;
                    let line = format!("accept: {}", render(&acc.cascade, &acc.accept));
                    (acc.cascade, vec![line])
                }
                AnyFormula::Event(f) => {
                    let c = match mode {
                        Mode::Local => loctl::compile_local(&alph, &f)?,
                        Mode::Global => loctl::compile_global(&alph, &f)?,
                    };
                    let lines = (0..alph.num_processes())
                        .map(|i| format!("readout {}: {}", alph.process_name(i), render(&c.cascade, &c.readout[i])))
                        .collect();
                    (c.cascade, lines)
                }
            };
            if dot {
                print!("{}", wiring_dot(&cascade));
            } else {
                print!("{}", cascade.describe());
                for l in lines {
                    println!("{l}");
                }
            }
            Ok(true)
        }
        LogicCmd::CheckEquiv { first, second, bound } => {
            let f = formula(&alph, &first)?;
            let g = formula(&alph, &second)?;
            let traces = enumerate_traces(&alph, bound);
            for t in &traces {
                let same = match (&f, &g) {
                    (AnyFormula::Trace(x), AnyFormula::Trace(y)) => loctl::eval_trace(t, x) == loctl::eval_trace(t, y),
                    (AnyFormula::Event(x), AnyFormula::Event(y)) => loctl::eval_all(t, x) == loctl::eval_all(t, y),
                    _ => bail!("cannot compare an event formula with a trace formula"),
                };
                if !same {
                    println!("not equivalent: counterexample {}", t.to_json_value());
                    return Ok(false);
                }
            }
            println!("equivalent ({} traces checked)", traces.len());
            Ok(true)
        }
        LogicCmd::Extract { formula: f, mode, bound } => {
            let AnyFormula::Trace(b) = formula(&alph, &f)? else {
                bail!("extraction needs a trace formula")
            };
            let acc = loctl::acceptor(&alph, &b, mode.cascade())?;
            let back = loctl::cascade_to_formula(&acc.cascade, &acc.accept)?;
            println!("{}", loctl::print_trace(&alph, &back));
            println!("stages {} size {}", acc.cascade.len(), loctl::formula_size(&back));
            for t in enumerate_traces(&alph, bound) {
                if loctl::eval_trace(&t, &back) != loctl::eval_trace(&t, &b) {
                    println!("not equivalent: counterexample {}", t.to_json_value());
                    return Ok(false);
                }
            }
            println!("equivalent to the input up to {bound} events");
            Ok(true)
        }
    }
}

fn verify_all(bound: Option<usize>) -> Outcome {
    let mut ok = true;
    for r in verify::run_all(&verify::Config { bound }) {
        println!("{}", r.line());
        ok &= r.passed;
    }
    Ok(ok)
}
