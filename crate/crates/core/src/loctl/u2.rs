//! Cascades of localized two-state reset automata.
//!
//! Stage `k` lives on one process `ℓ_k` with states `0` and `1` (the
//! `1`/`2` of `U2`), every other process having a single state. On a letter
//! `a ∈ Σ_ℓ` it resets or keeps its bit, depending on the bits of some
//! earlier stages (its dependencies) as they stood just before the event.
//! In a local cascade those must live on `loc(a)`; in a global cascade the
//! bit of a stage on process `j` is read at `↓e \ {e}`, that is after the
//! last `j`-event below `e`.
//!
//! Listing dependencies keeps transition tables small. `to_cascade` and
//! `from_cascade` convert to and from the full cascade product, whose
//! stages read the complete annotation.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::alphabet::{ActionId, DistributedAlphabet, ProcessId};
use crate::automaton::AsyncAutomaton;
use crate::cascade::{Cascade, CascadeMode};
use crate::error::{Error, Result};
use crate::trace::Trace;

/// Hard cap on dependencies of one rule (the table has `2^deps` entries).
pub const MAX_DEPS: usize = 20;
/// Stage-count cap for building the full cascade product.
pub const MAX_FULL_STAGES: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum U2Action {
    Id,
    Reset(bool),
}

impl U2Action {
    pub fn apply(self, b: bool) -> bool {
        match self {
            U2Action::Id => b,
            U2Action::Reset(v) => v,
        }
    }
}

/// Boolean expression over stage bits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BitExpr {
    Const(bool),
    Bit(usize),
    Not(Box<BitExpr>),
    And(Box<BitExpr>, Box<BitExpr>),
    Or(Box<BitExpr>, Box<BitExpr>),
}

impl BitExpr {
    pub fn not(self) -> BitExpr {
        match self {
            BitExpr::Const(b) => BitExpr::Const(!b),
            BitExpr::Not(x) => *x,
            x => BitExpr::Not(Box::new(x)),
        }
    }

    pub fn and(self, other: BitExpr) -> BitExpr {
        match (self, other) {
            (BitExpr::Const(false), _) | (_, BitExpr::Const(false)) => BitExpr::Const(false),
            (BitExpr::Const(true), x) | (x, BitExpr::Const(true)) => x,
            (x, y) if x == y => x,
            (x, y) => BitExpr::And(Box::new(x), Box::new(y)),
        }
    }

    pub fn or(self, other: BitExpr) -> BitExpr {
        match (self, other) {
            (BitExpr::Const(true), _) | (_, BitExpr::Const(true)) => BitExpr::Const(true),
            (BitExpr::Const(false), x) | (x, BitExpr::Const(false)) => x,
            (x, y) if x == y => x,
            (x, y) => BitExpr::Or(Box::new(x), Box::new(y)),
        }
    }

    pub fn eval_by(&self, bit: &dyn Fn(usize) -> bool) -> bool {
        match self {
            BitExpr::Const(b) => *b,
            BitExpr::Bit(k) => bit(*k),
            BitExpr::Not(x) => !x.eval_by(bit),
            BitExpr::And(x, y) => x.eval_by(bit) && y.eval_by(bit),
            BitExpr::Or(x, y) => x.eval_by(bit) || y.eval_by(bit),
        }
    }

    pub fn eval(&self, bits: &[bool]) -> bool {
        self.eval_by(&|k| bits[k])
    }

    pub fn stages(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.collect(&mut out);
        out
    }

    fn collect(&self, out: &mut BTreeSet<usize>) {
        match self {
            BitExpr::Const(_) => {}
            BitExpr::Bit(k) => {
                out.insert(*k);
            }
            BitExpr::Not(x) => x.collect(out),
            BitExpr::And(x, y) | BitExpr::Or(x, y) => {
                x.collect(out);
                y.collect(out);
            }
        }
    }

    /// Disjunction of the given full assignments of `n` stage bits.
    pub fn from_assignments(n: usize, finals: &BTreeSet<Vec<bool>>) -> BitExpr {
        if finals.is_empty() {
            return BitExpr::Const(false);
        }
        if n < usize::BITS as usize && finals.len() == 1usize << n {
            return BitExpr::Const(true);
        }
        finals.iter().fold(BitExpr::Const(false), |acc, bits| {
            let term = bits.iter().enumerate().fold(BitExpr::Const(true), |t, (k, &b)| {
                let lit = if b { BitExpr::Bit(k) } else { BitExpr::Bit(k).not() };
                t.and(lit)
            });
            acc.or(term)
        })
    }

    pub fn render(&self, names: &dyn Fn(usize) -> String) -> String {
        match self {
            BitExpr::Const(b) => b.to_string(),
            BitExpr::Bit(k) => names(*k),
            BitExpr::Not(x) => format!("!{}", x.render_atom(names)),
            BitExpr::And(x, y) => format!("{} & {}", x.render_atom(names), y.render_atom(names)),
            BitExpr::Or(x, y) => format!("{} | {}", x.render_atom(names), y.render_atom(names)),
        }
    }

    fn render_atom(&self, names: &dyn Fn(usize) -> String) -> String {
        match self {
            BitExpr::And(..) | BitExpr::Or(..) => format!("({})", self.render(names)),
            _ => self.render(names),
        }
    }
}

/// What a stage does on one letter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub deps: Vec<usize>,
    /// Indexed by dependency bits, the first dependency most significant.
    pub table: Vec<U2Action>,
}

impl Rule {
    pub fn constant(act: U2Action) -> Rule {
        Rule {
            deps: Vec::new(),
            table: vec![act],
        }
    }

    /// Tabulates `f` over all values of `deps`.
    pub fn tabulate(deps: Vec<usize>, mut f: impl FnMut(&dyn Fn(usize) -> bool) -> U2Action) -> Result<Rule> {
        if deps.len() > MAX_DEPS {
            return Err(Error::TooLarge {
                what: "stage dependencies",
                size: deps.len(),
                limit: MAX_DEPS,
            });
        }
        let m = deps.len();
        let table = (0..1usize << m)
            .map(|idx| {
                let bit = |s: usize| {
                    let p = deps.iter().position(|&d| d == s).expect("dependency");
                    idx >> (m - 1 - p) & 1 == 1
                };
                f(&bit)
            })
            .collect();
        Ok(Rule { deps, table })
    }

    pub fn action(&self, bit: impl Fn(usize) -> bool) -> U2Action {
        let idx = self.deps.iter().fold(0usize, |acc, &d| acc << 1 | bit(d) as usize);
        self.table[idx]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct U2Stage {
    pub location: ProcessId,
    pub initial: bool,
    /// Indexed by letter; present exactly for letters of `Σ_ℓ`.
    pub rules: Vec<Option<Rule>>,
    pub label: String,
}

#[derive(Debug, Clone)]
pub struct U2Cascade {
    alphabet: Arc<DistributedAlphabet>,
    mode: CascadeMode,
    stages: Vec<U2Stage>,
}

/// Result of running a cascade over a trace.
#[derive(Debug, Clone)]
pub struct U2Run {
    /// `after[e][k]`: bit of stage `k` in the state reached at `↓e`.
    pub after: Vec<Vec<bool>>,
    /// Bits of the final state.
    pub finals: Vec<bool>,
}

impl U2Cascade {
    pub fn new(alphabet: &Arc<DistributedAlphabet>, mode: CascadeMode) -> Self {
        U2Cascade {
            alphabet: alphabet.clone(),
            mode,
            stages: Vec::new(),
        }
    }

    pub fn alphabet(&self) -> &Arc<DistributedAlphabet> {
        &self.alphabet
    }

    pub fn mode(&self) -> CascadeMode {
        self.mode
    }

    pub fn stages(&self) -> &[U2Stage] {
        &self.stages
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    /// Appends a stage after checking it against the ones already present.
    pub fn push(&mut self, stage: U2Stage) -> Result<usize> {
        self.check_stage(self.stages.len(), &stage)?;
        self.stages.push(stage);
        Ok(self.stages.len() - 1)
    }

    fn check_stage(&self, k: usize, st: &U2Stage) -> Result<()> {
        let alph = &self.alphabet;
        let bad = |m: String| Err(Error::Precondition(format!("stage {k} ({}): {m}", st.label)));
        if st.location >= alph.num_processes() {
            return bad("location out of range".into());
        }
        if st.rules.len() != alph.num_actions() {
            return bad("one rule slot per letter expected".into());
        }
        for (a, r) in st.rules.iter().enumerate() {
            let on = alph.has_action(st.location, a);
            match r {
                None if on => return bad(format!("no rule for `{}`", alph.action_name(a))),
                Some(_) if !on => return bad(format!("rule for `{}` outside its process", alph.action_name(a))),
                None => {}
                Some(r) => {
                    if r.table.len() != 1usize << r.deps.len() {
                        return bad("table size does not match dependencies".into());
                    }
                    for &d in &r.deps {
                        if d >= k {
                            return bad(format!("depends on later stage {d}"));
                        }
                        if self.mode == CascadeMode::Local && !alph.loc(a).contains(&self.stages[d].location) {
                            return bad(format!(
                                "local rule for `{}` reads stage {d} outside loc",
                                alph.action_name(a)
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Re-checks every stage.
    pub fn validate(&self) -> Result<()> {
        let mut partial = U2Cascade::new(&self.alphabet, self.mode);
        for st in &self.stages {
            partial.push(st.clone())?;
        }
        Ok(())
    }

    pub fn initial_bits(&self) -> Vec<bool> {
        self.stages.iter().map(|s| s.initial).collect()
    }

    pub fn run(&self, t: &Trace) -> Result<U2Run> {
        if **t.alphabet() != *self.alphabet {
            return Err(Error::AlphabetMismatch);
        }
        let n = t.len();
        let mut after: Vec<Vec<bool>> = Vec::with_capacity(n);
        for e in 0..n {
            let a = t.label(e);
            let loc = t.loc_of(e);
            let before = |k: usize, after: &[Vec<bool>]| {
                let st = &self.stages[k];
                t.last_below(e, st.location)
                    .map_or(st.initial, |f| after[f][k])
            };
            let mut row = Vec::with_capacity(self.stages.len());
            for (k, st) in self.stages.iter().enumerate() {
                let pre = before(k, &after);
                let bit = if loc.contains(&st.location) {
                    let rule = st.rules[a].as_ref().expect("validated rule");
                    rule.action(|d| before(d, &after)).apply(pre)
                } else {
                    pre
                };
                row.push(bit);
            }
            after.push(row);
        }
        let mut last = vec![None; self.alphabet.num_processes()];
        for e in 0..n {
            for &i in t.loc_of(e) {
                last[i] = Some(e);
            }
        }
        let finals = self
            .stages
            .iter()
            .enumerate()
            .map(|(k, st)| last[st.location].map_or(st.initial, |e| after[e][k]))
            .collect();
        Ok(U2Run { after, finals })
    }

    pub fn accepts(&self, accept: &BitExpr, t: &Trace) -> Result<bool> {
        Ok(accept.eval(&self.run(t)?.finals))
    }

    /// The full cascade product with one two-state automaton per stage.
    pub fn to_cascade(&self) -> Result<Cascade> {
        if self.stages.is_empty() {
            return Err(Error::Precondition("a cascade needs a stage".into()));
        }
        if self.stages.len() > MAX_FULL_STAGES {
            return Err(Error::TooLarge {
                what: "cascade stages",
                size: self.stages.len(),
                limit: MAX_FULL_STAGES,
            });
        }
        let alph = &self.alphabet;
        let mut built: Vec<AsyncAutomaton> = Vec::new();
        for (k, st) in self.stages.iter().enumerate() {
            let prefix = (k > 0).then(|| Cascade::new(self.mode, built.clone())).transpose()?;
            let (letters, ext) = match &prefix {
                None => (alph.clone(), None),
                Some(p) => {
                    let ext = p.stage_extension(k)?;
                    (ext.alphabet().clone(), Some(ext))
                }
            };
            let mut sizes = vec![1; alph.num_processes()];
            sizes[st.location] = 2;
            let mut init = vec![0u32; alph.num_processes()];
            init[st.location] = st.initial as u32;
            let aut = AsyncAutomaton::from_rule(&letters, sizes, &init, |l, s| {
                let (a, bits) = match (&ext, &prefix) {
                    (Some(ext), Some(p)) => {
                        let (a, ann) = ext.split(l);
                        let g = match self.mode {
                            CascadeMode::Local => p.space().embed(0, alph.loc(a), ann),
                            CascadeMode::Global => ann,
                        };
                        (a, p.split(g))
                    }
                    _ => (l, Vec::new()),
                };
                let Some(pos) = alph.loc(a).iter().position(|&i| i == st.location) else {
                    return s.to_vec();
                };
                let rule = st.rules[a].as_ref().expect("validated rule");
                let mut out = s.to_vec();
                out[pos] = rule.action(|d| bits[d] == 1).apply(s[pos] == 1) as u32;
                out
            })?;
            built.push(aut);
        }
        Cascade::new(self.mode, built)
    }

    /// Reads a cascade of two-state stages back, checking their shape.
    pub fn from_cascade(c: &Cascade) -> Result<U2Cascade> {
        let alph = c.alphabet().clone();
        let mut out = U2Cascade::new(&alph, c.mode());
        for (k, aut) in c.stages().iter().enumerate() {
            let sizes = aut.space().sizes();
            let two: Vec<usize> = (0..sizes.len()).filter(|&i| sizes[i] != 1).collect();
            if two.len() != 1 || sizes[two[0]] != 2 {
                return Err(Error::Precondition(format!(
                    "stage {k} is not a two-state automaton on one process"
                )));
            }
            let l = two[0];
            let ext = (k > 0).then(|| c.stage_extension(k)).transpose()?;
            let mut rules = vec![None; alph.num_actions()];
            for &a in alph.actions_of(l) {
                let deps: Vec<usize> = (0..k)
                    .filter(|&d| c.mode() == CascadeMode::Global || alph.loc(a).contains(&out.stages[d].location))
                    .collect();
                let mut err = None;
                let rule = Rule::tabulate(deps, |bit| {
                    let letter = match &ext {
                        None => a,
                        Some(ext) => {
                            let states: Vec<usize> = (0..k).map(|d| bit_or_zero(bit, d, &out, c.mode(), a)).collect();
                            let g = c.compose(&states);
                            let ann = match c.mode() {
                                CascadeMode::Local => c.prefix(k - 1).space().project(g, alph.loc(a)),
                                CascadeMode::Global => g,
                            };
                            ext.letter(a, ann)
                        }
                    };
                    // joint loc(a)-index equals the bit at l
                    let tab = aut.table(letter);
                    match (tab[0], tab[1]) {
                        (0, 1) => U2Action::Id,
                        (0, 0) => U2Action::Reset(false),
                        (1, 1) => U2Action::Reset(true),
                        _ => {
                            err = Some(Error::Precondition(format!(
                                "stage {k} swaps its states on `{}`",
                                aut.alphabet().action_name(letter)
                            )));
                            U2Action::Id
                        }
                    }
                })?;
                if let Some(e) = err {
                    return Err(e);
                }
                rules[a] = Some(rule);
            }
            out.push(U2Stage {
                location: l,
                initial: aut.initial() == 1,
                rules,
                label: format!("stage{k}"),
            })?;
        }
        Ok(out)
    }

    /// Explicit final states of the full cascade as a bit predicate.
    pub fn finals_to_expr(c: &Cascade, finals: &BTreeSet<usize>) -> BitExpr {
        let n = c.stages().len();
        let set: BTreeSet<Vec<bool>> = finals.iter().map(|&g| c.split(g).iter().map(|&s| s == 1).collect()).collect();
        BitExpr::from_assignments(n, &set)
    }

    pub fn describe(&self) -> String {
        let alph = &self.alphabet;
        let mut s = String::new();
        for (k, st) in self.stages.iter().enumerate() {
            let deps: BTreeSet<usize> = st.rules.iter().flatten().flat_map(|r| r.deps.iter().copied()).collect();
            s.push_str(&format!(
                "stage {k} {} on {} init {} reads {:?}\n",
                st.label,
                alph.process_name(st.location),
                st.initial as u8,
                deps
            ));
        }
        s
    }
}

fn bit_or_zero(bit: &dyn Fn(usize) -> bool, d: usize, c: &U2Cascade, mode: CascadeMode, a: ActionId) -> usize {
    let read = mode == CascadeMode::Global || c.alphabet.loc(a).contains(&c.stages[d].location);
    (read && bit(d)) as usize
}
