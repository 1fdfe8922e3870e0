//! Formulas to cascades of two-state reset stages.
//!
//! Every subformula `α` gets a readout per process `i`: a predicate over
//! the bits of stages living on `i` that, right after an event `e` with
//! `i ∈ loc(e)`, tells whether `α` holds at `e`. Stages:
//!
//! * letter trackers `a@i`, set on `a` and cleared on other `i`-letters;
//! * `occ[i]`, set by every `i`-letter;
//! * for `β S[j] γ`, a stage on `j` computing the since recursively from
//!   `j`'s state before the event, plus copies on every other process that
//!   shares a letter with `j`, which perform the same update from the
//!   `j`-state carried by the letter;
//! * for `Y[j] β` (global cascades only), one stage per process reading
//!   `β` and `occ[j]` from `j`'s state at `↓e \ {e}`.
//!
//! Boolean connectives only combine readouts.

use std::collections::{BTreeSet, HashMap};
use std::rc::Rc;
use std::sync::Arc;

use super::u2::{BitExpr, Rule, U2Action, U2Cascade, U2Stage};
use super::{desugar_nonstrict, print_event, Ev, Formula, Tr, TraceFormula};
use crate::alphabet::{ActionId, DistributedAlphabet, ProcessId};
use crate::cascade::CascadeMode;
use crate::error::{Error, Result};
use crate::trace::Trace;

/// A cascade with readouts for one event formula.
#[derive(Debug, Clone)]
pub struct CompiledCascade {
    pub cascade: U2Cascade,
    pub readout: Vec<BitExpr>,
    /// The `occ[i]` stage of each process, when one was needed.
    pub occurs: Vec<Option<usize>>,
}

/// A cascade with the final states accepting a trace formula.
#[derive(Debug, Clone)]
pub struct Acceptor {
    pub cascade: U2Cascade,
    pub accept: BitExpr,
}

impl CompiledCascade {
    /// First `(e, i)` where the readout disagrees with `truth`.
    pub fn readout_mismatch(&self, t: &Trace, truth: &[bool]) -> Result<Option<(usize, ProcessId)>> {
        let run = self.cascade.run(t)?;
        for e in 0..t.len() {
            for &i in t.loc_of(e) {
                if self.readout[i].eval(&run.after[e]) != truth[e] {
                    return Ok(Some((e, i)));
                }
            }
        }
        Ok(None)
    }
}

impl Acceptor {
    pub fn accepts(&self, t: &Trace) -> Result<bool> {
        self.cascade.accepts(&self.accept, t)
    }
}

struct Compiler {
    alph: Arc<DistributedAlphabet>,
    c: U2Cascade,
    trackers: HashMap<(ProcessId, ActionId), usize>,
    occ: HashMap<ProcessId, usize>,
    memo: HashMap<Formula, Rc<Vec<BitExpr>>>,
}

impl Compiler {
    fn new(alph: &Arc<DistributedAlphabet>, mode: CascadeMode) -> Self {
        Compiler {
            alph: alph.clone(),
            c: U2Cascade::new(alph, mode),
            trackers: HashMap::new(),
            occ: HashMap::new(),
            memo: HashMap::new(),
        }
    }

    fn stage(&mut self, location: ProcessId, label: String, mut rule: impl FnMut(ActionId) -> Result<Rule>) -> Result<usize> {
        let mut rules = vec![None; self.alph.num_actions()];
        for &a in self.alph.actions_of(location) {
            rules[a] = Some(rule(a)?);
        }
        self.c.push(U2Stage {
            location,
            initial: false,
            rules,
            label,
        })
    }

    fn tracker(&mut self, i: ProcessId, a: ActionId) -> Result<usize> {
        if let Some(&k) = self.trackers.get(&(i, a)) {
            return Ok(k);
        }
        let label = format!("{}@{}", self.alph.action_name(a), self.alph.process_name(i));
        let k = self.stage(i, label, |b| Ok(Rule::constant(U2Action::Reset(b == a))))?;
        self.trackers.insert((i, a), k);
        Ok(k)
    }

    fn occurs(&mut self, i: ProcessId) -> Result<usize> {
        if let Some(&k) = self.occ.get(&i) {
            return Ok(k);
        }
        let label = format!("occ[{}]", self.alph.process_name(i));
        let k = self.stage(i, label, |_| Ok(Rule::constant(U2Action::Reset(true))))?;
        self.occ.insert(i, k);
        Ok(k)
    }

    fn readout(&mut self, f: &Formula) -> Result<Rc<Vec<BitExpr>>> {
        if let Some(r) = self.memo.get(f) {
            return Ok(r.clone());
        }
        let n = self.alph.num_processes();
        let out: Vec<BitExpr> = match &**f {
            Ev::True => vec![BitExpr::Const(true); n],
            Ev::False => vec![BitExpr::Const(false); n],
            Ev::Letter(a) => (0..n)
                .map(|i| {
                    Ok(if self.alph.has_action(i, *a) {
                        BitExpr::Bit(self.tracker(i, *a)?)
                    } else {
                        BitExpr::Const(false)
                    })
                })
                .collect::<Result<_>>()?,
            Ev::Not(x) => self.readout(x)?.iter().map(|r| r.clone().not()).collect(),
            Ev::Or(x, y) | Ev::And(x, y) => {
                let (x, y) = (self.readout(x)?, self.readout(y)?);
                let or = matches!(&**f, Ev::Or(..));
                x.iter()
                    .zip(y.iter())
                    .map(|(p, q)| if or { p.clone().or(q.clone()) } else { p.clone().and(q.clone()) })
                    .collect()
            }
            Ev::Since(j, x, y) => self.since(f, *j, x, y)?,
            Ev::Yesterday(j, x) => {
                self.need_global(f)?;
                self.yesterday(f, *j, x)?
            }
            Ev::WeakSince(i, x, y) => {
                self.need_global(f)?;
                let g = desugar_nonstrict(&self.alph, *i, x, y);
                self.readout(&g)?.to_vec()
            }
        };
        let out = Rc::new(out);
        self.memo.insert(f.clone(), out.clone());
        Ok(out)
    }

    fn need_global(&self, f: &Formula) -> Result<()> {
        if self.c.mode() == CascadeMode::Local {
            return Err(Error::Fragment(format!(
                "`{}` needs yesterday, which local cascades cannot compute",
                print_event(&self.alph, f)
            )));
        }
        Ok(())
    }

    fn since(&mut self, f: &Formula, j: ProcessId, x: &Formula, y: &Formula) -> Result<Vec<BitExpr>> {
        let rb = self.readout(x)?[j].clone();
        let rg = self.readout(y)?[j].clone();
        let occ = self.occurs(j)?;
        let mut deps: BTreeSet<usize> = rb.stages();
        deps.extend(rg.stages());
        deps.insert(occ);
        let deps: Vec<usize> = deps.into_iter().collect();
        // value at e from j's state after the previous j-event
        let update = move |bit: &dyn Fn(usize) -> bool, keep: U2Action| {
            if !bit(occ) {
                U2Action::Reset(false)
            } else if rg.eval_by(bit) {
                U2Action::Reset(true)
            } else if !rb.eval_by(bit) {
                U2Action::Reset(false)
            } else {
                keep
            }
        };
        let name = print_event(&self.alph, f);
        let main = {
            let rule = Rule::tabulate(deps.clone(), |bit| update(bit, U2Action::Id))?;
            self.stage(j, format!("({name})@{}", self.alph.process_name(j)), |_| Ok(rule.clone()))?
        };
        let mut out = vec![BitExpr::Const(false); self.alph.num_processes()];
        out[j] = BitExpr::Bit(main);
        let mut with_main = deps.clone();
        with_main.push(main);
        for i in 0..self.alph.num_processes() {
            let shares = self.alph.actions_of(i).iter().any(|&a| self.alph.loc(a).contains(&j));
            if i == j || !shares {
                continue;
            }
            let copy = Rule::tabulate(with_main.clone(), |bit| update(bit, U2Action::Reset(bit(main))))?;
            let alph = self.alph.clone();
            let k = self.stage(i, format!("({name})@{}", alph.process_name(i)), |a| {
                Ok(if alph.loc(a).contains(&j) {
                    copy.clone()
                } else {
                    Rule::constant(U2Action::Reset(false))
                })
            })?;
            out[i] = BitExpr::Bit(k);
        }
        Ok(out)
    }

    fn yesterday(&mut self, f: &Formula, j: ProcessId, x: &Formula) -> Result<Vec<BitExpr>> {
        let rb = self.readout(x)?[j].clone();
        let occ = self.occurs(j)?;
        let mut deps = rb.stages();
        deps.insert(occ);
        let rule = Rule::tabulate(deps.into_iter().collect(), |bit| {
            U2Action::Reset(bit(occ) && rb.eval_by(bit))
        })?;
        let name = print_event(&self.alph, f);
        let mut out = vec![BitExpr::Const(false); self.alph.num_processes()];
        for (i, slot) in out.iter_mut().enumerate() {
            if self.alph.actions_of(i).is_empty() {
                continue;
            }
            let k = self.stage(i, format!("({name})@{}", self.alph.process_name(i)), |_| Ok(rule.clone()))?;
            *slot = BitExpr::Bit(k);
        }
        Ok(out)
    }

    fn accept(&mut self, b: &TraceFormula) -> Result<BitExpr> {
        Ok(match &**b {
            Tr::True => BitExpr::Const(true),
            Tr::False => BitExpr::Const(false),
            Tr::Exists(i, f) => {
                let r = self.readout(f)?[*i].clone();
                BitExpr::Bit(self.occurs(*i)?).and(r)
            }
            Tr::Not(c) => self.accept(c)?.not(),
            Tr::Or(c, d) => self.accept(c)?.or(self.accept(d)?),
            Tr::And(c, d) => self.accept(c)?.and(self.accept(d)?),
        })
    }

    fn finish(self, readout: Vec<BitExpr>) -> CompiledCascade {
        let mut occurs = vec![None; self.alph.num_processes()];
        for (&i, &k) in &self.occ {
            occurs[i] = Some(k);
        }
        CompiledCascade {
            cascade: self.c,
            readout,
            occurs,
        }
    }
}

/// Compiles a formula without yesterday into a local cascade.
pub fn compile_local(alph: &Arc<DistributedAlphabet>, f: &Formula) -> Result<CompiledCascade> {
    let mut c = Compiler::new(alph, CascadeMode::Local);
    let r = c.readout(f)?.to_vec();
    Ok(c.finish(r))
}

/// Compiles any formula into a global cascade.
pub fn compile_global(alph: &Arc<DistributedAlphabet>, f: &Formula) -> Result<CompiledCascade> {
    let mut c = Compiler::new(alph, CascadeMode::Global);
    let r = c.readout(f)?.to_vec();
    Ok(c.finish(r))
}

/// A cascade recognising the traces satisfying `b`.
pub fn acceptor(alph: &Arc<DistributedAlphabet>, b: &TraceFormula, mode: CascadeMode) -> Result<Acceptor> {
    let mut c = Compiler::new(alph, mode);
    let accept = c.accept(b)?;
    Ok(Acceptor {
        cascade: c.c,
        accept,
    })
}
