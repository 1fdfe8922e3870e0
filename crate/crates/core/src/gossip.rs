//! Local simulation of the global state by gossip.
//!
//! Every process keeps a vector clock (how many events of each process it
//! knows about) and its best estimate of the automaton's global state.
//! At a synchronisation the participants merge what they know: for each
//! process `j` they trust the participant that has seen the most `j`
//! events. Clocks are unbounded counters, which keeps the construction
//! simple and exact at the cost of finiteness.

use std::fmt::Write as _;

use crate::alphabet::{ActionId, ProcessId};
use crate::automaton::AsyncAutomaton;
use crate::error::{Error, Result};
use crate::trace::{Config, Trace};
use crate::transducer::ExtendedAlphabet;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Knowledge {
    /// `clock[j]`: number of `j`-events known.
    pub clock: Vec<u32>,
    /// Estimated global state of the base automaton.
    pub estimate: usize,
}

/// The gossip automaton `𝒢(A)`, run operationally.
#[derive(Debug, Clone)]
pub struct GossipAutomaton {
    base: AsyncAutomaton,
}

/// Least participant holding the largest count for `j`.
pub fn gossip_latest(parts: &[(ProcessId, &Knowledge)], j: ProcessId) -> ProcessId {
    let mut best: Option<(ProcessId, u32)> = None;
    for &(l, k) in parts {
        let c = k.clock[j];
        best = match best {
            None => Some((l, c)),
            Some((bl, bc)) if c > bc || (c == bc && l < bl) => Some((l, c)),
            keep => keep,
        };
    }
    best.expect("nonempty participant set").0
}

impl GossipAutomaton {
    pub fn new(base: &AsyncAutomaton) -> Self {
        GossipAutomaton { base: base.clone() }
    }

    pub fn base(&self) -> &AsyncAutomaton {
        &self.base
    }

    pub fn initial(&self) -> Vec<Knowledge> {
        let n = self.base.space().num_processes();
        vec![
            Knowledge {
                clock: vec![0; n],
                estimate: self.base.initial(),
            };
            n
        ]
    }

    /// The merged estimate of a set of participants.
    pub fn global_state(&self, parts: &[(ProcessId, &Knowledge)]) -> usize {
        let space = self.base.space();
        let local: Vec<u32> = (0..space.num_processes())
            .map(|j| {
                let l = gossip_latest(parts, j);
                let k = parts.iter().find(|p| p.0 == l).unwrap().1;
                space.component(k.estimate, j)
            })
            .collect();
        space.encode(&local)
    }

    /// One joint step on `a`; returns the merged global state before it.
    pub fn step(&self, know: &mut [Knowledge], a: ActionId) -> usize {
        let ps = self.base.alphabet().loc(a);
        let parts: Vec<(ProcessId, &Knowledge)> = ps.iter().map(|&i| (i, &know[i])).collect();
        let before = self.global_state(&parts);
        let n = know.len();
        let mut clock = vec![0u32; n];
        for (_, k) in &parts {
            for (c, &x) in clock.iter_mut().zip(&k.clock) {
                *c = (*c).max(x);
            }
        }
        for &i in ps {
            clock[i] += 1;
        }
        let after = self.base.step(before, a);
        for &i in ps {
            know[i] = Knowledge {
                clock: clock.clone(),
                estimate: after,
            };
        }
        before
    }

    /// Knowledge of every process after the events of `c`.
    pub fn run_config(&self, t: &Trace, c: &Config) -> Vec<Knowledge> {
        let mut know = self.initial();
        for a in t.word_of(c) {
            self.step(&mut know, a);
        }
        know
    }

    /// Per event, the merged global state just before it, and the final
    /// knowledge.
    pub fn run(&self, t: &Trace) -> (Vec<usize>, Vec<Knowledge>) {
        let mut know = self.initial();
        let before = t.labels().iter().map(|&a| self.step(&mut know, a)).collect();
        (before, know)
    }

    /// `χ_𝒢(A)`: the joint knowledge of `loc(e)` just before each event.
    pub fn local_annotations(&self, t: &Trace) -> Vec<Vec<(ProcessId, Knowledge)>> {
        let mut know = self.initial();
        let mut out = Vec::with_capacity(t.len());
        for &a in t.labels() {
            let ps = self.base.alphabet().loc(a);
            out.push(ps.iter().map(|&i| (i, know[i].clone())).collect());
            self.step(&mut know, a);
        }
        out
    }

    /// `globalstate` of a joint annotation.
    pub fn global_state_of(&self, joint: &[(ProcessId, Knowledge)]) -> usize {
        let parts: Vec<(ProcessId, &Knowledge)> = joint.iter().map(|(i, k)| (*i, k)).collect();
        self.global_state(&parts)
    }

    /// The merged estimate of all processes after the whole trace.
    pub fn final_global(&self, t: &Trace) -> usize {
        let (_, know) = self.run(t);
        let parts: Vec<(ProcessId, &Knowledge)> = know.iter().enumerate().collect();
        self.global_state(&parts)
    }

    /// `θ_A` computed by gossip alone.
    pub fn realize_global(&self, ext: &ExtendedAlphabet, t: &Trace) -> Result<Trace> {
        if **self.base.alphabet() != **t.alphabet() {
            return Err(Error::AlphabetMismatch);
        }
        let (before, _) = self.run(t);
        let labels: Vec<ActionId> = (0..t.len()).map(|e| ext.letter(t.label(e), before[e])).collect();
        t.relabel(ext.alphabet(), &labels)
    }

    /// Human readable log of a run.
    pub fn demo(&self, t: &Trace) -> String {
        let alph = self.base.alphabet();
        let mut know = self.initial();
        let mut s = String::new();
        for (e, &a) in t.labels().iter().enumerate() {
            let before = self.step(&mut know, a);
            let _ = writeln!(
                s,
                "e{e} {} merged {} -> {}",
                alph.action_name(a),
                self.base.format_state(before),
                self.base.format_state(self.base.step(before, a))
            );
            for &i in alph.loc(a) {
                let _ = writeln!(s, "    {} clock {:?}", alph.process_name(i), know[i].clock);
            }
        }
        let parts: Vec<(ProcessId, &Knowledge)> = know.iter().enumerate().collect();
        let _ = writeln!(s, "final {}", self.base.format_state(self.global_state(&parts)));
        s
    }
}
