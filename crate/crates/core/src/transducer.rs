//! Extended alphabets and the two asynchronous transducers of an automaton.
//!
//! The local transducer labels each event `e` with `(a, s_a)` where `s_a`
//! is the joint `loc(a)`-state before `e`. The global transducer labels it
//! with the whole global state reached at `↓e \ {e}`.

use std::sync::Arc;

use crate::alphabet::{ActionId, DistributedAlphabet};
use crate::atm::StateSpace;
use crate::automaton::AsyncAutomaton;
use crate::error::{Error, Result};
use crate::trace::Trace;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extension {
    /// Letters `(a, s_a)` with `s_a` a joint `loc(a)`-state.
    Local,
    /// Letters `(a, s)` with `s` a global state.
    Global,
}

/// An alphabet of annotated letters over a base alphabet, with the same
/// processes and each letter placed where its base letter is.
#[derive(Debug, Clone)]
pub struct ExtendedAlphabet {
    kind: Extension,
    base: Arc<DistributedAlphabet>,
    alphabet: Arc<DistributedAlphabet>,
    ids: Vec<Vec<ActionId>>,
    decode: Vec<(ActionId, usize)>,
}

impl ExtendedAlphabet {
    fn build(
        kind: Extension,
        base: &Arc<DistributedAlphabet>,
        counts: &[usize],
        name: impl Fn(ActionId, usize) -> String,
    ) -> Result<Self> {
        let mut per_process: Vec<(String, Vec<String>)> = base
            .process_names()
            .iter()
            .map(|p| (p.clone(), Vec::new()))
            .collect();
        let mut order = Vec::new();
        for a in base.actions_in_order() {
            for s in 0..counts[a] {
                let n = name(a, s);
                for &i in base.loc(a) {
                    per_process[i].1.push(n.clone());
                }
                order.push(n);
            }
        }
        let alphabet = DistributedAlphabet::new(base.process_names(), &per_process)?
            .with_action_order(&order)?;
        let mut ids = vec![Vec::new(); base.num_actions()];
        let mut decode = vec![(0, 0); alphabet.num_actions()];
        for (a, row) in ids.iter_mut().enumerate() {
            for s in 0..counts[a] {
                let id = alphabet.action_id(&name(a, s))?;
                row.push(id);
                decode[id] = (a, s);
            }
        }
        Ok(ExtendedAlphabet {
            kind,
            base: base.clone(),
            alphabet: Arc::new(alphabet),
            ids,
            decode,
        })
    }

    /// `Σ^{∥S}` for a state space with named local states.
    pub fn local(base: &Arc<DistributedAlphabet>, space: &StateSpace, names: &[Vec<String>]) -> Result<Self> {
        let counts: Vec<usize> = (0..base.num_actions()).map(|a| space.joint_size(base.loc(a))).collect();
        ExtendedAlphabet::build(Extension::Local, base, &counts, |a, s| {
            let ps = base.loc(a);
            let local = space.joint_decode(ps, s);
            let parts: Vec<String> = ps
                .iter()
                .zip(&local)
                .map(|(&i, &x)| format!("{}:{}", base.process_name(i), names[i][x as usize]))
                .collect();
            format!("{}@{{{}}}", base.action_name(a), parts.join(","))
        })
    }

    /// `Σ^S` for a state space with named local states.
    pub fn global(base: &Arc<DistributedAlphabet>, space: &StateSpace, names: &[Vec<String>]) -> Result<Self> {
        let counts = vec![space.total(); base.num_actions()];
        ExtendedAlphabet::build(Extension::Global, base, &counts, |a, s| {
            let local = space.decode(s);
            let parts: Vec<&str> = local
                .iter()
                .enumerate()
                .map(|(i, &x)| names[i][x as usize].as_str())
                .collect();
            format!("{}@[{}]", base.action_name(a), parts.join(","))
        })
    }

    pub fn local_of(a: &AsyncAutomaton) -> Result<Self> {
        ExtendedAlphabet::local(a.alphabet(), a.space(), a.state_names())
    }

    pub fn global_of(a: &AsyncAutomaton) -> Result<Self> {
        ExtendedAlphabet::global(a.alphabet(), a.space(), a.state_names())
    }

    pub fn kind(&self) -> Extension {
        self.kind
    }

    pub fn base(&self) -> &Arc<DistributedAlphabet> {
        &self.base
    }

    pub fn alphabet(&self) -> &Arc<DistributedAlphabet> {
        &self.alphabet
    }

    /// The letter `(a, annotation)`.
    pub fn letter(&self, a: ActionId, annotation: usize) -> ActionId {
        self.ids[a][annotation]
    }

    pub fn annotations(&self, a: ActionId) -> usize {
        self.ids[a].len()
    }

    /// Base letter and annotation of an extended letter.
    pub fn split(&self, letter: ActionId) -> (ActionId, usize) {
        self.decode[letter]
    }

    /// Forgets annotations.
    pub fn project(&self, t: &Trace) -> Result<Trace> {
        let labels: Vec<ActionId> = t.labels().iter().map(|&l| self.decode[l].0).collect();
        t.relabel(&self.base, &labels)
    }
}

fn check_base(a: &AsyncAutomaton, t: &Trace) -> Result<()> {
    if **a.alphabet() != **t.alphabet() {
        return Err(Error::AlphabetMismatch);
    }
    Ok(())
}

/// `χ_A`: each event gets the joint state of its processes just before it.
pub fn local_transducer(a: &AsyncAutomaton, ext: &ExtendedAlphabet, t: &Trace) -> Result<Trace> {
    check_base(a, t)?;
    let mut g = a.initial();
    let mut labels = Vec::with_capacity(t.len());
    for &l in t.labels() {
        labels.push(ext.letter(l, a.space().project(g, t.alphabet().loc(l))));
        g = a.step(g, l);
    }
    t.relabel(ext.alphabet(), &labels)
}

/// `θ_A`: each event gets the global state at `↓e \ {e}`.
pub fn global_transducer(a: &AsyncAutomaton, ext: &ExtendedAlphabet, t: &Trace) -> Result<Trace> {
    check_base(a, t)?;
    let after = a.states_after_events(t);
    let labels: Vec<ActionId> = (0..t.len())
        .map(|e| ext.letter(t.label(e), a.state_before_event(t, &after, e)))
        .collect();
    t.relabel(ext.alphabet(), &labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::enumerate_traces;

    fn ex() -> Arc<DistributedAlphabet> {
        Arc::new(
            DistributedAlphabet::new(
                &["p1", "p2", "p3"],
                &[("p1", vec!["a", "b"]), ("p2", vec!["b", "c"]), ("p3", vec!["c"])],
            )
            .unwrap(),
        )
    }

    fn a_ex() -> AsyncAutomaton {
        AsyncAutomaton::new(&ex(), vec![2, 1, 1], vec![vec![0, 0], vec![1, 1], vec![0]], &[0, 0, 0])
            .unwrap()
            .with_state_names(vec![
                vec!["1".into(), "2".into()],
                vec!["⊥2".into()],
                vec!["⊥3".into()],
            ])
            .unwrap()
    }

    #[test]
    fn extended_letters() {
        let a = a_ex();
        let loc = ExtendedAlphabet::local_of(&a).unwrap();
        assert_eq!(loc.alphabet().num_actions(), 2 + 2 + 1);
        let names = loc.alphabet().action_names().to_vec();
        assert!(names.contains(&"b@{p1:2,p2:⊥2}".to_string()));
        let glob = ExtendedAlphabet::global_of(&a).unwrap();
        assert_eq!(glob.alphabet().num_actions(), 3 * 2);
        assert!(glob.alphabet().action_id("c@[2,⊥2,⊥3]").is_ok());
    }

    #[test]
    fn local_labels_follow_p1() {
        let a = a_ex();
        let loc = ExtendedAlphabet::local_of(&a).unwrap();
        let t = Trace::from_names(&ex(), "bab").unwrap();
        let x = local_transducer(&a, &loc, &t).unwrap();
        let names: Vec<&str> = x.labels().iter().map(|&l| x.alphabet().action_name(l)).collect();
        assert_eq!(names, vec!["b@{p1:1,p2:⊥2}", "a@{p1:2}", "b@{p1:1,p2:⊥2}"]);
    }

    #[test]
    fn global_annotation_uses_causal_past() {
        let a = a_ex();
        let glob = ExtendedAlphabet::global_of(&a).unwrap();
        // b c a: c and a are concurrent, c only sees the b
        let t = Trace::from_names(&ex(), "bca").unwrap();
        let x = global_transducer(&a, &glob, &t).unwrap();
        let names: Vec<String> = x.labels().iter().map(|&l| x.alphabet().action_name(l).to_string()).collect();
        assert!(names.contains(&"c@[2,⊥2,⊥3]".to_string()));
        assert!(names.contains(&"a@[2,⊥2,⊥3]".to_string()));
    }

    #[test]
    fn transducers_preserve_the_poset() {
        let a = a_ex();
        let loc = ExtendedAlphabet::local_of(&a).unwrap();
        let glob = ExtendedAlphabet::global_of(&a).unwrap();
        for t in enumerate_traces(&ex(), 5) {
            let x = local_transducer(&a, &loc, &t).unwrap();
            let y = global_transducer(&a, &glob, &t).unwrap();
            assert_eq!(loc.project(&x).unwrap(), t);
            assert_eq!(glob.project(&y).unwrap(), t);
            assert_eq!(x.hasse(), t.hasse());
            // the global label restricted to loc(a) is the local label
            for e in 0..t.len() {
                let (_, s) = glob.split(y.label(e));
                let (_, sa) = loc.split(x.label(e));
                assert_eq!(a.space().project(s, t.loc_of(e)), sa);
            }
        }
    }
}
