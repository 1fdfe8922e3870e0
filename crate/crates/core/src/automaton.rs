//! Asynchronous automata: one local state set per process and, for every
//! action `a`, a transition on the joint states of `loc(a)`.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::alphabet::{ActionId, AlphabetJson, DistributedAlphabet, ProcessId};
use crate::atm::{AsyncMorphism, Atm, StateSpace};
use crate::error::{Error, Result};
use crate::monoid::Transformation;
use crate::trace::{Config, Trace};

#[derive(Debug, Clone)]
pub struct AsyncAutomaton {
    morphism: AsyncMorphism,
    initial: usize,
    names: Vec<Vec<String>>,
}

/// The run of an automaton on a trace: the global state reached at every
/// configuration.
#[derive(Debug, Clone)]
pub struct Run {
    pub configs: Vec<Config>,
    pub states: Vec<usize>,
}

impl Run {
    pub fn state_at(&self, c: &Config) -> Option<usize> {
        self.configs.iter().position(|d| d == c).map(|k| self.states[k])
    }
}

impl AsyncAutomaton {
    /// `tables[a]` maps joint `loc(a)`-states; `initial` lists one local
    /// state per process.
    pub fn new(
        alphabet: &Arc<DistributedAlphabet>,
        sizes: Vec<usize>,
        tables: Vec<Vec<u32>>,
        initial: &[u32],
    ) -> Result<Self> {
        let space = StateSpace::new(sizes)?;
        let morphism = AsyncMorphism::from_kernels(alphabet, space, tables)?;
        AsyncAutomaton::from_morphism(morphism, initial)
    }

    /// Builds tables from a rule giving the new joint state for each action
    /// and joint state (as local states of `loc(a)`).
    pub fn from_rule(
        alphabet: &Arc<DistributedAlphabet>,
        sizes: Vec<usize>,
        initial: &[u32],
        mut rule: impl FnMut(ActionId, &[u32]) -> Vec<u32>,
    ) -> Result<Self> {
        let space = StateSpace::new(sizes)?;
        let mut tables = Vec::with_capacity(alphabet.num_actions());
        for a in 0..alphabet.num_actions() {
            let ps = alphabet.loc(a);
            let sub = space.restrict(ps);
            let mut table = Vec::with_capacity(sub.total());
            for j in 0..sub.total() {
                let next = rule(a, &sub.decode(j));
                table.push(sub.encode(&next) as u32);
            }
            tables.push(table);
        }
        AsyncAutomaton::new(alphabet, space.sizes().to_vec(), tables, initial)
    }

    pub fn from_morphism(morphism: AsyncMorphism, initial: &[u32]) -> Result<Self> {
        let space = morphism.space();
        if initial.len() != space.num_processes()
            || initial.iter().enumerate().any(|(i, &x)| x as usize >= space.size(i))
        {
            return Err(Error::Malformed("initial state out of range".into()));
        }
        let names = space
            .sizes()
            .iter()
            .map(|&n| (0..n).map(|x| x.to_string()).collect())
            .collect();
        let initial = space.encode(initial);
        Ok(AsyncAutomaton {
            morphism,
            initial,
            names,
        })
    }

    pub fn with_state_names(mut self, names: Vec<Vec<String>>) -> Result<Self> {
        let space = self.space();
        if names.len() != space.num_processes()
            || names.iter().enumerate().any(|(i, n)| n.len() != space.size(i))
        {
            return Err(Error::Malformed("state names do not match state counts".into()));
        }
        self.names = names;
        Ok(self)
    }

    pub fn alphabet(&self) -> &Arc<DistributedAlphabet> {
        self.morphism.alphabet()
    }

    pub fn space(&self) -> &StateSpace {
        self.morphism.space()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn initial_local(&self) -> Vec<u32> {
        self.space().decode(self.initial)
    }

    pub fn state_names(&self) -> &[Vec<String>] {
        &self.names
    }

    pub fn morphism(&self) -> &AsyncMorphism {
        &self.morphism
    }

    pub fn table(&self, a: ActionId) -> &[u32] {
        self.morphism.kernel(a)
    }

    /// `Δ_a` on global states.
    pub fn global_transition(&self, a: ActionId) -> &Transformation {
        self.morphism.image(a)
    }

    /// The transition monoid, generated by the global transitions.
    pub fn transition_atm(&self, limit: usize) -> Result<Atm> {
        self.morphism.target(limit)
    }

    #[inline]
    pub fn step(&self, g: usize, a: ActionId) -> usize {
        self.morphism.step(g, a)
    }

    pub fn run_word(&self, w: &[ActionId]) -> usize {
        self.morphism.apply_word(self.initial, w)
    }

    pub fn run_word_from(&self, g: usize, w: &[ActionId]) -> usize {
        self.morphism.apply_word(g, w)
    }

    pub fn run_final(&self, t: &Trace) -> usize {
        self.run_word(t.labels())
    }

    /// Global state after `↓e` for every event, in event order.
    pub fn states_after_events(&self, t: &Trace) -> Vec<usize> {
        let mut g = self.initial;
        let mut out = Vec::with_capacity(t.len());
        // ρ(↓e) agrees with the sequential state on loc(e); elsewhere take
        // the state after the last event of that process below e
        for e in 0..t.len() {
            g = self.step(g, t.label(e));
            out.push(g);
        }
        (0..t.len())
            .map(|e| {
                let mut local = self.space().decode(self.initial);
                for (i, x) in local.iter_mut().enumerate() {
                    let last = if t.is_process_event(e, i) {
                        Some(e)
                    } else {
                        t.last_below(e, i)
                    };
                    if let Some(f) = last {
                        *x = self.space().component(out[f], i);
                    }
                }
                self.space().encode(&local)
            })
            .collect()
    }

    /// Global state at `↓e \ {e}`.
    pub fn state_before_event(&self, t: &Trace, after: &[usize], e: usize) -> usize {
        let mut local = self.space().decode(self.initial);
        for (i, x) in local.iter_mut().enumerate() {
            if let Some(f) = t.last_below(e, i) {
                *x = self.space().component(after[f], i);
            }
        }
        self.space().encode(&local)
    }

    pub fn run(&self, t: &Trace) -> Result<Run> {
        let configs = t.configurations()?;
        let states = configs.iter().map(|c| self.run_word(&t.word_of(c))).collect();
        Ok(Run { configs, states })
    }

    pub fn accepts(&self, finals: &BTreeSet<usize>, t: &Trace) -> bool {
        finals.contains(&self.run_final(t))
    }

    pub fn format_state(&self, g: usize) -> String {
        let local = self.space().decode(g);
        let parts: Vec<String> = local
            .iter()
            .enumerate()
            .map(|(i, &x)| format!("{}:{}", self.alphabet().process_name(i), self.names[i][x as usize]))
            .collect();
        format!("{{{}}}", parts.join(","))
    }

    pub fn to_json(&self) -> AutomatonJson {
        let alph = self.alphabet();
        let states = (0..alph.num_processes())
            .map(|i| (alph.process_name(i).to_string(), self.names[i].clone()))
            .collect();
        let init = self.initial_local();
        let initial = (0..alph.num_processes())
            .map(|i| {
                (
                    alph.process_name(i).to_string(),
                    StateRef::Name(self.names[i][init[i] as usize].clone()),
                )
            })
            .collect();
        let transitions = (0..alph.num_actions())
            .map(|a| (alph.action_name(a).to_string(), TableJson::Indices(self.table(a).to_vec())))
            .collect();
        AutomatonJson {
            alphabet: Some(alph.to_json()),
            states,
            initial,
            transitions,
            finals: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateRef {
    Index(u32),
    Name(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StatesJson {
    Count(usize),
    Names(Vec<String>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TableJson {
    /// New joint state index for each joint state index.
    Indices(Vec<u32>),
    /// Sparse map from joint state to joint state, each written as the
    /// comma separated local states of `loc(a)`; other states are fixed.
    Map(IndexMap<String, String>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AutomatonJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphabet: Option<AlphabetJson>,
    pub states: IndexMap<String, Vec<String>>,
    #[serde(default)]
    pub initial: IndexMap<String, StateRef>,
    #[serde(default)]
    pub transitions: IndexMap<String, TableJson>,
    #[serde(default, rename = "final", skip_serializing_if = "Option::is_none")]
    pub finals: Option<Vec<IndexMap<String, StateRef>>>,
}

#[derive(Deserialize)]
struct LooseAutomatonJson {
    #[serde(default)]
    alphabet: Option<AlphabetJson>,
    states: IndexMap<String, StatesJson>,
    #[serde(default)]
    initial: IndexMap<String, StateRef>,
    #[serde(default)]
    transitions: IndexMap<String, TableJson>,
    #[serde(default, rename = "final")]
    finals: Option<Vec<IndexMap<String, StateRef>>>,
}

fn resolve(names: &[String], r: &StateRef) -> Result<u32> {
    match r {
        StateRef::Index(i) if (*i as usize) < names.len() => Ok(*i),
        StateRef::Index(i) => Err(Error::OutOfRange {
            value: *i as usize,
            size: names.len(),
        }),
        StateRef::Name(n) => names
            .iter()
            .position(|m| m == n)
            .map(|p| p as u32)
            .ok_or_else(|| Error::Malformed(format!("unknown local state `{n}`"))),
    }
}

/// Reads an automaton. An alphabet given by the caller overrides the one in
/// the file; the file must carry one otherwise. Missing transitions are the
/// identity. Returns the automaton and its final global states, if listed.
pub fn automaton_from_json(
    v: &Value,
    alphabet: Option<&Arc<DistributedAlphabet>>,
) -> Result<(AsyncAutomaton, Option<BTreeSet<usize>>)> {
    let j: LooseAutomatonJson =
        serde_json::from_value(v.clone()).map_err(|e| Error::Malformed(e.to_string()))?;
    let alph = match (alphabet, &j.alphabet) {
        (Some(a), _) => a.clone(),
        (None, Some(aj)) => Arc::new(DistributedAlphabet::from_json(aj)?),
        (None, None) => return Err(Error::Malformed("automaton without alphabet".into())),
    };
    let np = alph.num_processes();
    let mut names: Vec<Vec<String>> = vec![vec!["0".to_string()]; np];
    for (p, s) in &j.states {
        let i = alph.process_id(p)?;
        names[i] = match s {
            StatesJson::Count(0) => return Err(Error::Malformed(format!("`{p}` has no states"))),
            StatesJson::Count(n) => (0..*n).map(|x| x.to_string()).collect(),
            StatesJson::Names(v) if v.is_empty() => {
                return Err(Error::Malformed(format!("`{p}` has no states")))
            }
            StatesJson::Names(v) => v.clone(),
        };
    }
    let sizes: Vec<usize> = names.iter().map(Vec::len).collect();
    let space = StateSpace::new(sizes.clone())?;
    let mut initial = vec![0u32; np];
    for (p, r) in &j.initial {
        let i = alph.process_id(p)?;
        initial[i] = resolve(&names[i], r)?;
    }
    let mut tables: Vec<Vec<u32>> = (0..alph.num_actions())
        .map(|a| (0..space.joint_size(alph.loc(a)) as u32).collect())
        .collect();
    for (name, tj) in &j.transitions {
        let a = alph.action_id(name)?;
        let ps = alph.loc(a);
        let sub = space.restrict(ps);
        let parse_joint = |s: &str| -> Result<usize> {
            let parts: Vec<&str> = s.split(',').map(str::trim).collect();
            if parts.len() != ps.len() {
                return Err(Error::Malformed(format!("joint state `{s}` for `{name}`")));
            }
            let local = parts
                .iter()
                .zip(ps)
                .map(|(x, &i)| resolve(&names[i], &StateRef::Name(x.to_string())))
                .collect::<Result<Vec<_>>>()?;
            Ok(sub.encode(&local))
        };
        match tj {
            TableJson::Indices(v) => {
                if v.len() != sub.total() {
                    return Err(Error::DegreeMismatch {
                        expected: sub.total(),
                        found: v.len(),
                    });
                }
                tables[a] = v.clone();
            }
            TableJson::Map(m) => {
                for (from, to) in m {
                    tables[a][parse_joint(from)?] = parse_joint(to)? as u32;
                }
            }
        }
    }
    let aut = AsyncAutomaton::new(&alph, sizes, tables, &initial)?.with_state_names(names.clone())?;
    let finals = match &j.finals {
        None => None,
        Some(list) => {
            let mut out = BTreeSet::new();
            for g in list {
                let mut local = vec![0u32; np];
                for (p, r) in g {
                    let i = alph.process_id(p)?;
                    local[i] = resolve(&names[i], r)?;
                }
                out.insert(space.encode(&local));
            }
            Some(out)
        }
    };
    Ok((aut, finals))
}

/// Product of automata over the same alphabet, with per-process local
/// states paired in order.
pub fn product(parts: &[&AsyncAutomaton]) -> Result<AsyncAutomaton> {
    let first = parts
        .first()
        .ok_or_else(|| Error::Precondition("empty product".into()))?;
    let alph = first.alphabet().clone();
    if parts.iter().any(|p| **p.alphabet() != *alph) {
        return Err(Error::AlphabetMismatch);
    }
    let np = alph.num_processes();
    let sizes: Vec<usize> = (0..np)
        .map(|i| parts.iter().map(|p| p.space().size(i)).product())
        .collect();
    let split = |i: ProcessId, mut x: u32| -> Vec<u32> {
        let mut out = vec![0u32; parts.len()];
        for (k, p) in parts.iter().enumerate().rev() {
            let n = p.space().size(i) as u32;
            out[k] = x % n;
            x /= n;
        }
        out
    };
    let join = |i: ProcessId, xs: &[u32]| -> u32 {
        xs.iter()
            .zip(parts)
            .fold(0u32, |acc, (&x, p)| acc * p.space().size(i) as u32 + x)
    };
    let initial: Vec<u32> = (0..np)
        .map(|i| {
            let xs: Vec<u32> = parts.iter().map(|p| p.initial_local()[i]).collect();
            join(i, &xs)
        })
        .collect();
    let mut memo: HashMap<(ActionId, Vec<u32>), Vec<u32>> = HashMap::new();
    AsyncAutomaton::from_rule(&alph, sizes, &initial, |a, local| {
        memo.entry((a, local.to_vec()))
            .or_insert_with(|| {
                let ps = alph.loc(a);
                let per: Vec<Vec<u32>> = ps.iter().zip(local).map(|(&i, &x)| split(i, x)).collect();
                let mut next: Vec<Vec<u32>> = per.clone();
                for (k, p) in parts.iter().enumerate() {
                    let sub = p.space().restrict(ps);
                    let joint: Vec<u32> = per.iter().map(|v| v[k]).collect();
                    let to = sub.decode(p.table(a)[sub.encode(&joint)] as usize);
                    for (slot, &x) in next.iter_mut().zip(&to) {
                        slot[k] = x;
                    }
                }
                ps.iter().zip(&next).map(|(&i, v)| join(i, v)).collect()
            })
            .clone()
    })
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

    /// The example automaton: p1 flips between 1 and 2 on a and b, the
    /// other processes have one state.
    fn a_ex() -> AsyncAutomaton {
        AsyncAutomaton::new(&ex(), vec![2, 1, 1], vec![vec![0, 0], vec![1, 1], vec![0]], &[0, 0, 0]).unwrap()
    }

    #[test]
    fn runs_agree_on_linearizations() {
        let a = a_ex();
        for t in enumerate_traces(&ex(), 5) {
            let fin = a.run_final(&t);
            for w in t.linearizations() {
                assert_eq!(a.run_word(&w), fin);
            }
            let r = a.run(&t).unwrap();
            assert_eq!(r.state_at(&t.full_config()), Some(fin));
        }
    }

    #[test]
    fn state_after_events() {
        let a = a_ex();
        let t = Trace::from_names(&ex(), "bac").unwrap();
        let after = a.states_after_events(&t);
        for e in 0..t.len() {
            let c = t.down(e).clone();
            assert_eq!(after[e], a.run_word(&t.word_of(&c)), "{e}");
        }
        // a and c are concurrent, so ↓c misses the a
        assert_ne!(after[t.len() - 1], a.run_final(&t));
    }

    #[test]
    fn json_round_trip() {
        let a = a_ex();
        let v = serde_json::to_value(a.to_json()).unwrap();
        let (b, fin) = automaton_from_json(&v, None).unwrap();
        assert!(fin.is_none());
        for t in enumerate_traces(&ex(), 3) {
            assert_eq!(a.run_final(&t), b.run_final(&t));
        }
    }

    #[test]
    fn sparse_json_with_names() {
        let v: Value = serde_json::from_str(
            r#"{
              "alphabet": {"processes":["p","q"],"actions":{"p":["a","s"],"q":["s"]}},
              "states": {"p":["lo","hi"], "q": 2},
              "initial": {"p":"lo"},
              "transitions": {"a": {"lo":"hi"}, "s": {"hi,0":"lo,1"}},
              "final": [{"p":"lo","q":1}]
            }"#,
        )
        .unwrap();
        let (aut, fin) = automaton_from_json(&v, None).unwrap();
        let fin = fin.unwrap();
        let alph = aut.alphabet().clone();
        assert!(aut.accepts(&fin, &Trace::from_names(&alph, "as").unwrap()));
        assert!(!aut.accepts(&fin, &Trace::from_names(&alph, "s").unwrap()));
        assert_eq!(aut.format_state(aut.initial()), "{p:lo,q:0}");
    }

    #[test]
    fn product_runs_componentwise() {
        let a = a_ex();
        let b = AsyncAutomaton::new(&ex(), vec![1, 2, 1], vec![vec![0], vec![1, 0], vec![0, 0]], &[0, 0, 0]).unwrap();
        let p = product(&[&a, &b]).unwrap();
        for t in enumerate_traces(&ex(), 4) {
            let (x, y, z) = (a.space().decode(a.run_final(&t)), b.space().decode(b.run_final(&t)), p.space().decode(p.run_final(&t)));
            for i in 0..3 {
                assert_eq!(z[i], x[i] * b.space().size(i) as u32 + y[i]);
            }
        }
    }
}
