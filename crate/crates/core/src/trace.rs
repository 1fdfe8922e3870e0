//! Mazurkiewicz traces as labelled partial orders.
//!
//! Events are stored in the canonical linearization (the lexicographically
//! least word under the alphabet's action order), so two traces are equal
//! exactly when their label sequences coincide.

use std::collections::{HashSet, VecDeque};
use std::fmt;
use std::fmt::Write as _;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use serde::Deserialize;

use crate::alphabet::{ActionId, DistributedAlphabet, ProcessId};
use crate::error::{Error, Result};

pub type EventId = usize;

/// A downward closed set of events.
pub type Config = FixedBitSet;

/// Above this many events `configurations` refuses to materialise.
pub const CONFIG_LIMIT: usize = 12;

#[derive(Clone)]
pub struct Trace {
    alphabet: Arc<DistributedAlphabet>,
    labels: Vec<ActionId>,
    /// `preds[e][k]`: previous event of process `loc(label(e))[k]`.
    preds: Vec<Vec<Option<EventId>>>,
    /// `below[e][i]`: last `i`-event strictly below `e`.
    below: Vec<Vec<Option<EventId>>>,
    down: Vec<FixedBitSet>,
}

impl PartialEq for Trace {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels
            && (Arc::ptr_eq(&self.alphabet, &other.alphabet) || self.alphabet == other.alphabet)
    }
}

impl Eq for Trace {}

impl Hash for Trace {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.labels.hash(state);
    }
}

impl fmt::Debug for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Trace[{}]", self)
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.alphabet.word_to_string(&self.labels))
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum WordJson {
    Text(String),
    List(Vec<String>),
}

#[derive(Deserialize)]
struct EventJson {
    label: String,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TraceJson {
    Word { word: WordJson },
    Events { events: Vec<EventJson> },
}

/// Lexicographically least linearization of the trace of `w`.
pub fn canonical_word(alph: &DistributedAlphabet, w: &[ActionId]) -> Vec<ActionId> {
    let n = alph.num_processes();
    let mut queues: Vec<VecDeque<usize>> = vec![VecDeque::new(); n];
    for (pos, &a) in w.iter().enumerate() {
        for &i in alph.loc(a) {
            queues[i].push_back(pos);
        }
    }
    let mut out = Vec::with_capacity(w.len());
    for _ in 0..w.len() {
        let mut best: Option<usize> = None;
        for q in &queues {
            let Some(&pos) = q.front() else { continue };
            let a = w[pos];
            let ready = alph.loc(a).iter().all(|&i| queues[i].front() == Some(&pos));
            if ready && best.is_none_or(|b| alph.rank(a) < alph.rank(w[b])) {
                best = Some(pos);
            }
        }
        let pos = best.expect("some event is always minimal");
        out.push(w[pos]);
        for &i in alph.loc(w[pos]) {
            queues[i].pop_front();
        }
    }
    out
}

impl Trace {
    pub fn empty(alphabet: &Arc<DistributedAlphabet>) -> Trace {
        Trace::from_canonical(alphabet.clone(), Vec::new())
    }

    /// The trace of a word.
    pub fn from_word(alphabet: &Arc<DistributedAlphabet>, w: &[ActionId]) -> Result<Trace> {
        if let Some(&a) = w.iter().find(|&&a| a >= alphabet.num_actions()) {
            return Err(Error::UnknownAction(format!("#{a}")));
        }
        let canon = canonical_word(alphabet, w);
        Ok(Trace::from_canonical(alphabet.clone(), canon))
    }

    pub fn from_names(alphabet: &Arc<DistributedAlphabet>, word: &str) -> Result<Trace> {
        Trace::from_word(alphabet, &alphabet.parse_word(word)?)
    }

    pub fn from_json_value(alphabet: &Arc<DistributedAlphabet>, v: &serde_json::Value) -> Result<Trace> {
        let j: TraceJson =
            serde_json::from_value(v.clone()).map_err(|e| Error::Malformed(e.to_string()))?;
        let w = match j {
            TraceJson::Word { word: WordJson::Text(s) } => alphabet.parse_word(&s)?,
            TraceJson::Word { word: WordJson::List(l) } => l
                .iter()
                .map(|a| alphabet.action_id(a))
                .collect::<Result<Vec<_>>>()?,
            TraceJson::Events { events } => events
                .iter()
                .map(|e| alphabet.action_id(&e.label))
                .collect::<Result<Vec<_>>>()?,
        };
        Trace::from_word(alphabet, &w)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let names: Vec<&str> = self.labels.iter().map(|&a| self.alphabet.action_name(a)).collect();
        serde_json::json!({ "word": names })
    }

    fn from_canonical(alphabet: Arc<DistributedAlphabet>, labels: Vec<ActionId>) -> Trace {
        let n = labels.len();
        let np = alphabet.num_processes();
        let mut last: Vec<Option<EventId>> = vec![None; np];
        let mut preds = Vec::with_capacity(n);
        let mut below: Vec<Vec<Option<EventId>>> = Vec::with_capacity(n);
        let mut down: Vec<FixedBitSet> = Vec::with_capacity(n);
        for (e, &a) in labels.iter().enumerate() {
            let p: Vec<Option<EventId>> = alphabet.loc(a).iter().map(|&i| last[i]).collect();
            let mut d = FixedBitSet::with_capacity(n);
            d.insert(e);
            let mut b: Vec<Option<EventId>> = vec![None; np];
            for &q in p.iter().flatten() {
                d.union_with(&down[q]);
                for i in 0..np {
                    let cand = if alphabet.has_action(i, labels[q]) {
                        Some(q)
                    } else {
                        below[q][i]
                    };
                    if cand > b[i] {
                        b[i] = cand;
                    }
                }
            }
            for &i in alphabet.loc(a) {
                last[i] = Some(e);
            }
            preds.push(p);
            below.push(b);
            down.push(d);
        }
        Trace {
            alphabet,
            labels,
            preds,
            below,
            down,
        }
    }

    pub fn alphabet(&self) -> &Arc<DistributedAlphabet> {
        &self.alphabet
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, e: EventId) -> ActionId {
        self.labels[e]
    }

    pub fn labels(&self) -> &[ActionId] {
        &self.labels
    }

    pub fn loc_of(&self, e: EventId) -> &[ProcessId] {
        self.alphabet.loc(self.labels[e])
    }

    /// The canonical form: the lexicographically least linearization.
    pub fn canonical_form(&self) -> &[ActionId] {
        &self.labels
    }

    /// Previous event of process `i`, for `i` in `loc(e)`.
    pub fn pred(&self, e: EventId, i: ProcessId) -> Option<EventId> {
        let k = self.loc_of(e).iter().position(|&x| x == i)?;
        self.preds[e][k]
    }

    /// The maximal `i`-event of `↓e \ {e}`.
    pub fn last_below(&self, e: EventId, i: ProcessId) -> Option<EventId> {
        self.below[e][i]
    }

    pub fn leq(&self, e: EventId, f: EventId) -> bool {
        self.down[f].contains(e)
    }

    pub fn lt(&self, e: EventId, f: EventId) -> bool {
        e != f && self.leq(e, f)
    }

    pub fn down(&self, e: EventId) -> &FixedBitSet {
        &self.down[e]
    }

    /// `↓e \ {e}` as a configuration.
    pub fn strict_down(&self, e: EventId) -> Config {
        let mut c = self.down[e].clone();
        c.set(e, false);
        c
    }

    pub fn events_of(&self, i: ProcessId) -> Vec<EventId> {
        (0..self.len()).filter(|&e| self.alphabet.has_action(i, self.labels[e])).collect()
    }

    pub fn is_process_event(&self, e: EventId, i: ProcessId) -> bool {
        self.alphabet.has_action(i, self.labels[e])
    }

    pub fn trace_equal(&self, other: &Trace) -> Result<bool> {
        self.same_alphabet(other)?;
        Ok(self.labels == other.labels)
    }

    fn same_alphabet(&self, other: &Trace) -> Result<()> {
        if Arc::ptr_eq(&self.alphabet, &other.alphabet) || self.alphabet == other.alphabet {
            Ok(())
        } else {
            Err(Error::AlphabetMismatch)
        }
    }

    pub fn concat(&self, other: &Trace) -> Result<Trace> {
        self.same_alphabet(other)?;
        let mut w = self.labels.clone();
        w.extend_from_slice(&other.labels);
        Trace::from_word(&self.alphabet, &w)
    }

    /// Appends one action.
    pub fn push(&self, a: ActionId) -> Result<Trace> {
        let mut w = self.labels.clone();
        w.push(a);
        Trace::from_word(&self.alphabet, &w)
    }

    /// Relabels every event with a letter of `alph`, which must share the
    /// process set and place each new label at the same processes.
    pub fn relabel(&self, alph: &Arc<DistributedAlphabet>, labels: &[ActionId]) -> Result<Trace> {
        if labels.len() != self.len() || alph.num_processes() != self.alphabet.num_processes() {
            return Err(Error::AlphabetMismatch);
        }
        for (e, &l) in labels.iter().enumerate() {
            if l >= alph.num_actions() || alph.loc(l) != self.loc_of(e) {
                return Err(Error::Precondition(format!(
                    "relabelling event {e} would change its location"
                )));
            }
        }
        let t = Trace::from_word(alph, labels)?;
        if t.labels != labels {
            return Err(Error::Internal("relabelled trace reordered its events".into()));
        }
        Ok(t)
    }

    pub fn empty_config(&self) -> Config {
        FixedBitSet::with_capacity(self.len())
    }

    pub fn full_config(&self) -> Config {
        let mut c = FixedBitSet::with_capacity(self.len());
        c.insert_range(..);
        c
    }

    pub fn is_configuration(&self, c: &Config) -> bool {
        c.len() == self.len() && c.ones().all(|e| self.down[e].is_subset(c))
    }

    pub fn enabled(&self, c: &Config) -> Vec<EventId> {
        (0..self.len())
            .filter(|&e| !c.contains(e) && self.preds[e].iter().flatten().all(|&p| c.contains(p)))
            .collect()
    }

    /// The unique `a`-event that extends `c`, if any.
    pub fn step(&self, c: &Config, a: ActionId) -> Option<Config> {
        let e = (0..self.len()).find(|&e| self.labels[e] == a && !c.contains(e))?;
        if self.preds[e].iter().flatten().all(|&p| c.contains(p)) {
            let mut d = c.clone();
            d.insert(e);
            Some(d)
        } else {
            None
        }
    }

    /// All configurations, ordered by size then by bit pattern.
    pub fn configurations(&self) -> Result<Vec<Config>> {
        if self.len() > CONFIG_LIMIT {
            return Err(Error::TooLarge {
                what: "trace for configuration enumeration",
                size: self.len(),
                limit: CONFIG_LIMIT,
            });
        }
        let mut seen: HashSet<Config> = HashSet::new();
        let mut frontier = vec![self.empty_config()];
        let mut out = Vec::new();
        seen.insert(self.empty_config());
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for c in frontier {
                for e in self.enabled(&c) {
                    let mut d = c.clone();
                    d.insert(e);
                    if seen.insert(d.clone()) {
                        next.push(d);
                    }
                }
                out.push(c);
            }
            next.sort_by(|x, y| x.as_slice().cmp(y.as_slice()));
            frontier = next;
        }
        Ok(out)
    }

    /// The latest `i`-event of `c`.
    pub fn last_in(&self, c: &Config, i: ProcessId) -> Option<EventId> {
        (0..self.len()).rev().find(|&e| c.contains(e) && self.is_process_event(e, i))
    }

    /// `∂_i(c)`: the part of `c` process `i` knows about.
    pub fn view(&self, c: &Config, i: ProcessId) -> Config {
        match self.last_in(c, i) {
            Some(e) => self.down[e].clone(),
            None => self.empty_config(),
        }
    }

    pub fn view_set(&self, c: &Config, ps: &[ProcessId]) -> Config {
        let mut out = self.empty_config();
        for &i in ps {
            out.union_with(&self.view(c, i));
        }
        out
    }

    /// Least `l` in `ps` whose view of `c` contains what every member of
    /// `ps` knows about process `j`.
    pub fn latest(&self, c: &Config, ps: &[ProcessId], j: ProcessId) -> Result<ProcessId> {
        let know: Vec<(ProcessId, Config)> = ps
            .iter()
            .map(|&l| (l, self.view(&self.view(c, l), j)))
            .collect();
        let mut sorted = know.clone();
        sorted.sort_by_key(|x| x.0);
        sorted
            .iter()
            .find(|(_, v)| know.iter().all(|(_, w)| w.is_subset(v)))
            .map(|x| x.0)
            .ok_or_else(|| Error::Precondition("latest over an empty process set".into()))
    }

    /// The prefix trace whose events are those of `c`, in order.
    pub fn restrict(&self, c: &Config) -> Trace {
        let w: Vec<ActionId> = c.ones().map(|e| self.labels[e]).collect();
        Trace::from_word(&self.alphabet, &w).expect("labels come from this alphabet")
    }

    /// Events of `c` in storage order; a linearization of `c`.
    pub fn word_of(&self, c: &Config) -> Vec<ActionId> {
        c.ones().map(|e| self.labels[e]).collect()
    }

    /// Covering pairs `(e, f)` of the causal order.
    pub fn hasse(&self) -> Vec<(EventId, EventId)> {
        let mut out = Vec::new();
        for f in 0..self.len() {
            let mut ps: Vec<EventId> = self.preds[f].iter().flatten().copied().collect();
            ps.sort_unstable();
            ps.dedup();
            for &p in &ps {
                if !ps.iter().any(|&q| q != p && self.leq(p, q)) {
                    out.push((p, f));
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Every linearization of the trace, in lexicographic order.
    pub fn linearizations(&self) -> Vec<Vec<ActionId>> {
        let mut out = Vec::new();
        let mut cur = Vec::with_capacity(self.len());
        let c = self.empty_config();
        self.lin_rec(&c, &mut cur, &mut out);
        out.sort_by(|x, y| {
            let rx: Vec<usize> = x.iter().map(|&a| self.alphabet.rank(a)).collect();
            let ry: Vec<usize> = y.iter().map(|&a| self.alphabet.rank(a)).collect();
            rx.cmp(&ry)
        });
        out
    }

    fn lin_rec(&self, c: &Config, cur: &mut Vec<ActionId>, out: &mut Vec<Vec<ActionId>>) {
        if cur.len() == self.len() {
            out.push(cur.clone());
            return;
        }
        for e in self.enabled(c) {
            let mut d = c.clone();
            d.insert(e);
            cur.push(self.labels[e]);
            self.lin_rec(&d, cur, out);
            cur.pop();
        }
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph trace {\n  rankdir=LR;\n");
        for e in 0..self.len() {
            let procs: Vec<&str> = self
                .loc_of(e)
                .iter()
                .map(|&i| self.alphabet.process_name(i))
                .collect();
            let _ = writeln!(
                s,
                "  e{e} [label=\"{}\\n{{{}}}\"];",
                self.alphabet.action_name(self.labels[e]).replace('"', "\\\""),
                procs.join(",")
            );
        }
        for (e, f) in self.hasse() {
            let _ = writeln!(s, "  e{e} -> e{f};");
        }
        s.push_str("}\n");
        s
    }
}

/// All traces with at most `n` events, shortest first, each length in
/// canonical-word order.
pub fn enumerate_traces(alphabet: &Arc<DistributedAlphabet>, n: usize) -> Vec<Trace> {
    let order = alphabet.actions_in_order();
    let mut out = vec![Trace::empty(alphabet)];
    let mut layer: Vec<Vec<ActionId>> = vec![Vec::new()];
    for _ in 0..n {
        let mut seen: HashSet<Vec<ActionId>> = HashSet::new();
        for w in &layer {
            for &a in &order {
                let mut v = w.clone();
                v.push(a);
                seen.insert(canonical_word(alphabet, &v));
            }
        }
        let mut next: Vec<Vec<ActionId>> = seen.into_iter().collect();
        next.sort_by_cached_key(|w| w.iter().map(|&a| alphabet.rank(a)).collect::<Vec<_>>());
        out.extend(next.iter().map(|w| Trace::from_canonical(alphabet.clone(), w.clone())));
        layer = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ex() -> Arc<DistributedAlphabet> {
        Arc::new(
            DistributedAlphabet::new(
                &["p1", "p2", "p3"],
                &[("p1", vec!["a", "b"]), ("p2", vec!["b", "c"]), ("p3", vec!["c"])],
            )
            .unwrap(),
        )
    }

    fn t(s: &str) -> Trace {
        Trace::from_names(&ex(), s).unwrap()
    }

    /// Word equivalence by breadth first search over swaps of adjacent
    /// independent letters.
    fn swap_equivalent(alph: &DistributedAlphabet, u: &[ActionId], v: &[ActionId]) -> bool {
        if u.len() != v.len() {
            return false;
        }
        let mut seen = HashSet::new();
        let mut q = VecDeque::new();
        seen.insert(u.to_vec());
        q.push_back(u.to_vec());
        while let Some(w) = q.pop_front() {
            if w == v {
                return true;
            }
            for k in 0..w.len().saturating_sub(1) {
                if alph.independent(w[k], w[k + 1]) {
                    let mut x = w.clone();
                    x.swap(k, k + 1);
                    if seen.insert(x.clone()) {
                        q.push_back(x);
                    }
                }
            }
        }
        false
    }

    #[test]
    fn ac_equals_ca() {
        assert_eq!(t("ac"), t("ca"));
        assert_eq!(t("ca").canonical_form(), &[0, 2]);
        assert_ne!(t("ab"), t("ba"));
    }

    #[test]
    fn bracketing_example() {
        // a b c a b: the first a precedes every b, the c lies between the bs
        let x = t("abcab");
        assert_eq!(x.len(), 5);
        assert!(x.trace_equal(&t("abacb")).unwrap());
        assert!(!x.trace_equal(&t("abbca")).unwrap());
    }

    #[test]
    fn running_trace_configurations() {
        // the trace a b c on the example alphabet is a chain
        let x = t("abc");
        let cs = x.configurations().unwrap();
        assert_eq!(cs.len(), 4);
        // a and c are concurrent in a c
        let y = t("ac");
        assert_eq!(y.configurations().unwrap().len(), 4);
    }

    #[test]
    fn views_and_latest() {
        // c1 a b c2 : p1 has seen a, b; p3 saw only c1
        let x = t("cabc");
        let full = x.full_config();
        let v1 = x.view(&full, 0);
        assert_eq!(v1.ones().map(|e| x.label(e)).collect::<Vec<_>>(), vec![0, 2, 1]);
        let v3 = x.view(&full, 2);
        assert_eq!(v3.count_ones(..), 4);
        assert_eq!(x.latest(&full, &[0, 2], 1).unwrap(), 2);
        assert_eq!(x.latest(&full, &[0, 1], 0).unwrap(), 0);
        let empty = x.empty_config();
        assert_eq!(x.latest(&empty, &[2, 0], 1).unwrap(), 0);
    }

    #[test]
    fn step_and_enabled() {
        let x = t("ab");
        let c0 = x.empty_config();
        assert!(x.step(&c0, 1).is_none());
        let c1 = x.step(&c0, 0).unwrap();
        let c2 = x.step(&c1, 1).unwrap();
        assert_eq!(c2, x.full_config());
        assert!(x.step(&c2, 0).is_none());
    }

    #[test]
    fn configurations_cap() {
        let x = t("acacacacacacac");
        assert!(matches!(x.configurations(), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn hasse_of_bcb() {
        let x = t("bcb");
        assert_eq!(x.hasse(), vec![(0, 1), (1, 2)]);
        let y = t("acb");
        // a and c both precede b
        assert_eq!(y.hasse(), vec![(0, 2), (1, 2)]);
        assert!(y.to_dot().contains("e0 -> e2"));
    }

    #[test]
    fn linearizations_of_ac_b() {
        let y = t("acb");
        assert_eq!(y.linearizations(), vec![vec![0, 2, 1], vec![2, 0, 1]]);
    }

    #[test]
    fn enumerate_small() {
        let all = enumerate_traces(&ex(), 2);
        // empty, 3 singletons, and: aa ab ac ba bb bc cb cc  = 8 (ac = ca)
        assert_eq!(all.len(), 1 + 3 + 8);
        let set: HashSet<Trace> = all.iter().cloned().collect();
        assert_eq!(set.len(), all.len());
    }

    #[test]
    fn json_forms() {
        let a = ex();
        let v: serde_json::Value = serde_json::from_str(r#"{"word":"ca"}"#).unwrap();
        let w: serde_json::Value =
            serde_json::from_str(r#"{"events":[{"label":"a"},{"label":"c"}]}"#).unwrap();
        assert_eq!(
            Trace::from_json_value(&a, &v).unwrap(),
            Trace::from_json_value(&a, &w).unwrap()
        );
    }

    #[test]
    fn concat_mismatch() {
        let other = Arc::new(DistributedAlphabet::new(&["p"], &[("p", vec!["a"])]).unwrap());
        let x = Trace::from_names(&other, "a").unwrap();
        assert_eq!(t("a").concat(&x).unwrap_err(), Error::AlphabetMismatch);
    }

    fn word() -> impl Strategy<Value = Vec<ActionId>> {
        proptest::collection::vec(0usize..3, 0..7)
    }

    proptest! {
        #[test]
        fn canonical_agrees_with_swaps(u in word(), v in word()) {
            let a = ex();
            let same = Trace::from_word(&a, &u).unwrap() == Trace::from_word(&a, &v).unwrap();
            prop_assert_eq!(same, swap_equivalent(&a, &u, &v));
        }

        #[test]
        fn concat_is_associative(u in word(), v in word(), w in word()) {
            let a = ex();
            let (x, y, z) = (
                Trace::from_word(&a, &u).unwrap(),
                Trace::from_word(&a, &v).unwrap(),
                Trace::from_word(&a, &w).unwrap(),
            );
            prop_assert_eq!(x.concat(&y).unwrap().concat(&z).unwrap(), x.concat(&y.concat(&z).unwrap()).unwrap());
        }

        #[test]
        fn every_linearization_is_equivalent(u in word()) {
            let a = ex();
            let x = Trace::from_word(&a, &u).unwrap();
            for l in x.linearizations() {
                prop_assert_eq!(Trace::from_word(&a, &l).unwrap(), x.clone());
            }
        }

        #[test]
        fn configurations_are_downsets(u in word()) {
            let a = ex();
            let x = Trace::from_word(&a, &u).unwrap();
            for c in x.configurations().unwrap() {
                prop_assert!(x.is_configuration(&c));
                for i in 0..3 {
                    let v = x.view(&c, i);
                    prop_assert!(x.is_configuration(&v));
                    prop_assert!(v.is_subset(&c));
                }
            }
        }

        #[test]
        fn last_below_matches_downsets(u in word()) {
            let a = ex();
            let x = Trace::from_word(&a, &u).unwrap();
            for e in 0..x.len() {
                for i in 0..3 {
                    let direct = x.strict_down(e).ones().filter(|&f| x.is_process_event(f, i)).max();
                    prop_assert_eq!(x.last_below(e, i), direct);
                }
            }
        }
    }
}
