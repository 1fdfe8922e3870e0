//! Distributed alphabets: a finite set of processes, each with its own set
//! of actions. An action shared by several processes is a synchronisation
//! between all of them.

use std::collections::HashMap;
use std::fmt::Write as _;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ProcessId = usize;
pub type ActionId = usize;

#[derive(Debug, Clone)]
pub struct DistributedAlphabet {
    processes: Vec<String>,
    actions: Vec<String>,
    loc: Vec<Vec<ProcessId>>,
    by_process: Vec<Vec<ActionId>>,
    rank: Vec<usize>,
    dependent: Vec<bool>,
    process_index: HashMap<String, ProcessId>,
    action_index: HashMap<String, ActionId>,
}

impl PartialEq for DistributedAlphabet {
    fn eq(&self, other: &Self) -> bool {
        self.processes == other.processes
            && self.actions == other.actions
            && self.loc == other.loc
            && self.rank == other.rank
    }
}

impl Eq for DistributedAlphabet {}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlphabetJson {
    pub processes: Vec<String>,
    pub actions: IndexMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<Vec<String>>,
}

impl DistributedAlphabet {
    /// Builds an alphabet from the process list and the action list of each
    /// process. Actions are numbered by first appearance, scanning processes
    /// in order; that numbering is also the default action order.
    pub fn new<P, A>(processes: &[P], actions: &[(P, Vec<A>)]) -> Result<Self>
    where
        P: AsRef<str>,
        A: AsRef<str>,
    {
        let processes: Vec<String> = processes.iter().map(|p| p.as_ref().to_string()).collect();
        if processes.is_empty() {
            return Err(Error::InvalidAlphabet("no processes".into()));
        }
        let mut process_index = HashMap::new();
        for (i, p) in processes.iter().enumerate() {
            if p.is_empty() {
                return Err(Error::InvalidAlphabet("empty process name".into()));
            }
            if process_index.insert(p.clone(), i).is_some() {
                return Err(Error::InvalidAlphabet(format!("duplicate process `{p}`")));
            }
        }
        let mut per_process: Vec<Option<Vec<String>>> = vec![None; processes.len()];
        for (p, acts) in actions {
            let &i = process_index
                .get(p.as_ref())
                .ok_or_else(|| Error::UnknownProcess(p.as_ref().to_string()))?;
            if per_process[i].is_some() {
                return Err(Error::InvalidAlphabet(format!(
                    "actions of `{}` listed twice",
                    p.as_ref()
                )));
            }
            per_process[i] = Some(acts.iter().map(|a| a.as_ref().to_string()).collect());
        }

        let mut actions_out: Vec<String> = Vec::new();
        let mut action_index: HashMap<String, ActionId> = HashMap::new();
        let mut loc: Vec<Vec<ProcessId>> = Vec::new();
        let mut by_process = vec![Vec::new(); processes.len()];
        for (i, acts) in per_process.iter().enumerate() {
            for a in acts.iter().flatten() {
                if a.is_empty() {
                    return Err(Error::InvalidAlphabet("empty action name".into()));
                }
                let id = match action_index.get(a) {
                    Some(&id) => id,
                    None => {
                        let id = actions_out.len();
                        actions_out.push(a.clone());
                        action_index.insert(a.clone(), id);
                        loc.push(Vec::new());
                        id
                    }
                };
                if loc[id].contains(&i) {
                    return Err(Error::InvalidAlphabet(format!(
                        "action `{a}` listed twice for `{}`",
                        processes[i]
                    )));
                }
                loc[id].push(i);
                by_process[i].push(id);
            }
        }
        for l in &mut loc {
            l.sort_unstable();
        }
        for b in &mut by_process {
            b.sort_unstable();
        }
        let n = actions_out.len();
        let mut dependent = vec![false; n * n];
        for a in 0..n {
            for b in 0..n {
                dependent[a * n + b] = loc[a].iter().any(|i| loc[b].contains(i));
            }
        }
        Ok(DistributedAlphabet {
            processes,
            rank: (0..n).collect(),
            actions: actions_out,
            loc,
            by_process,
            dependent,
            process_index,
            action_index,
        })
    }

    /// Replaces the canonical-form action order. `order` must list every
    /// action exactly once.
    pub fn with_action_order<A: AsRef<str>>(mut self, order: &[A]) -> Result<Self> {
        let n = self.actions.len();
        if order.len() != n {
            return Err(Error::InvalidAlphabet(format!(
                "action order lists {} actions, alphabet has {n}",
                order.len()
            )));
        }
        let mut rank = vec![usize::MAX; n];
        for (r, a) in order.iter().enumerate() {
            let id = self.action_id(a.as_ref())?;
            if rank[id] != usize::MAX {
                return Err(Error::InvalidAlphabet(format!(
                    "action `{}` appears twice in the order",
                    a.as_ref()
                )));
            }
            rank[id] = r;
        }
        self.rank = rank;
        Ok(self)
    }

    pub fn from_json_value(v: &serde_json::Value) -> Result<Self> {
        let j: AlphabetJson =
            serde_json::from_value(v.clone()).map_err(|e| Error::Malformed(e.to_string()))?;
        Self::from_json(&j)
    }

    pub fn from_json(j: &AlphabetJson) -> Result<Self> {
        let acts: Vec<(String, Vec<String>)> =
            j.actions.iter().map(|(p, a)| (p.clone(), a.clone())).collect();
        let alph = Self::new(&j.processes, &acts)?;
        match &j.order {
            Some(order) => alph.with_action_order(order),
            None => Ok(alph),
        }
    }

    pub fn to_json(&self) -> AlphabetJson {
        let actions = self
            .processes
            .iter()
            .enumerate()
            .map(|(i, p)| {
                (
                    p.clone(),
                    self.by_process[i].iter().map(|&a| self.actions[a].clone()).collect(),
                )
            })
            .collect();
        let default_rank = self.rank.iter().enumerate().all(|(i, &r)| i == r);
        AlphabetJson {
            processes: self.processes.clone(),
            actions,
            order: (!default_rank).then(|| {
                self.actions_in_order().into_iter().map(|a| self.actions[a].clone()).collect()
            }),
        }
    }

    pub fn num_processes(&self) -> usize {
        self.processes.len()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn process_name(&self, i: ProcessId) -> &str {
        &self.processes[i]
    }

    pub fn action_name(&self, a: ActionId) -> &str {
        &self.actions[a]
    }

    pub fn process_names(&self) -> &[String] {
        &self.processes
    }

    pub fn action_names(&self) -> &[String] {
        &self.actions
    }

    pub fn process_id(&self, name: &str) -> Result<ProcessId> {
        self.process_index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownProcess(name.to_string()))
    }

    pub fn action_id(&self, name: &str) -> Result<ActionId> {
        self.action_index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownAction(name.to_string()))
    }

    /// Processes taking part in `a`, in increasing order.
    pub fn loc(&self, a: ActionId) -> &[ProcessId] {
        &self.loc[a]
    }

    pub fn loc_by_name(&self, a: &str) -> Result<&[ProcessId]> {
        Ok(self.loc(self.action_id(a)?))
    }

    /// Actions of process `i`, in increasing action id.
    pub fn actions_of(&self, i: ProcessId) -> &[ActionId] {
        &self.by_process[i]
    }

    pub fn has_action(&self, i: ProcessId, a: ActionId) -> bool {
        self.loc[a].binary_search(&i).is_ok()
    }

    pub fn dependent(&self, a: ActionId, b: ActionId) -> bool {
        self.dependent[a * self.actions.len() + b]
    }

    pub fn independent(&self, a: ActionId, b: ActionId) -> bool {
        !self.dependent(a, b)
    }

    /// Position of `a` in the canonical-form order.
    pub fn rank(&self, a: ActionId) -> usize {
        self.rank[a]
    }

    pub fn actions_in_order(&self) -> Vec<ActionId> {
        let mut v: Vec<ActionId> = (0..self.actions.len()).collect();
        v.sort_by_key(|&a| self.rank[a]);
        v
    }

    pub fn communication_graph(&self) -> CommGraph {
        let n = self.processes.len();
        let mut adj = vec![Vec::new(); n];
        for l in &self.loc {
            for (x, &i) in l.iter().enumerate() {
                for &j in &l[x + 1..] {
                    if !adj[i].contains(&j) {
                        adj[i].push(j);
                        adj[j].push(i);
                    }
                }
            }
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        CommGraph { adj }
    }

    /// Parses a word. Whitespace separated if it contains whitespace,
    /// otherwise one action per character.
    pub fn parse_word(&self, word: &str) -> Result<Vec<ActionId>> {
        if word.contains(char::is_whitespace) {
            word.split_whitespace().map(|a| self.action_id(a)).collect()
        } else {
            word.chars()
                .map(|c| {
                    let mut buf = [0u8; 4];
                    self.action_id(c.encode_utf8(&mut buf))
                })
                .collect()
        }
    }

    pub fn word_to_string(&self, w: &[ActionId]) -> String {
        let single = w.iter().all(|&a| self.actions[a].chars().count() == 1);
        let names: Vec<&str> = w.iter().map(|&a| self.actions[a].as_str()).collect();
        if single {
            names.concat()
        } else {
            names.join(" ")
        }
    }

    pub fn describe(&self) -> String {
        let mut s = String::new();
        for (i, p) in self.processes.iter().enumerate() {
            let acts: Vec<&str> = self.by_process[i].iter().map(|&a| self.actions[a].as_str()).collect();
            let _ = writeln!(s, "{p}: {{{}}}", acts.join(", "));
        }
        let g = self.communication_graph();
        let _ = writeln!(s, "acyclic: {}", g.is_acyclic());
        s
    }
}

/// Undirected graph on processes: an edge joins two processes that share
/// an action.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommGraph {
    adj: Vec<Vec<ProcessId>>,
}

impl CommGraph {
    pub fn neighbours(&self, i: ProcessId) -> &[ProcessId] {
        &self.adj[i]
    }

    pub fn edges(&self) -> Vec<(ProcessId, ProcessId)> {
        let mut out = Vec::new();
        for (i, a) in self.adj.iter().enumerate() {
            for &j in a {
                if i < j {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// True when the graph is a forest.
    pub fn is_acyclic(&self) -> bool {
        let mut parent: Vec<usize> = (0..self.adj.len()).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut y = x;
            while p[y] != r {
                let n = p[y];
                p[y] = r;
                y = n;
            }
            r
        }
        for (i, j) in self.edges() {
            let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
            if ri == rj {
                return false;
            }
            parent[ri] = rj;
        }
        true
    }

    pub fn to_dot(&self, alph: &DistributedAlphabet) -> String {
        let mut s = String::from("graph comm {\n");
        for p in alph.process_names() {
            let _ = writeln!(s, "  \"{p}\";");
        }
        for (i, j) in self.edges() {
            let _ = writeln!(s, "  \"{}\" -- \"{}\";", alph.process_name(i), alph.process_name(j));
        }
        s.push_str("}\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex() -> DistributedAlphabet {
        DistributedAlphabet::new(
            &["p1", "p2", "p3"],
            &[("p1", vec!["a", "b"]), ("p2", vec!["b", "c"]), ("p3", vec!["c"])],
        )
        .unwrap()
    }

    #[test]
    fn loc_and_independence() {
        let s = ex();
        let (a, b, c) = (0, 1, 2);
        assert_eq!(s.loc(a), &[0]);
        assert_eq!(s.loc(b), &[0, 1]);
        assert_eq!(s.loc(c), &[1, 2]);
        assert!(s.independent(a, c));
        assert!(s.dependent(a, b));
        assert!(s.dependent(b, c));
        assert!(s.dependent(a, a));
    }

    #[test]
    fn path_graph_is_acyclic() {
        let g = ex().communication_graph();
        assert_eq!(g.edges(), vec![(0, 1), (1, 2)]);
        assert!(g.is_acyclic());
    }

    #[test]
    fn triangle_is_cyclic() {
        let s = DistributedAlphabet::new(
            &["p1", "p2", "p3"],
            &[
                ("p1", vec!["x", "z"]),
                ("p2", vec!["x", "y"]),
                ("p3", vec!["y", "z"]),
            ],
        )
        .unwrap();
        assert!(!s.communication_graph().is_acyclic());
    }

    #[test]
    fn unknown_process_rejected() {
        let r = DistributedAlphabet::new(&["p1"], &[("q", vec!["a"])]);
        assert_eq!(r.unwrap_err(), Error::UnknownProcess("q".into()));
    }

    #[test]
    fn json_round_trip_keeps_order() {
        let v: serde_json::Value = serde_json::from_str(
            r#"{"processes":["p1","p2"],"actions":{"p2":["c","b"],"p1":["b","a"]}}"#,
        )
        .unwrap();
        let s = DistributedAlphabet::from_json_value(&v).unwrap();
        assert_eq!(s.action_names(), &["b", "a", "c"]);
        let back = DistributedAlphabet::from_json(&s.to_json()).unwrap();
        assert_eq!(back.loc_by_name("b").unwrap(), &[0, 1]);
    }

    #[test]
    fn custom_order() {
        let s = ex().with_action_order(&["c", "b", "a"]).unwrap();
        assert_eq!(s.actions_in_order(), vec![2, 1, 0]);
        assert!(ex().with_action_order(&["a", "a", "b"]).is_err());
    }

    #[test]
    fn words() {
        let s = ex();
        assert_eq!(s.parse_word("abc").unwrap(), vec![0, 1, 2]);
        assert_eq!(s.parse_word("a b  c").unwrap(), vec![0, 1, 2]);
        assert!(s.parse_word("abd").is_err());
        assert_eq!(s.word_to_string(&[2, 0]), "ca");
    }
}
