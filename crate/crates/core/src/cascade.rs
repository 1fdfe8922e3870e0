//! Local and global cascade products, and the bridges between wreath
//! products and cascades.
//!
//! All composite state spaces pair local states per process: the pair
//! `(s_i, q_i)` is numbered `s_i·|Q_i| + q_i`, exactly as in [`WreathAtm`].
//! Longer cascades nest this to the left, and since the numbering is
//! associative both bracketings yield the same indices.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::Deserialize;
use serde_json::Value;

use crate::alphabet::{ActionId, DistributedAlphabet, ProcessId};
use crate::atm::{extend_local, is_p_map, restrict, AsyncMorphism, StateSpace, WreathAtm, WreathElem};
use crate::automaton::{automaton_from_json, AsyncAutomaton, StateRef};
use crate::error::{Error, Result};
use crate::gossip::GossipAutomaton;
use crate::monoid::Transformation;
use crate::trace::Trace;
use crate::transducer::{local_transducer, ExtendedAlphabet};

fn pair_names(a: &[Vec<String>], b: &[Vec<String>]) -> Vec<Vec<String>> {
    a.iter()
        .zip(b)
        .map(|(xs, ys)| {
            xs.iter()
                .flat_map(|x| ys.iter().map(move |y| format!("{x}.{y}")))
                .collect()
        })
        .collect()
}

/// `A1 ∘ℓ A2`, where `A2` reads the local extended alphabet of `A1`.
pub fn local_cascade(a1: &AsyncAutomaton, a2: &AsyncAutomaton) -> Result<AsyncAutomaton> {
    let ext = ExtendedAlphabet::local_of(a1)?;
    if **a2.alphabet() != **ext.alphabet() {
        return Err(Error::AlphabetMismatch);
    }
    let alph = a1.alphabet().clone();
    let pair = WreathAtm::new(a1.space().clone(), a2.space().clone())?;
    let qs: Vec<u32> = a2.space().sizes().iter().map(|&n| n as u32).collect();
    let init = pair.space().decode(pair.pair_index(a1.initial(), a2.initial()));
    let aut = AsyncAutomaton::from_rule(&alph, pair.space().sizes().to_vec(), &init, |a, local| {
        let ps = alph.loc(a);
        let s: Vec<u32> = ps.iter().zip(local).map(|(&i, &x)| x / qs[i]).collect();
        let q: Vec<u32> = ps.iter().zip(local).map(|(&i, &x)| x % qs[i]).collect();
        let sub1 = a1.space().restrict(ps);
        let sub2 = a2.space().restrict(ps);
        let sa = sub1.encode(&s);
        let s2 = sub1.decode(a1.table(a)[sa] as usize);
        let q2 = sub2.decode(a2.table(ext.letter(a, sa))[sub2.encode(&q)] as usize);
        ps.iter()
            .zip(s2.iter().zip(&q2))
            .map(|(&i, (&x, &y))| x * qs[i] + y)
            .collect()
    })?;
    aut.with_state_names(pair_names(a1.state_names(), a2.state_names()))
}

/// The two stage final states of `A1 ∘ℓ A2`, computed by running `A2` on
/// `χ_{A1}(t)`.
pub fn local_cascade_run(a1: &AsyncAutomaton, a2: &AsyncAutomaton, t: &Trace) -> Result<(usize, usize)> {
    let ext = ExtendedAlphabet::local_of(a1)?;
    let x = local_transducer(a1, &ext, t)?;
    if **a2.alphabet() != **x.alphabet() {
        return Err(Error::AlphabetMismatch);
    }
    Ok((a1.run_final(t), a2.run_final(&x)))
}

/// A nested global cascade. A node's right part runs on `θ` of its left
/// part, so its base alphabet is the global extension of the left one.
#[derive(Debug, Clone)]
pub enum GcTree {
    Leaf(AsyncAutomaton),
    Node {
        left: Box<GcTree>,
        right: Box<GcTree>,
        ext: ExtendedAlphabet,
        pair: WreathAtm,
        names: Vec<Vec<String>>,
    },
}

impl GcTree {
    pub fn leaf(a: AsyncAutomaton) -> GcTree {
        GcTree::Leaf(a)
    }

    pub fn node(left: GcTree, right: GcTree) -> Result<GcTree> {
        let ext = ExtendedAlphabet::global(left.base_alphabet(), left.space(), left.state_names())?;
        if **right.base_alphabet() != **ext.alphabet() {
            return Err(Error::AlphabetMismatch);
        }
        let pair = WreathAtm::new(left.space().clone(), right.space().clone())?;
        let names = pair_names(left.state_names(), right.state_names());
        Ok(GcTree::Node {
            left: Box::new(left),
            right: Box::new(right),
            ext,
            pair,
            names,
        })
    }

    pub fn base_alphabet(&self) -> &Arc<DistributedAlphabet> {
        match self {
            GcTree::Leaf(a) => a.alphabet(),
            GcTree::Node { left, .. } => left.base_alphabet(),
        }
    }

    pub fn space(&self) -> &StateSpace {
        match self {
            GcTree::Leaf(a) => a.space(),
            GcTree::Node { pair, .. } => pair.space(),
        }
    }

    pub fn state_names(&self) -> &[Vec<String>] {
        match self {
            GcTree::Leaf(a) => a.state_names(),
            GcTree::Node { names, .. } => names,
        }
    }

    pub fn initial(&self) -> usize {
        match self {
            GcTree::Leaf(a) => a.initial(),
            GcTree::Node { left, right, pair, .. } => pair.pair_index(left.initial(), right.initial()),
        }
    }

    /// Composite state reached at `↓e`, per event.
    pub fn after_events(&self, t: &Trace) -> Vec<usize> {
        match self {
            GcTree::Leaf(a) => a.states_after_events(t),
            GcTree::Node { left, right, ext, pair, .. } => {
                let la = left.after_events(t);
                let labels: Vec<ActionId> = (0..t.len())
                    .map(|e| ext.letter(t.label(e), left.before_event(t, &la, e)))
                    .collect();
                let t2 = t.relabel(ext.alphabet(), &labels).expect("extension keeps locations");
                let ra = right.after_events(&t2);
                la.iter().zip(&ra).map(|(&s, &q)| pair.pair_index(s, q)).collect()
            }
        }
    }

    /// Composite state at `↓e \ {e}`.
    pub fn before_event(&self, t: &Trace, after: &[usize], e: usize) -> usize {
        self.assemble(after, |i| t.last_below(e, i))
    }

    fn assemble(&self, after: &[usize], last: impl Fn(ProcessId) -> Option<usize>) -> usize {
        let space = self.space();
        let mut local = space.decode(self.initial());
        for (i, x) in local.iter_mut().enumerate() {
            if let Some(f) = last(i) {
                *x = space.component(after[f], i);
            }
        }
        space.encode(&local)
    }

    /// Composite state after the whole trace.
    pub fn final_state(&self, t: &Trace) -> Result<usize> {
        if **t.alphabet() != **self.base_alphabet() {
            return Err(Error::AlphabetMismatch);
        }
        let after = self.after_events(t);
        Ok(self.assemble(&after, |i| t.events_of(i).last().copied()))
    }

    /// `θ` of the whole composite.
    pub fn theta(&self, t: &Trace) -> Result<Trace> {
        let ext = ExtendedAlphabet::global(self.base_alphabet(), self.space(), self.state_names())?;
        let after = self.after_events(t);
        let labels: Vec<ActionId> = (0..t.len())
            .map(|e| ext.letter(t.label(e), self.before_event(t, &after, e)))
            .collect();
        t.relabel(ext.alphabet(), &labels)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CascadeMode {
    Local,
    Global,
}

/// A sequence of stages, each reading the extended alphabet (local or
/// global) of the cascade of the stages before it.
#[derive(Debug, Clone)]
pub struct Cascade {
    mode: CascadeMode,
    stages: Vec<AsyncAutomaton>,
    /// `prefix[k]`: the cascade of stages `0..=k`, flattened (local mode).
    prefix: Vec<AsyncAutomaton>,
    tree: Option<GcTree>,
    pairs: Vec<WreathAtm>,
}

impl Cascade {
    pub fn new(mode: CascadeMode, stages: Vec<AsyncAutomaton>) -> Result<Cascade> {
        let first = stages
            .first()
            .ok_or_else(|| Error::Precondition("a cascade needs a stage".into()))?
            .clone();
        let mut prefix = vec![first.clone()];
        let mut tree = GcTree::leaf(first.clone());
        let mut pairs = Vec::new();
        for s in &stages[1..] {
            let last = prefix.last().unwrap();
            pairs.push(WreathAtm::new(last.space().clone(), s.space().clone())?);
            match mode {
                CascadeMode::Local => prefix.push(local_cascade(last, s)?),
                CascadeMode::Global => {
                    tree = GcTree::node(tree, GcTree::leaf(s.clone()))?;
                    // only the state layout is used in global mode
                    let flat_names = tree.state_names().to_vec();
                    let layout = AsyncAutomaton::new(
                        first.alphabet(),
                        tree.space().sizes().to_vec(),
                        (0..first.alphabet().num_actions())
                            .map(|a| (0..tree.space().joint_size(first.alphabet().loc(a)) as u32).collect())
                            .collect(),
                        &tree.space().decode(tree.initial()),
                    )?
                    .with_state_names(flat_names)?;
                    prefix.push(layout);
                }
            }
        }
        Ok(Cascade {
            mode,
            tree: (mode == CascadeMode::Global).then_some(tree),
            stages,
            prefix,
            pairs,
        })
    }

    pub fn mode(&self) -> CascadeMode {
        self.mode
    }

    pub fn stages(&self) -> &[AsyncAutomaton] {
        &self.stages
    }

    pub fn alphabet(&self) -> &Arc<DistributedAlphabet> {
        self.stages[0].alphabet()
    }

    pub fn space(&self) -> &StateSpace {
        self.prefix.last().unwrap().space()
    }

    /// The stages `0..=k` as one automaton. In global mode only the state
    /// layout is meaningful.
    pub fn prefix(&self, k: usize) -> &AsyncAutomaton {
        &self.prefix[k]
    }

    /// The extension of the base alphabet read by stage `k > 0`, whose
    /// annotations are states of the cascade of stages `0..k`.
    pub fn stage_extension(&self, k: usize) -> Result<ExtendedAlphabet> {
        if k == 0 || k > self.stages.len() {
            return Err(Error::OutOfRange {
                value: k,
                size: self.stages.len() + 1,
            });
        }
        let p = &self.prefix[k - 1];
        match self.mode {
            CascadeMode::Local => ExtendedAlphabet::local_of(p),
            CascadeMode::Global => ExtendedAlphabet::global_of(p),
        }
    }

    /// The alphabet stage `k` must read.
    pub fn stage_alphabet(&self, k: usize) -> Result<Arc<DistributedAlphabet>> {
        if k == 0 {
            return Ok(self.alphabet().clone());
        }
        Ok(self.stage_extension(k)?.alphabet().clone())
    }

    /// The flattened automaton; only local cascades are finite-state.
    pub fn flatten(&self) -> Result<&AsyncAutomaton> {
        match self.mode {
            CascadeMode::Local => Ok(self.prefix.last().unwrap()),
            CascadeMode::Global => Err(Error::Precondition(
                "a global cascade has no finite flattening".into(),
            )),
        }
    }

    /// Composite state after `t`.
    pub fn final_state(&self, t: &Trace) -> Result<usize> {
        match &self.tree {
            Some(tree) => tree.final_state(t),
            None => {
                if **t.alphabet() != **self.alphabet() {
                    return Err(Error::AlphabetMismatch);
                }
                Ok(self.prefix.last().unwrap().run_final(t))
            }
        }
    }

    /// Stage-wise final states, computed one stage at a time.
    pub fn stage_finals(&self, t: &Trace) -> Result<Vec<usize>> {
        let mut out = vec![self.stages[0].run_final(t)];
        for k in 1..self.stages.len() {
            let p = &self.prefix[k - 1];
            let relabelled = match self.mode {
                CascadeMode::Local => local_transducer(p, &ExtendedAlphabet::local_of(p)?, t)?,
                CascadeMode::Global => {
                    let mut tree = GcTree::leaf(self.stages[0].clone());
                    for s in &self.stages[1..k] {
                        tree = GcTree::node(tree, GcTree::leaf(s.clone()))?;
                    }
                    tree.theta(t)?
                }
            };
            out.push(self.stages[k].run_final(&relabelled));
        }
        Ok(out)
    }

    pub fn compose(&self, stage_states: &[usize]) -> usize {
        let mut g = stage_states[0];
        for (p, &s) in self.pairs.iter().zip(&stage_states[1..]) {
            g = p.pair_index(g, s);
        }
        g
    }

    pub fn split(&self, mut g: usize) -> Vec<usize> {
        let mut out = vec![0; self.stages.len()];
        for k in (1..self.stages.len()).rev() {
            let (a, b) = self.pairs[k - 1].split(g);
            out[k] = b;
            g = a;
        }
        out[0] = g;
        out
    }

    pub fn accepts(&self, finals: &BTreeSet<usize>, t: &Trace) -> Result<bool> {
        Ok(finals.contains(&self.final_state(t)?))
    }

    pub fn format_state(&self, g: usize) -> String {
        self.split(g)
            .iter()
            .zip(&self.stages)
            .map(|(&s, a)| a.format_state(s))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Deserialize)]
struct CascadeFile {
    #[serde(default = "default_mode")]
    mode: String,
    stages: Vec<Value>,
    #[serde(default, rename = "final")]
    finals: Option<Vec<Vec<BTreeMap<String, StateRef>>>>,
}

fn default_mode() -> String {
    "local".into()
}

/// Reads a cascade: `{"mode": "local"|"global", "stages": [...], "final":
/// [[{process: state}, ...per stage], ...]}`. A stage is an automaton
/// object or a string handed to `load` (typically a file path). Stages
/// after the first take the extended alphabet computed from their
/// predecessors.
pub fn cascade_from_json(
    v: &Value,
    alphabet: Option<&Arc<DistributedAlphabet>>,
    mut load: impl FnMut(&str) -> Result<Value>,
) -> Result<(Cascade, Option<BTreeSet<usize>>)> {
    let file: CascadeFile = serde_json::from_value(v.clone()).map_err(|e| Error::Malformed(e.to_string()))?;
    let mode = match file.mode.as_str() {
        "local" => CascadeMode::Local,
        "global" => CascadeMode::Global,
        m => return Err(Error::Malformed(format!("unknown cascade mode `{m}`"))),
    };
    let mut stages: Vec<AsyncAutomaton> = Vec::new();
    for (k, s) in file.stages.iter().enumerate() {
        let body = match s {
            Value::String(path) => load(path)?,
            other => other.clone(),
        };
        let alph = if k == 0 {
            alphabet.cloned()
        } else {
            Some(Cascade::new(mode, stages.clone())?.stage_alphabet(k)?)
        };
        stages.push(automaton_from_json(&body, alph.as_ref())?.0);
    }
    let c = Cascade::new(mode, stages)?;
    let finals = match &file.finals {
        None => None,
        Some(list) => {
            let mut out = BTreeSet::new();
            for tuple in list {
                if tuple.len() != c.stages.len() {
                    return Err(Error::Malformed("final tuple length differs from stage count".into()));
                }
                let mut per = Vec::new();
                for (st, m) in c.stages.iter().zip(tuple) {
                    let mut local = st.initial_local();
                    local.iter_mut().for_each(|x| *x = 0);
                    for (p, r) in m {
                        let i = st.alphabet().process_id(p)?;
                        let names = &st.state_names()[i];
                        local[i] = match r {
                            StateRef::Index(x) if (*x as usize) < names.len() => *x,
                            StateRef::Name(n) => names
                                .iter()
                                .position(|y| y == n)
                                .ok_or_else(|| Error::Malformed(format!("unknown local state `{n}`")))?
                                as u32,
                            StateRef::Index(x) => {
                                return Err(Error::OutOfRange {
                                    value: *x as usize,
                                    size: names.len(),
                                })
                            }
                        };
                    }
                    per.push(st.space().encode(&local));
                }
                out.insert(c.compose(&per));
            }
            Some(out)
        }
    };
    Ok((c, finals))
}

/// `𝒢(A1) ∘ℓ A2` for `A2` over the global extension of `A1`: `A2` reads
/// the gossip annotations of each event translated through `globalstate`.
#[derive(Debug, Clone)]
pub struct GlobalByLocal {
    gossip: GossipAutomaton,
    second: AsyncAutomaton,
    ext: ExtendedAlphabet,
    pair: WreathAtm,
}

impl GlobalByLocal {
    pub fn new(a1: &AsyncAutomaton, a2: &AsyncAutomaton) -> Result<Self> {
        let ext = ExtendedAlphabet::global_of(a1)?;
        if **a2.alphabet() != **ext.alphabet() {
            return Err(Error::AlphabetMismatch);
        }
        Ok(GlobalByLocal {
            gossip: GossipAutomaton::new(a1),
            second: a2.clone(),
            pair: WreathAtm::new(a1.space().clone(), a2.space().clone())?,
            ext,
        })
    }

    /// The input of `A2`: `χ_𝒢(A1)(t)` relabelled through `globalstate`.
    pub fn second_input(&self, t: &Trace) -> Result<Trace> {
        let ann = self.gossip.local_annotations(t);
        let labels: Vec<ActionId> = ann
            .iter()
            .enumerate()
            .map(|(e, j)| self.ext.letter(t.label(e), self.gossip.global_state_of(j)))
            .collect();
        t.relabel(self.ext.alphabet(), &labels)
    }

    /// Composite final state, numbered as in the global cascade.
    pub fn final_state(&self, t: &Trace) -> Result<usize> {
        let x = self.second_input(t)?;
        Ok(self.pair.pair_index(self.gossip.final_global(t), self.second.run_final(&x)))
    }

    pub fn accepts(&self, finals: &BTreeSet<usize>, t: &Trace) -> Result<bool> {
        Ok(finals.contains(&self.final_state(t)?))
    }
}

pub fn simulate_global_by_local(a1: &AsyncAutomaton, a2: &AsyncAutomaton) -> Result<GlobalByLocal> {
    GlobalByLocal::new(a1, a2)
}

/// An asynchronous morphism into a wreath product `T1 ≀ T2`, given by the
/// image `(m_a, f_a)` of each letter.
#[derive(Debug, Clone)]
pub struct WreathMorphism {
    alphabet: Arc<DistributedAlphabet>,
    wreath: WreathAtm,
    images: Vec<WreathElem>,
    flat: AsyncMorphism,
}

impl WreathMorphism {
    pub fn new(alphabet: &Arc<DistributedAlphabet>, wreath: WreathAtm, images: Vec<WreathElem>) -> Result<Self> {
        if images.len() != alphabet.num_actions() {
            return Err(Error::Malformed("one image per action expected".into()));
        }
        let flats: Vec<Transformation> = images.iter().map(|e| wreath.to_transformation(e)).collect();
        for (a, h) in flats.iter().enumerate() {
            if !is_p_map(wreath.space(), h, alphabet.loc(a)).holds() {
                return Err(Error::NotLocalMap(alphabet.action_name(a).to_string()));
            }
        }
        let flat = AsyncMorphism::from_global(alphabet, wreath.space().clone(), &flats)?;
        Ok(WreathMorphism {
            alphabet: alphabet.clone(),
            wreath,
            images,
            flat,
        })
    }

    pub fn alphabet(&self) -> &Arc<DistributedAlphabet> {
        &self.alphabet
    }

    pub fn wreath(&self) -> &WreathAtm {
        &self.wreath
    }

    pub fn images(&self) -> &[WreathElem] {
        &self.images
    }

    /// The same morphism on the paired state space.
    pub fn flat(&self) -> &AsyncMorphism {
        &self.flat
    }

    pub fn evaluate(&self, t: &Trace) -> WreathElem {
        t.labels()
            .iter()
            .fold(self.wreath.identity(), |acc, &a| self.wreath.compose(&acc, &self.images[a]))
    }

    pub fn apply(&self, t: &Trace, s: usize, q: usize) -> (usize, usize) {
        t.labels().iter().fold((s, q), |(s, q), &a| self.wreath.apply(&self.images[a], s, q))
    }
}

/// The automata `A1`, `A2` read off a wreath morphism, and their cascade.
#[derive(Debug, Clone)]
pub struct CascadeOfWreath {
    pub first: AsyncAutomaton,
    pub second: AsyncAutomaton,
    pub flat: AsyncAutomaton,
}

/// `A1` from `a ↦ m_a`, `A2` from `(a, s_a) ↦ f_a(s)` for any `s` extending
/// `s_a`, which is well defined because `f_a` reads only `loc(a)`.
pub fn wreath_to_cascade(eta: &WreathMorphism, s_in: &[u32], q_in: &[u32]) -> Result<CascadeOfWreath> {
    let alph = eta.alphabet();
    let w = eta.wreath();
    let ms: Vec<Transformation> = eta.images().iter().map(|e| e.m.clone()).collect();
    let first = AsyncAutomaton::from_morphism(AsyncMorphism::from_global(alph, w.left.clone(), &ms)?, s_in)?;
    let ext = ExtendedAlphabet::local_of(&first)?;
    let mut kernels = Vec::with_capacity(ext.alphabet().num_actions());
    for l in 0..ext.alphabet().num_actions() {
        let (a, sa) = ext.split(l);
        let ps = alph.loc(a);
        let s = w.left.embed(0, ps, sa);
        kernels.push(restrict(&w.right, &eta.images()[a].f[s], ps)?);
    }
    let second = AsyncAutomaton::from_morphism(
        AsyncMorphism::from_kernels(ext.alphabet(), w.right.clone(), kernels)?,
        q_in,
    )?;
    let flat = local_cascade(&first, &second)?;
    Ok(CascadeOfWreath { first, second, flat })
}

/// A language recognised through a wreath morphism: `t` is accepted iff
/// `η(t)(s_in, q_in)` has its second coordinate in `finals`.
#[derive(Debug, Clone)]
pub struct WreathRecogniser {
    pub eta: WreathMorphism,
    pub s_in: usize,
    pub q_in: usize,
    pub finals: BTreeSet<usize>,
}

impl WreathRecogniser {
    pub fn accepts(&self, t: &Trace) -> bool {
        let (_, q) = self.eta.apply(t, self.s_in, self.q_in);
        self.finals.contains(&q)
    }
}

/// Recognises `χ_A⁻¹(L)` for `L` recognised by `ψ` over `Σ^{∥S}`, through
/// `η(a) = (φ_A(a), f_a)` with `f_a(s) = ψ((a, s_a))`.
pub fn wpp_inverse(a: &AsyncAutomaton, psi: &AsyncMorphism, q_in: usize, finals: &BTreeSet<usize>) -> Result<WreathRecogniser> {
    let ext = ExtendedAlphabet::local_of(a)?;
    if **psi.alphabet() != **ext.alphabet() {
        return Err(Error::AlphabetMismatch);
    }
    let alph = a.alphabet();
    let left = a.space();
    let wreath = WreathAtm::new(left.clone(), psi.space().clone())?;
    let images = (0..alph.num_actions())
        .map(|x| WreathElem {
            m: a.global_transition(x).clone(),
            f: (0..left.total())
                .map(|s| psi.image(ext.letter(x, left.project(s, alph.loc(x)))).clone())
                .collect(),
        })
        .collect();
    Ok(WreathRecogniser {
        eta: WreathMorphism::new(alph, wreath, images)?,
        s_in: a.initial(),
        q_in,
        finals: finals.clone(),
    })
}

/// One member `U ∩ χ_{A1}⁻¹(V)` of the union: `U` is `{t : φ(t)(s_in) =
/// s_fin}` and `V` is recognised by `ψ` from `q_in` with final set `v_finals`.
#[derive(Debug, Clone)]
pub struct WppPart {
    pub s_fin: usize,
    pub v_finals: BTreeSet<usize>,
}

#[derive(Debug, Clone)]
pub struct WppDecomposition {
    pub first: AsyncAutomaton,
    pub psi: AsyncMorphism,
    pub ext: ExtendedAlphabet,
    pub q_in: usize,
    pub parts: Vec<WppPart>,
}

impl WppDecomposition {
    pub fn part_accepts(&self, p: &WppPart, t: &Trace) -> Result<bool> {
        if self.first.run_final(t) != p.s_fin {
            return Ok(false);
        }
        let x = local_transducer(&self.first, &self.ext, t)?;
        Ok(p.v_finals.contains(&self.psi.apply_word(self.q_in, x.labels())))
    }

    pub fn accepts(&self, t: &Trace) -> Result<bool> {
        for p in &self.parts {
            if self.part_accepts(p, t)? {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

/// Splits the language of `η` from `(s_in, q_in)` with final pairs `finals`
/// into a union over the final first coordinates.
pub fn wpp_decompose(
    eta: &WreathMorphism,
    s_in: usize,
    q_in: usize,
    finals: &BTreeSet<(usize, usize)>,
) -> Result<WppDecomposition> {
    let w = eta.wreath();
    let s_local = w.left.decode(s_in);
    let q_local = w.right.decode(q_in);
    let c = wreath_to_cascade(eta, &s_local, &q_local)?;
    let ext = ExtendedAlphabet::local_of(&c.first)?;
    let mut grouped: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for &(s, q) in finals {
        grouped.entry(s).or_default().insert(q);
    }
    Ok(WppDecomposition {
        psi: c.second.morphism().clone(),
        first: c.first,
        ext,
        q_in,
        parts: grouped
            .into_iter()
            .map(|(s_fin, v_finals)| WppPart { s_fin, v_finals })
            .collect(),
    })
}

/// Builds a wreath element whose `f` is given by a rule on left states.
pub fn wreath_elem(
    w: &WreathAtm,
    ps: &[ProcessId],
    m_kernel: &[u32],
    mut f_kernel: impl FnMut(usize) -> Vec<u32>,
) -> Result<WreathElem> {
    let m = extend_local(&w.left, ps, m_kernel)?;
    let f = (0..w.left.total())
        .map(|s| extend_local(&w.right, ps, &f_kernel(w.left.project(s, ps))))
        .collect::<Result<Vec<_>>>()?;
    Ok(WreathElem { m, f })
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
        AsyncAutomaton::new(&ex(), vec![2, 1, 1], vec![vec![0, 0], vec![1, 1], vec![0]], &[0, 0, 0]).unwrap()
    }

    /// Over the local extension: p2 flips when it sees `b` with p1 in 1,
    /// p3 copies p2 on `c`.
    fn second_local(a1: &AsyncAutomaton) -> AsyncAutomaton {
        let ext = ExtendedAlphabet::local_of(a1).unwrap();
        let e = ext.clone();
        AsyncAutomaton::from_rule(ext.alphabet(), vec![1, 2, 2], &[0, 0, 0], move |l, q| {
            let (a, sa) = e.split(l);
            let s = a1.space().joint_decode(a1.alphabet().loc(a), sa);
            match a {
                1 if s[0] == 1 => vec![q[0], 1 - q[1]],
                2 => vec![q[0], q[0]],
                _ => q.to_vec(),
            }
        })
        .unwrap()
    }

    #[test]
    fn flattening_matches_two_passes() {
        let a1 = a_ex();
        let a2 = second_local(&a1);
        let flat = local_cascade(&a1, &a2).unwrap();
        let pair = WreathAtm::new(a1.space().clone(), a2.space().clone()).unwrap();
        for t in enumerate_traces(&ex(), 5) {
            let (s, q) = local_cascade_run(&a1, &a2, &t).unwrap();
            assert_eq!(flat.run_final(&t), pair.pair_index(s, q));
            // χ of the cascade is χ_A2 after χ_A1
            let e1 = ExtendedAlphabet::local_of(&a1).unwrap();
            let e2 = ExtendedAlphabet::local_of(&a2).unwrap();
            let ef = ExtendedAlphabet::local_of(&flat).unwrap();
            let two = local_transducer(&a2, &e2, &local_transducer(&a1, &e1, &t).unwrap()).unwrap();
            let one = local_transducer(&flat, &ef, &t).unwrap();
            for ev in 0..t.len() {
                let (b1, fa) = ef.split(one.label(ev));
                let (l1, qa) = e2.split(two.label(ev));
                let (b2, sa) = e1.split(l1);
                assert_eq!(b1, b2);
                let ps = t.loc_of(ev);
                let sp = flat.space().joint_decode(ps, fa);
                let ss = a1.space().joint_decode(ps, sa);
                let qs = a2.space().joint_decode(ps, qa);
                for k in 0..ps.len() {
                    assert_eq!(sp[k], ss[k] * a2.space().size(ps[k]) as u32 + qs[k]);
                }
            }
        }
    }

    #[test]
    fn local_cascade_is_associative() {
        let a1 = a_ex();
        let a2 = second_local(&a1);
        // third stage: p3 counts c mod 2 when both earlier stages at p2 are 0
        let third = |joint_s: &[u32], joint_q: &[u32], a: ActionId, r: &[u32]| -> Vec<u32> {
            let _ = joint_s;
            if a == 2 && joint_q[0] == 0 {
                vec![r[0], 1 - r[1]]
            } else {
                r.to_vec()
            }
        };
        let left12 = local_cascade(&a1, &a2).unwrap();
        let el = ExtendedAlphabet::local_of(&left12).unwrap();
        let a3l = {
            let el = el.clone();
            let l12 = left12.clone();
            let s2 = a2.space().clone();
            AsyncAutomaton::from_rule(&el.alphabet().clone(), vec![1, 1, 2], &[0, 0, 0], move |l, r| {
                let (a, x) = el.split(l);
                let ps = l12.alphabet().loc(a);
                let joint = l12.space().joint_decode(ps, x);
                let qs: Vec<u32> = ps.iter().map(|&i| s2.size(i) as u32).collect();
                let s: Vec<u32> = joint.iter().zip(&qs).map(|(x, q)| x / q).collect();
                let q: Vec<u32> = joint.iter().zip(&qs).map(|(x, q)| x % q).collect();
                third(&s, &q, a, r)
            })
            .unwrap()
        };
        let left = local_cascade(&left12, &a3l).unwrap();
        let e1 = ExtendedAlphabet::local_of(&a1).unwrap();
        let e2 = ExtendedAlphabet::local_of(&a2).unwrap();
        let a3r = {
            let (e1, e2) = (e1.clone(), e2.clone());
            let (s1, s2) = (a1.space().clone(), a2.space().clone());
            let alph = a1.alphabet().clone();
            AsyncAutomaton::from_rule(&e2.alphabet().clone(), vec![1, 1, 2], &[0, 0, 0], move |l, r| {
                let (l1, qa) = e2.split(l);
                let (a, sa) = e1.split(l1);
                let ps = alph.loc(a);
                third(&s1.joint_decode(ps, sa), &s2.joint_decode(ps, qa), a, r)
            })
            .unwrap()
        };
        let right = local_cascade(&a1, &local_cascade(&a2, &a3r).unwrap()).unwrap();
        for t in enumerate_traces(&ex(), 5) {
            assert_eq!(left.run_final(&t), right.run_final(&t));
        }
    }

    fn second_global(a1: &AsyncAutomaton) -> AsyncAutomaton {
        // p3 resets to 1 on c exactly when the global annotation has p1 in 1
        let ext = ExtendedAlphabet::global_of(a1).unwrap();
        let e = ext.clone();
        let space = a1.space().clone();
        AsyncAutomaton::from_rule(ext.alphabet(), vec![1, 1, 2], &[0, 0, 0], move |l, q| {
            let (a, s) = e.split(l);
            if a == 2 && space.component(s, 0) == 1 {
                vec![q[0], 1]
            } else if a == 2 {
                vec![q[0], 0]
            } else {
                q.to_vec()
            }
        })
        .unwrap()
    }

    #[test]
    fn global_by_local_agrees() {
        let a1 = a_ex();
        let a2 = second_global(&a1);
        let gc = Cascade::new(CascadeMode::Global, vec![a1.clone(), a2.clone()]).unwrap();
        let sim = simulate_global_by_local(&a1, &a2).unwrap();
        for t in enumerate_traces(&ex(), 6) {
            assert_eq!(sim.final_state(&t).unwrap(), gc.final_state(&t).unwrap());
            assert_eq!(gc.compose(&gc.stage_finals(&t).unwrap()), gc.final_state(&t).unwrap());
        }
        // the annotation sees p1 through b even when c is concurrent with later a's
        let t = Trace::from_names(&ex(), "abca").unwrap();
        assert_eq!(gc.split(gc.final_state(&t).unwrap())[1], a2.space().encode(&[0, 0, 1]));
    }

    #[test]
    fn one_stage_cascades_are_the_automaton() {
        let a1 = a_ex();
        for mode in [CascadeMode::Local, CascadeMode::Global] {
            let c = Cascade::new(mode, vec![a1.clone()]).unwrap();
            for t in enumerate_traces(&ex(), 4) {
                assert_eq!(c.final_state(&t).unwrap(), a1.run_final(&t));
            }
        }
    }

    #[test]
    fn global_cascade_bracketing() {
        let a1 = a_ex();
        let a2 = second_global(&a1);
        let s1 = a1.space().clone();
        let s2 = a2.space().clone();
        // stage three: p2 toggles on b when stage two has p3 in 1 and p1 is 0
        let rule = move |a: ActionId, s: usize, q: usize, r: &[u32]| -> Vec<u32> {
            if a == 1 && s2.component(q, 2) == 1 && s1.component(s, 0) == 0 {
                vec![r[0], 1 - r[1]]
            } else {
                r.to_vec()
            }
        };
        let left12 = GcTree::node(GcTree::leaf(a1.clone()), GcTree::leaf(a2.clone())).unwrap();
        let el = ExtendedAlphabet::global(left12.base_alphabet(), left12.space(), left12.state_names()).unwrap();
        let pair = WreathAtm::new(a1.space().clone(), a2.space().clone()).unwrap();
        let a3l = {
            let (el, pair, rule) = (el.clone(), pair.clone(), rule.clone());
            AsyncAutomaton::from_rule(&el.alphabet().clone(), vec![1, 2, 1], &[0, 0, 0], move |l, r| {
                let (a, g) = el.split(l);
                let (s, q) = pair.split(g);
                rule(a, s, q, r)
            })
            .unwrap()
        };
        let left = GcTree::node(left12, GcTree::leaf(a3l)).unwrap();
        let e1 = ExtendedAlphabet::global_of(&a1).unwrap();
        let e2 = ExtendedAlphabet::global_of(&a2).unwrap();
        let a3r = {
            let (e1, e2) = (e1.clone(), e2.clone());
            AsyncAutomaton::from_rule(&e2.alphabet().clone(), vec![1, 2, 1], &[0, 0, 0], move |l, r| {
                let (l1, q) = e2.split(l);
                let (a, s) = e1.split(l1);
                rule(a, s, q, r)
            })
            .unwrap()
        };
        let inner = GcTree::node(GcTree::leaf(a2.clone()), GcTree::leaf(a3r)).unwrap();
        let right = GcTree::node(GcTree::leaf(a1.clone()), inner).unwrap();
        for t in enumerate_traces(&ex(), 5) {
            assert_eq!(left.final_state(&t).unwrap(), right.final_state(&t).unwrap());
        }
    }

    fn two() -> Arc<DistributedAlphabet> {
        Arc::new(DistributedAlphabet::new(&["p1", "p2"], &[("p1", vec!["a", "b"]), ("p2", vec!["b", "c"])]).unwrap())
    }

    /// `U2[p1] ≀ U2[p2]`-shaped: `a` resets p1, `b` resets p1 to 2 and in
    /// the second coordinate resets p2 to p1's old state, `c` resets p2 to 1.
    fn eta() -> WreathMorphism {
        let alph = two();
        let w = WreathAtm::new(StateSpace::new(vec![2, 1]).unwrap(), StateSpace::new(vec![1, 2]).unwrap()).unwrap();
        let a = wreath_elem(&w, &[0], &[0, 0], |_| vec![0]).unwrap();
        let b = wreath_elem(&w, &[0, 1], &[1, 1], |s| vec![s as u32; 2]).unwrap();
        let c = wreath_elem(&w, &[1], &[0], |_| vec![0, 0]).unwrap();
        WreathMorphism::new(&alph, w, vec![a, b, c]).unwrap()
    }

    #[test]
    fn wreath_cascade_bridge() {
        let eta = eta();
        let c = wreath_to_cascade(&eta, &[0, 0], &[0, 0]).unwrap();
        // the flattened cascade is the wreath morphism itself
        for a in 0..3 {
            assert_eq!(c.flat.global_transition(a), eta.flat().image(a));
        }
        let w = eta.wreath();
        for t in enumerate_traces(&two(), 6) {
            let (s, q) = eta.apply(&t, 0, 0);
            assert_eq!(c.flat.run_final(&t), w.pair_index(s, q));
        }
    }

    #[test]
    fn wreath_morphism_rejects_nonlocal_images() {
        let alph = two();
        let w = WreathAtm::new(StateSpace::new(vec![2, 1]).unwrap(), StateSpace::new(vec![1, 2]).unwrap()).unwrap();
        // c on p2 reading p1's state
        let bad = WreathElem {
            m: Transformation::identity(2),
            f: vec![Transformation::identity(2), Transformation::constant(2, 1)],
        };
        let id = w.identity();
        assert!(WreathMorphism::new(&alph, w, vec![id.clone(), id, bad]).is_err());
    }

    #[test]
    fn inverse_image_is_recognised() {
        let a1 = a_ex();
        let ext = ExtendedAlphabet::local_of(&a1).unwrap();
        // L: some event labelled (b, p1 in 2)
        let target = ext.letter(1, a1.space().restrict(&[0, 1]).encode(&[1, 0]));
        let space = StateSpace::new(vec![2, 1, 1]).unwrap();
        let kernels = (0..ext.alphabet().num_actions())
            .map(|l| {
                let n = space.joint_size(ext.alphabet().loc(l));
                if l == target {
                    // p1 goes to 1
                    vec![1; n]
                } else {
                    (0..n as u32).collect()
                }
            })
            .collect();
        let psi = AsyncMorphism::from_kernels(ext.alphabet(), space.clone(), kernels).unwrap();
        let finals: BTreeSet<usize> = [space.encode(&[1, 0, 0])].into();
        let rec = wpp_inverse(&a1, &psi, 0, &finals).unwrap();
        let mut hits = 0;
        for t in enumerate_traces(&ex(), 6) {
            let x = local_transducer(&a1, &ext, &t).unwrap();
            let oracle = x.labels().contains(&target);
            assert_eq!(rec.accepts(&t), oracle);
            // a b reached after an earlier b on p1
            let expect = t.events_of(0).windows(2).any(|w| t.label(w[1]) == 1 && t.label(w[0]) == 1);
            assert_eq!(oracle, expect);
            hits += oracle as usize;
        }
        assert!(hits > 0);
    }

    #[test]
    fn union_decomposition() {
        let eta = eta();
        let w = eta.wreath().clone();
        let all: Vec<(usize, usize)> = (0..w.left.total())
            .flat_map(|s| (0..w.right.total()).map(move |q| (s, q)))
            .collect();
        for mask in 0u32..(1 << all.len()) {
            let finals: BTreeSet<(usize, usize)> =
                all.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, p)| *p).collect();
            let d = wpp_decompose(&eta, 0, 0, &finals).unwrap();
            for t in enumerate_traces(&two(), 4) {
                assert_eq!(d.accepts(&t).unwrap(), finals.contains(&eta.apply(&t, 0, 0)));
            }
        }
    }

    #[test]
    fn cascade_json() {
        let a1 = a_ex();
        let a2 = second_local(&a1);
        let v = serde_json::json!({
            "mode": "local",
            "stages": [a1.to_json(), a2.to_json()],
            "final": [[{"p1": 1}, {"p3": 1}]]
        });
        let (c, finals) = cascade_from_json(&v, None, |_| unreachable!()).unwrap();
        let finals = finals.unwrap();
        assert_eq!(finals.len(), 1);
        for t in enumerate_traces(&ex(), 4) {
            let st = c.stage_finals(&t).unwrap();
            let expect = a1.space().component(st[0], 0) == 1 && a2.space().decode(st[1]) == vec![0, 0, 1];
            assert_eq!(c.accepts(&finals, &t).unwrap(), expect);
        }
    }
}
