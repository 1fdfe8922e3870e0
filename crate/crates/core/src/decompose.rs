//! Krohn-Rhodes decomposition for acyclic architectures.
//!
//! A morphism from traces into a finite transformation monoid is simulated
//! by an asynchronous morphism into a wreath chain whose factors are `U2`
//! or permutation groups, each owned by one process. The construction
//! peels off a leaf process, decomposes the word behaviour of that leaf
//! since its last synchronisation, and recurses on the remaining processes
//! with shared letters annotated by that behaviour.

use std::collections::HashMap;
use std::sync::Arc;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::alphabet::{ActionId, DistributedAlphabet, ProcessId};
use crate::atm::{p_map_verdict, AsyncMorphism, StateSpace};
use crate::error::{Error, Result};
use crate::monoid::holonomy::DIVISION_SEARCH_LIMIT;
use crate::monoid::{
    group_divides, krohn_rhodes_word, CascadeMap, Chain, Division, Factor, FactorKind, Transformation,
    TransformationMonoid, WordMorphism, CLOSURE_LIMIT,
};
use crate::trace::{enumerate_traces, Trace};

/// Chain state spaces above this size are not flattened into global maps.
pub const FLATTEN_LIMIT: usize = 1 << 16;
/// Chain state spaces up to this size are checked state by state in full.
pub const SIMULATION_CHECK_LIMIT: usize = 1 << 20;

/// A morphism from traces into transformations of `{0, .., degree-1}`.
#[derive(Debug, Clone)]
pub struct TraceMorphism {
    alphabet: Arc<DistributedAlphabet>,
    degree: usize,
    images: Vec<Transformation>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceMorphismJson {
    pub degree: usize,
    pub generators: IndexMap<String, Vec<u32>>,
}

impl TraceMorphism {
    /// Fails unless the images of independent letters commute.
    pub fn new(alphabet: &Arc<DistributedAlphabet>, degree: usize, images: Vec<Transformation>) -> Result<Self> {
        if images.len() != alphabet.num_actions() {
            return Err(Error::Malformed(format!(
                "{} images for {} actions",
                images.len(),
                alphabet.num_actions()
            )));
        }
        if degree == 0 {
            return Err(Error::Malformed("empty carrier".into()));
        }
        for t in &images {
            if t.degree() != degree {
                return Err(Error::DegreeMismatch {
                    expected: degree,
                    found: t.degree(),
                });
            }
        }
        for a in 0..images.len() {
            for b in a + 1..images.len() {
                if alphabet.independent(a, b) && images[a].then(&images[b]) != images[b].then(&images[a]) {
                    return Err(Error::NotTraceMorphism(
                        alphabet.action_name(a).to_string(),
                        alphabet.action_name(b).to_string(),
                    ));
                }
            }
        }
        Ok(TraceMorphism {
            alphabet: alphabet.clone(),
            degree,
            images,
        })
    }

    /// Every action of the alphabet must have a generator.
    pub fn from_json(alphabet: &Arc<DistributedAlphabet>, j: &TraceMorphismJson) -> Result<Self> {
        let mut images = vec![None; alphabet.num_actions()];
        for (l, t) in &j.generators {
            images[alphabet.action_id(l)?] = Some(Transformation::new(t.clone())?);
        }
        let images = images
            .into_iter()
            .enumerate()
            .map(|(a, t)| t.ok_or_else(|| Error::Malformed(format!("no image for `{}`", alphabet.action_name(a)))))
            .collect::<Result<Vec<_>>>()?;
        TraceMorphism::new(alphabet, j.degree, images)
    }

    pub fn to_json(&self) -> TraceMorphismJson {
        TraceMorphismJson {
            degree: self.degree,
            generators: (0..self.images.len())
                .map(|a| (self.alphabet.action_name(a).to_string(), self.images[a].table().to_vec()))
                .collect(),
        }
    }

    pub fn alphabet(&self) -> &Arc<DistributedAlphabet> {
        &self.alphabet
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn image(&self, a: ActionId) -> &Transformation {
        &self.images[a]
    }

    pub fn images(&self) -> &[Transformation] {
        &self.images
    }

    pub fn apply(&self, t: &Trace, x: u32) -> u32 {
        t.labels().iter().fold(x, |x, &a| self.images[a].apply(x))
    }

    pub fn monoid(&self, limit: usize) -> Result<TransformationMonoid> {
        TransformationMonoid::closure(self.degree, &self.images, limit)
    }
}

/// A letter of the alphabet left after removing a leaf.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReducedLetter {
    /// A letter not involving the leaf.
    Plain(ActionId),
    /// A letter shared with the leaf, annotated by an element of `N`.
    Shared(ActionId, usize),
}

/// The two morphisms a leaf splits a morphism into.
#[derive(Debug, Clone)]
pub struct LeafSplit {
    pub leaf: ProcessId,
    pub neighbour: Option<ProcessId>,
    /// Submonoid generated by the images of the leaf's private letters.
    pub n: TransformationMonoid,
    /// Letters of the leaf, in the order used by `phi1`.
    pub leaf_letters: Vec<ActionId>,
    /// On `N`: private letters multiply on the right, shared ones reset to
    /// the identity.
    pub phi1: WordMorphism,
    /// Over the reduced alphabet, whose process `k` is `processes[k]`.
    pub phi2: TraceMorphism,
    pub processes: Vec<ProcessId>,
    pub letters: Vec<ReducedLetter>,
    ids: HashMap<ReducedLetter, ActionId>,
}

impl LeafSplit {
    pub fn reduced_id(&self, l: ReducedLetter) -> ActionId {
        self.ids[&l]
    }
}

/// Least process with at most one neighbour.
pub fn choose_leaf(alphabet: &DistributedAlphabet) -> Result<ProcessId> {
    let g = alphabet.communication_graph();
    if !g.is_acyclic() {
        return Err(Error::Cyclic);
    }
    (0..alphabet.num_processes())
        .find(|&i| g.neighbours(i).len() <= 1)
        .ok_or(Error::Cyclic)
}

pub fn split_leaf(phi: &TraceMorphism, leaf: ProcessId) -> Result<LeafSplit> {
    let alph = phi.alphabet();
    let np = alph.num_processes();
    if np < 2 {
        return Err(Error::Precondition("splitting needs two processes".into()));
    }
    let g = alph.communication_graph();
    let nb = g.neighbours(leaf);
    if nb.len() > 1 {
        return Err(Error::Precondition(format!("`{}` is not a leaf", alph.process_name(leaf))));
    }
    let neighbour = Some(nb.first().copied().unwrap_or(if leaf == 0 { 1 } else { 0 }));
    let leaf_letters: Vec<ActionId> = alph.actions_of(leaf).to_vec();
    let private: Vec<ActionId> = leaf_letters.iter().copied().filter(|&a| alph.loc(a).len() == 1).collect();
    let gens: Vec<Transformation> = private.iter().map(|&a| phi.image(a).clone()).collect();
    let n = TransformationMonoid::closure(phi.degree(), &gens, CLOSURE_LIMIT)?;
    let phi1_images = leaf_letters
        .iter()
        .map(|&a| {
            if alph.loc(a).len() == 1 {
                Transformation::from_fn(n.len(), |x| {
                    n.index_of(&n.element(x as usize).then(phi.image(a)))
                        .expect("N is closed under its generators") as u32
                })
            } else {
                Transformation::constant(n.len(), 0)
            }
        })
        .collect();
    let phi1 = WordMorphism::new(
        n.len(),
        leaf_letters.iter().map(|&a| alph.action_name(a).to_string()).collect(),
        phi1_images,
    )?;

    let processes: Vec<ProcessId> = (0..np).filter(|&i| i != leaf).collect();
    let name_of = |l: &ReducedLetter| match *l {
        ReducedLetter::Plain(a) => alph.action_name(a).to_string(),
        ReducedLetter::Shared(a, k) => format!("{}#{k}", alph.action_name(a)),
    };
    let mut letters = Vec::new();
    for a in alph.actions_in_order() {
        let ls = alph.loc(a);
        if !ls.contains(&leaf) {
            letters.push(ReducedLetter::Plain(a));
        } else if ls.len() > 1 {
            letters.extend((0..n.len()).map(|k| ReducedLetter::Shared(a, k)));
        }
    }
    let per_process: Vec<(String, Vec<String>)> = processes
        .iter()
        .map(|&i| {
            let acts = letters
                .iter()
                .filter(|l| match **l {
                    ReducedLetter::Plain(a) | ReducedLetter::Shared(a, _) => alph.loc(a).contains(&i),
                })
                .map(name_of)
                .collect();
            (alph.process_name(i).to_string(), acts)
        })
        .collect();
    let names: Vec<String> = processes.iter().map(|&i| alph.process_name(i).to_string()).collect();
    let order: Vec<String> = letters.iter().map(name_of).collect();
    let reduced = Arc::new(DistributedAlphabet::new(&names, &per_process)?.with_action_order(&order)?);
    let mut ids = HashMap::new();
    let mut images = vec![Transformation::identity(phi.degree()); reduced.num_actions()];
    for l in &letters {
        let id = reduced.action_id(&name_of(l))?;
        ids.insert(*l, id);
        images[id] = match *l {
            ReducedLetter::Plain(a) => phi.image(a).clone(),
            ReducedLetter::Shared(a, k) => n.element(k).then(phi.image(a)),
        };
    }
    let phi2 = TraceMorphism::new(&reduced, phi.degree(), images)
        .map_err(|e| Error::Internal(format!("reduced morphism: {e}")))?;
    Ok(LeafSplit {
        leaf,
        neighbour,
        n,
        leaf_letters,
        phi1,
        phi2,
        processes,
        letters,
        ids,
    })
}

/// An asynchronous morphism into a chain of located factors, with the
/// simulation map `f` from chain states onto the carrier.
#[derive(Debug, Clone)]
pub struct AsyncSimulation {
    pub alphabet: Arc<DistributedAlphabet>,
    pub chain: Chain,
    pub images: Vec<CascadeMap>,
    pub f: Vec<u32>,
}

impl AsyncSimulation {
    /// The atm state space: each process holds its own factors.
    pub fn space(&self) -> Result<StateSpace> {
        StateSpace::new(self.chain.process_sizes(self.alphabet.num_processes())?)
    }

    pub fn to_global(&self, y: usize) -> Result<usize> {
        Ok(self.space()?.encode(&self.chain.to_local_states(y, self.alphabet.num_processes())))
    }

    pub fn from_global(&self, space: &StateSpace, g: usize) -> usize {
        self.chain.from_local_states(&space.decode(g))
    }

    /// `ψ(a)` on global states.
    pub fn global_image(&self, a: ActionId) -> Result<Transformation> {
        let space = self.space()?;
        if space.total() > FLATTEN_LIMIT {
            return Err(Error::TooLarge {
                what: "chain state space",
                size: space.total(),
                limit: FLATTEN_LIMIT,
            });
        }
        Ok(Transformation::from_fn(space.total(), |g| {
            let y = self.from_global(&space, g as usize);
            let y2 = self.images[a].apply(&self.chain, y);
            space.encode(&self.chain.to_local_states(y2, self.alphabet.num_processes())) as u32
        }))
    }

    /// `ψ` as an asynchronous morphism; fails if some image is not an
    /// `a`-map.
    pub fn morphism(&self) -> Result<AsyncMorphism> {
        let imgs = (0..self.alphabet.num_actions())
            .map(|a| self.global_image(a))
            .collect::<Result<Vec<_>>>()?;
        AsyncMorphism::from_global(&self.alphabet, self.space()?, &imgs)
    }

    pub fn apply(&self, t: &Trace, y: usize) -> usize {
        t.labels().iter().fold(y, |y, &a| self.images[a].apply(&self.chain, y))
    }

    pub fn factor_summary(&self) -> Vec<String> {
        self.chain
            .factors()
            .iter()
            .map(|f| {
                let loc = f.location.map(|p| self.alphabet.process_name(p)).unwrap_or("?");
                match &f.kind {
                    FactorKind::U2 => format!("U2[{loc}]"),
                    FactorKind::Group(g) => format!("G{}[{loc}]", g.order()),
                }
            })
            .collect()
    }
}

fn localize(chain: &Chain, at: impl Fn(Option<ProcessId>) -> ProcessId) -> Chain {
    Chain::new(
        chain
            .factors()
            .iter()
            .map(|f| Factor {
                kind: f.kind.clone(),
                location: Some(at(f.location)),
            })
            .collect(),
    )
}

fn single_process(phi: &TraceMorphism) -> Result<AsyncSimulation> {
    let alph = phi.alphabet();
    let word = WordMorphism::new(phi.degree(), alph.action_names().to_vec(), phi.images().to_vec())?;
    let d = krohn_rhodes_word(&word)?;
    Ok(AsyncSimulation {
        alphabet: alph.clone(),
        chain: localize(&d.chain, |_| 0),
        images: d.images,
        f: d.f,
    })
}

fn decompose_rec(phi: &TraceMorphism) -> Result<AsyncSimulation> {
    let alph = phi.alphabet();
    if alph.num_processes() == 1 {
        return single_process(phi);
    }
    let leaf = choose_leaf(alph)?;
    let split = split_leaf(phi, leaf)?;
    let d1 = krohn_rhodes_word(&split.phi1)?;
    let sim2 = decompose_rec(&split.phi2)?;
    let c1 = localize(&d1.chain, |_| leaf);
    let c2 = localize(&sim2.chain, |p| split.processes[p.expect("located")]);
    let mut chain = c1.clone();
    chain.extend(&c2);
    let slot: HashMap<ActionId, usize> = split.leaf_letters.iter().enumerate().map(|(k, &a)| (a, k)).collect();
    let images = (0..alph.num_actions())
        .map(|a| {
            let psi1 = slot
                .get(&a)
                .map(|&k| d1.images[k].clone())
                .unwrap_or_else(|| CascadeMap::identity(&c1));
            let ls = alph.loc(a);
            CascadeMap::wreath(&c1, &psi1, &c2, |y| {
                if ls == [leaf] {
                    CascadeMap::identity(&c2)
                } else if ls.contains(&leaf) {
                    sim2.images[split.reduced_id(ReducedLetter::Shared(a, d1.f[y] as usize))].clone()
                } else {
                    sim2.images[split.reduced_id(ReducedLetter::Plain(a))].clone()
                }
            })
        })
        .collect();
    let nz = c2.num_states();
    let f = (0..chain.num_states())
        .map(|yz| split.n.element(d1.f[yz / nz] as usize).apply(sim2.f[yz % nz]))
        .collect();
    Ok(AsyncSimulation {
        alphabet: alph.clone(),
        chain,
        images,
        f,
    })
}

/// The decomposition of `phi`, for an acyclic communication graph.
pub fn acyclic_kr(phi: &TraceMorphism) -> Result<AsyncSimulation> {
    if !phi.alphabet().communication_graph().is_acyclic() {
        return Err(Error::Cyclic);
    }
    decompose_rec(phi)
}

/// Division of the target monoid by each group factor.
pub fn group_divisions(phi: &TraceMorphism, sim: &AsyncSimulation) -> Result<Vec<(usize, Division)>> {
    let m = phi.monoid(CLOSURE_LIMIT)?;
    Ok(sim
        .chain
        .factors()
        .iter()
        .enumerate()
        .filter_map(|(k, f)| match &f.kind {
            FactorKind::Group(g) => Some((k, group_divides(g, &m, DIVISION_SEARCH_LIMIT))),
            FactorKind::U2 => None,
        })
        .collect())
}

/// Every factor is located, groups are nontrivial, and every letter image
/// uses only its factors' elements.
pub fn validate_factors(sim: &AsyncSimulation) -> Result<()> {
    let np = sim.alphabet.num_processes();
    for (k, f) in sim.chain.factors().iter().enumerate() {
        match f.location {
            Some(p) if p < np => {}
            _ => return Err(Error::Malformed(format!("factor {k} has no valid location"))),
        }
        if let FactorKind::Group(g) = &f.kind {
            if g.is_trivial() {
                return Err(Error::Malformed(format!("factor {k} is a trivial group")));
            }
        }
    }
    for img in &sim.images {
        img.validate(&sim.chain)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SimulationCheck {
    /// First `(letter, chain state)` violating the equation.
    pub letter_counterexample: Option<(ActionId, usize)>,
    pub states_checked: usize,
    pub sampled: bool,
    /// Letters whose image is not a `loc(a)`-map.
    pub non_local: Vec<ActionId>,
    pub traces_checked: usize,
    /// A trace and initial carrier state where `f(ψ(t)(y)) ≠ φ(t)(f(y))`.
    pub trace_counterexample: Option<(Vec<ActionId>, u32)>,
}

impl SimulationCheck {
    pub fn holds(&self) -> bool {
        self.letter_counterexample.is_none() && self.non_local.is_empty() && self.trace_counterexample.is_none()
    }
}

/// Checks `f(ψ(a)(y)) = φ(a)(f(y))` for every letter and state, that every
/// `ψ(a)` is an `a`-map, and that for every trace of at most `bound` events
/// and every `x`, running `ψ` from the least `y` with `f(y) = x` ends in
/// `φ(t)(x)`.
pub fn check_simulation(phi: &TraceMorphism, sim: &AsyncSimulation, bound: usize) -> Result<SimulationCheck> {
    if **phi.alphabet() != *sim.alphabet {
        return Err(Error::AlphabetMismatch);
    }
    let ny = sim.chain.num_states();
    if sim.f.len() != ny {
        return Err(Error::DegreeMismatch {
            expected: ny,
            found: sim.f.len(),
        });
    }
    let mut pre: Vec<Option<usize>> = vec![None; phi.degree()];
    for (y, &x) in sim.f.iter().enumerate() {
        if x as usize >= phi.degree() {
            return Err(Error::OutOfRange {
                value: x as usize,
                size: phi.degree(),
            });
        }
        pre[x as usize].get_or_insert(y);
    }
    if pre.iter().any(Option::is_none) {
        return Err(Error::Precondition("f is not surjective".into()));
    }
    let space = sim.space()?;
    let (states, sampled) = space.states_up_to(SIMULATION_CHECK_LIMIT, 0x5eed);
    let mut report = SimulationCheck {
        sampled,
        states_checked: states.len(),
        ..Default::default()
    };
    'letters: for a in 0..phi.alphabet().num_actions() {
        for &g in &states {
            let y = sim.from_global(&space, g);
            if sim.f[sim.images[a].apply(&sim.chain, y)] != phi.image(a).apply(sim.f[y]) {
                report.letter_counterexample = Some((a, y));
                break 'letters;
            }
        }
    }
    let np = phi.alphabet().num_processes();
    for a in 0..phi.alphabet().num_actions() {
        let h = |g: usize| {
            let y = sim.images[a].apply(&sim.chain, sim.from_global(&space, g));
            space.encode(&sim.chain.to_local_states(y, np))
        };
        if !p_map_verdict(&space, h, phi.alphabet().loc(a), &states, sampled).holds() {
            report.non_local.push(a);
        }
    }
    for t in enumerate_traces(phi.alphabet(), bound) {
        report.traces_checked += 1;
        for (x, y) in pre.iter().enumerate() {
            let y = y.unwrap();
            if sim.f[sim.apply(&t, y)] != phi.apply(&t, x as u32) {
                report.trace_counterexample = Some((t.labels().to_vec(), x as u32));
                return Ok(report);
            }
        }
    }
    Ok(report)
}
