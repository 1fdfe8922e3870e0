//! Asynchronous transformation monoids: transformations of global states
//! `S = ∏ S_i`, where each process owns one component.
//!
//! Global states are mixed-radix indices in process order, process 0 most
//! significant. A joint state of a process set `P` is indexed the same way
//! over the members of `P` in increasing order.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::alphabet::{ActionId, DistributedAlphabet, ProcessId};
use crate::error::{Error, Result};
use crate::monoid::{PermGroup, Transformation, TransformationMonoid};
use crate::trace::Trace;

/// Largest global state space checked exhaustively.
pub const EXHAUSTIVE_LIMIT: usize = 4096;
/// Number of states drawn when a check is sampled.
pub const SAMPLES: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StateSpace {
    sizes: Vec<usize>,
    strides: Vec<usize>,
    total: usize,
}

impl StateSpace {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.contains(&0) {
            return Err(Error::Malformed("empty local state set".into()));
        }
        let mut strides = vec![1usize; sizes.len()];
        let mut total = 1usize;
        for i in (0..sizes.len()).rev() {
            strides[i] = total;
            total = total
                .checked_mul(sizes[i])
                .ok_or(Error::TooLarge {
                    what: "global state space",
                    size: usize::MAX,
                    limit: usize::MAX,
                })?;
        }
        Ok(StateSpace {
            sizes,
            strides,
            total,
        })
    }

    pub fn num_processes(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn size(&self, i: ProcessId) -> usize {
        self.sizes[i]
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn decode(&self, g: usize) -> Vec<u32> {
        (0..self.sizes.len())
            .map(|i| ((g / self.strides[i]) % self.sizes[i]) as u32)
            .collect()
    }

    pub fn encode(&self, local: &[u32]) -> usize {
        local
            .iter()
            .zip(&self.strides)
            .map(|(&x, &s)| x as usize * s)
            .sum()
    }

    #[inline]
    pub fn component(&self, g: usize, i: ProcessId) -> u32 {
        ((g / self.strides[i]) % self.sizes[i]) as u32
    }

    #[inline]
    pub fn set_component(&self, g: usize, i: ProcessId, x: u32) -> usize {
        g - self.component(g, i) as usize * self.strides[i] + x as usize * self.strides[i]
    }

    pub fn joint_size(&self, ps: &[ProcessId]) -> usize {
        ps.iter().map(|&i| self.sizes[i]).product()
    }

    /// The joint state of `ps` inside `g`.
    #[inline]
    pub fn project(&self, g: usize, ps: &[ProcessId]) -> usize {
        ps.iter()
            .fold(0usize, |acc, &i| acc * self.sizes[i] + self.component(g, i) as usize)
    }

    pub fn joint_decode(&self, ps: &[ProcessId], mut j: usize) -> Vec<u32> {
        let mut out = vec![0u32; ps.len()];
        for (k, &i) in ps.iter().enumerate().rev() {
            out[k] = (j % self.sizes[i]) as u32;
            j /= self.sizes[i];
        }
        out
    }

    /// `g` with the components of `ps` replaced by joint state `j`.
    #[inline]
    pub fn embed(&self, g: usize, ps: &[ProcessId], mut j: usize) -> usize {
        let mut out = g;
        for &i in ps.iter().rev() {
            out = self.set_component(out, i, (j % self.sizes[i]) as u32);
            j /= self.sizes[i];
        }
        out
    }

    /// The space restricted to `ps`, as its own state space.
    pub fn restrict(&self, ps: &[ProcessId]) -> StateSpace {
        StateSpace::new(ps.iter().map(|&i| self.sizes[i]).collect()).expect("nonempty sizes")
    }

    /// Global states to examine: all of them, or a fixed pseudo-random
    /// sample when the space exceeds `EXHAUSTIVE_LIMIT`.
    pub fn states_to_check(&self, seed: u64) -> (Vec<usize>, bool) {
        self.states_up_to(EXHAUSTIVE_LIMIT, seed)
    }

    /// As `states_to_check` with a caller-chosen exhaustive limit.
    pub fn states_up_to(&self, limit: usize, seed: u64) -> (Vec<usize>, bool) {
        if self.total <= limit {
            ((0..self.total).collect(), false)
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            ((0..SAMPLES).map(|_| rng.gen_range(0..self.total)).collect(), true)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    /// No violation among the sampled states.
    HoldsSampled,
    /// A violating state, and for the second condition the state it was
    /// compared with.
    Fails { state: usize, other: Option<usize> },
}

impl Verdict {
    pub fn holds(&self) -> bool {
        !matches!(self, Verdict::Fails { .. })
    }

    fn from_sampled(sampled: bool) -> Self {
        if sampled {
            Verdict::HoldsSampled
        } else {
            Verdict::Holds
        }
    }
}

/// Whether `h` only touches `ps` and only reads `ps`.
pub fn is_p_map(space: &StateSpace, h: &Transformation, ps: &[ProcessId]) -> Verdict {
    let (states, sampled) = space.states_to_check(0x5eed);
    p_map_verdict(space, |s| h.apply(s as u32) as usize, ps, &states, sampled)
}

/// `is_p_map` for a map given pointwise, checked at `states`.
pub fn p_map_verdict(
    space: &StateSpace,
    h: impl Fn(usize) -> usize,
    ps: &[ProcessId],
    states: &[usize],
    sampled: bool,
) -> Verdict {
    let others: Vec<ProcessId> = (0..space.num_processes()).filter(|i| !ps.contains(i)).collect();
    for &s in states {
        let t = h(s);
        if others.iter().any(|&i| space.component(t, i) != space.component(s, i)) {
            return Verdict::Fails {
                state: s,
                other: None,
            };
        }
        // compare with the state sharing the P part but zero elsewhere
        let base = space.embed(0, ps, space.project(s, ps));
        let tb = h(base);
        if space.project(t, ps) != space.project(tb, ps) {
            return Verdict::Fails {
                state: s,
                other: Some(base),
            };
        }
    }
    Verdict::from_sampled(sampled)
}

/// The extension of a map on joint `ps`-states to global states.
pub fn extend_local(space: &StateSpace, ps: &[ProcessId], f: &[u32]) -> Result<Transformation> {
    let n = space.joint_size(ps);
    if f.len() != n {
        return Err(Error::DegreeMismatch {
            expected: n,
            found: f.len(),
        });
    }
    if let Some(&v) = f.iter().find(|&&v| v as usize >= n) {
        return Err(Error::OutOfRange {
            value: v as usize,
            size: n,
        });
    }
    Ok(Transformation::from_fn(space.total(), |g| {
        let g = g as usize;
        space.embed(g, ps, f[space.project(g, ps)] as usize) as u32
    }))
}

/// The map on joint `ps`-states of a `ps`-map, read at states that are
/// zero outside `ps`.
pub fn restrict(space: &StateSpace, h: &Transformation, ps: &[ProcessId]) -> Result<Vec<u32>> {
    if !is_p_map(space, h, ps).holds() {
        return Err(Error::NotLocalMap(format!("{ps:?}")));
    }
    Ok((0..space.joint_size(ps))
        .map(|j| space.project(h.apply(space.embed(0, ps, j) as u32) as usize, ps) as u32)
        .collect())
}

pub fn commute(h: &Transformation, g: &Transformation) -> bool {
    h.then(g) == g.then(h)
}

/// A transformation monoid on the global states of a state space.
#[derive(Debug, Clone)]
pub struct Atm {
    pub space: StateSpace,
    pub monoid: TransformationMonoid,
}

impl Atm {
    pub fn generated(space: StateSpace, gens: &[Transformation], limit: usize) -> Result<Self> {
        let monoid = TransformationMonoid::closure(space.total(), gens, limit)?;
        Ok(Atm { space, monoid })
    }

    /// `U2[ℓ]`: two states at `ℓ`, one elsewhere, generated by the two
    /// resets. State 0 plays `1`, state 1 plays `2`.
    pub fn u2(num_processes: usize, l: ProcessId) -> Self {
        let mut sizes = vec![1; num_processes];
        sizes[l] = 2;
        let space = StateSpace::new(sizes).unwrap();
        let gens = [Transformation::constant(2, 0), Transformation::constant(2, 1)];
        Atm::generated(space, &gens, 8).unwrap()
    }

    /// `G[ℓ]`: the group acting on itself at `ℓ`, generated by its elements.
    pub fn group(num_processes: usize, l: ProcessId, g: &PermGroup) -> Self {
        let mut sizes = vec![1; num_processes];
        sizes[l] = g.order();
        let space = StateSpace::new(sizes).unwrap();
        let gens: Vec<Transformation> = (0..g.order())
            .map(|h| Transformation::from_fn(g.order(), |x| g.mul(x as usize, h) as u32))
            .collect();
        Atm::generated(space, &gens, g.order() + 1).unwrap()
    }
}

/// A morphism from traces into an ATM, given by the `loc(a)`-map each
/// action induces.
#[derive(Debug, Clone)]
pub struct AsyncMorphism {
    alphabet: Arc<DistributedAlphabet>,
    space: StateSpace,
    kernels: Vec<Vec<u32>>,
    images: Vec<Transformation>,
}

impl AsyncMorphism {
    /// `kernels[a]` is a map on joint `loc(a)`-states.
    pub fn from_kernels(
        alphabet: &Arc<DistributedAlphabet>,
        space: StateSpace,
        kernels: Vec<Vec<u32>>,
    ) -> Result<Self> {
        if kernels.len() != alphabet.num_actions() {
            return Err(Error::Malformed(format!(
                "{} action maps for {} actions",
                kernels.len(),
                alphabet.num_actions()
            )));
        }
        if space.num_processes() != alphabet.num_processes() {
            return Err(Error::Malformed("state space and alphabet disagree on processes".into()));
        }
        let images = kernels
            .iter()
            .enumerate()
            .map(|(a, k)| extend_local(&space, alphabet.loc(a), k))
            .collect::<Result<Vec<_>>>()?;
        Ok(AsyncMorphism {
            alphabet: alphabet.clone(),
            space,
            kernels,
            images,
        })
    }

    /// From global transformations, each of which must be a `loc(a)`-map.
    pub fn from_global(
        alphabet: &Arc<DistributedAlphabet>,
        space: StateSpace,
        images: &[Transformation],
    ) -> Result<Self> {
        let kernels = images
            .iter()
            .enumerate()
            .map(|(a, h)| {
                restrict(&space, h, alphabet.loc(a))
                    .map_err(|_| Error::NotLocalMap(alphabet.action_name(a).to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        AsyncMorphism::from_kernels(alphabet, space, kernels)
    }

    pub fn alphabet(&self) -> &Arc<DistributedAlphabet> {
        &self.alphabet
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn kernel(&self, a: ActionId) -> &[u32] {
        &self.kernels[a]
    }

    pub fn image(&self, a: ActionId) -> &Transformation {
        &self.images[a]
    }

    pub fn images(&self) -> &[Transformation] {
        &self.images
    }

    #[inline]
    pub fn step(&self, g: usize, a: ActionId) -> usize {
        let ps = self.alphabet.loc(a);
        let j = self.space.project(g, ps);
        self.space.embed(g, ps, self.kernels[a][j] as usize)
    }

    pub fn apply_word(&self, g: usize, w: &[ActionId]) -> usize {
        w.iter().fold(g, |s, &a| self.step(s, a))
    }

    /// The image of a trace.
    pub fn evaluate(&self, t: &Trace) -> Transformation {
        t.labels()
            .iter()
            .fold(Transformation::identity(self.space.total()), |acc, &a| acc.then(&self.images[a]))
    }

    pub fn target(&self, limit: usize) -> Result<Atm> {
        Atm::generated(self.space.clone(), &self.images, limit)
    }
}

/// `T1 ≀ T2` over the same processes: local states `S_i × Q_i`, the pair
/// `(s_i, q_i)` numbered `s_i·|Q_i| + q_i`.
#[derive(Debug, Clone)]
pub struct WreathAtm {
    pub left: StateSpace,
    pub right: StateSpace,
    space: StateSpace,
}

/// An element `(m, f)` with `m` on the left states and `f(s)` on the
/// right for each left global state `s`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WreathElem {
    pub m: Transformation,
    pub f: Vec<Transformation>,
}

impl WreathAtm {
    pub fn new(left: StateSpace, right: StateSpace) -> Result<Self> {
        if left.num_processes() != right.num_processes() {
            return Err(Error::Malformed("wreath factors over different process sets".into()));
        }
        let sizes = left
            .sizes()
            .iter()
            .zip(right.sizes())
            .map(|(a, b)| a * b)
            .collect();
        Ok(WreathAtm {
            left,
            right,
            space: StateSpace::new(sizes)?,
        })
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn pair_index(&self, s: usize, q: usize) -> usize {
        let ls = self.left.decode(s);
        let rs = self.right.decode(q);
        let local: Vec<u32> = (0..ls.len())
            .map(|i| ls[i] * self.right.size(i) as u32 + rs[i])
            .collect();
        self.space.encode(&local)
    }

    pub fn split(&self, w: usize) -> (usize, usize) {
        let local = self.space.decode(w);
        let mut ls = Vec::with_capacity(local.len());
        let mut rs = Vec::with_capacity(local.len());
        for (i, &x) in local.iter().enumerate() {
            let q = self.right.size(i) as u32;
            ls.push(x / q);
            rs.push(x % q);
        }
        (self.left.encode(&ls), self.right.encode(&rs))
    }

    pub fn identity(&self) -> WreathElem {
        WreathElem {
            m: Transformation::identity(self.left.total()),
            f: vec![Transformation::identity(self.right.total()); self.left.total()],
        }
    }

    pub fn apply(&self, e: &WreathElem, s: usize, q: usize) -> (usize, usize) {
        (e.m.apply(s as u32) as usize, e.f[s].apply(q as u32) as usize)
    }

    /// `(m1, f1)(m2, f2) = (m1m2, s ↦ f1(s)·f2(s·m1))`.
    pub fn compose(&self, a: &WreathElem, b: &WreathElem) -> WreathElem {
        WreathElem {
            m: a.m.then(&b.m),
            f: (0..self.left.total())
                .map(|s| a.f[s].then(&b.f[a.m.apply(s as u32) as usize]))
                .collect(),
        }
    }

    pub fn to_transformation(&self, e: &WreathElem) -> Transformation {
        Transformation::from_fn(self.space.total(), |w| {
            let (s, q) = self.split(w as usize);
            let (s2, q2) = self.apply(e, s, q);
            self.pair_index(s2, q2) as u32
        })
    }

    /// Every element generated by `gens`, identity first.
    pub fn generate(&self, gens: &[WreathElem], limit: usize) -> Result<Vec<WreathElem>> {
        let mut out = vec![self.identity()];
        let mut seen = std::collections::HashSet::new();
        seen.insert(self.identity());
        let mut k = 0;
        while k < out.len() {
            for g in gens {
                let e = self.compose(&out[k], g);
                if seen.insert(e.clone()) {
                    if out.len() >= limit {
                        return Err(Error::TooLarge {
                            what: "wreath closure",
                            size: out.len() + 1,
                            limit,
                        });
                    }
                    out.push(e);
                }
            }
            k += 1;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportReport {
    pub left_is_p_map: bool,
    pub right_values_are_p_maps: bool,
    pub right_reads_only_p: bool,
    pub sampled: bool,
}

impl SupportReport {
    pub fn holds(&self) -> bool {
        self.left_is_p_map && self.right_values_are_p_maps && self.right_reads_only_p
    }
}

/// For a wreath element that is a `ps`-map: its left part is a `ps`-map,
/// every `f(s)` is a `ps`-map, and `f(s)` depends only on `s_P`.
pub fn wreath_support(w: &WreathAtm, e: &WreathElem, ps: &[ProcessId]) -> Result<SupportReport> {
    let flat = w.to_transformation(e);
    let pre = is_p_map(w.space(), &flat, ps);
    if !pre.holds() {
        return Err(Error::Precondition(format!("element is not a {ps:?}-map")));
    }
    let left = is_p_map(&w.left, &e.m, ps);
    let mut sampled = matches!(pre, Verdict::HoldsSampled) || matches!(left, Verdict::HoldsSampled);
    let (lstates, ls) = w.left.states_to_check(0xface);
    sampled |= ls;
    let mut right_maps = true;
    let mut reads = true;
    for &s in &lstates {
        let v = is_p_map(&w.right, &e.f[s], ps);
        sampled |= matches!(v, Verdict::HoldsSampled);
        right_maps &= v.holds();
        let base = w.left.embed(0, ps, w.left.project(s, ps));
        reads &= e.f[s] == e.f[base];
    }
    Ok(SupportReport {
        left_is_p_map: left.holds(),
        right_values_are_p_maps: right_maps,
        right_reads_only_p: reads,
        sampled,
    })
}
