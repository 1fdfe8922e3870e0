//! Transformation monoids acting on the right: `x·(fg) = (x·f)·g`.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod chain;
pub mod holonomy;

pub use chain::{CascadeMap, Chain, Factor, FactorElem, FactorKind};
pub use holonomy::{krohn_rhodes_word, WordDecomposition};

/// Default bound on the size of a generated monoid.
pub const CLOSURE_LIMIT: usize = 1_000_000;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Transformation(Vec<u32>);

impl fmt::Debug for Transformation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl fmt::Display for Transformation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|x| x.to_string()).collect();
        write!(f, "[{}]", parts.join(" "))
    }
}

impl Transformation {
    pub fn identity(n: usize) -> Self {
        Transformation((0..n as u32).collect())
    }

    pub fn constant(n: usize, x: u32) -> Self {
        Transformation(vec![x; n])
    }

    pub fn new(table: Vec<u32>) -> Result<Self> {
        let n = table.len();
        if let Some(&v) = table.iter().find(|&&v| v as usize >= n) {
            return Err(Error::OutOfRange {
                value: v as usize,
                size: n,
            });
        }
        Ok(Transformation(table))
    }

    pub fn from_fn(n: usize, f: impl Fn(u32) -> u32) -> Self {
        Transformation((0..n as u32).map(f).collect())
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn table(&self) -> &[u32] {
        &self.0
    }

    #[inline]
    pub fn apply(&self, x: u32) -> u32 {
        self.0[x as usize]
    }

    /// First `self`, then `g`.
    pub fn then(&self, g: &Transformation) -> Transformation {
        debug_assert_eq!(self.degree(), g.degree());
        Transformation(self.0.iter().map(|&x| g.0[x as usize]).collect())
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &x)| i as u32 == x)
    }

    pub fn is_constant(&self) -> bool {
        self.0.windows(2).all(|w| w[0] == w[1])
    }

    pub fn is_permutation(&self) -> bool {
        let mut seen = vec![false; self.0.len()];
        for &x in &self.0 {
            if std::mem::replace(&mut seen[x as usize], true) {
                return false;
            }
        }
        true
    }

    pub fn inverse(&self) -> Option<Transformation> {
        if !self.is_permutation() {
            return None;
        }
        let mut inv = vec![0u32; self.0.len()];
        for (i, &x) in self.0.iter().enumerate() {
            inv[x as usize] = i as u32;
        }
        Some(Transformation(inv))
    }

    pub fn image(&self) -> Vec<u32> {
        let mut v = self.0.clone();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Image of a sorted set.
    pub fn image_of(&self, set: &[u32]) -> Vec<u32> {
        let mut v: Vec<u32> = set.iter().map(|&x| self.apply(x)).collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// The monoid generated by a set of transformations, identity included.
#[derive(Debug, Clone)]
pub struct TransformationMonoid {
    degree: usize,
    generators: Vec<Transformation>,
    elements: Vec<Transformation>,
    index: HashMap<Transformation, usize>,
    witness: Vec<Vec<usize>>,
}

impl TransformationMonoid {
    /// Breadth first closure; element 0 is the identity and every element
    /// carries a shortest generator word reaching it.
    pub fn closure(degree: usize, generators: &[Transformation], limit: usize) -> Result<Self> {
        for g in generators {
            if g.degree() != degree {
                return Err(Error::DegreeMismatch {
                    expected: degree,
                    found: g.degree(),
                });
            }
        }
        let id = Transformation::identity(degree);
        let mut elements = vec![id.clone()];
        let mut index = HashMap::new();
        index.insert(id, 0);
        let mut witness = vec![Vec::new()];
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            for (k, g) in generators.iter().enumerate() {
                let t = elements[i].then(g);
                if !index.contains_key(&t) {
                    if elements.len() >= limit {
                        return Err(Error::TooLarge {
                            what: "monoid closure",
                            size: elements.len() + 1,
                            limit,
                        });
                    }
                    let mut w = witness[i].clone();
                    w.push(k);
                    index.insert(t.clone(), elements.len());
                    queue.push_back(elements.len());
                    elements.push(t);
                    witness.push(w);
                }
            }
        }
        Ok(TransformationMonoid {
            degree,
            generators: generators.to_vec(),
            elements,
            index,
            witness,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn generators(&self) -> &[Transformation] {
        &self.generators
    }

    pub fn elements(&self) -> &[Transformation] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &Transformation {
        &self.elements[i]
    }

    pub fn index_of(&self, t: &Transformation) -> Option<usize> {
        self.index.get(t).copied()
    }

    pub fn contains(&self, t: &Transformation) -> bool {
        self.index.contains_key(t)
    }

    pub fn witness(&self, i: usize) -> &[usize] {
        &self.witness[i]
    }

    /// Index of `elements[i]·elements[j]`.
    pub fn mul(&self, i: usize, j: usize) -> usize {
        self.index[&self.elements[i].then(&self.elements[j])]
    }

    pub fn idempotents(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.mul(i, i) == i).collect()
    }

    /// No element generates a nontrivial cyclic group.
    pub fn is_aperiodic(&self) -> bool {
        (0..self.len()).all(|i| {
            let mut seen = vec![i];
            let mut x = i;
            loop {
                let y = self.mul(x, i);
                if y == x {
                    return true;
                }
                if seen.contains(&y) {
                    return false;
                }
                seen.push(y);
                x = y;
            }
        })
    }

    /// The H-class of an idempotent, a group with identity `e`.
    pub fn maximal_subgroup(&self, e: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for m in 0..self.len() {
            if self.mul(e, m) != m || self.mul(m, e) != m {
                continue;
            }
            if (0..self.len()).any(|n| self.mul(m, n) == e && self.mul(n, m) == e) {
                out.push(m);
            }
        }
        out
    }

    pub fn contains_nontrivial_group(&self) -> bool {
        !self.is_aperiodic()
    }
}

/// A finite permutation group given by generating permutations.
#[derive(Debug, Clone)]
pub struct PermGroup {
    monoid: TransformationMonoid,
    inverse: Vec<usize>,
}

impl PermGroup {
    pub fn generate(degree: usize, perms: &[Transformation]) -> Result<Self> {
        if let Some(p) = perms.iter().find(|p| !p.is_permutation()) {
            return Err(Error::Malformed(format!("{p} is not a permutation")));
        }
        let monoid = TransformationMonoid::closure(degree, perms, CLOSURE_LIMIT)?;
        let inverse = (0..monoid.len())
            .map(|i| {
                monoid
                    .index_of(&monoid.element(i).inverse().expect("permutation"))
                    .expect("finite group is closed under inverses")
            })
            .collect();
        Ok(PermGroup { monoid, inverse })
    }

    pub fn order(&self) -> usize {
        self.monoid.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.order() == 1
    }

    pub fn degree(&self) -> usize {
        self.monoid.degree()
    }

    pub fn element(&self, i: usize) -> &Transformation {
        self.monoid.element(i)
    }

    pub fn elements(&self) -> &[Transformation] {
        self.monoid.elements()
    }

    pub fn index_of(&self, p: &Transformation) -> Option<usize> {
        self.monoid.index_of(p)
    }

    pub fn mul(&self, i: usize, j: usize) -> usize {
        self.monoid.mul(i, j)
    }

    pub fn inv(&self, i: usize) -> usize {
        self.inverse[i]
    }

    pub fn identity(&self) -> usize {
        0
    }

    pub fn monoid(&self) -> &TransformationMonoid {
        &self.monoid
    }

    /// The cyclic group of order `n`, acting on itself.
    pub fn cyclic(n: usize) -> Self {
        let rot = Transformation::from_fn(n, |x| (x + 1) % n as u32);
        PermGroup::generate(n, &[rot]).expect("rotation is a permutation")
    }

    /// A small generating set, chosen greedily.
    pub fn generating_set(&self) -> Vec<usize> {
        let mut gens: Vec<usize> = Vec::new();
        let mut reached = vec![0usize];
        for cand in 0..self.order() {
            if reached.contains(&cand) {
                continue;
            }
            gens.push(cand);
            let ts: Vec<Transformation> = gens.iter().map(|&g| self.element(g).clone()).collect();
            let sub = TransformationMonoid::closure(self.degree(), &ts, CLOSURE_LIMIT)
                .expect("subgroup of a finite group");
            reached = sub.elements().iter().map(|t| self.index_of(t).unwrap()).collect();
            if reached.len() == self.order() {
                break;
            }
        }
        gens
    }
}

/// Outcome of a search for `G ≺ M`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Division {
    /// `G` is a quotient of the subgroup of `M` generated by `preimages`,
    /// which lie in the maximal subgroup at idempotent `idempotent`.
    Divides {
        idempotent: usize,
        preimages: Vec<usize>,
    },
    NotFound,
    /// `M` is too large to search.
    Unverified,
}

/// Searches for a subgroup of `m` mapping onto `g`.
pub fn group_divides(g: &PermGroup, m: &TransformationMonoid, limit: usize) -> Division {
    if g.is_trivial() {
        return Division::Divides {
            idempotent: 0,
            preimages: Vec::new(),
        };
    }
    if m.len() > limit {
        return Division::Unverified;
    }
    let gens = g.generating_set();
    for e in m.idempotents() {
        let h = m.maximal_subgroup(e);
        if h.len() < g.order() {
            continue;
        }
        let mut choice = vec![0usize; gens.len()];
        loop {
            let pre: Vec<usize> = choice.iter().map(|&c| h[c]).collect();
            if extends_to_epimorphism(m, e, &pre, g, &gens) {
                return Division::Divides {
                    idempotent: e,
                    preimages: pre,
                };
            }
            let mut k = 0;
            loop {
                if k == choice.len() {
                    break;
                }
                choice[k] += 1;
                if choice[k] < h.len() {
                    break;
                }
                choice[k] = 0;
                k += 1;
            }
            if k == choice.len() {
                break;
            }
        }
    }
    Division::NotFound
}

/// Whether `pre[i] ↦ gens[i]` extends to a homomorphism from the group
/// generated by `pre` (identity `e`) onto `g`.
fn extends_to_epimorphism(
    m: &TransformationMonoid,
    e: usize,
    pre: &[usize],
    g: &PermGroup,
    gens: &[usize],
) -> bool {
    let mut img: HashMap<usize, usize> = HashMap::new();
    img.insert(e, g.identity());
    let mut queue = VecDeque::from([e]);
    while let Some(x) = queue.pop_front() {
        let gx = img[&x];
        for (k, &p) in pre.iter().enumerate() {
            let y = m.mul(x, p);
            let gy = g.mul(gx, gens[k]);
            match img.get(&y) {
                Some(&old) if old != gy => return false,
                Some(_) => {}
                None => {
                    img.insert(y, gy);
                    queue.push_back(y);
                }
            }
        }
    }
    let mut hit = vec![false; g.order()];
    for &v in img.values() {
        hit[v] = true;
    }
    hit.into_iter().all(|b| b)
}

/// A morphism from free words over named letters into transformations of
/// `{0, .., degree-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordMorphism {
    degree: usize,
    letters: Vec<String>,
    images: Vec<Transformation>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WordMorphismJson {
    pub degree: usize,
    pub generators: IndexMap<String, Vec<u32>>,
}

impl WordMorphism {
    pub fn new(degree: usize, letters: Vec<String>, images: Vec<Transformation>) -> Result<Self> {
        if letters.len() != images.len() {
            return Err(Error::Malformed("letters and images differ in number".into()));
        }
        for t in &images {
            if t.degree() != degree {
                return Err(Error::DegreeMismatch {
                    expected: degree,
                    found: t.degree(),
                });
            }
        }
        Ok(WordMorphism {
            degree,
            letters,
            images,
        })
    }

    pub fn from_json(j: &WordMorphismJson) -> Result<Self> {
        let mut letters = Vec::new();
        let mut images = Vec::new();
        for (l, t) in &j.generators {
            letters.push(l.clone());
            images.push(Transformation::new(t.clone())?);
        }
        WordMorphism::new(j.degree, letters, images)
    }

    pub fn to_json(&self) -> WordMorphismJson {
        WordMorphismJson {
            degree: self.degree,
            generators: self
                .letters
                .iter()
                .zip(&self.images)
                .map(|(l, t)| (l.clone(), t.table().to_vec()))
                .collect(),
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn letters(&self) -> &[String] {
        &self.letters
    }

    pub fn num_letters(&self) -> usize {
        self.images.len()
    }

    pub fn image(&self, a: usize) -> &Transformation {
        &self.images[a]
    }

    pub fn images(&self) -> &[Transformation] {
        &self.images
    }

    pub fn eval(&self, w: &[usize]) -> Transformation {
        w.iter()
            .fold(Transformation::identity(self.degree), |acc, &a| acc.then(&self.images[a]))
    }

    pub fn monoid(&self, limit: usize) -> Result<TransformationMonoid> {
        TransformationMonoid::closure(self.degree, &self.images, limit)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimulationReport {
    /// First `(letter, state)` at which `f(y·ψ(a)) ≠ f(y)·φ(a)`.
    pub counterexample: Option<(usize, u32)>,
    pub words_checked: usize,
}

impl SimulationReport {
    pub fn holds(&self) -> bool {
        self.counterexample.is_none()
    }
}

/// Checks `f(y·ψ(a)) = f(y)·φ(a)` for every letter and state, then on all
/// words up to `bound` letters.
pub fn check_simulation_word(
    phi: &WordMorphism,
    psi: &WordMorphism,
    f: &[u32],
    bound: usize,
) -> Result<SimulationReport> {
    if phi.num_letters() != psi.num_letters() {
        return Err(Error::Malformed("morphisms have different letter counts".into()));
    }
    if f.len() != psi.degree() {
        return Err(Error::DegreeMismatch {
            expected: psi.degree(),
            found: f.len(),
        });
    }
    let mut hit = vec![false; phi.degree()];
    for &x in f {
        if x as usize >= phi.degree() {
            return Err(Error::OutOfRange {
                value: x as usize,
                size: phi.degree(),
            });
        }
        hit[x as usize] = true;
    }
    if hit.iter().any(|h| !h) {
        return Err(Error::Precondition("f is not surjective".into()));
    }
    for a in 0..phi.num_letters() {
        for y in 0..psi.degree() as u32 {
            if f[psi.image(a).apply(y) as usize] != phi.image(a).apply(f[y as usize]) {
                return Ok(SimulationReport {
                    counterexample: Some((a, y)),
                    words_checked: 0,
                });
            }
        }
    }
    // words: track the pair (ψ(w), φ(w)) and compare through f
    let mut words = 0usize;
    let mut stack = vec![(Transformation::identity(psi.degree()), Transformation::identity(phi.degree()), 0usize)];
    while let Some((p, q, len)) = stack.pop() {
        words += 1;
        for y in 0..psi.degree() {
            if f[p.table()[y] as usize] != q.apply(f[y]) {
                return Err(Error::Internal("letter-wise simulation failed on a word".into()));
            }
        }
        if len < bound {
            for a in 0..phi.num_letters() {
                stack.push((p.then(psi.image(a)), q.then(phi.image(a)), len + 1));
            }
        }
    }
    Ok(SimulationReport {
        counterexample: None,
        words_checked: words,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn table1() -> WordMorphism {
        // states q1 qa qb qab qt
        let ma = Transformation::new(vec![1, 4, 3, 4, 4]).unwrap();
        let mb = Transformation::new(vec![2, 3, 4, 4, 4]).unwrap();
        WordMorphism::new(5, vec!["a".into(), "b".into()], vec![ma, mb]).unwrap()
    }

    #[test]
    fn composition_is_left_to_right() {
        let f = Transformation::new(vec![1, 2, 0]).unwrap();
        let g = Transformation::new(vec![0, 0, 2]).unwrap();
        // x·(fg) = g(f(x))
        assert_eq!(f.then(&g).table(), &[0, 2, 0]);
        assert_eq!(g.then(&f).table(), &[1, 1, 0]);
    }

    #[test]
    fn table1_monoid() {
        let m = table1().monoid(CLOSURE_LIMIT).unwrap();
        assert_eq!(m.len(), 5);
        let (one, ma, mb) = (0, 1, 2);
        let mab = m.mul(ma, mb);
        assert_eq!(m.mul(mb, ma), mab);
        let zero = m.mul(ma, ma);
        assert_eq!(m.mul(mb, mb), zero);
        assert_eq!(m.mul(mab, ma), zero);
        assert_eq!(m.mul(zero, one), zero);
        assert_ne!(mab, zero);
        assert!(m.is_aperiodic());
        assert_eq!(m.witness(mab), &[0, 1]);
    }

    #[test]
    fn closure_limit() {
        let rot = Transformation::from_fn(7, |x| (x + 1) % 7);
        let r = TransformationMonoid::closure(7, &[rot], 3);
        assert!(matches!(r, Err(Error::TooLarge { .. })));
    }

    #[test]
    fn degree_mismatch() {
        let r = TransformationMonoid::closure(3, &[Transformation::identity(2)], 10);
        assert!(matches!(r, Err(Error::DegreeMismatch { .. })));
    }

    #[test]
    fn cyclic_groups() {
        let z3 = PermGroup::cyclic(3);
        assert_eq!(z3.order(), 3);
        assert_eq!(z3.generating_set().len(), 1);
        assert!(!z3.monoid().is_aperiodic());
        let g = z3.generating_set()[0];
        assert_eq!(z3.mul(g, z3.inv(g)), 0);
    }

    #[test]
    fn z2_divides_swap_monoid_not_u2() {
        let swap = Transformation::new(vec![1, 0, 2]).unwrap();
        let m = TransformationMonoid::closure(3, &[swap], 100).unwrap();
        assert!(matches!(
            group_divides(&PermGroup::cyclic(2), &m, 100),
            Division::Divides { .. }
        ));
        let u2 = TransformationMonoid::closure(
            2,
            &[Transformation::constant(2, 0), Transformation::constant(2, 1)],
            100,
        )
        .unwrap();
        assert_eq!(group_divides(&PermGroup::cyclic(2), &u2, 100), Division::NotFound);
        assert!(matches!(
            group_divides(&PermGroup::cyclic(1), &u2, 100),
            Division::Divides { .. }
        ));
    }

    #[test]
    fn z2_divides_z6() {
        let z6 = PermGroup::cyclic(6);
        assert!(matches!(
            group_divides(&PermGroup::cyclic(2), z6.monoid(), 100),
            Division::Divides { .. }
        ));
        assert!(matches!(
            group_divides(&PermGroup::cyclic(3), z6.monoid(), 100),
            Division::Divides { .. }
        ));
        assert_eq!(group_divides(&PermGroup::cyclic(4), z6.monoid(), 100), Division::NotFound);
    }

    #[test]
    fn simulation_of_itself() {
        let phi = table1();
        let r = check_simulation_word(&phi, &phi, &[0, 1, 2, 3, 4], 4).unwrap();
        assert!(r.holds());
        assert_eq!(r.words_checked, 1 + 2 + 4 + 8 + 16);
        let bad = check_simulation_word(&phi, &phi, &[1, 0, 2, 3, 4], 2).unwrap();
        assert!(!bad.holds());
        assert!(check_simulation_word(&phi, &phi, &[0, 0, 2, 3, 4], 2).is_err());
    }
}
