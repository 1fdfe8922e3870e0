//! Iterated wreath products `T1 ≀ T2 ≀ .. ≀ Tn` of small factors, with
//! elements stored as triangular tables.
//!
//! A chain state is a tuple `(x1, .., xn)`, flattened in mixed radix with
//! the first factor most significant. An element gives, for each factor
//! `k` and each value of the prefix `(x1, .., x(k-1))`, the factor element
//! applied to `xk`.

use crate::alphabet::ProcessId;
use crate::error::{Error, Result};
use crate::monoid::{PermGroup, Transformation};

#[derive(Debug, Clone)]
pub enum FactorKind {
    /// The reset monoid on two states.
    U2,
    /// A permutation group acting on itself by right multiplication.
    Group(PermGroup),
}

#[derive(Debug, Clone)]
pub struct Factor {
    pub kind: FactorKind,
    /// Owning process, for chains used as asynchronous automata.
    pub location: Option<ProcessId>,
}

impl Factor {
    pub fn u2(location: Option<ProcessId>) -> Self {
        Factor {
            kind: FactorKind::U2,
            location,
        }
    }

    pub fn group(g: PermGroup, location: Option<ProcessId>) -> Self {
        Factor {
            kind: FactorKind::Group(g),
            location,
        }
    }

    pub fn size(&self) -> usize {
        match &self.kind {
            FactorKind::U2 => 2,
            FactorKind::Group(g) => g.order(),
        }
    }

    pub fn is_group(&self) -> bool {
        matches!(self.kind, FactorKind::Group(_))
    }

    pub fn apply(&self, e: FactorElem, x: u32) -> u32 {
        match (e, &self.kind) {
            (FactorElem::Id, _) => x,
            (FactorElem::Reset(r), _) => r,
            (FactorElem::Mul(g), FactorKind::Group(grp)) => grp.mul(x as usize, g) as u32,
            (FactorElem::Mul(_), FactorKind::U2) => x,
        }
    }

    /// `e` then `f`.
    pub fn compose(&self, e: FactorElem, f: FactorElem) -> FactorElem {
        match (e, f) {
            (e, FactorElem::Id) => e,
            (FactorElem::Id, f) => f,
            (_, FactorElem::Reset(r)) => FactorElem::Reset(r),
            (FactorElem::Reset(r), f) => FactorElem::Reset(self.apply(f, r)),
            (FactorElem::Mul(g), FactorElem::Mul(h)) => match &self.kind {
                FactorKind::Group(grp) => FactorElem::Mul(grp.mul(g, h)),
                FactorKind::U2 => FactorElem::Id,
            },
        }
    }

    pub fn is_valid(&self, e: FactorElem) -> bool {
        match (&self.kind, e) {
            (_, FactorElem::Id) => true,
            (FactorKind::U2, FactorElem::Reset(r)) => r < 2,
            (FactorKind::U2, FactorElem::Mul(_)) => false,
            (FactorKind::Group(_), FactorElem::Reset(_)) => false,
            (FactorKind::Group(g), FactorElem::Mul(h)) => h < g.order(),
        }
    }

    fn normalise(&self, e: FactorElem) -> FactorElem {
        match e {
            FactorElem::Mul(0) => FactorElem::Id,
            e => e,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FactorElem {
    Id,
    /// Constant map, only in `U2` factors.
    Reset(u32),
    /// Right multiplication by a group element, only in group factors.
    Mul(usize),
}

#[derive(Debug, Clone, Default)]
pub struct Chain {
    factors: Vec<Factor>,
}

impl Chain {
    pub fn new(factors: Vec<Factor>) -> Self {
        Chain { factors }
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn push(&mut self, f: Factor) {
        self.factors.push(f);
    }

    pub fn extend(&mut self, other: &Chain) {
        self.factors.extend(other.factors.iter().cloned());
    }

    pub fn num_states(&self) -> usize {
        self.factors.iter().map(Factor::size).product()
    }

    /// Number of prefixes seen by factor `k`.
    pub fn prefix_count(&self, k: usize) -> usize {
        self.factors[..k].iter().map(Factor::size).product()
    }

    pub fn decode(&self, mut y: usize) -> Vec<u32> {
        let mut out = vec![0u32; self.len()];
        for (k, f) in self.factors.iter().enumerate().rev() {
            out[k] = (y % f.size()) as u32;
            y /= f.size();
        }
        out
    }

    pub fn encode(&self, xs: &[u32]) -> usize {
        xs.iter()
            .zip(&self.factors)
            .fold(0usize, |acc, (&x, f)| acc * f.size() + x as usize)
    }

    pub fn is_reset_only(&self) -> bool {
        self.factors.iter().all(|f| !f.is_group())
    }

    /// Local state space size of each process when factors are grouped by
    /// location.
    pub fn process_sizes(&self, num_processes: usize) -> Result<Vec<usize>> {
        let mut sizes = vec![1usize; num_processes];
        for f in &self.factors {
            let p = f
                .location
                .ok_or_else(|| Error::Precondition("factor without location".into()))?;
            if p >= num_processes {
                return Err(Error::OutOfRange {
                    value: p,
                    size: num_processes,
                });
            }
            sizes[p] *= f.size();
        }
        Ok(sizes)
    }

    /// Per-process local states of chain state `y`; each process reads its
    /// own factors in chain order, first most significant.
    pub fn to_local_states(&self, y: usize, num_processes: usize) -> Vec<u32> {
        let xs = self.decode(y);
        let mut local = vec![0u32; num_processes];
        for (f, &x) in self.factors.iter().zip(&xs) {
            let p = f.location.expect("located chain");
            local[p] = local[p] * f.size() as u32 + x;
        }
        local
    }

    pub fn from_local_states(&self, local: &[u32]) -> usize {
        let mut rest: Vec<u32> = local.to_vec();
        let mut xs = vec![0u32; self.len()];
        for (k, f) in self.factors.iter().enumerate().rev() {
            let p = f.location.expect("located chain");
            xs[k] = rest[p] % f.size() as u32;
            rest[p] /= f.size() as u32;
        }
        self.encode(&xs)
    }

    /// Reads a flat transformation of the chain states back as a triangular
    /// element, failing if it is not one.
    pub fn decompose_flat(&self, t: &Transformation) -> Result<CascadeMap> {
        if t.degree() != self.num_states() {
            return Err(Error::DegreeMismatch {
                expected: self.num_states(),
                found: t.degree(),
            });
        }
        let n = self.len();
        let mut levels: Vec<Vec<Option<Vec<u32>>>> =
            (0..n).map(|k| vec![None; self.prefix_count(k)]).collect();
        for y in 0..self.num_states() {
            let xs = self.decode(y);
            let zs = self.decode(t.apply(y as u32) as usize);
            for k in 0..n {
                let p = self.encode_prefix(&xs[..k]);
                let f = self.factors[k].size();
                let slot = levels[k][p].get_or_insert_with(|| vec![u32::MAX; f]);
                let cur = slot[xs[k] as usize];
                if cur != u32::MAX && cur != zs[k] {
                    return Err(Error::Precondition(format!(
                        "coordinate {k} depends on later coordinates"
                    )));
                }
                slot[xs[k] as usize] = zs[k];
            }
        }
        let mut out = Vec::with_capacity(n);
        for (k, lvl) in levels.into_iter().enumerate() {
            let f = &self.factors[k];
            let mut row = Vec::with_capacity(lvl.len());
            for map in lvl {
                let map = map.expect("every prefix occurs");
                row.push(self.factor_elem_of(f, &map).ok_or_else(|| {
                    Error::Precondition(format!("coordinate {k} leaves its factor monoid"))
                })?);
            }
            out.push(row);
        }
        Ok(CascadeMap { levels: out })
    }

    fn factor_elem_of(&self, f: &Factor, map: &[u32]) -> Option<FactorElem> {
        if map.iter().enumerate().all(|(i, &x)| i as u32 == x) {
            return Some(FactorElem::Id);
        }
        match &f.kind {
            FactorKind::U2 => {
                if map[0] == map[1] {
                    Some(FactorElem::Reset(map[0]))
                } else {
                    None
                }
            }
            FactorKind::Group(g) => {
                // right multiplication by h sends the identity to h
                let h = map[g.identity()] as usize;
                (0..g.order())
                    .all(|x| map[x] as usize == g.mul(x, h))
                    .then_some(FactorElem::Mul(h))
            }
        }
    }

    fn encode_prefix(&self, xs: &[u32]) -> usize {
        xs.iter()
            .zip(&self.factors)
            .fold(0usize, |acc, (&x, f)| acc * f.size() + x as usize)
    }
}

/// An element of the wreath product of a chain's factors.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CascadeMap {
    levels: Vec<Vec<FactorElem>>,
}

impl CascadeMap {
    pub fn identity(chain: &Chain) -> Self {
        CascadeMap {
            levels: (0..chain.len())
                .map(|k| vec![FactorElem::Id; chain.prefix_count(k)])
                .collect(),
        }
    }

    pub fn from_levels(chain: &Chain, levels: Vec<Vec<FactorElem>>) -> Result<Self> {
        let m = CascadeMap { levels };
        m.validate(chain)?;
        Ok(m)
    }

    pub fn levels(&self) -> &[Vec<FactorElem>] {
        &self.levels
    }

    pub fn validate(&self, chain: &Chain) -> Result<()> {
        if self.levels.len() != chain.len() {
            return Err(Error::Malformed("level count differs from chain length".into()));
        }
        for (k, row) in self.levels.iter().enumerate() {
            if row.len() != chain.prefix_count(k) {
                return Err(Error::Malformed(format!("level {k} has the wrong width")));
            }
            let f = &chain.factors[k];
            if let Some(e) = row.iter().find(|&&e| !f.is_valid(e)) {
                return Err(Error::Malformed(format!("level {k}: {e:?} not in factor")));
            }
        }
        Ok(())
    }

    pub fn apply(&self, chain: &Chain, y: usize) -> usize {
        let xs = chain.decode(y);
        let mut out = 0usize;
        let mut prefix = 0usize;
        for (k, f) in chain.factors.iter().enumerate() {
            let e = self.levels[k][prefix];
            out = out * f.size() + f.apply(e, xs[k]) as usize;
            prefix = prefix * f.size() + xs[k] as usize;
        }
        out
    }

    /// `self` then `other`, by the wreath composition law.
    pub fn then(&self, chain: &Chain, other: &CascadeMap) -> CascadeMap {
        let n = chain.len();
        let mut levels: Vec<Vec<FactorElem>> = Vec::with_capacity(n);
        // image of each prefix under self, built level by level
        let mut image: Vec<usize> = vec![0];
        for k in 0..n {
            let f = &chain.factors[k];
            let width = chain.prefix_count(k);
            let mut row = Vec::with_capacity(width);
            let mut next_image = Vec::with_capacity(width * f.size());
            for p in 0..width {
                let e1 = self.levels[k][p];
                let e2 = other.levels[k][image[p]];
                row.push(f.normalise(f.compose(e1, e2)));
                for x in 0..f.size() as u32 {
                    next_image.push(image[p] * f.size() + f.apply(e1, x) as usize);
                }
            }
            levels.push(row);
            image = next_image;
        }
        CascadeMap { levels }
    }

    pub fn to_transformation(&self, chain: &Chain) -> Transformation {
        Transformation::from_fn(chain.num_states(), |y| self.apply(chain, y as usize) as u32)
    }

    /// Factors whose coordinate this element can change.
    pub fn touched(&self) -> Vec<usize> {
        (0..self.levels.len())
            .filter(|&k| self.levels[k].iter().any(|&e| e != FactorElem::Id))
            .collect()
    }

    /// The element `(m1, g)` of `c1 ≀ c2`: `m1` on the first part, and on the
    /// second part the element `g(y1)` chosen by the old first part `y1`.
    pub fn wreath(
        c1: &Chain,
        m1: &CascadeMap,
        c2: &Chain,
        g: impl Fn(usize) -> CascadeMap,
    ) -> CascadeMap {
        let n1 = c1.num_states();
        let mut levels = m1.levels.clone();
        let parts: Vec<CascadeMap> = (0..n1).map(&g).collect();
        for k in 0..c2.len() {
            let mut wide = Vec::with_capacity(n1 * c2.prefix_count(k));
            for part in &parts {
                wide.extend_from_slice(&part.levels[k]);
            }
            levels.push(wide);
        }
        CascadeMap { levels }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn chain() -> Chain {
        Chain::new(vec![
            Factor::u2(Some(0)),
            Factor::group(PermGroup::cyclic(3), Some(1)),
            Factor::u2(Some(0)),
        ])
    }

    fn elem(c: &Chain, k: usize, r: u32) -> FactorElem {
        match (&c.factors()[k].kind, r % 3) {
            (_, 0) => FactorElem::Id,
            (FactorKind::U2, v) => FactorElem::Reset(v - 1),
            (FactorKind::Group(_), v) => FactorElem::Mul(v as usize),
        }
    }

    fn random_map(c: &Chain, seed: &[u32]) -> CascadeMap {
        let mut it = seed.iter().cycle();
        let levels = (0..c.len())
            .map(|k| {
                (0..c.prefix_count(k))
                    .map(|_| elem(c, k, *it.next().unwrap()))
                    .collect()
            })
            .collect();
        CascadeMap::from_levels(c, levels).unwrap()
    }

    #[test]
    fn encode_decode() {
        let c = chain();
        assert_eq!(c.num_states(), 12);
        for y in 0..12 {
            assert_eq!(c.encode(&c.decode(y)), y);
        }
        assert_eq!(c.process_sizes(2).unwrap(), vec![4, 3]);
        for y in 0..12 {
            let l = c.to_local_states(y, 2);
            assert_eq!(c.from_local_states(&l), y);
        }
    }

    #[test]
    fn non_triangular_rejected() {
        let c = Chain::new(vec![Factor::u2(None), Factor::u2(None)]);
        // swap the two coordinates
        let t = Transformation::new(vec![0, 2, 1, 3]).unwrap();
        assert!(c.decompose_flat(&t).is_err());
        // a permutation inside a U2 factor
        let t = Transformation::new(vec![1, 0, 3, 2]).unwrap();
        assert!(c.decompose_flat(&t).is_err());
    }

    proptest! {
        #[test]
        fn composition_law(s1 in proptest::collection::vec(0u32..3, 1..20), s2 in proptest::collection::vec(0u32..3, 1..20)) {
            let c = chain();
            let (m1, m2) = (random_map(&c, &s1), random_map(&c, &s2));
            let flat = m1.to_transformation(&c).then(&m2.to_transformation(&c));
            prop_assert_eq!(m1.then(&c, &m2).to_transformation(&c), flat.clone());
            let back = c.decompose_flat(&flat).unwrap();
            prop_assert_eq!(back.to_transformation(&c), flat);
        }
    }
}
