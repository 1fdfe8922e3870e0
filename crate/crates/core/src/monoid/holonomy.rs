//! Holonomy decomposition of a transformation monoid into a chain of
//! groups and two-state reset monoids.
//!
//! The image sets `X·s`, together with `X` and the singletons, are ordered
//! by subduction. Every equivalence class gets a representative `R`, and
//! each representative with at least two points becomes one level whose
//! coordinate names a tile of `R` (a maximal proper image set inside it).
//! A chain state decodes into a descending sequence `X = P0 ⊃ P1 ⊃ .. ⊃ {x}`
//! and `x` is the simulated state. Levels are ordered by decreasing height,
//! which makes every action triangular. A level with holonomy group `G`
//! becomes `G ≀ U2 ≀ .. ≀ U2`: the group coordinate permutes tile codes and
//! the binary coordinates hold a code that resets realise.

use std::collections::HashMap;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::monoid::chain::{CascadeMap, Chain, Factor, FactorElem};
use crate::monoid::{
    check_simulation_word, group_divides, Division, PermGroup, Transformation,
    TransformationMonoid, WordMorphism, CLOSURE_LIMIT,
};

/// Monoids above this size skip the group division search.
pub const DIVISION_SEARCH_LIMIT: usize = 512;

#[derive(Debug, Clone)]
pub struct LevelInfo {
    pub representative: Vec<u32>,
    pub height: usize,
    pub tiles: usize,
    pub group_order: usize,
    pub factors: Range<usize>,
    pub division: Division,
}

/// A word morphism `ψ` into a chain together with the surjection
/// `f: Y → X` satisfying `f(y·ψ(a)) = f(y)·φ(a)`.
#[derive(Debug, Clone)]
pub struct WordDecomposition {
    pub letters: Vec<String>,
    pub chain: Chain,
    pub images: Vec<CascadeMap>,
    pub f: Vec<u32>,
    pub levels: Vec<LevelInfo>,
}

impl WordDecomposition {
    pub fn flat_morphism(&self) -> WordMorphism {
        let imgs = self
            .images
            .iter()
            .map(|m| m.to_transformation(&self.chain))
            .collect();
        WordMorphism::new(self.chain.num_states(), self.letters.clone(), imgs)
            .expect("images share the chain degree")
    }

    pub fn is_reset_only(&self) -> bool {
        self.chain.is_reset_only()
    }

    pub fn eval(&self, w: &[usize]) -> CascadeMap {
        w.iter().fold(CascadeMap::identity(&self.chain), |acc, &a| {
            acc.then(&self.chain, &self.images[a])
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Action {
    Id,
    /// Permutation of tile indices.
    Perm(Vec<u32>),
    /// Reset to a tile index.
    Const(usize),
}

struct Holonomy {
    sets: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
    class: Vec<usize>,
    height: Vec<usize>,
    rep: Vec<usize>,
    tiles: Vec<Vec<usize>>,
    from: Vec<Transformation>,
    to: Vec<Transformation>,
    /// Representatives with at least two points, in level order.
    levels: Vec<usize>,
    level_of: HashMap<usize, usize>,
}

impl Holonomy {
    fn new(m: &TransformationMonoid) -> Result<Self> {
        let n = m.degree();
        let full: Vec<u32> = (0..n as u32).collect();
        let mut sets: Vec<Vec<u32>> = vec![full.clone()];
        for t in m.elements() {
            sets.push(t.image_of(&full));
        }
        for x in 0..n as u32 {
            sets.push(vec![x]);
        }
        sets.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        sets.dedup();
        let index: HashMap<Vec<u32>, usize> =
            sets.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        let ns = sets.len();

        // A ≤ B when A ⊆ B·m for some m
        let mut images: Vec<Vec<usize>> = Vec::with_capacity(ns);
        for s in &sets {
            let mut v: Vec<usize> = m.elements().iter().map(|t| index[&t.image_of(s)]).collect();
            v.sort_unstable();
            v.dedup();
            images.push(v);
        }
        let subset = |a: &[u32], b: &[u32]| {
            let mut j = 0;
            a.iter().all(|x| {
                while j < b.len() && b[j] < *x {
                    j += 1;
                }
                j < b.len() && b[j] == *x
            })
        };
        let mut below = vec![vec![false; ns]; ns];
        for a in 0..ns {
            for b in 0..ns {
                below[a][b] = images[b].iter().any(|&c| subset(&sets[a], &sets[c]));
            }
        }
        let mut class = vec![usize::MAX; ns];
        for a in 0..ns {
            if class[a] == usize::MAX {
                for b in a..ns {
                    if below[a][b] && below[b][a] {
                        class[b] = a;
                    }
                }
            }
        }
        let rep = class.clone();

        let mut height = vec![usize::MAX; ns];
        fn h(a: usize, sets: &[Vec<u32>], below: &[Vec<bool>], memo: &mut [usize]) -> usize {
            if memo[a] != usize::MAX {
                return memo[a];
            }
            let v = if sets[a].len() == 1 {
                0
            } else {
                1 + (0..sets.len())
                    .filter(|&b| below[b][a] && !below[a][b])
                    .map(|b| h(b, sets, below, memo))
                    .max()
                    .unwrap_or(0)
            };
            memo[a] = v;
            v
        }
        for a in 0..ns {
            h(a, &sets, &below, &mut height);
        }

        let mut tiles = vec![Vec::new(); ns];
        for a in 0..ns {
            if sets[a].len() < 2 {
                continue;
            }
            let proper: Vec<usize> = (0..ns)
                .filter(|&b| sets[b].len() < sets[a].len() && subset(&sets[b], &sets[a]))
                .collect();
            tiles[a] = proper
                .iter()
                .copied()
                .filter(|&b| {
                    !proper
                        .iter()
                        .any(|&c| sets[c].len() > sets[b].len() && subset(&sets[b], &sets[c]))
                })
                .collect();
        }

        let id = Transformation::identity(n);
        let mut from = vec![id.clone(); ns];
        let mut to = vec![id.clone(); ns];
        for a in 0..ns {
            let r = rep[a];
            if r == a || sets[a].len() < 2 {
                continue;
            }
            let u = m
                .elements()
                .iter()
                .find(|t| t.image_of(&sets[r]) == sets[a])
                .ok_or_else(|| Error::Internal("no element maps a representative onto its class".into()))?;
            let v = m
                .elements()
                .iter()
                .find(|t| {
                    t.image_of(&sets[a]) == sets[r]
                        && sets[r].iter().all(|&x| t.apply(u.apply(x)) == x)
                })
                .ok_or_else(|| Error::Internal("no inverse on a class".into()))?;
            from[a] = u.clone();
            to[a] = v.clone();
        }

        let mut levels: Vec<usize> = (0..ns).filter(|&a| rep[a] == a && sets[a].len() >= 2).collect();
        levels.sort_by(|&a, &b| height[b].cmp(&height[a]).then(a.cmp(&b)));
        let level_of = levels.iter().enumerate().map(|(l, &r)| (r, l)).collect();
        Ok(Holonomy {
            sets,
            index,
            class,
            height,
            rep,
            tiles,
            from,
            to,
            levels,
            level_of,
        })
    }

    fn image(&self, a: usize, t: &Transformation) -> usize {
        self.index[&t.image_of(&self.sets[a])]
    }

    fn tile_pos(&self, a: usize, t: usize) -> usize {
        self.tiles[a]
            .iter()
            .position(|&x| x == t)
            .expect("tiles of equivalent sets correspond")
    }

    fn is_subset(&self, a: usize, b: usize) -> bool {
        let (x, y) = (&self.sets[a], &self.sets[b]);
        x.iter().all(|v| y.binary_search(v).is_ok())
    }

    /// The chain `P0 ⊃ P1 ⊃ ..` named by the level coordinates.
    fn decode(&self, coords: &[usize]) -> Vec<usize> {
        let mut chain = vec![0usize];
        loop {
            let p = *chain.last().unwrap();
            if self.sets[p].len() == 1 {
                return chain;
            }
            let r = self.rep[p];
            let c = coords[self.level_of[&r]];
            let t = self.tiles[r][c];
            chain.push(self.image(t, &self.from[p]));
        }
    }

    /// The permutation of tiles of `rep(p)` induced by `s` carrying `p` onto `q`.
    fn perm(&self, p: usize, q: usize, s: &Transformation) -> Vec<u32> {
        let r = self.rep[p];
        self.tiles[r]
            .iter()
            .map(|&t| {
                let moved = self.image(self.image(self.image(t, &self.from[p]), s), &self.to[q]);
                self.tile_pos(r, moved) as u32
            })
            .collect()
    }

    fn actions(&self, s: &Transformation, coords: &[usize]) -> Vec<Action> {
        let old = self.decode(coords);
        let img: Vec<usize> = old.iter().map(|&p| self.image(p, s)).collect();
        let mut acts = vec![Action::Id; self.levels.len()];
        let mut q = 0usize;
        while self.sets[q].len() >= 2 {
            let r = self.rep[q];
            let lvl = self.level_of[&r];
            let mut j = (0..old.len())
                .find(|&j| self.is_subset(img[j], q))
                .expect("the final singleton maps inside every new set");
            let next = loop {
                if img[j] != q {
                    let t = self.tiles[q]
                        .iter()
                        .copied()
                        .find(|&t| self.is_subset(img[j], t))
                        .expect("a proper image set lies in some tile");
                    acts[lvl] = Action::Const(self.tile_pos(r, self.image(t, &self.to[q])));
                    break t;
                }
                if self.class[old[j]] == self.class[q] {
                    acts[lvl] = Action::Perm(self.perm(old[j], q, s));
                    break img[j + 1];
                }
                j += 1;
            };
            q = next;
        }
        acts
    }
}

/// Decomposes a word morphism into a chain of groups and `U2` factors.
pub fn krohn_rhodes_word(phi: &WordMorphism) -> Result<WordDecomposition> {
    let m = phi.monoid(CLOSURE_LIMIT)?;
    let hol = Holonomy::new(&m)?;
    let nl = hol.levels.len();

    let mut chain = Chain::default();
    let mut groups: Vec<Option<PermGroup>> = Vec::with_capacity(nl);
    let mut bits: Vec<usize> = Vec::with_capacity(nl);
    let mut levels: Vec<LevelInfo> = Vec::with_capacity(nl);
    for &r in &hol.levels {
        let nt = hol.tiles[r].len();
        let mut gens: Vec<Transformation> = Vec::new();
        let members: Vec<usize> = (0..hol.sets.len()).filter(|&p| hol.rep[p] == r).collect();
        for &p in &members {
            for s in phi.images() {
                let q = hol.image(p, s);
                if hol.class[q] == hol.class[p] {
                    let pi = Transformation::new(hol.perm(p, q, s))?;
                    if !pi.is_identity() && !gens.contains(&pi) {
                        gens.push(pi);
                    }
                }
            }
        }
        let start = chain.len();
        let g = PermGroup::generate(nt, &gens)?;
        let group_order = g.order();
        let division = if g.is_trivial() {
            groups.push(None);
            Division::Divides {
                idempotent: 0,
                preimages: Vec::new(),
            }
        } else {
            let d = group_divides(&g, &m, DIVISION_SEARCH_LIMIT);
            chain.push(Factor::group(g.clone(), None));
            groups.push(Some(g));
            d
        };
        let nb = usize::BITS as usize - (nt - 1).leading_zeros() as usize;
        for _ in 0..nb {
            chain.push(Factor::u2(None));
        }
        bits.push(nb);
        levels.push(LevelInfo {
            representative: hol.sets[r].clone(),
            height: hol.height[r],
            tiles: nt,
            group_order,
            factors: start..chain.len(),
            division,
        });
    }
    if m.is_aperiodic() && !chain.is_reset_only() {
        return Err(Error::Internal("aperiodic monoid produced a group factor".into()));
    }

    // level coordinates read from a (possibly partial) chain state
    let coords_of = |xs: &[u32]| -> Vec<usize> {
        let mut out = vec![0usize; nl];
        for (l, info) in levels.iter().enumerate() {
            if info.factors.end > xs.len() {
                break;
            }
            let mut k = info.factors.start;
            let g = match &groups[l] {
                Some(_) => {
                    k += 1;
                    Some(xs[info.factors.start] as usize)
                }
                None => None,
            };
            let mut r = 0usize;
            for b in 0..bits[l] {
                r = r * 2 + xs[k + b] as usize;
            }
            if r >= info.tiles {
                r = 0;
            }
            out[l] = match (g, &groups[l]) {
                (Some(g), Some(grp)) => grp.element(g).apply(r as u32) as usize,
                _ => r,
            };
        }
        out
    };

    let level_of_factor: Vec<usize> = (0..chain.len())
        .map(|k| levels.iter().position(|i| i.factors.contains(&k)).unwrap())
        .collect();
    let mut images = Vec::with_capacity(phi.num_letters());
    for s in phi.images() {
        let mut cache: HashMap<Vec<usize>, Vec<Action>> = HashMap::new();
        let mut rows = Vec::with_capacity(chain.len());
        for k in 0..chain.len() {
            let l = level_of_factor[k];
            let info = &levels[l];
            let prefix_chain = Chain::new(chain.factors()[..k].to_vec());
            let mut row = Vec::with_capacity(chain.prefix_count(k));
            for p in 0..chain.prefix_count(k) {
                let xs = prefix_chain.decode(p);
                let mut coords = coords_of(&xs[..info.factors.start]);
                for c in coords.iter_mut().skip(l) {
                    *c = 0;
                }
                let acts = cache
                    .entry(coords.clone())
                    .or_insert_with(|| hol.actions(s, &coords));
                let is_group = groups[l].is_some() && k == info.factors.start;
                let e = match (&acts[l], is_group) {
                    (Action::Id, _) => FactorElem::Id,
                    (Action::Perm(pi), true) => {
                        let grp = groups[l].as_ref().unwrap();
                        let idx = grp
                            .index_of(&Transformation::new(pi.clone())?)
                            .ok_or_else(|| Error::Internal("holonomy permutation outside its group".into()))?;
                        if idx == grp.identity() {
                            FactorElem::Id
                        } else {
                            FactorElem::Mul(idx)
                        }
                    }
                    (Action::Perm(_), false) => FactorElem::Id,
                    (Action::Const(_), true) => FactorElem::Id,
                    (Action::Const(t), false) => {
                        let code = match &groups[l] {
                            Some(grp) => {
                                let g = xs[info.factors.start] as usize;
                                grp.element(grp.inv(g)).apply(*t as u32) as usize
                            }
                            None => *t,
                        };
                        let first_bit = info.factors.start + usize::from(groups[l].is_some());
                        let b = k - first_bit;
                        FactorElem::Reset(((code >> (bits[l] - 1 - b)) & 1) as u32)
                    }
                };
                row.push(e);
            }
            rows.push(row);
        }
        images.push(CascadeMap::from_levels(&chain, rows)?);
    }

    let f: Vec<u32> = (0..chain.num_states())
        .map(|y| {
            let coords = coords_of(&chain.decode(y));
            let p = *hol.decode(&coords).last().unwrap();
            hol.sets[p][0]
        })
        .collect();

    let out = WordDecomposition {
        letters: phi.letters().to_vec(),
        chain,
        images,
        f,
        levels,
    };
    let report = check_simulation_word(phi, &out.flat_morphism(), &out.f, 0)?;
    if !report.holds() {
        return Err(Error::Internal(format!(
            "holonomy simulation fails at {:?}",
            report.counterexample
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn wm(n: usize, gens: &[&[u32]]) -> WordMorphism {
        let imgs: Vec<Transformation> = gens.iter().map(|g| Transformation::new(g.to_vec()).unwrap()).collect();
        let letters = (0..gens.len()).map(|i| format!("l{i}")).collect();
        WordMorphism::new(n, letters, imgs).unwrap()
    }

    #[test]
    fn table1_is_reset_only() {
        let phi = wm(5, &[&[1, 4, 3, 4, 4], &[2, 3, 4, 4, 4]]);
        let d = krohn_rhodes_word(&phi).unwrap();
        assert!(d.is_reset_only());
        assert_eq!(d.chain.len(), 5);
        let r = check_simulation_word(&phi, &d.flat_morphism(), &d.f, 6).unwrap();
        assert!(r.holds());
    }

    #[test]
    fn u2_itself() {
        let phi = wm(2, &[&[0, 0], &[1, 1]]);
        let d = krohn_rhodes_word(&phi).unwrap();
        assert!(d.is_reset_only());
        assert_eq!(d.chain.len(), 1);
    }

    #[test]
    fn trivial_monoid_gives_empty_chain() {
        let phi = wm(1, &[&[0]]);
        let d = krohn_rhodes_word(&phi).unwrap();
        assert!(d.chain.is_empty());
        assert_eq!(d.f, vec![0]);
    }

    #[test]
    fn cyclic_group_gets_a_group_factor() {
        let phi = wm(3, &[&[1, 2, 0]]);
        let d = krohn_rhodes_word(&phi).unwrap();
        assert!(!d.is_reset_only());
        assert_eq!(d.levels.len(), 1);
        assert_eq!(d.levels[0].group_order, 3);
        assert!(matches!(d.levels[0].division, Division::Divides { .. }));
    }

    #[test]
    fn flip_flop_with_rotation() {
        // Z3 rotation plus a reset and a collapse
        let phi = wm(3, &[&[1, 2, 0], &[0, 0, 0], &[0, 0, 2]]);
        let d = krohn_rhodes_word(&phi).unwrap();
        let r = check_simulation_word(&phi, &d.flat_morphism(), &d.f, 5).unwrap();
        assert!(r.holds());
    }

    #[test]
    fn symmetric_group_on_three() {
        let phi = wm(3, &[&[1, 0, 2], &[1, 2, 0]]);
        let d = krohn_rhodes_word(&phi).unwrap();
        assert_eq!(d.levels[0].group_order, 6);
        assert!(check_simulation_word(&phi, &d.flat_morphism(), &d.f, 4).unwrap().holds());
    }

    fn morphism() -> impl Strategy<Value = WordMorphism> {
        (2usize..5).prop_flat_map(|n| {
            proptest::collection::vec(proptest::collection::vec(0u32..n as u32, n), 1..4)
                .prop_map(move |gens| {
                    let refs: Vec<&[u32]> = gens.iter().map(|g| g.as_slice()).collect();
                    wm(n, &refs)
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(60))]
        #[test]
        fn decomposition_simulates(phi in morphism()) {
            let d = krohn_rhodes_word(&phi).unwrap();
            let r = check_simulation_word(&phi, &d.flat_morphism(), &d.f, 3).unwrap();
            prop_assert!(r.holds());
            let m = phi.monoid(CLOSURE_LIMIT).unwrap();
            if m.is_aperiodic() {
                prop_assert!(d.is_reset_only());
            }
            for info in &d.levels {
                prop_assert!(!matches!(info.division, Division::NotFound));
            }
        }
    }
}
