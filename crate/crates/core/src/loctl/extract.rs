//! Trace formulas from cascades of two-state reset stages.
//!
//! For a stage `k` on `ℓ` let `R1`, `R2` be the event formulas saying the
//! event resets it to `0`, resp. `1`. Both are disjunctions over `a ∈ Σ_ℓ`
//! of `a` and a decision tree over the dependency bits before the event.
//! At an `ℓ`-event the bit before it is
//!
//! ```text
//! prev = (¬R1) S[ℓ] R2  ∨  (init ∧ ¬(true S[ℓ] (R1 ∨ R2)))
//! ```
//!
//! and the bit after it is `post = R2 ∨ (¬R1 ∧ prev)`. A dependency `d`
//! read at an event is `prev_d` in a local cascade (the event is on `ℓ_d`)
//! and `Y[ℓ_d] post_d ∨ (init_d ∧ ¬Y[ℓ_d] true)` in a global one. Only
//! global cascades produce yesterday.

use std::collections::{HashMap, HashSet};
use std::rc::Rc;

use super::u2::{BitExpr, U2Action, U2Cascade};
use super::{and, any_of, exists, ff, letter, not, or, since, t_not, t_or, t_and, tt, yesterday};
use super::{Ev, Formula, Tr, TraceFormula};
use crate::cascade::CascadeMode;
use crate::error::Result;

struct Extractor<'c> {
    c: &'c U2Cascade,
    resets: HashMap<(usize, bool), Formula>,
    prev: HashMap<usize, Formula>,
    post: HashMap<usize, Formula>,
    pre: HashMap<usize, Formula>,
}

impl<'c> Extractor<'c> {
    fn resets(&mut self, k: usize, to: bool) -> Formula {
        if let Some(f) = self.resets.get(&(k, to)) {
            return f.clone();
        }
        let c = self.c;
        let st = &c.stages()[k];
        let mut parts = Vec::new();
        for &a in c.alphabet().actions_of(st.location) {
            let rule = st.rules[a].as_ref().expect("validated rule");
            let cond = self.tree(&rule.deps, &rule.table, to);
            parts.push(and(&letter(a), &cond));
        }
        let f = any_of(parts);
        self.resets.insert((k, to), f.clone());
        f
    }

    /// Shannon expansion of "the table resets to `to`".
    fn tree(&mut self, deps: &[usize], table: &[U2Action], to: bool) -> Formula {
        let hit = |t: &[U2Action]| t.iter().map(|&x| x == U2Action::Reset(to)).collect::<Vec<_>>();
        if deps.is_empty() {
            return if table[0] == U2Action::Reset(to) { tt() } else { ff() };
        }
        let half = table.len() / 2;
        let (lo, hi) = table.split_at(half);
        if hit(lo) == hit(hi) {
            return self.tree(&deps[1..], lo, to);
        }
        let x = self.pre(deps[0]);
        let h = self.tree(&deps[1..], hi, to);
        let l = self.tree(&deps[1..], lo, to);
        match (&*h, &*l) {
            (Ev::True, Ev::False) => x,
            (Ev::False, Ev::True) => not(&x),
            (_, Ev::False) => and(&x, &h),
            (Ev::False, _) => and(&not(&x), &l),
            (Ev::True, _) => or(&x, &l),
            (_, Ev::True) => or(&not(&x), &h),
            _ => or(&and(&x, &h), &and(&not(&x), &l)),
        }
    }

    fn prev(&mut self, k: usize) -> Formula {
        if let Some(f) = self.prev.get(&k) {
            return f.clone();
        }
        let st = &self.c.stages()[k];
        let (l, init) = (st.location, st.initial);
        let r1 = self.resets(k, false);
        let r2 = self.resets(k, true);
        let mut f = since(l, &not(&r1), &r2);
        if init {
            f = or(&f, &not(&since(l, &tt(), &or(&r1, &r2))));
        }
        self.prev.insert(k, f.clone());
        f
    }

    fn post(&mut self, k: usize) -> Formula {
        if let Some(f) = self.post.get(&k) {
            return f.clone();
        }
        let r1 = self.resets(k, false);
        let r2 = self.resets(k, true);
        let prev = self.prev(k);
        let f = or(&r2, &and(&not(&r1), &prev));
        self.post.insert(k, f.clone());
        f
    }

    fn pre(&mut self, d: usize) -> Formula {
        if let Some(f) = self.pre.get(&d) {
            return f.clone();
        }
        let f = match self.c.mode() {
            CascadeMode::Local => self.prev(d),
            CascadeMode::Global => {
                let st = &self.c.stages()[d];
                let (l, init) = (st.location, st.initial);
                let post = self.post(d);
                let mut f = yesterday(l, &post);
                if init {
                    f = or(&f, &not(&yesterday(l, &tt())));
                }
                f
            }
        };
        self.pre.insert(d, f.clone());
        f
    }

    /// The trace formula "stage `k` ends in bit `v`".
    fn fin(&mut self, k: usize, v: bool) -> TraceFormula {
        let st = &self.c.stages()[k];
        let (l, init) = (st.location, st.initial);
        let none = t_not(&exists(l, &tt()));
        if v {
            let f = exists(l, &self.post(k));
            if init {
                t_or(&f, &none)
            } else {
                f
            }
        } else {
            let r1 = self.resets(k, false);
            let r2 = self.resets(k, true);
            let prev = self.prev(k);
            let f = exists(l, &or(&r1, &and(&not(&r2), &not(&prev))));
            if init {
                f
            } else {
                t_or(&none, &f)
            }
        }
    }

    fn accept(&mut self, e: &BitExpr) -> TraceFormula {
        match e {
            BitExpr::Const(true) => Rc::new(Tr::True),
            BitExpr::Const(false) => Rc::new(Tr::False),
            BitExpr::Bit(k) => self.fin(*k, true),
            BitExpr::Not(x) => match &**x {
                BitExpr::Bit(k) => self.fin(*k, false),
                x => t_not(&self.accept(x)),
            },
            BitExpr::And(x, y) => t_and(&self.accept(x), &self.accept(y)),
            BitExpr::Or(x, y) => t_or(&self.accept(x), &self.accept(y)),
        }
    }
}

/// A trace formula defining the language of `c` with accepting final
/// states `accept`.
pub fn cascade_to_formula(c: &U2Cascade, accept: &BitExpr) -> Result<TraceFormula> {
    c.validate()?;
    let mut x = Extractor {
        c,
        resets: HashMap::new(),
        prev: HashMap::new(),
        post: HashMap::new(),
        pre: HashMap::new(),
    };
    Ok(x.accept(accept))
}

/// Number of distinct nodes of a formula DAG.
pub fn formula_size(b: &TraceFormula) -> usize {
    fn ev(f: &Formula, seen: &mut HashSet<*const Ev>) -> usize {
        if !seen.insert(Rc::as_ptr(f)) {
            return 0;
        }
        1 + match &**f {
            Ev::True | Ev::False | Ev::Letter(_) => 0,
            Ev::Not(x) | Ev::Yesterday(_, x) => ev(x, seen),
            Ev::Or(x, y) | Ev::And(x, y) | Ev::Since(_, x, y) | Ev::WeakSince(_, x, y) => ev(x, seen) + ev(y, seen),
        }
    }
    fn tr(b: &TraceFormula, seen: &mut HashSet<*const Ev>) -> usize {
        1 + match &**b {
            Tr::True | Tr::False => 0,
            Tr::Exists(_, f) => ev(f, seen),
            Tr::Not(c) => tr(c, seen),
            Tr::Or(c, d) | Tr::And(c, d) => tr(c, seen) + tr(d, seen),
        }
    }
    tr(b, &mut HashSet::new())
}
