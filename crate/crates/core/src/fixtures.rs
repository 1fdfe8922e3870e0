//! Small alphabets, automata, morphisms and formulas used by the checks.

use std::sync::Arc;

use crate::alphabet::{ActionId, DistributedAlphabet};
use crate::atm::{AsyncMorphism, StateSpace, WreathAtm, WreathElem};
use crate::automaton::AsyncAutomaton;
use crate::cascade::{wreath_elem, WreathMorphism};
use crate::decompose::TraceMorphism;
use crate::monoid::{Transformation, WordMorphism};
use crate::transducer::ExtendedAlphabet;

fn alphabet(procs: &[&str], actions: &[(&str, Vec<&str>)]) -> Arc<DistributedAlphabet> {
    Arc::new(DistributedAlphabet::new(procs, actions).expect("fixture alphabet"))
}

/// `p1:{a,b}`, `p2:{b,c}`, `p3:{c}`.
pub fn sigma_ex() -> Arc<DistributedAlphabet> {
    alphabet(
        &["p1", "p2", "p3"],
        &[("p1", vec!["a", "b"]), ("p2", vec!["b", "c"]), ("p3", vec!["c"])],
    )
}

/// Two processes sharing one letter: `p1:{a,b}`, `p2:{b,c}`.
pub fn two_process() -> Arc<DistributedAlphabet> {
    alphabet(&["p1", "p2"], &[("p1", vec!["a", "b"]), ("p2", vec!["b", "c"])])
}

/// A path of four processes: `p1:{a,x}`, `p2:{x,y}`, `p3:{y,z}`, `p4:{z,d}`.
pub fn four_process() -> Arc<DistributedAlphabet> {
    alphabet(
        &["p1", "p2", "p3", "p4"],
        &[
            ("p1", vec!["a", "x"]),
            ("p2", vec!["x", "y"]),
            ("p3", vec!["y", "z"]),
            ("p4", vec!["z", "d"]),
        ],
    )
}

fn tr(v: &[u32]) -> Transformation {
    Transformation::new(v.to_vec()).expect("fixture transformation")
}

/// `U2` on `p1` over `Σ_ex`: `a` resets to state 0, `b` to state 1.
pub fn u2_ex() -> AsyncAutomaton {
    AsyncAutomaton::new(&sigma_ex(), vec![2, 1, 1], vec![vec![0, 0], vec![1, 1], vec![0]], &[0, 0, 0])
        .expect("fixture automaton")
}

/// `p1` counts `a` mod 3, `b` copies it to `p2`, `c` copies `p2` to `p3`.
pub fn counter_ex() -> AsyncAutomaton {
    AsyncAutomaton::from_rule(&sigma_ex(), vec![3, 3, 3], &[0, 0, 0], |a, s| match a {
        0 => vec![(s[0] + 1) % 3],
        _ => vec![s[0], s[0]],
    })
    .expect("fixture automaton")
}

/// Parity of `a` on `p1`, passed along the path by `x`, `y`, `z` and
/// cleared on `p4` by `d`.
pub fn relay_four() -> AsyncAutomaton {
    let alph = four_process();
    let (flip, clear) = (alph.action_id("a").unwrap(), alph.action_id("d").unwrap());
    AsyncAutomaton::from_rule(&alph, vec![2, 2, 2, 2], &[0, 0, 0, 0], |a, s| {
        if a == flip {
            vec![1 - s[0]]
        } else if a == clear {
            vec![0]
        } else {
            vec![s[0], s[0]]
        }
    })
    .expect("fixture automaton")
}

/// Over the local extension of `a1` on `Σ_ex`: `p2` flips on `b` when `p1`
/// is in 1, `p3` copies `p2` on `c`.
pub fn second_local(a1: &AsyncAutomaton) -> AsyncAutomaton {
    let ext = ExtendedAlphabet::local_of(a1).expect("extension");
    let e = ext.clone();
    let a1 = a1.clone();
    AsyncAutomaton::from_rule(ext.alphabet(), vec![1, 2, 2], &[0, 0, 0], move |l, q| {
        let (a, sa) = e.split(l);
        let s = a1.space().joint_decode(a1.alphabet().loc(a), sa);
        match a {
            1 if s[0] == 1 => vec![q[0], 1 - q[1]],
            2 => vec![q[0], q[0]],
            _ => q.to_vec(),
        }
    })
    .expect("fixture automaton")
}

/// Over the global extension of `a1` on `Σ_ex`: on `c`, `p3` records
/// whether the annotation has `p1` in a state other than 0.
pub fn second_global(a1: &AsyncAutomaton) -> AsyncAutomaton {
    let ext = ExtendedAlphabet::global_of(a1).expect("extension");
    let e = ext.clone();
    let space = a1.space().clone();
    AsyncAutomaton::from_rule(ext.alphabet(), vec![1, 1, 2], &[0, 0, 0], move |l, q| {
        let (a, s) = e.split(l);
        if a == 2 {
            vec![q[0], (space.component(s, 0) != 0) as u32]
        } else {
            q.to_vec()
        }
    })
    .expect("fixture automaton")
}

/// `U2[p1] ≀ U2[p2]`-shaped morphism on the two-process alphabet: `a`
/// resets `p1` to 0; `b` resets `p1` to 1 and `p2` to `p1`'s old state;
/// `c` resets `p2` to 0.
pub fn eta_two() -> WreathMorphism {
    let w = WreathAtm::new(StateSpace::new(vec![2, 1]).unwrap(), StateSpace::new(vec![1, 2]).unwrap()).unwrap();
    let a = wreath_elem(&w, &[0], &[0, 0], |_| vec![0]).unwrap();
    let b = wreath_elem(&w, &[0, 1], &[1, 1], |s| vec![s as u32; 2]).unwrap();
    let c = wreath_elem(&w, &[1], &[0], |_| vec![0, 0]).unwrap();
    WreathMorphism::new(&two_process(), w, vec![a, b, c]).unwrap()
}

/// `Z2[p1] ≀ Z3[p2]`-shaped: `a` swaps `p1`, `b` rotates `p2` when `p1`
/// is in 1, `c` rotates `p2` backwards.
pub fn eta_group() -> WreathMorphism {
    let w = WreathAtm::new(StateSpace::new(vec![2, 1]).unwrap(), StateSpace::new(vec![1, 3]).unwrap()).unwrap();
    let a = wreath_elem(&w, &[0], &[1, 0], |_| vec![0]).unwrap();
    let b = wreath_elem(&w, &[0, 1], &[0, 1], |s| if s == 1 { vec![1, 2, 0] } else { vec![0, 1, 2] }).unwrap();
    let c = wreath_elem(&w, &[1], &[0], |_| vec![2, 0, 1]).unwrap();
    WreathMorphism::new(&two_process(), w, vec![a, b, c]).unwrap()
}

/// A three-process wreath morphism on `Σ_ex`: the left factor is `U2` on
/// `p1` with a record on `p2`, the right one a bit on `p3`. Each `b` makes
/// `p2` record the state `p1` had, and `c` copies that record into `p3`.
pub fn eta_ex() -> WreathMorphism {
    let w = WreathAtm::new(StateSpace::new(vec![2, 2, 1]).unwrap(), StateSpace::new(vec![1, 1, 2]).unwrap()).unwrap();
    let a = wreath_elem(&w, &[0], &[0, 0], |_| vec![0]).unwrap();
    // b: p1 to 1, p2 records p1's old state; the right factor is untouched
    let b = wreath_elem(&w, &[0, 1], &[2, 2, 3, 3], |_| vec![0]).unwrap();
    let c = wreath_elem(&w, &[1, 2], &[0, 1], |s| vec![s as u32; 2]).unwrap();
    WreathMorphism::new(&sigma_ex(), w, vec![a, b, c]).unwrap()
}

/// Pairs `(A, ψ, q_in, finals)` where `ψ` reads the local extension of `A`.
pub struct WppFixture {
    pub name: &'static str,
    pub automaton: AsyncAutomaton,
    pub psi: AsyncMorphism,
    pub q_in: usize,
    pub finals: std::collections::BTreeSet<usize>,
}

fn psi_over(
    a: &AsyncAutomaton,
    sizes: Vec<usize>,
    mut kernel: impl FnMut(&ExtendedAlphabet, ActionId, &[u32], &[u32]) -> Vec<u32>,
) -> AsyncMorphism {
    let ext = ExtendedAlphabet::local_of(a).unwrap();
    let space = StateSpace::new(sizes).unwrap();
    let kernels = (0..ext.alphabet().num_actions())
        .map(|l| {
            let (base, sa) = ext.split(l);
            let ps = ext.alphabet().loc(l);
            let s = a.space().joint_decode(ps, sa);
            let sub = space.restrict(ps);
            (0..sub.total())
                .map(|j| sub.encode(&kernel(&ext, base, &s, &sub.decode(j))) as u32)
                .collect()
        })
        .collect();
    AsyncMorphism::from_kernels(ext.alphabet(), space, kernels).unwrap()
}

pub fn wpp_fixtures() -> Vec<WppFixture> {
    let u2 = u2_ex();
    let ctr = counter_ex();
    // a `b` seen while p1 is in 1 sets p1's bit
    let psi1 = psi_over(&u2, vec![2, 1, 1], |_, a, s, q| if a == 1 && s[0] == 1 { vec![1, q[1]] } else { q.to_vec() });
    // parity of `c` events whose p2 annotation is 2
    let psi2 = psi_over(&ctr, vec![1, 1, 2], |_, a, s, q| if a == 2 && s[0] == 2 { vec![q[0], 1 - q[1]] } else { q.to_vec() });
    // p2 remembers the p1 annotation of the last b; c copies it to p3
    let psi3 = psi_over(&u2, vec![1, 2, 2], |_, a, s, q| match a {
        1 => vec![q[0], s[0]],
        2 => vec![q[0], q[0]],
        _ => q.to_vec(),
    });
    vec![
        WppFixture {
            name: "U2/b-after-b",
            automaton: u2.clone(),
            psi: psi1,
            q_in: 0,
            finals: [1].into(),
        },
        WppFixture {
            name: "counter/odd-c",
            automaton: ctr,
            psi: psi2,
            q_in: 0,
            finals: [StateSpace::new(vec![1, 1, 2]).unwrap().encode(&[0, 0, 1])].into(),
        },
        WppFixture {
            name: "U2/relay",
            automaton: u2,
            psi: psi3,
            q_in: 0,
            finals: {
                let sp = StateSpace::new(vec![1, 2, 2]).unwrap();
                [sp.encode(&[0, 0, 1]), sp.encode(&[0, 1, 1])].into()
            },
        },
    ]
}

/// Every element of `U2` on the left and right processes as generators.
pub fn u2_wreath_u2() -> (WreathAtm, Vec<WreathElem>) {
    let w = WreathAtm::new(StateSpace::new(vec![2, 1]).unwrap(), StateSpace::new(vec![1, 2]).unwrap()).unwrap();
    let u2 = [tr(&[0, 1]), tr(&[0, 0]), tr(&[1, 1])];
    let mut gens = Vec::new();
    for m in &u2 {
        gens.push(WreathElem {
            m: m.clone(),
            f: vec![tr(&[0, 1]); 2],
        });
    }
    for f0 in &u2 {
        for f1 in &u2 {
            gens.push(WreathElem {
                m: tr(&[0, 1]),
                f: vec![f0.clone(), f1.clone()],
            });
        }
    }
    (w, gens)
}

/// Generators of `Z2 ≀ Z3`.
pub fn z2_wreath_z3() -> (WreathAtm, Vec<WreathElem>) {
    let eta = eta_group();
    (eta.wreath().clone(), eta.images().to_vec())
}

/// `a` resets to 0, `b` to 1, `c` does nothing.
pub fn kr_u2_ex() -> TraceMorphism {
    TraceMorphism::new(&sigma_ex(), 2, vec![tr(&[0, 0]), tr(&[1, 1]), tr(&[0, 1])]).unwrap()
}

/// On the two-process alphabet with states `(u, v)`: `a` adds 1 to `u`
/// mod 3, `b` copies `u` into `v`, `c` clears `v`.
pub fn kr_mod3_two() -> TraceMorphism {
    let f = |g: &dyn Fn(u32, u32) -> (u32, u32)| {
        Transformation::from_fn(9, |x| {
            let (u, v) = g(x / 3, x % 3);
            u * 3 + v
        })
    };
    let a = f(&|u, v| ((u + 1) % 3, v));
    let b = f(&|u, _| (u, u));
    let c = f(&|u, _| (u, 0));
    TraceMorphism::new(&two_process(), 9, vec![a, b, c]).unwrap()
}

/// The transition morphism of `relay_four` (an aperiodic-by-Z2 mix on a
/// path of four processes).
pub fn kr_relay_four() -> TraceMorphism {
    let a = relay_four();
    TraceMorphism::new(a.alphabet(), a.space().total(), a.morphism().images().to_vec()).unwrap()
}

/// On `Σ_ex`: `p2` and `p3` form a two-state flip-flop driven by `b`
/// (set) and `c` (clear), observed through the pair of local bits.
pub fn kr_flipflop_ex() -> TraceMorphism {
    let a = AsyncAutomaton::from_rule(&sigma_ex(), vec![1, 2, 2], &[0, 0, 0], |a, s| match a {
        0 => s.to_vec(),
        1 => vec![0, 1],
        _ => vec![0, s[1]],
    })
    .unwrap();
    TraceMorphism::new(a.alphabet(), a.space().total(), a.morphism().images().to_vec()).unwrap()
}

/// Five states `q1 qa qb qab qt`: which of `a`, `b` have been read, with
/// a sink once either repeats.
pub fn table1() -> WordMorphism {
    WordMorphism::new(5, vec!["a".into(), "b".into()], vec![tr(&[1, 4, 3, 4, 4]), tr(&[2, 3, 4, 4, 4])]).unwrap()
}

pub fn word_u2() -> WordMorphism {
    WordMorphism::new(2, vec!["r0".into(), "r1".into()], vec![tr(&[0, 0]), tr(&[1, 1])]).unwrap()
}

/// Event formulas over `Σ_ex`.
pub const EVENT_CORPUS: [&str; 20] = [
    "a",
    "!b",
    "a | c",
    "b & true",
    "a S[p1] b",
    "b S[p2] c",
    "(a | b) S[p1] b",
    "!(c S[p2] b) & b",
    "true S[p2] (b S[p1] a)",
    "false S[p3] c",
    "c S[p3] true",
    "!a S[p1] (b & !(true S[p1] a))",
    "Y[p1] a",
    "Y[p3] (b S[p2] b)",
    "Y[p1] Y[p2] c | a",
    "!Y[p2] true",
    "a SS[p1] b",
    "c SS[p2] (b | false)",
    "Y[p2] (a S[p1] a) & c",
    "!(Y[p1] b) S[p1] Y[p3] c",
];

/// Trace formulas over `Σ_ex`.
pub const TRACE_CORPUS: [&str; 20] = [
    "E[p1] a",
    "!E[p3] true",
    "E[p2] c | E[p1] b",
    "E[p1] b & !E[p3] c",
    "E[p1] (a S[p1] b)",
    "E[p2] (b S[p2] c)",
    "E[p3] (true S[p3] (c & !(b S[p2] b)))",
    "!E[p2] ((a | c) S[p2] b)",
    "E[p1] (!a S[p1] b) | E[p3] !c",
    "true & !false",
    "E[p2] (c S[p2] true) & E[p1] true",
    "E[p1] !(b S[p1] a) | !E[p2] b",
    "E[p1] Y[p1] a",
    "E[p3] Y[p3] (b S[p2] b)",
    "E[p2] Y[p1] a | E[p3] Y[p2] b",
    "!E[p1] Y[p2] true",
    "E[p2] (a SS[p1] b)",
    "E[p3] (c SS[p2] b)",
    "E[p1] (Y[p3] c S[p1] true)",
    "!(E[p2] Y[p3] c & E[p1] a)",
];
