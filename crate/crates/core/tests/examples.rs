use std::collections::BTreeSet;
use std::sync::Arc;

use trace_wreath::atm::{is_p_map, StateSpace};
use trace_wreath::fixtures::{self, sigma_ex};
use trace_wreath::loctl::{self, BitExpr, U2Cascade};
use trace_wreath::monoid::{Transformation, TransformationMonoid};
use trace_wreath::trace::enumerate_traces;
use trace_wreath::transducer::{global_transducer, local_transducer, ExtendedAlphabet};
use trace_wreath::{DistributedAlphabet, Trace};

fn tr(alph: &Arc<DistributedAlphabet>, w: &str) -> Trace {
    Trace::from_names(alph, w).unwrap()
}

#[test]
fn example_alphabet() {
    let alph = sigma_ex();
    let id = |n| alph.action_id(n).unwrap();
    assert_eq!(alph.loc(id("b")), &[0, 1]);
    assert_eq!(alph.loc(id("a")), &[0]);
    assert!(alph.independent(id("a"), id("c")));
    assert!(!alph.independent(id("a"), id("b")));
    assert!(!alph.independent(id("c"), id("c")));
    assert!(alph.communication_graph().is_acyclic());
    let tri = DistributedAlphabet::new(&["p", "q", "r"], &[("p", vec!["x", "z"]), ("q", vec!["x", "y"]), ("r", vec!["y", "z"])])
        .unwrap();
    assert!(!tri.communication_graph().is_acyclic());
    let one = DistributedAlphabet::new(&["p0"], &[("p0", vec!["x"])]).unwrap();
    assert!(one.communication_graph().edges().is_empty() && one.communication_graph().is_acyclic());
}

#[test]
fn traces_and_their_orders() {
    let alph = sigma_ex();
    let ac = tr(&alph, "ac");
    assert!(!ac.leq(0, 1) && !ac.leq(1, 0));
    let abc = tr(&alph, "abc");
    assert!(abc.lt(0, 1) && abc.lt(1, 2) && abc.lt(0, 2));
    assert!(tr(&alph, "ca").trace_equal(&ac).unwrap());
    assert!(!tr(&alph, "ab").trace_equal(&tr(&alph, "ba")).unwrap());
    assert_eq!(tr(&alph, "a").concat(&tr(&alph, "c")).unwrap(), tr(&alph, "ca"));
    assert_eq!(abc.concat(&Trace::empty(&alph)).unwrap(), abc);
    assert_eq!(abc.configurations().unwrap().len(), 4);
    assert_eq!(ac.configurations().unwrap().len(), 4);
    let ab = tr(&alph, "ab");
    assert_eq!(ab.step(&ab.empty_config(), alph.action_id("b").unwrap()), None);
}

#[test]
fn views_and_latest() {
    let alph = sigma_ex();
    let t = tr(&alph, "abc");
    let e = t.full_config();
    assert_eq!(t.view(&e, 2), e);
    assert_eq!(t.latest(&e, &[1, 2], 0).unwrap(), 1);
}

#[test]
fn enumeration_sizes() {
    let alph = sigma_ex();
    assert_eq!(enumerate_traces(&alph, 0).len(), 1);
    assert_eq!(enumerate_traces(&alph, 1).len(), 4);
    // nine words of length two, ac and ca coincide
    assert_eq!(enumerate_traces(&alph, 2).len(), 4 + 8);
}

#[test]
fn reset_monoid_relations() {
    let r1 = Transformation::new(vec![0, 0]).unwrap();
    let r2 = Transformation::new(vec![1, 1]).unwrap();
    assert_eq!(r1.then(&r2), r2);
    assert_eq!(r2.then(&r1), r1);
    let m = TransformationMonoid::closure(2, &[r1, r2], 100).unwrap();
    assert_eq!(m.len(), 3);
    assert_eq!(TransformationMonoid::closure(2, &[], 100).unwrap().len(), 1);
    let table = fixtures::table1();
    let m = table.monoid(100).unwrap();
    assert_eq!(m.len(), 5);
    let (ma, mb) = (table.image(0), table.image(1));
    let prod = ma.then(mb);
    assert!(m.contains(&prod) && &prod != ma && &prod != mb && !prod.is_constant());
}

#[test]
fn local_maps() {
    let space = StateSpace::new(vec![2, 2]).unwrap();
    let id = Transformation::identity(4);
    assert!(is_p_map(&space, &id, &[0]).holds());
    // p2 copies p1
    let copy = Transformation::from_fn(4, |g| {
        let g = g as usize;
        space.embed(g, &[1], space.component(g, 0) as usize) as u32
    });
    assert!(!is_p_map(&space, &copy, &[1]).holds());
    assert!(is_p_map(&space, &copy, &[0, 1]).holds());
}

#[test]
fn example_automaton() {
    let a = fixtures::u2_ex();
    let alph = a.alphabet().clone();
    assert_eq!(a.space().total(), 2);
    assert_eq!(a.run_final(&Trace::empty(&alph)), a.initial());
    let finals: BTreeSet<usize> = [1].into();
    assert!(a.accepts(&finals, &tr(&alph, "ab")));
    assert!(!a.accepts(&finals, &tr(&alph, "ba")));
    assert_eq!(a.run_word(&alph.parse_word("ac").unwrap()), a.run_word(&alph.parse_word("ca").unwrap()));
    assert_eq!(a.transition_atm(100).unwrap().monoid.len(), 3);
}

#[test]
fn example_transducers() {
    let a = fixtures::u2_ex();
    let alph = a.alphabet().clone();
    let local = ExtendedAlphabet::local_of(&a).unwrap();
    assert_eq!(local.annotations(alph.action_id("b").unwrap()), 2);
    let global = ExtendedAlphabet::global_of(&a).unwrap();
    assert_eq!(global.annotations(alph.action_id("a").unwrap()), 2);
    let chi = local_transducer(&a, &local, &tr(&alph, "ab")).unwrap();
    let names: Vec<&str> = chi.labels().iter().map(|&l| local.alphabet().action_name(l)).collect();
    assert_eq!(names, ["a@{p1:0}", "b@{p1:0,p2:0}"]);
    let theta = global_transducer(&a, &global, &tr(&alph, "abc")).unwrap();
    let c = *theta.labels().last().unwrap();
    assert_eq!(global.split(c).1, 1);
}

#[test]
fn one_stage_formula_matches_its_automaton() {
    let alph = sigma_ex();
    let b = loctl::parse_trace(&alph, "E[p1] (b | !a & !a S[p1] b)").unwrap();
    let a = fixtures::u2_ex();
    let finals: BTreeSet<usize> = [1].into();
    for t in enumerate_traces(&alph, 6) {
        assert_eq!(loctl::eval_trace(&t, &b), a.accepts(&finals, &t), "{t:?}");
    }
    let acc = loctl::acceptor(&alph, &b, trace_wreath::cascade::CascadeMode::Local).unwrap();
    let full = acc.cascade.to_cascade().unwrap();
    let back = U2Cascade::from_cascade(&full).unwrap();
    assert_eq!(back.len(), acc.cascade.len());
    let every = BitExpr::Const(true);
    assert_eq!(*loctl::cascade_to_formula(&back, &every).unwrap(), *loctl::t_true());
}
