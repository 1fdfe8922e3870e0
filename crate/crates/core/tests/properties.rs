use std::sync::Arc;

use proptest::prelude::*;
use trace_wreath::automaton::AsyncAutomaton;
use trace_wreath::cascade::CascadeMode;
use trace_wreath::fixtures;
use trace_wreath::gossip::{gossip_latest, GossipAutomaton, Knowledge};
use trace_wreath::loctl::{self, Formula, TraceFormula};
use trace_wreath::monoid::{check_simulation_word, krohn_rhodes_word, Transformation, WordMorphism};
use trace_wreath::trace::canonical_word;
use trace_wreath::transducer::{global_transducer, ExtendedAlphabet};
use trace_wreath::{DistributedAlphabet, Trace};

fn ex() -> Arc<DistributedAlphabet> {
    fixtures::sigma_ex()
}

fn word(max: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0..3usize, 0..=max)
}

/// A random automaton on the example alphabet with 2 or 3 states a process.
fn automaton() -> impl Strategy<Value = AsyncAutomaton> {
    prop::collection::vec(2..=3usize, 3).prop_flat_map(|sizes| {
        let alph = ex();
        let tables: Vec<BoxedStrategy<Vec<u32>>> = (0..alph.num_actions())
            .map(|a| {
                let n: usize = alph.loc(a).iter().map(|&i| sizes[i]).product();
                prop::collection::vec(0..n as u32, n).boxed()
            })
            .collect();
        (Just(sizes), tables).prop_map(move |(sizes, tables)| {
            AsyncAutomaton::new(&alph, sizes, tables, &[0, 0, 0]).unwrap()
        })
    })
}

fn event_formula(since_only: bool) -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![Just(loctl::tt()), (0..3usize).prop_map(loctl::letter)];
    leaf.prop_recursive(3, 12, 2, move |inner| {
        let mut ops = vec![
            inner.clone().prop_map(|f| loctl::not(&f)).boxed(),
            (inner.clone(), inner.clone()).prop_map(|(f, g)| loctl::or(&f, &g)).boxed(),
            (inner.clone(), inner.clone()).prop_map(|(f, g)| loctl::and(&f, &g)).boxed(),
            (0..3usize, inner.clone(), inner.clone()).prop_map(|(i, f, g)| loctl::since(i, &f, &g)).boxed(),
        ];
        if !since_only {
            ops.push((0..3usize, inner.clone()).prop_map(|(i, f)| loctl::yesterday(i, &f)).boxed());
        }
        prop::strategy::Union::new(ops)
    })
}

fn trace_formula(since_only: bool) -> impl Strategy<Value = TraceFormula> {
    let leaf = (0..3usize, event_formula(since_only)).prop_map(|(i, f)| loctl::exists(i, &f));
    leaf.prop_recursive(2, 4, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|b| loctl::t_not(&b)),
            (inner.clone(), inner.clone()).prop_map(|(b, c)| loctl::t_or(&b, &c)),
            (inner.clone(), inner).prop_map(|(b, c)| loctl::t_and(&b, &c)),
        ]
    })
}

proptest! {
    #[test]
    fn swapping_independent_neighbours_keeps_the_trace(w in word(8), k in 0usize..8) {
        let alph = ex();
        let t = Trace::from_word(&alph, &w).unwrap();
        if k + 1 < w.len() && alph.independent(w[k], w[k + 1]) {
            let mut v = w.clone();
            v.swap(k, k + 1);
            prop_assert!(t.trace_equal(&Trace::from_word(&alph, &v).unwrap()).unwrap());
        }
        prop_assert_eq!(canonical_word(&alph, t.labels()), t.labels().to_vec());
    }

    #[test]
    fn concatenation_is_a_morphism(u in word(5), v in word(5)) {
        let alph = ex();
        let tu = Trace::from_word(&alph, &u).unwrap();
        let tv = Trace::from_word(&alph, &v).unwrap();
        let uv: Vec<usize> = u.iter().chain(&v).copied().collect();
        prop_assert_eq!(tu.concat(&tv).unwrap(), Trace::from_word(&alph, &uv).unwrap());
    }

    #[test]
    fn configurations_form_the_prefix_lattice(w in word(6)) {
        let t = Trace::from_word(&ex(), &w).unwrap();
        let cs = t.configurations().unwrap();
        for c in &cs {
            prop_assert!(t.is_configuration(c));
            for e in t.enabled(c) {
                let mut d = c.clone();
                d.insert(e);
                prop_assert!(cs.contains(&d));
            }
        }
    }

    #[test]
    fn runs_ignore_the_linearization(a in automaton(), w in word(6)) {
        let t = Trace::from_word(a.alphabet(), &w).unwrap();
        prop_assert_eq!(a.run_word(&w), a.run_final(&t));
        let phi = a.morphism().evaluate(&t);
        prop_assert_eq!(phi.apply(a.initial() as u32) as usize, a.run_final(&t));
    }

    #[test]
    fn gossip_realizes_the_global_transducer(a in automaton(), w in word(6)) {
        let t = Trace::from_word(a.alphabet(), &w).unwrap();
        let g = GossipAutomaton::new(&a);
        let ext = ExtendedAlphabet::global_of(&a).unwrap();
        prop_assert_eq!(g.realize_global(&ext, &t).unwrap(), global_transducer(&a, &ext, &t).unwrap());
        let c = t.full_config();
        let know = g.run_config(&t, &c);
        let parts: Vec<(usize, &Knowledge)> = know.iter().enumerate().collect();
        for j in 0..3 {
            prop_assert_eq!(gossip_latest(&parts, j), t.latest(&c, &[0, 1, 2], j).unwrap());
        }
    }

    #[test]
    fn local_compilation_reads_out_the_formula(f in event_formula(true), w in word(6)) {
        let alph = ex();
        let t = Trace::from_word(&alph, &w).unwrap();
        let c = loctl::compile_local(&alph, &f).unwrap();
        prop_assert_eq!(c.readout_mismatch(&t, &loctl::eval_all(&t, &f)).unwrap(), None);
    }

    #[test]
    fn global_compilation_reads_out_the_formula(f in event_formula(false), w in word(6)) {
        let alph = ex();
        let t = Trace::from_word(&alph, &w).unwrap();
        let c = loctl::compile_global(&alph, &f).unwrap();
        prop_assert_eq!(c.readout_mismatch(&t, &loctl::eval_all(&t, &f)).unwrap(), None);
    }

    #[test]
    fn printing_then_parsing_is_the_identity(b in trace_formula(false)) {
        let alph = ex();
        let text = loctl::print_trace(&alph, &b);
        prop_assert_eq!(loctl::parse_trace(&alph, &text).unwrap(), b);
    }

    #[test]
    fn extraction_preserves_the_language(
        b in trace_formula(true),
        g in trace_formula(false),
        ws in prop::collection::vec(word(6), 8),
    ) {
        let alph = ex();
        for (b, mode) in [(b, CascadeMode::Local), (g, CascadeMode::Global)] {
            let acc = loctl::acceptor(&alph, &b, mode).unwrap();
            let back = loctl::cascade_to_formula(&acc.cascade, &acc.accept).unwrap();
            if mode == CascadeMode::Local {
                prop_assert!(loctl::trace_is_since_only(&back));
            }
            for w in &ws {
                let t = Trace::from_word(&alph, w).unwrap();
                let truth = loctl::eval_trace(&t, &b);
                prop_assert_eq!(acc.accepts(&t).unwrap(), truth);
                prop_assert_eq!(loctl::eval_trace(&t, &back), truth);
            }
        }
    }

    #[test]
    fn word_decompositions_simulate(
        tables in (2..=4usize).prop_flat_map(|n| prop::collection::vec(prop::collection::vec(0..n as u32, n), 1..=3)),
    ) {
        let n = tables[0].len();
        let letters = (0..tables.len()).map(|k| format!("x{k}")).collect();
        let images = tables.into_iter().map(|t| Transformation::new(t).unwrap()).collect();
        let phi = WordMorphism::new(n, letters, images).unwrap();
        let d = krohn_rhodes_word(&phi).unwrap();
        let r = check_simulation_word(&phi, &d.flat_morphism(), &d.f, 4).unwrap();
        prop_assert!(r.holds(), "{:?}", r);
        if phi.monoid(10_000).unwrap().is_aperiodic() {
            prop_assert!(d.is_reset_only());
        }
    }
}
