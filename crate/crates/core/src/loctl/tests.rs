use std::collections::BTreeSet;

use super::*;
use crate::cascade::CascadeMode;
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

fn ev(src: &str) -> Formula {
    parse_event(&ex(), src).unwrap()
}

fn tf(src: &str) -> TraceFormula {
    parse_trace(&ex(), src).unwrap()
}

#[test]
fn parses_since_and_exists() {
    let alph = ex();
    let f = ev("a S[p1] b");
    assert_eq!(*f, Ev::Since(0, letter(0), letter(1)));
    let b = tf("E[p1](Y[p1] a)");
    assert_eq!(*b, Tr::Exists(0, Rc::new(Ev::Yesterday(0, letter(0)))));
    assert_eq!(print_trace(&alph, &b), "E[p1] Y[p1] a");
}

#[test]
fn printing_is_a_normal_form() {
    let alph = ex();
    for src in [
        "a | b & c",
        "(a | b) & c",
        "a S[p1] b S[p1] a",
        "(a S[p1] b) S[p1] a",
        "!(a | b) SS[p2] Y[p2] !c",
        "a | (b | c)",
        "!!a & true | false",
        "Y[p1] (a S[p1] b)",
    ] {
        let f = ev(src);
        let once = print_event(&alph, &f);
        let g = parse_event(&alph, &once).unwrap();
        assert_eq!(f, g, "{src}");
        assert_eq!(print_event(&alph, &g), once);
    }
    for src in ["E[p1] a | !E[p2] (b S[p2] c)", "!(E[p1] a & E[p3] true)"] {
        let b = tf(src);
        let once = print_trace(&alph, &b);
        assert_eq!(parse_trace(&alph, &once).unwrap(), b);
    }
}

#[test]
fn syntax_errors_carry_positions() {
    let alph = ex();
    let err = |s: &str| match parse_event(&alph, s) {
        Err(Error::Parse { pos, .. }) => pos,
        other => panic!("{s}: {other:?}"),
    };
    assert_eq!(err("a & (b"), 6);
    assert_eq!(err("a S[q9] b"), 4);
    assert_eq!(err("zz"), 0);
    assert!(parse_trace(&alph, "a").is_err());
    assert!(parse_event(&alph, "E[p1] a").is_err());
}

#[test]
fn semantics_examples() {
    let alph = ex();
    let t = Trace::from_names(&alph, "ab").unwrap();
    let b = t.labels().iter().position(|&l| l == 1).unwrap();
    assert!(eval_event(&t, b, &ev("Y[p1] a")));
    assert!(eval_trace(&t, &tf("E[p2] b")));
    // p3 never shares an event with the a
    let t = Trace::from_names(&alph, "c").unwrap();
    assert!(!eval_event(&t, 0, &ev("false S[p1] c")));
    assert!(!eval_event(&t, 0, &ev("Y[p2] true")));
    let t = Trace::from_names(&alph, "aab").unwrap();
    let last = t.events_of(0).last().copied().unwrap();
    assert!(eval_event(&t, last, &ev("a S[p1] a")));
    assert!(!eval_event(&t, last, &ev("b S[p1] a")) || t.label(last) == 1);
}

#[test]
fn weak_since_desugars() {
    let alph = ex();
    let atoms = ["a", "b", "c", "true", "false"];
    for i in 0..3 {
        for x in atoms {
            for y in atoms {
                let p = alph.process_name(i);
                let strict_free = ev(&format!("{x} SS[{p}] {y}"));
                let sugar = desugar(&alph, &strict_free);
                assert!(!matches!(*sugar, Ev::WeakSince(..)));
                for t in enumerate_traces(&alph, 5) {
                    assert_eq!(eval_all(&t, &strict_free), eval_all(&t, &sugar), "{x} SS[{p}] {y} on {t:?}");
                }
            }
        }
    }
}

fn corpus() -> Vec<&'static str> {
    vec![
        "a",
        "!a",
        "a S[p1] b",
        "b S[p2] c",
        "(a | b) S[p1] b",
        "!(c S[p2] b) & b",
        "true S[p2] (b S[p1] a)",
    ]
}

fn readouts_hold(c: &CompiledCascade, f: &Formula, n: usize) {
    for t in enumerate_traces(&ex(), n) {
        let truth = eval_all(&t, f);
        assert_eq!(c.readout_mismatch(&t, &truth).unwrap(), None, "{t:?}");
    }
}

#[test]
fn local_readouts_match_semantics() {
    let alph = ex();
    for src in corpus() {
        let f = ev(src);
        let c = compile_local(&alph, &f).unwrap();
        c.cascade.validate().unwrap();
        readouts_hold(&c, &f, 5);
    }
}

#[test]
fn letters_and_negation_share_trackers() {
    let alph = ex();
    let c = compile_local(&alph, &ev("b")).unwrap();
    assert_eq!(c.cascade.len(), 2);
    let d = compile_local(&alph, &ev("!b")).unwrap();
    assert_eq!(d.cascade.len(), 2);
    assert!(compile_local(&alph, &ev("Y[p1] a")).is_err());
    assert!(compile_local(&alph, &ev("a SS[p1] b")).is_err());
}

#[test]
fn global_readouts_match_semantics() {
    let alph = ex();
    for src in ["Y[p1] a", "Y[p3] (b S[p2] b)", "Y[p1] Y[p2] c | a", "a SS[p2] c", "!Y[p2] true"] {
        let f = ev(src);
        let c = compile_global(&alph, &f).unwrap();
        readouts_hold(&c, &f, 5);
    }
    for src in corpus() {
        let f = ev(src);
        readouts_hold(&compile_global(&alph, &f).unwrap(), &f, 4);
    }
}

#[test]
fn acceptors_match_trace_semantics() {
    let alph = ex();
    let b = tf("E[p1] a");
    let acc = acceptor(&alph, &b, CascadeMode::Local).unwrap();
    assert!(acc.accepts(&Trace::from_names(&alph, "a").unwrap()).unwrap());
    assert!(!acc.accepts(&Trace::empty(&alph)).unwrap());
    for src in ["E[p1] a | !E[p3] true", "E[p2] (b S[p2] c) & !E[p1] b", "E[p3] Y[p3] c | E[p2] Y[p1] a"] {
        let b = tf(src);
        let mode = if trace_is_since_only(&b) { CascadeMode::Local } else { CascadeMode::Global };
        let acc = acceptor(&alph, &b, mode).unwrap();
        for t in enumerate_traces(&alph, 5) {
            assert_eq!(acc.accepts(&t).unwrap(), eval_trace(&t, &b), "{src} on {t:?}");
        }
    }
}

#[test]
fn sparse_cascades_agree_with_the_full_product() {
    let alph = ex();
    for (src, mode) in [
        ("a S[p1] b", CascadeMode::Local),
        ("b S[p2] c", CascadeMode::Local),
        ("Y[p1] a", CascadeMode::Global),
        ("Y[p3] b", CascadeMode::Global),
    ] {
        let c = match mode {
            CascadeMode::Local => compile_local(&alph, &ev(src)).unwrap(),
            CascadeMode::Global => compile_global(&alph, &ev(src)).unwrap(),
        };
        let full = c.cascade.to_cascade().unwrap();
        let back = U2Cascade::from_cascade(&full).unwrap();
        for t in enumerate_traces(&alph, 4) {
            let bits = c.cascade.run(&t).unwrap().finals;
            let states = full.stage_finals(&t).unwrap();
            assert_eq!(bits, states.iter().map(|&s| s == 1).collect::<Vec<_>>(), "{src} {t:?}");
            assert_eq!(back.run(&t).unwrap().finals, bits);
        }
    }
}

#[test]
fn single_stage_extraction_is_the_textbook_formula() {
    let alph = ex();
    let mut c = U2Cascade::new(&alph, CascadeMode::Local);
    let mut rules = vec![None; 3];
    rules[0] = Some(Rule::constant(U2Action::Reset(true)));
    rules[1] = Some(Rule::constant(U2Action::Reset(false)));
    c.push(U2Stage {
        location: 0,
        initial: false,
        rules,
        label: "u".into(),
    })
    .unwrap();
    let two = cascade_to_formula(&c, &BitExpr::Bit(0)).unwrap();
    assert_eq!(print_trace(&alph, &two), "E[p1] (a | !b & !b S[p1] a)");
    let one = cascade_to_formula(&c, &BitExpr::Bit(0).not()).unwrap();
    assert_eq!(print_trace(&alph, &one), "!E[p1] true | E[p1] (b | !a & !(!b S[p1] a))");
    let all = BitExpr::from_assignments(1, &BTreeSet::from([vec![false], vec![true]]));
    assert_eq!(*cascade_to_formula(&c, &all).unwrap(), Tr::True);
    for t in enumerate_traces(&alph, 6) {
        let fin = c.run(&t).unwrap().finals[0];
        assert_eq!(eval_trace(&t, &two), fin);
        assert_eq!(eval_trace(&t, &one), !fin);
    }
}

#[test]
fn compile_then_extract_preserves_languages() {
    let alph = ex();
    for (src, mode) in [
        ("E[p1] (a S[p1] b)", CascadeMode::Local),
        ("E[p2] ((a | c) S[p2] b) | E[p3] !c", CascadeMode::Local),
        ("E[p3] Y[p3] (b S[p2] c)", CascadeMode::Global),
        ("!E[p1] Y[p1] a", CascadeMode::Global),
    ] {
        let b = tf(src);
        let acc = acceptor(&alph, &b, mode).unwrap();
        let back = cascade_to_formula(&acc.cascade, &acc.accept).unwrap();
        if mode == CascadeMode::Local {
            assert!(trace_is_since_only(&back));
        }
        for t in enumerate_traces(&alph, 5) {
            assert_eq!(eval_trace(&t, &back), eval_trace(&t, &b), "{src} on {t:?}");
        }
    }
}

#[test]
fn swapping_stages_are_rejected() {
    let alph = ex();
    let swap = crate::automaton::AsyncAutomaton::new(
        &alph,
        vec![2, 1, 1],
        vec![vec![1, 0], vec![0, 0], vec![0]],
        &[0, 0, 0],
    )
    .unwrap();
    let c = crate::cascade::Cascade::new(CascadeMode::Local, vec![swap]).unwrap();
    assert!(matches!(U2Cascade::from_cascade(&c), Err(Error::Precondition(_))));
}
