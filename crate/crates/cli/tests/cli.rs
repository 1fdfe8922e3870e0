use std::process::{Command, Output};

fn data(name: &str) -> String {
    format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trace-wreath"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn ok(args: &[&str]) -> String {
    let o = run(args);
    assert_eq!(o.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    stdout(&o)
}

#[test]
fn normalize_sorts_independent_letters() {
    assert_eq!(ok(&["trace", "normalize", r#"{"word":"ca"}"#]), "ac\n");
    assert_eq!(ok(&["trace", "normalize", r#"{"events":[{"label":"c"},{"label":"a"},{"label":"b"}]}"#]), "acb\n");
    // a reversed order reverses the choice among independent letters
    assert_eq!(ok(&["trace", "normalize", "ac", "--order", "c,b,a"]), "ca\n");
}

#[test]
fn alphabet_report() {
    let out = ok(&["alphabet", "check", &data("sigma_ex.json")]);
    assert!(out.contains("acyclic: true"));
    assert!(out.contains("independent: (a,c)"));
    assert!(out.contains("edges: p1-p2 p2-p3"));
    let out = ok(&["alphabet", "check", &data("triangle.json")]);
    assert!(out.contains("acyclic: false"));
    let dot = ok(&["alphabet", "check", &data("sigma_ex.json"), "--dot"]);
    assert!(dot.contains("\"p1\" -- \"p2\"") && dot.contains("\"p2\" -- \"p3\""));
    assert_eq!(dot.matches("--").count(), 2);
}

#[test]
fn trace_dot_shapes() {
    assert_eq!(ok(&["trace", "dot", r#"{"word":""}"#]), "digraph trace {\n  rankdir=LR;\n}\n");
    let dot = ok(&["trace", "dot", "abc"]);
    assert_eq!(dot.matches(" [label=").count(), 3);
    assert_eq!(dot.matches(" -> ").count(), 2);
}

#[test]
fn enumeration_counts() {
    let out = ok(&["trace", "enumerate", "--bound", "2"]);
    // ac and ca are one trace
    assert_eq!(out.lines().count(), 1 + 3 + 8);
}

#[test]
fn weak_since_rewriting_is_equivalent() {
    let out = ok(&["logic", "check-equiv", &data("weak.ltl"), &data("weak_sugar.ltl"), "--bound", "5"]);
    assert!(out.starts_with("equivalent ("), "{out}");
}

#[test]
fn counterexamples_can_be_replayed() {
    let o = run(&["logic", "check-equiv", "E[p1] a", "E[p1] b", "--bound", "3"]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    let cex = out.trim().strip_prefix("not equivalent: counterexample ").unwrap();
    let a = ok(&["logic", "eval", "E[p1] a", cex]);
    let b = ok(&["logic", "eval", "E[p1] b", cex]);
    assert_ne!(a, b);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["trace", "frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["trace", "normalize", "xyz"]).status.code(), Some(2));
    assert_eq!(run(&["logic", "compile", "Y[p1] a", "--mode", "local"]).status.code(), Some(2));
    let o = run(&["decompose", &data("triangle.json"), &data("triangle_id.json")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not acyclic"));
}

#[test]
fn automata_and_cascades() {
    let out = ok(&["automaton", "run", &data("u2_p1.json"), "ab"]);
    assert!(out.ends_with("final {p1:2,p2:0,p3:0}\n"), "{out}");
    assert!(ok(&["automaton", "accepts", &data("u2_p1.json"), "ab"]).starts_with("accepted"));
    assert!(ok(&["automaton", "accepts", &data("u2_p1.json"), "ba"]).starts_with("rejected"));
    assert!(ok(&["cascade", "accepts", &data("cascade.json"), "bb"]).starts_with("accepted"));
    assert!(ok(&["cascade", "accepts", &data("cascade.json"), "ab"]).starts_with("rejected"));
    let flat: serde_json::Value = serde_json::from_str(&ok(&["cascade", "flatten", &data("cascade.json")])).unwrap();
    assert_eq!(flat["states"]["p1"].as_array().unwrap().len(), 2);
    assert_eq!(flat["states"]["p2"].as_array().unwrap().len(), 2);
}

#[test]
fn transducers_annotate_events() {
    assert_eq!(
        ok(&["transduce", "local", &data("u2_p1.json"), "abc"]),
        "a@{p1:1} b@{p1:1,p2:0} c@{p2:0,p3:0}\n"
    );
    assert_eq!(ok(&["transduce", "global", &data("u2_p1.json"), "abc"]), "a@[1,0,0] b@[1,0,0] c@[2,0,0]\n");
    let demo = ok(&["gossip", "demo", "abc"]);
    assert!(demo.contains("p3 clock [2, 2, 1]"));
}

#[test]
fn decompositions_verify() {
    let out = ok(&["decompose", &data("sigma_ex.json"), &data("mod3_two.json")]);
    assert!(out.contains("G3[p1]") && out.contains("simulation holds"));
    let out = ok(&["monoid", "kr", &data("table.json")]);
    assert!(out.starts_with("chain: U2 U2 U2 U2 U2\n") && out.contains("simulation holds"));
    assert!(ok(&["monoid", "closure", &data("table.json")]).starts_with("degree 5 elements 5"));
    // the identity morphism does not simulate the table
    let psi = r#"{"degree": 5, "generators": {"a": [0, 1, 2, 3, 4], "b": [0, 1, 2, 3, 4]}}"#;
    let o = run(&["monoid", "check-sim", &data("table.json"), psi, "[0, 1, 2, 3, 4]"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn logic_compile_and_extract() {
    let out = ok(&["logic", "compile", &data("since.ltl")]);
    assert!(out.contains("accept: occ[p1] & (a S[p1] b)@p1"), "{out}");
    let out = ok(&["logic", "extract", &data("since.ltl"), "--bound", "4"]);
    assert!(out.contains("equivalent to the input"));
    let out = ok(&["logic", "extract", "E[p3] Y[p3] c", "--mode", "global", "--bound", "4"]);
    assert!(out.contains("equivalent to the input"));
}

#[test]
fn output_is_deterministic() {
    let args = ["logic", "compile", "E[p2] (b S[p2] c) | !E[p1] a", "--dot"];
    assert_eq!(ok(&args), ok(&args));
}

#[test]
fn verify_all_small_bound() {
    let out = ok(&["verify", "all", "--bound", "3"]);
    assert_eq!(out.lines().filter(|l| l.starts_with("[PASS]")).count(), 12, "{out}");
}
