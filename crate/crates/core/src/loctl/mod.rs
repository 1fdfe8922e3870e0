//! Local past temporal logic over traces.
//!
//! Event formulas are evaluated at events:
//!
//! * `a` holds at `e` when `e` is labelled `a`;
//! * `Y[i] α` holds when `e_i`, the last `i`-event strictly below `e`,
//!   exists and satisfies `α`;
//! * `α S[i] β` holds when `e` is an `i`-event and some earlier `i`-event
//!   `f` satisfies `β` with every `i`-event strictly between them
//!   satisfying `α`;
//! * `α SS[i] β` is the non-strict variant, quantifying over `i`-events
//!   `f ≤ e` and `f < g ≤ e`, and with no requirement that `e ∈ E_i`.
//!
//! Trace formulas are boolean combinations of `E[i] α`, which holds when
//! the trace has a last `i`-event and it satisfies `α`.
//!
//! Formulas are shared DAGs (`Rc`); evaluation memoises by node.

mod compile;
mod extract;
mod u2;

pub use compile::{acceptor, compile_global, compile_local, Acceptor, CompiledCascade};
pub use extract::{cascade_to_formula, formula_size};
pub use u2::{BitExpr, Rule, U2Action, U2Cascade, U2Stage};

use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;
use std::sync::Arc;

use crate::alphabet::{ActionId, DistributedAlphabet, ProcessId};
use crate::error::{Error, Result};
use crate::trace::{EventId, Trace};

pub type Formula = Rc<Ev>;
pub type TraceFormula = Rc<Tr>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Ev {
    True,
    False,
    Letter(ActionId),
    Not(Formula),
    Or(Formula, Formula),
    And(Formula, Formula),
    Yesterday(ProcessId, Formula),
    /// Strict since: `Since(i, lhs, rhs)` is `lhs S[i] rhs`.
    Since(ProcessId, Formula, Formula),
    /// Non-strict since.
    WeakSince(ProcessId, Formula, Formula),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Tr {
    True,
    False,
    Exists(ProcessId, Formula),
    Not(TraceFormula),
    Or(TraceFormula, TraceFormula),
    And(TraceFormula, TraceFormula),
}

// Folding constructors. The parser builds nodes directly so that printing
// and parsing stay inverse.

pub fn tt() -> Formula {
    Rc::new(Ev::True)
}

pub fn ff() -> Formula {
    Rc::new(Ev::False)
}

pub fn letter(a: ActionId) -> Formula {
    Rc::new(Ev::Letter(a))
}

pub fn not(f: &Formula) -> Formula {
    match &**f {
        Ev::True => ff(),
        Ev::False => tt(),
        Ev::Not(g) => g.clone(),
        _ => Rc::new(Ev::Not(f.clone())),
    }
}

pub fn or(f: &Formula, g: &Formula) -> Formula {
    match (&**f, &**g) {
        (Ev::True, _) | (_, Ev::True) => tt(),
        (Ev::False, _) => g.clone(),
        (_, Ev::False) => f.clone(),
        _ if Rc::ptr_eq(f, g) => f.clone(),
        _ => Rc::new(Ev::Or(f.clone(), g.clone())),
    }
}

pub fn and(f: &Formula, g: &Formula) -> Formula {
    match (&**f, &**g) {
        (Ev::False, _) | (_, Ev::False) => ff(),
        (Ev::True, _) => g.clone(),
        (_, Ev::True) => f.clone(),
        _ if Rc::ptr_eq(f, g) => f.clone(),
        _ => Rc::new(Ev::And(f.clone(), g.clone())),
    }
}

pub fn yesterday(i: ProcessId, f: &Formula) -> Formula {
    match &**f {
        Ev::False => ff(),
        _ => Rc::new(Ev::Yesterday(i, f.clone())),
    }
}

pub fn since(i: ProcessId, lhs: &Formula, rhs: &Formula) -> Formula {
    match &**rhs {
        Ev::False => ff(),
        _ => Rc::new(Ev::Since(i, lhs.clone(), rhs.clone())),
    }
}

pub fn any_of(fs: impl IntoIterator<Item = Formula>) -> Formula {
    fs.into_iter().fold(ff(), |acc, f| or(&acc, &f))
}

/// `∨_{a ∈ Σ_i} a`.
pub fn on_process(alph: &DistributedAlphabet, i: ProcessId) -> Formula {
    any_of(alph.actions_of(i).iter().map(|&a| letter(a)))
}

pub fn t_true() -> TraceFormula {
    Rc::new(Tr::True)
}

pub fn t_false() -> TraceFormula {
    Rc::new(Tr::False)
}

pub fn exists(i: ProcessId, f: &Formula) -> TraceFormula {
    match &**f {
        Ev::False => t_false(),
        _ => Rc::new(Tr::Exists(i, f.clone())),
    }
}

pub fn t_not(b: &TraceFormula) -> TraceFormula {
    match &**b {
        Tr::True => t_false(),
        Tr::False => t_true(),
        Tr::Not(c) => c.clone(),
        _ => Rc::new(Tr::Not(b.clone())),
    }
}

pub fn t_or(b: &TraceFormula, c: &TraceFormula) -> TraceFormula {
    match (&**b, &**c) {
        (Tr::True, _) | (_, Tr::True) => t_true(),
        (Tr::False, _) => c.clone(),
        (_, Tr::False) => b.clone(),
        _ => Rc::new(Tr::Or(b.clone(), c.clone())),
    }
}

pub fn t_and(b: &TraceFormula, c: &TraceFormula) -> TraceFormula {
    match (&**b, &**c) {
        (Tr::False, _) | (_, Tr::False) => t_false(),
        (Tr::True, _) => c.clone(),
        (_, Tr::True) => b.clone(),
        _ => Rc::new(Tr::And(b.clone(), c.clone())),
    }
}

/// The non-strict since rewritten with strict since and yesterday:
/// `(i ∧ γ) ∨ (¬i ∧ Y[i] γ)` with `γ = rhs ∨ (lhs ∧ lhs S[i] rhs)`.
pub fn desugar_nonstrict(alph: &DistributedAlphabet, i: ProcessId, lhs: &Formula, rhs: &Formula) -> Formula {
    let gamma = or(rhs, &and(lhs, &since(i, lhs, rhs)));
    let on_i = on_process(alph, i);
    or(&and(&on_i, &gamma), &and(&not(&on_i), &yesterday(i, &gamma)))
}

/// Rewrites every non-strict since in `f`.
pub fn desugar(alph: &DistributedAlphabet, f: &Formula) -> Formula {
    fn go(alph: &DistributedAlphabet, f: &Formula, memo: &mut HashMap<*const Ev, Formula>) -> Formula {
        if let Some(g) = memo.get(&Rc::as_ptr(f)) {
            return g.clone();
        }
        let g = match &**f {
            Ev::True | Ev::False | Ev::Letter(_) => f.clone(),
            Ev::Not(x) => Rc::new(Ev::Not(go(alph, x, memo))),
            Ev::Or(x, y) => Rc::new(Ev::Or(go(alph, x, memo), go(alph, y, memo))),
            Ev::And(x, y) => Rc::new(Ev::And(go(alph, x, memo), go(alph, y, memo))),
            Ev::Yesterday(i, x) => Rc::new(Ev::Yesterday(*i, go(alph, x, memo))),
            Ev::Since(i, x, y) => Rc::new(Ev::Since(*i, go(alph, x, memo), go(alph, y, memo))),
            Ev::WeakSince(i, x, y) => {
                let (x, y) = (go(alph, x, memo), go(alph, y, memo));
                desugar_nonstrict(alph, *i, &x, &y)
            }
        };
        memo.insert(Rc::as_ptr(f), g.clone());
        g
    }
    go(alph, f, &mut HashMap::new())
}

pub fn desugar_trace(alph: &DistributedAlphabet, b: &TraceFormula) -> TraceFormula {
    match &**b {
        Tr::True | Tr::False => b.clone(),
        Tr::Exists(i, f) => Rc::new(Tr::Exists(*i, desugar(alph, f))),
        Tr::Not(c) => Rc::new(Tr::Not(desugar_trace(alph, c))),
        Tr::Or(c, d) => Rc::new(Tr::Or(desugar_trace(alph, c), desugar_trace(alph, d))),
        Tr::And(c, d) => Rc::new(Tr::And(desugar_trace(alph, c), desugar_trace(alph, d))),
    }
}

/// Whether `f` avoids yesterday (after desugaring, non-strict since uses
/// it too).
pub fn is_since_only(f: &Formula) -> bool {
    fn go(f: &Formula, seen: &mut HashMap<*const Ev, bool>) -> bool {
        if let Some(&b) = seen.get(&Rc::as_ptr(f)) {
            return b;
        }
        let b = match &**f {
            Ev::True | Ev::False | Ev::Letter(_) => true,
            Ev::Not(x) => go(x, seen),
            Ev::Or(x, y) | Ev::And(x, y) | Ev::Since(_, x, y) => go(x, seen) && go(y, seen),
            Ev::Yesterday(..) | Ev::WeakSince(..) => false,
        };
        seen.insert(Rc::as_ptr(f), b);
        b
    }
    go(f, &mut HashMap::new())
}

pub fn trace_is_since_only(b: &TraceFormula) -> bool {
    match &**b {
        Tr::True | Tr::False => true,
        Tr::Exists(_, f) => is_since_only(f),
        Tr::Not(c) => trace_is_since_only(c),
        Tr::Or(c, d) | Tr::And(c, d) => trace_is_since_only(c) && trace_is_since_only(d),
    }
}

// ---------------------------------------------------------------------------
// Semantics

/// Evaluates formulas over one trace, caching per node.
pub struct Evaluator<'t> {
    t: &'t Trace,
    memo: HashMap<*const Ev, (Formula, Rc<Vec<bool>>)>,
}

impl<'t> Evaluator<'t> {
    pub fn new(t: &'t Trace) -> Self {
        Evaluator { t, memo: HashMap::new() }
    }

    /// Truth value of `f` at every event.
    pub fn event(&mut self, f: &Formula) -> Rc<Vec<bool>> {
        if let Some((_, v)) = self.memo.get(&Rc::as_ptr(f)) {
            return v.clone();
        }
        let t = self.t;
        let n = t.len();
        let v: Vec<bool> = match &**f {
            Ev::True => vec![true; n],
            Ev::False => vec![false; n],
            Ev::Letter(a) => t.labels().iter().map(|l| l == a).collect(),
            Ev::Not(x) => self.event(x).iter().map(|b| !b).collect(),
            Ev::Or(x, y) => {
                let (x, y) = (self.event(x), self.event(y));
                x.iter().zip(y.iter()).map(|(a, b)| *a || *b).collect()
            }
            Ev::And(x, y) => {
                let (x, y) = (self.event(x), self.event(y));
                x.iter().zip(y.iter()).map(|(a, b)| *a && *b).collect()
            }
            Ev::Yesterday(i, x) => {
                let x = self.event(x);
                (0..n).map(|e| t.last_below(e, *i).is_some_and(|p| x[p])).collect()
            }
            Ev::Since(i, x, y) => {
                let (x, y) = (self.event(x), self.event(y));
                let mut s = vec![false; n];
                // events are stored in a linear extension, so the previous
                // i-event is always already done
                for e in 0..n {
                    if t.is_process_event(e, *i) {
                        s[e] = t.pred(e, *i).is_some_and(|p| y[p] || (x[p] && s[p]));
                    }
                }
                s
            }
            Ev::WeakSince(i, x, y) => {
                let (x, y) = (self.event(x), self.event(y));
                let chain = t.events_of(*i);
                (0..n)
                    .map(|e| {
                        for &f in chain.iter().rev().filter(|&&f| t.leq(f, e)) {
                            if y[f] {
                                return true;
                            }
                            if !x[f] {
                                return false;
                            }
                        }
                        false
                    })
                    .collect()
            }
        };
        let v = Rc::new(v);
        self.memo.insert(Rc::as_ptr(f), (f.clone(), v.clone()));
        v
    }

    pub fn trace(&mut self, b: &TraceFormula) -> bool {
        match &**b {
            Tr::True => true,
            Tr::False => false,
            Tr::Exists(i, f) => match self.t.events_of(*i).last() {
                Some(&e) => self.event(f)[e],
                None => false,
            },
            Tr::Not(c) => !self.trace(c),
            Tr::Or(c, d) => self.trace(c) || self.trace(d),
            Tr::And(c, d) => self.trace(c) && self.trace(d),
        }
    }
}

pub fn eval_event(t: &Trace, e: EventId, f: &Formula) -> bool {
    Evaluator::new(t).event(f)[e]
}

pub fn eval_all(t: &Trace, f: &Formula) -> Vec<bool> {
    Evaluator::new(t).event(f).to_vec()
}

pub fn eval_trace(t: &Trace, b: &TraceFormula) -> bool {
    Evaluator::new(t).trace(b)
}

// ---------------------------------------------------------------------------
// Syntax

#[derive(Debug, Clone)]
enum Ast {
    True,
    False,
    Letter(String, usize),
    Not(Box<Ast>),
    Or(Box<Ast>, Box<Ast>),
    And(Box<Ast>, Box<Ast>),
    Y(String, usize, Box<Ast>),
    S(String, usize, Box<Ast>, Box<Ast>),
    SS(String, usize, Box<Ast>, Box<Ast>),
    E(String, usize, Box<Ast>),
}

struct Parser<'s> {
    src: &'s str,
    pos: usize,
}

const STOP: &[char] = &['(', ')', '!', '|', '&'];

impl<'s> Parser<'s> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse { pos: self.pos, msg: msg.into() })
    }

    fn rest(&self) -> &'s str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let r = self.rest();
        self.pos += r.len() - r.trim_start().len();
    }

    fn eat(&mut self, s: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(s) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    /// Reads `[name]` after an operator keyword.
    fn process(&mut self) -> Result<(String, usize)> {
        let at = self.pos;
        let r = self.rest();
        match r.find(']') {
            Some(k) if k > 0 => {
                self.pos += k + 1;
                Ok((r[..k].trim().to_string(), at))
            }
            _ => self.err("expected a process name and `]`"),
        }
    }

    fn keyword(&mut self, kw: &str) -> bool {
        self.skip_ws();
        let r = self.rest();
        if r.starts_with(kw) && r[kw.len()..].starts_with('[') {
            self.pos += kw.len() + 1;
            true
        } else {
            false
        }
    }

    fn or(&mut self) -> Result<Ast> {
        let mut lhs = self.and()?;
        while self.eat("|") {
            lhs = Ast::Or(Box::new(lhs), Box::new(self.and()?));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Ast> {
        let mut lhs = self.since()?;
        while self.eat("&") {
            lhs = Ast::And(Box::new(lhs), Box::new(self.since()?));
        }
        Ok(lhs)
    }

    fn since(&mut self) -> Result<Ast> {
        let lhs = self.unary()?;
        let weak = if self.keyword("SS") {
            true
        } else if self.keyword("S") {
            false
        } else {
            return Ok(lhs);
        };
        let (p, at) = self.process()?;
        let rhs = self.since()?;
        Ok(if weak {
            Ast::SS(p, at, Box::new(lhs), Box::new(rhs))
        } else {
            Ast::S(p, at, Box::new(lhs), Box::new(rhs))
        })
    }

    fn unary(&mut self) -> Result<Ast> {
        if self.eat("!") {
            return Ok(Ast::Not(Box::new(self.unary()?)));
        }
        if self.keyword("Y") {
            let (p, at) = self.process()?;
            return Ok(Ast::Y(p, at, Box::new(self.unary()?)));
        }
        if self.keyword("E") {
            let (p, at) = self.process()?;
            return Ok(Ast::E(p, at, Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Ast> {
        if self.eat("(") {
            let inner = self.or()?;
            if !self.eat(")") {
                return self.err("expected `)`");
            }
            return Ok(inner);
        }
        self.skip_ws();
        let at = self.pos;
        let r = self.rest();
        let k = r
            .find(|c: char| c.is_whitespace() || STOP.contains(&c))
            .unwrap_or(r.len());
        if k == 0 {
            return if r.is_empty() {
                self.err("unexpected end of formula")
            } else {
                self.err(format!("unexpected `{}`", r.chars().next().unwrap()))
            };
        }
        self.pos += k;
        Ok(match &r[..k] {
            "true" => Ast::True,
            "false" => Ast::False,
            name => Ast::Letter(name.to_string(), at),
        })
    }
}

fn parse_ast(src: &str) -> Result<Ast> {
    let mut p = Parser { src, pos: 0 };
    let ast = p.or()?;
    p.skip_ws();
    if p.pos < src.len() {
        return p.err("trailing input");
    }
    Ok(ast)
}

fn resolve_process(alph: &DistributedAlphabet, name: &str, at: usize) -> Result<ProcessId> {
    alph.process_id(name).map_err(|_| Error::Parse {
        pos: at,
        msg: format!("unknown process `{name}`"),
    })
}

fn to_event(alph: &DistributedAlphabet, ast: &Ast) -> Result<Formula> {
    let go = |x: &Ast| to_event(alph, x);
    Ok(Rc::new(match ast {
        Ast::True => Ev::True,
        Ast::False => Ev::False,
        Ast::Letter(n, at) => Ev::Letter(alph.action_id(n).map_err(|_| Error::Parse {
            pos: *at,
            msg: format!("unknown letter `{n}`"),
        })?),
        Ast::Not(x) => Ev::Not(go(x)?),
        Ast::Or(x, y) => Ev::Or(go(x)?, go(y)?),
        Ast::And(x, y) => Ev::And(go(x)?, go(y)?),
        Ast::Y(p, at, x) => Ev::Yesterday(resolve_process(alph, p, *at)?, go(x)?),
        Ast::S(p, at, x, y) => Ev::Since(resolve_process(alph, p, *at)?, go(x)?, go(y)?),
        Ast::SS(p, at, x, y) => Ev::WeakSince(resolve_process(alph, p, *at)?, go(x)?, go(y)?),
        Ast::E(_, at, _) => {
            return Err(Error::Parse {
                pos: *at,
                msg: "E[..] inside an event formula".into(),
            })
        }
    }))
}

fn to_trace(alph: &DistributedAlphabet, ast: &Ast) -> Result<TraceFormula> {
    let go = |x: &Ast| to_trace(alph, x);
    Ok(Rc::new(match ast {
        Ast::True => Tr::True,
        Ast::False => Tr::False,
        Ast::Not(x) => Tr::Not(go(x)?),
        Ast::Or(x, y) => Tr::Or(go(x)?, go(y)?),
        Ast::And(x, y) => Tr::And(go(x)?, go(y)?),
        Ast::E(p, at, x) => Tr::Exists(resolve_process(alph, p, *at)?, to_event(alph, x)?),
        Ast::Letter(_, at) | Ast::Y(_, at, _) | Ast::S(_, at, _, _) | Ast::SS(_, at, _, _) => {
            return Err(Error::Parse {
                pos: *at,
                msg: "event formula where a trace formula is expected".into(),
            })
        }
    }))
}

pub fn parse_event(alph: &DistributedAlphabet, src: &str) -> Result<Formula> {
    to_event(alph, &parse_ast(src)?)
}

pub fn parse_trace(alph: &DistributedAlphabet, src: &str) -> Result<TraceFormula> {
    to_trace(alph, &parse_ast(src)?)
}

/// Either kind of formula, as read from a file.
#[derive(Debug, Clone)]
pub enum AnyFormula {
    Event(Formula),
    Trace(TraceFormula),
}

/// Reads a trace formula if the text is one, otherwise an event formula.
pub fn parse_any(alph: &DistributedAlphabet, src: &str) -> Result<AnyFormula> {
    let ast = parse_ast(src)?;
    match to_trace(alph, &ast) {
        Ok(b) => Ok(AnyFormula::Trace(b)),
        Err(e) => match to_event(alph, &ast) {
            Ok(f) => Ok(AnyFormula::Event(f)),
            Err(_) => Err(e),
        },
    }
}

const P_OR: u8 = 1;
const P_AND: u8 = 2;
const P_SINCE: u8 = 3;
const P_UNARY: u8 = 4;
const P_ATOM: u8 = 5;

fn ev_prec(f: &Ev) -> u8 {
    match f {
        Ev::Or(..) => P_OR,
        Ev::And(..) => P_AND,
        Ev::Since(..) | Ev::WeakSince(..) => P_SINCE,
        Ev::Not(_) | Ev::Yesterday(..) => P_UNARY,
        _ => P_ATOM,
    }
}

fn tr_prec(b: &Tr) -> u8 {
    match b {
        Tr::Or(..) => P_OR,
        Tr::And(..) => P_AND,
        Tr::Not(_) | Tr::Exists(..) => P_UNARY,
        _ => P_ATOM,
    }
}

fn wrap(out: &mut String, paren: bool, body: impl FnOnce(&mut String)) {
    if paren {
        out.push('(');
    }
    body(out);
    if paren {
        out.push(')');
    }
}

fn write_ev(alph: &DistributedAlphabet, f: &Ev, out: &mut String) {
    let p = ev_prec(f);
    let sub = |g: &Formula, paren: bool, out: &mut String| wrap(out, paren, |o| write_ev(alph, g, o));
    match f {
        Ev::True => out.push_str("true"),
        Ev::False => out.push_str("false"),
        Ev::Letter(a) => out.push_str(alph.action_name(*a)),
        Ev::Not(x) => {
            out.push('!');
            sub(x, ev_prec(x) < P_UNARY, out);
        }
        Ev::Yesterday(i, x) => {
            out.push_str(&format!("Y[{}] ", alph.process_name(*i)));
            sub(x, ev_prec(x) < P_UNARY, out);
        }
        Ev::Or(x, y) | Ev::And(x, y) => {
            sub(x, ev_prec(x) < p, out);
            out.push_str(if p == P_OR { " | " } else { " & " });
            sub(y, ev_prec(y) <= p, out);
        }
        Ev::Since(i, x, y) | Ev::WeakSince(i, x, y) => {
            let kw = if matches!(f, Ev::Since(..)) { "S" } else { "SS" };
            sub(x, ev_prec(x) <= P_SINCE, out);
            out.push_str(&format!(" {kw}[{}] ", alph.process_name(*i)));
            sub(y, ev_prec(y) < P_SINCE, out);
        }
    }
}

fn write_tr(alph: &DistributedAlphabet, b: &Tr, out: &mut String) {
    let p = tr_prec(b);
    match b {
        Tr::True => out.push_str("true"),
        Tr::False => out.push_str("false"),
        Tr::Exists(i, f) => {
            out.push_str(&format!("E[{}] ", alph.process_name(*i)));
            wrap(out, ev_prec(f) < P_UNARY, |o| write_ev(alph, f, o));
        }
        Tr::Not(c) => {
            out.push('!');
            wrap(out, tr_prec(c) < P_UNARY, |o| write_tr(alph, c, o));
        }
        Tr::Or(c, d) | Tr::And(c, d) => {
            wrap(out, tr_prec(c) < p, |o| write_tr(alph, c, o));
            out.push_str(if p == P_OR { " | " } else { " & " });
            wrap(out, tr_prec(d) <= p, |o| write_tr(alph, d, o));
        }
    }
}

pub fn print_event(alph: &DistributedAlphabet, f: &Formula) -> String {
    let mut s = String::new();
    write_ev(alph, f, &mut s);
    s
}

pub fn print_trace(alph: &DistributedAlphabet, b: &TraceFormula) -> String {
    let mut s = String::new();
    write_tr(alph, b, &mut s);
    s
}

/// `Display` adapter for a formula together with its alphabet.
pub struct Shown<'a, F>(pub &'a Arc<DistributedAlphabet>, pub &'a F);

impl fmt::Display for Shown<'_, Formula> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_event(self.0, self.1))
    }
}

impl fmt::Display for Shown<'_, TraceFormula> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_trace(self.0, self.1))
    }
}

#[cfg(test)]
mod tests;
