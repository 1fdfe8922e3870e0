//! Reading arguments that name a file or carry the value inline.

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use serde_json::Value;
use trace_wreath::automaton::{automaton_from_json, AsyncAutomaton};
use trace_wreath::cascade::{cascade_from_json, Cascade};
use trace_wreath::{fixtures, DistributedAlphabet, Trace};

/// Text of `arg`: the file it names, or the argument itself.
pub fn text(arg: &str) -> Result<String> {
    if Path::new(arg).is_file() {
        std::fs::read_to_string(arg).with_context(|| format!("reading {arg}"))
    } else {
        Ok(arg.to_string())
    }
}

pub fn json(arg: &str) -> Result<Value> {
    let src = text(arg)?;
    serde_json::from_str(&src).with_context(|| format!("parsing JSON from {arg}"))
}

pub fn alphabet(arg: Option<&str>) -> Result<Arc<DistributedAlphabet>> {
    match arg {
        None => Ok(fixtures::sigma_ex()),
        Some(a) => Ok(Arc::new(DistributedAlphabet::from_json_value(&json(a)?)?)),
    }
}

/// A trace given as JSON, a JSON file, or a bare word.
pub fn trace(alph: &Arc<DistributedAlphabet>, arg: &str) -> Result<Trace> {
    let src = text(arg)?;
    let src = src.trim();
    if src.starts_with('{') {
        let v: Value = serde_json::from_str(src).context("parsing trace JSON")?;
        Ok(Trace::from_json_value(alph, &v)?)
    } else {
        Ok(Trace::from_names(alph, src)?)
    }
}

pub fn automaton(
    arg: &str,
    alph: Option<&Arc<DistributedAlphabet>>,
) -> Result<(AsyncAutomaton, Option<BTreeSet<usize>>)> {
    Ok(automaton_from_json(&json(arg)?, alph)?)
}

/// A cascade file; stage paths resolve against the file's directory.
pub fn cascade(arg: &str, alph: Option<&Arc<DistributedAlphabet>>) -> Result<(Cascade, Option<BTreeSet<usize>>)> {
    let dir = Path::new(arg).parent().map(Path::to_path_buf).unwrap_or_default();
    let load = |p: &str| -> trace_wreath::Result<Value> {
        let path = dir.join(p);
        let src = std::fs::read_to_string(&path)
            .map_err(|e| trace_wreath::Error::Malformed(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&src).map_err(|e| trace_wreath::Error::Malformed(e.to_string()))
    };
    Ok(cascade_from_json(&json(arg)?, alph, load)?)
}

/// Formula text with `#` comment lines removed.
pub fn formula(arg: &str) -> Result<String> {
    let src = text(arg)?;
    let body: Vec<&str> = src.lines().filter(|l| !l.trim_start().starts_with('#')).collect();
    let body = body.join("\n");
    if body.trim().is_empty() {
        bail!("empty formula in {arg}");
    }
    Ok(body)
}
