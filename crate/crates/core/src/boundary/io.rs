//! Boundary files: JSON with `alpha`, `kind`, `knots` and `tail`.
//!
//! Numbers carry at least 15 significant digits, more when needed for a
//! write/read cycle to reproduce every `f64` bit for bit. Step boundaries list `[0, 0]` followed
//! by one `[c_j, c_j]` knot per step.

use super::{Boundary, GBoundary, StepBoundary};
use crate::error::{Error, Result};
use serde::Deserialize;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    alpha: f64,
    kind: String,
    knots: Vec<[f64; 2]>,
    tail: f64,
}

/// Fifteen significant digits when they round-trip, seventeen otherwise.
fn num(x: f64) -> String {
    let short = format!("{x:.14e}");
    if short.parse::<f64>() == Ok(x) {
        short
    } else {
        format!("{x:.16e}")
    }
}

pub fn to_json(b: &Boundary) -> String {
    let (alpha, kind, knots, tail): (f64, &str, Vec<(f64, f64)>, f64) = match b {
        Boundary::Linear(g) => (
            super::Frontier::alpha(g),
            "linear",
            g.knots().to_vec(),
            g.tail(),
        ),
        Boundary::Step(s) => {
            let mut k = vec![(0.0, 0.0)];
            k.extend(s.steps().iter().map(|&c| (c, c)));
            (super::Frontier::alpha(s), "step", k, s.tail())
        }
    };
    let mut out = String::new();
    out.push_str("{\n");
    let _ = writeln!(out, "  \"alpha\": {},", num(alpha));
    let _ = writeln!(out, "  \"kind\": \"{kind}\",");
    out.push_str("  \"knots\": [\n");
    for (i, (t, g)) in knots.iter().enumerate() {
        let sep = if i + 1 < knots.len() { "," } else { "" };
        let _ = writeln!(out, "    [{}, {}]{sep}", num(*t), num(*g));
    }
    out.push_str("  ],\n");
    let _ = writeln!(out, "  \"tail\": {}", num(tail));
    out.push_str("}\n");
    out
}

pub fn from_json(text: &str) -> Result<Boundary> {
    let raw: RawFile =
        serde_json::from_str(text).map_err(|e| Error::MalformedFile(e.to_string()))?;
    if raw.knots.is_empty() {
        return Err(Error::MalformedFile("knot list is empty".into()));
    }
    match raw.kind.as_str() {
        "linear" => {
            let knots = raw.knots.iter().map(|k| (k[0], k[1])).collect();
            Ok(Boundary::Linear(GBoundary::new(
                raw.alpha, knots, raw.tail,
            )?))
        }
        "step" => {
            let mut knots = raw.knots.as_slice();
            if knots[0] == [0.0, 0.0] {
                knots = &knots[1..];
            }
            if let Some(k) = knots.iter().find(|k| k[0] != k[1]) {
                return Err(Error::InvariantViolation(format!(
                    "step knot [{}, {}] must have g equal to t",
                    k[0], k[1]
                )));
            }
            let s = StepBoundary::from_steps(raw.alpha, knots.iter().map(|k| k[0]).collect())?;
            if s.tail() != raw.tail {
                return Err(Error::InvariantViolation(format!(
                    "tail {} differs from the last step {}",
                    raw.tail,
                    s.tail()
                )));
            }
            Ok(Boundary::Step(s))
        }
        other => Err(Error::MalformedFile(format!(
            "unknown boundary kind '{other}'"
        ))),
    }
}

pub fn write_file(path: &Path, b: &Boundary) -> Result<()> {
    std::fs::write(path, to_json(b))
        .map_err(|e| Error::InvalidConfig(format!("cannot write {}: {e}", path.display())))
}

pub fn read_file(path: &Path) -> Result<Boundary> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::MalformedFile(format!("cannot read {}: {e}", path.display())))?;
    from_json(&text)
}
