//! Line-oriented text format for weighted graph spaces.
//!
//! ```text
//! space dim=2 h=0.5
//! # id mu [x1 .. xd]
//! n 0 0.25 -1 -1
//! # a b length conductance
//! e 0 1 0.5 0.125
//! ```
//!
//! The header may carry `h=` (grid spacing), `alpha=` (density exponent) and
//! `lambda=` (Poincaré dilation). Node coordinates are optional but must be
//! given for all nodes or none.

use std::fmt::Write as _;
use std::path::Path;

use finelab_core::space::{EdgeSpec, Provenance};
use finelab_core::{SpaceMeta, WeightedGraphSpace};

#[derive(Debug, thiserror::Error)]
pub enum SpaceFileError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Space(#[from] finelab_core::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

fn parse_err(line: usize, message: impl Into<String>) -> SpaceFileError {
    SpaceFileError::Parse { line, message: message.into() }
}

fn number<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T, SpaceFileError> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| parse_err(line, format!("invalid {what} `{tok}`")))
}

pub fn parse_space(text: &str) -> Result<WeightedGraphSpace, SpaceFileError> {
    let mut dim: Option<usize> = None;
    let mut meta =
        SpaceMeta { provenance: Provenance { builder: "file".into(), params: Vec::new() }, ..SpaceMeta::default() };
    let mut ids = Vec::new();
    let mut mu = Vec::new();
    let mut coords: Vec<f64> = Vec::new();
    let mut coord_dim: Option<usize> = None;
    let mut edges = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut toks = content.split_whitespace();
        let tag = toks.next().unwrap_or_default();
        if dim.is_none() && tag != "space" {
            return Err(parse_err(line, "expected header `space dim=<d>`"));
        }
        match tag {
            "space" => {
                if dim.is_some() {
                    return Err(parse_err(line, "duplicate header"));
                }
                for kv in toks {
                    let (key, value) =
                        kv.split_once('=').ok_or_else(|| parse_err(line, format!("expected key=value, got `{kv}`")))?;
                    match key {
                        "dim" => dim = Some(number(Some(value), line, "dim")?),
                        "h" => meta.spacing = Some(number(Some(value), line, "h")?),
                        "alpha" => meta.weight_exponent = number(Some(value), line, "alpha")?,
                        "lambda" => meta.poincare_dilation = number(Some(value), line, "lambda")?,
                        other => return Err(parse_err(line, format!("unknown header key `{other}`"))),
                    }
                }
                if dim.is_none() {
                    return Err(parse_err(line, "header lacks dim="));
                }
            }
            "n" => {
                ids.push(number::<u64>(toks.next(), line, "node id")?);
                mu.push(number::<f64>(toks.next(), line, "measure")?);
                let xs: Vec<f64> = toks.map(|t| number(Some(t), line, "coordinate")).collect::<Result<_, _>>()?;
                match coord_dim {
                    None => coord_dim = Some(xs.len()),
                    Some(d) if d != xs.len() => {
                        return Err(parse_err(line, format!("node has {} coordinates, expected {d}", xs.len())));
                    }
                    Some(_) => {}
                }
                coords.extend(xs);
            }
            "e" => {
                let a = number(toks.next(), line, "endpoint")?;
                let b = number(toks.next(), line, "endpoint")?;
                let length = number(toks.next(), line, "length")?;
                let conductance = number(toks.next(), line, "conductance")?;
                if toks.next().is_some() {
                    return Err(parse_err(line, "trailing fields on edge line"));
                }
                edges.push(EdgeSpec { a, b, length, conductance });
            }
            other => return Err(parse_err(line, format!("unknown record `{other}`"))),
        }
    }
    let dim = dim.ok_or_else(|| parse_err(1, "empty file"))?;
    let positions = match coord_dim {
        Some(d) if d > 0 => Some((d, coords)),
        _ => None,
    };
    Ok(WeightedGraphSpace::from_parts(ids, mu, positions, &edges, dim, meta)?)
}

pub fn write_space(space: &WeightedGraphSpace) -> String {
    let mut out = String::new();
    let meta = space.meta();
    write!(out, "space dim={}", space.dim()).unwrap();
    if let Some(h) = meta.spacing {
        write!(out, " h={h}").unwrap();
    }
    if meta.weight_exponent != 0.0 {
        write!(out, " alpha={}", meta.weight_exponent).unwrap();
    }
    if meta.poincare_dilation != 1.0 {
        write!(out, " lambda={}", meta.poincare_dilation).unwrap();
    }
    out.push('\n');
    let ids = space.ids();
    for (i, (&id, &m)) in ids.iter().zip(space.mu()).enumerate() {
        write!(out, "n {id} {m}").unwrap();
        if let Some(x) = space.position(i) {
            for v in x {
                write!(out, " {v}").unwrap();
            }
        }
        out.push('\n');
    }
    for e in space.edges() {
        writeln!(out, "e {} {} {} {}", ids[e.a], ids[e.b], e.length, e.conductance).unwrap();
    }
    out
}

pub fn load_space(path: &Path) -> Result<WeightedGraphSpace, SpaceFileError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| SpaceFileError::Io { path: path.display().to_string(), source })?;
    parse_space(&text)
}
