//! JSON descriptions of algebroids, bivectors, and endomorphism fields.
//! Every functional entry is a coordinate expression compiled through the
//! expression grammar; shape errors and parse errors surface as `Config`
//! errors with enough context to fix the file.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::algebroid::LieAlgebroid;
use crate::error::{Error, Result};
use crate::exprlang::parse;
use crate::exterior::{EndomorphismField, Multivector};
use crate::scalar::ScalarField;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: String,
    coords: Vec<String>,
    #[serde(default)]
    frame: Option<Vec<String>>,
    #[serde(default)]
    anchor: Option<Vec<Vec<String>>>,
    #[serde(default)]
    structure: Option<BTreeMap<String, Vec<String>>>,
    #[serde(default)]
    pi: Option<BTreeMap<String, String>>,
    #[serde(default, rename = "N")]
    n: Option<Vec<Vec<String>>>,
    domain: BTreeMap<String, (f64, f64)>,
}

/// A configured system: the algebroid, and whichever of the bivector and
/// the endomorphism field the file provided.
pub struct System {
    pub algebroid: LieAlgebroid,
    pub pi: Option<Multivector>,
    pub n: Option<EndomorphismField>,
}

fn compile(src: &str, coords: &[String], what: &str) -> Result<ScalarField> {
    let expr = parse(src, coords)
        .map_err(|e| Error::Config(format!("{what}: in `{src}`: {e}")))?;
    Ok(ScalarField::from_expr(expr))
}

fn pair_key(key: &str, rank: usize, what: &str) -> Result<(usize, usize)> {
    let bad = || Error::Config(format!(
        "{what} key `{key}` must be `i,j` with 0 <= i < j < {rank}"
    ));
    let (a, b) = key.split_once(',').ok_or_else(bad)?;
    let i: usize = a.trim().parse().map_err(|_| bad())?;
    let j: usize = b.trim().parse().map_err(|_| bad())?;
    if i >= j || j >= rank {
        return Err(bad());
    }
    Ok((i, j))
}

pub fn parse_config(text: &str) -> Result<System> {
    let raw: RawConfig =
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let coords = raw.coords;
    if coords.is_empty() {
        return Err(Error::Config("coords must not be empty".into()));
    }
    let mut domain = Vec::with_capacity(coords.len());
    for c in &coords {
        match raw.domain.get(c) {
            Some(&(lo, hi)) => domain.push((lo, hi)),
            None => {
                return Err(Error::Config(format!(
                    "domain is missing an interval for coordinate `{c}`"
                )))
            }
        }
    }
    for key in raw.domain.keys() {
        if !coords.contains(key) {
            return Err(Error::Config(format!(
                "domain mentions `{key}`, which is not a coordinate"
            )));
        }
    }

    let algebroid = match (raw.frame, raw.anchor) {
        (None, None) => {
            if raw.structure.is_some() {
                return Err(Error::Config(
                    "structure functions need an explicit frame and anchor".into(),
                ));
            }
            LieAlgebroid::tangent(raw.name.clone(), coords.clone(), domain)?
        }
        (Some(frame), Some(anchor)) => {
            let rank = frame.len();
            let mut anchor_fields = Vec::with_capacity(anchor.len());
            for (i, row) in anchor.iter().enumerate() {
                let mut fields = Vec::with_capacity(row.len());
                for (u, src) in row.iter().enumerate() {
                    fields.push(compile(src, &coords, &format!("anchor[{i}][{u}]"))?);
                }
                anchor_fields.push(fields);
            }
            let mut structure = BTreeMap::new();
            for (key, coeffs) in raw.structure.unwrap_or_default() {
                let (i, j) = pair_key(&key, rank, "structure")?;
                if coeffs.len() != rank {
                    return Err(Error::Config(format!(
                        "structure[{key}] lists {} coefficients for rank {rank}",
                        coeffs.len()
                    )));
                }
                let mut fields = Vec::with_capacity(rank);
                for (k, src) in coeffs.iter().enumerate() {
                    fields.push(compile(src, &coords, &format!("structure[{key}][{k}]"))?);
                }
                structure.insert((i, j), fields);
            }
            LieAlgebroid::new(
                raw.name.clone(),
                coords.clone(),
                frame,
                anchor_fields,
                structure,
                domain,
            )?
        }
        _ => {
            return Err(Error::Config(
                "frame and anchor must be given together".into(),
            ))
        }
    };

    let rank = algebroid.rank();
    let pi = match raw.pi {
        None => None,
        Some(map) => {
            let mut out = Multivector::zero(rank, 2);
            for (key, src) in map {
                let (i, j) = pair_key(&key, rank, "pi")?;
                out = out.with_component(&[i, j], compile(&src, &coords, &format!("pi[{key}]"))?);
            }
            Some(out)
        }
    };

    let n = match raw.n {
        None => None,
        Some(rows) => {
            if rows.len() != rank || rows.iter().any(|r| r.len() != rank) {
                return Err(Error::Config(format!(
                    "N must be a {rank} x {rank} matrix of expressions"
                )));
            }
            let mut fields = Vec::with_capacity(rank);
            for (i, row) in rows.iter().enumerate() {
                let mut out = Vec::with_capacity(rank);
                for (j, src) in row.iter().enumerate() {
                    out.push(compile(src, &coords, &format!("N[{i}][{j}]"))?);
                }
                fields.push(out);
            }
            Some(EndomorphismField::from_fields("config-N", fields))
        }
    };

    Ok(System { algebroid, pi, n })
}

pub fn load_config(path: &Path) -> Result<System> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}
