//! Deformation of an algebroid by a (1,1) tensor and the obstruction to it.
//!
//! A frame endomorphism N deforms the bracket to
//! `[X,Y]_N = [NX,Y] + [X,NY] - N[X,Y]` and the anchor to `rho o N`. The
//! torsion `T_N(X,Y) = [NX,NY] - N([X,Y]_N)` measures the failure of the
//! deformed data to be an algebroid again; when it vanishes identically the
//! traces of the powers of N generate an exact ladder of closed forms, and
//! those trace identities are checked here as pointwise residuals.

use crate::algebroid::LieAlgebroid;
use crate::error::Result;
use crate::exterior::{AForm, EndomorphismField, Multivector};
use crate::report::{CheckResult, ResidualScan};
use crate::scalar::ScalarField;
use std::collections::BTreeMap;

/// `[X,Y]_N` for sections of degree one.
pub fn deformed_bracket(
    a: &LieAlgebroid,
    n: &EndomorphismField,
    x: &Multivector,
    y: &Multivector,
) -> Result<Multivector> {
    a.section_bracket(&n.apply(x)?, y)?
        .add(&a.section_bracket(x, &n.apply(y)?)?)?
        .sub(&n.apply(&a.section_bracket(x, y)?)?)
}

/// Torsion of N on a pair of frame sections.
pub fn torsion_pair(
    a: &LieAlgebroid,
    n: &EndomorphismField,
    i: usize,
    j: usize,
) -> Result<Multivector> {
    let rank = a.rank();
    let ei = Multivector::frame_section(rank, i);
    let ej = Multivector::frame_section(rank, j);
    let outer = a.section_bracket(&n.apply(&ei)?, &n.apply(&ej)?)?;
    let inner = n.apply(&deformed_bracket(a, n, &ei, &ej)?)?;
    outer.sub(&inner)
}

/// Largest torsion component over all frame pairs and sample points.
pub fn torsion_max_residual(
    a: &LieAlgebroid,
    n: &EndomorphismField,
    points: &[Vec<f64>],
) -> Result<f64> {
    let rank = a.rank();
    let mut fields = Vec::new();
    for i in 0..rank {
        for j in i + 1..rank {
            fields.push(torsion_pair(a, n, i, j)?);
        }
    }
    let mut worst: f64 = 0.0;
    for pt in points {
        for t in &fields {
            worst = worst.max(t.max_abs_at(pt)?);
        }
    }
    Ok(worst)
}

pub fn torsion_check(
    a: &LieAlgebroid,
    n: &EndomorphismField,
    points: &[Vec<f64>],
    tol: f64,
    seed: u64,
) -> Result<CheckResult> {
    let rank = a.rank();
    let mut fields = Vec::new();
    for i in 0..rank {
        for j in i + 1..rank {
            fields.push(torsion_pair(a, n, i, j)?);
        }
    }
    let mut scan = ResidualScan::new();
    for pt in points {
        for t in &fields {
            scan.observe(t.max_abs_at(pt));
        }
    }
    Ok(scan.into_check("torsion", tol, points.len(), seed))
}

/// The deformed algebroid A_N: same bundle and base, bracket `[.,.]_N`,
/// anchor `rho o N`. Its axioms hold exactly when the torsion of N vanishes;
/// this constructor does not check that.
pub fn deform(
    a: &LieAlgebroid,
    n: &EndomorphismField,
    name: impl Into<String>,
) -> Result<LieAlgebroid> {
    let rank = a.rank();
    let dim = a.dim();
    let mut anchor = Vec::with_capacity(rank);
    for i in 0..rank {
        let row = (0..dim)
            .map(|u| {
                ScalarField::sum(
                    (0..rank).map(|j| n.entry(i, j).mul(&a.anchor_row(j)[u])),
                )
            })
            .collect();
        anchor.push(row);
    }
    let mut structure = BTreeMap::new();
    for i in 0..rank {
        for j in i + 1..rank {
            let ei = Multivector::frame_section(rank, i);
            let ej = Multivector::frame_section(rank, j);
            let bracket = deformed_bracket(a, n, &ei, &ej)?;
            let comps = bracket.vector_components()?;
            if comps.iter().any(|c| !c.is_zero()) {
                structure.insert((i, j), comps);
            }
        }
    }
    LieAlgebroid::new(
        name,
        a.coords().to_vec(),
        a.frame().to_vec(),
        anchor,
        structure,
        a.domain().to_vec(),
    )
}

/// Residual checks of the trace ladder of a torsion-free N, all as exact
/// 1-form identities evaluated pointwise:
///
/// * `power-gradient-m`:  m (N*)^(m-1) d tr N = d tr N^m
/// * `logdet-gradient-k`: k (N*)^k d log det N = d tr N^k (needs det N > 0)
/// * `trace-chain-k`:     d h_{k+1} = N* d h_k with h_k = tr N^k / k
pub fn trace_identity_checks(
    a: &LieAlgebroid,
    n: &EndomorphismField,
    max_power: i64,
    points: &[Vec<f64>],
    tol: f64,
    seed: u64,
) -> Result<Vec<CheckResult>> {
    assert!(max_power >= 1, "trace identities need at least one power");
    let d_trace: Vec<_> = (1..=max_power)
        .map(|m| a.differential_scalar(&n.power(m).trace()))
        .collect();
    let d_logdet = a.differential_scalar(&n.det_field().ln());
    let scan_form = |residual: &AForm| {
        let mut scan = ResidualScan::new();
        for pt in points {
            scan.observe(residual.max_abs_at(pt));
        }
        scan
    };
    let mut checks = Vec::new();
    for m in 1..=max_power {
        let lifted = n.power(m - 1).pullback(&d_trace[0].scale(m as f64))?;
        let residual = lifted.sub(&d_trace[(m - 1) as usize])?;
        checks.push(scan_form(&residual).into_check(
            format!("power-gradient-{m}"),
            tol,
            points.len(),
            seed,
        ));
    }
    for k in 1..=max_power {
        let lifted = n.power(k).pullback(&d_logdet.scale(k as f64))?;
        let residual = lifted.sub(&d_trace[(k - 1) as usize])?;
        checks.push(scan_form(&residual).into_check(
            format!("logdet-gradient-{k}"),
            tol,
            points.len(),
            seed,
        ));
    }
    for k in 1..max_power {
        let h_k = d_trace[(k - 1) as usize].scale(1.0 / k as f64);
        let h_next = d_trace[k as usize].scale(1.0 / (k + 1) as f64);
        let residual = n.pullback(&h_k)?.sub(&h_next)?;
        checks.push(scan_form(&residual).into_check(
            format!("trace-chain-{k}"),
            tol,
            points.len(),
            seed,
        ));
    }
    Ok(checks)
}
