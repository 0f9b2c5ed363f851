//! The bi-Hamiltonian hierarchy of a compatible pair (pi, N).
//!
//! The trace Hamiltonians `h_i = (1/i) tr N^i` (with `h_0 = ln det N`) and
//! the fields `X^(m) = N^(m-1) X` built on the modular root
//! `X = -pi# d_A tr N` satisfy `d_{N^i pi} h_j = X^(i+j)` for every split of
//! m, the deformed bivectors `N^k pi` commute pairwise under the Schouten
//! bracket, and everything pushes down the anchor to bi-Hamiltonian fields
//! on the base. Each of those statements is a residual check here.

use std::collections::BTreeMap;

use crate::algebroid::LieAlgebroid;
use crate::error::Result;
use crate::exterior::{AForm, EndomorphismField, Multivector};
use crate::poisson::{covered_bivector, deformed_bivector, poisson_bracket, sharp};
use crate::report::{CheckResult, ResidualScan};
use crate::scalar::ScalarField;

/// `h_i = (1/i) tr N^i` for i != 0 and `h_0 = ln det N`. Index 0 and the
/// negative indices evaluate only where N is invertible (and det N > 0 for
/// index 0); that surfaces at evaluation, not construction.
pub fn hamiltonians(
    n: &EndomorphismField,
    i_min: i64,
    i_max: i64,
) -> BTreeMap<i64, ScalarField> {
    assert!(i_min <= i_max, "empty Hamiltonian range");
    let mut h = BTreeMap::new();
    for i in i_min..=i_max {
        let field = if i == 0 {
            n.det_field().ln()
        } else {
            n.power(i).trace().scale(1.0 / i as f64)
        };
        h.insert(i, field);
    }
    h
}

/// The root of the hierarchy: `X = d_pi tr N = -pi# d_A tr N`.
pub fn modular_root(
    a: &LieAlgebroid,
    pi: &Multivector,
    n: &EndomorphismField,
) -> Result<Multivector> {
    Ok(sharp(pi, &a.differential_scalar(&n.trace()))?.neg())
}

/// `X^(m) = N^(m-1) X`; m <= 0 evaluates only where N is invertible.
pub fn hierarchy_field(
    a: &LieAlgebroid,
    pi: &Multivector,
    n: &EndomorphismField,
    m: i64,
) -> Result<Multivector> {
    n.power(m - 1).apply(&modular_root(a, pi, n)?)
}

/// The anchor image of `X^(m)`, a vector field on the base.
pub fn covered_hierarchy_field(
    a: &LieAlgebroid,
    pi: &Multivector,
    n: &EndomorphismField,
    m: i64,
) -> Result<Vec<ScalarField>> {
    anchor_image(a, &hierarchy_field(a, pi, n, m)?)
}

pub(crate) fn anchor_image(a: &LieAlgebroid, x: &Multivector) -> Result<Vec<ScalarField>> {
    let comps = x.vector_components()?;
    Ok((0..a.dim())
        .map(|u| {
            ScalarField::sum((0..a.rank()).map(|i| comps[i].mul(&a.anchor_row(i)[u])))
        })
        .collect())
}

fn scan_points(
    points: &[Vec<f64>],
    mut observe: impl FnMut(&mut ResidualScan, &[f64]),
) -> ResidualScan {
    let mut scan = ResidualScan::new();
    for pt in points {
        observe(&mut scan, pt);
    }
    scan
}

/// For every split m = i + j inside the ranges, both Hamiltonian routes to
/// the m-th field must agree with the compositional one:
/// `-(N^i pi)# d_A h_j = -(N^j pi)# d_A h_i = X^(m)`.
#[allow(clippy::too_many_arguments)]
pub fn cross_relation_checks(
    a: &LieAlgebroid,
    pi: &Multivector,
    n: &EndomorphismField,
    index_range: (i64, i64),
    m_range: (i64, i64),
    points: &[Vec<f64>],
    tol: f64,
    seed: u64,
) -> Result<Vec<CheckResult>> {
    let (i_min, i_max) = index_range;
    let (m_min, m_max) = m_range;
    let h = hamiltonians(n, i_min, i_max);
    let dh: BTreeMap<i64, AForm> = h
        .iter()
        .map(|(i, f)| (*i, a.differential_scalar(f)))
        .collect();
    let mut pis: BTreeMap<i64, Multivector> = BTreeMap::new();
    for i in i_min..=i_max {
        pis.insert(i, deformed_bivector(pi, n, i)?);
    }
    let root = modular_root(a, pi, n)?;
    let mut checks = Vec::new();
    for i in i_min..=i_max {
        for j in i..=i_max {
            let m = i + j;
            if m < m_min || m > m_max {
                continue;
            }
            let x_m = n.power(m - 1).apply(&root)?;
            let left = sharp(&pis[&i], &dh[&j])?.neg().sub(&x_m)?;
            let right = sharp(&pis[&j], &dh[&i])?.neg().sub(&x_m)?;
            let scan = scan_points(points, |scan, pt| {
                scan.observe(left.max_abs_at(pt));
                scan.observe(right.max_abs_at(pt));
            });
            checks.push(scan.into_check(
                format!("hierarchy-cross-{i}:{j}"),
                tol,
                points.len(),
                seed,
            ));
        }
    }
    Ok(checks)
}

/// `X^(m+1) = N X^(m)` across the range (one aggregated check).
pub fn recursion_step_check(
    a: &LieAlgebroid,
    pi: &Multivector,
    n: &EndomorphismField,
    m_range: (i64, i64),
    points: &[Vec<f64>],
    tol: f64,
    seed: u64,
) -> Result<CheckResult> {
    let root = modular_root(a, pi, n)?;
    let mut residuals = Vec::new();
    for m in m_range.0..m_range.1 {
        let x_m = n.power(m - 1).apply(&root)?;
        let x_next = n.power(m).apply(&root)?;
        residuals.push(n.apply(&x_m)?.sub(&x_next)?);
    }
    let scan = scan_points(points, |scan, pt| {
        for r in &residuals {
            scan.observe(r.max_abs_at(pt));
        }
    });
    Ok(scan.into_check("hierarchy-step", tol, points.len(), seed))
}

/// Schouten residuals `[N^i pi, N^j pi] = 0` for all 0 <= i <= j <= kmax.
pub fn pairwise_compatibility(
    a: &LieAlgebroid,
    pi: &Multivector,
    n: &EndomorphismField,
    kmax: i64,
    points: &[Vec<f64>],
    tol: f64,
    seed: u64,
) -> Result<Vec<CheckResult>> {
    let mut pis = Vec::new();
    for k in 0..=kmax {
        pis.push(deformed_bivector(pi, n, k)?);
    }
    let mut checks = Vec::new();
    for i in 0..=kmax as usize {
        for j in i..=kmax as usize {
            let bracket = a.schouten(&pis[i], &pis[j])?;
            let scan = scan_points(points, |scan, pt| {
                scan.observe(bracket.max_abs_at(pt));
            });
            checks.push(scan.into_check(
                format!("pencil-{i}:{j}"),
                tol,
                points.len(),
                seed,
            ));
        }
    }
    Ok(checks)
}

/// The anchor image of `X^(m)` equals the covered Hamiltonian field
/// `-w_i# d h_j` on the base for every split, where `w_i` covers `N^i pi`.
#[allow(clippy::too_many_arguments)]
pub fn covered_cross_checks(
    a: &LieAlgebroid,
    pi: &Multivector,
    n: &EndomorphismField,
    index_range: (i64, i64),
    m_range: (i64, i64),
    points: &[Vec<f64>],
    tol: f64,
    seed: u64,
) -> Result<Vec<CheckResult>> {
    let (i_min, i_max) = index_range;
    let (m_min, m_max) = m_range;
    let h = hamiltonians(n, i_min, i_max);
    let mut covered: BTreeMap<i64, (LieAlgebroid, Multivector)> = BTreeMap::new();
    for i in i_min..=i_max {
        let pi_i = deformed_bivector(pi, n, i)?;
        covered.insert(i, covered_bivector(a, &pi_i, format!("{}-base", a.name()))?);
    }
    let mut checks = Vec::new();
    for i in i_min..=i_max {
        for j in i..=i_max {
            let m = i + j;
            if m < m_min || m > m_max {
                continue;
            }
            let pushed =
                Multivector::from_vector_components(covered_hierarchy_field(a, pi, n, m)?);
            let (base_i, w_i) = &covered[&i];
            let (base_j, w_j) = &covered[&j];
            let left = sharp(w_i, &base_i.differential_scalar(&h[&j]))?
                .neg()
                .sub(&pushed)?;
            let right = sharp(w_j, &base_j.differential_scalar(&h[&i]))?
                .neg()
                .sub(&pushed)?;
            let scan = scan_points(points, |scan, pt| {
                scan.observe(left.max_abs_at(pt));
                scan.observe(right.max_abs_at(pt));
            });
            checks.push(scan.into_check(
                format!("covered-cross-{i}:{j}"),
                tol,
                points.len(),
                seed,
            ));
        }
    }
    Ok(checks)
}

/// The covered tensors are themselves pairwise compatible on the base.
pub fn covered_compatibility(
    a: &LieAlgebroid,
    pi: &Multivector,
    n: &EndomorphismField,
    kmax: i64,
    points: &[Vec<f64>],
    tol: f64,
    seed: u64,
) -> Result<Vec<CheckResult>> {
    let mut ws = Vec::new();
    let mut base = None;
    for k in 0..=kmax {
        let pi_k = deformed_bivector(pi, n, k)?;
        let (b, w) = covered_bivector(a, &pi_k, format!("{}-base", a.name()))?;
        base.get_or_insert(b);
        ws.push(w);
    }
    let base = base.expect("kmax >= 0 always yields a base");
    let mut checks = Vec::new();
    for i in 0..=kmax as usize {
        for j in i..=kmax as usize {
            let bracket = base.schouten(&ws[i], &ws[j])?;
            let scan = scan_points(points, |scan, pt| {
                scan.observe(bracket.max_abs_at(pt));
            });
            checks.push(scan.into_check(
                format!("covered-pencil-{i}:{j}"),
                tol,
                points.len(),
                seed,
            ));
        }
    }
    Ok(checks)
}

/// All trace Hamiltonians commute pairwise under every covered bracket:
/// one aggregated check per bracket index k.
#[allow(clippy::too_many_arguments)]
pub fn covered_involution_checks(
    a: &LieAlgebroid,
    pi: &Multivector,
    n: &EndomorphismField,
    index_range: (i64, i64),
    kmax: i64,
    points: &[Vec<f64>],
    tol: f64,
    seed: u64,
) -> Result<Vec<CheckResult>> {
    let h = hamiltonians(n, index_range.0, index_range.1);
    let mut checks = Vec::new();
    for k in 0..=kmax {
        let pi_k = deformed_bivector(pi, n, k)?;
        let (base, w_k) = covered_bivector(a, &pi_k, format!("{}-base", a.name()))?;
        let mut brackets = Vec::new();
        for (i, h_i) in &h {
            for h_j in h.range((i + 1)..).map(|(_, v)| v) {
                brackets.push(poisson_bracket(&base, &w_k, h_i, h_j)?);
            }
        }
        let scan = scan_points(points, |scan, pt| {
            for b in &brackets {
                scan.observe(b.value(pt));
            }
        });
        checks.push(scan.into_check(
            format!("covered-involution-{k}"),
            tol,
            points.len(),
            seed,
        ));
    }
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprlang::parse;
    use crate::sample::sample_points;

    fn field(src: &str, coords: &[&str]) -> ScalarField {
        let names: Vec<String> = coords.iter().map(|s| s.to_string()).collect();
        ScalarField::from_expr(parse(src, &names).unwrap())
    }

    fn canonical_r4() -> (LieAlgebroid, Multivector) {
        let a = LieAlgebroid::tangent(
            "r4",
            vec!["q1".into(), "q2".into(), "p1".into(), "p2".into()],
            vec![(0.5, 1.5); 4],
        )
        .unwrap();
        let pi = Multivector::zero(4, 2)
            .with_component(&[0, 2], ScalarField::one())
            .with_component(&[1, 3], ScalarField::one());
        (a, pi)
    }

    // N = diag(q1, q2, q1, q2) with the canonical pi: torsion-free,
    // compatible, det N = (q1 q2)^2 > 0 on the box.
    fn toy_pair() -> (LieAlgebroid, Multivector, EndomorphismField) {
        let (a, pi) = canonical_r4();
        let coords = ["q1", "q2", "p1", "p2"];
        let mut rows = vec![vec![ScalarField::zero(); 4]; 4];
        rows[0][0] = field("q1", &coords);
        rows[1][1] = field("q2", &coords);
        rows[2][2] = field("q1", &coords);
        rows[3][3] = field("q2", &coords);
        let n = EndomorphismField::from_fields("diag(q1,q2,q1,q2)", rows);
        (a, pi, n)
    }

    #[test]
    fn identity_hamiltonians_and_trivial_fields() {
        let (a, pi) = canonical_r4();
        let n = EndomorphismField::identity(4);
        let h = hamiltonians(&n, -1, 2);
        let pt = [1.0, 1.0, 1.0, 1.0];
        assert_eq!(h[&1].value(&pt).unwrap(), 4.0);
        assert_eq!(h[&2].value(&pt).unwrap(), 2.0);
        assert_eq!(h[&0].value(&pt).unwrap(), 0.0);
        assert_eq!(h[&-1].value(&pt).unwrap(), -4.0);
        for m in 0..3 {
            let x = hierarchy_field(&a, &pi, &n, m).unwrap();
            assert!(x.max_abs_at(&pt).unwrap() < 1e-15);
        }
    }

    #[test]
    fn toy_pair_cross_relations_hold() {
        let (a, pi, n) = toy_pair();
        let pts = sample_points(a.domain(), 12, 21);
        let checks =
            cross_relation_checks(&a, &pi, &n, (-1, 2), (-1, 3), &pts, 1e-10, 21).unwrap();
        assert!(!checks.is_empty());
        for c in &checks {
            assert!(c.pass, "{} residual {}", c.name, c.max_residual);
        }
        // Hand value: tr N = 2(q1+q2), X = -pi#(2dq1 + 2dq2) = -2(d_p1+d_p2);
        // N acts as diag(q1, q2) on the p-slots, so X^(2) = (0,0,-2q1,-2q2).
        let x2 = hierarchy_field(&a, &pi, &n, 2).unwrap();
        let pt = [1.2, 0.8, 1.0, 1.0];
        assert!((x2.component(&[2]).value(&pt).unwrap() + 2.0 * 1.2).abs() < 1e-13);
        assert!((x2.component(&[3]).value(&pt).unwrap() + 2.0 * 0.8).abs() < 1e-13);
        let step = recursion_step_check(&a, &pi, &n, (-1, 3), &pts, 1e-12, 21).unwrap();
        assert!(step.pass);
    }

    #[test]
    fn toy_pair_pencil_commutes_and_twist_breaks_it() {
        let (a, pi, n) = toy_pair();
        let pts = sample_points(a.domain(), 10, 23);
        for c in pairwise_compatibility(&a, &pi, &n, 2, &pts, 1e-10, 23).unwrap() {
            assert!(c.pass, "{} residual {}", c.name, c.max_residual);
        }
        // Swapping the p-block entries breaks skewness of pihat N and the
        // deformed bivector stops being Poisson.
        let coords = ["q1", "q2", "p1", "p2"];
        let mut rows = vec![vec![ScalarField::zero(); 4]; 4];
        rows[0][0] = field("q1", &coords);
        rows[1][1] = field("q2", &coords);
        rows[2][2] = field("q2", &coords);
        rows[3][3] = field("q1", &coords);
        let bad = EndomorphismField::from_fields("twisted", rows);
        let checks = pairwise_compatibility(&a, &pi, &bad, 1, &pts, 1e-10, 23).unwrap();
        let broken = checks.iter().find(|c| c.name == "pencil-1:1").unwrap();
        assert!(broken.max_residual > 1e-3);
    }

    #[test]
    fn covered_machinery_is_identity_on_tangent_algebroid() {
        let (a, pi, n) = toy_pair();
        let pts = sample_points(a.domain(), 8, 25);
        for c in
            covered_cross_checks(&a, &pi, &n, (0, 2), (1, 3), &pts, 1e-10, 25).unwrap()
        {
            assert!(c.pass, "{} residual {}", c.name, c.max_residual);
        }
        for c in covered_compatibility(&a, &pi, &n, 1, &pts, 1e-10, 25).unwrap() {
            assert!(c.pass, "{} residual {}", c.name, c.max_residual);
        }
        for c in
            covered_involution_checks(&a, &pi, &n, (1, 3), 1, &pts, 1e-10, 25).unwrap()
        {
            assert!(c.pass, "{} residual {}", c.name, c.max_residual);
        }
    }
}
