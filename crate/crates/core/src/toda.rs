//! The open Toda chain in its four equivalent dresses: physical canonical
//! coordinates, extended Flaschka coordinates with their sign involution,
//! the reduced Flaschka tensors on the quotient, and the algebroid picture
//! whose covered tensors reproduce the reduced ones.
//!
//! Conventions that differ from common write-ups, fixed here once: the last
//! extended coordinate is `a_n = e^{q_n}` (not `q_n`), which makes the
//! bracket lists uniform in `a_n`, makes the sign flip `a_n -> -a_n` a
//! Poisson involution for the whole pencil and makes `a_n = 0` a genuine
//! Poisson submanifold. The second trace Hamiltonian is twice the chain
//! Hamiltonian, and the multi-Hamiltonian ladder balances only with
//! `(1/2) ln det N` on the right; dropping the half is a test control.

use crate::algebroid::LieAlgebroid;
use crate::error::{Error, Result};
use crate::exterior::{
    matrix_inverse, matrix_product, EndomorphismField, Multivector,
};
use crate::poisson::{bivector_cached_matrix, deformed_bivector, sharp};
use crate::report::{CheckResult, ResidualScan};
use crate::scalar::ScalarField;

/// Toda in canonical coordinates `(q_1..q_n, p_1..p_n)`: the canonical
/// symplectic tensor, the quadratic second tensor, the recursion operator
/// with explicit entries, and the first two chain Hamiltonians.
pub struct TodaPhysical {
    pub sites: usize,
    pub algebroid: LieAlgebroid,
    pub pi0: Multivector,
    pub pi1: Multivector,
    pub n: EndomorphismField,
    pub h1: ScalarField,
    pub h2: ScalarField,
}

/// Extended Flaschka coordinates `(a_1..a_n, b_1..b_n)`; both tensors, and
/// the recursion operator materialized by a pointwise jet solve.
pub struct TodaExtended {
    pub sites: usize,
    pub algebroid: LieAlgebroid,
    pub pi0: Multivector,
    pub pi1: Multivector,
    pub n: EndomorphismField,
}

/// Reduced Flaschka tensors on `(a_1..a_{n-1}, b_1..b_n)`, obtained from the
/// extended ones by freezing `a_n = 0` and deleting its row and column.
pub struct TodaReduced {
    pub sites: usize,
    pub algebroid: LieAlgebroid,
    pub pi0: Multivector,
    pub pi1: Multivector,
}

/// The algebroid formulation: trivial bundle of rank 2n over the reduced
/// coordinate space, zero brackets, anchor spanning all base directions
/// except through `e_n`, and the pair of fiber tensors covering the reduced
/// Flaschka ones.
pub struct TodaAlgebroid {
    pub sites: usize,
    pub algebroid: LieAlgebroid,
    pub pi0: Multivector,
    pub pi1: Multivector,
    pub n: EndomorphismField,
}

fn need_sites(sites: usize) -> Result<()> {
    if sites < 2 {
        return Err(Error::Invalid(format!(
            "the chain needs at least two sites, got {sites}"
        )));
    }
    Ok(())
}

fn coord(names: &[String], u: usize) -> ScalarField {
    ScalarField::coordinate(u, &names[u])
}

pub fn toda_physical(sites: usize) -> Result<TodaPhysical> {
    need_sites(sites)?;
    let n = sites;
    let mut coords = Vec::with_capacity(2 * n);
    for i in 1..=n {
        coords.push(format!("q{i}"));
    }
    for i in 1..=n {
        coords.push(format!("p{i}"));
    }
    // The box keeps det N bounded away from zero so that ln det N and the
    // negative hierarchy indices stay regular on every sample.
    let q_half = if n == 2 { 0.5 } else { 0.4 };
    let mut domain = vec![(-q_half, q_half); n];
    domain.extend(vec![(-0.3, 0.3); n]);
    let algebroid = LieAlgebroid::tangent(format!("toda-physical-{n}"), coords.clone(), domain)?;

    let mut pi0 = Multivector::zero(2 * n, 2);
    for i in 0..n {
        pi0 = pi0.with_component(&[i, n + i], ScalarField::one());
    }
    let mut pi1 = Multivector::zero(2 * n, 2);
    for i in 0..n {
        for j in i + 1..n {
            pi1 = pi1.with_component(&[i, j], ScalarField::constant(-1.0));
        }
        pi1 = pi1.with_component(&[i, n + i], coord(&coords, n + i));
    }
    for i in 0..n - 1 {
        let gap = coord(&coords, i).sub(&coord(&coords, i + 1)).exp();
        pi1 = pi1.with_component(&[n + i, n + i + 1], gap.neg());
    }

    // pihat0 is the constant symplectic matrix, so N = pihat0^{-1} pihat1 is
    // a row rearrangement of pihat1 with explicit entries.
    let full = pi1.bivector_matrix()?;
    let mut rows = Vec::with_capacity(2 * n);
    for i in 0..n {
        rows.push(full[n + i].iter().map(|f| f.neg()).collect::<Vec<_>>());
    }
    for i in 0..n {
        rows.push(full[i].clone());
    }
    let nij = EndomorphismField::from_fields("toda-N", rows);

    let h1 = ScalarField::sum((0..n).map(|i| coord(&coords, n + i)));
    let kinetic = ScalarField::sum(
        (0..n).map(|i| coord(&coords, n + i).mul(&coord(&coords, n + i)).scale(0.5)),
    );
    let potential = ScalarField::sum(
        (0..n - 1).map(|i| coord(&coords, i).sub(&coord(&coords, i + 1)).exp()),
    );
    let h2 = kinetic.add(&potential);

    Ok(TodaPhysical {
        sites: n,
        algebroid,
        pi0,
        pi1,
        n: nij,
        h1,
        h2,
    })
}

/// `pi0# d h2 = pi1# d h1`: the chain's original bi-Hamiltonian split.
pub fn bihamiltonian_check(
    sys: &TodaPhysical,
    points: &[Vec<f64>],
    tol: f64,
    seed: u64,
) -> Result<CheckResult> {
    let lhs = sharp(&sys.pi0, &sys.algebroid.differential_scalar(&sys.h2))?;
    let rhs = sharp(&sys.pi1, &sys.algebroid.differential_scalar(&sys.h1))?;
    let diff = lhs.sub(&rhs)?;
    let mut scan = ResidualScan::new();
    for pt in points {
        scan.observe(diff.max_abs_at(pt));
    }
    Ok(scan.into_check("toda-bihamiltonian", tol, points.len(), seed))
}

/// The multi-Hamiltonian ladder `pi_j# d h2 = pi_{j+2}# d (factor ln det N)`
/// with `pi_k = N^k pi0`. The identity holds with factor 1/2 (the trace
/// Hamiltonians are twice the chain ones); any other factor is a control
/// that must fail.
pub fn toda_multi_check(
    sys: &TodaPhysical,
    j: i64,
    factor: f64,
    points: &[Vec<f64>],
    tol: f64,
    seed: u64,
) -> Result<CheckResult> {
    let pi_j = deformed_bivector(&sys.pi0, &sys.n, j)?;
    let pi_j2 = deformed_bivector(&sys.pi0, &sys.n, j + 2)?;
    let h0 = sys.n.det_field().ln().scale(factor);
    let lhs = sharp(&pi_j, &sys.algebroid.differential_scalar(&sys.h2))?;
    let rhs = sharp(&pi_j2, &sys.algebroid.differential_scalar(&h0))?;
    let diff = lhs.sub(&rhs)?;
    let mut scan = ResidualScan::new();
    for pt in points {
        scan.observe(diff.max_abs_at(pt));
    }
    Ok(scan.into_check(format!("toda-multi-{j}"), tol, points.len(), seed))
}

pub fn toda_extended(sites: usize) -> Result<TodaExtended> {
    need_sites(sites)?;
    let n = sites;
    let mut coords = Vec::with_capacity(2 * n);
    for i in 1..=n {
        coords.push(format!("a{i}"));
    }
    for i in 1..=n {
        coords.push(format!("b{i}"));
    }
    let mut domain = vec![(0.2, 2.0); n];
    domain.extend(vec![(-1.0, 1.0); n]);
    let algebroid = LieAlgebroid::tangent(format!("toda-extended-{n}"), coords.clone(), domain)?;

    let mut pi0 = Multivector::zero(2 * n, 2);
    for i in 0..n {
        pi0 = pi0.with_component(&[i, n + i], coord(&coords, i));
    }
    for i in 0..n - 1 {
        pi0 = pi0.with_component(&[i, n + i + 1], coord(&coords, i).neg());
    }

    let mut pi1 = Multivector::zero(2 * n, 2);
    for i in 0..n - 1 {
        pi1 = pi1.with_component(&[i, i + 1], coord(&coords, i).mul(&coord(&coords, i + 1)).neg());
        pi1 = pi1.with_component(&[i, n + i + 1], coord(&coords, i).mul(&coord(&coords, n + i + 1)).neg());
        pi1 = pi1.with_component(&[n + i, n + i + 1], coord(&coords, i).neg());
    }
    for i in 0..n {
        pi1 = pi1.with_component(&[i, n + i], coord(&coords, i).mul(&coord(&coords, n + i)));
    }

    let p0 = bivector_cached_matrix("ext-pi0", &pi0)?;
    let p1 = bivector_cached_matrix("ext-pi1", &pi1)?;
    let nij = EndomorphismField::from_matrix(matrix_product(
        "ext-N",
        &matrix_inverse("ext-pi0-inv", &p0),
        &p1,
    ));

    Ok(TodaExtended {
        sites: n,
        algebroid,
        pi0,
        pi1,
        n: nij,
    })
}

/// The sign flip of the last `a` coordinate pushes both extended tensors to
/// themselves: `(phi_* w)^{uv}(phi x) = s_u s_v w^{uv}(x)` must equal
/// `w^{uv}(phi x)`.
pub fn involution_checks(
    ext: &TodaExtended,
    points: &[Vec<f64>],
    tol: f64,
    seed: u64,
) -> Result<Vec<CheckResult>> {
    let dim = 2 * ext.sites;
    let flip = ext.sites - 1;
    let sign = |u: usize| if u == flip { -1.0 } else { 1.0 };
    let mut checks = Vec::new();
    for (name, pi) in [("involution-pi0", &ext.pi0), ("involution-pi1", &ext.pi1)] {
        let m = pi.bivector_matrix()?;
        let mut scan = ResidualScan::new();
        for pt in points {
            let mut mapped = pt.clone();
            mapped[flip] = -mapped[flip];
            for u in 0..dim {
                for (off, field) in m[u][u + 1..].iter().enumerate() {
                    let s = sign(u) * sign(u + 1 + off);
                    scan.observe(
                        field
                            .value(pt)
                            .and_then(|here| Ok((s * here - field.value(&mapped)?).abs())),
                    );
                }
            }
        }
        checks.push(scan.into_check(name, tol, points.len(), seed));
    }
    Ok(checks)
}

fn frozen(field: &ScalarField, at: usize) -> ScalarField {
    let inner = field.clone();
    ScalarField::from_fn(&format!("{}|an=0", field.label()), move |pt, order| {
        let mut full = Vec::with_capacity(pt.len() + 1);
        full.extend_from_slice(&pt[..at]);
        full.push(0.0);
        full.extend_from_slice(&pt[at..]);
        inner.eval(&full, order)?.drop_var(at)
    })
}

pub fn toda_reduced(sites: usize) -> Result<TodaReduced> {
    let ext = toda_extended(sites)?;
    let n = sites;
    let cut = n - 1;
    let mut coords = Vec::with_capacity(2 * n - 1);
    for i in 1..n {
        coords.push(format!("a{i}"));
    }
    for i in 1..=n {
        coords.push(format!("b{i}"));
    }
    let mut domain = vec![(0.2, 2.0); n - 1];
    domain.extend(vec![(-1.0, 1.0); n]);
    let algebroid = LieAlgebroid::tangent(format!("toda-flaschka-{n}"), coords, domain)?;

    let reduce = |pi: &Multivector| {
        let mut out = Multivector::zero(2 * n - 1, 2);
        for (indices, field) in pi.components() {
            let (u, v) = (indices[0], indices[1]);
            if u == cut || v == cut {
                continue;
            }
            let shift = |w: usize| if w > cut { w - 1 } else { w };
            out = out.with_component(&[shift(u), shift(v)], frozen(field, cut));
        }
        out
    };
    let pi0 = reduce(&ext.pi0);
    let pi1 = reduce(&ext.pi1);
    Ok(TodaReduced {
        sites: n,
        algebroid,
        pi0,
        pi1,
    })
}

/// The asymmetric Lax matrix in reduced coordinates: `b_i` on the diagonal,
/// `a_i` above it, ones below it. Its traces generate the chain integrals.
pub fn lax_matrix(sites: usize) -> Result<Vec<Vec<ScalarField>>> {
    need_sites(sites)?;
    let n = sites;
    let b = |i: usize| ScalarField::coordinate(n - 1 + i, &format!("b{}", i + 1));
    let a = |i: usize| ScalarField::coordinate(i, &format!("a{}", i + 1));
    let mut l = vec![vec![ScalarField::zero(); n]; n];
    for i in 0..n {
        l[i][i] = b(i);
        if i + 1 < n {
            l[i][i + 1] = a(i);
            l[i + 1][i] = ScalarField::one();
        }
    }
    Ok(l)
}

fn sf_matrix_mul(x: &[Vec<ScalarField>], y: &[Vec<ScalarField>]) -> Vec<Vec<ScalarField>> {
    let n = x.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| ScalarField::sum((0..n).map(|k| x[i][k].mul(&y[k][j]))))
                .collect()
        })
        .collect()
}

/// Trace integrals of the Lax matrix: `h_k = (1/k) tr L^k` for k >= 1 and
/// `h_0 = ln det L` (defined where the continuant is positive).
pub fn lax_hamiltonians(sites: usize, kmax: usize) -> Result<Vec<(String, ScalarField)>> {
    let l = lax_matrix(sites)?;
    let n = sites;
    // Tridiagonal determinant by the continuant recurrence
    // D_k = b_k D_{k-1} - a_{k-1} D_{k-2}.
    let mut d_prev = ScalarField::one();
    let mut det = l[0][0].clone();
    for k in 1..n {
        let next = l[k][k].mul(&det).sub(&l[k - 1][k].mul(&l[k][k - 1]).mul(&d_prev));
        d_prev = det;
        det = next;
    }
    let mut out = vec![("h0".to_string(), det.ln())];
    let mut power = l.clone();
    for k in 1..=kmax {
        if k > 1 {
            power = sf_matrix_mul(&power, &l);
        }
        let trace = ScalarField::sum((0..n).map(|i| power[i][i].clone()));
        out.push((format!("h{k}"), trace.scale(1.0 / k as f64)));
    }
    Ok(out)
}

pub fn toda_algebroid(sites: usize) -> Result<TodaAlgebroid> {
    need_sites(sites)?;
    let n = sites;
    let mut coords = Vec::with_capacity(2 * n - 1);
    for i in 1..n {
        coords.push(format!("a{i}"));
    }
    for i in 1..=n {
        coords.push(format!("b{i}"));
    }
    let mut frame = Vec::with_capacity(2 * n);
    for i in 1..=n {
        frame.push(format!("e{i}"));
    }
    for i in 1..=n {
        frame.push(format!("f{i}"));
    }
    let dim = 2 * n - 1;
    let mut anchor = vec![vec![ScalarField::zero(); dim]; 2 * n];
    for i in 0..n - 1 {
        anchor[i][i] = ScalarField::one();
    }
    for i in 0..n {
        anchor[n + i][n - 1 + i] = ScalarField::one();
    }
    let mut domain = vec![(0.2, 2.0); n - 1];
    domain.extend(vec![(-1.0, 1.0); n]);
    let algebroid = LieAlgebroid::new(
        format!("toda-algebroid-{n}"),
        coords.clone(),
        frame,
        anchor,
        Default::default(),
        domain,
    )?;

    let a = |i: usize| coord(&coords, i);
    let b = |i: usize| coord(&coords, n - 1 + i);
    let mut pi0 = Multivector::zero(2 * n, 2);
    for i in 0..n - 1 {
        pi0 = pi0.with_component(&[i, n + i], a(i));
        pi0 = pi0.with_component(&[i, n + i + 1], a(i).neg());
    }
    pi0 = pi0.with_component(&[n - 1, 2 * n - 1], ScalarField::one());

    let mut pi1 = Multivector::zero(2 * n, 2);
    for i in 0..n.saturating_sub(2) {
        pi1 = pi1.with_component(&[i, i + 1], a(i).mul(&a(i + 1)).neg());
    }
    pi1 = pi1.with_component(&[n - 2, n - 1], a(n - 2).neg());
    for i in 0..n - 1 {
        pi1 = pi1.with_component(&[i, n + i], a(i).mul(&b(i)));
        pi1 = pi1.with_component(&[i, n + i + 1], a(i).mul(&b(i + 1)).neg());
        pi1 = pi1.with_component(&[n + i, n + i + 1], a(i).neg());
    }
    pi1 = pi1.with_component(&[n - 1, 2 * n - 1], b(n - 1));

    let p0 = bivector_cached_matrix("alg-pi0", &pi0)?;
    let p1 = bivector_cached_matrix("alg-pi1", &pi1)?;
    let nij = EndomorphismField::from_matrix(matrix_product(
        "alg-N",
        &matrix_inverse("alg-pi0-inv", &p0),
        &p1,
    ));

    Ok(TodaAlgebroid {
        sites: n,
        algebroid,
        pi0,
        pi1,
        n: nij,
    })
}

/// Numeric rank of a bivector at a point, by Gaussian elimination with a
/// pivot threshold.
pub fn pointwise_rank(pi: &Multivector, pt: &[f64], tol: f64) -> Result<usize> {
    let fields = pi.bivector_matrix()?;
    let dim = fields.len();
    let mut m = vec![vec![0.0f64; dim]; dim];
    for (i, row) in fields.iter().enumerate() {
        for (j, f) in row.iter().enumerate() {
            m[i][j] = f.value(pt)?;
        }
    }
    let mut rank = 0;
    let mut row = 0;
    for col in 0..dim {
        let (best, mag) = (row..dim)
            .map(|r| (r, m[r][col].abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap_or((row, 0.0));
        if mag <= tol {
            continue;
        }
        m.swap(row, best);
        for r in row + 1..dim {
            let factor = m[r][col] / m[row][col];
            for c in col..dim {
                m[r][c] -= factor * m[row][c];
            }
        }
        rank += 1;
        row += 1;
        if row == dim {
            break;
        }
    }
    Ok(rank)
}

/// The reduced-coordinate image of a physical point:
/// `a_i = e^{q_i - q_{i+1}}, b_i = p_i`.
pub fn flaschka_map(sites: usize, qp: &[f64]) -> Vec<f64> {
    let n = sites;
    let mut out = Vec::with_capacity(2 * n - 1);
    for i in 0..n - 1 {
        out.push((qp[i] - qp[i + 1]).exp());
    }
    out.extend_from_slice(&qp[n..2 * n]);
    out
}

/// Named formulations exposed on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Formulation {
    Physical,
    Extended,
    Flaschka,
    Algebroid,
}

/// Parses `toda-<formulation>[-<sites>]`; the site count defaults to 3.
pub fn parse_example(name: &str) -> Option<(Formulation, usize)> {
    let rest = name.strip_prefix("toda-")?;
    let (word, sites) = match rest.rsplit_once('-') {
        Some((w, digits)) if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) => {
            (w, digits.parse().ok()?)
        }
        _ => (rest, 3),
    };
    let f = match word {
        "physical" => Formulation::Physical,
        "extended" => Formulation::Extended,
        "flaschka" => Formulation::Flaschka,
        "algebroid" => Formulation::Algebroid,
        _ => return None,
    };
    Some((f, sites))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::cross_relation_checks;
    use crate::nijenhuis::torsion_check;
    use crate::poisson::{compatibility_checks, covered_bivector, is_poisson_checks};
    use crate::sample::sample_points;

    #[test]
    fn origin_oracle_for_two_sites() {
        let sys = toda_physical(2).unwrap();
        let origin = [0.0; 4];
        let expected = [
            [0.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, -1.0, 0.0],
            [0.0, -1.0, 0.0, 0.0],
            [1.0, 0.0, 0.0, 0.0],
        ];
        for i in 0..4 {
            for j in 0..4 {
                let got = sys.n.entry(i, j).value(&origin).unwrap();
                assert!(
                    (got - expected[i][j]).abs() < 1e-12,
                    "N[{i}][{j}] = {got}"
                );
            }
        }
        assert!(sys.n.trace().value(&origin).unwrap().abs() < 1e-12);
        assert!((sys.n.power(2).trace().value(&origin).unwrap() - 4.0).abs() < 1e-12);
        assert!((sys.n.det_field().value(&origin).unwrap() - 1.0).abs() < 1e-12);
        assert!(sys.n.det_field().ln().value(&origin).unwrap().abs() < 1e-12);
        // Half the squared trace is twice the chain Hamiltonian.
        assert!((sys.h2.value(&origin).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn modular_field_at_origin_with_difference_oracle() {
        let sys = toda_physical(2).unwrap();
        let trace = sys.n.trace();
        let origin = [0.0; 4];
        // Independent gradient of tr N by central differences.
        let h = 1e-5;
        let mut grad = [0.0; 4];
        for (u, g) in grad.iter_mut().enumerate() {
            let mut fwd = origin;
            let mut bwd = origin;
            fwd[u] += h;
            bwd[u] -= h;
            *g = (trace.value(&fwd).unwrap() - trace.value(&bwd).unwrap()) / (2.0 * h);
        }
        // X = -pi0# d tr N; with the canonical matrix that sends the
        // gradient (0,0,2,2) to (2,2,0,0).
        let x = crate::hierarchy::modular_root(&sys.algebroid, &sys.pi0, &sys.n).unwrap();
        let expected = [grad[2], grad[3], -grad[0], -grad[1]];
        for u in 0..4 {
            let got = x.component(&[u]).value(&origin).unwrap();
            assert!((got - expected[u]).abs() < 1e-9, "component {u}: {got}");
        }
        assert!((x.component(&[0]).value(&origin).unwrap() - 2.0).abs() < 1e-12);
        assert!((x.component(&[1]).value(&origin).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn physical_pair_is_bihamiltonian_and_torsion_free() {
        let sys = toda_physical(2).unwrap();
        let pts = sample_points(sys.algebroid.domain(), 20, 31);
        let bi = bihamiltonian_check(&sys, &pts, 1e-9, 31).unwrap();
        assert!(bi.pass, "residual {}", bi.max_residual);
        let t = torsion_check(&sys.algebroid, &sys.n, &pts, 1e-8, 31).unwrap();
        assert!(t.pass, "residual {}", t.max_residual);
        for c in compatibility_checks(&sys.algebroid, &sys.pi0, &sys.n, &pts, 1e-8, 31).unwrap() {
            assert!(c.pass, "{} residual {}", c.name, c.max_residual);
        }
    }

    #[test]
    fn multi_hamiltonian_ladder_needs_the_half() {
        let sys = toda_physical(2).unwrap();
        let pts = sample_points(sys.algebroid.domain(), 15, 33);
        let good = toda_multi_check(&sys, 0, 0.5, &pts, 1e-8, 33).unwrap();
        assert!(good.pass, "residual {}", good.max_residual);
        let bad = toda_multi_check(&sys, 0, 1.0, &pts, 1e-8, 33).unwrap();
        assert!(bad.max_residual > 1e-3, "residual {}", bad.max_residual);
    }

    #[test]
    fn extended_tensors_are_poisson_and_involution_equivariant() {
        let ext = toda_extended(2).unwrap();
        let pts = sample_points(ext.algebroid.domain(), 20, 35);
        for pi in [&ext.pi0, &ext.pi1] {
            for c in is_poisson_checks(&ext.algebroid, pi, &pts, 1e-9, 35).unwrap() {
                assert!(c.pass, "{} residual {}", c.name, c.max_residual);
            }
        }
        for c in involution_checks(&ext, &pts, 1e-12, 35).unwrap() {
            assert!(c.pass, "{} residual {}", c.name, c.max_residual);
        }
    }

    #[test]
    fn freezing_hyperplane_is_not_recursion_invariant() {
        // Vectors tangent to a_n = 0 are carried out of it by N: some entry
        // of column a_n over the non-a_n rows is nonzero.
        let ext = toda_extended(2).unwrap();
        let pt = [0.9, 0.7, 0.4, -0.2];
        let flip = ext.sites - 1;
        let mut worst: f64 = 0.0;
        for row in 0..2 * ext.sites {
            if row == flip {
                continue;
            }
            worst = worst.max(ext.n.entry(row, flip).value(&pt).unwrap().abs());
        }
        assert!(worst > 1e-6, "column stays zero: {worst}");
    }

    #[test]
    fn reduced_tensors_match_hand_lists_and_stay_poisson() {
        let red = toda_reduced(2).unwrap();
        let pt = [0.7, 0.3, -0.2];
        assert!((red.pi0.component(&[0, 1]).value(&pt).unwrap() - 0.7).abs() < 1e-14);
        assert!((red.pi0.component(&[0, 2]).value(&pt).unwrap() + 0.7).abs() < 1e-14);
        assert!(red.pi0.component(&[1, 2]).value(&pt).unwrap().abs() < 1e-14);
        let pts = sample_points(red.algebroid.domain(), 20, 37);
        for pi in [&red.pi0, &red.pi1] {
            for c in is_poisson_checks(&red.algebroid, pi, &pts, 1e-9, 37).unwrap() {
                assert!(c.pass, "{} residual {}", c.name, c.max_residual);
            }
        }
        // Odd-dimensional skew matrices are singular: rank 2n-2, det 0.
        for pt in &pts {
            assert_eq!(pointwise_rank(&red.pi0, pt, 1e-10).unwrap(), 2);
        }
    }

    #[test]
    fn algebroid_covers_the_reduced_tensors() {
        let alg = toda_algebroid(2).unwrap();
        let red = toda_reduced(2).unwrap();
        let pts = sample_points(alg.algebroid.domain(), 20, 39);
        for c in alg.algebroid.validate_axioms(&pts, 1e-10, 39).unwrap() {
            assert!(c.pass, "{} residual {}", c.name, c.max_residual);
        }
        for (pi, reduced) in [(&alg.pi0, &red.pi0), (&alg.pi1, &red.pi1)] {
            let (_, w) = covered_bivector(&alg.algebroid, pi, "base").unwrap();
            let diff = w.sub(reduced).unwrap();
            for pt in &pts {
                assert!(diff.max_abs_at(pt).unwrap() < 1e-10);
            }
        }
        for c in compatibility_checks(&alg.algebroid, &alg.pi0, &alg.n, &pts, 1e-8, 39).unwrap() {
            assert!(c.pass, "{} residual {}", c.name, c.max_residual);
        }
    }

    #[test]
    fn algebroid_hierarchy_cross_relations() {
        let alg = toda_algebroid(2).unwrap();
        // Narrower box: det N = (a1 - b1 b2)^2 must stay away from zero for
        // the index-0 and negative members.
        let box_ = vec![(0.5, 1.5), (-0.4, 0.4), (-0.4, 0.4)];
        let pts = sample_points(&box_, 12, 41);
        let checks = cross_relation_checks(
            &alg.algebroid,
            &alg.pi0,
            &alg.n,
            (-1, 3),
            (2, 2),
            &pts,
            1e-8,
            41,
        )
        .unwrap();
        assert_eq!(checks.len(), 3);
        for c in &checks {
            assert!(c.pass, "{} residual {}", c.name, c.max_residual);
        }
    }

    #[test]
    fn trace_integrals_agree_across_formulations() {
        let phys = toda_physical(2).unwrap();
        let alg = toda_algebroid(2).unwrap();
        let pts = sample_points(phys.algebroid.domain(), 10, 43);
        for qp in &pts {
            let ab = flaschka_map(2, qp);
            for k in 1..=3 {
                let phys_trace = phys.n.power(k).trace().value(qp).unwrap();
                let alg_trace = alg.n.power(k).trace().value(&ab).unwrap();
                assert!(
                    (phys_trace - alg_trace).abs() < 1e-8,
                    "k={k}: {phys_trace} vs {alg_trace}"
                );
            }
            // Half of tr N^2 is twice the chain Hamiltonian at mapped points.
            let half_sq = 0.5 * alg.n.power(2).trace().value(&ab).unwrap();
            let h2 = phys.h2.value(qp).unwrap();
            assert!((half_sq - 2.0 * h2).abs() < 1e-8);
        }
    }

    #[test]
    fn lax_traces_reproduce_the_chain_hamiltonian() {
        let h = lax_hamiltonians(3, 3).unwrap();
        let red = toda_reduced(3).unwrap();
        let pts = sample_points(red.algebroid.domain(), 8, 45);
        // names come out as h0, h1, h2, h3
        assert_eq!(h[0].0, "h0");
        assert_eq!(h[2].0, "h2");
        let phys = toda_physical(3).unwrap();
        let qp_pts = sample_points(phys.algebroid.domain(), 8, 45);
        for qp in &qp_pts {
            let ab = flaschka_map(3, qp);
            let lax_h2 = h[2].1.value(&ab).unwrap();
            let chain = phys.h2.value(qp).unwrap();
            assert!((lax_h2 - chain).abs() < 1e-10, "{lax_h2} vs {chain}");
        }
        for pt in &pts {
            assert!(h[1].1.value(pt).is_ok());
        }
    }

    #[test]
    fn example_names_parse() {
        assert_eq!(
            parse_example("toda-physical-4"),
            Some((Formulation::Physical, 4))
        );
        assert_eq!(
            parse_example("toda-algebroid"),
            Some((Formulation::Algebroid, 3))
        );
        assert_eq!(
            parse_example("toda-flaschka-2"),
            Some((Formulation::Flaschka, 2))
        );
        assert_eq!(parse_example("toda-periodic-3"), None);
        assert_eq!(parse_example("oscillator"), None);
    }
}
