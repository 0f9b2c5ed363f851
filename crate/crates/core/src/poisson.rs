//! Poisson bivectors on an algebroid: brackets, Hamiltonian sections, the
//! dual algebroid, deformed bivectors, and compatibility with a recursion
//! operator.
//!
//! Conventions fixed here and relied on everywhere else: the sharp map is the
//! interior product `pi_sharp(alpha) = i_alpha pi` (first slot), the bracket
//! is `{f,g} = pi(df, dg)`, and the bivector differential on functions is the
//! Schouten bracket `d_pi f = [pi, f]`, which works out to `-pi_sharp(df)`.

use crate::algebroid::LieAlgebroid;
use crate::error::{Error, Result};
use crate::exterior::{AForm, EndomorphismField, Multivector};
use crate::report::{CheckResult, ResidualScan};
use crate::scalar::{CachedMatrix, ScalarField};
use std::collections::BTreeMap;

/// `pi_sharp(alpha) = i_alpha pi`.
pub fn sharp(pi: &Multivector, alpha: &AForm) -> Result<Multivector> {
    pi.interior(alpha)
}

/// The Hamiltonian section of a function: `X_h = pi_sharp(d_A h)`.
pub fn hamiltonian_section(
    a: &LieAlgebroid,
    pi: &Multivector,
    h: &ScalarField,
) -> Result<Multivector> {
    sharp(pi, &a.differential_scalar(h))
}

/// `{f, g} = pi(d_A f, d_A g)`.
pub fn poisson_bracket(
    a: &LieAlgebroid,
    pi: &Multivector,
    f: &ScalarField,
    g: &ScalarField,
) -> Result<ScalarField> {
    let df = a.differential_scalar(f);
    let dg = a.differential_scalar(g);
    pi.pair(&df.wedge(&dg)?)
}

/// The bivector differential on functions, `d_pi f = [pi, f]`.
pub fn d_pi(a: &LieAlgebroid, pi: &Multivector, f: &ScalarField) -> Result<Multivector> {
    a.schouten(pi, &Multivector::from_scalar(a.rank(), f.clone()))
}

/// Residual of `[pi, pi] = 0` over sample points.
pub fn schouten_square_check(
    a: &LieAlgebroid,
    pi: &Multivector,
    points: &[Vec<f64>],
    tol: f64,
    seed: u64,
) -> Result<CheckResult> {
    let square = a.schouten(pi, pi)?;
    let mut scan = ResidualScan::new();
    for pt in points {
        scan.observe(square.max_abs_at(pt));
    }
    Ok(scan.into_check("schouten-square", tol, points.len(), seed))
}

/// Residual of the bracket Jacobi identity on all coordinate triples. An
/// independent route to the same obstruction as the Schouten square: it goes
/// through nested brackets of concrete functions instead of the graded
/// bracket recursion.
pub fn coordinate_jacobi_check(
    a: &LieAlgebroid,
    pi: &Multivector,
    points: &[Vec<f64>],
    tol: f64,
    seed: u64,
) -> Result<CheckResult> {
    let coords: Vec<ScalarField> = a
        .coords()
        .iter()
        .enumerate()
        .map(|(u, name)| ScalarField::coordinate(u, name))
        .collect();
    let mut fields = Vec::new();
    for u in 0..coords.len() {
        for v in u + 1..coords.len() {
            for w in v + 1..coords.len() {
                let cyc = poisson_bracket(
                    a,
                    pi,
                    &coords[u],
                    &poisson_bracket(a, pi, &coords[v], &coords[w])?,
                )?
                .add(&poisson_bracket(
                    a,
                    pi,
                    &coords[v],
                    &poisson_bracket(a, pi, &coords[w], &coords[u])?,
                )?)
                .add(&poisson_bracket(
                    a,
                    pi,
                    &coords[w],
                    &poisson_bracket(a, pi, &coords[u], &coords[v])?,
                )?);
                if !cyc.is_zero() {
                    fields.push(cyc);
                }
            }
        }
    }
    let mut scan = ResidualScan::new();
    for pt in points {
        for f in &fields {
            scan.observe(f.eval(pt, 0).map(|j| j.value().abs()));
        }
    }
    Ok(scan.into_check("bracket-jacobi", tol, points.len(), seed))
}

/// Both Poisson obstructions: the Schouten square and the coordinate-triple
/// Jacobi identity.
pub fn is_poisson_checks(
    a: &LieAlgebroid,
    pi: &Multivector,
    points: &[Vec<f64>],
    tol: f64,
    seed: u64,
) -> Result<Vec<CheckResult>> {
    Ok(vec![
        schouten_square_check(a, pi, points, tol, seed)?,
        coordinate_jacobi_check(a, pi, points, tol, seed)?,
    ])
}

/// The bracket a Poisson bivector induces on 1-forms:
/// `[a, b]_pi = L_{pi# a} b - L_{pi# b} a - d (pi(a, b))`.
pub fn form_bracket(
    a: &LieAlgebroid,
    pi: &Multivector,
    alpha: &AForm,
    beta: &AForm,
) -> Result<AForm> {
    let xa = sharp(pi, alpha)?;
    let xb = sharp(pi, beta)?;
    let first = a.lie_derivative_form(&xa, beta)?;
    let second = a.lie_derivative_form(&xb, alpha)?;
    let scalar = pi.pair(&alpha.wedge(beta)?)?;
    let exact = a.differential_scalar(&scalar);
    first.sub(&second)?.sub(&exact)
}

/// The dual algebroid of a Poisson bivector: the dual bundle with the form
/// bracket on its frame and the anchor `rho o pi_sharp`. Its axioms hold
/// exactly when pi is Poisson.
pub fn dual_algebroid(
    a: &LieAlgebroid,
    pi: &Multivector,
    name: impl Into<String>,
) -> Result<LieAlgebroid> {
    let rank = a.rank();
    let dim = a.dim();
    let pihat = pi.bivector_matrix()?;
    let mut anchor = Vec::with_capacity(rank);
    for i in 0..rank {
        let row = (0..dim)
            .map(|u| {
                ScalarField::sum((0..rank).map(|j| pihat[i][j].mul(&a.anchor_row(j)[u])))
            })
            .collect();
        anchor.push(row);
    }
    let mut structure = BTreeMap::new();
    for i in 0..rank {
        for j in i + 1..rank {
            let ei = AForm::dual_frame_section(rank, i);
            let ej = AForm::dual_frame_section(rank, j);
            let bracket = form_bracket(a, pi, &ei, &ej)?;
            let comps = bracket.covector_components()?;
            if comps.iter().any(|c| !c.is_zero()) {
                structure.insert((i, j), comps);
            }
        }
    }
    let frame = a.frame().iter().map(|f| format!("{f}^*")).collect();
    LieAlgebroid::new(
        name,
        a.coords().to_vec(),
        frame,
        anchor,
        structure,
        a.domain().to_vec(),
    )
}

/// The coefficient matrix of pi as a shared cached matrix.
pub fn bivector_cached_matrix(label: &str, pi: &Multivector) -> Result<CachedMatrix> {
    Ok(CachedMatrix::from_fields(label, pi.bivector_matrix()?))
}

/// The deformed bivector `N^k pi`, defined through its sharp map
/// `(N^k pi)# = N^k o pi#`; its coefficient matrix is `pihat N^k`. The
/// construction reads the upper triangle of that product, so it is a genuine
/// bivector even when the compatibility (skewness of the product) fails;
/// `compatibility_checks` reports that failure separately.
pub fn deformed_bivector(
    pi: &Multivector,
    n: &EndomorphismField,
    k: i64,
) -> Result<Multivector> {
    let rank = pi.rank();
    if n.rank() != rank {
        return Err(Error::Invalid(format!(
            "bivector rank {rank} deformed by endomorphism of rank {}",
            n.rank()
        )));
    }
    if k == 0 {
        return Ok(pi.clone());
    }
    let pihat = bivector_cached_matrix("pihat", pi)?;
    let product = {
        let (p, m) = (pihat, n.power_matrix(k));
        CachedMatrix::new(&format!("pihat.N^{k}"), rank, rank, move |pt, ord| {
            let gp = p.eval(pt, ord)?;
            let gm = m.eval(pt, ord)?;
            let mut out = Vec::with_capacity(rank);
            for i in 0..rank {
                let mut row = Vec::with_capacity(rank);
                for j in 0..rank {
                    let mut acc = crate::jets::Jet::constant(0.0, pt.len(), ord);
                    for l in 0..rank {
                        acc = acc.add(&gp[i][l].mul(&gm[l][j])?)?;
                    }
                    row.push(acc);
                }
                out.push(row);
            }
            Ok(out)
        })
    };
    Ok(Multivector::bivector_from_upper(rank, |i, j| {
        product.entry(i, j)
    }))
}

/// Compatibility of a bivector with an endomorphism, two residual families:
///
/// * `sharp-intertwine`: `N o pi# = pi# o N*`, equivalently skewness of the
///   matrix `pihat N`; the residual is the symmetric part.
/// * `dual-bracket-deformation`: the form bracket of `N pi` equals the
///   N*-deformation of the form bracket of pi, checked on dual frame pairs.
pub fn compatibility_checks(
    a: &LieAlgebroid,
    pi: &Multivector,
    n: &EndomorphismField,
    points: &[Vec<f64>],
    tol: f64,
    seed: u64,
) -> Result<Vec<CheckResult>> {
    let rank = a.rank();
    let pihat = pi.bivector_matrix()?;
    let mut sym_fields = Vec::new();
    for al in 0..rank {
        for b in al..rank {
            let s_ab = ScalarField::sum((0..rank).map(|c| pihat[al][c].mul(&n.entry(c, b))));
            let s_ba = ScalarField::sum((0..rank).map(|c| pihat[b][c].mul(&n.entry(c, al))));
            let res = s_ab.add(&s_ba);
            if !res.is_zero() {
                sym_fields.push(res);
            }
        }
    }
    let mut sym_scan = ResidualScan::new();
    for pt in points {
        for f in &sym_fields {
            sym_scan.observe(f.eval(pt, 0).map(|j| j.value().abs()));
        }
    }

    let npi = deformed_bivector(pi, n, 1)?;
    let mut residuals = Vec::new();
    for i in 0..rank {
        for j in i + 1..rank {
            let ei = AForm::dual_frame_section(rank, i);
            let ej = AForm::dual_frame_section(rank, j);
            let lhs = form_bracket(a, &npi, &ei, &ej)?;
            let rhs = form_bracket(a, pi, &n.pullback(&ei)?, &ej)?
                .add(&form_bracket(a, pi, &ei, &n.pullback(&ej)?)?)?
                .sub(&n.pullback(&form_bracket(a, pi, &ei, &ej)?)?)?;
            residuals.push(lhs.sub(&rhs)?);
        }
    }
    let mut bracket_scan = ResidualScan::new();
    for pt in points {
        for r in &residuals {
            bracket_scan.observe(r.max_abs_at(pt));
        }
    }
    Ok(vec![
        sym_scan.into_check("sharp-intertwine", tol, points.len(), seed),
        bracket_scan.into_check("dual-bracket-deformation", tol, points.len(), seed),
    ])
}

/// The bivector on the base that the anchor pushes pi to:
/// `w^{uv} = {x_u, x_v} = sum_ij rho_i^u pihat^{ij} rho_j^v`, as a bivector
/// on the tangent algebroid of the same patch. When every Hamiltonian of the
/// base structure lifts, this is the covered Poisson structure.
pub fn covered_bivector(
    a: &LieAlgebroid,
    pi: &Multivector,
    name: impl Into<String>,
) -> Result<(LieAlgebroid, Multivector)> {
    let rank = a.rank();
    let dim = a.dim();
    let pihat = pi.bivector_matrix()?;
    let base = LieAlgebroid::tangent(name, a.coords().to_vec(), a.domain().to_vec())?;
    let w = Multivector::bivector_from_upper(dim, |u, v| {
        let mut acc = ScalarField::zero();
        for i in 0..rank {
            for j in 0..rank {
                let t = a.anchor_row(i)[u]
                    .mul(&pihat[i][j])
                    .mul(&a.anchor_row(j)[v]);
                acc = acc.add(&t);
            }
        }
        acc
    });
    Ok((base, w))
}

/// The fiber-linear bivector on the total space of the dual bundle: on
/// coordinates `(x_1..x_n, s_1..s_r)` it has `{s_i, s_j} = sum_k C_ij^k s_k`,
/// `{s_i, x_u} = rho_i^u`, `{x_u, x_v} = 0`. It is Poisson exactly when the
/// algebroid axioms hold, which ties the bracket layer back to the axioms by
/// an independent route.
pub fn fiber_linear_poisson(
    a: &LieAlgebroid,
    fiber_box: (f64, f64),
    name: impl Into<String>,
) -> Result<(LieAlgebroid, Multivector)> {
    let rank = a.rank();
    let dim = a.dim();
    let total = dim + rank;
    let mut coords: Vec<String> = a.coords().to_vec();
    for f in a.frame() {
        coords.push(format!("s_{f}"));
    }
    let mut domain = a.domain().to_vec();
    domain.extend(std::iter::repeat_n(fiber_box, rank));
    let base = LieAlgebroid::tangent(name, coords, domain)?;

    let mut w = Multivector::zero(total, 2);
    for i in 0..rank {
        for j in i + 1..rank {
            let mut acc = ScalarField::zero();
            for k in 0..rank {
                let c = lift_to_total(a.structure_field(i, j, k), dim, total);
                let s_k = ScalarField::coordinate(dim + k, &format!("s{k}"));
                acc = acc.add(&c.mul(&s_k));
            }
            if !acc.is_zero() {
                w = w.with_component(&[dim + i, dim + j], acc);
            }
        }
    }
    for i in 0..rank {
        for u in 0..dim {
            let rho = lift_to_total(a.anchor_row(i)[u].clone(), dim, total);
            if !rho.is_zero() {
                w = w.with_component(&[dim + i, u], rho);
            }
        }
    }
    Ok((base, w))
}

/// Reinterprets a field of the base coordinates as a field on the total
/// space of the dual bundle: jets in the extra fiber variables are constant
/// in those directions.
fn lift_to_total(f: ScalarField, dim: usize, total: usize) -> ScalarField {
    if f.constant_value().is_some() {
        return f;
    }
    ScalarField::from_fn(&format!("lift({})", f.label()), move |pt, ord| {
        if pt.len() != total {
            return Err(Error::PointDimension {
                got: pt.len(),
                expected: total,
            });
        }
        let base_jet = f.eval(&pt[..dim], ord)?;
        base_jet.extend_vars(total)
    })
}
