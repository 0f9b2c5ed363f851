//! Modular forms of an algebroid and their behavior under deformation.
//!
//! With respect to the frame volume `eta = e_1 ^ ... ^ e_r` and the Lebesgue
//! measure of the patch, the modular form is the 1-form
//! `xi(e_j) = sum_k C_jk^k + div rho(e_j)`. It is closed, changes by the
//! exact form `d log f` when the frame volume is rescaled by f, and under a
//! torsion-free deformation N obeys `xi_{A_N} = d tr N + N* xi_A`. On the
//! dual side of a Poisson structure those facts combine into the modular
//! section of a compatible pair, `d_pi tr N`, which is checked against its
//! dual-algebroid expression here.

use crate::algebroid::LieAlgebroid;
use crate::error::Result;
use crate::exterior::{AForm, EndomorphismField, Multivector};
use crate::nijenhuis::deform;
use crate::poisson::{d_pi, deformed_bivector, dual_algebroid};
use crate::report::{CheckResult, ResidualScan};
use crate::scalar::ScalarField;

/// How to compute the fiber half of the modular form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModularMethod {
    /// Extract the top coefficient of the Schouten bracket `[e_j, eta]`.
    Definition,
    /// Read the contracted structure functions `sum_k C_jk^k` directly.
    LocalFormula,
}

fn divergence(a: &LieAlgebroid, j: usize) -> ScalarField {
    ScalarField::sum(
        (0..a.dim()).map(|u| a.anchor_row(j)[u].partial(u)),
    )
}

/// Modular form with respect to `f * e_1 ^ ... ^ e_r` and Lebesgue measure.
/// `f` must be nowhere zero on the domain; pass a constant one for the plain
/// frame volume.
pub fn modular_form_rescaled(
    a: &LieAlgebroid,
    f: &ScalarField,
    method: ModularMethod,
) -> Result<AForm> {
    let rank = a.rank();
    let top: Vec<usize> = (0..rank).collect();
    let mut comps = Vec::with_capacity(rank);
    for j in 0..rank {
        let fiber = match method {
            ModularMethod::Definition => {
                let eta = Multivector::zero(rank, rank).with_component(&top, f.clone());
                let e_j = Multivector::frame_section(rank, j);
                let bracket = a.schouten(&e_j, &eta)?;
                bracket.component(&top).mul(&f.recip())
            }
            ModularMethod::LocalFormula => {
                let contracted = ScalarField::sum(
                    (0..rank).map(|k| a.structure_field(j, k, k)),
                );
                contracted.add(&a.anchor_action(j, f).mul(&f.recip()))
            }
        };
        comps.push(fiber.add(&divergence(a, j)));
    }
    Ok(AForm::from_covector_components(comps))
}

/// Modular form with respect to the plain frame volume.
pub fn modular_form(a: &LieAlgebroid, method: ModularMethod) -> Result<AForm> {
    modular_form_rescaled(a, &ScalarField::one(), method)
}

/// The Schouten route and the local formula must agree pointwise.
pub fn methods_agree_check(
    a: &LieAlgebroid,
    points: &[Vec<f64>],
    tol: f64,
    seed: u64,
) -> Result<CheckResult> {
    let lhs = modular_form(a, ModularMethod::Definition)?;
    let rhs = modular_form(a, ModularMethod::LocalFormula)?;
    let diff = lhs.sub(&rhs)?;
    let mut scan = ResidualScan::new();
    for pt in points {
        scan.observe(diff.max_abs_at(pt));
    }
    Ok(scan.into_check("modular-methods", tol, points.len(), seed))
}

/// The modular form is a cocycle: `d_A xi = 0`.
pub fn closedness_check(
    a: &LieAlgebroid,
    points: &[Vec<f64>],
    tol: f64,
    seed: u64,
) -> Result<CheckResult> {
    let xi = modular_form(a, ModularMethod::LocalFormula)?;
    let dxi = a.differential(&xi)?;
    let mut scan = ResidualScan::new();
    for pt in points {
        scan.observe(dxi.max_abs_at(pt));
    }
    Ok(scan.into_check("modular-closed", tol, points.len(), seed))
}

/// Rescaling the frame volume by f shifts the modular form by the exact form
/// `d_A log f = (1/f) d_A f`.
pub fn rescale_check(
    a: &LieAlgebroid,
    f: &ScalarField,
    points: &[Vec<f64>],
    tol: f64,
    seed: u64,
) -> Result<CheckResult> {
    let rescaled = modular_form_rescaled(a, f, ModularMethod::Definition)?;
    let base = modular_form(a, ModularMethod::Definition)?;
    let shift = a.differential_scalar(f).scale_field(&f.recip());
    let expected = base.add(&shift)?;
    let diff = rescaled.sub(&expected)?;
    let mut scan = ResidualScan::new();
    for pt in points {
        scan.observe(diff.max_abs_at(pt));
    }
    Ok(scan.into_check("modular-rescale", tol, points.len(), seed))
}

/// For a torsion-free N: `xi_{A_N} = d_A tr N + N* xi_A`.
pub fn deformation_check(
    a: &LieAlgebroid,
    n: &EndomorphismField,
    points: &[Vec<f64>],
    tol: f64,
    seed: u64,
) -> Result<CheckResult> {
    let deformed = deform(a, n, format!("{}-deformed", a.name()))?;
    let lhs = modular_form(&deformed, ModularMethod::LocalFormula)?;
    let xi = modular_form(a, ModularMethod::LocalFormula)?;
    let rhs = a
        .differential_scalar(&n.trace())
        .add(&n.pullback(&xi)?)?;
    let diff = lhs.sub(&rhs)?;
    let mut scan = ResidualScan::new();
    for pt in points {
        scan.observe(diff.max_abs_at(pt));
    }
    Ok(scan.into_check("modular-deformation", tol, points.len(), seed))
}

/// Canonical representative of the relative modular class of the deformed
/// algebroid against the original: `d_A tr N`. The pairing with
/// `deformation_check` is what makes it a representative.
pub fn relative_modular_rep(a: &LieAlgebroid, n: &EndomorphismField) -> AForm {
    a.differential_scalar(&n.trace())
}

/// The modular vector field of a compatible pair: `d_pi tr N`, a section of
/// the bundle (equivalently `-pi# d_A tr N`).
pub fn pn_modular_vector_field(
    a: &LieAlgebroid,
    pi: &Multivector,
    n: &EndomorphismField,
) -> Result<Multivector> {
    d_pi(a, pi, &n.trace())
}

/// The modular vector field is a cocycle of the deformed bivector:
/// `[N pi, d_pi tr N] = 0`.
pub fn cocycle_check(
    a: &LieAlgebroid,
    pi: &Multivector,
    n: &EndomorphismField,
    points: &[Vec<f64>],
    tol: f64,
    seed: u64,
) -> Result<CheckResult> {
    let x = pn_modular_vector_field(a, pi, n)?;
    let npi = deformed_bivector(pi, n, 1)?;
    let bracket = a.schouten(&npi, &x)?;
    let mut scan = ResidualScan::new();
    for pt in points {
        scan.observe(bracket.max_abs_at(pt));
    }
    Ok(scan.into_check("modular-cocycle", tol, points.len(), seed))
}

/// Where det N > 0 the modular vector field is exact for the deformed
/// bivector: `d_pi tr N = d_{N pi} ln det N`.
pub fn coboundary_check(
    a: &LieAlgebroid,
    pi: &Multivector,
    n: &EndomorphismField,
    points: &[Vec<f64>],
    tol: f64,
    seed: u64,
) -> Result<CheckResult> {
    let x = pn_modular_vector_field(a, pi, n)?;
    let npi = deformed_bivector(pi, n, 1)?;
    let logdet = d_pi(a, &npi, &n.det_field().ln())?;
    let diff = x.sub(&logdet)?;
    let mut scan = ResidualScan::new();
    for pt in points {
        scan.observe(diff.max_abs_at(pt));
    }
    Ok(scan.into_check("modular-coboundary", tol, points.len(), seed))
}

/// Checks the dual-algebroid expression of the modular section: deform the
/// dual algebroid of pi by N* and compare modular forms,
/// `d_pi tr N = xi_{(A*)_{N*}} - N xi_{A*}`, both read as sections of the
/// bundle through the dual-dual identification.
pub fn pn_companion_check(
    a: &LieAlgebroid,
    pi: &Multivector,
    n: &EndomorphismField,
    points: &[Vec<f64>],
    tol: f64,
    seed: u64,
) -> Result<CheckResult> {
    let x = pn_modular_vector_field(a, pi, n)?;
    let dual = dual_algebroid(a, pi, format!("{}*", a.name()))?;
    let xi_dual = modular_form(&dual, ModularMethod::LocalFormula)?;
    let deformed_dual = deform(&dual, &n.dual(), format!("{}*-deformed", a.name()))?;
    let xi_deformed = modular_form(&deformed_dual, ModularMethod::LocalFormula)?;
    let as_section = |form: &AForm| -> Result<Multivector> {
        Ok(Multivector::from_vector_components(
            form.covector_components()?,
        ))
    };
    let lifted = n.apply(&as_section(&xi_dual)?)?;
    let rhs = as_section(&xi_deformed)?.sub(&lifted)?;
    let diff = x.sub(&rhs)?;
    let mut scan = ResidualScan::new();
    for pt in points {
        scan.observe(diff.max_abs_at(pt));
    }
    Ok(scan.into_check("modular-companion", tol, points.len(), seed))
}
