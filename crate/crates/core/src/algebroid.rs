//! Lie algebroids over a coordinate patch, given by anchor and structure
//! functions on a fixed frame.
//!
//! A rank-r algebroid over an n-dimensional patch carries an anchor matrix
//! `rho[i][u]` (the base vector field of frame section e_i) and structure
//! functions `C_ij^k` for i < j with `[e_i, e_j] = sum_k C_ij^k e_k`. All of
//! the calculus: section brackets, the differential on forms, Lie
//! derivatives, and the Schouten bracket on multivectors, is derived from
//! that data, and every identity is checked pointwise through exact jets.

use crate::error::{Error, Result};
use crate::exterior::{combinations, AForm, Multivector};
use crate::report::{CheckResult, ResidualScan};
use crate::scalar::ScalarField;
use std::collections::BTreeMap;
use std::sync::Arc;

#[derive(Debug)]
struct AlgebroidData {
    name: String,
    coords: Vec<String>,
    frame: Vec<String>,
    /// rank x dim; row i is the base components of the anchor of e_i.
    anchor: Vec<Vec<ScalarField>>,
    /// Key (i, j) with i < j maps to the rank-length coefficient list of
    /// [e_i, e_j]; absent keys mean a vanishing bracket.
    structure: BTreeMap<(usize, usize), Vec<ScalarField>>,
    /// Evaluation box, one closed interval per coordinate.
    domain: Vec<(f64, f64)>,
}

#[derive(Clone, Debug)]
pub struct LieAlgebroid {
    data: Arc<AlgebroidData>,
}

fn parity_sign(e: i64) -> f64 {
    if e.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

impl LieAlgebroid {
    pub fn new(
        name: impl Into<String>,
        coords: Vec<String>,
        frame: Vec<String>,
        anchor: Vec<Vec<ScalarField>>,
        structure: BTreeMap<(usize, usize), Vec<ScalarField>>,
        domain: Vec<(f64, f64)>,
    ) -> Result<Self> {
        let name = name.into();
        let dim = coords.len();
        let rank = frame.len();
        if rank == 0 {
            return Err(Error::Invalid(format!("algebroid {name} has an empty frame")));
        }
        if anchor.len() != rank || anchor.iter().any(|row| row.len() != dim) {
            return Err(Error::Invalid(format!(
                "algebroid {name}: anchor must be {rank} x {dim}"
            )));
        }
        for (&(i, j), coeffs) in &structure {
            if i >= j || j >= rank {
                return Err(Error::Invalid(format!(
                    "algebroid {name}: structure key ({i},{j}) is not an increasing \
                     pair below rank {rank}"
                )));
            }
            if coeffs.len() != rank {
                return Err(Error::Invalid(format!(
                    "algebroid {name}: structure entry ({i},{j}) has {} coefficients, \
                     expected {rank}",
                    coeffs.len()
                )));
            }
        }
        if domain.len() != dim {
            return Err(Error::Invalid(format!(
                "algebroid {name}: domain has {} intervals for {dim} coordinates",
                domain.len()
            )));
        }
        if domain.iter().any(|&(lo, hi)| lo > hi || lo.is_nan() || hi.is_nan()) {
            return Err(Error::Invalid(format!(
                "algebroid {name}: domain interval with lower bound above upper"
            )));
        }
        Ok(LieAlgebroid {
            data: Arc::new(AlgebroidData {
                name,
                coords,
                frame,
                anchor,
                structure,
                domain,
            }),
        })
    }

    /// The tangent algebroid of the patch: frame d_u, identity anchor, zero
    /// structure functions.
    pub fn tangent(
        name: impl Into<String>,
        coords: Vec<String>,
        domain: Vec<(f64, f64)>,
    ) -> Result<Self> {
        let dim = coords.len();
        let frame = coords.iter().map(|c| format!("d_{c}")).collect();
        let anchor = (0..dim)
            .map(|i| {
                (0..dim)
                    .map(|u| {
                        if i == u {
                            ScalarField::one()
                        } else {
                            ScalarField::zero()
                        }
                    })
                    .collect()
            })
            .collect();
        Self::new(name, coords, frame, anchor, BTreeMap::new(), domain)
    }

    /// A Lie algebra as an algebroid over a point: zero-dimensional base,
    /// constant structure. Entries may come in either index order; i = j is
    /// rejected.
    pub fn lie_algebra(
        name: impl Into<String>,
        frame: Vec<String>,
        constants: &[(usize, usize, usize, f64)],
    ) -> Result<Self> {
        let name = name.into();
        let rank = frame.len();
        let mut table: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
        for &(i, j, k, v) in constants {
            if i == j {
                return Err(Error::Invalid(format!(
                    "algebra {name}: structure constant with repeated index {i}"
                )));
            }
            if i >= rank || j >= rank || k >= rank {
                return Err(Error::Invalid(format!(
                    "algebra {name}: structure index out of range for rank {rank}"
                )));
            }
            let (key, val) = if i < j { ((i, j), v) } else { ((j, i), -v) };
            table.entry(key).or_insert_with(|| vec![0.0; rank])[k] += val;
        }
        let structure = table
            .into_iter()
            .map(|(key, coeffs)| {
                (
                    key,
                    coeffs.into_iter().map(ScalarField::constant).collect(),
                )
            })
            .collect();
        let anchor = vec![Vec::new(); rank];
        Self::new(name, Vec::new(), frame, anchor, structure, Vec::new())
    }

    pub fn name(&self) -> &str {
        &self.data.name
    }

    pub fn dim(&self) -> usize {
        self.data.coords.len()
    }

    pub fn rank(&self) -> usize {
        self.data.frame.len()
    }

    pub fn coords(&self) -> &[String] {
        &self.data.coords
    }

    pub fn frame(&self) -> &[String] {
        &self.data.frame
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.data.domain
    }

    pub fn anchor_row(&self, i: usize) -> &[ScalarField] {
        &self.data.anchor[i]
    }

    /// C_ij^k with the sign of the index order; zero off the stored keys.
    pub fn structure_field(&self, i: usize, j: usize, k: usize) -> ScalarField {
        if i == j {
            return ScalarField::zero();
        }
        let (key, flip) = if i < j { ((i, j), false) } else { ((j, i), true) };
        match self.data.structure.get(&key) {
            Some(coeffs) => {
                if flip {
                    coeffs[k].neg()
                } else {
                    coeffs[k].clone()
                }
            }
            None => ScalarField::zero(),
        }
    }

    /// rho(e_i) f, the anchor of a frame section acting as a derivation.
    pub fn anchor_action(&self, i: usize, f: &ScalarField) -> ScalarField {
        let mut acc = ScalarField::zero();
        for (u, coeff) in self.data.anchor[i].iter().enumerate() {
            acc = acc.add(&coeff.mul(&f.partial(u)));
        }
        acc
    }

    /// rho(X) f for a section with the given frame components.
    pub fn anchor_action_components(&self, x: &[ScalarField], f: &ScalarField) -> ScalarField {
        let mut acc = ScalarField::zero();
        for (i, xi) in x.iter().enumerate() {
            if xi.is_zero() {
                continue;
            }
            acc = acc.add(&xi.mul(&self.anchor_action(i, f)));
        }
        acc
    }

    /// Base components of rho(X): a vector field on the patch.
    pub fn base_vector_components(&self, x: &[ScalarField]) -> Vec<ScalarField> {
        (0..self.dim())
            .map(|u| {
                ScalarField::sum(
                    x.iter()
                        .enumerate()
                        .map(|(i, xi)| xi.mul(&self.data.anchor[i][u])),
                )
            })
            .collect()
    }

    /// The bracket of two sections written in the frame.
    pub fn section_bracket(&self, x: &Multivector, y: &Multivector) -> Result<Multivector> {
        let rank = self.rank();
        let xc = x.vector_components()?;
        let yc = y.vector_components()?;
        if xc.len() != rank || yc.len() != rank {
            return Err(Error::AlgebroidMismatch {
                left: self.data.name.clone(),
                right: format!("section of rank {}", xc.len().max(yc.len())),
            });
        }
        let mut out = vec![ScalarField::zero(); rank];
        for (&(i, j), coeffs) in &self.data.structure {
            let pair = xc[i].mul(&yc[j]).sub(&xc[j].mul(&yc[i]));
            if pair.is_zero() {
                continue;
            }
            for (k, c) in coeffs.iter().enumerate() {
                out[k] = out[k].add(&pair.mul(c));
            }
        }
        for k in 0..rank {
            out[k] = out[k]
                .add(&self.anchor_action_components(&xc, &yc[k]))
                .sub(&self.anchor_action_components(&yc, &xc[k]));
        }
        Ok(Multivector::from_vector_components(out))
    }

    /// The differential of a scalar: (df)(e_i) = rho(e_i) f.
    pub fn differential_scalar(&self, f: &ScalarField) -> AForm {
        AForm::from_covector_components(
            (0..self.rank()).map(|i| self.anchor_action(i, f)).collect(),
        )
    }

    /// The exterior differential on forms of any degree.
    pub fn differential(&self, omega: &AForm) -> Result<AForm> {
        let rank = self.rank();
        if omega.rank() != rank {
            return Err(Error::AlgebroidMismatch {
                left: self.data.name.clone(),
                right: format!("form of rank {}", omega.rank()),
            });
        }
        let p = omega.degree();
        let mut out = AForm::zero(rank, p + 1);
        for target in combinations(rank, p + 1) {
            let mut acc = ScalarField::zero();
            for (a, &ia) in target.iter().enumerate() {
                let mut rest = target.clone();
                rest.remove(a);
                let term = self.anchor_action(ia, &omega.component(&rest));
                acc = acc.add(&term.scale(parity_sign(a as i64)));
            }
            for a in 0..target.len() {
                for b in a + 1..target.len() {
                    let Some(coeffs) = self.data.structure.get(&(target[a], target[b]))
                    else {
                        continue;
                    };
                    let mut rest = target.clone();
                    rest.remove(b);
                    rest.remove(a);
                    let sign = parity_sign((a + b) as i64);
                    for (l, c) in coeffs.iter().enumerate() {
                        if c.is_zero() {
                            continue;
                        }
                        let mut args = Vec::with_capacity(p);
                        args.push(l);
                        args.extend_from_slice(&rest);
                        let w = omega.component(&args);
                        if w.is_zero() {
                            continue;
                        }
                        acc = acc.add(&c.mul(&w).scale(sign));
                    }
                }
            }
            if !acc.is_zero() {
                out = out.with_component(&target, acc);
            }
        }
        Ok(out)
    }

    /// Lie derivative of a form along a section, via the homotopy formula;
    /// on functions it reduces to the anchor action.
    pub fn lie_derivative_form(&self, x: &Multivector, omega: &AForm) -> Result<AForm> {
        if omega.degree() == 0 {
            let f = omega.component(&[]);
            let acted = self.anchor_action_components(&x.vector_components()?, &f);
            return Ok(AForm::from_scalar(self.rank(), acted));
        }
        let inner = self.differential(&omega.interior_vector(x)?)?;
        let outer = self.differential(omega)?.interior_vector(x)?;
        inner.add(&outer)
    }

    /// The Schouten bracket of multivectors, of degree p + q - 1.
    ///
    /// Characterized by: the section bracket in degree (1,1), the anchor
    /// action in degree (1,0), graded antisymmetry with shifted degrees, and
    /// the graded Leibniz rule in the second slot. Higher degrees peel one
    /// frame factor at a time off the second argument.
    pub fn schouten(&self, p: &Multivector, q: &Multivector) -> Result<Multivector> {
        let rank = self.rank();
        if p.rank() != rank || q.rank() != rank {
            return Err(Error::AlgebroidMismatch {
                left: self.data.name.clone(),
                right: format!("multivector of rank {}", p.rank().max(q.rank())),
            });
        }
        let (dp, dq) = (p.degree(), q.degree());
        match (dp, dq) {
            (0, 0) => Ok(Multivector::zero(rank, 0)),
            (1, 1) => self.section_bracket(p, q),
            (1, 0) => {
                let g = q.component(&[]);
                let acted = self.anchor_action_components(&p.vector_components()?, &g);
                Ok(Multivector::from_scalar(rank, acted))
            }
            (0, 1) => Ok(self.schouten(q, p)?.neg()),
            _ if dq >= 2 => {
                let leibniz = parity_sign(dp as i64 - 1);
                let mut out = Multivector::zero(rank, dp + dq - 1);
                for (indices, f) in q.components() {
                    let head = Multivector::zero(rank, 1)
                        .with_component(&indices[..1], f.clone());
                    let mut tail = Multivector::zero(rank, dq - 1);
                    tail = tail.with_component(&indices[1..], ScalarField::one());
                    let left = self.schouten(p, &head)?.wedge(&tail)?;
                    let right = head.wedge(&self.schouten(p, &tail)?)?;
                    out = out.add(&left)?.add(&right.scale(leibniz))?;
                }
                Ok(out)
            }
            _ => {
                // dp >= 2, dq <= 1: graded antisymmetry, then peel.
                let sign = -parity_sign((dp as i64 - 1) * (dq as i64 - 1));
                Ok(self.schouten(q, p)?.scale(sign))
            }
        }
    }

    /// Pointwise residuals of the two structural axioms: the anchor must
    /// send frame brackets to commutators of base vector fields, and the
    /// frame bracket must satisfy the Jacobi identity.
    pub fn validate_axioms(
        &self,
        points: &[Vec<f64>],
        tol: f64,
        seed: u64,
    ) -> Result<Vec<CheckResult>> {
        let rank = self.rank();
        let dim = self.dim();
        let mut anchor_fields = Vec::new();
        for i in 0..rank {
            for j in i + 1..rank {
                for u in 0..dim {
                    let mut lhs = ScalarField::zero();
                    for k in 0..rank {
                        lhs = lhs.add(
                            &self.structure_field(i, j, k).mul(&self.data.anchor[k][u]),
                        );
                    }
                    let mut commutator = ScalarField::zero();
                    for v in 0..dim {
                        let push = self.data.anchor[i][v]
                            .mul(&self.data.anchor[j][u].partial(v))
                            .sub(&self.data.anchor[j][v].mul(&self.data.anchor[i][u].partial(v)));
                        commutator = commutator.add(&push);
                    }
                    let res = lhs.sub(&commutator);
                    if !res.is_zero() {
                        anchor_fields.push(res);
                    }
                }
            }
        }
        let mut jacobi_fields = Vec::new();
        for i in 0..rank {
            for j in i + 1..rank {
                for k in j + 1..rank {
                    let ei = Multivector::frame_section(rank, i);
                    let ej = Multivector::frame_section(rank, j);
                    let ek = Multivector::frame_section(rank, k);
                    let jac = self
                        .section_bracket(&ei, &self.section_bracket(&ej, &ek)?)?
                        .add(&self.section_bracket(&ej, &self.section_bracket(&ek, &ei)?)?)?
                        .add(&self.section_bracket(&ek, &self.section_bracket(&ei, &ej)?)?)?;
                    jacobi_fields.push(jac);
                }
            }
        }
        let mut anchor_scan = ResidualScan::new();
        let mut jacobi_scan = ResidualScan::new();
        for pt in points {
            for f in &anchor_fields {
                anchor_scan.observe(f.eval(pt, 0).map(|j| j.value().abs()));
            }
            for jac in &jacobi_fields {
                jacobi_scan.observe(jac.max_abs_at(pt));
            }
        }
        Ok(vec![
            anchor_scan.into_check("anchor-compatibility", tol, points.len(), seed),
            jacobi_scan.into_check("frame-jacobi", tol, points.len(), seed),
        ])
    }
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

    fn plane() -> LieAlgebroid {
        LieAlgebroid::tangent(
            "plane",
            vec!["x".into(), "y".into()],
            vec![(-1.0, 1.0), (-1.0, 1.0)],
        )
        .unwrap()
    }

    fn so3() -> LieAlgebroid {
        LieAlgebroid::lie_algebra(
            "so3",
            vec!["e1".into(), "e2".into(), "e3".into()],
            &[(0, 1, 2, 1.0), (1, 2, 0, 1.0), (2, 0, 1, 1.0)],
        )
        .unwrap()
    }

    #[test]
    fn tangent_bracket_is_vector_field_commutator() {
        let a = plane();
        // [y d_x, x d_y] = y d_y - x d_x.
        let x = Multivector::from_vector_components(vec![
            field("y", &["x", "y"]),
            ScalarField::zero(),
        ]);
        let y = Multivector::from_vector_components(vec![
            ScalarField::zero(),
            field("x", &["x", "y"]),
        ]);
        let b = a.section_bracket(&x, &y).unwrap();
        let pt = [0.7, -0.4];
        assert!((b.component(&[0]).value(&pt).unwrap() - (-0.7)).abs() < 1e-14);
        assert!((b.component(&[1]).value(&pt).unwrap() - (-0.4)).abs() < 1e-14);
    }

    #[test]
    fn lie_algebra_bracket_uses_constants_in_either_order() {
        let a = so3();
        let e1 = Multivector::frame_section(3, 0);
        let e2 = Multivector::frame_section(3, 1);
        let b12 = a.section_bracket(&e1, &e2).unwrap();
        assert_eq!(b12.component(&[2]).value(&[]).unwrap(), 1.0);
        let b21 = a.section_bracket(&e2, &e1).unwrap();
        assert_eq!(b21.component(&[2]).value(&[]).unwrap(), -1.0);
        assert_eq!(a.structure_field(1, 0, 2).value(&[]).unwrap(), -1.0);
    }

    #[test]
    fn differential_squares_to_zero_on_functions() {
        let a = plane();
        let f = field("x^2*y + exp(x - y)", &["x", "y"]);
        let df = a.differential_scalar(&f);
        let ddf = a.differential(&df).unwrap();
        for pt in sample_points(a.domain(), 12, 3) {
            assert!(ddf.max_abs_at(&pt).unwrap() < 1e-12);
        }
    }

    #[test]
    fn differential_of_one_form_matches_hand_computation() {
        let a = plane();
        // omega = x e^y has d omega = e^x ^ e^y with coefficient 1.
        let omega = AForm::zero(2, 1).with_component(&[1], field("x", &["x", "y"]));
        let dw = a.differential(&omega).unwrap();
        assert_eq!(dw.component(&[0, 1]).value(&[0.3, 0.9]).unwrap(), 1.0);
    }

    #[test]
    fn differential_sees_structure_functions() {
        let a = so3();
        // d e^3 (e_1, e_2) = -C_12^3 = -1.
        let omega = AForm::dual_frame_section(3, 2);
        let dw = a.differential(&omega).unwrap();
        assert_eq!(dw.component(&[0, 1]).value(&[]).unwrap(), -1.0);
        assert_eq!(dw.component(&[0, 2]).value(&[]).unwrap(), 0.0);
    }

    #[test]
    fn lie_derivative_satisfies_homotopy_identity_samples() {
        let a = plane();
        let x = Multivector::from_vector_components(vec![
            field("x*y", &["x", "y"]),
            field("1 + x^2", &["x", "y"]),
        ]);
        let omega = AForm::zero(2, 1)
            .with_component(&[0], field("y^2", &["x", "y"]))
            .with_component(&[1], field("x + y", &["x", "y"]));
        // L_X d omega = d L_X omega.
        let lhs = a
            .lie_derivative_form(&x, &a.differential(&omega).unwrap())
            .unwrap();
        let rhs = a
            .differential(&a.lie_derivative_form(&x, &omega).unwrap())
            .unwrap();
        for pt in sample_points(a.domain(), 10, 11) {
            assert!(lhs.sub(&rhs).unwrap().max_abs_at(&pt).unwrap() < 1e-11);
        }
    }

    #[test]
    fn schouten_degree_one_pair_is_section_bracket() {
        let a = plane();
        let x = Multivector::from_vector_components(vec![
            field("y", &["x", "y"]),
            ScalarField::zero(),
        ]);
        let y = Multivector::from_vector_components(vec![
            ScalarField::zero(),
            field("x", &["x", "y"]),
        ]);
        let via_schouten = a.schouten(&x, &y).unwrap();
        let direct = a.section_bracket(&x, &y).unwrap();
        for pt in sample_points(a.domain(), 6, 5) {
            assert!(via_schouten.sub(&direct).unwrap().max_abs_at(&pt).unwrap() < 1e-13);
        }
    }

    #[test]
    fn schouten_of_bivector_with_function_follows_convention() {
        // For pi = e_0 ^ e_1 on the plane, [pi, f] must equal
        // (rho(e_1) f) e_0 - (rho(e_0) f) e_1; with f = x that is -e_1.
        let a = plane();
        let pi = Multivector::zero(2, 2).with_component(&[0, 1], ScalarField::one());
        let f = Multivector::from_scalar(2, field("x", &["x", "y"]));
        let b = a.schouten(&pi, &f).unwrap();
        assert_eq!(b.degree(), 1);
        let pt = [0.2, 0.6];
        assert_eq!(b.component(&[0]).value(&pt).unwrap(), 0.0);
        assert_eq!(b.component(&[1]).value(&pt).unwrap(), -1.0);
    }

    #[test]
    fn schouten_graded_antisymmetry_numeric() {
        let a = plane();
        let p = Multivector::zero(2, 2)
            .with_component(&[0, 1], field("exp(x)*y + 1", &["x", "y"]));
        let q = Multivector::from_vector_components(vec![
            field("x^2", &["x", "y"]),
            field("y - x", &["x", "y"]),
        ]);
        // (p, q) degrees (2, 1): [P, Q] = -(-1)^{(2-1)(1-1)} [Q, P] = -[Q, P].
        let pq = a.schouten(&p, &q).unwrap();
        let qp = a.schouten(&q, &p).unwrap();
        for pt in sample_points(a.domain(), 8, 13) {
            assert!(pq.add(&qp).unwrap().max_abs_at(&pt).unwrap() < 1e-12);
        }
    }

    #[test]
    fn schouten_leibniz_in_second_slot_numeric() {
        // [X, Q ^ R] = [X, Q] ^ R + Q ^ [X, R] for a vector field X.
        let a = LieAlgebroid::tangent(
            "space",
            vec!["x".into(), "y".into(), "z".into()],
            vec![(-1.0, 1.0); 3],
        )
        .unwrap();
        let c = ["x", "y", "z"];
        let x = Multivector::from_vector_components(vec![
            field("y*z", &c),
            field("x", &c),
            field("exp(z)", &c),
        ]);
        let q = Multivector::from_vector_components(vec![
            field("z^2", &c),
            field("x*y", &c),
            field("1", &c),
        ]);
        let r = Multivector::from_vector_components(vec![
            field("y", &c),
            field("0", &c),
            field("x - z", &c),
        ]);
        let qr = q.wedge(&r).unwrap();
        let lhs = a.schouten(&x, &qr).unwrap();
        let rhs = a
            .schouten(&x, &q)
            .unwrap()
            .wedge(&r)
            .unwrap()
            .add(&q.wedge(&a.schouten(&x, &r).unwrap()).unwrap())
            .unwrap();
        for pt in sample_points(a.domain(), 6, 17) {
            assert!(lhs.sub(&rhs).unwrap().max_abs_at(&pt).unwrap() < 1e-11);
        }
    }

    #[test]
    fn axioms_pass_on_tangent_and_so3() {
        let a = plane();
        let pts = sample_points(a.domain(), 10, 42);
        for check in a.validate_axioms(&pts, 1e-9, 42).unwrap() {
            assert!(check.pass, "{}: {}", check.name, check.max_residual);
        }
        let g = so3();
        let pts = sample_points(g.domain(), 3, 42);
        for check in g.validate_axioms(&pts, 1e-9, 42).unwrap() {
            assert!(check.pass, "{}: {}", check.name, check.max_residual);
        }
    }

    #[test]
    fn corrupted_structure_constant_fails_jacobi() {
        // Add a spurious [e1, e3] = e1 on top of so3-like constants; the
        // cyclic sum then leaves a bare e3 behind.
        let g = LieAlgebroid::lie_algebra(
            "broken",
            vec!["e1".into(), "e2".into(), "e3".into()],
            &[(0, 1, 2, 1.0), (1, 2, 0, 1.0), (0, 2, 0, 1.0)],
        )
        .unwrap();
        let checks = g.validate_axioms(&[vec![]], 1e-9, 42).unwrap();
        let jac = checks.iter().find(|c| c.name == "frame-jacobi").unwrap();
        assert!(!jac.pass);
        assert!(jac.max_residual > 1e-3);
    }

    #[test]
    fn anchor_mismatch_fails_compatibility() {
        // Tangent frame with a wrong anchor entry: [e_0, e_1] = 0 but the
        // base commutator of rho(e_0) = x d_x and rho(e_1) = d_y is nonzero
        // only if the anchor rows fail to commute; pick rho(e_1) = x d_y.
        let coords: Vec<String> = vec!["x".into(), "y".into()];
        let anchor = vec![
            vec![ScalarField::one(), ScalarField::zero()],
            vec![ScalarField::zero(), field("x", &["x", "y"])],
        ];
        let a = LieAlgebroid::new(
            "skew-anchor",
            coords,
            vec!["e1".into(), "e2".into()],
            anchor,
            BTreeMap::new(),
            vec![(0.5, 1.5), (-1.0, 1.0)],
        )
        .unwrap();
        let pts = sample_points(a.domain(), 6, 42);
        let checks = a.validate_axioms(&pts, 1e-9, 42).unwrap();
        let morph = checks
            .iter()
            .find(|c| c.name == "anchor-compatibility")
            .unwrap();
        assert!(!morph.pass);
        assert!(morph.max_residual > 0.4);
    }
}
