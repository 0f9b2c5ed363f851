//! Exterior algebra over the frame of a rank-r vector bundle.
//!
//! Multivectors and forms are stored sparsely: a degree-p object maps each
//! strictly increasing index list `[i1 < ... < ip]` to a scalar-field
//! coefficient. The pairing is the determinant one, `<e^I, e_J> = delta^I_J`
//! on increasing lists, and interior products contract the first slot.

use crate::error::{Error, Result};
use crate::jets::{jet_det, jet_linear_solve, Jet};
use crate::scalar::{CachedMatrix, ScalarField};
use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

type Comps = BTreeMap<Vec<usize>, ScalarField>;

/// All strictly increasing p-element subsets of 0..rank, in order.
pub(crate) fn combinations(rank: usize, p: usize) -> Vec<Vec<usize>> {
    if p > rank {
        return Vec::new();
    }
    if p == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..p).collect();
    loop {
        out.push(idx.clone());
        // Advance the rightmost index that can still move.
        let mut a = p;
        loop {
            if a == 0 {
                return out;
            }
            a -= 1;
            if idx[a] < rank - p + a {
                idx[a] += 1;
                for b in a + 1..p {
                    idx[b] = idx[b - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Sorts `indices` ascending, returning the permutation sign, or None when an
/// index repeats.
fn sort_with_sign(indices: &mut [usize]) -> Option<f64> {
    let mut sign = 1.0;
    // Insertion sort; index lists are short.
    for a in 1..indices.len() {
        let mut b = a;
        while b > 0 && indices[b - 1] > indices[b] {
            indices.swap(b - 1, b);
            sign = -sign;
            b -= 1;
        }
    }
    for w in indices.windows(2) {
        if w[0] == w[1] {
            return None;
        }
    }
    Some(sign)
}

fn insert_signed(map: &mut Comps, mut indices: Vec<usize>, field: ScalarField) {
    if field.is_zero() {
        return;
    }
    let Some(sign) = sort_with_sign(&mut indices) else {
        return;
    };
    let field = if sign < 0.0 { field.neg() } else { field };
    match map.remove(&indices) {
        Some(existing) => {
            let sum = existing.add(&field);
            if !sum.is_zero() {
                map.insert(indices, sum);
            }
        }
        None => {
            map.insert(indices, field);
        }
    }
}

fn signed_lookup(map: &Comps, indices: &[usize]) -> ScalarField {
    let mut sorted = indices.to_vec();
    let Some(sign) = sort_with_sign(&mut sorted) else {
        return ScalarField::zero();
    };
    match map.get(&sorted) {
        Some(f) if sign < 0.0 => f.neg(),
        Some(f) => f.clone(),
        None => ScalarField::zero(),
    }
}

macro_rules! skew_common {
    ($ty:ident) => {
        impl $ty {
            pub fn zero(rank: usize, degree: usize) -> Self {
                $ty {
                    rank,
                    degree,
                    comps: Comps::new(),
                }
            }

            pub fn from_scalar(rank: usize, field: ScalarField) -> Self {
                let mut comps = Comps::new();
                if !field.is_zero() {
                    comps.insert(Vec::new(), field);
                }
                $ty {
                    rank,
                    degree: 0,
                    comps,
                }
            }

            pub fn rank(&self) -> usize {
                self.rank
            }

            pub fn degree(&self) -> usize {
                self.degree
            }

            /// Adds `field` times the basis monomial with the given indices;
            /// indices are sorted and the sign absorbed.
            pub fn with_component(mut self, indices: &[usize], field: ScalarField) -> Self {
                assert_eq!(indices.len(), self.degree, "component degree mismatch");
                assert!(
                    indices.iter().all(|&i| i < self.rank),
                    "component index out of range"
                );
                insert_signed(&mut self.comps, indices.to_vec(), field);
                self
            }

            /// The coefficient on a basis monomial, in any index order.
            pub fn component(&self, indices: &[usize]) -> ScalarField {
                signed_lookup(&self.comps, indices)
            }

            pub fn components(&self) -> impl Iterator<Item = (&[usize], &ScalarField)> {
                self.comps.iter().map(|(i, f)| (i.as_slice(), f))
            }

            pub fn is_structurally_zero(&self) -> bool {
                self.comps.is_empty()
            }

            pub fn add(&self, other: &Self) -> Result<Self> {
                if self.rank != other.rank || self.degree != other.degree {
                    return Err(Error::DegreeMismatch {
                        expected: self.degree,
                        got: other.degree,
                    });
                }
                let mut comps = self.comps.clone();
                for (i, f) in &other.comps {
                    insert_signed(&mut comps, i.clone(), f.clone());
                }
                Ok($ty {
                    rank: self.rank,
                    degree: self.degree,
                    comps,
                })
            }

            pub fn sub(&self, other: &Self) -> Result<Self> {
                self.add(&other.neg())
            }

            pub fn neg(&self) -> Self {
                self.scale(-1.0)
            }

            pub fn scale(&self, c: f64) -> Self {
                if c == 0.0 {
                    return Self::zero(self.rank, self.degree);
                }
                let comps = self
                    .comps
                    .iter()
                    .map(|(i, f)| (i.clone(), f.scale(c)))
                    .collect();
                $ty {
                    rank: self.rank,
                    degree: self.degree,
                    comps,
                }
            }

            pub fn scale_field(&self, g: &ScalarField) -> Self {
                if g.is_zero() {
                    return Self::zero(self.rank, self.degree);
                }
                let comps = self
                    .comps
                    .iter()
                    .map(|(i, f)| (i.clone(), f.mul(g)))
                    .filter(|(_, f)| !f.is_zero())
                    .collect();
                $ty {
                    rank: self.rank,
                    degree: self.degree,
                    comps,
                }
            }

            pub fn wedge(&self, other: &Self) -> Result<Self> {
                if self.rank != other.rank {
                    return Err(Error::Invalid(format!(
                        "wedge of objects over different ranks {} and {}",
                        self.rank, other.rank
                    )));
                }
                let degree = self.degree + other.degree;
                let mut comps = Comps::new();
                if degree <= self.rank {
                    for (i, f) in &self.comps {
                        for (j, g) in &other.comps {
                            let mut merged = i.clone();
                            merged.extend_from_slice(j);
                            insert_signed(&mut comps, merged, f.mul(g));
                        }
                    }
                }
                Ok($ty {
                    rank: self.rank,
                    degree,
                    comps,
                })
            }

            /// Largest absolute component value at a point.
            pub fn max_abs_at(&self, point: &[f64]) -> Result<f64> {
                let mut worst: f64 = 0.0;
                for f in self.comps.values() {
                    worst = worst.max(f.eval(point, 0)?.value().abs());
                }
                Ok(worst)
            }

            /// Contracts the first slot with a rank-length coefficient list.
            fn contract_first(&self, covec: &[ScalarField]) -> Result<Self> {
                if self.degree == 0 {
                    return Err(Error::DegreeMismatch {
                        expected: 1,
                        got: 0,
                    });
                }
                if covec.len() != self.rank {
                    return Err(Error::Invalid(format!(
                        "contraction coefficients have length {}, rank is {}",
                        covec.len(),
                        self.rank
                    )));
                }
                let mut comps = Comps::new();
                for (i, f) in &self.comps {
                    for (a, &ia) in i.iter().enumerate() {
                        let dual = &covec[ia];
                        if dual.is_zero() {
                            continue;
                        }
                        let mut rest: Vec<usize> = i.clone();
                        rest.remove(a);
                        let sign = if a % 2 == 0 { 1.0 } else { -1.0 };
                        insert_signed(&mut comps, rest, f.mul(dual).scale(sign));
                    }
                }
                Ok($ty {
                    rank: self.rank,
                    degree: self.degree - 1,
                    comps,
                })
            }
        }
    };
}

/// A multivector field: degree-p section of the exterior power of the bundle.
#[derive(Clone, Debug)]
pub struct Multivector {
    rank: usize,
    degree: usize,
    comps: Comps,
}

/// A form: degree-p section of the exterior power of the dual bundle.
#[derive(Clone, Debug)]
pub struct AForm {
    rank: usize,
    degree: usize,
    comps: Comps,
}

skew_common!(Multivector);
skew_common!(AForm);

impl Multivector {
    /// A single frame section e_i as a 1-vector.
    pub fn frame_section(rank: usize, i: usize) -> Self {
        Multivector::zero(rank, 1).with_component(&[i], ScalarField::one())
    }

    /// Degree-1 coefficient list, length rank.
    pub fn vector_components(&self) -> Result<Vec<ScalarField>> {
        if self.degree != 1 {
            return Err(Error::DegreeMismatch {
                expected: 1,
                got: self.degree,
            });
        }
        Ok((0..self.rank).map(|i| self.component(&[i])).collect())
    }

    pub fn from_vector_components(fields: Vec<ScalarField>) -> Self {
        let rank = fields.len();
        let mut mv = Multivector::zero(rank, 1);
        for (i, f) in fields.into_iter().enumerate() {
            if !f.is_zero() {
                mv = mv.with_component(&[i], f);
            }
        }
        mv
    }

    /// Interior product by a 1-form, contracting the first slot.
    pub fn interior(&self, alpha: &AForm) -> Result<Multivector> {
        if alpha.degree != 1 {
            return Err(Error::DegreeMismatch {
                expected: 1,
                got: alpha.degree,
            });
        }
        let covec: Vec<ScalarField> = (0..self.rank).map(|i| alpha.component(&[i])).collect();
        self.contract_first(&covec)
    }

    /// Full pairing with an equal-degree form.
    pub fn pair(&self, omega: &AForm) -> Result<ScalarField> {
        if self.degree != omega.degree || self.rank != omega.rank {
            return Err(Error::DegreeMismatch {
                expected: self.degree,
                got: omega.degree,
            });
        }
        let mut acc = ScalarField::zero();
        for (i, f) in &self.comps {
            let g = signed_lookup(&omega.comps, i);
            acc = acc.add(&f.mul(&g));
        }
        Ok(acc)
    }

    /// The full antisymmetric coefficient matrix of a bivector.
    pub fn bivector_matrix(&self) -> Result<Vec<Vec<ScalarField>>> {
        if self.degree != 2 {
            return Err(Error::DegreeMismatch {
                expected: 2,
                got: self.degree,
            });
        }
        Ok((0..self.rank)
            .map(|i| (0..self.rank).map(|j| self.component(&[i, j])).collect())
            .collect())
    }

    /// A bivector from its coefficients on i < j.
    pub fn bivector_from_upper<F>(rank: usize, mut entry: F) -> Self
    where
        F: FnMut(usize, usize) -> ScalarField,
    {
        let mut mv = Multivector::zero(rank, 2);
        for i in 0..rank {
            for j in i + 1..rank {
                let f = entry(i, j);
                if !f.is_zero() {
                    mv = mv.with_component(&[i, j], f);
                }
            }
        }
        mv
    }
}

impl AForm {
    /// A single dual frame section e^i as a 1-form.
    pub fn dual_frame_section(rank: usize, i: usize) -> Self {
        AForm::zero(rank, 1).with_component(&[i], ScalarField::one())
    }

    pub fn covector_components(&self) -> Result<Vec<ScalarField>> {
        if self.degree != 1 {
            return Err(Error::DegreeMismatch {
                expected: 1,
                got: self.degree,
            });
        }
        Ok((0..self.rank).map(|i| self.component(&[i])).collect())
    }

    pub fn from_covector_components(fields: Vec<ScalarField>) -> Self {
        let rank = fields.len();
        let mut form = AForm::zero(rank, 1);
        for (i, f) in fields.into_iter().enumerate() {
            if !f.is_zero() {
                form = form.with_component(&[i], f);
            }
        }
        form
    }

    /// Interior product by a 1-vector, contracting the first slot.
    pub fn interior_vector(&self, x: &Multivector) -> Result<AForm> {
        if x.degree != 1 {
            return Err(Error::DegreeMismatch {
                expected: 1,
                got: x.degree,
            });
        }
        let vec: Vec<ScalarField> = (0..self.rank).map(|i| x.component(&[i])).collect();
        self.contract_first(&vec)
    }

    pub fn pair(&self, p: &Multivector) -> Result<ScalarField> {
        p.pair(self)
    }
}

type PowerMemo = Mutex<HashMap<i64, CachedMatrix>>;

/// A (1,1) tensor field on the bundle: a field of frame endomorphisms.
///
/// The stored matrix has rows indexed by the input frame section, so
/// `N(e_i) = sum_j entries[i][j] e_j`. Vector components therefore transform
/// by the transpose and covector components by the matrix itself.
#[derive(Clone)]
pub struct EndomorphismField {
    rank: usize,
    matrix: CachedMatrix,
    powers: Arc<PowerMemo>,
}

impl std::fmt::Debug for EndomorphismField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "EndomorphismField({}, rank {})", self.matrix.label(), self.rank)
    }
}

pub(crate) fn matrix_product(label: &str, a: &CachedMatrix, b: &CachedMatrix) -> CachedMatrix {
    assert_eq!(a.cols(), b.rows(), "matrix product shape mismatch");
    let (a, b) = (a.clone(), b.clone());
    let (rows, inner, cols) = (a.rows(), a.cols(), b.cols());
    CachedMatrix::new(label, rows, cols, move |point, order| {
        let ga = a.eval(point, order)?;
        let gb = b.eval(point, order)?;
        let mut out = Vec::with_capacity(rows);
        for i in 0..rows {
            let mut row = Vec::with_capacity(cols);
            for j in 0..cols {
                let mut acc = Jet::constant(0.0, point.len(), order);
                for l in 0..inner {
                    acc = acc.add(&ga[i][l].mul(&gb[l][j])?)?;
                }
                row.push(acc);
            }
            out.push(row);
        }
        Ok(out)
    })
}

pub(crate) fn matrix_inverse(label: &str, a: &CachedMatrix) -> CachedMatrix {
    assert_eq!(a.rows(), a.cols(), "inverse of a non-square matrix");
    let a = a.clone();
    let n = a.rows();
    CachedMatrix::new(label, n, n, move |point, order| {
        let g = a.eval(point, order)?;
        let flat: Vec<Jet> = g.iter().flat_map(|r| r.iter().cloned()).collect();
        let mut out = vec![Vec::with_capacity(n); n];
        for j in 0..n {
            let rhs: Vec<Jet> = (0..n)
                .map(|i| Jet::constant(if i == j { 1.0 } else { 0.0 }, point.len(), order))
                .collect();
            let col = jet_linear_solve(&flat, &rhs).map_err(|e| match e {
                Error::SingularMatrix { pivot, .. } => {
                    Error::DegenerateEndomorphism { magnitude: pivot }
                }
                other => other,
            })?;
            for (i, v) in col.into_iter().enumerate() {
                out[i].push(v);
            }
        }
        Ok(out)
    })
}

impl EndomorphismField {
    pub fn from_matrix(matrix: CachedMatrix) -> Self {
        assert_eq!(matrix.rows(), matrix.cols(), "endomorphism matrix must be square");
        EndomorphismField {
            rank: matrix.rows(),
            matrix,
            powers: Arc::new(Mutex::new(HashMap::new())),
        }
    }

    pub fn from_fields(label: &str, fields: Vec<Vec<ScalarField>>) -> Self {
        Self::from_matrix(CachedMatrix::from_fields(label, fields))
    }

    pub fn identity(rank: usize) -> Self {
        let fields = (0..rank)
            .map(|i| {
                (0..rank)
                    .map(|j| {
                        if i == j {
                            ScalarField::one()
                        } else {
                            ScalarField::zero()
                        }
                    })
                    .collect()
            })
            .collect();
        Self::from_fields("id", fields)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn matrix(&self) -> &CachedMatrix {
        &self.matrix
    }

    pub fn entry(&self, i: usize, j: usize) -> ScalarField {
        self.matrix.entry(i, j)
    }

    /// The coefficient matrix of the k-th power, memoized; negative powers go
    /// through the pointwise inverse and report degeneracy as an error at
    /// evaluation.
    pub fn power_matrix(&self, k: i64) -> CachedMatrix {
        if k == 1 {
            return self.matrix.clone();
        }
        if let Some(hit) = self.powers.lock().unwrap().get(&k) {
            return hit.clone();
        }
        let label = self.matrix.label().to_string();
        let built = if k == 0 {
            CachedMatrix::from_fields(
                &format!("{label}^0"),
                (0..self.rank)
                    .map(|i| {
                        (0..self.rank)
                            .map(|j| {
                                if i == j {
                                    ScalarField::one()
                                } else {
                                    ScalarField::zero()
                                }
                            })
                            .collect()
                    })
                    .collect(),
            )
        } else if k > 0 {
            matrix_product(
                &format!("{label}^{k}"),
                &self.power_matrix(k - 1),
                &self.matrix,
            )
        } else if k == -1 {
            matrix_inverse(&format!("{label}^-1"), &self.matrix)
        } else {
            matrix_product(
                &format!("{label}^{k}"),
                &self.power_matrix(k + 1),
                &self.power_matrix(-1),
            )
        };
        self.powers
            .lock()
            .unwrap()
            .entry(k)
            .or_insert(built)
            .clone()
    }

    pub fn power(&self, k: i64) -> EndomorphismField {
        if k == 1 {
            return self.clone();
        }
        EndomorphismField::from_matrix(self.power_matrix(k))
    }

    /// Applies the endomorphism to a 1-vector: components go through the
    /// transposed matrix.
    pub fn apply(&self, x: &Multivector) -> Result<Multivector> {
        let comps = x.vector_components()?;
        if comps.len() != self.rank {
            return Err(Error::Invalid(format!(
                "endomorphism rank {} applied to vector of rank {}",
                self.rank,
                comps.len()
            )));
        }
        let out = (0..self.rank)
            .map(|j| {
                ScalarField::sum(
                    (0..self.rank).map(|i| self.entry(i, j).mul(&comps[i])),
                )
            })
            .collect();
        Ok(Multivector::from_vector_components(out))
    }

    /// Pullback on forms of any degree: degree-p coefficients contract with
    /// p x p minors of the matrix.
    pub fn pullback(&self, omega: &AForm) -> Result<AForm> {
        if omega.rank != self.rank {
            return Err(Error::Invalid(format!(
                "endomorphism rank {} pulled back a form of rank {}",
                self.rank, omega.rank
            )));
        }
        let p = omega.degree;
        if p == 0 {
            return Ok(omega.clone());
        }
        let mut out = AForm::zero(self.rank, p);
        for target in combinations(self.rank, p) {
            let mut acc = ScalarField::zero();
            for (source, coeff) in &omega.comps {
                let minor = self.minor_field(&target, source);
                acc = acc.add(&minor.mul(coeff));
            }
            if !acc.is_zero() {
                out = out.with_component(&target, acc);
            }
        }
        Ok(out)
    }

    /// Determinant of the submatrix with the given rows and columns, as a
    /// field sharing the matrix cache.
    fn minor_field(&self, rows: &[usize], cols: &[usize]) -> ScalarField {
        let m = self.matrix.clone();
        let (rows, cols) = (rows.to_vec(), cols.to_vec());
        let p = rows.len();
        ScalarField::from_fn(&format!("minor({:?},{:?})", rows, cols), move |pt, k| {
            let g = m.eval(pt, k)?;
            let mut sub = Vec::with_capacity(p * p);
            for &i in &rows {
                for &j in &cols {
                    sub.push(g[i][j].clone());
                }
            }
            jet_det(&sub, p)
        })
    }

    pub fn trace(&self) -> ScalarField {
        let m = self.matrix.clone();
        let label = format!("tr({})", self.matrix.label());
        ScalarField::from_fn(&label, move |point, order| {
            let g = m.eval(point, order)?;
            let mut acc = Jet::constant(0.0, point.len(), order);
            for i in 0..g.len() {
                acc = acc.add(&g[i][i])?;
            }
            Ok(acc)
        })
    }

    pub fn det_field(&self) -> ScalarField {
        let m = self.matrix.clone();
        let n = self.rank;
        let label = format!("det({})", self.matrix.label());
        ScalarField::from_fn(&label, move |point, order| {
            let g = m.eval(point, order)?;
            let flat: Vec<Jet> = g.iter().flat_map(|r| r.iter().cloned()).collect();
            jet_det(&flat, n)
        })
    }

    /// The transposed-matrix endomorphism: the action induced on the dual
    /// frame, as an endomorphism field in its own right.
    pub fn dual(&self) -> EndomorphismField {
        let m = self.matrix.clone();
        let n = self.rank;
        let label = format!("{}^T", self.matrix.label());
        EndomorphismField::from_matrix(CachedMatrix::new(&label, n, n, move |p, k| {
            let g = m.eval(p, k)?;
            Ok((0..n)
                .map(|i| (0..n).map(|j| g[j][i].clone()).collect())
                .collect())
        }))
    }

    /// N + lambda * identity.
    pub fn shift(&self, lambda: f64) -> EndomorphismField {
        let m = self.matrix.clone();
        let n = self.rank;
        let label = format!("{}+{lambda}id", self.matrix.label());
        EndomorphismField::from_matrix(CachedMatrix::new(&label, n, n, move |p, k| {
            let g = m.eval(p, k)?;
            Ok((0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            if i == j {
                                g[i][j]
                                    .add(&Jet::constant(lambda, p.len(), k))
                                    .expect("shape fixed")
                            } else {
                                g[i][j].clone()
                            }
                        })
                        .collect()
                })
                .collect())
        }))
    }
}
