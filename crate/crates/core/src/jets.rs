//! Truncated Taylor ("jet") arithmetic in several variables.
//!
//! A `Jet` holds the derivatives of a smooth function at a point, up to a
//! fixed total order K: coefficients are stored in the derivative convention
//! (the entry for a multi-index alpha is the partial derivative
//! f^(alpha)(x0), not the monomial coefficient f^(alpha)/alpha!). All ring
//! operations are exact on the truncation: no step sizes, no roundoff beyond
//! f64 arithmetic itself. Derivatives read off a jet are therefore exact
//! values of the chain rule, which is what the residual checks in the
//! geometric layers rely on.

use crate::error::{Error, Result};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Index tables for the dense coefficient layout of jets with a given number
/// of variables and truncation order. Built once per (vars, order) pair and
/// shared; the product table folds the Leibniz binomial factors in.
struct JetSpace {
    /// All multi-indices with |alpha| <= order, graded lexicographic.
    indices: Vec<Vec<u16>>,
    position: HashMap<Vec<u16>, usize>,
    /// Flattened pair table: slot i * len + j holds the target position of
    /// alpha_i + alpha_j and the multi-binomial C(alpha_i + alpha_j, alpha_i),
    /// or u32::MAX when the sum exceeds the truncation order.
    product: Vec<(u32, f64)>,
}

fn enumerate_indices(vars: usize, order: usize) -> Vec<Vec<u16>> {
    let mut out = Vec::new();
    for total in 0..=order {
        let mut idx = vec![0u16; vars];
        fn rec(idx: &mut Vec<u16>, pos: usize, left: u16, out: &mut Vec<Vec<u16>>) {
            if pos + 1 == idx.len() {
                idx[pos] = left;
                out.push(idx.clone());
                return;
            }
            for v in (0..=left).rev() {
                idx[pos] = v;
                rec(idx, pos + 1, left - v, out);
            }
        }
        if vars == 0 {
            if total == 0 {
                out.push(Vec::new());
            }
        } else {
            rec(&mut idx, 0, total as u16, &mut out);
        }
    }
    out
}

fn binomial(n: u16, k: u16) -> f64 {
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * f64::from(n - i) / f64::from(i + 1);
    }
    acc
}

impl JetSpace {
    fn build(vars: usize, order: usize) -> JetSpace {
        let indices = enumerate_indices(vars, order);
        let degree: Vec<usize> = indices
            .iter()
            .map(|a| a.iter().map(|&x| usize::from(x)).sum())
            .collect();
        let mut position = HashMap::with_capacity(indices.len());
        for (p, a) in indices.iter().enumerate() {
            position.insert(a.clone(), p);
        }
        let len = indices.len();
        let mut product = vec![(u32::MAX, 0.0); len * len];
        for i in 0..len {
            for j in 0..len {
                if degree[i] + degree[j] > order {
                    continue;
                }
                let sum: Vec<u16> = indices[i]
                    .iter()
                    .zip(&indices[j])
                    .map(|(a, b)| a + b)
                    .collect();
                let target = position[&sum];
                let factor: f64 = sum
                    .iter()
                    .zip(&indices[i])
                    .map(|(&g, &a)| binomial(g, a))
                    .product();
                product[i * len + j] = (target as u32, factor);
            }
        }
        JetSpace {
            indices,
            position,
            product,
        }
    }
}

type SpaceCache = Mutex<HashMap<(usize, usize), Arc<JetSpace>>>;

fn space(vars: usize, order: usize) -> Arc<JetSpace> {
    static CACHE: OnceLock<SpaceCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap();
    map.entry((vars, order))
        .or_insert_with(|| Arc::new(JetSpace::build(vars, order)))
        .clone()
}

/// Truncated Taylor expansion of a scalar function at a point.
#[derive(Clone)]
pub struct Jet {
    vars: usize,
    order: usize,
    coeffs: Vec<f64>,
}

impl std::fmt::Debug for Jet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Jet")
            .field("vars", &self.vars)
            .field("order", &self.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl Jet {
    pub fn constant(value: f64, vars: usize, order: usize) -> Jet {
        let sp = space(vars, order);
        let mut coeffs = vec![0.0; sp.indices.len()];
        coeffs[0] = value;
        Jet {
            vars,
            order,
            coeffs,
        }
    }

    /// The jet of the coordinate function x_index at the given value: constant
    /// term `value`, first derivative 1 in its own slot, everything else 0.
    pub fn seed_variable(index: usize, value: f64, vars: usize, order: usize) -> Result<Jet> {
        if index >= vars {
            return Err(Error::VariableOutOfRange { index, vars });
        }
        let mut jet = Jet::constant(value, vars, order);
        if order >= 1 {
            let sp = space(vars, order);
            let mut unit = vec![0u16; vars];
            unit[index] = 1;
            let pos = sp.position[&unit];
            jet.coeffs[pos] = 1.0;
        }
        Ok(jet)
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Value of the underlying function at the expansion point.
    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Partial derivative for a multi-index, in the derivative convention.
    pub fn derivative(&self, alpha: &[usize]) -> Result<f64> {
        if alpha.len() != self.vars {
            return Err(Error::PointDimension {
                got: alpha.len(),
                expected: self.vars,
            });
        }
        let key: Vec<u16> = alpha.iter().map(|&x| x as u16).collect();
        let sp = space(self.vars, self.order);
        match sp.position.get(&key) {
            Some(&p) => Ok(self.coeffs[p]),
            None => Err(Error::Invalid(format!(
                "multi-index {:?} exceeds truncation order {}",
                alpha, self.order
            ))),
        }
    }

    /// Reinterprets this jet in a larger variable set: the function does not
    /// depend on the appended variables, so every mixed derivative touching
    /// them is zero.
    pub fn extend_vars(&self, total: usize) -> Result<Jet> {
        if total < self.vars {
            return Err(Error::VariableOutOfRange {
                index: total,
                vars: self.vars,
            });
        }
        if total == self.vars {
            return Ok(self.clone());
        }
        let src = space(self.vars, self.order);
        let dst = space(total, self.order);
        let mut out = Jet::constant(0.0, total, self.order);
        for (pos, alpha) in src.indices.iter().enumerate() {
            if self.coeffs[pos] == 0.0 {
                continue;
            }
            let mut padded = alpha.clone();
            padded.resize(total, 0);
            out.coeffs[dst.position[&padded]] = self.coeffs[pos];
        }
        Ok(out)
    }

    /// Restricts to the slice where variable `var` is frozen at its
    /// expansion value: keeps the coefficients whose multi-index does not
    /// touch `var` and removes that position from the index.
    pub fn drop_var(&self, var: usize) -> Result<Jet> {
        if var >= self.vars {
            return Err(Error::VariableOutOfRange {
                index: var,
                vars: self.vars,
            });
        }
        let src = space(self.vars, self.order);
        let dst = space(self.vars - 1, self.order);
        let mut out = Jet::constant(0.0, self.vars - 1, self.order);
        for (pos, alpha) in src.indices.iter().enumerate() {
            if alpha[var] != 0 || self.coeffs[pos] == 0.0 {
                continue;
            }
            let mut kept = alpha.clone();
            kept.remove(var);
            out.coeffs[dst.position[&kept]] = self.coeffs[pos];
        }
        Ok(out)
    }

    /// First derivative with respect to variable `u`.
    pub fn first_derivative(&self, u: usize) -> Result<f64> {
        let mut alpha = vec![0usize; self.vars];
        if u >= self.vars {
            return Err(Error::VariableOutOfRange {
                index: u,
                vars: self.vars,
            });
        }
        alpha[u] = 1;
        self.derivative(&alpha)
    }

    /// The jet of the partial derivative d/dx_u, one order lower. In the
    /// derivative convention this is a plain coefficient shift.
    pub fn partial(&self, u: usize) -> Result<Jet> {
        if u >= self.vars {
            return Err(Error::VariableOutOfRange {
                index: u,
                vars: self.vars,
            });
        }
        if self.order == 0 {
            return Err(Error::Invalid(
                "cannot differentiate an order-0 jet".into(),
            ));
        }
        let sp = space(self.vars, self.order);
        let target = space(self.vars, self.order - 1);
        let mut coeffs = vec![0.0; target.indices.len()];
        for (pos, alpha) in target.indices.iter().enumerate() {
            let mut shifted = alpha.clone();
            shifted[u] += 1;
            coeffs[pos] = self.coeffs[sp.position[&shifted]];
        }
        Ok(Jet {
            vars: self.vars,
            order: self.order - 1,
            coeffs,
        })
    }

    fn check_shape(&self, other: &Jet) -> Result<()> {
        if self.vars != other.vars || self.order != other.order {
            return Err(Error::JetShapeMismatch {
                vars_left: self.vars,
                order_left: self.order,
                vars_right: other.vars,
                order_right: other.order,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Jet) -> Result<Jet> {
        self.check_shape(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Jet {
            vars: self.vars,
            order: self.order,
            coeffs,
        })
    }

    pub fn sub(&self, other: &Jet) -> Result<Jet> {
        self.check_shape(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Jet {
            vars: self.vars,
            order: self.order,
            coeffs,
        })
    }

    pub fn neg(&self) -> Jet {
        Jet {
            vars: self.vars,
            order: self.order,
            coeffs: self.coeffs.iter().map(|a| -a).collect(),
        }
    }

    pub fn scale(&self, factor: f64) -> Jet {
        Jet {
            vars: self.vars,
            order: self.order,
            coeffs: self.coeffs.iter().map(|a| a * factor).collect(),
        }
    }

    pub fn add_scalar(&self, value: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += value;
        out
    }

    /// Leibniz product: (fg)^(gamma) = sum over alpha+beta=gamma of
    /// C(gamma, alpha) f^(alpha) g^(beta).
    pub fn mul(&self, other: &Jet) -> Result<Jet> {
        self.check_shape(other)?;
        let sp = space(self.vars, self.order);
        let len = sp.indices.len();
        let mut coeffs = vec![0.0; len];
        for i in 0..len {
            let a = self.coeffs[i];
            if a == 0.0 {
                continue;
            }
            let row = &sp.product[i * len..(i + 1) * len];
            for (j, &(target, factor)) in row.iter().enumerate() {
                if target == u32::MAX {
                    continue;
                }
                let b = other.coeffs[j];
                if b == 0.0 {
                    continue;
                }
                coeffs[target as usize] += a * b * factor;
            }
        }
        Ok(Jet {
            vars: self.vars,
            order: self.order,
            coeffs,
        })
    }

    /// Composes with an analytic function g given its derivatives at the
    /// constant term: result = sum over k of g^(k)(x0)/k! * (self - x0)^k.
    /// Exact on the truncation since (self - x0) is nilpotent.
    fn analytic(&self, derivs: &[f64]) -> Jet {
        let mut nil = self.clone();
        nil.coeffs[0] = 0.0;
        let mut result = Jet::constant(derivs[0], self.vars, self.order);
        let mut power = Jet::constant(1.0, self.vars, self.order);
        let mut factorial = 1.0;
        for (k, &d) in derivs.iter().enumerate().skip(1) {
            factorial *= k as f64;
            power = power.mul(&nil).expect("shape preserved");
            result = result
                .add(&power.scale(d / factorial))
                .expect("shape preserved");
        }
        result
    }

    pub fn recip(&self) -> Result<Jet> {
        let x0 = self.value();
        if x0 == 0.0 {
            return Err(Error::DivisionByZero);
        }
        let mut derivs = vec![0.0; self.order + 1];
        let mut d = 1.0 / x0;
        derivs[0] = d;
        for k in 1..=self.order {
            d *= -(k as f64) / x0;
            derivs[k] = d;
        }
        Ok(self.analytic(&derivs))
    }

    pub fn div(&self, other: &Jet) -> Result<Jet> {
        self.mul(&other.recip()?)
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        let derivs = vec![e; self.order + 1];
        self.analytic(&derivs)
    }

    pub fn ln(&self) -> Result<Jet> {
        let x0 = self.value();
        if x0 <= 0.0 {
            return Err(Error::LogNonPositive { value: x0 });
        }
        let mut derivs = vec![0.0; self.order + 1];
        derivs[0] = x0.ln();
        let mut d = 1.0;
        for k in 1..=self.order {
            // d^k/dx^k ln x = (-1)^(k-1) (k-1)! / x^k
            d *= if k == 1 { 1.0 / x0 } else { -((k - 1) as f64) / x0 };
            derivs[k] = d;
        }
        Ok(self.analytic(&derivs))
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [s, c, -s, -c];
        let derivs: Vec<f64> = (0..=self.order).map(|k| cycle[k % 4]).collect();
        self.analytic(&derivs)
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [c, -s, -c, s];
        let derivs: Vec<f64> = (0..=self.order).map(|k| cycle[k % 4]).collect();
        self.analytic(&derivs)
    }

    /// Integer power; negative exponents require an invertible constant term.
    pub fn powi(&self, exponent: i64) -> Result<Jet> {
        if exponent < 0 {
            return self.recip()?.powi(-exponent);
        }
        let mut result = Jet::constant(1.0, self.vars, self.order);
        let mut base = self.clone();
        let mut e = exponent;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(result)
    }

    /// Largest absolute coefficient; the norm used by residual checks.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

/// Relative pivot tolerance for elimination over the jet ring: a pivot is
/// usable when its constant term exceeds 1e-12 times the largest constant
/// term in its row.
const PIVOT_REL_TOL: f64 = 1e-12;

fn eliminate(matrix: &mut [Vec<Jet>], rhs: &mut [Vec<Jet>]) -> Result<(f64, Jet)> {
    let n = matrix.len();
    let (vars, order) = if n == 0 {
        (0, 0)
    } else {
        (matrix[0][0].vars(), matrix[0][0].order())
    };
    let mut det = Jet::constant(1.0, vars, order);
    let mut sign = 1.0;
    for col in 0..n {
        let mut best = col;
        let mut best_mag = matrix[col][col].value().abs();
        for row in col + 1..n {
            let mag = matrix[row][col].value().abs();
            if mag > best_mag {
                best = row;
                best_mag = mag;
            }
        }
        let row_scale = matrix[best]
            .iter()
            .fold(0.0f64, |m, e| m.max(e.value().abs()));
        if best_mag <= PIVOT_REL_TOL * row_scale.max(1.0) {
            return Err(Error::SingularMatrix {
                column: col,
                pivot: best_mag,
            });
        }
        if best != col {
            matrix.swap(best, col);
            rhs.swap(best, col);
            sign = -sign;
        }
        let pivot = matrix[col][col].clone();
        det = det.mul(&pivot)?;
        for row in col + 1..n {
            let factor = matrix[row][col].div(&pivot)?;
            if factor.max_abs() == 0.0 {
                continue;
            }
            for k in col..n {
                let delta = factor.mul(&matrix[col][k])?;
                matrix[row][k] = matrix[row][k].sub(&delta)?;
            }
            for k in 0..rhs[row].len() {
                let delta = factor.mul(&rhs[col][k])?;
                rhs[row][k] = rhs[row][k].sub(&delta)?;
            }
        }
    }
    Ok((sign, det))
}

/// Solves M x = b over the jet ring by Gaussian elimination with partial
/// pivoting on the constant terms. `matrix` is row-major n x n.
pub fn jet_linear_solve(matrix: &[Jet], rhs: &[Jet]) -> Result<Vec<Jet>> {
    let n = rhs.len();
    if matrix.len() != n * n {
        return Err(Error::Invalid(format!(
            "matrix has {} entries, expected {} for a {}-dim solve",
            matrix.len(),
            n * n,
            n
        )));
    }
    let mut m: Vec<Vec<Jet>> = (0..n)
        .map(|i| matrix[i * n..(i + 1) * n].to_vec())
        .collect();
    let mut b: Vec<Vec<Jet>> = rhs.iter().map(|x| vec![x.clone()]).collect();
    eliminate(&mut m, &mut b)?;
    // Back substitution.
    let (vars, order) = (rhs[0].vars(), rhs[0].order());
    let mut x = vec![Jet::constant(0.0, vars, order); n];
    for row in (0..n).rev() {
        let mut acc = b[row][0].clone();
        for col in row + 1..n {
            acc = acc.sub(&m[row][col].mul(&x[col])?)?;
        }
        x[row] = acc.div(&m[row][row])?;
    }
    Ok(x)
}

/// Determinant of a square jet matrix via the same elimination.
pub fn jet_det(matrix: &[Jet], n: usize) -> Result<Jet> {
    if matrix.len() != n * n {
        return Err(Error::Invalid(format!(
            "matrix has {} entries, expected {}",
            matrix.len(),
            n * n
        )));
    }
    if n == 0 {
        return Ok(Jet::constant(1.0, 0, 0));
    }
    let mut m: Vec<Vec<Jet>> = (0..n)
        .map(|i| matrix[i * n..(i + 1) * n].to_vec())
        .collect();
    let mut b: Vec<Vec<Jet>> = vec![Vec::new(); n];
    match eliminate(&mut m, &mut b) {
        Ok((sign, det)) => Ok(det.scale(sign)),
        Err(Error::SingularMatrix { .. }) => {
            // A singular matrix has a well-defined determinant; recompute by
            // full pivoting-free expansion is not needed: elimination failed
            // only because every candidate pivot in some column was ~0, so
            // the determinant's constant term is 0. Fall back to Leibniz
            // expansion for small n to keep the derivative structure exact.
            let (vars, order) = (matrix[0].vars(), matrix[0].order());
            let mut det = Jet::constant(0.0, vars, order);
            let mut perm: Vec<usize> = (0..n).collect();
            loop {
                let mut sign = 1.0;
                for i in 0..n {
                    for j in i + 1..n {
                        if perm[i] > perm[j] {
                            sign = -sign;
                        }
                    }
                }
                let mut term = Jet::constant(sign, vars, order);
                for (row, &col) in perm.iter().enumerate() {
                    term = term.mul(&matrix[row * n + col])?;
                }
                det = det.add(&term)?;
                // Next permutation in lexicographic order.
                let mut i = n as isize - 2;
                while i >= 0 && perm[i as usize] > perm[i as usize + 1] {
                    i -= 1;
                }
                if i < 0 {
                    break;
                }
                let i = i as usize;
                let mut j = n - 1;
                while perm[j] < perm[i] {
                    j -= 1;
                }
                perm.swap(i, j);
                perm[i + 1..].reverse();
            }
            Ok(det)
        }
        Err(e) => Err(e),
    }
}
