//! Scalar coordinate functions evaluated as jets.
//!
//! A `ScalarField` is a function on the coordinate patch that can produce its
//! own truncated Taylor expansion at any point and order. Fields are built
//! from parsed expressions, closures, or combinators over other fields; the
//! combinators prune additive and multiplicative identities so that large
//! machine-generated sums (Schouten brackets, determinant expansions) stay
//! cheap to evaluate.

use crate::error::{Error, Result};
use crate::exprlang::Expression;
use crate::jets::Jet;
use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

type EvalFn = dyn Fn(&[f64], usize) -> Result<Jet> + Send + Sync;

#[derive(Clone)]
pub struct ScalarField {
    label: Arc<str>,
    constant: Option<f64>,
    eval_fn: Arc<EvalFn>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarField({})", self.label)
    }
}

fn clip(s: &str) -> String {
    if s.len() > 72 {
        let mut end = 69;
        while !s.is_char_boundary(end) {
            end -= 1;
        }
        format!("{}...", &s[..end])
    } else {
        s.to_string()
    }
}

impl ScalarField {
    pub fn constant(c: f64) -> Self {
        ScalarField {
            label: format!("{c}").into(),
            constant: Some(c),
            eval_fn: Arc::new(move |point, order| {
                Ok(Jet::constant(c, point.len(), order))
            }),
        }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    /// The u-th coordinate function of the patch.
    pub fn coordinate(u: usize, name: &str) -> Self {
        ScalarField {
            label: name.into(),
            constant: None,
            eval_fn: Arc::new(move |point, order| {
                let &x = point.get(u).ok_or(Error::VariableOutOfRange {
                    index: u,
                    vars: point.len(),
                })?;
                Jet::seed_variable(u, x, point.len(), order)
            }),
        }
    }

    pub fn from_expr(expr: Expression) -> Self {
        let label: Arc<str> = clip(&expr.print()).into();
        ScalarField {
            label,
            constant: None,
            eval_fn: Arc::new(move |point, order| expr.eval(point, order)),
        }
    }

    pub fn from_fn<F>(label: &str, f: F) -> Self
    where
        F: Fn(&[f64], usize) -> Result<Jet> + Send + Sync + 'static,
    {
        ScalarField {
            label: label.into(),
            constant: None,
            eval_fn: Arc::new(f),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: &str) -> Self {
        self.label = label.into();
        self
    }

    /// Some(c) when the field is a recognized constant; drives pruning.
    pub fn constant_value(&self) -> Option<f64> {
        self.constant
    }

    pub fn is_zero(&self) -> bool {
        self.constant == Some(0.0)
    }

    pub fn eval(&self, point: &[f64], order: usize) -> Result<Jet> {
        (self.eval_fn)(point, order)
    }

    /// Plain value at a point, no derivative structure.
    pub fn value(&self, point: &[f64]) -> Result<f64> {
        Ok(self.eval(point, 0)?.value())
    }

    pub fn add(&self, other: &ScalarField) -> ScalarField {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        if let (Some(a), Some(b)) = (self.constant, other.constant) {
            return ScalarField::constant(a + b);
        }
        let (a, b) = (self.clone(), other.clone());
        ScalarField {
            label: clip(&format!("{} + {}", a.label, b.label)).into(),
            constant: None,
            eval_fn: Arc::new(move |p, k| a.eval(p, k)?.add(&b.eval(p, k)?)),
        }
    }

    pub fn sub(&self, other: &ScalarField) -> ScalarField {
        if other.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return other.neg();
        }
        if let (Some(a), Some(b)) = (self.constant, other.constant) {
            return ScalarField::constant(a - b);
        }
        let (a, b) = (self.clone(), other.clone());
        ScalarField {
            label: clip(&format!("{} - ({})", a.label, b.label)).into(),
            constant: None,
            eval_fn: Arc::new(move |p, k| a.eval(p, k)?.sub(&b.eval(p, k)?)),
        }
    }

    pub fn neg(&self) -> ScalarField {
        if let Some(c) = self.constant {
            return ScalarField::constant(-c);
        }
        let a = self.clone();
        ScalarField {
            label: clip(&format!("-({})", a.label)).into(),
            constant: None,
            eval_fn: Arc::new(move |p, k| Ok(a.eval(p, k)?.neg())),
        }
    }

    pub fn mul(&self, other: &ScalarField) -> ScalarField {
        if self.is_zero() || other.is_zero() {
            return ScalarField::zero();
        }
        if self.constant == Some(1.0) {
            return other.clone();
        }
        if other.constant == Some(1.0) {
            return self.clone();
        }
        if let (Some(a), Some(b)) = (self.constant, other.constant) {
            return ScalarField::constant(a * b);
        }
        if let Some(c) = self.constant {
            return other.scale(c);
        }
        if let Some(c) = other.constant {
            return self.scale(c);
        }
        let (a, b) = (self.clone(), other.clone());
        ScalarField {
            label: clip(&format!("({})*({})", a.label, b.label)).into(),
            constant: None,
            eval_fn: Arc::new(move |p, k| a.eval(p, k)?.mul(&b.eval(p, k)?)),
        }
    }

    pub fn scale(&self, c: f64) -> ScalarField {
        if c == 0.0 || self.is_zero() {
            return ScalarField::zero();
        }
        if c == 1.0 {
            return self.clone();
        }
        if let Some(a) = self.constant {
            return ScalarField::constant(c * a);
        }
        let a = self.clone();
        ScalarField {
            label: clip(&format!("{c}*({})", a.label)).into(),
            constant: None,
            eval_fn: Arc::new(move |p, k| Ok(a.eval(p, k)?.scale(c))),
        }
    }

    pub fn recip(&self) -> ScalarField {
        if let Some(c) = self.constant {
            if c != 0.0 {
                return ScalarField::constant(1.0 / c);
            }
        }
        let a = self.clone();
        ScalarField {
            label: clip(&format!("1/({})", a.label)).into(),
            constant: None,
            eval_fn: Arc::new(move |p, k| a.eval(p, k)?.recip()),
        }
    }

    pub fn div(&self, other: &ScalarField) -> ScalarField {
        self.mul(&other.recip())
    }

    pub fn exp(&self) -> ScalarField {
        if let Some(c) = self.constant {
            return ScalarField::constant(c.exp());
        }
        let a = self.clone();
        ScalarField {
            label: clip(&format!("exp({})", a.label)).into(),
            constant: None,
            eval_fn: Arc::new(move |p, k| Ok(a.eval(p, k)?.exp())),
        }
    }

    pub fn ln(&self) -> ScalarField {
        if let Some(c) = self.constant {
            if c > 0.0 {
                return ScalarField::constant(c.ln());
            }
        }
        let a = self.clone();
        ScalarField {
            label: clip(&format!("log({})", a.label)).into(),
            constant: None,
            eval_fn: Arc::new(move |p, k| a.eval(p, k)?.ln()),
        }
    }

    pub fn powi(&self, e: i64) -> ScalarField {
        if e == 0 {
            return ScalarField::one();
        }
        if e == 1 {
            return self.clone();
        }
        if let Some(c) = self.constant {
            if c != 0.0 || e > 0 {
                return ScalarField::constant(c.powi(e as i32));
            }
        }
        let a = self.clone();
        ScalarField {
            label: clip(&format!("({})^{e}", a.label)).into(),
            constant: None,
            eval_fn: Arc::new(move |p, k| a.eval(p, k)?.powi(e)),
        }
    }

    /// Partial derivative in the u-th coordinate. Evaluates the parent one
    /// order higher and shifts coefficients, so it is exact.
    pub fn partial(&self, u: usize) -> ScalarField {
        if self.constant.is_some() {
            return ScalarField::zero();
        }
        let a = self.clone();
        ScalarField {
            label: clip(&format!("d_{u}({})", a.label)).into(),
            constant: None,
            eval_fn: Arc::new(move |p, k| a.eval(p, k + 1)?.partial(u)),
        }
    }

    /// Pruned sum of a collection of fields.
    pub fn sum<I: IntoIterator<Item = ScalarField>>(items: I) -> ScalarField {
        items
            .into_iter()
            .fold(ScalarField::zero(), |acc, f| acc.add(&f))
    }
}

type MatrixFn = dyn Fn(&[f64], usize) -> Result<Vec<Vec<Jet>>> + Send + Sync;
type MatrixCache = Mutex<HashMap<(Vec<u64>, usize), Arc<Vec<Vec<Jet>>>>>;

/// A matrix of scalar fields whose entries share one evaluation.
///
/// Derived tensors (powers and inverses of a recursion operator, products of
/// structure matrices) are naturally computed a whole matrix at a time, while
/// downstream code consumes single entries. Entries handed out by `entry`
/// evaluate through a memo keyed on the exact point bits and jet order, so a
/// residual that touches every entry at one sample point triggers one matrix
/// computation, not rank-squared of them.
#[derive(Clone)]
pub struct CachedMatrix {
    rows: usize,
    cols: usize,
    label: Arc<str>,
    compute: Arc<MatrixFn>,
    cache: Arc<MatrixCache>,
}

const CACHE_CAP: usize = 512;

impl CachedMatrix {
    pub fn new<F>(label: &str, rows: usize, cols: usize, compute: F) -> Self
    where
        F: Fn(&[f64], usize) -> Result<Vec<Vec<Jet>>> + Send + Sync + 'static,
    {
        CachedMatrix {
            rows,
            cols,
            label: label.into(),
            compute: Arc::new(compute),
            cache: Arc::new(Mutex::new(HashMap::new())),
        }
    }

    /// Builds a cached matrix directly from a grid of fields.
    pub fn from_fields(label: &str, fields: Vec<Vec<ScalarField>>) -> Self {
        let rows = fields.len();
        let cols = fields.first().map_or(0, |r| r.len());
        CachedMatrix::new(label, rows, cols, move |point, order| {
            fields
                .iter()
                .map(|row| row.iter().map(|f| f.eval(point, order)).collect())
                .collect()
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, point: &[f64], order: usize) -> Result<Arc<Vec<Vec<Jet>>>> {
        let key = (
            point.iter().map(|x| x.to_bits()).collect::<Vec<u64>>(),
            order,
        );
        if let Some(hit) = self.cache.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let grid = (self.compute)(point, order)?;
        if grid.len() != self.rows || grid.iter().any(|r| r.len() != self.cols) {
            return Err(Error::Invalid(format!(
                "matrix {} produced a grid of the wrong shape",
                self.label
            )));
        }
        let grid = Arc::new(grid);
        let mut map = self.cache.lock().unwrap();
        if map.len() >= CACHE_CAP {
            map.clear();
        }
        map.insert(key, grid.clone());
        Ok(grid)
    }

    /// A scalar field view of one entry, evaluating through the shared memo.
    pub fn entry(&self, i: usize, j: usize) -> ScalarField {
        assert!(i < self.rows && j < self.cols, "matrix entry out of range");
        let m = self.clone();
        ScalarField::from_fn(&format!("{}[{i}][{j}]", self.label), move |p, k| {
            Ok(m.eval(p, k)?[i][j].clone())
        })
    }
}
