//! Dirac and Cauchy-Riemann operators on Clifford-valued fields.
//!
//! Partials come from the field's analytic derivatives when it supplies them
//! (and the stencil allows it), otherwise from central differences.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::algebra::{Multivector, ParaVector};
use crate::error::{invalid, Error, Result};
use crate::rng::{substream, unit_sphere, uniform};
use crate::stats::{chunked_moments, MCEstimate};

/// Default finite-difference step.
pub const DEFAULT_H: f64 = 1e-3;

/// Axis-aligned box on which a field may be evaluated.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FieldDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl FieldDomain {
    pub fn unbounded(dim: usize) -> Self {
        FieldDomain {
            lo: vec![f64::NEG_INFINITY; dim + 1],
            hi: vec![f64::INFINITY; dim + 1],
        }
    }

    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::LengthMismatch {
                what: "domain bounds",
                left: lo.len(),
                right: hi.len(),
            });
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(invalid("domain bounds", "every lo must be below hi"));
        }
        Ok(FieldDomain { lo, hi })
    }

    /// True when `x` lies inside with at least `margin` to spare per axis.
    pub fn contains(&self, x: &ParaVector, margin: f64) -> bool {
        x.comps().len() == self.lo.len()
            && x
                .comps()
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(&v, (&lo, &hi))| v - margin >= lo && v + margin <= hi)
    }
}

/// A Clifford-valued function of a para-vector argument.
pub trait CliffordField: Send + Sync {
    /// Algebra dimension `n`; arguments have `n + 1` components.
    fn dim(&self) -> usize;

    fn eval(&self, x: &ParaVector) -> Multivector;

    /// Analytic `d f / d x_i`, if known.
    fn partial(&self, _x: &ParaVector, _i: usize) -> Option<Multivector> {
        None
    }

    /// Analytic `d^2 f / d x_i d x_j`, if known.
    fn second_partial(&self, _x: &ParaVector, _i: usize, _j: usize) -> Option<Multivector> {
        None
    }

    fn has_gradient(&self) -> bool {
        false
    }

    fn has_hessian(&self) -> bool {
        false
    }

    fn domain(&self) -> FieldDomain {
        FieldDomain::unbounded(self.dim())
    }

    fn label(&self) -> String {
        "field".into()
    }
}

impl<F: CliffordField + ?Sized> CliffordField for Box<F> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, x: &ParaVector) -> Multivector {
        (**self).eval(x)
    }
    fn partial(&self, x: &ParaVector, i: usize) -> Option<Multivector> {
        (**self).partial(x, i)
    }
    fn second_partial(&self, x: &ParaVector, i: usize, j: usize) -> Option<Multivector> {
        (**self).second_partial(x, i, j)
    }
    fn has_gradient(&self) -> bool {
        (**self).has_gradient()
    }
    fn has_hessian(&self) -> bool {
        (**self).has_hessian()
    }
    fn domain(&self) -> FieldDomain {
        (**self).domain()
    }
    fn label(&self) -> String {
        (**self).label()
    }
}

impl<F: CliffordField + ?Sized> CliffordField for Arc<F> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, x: &ParaVector) -> Multivector {
        (**self).eval(x)
    }
    fn partial(&self, x: &ParaVector, i: usize) -> Option<Multivector> {
        (**self).partial(x, i)
    }
    fn second_partial(&self, x: &ParaVector, i: usize, j: usize) -> Option<Multivector> {
        (**self).second_partial(x, i, j)
    }
    fn has_gradient(&self) -> bool {
        (**self).has_gradient()
    }
    fn has_hessian(&self) -> bool {
        (**self).has_hessian()
    }
    fn domain(&self) -> FieldDomain {
        (**self).domain()
    }
    fn label(&self) -> String {
        (**self).label()
    }
}

/// Where partial derivatives come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PartialSource {
    /// Analytic partials when the field has them, central differences otherwise.
    Auto,
    /// Always central differences.
    Central,
}

/// Which side the generator multiplies in the Dirac operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Side {
    /// `sum_k e_k d_k f` (left monogenic).
    Left,
    /// `sum_k d_k f e_k` (right monogenic).
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Stencil {
    pub h: f64,
    pub source: PartialSource,
    pub side: Side,
}

impl Stencil {
    pub fn new(h: f64) -> Self {
        Stencil {
            h,
            source: PartialSource::Auto,
            side: Side::Left,
        }
    }

    pub fn central(h: f64) -> Self {
        Stencil {
            source: PartialSource::Central,
            ..Stencil::new(h)
        }
    }

    pub fn right(mut self) -> Self {
        self.side = Side::Right;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(invalid("h", format!("step must be positive, got {}", self.h)));
        }
        Ok(())
    }
}

impl Default for Stencil {
    fn default() -> Self {
        Stencil::new(DEFAULT_H)
    }
}

fn check_point(f: &dyn CliffordField, x: &ParaVector, margin: f64) -> Result<()> {
    if x.dim() != f.dim() {
        return Err(Error::DimensionMismatch {
            left: f.dim(),
            right: x.dim(),
        });
    }
    if !f.domain().contains(x, margin) {
        return Err(Error::OutsideDomain {
            point: x.comps().to_vec(),
            margin,
        });
    }
    Ok(())
}

fn central_partial(f: &dyn CliffordField, x: &ParaVector, i: usize, h: f64) -> Multivector {
    let mut d = f.eval(&x.shifted(i, h));
    d -= &f.eval(&x.shifted(i, -h));
    d * (0.5 / h)
}

/// `d f / d x_i` at `x`.
pub fn partial(f: &dyn CliffordField, x: &ParaVector, i: usize, stencil: &Stencil) -> Result<Multivector> {
    stencil.validate()?;
    check_point(f, x, stencil.h)?;
    if i > f.dim() {
        return Err(Error::IndexOutOfRange {
            what: "partial direction",
            index: i,
            len: f.dim() + 1,
        });
    }
    if stencil.source == PartialSource::Auto {
        if let Some(p) = f.partial(x, i) {
            return Ok(p);
        }
    }
    Ok(central_partial(f, x, i, stencil.h))
}

fn dirac_from_partials(partials: &[Multivector], side: Side) -> Multivector {
    let mut acc = Multivector::zero(partials[0].dim());
    for (k, p) in partials.iter().enumerate().skip(1) {
        let term = match side {
            Side::Left => p.left_mul_generator(k),
            Side::Right => p.right_mul_generator(k),
        };
        acc += &term;
    }
    acc
}

fn all_partials(f: &dyn CliffordField, x: &ParaVector, stencil: &Stencil) -> Result<Vec<Multivector>> {
    (0..=f.dim()).map(|i| partial(f, x, i, stencil)).collect()
}

/// Dirac operator `D_x f = sum_{k>=1} e_k d_k f` with the default stencil at step `h`.
pub fn dirac_apply(f: &dyn CliffordField, x: &ParaVector, h: f64) -> Result<Multivector> {
    dirac_apply_with(f, x, &Stencil::new(h))
}

pub fn dirac_apply_with(f: &dyn CliffordField, x: &ParaVector, stencil: &Stencil) -> Result<Multivector> {
    Ok(dirac_from_partials(&all_partials(f, x, stencil)?, stencil.side))
}

/// Cauchy-Riemann operator `D f = d_0 f + D_x f`.
pub fn cr_apply(f: &dyn CliffordField, x: &ParaVector, h: f64) -> Result<Multivector> {
    cr_apply_with(f, x, &Stencil::new(h))
}

pub fn cr_apply_with(f: &dyn CliffordField, x: &ParaVector, stencil: &Stencil) -> Result<Multivector> {
    let p = all_partials(f, x, stencil)?;
    Ok(&p[0] + &dirac_from_partials(&p, stencil.side))
}

/// Conjugate operator `Dbar f = d_0 f - D_x f`.
pub fn cr_conj_apply(f: &dyn CliffordField, x: &ParaVector, h: f64) -> Result<Multivector> {
    cr_conj_apply_with(f, x, &Stencil::new(h))
}

pub fn cr_conj_apply_with(f: &dyn CliffordField, x: &ParaVector, stencil: &Stencil) -> Result<Multivector> {
    let p = all_partials(f, x, stencil)?;
    Ok(&p[0] - &dirac_from_partials(&p, stencil.side))
}

/// Second-order central-difference Laplacian over all `n + 1` directions.
pub fn fd_laplacian(f: &dyn CliffordField, x: &ParaVector, h: f64) -> Result<Multivector> {
    Stencil::central(h).validate()?;
    check_point(f, x, h)?;
    let centre = f.eval(x);
    let mut acc = Multivector::zero(f.dim());
    for i in 0..=f.dim() {
        acc += &f.eval(&x.shifted(i, h));
        acc += &f.eval(&x.shifted(i, -h));
        acc.axpy(-2.0, &centre);
    }
    Ok(acc * (1.0 / (h * h)))
}

/// The field `x -> D f(x)`, so that `Dbar` can be applied on top of it.
pub struct CauchyRiemannField<F> {
    inner: F,
    stencil: Stencil,
}

impl<F: CliffordField> CauchyRiemannField<F> {
    pub fn new(inner: F, stencil: Stencil) -> Self {
        CauchyRiemannField { inner, stencil }
    }
}

impl<F: CliffordField> CliffordField for CauchyRiemannField<F> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, x: &ParaVector) -> Multivector {
        let p: Vec<Multivector> = (0..=self.dim())
            .map(|i| match self.stencil.source {
                PartialSource::Auto => self
                    .inner
                    .partial(x, i)
                    .unwrap_or_else(|| central_partial(&self.inner, x, i, self.stencil.h)),
                PartialSource::Central => central_partial(&self.inner, x, i, self.stencil.h),
            })
            .collect();
        &p[0] + &dirac_from_partials(&p, self.stencil.side)
    }

    fn partial(&self, x: &ParaVector, i: usize) -> Option<Multivector> {
        if self.stencil.source == PartialSource::Central {
            return None;
        }
        let p: Option<Vec<Multivector>> = (0..=self.dim())
            .map(|k| self.inner.second_partial(x, i, k))
            .collect();
        let p = p?;
        Some(&p[0] + &dirac_from_partials(&p, self.stencil.side))
    }

    fn has_gradient(&self) -> bool {
        self.stencil.source == PartialSource::Auto && self.inner.has_hessian()
    }

    fn domain(&self) -> FieldDomain {
        let mut d = self.inner.domain();
        d.lo.iter_mut().for_each(|v| *v += self.stencil.h);
        d.hi.iter_mut().for_each(|v| *v -= self.stencil.h);
        d
    }

    fn label(&self) -> String {
        format!("D[{}]", self.inner.label())
    }
}

// ---------------------------------------------------------------------------
// Fixtures

/// A constant field.
#[derive(Clone, Debug)]
pub struct Constant {
    pub value: Multivector,
}

impl CliffordField for Constant {
    fn dim(&self) -> usize {
        self.value.dim()
    }
    fn eval(&self, _x: &ParaVector) -> Multivector {
        self.value.clone()
    }
    fn partial(&self, _x: &ParaVector, _i: usize) -> Option<Multivector> {
        Some(Multivector::zero(self.dim()))
    }
    fn second_partial(&self, _x: &ParaVector, _i: usize, _j: usize) -> Option<Multivector> {
        Some(Multivector::zero(self.dim()))
    }
    fn has_gradient(&self) -> bool {
        true
    }
    fn has_hessian(&self) -> bool {
        true
    }
    fn label(&self) -> String {
        format!("const({})", self.value)
    }
}

/// Fueter variable `z_k = x_k - x_0 e_k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FueterVariable {
    dim: usize,
    k: usize,
}

pub fn fueter_variable(dim: usize, k: usize) -> Result<FueterVariable> {
    Multivector::basis(dim, 0)?;
    if k == 0 || k > dim {
        return Err(Error::IndexOutOfRange {
            what: "Fueter variable",
            index: k,
            len: dim + 1,
        });
    }
    Ok(FueterVariable { dim, k })
}

impl FueterVariable {
    pub fn index(&self) -> usize {
        self.k
    }

    fn value(&self, x: &ParaVector) -> Multivector {
        let mut m = Multivector::scalar(self.dim, x.get(self.k));
        m.coeffs_mut()[1 << (self.k - 1)] = -x.get(0);
        m
    }

    fn derivative(&self, i: usize) -> Multivector {
        let mut m = Multivector::zero(self.dim);
        if i == 0 {
            m.coeffs_mut()[1 << (self.k - 1)] = -1.0;
        } else if i == self.k {
            m.coeffs_mut()[0] = 1.0;
        }
        m
    }
}

impl CliffordField for FueterVariable {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &ParaVector) -> Multivector {
        self.value(x)
    }
    fn partial(&self, _x: &ParaVector, i: usize) -> Option<Multivector> {
        Some(self.derivative(i))
    }
    fn second_partial(&self, _x: &ParaVector, _i: usize, _j: usize) -> Option<Multivector> {
        Some(Multivector::zero(self.dim))
    }
    fn has_gradient(&self) -> bool {
        true
    }
    fn has_hessian(&self) -> bool {
        true
    }
    fn label(&self) -> String {
        format!("z{}", self.k)
    }
}

/// Symmetrized product `(1/m!) sum_sigma z_{k_sigma(1)} ... z_{k_sigma(m)}`.
#[derive(Clone, Debug)]
pub struct FueterProduct {
    dim: usize,
    ks: Vec<usize>,
    /// Distinct orderings of `ks`; each carries the same weight.
    orders: Vec<Vec<usize>>,
    factors: Vec<FueterVariable>,
}

pub const MAX_PRODUCT_DEGREE: usize = 4;

pub fn fueter_product(dim: usize, ks: &[usize]) -> Result<FueterProduct> {
    if ks.is_empty() {
        return Err(Error::Empty("Fueter multi-index"));
    }
    if ks.len() > MAX_PRODUCT_DEGREE {
        return Err(invalid(
            "Fueter multi-index",
            format!("degree {} exceeds {MAX_PRODUCT_DEGREE}", ks.len()),
        ));
    }
    let factors = (1..=dim)
        .map(|k| fueter_variable(dim, k))
        .collect::<Result<Vec<_>>>()?;
    for &k in ks {
        if k == 0 || k > dim {
            return Err(Error::IndexOutOfRange {
                what: "Fueter variable",
                index: k,
                len: dim + 1,
            });
        }
    }
    let mut sorted = ks.to_vec();
    sorted.sort_unstable();
    let mut orders = Vec::new();
    distinct_permutations(&mut sorted, 0, &mut orders);
    Ok(FueterProduct {
        dim,
        ks: ks.to_vec(),
        orders,
        factors,
    })
}

fn distinct_permutations(items: &mut Vec<usize>, start: usize, out: &mut Vec<Vec<usize>>) {
    if start == items.len() {
        out.push(items.clone());
        return;
    }
    let mut seen = Vec::new();
    for i in start..items.len() {
        if seen.contains(&items[i]) {
            continue;
        }
        seen.push(items[i]);
        items.swap(start, i);
        distinct_permutations(items, start + 1, out);
        items.swap(start, i);
    }
}

impl FueterProduct {
    pub fn indices(&self) -> &[usize] {
        &self.ks
    }

    /// Sum over orderings of the product where the factor at position `a`
    /// is differentiated along `da` (and likewise `b`, `db`).
    fn assemble(&self, x: &ParaVector, da: Option<usize>, db: Option<usize>) -> Multivector {
        let m = self.ks.len();
        let mut total = Multivector::zero(self.dim);
        let positions: Vec<(Option<usize>, Option<usize>)> = match (da, db) {
            (None, _) => vec![(None, None)],
            (Some(_), None) => (0..m).map(|a| (Some(a), None)).collect(),
            (Some(_), Some(_)) => (0..m)
                .flat_map(|a| (0..m).filter(move |&b| b != a).map(move |b| (Some(a), Some(b))))
                .collect(),
        };
        for order in &self.orders {
            for &(pa, pb) in &positions {
                let mut prod = Multivector::scalar(self.dim, 1.0);
                for (pos, &k) in order.iter().enumerate() {
                    let z = &self.factors[k - 1];
                    let factor = if Some(pos) == pa {
                        z.derivative(da.unwrap())
                    } else if Some(pos) == pb {
                        z.derivative(db.unwrap())
                    } else {
                        z.value(x)
                    };
                    prod = &prod * &factor;
                }
                total += &prod;
            }
        }
        total * (1.0 / self.orders.len() as f64)
    }
}

impl CliffordField for FueterProduct {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &ParaVector) -> Multivector {
        self.assemble(x, None, None)
    }
    fn partial(&self, x: &ParaVector, i: usize) -> Option<Multivector> {
        Some(self.assemble(x, Some(i), None))
    }
    fn second_partial(&self, x: &ParaVector, i: usize, j: usize) -> Option<Multivector> {
        if self.ks.len() < 2 {
            return Some(Multivector::zero(self.dim));
        }
        Some(self.assemble(x, Some(i), Some(j)))
    }
    fn has_gradient(&self) -> bool {
        true
    }
    fn has_hessian(&self) -> bool {
        true
    }
    fn label(&self) -> String {
        let names: Vec<String> = self.ks.iter().map(|k| format!("z{k}")).collect();
        format!("sym({})", names.join(""))
    }
}

/// Scalar coordinate field `x -> x_i`.
#[derive(Clone, Copy, Debug)]
pub struct Coordinate {
    dim: usize,
    i: usize,
}

pub fn coordinate(dim: usize, i: usize) -> Result<Coordinate> {
    Multivector::basis(dim, 0)?;
    if i > dim {
        return Err(Error::IndexOutOfRange {
            what: "coordinate",
            index: i,
            len: dim + 1,
        });
    }
    Ok(Coordinate { dim, i })
}

impl CliffordField for Coordinate {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &ParaVector) -> Multivector {
        Multivector::scalar(self.dim, x.get(self.i))
    }
    fn partial(&self, _x: &ParaVector, i: usize) -> Option<Multivector> {
        Some(Multivector::scalar(self.dim, if i == self.i { 1.0 } else { 0.0 }))
    }
    fn second_partial(&self, _x: &ParaVector, _i: usize, _j: usize) -> Option<Multivector> {
        Some(Multivector::zero(self.dim))
    }
    fn has_gradient(&self) -> bool {
        true
    }
    fn has_hessian(&self) -> bool {
        true
    }
    fn label(&self) -> String {
        format!("x{}", self.i)
    }
}

/// Scalar field `|x|^2`.
#[derive(Clone, Copy, Debug)]
pub struct SquaredNorm {
    dim: usize,
}

pub fn squared_norm(dim: usize) -> Result<SquaredNorm> {
    Multivector::basis(dim, 0)?;
    Ok(SquaredNorm { dim })
}

impl CliffordField for SquaredNorm {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &ParaVector) -> Multivector {
        Multivector::scalar(self.dim, x.norm_sq())
    }
    fn partial(&self, x: &ParaVector, i: usize) -> Option<Multivector> {
        Some(Multivector::scalar(self.dim, 2.0 * x.get(i)))
    }
    fn second_partial(&self, _x: &ParaVector, i: usize, j: usize) -> Option<Multivector> {
        Some(Multivector::scalar(self.dim, if i == j { 2.0 } else { 0.0 }))
    }
    fn has_gradient(&self) -> bool {
        true
    }
    fn has_hessian(&self) -> bool {
        true
    }
    fn label(&self) -> String {
        "|x|^2".into()
    }
}

type EvalFn = Arc<dyn Fn(&ParaVector) -> Multivector + Send + Sync>;

/// A field given by a closure, without analytic derivatives.
#[derive(Clone)]
pub struct FnField {
    dim: usize,
    f: EvalFn,
    domain: Option<FieldDomain>,
    label: String,
}

impl FnField {
    pub fn new<F>(dim: usize, label: impl Into<String>, f: F) -> Self
    where
        F: Fn(&ParaVector) -> Multivector + Send + Sync + 'static,
    {
        FnField {
            dim,
            f: Arc::new(f),
            domain: None,
            label: label.into(),
        }
    }

    pub fn with_domain(mut self, domain: FieldDomain) -> Self {
        self.domain = Some(domain);
        self
    }
}

impl fmt::Debug for FnField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnField").field("dim", &self.dim).field("label", &self.label).finish()
    }
}

impl CliffordField for FnField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &ParaVector) -> Multivector {
        (self.f)(x)
    }
    fn domain(&self) -> FieldDomain {
        self.domain.clone().unwrap_or_else(|| FieldDomain::unbounded(self.dim))
    }
    fn label(&self) -> String {
        self.label.clone()
    }
}

// ---------------------------------------------------------------------------
// Checks

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonogenicityReport {
    pub max_residual: f64,
    pub sample_points: usize,
    pub step: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Largest `|D f(x)|` over `points`; passes iff it is at most `tol`.
pub fn monogenicity_check(
    f: &dyn CliffordField,
    points: &[ParaVector],
    h: f64,
    tol: f64,
) -> Result<MonogenicityReport> {
    monogenicity_check_with(f, points, &Stencil::new(h), tol)
}

pub fn monogenicity_check_with(
    f: &dyn CliffordField,
    points: &[ParaVector],
    stencil: &Stencil,
    tol: f64,
) -> Result<MonogenicityReport> {
    if points.is_empty() {
        return Err(Error::Empty("monogenicity sample set"));
    }
    let mut max_residual: f64 = 0.0;
    for x in points {
        max_residual = max_residual.max(cr_apply_with(f, x, stencil)?.norm());
    }
    Ok(MonogenicityReport {
        max_residual,
        sample_points: points.len(),
        step: stencil.h,
        tol,
        passed: max_residual <= tol,
    })
}

/// Uniform points in the box `[lo, hi]^{n+1}`, reproducible from `seed`.
pub fn sample_box_points(dim: usize, lo: f64, hi: f64, count: usize, seed: u64) -> Result<Vec<ParaVector>> {
    if !(lo < hi) {
        return Err(invalid("box", "lo must be below hi"));
    }
    let mut rng = substream(seed, 0);
    let mut buf = vec![0.0; dim + 1];
    (0..count)
        .map(|_| {
            for v in buf.iter_mut() {
                *v = lo + (hi - lo) * uniform(&mut rng);
            }
            ParaVector::from_slice(&buf)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeanValueReport {
    pub sphere_avg: MCEstimate,
    pub center_val: Multivector,
    /// `|sphere_avg - f(center)|` in the coefficient norm.
    pub gap: f64,
    pub n_quad: usize,
}

impl MeanValueReport {
    /// True when every coefficient of the gap is within `k` standard errors.
    pub fn within_sigma(&self, k: f64) -> bool {
        self.sphere_avg.within_sigma(&self.center_val, k)
    }
}

/// Monte Carlo average of `f` over the sphere of `radius` about `center`.
pub fn mean_value_check(
    f: &dyn CliffordField,
    center: &ParaVector,
    radius: f64,
    n_quad: usize,
    seed: u64,
) -> Result<MeanValueReport> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(invalid("radius", format!("must be positive, got {radius}")));
    }
    if n_quad == 0 {
        return Err(invalid("n_quad", "need at least one quadrature point"));
    }
    check_point(f, center, radius)?;
    let dim = f.dim();
    let width = 1 << dim;
    let moments = chunked_moments(n_quad, width, |i, out| {
        let mut rng = substream(seed, i as u64);
        let mut dir = vec![0.0; dim + 1];
        unit_sphere(&mut rng, &mut dir);
        let y: Vec<f64> = center.comps().iter().zip(&dir).map(|(c, d)| c + radius * d).collect();
        let v = f.eval(&ParaVector::from_slice_unchecked(&y));
        out.copy_from_slice(v.coeffs());
    });
    let sphere_avg = MCEstimate::from_moments(dim, &moments)?;
    let center_val = f.eval(center);
    let gap = (&sphere_avg.mean - &center_val).norm();
    Ok(MeanValueReport {
        sphere_avg,
        center_val,
        gap,
        n_quad,
    })
}

// ---------------------------------------------------------------------------
// Registry

/// A named fixture for configs and the catalog.
#[derive(Clone, Copy)]
pub struct FixtureEntry {
    pub name: &'static str,
    pub description: &'static str,
    /// Whether the fixture is expected to be left monogenic.
    pub monogenic: bool,
    pub provenance: &'static str,
    /// Smallest algebra dimension the fixture needs.
    pub min_dim: usize,
    pub build: fn(usize) -> Result<Box<dyn CliffordField>>,
}

impl fmt::Debug for FixtureEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FixtureEntry").field("name", &self.name).finish()
    }
}

fn boxed<F: CliffordField + 'static>(r: Result<F>) -> Result<Box<dyn CliffordField>> {
    r.map(|f| Box::new(f) as Box<dyn CliffordField>)
}

pub fn fixture_registry() -> Vec<FixtureEntry> {
    vec![
        FixtureEntry {
            name: "z1",
            description: "Fueter variable x1 - x0 e1",
            monogenic: true,
            provenance: "hypercomplex variable",
            min_dim: 1,
            build: |n| boxed(fueter_variable(n, 1)),
        },
        FixtureEntry {
            name: "z2",
            description: "Fueter variable x2 - x0 e2",
            monogenic: true,
            provenance: "hypercomplex variable",
            min_dim: 2,
            build: |n| boxed(fueter_variable(n, 2)),
        },
        FixtureEntry {
            name: "z3",
            description: "Fueter variable x3 - x0 e3",
            monogenic: true,
            provenance: "hypercomplex variable",
            min_dim: 3,
            build: |n| boxed(fueter_variable(n, 3)),
        },
        FixtureEntry {
            name: "z1z1",
            description: "z1^2",
            monogenic: true,
            provenance: "symmetrized Fueter product",
            min_dim: 1,
            build: |n| boxed(fueter_product(n, &[1, 1])),
        },
        FixtureEntry {
            name: "z1z2",
            description: "(z1 z2 + z2 z1) / 2",
            monogenic: true,
            provenance: "symmetrized Fueter product",
            min_dim: 2,
            build: |n| boxed(fueter_product(n, &[1, 2])),
        },
        FixtureEntry {
            name: "z1z1z2",
            description: "symmetrized z1 z1 z2",
            monogenic: true,
            provenance: "symmetrized Fueter product",
            min_dim: 2,
            build: |n| boxed(fueter_product(n, &[1, 1, 2])),
        },
        FixtureEntry {
            name: "z1z2z3",
            description: "symmetrized z1 z2 z3",
            monogenic: true,
            provenance: "symmetrized Fueter product",
            min_dim: 3,
            build: |n| boxed(fueter_product(n, &[1, 2, 3])),
        },
        FixtureEntry {
            name: "x0",
            description: "scalar coordinate x0",
            monogenic: false,
            provenance: "control: D x0 = 1",
            min_dim: 1,
            build: |n| boxed(coordinate(n, 0)),
        },
        FixtureEntry {
            name: "x1",
            description: "scalar coordinate x1",
            monogenic: false,
            provenance: "control: harmonic, D x1 = e1",
            min_dim: 1,
            build: |n| boxed(coordinate(n, 1)),
        },
        FixtureEntry {
            name: "abs2",
            description: "squared norm |x|^2",
            monogenic: false,
            provenance: "control: Laplacian 2(n+1)",
            min_dim: 1,
            build: |n| boxed(squared_norm(n)),
        },
    ]
}

/// Builds the registry fixture `name` in `Cl(dim)`.
pub fn fixture_by_name(name: &str, dim: usize) -> Result<Box<dyn CliffordField>> {
    let entry = fixture_registry()
        .into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| invalid("fixture", format!("unknown fixture {name:?}")))?;
    if dim < entry.min_dim {
        return Err(invalid(
            "fixture",
            format!("{name} needs dimension >= {}, got {dim}", entry.min_dim),
        ));
    }
    (entry.build)(dim)
}
