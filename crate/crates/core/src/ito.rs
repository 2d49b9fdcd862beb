//! Ito and Stieltjes sums on grid paths, and the classical and Clifford Ito
//! formulas evaluated as pathwise identities with measured residuals.
//!
//! For a para-vector path `X` the Clifford one-forms are `dZ_0 = dX_0` and
//! `dZ_k = dX_k - e_k dX_0`, so that `dZ_0 (D f) + sum_k dZ_k d_k f` equals
//! `sum_i dX_i d_i f` identically.

use std::io;

use serde::{Deserialize, Serialize};

use crate::algebra::{Multivector, ParaVector};
use crate::calculus::{CliffordField, Stencil};
use crate::error::{invalid, Error, Result};
use crate::process::{ensemble_moments, PathConfig, PathPrefix, ProcessPath};
use crate::stats::ols_slope;

/// Sign of the `e_k dX_0` term in `dZ_k`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DzConvention {
    /// `dZ_k = dX_k - e_k dX_0`; consistent with `z_k = x_k - x_0 e_k`.
    #[default]
    Minus,
    /// `dZ_k = dX_k + e_k dX_0`.
    Plus,
}

/// Side on which the one-forms multiply the derivatives.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormOrder {
    /// `dZ (D f)`, paired with the left Cauchy-Riemann operator.
    #[default]
    Left,
    /// `(f D) dZ`, paired with the right Cauchy-Riemann operator.
    Right,
}

/// How second-order increment products `dX_i dX_j` are realised.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Covariation {
    /// Products of martingale increments `dM_i dM_j` on the path itself.
    #[default]
    IncrementProducts,
    /// The Brownian expectation `delta_ij dt`.
    Brownian,
}

/// Range of `j` in the second-order sum `sum_j dZ_j dX_i d_j d_i f`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SecondOrderRange {
    /// `j = 1..n`: the `j = 0` contribution is carried by `dZ_0 dX_i D(d_i f)`.
    #[default]
    FromOne,
    /// `j = 0..n`, which counts the `dX_0 dX_i d_0 d_i f` terms twice.
    FromZero,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItoOptions {
    pub dz: DzConvention,
    pub order: FormOrder,
    pub covariation: Covariation,
    pub second_order: SecondOrderRange,
}

impl ItoOptions {
    pub fn brownian() -> Self {
        ItoOptions {
            covariation: Covariation::Brownian,
            ..Default::default()
        }
    }
}

/// The one-forms `dZ_0, ..., dZ_n` for one grid step.
#[derive(Clone, Debug, PartialEq)]
pub struct ItoIncrement {
    pub dz: Vec<Multivector>,
}

impl ItoIncrement {
    pub fn new(dx: &[f64], convention: DzConvention) -> Result<Self> {
        if dx.len() < 2 {
            return Err(invalid("increment", "need at least two components"));
        }
        let dim = dx.len() - 1;
        Ok(ItoIncrement {
            dz: (0..=dim).map(|j| one_form(dim, j, dx[j], dx[0], convention)).collect(),
        })
    }
}

fn one_form(dim: usize, j: usize, dxj: f64, dx0: f64, convention: DzConvention) -> Multivector {
    let mut m = Multivector::scalar(dim, dxj);
    if j > 0 {
        let s = match convention {
            DzConvention::Minus => -1.0,
            DzConvention::Plus => 1.0,
        };
        m.coeffs_mut()[1 << (j - 1)] = s * dx0;
    }
    m
}

/// Left-point sum `sum_k F(t_k) (M(t_{k+1}) - M(t_k))`.
pub fn ito_integral(integrand: &[Multivector], driver: &[f64]) -> Result<Multivector> {
    riemann_sum(integrand, driver, "Ito integrand")
}

/// Pathwise Lebesgue-Stieltjes sum against a finite-variation driver.
pub fn stieltjes_integral(integrand: &[Multivector], driver: &[f64]) -> Result<Multivector> {
    riemann_sum(integrand, driver, "Stieltjes integrand")
}

fn riemann_sum(integrand: &[Multivector], driver: &[f64], what: &'static str) -> Result<Multivector> {
    if integrand.len() != driver.len() {
        return Err(Error::LengthMismatch {
            what,
            left: integrand.len(),
            right: driver.len(),
        });
    }
    let first = integrand.first().ok_or(Error::Empty(what))?;
    let mut acc = Multivector::zero(first.dim());
    for k in 0..driver.len() - 1 {
        acc.axpy(driver[k + 1] - driver[k], &integrand[k]);
    }
    Ok(acc)
}

/// Ito integral of an integrand that only ever sees the path prefix up to the
/// left grid point, against martingale component `i`.
pub fn ito_integral_adapted<F>(path: &ProcessPath, i: usize, integrand: F) -> Result<Multivector>
where
    F: Fn(&PathPrefix<'_>) -> Multivector,
{
    adapted_sum(path, &path.martingale_component(i)?, integrand)
}

/// Stieltjes analogue of [`ito_integral_adapted`] against the finite-variation part.
pub fn stieltjes_integral_adapted<F>(path: &ProcessPath, i: usize, integrand: F) -> Result<Multivector>
where
    F: Fn(&PathPrefix<'_>) -> Multivector,
{
    adapted_sum(path, &path.fv_component(i)?, integrand)
}

fn adapted_sum<F>(path: &ProcessPath, driver: &[f64], integrand: F) -> Result<Multivector>
where
    F: Fn(&PathPrefix<'_>) -> Multivector,
{
    let mut acc = Multivector::zero(path.dim());
    for k in 0..path.n_steps() {
        let v = integrand(&path.prefix(k)?);
        acc.axpy(driver[k + 1] - driver[k], &v);
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// Time-dependent fields

/// `f(t, x)` with analytic time and space derivatives.
pub trait TimeDependentField: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, t: f64, x: &ParaVector) -> Multivector;
    fn time_partial(&self, t: f64, x: &ParaVector) -> Option<Multivector>;
    fn partial(&self, t: f64, x: &ParaVector, i: usize) -> Option<Multivector>;
    fn second_partial(&self, t: f64, x: &ParaVector, i: usize, j: usize) -> Option<Multivector>;
}

/// A time-independent field viewed as `f(t, x) = f(x)`.
pub struct Autonomous<F>(pub F);

impl<F: CliffordField> TimeDependentField for Autonomous<F> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn eval(&self, _t: f64, x: &ParaVector) -> Multivector {
        self.0.eval(x)
    }
    fn time_partial(&self, _t: f64, _x: &ParaVector) -> Option<Multivector> {
        Some(Multivector::zero(self.0.dim()))
    }
    fn partial(&self, _t: f64, x: &ParaVector, i: usize) -> Option<Multivector> {
        self.0.partial(x, i)
    }
    fn second_partial(&self, _t: f64, x: &ParaVector, i: usize, j: usize) -> Option<Multivector> {
        self.0.second_partial(x, i, j)
    }
}

/// `f(t, x) = t x_i`.
#[derive(Clone, Copy, Debug)]
pub struct TimeLinear {
    pub dim: usize,
    pub i: usize,
}

impl TimeDependentField for TimeLinear {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, t: f64, x: &ParaVector) -> Multivector {
        Multivector::scalar(self.dim, t * x.get(self.i))
    }
    fn time_partial(&self, _t: f64, x: &ParaVector) -> Option<Multivector> {
        Some(Multivector::scalar(self.dim, x.get(self.i)))
    }
    fn partial(&self, t: f64, _x: &ParaVector, i: usize) -> Option<Multivector> {
        Some(Multivector::scalar(self.dim, if i == self.i { t } else { 0.0 }))
    }
    fn second_partial(&self, _t: f64, _x: &ParaVector, _i: usize, _j: usize) -> Option<Multivector> {
        Some(Multivector::zero(self.dim))
    }
}

// ---------------------------------------------------------------------------
// Residuals

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ItoReport {
    pub lhs: Multivector,
    pub rhs: Multivector,
    pub residual_norm: f64,
    pub n_steps: usize,
    pub dt: f64,
}

impl ItoReport {
    fn new(lhs: Multivector, rhs: Multivector, path: &ProcessPath) -> Self {
        let residual_norm = (&lhs - &rhs).norm();
        ItoReport {
            lhs,
            rhs,
            residual_norm,
            n_steps: path.n_steps(),
            dt: path.times()[path.n_steps()] / path.n_steps() as f64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CliffordItoReport {
    pub report: ItoReport,
    /// `sum_i f_i dX_i + 1/2 sum_ij f_ij d<X_i, X_j>` on the same path.
    pub classical_rhs: Multivector,
    /// `|Clifford RHS - classical RHS|`.
    pub regrouping_gap: f64,
}

/// Analytic derivatives of `f` at one point, Hessian stored symmetric.
struct Jet {
    grad: Vec<Multivector>,
    hess: Vec<Multivector>,
    w: usize,
}

impl Jet {
    fn of(f: &dyn CliffordField, x: &ParaVector) -> Result<Self> {
        let w = f.dim() + 1;
        let mut grad = Vec::with_capacity(w);
        for i in 0..w {
            grad.push(f.partial(x, i).ok_or(Error::MissingDerivatives("gradient"))?);
        }
        let mut hess = vec![Multivector::zero(f.dim()); w * w];
        for i in 0..w {
            for j in i..w {
                let h = f.second_partial(x, i, j).ok_or(Error::MissingDerivatives("Hessian"))?;
                hess[j * w + i] = h.clone();
                hess[i * w + j] = h;
            }
        }
        Ok(Jet { grad, hess, w })
    }

    fn h(&self, i: usize, j: usize) -> &Multivector {
        &self.hess[i * self.w + j]
    }

    fn laplacian(&self) -> Multivector {
        let mut acc = Multivector::zero(self.grad[0].dim());
        for i in 0..self.w {
            acc += self.h(i, i);
        }
        acc
    }
}

/// `D g` from the partials of `g`, generator on the given side.
fn cauchy_riemann(partials: &[&Multivector], order: FormOrder) -> Multivector {
    let mut acc = partials[0].clone();
    for (k, p) in partials.iter().enumerate().skip(1) {
        let t = match order {
            FormOrder::Left => p.left_mul_generator(k),
            FormOrder::Right => p.right_mul_generator(k),
        };
        acc += &t;
    }
    acc
}

fn oriented(form: &Multivector, value: &Multivector, order: FormOrder) -> Multivector {
    match order {
        FormOrder::Left => form * value,
        FormOrder::Right => value * form,
    }
}

/// Clifford first- and second-order terms for one step.
fn clifford_terms(
    jet: &Jet,
    dx: &[f64],
    pair: &dyn Fn(usize, usize) -> f64,
    opts: &ItoOptions,
) -> (Multivector, Multivector) {
    let w = jet.w;
    let dim = w - 1;
    let grads: Vec<&Multivector> = jet.grad.iter().collect();
    let df = cauchy_riemann(&grads, opts.order);
    let mut first = oriented(&Multivector::scalar(dim, dx[0]), &df, opts.order);
    for k in 1..w {
        let dz = one_form(dim, k, dx[k], dx[0], opts.dz);
        first += &oriented(&dz, &jet.grad[k], opts.order);
    }
    let j0 = match opts.second_order {
        SecondOrderRange::FromOne => 1,
        SecondOrderRange::FromZero => 0,
    };
    let mut second = Multivector::zero(dim);
    for i in 0..w {
        let col: Vec<&Multivector> = (0..w).map(|k| jet.h(k, i)).collect();
        let d_di = cauchy_riemann(&col, opts.order);
        second += &oriented(&Multivector::scalar(dim, pair(0, i)), &d_di, opts.order);
        for j in j0..w {
            let form = one_form(dim, j, pair(j, i), pair(0, i), opts.dz);
            second += &oriented(&form, jet.h(j, i), opts.order);
        }
    }
    (first, second * 0.5)
}

fn classical_terms(jet: &Jet, dx: &[f64], pair: &dyn Fn(usize, usize) -> f64) -> Multivector {
    let mut acc = Multivector::zero(jet.w - 1);
    for i in 0..jet.w {
        acc.axpy(dx[i], &jet.grad[i]);
        for j in 0..jet.w {
            acc.axpy(0.5 * pair(i, j), jet.h(i, j));
        }
    }
    acc
}

fn step_increments(path: &ProcessPath, k: usize, dx: &mut [f64], dm: &mut [f64]) -> Result<()> {
    let m0 = path.martingale_row(k)?;
    let m1 = path.martingale_row(k + 1)?;
    let a0 = path.fv_row(k)?;
    let a1 = path.fv_row(k + 1)?;
    for c in 0..dx.len() {
        dm[c] = m1[c] - m0[c];
        dx[c] = dm[c] + (a1[c] - a0[c]);
    }
    Ok(())
}

fn check_path(f_dim: usize, path: &ProcessPath) -> Result<()> {
    if path.dim() != f_dim {
        return Err(Error::DimensionMismatch {
            left: f_dim,
            right: path.dim(),
        });
    }
    if !path.has_decomposition() {
        return Err(Error::MissingDecomposition);
    }
    Ok(())
}

/// Classical Ito formula on `[0, t_max]` applied coefficientwise:
/// `f(T, X_T) - f(0, X_0)` against
/// `int f_t dt + sum int f_i dM_i + sum int f_i dA_i + 1/2 sum int f_ij d<M_i, M_j>`.
pub fn classical_ito_residual(
    f: &dyn TimeDependentField,
    path: &ProcessPath,
    covariation: Covariation,
) -> Result<ItoReport> {
    check_path(f.dim(), path)?;
    let w = f.dim() + 1;
    let times = path.times();
    let mut rhs = Multivector::zero(f.dim());
    let mut dx = vec![0.0; w];
    let mut dm = vec![0.0; w];
    for k in 0..path.n_steps() {
        let (t, x) = (times[k], path.state(k));
        let dt = times[k + 1] - t;
        step_increments(path, k, &mut dx, &mut dm)?;
        let ft = f.time_partial(t, &x).ok_or(Error::MissingDerivatives("time derivative"))?;
        rhs.axpy(dt, &ft);
        for i in 0..w {
            let fi = f.partial(t, &x, i).ok_or(Error::MissingDerivatives("gradient"))?;
            rhs.axpy(dx[i], &fi);
            for j in 0..w {
                let c = match covariation {
                    Covariation::IncrementProducts => dm[i] * dm[j],
                    Covariation::Brownian => {
                        if i == j {
                            dt
                        } else {
                            0.0
                        }
                    }
                };
                if c != 0.0 {
                    let fij = f.second_partial(t, &x, i, j).ok_or(Error::MissingDerivatives("Hessian"))?;
                    rhs.axpy(0.5 * c, &fij);
                }
            }
        }
    }
    let n = path.n_steps();
    let lhs = &f.eval(times[n], &path.state(n)) - &f.eval(0.0, &path.state(0));
    Ok(ItoReport::new(lhs, rhs, path))
}

/// Clifford Ito formula in integral form over the whole path:
/// `f(X_T) - f(X_0)` against
/// `sum [dZ_0 (D f) + sum_k dZ_k d_k f] + 1/2 sum_i [dZ_0 dX_i D(d_i f) + sum_j dZ_j dX_i d_j d_i f]`.
pub fn clifford_ito_residual(
    f: &dyn CliffordField,
    path: &ProcessPath,
    opts: &ItoOptions,
) -> Result<CliffordItoReport> {
    check_path(f.dim(), path)?;
    let w = f.dim() + 1;
    let times = path.times();
    let mut rhs = Multivector::zero(f.dim());
    let mut classical = Multivector::zero(f.dim());
    let mut dx = vec![0.0; w];
    let mut dm = vec![0.0; w];
    for k in 0..path.n_steps() {
        let dt = times[k + 1] - times[k];
        step_increments(path, k, &mut dx, &mut dm)?;
        let jet = Jet::of(f, &path.state(k))?;
        let dm_ref = &dm;
        let pair = move |a: usize, b: usize| match opts.covariation {
            Covariation::IncrementProducts => dm_ref[a] * dm_ref[b],
            Covariation::Brownian => {
                if a == b {
                    dt
                } else {
                    0.0
                }
            }
        };
        let (first, second) = clifford_terms(&jet, &dx, &pair, opts);
        rhs += &first;
        rhs += &second;
        classical += &classical_terms(&jet, &dx, &pair);
    }
    let n = path.n_steps();
    let lhs = &f.eval(&path.state(n)) - &f.eval(&path.state(0));
    let regrouping_gap = (&rhs - &classical).norm();
    Ok(CliffordItoReport {
        report: ItoReport::new(lhs, rhs, path),
        classical_rhs: classical,
        regrouping_gap,
    })
}

/// The Clifford second-order form at `x` with the increment products
/// `dX_a dX_b` replaced by `pairing(a, b)`.
pub fn second_order_form(
    f: &dyn CliffordField,
    x: &ParaVector,
    pairing: &dyn Fn(usize, usize) -> f64,
    opts: &ItoOptions,
) -> Result<Multivector> {
    let jet = Jet::of(f, x)?;
    let zeros = vec![0.0; jet.w];
    Ok(clifford_terms(&jet, &zeros, pairing, opts).1)
}

/// Reduced identity for a monogenic `f` on a Brownian path:
/// `f(B_T) - f(B_0)` against `sum_k int dZ_k d_k f`.
///
/// Before reducing, `|D f|` and `|Laplacian f|` are checked at every visited
/// state; the reduction is refused if either exceeds `tol`.
pub fn monogenic_reduction_residual(
    f: &dyn CliffordField,
    path: &ProcessPath,
    opts: &ItoOptions,
    tol: f64,
) -> Result<ItoReport> {
    check_path(f.dim(), path)?;
    let w = f.dim() + 1;
    let stencil = Stencil::default();
    let first_state = path.state(0);
    let residual = crate::calculus::cr_apply_with(f, &first_state, &stencil)?.norm();
    if residual > tol {
        return Err(Error::NotMonogenic { residual, tol });
    }
    let mut rhs = Multivector::zero(f.dim());
    let mut dx = vec![0.0; w];
    let mut dm = vec![0.0; w];
    for k in 0..path.n_steps() {
        let x = path.state(k);
        step_increments(path, k, &mut dx, &mut dm)?;
        let jet = Jet::of(f, &x)?;
        let grads: Vec<&Multivector> = jet.grad.iter().collect();
        let df = cauchy_riemann(&grads, opts.order).norm();
        if df > tol {
            return Err(Error::NotMonogenic { residual: df, tol });
        }
        let lap = jet.laplacian().norm();
        if lap > tol {
            return Err(Error::ReductionTermTooLarge {
                term: "Laplacian",
                value: lap,
                tol,
            });
        }
        for j in 1..w {
            let dz = one_form(f.dim(), j, dx[j], dx[0], opts.dz);
            rhs += &oriented(&dz, &jet.grad[j], opts.order);
        }
    }
    let n = path.n_steps();
    let lhs = &f.eval(&path.state(n)) - &f.eval(&first_state);
    Ok(ItoReport::new(lhs, rhs, path))
}

// ---------------------------------------------------------------------------
// Scaling experiment

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingRow {
    pub n_steps: usize,
    pub dt: f64,
    pub rms_residual: f64,
    /// Log-log slope of RMS residual against `dt` over the rows so far.
    pub slope_so_far: Option<f64>,
}

/// RMS of the Clifford Ito residual over `n_paths` Brownian paths for each
/// grid size. Paths are streamed, never stored.
pub fn ito_scaling(
    f: &dyn CliffordField,
    base: &PathConfig,
    step_counts: &[usize],
    n_paths: usize,
    opts: &ItoOptions,
) -> Result<Vec<ScalingRow>> {
    if step_counts.is_empty() {
        return Err(Error::Empty("step counts"));
    }
    let mut rows: Vec<ScalingRow> = Vec::with_capacity(step_counts.len());
    for &n_steps in step_counts {
        let cfg = PathConfig::new(base.dim, base.start.clone(), base.t_max, n_steps, base.seed)?;
        let m = ensemble_moments(&cfg, n_paths, 1, |p, out| {
            let r = clifford_ito_residual(f, p, opts)?;
            out[0] = r.report.residual_norm.powi(2);
            Ok(true)
        })?;
        let dt = cfg.dt();
        let rms_residual = m.mean(0).sqrt();
        let mut xs: Vec<f64> = rows.iter().map(|r| r.dt.ln()).collect();
        let mut ys: Vec<f64> = rows.iter().map(|r| r.rms_residual.ln()).collect();
        xs.push(dt.ln());
        ys.push(rms_residual.ln());
        rows.push(ScalingRow {
            n_steps,
            dt,
            rms_residual,
            slope_so_far: ols_slope(&xs, &ys),
        });
    }
    Ok(rows)
}

/// CSV with header `n_steps,dt,rms_residual,slope_so_far`.
pub fn write_scaling_csv<W: io::Write>(rows: &[ScalingRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n_steps", "dt", "rms_residual", "slope_so_far"])?;
    for r in rows {
        w.write_record([
            r.n_steps.to_string(),
            r.dt.to_string(),
            r.rms_residual.to_string(),
            r.slope_so_far.map(|s| s.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{coordinate, fueter_product, fueter_variable, squared_norm};
    use crate::process::sample_bm;

    fn bm(n_steps: usize, seed: u64) -> ProcessPath {
        sample_bm(&PathConfig::standard(2, 1.0, n_steps, seed).unwrap())
    }

    #[test]
    fn one_forms_have_expected_shape() {
        let inc = ItoIncrement::new(&[0.5, 0.1, -0.2], DzConvention::Minus).unwrap();
        assert_eq!(inc.dz[0], Multivector::scalar(2, 0.5));
        assert_eq!(inc.dz[1].coeffs(), &[0.1, -0.5, 0.0, 0.0]);
        assert_eq!(inc.dz[2].coeffs(), &[-0.2, 0.0, -0.5, 0.0]);
        let plus = ItoIncrement::new(&[0.5, 0.1, -0.2], DzConvention::Plus).unwrap();
        assert_eq!(plus.dz[1].coeffs(), &[0.1, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn riemann_sums() {
        let drv = [0.0, 0.5, 1.5, 1.0];
        let zero = vec![Multivector::zero(2); 4];
        assert_eq!(ito_integral(&zero, &drv).unwrap().norm(), 0.0);
        let c = Multivector::basis(2, 1).unwrap() * 2.0;
        let r = ito_integral(&vec![c.clone(); 4], &drv).unwrap();
        assert_eq!(r, c * 1.0);
        assert!(ito_integral(&zero[..3], &drv).is_err());
        // A(t) = t on [0, 1]: F = 1 gives 1, F = t gives 1/2 - dt/2.
        let n = 1000;
        let ts: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
        let ones: Vec<_> = ts.iter().map(|_| Multivector::scalar(2, 1.0)).collect();
        assert!((stieltjes_integral(&ones, &ts).unwrap().sc() - 1.0).abs() < 1e-12);
        let lin: Vec<_> = ts.iter().map(|&t| Multivector::scalar(2, t)).collect();
        let v = stieltjes_integral(&lin, &ts).unwrap().sc();
        assert!((v - (0.5 - 0.5 / n as f64)).abs() < 1e-12);
    }

    #[test]
    fn adapted_integral_matches_explicit_sum() {
        let p = bm(100, 3);
        let explicit: Vec<Multivector> = (0..=100).map(|k| Multivector::scalar(2, p.component(k, 0))).collect();
        let a = ito_integral(&explicit, &p.martingale_component(0).unwrap()).unwrap();
        let b = ito_integral_adapted(&p, 0, |pre| Multivector::scalar(2, pre.last_row()[0])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn classical_linear_is_exact() {
        let p = bm(200, 5);
        let f = Autonomous(coordinate(2, 1).unwrap());
        let r = classical_ito_residual(&f, &p, Covariation::IncrementProducts).unwrap();
        assert!(r.residual_norm < 1e-12, "{r:?}");
    }

    #[test]
    fn time_linear_residual_is_order_dt() {
        for &n in &[100usize, 1000] {
            let p = bm(n, 7);
            let r = classical_ito_residual(&TimeLinear { dim: 2, i: 1 }, &p, Covariation::IncrementProducts).unwrap();
            // T X(T) telescopes to sum (X_k dt + t_k dX_k + dt dX_k); the last
            // sum is the defect, dt * X(T).
            let defect = p.component(n, 1) / n as f64;
            assert!((r.residual_norm - defect.abs()).abs() < 1e-12, "{n}: {}", r.residual_norm);
        }
    }

    #[test]
    fn clifford_regroups_to_classical() {
        let fields: Vec<Box<dyn CliffordField>> = vec![
            Box::new(fueter_variable(2, 1).unwrap()),
            Box::new(fueter_product(2, &[1, 2]).unwrap()),
            Box::new(fueter_product(2, &[1, 1, 2]).unwrap()),
            Box::new(squared_norm(2).unwrap()),
        ];
        for f in &fields {
            for opts in [ItoOptions::default(), ItoOptions::brownian()] {
                let r = clifford_ito_residual(f.as_ref(), &bm(300, 11), &opts).unwrap();
                assert!(r.regrouping_gap < 1e-10, "{}: {}", f.label(), r.regrouping_gap);
            }
        }
    }

    #[test]
    fn right_order_regroups_too() {
        let f = fueter_product(2, &[1, 1, 2]).unwrap();
        let opts = ItoOptions {
            order: FormOrder::Right,
            ..Default::default()
        };
        let r = clifford_ito_residual(&f, &bm(300, 12), &opts).unwrap();
        assert!(r.regrouping_gap < 1e-10);
    }

    #[test]
    fn printed_range_double_counts() {
        let f = squared_norm(2).unwrap();
        let opts = ItoOptions {
            second_order: SecondOrderRange::FromZero,
            ..ItoOptions::brownian()
        };
        // Extra term: 1/2 sum_i d<X_0, X_i> d_0 d_i f = 1/2 * T * 2 = 1.
        let r = clifford_ito_residual(&f, &bm(100, 2), &opts).unwrap();
        assert!((r.regrouping_gap - 1.0).abs() < 1e-10, "{}", r.regrouping_gap);
    }

    #[test]
    fn z1_residual_is_roundoff_and_plus_sign_breaks_it() {
        let f = fueter_variable(2, 1).unwrap();
        let p = bm(500, 8);
        let r = clifford_ito_residual(&f, &p, &ItoOptions::default()).unwrap();
        assert!(r.report.residual_norm < 1e-12);
        let plus = ItoOptions {
            dz: DzConvention::Plus,
            ..Default::default()
        };
        let r = clifford_ito_residual(&f, &p, &plus).unwrap();
        assert!(r.report.residual_norm > 1e-3);
    }

    #[test]
    fn antisymmetric_pairing_annihilates_second_order_form() {
        let f = fueter_product(2, &[1, 1, 2]).unwrap();
        let w = [[0.0, 0.7, -1.3], [-0.7, 0.0, 0.4], [1.3, -0.4, 0.0]];
        let x = ParaVector::new(vec![0.2, -0.5, 0.9]).unwrap();
        let v = second_order_form(&f, &x, &|a, b| w[a][b], &ItoOptions::default()).unwrap();
        assert!(v.norm() < 1e-12);
    }

    #[test]
    fn monogenic_reduction() {
        let p = bm(400, 21);
        let z = fueter_variable(2, 2).unwrap();
        let r = monogenic_reduction_residual(&z, &p, &ItoOptions::default(), 1e-8).unwrap();
        assert!(r.residual_norm < 1e-12);
        let f = fueter_product(2, &[1, 1]).unwrap();
        let red = monogenic_reduction_residual(&f, &p, &ItoOptions::brownian(), 1e-8).unwrap();
        let full = clifford_ito_residual(&f, &p, &ItoOptions::brownian()).unwrap();
        assert!((red.residual_norm - full.report.residual_norm).abs() < 1e-10);
        assert!((&red.rhs - &full.report.rhs).norm() < 1e-10);
        let x0 = coordinate(2, 0).unwrap();
        assert!(matches!(
            monogenic_reduction_residual(&x0, &p, &ItoOptions::default(), 1e-8),
            Err(Error::NotMonogenic { .. })
        ));
        let abs2 = squared_norm(2).unwrap();
        assert!(monogenic_reduction_residual(&abs2, &p, &ItoOptions::default(), 1e-8).is_err());
    }

    #[test]
    fn missing_pieces_are_errors() {
        let p = bm(10, 1);
        let f = crate::calculus::FnField::new(2, "g", |x| Multivector::scalar(2, x.get(0)));
        assert!(matches!(
            clifford_ito_residual(&f, &p, &ItoOptions::default()),
            Err(Error::MissingDerivatives(_))
        ));
        let bare = ProcessPath::from_parts(vec![0.0, 1.0], vec![ParaVector::zeros(2); 2], None).unwrap();
        let z = fueter_variable(2, 1).unwrap();
        assert!(matches!(
            clifford_ito_residual(&z, &bare, &ItoOptions::default()),
            Err(Error::MissingDecomposition)
        ));
    }
}
