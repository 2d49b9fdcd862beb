//! Walk-on-spheres for the Dirichlet problem, plus the cone-hitting and
//! hyperplane-survival experiments that need genuine time discretization.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::algebra::{Multivector, ParaVector};
use crate::calculus::CliffordField;
use crate::error::{invalid, Error, Result};
use crate::rng::{derive_seed, standard_normal, substream, uniform, unit_sphere};
use crate::stats::{normal_cdf, try_chunked_moments, MCEstimate, ScalarEstimate};

/// Default cap on walk-on-spheres steps per walk.
pub const DEFAULT_MAX_STEPS: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum Domain {
    Ball { center: ParaVector, radius: f64 },
    Box { lo: ParaVector, hi: ParaVector },
    /// `{x : normal . x < offset}` with a unit normal.
    HalfSpace { normal: ParaVector, offset: f64 },
}

impl Domain {
    pub fn ball(center: ParaVector, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(invalid("radius", format!("must be positive, got {radius}")));
        }
        Ok(Domain::Ball { center, radius })
    }

    pub fn boxed(lo: ParaVector, hi: ParaVector) -> Result<Self> {
        if lo.dim() != hi.dim() {
            return Err(Error::DimensionMismatch {
                left: lo.dim(),
                right: hi.dim(),
            });
        }
        if lo.comps().iter().zip(hi.comps()).any(|(a, b)| !(a < b)) {
            return Err(invalid("box", "every lo must be below hi"));
        }
        Ok(Domain::Box { lo, hi })
    }

    /// Half-space `normal . x < offset`; `normal` is normalized here.
    pub fn half_space(normal: ParaVector, offset: f64) -> Result<Self> {
        let len = normal.norm();
        if !(len > 0.0) || !offset.is_finite() {
            return Err(invalid("half-space", "normal must be non-zero and offset finite"));
        }
        Ok(Domain::HalfSpace {
            normal: normal.scaled(1.0 / len),
            offset: offset / len,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Ball { center, .. } => center.dim(),
            Domain::Box { lo, .. } => lo.dim(),
            Domain::HalfSpace { normal, .. } => normal.dim(),
        }
    }

    fn check(&self, x: &ParaVector) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: x.dim(),
            });
        }
        Ok(())
    }

    /// Signed distance to the boundary: positive inside, negative outside.
    pub fn dist(&self, x: &[f64]) -> f64 {
        match self {
            Domain::Ball { center, radius } => {
                let r2: f64 = x.iter().zip(center.comps()).map(|(a, c)| (a - c) * (a - c)).sum();
                radius - r2.sqrt()
            }
            Domain::Box { lo, hi } => {
                let mut inside = f64::INFINITY;
                let mut outside_sq = 0.0;
                for ((&v, &l), &h) in x.iter().zip(lo.comps()).zip(hi.comps()) {
                    inside = inside.min(v - l).min(h - v);
                    let excess = (l - v).max(v - h).max(0.0);
                    outside_sq += excess * excess;
                }
                if outside_sq > 0.0 {
                    -outside_sq.sqrt()
                } else {
                    inside
                }
            }
            Domain::HalfSpace { normal, offset } => {
                offset - x.iter().zip(normal.comps()).map(|(a, b)| a * b).sum::<f64>()
            }
        }
    }

    /// Nearest boundary point.
    pub fn project(&self, x: &ParaVector) -> ParaVector {
        let mut out = x.comps().to_vec();
        match self {
            Domain::Ball { center, radius } => {
                let d = x.comps().iter().zip(center.comps()).map(|(a, c)| a - c);
                let v: Vec<f64> = d.collect();
                let len = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                for (i, o) in out.iter_mut().enumerate() {
                    *o = if len > 0.0 {
                        center.get(i) + radius * v[i] / len
                    } else {
                        center.get(i) + if i == 0 { *radius } else { 0.0 }
                    };
                }
            }
            Domain::Box { lo, hi } => {
                if self.dist(x.comps()) >= 0.0 {
                    let mut best = (f64::INFINITY, 0, 0.0);
                    for i in 0..out.len() {
                        for face in [lo.get(i), hi.get(i)] {
                            let d = (out[i] - face).abs();
                            if d < best.0 {
                                best = (d, i, face);
                            }
                        }
                    }
                    out[best.1] = best.2;
                } else {
                    for (i, o) in out.iter_mut().enumerate() {
                        *o = o.clamp(lo.get(i), hi.get(i));
                    }
                }
            }
            Domain::HalfSpace { normal, offset } => {
                let s = offset - x.dot(normal);
                for (o, n) in out.iter_mut().zip(normal.comps()) {
                    *o += s * n;
                }
            }
        }
        ParaVector::from_slice_unchecked(&out)
    }

    /// Diameter, infinite for the half-space.
    pub fn diameter(&self) -> f64 {
        match self {
            Domain::Ball { radius, .. } => 2.0 * radius,
            Domain::Box { lo, hi } => (hi - lo).norm(),
            Domain::HalfSpace { .. } => f64::INFINITY,
        }
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self, Domain::HalfSpace { .. })
    }

    /// `1e-4` times the diameter (absolute `1e-4` when unbounded).
    pub fn default_eps(&self) -> f64 {
        if self.is_bounded() {
            1e-4 * self.diameter()
        } else {
            1e-4
        }
    }
}

type PhiFn = Arc<dyn Fn(&ParaVector) -> Multivector + Send + Sync>;

/// Boundary values `phi`, optionally with a known interior extension.
#[derive(Clone)]
pub struct BoundaryData {
    dim: usize,
    phi: PhiFn,
    known_extension: Option<Arc<dyn CliffordField>>,
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundaryData")
            .field("dim", &self.dim)
            .field("has_extension", &self.known_extension.is_some())
            .finish()
    }
}

impl BoundaryData {
    pub fn constant(value: Multivector) -> Self {
        let dim = value.dim();
        let ext: Arc<dyn CliffordField> = Arc::new(crate::calculus::Constant { value: value.clone() });
        BoundaryData {
            dim,
            phi: Arc::new(move |_| value.clone()),
            known_extension: Some(ext),
        }
    }

    /// Restriction of a field to the boundary; the field is the extension.
    pub fn from_field(field: Arc<dyn CliffordField>) -> Self {
        let f = field.clone();
        BoundaryData {
            dim: field.dim(),
            phi: Arc::new(move |x| f.eval(x)),
            known_extension: Some(field),
        }
    }

    pub fn from_fn<F>(dim: usize, phi: F) -> Self
    where
        F: Fn(&ParaVector) -> Multivector + Send + Sync + 'static,
    {
        BoundaryData {
            dim,
            phi: Arc::new(phi),
            known_extension: None,
        }
    }

    /// `a * self + other`, pointwise.
    pub fn affine(&self, a: f64, other: &BoundaryData) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        let (p, q) = (self.phi.clone(), other.phi.clone());
        Ok(BoundaryData {
            dim: self.dim,
            phi: Arc::new(move |x| &(p(x) * a) + &q(x)),
            known_extension: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: &ParaVector) -> Multivector {
        (self.phi)(x)
    }

    pub fn known_extension(&self) -> Option<&Arc<dyn CliffordField>> {
        self.known_extension.as_ref()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WosParams {
    /// Shell width; `None` means the domain default.
    pub eps: Option<f64>,
    pub max_steps: usize,
    /// Exclude walks that exhaust the step budget instead of failing. Defaults
    /// to on for unbounded domains only.
    pub censor: Option<bool>,
}

impl Default for WosParams {
    fn default() -> Self {
        WosParams {
            eps: None,
            max_steps: DEFAULT_MAX_STEPS,
            censor: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WosSample {
    pub point: ParaVector,
    pub steps: usize,
}

/// One walk from `x` with the supplied generator.
pub fn wos_walk<R: Rng + ?Sized>(
    domain: &Domain,
    x: &ParaVector,
    eps: f64,
    max_steps: usize,
    rng: &mut R,
) -> Result<WosSample> {
    domain.check(x)?;
    if !(eps > 0.0) {
        return Err(invalid("eps", format!("must be positive, got {eps}")));
    }
    if !(domain.dist(x.comps()) > 0.0) {
        return Err(Error::NotInterior(x.comps().to_vec()));
    }
    let mut pos = x.comps().to_vec();
    let mut dir = vec![0.0; pos.len()];
    let mut steps = 0;
    loop {
        let r = domain.dist(&pos);
        if r < eps {
            break;
        }
        if steps == max_steps {
            return Err(Error::StepBudgetExceeded(max_steps));
        }
        unit_sphere(rng, &mut dir);
        for (p, d) in pos.iter_mut().zip(&dir) {
            *p += r * d;
        }
        steps += 1;
    }
    Ok(WosSample {
        point: domain.project(&ParaVector::from_slice_unchecked(&pos)),
        steps,
    })
}

/// One walk using stream 0 under `seed`, with the default step budget.
pub fn wos_sample(domain: &Domain, x: &ParaVector, eps: f64, seed: u64) -> Result<WosSample> {
    wos_walk(domain, x, eps, DEFAULT_MAX_STEPS, &mut substream(seed, 0))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DirichletEstimate {
    pub point: ParaVector,
    pub value: MCEstimate,
    pub n_walks: usize,
    pub eps_shell: f64,
    pub mean_steps: f64,
    /// Walks dropped for exhausting the step budget.
    pub censored: usize,
}

/// Monte Carlo estimate of `u(x) = E[phi(B(tau))]` at each point. Walk `w`
/// for point `p` uses stream `w` under a seed derived from `(seed, p)`, so the
/// walks do not depend on the boundary data.
pub fn solve_dirichlet(
    domain: &Domain,
    data: &BoundaryData,
    points: &[ParaVector],
    n_walks: usize,
    params: &WosParams,
    seed: u64,
) -> Result<Vec<DirichletEstimate>> {
    if points.is_empty() {
        return Err(Error::Empty("evaluation points"));
    }
    if n_walks == 0 {
        return Err(invalid("n_walks", "need at least one walk"));
    }
    if data.dim() != domain.dim() {
        return Err(Error::DimensionMismatch {
            left: domain.dim(),
            right: data.dim(),
        });
    }
    let eps = params.eps.unwrap_or_else(|| domain.default_eps());
    let censor = params.censor.unwrap_or(!domain.is_bounded());
    let width = 1usize << domain.dim();
    points
        .iter()
        .enumerate()
        .map(|(p_idx, x)| {
            domain.check(x)?;
            if !(domain.dist(x.comps()) > 0.0) {
                return Err(Error::NotInterior(x.comps().to_vec()));
            }
            let point_seed = derive_seed(seed, p_idx as u64);
            let m = try_chunked_moments(n_walks, width + 1, |w, out| {
                let mut rng = substream(point_seed, w as u64);
                match wos_walk(domain, x, eps, params.max_steps, &mut rng) {
                    Ok(s) => {
                        out[..width].copy_from_slice(data.eval(&s.point).coeffs());
                        out[width] = s.steps as f64;
                        Ok(true)
                    }
                    Err(Error::StepBudgetExceeded(_)) if censor => Ok(false),
                    Err(e) => Err(e),
                }
            })?;
            if m.count() == 0 {
                return Err(Error::StepBudgetExceeded(params.max_steps));
            }
            let value_moments = m.truncated(width);
            Ok(DirichletEstimate {
                point: x.clone(),
                value: MCEstimate::from_moments(domain.dim(), &value_moments)?,
                n_walks,
                eps_shell: eps,
                mean_steps: m.mean(width),
                censored: m.skipped(),
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Cone hitting

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConeExperiment {
    pub dim: usize,
    /// Full opening angle of the cone, in `(0, 2 pi)`.
    pub alpha: f64,
    pub h: f64,
    pub k: u32,
    pub n_walks: usize,
    pub seed: u64,
    /// Time step as a multiple of `h^2`.
    pub dt_factor: f64,
    /// Angle between the start point and the cone axis; `pi` is the anti-axis.
    pub start_angle: f64,
    pub max_steps: usize,
}

impl ConeExperiment {
    pub fn new(dim: usize, alpha: f64, h: f64, k: u32, n_walks: usize, seed: u64) -> Self {
        ConeExperiment {
            dim,
            alpha,
            h,
            k,
            n_walks,
            seed,
            dt_factor: 1e-4,
            start_angle: PI,
            max_steps: 10_000_000,
        }
    }

    /// Start radius `0.99 * 2^{-k} h`.
    pub fn start_radius(&self) -> f64 {
        0.99 * self.h * 0.5f64.powi(self.k as i32)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConeEstimate {
    pub k: u32,
    pub start_radius: f64,
    pub probability: ScalarEstimate,
    pub censored: usize,
}

/// Fraction of Brownian paths started at distance `0.99 * 2^{-k} h` from the
/// cone vertex that leave the ball of radius `h` before entering the cone.
/// The cone has its vertex at the origin and axis along `e_0`.
pub fn cone_hitting_probability(exp: &ConeExperiment) -> Result<ConeEstimate> {
    if !(exp.alpha > 0.0 && exp.alpha < 2.0 * PI) {
        return Err(invalid("alpha", format!("cone angle must lie in (0, 2 pi), got {}", exp.alpha)));
    }
    if exp.k == 0 {
        return Err(invalid("k", "need k >= 1"));
    }
    if !(exp.h > 0.0) || !(exp.dt_factor > 0.0) {
        return Err(invalid("h", "h and dt_factor must be positive"));
    }
    if exp.n_walks == 0 {
        return Err(invalid("n_walks", "need at least one walk"));
    }
    if exp.dim == 0 {
        return Err(Error::UnsupportedDimension(0));
    }
    let w = exp.dim + 1;
    let cos_half = (exp.alpha / 2.0).cos();
    let in_cone = |x: &[f64]| {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x[0] >= norm * cos_half - 1e-12 * norm
    };
    let rho = exp.start_radius();
    let mut start = vec![0.0; w];
    start[0] = rho * exp.start_angle.cos();
    start[1] = rho * exp.start_angle.sin();
    let h2 = exp.h * exp.h;
    let sd = (exp.dt_factor * h2).sqrt();
    let m = try_chunked_moments(exp.n_walks, 1, |i, out| {
        let mut rng = substream(exp.seed, i as u64);
        let mut x = start.clone();
        for _ in 0..exp.max_steps {
            if in_cone(&x) {
                out[0] = 0.0;
                return Ok(true);
            }
            if x.iter().map(|v| v * v).sum::<f64>() >= h2 {
                out[0] = 1.0;
                return Ok(true);
            }
            for v in x.iter_mut() {
                *v += sd * standard_normal(&mut rng);
            }
        }
        Ok(false)
    })?;
    Ok(ConeEstimate {
        k: exp.k,
        start_radius: rho,
        probability: ScalarEstimate::from_moments(&m, 0),
        censored: m.skipped(),
    })
}

// ---------------------------------------------------------------------------
// Hyperplane survival

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LiouvilleConfig {
    /// Distance from the start to the hyperplane.
    pub d: f64,
    pub t_grid: Vec<f64>,
    pub n_walks: usize,
    pub seed: u64,
    /// Time steps per unit time.
    pub steps_per_unit: usize,
    /// Kill each step with the Brownian-bridge crossing probability, which
    /// makes the discrete survival indicator exact in distribution.
    pub bridge_correction: bool,
}

impl LiouvilleConfig {
    pub fn new(d: f64, t_grid: Vec<f64>, n_walks: usize, seed: u64) -> Self {
        LiouvilleConfig {
            d,
            t_grid,
            n_walks,
            seed,
            steps_per_unit: 64,
            bridge_correction: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SurvivalRow {
    pub t: f64,
    pub survival: ScalarEstimate,
    /// `2 Phi(d / sqrt(t)) - 1`.
    pub closed_form: f64,
}

/// `2 Phi(d / sqrt(t)) - 1`, the probability that a standard Brownian motion
/// stays below level `d` up to time `t`.
pub fn survival_closed_form(d: f64, t: f64) -> f64 {
    2.0 * normal_cdf(d / t.sqrt()) - 1.0
}

/// Estimates `P{tau(H) > t}` for a hyperplane at distance `d`. Only the
/// Brownian component normal to the hyperplane affects `tau(H)`, so that
/// single component is simulated.
pub fn liouville_experiment(cfg: &LiouvilleConfig) -> Result<Vec<SurvivalRow>> {
    if !(cfg.d > 0.0) || !cfg.d.is_finite() {
        return Err(invalid("d", format!("must be positive, got {}", cfg.d)));
    }
    if cfg.t_grid.is_empty() {
        return Err(Error::Empty("time grid"));
    }
    if cfg.t_grid.iter().any(|t| !(*t > 0.0)) || cfg.t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("t_grid", "times must be positive and strictly increasing"));
    }
    if cfg.steps_per_unit == 0 || cfg.n_walks == 0 {
        return Err(invalid("liouville", "steps_per_unit and n_walks must be positive"));
    }
    let dt = 1.0 / cfg.steps_per_unit as f64;
    let sd = dt.sqrt();
    let marks: Vec<usize> = cfg
        .t_grid
        .iter()
        .map(|t| (t * cfg.steps_per_unit as f64).round() as usize)
        .collect();
    let total = *marks.last().unwrap();
    let d = cfg.d;
    let m = try_chunked_moments(cfg.n_walks, marks.len(), |i, out| {
        let mut rng = substream(cfg.seed, i as u64);
        let mut w = 0.0f64;
        let mut alive_steps = total;
        for step in 1..=total {
            let next = w + sd * standard_normal(&mut rng);
            let killed = next >= d
                || (cfg.bridge_correction && uniform(&mut rng) < (-2.0 * (d - w) * (d - next) / dt).exp());
            if killed {
                alive_steps = step - 1;
                break;
            }
            w = next;
        }
        for (o, &mk) in out.iter_mut().zip(&marks) {
            *o = if alive_steps >= mk { 1.0 } else { 0.0 };
        }
        Ok(true)
    })?;
    Ok(cfg
        .t_grid
        .iter()
        .enumerate()
        .map(|(j, &t)| SurvivalRow {
            t,
            survival: ScalarEstimate::from_moments(&m, j),
            closed_form: survival_closed_form(d, t),
        })
        .collect())
}
