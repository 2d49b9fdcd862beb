//! Para-vector Brownian paths on a uniform grid and their diagnostics.

use std::fmt;
use std::io;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{Multivector, ParaVector};
use crate::error::{invalid, Error, Result};
use crate::rng::{standard_normal, substream};
use crate::stats::{try_chunked_moments, Moments};

/// Sampling parameters for a Brownian path.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathConfig {
    pub dim: usize,
    pub start: ParaVector,
    pub t_max: f64,
    pub n_steps: usize,
    pub seed: u64,
}

impl PathConfig {
    pub fn new(dim: usize, start: ParaVector, t_max: f64, n_steps: usize, seed: u64) -> Result<Self> {
        if start.dim() != dim {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: start.dim(),
            });
        }
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(invalid("t_max", format!("must be positive, got {t_max}")));
        }
        if n_steps == 0 {
            return Err(invalid("n_steps", "need at least one step"));
        }
        Ok(PathConfig {
            dim,
            start,
            t_max,
            n_steps,
            seed,
        })
    }

    /// Standard Brownian motion from the origin.
    pub fn standard(dim: usize, t_max: f64, n_steps: usize, seed: u64) -> Result<Self> {
        Self::new(dim, ParaVector::zeros(dim), t_max, n_steps, seed)
    }

    pub fn dt(&self) -> f64 {
        self.t_max / self.n_steps as f64
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        PathConfig {
            seed,
            ..self.clone()
        }
    }
}

fn uniform_grid(t_max: f64, n_steps: usize) -> Vec<f64> {
    (0..=n_steps)
        .map(|k| {
            if k == n_steps {
                t_max
            } else {
                t_max * k as f64 / n_steps as f64
            }
        })
        .collect()
}

/// A para-vector valued path with an optional semimartingale decomposition
/// `X(t) = X(0) + M(t) + A(t)`. States are stored row-major, `n + 1` per time.
#[derive(Clone, PartialEq)]
pub struct ProcessPath {
    dim: usize,
    times: Vec<f64>,
    states: Vec<f64>,
    martingale: Option<Vec<f64>>,
    finite_variation: Option<Vec<f64>>,
}

impl fmt::Debug for ProcessPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProcessPath")
            .field("dim", &self.dim)
            .field("n_steps", &self.n_steps())
            .field("decomposed", &self.martingale.is_some())
            .finish()
    }
}

impl ProcessPath {
    /// Builds a path from explicit rows, validating the time grid and, when
    /// given, the decomposition identity.
    pub fn from_parts(
        times: Vec<f64>,
        states: Vec<ParaVector>,
        decomposition: Option<(Vec<ParaVector>, Vec<ParaVector>)>,
    ) -> Result<Self> {
        if times.len() < 2 {
            return Err(invalid("times", "a path needs at least two grid points"));
        }
        if times[0] != 0.0 {
            return Err(invalid("times", "grid must start at 0"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("times", "grid must be strictly increasing"));
        }
        if states.len() != times.len() {
            return Err(Error::LengthMismatch {
                what: "path states",
                left: times.len(),
                right: states.len(),
            });
        }
        let dim = states[0].dim();
        if let Some(bad) = states.iter().find(|s| s.dim() != dim) {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: bad.dim(),
            });
        }
        let flat = |rows: &[ParaVector]| -> Vec<f64> { rows.iter().flat_map(|r| r.comps().to_vec()).collect() };
        let mut path = ProcessPath {
            dim,
            times,
            states: flat(&states),
            martingale: None,
            finite_variation: None,
        };
        if let Some((m, a)) = decomposition {
            for part in [&m, &a] {
                if part.len() != path.times.len() {
                    return Err(Error::LengthMismatch {
                        what: "decomposition",
                        left: path.times.len(),
                        right: part.len(),
                    });
                }
                if part.iter().any(|r| r.dim() != dim) {
                    return Err(invalid("decomposition", "dimension differs from states"));
                }
                if part[0].norm() != 0.0 {
                    return Err(invalid("decomposition", "parts must vanish at t = 0"));
                }
            }
            path.martingale = Some(flat(&m));
            path.finite_variation = Some(flat(&a));
            let w = dim + 1;
            for k in 0..path.times.len() {
                for c in 0..w {
                    let lhs = path.states[k * w + c];
                    let rhs = path.states[c] + path.martingale.as_ref().unwrap()[k * w + c]
                        + path.finite_variation.as_ref().unwrap()[k * w + c];
                    if (lhs - rhs).abs() > 1e-12 * (1.0 + lhs.abs()) {
                        return Err(invalid(
                            "decomposition",
                            format!("X != X(0) + M + A at step {k}, component {c}"),
                        ));
                    }
                }
            }
        }
        Ok(path)
    }

    /// Deterministic path `t -> x(t)` on a uniform grid, all variation in the
    /// finite-variation part.
    pub fn deterministic<F>(dim: usize, t_max: f64, n_steps: usize, x: F) -> Result<Self>
    where
        F: Fn(f64) -> Vec<f64>,
    {
        if n_steps == 0 {
            return Err(invalid("n_steps", "need at least one step"));
        }
        let times = uniform_grid(t_max, n_steps);
        let states = times
            .iter()
            .map(|&t| ParaVector::new(x(t)))
            .collect::<Result<Vec<_>>>()?;
        let zero = ParaVector::zeros(dim);
        let fv: Vec<ParaVector> = states.iter().map(|s| s - &states[0]).collect();
        let m = vec![zero; states.len()];
        ProcessPath::from_parts(times, states, Some((m, fv)))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Components per state, `n + 1`.
    pub fn width(&self) -> usize {
        self.dim + 1
    }

    pub fn n_steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn row(&self, k: usize) -> &[f64] {
        let w = self.width();
        &self.states[k * w..(k + 1) * w]
    }

    pub fn state(&self, k: usize) -> ParaVector {
        ParaVector::from_slice_unchecked(self.row(k))
    }

    pub fn component(&self, k: usize, i: usize) -> f64 {
        self.states[k * self.width() + i]
    }

    pub fn has_decomposition(&self) -> bool {
        self.martingale.is_some()
    }

    pub fn martingale_row(&self, k: usize) -> Result<&[f64]> {
        let w = self.width();
        self.martingale
            .as_ref()
            .map(|m| &m[k * w..(k + 1) * w])
            .ok_or(Error::MissingDecomposition)
    }

    pub fn fv_row(&self, k: usize) -> Result<&[f64]> {
        let w = self.width();
        self.finite_variation
            .as_ref()
            .map(|a| &a[k * w..(k + 1) * w])
            .ok_or(Error::MissingDecomposition)
    }

    /// Component `i` of the martingale part along the grid.
    pub fn martingale_component(&self, i: usize) -> Result<Vec<f64>> {
        self.check_component(i)?;
        let m = self.martingale.as_ref().ok_or(Error::MissingDecomposition)?;
        Ok(m.iter().skip(i).step_by(self.width()).copied().collect())
    }

    /// Component `i` of the finite-variation part along the grid.
    pub fn fv_component(&self, i: usize) -> Result<Vec<f64>> {
        self.check_component(i)?;
        let a = self.finite_variation.as_ref().ok_or(Error::MissingDecomposition)?;
        Ok(a.iter().skip(i).step_by(self.width()).copied().collect())
    }

    fn check_component(&self, i: usize) -> Result<()> {
        if i >= self.width() {
            return Err(Error::IndexOutOfRange {
                what: "component",
                index: i,
                len: self.width(),
            });
        }
        Ok(())
    }

    /// Grid index of time `t`.
    pub fn index_of_time(&self, t: f64) -> Result<usize> {
        let tol = 1e-9 * t.abs().max(1.0);
        self.times
            .iter()
            .position(|&g| (g - t).abs() <= tol)
            .ok_or(Error::NotGridTime(t))
    }

    /// View of the path up to and including grid index `end`.
    pub fn prefix(&self, end: usize) -> Result<PathPrefix<'_>> {
        if end > self.n_steps() {
            return Err(Error::IndexOutOfRange {
                what: "path prefix",
                index: end,
                len: self.times.len(),
            });
        }
        Ok(PathPrefix { path: self, end })
    }

    /// Applies `f(t, X(t))` along the grid.
    pub fn map<F>(&self, f: F) -> Vec<Multivector>
    where
        F: Fn(f64, &ParaVector) -> Multivector,
    {
        (0..self.times.len()).map(|k| f(self.times[k], &self.state(k))).collect()
    }

    /// CSV with header `t,x_0,...,x_n`.
    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend((0..self.width()).map(|i| format!("x_{i}")));
        w.write_record(&header)?;
        for k in 0..self.times.len() {
            let mut rec = vec![self.times[k].to_string()];
            rec.extend(self.row(k).iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// The information available at grid time `t_end`: states up to that index.
#[derive(Clone, Copy)]
pub struct PathPrefix<'a> {
    path: &'a ProcessPath,
    end: usize,
}

impl<'a> PathPrefix<'a> {
    pub fn end(&self) -> usize {
        self.end
    }

    pub fn time(&self) -> f64 {
        self.path.times[self.end]
    }

    /// State at grid index `k <= end`.
    pub fn state(&self, k: usize) -> Option<ParaVector> {
        (k <= self.end).then(|| self.path.state(k))
    }

    pub fn row(&self, k: usize) -> Option<&'a [f64]> {
        (k <= self.end).then(|| self.path.row(k))
    }

    pub fn last(&self) -> ParaVector {
        self.path.state(self.end)
    }

    pub fn last_row(&self) -> &'a [f64] {
        self.path.row(self.end)
    }
}

/// Path `index` of the ensemble defined by `config`.
pub fn sample_bm_indexed(config: &PathConfig, index: u64) -> ProcessPath {
    let w = config.dim + 1;
    let n = config.n_steps;
    let sd = config.dt().sqrt();
    let mut rng = substream(config.seed, index);
    let mut states = Vec::with_capacity((n + 1) * w);
    let mut mart = Vec::with_capacity((n + 1) * w);
    states.extend_from_slice(config.start.comps());
    mart.extend(std::iter::repeat_n(0.0, w));
    for k in 0..n {
        for c in 0..w {
            let m = mart[k * w + c] + sd * standard_normal(&mut rng);
            mart.push(m);
            states.push(config.start.get(c) + m);
        }
    }
    ProcessPath {
        dim: config.dim,
        times: uniform_grid(config.t_max, n),
        states,
        martingale: Some(mart),
        finite_variation: Some(vec![0.0; (n + 1) * w]),
    }
}

/// Clifford Brownian motion: `n + 1` independent Gaussian components.
pub fn sample_bm(config: &PathConfig) -> ProcessPath {
    sample_bm_indexed(config, 0)
}

/// `n_paths` independent paths; path `i` uses substream `i`.
pub fn sample_ensemble(config: &PathConfig, n_paths: usize) -> Vec<ProcessPath> {
    (0..n_paths)
        .into_par_iter()
        .map(|i| sample_bm_indexed(config, i as u64))
        .collect()
}

/// Streams the ensemble through `stat`, reducing `width` outputs per path in
/// scheduling-independent order. Paths are never stored.
pub fn ensemble_moments<F>(config: &PathConfig, n_paths: usize, width: usize, stat: F) -> Result<Moments>
where
    F: Fn(&ProcessPath, &mut [f64]) -> Result<bool> + Sync,
{
    if n_paths == 0 {
        return Err(Error::Empty("ensemble"));
    }
    try_chunked_moments(n_paths, width, |i, out| stat(&sample_bm_indexed(config, i as u64), out))
}

/// Same reduction over an already sampled ensemble.
pub fn slice_moments<F>(paths: &[ProcessPath], width: usize, stat: F) -> Result<Moments>
where
    F: Fn(&ProcessPath, &mut [f64]) -> Result<bool> + Sync,
{
    if paths.is_empty() {
        return Err(Error::Empty("ensemble"));
    }
    try_chunked_moments(paths.len(), width, |i, out| stat(&paths[i], out))
}

// ---------------------------------------------------------------------------
// Martingale diagnostics

type CustomFunctional = Arc<dyn Fn(&PathPrefix<'_>) -> f64 + Send + Sync>;

/// A real functional of the path prefix up to time `s`.
#[derive(Clone)]
pub enum TestFunctional {
    One,
    ScalarPart,
    ParaNorm,
    SignOfScalar,
    Custom(String, CustomFunctional),
}

impl TestFunctional {
    pub fn defaults() -> Vec<TestFunctional> {
        vec![
            TestFunctional::One,
            TestFunctional::ScalarPart,
            TestFunctional::ParaNorm,
            TestFunctional::SignOfScalar,
        ]
    }

    pub fn custom<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(&PathPrefix<'_>) -> f64 + Send + Sync + 'static,
    {
        TestFunctional::Custom(name.into(), Arc::new(f))
    }

    pub fn name(&self) -> String {
        match self {
            TestFunctional::One => "one".into(),
            TestFunctional::ScalarPart => "sc(B(s))".into(),
            TestFunctional::ParaNorm => "|B(s)|".into(),
            TestFunctional::SignOfScalar => "sign(sc(B(s)))".into(),
            TestFunctional::Custom(name, _) => name.clone(),
        }
    }

    pub fn eval(&self, prefix: &PathPrefix<'_>) -> f64 {
        let row = prefix.last_row();
        match self {
            TestFunctional::One => 1.0,
            TestFunctional::ScalarPart => row[0],
            TestFunctional::ParaNorm => row.iter().map(|v| v * v).sum::<f64>().sqrt(),
            TestFunctional::SignOfScalar => {
                if row[0] > 0.0 {
                    1.0
                } else if row[0] < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            TestFunctional::Custom(_, f) => f(prefix),
        }
    }
}

impl fmt::Debug for TestFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// A Clifford process built from the underlying Brownian state, `X(t) = phi(t, B(t))`.
pub type ProcessMap = dyn Fn(f64, &ParaVector) -> Multivector + Sync;

/// `X(t) = B(t)`.
pub fn identity_process(_t: f64, b: &ParaVector) -> Multivector {
    b.to_multivector()
}

/// `X(t) = B(t)^2 - t` with the Clifford square.
pub fn square_minus_t(t: f64, b: &ParaVector) -> Multivector {
    let m = b.to_multivector();
    let mut sq = &m * &m;
    sq.coeffs_mut()[0] -= t;
    sq
}

/// `X(t) = B(t)^2 - (1 - n) t`: the compensated Clifford square. Since
/// `E[(dB)^2] = (1 - n) dt` for a para-vector increment, this is the
/// martingale obtained from the square.
pub fn compensated_square(t: f64, b: &ParaVector) -> Multivector {
    let m = b.to_multivector();
    let mut sq = &m * &m;
    sq.coeffs_mut()[0] -= (1.0 - b.dim() as f64) * t;
    sq
}

/// `X(t) = |B(t)|^2 - (n + 1) t`.
pub fn norm_sq_minus_nt(t: f64, b: &ParaVector) -> Multivector {
    Multivector::scalar(b.dim(), b.norm_sq() - (b.dim() + 1) as f64 * t)
}

/// `X(t) = B(t) + t e_1` (drifted control).
pub fn drifted(t: f64, b: &ParaVector) -> Multivector {
    let mut m = b.to_multivector();
    m.coeffs_mut()[1] += t;
    m
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MartingaleEntry {
    pub functional: String,
    pub blade: usize,
    pub mean: f64,
    pub stderr: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MartingaleReport {
    pub s: f64,
    pub t: f64,
    pub n_paths: usize,
    pub entries: Vec<MartingaleEntry>,
    pub passed: bool,
}

impl MartingaleReport {
    pub fn failures(&self) -> impl Iterator<Item = &MartingaleEntry> {
        self.entries.iter().filter(|e| !e.passed)
    }
}

fn martingale_sample(
    path: &ProcessPath,
    ks: usize,
    kt: usize,
    process: &ProcessMap,
    functionals: &[TestFunctional],
    out: &mut [f64],
) -> Result<bool> {
    let xs = process(path.times[ks], &path.state(ks));
    let xt = process(path.times[kt], &path.state(kt));
    let diff = &xt - &xs;
    let width = diff.coeffs().len();
    let prefix = path.prefix(ks)?;
    for (g_idx, g) in functionals.iter().enumerate() {
        let gv = g.eval(&prefix);
        for (c, d) in diff.coeffs().iter().enumerate() {
            out[g_idx * width + c] = d * gv;
        }
    }
    Ok(true)
}

fn martingale_setup(
    probe: &ProcessPath,
    s: f64,
    t: f64,
    process: &ProcessMap,
    functionals: &[TestFunctional],
) -> Result<(usize, usize, usize)> {
    if !(0.0 <= s && s < t) {
        return Err(invalid("times", format!("need 0 <= s < t, got s={s}, t={t}")));
    }
    if functionals.is_empty() {
        return Err(Error::Empty("test functionals"));
    }
    let ks = probe.index_of_time(s)?;
    let kt = probe.index_of_time(t)?;
    let width = process(0.0, &probe.state(0)).coeffs().len();
    Ok((ks, kt, width))
}

fn martingale_report(
    s: f64,
    t: f64,
    width: usize,
    functionals: &[TestFunctional],
    m: &Moments,
) -> MartingaleReport {
    let mut entries = Vec::with_capacity(m.width());
    for (g_idx, g) in functionals.iter().enumerate() {
        for blade in 0..width {
            let i = g_idx * width + blade;
            let (mean, stderr) = (m.mean(i), m.stderr(i));
            entries.push(MartingaleEntry {
                functional: g.name(),
                blade,
                mean,
                stderr,
                passed: mean.abs() <= 3.0 * stderr,
            });
        }
    }
    let passed = entries.iter().all(|e| e.passed);
    MartingaleReport {
        s,
        t,
        n_paths: m.count(),
        entries,
        passed,
    }
}

/// Tests `E[X(t) - X(s) | F_s] = 0` through `E[(X(t) - X(s)) g] = 0` for each
/// functional `g` of the prefix up to `s`, componentwise at 3 standard errors.
pub fn martingale_test(
    paths: &[ProcessPath],
    s: f64,
    t: f64,
    process: &ProcessMap,
    functionals: &[TestFunctional],
) -> Result<MartingaleReport> {
    let probe = paths.first().ok_or(Error::Empty("ensemble"))?;
    let (ks, kt, width) = martingale_setup(probe, s, t, process, functionals)?;
    let m = slice_moments(paths, width * functionals.len(), |p, out| {
        martingale_sample(p, ks, kt, process, functionals, out)
    })?;
    Ok(martingale_report(s, t, width, functionals, &m))
}

/// [`martingale_test`] over a freshly sampled ensemble that is never stored.
pub fn martingale_test_streamed(
    config: &PathConfig,
    n_paths: usize,
    s: f64,
    t: f64,
    process: &ProcessMap,
    functionals: &[TestFunctional],
) -> Result<MartingaleReport> {
    if n_paths == 0 {
        return Err(Error::Empty("ensemble"));
    }
    let probe = sample_bm_indexed(config, 0);
    let (ks, kt, width) = martingale_setup(&probe, s, t, process, functionals)?;
    let m = ensemble_moments(config, n_paths, width * functionals.len(), |p, out| {
        martingale_sample(p, ks, kt, process, functionals, out)
    })?;
    Ok(martingale_report(s, t, width, functionals, &m))
}

// ---------------------------------------------------------------------------
// Pathwise functionals

/// Running `sum_{k<m} dX_i dX_j` at every grid index `m`.
pub fn quadratic_covariation(path: &ProcessPath, i: usize, j: usize) -> Result<Vec<f64>> {
    path.check_component(i)?;
    path.check_component(j)?;
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(path.times.len());
    out.push(0.0);
    for k in 0..path.n_steps() {
        let di = path.component(k + 1, i) - path.component(k, i);
        let dj = path.component(k + 1, j) - path.component(k, j);
        acc += di * dj;
        out.push(acc);
    }
    Ok(out)
}

/// `B*(t) = B(t)` for `t <= T`, `2 B(T) - B(t)` afterwards; the decomposition
/// parts are reflected the same way.
pub fn reflect_path(path: &ProcessPath, stop: usize) -> Result<ProcessPath> {
    if stop > path.n_steps() {
        return Err(Error::IndexOutOfRange {
            what: "reflection index",
            index: stop,
            len: path.times.len(),
        });
    }
    let w = path.width();
    let reflect = |v: &[f64]| -> Vec<f64> {
        let mut out = v.to_vec();
        for k in stop + 1..path.times.len() {
            for c in 0..w {
                out[k * w + c] = 2.0 * v[stop * w + c] - v[k * w + c];
            }
        }
        out
    };
    Ok(ProcessPath {
        dim: path.dim,
        times: path.times.clone(),
        states: reflect(&path.states),
        martingale: path.martingale.as_deref().map(reflect),
        finite_variation: path.finite_variation.as_deref().map(reflect),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    BoundaryHit,
    TimeExhausted,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StoppedPath {
    pub path: ProcessPath,
    pub stop_index: usize,
    pub reason: StopReason,
}

/// First grid index whose state satisfies `region`, or the final index.
pub fn first_hit_index<F>(path: &ProcessPath, region: F) -> (usize, StopReason)
where
    F: Fn(&[f64]) -> bool,
{
    (0..path.times.len())
        .find(|&k| region(path.row(k)))
        .map(|k| (k, StopReason::BoundaryHit))
        .unwrap_or((path.n_steps(), StopReason::TimeExhausted))
}

pub fn first_hit<F>(path: &ProcessPath, region: F) -> StoppedPath
where
    F: Fn(&ParaVector) -> bool,
{
    let (stop_index, reason) = first_hit_index(path, |row| region(&ParaVector::from_slice_unchecked(row)));
    StoppedPath {
        path: path.clone(),
        stop_index,
        reason,
    }
}

/// `(E[max_k |X(t_k)|^2])^{1/2}` from the real coefficient norm of the states.
pub fn mart_norm_estimate(paths: &[ProcessPath]) -> Result<f64> {
    let m = slice_moments(paths, 1, |p, out| {
        out[0] = (0..p.times.len())
            .map(|k| p.row(k).iter().map(|v| v * v).sum::<f64>())
            .fold(0.0, f64::max);
        Ok(true)
    })?;
    Ok(m.mean(0).sqrt())
}
