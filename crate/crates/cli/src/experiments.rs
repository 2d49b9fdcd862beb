//! One function per experiment kind. Each returns named checks, a JSON data
//! block and, where a table is natural, CSV text.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};
use stochclifford::algebra::{blade_product, BladeIndex, Multivector, ParaVector};
use stochclifford::calculus::{
    fd_laplacian, fixture_by_name, fixture_registry, fueter_product, monogenicity_check_with, sample_box_points,
    CliffordField, Stencil,
};
use stochclifford::dirichlet::{
    cone_hitting_probability, liouville_experiment, solve_dirichlet, BoundaryData, ConeExperiment, DirichletEstimate,
    Domain, LiouvilleConfig, WosParams,
};
use stochclifford::ito::{
    clifford_ito_residual, ito_scaling, monogenic_reduction_residual, write_scaling_csv, Covariation, ItoOptions,
};
use stochclifford::process::{
    compensated_square, drifted, ensemble_moments, identity_process, martingale_test_streamed, norm_sq_minus_nt,
    sample_bm_indexed, square_minus_t, MartingaleReport, PathConfig, ProcessMap, TestFunctional,
};
use stochclifford::rng::{derive_seed, substream, uniform};
use stochclifford::stats::ScalarEstimate;

use crate::error::{CliError, Result};
use crate::oracles::{blade_product_by_sorting, wedge_arc_probability};
use crate::spec::{
    AlgebraSelftestParams, BmDiagnosticsParams, ConeParams, DirichletParams, DomainSpec, ExperimentSpec, Kind,
    LiouvilleParams, MonogenicityParams, Params, PartialsMode, ItoResidualParams, ItoScalingParams,
};

/// One named pass/fail verdict. Informational entries never fail a run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub informational: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
            informational: false,
        }
    }

    pub fn info(name: impl Into<String>, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed: true,
            detail: detail.into(),
            informational: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub data: Value,
    #[serde(skip)]
    pub csv: Option<String>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<String> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect()
    }
}

/// Machine-readable result of one experiment run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub kind: Kind,
    pub seed: u64,
    pub params: Params,
    pub passed: bool,
    pub failures: Vec<String>,
    pub checks: Vec<Check>,
    pub data: Value,
}

fn sci(x: f64) -> String {
    format!("{x:.6e}")
}

// ---------------------------------------------------------------------------
// algebra-selftest

pub fn algebra_selftest(p: &AlgebraSelftestParams, seed: u64) -> Result<Outcome> {
    let mut mismatches = Vec::new();
    let mut pairs = 0u64;
    let mut anticomm_failures = 0usize;
    let mut assoc_err: f64 = 0.0;
    let mut conj_err: f64 = 0.0;
    for dim in 1..=p.n {
        for a in 0..1u32 << dim {
            for b in 0..1u32 << dim {
                let (s, c) = blade_product(BladeIndex::new(a, dim)?, BladeIndex::new(b, dim)?, dim)?;
                pairs += 1;
                if (s, c.bits()) != blade_product_by_sorting(a, b) && mismatches.len() < 10 {
                    mismatches.push(format!("n={dim} a={a:b} b={b:b}"));
                }
            }
        }
        for j in 1..=dim {
            for k in 1..=dim {
                let ej = Multivector::basis(dim, j)?;
                let ek = Multivector::basis(dim, k)?;
                let sum = &(&ej * &ek) + &(&ek * &ej);
                if sum != Multivector::scalar(dim, if j == k { -2.0 } else { 0.0 }) {
                    anticomm_failures += 1;
                }
            }
        }
        let mut rng = substream(seed, dim as u64);
        let mut random = || {
            let c = (0..1usize << dim).map(|_| 2.0 * uniform(&mut rng) - 1.0).collect();
            Multivector::from_coeffs(dim, c)
        };
        for _ in 0..20 {
            let (x, y, z) = (random()?, random()?, random()?);
            let l = &(&x * &y) * &z;
            let r = &x * &(&y * &z);
            assoc_err = assoc_err.max((&l - &r).norm() / (1.0 + l.norm()));
            let cl = (&x * &y).conjugate();
            let cr = &y.conjugate() * &x.conjugate();
            conj_err = conj_err.max((&cl - &cr).norm() / (1.0 + cl.norm()));
        }
    }
    Ok(Outcome {
        checks: vec![
            Check::new(
                "sign-oracle",
                mismatches.is_empty(),
                format!("{pairs} blade pairs for n <= {}; mismatches: {mismatches:?}", p.n),
            ),
            Check::new(
                "anticommutation",
                anticomm_failures == 0,
                format!("e_j e_k + e_k e_j = -2 delta_jk exactly; failures: {anticomm_failures}"),
            ),
            Check::new("associativity", assoc_err <= 1e-12, format!("max relative error {}", sci(assoc_err))),
            Check::new(
                "conjugation-anti-automorphism",
                conj_err <= 1e-12,
                format!("max relative error {}", sci(conj_err)),
            ),
        ],
        data: json!({ "max_dim": p.n, "blade_pairs": pairs }),
        csv: None,
    })
}

// ---------------------------------------------------------------------------
// monogenicity

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FixtureResidual {
    pub name: String,
    pub expected_monogenic: bool,
    pub residual: f64,
    pub central_residual: f64,
}

pub fn monogenicity(p: &MonogenicityParams, seed: u64) -> Result<Outcome> {
    let points = sample_box_points(p.n, p.lo, p.hi, p.points, seed)?;
    let registry = fixture_registry();
    let names: Vec<String> = if p.fixtures.is_empty() {
        registry.iter().filter(|e| e.min_dim <= p.n).map(|e| e.name.to_string()).collect()
    } else {
        p.fixtures.clone()
    };
    let stencil = match p.partials {
        PartialsMode::Auto => Stencil::new(p.h),
        PartialsMode::Central => Stencil::central(p.h),
    };
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    for name in &names {
        let entry = registry.iter().find(|e| e.name == name).expect("validated");
        let f = (entry.build)(p.n)?;
        let r = monogenicity_check_with(f.as_ref(), &points, &stencil, p.tol)?;
        let central = monogenicity_check_with(f.as_ref(), &points, &Stencil::central(p.h), p.tol)?;
        let verdict = if r.passed { "monogenic-verified" } else { "non-monogenic" };
        checks.push(Check::new(
            format!("fixture:{name}"),
            r.passed == entry.monogenic,
            format!(
                "{verdict}; expected {}; max |Df| {} (central differences {})",
                if entry.monogenic { "monogenic" } else { "non-monogenic" },
                sci(r.max_residual),
                sci(central.max_residual)
            ),
        ));
        rows.push(FixtureResidual {
            name: name.clone(),
            expected_monogenic: entry.monogenic,
            residual: r.max_residual,
            central_residual: central.max_residual,
        });
    }
    let mut csv = String::from("fixture,expected_monogenic,residual,central_residual\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            r.name, r.expected_monogenic, r.residual, r.central_residual
        ));
    }
    Ok(Outcome {
        checks,
        data: json!({ "points": p.points, "h": p.h, "tol": p.tol, "fixtures": rows }),
        csv: Some(csv),
    })
}

// ---------------------------------------------------------------------------
// bm-diagnostics

fn bm_config(n: usize, t_max: f64, n_steps: usize, seed: u64) -> Result<PathConfig> {
    Ok(PathConfig::standard(n, t_max, n_steps, seed)?)
}

/// Increment law and quadratic covariation at the horizon.
pub fn increment_checks(p: &BmDiagnosticsParams, seed: u64) -> Result<Outcome> {
    let cfg = bm_config(p.n, p.t_max, p.n_steps, seed)?;
    let w = p.n + 1;
    let pairs: Vec<(usize, usize)> = (0..w).flat_map(|i| (i..w).map(move |j| (i, j))).collect();
    let k = p.n_steps as f64;
    // Per path: mean increment and mean squared increment of each component,
    // then the covariation sums for every pair.
    let m = ensemble_moments(&cfg, p.n_paths, 2 * w + pairs.len(), |path, out| {
        out.fill(0.0);
        for s in 0..p.n_steps {
            let (a, b) = (path.row(s), path.row(s + 1));
            for c in 0..w {
                let d = b[c] - a[c];
                out[c] += d / k;
                out[w + c] += d * d / k;
            }
            for (q, &(i, j)) in pairs.iter().enumerate() {
                out[2 * w + q] += (b[i] - a[i]) * (b[j] - a[j]);
            }
        }
        Ok(true)
    })?;
    let dt = cfg.dt();
    let total = (p.n_paths * p.n_steps) as f64;
    let band = 4.0 * dt * (2.0 / (total - 1.0)).sqrt();
    let mut checks = Vec::new();
    let mut comps = Vec::new();
    for c in 0..w {
        let mean = ScalarEstimate::from_moments(&m, c);
        let var = (m.mean(w + c) - mean.mean * mean.mean) * total / (total - 1.0);
        checks.push(Check::new(
            format!("increment-mean:{c}"),
            mean.z_score(0.0) <= 3.0,
            format!("mean {} stderr {}", sci(mean.mean), sci(mean.stderr)),
        ));
        checks.push(Check::new(
            format!("increment-variance:{c}"),
            (var - dt).abs() <= band,
            format!("variance {} vs dt {}, 4-sigma band {}", sci(var), sci(dt), sci(band)),
        ));
        comps.push(json!({ "component": c, "mean": mean.mean, "stderr": mean.stderr, "variance": var }));
    }
    let mut qv = Vec::new();
    for (q, &(i, j)) in pairs.iter().enumerate() {
        let est = ScalarEstimate::from_moments(&m, 2 * w + q);
        let target = if i == j { p.t_max } else { 0.0 };
        checks.push(Check::new(
            format!("covariation:{i}{j}"),
            est.z_score(target) <= 3.0,
            format!("<X_{i}, X_{j}>_T = {} +- {} vs {target}", sci(est.mean), sci(est.stderr)),
        ));
        qv.push(json!({ "i": i, "j": j, "mean": est.mean, "stderr": est.stderr, "target": target }));
    }
    Ok(Outcome {
        checks,
        data: json!({ "dt": dt, "pooled_increments": total, "variance_band": band, "components": comps, "covariation": qv }),
        csv: None,
    })
}

fn martingale_entries(report: &MartingaleReport) -> Value {
    serde_json::to_value(report).unwrap_or(Value::Null)
}

fn worst_entry(report: &MartingaleReport) -> String {
    report
        .entries
        .iter()
        .filter(|e| e.stderr > 0.0)
        .max_by(|a, b| (a.mean.abs() / a.stderr).total_cmp(&(b.mean.abs() / b.stderr)))
        .map(|e| {
            format!(
                "worst entry g={} blade={} mean {} stderr {}",
                e.functional,
                e.blade,
                sci(e.mean),
                sci(e.stderr)
            )
        })
        .unwrap_or_default()
}

/// Orthogonality tests for `B`, `B^2 - t` and the drifted control, plus the
/// compensated squares as informational entries.
pub fn martingale_checks(p: &BmDiagnosticsParams, seed: u64) -> Result<Outcome> {
    let cfg = bm_config(p.n, p.t_max, p.n_steps, seed)?;
    let g = TestFunctional::defaults();
    let (s, t) = (p.s, p.t_max);
    let run = |process: &ProcessMap, g: &[TestFunctional]| martingale_test_streamed(&cfg, p.n_paths, s, t, process, g);
    let bm = run(&identity_process, &g)?;
    let sq = run(&square_minus_t, &g)?;
    let drift = run(&drifted, &[TestFunctional::One])?;
    let comp = run(&compensated_square, &g)?;
    let norm = run(&norm_sq_minus_nt, &g)?;

    let e1 = drift.entries.iter().find(|e| e.blade == 1).expect("e1 entry");
    let drift_ok = !drift.passed && (e1.mean - (t - s)).abs() <= 3.0 * e1.stderr;
    let sq_scalar = sq.entries.iter().find(|e| e.functional == "one" && e.blade == 0).expect("scalar entry");
    let checks = vec![
        Check::new("martingale:B", bm.passed, worst_entry(&bm)),
        Check::new(
            "martingale:B^2-t",
            sq.passed,
            format!(
                "{}; E[sc(X(t)-X(s))] = {} +- {} (drift -n(t-s) = {})",
                worst_entry(&sq),
                sci(sq_scalar.mean),
                sci(sq_scalar.stderr),
                sci(-(p.n as f64) * (t - s))
            ),
        ),
        Check::new(
            "martingale:drifted-control-rejected",
            drift_ok,
            format!("e1 mean {} stderr {} vs t-s = {}", sci(e1.mean), sci(e1.stderr), t - s),
        ),
        Check::info(
            "martingale:B^2-(1-n)t",
            format!("passed={} {}", comp.passed, worst_entry(&comp)),
        ),
        Check::info(
            "martingale:|B|^2-(n+1)t",
            format!("passed={} {}", norm.passed, worst_entry(&norm)),
        ),
    ];
    Ok(Outcome {
        checks,
        data: json!({
            "s": s,
            "t": t,
            "n_paths": p.n_paths,
            "brownian": martingale_entries(&bm),
            "square_minus_t": martingale_entries(&sq),
            "drifted": martingale_entries(&drift),
            "compensated_square": martingale_entries(&comp),
            "norm_square": martingale_entries(&norm),
        }),
        csv: None,
    })
}

/// `E|B(t)|^2 = |B(0)|^2 + (n + 1) t` at the horizon.
pub fn norm_growth_check(p: &BmDiagnosticsParams, seed: u64) -> Result<Outcome> {
    let cfg = bm_config(p.n, p.t_max, p.n_steps, seed)?;
    let m = ensemble_moments(&cfg, p.n_paths, 1, |path, out| {
        out[0] = path.row(path.n_steps()).iter().map(|v| v * v).sum();
        Ok(true)
    })?;
    let est = ScalarEstimate::from_moments(&m, 0);
    let target = cfg.start.norm_sq() + (p.n + 1) as f64 * p.t_max;
    Ok(Outcome {
        checks: vec![Check::new(
            "norm-growth",
            est.z_score(target) <= 3.0,
            format!("E|B(T)|^2 = {} +- {} vs {target}", sci(est.mean), sci(est.stderr)),
        )],
        data: json!({ "t": p.t_max, "estimate": est, "target": target }),
        csv: None,
    })
}

pub fn bm_diagnostics(p: &BmDiagnosticsParams, seed: u64) -> Result<Outcome> {
    let parts = [
        ("increments", increment_checks(p, seed)?),
        ("martingale", martingale_checks(p, seed)?),
        ("norm_growth", norm_growth_check(p, seed)?),
    ];
    let mut checks = Vec::new();
    let mut data = serde_json::Map::new();
    for (name, o) in parts {
        checks.extend(o.checks);
        data.insert(name.into(), o.data);
    }
    let cfg = bm_config(p.n, p.t_max, p.n_steps, seed)?;
    let mut buf = Vec::new();
    sample_bm_indexed(&cfg, 0).write_csv(&mut buf)?;
    Ok(Outcome {
        checks,
        data: Value::Object(data),
        csv: Some(String::from_utf8(buf).expect("csv is utf-8")),
    })
}

// ---------------------------------------------------------------------------
// ito-residual

pub fn ito_residual(p: &ItoResidualParams, seed: u64) -> Result<Outcome> {
    let f = fixture_by_name(&p.fixture, p.n)?;
    let entry_monogenic = fixture_registry()
        .iter()
        .any(|e| e.name == p.fixture && e.monogenic);
    let opts = ItoOptions {
        dz: p.dz,
        order: p.order,
        covariation: p.covariation,
        second_order: p.second_order,
    };
    let cfg = bm_config(p.n, p.t_max, p.n_steps, seed)?;
    let mut max_gap: f64 = 0.0;
    let mut max_reduction_gap: f64 = 0.0;
    let mut csv = String::from("path,residual_norm,regrouping_gap\n");
    let mut residuals = Vec::with_capacity(p.n_paths);
    let check_reduction = entry_monogenic && p.covariation == Covariation::Brownian;
    for i in 0..p.n_paths {
        let path = sample_bm_indexed(&cfg, i as u64);
        let r = clifford_ito_residual(f.as_ref(), &path, &opts)?;
        max_gap = max_gap.max(r.regrouping_gap);
        if check_reduction {
            let red = monogenic_reduction_residual(f.as_ref(), &path, &opts, 1e-8)?;
            max_reduction_gap = max_reduction_gap.max((&red.rhs - &r.report.rhs).norm());
        }
        csv.push_str(&format!("{i},{},{}\n", r.report.residual_norm, r.regrouping_gap));
        residuals.push(r.report.residual_norm);
    }
    let rms = (residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt();
    let mut checks = vec![Check::new(
        "regrouping",
        max_gap <= p.tol,
        format!("max |Clifford RHS - classical RHS| {} over {} paths", sci(max_gap), p.n_paths),
    )];
    if check_reduction {
        checks.push(Check::new(
            "monogenic-reduction",
            max_reduction_gap <= p.tol,
            format!("max |full RHS - reduced RHS| {}", sci(max_reduction_gap)),
        ));
    } else {
        checks.push(Check::info(
            "monogenic-reduction",
            "skipped: needs a monogenic fixture and Brownian covariation",
        ));
    }
    checks.push(Check::info("residual", format!("RMS Ito residual {}", sci(rms))));
    Ok(Outcome {
        checks,
        data: json!({
            "fixture": p.fixture,
            "dt": cfg.dt(),
            "rms_residual": rms,
            "max_regrouping_gap": max_gap,
            "max_reduction_gap": if check_reduction { Some(max_reduction_gap) } else { None },
        }),
        csv: Some(csv),
    })
}

// ---------------------------------------------------------------------------
// ito-scaling

pub fn ito_scaling_experiment(p: &ItoScalingParams, seed: u64) -> Result<Outcome> {
    let f = fueter_product(p.n, &p.fueter)?;
    let opts = ItoOptions {
        covariation: p.covariation,
        ..Default::default()
    };
    let base = bm_config(p.n, p.t_max, p.step_counts[0], seed)?;
    let rows = ito_scaling(&f, &base, &p.step_counts, p.n_paths, &opts)?;
    let slope = rows.last().and_then(|r| r.slope_so_far).unwrap_or(f64::NAN);
    let in_range = slope >= p.slope_range[0] && slope <= p.slope_range[1];

    // Reduction against the full formula on every path of the coarsest grid.
    let mut max_gap: f64 = 0.0;
    let reduction_applies = p.covariation == Covariation::Brownian;
    if reduction_applies {
        for i in 0..p.n_paths {
            let path = sample_bm_indexed(&base, i as u64);
            let full = clifford_ito_residual(&f, &path, &opts)?.report;
            let red = monogenic_reduction_residual(&f, &path, &opts, 1e-8)?;
            max_gap = max_gap
                .max((full.residual_norm - red.residual_norm).abs())
                .max((&full.rhs - &red.rhs).norm());
        }
    }
    let mut buf = Vec::new();
    write_scaling_csv(&rows, &mut buf)?;
    let mut checks = vec![Check::new(
        "slope",
        in_range,
        format!(
            "log-log slope {} in [{}, {}]; RMS {:?}",
            sci(slope),
            p.slope_range[0],
            p.slope_range[1],
            rows.iter().map(|r| sci(r.rms_residual)).collect::<Vec<_>>()
        ),
    )];
    if reduction_applies {
        checks.push(Check::new(
            "monogenic-reduction",
            max_gap <= p.tol,
            format!("max gap {} over {} paths at n_steps={}", sci(max_gap), p.n_paths, p.step_counts[0]),
        ));
    } else {
        checks.push(Check::info("monogenic-reduction", "skipped: needs Brownian covariation"));
    }
    Ok(Outcome {
        checks,
        data: json!({ "fixture": f.label(), "rows": rows, "slope": slope, "max_reduction_gap": max_gap }),
        csv: Some(String::from_utf8(buf).expect("csv is utf-8")),
    })
}

// ---------------------------------------------------------------------------
// dirichlet

fn para(v: &[f64]) -> Result<ParaVector> {
    Ok(ParaVector::from_slice(v)?)
}

fn build_domain(p: &DirichletParams) -> Result<Domain> {
    Ok(match &p.domain {
        None => Domain::ball(ParaVector::zeros(p.n), 1.0)?,
        Some(DomainSpec::Ball { center, radius }) => Domain::ball(para(center)?, *radius)?,
        Some(DomainSpec::Box { lo, hi }) => Domain::boxed(para(lo)?, para(hi)?)?,
        Some(DomainSpec::HalfSpace { normal, offset }) => Domain::half_space(para(normal)?, *offset)?,
    })
}

/// Five fixed interior points, placed relative to the centre and size of a
/// bounded domain.
pub fn default_points(domain: &Domain) -> Result<Vec<ParaVector>> {
    let w = domain.dim() + 1;
    let (center, scale): (Vec<f64>, Vec<f64>) = match domain {
        Domain::Ball { center, radius } => (center.comps().to_vec(), vec![*radius; w]),
        Domain::Box { lo, hi } => (
            lo.comps().iter().zip(hi.comps()).map(|(a, b)| 0.5 * (a + b)).collect(),
            lo.comps().iter().zip(hi.comps()).map(|(a, b)| 0.5 * (b - a)).collect(),
        ),
        Domain::HalfSpace { .. } => {
            return Err(CliError::param("points", "a half-space needs explicit evaluation points"))
        }
    };
    let mut offsets = vec![vec![0.0; w]; 5];
    offsets[1][0] = 0.3;
    offsets[2][1 % w] = -0.5;
    offsets[3][w - 1] += 0.7;
    for (c, v) in offsets[4].iter_mut().enumerate() {
        let s = if c % 2 == 0 { 0.5 } else { -0.5 };
        *v = s / (w as f64).sqrt();
    }
    offsets
        .iter()
        .map(|o| {
            let x: Vec<f64> = (0..w).map(|c| center[c] + scale[c] * o[c]).collect();
            para(&x)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DirichletRow {
    pub estimate: DirichletEstimate,
    pub exact: Option<Multivector>,
    pub max_z: Option<f64>,
}

/// Solves on the domain and compares against the boundary fixture itself
/// wherever the fixture is harmonic at the evaluation point.
pub fn dirichlet(p: &DirichletParams, seed: u64) -> Result<Outcome> {
    let domain = build_domain(p)?;
    let points = if p.points.is_empty() {
        default_points(&domain)?
    } else {
        p.points.iter().map(|v| para(v)).collect::<Result<Vec<_>>>()?
    };
    let field: Arc<dyn CliffordField> = Arc::from(fixture_by_name(&p.boundary, p.n)?);
    let data = BoundaryData::from_field(field.clone());
    let params = WosParams {
        eps: p.eps,
        max_steps: p.max_steps,
        censor: None,
    };
    let estimates = solve_dirichlet(&domain, &data, &points, p.n_walks, &params, seed)?;
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    let mut csv = String::from("point,blade,estimate,stderr,exact\n");
    for (i, e) in estimates.iter().enumerate() {
        let harmonic = fd_laplacian(field.as_ref(), &e.point, 1e-3)?.norm() <= 1e-6;
        let exact = harmonic.then(|| field.eval(&e.point));
        let max_z = exact.as_ref().map(|x| e.value.max_z(x));
        match (&exact, max_z) {
            (Some(_), Some(z)) => checks.push(Check::new(
                format!("point:{i}"),
                z <= 3.0,
                format!("max componentwise |z| {} at {:?}", sci(z), e.point.comps()),
            )),
            _ => checks.push(Check::info(
                format!("point:{i}"),
                "boundary fixture is not harmonic here; no closed-form comparison",
            )),
        }
        for (b, (m, s)) in e.value.mean.coeffs().iter().zip(&e.value.stderr).enumerate() {
            let x = exact.as_ref().map(|x| (x.coeffs()[b] + 0.0).to_string()).unwrap_or_default();
            csv.push_str(&format!("{i},{b},{m},{s},{x}\n"));
        }
        rows.push(DirichletRow {
            estimate: e.clone(),
            exact,
            max_z,
        });
    }
    let censored: usize = estimates.iter().map(|e| e.censored).sum();
    checks.push(Check::new(
        "no-censoring",
        censored == 0 || !domain.is_bounded(),
        format!("{censored} walks exceeded the step budget"),
    ));
    let mut ratios = Vec::new();
    if p.check_stderr_scaling {
        let quarter = solve_dirichlet(&domain, &data, &points, p.n_walks / 4, &params, seed)?;
        for (full, q) in estimates.iter().zip(&quarter) {
            for (a, b) in full.value.stderr.iter().zip(&q.value.stderr) {
                if *b > 0.0 {
                    ratios.push(a / b);
                }
            }
        }
        let ok = !ratios.is_empty() && ratios.iter().all(|r| (0.4..=0.6).contains(r));
        let (lo, hi) = ratios
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &r| (l.min(r), h.max(r)));
        checks.push(Check::new(
            "stderr-halving",
            ok,
            format!(
                "stderr(N)/stderr(N/4) over {} components in [{}, {}]",
                ratios.len(),
                sci(lo),
                sci(hi)
            ),
        ));
    }
    Ok(Outcome {
        checks,
        data: json!({
            "domain": domain,
            "boundary": p.boundary,
            "n_walks": p.n_walks,
            "rows": rows,
            "stderr_ratios": ratios,
        }),
        csv: Some(csv),
    })
}

// ---------------------------------------------------------------------------
// cone

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConeRow {
    pub k: u32,
    pub start_radius: f64,
    pub probability: ScalarEstimate,
    pub censored: usize,
    /// `a^k` with `a` the smallest rate consistent with every level.
    pub bound: f64,
    /// Continuous-monitoring value for a planar wedge, when available.
    pub wedge_series: Option<f64>,
}

pub fn cone(p: &ConeParams, seed: u64) -> Result<Outcome> {
    let mut rows: Vec<ConeRow> = Vec::new();
    for &k in &p.ks {
        let mut exp = ConeExperiment::new(p.n, p.alpha, p.h, k, p.n_walks, derive_seed(seed, k as u64));
        exp.dt_factor = p.dt_factor;
        let est = cone_hitting_probability(&exp)?;
        rows.push(ConeRow {
            k,
            start_radius: est.start_radius,
            probability: est.probability,
            censored: est.censored,
            bound: f64::NAN,
            wedge_series: (p.n == 1).then(|| wedge_arc_probability(2.0 * PI - p.alpha, est.start_radius / p.h)),
        });
    }
    // Smallest a with p_k + 3 stderr <= a^k at every level; the geometric
    // bound holds iff this stays below one.
    let a = rows
        .iter()
        .map(|r| (r.probability.mean + 3.0 * r.probability.stderr).min(1.0).powf(1.0 / r.k.max(1) as f64))
        .fold(0.0, f64::max);
    for r in rows.iter_mut() {
        r.bound = a.powf(r.k as f64);
    }
    let mut checks = Vec::new();
    for w in rows.windows(2) {
        let (x, y) = (&w[0].probability, &w[1].probability);
        let sep = (x.stderr.powi(2) + y.stderr.powi(2)).sqrt();
        checks.push(Check::new(
            format!("decrease:{}->{}", w[0].k, w[1].k),
            x.mean - y.mean > 3.0 * sep,
            format!("{} - {} = {} vs 3 sigma {}", sci(x.mean), sci(y.mean), sci(x.mean - y.mean), sci(3.0 * sep)),
        ));
    }
    checks.push(Check::new(
        "geometric-bound",
        a < 1.0,
        format!(
            "p_k + 3 stderr <= a^k for all k with a = {}; levels {:?}",
            sci(a),
            rows.iter().map(|r| sci(r.probability.mean)).collect::<Vec<_>>()
        ),
    ));
    for r in &rows {
        if let Some(w) = r.wedge_series {
            checks.push(Check::info(
                format!("wedge-series:{}", r.k),
                format!("continuous-monitoring value {} vs estimate {}", sci(w), sci(r.probability.mean)),
            ));
        }
    }
    let censored: usize = rows.iter().map(|r| r.censored).sum();
    checks.push(Check::new(
        "no-censoring",
        censored == 0,
        format!("{censored} walks hit the step cap"),
    ));
    let mut csv = String::from("k,start_radius,probability,stderr,bound,wedge_series\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.k,
            r.start_radius,
            r.probability.mean,
            r.probability.stderr,
            r.bound,
            r.wedge_series.map(|v| v.to_string()).unwrap_or_default()
        ));
    }
    Ok(Outcome {
        checks,
        data: json!({ "alpha": p.alpha, "h": p.h, "a": a, "rows": rows }),
        csv: Some(csv),
    })
}

// ---------------------------------------------------------------------------
// liouville

pub fn liouville(p: &LiouvilleParams, seed: u64) -> Result<Outcome> {
    let mut cfg = LiouvilleConfig::new(p.d, p.t_grid.clone(), p.n_walks, seed);
    cfg.steps_per_unit = p.steps_per_unit;
    cfg.bridge_correction = p.bridge_correction;
    let rows = liouville_experiment(&cfg)?;
    let mut checks = Vec::new();
    for r in &rows {
        checks.push(Check::new(
            format!("closed-form:t={}", r.t),
            r.survival.z_score(r.closed_form) <= 3.0,
            format!(
                "P(tau > t) = {} +- {} vs {}",
                sci(r.survival.mean),
                sci(r.survival.stderr),
                sci(r.closed_form)
            ),
        ));
    }
    let decreasing = rows.windows(2).all(|w| w[1].survival.mean < w[0].survival.mean);
    checks.push(Check::new(
        "strictly-decreasing",
        decreasing,
        format!("{:?}", rows.iter().map(|r| sci(r.survival.mean)).collect::<Vec<_>>()),
    ));
    let mut csv = String::from("t,survival,stderr,closed_form\n");
    for r in &rows {
        csv.push_str(&format!("{},{},{},{}\n", r.t, r.survival.mean, r.survival.stderr, r.closed_form));
    }
    Ok(Outcome {
        checks,
        data: json!({ "d": p.d, "rows": rows }),
        csv: Some(csv),
    })
}

// ---------------------------------------------------------------------------
// Dispatch and file output

pub fn execute(params: &Params, seed: u64) -> Result<Outcome> {
    match params {
        Params::AlgebraSelftest(p) => algebra_selftest(p, seed),
        Params::Monogenicity(p) => monogenicity(p, seed),
        Params::BmDiagnostics(p) => bm_diagnostics(p, seed),
        Params::ItoResidual(p) => ito_residual(p, seed),
        Params::ItoScaling(p) => ito_scaling_experiment(p, seed),
        Params::Dirichlet(p) => dirichlet(p, seed),
        Params::Cone(p) => cone(p, seed),
        Params::Liouville(p) => liouville(p, seed),
    }
}

/// Runs the experiment and assembles its report.
pub fn run(spec: &ExperimentSpec) -> Result<(Report, Option<String>)> {
    let outcome = execute(&spec.params, spec.seed)?;
    let report = Report {
        kind: spec.kind,
        seed: spec.seed,
        params: spec.params.clone(),
        passed: outcome.passed(),
        failures: outcome.failures(),
        checks: outcome.checks,
        data: outcome.data,
    };
    Ok((report, outcome.csv))
}

pub fn to_json(value: &impl Serialize) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Writes `<dir>/<kind>.json` and, when present, `<dir>/<kind>.csv`.
pub fn write_report(dir: &Path, report: &Report, csv: Option<&str>) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut written = Vec::new();
    let json_path = dir.join(format!("{}.json", report.kind));
    std::fs::write(&json_path, to_json(report)?).map_err(|e| CliError::io(&json_path, e))?;
    written.push(json_path);
    if let Some(csv) = csv {
        let csv_path = dir.join(format!("{}.csv", report.kind));
        std::fs::write(&csv_path, csv).map_err(|e| CliError::io(&csv_path, e))?;
        written.push(csv_path);
    }
    Ok(written)
}
