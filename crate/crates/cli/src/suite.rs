//! The acceptance suite behind `reproduce-all`.
//!
//! Each criterion derives its own seed from the master seed, so the summary
//! depends only on that seed and the scale, never on scheduling.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::Serialize;
use stochclifford::calculus::{
    fueter_product, fueter_variable, monogenicity_check_with, sample_box_points, FixtureEntry, Stencil,
};
use stochclifford::ito::{clifford_ito_residual, ItoOptions};
use stochclifford::process::{sample_bm_indexed, PathConfig};
use stochclifford::rng::derive_seed;

use crate::error::{CliError, Result};
use crate::experiments::{
    algebra_selftest, cone, dirichlet, increment_checks, ito_scaling_experiment, liouville, martingale_checks,
    norm_growth_check, to_json, Check,
};
use crate::spec::{
    AlgebraSelftestParams, BmDiagnosticsParams, ConeParams, DirichletParams, ItoScalingParams, LiouvilleParams,
};

/// Problem sizes: `Full` is the acceptance scale, `Smoke` a quick rehearsal
/// with the same code paths.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scale {
    Full,
    Smoke,
}

impl Scale {
    fn pick<T>(self, full: T, smoke: T) -> T {
        match self {
            Scale::Full => full,
            Scale::Smoke => smoke,
        }
    }
}

pub struct Criterion {
    pub id: u8,
    pub title: &'static str,
    run: fn(u64, Scale) -> Result<Vec<Check>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub title: String,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl Criterion {
    pub fn run(&self, seed: u64, scale: Scale) -> Result<CriterionResult> {
        let checks = (self.run)(derive_seed(seed, self.id as u64), scale)?;
        Ok(CriterionResult {
            id: self.id,
            title: self.title.to_string(),
            passed: checks.iter().all(|c| c.passed),
            checks,
        })
    }
}

fn bm_params(scale: Scale) -> BmDiagnosticsParams {
    BmDiagnosticsParams {
        n: 2,
        n_paths: scale.pick(100_000, 2_000),
        n_steps: 100,
        t_max: 1.0,
        s: 0.5,
    }
}

fn c1_algebra(seed: u64, _scale: Scale) -> Result<Vec<Check>> {
    let o = algebra_selftest(&AlgebraSelftestParams { n: 8 }, seed)?;
    Ok(o.checks)
}

fn c2_monogenicity(seed: u64, _scale: Scale) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let auto = Stencil::new(1e-3);
    let central = Stencil::central(1e-3);
    let mut worst_var: f64 = 0.0;
    let mut worst_var_fd: f64 = 0.0;
    for n in 1..=4 {
        let pts = sample_box_points(n, -1.0, 1.0, 100, derive_seed(seed, n as u64))?;
        for k in 1..=n {
            let z = fueter_variable(n, k)?;
            worst_var = worst_var.max(monogenicity_check_with(&z, &pts, &auto, 1e-8)?.max_residual);
            worst_var_fd = worst_var_fd.max(monogenicity_check_with(&z, &pts, &central, 1e-8)?.max_residual);
        }
    }
    checks.push(Check::new(
        "z_k, n <= 4",
        worst_var <= 1e-8,
        format!("max |D z_k| {worst_var:.3e} (central differences {worst_var_fd:.3e})"),
    ));
    let pts = sample_box_points(3, -1.0, 1.0, 100, derive_seed(seed, 100))?;
    let mut worst: (f64, String) = (0.0, String::new());
    let mut worst_fd: (f64, String) = (0.0, String::new());
    for ks in multisets(3, 3) {
        let f = fueter_product(3, &ks)?;
        let r = monogenicity_check_with(&f, &pts, &auto, 1e-6)?.max_residual;
        let r_fd = monogenicity_check_with(&f, &pts, &central, 1e-6)?.max_residual;
        if r >= worst.0 {
            worst = (r, format!("{ks:?}"));
        }
        if r_fd >= worst_fd.0 {
            worst_fd = (r_fd, format!("{ks:?}"));
        }
    }
    checks.push(Check::new(
        "Fueter products, degree <= 3",
        worst.0 <= 1e-6,
        format!("max |Df| {:.3e} at {} with h = 1e-3", worst.0, worst.1),
    ));
    checks.push(Check::info(
        "Fueter products, central differences",
        format!(
            "max |Df| {:.3e} at {}; the stencil error for a cubic is 2h^2 = 2e-6",
            worst_fd.0, worst_fd.1
        ),
    ));
    Ok(checks)
}

/// Non-decreasing index lists of length 1..=degree over 1..=n.
fn multisets(n: usize, degree: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut frontier: Vec<Vec<usize>> = (1..=n).map(|k| vec![k]).collect();
    for _ in 0..degree {
        out.extend(frontier.iter().cloned());
        frontier = frontier
            .iter()
            .flat_map(|ks| (*ks.last().unwrap()..=n).map(move |k| [ks.clone(), vec![k]].concat()))
            .collect();
    }
    out
}

fn c3_brownian(seed: u64, scale: Scale) -> Result<Vec<Check>> {
    Ok(increment_checks(&bm_params(scale), seed)?.checks)
}

fn c4_martingale(seed: u64, scale: Scale) -> Result<Vec<Check>> {
    Ok(martingale_checks(&bm_params(scale), seed)?.checks)
}

fn c5_regrouping(seed: u64, scale: Scale) -> Result<Vec<Check>> {
    let cfg = PathConfig::standard(2, 1.0, 200, seed)?;
    let fields: Vec<(&str, Box<dyn stochclifford::calculus::CliffordField>)> = vec![
        ("z1z2", Box::new(fueter_product(2, &[1, 2])?)),
        ("z1z1z2", Box::new(fueter_product(2, &[1, 1, 2])?)),
        ("abs2", Box::new(stochclifford::calculus::squared_norm(2)?)),
        ("x0", Box::new(stochclifford::calculus::coordinate(2, 0)?)),
    ];
    let n_paths = scale.pick(100, 10);
    let mut worst: f64 = 0.0;
    for i in 0..n_paths {
        let path = sample_bm_indexed(&cfg, i as u64);
        for (_, f) in &fields {
            for opts in [ItoOptions::default(), ItoOptions::brownian()] {
                worst = worst.max(clifford_ito_residual(f.as_ref(), &path, &opts)?.regrouping_gap);
            }
        }
    }
    let names: Vec<&str> = fields.iter().map(|(n, _)| *n).collect();
    Ok(vec![Check::new(
        "regrouping",
        worst <= 1e-10,
        format!("max |Clifford RHS - classical RHS| {worst:.3e} over {n_paths} paths x {names:?} x 2 covariation modes"),
    )])
}

fn c6_scaling(seed: u64, scale: Scale) -> Result<Vec<Check>> {
    let p = ItoScalingParams {
        step_counts: scale.pick(vec![100, 1000, 10_000], vec![10, 100, 1000]),
        n_paths: scale.pick(1000, 20),
        ..Default::default()
    };
    Ok(ito_scaling_experiment(&p, seed)?.checks)
}

fn c7_norm(seed: u64, scale: Scale) -> Result<Vec<Check>> {
    Ok(norm_growth_check(&bm_params(scale), seed)?.checks)
}

fn c8_dirichlet(seed: u64, scale: Scale) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (label, boundary) in [("z1", "z1"), ("y1", "x1")] {
        let p = DirichletParams {
            boundary: boundary.into(),
            n_walks: scale.pick(100_000, 2_000),
            check_stderr_scaling: true,
            ..Default::default()
        };
        for mut c in dirichlet(&p, seed)?.checks {
            c.name = format!("{label}:{}", c.name);
            checks.push(c);
        }
    }
    Ok(checks)
}

fn c9_cone(seed: u64, scale: Scale) -> Result<Vec<Check>> {
    let p = ConeParams {
        n_walks: scale.pick(20_000, 500),
        ..Default::default()
    };
    Ok(cone(&p, seed)?.checks)
}

fn c10_liouville(seed: u64, scale: Scale) -> Result<Vec<Check>> {
    let p = LiouvilleParams {
        n_walks: scale.pick(100_000, 2_000),
        ..Default::default()
    };
    Ok(liouville(&p, seed)?.checks)
}

fn c11_reproducibility(seed: u64, _scale: Scale) -> Result<Vec<Check>> {
    let registry = stochclifford::calculus::fixture_registry();
    let mut runs = Vec::new();
    for threads in [1, 3, 1] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| CliError::Pool(e.to_string()))?;
        let summary = pool.install(|| run_criteria(seed, Scale::Smoke, &registry, false, &mut |_, _| {}))?;
        runs.push((threads, to_json(&summary)?));
    }
    let same = runs.windows(2).all(|w| w[0].1 == w[1].1);
    Ok(vec![Check::new(
        "smoke-scale summary bytes",
        same,
        format!(
            "three runs on 1, 3 and 1 worker threads; {} bytes each; identical: {same}",
            runs[0].1.len()
        ),
    )])
}

pub fn criteria() -> Vec<Criterion> {
    vec![
        Criterion {
            id: 1,
            title: "blade product sign oracle and anticommutation, n <= 8",
            run: c1_algebra,
        },
        Criterion {
            id: 2,
            title: "monogenicity of Fueter variables and products",
            run: c2_monogenicity,
        },
        Criterion {
            id: 3,
            title: "Brownian increments and quadratic covariation",
            run: c3_brownian,
        },
        Criterion {
            id: 4,
            title: "martingale suite: B, B^2 - t, drifted control",
            run: c4_martingale,
        },
        Criterion {
            id: 5,
            title: "Clifford Ito regrouping identity",
            run: c5_regrouping,
        },
        Criterion {
            id: 6,
            title: "Ito residual scaling and monogenic reduction",
            run: c6_scaling,
        },
        Criterion {
            id: 7,
            title: "E|B(t)|^2 = |B(0)|^2 + (n + 1) t",
            run: c7_norm,
        },
        Criterion {
            id: 8,
            title: "walk-on-spheres Dirichlet solver",
            run: c8_dirichlet,
        },
        Criterion {
            id: 9,
            title: "cone hitting probabilities decrease geometrically",
            run: c9_cone,
        },
        Criterion {
            id: 10,
            title: "hyperplane survival matches 2 Phi(d / sqrt t) - 1",
            run: c10_liouville,
        },
        Criterion {
            id: 11,
            title: "byte-identical summaries across runs and thread counts",
            run: c11_reproducibility,
        },
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegistryCheck {
    pub passed: bool,
    /// Fixtures whose declared monogenicity disagrees with a fresh check.
    pub failures: Vec<String>,
}

/// Re-derives each registry entry's monogenicity flag numerically.
pub fn check_registry(registry: &[FixtureEntry], seed: u64) -> Result<RegistryCheck> {
    let pts = sample_box_points(3, -1.0, 1.0, 50, seed)?;
    let mut failures = Vec::new();
    for entry in registry {
        let f = (entry.build)(3.max(entry.min_dim))?;
        let r = monogenicity_check_with(f.as_ref(), &pts, &Stencil::new(1e-3), 1e-6)?;
        if r.passed != entry.monogenic {
            failures.push(format!(
                "{}: declared {}, measured max |Df| = {:.3e}",
                entry.name,
                if entry.monogenic { "monogenic" } else { "non-monogenic" },
                r.max_residual
            ));
        }
    }
    Ok(RegistryCheck {
        passed: failures.is_empty(),
        failures,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub seed: u64,
    pub scale: Scale,
    pub passed: bool,
    pub failed_criteria: Vec<u8>,
    pub registry: RegistryCheck,
    pub criteria: Vec<CriterionResult>,
}

impl Summary {
    /// Fixed-width text table, one line per criterion.
    pub fn table(&self) -> String {
        let mut s = format!("seed {}  scale {:?}\n", self.seed, self.scale);
        s.push_str(&format!(
            "{:>3}  {:<6}  {}\n",
            "id", "result", "criterion"
        ));
        s.push_str(&format!(
            "{:>3}  {:<6}  fixture registry consistency\n",
            "-",
            if self.registry.passed { "PASS" } else { "FAIL" }
        ));
        for f in &self.registry.failures {
            s.push_str(&format!("{:>3}  {:<6}    {f}\n", "", ""));
        }
        for c in &self.criteria {
            s.push_str(&format!(
                "{:>3}  {:<6}  {}\n",
                c.id,
                if c.passed { "PASS" } else { "FAIL" },
                c.title
            ));
            for check in c.checks.iter().filter(|k| !k.passed) {
                s.push_str(&format!("{:>3}  {:<6}    {}: {}\n", "", "", check.name, check.detail));
            }
        }
        s.push_str(&format!("overall: {}\n", if self.passed { "PASS" } else { "FAIL" }));
        s
    }
}

fn run_criteria(
    seed: u64,
    scale: Scale,
    registry: &[FixtureEntry],
    include_reproducibility: bool,
    on_done: &mut dyn FnMut(&CriterionResult, Duration),
) -> Result<Summary> {
    let registry_check = check_registry(registry, derive_seed(seed, 0))?;
    let mut results = Vec::new();
    for c in criteria() {
        if c.id == 11 && !include_reproducibility {
            continue;
        }
        let start = Instant::now();
        let r = c.run(seed, scale)?;
        on_done(&r, start.elapsed());
        results.push(r);
    }
    let failed_criteria: Vec<u8> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    Ok(Summary {
        seed,
        scale,
        passed: failed_criteria.is_empty() && registry_check.passed,
        failed_criteria,
        registry: registry_check,
        criteria: results,
    })
}

/// Runs every criterion; `on_done` sees each result with its wall time.
pub fn reproduce_all_observed(
    seed: u64,
    scale: Scale,
    registry: &[FixtureEntry],
    on_done: &mut dyn FnMut(&CriterionResult, Duration),
) -> Result<Summary> {
    run_criteria(seed, scale, registry, true, on_done)
}

pub fn reproduce_all(seed: u64, scale: Scale, registry: &[FixtureEntry]) -> Result<Summary> {
    reproduce_all_observed(seed, scale, registry, &mut |_, _| {})
}

/// Writes `summary.json` and `summary.txt` into `dir`.
pub fn write_summary(dir: &Path, summary: &Summary) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let json = dir.join("summary.json");
    std::fs::write(&json, to_json(summary)?).map_err(|e| CliError::io(&json, e))?;
    let txt = dir.join("summary.txt");
    std::fs::write(&txt, summary.table()).map_err(|e| CliError::io(&txt, e))?;
    Ok(vec![json, txt])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multisets_cover_degrees_one_to_three() {
        let m = multisets(3, 3);
        // 3 + 6 + 10 multisets of sizes 1, 2, 3 from three symbols
        assert_eq!(m.len(), 19);
        assert!(m.contains(&vec![1, 2, 3]) && m.contains(&vec![3, 3, 3]) && m.contains(&vec![2]));
        assert!(m.iter().all(|ks| ks.windows(2).all(|w| w[0] <= w[1])));
    }

    #[test]
    fn registry_check_names_a_corrupted_fixture() {
        let mut registry = stochclifford::calculus::fixture_registry();
        assert!(check_registry(&registry, 1).unwrap().passed);
        let x0 = registry.iter_mut().find(|e| e.name == "x0").unwrap();
        x0.monogenic = true;
        let r = check_registry(&registry, 1).unwrap();
        assert!(!r.passed);
        assert_eq!(r.failures.len(), 1);
        assert!(r.failures[0].starts_with("x0:"), "{:?}", r.failures);
    }
}
