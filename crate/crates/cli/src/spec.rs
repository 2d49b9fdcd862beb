//! Experiment configuration files.
//!
//! One TOML file describes one experiment:
//!
//! ```toml
//! kind = "dirichlet"
//! seed = 42
//! output = "reports/dirichlet"
//!
//! [params]
//! n = 2
//! boundary = "z1"
//! n_walks = 100000
//! ```
//!
//! Every kind has its own parameter table with defaults; unknown keys are
//! rejected so that typos surface as configuration errors.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use stochclifford::algebra::MAX_DIM;
use stochclifford::calculus::fixture_registry;
use stochclifford::ito::{Covariation, DzConvention, FormOrder, SecondOrderRange};

use crate::error::{CliError, Result};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    AlgebraSelftest,
    Monogenicity,
    BmDiagnostics,
    ItoResidual,
    ItoScaling,
    Dirichlet,
    Cone,
    Liouville,
}

impl Kind {
    pub const ALL: [Kind; 8] = [
        Kind::AlgebraSelftest,
        Kind::Monogenicity,
        Kind::BmDiagnostics,
        Kind::ItoResidual,
        Kind::ItoScaling,
        Kind::Dirichlet,
        Kind::Cone,
        Kind::Liouville,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::AlgebraSelftest => "algebra-selftest",
            Kind::Monogenicity => "monogenicity",
            Kind::BmDiagnostics => "bm-diagnostics",
            Kind::ItoResidual => "ito-residual",
            Kind::ItoScaling => "ito-scaling",
            Kind::Dirichlet => "dirichlet",
            Kind::Cone => "cone",
            Kind::Liouville => "liouville",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kind {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self> {
        Kind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| CliError::Usage(format!("unknown experiment kind {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlgebraSelftestParams {
    /// Largest algebra dimension checked exhaustively.
    pub n: usize,
}

impl Default for AlgebraSelftestParams {
    fn default() -> Self {
        AlgebraSelftestParams { n: 8 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartialsMode {
    /// Analytic partials where the fixture provides them.
    #[default]
    Auto,
    Central,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonogenicityParams {
    pub n: usize,
    /// Registry names; empty means every fixture available in `Cl(n)`.
    pub fixtures: Vec<String>,
    pub points: usize,
    pub h: f64,
    pub tol: f64,
    /// Sample box `[lo, hi]^{n+1}`.
    pub lo: f64,
    pub hi: f64,
    pub partials: PartialsMode,
}

impl Default for MonogenicityParams {
    fn default() -> Self {
        MonogenicityParams {
            n: 3,
            fixtures: Vec::new(),
            points: 100,
            h: 1e-3,
            tol: 1e-6,
            lo: -1.0,
            hi: 1.0,
            partials: PartialsMode::Auto,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BmDiagnosticsParams {
    pub n: usize,
    pub n_paths: usize,
    pub n_steps: usize,
    pub t_max: f64,
    /// Conditioning time for the martingale checks; the horizon is `t_max`.
    pub s: f64,
}

impl Default for BmDiagnosticsParams {
    fn default() -> Self {
        BmDiagnosticsParams {
            n: 2,
            n_paths: 100_000,
            n_steps: 100,
            t_max: 1.0,
            s: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ItoResidualParams {
    pub n: usize,
    pub fixture: String,
    pub n_steps: usize,
    pub n_paths: usize,
    pub t_max: f64,
    pub covariation: Covariation,
    pub dz: DzConvention,
    pub order: FormOrder,
    pub second_order: SecondOrderRange,
    /// Tolerance for the regrouping and reduction comparisons.
    pub tol: f64,
}

impl Default for ItoResidualParams {
    fn default() -> Self {
        ItoResidualParams {
            n: 2,
            fixture: "z1z2".into(),
            n_steps: 1000,
            n_paths: 20,
            t_max: 1.0,
            covariation: Covariation::IncrementProducts,
            dz: DzConvention::Minus,
            order: FormOrder::Left,
            second_order: SecondOrderRange::FromOne,
            tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ItoScalingParams {
    pub n: usize,
    /// Multi-index of a symmetrized Fueter product.
    pub fueter: Vec<usize>,
    pub step_counts: Vec<usize>,
    pub n_paths: usize,
    pub t_max: f64,
    pub covariation: Covariation,
    pub slope_range: [f64; 2],
    pub tol: f64,
}

impl Default for ItoScalingParams {
    fn default() -> Self {
        ItoScalingParams {
            n: 2,
            fueter: vec![1, 2],
            step_counts: vec![100, 1000, 10_000],
            n_paths: 1000,
            t_max: 1.0,
            covariation: Covariation::Brownian,
            slope_range: [0.35, 0.65],
            tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DomainSpec {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    HalfSpace { normal: Vec<f64>, offset: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DirichletParams {
    pub n: usize,
    /// Unit ball about the origin when absent.
    pub domain: Option<DomainSpec>,
    /// Registry fixture whose restriction is the boundary data.
    pub boundary: String,
    /// Evaluation points; five fixed interior points of a bounded domain when empty.
    pub points: Vec<Vec<f64>>,
    pub n_walks: usize,
    pub eps: Option<f64>,
    pub max_steps: usize,
    /// Also run with `n_walks / 4` walks and compare standard errors.
    pub check_stderr_scaling: bool,
}

impl Default for DirichletParams {
    fn default() -> Self {
        DirichletParams {
            n: 2,
            domain: None,
            boundary: "z1".into(),
            points: Vec::new(),
            n_walks: 100_000,
            eps: None,
            max_steps: stochclifford::dirichlet::DEFAULT_MAX_STEPS,
            check_stderr_scaling: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConeParams {
    pub n: usize,
    /// Full opening angle in radians.
    pub alpha: f64,
    pub h: f64,
    pub ks: Vec<u32>,
    pub n_walks: usize,
    pub dt_factor: f64,
}

impl Default for ConeParams {
    fn default() -> Self {
        ConeParams {
            n: 1,
            alpha: std::f64::consts::FRAC_PI_2,
            h: 1.0,
            ks: vec![1, 2, 3],
            n_walks: 20_000,
            dt_factor: 1e-4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LiouvilleParams {
    pub d: f64,
    pub t_grid: Vec<f64>,
    pub n_walks: usize,
    pub steps_per_unit: usize,
    pub bridge_correction: bool,
}

impl Default for LiouvilleParams {
    fn default() -> Self {
        LiouvilleParams {
            d: 1.0,
            t_grid: vec![1.0, 4.0, 16.0],
            n_walks: 100_000,
            steps_per_unit: 64,
            bridge_correction: true,
        }
    }
}

/// Validated parameters, one variant per experiment kind.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Params {
    AlgebraSelftest(AlgebraSelftestParams),
    Monogenicity(MonogenicityParams),
    BmDiagnostics(BmDiagnosticsParams),
    ItoResidual(ItoResidualParams),
    ItoScaling(ItoScalingParams),
    Dirichlet(DirichletParams),
    Cone(ConeParams),
    Liouville(LiouvilleParams),
}

impl Params {
    pub fn kind(&self) -> Kind {
        match self {
            Params::AlgebraSelftest(_) => Kind::AlgebraSelftest,
            Params::Monogenicity(_) => Kind::Monogenicity,
            Params::BmDiagnostics(_) => Kind::BmDiagnostics,
            Params::ItoResidual(_) => Kind::ItoResidual,
            Params::ItoScaling(_) => Kind::ItoScaling,
            Params::Dirichlet(_) => Kind::Dirichlet,
            Params::Cone(_) => Kind::Cone,
            Params::Liouville(_) => Kind::Liouville,
        }
    }

    pub fn defaults(kind: Kind) -> Params {
        match kind {
            Kind::AlgebraSelftest => Params::AlgebraSelftest(Default::default()),
            Kind::Monogenicity => Params::Monogenicity(Default::default()),
            Kind::BmDiagnostics => Params::BmDiagnostics(Default::default()),
            Kind::ItoResidual => Params::ItoResidual(Default::default()),
            Kind::ItoScaling => Params::ItoScaling(Default::default()),
            Kind::Dirichlet => Params::Dirichlet(Default::default()),
            Kind::Cone => Params::Cone(Default::default()),
            Kind::Liouville => Params::Liouville(Default::default()),
        }
    }

    fn parse(kind: Kind, table: toml::Table) -> std::result::Result<Params, toml::de::Error> {
        let v = toml::Value::Table(table);
        Ok(match kind {
            Kind::AlgebraSelftest => Params::AlgebraSelftest(v.try_into()?),
            Kind::Monogenicity => Params::Monogenicity(v.try_into()?),
            Kind::BmDiagnostics => Params::BmDiagnostics(v.try_into()?),
            Kind::ItoResidual => Params::ItoResidual(v.try_into()?),
            Kind::ItoScaling => Params::ItoScaling(v.try_into()?),
            Kind::Dirichlet => Params::Dirichlet(v.try_into()?),
            Kind::Cone => Params::Cone(v.try_into()?),
            Kind::Liouville => Params::Liouville(v.try_into()?),
        })
    }

    /// Range and consistency checks, run before any computation.
    pub fn validate(&self) -> Result<()> {
        match self {
            Params::AlgebraSelftest(p) => check_range("n", p.n, 1, 10),
            Params::Monogenicity(p) => {
                check_range("n", p.n, 1, MAX_DIM)?;
                check_positive("points", p.points)?;
                check_pos_f("h", p.h)?;
                check_pos_f("tol", p.tol)?;
                if !(p.lo < p.hi) {
                    return Err(CliError::param("lo", "must be below hi"));
                }
                for name in &p.fixtures {
                    check_fixture(name, p.n)?;
                }
                Ok(())
            }
            Params::BmDiagnostics(p) => {
                check_range("n", p.n, 1, MAX_DIM)?;
                check_range("n_paths", p.n_paths, 2, usize::MAX)?;
                check_positive("n_steps", p.n_steps)?;
                check_pos_f("t_max", p.t_max)?;
                if !(p.s > 0.0 && p.s < p.t_max) {
                    return Err(CliError::param("s", "need 0 < s < t_max"));
                }
                Ok(())
            }
            Params::ItoResidual(p) => {
                check_range("n", p.n, 1, MAX_DIM)?;
                check_fixture(&p.fixture, p.n)?;
                check_positive("n_steps", p.n_steps)?;
                check_positive("n_paths", p.n_paths)?;
                check_pos_f("t_max", p.t_max)?;
                check_pos_f("tol", p.tol)
            }
            Params::ItoScaling(p) => {
                check_range("n", p.n, 1, MAX_DIM)?;
                if p.fueter.is_empty() || p.fueter.iter().any(|&k| k == 0 || k > p.n) {
                    return Err(CliError::param("fueter", format!("indices must lie in 1..={}", p.n)));
                }
                if p.step_counts.len() < 2 || p.step_counts.contains(&0) {
                    return Err(CliError::param("step_counts", "need at least two positive grid sizes"));
                }
                check_range("n_paths", p.n_paths, 2, usize::MAX)?;
                check_pos_f("t_max", p.t_max)?;
                if !(p.slope_range[0] < p.slope_range[1]) {
                    return Err(CliError::param("slope_range", "lower bound must be below upper bound"));
                }
                check_pos_f("tol", p.tol)
            }
            Params::Dirichlet(p) => {
                check_range("n", p.n, 1, MAX_DIM)?;
                check_fixture(&p.boundary, p.n)?;
                check_range("n_walks", p.n_walks, 2, usize::MAX)?;
                check_positive("max_steps", p.max_steps)?;
                if let Some(eps) = p.eps {
                    check_pos_f("eps", eps)?;
                }
                if p.check_stderr_scaling && p.n_walks < 8 {
                    return Err(CliError::param("n_walks", "stderr scaling needs at least 8 walks"));
                }
                for pt in &p.points {
                    check_len("points", pt.len(), p.n + 1)?;
                }
                if matches!(p.domain, Some(DomainSpec::HalfSpace { .. })) && p.points.is_empty() {
                    return Err(CliError::param("points", "a half-space needs explicit evaluation points"));
                }
                match &p.domain {
                    None => Ok(()),
                    Some(DomainSpec::Ball { center, radius }) => {
                        check_len("domain.center", center.len(), p.n + 1)?;
                        check_pos_f("domain.radius", *radius)
                    }
                    Some(DomainSpec::Box { lo, hi }) => {
                        check_len("domain.lo", lo.len(), p.n + 1)?;
                        check_len("domain.hi", hi.len(), p.n + 1)
                    }
                    Some(DomainSpec::HalfSpace { normal, .. }) => check_len("domain.normal", normal.len(), p.n + 1),
                }
            }
            Params::Cone(p) => {
                check_range("n", p.n, 1, MAX_DIM)?;
                if !(p.alpha > 0.0 && p.alpha < 2.0 * std::f64::consts::PI) {
                    return Err(CliError::param("alpha", "opening angle must lie in (0, 2 pi)"));
                }
                check_pos_f("h", p.h)?;
                check_pos_f("dt_factor", p.dt_factor)?;
                check_range("n_walks", p.n_walks, 2, usize::MAX)?;
                if p.ks.is_empty() || p.ks.contains(&0) || p.ks.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(CliError::param("ks", "need strictly increasing levels >= 1"));
                }
                Ok(())
            }
            Params::Liouville(p) => {
                check_pos_f("d", p.d)?;
                check_range("n_walks", p.n_walks, 2, usize::MAX)?;
                check_positive("steps_per_unit", p.steps_per_unit)?;
                if p.t_grid.is_empty()
                    || p.t_grid.iter().any(|t| !(*t > 0.0) || !t.is_finite())
                    || p.t_grid.windows(2).any(|w| w[1] <= w[0])
                {
                    return Err(CliError::param("t_grid", "need positive, strictly increasing times"));
                }
                Ok(())
            }
        }
    }
}

fn check_range(name: &str, v: usize, lo: usize, hi: usize) -> Result<()> {
    if v < lo || v > hi {
        return Err(CliError::param(name, format!("{v} outside {lo}..={hi}")));
    }
    Ok(())
}

fn check_positive(name: &str, v: usize) -> Result<()> {
    check_range(name, v, 1, usize::MAX)
}

fn check_pos_f(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(CliError::param(name, format!("must be positive and finite, got {v}")));
    }
    Ok(())
}

fn check_len(name: &str, got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(CliError::param(name, format!("expected {expected} coordinates, got {got}")));
    }
    Ok(())
}

fn check_fixture(name: &str, n: usize) -> Result<()> {
    let entry = fixture_registry()
        .into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| CliError::param("fixture", format!("unknown fixture {name:?}")))?;
    if n < entry.min_dim {
        return Err(CliError::param(
            "fixture",
            format!("{name} needs n >= {}, got {n}", entry.min_dim),
        ));
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    kind: String,
    seed: Option<u64>,
    output: Option<PathBuf>,
    #[serde(default)]
    params: toml::Table,
}

/// A validated experiment description.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub kind: Kind,
    pub params: Params,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn new(params: Params, seed: u64) -> Result<Self> {
        params.validate()?;
        Ok(ExperimentSpec {
            kind: params.kind(),
            params,
            seed,
            output: None,
        })
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let config_err = |reason: String| CliError::Config {
            path: origin.to_path_buf(),
            reason,
        };
        let raw: RawSpec = toml::from_str(text).map_err(|e| config_err(e.message().to_string()))?;
        let kind: Kind = raw.kind.parse()?;
        let params = Params::parse(kind, raw.params).map_err(|e| config_err(format!("[params]: {}", e.message())))?;
        params.validate()?;
        Ok(ExperimentSpec {
            kind,
            params,
            seed: raw.seed.unwrap_or(DEFAULT_SEED),
            output: raw.output,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        Self::parse(&text, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentSpec> {
        ExperimentSpec::parse(text, Path::new("inline.toml"))
    }

    #[test]
    fn minimal_spec_uses_defaults() {
        let s = parse("kind = \"liouville\"").unwrap();
        assert_eq!(s.kind, Kind::Liouville);
        assert_eq!(s.seed, DEFAULT_SEED);
        assert_eq!(s.params, Params::Liouville(LiouvilleParams::default()));
    }

    #[test]
    fn nested_domain_and_enums_parse() {
        let s = parse(
            r#"
            kind = "dirichlet"
            seed = 7
            [params]
            boundary = "z1z2"
            points = [[0.1, 0.0, 0.0]]
            [params.domain]
            shape = "box"
            lo = [-1.0, -1.0, -1.0]
            hi = [1.0, 1.0, 1.0]
            "#,
        )
        .unwrap();
        let Params::Dirichlet(p) = &s.params else { panic!() };
        assert!(matches!(p.domain, Some(DomainSpec::Box { .. })));
        let s = parse("kind = \"ito-residual\"\n[params]\ncovariation = \"brownian\"\ndz = \"plus\"").unwrap();
        let Params::ItoResidual(p) = &s.params else { panic!() };
        assert_eq!(p.covariation, Covariation::Brownian);
        assert_eq!(p.dz, DzConvention::Plus);
    }

    #[test]
    fn unknown_kind_is_usage_error() {
        let e = parse("kind = \"teleport\"").unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("teleport"));
    }

    #[test]
    fn invalid_params_are_rejected_before_running() {
        for text in [
            "kind = \"cone\"\n[params]\nalpha = 7.0",
            "kind = \"cone\"\n[params]\nks = [2, 1]",
            "kind = \"liouville\"\n[params]\nt_grid = [4.0, 1.0]",
            "kind = \"dirichlet\"\n[params]\nboundary = \"nope\"",
            "kind = \"dirichlet\"\n[params]\npoints = [[0.1]]",
            "kind = \"ito-scaling\"\n[params]\nfueter = [3]",
            "kind = \"bm-diagnostics\"\n[params]\ns = 2.0",
            "kind = \"monogenicity\"\n[params]\nfixtures = [\"z3\"]\nn = 2",
            "kind = \"algebra-selftest\"\n[params]\nn = 0",
            "kind = \"liouville\"\n[params]\nbogus = 1",
            "kind = \"liouville\"\nextra = 1",
            "not toml at all =",
        ] {
            let e = parse(text).unwrap_err();
            assert_eq!(e.exit_code(), 2, "{text}: {e}");
        }
    }
}
