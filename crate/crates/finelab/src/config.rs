//! Scenario configuration (TOML).
//!
//! ```toml
//! seed = 7
//!
//! [space]
//! builder = "grid"
//! lo = [-1.0, -1.0]
//! hi = [1.0, 1.0]
//! h = 0.0625
//!
//! [problem]
//! operation = "capacity"
//! set = "ball:0,0,0.25"
//! domain = "ball:0,0,0.75"
//! p = 2.0
//!
//! [output]
//! formats = ["json", "csv"]
//! ```
//!
//! Every table rejects unknown keys. Parameters left out take their value
//! from [`DEFAULTS`], which is echoed into every manifest.

use std::path::{Path, PathBuf};

use finelab_core::cartan::{HarnackFamily, HarnackForm};
use finelab_core::fine::{ClassifyPolicy, Verdict, WienerMode};
use finelab_core::{AnalyticSet, SolverOptions};
use serde::{Deserialize, Serialize};

use crate::error::RunError;

/// The single table of defaults.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Defaults {
    pub sigma: f64,
    pub scales: usize,
    pub tol: f64,
    pub max_iterations: usize,
    pub max_cg_iterations: usize,
    pub policy: ClassifyPolicy,
    pub r0: f64,
    pub wiener_resolution: usize,
    pub weak_cartan_sigma: f64,
    pub weak_cartan_resolution: usize,
    pub level_tol: f64,
    pub margin: f64,
    pub bounds_resolution: usize,
    pub max_removed_fraction: f64,
    pub boundary_resolution: usize,
    pub relaxation: f64,
    pub strong_levels: usize,
    pub strong_resolution: usize,
    pub radius_step: f64,
    pub harnack_samples: usize,
    pub harnack_domain_factor: f64,
    pub geometry_samples: usize,
    pub node_cap: usize,
}

pub const DEFAULTS: Defaults = Defaults {
    sigma: 8.0,
    scales: 12,
    tol: 1e-8,
    max_iterations: 200,
    max_cg_iterations: 20_000,
    policy: ClassifyPolicy { rho_max: 0.9, eps_tail: 0.05, tau_floor: 0.05, k: 3 },
    r0: 1.0,
    wiener_resolution: 128,
    weak_cartan_sigma: 50.0,
    weak_cartan_resolution: 256,
    level_tol: 1e-3,
    margin: 1e-3,
    bounds_resolution: 256,
    max_removed_fraction: 0.5,
    boundary_resolution: 128,
    relaxation: 8.0,
    strong_levels: 6,
    strong_resolution: 128,
    radius_step: 0.8,
    harnack_samples: 20,
    harnack_domain_factor: 8.0,
    geometry_samples: 64,
    node_cap: finelab_core::space::DEFAULT_NODE_CAP,
};

mod d {
    use super::*;
    pub fn sigma() -> f64 {
        DEFAULTS.sigma
    }
    pub fn scales() -> usize {
        DEFAULTS.scales
    }
    pub fn tol() -> f64 {
        DEFAULTS.tol
    }
    pub fn max_iterations() -> usize {
        DEFAULTS.max_iterations
    }
    pub fn max_cg_iterations() -> usize {
        DEFAULTS.max_cg_iterations
    }
    pub fn policy() -> PolicyConfig {
        let p = DEFAULTS.policy;
        PolicyConfig { rho_max: p.rho_max, eps_tail: p.eps_tail, tau_floor: p.tau_floor, k: p.k }
    }
    pub fn r0() -> f64 {
        DEFAULTS.r0
    }
    pub fn one() -> f64 {
        1.0
    }
    pub fn wiener_resolution() -> usize {
        DEFAULTS.wiener_resolution
    }
    pub fn weak_cartan_sigma() -> f64 {
        DEFAULTS.weak_cartan_sigma
    }
    pub fn weak_cartan_resolution() -> usize {
        DEFAULTS.weak_cartan_resolution
    }
    pub fn level_tol() -> f64 {
        DEFAULTS.level_tol
    }
    pub fn margin() -> f64 {
        DEFAULTS.margin
    }
    pub fn bounds_resolution() -> usize {
        DEFAULTS.bounds_resolution
    }
    pub fn max_removed_fraction() -> f64 {
        DEFAULTS.max_removed_fraction
    }
    pub fn boundary_resolution() -> usize {
        DEFAULTS.boundary_resolution
    }
    pub fn relaxation() -> f64 {
        DEFAULTS.relaxation
    }
    pub fn strong_levels() -> usize {
        DEFAULTS.strong_levels
    }
    pub fn strong_resolution() -> usize {
        DEFAULTS.strong_resolution
    }
    pub fn radius_step() -> f64 {
        DEFAULTS.radius_step
    }
    pub fn harnack_samples() -> usize {
        DEFAULTS.harnack_samples
    }
    pub fn harnack_domain_factor() -> f64 {
        DEFAULTS.harnack_domain_factor
    }
    pub fn geometry_samples() -> usize {
        DEFAULTS.geometry_samples
    }
    pub fn node_cap() -> usize {
        DEFAULTS.node_cap
    }
    pub fn origin() -> Vec<f64> {
        vec![0.0, 0.0]
    }
    pub fn two() -> f64 {
        2.0
    }
    pub fn formats() -> Vec<Format> {
        vec![Format::Json, Format::Csv]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<SpaceConfig>,
    pub problem: Problem,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "builder", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceConfig {
    /// Axis grid on the box `[lo, hi]` with spacing `h`.
    Grid {
        lo: Vec<f64>,
        hi: Vec<f64>,
        h: f64,
        #[serde(default)]
        weight_exponent: f64,
        #[serde(default = "d::node_cap")]
        node_cap: usize,
    },
    /// Radial path for the annulus `rmin <= |x| <= rmax` in R^n.
    Radial {
        n: usize,
        rmin: f64,
        rmax: f64,
        h: f64,
        #[serde(default)]
        weight_exponent: f64,
        #[serde(default = "d::node_cap")]
        node_cap: usize,
    },
    /// Space file; relative paths resolve against the config file.
    File { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Where artifacts go. Not echoed into the manifest, so the same run in
    /// two directories yields identical manifests.
    #[serde(default, skip_serializing)]
    pub dir: Option<PathBuf>,
    #[serde(default = "d::formats")]
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: None, formats: d::formats() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "d::tol")]
    pub tol: f64,
    #[serde(default = "d::max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "d::max_cg_iterations")]
    pub max_cg_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tol: d::tol(), max_iterations: d::max_iterations(), max_cg_iterations: d::max_cg_iterations() }
    }
}

impl SolverConfig {
    pub fn options(&self) -> SolverOptions {
        SolverOptions { tol: self.tol, max_iterations: self.max_iterations, max_cg_iterations: self.max_cg_iterations }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    pub rho_max: f64,
    pub eps_tail: f64,
    pub tau_floor: f64,
    pub k: usize,
}

impl PolicyConfig {
    pub fn policy(&self) -> ClassifyPolicy {
        ClassifyPolicy { rho_max: self.rho_max, eps_tail: self.eps_tail, tau_floor: self.tau_floor, k: self.k }
    }
}

/// A set descriptor: either a full table (`kind = "sector"`, ...) or a
/// shortcut string, see [`parse_descriptor`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "serde_json::Value", into = "AnalyticSet")]
pub struct Descriptor(pub AnalyticSet);

impl TryFrom<serde_json::Value> for Descriptor {
    type Error = String;
    fn try_from(v: serde_json::Value) -> Result<Self, String> {
        match v {
            serde_json::Value::String(s) => parse_descriptor(&s).map(Descriptor),
            other => serde_json::from_value(other).map(Descriptor).map_err(|e| e.to_string()),
        }
    }
}

impl From<Descriptor> for AnalyticSet {
    fn from(d: Descriptor) -> Self {
        d.0
    }
}

fn numbers(s: &str, n: usize, what: &str) -> Result<Vec<f64>, String> {
    let xs: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("invalid number `{t}` in {what}")))
        .collect::<Result<_, _>>()?;
    if n > 0 && xs.len() != n {
        return Err(format!("{what} takes {n} numbers, got {}", xs.len()));
    }
    Ok(xs)
}

/// Parses a descriptor given as JSON (`{"kind": ...}`), a `@file.json`
/// reference, or one of the shortcuts
/// `empty`, `cusp`, `sector:<angle>`, `singleton:<x>,<y>..`,
/// `ball:<x>,<y>..,<r>` (closed) and `disk_chain`.
pub fn parse_descriptor(s: &str) -> Result<AnalyticSet, String> {
    let s = s.trim();
    if s.starts_with('{') {
        return serde_json::from_str(s).map_err(|e| e.to_string());
    }
    if let Some(path) = s.strip_prefix('@') {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
        return serde_json::from_str(&text).map_err(|e| format!("{path}: {e}"));
    }
    let (name, args) = s.split_once(':').unwrap_or((s, ""));
    match (name, args.is_empty()) {
        ("empty", true) => Ok(AnalyticSet::Empty),
        ("cusp", true) => Ok(AnalyticSet::exponential_cusp()),
        ("disk_chain", true) => Ok(AnalyticSet::DiskChain {
            base: vec![0.0, 0.0],
            direction: vec![0.3f64.cos(), 0.3f64.sin()],
            first: 0.5,
            ratio: 0.25,
            decay: 1.0,
            count: 8,
        }),
        ("sector", false) => Ok(AnalyticSet::sector(numbers(args, 1, "sector")?[0])),
        ("singleton", false) => Ok(AnalyticSet::Singleton { point: numbers(args, 0, "singleton")? }),
        ("ball", false) => {
            let mut xs = numbers(args, 0, "ball")?;
            if xs.len() < 2 {
                return Err("ball takes a center and a radius".into());
            }
            let radius = xs.pop().unwrap();
            Ok(AnalyticSet::Ball { center: xs, radius, closed: true })
        }
        _ => Err(format!(
            "unknown descriptor `{s}`; expected JSON or one of empty, cusp, disk_chain, sector:<a>, singleton:<x,..>, ball:<x,..,r>"
        )),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapacityKind {
    Variational,
    Sobolev,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    Thin,
    Thick,
    Inconclusive,
}

impl From<Expectation> for Verdict {
    fn from(e: Expectation) -> Self {
        match e {
            Expectation::Thin => Verdict::Thin,
            Expectation::Thick => Verdict::Thick,
            Expectation::Inconclusive => Verdict::Inconclusive,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "operation", rename_all = "snake_case")]
pub enum Problem {
    Capacity(CapacityProblem),
    Potential(PotentialProblem),
    Comparison(ComparisonProblem),
    Annulus(AnnulusProblem),
    Geometry(GeometryProblem),
    Wiener(WienerProblem),
    Shrink(ShrinkProblem),
    WeakCartan(WeakCartanProblem),
    Bounds(BoundsProblem),
    Boundary(BoundaryProblem),
    StrongCartan(StrongCartanProblem),
    Harnack(HarnackProblem),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacityProblem {
    pub set: Descriptor,
    /// Condenser domain; required for the variational capacity.
    #[serde(default)]
    pub domain: Option<Descriptor>,
    pub p: f64,
    #[serde(default = "variational")]
    pub kind: CapacityKind,
    #[serde(default)]
    pub solver: SolverConfig,
}

fn variational() -> CapacityKind {
    CapacityKind::Variational
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialProblem {
    pub set: Descriptor,
    pub domain: Descriptor,
    pub p: f64,
    #[serde(default)]
    pub solver: SolverConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonProblem {
    pub set: Descriptor,
    pub center: Vec<f64>,
    pub radius: f64,
    pub p: f64,
    #[serde(default)]
    pub solver: SolverConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnulusProblem {
    pub set: Descriptor,
    pub center: Vec<f64>,
    pub radius: f64,
    pub t: f64,
    pub tau: f64,
    pub p: f64,
    #[serde(default)]
    pub solver: SolverConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryProblem {
    #[serde(default = "d::geometry_samples")]
    pub samples: usize,
    #[serde(default = "d::two")]
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WienerProblem {
    pub set: Descriptor,
    #[serde(default = "d::origin")]
    pub x0: Vec<f64>,
    pub p: f64,
    #[serde(default = "d::sigma")]
    pub sigma: f64,
    #[serde(default = "d::r0")]
    pub r0: f64,
    #[serde(default = "d::scales")]
    pub scales: usize,
    #[serde(default = "d::wiener_resolution")]
    pub resolution: usize,
    #[serde(default = "rescaled")]
    pub mode: WienerMode,
    #[serde(default)]
    pub weight_exponent: f64,
    #[serde(default = "d::policy")]
    pub policy: PolicyConfig,
    #[serde(default)]
    pub solver: SolverConfig,
}

fn rescaled() -> WienerMode {
    WienerMode::Rescaled
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShrinkProblem {
    pub set: Descriptor,
    #[serde(default = "d::origin")]
    pub x0: Vec<f64>,
    /// Radius of the condenser ball `B` about `x0`.
    pub domain_radius: f64,
    /// Strictly decreasing radii `ρ`.
    pub radii: Vec<f64>,
    pub p: f64,
    #[serde(default)]
    pub solver: SolverConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeakCartanProblem {
    pub set: Descriptor,
    #[serde(default = "d::origin")]
    pub x0: Vec<f64>,
    pub p: f64,
    #[serde(default = "d::one")]
    pub r: f64,
    #[serde(default = "d::weak_cartan_sigma")]
    pub sigma: f64,
    #[serde(default = "d::weak_cartan_resolution")]
    pub resolution: usize,
    #[serde(default = "d::level_tol")]
    pub level_tol: f64,
    #[serde(default = "d::margin")]
    pub margin: f64,
    /// Expected verdict for the set at `x0`; anything but `thin` marks the
    /// certificate as expected to be invalid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Expectation>,
    #[serde(default)]
    pub solver: SolverConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsProblem {
    pub set: Descriptor,
    #[serde(default = "d::origin")]
    pub x0: Vec<f64>,
    pub p: f64,
    #[serde(default = "d::one")]
    pub r: f64,
    #[serde(default = "d::sigma")]
    pub sigma: f64,
    #[serde(default = "d::scales")]
    pub scales: usize,
    #[serde(default = "d::bounds_resolution")]
    pub resolution: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_prime: Option<f64>,
    #[serde(default = "d::max_removed_fraction")]
    pub max_removed_fraction: f64,
    #[serde(default)]
    pub solver: SolverConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryProblem {
    pub set: Descriptor,
    #[serde(default = "d::origin")]
    pub center: Vec<f64>,
    pub radius: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outer_center: Option<Vec<f64>>,
    pub outer_radius: f64,
    pub p: f64,
    #[serde(default = "d::boundary_resolution")]
    pub resolution: usize,
    #[serde(default = "d::relaxation")]
    pub relaxation: f64,
    #[serde(default)]
    pub solver: SolverConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrongCartanProblem {
    pub set: Descriptor,
    #[serde(default = "d::origin")]
    pub x0: Vec<f64>,
    pub p: f64,
    #[serde(default = "d::one")]
    pub r: f64,
    #[serde(default = "d::strong_levels")]
    pub levels: usize,
    #[serde(default = "d::strong_resolution")]
    pub resolution: usize,
    #[serde(default = "d::radius_step")]
    pub radius_step: f64,
    #[serde(default)]
    pub solver: SolverConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarnackProblem {
    pub family: HarnackFamily,
    pub center: Vec<f64>,
    pub radius: f64,
    pub q: f64,
    pub p: f64,
    pub form: HarnackForm,
    #[serde(default = "d::harnack_samples")]
    pub samples: usize,
    #[serde(default = "d::harnack_domain_factor")]
    pub domain_factor: f64,
    #[serde(default)]
    pub solver: SolverConfig,
}

impl Problem {
    pub fn operation(&self) -> &'static str {
        match self {
            Problem::Capacity(_) => "capacity",
            Problem::Potential(_) => "potential",
            Problem::Comparison(_) => "comparison",
            Problem::Annulus(_) => "annulus",
            Problem::Geometry(_) => "geometry",
            Problem::Wiener(_) => "wiener",
            Problem::Shrink(_) => "shrink",
            Problem::WeakCartan(_) => "weak_cartan",
            Problem::Bounds(_) => "bounds",
            Problem::Boundary(_) => "boundary",
            Problem::StrongCartan(_) => "strong_cartan",
            Problem::Harnack(_) => "harnack",
        }
    }

    /// Whether the operation runs on the `[space]` section. The fine and
    /// Cartan operations build their own grids about the base point.
    pub fn needs_space(&self) -> bool {
        matches!(
            self,
            Problem::Capacity(_)
                | Problem::Potential(_)
                | Problem::Comparison(_)
                | Problem::Annulus(_)
                | Problem::Geometry(_)
                | Problem::Shrink(_)
                | Problem::Harnack(_)
        )
    }

    fn solver(&self) -> Option<&SolverConfig> {
        match self {
            Problem::Capacity(c) => Some(&c.solver),
            Problem::Potential(c) => Some(&c.solver),
            Problem::Comparison(c) => Some(&c.solver),
            Problem::Annulus(c) => Some(&c.solver),
            Problem::Geometry(_) => None,
            Problem::Wiener(c) => Some(&c.solver),
            Problem::Shrink(c) => Some(&c.solver),
            Problem::WeakCartan(c) => Some(&c.solver),
            Problem::Bounds(c) => Some(&c.solver),
            Problem::Boundary(c) => Some(&c.solver),
            Problem::StrongCartan(c) => Some(&c.solver),
            Problem::Harnack(c) => Some(&c.solver),
        }
    }

    fn p(&self) -> f64 {
        match self {
            Problem::Capacity(c) => c.p,
            Problem::Potential(c) => c.p,
            Problem::Comparison(c) => c.p,
            Problem::Annulus(c) => c.p,
            Problem::Geometry(c) => c.p,
            Problem::Wiener(c) => c.p,
            Problem::Shrink(c) => c.p,
            Problem::WeakCartan(c) => c.p,
            Problem::Bounds(c) => c.p,
            Problem::Boundary(c) => c.p,
            Problem::StrongCartan(c) => c.p,
            Problem::Harnack(c) => c.p,
        }
    }
}

struct Check;

impl Check {
    fn that(ok: bool, path: &str, message: &str) -> Result<(), RunError> {
        if ok {
            Ok(())
        } else {
            Err(RunError::config(path, message))
        }
    }

    fn positive(v: f64, path: &str) -> Result<(), RunError> {
        Self::that(v > 0.0 && v.is_finite(), path, "must be a positive finite number")
    }

    fn point(x: &[f64], path: &str) -> Result<(), RunError> {
        Self::that(!x.is_empty() && x.iter().all(|v| v.is_finite()), path, "must be a nonempty list of finite numbers")
    }
}

impl ScenarioConfig {
    /// Parses TOML; errors name the offending key path.
    pub fn from_toml(text: &str) -> Result<Self, RunError> {
        let de = toml::Deserializer::parse(text).map_err(|e| RunError::config("<root>", e.to_string().trim_end()))?;
        let cfg: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let message = e.into_inner().message().to_string();
            RunError::config(if path == "." { "<root>".to_string() } else { path }, message)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file and resolves a relative space file path against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(SpaceConfig::File { path: p }) = &mut cfg.space {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), RunError> {
        let problem = &self.problem;
        let p = problem.p();
        Check::that(
            finelab_core::solver::check_exponent(p).is_ok(),
            "problem.p",
            &format!("p = {p} is outside the supported range [1.001, 64]"),
        )?;
        if let Some(s) = problem.solver() {
            Check::that(s.tol > 0.0 && s.tol < 1.0, "problem.solver.tol", "must lie in (0, 1)")?;
            Check::that(s.max_iterations > 0, "problem.solver.max_iterations", "must be at least 1")?;
            Check::that(s.max_cg_iterations > 0, "problem.solver.max_cg_iterations", "must be at least 1")?;
        }
        if problem.needs_space() && self.space.is_none() {
            return Err(RunError::config(
                "space",
                format!("operation `{}` needs a [space] section", problem.operation()),
            ));
        }
        if let Some(space) = &self.space {
            validate_space(space)?;
        }
        Check::that(!self.output.formats.is_empty(), "output.formats", "must name at least one format")?;
        match problem {
            Problem::Capacity(c) => Check::that(
                c.kind == CapacityKind::Sobolev || c.domain.is_some(),
                "problem.domain",
                "the variational capacity needs a domain",
            ),
            Problem::Potential(_) => Ok(()),
            Problem::Comparison(c) => {
                Check::point(&c.center, "problem.center")?;
                Check::positive(c.radius, "problem.radius")
            }
            Problem::Annulus(c) => {
                Check::point(&c.center, "problem.center")?;
                Check::positive(c.radius, "problem.radius")?;
                Check::that(c.t > 0.0 && c.t < 1.0, "problem.t", "must lie in (0, 1)")?;
                Check::that(c.tau > 0.0 && c.tau < c.t, "problem.tau", "must lie in (0, t)")
            }
            Problem::Geometry(g) => Check::that(g.samples > 0, "problem.samples", "must be at least 1"),
            Problem::Wiener(w) => {
                Check::point(&w.x0, "problem.x0")?;
                Check::that(w.sigma > 1.0, "problem.sigma", "must exceed 1")?;
                Check::positive(w.r0, "problem.r0")?;
                Check::that(w.scales > 0, "problem.scales", "must be at least 1")?;
                Check::that(w.resolution >= 4, "problem.resolution", "must be at least 4")?;
                Check::that(w.weight_exponent.is_finite(), "problem.weight_exponent", "must be finite")?;
                let pol = &w.policy;
                Check::that(pol.rho_max > 0.0 && pol.rho_max < 1.0, "problem.policy.rho_max", "must lie in (0, 1)")?;
                Check::positive(pol.eps_tail, "problem.policy.eps_tail")?;
                Check::positive(pol.tau_floor, "problem.policy.tau_floor")?;
                Check::that(pol.k > 0, "problem.policy.k", "must be at least 1")
            }
            Problem::Shrink(s) => {
                Check::point(&s.x0, "problem.x0")?;
                Check::positive(s.domain_radius, "problem.domain_radius")?;
                Check::that(
                    !s.radii.is_empty()
                        && s.radii.iter().all(|&r| r > 0.0 && r < s.domain_radius)
                        && s.radii.windows(2).all(|w| w[1] < w[0]),
                    "problem.radii",
                    "must be a nonempty, strictly decreasing list inside (0, domain_radius)",
                )
            }
            Problem::WeakCartan(c) => {
                Check::point(&c.x0, "problem.x0")?;
                Check::positive(c.r, "problem.r")?;
                Check::that(c.sigma > 1.0, "problem.sigma", "must exceed 1")?;
                Check::that(c.resolution >= 4, "problem.resolution", "must be at least 4")?;
                Check::that(c.level_tol >= 0.0 && c.level_tol < 1.0, "problem.level_tol", "must lie in [0, 1)")?;
                Check::that(c.margin >= 0.0 && c.margin < 1.0, "problem.margin", "must lie in [0, 1)")
            }
            Problem::Bounds(c) => {
                Check::point(&c.x0, "problem.x0")?;
                Check::positive(c.r, "problem.r")?;
                Check::that(c.sigma > 1.0, "problem.sigma", "must exceed 1")?;
                Check::that(c.scales > 0, "problem.scales", "must be at least 1")?;
                Check::that(c.resolution >= 4, "problem.resolution", "must be at least 4")?;
                if let Some(cp) = c.c_prime {
                    Check::positive(cp, "problem.c_prime")?;
                }
                Check::that(
                    (0.0..=1.0).contains(&c.max_removed_fraction),
                    "problem.max_removed_fraction",
                    "must lie in [0, 1]",
                )
            }
            Problem::Boundary(c) => {
                Check::point(&c.center, "problem.center")?;
                Check::positive(c.radius, "problem.radius")?;
                Check::that(c.outer_radius > c.radius, "problem.outer_radius", "must exceed radius")?;
                if let Some(oc) = &c.outer_center {
                    Check::point(oc, "problem.outer_center")?;
                }
                Check::that(c.resolution >= 4, "problem.resolution", "must be at least 4")?;
                Check::that(c.relaxation >= 1.0, "problem.relaxation", "must be at least 1")
            }
            Problem::StrongCartan(c) => {
                Check::point(&c.x0, "problem.x0")?;
                Check::positive(c.r, "problem.r")?;
                Check::that(c.levels > 0, "problem.levels", "must be at least 1")?;
                Check::that(c.resolution >= 4, "problem.resolution", "must be at least 4")?;
                Check::that(c.radius_step > 0.0 && c.radius_step < 1.0, "problem.radius_step", "must lie in (0, 1)")
            }
            Problem::Harnack(c) => {
                Check::point(&c.center, "problem.center")?;
                Check::positive(c.radius, "problem.radius")?;
                Check::positive(c.q, "problem.q")?;
                Check::that(c.samples > 0, "problem.samples", "must be at least 1")?;
                Check::that(c.domain_factor >= 2.0, "problem.domain_factor", "must be at least 2")
            }
        }
    }

    /// The configuration as echoed into the manifest.
    pub fn echo(&self) -> serde_json::Value {
        crate::export::to_value(self)
    }
}

fn validate_space(space: &SpaceConfig) -> Result<(), RunError> {
    match space {
        SpaceConfig::Grid { lo, hi, h, node_cap, .. } => {
            Check::point(lo, "space.lo")?;
            Check::that(hi.len() == lo.len(), "space.hi", "must have as many entries as space.lo")?;
            Check::that(lo.iter().zip(hi).all(|(a, b)| a < b), "space.hi", "must exceed space.lo on every axis")?;
            Check::positive(*h, "space.h")?;
            Check::that(*node_cap > 0, "space.node_cap", "must be at least 1")
        }
        SpaceConfig::Radial { n, rmin, rmax, h, node_cap, .. } => {
            Check::that(*n >= 1, "space.n", "must be at least 1")?;
            Check::that(*rmin >= 0.0, "space.rmin", "must be nonnegative")?;
            Check::that(rmax > rmin, "space.rmax", "must exceed space.rmin")?;
            Check::positive(*h, "space.h")?;
            Check::that(*node_cap > 0, "space.node_cap", "must be at least 1")
        }
        SpaceConfig::File { .. } => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn err_path(text: &str) -> String {
        match ScenarioConfig::from_toml(text).unwrap_err() {
            RunError::Config { path, .. } => path,
            other => panic!("unexpected {other}"),
        }
    }

    const WIENER: &str = "[problem]\noperation = \"wiener\"\nset = \"cusp\"\np = 2.0\n";

    #[test]
    fn defaults_fill_in() {
        let cfg = ScenarioConfig::from_toml(WIENER).unwrap();
        let Problem::Wiener(w) = &cfg.problem else { panic!() };
        assert_eq!(w.sigma, 8.0);
        assert_eq!(w.scales, 12);
        assert_eq!(w.solver.tol, 1e-8);
        assert_eq!(w.policy.policy(), ClassifyPolicy::default());
        assert_eq!(w.set.0, AnalyticSet::exponential_cusp());
        assert_eq!(cfg.output.formats, vec![Format::Json, Format::Csv]);
    }

    #[test]
    fn small_p_names_the_key() {
        assert_eq!(err_path(&WIENER.replace("2.0", "0.5")), "problem.p");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ScenarioConfig::from_toml(&format!("bogus = 1\n{WIENER}")).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
        let err = ScenarioConfig::from_toml(&format!("{WIENER}[problem.solver]\ntol = 1e-6\nsteps = 3\n")).unwrap_err();
        assert!(err.to_string().contains("steps"), "{err}");
        let err = ScenarioConfig::from_toml(&format!("{WIENER}[output]\nformat = []\n")).unwrap_err();
        assert_eq!(err_path(&format!("{WIENER}[output]\nformat = []\n")), "output.format");
        assert!(err.to_string().contains("format"));
    }

    #[test]
    fn nested_paths_are_reported() {
        assert_eq!(err_path(&format!("{WIENER}[problem.solver]\ntol = 2.0\n")), "problem.solver.tol");
        assert_eq!(err_path("seed = \"x\"\n[problem]\noperation = \"geometry\"\n"), "seed");
        assert_eq!(
            err_path(
                "[space]\nbuilder = \"grid\"\nlo = [0.0]\nhi = [1.0]\nh = -1.0\n[problem]\noperation = \"geometry\"\n"
            ),
            "space.h"
        );
    }

    #[test]
    fn space_is_required_where_used() {
        assert_eq!(err_path("[problem]\noperation = \"geometry\"\n"), "space");
    }

    #[test]
    fn descriptor_tables_and_shortcuts_agree() {
        let a = parse_descriptor("sector:0.5").unwrap();
        let b = parse_descriptor(r#"{"kind": "sector", "apex": [0.0, 0.0], "start": 0.0, "angle": 0.5}"#).unwrap();
        assert_eq!(a, b);
        let text = "[problem]\noperation = \"wiener\"\np = 2.0\nset = { kind = \"sector\", apex = [0.0, 0.0], start = 0.0, angle = 0.5 }\n";
        let Problem::Wiener(w) = ScenarioConfig::from_toml(text).unwrap().problem else { panic!() };
        assert_eq!(w.set.0, a);
        assert_eq!(
            parse_descriptor("ball:0.5,0,0.25").unwrap(),
            AnalyticSet::Ball { center: vec![0.5, 0.0], radius: 0.25, closed: true }
        );
        assert!(parse_descriptor("sector").is_err());
        assert!(
            parse_descriptor(r#"{"kind": "sector", "apex": [0.0, 0.0], "start": 0.0, "angle": 0.5, "x": 1}"#).is_err()
        );
    }

    #[test]
    fn echo_omits_output_dir_and_round_trips() {
        let mut cfg = ScenarioConfig::from_toml(WIENER).unwrap();
        cfg.output.dir = Some("somewhere".into());
        let echo = cfg.echo();
        assert!(echo["output"].get("dir").is_none());
        let back: ScenarioConfig = serde_json::from_value(echo).unwrap();
        assert_eq!(back.problem, cfg.problem);
    }
}
