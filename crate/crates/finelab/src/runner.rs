//! Executes a scenario: builds the space, runs one operation, writes the
//! artifacts and a manifest.
//!
//! `manifest.json` holds only deterministic content (config echo, defaults,
//! stage list, file inventory with SHA-256), so reruns produce identical
//! bytes. Wall-clock times per stage go to `timings.json`, which is left out
//! of the inventory.

use std::path::{Path, PathBuf};
use std::time::Instant;

use finelab_core::capacity::{
    annulus_monotonicity_check, capacitary_potential, capacity_comparison_check, sobolev_capacity, variational_capacity,
};
use finelab_core::cartan::{
    boundary_estimate_check, harnack_check, potential_product_bounds, strong_cartan_positive_cap, weak_cartan,
    BoundaryConfig, BoundsConfig, CartanConfig, StrongCartanConfig,
};
use finelab_core::fine::{capacity_shrink_profile, classify_thin, wiener_terms, WienerConfig};
use finelab_core::space::{build_grid, build_radial, geometry_report, region_from_descriptor, GridSpec, RadialSpec};
use finelab_core::{AnalyticSet, Ball, Region, WeightedGraphSpace};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{CapacityKind, Defaults, Format, Problem, ScenarioConfig, SpaceConfig, DEFAULTS};
use crate::error::{AtStage, RunError, Stage};
use crate::export;
use crate::spacefile;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileRecord {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub operation: &'static str,
    pub config: serde_json::Value,
    pub defaults: Defaults,
    pub stages: Vec<&'static str>,
    pub files: Vec<FileRecord>,
    pub timings: &'static str,
}

#[derive(Debug, Clone, Serialize)]
struct Timing {
    stage: &'static str,
    seconds: f64,
}

struct Artifact {
    name: String,
    format: Format,
    bytes: Vec<u8>,
}

/// Collects the outputs of a run in the order they are produced.
struct Outputs {
    ids: Vec<u64>,
    artifacts: Vec<Artifact>,
}

impl Outputs {
    fn json<T: Serialize>(&mut self, name: &str, value: &T) {
        self.artifacts.push(Artifact { name: name.into(), format: Format::Json, bytes: export::json_bytes(value) });
    }

    fn csv(&mut self, name: &str, bytes: Vec<u8>) {
        self.artifacts.push(Artifact { name: name.into(), format: Format::Csv, bytes });
    }

    fn field(&mut self, name: &str, values: &[f64]) {
        let bytes = export::field_csv(&self.ids, values);
        self.csv(name, bytes);
    }

    /// JSON report with its scalar fields split off into `<key>.csv`.
    fn report_with_fields<T: Serialize>(&mut self, name: &str, value: &T, fields: &[&str]) {
        let mut v = export::to_value(value);
        let taken = export::take_arrays(&mut v, fields);
        self.json(name, &v);
        for (key, values) in taken {
            self.field(&format!("{key}.csv"), &values);
        }
    }
}

pub fn build_space(cfg: &SpaceConfig) -> Result<WeightedGraphSpace, RunError> {
    match cfg {
        SpaceConfig::Grid { lo, hi, h, weight_exponent, node_cap } => build_grid(&GridSpec {
            dim: lo.len(),
            lo: lo.clone(),
            hi: hi.clone(),
            h: *h,
            weight_exponent: *weight_exponent,
            node_cap: *node_cap,
        })
        .at(Stage::Space),
        SpaceConfig::Radial { n, rmin, rmax, h, weight_exponent, node_cap } => build_radial(&RadialSpec {
            n: *n,
            rmin: *rmin,
            rmax: *rmax,
            h: *h,
            weight_exponent: *weight_exponent,
            node_cap: *node_cap,
        })
        .at(Stage::Space),
        SpaceConfig::File { path } => Ok(spacefile::load_space(path)?),
    }
}

fn region(space: &WeightedGraphSpace, d: &AnalyticSet) -> Result<Region, RunError> {
    region_from_descriptor(space, d).at(Stage::Space)
}

fn ball_at(space: &WeightedGraphSpace, center: &[f64], radius: f64) -> Result<Ball, RunError> {
    let c = space.nearest_node(center).at(Stage::Space)?;
    Ok(Ball::open(c, radius))
}

#[derive(Serialize)]
struct CapacityJson<'a> {
    kind: CapacityKind,
    value: f64,
    lp_term: f64,
    energy_term: f64,
    diagnostics: &'a finelab_core::capacity::Diagnostics,
}

#[derive(Serialize)]
struct PotentialJson<'a> {
    energy: f64,
    kkt_residual: f64,
    iterations: usize,
    converged: bool,
    active_set: &'a Region,
}

#[derive(Serialize)]
struct WienerJson<'a> {
    report: &'a finelab_core::WienerReport,
    sum: f64,
    classification: &'a finelab_core::Classification,
}

#[derive(Serialize)]
struct ShrinkJson<'a> {
    x0: &'a [f64],
    domain_radius: f64,
    profile: &'a [finelab_core::fine::ShrinkPoint],
}

fn execute(cfg: &ScenarioConfig, out: &mut Outputs, timings: &mut Vec<Timing>) -> Result<Vec<&'static str>, RunError> {
    let mut stages = vec!["config"];
    let mut clock = Instant::now();
    let mut lap = |name: &'static str, stages: &mut Vec<&'static str>, timings: &mut Vec<Timing>| {
        stages.push(name);
        timings.push(Timing { stage: name, seconds: clock.elapsed().as_secs_f64() });
        clock = Instant::now();
    };
    let space = match (&cfg.space, cfg.problem.needs_space()) {
        (Some(s), true) => {
            let space = build_space(s)?;
            out.ids = space.ids().to_vec();
            lap("space", &mut stages, timings);
            Some(space)
        }
        _ => None,
    };
    let space = || space.as_ref().expect("validated: operation has a space");
    match &cfg.problem {
        Problem::Capacity(c) => {
            let s = space();
            let e = region(s, &c.set.0)?;
            let opts = c.solver.options();
            let r = match c.kind {
                CapacityKind::Sobolev => sobolev_capacity(s, &e, c.p, &opts),
                CapacityKind::Variational => {
                    let a = region(s, &c.domain.as_ref().expect("validated").0)?;
                    variational_capacity(s, &e, &a, c.p, &opts)
                }
            }
            .at(Stage::Capacity)?;
            lap("capacity", &mut stages, timings);
            out.json(
                "capacity.json",
                &CapacityJson {
                    kind: c.kind,
                    value: r.value,
                    lp_term: r.lp_term,
                    energy_term: r.energy_term,
                    diagnostics: &r.diagnostics,
                },
            );
            out.field("minimizer.csv", r.minimizer.values());
        }
        Problem::Potential(c) => {
            let s = space();
            let e = region(s, &c.set.0)?;
            let b = region(s, &c.domain.0)?;
            let r = capacitary_potential(s, &e, &b, c.p, &c.solver.options()).at(Stage::Capacity)?;
            lap("capacity", &mut stages, timings);
            out.json(
                "potential.json",
                &PotentialJson {
                    energy: r.energy,
                    kkt_residual: r.kkt_residual,
                    iterations: r.iterations,
                    converged: r.converged,
                    active_set: &r.active_set,
                },
            );
            out.field("field.csv", r.field.values());
        }
        Problem::Comparison(c) => {
            let s = space();
            let e = region(s, &c.set.0)?;
            let ball = ball_at(s, &c.center, c.radius)?;
            let r = capacity_comparison_check(s, &e, &ball, c.p, &c.solver.options()).at(Stage::Capacity)?;
            lap("capacity", &mut stages, timings);
            out.json("comparison.json", &r);
        }
        Problem::Annulus(c) => {
            let s = space();
            let e = region(s, &c.set.0)?;
            let ball = ball_at(s, &c.center, c.radius)?;
            let r =
                annulus_monotonicity_check(s, &e, &ball, c.t, c.tau, c.p, &c.solver.options()).at(Stage::Capacity)?;
            lap("capacity", &mut stages, timings);
            out.json("annulus.json", &r);
        }
        Problem::Geometry(g) => {
            let r = geometry_report(space(), g.samples, cfg.seed, g.p).at(Stage::Space)?;
            lap("geometry", &mut stages, timings);
            out.json("geometry.json", &r);
        }
        Problem::Wiener(w) => {
            let wc = WienerConfig {
                x0: w.x0.clone(),
                sigma: w.sigma,
                r0: w.r0,
                scales: w.scales,
                p: w.p,
                resolution: w.resolution,
                mode: w.mode,
                weight_exponent: w.weight_exponent,
                solver: w.solver.options(),
            };
            let report = wiener_terms(&w.set.0, &wc).at(Stage::Fine)?;
            let class = classify_thin(&report, &w.policy.policy()).at(Stage::Fine)?;
            lap("fine", &mut stages, timings);
            out.json("wiener.json", &WienerJson { report: &report, sum: report.sum(), classification: &class });
            out.csv("terms.csv", export::terms_csv(&report.terms));
        }
        Problem::Shrink(c) => {
            let s = space();
            let e = region(s, &c.set.0)?;
            let ball = AnalyticSet::Ball { center: c.x0.clone(), radius: c.domain_radius, closed: false };
            let b = region(s, &ball)?;
            let profile =
                capacity_shrink_profile(s, &e, &c.x0, &b, &c.radii, c.p, &c.solver.options()).at(Stage::Fine)?;
            lap("fine", &mut stages, timings);
            out.json("shrink.json", &ShrinkJson { x0: &c.x0, domain_radius: c.domain_radius, profile: &profile });
            out.csv("shrink.csv", export::shrink_csv(&profile));
        }
        Problem::WeakCartan(c) => {
            let cc = CartanConfig {
                x0: c.x0.clone(),
                r: c.r,
                sigma: c.sigma,
                p: c.p,
                resolution: c.resolution,
                level_tol: c.level_tol,
                margin: c.margin,
                solver: c.solver.options(),
            };
            let cert = weak_cartan(&c.set.0, &cc, c.expect.map(Into::into)).at(Stage::Cartan)?;
            lap("cartan", &mut stages, timings);
            out.ids = (0..cert.u.len() as u64).collect();
            out.report_with_fields("weak_cartan.json", &cert, &["u", "u_prime", "v"]);
        }
        Problem::Bounds(c) => {
            let bc = BoundsConfig {
                x0: c.x0.clone(),
                r: c.r,
                sigma: c.sigma,
                p: c.p,
                scales: c.scales,
                resolution: c.resolution,
                c_prime: c.c_prime,
                max_removed_fraction: c.max_removed_fraction,
                solver: c.solver.options(),
            };
            let r = potential_product_bounds(&c.set.0, &bc).at(Stage::Cartan)?;
            lap("cartan", &mut stages, timings);
            out.json("bounds.json", &r);
        }
        Problem::Boundary(c) => {
            let bc = BoundaryConfig {
                center: c.center.clone(),
                radius: c.radius,
                outer_center: c.outer_center.clone().unwrap_or_else(|| c.center.clone()),
                outer_radius: c.outer_radius,
                p: c.p,
                resolution: c.resolution,
                relaxation: c.relaxation,
                solver: c.solver.options(),
            };
            let r = boundary_estimate_check(&c.set.0, &bc).at(Stage::Cartan)?;
            lap("cartan", &mut stages, timings);
            out.json("boundary.json", &r);
        }
        Problem::StrongCartan(c) => {
            let sc = StrongCartanConfig {
                x0: c.x0.clone(),
                r: c.r,
                p: c.p,
                levels: c.levels,
                resolution: c.resolution,
                radius_step: c.radius_step,
                solver: c.solver.options(),
            };
            let r = strong_cartan_positive_cap(&c.set.0, &sc).at(Stage::Cartan)?;
            lap("cartan", &mut stages, timings);
            out.ids = (0..r.u.len() as u64).collect();
            out.report_with_fields("strong_cartan.json", &r, &["v", "u"]);
            out.csv("shrink.csv", export::shrink_csv(&r.profile));
        }
        Problem::Harnack(c) => {
            let s = space();
            let ball = ball_at(s, &c.center, c.radius)?;
            let r = harnack_check(
                s,
                &c.family,
                &ball,
                c.q,
                c.p,
                c.form,
                c.samples,
                cfg.seed,
                c.domain_factor,
                &c.solver.options(),
            )
            .at(Stage::Cartan)?;
            lap("cartan", &mut stages, timings);
            out.json("harnack.json", &r);
        }
    }
    Ok(stages)
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Runs `cfg` and writes everything under `dir`. Returns the manifest, which
/// is also written to `dir/manifest.json`.
pub fn run_scenario(cfg: &ScenarioConfig, dir: &Path) -> Result<RunManifest, RunError> {
    cfg.validate()?;
    let mut out = Outputs { ids: Vec::new(), artifacts: Vec::new() };
    let mut timings = Vec::new();
    let stages = execute(cfg, &mut out, &mut timings)?;
    std::fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))?;
    let mut files = Vec::new();
    for a in out.artifacts.iter().filter(|a| cfg.output.formats.contains(&a.format)) {
        export::write_file(&dir.join(&a.name), &a.bytes)?;
        files.push(FileRecord { path: a.name.clone(), bytes: a.bytes.len() as u64, sha256: sha256_hex(&a.bytes) });
    }
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        operation: cfg.problem.operation(),
        config: cfg.echo(),
        defaults: DEFAULTS,
        stages,
        files,
        timings: "timings.json",
    };
    export::write_file(&dir.join("manifest.json"), &export::json_bytes(&manifest))?;
    export::write_file(&dir.join("timings.json"), &export::json_bytes(&timings))?;
    Ok(manifest)
}

/// Output directory: the explicit one, else `output.dir`, else `./out`.
pub fn output_dir(cfg: &ScenarioConfig, explicit: Option<&Path>) -> PathBuf {
    explicit.map(Path::to_path_buf).or_else(|| cfg.output.dir.clone()).unwrap_or_else(|| PathBuf::from("out"))
}
