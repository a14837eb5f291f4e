use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use finelab::config::{parse_descriptor, ScenarioConfig};
use finelab::spacefile;
use finelab::{run_scenario, RunError};
use serde_json::{json, Map, Value};

/// Discrete nonlinear potential theory: capacities, Wiener sums and Cartan
/// constructions on weighted graphs.
///
/// FINELAB_THREADS caps the worker threads; results do not depend on it.
#[derive(Parser)]
#[command(name = "finelab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build, load or check space files.
    #[command(subcommand)]
    Space(SpaceCommand),
    /// Capacity of a set (variational, or Sobolev with --sobolev).
    Cap(CapArgs),
    /// Capacitary potential of a set in a domain.
    Potential(PotentialArgs),
    /// Wiener terms and thin/thick classification at a point.
    Wiener(WienerArgs),
    /// Weak and strong Cartan constructions and their estimates.
    #[command(subcommand)]
    Cartan(CartanCommand),
    /// Empirical checks of analytic inequalities.
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// Run a scenario from a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum SpaceCommand {
    /// Build a grid or radial space and write it in the space file format.
    Build {
        #[command(flatten)]
        grid: GridArgs,
        /// Radial path `n,rmin,rmax` instead of a grid.
        #[arg(long, value_delimiter = ',')]
        radial: Option<Vec<f64>>,
        /// Output file; stdout when absent.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Parse a space file and print a summary.
    Load { file: PathBuf },
    /// Geometry spot checks (doubling, Poincaré) on a space file.
    Check {
        file: PathBuf,
        #[arg(long, default_value_t = 64)]
        samples: usize,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum CartanCommand {
    /// Weak Cartan certificate.
    Weak(WeakArgs),
    /// Product bounds and Wolff estimate for the potential at x0.
    Bounds(BoundsArgs),
    /// Boundary estimate constants for a set in a ball.
    Boundary(BoundaryArgs),
    /// Strong Cartan construction at positive capacity.
    Strong(StrongArgs),
}

#[derive(Subcommand)]
enum VerifyCommand {
    /// Weak Harnack quotients over a function family.
    Harnack(HarnackArgs),
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Solver KKT tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Comma-separated subset of json,csv.
    #[arg(long, value_delimiter = ',')]
    formats: Option<Vec<String>>,
}

#[derive(Args)]
struct GridArgs {
    /// Lower corner, comma-separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    lo: Option<Vec<f64>>,
    /// Upper corner, comma-separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    hi: Option<Vec<f64>>,
    #[arg(long)]
    h: Option<f64>,
    /// Exponent of the |x|^alpha density.
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
}

#[derive(Args)]
struct SpaceArgs {
    /// Space file; when absent a grid is built from --lo/--hi/--h
    /// (default [-1,1]^2 with h = 1/32).
    #[arg(long, conflicts_with_all = ["lo", "hi", "h", "alpha"])]
    space: Option<PathBuf>,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Args)]
struct CapArgs {
    /// Set descriptor (JSON, @file.json, or a shortcut such as `ball:0,0,0.25`).
    #[arg(long)]
    set: String,
    #[arg(long)]
    domain: Option<String>,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    sobolev: bool,
    #[command(flatten)]
    space: SpaceArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct PotentialArgs {
    #[arg(long)]
    set: String,
    #[arg(long)]
    domain: String,
    #[arg(long)]
    p: f64,
    #[command(flatten)]
    space: SpaceArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct WienerArgs {
    #[arg(long)]
    set: String,
    #[arg(long)]
    p: f64,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Option<Vec<f64>>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    r0: Option<f64>,
    #[arg(long)]
    scales: Option<usize>,
    #[arg(long)]
    resolution: Option<usize>,
    /// One global grid instead of rescaled unit grids.
    #[arg(long)]
    global: bool,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, ValueEnum)]
enum Expect {
    Thin,
    Thick,
    Inconclusive,
}

#[derive(Args)]
struct WeakArgs {
    #[arg(long)]
    set: String,
    #[arg(long)]
    p: f64,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Option<Vec<f64>>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    level_tol: Option<f64>,
    #[arg(long)]
    expect: Option<Expect>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    set: String,
    #[arg(long)]
    p: f64,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Option<Vec<f64>>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    scales: Option<usize>,
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    c_prime: Option<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct BoundaryArgs {
    #[arg(long)]
    set: String,
    #[arg(long)]
    p: f64,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    center: Option<Vec<f64>>,
    #[arg(long)]
    radius: f64,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    outer_center: Option<Vec<f64>>,
    #[arg(long)]
    outer_radius: f64,
    #[arg(long)]
    resolution: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct StrongArgs {
    #[arg(long)]
    set: String,
    #[arg(long)]
    p: f64,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Option<Vec<f64>>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    radius_step: Option<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct HarnackArgs {
    /// `constant:<v>`, `harmonic`, or `potential:<disk_radius>,<distance>`.
    #[arg(long)]
    family: String,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    center: Vec<f64>,
    #[arg(long)]
    radius: f64,
    #[arg(long)]
    q: f64,
    #[arg(long)]
    p: f64,
    #[arg(long, value_parser = ["sub", "super"])]
    form: String,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    domain_factor: Option<f64>,
    #[command(flatten)]
    space: SpaceArgs,
    #[command(flatten)]
    common: Common,
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| format!("invalid number `{t}`"))).collect()
}

/// JSON object builder that skips absent options, so the config defaults
/// apply exactly as they do for TOML input.
#[derive(Default)]
struct Obj(Map<String, Value>);

impl Obj {
    fn set(mut self, key: &str, v: impl Into<Value>) -> Self {
        self.0.insert(key.into(), v.into());
        self
    }

    fn opt<T: Into<Value>>(self, key: &str, v: Option<T>) -> Self {
        match v {
            Some(v) => self.set(key, v),
            None => self,
        }
    }

    fn descriptor(self, key: &str, s: &str) -> Result<Self, RunError> {
        let d = parse_descriptor(s).map_err(|m| RunError::config(format!("problem.{key}"), m))?;
        Ok(self.set(key, serde_json::to_value(d).expect("descriptors serialize")))
    }

    fn done(self) -> Value {
        Value::Object(self.0)
    }
}

fn space_section(args: &SpaceArgs) -> Value {
    match &args.space {
        Some(path) => json!({"builder": "file", "path": path}),
        None => grid_section(&args.grid),
    }
}

fn grid_section(g: &GridArgs) -> Value {
    Obj::default()
        .set("builder", "grid")
        .set("lo", g.lo.clone().unwrap_or_else(|| vec![-1.0, -1.0]))
        .set("hi", g.hi.clone().unwrap_or_else(|| vec![1.0, 1.0]))
        .set("h", g.h.unwrap_or(1.0 / 32.0))
        .opt("weight_exponent", g.alpha)
        .done()
}

fn solver_section(common: &Common) -> Value {
    Obj::default().opt("tol", common.tol).done()
}

/// Assembles and runs a scenario from command line pieces.
fn run_parts(space: Option<Value>, problem: Value, common: &Common) -> Result<PathBuf, RunError> {
    let mut root = Obj::default().opt("seed", common.seed).set("problem", problem);
    if let Some(s) = space {
        root = root.set("space", s);
    }
    if let Some(f) = &common.formats {
        root = root.set("output", json!({ "formats": f }));
    }
    let cfg: ScenarioConfig = serde_path_to_error::deserialize(root.done()).map_err(|e| {
        let path = e.path().to_string();
        RunError::config(path, e.into_inner().to_string())
    })?;
    run_config(&cfg, &common.out)
}

fn run_config(cfg: &ScenarioConfig, out: &Path) -> Result<PathBuf, RunError> {
    let manifest = run_scenario(cfg, out)?;
    for f in &manifest.files {
        println!("{}  {}", f.sha256, out.join(&f.path).display());
    }
    Ok(out.join("manifest.json"))
}

fn harnack_family(s: &str) -> Result<Value, RunError> {
    let bad = |m: String| RunError::config("problem.family", m);
    let (name, args) = s.split_once(':').unwrap_or((s, ""));
    match name {
        "harmonic" => Ok(json!({"kind": "harmonic"})),
        "constant" => {
            let v = parse_list(args).map_err(bad)?;
            Ok(json!({"kind": "constant", "value": v.first().copied().unwrap_or(1.0)}))
        }
        "potential" => match parse_list(args).map_err(bad)?.as_slice() {
            [r, d] => Ok(json!({"kind": "capacitary_potential", "disk_radius": r, "distance": d})),
            _ => Err(bad("potential takes <disk_radius>,<distance>".into())),
        },
        other => Err(bad(format!("unknown family `{other}`"))),
    }
}

fn dispatch(cli: Cli) -> Result<(), RunError> {
    match cli.command {
        Command::Space(SpaceCommand::Build { grid, radial, output }) => {
            let section = match radial {
                Some(r) => {
                    let [n, rmin, rmax] = r[..] else {
                        return Err(RunError::config("radial", "takes n,rmin,rmax"));
                    };
                    Obj::default()
                        .set("builder", "radial")
                        .set("n", n as usize)
                        .set("rmin", rmin)
                        .set("rmax", rmax)
                        .set("h", grid.h.unwrap_or(1.0 / 256.0))
                        .opt("weight_exponent", grid.alpha)
                        .done()
                }
                None => grid_section(&grid),
            };
            let cfg: finelab::config::SpaceConfig =
                serde_json::from_value(section).map_err(|e| RunError::config("space", e.to_string()))?;
            let space = finelab::runner::build_space(&cfg)?;
            let text = spacefile::write_space(&space);
            match output {
                Some(path) => finelab::export::write_file(&path, text.as_bytes())?,
                None => print!("{text}"),
            }
            Ok(())
        }
        Command::Space(SpaceCommand::Load { file }) => {
            let s = spacefile::load_space(&file)?;
            let summary = json!({
                "nodes": s.len(),
                "edges": s.edges().len(),
                "dim": s.dim(),
                "positions": s.has_positions(),
                "total_measure": s.total_measure(),
                "meta": s.meta(),
            });
            println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
            Ok(())
        }
        Command::Space(SpaceCommand::Check { file, samples, p, common }) => {
            let space = json!({"builder": "file", "path": file});
            let problem = json!({"operation": "geometry", "samples": samples, "p": p});
            run_parts(Some(space), problem, &common).map(|_| ())
        }
        Command::Cap(a) => {
            let mut problem = Obj::default()
                .set("operation", "capacity")
                .descriptor("set", &a.set)?
                .set("p", a.p)
                .set("kind", if a.sobolev { "sobolev" } else { "variational" })
                .set("solver", solver_section(&a.common));
            if let Some(d) = &a.domain {
                problem = problem.descriptor("domain", d)?;
            }
            run_parts(Some(space_section(&a.space)), problem.done(), &a.common).map(|_| ())
        }
        Command::Potential(a) => {
            let problem = Obj::default()
                .set("operation", "potential")
                .descriptor("set", &a.set)?
                .descriptor("domain", &a.domain)?
                .set("p", a.p)
                .set("solver", solver_section(&a.common))
                .done();
            run_parts(Some(space_section(&a.space)), problem, &a.common).map(|_| ())
        }
        Command::Wiener(a) => {
            let problem = Obj::default()
                .set("operation", "wiener")
                .descriptor("set", &a.set)?
                .set("p", a.p)
                .opt("x0", a.x0)
                .opt("sigma", a.sigma)
                .opt("r0", a.r0)
                .opt("scales", a.scales)
                .opt("resolution", a.resolution)
                .set("mode", if a.global { "global" } else { "rescaled" })
                .opt("weight_exponent", a.alpha)
                .set("solver", solver_section(&a.common))
                .done();
            run_parts(None, problem, &a.common).map(|_| ())
        }
        Command::Cartan(CartanCommand::Weak(a)) => {
            let expect = a.expect.map(|e| match e {
                Expect::Thin => "thin",
                Expect::Thick => "thick",
                Expect::Inconclusive => "inconclusive",
            });
            let problem = Obj::default()
                .set("operation", "weak_cartan")
                .descriptor("set", &a.set)?
                .set("p", a.p)
                .opt("x0", a.x0)
                .opt("r", a.r)
                .opt("sigma", a.sigma)
                .opt("resolution", a.resolution)
                .opt("level_tol", a.level_tol)
                .opt("expect", expect)
                .set("solver", solver_section(&a.common))
                .done();
            run_parts(None, problem, &a.common).map(|_| ())
        }
        Command::Cartan(CartanCommand::Bounds(a)) => {
            let problem = Obj::default()
                .set("operation", "bounds")
                .descriptor("set", &a.set)?
                .set("p", a.p)
                .opt("x0", a.x0)
                .opt("r", a.r)
                .opt("sigma", a.sigma)
                .opt("scales", a.scales)
                .opt("resolution", a.resolution)
                .opt("c_prime", a.c_prime)
                .set("solver", solver_section(&a.common))
                .done();
            run_parts(None, problem, &a.common).map(|_| ())
        }
        Command::Cartan(CartanCommand::Boundary(a)) => {
            let problem = Obj::default()
                .set("operation", "boundary")
                .descriptor("set", &a.set)?
                .set("p", a.p)
                .opt("center", a.center)
                .set("radius", a.radius)
                .opt("outer_center", a.outer_center)
                .set("outer_radius", a.outer_radius)
                .opt("resolution", a.resolution)
                .set("solver", solver_section(&a.common))
                .done();
            run_parts(None, problem, &a.common).map(|_| ())
        }
        Command::Cartan(CartanCommand::Strong(a)) => {
            let problem = Obj::default()
                .set("operation", "strong_cartan")
                .descriptor("set", &a.set)?
                .set("p", a.p)
                .opt("x0", a.x0)
                .opt("r", a.r)
                .opt("levels", a.levels)
                .opt("resolution", a.resolution)
                .opt("radius_step", a.radius_step)
                .set("solver", solver_section(&a.common))
                .done();
            run_parts(None, problem, &a.common).map(|_| ())
        }
        Command::Verify(VerifyCommand::Harnack(a)) => {
            let problem = Obj::default()
                .set("operation", "harnack")
                .set("family", harnack_family(&a.family)?)
                .set("center", a.center)
                .set("radius", a.radius)
                .set("q", a.q)
                .set("p", a.p)
                .set("form", a.form)
                .opt("samples", a.samples)
                .opt("domain_factor", a.domain_factor)
                .set("solver", solver_section(&a.common))
                .done();
            run_parts(Some(space_section(&a.space)), problem, &a.common).map(|_| ())
        }
        Command::Run { config, out } => {
            let cfg = ScenarioConfig::load(&config)?;
            let dir = finelab::runner::output_dir(&cfg, out.as_deref());
            run_config(&cfg, &dir).map(|_| ())
        }
    }
}

/// Sizes the global rayon pool from FINELAB_THREADS.
fn init_threads() -> Result<(), RunError> {
    let Ok(v) = std::env::var("FINELAB_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| RunError::config("FINELAB_THREADS", format!("expected a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| RunError::config("FINELAB_THREADS", e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match init_threads().and_then(|()| dispatch(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
