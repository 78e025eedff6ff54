//! Command-line front end: sorting sequence files, simulations, root
//! processes, manifest-driven experiments and SVG rendering.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 a declared tolerance
//! failed.

pub mod input;
pub mod render;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use hammersley_trees::distributions::{sample_homogeneous, sample_marked_ppp, Rect, SinkIntensity};
use hammersley_trees::experiments::{self, manifest::Manifest, EstimateReport, Exec};
use hammersley_trees::hammersley_process::{simulate, Horizon, Source, SourcesSinks};
use hammersley_trees::rng::{tag, RandomStream};
use hammersley_trees::root_process::{evolve, RootConfiguration, RootSource};
use hammersley_trees::{Distribution64, Record64, SortState64};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAIL: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Svg,
}

/// Parsed command line; echoed into the run sidecar of every report.
#[derive(Debug, Clone, Parser, Serialize)]
#[command(name = "hammersley", version, about = "Heap sorting and Hammersley tree processes")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
    /// Master seed; drawn from entropy and printed when omitted.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "lowercase")]
pub enum Command {
    /// Sorts a `label[,lives]` file into heaps and prints the root count.
    Sort {
        input: Option<PathBuf>,
        /// Lives for lines without them (and for generated sequences).
        #[arg(long)]
        dist: Option<String>,
        /// Sort `n` uniform labels instead of reading a file.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Simulates the particle process on `[0, width] x (0, t]`.
    Simulate {
        #[arg(long)]
        dist: Option<String>,
        /// Geometric lives with this parameter (alternative to --dist).
        #[arg(long)]
        alpha: Option<f64>,
        /// Source intensity; with geometric lives also adds stationary sinks.
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 1.0)]
        width: f64,
    },
    /// Runs the root process over `[-width, 0) x (0, t]`.
    Roots {
        #[arg(long)]
        dist: Option<String>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 1.0)]
        width: f64,
    },
    /// Runs an experiment from a manifest or by name with default parameters.
    Experiment {
        name: Option<String>,
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        dist: Option<String>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        replicas: Option<u64>,
        /// Print the default parameters instead of running.
        #[arg(long)]
        defaults: bool,
    },
    /// Renders a record JSON file to SVG.
    Render {
        input: PathBuf,
        /// Alternate two colours between trees.
        #[arg(long)]
        color_trees: bool,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Tolerance,
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.to_string())
    }
}

type CmdResult = std::result::Result<(), Failure>;

/// Parses `args` and runs the command; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Some(j) = cfg.jobs {
        if j == 0 {
            eprintln!("error: --jobs must be positive");
            return EXIT_USAGE;
        }
        // Fails only if a pool already exists, as in repeated in-process runs.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
    }
    match dispatch(&cfg) {
        Ok(()) => EXIT_OK,
        Err(Failure::Tolerance) => EXIT_FAIL,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            EXIT_USAGE
        }
    }
}

fn dispatch(cfg: &RunConfig) -> CmdResult {
    match &cfg.command {
        Command::Sort { input, dist, n } => cmd_sort(cfg, input.as_deref(), dist.as_deref(), *n),
        Command::Simulate {
            dist,
            alpha,
            lambda,
            t,
            width,
        } => cmd_simulate(cfg, &resolve_dist(dist, *alpha)?, *lambda, *t, *width),
        Command::Roots {
            dist,
            alpha,
            lambda,
            t,
            width,
        } => cmd_roots(cfg, &resolve_dist(dist, *alpha)?, *lambda, *t, *width),
        Command::Experiment { .. } => cmd_experiment(cfg),
        Command::Render { input, color_trees } => cmd_render(cfg, input, *color_trees),
    }
}

fn resolve_dist(dist: &Option<String>, alpha: Option<f64>) -> Result<Distribution64, Failure> {
    match (dist, alpha) {
        (Some(_), Some(_)) => Err(Failure::Usage("give either --dist or --alpha".into())),
        (Some(d), None) => Ok(d.parse()?),
        (None, Some(a)) => Ok(Distribution64::geometric(a)?),
        (None, None) => Ok("geom:0.5".parse()?),
    }
}

/// The given seed, or a fresh one announced on standard error.
fn seed_of(cfg: &RunConfig) -> u64 {
    cfg.seed.unwrap_or_else(|| {
        let s: u64 = rand::random();
        eprintln!("seed: {s}");
        s
    })
}

fn emit(cfg: &RunConfig, body: &str) -> CmdResult {
    match &cfg.out {
        Some(p) => std::fs::write(p, body).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => {
            std::io::stdout().write_all(body.as_bytes())?;
            Ok(())
        }
    }
}

fn cmd_sort(cfg: &RunConfig, input: Option<&Path>, dist: Option<&str>, n: Option<usize>) -> CmdResult {
    let dist: Option<Distribution64> = dist.map(str::parse).transpose()?;
    let items = match (input, n) {
        (Some(_), Some(_)) => return Err(Failure::Usage("give either an input file or --n".into())),
        (None, None) => return Err(Failure::Usage("give an input file or --n".into())),
        (Some(p), None) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
            input::parse_items(&text)?
        }
        (None, Some(_)) => Vec::new(),
    };
    let random = n.is_some() || items.iter().any(|i| i.lives.is_none());
    // The seed is only drawn (and announced) when something is random.
    let mut rng = (random && dist.is_some()).then(|| RandomStream::new(seed_of(cfg), tag("sort")));
    let mut pairs: Vec<(f64, u32)> = Vec::with_capacity(items.len());
    for (i, it) in items.iter().enumerate() {
        let lives = match (it.lives, &dist, rng.as_mut()) {
            (Some(k), _, _) => k,
            (None, Some(d), Some(r)) => d.sample(r),
            _ => return Err(Failure::Usage(format!("item {} has no lives; pass --dist", i + 1))),
        };
        pairs.push((it.label, lives));
    }
    if let Some(n) = n {
        let (Some(d), Some(r)) = (&dist, rng.as_mut()) else {
            return Err(Failure::Usage("--n needs --dist".into()));
        };
        for _ in 0..n {
            let u: f64 = rand::Rng::gen(r);
            pairs.push((u, d.sample(r)));
        }
    }
    let mut state = SortState64::new();
    for &(u, k) in &pairs {
        state.insert_next(u, k)?;
    }
    println!("{}", state.root_count());
    if cfg.out.is_some() {
        let forest = state.forest()?;
        emit(cfg, &(serde_json::to_string_pretty(&forest)? + "\n"))?;
    }
    Ok(())
}

fn record_csv(rec: &Record64) -> String {
    let mut out = String::from("vertex,label,t_birth,t_end,dead,parent\n");
    let ns = rec.sources.len();
    for v in &rec.vertical_segments {
        let parent = if v.vertex < ns {
            String::new()
        } else {
            rec.horizontal_segments[v.vertex - ns].parent.map_or(String::new(), |p| p.to_string())
        };
        out.push_str(&format!("{},{},{},{},{},{}\n", v.vertex, v.label, v.t_birth, v.t_end, v.dead, parent));
    }
    out
}

fn cmd_simulate(cfg: &RunConfig, dist: &Distribution64, lambda: Option<f64>, t: f64, width: f64) -> CmdResult {
    let horizon = Horizon::new(0.0, width, t)?;
    let mut rng = RandomStream::new(seed_of(cfg), tag("simulate"));
    let boundary = match lambda {
        None => SourcesSinks::none(),
        Some(l) => {
            let sources: Vec<Source<f64>> = sample_homogeneous(l, 0.0, width, &mut rng)
                .into_iter()
                .map(|label| Source {
                    label,
                    lives: dist.sample(&mut rng),
                })
                .collect();
            let sinks = match dist {
                Distribution64::Geometric(a) if l > 0.0 => SinkIntensity::new(l, *a)?.sample(0.0, t, &mut rng),
                _ => Vec::new(),
            };
            SourcesSinks::new(sources, &sinks)
        }
    };
    let rec = simulate(horizon, dist, &boundary, &mut rng)?;
    let body = match cfg.format.unwrap_or(Format::Json) {
        Format::Json => rec.to_json() + "\n",
        Format::Csv => record_csv(&rec),
        Format::Svg => render::render_svg(&rec, &render::Style::default()),
    };
    if cfg.out.is_some() {
        println!("{}", rec.root_count());
    }
    emit(cfg, &body)
}

fn cmd_roots(cfg: &RunConfig, dist: &Distribution64, lambda: Option<f64>, t: f64, width: f64) -> CmdResult {
    let mut rng = RandomStream::new(seed_of(cfg), tag("roots"));
    let atoms: Vec<_> = sample_marked_ppp(&Rect::new(-width, 0.0, 0.0, t)?, dist, &mut rng)
        .into_iter()
        .filter(|a| a.label < 0.0)
        .collect();
    let (init, sources) = match lambda {
        None => (RootConfiguration::new(), Vec::new()),
        Some(l) => {
            let sources: Vec<RootSource<f64>> = sample_homogeneous(l, -width, 0.0, &mut rng)
                .into_iter()
                .filter(|&x| x < 0.0)
                .map(|position| RootSource {
                    position,
                    lives: dist.sample(&mut rng),
                })
                .collect();
            let init = match dist {
                Distribution64::Geometric(a) if l > 0.0 => {
                    RootConfiguration::from_heights(&SinkIntensity::new(l, *a)?.sample(0.0, t, &mut rng), t)?
                }
                _ => RootConfiguration::new(),
            };
            (init, sources)
        }
    };
    let checkpoints: Vec<f64> = (1..=4).map(|i| width * i as f64 / 4.0).collect();
    let out = evolve(&init, &sources, &atoms, width, t, &checkpoints)?;
    println!("{}", out.final_config.len());
    let body = match cfg.format.unwrap_or(Format::Json) {
        Format::Json => serde_json::to_string_pretty(&out)? + "\n",
        Format::Csv => {
            let mut s = String::from("height\n");
            for h in out.final_config.heights() {
                s.push_str(&format!("{h}\n"));
            }
            s
        }
        Format::Svg => return Err(Failure::Usage("roots has no SVG output".into())),
    };
    if cfg.out.is_some() {
        emit(cfg, &body)?;
    }
    Ok(())
}

/// Sets `value` on the first of `keys` the parameter object has.
fn set_param(params: &mut Value, flag: &str, keys: &[&str], value: Value) -> CmdResult {
    let obj = params.as_object_mut().expect("parameters are objects");
    match keys.iter().find(|k| obj.contains_key(**k)) {
        Some(k) => {
            obj.insert((*k).to_string(), value);
            Ok(())
        }
        None => Err(Failure::Usage(format!("--{flag} does not apply to this experiment"))),
    }
}

fn cmd_experiment(cfg: &RunConfig) -> CmdResult {
    let Command::Experiment {
        name,
        manifest,
        dist,
        alpha,
        lambda,
        n,
        t,
        replicas,
        defaults,
    } = &cfg.command
    else {
        unreachable!()
    };
    let (name, mut params, loaded, base_dir) = match (name, manifest) {
        (Some(_), Some(_)) => return Err(Failure::Usage("give either an experiment name or --manifest".into())),
        (None, None) => {
            return Err(Failure::Usage(format!(
                "give an experiment name ({}) or --manifest",
                experiments::EXPERIMENTS.join(", ")
            )))
        }
        (Some(n), None) => (n.clone(), experiments::default_params(n)?, None, PathBuf::from(".")),
        (None, Some(p)) => {
            let m = Manifest::load(p)?;
            let dir = p.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf);
            (m.experiment.clone(), m.params.clone(), Some(m), dir)
        }
    };
    if *defaults {
        println!("{}", serde_json::to_string_pretty(&params)?);
        return Ok(());
    }
    if let Some(d) = dist {
        d.parse::<Distribution64>()?;
        set_param(&mut params, "dist", &["dist"], json!(d))?;
    }
    if let Some(a) = alpha {
        set_param(&mut params, "alpha", &["alpha"], json!(a))?;
    }
    if let Some(l) = lambda {
        set_param(&mut params, "lambda", &["lambda"], json!(l))?;
    }
    if let Some(n) = n {
        set_param(&mut params, "n", &["n", "d_n"], json!(n))?;
    }
    if let Some(t) = t {
        set_param(&mut params, "t", &["t_max"], json!(t))?;
    }
    if let Some(r) = replicas {
        if *r == 0 {
            return Err(Failure::Usage("--replicas must be positive".into()));
        }
        set_param(&mut params, "replicas", &["replicas", "sequences"], json!(r))?;
    }
    let explicit = loaded.as_ref().is_some_and(|m| m.explicit_seed);
    if cfg.seed.is_some() || !explicit {
        set_param(&mut params, "seed", &["seed"], json!(seed_of(cfg)))?;
    }

    let start = Instant::now();
    let report = experiments::run_named(&name, params, Exec::Parallel)?;
    let seconds = start.elapsed().as_secs_f64();
    for c in &report.checks {
        eprintln!(
            "{} {}: {} in [{}, {}]",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.lower,
            c.upper
        );
    }
    eprintln!("{}: {}", report.experiment, if report.passed { "PASS" } else { "FAIL" });

    let body = match cfg.format.unwrap_or(Format::Json) {
        Format::Json => report.to_json() + "\n",
        Format::Csv => report.checks_csv(),
        Format::Svg => return Err(Failure::Usage("experiments have no SVG output".into())),
    };
    let mut written = Vec::new();
    if let Some(m) = &loaded {
        written.extend(m.write_outputs(&report, &base_dir)?);
    }
    match &cfg.out {
        Some(p) => {
            emit(cfg, &body)?;
            written.push(p.clone());
        }
        None if written.is_empty() => emit(cfg, &body)?,
        None => {}
    }
    if let Some(first) = written.first() {
        write_sidecar(cfg, &report, seconds, first)?;
    }
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Tolerance)
    }
}

/// Wall-clock time and the command line, next to the report so the report
/// itself stays byte-reproducible.
fn write_sidecar(cfg: &RunConfig, report: &EstimateReport, seconds: f64, path: &Path) -> CmdResult {
    let mut side = path.as_os_str().to_owned();
    side.push(".run.json");
    let body = json!({
        "experiment": report.experiment,
        "wall_clock_seconds": seconds,
        "threads": rayon::current_num_threads(),
        "run_config": cfg,
    });
    std::fs::write(&side, serde_json::to_string_pretty(&body)? + "\n")?;
    Ok(())
}

fn cmd_render(cfg: &RunConfig, input: &Path, color_trees: bool) -> CmdResult {
    let text = std::fs::read_to_string(input).map_err(|e| Failure::Usage(format!("{}: {e}", input.display())))?;
    let rec = Record64::from_json(&text)?;
    let style = render::Style {
        color_trees,
        ..render::Style::default()
    };
    emit(cfg, &render::render_svg(&rec, &style))
}
