use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mlwf_core::generators::{generate, FieldSpec};
use mlwf_core::geometry::direction_fan;
use mlwf_core::grid::{forward_transform, inverse_transform, Grid};
use mlwf_core::modulation::{stft, Window, WindowKind};
use mlwf_core::psido::{apply_t, CostLimits, Method};
use mlwf_core::spaces::{BfSpec, Weight};
use mlwf_core::symbol::{char_set, CharParams};
use mlwf_core::wavefront::WavefrontQuery;

use mlwf::config::{ExperimentConfig, SymbolInput, SymbolSpec};
use mlwf::experiments::{self, Outcome};
use mlwf::io::{read_field, read_sampled, require_file, write_phase_space, write_sampled, write_spectral, FieldFile};
use mlwf::suites::{self, SuiteOptions};
use mlwf::{parallel, CliError, CliResult};

#[derive(Parser, Debug)]
#[command(name = "mlwf", version, about = "Microlocal wave-front sets on the discrete torus")]
struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed overriding the configured one.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output root; falls back to the config's `output`, then MLWF_OUT_DIR, then ./mlwf-out.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the experiment described by --config.
    Run,
    /// Forward transform of a sampled blob, inverse transform of a spectral one.
    Transform {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply Op_t(a) to a field.
    OpApply {
        /// Symbol expression, or a JSON symbol spec file.
        #[arg(long)]
        symbol: String,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        t: f64,
        #[arg(long, value_parser = parse_method, default_value = "spectral")]
        method: Method,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Characteristic set of a symbol.
    Char {
        #[arg(long)]
        symbol: String,
        #[arg(long, default_value_t = 2)]
        dimension: usize,
        #[arg(long, default_value_t = 64)]
        n: usize,
        /// Base point `x1,x2`; repeatable.
        #[arg(long = "point", value_parser = parse_point, required = true)]
        points: Vec<[f64; 2]>,
        #[arg(long, default_value_t = 16)]
        directions: usize,
        /// Order weight exponent `s` in `<xi>^s`; defaults to the symbol degree.
        #[arg(long, allow_hyphen_values = true)]
        order: Option<f64>,
        #[arg(long, default_value_t = 0.1)]
        c_min: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fourier-Banach wave-front set of a field.
    Wf(WfArgs),
    /// Modulation-space wave-front set of a field.
    ModWf {
        #[command(flatten)]
        args: WfArgs,
        #[arg(long, value_parser = parse_window, default_value = "gauss:1.0")]
        window: WindowKind,
    },
    /// Short-time Fourier transform.
    Stft {
        #[arg(long = "in")]
        input: PathBuf,
        /// `gauss:<width>` or `bump:<inner>,<outer>`.
        #[arg(long, value_parser = parse_window)]
        window: WindowKind,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a verification suite (or `all`).
    Verify {
        kind: String,
        /// Grid size for the wave-front suites.
        #[arg(long)]
        n: Option<usize>,
        /// Random fields per case in the calculus suites.
        #[arg(long)]
        fields: Option<usize>,
    },
    /// Write a synthetic field.
    Generate {
        /// Field spec as inline JSON or a path to a JSON file.
        #[arg(long)]
        spec: Option<String>,
        #[arg(long)]
        dimension: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(clap::Args, Debug)]
struct WfArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Query JSON file; otherwise taken from --config or built from --point.
    #[arg(long)]
    query: Option<PathBuf>,
    /// Base point `x1,x2`; repeatable.
    #[arg(long = "point", value_parser = parse_point)]
    points: Vec<[f64; 2]>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_point(s: &str) -> Result<[f64; 2], String> {
    let v: Vec<f64> = s.split(',').map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t}: {e}"))).collect::<Result<_, _>>()?;
    match v.as_slice() {
        [x] => Ok([*x, 0.0]),
        [x, y] => Ok([*x, *y]),
        _ => Err(format!("expected `x` or `x1,x2`, got {s}")),
    }
}

fn parse_method(s: &str) -> Result<Method, String> {
    match s {
        "spectral" => Ok(Method::Spectral),
        "direct" => Ok(Method::Direct),
        _ => Err(format!("unknown method {s} (spectral, direct)")),
    }
}

fn parse_window(s: &str) -> Result<WindowKind, String> {
    let (kind, args) = s.split_once(':').ok_or_else(|| format!("expected kind:params, got {s}"))?;
    let nums: Vec<f64> = args.split(',').map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t}: {e}"))).collect::<Result<_, _>>()?;
    match (kind, nums.as_slice()) {
        ("gauss" | "gaussian", [w]) => Ok(WindowKind::Gaussian { width: *w }),
        ("bump", [a, b]) => Ok(WindowKind::Bump { inner: *a, outer: *b }),
        _ => Err(format!("bad window {s}; use gauss:<width> or bump:<inner>,<outer>")),
    }
}

fn out_root(cli: &Cli, cfg: Option<&ExperimentConfig>) -> PathBuf {
    cli.out_dir
        .clone()
        .or_else(|| cfg.and_then(|c| c.output.clone()))
        .or_else(|| std::env::var_os("MLWF_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("mlwf-out"))
}

fn load_config(cli: &Cli) -> CliResult<Option<ExperimentConfig>> {
    let Some(p) = &cli.config else { return Ok(None) };
    let mut cfg = ExperimentConfig::load(p)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(Some(cfg))
}

/// Reads a JSON file or treats the argument as inline JSON.
fn json_arg(s: &str) -> CliResult<String> {
    let p = Path::new(s);
    if !s.trim_start().starts_with('{') && !s.trim_start().starts_with('"') {
        require_file(p)?;
        return Ok(fs::read_to_string(p)?);
    }
    Ok(s.to_string())
}

fn symbol_arg(s: &str) -> CliResult<SymbolSpec> {
    let p = Path::new(s);
    if s.ends_with(".json") {
        require_file(p)?;
        let spec: SymbolSpec = serde_json::from_str(&fs::read_to_string(p)?)?;
        return Ok(spec);
    }
    Ok(SymbolInput::Text(s.to_string()).spec())
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> CliResult<()> {
    if let Some(d) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(d)?;
    }
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn wf_query(cli: &Cli, args: &WfArgs) -> CliResult<WavefrontQuery> {
    if let Some(p) = &args.query {
        require_file(p)?;
        return Ok(serde_json::from_str(&fs::read_to_string(p)?)?);
    }
    if let Some(p) = &cli.config {
        require_file(p)?;
        let value: serde_json::Value = serde_json::from_str(&fs::read_to_string(p)?)?;
        if value.get("kind").is_some() {
            let cfg: ExperimentConfig = serde_json::from_value(value)?;
            return cfg.query.ok_or_else(|| CliError::schema("config has no 'query'"));
        }
        return Ok(serde_json::from_value(value)?);
    }
    if args.points.is_empty() {
        return Err(CliError::schema("give --query, --config or at least one --point"));
    }
    Ok(WavefrontQuery::new(args.points.clone(), Weight::one(), BfSpec::lp(1.0)))
}

fn run_wf(cli: &Cli, args: &WfArgs, window: Option<WindowKind>) -> CliResult<()> {
    let q = wf_query(cli, args)?;
    let f = read_sampled(&args.input)?;
    let r = match window {
        Some(w) => parallel::wf_modulation(&f, &q, &Window::new(w, f.grid)?)?,
        None => parallel::wf_estimate(&f, &q)?,
    };
    let out = args.out.clone().unwrap_or_else(|| out_root(cli, None).join("wf.json"));
    write_json(&out, &r)?;
    println!("{} singular of {} entries -> {}", r.singular_count(), r.entries.len(), out.display());
    Ok(())
}

fn verify(cli: &Cli, kind: &str, n: Option<usize>, fields: Option<usize>) -> CliResult<()> {
    let mut opts = SuiteOptions::default();
    if let Some(s) = cli.seed {
        opts.seed = s;
    }
    opts.n = n;
    if let Some(f) = fields {
        opts.fields = f.max(1);
    }
    let names: Vec<&str> = if kind == "all" { suites::SUITES.to_vec() } else { vec![kind] };
    let root = out_root(cli, None);
    let mut failed = Vec::new();
    for name in names {
        let report = suites::run_suite(name, &opts)?;
        let out = Outcome::from_suite_report(name, opts.seed, report);
        experiments::write_outputs(&out, &root.join(name))?;
        println!("{} {name}", if out.passed { "PASS" } else { "FAIL" });
        for c in &out.checks {
            println!("    {} = {} ({:?} {})", c.name, c.value, c.relation, c.limit);
        }
        if !out.passed {
            failed.push(name.to_string());
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Assertion(format!("failed suites: {}", failed.join(", "))))
    }
}

fn generate_cmd(cli: &Cli, spec: Option<&str>, dim: Option<usize>, n: Option<usize>, out: Option<&Path>) -> CliResult<()> {
    let cfg = load_config(cli)?;
    let field: FieldSpec = match (spec, cfg.as_ref().and_then(|c| c.field.clone())) {
        (Some(s), _) => serde_json::from_str(&json_arg(s)?)?,
        (None, Some(f)) => f,
        (None, None) => return Err(CliError::schema("give --spec or a config with 'field'")),
    };
    let cfg_grid = cfg.as_ref().map(|c| c.grid()).transpose()?.flatten();
    let grid = match (dim, n, cfg_grid) {
        (Some(d), Some(n), _) => Grid::new(d, n).map_err(CliError::schema)?,
        (None, None, Some(g)) => g,
        (d, n, g) => {
            let d = d.or(g.map(|g| g.dim())).unwrap_or(1);
            let n = n.or(g.map(|g| g.n())).unwrap_or(64);
            Grid::new(d, n).map_err(CliError::schema)?
        }
    };
    let seed = cli.seed.or(cfg.as_ref().map(|c| c.seed)).unwrap_or(0);
    let f = generate(&field, grid, seed)?;
    let out = out.map(Path::to_path_buf).unwrap_or_else(|| out_root(cli, cfg.as_ref()).join("field.bin"));
    write_sampled(&out, &f)?;
    println!("{}", out.display());
    Ok(())
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    parallel::init_pool(cli.jobs);
    match &cli.command {
        None | Some(Command::Run) => {
            let cfg = load_config(cli)?.ok_or_else(|| CliError::schema("run needs --config"))?;
            let dir = out_root(cli, Some(&cfg));
            let paths = experiments::run(&cfg, &dir)?;
            println!("{}", paths.report.display());
            Ok(())
        }
        Some(Command::Transform { input, out }) => {
            match read_field(input)? {
                FieldFile::Sampled(f) => write_spectral(out, &forward_transform(&f))?,
                FieldFile::Spectral(s) => write_sampled(out, &inverse_transform(&s))?,
            }
            Ok(())
        }
        Some(Command::OpApply { symbol, t, method, input, out }) => {
            let f = read_sampled(input)?;
            let (a, _) = symbol_arg(symbol)?.build(f.grid)?;
            let r = apply_t(&a, *t, &f, *method, CostLimits::default())?;
            if r.fell_back {
                eprintln!("note: symbol has no exact form; used the direct sum");
            }
            write_sampled(out, &r.field)
        }
        Some(Command::Char { symbol, dimension, n, points, directions, order, c_min, out }) => {
            let g = Grid::new(*dimension, *n).map_err(CliError::schema)?;
            let mut spec = symbol_arg(symbol)?;
            if let Some(s) = order {
                spec.order = Some(Weight::sigma(*s));
            }
            let (a, w0) = spec.build(g)?;
            let params = CharParams { c_min: *c_min, ..CharParams::default() };
            let bins = if g.dim() == 1 { 2 } else { *directions };
            let r = char_set(&a, &w0, points, &direction_fan(g.dim(), bins), &params)?;
            let out = out.clone().unwrap_or_else(|| out_root(cli, None).join("char.json"));
            write_json(&out, &r)?;
            println!("{} characteristic of {} entries -> {}", r.characteristic_count(), r.entries.len(), out.display());
            Ok(())
        }
        Some(Command::Wf(args)) => run_wf(cli, args, None),
        Some(Command::ModWf { args, window }) => run_wf(cli, args, Some(*window)),
        Some(Command::Stft { input, window, out }) => {
            let f = read_sampled(input)?;
            let v = stft(&f, &Window::new(*window, f.grid)?)?;
            write_phase_space(out, &v)
        }
        Some(Command::Verify { kind, n, fields }) => verify(cli, kind, *n, *fields),
        Some(Command::Generate { spec, dimension, n, out }) => generate_cmd(cli, spec.as_deref(), *dimension, *n, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mlwf: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
