//! Config-driven runs and their report files.

use std::fs;
use std::path::{Path, PathBuf};

use mlwf_core::generators::generate;
use mlwf_core::geometry::direction_fan;
use mlwf_core::grid::{Grid, SampledField};
use mlwf_core::modulation::{Window, WindowKind};
use mlwf_core::psido::{apply_t, CostLimits, Method};
use mlwf_core::spaces::Weight;
use mlwf_core::symbol::{char_set, CharParams};
use mlwf_core::wavefront::{compare_reports, WavefrontReport};
use serde::Serialize;
use serde_json::json;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{CliError, CliResult};
use crate::io::{read_sampled, write_sampled};
use crate::parallel;
use crate::suites::{self, plot_rows, Check, PlotRow, SuiteOptions, SuiteReport};

/// Everything a run produces before it is written out.
#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub result: serde_json::Value,
    #[serde(skip)]
    pub plots: Vec<PlotRow>,
    #[serde(skip)]
    pub field: Option<SampledField>,
}

impl Outcome {
    fn new(cfg: &ExperimentConfig, checks: Vec<Check>, result: serde_json::Value) -> Self {
        Outcome {
            kind: cfg.kind.name().into(),
            name: cfg.name.clone(),
            seed: cfg.seed,
            passed: checks.iter().all(|c| c.pass),
            checks,
            result,
            plots: Vec::new(),
            field: None,
        }
    }

    fn from_suite(cfg: &ExperimentConfig, r: SuiteReport) -> Self {
        let plots = r.plots.clone();
        let mut o = Outcome::new(cfg, r.checks.clone(), serde_json::to_value(&r).unwrap_or_default());
        o.plots = plots;
        o
    }

    pub fn from_suite_report(kind: &str, seed: u64, r: SuiteReport) -> Self {
        Outcome {
            kind: kind.into(),
            name: None,
            seed,
            passed: r.passed,
            checks: r.checks.clone(),
            plots: r.plots.clone(),
            result: serde_json::to_value(&r).unwrap_or_default(),
            field: None,
        }
    }

    /// Turns failed checks into an assertion error after the files are written.
    pub fn into_status(self) -> CliResult<()> {
        if self.passed {
            return Ok(());
        }
        let failed: Vec<String> = self
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| format!("{} = {} (limit {})", c.name, c.value, c.limit))
            .collect();
        Err(CliError::Assertion(failed.join("; ")))
    }
}

fn input_field(cfg: &ExperimentConfig) -> CliResult<SampledField> {
    if let Some(p) = &cfg.input {
        let f = read_sampled(p)?;
        if let Some(g) = cfg.grid()? {
            if g != f.grid {
                return Err(CliError::schema(format!("{} does not live on the configured grid", p.display())));
            }
        }
        return Ok(f);
    }
    let spec = cfg.field.as_ref().ok_or_else(|| CliError::schema("no input field"))?;
    Ok(generate(spec, cfg.require_grid()?, cfg.seed)?)
}

fn window_of(kind: Option<WindowKind>, fallback: WindowKind, g: Grid) -> CliResult<Window> {
    Ok(Window::new(kind.unwrap_or(fallback), g)?)
}

fn singular_checks(cfg: &ExperimentConfig, r: &WavefrontReport) -> Vec<Check> {
    let th = &cfg.thresholds;
    let n = r.singular_count() as f64;
    let mut out = Vec::new();
    if let Some(m) = th.max_singular {
        out.push(Check::le("singular_count", n, m as f64));
    }
    if let Some(m) = th.min_singular {
        out.push(Check::ge("singular_count", n, m as f64));
    }
    out
}

fn suite_options(cfg: &ExperimentConfig) -> CliResult<SuiteOptions> {
    let mut o = SuiteOptions { seed: cfg.seed, ..SuiteOptions::default() };
    o.n = cfg.grid()?.map(|g| g.n());
    if let Some(f) = cfg.fields {
        o.fields = f;
    }
    Ok(o)
}

fn run_wf(cfg: &ExperimentConfig, modulation: bool) -> CliResult<Outcome> {
    let f = input_field(cfg)?;
    let q = cfg.require_query()?;
    let r = if modulation {
        let w = window_of(cfg.window, WindowKind::Gaussian { width: 1.0 }, f.grid)?;
        parallel::wf_modulation(&f, q, &w)?
    } else {
        parallel::wf_estimate(&f, q)?
    };
    let mut o = Outcome::new(cfg, singular_checks(cfg, &r), json!({"singular_count": r.singular_count(), "report": r}));
    o.plots = plot_rows(if modulation { "modulation" } else { "fourier" }, &r);
    Ok(o)
}

fn run_op_apply(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let f = input_field(cfg)?;
    let (a, _) = cfg.require_symbol()?.build(f.grid)?;
    let t = cfg.t.unwrap_or(0.0);
    let method = cfg.method.unwrap_or(Method::Spectral);
    let applied = apply_t(&a, t, &f, method, CostLimits::default())?;
    let result = json!({
        "t": t,
        "method": applied.method,
        "fell_back": applied.fell_back,
        "input_l2": f.l2_norm(),
        "output_l2": applied.field.l2_norm(),
    });
    let mut o = Outcome::new(cfg, Vec::new(), result);
    o.field = Some(applied.field);
    Ok(o)
}

fn run_char(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let g = cfg.require_grid()?;
    let q = cfg.require_query()?;
    let (a, w0) = cfg.require_symbol()?.build(g)?;
    let params = cfg.char_params.unwrap_or_default();
    let r = char_set(&a, &w0, &q.base_points, &direction_fan(g.dim(), q.bins(g.dim())), &params)?;
    let n = r.characteristic_count() as f64;
    let mut checks = Vec::new();
    if let Some(m) = cfg.thresholds.max_characteristic {
        checks.push(Check::le("characteristic_count", n, m as f64));
    }
    if let Some(m) = cfg.thresholds.min_characteristic {
        checks.push(Check::ge("characteristic_count", n, m as f64));
    }
    Ok(Outcome::new(cfg, checks, json!({"characteristic_count": r.characteristic_count(), "report": r})))
}

/// Inclusions for one field and symbol; `elliptic` adds the Jaccard check.
fn run_microlocal(cfg: &ExperimentConfig, elliptic: bool) -> CliResult<Outcome> {
    let f = input_field(cfg)?;
    let g = f.grid;
    let q = cfg.require_query()?;
    let (a, w0) = cfg.require_symbol()?.build(g)?;
    let slack = cfg.thresholds.slack;
    let base = parallel::wf_estimate(&f, q)?;
    let mut q_image = q.clone();
    q_image.weight = Weight::quotient(&q.weight, &w0);
    let image = parallel::wf_estimate(&mlwf_core::psido::apply_kn(&a, &f)?, &q_image)?;
    let params = cfg.char_params.unwrap_or(CharParams { radius: Some(g.n() as f64 / 4.0), ..CharParams::default() });
    let ch = char_set(&a, &w0, &q.base_points, &direction_fan(g.dim(), q.bins(g.dim())), &params)?;
    let forward = compare_reports(&image, &base, slack)?;
    let backward = compare_reports(&base, &image.union_with_char(&ch)?, slack)?;
    let mut checks = vec![
        Check::eq("forward_violations", forward.violations.len() as f64, 0.0),
        Check::eq("backward_violations", backward.violations.len() as f64, 0.0),
    ];
    if elliptic {
        checks.push(Check::ge("jaccard", forward.jaccard, cfg.thresholds.jaccard));
    }
    let result = json!({
        "forward": forward,
        "backward": backward,
        "characteristic_count": ch.characteristic_count(),
        "field_report": base,
        "image_report": image,
    });
    let mut o = Outcome::new(cfg, checks, result);
    o.plots = plot_rows("field", &base);
    o.plots.extend(plot_rows("image", &image));
    Ok(o)
}

fn run_identity(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let f = input_field(cfg)?;
    let q = cfg.require_query()?;
    let w = window_of(cfg.window, WindowKind::Gaussian { width: 1.0 }, f.grid)?;
    let fb = parallel::wf_estimate(&f, q)?;
    let md = parallel::wf_modulation(&f, q, &w)?;
    let a = compare_reports(&fb, &md, cfg.thresholds.slack)?;
    let b = compare_reports(&md, &fb, cfg.thresholds.slack)?;
    let checks = vec![
        Check::eq("fourier_in_modulation_violations", a.violations.len() as f64, 0.0),
        Check::eq("modulation_in_fourier_violations", b.violations.len() as f64, 0.0),
        Check::ge("jaccard", a.jaccard, cfg.thresholds.jaccard),
    ];
    let mut o = Outcome::new(cfg, checks, json!({"forward": a, "backward": b, "fourier": fb, "modulation": md}));
    o.plots = plot_rows("fourier", &fb);
    o.plots.extend(plot_rows("modulation", &md));
    Ok(o)
}

fn run_windows(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let f = input_field(cfg)?;
    let q = cfg.require_query()?;
    let w1 = window_of(cfg.window, WindowKind::Gaussian { width: 1.0 }, f.grid)?;
    let w2 = window_of(cfg.second_window, WindowKind::Bump { inner: 0.05, outer: 1.3 }, f.grid)?;
    let a = parallel::wf_modulation(&f, q, &w1)?;
    let b = parallel::wf_modulation(&f, q, &w2)?;
    let c = compare_reports(&a, &b, cfg.thresholds.slack)?;
    let checks = vec![Check::ge("jaccard", c.jaccard, cfg.thresholds.jaccard)];
    let mut o = Outcome::new(cfg, checks, json!({"comparison": c, "first": a, "second": b}));
    o.plots = plot_rows("first", &a);
    o.plots.extend(plot_rows("second", &b));
    Ok(o)
}

fn run_calculus(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let opts = suite_options(cfg)?;
    if cfg.pairs.is_empty() {
        return Ok(Outcome::from_suite(cfg, suites::calculus(&opts)?));
    }
    let g = cfg.require_grid()?;
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for [a, b] in &cfg.pairs {
        let (e, terms) = suites::calculus_case(g, a, b, opts.fields, cfg.seed)?;
        worst = if e.is_nan() { f64::INFINITY } else { worst.max(e) };
        rows.push(json!({"a1": a, "a2": b, "terms": terms, "rel_err": e}));
    }
    let checks = vec![Check::le("max_rel_err", worst, cfg.thresholds.rel_err)];
    Ok(Outcome::new(cfg, checks, json!({"cases": rows, "fields": opts.fields})))
}

/// Runs the experiment without touching the file system (apart from reading inputs).
pub fn execute(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    use ExperimentKind::*;
    let single = cfg.has_field();
    match cfg.kind {
        Wf => run_wf(cfg, false),
        ModWf => run_wf(cfg, true),
        OpApply => run_op_apply(cfg),
        Char => run_char(cfg),
        Inclusion if single => run_microlocal(cfg, false),
        Elliptic if single => run_microlocal(cfg, true),
        WfIdentity if single => run_identity(cfg),
        WindowIndependence if single => run_windows(cfg),
        Inclusion => Ok(Outcome::from_suite(cfg, suites::inclusion(&suite_options(cfg)?)?)),
        Elliptic => Ok(Outcome::from_suite(cfg, suites::elliptic(&suite_options(cfg)?)?)),
        WfIdentity => Ok(Outcome::from_suite(cfg, suites::wf_identity(&suite_options(cfg)?)?)),
        WindowIndependence => Ok(Outcome::from_suite(cfg, suites::window_independence(&suite_options(cfg)?)?)),
        CalculusRegression => run_calculus(cfg),
    }
}

/// Files written by [`write_outputs`].
#[derive(Debug, Clone)]
pub struct OutputPaths {
    pub report: PathBuf,
    pub summary: PathBuf,
    pub shells: Option<PathBuf>,
    pub field: Option<PathBuf>,
}

/// `report.json`, `summary.csv`, `shells.csv` (when there is plot data) and `output.bin`
/// (for operator applications).
pub fn write_outputs(out: &Outcome, dir: &Path) -> CliResult<OutputPaths> {
    fs::create_dir_all(dir)?;
    let report = dir.join("report.json");
    fs::write(&report, serde_json::to_string_pretty(out)? + "\n")?;

    let summary = dir.join("summary.csv");
    let mut w = csv::Writer::from_path(&summary)?;
    w.write_record(["check", "value", "limit", "relation", "pass"])?;
    for c in &out.checks {
        w.write_record([
            c.name.clone(),
            c.value.to_string(),
            c.limit.to_string(),
            format!("{:?}", c.relation).to_lowercase(),
            c.pass.to_string(),
        ])?;
    }
    w.flush()?;

    let shells = if out.plots.is_empty() {
        None
    } else {
        let p = dir.join("shells.csv");
        let mut w = csv::Writer::from_path(&p)?;
        for row in &out.plots {
            w.serialize(row)?;
        }
        w.flush()?;
        Some(p)
    };
    let field = match &out.field {
        Some(f) => {
            let p = dir.join("output.bin");
            write_sampled(&p, f)?;
            Some(p)
        }
        None => None,
    };
    Ok(OutputPaths { report, summary, shells, field })
}

/// Executes, writes the report files and reports failed checks as an assertion error.
pub fn run(cfg: &ExperimentConfig, dir: &Path) -> CliResult<OutputPaths> {
    let out = execute(cfg)?;
    let paths = write_outputs(&out, dir)?;
    out.into_status()?;
    Ok(paths)
}
