//! Verification suites: each returns named checks plus details for the report.

use std::f64::consts::{PI, TAU};

use mlwf_core::generators::{generate, random_bandlimited, FieldKind, FieldSpec};
use mlwf_core::geometry::{direction_fan, make_cutoff, make_directional_cutoff, Cone, CutoffSpec, DirectionalCutoffSpec};
use mlwf_core::grid::{forward_transform, Grid, SampledField};
use mlwf_core::modulation::{fb_mod_equivalence, ratio_spread, stft, twisted_convolution, EquivalenceSetup, PhaseSpaceField, Window, WindowKind};
use mlwf_core::psido::{apply_kn, apply_t, smoothing_probe, CostLimits, Method, ProbeOptions};
use mlwf_core::spaces::{bf_norm, fb_seminorm, young_check, BfSpec, DecayOptions, Layout, Weight};
use mlwf_core::symbol::{char_set, compose, requantize, CharParams, Multiplier, Symbol, SymbolClass, Term};
use mlwf_core::wavefront::{compare_reports, wf_family, FamilyMode, WavefrontQuery, WavefrontReport};
use mlwf_core::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::expr::SymbolExpr;
use crate::parallel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    #[serde(with = "mlwf_core::serde_float")]
    pub value: f64,
    #[serde(with = "mlwf_core::serde_float")]
    pub limit: f64,
    pub relation: Relation,
    pub pass: bool,
}

impl Check {
    pub fn le(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check { name: name.into(), value, limit, relation: Relation::Le, pass: value <= limit }
    }

    pub fn ge(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check { name: name.into(), value, limit, relation: Relation::Ge, pass: value >= limit }
    }

    pub fn eq(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check { name: name.into(), value, limit, relation: Relation::Eq, pass: value == limit }
    }
}

/// One row of plot data: log2 shell norm per cone.
#[derive(Debug, Clone, Serialize)]
pub struct PlotRow {
    pub series: String,
    pub point: usize,
    pub bin: usize,
    pub shell: usize,
    pub log2_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub details: serde_json::Value,
    #[serde(skip)]
    pub plots: Vec<PlotRow>,
}

impl SuiteReport {
    fn new(suite: &str, checks: Vec<Check>, details: serde_json::Value) -> Self {
        let passed = checks.iter().all(|c| c.pass);
        SuiteReport { suite: suite.into(), passed, checks, details, plots: Vec::new() }
    }

    fn with_plots(mut self, plots: Vec<PlotRow>) -> Self {
        self.plots = plots;
        self
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Overrides shared by the suites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Grid size for the wave-front suites; `None` keeps each suite's default.
    pub n: Option<usize>,
    /// Random fields per symbol in the calculus suites.
    pub fields: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { seed: 20_240_601, n: None, fields: 50 }
    }
}

fn rel_l2(a: &SampledField, b: &SampledField) -> f64 {
    let d = a.sub(b).map(|d| d.l2_norm()).unwrap_or(f64::INFINITY);
    let s = b.l2_norm();
    if s == 0.0 {
        d
    } else {
        d / s
    }
}

fn parse_symbol(src: &str, g: Grid) -> CliResult<Symbol> {
    SymbolExpr::parse(src)?.symbol(g, SymbolClass::default())
}

fn worst(errs: impl IntoIterator<Item = f64>) -> f64 {
    errs.into_iter().fold(0.0, |m, e| if e.is_nan() { f64::INFINITY } else { m.max(e) })
}

pub const CALCULUS_PAIRS_1D: [(&str, &str); 10] = [
    ("xi", "e^{ix}"),
    ("xi^2", "cos(x)"),
    ("xi^3", "e^{-ix}"),
    ("e^{ix}*xi", "e^{2ix}*xi"),
    ("1 + xi^2", "sin(x)*xi"),
    ("xi + cos(x)*xi^2", "e^{ix}"),
    ("i*xi^3 + 2", "e^{-2ix}*xi"),
    ("e^{ix}*xi^2", "xi^2"),
    ("cos(2x)*xi", "sin(x)*xi^3"),
    ("3 - e^{-ix}*xi^3", "e^{ix}*xi^3 + xi"),
];

pub const CALCULUS_PAIRS_2D: [(&str, &str); 10] = [
    ("xi1", "e^{ix1}"),
    ("xi1*xi2", "cos(x2)"),
    ("|xi|^2", "e^{i(x1+x2)}"),
    ("xi1^2*xi2", "sin(x1)"),
    ("e^{ix2}*xi2", "e^{-ix1}*xi1"),
    ("i*xi1 + xi2^2", "cos(x1)*xi2"),
    ("xi2^3", "e^{ix1}*xi1"),
    ("cos(x1+x2)*xi1", "xi1*xi2"),
    ("1 + xi1^2 + xi2^2", "e^{i(x1-x2)}"),
    ("e^{ix1}*xi1*xi2", "xi1 + sin(x2)"),
];

pub fn calculus_case(g: Grid, a1: &str, a2: &str, fields: usize, seed: u64) -> CliResult<(f64, u32)> {
    let s1 = parse_symbol(a1, g)?;
    let s2 = parse_symbol(a2, g)?;
    let order = s1.degree().ok_or_else(|| CliError::Other(format!("{a1} is not in exact form")))? + 1;
    let c = compose(&s1, &s2, order)?;
    // a band that keeps every product below the Nyquist frequency
    let band = (g.n() / 4) as u32;
    let errs = (0..fields)
        .map(|j| {
            let f = random_bandlimited(g, band, seed.wrapping_add(j as u64), false);
            let lhs = apply_kn(&s1, &apply_kn(&s2, &f)?)?;
            Ok(rel_l2(&apply_kn(&c, &f)?, &lhs))
        })
        .collect::<CliResult<Vec<f64>>>()?;
    Ok((worst(errs), order))
}

/// Composition against operator products on exact-form pairs.
pub fn calculus(opts: &SuiteOptions) -> CliResult<SuiteReport> {
    let cases: Vec<(Grid, &str, &str)> = CALCULUS_PAIRS_1D
        .iter()
        .map(|(a, b)| (Grid::new(1, 64).unwrap(), *a, *b))
        .chain(CALCULUS_PAIRS_2D.iter().map(|(a, b)| (Grid::new(2, 32).unwrap(), *a, *b)))
        .collect();
    let results = cases
        .par_iter()
        .map(|(g, a, b)| calculus_case(*g, a, b, opts.fields, opts.seed))
        .collect::<CliResult<Vec<_>>>()?;
    let rows: Vec<_> = cases
        .iter()
        .zip(&results)
        .map(|((g, a, b), (e, order))| json!({"dimension": g.dim(), "n": g.n(), "a1": a, "a2": b, "terms": order, "rel_err": e}))
        .collect();
    let err = worst(results.iter().map(|r| r.0));
    Ok(SuiteReport::new("calculus", vec![Check::le("max_rel_err", err, 1e-10)], json!({"cases": rows, "fields": opts.fields})))
}

/// Even `x`-frequencies keep `t = 1/2` exact on the lattice.
pub const QUANTIZATION_SYMBOLS: [&str; 5] =
    ["xi*e^{2ix}", "xi^2*cos(2x)", "e^{-2ix}*xi^3 + xi", "1 + sin(2x)*xi", "e^{4ix}*xi^2 - 2i*xi"];

/// Direct `t`-quantized double sums against requantized symbols.
pub fn quantization(opts: &SuiteOptions) -> CliResult<SuiteReport> {
    let g = Grid::new(1, 32)?;
    let cases: Vec<(&str, f64)> = QUANTIZATION_SYMBOLS.iter().flat_map(|s| [(*s, 0.5), (*s, 1.0)]).collect();
    let fields = opts.fields.min(20);
    let errs = cases
        .par_iter()
        .map(|(src, t)| {
            let a = parse_symbol(src, g)?;
            let b = requantize(&a, *t, 0.0, a.degree().unwrap_or(0) + 1)?;
            let e = (0..fields)
                .map(|j| {
                    let f = random_bandlimited(g, 6, opts.seed.wrapping_add(100 + j as u64), false);
                    let direct = apply_t(&a, *t, &f, Method::Direct, CostLimits::default())?.field;
                    Ok(rel_l2(&direct, &apply_kn(&b, &f)?))
                })
                .collect::<CliResult<Vec<f64>>>()?;
            Ok(worst(e))
        })
        .collect::<CliResult<Vec<f64>>>()?;
    let rows: Vec<_> = cases.iter().zip(&errs).map(|((s, t), e)| json!({"symbol": s, "t": t, "rel_err": e})).collect();
    Ok(SuiteReport::new("quantization", vec![Check::le("max_rel_err", worst(errs.iter().copied()), 1e-8)], json!({"n": 32, "cases": rows})))
}

fn phase_rel(a: &PhaseSpaceField, b: &PhaseSpaceField) -> f64 {
    let num: f64 = a.values.iter().zip(&b.values).map(|(u, v)| (u - v).norm_sqr()).sum();
    let den: f64 = b.values.iter().map(|v| v.norm_sqr()).sum();
    (num / den).sqrt()
}

/// `(V_{phi1} f) # (V_{phi2} phi3) = (phi3, phi1) V_{phi2} f` with Gaussian windows.
pub fn reproducing(opts: &SuiteOptions) -> CliResult<SuiteReport> {
    let g = Grid::new(1, 64)?;
    let bump = FieldSpec::new(FieldKind::ModulatedBump { cutoff: CutoffSpec::new([2.0, 0.0], 0.3, 0.9)?, frequency: [3.0, 0.0] });
    let fields = [("modulated-bump", generate(&bump, g, 0)?), ("random", random_bandlimited(g, 12, opts.seed, false))];
    let triples = [(1.0, 0.8, 1.2), (0.5, 1.5, 0.7)];
    let mut rows = Vec::new();
    let mut errs = Vec::new();
    for (name, f) in &fields {
        for &(w1, w2, w3) in &triples {
            let win = |w| Window::new(WindowKind::Gaussian { width: w }, g);
            let (p1, p2, p3) = (win(w1)?, win(w2)?, win(w3)?);
            let lhs = twisted_convolution(&stft(f, &p1)?, &stft(&p3.samples, &p2)?, CostLimits::default())?;
            let ip = p3.samples.inner(&p1.samples)?;
            let v = stft(f, &p2)?;
            let rhs = PhaseSpaceField { grid: g, values: v.values.iter().map(|z| z * ip).collect() };
            let e = phase_rel(&lhs, &rhs);
            rows.push(json!({"field": name, "widths": [w1, w2, w3], "rel_err": e}));
            errs.push(e);
        }
    }
    Ok(SuiteReport::new("reproducing", vec![Check::le("max_rel_err", worst(errs), 1e-6)], json!({"n": 64, "cases": rows})))
}

fn char_points() -> Vec<[f64; 2]> {
    vec![[PI, PI], [1.0, 2.0], [5.0, 0.5]]
}

/// Characteristic sets of an elliptic, a zero and a heat-type symbol.
pub fn char_sanity(opts: &SuiteOptions) -> CliResult<SuiteReport> {
    let n = opts.n.unwrap_or(128);
    let g = Grid::new(2, n)?;
    let dirs = direction_fan(2, 16);
    let pts = char_points();
    let total = (pts.len() * dirs.len()) as f64;
    let params = CharParams::default();
    let heat_params = CharParams { radius: Some(n as f64 / 8.0), ..params };
    let elliptic = char_set(&parse_symbol("1 + |xi|^2", g)?, &Weight::sigma(2.0), &pts, &dirs, &params)?;
    let zero = char_set(&Symbol::zero(g), &Weight::one(), &pts, &dirs, &params)?;
    let heat = char_set(&parse_symbol("i*xi1 + xi2^2", g)?, &Weight::sigma(1.0), &pts, &dirs, &heat_params)?;
    let min_bound = |r: &mlwf_core::symbol::CharSetReport| r.entries.iter().map(|e| e.tail_lower_bound).fold(f64::INFINITY, f64::min);
    let checks = vec![
        Check::eq("elliptic_characteristic", elliptic.characteristic_count() as f64, 0.0),
        Check::eq("zero_characteristic", zero.characteristic_count() as f64, total),
        Check::eq("heat_characteristic", heat.characteristic_count() as f64, 0.0),
    ];
    Ok(SuiteReport::new(
        "char-sanity",
        checks,
        json!({"n": n, "entries": total, "elliptic_min_bound": min_bound(&elliptic), "heat_min_bound": min_bound(&heat), "c_min": params.c_min}),
    ))
}

/// Exact-form library with the order weight used for characteristic sets.
/// Every computed bound sits at least a factor 2 away from `c_min` at the default geometry.
pub const CHAR_LIBRARY: [(&str, f64); 10] = [
    ("1 + |xi|^2", 2.0),
    ("(2 + cos(x1))*(1 + xi1^2 + xi2^2)", 2.0),
    ("e^{ix1}*(xi1^2 + xi2^2)", 2.0),
    ("(2 + sin(x2))*xi2^2 + xi1^2", 2.0),
    ("i*xi1 + xi2^2", 1.0),
    ("(2 + cos(x1))*xi1 + 3i*xi2", 1.0),
    ("xi1", 1.0),
    ("xi1*xi2", 2.0),
    ("xi1^2 - xi2^2", 2.0),
    ("xi1*(xi1 + xi2)", 2.0),
];

/// Flags of `a` and of its Weyl-to-Kohn-Nirenberg transfer agree bin for bin.
pub fn char_invariance(opts: &SuiteOptions) -> CliResult<SuiteReport> {
    char_invariance_on(&CHAR_LIBRARY, opts)
}

pub fn char_invariance_on(library: &[(&str, f64)], opts: &SuiteOptions) -> CliResult<SuiteReport> {
    let n = opts.n.unwrap_or(64);
    let g = Grid::new(2, n)?;
    let dirs = direction_fan(2, 16);
    let pts = char_points();
    let params = CharParams::default();
    let rows = library
        .par_iter()
        .map(|(src, s)| {
            let a = parse_symbol(src, g)?;
            let b = requantize(&a, 0.0, 1.0, a.degree().unwrap_or(0) + 1)?;
            let w0 = Weight::sigma(*s);
            let ra = char_set(&a, &w0, &pts, &dirs, &params)?;
            let rb = char_set(&b, &w0, &pts, &dirs, &params)?;
            let mismatches = ra.flags().iter().zip(rb.flags()).filter(|(x, y)| **x != *y).count();
            // closest approach of either bound to the threshold, as a ratio
            let margin = ra
                .entries
                .iter()
                .chain(&rb.entries)
                .map(|e| (e.tail_lower_bound / params.c_min).ln().abs())
                .fold(f64::INFINITY, f64::min)
                .exp();
            Ok((mismatches, ra.characteristic_count(), margin))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let total: usize = rows.iter().map(|r| r.0).sum();
    let separation = rows.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
    let details: Vec<_> = library
        .iter()
        .zip(&rows)
        .map(|((src, s), (m, c, margin))| json!({"symbol": src, "order": s, "mismatches": m, "characteristic": c, "threshold_margin": margin}))
        .collect();
    Ok(SuiteReport::new("char-invariance", vec![Check::ge("threshold_separation", separation, 2.0), Check::eq("mismatches", total as f64, 0.0)], json!({"n": n, "cases": details})))
}

/// A test singularity with the base points probed for it.
#[derive(Debug, Clone)]
pub struct SuiteField {
    pub name: &'static str,
    pub spec: FieldSpec,
    pub base_points: Vec<[f64; 2]>,
}

/// Band-limited point mass, line jump and chirp.
pub fn singularity_suite() -> Vec<SuiteField> {
    let c = [PI, PI];
    let at = |dx: f64, dy: f64| [c[0] + dx, c[1] + dy];
    let taper = |k: FieldKind| FieldSpec::new(k).tapered(0.5, 0.95);
    vec![
        SuiteField {
            name: "delta",
            spec: taper(FieldKind::DeltaSurrogate { center: c }),
            base_points: vec![c, at(2.0, 0.0), at(0.0, -2.2), at(1.6, 1.6)],
        },
        SuiteField {
            name: "line-jump",
            spec: taper(FieldKind::LineJump2d { a: PI - 1.6, b: PI + 1.6 }),
            base_points: vec![at(-1.6, 0.0), at(1.6, 0.8), c, at(PI, 0.3)],
        },
        SuiteField {
            name: "chirp",
            spec: taper(FieldKind::Chirp { start: PI - 1.6, length: 3.2 }),
            base_points: vec![at(-1.6, 0.0), at(1.6, -0.5), c, at(PI, 0.3)],
        },
    ]
}

/// Query used by the theorem suites.
pub fn suite_query(g: &Grid, base_points: Vec<[f64; 2]>, weight: Weight) -> WavefrontQuery {
    let mut q = WavefrontQuery::new(base_points, weight, BfSpec::lp(1.0));
    q.cutoff = [0.05, 1.3];
    q.inner_radius = Some(g.n() as f64 / 16.0);
    q.decay = DecayOptions { eps_rel: 1e-3, ..DecayOptions::default() };
    q.half_probe = false;
    q
}

pub fn plot_rows(series: &str, r: &WavefrontReport) -> Vec<PlotRow> {
    r.entries
        .iter()
        .flat_map(|e| {
            e.shells.iter().enumerate().map(move |(s, v)| PlotRow {
                series: series.to_string(),
                point: e.point,
                bin: e.bin,
                shell: s,
                log2_norm: v.max(1e-300).log2(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
struct MicrolocalCase {
    field: &'static str,
    weight_order: f64,
    symbol: String,
    forward_violations: usize,
    backward_violations: usize,
    #[serde(with = "mlwf_core::serde_float")]
    jaccard: f64,
    singular_f: usize,
    singular_image: usize,
    characteristic: usize,
}

/// `phi (x) psi` with `phi` at `center` and `psi` turned towards `direction`.
pub fn directional_symbol(g: Grid, center: [f64; 2], direction: [f64; 2]) -> CliResult<Symbol> {
    let r = g.n() as f64 / 16.0;
    let phi = make_cutoff(&CutoffSpec::new(center, 0.05, 1.5)?, g)?;
    let psi = make_directional_cutoff(
        &DirectionalCutoffSpec { cone: Cone::new(direction, PI / 6.0, r / 2.0)?, transition_radius: r, angular_margin: PI / 12.0 },
        g,
    )?;
    Ok(Symbol::separable(g, vec![Term { coeff: phi, mult: Multiplier::Table(psi.coeffs) }], SymbolClass::default())?)
}

fn microlocal_cases(n: usize) -> CliResult<(Vec<MicrolocalCase>, Vec<PlotRow>)> {
    let g = Grid::new(2, n)?;
    let dirs = direction_fan(2, 16);
    let elliptic = parse_symbol("1 + |xi|^2", g)?;
    let jobs: Vec<(SuiteField, f64)> = singularity_suite().into_iter().flat_map(|f| [(f.clone(), 0.0), (f, 1.0)]).collect();
    let results = jobs
        .par_iter()
        .map(|(sf, s)| -> CliResult<(Vec<MicrolocalCase>, Vec<PlotRow>)> {
            let f = generate(&sf.spec, g, 0)?;
            let w = Weight::sigma(*s);
            let base = parallel::wf_estimate(&f, &suite_query(&g, sf.base_points.clone(), w.clone()))?;
            let mut plots = plot_rows(&format!("{}-s{s}-f", sf.name), &base);
            let mut cases = Vec::new();
            let mut symbols: Vec<(String, Symbol, Weight)> = vec![("1 + |xi|^2".into(), elliptic.clone(), Weight::sigma(2.0))];
            for j in [0usize, 2, 5] {
                symbols.push((format!("directional-{j}"), directional_symbol(g, sf.base_points[0], dirs[j])?, Weight::one()));
            }
            for (label, a, w0) in symbols {
                let image = apply_kn(&a, &f)?;
                let q = suite_query(&g, sf.base_points.clone(), Weight::quotient(&w, &w0));
                let rep = parallel::wf_estimate(&image, &q)?;
                let params = CharParams { radius: Some(n as f64 / 4.0), ..CharParams::default() };
                let ch = char_set(&a, &w0, &sf.base_points, &dirs, &params)?;
                let forward = compare_reports(&rep, &base, 1)?;
                let backward = compare_reports(&base, &rep.union_with_char(&ch)?, 1)?;
                let jaccard = compare_reports(&rep, &base, 1)?.jaccard;
                plots.extend(plot_rows(&format!("{}-s{s}-{label}", sf.name), &rep));
                cases.push(MicrolocalCase {
                    field: sf.name,
                    weight_order: *s,
                    symbol: label,
                    forward_violations: forward.violations.len(),
                    backward_violations: backward.violations.len(),
                    jaccard,
                    singular_f: base.singular_count(),
                    singular_image: rep.singular_count(),
                    characteristic: ch.characteristic_count(),
                });
            }
            Ok((cases, plots))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mut cases = Vec::new();
    let mut plots = Vec::new();
    for (c, p) in results {
        cases.extend(c);
        plots.extend(p);
    }
    Ok((cases, plots))
}

/// Both microlocal inclusions for elliptic and directional operators.
pub fn inclusion(opts: &SuiteOptions) -> CliResult<SuiteReport> {
    let n = opts.n.unwrap_or(128);
    let (cases, plots) = microlocal_cases(n)?;
    let fwd: usize = cases.iter().map(|c| c.forward_violations).sum();
    let bwd: usize = cases.iter().map(|c| c.backward_violations).sum();
    let checks = vec![Check::eq("forward_violations", fwd as f64, 0.0), Check::eq("backward_violations", bwd as f64, 0.0)];
    Ok(SuiteReport::new("inclusion", checks, json!({"n": n, "slack": 1, "cases": cases})).with_plots(plots))
}

/// Singular sets of `f` and `Op(a) f` coincide for elliptic `a`.
pub fn elliptic(opts: &SuiteOptions) -> CliResult<SuiteReport> {
    let n = opts.n.unwrap_or(128);
    let (cases, plots) = microlocal_cases(n)?;
    let ell: Vec<&MicrolocalCase> = cases.iter().filter(|c| !c.symbol.starts_with("directional")).collect();
    let min_j = ell.iter().map(|c| c.jaccard).fold(f64::INFINITY, f64::min);
    Ok(SuiteReport::new("elliptic", vec![Check::ge("min_jaccard", min_j, 0.9)], json!({"n": n, "slack": 1, "cases": ell})).with_plots(plots))
}

/// Cone slopes of `phi1 Op(a) phi2 f` for disjoint cutoffs.
pub fn smoothing(opts: &SuiteOptions) -> CliResult<SuiteReport> {
    let n = opts.n.unwrap_or(128);
    let g = Grid::new(2, n)?;
    let x = [PI, PI];
    let phi2 = CutoffSpec::new(x, 0.2, 0.6)?;
    let phi1 = CutoffSpec::new([x[0] + PI, x[1] + PI], 0.05, 1.6)?;
    let f = generate(&singularity_suite()[0].spec, g, 0)?;
    let symbols = ["<xi>^2", "<xi>^-2", "<xi>^-1"];
    let rows = symbols
        .par_iter()
        .map(|src| {
            let a = parse_symbol(src, g)?;
            let r = smoothing_probe(&a, &phi1, &phi2, &f, &Weight::one(), &BfSpec::lp(1.0), &ProbeOptions::default())?;
            Ok((r.worst_slope(), r.results.iter().map(|c| c.decay_slope).collect::<Vec<f64>>()))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let worst_slope = rows.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
    let details: Vec<_> = symbols
        .iter()
        .zip(&rows)
        .map(|(s, (w, all))| {
            let all: Vec<serde_json::Value> = all.iter().map(|v| float_json(*v)).collect();
            json!({"symbol": s, "worst_slope": float_json(*w), "slopes": all})
        })
        .collect();
    Ok(SuiteReport::new("smoothing", vec![Check::le("worst_slope", worst_slope, -2.0)], json!({"n": n, "cases": details})))
}

fn float_json(v: f64) -> serde_json::Value {
    if v.is_finite() {
        json!(v)
    } else if v.is_nan() {
        json!("nan")
    } else if v > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

/// Twenty modulated bumps inside a ball of radius `pi/4` around `(pi, pi)`.
pub fn equivalence_probes(g: Grid) -> CliResult<Vec<SampledField>> {
    (0..20)
        .map(|j| {
            let a = TAU * j as f64 / 20.0;
            let shift = 0.15 * (j % 3) as f64 / 2.0;
            let center = [PI + shift * a.cos(), PI + shift * a.sin()];
            let outer = 0.45 + 0.05 * (j % 4) as f64;
            let radius = (g.n() as f64 / 4.0) * (j % 5) as f64 / 4.0;
            let freq = [radius * (3.0 * a).cos(), radius * (3.0 * a).sin()];
            let spec = FieldSpec::new(FieldKind::ModulatedBump { cutoff: CutoffSpec::new(center, 0.1, outer)?, frequency: freq });
            Ok(generate(&spec, g, 0)?)
        })
        .collect()
}

/// Norm-level equivalence constant over the probe family.
pub fn equivalence(g: Grid, weight: &Weight, window: &Window) -> CliResult<(f64, Vec<f64>)> {
    let setup = EquivalenceSetup {
        support_center: [PI, PI],
        support_radius: PI / 4.0,
        projector: CutoffSpec::new([PI, PI], 0.05, 1.3)?,
    };
    let probes = equivalence_probes(g)?;
    let ratios = probes
        .par_iter()
        .map(|f| Ok(fb_mod_equivalence(f, weight, &BfSpec::lp(1.0), window, &setup, None)?.ratio))
        .collect::<CliResult<Vec<f64>>>()?;
    Ok((ratio_spread(&ratios), ratios))
}

/// Fourier-Banach against modulation wave-front sets, and the local norm equivalence.
pub fn wf_identity(opts: &SuiteOptions) -> CliResult<SuiteReport> {
    let n = opts.n.unwrap_or(64);
    let g = Grid::new(2, n)?;
    let window = Window::new(WindowKind::Gaussian { width: 1.0 }, g)?;
    let weight = Weight::one();
    let mut cases = Vec::new();
    let mut plots = Vec::new();
    let (mut fwd, mut bwd, mut min_j) = (0usize, 0usize, f64::INFINITY);
    for sf in singularity_suite() {
        let f = generate(&sf.spec, g, 0)?;
        let q = suite_query(&g, sf.base_points.clone(), weight.clone());
        let fb = parallel::wf_estimate(&f, &q)?;
        let md = parallel::wf_modulation(&f, &q, &window)?;
        let a = compare_reports(&fb, &md, 1)?;
        let b = compare_reports(&md, &fb, 1)?;
        fwd += a.violations.len();
        bwd += b.violations.len();
        min_j = min_j.min(a.jaccard);
        plots.extend(plot_rows(&format!("{}-fourier", sf.name), &fb));
        plots.extend(plot_rows(&format!("{}-modulation", sf.name), &md));
        cases.push(json!({"field": sf.name, "fourier_singular": fb.singular_count(), "modulation_singular": md.singular_count(),
            "forward_violations": a.violations.len(), "backward_violations": b.violations.len(), "jaccard": a.jaccard}));
    }
    let (spread, ratios) = equivalence(g, &weight, &window)?;
    let (spread1, ratios1) = equivalence(g, &Weight::sigma(1.0), &window)?;
    let checks = vec![
        Check::eq("fourier_in_modulation_violations", fwd as f64, 0.0),
        Check::eq("modulation_in_fourier_violations", bwd as f64, 0.0),
        Check::ge("min_jaccard", min_j, 0.9),
        Check::le("equivalence_spread", spread, 2.0),
        Check::le("equivalence_spread_sigma1", spread1, 2.0),
    ];
    Ok(SuiteReport::new(
        "wf-identity",
        checks,
        json!({"n": n, "slack": 1, "cases": cases, "ratios": ratios, "ratios_sigma1": ratios1}),
    )
    .with_plots(plots))
}

/// Gaussian against bump window.
pub fn window_independence(opts: &SuiteOptions) -> CliResult<SuiteReport> {
    let n = opts.n.unwrap_or(64);
    let g = Grid::new(2, n)?;
    let gauss = Window::new(WindowKind::Gaussian { width: 1.0 }, g)?;
    let bump = Window::new(WindowKind::Bump { inner: 0.05, outer: 1.3 }, g)?;
    let mut cases = Vec::new();
    let mut min_j = f64::INFINITY;
    for sf in singularity_suite() {
        let f = generate(&sf.spec, g, 0)?;
        for s in [0.0, 1.0] {
            let q = suite_query(&g, sf.base_points.clone(), Weight::sigma(s));
            let a = parallel::wf_modulation(&f, &q, &gauss)?;
            let b = parallel::wf_modulation(&f, &q, &bump)?;
            let c = compare_reports(&a, &b, 1)?;
            min_j = min_j.min(c.jaccard);
            cases.push(json!({"field": sf.name, "weight_order": s, "gaussian_singular": a.singular_count(),
                "bump_singular": b.singular_count(), "jaccard": c.jaccard}));
        }
    }
    Ok(SuiteReport::new("window-independence", vec![Check::ge("min_jaccard", min_j, 0.9)], json!({"n": n, "slack": 1, "cases": cases})))
}

fn random_grid(rng: &mut ChaCha8Rng) -> Grid {
    if rng.gen_bool(0.5) {
        Grid::new(1, 1 << rng.gen_range(3..=7)).unwrap()
    } else {
        Grid::new(2, 1 << rng.gen_range(3..=5)).unwrap()
    }
}

fn random_space(rng: &mut ChaCha8Rng) -> BfSpec {
    let exps = [1.0, 1.5, 2.0, 4.0, f64::INFINITY];
    let p = exps[rng.gen_range(0..exps.len())];
    let q = exps[rng.gen_range(0..exps.len())];
    match rng.gen_range(0..3) {
        0 => BfSpec::lp(p),
        1 => BfSpec::lpq1(p, q),
        _ => BfSpec::lpq2(p, q),
    }
}

/// Randomized structural invariants with a fixed seed.
pub fn invariants(opts: &SuiteOptions) -> CliResult<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let trials = 60;
    let mut tallies: Vec<(&str, usize, usize)> = Vec::new();
    let mut tally = |name: &'static str, ok: bool| match tallies.iter_mut().find(|t| t.0 == name) {
        Some(t) => {
            t.1 += 1;
            t.2 += ok as usize;
        }
        None => tallies.push((name, 1, ok as usize)),
    };
    let opts_d = DecayOptions::default();
    for _ in 0..trials {
        let g = random_grid(&mut rng);
        let f = random_bandlimited(g, g.n() as u32, rng.gen(), false);
        let fh = forward_transform(&f);
        tally("parseval", (fh.l2_norm() - f.l2_norm()).abs() <= 1e-12 * f.l2_norm());

        let spec = random_space(&mut rng);
        let lay = Layout::Spectral { grid: g, x_ref: [0.0; 2] };
        let shrunk: Vec<C64> = fh.coeffs.iter().map(|c| c * rng.gen_range(0.0..=1.0)).collect();
        tally("solidity", bf_norm(&spec, &lay, &shrunk)? <= bf_norm(&spec, &lay, &fh.coeffs)? * (1.0 + 1e-12));

        let dir = rng.gen_range(0.0..TAU);
        let half = rng.gen_range(0.1..1.4);
        let d = [dir.cos(), dir.sin()];
        let w = Weight::sigma(rng.gen_range(-2.0..2.0));
        let narrow = fb_seminorm(&f, &w, &Cone::new(d, half, 2.0)?, &spec, [0.0; 2], None, &opts_d)?;
        let wide = fb_seminorm(&f, &w, &Cone::new(d, half * 1.5, 1.0)?, &spec, [0.0; 2], None, &opts_d)?;
        tally("cone_monotonicity", narrow.value <= wide.value * (1.0 + 1e-12));

        let s = rng.gen_range(-2.0..2.0);
        let lo = fb_seminorm(&f, &Weight::sigma(s), &Cone::full(1.0), &spec, [0.0; 2], None, &opts_d)?;
        let hi = fb_seminorm(&f, &Weight::sigma(s + rng.gen_range(0.0..2.0)), &Cone::full(1.0), &spec, [0.0; 2], None, &opts_d)?;
        tally("weight_monotonicity", lo.value <= hi.value * (1.0 + 1e-12));

        let phi = forward_transform(&random_bandlimited(g, rng.gen_range(1..6), rng.gen(), false));
        tally("young_ratio", young_check(&phi, &fh, &BfSpec::lp(1.0), &Weight::one(), 1.0)?.pass);
    }
    let g = Grid::new(1, 64)?;
    let family: Vec<(Weight, BfSpec)> = (0..4).map(|j| (Weight::sigma(j as f64), BfSpec::lp(1.0))).collect();
    for _ in 0..10 {
        let mut f = random_bandlimited(g, 20, rng.gen(), true);
        let at = rng.gen_range(0..g.len());
        if rng.gen_bool(0.6) {
            f = f.add(&generate(&mlwf_core::generators::delta(g.point(at)), g, 0)?)?;
        }
        let mut q = WavefrontQuery::new(vec![g.point(at), [PI, 0.0]], Weight::one(), BfSpec::lp(1.0));
        q.inner_radius = Some(4.0);
        let sup = wf_family(&f, &q, &family, FamilyMode::Sup)?;
        let inf = wf_family(&f, &q, &family, FamilyMode::Inf)?;
        let ok = sup.members.iter().all(|m| {
            m.entries.iter().enumerate().all(|(i, e)| (!inf.combined.entries[i].singular || e.singular) && (!e.singular || sup.combined.entries[i].singular))
        });
        tally("sup_inf_sandwich", ok);
    }
    let checks = tallies.iter().map(|(name, n, ok)| Check::eq(format!("{name}_failures"), (n - ok) as f64, 0.0)).collect();
    let details: Vec<_> = tallies.iter().map(|(name, n, ok)| json!({"property": name, "trials": n, "passed": ok})).collect();
    Ok(SuiteReport::new("invariants", checks, json!({"seed": opts.seed, "properties": details})))
}

pub const SUITES: [&str; 11] = [
    "calculus",
    "quantization",
    "reproducing",
    "char-sanity",
    "char-invariance",
    "inclusion",
    "elliptic",
    "smoothing",
    "wf-identity",
    "window-independence",
    "invariants",
];

pub fn run_suite(name: &str, opts: &SuiteOptions) -> CliResult<SuiteReport> {
    match name {
        "calculus" | "calculus-regression" => calculus(opts),
        "quantization" => quantization(opts),
        "reproducing" => reproducing(opts),
        "char-sanity" => char_sanity(opts),
        "char-invariance" => char_invariance(opts),
        "inclusion" => inclusion(opts),
        "elliptic" => elliptic(opts),
        "smoothing" => smoothing(opts),
        "wf-identity" => wf_identity(opts),
        "window-independence" => window_independence(opts),
        "invariants" => invariants(opts),
        other => Err(CliError::schema(format!("unknown suite '{other}' (known: {})", SUITES.join(", ")))),
    }
}
