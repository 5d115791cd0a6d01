//! Short-time Fourier transform, twisted convolution and modulation-space wave-front sets.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::fft::FftNd;
use crate::generators::periodized_gaussian;
use crate::geometry::{make_cutoff, Cone, CutoffSpec, ShellMap};
use crate::grid::{forward_transform, torus_dist, Grid, SampledField};
use crate::psido::CostLimits;
use crate::spaces::{
    decide, projection_norm, BfSpec, DecayOptions, NormKind, PhaseAccumulator, Selection, SeminormResult, Weight,
};
use crate::wavefront::{compare_reports, decide_entries, Comparison, Fan, WavefrontQuery, WavefrontReport, WfEntry};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WindowKind {
    /// Periodized `e^{-|x|^2 / (2 w^2)}`.
    Gaussian { width: f64 },
    /// Smooth compactly supported bump with the given radii.
    Bump { inner: f64, outer: f64 },
}

/// Window centered at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub kind: WindowKind,
    pub samples: SampledField,
}

impl Window {
    pub fn new(kind: WindowKind, grid: Grid) -> Result<Self> {
        let samples = match kind {
            WindowKind::Gaussian { width } => {
                if !(width > 0.0 && width < core::f64::consts::PI) {
                    return Err(param("window width must lie in (0, pi)"));
                }
                SampledField::from_real(grid, |x| {
                    let mut v = periodized_gaussian(x[0], 0.0, width);
                    if grid.dim() == 2 {
                        v *= periodized_gaussian(x[1], 0.0, width);
                    }
                    v
                })
            }
            WindowKind::Bump { inner, outer } => make_cutoff(&CutoffSpec::new([0.0; 2], inner, outer)?, grid)?,
        };
        Self::from_samples(kind, samples)
    }

    pub fn from_samples(kind: WindowKind, samples: SampledField) -> Result<Self> {
        if samples.max_abs() == 0.0 {
            return Err(param("window must be nonzero"));
        }
        Ok(Window { kind, samples })
    }

    pub fn grid(&self) -> Grid {
        self.samples.grid
    }
}

/// `V(x_j, k)` stored as `values[j * len + k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceField {
    pub grid: Grid,
    pub values: Vec<C64>,
}

impl PhaseSpaceField {
    pub fn zeros(grid: Grid) -> Self {
        PhaseSpaceField { grid, values: vec![C64::new(0.0, 0.0); grid.len() * grid.len()] }
    }

    pub fn at(&self, x: usize, k: usize) -> C64 {
        self.values[x * self.grid.len() + k]
    }

    pub fn row(&self, x: usize) -> &[C64] {
        let m = self.grid.len();
        &self.values[x * m..(x + 1) * m]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| f64::max(m, v.norm()))
    }
}

/// Computes single rows of the STFT with reusable buffers.
pub struct StftRows<'a> {
    f: &'a SampledField,
    window: &'a Window,
    fft: FftNd,
    scale: f64,
}

impl<'a> StftRows<'a> {
    pub fn new(f: &'a SampledField, window: &'a Window) -> Result<Self> {
        f.grid.same(&window.grid())?;
        let g = f.grid;
        let scale = g.cell() * libm::pow(TAU, -(g.dim() as f64) / 2.0);
        Ok(StftRows { f, window, fft: FftNd::new(g.dim(), g.n()), scale })
    }

    /// `F(f conj(phi(. - x_j)))` into `out`.
    pub fn row(&mut self, j: usize, out: &mut [C64]) {
        let g = self.f.grid;
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.f.values[i] * self.window.samples.values[g.shift_index(i, j, true)].conj();
        }
        self.fft.run(out, false);
        out.iter_mut().for_each(|v| *v *= self.scale);
    }
}

pub fn stft(f: &SampledField, window: &Window) -> Result<PhaseSpaceField> {
    let g = f.grid;
    let m = g.len();
    let mut rows = StftRows::new(f, window)?;
    let mut out = PhaseSpaceField::zeros(g);
    for j in 0..m {
        rows.row(j, &mut out.values[j * m..(j + 1) * m]);
    }
    Ok(out)
}

/// `(2 pi)^{-d/2} sum_y h^d sum_eta F(x - y, xi - eta) G(y, eta) e^{-i <x - y, eta>}`, summed directly.
pub fn twisted_convolution(a: &PhaseSpaceField, b: &PhaseSpaceField, limits: CostLimits) -> Result<PhaseSpaceField> {
    a.grid.same(&b.grid)?;
    let g = a.grid;
    if !limits.override_guard {
        let limit = if g.dim() == 1 { 64 } else { 16 };
        if g.n() > limit {
            return Err(Error::CostGuard(format!("twisted convolution limited to n <= {limit} (got {})", g.n())));
        }
    }
    let m = g.len();
    let scale = libm::pow(TAU, -(g.dim() as f64) / 2.0) * g.cell();
    // diff[xi * m + eta] = index of xi - eta
    let diff: Vec<usize> = (0..m * m).map(|i| g.shift_index(i / m, i % m, true)).collect();
    let mut out = PhaseSpaceField::zeros(g);
    let mut twisted = vec![C64::new(0.0, 0.0); m];
    for x in 0..m {
        let row = &mut out.values[x * m..(x + 1) * m];
        for y in 0..m {
            let xy = g.shift_index(x, y, true);
            let p = g.point(xy);
            let brow = &b.values[y * m..(y + 1) * m];
            for (e, t) in twisted.iter_mut().enumerate() {
                let k = g.freq_f(e);
                *t = brow[e] * C64::from_polar(1.0, -(p[0] * k[0] + p[1] * k[1]));
            }
            let arow = &a.values[xy * m..(xy + 1) * m];
            for (xi, o) in row.iter_mut().enumerate() {
                let d = &diff[xi * m..(xi + 1) * m];
                let mut s = C64::new(0.0, 0.0);
                for (t, &j) in twisted.iter().zip(d) {
                    s += arow[j] * t;
                }
                *o += s;
            }
        }
        row.iter_mut().for_each(|v| *v *= scale);
    }
    Ok(out)
}

/// `|V(x_j, k)| w(x_j, k) w_int(x_j, k)` rows; weights are tabulated once when they ignore `x`.
struct WeightedRows<'a> {
    grid: Grid,
    weight: &'a Weight,
    spec: &'a BfSpec,
    table: Option<Vec<f64>>,
}

impl<'a> WeightedRows<'a> {
    fn new(grid: Grid, weight: &'a Weight, spec: &'a BfSpec) -> Self {
        let spatial = weight.family.is_spatial() || spec.internal_weight.as_ref().is_some_and(|w| w.family.is_spatial());
        let table = (!spatial).then(|| (0..grid.len()).map(|k| Self::factor(weight, spec, [0.0; 2], grid.freq_f(k))).collect());
        WeightedRows { grid, weight, spec, table }
    }

    fn factor(weight: &Weight, spec: &BfSpec, x: [f64; 2], k: [f64; 2]) -> f64 {
        weight.eval(x, k) * spec.internal_weight.as_ref().map_or(1.0, |w| w.eval(x, k))
    }

    fn apply(&self, j: usize, row: &[C64], out: &mut [f64]) {
        match &self.table {
            Some(t) => out.iter_mut().zip(row).zip(t).for_each(|((o, v), w)| *o = v.norm() * w),
            None => {
                let x = self.grid.point(j);
                for (k, (o, v)) in out.iter_mut().zip(row).enumerate() {
                    *o = v.norm() * Self::factor(self.weight, self.spec, x, self.grid.freq_f(k));
                }
            }
        }
    }
}

/// Streams the STFT of `f` through an accumulator.
fn accumulate(f: &SampledField, window: &Window, w: &Weight, spec: &BfSpec, selections: Vec<Selection>) -> Result<Vec<(f64, Vec<f64>)>> {
    let g = f.grid;
    let m = g.len();
    let mut acc = PhaseAccumulator::new(spec.kind, &g, selections);
    let rows_w = WeightedRows::new(g, w, spec);
    let mut rows = StftRows::new(f, window)?;
    let mut buf = vec![C64::new(0.0, 0.0); m];
    let mut mag = vec![0.0; m];
    for j in 0..m {
        rows.row(j, &mut buf);
        rows_w.apply(j, &buf, &mut mag);
        acc.push_row(&mag);
    }
    Ok(acc.finish())
}

fn full_selection(g: &Grid) -> Selection {
    Selection { members: (0..g.len() as u32).map(|k| (k, None)).collect(), shells: 0 }
}

/// `|| V_phi f  w ||_B` over the whole phase space.
pub fn mod_norm(f: &SampledField, w: &Weight, spec: &BfSpec, window: &Window) -> Result<f64> {
    spec.validate()?;
    Ok(accumulate(f, window, w, spec, vec![full_selection(&f.grid)])?[0].0)
}

/// Cone semi-norm `|| V_phi f  w  1_cone ||_B`, with shells over the frequency radius.
pub fn mod_seminorm(
    f: &SampledField,
    w: &Weight,
    cone: &Cone,
    spec: &BfSpec,
    window: &Window,
    reference: Option<f64>,
    opts: &DecayOptions,
) -> Result<SeminormResult> {
    spec.validate()?;
    let g = f.grid;
    let shells = ShellMap::new(&g, cone.inner_radius.max(1.0))?;
    let members: Vec<(u32, Option<u16>)> = cone
        .mask(&g)
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(k, _)| (k as u32, shells.shell_of[k]))
        .collect();
    if members.is_empty() {
        let mut r = decide(0.0, Vec::new(), 0.0, opts);
        r.degenerate = true;
        return Ok(r);
    }
    let sel = Selection { members, shells: shells.count };
    let res = accumulate(f, window, w, spec, vec![sel, full_selection(&g)])?;
    let reference = reference.unwrap_or(res[1].0);
    let (value, shell_norms) = res[0].clone();
    Ok(decide(value, shell_norms, reference, opts))
}

/// Entries for one base point, modulation version.
pub fn wf_mod_point(f: &SampledField, q: &WavefrontQuery, fan: &Fan, window: &Window, point: usize, reference: f64) -> Result<Vec<WfEntry>> {
    let g = f.grid;
    let x0 = q.base_points.get(point).copied().ok_or_else(|| param("base point index out of range"))?;
    let spec = q.cutoff_at(&g, x0)?;
    let norms = |s: &CutoffSpec| -> Result<Vec<(f64, Vec<f64>)>> {
        let loc = make_cutoff(s, g)?.mul(f)?;
        accumulate(&loc, window, &q.weight, &q.space, fan.selections())
    };
    let full = norms(&spec)?;
    let half = if q.half_probe { Some(norms(&spec.scaled(0.5))?) } else { None };
    let empty: Vec<bool> = fan.members.iter().map(|m| m.is_empty()).collect();
    Ok(decide_entries(point, full, half, &empty, reference, &q.decay))
}

pub fn wf_modulation(f: &SampledField, q: &WavefrontQuery, window: &Window) -> Result<WavefrontReport> {
    let g = f.grid;
    q.validate(&g)?;
    let fan = Fan::new(&g, q)?;
    let reference = mod_norm(f, &q.weight, &q.space, window)?;
    let mut entries = Vec::new();
    for p in 0..q.base_points.len() {
        entries.extend(wf_mod_point(f, q, &fan, window, p, reference)?);
    }
    Ok(WavefrontReport { grid: g, query: q.clone(), entries })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowIndependence {
    pub jaccard: f64,
    pub comparison: Comparison,
    pub first: WavefrontReport,
    pub second: WavefrontReport,
}

pub fn window_independence_check(f: &SampledField, q: &WavefrontQuery, w1: &Window, w2: &Window) -> Result<WindowIndependence> {
    let first = wf_modulation(f, q, w1)?;
    let second = wf_modulation(f, q, w2)?;
    let comparison = compare_reports(&first, &second, 1)?;
    Ok(WindowIndependence { jaccard: comparison.jaccard, comparison, first, second })
}

/// One-block space induced by a two-block space on the frequency side of `phi (x) f^`.
pub fn projected_space(spec2d: &BfSpec) -> BfSpec {
    let kind = match spec2d.kind {
        NormKind::Lp { p } => NormKind::Lp { p },
        NormKind::Lpq1 { q, .. } => NormKind::Lp { p: q },
        NormKind::Lpq2 { p, .. } => NormKind::Lp { p },
    };
    BfSpec { kind, internal_weight: spec2d.internal_weight.clone() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceSetup {
    /// Support ball of the admissible fields.
    pub support_center: [f64; 2],
    pub support_radius: f64,
    /// Cutoff realizing the projection space.
    pub projector: CutoffSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub fb_norm: f64,
    pub mod_norm: f64,
    #[serde(with = "crate::serde_float")]
    pub ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wf: Option<WfIdentity>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WfIdentity {
    pub fourier: WavefrontReport,
    pub modulation: WavefrontReport,
    pub forward: Comparison,
    pub backward: Comparison,
    pub jaccard: f64,
}

fn check_support(f: &SampledField, setup: &EquivalenceSetup) -> Result<()> {
    if setup.support_radius > core::f64::consts::FRAC_PI_4 + 1e-12 {
        return Err(param("support radius must not exceed pi/4"));
    }
    let g = f.grid;
    let c = if g.dim() == 1 { [setup.support_center[0], 0.0] } else { setup.support_center };
    let tol = 1e-12 * f.max_abs();
    for (i, v) in f.values.iter().enumerate() {
        if v.norm() > tol && torus_dist(g.point(i), c) > setup.support_radius {
            return Err(param("field is not supported in the prescribed ball"));
        }
    }
    Ok(())
}

/// `||phi (x) f^ w0||_B` with `w0 = w(x0, .)`, the projection-space norm.
pub fn projection_space_norm(f: &SampledField, w: &Weight, spec2d: &BfSpec, projector: &CutoffSpec, x0: [f64; 2]) -> Result<f64> {
    let g = f.grid;
    let mut fh = forward_transform(f);
    for (k, c) in fh.coeffs.iter_mut().enumerate() {
        *c *= w.eval(x0, g.freq_f(k));
    }
    let phi = make_cutoff(projector, g)?;
    projection_norm(spec2d, &phi, &fh)
}

/// Both sides of the local norm equivalence, optionally with the wave-front comparison.
pub fn fb_mod_equivalence(
    f: &SampledField,
    w: &Weight,
    spec2d: &BfSpec,
    window: &Window,
    setup: &EquivalenceSetup,
    q: Option<&WavefrontQuery>,
) -> Result<EquivalenceReport> {
    check_support(f, setup)?;
    let fb = projection_space_norm(f, w, spec2d, &setup.projector, setup.support_center)?;
    let md = mod_norm(f, w, spec2d, window)?;
    let ratio = if fb == 0.0 && md == 0.0 { 1.0 } else { md / fb };
    let wf = match q {
        Some(q) => Some(wf_identity(f, q, window)?),
        None => None,
    };
    Ok(EquivalenceReport { fb_norm: fb, mod_norm: md, ratio, wf })
}

/// Fourier-Banach (projected space) against modulation wave-front sets.
pub fn wf_identity(f: &SampledField, q: &WavefrontQuery, window: &Window) -> Result<WfIdentity> {
    let mut qf = q.clone();
    qf.space = projected_space(&q.space);
    let fourier = crate::wavefront::wf_estimate(f, &qf)?;
    let modulation = wf_modulation(f, q, window)?;
    let forward = compare_reports(&fourier, &modulation, 1)?;
    let backward = compare_reports(&modulation, &fourier, 1)?;
    let jaccard = forward.jaccard;
    Ok(WfIdentity { fourier, modulation, forward, backward, jaccard })
}

/// Spread `max / min` of equivalence ratios over a probe family.
pub fn ratio_spread(ratios: &[f64]) -> f64 {
    let finite: Vec<f64> = ratios.iter().copied().filter(|r| r.is_finite() && *r > 0.0).collect();
    if finite.len() != ratios.len() || finite.is_empty() {
        return f64::INFINITY;
    }
    let max = finite.iter().copied().fold(0.0, f64::max);
    let min = finite.iter().copied().fold(f64::INFINITY, f64::min);
    max / min
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::random_bandlimited;

    #[test]
    fn isometry_of_the_full_cone() {
        let g = Grid::new(1, 64).unwrap();
        let f = random_bandlimited(g, 10, 3, false);
        let win = Window::new(WindowKind::Gaussian { width: 0.7 }, g).unwrap();
        let v = mod_norm(&f, &Weight::one(), &BfSpec::lp(2.0), &win).unwrap();
        let want = f.l2_norm() * win.samples.l2_norm();
        assert!((v - want).abs() <= 1e-10 * want);
    }

    #[test]
    fn point_mass_identity() {
        let g = Grid::new(1, 16).unwrap();
        let f = random_bandlimited(g, 5, 1, false);
        let win = Window::new(WindowKind::Gaussian { width: 0.5 }, g).unwrap();
        let a = stft(&f, &win).unwrap();
        let mut delta = PhaseSpaceField::zeros(g);
        delta.values[0] = C64::new(libm::pow(TAU, 0.5) / g.cell(), 0.0);
        let c = twisted_convolution(&a, &delta, CostLimits::default()).unwrap();
        let err = c.values.iter().zip(&a.values).fold(0.0, |m, (u, v)| f64::max(m, (u - v).norm()));
        assert!(err < 1e-12 * a.max_abs());
    }
}
