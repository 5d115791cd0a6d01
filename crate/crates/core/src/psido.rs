//! Applying pseudo-differential operators on the torus.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::fft::FftNd;
use crate::geometry::{direction_fan, make_cutoff, Cone, CutoffSpec};
use crate::grid::{forward_transform, inverse_transform, Grid, SampledField, SpectralField, Transformer};
use crate::spaces::{fb_seminorm, BfSpec, DecayOptions, SeminormResult, Weight};
use crate::symbol::{requantize, OffGrid, Repr, Symbol};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Spectral,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CostLimits {
    /// Skip the size guard on direct double sums and kernels.
    pub override_guard: bool,
}

impl CostLimits {
    fn check_direct(&self, g: &Grid, dense: bool) -> Result<()> {
        if self.override_guard {
            return Ok(());
        }
        let limit = match (g.dim(), dense) {
            (1, _) => 64,
            (_, false) => 32,
            (_, true) => 16,
        };
        if g.n() > limit {
            return Err(Error::CostGuard(format!(
                "direct double sum limited to n <= {limit} in dimension {} (got {})",
                g.dim(),
                g.n()
            )));
        }
        Ok(())
    }
}

/// `e^{i 2 pi m / n}` for `m = 0..n`.
fn roots(n: usize) -> Vec<C64> {
    (0..n).map(|m| C64::from_polar(1.0, TAU * m as f64 / n as f64)).collect()
}

/// `(2 pi)^{-d/2} sum_k a(x, k) f^(k) e^{i k x}` at every grid point.
pub fn apply_kn(a: &Symbol, f: &SampledField) -> Result<SampledField> {
    a.grid.same(&f.grid)?;
    let g = a.grid;
    let mut tr = Transformer::new(g);
    let fh = tr.forward(f)?;
    match &a.repr {
        Repr::Separable(terms) => {
            let mut out = vec![C64::new(0.0, 0.0); g.len()];
            let mut buf = vec![C64::new(0.0, 0.0); g.len()];
            for t in terms {
                for (i, b) in buf.iter_mut().enumerate() {
                    *b = fh.coeffs[i] * t.mult.at(&g, i);
                }
                tr.inverse_in_place(&mut buf);
                for ((o, b), c) in out.iter_mut().zip(&buf).zip(&t.coeff.values) {
                    *o += b * c;
                }
            }
            Ok(SampledField { grid: g, values: out })
        }
        Repr::Dense(table) => {
            let m = g.len();
            let n = g.n();
            let w = roots(n);
            let scale = libm::pow(TAU, -(g.dim() as f64) / 2.0);
            let wrapped: Vec<[usize; 2]> = (0..m)
                .map(|k| {
                    let kk = g.freq(k);
                    [kk[0].rem_euclid(n as i64) as usize, kk[1].rem_euclid(n as i64) as usize]
                })
                .collect();
            let values = (0..m)
                .map(|x| {
                    let j = g.axes(x);
                    let mut acc = C64::new(0.0, 0.0);
                    for k in 0..m {
                        let c = fh.coeffs[k];
                        if c == C64::new(0.0, 0.0) {
                            continue;
                        }
                        let e = (wrapped[k][0] * j[0] + wrapped[k][1] * j[1]) % n;
                        acc += table[k * m + x] * c * w[e];
                    }
                    acc * scale
                })
                .collect();
            Ok(SampledField { grid: g, values })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Applied {
    pub field: SampledField,
    pub method: Method,
    /// The spectral path was requested but the symbol has no exact form.
    pub fell_back: bool,
}

/// `Op_t(a) f`.
pub fn apply_t(a: &Symbol, t: f64, f: &SampledField, method: Method, limits: CostLimits) -> Result<Applied> {
    a.grid.same(&f.grid)?;
    if !t.is_finite() {
        return Err(param("quantization parameter must be finite"));
    }
    if t == 0.0 && method == Method::Spectral {
        return Ok(Applied { field: apply_kn(a, f)?, method, fell_back: false });
    }
    match (method, a.degree()) {
        (Method::Spectral, Some(deg)) => {
            let b = requantize(a, t, 0.0, deg + 1)?;
            Ok(Applied { field: apply_kn(&b, f)?, method, fell_back: false })
        }
        (Method::Spectral, None) => {
            Ok(Applied { field: apply_direct(a, t, f, limits)?, method: Method::Direct, fell_back: true })
        }
        (Method::Direct, _) => Ok(Applied { field: apply_direct(a, t, f, limits)?, method, fell_back: false }),
    }
}

/// Lattice offset `y - x` as a vector in `[-pi, pi)^d`, and its index.
fn offset(g: &Grid, x: usize, y: usize) -> ([f64; 2], usize) {
    let n = g.n() as i64;
    let h = g.spacing();
    let jx = g.axes(x);
    let jy = g.axes(y);
    let mut v = [0.0; 2];
    let mut idx = [0usize; 2];
    for ax in 0..g.dim() {
        let d = (jy[ax] as i64 - jx[ax] as i64).rem_euclid(n);
        idx[ax] = d as usize;
        let centered = if d >= n / 2 { d - n } else { d };
        v[ax] = centered as f64 * h;
    }
    (v, g.flat(idx))
}

/// `sum_k m(k) e^{i k x_j}` at every lattice offset `x_j`.
fn inner_sums(g: &Grid, mult: &[C64]) -> Vec<C64> {
    let mut buf = mult.to_vec();
    FftNd::new(g.dim(), g.n()).run(&mut buf, true);
    buf
}

/// Discretized double sum for `Op_t(a) f` with the symbol evaluated at `x + t (y - x)`.
fn apply_direct(a: &Symbol, t: f64, f: &SampledField, limits: CostLimits) -> Result<SampledField> {
    let g = a.grid;
    let dense = matches!(a.repr, Repr::Dense(_));
    limits.check_direct(&g, dense)?;
    let m = g.len();
    let off = OffGrid::new(a);
    let scale = libm::pow(TAU, -(g.dim() as f64)) * g.cell();
    let mut out = vec![C64::new(0.0, 0.0); m];
    match off.separable_parts() {
        Some(parts) => {
            // inner k-sums depend only on x - y; the unnormalized inverse DFT gives them at y - x
            let sums: Vec<Vec<C64>> = parts.iter().map(|(_, mult)| inner_sums(&g, mult)).collect();
            for (x, o) in out.iter_mut().enumerate() {
                let px = g.point(x);
                let mut acc = C64::new(0.0, 0.0);
                for y in 0..m {
                    let (d, di) = offset(&g, x, y);
                    let z = [px[0] + t * d[0], px[1] + t * d[1]];
                    // e^{i k (x - y)} = e^{-i k d}: index of -d
                    let neg = g.shift_index(0, di, true);
                    let mut s = C64::new(0.0, 0.0);
                    for ((poly, _), sum) in parts.iter().zip(&sums) {
                        s += poly.eval(z) * sum[neg];
                    }
                    acc += s * f.values[y];
                }
                *o = acc * scale;
            }
        }
        None => {
            let freqs: Vec<[f64; 2]> = (0..m).map(|k| g.freq_f(k)).collect();
            for (x, o) in out.iter_mut().enumerate() {
                let px = g.point(x);
                let mut acc = C64::new(0.0, 0.0);
                for y in 0..m {
                    let (d, _) = offset(&g, x, y);
                    let z = [px[0] + t * d[0], px[1] + t * d[1]];
                    let mut s = C64::new(0.0, 0.0);
                    for (k, kf) in freqs.iter().enumerate() {
                        let ph = -(kf[0] * d[0] + kf[1] * d[1]);
                        s += off.eval(z, k) * C64::from_polar(1.0, ph);
                    }
                    acc += s * f.values[y];
                }
                *o = acc * scale;
            }
        }
    }
    Ok(SampledField { grid: g, values: out })
}

/// Sampled Schwartz kernel `K(x, y)`, applied by `sum_y K(x, y) f(y) h^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    pub grid: Grid,
    /// `values[x * len + y]`.
    pub values: Vec<C64>,
}

impl Kernel {
    pub fn at(&self, x: usize, y: usize) -> C64 {
        self.values[x * self.grid.len() + y]
    }

    pub fn apply(&self, f: &SampledField) -> Result<SampledField> {
        self.grid.same(&f.grid)?;
        let m = self.grid.len();
        let h = self.grid.cell();
        let values = (0..m)
            .map(|x| self.values[x * m..(x + 1) * m].iter().zip(&f.values).map(|(k, v)| k * v).sum::<C64>() * h)
            .collect();
        Ok(SampledField { grid: self.grid, values })
    }
}

/// `K(x, y) = (2 pi)^{-d/2} A(x + t (y - x), x - y)` where `A` is the inverse transform of `a` in `xi`.
///
/// `A` is tabulated on grid x grid and resampled in its first slot by trigonometric interpolation.
pub fn kernel_t(a: &Symbol, t: f64, limits: CostLimits) -> Result<Kernel> {
    let g = a.grid;
    limits.check_direct(&g, true)?;
    if !t.is_finite() {
        return Err(param("quantization parameter must be finite"));
    }
    let m = g.len();
    // slices[delta][x'] = (2 pi)^{-d/2} sum_k a(x', k) e^{i k delta}
    let table = a.to_dense()?;
    let mut by_x = vec![C64::new(0.0, 0.0); m * m];
    let mut col = vec![C64::new(0.0, 0.0); m];
    let mut fft = FftNd::new(g.dim(), g.n());
    let s = libm::pow(TAU, -(g.dim() as f64) / 2.0);
    for x in 0..m {
        for k in 0..m {
            col[k] = table[k * m + x];
        }
        fft.run(&mut col, true);
        for (d, v) in col.iter().enumerate() {
            by_x[d * m + x] = v * s;
        }
    }
    let polys: Vec<crate::grid::TrigPoly> = (0..m)
        .map(|d| {
            let f = SampledField { grid: g, values: by_x[d * m..(d + 1) * m].to_vec() };
            crate::grid::TrigPoly::from_field(&f, 1e-15)
        })
        .collect();
    let mut values = vec![C64::new(0.0, 0.0); m * m];
    for x in 0..m {
        let px = g.point(x);
        for y in 0..m {
            let (d, di) = offset(&g, x, y);
            let z = [px[0] + t * d[0], px[1] + t * d[1]];
            let neg = g.shift_index(0, di, true);
            values[x * m + y] = polys[neg].eval(z) * s;
        }
    }
    Ok(Kernel { grid: g, values })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeOptions {
    /// Number of direction bins (ignored in one dimension).
    pub directions: usize,
    /// Cone half-angle as a multiple of the bin half-width.
    pub overlap: f64,
    /// Inner cone radius; `None` means `n / 16`.
    pub radius: Option<f64>,
    pub decay: DecayOptions,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions { directions: 16, overlap: 1.5, radius: None, decay: DecayOptions::default() }
    }
}

impl ProbeOptions {
    pub fn cones(&self, g: &Grid) -> Result<Vec<Cone>> {
        let r = self.radius.unwrap_or(g.n() as f64 / 16.0).max(1.0);
        let dirs = direction_fan(g.dim(), self.directions);
        let half = if g.dim() == 1 { core::f64::consts::FRAC_PI_2 } else { self.overlap * core::f64::consts::PI / dirs.len() as f64 };
        dirs.iter().map(|&d| Cone::new(d, half, r)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingReport {
    pub output: SampledField,
    pub reference: f64,
    pub results: Vec<SeminormResult>,
}

impl SmoothingReport {
    pub fn all_regular(&self) -> bool {
        self.results.iter().all(|r| r.regular)
    }

    pub fn worst_slope(&self) -> f64 {
        self.results.iter().map(|r| r.decay_slope).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `phi1 * Op(a)(phi2 f)` for disjointly supported cutoffs, with cone semi-norms over a fan.
pub fn smoothing_probe(
    a: &Symbol,
    phi1: &CutoffSpec,
    phi2: &CutoffSpec,
    f: &SampledField,
    w: &Weight,
    spec: &BfSpec,
    opts: &ProbeOptions,
) -> Result<SmoothingReport> {
    a.grid.same(&f.grid)?;
    if !phi1.disjoint_from(phi2) {
        return Err(param("cutoff supports overlap"));
    }
    let g = a.grid;
    let c1 = make_cutoff(phi1, g)?;
    let c2 = make_cutoff(phi2, g)?;
    let inner = apply_kn(a, &c2.mul(f)?)?;
    let out = c1.mul(&inner)?;
    let reference = weighted_norm(&inner, w, spec);
    let x_ref = phi1.center;
    let results = opts
        .cones(&g)?
        .iter()
        .map(|cone| fb_seminorm(&out, w, cone, spec, x_ref, Some(reference), &opts.decay))
        .collect::<Result<Vec<_>>>()?;
    Ok(SmoothingReport { output: out, reference, results })
}

fn weighted_norm(f: &SampledField, w: &Weight, spec: &BfSpec) -> f64 {
    let spec_f: SpectralField = forward_transform(f);
    let mag = crate::spaces::seminorm::weighted_magnitudes(&spec_f, w, spec, [0.0; 2]);
    crate::spaces::seminorm::masked_norm(spec.kind, &f.grid, &mag, |_| true)
}

/// `Op(a) f` for a symbol depending on `xi` only, as a plain Fourier multiplier.
pub fn apply_multiplier(mult: &[C64], f: &SampledField) -> Result<SampledField> {
    if mult.len() != f.grid.len() {
        return Err(Error::LengthMismatch { expected: f.grid.len(), got: mult.len() });
    }
    let mut s = forward_transform(f);
    s.coeffs.iter_mut().zip(mult).for_each(|(c, m)| *c *= m);
    Ok(inverse_transform(&s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::SymbolClass;

    fn probe(g: Grid) -> SampledField {
        SampledField::from_fn(g, |x| {
            C64::new(libm::cos(3.0 * x[0]) + 0.3 * libm::sin(x[0] - 2.0 * x[1]), 0.5 * libm::cos(5.0 * x[0] + x[1]))
        })
    }

    fn sym(g: Grid) -> Symbol {
        let c1 = SampledField::from_fn(g, |x| C64::new(0.0, 2.0 * x[0]).exp() + 0.5);
        let c0 = SampledField::from_fn(g, |x| C64::new(libm::cos(x[0]), 0.0));
        Symbol::polynomial(g, vec![([1, 0], c1), ([0, 0], c0)], SymbolClass::default()).unwrap()
    }

    #[test]
    fn derivative_of_single_mode() {
        let g = Grid::new(1, 32).unwrap();
        let a = Symbol::polynomial(g, vec![([1, 0], SampledField::from_real(g, |_| 1.0))], SymbolClass::default()).unwrap();
        let f = SampledField::from_fn(g, |x| C64::new(0.0, 3.0 * x[0]).exp());
        let out = apply_kn(&a, &f).unwrap();
        assert!(out.sub(&f.scale(C64::new(3.0, 0.0))).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn dense_and_separable_paths_agree() {
        let g = Grid::new(1, 32).unwrap();
        let a = sym(g);
        let f = probe(g);
        let u = apply_kn(&a, &f).unwrap();
        let v = apply_kn(&a.densified().unwrap(), &f).unwrap();
        assert!(u.sub(&v).unwrap().max_abs() < 1e-11);
    }

    #[test]
    fn direct_sum_matches_kn_at_zero() {
        let g = Grid::new(1, 32).unwrap();
        let a = sym(g);
        let f = probe(g);
        let u = apply_kn(&a, &f).unwrap();
        let v = apply_t(&a, 0.0, &f, Method::Direct, CostLimits::default()).unwrap().field;
        assert!(u.sub(&v).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn direct_and_spectral_agree_for_t_one() {
        let g = Grid::new(1, 32).unwrap();
        let a = sym(g);
        let f = probe(g);
        let u = apply_t(&a, 1.0, &f, Method::Spectral, CostLimits::default()).unwrap().field;
        let v = apply_t(&a, 1.0, &f, Method::Direct, CostLimits::default()).unwrap().field;
        assert!(u.sub(&v).unwrap().l2_norm() / u.l2_norm() < 1e-10);
    }

    #[test]
    fn kernel_of_identity_reproduces() {
        let g = Grid::new(1, 16).unwrap();
        let a = Symbol::constant(g, C64::new(1.0, 0.0));
        let k = kernel_t(&a, 0.0, CostLimits::default()).unwrap();
        let f = probe(g);
        assert!(k.apply(&f).unwrap().sub(&f).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn guard_refuses_large_direct_sums() {
        let g = Grid::new(1, 128).unwrap();
        let a = sym(g);
        let f = probe(g);
        assert!(matches!(apply_t(&a, 1.0, &f, Method::Direct, CostLimits::default()), Err(Error::CostGuard(_))));
    }
}
