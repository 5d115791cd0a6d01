use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{Cone, ShellMap};
use crate::grid::{forward_transform, Grid, SampledField, SpectralField};
use crate::spaces::bf::{block_norm, BfSpec, Layout, NormKind, Reducer};
use crate::spaces::weight::Weight;

/// Thresholds turning shell norms into a regular/singular decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecayOptions {
    pub eta: f64,
    pub eps_abs: f64,
    /// Smallness relative to the reference norm.
    pub eps_rel: f64,
    /// Shell norms below `noise_floor_rel * reference` are numerically zero.
    pub noise_floor_rel: f64,
}

impl Default for DecayOptions {
    fn default() -> Self {
        DecayOptions { eta: 1.0, eps_abs: 1e-10, eps_rel: 0.0, noise_floor_rel: 1e-13 }
    }
}

pub const SHELL_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeminormResult {
    #[serde(with = "crate::serde_float")]
    pub value: f64,
    pub effectively_infinite: bool,
    pub shell_norms: Vec<f64>,
    /// Least-squares slope of `log2` shell norms; NaN with fewer than three shells,
    /// `-inf` when every shell is numerically zero.
    #[serde(with = "crate::serde_float")]
    pub decay_slope: f64,
    pub regular: bool,
    pub small: bool,
    pub degenerate: bool,
}

/// Least-squares slope of `ys` against `0, 1, 2, ...`.
pub fn lsq_slope(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    let xm = (n - 1.0) / 2.0;
    let ym = ys.iter().sum::<f64>() / n;
    let (mut num, mut den) = (0.0, 0.0);
    for (i, y) in ys.iter().enumerate() {
        let dx = i as f64 - xm;
        num += dx * (y - ym);
        den += dx * dx;
    }
    num / den
}

pub fn decide(value: f64, shell_norms: Vec<f64>, reference: f64, opts: &DecayOptions) -> SeminormResult {
    let small = value < f64::max(opts.eps_abs, opts.eps_rel * reference);
    let floor = f64::max(SHELL_FLOOR, opts.noise_floor_rel * reference);
    let decay_slope = if shell_norms.len() < 3 {
        f64::NAN
    } else if shell_norms.iter().all(|&s| s <= floor) {
        f64::NEG_INFINITY
    } else {
        let logs: Vec<f64> = shell_norms.iter().map(|&s| libm::log2(f64::max(s, floor))).collect();
        lsq_slope(&logs)
    };
    let decays = !decay_slope.is_nan() && decay_slope <= -opts.eta;
    SeminormResult {
        value,
        effectively_infinite: !(value <= 1e300),
        shell_norms,
        decay_slope,
        regular: small || decays,
        small,
        degenerate: false,
    }
}

fn degenerate() -> SeminormResult {
    SeminormResult {
        value: 0.0,
        effectively_infinite: false,
        shell_norms: Vec::new(),
        decay_slope: f64::NAN,
        regular: true,
        small: true,
        degenerate: true,
    }
}

/// Weighted spectral magnitudes `|f^(k)| w(x_ref, k) w_int(x_ref, k)`.
pub fn weighted_magnitudes(spec: &SpectralField, w: &Weight, bf: &BfSpec, x_ref: [f64; 2]) -> Vec<f64> {
    let g = spec.grid;
    spec.coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let k = g.freq_f(i);
            let int = bf.internal_weight.as_ref().map_or(1.0, |iw| iw.eval(x_ref, k));
            c.norm() * w.eval(x_ref, k) * int
        })
        .collect()
}

/// Spectral-layout norm of `mag` restricted to `keep`.
pub fn masked_norm(kind: NormKind, grid: &Grid, mag: &[f64], keep: impl Fn(usize) -> bool) -> f64 {
    if let NormKind::Lp { p } = kind {
        let mut r = Reducer::new(p);
        for (i, &v) in mag.iter().enumerate() {
            if keep(i) {
                r.push(v, 1.0);
            }
        }
        return r.value();
    }
    let masked: Vec<f64> = mag.iter().enumerate().map(|(i, &v)| if keep(i) { v } else { 0.0 }).collect();
    block_norm(kind, &Layout::Spectral { grid: *grid, x_ref: [0.0; 2] }, &masked)
}

/// Cone semi-norm of precomputed weighted magnitudes.
pub fn cone_seminorm(
    grid: &Grid,
    mag: &[f64],
    mask: &[bool],
    shells: &ShellMap,
    kind: NormKind,
    reference: f64,
    opts: &DecayOptions,
) -> SeminormResult {
    if !mask.iter().any(|&m| m) {
        return degenerate();
    }
    let value = masked_norm(kind, grid, mag, |i| mask[i]);
    let shell_norms = (0..shells.count)
        .map(|m| masked_norm(kind, grid, mag, |i| mask[i] && shells.shell_of[i] == Some(m as u16)))
        .collect();
    decide(value, shell_norms, reference, opts)
}

/// `|f|_{FB(w, cone)}` with the weight's spatial slot frozen at `x_ref`.
///
/// `reference` defaults to the full-lattice weighted norm of `f` itself.
pub fn fb_seminorm(
    f: &SampledField,
    w: &Weight,
    cone: &Cone,
    spec: &BfSpec,
    x_ref: [f64; 2],
    reference: Option<f64>,
    opts: &DecayOptions,
) -> Result<SeminormResult> {
    spec.validate()?;
    let g = f.grid;
    let mag = weighted_magnitudes(&forward_transform(f), w, spec, x_ref);
    let reference = reference.unwrap_or_else(|| masked_norm(spec.kind, &g, &mag, |_| true));
    let mask = cone.mask(&g);
    let shells = ShellMap::new(&g, f64::max(cone.inner_radius, 1.0))?;
    Ok(cone_seminorm(&g, &mag, &mask, &shells, spec.kind, reference, opts))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_line() {
        assert!((lsq_slope(&[1.0, -1.0, -3.0, -5.0]) + 2.0).abs() < 1e-14);
    }

    #[test]
    fn all_floor_is_minus_infinity() {
        let r = decide(1e-20, alloc::vec![1e-30, 0.0, 1e-25], 1.0, &DecayOptions::default());
        assert_eq!(r.decay_slope, f64::NEG_INFINITY);
        assert!(r.regular);
    }

    #[test]
    fn few_shells_fall_back_to_smallness() {
        let r = decide(5.0, alloc::vec![1.0, 0.1], 10.0, &DecayOptions::default());
        assert!(r.decay_slope.is_nan());
        assert!(!r.regular);
    }
}
