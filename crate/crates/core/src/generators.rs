//! Synthetic test fields with known singularities.

use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::geometry::{smooth_step, CutoffSpec};
use crate::grid::{forward_transform, inverse_transform, norm2, torus_dist, Grid, SampledField, SpectralField};
use crate::C64;

/// Spectral taper: full weight below `lo * nyquist`, zero above `hi * nyquist`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Taper {
    pub lo: f64,
    pub hi: f64,
}

impl Taper {
    pub fn validate(&self) -> Result<()> {
        if !(self.lo > 0.0 && self.lo < self.hi && self.hi <= 1.0) {
            return Err(param("taper needs 0 < lo < hi <= 1"));
        }
        Ok(())
    }

    pub fn factor(&self, grid: &Grid, k: [f64; 2]) -> f64 {
        let r = norm2(k) / grid.nyquist();
        1.0 - smooth_step((r - self.lo) / (self.hi - self.lo))
    }

    pub fn apply(&self, f: &SampledField) -> SampledField {
        let g = f.grid;
        let mut s = forward_transform(f);
        for (i, c) in s.coeffs.iter_mut().enumerate() {
            *c *= self.factor(&g, g.freq_f(i));
        }
        inverse_transform(&s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FieldKind {
    /// Periodized `e^{-|x - c|^2 / (2 w^2)}`.
    GaussianBump { center: [f64; 2], width: f64 },
    /// Lattice point mass with flat spectrum of modulus `(2 pi)^{-d/2}`.
    DeltaSurrogate { center: [f64; 2] },
    /// Indicator of `(a, b)` in one dimension, built from its exact Fourier series.
    #[serde(rename = "jump-1d")]
    Jump1d { a: f64, b: f64 },
    /// Sampled indicator of the strip `a < x1 < b`.
    #[serde(rename = "line-jump-2d")]
    LineJump2d { a: f64, b: f64 },
    /// `cos(u^2) 1_{0 < u < length}` with `u = x1 - start`.
    Chirp { start: f64, length: f64 },
    /// Random coefficients for `|k|_inf <= band`.
    RandomBandlimited {
        band: u32,
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default)]
        real: bool,
    },
    /// `e^{i <frequency, x>}` times a smooth bump.
    ModulatedBump { cutoff: CutoffSpec, frequency: [f64; 2] },
    SumOf { parts: Vec<FieldSpec> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    #[serde(flatten)]
    pub kind: FieldKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub taper: Option<Taper>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

impl FieldSpec {
    pub fn new(kind: FieldKind) -> Self {
        FieldSpec { kind, taper: None, scale: None }
    }

    pub fn tapered(mut self, lo: f64, hi: f64) -> Self {
        self.taper = Some(Taper { lo, hi });
        self
    }

    pub fn sum(parts: Vec<FieldSpec>) -> Self {
        Self::new(FieldKind::SumOf { parts })
    }
}

fn center_of(g: &Grid, c: [f64; 2]) -> [f64; 2] {
    if g.dim() == 1 {
        [c[0], 0.0]
    } else {
        c
    }
}

/// Periodized Gaussian profile along one axis.
pub fn periodized_gaussian(x: f64, center: f64, width: f64) -> f64 {
    (-4..=4)
        .map(|m| {
            let d = x - center + TAU * m as f64;
            libm::exp(-d * d / (2.0 * width * width))
        })
        .sum()
}

/// Fourier coefficients of the indicator of `(a, b)` on the circle (transform normalization).
pub fn step_coefficient(k: i64, a: f64, b: f64) -> C64 {
    let s = 1.0 / libm::sqrt(TAU);
    if k == 0 {
        return C64::new((b - a) * s, 0.0);
    }
    let kf = k as f64;
    let ea = C64::from_polar(1.0, -kf * a);
    let eb = C64::from_polar(1.0, -kf * b);
    (ea - eb) / C64::new(0.0, kf) * s
}

/// Random band-limited field from a seeded stream.
pub fn random_bandlimited(grid: Grid, band: u32, seed: u64, real: bool) -> SampledField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = band as i64;
    let nyq = (grid.n() / 2) as i64;
    let coeffs = (0..grid.len())
        .map(|i| {
            let k = grid.freq(i);
            let inside = k[0].abs() <= b && k[1].abs() <= b && k[0].abs() < nyq && k[1].abs() < nyq;
            // draw for every index so the stream does not depend on the band
            let v = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if inside {
                v
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect();
    let spec = SpectralField { grid, coeffs };
    let f = inverse_transform(&spec);
    if real {
        SampledField { grid, values: f.values.iter().map(|v| C64::new(v.re, 0.0)).collect() }
    } else {
        f
    }
}

/// Evaluate a generator spec; `default_seed` is used when the spec carries none.
pub fn generate(spec: &FieldSpec, grid: Grid, default_seed: u64) -> Result<SampledField> {
    let mut f = match &spec.kind {
        FieldKind::GaussianBump { center, width } => {
            if !(*width > 0.0 && *width < PI) {
                return Err(param("gaussian width must lie in (0, pi)"));
            }
            let c = center_of(&grid, *center);
            SampledField::from_real(grid, |x| {
                let mut v = periodized_gaussian(x[0], c[0], *width);
                if grid.dim() == 2 {
                    v *= periodized_gaussian(x[1], c[1], *width);
                }
                v
            })
        }
        FieldKind::DeltaSurrogate { center } => {
            let mut f = SampledField::zeros(grid);
            let i = grid.nearest_point(center_of(&grid, *center));
            f.values[i] = C64::new(libm::pow(grid.n() as f64 / TAU, grid.dim() as f64), 0.0);
            f
        }
        FieldKind::Jump1d { a, b } => {
            if grid.dim() != 1 {
                return Err(param("jump-1d needs a one-dimensional grid"));
            }
            if !(a < b && b - a < TAU) {
                return Err(param("jump-1d needs a < b with b - a < 2 pi"));
            }
            let nyq = (grid.n() / 2) as i64;
            let s = SpectralField::from_fn(grid, |k| {
                if k[0].abs() >= nyq {
                    C64::new(0.0, 0.0)
                } else {
                    step_coefficient(k[0], *a, *b)
                }
            });
            inverse_transform(&s)
        }
        FieldKind::LineJump2d { a, b } => {
            if !(a < b && b - a < TAU) {
                return Err(param("line-jump-2d needs a < b with b - a < 2 pi"));
            }
            SampledField::from_real(grid, |x| {
                // compare on the unwrapped window starting at a
                let u = crate::grid::rem_euclid(x[0] - a, TAU);
                if u > 0.0 && u < b - a {
                    1.0
                } else {
                    0.0
                }
            })
        }
        FieldKind::Chirp { start, length } => {
            if !(*length > 0.0 && *length < TAU) {
                return Err(param("chirp length must lie in (0, 2 pi)"));
            }
            SampledField::from_real(grid, |x| {
                let u = crate::grid::rem_euclid(x[0] - start, TAU);
                if u > 0.0 && u < *length {
                    libm::cos(u * u)
                } else {
                    0.0
                }
            })
        }
        FieldKind::RandomBandlimited { band, seed, real } => {
            random_bandlimited(grid, *band, seed.unwrap_or(default_seed), *real)
        }
        FieldKind::ModulatedBump { cutoff, frequency } => {
            cutoff.validate()?;
            let c = center_of(&grid, cutoff.center);
            SampledField::from_fn(grid, |x| {
                let ph = frequency[0] * x[0] + if grid.dim() == 2 { frequency[1] * x[1] } else { 0.0 };
                C64::from_polar(cutoff.profile(torus_dist(x, c)), ph)
            })
        }
        FieldKind::SumOf { parts } => {
            if parts.is_empty() {
                return Err(param("sum-of needs at least one part"));
            }
            let mut acc = SampledField::zeros(grid);
            for (j, p) in parts.iter().enumerate() {
                acc = acc.add(&generate(p, grid, default_seed.wrapping_add(j as u64))?)?;
            }
            acc
        }
    };
    if let Some(t) = &spec.taper {
        t.validate()?;
        f = t.apply(&f);
    }
    if let Some(s) = spec.scale {
        f = f.scale(C64::new(s, 0.0));
    }
    Ok(f)
}

pub fn delta(center: [f64; 2]) -> FieldSpec {
    FieldSpec::new(FieldKind::DeltaSurrogate { center })
}

pub fn gaussian(center: [f64; 2], width: f64) -> FieldSpec {
    FieldSpec::new(FieldKind::GaussianBump { center, width })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_has_flat_spectrum() {
        let g = Grid::new(2, 16).unwrap();
        let f = generate(&delta([1.0, 2.0]), g, 0).unwrap();
        let s = forward_transform(&f);
        let want = 1.0 / TAU;
        assert!(s.coeffs.iter().all(|c| (c.norm() - want).abs() < 1e-12));
    }

    #[test]
    fn jump_series_coefficients() {
        let g = Grid::new(1, 128).unwrap();
        let f = generate(&FieldSpec::new(FieldKind::Jump1d { a: PI / 2.0, b: 1.5 * PI }), g, 0).unwrap();
        let s = forward_transform(&f);
        for k in -20..=20 {
            let want = step_coefficient(k, PI / 2.0, 1.5 * PI);
            let got = s.at([k, 0]);
            assert!((got - want).norm() <= 1e-10 * want.norm().max(1e-3), "k={k}");
        }
    }

    #[test]
    fn seeded_fields_are_reproducible() {
        let g = Grid::new(1, 32).unwrap();
        let a = random_bandlimited(g, 6, 9, false);
        let b = random_bandlimited(g, 6, 9, false);
        assert_eq!(a, b);
        let s = forward_transform(&a);
        assert!(s.at([9, 0]).norm() < 1e-12);
    }

    #[test]
    fn sum_is_pointwise() {
        let g = Grid::new(1, 64).unwrap();
        let d = generate(&delta([2.0, 0.0]), g, 0).unwrap();
        let b = generate(&gaussian([PI, 0.0], 1.0), g, 0).unwrap();
        let s = generate(&FieldSpec::sum(alloc::vec![delta([2.0, 0.0]), gaussian([PI, 0.0], 1.0)]), g, 0).unwrap();
        assert!(s.sub(&d.add(&b).unwrap()).unwrap().max_abs() == 0.0);
    }
}
