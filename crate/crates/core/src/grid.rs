use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::FftNd;
use crate::C64;

pub const TAU: f64 = 2.0 * PI;

/// Uniform periodic grid on `[0, 2pi)^d`, `n` samples per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    #[serde(rename = "dimension")]
    dim: usize,
    n: usize,
}

impl Grid {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in {{1,2}}")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("n = {n} must be a power of two >= 8")));
        }
        Ok(Grid { dim, n })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        TAU / self.n as f64
    }

    /// Quadrature weight `(2pi/n)^d`.
    pub fn cell(&self) -> f64 {
        libm::pow(self.spacing(), self.dim as f64)
    }

    pub fn nyquist(&self) -> f64 {
        (self.n / 2) as f64
    }

    pub fn axes(&self, i: usize) -> [usize; 2] {
        if self.dim == 1 {
            [i, 0]
        } else {
            [i / self.n, i % self.n]
        }
    }

    pub fn flat(&self, j: [usize; 2]) -> usize {
        if self.dim == 1 {
            j[0]
        } else {
            j[0] * self.n + j[1]
        }
    }

    pub fn point(&self, i: usize) -> [f64; 2] {
        let j = self.axes(i);
        let h = self.spacing();
        let y = if self.dim == 1 { 0.0 } else { j[1] as f64 * h };
        [j[0] as f64 * h, y]
    }

    fn axis_freq(&self, m: usize) -> i64 {
        let half = self.n / 2;
        if m < half {
            m as i64
        } else {
            m as i64 - self.n as i64
        }
    }

    fn axis_index(&self, k: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if k < -half || k >= half {
            return None;
        }
        Some(if k >= 0 { k as usize } else { (k + self.n as i64) as usize })
    }

    /// Lattice frequency of storage index `i` (storage follows FFT order).
    pub fn freq(&self, i: usize) -> [i64; 2] {
        let j = self.axes(i);
        let y = if self.dim == 1 { 0 } else { self.axis_freq(j[1]) };
        [self.axis_freq(j[0]), y]
    }

    pub fn freq_f(&self, i: usize) -> [f64; 2] {
        let k = self.freq(i);
        [k[0] as f64, k[1] as f64]
    }

    pub fn freq_index(&self, k: [i64; 2]) -> Option<usize> {
        let a = self.axis_index(k[0])?;
        if self.dim == 1 {
            if k[1] != 0 {
                return None;
            }
            return Some(a);
        }
        let b = self.axis_index(k[1])?;
        Some(a * self.n + b)
    }

    /// Frequency index of `k` reduced modulo the lattice period.
    pub fn freq_index_wrapped(&self, k: [i64; 2]) -> usize {
        let n = self.n as i64;
        let a = k[0].rem_euclid(n) as usize;
        if self.dim == 1 {
            a
        } else {
            a * self.n + k[1].rem_euclid(n) as usize
        }
    }

    /// Index of `i - j` (or `i + j`) on the periodic sample lattice.
    pub fn shift_index(&self, i: usize, j: usize, minus: bool) -> usize {
        let a = self.axes(i);
        let b = self.axes(j);
        let n = self.n;
        let op = |p: usize, q: usize| if minus { (p + n - q) % n } else { (p + q) % n };
        self.flat([op(a[0], b[0]), op(a[1], b[1])])
    }

    pub fn nearest_point(&self, x: [f64; 2]) -> usize {
        let h = self.spacing();
        let snap = |v: f64| (libm::round(rem_euclid(v, TAU) / h) as usize) % self.n;
        self.flat([snap(x[0]), if self.dim == 1 { 0 } else { snap(x[1]) }])
    }

    pub fn same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

pub fn rem_euclid(a: f64, b: f64) -> f64 {
    let r = libm::fmod(a, b);
    if r < 0.0 {
        r + b
    } else {
        r
    }
}

/// Wrap a coordinate difference into `[-pi, pi)`.
pub fn wrap(d: f64) -> f64 {
    rem_euclid(d + PI, TAU) - PI
}

pub fn torus_delta(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [wrap(a[0] - b[0]), wrap(a[1] - b[1])]
}

pub fn torus_dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = torus_delta(a, b);
    libm::hypot(d[0], d[1])
}

pub fn norm2(v: [f64; 2]) -> f64 {
    libm::hypot(v[0], v[1])
}

fn check_finite(v: &[C64]) -> Result<()> {
    if v.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::Parameter("non-finite sample".into()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    pub grid: Grid,
    pub values: Vec<C64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub grid: Grid,
    pub coeffs: Vec<C64>,
}

macro_rules! field_common {
    ($t:ident, $data:ident) => {
        impl $t {
            pub fn new(grid: Grid, $data: Vec<C64>) -> Result<Self> {
                if $data.len() != grid.len() {
                    return Err(Error::LengthMismatch { expected: grid.len(), got: $data.len() });
                }
                check_finite(&$data)?;
                Ok($t { grid, $data })
            }

            pub fn zeros(grid: Grid) -> Self {
                $t { grid, $data: vec![C64::new(0.0, 0.0); grid.len()] }
            }

            pub fn scale(&self, c: C64) -> Self {
                $t { grid: self.grid, $data: self.$data.iter().map(|v| v * c).collect() }
            }

            pub fn add(&self, other: &Self) -> Result<Self> {
                self.grid.same(&other.grid)?;
                let $data = self.$data.iter().zip(&other.$data).map(|(a, b)| a + b).collect();
                Ok($t { grid: self.grid, $data })
            }

            pub fn sub(&self, other: &Self) -> Result<Self> {
                self.grid.same(&other.grid)?;
                let $data = self.$data.iter().zip(&other.$data).map(|(a, b)| a - b).collect();
                Ok($t { grid: self.grid, $data })
            }

            pub fn mul(&self, other: &Self) -> Result<Self> {
                self.grid.same(&other.grid)?;
                let $data = self.$data.iter().zip(&other.$data).map(|(a, b)| a * b).collect();
                Ok($t { grid: self.grid, $data })
            }

            pub fn max_abs(&self) -> f64 {
                self.$data.iter().fold(0.0, |m, v| f64::max(m, v.norm()))
            }
        }
    };
}

field_common!(SampledField, values);
field_common!(SpectralField, coeffs);

impl SampledField {
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> C64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        SampledField { grid, values }
    }

    pub fn from_real(grid: Grid, f: impl Fn([f64; 2]) -> f64) -> Self {
        Self::from_fn(grid, |x| C64::new(f(x), 0.0))
    }

    /// `L^2` norm with the `(2pi/n)^d` quadrature.
    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        libm::sqrt(s * self.grid.cell())
    }

    pub fn inner(&self, other: &SampledField) -> Result<C64> {
        self.grid.same(&other.grid)?;
        let s: C64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b.conj()).sum();
        Ok(s * self.grid.cell())
    }

    /// `f(. - x_m)` for a lattice shift `x_m` given by its sample index.
    pub fn translate(&self, m: usize) -> SampledField {
        let g = self.grid;
        let values = (0..g.len()).map(|i| self.values[g.shift_index(i, m, true)]).collect();
        SampledField { grid: g, values }
    }
}

impl SpectralField {
    pub fn from_fn(grid: Grid, f: impl Fn([i64; 2]) -> C64) -> Self {
        let coeffs = (0..grid.len()).map(|i| f(grid.freq(i))).collect();
        SpectralField { grid, coeffs }
    }

    /// Counting-measure `l^2` norm over the lattice.
    pub fn l2_norm(&self) -> f64 {
        libm::sqrt(self.coeffs.iter().map(|v| v.norm_sqr()).sum())
    }

    pub fn at(&self, k: [i64; 2]) -> C64 {
        self.grid.freq_index(k).map(|i| self.coeffs[i]).unwrap_or(C64::new(0.0, 0.0))
    }
}

/// Reusable transform engine for one grid.
#[derive(Debug, Clone)]
pub struct Transformer {
    grid: Grid,
    fft: FftNd,
    fwd_scale: f64,
    inv_scale: f64,
}

impl Transformer {
    pub fn new(grid: Grid) -> Self {
        let d = grid.dim() as f64;
        let unit = libm::pow(TAU, -d / 2.0);
        Transformer {
            grid,
            fft: FftNd::new(grid.dim(), grid.n()),
            fwd_scale: unit * grid.cell(),
            inv_scale: unit,
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn forward_in_place(&mut self, buf: &mut [C64]) {
        self.fft.run(buf, false);
        buf.iter_mut().for_each(|v| *v *= self.fwd_scale);
    }

    pub fn inverse_in_place(&mut self, buf: &mut [C64]) {
        self.fft.run(buf, true);
        buf.iter_mut().for_each(|v| *v *= self.inv_scale);
    }

    pub fn forward(&mut self, f: &SampledField) -> Result<SpectralField> {
        self.grid.same(&f.grid)?;
        let mut buf = f.values.clone();
        self.forward_in_place(&mut buf);
        Ok(SpectralField { grid: self.grid, coeffs: buf })
    }

    pub fn inverse(&mut self, f: &SpectralField) -> Result<SampledField> {
        self.grid.same(&f.grid)?;
        let mut buf = f.coeffs.clone();
        self.inverse_in_place(&mut buf);
        Ok(SampledField { grid: self.grid, values: buf })
    }
}

pub fn forward_transform(f: &SampledField) -> SpectralField {
    let mut buf = f.values.clone();
    Transformer::new(f.grid).forward_in_place(&mut buf);
    SpectralField { grid: f.grid, coeffs: buf }
}

pub fn inverse_transform(f: &SpectralField) -> SampledField {
    let mut buf = f.coeffs.clone();
    Transformer::new(f.grid).inverse_in_place(&mut buf);
    SampledField { grid: f.grid, values: buf }
}

/// Evaluate a trigonometric polynomial given by its spectrum at an arbitrary point.
/// Only coefficients above `tol * max` participate.
#[derive(Debug, Clone)]
pub struct TrigPoly {
    modes: Vec<([f64; 2], C64)>,
}

impl TrigPoly {
    pub fn from_field(f: &SampledField, tol: f64) -> Self {
        Self::from_spectrum(&forward_transform(f), tol)
    }

    pub fn from_spectrum(s: &SpectralField, tol: f64) -> Self {
        let g = s.grid;
        let scale = libm::pow(TAU, -(g.dim() as f64) / 2.0);
        let cut = s.max_abs() * tol;
        let modes = s
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() > cut)
            .map(|(i, c)| (g.freq_f(i), c * scale))
            .collect();
        TrigPoly { modes }
    }

    pub fn eval(&self, x: [f64; 2]) -> C64 {
        self.modes
            .iter()
            .map(|(k, c)| {
                let a = k[0] * x[0] + k[1] * x[1];
                c * C64::new(libm::cos(a), libm::sin(a))
            })
            .sum()
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    pub fn max_frequency(&self) -> f64 {
        self.modes.iter().fold(0.0, |m, (k, _)| f64::max(m, f64::max(k[0].abs(), k[1].abs())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(3, 64).is_err());
        assert!(Grid::new(1, 4).is_err());
        assert!(Grid::new(2, 48).is_err());
    }

    #[test]
    fn index_maps_are_inverse() {
        for g in [Grid::new(1, 16).unwrap(), Grid::new(2, 8).unwrap()] {
            for i in 0..g.len() {
                assert_eq!(g.freq_index(g.freq(i)), Some(i));
                assert_eq!(g.flat(g.axes(i)), i);
            }
        }
    }

    #[test]
    fn single_mode() {
        let g = Grid::new(1, 64).unwrap();
        let f = SampledField::from_fn(g, |x| C64::new(0.0, 3.0 * x[0]).exp());
        let s = forward_transform(&f);
        for i in 0..g.len() {
            let want = if g.freq(i)[0] == 3 { TAU.sqrt() } else { 0.0 };
            assert!((s.coeffs[i] - want).norm() < 1e-12);
        }
        let s = SpectralField::from_fn(g, |k| if k[0] == -5 { C64::new(TAU.sqrt(), 0.0) } else { C64::new(0.0, 0.0) });
        let f = inverse_transform(&s);
        for i in 0..g.len() {
            let want = C64::new(0.0, -5.0 * g.point(i)[0]).exp();
            assert!((f.values[i] - want).norm() < 1e-12);
        }
    }

    #[test]
    fn trig_poly_interpolates() {
        let g = Grid::new(2, 16).unwrap();
        let f = SampledField::from_fn(g, |x| C64::new(x[0].cos(), (2.0 * x[1] - x[0]).sin()));
        let p = TrigPoly::from_field(&f, 1e-12);
        let x: [f64; 2] = [0.123, 2.9];
        let want = C64::new(x[0].cos(), (2.0 * x[1] - x[0]).sin());
        assert!((p.eval(x) - want).norm() < 1e-12);
        assert_eq!(p.max_frequency(), 2.0);
    }
}
