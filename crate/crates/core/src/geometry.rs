//! Cones, cutoff functions and dyadic frequency shells.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::grid::{norm2, torus_dist, Grid, SampledField, SpectralField};
use crate::C64;

/// Smooth monotone transition: 0 for `t <= 0`, 1 for `t >= 1`, built from `e^{-1/t}`.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = libm::exp(-1.0 / t);
    let b = libm::exp(-1.0 / (1.0 - t));
    a / (a + b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cone {
    pub direction: [f64; 2],
    pub half_angle: f64,
    pub inner_radius: f64,
}

impl Cone {
    pub fn new(direction: [f64; 2], half_angle: f64, inner_radius: f64) -> Result<Self> {
        let len = norm2(direction);
        if !(len > 0.0) {
            return Err(param("cone direction must be nonzero"));
        }
        if !(half_angle > 0.0 && half_angle <= PI) {
            return Err(param(format!("half angle {half_angle} outside (0, pi]")));
        }
        if !(inner_radius >= 0.0) {
            return Err(param("cone inner radius must be nonnegative"));
        }
        Ok(Cone { direction: [direction[0] / len, direction[1] / len], half_angle, inner_radius })
    }

    /// Every direction with `|k| >= inner_radius`.
    pub fn full(inner_radius: f64) -> Self {
        Cone { direction: [1.0, 0.0], half_angle: PI, inner_radius }
    }

    pub fn is_full(&self) -> bool {
        self.half_angle >= PI
    }

    /// Angle between `k` and the axis; `None` at the origin.
    pub fn angle_to(&self, k: [f64; 2], dim: usize) -> Option<f64> {
        let r = norm2(k);
        if r == 0.0 {
            return None;
        }
        if dim == 1 {
            return Some(if k[0] * self.direction[0] > 0.0 { 0.0 } else { PI });
        }
        let c = (k[0] * self.direction[0] + k[1] * self.direction[1]) / r;
        Some(libm::acos(c.clamp(-1.0, 1.0)))
    }

    pub fn contains(&self, k: [f64; 2], dim: usize) -> bool {
        let r = norm2(k);
        if r < self.inner_radius {
            return false;
        }
        if self.is_full() {
            return true;
        }
        match self.angle_to(k, dim) {
            None => false,
            Some(a) if dim == 1 => a == 0.0,
            Some(a) => a <= self.half_angle,
        }
    }

    pub fn mask(&self, grid: &Grid) -> Vec<bool> {
        (0..grid.len()).map(|i| self.contains(grid.freq_f(i), grid.dim())).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub center: [f64; 2],
    pub inner_radius: f64,
    pub outer_radius: f64,
}

impl CutoffSpec {
    pub fn new(center: [f64; 2], inner_radius: f64, outer_radius: f64) -> Result<Self> {
        let s = CutoffSpec { center, inner_radius, outer_radius };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.inner_radius > 0.0) {
            return Err(param("cutoff inner radius must be positive"));
        }
        if !(self.inner_radius < self.outer_radius) {
            return Err(param(format!(
                "cutoff radii must satisfy r1 < r2 (got {} >= {})",
                self.inner_radius, self.outer_radius
            )));
        }
        if !(self.outer_radius < PI) {
            return Err(param("cutoff outer radius must stay below pi"));
        }
        Ok(())
    }

    pub fn profile(&self, r: f64) -> f64 {
        1.0 - smooth_step((r - self.inner_radius) / (self.outer_radius - self.inner_radius))
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        self.profile(torus_dist(x, self.center))
    }

    pub fn scaled(&self, factor: f64) -> CutoffSpec {
        CutoffSpec {
            center: self.center,
            inner_radius: self.inner_radius * factor,
            outer_radius: self.outer_radius * factor,
        }
    }

    pub fn recentered(&self, center: [f64; 2]) -> CutoffSpec {
        CutoffSpec { center, ..*self }
    }

    /// True when the closed supports of two cutoffs do not meet.
    pub fn disjoint_from(&self, other: &CutoffSpec) -> bool {
        let d = torus_dist(self.center, other.center);
        d > self.outer_radius + other.outer_radius
    }
}

pub fn make_cutoff(spec: &CutoffSpec, grid: Grid) -> Result<SampledField> {
    spec.validate()?;
    // the second coordinate is inert in one dimension
    let c = if grid.dim() == 1 { [spec.center[0], 0.0] } else { spec.center };
    Ok(SampledField::from_real(grid, |x| spec.profile(torus_dist(x, c))))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionalCutoffSpec {
    pub cone: Cone,
    /// Radius where the radial ramp (starting at the cone's inner radius) completes.
    pub transition_radius: f64,
    /// Width of the angular smoothing band inside the cone boundary.
    pub angular_margin: f64,
}

impl DirectionalCutoffSpec {
    pub fn validate(&self) -> Result<()> {
        if self.angular_margin < 0.0 || self.angular_margin > self.cone.half_angle {
            return Err(param("angular margin must lie in [0, half angle]"));
        }
        if !self.cone.is_full() && self.cone.half_angle + self.angular_margin >= PI {
            return Err(param("cone aperture plus angular margin must stay below pi"));
        }
        Ok(())
    }

    pub fn eval(&self, k: [f64; 2], dim: usize) -> f64 {
        let r = norm2(k);
        let cone = &self.cone;
        if r < cone.inner_radius || !cone.contains(k, dim) {
            return 0.0;
        }
        let angular = match cone.angle_to(k, dim) {
            _ if cone.is_full() || dim == 1 => 1.0,
            None => 1.0,
            Some(a) => {
                let m = self.angular_margin;
                if m == 0.0 || a <= cone.half_angle - m {
                    1.0
                } else {
                    1.0 - smooth_step((a - (cone.half_angle - m)) / m)
                }
            }
        };
        let radial = if self.transition_radius > cone.inner_radius {
            smooth_step((r - cone.inner_radius) / (self.transition_radius - cone.inner_radius))
        } else {
            1.0
        };
        angular * radial
    }
}

pub fn make_directional_cutoff(spec: &DirectionalCutoffSpec, grid: Grid) -> Result<SpectralField> {
    spec.validate()?;
    Ok(SpectralField::from_fn(grid, |k| {
        C64::new(spec.eval([k[0] as f64, k[1] as f64], grid.dim()), 0.0)
    }))
}

/// Shell id per lattice index: shell `m` holds `R 2^m <= |k| < R 2^{m+1}`, clipped at Nyquist.
#[derive(Debug, Clone)]
pub struct ShellMap {
    pub shell_of: Vec<Option<u16>>,
    pub count: usize,
}

impl ShellMap {
    pub fn new(grid: &Grid, inner_radius: f64) -> Result<Self> {
        if !(inner_radius >= 1.0) {
            return Err(param("shell inner radius must be >= 1"));
        }
        let nyq = grid.nyquist();
        let mut count = 0;
        while inner_radius * libm::pow(2.0, count as f64) < nyq {
            count += 1;
        }
        let shell_of = (0..grid.len())
            .map(|i| {
                let r = norm2(grid.freq_f(i));
                if r < inner_radius || r >= nyq || count == 0 {
                    return None;
                }
                let m = libm::floor(libm::log2(r / inner_radius)) as usize;
                // guard against log rounding at exact powers of two
                let m = if inner_radius * libm::pow(2.0, m as f64) > r { m - 1 } else { m };
                let m = if inner_radius * libm::pow(2.0, (m + 1) as f64) <= r { m + 1 } else { m };
                (m < count).then_some(m as u16)
            })
            .collect();
        Ok(ShellMap { shell_of, count })
    }
}

pub fn dyadic_shells(grid: &Grid, inner_radius: f64) -> Result<Vec<Vec<usize>>> {
    let map = ShellMap::new(grid, inner_radius)?;
    let mut shells = alloc::vec![Vec::new(); map.count];
    for (i, s) in map.shell_of.iter().enumerate() {
        if let Some(m) = s {
            shells[*m as usize].push(i);
        }
    }
    Ok(shells)
}

/// `D` equally spaced unit directions (two signs in one dimension).
pub fn direction_fan(dim: usize, count: usize) -> Vec<[f64; 2]> {
    if dim == 1 {
        return alloc::vec![[1.0, 0.0], [-1.0, 0.0]];
    }
    (0..count)
        .map(|j| {
            let a = 2.0 * PI * j as f64 / count as f64;
            [libm::cos(a), libm::sin(a)]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shells_one_dim() {
        let g = Grid::new(1, 64).unwrap();
        let s = dyadic_shells(&g, 2.0).unwrap();
        assert_eq!(s.len(), 4);
        let radii: Vec<(i64, i64)> = s
            .iter()
            .map(|sh| {
                let ks: Vec<i64> = sh.iter().map(|&i| g.freq(i)[0].abs()).collect();
                (*ks.iter().min().unwrap(), *ks.iter().max().unwrap())
            })
            .collect();
        assert_eq!(radii, [(2, 3), (4, 7), (8, 15), (16, 31)]);
        assert!(dyadic_shells(&g, 40.0).unwrap().is_empty());
    }

    #[test]
    fn cutoff_values() {
        let g = Grid::new(2, 64).unwrap();
        let spec = CutoffSpec::new([PI, PI], 0.5, 1.0).unwrap();
        let f = make_cutoff(&spec, g).unwrap();
        assert_eq!(f.values[g.nearest_point([PI, PI])].re, 1.0);
        assert_eq!(f.values[g.nearest_point([0.0, 0.0])].re, 0.0);
        assert!(CutoffSpec::new([0.0; 2], 1.0, 0.5).is_err());
        assert!(CutoffSpec::new([0.0; 2], 1.0, 3.5).is_err());
    }

    #[test]
    fn cutoff_profile_monotone() {
        let spec = CutoffSpec::new([0.0; 2], 0.3, 1.1).unwrap();
        let mut prev = spec.profile(0.3);
        for i in 1..=1000 {
            let r = 0.3 + 0.8 * i as f64 / 1000.0;
            let v = spec.profile(r);
            assert!(v <= prev + 1e-14);
            prev = v;
        }
        assert_eq!(spec.profile(1.1), 0.0);
    }

    #[test]
    fn directional_core_and_opposite() {
        let g = Grid::new(2, 128).unwrap();
        let dir = [0.6, 0.8];
        let cone = Cone::new(dir, PI / 6.0, 4.0).unwrap();
        let spec = DirectionalCutoffSpec { cone, transition_radius: 8.0, angular_margin: PI / 12.0 };
        let psi = make_directional_cutoff(&spec, g).unwrap();
        let k = [libm::round(16.0 * dir[0]) as i64, libm::round(16.0 * dir[1]) as i64];
        assert_eq!(psi.at(k).re, 1.0);
        assert_eq!(psi.at([-k[0], -k[1]]).re, 0.0);
    }
}
