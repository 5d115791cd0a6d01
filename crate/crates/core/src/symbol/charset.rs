use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{Repr, Symbol};
use crate::error::{param, Error, Result};
use crate::geometry::Cone;
use crate::grid::{norm2, torus_dist, Grid};
use crate::spaces::Weight;
use crate::C64;

/// Sampling geometry for characteristic-point decisions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CharParams {
    pub c_min: f64,
    pub x_radius: f64,
    /// Cone half-angle.
    pub aperture: f64,
    /// Inner cone radius; `None` means a quarter of the Nyquist frequency.
    pub radius: Option<f64>,
}

impl Default for CharParams {
    fn default() -> Self {
        CharParams { c_min: 0.1, x_radius: 0.5, aperture: PI / 8.0, radius: None }
    }
}

impl CharParams {
    pub fn radius_for(&self, grid: &Grid) -> f64 {
        self.radius.unwrap_or(grid.nyquist() / 4.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c_min > 0.0) {
            return Err(param("c_min must be positive"));
        }
        if !(self.x_radius > 0.0 && self.x_radius < PI) {
            return Err(param("x radius must lie in (0, pi)"));
        }
        if !(self.aperture > 0.0 && self.aperture <= PI) {
            return Err(param("aperture must lie in (0, pi]"));
        }
        if let Some(r) = self.radius {
            if !(r >= 1.0) {
                return Err(param("cone radius must be at least 1"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Invertibility {
    pub invertible: bool,
    /// Infimum of `|a| / w0` over the sampled neighbourhood and cone tail.
    pub bound: f64,
    pub samples: usize,
}

/// Grid points within `radius` of `x0` (torus distance).
pub(crate) fn ball(grid: &Grid, x0: [f64; 2], radius: f64) -> Vec<usize> {
    let c = if grid.dim() == 1 { [x0[0], 0.0] } else { x0 };
    (0..grid.len()).filter(|&i| torus_dist(grid.point(i), c) <= radius).collect()
}

/// Per lattice frequency: `min over x in pts of |a(x,k)| / w0(x,k)`.
fn tail_profile(a: &Symbol, w0: &Weight, pts: &[usize]) -> Vec<f64> {
    let g = a.grid;
    let m = g.len();
    let mut out = vec![f64::INFINITY; m];
    let mut vals = vec![C64::new(0.0, 0.0); pts.len()];
    for (k, o) in out.iter_mut().enumerate() {
        let kf = g.freq_f(k);
        if norm2(kf) >= g.nyquist() {
            continue;
        }
        match &a.repr {
            Repr::Separable(terms) => {
                vals.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
                for t in terms {
                    let c = t.mult.at(&g, k);
                    if c != C64::new(0.0, 0.0) {
                        for (v, &x) in vals.iter_mut().zip(pts) {
                            *v += t.coeff.values[x] * c;
                        }
                    }
                }
            }
            Repr::Dense(table) => {
                for (v, &x) in vals.iter_mut().zip(pts) {
                    *v = table[k * m + x];
                }
            }
        }
        *o = vals
            .iter()
            .zip(pts)
            .map(|(v, &x)| v.norm() / w0.eval(g.point(x), kf))
            .fold(f64::INFINITY, f64::min);
    }
    out
}

fn cone_inf(grid: &Grid, profile: &[f64], cone: &Cone) -> (f64, usize) {
    let nyq = grid.nyquist();
    let mut inf = f64::INFINITY;
    let mut count = 0;
    for (k, &v) in profile.iter().enumerate() {
        let kf = grid.freq_f(k);
        if norm2(kf) < nyq && cone.contains(kf, grid.dim()) {
            inf = inf.min(v);
            count += 1;
        }
    }
    (inf, count)
}

/// Sampled test of `|a(x, xi)| >= C w0(x, xi)` on the `x_radius` ball around `x0`
/// times the tail of `cone`.
pub fn psi_invertible(a: &Symbol, w0: &Weight, x0: [f64; 2], x_radius: f64, cone: &Cone, c_min: f64) -> Result<Invertibility> {
    if !(cone.inner_radius >= 1.0) {
        return Err(param("cone inner radius must be at least 1"));
    }
    let pts = ball(&a.grid, x0, x_radius);
    if pts.is_empty() {
        return Err(Error::Degenerate(format!("no grid points within {x_radius} of the base point")));
    }
    let profile = tail_profile(a, w0, &pts);
    let (bound, count) = cone_inf(&a.grid, &profile, cone);
    if count == 0 {
        return Err(Error::Degenerate("cone tail contains no lattice frequencies".into()));
    }
    Ok(Invertibility { invertible: bound >= c_min, bound, samples: count * pts.len() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharWitness {
    pub x_radius: f64,
    pub aperture: f64,
    pub radius: f64,
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharEntry {
    pub point: usize,
    pub bin: usize,
    pub tail_lower_bound: f64,
    pub characteristic: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<CharWitness>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharSetReport {
    pub base_points: Vec<[f64; 2]>,
    pub directions: Vec<[f64; 2]>,
    pub params: CharParams,
    pub entries: Vec<CharEntry>,
}

impl CharSetReport {
    pub fn characteristic_count(&self) -> usize {
        self.entries.iter().filter(|e| e.characteristic).count()
    }

    pub fn flags(&self) -> Vec<bool> {
        self.entries.iter().map(|e| e.characteristic).collect()
    }

    /// Recompute flags for another threshold; bounds are unchanged.
    pub fn with_threshold(&self, c_min: f64) -> CharSetReport {
        let mut out = self.clone();
        out.params.c_min = c_min;
        for e in &mut out.entries {
            e.characteristic = !(e.tail_lower_bound >= c_min);
            // char_set always records the resolved radius
            e.witness = (!e.characteristic).then_some(CharWitness {
                x_radius: out.params.x_radius,
                aperture: out.params.aperture,
                radius: out.params.radius.unwrap_or(f64::NAN),
                constant: e.tail_lower_bound,
            });
        }
        out
    }
}

/// Characteristic entries for one base point (all direction bins).
pub fn char_entries_at(
    a: &Symbol,
    w0: &Weight,
    point_index: usize,
    x0: [f64; 2],
    directions: &[[f64; 2]],
    params: &CharParams,
) -> Result<Vec<CharEntry>> {
    let g = a.grid;
    let radius = params.radius_for(&g);
    let pts = ball(&g, x0, params.x_radius);
    if pts.is_empty() {
        return Err(Error::Degenerate(format!("no grid points within {} of a base point", params.x_radius)));
    }
    let profile = tail_profile(a, w0, &pts);
    directions
        .iter()
        .enumerate()
        .map(|(bin, &d)| {
            let cone = Cone::new(d, params.aperture, radius)?;
            let (inf, count) = cone_inf(&g, &profile, &cone);
            let bound = if count == 0 { 0.0 } else { inf };
            let characteristic = !(bound >= params.c_min);
            Ok(CharEntry {
                point: point_index,
                bin,
                tail_lower_bound: bound,
                characteristic,
                witness: (!characteristic).then_some(CharWitness {
                    x_radius: params.x_radius,
                    aperture: params.aperture,
                    radius,
                    constant: bound,
                }),
            })
        })
        .collect()
}

/// `psi_invertible` over every (base point, direction) pair.
pub fn char_set(
    a: &Symbol,
    w0: &Weight,
    base_points: &[[f64; 2]],
    directions: &[[f64; 2]],
    params: &CharParams,
) -> Result<CharSetReport> {
    params.validate()?;
    let mut entries = Vec::with_capacity(base_points.len() * directions.len());
    for (p, &x0) in base_points.iter().enumerate() {
        entries.extend(char_entries_at(a, w0, p, x0, directions, params)?);
    }
    let mut params = *params;
    params.radius = Some(params.radius_for(&a.grid));
    Ok(CharSetReport { base_points: base_points.to_vec(), directions: directions.to_vec(), params, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::direction_fan;
    use crate::symbol::SymbolClass;

    #[test]
    fn elliptic_bracket_has_no_characteristic_points() {
        let g = Grid::new(2, 32).unwrap();
        let a = Symbol::multiplier(g, |k| C64::new(1.0 + k[0] * k[0] + k[1] * k[1], 0.0), SymbolClass::default());
        let r = char_set(&a, &Weight::sigma(2.0), &[[1.0, 1.0], [3.0, 5.0]], &direction_fan(2, 16), &CharParams::default())
            .unwrap();
        assert_eq!(r.characteristic_count(), 0);
        assert!(r.entries.iter().all(|e| e.tail_lower_bound >= 0.5));
    }

    #[test]
    fn coordinate_symbol_is_characteristic_across_its_zero_set() {
        let g = Grid::new(2, 64).unwrap();
        let a = Symbol::multiplier(g, |k| C64::new(k[0], 0.0), SymbolClass::default());
        let w = Weight::sigma(1.0);
        let wide = Cone::new([0.0, 1.0], PI / 4.0, 4.0).unwrap();
        let narrow = Cone::new([0.0, 1.0], PI / 16.0, 4.0).unwrap();
        let bw = psi_invertible(&a, &w, [1.0, 1.0], 0.5, &wide, 0.1).unwrap();
        let bn = psi_invertible(&a, &w, [1.0, 1.0], 0.5, &narrow, 0.1).unwrap();
        assert!(!bw.invertible && !bn.invertible);
        assert!(bn.bound <= bw.bound);
        let across = Cone::new([1.0, 0.0], PI / 8.0, 4.0).unwrap();
        assert!(psi_invertible(&a, &w, [1.0, 1.0], 0.5, &across, 0.1).unwrap().invertible);
    }

    #[test]
    fn zero_symbol_is_everywhere_characteristic() {
        let g = Grid::new(1, 64).unwrap();
        let a = Symbol::zero(g);
        let r = char_set(&a, &Weight::one(), &[[1.0, 0.0]], &direction_fan(1, 2), &CharParams::default()).unwrap();
        assert_eq!(r.characteristic_count(), 2);
    }
}
