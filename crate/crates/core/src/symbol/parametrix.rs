use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{compose, Multiplier, Repr, Symbol, SymbolClass, Term};
use crate::error::{param, Error, Result};
use crate::geometry::{make_cutoff, make_directional_cutoff, CutoffSpec, DirectionalCutoffSpec, ShellMap};
use crate::generators::random_bandlimited;
use crate::psido::apply_kn;
use crate::spaces::{lsq_slope, Weight};
use crate::C64;

const DIVISION_GUARD: f64 = 1e-12;

/// Cutoff templates; the spatial one is recentered at the base point and the
/// directional one is turned towards the base direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParametrixSetup {
    pub phi: CutoffSpec,
    pub psi: DirectionalCutoffSpec,
    pub c_min: f64,
    pub probes: usize,
    pub seed: u64,
}

impl ParametrixSetup {
    pub fn new(phi: CutoffSpec, psi: DirectionalCutoffSpec) -> Self {
        ParametrixSetup { phi, psi, c_min: 0.1, probes: 10, seed: 0x5eed }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParametrixResult {
    /// Approximate inverse.
    pub b: Symbol,
    /// `phi (x) psi`.
    pub c: Symbol,
    /// `compose(b, a, j + 1) - c`.
    pub h: Symbol,
    pub order: u32,
    /// Largest relative `|Op(b)Op(a)g - Op(c)g - Op(h)g|_2` over the probes.
    pub residual_norm: f64,
    /// Infimum of `|a| / w0` over the cutoff supports.
    pub bound: f64,
}

impl ParametrixResult {
    /// Per dyadic shell (from `radius`), the sup over `x` of `|h(x, k)|`, and the fitted `log2` slope.
    pub fn remainder_decay(&self, radius: f64) -> Result<(Vec<f64>, f64)> {
        let g = self.h.grid;
        let shells = ShellMap::new(&g, radius)?;
        let mut sup = alloc::vec![0.0f64; shells.count];
        for k in 0..g.len() {
            if let Some(s) = shells.shell_of[k] {
                let slice = self.h.slice_at_freq(k);
                let m = slice.iter().fold(0.0f64, |m, v| m.max(v.norm()));
                sup[s as usize] = sup[s as usize].max(m);
            }
        }
        let logs: Vec<f64> = sup.iter().map(|&s| libm::log2(s.max(1e-300))).collect();
        let slope = if logs.len() >= 2 { lsq_slope(&logs) } else { f64::NAN };
        Ok((sup, slope))
    }
}

/// Neumann-series parametrix of `a` microlocally near `(x0, xi0)`.
///
/// Starts from `b_1 = c / a` and corrects `b_{k+1} = b_k - 1_{supp c} (compose(b_k, a, k + 1) - c) / a`,
/// which reproduces the alternating series `sum (-T)^k b_1` with `T u = (u # a - u a) / a`.
pub fn parametrix(a: &Symbol, w0: &Weight, x0: [f64; 2], xi0: [f64; 2], j: u32, setup: &ParametrixSetup) -> Result<ParametrixResult> {
    if j < 1 {
        return Err(param("parametrix order must be at least 1"));
    }
    let g = a.grid;
    let m = g.len();
    let phi_spec = setup.phi.recentered(x0);
    let mut psi_spec = setup.psi;
    psi_spec.cone = crate::geometry::Cone::new(xi0, psi_spec.cone.half_angle, psi_spec.cone.inner_radius)?;
    let phi = make_cutoff(&phi_spec, g)?;
    let psi = make_directional_cutoff(&psi_spec, g)?;

    let table = a.to_dense()?;
    let mut bound = f64::INFINITY;
    let mut smallest = f64::INFINITY;
    for k in 0..m {
        if psi.coeffs[k].re <= 0.0 {
            continue;
        }
        let kf = g.freq_f(k);
        for x in 0..m {
            if phi.values[x].re <= 0.0 {
                continue;
            }
            let v = table[k * m + x].norm();
            smallest = smallest.min(v);
            bound = bound.min(v / w0.eval(g.point(x), kf));
        }
    }
    if !bound.is_finite() {
        return Err(Error::Degenerate("cutoff supports contain no samples".into()));
    }
    if !(bound >= setup.c_min) || smallest < DIVISION_GUARD {
        return Err(Error::NotInvertible(format!(
            "inf |a|/w0 over the cutoff supports is {bound:.3e}, below c_min = {}",
            setup.c_min
        )));
    }

    let inside = |x: usize, k: usize| phi.values[x].re > 0.0 && psi.coeffs[k].re > 0.0;
    let mut b_table = alloc::vec![C64::new(0.0, 0.0); m * m];
    for k in 0..m {
        for x in 0..m {
            if inside(x, k) {
                b_table[k * m + x] = phi.values[x] * psi.coeffs[k] / table[k * m + x];
            }
        }
    }
    let class_b = SymbolClass::new(Weight::quotient(&Weight::one(), w0), a.class.rho, a.class.delta);
    let c = Symbol::separable(
        g,
        alloc::vec![Term { coeff: phi.clone(), mult: Multiplier::Table(psi.coeffs.clone()) }],
        SymbolClass::default(),
    )?;
    let mut b = Symbol::from_table(g, b_table, class_b)?;
    for step in 1..j {
        let h = compose(&b, a, step + 1)?.sub(&c)?.to_dense()?;
        if let Repr::Dense(bt) = &mut b.repr {
            for k in 0..m {
                for x in 0..m {
                    if inside(x, k) {
                        bt[k * m + x] -= h[k * m + x] / table[k * m + x];
                    }
                }
            }
        }
    }
    let h = compose(&b, a, j + 1)?.sub(&c)?.densified()?;

    let mut residual: f64 = 0.0;
    for p in 0..setup.probes {
        let probe = random_bandlimited(g, (g.n() / 4) as u32, setup.seed.wrapping_add(p as u64), false);
        let lhs = apply_kn(&b, &apply_kn(a, &probe)?)?;
        let rhs = apply_kn(&c, &probe)?.add(&apply_kn(&h, &probe)?)?;
        residual = residual.max(lhs.sub(&rhs)?.l2_norm() / probe.l2_norm());
    }
    Ok(ParametrixResult { b, c, h, order: j, residual_norm: residual, bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Cone;
    use crate::grid::{Grid, SampledField};
    use core::f64::consts::PI;

    fn setup(n: usize) -> ParametrixSetup {
        let r = n as f64 / 16.0;
        ParametrixSetup::new(
            CutoffSpec::new([PI, 0.0], 0.3, 1.2).unwrap(),
            DirectionalCutoffSpec { cone: Cone::new([1.0, 0.0], PI / 2.0, r / 2.0).unwrap(), transition_radius: r, angular_margin: 0.0 },
        )
    }

    #[test]
    fn identity_symbol_gives_cutoff() {
        let g = Grid::new(1, 64).unwrap();
        let a = Symbol::constant(g, C64::new(1.0, 0.0));
        let r = parametrix(&a, &Weight::one(), [PI, 0.0], [1.0, 0.0], 2, &setup(64)).unwrap();
        assert!(r.residual_norm < 1e-10);
        assert!(r.h.to_dense().unwrap().iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn scaling_halves_the_inverse() {
        let g = Grid::new(1, 64).unwrap();
        let a = Symbol::polynomial(
            g,
            alloc::vec![([2, 0], SampledField::from_real(g, |x| 1.0 + 0.5 * libm::cos(x[0]))), ([0, 0], SampledField::from_real(g, |x| 1.0 + 0.5 * libm::cos(x[0])))],
            SymbolClass::default(),
        )
        .unwrap();
        let w = Weight::sigma(2.0);
        let r1 = parametrix(&a, &w, [PI, 0.0], [1.0, 0.0], 2, &setup(64)).unwrap();
        let r2 = parametrix(&a.scale(C64::new(2.0, 0.0)), &w, [PI, 0.0], [1.0, 0.0], 2, &setup(64)).unwrap();
        let b1 = r1.b.to_dense().unwrap();
        let b2 = r2.b.to_dense().unwrap();
        assert!(b1.iter().zip(&b2).all(|(u, v)| (u - v * 2.0).norm() < 1e-12));
    }

    #[test]
    fn refuses_characteristic_directions() {
        let g = Grid::new(1, 64).unwrap();
        let a = Symbol::multiplier(g, |k| C64::new(if k[0] > 0.0 { 0.0 } else { 1.0 }, 0.0), SymbolClass::default());
        let e = parametrix(&a, &Weight::one(), [PI, 0.0], [1.0, 0.0], 1, &setup(64)).unwrap_err();
        assert!(matches!(e, Error::NotInvertible(_)));
    }
}
