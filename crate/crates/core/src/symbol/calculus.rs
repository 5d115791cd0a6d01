use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{Symbol, SymbolClass};
use crate::error::{param, Result};
use crate::spaces::Weight;
use crate::C64;

/// Multi-indices of length `dim` with `|alpha| <= max`.
pub fn multi_indices(dim: usize, max: u32) -> Vec<[u32; 2]> {
    let mut out = Vec::new();
    for total in 0..=max {
        if dim == 1 {
            out.push([total, 0]);
        } else {
            for a in (0..=total).rev() {
                out.push([a, total - a]);
            }
        }
    }
    out
}

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |f, k| f * k as f64)
}

fn i_pow(k: u32) -> C64 {
    match k % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

fn composed_class(a: &SymbolClass, b: &SymbolClass) -> SymbolClass {
    SymbolClass {
        order: Weight::product(&a.order, &b.order),
        rho: a.rho.min(b.rho),
        delta: a.delta.max(b.delta),
    }
}

/// Truncated composition `sum_{|alpha|<N} i^|alpha| (D_xi^alpha a1)(D_x^alpha a2) / alpha!`.
///
/// Exact (`Op(c) = Op(a1) Op(a2)`) when `a1` is a polynomial in `xi` of degree `< N`.
pub fn compose(a1: &Symbol, a2: &Symbol, n_terms: u32) -> Result<Symbol> {
    if n_terms < 1 {
        return Err(param("truncation order must be at least 1"));
    }
    a1.grid.same(&a2.grid)?;
    let dim = a1.grid.dim();
    let mut acc = Symbol::zero(a1.grid);
    for alpha in multi_indices(dim, n_terms - 1) {
        let mut left = a1.clone();
        let mut right = a2.clone();
        for (axis, &order) in alpha.iter().enumerate().take(dim) {
            for _ in 0..order {
                left = left.dxi(axis);
                right = right.dx(axis);
            }
        }
        if left.terms().is_some_and(|t| t.is_empty()) || right.terms().is_some_and(|t| t.is_empty()) {
            continue;
        }
        let c = i_pow(alpha[0] + alpha[1]) / (factorial(alpha[0]) * factorial(alpha[1]));
        acc = acc.add(&left.pointwise(&right)?.scale(c))?;
    }
    Ok(acc.with_class(composed_class(&a1.class, &a2.class)))
}

/// `<D_x, D_xi> a`.
fn pairing(a: &Symbol) -> Result<Symbol> {
    let mut acc = Symbol::zero(a.grid);
    for axis in 0..a.grid.dim() {
        acc = acc.add(&a.dxi(axis).dx(axis))?;
    }
    Ok(acc)
}

/// Symbol `b` with `Op_s(a) = Op_t(b)`, truncated to `N` terms of
/// `sum_k (i(s - t) <D_x, D_xi>)^k a / k!`. Terminates for polynomials of degree `< N`.
pub fn requantize(a: &Symbol, s: f64, t: f64, n_terms: u32) -> Result<Symbol> {
    if n_terms < 1 {
        return Err(param("truncation order must be at least 1"));
    }
    if !(s.is_finite() && t.is_finite()) {
        return Err(param("quantization parameters must be finite"));
    }
    let mut acc = a.clone();
    if s == t {
        return Ok(acc);
    }
    let mut term = a.clone();
    for k in 1..n_terms {
        term = pairing(&term)?;
        if term.terms().is_some_and(|t| t.is_empty()) {
            break;
        }
        let c = C64::new(0.0, s - t).powu(k) / factorial(k);
        acc = acc.add(&term.scale(c))?;
    }
    Ok(acc.with_class(a.class.clone()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassBoundEntry {
    pub alpha: [u32; 2],
    pub beta: [u32; 2],
    pub ratio: f64,
}

/// Stencil of the `m`-fold centered difference with half-step 1: offsets `-m, -m+2, .., m`.
fn centered(m: u32) -> Vec<(i64, f64)> {
    (0..=m)
        .map(|j| {
            let binom = factorial(m) / (factorial(j) * factorial(m - j));
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            (m as i64 - 2 * j as i64, sign * binom / libm::pow(2.0, m as f64))
        })
        .collect()
}

/// Sup over the lattice of `|Dx^alpha Dxi^beta a| / (w0 <xi>^{-rho|beta| + delta|alpha|})`,
/// with centered differences (grid step in `x`, unit step in `xi`).
///
/// Frequencies whose stencil leaves the lattice are skipped.
pub fn class_bound_report(a: &Symbol, max_order: u32) -> Result<Vec<ClassBoundEntry>> {
    if max_order > 3 {
        return Err(param("derivative orders are capped at 3"));
    }
    let g = a.grid;
    let dim = g.dim();
    let n = g.n() as i64;
    let h = g.spacing();
    let m = g.len();
    let mut out = Vec::new();
    for alpha in multi_indices(dim, max_order) {
        for beta in multi_indices(dim, max_order) {
            // stencil entries: (x offset, xi offset, weight)
            let mut stencil: Vec<([i64; 2], [i64; 2], f64)> = alloc::vec![([0; 2], [0; 2], 1.0)];
            for axis in 0..dim {
                for (order, is_x) in [(alpha[axis], true), (beta[axis], false)] {
                    let st = centered(order);
                    let scale = if is_x { libm::pow(h, order as f64) } else { 1.0 };
                    let mut next = Vec::with_capacity(stencil.len() * st.len());
                    for (xo, ko, w) in &stencil {
                        for (off, c) in &st {
                            let (mut xo, mut ko) = (*xo, *ko);
                            if is_x {
                                xo[axis] += off;
                            } else {
                                ko[axis] += off;
                            }
                            next.push((xo, ko, w * c / scale));
                        }
                    }
                    stencil = next;
                }
            }
            let mut sup: f64 = 0.0;
            for k in 0..m {
                let kk = g.freq(k);
                let shifted: Option<Vec<usize>> = stencil
                    .iter()
                    .map(|(_, ko, _)| g.freq_index([kk[0] + ko[0], kk[1] + ko[1]]))
                    .collect();
                let Some(kidx) = shifted else { continue };
                let kf = g.freq_f(k);
                let bracket = libm::sqrt(1.0 + kf[0] * kf[0] + kf[1] * kf[1]);
                let expo = -a.class.rho * (beta[0] + beta[1]) as f64 + a.class.delta * (alpha[0] + alpha[1]) as f64;
                let norm_k = libm::pow(bracket, expo);
                for x in 0..m {
                    let ax = g.axes(x);
                    let mut acc = C64::new(0.0, 0.0);
                    for ((xo, _, w), &ki) in stencil.iter().zip(&kidx) {
                        let j0 = (ax[0] as i64 + xo[0]).rem_euclid(n) as usize;
                        let j1 = if dim == 2 { (ax[1] as i64 + xo[1]).rem_euclid(n) as usize } else { 0 };
                        acc += a.at(g.flat([j0, j1]), ki) * *w;
                    }
                    let r = acc.norm() / (a.class.order.eval(g.point(x), kf) * norm_k);
                    sup = sup.max(r);
                }
            }
            out.push(ClassBoundEntry { alpha, beta, ratio: sup });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid, SampledField};
    use alloc::vec;

    fn eix(g: Grid, k: f64) -> SampledField {
        SampledField::from_fn(g, move |x| C64::new(0.0, k * x[0]).exp())
    }

    #[test]
    fn compose_xi_then_exponential() {
        let g = Grid::new(1, 32).unwrap();
        let a1 = Symbol::polynomial(g, vec![([1, 0], SampledField::from_real(g, |_| 1.0))], Default::default()).unwrap();
        let a2 = Symbol::polynomial(g, vec![([0, 0], eix(g, 1.0))], Default::default()).unwrap();
        let c = compose(&a1, &a2, 2).unwrap();
        let dev = c.max_deviation(|x, k| C64::new(0.0, x[0]).exp() * (k[0] + 1.0));
        assert!(dev < 1e-12, "{dev}");
    }

    #[test]
    fn requantize_sign() {
        let g = Grid::new(1, 32).unwrap();
        let a = Symbol::polynomial(g, vec![([1, 0], eix(g, 1.0))], Default::default()).unwrap();
        let b = requantize(&a, 1.0, 0.0, 2).unwrap();
        assert!(b.max_deviation(|x, k| C64::new(0.0, x[0]).exp() * (k[0] + 1.0)) < 1e-12);
        let b = requantize(&a, 0.0, 1.0, 2).unwrap();
        assert!(b.max_deviation(|x, k| C64::new(0.0, x[0]).exp() * (k[0] - 1.0)) < 1e-12);
        let back = requantize(&b, 1.0, 0.0, 3).unwrap();
        assert!(back.sub(&a).unwrap().max_deviation(|_, _| C64::new(0.0, 0.0)) < 1e-12);
    }

    #[test]
    fn constant_symbol_bounds() {
        let g = Grid::new(1, 32).unwrap();
        let a = Symbol::constant(g, C64::new(1.0, 0.0));
        let r = class_bound_report(&a, 2).unwrap();
        for e in r {
            let want = if e.alpha == [0, 0] && e.beta == [0, 0] { 1.0 } else { 0.0 };
            assert!((e.ratio - want).abs() < 1e-12);
        }
    }

    #[test]
    fn centered_stencil_second_order() {
        let st = centered(2);
        // (f(+2) - 2 f(0) + f(-2)) / 4
        assert_eq!(st, vec![(2, 0.25), (0, -0.5), (-2, 0.25)]);
    }
}
