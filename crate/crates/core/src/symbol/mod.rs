//! Symbols `a(x, xi)` on grid x lattice, and the operations of the symbolic calculus.

pub mod calculus;
pub mod charset;
pub mod parametrix;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{param, Error, Result};
use crate::grid::{forward_transform, inverse_transform, Grid, SampledField, TrigPoly};
use crate::spaces::Weight;
use crate::C64;

pub use calculus::{class_bound_report, compose, requantize, ClassBoundEntry};
pub use charset::{char_set, psi_invertible, CharEntry, CharParams, CharSetReport, Invertibility};
pub use parametrix::{parametrix, ParametrixResult, ParametrixSetup};

/// Largest dense table (entries) a symbol may materialize.
pub const DENSE_LIMIT: usize = 1 << 22;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Class metadata: order weight `w0`, and `(rho, delta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolClass {
    pub order: Weight,
    pub rho: f64,
    pub delta: f64,
}

impl SymbolClass {
    pub fn new(order: Weight, rho: f64, delta: f64) -> Self {
        SymbolClass { order, rho, delta }
    }

    pub fn standard(order: Weight) -> Self {
        SymbolClass { order, rho: 1.0, delta: 0.0 }
    }

    pub fn mu(&self) -> f64 {
        self.rho - self.delta
    }
}

impl Default for SymbolClass {
    fn default() -> Self {
        Self::standard(Weight::one())
    }
}

/// Frequency-side factor of a separable term.
#[derive(Debug, Clone, PartialEq)]
pub enum Multiplier {
    /// `xi^beta`.
    Monomial([u32; 2]),
    /// Values on the frequency lattice (storage order).
    Table(Vec<C64>),
}

impl Multiplier {
    pub fn values(&self, grid: &Grid) -> Vec<C64> {
        match self {
            Multiplier::Monomial(b) => (0..grid.len()).map(|i| monomial(grid.freq_f(i), *b)).collect(),
            Multiplier::Table(t) => t.clone(),
        }
    }

    pub fn at(&self, grid: &Grid, i: usize) -> C64 {
        match self {
            Multiplier::Monomial(b) => monomial(grid.freq_f(i), *b),
            Multiplier::Table(t) => t[i],
        }
    }

    pub fn degree(&self) -> Option<u32> {
        match self {
            Multiplier::Monomial(b) => Some(b[0] + b[1]),
            Multiplier::Table(_) => None,
        }
    }
}

pub fn monomial(k: [f64; 2], b: [u32; 2]) -> C64 {
    C64::new(libm::pow(k[0], b[0] as f64) * libm::pow(k[1], b[1] as f64), 0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coeff: SampledField,
    pub mult: Multiplier,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Repr {
    /// `sum_j c_j(x) m_j(xi)`.
    Separable(Vec<Term>),
    /// `table[k * len + x]`.
    Dense(Vec<C64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Symbol {
    pub grid: Grid,
    pub repr: Repr,
    pub class: SymbolClass,
}

fn check_beta(grid: &Grid, b: [u32; 2]) -> Result<()> {
    if grid.dim() == 1 && b[1] != 0 {
        return Err(param("multi-index has a second component in one dimension"));
    }
    Ok(())
}

pub(crate) fn dense_guard(grid: &Grid) -> Result<()> {
    let m = grid.len();
    if m * m > DENSE_LIMIT {
        return Err(Error::CostGuard(format!("dense symbol table of {m}x{m} entries exceeds the limit")));
    }
    Ok(())
}

impl Symbol {
    /// Exact form `sum_beta c_beta(x) xi^beta`.
    pub fn polynomial(grid: Grid, terms: Vec<([u32; 2], SampledField)>, class: SymbolClass) -> Result<Self> {
        let mut out = Vec::with_capacity(terms.len());
        for (b, c) in terms {
            check_beta(&grid, b)?;
            grid.same(&c.grid)?;
            out.push(Term { coeff: c, mult: Multiplier::Monomial(b) });
        }
        Ok(Symbol { grid, repr: Repr::Separable(out), class }.merged())
    }

    /// `x`-independent symbol given by a lattice function.
    pub fn multiplier(grid: Grid, f: impl Fn([f64; 2]) -> C64, class: SymbolClass) -> Self {
        let table = (0..grid.len()).map(|i| f(grid.freq_f(i))).collect();
        let one = SampledField::from_real(grid, |_| 1.0);
        Symbol { grid, repr: Repr::Separable(vec![Term { coeff: one, mult: Multiplier::Table(table) }]), class }
    }

    pub fn separable(grid: Grid, terms: Vec<Term>, class: SymbolClass) -> Result<Self> {
        for t in &terms {
            grid.same(&t.coeff.grid)?;
            if let Multiplier::Monomial(b) = t.mult {
                check_beta(&grid, b)?;
            }
            if let Multiplier::Table(v) = &t.mult {
                if v.len() != grid.len() {
                    return Err(Error::LengthMismatch { expected: grid.len(), got: v.len() });
                }
            }
        }
        Ok(Symbol { grid, repr: Repr::Separable(terms), class })
    }

    /// Dense symbol from an evaluator on grid points and lattice frequencies.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2], [f64; 2]) -> C64, class: SymbolClass) -> Result<Self> {
        dense_guard(&grid)?;
        let m = grid.len();
        let mut table = Vec::with_capacity(m * m);
        for k in 0..m {
            let kf = grid.freq_f(k);
            for x in 0..m {
                table.push(f(grid.point(x), kf));
            }
        }
        Ok(Symbol { grid, repr: Repr::Dense(table), class })
    }

    pub fn from_table(grid: Grid, table: Vec<C64>, class: SymbolClass) -> Result<Self> {
        let m = grid.len();
        if table.len() != m * m {
            return Err(Error::LengthMismatch { expected: m * m, got: table.len() });
        }
        Ok(Symbol { grid, repr: Repr::Dense(table), class })
    }

    pub fn constant(grid: Grid, c: C64) -> Self {
        let coeff = SampledField::from_fn(grid, |_| c);
        Symbol {
            grid,
            repr: Repr::Separable(vec![Term { coeff, mult: Multiplier::Monomial([0, 0]) }]),
            class: SymbolClass::default(),
        }
    }

    pub fn zero(grid: Grid) -> Self {
        Symbol { grid, repr: Repr::Separable(Vec::new()), class: SymbolClass::default() }
    }

    pub fn with_class(mut self, class: SymbolClass) -> Self {
        self.class = class;
        self
    }

    /// Every term is a coefficient times a monomial.
    pub fn is_exact(&self) -> bool {
        match &self.repr {
            Repr::Separable(t) => t.iter().all(|t| matches!(t.mult, Multiplier::Monomial(_))),
            Repr::Dense(_) => false,
        }
    }

    /// Polynomial degree in `xi` of the exact form.
    pub fn degree(&self) -> Option<u32> {
        match &self.repr {
            Repr::Separable(t) => t.iter().try_fold(0, |d, t| t.mult.degree().map(|e| d.max(e))),
            Repr::Dense(_) => None,
        }
    }

    pub fn terms(&self) -> Option<&[Term]> {
        match &self.repr {
            Repr::Separable(t) => Some(t),
            Repr::Dense(_) => None,
        }
    }

    /// Value at grid point `x` (index) and lattice frequency `k` (index).
    pub fn at(&self, x: usize, k: usize) -> C64 {
        match &self.repr {
            Repr::Separable(terms) => terms.iter().map(|t| t.coeff.values[x] * t.mult.at(&self.grid, k)).sum(),
            Repr::Dense(t) => t[k * self.grid.len() + x],
        }
    }

    /// Values `a(., k)` over all grid points.
    pub fn slice_at_freq(&self, k: usize) -> Vec<C64> {
        let m = self.grid.len();
        match &self.repr {
            Repr::Separable(terms) => {
                let mut out = vec![ZERO; m];
                for t in terms {
                    let c = t.mult.at(&self.grid, k);
                    if c != ZERO {
                        out.iter_mut().zip(&t.coeff.values).for_each(|(o, v)| *o += v * c);
                    }
                }
                out
            }
            Repr::Dense(t) => t[k * m..(k + 1) * m].to_vec(),
        }
    }

    pub fn to_dense(&self) -> Result<Vec<C64>> {
        match &self.repr {
            Repr::Dense(t) => Ok(t.clone()),
            Repr::Separable(_) => {
                dense_guard(&self.grid)?;
                let m = self.grid.len();
                let mut out = Vec::with_capacity(m * m);
                for k in 0..m {
                    out.extend(self.slice_at_freq(k));
                }
                Ok(out)
            }
        }
    }

    pub fn densified(&self) -> Result<Symbol> {
        Ok(Symbol { grid: self.grid, repr: Repr::Dense(self.to_dense()?), class: self.class.clone() })
    }

    pub fn scale(&self, c: C64) -> Symbol {
        let repr = match &self.repr {
            Repr::Separable(terms) => Repr::Separable(
                terms.iter().map(|t| Term { coeff: t.coeff.scale(c), mult: t.mult.clone() }).collect(),
            ),
            Repr::Dense(t) => Repr::Dense(t.iter().map(|v| v * c).collect()),
        };
        Symbol { grid: self.grid, repr, class: self.class.clone() }
    }

    pub fn add(&self, other: &Symbol) -> Result<Symbol> {
        self.grid.same(&other.grid)?;
        match (&self.repr, &other.repr) {
            (Repr::Separable(a), Repr::Separable(b)) => {
                let terms = a.iter().chain(b).cloned().collect();
                Ok(Symbol { grid: self.grid, repr: Repr::Separable(terms), class: self.class.clone() }.merged())
            }
            _ => {
                let a = self.to_dense()?;
                let b = other.to_dense()?;
                let t = a.iter().zip(&b).map(|(x, y)| x + y).collect();
                Ok(Symbol { grid: self.grid, repr: Repr::Dense(t), class: self.class.clone() })
            }
        }
    }

    pub fn sub(&self, other: &Symbol) -> Result<Symbol> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// Combine terms sharing a monomial and drop vanishing ones.
    pub fn merged(self) -> Symbol {
        let Repr::Separable(terms) = self.repr else { return self };
        let mut out: Vec<Term> = Vec::new();
        for t in terms {
            if t.coeff.max_abs() == 0.0 {
                continue;
            }
            if let Multiplier::Monomial(b) = t.mult {
                if let Some(o) = out.iter_mut().find(|o| o.mult == Multiplier::Monomial(b)) {
                    o.coeff.values.iter_mut().zip(&t.coeff.values).for_each(|(a, v)| *a += v);
                    continue;
                }
            }
            out.push(t);
        }
        out.retain(|t| t.coeff.max_abs() != 0.0);
        Symbol { grid: self.grid, repr: Repr::Separable(out), class: self.class }
    }

    /// `D_{x_j} = -i d/dx_j`, spectrally.
    pub fn dx(&self, axis: usize) -> Symbol {
        let g = self.grid;
        let repr = match &self.repr {
            Repr::Separable(terms) => Repr::Separable(
                terms.iter().map(|t| Term { coeff: dx_field(&t.coeff, axis), mult: t.mult.clone() }).collect(),
            ),
            Repr::Dense(table) => {
                let m = g.len();
                let mut out = Vec::with_capacity(table.len());
                for k in 0..m {
                    let slice = SampledField { grid: g, values: table[k * m..(k + 1) * m].to_vec() };
                    out.extend(dx_field(&slice, axis).values);
                }
                Repr::Dense(out)
            }
        };
        Symbol { grid: g, repr, class: self.class.clone() }.merged()
    }

    /// `D_{xi_j} = -i d/dxi_j`: exact on monomials, centered lattice differences otherwise.
    pub fn dxi(&self, axis: usize) -> Symbol {
        let g = self.grid;
        let mi = C64::new(0.0, -1.0);
        let repr = match &self.repr {
            Repr::Separable(terms) => Repr::Separable(
                terms
                    .iter()
                    .filter_map(|t| match &t.mult {
                        Multiplier::Monomial(b) => {
                            if b[axis] == 0 {
                                return None;
                            }
                            let mut nb = *b;
                            nb[axis] -= 1;
                            let c = mi * b[axis] as f64;
                            Some(Term { coeff: t.coeff.scale(c), mult: Multiplier::Monomial(nb) })
                        }
                        Multiplier::Table(v) => Some(Term {
                            coeff: t.coeff.clone(),
                            mult: Multiplier::Table(lattice_difference(&g, v, 1, axis).iter().map(|d| d * mi).collect()),
                        }),
                    })
                    .collect(),
            ),
            Repr::Dense(table) => {
                let m = g.len();
                let mut out = vec![ZERO; table.len()];
                let mut col = vec![ZERO; m];
                for x in 0..m {
                    for k in 0..m {
                        col[k] = table[k * m + x];
                    }
                    let d = lattice_difference(&g, &col, m.min(1), axis);
                    for k in 0..m {
                        out[k * m + x] = d[k] * mi;
                    }
                }
                Repr::Dense(out)
            }
        };
        Symbol { grid: g, repr, class: self.class.clone() }.merged()
    }

    /// Pointwise product (not the composition product).
    pub fn pointwise(&self, other: &Symbol) -> Result<Symbol> {
        self.grid.same(&other.grid)?;
        let g = self.grid;
        match (&self.repr, &other.repr) {
            (Repr::Separable(a), Repr::Separable(b)) => {
                let mut terms = Vec::with_capacity(a.len() * b.len());
                for s in a {
                    for t in b {
                        let mult = match (&s.mult, &t.mult) {
                            (Multiplier::Monomial(p), Multiplier::Monomial(q)) => {
                                Multiplier::Monomial([p[0] + q[0], p[1] + q[1]])
                            }
                            (p, q) => Multiplier::Table(
                                p.values(&g).iter().zip(q.values(&g)).map(|(u, v)| u * v).collect(),
                            ),
                        };
                        terms.push(Term { coeff: s.coeff.mul(&t.coeff)?, mult });
                    }
                }
                Ok(Symbol { grid: g, repr: Repr::Separable(terms), class: self.class.clone() }.merged())
            }
            _ => {
                let a = self.to_dense()?;
                let b = other.to_dense()?;
                let t = a.iter().zip(&b).map(|(x, y)| x * y).collect();
                Ok(Symbol { grid: g, repr: Repr::Dense(t), class: self.class.clone() })
            }
        }
    }

    /// Exact form agrees with a lattice evaluator.
    pub fn max_deviation(&self, f: impl Fn([f64; 2], [f64; 2]) -> C64) -> f64 {
        let g = self.grid;
        let m = g.len();
        let mut worst: f64 = 0.0;
        for k in 0..m {
            let slice = self.slice_at_freq(k);
            let kf = g.freq_f(k);
            for (x, v) in slice.iter().enumerate() {
                worst = worst.max((v - f(g.point(x), kf)).norm());
            }
        }
        worst
    }
}

/// `D_{x_j} f = -i d f / dx_j` via the spectrum.
pub fn dx_field(f: &SampledField, axis: usize) -> SampledField {
    let mut s = forward_transform(f);
    let g = f.grid;
    for (i, c) in s.coeffs.iter_mut().enumerate() {
        let k = g.freq(i)[axis];
        // the Nyquist mode has no consistent derivative on a real grid
        *c *= if k == -((g.n() / 2) as i64) { 0.0 } else { k as f64 };
    }
    inverse_transform(&s)
}

/// Centered lattice difference (step 1) of `v` along `axis`, one-sided at the lattice edge.
fn lattice_difference(g: &Grid, v: &[C64], _stride: usize, axis: usize) -> Vec<C64> {
    (0..g.len())
        .map(|i| {
            let k = g.freq(i);
            let mut up = k;
            up[axis] += 1;
            let mut dn = k;
            dn[axis] -= 1;
            match (g.freq_index(up), g.freq_index(dn)) {
                (Some(u), Some(d)) => (v[u] - v[d]) * 0.5,
                (Some(u), None) => v[u] - v[i],
                (None, Some(d)) => v[i] - v[d],
                (None, None) => ZERO,
            }
        })
        .collect()
}

/// Off-grid evaluation of the `x`-dependence (for the t-quantized double sum and kernels).
pub struct OffGrid {
    parts: Vec<(TrigPoly, Vec<C64>)>,
    dense: Option<Vec<TrigPoly>>,
}

impl OffGrid {
    pub fn new(a: &Symbol) -> Self {
        let g = a.grid;
        match &a.repr {
            Repr::Separable(terms) => OffGrid {
                parts: terms.iter().map(|t| (TrigPoly::from_field(&t.coeff, 1e-14), t.mult.values(&g))).collect(),
                dense: None,
            },
            Repr::Dense(table) => {
                let m = g.len();
                let polys = (0..m)
                    .map(|k| {
                        let slice = SampledField { grid: g, values: table[k * m..(k + 1) * m].to_vec() };
                        TrigPoly::from_field(&slice, 1e-14)
                    })
                    .collect();
                OffGrid { parts: Vec::new(), dense: Some(polys) }
            }
        }
    }

    /// Separable parts: coefficient interpolants with their lattice multipliers.
    pub fn separable_parts(&self) -> Option<&[(TrigPoly, Vec<C64>)]> {
        self.dense.is_none().then_some(self.parts.as_slice())
    }

    pub fn eval(&self, x: [f64; 2], k: usize) -> C64 {
        match &self.dense {
            Some(polys) => polys[k].eval(x),
            None => self.parts.iter().map(|(p, m)| if m[k] == ZERO { ZERO } else { p.eval(x) * m[k] }).sum(),
        }
    }

    /// Largest x-frequency present in the coefficients.
    pub fn max_x_frequency(&self) -> f64 {
        match &self.dense {
            Some(polys) => polys.iter().fold(0.0, |m, p| f64::max(m, p.max_frequency())),
            None => self.parts.iter().fold(0.0, |m, (p, _)| f64::max(m, p.max_frequency())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g1() -> Grid {
        Grid::new(1, 32).unwrap()
    }

    #[test]
    fn polynomial_matches_evaluator() {
        let g = g1();
        let c = SampledField::from_fn(g, |x| C64::new(0.0, x[0]).exp());
        let a = Symbol::polynomial(g, vec![([1, 0], c), ([0, 0], SampledField::from_real(g, |_| 2.0))], SymbolClass::default())
            .unwrap();
        let dev = a.max_deviation(|x, k| C64::new(0.0, x[0]).exp() * k[0] + 2.0);
        assert!(dev < 1e-12);
        assert!(a.is_exact());
        assert_eq!(a.degree(), Some(1));
    }

    #[test]
    fn derivatives_of_exact_forms() {
        let g = g1();
        let c = SampledField::from_fn(g, |x| C64::new(0.0, 2.0 * x[0]).exp());
        let a = Symbol::polynomial(g, vec![([2, 0], c)], SymbolClass::default()).unwrap();
        // D_x (e^{2ix} xi^2) = 2 e^{2ix} xi^2 ; D_xi = -2i e^{2ix} xi
        let dx = a.dx(0);
        assert!(dx.max_deviation(|x, k| C64::new(0.0, 2.0 * x[0]).exp() * 2.0 * k[0] * k[0]) < 1e-9);
        let dxi = a.dxi(0);
        assert!(dxi.max_deviation(|x, k| C64::new(0.0, 2.0 * x[0]).exp() * C64::new(0.0, -2.0) * k[0]) < 1e-12);
    }

    #[test]
    fn dense_and_separable_agree() {
        let g = g1();
        let c = SampledField::from_fn(g, |x| C64::new(x[0].cos(), 0.0));
        let a = Symbol::polynomial(g, vec![([1, 0], c)], SymbolClass::default()).unwrap();
        let d = a.densified().unwrap();
        for x in 0..g.len() {
            for k in 0..g.len() {
                assert_eq!(a.at(x, k), d.at(x, k));
            }
        }
        let da = a.dx(0).to_dense().unwrap();
        let dd = d.dx(0).to_dense().unwrap();
        assert!(da.iter().zip(&dd).all(|(u, v)| (u - v).norm() < 1e-10));
    }
}
