use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{param, Result};
use crate::grid::{Grid, SampledField, SpectralField};
use crate::spaces::weight::Weight;
use crate::C64;

/// Exponent in `[1, inf]`; serialized as a number or the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponent(pub f64);

impl Exponent {
    pub const INF: Exponent = Exponent(f64::INFINITY);

    pub fn is_inf(self) -> bool {
        self.0.is_infinite()
    }

    pub fn validate(self) -> Result<()> {
        if self.0 >= 1.0 {
            Ok(())
        } else {
            Err(param("exponent outside [1, inf]"))
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        if self.is_inf() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Exponent(v)),
            Raw::Text(t) if t == "inf" || t == "infinity" => Ok(Exponent::INF),
            Raw::Text(t) => Err(serde::de::Error::custom(alloc::format!("bad exponent {t}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NormKind {
    Lp { p: Exponent },
    /// Inner `p` over the first block, outer `q` over the second.
    Lpq1 { p: Exponent, q: Exponent },
    /// Inner `p` over the second block, outer `q` over the first.
    Lpq2 { p: Exponent, q: Exponent },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BfSpec {
    #[serde(flatten)]
    pub kind: NormKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub internal_weight: Option<Weight>,
}

impl BfSpec {
    pub fn lp(p: f64) -> Self {
        BfSpec { kind: NormKind::Lp { p: Exponent(p) }, internal_weight: None }
    }

    pub fn lpq1(p: f64, q: f64) -> Self {
        BfSpec { kind: NormKind::Lpq1 { p: Exponent(p), q: Exponent(q) }, internal_weight: None }
    }

    pub fn lpq2(p: f64, q: f64) -> Self {
        BfSpec { kind: NormKind::Lpq2 { p: Exponent(p), q: Exponent(q) }, internal_weight: None }
    }

    pub fn with_weight(mut self, w: Weight) -> Self {
        self.internal_weight = Some(w);
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            NormKind::Lp { p } => p.validate(),
            NormKind::Lpq1 { p, q } | NormKind::Lpq2 { p, q } => {
                p.validate()?;
                q.validate()
            }
        }
    }

    fn internal(&self, x: [f64; 2], xi: [f64; 2]) -> f64 {
        self.internal_weight.as_ref().map_or(1.0, |w| w.eval(x, xi))
    }
}

/// How a flat array splits into two index blocks and which measure each carries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Layout {
    /// `data[i1 * second + i2]`, counting measure on both blocks.
    Plain { first: usize, second: usize },
    /// Frequency lattice; in two dimensions the blocks are the two axes. The internal
    /// weight is evaluated at `(x_ref, k)`.
    Spectral { grid: Grid, x_ref: [f64; 2] },
    /// Phase space `(x, k)`; the x-block carries the `(2pi/n)^d` quadrature.
    PhaseSpace { grid: Grid },
}

impl Layout {
    fn blocks(&self) -> (usize, usize, f64, f64) {
        match *self {
            Layout::Plain { first, second } => (first, second, 1.0, 1.0),
            Layout::Spectral { grid, .. } => {
                if grid.dim() == 1 {
                    (grid.n(), 1, 1.0, 1.0)
                } else {
                    (grid.n(), grid.n(), 1.0, 1.0)
                }
            }
            Layout::PhaseSpace { grid } => (grid.len(), grid.len(), grid.cell(), 1.0),
        }
    }

    fn internal_factor(&self, spec: &BfSpec, i: usize) -> f64 {
        if spec.internal_weight.is_none() {
            return 1.0;
        }
        match *self {
            Layout::Plain { .. } => 1.0,
            Layout::Spectral { grid, x_ref } => spec.internal(x_ref, grid.freq_f(i)),
            Layout::PhaseSpace { grid } => {
                let m = grid.len();
                spec.internal(grid.point(i / m), grid.freq_f(i % m))
            }
        }
    }
}

/// `(sum w v^p)^{1/p}`, or the max for `p = inf`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Reducer {
    p: f64,
    acc: f64,
}

impl Reducer {
    pub(crate) fn new(p: Exponent) -> Self {
        Reducer { p: p.0, acc: 0.0 }
    }

    #[inline]
    pub(crate) fn push(&mut self, v: f64, w: f64) {
        if self.p.is_infinite() {
            if v > self.acc {
                self.acc = v;
            }
        } else if v != 0.0 {
            self.acc += w * pow_p(v, self.p);
        }
    }

    pub(crate) fn value(&self) -> f64 {
        root_p(self.acc, self.p)
    }
}

#[inline]
pub(crate) fn pow_p(v: f64, p: f64) -> f64 {
    if p == 1.0 {
        v
    } else if p == 2.0 {
        v * v
    } else {
        libm::pow(v, p)
    }
}

#[inline]
pub(crate) fn root_p(acc: f64, p: f64) -> f64 {
    if p.is_infinite() || p == 1.0 {
        acc
    } else if p == 2.0 {
        libm::sqrt(acc)
    } else {
        libm::pow(acc, 1.0 / p)
    }
}

/// Norm of nonnegative magnitudes laid out as two blocks.
pub fn block_norm(kind: NormKind, layout: &Layout, mag: &[f64]) -> f64 {
    let (n1, n2, w1, w2) = layout.blocks();
    match kind {
        NormKind::Lp { p } => {
            let mut r = Reducer::new(p);
            mag.iter().for_each(|&v| r.push(v, w1 * w2));
            r.value()
        }
        NormKind::Lpq1 { p, q } => {
            let mut outer = Reducer::new(q);
            for i2 in 0..n2 {
                let mut inner = Reducer::new(p);
                for i1 in 0..n1 {
                    inner.push(mag[i1 * n2 + i2], w1);
                }
                outer.push(inner.value(), w2);
            }
            outer.value()
        }
        NormKind::Lpq2 { p, q } => {
            let mut outer = Reducer::new(q);
            for i1 in 0..n1 {
                let mut inner = Reducer::new(p);
                for i2 in 0..n2 {
                    inner.push(mag[i1 * n2 + i2], w2);
                }
                outer.push(inner.value(), w1);
            }
            outer.value()
        }
    }
}

pub fn bf_norm(spec: &BfSpec, layout: &Layout, data: &[C64]) -> Result<f64> {
    spec.validate()?;
    let (n1, n2, _, _) = layout.blocks();
    if data.len() != n1 * n2 {
        return Err(crate::Error::LengthMismatch { expected: n1 * n2, got: data.len() });
    }
    let mag: Vec<f64> =
        data.iter().enumerate().map(|(i, v)| v.norm() * layout.internal_factor(spec, i)).collect();
    Ok(block_norm(spec.kind, layout, &mag))
}

/// `bf_norm(spec2d, phi (x) f)` on phase space; the norm of the projection space.
pub fn projection_norm(spec2d: &BfSpec, phi: &SampledField, f: &SpectralField) -> Result<f64> {
    phi.grid.same(&f.grid)?;
    if phi.values.iter().all(|v| v.norm() == 0.0) {
        return Err(param("projection window must be nonzero"));
    }
    let m = phi.grid.len();
    let mut data = Vec::with_capacity(m * m);
    for a in &phi.values {
        for b in &f.coeffs {
            data.push(a * b);
        }
    }
    bf_norm(spec2d, &Layout::PhaseSpace { grid: phi.grid }, &data)
}

/// Closed-form tensor factorization of `projection_norm` (no internal weight).
pub fn projection_factorized(spec2d: &BfSpec, phi: &SampledField, f: &SpectralField) -> Option<f64> {
    if spec2d.internal_weight.is_some() {
        return None;
    }
    let cell = phi.grid.cell();
    let phys = |p: Exponent| {
        let mut r = Reducer::new(p);
        phi.values.iter().for_each(|v| r.push(v.norm(), cell));
        r.value()
    };
    let freq = |p: Exponent| {
        let mut r = Reducer::new(p);
        f.coeffs.iter().for_each(|v| r.push(v.norm(), 1.0));
        r.value()
    };
    Some(match spec2d.kind {
        NormKind::Lp { p } => phys(p) * freq(p),
        NormKind::Lpq1 { p, q } => phys(p) * freq(q),
        NormKind::Lpq2 { p, q } => phys(q) * freq(p),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YoungReport {
    pub ratio: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Compares `||phi * f||_B` with `||phi||_{L^1(v)} ||f||_B` for cyclic lattice convolution.
pub fn young_check(phi: &SpectralField, f: &SpectralField, spec: &BfSpec, v: &Weight, bound: f64) -> Result<YoungReport> {
    phi.grid.same(&f.grid)?;
    let g = f.grid;
    let layout = Layout::Spectral { grid: g, x_ref: [0.0; 2] };
    let nf = bf_norm(spec, &layout, &f.coeffs)?;
    if nf == 0.0 {
        return Ok(YoungReport { ratio: 0.0, bound, pass: true });
    }
    let mut conv = vec![C64::new(0.0, 0.0); g.len()];
    for (m, a) in phi.coeffs.iter().enumerate() {
        if a.norm() == 0.0 {
            continue;
        }
        let km = g.freq(m);
        for (j, b) in f.coeffs.iter().enumerate() {
            let kj = g.freq(j);
            conv[g.freq_index_wrapped([km[0] + kj[0], km[1] + kj[1]])] += a * b;
        }
    }
    let l1v: f64 = phi.coeffs.iter().enumerate().map(|(m, a)| a.norm() * v.eval([0.0; 2], g.freq_f(m))).sum();
    let ratio = bf_norm(spec, &layout, &conv)? / (l1v * nf);
    Ok(YoungReport { ratio, bound, pass: ratio <= bound * (1.0 + 1e-12) })
}

/// A frequency selection (cone) with its dyadic shell labels.
#[derive(Debug, Clone)]
pub struct Selection {
    pub members: Vec<(u32, Option<u16>)>,
    pub shells: usize,
}

/// Streams phase-space rows `x -> |V(x, .)|` and reduces them per selection.
#[derive(Debug, Clone)]
pub struct PhaseAccumulator {
    kind: NormKind,
    cell: f64,
    selections: Vec<Selection>,
    columns: Vec<f64>,
    totals: Vec<Reducer>,
    shell_acc: Vec<Vec<Reducer>>,
}

impl PhaseAccumulator {
    pub fn new(kind: NormKind, grid: &Grid, selections: Vec<Selection>) -> Self {
        let outer = match kind {
            NormKind::Lp { p } => p,
            NormKind::Lpq1 { q, .. } | NormKind::Lpq2 { q, .. } => q,
        };
        let totals = selections.iter().map(|_| Reducer::new(outer)).collect();
        let shell_acc = selections.iter().map(|s| vec![Reducer::new(outer); s.shells]).collect();
        let columns = match kind {
            NormKind::Lpq1 { .. } => vec![0.0; grid.len()],
            _ => Vec::new(),
        };
        PhaseAccumulator { kind, cell: grid.cell(), selections, columns, totals, shell_acc }
    }

    pub fn push_row(&mut self, row: &[f64]) {
        match self.kind {
            NormKind::Lp { .. } => {
                for (s, sel) in self.selections.iter().enumerate() {
                    for &(k, sh) in &sel.members {
                        let v = row[k as usize];
                        self.totals[s].push(v, self.cell);
                        if let Some(m) = sh {
                            self.shell_acc[s][m as usize].push(v, self.cell);
                        }
                    }
                }
            }
            NormKind::Lpq1 { p, .. } => {
                for (c, &v) in self.columns.iter_mut().zip(row) {
                    if p.is_inf() {
                        *c = f64::max(*c, v);
                    } else if v != 0.0 {
                        *c += self.cell * pow_p(v, p.0);
                    }
                }
            }
            NormKind::Lpq2 { p, .. } => {
                for (s, sel) in self.selections.iter().enumerate() {
                    let mut total = Reducer::new(p);
                    let mut shells = vec![Reducer::new(p); sel.shells];
                    for &(k, sh) in &sel.members {
                        let v = row[k as usize];
                        total.push(v, 1.0);
                        if let Some(m) = sh {
                            shells[m as usize].push(v, 1.0);
                        }
                    }
                    self.totals[s].push(total.value(), self.cell);
                    for (acc, r) in self.shell_acc[s].iter_mut().zip(&shells) {
                        acc.push(r.value(), self.cell);
                    }
                }
            }
        }
    }

    /// Per selection: `(total, shell norms)`.
    pub fn finish(mut self) -> Vec<(f64, Vec<f64>)> {
        if let NormKind::Lpq1 { p, .. } = self.kind {
            for (s, sel) in self.selections.iter().enumerate() {
                for &(k, sh) in &sel.members {
                    let inner = root_p(self.columns[k as usize], p.0);
                    self.totals[s].push(inner, 1.0);
                    if let Some(m) = sh {
                        self.shell_acc[s][m as usize].push(inner, 1.0);
                    }
                }
            }
        }
        self.totals
            .iter()
            .zip(&self.shell_acc)
            .map(|(t, sh)| (t.value(), sh.iter().map(|r| r.value()).collect()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plain(first: usize, second: usize) -> Layout {
        Layout::Plain { first, second }
    }

    #[test]
    fn euclid_and_sup() {
        let mut d = vec![C64::new(0.0, 0.0); 16];
        d[2] = C64::new(3.0, 0.0);
        d[9] = C64::new(0.0, 4.0);
        assert!((bf_norm(&BfSpec::lp(2.0), &plain(4, 4), &d).unwrap() - 5.0).abs() < 1e-15);
        let c = vec![C64::new(-2.5, 0.0); 16];
        assert_eq!(bf_norm(&BfSpec::lp(f64::INFINITY), &plain(4, 4), &c).unwrap(), 2.5);
        assert!(bf_norm(&BfSpec::lp(0.5), &plain(4, 4), &c).is_err());
    }

    #[test]
    fn exponent_json() {
        let s: BfSpec = serde_json::from_str(r#"{"kind":"lpq1","p":1,"q":"inf"}"#).unwrap();
        assert_eq!(s.kind, NormKind::Lpq1 { p: Exponent(1.0), q: Exponent::INF });
        assert_eq!(serde_json::to_string(&s).unwrap(), r#"{"kind":"lpq1","p":1.0,"q":"inf"}"#);
    }

    #[test]
    fn accumulator_matches_block_norm() {
        let g = Grid::new(1, 8).unwrap();
        let m = g.len();
        let mag: Vec<f64> = (0..m * m).map(|i| ((i * 37 % 11) as f64) * 0.3).collect();
        let all = Selection { members: (0..m as u32).map(|k| (k, None)).collect(), shells: 0 };
        for kind in [BfSpec::lp(1.0), BfSpec::lp(3.0), BfSpec::lpq1(1.0, 2.0), BfSpec::lpq2(2.0, 1.0), BfSpec::lpq1(f64::INFINITY, 1.0)] {
            let mut acc = PhaseAccumulator::new(kind.kind, &g, vec![all.clone()]);
            for row in mag.chunks(m) {
                acc.push_row(row);
            }
            let got = acc.finish()[0].0;
            let want = block_norm(kind.kind, &Layout::PhaseSpace { grid: g }, &mag);
            assert!((got - want).abs() <= 1e-12 * want, "{kind:?}");
        }
    }
}
