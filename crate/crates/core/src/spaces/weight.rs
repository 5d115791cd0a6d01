use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::grid::wrap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassTag {
    pub rho: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum WeightFamily {
    Constant { c: f64 },
    /// `<xi>^s`.
    PolyBracket { s: f64 },
    /// `prod_i <xi_i>^{s_i}`.
    Anisotropic { s: [f64; 2] },
    /// `<x>^spatial * w(xi)`, with `x` taken as its representative in `[-pi, pi)^d`.
    Separable { spatial: f64, spectral: Box<WeightFamily> },
    Product { factors: Vec<WeightFamily> },
    Quotient { num: Box<WeightFamily>, den: Box<WeightFamily> },
}

fn bracket(v: [f64; 2]) -> f64 {
    libm::sqrt(1.0 + v[0] * v[0] + v[1] * v[1])
}

impl WeightFamily {
    pub fn eval(&self, x: [f64; 2], xi: [f64; 2]) -> f64 {
        match self {
            WeightFamily::Constant { c } => *c,
            WeightFamily::PolyBracket { s } => libm::pow(bracket(xi), *s),
            WeightFamily::Anisotropic { s } => {
                libm::pow(bracket([xi[0], 0.0]), s[0]) * libm::pow(bracket([xi[1], 0.0]), s[1])
            }
            WeightFamily::Separable { spatial, spectral } => {
                let xr = [wrap(x[0]), wrap(x[1])];
                libm::pow(bracket(xr), *spatial) * spectral.eval(x, xi)
            }
            WeightFamily::Product { factors } => factors.iter().map(|w| w.eval(x, xi)).product(),
            WeightFamily::Quotient { num, den } => num.eval(x, xi) / den.eval(x, xi),
        }
    }

    pub fn witness(&self) -> WeightFamily {
        match self {
            WeightFamily::Constant { .. } => WeightFamily::Constant { c: 1.0 },
            WeightFamily::PolyBracket { s } => WeightFamily::PolyBracket { s: s.abs() },
            WeightFamily::Anisotropic { s } => WeightFamily::Anisotropic { s: [s[0].abs(), s[1].abs()] },
            WeightFamily::Separable { spatial, spectral } => WeightFamily::Separable {
                spatial: spatial.abs(),
                spectral: Box::new(spectral.witness()),
            },
            WeightFamily::Product { factors } => {
                WeightFamily::Product { factors: factors.iter().map(|w| w.witness()).collect() }
            }
            WeightFamily::Quotient { num, den } => {
                WeightFamily::Product { factors: vec![num.witness(), den.witness()] }
            }
        }
    }

    /// Depends on the spatial slot.
    pub fn is_spatial(&self) -> bool {
        match self {
            WeightFamily::Separable { spatial, .. } => *spatial != 0.0,
            WeightFamily::Product { factors } => factors.iter().any(|w| w.is_spatial()),
            WeightFamily::Quotient { num, den } => num.is_spatial() || den.is_spatial(),
            _ => false,
        }
    }
}

/// Positive weight on phase space with an optional `(rho, delta)` class tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weight {
    #[serde(flatten)]
    pub family: WeightFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_tag: Option<ClassTag>,
}

impl Weight {
    pub fn new(family: WeightFamily) -> Self {
        Weight { family, class_tag: None }
    }

    pub fn one() -> Self {
        Self::new(WeightFamily::Constant { c: 1.0 })
    }

    pub fn constant(c: f64) -> Self {
        Self::new(WeightFamily::Constant { c })
    }

    /// `sigma_s(x, xi) = <xi>^s`.
    pub fn sigma(s: f64) -> Self {
        Weight { family: WeightFamily::PolyBracket { s }, class_tag: Some(ClassTag { rho: 1.0, delta: 0.0 }) }
    }

    pub fn with_class(mut self, rho: f64, delta: f64) -> Self {
        self.class_tag = Some(ClassTag { rho, delta });
        self
    }

    pub fn product(a: &Weight, b: &Weight) -> Self {
        Self::new(WeightFamily::Product { factors: vec![a.family.clone(), b.family.clone()] })
    }

    pub fn quotient(a: &Weight, b: &Weight) -> Self {
        Self::new(WeightFamily::Quotient { num: Box::new(a.family.clone()), den: Box::new(b.family.clone()) })
    }

    pub fn eval(&self, x: [f64; 2], xi: [f64; 2]) -> f64 {
        self.family.eval(x, xi)
    }

    pub fn witness(&self) -> Weight {
        Weight::new(self.family.witness())
    }

    pub fn validate(&self) -> Result<()> {
        if let WeightFamily::Constant { c } = self.family {
            if !(c > 0.0) {
                return Err(param("constant weight must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub x: [f64; 2],
    pub xi: [f64; 2],
}

/// Largest `w(p + q) / (w(p) v(q))` over the probe pairs.
pub fn moderation_check(w: &Weight, v: &Weight, probes: &[(PhasePoint, PhasePoint)]) -> f64 {
    probes.iter().fold(0.0, |c, (p, q)| {
        let sum = PhasePoint {
            x: [p.x[0] + q.x[0], p.x[1] + q.x[1]],
            xi: [p.xi[0] + q.xi[0], p.xi[1] + q.xi[1]],
        };
        let r = w.eval(sum.x, sum.xi) / (w.eval(p.x, p.xi) * v.eval(q.x, q.xi));
        f64::max(c, r)
    })
}

/// All pairs of frequency-only probes with integer coordinates in `[-radius, radius]` (one dimension).
pub fn lattice_probes_1d(radius: i64) -> Vec<(PhasePoint, PhasePoint)> {
    let mut out = Vec::new();
    for a in -radius..=radius {
        for b in -radius..=radius {
            out.push((
                PhasePoint { x: [0.0; 2], xi: [a as f64, 0.0] },
                PhasePoint { x: [0.0; 2], xi: [b as f64, 0.0] },
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peetre_bounds() {
        let probes = lattice_probes_1d(64);
        let c = moderation_check(&Weight::sigma(1.0), &Weight::sigma(1.0), &probes);
        assert!(c <= 2f64.sqrt() + 1e-12);
        let c = moderation_check(&Weight::sigma(-2.0), &Weight::sigma(2.0), &probes);
        assert!(c <= 4.0 + 1e-12);
        let c = moderation_check(&Weight::constant(3.0), &Weight::one(), &probes);
        assert_eq!(c, 1.0);
    }

    #[test]
    fn witness_is_even_and_dominates() {
        let w = Weight::quotient(&Weight::sigma(2.0), &Weight::sigma(-1.0));
        let v = w.witness();
        for k in -20..=20 {
            let xi = [k as f64, 0.5 * k as f64];
            assert_eq!(v.eval([0.0; 2], xi), v.eval([0.0; 2], [-xi[0], -xi[1]]));
        }
        let probes = lattice_probes_1d(30);
        assert!(moderation_check(&w, &v, &probes) < 8.0);
    }

    #[test]
    fn json_shape() {
        let w: Weight = serde_json::from_str(r#"{"family":"polybracket","s":2.0}"#).unwrap();
        assert!((w.eval([0.0; 2], [1.0, 0.0]) - 2.0).abs() < 1e-15);
    }
}
