use std::f64::consts::PI;

use mlwf_core::geometry::{Cone, CutoffSpec, DirectionalCutoffSpec};
use mlwf_core::grid::{Grid, SampledField};
use mlwf_core::spaces::Weight;
use mlwf_core::symbol::{parametrix, ParametrixSetup, Symbol, SymbolClass};

fn variable_elliptic(g: Grid) -> Symbol {
    let coef = SampledField::from_real(g, |x| 2.0 + x[0].cos());
    Symbol::polynomial(g, vec![([2, 0], coef.clone()), ([0, 0], coef)], SymbolClass::default()).unwrap()
}

fn setup(n: usize) -> ParametrixSetup {
    let r = n as f64 / 16.0;
    ParametrixSetup::new(
        CutoffSpec::new([PI, 0.0], 0.3, 1.2).unwrap(),
        DirectionalCutoffSpec { cone: Cone::new([1.0, 0.0], PI / 2.0, r / 2.0).unwrap(), transition_radius: r, angular_margin: 0.0 },
    )
}

#[test]
fn remainder_order_drops_with_each_correction() {
    let n = 256;
    let g = Grid::new(1, n).unwrap();
    let a = variable_elliptic(g);
    let mut residuals = Vec::new();
    let mut last = f64::INFINITY;
    for j in 1..=4u32 {
        let p = parametrix(&a, &Weight::sigma(2.0), [PI, 0.0], [1.0, 0.0], j, &setup(n)).unwrap();
        let (_, slope) = p.remainder_decay(n as f64 / 16.0).unwrap();
        // order -j with mu = 1, up to a quarter order of fit noise
        assert!(slope <= -(j as f64) + 0.25, "j = {j}: slope {slope}");
        assert!(slope < last);
        last = slope;
        residuals.push(p.residual_norm);
    }
    // the xi-derivatives of the inverse are lattice differences, so the identity
    // residual levels off instead of vanishing
    assert!(residuals[1] < residuals[0]);
    assert!(residuals.iter().all(|&r| r < 6e-3), "{residuals:?}");
}

#[test]
fn residual_shrinks_with_resolution() {
    let w = Weight::sigma(2.0);
    let coarse = parametrix(&variable_elliptic(Grid::new(1, 128).unwrap()), &w, [PI, 0.0], [1.0, 0.0], 2, &setup(128)).unwrap();
    let fine = parametrix(&variable_elliptic(Grid::new(1, 256).unwrap()), &w, [PI, 0.0], [1.0, 0.0], 2, &setup(256)).unwrap();
    assert!(fine.residual_norm < 0.5 * coarse.residual_norm);
}
