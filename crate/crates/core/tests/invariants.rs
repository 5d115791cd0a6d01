use std::f64::consts::PI;

use proptest::prelude::*;

use mlwf_core::generators::{delta, generate, random_bandlimited};
use mlwf_core::geometry::Cone;
use mlwf_core::grid::{forward_transform, inverse_transform, Grid, SampledField, SpectralField};
use mlwf_core::spaces::{bf_norm, fb_seminorm, young_check, BfSpec, DecayOptions, Layout, Weight};
use mlwf_core::symbol::{requantize, Symbol, SymbolClass};
use mlwf_core::wavefront::{wf_family, FamilyMode, WavefrontQuery};
use mlwf_core::C64;

fn grid_strategy() -> impl Strategy<Value = Grid> {
    prop_oneof![
        (3u32..=7).prop_map(|k| Grid::new(1, 1 << k).unwrap()),
        (3u32..=5).prop_map(|k| Grid::new(2, 1 << k).unwrap()),
    ]
}

fn spaces() -> impl Strategy<Value = BfSpec> {
    let p = prop_oneof![Just(1.0), Just(2.0), Just(3.5), Just(f64::INFINITY)];
    let q = prop_oneof![Just(1.0), Just(2.0), Just(f64::INFINITY)];
    prop_oneof![
        p.clone().prop_map(BfSpec::lp),
        (p.clone(), q.clone()).prop_map(|(p, q)| BfSpec::lpq1(p, q)),
        (p, q).prop_map(|(p, q)| BfSpec::lpq2(p, q)),
    ]
}

fn spectral_layout(g: Grid) -> Layout {
    Layout::Spectral { grid: g, x_ref: [0.0; 2] }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, rng_seed: proptest::test_runner::RngSeed::Fixed(0x1ace), ..ProptestConfig::default() })]

    #[test]
    fn parseval_and_round_trip(g in grid_strategy(), seed in any::<u64>()) {
        let f = random_bandlimited(g, (g.n() / 2) as u32, seed, false);
        let s = forward_transform(&f);
        prop_assert!((s.l2_norm() - f.l2_norm()).abs() <= 1e-12 * f.l2_norm().max(1e-300));
        let back = inverse_transform(&s);
        prop_assert!(back.sub(&f).unwrap().max_abs() <= 1e-12 * f.max_abs().max(1.0));
    }

    #[test]
    fn transform_is_linear(g in grid_strategy(), s1 in any::<u64>(), s2 in any::<u64>(), c in -3.0f64..3.0) {
        let f = random_bandlimited(g, 3, s1, false);
        let h = random_bandlimited(g, 3, s2, false);
        let lhs = forward_transform(&f.scale(C64::new(c, 0.5)).add(&h).unwrap());
        let rhs = forward_transform(&f).scale(C64::new(c, 0.5)).add(&forward_transform(&h)).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().max_abs() <= 1e-12 * rhs.max_abs().max(1.0));
    }

    #[test]
    fn translation_is_a_phase(g in grid_strategy(), seed in any::<u64>(), m in any::<usize>()) {
        let f = random_bandlimited(g, 4, seed, false);
        let m = m % g.len();
        let xm = g.point(m);
        let s = forward_transform(&f);
        let t = forward_transform(&f.translate(m));
        for k in 0..g.len() {
            let kf = g.freq_f(k);
            let want = s.coeffs[k] * C64::from_polar(1.0, -(kf[0] * xm[0] + kf[1] * xm[1]));
            prop_assert!((t.coeffs[k] - want).norm() <= 1e-12 * s.max_abs().max(1.0));
        }
    }

    #[test]
    fn norms_are_solid(g in grid_strategy(), spec in spaces(), seed in any::<u64>(), shrink in prop::collection::vec(0.0f64..=1.0, 1..8)) {
        let f = forward_transform(&random_bandlimited(g, g.n() as u32, seed, false));
        let smaller: Vec<C64> = f.coeffs.iter().enumerate().map(|(i, c)| c * shrink[i % shrink.len()]).collect();
        let lay = spectral_layout(g);
        let big = bf_norm(&spec, &lay, &f.coeffs).unwrap();
        let small = bf_norm(&spec, &lay, &smaller).unwrap();
        prop_assert!(small <= big * (1.0 + 1e-12));
    }

    #[test]
    fn cone_norm_grows_with_the_cone(g in grid_strategy(), seed in any::<u64>(), angle in 0.1f64..1.4, dir in 0.0f64..std::f64::consts::TAU) {
        let f = random_bandlimited(g, g.n() as u32, seed, false);
        let d = [dir.cos(), dir.sin()];
        let narrow = Cone::new(d, angle, 2.0).unwrap();
        let wide = Cone::new(d, angle * 1.5, 1.0).unwrap();
        let opts = DecayOptions::default();
        let spec = BfSpec::lp(1.0);
        let a = fb_seminorm(&f, &Weight::sigma(1.0), &narrow, &spec, [0.0; 2], None, &opts).unwrap();
        let b = fb_seminorm(&f, &Weight::sigma(1.0), &wide, &spec, [0.0; 2], None, &opts).unwrap();
        prop_assert!(a.value <= b.value * (1.0 + 1e-12));
    }

    #[test]
    fn norm_grows_with_the_weight(g in grid_strategy(), spec in spaces(), seed in any::<u64>(), s in -2.0f64..2.0, ds in 0.0f64..2.0) {
        let f = random_bandlimited(g, g.n() as u32, seed, false);
        let full = Cone::full(1.0);
        let opts = DecayOptions::default();
        let lo = fb_seminorm(&f, &Weight::sigma(s), &full, &spec, [0.0; 2], None, &opts).unwrap();
        let hi = fb_seminorm(&f, &Weight::sigma(s + ds), &full, &spec, [0.0; 2], None, &opts).unwrap();
        prop_assert!(lo.value <= hi.value * (1.0 + 1e-12));
    }

    #[test]
    fn young_ratio_for_unit_weight(g in grid_strategy(), s1 in any::<u64>(), s2 in any::<u64>(), band in 1u32..6) {
        let phi = forward_transform(&random_bandlimited(g, band, s1, false));
        let f = forward_transform(&random_bandlimited(g, g.n() as u32, s2, false));
        let r = young_check(&phi, &f, &BfSpec::lp(1.0), &Weight::one(), 1.0).unwrap();
        prop_assert!(r.pass, "ratio {}", r.ratio);
    }

    #[test]
    fn requantization_round_trip(seed in any::<u64>(), s in -1.0f64..1.0, t in -1.0f64..1.0, beta in 0u32..=3) {
        let g = Grid::new(1, 32).unwrap();
        let coeff = random_bandlimited(g, 3, seed, false);
        let a = Symbol::polynomial(g, vec![([beta, 0], coeff)], SymbolClass::default()).unwrap();
        let n = beta + 1;
        let back = requantize(&requantize(&a, s, t, n).unwrap(), t, s, n).unwrap();
        let (da, db) = (a.to_dense().unwrap(), back.to_dense().unwrap());
        let scale = da.iter().fold(0.0f64, |m, v| m.max(v.norm()));
        prop_assert!(da.iter().zip(&db).all(|(u, v)| (u - v).norm() <= 1e-9 * scale.max(1.0)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, rng_seed: proptest::test_runner::RngSeed::Fixed(0x5a4d), ..ProptestConfig::default() })]

    #[test]
    fn sup_inf_sandwich(seed in any::<u64>(), with_delta in any::<bool>(), at in 0usize..64) {
        let g = Grid::new(1, 64).unwrap();
        let mut f = random_bandlimited(g, 20, seed, true);
        if with_delta {
            f = f.add(&generate(&delta(g.point(at)), g, 0).unwrap()).unwrap();
        }
        let mut q = WavefrontQuery::new(vec![g.point(at), [PI, 0.0]], Weight::one(), BfSpec::lp(1.0));
        q.inner_radius = Some(4.0);
        let family: Vec<(Weight, BfSpec)> = (0..4).map(|j| (Weight::sigma(j as f64), BfSpec::lp(1.0))).collect();
        let sup = wf_family(&f, &q, &family, FamilyMode::Sup).unwrap();
        let inf = wf_family(&f, &q, &family, FamilyMode::Inf).unwrap();
        for m in &sup.members {
            for (i, e) in m.entries.iter().enumerate() {
                prop_assert!(!inf.combined.entries[i].singular || e.singular);
                prop_assert!(!e.singular || sup.combined.entries[i].singular);
            }
        }
    }
}

#[test]
fn zero_field_has_zero_norms() {
    let g = Grid::new(2, 16).unwrap();
    let z = SpectralField::zeros(g);
    assert_eq!(bf_norm(&BfSpec::lpq1(2.0, 1.0), &spectral_layout(g), &z.coeffs).unwrap(), 0.0);
    let f = SampledField::zeros(g);
    let r = fb_seminorm(&f, &Weight::one(), &Cone::full(1.0), &BfSpec::lp(1.0), [0.0; 2], None, &DecayOptions::default()).unwrap();
    assert!(r.regular && r.value == 0.0);
}
