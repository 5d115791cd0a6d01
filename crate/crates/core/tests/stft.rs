use std::f64::consts::{PI, TAU};

use mlwf_core::generators::{generate, periodized_gaussian, random_bandlimited, FieldKind, FieldSpec};
use mlwf_core::geometry::{make_cutoff, Cone, CutoffSpec};
use mlwf_core::grid::{forward_transform, torus_dist, Grid, SampledField};
use mlwf_core::modulation::{
    mod_norm, mod_seminorm, stft, twisted_convolution, wf_modulation, PhaseSpaceField, Window, WindowKind,
};
use mlwf_core::psido::CostLimits;
use mlwf_core::spaces::{BfSpec, DecayOptions, Weight};
use mlwf_core::wavefront::WavefrontQuery;
use mlwf_core::C64;

fn gauss(g: Grid, w: f64) -> Window {
    Window::new(WindowKind::Gaussian { width: w }, g).unwrap()
}

fn rel_err(a: &PhaseSpaceField, b: &PhaseSpaceField) -> f64 {
    let num = a.values.iter().zip(&b.values).map(|(u, v)| (u - v).norm_sqr()).sum::<f64>();
    let den = b.values.iter().map(|v| v.norm_sqr()).sum::<f64>();
    (num / den).sqrt()
}

#[test]
fn reproducing_identity() {
    let g = Grid::new(1, 64).unwrap();
    let f = generate(&FieldSpec::new(FieldKind::ModulatedBump { cutoff: CutoffSpec::new([2.0, 0.0], 0.3, 0.9).unwrap(), frequency: [3.0, 0.0] }), g, 0).unwrap();
    let (p1, p2, p3) = (gauss(g, 1.0), gauss(g, 0.8), gauss(g, 1.2));
    let lhs = twisted_convolution(&stft(&f, &p1).unwrap(), &stft(&p3.samples, &p2).unwrap(), CostLimits::default()).unwrap();
    let ip = p3.samples.inner(&p1.samples).unwrap();
    let v2 = stft(&f, &p2).unwrap();
    let rhs = PhaseSpaceField { grid: g, values: v2.values.iter().map(|v| v * ip).collect() };
    assert!(rel_err(&lhs, &rhs) <= 1e-6, "{}", rel_err(&lhs, &rhs));
}

#[test]
fn twisted_convolution_respects_the_guard() {
    let g = Grid::new(1, 128).unwrap();
    let z = PhaseSpaceField::zeros(g);
    assert!(twisted_convolution(&z, &z, CostLimits::default()).is_err());
    let small = PhaseSpaceField::zeros(Grid::new(1, 16).unwrap());
    let out = twisted_convolution(&small, &small, CostLimits::default()).unwrap();
    assert_eq!(out.max_abs(), 0.0);
}

#[test]
fn lattice_covariance() {
    let g = Grid::new(1, 64).unwrap();
    let f = random_bandlimited(g, 12, 4, false);
    let win = gauss(g, 0.6);
    let shift = 11;
    let v = stft(&f, &win).unwrap();
    let vs = stft(&f.translate(shift), &win).unwrap();
    let xm = g.point(shift)[0];
    let m = g.len();
    for x in 0..m {
        for k in 0..m {
            let want = C64::from_polar(1.0, -xm * g.freq_f(k)[0]) * v.at(g.shift_index(x, shift, true), k);
            assert!((vs.at(x, k) - want).norm() < 1e-12);
        }
    }
}

#[test]
fn gaussian_closed_form() {
    let g = Grid::new(1, 128).unwrap();
    let f = SampledField::from_real(g, |x| periodized_gaussian(x[0], 0.0, 1.0));
    let win = gauss(g, 1.0);
    let v = stft(&f, &win).unwrap();
    let m = g.len();
    let mut worst: f64 = 0.0;
    for x in 0..m {
        let xv = g.point(x)[0];
        for k in 0..m {
            let kv = g.freq_f(k)[0];
            let want: f64 = (-6i32..=6)
                .map(|j| {
                    let s = xv + TAU * j as f64;
                    let sign = if (j as i64 * kv as i64).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                    sign * (-(s * s + kv * kv) / 4.0).exp()
                })
                .sum::<f64>()
                .abs()
                / 2f64.sqrt();
            worst = worst.max((v.at(x, k).norm() - want).abs());
        }
    }
    assert!(worst < 1e-6, "{worst}");
}

#[test]
fn full_cone_isometry_in_two_dimensions() {
    let g = Grid::new(2, 16).unwrap();
    let f = random_bandlimited(g, 4, 8, false);
    let win = gauss(g, 0.9);
    let v = mod_norm(&f, &Weight::one(), &BfSpec::lp(2.0), &win).unwrap();
    let want = f.l2_norm() * win.samples.l2_norm();
    assert!((v - want).abs() <= 1e-10 * want);
    assert_eq!(mod_norm(&SampledField::zeros(g), &Weight::one(), &BfSpec::lp(2.0), &win).unwrap(), 0.0);
}

#[test]
fn point_mass_has_flat_profile() {
    let g = Grid::new(1, 64).unwrap();
    let f = generate(&mlwf_core::generators::delta([PI, 0.0]), g, 0).unwrap();
    let r = mod_seminorm(&f, &Weight::one(), &Cone::full(4.0), &BfSpec::lp(f64::INFINITY), &gauss(g, 0.5), None, &DecayOptions::default()).unwrap();
    assert!(r.decay_slope.abs() < 0.1, "{}", r.decay_slope);
    assert!(!r.regular);
    let z = mod_seminorm(&SampledField::zeros(g), &Weight::one(), &Cone::full(4.0), &BfSpec::lp(1.0), &gauss(g, 0.5), None, &DecayOptions::default()).unwrap();
    assert!(z.regular);
}

#[test]
fn localization_identity() {
    let g = Grid::new(1, 64).unwrap();
    let f = generate(&FieldSpec::new(FieldKind::ModulatedBump { cutoff: CutoffSpec::new([PI, 0.0], 0.2, 0.5).unwrap(), frequency: [5.0, 0.0] }), g, 0).unwrap();
    let test = make_cutoff(&CutoffSpec::new([PI, 0.0], 0.2, 0.5).unwrap(), g).unwrap();
    // the window is 1 on the difference set of the two supports
    let win = Window::new(WindowKind::Bump { inner: 1.1, outer: 2.0 }, g).unwrap();
    let v = stft(&f, &win).unwrap();
    let fh = forward_transform(&f);
    let m = g.len();
    for x in 0..m {
        for k in 0..m {
            let lhs = test.values[x] * fh.coeffs[k];
            assert!((lhs - test.values[x] * v.at(x, k)).norm() < 1e-8);
        }
    }
}

#[test]
fn spatial_decay_outside_the_support() {
    let g = Grid::new(1, 128).unwrap();
    let c = [PI, 0.0];
    let f = make_cutoff(&CutoffSpec::new(c, 0.2, 0.5).unwrap(), g).unwrap();
    let v = stft(&f, &gauss(g, 0.3)).unwrap();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for x in 0..g.len() {
        let d = torus_dist(g.point(x), c);
        if d >= 1.0 {
            let sup = v.row(x).iter().fold(0.0f64, |m, z| m.max(z.norm())).max(1e-300);
            xs.push((1.0 + d * d).sqrt().ln());
            ys.push(sup.ln());
        }
    }
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!(slope <= -4.0, "{slope}");
}

#[test]
fn modulation_wave_front_of_simple_fields() {
    let g = Grid::new(1, 64).unwrap();
    let mut q = WavefrontQuery::new(vec![[PI, 0.0], [1.0, 0.0]], Weight::sigma(0.0), BfSpec::lp(1.0));
    q.decay.eps_rel = 1e-3;
    let win = gauss(g, 1.0);
    let smooth = generate(&mlwf_core::generators::gaussian([PI, 0.0], 1.0), g, 0).unwrap();
    assert_eq!(wf_modulation(&smooth, &q, &win).unwrap().singular_count(), 0);
    let d = generate(&mlwf_core::generators::delta([PI, 0.0]), g, 0).unwrap();
    let r = wf_modulation(&d, &q, &win).unwrap();
    assert!(r.singular(0, 0) && r.singular(0, 1));
    assert!(!r.singular(1, 0) && !r.singular(1, 1));
    assert_eq!(wf_modulation(&SampledField::zeros(g), &q, &win).unwrap().singular_count(), 0);
}
