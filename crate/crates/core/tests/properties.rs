use epgif::baseline::oracle::{oracle_detailed, oracle_filter, OracleVariant};
use epgif::baseline::{ggif_chi, ggif_gamma, gif_filter, BaselineParams};
use epgif::epgif::{
    compute_psi, epgif_fields, epgif_with_constraint, ConstraintField, EpgifParams, WeightSign,
};
use epgif::filters::{FilterConfig, FilterKind};
use epgif::image::{box_mean, window_stats, ImagePlane, MultiPlaneImage};
use epgif::metrics::{psnr, ssim};
use epgif::pipelines::{
    base_layer, detail_enhance, detail_layer, mertens_weights, smooth_weight_maps, ExposureSequence,
};
use proptest::prelude::*;

fn plane(w: usize, h: usize) -> impl Strategy<Value = ImagePlane> {
    prop::collection::vec(0.0f64..1.0, w * h)
        .prop_map(move |d| ImagePlane::new(w, h, d, 1.0).unwrap())
}

fn sized_pair() -> impl Strategy<Value = (ImagePlane, ImagePlane)> {
    (3usize..14, 3usize..14).prop_flat_map(|(w, h)| (plane(w, h), plane(w, h)))
}

fn naive_mean(p: &ImagePlane, r: usize, cx: usize, cy: usize) -> f64 {
    let mut s = 0.0;
    let mut n = 0.0;
    for y in cy.saturating_sub(r)..=(cy + r).min(p.height() - 1) {
        for x in cx.saturating_sub(r)..=(cx + r).min(p.width() - 1) {
            s += p.get(x, y);
            n += 1.0;
        }
    }
    s / n
}

#[test]
fn box_mean_matches_truncated_loop() {
    let p = epgif::synth::uniform_noise(16, 16, 77);
    for r in [0, 1, 2, 4, 8] {
        let fast = box_mean(&p, r);
        for y in 0..16 {
            for x in 0..16 {
                assert!((fast.get(x, y) - naive_mean(&p, r, x, y)).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn every_variant_matches_the_oracle_on_16x16() {
    for seed in 0..5 {
        let x = epgif::synth::uniform_noise(16, 16, seed);
        let g = epgif::synth::uniform_noise(16, 16, 100 + seed);
        for kind in FilterKind::ALL {
            let cfg = FilterConfig::new(kind, EpgifParams::new(2, 0.01));
            let bp = cfg.baseline_params();
            let variant = match kind {
                FilterKind::Gif => OracleVariant::Gif(bp),
                FilterKind::Wgif => OracleVariant::Wgif(bp),
                FilterKind::Ggif => OracleVariant::Ggif(bp),
                FilterKind::Epgif => OracleVariant::Epgif(cfg.params),
            };
            for guide in [&x, &g] {
                let fast = cfg.apply(&x, guide).unwrap();
                let slow = oracle_filter(&x, guide, &variant).unwrap();
                for (a, b) in fast.data().iter().zip(slow.data()) {
                    assert!((a - b).abs() <= 1e-10, "{kind}: {a} vs {b}");
                }
            }
        }
    }
}

#[test]
fn oracle_with_unit_tau_has_unit_slope() {
    let x = epgif::synth::uniform_noise(10, 10, 1);
    let out = oracle_detailed(
        &x,
        &x,
        &OracleVariant::Epgif(EpgifParams::new(2, 0.3)),
        Some(1.0),
    )
    .unwrap();
    assert!(out.a.iter().all(|a| *a == 1.0));
}

#[test]
fn gif_with_vanishing_lambda_reproduces_the_input() {
    let x = epgif::synth::uniform_noise(20, 20, 8);
    let r = gif_filter(&x, &x, &BaselineParams::new(2, 1e-12)).unwrap();
    for (a, b) in r.data().iter().zip(x.data()) {
        assert!((a - b).abs() <= 1e-6);
    }
}

#[test]
fn psnr_drops_as_noise_grows() {
    let clean = epgif::synth::piecewise_constant(48, 48, 2);
    let mut last = f64::INFINITY;
    for amp in [0.01, 0.02, 0.05, 0.1, 0.2] {
        let noise = epgif::synth::uniform_noise(48, 48, 9);
        let degraded = clean.zip_map(&noise, |c, n| c + amp * (n - 0.5));
        let v = psnr(&degraded, &clean, 1.0).unwrap();
        assert!(v < last);
        last = v;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fast_paths_match_oracle((x, g) in sized_pair(), radius in 1usize..5, lambda in 1e-4f64..1.0) {
        let bp = BaselineParams::new(radius, lambda);
        let ep = EpgifParams::new(radius, lambda);
        for kind in FilterKind::ALL {
            let cfg = FilterConfig::new(kind, ep);
            let variant = match kind {
                FilterKind::Gif => OracleVariant::Gif(bp),
                FilterKind::Wgif => OracleVariant::Wgif(bp),
                FilterKind::Ggif => OracleVariant::Ggif(bp),
                FilterKind::Epgif => OracleVariant::Epgif(ep),
            };
            let fast = cfg.apply(&x, &g).unwrap();
            let slow = oracle_filter(&x, &g, &variant).unwrap();
            for (a, b) in fast.data().iter().zip(slow.data()) {
                prop_assert!((a - b).abs() <= 1e-9, "{} {} vs {}", kind, a, b);
            }
        }
    }

    #[test]
    fn epgif_field_invariants((x, g) in sized_pair(), radius in 1usize..5, lambda in 1e-4f64..10.0, c in 0.01f64..0.49) {
        let p = EpgifParams { c, ..EpgifParams::new(radius, lambda) };
        let f = epgif_fields(&x, &g, &p).unwrap();
        for i in 0..x.len() {
            let t = f.constraint.tau.data()[i];
            prop_assert!((0.0..=1.0).contains(&t));
            prop_assert_eq!(f.constraint.eta.data()[i], 1.0 - t);
            prop_assert!(f.constraint.alpha.data()[i] >= 0.0);
            prop_assert!(f.edge.psi.data()[i] > 0.0);
            prop_assert!(f.edge.phi().data()[i] >= 0.0);
            prop_assert!(f.w.data()[i] > 0.0 && f.w.data()[i] <= 1.0);
            prop_assert!(f.aggregated.a_bar.data()[i].is_finite() && f.aggregated.b_bar.data()[i].is_finite());
            prop_assert!(f.output.data()[i].is_finite());
            if t == 1.0 {
                let a = f.coeffs.a.data()[i];
                prop_assert!((a - 1.0).abs() <= 1e-12);
                let b = f.stats.mean_x.data()[i] - f.stats.mean_g.data()[i];
                prop_assert!((f.coeffs.b.data()[i] - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn growing_weights_stay_positive_and_finite((x, g) in sized_pair(), radius in 1usize..4) {
        let p = EpgifParams { weight_sign: WeightSign::Growing, ..EpgifParams::new(radius, 0.01) };
        let f = epgif_fields(&x, &g, &p).unwrap();
        prop_assert!(f.w.data().iter().all(|w| *w > 0.0 && *w <= 1.0));
        prop_assert!(f.output.data().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn psi_ratio_identity(g in plane(9, 7), radius in 1usize..4) {
        let eps = 1e-6;
        let e = compute_psi(&g, radius, eps);
        let phi = e.phi();
        for i in 0..g.len() {
            let j = (i * 7 + 3) % g.len();
            let lhs = e.psi.data()[i] / e.psi.data()[j];
            let rhs = (phi.data()[i] + eps) / (phi.data()[j] + eps);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
        }
    }

    #[test]
    fn flat_slope_strictly_decreases_in_lambda(x in plane(8, 8), radius in 1usize..4) {
        let x = x.map(|v| 0.5 + 0.1 * (v - 0.5));
        let flat = ConstraintField::uniform(8, 8, 0.0);
        let slopes: Vec<ImagePlane> = [0.01, 0.04, 0.16, 1.0, 10.0]
            .iter()
            .map(|&l| epgif_with_constraint(&x, &x, &EpgifParams::new(radius, l), flat.clone()).unwrap().coeffs.a)
            .collect();
        let stats = window_stats(&x, &x, radius).unwrap();
        for pair in slopes.windows(2) {
            for i in 0..x.len() {
                if stats.var_g.data()[i] > 0.0 {
                    prop_assert!(pair[1].data()[i] < pair[0].data()[i]);
                }
            }
        }
    }

    #[test]
    fn gamma_is_increasing_and_open(g in plane(8, 8), radius in 1usize..3) {
        let chi = ggif_chi(&g, radius);
        let gamma = ggif_gamma(&chi);
        for i in 0..chi.len() {
            let v = gamma.data()[i];
            prop_assert!(v > 0.0 && v < 1.0);
            for j in 0..chi.len() {
                if chi.data()[i] < chi.data()[j] {
                    prop_assert!(v <= gamma.data()[j]);
                }
            }
        }
    }

    #[test]
    fn ssim_is_symmetric_and_bounded(a in plane(16, 14), b in plane(16, 14)) {
        let ab = ssim(&a, &b, 1.0).unwrap();
        let ba = ssim(&b, &a, 1.0).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-12);
        prop_assert!((-1.0..=1.0).contains(&ab));
        prop_assert_eq!(ssim(&a, &a, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn base_plus_detail_recovers_the_input(x in plane(12, 10), radius in 1usize..4) {
        let img = MultiPlaneImage::gray(x.clone());
        let p = EpgifParams::new(radius, 0.01);
        let base = base_layer(&img, &p).unwrap();
        let detail = detail_layer(&img, &p).unwrap();
        for ((b, d), v) in base.plane(0).data().iter().zip(detail.plane(0).data()).zip(x.data()) {
            // one rounding of the subtraction and one of the sum
            prop_assert!((b + d - v).abs() <= 2.0 * f64::EPSILON * v.abs().max(b.abs()));
        }
        prop_assert_eq!(detail_enhance(&img, &p, 0.0).unwrap(), img);
    }

    #[test]
    fn weight_maps_partition_unity(a in plane(12, 12), b in plane(12, 12), c in plane(12, 12)) {
        let seq = ExposureSequence::new([a, b, c].map(MultiPlaneImage::gray).to_vec()).unwrap();
        let raw = mertens_weights(&seq).unwrap();
        let smooth = smooth_weight_maps(&raw, &seq, &EpgifParams { beta: 1.0 / 50.0, ..EpgifParams::new(2, 0.01) }).unwrap();
        for w in [&raw, &smooth] {
            prop_assert!(w.max_sum_error() <= 1e-9);
            prop_assert!(w.maps.iter().all(|m| m.data().iter().all(|v| *v >= 0.0)));
        }
    }
}
