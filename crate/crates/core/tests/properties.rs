use diamond_optics::absorption::{
    absorption_coefficient_integrating, absorption_coefficient_simple, transmittance_forward,
};
use diamond_optics::analysis::{
    compare_stages, monotonic_trend, power_law_fit, superlinear_flag, CorrelationPoint, OverIrradiationThresholds,
};
use diamond_optics::birefringence::{
    classify_ultra_low, delta_n_map, map_stats, worst_case_loss, MapStats, PixelGrid, RetardationMap,
};
use diamond_optics::decomposition::{fit_components, ComponentModel};
use diamond_optics::io::{format_map, format_spectrum, parse_map_str, parse_spectrum_str};
use diamond_optics::synth::{synth_absorption, synth_transmittance, SynthSpec};
use diamond_optics::decomposition::Coefficients;
use diamond_optics::types::{
    um_to_cm, validate_spectrum, SampleGeometry, Spectrum, SpectrumKind, TreatmentStage, WavelengthGrid,
};
use proptest::prelude::*;

const THICKNESSES_CM: [f64; 7] = [0.02, 0.04, 0.06, 0.08, 0.10, 0.12, 0.14];
const REFLECTANCES: [f64; 3] = [0.25, 0.2913, 0.33];

fn coarse_grid() -> WavelengthGrid {
    WavelengthGrid::uniform(220.0, 800.0, 4.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn absorption_round_trip(a in 0.01f64..50.0, di in 0usize..7, ri in 0usize..3) {
        let (d, r) = (THICKNESSES_CM[di], REFLECTANCES[ri]);
        let t = transmittance_forward(a, d, r).unwrap();
        let back = absorption_coefficient_integrating(t, d, r).unwrap();
        prop_assert!(((back - a) / a).abs() <= 1e-9, "a={a} back={back}");
    }

    #[test]
    fn absorption_decreases_with_transmittance(f1 in 0.001f64..1.0, f2 in 0.001f64..1.0, di in 0usize..7, ri in 0usize..3) {
        prop_assume!(f1 != f2);
        let (d, r) = (THICKNESSES_CM[di], REFLECTANCES[ri]);
        let (lo, hi) = if f1 < f2 { (f1, f2) } else { (f2, f1) };
        let (t1, t2) = (lo * (1.0 - r), hi * (1.0 - r));
        prop_assume!(t1 < t2);
        let a1 = absorption_coefficient_integrating(t1, d, r).unwrap();
        let a2 = absorption_coefficient_integrating(t2, d, r).unwrap();
        prop_assert!(a1 > a2, "T {t1} -> {a1}, T {t2} -> {a2}");
    }

    #[test]
    fn simple_form_exceeds_sphere_form(f in 0.01f64..0.999, di in 0usize..7, ri in 0usize..3) {
        let (d, r) = (THICKNESSES_CM[di], REFLECTANCES[ri]);
        let t = f * (1.0 - r);
        prop_assert!(absorption_coefficient_simple(t, d).unwrap() > absorption_coefficient_integrating(t, d, r).unwrap());
    }

    #[test]
    fn lossless_point_is_zero(d in 0.0001f64..1.0, r in 0.01f64..0.9) {
        prop_assert!(absorption_coefficient_integrating(1.0 - r, d, r).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn spectrum_constructor_agrees_with_validation(
        grid in prop::collection::vec(-10.0f64..1000.0, 0..8),
        values in prop::collection::vec(-0.5f64..1.5, 0..8),
        kind in prop::sample::select(vec![SpectrumKind::Transmittance, SpectrumKind::AbsorptionCoefficient, SpectrumKind::Residual]),
    ) {
        let violations = validate_spectrum(&grid, &values, kind);
        let built = Spectrum::from_columns(grid, values, kind);
        prop_assert_eq!(built.is_ok(), violations.is_empty());
    }

    #[test]
    fn decomposition_reconstructs_and_stays_non_negative(
        c in prop::collection::vec(0.0f64..5.0, 5),
        wiggle in prop::collection::vec(-0.05f64..0.05, 146),
    ) {
        let g = coarse_grid();
        let clean = synth_absorption(&SynthSpec::new(Coefficients::from_vec(c)), &g).unwrap();
        let values: Vec<f64> = clean.values().iter().zip(&wiggle).map(|(v, w)| (v + w).max(0.0)).collect();
        let s = Spectrum::new(g, values, SpectrumKind::AbsorptionCoefficient).unwrap();
        let model = ComponentModel::default();
        let fit = fit_components(&s, &model).unwrap();
        prop_assert!(fit.coefficients.to_vec().iter().all(|&x| x >= 0.0));
        let m = model.evaluate(&fit.coefficients, s.grid()).unwrap();
        for ((mi, ri), si) in m.iter().zip(fit.residual.values()).zip(s.values()) {
            prop_assert!((mi + ri - si).abs() <= 1e-12);
        }
    }

    #[test]
    fn decomposition_scaling_equivariance(c in prop::collection::vec(0.01f64..5.0, 5), k in -8i32..8, s in 0.1f64..10.0) {
        let g = coarse_grid();
        let base = synth_absorption(&SynthSpec::new(Coefficients::from_vec(c)), &g).unwrap();
        let model = ComponentModel::default();
        let f0 = fit_components(&base, &model).unwrap().coefficients.to_vec();

        // powers of two scale every floating-point step exactly
        let p = 2f64.powi(k);
        let fp = fit_components(&base.scaled(p).unwrap(), &model).unwrap().coefficients.to_vec();
        for (a, b) in f0.iter().zip(&fp) {
            prop_assert_eq!(a * p, *b);
        }
        let fs = fit_components(&base.scaled(s).unwrap(), &model).unwrap().coefficients.to_vec();
        for (a, b) in f0.iter().zip(&fs) {
            prop_assert!((a * s - b).abs() <= 1e-9 * (a * s).max(1e-3));
        }
    }

    #[test]
    fn delta_n_is_linear_in_retardation(vals in prop::collection::vec(0.0f64..500.0, 12), t in 1.0f64..5000.0) {
        let mk = |v: Vec<f64>| RetardationMap::new(PixelGrid::new(4, 3, v, vec![true; 12]).unwrap(), 10.0).unwrap();
        let g1 = SampleGeometry::new(t).unwrap();
        let base = delta_n_map(&mk(vals.clone()), &g1);
        let doubled = delta_n_map(&mk(vals.iter().map(|v| 2.0 * v).collect()), &g1);
        for (a, b) in base.grid().values().iter().zip(doubled.grid().values()) {
            prop_assert_eq!(2.0 * a, *b);
        }
        if 2.0 * t <= SampleGeometry::MAX_THICKNESS_UM {
            let thick = delta_n_map(&mk(vals), &SampleGeometry::new(2.0 * t).unwrap());
            for (a, b) in base.grid().values().iter().zip(thick.grid().values()) {
                prop_assert_eq!(0.5 * a, *b);
            }
        }
    }

    #[test]
    fn loss_bounded_and_monotone(dn1 in 0.0f64..1e-3, dn2 in 0.0f64..1e-3, d_um in 10.0f64..1400.0, lambda in 400.0f64..1000.0) {
        let d = um_to_cm(d_um).unwrap();
        let l1 = worst_case_loss(dn1, d, lambda).unwrap();
        let l2 = worst_case_loss(dn2, d, lambda).unwrap();
        prop_assert!((0.0..=1.0).contains(&l1));
        let quarter = |dn: f64| dn * d * 1e7 / lambda <= 0.5;
        if dn1 < dn2 && quarter(dn2) {
            prop_assert!(l1 <= l2);
        }
    }

    #[test]
    fn map_stats_permutation_invariant(
        vals in prop::collection::vec(0.0f64..1e-4, 20),
        mask in prop::collection::vec(any::<bool>(), 20),
        perm in Just((0..20).collect::<Vec<usize>>()).prop_shuffle(),
    ) {
        prop_assume!(mask.iter().any(|&m| m));
        let mk = |v: Vec<f64>, m: Vec<bool>| {
            map_stats(&diamond_optics::birefringence::DeltaNMap::new(PixelGrid::new(5, 4, v, m).unwrap(), 1.0).unwrap()).unwrap()
        };
        let a = mk(vals.clone(), mask.clone());
        let b = mk(perm.iter().map(|&i| vals[i]).collect(), perm.iter().map(|&i| mask[i]).collect());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn ultra_low_depends_only_on_mean(mean in 0.0f64..2e-5, other in prop::collection::vec(0.0f64..1.0, 4)) {
        let s = MapStats { mean, std: other[0], min: other[1] * mean, max: mean + other[2], valid_fraction: other[3] };
        let t = MapStats { mean, std: 0.0, min: mean, max: mean, valid_fraction: 1.0 };
        prop_assert_eq!(classify_ultra_low(&s), classify_ultra_low(&t));
        prop_assert_eq!(classify_ultra_low(&s), mean < 1e-5);
    }

    #[test]
    fn power_law_scaling_equivariance(
        xs in prop::collection::btree_set(1u32..2000, 3..12),
        ys in prop::collection::vec(0.001f64..100.0, 12),
        s in 0.001f64..1000.0,
    ) {
        let pts: Vec<CorrelationPoint> = xs.iter().zip(&ys).map(|(x, y)| CorrelationPoint::new("s", *x as f64 / 100.0, *y)).collect();
        let scaled: Vec<CorrelationPoint> = pts.iter().map(|p| CorrelationPoint::new("s", p.p1_ppm, p.y * s)).collect();
        let (f, g) = (power_law_fit(&pts).unwrap(), power_law_fit(&scaled).unwrap());
        prop_assert!((f.b - g.b).abs() <= 1e-10, "{} {}", f.b, g.b);
        prop_assert!((f.r2 - g.r2).abs() <= 1e-9);
        prop_assert!((g.a.log10() - f.a.log10() - s.log10()).abs() <= 1e-10);
        prop_assert_eq!(superlinear_flag(&f), superlinear_flag(&g) || (f.b - 1.0).abs() < 1e-10);
    }

    #[test]
    fn spearman_invariant_under_monotone_maps(
        xs in prop::collection::vec(0.01f64..100.0, 3..15),
        ys in prop::collection::vec(-3.0f64..3.0, 15),
    ) {
        let pts: Vec<CorrelationPoint> = xs.iter().zip(&ys).map(|(x, y)| CorrelationPoint::new("s", *x, *y)).collect();
        let t0 = monotonic_trend(&pts).unwrap();
        for f in [|y: f64| y.exp(), |y: f64| y * y * y + 2.0 * y, |y: f64| 5.0 - 0.5 * y] {
            let mapped: Vec<CorrelationPoint> = pts.iter().map(|p| CorrelationPoint::new("s", p.p1_ppm, f(p.y))).collect();
            let t = monotonic_trend(&mapped).unwrap();
            let same = (t.spearman_rho - t0.spearman_rho).abs() <= 1e-12;
            let flipped = (t.spearman_rho + t0.spearman_rho).abs() <= 1e-12;
            prop_assert!(same || flipped);
        }
    }

    #[test]
    fn stage_deltas_antisymmetric(l1 in 0.0f64..2.0, l2 in 0.0f64..2.0, bump in 0.0f64..1.0) {
        let g = coarse_grid();
        let spec = |offset: f64, amp: f64| {
            SynthSpec::new(Coefficients::five(0.5, 0.2, 0.1, 0.3, offset))
                .with_bump(diamond_optics::synth::GaussianBump::new(650.0, 120.0, amp))
        };
        let a = synth_absorption(&spec(l1, bump), &g).unwrap();
        let b = synth_absorption(&spec(l2, 0.0), &g).unwrap();
        let m = ComponentModel::default();
        let th = OverIrradiationThresholds::default();
        let st = [TreatmentStage::as_grown(), TreatmentStage::annealed(1000.0, 2.0).unwrap()];
        let x = compare_stages(&[(st[0], a.clone()), (st[1], b.clone())], &m, &th).unwrap();
        let y = compare_stages(&[(st[0], b), (st[1], a)], &m, &th).unwrap();
        prop_assert_eq!(x.deltas[0].band_avg_680_760, -y.deltas[0].band_avg_680_760);
        prop_assert_eq!(x.deltas[0].gr1_metric.map(|v| -v), y.deltas[0].gr1_metric);
        prop_assert_eq!(x.deltas[0].nv_band_metric.map(|v| -v), y.deltas[0].nv_band_metric);
    }

    #[test]
    fn synth_transmittance_inverts(c in prop::collection::vec(0.0f64..20.0, 5), t_um in 200.0f64..1400.0) {
        let g = coarse_grid();
        let mut spec = SynthSpec::new(Coefficients::from_vec(c));
        spec.geometry = SampleGeometry::new(t_um).unwrap();
        let t = synth_transmittance(&spec, &g).unwrap();
        let a = synth_absorption(&spec, &g).unwrap();
        let back = diamond_optics::absorption::spectrum_to_absorption(
            &t, &spec.geometry, diamond_optics::absorption::ConversionMode::IntegratingSphere, &spec.reflectance,
        ).unwrap();
        for (x, y) in back.spectrum.values().iter().zip(a.values()) {
            prop_assert!((x - y).abs() <= 1e-9 * y.abs().max(1e-300) || (*y == 0.0 && *x == 0.0), "{x} vs {y}");
        }
    }

    #[test]
    fn spectrum_file_self_consistent(c in prop::collection::vec(0.0f64..10.0, 5), sigma in 0.0f64..0.05, seed in any::<u64>()) {
        let g = coarse_grid();
        let spec = SynthSpec::new(Coefficients::from_vec(c)).with_noise(sigma, seed);
        let a = synth_absorption(&spec, &g).unwrap();
        let parsed = parse_spectrum_str(&format_spectrum(&a, None).unwrap(), "a").unwrap();
        prop_assert_eq!(parsed.spectrum, a);
        let t = synth_transmittance(&spec, &g).unwrap();
        let parsed = parse_spectrum_str(&format_spectrum(&t, Some(&spec.geometry)).unwrap(), "t").unwrap();
        prop_assert_eq!(parsed.spectrum, t);
        prop_assert_eq!(parsed.geometry, Some(spec.geometry));
    }

    #[test]
    fn map_file_self_consistent(vals in prop::collection::vec(0.0f64..1e3, 1..40), cols in 1usize..6, mask_seed in any::<u64>()) {
        let w = cols.min(vals.len());
        let h = vals.len() / w;
        let n = w * h;
        let mut mask: Vec<bool> = (0..n).map(|i| (mask_seed >> (i % 64)) & 1 == 1).collect();
        mask[0] = true;
        let m = RetardationMap::new(PixelGrid::new(w, h, vals[..n].to_vec(), mask).unwrap(), 7.5).unwrap();
        prop_assert_eq!(parse_map_str(&format_map(&m), "m").unwrap(), m);
    }
}

#[test]
fn powers_of_ten_convert_exactly() {
    for k in 0..=4 {
        let um = 10f64.powi(k);
        assert_eq!(um_to_cm(um).unwrap(), 10f64.powi(k - 4));
    }
}
