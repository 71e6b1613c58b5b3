use cavmag_core::analysis::extract_peaks;
use cavmag_core::spectra::io::{read_csv, read_sidecar, write_csv, write_sidecar};
use cavmag_core::spectra::{add_noise, synthesize_map};
use cavmag_core::{CavityParams, CouplingParams, HybridSystem, LossParams, SpinSystemParams};
use proptest::prelude::*;

fn system() -> impl Strategy<Value = HybridSystem> {
    (
        1.8f64..2.2,
        12.0f64..60.0,
        2.0f64..20.0,
        50.0f64..1e5,
        0.05f64..0.95,
        0.0f64..5.0,
        0.0f64..0.5,
    )
        .prop_map(
            |(g_factor, f_afmr0, f_cavity, quality_factor, frac, big_g, gamma)| {
                let cavity = CavityParams {
                    f_cavity,
                    quality_factor,
                    external_coupling_fraction: frac,
                };
                HybridSystem {
                    spins: SpinSystemParams {
                        g_factor,
                        f_afmr0,
                        ..Default::default()
                    },
                    cavity,
                    coupling: CouplingParams::new(big_g),
                    loss: LossParams::from_cavity(&cavity, gamma),
                }
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn decoupled_response_is_a_cavity_lorentzian(sys in system(), f in 0.1f64..80.0, b in 0.0f64..0.4) {
        let sys = HybridSystem { coupling: CouplingParams::new(0.0), ..sys };
        let kappa = sys.loss.cavity_total_linewidth();
        let k_ext = sys.loss.cavity_external_linewidth;
        let d = f - sys.cavity.f_cavity;
        let lorentz = k_ext * k_ext / (d * d + 0.25 * kappa * kappa);
        let got = sys.s21_power(f, b, true).unwrap();
        prop_assert!((got - lorentz).abs() <= 1e-12 * lorentz, "{} vs {}", got, lorentz);
    }

    #[test]
    fn transmission_is_passive_and_finite(sys in system(), f in 0.1f64..80.0, b in 0.0f64..3.0) {
        let p = sys.s21_power(f, b, true).unwrap();
        prop_assert!(p.is_finite());
        prop_assert!(p >= 0.0);
        prop_assert!(p <= sys.peak_bound() * (1.0 + 1e-12));
    }

    #[test]
    fn noise_is_deterministic_under_seed(
        seed in any::<u64>(), sigma in 0.01f64..2.0, n_f in 1usize..6, n_b in 1usize..6,
    ) {
        let fields: Vec<f64> = (0..n_b).map(|i| 0.2 * i as f64).collect();
        let freqs: Vec<f64> = (0..n_f).map(|i| 10.0 + 0.5 * i as f64).collect();
        let map = synthesize_map(&fields, &freqs, &HybridSystem::default()).unwrap();
        let a = add_noise(&map, sigma, seed).unwrap();
        let b = add_noise(&map, sigma, seed).unwrap();
        prop_assert_eq!(&a, &b);
        let c = add_noise(&map, sigma, seed.wrapping_add(1)).unwrap();
        prop_assert_ne!(a.values(), c.values());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn minimum_peak_gap_is_two_g(g in 0.3f64..2.5, f0 in 20.0f64..40.0) {
        let sys = HybridSystem { coupling: CouplingParams::new(g), ..Default::default() };
        let sys = HybridSystem { spins: SpinSystemParams { f_afmr0: f0, ..sys.spins }, ..sys };
        let slope = sys.spins.zeeman_slope();
        let crossing = (f0 - sys.cavity.f_cavity) / slope;
        let step = 2e-3;
        let fields: Vec<f64> = (0..=100).map(|i| crossing - 0.1 + i as f64 * step).collect();
        let freqs: Vec<f64> = (0..=4000).map(|i| 11.245 - 3.0 + i as f64 * 1.5e-3).collect();
        let map = synthesize_map(&fields, &freqs, &sys).unwrap();
        let peaks = extract_peaks(&map, 0.01).unwrap();
        let min_gap = peaks
            .columns
            .iter()
            .filter(|c| c.peaks.len() == 2)
            .map(|c| c.peaks[1].position - c.peaks[0].position)
            .fold(f64::INFINITY, f64::min);
        // at most half a field step from the crossing, the branches are
        // 2·hypot(slope·step/4, G) apart
        let bound = 2.0 * (0.25 * slope * step).hypot(g);
        prop_assert!(min_gap >= 2.0 * g - 3e-3, "{} < 2G = {}", min_gap, 2.0 * g);
        prop_assert!(min_gap <= bound + 3e-3, "{} > {}", min_gap, bound);
    }

    #[test]
    fn csv_and_sidecar_round_trip(sys in system(), seed in any::<u64>()) {
        let fields: Vec<f64> = (0..7).map(|i| 0.13 * i as f64).collect();
        let freqs: Vec<f64> = (0..9).map(|i| 9.0 + 0.37 * i as f64).collect();
        let map = add_noise(&synthesize_map(&fields, &freqs, &sys).unwrap(), 0.3, seed).unwrap();
        let mut csv = Vec::new();
        write_csv(&map, &mut csv).unwrap();
        let mut json = Vec::new();
        write_sidecar(map.metadata().unwrap(), &mut json).unwrap();
        let back = read_csv(csv.as_slice()).unwrap();
        let meta = read_sidecar(json.as_slice()).unwrap();
        prop_assert_eq!(back.with_metadata(Some(meta)), map);
    }
}
