use cavmag_core::model::polariton_pair;
use cavmag_core::{
    coupling_regime, magnon_branches, spin_flop_field, CavityParams, CouplingParams, Regime,
    SpinSystemParams,
};
use nalgebra::Matrix2;
use proptest::prelude::*;

fn spins() -> impl Strategy<Value = SpinSystemParams> {
    (1.5f64..2.5, 1.0f64..100.0).prop_map(|(g_factor, f_afmr0)| SpinSystemParams {
        g_factor,
        f_afmr0,
        ..Default::default()
    })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn zero_field_branches_are_degenerate(s in spins()) {
        let m = magnon_branches(&s, 0.0).unwrap();
        prop_assert_eq!(m.branches.lower, s.f_afmr0);
        prop_assert_eq!(m.branches.upper, s.f_afmr0);
        prop_assert!(!m.clamped);
    }

    #[test]
    fn branches_split_symmetrically_below_spin_flop(s in spins(), x in 0.0f64..1.0) {
        let b = x * spin_flop_field(&s);
        let m = magnon_branches(&s, b).unwrap().branches;
        prop_assert!(rel(0.5 * (m.lower + m.upper), s.f_afmr0) < 1e-12);
        prop_assert!(m.lower <= m.upper);
    }

    #[test]
    fn spin_flop_field_is_the_lower_branch_root(s in spins()) {
        // independent bisection on the unclamped branch f0 − g·γ1·B
        let slope = s.g_factor * cavmag_core::GYROMAGNETIC_PER_G;
        let (mut lo, mut hi) = (0.0f64, 10.0 * s.f_afmr0 / slope);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if s.f_afmr0 - slope * mid > 0.0 { lo = mid } else { hi = mid }
        }
        prop_assert!((spin_flop_field(&s) - 0.5 * (lo + hi)).abs() < 1e-9);
    }

    #[test]
    fn polariton_trace_is_preserved(fc in 0.1f64..100.0, fm in 0.0f64..100.0, g in 0.0f64..20.0) {
        let p = polariton_pair(fc, fm, g).unwrap();
        prop_assert!(rel(p.lower + p.upper, fc + fm) < 1e-12);
    }

    #[test]
    fn splitting_is_at_least_two_g(fc in 0.1f64..100.0, fm in 0.0f64..100.0, g in 0.0f64..20.0) {
        let p = polariton_pair(fc, fm, g).unwrap();
        prop_assert!(p.splitting() >= 2.0 * g * (1.0 - 1e-15));
    }

    #[test]
    fn closed_form_matches_matrix_diagonalisation(
        fc in 0.1f64..100.0, fm in 0.0f64..100.0, g in 0.0f64..20.0,
    ) {
        let p = polariton_pair(fc, fm, g).unwrap();
        let eig = Matrix2::new(fc, g, g, fm).symmetric_eigenvalues();
        let (lo, hi) = (eig.min(), eig.max());
        let scale = fc.abs().max(fm.abs()).max(g);
        prop_assert!((p.lower - lo).abs() <= 1e-12 * scale, "{} vs {}", p.lower, lo);
        prop_assert!((p.upper - hi).abs() <= 1e-12 * scale, "{} vs {}", p.upper, hi);
    }

    #[test]
    fn regime_is_scale_invariant(
        g in 0.0f64..30.0, fc in 0.5f64..30.0, q in 10.0f64..1e5, gamma in 1e-4f64..1.0,
        scale in prop::sample::select(vec![0.25f64, 0.5, 2.0, 4.0, 1024.0]),
    ) {
        let cav = CavityParams { f_cavity: fc, quality_factor: q, ..Default::default() };
        let scaled = CavityParams { f_cavity: fc * scale, ..cav };
        let a = coupling_regime(&CouplingParams::new(g), &cav, gamma);
        let b = coupling_regime(&CouplingParams::new(g * scale), &scaled, gamma * scale);
        prop_assert_eq!(a.regime, b.regime);
        prop_assert_eq!(a.ratio, b.ratio);
    }

    #[test]
    fn regime_labels_are_ordered_by_ratio(g in 0.0f64..30.0, fc in 0.5f64..30.0) {
        let cav = CavityParams { f_cavity: fc, ..Default::default() };
        let r = coupling_regime(&CouplingParams::new(g), &cav, 1e-6);
        let expected = if g <= (fc / cav.quality_factor).max(1e-6) {
            Regime::Weak
        } else if r.ratio >= 1.0 {
            Regime::DeepStrong
        } else if r.ratio >= 0.1 {
            Regime::Ultrastrong
        } else {
            Regime::Strong
        };
        prop_assert_eq!(r.regime, expected);
    }
}
