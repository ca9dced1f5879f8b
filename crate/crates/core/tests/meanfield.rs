mod common;

use common::{coherent_energy, coherent_minimum};
use proptest::prelude::*;
use pspin_core::meanfield::{
    candidates, classify_phase, detect_jump, f_qp, f_qp2, free_energy, solve_saddle, InteractionOrder,
    InverseTemperature, Magnetization, PhaseLabel, TransitionOrder,
};
use pspin_core::SchedulePoint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const T0: InverseTemperature = InverseTemperature::Infinite;

fn pt(s: f64, lambda: f64) -> SchedulePoint {
    SchedulePoint::new(s, lambda).unwrap()
}

fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

#[test]
fn classified_energy_matches_circle_minimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let p = [3, 5, 7, 11, 21][rng.random_range(0..5)];
        let s = rng.random_range(0.0..0.999);
        let lambda = rng.random_range(0.0..1.0);
        let sol = classify_phase(p, pt(s, lambda), T0).unwrap();
        let (phi, e) = coherent_minimum(p, s, lambda);
        assert!(
            (sol.free_energy - e).abs() < 1e-9,
            "p={p} s={s} lambda={lambda}: {} vs oracle {e}",
            sol.free_energy
        );
        if lambda > 0.0 && phi > 1e-3 {
            // Unique clear minimum off the equator is ferromagnetic.
            let runner_up = [0.0, std::f64::consts::FRAC_PI_2]
                .iter()
                .map(|&q| coherent_energy(p, s, lambda, q))
                .fold(f64::INFINITY, f64::min);
            if runner_up - e > 1e-6 {
                assert!(
                    sol.phase.is_ferromagnetic() || sol.magnetization.mz > 0.0,
                    "p={p} s={s} lambda={lambda}"
                );
            }
        }
    }
}

#[test]
fn finite_beta_approaches_zero_temperature() {
    let beta = InverseTemperature::finite(1e4).unwrap();
    for (p, s, lambda) in [
        (3, 0.2, 0.5),
        (5, 0.6, 0.3),
        (11, 0.8, 0.3),
        (5, 0.9, 0.9),
        (7, 0.25, 0.0),
        (21, 0.7, 0.6),
    ] {
        let cold = classify_phase(p, pt(s, lambda), T0).unwrap().magnetization;
        let warm = classify_phase(p, pt(s, lambda), beta).unwrap().magnetization;
        assert!(
            (cold.mz - warm.mz).abs() < 1e-3 && (cold.mx - warm.mx).abs() < 1e-3,
            "p={p} s={s} lambda={lambda}: {cold:?} vs {warm:?}"
        );
    }
}

#[test]
fn ferromagnet_is_lowest_at_p5() {
    let seeds = [
        Magnetization::new(1.0, 0.0),
        Magnetization::new(0.5, 0.5),
        Magnetization::new(0.1, 0.9),
    ];
    let point = pt(0.45, 0.1);
    let best = seeds
        .iter()
        .map(|&m| solve_saddle(5, point, T0, m).unwrap())
        .filter(|sol| sol.converged)
        .min_by(|a, b| a.free_energy.total_cmp(&b.free_energy))
        .unwrap();
    assert!(best.magnetization.mz > 0.0);
    // Dense scan of the product-state energy over the quarter disk at 1e-3
    // resolution; its minimum lies on the rim.
    let (s, l) = (point.s, point.lambda);
    let mut scan = (f64::INFINITY, 0.0);
    for i in 0..=1000 {
        for j in 0..=1000 {
            let (mz, mx) = (i as f64 * 1e-3, j as f64 * 1e-3);
            if mz * mz + mx * mx <= 1.0 {
                let e = -s * l * mz.powi(5) + s * (1.0 - l) * mx * mx - (1.0 - s) * mx;
                if e < scan.0 {
                    scan = (e, mz);
                }
            }
        }
    }
    assert!(scan.1 > 0.0);
    assert!(best.free_energy <= scan.0 + 1e-9);
    assert!((best.free_energy - free_energy(5, point, T0, best.magnetization)).abs() < 1e-12);
}

#[test]
fn fully_polarized_at_the_target() {
    let sol = solve_saddle(3, pt(1.0, 1.0), T0, Magnetization::new(0.9, 0.1)).unwrap();
    assert!(sol.converged);
    assert!((sol.magnetization.mz - 1.0).abs() < 1e-12);
    assert!((sol.free_energy + 1.0).abs() < 1e-12);
}

#[test]
fn paramagnetic_energies() {
    assert!((f_qp(pt(1.0 / 3.0, 0.0)).unwrap() + 1.0 / 3.0).abs() < 1e-15);
    assert_eq!(f_qp(pt(0.0, 0.7)).unwrap(), -1.0);
    assert!((f_qp(pt(0.2, 0.5)).unwrap() + 0.7).abs() < 1e-15);
    assert!((f_qp2(pt(0.5, 0.5)).unwrap() + 0.25).abs() < 1e-15);
}

#[test]
fn spot_classifications() {
    assert!(classify_phase(11, pt(0.5, 0.3), T0).unwrap().phase.is_ferromagnetic());
    assert_eq!(classify_phase(5, pt(0.2, 0.1), T0).unwrap().phase, PhaseLabel::Qp);
}

#[test]
fn p5_slice_is_continuous() {
    let t = detect_jump(InteractionOrder::Finite(5), 0.1, &grid(0.0, 0.999, 400)).unwrap();
    assert_eq!(t.len(), 1, "{t:?}");
    assert_eq!(t[0].order, TransitionOrder::Second);
    assert!((t[0].s - 1.0 / 2.8).abs() < 1e-4);
}

#[test]
fn p11_slice_has_both_orders() {
    let t = detect_jump(InteractionOrder::Finite(11), 0.3, &grid(0.0, 0.999, 400)).unwrap();
    assert_eq!(t.len(), 2, "{t:?}");
    assert_eq!(t[0].order, TransitionOrder::Second);
    assert!((t[0].s - 1.0 / 2.4).abs() < 1e-4);
    assert_eq!(t[1].order, TransitionOrder::First);
    assert!(t[1].from.is_ferromagnetic() && t[1].to.is_ferromagnetic());
    assert!((t[1].s - 0.4701).abs() < 2e-3);
}

#[test]
fn qp_is_stable_below_its_edge() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let lambda: f64 = rng.random_range(0.0..1.0);
        let s = rng.random_range(0.0..1.0) / (3.0 - 2.0 * lambda) * 0.95;
        let c = candidates(3, pt(s, lambda), T0).unwrap();
        let qp = c.iter().find(|x| x.phase == PhaseLabel::Qp).unwrap();
        assert_eq!(qp.magnetization, Magnetization::new(0.0, 1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // At a zero-temperature saddle point the free energy equals the
    // product-state energy in the direction of m.
    #[test]
    fn saddle_energy_is_coherent_energy(p in prop::sample::select(vec![3u32, 5, 11]), s in 0.05..0.99f64, lambda in 0.05..1.0f64) {
        for sol in candidates(p, pt(s, lambda), T0).unwrap() {
            let m = sol.magnetization;
            let phi = m.mz.atan2(m.mx);
            prop_assert!((sol.free_energy - coherent_energy(p, s, lambda, phi)).abs() < 1e-9 || (m.mz * m.mz + m.mx * m.mx) < 1.0 - 1e-9,
                "{sol:?}");
        }
    }

    #[test]
    fn converged_solutions_have_small_residual(p in prop::sample::select(vec![3u32, 5, 7]), s in 0.0..0.99f64, lambda in 0.0..1.0f64, beta in prop::option::of(1.0..1e3f64)) {
        let beta = beta.map_or(T0, |b| InverseTemperature::finite(b).unwrap());
        for sol in candidates(p, pt(s, lambda), beta).unwrap() {
            prop_assert!(sol.free_energy.is_finite());
            prop_assert!(sol.magnetization.mz >= -1e-12 && sol.magnetization.mx.abs() <= 1.0 + 1e-12);
        }
    }
}
