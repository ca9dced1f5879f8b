use proptest::prelude::*;
use pspin_core::meanfield::{
    f_qp, f_qp2, free_energy, qp2_magnetization, residual, InteractionOrder, InverseTemperature, Magnetization,
};
use pspin_core::{SchedulePath, SchedulePoint, SectorBasis, SectorHamiltonian};

fn point() -> impl Strategy<Value = SchedulePoint> {
    (0.0..=1.0f64, 0.0..=1.0f64).prop_map(|(s, l)| SchedulePoint::new(s, l).unwrap())
}

proptest! {
    #[test]
    fn qp_energy_is_the_saddle_value(p in 3u32..30, pt in point()) {
        prop_assume!(pt.s < 1.0 / (3.0 - 2.0 * pt.lambda));
        let m = Magnetization::new(0.0, 1.0);
        let f = free_energy(p, pt, InverseTemperature::Infinite, m);
        prop_assert!((f - f_qp(pt).unwrap()).abs() < 1e-14);
        prop_assert!(residual(p, pt, InverseTemperature::Infinite, m) < 1e-14);
    }

    #[test]
    fn qp2_energy_is_the_saddle_value(p in 3u32..30, pt in point()) {
        prop_assume!(pt.lambda < 1.0 && pt.s < 1.0 && pt.s >= 1.0 / (3.0 - 2.0 * pt.lambda));
        let m = qp2_magnetization(pt).unwrap();
        prop_assert!(m.mz == 0.0 && (0.0..=1.0 + 1e-15).contains(&m.mx));
        let f = free_energy(p, pt, InverseTemperature::Infinite, m);
        prop_assert!((f - f_qp2(pt).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn points_outside_the_square_are_rejected(s in -2.0..3.0f64, l in -2.0..3.0f64) {
        let inside = (0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&l);
        prop_assert_eq!(SchedulePoint::new(s, l).is_ok(), inside);
    }

    #[test]
    fn path_positions_stay_on_the_polyline(pts in prop::collection::vec(point(), 1..6), u in prop::collection::vec(0.0..=1.0f64, 1..20)) {
        let path = SchedulePath::new(pts.clone()).unwrap();
        prop_assert_eq!(path.at(0.0), path.start());
        prop_assert_eq!(path.at(1.0), path.end());
        for &x in &u {
            let q = path.at(x);
            prop_assert!((0.0..=1.0).contains(&q.s) && (0.0..=1.0).contains(&q.lambda));
            let lo_s = pts.iter().map(|p| p.s).fold(f64::INFINITY, f64::min);
            let hi_s = pts.iter().map(|p| p.s).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(q.s >= lo_s - 1e-12 && q.s <= hi_s + 1e-12);
        }
    }

    #[test]
    fn order_and_beta_round_trip(p in 3u32..1000, beta in 1e-3..1e6f64) {
        let order = InteractionOrder::Finite(p);
        prop_assert_eq!(order.to_string().parse::<InteractionOrder>().unwrap(), order);
        let b = InverseTemperature::finite(beta).unwrap();
        prop_assert_eq!(b.to_string().parse::<InverseTemperature>().unwrap(), b);
    }

    #[test]
    fn hamiltonian_is_linear_in_the_controls(n in 1usize..40, p in 3u32..12, a in point(), b in point()) {
        let ham = SectorHamiltonian::new(SectorBasis::new(n).unwrap(), p).unwrap();
        let mid = SchedulePoint::new(0.5 * (a.s + b.s), a.lambda).unwrap();
        let (ha, hb) = (ham.at(SchedulePoint::new(a.s, a.lambda).unwrap()).unwrap(), ham.at(SchedulePoint::new(b.s, a.lambda).unwrap()).unwrap());
        let hm = ham.at(mid).unwrap();
        for i in 0..=n {
            for j in i..=(i + 2).min(n) {
                let avg = 0.5 * (ha.get(i, j) + hb.get(i, j));
                prop_assert!((hm.get(i, j) - avg).abs() < 1e-12 * (1.0 + avg.abs() + n as f64));
                prop_assert_eq!(hm.get(i, j), hm.get(j, i));
            }
        }
    }
}

#[test]
fn parse_special_values() {
    assert_eq!("inf".parse::<InteractionOrder>().unwrap(), InteractionOrder::Infinite);
    assert_eq!(
        "INFINITE".parse::<InverseTemperature>().unwrap(),
        InverseTemperature::Infinite
    );
    assert!("2".parse::<InteractionOrder>().is_err());
    assert!("-1".parse::<InverseTemperature>().is_err());
    assert!("0".parse::<InverseTemperature>().is_err());
}
