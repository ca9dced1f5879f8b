mod common;

use common::{eigenvalues, Model};
use nalgebra::SymmetricEigen;
use proptest::prelude::*;
use pspin_core::eigen::lowest_eigenvalues;
use pspin_core::spectrum::lowest_two;
use pspin_core::{SchedulePoint, SectorBasis, SectorHamiltonian};

fn sector(m: Model) -> pspin_core::BandedSymmetricOperator {
    SectorHamiltonian::new(SectorBasis::new(m.n).unwrap(), m.p)
        .unwrap()
        .at(SchedulePoint::new(m.s, m.lambda).unwrap())
        .unwrap()
}

fn model() -> impl Strategy<Value = (u32, f64, f64)> {
    (prop::sample::select(vec![3u32, 5, 7]), 0.0..=1.0f64, 0.0..=1.0f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sector_matrix_is_dicke_projection(n in 1usize..=10, (p, s, lambda) in model()) {
        let m = Model { n, p, s, lambda };
        let reference = m.projected();
        let ours = sector(m).to_matrix();
        for i in 0..=n {
            for j in 0..=n {
                prop_assert!((reference[(i, j)] - ours[(i, j)]).abs() < 1e-10,
                    "entry ({i}, {j}): {} vs {}", reference[(i, j)], ours[(i, j)]);
            }
        }
    }

    #[test]
    fn sector_levels_match_projection(n in 2usize..=12, (p, s, lambda) in model()) {
        let m = Model { n, p, s, lambda };
        let reference = eigenvalues(m.projected());
        let ours = lowest_eigenvalues(&sector(m), n + 1).unwrap();
        for (a, b) in reference.iter().zip(&ours) {
            prop_assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        let (e0, e1) = lowest_two(&sector(m)).unwrap();
        prop_assert!((e0 - reference[0]).abs() < 1e-9 && (e1 - reference[1]).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn sector_levels_belong_to_full_spectrum(n in 2usize..=8, (p, s, lambda) in model()) {
        let m = Model { n, p, s, lambda };
        let full = eigenvalues(m.full_matrix());
        for e in lowest_eigenvalues(&sector(m), n + 1).unwrap() {
            let nearest = full.iter().map(|f| (f - e).abs()).fold(f64::INFINITY, f64::min);
            prop_assert!(nearest < 1e-9, "sector level {e} missing from the full spectrum");
        }
    }

    #[test]
    fn lowest_two_relative_accuracy(n in 2usize..=160, (p, s, lambda) in model()) {
        let op = sector(Model { n, p, s, lambda });
        let mut dense: Vec<f64> = SymmetricEigen::new(op.to_matrix()).eigenvalues.iter().copied().collect();
        dense.sort_by(f64::total_cmp);
        let (e0, e1) = lowest_two(&op).unwrap();
        let scale = dense[0].abs().max(1.0);
        prop_assert!((e0 - dense[0]).abs() <= 1e-10 * scale, "{e0} vs {}", dense[0]);
        prop_assert!((e1 - dense[1]).abs() <= 1e-10 * dense[1].abs().max(1.0), "{e1} vs {}", dense[1]);
    }
}

#[test]
fn ground_of_full_model_lies_in_the_sector() {
    // For lambda > 0 and s < 1 the absolute ground state is symmetric.
    for (p, s, lambda) in [(3, 0.4, 0.3), (5, 0.7, 0.1), (7, 0.2, 0.9)] {
        let m = Model { n: 7, p, s, lambda };
        let full = eigenvalues(m.full_matrix());
        let (e0, _) = lowest_two(&sector(m)).unwrap();
        assert!((full[0] - e0).abs() < 1e-9, "{} vs {e0}", full[0]);
    }
}

#[test]
fn small_dump_diagonal() {
    let op = sector(Model {
        n: 2,
        p: 3,
        s: 1.0,
        lambda: 1.0,
    });
    let m = op.to_matrix();
    assert_eq!([m[(0, 0)], m[(1, 1)], m[(2, 2)]], [2.0, 0.0, -2.0]);
    let reference = Model {
        n: 2,
        p: 3,
        s: 1.0,
        lambda: 1.0,
    }
    .full_matrix();
    assert_eq!(eigenvalues(reference), vec![-2.0, 0.0, 0.0, 2.0]);
}
