use nalgebra::DMatrix;
use proptest::prelude::*;
use svarlab_core::identification::{Cell, RestrictionSet};
use svarlab_core::indexes::{logistic, transition_prob, RoundnessRule};
use svarlab_core::lp::newey_west;
use svarlab_core::timeseries::QuarterIndex;

fn cell() -> impl Strategy<Value = Cell> {
    prop_oneof![Just(Cell::Positive), Just(Cell::Negative), Just(Cell::Zero), Just(Cell::Free)]
}

proptest! {
    #[test]
    fn logistic_is_symmetric_and_bounded(x in -800.0f64..800.0) {
        let (a, b) = (logistic(x), logistic(-x));
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!((a + b - 1.0).abs() < 1e-15);
    }

    #[test]
    fn transition_is_monotone(mut xs in prop::collection::vec(-50.0f64..50.0, 3..60), eta in 0.1f64..20.0) {
        xs.sort_by(f64::total_cmp);
        prop_assume!(xs[0] < xs[xs.len() - 1]);
        let z = transition_prob(&xs, eta).unwrap();
        prop_assert!(z.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(z.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn uncertainty_map_stays_in_unit_interval(rounds in 0usize..200, extra in 0usize..200, p0 in 0.0f64..0.99) {
        let rule = RoundnessRule::new(0.5, 1e-9, p0).unwrap();
        let n = rounds + extra;
        prop_assume!(n > 0);
        let v = rule.index_from_counts(rounds, n);
        prop_assert!((0.0..=1.0).contains(&v));
        if rounds == n {
            prop_assert_eq!(v, 1.0);
        }
    }

    #[test]
    fn quarter_offsets_roundtrip(year in 1900i32..2100, q in 1u8..=4, k in -400i64..400) {
        let d = QuarterIndex::new(year, q).unwrap();
        let e = d.offset(k);
        prop_assert_eq!(e.quarters_since(d), k);
        prop_assert_eq!(e.to_string().parse::<QuarterIndex>().unwrap(), e);
    }

    #[test]
    fn restriction_text_roundtrips(cells in prop::collection::vec(cell(), 9)) {
        let grid: Vec<Vec<Cell>> = cells.chunks(3).map(<[Cell]>::to_vec).collect();
        if let Ok(set) = RestrictionSet::from_grid(grid, Some(vec!["a".into(), "b".into(), "c".into()])) {
            let back = RestrictionSet::parse(&set.to_string()).unwrap();
            prop_assert_eq!(back, set);
        }
    }

    #[test]
    fn newey_west_is_symmetric_psd(
        vals in prop::collection::vec(-5.0f64..5.0, 40),
        resid in prop::collection::vec(-3.0f64..3.0, 20),
        bw in 0usize..6,
    ) {
        let x = DMatrix::from_fn(20, 2, |i, j| if j == 0 { 1.0 } else { vals[i] + 0.1 * vals[20 + i] });
        let u = nalgebra::DVector::from_vec(resid);
        let Ok(v) = newey_west(&x, &u, bw) else { return Ok(()) };
        let scale = v.abs().max().max(1.0);
        prop_assert!((&v - v.transpose()).abs().max() <= 1e-12 * scale);
        let eig = v.symmetric_eigen().eigenvalues;
        prop_assert!(eig.iter().all(|e| *e >= -1e-9 * scale));
    }
}
