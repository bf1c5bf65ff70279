use proptest::prelude::*;

use spreadpc::kernels::{make_explicit, make_uniform, Offset};
use spreadpc::returns::{return_series, return_series_dense, return_series_integer};
use spreadpc::sums::{cp_epsilon_sum, loop_sums};

fn small_table() -> impl Strategy<Value = (usize, Vec<(Offset, f64)>)> {
    (1usize..=3).prop_flat_map(|d| {
        let entry = (prop::collection::vec(-2i32..=2, d), 0.01f64..1.0);
        (Just(d), prop::collection::btree_map(entry.0, entry.1, 1..8))
            .prop_map(|(d, m)| (d, m.into_iter().collect()))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn uniform_series_invariants(d in 1usize..=4, l in 1u32..=3) {
        let s = return_series(&make_uniform(d, l).unwrap(), 24).unwrap();
        let inv = s.check_invariants();
        prop_assert!(inv.all_hold(), "d={} L={}: {:?}", d, l, inv);
    }

    #[test]
    fn integer_and_dense_agree(d in 1usize..=3, l in 1u32..=2) {
        let k = make_uniform(d, l).unwrap();
        let a = return_series_integer(&k, 12).unwrap();
        let b = return_series_dense(&k, 12).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!((x - y).abs() <= 1e-14 * x.max(1e-300) + 1e-16);
        }
    }

    #[test]
    fn explicit_kernels_give_valid_series((d, table) in small_table()) {
        let table: Vec<_> = table.into_iter().filter(|(x, _)| x.iter().any(|&c| c != 0)).collect();
        prop_assume!(!table.is_empty());
        let k = make_explicit(d, 2, table).unwrap();
        let s = return_series(&k, 16).unwrap();
        let inv = s.check_invariants();
        prop_assert!(inv.starts_at_one && inv.first_return_zero && inv.in_unit_interval);
        prop_assert!(inv.even_monotone && inv.log_convex, "{:?}", inv);
    }

    #[test]
    fn cp_sum_approaches_loop_sum(l in 1u32..=3) {
        let s = return_series(&make_uniform(5, l).unwrap(), 200).unwrap();
        let all = loop_sums(&s, 1e-10).s_all.value;
        let near = cp_epsilon_sum(&s, 1e-3).unwrap().value;
        let far = cp_epsilon_sum(&s, 0.5).unwrap().value;
        prop_assert!((near - all).abs() < (far - all).abs());
    }
}
