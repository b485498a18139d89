#![allow(clippy::needless_range_loop)]

use proptest::prelude::*;
use symcount_core::enumerate::{full_scan, integral_points, is_primitive, primitive_filter, s_points_by_level};
use symcount_core::{Level, PlaceSet, VarietySpec};

fn lvl(m: i64) -> Level {
    Level::new(m).unwrap()
}

/// Symmetric integer forms with entries in [-3, 3]; indefinite ternaries are dropped
/// unless they are visibly anisotropic, which the constructor cannot decide.
fn form(n: usize) -> impl Strategy<Value = VarietySpec> {
    proptest::collection::vec(-3i64..=3, n * (n + 1) / 2).prop_filter_map("degenerate or unsupported", move |e| {
        let mut q = vec![vec![0; n]; n];
        let mut k = 0;
        for i in 0..n {
            for j in i..n {
                q[i][j] = e[k];
                q[j][i] = e[k];
                k += 1;
            }
        }
        VarietySpec::quadric(q).ok()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn ternary_completeness_up_to_25(spec in form(3), m in -20i64..=20, t in 1u64..=25) {
        prop_assume!(m != 0);
        prop_assert_eq!(integral_points(&spec, lvl(m), t).unwrap(), full_scan(&spec, lvl(m), t as i64).unwrap());
    }

    #[test]
    fn quaternary_completeness(spec in form(4), m in -20i64..=20, t in 1u64..=12) {
        prop_assume!(m != 0);
        prop_assert_eq!(integral_points(&spec, lvl(m), t).unwrap(), full_scan(&spec, lvl(m), t as i64).unwrap());
    }
}

#[test]
fn quaternary_completeness_at_25() {
    for coeffs in [[1, 1, 1, -1], [1, -1, 1, -1], [2, 1, 1, -3]] {
        let f = VarietySpec::diagonal(&coeffs).unwrap();
        for m in [-5, 1, 6] {
            assert_eq!(integral_points(&f, lvl(m), 25).unwrap(), full_scan(&f, lvl(m), 25).unwrap(), "{coeffs:?} m={m}");
        }
    }
}

#[test]
fn det_sym_completeness_up_to_3() {
    for sign in [1, -1] {
        let f = VarietySpec::det_sym(3, sign).unwrap();
        for m in [1, -2, 4] {
            assert_eq!(integral_points(&f, lvl(m), 3).unwrap(), full_scan(&f, lvl(m), 3).unwrap());
        }
    }
}

/// Representation counts r_3(m) on the full box, against a direct triple loop.
#[test]
fn sum_of_three_squares_counts() {
    let f = VarietySpec::diagonal(&[1, 1, 1]).unwrap();
    for m in 1..=60i64 {
        let b = (m as f64).sqrt() as i64 + 1;
        let mut direct = 0;
        for x in -b..=b {
            for y in -b..=b {
                let r = m - x * x - y * y;
                if r < 0 {
                    continue;
                }
                let z = (r as f64).sqrt().round() as i64;
                direct += match (z * z == r, z) {
                    (true, 0) => 1,
                    (true, _) => 2,
                    _ => 0,
                };
            }
        }
        assert_eq!(integral_points(&f, lvl(m), b as u64).unwrap().len(), direct, "m = {m}");
    }
}

#[test]
fn level_decomposition_for_three_squares() {
    let f = VarietySpec::diagonal(&[1, 1, 1]).unwrap();
    let s = PlaceSet::new(vec![3]).unwrap();
    let t = 9u64;
    let by_level = s_points_by_level(&f, &s, t).unwrap();
    let inner = t as i64 - 1;
    let mut direct = 0;
    for x in -inner..=inner {
        for y in -inner..=inner {
            for z in -inner..=inner {
                let v = [x, y, z];
                if is_primitive(&v) && s.in_semigroup((x * x + y * y + z * z) as i128) {
                    direct += 1;
                }
            }
        }
    }
    assert_eq!(by_level.values().map(Vec::len).sum::<usize>(), direct);
    for (level, pts) in &by_level {
        assert_eq!(primitive_filter(pts).len(), pts.len());
        assert!(pts.iter().all(|x| f.evaluate_int(x) == Some(*level as i128)));
    }
}
