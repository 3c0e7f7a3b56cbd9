use fhs::sampler::Draw;
use fhs::{BSplineSystem, Convention, DifferenceOperator, Domain, DrawStore, FunctionalDataset, Record};
use nalgebra::DMatrix;
use proptest::prelude::*;

/// Textbook recursive Cox-de Boor with 0/0 := 0 and the right end folded
/// into the last nonempty span.
fn de_boor(knots: &[f64], i: usize, p: usize, s: f64, hi: f64) -> f64 {
    if p == 0 {
        let (a, b) = (knots[i], knots[i + 1]);
        let inside = (a <= s && s < b) || (s == hi && b == hi && a < b);
        return if inside { 1.0 } else { 0.0 };
    }
    let mut v = 0.0;
    let d1 = knots[i + p] - knots[i];
    if d1 > 0.0 {
        v += (s - knots[i]) / d1 * de_boor(knots, i, p - 1, s, hi);
    }
    let d2 = knots[i + p + 1] - knots[i + 1];
    if d2 > 0.0 {
        v += (knots[i + p + 1] - s) / d2 * de_boor(knots, i + 1, p - 1, s, hi);
    }
    v
}

fn binom(n: usize, k: usize) -> i64 {
    (0..k).fold(1i64, |a, i| a * (n - i) as i64 / (i + 1) as i64)
}

proptest! {
    #[test]
    fn basis_matches_recursive_oracle(lo in -50.0f64..50.0, width in 0.5f64..200.0, l in 4usize..16, u in 0.0f64..=1.0) {
        let domain = Domain::new(lo, lo + width).unwrap();
        let sys = BSplineSystem::new(domain, l).unwrap();
        let s = (lo + u * width).min(lo + width);
        let row = sys.eval(s).unwrap();
        for (i, v) in row.iter().enumerate() {
            let oracle = de_boor(sys.knots(), i, 3, s, lo + width);
            prop_assert!((v - oracle).abs() < 1e-10, "i={} {} vs {}", i, v, oracle);
        }
    }

    #[test]
    fn basis_is_a_partition_of_unity(l in 4usize..30, u in 0.0f64..=1.0) {
        let sys = BSplineSystem::new(Domain::new(1.0, 120.0).unwrap(), l).unwrap();
        let row = sys.eval(1.0 + 119.0 * u).unwrap();
        prop_assert!(row.iter().all(|v| *v >= -1e-15));
        prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(row.iter().filter(|v| **v != 0.0).count() <= 4);
    }

    #[test]
    fn gram_is_symmetric_positive_semidefinite(l in 4usize..12, n in 1usize..40, seed in 0u64..1000) {
        use rand::Rng;
        let mut r = fhs::rng::stream(seed, 0);
        let mut pts: Vec<f64> = (0..n).map(|_| r.random::<f64>() * 10.0).collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let d = BSplineSystem::new(Domain::new(0.0, 10.0).unwrap(), l).unwrap().design_matrix(&pts).unwrap();
        prop_assert!((&d.gram - d.gram.transpose()).abs().max() == 0.0);
        let eig = d.gram.clone().symmetric_eigenvalues();
        prop_assert!(eig.iter().all(|e| *e > -1e-10));
    }

    #[test]
    fn difference_rows_are_signed_binomials(order in 0usize..4, extra in 1usize..8) {
        let len = order + 1 + extra;
        for conv in [Convention::Recursion, Convention::Forward] {
            let op = DifferenceOperator::<i64>::with_convention(order, len, conv).unwrap();
            prop_assert_eq!(op.matrix().shape(), (len - order - 1, len));
            for j in 0..op.n_diffs() {
                let m = order + 1;
                for c in 0..len {
                    let expected = if c >= j && c - j <= m {
                        let i = c - j;
                        // forward: Σ (−1)^{m−i} C(m,i) b_{j+i}
                        let forward = binom(m, i) * if (m - i) % 2 == 0 { 1 } else { -1 };
                        match conv {
                            Convention::Forward => forward,
                            Convention::Recursion => if m % 2 == 1 { -forward } else { forward },
                        }
                    } else {
                        0
                    };
                    prop_assert_eq!(op.matrix()[(j, c)], expected);
                }
            }
        }
    }

    #[test]
    fn differences_annihilate_low_degree_polynomials(order in 0usize..3, extra in 1usize..8, coef in prop::array::uniform3(-5.0f64..5.0)) {
        let len = order + 1 + extra;
        let op = DifferenceOperator::<i64>::new(order, len).unwrap();
        let b = DMatrix::<f64>::from_fn(len, 1, |t, _| (0..=order).map(|p| coef[p] * (t as f64).powi(p as i32)).sum::<f64>());
        let d = op.deltas(&b).unwrap();
        prop_assert!(d.abs().max() < 1e-8);
    }

    #[test]
    fn dataset_round_trips(n_times in 2usize..6, seed in 0u64..500) {
        use rand::Rng;
        let mut r = fhs::rng::stream(seed, 1);
        let records = (0..n_times)
            .map(|_| {
                let n = r.random_range(1..12);
                let mut points: Vec<f64> = (0..n).map(|_| r.random::<f64>() * 10.0).collect();
                points.sort_by(f64::total_cmp);
                points.dedup();
                let values = points.iter().map(|_| r.random::<f64>() * 100.0 - 50.0).collect();
                Record { points, values }
            })
            .collect();
        let domain = Domain::new(0.0, 10.0).unwrap();
        let ds = FunctionalDataset::new(records, domain, None).unwrap();
        let mut buf = Vec::new();
        ds.write(&mut buf).unwrap();
        prop_assert_eq!(FunctionalDataset::read(buf.as_slice(), domain).unwrap(), ds);
    }

    #[test]
    fn omission_keeps_a_subsequence(rate in 0.0f64..0.6, seed in 0u64..500) {
        let pts: Vec<f64> = (0..30).map(f64::from).collect();
        let records = (0..5)
            .map(|t| Record { points: pts.clone(), values: pts.iter().map(|s| s * 10.0 + t as f64).collect() })
            .collect();
        let ds = FunctionalDataset::new(records, Domain::new(0.0, 29.0).unwrap(), None).unwrap();
        let thinned = ds.omit_at_random(rate, &mut fhs::rng::stream(seed, 2)).unwrap();
        prop_assert_eq!(thinned.total_points(), 150 - (rate * 150.0).round() as usize);
        for (t, rec) in thinned.records().iter().enumerate() {
            for (s, y) in rec.points.iter().zip(&rec.values) {
                prop_assert_eq!(*y, s * 10.0 + t as f64);
            }
        }
    }

    #[test]
    fn draw_store_round_trips(n_times in 3usize..6, l in 4usize..7, order in 0usize..2, n in 0usize..5, seed in 0u64..100) {
        use rand::Rng;
        let mut r = fhs::rng::stream(seed, 3);
        let mut store = DrawStore::<f64>::new(n_times, l, order);
        for i in 0..n {
            store
                .push(Draw {
                    iteration: i as u64 + 1,
                    sigma2: r.random(),
                    tau2: r.random(),
                    lambda2: (0..n_times - order - 1).map(|_| r.random::<f64>() * 1e6).collect(),
                    coeffs: DMatrix::from_fn(n_times, l, |_, _| r.random::<f64>() - 0.5),
                })
                .unwrap();
        }
        let mut bin = Vec::new();
        store.write_binary(&mut bin).unwrap();
        prop_assert_eq!(&DrawStore::read_binary(bin.as_slice()).unwrap(), &store);
        let mut txt = Vec::new();
        store.write_text(&mut txt).unwrap();
        prop_assert_eq!(&DrawStore::read_text(txt.as_slice()).unwrap(), &store);
    }
}

#[test]
fn recursion_convention_first_order() {
    let op = DifferenceOperator::<i64>::new(0, 4).unwrap();
    assert_eq!(op.matrix().row(0).iter().copied().collect::<Vec<_>>(), vec![1, -1, 0, 0]);
    let op = DifferenceOperator::<i64>::new(1, 4).unwrap();
    assert_eq!(op.matrix().row(0).iter().copied().collect::<Vec<_>>(), vec![1, -2, 1, 0]);
}
