use incoherent_core::altproj::project_convex;
use incoherent_core::coherence::{mutual_coherence, t_average_coherence};
use incoherent_core::elad::shrink_elad;
use incoherent_core::linalg::{gram, lsq_projection, sqrt_factor, symmetric_rank_truncate, SymmetricEigen};
use incoherent_core::rng::{gaussian_matrix, rng_from_seed};
use incoherent_core::{Dictionary, Error};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn random(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    gaussian_matrix(rows, cols, &mut rng_from_seed(seed))
}

fn symmetric(k: usize, seed: u64) -> DMatrix<f64> {
    let a = random(k, k, seed);
    (&a + a.transpose()) * 0.5
}

fn rank_of(g: &DMatrix<f64>) -> usize {
    let eig = SymmetricEigen::new(g);
    let top = eig.largest().abs().max(1e-300);
    eig.values.iter().filter(|v| v.abs() > 1e-9 * top).count()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gram_ignores_column_scaling(seed in any::<u64>(), scales in prop::collection::vec(0.01f64..100.0, 6)) {
        let d = random(4, 6, seed);
        let mut scaled = d.clone();
        for (j, s) in scales.iter().enumerate() {
            scaled.column_mut(j).scale_mut(*s);
        }
        let a = gram(&d).unwrap();
        let b = gram(&scaled).unwrap();
        prop_assert!((a.as_matrix() - b.as_matrix()).amax() < 1e-12);
        for i in 0..6 {
            prop_assert_eq!(a.as_matrix()[(i, i)], 1.0);
        }
    }

    #[test]
    fn truncation_is_idempotent_psd_and_low_rank(seed in any::<u64>(), k in 2usize..9, m in 1usize..9) {
        let m = m.min(k);
        let g = symmetric(k, seed);
        let once = symmetric_rank_truncate(&g, m).unwrap();
        let twice = symmetric_rank_truncate(&once, m).unwrap();
        prop_assert!((&once - &twice).amax() < 1e-10);
        prop_assert!(rank_of(&once) <= m);
        let eig = SymmetricEigen::new(&once);
        prop_assert!(eig.values.iter().all(|&v| v >= -1e-10));
    }

    #[test]
    fn truncation_error_shrinks_with_rank(seed in any::<u64>(), k in 3usize..9) {
        let g = symmetric(k, seed);
        let mut prev = f64::INFINITY;
        for m in 1..=k {
            let err = (&g - symmetric_rank_truncate(&g, m).unwrap()).norm();
            prop_assert!(err <= prev + 1e-12);
            prev = err;
        }
    }

    #[test]
    fn sqrt_factor_reproduces_psd_input(seed in any::<u64>(), k in 2usize..8, m in 1usize..8) {
        let m = m.min(k);
        let a = random(m, k, seed);
        let g = a.tr_mul(&a);
        let s = sqrt_factor(&g, m).unwrap();
        prop_assert_eq!(s.shape(), (m, k));
        prop_assert!((s.tr_mul(&s) - &g).amax() < 1e-9 * g.amax().max(1.0));
    }

    #[test]
    fn lsq_projection_beats_random_candidates(seed in any::<u64>()) {
        let d = Dictionary::new(random(5, 9, seed)).unwrap();
        let s = random(3, 9, seed ^ 1);
        let p = lsq_projection(&s, &d).unwrap();
        let best = (&s - p.as_matrix() * d.as_matrix()).norm();
        for trial in 0..8u64 {
            let q = p.as_matrix() + random(3, 5, seed.wrapping_add(trial + 2)) * 0.1;
            prop_assert!(best <= (&s - q * d.as_matrix()).norm() + 1e-12);
        }
    }

    #[test]
    fn shrink_is_odd_monotone_and_never_amplifies(
        a in -1.0f64..1.0, b in -1.0f64..1.0, t in 0.01f64..1.0, gamma in 0.01f64..0.99,
    ) {
        prop_assert_eq!(shrink_elad(-a, t, gamma), -shrink_elad(a, t, gamma));
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(shrink_elad(lo, t, gamma) <= shrink_elad(hi, t, gamma));
        prop_assert!(shrink_elad(a, t, gamma).abs() <= a.abs());
    }

    #[test]
    fn convex_projection_is_idempotent_and_feasible(seed in any::<u64>(), k in 2usize..8, t in 0.05f64..0.95) {
        let g = symmetric(k, seed) * 1.5;
        let once = project_convex(&g, t);
        prop_assert_eq!(project_convex(&once, t), once.clone());
        for r in 0..k {
            prop_assert!(once[(r, r)] >= 1.0);
            for c in 0..k {
                if r != c {
                    prop_assert!(once[(r, c)].abs() <= t);
                    prop_assert!(once[(r, c)].abs() <= g[(r, c)].abs().max(t));
                }
            }
        }
    }

    #[test]
    fn coherence_ignores_permutation_and_sign(seed in any::<u64>(), flips in prop::collection::vec(any::<bool>(), 7)) {
        let d = random(4, 7, seed);
        let mut changed = DMatrix::zeros(4, 7);
        for j in 0..7 {
            let src = d.column((j + 3) % 7);
            let sign = if flips[j] { -1.0 } else { 1.0 };
            changed.set_column(j, &(src * sign));
        }
        let a = mutual_coherence(&d).unwrap().mu;
        let b = mutual_coherence(&changed).unwrap().mu;
        prop_assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn t_average_lies_between_t_and_mu(seed in any::<u64>(), t in 0.0f64..0.99) {
        let d = random(4, 8, seed);
        let mu = mutual_coherence(&d).unwrap().mu;
        match t_average_coherence(&d, t) {
            Ok(avg) => {
                prop_assert!(avg > t);
                prop_assert!(avg <= mu + 1e-15);
            }
            Err(e) => {
                prop_assert_eq!(e, Error::EmptyAverage(t));
                prop_assert!(mu <= t);
            }
        }
    }
}
