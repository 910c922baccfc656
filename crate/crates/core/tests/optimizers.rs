use incoherent_core::altproj::{altproj_optimize, recover_projection, AltProjConfig};
use incoherent_core::coherence::gram_t_average;
use incoherent_core::elad::{elad_optimize, EladConfig, ThresholdMode};
use incoherent_core::linalg::{gram, symmetric_rank_truncate};
use incoherent_core::rng::{derive_seed, gaussian_matrix, rng_from_seed, Stage};
use incoherent_core::sapiro::{sapiro_objective, sapiro_optimize};
use incoherent_core::{Dictionary, Error, GramMatrix};
use nalgebra::DMatrix;

fn gaussian_dict(n: usize, k: usize, seed: u64) -> Dictionary {
    Dictionary::new(gaussian_matrix(n, k, &mut rng_from_seed(seed))).unwrap()
}

#[test]
fn sapiro_orthonormal_dictionary_has_zero_error() {
    for (i, n) in [1usize, 2, 5, 17, 50].into_iter().enumerate() {
        let q = gaussian_matrix(n, n, &mut rng_from_seed(i as u64)).qr().q();
        let d = Dictionary::new(q).unwrap();
        let out = sapiro_optimize(&d, n, 40 + i as u64).unwrap();
        let objective = sapiro_objective(&out.state.lambda, &out.state.gamma);
        assert!(objective <= 1e-8, "n = {n}: objective {objective}");
    }
}

#[test]
fn sapiro_trace_never_increases() {
    for seed in 0..100u64 {
        let n = 4 + (seed % 9) as usize;
        let k = n + 1 + (seed % 7) as usize;
        let m = 1 + (seed % n as u64) as usize;
        let d = gaussian_dict(n, k, derive_seed(seed, Stage::Dictionary, 0, 0));
        let out = sapiro_optimize(&d, m, seed).unwrap();
        let mut prev = out.initial_objective;
        for (step, &v) in out.trace.iter().enumerate() {
            assert!(v <= prev * (1.0 + 1e-12) + 1e-12, "seed {seed} step {step}: {prev} -> {v}");
            prev = v;
        }
    }
}

#[test]
fn sapiro_rejects_bad_m() {
    let d = gaussian_dict(4, 8, 0);
    assert!(matches!(sapiro_optimize(&d, 0, 0), Err(Error::InvalidConfig(_))));
    assert!(matches!(sapiro_optimize(&d, 5, 0), Err(Error::InvalidConfig(_))));
}

#[test]
fn altproj_small_instance_meets_target() {
    let d = gaussian_dict(6, 6, 5);
    let out = altproj_optimize(&d, &AltProjConfig { t: 0.5, m: 5, iterations: 200, seed: 2 }).unwrap();
    assert!(out.target.max_offdiag() <= 0.5 + 1e-3, "{}", out.target.max_offdiag());
}

#[test]
fn altproj_loose_target_is_met_at_once() {
    let d = gaussian_dict(10, 20, 1);
    let out = altproj_optimize(&d, &AltProjConfig { t: 0.999, m: 4, iterations: 1, seed: 0 }).unwrap();
    assert_eq!(out.trace.len(), 1);
    assert!(out.target.max_offdiag() <= 0.999);
}

#[test]
fn altproj_trace_matches_requested_length_and_is_deterministic() {
    let d = gaussian_dict(8, 16, 3);
    let cfg = AltProjConfig { t: 0.4, m: 4, iterations: 25, seed: 9 };
    let a = altproj_optimize(&d, &cfg).unwrap();
    let b = altproj_optimize(&d, &cfg).unwrap();
    assert_eq!(a.trace.len(), 25);
    assert_eq!(a, b);
}

#[test]
fn recovered_projection_reproduces_a_realizable_gram() {
    let d = gaussian_dict(6, 12, 11);
    let p_star = gaussian_matrix(3, 6, &mut rng_from_seed(12));
    let effective = &p_star * d.as_matrix();
    let raw = GramMatrix::from_symmetric(effective.tr_mul(&effective)).unwrap();
    let p = recover_projection(&raw, &d, 3).unwrap();
    let got = gram(&(p.as_matrix() * d.as_matrix())).unwrap();
    let want = gram(&effective).unwrap();
    assert!((got.as_matrix() - want.as_matrix()).norm() <= 1e-6);
}

#[test]
fn recovery_on_orthogonal_dictionary_gives_orthonormal_rows() {
    let q = gaussian_matrix(5, 5, &mut rng_from_seed(4)).qr().q();
    let d = Dictionary::new(q).unwrap();
    let truncated = symmetric_rank_truncate(&DMatrix::identity(5, 5), 3).unwrap();
    // A rank-3 projector rather than a unit-diagonal Gram.
    let g = GramMatrix::from_symmetric(truncated).unwrap();
    let p = recover_projection(&g, &d, 3).unwrap();
    let ppt = p.as_matrix() * p.as_matrix().transpose();
    assert!((ppt - DMatrix::<f64>::identity(3, 3)).amax() < 1e-8);
}

#[test]
fn recovery_rejects_excess_rank() {
    let d = gaussian_dict(6, 6, 2);
    let g = gram(&gaussian_matrix(6, 6, &mut rng_from_seed(3))).unwrap();
    assert!(matches!(recover_projection(&g, &d, 2), Err(Error::InvalidRank { .. })));
}

/// Golden values for one seeded 8×16, m = 4, fixed-threshold run.
#[test]
fn elad_small_instance_improves_on_the_starting_point() {
    let d = gaussian_dict(8, 16, 0);
    let cfg = EladConfig { threshold: ThresholdMode::Fixed(0.5), gamma: 0.6, iterations: 50, m: 4, seed: 100 };
    let out = elad_optimize(&d, &cfg).unwrap();
    let p0 = gaussian_matrix(4, 8, &mut rng_from_seed(100));
    let start = gram_t_average(&gram(&(p0 * d.as_matrix())).unwrap(), 0.5).unwrap();
    let end = out.trace.last().unwrap().mu_t.unwrap();
    assert!((start - 0.751_2).abs() < 5e-5, "start {start}");
    assert!((end - 0.705_2).abs() < 5e-5, "end {end}");
    assert!(end <= start);
}

#[test]
fn elad_is_deterministic() {
    let d = gaussian_dict(8, 16, 1);
    let cfg = EladConfig { threshold: ThresholdMode::Relative(26.0), gamma: 0.6, iterations: 10, m: 4, seed: 3 };
    assert_eq!(elad_optimize(&d, &cfg).unwrap(), elad_optimize(&d, &cfg).unwrap());
}
