use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn e(m: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; m];
    v[i] = 1.0;
    v
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// Every family with a small parameterization at dimension `m`.
pub(crate) fn zoo(m: usize) -> Vec<UncertaintySet> {
    let mut out = vec![
        UncertaintySet::hypersphere(m).unwrap(),
        UncertaintySet::p_norm_ball(m, 3.0, 1.0).unwrap(),
        UncertaintySet::p_norm_ball(m, 1.5, 1.0).unwrap(),
        UncertaintySet::budget(m, (m as f64).sqrt().max(1.0)).unwrap(),
        UncertaintySet::pi_ellipsoid(m, 0.3).unwrap(),
        UncertaintySet::budget_intersection(vec![
            (0..m).map(|i| 0.2 + 0.1 * (i % 3) as f64).collect(),
            (0..m).map(|i| 0.1 + 0.05 * (i % 4) as f64).collect(),
        ])
        .unwrap(),
        UncertaintySet::scaled_spi((0..m).map(|i| 0.5 + 0.1 * i as f64).collect(), UncertaintySet::hypersphere(m).unwrap())
            .unwrap(),
        UncertaintySet::permuted_nu_hull(m, m / 2, 1.0 / (m as f64).sqrt()).unwrap(),
    ];
    if m >= 3 {
        out.push(UncertaintySet::generalized_budget(m, 0.25 * (m as f64 - 1.0)).unwrap());
        let q = 1.5;
        let r = 0.5 * (1.0 + (m as f64).powf(1.0 / q - 1.0 / 3.0));
        out.push(UncertaintySet::two_norm_balls(m, 3.0, q, r).unwrap());
    }
    out
}

#[test]
fn membership_examples() {
    let s = UncertaintySet::hypersphere(3).unwrap();
    assert!(s.membership(&e(3, 0), DEFAULT_TOL).unwrap());
    let b = UncertaintySet::budget(4, 2.0).unwrap();
    assert!(!b.membership(&[1.0, 1.0, 0.5, 0.0], DEFAULT_TOL).unwrap());
    let ell = UncertaintySet::pi_ellipsoid(3, 0.5).unwrap();
    let g = 1.0 / (0.5f64 * 9.0 + 0.5 * 3.0).sqrt();
    let h = vec![g; 3];
    assert!(ell.membership(&h, DEFAULT_TOL).unwrap());
    let q = 0.5 * 3.0 * g * g + 0.5 * (3.0 * g).powi(2);
    assert!((q - 1.0).abs() < 1e-12);
    assert!(!s.membership(&[0.5, -0.1, 0.0], DEFAULT_TOL).unwrap());
    assert!(matches!(s.membership(&[0.0; 2], DEFAULT_TOL), Err(Error::DimensionMismatch { .. })));
}

#[test]
fn every_family_contains_unit_vectors_and_lives_in_the_box() {
    for m in [3, 5, 8] {
        for set in zoo(m) {
            for i in 0..m {
                if matches!(set.family(), Family::ScaledSpi { .. }) {
                    continue;
                }
                assert!(set.membership(&e(m, i), 1e-9).unwrap(), "{set:?} misses e_{i}");
            }
            for h in set.sample(50, 3) {
                let top = if let Family::ScaledSpi { lambda, .. } = set.family() {
                    lambda.iter().cloned().fold(0.0, f64::max)
                } else {
                    1.0
                };
                assert!(h.iter().all(|v| *v >= 0.0 && *v <= top + 1e-9));
            }
        }
    }
}

#[test]
fn generalized_budget_completion_accepts_dominated_points() {
    let set = UncertaintySet::generalized_budget(4, 2.0).unwrap();
    // (1,1,1,1): sum 4 ≤ 1 + 2·2 = 5, in the set
    assert!(set.membership(&[1.0; 4], 1e-9).unwrap());
    // (1,1,1,0): sum 3 > 1 + 2·(0+1) = 3? equal, in the set
    assert!(set.membership(&[1.0, 1.0, 1.0, 0.0], 1e-9).unwrap());
    // (1,1,0,0): sum 2 > 1 + 0, not in U but dominated by (1,1,1,1)
    assert!(!set.contains_core(&[1.0, 1.0, 0.0, 0.0], 1e-9));
    assert!(set.membership(&[1.0, 1.0, 0.0, 0.0], 1e-9).unwrap());
    assert!(!set.membership(&[1.2, 0.0, 0.0, 0.0], 1e-9).unwrap());
}

#[test]
fn hull_membership_uses_the_completion() {
    let set = UncertaintySet::explicit_conv_hull(vec![vec![1.0, 1.0, 0.0], vec![0.0, 0.5, 1.0]]).unwrap();
    assert!(set.membership(&[0.5, 0.75, 0.5], 1e-9).unwrap());
    assert!(set.membership(&[0.2, 0.1, 0.0], 1e-9).unwrap());
    assert!(!set.membership(&[1.0, 1.0, 0.1], 1e-9).unwrap());
    let nu = UncertaintySet::permuted_nu_hull(4, 2, 0.5).unwrap();
    assert!(nu.membership(&[0.5, 0.5, 0.0, 0.0], 1e-9).unwrap());
    assert!(nu.membership(&[0.25, 0.25, 0.25, 0.25], 1e-9).unwrap());
    assert!(!nu.membership(&[0.5, 0.5, 0.5, 0.0], 1e-9).unwrap());
    assert!(!nu.membership(&[0.6, 0.6, 0.0, 0.0], 1e-9).unwrap());
}

#[test]
fn support_examples() {
    let s = UncertaintySet::p_norm_ball(4, 2.0, 1.0).unwrap();
    let r = s.support(&e(4, 0)).unwrap();
    assert!(close(r.value, 1.0, 1e-12));
    assert_eq!(r.argmax, e(4, 0));
    let r = s.support(&[1.0; 4]).unwrap();
    assert!(close(r.value, 2.0, 1e-12));
    assert!(r.argmax.iter().all(|v| close(*v, 0.5, 1e-12)));
    let b = UncertaintySet::budget(5, 2.5).unwrap();
    let r = b.support(&[0.3, -1.0, 0.9, 0.4, 0.1]).unwrap();
    assert_eq!(r.argmax, vec![0.5, 0.0, 1.0, 1.0, 0.0]);
}

/// Solve a square system by Cramer-free Gauss-Jordan; `None` if singular.
fn gauss(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap())?;
        if a[p][c].abs() < 1e-11 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Brute-force max of `w·h` over `{0 ≤ h ≤ 1, alpha h ≤ 1}`.
fn brute_budget_intersection(alpha: &[Vec<f64>], w: &[f64]) -> f64 {
    let m = w.len();
    let mut planes: Vec<(Vec<f64>, f64)> = alpha.iter().map(|r| (r.clone(), 1.0)).collect();
    for i in 0..m {
        planes.push((e(m, i), 1.0));
        planes.push((e(m, i).iter().map(|v| -v).collect(), 0.0));
    }
    let mut best = f64::NEG_INFINITY;
    let k = planes.len();
    let mut pick: Vec<usize> = (0..m).collect();
    loop {
        let a = pick.iter().map(|&i| planes[i].0.clone()).collect();
        let b = pick.iter().map(|&i| planes[i].1).collect();
        if let Some(x) = gauss(a, b) {
            if planes.iter().all(|(r, rhs)| r.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() <= rhs + 1e-9) {
                best = best.max(w.iter().zip(&x).map(|(p, q)| p * q).sum());
            }
        }
        let mut i = m;
        while i > 0 && pick[i - 1] == k - m + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return best;
        }
        pick[i - 1] += 1;
        for j in i..m {
            pick[j] = pick[j - 1] + 1;
        }
    }
}

#[test]
fn budget_intersection_support_matches_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let alpha: Vec<Vec<f64>> = (0..2).map(|_| (0..6).map(|_| rng.gen_range(0.0..0.8)).collect()).collect();
        let w: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let set = UncertaintySet::budget_intersection(alpha.clone()).unwrap();
        let got = set.support(&w).unwrap();
        let want = brute_budget_intersection(&alpha, &w);
        assert!((got.value - want).abs() < 1e-8, "{} vs {}", got.value, want);
        assert!(set.membership(&got.argmax, 1e-7).unwrap());
    }
}

/// Max of `w·h` over the set in two dimensions: scan boundary rays, then
/// refine around the best angle by ternary search.
fn scan_2d(set: &UncertaintySet, w: &[f64]) -> f64 {
    let along = |phi: f64| -> f64 {
        let d = [phi.cos(), phi.sin()];
        let (mut lo, mut hi) = (0.0, 2.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if set.contains_core(&[d[0] * mid, d[1] * mid], 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo * (w[0] * d[0] + w[1] * d[1])
    };
    let steps = 4000;
    let dphi = std::f64::consts::FRAC_PI_2 / steps as f64;
    let (mut best, mut at) = (0.0_f64, 0.0);
    for k in 0..=steps {
        let v = along(k as f64 * dphi);
        if v > best {
            best = v;
            at = k as f64 * dphi;
        }
    }
    let (mut a, mut b) = ((at - dphi).max(0.0), (at + dphi).min(std::f64::consts::FRAC_PI_2));
    for _ in 0..100 {
        let (x, y) = (a + (b - a) / 3.0, b - (b - a) / 3.0);
        if along(x) < along(y) {
            a = x;
        } else {
            b = y;
        }
    }
    best.max(along(0.5 * (a + b)))
}

#[test]
fn conic_supports_match_a_boundary_scan_in_the_plane() {
    let sets = [
        UncertaintySet::pi_ellipsoid(2, 0.35).unwrap(),
        UncertaintySet::pi_ellipsoid(2, 0.9).unwrap(),
        UncertaintySet::two_norm_balls(2, 3.0, 1.5, 1.1).unwrap(),
        UncertaintySet::two_norm_balls(2, 2.0, 1.0, 1.2).unwrap(),
        UncertaintySet::p_norm_ball(2, 1.5, 1.0).unwrap(),
    ];
    for set in &sets {
        for w in [[1.0, 0.3], [0.7, 0.7], [0.2, 1.0], [1.0, -0.5]] {
            let got = set.support(&w).unwrap();
            let want = scan_2d(set, &w);
            assert!((got.value - want).abs() < 1e-6, "{set:?} {w:?}: {} vs {}", got.value, want);
            assert!(set.membership(&got.argmax, 1e-7).unwrap());
        }
    }
}

#[test]
fn ellipsoid_support_in_higher_dimension_beats_every_sample() {
    let set = UncertaintySet::pi_ellipsoid(6, 0.4).unwrap();
    let w = [0.9, 0.1, -0.3, 0.5, 0.45, 0.0];
    let best = set.support(&w).unwrap();
    assert!(set.membership(&best.argmax, 1e-9).unwrap());
    for h in set.sample(2000, 8) {
        assert!(dot(&w, &h) <= best.value + 1e-12);
    }
}

#[test]
fn gamma_examples_and_oracle_agreement() {
    let s = UncertaintySet::p_norm_ball(9, 2.0, 1.0).unwrap();
    assert!(close(s.gamma(4).unwrap(), 0.5, 1e-12));
    let b = UncertaintySet::budget(5, 3.0).unwrap();
    assert_eq!(b.gamma(2).unwrap(), 1.0);
    let ell = UncertaintySet::pi_ellipsoid(7, 0.0).unwrap();
    for k in 1..=7 {
        assert!(close(ell.gamma(k).unwrap(), 1.0 / (k as f64).sqrt(), 1e-12));
    }
    for set in zoo(7).into_iter().filter(|s| s.is_permutation_invariant()) {
        for k in 1..=7 {
            let a = set.gamma(k).unwrap();
            let b = set.gamma_oracle(k).unwrap();
            assert!((a - b).abs() <= 1e-9, "{set:?} k={k}: {a} vs {b}");
        }
    }
    let scaled = &zoo(4)[6];
    assert!(matches!(scaled.gamma(1), Err(Error::NotPermutationInvariant)));
    assert!(s.gamma(0).is_err());
}

#[test]
fn vertex_examples() {
    let v = UncertaintySet::budget(3, 1.0).unwrap().vertices().unwrap();
    assert_eq!(v, vec![vec![0.0; 3], e(3, 0), e(3, 1), e(3, 2)]);
    let nu = UncertaintySet::permuted_nu_hull(4, 2, 0.5).unwrap().vertices().unwrap();
    assert_eq!(nu.len(), 11);
    assert_eq!(nu.iter().filter(|v| v.iter().filter(|x| **x == 0.5).count() == 2).count(), 6);
    let boxed = UncertaintySet::explicit_polytope(vec![e(2, 0), e(2, 1)], vec![1.0, 1.0]).unwrap();
    let mut vs = boxed.vertices().unwrap();
    vs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(vs, vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]]);
    assert!(matches!(UncertaintySet::hypersphere(3).unwrap().vertices(), Err(Error::VerticesUnavailable)));
    assert!(matches!(UncertaintySet::budget(3, 1.5).unwrap().vertices(), Err(Error::VerticesUnavailable)));
    assert!(matches!(UncertaintySet::budget(40, 20.0).unwrap().vertices(), Err(Error::CombinatorialBlowup { .. })));
}

#[test]
fn sampling_is_deterministic_and_feasible() {
    let s = UncertaintySet::hypersphere(5).unwrap();
    let a = s.sample(1000, 4);
    assert_eq!(a, s.sample(1000, 4));
    assert_ne!(a, s.sample(1000, 5));
    assert!(a.iter().all(|h| s.membership(h, 1e-9).unwrap()));
    for set in zoo(6) {
        let h = set.sample(1, 0);
        assert!(set.membership(&h[0], 1e-9).unwrap());
        let small = vec![1.0 / 6.0 / 6.0; 6];
        assert!(set.membership(&small, 1e-9).unwrap(), "{set:?}");
    }
}

#[test]
fn unwrap_scaled_examples() {
    let inst = Instance::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![vec![1.0, 0.2], vec![0.3, 1.0]], vec![1.0; 2], vec![1.0; 2])
        .unwrap();
    let set = UncertaintySet::scaled_spi(vec![1.0, 1.0], UncertaintySet::hypersphere(2).unwrap()).unwrap();
    let (same, inner) = set.unwrap_scaled(&inst).unwrap();
    assert_eq!(same, inst);
    assert_eq!(inner, UncertaintySet::hypersphere(2).unwrap());
    let ell = UncertaintySet::weighted_ellipsoid(&[4.0, 0.25]).unwrap();
    let (_, inner) = ell.unwrap_scaled(&inst).unwrap();
    assert_eq!(inner, UncertaintySet::hypersphere(2).unwrap());
    assert!(ell.membership(&[0.5, 0.0], 1e-12).unwrap());
    assert!(ell.membership(&[0.0, 2.0], 1e-12).unwrap());
    assert!(!ell.membership(&[0.5, 0.1], 1e-12).unwrap());
    assert!(matches!(
        UncertaintySet::scaled_spi(vec![1.0, 0.0], UncertaintySet::hypersphere(2).unwrap()),
        Err(Error::NonPositiveScale)
    ));
}

#[test]
fn json_round_trip_for_every_family() {
    for set in zoo(5) {
        let back = UncertaintySet::from_json(&set.to_json()).unwrap();
        assert_eq!(back, set);
    }
    let g = UncertaintySet::from_json(r#"{"family":"generalized_budget","m":11,"params":{}}"#).unwrap();
    assert_eq!(g.family(), &Family::GeneralizedBudget { theta: 4.0 });
    let h = UncertaintySet::from_json(r#"{"family":"hypersphere","m":4}"#).unwrap();
    assert_eq!(h, UncertaintySet::hypersphere(4).unwrap());
    assert!(UncertaintySet::from_json(r#"{"family":"nope","m":4,"params":{}}"#).is_err());
    assert!(UncertaintySet::from_json(r#"{"family":"budget","m":4,"params":{}}"#).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn down_monotone_and_support_dominates(seed in any::<u64>(), m in 3usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for set in zoo(m) {
            let w: Vec<f64> = (0..m).map(|_| rng.gen_range(-0.5..1.0)).collect();
            let best = set.support(&w).unwrap();
            prop_assert!(set.membership(&best.argmax, 1e-7).unwrap());
            prop_assert!((dot(&w, &best.argmax) - best.value).abs() <= 1e-8 * (1.0 + best.value.abs()));
            for h in set.sample(30, rng.gen()) {
                prop_assert!(set.membership(&h, 1e-9).unwrap());
                let lower: Vec<f64> = h.iter().map(|v| v * rng.gen::<f64>()).collect();
                prop_assert!(set.membership(&lower, 1e-9).unwrap());
                prop_assert!(dot(&w, &h) <= best.value + 1e-9);
            }
        }
    }

    #[test]
    fn gamma_points_are_members_and_gamma_is_nonincreasing(m in 2usize..12) {
        for set in zoo(m).into_iter().filter(|s| s.is_permutation_invariant()) {
            let mut prev = f64::INFINITY;
            for k in 1..=m {
                let g = set.gamma(k).unwrap();
                let mut h = vec![0.0; m];
                h[..k].iter_mut().for_each(|v| *v = g);
                prop_assert!(set.membership(&h, 1e-9).unwrap(), "{:?} k={}", set, k);
                prop_assert!(g <= prev + 1e-12);
                prev = g;
            }
        }
    }
}
