//! Property tests against brute-force oracles.

use proptest::prelude::*;
use taxons::archive::{novelty, novelty_scores, select_and_replace};
use taxons::envs::Bounds;
use taxons::metrics::{coverage, coverage_curve};
use taxons::stats::{holm_bonferroni, mann_whitney_normal, mann_whitney_u};

fn oracle_novelty(x: &[f64], refs: &[Vec<f64>], k: usize) -> f64 {
    let mut d: Vec<f64> = refs
        .iter()
        .map(|r| r.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
        .collect();
    if d.is_empty() {
        return 0.0;
    }
    d.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k = k.min(d.len());
    d[..k].iter().sum::<f64>() / k as f64
}

/// Cells are half-open `[lo, hi)` except that the last row and column also hold the upper edge.
fn oracle_coverage(points: &[(f64, f64)], b: Bounds, res: usize) -> f64 {
    let w = (b.x_max - b.x_min) / res as f64;
    let h = (b.y_max - b.y_min) / res as f64;
    let inside = |v: f64, lo: f64, hi: f64, last: bool| (v >= lo && v < hi) || (last && v == hi);
    let mut occupied = 0;
    for c in 0..res {
        for r in 0..res {
            let (x0, y0) = (b.x_min + c as f64 * w, b.y_min + r as f64 * h);
            if points
                .iter()
                .any(|&(x, y)| inside(x, x0, x0 + w, c == res - 1) && inside(y, y0, y0 + h, r == res - 1))
            {
                occupied += 1;
            }
        }
    }
    100.0 * occupied as f64 / (res * res) as f64
}

fn descriptor_set(dim: usize, max: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-10.0..10.0f64, dim), 1..max)
}

proptest! {
    #[test]
    fn novelty_matches_sorted_oracle(points in descriptor_set(3, 40), k in 1usize..20) {
        let refs: Vec<&[f64]> = points.iter().map(Vec::as_slice).collect();
        for x in &points {
            let got = novelty(x, refs.iter().copied(), k).unwrap();
            let want = oracle_novelty(x, &points, k);
            prop_assert!((got - want).abs() <= 1e-9 * want.max(1.0));
        }
    }

    #[test]
    fn population_novelty_excludes_self(pop in descriptor_set(2, 12), arc in descriptor_set(2, 12), k in 1usize..6) {
        let p: Vec<&[f64]> = pop.iter().map(Vec::as_slice).collect();
        let a: Vec<&[f64]> = arc.iter().map(Vec::as_slice).collect();
        let scores = novelty_scores(&p, &a, k).unwrap();
        for (i, x) in pop.iter().enumerate() {
            let mut refs: Vec<Vec<f64>> = pop.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, v)| v.clone()).collect();
            refs.extend(arc.iter().cloned());
            let want = oracle_novelty(x, &refs, k);
            prop_assert!((scores[i] - want).abs() <= 1e-9 * want.max(1.0));
        }
    }

    #[test]
    fn novelty_is_non_negative_and_zero_for_duplicates(x in prop::collection::vec(-5.0..5.0f64, 4), n in 1usize..10, k in 1usize..10) {
        let refs = vec![x.clone(); n];
        let v = novelty(&x, refs.iter().map(Vec::as_slice), k).unwrap();
        prop_assert_eq!(v, 0.0);
    }

    #[test]
    fn selection_is_stable_and_puts_non_finite_last(
        scores in prop::collection::vec(prop_oneof![
            4 => (0u8..5).prop_map(f64::from),
            1 => Just(f64::NEG_INFINITY),
            1 => Just(f64::NAN),
        ], 2..30),
        q_frac in 0.0..1.0f64,
    ) {
        let q = 1 + ((scores.len() / 2 - 1) as f64 * q_frac) as usize;
        let sel = select_and_replace(&scores, q).unwrap();
        // oracle: stable sort on (non-finite, -score)
        let mut want: Vec<usize> = (0..scores.len()).collect();
        want.sort_by(|&a, &b| {
            let ka = (!scores[a].is_finite(), if scores[a].is_finite() { -scores[a] } else { 0.0 });
            let kb = (!scores[b].is_finite(), if scores[b].is_finite() { -scores[b] } else { 0.0 });
            ka.partial_cmp(&kb).unwrap()
        });
        prop_assert_eq!(&sel.ranking, &want);
        prop_assert_eq!(&sel.best[..], &want[..q]);
        prop_assert_eq!(&sel.replaced[..], &want[scores.len() - q..]);
        for (&w, &b) in sel.replaced.iter().zip(&sel.best) {
            prop_assert_eq!(sel.next[w], b);
        }
    }

    #[test]
    fn coverage_matches_cell_enumeration(
        points in prop::collection::vec((0.0..=10.0f64, -2.0..=4.0f64), 0..60),
        res in 1usize..30,
    ) {
        let b = Bounds::new(0.0, 10.0, -2.0, 4.0);
        let got = coverage(&points, b, res).unwrap();
        prop_assert!((got - oracle_coverage(&points, b, res)).abs() < 1e-12);
        prop_assert!((0.0..=100.0).contains(&got));
    }

    #[test]
    fn coverage_curve_is_monotone(batches in prop::collection::vec(prop::collection::vec((0.0..10.0f64, 0.0..10.0f64), 0..10), 1..12)) {
        let b = Bounds::new(0.0, 10.0, 0.0, 10.0);
        let curve = coverage_curve(&batches, b, 50).unwrap();
        let mut all = Vec::new();
        for w in curve.windows(2) {
            prop_assert!(w[1].coverage >= w[0].coverage);
        }
        for (p, batch) in curve.iter().zip(&batches) {
            all.extend(batch.iter().copied());
            prop_assert_eq!(p.archive_size, all.len());
            prop_assert!((p.coverage - coverage(&all, b, 50).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn u_statistics_sum_to_product(a in prop::collection::vec(0u8..20, 1..15), b in prop::collection::vec(0u8..20, 1..15)) {
        let a: Vec<f64> = a.into_iter().map(f64::from).collect();
        let b: Vec<f64> = b.into_iter().map(f64::from).collect();
        let ab = mann_whitney_u(&a, &b).unwrap();
        let ba = mann_whitney_u(&b, &a).unwrap();
        let prod = (a.len() * b.len()) as f64;
        prop_assert_eq!(ab.u + ba.u, prod);
        prop_assert_eq!(ab.u_other(), ba.u);
        prop_assert!((0.0..=prod).contains(&ab.u));
        prop_assert!(ab.p > 0.0 && ab.p <= 1.0);
        prop_assert!((ab.p - ba.p).abs() < 1e-12);
    }

    #[test]
    fn exact_and_normal_agree_at_eight_vs_eight(values in prop::collection::hash_set(0u32..10_000, 16)) {
        let v: Vec<f64> = values.into_iter().map(f64::from).collect();
        let (a, b) = v.split_at(8);
        let exact = mann_whitney_u(a, b).unwrap();
        let normal = mann_whitney_normal(a, b).unwrap();
        prop_assert!(exact.exact && !normal.exact);
        prop_assert_eq!(exact.u, normal.u);
        prop_assert!((exact.p - normal.p).abs() <= 0.02, "exact {} normal {}", exact.p, normal.p);
    }

    #[test]
    fn holm_is_monotone_in_alpha(p in prop::collection::vec(1e-6..1.0f64, 1..10), a1 in 0.001..0.5f64, a2 in 0.001..0.5f64) {
        let (lo, hi) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
        let r_lo = holm_bonferroni(&p, lo).unwrap();
        let r_hi = holm_bonferroni(&p, hi).unwrap();
        for (x, y) in r_lo.reject.iter().zip(&r_hi.reject) {
            prop_assert!(!x || *y);
        }
        prop_assert_eq!(r_lo.adjusted, r_hi.adjusted);
    }

    #[test]
    fn holm_tracks_hypotheses_under_permutation(p in prop::collection::vec(1e-4..0.2f64, 2..9), alpha in 0.01..0.2f64, seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut perm: Vec<usize> = (0..p.len()).collect();
        perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let permuted: Vec<f64> = perm.iter().map(|&i| p[i]).collect();
        let base = holm_bonferroni(&p, alpha).unwrap();
        let moved = holm_bonferroni(&permuted, alpha).unwrap();
        for (pos, &i) in perm.iter().enumerate() {
            prop_assert_eq!(moved.reject[pos], base.reject[i]);
            prop_assert_eq!(moved.adjusted[pos], base.adjusted[i]);
        }
    }

    #[test]
    fn holm_matches_step_down_oracle(p in prop::collection::vec(1e-4..1.0f64, 1..9), alpha in 0.01..0.3f64) {
        let m = p.len();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| p[a].partial_cmp(&p[b]).unwrap());
        let mut reject = vec![false; m];
        for (i, &h) in order.iter().enumerate() {
            if p[h] <= alpha / (m - i) as f64 { reject[h] = true } else { break }
        }
        prop_assert_eq!(holm_bonferroni(&p, alpha).unwrap().reject, reject);
    }
}
