use proptest::prelude::*;

use sglig::eval::{make_splits, SplitScheme};
use sglig::io::{read_graph_csv, write_graph_csv};
use sglig::prox::{
    active_groups, project_group_two_stage, project_intersection, project_l2, project_linf, prox_regularizer,
    GroupRadii, ProjectorKind,
};
use sglig::UndirectedGraph;

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn vector(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0..5.0f64, len)
}

fn vectors() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..8).prop_flat_map(|d| (vector(d), vector(d)))
}

/// Random group structure on `p ≤ 12` nodes with at most five groups.
fn group_instance() -> impl Strategy<Value = (Vec<f64>, GroupRadii)> {
    (2usize..=12).prop_flat_map(|p| {
        let groups = prop::collection::vec(prop::collection::btree_set(0..p, 1..=p.min(5)), 1..=5);
        let h = vector(p);
        (Just(p), groups, h, prop::collection::vec((0.2..3.0f64, prop::option::of(0.2..2.0f64)), 5))
    })
    .prop_map(|(p, groups, h, radii)| {
        let groups: Vec<Vec<usize>> = groups.into_iter().map(|g| g.into_iter().collect()).collect();
        let m = groups.len();
        let tau = radii[..m].iter().map(|r| r.0).collect();
        let xi = radii[..m].iter().map(|r| r.1.unwrap_or(f64::INFINITY)).collect();
        (h, GroupRadii::new(p, groups, tau, xi).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn single_ball_projections_are_optimal(
        (v, w) in vectors(),
        radius in 0.0..6.0f64,
    ) {
        let linf = project_linf(&v, radius);
        let w_box = project_linf(&w, radius);
        prop_assert!(dist2(&linf, &v) <= dist2(&w_box, &v) + 1e-12);

        let l2 = project_l2(&v, radius);
        let w_ball = project_l2(&w, radius);
        prop_assert!(norm(&l2) <= radius * (1.0 + 1e-12));
        prop_assert!(dist2(&l2, &v) <= dist2(&w_ball, &v) + 1e-12);
    }
}

proptest! {
    #[test]
    fn projections_are_idempotent((v, _) in vectors(), tau in 0.0..6.0f64, xi in 0.0..4.0f64) {
        let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12);
        let once = project_linf(&v, xi);
        prop_assert!(close(&project_linf(&once, xi), &once));
        let once = project_l2(&v, tau);
        prop_assert!(close(&project_l2(&once, tau), &once));
        let once = project_group_two_stage(&v, tau, xi);
        prop_assert!(close(&project_group_two_stage(&once, tau, xi), &once));
    }

    #[test]
    fn projections_are_nonexpansive((u, v) in vectors(), tau in 0.0..6.0f64, xi in 0.0..4.0f64) {
        let d = dist2(&u, &v).sqrt();
        prop_assert!(dist2(&project_linf(&u, xi), &project_linf(&v, xi)).sqrt() <= d + 1e-12);
        prop_assert!(dist2(&project_l2(&u, tau), &project_l2(&v, tau)).sqrt() <= d + 1e-12);
    }

    #[test]
    fn two_stage_lands_in_both_balls((v, _) in vectors(), tau in 0.0..6.0f64, xi in 0.0..4.0f64) {
        let out = project_group_two_stage(&v, tau, xi);
        prop_assert!(norm(&out) <= tau * (1.0 + 1e-12));
        prop_assert!(out.iter().all(|x| x.abs() <= xi));
    }

    #[test]
    fn pocs_output_is_feasible((h, radii) in group_instance()) {
        let active = active_groups(&h, &radii);
        let x = project_intersection(&h, &radii, &active, &ProjectorKind::pocs()).unwrap();
        let all: Vec<usize> = (0..radii.n_groups()).collect();
        prop_assert!(radii.infeasibility(&x, &all) <= 1e-9);
    }

    #[test]
    fn dykstra_restricted_to_active_groups_agrees((h, radii) in group_instance()) {
        let dykstra = ProjectorKind::dykstra();
        let all: Vec<usize> = (0..radii.n_groups()).collect();
        let full = project_intersection(&h, &radii, &all, &dykstra).unwrap();
        let active = active_groups(&h, &radii);
        let reduced = project_intersection(&h, &radii, &active, &dykstra).unwrap();
        prop_assert!(radii.infeasibility(&full, &all) <= 1e-9);
        for (a, b) in full.iter().zip(&reduced) {
            prop_assert!((a - b).abs() <= 1e-8);
        }
    }

    #[test]
    fn prox_plus_projection_is_identity((h, radii) in group_instance()) {
        let projector = ProjectorKind::pocs();
        let out = prox_regularizer(&h, &radii, &projector).unwrap();
        let direct = project_intersection(&h, &radii, &out.active, &projector).unwrap();
        for j in 0..h.len() {
            prop_assert!((out.beta[j] + out.projection[j] - h[j]).abs() <= 1e-15 * h[j].abs().max(1.0));
            let expected = if radii.is_covered(j) { direct[j] } else { 0.0 };
            prop_assert_eq!(out.projection[j], expected);
        }
    }

    #[test]
    fn fixed_splits_are_disjoint(n in 3usize..200, a in 1usize..60, b in 1usize..60, c in 1usize..60, seed: u64) {
        let scheme = SplitScheme::FixedCounts { n_train: a, n_val: b, n_test: c, seed };
        match make_splits(n, &scheme) {
            Err(_) => prop_assert!(a + b + c > n),
            Ok(splits) => {
                let s = &splits[0];
                prop_assert_eq!((s.train.len(), s.val.len(), s.test.len()), (a, b, c));
                let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
                all.sort_unstable();
                all.dedup();
                prop_assert_eq!(all.len(), a + b + c);
                prop_assert!(all.iter().all(|&r| r < n));
            }
        }
    }

    #[test]
    fn permutation_splits_cover_every_row(n in 10usize..120, k in 3usize..10, seed: u64) {
        let splits = make_splits(n, &SplitScheme::PermutationSegments { segments: k, seed }).unwrap();
        prop_assert_eq!(splits.len(), k * (k - 1));
        for s in &splits {
            let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            prop_assert!(s.val.len().abs_diff(s.test.len()) <= 1);
        }
    }

    #[test]
    fn graph_csv_round_trip(p in 1usize..25, raw in prop::collection::vec((0usize..25, 0usize..25), 0..60)) {
        let edges: Vec<(usize, usize)> = raw.into_iter().map(|(i, j)| (i % p, j % p)).filter(|(i, j)| i != j).collect();
        let g = UndirectedGraph::from_edges(p, edges).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        write_graph_csv(&path, &g).unwrap();
        prop_assert_eq!(read_graph_csv(&path, p).unwrap(), g);
    }
}
