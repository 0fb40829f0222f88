mod common;

use common::{brute_vertices, feasible, Law};
use ifnetlab::boundsgen::{enumerate_bound_templates, BoundMode};
use ifnetlab::infocalc::{JointPmf, Var};
use ifnetlab::netmodel::NetworkTopology;
use ifnetlab::ratepoly::lp::LpOutcome;
use ifnetlab::ratepoly::{region_compare, CompareVerdict, RatePolytope, RegionEstimate};
use proptest::prelude::*;

fn pmf_strategy() -> impl Strategy<Value = JointPmf> {
    (2usize..=3, 2usize..=3, 1usize..=2)
        .prop_flat_map(|(a, b, c)| {
            let n = a * b * c;
            (Just((a, b, c)), prop::collection::vec(0.0f64..1.0, n))
        })
        .prop_map(|((a, b, c), w)| {
            let total: f64 = w.iter().sum::<f64>() + 1e-9;
            let table: Vec<f64> = w.iter().map(|x| (x + 1e-9 / w.len() as f64) / total).collect();
            JointPmf::new(vec![Var::new("A", a), Var::new("B", b), Var::new("C", c)], table).unwrap()
        })
}

/// Bounded polytope in `dim` coordinates: a box plus random nonnegative rows.
fn polytope_strategy(dim: usize) -> impl Strategy<Value = RatePolytope> {
    (
        prop::collection::vec(0.5f64..3.0, dim),
        prop::collection::vec((prop::collection::vec(0.0f64..1.0, dim), 0.2f64..2.0), 0..5),
    )
        .prop_map(move |(caps, extra)| {
            let names: Vec<String> = (1..=dim).map(|i| format!("R{i}")).collect();
            let mut p = RatePolytope::new(&names);
            for (i, c) in caps.iter().enumerate() {
                let mut e = vec![0.0; dim];
                e[i] = 1.0;
                p.add_row(e, *c).unwrap();
            }
            for (coeffs, b) in extra {
                p.add_row(coeffs, b).unwrap();
            }
            p
        })
}

fn lp_value(p: &RatePolytope, dir: &[f64]) -> f64 {
    match p.lp_max(dir) {
        LpOutcome::Optimal { value, .. } => value,
        other => panic!("unexpected LP outcome {other:?}"),
    }
}

fn topology_strategy() -> impl Strategy<Value = NetworkTopology> {
    let msgs = ["M1", "M2", "M3"];
    (2usize..=3, 2usize..=3, prop::collection::vec(1u8..8, 6), prop::collection::vec(1u8..8, 3))
        .prop_map(move |(k1, k2, txm, rxm)| {
            let pick = |mask: u8| -> Vec<&'static str> {
                (0..3).filter(|b| mask & (1 << b) != 0).map(|b| msgs[b]).collect()
            };
            let mut tx: Vec<Vec<&str>> = (0..k1).map(|i| pick(txm[i])).collect();
            // every message needs a sender
            for m in msgs {
                if !tx.iter().any(|s| s.contains(&m)) {
                    tx[0].push(m);
                }
            }
            let rx: Vec<Vec<&str>> = (0..k2).map(|j| pick(rxm[j])).collect();
            (tx, rx)
        })
        .prop_filter_map("invalid topology", |(tx, rx)| {
            let tx_refs: Vec<&[&str]> = tx.iter().map(|v| v.as_slice()).collect();
            let rx_refs: Vec<&[&str]> = rx.iter().map(|v| v.as_slice()).collect();
            let adjacency = vec![vec![true; tx.len()]; rx.len()];
            NetworkTopology::from_lists(&tx_refs, &rx_refs, adjacency).ok()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mutual_information_matches_reference(p in pmf_strategy()) {
        let law = Law::from_pmf(&p);
        for (a, b, c) in [("A", "B", "C"), ("A", "C", "B"), ("A,B", "C", ""), ("B", "A", "")] {
            let split = |s: &str| s.split(',').filter(|x| !x.is_empty()).map(String::from).collect::<Vec<_>>();
            let ours = p.conditional_mutual_information(&split(a), &split(b), &split(c)).unwrap();
            let reference = law.mi(a, b, c);
            prop_assert!((ours - reference).abs() < 1e-10, "{a};{b}|{c}: {ours} vs {reference}");
            prop_assert!(ours >= -1e-12);
        }
    }

    #[test]
    fn chain_rule(p in pmf_strategy()) {
        let joint = p.conditional_mutual_information(&["A"], &["B", "C"], &[] as &[&str]).unwrap();
        let first = p.conditional_mutual_information(&["A"], &["B"], &[] as &[&str]).unwrap();
        let second = p.conditional_mutual_information(&["A"], &["C"], &["B"]).unwrap();
        prop_assert!((joint - first - second).abs() < 1e-10);
    }

    #[test]
    fn elimination_preserves_projected_support(
        p in polytope_strategy(3),
        dir in prop::collection::vec(0.0f64..1.0, 2),
    ) {
        let projected = p.fourier_motzkin_eliminate(&["R3"]).unwrap();
        prop_assert_eq!(&projected.variables, &vec!["R1".to_string(), "R2".to_string()]);
        let lifted = lp_value(&p, &[dir[0], dir[1], 0.0]);
        let reduced = lp_value(&projected, &dir);
        prop_assert!((lifted - reduced).abs() < 1e-8, "{lifted} vs {reduced}");
        for v in brute_vertices(&p) {
            prop_assert!(projected.contains(&v[..2], 1e-8).unwrap());
        }
    }

    #[test]
    fn redundancy_removal_keeps_the_set(p in polytope_strategy(3)) {
        let slim = p.remove_redundant();
        prop_assert!(slim.rows.len() <= p.rows.len());
        let a = brute_vertices(&p);
        let b = brute_vertices(&slim);
        prop_assert!(common::same_points(&a, &b, 1e-8));
        for v in &b {
            prop_assert!(feasible(&p, v, 1e-8));
        }
    }

    #[test]
    fn support_estimate_matches_lp(p in polytope_strategy(3)) {
        let est = RegionEstimate::from_polytope(&p).unwrap();
        for (d, s) in est.directions.iter().zip(&est.support) {
            prop_assert!((lp_value(&p, d) - s).abs() < 1e-8);
        }
        let self_cmp = region_compare(&est, &est, 1e-12).unwrap();
        prop_assert_eq!(self_cmp.verdict, CompareVerdict::Equal);
    }

    #[test]
    fn union_estimate_dominates_members(a in polytope_strategy(2), b in polytope_strategy(2)) {
        let ea = RegionEstimate::from_polytope(&a).unwrap();
        let eb = RegionEstimate::from_polytope(&b).unwrap();
        let both = ea.clone().merge(eb.clone()).unwrap();
        let swapped = eb.clone().merge(ea.clone()).unwrap();
        prop_assert_eq!(&both.support, &swapped.support);
        let cmp = region_compare(&ea, &both, 1e-12).unwrap();
        prop_assert!(matches!(cmp.verdict, CompareVerdict::Equal | CompareVerdict::ASubset));
    }

    #[test]
    fn bound_templates_respect_slot_rules(topo in topology_strategy()) {
        for mode in [BoundMode::TwoRx, BoundMode::MultiRx] {
            let Ok(list) = enumerate_bound_templates(&topo, 2, mode) else { continue };
            for t in &list {
                prop_assert!(t.check_disjoint(&topo).is_ok(), "{:?}", t.check_disjoint(&topo));
                let lhs = t.lhs_rates();
                prop_assert!(!lhs.is_empty());
            }
        }
    }
}
