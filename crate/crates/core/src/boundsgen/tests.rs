use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::infocalc::{dirichlet_uniform, JointPmf, Var};
use crate::netmodel::DiscreteChannel;

fn random_channel(tx: &[&[&str]], rx: &[&[&str]], ins: Vec<usize>, outs: Vec<usize>, seed: u64) -> DiscreteChannel {
    let n: usize = outs.iter().product();
    let rows: Vec<Vec<f64>> = {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..ins.iter().product::<usize>()).map(|_| dirichlet_uniform(n, &mut rng)).collect()
    };
    let radices = ins.clone();
    DiscreteChannel::from_law(tx, rx, ins, outs, move |x| rows[crate::netmodel::mixed_radix_encode(x, &radices)].clone())
        .unwrap()
}

fn cic_common_channel(seed: u64) -> DiscreteChannel {
    let sets: &[&[&str]] = &[&["M0", "M1"], &["M0", "M2"]];
    random_channel(sets, sets, vec![2, 2], vec![2, 2], seed)
}

fn bccr_channel(seed: u64) -> DiscreteChannel {
    random_channel(&[&["M1"], &["M2"], &["M0", "M1", "M2"]], &[&["M0", "M1"], &["M0", "M2"]], vec![2, 2, 2], vec![2, 2], seed)
}

fn cic3_channel(seed: u64) -> DiscreteChannel {
    let sets: &[&[&str]] = &[&["M1"], &["M2"], &["M3"]];
    random_channel(sets, sets, vec![2, 2, 2], vec![2, 2, 2], seed)
}

fn s(v: &[&str]) -> Vec<String> {
    v.iter().map(|x| x.to_string()).collect()
}

fn h(p: &JointPmf, v: &[&str]) -> f64 {
    p.entropy(v).unwrap()
}

/// `I(A;B|C)` from four joint entropies.
fn cmi(p: &JointPmf, a: &[&str], b: &[&str], c: &[&str]) -> f64 {
    let ac: Vec<&str> = a.iter().chain(c).copied().collect();
    let bc: Vec<&str> = b.iter().chain(c).copied().collect();
    let abc: Vec<&str> = a.iter().chain(b).chain(c).copied().collect();
    h(p, &ac) + h(p, &bc) - h(p, &abc) - h(p, c)
}

#[test]
fn side_information_selection_is_listed() {
    let topo = NetworkTopology::two_user_cic_common();
    let list = enumerate_bound_templates(&topo, 2, BoundMode::TwoRx).unwrap();
    for form in [1u8, 3] {
        let t = BoundTemplate::reduced(&topo, &[1], &[2], form, vec![], s(&["M1"]), vec![], s(&["M2", "M0"])).unwrap();
        assert!(list.iter().any(|e| e.key() == t.key()), "form {form} missing");
    }
    let t = list
        .iter()
        .find(|e| e.form() == Some(1) && e.lhs == s(&["M1"]) && e.side == s(&["M0", "M2"]))
        .expect("listed");
    assert_eq!(t.to_string(), "R1 <= I(Z,M1;Y1|M0,M2,Q)");
}

#[test]
fn single_message_single_receiver() {
    let topo = NetworkTopology::from_lists(&[&["M1"]], &[&["M1"]], vec![vec![true]]).unwrap();
    for mode in [BoundMode::TwoRx, BoundMode::MultiRx] {
        let list = enumerate_bound_templates(&topo, 3, mode).unwrap();
        assert_eq!(list.len(), 1);
        assert_eq!(list[0].to_string(), "R1 <= I(Z,M1;Y1|Q)");
    }
}

#[test]
fn emitted_templates_are_disjoint_and_unique() {
    for (topo, mode) in [
        (NetworkTopology::two_user_cic_common(), BoundMode::TwoRx),
        (NetworkTopology::bccr(true), BoundMode::TwoRx),
        (NetworkTopology::k_user_cic(3, None).unwrap(), BoundMode::MultiRx),
    ] {
        let list = enumerate_bound_templates(&topo, 3, mode).unwrap();
        let mut keys = HashSet::new();
        for t in &list {
            t.check_disjoint(&topo).unwrap();
            assert!(keys.insert(format!("{:?}{:?}{}", t.j1, t.j2, t.key())), "duplicate {t}");
            assert!(!t.lhs.is_empty());
        }
    }
}

#[test]
fn layer_count_is_capped_by_the_demand_sets() {
    let topo = NetworkTopology::two_user_cic_common();
    let a = enumerate_bound_templates(&topo, 2, BoundMode::TwoRx).unwrap();
    let b = enumerate_bound_templates(&topo, 9, BoundMode::TwoRx).unwrap();
    assert_eq!(a.len(), b.len());
    assert!(a.iter().all(|t| t.mu() <= 2));
    assert!(a.iter().any(|t| t.mu() == 2));
    assert!(matches!(enumerate_bound_templates(&topo, 0, BoundMode::TwoRx), Err(Error::Parse(_))));
}

#[test]
fn selection_cap_reports_count() {
    let topo = NetworkTopology::k_user_cic(3, None).unwrap();
    let mut opts = EnumerateOptions::new(2, BoundMode::MultiRx);
    opts.cap = 10;
    let count = selection_count(&topo, &opts).unwrap();
    match enumerate_bound_templates_with(&topo, &opts) {
        Err(Error::TooLarge(n)) => assert_eq!(n as u64, count),
        other => panic!("expected TooLarge, got {other:?}"),
    }
}

#[test]
fn two_rx_mode_needs_two_receivers() {
    let topo = NetworkTopology::k_user_cic(3, None).unwrap();
    assert!(matches!(enumerate_bound_templates(&topo, 1, BoundMode::TwoRx), Err(Error::TopologyMismatch(_))));
}

#[test]
fn layered_select_lines_match_the_four_slot_forms() {
    let topo = NetworkTopology::two_user_cic_common();
    let (c, f, g) = (s(&["M0"]), s(&["M1"]), s(&["M2"]));
    let cases: Vec<(u8, Vec<Vec<String>>, Vec<Vec<String>>)> = vec![
        (3, vec![f.clone()], vec![[c.clone(), g.clone()].concat()]),
        (4, vec![[c.clone(), f.clone()].concat(), vec![]], vec![vec![], g.clone()]),
        (5, vec![c.clone(), f.clone()], vec![vec![], g.clone()]),
        (6, vec![vec![], f.clone(), vec![]], vec![c.clone(), vec![], g.clone()]),
    ];
    let ch = cic_common_channel(5);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (form, first, second) in cases {
        let layered = BoundTemplate::layered(&topo, &[1], &[2], first, second, vec![]).unwrap();
        let reduced = BoundTemplate::reduced(&topo, &[1], &[2], form, c.clone(), f.clone(), g.clone(), vec![]).unwrap();
        assert_eq!(layered.lhs, reduced.lhs);
        for _ in 0..20 {
            let pmf = random_message_pmf(&ch, 2, 3, 2, &mut rng).unwrap();
            let l = evaluate_bound(&layered, &ch, &pmf).unwrap().total;
            let r = evaluate_bound(&reduced, &ch, &pmf).unwrap().total;
            assert!(l <= r + 1e-12, "form {form}: layered {l} exceeds {r}");
        }
    }
}

#[test]
fn degenerate_auxiliary_on_identity_links_gives_plain_information() {
    let sets: &[&[&str]] = &[&["M1"], &["M2"]];
    let ch = DiscreteChannel::deterministic(sets, sets, vec![2, 2], vec![2, 2], |x| x.to_vec()).unwrap();
    let topo = ch.topology.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pmf = random_message_pmf(&ch, 2, 0, 1, &mut rng).unwrap();
    let joint = crate::infocalc::induced_joint(&pmf, &ch).unwrap();
    let t = BoundTemplate::reduced(&topo, &[1], &[2], 1, vec![], s(&["M1"]), vec![], vec![]).unwrap();
    let v = evaluate_bound(&t, &ch, &pmf).unwrap();
    assert!((v.total - cmi(&joint, &["M1"], &["Y1"], &[])).abs() < 1e-12);
    let t = BoundTemplate::reduced(&topo, &[1], &[2], 2, vec![], vec![], s(&["M2"]), s(&["M1"])).unwrap();
    let v = evaluate_bound(&t, &ch, &pmf).unwrap();
    assert!((v.total - cmi(&joint, &["M2"], &["Y2"], &["M1"])).abs() < 1e-12);
}

#[test]
fn tail_vanishes_when_auxiliary_is_independent() {
    let ch = cic_common_channel(8);
    let topo = ch.topology.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let base = random_message_pmf(&ch, 2, 0, 2, &mut rng).unwrap();
    let z = [0.3, 0.7];
    let mut vars = base.vars().to_vec();
    vars.push(Var::new("Z", 2));
    let table: Vec<f64> = base.table().iter().flat_map(|p| z.iter().map(move |w| p * w)).collect();
    let pmf = JointPmf::new(vars, table).unwrap();
    let t = BoundTemplate::layered(&topo, &[1], &[2], vec![s(&["M1"])], vec![s(&["M0", "M2"])], vec![]).unwrap();
    let v = evaluate_bound(&t, &ch, &pmf).unwrap();
    let (a, b) = v.tail.unwrap();
    assert!(a.abs() < 1e-12 && b.abs() < 1e-12);
}

#[test]
fn four_slot_form_matches_direct_assembly() {
    let ch = cic_common_channel(21);
    let topo = ch.topology.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let t = BoundTemplate::reduced(&topo, &[1], &[2], 3, s(&["M0"]), s(&["M1"]), vec![], s(&["M2"])).unwrap();
    for _ in 0..10 {
        let pmf = random_message_pmf(&ch, 2, 3, 2, &mut rng).unwrap();
        let joint = crate::infocalc::induced_joint(&pmf, &ch).unwrap();
        let direct = cmi(&joint, &["M1"], &["Y1"], &["Z", "M0", "M2", "Q"]) + cmi(&joint, &["Z", "M0"], &["Y2"], &["M2", "Q"]);
        let v = evaluate_bound(&t, &ch, &pmf).unwrap().total;
        assert!((v - direct).abs() < 1e-12, "{v} vs {direct}");
    }
}

#[test]
fn registry_replays_match() {
    let outcomes = run_replays(2).unwrap();
    assert_eq!(outcomes.len(), 12 + 20 + 9);
    for o in &outcomes {
        assert!(o.enumerated, "{} not enumerated", o.id);
        assert!(o.matches, "{}: expected {}, got {}", o.id, o.expected, o.obtained);
    }
}

#[test]
fn specialization_only_relaxes() {
    let channels = [("cic-common", cic_common_channel(31)), ("bccr", bccr_channel(32)), ("cic3", cic3_channel(33))];
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for r in replay_registry() {
        let ch = &channels.iter().find(|(n, _)| *n == r.network).unwrap().1;
        let topo = &ch.topology;
        let t = BoundTemplate::reduced(topo, &r.j1, &r.j2, r.form, r.common.clone(), r.first.clone(), r.second.clone(), r.side.clone())
            .unwrap();
        let spec = specialize_bound(&t, topo, &r.identification).unwrap();
        for _ in 0..8 {
            let pmf = random_message_pmf(ch, 2, 3, 2, &mut rng).unwrap();
            let raw = evaluate_bound(&t, ch, &pmf).unwrap().total;
            let relaxed = evaluate_specialized(&spec, ch, &pmf).unwrap();
            assert!(relaxed >= raw - 1e-10, "{}: {relaxed} < {raw}", r.id);
        }
    }
}

#[test]
fn equality_steps_preserve_value() {
    // A specialization with no relaxation step must evaluate exactly equal.
    let ch = cic_common_channel(41);
    let topo = ch.topology.clone();
    let ident = Identification::new(&[("U", &["Z", "M1"]), ("V", &["Z", "M2"]), ("W", &["M0", "Q"])]);
    let t = BoundTemplate::reduced(&topo, &[1], &[2], 3, vec![], s(&["M1"]), s(&["M2"]), s(&["M0"])).unwrap();
    let spec = specialize_bound(&t, &topo, &ident).unwrap();
    assert!(spec.audit.iter().all(|a| a.relation == Relation::Equal), "{:?}", spec.audit);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..10 {
        let pmf = random_message_pmf(&ch, 2, 3, 2, &mut rng).unwrap();
        let a = evaluate_bound(&t, &ch, &pmf).unwrap().total;
        let b = evaluate_specialized(&spec, &ch, &pmf).unwrap();
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn relaxations_are_audited() {
    let topo = NetworkTopology::two_user_cic_common();
    let ident = Identification::parse("U=Z,M1; V=Z,M2; W=M0,Q").unwrap();
    let t = BoundTemplate::reduced(&topo, &[1], &[2], 1, vec![], s(&["M1"]), vec![], s(&["M0", "M2"])).unwrap();
    let spec = specialize_bound(&t, &topo, &ident).unwrap();
    assert_eq!(spec.to_string(), "R1 <= I(X1;Y1|X2,W)");
    assert!(spec.audit.iter().any(|a| a.relation == Relation::AtMost && a.action.contains("M2")));
}

#[test]
fn layered_templates_specialize_with_tail() {
    let topo = NetworkTopology::two_user_cic_common();
    let t = BoundTemplate::layered(&topo, &[1], &[2], vec![s(&["M1"])], vec![s(&["M2"])], s(&["M0"])).unwrap();
    // the tail carries a bare Z, which needs its own name
    let partial = Identification::parse("U=Z,M1;V=Z,M2;W=M0,Q").unwrap();
    assert!(matches!(specialize_bound(&t, &topo, &partial), Err(Error::InconsistentIdentification(_))));
    let ident = Identification::parse("U=Z,M1;V=Z,M2;W=M0,Q;T=Z").unwrap();
    let spec = specialize_bound(&t, &topo, &ident).unwrap();
    assert!(spec.tail.is_some());
    let ch = cic_common_channel(51);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..10 {
        let pmf = random_message_pmf(&ch, 2, 3, 2, &mut rng).unwrap();
        assert!(evaluate_specialized(&spec, &ch, &pmf).unwrap() >= evaluate_bound(&t, &ch, &pmf).unwrap().total - 1e-10);
    }
}

#[test]
fn uncovered_auxiliary_is_inconsistent() {
    let topo = NetworkTopology::two_user_cic_common();
    let t = BoundTemplate::reduced(&topo, &[1], &[2], 1, vec![], s(&["M1"]), vec![], s(&["M0"])).unwrap();
    let only_w = Identification::parse("W=M0,Q").unwrap();
    assert!(matches!(specialize_bound(&t, &topo, &only_w), Err(Error::InconsistentIdentification(_))));
    let reserved = Identification::parse("X1=Z,M1").unwrap();
    assert!(matches!(specialize_bound(&t, &topo, &reserved), Err(Error::InconsistentIdentification(_))));
    let unknown = Identification::parse("U=Z,M7").unwrap();
    assert!(matches!(specialize_bound(&t, &topo, &unknown), Err(Error::InconsistentIdentification(_))));
}

#[test]
fn factorization_is_enforced() {
    let ch = cic_common_channel(61);
    let topo = ch.topology.clone();
    let t = BoundTemplate::reduced(&topo, &[1], &[2], 1, vec![], s(&["M1"]), vec![], vec![]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let good = random_message_pmf(&ch, 2, 2, 1, &mut rng).unwrap();
    assert!(evaluate_bound(&t, &ch, &good).is_ok());

    // skew one message
    let m1 = good.index_of("M1").unwrap();
    let skewed: Vec<f64> = good
        .table()
        .iter()
        .enumerate()
        .map(|(k, p)| p * if good.decode(k)[m1] == 0 { 1.2 } else { 0.8 })
        .collect();
    let bad = JointPmf::new(good.vars().to_vec(), skewed).unwrap();
    assert!(matches!(evaluate_bound(&t, &ch, &bad), Err(Error::FactorizationViolation(_))));

    // randomized encoder
    let x1 = good.index_of("X1").unwrap();
    let mut noisy = vec![0.0; good.table().len()];
    for (k, p) in good.table().iter().enumerate() {
        let mut d = good.decode(k);
        noisy[k] += 0.9 * p;
        d[x1] ^= 1;
        noisy[good.encode(&d)] += 0.1 * p;
    }
    let bad = JointPmf::new(good.vars().to_vec(), noisy).unwrap();
    assert!(matches!(evaluate_bound(&t, &ch, &bad), Err(Error::FactorizationViolation(_))));

    // dependent messages
    let m2 = good.index_of("M2").unwrap();
    let tied: Vec<f64> = good
        .table()
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let d = good.decode(k);
            p * if d[m1] == d[m2] { 1.5 } else { 0.5 }
        })
        .collect();
    let bad = JointPmf::new(good.vars().to_vec(), tied).unwrap();
    assert!(matches!(evaluate_bound(&t, &ch, &bad), Err(Error::FactorizationViolation(_))));
}

#[test]
fn parallel_evaluation_matches_serial() {
    let ch = cic3_channel(71);
    let topo = ch.topology.clone();
    let list = enumerate_bound_templates(&topo, 1, BoundMode::MultiRx).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pmfs: Vec<JointPmf> = (0..4).map(|_| random_message_pmf(&ch, 2, 2, 2, &mut rng).unwrap()).collect();
    let grid = evaluate_bounds(&list[..30], &ch, &pmfs, Some(2)).unwrap();
    for (k, pmf) in pmfs.iter().enumerate() {
        for (i, t) in list[..30].iter().enumerate() {
            assert_eq!(grid[k][i], evaluate_bound(t, &ch, pmf).unwrap().total);
        }
    }
    let _ = rng.random::<u8>();
}

#[test]
fn json_dump_uses_term_grammar() {
    let topo = NetworkTopology::two_user_cic_common();
    let list = enumerate_bound_templates(&topo, 1, BoundMode::TwoRx).unwrap();
    let v = templates_json(&list[..3]);
    let first = &v[0];
    assert!(first["terms"][0].as_str().unwrap().starts_with("I("));
    assert!(first["shape"]["kind"].is_string());
    for term in first["terms"].as_array().unwrap() {
        crate::expr::MiTerm::parse(term.as_str().unwrap()).unwrap();
    }
}
