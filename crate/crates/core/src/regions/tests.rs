use super::*;
use crate::infocalc::Var;
use crate::netmodel::{build_maccm_plan, GaussianNetwork, Network, NetworkTopology};
use crate::ratepoly::{is_subset, same_vertices};

fn ch2(tx: &[&[&str]], rx: &[&[&str]], f: impl Fn(&[usize]) -> Vec<usize>, outs: Vec<usize>) -> DiscreteChannel {
    DiscreteChannel::deterministic(tx, rx, vec![2, 2], outs, f).unwrap()
}

fn common_tx() -> [&'static [&'static str]; 2] {
    [&["M0", "M1"], &["M0", "M2"]]
}

fn uniform(vars: &[(&str, usize)]) -> JointPmf {
    JointPmf::uniform(vars.iter().map(|(n, c)| Var::new(*n, *c)).collect()).unwrap()
}

fn point_mass(vars: &[(&str, usize)]) -> JointPmf {
    let vs: Vec<Var> = vars.iter().map(|(n, c)| Var::new(*n, *c)).collect();
    let n: usize = vars.iter().map(|(_, c)| c).product();
    let mut t = vec![0.0; n];
    t[0] = 1.0;
    JointPmf::new(vs, t).unwrap()
}

fn polytope(vars: &[&str], rows: &[(&[f64], f64)]) -> RatePolytope {
    let mut p = RatePolytope::new(vars);
    for (c, b) in rows {
        p.add_row(c.to_vec(), *b).unwrap();
    }
    p
}

#[test]
fn compound_mac_on_shared_clean_pair() {
    let ch = ch2(&common_tx(), &common_tx(), |x| vec![2 * x[0] + x[1], 2 * x[0] + x[1]], vec![4, 4]);
    let tpl = region_template("T-CICCM-SW", &ch, &AuxCards::default()).unwrap();
    let mut pmf = uniform(&[("X1", 2), ("X2", 2)]);
    pmf = pmf.with_function("W", 2, |_| 0).unwrap();
    let pmf = pmf.marginal(&["W", "X1", "X2"]).unwrap();
    let got = evaluate_template(&tpl, &ch, &pmf).unwrap();
    let want = polytope(
        &["R0", "R1", "R2"],
        &[(&[0., 1., 0.], 1.), (&[0., 0., 1.], 1.), (&[0., 1., 1.], 2.), (&[1., 1., 1.], 2.)],
    );
    assert!(same_vertices(&got, &want, 1e-9).unwrap());
}

#[test]
fn degenerate_inputs_give_origin() {
    let three = NetworkTopology::k_user_cic(3, None).unwrap();
    let tx: Vec<Vec<&str>> = three.tx_messages.iter().map(|v| v.iter().map(String::as_str).collect()).collect();
    let txs: Vec<&[&str]> = tx.iter().map(Vec::as_slice).collect();
    let ch = DiscreteChannel::deterministic(&txs, &txs, vec![2, 2, 2], vec![2, 2, 2], |x| vec![x[0] ^ x[1] ^ x[2], x[1], x[2]])
        .unwrap();
    let tpl = region_template("T-M2ONE", &ch, &AuxCards::default()).unwrap();
    let p = evaluate_template(&tpl, &ch, &point_mass(&[("X1", 2), ("X2", 2), ("X3", 2)])).unwrap();
    assert_eq!(p.enumerate_vertices().unwrap(), vec![vec![0.0; 3]]);
}

#[test]
fn parallel_channel_compound_vs_per_receiver() {
    let ch = ch2(&[&["M1"], &["M2"]], &[&["M1"], &["M2"]], |x| vec![x[0], x[1]], vec![2, 2]);
    let opts = SweepOptions { grid: Some(4), workers: Some(1) };
    let sw = region_template("T-CICCM-SW", &ch, &AuxCards::default()).unwrap();
    let est = sweep_template(&sw, &ch, &opts).unwrap();
    assert!(est.admits(&[0.0, 0.0], 1e-9));
    assert!(!est.admits(&[0.01, 0.0], 1e-6));
    assert!(!est.admits(&[0.0, 0.01], 1e-6));
    let comp = region_template("T-GEN-COMPOUND", &ch, &AuxCards::default()).unwrap();
    let est = sweep_template(&comp, &ch, &opts).unwrap();
    assert!(est.admits(&[1.0, 1.0], 1e-9));
    assert!(!est.admits(&[1.01, 0.0], 1e-6));
}

#[test]
fn han_and_compound_agree_on_swap() {
    let ch = ch2(&[&["M1"], &["M2"]], &[&["M2"], &["M1"]], |x| vec![x[1], x[0]], vec![2, 2]);
    let opts = SweepOptions { grid: Some(4), workers: Some(1) };
    let aux = AuxCards::default();
    let a = sweep_template(&region_template("T-CICCM-HAN", &ch, &aux).unwrap(), &ch, &opts).unwrap();
    let b = sweep_template(&region_template("T-CICCM-SW", &ch, &aux).unwrap(), &ch, &opts).unwrap();
    let r = crate::ratepoly::region_compare(&a, &b, 1e-9).unwrap();
    assert_eq!(r.verdict, crate::ratepoly::CompareVerdict::Equal);
    assert!(!a.admits(&[0.01, 0.0], 1e-6));
}

#[test]
fn all_rows_contain_strong_rows() {
    let three = NetworkTopology::k_user_cic(3, None).unwrap();
    let tx: Vec<Vec<&str>> = three.tx_messages.iter().map(|v| v.iter().map(String::as_str).collect()).collect();
    let txs: Vec<&[&str]> = tx.iter().map(Vec::as_slice).collect();
    let ch = DiscreteChannel::from_law(&txs, &txs, vec![2, 2, 2], vec![2, 2, 2], |x| {
        let mut row = vec![0.0; 8];
        let y = [x[0] ^ x[1], x[1] & x[2], x[2] | x[0]];
        for k in 0..8 {
            let bits = [k >> 2 & 1, k >> 1 & 1, k & 1];
            row[k] = bits.iter().zip(&y).map(|(b, t)| if b == t { 0.8 } else { 0.2 }).product();
        }
        row
    })
    .unwrap();
    let aux = AuxCards::default();
    let all = region_template("T-3CIC-ALL", &ch, &aux).unwrap();
    let strong = region_template("T-3CIC-STRONG", &ch, &aux).unwrap();
    let fam = all.family.clone().with_resolution(3).compile().unwrap();
    for k in (0..fam.len()).step_by(7) {
        let pmf = fam.member(k);
        let a = evaluate_template(&all, &ch, &pmf).unwrap();
        let s = evaluate_template(&strong, &ch, &pmf).unwrap();
        assert!(is_subset(&a, &s, 1e-9).unwrap());
    }
}

#[test]
fn superposition_row_patterns_on_three_users() {
    let t = NetworkTopology::k_user_cic(3, None).unwrap();
    let plan = build_maccm_plan(&t);
    let own = superposition_rows(&plan, &t, SuperpositionMode::Own).unwrap();
    let all = superposition_rows(&plan, &t, SuperpositionMode::All).unwrap();
    assert_eq!(all.len(), 21);
    assert_eq!(own.len(), 12);
    let pattern = |rows: &[TemplateRow], j: usize| -> Vec<String> {
        rows.iter()
            .filter(|r| r.bounds[0].variables().contains(&format!("Y{j}")))
            .map(|r| r.terms.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>().join("+"))
            .collect()
    };
    assert_eq!(pattern(&own, 1), ["R1", "R1+R2", "R1+R3", "R1+R2+R3"]);
    assert_eq!(pattern(&own, 3), ["R3", "R1+R3", "R2+R3", "R1+R2+R3"]);
}

#[test]
fn single_link_superposition() {
    let ch = DiscreteChannel::deterministic(&[&["M1"]], &[&["M1"]], vec![2], vec![2], |x| vec![x[0]]).unwrap();
    let plan = build_maccm_plan(&ch.topology);
    let rows = superposition_rows(&plan, &ch.topology, SuperpositionMode::All).unwrap();
    assert_eq!(rows.len(), 1);
    let pmf = uniform(&[("W1", 2)]).with_function("X1", 2, |w| w[0]).unwrap();
    let p = superposition_polytope(&plan, &ch, &pmf, SuperpositionMode::All).unwrap();
    assert_eq!(p.enumerate_vertices().unwrap(), vec![vec![0.0], vec![1.0]]);
}

#[test]
fn unknown_and_mismatched_templates() {
    let ch = ch2(&[&["M1"], &["M2"]], &[&["M1"], &["M2"]], |x| vec![x[0], x[1]], vec![2, 2]);
    let aux = AuxCards::default();
    assert_eq!(region_template("T-NOPE", &ch, &aux).unwrap_err().code(), "TEMPLATE_UNKNOWN");
    assert_eq!(region_template("T-CRCCM-CAP", &ch, &aux).unwrap_err().code(), "TOPOLOGY_MISMATCH");
    for id in TEMPLATE_IDS {
        match region_template(id, &ch, &aux) {
            Ok(t) => t.validate().unwrap(),
            Err(e) => assert_eq!(e.code(), "TOPOLOGY_MISMATCH", "{id}"),
        }
    }
}

#[test]
fn family_violation_on_dependent_inputs() {
    let three = NetworkTopology::k_user_cic(3, None).unwrap();
    let tx: Vec<Vec<&str>> = three.tx_messages.iter().map(|v| v.iter().map(String::as_str).collect()).collect();
    let txs: Vec<&[&str]> = tx.iter().map(Vec::as_slice).collect();
    let ch = DiscreteChannel::deterministic(&txs, &txs, vec![2, 2, 2], vec![2, 2, 2], |x| x.to_vec()).unwrap();
    let tpl = region_template("T-3CIC-ALL", &ch, &AuxCards::default()).unwrap();
    let pmf = uniform(&[("X1", 2), ("X2", 2)]).with_function("X3", 2, |x| x[0]).unwrap();
    assert_eq!(evaluate_template(&tpl, &ch, &pmf).unwrap_err().code(), "FAMILY_VIOLATION");
}

#[test]
fn encoder_cap_is_enforced() {
    let ch = DiscreteChannel::deterministic(&common_tx(), &common_tx(), vec![5, 5], vec![5, 5], |x| x.to_vec()).unwrap();
    let aux = AuxCards { messages: 3, ..AuxCards::default() };
    assert_eq!(region_template("T-CICCM-HAN", &ch, &aux).unwrap_err().code(), "TOO_LARGE");
}

#[test]
fn crccm_reduction_matches_on_random_pmfs() {
    use rand::SeedableRng;
    let crccm = NetworkTopology::crccm();
    let tx: Vec<Vec<&str>> = crccm.tx_messages.iter().map(|v| v.iter().map(String::as_str).collect()).collect();
    let rx: Vec<Vec<&str>> = crccm.rx_messages.iter().map(|v| v.iter().map(String::as_str).collect()).collect();
    let txs: Vec<&[&str]> = tx.iter().map(Vec::as_slice).collect();
    let rxs: Vec<&[&str]> = rx.iter().map(Vec::as_slice).collect();
    let ch = DiscreteChannel::from_law(&txs, &rxs, vec![2, 2], vec![2, 2], |x| {
        let y1 = (x[0] + x[1]) % 2;
        let y2 = x[1];
        let mut row = vec![0.0; 4];
        for k in 0..4 {
            let (a, b) = (k >> 1, k & 1);
            row[k] = (if a == y1 { 0.9 } else { 0.1 }) * (if b == y2 { 0.85 } else { 0.15 });
        }
        row
    })
    .unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let pmf = crate::infocalc::random_pmf(vec![Var::new("U", 2), Var::new("X1", 2), Var::new("X2", 2)], &mut rng);
        let r = crccm_fm_reduction(&ch, &pmf).unwrap();
        assert!(r.matches, "{:?} vs {:?}", r.reduced, r.direct);
    }
}

fn bccr_channel() -> DiscreteChannel {
    // Y1 = X1 cannot carry a common message, so the layout has none
    let t = NetworkTopology::bccr(false);
    let tx: Vec<Vec<&str>> = t.tx_messages.iter().map(|v| v.iter().map(String::as_str).collect()).collect();
    let rx: Vec<Vec<&str>> = t.rx_messages.iter().map(|v| v.iter().map(String::as_str).collect()).collect();
    let txs: Vec<&[&str]> = tx.iter().map(Vec::as_slice).collect();
    let rxs: Vec<&[&str]> = rx.iter().map(Vec::as_slice).collect();
    DiscreteChannel::deterministic(&txs, &rxs, vec![2, 2, 2], vec![2, 2], |x| vec![x[0], x[1] ^ x[2]]).unwrap()
}

#[test]
fn bccr_clean_bit_through_first_relay() {
    let ch = bccr_channel();
    // X1 = U1 uniform; everything else degenerate
    let mut vars: Vec<(&str, usize)> = BCCR_VARS.iter().map(|v| (*v, 1)).collect();
    for v in vars.iter_mut() {
        if v.0.starts_with('X') {
            v.1 = 2;
        }
    }
    vars[1].1 = 2;
    let vs: Vec<Var> = vars.iter().map(|(n, c)| Var::new(*n, *c)).collect();
    let base = JointPmf::uniform(vec![Var::new("U1", 2)]).unwrap();
    let full = base
        .with_function("X1", 2, |u| u[0])
        .unwrap()
        .with_function("X2", 2, |_| 0)
        .unwrap()
        .with_function("X3", 2, |_| 0)
        .unwrap();
    let mut p = full;
    for name in ["W1", "W2", "V2", "WB", "UB", "VB"] {
        p = p.with_function(name, 1, |_| 0).unwrap();
    }
    let names: Vec<&str> = vs.iter().map(|v| v.name.as_str()).collect();
    let p = p.marginal(&names).unwrap();
    let got = bccr_inner_polytope(&ch, &p, 0.0).unwrap();
    assert!(got.diagnostic.is_none());
    let want = polytope(&["R0", "R1", "R2"], &[(&[1., 0., 0.], 0.), (&[0., 1., 0.], 1.), (&[0., 0., 1.], 0.)]);
    assert!(same_vertices(&got.polytope, &want, 1e-9).unwrap(), "{:?}", got.polytope);
    let shrunk = bccr_inner_polytope(&ch, &p, 0.1).unwrap();
    assert!(shrunk.diagnostic.is_some() || is_subset(&shrunk.polytope, &got.polytope, 1e-9).unwrap());
}

#[test]
fn gaussian_sumrate_matches_dense_grid() {
    let net = GaussianNetwork::cic(vec![vec![1.0, 2.0], vec![0.5, 1.0]], vec![1.0, 1.0]).unwrap();
    let r = lessnoisy_sumrate(SumRateKind::GaussCic, &Network::Gaussian(net), &SumRateOptions::default()).unwrap();
    let mut best = f64::NEG_INFINITY;
    for k in 0..=100_000 {
        best = best.max(gaussian_cic_sumrate(k as f64 / 100_000.0, 2.0, 0.5, 1.0, 1.0).unwrap());
    }
    assert!((r.value - best).abs() < 1e-6, "{} vs {best}", r.value);
    let SumRateMaximizer::Gaussian { rho, .. } = r.maximizer else { panic!() };
    assert!((gaussian_cic_sumrate(rho, 2.0, 0.5, 1.0, 1.0).unwrap() - r.value).abs() < 1e-9);
}

#[test]
fn gaussian_sumrate_requires_condition() {
    let net = GaussianNetwork::cic(vec![vec![1.0, 0.5], vec![2.0, 1.0]], vec![1.0, 1.0]).unwrap();
    let err = lessnoisy_sumrate(SumRateKind::GaussCic, &Network::Gaussian(net.clone()), &SumRateOptions::default()).unwrap_err();
    assert_eq!(err.code(), "CONDITION_NOT_VERIFIED");
    let opts = SumRateOptions { waive_condition: true, ..SumRateOptions::default() };
    assert!(lessnoisy_sumrate(SumRateKind::GaussCic, &Network::Gaussian(net), &opts).is_ok());
}

#[test]
fn parallel_sumrate_is_one_bit() {
    let ch = ch2(&[&["M1"], &["M2"]], &[&["M1"], &["M2"]], |x| vec![x[0], x[1]], vec![2, 2]);
    let net = Network::Discrete(ch);
    let strict = SumRateOptions { grid: Some(4), waive_condition: false, workers: Some(1) };
    assert_eq!(lessnoisy_sumrate(SumRateKind::Cic, &net, &strict).unwrap_err().code(), "CONDITION_NOT_VERIFIED");
    let opts = SumRateOptions { waive_condition: true, ..strict };
    let r = lessnoisy_sumrate(SumRateKind::Cic, &net, &opts).unwrap();
    assert!((r.value - 1.0).abs() < 1e-9);
}

#[test]
fn aux_parse() {
    let a = AuxCards::parse("W=3, U=2,Z=4").unwrap();
    assert_eq!((a.w, a.u, a.z), (3, 2, 4));
    assert!(AuxCards::parse("Q=2").is_err());
    assert!(AuxCards::parse("W=0").is_err());
}
