use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{BoundTemplate, SpecializedBound, AUX, TIME_SHARING};
use crate::error::{Error, Result};
use crate::expr::MiTerm;
use crate::infocalc::{dirichlet_uniform, induced_joint, JointPmf, Var};
use crate::netmodel::{input_name, DiscreteChannel, NetworkTopology};
use crate::ratepoly::with_workers;

/// Uniformity and independence slack of the factorization check.
const FACTOR_TOL: f64 = 1e-9;
const INDEPENDENCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundValue {
    pub terms: Vec<f64>,
    pub tail: Option<(f64, f64)>,
    /// Sum of the terms plus the smaller tail side, in bits.
    pub total: f64,
}

fn fail(msg: String) -> Error {
    Error::FactorizationViolation(msg)
}

/// Checks that messages are uniform and mutually independent of each other
/// and of `Q`, and that every input is a function of its messages and `Q`.
/// The auxiliary `Z` is unconstrained.
pub fn check_message_factorization(pmf: &JointPmf, topo: &NetworkTopology) -> Result<()> {
    let inputs: Vec<String> = (0..topo.k1).map(input_name).collect();
    for name in pmf.names() {
        let known = topo.messages.contains(&name) || inputs.contains(&name) || name == AUX || name == TIME_SHARING;
        if !known {
            return Err(fail(format!("unexpected variable {name}")));
        }
    }
    for v in topo.messages.iter().chain(&inputs) {
        pmf.index_of(v).map_err(|_| fail(format!("pmf lacks {v}")))?;
    }
    let q: Vec<&str> = if pmf.index_of(TIME_SHARING).is_ok() { vec![TIME_SHARING] } else { vec![] };
    let mut earlier: Vec<&str> = q.clone();
    for m in &topo.messages {
        let marginal = pmf.marginal(&[m.as_str()])?;
        let card = marginal.table().len() as f64;
        if let Some(p) = marginal.table().iter().find(|p| (**p - 1.0 / card).abs() > FACTOR_TOL) {
            return Err(fail(format!("{m} is not uniform (mass {p})")));
        }
        if !earlier.is_empty() {
            let dep = pmf.conditional_mutual_information(&[m.as_str()], &earlier, &[] as &[&str])?;
            if dep > INDEPENDENCE_TOL {
                return Err(fail(format!("{m} depends on {}: {dep:e} bits", earlier.join(","))));
            }
        }
        earlier.push(m);
    }
    for (i, x) in inputs.iter().enumerate() {
        let mut given: Vec<&str> = topo.tx_messages[i].iter().map(String::as_str).collect();
        given.extend(&q);
        let h = pmf.entropy(&[x.as_str()].iter().chain(&given).copied().collect::<Vec<_>>())? - pmf.entropy(&given)?;
        if h > INDEPENDENCE_TOL {
            return Err(fail(format!("{x} is not a function of {}: {h:e} bits left", given.join(","))));
        }
    }
    Ok(())
}

/// Drops `Z` and `Q` from a term when the pmf has no such variable.
fn localize(t: &MiTerm, pmf: &JointPmf) -> MiTerm {
    let keep = |v: &String| !((v == AUX || v == TIME_SHARING) && pmf.index_of(v).is_err());
    MiTerm {
        a: t.a.iter().filter(|v| keep(v)).cloned().collect(),
        b: t.b.clone(),
        c: t.c.iter().filter(|v| keep(v)).cloned().collect(),
    }
}

fn eval_term(t: &MiTerm, joint: &JointPmf) -> Result<f64> {
    let t = localize(t, joint);
    if t.a.is_empty() {
        return Ok(0.0);
    }
    Ok(t.eval(joint)?.max(0.0))
}

fn eval_parts(terms: &[MiTerm], tail: Option<&(MiTerm, MiTerm)>, joint: &JointPmf) -> Result<BoundValue> {
    let values: Vec<f64> = terms.iter().map(|t| eval_term(t, joint)).collect::<Result<_>>()?;
    let tail = match tail {
        Some((a, b)) => Some((eval_term(a, joint)?, eval_term(b, joint)?)),
        None => None,
    };
    let total = values.iter().sum::<f64>() + tail.map(|(a, b)| a.min(b)).unwrap_or(0.0);
    Ok(BoundValue { terms: values, tail, total })
}

fn prepare(channel: &DiscreteChannel, pmf: &JointPmf) -> Result<JointPmf> {
    check_message_factorization(pmf, &channel.topology)?;
    induced_joint(pmf, channel)
}

/// Right side of a template at a pmf over messages, inputs and optionally
/// `Z` and `Q`. A missing `Z` or `Q` is treated as constant.
pub fn evaluate_bound(template: &BoundTemplate, channel: &DiscreteChannel, pmf: &JointPmf) -> Result<BoundValue> {
    let joint = prepare(channel, pmf)?;
    eval_parts(&template.terms, template.tail.as_ref(), &joint)
}

/// Right side of a specialized bound, evaluated through its expanded terms.
pub fn evaluate_specialized(bound: &SpecializedBound, channel: &DiscreteChannel, pmf: &JointPmf) -> Result<f64> {
    let joint = prepare(channel, pmf)?;
    Ok(eval_parts(&bound.expanded_terms, bound.expanded_tail.as_ref(), &joint)?.total)
}

/// Evaluates every template at every pmf, in parallel over pmfs.
/// Row `k` holds the totals at `pmfs[k]`.
pub fn evaluate_bounds(
    templates: &[BoundTemplate],
    channel: &DiscreteChannel,
    pmfs: &[JointPmf],
    workers: Option<usize>,
) -> Result<Vec<Vec<f64>>> {
    with_workers(workers, || {
        pmfs.par_iter()
            .map(|pmf| {
                let joint = prepare(channel, pmf)?;
                templates.iter().map(|t| Ok(eval_parts(&t.terms, t.tail.as_ref(), &joint)?.total)).collect()
            })
            .collect()
    })
}

/// Random pmf of the message form: `Q` with `q_card` values (omitted when
/// 1), uniform messages with `msg_card` values, `Z` drawn from a random law
/// given messages and `Q` (omitted when `z_card` is 0), and inputs given by
/// random encoder maps.
pub fn random_message_pmf<R: Rng + ?Sized>(
    channel: &DiscreteChannel,
    msg_card: usize,
    z_card: usize,
    q_card: usize,
    rng: &mut R,
) -> Result<JointPmf> {
    let topo = &channel.topology;
    if msg_card == 0 || q_card == 0 {
        return Err(Error::Parse("message and time-sharing alphabets need at least one value".into()));
    }
    let mut vars = Vec::new();
    let has_q = q_card > 1;
    let q_law = dirichlet_uniform(q_card, rng);
    if has_q {
        vars.push(Var::new(TIME_SHARING, q_card));
    }
    for m in &topo.messages {
        vars.push(Var::new(m.clone(), msg_card));
    }
    let base = JointPmf::uniform(vars.clone())?;
    let mut table: Vec<f64> = base
        .table()
        .iter()
        .enumerate()
        .map(|(flat, p)| if has_q { p * q_card as f64 * q_law[base.decode(flat)[0]] } else { *p })
        .collect();
    if z_card > 0 {
        let mut with_z = Vec::with_capacity(table.len() * z_card);
        for p in &table {
            for w in dirichlet_uniform(z_card, rng) {
                with_z.push(p * w);
            }
        }
        vars.push(Var::new(AUX, z_card));
        table = with_z;
    }
    let mut pmf = JointPmf::new(vars, table)?;
    let offset = usize::from(has_q);
    for i in 0..topo.k1 {
        let msg_pos: Vec<usize> =
            topo.tx_messages[i].iter().map(|m| offset + topo.messages.iter().position(|x| x == m).expect("known")).collect();
        let rows = q_card * msg_card.pow(msg_pos.len() as u32);
        let card = channel.input_alphabets[i];
        let map: Vec<usize> = (0..rows).map(|_| rng.random_range(0..card)).collect();
        pmf = pmf.with_function(&input_name(i), card, |d| {
            let q = if has_q { d[0] } else { 0 };
            map[msg_pos.iter().fold(q, |acc, &p| acc * msg_card + d[p])]
        })?;
    }
    Ok(pmf)
}
