use serde::Serialize;

use crate::error::{Error, Result};
use crate::infocalc::{induced_joint, JointPmf};
use crate::netmodel::DiscreteChannel;
use crate::ratepoly::RatePolytope;

/// Codeword and input variables of the broadcast-with-relays scheme; `Q` is
/// optional.
pub const BCCR_VARS: &[&str] = &["W1", "U1", "X1", "W2", "V2", "X2", "WB", "UB", "VB", "X3"];

/// Conditional mutual informations below this count as zero in the
/// factorization check.
const INDEPENDENCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct BccrInner {
    pub polytope: RatePolytope,
    /// Set when the bin lower bounds cannot be met; the polytope is then the
    /// origin.
    pub diagnostic: Option<String>,
}

const SYSTEM: &[&str] = &["R0", "R1", "R2", "R10", "R11", "R20", "R22", "B0", "B1", "B2"];
const SPLIT: &[&str] = &["R10", "R11", "R20", "R22", "B0", "B1", "B2"];

struct Ctx<'a> {
    joint: &'a JointPmf,
    q: bool,
}

impl Ctx<'_> {
    fn mi(&self, a: &[&str], b: &str, c: &[&str]) -> Result<f64> {
        let mut cond: Vec<&str> = c.to_vec();
        if self.q {
            cond.push("Q");
        }
        Ok(self.joint.conditional_mutual_information(a, &[b], &cond)?.max(0.0))
    }
}

/// One receiver's decoding rows: the rates on the left (in the receiver's own
/// naming) and the information terms on the right.
type DecodeRow = (&'static [&'static str], &'static [&'static str], &'static [&'static str]);

const RX1: &[DecodeRow] = &[
    (&["R11", "B1"], &["U1", "UB"], &["W1", "W2", "WB"]),
    (&["R0", "B0", "B1"], &["WB", "UB"], &["W1", "W2", "U1"]),
    (&["R20", "R0", "B0", "B1"], &["W2", "WB", "UB"], &["W1", "U1"]),
    (&["R0", "B0", "R11", "B1"], &["U1", "WB", "UB"], &["W1", "W2"]),
    (&["R20", "R0", "B0", "R11", "B1"], &["U1", "W2", "WB", "UB"], &["W1"]),
    (&["R10", "R0", "B0", "R11", "B1"], &["W1", "U1", "WB", "UB"], &["W2"]),
    (&["R10", "R20", "R0", "B0", "R11", "B1"], &["W1", "U1", "W2", "WB", "UB"], &[]),
];

/// Receiver 2 mirrors receiver 1 under this renaming.
fn mirror(name: &str) -> &str {
    match name {
        "U1" => "V2",
        "W1" => "W2",
        "W2" => "W1",
        "UB" => "VB",
        "R11" => "R22",
        "R10" => "R20",
        "R20" => "R10",
        "B1" => "B2",
        other => other,
    }
}

fn check_factorization(pmf: &JointPmf, q: bool) -> Result<()> {
    let c = |v: &[&'static str]| -> Vec<&'static str> {
        let mut out = v.to_vec();
        if q {
            out.push("Q");
        }
        out
    };
    let tx = pmf.conditional_mutual_information(&["W1", "U1", "X1"], &["W2", "V2", "X2"], &c(&[]))?;
    if tx > INDEPENDENCE_TOL {
        return Err(Error::FamilyViolation(format!("relay codewords are dependent given Q: {tx:e} bits")));
    }
    let bc = pmf.conditional_mutual_information(&["WB", "UB", "VB"], &["X1", "X2"], &c(&["W1", "U1", "W2", "V2"]))?;
    if bc > INDEPENDENCE_TOL {
        return Err(Error::FamilyViolation(format!("broadcast codewords depend on the relay inputs: {bc:e} bits")));
    }
    Ok(())
}

fn prepare(channel: &DiscreteChannel, pmf: &JointPmf) -> Result<(JointPmf, bool)> {
    for v in BCCR_VARS {
        pmf.index_of(v).map_err(|_| Error::FamilyViolation(format!("pmf lacks {v}")))?;
    }
    let q = pmf.index_of("Q").is_ok();
    let extra = pmf.vars().len() - BCCR_VARS.len() - usize::from(q);
    if extra != 0 {
        return Err(Error::FamilyViolation(format!("unexpected variables in {:?}", pmf.names())));
    }
    if channel.input_alphabets.len() != 3 || channel.output_alphabets.len() != 2 {
        return Err(Error::TopologyMismatch("expected three inputs and two outputs".into()));
    }
    check_factorization(pmf, q)?;
    Ok((induced_joint(pmf, channel)?, q))
}

fn system(joint: &JointPmf, q: bool, eps: f64, common: bool) -> Result<RatePolytope> {
    let ctx = Ctx { joint, q };
    let eta0 = ctx.mi(&["U1", "V2"], "WB", &["W1", "W2"])?;
    let eta1 = ctx.mi(&["V2"], "UB", &["U1", "W1", "W2", "WB"])?;
    let eta2 = ctx.mi(&["U1"], "VB", &["V2", "W1", "W2", "WB"])?;
    let eta4 = ctx.mi(&["UB"], "VB", &["U1", "V2", "W1", "W2", "WB"])?;
    let theta1 = ctx.mi(&["U1"], "WB", &["W1", "W2"])?;
    let theta2 = ctx.mi(&["V2"], "WB", &["W1", "W2"])?;

    let vars: Vec<&str> = SYSTEM.iter().copied().filter(|v| common || *v != "R0").collect();
    let mut p = RatePolytope::new(&vars);
    let coeffs = |terms: &[(&str, f64)]| -> Vec<f64> {
        let mut c = vec![0.0; vars.len()];
        for (n, v) in terms {
            let k = vars.iter().position(|x| x == n).expect("declared rate");
            c[k] += v;
        }
        c
    };
    // bins: sum B >= eta + eps
    for (bins, lower) in [
        (&["B0"][..], eta0),
        (&["B0", "B1"][..], eta0 + eta1),
        (&["B0", "B2"][..], eta0 + eta2),
        (&["B0", "B1", "B2"][..], eta0 + eta1 + eta2 + eta4),
    ] {
        let t: Vec<(&str, f64)> = bins.iter().map(|b| (*b, -1.0)).collect();
        p.add_row(coeffs(&t), -(lower + eps))?;
    }
    for (rx, y, theta) in [(0usize, "Y1", theta1), (1, "Y2", theta2)] {
        for (k, (rates, a, c)) in RX1.iter().enumerate() {
            // rows 2 and 3 only protect the common message
            if !common && (k == 1 || k == 2) {
                continue;
            }
            let name = |n: &'static str| if rx == 0 { n } else { mirror(n) };
            let terms: Vec<(&str, f64)> = rates.iter().map(|r| name(r)).filter(|r| common || *r != "R0").map(|r| (r, 1.0)).collect();
            let a: Vec<&str> = a.iter().map(|v| name(v)).collect();
            let c: Vec<&str> = c.iter().map(|v| name(v)).collect();
            let bound = ctx.mi(&a, y, &c)? + theta - eps;
            p.add_row(coeffs(&terms), bound)?;
        }
    }
    for (total, a, b) in [("R1", "R10", "R11"), ("R2", "R20", "R22")] {
        p.add_row(coeffs(&[(total, 1.0), (a, -1.0), (b, -1.0)]), 0.0)?;
        p.add_row(coeffs(&[(total, -1.0), (a, 1.0), (b, 1.0)]), 0.0)?;
    }
    Ok(p)
}

fn project(p: RatePolytope, kept: &[&str]) -> Result<BccrInner> {
    if p.is_empty() {
        let mut origin = RatePolytope::new(kept);
        for k in 0..kept.len() {
            let mut c = vec![0.0; kept.len()];
            c[k] = 1.0;
            origin.add_row(c, 0.0)?;
        }
        return Ok(BccrInner {
            polytope: origin,
            diagnostic: Some("bin lower bounds exceed the decoding upper bounds at this pmf".into()),
        });
    }
    Ok(BccrInner { polytope: p.fourier_motzkin_eliminate(SPLIT)?.remove_redundant(), diagnostic: None })
}

/// Inner bound in `(R0,R1,R2)` at one pmf. Strict inequalities are closed
/// with margin `eps`; `eps = 0` gives the closure.
pub fn bccr_inner_polytope(channel: &DiscreteChannel, pmf: &JointPmf, eps: f64) -> Result<BccrInner> {
    let (joint, q) = prepare(channel, pmf)?;
    project(system(&joint, q, eps, true)?, &["R0", "R1", "R2"])
}

/// The variant without a common message, in `(R1,R2)`.
pub fn bccr_inner_polytope_no_common(channel: &DiscreteChannel, pmf: &JointPmf, eps: f64) -> Result<BccrInner> {
    let (joint, q) = prepare(channel, pmf)?;
    project(system(&joint, q, eps, false)?, &["R1", "R2"])
}
