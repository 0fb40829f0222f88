use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::infocalc::{gaussian_psi, induced_joint, Factor, FamilySpec, JointPmf};
use crate::netmodel::{DiscreteChannel, GaussianNetwork, Network};
use crate::ratepoly::with_workers;
use crate::regimes::{check_catalog, CatalogOptions, CheckOptions, Verdict, MAX_GRID_POINTS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SumRateKind {
    #[serde(rename = "CIC")]
    Cic,
    #[serde(rename = "BCCR")]
    Bccr,
    #[serde(rename = "GAUSS-CIC")]
    GaussCic,
}

impl std::str::FromStr for SumRateKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "CIC" => Ok(SumRateKind::Cic),
            "BCCR" => Ok(SumRateKind::Bccr),
            "GAUSS-CIC" => Ok(SumRateKind::GaussCic),
            other => Err(Error::Parse(format!("unknown sum-rate kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SumRateOptions {
    pub grid: Option<usize>,
    /// Skip the less-noisy precondition check.
    pub waive_condition: bool,
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SumRateMaximizer {
    Pmf(JointPmf),
    /// Correlation and the normalized powers it was evaluated at.
    Gaussian { rho: f64, p1: f64, p2: f64, a: f64, b: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SumRateResult {
    pub value: f64,
    pub maximizer: SumRateMaximizer,
    pub condition_waived: bool,
}

impl SumRateResult {
    pub fn to_json(&self) -> serde_json::Value {
        let maximizer = match &self.maximizer {
            SumRateMaximizer::Pmf(p) => serde_json::json!({ "pmf": p.to_json() }),
            SumRateMaximizer::Gaussian { rho, p1, p2, a, b } => {
                serde_json::json!({ "rho": rho, "p1": p1, "p2": p2, "a": a, "b": b })
            }
        };
        serde_json::json!({ "value_bits": self.value, "maximizer": maximizer, "condition_waived": self.condition_waived })
    }
}

/// Points of the coarse scan before golden-section refinement.
const COARSE_POINTS: usize = 1001;
const GOLDEN_TOL: f64 = 1e-9;

/// Normalized cross gains `(a, b)` and powers of a two-user Gaussian network.
fn gaussian_params(net: &GaussianNetwork) -> Result<(f64, f64, f64, f64)> {
    if net.topology.k1 != 2 || net.topology.k2 != 2 {
        return Err(Error::TopologyMismatch("the Gaussian sum rate needs two transmitters and two receivers".into()));
    }
    let g = &net.gains;
    if g[0][0] == 0.0 || g[1][1] == 0.0 {
        return Err(Error::TopologyMismatch("direct gains must be nonzero".into()));
    }
    let a = g[0][1] / g[1][1];
    let b = g[1][0] / g[0][0];
    Ok((a, b, g[0][0].powi(2) * net.powers[0], g[1][1].powi(2) * net.powers[1]))
}

/// Sum rate of successive decoding at correlation `rho` between the inputs.
pub fn gaussian_cic_sumrate(rho: f64, a: f64, b: f64, p1: f64, p2: f64) -> Result<f64> {
    let r2 = rho * rho;
    let cross = (p1 * p2).sqrt();
    let first = gaussian_psi((1.0 - r2) * p1)?
        + gaussian_psi((r2 * b * b * p1 + p2 + 2.0 * b * rho * cross) / (1.0 + (1.0 - r2) * b * b * p1))?;
    let second = gaussian_psi(p1 + a * a * p2 + 2.0 * a * rho * cross)?;
    Ok(first.min(second))
}

fn golden_max(f: impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64) -> Result<(f64, f64)> {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    while hi - lo > GOLDEN_TOL {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = f(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = f(x1)?;
        }
    }
    let x = 0.5 * (lo + hi);
    Ok((x, f(x)?))
}

fn gaussian_sumrate(net: &GaussianNetwork, opts: &SumRateOptions) -> Result<SumRateResult> {
    let (a, b, p1, p2) = gaussian_params(net)?;
    if !opts.waive_condition {
        let tol = 1e-9 * a.abs().max(1.0);
        if !(b.abs() <= 1.0 + 1e-9 && a.abs() >= 1.0 - tol) {
            return Err(Error::ConditionNotVerified(format!("need |b| <= 1 <= |a|, got a = {a}, b = {b}")));
        }
    }
    let f = |rho: f64| gaussian_cic_sumrate(rho, a, b, p1, p2);
    let step = 1.0 / (COARSE_POINTS - 1) as f64;
    let mut best = (0.0, f(0.0)?);
    for k in 1..COARSE_POINTS {
        let rho = k as f64 * step;
        let v = f(rho)?;
        if v > best.1 {
            best = (rho, v);
        }
    }
    let lo = (best.0 - step).max(0.0);
    let hi = (best.0 + step).min(1.0);
    let refined = golden_max(f, lo, hi)?;
    let (rho, value) = if refined.1 > best.1 { refined } else { best };
    Ok(SumRateResult {
        value: value.max(0.0),
        maximizer: SumRateMaximizer::Gaussian { rho, p1, p2, a, b },
        condition_waived: opts.waive_condition,
    })
}

fn require_condition(channel: &DiscreteChannel, id: &str, opts: &SumRateOptions) -> Result<()> {
    if opts.waive_condition {
        return Ok(());
    }
    let check = CheckOptions { grid: opts.grid, workers: opts.workers, ..CheckOptions::default() };
    let report = check_catalog(channel, id, &CatalogOptions::default(), &check)?;
    if report.verdict != Verdict::Holds {
        return Err(Error::ConditionNotVerified(format!(
            "{id} is {} (worst margin {:e} bits)",
            report.verdict.as_str(),
            report.worst_margin_bits
        )));
    }
    Ok(())
}

fn discrete_sumrate(channel: &DiscreteChannel, kind: SumRateKind, opts: &SumRateOptions) -> Result<SumRateResult> {
    let k1 = channel.input_alphabets.len();
    let (id, family, want_inputs) = match kind {
        SumRateKind::Cic => {
            let names = ["X1", "X2"];
            ("C-CIC-LN", FamilySpec::new(channel.input_vars(), vec![Factor::marginal(&names)]), 2)
        }
        _ => (
            "C-BCCR-LN",
            FamilySpec::new(
                channel.input_vars(),
                vec![Factor::marginal(&["X1"]), Factor::marginal(&["X2"]), Factor::new(&["X3"], &["X1", "X2"])],
            ),
            3,
        ),
    };
    if k1 != want_inputs || channel.output_alphabets.len() != 2 {
        return Err(Error::TopologyMismatch(format!("{id} sum rate needs {want_inputs} inputs and two outputs")));
    }
    require_condition(channel, id, opts)?;
    let family = match opts.grid {
        Some(g) => family.with_resolution(g),
        None => family,
    };
    let fam = family.compile()?;
    if fam.len() > MAX_GRID_POINTS {
        return Err(Error::TooLarge(fam.len() as usize));
    }
    let value_at = |pmf: &JointPmf| -> Result<f64> {
        let j = induced_joint(pmf, channel)?;
        let v = if kind == SumRateKind::Cic {
            let sd = j.conditional_mutual_information(&["X1"], &["Y1"], &["X2"])? + j.conditional_mutual_information(&["X2"], &["Y2"], &[] as &[&str])?;
            sd.min(j.conditional_mutual_information(&["X1", "X2"], &["Y1"], &[] as &[&str])?)
        } else {
            let sd = j.conditional_mutual_information(&["X1", "X3"], &["Y1"], &["X2"])?
                + j.conditional_mutual_information(&["X2"], &["Y2"], &[] as &[&str])?;
            sd.min(j.conditional_mutual_information(&["X1", "X2", "X3"], &["Y1"], &[] as &[&str])?)
        };
        Ok(v)
    };
    let (idx, value) = with_workers(opts.workers, || {
        (0..fam.len())
            .into_par_iter()
            .map(|i| value_at(&fam.member(i)).map(|v| (i, v)))
            .try_reduce(|| (0, f64::NEG_INFINITY), |x, y| Ok(if y.1 > x.1 || (y.1 == x.1 && y.0 < x.0) { y } else { x }))
    })?;
    Ok(SumRateResult {
        value: value.max(0.0),
        maximizer: SumRateMaximizer::Pmf(fam.member(idx)),
        condition_waived: opts.waive_condition,
    })
}

/// Successive-decoding sum rate under the matching less-noisy condition.
/// Each pmf contributes the smaller of the two decoding orders' sums.
pub fn lessnoisy_sumrate(kind: SumRateKind, net: &Network, opts: &SumRateOptions) -> Result<SumRateResult> {
    match (kind, net) {
        (SumRateKind::GaussCic, Network::Gaussian(g)) => gaussian_sumrate(g, opts),
        (SumRateKind::Cic | SumRateKind::Bccr, Network::Discrete(c)) => discrete_sumrate(c, kind, opts),
        (SumRateKind::GaussCic, _) => Err(Error::TopologyMismatch("GAUSS-CIC needs a Gaussian network".into())),
        _ => Err(Error::TopologyMismatch("discrete sum rates need a discrete channel".into())),
    }
}
