use serde::Serialize;

use crate::error::{Error, Result};
use crate::netmodel::GaussianNetwork;

/// Gaussian condition ids. Disjoint from the discrete ids by construction
/// (every id starts with `G-`).
pub const GAUSSIAN_IDS: &[&str] = &[
    "G-LEMMA2",
    "G-2CIC",
    "G-CRC",
    "G-BCCR-LN",
    "G-MAIN2",
    "G-3CIC",
    "G-3CIC-B",
    "G-3CIC-ALMOST",
    "G-KCIC",
];

/// Number of evenly spaced mixing coefficients on [-1, 1] used by G-CRC.
pub const G_CRC_ALPHA_POINTS: usize = 41;

const RATIO_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainReport {
    pub id: String,
    pub holds: bool,
    /// Named ratios (alpha, beta, ...) where the condition defines them.
    pub witnesses: Vec<(String, f64)>,
    pub notes: Vec<String>,
}

fn ratio_eq(x: f64, y: f64) -> bool {
    (x - y).abs() <= RATIO_TOL * 1f64.max(x.abs()).max(y.abs())
}

/// `|x| >= t` with the threshold inclusive up to the ratio tolerance.
fn at_least(x: f64, t: f64) -> bool {
    x.abs() >= t || ratio_eq(x.abs(), t)
}

fn at_most(x: f64, t: f64) -> bool {
    x.abs() <= t || ratio_eq(x.abs(), t)
}

fn mismatch(id: &str, why: &str) -> Error {
    Error::TopologyMismatch(format!("{id}: {why}"))
}

/// Gains scaled so that every direct link is 1: entry (j, i) divided by the
/// gain of transmitter i at its own receiver i.
fn normalized(net: &GaussianNetwork, id: &str) -> Result<Vec<Vec<f64>>> {
    let k1 = net.topology.k1;
    if net.topology.k2 != k1 {
        return Err(mismatch(id, "needs as many receivers as transmitters"));
    }
    let mut n = net.gains.clone();
    for i in 0..k1 {
        let d = net.gains[i][i];
        if d == 0.0 {
            return Err(mismatch(id, "direct gains must be nonzero"));
        }
        for row in n.iter_mut() {
            row[i] /= d;
        }
    }
    Ok(n)
}

/// Normalized powers `gains[i][i]^2 * P_i` matching [`normalized`].
fn normalized_powers(net: &GaussianNetwork) -> Vec<f64> {
    (0..net.topology.k1).map(|i| net.gains[i][i].powi(2) * net.powers[i]).collect()
}

/// Common ratio `num[i] / den[i]` over `idx`. A zero denominator requires a
/// zero numerator and contributes no candidate. `None` if the ratios differ.
fn common_ratio(num: &[f64], den: &[f64], idx: &[usize]) -> Option<Option<f64>> {
    let mut found: Option<f64> = None;
    for &i in idx {
        if den[i] == 0.0 {
            if num[i] != 0.0 {
                return None;
            }
            continue;
        }
        let r = num[i] / den[i];
        match found {
            Some(f) if !ratio_eq(f, r) => return None,
            Some(_) => {}
            None => found = Some(r),
        }
    }
    Some(found)
}

fn report(id: &str, holds: bool, witnesses: Vec<(String, f64)>, notes: Vec<String>) -> GainReport {
    GainReport { id: id.to_string(), holds, witnesses, notes }
}

/// Two-receiver degradedness ratio check on the first `mu1` inputs:
/// receiver-1 gains equal alpha times receiver-2 gains with |alpha| <= 1.
fn lemma2_check(net: &GaussianNetwork, mu1: usize) -> Result<GainReport> {
    let id = "G-LEMMA2";
    if net.topology.k2 != 2 {
        return Err(mismatch(id, "needs two receivers"));
    }
    if mu1 == 0 || mu1 > net.topology.k1 {
        return Err(mismatch(id, "split must cover at least one input"));
    }
    let idx: Vec<usize> = (0..mu1).collect();
    match common_ratio(&net.gains[0], &net.gains[1], &idx) {
        None => Ok(report(id, false, vec![], vec!["ratios differ".into()])),
        Some(a) => {
            let alpha = a.unwrap_or(0.0);
            Ok(report(id, at_most(alpha, 1.0), vec![("alpha".into(), alpha)], vec![]))
        }
    }
}

/// Evaluates Gaussian condition `id`. G-LEMMA2 uses a split with one
/// degraded input; see [`gaussian_gain_check_split`].
pub fn gaussian_gain_check(net: &GaussianNetwork, id: &str) -> Result<GainReport> {
    gaussian_gain_check_split(net, id, 1)
}

pub fn gaussian_gain_check_split(net: &GaussianNetwork, id: &str, mu1: usize) -> Result<GainReport> {
    let k1 = net.topology.k1;
    let k2 = net.topology.k2;
    match id {
        "G-LEMMA2" => lemma2_check(net, mu1),
        "G-2CIC" => {
            if k1 != 2 || k2 != 2 {
                return Err(mismatch(id, "needs a two-user network"));
            }
            let n = normalized(net, id)?;
            let (a, b) = (n[0][1], n[1][0]);
            Ok(report(id, at_least(a, 1.0) && at_least(b, 1.0), vec![("a".into(), a), ("b".into(), b)], vec![]))
        }
        "G-CRC" => {
            if k1 != 2 || k2 != 2 {
                return Err(mismatch(id, "needs a two-user network"));
            }
            let n = normalized(net, id)?;
            let (a, b) = (n[0][1], n[1][0]);
            let mut holds = at_least(b, 1.0);
            let mut notes = Vec::new();
            for s in 0..G_CRC_ALPHA_POINTS {
                let al = -1.0 + 2.0 * s as f64 / (G_CRC_ALPHA_POINTS - 1) as f64;
                let ok = at_least(1.0 + a * al, (b + al).abs()) && at_least(1.0 - a * al, (b - al).abs());
                if !ok {
                    holds = false;
                    notes.push(format!("violated at mixing coefficient {al:.3}"));
                    break;
                }
            }
            Ok(report(id, holds, vec![("a".into(), a), ("b".into(), b)], notes))
        }
        "G-BCCR-LN" => {
            if k2 != 2 {
                return Err(mismatch(id, "needs two receivers"));
            }
            let idx: Vec<usize> = (0..k1).collect();
            match common_ratio(&net.gains[1], &net.gains[0], &idx) {
                None => Ok(report(id, false, vec![], vec!["ratios differ".into()])),
                Some(a) => {
                    let alpha = a.unwrap_or(0.0);
                    Ok(report(id, at_most(alpha, 1.0), vec![("alpha".into(), alpha)], vec![]))
                }
            }
        }
        "G-MAIN2" => {
            if k2 != 2 {
                return Err(mismatch(id, "needs two receivers"));
            }
            let g1 = net.topology.inputs_within(&net.topology.rx_messages[0]);
            let g2 = net.topology.inputs_within(&net.topology.rx_messages[1]);
            if g1.is_empty() || g2.is_empty() || g1.len() + g2.len() != k1 || g1.iter().any(|i| g2.contains(i)) {
                return Err(mismatch(id, "receiver groups must partition the transmitters"));
            }
            let ra = common_ratio(&net.gains[0], &net.gains[1], &g1);
            let rb = common_ratio(&net.gains[1], &net.gains[0], &g2);
            match (ra, rb) {
                (Some(a), Some(b)) => {
                    let (alpha, beta) = (a.unwrap_or(0.0), b.unwrap_or(0.0));
                    Ok(report(
                        id,
                        at_most(alpha, 1.0) && at_most(beta, 1.0),
                        vec![("alpha".into(), alpha), ("beta".into(), beta)],
                        vec![],
                    ))
                }
                _ => Ok(report(id, false, vec![], vec!["ratios differ".into()])),
            }
        }
        "G-3CIC" => {
            if k1 != 3 || k2 != 3 {
                return Err(mismatch(id, "needs a three-user network"));
            }
            let n = normalized(net, id)?;
            let holds = at_least(n[0][2], 1.0)
                && at_least(n[1][0], 1.0)
                && at_least(n[2][1], 1.0)
                && ratio_eq(n[0][1], n[0][2] * n[2][1])
                && ratio_eq(n[2][0], n[1][0] * n[2][1])
                && ratio_eq(n[1][2], n[1][0] * n[0][2]);
            Ok(report(id, holds, vec![], vec![]))
        }
        "G-3CIC-B" => {
            if k1 != 3 || k2 != 3 {
                return Err(mismatch(id, "needs a three-user network"));
            }
            let n = normalized(net, id)?;
            let alpha = n[1][0];
            let ok_alpha = n[0][1] != 0.0
                && n[0][2] != 0.0
                && ratio_eq(alpha, 1.0 / n[0][1])
                && ratio_eq(alpha, n[1][2] / n[0][2])
                && ratio_eq(alpha.abs(), 1.0);
            let ok_beta = n[2][0] != 0.0 && n[2][1] != 0.0 && ratio_eq(n[1][0] / n[2][0], 1.0 / n[2][1]);
            let beta = if n[2][0] != 0.0 { n[1][0] / n[2][0] } else { f64::NAN };
            let holds = at_least(n[1][2], 1.0) && ok_alpha && ok_beta && at_most(beta, 1.0);
            Ok(report(id, holds, vec![("alpha".into(), alpha), ("beta".into(), beta)], vec![]))
        }
        "G-3CIC-ALMOST" => {
            if k1 != 3 || k2 != 3 {
                return Err(mismatch(id, "needs a three-user network"));
            }
            let n = normalized(net, id)?;
            let p = normalized_powers(net);
            let thr = (p[0] + n[0][1].powi(2) * p[1] + 1.0).sqrt();
            let holds = at_least(n[0][1], 1.0)
                && at_least(n[1][0], 1.0)
                && at_least(n[2][1], 1.0)
                && at_least(n[0][2], thr)
                && ratio_eq(n[2][0], n[1][0] * n[2][1])
                && ratio_eq(n[1][2], n[1][0] * n[0][2]);
            Ok(report(id, holds, vec![], vec![format!("threshold for the receiver-1 cross gain {thr:.6}")]))
        }
        "G-KCIC" => {
            if k1 < 2 || k2 != k1 {
                return Err(mismatch(id, "needs a K-user network"));
            }
            let n = normalized(net, id)?;
            let mut holds = true;
            let mut witnesses = Vec::new();
            for j in 0..k1 {
                let prev = (j + k1 - 1) % k1;
                let idx: Vec<usize> = (0..k1).filter(|&i| i != j).collect();
                match common_ratio(&n[prev], &n[j], &idx) {
                    Some(Some(a)) => {
                        holds &= at_most(a, 1.0);
                        witnesses.push((format!("alpha{}", j + 1), a));
                    }
                    _ => {
                        holds = false;
                        witnesses.push((format!("alpha{}", j + 1), f64::NAN));
                    }
                }
            }
            Ok(report(id, holds, witnesses, vec![]))
        }
        other => Err(Error::CatalogUnknown(other.to_string())),
    }
}

/// Degraded-copy construction for receiver 1 from receiver 2:
/// `alpha * Y2 + sum_k input_coeffs[k] * X_{mu1+k} + noise_coeff * Z'`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma2Construction {
    pub alpha: f64,
    pub y2_coeff: f64,
    /// Coefficients of the inputs after the split, `a_k - alpha * b_k`.
    pub input_coeffs: Vec<f64>,
    pub noise_coeff: f64,
    /// Largest gap between the construction's conditional-mean coefficients
    /// and receiver 1's gains.
    pub mean_residual: f64,
    /// Gap between the construction's conditional variance and 1.
    pub variance_residual: f64,
}

pub fn lemma2_witness(net: &GaussianNetwork, split: (usize, usize), alpha: f64) -> Result<Lemma2Construction> {
    let (mu1, mu2) = split;
    if net.topology.k2 != 2 || mu1 + mu2 != net.topology.k1 || mu1 == 0 {
        return Err(mismatch("G-LEMMA2", "split must match the transmitters of a two-receiver network"));
    }
    if !alpha.is_finite() || alpha.abs() > 1.0 {
        return Err(Error::RatioViolation(format!("|alpha| = {} exceeds 1", alpha.abs())));
    }
    let (a, b) = (&net.gains[0], &net.gains[1]);
    for k in 0..mu1 {
        if !ratio_eq(a[k], alpha * b[k]) {
            return Err(Error::RatioViolation(format!(
                "input {}: gain ratio {}/{} differs from alpha {alpha}",
                k + 1,
                a[k],
                b[k]
            )));
        }
    }
    let input_coeffs: Vec<f64> = (mu1..mu1 + mu2).map(|k| a[k] - alpha * b[k]).collect();
    let noise_coeff = (1.0 - alpha * alpha).sqrt();
    // conditional mean coefficient of X_k in the construction
    let mean_residual = (0..mu1 + mu2)
        .map(|k| {
            let coeff = alpha * b[k] + if k >= mu1 { input_coeffs[k - mu1] } else { 0.0 };
            (coeff - a[k]).abs()
        })
        .fold(0.0, f64::max);
    // Z2 scaled by alpha plus independent noise
    let variance_residual = (alpha * alpha + noise_coeff * noise_coeff - 1.0).abs();
    Ok(Lemma2Construction { alpha, y2_coeff: alpha, input_coeffs, noise_coeff, mean_residual, variance_residual })
}
