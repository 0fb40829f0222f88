use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{check_condition, CheckOptions, ConditionRow, ConditionSpec, Verdict};
use crate::error::{Error, Result};
use crate::expr::{LinExpr, MiTerm};
use crate::infocalc::{dirichlet, induced_joint, EntropyCache, Factor, FamilySpec, JointPmf, Var};
use crate::netmodel::{input_name, mixed_radix_decode, mixed_radix_encode, output_name, DiscreteChannel};

/// One single-letter inequality `I(S; Y_weak | G) <= I(S; Y_strong | G)`
/// where S is the signal inputs (or an auxiliary U riding on them) and G the
/// remaining inputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaInequality {
    pub signal: Vec<usize>,
    pub given: Vec<usize>,
    pub weaker: Vec<usize>,
    pub stronger: Vec<usize>,
    /// Cardinality of U when the signal side is an auxiliary variable.
    pub aux_u: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaReport {
    pub samples: usize,
    /// Largest `lhs - rhs` seen over all samples and checked subsets.
    pub max_violation: f64,
    pub violations_over_tol: usize,
    pub precondition_margin: f64,
}

fn csv(idx: &[usize], f: fn(usize) -> String) -> String {
    idx.iter().map(|&i| f(i)).collect::<Vec<_>>().join(",")
}

fn join(parts: &[&str]) -> String {
    parts.iter().filter(|p| !p.is_empty()).cloned().collect::<Vec<_>>().join(",")
}

impl LemmaInequality {
    fn validate(&self, k1: usize, k2: usize) -> Result<()> {
        let mut all: Vec<usize> = self.signal.iter().chain(&self.given).copied().collect();
        all.sort_unstable();
        all.dedup();
        if self.signal.is_empty() || all.len() != self.signal.len() + self.given.len() || all.len() != k1 {
            return Err(Error::OverlappingSets("signal and given inputs must partition the inputs".into()));
        }
        if self.weaker.is_empty() || self.stronger.is_empty() || self.weaker.iter().chain(&self.stronger).any(|&j| j >= k2) {
            return Err(Error::VariableUnknown("receiver index out of range".into()));
        }
        Ok(())
    }

    fn signal_name(&self) -> String {
        if self.aux_u.is_some() {
            "U".into()
        } else {
            csv(&self.signal, input_name)
        }
    }

    /// `(lhs, rhs)` conditioned additionally on `extra`.
    fn sides(&self, extra: &str) -> (LinExpr, LinExpr) {
        let g = csv(&self.given, input_name);
        let c = join(&[&g, extra]);
        let s = self.signal_name();
        (
            MiTerm::of(&s, &csv(&self.weaker, output_name), &c).into(),
            MiTerm::of(&s, &csv(&self.stronger, output_name), &c).into(),
        )
    }

    fn product_spec(&self, ch: &DiscreteChannel) -> ConditionSpec {
        let mut cards = ch.input_vars();
        let mut factors = Vec::new();
        let sig: Vec<String> = self.signal.iter().map(|&i| input_name(i)).collect();
        if let Some(u) = self.aux_u {
            cards.push(("U".into(), u));
            let mut v = vec!["U".to_string()];
            v.extend(sig);
            factors.push(Factor::marginal(&v));
        } else {
            factors.push(Factor::marginal(&sig));
        }
        for &i in &self.given {
            factors.push(Factor::marginal(&[input_name(i)]));
        }
        let (lhs, rhs) = self.sides("");
        ConditionSpec {
            id: "LEMMA-PRECONDITION".into(),
            k1: ch.topology.k1,
            k2: ch.topology.k2,
            input_alphabets: ch.input_alphabets.clone(),
            rows: vec![ConditionRow {
                label: format!("{lhs} <= {rhs}"),
                lhs,
                rhs,
                family: FamilySpec::new(cards, factors),
                sample_family: None,
                boundary: None,
            }],
            notes: vec![],
        }
    }

    /// Margin-form checks applied to every sampled joint: the conditioned
    /// inequality and, without an auxiliary, every split of the signal set.
    fn checks(&self) -> Vec<(LinExpr, LinExpr)> {
        if self.aux_u.is_some() {
            return vec![self.sides("D")];
        }
        let n = self.signal.len();
        let mut out = Vec::new();
        for mask in 0u32..(1 << n) - 1 {
            let moved: Vec<usize> = (0..n).filter(|b| mask >> b & 1 == 1).map(|b| self.signal[b]).collect();
            let rest: Vec<usize> = (0..n).filter(|b| mask >> b & 1 == 0).map(|b| self.signal[b]).collect();
            let g = csv(&self.given, input_name);
            let c = join(&[&csv(&moved, input_name), &g, "D"]);
            let s = csv(&rest, input_name);
            out.push((
                MiTerm::of(&s, &csv(&self.weaker, output_name), &c).into(),
                MiTerm::of(&s, &csv(&self.stronger, output_name), &c).into(),
            ));
        }
        out
    }
}

fn precondition(ch: &DiscreteChannel, ineq: &LemmaInequality, opts: &CheckOptions) -> Result<f64> {
    ineq.validate(ch.topology.k1, ch.topology.k2)?;
    let rep = check_condition(ch, &ineq.product_spec(ch), opts)?;
    if rep.verdict != Verdict::Holds {
        return Err(Error::PreconditionNotEstablished(format!(
            "single-letter inequality {} ({:.3e} bits)",
            rep.verdict.as_str(),
            rep.worst_margin_bits
        )));
    }
    Ok(rep.worst_margin_bits)
}

/// Random joint over `vars`, alternating a flat and a sparse Dirichlet so
/// near-deterministic pmfs get sampled too.
fn random_joint(vars: Vec<Var>, k: usize, rng: &mut ChaCha8Rng) -> JointPmf {
    let size: usize = vars.iter().map(|v| v.card).product();
    let a = if k % 2 == 0 { 1.0 } else { 0.3 };
    let p = dirichlet(&vec![a; size], rng);
    JointPmf::from_parts_normalized(vars, p)
}

fn run_samples(
    ch: &DiscreteChannel,
    ineq: &LemmaInequality,
    samples: usize,
    d_card: usize,
    seed: u64,
    tol: f64,
) -> Result<(f64, usize)> {
    let checks = ineq.checks();
    let mut vars = vec![Var::new("D", d_card)];
    if let Some(u) = ineq.aux_u {
        vars.push(Var::new("U", u));
    }
    vars.extend(ch.input_vars().into_iter().map(|(n, c)| Var::new(n, c)));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_violation = f64::NEG_INFINITY;
    let mut over = 0;
    let mut compiled = None;
    for k in 0..samples {
        let joint = induced_joint(&random_joint(vars.clone(), k, &mut rng), ch)?;
        if compiled.is_none() {
            let v = checks
                .iter()
                .map(|(l, r)| Ok((l.compile(&joint)?, r.compile(&joint)?)))
                .collect::<Result<Vec<_>>>()?;
            compiled = Some(v);
        }
        let c = compiled.as_ref().expect("compiled above");
        let mut cache = EntropyCache::new(&joint);
        for (l, r) in c {
            let v = l.eval(&mut cache) - r.eval(&mut cache);
            if v > max_violation {
                max_violation = v;
            }
            if v > tol {
                over += 1;
            }
        }
    }
    Ok((max_violation, over))
}

/// Samples joints `P_{D (U) X}` through the channel and checks the
/// conditioned inequality (and its signal splits) after confirming the
/// single-letter inequality over its product family.
pub fn verify_extension_lemma(
    channel: &DiscreteChannel,
    ineq: &LemmaInequality,
    samples: usize,
    d_card: usize,
    opts: &CheckOptions,
) -> Result<LemmaReport> {
    let precondition_margin = precondition(channel, ineq, opts)?;
    let (max_violation, violations_over_tol) = run_samples(channel, ineq, samples, d_card, opts.seed, 1e-9)?;
    Ok(LemmaReport { samples, max_violation, violations_over_tol, precondition_margin })
}

/// Memoryless two-use extension: each input and output alphabet is squared,
/// symbol `a*c + b` standing for the pair (a, b).
pub fn two_letter_channel(ch: &DiscreteChannel, cap: usize) -> Result<DiscreteChannel> {
    let ins: Vec<usize> = ch.input_alphabets.iter().map(|c| c * c).collect();
    let outs: Vec<usize> = ch.output_alphabets.iter().map(|c| c * c).collect();
    if let Some(c) = ins.iter().chain(&outs).find(|&&c| c > cap) {
        return Err(Error::AlphabetTooLarge(format!("two-letter alphabet {c} exceeds cap {cap}")));
    }
    let n_in: usize = ins.iter().product();
    let n_out: usize = outs.iter().product();
    let mut tensor = vec![0.0; n_in * n_out];
    for x in 0..n_in {
        let xd = mixed_radix_decode(x, &ins);
        let x1: Vec<usize> = xd.iter().zip(&ch.input_alphabets).map(|(v, c)| v / c).collect();
        let x2: Vec<usize> = xd.iter().zip(&ch.input_alphabets).map(|(v, c)| v % c).collect();
        let r1 = ch.row(mixed_radix_encode(&x1, &ch.input_alphabets));
        let r2 = ch.row(mixed_radix_encode(&x2, &ch.input_alphabets));
        for y in 0..n_out {
            let yd = mixed_radix_decode(y, &outs);
            let y1: Vec<usize> = yd.iter().zip(&ch.output_alphabets).map(|(v, c)| v / c).collect();
            let y2: Vec<usize> = yd.iter().zip(&ch.output_alphabets).map(|(v, c)| v % c).collect();
            tensor[x * n_out + y] = r1[mixed_radix_encode(&y1, &ch.output_alphabets)]
                * r2[mixed_radix_encode(&y2, &ch.output_alphabets)];
        }
    }
    DiscreteChannel::with_cap(ch.topology.clone(), ins, outs, tensor, cap)
}

/// Checks the conditioned inequality on the two-use extension for random
/// joints over pairs of input symbols and D.
pub fn verify_two_letter(
    channel: &DiscreteChannel,
    ineq: &LemmaInequality,
    samples: usize,
    d_card: usize,
    cap: usize,
    opts: &CheckOptions,
) -> Result<LemmaReport> {
    let main = LemmaInequality { aux_u: None, ..ineq.clone() };
    let precondition_margin = precondition(channel, &main, opts)?;
    let two = two_letter_channel(channel, cap)?;
    let (max_violation, violations_over_tol) = run_two(&two, &main, samples, d_card, opts.seed)?;
    Ok(LemmaReport { samples, max_violation, violations_over_tol, precondition_margin })
}

fn run_two(two: &DiscreteChannel, ineq: &LemmaInequality, samples: usize, d_card: usize, seed: u64) -> Result<(f64, usize)> {
    let (l, r) = ineq.sides("D");
    let mut vars = vec![Var::new("D", d_card)];
    vars.extend(two.input_vars().into_iter().map(|(n, c)| Var::new(n, c)));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_violation = f64::NEG_INFINITY;
    let mut over = 0;
    for k in 0..samples {
        let joint = induced_joint(&random_joint(vars.clone(), k, &mut rng), two)?;
        let v = l.eval(&joint)? - r.eval(&joint)?;
        max_violation = max_violation.max(v);
        if v > 1e-9 {
            over += 1;
        }
    }
    Ok((max_violation, over))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn swap() -> DiscreteChannel {
        DiscreteChannel::deterministic(&[&["M1"], &["M2"]], &[&["M2"], &["M1"]], vec![2, 2], vec![2, 2], |x| vec![x[1], x[0]])
            .unwrap()
    }

    fn parallel() -> DiscreteChannel {
        DiscreteChannel::deterministic(&[&["M1"], &["M2"]], &[&["M1"], &["M2"]], vec![2, 2], vec![2, 2], |x| vec![x[0], x[1]])
            .unwrap()
    }

    fn first_row() -> LemmaInequality {
        LemmaInequality { signal: vec![0], given: vec![1], weaker: vec![0], stronger: vec![1], aux_u: None }
    }

    fn fast() -> CheckOptions {
        CheckOptions { grid: Some(4), samples: 10, refine_steps: 2, ..CheckOptions::default() }
    }

    #[test]
    fn swap_extension_has_no_violation() {
        let r = verify_extension_lemma(&swap(), &first_row(), 200, 3, &fast()).unwrap();
        assert!(r.max_violation <= 1e-9, "{}", r.max_violation);
    }

    #[test]
    fn failing_precondition_is_reported() {
        let e = verify_extension_lemma(&parallel(), &first_row(), 10, 2, &fast()).unwrap_err();
        assert_eq!(e.code(), "PRECONDITION_NOT_ESTABLISHED");
        let e = verify_two_letter(&parallel(), &first_row(), 10, 2, 6, &fast()).unwrap_err();
        assert_eq!(e.code(), "PRECONDITION_NOT_ESTABLISHED");
    }

    #[test]
    fn two_letter_swap() {
        let r = verify_two_letter(&swap(), &first_row(), 100, 2, 6, &fast()).unwrap();
        assert!(r.max_violation <= 1e-9);
    }

    #[test]
    fn two_letter_cap() {
        let e = verify_two_letter(&swap(), &first_row(), 1, 2, 3, &fast()).unwrap_err();
        assert_eq!(e.code(), "ALPHABET_TOO_LARGE");
    }
}
