//! Mutual-information expressions over named variables, in the grammar
//! `I(A;B|C)` with comma-separated sets.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::infocalc::{EntropyCache, JointPmf};

/// `I(A;B|C)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MiTerm {
    pub a: Vec<String>,
    pub b: Vec<String>,
    pub c: Vec<String>,
}

fn split_set(s: &str) -> Vec<String> {
    s.split(',').map(|x| x.trim()).filter(|x| !x.is_empty()).map(String::from).collect()
}

impl MiTerm {
    pub fn new<S: AsRef<str>>(a: &[S], b: &[S], c: &[S]) -> Self {
        let conv = |v: &[S]| v.iter().map(|s| s.as_ref().to_string()).collect();
        MiTerm { a: conv(a), b: conv(b), c: conv(c) }
    }

    /// Shorthand with comma-separated sets: `MiTerm::of("X1,X2", "Y1", "W")`.
    pub fn of(a: &str, b: &str, c: &str) -> Self {
        MiTerm { a: split_set(a), b: split_set(b), c: split_set(c) }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim();
        let inner = t
            .strip_prefix("I(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| Error::Parse(format!("expected I(A;B|C), got {t:?}")))?;
        let (a, rest) = inner.split_once(';').ok_or_else(|| Error::Parse(format!("missing ';' in {t:?}")))?;
        let (b, c) = match rest.split_once('|') {
            Some((b, c)) => (b, c),
            None => (rest, ""),
        };
        let term = MiTerm { a: split_set(a), b: split_set(b), c: split_set(c) };
        if term.a.is_empty() || term.b.is_empty() {
            return Err(Error::Parse(format!("empty argument in {t:?}")));
        }
        Ok(term)
    }

    pub fn variables(&self) -> Vec<String> {
        let mut v: Vec<String> = self.a.iter().chain(&self.b).chain(&self.c).cloned().collect();
        v.sort();
        v.dedup();
        v
    }

    pub fn compile(&self, pmf: &JointPmf) -> Result<(u64, u64, u64)> {
        Ok((pmf.mask_of(&self.a)?, pmf.mask_of(&self.b)?, pmf.mask_of(&self.c)?))
    }

    /// Value in bits. Variables shared with the conditioning set are ignored
    /// in the arguments.
    pub fn eval(&self, pmf: &JointPmf) -> Result<f64> {
        let (a, b, c) = self.compile(pmf)?;
        Ok(pmf.cmi_masks(a & !c, b & !c, c))
    }
}

impl fmt::Display for MiTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.c.is_empty() {
            write!(f, "I({};{})", self.a.join(","), self.b.join(","))
        } else {
            write!(f, "I({};{}|{})", self.a.join(","), self.b.join(","), self.c.join(","))
        }
    }
}

/// Linear combination of MI terms plus a constant.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LinExpr {
    pub terms: Vec<(f64, MiTerm)>,
    pub constant: f64,
}

impl From<MiTerm> for LinExpr {
    fn from(t: MiTerm) -> Self {
        LinExpr { terms: vec![(1.0, t)], constant: 0.0 }
    }
}

impl LinExpr {
    pub fn zero() -> Self {
        LinExpr::default()
    }

    pub fn sum<I: IntoIterator<Item = MiTerm>>(terms: I) -> Self {
        LinExpr { terms: terms.into_iter().map(|t| (1.0, t)).collect(), constant: 0.0 }
    }

    pub fn plus(mut self, other: LinExpr) -> Self {
        self.terms.extend(other.terms);
        self.constant += other.constant;
        self
    }

    pub fn minus(mut self, other: LinExpr) -> Self {
        self.terms.extend(other.terms.into_iter().map(|(c, t)| (-c, t)));
        self.constant -= other.constant;
        self
    }

    pub fn variables(&self) -> Vec<String> {
        let mut v: Vec<String> = self.terms.iter().flat_map(|(_, t)| t.variables()).collect();
        v.sort();
        v.dedup();
        v
    }

    pub fn compile(&self, pmf: &JointPmf) -> Result<CompiledExpr> {
        let terms = self
            .terms
            .iter()
            .map(|(k, t)| {
                let (a, b, c) = t.compile(pmf)?;
                Ok((*k, a & !c, b & !c, c))
            })
            .collect::<Result<_>>()?;
        Ok(CompiledExpr { terms, constant: self.constant })
    }

    pub fn eval(&self, pmf: &JointPmf) -> Result<f64> {
        let c = self.compile(pmf)?;
        Ok(c.eval(&mut EntropyCache::new(pmf)))
    }

    /// Parses `I(..) + I(..) - 2*I(..)`.
    pub fn parse(s: &str) -> Result<Self> {
        let mut out = LinExpr::zero();
        let mut rest = s.trim();
        let mut sign = 1.0;
        while !rest.is_empty() {
            if let Some(r) = rest.strip_prefix('+') {
                rest = r.trim_start();
                continue;
            }
            if let Some(r) = rest.strip_prefix('-') {
                sign = -sign;
                rest = r.trim_start();
                continue;
            }
            let mut coef = 1.0;
            if let Some(star) = rest.find('*') {
                if rest[..star].trim().parse::<f64>().is_ok() && rest.find("I(").map_or(false, |p| p > star) {
                    coef = rest[..star].trim().parse::<f64>().unwrap();
                    rest = rest[star + 1..].trim_start();
                }
            }
            if rest.starts_with("I(") {
                let close = rest.find(')').ok_or_else(|| Error::Parse(format!("unclosed term in {s:?}")))?;
                out.terms.push((sign * coef, MiTerm::parse(&rest[..=close])?));
                rest = rest[close + 1..].trim_start();
            } else {
                let end = rest.find(['+', '-']).filter(|&p| p > 0).unwrap_or(rest.len());
                let v: f64 = rest[..end].trim().parse().map_err(|_| Error::Parse(format!("bad token in {s:?}")))?;
                out.constant += sign * v;
                rest = rest[end..].trim_start();
            }
            sign = 1.0;
        }
        Ok(out)
    }
}

impl fmt::Display for LinExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, t) in &self.terms {
            let (sign, mag) = if *k < 0.0 { ("-", -k) } else { ("+", *k) };
            if first {
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            if (mag - 1.0).abs() > 0.0 {
                write!(f, "{mag}*")?;
            }
            write!(f, "{t}")?;
            first = false;
        }
        if self.constant != 0.0 || first {
            if first {
                write!(f, "{}", self.constant)?;
            } else if self.constant < 0.0 {
                write!(f, " - {}", -self.constant)?;
            } else {
                write!(f, " + {}", self.constant)?;
            }
        }
        Ok(())
    }
}

/// Expression compiled against one pmf layout.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledExpr {
    terms: Vec<(f64, u64, u64, u64)>,
    constant: f64,
}

impl CompiledExpr {
    pub fn eval(&self, cache: &mut EntropyCache<'_>) -> f64 {
        self.terms.iter().map(|&(k, a, b, c)| k * cache.cmi(a, b, c)).sum::<f64>() + self.constant
    }
}
