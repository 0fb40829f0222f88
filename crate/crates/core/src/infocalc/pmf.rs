use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A named finite random variable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Var {
    pub name: String,
    pub card: usize,
}

impl Var {
    pub fn new(name: impl Into<String>, card: usize) -> Self {
        Var { name: name.into(), card }
    }
}

/// Joint pmf over an ordered list of variables. The table is row-major with the
/// first variable most significant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointPmf {
    vars: Vec<Var>,
    table: Vec<f64>,
}

pub(crate) fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

impl JointPmf {
    pub fn new(vars: Vec<Var>, table: Vec<f64>) -> Result<Self> {
        let size: usize = vars.iter().map(|v| v.card).product();
        if size != table.len() {
            return Err(Error::AlphabetMismatch(format!(
                "table has {} entries, alphabets need {}",
                table.len(),
                size
            )));
        }
        for (i, v) in vars.iter().enumerate() {
            if v.card == 0 {
                return Err(Error::AlphabetMismatch(format!("variable {} has empty alphabet", v.name)));
            }
            if vars[..i].iter().any(|w| w.name == v.name) {
                return Err(Error::OverlappingSets(v.name.clone()));
            }
        }
        if let Some(p) = table.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidChannel(format!("negative or non-finite probability {p}")));
        }
        let total = neumaier_sum(table.iter().copied());
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidChannel(format!("pmf sums to {total}")));
        }
        Ok(JointPmf { vars, table })
    }

    /// Builds a pmf from values that are known to be a distribution up to
    /// rounding; renormalizes instead of validating the sum.
    pub(crate) fn from_parts_normalized(vars: Vec<Var>, mut table: Vec<f64>) -> Self {
        let total = neumaier_sum(table.iter().copied());
        if total > 0.0 && total != 1.0 {
            for p in table.iter_mut() {
                *p /= total;
            }
        }
        JointPmf { vars, table }
    }

    pub fn uniform(vars: Vec<Var>) -> Result<Self> {
        let size: usize = vars.iter().map(|v| v.card).product();
        JointPmf::new(vars, vec![1.0 / size as f64; size])
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn names(&self) -> Vec<String> {
        self.vars.iter().map(|v| v.name.clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.vars
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| Error::VariableUnknown(name.to_string()))
    }

    pub fn card(&self, name: &str) -> Result<usize> {
        Ok(self.vars[self.index_of(name)?].card)
    }

    pub fn mask_of<S: AsRef<str>>(&self, names: &[S]) -> Result<u64> {
        if self.vars.len() > 64 {
            return Err(Error::AlphabetTooLarge("more than 64 variables".into()));
        }
        let mut mask = 0u64;
        for n in names {
            mask |= 1u64 << self.index_of(n.as_ref())?;
        }
        Ok(mask)
    }

    /// Shannon entropy (bits) of the marginal on the variables in `mask`.
    pub fn entropy_mask(&self, mask: u64) -> f64 {
        if mask == 0 {
            return 0.0;
        }
        let marg = self.marginal_table(mask);
        neumaier_sum(marg.into_iter().map(plogp))
    }

    /// Marginal table over the variables in `mask`, in their original order.
    pub fn marginal_table(&self, mask: u64) -> Vec<f64> {
        let n = self.vars.len();
        let mut weights = vec![0usize; n];
        let mut size = 1usize;
        for i in (0..n).rev() {
            if mask & (1u64 << i) != 0 {
                weights[i] = size;
                size *= self.vars[i].card;
            }
        }
        let mut marg = vec![0.0; size];
        if n == 0 {
            marg[0] = self.table.first().copied().unwrap_or(1.0);
            return marg;
        }
        let mut digits = vec![0usize; n];
        let mut m = 0usize;
        for &p in &self.table {
            marg[m] += p;
            // odometer increment, last variable fastest
            let mut i = n;
            while i > 0 {
                i -= 1;
                digits[i] += 1;
                m += weights[i];
                if digits[i] < self.vars[i].card {
                    break;
                }
                m -= weights[i] * digits[i];
                digits[i] = 0;
            }
        }
        marg
    }

    pub fn entropy<S: AsRef<str>>(&self, names: &[S]) -> Result<f64> {
        Ok(self.entropy_mask(self.mask_of(names)?))
    }

    fn check_sets<S: AsRef<str>>(&self, a: &[S], b: &[S], c: &[S]) -> Result<(u64, u64, u64)> {
        let ma = self.mask_of(a)?;
        let mb = self.mask_of(b)?;
        let mc = self.mask_of(c)?;
        let overlap = (ma & mb) | (ma & mc) | (mb & mc);
        if overlap != 0 {
            let i = overlap.trailing_zeros() as usize;
            return Err(Error::OverlappingSets(self.vars[i].name.clone()));
        }
        Ok((ma, mb, mc))
    }

    /// I(A;B|C) in bits.
    pub fn conditional_mutual_information<S: AsRef<str>>(&self, a: &[S], b: &[S], c: &[S]) -> Result<f64> {
        let (ma, mb, mc) = self.check_sets(a, b, c)?;
        Ok(self.cmi_masks(ma, mb, mc))
    }

    pub fn cmi_masks(&self, ma: u64, mb: u64, mc: u64) -> f64 {
        if ma == 0 || mb == 0 {
            return 0.0;
        }
        self.entropy_mask(ma | mc) + self.entropy_mask(mb | mc) - self.entropy_mask(ma | mb | mc) - self.entropy_mask(mc)
    }

    /// Marginal pmf on the named variables, in the order given.
    pub fn marginal<S: AsRef<str>>(&self, names: &[S]) -> Result<JointPmf> {
        let idx: Vec<usize> = names.iter().map(|n| self.index_of(n.as_ref())).collect::<Result<_>>()?;
        for (k, i) in idx.iter().enumerate() {
            if idx[..k].contains(i) {
                return Err(Error::OverlappingSets(self.vars[*i].name.clone()));
            }
        }
        let vars: Vec<Var> = idx.iter().map(|&i| self.vars[i].clone()).collect();
        let size: usize = vars.iter().map(|v| v.card).product();
        let mut out = vec![0.0; size];
        let strides = self.strides();
        for (flat, &p) in self.table.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let mut m = 0usize;
            for &i in &idx {
                m = m * self.vars[i].card + (flat / strides[i]) % self.vars[i].card;
            }
            out[m] += p;
        }
        Ok(JointPmf::from_parts_normalized(vars, out))
    }

    pub fn strides(&self) -> Vec<usize> {
        let n = self.vars.len();
        let mut s = vec![1usize; n];
        for i in (0..n.saturating_sub(1)).rev() {
            s[i] = s[i + 1] * self.vars[i + 1].card;
        }
        s
    }

    /// Digits of a flat index, one per variable.
    pub fn decode(&self, mut flat: usize) -> Vec<usize> {
        let mut d = vec![0; self.vars.len()];
        for i in (0..self.vars.len()).rev() {
            d[i] = flat % self.vars[i].card;
            flat /= self.vars[i].card;
        }
        d
    }

    pub fn encode(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.vars).fold(0, |acc, (d, v)| acc * v.card + d)
    }

    /// Appends a variable that is a deterministic function of existing ones.
    pub fn with_function<F>(&self, name: &str, card: usize, f: F) -> Result<JointPmf>
    where
        F: Fn(&[usize]) -> usize,
    {
        if self.index_of(name).is_ok() {
            return Err(Error::OverlappingSets(name.to_string()));
        }
        let mut vars = self.vars.clone();
        vars.push(Var::new(name, card));
        let mut table = vec![0.0; self.table.len() * card];
        for (flat, &p) in self.table.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let v = f(&self.decode(flat));
            if v >= card {
                return Err(Error::AlphabetMismatch(format!("function value {v} outside alphabet of {name}")));
            }
            table[flat * card + v] = p;
        }
        Ok(JointPmf { vars, table })
    }

    /// Serializes the pmf in the channel-spec number format for debugging dumps.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "variables": self.vars.iter().map(|v| serde_json::json!({"name": v.name, "card": v.card})).collect::<Vec<_>>(),
            "table": self.table,
        })
    }
}

/// Memoizing entropy evaluator for repeated MI queries on one pmf.
pub struct EntropyCache<'a> {
    pmf: &'a JointPmf,
    cache: HashMap<u64, f64>,
}

impl<'a> EntropyCache<'a> {
    pub fn new(pmf: &'a JointPmf) -> Self {
        EntropyCache { pmf, cache: HashMap::new() }
    }

    pub fn pmf(&self) -> &JointPmf {
        self.pmf
    }

    pub fn h(&mut self, mask: u64) -> f64 {
        if mask == 0 {
            return 0.0;
        }
        if let Some(v) = self.cache.get(&mask) {
            return *v;
        }
        let v = self.pmf.entropy_mask(mask);
        self.cache.insert(mask, v);
        v
    }

    pub fn cmi(&mut self, ma: u64, mb: u64, mc: u64) -> f64 {
        if ma == 0 || mb == 0 {
            return 0.0;
        }
        self.h(ma | mc) + self.h(mb | mc) - self.h(ma | mb | mc) - self.h(mc)
    }
}
