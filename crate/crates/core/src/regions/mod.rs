//! Rate-region templates: per-pmf polytopes for named regions, the generic
//! compound-MAC and superposition regions, the broadcast-with-relays inner
//! bound, and less-noisy sum-rate evaluators.

mod bccr;
mod catalog;
mod crccm;
mod generic;
mod sumrate;

use serde::{Deserialize, Serialize};

pub use bccr::{bccr_inner_polytope, bccr_inner_polytope_no_common, BccrInner, BCCR_VARS};
pub use catalog::{region_template, templates_for, TEMPLATE_IDS};
pub use crccm::{crccm_capacity_polytope, crccm_fm_reduction, CrccmReduction};
pub use generic::{maccm_family, rate_name, superposition_polytope, superposition_rows, SuperpositionMode, MAX_ENCODER_MAPS};
pub use sumrate::{gaussian_cic_sumrate, lessnoisy_sumrate, SumRateKind, SumRateMaximizer, SumRateOptions, SumRateResult};

use crate::error::{Error, Result};
use crate::expr::{CompiledExpr, LinExpr};
use crate::infocalc::{induced_joint, EntropyCache, FamilySpec, JointPmf};
use crate::netmodel::DiscreteChannel;
use crate::ratepoly::{sweep_union_indexed, with_workers, RatePolytope, RegionEstimate};
use crate::regimes::MAX_GRID_POINTS;

/// Tolerance of the family membership check in [`evaluate_template`].
pub const FAMILY_TOL: f64 = 1e-9;

/// Auxiliary alphabet sizes used when building templates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuxCards {
    pub w: usize,
    pub u: usize,
    pub v: usize,
    pub z: usize,
    pub d: usize,
    /// Alphabet of each message variable in Han-form families.
    pub messages: usize,
}

impl Default for AuxCards {
    fn default() -> Self {
        AuxCards { w: 2, u: 2, v: 2, z: 3, d: 4, messages: 2 }
    }
}

impl AuxCards {
    /// Parses `W=2,U=2,V=2,Z=3` (any subset, also `D=` and `M=`).
    pub fn parse(s: &str) -> Result<Self> {
        let mut out = AuxCards::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| Error::Parse(format!("expected NAME=card, got {part:?}")))?;
            let n: usize = v.trim().parse().map_err(|_| Error::Parse(format!("bad cardinality in {part:?}")))?;
            if n == 0 {
                return Err(Error::Parse(format!("cardinality must be positive in {part:?}")));
            }
            match k.trim() {
                "W" => out.w = n,
                "U" => out.u = n,
                "V" => out.v = n,
                "Z" => out.z = n,
                "D" => out.d = n,
                "M" => out.messages = n,
                other => return Err(Error::Parse(format!("unknown auxiliary {other:?}"))),
            }
        }
        Ok(out)
    }
}

/// `sum_k coeff_k * R_k <= min(bounds)`; each bound becomes its own row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateRow {
    pub terms: Vec<(String, f64)>,
    pub bounds: Vec<LinExpr>,
}

impl TemplateRow {
    /// Row from a `+`-separated rate list such as `"R0+R1"`.
    pub fn new(rates: &str, bounds: Vec<LinExpr>) -> Self {
        TemplateRow {
            terms: rates.split('+').map(str::trim).filter(|r| !r.is_empty()).map(|r| (r.to_string(), 1.0)).collect(),
            bounds,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionTemplate {
    pub id: String,
    /// Every rate variable of the system, including split parts.
    pub rates: Vec<String>,
    /// Rate variables projected out after evaluation.
    pub eliminate: Vec<String>,
    pub family: FamilySpec,
    pub rows: Vec<TemplateRow>,
    pub notes: Vec<String>,
}

impl RegionTemplate {
    /// Rates of the evaluated polytope.
    pub fn output_rates(&self) -> Vec<String> {
        self.rates.iter().filter(|r| !self.eliminate.contains(r)).cloned().collect()
    }

    fn validate(&self) -> Result<()> {
        for row in &self.rows {
            for (r, _) in &row.terms {
                if !self.rates.contains(r) {
                    return Err(Error::VariableUnknown(format!("{} row references undeclared rate {r}", self.id)));
                }
            }
            for b in &row.bounds {
                for v in b.variables() {
                    let known = self.family.card(&v).is_some() || v.starts_with('Y');
                    if !known {
                        return Err(Error::VariableUnknown(format!("{} uses {v} outside its family", self.id)));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Row bounds below this magnitude are treated as exact zeros.
const ZERO_CLAMP: f64 = 1e-12;

struct CompiledTemplate<'a> {
    tpl: &'a RegionTemplate,
    rows: Vec<(Vec<f64>, Vec<CompiledExpr>)>,
}

impl<'a> CompiledTemplate<'a> {
    fn new(tpl: &'a RegionTemplate, joint: &JointPmf) -> Result<Self> {
        tpl.validate()?;
        let rows = tpl
            .rows
            .iter()
            .map(|row| {
                let mut coeffs = vec![0.0; tpl.rates.len()];
                for (r, c) in &row.terms {
                    let k = tpl.rates.iter().position(|x| x == r).expect("validated");
                    coeffs[k] += c;
                }
                let bounds = row.bounds.iter().map(|b| b.compile(joint)).collect::<Result<Vec<_>>>()?;
                Ok((coeffs, bounds))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CompiledTemplate { tpl, rows })
    }

    fn polytope(&self, joint: &JointPmf) -> Result<RatePolytope> {
        let mut cache = EntropyCache::new(joint);
        let mut p = RatePolytope::new(&self.tpl.rates);
        for (coeffs, bounds) in &self.rows {
            for b in bounds {
                let mut v = b.eval(&mut cache);
                if v.abs() < ZERO_CLAMP {
                    v = 0.0;
                }
                p.add_row(coeffs.clone(), v)?;
            }
        }
        if self.tpl.eliminate.is_empty() {
            Ok(p)
        } else {
            p.fourier_motzkin_eliminate(&self.tpl.eliminate)
        }
    }
}

/// Polytope of `tpl` at one pmf over its family variables.
pub fn evaluate_template(tpl: &RegionTemplate, channel: &DiscreteChannel, pmf: &JointPmf) -> Result<RatePolytope> {
    tpl.family.check_member(pmf, FAMILY_TOL).map_err(|e| Error::FamilyViolation(format!("{}: {e}", tpl.id)))?;
    let joint = induced_joint(pmf, channel)?;
    CompiledTemplate::new(tpl, &joint)?.polytope(&joint)
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SweepOptions {
    /// Grid resolution for every non-deterministic factor; `None` uses the
    /// per-factor defaults.
    pub grid: Option<usize>,
    pub workers: Option<usize>,
}

/// Union of the template's polytopes over its family grid; the convex hull
/// stands in for time sharing.
pub fn sweep_template(tpl: &RegionTemplate, channel: &DiscreteChannel, opts: &SweepOptions) -> Result<RegionEstimate> {
    let spec = match opts.grid {
        Some(g) => tpl.family.clone().with_resolution(g),
        None => tpl.family.clone(),
    };
    let fam = spec.compile()?;
    if fam.len() > MAX_GRID_POINTS {
        return Err(Error::TooLarge(fam.len() as usize));
    }
    let joint0 = induced_joint(&fam.member(0), channel)?;
    let compiled = CompiledTemplate::new(tpl, &joint0)?;
    let out = tpl.output_rates();
    with_workers(opts.workers, || {
        sweep_union_indexed(
            &out,
            fam.len(),
            |i| compiled.polytope(&induced_joint(&fam.member(i), channel)?),
            |i| format!("{} grid point {i}", tpl.id),
        )
    })
}

#[cfg(test)]
mod tests;
