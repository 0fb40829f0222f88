//! Regime conditions: mutual-information inequalities quantified over
//! distribution families, checked on lattice grids with random samples and
//! local refinement, plus Gaussian gain criteria and small-alphabet verifiers
//! for the extension lemmas.

mod catalog;
mod gaussian;
mod lemmas;
mod partition;

pub use catalog::{discrete_condition, CatalogOptions, DISCRETE_IDS};
pub use gaussian::{gaussian_gain_check, gaussian_gain_check_split, lemma2_witness, GainReport, Lemma2Construction, GAUSSIAN_IDS, G_CRC_ALPHA_POINTS};
pub use lemmas::{verify_extension_lemma, verify_two_letter, LemmaInequality, LemmaReport};
pub use partition::{default_th11_plan, enumerate_th11_plans, validate_th11_plan, Th11Plan, Th11Stage};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{CompiledExpr, LinExpr};
use crate::infocalc::{induced_joint, EntropyCache, Family, FamilyPoint, FamilySpec, JointPmf};
use crate::netmodel::DiscreteChannel;
use crate::ratepoly::{direction_grid, RatePolytope};

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_TOL: f64 = 1e-6;
/// Margins at or above `-HOLD_SLACK` count as satisfied.
pub const HOLD_SLACK: f64 = 1e-10;
/// Largest family grid a single row may enumerate.
pub const MAX_GRID_POINTS: u64 = 5_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

impl Verdict {
    pub fn from_margin(worst: f64, tol: f64) -> Verdict {
        if worst >= -HOLD_SLACK {
            Verdict::Holds
        } else if worst >= -tol {
            Verdict::Inconclusive
        } else {
            Verdict::Fails
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Holds => "HOLDS",
            Verdict::Fails => "FAILS",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

/// Rate region whose support-maximizing pmfs restrict a boundary row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryRegion {
    pub rates: Vec<String>,
    /// `coeffs . R <= expr`.
    pub rows: Vec<(Vec<f64>, LinExpr)>,
}

/// One inequality `lhs <= rhs` quantified over `family`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionRow {
    pub label: String,
    pub lhs: LinExpr,
    pub rhs: LinExpr,
    pub family: FamilySpec,
    /// Family used for the random-sample stage when it differs from the grid
    /// family (e.g. stochastic auxiliaries gridded deterministically).
    #[serde(default)]
    pub sample_family: Option<FamilySpec>,
    /// When set, the row is only required on pmfs attaining the region's
    /// support maxima.
    #[serde(default)]
    pub boundary: Option<BoundaryRegion>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSpec {
    pub id: String,
    pub k1: usize,
    pub k2: usize,
    pub input_alphabets: Vec<usize>,
    pub rows: Vec<ConditionRow>,
    #[serde(default)]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct CheckOptions {
    /// Grid resolution override; `None` uses per-factor defaults.
    pub grid: Option<usize>,
    pub tol: f64,
    pub samples: usize,
    pub seed: u64,
    pub refine_steps: usize,
    pub workers: Option<usize>,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { grid: None, tol: DEFAULT_TOL, samples: 50, seed: 0, refine_steps: 12, workers: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Grid,
    Sample,
    Refine,
    Boundary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowResult {
    pub label: String,
    pub worst_margin_bits: f64,
    pub stage: Stage,
    pub evaluated: u64,
    pub witness: JointPmf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub id: String,
    pub verdict: Verdict,
    pub worst_margin_bits: f64,
    pub witness: JointPmf,
    pub worst_row: String,
    pub resolution: Option<usize>,
    pub rows: Vec<RowResult>,
    pub notes: Vec<String>,
}

impl ConditionReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "schema_version": REPORT_SCHEMA_VERSION,
            "id": self.id,
            "verdict": self.verdict.as_str(),
            "worst_margin_bits": self.worst_margin_bits,
            "witness_pmf": self.witness.to_json(),
            "resolution": self.resolution,
            "worst_row": self.worst_row,
            "rows": self.rows.iter().map(|r| serde_json::json!({
                "label": r.label,
                "worst_margin_bits": r.worst_margin_bits,
                "stage": r.stage,
                "evaluated": r.evaluated,
            })).collect::<Vec<_>>(),
            "notes": self.notes,
        })
    }
}

/// Evaluates `rhs - lhs` at family points for a fixed channel.
struct RowEvaluator<'a> {
    channel: &'a DiscreteChannel,
    family: Family,
    lhs: CompiledExpr,
    rhs: CompiledExpr,
}

impl<'a> RowEvaluator<'a> {
    fn new(channel: &'a DiscreteChannel, row: &ConditionRow, spec: &FamilySpec) -> Result<Self> {
        let family = spec.compile()?;
        if family.len() > MAX_GRID_POINTS {
            return Err(Error::TooLarge(family.len() as usize));
        }
        let probe = induced_joint(&family.member(0), channel)?;
        let lhs = row.lhs.compile(&probe)?;
        let rhs = row.rhs.compile(&probe)?;
        Ok(RowEvaluator { channel, family, lhs, rhs })
    }

    fn joint(&self, point: &FamilyPoint) -> Result<JointPmf> {
        induced_joint(&self.family.assemble(point), self.channel)
    }

    fn margin_of_joint(&self, joint: &JointPmf) -> f64 {
        let mut cache = EntropyCache::new(joint);
        self.rhs.eval(&mut cache) - self.lhs.eval(&mut cache)
    }

    fn margin(&self, point: &FamilyPoint) -> Result<f64> {
        Ok(self.margin_of_joint(&self.joint(point)?))
    }

    /// Minimum margin over the grid, first index on ties.
    fn scan_grid(&self) -> Result<(f64, u64)> {
        let n = self.family.len();
        let chunk = 256u64;
        let chunks: Vec<u64> = (0..n.div_ceil(chunk)).collect();
        let best = chunks
            .par_iter()
            .map(|&c| -> Result<(f64, u64)> {
                let mut best = (f64::INFINITY, u64::MAX);
                for idx in c * chunk..((c + 1) * chunk).min(n) {
                    let m = self.margin(&self.family.point(idx))?;
                    if m < best.0 {
                        best = (m, idx);
                    }
                }
                Ok(best)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(best.into_iter().fold((f64::INFINITY, 0), |acc, b| if b.0 < acc.0 { b } else { acc }))
    }
}

fn input_marginal(joint: &JointPmf, k2: usize) -> Result<JointPmf> {
    let names: Vec<String> = joint.names();
    joint.marginal(&names[..names.len() - k2])
}

fn check_row(
    channel: &DiscreteChannel,
    row: &ConditionRow,
    opts: &CheckOptions,
    row_index: usize,
) -> Result<RowResult> {
    let mut spec = row.family.clone();
    if let Some(g) = opts.grid {
        spec = spec.with_resolution(g);
    }
    let ev = RowEvaluator::new(channel, row, &spec)?;
    let k2 = channel.output_alphabets.len();
    if let Some(region) = &row.boundary {
        return check_boundary_row(&ev, row, region, k2);
    }
    let (mut best, idx) = ev.scan_grid()?;
    let mut evaluated = ev.family.len();
    let mut best_point = ev.family.point(idx);
    let mut best_joint = ev.joint(&best_point)?;
    let mut stage = Stage::Grid;

    // random samples, optionally from a richer family
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(row_index as u64));
    let sample_ev = match &row.sample_family {
        Some(f) => Some(RowEvaluator::new(channel, row, f)?),
        None => None,
    };
    let sampler = sample_ev.as_ref().unwrap_or(&ev);
    for _ in 0..opts.samples {
        let p = sampler.family.random_point(&mut rng);
        let joint = sampler.joint(&p)?;
        let m = sampler.margin_of_joint(&joint);
        evaluated += 1;
        if m < best - 1e-12 {
            best = m;
            best_joint = joint;
            stage = Stage::Sample;
            if sample_ev.is_none() {
                best_point = p;
            }
        }
    }

    // greedy descent on the doubled lattice around the best grid/sample point
    let base_res = ev.family.resolutions().into_iter().max().unwrap_or(1).max(1);
    let res = base_res * 2;
    let mut counts = ev.family.to_counts(&best_point, res);
    let mut cur = ev.margin(&ev.family.from_counts(&counts))?;
    evaluated += 1;
    for _ in 0..opts.refine_steps {
        let mut improved = None;
        for nb in ev.family.lattice_neighbors(&counts) {
            let m = ev.margin(&ev.family.from_counts(&nb))?;
            evaluated += 1;
            if m < cur - 1e-12 && improved.as_ref().is_none_or(|(bm, _)| m < *bm) {
                improved = Some((m, nb));
            }
        }
        match improved {
            Some((m, nb)) => {
                cur = m;
                counts = nb;
            }
            None => break,
        }
    }
    if cur < best - 1e-12 {
        best = cur;
        best_joint = ev.joint(&ev.family.from_counts(&counts))?;
        stage = Stage::Refine;
    }
    Ok(RowResult {
        label: row.label.clone(),
        worst_margin_bits: best,
        stage,
        evaluated,
        witness: input_marginal(&best_joint, k2)?,
    })
}

fn check_boundary_row(ev: &RowEvaluator<'_>, row: &ConditionRow, region: &BoundaryRegion, k2: usize) -> Result<RowResult> {
    let n = ev.family.len();
    let probe = ev.joint(&ev.family.point(0))?;
    let bounds: Vec<CompiledExpr> = region.rows.iter().map(|(_, e)| e.compile(&probe)).collect::<Result<_>>()?;
    let dirs = direction_grid(region.rates.len());
    let per_point: Vec<(Vec<f64>, f64)> = (0..n)
        .into_par_iter()
        .map(|idx| -> Result<(Vec<f64>, f64)> {
            let joint = ev.joint(&ev.family.point(idx))?;
            let mut cache = EntropyCache::new(&joint);
            let mut poly = RatePolytope::new(&region.rates);
            for ((coeffs, _), b) in region.rows.iter().zip(&bounds) {
                poly.add_row(coeffs.clone(), b.eval(&mut cache).max(0.0))?;
            }
            let support = dirs
                .iter()
                .map(|d| Ok(poly.support(d)?.map_or(f64::NEG_INFINITY, |(v, _)| v)))
                .collect::<Result<Vec<f64>>>()?;
            let margin = ev.rhs.eval(&mut cache) - ev.lhs.eval(&mut cache);
            Ok((support, margin))
        })
        .collect::<Result<_>>()?;
    let mut maximizers: Vec<u64> = Vec::new();
    for d in 0..dirs.len() {
        let mut arg = 0usize;
        for (i, (s, _)) in per_point.iter().enumerate() {
            if s[d] > per_point[arg].0[d] + 1e-12 {
                arg = i;
            }
        }
        if !maximizers.contains(&(arg as u64)) {
            maximizers.push(arg as u64);
        }
    }
    maximizers.sort_unstable();
    let (mut best, mut best_idx) = (f64::INFINITY, 0u64);
    for &idx in &maximizers {
        let m = per_point[idx as usize].1;
        if m < best {
            best = m;
            best_idx = idx;
        }
    }
    let joint = ev.joint(&ev.family.point(best_idx))?;
    Ok(RowResult {
        label: row.label.clone(),
        worst_margin_bits: best,
        stage: Stage::Boundary,
        evaluated: n,
        witness: input_marginal(&joint, k2)?,
    })
}

/// Checks every row of `spec` on `channel`: grid at the configured resolution,
/// `samples` random members, then greedy refinement on the doubled lattice
/// around the worst point. Boundary rows are checked on the support maximizers
/// of their region only.
pub fn check_condition(channel: &DiscreteChannel, spec: &ConditionSpec, opts: &CheckOptions) -> Result<ConditionReport> {
    if channel.topology.k1 != spec.k1 || channel.topology.k2 != spec.k2 {
        return Err(Error::TopologyMismatch(format!(
            "{} was built for k1={}, k2={}; channel has k1={}, k2={}",
            spec.id, spec.k1, spec.k2, channel.topology.k1, channel.topology.k2
        )));
    }
    if channel.input_alphabets != spec.input_alphabets {
        return Err(Error::AlphabetMismatch(format!(
            "{} was built for input alphabets {:?}, channel has {:?}",
            spec.id, spec.input_alphabets, channel.input_alphabets
        )));
    }
    let rows = crate::ratepoly::with_workers(opts.workers, || {
        spec.rows
            .iter()
            .enumerate()
            .map(|(i, r)| check_row(channel, r, opts, i).map_err(|e| e.at(format!("{} row {}", spec.id, r.label))))
            .collect::<Result<Vec<_>>>()
    })?;
    let mut notes = spec.notes.clone();
    if rows.is_empty() {
        notes.push("no nontrivial inequality for this topology".into());
        let empty = JointPmf::uniform(vec![crate::infocalc::Var::new("X1", 1)])?;
        return Ok(ConditionReport {
            id: spec.id.clone(),
            verdict: Verdict::Holds,
            worst_margin_bits: 0.0,
            witness: empty,
            worst_row: String::new(),
            resolution: opts.grid,
            rows,
            notes,
        });
    }
    let mut worst = 0;
    for (i, r) in rows.iter().enumerate() {
        if r.worst_margin_bits < rows[worst].worst_margin_bits {
            worst = i;
        }
    }
    let w = &rows[worst];
    Ok(ConditionReport {
        id: spec.id.clone(),
        verdict: Verdict::from_margin(w.worst_margin_bits, opts.tol),
        worst_margin_bits: w.worst_margin_bits,
        witness: w.witness.clone(),
        worst_row: w.label.clone(),
        resolution: opts.grid,
        rows: rows.clone(),
        notes,
    })
}

/// Margin `rhs - lhs` of every row at one input pmf (inputs plus any
/// auxiliaries the rows use).
pub fn margins_at(channel: &DiscreteChannel, spec: &ConditionSpec, input: &JointPmf) -> Result<Vec<f64>> {
    let joint = induced_joint(input, channel)?;
    spec.rows
        .iter()
        .map(|r| Ok(r.rhs.eval(&joint)? - r.lhs.eval(&joint)?))
        .collect()
}

/// Builds the condition family for `id` from the channel and checks it.
pub fn check_catalog(channel: &DiscreteChannel, id: &str, catalog: &CatalogOptions, opts: &CheckOptions) -> Result<ConditionReport> {
    let spec = discrete_condition(id, channel, catalog)?;
    check_condition(channel, &spec, opts)
}
