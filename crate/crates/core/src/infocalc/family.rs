use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use super::pmf::{JointPmf, Var};
use crate::error::{Error, Result};

/// All points of the probability simplex of dimension `card` whose coordinates
/// are multiples of `1/g`, in lexicographic ascending order of the counts.
pub fn simplex_grid(card: usize, g: usize) -> Vec<Vec<f64>> {
    simplex_counts(card, g)
        .into_iter()
        .map(|c| c.into_iter().map(|k| k as f64 / g as f64).collect())
        .collect()
}

pub fn simplex_counts(card: usize, g: usize) -> Vec<Vec<usize>> {
    fn rec(card: usize, left: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if card == 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in 0..=left {
            prefix.push(k);
            rec(card - 1, left - k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if card == 0 {
        return out;
    }
    rec(card, g, &mut Vec::with_capacity(card), &mut out);
    out
}

pub fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k.min(n));
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// Default grid resolution for a factor whose joint alphabet has `card` points.
pub fn default_resolution(card: usize) -> usize {
    if card > 3 {
        4
    } else {
        8
    }
}

/// One factor `P(vars | given)` of a family. `resolution = Some(1)` makes the
/// factor deterministic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub vars: Vec<String>,
    pub given: Vec<String>,
    #[serde(default)]
    pub resolution: Option<usize>,
}

impl Factor {
    pub fn new<S: AsRef<str>>(vars: &[S], given: &[S]) -> Self {
        Factor {
            vars: vars.iter().map(|s| s.as_ref().to_string()).collect(),
            given: given.iter().map(|s| s.as_ref().to_string()).collect(),
            resolution: None,
        }
    }

    pub fn marginal<S: AsRef<str>>(vars: &[S]) -> Self {
        Factor::new(vars, &[])
    }

    pub fn deterministic(mut self) -> Self {
        self.resolution = Some(1);
        self
    }

    pub fn with_resolution(mut self, g: usize) -> Self {
        self.resolution = Some(g);
        self
    }
}

/// A factorized family of joint pmfs, realized on a lattice grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub cards: Vec<(String, usize)>,
    pub factors: Vec<Factor>,
    /// Global grid resolution; factors without an override use it, falling back
    /// to [`default_resolution`].
    pub resolution: Option<usize>,
}

impl FamilySpec {
    pub fn new(cards: Vec<(String, usize)>, factors: Vec<Factor>) -> Self {
        FamilySpec { cards, factors, resolution: None }
    }

    pub fn with_resolution(mut self, g: usize) -> Self {
        self.resolution = Some(g);
        self
    }

    /// Product family `P(v1) P(v2) ...` over the named variables.
    pub fn product<S: AsRef<str>>(vars: &[(S, usize)]) -> Self {
        FamilySpec::new(
            vars.iter().map(|(n, c)| (n.as_ref().to_string(), *c)).collect(),
            vars.iter().map(|(n, _)| Factor::marginal(&[n.as_ref()])).collect(),
        )
    }

    pub fn card(&self, name: &str) -> Option<usize> {
        self.cards.iter().find(|(n, _)| n == name).map(|(_, c)| *c)
    }

    pub fn compile(&self) -> Result<Family> {
        Family::new(self)
    }

    /// Checks that `pmf` lies in the family: same variables and alphabets,
    /// the joint equals the product of its factor conditionals within `tol`,
    /// and deterministic factors are 0/1 wherever their condition has mass.
    /// The error string names the first violation.
    pub fn check_member(&self, pmf: &JointPmf, tol: f64) -> std::result::Result<(), String> {
        let names = pmf.names();
        if names.len() != self.cards.len() {
            return Err(format!("pmf has variables {names:?}, family has {:?}", self.cards));
        }
        for (n, c) in &self.cards {
            match pmf.card(n) {
                Ok(k) if k == *c => {}
                Ok(k) => return Err(format!("{n} has {k} values, family expects {c}")),
                Err(_) => return Err(format!("pmf lacks {n}")),
            }
        }
        let strides = pmf.strides();
        let mut conds = Vec::new();
        for f in &self.factors {
            let all: Vec<&String> = f.given.iter().chain(&f.vars).collect();
            let joint = pmf.marginal(&all).map_err(|e| e.to_string())?;
            let given = pmf.marginal(&f.given).map_err(|e| e.to_string())?;
            let pos_all: Vec<usize> = all.iter().map(|n| pmf.index_of(n).unwrap()).collect();
            let pos_given: Vec<usize> = f.given.iter().map(|n| pmf.index_of(n).unwrap()).collect();
            if f.resolution == Some(1) {
                let vc = joint.table().len() / given.table().len();
                for (k, &p) in joint.table().iter().enumerate() {
                    let g = given.table()[k / vc];
                    if g > tol {
                        let r = p / g;
                        if r > tol && (1.0 - r).abs() > tol {
                            return Err(format!("P({:?}|{:?}) is not deterministic", f.vars, f.given));
                        }
                    }
                }
            }
            conds.push((joint, given, pos_all, pos_given));
        }
        for (flat, &p) in pmf.table().iter().enumerate() {
            let digit = |i: usize| (flat / strides[i]) % pmf.vars()[i].card;
            let mut q = 1.0;
            for (joint, given, pa, pg) in &conds {
                let ja = pa.iter().fold(0, |acc, &i| acc * pmf.vars()[i].card + digit(i));
                let ga = pg.iter().fold(0, |acc, &i| acc * pmf.vars()[i].card + digit(i));
                let g = given.table()[ga];
                q *= if g > 0.0 { joint.table()[ja] / g } else { 0.0 };
            }
            if (q - p).abs() > tol {
                let a: Vec<String> = pmf.decode(flat).iter().map(|d| d.to_string()).collect();
                return Err(format!("joint differs from the factor product at ({}) by {:.3e}", a.join(","), (q - p).abs()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct CompiledFactor {
    vars: Vec<usize>,
    given: Vec<usize>,
    joint_card: usize,
    n_cond: usize,
    resolution: usize,
    points: Vec<Vec<f64>>,
}

/// Per factor, per conditioning assignment, a distribution over the factor's
/// joint alphabet.
pub type FamilyPoint = Vec<Vec<Vec<f64>>>;

/// Compiled family with a mixed-radix indexable member space.
#[derive(Debug, Clone)]
pub struct Family {
    vars: Vec<Var>,
    factors: Vec<CompiledFactor>,
    len: u64,
}

impl Family {
    pub fn new(spec: &FamilySpec) -> Result<Self> {
        // topological order of factors
        let mut produced: Vec<String> = Vec::new();
        let mut order: Vec<usize> = Vec::new();
        let mut remaining: Vec<usize> = (0..spec.factors.len()).collect();
        while !remaining.is_empty() {
            let pos = remaining
                .iter()
                .position(|&f| spec.factors[f].given.iter().all(|g| produced.contains(g)));
            match pos {
                Some(p) => {
                    let f = remaining.remove(p);
                    for v in &spec.factors[f].vars {
                        if produced.contains(v) {
                            return Err(Error::SpecCycle(format!("{v} produced twice")));
                        }
                        produced.push(v.clone());
                    }
                    order.push(f);
                }
                None => {
                    let f = &spec.factors[remaining[0]];
                    return Err(Error::SpecCycle(format!("cannot order factor P({:?}|{:?})", f.vars, f.given)));
                }
            }
        }
        let mut vars = Vec::new();
        for name in &produced {
            let card = spec.card(name).ok_or_else(|| Error::VariableUnknown(name.clone()))?;
            vars.push(Var::new(name.clone(), card));
        }
        let idx = |n: &String| produced.iter().position(|p| p == n).unwrap();
        let mut factors = Vec::new();
        let mut len: u64 = 1;
        for &f in &order {
            let fac = &spec.factors[f];
            let vi: Vec<usize> = fac.vars.iter().map(idx).collect();
            let gi: Vec<usize> = fac.given.iter().map(idx).collect();
            let joint_card: usize = vi.iter().map(|&i| vars[i].card).product();
            let n_cond: usize = gi.iter().map(|&i| vars[i].card).product();
            let resolution = fac.resolution.or(spec.resolution).unwrap_or_else(|| default_resolution(joint_card));
            let points = if fac.resolution == Some(1) || resolution == 1 {
                simplex_grid(joint_card, 1)
            } else {
                simplex_grid(joint_card, resolution)
            };
            for _ in 0..n_cond {
                len = len
                    .checked_mul(points.len() as u64)
                    .ok_or_else(|| Error::AlphabetTooLarge("family grid size overflows u64".into()))?;
            }
            factors.push(CompiledFactor { vars: vi, given: gi, joint_card, n_cond, resolution, points });
        }
        Ok(Family { vars, factors, len })
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Resolution actually used per factor.
    pub fn resolutions(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.resolution).collect()
    }

    pub fn point(&self, mut idx: u64) -> FamilyPoint {
        let mut out = Vec::with_capacity(self.factors.len());
        // last factor varies fastest
        let mut digits: Vec<Vec<usize>> = self.factors.iter().map(|f| vec![0; f.n_cond]).collect();
        for (fi, f) in self.factors.iter().enumerate().rev() {
            for c in (0..f.n_cond).rev() {
                let base = f.points.len() as u64;
                digits[fi][c] = (idx % base) as usize;
                idx /= base;
            }
        }
        for (fi, f) in self.factors.iter().enumerate() {
            out.push(digits[fi].iter().map(|&d| f.points[d].clone()).collect());
        }
        out
    }

    pub fn member(&self, idx: u64) -> JointPmf {
        self.assemble(&self.point(idx))
    }

    pub fn assemble(&self, point: &FamilyPoint) -> JointPmf {
        let n = self.vars.len();
        let size: usize = self.vars.iter().map(|v| v.card).product();
        let mut table = vec![0.0; size];
        let mut digits = vec![0usize; n];
        for slot in table.iter_mut() {
            let mut p = 1.0;
            for (fi, f) in self.factors.iter().enumerate() {
                let c = f.given.iter().fold(0, |acc, &i| acc * self.vars[i].card + digits[i]);
                let l = f.vars.iter().fold(0, |acc, &i| acc * self.vars[i].card + digits[i]);
                p *= point[fi][c][l];
                if p == 0.0 {
                    break;
                }
            }
            *slot = p;
            let mut i = n;
            while i > 0 {
                i -= 1;
                digits[i] += 1;
                if digits[i] < self.vars[i].card {
                    break;
                }
                digits[i] = 0;
            }
        }
        JointPmf::from_parts_normalized(self.vars.clone(), table)
    }

    /// Random member: Dirichlet(1) conditionals, random vertices for
    /// deterministic factors.
    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> FamilyPoint {
        self.factors
            .iter()
            .map(|f| {
                (0..f.n_cond)
                    .map(|_| {
                        if f.resolution == 1 {
                            let mut v = vec![0.0; f.joint_card];
                            v[rng.random_range(0..f.joint_card)] = 1.0;
                            v
                        } else {
                            dirichlet_uniform(f.joint_card, rng)
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Lattice points one unit move away from `counts`; deterministic factors
    /// jump between vertices.
    pub fn lattice_neighbors(&self, counts: &[Vec<Vec<usize>>]) -> Vec<Vec<Vec<Vec<usize>>>> {
        let mut out = Vec::new();
        for (fi, f) in self.factors.iter().enumerate() {
            for c in 0..f.n_cond {
                let cur = &counts[fi][c];
                for i in 0..f.joint_card {
                    if cur[i] == 0 {
                        continue;
                    }
                    for j in 0..f.joint_card {
                        if i == j {
                            continue;
                        }
                        let mut next = counts.to_vec();
                        if f.resolution == 1 {
                            next[fi][c][j] = cur[i];
                            next[fi][c][i] = 0;
                        } else {
                            next[fi][c][i] -= 1;
                            next[fi][c][j] += 1;
                        }
                        out.push(next);
                    }
                }
            }
        }
        out
    }

    /// Rounds a point to a lattice of resolution `res` (largest remainder).
    pub fn to_counts(&self, point: &FamilyPoint, res: usize) -> Vec<Vec<Vec<usize>>> {
        self.factors
            .iter()
            .enumerate()
            .map(|(fi, f)| {
                point[fi]
                    .iter()
                    .map(|dist| {
                        let r = if f.resolution == 1 { 1 } else { res };
                        round_to_lattice(dist, r)
                    })
                    .collect()
            })
            .collect()
    }

    pub fn from_counts(&self, counts: &[Vec<Vec<usize>>]) -> FamilyPoint {
        counts
            .iter()
            .map(|fc| {
                fc.iter()
                    .map(|c| {
                        let t: usize = c.iter().sum();
                        c.iter().map(|&k| k as f64 / t as f64).collect()
                    })
                    .collect()
            })
            .collect()
    }
}

pub fn round_to_lattice(dist: &[f64], res: usize) -> Vec<usize> {
    let scaled: Vec<f64> = dist.iter().map(|p| p * res as f64).collect();
    let mut counts: Vec<usize> = scaled.iter().map(|s| s.floor() as usize).collect();
    let mut left = res.saturating_sub(counts.iter().sum());
    let mut order: Vec<usize> = (0..dist.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = scaled[a] - scaled[a].floor();
        let rb = scaled[b] - scaled[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    counts
}

/// Uniform sample from the probability simplex (Dirichlet with unit weights).
pub fn dirichlet_uniform<R: Rng + ?Sized>(card: usize, rng: &mut R) -> Vec<f64> {
    dirichlet(&vec![1.0; card], rng)
}

pub fn dirichlet<R: Rng + ?Sized>(alpha: &[f64], rng: &mut R) -> Vec<f64> {
    loop {
        let draws: Vec<f64> = alpha
            .iter()
            .map(|&a| Gamma::new(a, 1.0).expect("positive shape").sample(rng))
            .collect();
        let s: f64 = draws.iter().sum();
        if s > 0.0 {
            return draws.into_iter().map(|d| d / s).collect();
        }
    }
}

/// Random joint pmf over the given variables.
pub fn random_pmf<R: Rng + ?Sized>(vars: Vec<Var>, rng: &mut R) -> JointPmf {
    let size: usize = vars.iter().map(|v| v.card).product();
    JointPmf::from_parts_normalized(vars, dirichlet_uniform(size, rng))
}
