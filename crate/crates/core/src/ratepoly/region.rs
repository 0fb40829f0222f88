use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::polytope::{support_of, RatePolytope};
use crate::error::{Error, Result};
use crate::infocalc::JointPmf;

/// Version tag of [`direction_grid`]; estimates with different versions are
/// not comparable.
pub const DIRECTION_GRID_VERSION: u32 = 1;

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Unit directions from the primitive nonnegative integer vectors with
/// coordinates in `{0,1,2,3}`, in lexicographic order of the integer vectors.
pub fn direction_grid(dim: usize) -> Vec<Vec<f64>> {
    let total = 4usize.pow(dim as u32);
    let mut out = Vec::new();
    for code in 1..total {
        let mut v = vec![0usize; dim];
        let mut c = code;
        for k in (0..dim).rev() {
            v[k] = c % 4;
            c /= 4;
        }
        if v.iter().fold(0, |g, &x| gcd(g, x)) != 1 {
            continue;
        }
        let norm = v.iter().map(|&x| (x * x) as f64).sum::<f64>().sqrt();
        out.push(v.iter().map(|&x| x as f64 / norm).collect());
    }
    out
}

/// Pointwise maximum of support functions over a family of polytopes, which
/// describes the convex hull of their union.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionEstimate {
    pub variables: Vec<String>,
    pub grid_version: u32,
    pub directions: Vec<Vec<f64>>,
    pub support: Vec<f64>,
    /// Maximizing extreme point per direction.
    pub samples: Vec<Vec<f64>>,
    /// Index of the swept item that produced each maximizer.
    pub sources: Vec<u64>,
}

impl RegionEstimate {
    /// Estimate of the empty region (support `-inf`).
    pub fn empty<S: AsRef<str>>(variables: &[S]) -> Self {
        let directions = direction_grid(variables.len());
        let n = directions.len();
        RegionEstimate {
            variables: variables.iter().map(|s| s.as_ref().to_string()).collect(),
            grid_version: DIRECTION_GRID_VERSION,
            directions,
            support: vec![f64::NEG_INFINITY; n],
            samples: vec![Vec::new(); n],
            sources: vec![u64::MAX; n],
        }
    }

    pub fn from_polytope(p: &RatePolytope) -> Result<Self> {
        let mut r = RegionEstimate::empty(&p.variables);
        r.absorb(p, 0)?;
        Ok(r)
    }

    /// Folds polytope number `source` into the estimate. Ties keep the lower
    /// source index.
    pub fn absorb(&mut self, p: &RatePolytope, source: u64) -> Result<()> {
        let p = if p.variables == self.variables { p.clone() } else { p.reordered(&self.variables)? };
        let verts = p.enumerate_vertices()?;
        for k in 0..self.directions.len() {
            if let Some((s, v)) = support_of(&verts, &self.directions[k]) {
                self.offer(k, s, v, source);
            }
        }
        Ok(())
    }

    fn offer(&mut self, k: usize, s: f64, v: Vec<f64>, source: u64) {
        if s > self.support[k] || (s == self.support[k] && source < self.sources[k]) {
            self.support[k] = s;
            self.samples[k] = v;
            self.sources[k] = source;
        }
    }

    /// Order-independent merge.
    pub fn merge(mut self, other: RegionEstimate) -> Result<Self> {
        self.check_grid(&other)?;
        for k in 0..self.directions.len() {
            if other.sources[k] != u64::MAX {
                self.offer(k, other.support[k], other.samples[k].clone(), other.sources[k]);
            }
        }
        Ok(self)
    }

    fn check_grid(&self, other: &RegionEstimate) -> Result<()> {
        if self.variables != other.variables
            || self.grid_version != other.grid_version
            || self.directions.len() != other.directions.len()
        {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// Outer check against the stored supports: `d·x ≤ support(d) + tol` for
    /// every grid direction.
    pub fn admits(&self, point: &[f64], tol: f64) -> bool {
        point.iter().all(|&v| v >= -tol)
            && self
                .directions
                .iter()
                .zip(&self.support)
                .all(|(d, &s)| d.iter().zip(point).map(|(a, b)| a * b).sum::<f64>() <= s + tol)
    }

    /// Distinct maximizers in direction order.
    pub fn distinct_samples(&self) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = Vec::new();
        for s in &self.samples {
            if !s.is_empty() && !out.iter().any(|o| o.iter().zip(s).all(|(a, b)| (a - b).abs() <= 1e-12)) {
                out.push(s.clone());
            }
        }
        out
    }

    /// CSV rows `(d_1..d_n, support)`.
    pub fn write_support_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header: Vec<String> = self.variables.iter().map(|v| format!("d_{v}")).collect();
        header.push("support".into());
        wtr.write_record(&header).map_err(io_err)?;
        for (d, s) in self.directions.iter().zip(&self.support) {
            let mut rec: Vec<String> = d.iter().map(|x| format!("{x:.12}")).collect();
            rec.push(format!("{s:.12}"));
            wtr.write_record(&rec).map_err(io_err)?;
        }
        wtr.flush().map_err(|e| Error::Parse(e.to_string()))
    }

    /// CSV rows of the distinct sample points.
    pub fn write_samples_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(&self.variables).map_err(io_err)?;
        for p in self.distinct_samples() {
            wtr.write_record(p.iter().map(|x| format!("{x:.12}"))).map_err(io_err)?;
        }
        wtr.flush().map_err(|e| Error::Parse(e.to_string()))
    }
}

fn io_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Runs `f` on a pool with `workers` threads, or on the global pool.
pub fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match workers {
        Some(n) if n > 0 => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        _ => f(),
    }
}

/// Union estimate over builder outputs for indices `0..n`. Errors carry the
/// failing index via `label`.
pub fn sweep_union_indexed<F, L>(variables: &[String], n: u64, builder: F, label: L) -> Result<RegionEstimate>
where
    F: Fn(u64) -> Result<RatePolytope> + Sync,
    L: Fn(u64) -> String + Sync,
{
    (0..n)
        .into_par_iter()
        .try_fold(
            || RegionEstimate::empty(variables),
            |mut acc, i| {
                let p = builder(i).map_err(|e| e.at(label(i)))?;
                acc.absorb(&p, i).map_err(|e| e.at(label(i)))?;
                Ok(acc)
            },
        )
        .try_reduce(|| RegionEstimate::empty(variables), |a, b| a.merge(b))
}

/// Union estimate over a list of pmfs; builder errors carry the offending pmf.
pub fn sweep_union<F>(variables: &[String], builder: F, pmfs: &[JointPmf]) -> Result<RegionEstimate>
where
    F: Fn(&JointPmf) -> Result<RatePolytope> + Sync,
{
    sweep_union_indexed(variables, pmfs.len() as u64, |i| builder(&pmfs[i as usize]), |i| pmfs[i as usize].to_json().to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CompareVerdict {
    Equal,
    ASubset,
    BSubset,
    Incomparable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    /// `max |support_a − support_b|`.
    pub max_gap: f64,
    /// `max (support_a − support_b)`, clamped at 0.
    pub a_exceeds_b: f64,
    /// `max (support_b − support_a)`, clamped at 0.
    pub b_exceeds_a: f64,
    pub worst_direction: Vec<f64>,
    pub verdict: CompareVerdict,
}

pub fn region_compare(a: &RegionEstimate, b: &RegionEstimate, tol: f64) -> Result<CompareReport> {
    a.check_grid(b)?;
    let (mut ab, mut ba, mut worst, mut worst_k) = (0.0f64, 0.0f64, 0.0f64, 0usize);
    for k in 0..a.directions.len() {
        let (sa, sb) = (a.support[k], b.support[k]);
        let diff = if sa == sb { 0.0 } else { sa - sb };
        ab = ab.max(diff);
        ba = ba.max(-diff);
        if diff.abs() > worst {
            worst = diff.abs();
            worst_k = k;
        }
    }
    let verdict = if worst <= tol {
        CompareVerdict::Equal
    } else if ab <= tol {
        CompareVerdict::ASubset
    } else if ba <= tol {
        CompareVerdict::BSubset
    } else {
        CompareVerdict::Incomparable
    };
    Ok(CompareReport {
        max_gap: worst,
        a_exceeds_b: ab,
        b_exceeds_a: ba,
        worst_direction: a.directions.get(worst_k).cloned().unwrap_or_default(),
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars() -> Vec<String> {
        vec!["R1".into(), "R2".into()]
    }

    #[test]
    fn grid_shape() {
        let g = direction_grid(2);
        // primitive pairs in {0..3}^2 minus zero
        assert_eq!(g.len(), 9);
        assert_eq!(g[0], vec![0.0, 1.0]);
        assert!(g.iter().all(|d| (d.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn constant_builder_and_time_sharing() {
        let sq = RatePolytope::boxed(&["R1", "R2"], &[1.0, 1.0]).unwrap();
        let r = sweep_union_indexed(&vars(), 5, |_| Ok(sq.clone()), |i| i.to_string()).unwrap();
        assert_eq!(r, RegionEstimate::from_polytope(&sq).unwrap());

        let a = RatePolytope::boxed(&["R1", "R2"], &[1.0, 0.0]).unwrap();
        let b = RatePolytope::boxed(&["R1", "R2"], &[0.0, 1.0]).unwrap();
        let polys = [a, b];
        let r = sweep_union_indexed(&vars(), 2, |i| Ok(polys[i as usize].clone()), |i| i.to_string()).unwrap();
        assert!(r.admits(&[0.5, 0.5], 1e-12));
        assert!(!r.admits(&[0.6, 0.6], 1e-12));
    }

    #[test]
    fn compare_examples() {
        let sq = RegionEstimate::from_polytope(&RatePolytope::boxed(&["R1", "R2"], &[1.0, 1.0]).unwrap()).unwrap();
        let half = RegionEstimate::from_polytope(&RatePolytope::boxed(&["R1", "R2"], &[0.5, 0.5]).unwrap()).unwrap();
        let same = region_compare(&sq, &sq, 1e-9).unwrap();
        assert_eq!((same.max_gap, same.verdict), (0.0, CompareVerdict::Equal));
        let c = region_compare(&sq, &half, 1e-9).unwrap();
        assert_eq!(c.verdict, CompareVerdict::BSubset);
        let axis = sq.directions.iter().position(|d| d == &vec![1.0, 0.0]).unwrap();
        assert!((sq.support[axis] - half.support[axis] - 0.5).abs() < 1e-12);
        let other = RegionEstimate::empty(&["R1", "R2", "R3"]);
        assert_eq!(region_compare(&sq, &other, 1e-9).unwrap_err().code(), "GRID_MISMATCH");
    }

    #[test]
    fn builder_error_carries_context() {
        let e = sweep_union_indexed(&vars(), 3, |_| Err(Error::EmptyRegion("x".into())), |i| format!("pmf {i}"))
            .unwrap_err();
        assert_eq!(e.code(), "EMPTY_REGION");
        assert!(e.to_string().contains("pmf"));
    }
}
