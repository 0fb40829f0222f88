use std::cmp::Ordering;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use super::lp::{self, LpOutcome};
use crate::error::{Error, Result};

/// Tolerance for feasibility and duplicate detection.
pub const GEOM_TOL: f64 = 1e-9;
/// Maximum dimension accepted by [`RatePolytope::enumerate_vertices`].
pub const MAX_VERTEX_DIM: usize = 5;

const ZERO_COEF: f64 = 1e-13;

/// One row `coeffs·r ≤ bound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inequality {
    pub coeffs: Vec<f64>,
    pub bound: f64,
}

impl Inequality {
    fn scale(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()))
    }

    fn normalized(&self) -> Option<Inequality> {
        let s = self.scale();
        if s <= ZERO_COEF {
            return None;
        }
        Some(Inequality {
            coeffs: self.coeffs.iter().map(|c| if (c / s).abs() <= ZERO_COEF { 0.0 } else { c / s }).collect(),
            bound: self.bound / s,
        })
    }

    pub fn lhs(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().zip(x).map(|(a, b)| a * b).sum()
    }
}

/// H-representation over named, implicitly nonnegative rate variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePolytope {
    pub variables: Vec<String>,
    pub rows: Vec<Inequality>,
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

/// Solves the `d×d` system in place by Gaussian elimination with partial
/// pivoting; `None` when (numerically) singular.
fn solve_square(m: &mut [[f64; MAX_VERTEX_DIM + 1]; MAX_VERTEX_DIM], d: usize) -> Option<[f64; MAX_VERTEX_DIM]> {
    for col in 0..d {
        let piv = (col..d).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() < 1e-10 {
            return None;
        }
        m.swap(col, piv);
        for r in col + 1..d {
            let f = m[r][col] / m[col][col];
            if f != 0.0 {
                for c in col..=d {
                    m[r][c] -= f * m[col][c];
                }
            }
        }
    }
    let mut x = [0.0; MAX_VERTEX_DIM];
    for r in (0..d).rev() {
        let mut s = m[r][d];
        for c in r + 1..d {
            s -= m[r][c] * x[c];
        }
        x[r] = s / m[r][r];
    }
    Some(x)
}

impl RatePolytope {
    pub fn new<S: AsRef<str>>(variables: &[S]) -> Self {
        RatePolytope { variables: variables.iter().map(|s| s.as_ref().to_string()).collect(), rows: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.variables.len()
    }

    pub fn var_index(&self, name: &str) -> Result<usize> {
        self.variables.iter().position(|v| v == name).ok_or_else(|| Error::VariableUnknown(name.to_string()))
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, bound: f64) -> Result<()> {
        if coeffs.len() != self.dim() {
            return Err(Error::VariableMismatch(format!("row has {} coefficients, polytope has {}", coeffs.len(), self.dim())));
        }
        if !bound.is_finite() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Lp(format!("non-finite row {coeffs:?} ≤ {bound}")));
        }
        self.rows.push(Inequality { coeffs, bound });
        Ok(())
    }

    /// Adds `Σ coef·var ≤ bound` from named terms.
    pub fn add_named<S: AsRef<str>>(&mut self, terms: &[(S, f64)], bound: f64) -> Result<()> {
        let mut coeffs = vec![0.0; self.dim()];
        for (n, c) in terms {
            coeffs[self.var_index(n.as_ref())?] += c;
        }
        self.add_row(coeffs, bound)
    }

    /// Adds the partial-sum row `Σ_{v ∈ vars} v ≤ bound`.
    pub fn add_sum<S: AsRef<str>>(&mut self, vars: &[S], bound: f64) -> Result<()> {
        let terms: Vec<(&str, f64)> = vars.iter().map(|v| (v.as_ref(), 1.0)).collect();
        self.add_named(&terms, bound)
    }

    pub fn with_sum<S: AsRef<str>>(mut self, vars: &[S], bound: f64) -> Result<Self> {
        self.add_sum(vars, bound)?;
        Ok(self)
    }

    /// Box `[0, caps_i]` in each coordinate.
    pub fn boxed<S: AsRef<str>>(variables: &[S], caps: &[f64]) -> Result<Self> {
        let mut p = RatePolytope::new(variables);
        for (i, &c) in caps.iter().enumerate() {
            let mut coeffs = vec![0.0; p.dim()];
            coeffs[i] = 1.0;
            p.add_row(coeffs, c)?;
        }
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("polytope serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: RatePolytope = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        if p.rows.iter().any(|r| r.coeffs.len() != p.variables.len()) {
            return Err(Error::VariableMismatch("row length differs from variable count".into()));
        }
        Ok(p)
    }

    fn constraint_matrix(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        (self.rows.iter().map(|r| r.coeffs.clone()).collect(), self.rows.iter().map(|r| r.bound).collect())
    }

    /// Normalizes rows, drops trivially true rows and keeps the tightest of
    /// each parallel family. A trivially false row `0 ≤ b < 0` is kept as
    /// the single row `0 ≤ -1`.
    pub fn simplified(&self) -> RatePolytope {
        let mut rows: Vec<Inequality> = Vec::new();
        for r in &self.rows {
            match r.normalized() {
                None if r.bound < -GEOM_TOL => {
                    return RatePolytope {
                        variables: self.variables.clone(),
                        rows: vec![Inequality { coeffs: vec![0.0; self.dim()], bound: -1.0 }],
                    };
                }
                None => {}
                Some(n) => {
                    // Rows with no positive coefficient hold at every nonnegative point once bound ≥ 0.
                    if n.bound >= 0.0 && n.coeffs.iter().all(|&c| c <= 0.0) {
                        continue;
                    }
                    match rows.iter_mut().find(|o| close(&o.coeffs, &n.coeffs, 1e-12)) {
                        Some(o) => o.bound = o.bound.min(n.bound),
                        None => rows.push(n),
                    }
                }
            }
        }
        RatePolytope { variables: self.variables.clone(), rows }
    }

    /// Maximum of `dir·r` over the polytope via LP.
    pub fn lp_max(&self, dir: &[f64]) -> LpOutcome<f64> {
        let (a, b) = self.constraint_matrix();
        lp::solve(&a, &b, dir)
    }

    pub fn is_empty(&self) -> bool {
        matches!(self.lp_max(&vec![0.0; self.dim()]), LpOutcome::Infeasible)
    }

    pub fn is_bounded(&self) -> bool {
        (0..self.dim()).all(|i| {
            let mut d = vec![0.0; self.dim()];
            d[i] = 1.0;
            !matches!(self.lp_max(&d), LpOutcome::Unbounded { .. })
        })
    }

    /// Minimal H-representation. Each dropped row is certified by an LP
    /// whose optimum over the remaining rows stays within 1e-9 of its bound.
    pub fn remove_redundant(&self) -> RatePolytope {
        let mut p = self.simplified();
        let mut k = 0;
        while k < p.rows.len() {
            let others: Vec<&Inequality> = p.rows.iter().enumerate().filter(|&(i, _)| i != k).map(|(_, r)| r).collect();
            let a: Vec<Vec<f64>> = others.iter().map(|r| r.coeffs.clone()).collect();
            let b: Vec<f64> = others.iter().map(|r| r.bound).collect();
            let redundant = match lp::solve(&a, &b, &p.rows[k].coeffs) {
                LpOutcome::Optimal { value, .. } => value <= p.rows[k].bound + GEOM_TOL,
                _ => false,
            };
            if redundant {
                p.rows.remove(k);
            } else {
                k += 1;
            }
        }
        p
    }

    /// Exact projection onto the variables not in `drop`.
    pub fn fourier_motzkin_eliminate<S: AsRef<str>>(&self, drop: &[S]) -> Result<RatePolytope> {
        let mut idx = Vec::new();
        for d in drop {
            let i = self.var_index(d.as_ref())?;
            if !idx.contains(&i) {
                idx.push(i);
            }
        }
        if idx.is_empty() {
            return Ok(self.clone());
        }
        if idx.len() == self.dim() {
            return Err(Error::DimensionEmpty);
        }
        let mut cur = self.clone();
        // Nonnegativity of variables still to be eliminated has to be explicit.
        let add_nonneg = |p: &mut RatePolytope, pending: &[usize]| {
            for &j in pending {
                let mut c = vec![0.0; p.dim()];
                c[j] = -1.0;
                p.rows.push(Inequality { coeffs: c, bound: 0.0 });
            }
        };
        add_nonneg(&mut cur, &idx);
        for (t, &i) in idx.iter().enumerate() {
            let mut next = Vec::new();
            let (mut pos, mut neg) = (Vec::new(), Vec::new());
            for r in cur.rows.iter().filter_map(Inequality::normalized) {
                let c = r.coeffs[i];
                if c > ZERO_COEF {
                    pos.push(r);
                } else if c < -ZERO_COEF {
                    neg.push(r);
                } else {
                    next.push(r);
                }
            }
            for p in &pos {
                for n in &neg {
                    let (wp, wn) = (1.0 / p.coeffs[i], -1.0 / n.coeffs[i]);
                    let mut coeffs: Vec<f64> = p.coeffs.iter().zip(&n.coeffs).map(|(a, b)| wp * a + wn * b).collect();
                    coeffs[i] = 0.0;
                    next.push(Inequality { coeffs, bound: wp * p.bound + wn * n.bound });
                }
            }
            cur = RatePolytope { variables: cur.variables.clone(), rows: next }.remove_redundant();
            add_nonneg(&mut cur, &idx[t + 1..]);
        }
        let keep: Vec<usize> = (0..self.dim()).filter(|i| !idx.contains(i)).collect();
        let rows = cur
            .rows
            .iter()
            .map(|r| Inequality { coeffs: keep.iter().map(|&k| r.coeffs[k]).collect(), bound: r.bound })
            .collect();
        let out = RatePolytope { variables: keep.iter().map(|&k| self.variables[k].clone()).collect(), rows };
        Ok(out.remove_redundant())
    }

    /// All extreme points, deduplicated at 1e-9 and sorted lexicographically.
    pub fn enumerate_vertices(&self) -> Result<Vec<Vec<f64>>> {
        let d = self.dim();
        if d > MAX_VERTEX_DIM {
            return Err(Error::DimensionTooHigh(d));
        }
        if d == 0 {
            return Err(Error::DimensionEmpty);
        }
        let p = self.simplified();
        let mut cons: Vec<Inequality> = p.rows.clone();
        for i in 0..d {
            let mut c = vec![0.0; d];
            c[i] = -1.0;
            cons.push(Inequality { coeffs: c, bound: 0.0 });
        }
        let mut pts: Vec<Vec<f64>> = Vec::new();
        for combo in (0..cons.len()).combinations(d) {
            let mut m = [[0.0; MAX_VERTEX_DIM + 1]; MAX_VERTEX_DIM];
            for (r, &ci) in combo.iter().enumerate() {
                m[r][..d].copy_from_slice(&cons[ci].coeffs);
                m[r][d] = cons[ci].bound;
            }
            let Some(x) = solve_square(&mut m, d) else { continue };
            let x: Vec<f64> = x[..d].iter().map(|&v| if v.abs() < 1e-12 { 0.0 } else { v }).collect();
            if cons.iter().all(|r| r.lhs(&x) <= r.bound + GEOM_TOL) {
                pts.push(x);
            }
        }
        pts.sort_by(|a, b| lex_cmp(a, b));
        let mut out: Vec<Vec<f64>> = Vec::new();
        for x in pts {
            if !out.iter().any(|o| close(o, &x, GEOM_TOL)) {
                out.push(x);
            }
        }
        Ok(out)
    }

    pub fn contains(&self, point: &[f64], tol: f64) -> Result<bool> {
        if point.len() != self.dim() {
            return Err(Error::VariableMismatch(format!("point has {} coordinates, polytope has {}", point.len(), self.dim())));
        }
        Ok(point.iter().all(|&v| v >= -tol) && self.rows.iter().all(|r| r.lhs(point) <= r.bound + tol))
    }

    /// The same polytope with columns reordered to `order`.
    pub fn reordered<S: AsRef<str>>(&self, order: &[S]) -> Result<RatePolytope> {
        if order.len() != self.dim() {
            return Err(Error::VariableMismatch(format!("{:?} vs {:?}", self.variables, order.iter().map(|s| s.as_ref()).collect::<Vec<_>>())));
        }
        let perm: Vec<usize> = order
            .iter()
            .map(|n| self.var_index(n.as_ref()).map_err(|_| Error::VariableMismatch(n.as_ref().to_string())))
            .collect::<Result<_>>()?;
        Ok(RatePolytope {
            variables: order.iter().map(|s| s.as_ref().to_string()).collect(),
            rows: self
                .rows
                .iter()
                .map(|r| Inequality { coeffs: perm.iter().map(|&k| r.coeffs[k]).collect(), bound: r.bound })
                .collect(),
        })
    }

    /// Support function value `max dir·r` over the vertex set.
    pub fn support(&self, dir: &[f64]) -> Result<Option<(f64, Vec<f64>)>> {
        Ok(support_of(&self.enumerate_vertices()?, dir))
    }
}

pub(crate) fn support_of(vertices: &[Vec<f64>], dir: &[f64]) -> Option<(f64, Vec<f64>)> {
    let mut best: Option<(f64, &Vec<f64>)> = None;
    for v in vertices {
        let s: f64 = v.iter().zip(dir).map(|(a, b)| a * b).sum();
        if best.map_or(true, |(b, _)| s > b) {
            best = Some((s, v));
        }
    }
    best.map(|(s, v)| (s, v.clone()))
}

/// `a ⊆ b` up to `tol`: every vertex of `a` satisfies every row of `b`.
pub fn is_subset(a: &RatePolytope, b: &RatePolytope, tol: f64) -> Result<bool> {
    let b = b.reordered(&a.variables)?;
    for v in a.enumerate_vertices()? {
        if !b.contains(&v, tol)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Vertex sets equal within `tol` (after aligning variable order).
pub fn same_vertices(a: &RatePolytope, b: &RatePolytope, tol: f64) -> Result<bool> {
    let b = b.reordered(&a.variables)?;
    let (va, vb) = (a.enumerate_vertices()?, b.enumerate_vertices()?);
    Ok(va.iter().all(|x| vb.iter().any(|y| close(x, y, tol))) && vb.iter().all(|y| va.iter().any(|x| close(x, y, tol))))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(side: f64) -> RatePolytope {
        RatePolytope::boxed(&["R1", "R2"], &[side, side]).unwrap()
    }

    #[test]
    fn fm_small_example() {
        let mut p = RatePolytope::new(&["x", "y"]);
        p.add_named(&[("x", 1.0), ("y", 1.0)], 4.0).unwrap();
        p.add_named(&[("y", -1.0)], -1.0).unwrap();
        let q = p.fourier_motzkin_eliminate(&["y"]).unwrap();
        assert_eq!(q.variables, vec!["x"]);
        assert_eq!(q.rows.len(), 1);
        assert!((q.rows[0].coeffs[0] - 1.0).abs() < 1e-12 && (q.rows[0].bound - 3.0).abs() < 1e-12);
        let none: [&str; 0] = [];
        assert_eq!(p.fourier_motzkin_eliminate(&none).unwrap(), p);
        assert_eq!(p.fourier_motzkin_eliminate(&["x", "y"]).unwrap_err().code(), "DIMENSION_EMPTY");
    }

    #[test]
    fn redundancy_examples() {
        let mut p = RatePolytope::new(&["x"]);
        p.add_row(vec![1.0], 1.0).unwrap();
        p.add_row(vec![1.0], 2.0).unwrap();
        let q = p.remove_redundant();
        assert_eq!(q.rows, vec![Inequality { coeffs: vec![1.0], bound: 1.0 }]);

        let mut s = square(1.0);
        s.add_sum(&["R1", "R2"], 3.0).unwrap();
        assert_eq!(s.remove_redundant().rows.len(), 2);
    }

    #[test]
    fn vertex_examples() {
        assert_eq!(square(1.0).enumerate_vertices().unwrap().len(), 4);
        let mac = square(1.0).with_sum(&["R1", "R2"], 1.5).unwrap();
        let v = mac.enumerate_vertices().unwrap();
        assert_eq!(v, vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![0.5, 1.0], vec![1.0, 0.0], vec![1.0, 0.5]]);
        let big = RatePolytope::new(&["a", "b", "c", "d", "e", "f"]);
        assert_eq!(big.enumerate_vertices().unwrap_err().code(), "DIMENSION_TOO_HIGH");
    }

    #[test]
    fn containment_examples() {
        assert!(square(1.0).contains(&[0.0, 0.0], 0.0).unwrap());
        assert!(is_subset(&square(1.0), &square(2.0), 1e-12).unwrap());
        assert!(!is_subset(&square(2.0), &square(1.0), 1e-12).unwrap());
        assert_eq!(square(1.0).contains(&[0.0], 0.0).unwrap_err().code(), "VARIABLE_MISMATCH");
    }

    #[test]
    fn json_round_trip() {
        let p = square(1.0).with_sum(&["R1", "R2"], 1.5).unwrap();
        assert_eq!(RatePolytope::from_json(&p.to_json()).unwrap(), p);
    }
}
