//! Dense two-phase simplex over a generic ordered field, with Bland's rule.
//!
//! Problems have the form `max c·x` subject to `A x ≤ b`, `x ≥ 0`.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub trait LpScalar: Clone + Debug + PartialOrd {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(v: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn is_pos(&self) -> bool;
    fn is_neg(&self) -> bool;
    fn is_zero(&self) -> bool {
        !self.is_pos() && !self.is_neg()
    }
}

const F64_EPS: f64 = 1e-11;

impl LpScalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn is_pos(&self) -> bool {
        *self > F64_EPS
    }
    fn is_neg(&self) -> bool {
        *self < -F64_EPS
    }
}

impl LpScalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_f64(v: f64) -> Self {
        BigRational::from_float(v).unwrap_or_else(|| BigRational::from_integer(BigInt::zero()))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn is_pos(&self) -> bool {
        Signed::is_positive(self)
    }
    fn is_neg(&self) -> bool {
        Signed::is_negative(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome<T> {
    Optimal { value: T, x: Vec<T> },
    Infeasible,
    /// Carries a recession direction `d ≥ 0`, `A d ≤ 0`, `c·d > 0`.
    Unbounded { ray: Vec<T> },
}

struct Tableau<T> {
    rows: Vec<Vec<T>>,
    rhs: Vec<T>,
    basis: Vec<usize>,
    ncols: usize,
}

impl<T: LpScalar> Tableau<T> {
    fn pivot(&mut self, obj: &mut [T], obj_val: &mut T, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            *v = v.div(&p);
        }
        self.rhs[r] = self.rhs[r].div(&p);
        let prow = self.rows[r].clone();
        let prhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][c].clone();
            if f.is_zero() {
                continue;
            }
            for (v, pv) in self.rows[i].iter_mut().zip(&prow) {
                if !pv.is_zero() {
                    *v = v.sub(&f.mul(pv));
                }
            }
            self.rows[i][c] = T::zero();
            self.rhs[i] = self.rhs[i].sub(&f.mul(&prhs));
        }
        let f = obj[c].clone();
        if !f.is_zero() {
            for (v, pv) in obj.iter_mut().zip(&prow) {
                if !pv.is_zero() {
                    *v = v.sub(&f.mul(pv));
                }
            }
            obj[c] = T::zero();
            *obj_val = obj_val.sub(&f.mul(&prhs));
        }
        self.basis[r] = c;
    }

    /// Reduced-cost row for maximizing `cost`: `r_j = c_B B^-1 A_j - c_j`, with
    /// objective value `c_B B^-1 b`.
    fn objective_row(&self, cost: &[T]) -> (Vec<T>, T) {
        let mut obj: Vec<T> = cost.iter().map(|c| c.neg()).collect();
        let mut val = T::zero();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b].clone();
            if cb.is_zero() {
                continue;
            }
            for (o, a) in obj.iter_mut().zip(&self.rows[i]) {
                *o = o.add(&cb.mul(a));
            }
            val = val.add(&cb.mul(&self.rhs[i]));
        }
        (obj, val)
    }

    /// Runs Bland-rule iterations. Returns `Err(col)` if column `col` is an
    /// unbounded direction.
    fn optimize(&mut self, obj: &mut [T], val: &mut T, allowed: &[bool]) -> Result<(), usize> {
        loop {
            let Some(c) = (0..self.ncols).find(|&j| allowed[j] && obj[j].is_neg()) else {
                return Ok(());
            };
            let mut best: Option<(usize, T)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][c];
                if !a.is_pos() {
                    continue;
                }
                let ratio = self.rhs[i].div(a);
                best = match best {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio < br || (!(br < ratio) && self.basis[i] < self.basis[bi]) {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
            match best {
                None => return Err(c),
                Some((r, _)) => self.pivot(obj, val, r, c),
            }
        }
    }
}

/// `max c·x` s.t. `A x ≤ b`, `x ≥ 0`.
pub fn simplex<T: LpScalar>(a: &[Vec<T>], b: &[T], c: &[T]) -> LpOutcome<T> {
    let m = a.len();
    let n = c.len();
    let negative: Vec<usize> = (0..m).filter(|&i| b[i].is_neg()).collect();
    let n_art = negative.len();
    let ncols = n + m + n_art;
    let mut rows = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut art_k = 0;
    for i in 0..m {
        let mut row = vec![T::zero(); ncols];
        let flip = b[i].is_neg();
        for j in 0..n {
            row[j] = if flip { a[i][j].neg() } else { a[i][j].clone() };
        }
        row[n + i] = if flip { T::one().neg() } else { T::one() };
        if flip {
            row[n + m + art_k] = T::one();
            basis.push(n + m + art_k);
            art_k += 1;
            rhs.push(b[i].neg());
        } else {
            basis.push(n + i);
            rhs.push(if b[i].is_zero() { T::zero() } else { b[i].clone() });
        }
        rows.push(row);
    }
    let mut tab = Tableau { rows, rhs, basis, ncols };

    if n_art > 0 {
        let mut cost = vec![T::zero(); ncols];
        for v in cost.iter_mut().skip(n + m) {
            *v = T::one().neg();
        }
        let (mut obj, mut val) = tab.objective_row(&cost);
        let allowed = vec![true; ncols];
        // Phase one is bounded above by zero.
        let _ = tab.optimize(&mut obj, &mut val, &allowed);
        if val.is_neg() {
            return LpOutcome::Infeasible;
        }
        // Drive remaining artificials out of the basis.
        let mut i = 0;
        while i < tab.rows.len() {
            if tab.basis[i] >= n + m {
                if let Some(c) = (0..n + m).find(|&j| !tab.rows[i][j].is_zero()) {
                    tab.pivot(&mut obj, &mut val, i, c);
                } else {
                    tab.rows.remove(i);
                    tab.rhs.remove(i);
                    tab.basis.remove(i);
                    continue;
                }
            }
            i += 1;
        }
    }

    let mut cost = vec![T::zero(); ncols];
    cost[..n].clone_from_slice(c);
    let (mut obj, mut val) = tab.objective_row(&cost);
    let mut allowed = vec![true; ncols];
    for v in allowed.iter_mut().skip(n + m) {
        *v = false;
    }
    match tab.optimize(&mut obj, &mut val, &allowed) {
        Ok(()) => {
            let mut x = vec![T::zero(); n];
            for (i, &bcol) in tab.basis.iter().enumerate() {
                if bcol < n {
                    x[bcol] = tab.rhs[i].clone();
                }
            }
            LpOutcome::Optimal { value: val, x }
        }
        Err(col) => {
            let mut ray = vec![T::zero(); n];
            if col < n {
                ray[col] = T::one();
            }
            for (i, &bcol) in tab.basis.iter().enumerate() {
                if bcol < n {
                    ray[bcol] = tab.rows[i][col].neg();
                }
            }
            LpOutcome::Unbounded { ray }
        }
    }
}

const RESIDUAL_TOL: f64 = 1e-7;

fn primal_residual(a: &[Vec<f64>], b: &[f64], x: &[f64]) -> f64 {
    let mut worst = x.iter().fold(0.0f64, |w, &v| w.max(-v));
    for (row, &bi) in a.iter().zip(b) {
        let lhs: f64 = row.iter().zip(x).map(|(p, q)| p * q).sum();
        worst = worst.max(lhs - bi);
    }
    worst
}

fn ray_ok(a: &[Vec<f64>], c: &[f64], d: &[f64]) -> bool {
    let scale = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || d.iter().any(|&v| v < -RESIDUAL_TOL * scale) {
        return false;
    }
    let gain: f64 = c.iter().zip(d).map(|(p, q)| p * q).sum();
    gain > RESIDUAL_TOL * scale
        && a.iter().all(|row| row.iter().zip(d).map(|(p, q)| p * q).sum::<f64>() <= RESIDUAL_TOL * scale)
}

fn to_rational(v: &[f64]) -> Vec<BigRational> {
    v.iter().map(|&x| <BigRational as LpScalar>::from_f64(x)).collect()
}

/// Exact rational solve, with the result converted to `f64`.
pub fn solve_exact(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> LpOutcome<f64> {
    let ar: Vec<Vec<BigRational>> = a.iter().map(|r| to_rational(r)).collect();
    match simplex(&ar, &to_rational(b), &to_rational(c)) {
        LpOutcome::Optimal { value, x } => LpOutcome::Optimal {
            value: LpScalar::to_f64(&value),
            x: x.iter().map(LpScalar::to_f64).collect(),
        },
        LpOutcome::Infeasible => LpOutcome::Infeasible,
        LpOutcome::Unbounded { ray } => LpOutcome::Unbounded { ray: ray.iter().map(LpScalar::to_f64).collect() },
    }
}

/// Floating-point solve, re-solved in exact rationals when the floating
/// answer cannot be certified (primal residual above 1e-7, an unverifiable
/// ray, or a claim of infeasibility).
pub fn solve(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> LpOutcome<f64> {
    let out = simplex(a, b, c);
    let certified = match &out {
        LpOutcome::Optimal { x, .. } => primal_residual(a, b, x) <= RESIDUAL_TOL,
        LpOutcome::Unbounded { ray } => ray_ok(a, c, ray),
        LpOutcome::Infeasible => false,
    };
    if certified {
        out
    } else {
        solve_exact(a, b, c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_lp() {
        // max x + y, x + 2y ≤ 4, 3x + y ≤ 6 → (8/5, 6/5)
        let a = vec![vec![1.0, 2.0], vec![3.0, 1.0]];
        match solve(&a, &[4.0, 6.0], &[1.0, 1.0]) {
            LpOutcome::Optimal { value, x } => {
                assert!((value - 2.8).abs() < 1e-12);
                assert!((x[0] - 1.6).abs() < 1e-12 && (x[1] - 1.2).abs() < 1e-12);
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn phase_one_and_status() {
        // x ≥ 1 written as -x ≤ -1, x ≤ 3
        let a = vec![vec![-1.0], vec![1.0]];
        assert!(matches!(solve(&a, &[-1.0, 3.0], &[-1.0]), LpOutcome::Optimal { value, .. } if (value + 1.0).abs() < 1e-12));
        assert_eq!(solve(&a, &[-4.0, 3.0], &[1.0]), LpOutcome::Infeasible);
        let a = vec![vec![1.0, -1.0]];
        assert!(matches!(solve(&a, &[1.0], &[1.0, 1.0]), LpOutcome::Unbounded { .. }));
    }

    #[test]
    fn rational_agrees() {
        let a = vec![vec![1.0, 1.0, 0.0], vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0]];
        let f = match simplex(&a, &[1.0, 1.0, 1.0], &[1.0, 1.0, 1.0]) {
            LpOutcome::Optimal { value, .. } => value,
            o => panic!("{o:?}"),
        };
        let e = match solve_exact(&a, &[1.0, 1.0, 1.0], &[1.0, 1.0, 1.0]) {
            LpOutcome::Optimal { value, .. } => value,
            o => panic!("{o:?}"),
        };
        assert!((f - 1.5).abs() < 1e-12 && e == 1.5);
    }
}
