//! Reference computations used by the integration tests. Everything here is
//! written directly from definitions and shares no code paths with the
//! library beyond its public data types.

#![allow(dead_code)]

use std::collections::HashMap;

use ifnetlab::infocalc::JointPmf;
use ifnetlab::netmodel::DiscreteChannel;
use ifnetlab::ratepoly::RatePolytope;
use itertools::Itertools;
use nalgebra::{DMatrix, DVector};

fn digits(mut flat: usize, cards: &[usize]) -> Vec<usize> {
    let mut d = vec![0; cards.len()];
    for i in (0..cards.len()).rev() {
        d[i] = flat % cards[i];
        flat /= cards[i];
    }
    d
}

fn flat(d: &[usize], cards: &[usize]) -> usize {
    d.iter().zip(cards).fold(0, |acc, (v, c)| acc * c + v)
}

/// A finite joint law stored as its support atoms.
#[derive(Clone, Debug)]
pub struct Law {
    pub names: Vec<String>,
    pub atoms: Vec<(Vec<usize>, f64)>,
}

impl Law {
    pub fn from_pmf(p: &JointPmf) -> Law {
        let cards: Vec<usize> = p.vars().iter().map(|v| v.card).collect();
        let atoms = p
            .table()
            .iter()
            .enumerate()
            .filter(|(_, &m)| m > 0.0)
            .map(|(i, &m)| (digits(i, &cards), m))
            .collect();
        Law { names: p.names(), atoms }
    }

    /// Appends the channel outputs `Y1..` drawn given the inputs `X1..`.
    pub fn through(&self, ch: &DiscreteChannel) -> Law {
        let k1 = ch.input_alphabets.len();
        let pos: Vec<usize> = (1..=k1).map(|i| self.pos(&format!("X{i}"))).collect();
        let n_out: usize = ch.output_alphabets.iter().product();
        let mut names = self.names.clone();
        names.extend((1..=ch.output_alphabets.len()).map(|j| format!("Y{j}")));
        let mut atoms = Vec::new();
        for (a, m) in &self.atoms {
            let x: Vec<usize> = pos.iter().map(|&p| a[p]).collect();
            let row = flat(&x, &ch.input_alphabets);
            for y in 0..n_out {
                let w = ch.tensor[row * n_out + y];
                if w > 0.0 {
                    let mut full = a.clone();
                    full.extend(digits(y, &ch.output_alphabets));
                    atoms.push((full, m * w));
                }
            }
        }
        Law { names, atoms }
    }

    fn pos(&self, name: &str) -> usize {
        self.names.iter().position(|n| n == name).unwrap_or_else(|| panic!("no variable {name}"))
    }

    fn list(&self, s: &str) -> Vec<usize> {
        s.split(',').map(str::trim).filter(|x| !x.is_empty()).map(|n| self.pos(n)).collect()
    }

    /// Entropy in bits of the comma-separated variables.
    pub fn entropy(&self, vars: &str) -> f64 {
        let idx = self.list(vars);
        let mut marg: HashMap<Vec<usize>, f64> = HashMap::new();
        for (a, m) in &self.atoms {
            *marg.entry(idx.iter().map(|&i| a[i]).collect()).or_default() += m;
        }
        marg.values().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum()
    }

    /// `I(a; b | c)` in bits.
    pub fn mi(&self, a: &str, b: &str, c: &str) -> f64 {
        let join = |x: &str, y: &str| format!("{x},{y}");
        self.entropy(&join(a, c)) + self.entropy(&join(b, c)) - self.entropy(&join(&join(a, b), c)) - self.entropy(c)
    }
}

pub fn feasible(p: &RatePolytope, x: &[f64], tol: f64) -> bool {
    x.iter().all(|&v| v >= -tol)
        && p.rows.iter().all(|r| r.coeffs.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() <= r.bound + tol * (1.0 + r.bound.abs()))
}

/// Vertices by solving every square subsystem of tight constraints
/// (nonnegativity included) and keeping the feasible, distinct solutions.
pub fn brute_vertices(p: &RatePolytope) -> Vec<Vec<f64>> {
    let n = p.variables.len();
    let mut cons: Vec<(Vec<f64>, f64)> = p.rows.iter().map(|r| (r.coeffs.clone(), r.bound)).collect();
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = -1.0;
        cons.push((e, 0.0));
    }
    let mut out: Vec<Vec<f64>> = Vec::new();
    for pick in (0..cons.len()).combinations(n) {
        let a = DMatrix::from_fn(n, n, |r, c| cons[pick[r]].0[c]);
        let b = DVector::from_fn(n, |r, _| cons[pick[r]].1);
        let Some(x) = a.lu().solve(&b) else { continue };
        let x: Vec<f64> = x.iter().copied().collect();
        if x.iter().any(|v| !v.is_finite()) || !feasible(p, &x, 1e-9) {
            continue;
        }
        if !out.iter().any(|y| close(y, &x, 1e-9)) {
            out.push(x);
        }
    }
    out
}

pub fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

/// Mutual containment of two point sets within `tol` per coordinate.
pub fn same_points(a: &[Vec<f64>], b: &[Vec<f64>], tol: f64) -> bool {
    a.iter().all(|x| b.iter().any(|y| close(x, y, tol))) && b.iter().all(|y| a.iter().any(|x| close(x, y, tol)))
}

/// Vertices of `p` after reordering its coordinates to `order`.
pub fn vertices_in(p: &RatePolytope, order: &[&str]) -> Vec<Vec<f64>> {
    let idx: Vec<usize> = order.iter().map(|n| p.variables.iter().position(|v| v == n).expect("variable")).collect();
    brute_vertices(p).into_iter().map(|v| idx.iter().map(|&i| v[i]).collect()).collect()
}

/// `ψ(x) = ½ log2(1 + x)`.
pub fn psi(x: f64) -> f64 {
    0.5 * (1.0 + x).log2()
}
