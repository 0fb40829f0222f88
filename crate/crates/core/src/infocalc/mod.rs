//! Joint pmfs over named variables, gridded distribution families,
//! channel-induced joints and Gaussian closed forms. All measures are in bits.

pub mod family;
pub mod gaussian;
pub mod pmf;

pub use family::{
    dirichlet, dirichlet_uniform, random_pmf, simplex_grid, Factor, Family, FamilyPoint, FamilySpec,
};
pub use gaussian::{gaussian_mutual_information, gaussian_psi, GaussianCovariance};
pub use pmf::{EntropyCache, JointPmf, Var};

use crate::error::{Error, Result};
use crate::netmodel::{input_name, output_name, DiscreteChannel};

/// I(A;B|C) in bits.
pub fn conditional_mutual_information<S: AsRef<str>>(pmf: &JointPmf, a: &[S], b: &[S], c: &[S]) -> Result<f64> {
    pmf.conditional_mutual_information(a, b, c)
}

/// Iterator over every member of a family grid.
pub fn family_grid(spec: &FamilySpec) -> Result<impl Iterator<Item = JointPmf>> {
    let fam = spec.compile()?;
    Ok((0..fam.len()).map(move |i| fam.member(i)))
}

/// Appends the channel outputs `Y1..Yk2` to a pmf over inputs (and any
/// auxiliaries), drawing outputs from the channel given the inputs only.
pub fn induced_joint(input: &JointPmf, channel: &DiscreteChannel) -> Result<JointPmf> {
    let k1 = channel.input_alphabets.len();
    let mut pos = Vec::with_capacity(k1);
    for i in 0..k1 {
        let name = input_name(i);
        let p = input.index_of(&name)?;
        if input.vars()[p].card != channel.input_alphabets[i] {
            return Err(Error::AlphabetMismatch(format!(
                "{name} has {} values in the pmf, {} in the channel",
                input.vars()[p].card,
                channel.input_alphabets[i]
            )));
        }
        pos.push(p);
    }
    for j in 0..channel.output_alphabets.len() {
        if input.index_of(&output_name(j)).is_ok() {
            return Err(Error::OverlappingSets(output_name(j)));
        }
    }
    let strides = input.strides();
    let cards: Vec<usize> = input.vars().iter().map(|v| v.card).collect();
    let n_out = channel.n_outputs();
    let mut vars = input.vars().to_vec();
    for (j, &c) in channel.output_alphabets.iter().enumerate() {
        vars.push(Var::new(output_name(j), c));
    }
    let mut table = vec![0.0; input.table().len() * n_out];
    for (flat, &p) in input.table().iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let mut x = 0usize;
        for (i, &ps) in pos.iter().enumerate() {
            x = x * channel.input_alphabets[i] + (flat / strides[ps]) % cards[ps];
        }
        let row = channel.row(x);
        let base = flat * n_out;
        for (y, &q) in row.iter().enumerate() {
            table[base + y] = p * q;
        }
    }
    Ok(JointPmf::from_parts_normalized(vars, table))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::DiscreteChannel;

    fn h2(p: f64) -> f64 {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }

    fn bsc(eps: f64) -> JointPmf {
        JointPmf::new(
            vec![Var::new("X", 2), Var::new("Y", 2)],
            vec![0.5 * (1.0 - eps), 0.5 * eps, 0.5 * eps, 0.5 * (1.0 - eps)],
        )
        .unwrap()
    }

    #[test]
    fn bsc_values() {
        let e: [&str; 0] = [];
        assert!((bsc(0.0).conditional_mutual_information(&["X"], &["Y"], &e).unwrap() - 1.0).abs() < 1e-12);
        assert!(bsc(0.5).conditional_mutual_information(&["X"], &["Y"], &e).unwrap().abs() < 1e-12);
        let v = bsc(0.11).conditional_mutual_information(&["X"], &["Y"], &e).unwrap();
        assert!((v - (1.0 - h2(0.11))).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        let p = bsc(0.1);
        let e: [&str; 0] = [];
        assert_eq!(p.conditional_mutual_information(&["Z"], &["Y"], &e).unwrap_err().code(), "VARIABLE_UNKNOWN");
        assert_eq!(p.conditional_mutual_information(&["X"], &["X"], &e).unwrap_err().code(), "OVERLAPPING_SETS");
    }

    #[test]
    fn simplex_examples() {
        assert_eq!(simplex_grid(2, 2), vec![vec![0.0, 1.0], vec![0.5, 0.5], vec![1.0, 0.0]]);
        assert_eq!(simplex_grid(3, 1).len(), 3);
        assert_eq!(simplex_grid(2, 8).len(), 9);
    }

    #[test]
    fn family_examples() {
        let f = FamilySpec::product(&[("X1", 2), ("X2", 2)]).with_resolution(2);
        assert_eq!(family_grid(&f).unwrap().count(), 9);
        let w = FamilySpec::new(
            vec![("W".into(), 2), ("X1".into(), 2), ("X2".into(), 2)],
            vec![Factor::marginal(&["W"]), Factor::new(&["X1"], &["W"]), Factor::new(&["X2"], &["W"])],
        )
        .with_resolution(1);
        assert_eq!(w.compile().unwrap().len(), 2 * 4 * 4);
        let j = FamilySpec::new(vec![("X1".into(), 2), ("X2".into(), 2)], vec![Factor::marginal(&["X1", "X2"])])
            .with_resolution(4);
        assert_eq!(j.compile().unwrap().len(), 35);
    }

    #[test]
    fn spec_cycle() {
        let f = FamilySpec::new(
            vec![("A".into(), 2), ("B".into(), 2)],
            vec![Factor::new(&["A"], &["B"]), Factor::new(&["B"], &["A"])],
        );
        assert_eq!(f.compile().unwrap_err().code(), "SPEC_CYCLE");
    }

    #[test]
    fn induced_examples() {
        let xor = DiscreteChannel::deterministic(&[&["M1"], &["M2"]], &[&["M1"], &["M2"]], vec![2, 2], vec![2, 2], |x| {
            vec![x[0] ^ x[1], x[1]]
        })
        .unwrap();
        let inp = JointPmf::uniform(vec![Var::new("X1", 2), Var::new("X2", 2)]).unwrap();
        let j = induced_joint(&inp, &xor).unwrap();
        let e: [&str; 0] = [];
        assert!(j.conditional_mutual_information(&["X1"], &["Y1"], &e).unwrap().abs() < 1e-12);
        assert!((j.conditional_mutual_information(&["X1"], &["Y1"], &["X2"]).unwrap() - 1.0).abs() < 1e-12);

        let bad = JointPmf::uniform(vec![Var::new("X1", 3), Var::new("X2", 2)]).unwrap();
        assert_eq!(induced_joint(&bad, &xor).unwrap_err().code(), "ALPHABET_MISMATCH");
    }
}
