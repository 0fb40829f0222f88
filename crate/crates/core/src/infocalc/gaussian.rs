use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::netmodel::GaussianNetwork;

/// `½·log2(1+x)`, the point-to-point Gaussian capacity at SNR `x`.
///
/// This definition is imported from the standard AWGN capacity formula; the
/// sum-rate expressions that use it do not restate it.
pub fn gaussian_psi(x: f64) -> Result<f64> {
    if x < 0.0 || x.is_nan() {
        return Err(Error::NegativeSnr(x));
    }
    Ok(0.5 * (1.0 + x).log2())
}

/// Covariance of jointly Gaussian transmitter inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianCovariance {
    matrix: DMatrix<f64>,
}

impl GaussianCovariance {
    /// Validates symmetry, positive semidefiniteness (to 1e-9) and the power
    /// budget of `net`.
    pub fn new(net: &GaussianNetwork, matrix: DMatrix<f64>) -> Result<Self> {
        let k = net.topology.k1;
        if matrix.nrows() != k || matrix.ncols() != k {
            return Err(Error::NotPsd(format!("expected {k}x{k} covariance")));
        }
        for i in 0..k {
            for j in 0..k {
                if (matrix[(i, j)] - matrix[(j, i)]).abs() > 1e-9 {
                    return Err(Error::NotPsd("matrix is not symmetric".into()));
                }
            }
            if matrix[(i, i)] > net.powers[i] + 1e-9 {
                return Err(Error::NotPsd(format!(
                    "variance {} of X{} exceeds power {}",
                    matrix[(i, i)],
                    i + 1,
                    net.powers[i]
                )));
            }
        }
        let eig = matrix.clone().symmetric_eigen();
        if let Some(min) = eig.eigenvalues.iter().cloned().reduce(f64::min) {
            if min < -1e-9 {
                return Err(Error::NotPsd(format!("smallest eigenvalue {min}")));
            }
        }
        Ok(GaussianCovariance { matrix })
    }

    /// Independent inputs at full power.
    pub fn independent_full_power(net: &GaussianNetwork) -> Result<Self> {
        Self::new(net, DMatrix::from_diagonal(&nalgebra::DVector::from_vec(net.powers.clone())))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

fn conditional_cov(sigma: &DMatrix<f64>, given: &[usize]) -> DMatrix<f64> {
    if given.is_empty() {
        return sigma.clone();
    }
    let n = sigma.nrows();
    let s_ss = DMatrix::from_fn(given.len(), given.len(), |r, c| sigma[(given[r], given[c])]);
    let s_as = DMatrix::from_fn(n, given.len(), |r, c| sigma[(r, given[c])]);
    let pinv = s_ss.pseudo_inverse(1e-12).expect("pseudo-inverse of a symmetric matrix");
    sigma - &s_as * pinv * s_as.transpose()
}

fn log2_det_output(net: &GaussianNetwork, cov: &DMatrix<f64>, rx: &[usize]) -> f64 {
    let k1 = net.topology.k1;
    let g = DMatrix::from_fn(rx.len(), k1, |r, c| net.gains[rx[r]][c]);
    let m = &g * cov * g.transpose() + DMatrix::identity(rx.len(), rx.len());
    m.determinant().log2()
}

/// `I(X_a; Y_b | X_c)` in bits for jointly Gaussian inputs with covariance
/// `cov` and independent unit-variance noise at each receiver.
pub fn gaussian_mutual_information(
    net: &GaussianNetwork,
    cov: &GaussianCovariance,
    a: &[usize],
    b: &[usize],
    c: &[usize],
) -> Result<f64> {
    let k1 = net.topology.k1;
    for &i in a.iter().chain(c) {
        if i >= k1 {
            return Err(Error::VariableUnknown(format!("X{}", i + 1)));
        }
    }
    if let Some(&j) = b.iter().find(|&&j| j >= net.topology.k2) {
        return Err(Error::VariableUnknown(format!("Y{}", j + 1)));
    }
    if let Some(i) = a.iter().find(|i| c.contains(i)) {
        return Err(Error::OverlappingSets(format!("X{}", i + 1)));
    }
    if a.is_empty() || b.is_empty() {
        return Ok(0.0);
    }
    let sigma = cov.matrix();
    let mut ac: Vec<usize> = c.to_vec();
    ac.extend_from_slice(a);
    let h_c = log2_det_output(net, &conditional_cov(sigma, c), b);
    let h_ac = log2_det_output(net, &conditional_cov(sigma, &ac), b);
    Ok((0.5 * (h_c - h_ac)).max(0.0))
}
