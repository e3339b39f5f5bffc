//! Exact propagation of dephasing-free segments in the eigenbasis of the twisting axis.

use nalgebra::{DMatrix, DVector};

use super::engine::Axis;
use crate::spin_algebra::ladder_coefficients;
use crate::C64;

/// Eigen-decomposition A = V·diag(x)·V† of Jx or Jy on a spin-j block.
#[derive(Clone, Debug)]
pub(crate) struct AxisBasis {
    pub values: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

impl AxisBasis {
    pub fn new(two_j: usize, axis: Axis) -> AxisBasis {
        let d = two_j + 1;
        let c = ladder_coefficients(two_j);
        let mut jx = DMatrix::<f64>::zeros(d, d);
        for k in 1..d {
            jx[(k - 1, k)] = 0.5 * c[k];
            jx[(k, k - 1)] = 0.5 * c[k];
        }
        let eig = jx.symmetric_eigen();
        // The spectrum is exactly {−j, …, j}.
        let values: Vec<f64> = eig.eigenvalues.iter().map(|x| (2.0 * x).round() / 2.0).collect();
        let j = two_j as f64 / 2.0;
        let vectors = DMatrix::from_fn(d, d, |k, a| {
            let v = C64::new(eig.eigenvectors[(k, a)], 0.0);
            match axis {
                Axis::X => v,
                // Jy = R Jx R† with R = exp(−iπJz/2).
                Axis::Y => v * C64::from_polar(1.0, -std::f64::consts::FRAC_PI_2 * (j - k as f64)),
            }
        });
        AxisBasis { values, vectors }
    }

    /// e^{ict A²} ψ (H = −cA²).
    pub fn propagate_pure(&self, psi: &DVector<C64>, twist: f64, t: f64) -> DVector<C64> {
        let mut coeff = self.vectors.ad_mul(psi);
        for (a, z) in coeff.iter_mut().enumerate() {
            *z *= C64::from_polar(1.0, twist * self.values[a] * self.values[a] * t);
        }
        &self.vectors * coeff
    }

    /// Density matrix under H = −cA² and collective dephasing Γ'·D[A] for time t.
    pub fn propagate_dense(&self, rho: &DMatrix<C64>, twist: f64, collective: f64, t: f64) -> DMatrix<C64> {
        let mut r = self.vectors.ad_mul(rho) * &self.vectors;
        let x = &self.values;
        for a in 0..x.len() {
            for b in 0..x.len() {
                let ph = twist * (x[a] * x[a] - x[b] * x[b]) * t;
                let damp = -0.5 * collective * (x[a] - x[b]).powi(2) * t;
                r[(a, b)] *= C64::from_polar(damp.exp(), ph);
            }
        }
        &self.vectors * r * self.vectors.adjoint()
    }
}

/// Eigen-decomposition of the real symmetric Jx² − Jy² = (J₊² + J₋²)/2.
#[derive(Clone, Debug)]
pub(crate) struct TatBasis {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl TatBasis {
    pub fn new(two_j: usize) -> TatBasis {
        let d = two_j + 1;
        let c = ladder_coefficients(two_j);
        let mut m = DMatrix::<f64>::zeros(d, d);
        for k in 2..d {
            let v = 0.5 * c[k] * c[k - 1];
            m[(k - 2, k)] = v;
            m[(k, k - 2)] = v;
        }
        let eig = m.symmetric_eigen();
        TatBasis {
            values: eig.eigenvalues.iter().cloned().collect(),
            vectors: eig.eigenvectors,
        }
    }

    /// exp(iκ(Jx² − Jy²))ψ.
    pub fn propagate(&self, psi: &DVector<C64>, kappa: f64) -> DVector<C64> {
        let vc = self.vectors.map(|x| C64::new(x, 0.0));
        let mut coeff = vc.ad_mul(psi);
        for (a, z) in coeff.iter_mut().enumerate() {
            *z *= C64::from_polar(1.0, kappa * self.values[a]);
        }
        vc * coeff
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin_algebra::{build_operators, DickeBasis};

    #[test]
    fn axis_bases_diagonalize_jx_and_jy() {
        for n in [1usize, 4, 9] {
            let ops = build_operators(&DickeBasis::new(n).unwrap());
            for (axis, op) in [(Axis::X, &ops.jx.matrix), (Axis::Y, &ops.jy.matrix)] {
                let b = AxisBasis::new(n, axis);
                let diag = DMatrix::from_diagonal(&DVector::from_iterator(
                    n + 1,
                    b.values.iter().map(|x| C64::new(*x, 0.0)),
                ));
                let rebuilt = &b.vectors * diag * b.vectors.adjoint();
                assert!((rebuilt - op).norm() < 1e-12, "n={n} {axis:?}");
            }
        }
    }

    #[test]
    fn tat_basis_reconstructs_generator() {
        let n = 8;
        let ops = build_operators(&DickeBasis::new(n).unwrap());
        let target = &ops.jx2.matrix - &ops.jy2.matrix;
        let b = TatBasis::new(n);
        let rebuilt = &b.vectors * DMatrix::from_diagonal(&DVector::from_vec(b.values.clone())) * b.vectors.transpose();
        assert!((rebuilt.map(|x| C64::new(x, 0.0)) - target).norm() < 1e-12);
    }
}
