use nalgebra::DMatrix;

use super::DickeBasis;
use crate::C64;

/// Dense operator on the maximal-j sector of a basis.
#[derive(Clone, Debug)]
pub struct SpinOperator {
    pub basis: DickeBasis,
    pub matrix: DMatrix<C64>,
}

impl SpinOperator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn adjoint(&self) -> SpinOperator {
        SpinOperator {
            basis: self.basis.clone(),
            matrix: self.matrix.adjoint(),
        }
    }

    /// Largest |A − A†| entry.
    pub fn hermiticity_error(&self) -> f64 {
        max_abs(&(&self.matrix - self.matrix.adjoint()))
    }
}

/// The collective operators used throughout the crate.
#[derive(Clone, Debug)]
pub struct CollectiveOps {
    pub jx: SpinOperator,
    pub jy: SpinOperator,
    pub jz: SpinOperator,
    pub jp: SpinOperator,
    pub jm: SpinOperator,
    pub jx2: SpinOperator,
    pub jy2: SpinOperator,
    pub jz2: SpinOperator,
    pub cxy: SpinOperator,
}

/// Ladder coefficients c_k = ⟨m_{k−1}|J₊|m_k⟩ = √(j(j+1) − m_k(m_k+1)) for k = 1..2j,
/// with m_k = j − k. The returned vector has length 2j + 1 and c_0 = 0.
pub fn ladder_coefficients(two_j: usize) -> Vec<f64> {
    let j = two_j as f64 / 2.0;
    (0..=two_j)
        .map(|k| {
            if k == 0 {
                0.0
            } else {
                let m = j - k as f64;
                // j(j+1) − m(m+1) = (j−m)(j+m+1), exact in integers of 2j.
                ((j - m) * (j + m + 1.0)).sqrt()
            }
        })
        .collect()
}

/// Builds Jx, Jy, Jz, J±, their squares and Cxy = (JxJy + JyJx)/2 in |J, m⟩.
pub fn build_operators(basis: &DickeBasis) -> CollectiveOps {
    let d = basis.dim();
    let c = ladder_coefficients(basis.n_spins);
    let mut jp = DMatrix::<C64>::zeros(d, d);
    for k in 1..d {
        jp[(k - 1, k)] = C64::new(c[k], 0.0);
    }
    let jm = jp.adjoint();
    let jz = DMatrix::<C64>::from_diagonal(&nalgebra::DVector::from_fn(d, |k, _| C64::new(basis.m(k), 0.0)));
    let half = C64::new(0.5, 0.0);
    let jx = (&jp + &jm) * half;
    let jy = (&jp - &jm) * C64::new(0.0, -0.5);
    let jx2 = &jx * &jx;
    let jy2 = &jy * &jy;
    let jz2 = &jz * &jz;
    let cxy = (&jx * &jy + &jy * &jx) * half;
    let wrap = |m: DMatrix<C64>| SpinOperator {
        basis: basis.clone(),
        matrix: m,
    };
    CollectiveOps {
        jx: wrap(jx),
        jy: wrap(jy),
        jz: wrap(jz),
        jp: wrap(jp),
        jm: wrap(jm),
        jx2: wrap(jx2),
        jy2: wrap(jy2),
        jz2: wrap(jz2),
        cxy: wrap(cxy),
    }
}

pub(crate) fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}
