use nalgebra::{DMatrix, DVector};

use super::moments::{banded_moments, MomentSet};
use super::operators::max_abs;
use super::{sector_list, DickeBasis};
use crate::{Error, Result, C64};

/// Weighted block of a permutation-invariant state: `matrix = d_j·ρ_j`, so that the
/// traces of all blocks add up to one.
#[derive(Clone, Debug)]
pub struct Block {
    pub two_j: usize,
    pub multiplicity: f64,
    pub matrix: DMatrix<C64>,
}

/// Storage of a collective spin state.
#[derive(Clone, Debug)]
pub enum StateData {
    /// State vector in the maximal-j sector.
    Pure(DVector<C64>),
    /// Density matrix in the maximal-j sector.
    Dense(DMatrix<C64>),
    /// Permutation-invariant block form, blocks ordered by decreasing j.
    Blocks(Vec<Block>),
}

/// Collective spin state on a Dicke basis.
#[derive(Clone, Debug)]
pub struct SpinState {
    pub basis: DickeBasis,
    pub rho: StateData,
}

/// Coherent spin state |J, J⟩ polarized along +z.
pub fn css_state(basis: &DickeBasis) -> SpinState {
    let mut psi = DVector::<C64>::zeros(basis.dim());
    psi[0] = C64::new(1.0, 0.0);
    SpinState {
        basis: basis.clone(),
        rho: StateData::Pure(psi),
    }
}

impl SpinState {
    /// Normalized pure state from amplitudes in |J, m⟩ order.
    pub fn pure(basis: &DickeBasis, psi: DVector<C64>) -> Result<Self> {
        if psi.len() != basis.dim() {
            return Err(Error::BasisMismatch(format!(
                "vector length {} vs dim {}",
                psi.len(),
                basis.dim()
            )));
        }
        let norm = psi.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::param("psi", "zero or non-finite norm"));
        }
        Ok(SpinState {
            basis: basis.clone(),
            rho: StateData::Pure(psi / C64::new(norm, 0.0)),
        })
    }

    /// Maximal-j density matrix; must be square with the basis dimension.
    pub fn dense(basis: &DickeBasis, rho: DMatrix<C64>) -> Result<Self> {
        if rho.nrows() != basis.dim() || rho.ncols() != basis.dim() {
            return Err(Error::BasisMismatch(format!(
                "matrix {}×{} vs dim {}",
                rho.nrows(),
                rho.ncols(),
                basis.dim()
            )));
        }
        Ok(SpinState {
            basis: basis.clone(),
            rho: StateData::Dense(rho),
        })
    }

    /// Identity/(2J+1) on the maximal-j sector.
    pub fn maximally_mixed(basis: &DickeBasis) -> Self {
        let d = basis.dim();
        let rho = DMatrix::<C64>::identity(d, d) * C64::new(1.0 / d as f64, 0.0);
        SpinState {
            basis: basis.clone(),
            rho: StateData::Dense(rho),
        }
    }

    pub fn is_pure_vector(&self) -> bool {
        matches!(self.rho, StateData::Pure(_))
    }

    /// Density matrix of a maximal-j state. Block states are accepted when every
    /// block below the top one is empty.
    pub fn density_matrix(&self) -> Result<DMatrix<C64>> {
        match &self.rho {
            StateData::Pure(psi) => Ok(psi * psi.adjoint()),
            StateData::Dense(m) => Ok(m.clone()),
            StateData::Blocks(blocks) => {
                let top = blocks
                    .first()
                    .ok_or_else(|| Error::BasisMismatch("empty block list".into()))?;
                let rest: f64 = blocks[1..].iter().map(|b| max_abs(&b.matrix)).fold(0.0, f64::max);
                if top.two_j != self.basis.n_spins || rest > 1e-12 {
                    return Err(Error::BasisMismatch(
                        "state has weight outside the maximal-j sector".into(),
                    ));
                }
                Ok(top.matrix.clone())
            }
        }
    }

    /// Embeds the state into the block form covering every sector.
    pub fn to_blocks(&self) -> Result<SpinState> {
        if let StateData::Blocks(_) = self.rho {
            return Ok(self.clone());
        }
        let top = self.density_matrix()?;
        let blocks = sector_list(self.basis.n_spins)
            .into_iter()
            .enumerate()
            .map(|(i, s)| Block {
                two_j: s.two_j,
                multiplicity: s.multiplicity,
                matrix: if i == 0 {
                    top.clone()
                } else {
                    DMatrix::zeros(s.dim(), s.dim())
                },
            })
            .collect();
        Ok(SpinState {
            basis: DickeBasis::with_sectors(self.basis.n_spins)?,
            rho: StateData::Blocks(blocks),
        })
    }

    /// Total trace (sum over blocks for block states).
    pub fn trace(&self) -> C64 {
        match &self.rho {
            StateData::Pure(psi) => C64::new(psi.norm_squared(), 0.0),
            StateData::Dense(m) => m.trace(),
            StateData::Blocks(b) => b.iter().map(|b| b.matrix.trace()).sum(),
        }
    }

    /// Largest |ρ − ρ†| entry over all blocks.
    pub fn hermiticity_error(&self) -> f64 {
        match &self.rho {
            StateData::Pure(_) => 0.0,
            StateData::Dense(m) => max_abs(&(m - m.adjoint())),
            StateData::Blocks(b) => b
                .iter()
                .map(|b| max_abs(&(&b.matrix - b.matrix.adjoint())))
                .fold(0.0, f64::max),
        }
    }

    /// Smallest eigenvalue of the Hermitian part (over the weighted blocks P_j for
    /// block states).
    pub fn min_eigenvalue(&self) -> f64 {
        let herm_min = |m: &DMatrix<C64>| {
            let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
            if !(scale > f64::MIN_POSITIVE) {
                return if scale.is_finite() { 0.0 } else { f64::NEG_INFINITY };
            }
            // The QR sweep breaks down on entries many decades below the largest one;
            // dropping them moves any eigenvalue by at most dim·1e-20 (relative).
            let h = ((m + m.adjoint()) * C64::new(0.5 / scale, 0.0)).map(|z| {
                if z.norm() < 1e-20 {
                    C64::new(0.0, 0.0)
                } else {
                    z
                }
            });
            scale * h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
        };
        match &self.rho {
            StateData::Pure(_) => 0.0,
            StateData::Dense(m) => herm_min(m),
            StateData::Blocks(b) => b.iter().map(|b| herm_min(&b.matrix)).fold(f64::INFINITY, f64::min),
        }
    }

    /// Checks Hermiticity, unit trace and positivity against `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let tr = self.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > tol {
            return Err(Error::param("state", format!("trace {tr} differs from 1")));
        }
        if self.hermiticity_error() > tol {
            return Err(Error::param("state", "not Hermitian"));
        }
        let ev = self.min_eigenvalue();
        if ev < -tol {
            return Err(Error::param("state", format!("negative eigenvalue {ev:.3e}")));
        }
        Ok(())
    }

    /// The five tracked moments, evaluated from the banded operator structure.
    pub fn moments(&self) -> MomentSet {
        banded_moments(self)
    }

    /// Purity tr ρ² (with multiplicity weights for block states).
    pub fn purity(&self) -> f64 {
        match &self.rho {
            StateData::Pure(psi) => psi.norm_squared().powi(2),
            StateData::Dense(m) => m.iter().map(|z| z.norm_sqr()).sum(),
            StateData::Blocks(b) => b
                .iter()
                .map(|b| b.matrix.iter().map(|z| z.norm_sqr()).sum::<f64>() / b.multiplicity)
                .sum(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn css_is_valid_and_polarized() {
        for n in [1usize, 4, 80] {
            let b = DickeBasis::new(n).unwrap();
            let s = css_state(&b);
            s.validate(1e-12).unwrap();
            let m = s.moments();
            assert_eq!(m.jz_mean, b.j_total());
            assert!((m.jx2 - b.j_total() / 2.0).abs() < 1e-12);
            assert!((m.jy2 - b.j_total() / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn embedding_into_blocks_keeps_moments() {
        let b = DickeBasis::new(5).unwrap();
        let s = css_state(&b);
        let blocks = s.to_blocks().unwrap();
        blocks.validate(1e-12).unwrap();
        let (a, c) = (s.moments(), blocks.moments());
        assert_eq!(a, c);
        assert!((blocks.density_matrix().unwrap() - s.density_matrix().unwrap()).norm() < 1e-15);
    }

    #[test]
    fn min_eigenvalue_of_nearly_empty_blocks_is_finite() {
        let b = DickeBasis::new(6).unwrap();
        let mut s = css_state(&b).to_blocks().unwrap();
        if let StateData::Blocks(blocks) = &mut s.rho {
            for (k, blk) in blocks.iter_mut().enumerate().skip(1) {
                let d = blk.matrix.nrows();
                blk.matrix = DMatrix::from_fn(d, d, |i, j| {
                    C64::new(1e-310 * (1.0 + i.min(j) as f64) * (k as f64), 0.0)
                });
            }
        }
        let ev = s.min_eigenvalue();
        assert!(ev.is_finite() && ev.abs() < 1e-300, "{ev}");
    }

    #[test]
    fn wrong_dimension_rejected() {
        let b = DickeBasis::new(3).unwrap();
        assert!(SpinState::dense(&b, DMatrix::zeros(3, 3)).is_err());
    }
}
