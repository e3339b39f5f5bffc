use nalgebra::DMatrix;

use super::operators::ladder_coefficients;
use super::{CollectiveOps, SpinState, StateData};
use crate::{Error, Result, C64};

/// ⟨Jz⟩, ⟨Jx²⟩, ⟨Jy²⟩, ⟨Jz²⟩ and ⟨Cxy⟩ with Cxy = (JxJy + JyJx)/2.
#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MomentSet {
    pub jz_mean: f64,
    pub jx2: f64,
    pub jy2: f64,
    pub jz2: f64,
    pub cxy: f64,
}

impl MomentSet {
    pub fn as_array(&self) -> [f64; 5] {
        [self.jz_mean, self.jx2, self.jy2, self.jz2, self.cxy]
    }

    /// Moments divided by `s` (used to renormalize truncated block states).
    pub fn scaled(&self, s: f64) -> MomentSet {
        MomentSet {
            jz_mean: self.jz_mean * s,
            jx2: self.jx2 * s,
            jy2: self.jy2 * s,
            jz2: self.jz2 * s,
            cxy: self.cxy * s,
        }
    }

    /// Largest absolute difference over the five moments.
    pub fn max_abs_diff(&self, other: &MomentSet) -> f64 {
        self.as_array()
            .iter()
            .zip(other.as_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Accumulates the moments of one spin-j block given element access `r(k, l) = ρ_kl`.
fn block_moments(two_j: usize, r: impl Fn(usize, usize) -> C64, acc: &mut MomentSet) {
    let j = two_j as f64 / 2.0;
    let c = ladder_coefficients(two_j);
    let d = two_j + 1;
    let mut t2 = C64::new(0.0, 0.0);
    for k in 0..d {
        let m = j - k as f64;
        let p = r(k, k).re;
        let up = c[k] * c[k];
        let down = if k + 1 < d { c[k + 1] * c[k + 1] } else { 0.0 };
        acc.jz_mean += m * p;
        acc.jz2 += m * m * p;
        let diag = 0.25 * (up + down) * p;
        acc.jx2 += diag;
        acc.jy2 += diag;
        if k >= 2 {
            t2 += r(k, k - 2) * (c[k] * c[k - 1]);
        }
    }
    // tr(J₊²ρ) = t2; Jx², Jy² pick ±Re, Cxy = (J₊² − J₋²)/4i picks Im.
    acc.jx2 += 0.5 * t2.re;
    acc.jy2 -= 0.5 * t2.re;
    acc.cxy += 0.5 * t2.im;
}

pub(crate) fn banded_moments(state: &SpinState) -> MomentSet {
    let mut acc = MomentSet::default();
    match &state.rho {
        StateData::Pure(psi) => block_moments(state.basis.n_spins, |k, l| psi[k] * psi[l].conj(), &mut acc),
        StateData::Dense(m) => block_moments(state.basis.n_spins, |k, l| m[(k, l)], &mut acc),
        StateData::Blocks(blocks) => {
            for b in blocks {
                block_moments(b.two_j, |k, l| b.matrix[(k, l)], &mut acc);
            }
        }
    }
    acc
}

fn expect(op: &DMatrix<C64>, rho: &DMatrix<C64>) -> C64 {
    // tr(Oρ) = Σ_kl O_kl ρ_lk
    let mut s = C64::new(0.0, 0.0);
    for k in 0..op.nrows() {
        for l in 0..op.ncols() {
            s += op[(k, l)] * rho[(l, k)];
        }
    }
    s
}

fn dense_expectations(state: &SpinState, ops: &CollectiveOps) -> Result<[C64; 5]> {
    if !state.basis.compatible(&ops.jz.basis) {
        return Err(Error::BasisMismatch(format!(
            "state has N = {}, operators N = {}",
            state.basis.n_spins, ops.jz.basis.n_spins
        )));
    }
    let rho = state.density_matrix()?;
    Ok([
        expect(&ops.jz.matrix, &rho),
        expect(&ops.jx2.matrix, &rho),
        expect(&ops.jy2.matrix, &rho),
        expect(&ops.jz2.matrix, &rho),
        expect(&ops.cxy.matrix, &rho),
    ])
}

/// Moments as Re tr(O·ρ) with dense operators on the maximal-j sector.
pub fn moments(state: &SpinState, ops: &CollectiveOps) -> Result<MomentSet> {
    let e = dense_expectations(state, ops)?;
    Ok(MomentSet {
        jz_mean: e[0].re,
        jx2: e[1].re,
        jy2: e[2].re,
        jz2: e[3].re,
        cxy: e[4].re,
    })
}

/// Largest imaginary residue of tr(O·ρ) over the five moments (a Hermiticity diagnostic).
pub fn moment_residue(state: &SpinState, ops: &CollectiveOps) -> Result<f64> {
    Ok(dense_expectations(state, ops)?
        .iter()
        .map(|z| z.im.abs())
        .fold(0.0, f64::max))
}

/// (⟨Jx²+Jy²⟩ − √(⟨Jx²−Jy²⟩² + 4⟨Cxy⟩²))/2.
pub fn min_transverse_variance(m: &MomentSet) -> f64 {
    let diff = m.jx2 - m.jy2;
    0.5 * (m.jx2 + m.jy2 - (diff * diff + 4.0 * m.cxy * m.cxy).sqrt())
}

/// As [`min_transverse_variance`], rejecting values below −1e−9.
pub fn min_transverse_variance_checked(m: &MomentSet) -> Result<f64> {
    let v = min_transverse_variance(m);
    if v < -1e-9 {
        return Err(Error::param(
            "moments",
            format!("inconsistent moments: minimal variance {v:.3e} < 0"),
        ));
    }
    Ok(v)
}

/// Wineland parameter ξ² = 2J·Var_min/⟨Jz⟩².
pub fn squeezing_wineland(m: &MomentSet, j: f64) -> Result<f64> {
    if !(m.jz_mean.abs() > 1e-12 * j.max(1.0)) {
        return Err(Error::MeanSpinCollapse);
    }
    Ok(2.0 * j * min_transverse_variance(m) / (m.jz_mean * m.jz_mean))
}

/// Direction φ ∈ [0, π) in the x–y plane along which the variance is minimal.
pub fn squeezing_angle(m: &MomentSet) -> f64 {
    // Var(φ) = ⟨Jx²⟩cos²φ + ⟨Jy²⟩sin²φ + ⟨Cxy⟩sin2φ is smallest at
    // 2φ = atan2(2Cxy, Jx² − Jy²) + π.
    let phi = 0.5 * ((2.0 * m.cxy).atan2(m.jx2 - m.jy2) + std::f64::consts::PI);
    phi.rem_euclid(std::f64::consts::PI)
}

#[cfg(test)]
mod tests {
    use super::super::{build_operators, css_state, DickeBasis};
    use super::*;

    #[test]
    fn css_four_spins() {
        let b = DickeBasis::new(4).unwrap();
        let m = moments(&css_state(&b), &build_operators(&b)).unwrap();
        assert_eq!(m.jz_mean, 2.0);
        assert_eq!(m.cxy, 0.0);
    }

    #[test]
    fn maximally_mixed_has_zero_polarization() {
        let b = DickeBasis::new(2).unwrap();
        let m = moments(&SpinState::maximally_mixed(&b), &build_operators(&b)).unwrap();
        assert!(m.jz_mean.abs() < 1e-15);
        assert!(matches!(squeezing_wineland(&m, 1.0), Err(Error::MeanSpinCollapse)));
    }

    #[test]
    fn banded_and_dense_moments_agree_on_random_state() {
        let b = DickeBasis::new(9).unwrap();
        let d = b.dim();
        let a = DMatrix::<C64>::from_fn(d, d, |i, k| {
            C64::new(((i * 7 + k * 3) % 5) as f64 - 2.0, ((i + 2 * k) % 3) as f64 - 1.0)
        });
        let mut rho = &a * a.adjoint();
        let tr = rho.trace();
        rho /= tr;
        let s = SpinState::dense(&b, rho).unwrap();
        let ops = build_operators(&b);
        let dense = moments(&s, &ops).unwrap();
        let fast = s.moments();
        assert!(dense.max_abs_diff(&fast) < 1e-12, "{dense:?} {fast:?}");
        assert!(moment_residue(&s, &ops).unwrap() < 1e-12);
    }

    #[test]
    fn transverse_variance_degenerate_and_css() {
        let m = MomentSet {
            jz_mean: 3.0,
            jx2: 1.7,
            jy2: 1.7,
            jz2: 9.0,
            cxy: 0.0,
        };
        assert!((min_transverse_variance(&m) - 1.7).abs() < 1e-15);
        for n in 1..=200 {
            let b = DickeBasis::new(n).unwrap();
            let m = css_state(&b).moments();
            assert!((min_transverse_variance(&m) - b.j_total() / 2.0).abs() < 1e-12);
            assert!((squeezing_wineland(&m, b.j_total()).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn squeezing_angle_of_tilted_ellipse() {
        // Variance minimal along φ0: Jx² = a cos² + b sin², etc. with a < b rotated.
        let (a, bb, phi0): (f64, f64, f64) = (0.2, 3.0, 0.7);
        let (c, s) = (phi0.cos(), phi0.sin());
        let m = MomentSet {
            jz_mean: 1.0,
            jx2: a * c * c + bb * s * s,
            jy2: a * s * s + bb * c * c,
            jz2: 1.0,
            cxy: (a - bb) * s * c,
        };
        assert!((squeezing_angle(&m) - phi0).abs() < 1e-12);
        assert!((min_transverse_variance(&m) - a).abs() < 1e-12);
    }
}
