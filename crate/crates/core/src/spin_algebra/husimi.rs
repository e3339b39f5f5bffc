use nalgebra::DVector;

use super::{binomial, SpinState, StateData};
use crate::{Error, Result, C64};

/// Angular resolution of a Husimi map; θ ∈ [0, π] inclusive, φ ∈ [0, 2π) exclusive.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HusimiGrid {
    pub n_theta: usize,
    pub n_phi: usize,
}

impl Default for HusimiGrid {
    fn default() -> Self {
        HusimiGrid {
            n_theta: 128,
            n_phi: 256,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HusimiPoint {
    pub theta: f64,
    pub phi: f64,
    pub q: f64,
}

/// Amplitudes ⟨J, m|θ, φ⟩ of the coherent state pointing along (θ, φ), index k ↔ m = J − k.
pub fn css_amplitudes(two_j: usize, theta: f64, phi: f64) -> DVector<C64> {
    let j = two_j as f64 / 2.0;
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    DVector::from_fn(two_j + 1, |k, _| {
        let up = (two_j - k) as i32; // J + m
        let down = k as i32; // J − m
        let mag = binomial(two_j, k).sqrt() * c.powi(up) * s.powi(down);
        let m = j - k as f64;
        C64::from_polar(mag, -m * phi)
    })
}

/// Husimi Q(θ, φ) = ⟨θ, φ|ρ|θ, φ⟩ on a regular grid, row-major in θ.
pub fn husimi_sphere_data(state: &SpinState, grid: HusimiGrid) -> Result<Vec<HusimiPoint>> {
    if grid.n_theta < 2 || grid.n_phi < 2 {
        return Err(Error::param("grid", "at least 2 points per axis required"));
    }
    let two_j = state.basis.n_spins;
    if two_j > 1000 {
        return Err(Error::param("state", "Husimi evaluation limited to N ≤ 1000"));
    }
    let rho = match &state.rho {
        StateData::Pure(_) => None,
        _ => Some(state.density_matrix()?),
    };
    let mut out = Vec::with_capacity(grid.n_theta * grid.n_phi);
    for it in 0..grid.n_theta {
        let theta = std::f64::consts::PI * it as f64 / (grid.n_theta - 1) as f64;
        for ip in 0..grid.n_phi {
            let phi = 2.0 * std::f64::consts::PI * ip as f64 / grid.n_phi as f64;
            let v = css_amplitudes(two_j, theta, phi);
            let q = match (&state.rho, &rho) {
                (StateData::Pure(psi), _) => v.dotc(psi).norm_sqr(),
                (_, Some(r)) => v.dotc(&(r * &v)).re,
                _ => unreachable!(),
            };
            out.push(HusimiPoint {
                theta,
                phi,
                q: q.clamp(0.0, 1.0),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::{css_state, DickeBasis};
    use super::*;

    #[test]
    fn css_peaks_at_north_pole() {
        let b = DickeBasis::new(10).unwrap();
        let data = husimi_sphere_data(&css_state(&b), HusimiGrid { n_theta: 33, n_phi: 16 }).unwrap();
        let best = data.iter().max_by(|a, b| a.q.total_cmp(&b.q)).unwrap();
        assert_eq!(best.theta, 0.0);
        assert!((best.q - 1.0).abs() < 1e-14);
        assert!(data.iter().all(|p| p.q <= 1.0));
    }

    #[test]
    fn coherent_state_is_normalized() {
        for two_j in [1usize, 6, 41] {
            let v = css_amplitudes(two_j, 1.1, 0.4);
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn coarse_grid_rejected() {
        let b = DickeBasis::new(2).unwrap();
        assert!(husimi_sphere_data(&css_state(&b), HusimiGrid { n_theta: 1, n_phi: 8 }).is_err());
    }
}
