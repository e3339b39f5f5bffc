//! Full 2^N density-matrix oracle for small ensembles.
//!
//! Bit i of a basis index set means spin i points down, so m = N/2 − popcount.

use super::engine::{Axis, Segment};
use crate::ode::OdeSystem;
#[cfg(test)]
use crate::spin_algebra::StateData;
use crate::spin_algebra::{binomial, MomentSet, SpinState};
use crate::{Error, Result, C64};

pub const MAX_SPINS: usize = 12;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Row-major 2^N × 2^N density matrix.
#[derive(Clone, Debug)]
pub(crate) struct BruteState {
    pub n: usize,
    pub dim: usize,
    pub rho: Vec<C64>,
}

/// ⟨a|A|a ⊕ 2^i⟩ for the collective axis operator, as a function of bit i of `a`.
fn elem_left(axis: Axis, bit_set: bool) -> C64 {
    match (axis, bit_set) {
        (Axis::X, _) => C64::new(0.5, 0.0),
        (Axis::Y, true) => C64::new(0.0, 0.5),
        (Axis::Y, false) => C64::new(0.0, -0.5),
    }
}

impl BruteState {
    /// Embeds a maximal-j state into the symmetric subspace.
    pub fn embed(state: &SpinState) -> Result<Self> {
        let n = state.basis.n_spins;
        if n > MAX_SPINS {
            return Err(Error::Representation {
                representation: "full_hilbert".into(),
                n_spins: n,
                reason: format!("limited to N ≤ {MAX_SPINS}"),
            });
        }
        let top = state.density_matrix()?;
        let dim = 1usize << n;
        let norm: Vec<f64> = (0..=n).map(|k| 1.0 / binomial(n, k).sqrt()).collect();
        let pop: Vec<usize> = (0..dim).map(|a| a.count_ones() as usize).collect();
        let mut rho = vec![ZERO; dim * dim];
        for a in 0..dim {
            for b in 0..dim {
                let (ka, kb) = (pop[a], pop[b]);
                rho[a * dim + b] = top[(ka, kb)] * (norm[ka] * norm[kb]);
            }
        }
        Ok(BruteState { n, dim, rho })
    }

    /// (A·X) for the collective operator A.
    fn left(&self, axis: Axis, x: &[C64]) -> Vec<C64> {
        let d = self.dim;
        let mut out = vec![ZERO; d * d];
        for a in 0..d {
            for i in 0..self.n {
                let e = elem_left(axis, a >> i & 1 == 1);
                let src = &x[(a ^ (1 << i)) * d..(a ^ (1 << i)) * d + d];
                let dst = &mut out[a * d..a * d + d];
                for (o, s) in dst.iter_mut().zip(src) {
                    *o += e * s;
                }
            }
        }
        out
    }

    /// (X·A) for the collective operator A.
    fn right(&self, axis: Axis, x: &[C64]) -> Vec<C64> {
        let d = self.dim;
        let mut out = vec![ZERO; d * d];
        for a in 0..d {
            for b in 0..d {
                let mut s = ZERO;
                for i in 0..self.n {
                    let bp = b ^ (1 << i);
                    // A_{b', b} = elem_left(bit i of b').
                    s += x[a * d + bp] * elem_left(axis, bp >> i & 1 == 1);
                }
                out[a * d + b] = s;
            }
        }
        out
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|a| self.rho[a * self.dim + a].re).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim;
        let mut e: f64 = 0.0;
        for a in 0..d {
            for b in a..d {
                e = e.max((self.rho[a * d + b] - self.rho[b * d + a].conj()).norm());
            }
        }
        e
    }

    pub fn moments(&self) -> MomentSet {
        let d = self.dim;
        let half = self.n as f64 / 2.0;
        let mut m = MomentSet::default();
        for a in 0..d {
            let mz = half - a.count_ones() as f64;
            let p = self.rho[a * d + a].re;
            m.jz_mean += mz * p;
            m.jz2 += mz * mz * p;
        }
        let tr = |x: &[C64]| -> C64 { (0..d).map(|a| x[a * d + a]).sum() };
        let xr = self.left(Axis::X, &self.rho);
        let yr = self.left(Axis::Y, &self.rho);
        m.jx2 = tr(&self.left(Axis::X, &xr)).re;
        m.jy2 = tr(&self.left(Axis::Y, &yr)).re;
        m.cxy = tr(&self.left(Axis::X, &yr)).re;
        m
    }

    #[cfg(test)]
    /// Overlap ⟨ψ|ρ|ψ⟩ with an embedded maximal-j pure state.
    pub fn fidelity(&self, psi: &nalgebra::DVector<C64>) -> f64 {
        let n = self.n;
        let d = self.dim;
        let amp: Vec<C64> = (0..d)
            .map(|a| {
                let k = a.count_ones() as usize;
                psi[k] / binomial(n, k).sqrt()
            })
            .collect();
        let mut s = ZERO;
        for a in 0..d {
            for b in 0..d {
                s += amp[a].conj() * self.rho[a * d + b] * amp[b];
            }
        }
        s.re
    }
}

/// Lindblad generator of a segment on the full Hilbert space.
pub(crate) struct BruteGenerator {
    pub template: BruteState,
    pub seg: Segment,
}

impl OdeSystem<C64> for BruteGenerator {
    fn rhs(&self, _t: f64, y: &[C64], dy: &mut [C64]) {
        let st = &self.template;
        let d = st.dim;
        let seg = self.seg;
        let ax = st.left(seg.axis, y);
        let a2 = st.left(seg.axis, &ax);
        let xa = st.right(seg.axis, y);
        let x2 = st.right(seg.axis, &xa);
        let axa = if seg.collective != 0.0 {
            st.right(seg.axis, &ax)
        } else {
            vec![ZERO; d * d]
        };
        let left = C64::new(-0.5 * seg.collective, seg.twist);
        let right = C64::new(-0.5 * seg.collective, -seg.twist);
        for a in 0..d {
            for b in 0..d {
                let i = a * d + b;
                let deph = -2.0 * seg.gamma * (a ^ b).count_ones() as f64;
                dy[i] = left * a2[i] + right * x2[i] + axa[i] * seg.collective + y[i] * deph;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::oat_unitary_state;
    use crate::ode::{Dopri5, Tolerances};
    use crate::spin_algebra::{css_state, DickeBasis};

    #[test]
    fn unitary_oat_matches_closed_form_state() {
        let basis = DickeBasis::new(5).unwrap();
        let css = css_state(&basis);
        let mut b = BruteState::embed(&css).unwrap();
        let seg = Segment {
            axis: Axis::X,
            twist: 0.7,
            collective: 0.0,
            gamma: 0.0,
        };
        let gen = BruteGenerator {
            template: BruteState {
                n: b.n,
                dim: b.dim,
                rho: Vec::new(),
            },
            seg,
        };
        let t = 1.3;
        Dopri5::new(Tolerances {
            rtol: 1e-12,
            atol: 1e-14,
        })
        .solve(&gen, 0.0, &mut b.rho, &[t], |_, _, _| Ok(()))
        .unwrap();
        let StateData::Pure(psi) = oat_unitary_state(&css, 0.7, t).unwrap().rho else {
            unreachable!()
        };
        assert!((1.0 - b.fidelity(&psi)).abs() < 1e-10);
    }

    #[test]
    fn embedding_preserves_moments() {
        let basis = DickeBasis::new(4).unwrap();
        let st = oat_unitary_state(&css_state(&basis), 1.0, 0.4).unwrap();
        let b = BruteState::embed(&st).unwrap();
        assert!(b.moments().max_abs_diff(&st.moments()) < 1e-12);
        assert!((b.trace() - 1.0).abs() < 1e-12);
    }
}
