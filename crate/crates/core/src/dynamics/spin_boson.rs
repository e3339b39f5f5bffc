//! Joint spin–boson evolution of the dispersive Dicke model, used to check the
//! effective one-axis-twisting description.

use nalgebra::{DMatrix, DVector};

use super::result::EvolutionResult;
use crate::normal_modes::NormalModeSolution;
use crate::spin_algebra::{ladder_coefficients, SpinState, StateData};
use crate::{Error, Result, C64};

/// Moment change tolerated when the boson cutoff grows by 50%.
pub const TRUNCATION_TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct SpinBosonResult {
    /// Reduced spin dynamics (states stored as density matrices).
    pub spin: EvolutionResult,
    /// Effective OAT reference −χJx² + Δ_B·Jz with χ = 4λ²/ω₋.
    pub oat_reference: EvolutionResult,
    /// tr ρ_spin² per time.
    pub purity: Vec<f64>,
    pub n_boson_max: usize,
    /// Largest moment change observed in the truncation check.
    pub truncation_change: f64,
}

fn spin_jx(two_j: usize) -> DMatrix<f64> {
    let d = two_j + 1;
    let c = ladder_coefficients(two_j);
    let mut m = DMatrix::zeros(d, d);
    for k in 1..d {
        m[(k - 1, k)] = 0.5 * c[k];
        m[(k, k - 1)] = 0.5 * c[k];
    }
    m
}

struct Spectrum {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl Spectrum {
    fn of(h: DMatrix<f64>) -> Self {
        let e = h.symmetric_eigen();
        Spectrum {
            values: e.eigenvalues.iter().cloned().collect(),
            vectors: e.eigenvectors,
        }
    }

    fn evolve(&self, psi0: &DVector<C64>, times: &[f64]) -> Vec<DVector<C64>> {
        let v = self.vectors.map(|x| C64::new(x, 0.0));
        let c = v.ad_mul(psi0);
        times
            .iter()
            .map(|&t| {
                let ct = DVector::from_fn(c.len(), |a, _| c[a] * C64::from_polar(1.0, -self.values[a] * t));
                &v * ct
            })
            .collect()
    }
}

fn reduced_spin(psi: &DVector<C64>, ds: usize, db: usize) -> DMatrix<C64> {
    DMatrix::from_fn(ds, ds, |k, l| {
        (0..db).map(|n| psi[k * db + n] * psi[l * db + n].conj()).sum()
    })
}

fn joint_run(
    state0: &SpinState,
    omega_minus: f64,
    lambda: f64,
    delta_b: f64,
    n_max: usize,
    times: &[f64],
) -> Result<Vec<DMatrix<C64>>> {
    let psi_s = match &state0.rho {
        StateData::Pure(p) => p.clone(),
        _ => {
            return Err(Error::param(
                "state0",
                "spin–boson verifier needs a pure maximal-j state",
            ))
        }
    };
    let n = state0.basis.n_spins;
    let (ds, db) = (n + 1, n_max + 1);
    let jx = spin_jx(n);
    let j = n as f64 / 2.0;
    let mut h = DMatrix::<f64>::zeros(ds * db, ds * db);
    for k in 0..ds {
        for b in 0..db {
            let i = k * db + b;
            h[(i, i)] = omega_minus * b as f64 + delta_b * (j - k as f64);
            for k2 in 0..ds {
                let x = jx[(k, k2)];
                if x == 0.0 {
                    continue;
                }
                if b + 1 < db {
                    let v = 2.0 * lambda * x * ((b + 1) as f64).sqrt();
                    h[(i, k2 * db + b + 1)] += v;
                    h[(k2 * db + b + 1, i)] += v;
                }
            }
        }
    }
    let mut psi0 = DVector::<C64>::zeros(ds * db);
    for k in 0..ds {
        psi0[k * db] = psi_s[k];
    }
    Ok(Spectrum::of(h)
        .evolve(&psi0, times)
        .iter()
        .map(|p| reduced_spin(p, ds, db))
        .collect())
}

/// Evolves H = ω₋B†B + Δ_B·Jz + 2λ(B + B†)Jx from the boson vacuum, traces out the
/// boson and compares with the effective OAT reference. Raises a truncation error when
/// a 50% larger cutoff changes any moment by more than [`TRUNCATION_TOL`].
pub fn evolve_dicke_spin_boson(
    params: &NormalModeSolution,
    delta_b: f64,
    n_boson_max: usize,
    state0: &SpinState,
    times: &[f64],
) -> Result<SpinBosonResult> {
    let n = state0.basis.n_spins;
    if n > 20 {
        return Err(Error::Representation {
            representation: "spin_boson".into(),
            n_spins: n,
            reason: "limited to N ≤ 20".into(),
        });
    }
    if n_boson_max == 0 {
        return Err(Error::param("n_boson_max", "must be at least 1"));
    }
    let (w, lam) = (params.omega_minus, params.lambda_eff);
    let rhos = joint_run(state0, w, lam, delta_b, n_boson_max, times)?;
    let check = (n_boson_max * 3).div_ceil(2).max(n_boson_max + 1);
    let rhos_check = joint_run(state0, w, lam, delta_b, check, times)?;

    let mut spin = EvolutionResult::new(state0.basis.j_total(), params.chi, "spin_boson".into(), false, true);
    let mut purity = Vec::with_capacity(times.len());
    let mut change: f64 = 0.0;
    for ((&t, r), rc) in times.iter().zip(&rhos).zip(&rhos_check) {
        let st = SpinState {
            basis: state0.basis.clone(),
            rho: StateData::Dense(r.clone()),
        };
        let sc = SpinState {
            basis: state0.basis.clone(),
            rho: StateData::Dense(rc.clone()),
        };
        let m = st.moments();
        change = change.max(m.max_abs_diff(&sc.moments()));
        purity.push(st.purity());
        spin.push(t, m);
        spin.states.as_mut().unwrap().push(st);
    }
    if change > TRUNCATION_TOL {
        return Err(Error::Truncation {
            n_max: n_boson_max,
            n_max_check: check,
            change,
        });
    }

    let j = state0.basis.j_total();
    let jx = spin_jx(n);
    let mut h_ref = -params.chi * &jx * &jx;
    for k in 0..=n {
        h_ref[(k, k)] += delta_b * (j - k as f64);
    }
    let psi0 = match &state0.rho {
        StateData::Pure(p) => p.clone(),
        _ => unreachable!(),
    };
    let mut oat_reference = EvolutionResult::new(j, params.chi, "effective_oat".into(), false, false);
    for (&t, psi) in times.iter().zip(Spectrum::of(h_ref).evolve(&psi0, times)) {
        let st = SpinState {
            basis: state0.basis.clone(),
            rho: StateData::Pure(psi),
        };
        oat_reference.push(t, st.moments());
    }
    Ok(SpinBosonResult {
        spin,
        oat_reference,
        purity,
        n_boson_max,
        truncation_change: change,
    })
}
