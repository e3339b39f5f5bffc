//! Bessel sidebands of the frequency-modulated Dicke model and the effective
//! two-axis-twisting parameters.

use serde::{Deserialize, Serialize};

use crate::normal_modes::NormalModeSolution;
use crate::numeric::bisect;
use crate::{Error, Result};

fn series(n: u32, x: f64) -> f64 {
    let h = 0.5 * x;
    let mut term = 1.0;
    for i in 1..=n {
        term *= h / i as f64;
    }
    let h2 = -h * h;
    let mut sum = term;
    let mut k = 1.0;
    loop {
        term *= h2 / (k * (k + n as f64));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() || k > 200.0 {
            break;
        }
        k += 1.0;
    }
    sum
}

fn miller(n: u32, x: f64) -> f64 {
    let top = (n as f64).max(x);
    let mut m = (top + 40.0 + 2.0 * top.sqrt()) as u32;
    m += m % 2;
    let (mut jp, mut j) = (0.0_f64, 1e-300_f64);
    let mut norm = 0.0;
    let mut result = 0.0;
    let tox = 2.0 / x;
    for k in (1..=m).rev() {
        // J_{k−1} = (2k/x)J_k − J_{k+1}
        let jm = k as f64 * tox * j - jp;
        jp = j;
        j = jm;
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp *= 1e-250;
            result *= 1e-250;
            norm *= 1e-250;
        }
        let idx = k - 1;
        if idx == n {
            result = j;
        }
        if idx % 2 == 0 && idx > 0 {
            norm += 2.0 * j;
        }
    }
    norm += j;
    result / norm
}

/// Bessel function of the first kind J_n(x) for |n| ≤ 64 and |x| ≤ 100.
pub fn bessel_j(n: i32, x: f64) -> Result<f64> {
    if n.unsigned_abs() > 64 || !(x.abs() <= 100.0) {
        return Err(Error::OutOfRange(format!(
            "bessel_j(n = {n}, x = {x}) requires |n| ≤ 64, |x| ≤ 100"
        )));
    }
    let na = n.unsigned_abs();
    let mut sign = if n < 0 && na % 2 == 1 { -1.0 } else { 1.0 };
    if x < 0.0 && na % 2 == 1 {
        sign = -sign;
    }
    let ax = x.abs();
    if ax == 0.0 {
        return Ok(if na == 0 { 1.0 } else { 0.0 });
    }
    let v = if ax <= 4.0 { series(na, ax) } else { miller(na, ax) };
    Ok(sign * v)
}

/// Sideband m0 minimizing |δ⁺ + mν|, ties going to the smaller |m0|.
pub fn sideband_select(delta_plus: f64, nu: f64) -> Result<(i64, f64)> {
    if !(nu > 0.0 && nu.is_finite()) || !delta_plus.is_finite() {
        return Err(Error::param("nu", "must be positive and finite"));
    }
    let x = -delta_plus / nu;
    let lo = x.floor() as i64;
    let candidates = [lo, lo + 1];
    let det = |m: i64| delta_plus + m as f64 * nu;
    let mut best = candidates[0];
    for &m in &candidates[1..] {
        let (a, b) = (det(m).abs(), det(best).abs());
        if a < b || (a == b && m.abs() < best.abs()) {
            best = m;
        }
    }
    Ok((best, det(best)))
}

/// Root of J_{m0}(ξ) + J₀(ξ) = 0, where the two sideband couplings are opposite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TatRoot {
    pub xi_mod: f64,
    pub j0: f64,
    pub j_m0: f64,
}

pub fn solve_tat_amplitude(m0: i64, bracket: (f64, f64)) -> Result<TatRoot> {
    if m0 == 0 {
        return Err(Error::param("m0", "must be non-zero"));
    }
    if m0.abs() > 64 {
        return Err(Error::OutOfRange(format!("|m0| = {} exceeds 64", m0.abs())));
    }
    let n = m0 as i32;
    let f = |x: f64| bessel_j(n, x).unwrap_or(f64::NAN) + bessel_j(0, x).unwrap_or(f64::NAN);
    let xi = bisect(f, bracket.0, bracket.1, 1e-15)?;
    let (j0, j_m0) = (bessel_j(0, xi)?, bessel_j(n, xi)?);
    if (j0 + j_m0).abs() >= 1e-12 {
        return Err(Error::NoSignChange {
            lo: bracket.0,
            hi: bracket.1,
            flo: f(bracket.0),
            fhi: f(bracket.1),
        });
    }
    Ok(TatRoot { xi_mod: xi, j0, j_m0 })
}

/// Modulation amplitude and frequency chosen by the user.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulationInput {
    pub xi_mod: f64,
    pub nu: f64,
}

/// Thresholds of the sideband and dispersive approximations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulationThresholds {
    /// ν ≥ factor·max(λ, |δ⁻|, |Δ_m0|).
    pub nu_factor: f64,
    /// |Δ| ≥ factor·λ.
    pub dispersive_factor: f64,
    /// Allowed |δ⁻ + Δ_m0| relative to ν.
    pub resonance_tol: f64,
}

impl Default for ModulationThresholds {
    fn default() -> Self {
        ModulationThresholds {
            nu_factor: 20.0,
            dispersive_factor: 10.0,
            resonance_tol: 1e-9,
        }
    }
}

/// Effective-model parameters of the modulated Dicke model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModulationParams {
    pub xi_mod: f64,
    pub nu: f64,
    pub delta_minus: f64,
    pub delta_plus: f64,
    pub m0: i64,
    pub delta_m0: f64,
    /// Effective detuning Δ = δ⁻ = −Δ_m0.
    pub delta: f64,
    pub lambda0: f64,
    pub lambda_m0: f64,
    /// ε = J₀²(ξ)·ω₋/Δ.
    pub epsilon: f64,
    /// Effective y-twisting strength ε·χ = 4λ²J₀²/Δ.
    pub epsilon_chi: f64,
    /// Coefficient of −(2B†B + 1)Jz (ac Stark shift): (λ₀² − λ_m0²)/Δ.
    pub stark: f64,
    /// Coefficient of Jz²: (λ₀ − λ_m0)²/Δ.
    pub jz2_coeff: f64,
    /// Coefficient of Jx²: −4λ₀λ_m0/Δ.
    pub jx2_coeff: f64,
    pub sideband_regime_ok: bool,
    pub dispersive_regime_ok: bool,
}

/// Modulation frequency and Zeeman splitting that satisfy δ⁻ = −Δ_m0 = `delta` for
/// sideband `m0`: ν = −2(Δ + ω₋)/m0 and Δ_B = Δ + ω₋.
pub fn resonant_configuration(omega_minus: f64, m0: i64, delta: f64) -> Result<(f64, f64)> {
    if m0 == 0 {
        return Err(Error::param("m0", "must be non-zero"));
    }
    let nu = -2.0 * (delta + omega_minus) / m0 as f64;
    if !(nu > 0.0) {
        return Err(Error::param("delta", format!("sideband {m0} needs ν > 0, got {nu}")));
    }
    Ok((nu, delta + omega_minus))
}

pub fn effective_tat_params(
    sol: &NormalModeSolution,
    input: &ModulationInput,
    delta_b: f64,
    thresholds: &ModulationThresholds,
) -> Result<ModulationParams> {
    let wm = sol.omega_minus;
    let delta_minus = delta_b - wm;
    let delta_plus = delta_b + wm;
    let (m0, delta_m0) = sideband_select(delta_plus, input.nu)?;
    let residual = delta_minus + delta_m0;
    if residual.abs() > thresholds.resonance_tol * input.nu.max(delta_minus.abs()) {
        return Err(Error::Resonance { residual });
    }
    let delta = delta_minus;
    if delta == 0.0 {
        return Err(Error::param("delta_b", "effective detuning Δ vanishes"));
    }
    let lambda = sol.lambda_eff;
    let j0 = bessel_j(0, input.xi_mod)?;
    let jm = bessel_j(m0 as i32, input.xi_mod)?;
    let (lambda0, lambda_m0) = (lambda * j0, lambda * jm);
    let epsilon = j0 * j0 * wm / delta;
    let lam_abs = lambda.abs();
    let sideband_regime_ok = input.nu >= thresholds.nu_factor * lam_abs.max(delta_minus.abs()).max(delta_m0.abs());
    let dispersive_regime_ok = delta.abs() >= thresholds.dispersive_factor * lam_abs;
    Ok(ModulationParams {
        xi_mod: input.xi_mod,
        nu: input.nu,
        delta_minus,
        delta_plus,
        m0,
        delta_m0,
        delta,
        lambda0,
        lambda_m0,
        epsilon,
        epsilon_chi: 4.0 * lambda * lambda * j0 * j0 / delta,
        stark: (lambda0 * lambda0 - lambda_m0 * lambda_m0) / delta,
        jz2_coeff: (lambda0 - lambda_m0).powi(2) / delta,
        jx2_coeff: -4.0 * lambda0 * lambda_m0 / delta,
        sideband_regime_ok,
        dispersive_regime_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normal_modes::bogoliubov;

    /// First zero of J₁, the TAT root for m0 = ±2 (J₀ + J₂ = 2J₁/x).
    const J11: f64 = 3.831705970207512;

    #[test]
    fn values_at_zero() {
        assert_eq!(bessel_j(0, 0.0).unwrap(), 1.0);
        for n in 1..10 {
            assert_eq!(bessel_j(n, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn reference_values() {
        // 17-digit reference values.
        let cases = [
            (0, 1.0, 0.7651976865579666),
            (1, 1.0, 0.4400505857449335),
            (0, 10.0, -0.2459357644513483),
            (5, 10.0, -0.2340615281867936),
            (2, 3.0, 0.4860912605858910),
            (10, 3.0, 1.292835164571588e-5),
            (0, 50.0, 0.05581232766925182),
            (30, 20.0, 1.2401536360354328e-4),
            (64, 100.0, 0.039985069452918338),
            (0, 100.0, 0.019985850304223122),
            (40, 4.0, 1.2221800915971504e-36),
        ];
        for (n, x, v) in cases {
            let got = bessel_j(n, x).unwrap();
            assert!(((got - v) / v).abs() < 1e-12, "J_{n}({x}) = {got}, expected {v}");
        }
    }

    #[test]
    fn negative_order_and_argument() {
        for n in 0..8 {
            let s = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(bessel_j(-n, 2.7).unwrap(), s * bessel_j(n, 2.7).unwrap());
            assert_eq!(bessel_j(n, -2.7).unwrap(), s * bessel_j(n, 2.7).unwrap());
        }
    }

    #[test]
    fn out_of_range() {
        assert!(bessel_j(65, 1.0).is_err());
        assert!(bessel_j(1, 100.5).is_err());
    }

    #[test]
    fn first_zero_of_j0() {
        let z = bisect(|x| bessel_j(0, x).unwrap(), 2.0, 3.0, 1e-16).unwrap();
        assert!((z - 2.404825557695773).abs() < 1e-14);
    }

    #[test]
    fn sideband_examples() {
        assert_eq!(sideband_select(0.0, 1.0).unwrap(), (0, 0.0));
        let (m, d) = sideband_select(2.4, 1.0).unwrap();
        assert_eq!(m, -2);
        assert!((d - 0.4).abs() < 1e-15);
        assert_eq!(sideband_select(2.5, 1.0).unwrap(), (-2, 0.5));
        assert_eq!(sideband_select(-2.5, 1.0).unwrap(), (2, -0.5));
    }

    #[test]
    fn tat_root_for_second_sideband() {
        // J₀ + J₂ = 2J₁/x is positive on (0.5, 3): no root there.
        assert!(matches!(
            solve_tat_amplitude(2, (0.5, 3.0)),
            Err(Error::NoSignChange { .. })
        ));
        let r = solve_tat_amplitude(2, (3.0, 4.5)).unwrap();
        assert!((r.xi_mod - J11).abs() < 1e-13);
        assert!((r.j0 + r.j_m0).abs() < 1e-12);
        let lam = 0.37;
        let (l0, lm) = (lam * r.j0, lam * r.j_m0);
        assert!(((l0 - lm).powi(2) + 4.0 * l0 * lm).abs() < 1e-10 * lam * lam);
        assert!(solve_tat_amplitude(0, (1.0, 2.0)).is_err());
    }

    #[test]
    fn tat_root_for_first_sideband() {
        let r = solve_tat_amplitude(-1, (1.0, 2.0)).unwrap();
        assert!((r.xi_mod - 1.434695650819).abs() < 1e-10);
    }

    fn solution() -> NormalModeSolution {
        let gc = 0.5 * (0.999f64).sqrt();
        bogoliubov(0.999, 1.0, gc * (1.0 - 1e-6), 1e-7).unwrap()
    }

    #[test]
    fn unit_reduction_factor() {
        let sol = solution();
        let root = solve_tat_amplitude(-2, (3.0, 4.5)).unwrap();
        let delta = sol.omega_minus * root.j0 * root.j0;
        let (nu, db) = resonant_configuration(sol.omega_minus, -2, delta).unwrap();
        let p = effective_tat_params(
            &sol,
            &ModulationInput {
                xi_mod: root.xi_mod,
                nu,
            },
            db,
            &Default::default(),
        )
        .unwrap();
        assert_eq!(p.m0, -2);
        assert!((p.epsilon - 1.0).abs() < 1e-12);
        assert!((p.epsilon_chi - p.epsilon * sol.chi).abs() < 1e-12 * sol.chi);
        assert!(p.lambda0 * p.lambda_m0 < 0.0);
        assert!(p.stark.abs() < 1e-12 * p.jx2_coeff.abs());
    }

    #[test]
    fn negative_detuning_gives_negative_epsilon() {
        let sol = solution();
        let root = solve_tat_amplitude(-2, (3.0, 4.5)).unwrap();
        let delta = -0.02 * sol.omega_minus;
        let (nu, db) = resonant_configuration(sol.omega_minus, -2, delta).unwrap();
        let p = effective_tat_params(
            &sol,
            &ModulationInput {
                xi_mod: root.xi_mod,
                nu,
            },
            db,
            &Default::default(),
        )
        .unwrap();
        assert!(p.epsilon < 0.0);
        assert!(p.sideband_regime_ok && p.dispersive_regime_ok);
    }

    #[test]
    fn off_resonance_rejected() {
        let sol = solution();
        let (nu, db) = resonant_configuration(sol.omega_minus, -2, -1e-5).unwrap();
        let e = effective_tat_params(
            &sol,
            &ModulationInput { xi_mod: 1.0, nu },
            db * 1.01,
            &Default::default(),
        );
        assert!(matches!(e, Err(Error::Resonance { .. })));
    }
}
