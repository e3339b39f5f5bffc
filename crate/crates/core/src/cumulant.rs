//! Second-order cumulant moment equations, the Holstein–Primakoff reduction and its
//! closed-form solutions for one-axis twisting with noise.

use crate::dynamics::NoiseParams;
use crate::numeric::phi;
use crate::ode::{Dopri5, Tolerances};
use crate::spin_algebra::{squeezing_wineland, MomentSet};
use crate::{Error, Result};

/// Derived constants of the Holstein–Primakoff solution at a time t.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CumulantDerived {
    /// α = Γ(n̄_th + 1/2).
    pub alpha: f64,
    /// c₀ = 2J²Γn̄_th + J²Γ + 2γJ.
    pub c0: f64,
    pub v_plus: f64,
    pub v_minus: f64,
    pub t_opt: f64,
    pub xi2_opt: f64,
}

fn check(j: f64, chi: f64, noise: &NoiseParams) -> Result<()> {
    if !(j > 0.0 && j.is_finite()) {
        return Err(Error::param("J", "must be positive"));
    }
    if !chi.is_finite() {
        return Err(Error::param("chi", "must be finite"));
    }
    noise.validate()
}

pub fn alpha(noise: &NoiseParams) -> f64 {
    noise.big_gamma * (noise.n_th + 0.5)
}

pub fn c0(j: f64, noise: &NoiseParams) -> f64 {
    2.0 * j * j * noise.big_gamma * noise.n_th + j * j * noise.big_gamma + 2.0 * noise.gamma * j
}

fn css_moments(j: f64) -> MomentSet {
    MomentSet {
        jz_mean: j,
        jx2: j / 2.0,
        jy2: j / 2.0,
        jz2: j * j,
        cxy: 0.0,
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !(*t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::param("times", "must be non-negative and non-decreasing"));
    }
    Ok(())
}

/// Integrates the five cumulant equations from the coherent spin state.
pub fn integrate_cumulant(
    j: f64,
    chi: f64,
    noise: &NoiseParams,
    times: &[f64],
    tol: Tolerances,
) -> Result<Vec<MomentSet>> {
    check(j, chi, noise)?;
    check_times(times)?;
    let gc = noise.collective_rate();
    let g = noise.gamma;
    let rhs = move |_t: f64, y: &[f64], dy: &mut [f64]| {
        let (jz, jx2, jy2, jz2, cxy) = (y[0], y[1], y[2], y[3], y[4]);
        dy[0] = -2.0 * chi * cxy - 0.5 * gc * jz;
        dy[1] = -4.0 * g * jx2 + 2.0 * g * j;
        dy[2] = 4.0 * chi * cxy * jz - 4.0 * g * jy2 + 2.0 * g * j - gc * (jy2 - jz2);
        dy[3] = -4.0 * chi * cxy * jz - gc * (jz2 - jy2);
        dy[4] = 2.0 * chi * jx2 * jz - 4.0 * g * cxy - 0.5 * gc * cxy;
    };
    let m0 = css_moments(j);
    let mut y = m0.as_array().to_vec();
    let mut out = Vec::with_capacity(times.len());
    Dopri5::new(tol).solve(&rhs, 0.0, &mut y, times, |_, _, y| {
        out.push(MomentSet {
            jz_mean: y[0],
            jx2: y[1],
            jy2: y[2],
            jz2: y[3],
            cxy: y[4],
        });
        Ok(())
    })?;
    Ok(out)
}

/// Integrates the three Holstein–Primakoff equations with ⟨Jz⟩ frozen at J.
pub fn integrate_hp(j: f64, chi: f64, noise: &NoiseParams, times: &[f64], tol: Tolerances) -> Result<Vec<MomentSet>> {
    check(j, chi, noise)?;
    check_times(times)?;
    let (a, g, c) = (alpha(noise), noise.gamma, c0(j, noise));
    let rhs = move |_t: f64, y: &[f64], dy: &mut [f64]| {
        dy[0] = -4.0 * g * y[0] + 2.0 * g * j;
        dy[1] = 4.0 * chi * j * y[2] - (2.0 * a + 4.0 * g) * y[1] + c;
        dy[2] = 2.0 * j * chi * y[0] - (a + 4.0 * g) * y[2];
    };
    let mut y = vec![j / 2.0, j / 2.0, 0.0];
    let mut out = Vec::with_capacity(times.len());
    Dopri5::new(tol).solve(&rhs, 0.0, &mut y, times, |_, _, y| {
        out.push(MomentSet {
            jz_mean: j,
            jx2: y[0],
            jy2: y[1],
            jz2: j * j,
            cxy: y[2],
        });
        Ok(())
    })?;
    Ok(out)
}

/// Closed-form solution of the Holstein–Primakoff equations from the coherent state.
///
/// With a = α + 4γ, b = 2α + 4γ and K = 4χ²J³/a:
/// ⟨Jy²⟩ = (c₀ + K)(1 − e^{−bt})/b + (J/2)e^{−bt} − K(e^{−at} − e^{−bt})/α and
/// ⟨Cxy⟩ = χJ²(1 − e^{−at})/a. Vanishing rates are handled by their limits.
pub fn closed_form_moments(j: f64, chi: f64, noise: &NoiseParams, t: f64) -> Result<MomentSet> {
    check(j, chi, noise)?;
    if !(t >= 0.0) {
        return Err(Error::param("t", "must be non-negative"));
    }
    let al = alpha(noise);
    let a = al + 4.0 * noise.gamma;
    let b = 2.0 * al + 4.0 * noise.gamma;
    let c = c0(j, noise);
    let phi_a = phi(a, t);
    let phi_b = phi(b, t);
    // K·(1 − e^{−bt})/b − K(e^{−at} − e^{−bt})/α, written with K = 4χ²J³/a so that
    // a → 0 stays finite: K[φ_b − e^{−at}φ_α] = 4χ²J³[φ_b − e^{−at}φ_α]/a.
    let twist = 4.0 * chi * chi * j * j * j * forced_response(a, b, t);
    let jy2 = c * phi_b + 0.5 * j * (-b * t).exp() + twist;
    Ok(MomentSet {
        jz_mean: j,
        jx2: 0.5 * j,
        jy2,
        jz2: j * j,
        cxy: chi * j * j * phi_a,
    })
}

/// F = ∫₀ᵗ e^{−b(t−s)}(1 − e^{−as})/a ds = [φ(b,t) − e^{−at}φ(b−a,t)]/a, evaluated by
/// its power series Σ_p (−1)^p t^{p+2} h_p(a,b)/(p+2)! when b·t is small
/// (h_p = Σ_i a^i b^{p−i}).
fn forced_response(a: f64, b: f64, t: f64) -> f64 {
    if b * t >= 0.1 {
        return (phi(b, t) - (-a * t).exp() * phi(b - a, t)) / a;
    }
    let mut sum = 0.0;
    let mut h = 1.0; // h_0
    let mut apow = 1.0;
    let mut coeff = t * t / 2.0; // t^{p+2}/(p+2)! · (−1)^p
    for p in 0..40 {
        if p > 0 {
            apow *= a;
            h = b * h + apow;
            coeff *= -t / (p + 2) as f64;
        }
        let term = coeff * h;
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// Squeezing parameter of the Holstein–Primakoff closed form,
/// ξ² = {𝒱₊ − √(𝒱₋² + 4χ²J⁴[(1 − e^{−(α+4γ)t})/(α+4γ)]²)}/J.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum VForm {
    /// 𝒱± = J/2 ± ⟨Jy²⟩ from the exact closed-form ⟨Jy²⟩.
    #[default]
    Exact,
    /// Second-order expansion 𝒱± = {J ± [J e^{−(2x+4γ)t} + 2c₀t − 2(2χ²J³ + αc₀ + 2γc₀)t²]}/2
    /// as printed, with x = α, or x = κ when `kappa` is given.
    Printed { kappa: Option<f64> },
}

fn v_pair(j: f64, chi: f64, noise: &NoiseParams, t: f64, form: VForm) -> Result<(f64, f64)> {
    match form {
        VForm::Exact => {
            let m = closed_form_moments(j, chi, noise, t)?;
            Ok((m.jx2 + m.jy2, m.jx2 - m.jy2))
        }
        VForm::Printed { kappa } => {
            let al = alpha(noise);
            let x = kappa.unwrap_or(al);
            let c = c0(j, noise);
            let g = noise.gamma;
            let inner = j * (-(2.0 * x + 4.0 * g) * t).exp() + 2.0 * c * t
                - 2.0 * (2.0 * chi * chi * j * j * j + al * c + 2.0 * g * c) * t * t;
            Ok(((j + inner) / 2.0, (j - inner) / 2.0))
        }
    }
}

pub fn squeezing_closed_form(j: f64, chi: f64, noise: &NoiseParams, t: f64, form: VForm) -> Result<f64> {
    check(j, chi, noise)?;
    if !(t >= 0.0) {
        return Err(Error::param("t", "must be non-negative"));
    }
    let (vp, vm) = v_pair(j, chi, noise, t, form)?;
    let cxy = chi * j * j * phi(alpha(noise) + 4.0 * noise.gamma, t);
    let radicand = vm * vm + 4.0 * cxy * cxy;
    if radicand < -1e-12 {
        return Err(Error::NegativeRadicand(radicand));
    }
    Ok((vp - radicand.max(0.0).sqrt()) / j)
}

/// Same quantity through the generic route: closed-form moments and the Wineland
/// formula with the frozen ⟨Jz⟩ = J.
pub fn squeezing_from_moments(j: f64, chi: f64, noise: &NoiseParams, t: f64) -> Result<f64> {
    squeezing_wineland(&closed_form_moments(j, chi, noise, t)?, j)
}

/// Short-time asymptote 1/(4χ²J²t²) + (t/2)[Γ(2n̄_th + 1) + 4γ].
pub fn squeezing_asymptotic(j: f64, chi: f64, noise: &NoiseParams, t: f64) -> Result<f64> {
    check(j, chi, noise)?;
    if !(t > 0.0) {
        return Err(Error::param("t", "must be positive"));
    }
    Ok(1.0 / (4.0 * chi * chi * j * j * t * t) + 0.5 * t * (noise.collective_rate() + 4.0 * noise.gamma))
}

/// Optimum of the asymptotic form: ξ²_opt = (2^{−1/3} + 4^{−2/3})(s/χJ)^{2/3} at
/// t_opt = (2χ²J²s)^{−1/3}, with s = Γn̄_th + Γ/2 + 2γ. Returns `(xi2_opt, t_opt)`.
pub fn optimal_squeezing(j: f64, chi: f64, noise: &NoiseParams) -> Result<(f64, f64)> {
    check(j, chi, noise)?;
    let s = noise.big_gamma * noise.n_th + 0.5 * noise.big_gamma + 2.0 * noise.gamma;
    if s <= 0.0 {
        return Err(Error::NoOptimum);
    }
    if !(chi.abs() > 0.0) {
        return Err(Error::param("chi", "must be non-zero"));
    }
    let cj = chi.abs() * j;
    let xi2 = (2f64.powf(-1.0 / 3.0) + 4f64.powf(-2.0 / 3.0)) * (s / cj).powf(2.0 / 3.0);
    let t = (2.0 * cj * cj * s).powf(-1.0 / 3.0);
    Ok((xi2, t))
}

/// All derived constants at time `t`.
pub fn derived(j: f64, chi: f64, noise: &NoiseParams, t: f64, form: VForm) -> Result<CumulantDerived> {
    let (v_plus, v_minus) = v_pair(j, chi, noise, t, form)?;
    let (xi2_opt, t_opt) = optimal_squeezing(j, chi, noise).unwrap_or((f64::NAN, f64::INFINITY));
    Ok(CumulantDerived {
        alpha: alpha(noise),
        c0: c0(j, noise),
        v_plus,
        v_minus,
        t_opt,
        xi2_opt,
    })
}
