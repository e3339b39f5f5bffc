//! Linearized optomechanics: steady state, Bogoliubov normal modes and the effective
//! one-axis-twisting coupling mediated by the soft normal mode.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// Raw parameters of the hybrid NV–mechanics–cavity system (angular frequencies).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub omega_a: f64,
    pub omega_b: f64,
    /// Zeeman splitting Δ_B.
    pub delta_b: f64,
    pub g: f64,
    pub g0: f64,
    pub omega_d: f64,
    /// Drive amplitude Ω_d as (re, im).
    pub drive_amp: (f64, f64),
    pub kappa: f64,
    pub gamma_a: f64,
    pub q_factor: f64,
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("omega_a", self.omega_a),
            ("omega_b", self.omega_b),
            ("g", self.g),
            ("g0", self.g0),
            ("kappa", self.kappa),
            ("gamma_a", self.gamma_a),
            ("q_factor", self.q_factor),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be positive and finite, got {v}")));
            }
        }
        for (name, v) in [
            ("omega_d", self.omega_d),
            ("delta_b", self.delta_b),
            ("drive_amp", self.drive_amp.0 + self.drive_amp.1),
        ] {
            if !v.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        Ok(())
    }

    /// Same parameters with every frequency given in Hz converted to rad/s.
    pub fn from_hz(self) -> SystemParams {
        let w = 2.0 * PI;
        SystemParams {
            omega_a: self.omega_a * w,
            omega_b: self.omega_b * w,
            delta_b: self.delta_b * w,
            g: self.g * w,
            g0: self.g0 * w,
            omega_d: self.omega_d * w,
            drive_amp: (self.drive_amp.0 * w, self.drive_amp.1 * w),
            kappa: self.kappa * w,
            gamma_a: self.gamma_a * w,
            q_factor: self.q_factor,
        }
    }
}

/// Mean fields of the driven, linearized system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SteadyState {
    pub a_mean: C64,
    pub b_mean: C64,
    pub delta_bd: f64,
    /// Linearized coupling G = g0·|⟨b⟩|.
    pub coupling: f64,
    pub iterations: usize,
    /// Largest relative residual of the two fixed-point equations.
    pub residual: f64,
}

fn b_of(delta: f64, p: &SystemParams) -> C64 {
    let drive = C64::new(p.drive_amp.0, p.drive_amp.1);
    -drive / C64::new(delta, -p.kappa)
}

fn a_of(b: C64, p: &SystemParams) -> C64 {
    C64::new(-p.g0 * b.norm_sqr(), 0.0) / C64::new(-p.omega_a, p.gamma_a)
}

fn residuals(a: C64, b: C64, delta: f64, p: &SystemParams) -> f64 {
    let rel = |x: C64, y: C64| {
        if y.norm() == 0.0 {
            x.norm()
        } else {
            (x - y).norm() / y.norm()
        }
    };
    let rb = rel(b, b_of(delta, p));
    let ra = rel(a, a_of(b, p));
    let d0 = p.omega_b - p.omega_d;
    let rd = (delta - (d0 - 2.0 * p.g0 * a.re)).abs() / delta.abs().max(d0.abs()).max(f64::MIN_POSITIVE);
    rb.max(ra).max(rd)
}

/// Solves ⟨b⟩ = −Ω_d/(Δ_bd − iκ), ⟨a⟩ = −g0|⟨b⟩|²/(iγ_a − ω_a),
/// Δ_bd = (ω_b − ω_d) − g0(⟨a⟩ + ⟨a⟩*) by damped iteration with continuation in Ω_d.
pub fn steady_state(params: &SystemParams) -> Result<SteadyState> {
    params.validate()?;
    const MAX_ITER: usize = 10_000;
    const STAGES: usize = 16;
    let d0 = params.omega_b - params.omega_d;
    let mut delta = d0;
    let mut total = 0usize;
    let mut p = *params;
    for stage in 1..=STAGES {
        let s = stage as f64 / STAGES as f64;
        p.drive_amp = (params.drive_amp.0 * s, params.drive_amp.1 * s);
        let mut converged = false;
        for _ in 0..MAX_ITER {
            total += 1;
            let b = b_of(delta, &p);
            let a = a_of(b, &p);
            let target = d0 - 2.0 * p.g0 * a.re;
            let next = 0.5 * delta + 0.5 * target;
            let change = (next - delta).abs();
            delta = next;
            if change <= 1e-15 * delta.abs().max(d0.abs()).max(f64::MIN_POSITIVE) {
                converged = true;
                break;
            }
        }
        if !converged {
            let b = b_of(delta, &p);
            return Err(Error::SteadyStateNotConverged {
                iterations: total,
                residual: residuals(a_of(b, &p), b, delta, &p),
            });
        }
    }
    let b = b_of(delta, params);
    let a = a_of(b, params);
    let residual = residuals(a, b, delta, params);
    if residual > 1e-12 {
        return Err(Error::SteadyStateNotConverged {
            iterations: total,
            residual,
        });
    }
    Ok(SteadyState {
        a_mean: a,
        b_mean: b,
        delta_bd: delta,
        coupling: params.g0 * b.norm(),
        iterations: total,
        residual,
    })
}

/// Bogoliubov modes of the linearized cavity–mechanics system and their couplings to
/// the spins.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NormalModeSolution {
    pub delta_bd: f64,
    pub omega_a: f64,
    pub coupling: f64,
    pub g: f64,
    pub theta: f64,
    pub omega_minus: f64,
    pub omega_plus: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub eta_plus: f64,
    pub eta_minus: f64,
    /// Degenerate coupling λ = (λ₊ + λ₋)/2.
    pub lambda_eff: f64,
    /// r = ω₋/(2|λ|).
    pub r: f64,
    /// χ = 4λ²/ω₋.
    pub chi: f64,
    /// 𝒜 = χ·r/g, the enhancement over the bare coupling ratio g/r.
    pub amp_factor: f64,
}

/// Normal modes for effective detuning `delta_bd`, mechanical frequency `omega_a`,
/// linearized coupling `coupling` (G) and single-spin strain coupling `g`.
pub fn bogoliubov(delta_bd: f64, omega_a: f64, coupling: f64, g: f64) -> Result<NormalModeSolution> {
    if !(delta_bd > 0.0 && delta_bd.is_finite()) {
        return Err(Error::param("delta_bd", "must be positive"));
    }
    if !(omega_a > 0.0 && omega_a.is_finite()) {
        return Err(Error::param("omega_a", "must be positive"));
    }
    if !(coupling >= 0.0 && coupling.is_finite()) {
        return Err(Error::param("G", "must be non-negative"));
    }
    if !g.is_finite() {
        return Err(Error::param("g", "must be finite"));
    }
    let dw = delta_bd * omega_a;
    let four_g2 = 4.0 * coupling * coupling;
    if four_g2 >= dw || (dw - four_g2) <= 1e-9 * dw {
        return Err(Error::Instability { four_g2, product: dw });
    }
    let sum = delta_bd * delta_bd + omega_a * omega_a;
    let diff = delta_bd * delta_bd - omega_a * omega_a;
    let disc = (diff * diff + 4.0 * four_g2 * dw).sqrt();
    let wp2 = 0.5 * (sum + disc);
    let wm2 = dw * (dw - four_g2) / wp2;
    let (omega_plus, omega_minus) = (wp2.sqrt(), wm2.sqrt());

    let num = 4.0 * coupling * dw.sqrt();
    let theta = if diff == 0.0 {
        if num > 0.0 {
            PI / 4.0
        } else {
            0.0
        }
    } else {
        0.5 * (num / diff).atan()
    };
    let (s, c) = theta.sin_cos();
    let lm = 2.0 * (omega_a * omega_minus).sqrt();
    let lp = 2.0 * (omega_a * omega_plus).sqrt();
    let lambda_plus = -g * s * (omega_a + omega_minus) / lm;
    let lambda_minus = -g * s * (omega_a - omega_minus) / lm;
    let eta_plus = g * c * (omega_a + omega_plus) / lp;
    let eta_minus = g * c * (omega_a - omega_plus) / lp;
    let lambda_eff = 0.5 * (lambda_plus + lambda_minus);
    let r = if lambda_eff == 0.0 {
        f64::INFINITY
    } else {
        omega_minus / (2.0 * lambda_eff.abs())
    };
    let chi = 4.0 * lambda_eff * lambda_eff / omega_minus;
    let amp_factor = if g != 0.0 {
        2.0 * lambda_eff.abs() / g.abs()
    } else {
        0.0
    };
    Ok(NormalModeSolution {
        delta_bd,
        omega_a,
        coupling,
        g,
        theta,
        omega_minus,
        omega_plus,
        lambda_plus,
        lambda_minus,
        eta_plus,
        eta_minus,
        lambda_eff,
        r,
        chi,
        amp_factor,
    })
}

/// Effective OAT strength in the degenerate regime (Δ_bd ≈ ω_a, G → √(Δ_bd ω_a)/2).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OatCoupling {
    pub chi: f64,
    pub amp_factor: f64,
    pub omega_minus: f64,
}

/// ω₋ = (r²g²ω_a/2)^{1/3}, 𝒜 = (ω_a/(2rg))^{1/3}, χ = 𝒜g/r.
pub fn oat_coupling(omega_a: f64, g: f64, r: f64) -> Result<OatCoupling> {
    for (name, v) in [("omega_a", omega_a), ("g", g), ("r", r)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::param(name, "must be positive"));
        }
    }
    let omega_minus = (r * r * g * g * omega_a / 2.0).cbrt();
    let amp_factor = (omega_a / (2.0 * r * g)).cbrt();
    Ok(OatCoupling {
        chi: amp_factor * g / r,
        amp_factor,
        omega_minus,
    })
}

/// Collective spin decay Γ = ω_a/(Q r²) induced by the mechanical damping.
pub fn collective_decay_rate(omega_a: f64, q_factor: f64, r: f64) -> f64 {
    omega_a / (q_factor * r * r)
}

/// Thresholds for the approximations behind the effective OAT model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeThresholds {
    /// Minimum λ/max|η±| for neglecting the stiff mode.
    pub lambda_over_eta: f64,
    /// Minimum r = ω₋/(2λ) for adiabatic elimination.
    pub r: f64,
    /// Minimum ω₊/ω₋ for mode separation.
    pub omega_ratio: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        RegimeThresholds {
            lambda_over_eta: 10.0,
            r: 10.0,
            omega_ratio: 10.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegimeReport {
    pub lambda_over_eta: f64,
    pub r: f64,
    pub omega_ratio: f64,
    pub lambda_over_eta_ok: bool,
    pub adiabatic_ok: bool,
    pub omega_ratio_ok: bool,
}

impl RegimeReport {
    pub fn all_ok(&self) -> bool {
        self.lambda_over_eta_ok && self.adiabatic_ok && self.omega_ratio_ok
    }
}

pub fn regime_report(sol: &NormalModeSolution, thresholds: &RegimeThresholds) -> RegimeReport {
    let eta = sol.eta_plus.abs().max(sol.eta_minus.abs());
    let lambda_over_eta = if eta > 0.0 {
        sol.lambda_eff.abs() / eta
    } else {
        f64::INFINITY
    };
    let omega_ratio = sol.omega_plus / sol.omega_minus;
    RegimeReport {
        lambda_over_eta,
        r: sol.r,
        omega_ratio,
        lambda_over_eta_ok: lambda_over_eta >= thresholds.lambda_over_eta,
        adiabatic_ok: sol.r >= thresholds.r,
        omega_ratio_ok: omega_ratio >= thresholds.omega_ratio,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> SystemParams {
        SystemParams {
            omega_a: 1.0,
            omega_b: 50.0,
            delta_b: 0.0,
            g: 1e-6,
            g0: 1e-3,
            omega_d: 49.0,
            drive_amp: (30.0, 0.0),
            kappa: 0.2,
            gamma_a: 1e-4,
            q_factor: 1e4,
        }
    }

    #[test]
    fn undriven_steady_state() {
        let mut p = params();
        p.drive_amp = (0.0, 0.0);
        let s = steady_state(&p).unwrap();
        assert_eq!(s.a_mean, C64::new(0.0, 0.0));
        assert_eq!(s.b_mean, C64::new(0.0, 0.0));
        assert_eq!(s.coupling, 0.0);
        assert_eq!(s.delta_bd, 1.0);
    }

    #[test]
    fn driven_steady_state_satisfies_both_equations() {
        let p = params();
        let s = steady_state(&p).unwrap();
        assert!(s.residual < 1e-12);
        let b = -C64::new(30.0, 0.0) / C64::new(s.delta_bd, -p.kappa);
        assert!((b - s.b_mean).norm() < 1e-12 * b.norm());
        let a = -C64::new(p.g0 * b.norm_sqr(), 0.0) / C64::new(-p.omega_a, p.gamma_a);
        assert!((a - s.a_mean).norm() < 1e-12 * a.norm());
        assert!((s.delta_bd - (1.0 - 2.0 * p.g0 * a.re)).abs() < 1e-12);
        assert!(s.coupling > 0.0);
    }

    #[test]
    fn uncoupled_modes() {
        let s = bogoliubov(0.7, 1.0, 0.0, 0.3).unwrap();
        assert_eq!(s.theta, 0.0);
        assert_eq!(s.lambda_plus, 0.0);
        assert_eq!(s.lambda_minus, 0.0);
        assert!((s.omega_minus - 0.7).abs() < 1e-15 && (s.omega_plus - 1.0).abs() < 1e-15);
    }

    #[test]
    fn resonant_limit_near_instability() {
        let g = 1e-3;
        let s = bogoliubov(1.0, 1.0, 0.5 * (1.0 - 1e-7), g).unwrap();
        assert!((s.omega_plus - 2f64.sqrt()).abs() < 1e-6);
        let r2 = 2f64.sqrt();
        assert!((s.eta_plus - (1.0 + r2) * g / 2f64.powf(1.75)).abs() < 1e-6 * g);
        assert!((s.eta_minus - (1.0 - r2) * g / 2f64.powf(1.75)).abs() < 1e-6 * g);
    }

    #[test]
    fn instability_rejected() {
        assert!(matches!(bogoliubov(1.0, 1.0, 0.5, 1.0), Err(Error::Instability { .. })));
        assert!(matches!(bogoliubov(1.0, 1.0, 0.6, 1.0), Err(Error::Instability { .. })));
        assert!(matches!(
            bogoliubov(1.0, 1.0, 0.5 * (1.0 - 1e-11), 1.0),
            Err(Error::Instability { .. })
        ));
    }

    #[test]
    fn amplification_factor_of_reference_device() {
        let w = 2.0 * PI;
        let c = oat_coupling(1.88e9 * w, 0.72e3 * w, 100.0).unwrap();
        assert!((c.amp_factor - 24.0).abs() < 0.5, "{}", c.amp_factor);
        let lambda = c.omega_minus / 200.0;
        assert!((c.chi - 4.0 * lambda * lambda / c.omega_minus).abs() < 1e-12 * c.chi);
    }

    #[test]
    fn unit_amplification() {
        let (wa, g) = (3.0, 0.01);
        let r = wa / (2.0 * g);
        let c = oat_coupling(wa, g, r).unwrap();
        assert!((c.amp_factor - 1.0).abs() < 1e-14);
        assert!((c.chi - g / r).abs() < 1e-14 * c.chi);
    }

    #[test]
    fn regime_flags() {
        let t = RegimeThresholds::default();
        let gc = 0.5 * (0.999f64).sqrt();
        let s = bogoliubov(0.999, 1.0, gc * (1.0 - 1e-6), 3.8e-7).unwrap();
        assert!(regime_report(&s, &t).all_ok());
        let s = bogoliubov(2.0, 1.0, 0.1, 3.8e-7).unwrap();
        assert!(!regime_report(&s, &t).lambda_over_eta_ok);
        let mut s2 = s;
        s2.r = 1.0;
        assert!(!regime_report(&s2, &t).adiabatic_ok);
    }
}
