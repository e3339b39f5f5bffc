//! Adaptive Dormand–Prince 5(4) integrator for flat real or complex state vectors.

use crate::{Error, Result, C64};

/// Scalar types the integrator can advance.
pub trait OdeScalar:
    Copy
    + Send
    + Sync
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<f64, Output = Self>
    + Default
{
    fn abs(self) -> f64;
}

impl OdeScalar for f64 {
    #[inline]
    fn abs(self) -> f64 {
        f64::abs(self)
    }
}

impl OdeScalar for C64 {
    #[inline]
    fn abs(self) -> f64 {
        self.norm()
    }
}

/// Right-hand side of `dy/dt = f(t, y)`.
pub trait OdeSystem<T: OdeScalar> {
    fn rhs(&self, t: f64, y: &[T], dy: &mut [T]);
}

impl<T: OdeScalar, F: Fn(f64, &[T], &mut [T])> OdeSystem<T> for F {
    fn rhs(&self, t: f64, y: &[T], dy: &mut [T]) {
        self(t, y, dy)
    }
}

/// Relative and absolute error tolerances.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rtol: 1e-9,
            atol: 1e-12,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::param("tolerances", "rtol and atol must be positive"));
        }
        Ok(())
    }
}

/// Step statistics of one integration.
#[derive(Clone, Copy, Debug, Default)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    /// Proposed size of the next step, reusable as `h_init` when continuing.
    pub last_step: f64,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Dormand–Prince 5(4) with FSAL and standard step-size control.
#[derive(Clone, Debug)]
pub struct Dopri5 {
    pub tol: Tolerances,
    pub max_steps: usize,
    pub h_max: f64,
    /// Initial step; estimated from the right-hand side when `None`.
    pub h_init: Option<f64>,
}

impl Dopri5 {
    pub fn new(tol: Tolerances) -> Self {
        Dopri5 {
            tol,
            max_steps: 5_000_000,
            h_max: f64::INFINITY,
            h_init: None,
        }
    }

    /// Integrates from `t0` through every time in `outputs` (non-decreasing, all ≥ t0),
    /// calling `observe(i, t_i, y)` at each. Steps are clipped to land on outputs.
    pub fn solve<T, S, F>(&self, sys: &S, t0: f64, y: &mut [T], outputs: &[f64], mut observe: F) -> Result<Stats>
    where
        T: OdeScalar,
        S: OdeSystem<T> + ?Sized,
        F: FnMut(usize, f64, &[T]) -> Result<()>,
    {
        self.tol.validate()?;
        let n = y.len();
        let mut k: Vec<Vec<T>> = (0..7).map(|_| vec![T::default(); n]).collect();
        let mut tmp = vec![T::default(); n];
        let mut ynew = vec![T::default(); n];
        let mut stats = Stats::default();
        let mut t = t0;

        sys.rhs(t, y, &mut k[0]);
        stats.rhs_evals += 1;
        let mut h = match self.h_init {
            Some(h) if h > 0.0 && h.is_finite() => h.min(self.h_max),
            _ => self.initial_step(sys, t, y, &k[0], &mut tmp, &mut ynew, &mut stats),
        };
        let mut fac_old = 1e-4_f64;

        for (idx, &t_out) in outputs.iter().enumerate() {
            if t_out < t - 1e-14 * t.abs().max(1.0) {
                return Err(Error::Integrator {
                    time: t,
                    reason: format!("output time {t_out} precedes current time"),
                });
            }
            while t_out - t > 1e-15 * t_out.abs().max(1.0) {
                if stats.accepted + stats.rejected >= self.max_steps {
                    return Err(Error::Integrator {
                        time: t,
                        reason: "maximum number of steps exceeded".into(),
                    });
                }
                let remaining = t_out - t;
                let mut h_try = h.min(self.h_max);
                let last = h_try >= remaining * (1.0 - 1e-12);
                if last {
                    h_try = remaining;
                }
                let err = self.step(sys, t, y, h_try, &mut k, &mut tmp, &mut ynew);
                stats.rhs_evals += 6;
                if !err.is_finite() {
                    h = h_try * 0.1;
                    stats.rejected += 1;
                    if h < 1e-14 * t.abs().max(1.0) {
                        return Err(Error::Integrator {
                            time: t,
                            reason: "non-finite error estimate".into(),
                        });
                    }
                    continue;
                }
                // PI step-size control (Hairer's DOPRI5 defaults).
                let beta = 0.04;
                let expo = 0.2 - beta * 0.75;
                let fac11 = err.max(1e-300).powf(expo);
                if err <= 1.0 {
                    let fac = (fac11 / fac_old.powf(beta) / 0.9).clamp(0.1, 5.0);
                    fac_old = err.max(1e-4);
                    y.copy_from_slice(&ynew);
                    t = if last { t_out } else { t + h_try };
                    let (k0, rest) = k.split_at_mut(1);
                    k0[0].copy_from_slice(&rest[5]);
                    stats.accepted += 1;
                    let h_next = h_try / fac;
                    // Clipping to an output must not shrink the step for the next interval.
                    h = if last { h.max(h_next) } else { h_next };
                } else {
                    h = h_try / (fac11 / 0.9).min(10.0);
                    stats.rejected += 1;
                    if h < 1e-14 * t.abs().max(1.0) {
                        return Err(Error::Integrator {
                            time: t,
                            reason: "step size underflow".into(),
                        });
                    }
                }
            }
            observe(idx, t_out, y)?;
        }
        stats.last_step = h;
        Ok(stats)
    }

    #[allow(clippy::too_many_arguments)]
    fn initial_step<T: OdeScalar, S: OdeSystem<T> + ?Sized>(
        &self,
        sys: &S,
        t: f64,
        y: &[T],
        f0: &[T],
        y1: &mut [T],
        f1: &mut [T],
        stats: &mut Stats,
    ) -> f64 {
        let sc = |a: T| self.tol.atol + self.tol.rtol * a.abs();
        let rms = |v: &[T], w: &[T]| -> f64 {
            let s: f64 = v.iter().zip(w).map(|(a, b)| (a.abs() / sc(*b)).powi(2)).sum();
            (s / v.len().max(1) as f64).sqrt()
        };
        let d0 = rms(y, y);
        let d1 = rms(f0, y);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        for i in 0..y.len() {
            y1[i] = y[i] + f0[i] * h0;
        }
        sys.rhs(t + h0, y1, f1);
        stats.rhs_evals += 1;
        let diff: Vec<T> = f1.iter().zip(f0).map(|(a, b)| *a - *b).collect();
        let d2 = rms(&diff, y) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(self.h_max)
    }

    #[allow(clippy::too_many_arguments)]
    fn step<T: OdeScalar, S: OdeSystem<T> + ?Sized>(
        &self,
        sys: &S,
        t: f64,
        y: &[T],
        h: f64,
        k: &mut [Vec<T>],
        tmp: &mut [T],
        ynew: &mut [T],
    ) -> f64 {
        let n = y.len();
        for i in 0..n {
            tmp[i] = y[i] + k[0][i] * (h * A21);
        }
        sys.rhs(t + C2 * h, tmp, &mut k[1]);
        for i in 0..n {
            tmp[i] = y[i] + (k[0][i] * A31 + k[1][i] * A32) * h;
        }
        sys.rhs(t + C3 * h, tmp, &mut k[2]);
        for i in 0..n {
            tmp[i] = y[i] + (k[0][i] * A41 + k[1][i] * A42 + k[2][i] * A43) * h;
        }
        sys.rhs(t + C4 * h, tmp, &mut k[3]);
        for i in 0..n {
            tmp[i] = y[i] + (k[0][i] * A51 + k[1][i] * A52 + k[2][i] * A53 + k[3][i] * A54) * h;
        }
        sys.rhs(t + C5 * h, tmp, &mut k[4]);
        for i in 0..n {
            tmp[i] = y[i] + (k[0][i] * A61 + k[1][i] * A62 + k[2][i] * A63 + k[3][i] * A64 + k[4][i] * A65) * h;
        }
        sys.rhs(t + h, tmp, &mut k[5]);
        for i in 0..n {
            ynew[i] = y[i] + (k[0][i] * B1 + k[2][i] * B3 + k[3][i] * B4 + k[4][i] * B5 + k[5][i] * B6) * h;
        }
        // Stage 7 of the FSAL pair is f(t+h, ynew); stored in k[6] then moved to k[0].
        let (head, tail) = k.split_at_mut(6);
        sys.rhs(t + h, ynew, &mut tail[0]);
        let k7 = &tail[0];
        let mut acc = 0.0;
        for i in 0..n {
            let e =
                (head[0][i] * E1 + head[2][i] * E3 + head[3][i] * E4 + head[4][i] * E5 + head[5][i] * E6 + k7[i] * E7)
                    * h;
            let sc = self.tol.atol + self.tol.rtol * y[i].abs().max(ynew[i].abs());
            let r = e.abs() / sc;
            acc += r * r;
        }
        // Swap so that k[5] holds the FSAL stage for the caller.
        head[5].copy_from_slice(k7);
        (acc / n.max(1) as f64).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_matches_closed_form() {
        let solver = Dopri5::new(Tolerances {
            rtol: 1e-10,
            atol: 1e-13,
        });
        let mut y = vec![1.0_f64];
        let times: Vec<f64> = (0..=10).map(|i| i as f64 * 0.5).collect();
        let mut got = Vec::new();
        solver
            .solve(
                &|_t: f64, y: &[f64], dy: &mut [f64]| dy[0] = -1.3 * y[0],
                0.0,
                &mut y,
                &times,
                |_, t, y| {
                    got.push((t, y[0]));
                    Ok(())
                },
            )
            .unwrap();
        for (t, v) in got {
            assert!((v - (-1.3 * t).exp()).abs() < 1e-9, "t={t} v={v}");
        }
    }

    #[test]
    fn complex_rotation_is_accurate() {
        let solver = Dopri5::new(Tolerances::default());
        let mut y = vec![C64::new(1.0, 0.0)];
        let w = 7.0;
        solver
            .solve(
                &|_t: f64, y: &[C64], dy: &mut [C64]| dy[0] = C64::new(0.0, w) * y[0],
                0.0,
                &mut y,
                &[3.0],
                |_, _, _| Ok(()),
            )
            .unwrap();
        let exact = C64::from_polar(1.0, w * 3.0);
        assert!((y[0] - exact).norm() < 1e-7);
    }

    #[test]
    fn time_dependent_rhs_and_repeated_outputs() {
        let solver = Dopri5::new(Tolerances::default());
        let mut y = vec![0.0_f64];
        let mut seen = Vec::new();
        solver
            .solve(
                &|t: f64, _y: &[f64], dy: &mut [f64]| dy[0] = t.cos(),
                0.0,
                &mut y,
                &[0.0, 1.0, 1.0, 2.0],
                |i, _, y| {
                    seen.push((i, y[0]));
                    Ok(())
                },
            )
            .unwrap();
        assert_eq!(seen.len(), 4);
        assert_eq!(seen[0].1, 0.0);
        assert!((seen[2].1 - 1f64.sin()).abs() < 1e-9);
        assert!((seen[3].1 - 2f64.sin()).abs() < 1e-9);
    }
}
