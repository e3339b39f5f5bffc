//! Scalar root finding and minimization.

use crate::{Error, Result};

/// Bisection on a bracket with a sign change. Stops when |f| ≤ `ftol` or the
/// bracket collapses to machine precision.
pub fn bisect<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, ftol: f64) -> Result<f64> {
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let (mut fa, fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return Err(Error::NoSignChange {
            lo: a,
            hi: b,
            flo: fa,
            fhi: fb,
        });
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm.abs() <= ftol || m <= a || m >= b {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Golden-section search for a minimum of a unimodal function on `[lo, hi]`.
/// Returns `(x_min, f_min)`.
pub fn golden_min<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, xtol: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > xtol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Minimum over a sampled grid, refined by golden section between the neighbours
/// of the best sample. `f` may return NaN for invalid points; those are skipped.
pub fn grid_then_golden<F: FnMut(f64) -> f64>(mut f: F, grid: &[f64], xtol: f64) -> Option<(f64, f64)> {
    let vals: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    let (ibest, _) = vals
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .min_by(|a, b| a.1.total_cmp(b.1))?;
    let lo = grid[ibest.saturating_sub(1)];
    let hi = grid[(ibest + 1).min(grid.len() - 1)];
    let (x, fx) = golden_min(
        |x| {
            let v = f(x);
            if v.is_finite() {
                v
            } else {
                f64::INFINITY
            }
        },
        lo,
        hi,
        xtol,
    );
    if fx <= vals[ibest] {
        Some((x, fx))
    } else {
        Some((grid[ibest], vals[ibest]))
    }
}

/// `n` evenly spaced points on `[start, stop]` inclusive.
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![start],
        _ => (0..n)
            .map(|i| start + (stop - start) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// `-expm1(-a t) / a`, continuous through `a = 0` where it equals `t`.
pub fn phi(a: f64, t: f64) -> f64 {
    let x = a * t;
    if x.abs() < 1e-8 {
        t * (1.0 - 0.5 * x + x * x / 6.0)
    } else {
        -(-x).exp_m1() / a
    }
}
