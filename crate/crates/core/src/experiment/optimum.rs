//! Optimal squeezing searches over evolution time or accumulated twist.

use serde::Serialize;

use crate::dynamics::{
    evolve_oat_master, evolve_tat_sequence, EvolutionResult, NoiseParams, SolverOptions, TatSchedule,
};
use crate::numeric::{golden_min, grid_then_golden, linspace};
use crate::spin_algebra::{css_state, DickeBasis};
use crate::{Error, Result};

/// Best squeezing found and where: χ₀ = Jχt for OAT, κ₀ = nχτ for TAT.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Optimum {
    pub xi2: f64,
    pub at: f64,
    pub runs: usize,
}

/// Minimizes ξ²(t) over [0, `t_max`]: coarse trace on `points` samples from
/// `trace`, then golden-section refinement around the best interior sample using
/// single-time evaluations. Returns (t, ξ², evaluations).
pub fn minimize_trace<F>(mut trace: F, t_max: f64, points: usize) -> Result<(f64, f64, usize)>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let times = linspace(0.0, t_max, points.max(3));
    let xi2 = trace(&times)?;
    let (i, best) = xi2
        .iter()
        .cloned()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or(Error::MeanSpinCollapse)?;
    if i + 1 == times.len() {
        return Err(Error::param(
            "grid",
            "squeezing still decreasing at the end of the search range; extend it",
        ));
    }
    if i == 0 {
        return Ok((0.0, best, 1));
    }
    let mut runs = 1;
    let mut failure = None;
    let (t, v) = golden_min(
        |t| {
            runs += 1;
            match trace(&[t]) {
                Ok(v) if v[0].is_finite() => v[0],
                Ok(_) => f64::INFINITY,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::INFINITY
                }
            }
        },
        times[i - 1],
        times[i + 1],
        1e-6 * times[i + 1],
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(if v <= best {
        (t, v, runs)
    } else {
        (times[i], best, runs)
    })
}

/// Minimum of ξ² over OAT evolution from the coherent state, searched over
/// χ₀ ∈ [0, `chi0_max`]. The golden refinement restarts from the stored state at
/// the left edge of the bracket, so each evaluation integrates over at most two
/// coarse steps.
pub fn oat_optimum(
    n_spins: usize,
    chi: f64,
    noise: &NoiseParams,
    chi0_max: f64,
    points: usize,
    opts: &SolverOptions,
) -> Result<Optimum> {
    let basis = DickeBasis::new(n_spins)?;
    let css = css_state(&basis);
    let scale = basis.j_total() * chi;
    let times = linspace(0.0, chi0_max / scale, points.max(3));
    let coarse = evolve_oat_master(
        &css,
        chi,
        noise,
        &times,
        &SolverOptions {
            store_states: true,
            ..opts.clone()
        },
    )?;
    let (i, best) = coarse
        .squeezing_trace
        .iter()
        .cloned()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or(Error::MeanSpinCollapse)?;
    if i + 1 == times.len() {
        return Err(Error::param(
            "grid",
            "squeezing still decreasing at the end of the search range; extend it",
        ));
    }
    if i == 0 {
        return Ok(Optimum {
            xi2: best,
            at: 0.0,
            runs: 1,
        });
    }
    let start = &coarse.states.as_ref().expect("states stored")[i - 1];
    let t0 = times[i - 1];
    let mut runs = 1;
    let mut failure = None;
    let (t, v) = golden_min(
        |t| {
            runs += 1;
            match evolve_oat_master(start, chi, noise, &[0.0, t - t0], opts) {
                Ok(r) if r.squeezing_trace[1].is_finite() => r.squeezing_trace[1],
                Ok(_) => f64::INFINITY,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::INFINITY
                }
            }
        },
        t0,
        times[i + 1],
        1e-6 * times[i + 1],
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let (at, xi2) = if v <= best { (t, v) } else { (times[i], best) };
    Ok(Optimum {
        xi2,
        at: at * scale,
        runs,
    })
}

/// Smallest finite ξ² recorded along a run.
pub fn trajectory_minimum(run: &EvolutionResult) -> f64 {
    run.squeezing_trace
        .iter()
        .cloned()
        .filter(|v| v.is_finite())
        .fold(f64::INFINITY, f64::min)
}

/// Best squeezing of an n-cycle TAT sequence: minimum over κ₀ of the ξ² minimum
/// along the trajectory (sampled at every segment boundary). `kappa_grid` is scanned
/// first, then refined by golden section around its best point.
pub fn tat_optimum(
    n_spins: usize,
    chi: f64,
    n_cycles: usize,
    epsilon: f64,
    noise: &NoiseParams,
    kappa_grid: &[f64],
    opts: &SolverOptions,
) -> Result<Optimum> {
    if kappa_grid.len() < 3 || kappa_grid.iter().any(|k| !(*k > 0.0)) {
        return Err(Error::param("kappa_grid", "need at least three positive values"));
    }
    let basis = DickeBasis::new(n_spins)?;
    let css = css_state(&basis);
    let mut runs = 0;
    let mut failure = None;
    let f = |k: f64| -> f64 {
        runs += 1;
        let run = TatSchedule::from_kappa(k, n_cycles, epsilon, chi)
            .and_then(|s| evolve_tat_sequence(&css, chi, &s, noise, 1, opts));
        match run {
            Ok(r) => trajectory_minimum(&r),
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        }
    };
    let span = kappa_grid[kappa_grid.len() - 1] - kappa_grid[0];
    let best = grid_then_golden(f, kappa_grid, 1e-4 * span);
    if let Some(e) = failure {
        return Err(e);
    }
    let (at, xi2) = best.ok_or(Error::MeanSpinCollapse)?;
    Ok(Optimum { xi2, at, runs })
}
