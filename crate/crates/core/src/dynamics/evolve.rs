use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::brute::{BruteGenerator, BruteState};
use super::engine::{Axis, BlockGenerator, Layout, Segment};
use super::exact::{AxisBasis, TatBasis};
use super::result::{EvolutionResult, PositivityCheck, Representation, SolverOptions};
use super::NoiseParams;
use crate::ode::Dopri5;
use crate::spin_algebra::{Block, DickeBasis, SpinState, StateData};
use crate::{Error, Result, C64};

/// Eigenvalues below this abort the run.
pub const POSITIVITY_FLOOR: f64 = -1e-6;

enum Current {
    Spin { state: SpinState, leak: f64 },
    Brute(BruteState),
}

struct Propagator<'a> {
    opts: &'a SolverOptions,
    n: usize,
    layout: Option<Layout>,
    bases: HashMap<(usize, Axis), AxisBasis>,
    cur: Current,
    /// Step-size hint carried between segments, per axis.
    h_hint: HashMap<Axis, f64>,
}

/// Observation handed to the recorder.
enum Snapshot<'s> {
    Spin { state: &'s SpinState, leak: f64 },
    Brute(&'s BruteState),
}

struct Recorder<'a> {
    opts: &'a SolverOptions,
    out: EvolutionResult,
    n_expected: usize,
}

impl Recorder<'_> {
    fn record(&mut self, t: f64, snap: Snapshot<'_>) -> Result<()> {
        let last = self.out.times.len() + 1 == self.n_expected;
        let check = match self.opts.positivity {
            PositivityCheck::Off => false,
            PositivityCheck::Final => last,
            PositivityCheck::Every => true,
        };
        let d = &mut self.out.diagnostics;
        let moments = match snap {
            Snapshot::Spin { state, leak } => {
                let tr = state.trace().re;
                d.max_trace_error = d.max_trace_error.max((tr + leak - 1.0).abs());
                d.max_hermiticity_error = d.max_hermiticity_error.max(state.hermiticity_error());
                d.max_leak = d.max_leak.max(leak);
                if check && !state.is_pure_vector() {
                    let ev = state.min_eigenvalue();
                    d.min_eigenvalue = d.min_eigenvalue.min(ev);
                    if ev < POSITIVITY_FLOOR {
                        return Err(Error::Positivity {
                            time: t,
                            min_eigenvalue: ev,
                        });
                    }
                }
                if let Some(v) = self.out.states.as_mut() {
                    v.push(state.clone());
                }
                let m = state.moments();
                if leak > 0.0 {
                    m.scaled(1.0 / tr)
                } else {
                    m
                }
            }
            Snapshot::Brute(b) => {
                d.max_trace_error = d.max_trace_error.max((b.trace() - 1.0).abs());
                d.max_hermiticity_error = d.max_hermiticity_error.max(b.hermiticity_error());
                b.moments()
            }
        };
        self.out.push(t, moments);
        Ok(())
    }
}

impl<'a> Propagator<'a> {
    fn new(state0: &SpinState, opts: &'a SolverOptions, gamma: f64) -> Result<Self> {
        let n = state0.basis.n_spins;
        let (cur, layout) = match opts.representation {
            Representation::FullHilbert => (Current::Brute(BruteState::embed(state0)?), None),
            Representation::MaximalJ | Representation::PiBlocks { .. } => {
                if let (Representation::MaximalJ, StateData::Blocks(b)) = (opts.representation, &state0.rho) {
                    if b.len() > 1 {
                        state0.density_matrix()?;
                    }
                }
                let window = match opts.representation {
                    Representation::MaximalJ => Some(1),
                    Representation::PiBlocks { window } => window,
                    Representation::FullHilbert => unreachable!(),
                };
                let layout = (gamma != 0.0 || opts.force_integrator).then(|| Layout::new(n, window, opts.corrupt_pi));
                (
                    Current::Spin {
                        state: state0.clone(),
                        leak: 0.0,
                    },
                    layout,
                )
            }
        };
        Ok(Propagator {
            opts,
            n,
            layout,
            bases: HashMap::new(),
            cur,
            h_hint: HashMap::new(),
        })
    }

    fn approximate(&self, gamma: f64) -> bool {
        gamma != 0.0 && self.layout.as_ref().is_some_and(|l| l.truncated)
    }

    fn basis(&mut self, two_j: usize, axis: Axis) -> &AxisBasis {
        self.bases
            .entry((two_j, axis))
            .or_insert_with(|| AxisBasis::new(two_j, axis))
    }

    fn snapshot(&self) -> Snapshot<'_> {
        match &self.cur {
            Current::Spin { state, leak } => Snapshot::Spin { state, leak: *leak },
            Current::Brute(b) => Snapshot::Brute(b),
        }
    }

    /// Advances by one segment, recording at `t_base + s` for each offset in `offsets`
    /// (ascending, within [0, duration]); ends at `duration`.
    fn advance(
        &mut self,
        seg: Segment,
        duration: f64,
        offsets: &[f64],
        t_base: f64,
        rec: &mut Recorder<'_>,
        mut on_record: impl FnMut(f64),
    ) -> Result<()> {
        let exact = seg.gamma == 0.0 && !self.opts.force_integrator && matches!(self.cur, Current::Spin { .. });
        if exact {
            let start = match &self.cur {
                Current::Spin { state, leak } => (state.clone(), *leak),
                Current::Brute(_) => unreachable!(),
            };
            let emit = |p: &mut Self, s: f64| p.exact_step(&start.0, seg, s);
            for &s in offsets {
                let st = emit(self, s)?;
                rec.record(
                    t_base + s,
                    Snapshot::Spin {
                        state: &st,
                        leak: start.1,
                    },
                )?;
                on_record(s);
            }
            let end = emit(self, duration)?;
            self.cur = Current::Spin {
                state: end,
                leak: start.1,
            };
            return Ok(());
        }
        let mut outs: Vec<f64> = offsets.to_vec();
        let record_end = outs.last().is_none_or(|&l| l < duration);
        if record_end {
            outs.push(duration);
        }
        let mut solver = Dopri5::new(self.opts.tol);
        solver.h_init = self.h_hint.get(&seg.axis).copied();
        match &mut self.cur {
            Current::Brute(b) => {
                let gen = BruteGenerator {
                    template: BruteState {
                        n: b.n,
                        dim: b.dim,
                        rho: Vec::new(),
                    },
                    seg,
                };
                let mut y = std::mem::take(&mut b.rho);
                let (n, dim) = (b.n, b.dim);
                let stats = solver.solve(&gen, 0.0, &mut y, &outs, |i, s, yy| {
                    if i < offsets.len() {
                        let st = BruteState {
                            n,
                            dim,
                            rho: yy.to_vec(),
                        };
                        rec.record(t_base + s, Snapshot::Brute(&st))?;
                        on_record(s);
                    }
                    Ok(())
                })?;
                rec.out.diagnostics.rhs_evals += stats.rhs_evals;
                self.h_hint.insert(seg.axis, stats.last_step);
                b.rho = y;
            }
            Current::Spin { state, leak } => {
                let layout = self.layout.as_ref().expect("integrator layout");
                let blocks = match state.to_blocks()?.rho {
                    StateData::Blocks(b) => b,
                    _ => unreachable!(),
                };
                let mut y = layout.pack(&blocks[..layout.blocks.len().min(blocks.len())], *leak);
                let gen = BlockGenerator {
                    layout,
                    seg,
                    exec: self.opts.execution,
                };
                let basis = DickeBasis::with_sectors(self.n)?;
                let stats = solver.solve(&gen, 0.0, &mut y, &outs, |i, s, yy| {
                    if i < offsets.len() {
                        let st = SpinState {
                            basis: basis.clone(),
                            rho: StateData::Blocks(layout.unpack(yy)),
                        };
                        rec.record(
                            t_base + s,
                            Snapshot::Spin {
                                state: &st,
                                leak: yy[layout.leak].re,
                            },
                        )?;
                        on_record(s);
                    }
                    Ok(())
                })?;
                rec.out.diagnostics.rhs_evals += stats.rhs_evals;
                self.h_hint.insert(seg.axis, stats.last_step);
                *leak = y[layout.leak].re;
                *state = SpinState {
                    basis,
                    rho: StateData::Blocks(layout.unpack(&y)),
                };
            }
        }
        Ok(())
    }

    fn exact_step(&mut self, start: &SpinState, seg: Segment, s: f64) -> Result<SpinState> {
        let rho = match &start.rho {
            StateData::Pure(psi) if seg.collective == 0.0 => {
                StateData::Pure(self.basis(self.n, seg.axis).propagate_pure(psi, seg.twist, s))
            }
            StateData::Pure(_) | StateData::Dense(_) => {
                let m = start.density_matrix()?;
                StateData::Dense(
                    self.basis(self.n, seg.axis)
                        .propagate_dense(&m, seg.twist, seg.collective, s),
                )
            }
            StateData::Blocks(blocks) => StateData::Blocks(
                blocks
                    .iter()
                    .map(|b| Block {
                        two_j: b.two_j,
                        multiplicity: b.multiplicity,
                        matrix: self
                            .basis(b.two_j, seg.axis)
                            .propagate_dense(&b.matrix, seg.twist, seg.collective, s),
                    })
                    .collect(),
            ),
        };
        Ok(SpinState {
            basis: start.basis.clone(),
            rho,
        })
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::param("times", "empty grid"));
    }
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::param("times", "must be finite and non-negative"));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::param("times", "must be ascending"));
    }
    Ok(())
}

fn check_state(state: &SpinState) -> Result<()> {
    state.validate(1e-8)
}

/// Evolves under H = −χJx² with collective relaxation Γ(2n̄+1)·D[Jx] and single-spin
/// dephasing γ·Σ D[σz], recording the moments at `times` (measured from 0).
pub fn evolve_oat_master(
    state0: &SpinState,
    chi: f64,
    noise: &NoiseParams,
    times: &[f64],
    opts: &SolverOptions,
) -> Result<EvolutionResult> {
    noise.validate()?;
    check_times(times)?;
    check_state(state0)?;
    if !chi.is_finite() {
        return Err(Error::param("chi", "must be finite"));
    }
    let seg = Segment {
        axis: Axis::X,
        twist: chi,
        collective: noise.collective_rate(),
        gamma: noise.gamma,
    };
    let mut prop = Propagator::new(state0, opts, noise.gamma)?;
    let mut rec = Recorder {
        opts,
        out: EvolutionResult::new(
            state0.basis.j_total(),
            chi,
            opts.representation.label(),
            prop.approximate(noise.gamma),
            opts.store_states && !matches!(opts.representation, Representation::FullHilbert),
        ),
        n_expected: times.len(),
    };
    let end = *times.last().unwrap();
    prop.advance(seg, end, times, 0.0, &mut rec, |_| {})?;
    Ok(rec.out)
}

/// Cyclic x/y twisting schedule: τ₁ on −χJx², then τ₂ on −εχJy², repeated n times.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TatSchedule {
    pub tau1: f64,
    pub tau2: f64,
    pub n_cycles: usize,
    pub epsilon: f64,
    pub period: f64,
}

impl TatSchedule {
    /// τ₁ = τ, τ₂ = τ/|ε|.
    pub fn new(tau: f64, n_cycles: usize, epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon != 0.0) {
            return Err(Error::param("epsilon", "must be finite and non-zero"));
        }
        let s = TatSchedule {
            tau1: tau,
            tau2: tau / epsilon.abs(),
            n_cycles,
            epsilon,
            period: tau + tau / epsilon.abs(),
        };
        s.validate()?;
        Ok(s)
    }

    /// Schedule reaching accumulated twist κ₀ = nχτ.
    pub fn from_kappa(kappa0: f64, n_cycles: usize, epsilon: f64, chi: f64) -> Result<Self> {
        if n_cycles == 0 || chi == 0.0 {
            return Err(Error::param("n_cycles", "need n ≥ 1 and χ ≠ 0"));
        }
        Self::new(kappa0 / (n_cycles as f64 * chi), n_cycles, epsilon)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau1 > 0.0 && self.tau2 > 0.0 && self.tau1.is_finite() && self.tau2.is_finite()) {
            return Err(Error::param("tau", "segment durations must be positive and finite"));
        }
        if self.n_cycles == 0 {
            return Err(Error::param("n_cycles", "must be at least 1"));
        }
        if !(self.epsilon.is_finite() && self.epsilon != 0.0) {
            return Err(Error::param("epsilon", "must be finite and non-zero"));
        }
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs());
        if rel(self.epsilon.abs() * self.tau2, self.tau1) > 1e-9 {
            return Err(Error::param("tau2", "matching condition |ε|·τ₂ = τ₁ violated"));
        }
        if rel(self.period, self.tau1 + self.tau2) > 1e-12 {
            return Err(Error::param("period", "must equal τ₁ + τ₂"));
        }
        Ok(())
    }

    /// κ₀ = nχτ₁.
    pub fn kappa0(&self, chi: f64) -> f64 {
        self.n_cycles as f64 * chi * self.tau1
    }
}

/// Runs the trotterized sequence. Samples are taken at t = 0, at every segment
/// boundary and at `substeps − 1` interior points per segment; `kappa` holds
/// χ·(x-time + |ε|·y-time)/2, equal to kχτ after k cycles.
pub fn evolve_tat_sequence(
    state0: &SpinState,
    chi: f64,
    schedule: &TatSchedule,
    noise: &NoiseParams,
    substeps: usize,
    opts: &SolverOptions,
) -> Result<EvolutionResult> {
    schedule.validate()?;
    noise.validate()?;
    check_state(state0)?;
    let substeps = substeps.max(1);
    let rate = noise.collective_rate();
    let segs = [
        (
            Segment {
                axis: Axis::X,
                twist: chi,
                collective: rate,
                gamma: noise.gamma,
            },
            schedule.tau1,
            1.0,
        ),
        (
            Segment {
                axis: Axis::Y,
                twist: schedule.epsilon * chi,
                collective: rate,
                gamma: noise.gamma,
            },
            schedule.tau2,
            schedule.epsilon.abs(),
        ),
    ];
    let mut prop = Propagator::new(state0, opts, noise.gamma)?;
    let n_expected = 1 + 2 * schedule.n_cycles * substeps;
    let mut rec = Recorder {
        opts,
        out: EvolutionResult::new(
            state0.basis.j_total(),
            chi,
            opts.representation.label(),
            prop.approximate(noise.gamma),
            opts.store_states && !matches!(opts.representation, Representation::FullHilbert),
        ),
        n_expected,
    };
    let mut kappa = vec![0.0];
    rec.record(0.0, prop.snapshot())?;
    let (mut t, mut k_acc) = (0.0, 0.0);
    for _ in 0..schedule.n_cycles {
        for (seg, dur, weight) in segs {
            let offsets: Vec<f64> = (1..=substeps).map(|i| dur * i as f64 / substeps as f64).collect();
            let k0 = k_acc;
            prop.advance(seg, dur, &offsets, t, &mut rec, |s| {
                kappa.push(k0 + 0.5 * chi * weight * s)
            })?;
            t += dur;
            k_acc += 0.5 * chi * weight * dur;
        }
        rec.out.cycle_marks.push(rec.out.times.len() - 1);
    }
    rec.out.kappa = Some(kappa);
    Ok(rec.out)
}

/// exp(iκ₀(Jx² − Jy²))|ψ₀⟩ for every κ₀ in the grid; `times` hold κ₀ and χ = 1/J so
/// that the `chi0` column equals κ₀.
pub fn evolve_effective_tat(state0: &SpinState, kappa_grid: &[f64]) -> Result<EvolutionResult> {
    check_times(kappa_grid)?;
    check_state(state0)?;
    let n = state0.basis.n_spins;
    let j = state0.basis.j_total();
    let basis = TatBasis::new(n);
    let mut out = EvolutionResult::new(j, 1.0 / j, "effective_tat".into(), false, false);
    let vc = basis.vectors.map(|x| C64::new(x, 0.0));
    match &state0.rho {
        StateData::Pure(psi) => {
            for &k in kappa_grid {
                let st = SpinState {
                    basis: state0.basis.clone(),
                    rho: StateData::Pure(basis.propagate(psi, k)),
                };
                out.push(k, st.moments());
            }
        }
        _ => {
            let rho = state0.density_matrix()?;
            let r0 = vc.ad_mul(&rho) * &vc;
            for &k in kappa_grid {
                let r = DMatrix::from_fn(n + 1, n + 1, |a, b| {
                    r0[(a, b)] * C64::from_polar(1.0, k * (basis.values[a] - basis.values[b]))
                });
                let st = SpinState {
                    basis: state0.basis.clone(),
                    rho: StateData::Dense(&vc * r * vc.adjoint()),
                };
                out.push(k, st.moments());
            }
        }
    }
    out.kappa = Some(kappa_grid.to_vec());
    Ok(out)
}

/// Exact OAT states exp(iχtJx²)|ψ₀⟩ (reference for dephasing-free runs).
pub fn oat_unitary_state(state0: &SpinState, chi: f64, t: f64) -> Result<SpinState> {
    let psi = match &state0.rho {
        StateData::Pure(p) => p,
        _ => return Err(Error::param("state0", "pure maximal-j state required")),
    };
    let b = AxisBasis::new(state0.basis.n_spins, Axis::X);
    Ok(SpinState {
        basis: state0.basis.clone(),
        rho: StateData::Pure(b.propagate_pure(psi, chi, t)),
    })
}

/// Integrates the OAT master equation from the CSS on the full 2^N Hilbert space.
pub fn brute_force_oracle(
    n_spins: usize,
    chi: f64,
    noise: &NoiseParams,
    times: &[f64],
    tol: crate::ode::Tolerances,
) -> Result<EvolutionResult> {
    let basis = DickeBasis::new(n_spins)?;
    let opts = SolverOptions {
        representation: Representation::FullHilbert,
        tol,
        ..Default::default()
    };
    evolve_oat_master(&crate::spin_algebra::css_state(&basis), chi, noise, times, &opts)
}
