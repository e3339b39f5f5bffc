use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::exec::Execution;
use crate::ode::Tolerances;
use crate::spin_algebra::{squeezing_wineland, MomentSet, SpinState};
use crate::{Error, Result};

/// State representation used by the master-equation solvers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Representation {
    /// Maximal-j sector only. Exact without single-spin dephasing; with γ > 0 the
    /// population leaving the sector is tracked but not followed (approximate).
    MaximalJ,
    /// Permutation-invariant blocks; `window` keeps only the top sectors
    /// (approximate with γ > 0 when it truncates).
    PiBlocks { window: Option<usize> },
    /// Full 2^N Hilbert space (N ≤ 12).
    FullHilbert,
}

impl Representation {
    pub fn label(&self) -> String {
        match self {
            Representation::MaximalJ => "maximal_j".into(),
            Representation::PiBlocks { window: None } => "pi_blocks".into(),
            Representation::PiBlocks { window: Some(k) } => format!("pi_blocks(window={k})"),
            Representation::FullHilbert => "full_hilbert".into(),
        }
    }
}

/// When to check positivity of the evolved state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PositivityCheck {
    Off,
    Final,
    #[default]
    Every,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub representation: Representation,
    pub tol: Tolerances,
    pub store_states: bool,
    pub positivity: PositivityCheck,
    /// Integrate dephasing-free segments with the Runge–Kutta solver instead of the
    /// exact eigenbasis propagator.
    pub force_integrator: bool,
    pub execution: Execution,
    /// Perturb the dephasing recoupling weights (validation negative control only).
    #[serde(skip)]
    pub corrupt_pi: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            representation: Representation::PiBlocks { window: None },
            tol: Tolerances::default(),
            store_states: false,
            positivity: PositivityCheck::Every,
            force_integrator: false,
            execution: Execution::Sequential,
            corrupt_pi: false,
        }
    }
}

impl SolverOptions {
    pub fn with_representation(representation: Representation) -> Self {
        SolverOptions {
            representation,
            ..Default::default()
        }
    }
}

/// Run-level diagnostics attached to every evolution.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RunDiagnostics {
    pub representation: String,
    pub approximate: bool,
    pub max_trace_error: f64,
    pub max_hermiticity_error: f64,
    /// Smallest eigenvalue seen by the positivity checks (∞ if none ran).
    pub min_eigenvalue: f64,
    /// Largest population lost from a truncated block window.
    pub max_leak: f64,
    pub rhs_evals: usize,
}

/// Time series of an evolution.
#[derive(Clone, Debug, Default)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    pub states: Option<Vec<SpinState>>,
    pub moment_traces: Vec<MomentSet>,
    /// ξ² per time; NaN where the mean spin vanishes.
    pub squeezing_trace: Vec<f64>,
    /// Accumulated twist κ (TAT sequences only).
    pub kappa: Option<Vec<f64>>,
    /// Sample indices at completed TAT cycles.
    pub cycle_marks: Vec<usize>,
    pub j_total: f64,
    pub chi: f64,
    pub diagnostics: RunDiagnostics,
}

impl EvolutionResult {
    pub(crate) fn new(j_total: f64, chi: f64, representation: String, approximate: bool, store: bool) -> Self {
        EvolutionResult {
            j_total,
            chi,
            states: store.then(Vec::new),
            diagnostics: RunDiagnostics {
                representation,
                approximate,
                min_eigenvalue: f64::INFINITY,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    pub(crate) fn push(&mut self, t: f64, m: MomentSet) {
        self.times.push(t);
        self.moment_traces.push(m);
        self.squeezing_trace
            .push(squeezing_wineland(&m, self.j_total).unwrap_or(f64::NAN));
    }

    /// Smallest ξ² and its index, ignoring undefined entries.
    pub fn min_squeezing(&self) -> Option<(usize, f64)> {
        self.squeezing_trace
            .iter()
            .cloned()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// χ₀ = Jχt for every sample.
    pub fn chi0(&self) -> Vec<f64> {
        self.times.iter().map(|t| self.j_total * self.chi * t).collect()
    }

    /// Writes `t,chi0,jz,jx2,jy2,jz2,cxy,xi2` rows (plus `kappa0` for TAT runs) with
    /// 17 significant digits after the given `#` metadata lines.
    pub fn write_csv<W: Write>(&self, mut w: W, metadata: &[String]) -> Result<()> {
        let io = |e: std::io::Error| Error::Io {
            path: "<csv>".into(),
            source: e,
        };
        for line in metadata {
            writeln!(w, "# {line}").map_err(io)?;
        }
        let mut cw = csv::Writer::from_writer(w);
        let mut header = vec!["t", "chi0", "jz", "jx2", "jy2", "jz2", "cxy", "xi2"];
        if self.kappa.is_some() {
            header.push("kappa0");
        }
        cw.write_record(&header)?;
        let chi0 = self.chi0();
        for i in 0..self.times.len() {
            let m = &self.moment_traces[i];
            let mut row = vec![
                fmt17(self.times[i]),
                fmt17(chi0[i]),
                fmt17(m.jz_mean),
                fmt17(m.jx2),
                fmt17(m.jy2),
                fmt17(m.jz2),
                fmt17(m.cxy),
                fmt17(self.squeezing_trace[i]),
            ];
            if let Some(k) = &self.kappa {
                row.push(fmt17(k[i]));
            }
            cw.write_record(&row)?;
        }
        cw.flush().map_err(io)?;
        Ok(())
    }
}

/// Round-trip formatting with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}
