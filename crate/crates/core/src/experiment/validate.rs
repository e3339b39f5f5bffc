//! Oracle and invariant suite behind the `validate` command.

use serde::Serialize;

use super::config::ValidateSection;
use super::table::Table;
use crate::cumulant::{squeezing_closed_form, squeezing_from_moments, VForm};
use crate::dynamics::fmt17;
use crate::dynamics::{
    brute_force_oracle, evolve_dicke_spin_boson, evolve_oat_master, oat_unitary_state, NoiseParams, Representation,
    SolverOptions,
};
use crate::modulation::bessel_j;
use crate::normal_modes::{bogoliubov, NormalModeSolution};
use crate::numeric::linspace;
use crate::ode::Tolerances;
use crate::spin_algebra::{build_operators, css_state, DickeBasis, MomentSet, StateData};
use crate::{Result, C64};

/// One check: measured deviation against its threshold.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub deviation: f64,
    pub threshold: f64,
    pub passed: bool,
    /// Thresholds of numerical checks follow the tolerance override; model-error
    /// checks keep their own.
    pub numerical: bool,
    pub note: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&["check", "deviation", "threshold", "numerical", "status", "note"]);
        for c in &self.checks {
            t.rows.push(vec![
                c.name.clone(),
                fmt17(c.deviation),
                fmt17(c.threshold),
                c.numerical.to_string(),
                if c.passed { "pass".into() } else { "FAIL".into() },
                c.note.clone(),
            ]);
        }
        t
    }

    /// One line per check, e.g. `pass  pi_vs_brute_force  3.1e-11 <= 1.0e-8`.
    pub fn lines(&self) -> Vec<String> {
        self.checks
            .iter()
            .map(|c| {
                format!(
                    "{:<4}  {:<34} {:>10.3e} <= {:.1e}{}",
                    if c.passed { "pass" } else { "FAIL" },
                    c.name,
                    c.deviation,
                    c.threshold,
                    if c.note.is_empty() {
                        String::new()
                    } else {
                        format!("  ({})", c.note)
                    }
                )
            })
            .collect()
    }
}

struct Suite {
    override_tol: Option<f64>,
    corrupt_pi: bool,
    report: ValidationReport,
}

impl Suite {
    fn solver_tol(&self) -> Tolerances {
        match self.override_tol {
            Some(t) => Tolerances {
                rtol: t,
                atol: t * 1e-2,
            },
            None => Tolerances {
                rtol: 1e-11,
                atol: 1e-13,
            },
        }
    }

    fn record(&mut self, name: &str, threshold: f64, numerical: bool, result: Result<f64>) {
        let threshold = match (numerical, self.override_tol) {
            (true, Some(t)) => t,
            _ => threshold,
        };
        let (deviation, note) = match result {
            Ok(d) => (d, String::new()),
            Err(e) => (f64::NAN, e.to_string()),
        };
        self.report.checks.push(Check {
            name: name.into(),
            deviation,
            threshold,
            passed: deviation <= threshold,
            numerical,
            note,
        });
    }

    fn opts(&self, representation: Representation) -> SolverOptions {
        SolverOptions {
            representation,
            tol: self.solver_tol(),
            corrupt_pi: self.corrupt_pi,
            ..Default::default()
        }
    }
}

fn max_diff(a: &[MomentSet], b: &[MomentSet]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.max_abs_diff(y)).fold(0.0, f64::max)
}

/// Fixture set of (χ, γ, Γ, n̄_th) used by the oracle comparisons.
pub const ORACLE_FIXTURES: [(f64, f64, f64, f64); 3] =
    [(1.0, 0.1, 0.05, 0.5), (0.5, 0.3, 0.0, 0.0), (2.0, 0.02, 0.2, 1.0)];

/// Largest moment deviation between block and full-Hilbert solvers over
/// t ∈ [0, 3/(χJ)] for the fixture set.
pub fn oracle_deviation(n_spins: usize, opts: &SolverOptions) -> Result<f64> {
    let basis = DickeBasis::new(n_spins)?;
    let mut worst: f64 = 0.0;
    for (chi, gamma, big_gamma, n_th) in ORACLE_FIXTURES {
        let noise = NoiseParams::new(gamma, big_gamma, n_th)?;
        let times = linspace(0.0, 3.0 / (chi * basis.j_total()), 7);
        let brute = brute_force_oracle(n_spins, chi, &noise, &times, opts.tol)?;
        let pi = evolve_oat_master(&css_state(&basis), chi, &noise, &times, opts)?;
        worst = worst.max(max_diff(&brute.moment_traces, &pi.moment_traces));
    }
    Ok(worst)
}

/// Runs every check; never panics on solver failures (they become failed checks).
pub fn validation_suite(section: &ValidateSection) -> ValidationReport {
    let mut s = Suite {
        override_tol: section.tolerance,
        corrupt_pi: section.corrupt_pi,
        report: ValidationReport::default(),
    };

    let pi = s.opts(Representation::PiBlocks { window: None });
    let r = (|| -> Result<f64> {
        let mut w: f64 = 0.0;
        for n in [2, 4, 6, 8] {
            w = w.max(oracle_deviation(n, &pi)?);
        }
        Ok(w)
    })();
    s.record("pi_blocks_vs_full_hilbert", 1e-8, true, r);

    let mj = s.opts(Representation::MaximalJ);
    let r = (|| -> Result<f64> {
        let noise = NoiseParams::new(0.0, 0.4, 0.0)?;
        let times = linspace(0.0, 3.0, 7);
        let brute = brute_force_oracle(2, 1.1, &noise, &times, mj.tol)?;
        let run = evolve_oat_master(&css_state(&DickeBasis::new(2)?), 1.1, &noise, &times, &mj)?;
        Ok(max_diff(&brute.moment_traces, &run.moment_traces))
    })();
    s.record("maximal_j_vs_full_hilbert", 1e-10, true, r);

    let r = (|| -> Result<f64> {
        let mut w: f64 = 0.0;
        for n in [1, 7, 20] {
            let b = DickeBasis::new(n)?;
            let o = build_operators(&b);
            let (x, y, z) = (&o.jx.matrix, &o.jy.matrix, &o.jz.matrix);
            let i = C64::new(0.0, 1.0);
            let comm = |a: &nalgebra::DMatrix<C64>, b: &nalgebra::DMatrix<C64>| a * b - b * a;
            for d in [comm(x, y) - z * i, comm(y, z) - x * i, comm(z, x) - y * i] {
                w = w.max(d.iter().map(|v| v.norm()).fold(0.0, f64::max));
            }
        }
        Ok(w)
    })();
    s.record("commutators", 1e-12, true, r);

    let r = (|| -> Result<f64> {
        let mut w: f64 = 0.0;
        for n in [1, 7, 20] {
            let b = DickeBasis::new(n)?;
            let o = build_operators(&b);
            let j = b.j_total();
            let cas = &o.jx2.matrix + &o.jy2.matrix + &o.jz2.matrix;
            let id = nalgebra::DMatrix::<C64>::identity(b.dim(), b.dim()) * C64::new(j * (j + 1.0), 0.0);
            w = w.max((cas - id).iter().map(|v| v.norm()).fold(0.0, f64::max) / (j * (j + 1.0)));
        }
        Ok(w)
    })();
    s.record("casimir", 1e-12, true, r);

    let store = SolverOptions {
        store_states: true,
        ..pi.clone()
    };
    let run = (|| {
        let noise = NoiseParams::new(0.1, 0.05, 0.5)?;
        evolve_oat_master(
            &css_state(&DickeBasis::new(12)?),
            1.0,
            &noise,
            &linspace(0.0, 0.5, 6),
            &store,
        )
    })();
    s.record(
        "trace_preservation",
        1e-8,
        true,
        run.as_ref().map(|r| r.diagnostics.max_trace_error).map_err(clone_err),
    );
    s.record(
        "hermiticity_preservation",
        1e-9,
        true,
        run.as_ref()
            .map(|r| r.diagnostics.max_hermiticity_error)
            .map_err(clone_err),
    );

    let forced = SolverOptions {
        force_integrator: true,
        store_states: true,
        ..pi.clone()
    };
    let run = (|| {
        let times = linspace(0.0, 2.0, 5);
        evolve_oat_master(
            &css_state(&DickeBasis::new(10)?),
            1.0,
            &NoiseParams::noiseless(),
            &times,
            &forced,
        )
    })();
    s.record(
        "noiseless_sector_leakage",
        1e-10,
        true,
        run.as_ref().map_err(clone_err).map(|r| {
            r.states
                .iter()
                .flatten()
                .map(|st| match &st.rho {
                    StateData::Blocks(b) => b[1..]
                        .iter()
                        .map(|b| b.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max))
                        .fold(0.0, f64::max),
                    _ => 0.0,
                })
                .fold(0.0, f64::max)
        }),
    );
    s.record(
        "jx2_conservation_noiseless_oat",
        1e-10,
        true,
        run.as_ref()
            .map_err(clone_err)
            .map(|r| r.moment_traces.iter().map(|m| (m.jx2 - 2.5).abs()).fold(0.0, f64::max)),
    );

    let r = (|| -> Result<f64> {
        let basis = DickeBasis::new(8)?;
        let twisted = oat_unitary_state(&css_state(&basis), 1.0, 0.4)?;
        let jz0 = twisted.moments().jz_mean;
        let run = evolve_oat_master(
            &twisted,
            0.0,
            &NoiseParams::new(0.2, 0.0, 0.0)?,
            &linspace(0.0, 2.0, 5),
            &pi,
        )?;
        Ok(run
            .moment_traces
            .iter()
            .map(|m| (m.jz_mean - jz0).abs())
            .fold(0.0, f64::max))
    })();
    s.record("jz_conservation_pure_dephasing", 1e-9, true, r);

    let r = (|| -> Result<f64> {
        let mut w: f64 = 0.0;
        for x in [0.5, 3.0, 10.0, 40.0] {
            for n in 1..40 {
                let lhs = bessel_j(n - 1, x)? + bessel_j(n + 1, x)?;
                w = w.max((lhs - 2.0 * n as f64 / x * bessel_j(n, x)?).abs());
            }
        }
        Ok(w)
    })();
    s.record("bessel_recurrence", 1e-12, true, r);

    let r = (|| -> Result<f64> {
        let mut w: f64 = 0.0;
        for x in [1.0, 5.0, 12.0] {
            for phi in [0.3, 1.1, 2.9] {
                let mut sum = C64::new(0.0, 0.0);
                for n in -60..=60 {
                    sum += C64::from_polar(bessel_j(n, x)?, n as f64 * phi);
                }
                w = w.max((sum - C64::from_polar(1.0, x * f64::sin(phi))).norm());
            }
        }
        Ok(w)
    })();
    s.record("jacobi_anger", 1e-12, true, r);

    let r = (|| -> Result<f64> {
        let mut w: f64 = 0.0;
        for (j, chi, g, gc, n) in [
            (40.0, 0.025, 0.04, 0.016, 2.0),
            (100.0, 0.01, 0.01, 0.0, 0.0),
            (10.0, 0.1, 0.0, 0.05, 1.0),
        ] {
            let noise = NoiseParams::new(g, gc, n)?;
            for t in [0.1, 0.5, 1.0, 2.0] {
                let t = t / (chi * j);
                let a = squeezing_closed_form(j, chi, &noise, t, VForm::Exact)?;
                let b = squeezing_from_moments(j, chi, &noise, t)?;
                w = w.max((a - b).abs());
            }
        }
        Ok(w)
    })();
    s.record("closed_form_vs_moments", 1e-6, true, r);

    let r = (|| -> Result<f64> {
        let lambda = 0.01;
        let p = NormalModeSolution {
            delta_bd: 0.0,
            omega_a: 1.0,
            coupling: 0.0,
            g: 0.0,
            theta: 0.0,
            omega_minus: 1.0,
            omega_plus: 2.0,
            lambda_plus: lambda,
            lambda_minus: lambda,
            eta_plus: 0.0,
            eta_minus: 0.0,
            lambda_eff: lambda,
            r: 50.0,
            chi: 4.0 * lambda * lambda,
            amp_factor: 0.0,
        };
        let period = 2.0 * std::f64::consts::PI / p.chi;
        let times: Vec<f64> = (1..=40).map(|i| period * i as f64 / 40.0).collect();
        let res = evolve_dicke_spin_boson(&p, 0.0, 8, &css_state(&DickeBasis::new(6)?), &times)?;
        Ok(res
            .spin
            .squeezing_trace
            .iter()
            .zip(&res.oat_reference.squeezing_trace)
            .map(|(a, b)| ((a - b) / b).abs())
            .fold(0.0, f64::max))
    })();
    s.record("spin_boson_vs_effective_oat", 5.0 / 50.0, false, r);

    let r = (|| -> Result<f64> {
        let wa = 1.0;
        let mut w: f64 = 0.0;
        for dbd in linspace(0.2, 2.0, 30) {
            let gmax = 0.5 * (dbd * wa).sqrt();
            for frac in linspace(0.0, 0.99, 30) {
                let g = frac * gmax;
                let s = bogoliubov(dbd, wa, g, 1.0)?;
                let (p2, m2) = (s.omega_plus.powi(2), s.omega_minus.powi(2));
                let sum = dbd * dbd + wa * wa;
                let prod = dbd * wa * (dbd * wa - 4.0 * g * g);
                w = w.max(((p2 + m2 - sum) / sum).abs());
                if prod > 0.0 {
                    w = w.max(((p2 * m2 - prod) / prod).abs());
                }
            }
        }
        Ok(w)
    })();
    s.record("normal_mode_identities", 1e-10, true, r);

    s.report
}

fn clone_err(e: &crate::Error) -> crate::Error {
    crate::Error::Integrator {
        time: f64::NAN,
        reason: e.to_string(),
    }
}
