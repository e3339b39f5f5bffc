use serde::{Deserialize, Serialize};

use crate::dynamics::{NoiseParams, PositivityCheck, Representation, SolverOptions};
use crate::exec::Execution;
use crate::modulation::{
    effective_tat_params, resonant_configuration, solve_tat_amplitude, ModulationInput, ModulationParams,
    ModulationThresholds,
};
use crate::normal_modes::{bogoliubov, collective_decay_rate, oat_coupling};
use crate::numeric::linspace;
use crate::ode::Tolerances;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    NormalModes,
    Oat,
    Tat,
    Cumulant,
    Sweep,
    Fit,
    Validate,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::NormalModes => "normal-modes",
            Kind::Oat => "oat",
            Kind::Tat => "tat",
            Kind::Cumulant => "cumulant",
            Kind::Sweep => "sweep",
            Kind::Fit => "fit",
            Kind::Validate => "validate",
        }
    }
}

/// Rate-unit convention. `chi` and `chiJ` measure rates in units of χ or χJ and
/// use χ₀ = Jχt as the grid variable; `absolute` takes rates and times as given.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Units {
    #[serde(rename = "chi")]
    Chi,
    #[default]
    #[serde(rename = "chiJ")]
    ChiJ,
    #[serde(rename = "absolute")]
    Absolute,
}

impl Units {
    pub fn tag(self) -> &'static str {
        match self {
            Units::Chi => "chi",
            Units::ChiJ => "chiJ",
            Units::Absolute => "absolute",
        }
    }

    pub fn parse(s: &str) -> Result<Units> {
        match s {
            "chi" => Ok(Units::Chi),
            "chiJ" => Ok(Units::ChiJ),
            "absolute" => Ok(Units::Absolute),
            _ => Err(Error::config(
                "units",
                format!("unknown convention `{s}` (chi, chiJ, absolute)"),
            )),
        }
    }

    /// Rate scale: configured rates are multiplied by this to get physical rates.
    pub fn rate_unit(self, chi: f64, j: f64) -> f64 {
        match self {
            Units::Chi => chi,
            Units::ChiJ => chi * j,
            Units::Absolute => 1.0,
        }
    }
}

/// Evenly spaced (optionally logarithmic) or explicit values.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub values: Option<Vec<f64>>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub points: Option<usize>,
    #[serde(default)]
    pub log: bool,
}

impl GridSpec {
    pub fn range(start: f64, stop: f64, points: usize) -> GridSpec {
        GridSpec {
            start: Some(start),
            stop: Some(stop),
            points: Some(points),
            ..Default::default()
        }
    }

    pub fn list(values: Vec<f64>) -> GridSpec {
        GridSpec {
            values: Some(values),
            ..Default::default()
        }
    }

    pub fn values(&self, path: &str) -> Result<Vec<f64>> {
        let v = match (&self.values, self.start, self.stop, self.points) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(a), Some(b), Some(n)) => {
                if n == 0 {
                    return Err(Error::config(format!("{path}.points"), "must be positive"));
                }
                if self.log {
                    if !(a > 0.0 && b > 0.0) {
                        return Err(Error::config(path, "log grids need positive bounds"));
                    }
                    linspace(a.ln(), b.ln(), n).into_iter().map(f64::exp).collect()
                } else {
                    linspace(a, b, n)
                }
            }
            _ => {
                return Err(Error::config(
                    path,
                    "give either `values` or all of `start`, `stop`, `points`",
                ))
            }
        };
        if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
            return Err(Error::config(path, "grid must be non-empty and finite"));
        }
        if v.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config(path, "grid must be strictly increasing"));
        }
        Ok(v)
    }
}

/// Device parameters (angular frequencies unless `hz`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalSystem {
    pub omega_a: f64,
    pub g: f64,
    pub r: f64,
    pub q_factor: Option<f64>,
    pub t2: Option<f64>,
    pub n_th: Option<f64>,
    /// Effective detuning and linearized coupling, needed for modulation.
    pub delta_bd: Option<f64>,
    pub coupling: Option<f64>,
    #[serde(default)]
    pub hz: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub n_spins: Option<usize>,
    pub chi: Option<f64>,
    /// χ = amp_factor · g_over_r.
    pub amp_factor: Option<f64>,
    pub g_over_r: Option<f64>,
    pub physical: Option<PhysicalSystem>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub n_cycles: usize,
    pub epsilon: Option<f64>,
    /// Accumulated twist nχτ; alternatively `tau` in the configured time unit.
    pub kappa0: Option<f64>,
    pub tau: Option<f64>,
    /// Samples per segment.
    #[serde(default = "default_substeps")]
    pub substeps: usize,
    /// Also emit the effective TAT curve.
    #[serde(default)]
    pub effective: bool,
    /// κ₀ values scanned by optimum searches (default: 24 points up to `kappa0`).
    pub kappa_grid: Option<GridSpec>,
}

fn default_substeps() -> usize {
    4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulationSection {
    pub m0: i64,
    /// Effective detuning Δ (absolute rate).
    pub delta: f64,
    #[serde(default = "default_bracket")]
    pub bracket: (f64, f64),
}

fn default_bracket() -> (f64, f64) {
    (0.5, 3.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalModesSection {
    pub omega_a: f64,
    pub g: f64,
    /// Δ_bd/ω_a values.
    pub delta_bd: GridSpec,
    /// G/ω_a values.
    pub coupling: GridSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_representation")]
    pub representation: String,
    pub window: Option<usize>,
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default = "default_atol")]
    pub atol: f64,
    #[serde(default)]
    pub positivity: PositivityCheck,
    #[serde(default)]
    pub force_integrator: bool,
    /// Samples of the coarse trajectory used by optimum searches.
    #[serde(default = "default_search_points")]
    pub search_points: usize,
}

fn default_representation() -> String {
    "pi_blocks".into()
}
fn default_rtol() -> f64 {
    1e-9
}
fn default_atol() -> f64 {
    1e-12
}
fn default_search_points() -> usize {
    61
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            representation: default_representation(),
            window: None,
            rtol: default_rtol(),
            atol: default_atol(),
            positivity: PositivityCheck::default(),
            force_integrator: false,
            search_points: default_search_points(),
        }
    }
}

impl SolverSection {
    pub fn options(&self) -> Result<SolverOptions> {
        let representation = match self.representation.as_str() {
            "maximal_j" => Representation::MaximalJ,
            "pi_blocks" => Representation::PiBlocks { window: self.window },
            "full_hilbert" => Representation::FullHilbert,
            other => {
                return Err(Error::config(
                    "solver.representation",
                    format!("unknown `{other}` (maximal_j, pi_blocks, full_hilbert)"),
                ))
            }
        };
        let tol = Tolerances {
            rtol: self.rtol,
            atol: self.atol,
        };
        tol.validate().map_err(|e| Error::config("solver", e.to_string()))?;
        Ok(SolverOptions {
            representation,
            tol,
            positivity: self.positivity,
            force_integrator: self.force_integrator,
            execution: Execution::Sequential,
            ..Default::default()
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Master-equation solver.
    Exact,
    /// Five-moment cumulant equations.
    Cumulant,
    /// Holstein–Primakoff moment equations.
    Hp,
    /// Closed-form squeezing parameter.
    ClosedForm,
    /// Short-time asymptotic squeezing.
    Asymptotic,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Cumulant => "cumulant",
            Method::Hp => "hp",
            Method::ClosedForm => "closed_form",
            Method::Asymptotic => "asymptotic",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Optimum,
    Trace,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    /// Dotted parameter path, e.g. `noise.gamma` or `system.n_spins`.
    pub param: String,
    pub values: Option<Vec<f64>>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub points: Option<usize>,
    #[serde(default)]
    pub log: bool,
    /// Parameters that move together with `param`, one value per grid point.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub linked: Vec<LinkedParam>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkedParam {
    pub param: String,
    pub values: Vec<f64>,
}

impl SweepAxis {
    pub fn grid(&self) -> GridSpec {
        GridSpec {
            values: self.values.clone(),
            start: self.start,
            stop: self.stop,
            points: self.points,
            log: self.log,
        }
    }

    /// Grid values plus, per point, the linked (param, value) pairs.
    pub fn expand(&self, path: &str) -> Result<Vec<Vec<(String, f64)>>> {
        let v = self.grid().values(path)?;
        for (i, l) in self.linked.iter().enumerate() {
            if l.values.len() != v.len() {
                return Err(Error::config(
                    format!("{path}.linked[{i}]"),
                    format!("has {} values, axis has {}", l.values.len(), v.len()),
                ));
            }
        }
        Ok(v.iter()
            .enumerate()
            .map(|(k, &x)| {
                std::iter::once((self.param.clone(), x))
                    .chain(self.linked.iter().map(|l| (l.param.clone(), l.values[k])))
                    .collect()
            })
            .collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub base: Kind,
    #[serde(default)]
    pub metric: Metric,
    pub axes: Vec<SweepAxis>,
    /// Fit log ξ²_opt against log of this axis for every value of the other axis.
    pub fit_axis: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    pub input: String,
    #[serde(default = "default_fit_x")]
    pub x: String,
    #[serde(default = "default_fit_y")]
    pub y: String,
}

fn default_fit_x() -> String {
    "system.n_spins".into()
}
fn default_fit_y() -> String {
    "xi2_opt".into()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateSection {
    /// Perturb the block dephasing coefficients (negative control; must fail).
    #[serde(default)]
    pub corrupt_pi: bool,
    /// Override for all numerical check thresholds and solver tolerances.
    pub tolerance: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub path: Option<String>,
}

/// A complete experiment description.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Option<Kind>,
    #[serde(default)]
    pub units: Units,
    /// Unused; every computation is deterministic.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub system: SystemSection,
    #[serde(default)]
    pub noise: NoiseParams,
    pub methods: Option<Vec<Method>>,
    pub grid: Option<GridSpec>,
    pub schedule: Option<ScheduleSection>,
    pub modulation: Option<ModulationSection>,
    pub normal_modes: Option<NormalModesSection>,
    #[serde(default)]
    pub solver: SolverSection,
    pub sweep: Option<SweepSection>,
    pub fit: Option<FitSection>,
    pub validate: Option<ValidateSection>,
    #[serde(default)]
    pub output: OutputSection,
}

/// Physical quantities derived from a configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct Resolved {
    pub n_spins: usize,
    pub chi: f64,
    /// Physical noise rates.
    pub noise: NoiseParams,
    /// Physical rates per configured rate unit.
    pub rate_unit: f64,
    pub epsilon: Option<f64>,
    pub modulation: Option<ModulationParams>,
}

impl Resolved {
    pub fn j(&self) -> f64 {
        self.n_spins as f64 / 2.0
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let path = e
                .span()
                .map(|s| format!("byte {}..{}", s.start, s.end))
                .unwrap_or_else(|| "<root>".into());
            Error::config(path, e.message().to_string())
        })
    }

    pub fn load(path: &str) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.into(),
            source: e,
        })?;
        Self::from_toml(&text)
    }

    /// Canonical TOML serialization (after overrides), the input of the config hash.
    pub fn canonical(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }

    /// SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn time_unit_doc(&self) -> &'static str {
        match self.units {
            Units::Chi => "rates in units of chi; grid variable chi0 = J*chi*t",
            Units::ChiJ => "rates in units of chi*J; grid variable chi0 = J*chi*t",
            Units::Absolute => "rates and times absolute; grid variable t",
        }
    }

    /// Derives χ, N, physical noise and (for modulated TAT) ε.
    pub fn resolve(&self) -> Result<Resolved> {
        let s = &self.system;
        let n_spins = s.n_spins.ok_or_else(|| Error::config("system.n_spins", "missing"))?;
        if n_spins == 0 {
            return Err(Error::config("system.n_spins", "must be at least 1"));
        }
        let j = n_spins as f64 / 2.0;
        self.noise
            .validate()
            .map_err(|e| Error::config("noise", e.to_string()))?;
        let mut noise = self.noise;
        let mut modulation = None;
        let mut epsilon = self.schedule.as_ref().and_then(|s| s.epsilon);
        let chi = if let Some(p) = &s.physical {
            if self.units != Units::Absolute {
                return Err(Error::config(
                    "units",
                    "physical system parameters require units = \"absolute\"",
                ));
            }
            if s.chi.is_some() || s.amp_factor.is_some() {
                return Err(Error::config(
                    "system",
                    "give either physical parameters or chi/amp_factor",
                ));
            }
            let k = if p.hz { 2.0 * std::f64::consts::PI } else { 1.0 };
            let (omega_a, g) = (p.omega_a * k, p.g * k);
            let oat = oat_coupling(omega_a, g, p.r).map_err(|e| Error::config("system.physical", e.to_string()))?;
            if let Some(q) = p.q_factor {
                if noise.big_gamma != 0.0 {
                    return Err(Error::config(
                        "noise.Gamma",
                        "already derived from system.physical.q_factor",
                    ));
                }
                noise.big_gamma = collective_decay_rate(omega_a, q, p.r);
            }
            if let Some(t2) = p.t2 {
                if noise.gamma != 0.0 {
                    return Err(Error::config("noise.gamma", "already derived from system.physical.t2"));
                }
                noise.gamma = NoiseParams::gamma_from_t2(t2);
            }
            if let Some(n) = p.n_th {
                noise.n_th = n;
            }
            if let Some(m) = &self.modulation {
                let (dbd, cpl) = p
                    .delta_bd
                    .zip(p.coupling)
                    .ok_or_else(|| Error::config("system.physical", "modulation needs delta_bd and coupling"))?;
                let sol = bogoliubov(dbd * k, omega_a, cpl * k, g)
                    .map_err(|e| Error::config("system.physical", e.to_string()))?;
                let wrap = |e: Error| Error::config("modulation", e.to_string());
                let root = solve_tat_amplitude(m.m0, m.bracket).map_err(wrap)?;
                let (nu, delta_b) = resonant_configuration(sol.omega_minus, m.m0, m.delta * k).map_err(wrap)?;
                let mp = effective_tat_params(
                    &sol,
                    &ModulationInput {
                        xi_mod: root.xi_mod,
                        nu,
                    },
                    delta_b,
                    &ModulationThresholds::default(),
                )
                .map_err(wrap)?;
                if epsilon.is_some() {
                    return Err(Error::config(
                        "schedule.epsilon",
                        "derived from the modulation section; remove it",
                    ));
                }
                epsilon = Some(mp.epsilon);
                modulation = Some(mp);
                sol.chi
            } else {
                oat.chi
            }
        } else {
            if self.modulation.is_some() {
                return Err(Error::config("modulation", "requires system.physical"));
            }
            match (s.chi, s.amp_factor, s.g_over_r) {
                (Some(c), None, None) => c,
                (None, Some(a), Some(g)) => a * g,
                (None, None, None) => 1.0,
                _ => {
                    return Err(Error::config(
                        "system",
                        "give chi, or amp_factor together with g_over_r",
                    ))
                }
            }
        };
        if !(chi.is_finite() && chi > 0.0) {
            return Err(Error::config("system.chi", format!("must be positive, got {chi}")));
        }
        let rate_unit = self.units.rate_unit(chi, j);
        if s.physical.is_none() {
            noise = noise.scaled(rate_unit);
        }
        Ok(Resolved {
            n_spins,
            chi,
            noise,
            rate_unit,
            epsilon,
            modulation,
        })
    }

    /// Time grid from the `grid` section (χ₀ values unless units are absolute).
    pub fn times(&self, r: &Resolved) -> Result<Vec<f64>> {
        let g = self.grid.as_ref().ok_or_else(|| Error::config("grid", "missing"))?;
        let v = g.values("grid")?;
        if v[0] < 0.0 {
            return Err(Error::config("grid", "times must be non-negative"));
        }
        Ok(match self.units {
            Units::Absolute => v,
            _ => v.into_iter().map(|x| x / (r.j() * r.chi)).collect(),
        })
    }

    /// Sets a dotted parameter (sweep axes).
    pub fn set_param(&mut self, param: &str, value: f64) -> Result<()> {
        let int = |v: f64| -> Result<usize> {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::config(param, format!("needs an integer, got {v}")))
            }
        };
        match param {
            "system.n_spins" => self.system.n_spins = Some(int(value)?),
            "system.chi" => self.system.chi = Some(value),
            "system.amp_factor" => self.system.amp_factor = Some(value),
            "system.g_over_r" => self.system.g_over_r = Some(value),
            "noise.gamma" => self.noise.gamma = value,
            "noise.Gamma" => self.noise.big_gamma = value,
            "noise.n_th" => self.noise.n_th = value,
            "noise.rates" => {
                self.noise.gamma = value;
                self.noise.big_gamma = value;
            }
            "schedule.n_cycles" => sched(&mut self.schedule)?.n_cycles = int(value)?,
            "schedule.kappa0" => sched(&mut self.schedule)?.kappa0 = Some(value),
            "schedule.tau" => sched(&mut self.schedule)?.tau = Some(value),
            "schedule.epsilon" => sched(&mut self.schedule)?.epsilon = Some(value),
            "solver.window" => self.solver.window = Some(int(value)?).filter(|&w| w > 0),
            "grid.stop" => {
                self.grid.as_mut().ok_or_else(|| Error::config("grid", "missing"))?.stop = Some(value);
            }
            _ => return Err(Error::config(param, "not a sweepable parameter")),
        }
        Ok(())
    }
}

fn sched(s: &mut Option<ScheduleSection>) -> Result<&mut ScheduleSection> {
    s.as_mut().ok_or_else(|| Error::config("schedule", "missing"))
}
