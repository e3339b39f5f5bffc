use std::path::Path;

use super::config::{ExperimentConfig, Kind, Method, Metric, Resolved, Units};
use super::optimum::{minimize_trace, oat_optimum, tat_optimum};
use super::table::Table;
use super::validate::{validation_suite, ValidationReport};
use crate::cumulant::{
    closed_form_moments, integrate_cumulant, integrate_hp, squeezing_asymptotic, squeezing_closed_form,
    squeezing_from_moments, VForm,
};
use crate::dynamics::{
    evolve_effective_tat, evolve_oat_master, evolve_tat_sequence, fmt17, EvolutionResult, SolverOptions, TatSchedule,
};
use crate::exec::{map, with_jobs, Execution};
use crate::fit::{fit_scaling, fit_scaling_min};
use crate::normal_modes::bogoliubov;
use crate::numeric::linspace;
use crate::spin_algebra::{css_state, DickeBasis, MomentSet};
use crate::{Error, Result};

const TRACE_HEADER: [&str; 8] = ["t", "chi0", "jz", "jx2", "jy2", "jz2", "cxy", "xi2"];

/// Tables produced by a run (the first is the main output; others carry a file-name
/// suffix) and, for validation runs, the report.
#[derive(Clone, Debug, Default)]
pub struct RunOutput {
    pub tables: Vec<(String, Table)>,
    pub validation: Option<ValidationReport>,
}

impl RunOutput {
    fn single(t: Table) -> Self {
        RunOutput {
            tables: vec![(String::new(), t)],
            validation: None,
        }
    }

    /// Writes every table next to `path` (suffixes inserted before the extension).
    pub fn write_files(&self, path: &Path) -> Result<Vec<std::path::PathBuf>> {
        let mut written = Vec::new();
        for (suffix, t) in &self.tables {
            let p = if suffix.is_empty() {
                path.to_path_buf()
            } else {
                let stem = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                let ext = path
                    .extension()
                    .map(|e| format!(".{}", e.to_string_lossy()))
                    .unwrap_or_default();
                path.with_file_name(format!("{stem}{suffix}{ext}"))
            };
            t.write_file(&p)?;
            written.push(p);
        }
        Ok(written)
    }
}

/// Runs an experiment. `jobs` bounds the sweep worker pool.
pub fn run(cfg: &ExperimentConfig, jobs: Option<usize>) -> Result<RunOutput> {
    let kind = cfg.kind.ok_or_else(|| Error::config("kind", "missing"))?;
    let mut out = match kind {
        Kind::NormalModes => RunOutput::single(normal_modes_table(cfg)?),
        Kind::Oat | Kind::Cumulant => RunOutput::single(oat_table(cfg, kind)?),
        Kind::Tat => RunOutput::single(tat_table(cfg)?),
        Kind::Sweep => with_jobs(jobs, || sweep(cfg))?,
        Kind::Fit => RunOutput::single(fit_table(cfg)?),
        Kind::Validate => {
            let report = validation_suite(&cfg.validate.clone().unwrap_or_default());
            let mut t = report.table();
            t.metadata = base_metadata(cfg, kind);
            RunOutput {
                tables: vec![(String::new(), t)],
                validation: Some(report),
            }
        }
    };
    if !matches!(kind, Kind::Validate) {
        for (_, t) in &mut out.tables {
            let mut meta = base_metadata(cfg, kind);
            meta.append(&mut t.metadata);
            t.metadata = meta;
        }
    }
    Ok(out)
}

fn base_metadata(cfg: &ExperimentConfig, kind: Kind) -> Vec<String> {
    vec![
        format!("nvsqueeze-core {} kind={}", env!("CARGO_PKG_VERSION"), kind.name()),
        format!("config_sha256={}", cfg.hash()),
        format!("units={} ({})", cfg.units.tag(), cfg.time_unit_doc()),
    ]
}

fn system_metadata(cfg: &ExperimentConfig, r: &Resolved, opts: Option<&SolverOptions>) -> Result<Vec<String>> {
    let mut m = vec![format!(
        "N={} J={} chi={} gamma={} Gamma={} n_th={} (physical rates)",
        r.n_spins,
        fmt17(r.j()),
        fmt17(r.chi),
        fmt17(r.noise.gamma),
        fmt17(r.noise.big_gamma),
        fmt17(r.noise.n_th)
    )];
    m.push(format!("unit_sentinel={}", fmt17(unit_sentinel(cfg, r)?)));
    if let Some(o) = opts {
        m.push(format!(
            "solver rtol={} atol={} positivity={:?}",
            o.tol.rtol, o.tol.atol, o.positivity
        ));
    }
    Ok(m)
}

/// ξ² of the Holstein–Primakoff solution at the end of the grid, evaluated in physical
/// units and again in χJ-normalized units; both must agree.
fn unit_sentinel(cfg: &ExperimentConfig, r: &Resolved) -> Result<f64> {
    let j = r.j();
    let chi0 = match (&cfg.grid, cfg.units) {
        (Some(g), Units::Absolute) => g.values("grid")?.last().copied().unwrap_or(1.0) * j * r.chi,
        (Some(g), _) => g.values("grid")?.last().copied().unwrap_or(1.0),
        (None, _) => 1.0,
    };
    let a = squeezing_from_moments(j, r.chi, &r.noise, chi0 / (j * r.chi))?;
    let b = squeezing_from_moments(j, 1.0 / j, &r.noise.scaled(1.0 / (r.chi * j)), chi0)?;
    if (a - b).abs() > 1e-8 * a.abs().max(1.0) {
        return Err(Error::config("units", format!("unit sentinel mismatch: {a} vs {b}")));
    }
    Ok(a)
}

fn trace_row(res: &EvolutionResult, i: usize) -> Vec<f64> {
    let m = &res.moment_traces[i];
    let t = res.times[i];
    vec![
        t,
        res.j_total * res.chi * t,
        m.jz_mean,
        m.jx2,
        m.jy2,
        m.jz2,
        m.cxy,
        res.squeezing_trace[i],
    ]
}

fn from_moments(r: &Resolved, times: &[f64], moments: Vec<MomentSet>) -> EvolutionResult {
    let mut e = EvolutionResult {
        j_total: r.j(),
        chi: r.chi,
        ..Default::default()
    };
    for (t, m) in times.iter().zip(moments) {
        e.times.push(*t);
        e.moment_traces.push(m);
        e.squeezing_trace
            .push(crate::spin_algebra::squeezing_wineland(&m, r.j()).unwrap_or(f64::NAN));
    }
    e
}

/// ξ² and moments of one method on a time grid.
fn method_trace(r: &Resolved, method: Method, times: &[f64], opts: &SolverOptions) -> Result<EvolutionResult> {
    let j = r.j();
    match method {
        Method::Exact => {
            let basis = DickeBasis::new(r.n_spins)?;
            evolve_oat_master(&css_state(&basis), r.chi, &r.noise, times, opts)
        }
        Method::Cumulant => Ok(from_moments(
            r,
            times,
            integrate_cumulant(j, r.chi, &r.noise, times, opts.tol)?,
        )),
        Method::Hp => Ok(from_moments(
            r,
            times,
            integrate_hp(j, r.chi, &r.noise, times, opts.tol)?,
        )),
        Method::ClosedForm | Method::Asymptotic => {
            let moments = times
                .iter()
                .map(|&t| closed_form_moments(j, r.chi, &r.noise, t))
                .collect::<Result<Vec<_>>>()?;
            let mut e = from_moments(r, times, moments);
            for (x, &t) in e.squeezing_trace.iter_mut().zip(times) {
                let v = if method == Method::ClosedForm {
                    squeezing_closed_form(j, r.chi, &r.noise, t, VForm::Exact)
                } else {
                    squeezing_asymptotic(j, r.chi, &r.noise, t)
                };
                *x = v.unwrap_or(f64::NAN);
            }
            Ok(e)
        }
    }
}

fn methods(cfg: &ExperimentConfig, kind: Kind) -> Vec<Method> {
    cfg.methods.clone().unwrap_or_else(|| match kind {
        Kind::Cumulant => vec![Method::Cumulant],
        _ => vec![Method::Exact],
    })
}

fn oat_table(cfg: &ExperimentConfig, kind: Kind) -> Result<Table> {
    let r = cfg.resolve()?;
    let opts = cfg.solver.options()?;
    let times = cfg.times(&r)?;
    let methods = methods(cfg, kind);
    let multi = methods.len() > 1;
    let mut header: Vec<&str> = TRACE_HEADER.to_vec();
    if multi {
        header.push("method");
    }
    let mut t = Table::new(&header);
    t.metadata = system_metadata(cfg, &r, Some(&opts))?;
    for &m in &methods {
        let res = method_trace(&r, m, &times, &opts)?;
        if m == Method::Exact {
            let d = &res.diagnostics;
            t.metadata.push(format!(
                "exact: representation={} approximate={} max_trace_error={:.3e} max_hermiticity_error={:.3e} min_eigenvalue={:.3e} max_leak={:.3e}",
                d.representation, d.approximate, d.max_trace_error, d.max_hermiticity_error, d.min_eigenvalue, d.max_leak
            ));
        }
        for i in 0..res.times.len() {
            let mut row: Vec<String> = trace_row(&res, i).iter().map(|v| fmt17(*v)).collect();
            if multi {
                row.push(m.name().into());
            }
            t.rows.push(row);
        }
    }
    Ok(t)
}

fn schedule(cfg: &ExperimentConfig, r: &Resolved) -> Result<(TatSchedule, usize, bool)> {
    let s = cfg
        .schedule
        .as_ref()
        .ok_or_else(|| Error::config("schedule", "missing"))?;
    let eps = r.epsilon.unwrap_or(-1.0);
    let sched = match (s.kappa0, s.tau) {
        (Some(k), None) => TatSchedule::from_kappa(k, s.n_cycles, eps, r.chi),
        (None, Some(tau)) => TatSchedule::new(tau / r.rate_unit, s.n_cycles, eps),
        _ => return Err(Error::config("schedule", "give exactly one of kappa0 and tau")),
    }
    .map_err(|e| Error::config("schedule", e.to_string()))?;
    Ok((sched, s.substeps, s.effective))
}

fn tat_table(cfg: &ExperimentConfig) -> Result<Table> {
    let r = cfg.resolve()?;
    let opts = cfg.solver.options()?;
    let (sched, substeps, effective) = schedule(cfg, &r)?;
    let css = css_state(&DickeBasis::new(r.n_spins)?);
    let res = evolve_tat_sequence(&css, r.chi, &sched, &r.noise, substeps, &opts)?;
    let kappa = res.kappa.clone().unwrap_or_default();
    let mut header: Vec<&str> = TRACE_HEADER.to_vec();
    header.push("kappa0");
    if effective {
        header.push("method");
    }
    let mut t = Table::new(&header);
    t.metadata = system_metadata(cfg, &r, Some(&opts))?;
    t.metadata.push(format!(
        "schedule tau1={} tau2={} n_cycles={} epsilon={} kappa0={}",
        fmt17(sched.tau1),
        fmt17(sched.tau2),
        sched.n_cycles,
        fmt17(sched.epsilon),
        fmt17(sched.kappa0(r.chi))
    ));
    if let Some(m) = &r.modulation {
        t.metadata.push(format!(
            "modulation m0={} xi={} nu={} delta={} epsilon={} sideband_ok={} dispersive_ok={}",
            m.m0,
            fmt17(m.xi_mod),
            fmt17(m.nu),
            fmt17(m.delta),
            fmt17(m.epsilon),
            m.sideband_regime_ok,
            m.dispersive_regime_ok
        ));
    }
    let d = &res.diagnostics;
    t.metadata.push(format!(
        "representation={} approximate={} max_trace_error={:.3e} max_hermiticity_error={:.3e} max_leak={:.3e}",
        d.representation, d.approximate, d.max_trace_error, d.max_hermiticity_error, d.max_leak
    ));
    let push = |t: &mut Table, res: &EvolutionResult, i: usize, times: &[f64], method: &str| {
        let mut row: Vec<String> = trace_row(res, i).iter().map(|v| fmt17(*v)).collect();
        row[0] = fmt17(times[i]);
        row[1] = fmt17(res.j_total * r.chi * times[i]);
        row.push(fmt17(kappa[i]));
        if effective {
            row.push(method.into());
        }
        t.rows.push(row);
    };
    for i in 0..res.times.len() {
        push(&mut t, &res, i, &res.times, "trotterized");
    }
    if effective {
        let eff = evolve_effective_tat(&css, &kappa)?;
        for i in 0..eff.times.len() {
            push(&mut t, &eff, i, &res.times, "effective");
        }
    }
    Ok(t)
}

fn normal_modes_table(cfg: &ExperimentConfig) -> Result<Table> {
    let nm = cfg
        .normal_modes
        .as_ref()
        .ok_or_else(|| Error::config("normal_modes", "missing"))?;
    let d = nm.delta_bd.values("normal_modes.delta_bd")?;
    let g = nm.coupling.values("normal_modes.coupling")?;
    let mut t = Table::new(&[
        "delta_bd_over_omega_a",
        "coupling_over_omega_a",
        "lambda_plus",
        "lambda_minus",
        "eta_plus",
        "eta_minus",
        "omega_minus",
        "omega_plus",
        "error",
    ]);
    t.metadata
        .push(format!("omega_a={} g={}", fmt17(nm.omega_a), fmt17(nm.g)));
    for &x in &d {
        for &y in &g {
            let mut row = vec![fmt17(x), fmt17(y)];
            match bogoliubov(x * nm.omega_a, nm.omega_a, y * nm.omega_a, nm.g) {
                Ok(s) => {
                    for v in [
                        s.lambda_plus,
                        s.lambda_minus,
                        s.eta_plus,
                        s.eta_minus,
                        s.omega_minus,
                        s.omega_plus,
                    ] {
                        row.push(fmt17(v));
                    }
                    row.push(String::new());
                }
                Err(e) => {
                    row.extend(std::iter::repeat_n(String::new(), 6));
                    row.push(e.to_string());
                }
            }
            t.rows.push(row);
        }
    }
    Ok(t)
}

/// Evaluates one sweep point: an optimum (ξ², location) or a full trace table.
enum PointResult {
    Optimum(f64, f64),
    Trace(Table),
}

fn optimum_at(cfg: &ExperimentConfig, base: Kind) -> Result<(f64, f64)> {
    let r = cfg.resolve()?;
    let opts = cfg.solver.options()?;
    let points = cfg.solver.search_points;
    match base {
        Kind::Oat | Kind::Cumulant => {
            let grid = cfg.grid.as_ref().ok_or_else(|| Error::config("grid", "missing"))?;
            let stop = *grid.values("grid")?.last().unwrap();
            let chi0_max = if cfg.units == Units::Absolute {
                stop * r.j() * r.chi
            } else {
                stop
            };
            let method = methods(cfg, base)[0];
            if method == Method::Exact {
                let o = oat_optimum(r.n_spins, r.chi, &r.noise, chi0_max, points, &opts)?;
                return Ok((o.xi2, o.at));
            }
            let scale = r.j() * r.chi;
            let (t, xi2, _) = minimize_trace(
                |ts| Ok(method_trace(&r, method, ts, &opts)?.squeezing_trace),
                chi0_max / scale,
                points,
            )?;
            Ok((xi2, t * scale))
        }
        Kind::Tat => {
            let s = cfg
                .schedule
                .as_ref()
                .ok_or_else(|| Error::config("schedule", "missing"))?;
            let grid = match (&s.kappa_grid, s.kappa0) {
                (Some(g), _) => g.values("schedule.kappa_grid")?,
                (None, Some(k)) => linspace(k / 24.0, k, 24),
                (None, None) => return Err(Error::config("schedule", "optimum search needs kappa0 or kappa_grid")),
            };
            let o = tat_optimum(
                r.n_spins,
                r.chi,
                s.n_cycles,
                r.epsilon.unwrap_or(-1.0),
                &r.noise,
                &grid,
                &opts,
            )?;
            Ok((o.xi2, o.at))
        }
        other => Err(Error::config("sweep.base", format!("cannot sweep `{}`", other.name()))),
    }
}

fn sweep(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let sw = cfg.sweep.as_ref().ok_or_else(|| Error::config("sweep", "missing"))?;
    if sw.axes.is_empty() || sw.axes.len() > 2 {
        return Err(Error::config("sweep.axes", "need one or two axes"));
    }
    if matches!(sw.base, Kind::Sweep | Kind::Fit | Kind::Validate | Kind::NormalModes) {
        return Err(Error::config("sweep.base", "must be oat, tat or cumulant"));
    }
    let axis_values: Vec<Vec<Vec<(String, f64)>>> = sw
        .axes
        .iter()
        .enumerate()
        .map(|(i, a)| a.expand(&format!("sweep.axes[{i}]")))
        .collect::<Result<_>>()?;
    let mut points: Vec<Vec<(String, f64)>> = axis_values[0].clone();
    if let Some(second) = axis_values.get(1) {
        points = points
            .into_iter()
            .flat_map(|p| second.iter().map(move |v| [p.clone(), v.clone()].concat()))
            .collect();
    }
    // Validate every point's configuration up front; config errors abort the sweep.
    let mut configs = Vec::with_capacity(points.len());
    for p in &points {
        let mut c = cfg.clone();
        c.kind = Some(sw.base);
        c.sweep = None;
        for (param, v) in p {
            c.set_param(param, *v)?;
        }
        configs.push(c);
    }
    let results: Vec<Result<PointResult>> = map(Execution::Parallel, &configs, |_, c| match sw.metric {
        Metric::Optimum => optimum_at(c, sw.base).map(|(x, a)| PointResult::Optimum(x, a)),
        Metric::Trace => match sw.base {
            Kind::Tat => tat_table(c),
            b => oat_table(c, b),
        }
        .map(PointResult::Trace),
    });

    let names: Vec<&str> = points[0].iter().map(|(n, _)| n.as_str()).collect();
    let location = if sw.base == Kind::Tat { "kappa0_opt" } else { "chi0_opt" };
    let mut table = match sw.metric {
        Metric::Optimum => Table::new(&[names.clone(), vec!["xi2_opt", location, "error"]].concat()),
        Metric::Trace => Table::default(),
    };
    table.metadata.push(format!(
        "sweep base={} metric={:?} points={}",
        sw.base.name(),
        sw.metric,
        points.len()
    ));
    let mut fit_data: Vec<(Vec<f64>, f64)> = Vec::new();
    for (p, res) in points.iter().zip(results) {
        let mut row: Vec<String> = p.iter().map(|(_, v)| fmt17(*v)).collect();
        match (sw.metric, res) {
            (_, Err(e)) => {
                let width = if table.header.is_empty() {
                    names.len() + 2
                } else {
                    table.header.len()
                };
                row.resize(width - 1, String::new());
                row.push(e.to_string());
                table.rows.push(row);
            }
            (_, Ok(PointResult::Optimum(x, a))) => {
                fit_data.push((p.iter().map(|(_, v)| *v).collect(), x));
                row.extend([fmt17(x), fmt17(a), String::new()]);
                table.rows.push(row);
            }
            (_, Ok(PointResult::Trace(t))) => {
                if table.header.is_empty() {
                    table.header = [
                        names.iter().map(|s| s.to_string()).collect(),
                        t.header.clone(),
                        vec!["error".into()],
                    ]
                    .concat();
                }
                for r in t.rows {
                    let mut full = row.clone();
                    full.extend(r);
                    full.push(String::new());
                    table.rows.push(full);
                }
            }
        }
    }
    if table.header.is_empty() {
        table.header = [names.iter().map(|s| s.to_string()).collect(), vec!["error".to_string()]].concat();
    }
    // Error rows written before the header was known have the right width only for
    // optimum sweeps; pad trace-sweep error rows now.
    let width = table.header.len();
    for r in &mut table.rows {
        if r.len() < width {
            let err = r.pop().unwrap_or_default();
            r.resize(width - 1, String::new());
            r.push(err);
        }
    }
    let mut out = RunOutput::single(table);
    if let (Some(axis), Metric::Optimum) = (&sw.fit_axis, sw.metric) {
        let mut offset = 0;
        let mut fit_cols = Vec::new();
        for a in &sw.axes {
            let width = 1 + a.linked.len();
            if a.param == *axis {
                fit_cols = (offset..offset + width).collect();
            }
            offset += width;
        }
        out.tables
            .push(("_fit".into(), fit_by_axis(&names, axis, &fit_cols, &fit_data)?));
    }
    Ok(out)
}

/// Fits ξ²_opt against the `axis` column separately for every combination of the
/// remaining columns. `fit_cols` are the columns owned by the fit axis (its linked
/// parameters move with it and are not grouping keys).
fn fit_by_axis(names: &[&str], axis: &str, fit_cols: &[usize], data: &[(Vec<f64>, f64)]) -> Result<Table> {
    let ia = names
        .iter()
        .position(|n| *n == axis)
        .ok_or_else(|| Error::config("sweep.fit_axis", "not a sweep axis"))?;
    let keys: Vec<usize> = (0..names.len()).filter(|i| !fit_cols.contains(i)).collect();
    let mut header: Vec<&str> = keys.iter().map(|&i| names[i]).collect();
    header.extend(["exponent", "stderr", "intercept", "points", "error"]);
    let mut t = Table::new(&header);
    let mut groups: Vec<Vec<f64>> = Vec::new();
    for (p, _) in data {
        let g: Vec<f64> = keys.iter().map(|&i| p[i]).collect();
        if !groups.contains(&g) {
            groups.push(g);
        }
    }
    for g in groups {
        let (x, y): (Vec<f64>, Vec<f64>) = data
            .iter()
            .filter(|(p, _)| keys.iter().zip(&g).all(|(&i, v)| p[i] == *v))
            .map(|(p, v)| (p[ia], *v))
            .unzip();
        let mut row: Vec<String> = g.iter().map(|v| fmt17(*v)).collect();
        match fit_scaling_min(&x, &y, 4) {
            Ok(f) => row.extend([
                fmt17(f.exponent),
                fmt17(f.stderr),
                fmt17(f.intercept),
                f.points.to_string(),
                String::new(),
            ]),
            Err(e) => row.extend([
                String::new(),
                String::new(),
                String::new(),
                x.len().to_string(),
                e.to_string(),
            ]),
        }
        t.rows.push(row);
    }
    Ok(t)
}

fn fit_table(cfg: &ExperimentConfig) -> Result<Table> {
    let f = cfg.fit.as_ref().ok_or_else(|| Error::config("fit", "missing"))?;
    let input = Table::read(Path::new(&f.input))?;
    let (ix, iy) = (input.column(&f.x)?, input.column(&f.y)?);
    let ie = input.column("error").ok();
    let mut x = Vec::new();
    let mut y = Vec::new();
    for r in &input.rows {
        if ie.is_some_and(|i| !r[i].is_empty()) {
            continue;
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::config(&f.input, format!("not a number: `{s}`")))
        };
        x.push(parse(&r[ix])?);
        y.push(parse(&r[iy])?);
    }
    let fit = fit_scaling(&x, &y)?;
    let mut t = Table::new(&["exponent", "stderr", "intercept", "points"]);
    t.metadata.push(format!("fit input={} x={} y={}", f.input, f.x, f.y));
    t.rows.push(vec![
        fmt17(fit.exponent),
        fmt17(fit.stderr),
        fmt17(fit.intercept),
        fit.points.to_string(),
    ]);
    Ok(t)
}
