//! The `solve`, `optimize`, `sweep` and `sequence` subcommands.

use fin_core::functionals::{flux_report, generalized_supremum, surface, volume};
use fin_core::optimizer::{
    excess_fraction, kkt_report, optimize, spread_ratio, sweep_m, verify_bang_structure, KktReport,
    OptimConfig, OptimResult, StopReason, StructureReport,
};
use fin_core::sequences::{build_bang_b, OscillatingFamily};
use fin_core::{Convection, Execution, FinError, Grid, RadiusProfile};
use serde::Serialize;

use crate::config::{Experiment, ProfileSpec};
use crate::error::{CliError, CliResult};
use crate::output::{read_columns, Sink, Table};

/// Invariant violations found while turning the config into model objects.
fn rejected(what: &str, e: FinError) -> CliError {
    CliError::Config(format!("{what}: {e}"))
}

/// Extra cells for an oscillating profile: `16m` on its support plus `n_cells` beyond.
fn family_grid(family: &OscillatingFamily, exp: &Experiment) -> CliResult<Grid> {
    let fine = 16 * family.index as usize;
    family
        .resolving_grid(fine + exp.n_cells)
        .map_err(|e| rejected("profile", e))
}

pub fn build_profile(exp: &Experiment) -> CliResult<(Grid, RadiusProfile)> {
    let uniform = || Grid::uniform(exp.length, exp.n_cells).map_err(|e| rejected("numerics.n_cells", e));
    let built = match &exp.profile {
        ProfileSpec::Constant => {
            let g = uniform()?;
            let a = RadiusProfile::constant(exp.a0, &g);
            (g, a)
        }
        ProfileSpec::Cone { tip } => {
            let g = uniform()?;
            let (a0, len) = (exp.a0, exp.length);
            let a = RadiusProfile::from_fn(a0, &g, |x| a0 + (tip - a0) * x / len);
            (g, a)
        }
        ProfileSpec::Oscillating { m, surface, unit } => {
            let family = OscillatingFamily::new(*surface, *m, exp.a0, exp.length, *unit)
                .map_err(|e| rejected("profile", e))?;
            let g = family_grid(&family, exp)?;
            let a = family.radius_profile(&g);
            (g, a)
        }
        ProfileSpec::Tabulated { x, a } => {
            let g = uniform()?;
            let samples = Grid::from_nodes(x.clone()).map_err(|e| rejected("profile.x", e))?;
            let radius = RadiusProfile::from_fn(exp.a0, &g, |t| samples.interpolate(a, t.clamp(x[0], x[x.len() - 1])));
            (g, radius)
        }
        ProfileSpec::Csv { path } => {
            let cols = read_columns(path, &["x", "a"])?;
            let g = Grid::from_nodes(cols[0].clone()).map_err(|e| rejected("profile.path", e))?;
            if (g.length() - exp.length).abs() > 1e-12 * exp.length {
                return Err(CliError::Config(format!(
                    "{}: profile length {} m differs from geometry.length {} m",
                    path.display(),
                    g.length(),
                    exp.length
                )));
            }
            let a = RadiusProfile::new(cols[1].clone(), exp.a0, &g);
            (g, a)
        }
    };
    let (g, a) = built;
    Ok((g, a.map_err(|e| rejected("profile", e))?))
}

#[derive(Debug, Serialize)]
struct FluxDoc {
    f_boundary_w: f64,
    f_integral_w: f64,
    relative_gap: f64,
    volume_m3: f64,
    surface_m2: f64,
    n_cells: usize,
    /// Supremum over designs with the same surface, when `β` peaks at the inlet.
    supremum_w: Option<f64>,
    supremum_shortfall: Option<f64>,
}

pub fn solve(exp: &Experiment, sink: &mut Sink) -> CliResult<()> {
    let (g, a) = build_profile(exp)?;
    let b = a.surface_density(&g)?;
    let (report, t) = flux_report(&a, &b, &exp.params, &g)?;
    let surf = surface(&a, &g)?;
    let supremum = match generalized_supremum(exp.a0, surf, &exp.params, &g) {
        Ok(s) => Some(s.value),
        Err(FinError::Hypothesis(_)) => None,
        Err(e) => return Err(e.into()),
    };

    let mut temperature = Table::new(&[("x", "m"), ("T", "°C")]);
    for (x, v) in g.nodes().iter().zip(t.values()) {
        temperature.push(vec![*x, *v]);
    }
    sink.table("temperature", &temperature)?;

    // b is the density of the cell to the right of each node; the tip repeats the last cell
    let dens = b.density();
    let mut profile = Table::new(&[("x", "m"), ("a", "m"), ("b", "m")]);
    for (i, (x, r)) in g.nodes().iter().zip(a.values()).enumerate() {
        profile.push(vec![*x, *r, dens[i.min(dens.len() - 1)]]);
    }
    sink.table("profile", &profile)?;

    sink.report(
        "flux_report.json",
        &FluxDoc {
            f_boundary_w: report.boundary,
            f_integral_w: report.integral,
            relative_gap: report.relative_gap,
            volume_m3: volume(&a, &g)?,
            surface_m2: surf,
            n_cells: g.n_cells(),
            supremum_w: supremum,
            supremum_shortfall: supremum.map(|s| (s - report.boundary) / s),
        },
    )
}

fn optim_config(exp: &Experiment, cap: Option<f64>) -> CliResult<OptimConfig> {
    let c = exp.surface_constraint()?;
    let grid = Grid::uniform(exp.length, exp.n_cells).map_err(|e| rejected("numerics.n_cells", e))?;
    let mut cfg = OptimConfig::new(exp.a0, c.value, cap, grid, exp.params.clone());
    cfg.tolerance = exp.tolerance;
    cfg.max_iters = exp.max_iters;
    cfg.validate().map_err(|e| rejected("constraint", e))?;
    Ok(cfg)
}

#[derive(Debug, Serialize)]
struct RunDoc {
    cap_m: Option<f64>,
    stop: StopReason,
    iterations: usize,
    residual: f64,
    objective_w: f64,
    surface_used_m2: f64,
    /// Share of the excess surface in the first 5% of the fin.
    inlet_fraction: f64,
    /// Share of the excess surface within 5% of the length around a step in `h`.
    step_fraction: Option<f64>,
    spread_ratio: Option<f64>,
    structure: Option<StructureReport>,
    kkt: KktReport,
}

#[derive(Debug, Serialize)]
struct StructureDoc {
    budget_m2: f64,
    supremum_w: Option<f64>,
    monotone: Option<bool>,
    runs: Vec<RunDoc>,
}

fn describe_run(res: &OptimResult, cfg: &OptimConfig) -> CliResult<RunDoc> {
    let g = &cfg.grid;
    let step_fraction = match cfg.params.convection {
        Convection::Step { at, .. } => {
            let half = 0.05 * g.length();
            Some(excess_fraction(&res.b_opt, g, at - half, at + half))
        }
        _ => None,
    };
    let structure = match (cfg.cap, cfg.params.constant_beta()) {
        (Some(_), Some(_)) => Some(verify_bang_structure(&res.b_opt, cfg)?),
        _ => None,
    };
    Ok(RunDoc {
        cap_m: cfg.cap,
        stop: res.stop,
        iterations: res.iterations,
        residual: res.residual,
        objective_w: res.objective,
        surface_used_m2: res.b_opt.total(g),
        inlet_fraction: excess_fraction(&res.b_opt, g, 0.0, 0.05 * g.length()),
        step_fraction,
        spread_ratio: spread_ratio(&res.b_opt),
        structure,
        kkt: kkt_report(res, cfg),
    })
}

fn write_runs(
    runs: &[(OptimConfig, OptimResult)],
    supremum: Option<f64>,
    monotone: Option<bool>,
    sink: &mut Sink,
) -> CliResult<()> {
    let mut b_opt = Table::new(&[("M", "m"), ("x", "m"), ("b", "m")]);
    let mut a_opt = Table::new(&[("M", "m"), ("x", "m"), ("a", "m")]);
    let mut t_opt = Table::new(&[("M", "m"), ("x", "m"), ("T", "°C")]);
    let mut trace = Table::new(&[("M", "m"), ("iteration", "1"), ("F", "W")]);
    let mut docs = Vec::with_capacity(runs.len());
    for (cfg, res) in runs {
        let m = cfg.cap.unwrap_or(f64::INFINITY);
        let g = &cfg.grid;
        for (c, v) in res.b_opt.density().iter().enumerate() {
            b_opt.push(vec![m, g.midpoint(c), *v]);
        }
        for (x, v) in res.a_opt_grid.nodes().iter().zip(res.a_opt.values()) {
            a_opt.push(vec![m, *x, *v]);
        }
        for (x, v) in g.nodes().iter().zip(res.temperature.values()) {
            t_opt.push(vec![m, *x, *v]);
        }
        for (k, f) in res.trace.iter().enumerate() {
            trace.push(vec![m, k as f64, *f]);
        }
        docs.push(describe_run(res, cfg)?);
    }
    sink.table("b_opt", &b_opt)?;
    sink.table("a_opt", &a_opt)?;
    sink.table("T_opt", &t_opt)?;
    sink.table("objective_trace", &trace)?;
    let budget = runs.first().map_or(0.0, |(c, _)| c.budget);
    sink.report(
        "structure_report.json",
        &StructureDoc {
            budget_m2: budget,
            supremum_w: supremum,
            monotone,
            runs: docs,
        },
    )
}

fn supremum_for(cfg: &OptimConfig) -> CliResult<Option<f64>> {
    match generalized_supremum(cfg.a0, cfg.budget, &cfg.params, &cfg.grid) {
        Ok(s) => Ok(Some(s.value)),
        Err(FinError::Hypothesis(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

pub fn run_optimize(exp: &Experiment, sink: &mut Sink) -> CliResult<()> {
    let cfg = optim_config(exp, exp.single_cap()?)?;
    let res = optimize(&cfg)?;
    let supremum = supremum_for(&cfg)?;
    write_runs(&[(cfg, res)], supremum, None, sink)
}

pub fn run_sweep(exp: &Experiment, sink: &mut Sink) -> CliResult<()> {
    let c = exp.surface_constraint()?;
    if c.caps.is_empty() {
        return Err(CliError::Config("sweep needs `constraint.caps`".into()));
    }
    let base = optim_config(exp, None)?;
    for &m in &c.caps {
        base.with_cap(Some(m)).validate().map_err(|e| rejected("constraint.caps", e))?;
    }
    let report = sweep_m(&base, &c.caps, Execution::default())?;
    let supremum = supremum_for(&base)?;
    let runs: Vec<(OptimConfig, OptimResult)> = c
        .caps
        .iter()
        .map(|&m| base.with_cap(Some(m)))
        .zip(report.results)
        .collect();
    write_runs(&runs, supremum, Some(report.monotone), sink)
}

#[derive(Debug, Serialize)]
struct MemberDoc {
    m: u32,
    support_m: f64,
    period_m: f64,
    plateau_m: f64,
    peak_excess_m: f64,
    surface_m2: f64,
    volume_m3: f64,
    n_cells: usize,
}

#[derive(Debug, Serialize)]
struct BangDoc {
    cap_m: f64,
    switch_m: f64,
}

#[derive(Debug, Serialize)]
struct SequenceDoc {
    budget_m2: f64,
    members: Vec<MemberDoc>,
    bang: Vec<BangDoc>,
}

pub fn run_sequence(exp: &Experiment, sink: &mut Sink) -> CliResult<()> {
    let budget = exp.surface_budget();
    let mut profiles = Table::new(&[("m", "1"), ("x", "m"), ("a", "m"), ("b", "m")]);
    let mut members = Vec::new();
    for &m in &exp.indices {
        let family = OscillatingFamily::new(budget, m, exp.a0, exp.length, exp.unit)
            .map_err(|e| rejected("sequence.indices", e))?;
        let g = family_grid(&family, exp)?;
        let a = family.radius_profile(&g).map_err(|e| rejected("sequence", e))?;
        let b = family.surface_measure(&g)?;
        let dens = b.density();
        for (i, (x, r)) in g.nodes().iter().zip(a.values()).enumerate() {
            profiles.push(vec![m as f64, *x, *r, dens[i.min(dens.len() - 1)]]);
        }
        members.push(MemberDoc {
            m,
            support_m: family.support(),
            period_m: family.period(),
            plateau_m: family.plateau(),
            peak_excess_m: family.peak_excess(),
            surface_m2: surface(&a, &g)?,
            volume_m3: volume(&a, &g)?,
            n_cells: g.n_cells(),
        });
    }
    sink.table("sequence_profiles", &profiles)?;

    let caps: Vec<f64> = match &exp.constraint {
        Some(c) => c.cap.into_iter().chain(c.caps.iter().copied()).collect(),
        None => Vec::new(),
    };
    let mut bang_table = Table::new(&[("M", "m"), ("x", "m"), ("b", "m")]);
    let mut bang = Vec::new();
    let g = Grid::uniform(exp.length, exp.n_cells).map_err(|e| rejected("numerics.n_cells", e))?;
    for cap in caps {
        let built = build_bang_b(cap, budget, exp.a0, &g).map_err(|e| rejected("constraint.caps", e))?;
        for (c, v) in built.measure.density().iter().enumerate() {
            bang_table.push(vec![cap, g.midpoint(c), *v]);
        }
        bang.push(BangDoc {
            cap_m: cap,
            switch_m: built.switch,
        });
    }
    if !bang.is_empty() {
        sink.table("bang_b", &bang_table)?;
    }
    sink.report(
        "sequence_report.json",
        &SequenceDoc {
            budget_m2: budget,
            members,
            bang,
        },
    )
}
