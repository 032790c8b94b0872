//! Projected-gradient ascent of the relaxed flux over cellwise surface densities.
//!
//! The design is the density `b` with `a0 ≤ b ≤ M` and `Σ h_c b_c ≤ S0`; the
//! elliptic coefficient stays at `a ≡ a0`. The radius is rebuilt afterwards by
//! [`reconstruct_radius`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, FinError, Result};
use crate::exec::Execution;
use crate::functionals::surface_supremum;
use crate::grid::Grid;
use crate::params::PhysicalParams;
use crate::profile::{RadiusProfile, SurfaceMeasure};
use crate::sequences::{build_bang_b, reconstruct_radius, OscillationSpec};
use crate::solver::{field_from_excess, Operator, TemperatureField};

#[derive(Debug, Clone)]
pub struct OptimConfig {
    pub a0: f64,
    /// Surface budget `S0` (surf-units, `∫b`).
    pub budget: f64,
    /// Pointwise cap `M`; `None` drops the cap.
    pub cap: Option<f64>,
    pub grid: Grid,
    pub params: PhysicalParams,
    pub max_iters: usize,
    /// Stationarity tolerance on the scaled projected-gradient residual.
    pub tolerance: f64,
    /// Sufficient-increase constant of the backtracking line search.
    pub armijo: f64,
    /// Sub-cells per design cell used when rebuilding the radius.
    pub refinement: usize,
}

impl OptimConfig {
    pub fn new(a0: f64, budget: f64, cap: Option<f64>, grid: Grid, params: PhysicalParams) -> Self {
        Self {
            a0,
            budget,
            cap,
            grid,
            params,
            max_iters: 20_000,
            tolerance: 1e-10,
            armijo: 1e-4,
            refinement: 8,
        }
    }

    pub fn with_cap(&self, cap: Option<f64>) -> Self {
        Self {
            cap,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        crate::error::ensure_finite(&[self.a0, self.budget], "optimizer configuration")?;
        self.params.validate()?;
        let length = self.grid.length();
        if self.a0 <= 0.0 {
            return Err(invalid("a0", "must be positive"));
        }
        if self.budget < self.a0 * length {
            return Err(FinError::Infeasible(format!(
                "budget {:e} is below a0·ℓ = {:e}",
                self.budget,
                self.a0 * length
            )));
        }
        if let Some(cap) = self.cap {
            if !(cap > self.a0) {
                return Err(FinError::Infeasible(format!("cap {cap:e} must exceed a0 = {:e}", self.a0)));
            }
            let switch = self.switch_point().unwrap_or(0.0);
            if switch > length {
                return Err(FinError::Infeasible(format!(
                    "switch x_M = {switch:e} lies beyond ℓ = {length:e}"
                )));
            }
        }
        if self.max_iters == 0 || self.refinement == 0 {
            return Err(invalid("max_iters", "iteration and refinement counts must be positive"));
        }
        if !(self.tolerance >= 0.0 && self.armijo > 0.0 && self.armijo < 1.0) {
            return Err(invalid("tolerance", "need tolerance ≥ 0 and 0 < armijo < 1"));
        }
        Ok(())
    }

    /// `x_M = (S0 − a0ℓ)/(M − a0)` for a capped run.
    pub fn switch_point(&self) -> Option<f64> {
        self.cap
            .map(|cap| (self.budget - self.a0 * self.grid.length()) / (cap - self.a0))
    }

    fn upper(&self) -> f64 {
        self.cap.unwrap_or(f64::INFINITY)
    }
}

/// Relaxed flux `F̂(a0, b)` of a cellwise density and its exact gradient.
#[derive(Debug, Clone)]
pub struct DesignObjective {
    grid: Grid,
    params: PhysicalParams,
    conductance: Vec<f64>,
    beta: Vec<f64>,
    tip: f64,
}

/// Objective value, per-cell gradient `∂F/∂b_c` and the state.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub flux: f64,
    pub gradient: Vec<f64>,
    pub excess: Vec<f64>,
}

impl DesignObjective {
    pub fn new(a0: f64, grid: &Grid, params: &PhysicalParams) -> Self {
        let conductance = grid.widths().iter().map(|h| a0 * a0 / h).collect();
        Self {
            grid: grid.clone(),
            params: params.clone(),
            conductance,
            beta: params.beta_cells(grid),
            tip: params.beta_tip() * a0 * a0,
        }
    }

    fn operator(&self, b: &[f64]) -> Operator {
        Operator::from_cells(self.conductance.clone(), &self.beta, b, &self.grid, self.tip)
    }

    pub fn value(&self, b: &[f64]) -> Result<f64> {
        Ok(self.evaluate(b)?.flux)
    }

    pub fn evaluate(&self, b: &[f64]) -> Result<Evaluation> {
        if b.len() != self.grid.n_cells() {
            return Err(FinError::GridMismatch {
                expected: self.grid.n_cells(),
                got: b.len(),
            });
        }
        let op = self.operator(b);
        let dt = self.params.delta_t();
        let excess = op.solve(dt, &vec![0.0; b.len() + 1])?;
        let kpi = self.params.conductivity * PI;
        let flux = kpi * op.inlet_flux(&excess);
        let gradient = (0..b.len())
            .map(|c| {
                if dt == 0.0 {
                    return 0.0;
                }
                let sq = excess[c] * excess[c] + excess[c + 1] * excess[c + 1];
                kpi * self.beta[c] * self.grid.width(c) * sq / (2.0 * dt)
            })
            .collect();
        Ok(Evaluation {
            flux,
            gradient,
            excess,
        })
    }
}

/// Projection onto `{lo ≤ b ≤ hi, Σ w_c b_c ≤ budget}` in the `w`-weighted norm.
///
/// The budget multiplier is found by bisection; the returned point is always
/// feasible.
pub fn project(y: &[f64], lo: f64, hi: f64, widths: &[f64], budget: f64) -> Vec<f64> {
    let clamp = |mu: f64| -> Vec<f64> { y.iter().map(|v| (v - mu).clamp(lo, hi)).collect() };
    let mass = |z: &[f64]| -> f64 { z.iter().zip(widths).map(|(z, w)| z * w).sum() };
    let z = clamp(0.0);
    if mass(&z) <= budget {
        return z;
    }
    let mut l = 0.0;
    let mut u = y.iter().map(|v| v - lo).fold(0.0, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (l + u);
        if mid <= l || mid >= u {
            break;
        }
        if mass(&clamp(mid)) > budget {
            l = mid;
        } else {
            u = mid;
        }
    }
    clamp(u)
}

/// Vertex of the feasible set maximizing `Σ w_c d_c b_c`: cells are filled to
/// `hi` in order of decreasing `d` until the budget runs out.
pub fn greedy_vertex(d: &[f64], lo: f64, hi: f64, widths: &[f64], budget: f64) -> Vec<f64> {
    let mut b = vec![lo; d.len()];
    let mut left = budget - lo * widths.iter().sum::<f64>();
    let mut order: Vec<usize> = (0..d.len()).filter(|&c| d[c] > 0.0).collect();
    order.sort_by(|&i, &j| d[j].total_cmp(&d[i]));
    for c in order {
        if left <= 0.0 {
            break;
        }
        let room = (hi - lo) * widths[c];
        let fill = room.min(left);
        b[c] = lo + fill / widths[c];
        left -= fill;
    }
    b
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activity {
    Lower,
    Free,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    MaxIterations,
    /// Line search could not find an increase above roundoff.
    Stalled,
}

#[derive(Debug, Clone)]
pub struct OptimResult {
    pub b_opt: SurfaceMeasure,
    /// Radius rebuilt on [`OptimResult::a_opt_grid`].
    pub a_opt: RadiusProfile,
    pub a_opt_grid: Grid,
    pub objective: f64,
    pub temperature: TemperatureField,
    /// Right edge of the last cell at the cap, refined by the interface cell.
    pub switch_estimate: Option<f64>,
    pub active_set: Vec<Activity>,
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub stop: StopReason,
    pub residual: f64,
    /// Per-cell gradient density `∂F/∂b_c / h_c` at the final iterate.
    pub gradient_density: Vec<f64>,
}

impl OptimResult {
    pub fn converged(&self) -> bool {
        self.stop == StopReason::Converged
    }
}

pub fn optimize(cfg: &OptimConfig) -> Result<OptimResult> {
    cfg.validate()?;
    let g = &cfg.grid;
    let widths = g.widths();
    let (lo, hi) = (cfg.a0, cfg.upper());
    let objective = DesignObjective::new(cfg.a0, g, &cfg.params);
    let density = |e: &Evaluation| -> Vec<f64> {
        e.gradient.iter().zip(&widths).map(|(d, w)| d / w).collect()
    };
    let residual = |b: &[f64], d: &[f64]| -> f64 {
        let scale = d.iter().copied().fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let s_ref = cfg.a0 / scale;
        let y: Vec<f64> = b.iter().zip(d).map(|(b, d)| b + s_ref * d).collect();
        project(&y, lo, hi, &widths, cfg.budget)
            .iter()
            .zip(b)
            .map(|(p, b)| (p - b).abs())
            .fold(0.0, f64::max)
            / cfg.a0
    };

    let start = cfg.a0 + (cfg.budget - cfg.a0 * g.length()) / g.length();
    let mut b = project(&vec![start; g.n_cells()], lo, hi, &widths, cfg.budget);
    let mut eval = objective.evaluate(&b)?;
    let mut d = density(&eval);
    let mut trace = vec![eval.flux];
    let d_max = d.iter().copied().fold(0.0, f64::max);
    let mut step = if d_max > 0.0 { 1e-3 * cfg.a0 / d_max } else { 1.0 };
    let mut stop = StopReason::MaxIterations;
    let mut res = residual(&b, &d);
    let mut iterations = 0;

    while iterations < cfg.max_iters {
        if res <= cfg.tolerance {
            stop = StopReason::Converged;
            break;
        }
        let mut accepted = None;
        for _ in 0..80 {
            let y: Vec<f64> = b.iter().zip(&d).map(|(b, d)| b + step * d).collect();
            let trial = project(&y, lo, hi, &widths, cfg.budget);
            let predicted: f64 = eval
                .gradient
                .iter()
                .zip(trial.iter().zip(&b))
                .map(|(g, (t, b))| g * (t - b))
                .sum();
            let next = objective.evaluate(&trial)?;
            if next.flux >= eval.flux + cfg.armijo * predicted && next.flux >= eval.flux {
                accepted = Some((trial, next));
                break;
            }
            step *= 0.5;
        }
        let Some((trial, next)) = accepted else {
            stop = StopReason::Stalled;
            break;
        };
        iterations += 1;
        b = trial;
        eval = next;
        d = density(&eval);
        // bang-bang candidate from the current gradient ordering
        let vertex = greedy_vertex(&d, lo, hi, &widths, cfg.budget);
        if vertex != b {
            let at_vertex = objective.evaluate(&vertex)?;
            if at_vertex.flux > eval.flux {
                b = vertex;
                eval = at_vertex;
                d = density(&eval);
            }
        }
        trace.push(eval.flux);
        res = residual(&b, &d);
        step *= 2.0;
    }
    if stop == StopReason::MaxIterations && res <= cfg.tolerance {
        stop = StopReason::Converged;
    }

    let active_set = classify(&b, lo, hi);
    let b_opt = SurfaceMeasure::new(b, Vec::new(), cfg.a0)?;
    let switch_estimate = cfg.cap.map(|cap| measured_switch(&b_opt, g, cap).1);
    let (a_opt_grid, a_opt) = rebuild_radius(&b_opt, g, cfg.a0, cfg.refinement)?;
    Ok(OptimResult {
        b_opt,
        a_opt,
        a_opt_grid,
        objective: eval.flux,
        temperature: field_from_excess(eval.excess, cfg.params.ambient),
        switch_estimate,
        active_set,
        trace,
        iterations,
        stop,
        residual: res,
        gradient_density: d,
    })
}

fn classify(b: &[f64], lo: f64, hi: f64) -> Vec<Activity> {
    b.iter()
        .map(|&v| {
            if v <= lo * (1.0 + 1e-12) {
                Activity::Lower
            } else if v >= hi * (1.0 - 1e-12) {
                Activity::Upper
            } else {
                Activity::Free
            }
        })
        .collect()
}

/// Last cell edge at the cap and the estimate refined by the next cell's fill.
fn measured_switch(b: &SurfaceMeasure, g: &Grid, cap: f64) -> (f64, f64) {
    let dens = b.density();
    let at_cap = |v: f64| v >= cap * (1.0 - 1e-12);
    let edge_cell = dens.iter().rposition(|&v| at_cap(v));
    let edge = edge_cell.map_or(0.0, |c| g.nodes()[c + 1]);
    let next = edge_cell.map_or(0, |c| c + 1);
    let estimate = if next < dens.len() {
        edge + (dens[next] - b.floor()) / (cap - b.floor()) * g.width(next)
    } else {
        edge
    };
    (edge, estimate)
}

/// Subdivides each design cell and rebuilds a radius with oscillations on every
/// run of equal density above the floor.
fn rebuild_radius(b: &SurfaceMeasure, g: &Grid, a0: f64, refinement: usize) -> Result<(Grid, RadiusProfile)> {
    let mut nodes = Vec::with_capacity(g.n_cells() * refinement + 1);
    for c in 0..g.n_cells() {
        let (x, h) = (g.nodes()[c], g.width(c));
        nodes.extend((0..refinement).map(|k| x + h * k as f64 / refinement as f64));
    }
    nodes.push(g.length());
    let fine = Grid::from_nodes(nodes)?;
    let dens: Vec<f64> = b
        .density()
        .iter()
        .flat_map(|&v| std::iter::repeat_n(v, refinement))
        .collect();
    let fine_b = SurfaceMeasure::new(dens, Vec::new(), a0)?;

    let mut specs = Vec::new();
    let coarse = b.density();
    let mut c = 0;
    while c < coarse.len() {
        let v = coarse[c];
        let mut end = c + 1;
        while end < coarse.len() && (coarse[end] - v).abs() <= 1e-12 * v {
            end += 1;
        }
        if v > a0 * (1.0 + 1e-10) {
            let count = ((end - c) * refinement / 8).max(1);
            specs.push(OscillationSpec::new(g.nodes()[c], g.nodes()[end], count)?);
        }
        c = end;
    }
    let profile = reconstruct_radius(&fine_b, &fine, &specs, a0)?;
    Ok((fine, profile))
}

/// Comparison of an optimized density with the bang-bang design of the same cap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub x_m: f64,
    pub switch_edge: f64,
    pub switch_estimate: f64,
    /// `|switch_edge − x_M|` in units of the local cell width.
    pub switch_error_cells: f64,
    pub intermediate_cells: usize,
    pub objective: f64,
    pub bang_objective: f64,
    pub objective_gap: f64,
}

impl StructureReport {
    pub fn is_bang(&self, max_gap: f64) -> bool {
        self.intermediate_cells <= 1 && self.switch_error_cells <= 1.0 && self.objective_gap <= max_gap
    }
}

pub fn verify_bang_structure(b: &SurfaceMeasure, cfg: &OptimConfig) -> Result<StructureReport> {
    let cap = cfg
        .cap
        .ok_or_else(|| invalid("cap", "bang-bang structure needs a finite cap"))?;
    let g = &cfg.grid;
    let bang = build_bang_b(cap, cfg.budget, cfg.a0, g)?;
    let (edge, estimate) = measured_switch(b, g, cap);
    let cell = g.cell_of(bang.switch.min(g.length()));
    let objective = DesignObjective::new(cfg.a0, g, &cfg.params);
    let value = objective.value(b.density())?;
    let bang_value = objective.value(bang.measure.density())?;
    let intermediate = classify(b.density(), cfg.a0, cap)
        .iter()
        .filter(|&&a| a == Activity::Free)
        .count();
    Ok(StructureReport {
        x_m: bang.switch,
        switch_edge: edge,
        switch_estimate: estimate,
        switch_error_cells: (edge - bang.switch).abs() / g.width(cell),
        intermediate_cells: intermediate,
        objective: value,
        bang_objective: bang_value,
        objective_gap: (value - bang_value).abs() / bang_value,
    })
}

/// First-order optimality of a density for the box-and-budget problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    pub multiplier: f64,
    /// Largest violation of the sign conditions, relative to the gradient scale.
    pub violation: f64,
}

pub fn kkt_report(res: &OptimResult, cfg: &OptimConfig) -> KktReport {
    let d = &res.gradient_density;
    let scale = d.iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let labels = &res.active_set;
    let pick = |want: Activity| d.iter().zip(labels).filter(move |(_, &l)| l == want).map(|(v, _)| *v);
    let free: Vec<f64> = pick(Activity::Free).collect();
    let budget_active = res.b_opt.total(&cfg.grid) >= cfg.budget * (1.0 - 1e-9);
    let multiplier = if !budget_active {
        0.0
    } else if !free.is_empty() {
        free.iter().sum::<f64>() / free.len() as f64
    } else {
        let lower_max = pick(Activity::Lower).fold(0.0, f64::max);
        let upper_min = pick(Activity::Upper).fold(f64::INFINITY, f64::min);
        if upper_min.is_finite() {
            0.5 * (lower_max + upper_min)
        } else {
            lower_max
        }
    };
    let violation = d
        .iter()
        .zip(labels)
        .map(|(&v, l)| match l {
            Activity::Upper => (multiplier - v).max(0.0),
            Activity::Lower => (v - multiplier).max(0.0),
            Activity::Free => (v - multiplier).abs(),
        })
        .fold(0.0, f64::max)
        / scale;
    KktReport {
        multiplier,
        violation,
    }
}

/// Fraction of the excess surface `∫(b − a0)` carried by cells with midpoints in `[lo, hi]`.
pub fn excess_fraction(b: &SurfaceMeasure, g: &Grid, lo: f64, hi: f64) -> f64 {
    let excess = b.excess_per_cell(g);
    let total: f64 = excess.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let inside: f64 = excess
        .iter()
        .enumerate()
        .filter(|(c, _)| (lo..=hi).contains(&g.midpoint(*c)))
        .map(|(_, e)| e)
        .sum();
    inside / total
}

/// Peak excess density over the median excess density of the support.
///
/// The support is every cell whose excess density exceeds `1e-6` of the peak.
/// Returns `None` when the support is a single cell.
pub fn spread_ratio(b: &SurfaceMeasure) -> Option<f64> {
    let excess: Vec<f64> = b.density().iter().map(|v| v - b.floor()).collect();
    let peak = excess.iter().copied().fold(0.0, f64::max);
    let mut support: Vec<f64> = excess.into_iter().filter(|&e| e > 1e-6 * peak).collect();
    if support.len() < 2 {
        return None;
    }
    support.sort_by(f64::total_cmp);
    let k = support.len();
    let median = if k % 2 == 1 {
        support[k / 2]
    } else {
        0.5 * (support[k / 2 - 1] + support[k / 2])
    };
    Some(peak / median)
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub caps: Vec<f64>,
    pub results: Vec<OptimResult>,
    pub monotone: bool,
    /// Closed-form supremum when `β` is constant.
    pub supremum: Option<f64>,
}

impl SweepReport {
    /// Largest objective over the closed-form supremum.
    pub fn best_ratio(&self) -> Option<f64> {
        let best = self.results.iter().map(|r| r.objective).fold(f64::NEG_INFINITY, f64::max);
        self.supremum.map(|s| best / s)
    }
}

/// One optimization per cap, dispatched with `exec`.
pub fn sweep_m(cfg: &OptimConfig, caps: &[f64], exec: Execution) -> Result<SweepReport> {
    if caps.is_empty() {
        return Err(invalid("caps", "need at least one cap"));
    }
    if caps.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("caps", "must be strictly increasing"));
    }
    if let Some(bad) = caps.iter().find(|&&m| !(m > cfg.a0)) {
        return Err(FinError::Infeasible(format!("cap {bad:e} must exceed a0 = {:e}", cfg.a0)));
    }
    let configs: Vec<OptimConfig> = caps.iter().map(|&m| cfg.with_cap(Some(m))).collect();
    for c in &configs {
        c.validate()?;
    }
    let results = exec
        .map(&configs, optimize)
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let monotone = results
        .windows(2)
        .all(|w| w[1].objective >= w[0].objective * (1.0 - 1e-12));
    let supremum = match cfg.params.constant_beta() {
        Some(_) => Some(surface_supremum(cfg.a0, cfg.grid.length(), cfg.budget, &cfg.params)?),
        None => None,
    };
    Ok(SweepReport {
        caps: caps.to_vec(),
        results,
        monotone,
        supremum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::{constant_fin_flux, flux_report};
    use proptest::prelude::*;

    const A0: f64 = 1e-3;
    const L: f64 = 0.1;

    fn base(n: usize, cap: Option<f64>) -> OptimConfig {
        let g = Grid::uniform(L, n).unwrap();
        let p = PhysicalParams::uniform(10.0, 10.0, 10.0, 0.0).unwrap();
        OptimConfig::new(A0, 6.0 * A0 * L, cap, g, p)
    }

    #[test]
    fn projection_respects_box_and_budget() {
        let w = vec![0.25; 4];
        let z = project(&[5.0, 0.0, 3.0, 1.0], 1.0, 4.0, &w, 2.0);
        assert!(z.iter().all(|&v| (1.0..=4.0).contains(&v)));
        let mass: f64 = z.iter().map(|v| v * 0.25).sum();
        assert!(mass <= 2.0 && mass > 2.0 - 1e-12);
        assert!(z[0] >= z[2] && z[2] >= z[3]);
        let inside = project(&[1.5, 1.5, 1.5, 1.5], 1.0, 4.0, &w, 2.0);
        assert_eq!(inside, vec![1.5; 4]);
    }

    #[test]
    fn objective_matches_full_solver() {
        let cfg = base(200, Some(0.02));
        let bang = build_bang_b(0.02, cfg.budget, A0, &cfg.grid).unwrap();
        let obj = DesignObjective::new(A0, &cfg.grid, &cfg.params);
        let a = RadiusProfile::constant(A0, &cfg.grid).unwrap();
        let (rep, _) = flux_report(&a, &bang.measure, &cfg.params, &cfg.grid).unwrap();
        let v = obj.value(bang.measure.density()).unwrap();
        assert!((v - rep.boundary).abs() <= 1e-14 * v);
    }

    #[test]
    fn floor_budget_forces_floor_design() {
        let mut cfg = base(100, Some(0.01));
        cfg.budget = A0 * L;
        let res = optimize(&cfg).unwrap();
        assert!(res.b_opt.density().iter().all(|&v| v == A0));
        let exact = constant_fin_flux(A0, L, &cfg.params).unwrap();
        assert!((res.objective - exact).abs() < 1e-3 * exact);
        assert!(res.converged());
    }

    #[test]
    fn capped_run_is_bang_bang() {
        let cfg = base(200, Some(0.025));
        let res = optimize(&cfg).unwrap();
        assert!(res.converged(), "{:?} after {}", res.stop, res.iterations);
        let rep = verify_bang_structure(&res.b_opt, &cfg).unwrap();
        assert!(rep.is_bang(1e-3), "{rep:?}");
        assert!(res.trace.windows(2).all(|w| w[1] >= w[0]));
        let kkt = kkt_report(&res, &cfg);
        assert!(kkt.violation <= 1e-6, "{kkt:?}");
        assert!(res.b_opt.total(&cfg.grid) <= cfg.budget + 1e-10 * cfg.budget);
    }

    #[test]
    fn exact_bang_input_reports_its_switch() {
        let cfg = base(500, Some(0.05));
        let bang = build_bang_b(0.05, cfg.budget, A0, &cfg.grid).unwrap();
        let rep = verify_bang_structure(&bang.measure, &cfg).unwrap();
        assert!(rep.intermediate_cells <= 1);
        assert!((rep.switch_estimate - rep.x_m).abs() <= 0.5 * cfg.grid.width(0));
        assert_eq!(rep.objective_gap, 0.0);
    }

    #[test]
    fn infeasible_caps_are_rejected() {
        assert!(matches!(optimize(&base(50, Some(A0))), Err(FinError::Infeasible(_))));
        // x_M = 5e-4 / (2e-3 − 1e-3) = 0.5 > ℓ
        assert!(matches!(optimize(&base(50, Some(2e-3))), Err(FinError::Infeasible(_))));
        assert!(sweep_m(&base(50, None), &[0.02, 0.01], Execution::Sequential).is_err());
        assert!(sweep_m(&base(50, None), &[5e-4, 0.01], Execution::Sequential).is_err());
    }

    #[test]
    fn rebuilt_radius_carries_the_density() {
        let cfg = base(100, Some(0.02));
        let res = optimize(&cfg).unwrap();
        let fine_b = res.a_opt.surface_density(&res.a_opt_grid).unwrap();
        let total = fine_b.total(&res.a_opt_grid);
        assert!((total - res.b_opt.total(&cfg.grid)).abs() < 2e-2 * total, "{total}");
        assert_eq!(res.a_opt.values()[0], A0);
    }

    #[test]
    fn spread_ratio_and_fractions() {
        let g = Grid::uniform(1.0, 4).unwrap();
        let b = SurfaceMeasure::new(vec![3.0, 2.0, 2.0, 1.0], Vec::new(), 1.0).unwrap();
        assert_eq!(spread_ratio(&b), Some(2.0));
        assert!((excess_fraction(&b, &g, 0.0, 0.25) - 0.5).abs() < 1e-15);
        let single = SurfaceMeasure::new(vec![3.0, 1.0, 1.0, 1.0], Vec::new(), 1.0).unwrap();
        assert_eq!(spread_ratio(&single), None);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn projection_is_feasible_and_idempotent(
            ys in proptest::collection::vec(-2.0f64..8.0, 1..40),
            cap in 1.5f64..6.0,
            frac in 0.0f64..1.0,
        ) {
            let n = ys.len();
            let w = vec![1.0 / n as f64; n];
            let budget = 1.0 + frac * (cap - 1.0);
            let z = project(&ys, 1.0, cap, &w, budget);
            let mass: f64 = z.iter().zip(&w).map(|(z, w)| z * w).sum();
            prop_assert!(mass <= budget + 1e-12);
            prop_assert!(z.iter().all(|&v| (1.0..=cap).contains(&v)));
            let again = project(&z, 1.0, cap, &w, budget);
            for (p, q) in z.iter().zip(&again) {
                prop_assert!((p - q).abs() <= 1e-12 * cap);
            }
        }
    }
}
