//! Volume, lateral surface, heat flux and the closed-form supremum values.
//!
//! Volume and surface are reported without their `π` and `2π` factors:
//! `volume = ∫a²` and `surface = ∫a√(1+a'²)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, FinError, Result};
use crate::exec::Execution;
use crate::grid::{Grid, Owner};
use crate::params::PhysicalParams;
use crate::profile::{RadiusProfile, SurfaceMeasure};
use crate::solver::{compute_gamma, solve_temperature, Operator, TemperatureField};

/// Heat flux through the inlet computed two ways.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxReport {
    /// Discrete inlet flux, W.
    pub boundary: f64,
    /// Sum of lateral, atom and tip sinks, W.
    pub integral: f64,
    pub relative_gap: f64,
}

impl FluxReport {
    fn new(boundary: f64, integral: f64) -> Self {
        let scale = boundary.abs().max(integral.abs());
        let relative_gap = if scale > 0.0 {
            (boundary - integral).abs() / scale
        } else {
            0.0
        };
        Self {
            boundary,
            integral,
            relative_gap,
        }
    }
}

/// `∫a²` by the midpoint rule.
pub fn volume(a: &RadiusProfile, g: &Grid) -> Result<f64> {
    a.check_grid(g)?;
    Ok(a.midpoint_values()
        .iter()
        .enumerate()
        .map(|(c, am)| am * am * g.width(c))
        .sum())
}

/// `∫a√(1+a'²)` by the midpoint rule with cellwise slopes.
pub fn surface(a: &RadiusProfile, g: &Grid) -> Result<f64> {
    a.check_grid(g)?;
    Ok(a.surface_density(g)?.total(g))
}

fn k_pi(p: &PhysicalParams) -> f64 {
    p.conductivity * PI
}

/// Inlet flux `−kπa(0)²T'(0)` of a classical profile, from the discrete flux
/// of the first control volume.
pub fn heat_flux_boundary(
    a: &RadiusProfile,
    t: &TemperatureField,
    p: &PhysicalParams,
    g: &Grid,
) -> Result<f64> {
    let b = a.surface_density(g)?;
    heat_flux_boundary_measure(a, &b, t, p, g)
}

/// Inlet flux for an explicit surface measure `b`.
pub fn heat_flux_boundary_measure(
    a: &RadiusProfile,
    b: &SurfaceMeasure,
    t: &TemperatureField,
    p: &PhysicalParams,
    g: &Grid,
) -> Result<f64> {
    check_field(t, g)?;
    let op = Operator::assemble(a, b, p, g)?;
    Ok(k_pi(p) * op.inlet_flux(t.excess()))
}

/// Relaxed flux `kπ⟨βb, θ⟩ + kπβ_r a(ℓ)²θ(ℓ)`, atoms included.
pub fn heat_flux_relaxed(
    a: &RadiusProfile,
    b: &SurfaceMeasure,
    p: &PhysicalParams,
    g: &Grid,
    t: &TemperatureField,
) -> Result<f64> {
    a.check_grid(g)?;
    b.check_grid(g)?;
    check_field(t, g)?;
    let theta = t.excess();
    let lateral: f64 = b
        .density()
        .iter()
        .enumerate()
        .map(|(c, bc)| p.beta_at(g.midpoint(c)) * bc * g.width(c) * 0.5 * (theta[c] + theta[c + 1]))
        .sum();
    let mut atoms = 0.0;
    for atom in b.atoms() {
        let value = match g.owner_of(atom.position)? {
            Owner::Node(i) => theta[i],
            Owner::Split(i, j) => 0.5 * (theta[i] + theta[j]),
        };
        atoms += p.beta_at(atom.position) * atom.mass * value;
    }
    let tip = p.beta_tip() * a.tip().powi(2) * theta[g.n_cells()];
    Ok(k_pi(p) * (lateral + atoms + tip))
}

/// Solves the state for `(a, b)` and reports both flux evaluations.
///
/// An atom at the inlet enters only the relaxed form, so the gap is zero only
/// for data without inlet atoms.
pub fn flux_report(
    a: &RadiusProfile,
    b: &SurfaceMeasure,
    p: &PhysicalParams,
    g: &Grid,
) -> Result<(FluxReport, TemperatureField)> {
    let t = solve_temperature(a, b, p, g)?;
    let boundary = heat_flux_boundary_measure(a, b, &t, p, g)?;
    let integral = heat_flux_relaxed(a, b, p, g, &t)?;
    Ok((FluxReport::new(boundary, integral), t))
}

/// Flux reports for many designs on a shared grid.
pub fn batch_flux(
    designs: &[(RadiusProfile, SurfaceMeasure)],
    p: &PhysicalParams,
    g: &Grid,
    exec: Execution,
) -> Vec<Result<FluxReport>> {
    exec.map(designs, |(a, b)| flux_report(a, b, p, g).map(|(r, _)| r))
}

/// Flux of the constant fin `a ≡ b ≡ a0` in closed form.
pub fn constant_fin_flux(a0: f64, length: f64, p: &PhysicalParams) -> Result<f64> {
    let beta = p.constant_beta().ok_or(FinError::NonConstantConvection)?;
    let gamma = compute_gamma(a0, length, beta, p.beta_tip())?;
    Ok(k_pi(p) * beta * p.delta_t() * a0.powf(1.5) * gamma / beta.sqrt())
}

/// Supremum of the flux over profiles with surface at most `s0`, constant `β`.
pub fn surface_supremum(a0: f64, length: f64, s0: f64, p: &PhysicalParams) -> Result<f64> {
    let beta = p.constant_beta().ok_or(FinError::NonConstantConvection)?;
    check_budget(a0, length, s0)?;
    let base = constant_fin_flux(a0, length, p)?;
    Ok(base + k_pi(p) * beta * p.delta_t() * (s0 - a0 * length))
}

/// Supremum for a variable `β` attaining its maximum at the inlet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedSupremum {
    /// Value with `π` in the tip term, consistent with the relaxed flux, W.
    pub value: f64,
    /// Same assembly with the tip term taken without `π`, W.
    pub value_tip_without_pi: f64,
}

pub fn generalized_supremum(
    a0: f64,
    s0: f64,
    p: &PhysicalParams,
    g: &Grid,
) -> Result<GeneralizedSupremum> {
    let length = g.length();
    check_budget(a0, length, s0)?;
    let beta0 = p.beta_at(0.0);
    let tol = 1e-12 * beta0.abs();
    let worst = g
        .nodes()
        .iter()
        .copied()
        .chain(g.midpoints())
        .map(|x| (x, p.beta_at(x)))
        .fold((0.0, f64::NEG_INFINITY), |acc, v| if v.1 > acc.1 { v } else { acc });
    if worst.1 > beta0 + tol {
        return Err(FinError::Hypothesis(format!(
            "β is maximal at x = {:e} (β = {:e}) rather than at the inlet (β(0) = {beta0:e})",
            worst.0, worst.1
        )));
    }
    let a = RadiusProfile::constant(a0, g)?;
    let b = SurfaceMeasure::constant(a0, g)?;
    let t = solve_temperature(&a, &b, p, g)?;
    let theta = t.excess();
    let lateral: f64 = (0..g.n_cells())
        .map(|c| p.beta_at(g.midpoint(c)) * g.width(c) * 0.5 * (theta[c] + theta[c + 1]))
        .sum();
    let kpi = k_pi(p);
    let bulk = kpi * a0 * lateral + kpi * (s0 - a0 * length) * beta0 * p.delta_t();
    let tip = p.conductivity * p.beta_tip() * a0 * a0 * theta[g.n_cells()];
    Ok(GeneralizedSupremum {
        value: bulk + PI * tip,
        value_tip_without_pi: bulk + tip,
    })
}

/// First variation of the flux when mass `c` of surface moves from `x₀` to the inlet.
pub fn directional_derivative(
    a: &RadiusProfile,
    b: &SurfaceMeasure,
    p: &PhysicalParams,
    g: &Grid,
    x0: f64,
    c: f64,
) -> Result<f64> {
    if !(x0 > 0.0 && x0 < g.length()) {
        return Err(invalid("x0", "must lie strictly inside (0, ℓ)"));
    }
    let t = solve_temperature(a, b, p, g)?;
    let dt = p.delta_t();
    if dt == 0.0 {
        return Ok(0.0);
    }
    let theta0 = g.interpolate(t.excess(), x0);
    Ok(k_pi(p) * c * (p.beta_at(0.0) * dt * dt - p.beta_at(x0) * theta0 * theta0) / dt)
}

/// Pointwise gradient density `kπβ(x)θ(x)²/ΔT` at the nodes.
pub fn gradient_density(t: &TemperatureField, p: &PhysicalParams, g: &Grid) -> Result<Vec<f64>> {
    check_field(t, g)?;
    let dt = p.delta_t();
    if dt == 0.0 {
        return Ok(vec![0.0; g.nodes().len()]);
    }
    Ok(g.nodes()
        .iter()
        .zip(t.excess())
        .map(|(&x, th)| k_pi(p) * p.beta_at(x) * th * th / dt)
        .collect())
}

/// Exact derivative of the discrete flux with respect to each cell density,
/// `∂F/∂b_c = kπβ_c h_c(θ_c² + θ_{c+1}²)/(2ΔT)`.
///
/// The flux equals `kπθᵀKθ/ΔT` at the discrete solution and `θ` minimises the
/// energy, so differentiating `K` alone gives the derivative.
pub fn surface_gradient(t: &TemperatureField, p: &PhysicalParams, g: &Grid) -> Result<Vec<f64>> {
    check_field(t, g)?;
    let dt = p.delta_t();
    let theta = t.excess();
    Ok((0..g.n_cells())
        .map(|c| {
            if dt == 0.0 {
                0.0
            } else {
                let sq = theta[c] * theta[c] + theta[c + 1] * theta[c + 1];
                k_pi(p) * p.beta_at(g.midpoint(c)) * g.width(c) * sq / (2.0 * dt)
            }
        })
        .collect())
}

/// Upper bound `√(S0²/ℓ² + 4S0)` on the radius of any profile with surface `≤ S0`.
pub fn surface_bound(s0: f64, length: f64) -> f64 {
    (s0 * s0 / (length * length) + 4.0 * s0).sqrt()
}

/// Rejects a profile with `surface ≤ s0` whose maximum exceeds [`surface_bound`].
pub fn check_surface_bound(a: &RadiusProfile, g: &Grid, s0: f64) -> Result<()> {
    let surf = surface(a, g)?;
    if surf > s0 {
        return Ok(());
    }
    let bound = surface_bound(s0, g.length());
    if a.max() > bound * (1.0 + 1e-9) {
        return Err(FinError::Invariant(format!(
            "max radius {:e} exceeds the surface bound {bound:e}",
            a.max()
        )));
    }
    Ok(())
}

fn check_budget(a0: f64, length: f64, s0: f64) -> Result<()> {
    if !(s0 >= a0 * length) {
        return Err(invalid("S0", format!("budget {s0:e} is below a0·ℓ = {:e}", a0 * length)));
    }
    Ok(())
}

fn check_field(t: &TemperatureField, g: &Grid) -> Result<()> {
    if t.excess().len() == g.nodes().len() {
        Ok(())
    } else {
        Err(FinError::GridMismatch {
            expected: g.nodes().len(),
            got: t.excess().len(),
        })
    }
}
