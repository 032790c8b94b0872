//! Finite-volume solution of the fin equation `(a²θ')' = β b θ`.
//!
//! Unknown is the excess temperature `θ = T − T_inf`, with `θ(0) = T_d − T_inf`
//! and the tip condition `θ'(ℓ) = −β_r θ(ℓ)`. The lateral coefficient is a
//! [`SurfaceMeasure`]; its atoms act as point sinks on the control volume that
//! owns them, except atoms at `x = 0`, which test functions do not see.

use crate::error::{ensure_finite, invalid, FinError, Result};
use crate::grid::{Grid, Owner};
use crate::params::PhysicalParams;
use crate::profile::{RadiusProfile, SurfaceMeasure};
use crate::tridiag;

/// Nodal temperatures together with their excess over ambient.
#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureField {
    values: Vec<f64>,
    excess: Vec<f64>,
}

impl TemperatureField {
    /// Temperatures `T_i` in °C.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `θ_i = T_i − T_inf`, computed directly rather than by subtraction.
    pub fn excess(&self) -> &[f64] {
        &self.excess
    }
}

/// Sensitivity of the temperature to a surface swap at `position`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedField {
    pub values: Vec<f64>,
    pub position: f64,
    /// Point source `β(x₀)·c·θ(x₀)` loaded on the owning control volume.
    pub source: f64,
    /// Measured jump of the discrete flux `a²T̃'` across the owning control volume.
    pub jump: f64,
}

/// Assembled finite-volume operator for one `(a, b, p)` triple.
#[derive(Debug, Clone)]
pub(crate) struct Operator {
    /// `a²/h` per cell, `a²` at the midpoint.
    pub conductance: Vec<f64>,
    /// Lumped `∫ β b` per node control volume, including interior atoms.
    pub sink: Vec<f64>,
    /// `β_r a(ℓ)²`.
    pub tip: f64,
}

impl Operator {
    pub fn assemble(
        a: &RadiusProfile,
        b: &SurfaceMeasure,
        p: &PhysicalParams,
        g: &Grid,
    ) -> Result<Self> {
        a.check_grid(g)?;
        b.check_grid(g)?;
        let conductance = a
            .midpoint_values()
            .iter()
            .enumerate()
            .map(|(c, am)| am * am / g.width(c))
            .collect();
        let beta = p.beta_cells(g);
        let mut op = Self::from_cells(conductance, &beta, b.density(), g, p.beta_tip() * a.tip().powi(2));
        for atom in b.atoms() {
            if atom.position == 0.0 {
                continue;
            }
            let weight = p.beta_at(atom.position) * atom.mass;
            match g.owner_of(atom.position)? {
                Owner::Node(i) => op.sink[i] += weight,
                Owner::Split(i, j) => {
                    op.sink[i] += 0.5 * weight;
                    op.sink[j] += 0.5 * weight;
                }
            }
        }
        Ok(op)
    }

    /// Operator from cellwise conductances, `β` and density, without atoms.
    pub fn from_cells(conductance: Vec<f64>, beta: &[f64], density: &[f64], g: &Grid, tip: f64) -> Self {
        let n = g.n_cells();
        let mut sink = vec![0.0; n + 1];
        for c in 0..n {
            let half = 0.5 * beta[c] * density[c] * g.width(c);
            sink[c] += half;
            sink[c + 1] += half;
        }
        Self {
            conductance,
            sink,
            tip,
        }
    }

    /// Solves `Kθ = load` on nodes `1..=N` with `θ_0 = inlet`.
    pub fn solve(&self, inlet: f64, load: &[f64]) -> Result<Vec<f64>> {
        tridiag::solve_chain(&self.conductance, &self.sink, self.tip, inlet, load)
    }

    /// Residual of the inlet row, `(Kθ)_0`: heat leaving through the first face
    /// plus the sink of the inlet half-cell.
    pub fn inlet_flux(&self, theta: &[f64]) -> f64 {
        self.conductance[0] * (theta[0] - theta[1]) + self.sink[0] * theta[0]
    }
}

/// Finite-volume temperature for radius `a` and surface measure `b`.
pub fn solve_temperature(
    a: &RadiusProfile,
    b: &SurfaceMeasure,
    p: &PhysicalParams,
    g: &Grid,
) -> Result<TemperatureField> {
    p.validate()?;
    let op = Operator::assemble(a, b, p, g)?;
    let excess = op.solve(p.delta_t(), &vec![0.0; g.nodes().len()])?;
    Ok(field_from_excess(excess, p.ambient))
}

pub(crate) fn field_from_excess(excess: Vec<f64>, ambient: f64) -> TemperatureField {
    let values = excess.iter().map(|t| ambient + t).collect();
    TemperatureField { values, excess }
}

/// `√(β/a0)`, the decay rate of the constant-radius solution.
fn decay_rate(a0: f64, beta: f64) -> f64 {
    (beta / a0).sqrt()
}

/// The tip-corrected hyperbolic ratio of a constant-radius fin, in `(0, max(1, r))`
/// with `r = β_r√(a0/β)`.
pub fn compute_gamma(a0: f64, length: f64, beta: f64, beta_tip: f64) -> Result<f64> {
    ensure_finite(&[a0, length, beta, beta_tip], "gamma arguments")?;
    if a0 <= 0.0 || length <= 0.0 || beta <= 0.0 {
        return Err(invalid("gamma", "a0, length and beta must be positive"));
    }
    if beta_tip < 0.0 {
        return Err(invalid("beta_r", "must be non-negative"));
    }
    let t = (decay_rate(a0, beta) * length).tanh();
    let r = beta_tip * (a0 / beta).sqrt();
    Ok((t + r) / (1.0 + r * t))
}

/// Closed-form temperature of the constant-radius fin `a ≡ b ≡ a0` at `x`.
pub fn analytic_theta_constant(a0: f64, p: &PhysicalParams, length: f64, x: f64) -> Result<f64> {
    let beta = p.constant_beta().ok_or(FinError::NonConstantConvection)?;
    if !(0.0..=length).contains(&x) {
        return Err(invalid("x", format!("{x:e} outside [0, {length:e}]")));
    }
    compute_gamma(a0, length, beta, p.beta_tip())?;
    let z = decay_rate(a0, beta);
    let r = p.beta_tip() / z;
    // cosh(z(ℓ−x)) + r sinh(z(ℓ−x)) over cosh(zℓ) + r sinh(zℓ), scaled by e^{-zℓ}
    let num = (1.0 + r) + (1.0 - r) * (-2.0 * z * (length - x)).exp();
    let den = (1.0 + r) + (1.0 - r) * (-2.0 * z * length).exp();
    Ok(p.ambient + p.delta_t() * (-z * x).exp() * num / den)
}

/// Solves the sensitivity problem for moving surface `c` from `x₀` to the inlet.
pub fn solve_linearized(
    a: &RadiusProfile,
    b: &SurfaceMeasure,
    p: &PhysicalParams,
    g: &Grid,
    t: &TemperatureField,
    x0: f64,
    c: f64,
) -> Result<LinearizedField> {
    if !(x0 > 0.0 && x0 < g.length()) {
        return Err(invalid("x0", "must lie strictly inside (0, ℓ)"));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(invalid("c", "must be positive"));
    }
    if t.excess().len() != g.nodes().len() {
        return Err(FinError::GridMismatch {
            expected: g.nodes().len(),
            got: t.excess().len(),
        });
    }
    let op = Operator::assemble(a, b, p, g)?;
    let source = p.beta_at(x0) * c * g.interpolate(t.excess(), x0);
    let mut load = vec![0.0; g.nodes().len()];
    let owner = g.owner_of(x0)?;
    match owner {
        Owner::Node(i) => load[i] = source,
        Owner::Split(i, j) => {
            load[i] = 0.5 * source;
            load[j] = 0.5 * source;
        }
    }
    let values = op.solve(0.0, &load)?;

    let (first, last) = match owner {
        Owner::Node(i) => (i, i),
        Owner::Split(i, j) => (i, j),
    };
    let n = g.n_cells();
    let face_flux = |node: usize| op.conductance[node] * (values[node + 1] - values[node]);
    let right = if last < n { face_flux(last) } else { -op.tip * values[n] };
    let left = face_flux(first - 1);
    Ok(LinearizedField {
        values,
        position: x0,
        source,
        jump: right - left,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pin() -> (PhysicalParams, f64, f64) {
        (PhysicalParams::uniform(10.0, 10.0, 10.0, 0.0).unwrap(), 1e-3, 0.1)
    }

    fn constant_fin(n: usize) -> (Grid, RadiusProfile, SurfaceMeasure, PhysicalParams) {
        let (p, a0, l) = pin();
        let g = Grid::uniform(l, n).unwrap();
        let a = RadiusProfile::constant(a0, &g).unwrap();
        let b = SurfaceMeasure::constant(a0, &g).unwrap();
        (g, a, b, p)
    }

    #[test]
    fn gamma_reduces_to_tanh_without_tip_loss() {
        let g = compute_gamma(1e-3, 0.1, 2.0, 0.0).unwrap();
        assert_eq!(g, (44.721359549995796f64 * 0.1).tanh());
    }

    #[test]
    fn gamma_saturates_for_long_fins() {
        let z = (2.0f64 / 1e-3).sqrt();
        let g = compute_gamma(1e-3, 40.0 / z, 2.0, 0.3).unwrap();
        assert!((g - 1.0).abs() <= 1e-15);
        assert!(compute_gamma(1e-3, 1e6, 2.0, 1.0).unwrap().is_finite());
    }

    #[test]
    fn gamma_matches_hyperbolic_definition() {
        let (a0, l, beta, br) = (1e-3f64, 0.1f64, 2.0f64, 1.0f64);
        let z = (beta / a0).sqrt();
        let def = (z * (z * l).sinh() + br * (z * l).cosh()) / (z * (z * l).cosh() + br * (z * l).sinh());
        let g = compute_gamma(a0, l, beta, br).unwrap();
        assert!((g - def).abs() < 1e-15);
        assert!(g > 0.0 && g < f64::max(1.0, br * (a0 / beta).sqrt()));
    }

    #[test]
    fn closed_form_endpoints() {
        let (p, a0, l) = pin();
        assert_eq!(analytic_theta_constant(a0, &p, l, 0.0).unwrap(), 10.0);

        let bare = PhysicalParams::new(10.0, crate::params::Convection::constant(10.0), 0.0, 10.0, 0.0).unwrap();
        let z = (2.0f64 / a0).sqrt();
        let tip = analytic_theta_constant(a0, &bare, l, l).unwrap();
        assert!((tip - 10.0 / (z * l).cosh()).abs() < 1e-13);
    }

    #[test]
    fn closed_form_agrees_with_cosh_minus_gamma_sinh() {
        let (p, a0, l) = pin();
        let z = (2.0f64 / a0).sqrt();
        let gamma = compute_gamma(a0, l, 2.0, 1.0).unwrap();
        for x in [0.0, 0.01, 0.03, 0.05] {
            let direct = 10.0 * ((z * x).cosh() - gamma * (z * x).sinh());
            let stable = analytic_theta_constant(a0, &p, l, x).unwrap();
            assert!((direct - stable).abs() < 1e-9, "x={x}: {direct} vs {stable}");
        }
    }

    #[test]
    fn fv_matches_closed_form_on_constant_fin() {
        let (g, a, b, p) = constant_fin(1024);
        let t = solve_temperature(&a, &b, &p, &g).unwrap();
        for (x, v) in g.nodes().iter().zip(t.values()) {
            let exact = analytic_theta_constant(1e-3, &p, 0.1, *x).unwrap();
            assert!((v - exact).abs() < 1e-5, "x={x}");
        }
    }

    #[test]
    fn equal_inlet_and_ambient_gives_ambient_field() {
        let (g, a, b, _) = constant_fin(64);
        let p = PhysicalParams::uniform(10.0, 10.0, 7.5, 7.5).unwrap();
        let t = solve_temperature(&a, &b, &p, &g).unwrap();
        assert!(t.values().iter().all(|&v| v == 7.5));
    }

    #[test]
    fn atom_at_inlet_is_invisible_to_the_state() {
        let (g, a, b, p) = constant_fin(200);
        let with_atom = b.clone().with_atom(0.0, 5e-4).unwrap();
        let t0 = solve_temperature(&a, &b, &p, &g).unwrap();
        let t1 = solve_temperature(&a, &with_atom, &p, &g).unwrap();
        assert_eq!(t0, t1);
    }

    #[test]
    fn atom_on_a_face_splits_between_neighbours() {
        let (g, a, b, p) = constant_fin(10);
        let face = g.midpoint(3);
        let split = b.clone().with_atom(face, 1e-3).unwrap();
        let op = Operator::assemble(&a, &split, &p, &g).unwrap();
        let base = Operator::assemble(&a, &b, &p, &g).unwrap();
        assert!((op.sink[3] - base.sink[3] - 1e-3).abs() < 1e-15);
        assert!((op.sink[4] - base.sink[4] - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn interior_atom_cools_downstream() {
        let (g, a, b, p) = constant_fin(100);
        let t0 = solve_temperature(&a, &b, &p, &g).unwrap();
        let t1 = solve_temperature(&a, &b.clone().with_atom(0.02, 1e-3).unwrap(), &p, &g).unwrap();
        assert!(t1.values()[50] < t0.values()[50]);
    }

    #[test]
    fn atoms_outside_the_fin_are_rejected() {
        let (g, a, b, p) = constant_fin(10);
        let bad = b.with_atom(0.2, 1e-4).unwrap();
        assert!(matches!(
            solve_temperature(&a, &bad, &p, &g),
            Err(FinError::AtomOutOfRange { .. })
        ));
    }

    #[test]
    fn linearized_field_is_anchored_and_jumps_by_the_source() {
        let (g, a, b, p) = constant_fin(400);
        let t = solve_temperature(&a, &b, &p, &g).unwrap();
        let lin = solve_linearized(&a, &b, &p, &g, &t, 0.05, 1e-4).unwrap();
        assert_eq!(lin.values[0], 0.0);
        let i = g.cell_of(0.05);
        let x0 = 0.05;
        let theta = g.interpolate(t.excess(), x0);
        assert!((lin.source - 2.0 * 1e-4 * theta).abs() < 1e-15);
        // the owning volume also holds its own reaction sink
        let op = Operator::assemble(&a, &b, &p, &g).unwrap();
        let reaction = op.sink[i] * lin.values[i];
        assert!((lin.jump + lin.source - reaction).abs() < 1e-9 * lin.source);
        assert!(lin.values.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn linearized_field_scales_with_swap_mass() {
        let (g, a, b, p) = constant_fin(100);
        let t = solve_temperature(&a, &b, &p, &g).unwrap();
        let small = solve_linearized(&a, &b, &p, &g, &t, 0.03, 1e-12).unwrap();
        let unit = solve_linearized(&a, &b, &p, &g, &t, 0.03, 1.0).unwrap();
        for (s, u) in small.values.iter().zip(&unit.values) {
            assert!((s - 1e-12 * u).abs() <= 1e-24 + 1e-12 * u.abs() * 1e-12);
        }
        assert!(solve_linearized(&a, &b, &p, &g, &t, 0.0, 1.0).is_err());
        assert!(solve_linearized(&a, &b, &p, &g, &t, 0.03, 0.0).is_err());
    }
}
