//! Design data: nodal radius profiles and cellwise surface measures with atoms.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, invalid, FinError, Result};
use crate::grid::Grid;

/// Relative slack allowed below the floor radius for values produced by rounding.
pub const FLOOR_SLACK: f64 = 1e-12;

/// Radius `a` sampled at the grid nodes, bounded below by `floor`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiusProfile {
    values: Vec<f64>,
    floor: f64,
}

impl RadiusProfile {
    pub fn new(values: Vec<f64>, floor: f64, grid: &Grid) -> Result<Self> {
        check_floor_value(floor)?;
        ensure_finite(&values, "radius profile")?;
        if values.len() != grid.nodes().len() {
            return Err(FinError::GridMismatch {
                expected: grid.nodes().len(),
                got: values.len(),
            });
        }
        if let Some((i, &a)) = values
            .iter()
            .enumerate()
            .find(|(_, &a)| a < floor * (1.0 - FLOOR_SLACK))
        {
            return Err(FinError::Invariant(format!(
                "radius a[{i}] = {a:e} is below the floor a0 = {floor:e}"
            )));
        }
        Ok(Self { values, floor })
    }

    pub fn constant(floor: f64, grid: &Grid) -> Result<Self> {
        Self::new(vec![floor; grid.nodes().len()], floor, grid)
    }

    /// Samples `radius(x)` at every node.
    pub fn from_fn(floor: f64, grid: &Grid, radius: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid.nodes().iter().map(|&x| radius(x)).collect(), floor, grid)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn n_cells(&self) -> usize {
        self.values.len() - 1
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn tip(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Radius at cell midpoints, averaged from the two nodes.
    pub fn midpoint_values(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Cellwise slope `a'` as the centred difference about each midpoint.
    pub fn slopes(&self, grid: &Grid) -> Vec<f64> {
        self.values
            .windows(2)
            .enumerate()
            .map(|(c, w)| (w[1] - w[0]) / grid.width(c))
            .collect()
    }

    /// The surface density `a√(1+a'²)` of this profile, without atoms.
    pub fn surface_density(&self, grid: &Grid) -> Result<SurfaceMeasure> {
        let density = self
            .midpoint_values()
            .into_iter()
            .zip(self.slopes(grid))
            .map(|(a, s)| a * s.hypot(1.0))
            .collect();
        SurfaceMeasure::new(density, Vec::new(), self.floor)
    }

    pub(crate) fn check_grid(&self, grid: &Grid) -> Result<()> {
        if self.values.len() == grid.nodes().len() {
            Ok(())
        } else {
            Err(FinError::GridMismatch {
                expected: grid.nodes().len(),
                got: self.values.len(),
            })
        }
    }
}

/// Point mass of lateral surface located at `position`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub position: f64,
    pub mass: f64,
}

/// Generalised lateral surface: a cellwise density plus finitely many atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMeasure {
    density: Vec<f64>,
    atoms: Vec<Atom>,
    floor: f64,
}

impl SurfaceMeasure {
    pub fn new(density: Vec<f64>, atoms: Vec<Atom>, floor: f64) -> Result<Self> {
        check_floor_value(floor)?;
        ensure_finite(&density, "surface density")?;
        if density.is_empty() {
            return Err(invalid("density", "must cover at least one cell"));
        }
        if let Some((c, &b)) = density
            .iter()
            .enumerate()
            .find(|(_, &b)| b < floor * (1.0 - FLOOR_SLACK))
        {
            return Err(FinError::Invariant(format!(
                "surface density b[{c}] = {b:e} is below the floor a0 = {floor:e}"
            )));
        }
        for atom in &atoms {
            ensure_finite(&[atom.position, atom.mass], "atom")?;
            if atom.mass < 0.0 {
                return Err(FinError::Invariant(format!(
                    "atom at {:e} has negative mass {:e}",
                    atom.position, atom.mass
                )));
            }
        }
        Ok(Self {
            density,
            atoms,
            floor,
        })
    }

    pub fn constant(floor: f64, grid: &Grid) -> Result<Self> {
        Self::new(vec![floor; grid.n_cells()], Vec::new(), floor)
    }

    pub fn with_atom(mut self, position: f64, mass: f64) -> Result<Self> {
        self.atoms.push(Atom { position, mass });
        Self::new(self.density, self.atoms, self.floor)
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn is_atom_free(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `∫ b + Σ masses`, with compensated summation.
    pub fn total(&self, grid: &Grid) -> f64 {
        let cells = self.density.iter().enumerate().map(|(c, b)| b * grid.width(c));
        compensated_sum(cells.chain(self.atoms.iter().map(|a| a.mass)))
    }

    /// Excess over the floor carried by each cell, `(b_c − a0)·h_c`.
    pub fn excess_per_cell(&self, grid: &Grid) -> Vec<f64> {
        self.density
            .iter()
            .enumerate()
            .map(|(c, b)| (b - self.floor) * grid.width(c))
            .collect()
    }

    /// `⟨b, φ⟩` for a continuous test function, with midpoint quadrature on cells.
    pub fn pair(&self, grid: &Grid, phi: impl Fn(f64) -> f64) -> f64 {
        let regular: f64 = self
            .density
            .iter()
            .enumerate()
            .map(|(c, b)| b * phi(grid.midpoint(c)) * grid.width(c))
            .sum();
        regular + self.atoms.iter().map(|a| a.mass * phi(a.position)).sum::<f64>()
    }

    pub(crate) fn check_grid(&self, grid: &Grid) -> Result<()> {
        if self.density.len() != grid.n_cells() {
            return Err(FinError::GridMismatch {
                expected: grid.n_cells(),
                got: self.density.len(),
            });
        }
        for atom in &self.atoms {
            grid.owner_of(atom.position)?;
        }
        Ok(())
    }
}

/// Neumaier summation.
pub(crate) fn compensated_sum(terms: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0;
    for t in terms {
        let next = sum + t;
        carry += if sum.abs() >= t.abs() {
            (sum - next) + t
        } else {
            (t - next) + sum
        };
        sum = next;
    }
    sum + carry
}

fn check_floor_value(floor: f64) -> Result<()> {
    if floor.is_finite() && floor > 0.0 {
        Ok(())
    } else {
        Err(invalid("a0", "floor radius must be positive and finite"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cone_surface_density_is_exact() {
        let g = Grid::uniform(0.1, 50).unwrap();
        let s = 0.02;
        let a = RadiusProfile::from_fn(1e-3, &g, |x| 1e-3 + s * x).unwrap();
        let b = a.surface_density(&g).unwrap();
        let exact = (1e-3 + s * 0.05) * 0.1 * (1.0 + s * s).sqrt();
        assert!((b.total(&g) - exact).abs() < 1e-15);
    }

    #[test]
    fn floor_is_enforced() {
        let g = Grid::uniform(1.0, 2).unwrap();
        assert!(RadiusProfile::new(vec![1.0, 0.5, 1.0], 1.0, &g).is_err());
        assert!(SurfaceMeasure::new(vec![1.0, 0.9], vec![], 1.0).is_err());
        assert!(SurfaceMeasure::constant(1.0, &g)
            .unwrap()
            .with_atom(0.2, -1.0)
            .is_err());
    }

    #[test]
    fn atoms_count_toward_total() {
        let g = Grid::uniform(2.0, 4).unwrap();
        let b = SurfaceMeasure::constant(1.0, &g)
            .unwrap()
            .with_atom(0.0, 3.0)
            .unwrap();
        assert_eq!(b.total(&g), 5.0);
        assert_eq!(b.pair(&g, |x| if x == 0.0 { 1.0 } else { 0.0 }), 3.0);
    }
}
