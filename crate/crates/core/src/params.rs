//! Physical parameters of the fin: conductivity, convection, boundary temperatures.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, invalid, Result};
use crate::grid::Grid;

/// Lateral convective coefficient `h(x)` in W·m⁻²·K⁻¹.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Convection {
    Constant { h: f64 },
    /// Linear from `start` at x = 0 to `end` at x = `length`.
    Affine { start: f64, end: f64, length: f64 },
    /// Logistic step from `low` to `high` centred at `at` with transition width `width`.
    Step { low: f64, high: f64, at: f64, width: f64 },
    /// Piecewise-linear samples, held constant beyond the end points.
    Tabulated { x: Vec<f64>, h: Vec<f64> },
}

impl Convection {
    pub fn constant(h: f64) -> Self {
        Convection::Constant { h }
    }

    pub fn at(&self, x: f64) -> f64 {
        match self {
            Convection::Constant { h } => *h,
            Convection::Affine { start, end, length } => start + (end - start) * x / length,
            Convection::Step { low, high, at, width } => {
                low + (high - low) / (1.0 + (-(x - at) / width).exp())
            }
            Convection::Tabulated { x: xs, h } => {
                let k = xs.partition_point(|&xi| xi <= x);
                if k == 0 {
                    h[0]
                } else if k == xs.len() {
                    h[h.len() - 1]
                } else {
                    let t = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
                    h[k - 1] + t * (h[k] - h[k - 1])
                }
            }
        }
    }

    pub fn constant_value(&self) -> Option<f64> {
        match self {
            Convection::Constant { h } => Some(*h),
            Convection::Affine { start, end, .. } if start == end => Some(*start),
            Convection::Tabulated { h, .. } if h.windows(2).all(|w| w[0] == w[1]) => Some(h[0]),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Convection::Constant { h } => ensure_finite(&[*h], "h"),
            Convection::Affine { start, end, length } => {
                ensure_finite(&[*start, *end, *length], "affine h")?;
                if *length <= 0.0 {
                    return Err(invalid("h.length", "must be positive"));
                }
                Ok(())
            }
            Convection::Step { low, high, at, width } => {
                ensure_finite(&[*low, *high, *at, *width], "step h")?;
                if *width <= 0.0 {
                    return Err(invalid("h.width", "must be positive"));
                }
                Ok(())
            }
            Convection::Tabulated { x, h } => {
                ensure_finite(x, "tabulated x")?;
                ensure_finite(h, "tabulated h")?;
                if x.is_empty() || x.len() != h.len() {
                    return Err(invalid("h.samples", "x and h must be non-empty and equally long"));
                }
                if x.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(invalid("h.samples", "abscissae must be strictly increasing"));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Thermal conductivity, W·m⁻¹·K⁻¹.
    pub conductivity: f64,
    pub convection: Convection,
    /// Tip convective coefficient `h_r`, W·m⁻²·K⁻¹.
    pub tip_coefficient: f64,
    /// Inlet temperature `T_d`, °C.
    pub inlet: f64,
    /// Ambient temperature `T_inf`, °C.
    pub ambient: f64,
}

impl PhysicalParams {
    pub fn new(
        conductivity: f64,
        convection: Convection,
        tip_coefficient: f64,
        inlet: f64,
        ambient: f64,
    ) -> Result<Self> {
        let p = Self {
            conductivity,
            convection,
            tip_coefficient,
            inlet,
            ambient,
        };
        p.validate()?;
        Ok(p)
    }

    /// Constant-h parameters with `h_r = h`.
    pub fn uniform(conductivity: f64, h: f64, inlet: f64, ambient: f64) -> Result<Self> {
        Self::new(conductivity, Convection::constant(h), h, inlet, ambient)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite(
            &[self.conductivity, self.tip_coefficient, self.inlet, self.ambient],
            "physical parameters",
        )?;
        if self.conductivity <= 0.0 {
            return Err(invalid("k", "conductivity must be positive"));
        }
        if self.tip_coefficient < 0.0 {
            return Err(invalid("h_r", "tip coefficient must be non-negative"));
        }
        if self.inlet < self.ambient {
            return Err(invalid("T_d", "inlet temperature must not be below ambient"));
        }
        self.convection.validate()
    }

    /// Checks `h ≥ floor > 0` at every node and midpoint of `grid`.
    pub fn check_floor(&self, grid: &Grid, floor: f64) -> Result<()> {
        if floor <= 0.0 {
            return Err(invalid("h floor", "must be positive"));
        }
        let points = grid.nodes().iter().copied().chain(grid.midpoints());
        for x in points {
            let h = self.convection.at(x);
            if !(h >= floor) {
                return Err(invalid("h", format!("h({x:e}) = {h:e} is below the floor {floor:e}")));
            }
        }
        Ok(())
    }

    pub fn beta_at(&self, x: f64) -> f64 {
        2.0 * self.convection.at(x) / self.conductivity
    }

    pub fn beta_cells(&self, grid: &Grid) -> Vec<f64> {
        grid.midpoints().into_iter().map(|x| self.beta_at(x)).collect()
    }

    pub fn constant_beta(&self) -> Option<f64> {
        self.convection
            .constant_value()
            .map(|h| 2.0 * h / self.conductivity)
    }

    pub fn beta_tip(&self) -> f64 {
        self.tip_coefficient / self.conductivity
    }

    pub fn delta_t(&self) -> f64 {
        self.inlet - self.ambient
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_coefficients() {
        let p = PhysicalParams::uniform(10.0, 10.0, 10.0, 0.0).unwrap();
        assert_eq!(p.beta_at(0.03), 2.0);
        assert_eq!(p.beta_tip(), 1.0);
        assert_eq!(p.constant_beta(), Some(2.0));
        assert_eq!(p.delta_t(), 10.0);
    }

    #[test]
    fn shapes_evaluate() {
        let aff = Convection::Affine { start: 20.0, end: 5.0, length: 0.1 };
        assert!((aff.at(0.05) - 12.5).abs() < 1e-12);
        let step = Convection::Step { low: 1.0, high: 3.0, at: 0.05, width: 1e-4 };
        assert_eq!(step.at(0.05), 2.0);
        assert!((step.at(0.0) - 1.0).abs() < 1e-12);
        let tab = Convection::Tabulated { x: vec![0.0, 1.0], h: vec![2.0, 4.0] };
        assert_eq!(tab.at(0.25), 2.5);
        assert_eq!(tab.at(3.0), 4.0);
        assert_eq!(step.constant_value(), None);
    }

    #[test]
    fn rejects_invalid() {
        assert!(PhysicalParams::uniform(0.0, 1.0, 1.0, 0.0).is_err());
        assert!(PhysicalParams::uniform(1.0, 1.0, 0.0, 1.0).is_err());
        assert!(PhysicalParams::new(1.0, Convection::constant(1.0), -1.0, 1.0, 0.0).is_err());
        let p = PhysicalParams::uniform(1.0, 0.0, 1.0, 0.0).unwrap();
        assert!(p.check_floor(&Grid::uniform(1.0, 4).unwrap(), 1e-3).is_err());
    }
}
