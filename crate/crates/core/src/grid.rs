//! One-dimensional node grid on `[0, ℓ]`.
//!
//! Temperatures live at the nodes; radius-squared and surface density live at
//! the cell midpoints (staggered layout). Control volumes are bounded by the
//! midpoints of the neighbouring cells.

use crate::error::{invalid, FinError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    nodes: Vec<f64>,
}

/// Which node control volume(s) own a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Owner {
    Node(usize),
    /// The point sits on the face between two control volumes.
    Split(usize, usize),
}

impl Grid {
    pub fn uniform(length: f64, n_cells: usize) -> Result<Self> {
        check_length(length)?;
        if n_cells == 0 {
            return Err(invalid("n_cells", "must be positive"));
        }
        let h = length / n_cells as f64;
        let mut nodes: Vec<f64> = (0..=n_cells).map(|i| i as f64 * h).collect();
        nodes[n_cells] = length;
        Ok(Self { nodes })
    }

    /// `n_fine` equal cells on `[0, fine_width]`, then `n_cells - n_fine`
    /// geometrically stretched cells up to `length`.
    pub fn graded(length: f64, fine_width: f64, n_fine: usize, n_cells: usize) -> Result<Self> {
        check_length(length)?;
        if !(fine_width > 0.0 && fine_width < length) {
            return Err(invalid("fine_width", "must lie strictly inside (0, length)"));
        }
        if n_fine == 0 || n_fine >= n_cells {
            return Err(invalid("n_fine", "must satisfy 0 < n_fine < n_cells"));
        }
        let hf = fine_width / n_fine as f64;
        let n_coarse = n_cells - n_fine;
        let rest = length - fine_width;

        let mut nodes: Vec<f64> = (0..=n_fine).map(|i| i as f64 * hf).collect();
        nodes[n_fine] = fine_width;

        let widths: Vec<f64> = if rest <= n_coarse as f64 * hf {
            vec![rest / n_coarse as f64; n_coarse]
        } else {
            let ratio = stretch_ratio(hf, n_coarse, rest);
            let raw: Vec<f64> = (1..=n_coarse).map(|j| hf * ratio.powi(j as i32)).collect();
            let total: f64 = raw.iter().sum();
            raw.into_iter().map(|w| w * rest / total).collect()
        };
        let mut x = fine_width;
        for w in widths {
            x += w;
            nodes.push(x);
        }
        nodes[n_cells] = length;
        Self::from_nodes(nodes)
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(invalid("nodes", "need at least two nodes"));
        }
        crate::error::ensure_finite(&nodes, "grid nodes")?;
        if nodes[0] != 0.0 {
            return Err(invalid("nodes", "first node must be 0"));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("nodes", "must be strictly increasing"));
        }
        Ok(Self { nodes })
    }

    pub fn length(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn n_cells(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn width(&self, cell: usize) -> f64 {
        self.nodes[cell + 1] - self.nodes[cell]
    }

    pub fn midpoint(&self, cell: usize) -> f64 {
        0.5 * (self.nodes[cell] + self.nodes[cell + 1])
    }

    pub fn widths(&self) -> Vec<f64> {
        self.nodes.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn midpoints(&self) -> Vec<f64> {
        self.nodes.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn max_width(&self) -> f64 {
        self.widths().into_iter().fold(0.0, f64::max)
    }

    /// Largest cell width among cells intersecting `[lo, hi]`.
    pub fn max_width_on(&self, lo: f64, hi: f64) -> f64 {
        (0..self.n_cells())
            .filter(|&c| self.nodes[c + 1] > lo && self.nodes[c] < hi)
            .map(|c| self.width(c))
            .fold(0.0, f64::max)
    }

    /// Index of the cell containing `x`; the right end belongs to the last cell.
    pub fn cell_of(&self, x: f64) -> usize {
        let n = self.n_cells();
        match self.nodes.partition_point(|&node| node <= x) {
            0 => 0,
            k if k > n => n - 1,
            k => k - 1,
        }
    }

    /// Control volume ownership of a point in `[0, ℓ]`.
    pub fn owner_of(&self, x: f64) -> Result<Owner> {
        if !(0.0..=self.length()).contains(&x) {
            return Err(FinError::AtomOutOfRange {
                position: x,
                length: self.length(),
            });
        }
        let c = self.cell_of(x);
        let mid = self.midpoint(c);
        Ok(if x < mid {
            Owner::Node(c)
        } else if x > mid {
            Owner::Node(c + 1)
        } else {
            Owner::Split(c, c + 1)
        })
    }

    /// Piecewise-linear interpolation of nodal values at `x`.
    pub fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        let c = self.cell_of(x);
        let t = ((x - self.nodes[c]) / self.width(c)).clamp(0.0, 1.0);
        values[c] + t * (values[c + 1] - values[c])
    }
}

fn check_length(length: f64) -> Result<()> {
    if length.is_finite() && length > 0.0 {
        Ok(())
    } else {
        Err(invalid("length", "must be positive and finite"))
    }
}

// Ratio r > 1 with hf·(r + r² + … + r^n) = total.
fn stretch_ratio(hf: f64, n: usize, total: f64) -> f64 {
    let sum = |r: f64| {
        let growth = (n as f64 * r.ln()).exp_m1() / (r - 1.0);
        hf * r * growth
    };
    let mut lo = 1.0 + 1e-14;
    let mut hi = 2.0;
    while sum(hi) < total {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sum(mid) > total {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}
