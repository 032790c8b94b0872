//! Explicit maximizing sequences, bang-bang densities and radius reconstruction.
//!
//! The oscillating family concentrates the excess surface `S − a0ℓ` on
//! `[0, u/m]`, where `u` is a length unit (the sequence index is
//! dimensionless, so a unit is needed to place its support in metres). On that
//! support the radius is a chain of `m` circular arcs of period `u/m²`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, FinError, Result};
use crate::functionals::{constant_fin_flux, flux_report, surface, volume};
use crate::grid::Grid;
use crate::params::PhysicalParams;
use crate::profile::{RadiusProfile, SurfaceMeasure};

/// Cells required per half-period when sampling the arcs.
pub const CELLS_PER_HALF_PERIOD: usize = 8;

/// Member `m` of the oscillating maximizing family with surface `surface`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatingFamily {
    pub surface: f64,
    pub index: u32,
    pub a0: f64,
    pub length: f64,
    pub unit: f64,
}

impl OscillatingFamily {
    pub fn new(surface: f64, index: u32, a0: f64, length: f64, unit: f64) -> Result<Self> {
        crate::error::ensure_finite(&[surface, a0, length, unit], "sequence parameters")?;
        if a0 <= 0.0 || length <= 0.0 || unit <= 0.0 {
            return Err(invalid("sequence", "a0, length and unit must be positive"));
        }
        if index == 0 {
            return Err(invalid("m", "must be positive"));
        }
        if surface < a0 * length {
            return Err(invalid("S", format!("surface {surface:e} is below a0·ℓ = {:e}", a0 * length)));
        }
        let family = Self {
            surface,
            index,
            a0,
            length,
            unit,
        };
        if family.support() >= length {
            return Err(invalid(
                "m",
                format!("support u/m = {:e} does not fit in ℓ = {length:e}", family.support()),
            ));
        }
        Ok(family)
    }

    fn m(&self) -> f64 {
        self.index as f64
    }

    pub fn is_degenerate(&self) -> bool {
        self.surface == self.a0 * self.length
    }

    /// Width `u/m` of the oscillating region.
    pub fn support(&self) -> f64 {
        self.unit / self.m()
    }

    /// Period `u/m²` of one arc pair.
    pub fn period(&self) -> f64 {
        self.unit / (self.m() * self.m())
    }

    /// Density on the support, `a0 + (S − a0ℓ)m/u`.
    pub fn plateau(&self) -> f64 {
        self.a0 + (self.surface - self.a0 * self.length) * self.m() / self.unit
    }

    pub fn density_at(&self, x: f64) -> f64 {
        if x < self.support() {
            self.plateau()
        } else {
            self.a0
        }
    }

    /// Position of `x` within its half-period, measured from the nearest trough.
    fn arc_coordinate(&self, x: f64) -> f64 {
        let p = self.period();
        let y = x.rem_euclid(p);
        y.min(p - y).max(0.0)
    }

    fn arc_centre(&self) -> f64 {
        let big = self.plateau();
        ((big - self.a0) * (big + self.a0)).sqrt()
    }

    pub fn radius_at(&self, x: f64) -> f64 {
        if self.is_degenerate() || x >= self.support() || x < 0.0 {
            return self.a0;
        }
        // M² − (c − y)² rewritten as a0² + y(2c − y) to avoid cancellation
        let y = self.arc_coordinate(x);
        (self.a0 * self.a0 + y * (2.0 * self.arc_centre() - y)).sqrt().max(self.a0)
    }

    /// Analytic slope `a'(x)` on the arcs.
    pub fn slope_at(&self, x: f64) -> f64 {
        if self.is_degenerate() || x >= self.support() || x < 0.0 {
            return 0.0;
        }
        let p = self.period();
        let y = x.rem_euclid(p);
        let rising = y <= 0.5 * p;
        let s = (self.arc_centre() - self.arc_coordinate(x)) / self.radius_at(x);
        if rising {
            s
        } else {
            -s
        }
    }

    /// Peak excess `max a − a0`, reached at `u/(2m²)`.
    pub fn peak_excess(&self) -> f64 {
        self.radius_at(0.5 * self.period()) - self.a0
    }

    /// Exact cell averages of the two-level density.
    pub fn surface_measure(&self, g: &Grid) -> Result<SurfaceMeasure> {
        self.check_length(g)?;
        let w = self.support();
        let big = self.plateau();
        let density = (0..g.n_cells())
            .map(|c| {
                let (lo, hi) = (g.nodes()[c], g.nodes()[c + 1]);
                let inside = (hi.min(w) - lo).max(0.0);
                if inside >= hi - lo {
                    big
                } else if inside == 0.0 || self.is_degenerate() {
                    self.a0
                } else {
                    (self.a0 + (big - self.a0) * inside / (hi - lo)).max(self.a0)
                }
            })
            .collect();
        SurfaceMeasure::new(density, Vec::new(), self.a0)
    }

    /// The arc profile sampled at the nodes of `g`.
    pub fn radius_profile(&self, g: &Grid) -> Result<RadiusProfile> {
        self.check_length(g)?;
        if !self.is_degenerate() {
            let half = 0.5 * self.period();
            let widest = g.max_width_on(0.0, self.support());
            if widest * CELLS_PER_HALF_PERIOD as f64 > half * (1.0 + 1e-9) {
                return Err(FinError::Resolution(format!(
                    "cell width {widest:e} exceeds half-period/{CELLS_PER_HALF_PERIOD} = {:e}",
                    half / CELLS_PER_HALF_PERIOD as f64
                )));
            }
        }
        RadiusProfile::from_fn(self.a0, g, |x| self.radius_at(x))
    }

    /// Grid with `16m` equal cells on the support, graded beyond, `n_cells` in total.
    pub fn resolving_grid(&self, n_cells: usize) -> Result<Grid> {
        let fine = 2 * CELLS_PER_HALF_PERIOD * self.index as usize;
        if n_cells <= fine {
            return Err(FinError::Resolution(format!(
                "{n_cells} cells cannot hold the {fine} cells needed on the support"
            )));
        }
        Grid::graded(self.length, self.support(), fine, n_cells)
    }

    fn check_length(&self, g: &Grid) -> Result<()> {
        if (g.length() - self.length).abs() > 1e-12 * self.length {
            return Err(invalid("grid", "length differs from the sequence length"));
        }
        Ok(())
    }
}

/// Two-level density of member `m`: plateau on `[0, u/m]`, `a0` beyond.
pub fn build_bsm(surface: f64, m: u32, a0: f64, g: &Grid, unit: f64) -> Result<SurfaceMeasure> {
    OscillatingFamily::new(surface, m, a0, g.length(), unit)?.surface_measure(g)
}

/// Arc profile of member `m`, sampled at the nodes.
pub fn build_asm(surface: f64, m: u32, a0: f64, g: &Grid, unit: f64) -> Result<RadiusProfile> {
    OscillatingFamily::new(surface, m, a0, g.length(), unit)?.radius_profile(g)
}

/// Bang-bang density `cap` on `(0, x_M)` and `a0` beyond, with `x_M = (S0 − a0ℓ)/(cap − a0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BangDensity {
    pub measure: SurfaceMeasure,
    pub switch: f64,
}

pub fn build_bang_b(cap: f64, s0: f64, a0: f64, g: &Grid) -> Result<BangDensity> {
    let length = g.length();
    if !(cap > a0) {
        return Err(FinError::Infeasible(format!("cap {cap:e} must exceed a0 = {a0:e}")));
    }
    if s0 < a0 * length {
        return Err(invalid("S0", "budget below a0·ℓ"));
    }
    let switch = (s0 - a0 * length) / (cap - a0);
    if switch > length {
        return Err(FinError::Infeasible(format!(
            "switch x_M = {switch:e} lies beyond ℓ = {length:e}; the cap is too small for the budget"
        )));
    }
    let density = (0..g.n_cells())
        .map(|c| {
            let (lo, hi) = (g.nodes()[c], g.nodes()[c + 1]);
            let inside = (hi.min(switch) - lo).max(0.0);
            if inside >= hi - lo {
                cap
            } else if inside == 0.0 {
                a0
            } else {
                a0 + (cap - a0) * inside / (hi - lo)
            }
        })
        .collect();
    Ok(BangDensity {
        measure: SurfaceMeasure::new(density, Vec::new(), a0)?,
        switch,
    })
}

/// Interval of oscillations imposed while rebuilding a radius from a density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillationSpec {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

impl OscillationSpec {
    pub fn new(start: f64, end: f64, count: usize) -> Result<Self> {
        if !(start.is_finite() && end.is_finite() && start < end) {
            return Err(invalid("oscillation interval", "need start < end"));
        }
        if count == 0 {
            return Err(invalid("oscillation count", "must be at least 1"));
        }
        Ok(Self { start, end, count })
    }

    /// `⌈1/ε⌉ + 1` oscillations, with `ε` the interval width in units of `unit`.
    pub fn with_default_count(start: f64, end: f64, unit: f64) -> Result<Self> {
        let eps = (end - start) / unit;
        Self::new(start, end, (1.0 / eps).ceil() as usize + 1)
    }
}

/// Steps per oscillation sub-interval for the one-step integrator.
const RK_STEPS: f64 = 32.0;

struct Branches<'a> {
    g: &'a Grid,
    density: &'a [f64],
    base: f64,
    step: f64,
}

impl Branches<'_> {
    fn b_on(&self, lo: f64, hi: f64) -> f64 {
        self.density[self.g.cell_of(0.5 * (lo + hi))]
    }

    /// `|u'|` for `u = a²`, which turns the circular arcs into parabolas.
    fn rate(b: f64, u: f64) -> Result<f64> {
        let gap = b * b - u;
        if gap < -1e-9 * b * b {
            return Err(FinError::Reconstruction(format!(
                "density {b:e} fell below the radius {:e}",
                u.sqrt()
            )));
        }
        Ok(2.0 * gap.max(0.0).sqrt())
    }

    /// Integrates `|a'| = √(b² − a²)/a` from `from` toward `to`, growing `a`.
    fn integrate(&self, from: f64, a_from: f64, to: f64) -> Result<f64> {
        if from == to {
            return Ok(a_from);
        }
        let dir = if to > from { 1.0 } else { -1.0 };
        let nodes = self.g.nodes();
        let mut x = from;
        let mut u = a_from * a_from;
        while (to - x) * dir > 0.0 {
            // next grid node strictly in the direction of travel
            let edge = if dir > 0.0 {
                nodes[nodes.partition_point(|&n| n <= x).min(nodes.len() - 1)]
            } else {
                nodes[nodes.partition_point(|&n| n < x).saturating_sub(1)]
            };
            let stop = if (edge - to) * dir >= 0.0 || edge == x { to } else { edge };
            let cap = self.b_on(x.min(stop), x.max(stop));
            let top = cap * cap;
            let span = (stop - x).abs();
            let n = (span / self.step).ceil().max(1.0) as usize;
            let h = span / n as f64;
            for _ in 0..n {
                let k1 = Self::rate(cap, u)?;
                let k2 = Self::rate(cap, (u + 0.5 * h * k1).min(top))?;
                let k3 = Self::rate(cap, (u + 0.5 * h * k2).min(top))?;
                let k4 = Self::rate(cap, (u + h * k3).min(top))?;
                u = (u + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0).min(top);
            }
            x = stop;
        }
        Ok(u.sqrt())
    }

    /// Crossing point of the rising branch from `lo` and the falling branch from `hi`.
    fn crossing(&self, lo: f64, hi: f64) -> Result<Option<f64>> {
        let tol = 1e-12 * self.base;
        let diff = |xi: f64| -> Result<f64> {
            Ok(self.integrate(lo, self.base, xi)? - self.integrate(hi, self.base, xi)?)
        };
        let at_lo = diff(lo)?;
        let at_hi = diff(hi)?;
        if at_lo.abs() <= tol && at_hi.abs() <= tol {
            return Ok(None);
        }
        if at_lo > tol || at_hi < -tol {
            return Err(FinError::Reconstruction(format!(
                "branches do not cross on [{lo:e}, {hi:e}]"
            )));
        }
        let (mut l, mut r) = (lo, hi);
        for _ in 0..200 {
            let mid = 0.5 * (l + r);
            let d = diff(mid)?;
            if d.abs() <= tol || r - l <= 4.0 * f64::EPSILON * hi.abs() {
                return Ok(Some(mid));
            }
            if d < 0.0 {
                l = mid;
            } else {
                r = mid;
            }
        }
        Ok(Some(0.5 * (l + r)))
    }
}

/// Rebuilds a radius whose surface density is `b` on every oscillation interval
/// and `a_boundary` elsewhere.
pub fn reconstruct_radius(
    b: &SurfaceMeasure,
    g: &Grid,
    specs: &[OscillationSpec],
    a_boundary: f64,
) -> Result<RadiusProfile> {
    if !b.is_atom_free() {
        return Err(invalid("b", "reconstruction needs an atom-free density"));
    }
    b.check_grid(g)?;
    if a_boundary < b.floor() * (1.0 - crate::profile::FLOOR_SLACK) {
        return Err(invalid("a_boundary", "must not be below the floor"));
    }
    let mut sorted = specs.to_vec();
    sorted.sort_by(|p, q| p.start.total_cmp(&q.start));
    if sorted.windows(2).any(|w| w[1].start < w[0].end) {
        return Err(invalid("specs", "oscillation intervals overlap"));
    }
    let covered = |c: usize| {
        let (lo, hi) = (g.nodes()[c], g.nodes()[c + 1]);
        sorted.iter().any(|s| lo >= s.start - 1e-15 * g.length() && hi <= s.end + 1e-15 * g.length())
    };
    for (c, &bc) in b.density().iter().enumerate() {
        if !covered(c) && (bc - a_boundary).abs() > 1e-9 * a_boundary {
            return Err(FinError::Reconstruction(format!(
                "cell {c} has density {bc:e} ≠ {a_boundary:e} but no oscillation interval"
            )));
        }
    }

    let mut values = vec![a_boundary; g.nodes().len()];
    for spec in &sorted {
        let eta = (spec.end - spec.start) / spec.count as f64;
        let branches = Branches {
            g,
            density: b.density(),
            base: a_boundary,
            step: eta / RK_STEPS,
        };
        for j in 0..spec.count {
            let lo = spec.start + j as f64 * eta;
            let hi = if j + 1 == spec.count { spec.end } else { lo + eta };
            let Some(xi) = branches.crossing(lo, hi)? else {
                continue;
            };
            let first = g.nodes().partition_point(|&x| x <= lo);
            let last = g.nodes().partition_point(|&x| x < hi);
            let (mut x, mut a) = (lo, a_boundary);
            for (&xn, slot) in g.nodes()[first..last].iter().zip(&mut values[first..last]) {
                if xn > xi {
                    break;
                }
                a = branches.integrate(x, a, xn)?;
                x = xn;
                *slot = a;
            }
            let (mut x, mut a) = (hi, a_boundary);
            for i in (first..last).rev() {
                let xn = g.nodes()[i];
                if xn <= xi {
                    break;
                }
                a = branches.integrate(x, a, xn)?;
                x = xn;
                values[i] = a;
            }
        }
    }
    RadiusProfile::new(values, b.floor(), g)
}

/// Admissible profile for the volume problem with surface `n`.
#[derive(Debug, Clone)]
pub struct VolumeMember {
    pub index: u32,
    pub grid: Grid,
    pub profile: RadiusProfile,
    pub volume: f64,
    pub surface: f64,
    pub flux: f64,
}

/// Limits of the doubling search in [`build_volume_sequence`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeSearch {
    /// Length unit of the sequence support.
    pub unit: f64,
    /// Cells beyond the oscillating support.
    pub coarse_cells: usize,
    /// Largest index tried before reporting insufficient resolution.
    pub max_index: u32,
}

/// Member of the oscillating family with surface `n` whose volume is at most
/// `v0 − 1/n` and whose flux is within `kπβΔT/n` of the relaxed value.
pub fn build_volume_sequence(
    n: u32,
    v0: f64,
    a0: f64,
    length: f64,
    p: &PhysicalParams,
    search: VolumeSearch,
) -> Result<VolumeMember> {
    let beta = p.constant_beta().ok_or(crate::error::FinError::NonConstantConvection)?;
    if !(v0 > a0 * a0 * length) {
        return Err(invalid("V0", "must exceed a0²ℓ"));
    }
    let n_f = n as f64;
    if n_f < (a0 * length).floor() + 1.0 {
        return Err(invalid("n", "must be at least ⌊a0ℓ⌋ + 1"));
    }
    let slack = 1.0 / n_f;
    if v0 - slack <= a0 * a0 * length {
        return Err(invalid("n", "V0 − 1/n must exceed a0²ℓ"));
    }
    let relaxed = constant_fin_flux(a0, length, p)? + p.conductivity * std::f64::consts::PI * beta * p.delta_t() * (n_f - a0 * length);
    let target = relaxed - p.conductivity * std::f64::consts::PI * beta * p.delta_t() * slack;

    let mut m = 1u32;
    while search.unit / m as f64 >= length {
        m *= 2;
    }
    while m <= search.max_index {
        let family = OscillatingFamily::new(n_f, m, a0, length, search.unit)?;
        let grid = family.resolving_grid(2 * CELLS_PER_HALF_PERIOD * m as usize + search.coarse_cells)?;
        let profile = family.radius_profile(&grid)?;
        let vol = volume(&profile, &grid)?;
        if vol <= v0 - slack {
            let b = profile.surface_density(&grid)?;
            let (report, _) = flux_report(&profile, &b, p, &grid)?;
            if report.boundary >= target {
                let surf = surface(&profile, &grid)?;
                return Ok(VolumeMember {
                    index: m,
                    grid,
                    profile,
                    volume: vol,
                    surface: surf,
                    flux: report.boundary,
                });
            }
        }
        m *= 2;
    }
    Err(FinError::Resolution(format!(
        "no member up to m = {} meets the volume and flux targets",
        search.max_index
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    const A0: f64 = 1e-3;
    const L: f64 = 0.1;
    const MM: f64 = 1e-3;

    fn family(m: u32) -> OscillatingFamily {
        OscillatingFamily::new(6.0 * A0 * L, m, A0, L, MM).unwrap()
    }

    #[test]
    fn bsm_carries_exact_surface() {
        for m in [3, 8, 17, 64] {
            let f = family(m);
            let g = Grid::uniform(L, 1000).unwrap();
            let b = f.surface_measure(&g).unwrap();
            assert!((b.total(&g) - 6.0 * A0 * L).abs() <= 1e-14 * 6.0 * A0 * L, "m={m}");
        }
    }

    #[test]
    fn bsm_plateau_by_substitution() {
        // dimensionless: ℓ = 1, S = 2a0ℓ, m = 2/ℓ
        let g = Grid::uniform(1.0, 64).unwrap();
        let b = build_bsm(2.0, 2, 1.0, &g, 1.0).unwrap();
        assert_eq!(b.density()[0], 1.0 + 1.0 * 2.0);
        assert_eq!(b.density()[40], 1.0);
    }

    #[test]
    fn degenerate_budget_gives_floor() {
        let g = Grid::uniform(L, 100).unwrap();
        let b = build_bsm(A0 * L, 8, A0, &g, MM).unwrap();
        assert!(b.density().iter().all(|&v| v == A0));
        let a = build_asm(A0 * L, 8, A0, &g, MM).unwrap();
        assert!(a.values().iter().all(|&v| v == A0));
        let bang = build_bang_b(2.0 * A0, A0 * L, A0, &g).unwrap();
        assert!(bang.measure.density().iter().all(|&v| v == A0));
    }

    #[test]
    fn support_must_fit() {
        assert!(OscillatingFamily::new(6.0 * A0 * L, 1, A0, L, 1.0).is_err());
        assert!(OscillatingFamily::new(0.5 * A0 * L, 4, A0, L, MM).is_err());
    }

    #[test]
    fn arcs_satisfy_surface_identity_pointwise() {
        let f = family(16);
        let p = f.period();
        for k in 1..200 {
            let x = k as f64 * f.support() / 200.0 + 0.123 * p / 200.0;
            let a = f.radius_at(x);
            let s = f.slope_at(x);
            let resid = (a * s.hypot(1.0) - f.plateau()).abs() / f.plateau();
            assert!(resid <= 1e-9, "x={x} resid={resid}");
        }
    }

    #[test]
    fn asm_endpoints_and_floor_region() {
        let f = family(8);
        let g = f.resolving_grid(2048).unwrap();
        let a = f.radius_profile(&g).unwrap();
        assert_eq!(a.values()[0], A0);
        for (x, v) in g.nodes().iter().zip(a.values()) {
            if *x >= f.support() {
                assert_eq!(*v, A0);
            }
        }
        let sup = a.values().iter().map(|v| v - A0).fold(0.0, f64::max);
        assert!((sup - f.peak_excess()).abs() <= 1e-15);
    }

    #[test]
    fn peak_excess_decays_like_one_over_m() {
        // peak² = a0² + y(2c − y) at y = u/2m², so once (S − a0ℓ)/m ≪ a0² the
        // excess behaves as (S − a0ℓ)/(2a0·m)
        let peak = |m: u32| OscillatingFamily::new(6.0, m, 1.0, 1.0, 1.0).unwrap().peak_excess();
        let peaks: Vec<f64> = [64, 128, 256, 512].iter().map(|&m| peak(m)).collect();
        for w in peaks.windows(2) {
            let r = w[0] / w[1];
            assert!((1.9..2.05).contains(&r), "ratio {r}");
        }
        assert!((peaks[3] * 512.0 - 2.5).abs() < 0.02);
        // in millimetre units the same family is still in its 1/√m regime
        let mm: Vec<f64> = [8, 16, 32].iter().map(|&m| family(m).peak_excess()).collect();
        assert!(mm[0] > mm[1] && mm[1] > mm[2]);
        for m in [8, 128] {
            let f = family(m);
            let bound = (A0 * A0 + f.plateau() * f.period()).sqrt() - A0;
            assert!(f.peak_excess() <= bound);
        }
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let f = family(32);
        let g = Grid::uniform(L, 4096).unwrap();
        assert!(matches!(f.radius_profile(&g), Err(FinError::Resolution(_))));
    }

    #[test]
    fn sampled_arcs_match_density_at_fine_resolution() {
        let f = family(8);
        let g = f.resolving_grid(4096).unwrap();
        let a = f.radius_profile(&g).unwrap();
        let b = a.surface_density(&g).unwrap();
        let target = f.plateau();
        // cells that sit on a smooth part of an arc
        let fine = 16 * 8;
        let worst = (0..fine)
            .map(|c| (b.density()[c] - target).abs() / target)
            .fold(0.0, f64::max);
        assert!(worst < 2e-2, "worst {worst}");
    }

    #[test]
    fn volume_of_arcs_matches_closed_form() {
        // ∫ over one half-period of a0² + 2cy − y² is a0²q + cq² − q³/3, q = u/2m²
        let f = family(64);
        let fine = Grid::graded(L, f.support(), 16 * 64 * 8, 16 * 64 * 8 + 4000).unwrap();
        let a = f.radius_profile(&fine).unwrap();
        let q = 0.5 * f.period();
        let c = f.arc_centre();
        let half = A0 * A0 * q + c * q * q - q * q * q / 3.0;
        let exact = 2.0 * 64.0 * half + A0 * A0 * (L - f.support());
        let vol = volume(&a, &fine).unwrap();
        assert!((vol - exact).abs() < 1e-6 * exact, "{vol} vs {exact}");
    }

    #[test]
    fn measure_pairing_converges_to_inlet_atom() {
        let phi = |x: f64| (-20.0 * x).exp() * (1.0 + x);
        let g = Grid::uniform(L, 20000).unwrap();
        // ∫(1+x)e^{-20x} dx = −((1+x)/20 + 1/400)e^{-20x}
        let primitive = |x: f64| -((1.0 + x) / 20.0 + 1.0 / 400.0) * (-20.0 * x).exp();
        let limit = A0 * (primitive(L) - primitive(0.0)) + 5.0 * A0 * L * phi(0.0);
        let errs: Vec<f64> = [8, 32, 128]
            .iter()
            .map(|&m| (family(m).surface_measure(&g).unwrap().pair(&g, phi) - limit).abs())
            .collect();
        assert!(errs[1] < errs[0] && errs[2] < errs[1]);
        assert!(errs[0] / errs[2] > 8.0);
    }

    #[test]
    fn bang_density_by_substitution() {
        let g = Grid::uniform(1.0, 1000).unwrap();
        let bang = build_bang_b(11.0, 2.0, 1.0, &g).unwrap();
        assert!((bang.switch - 0.1).abs() < 1e-15);
        assert!((bang.measure.total(&g) - 2.0).abs() < 1e-14 * 2.0);
        assert_eq!(bang.measure.density()[50], 11.0);
        assert_eq!(bang.measure.density()[200], 1.0);
        assert!(build_bang_b(1.05, 2.0, 1.0, &g).is_err());
        assert!(build_bang_b(1.0, 2.0, 1.0, &g).is_err());
    }

    #[test]
    fn reconstruction_of_floor_density_is_flat() {
        let g = Grid::uniform(L, 50).unwrap();
        let b = SurfaceMeasure::constant(A0, &g).unwrap();
        let spec = OscillationSpec::new(0.0, L, 1).unwrap();
        let a = reconstruct_radius(&b, &g, &[spec], A0).unwrap();
        assert!(a.values().iter().all(|&v| v == A0));
    }

    #[test]
    fn reconstruction_reproduces_arcs() {
        let f = family(8);
        let g = f.resolving_grid(2048).unwrap();
        let b = f.surface_measure(&g).unwrap();
        let spec = OscillationSpec::new(0.0, f.support(), 8).unwrap();
        let rebuilt = reconstruct_radius(&b, &g, &[spec], A0).unwrap();
        let arcs = f.radius_profile(&g).unwrap();
        let worst = rebuilt
            .values()
            .iter()
            .zip(arcs.values())
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-6 * f.peak_excess().max(A0), "worst {worst}");
    }

    #[test]
    fn doubling_oscillations_halves_the_deviation() {
        let g = Grid::uniform(L, 16384).unwrap();
        let b = SurfaceMeasure::new(
            g.midpoints().iter().map(|&x| if x < 0.025 { 1.5 * A0 } else { A0 }).collect(),
            Vec::new(),
            A0,
        )
        .unwrap();
        let dev = |k: usize| {
            let spec = OscillationSpec::new(0.0, 0.025, k).unwrap();
            let a = reconstruct_radius(&b, &g, &[spec], A0).unwrap();
            a.max() - A0
        };
        let d: Vec<f64> = [256, 512, 1024].iter().map(|&k| dev(k)).collect();
        for w in d.windows(2) {
            let r = w[0] / w[1];
            assert!((1.6..=2.4).contains(&r), "ratio {r}");
        }
    }

    #[test]
    fn reconstruction_rejects_inconsistent_specs() {
        let g = Grid::uniform(L, 100).unwrap();
        let mut dens = vec![A0; 100];
        dens[10] = 2.0 * A0;
        let b = SurfaceMeasure::new(dens, Vec::new(), A0).unwrap();
        assert!(matches!(
            reconstruct_radius(&b, &g, &[], A0),
            Err(FinError::Reconstruction(_))
        ));
        // baseline above the density on the interval
        let spec = OscillationSpec::new(0.0, L, 4).unwrap();
        assert!(reconstruct_radius(&SurfaceMeasure::constant(A0, &g).unwrap(), &g, &[spec], 1.5 * A0).is_err());
    }

    #[test]
    fn default_oscillation_count() {
        let s = OscillationSpec::with_default_count(0.0, 0.25, 1.0).unwrap();
        assert_eq!(s.count, 5);
    }
}
