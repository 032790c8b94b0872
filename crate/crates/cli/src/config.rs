//! Experiment configuration: key-value TOML with lengths in millimetres.
//!
//! Everything is converted to SI on ingestion; downstream code never sees mm.

use std::path::{Path, PathBuf};

use fin_core::{Convection, PhysicalParams};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

const MM: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    geometry: RawGeometry,
    physics: RawPhysics,
    #[serde(default)]
    profile: RawProfile,
    constraint: Option<RawConstraint>,
    #[serde(default)]
    sequence: RawSequence,
    #[serde(default)]
    numerics: RawNumerics,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGeometry {
    a0: f64,
    length: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPhysics {
    k: f64,
    h: RawConvection,
    #[serde(default)]
    h_r: TipRule,
    t_d: f64,
    t_inf: f64,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum RawConvection {
    Constant { value: f64 },
    Affine { start: f64, end: f64 },
    Step { low: f64, high: f64, at: f64, width: f64 },
    Tabulated { x: Vec<f64>, h: Vec<f64> },
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum TipRule {
    Value(f64),
    Rule(String),
}

impl Default for TipRule {
    fn default() -> Self {
        TipRule::Rule("h(ℓ)".into())
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum RawProfile {
    #[default]
    Constant,
    Cone { tip: f64 },
    Oscillating { m: u32, surface: Option<f64>, unit: Option<f64> },
    Tabulated { x: Vec<f64>, a: Vec<f64> },
    Csv { path: PathBuf },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConstraint {
    kind: ConstraintKind,
    value: f64,
    cap: Option<f64>,
    caps: Option<Vec<f64>>,
    #[serde(default)]
    unconstrained: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintKind {
    Surface,
    Volume,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSequence {
    #[serde(default = "default_indices")]
    indices: Vec<u32>,
    #[serde(default = "default_unit")]
    unit: f64,
}

impl Default for RawSequence {
    fn default() -> Self {
        Self {
            indices: default_indices(),
            unit: default_unit(),
        }
    }
}

fn default_indices() -> Vec<u32> {
    vec![8, 16, 32, 64]
}

fn default_unit() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNumerics {
    #[serde(default = "default_cells")]
    n_cells: usize,
    #[serde(default = "default_tolerance")]
    tolerance: f64,
    #[serde(default = "default_iters")]
    max_iters: usize,
    #[serde(default)]
    seed: u64,
}

impl Default for RawNumerics {
    fn default() -> Self {
        Self {
            n_cells: default_cells(),
            tolerance: default_tolerance(),
            max_iters: default_iters(),
            seed: 0,
        }
    }
}

fn default_cells() -> usize {
    500
}

fn default_tolerance() -> f64 {
    1e-10
}

fn default_iters() -> usize {
    20_000
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    directory: Option<PathBuf>,
    #[serde(default)]
    format: Format,
}

/// Radius description in SI.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileSpec {
    Constant,
    Cone { tip: f64 },
    Oscillating { m: u32, surface: f64, unit: f64 },
    Tabulated { x: Vec<f64>, a: Vec<f64> },
    Csv { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub kind: ConstraintKind,
    /// Surface budget `S0` in m² or volume budget in m³.
    pub value: f64,
    pub cap: Option<f64>,
    pub caps: Vec<f64>,
    pub unconstrained: bool,
}

/// A fully validated experiment in SI units.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub a0: f64,
    pub length: f64,
    pub params: PhysicalParams,
    pub profile: ProfileSpec,
    pub constraint: Option<Constraint>,
    pub indices: Vec<u32>,
    pub unit: f64,
    pub n_cells: usize,
    pub tolerance: f64,
    pub max_iters: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub format: Format,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub n_cells: Option<usize>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
}

/// Locates `key` in `section` of the source, for diagnostics.
struct Source<'a> {
    text: &'a str,
}

impl Source<'_> {
    fn line_of(&self, section: &str, key: &str) -> Option<usize> {
        let mut current = String::new();
        for (i, line) in self.text.lines().enumerate() {
            let t = line.trim();
            if let Some(name) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
                current = name.trim().to_string();
                continue;
            }
            let Some((k, _)) = t.split_once('=') else { continue };
            if current == section && k.trim() == key {
                return Some(i + 1);
            }
        }
        None
    }

    fn error(&self, field: &str, reason: impl std::fmt::Display) -> CliError {
        let (section, key) = field.split_once('.').unwrap_or(("", field));
        let key = key.split('.').next().unwrap_or(key);
        match self.line_of(section, key) {
            Some(line) => CliError::Config(format!("line {line}, field `{field}`: {reason}")),
            None => CliError::Config(format!("field `{field}`: {reason}")),
        }
    }
}

pub fn load(path: &Path, overrides: &Overrides) -> CliResult<Experiment> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        action: "read config",
        path: path.to_path_buf(),
        source,
    })?;
    parse(&text, path.parent().unwrap_or(Path::new(".")), overrides)
        .map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
}

/// Parses config text; relative paths inside it resolve against `base`.
pub fn parse(text: &str, base: &Path, overrides: &Overrides) -> CliResult<Experiment> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(describe_toml(text, &e)))?;
    let src = Source { text };
    let positive = |v: f64, field: &str| -> CliResult<f64> {
        if v.is_finite() && v > 0.0 {
            Ok(v)
        } else {
            Err(src.error(field, format!("must be positive, got {v}")))
        }
    };

    let a0 = positive(raw.geometry.a0, "geometry.a0")? * MM;
    let length = positive(raw.geometry.length, "geometry.length")? * MM;

    let convection = match raw.physics.h {
        RawConvection::Constant { value } => Convection::Constant { h: value },
        RawConvection::Affine { start, end } => Convection::Affine { start, end, length },
        RawConvection::Step { low, high, at, width } => Convection::Step {
            low,
            high,
            at: at * MM,
            width: positive(width, "physics.h.width")? * MM,
        },
        RawConvection::Tabulated { x, h } => {
            if x.len() != h.len() || x.is_empty() {
                return Err(src.error("physics.h", "tabulated x and h must be non-empty and equally long"));
            }
            Convection::Tabulated {
                x: x.iter().map(|v| v * MM).collect(),
                h,
            }
        }
    };
    let tip = match raw.physics.h_r {
        TipRule::Value(v) => v,
        TipRule::Rule(rule) if matches!(rule.as_str(), "h(ℓ)" | "h(l)" | "h(L)") => convection.at(length),
        TipRule::Rule(rule) => {
            return Err(src.error("physics.h_r", format!("expected a number or \"h(ℓ)\", got {rule:?}")))
        }
    };
    let params = PhysicalParams::new(raw.physics.k, convection, tip, raw.physics.t_d, raw.physics.t_inf)
        .map_err(|e| src.error(physics_field(&e), e))?;

    let n_cells = overrides.n_cells.unwrap_or(raw.numerics.n_cells);
    if n_cells == 0 {
        return Err(src.error("numerics.n_cells", "must be at least 1"));
    }
    let probe = fin_core::Grid::uniform(length, n_cells.max(64)).map_err(|e| src.error("geometry.length", e))?;
    let h_floor = probe
        .nodes()
        .iter()
        .chain(probe.midpoints().iter())
        .map(|&x| params.convection.at(x))
        .fold(f64::INFINITY, f64::min);
    if !(h_floor > 0.0) {
        return Err(src.error("physics.h", format!("h must stay positive, minimum is {h_floor}")));
    }

    let constraint = match raw.constraint {
        None => None,
        Some(c) => {
            let scale = match c.kind {
                ConstraintKind::Surface => MM * MM,
                ConstraintKind::Volume => MM * MM * MM,
            };
            let value = positive(c.value, "constraint.value")? * scale;
            let cap = c.cap.map(|m| positive(m, "constraint.cap").map(|m| m * MM)).transpose()?;
            let caps = c.caps.unwrap_or_default();
            for &m in &caps {
                positive(m, "constraint.caps")?;
            }
            if caps.windows(2).any(|w| w[1] <= w[0]) {
                return Err(src.error("constraint.caps", "must be strictly increasing"));
            }
            Some(Constraint {
                kind: c.kind,
                value,
                cap,
                caps: caps.iter().map(|m| m * MM).collect(),
                unconstrained: c.unconstrained,
            })
        }
    };

    let profile = match raw.profile {
        RawProfile::Constant => ProfileSpec::Constant,
        RawProfile::Cone { tip } => ProfileSpec::Cone {
            tip: positive(tip, "profile.tip")? * MM,
        },
        RawProfile::Oscillating { m, surface, unit } => {
            let surface = match (surface, &constraint) {
                (Some(s), _) => positive(s, "profile.surface")? * MM * MM,
                (None, Some(c)) if c.kind == ConstraintKind::Surface => c.value,
                _ => return Err(src.error("profile.surface", "needed when no surface constraint is given")),
            };
            ProfileSpec::Oscillating {
                m,
                surface,
                unit: positive(unit.unwrap_or(1.0), "profile.unit")? * MM,
            }
        }
        RawProfile::Tabulated { x, a } => {
            if x.len() != a.len() || x.len() < 2 {
                return Err(src.error("profile.x", "x and a need at least two equally long samples"));
            }
            ProfileSpec::Tabulated {
                x: x.iter().map(|v| v * MM).collect(),
                a: a.iter().map(|v| v * MM).collect(),
            }
        }
        RawProfile::Csv { path } => ProfileSpec::Csv { path: base.join(path) },
    };

    let tolerance = positive(raw.numerics.tolerance, "numerics.tolerance")?;
    if raw.sequence.indices.contains(&0) {
        return Err(src.error("sequence.indices", "indices must be positive"));
    }
    Ok(Experiment {
        a0,
        length,
        params,
        profile,
        constraint,
        indices: raw.sequence.indices,
        unit: positive(raw.sequence.unit, "sequence.unit")? * MM,
        n_cells,
        tolerance,
        max_iters: raw.numerics.max_iters,
        seed: overrides.seed.unwrap_or(raw.numerics.seed),
        out_dir: overrides
            .out
            .clone()
            .or(raw.output.directory)
            .unwrap_or_else(|| PathBuf::from("out")),
        format: overrides.format.unwrap_or(raw.output.format),
    })
}

fn physics_field(e: &fin_core::FinError) -> &'static str {
    match e {
        fin_core::FinError::InvalidParameter { name: "k", .. } => "physics.k",
        fin_core::FinError::InvalidParameter { name: "h_r", .. } => "physics.h_r",
        fin_core::FinError::InvalidParameter { name: "T_d", .. } => "physics.t_d",
        _ => "physics.h",
    }
}

fn describe_toml(text: &str, e: &toml::de::Error) -> String {
    match e.span() {
        Some(span) => {
            let line = text[..span.start.min(text.len())].matches('\n').count() + 1;
            format!("line {line}: {}", e.message())
        }
        None => e.message().to_string(),
    }
}

impl Experiment {
    /// Surface budget, defaulting to `6·a0·ℓ` when no surface constraint is set.
    pub fn surface_budget(&self) -> f64 {
        match &self.constraint {
            Some(c) if c.kind == ConstraintKind::Surface => c.value,
            _ => 6.0 * self.a0 * self.length,
        }
    }

    pub fn surface_constraint(&self) -> CliResult<&Constraint> {
        match &self.constraint {
            Some(c) if c.kind == ConstraintKind::Surface => Ok(c),
            Some(_) => Err(CliError::Config(
                "the volume problem has no maximizer; optimization needs a surface constraint".into(),
            )),
            None => Err(CliError::Config("missing [constraint] section".into())),
        }
    }

    /// Cap for a single optimization run.
    pub fn single_cap(&self) -> CliResult<Option<f64>> {
        let c = self.surface_constraint()?;
        if c.unconstrained {
            return Ok(None);
        }
        c.cap
            .or_else(|| c.caps.last().copied())
            .map(Some)
            .ok_or_else(|| CliError::Config("constraint needs `cap`, `caps` or `unconstrained = true`".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PIN: &str = r#"
[geometry]
a0 = 1.0
length = 100.0

[physics]
k = 10.0
h = { kind = "constant", value = 10.0 }
t_d = 10.0
t_inf = 0.0

[constraint]
kind = "surface"
value = 600.0
caps = [6.25, 12.5, 25.0, 50.0]
"#;

    fn parse_str(text: &str) -> CliResult<Experiment> {
        parse(text, Path::new("."), &Overrides::default())
    }

    #[test]
    fn converts_millimetres_to_si() {
        let e = parse_str(PIN).unwrap();
        assert_eq!(e.a0, 1e-3);
        assert!((e.length - 0.1).abs() < 1e-15);
        assert!((e.surface_budget() - 6e-4).abs() < 1e-18);
        assert_eq!(e.constraint.unwrap().caps[2], 25.0 * MM);
    }

    #[test]
    fn tip_rule_defaults_to_h_at_the_tip() {
        let text = PIN.replace(
            r#"h = { kind = "constant", value = 10.0 }"#,
            r#"h = { kind = "affine", start = 20.0, end = 5.0 }"#,
        );
        let e = parse_str(&text).unwrap();
        assert!((e.params.tip_coefficient - 5.0).abs() < 1e-12);
    }

    #[test]
    fn defaults_apply() {
        let e = parse_str(PIN).unwrap();
        assert_eq!(e.n_cells, 500);
        assert_eq!(e.format, Format::Csv);
        assert_eq!(e.single_cap().unwrap(), Some(50.0 * MM));
    }

    #[test]
    fn overrides_take_precedence() {
        let o = Overrides {
            n_cells: Some(64),
            seed: Some(9),
            ..Overrides::default()
        };
        let e = parse(PIN, Path::new("."), &o).unwrap();
        assert_eq!((e.n_cells, e.seed), (64, 9));
    }

    #[test]
    fn semantic_errors_name_line_and_field() {
        let text = PIN.replace("k = 10.0", "k = -1.0");
        let msg = parse_str(&text).unwrap_err().to_string();
        assert!(msg.contains("line 7") && msg.contains("physics.k"), "{msg}");
    }

    #[test]
    fn syntax_errors_name_line() {
        let text = PIN.replace("t_d = 10.0", "t_d = ");
        let msg = parse_str(&text).unwrap_err().to_string();
        assert!(msg.contains("line 9"), "{msg}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = PIN.replace("t_inf = 0.0", "t_inf = 0.0\ncolour = 3");
        assert!(matches!(parse_str(&text), Err(CliError::Config(_))));
    }

    #[test]
    fn non_positive_h_is_rejected() {
        let text = PIN.replace(
            r#"h = { kind = "constant", value = 10.0 }"#,
            r#"h = { kind = "affine", start = 5.0, end = -1.0 }"#,
        );
        let msg = parse_str(&text).unwrap_err().to_string();
        assert!(msg.contains("physics.h"), "{msg}");
    }
}
