//! Experiment configuration: a sectioned TOML document, strictly validated.
//!
//! Unknown keys are rejected everywhere. Every field not marked required has
//! a documented default, so a minimal document only names the grid, the
//! time step and the end time.

use std::path::{Path, PathBuf};

use nlwave_core::nonlinearity::NonlinearitySpec;
use nlwave_core::symbols::{
    KernelSpec, LaplacianSymbol, OperatorSymbol, Profile, SmoothingSymbol, DEFAULT_SECTOR_ANGLE,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid value for {field}: {reason}")]
    Validation { field: String, reason: String },
}

impl ConfigError {
    fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// The offending field of a validation error.
    pub fn field(&self) -> Option<&str> {
        match self {
            ConfigError::Validation { field, .. } => Some(field),
            ConfigError::Parse { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Seed for every randomized audit.
    #[serde(default)]
    pub seed: u64,
    pub grid: GridConfig,
    #[serde(default)]
    pub kernel: KernelConfig,
    #[serde(default)]
    pub nonlinearity: NonlinearityConfig,
    pub time: TimeConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forcing: Option<ForcingConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "one")]
    pub dim: usize,
    /// Half-period `L` of the box `[−L, L)ⁿ`.
    #[serde(default = "pi")]
    pub half_period: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    #[serde(default = "one")]
    pub components: usize,
    #[serde(default = "default_laplacian")]
    pub laplacian: LaplacianConfig,
    /// One entry shared by all components, or one per component.
    #[serde(default = "default_operator")]
    pub operator: Vec<OperatorConfig>,
    #[serde(default)]
    pub smoothing: SmoothingConfig,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            components: 1,
            laplacian: default_laplacian(),
            operator: default_operator(),
            smoothing: SmoothingConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LaplacianConfig {
    Constant { c: f64 },
    Gaussian { width: f64 },
    Rational { q: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileConfig {
    One,
    Gaussian,
    Lorentzian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorConfig {
    Constant {
        m2: f64,
    },
    Dyadic {
        profile: ProfileConfig,
        sigma: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        level: Option<u32>,
    },
    Rational,
    Sectorial {
        modulus: f64,
        arg: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothingConfig {
    #[serde(default = "one_f")]
    pub c_g: f64,
    #[serde(default)]
    pub r: f64,
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        SmoothingConfig { c_g: 1.0, r: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearityConfig {
    #[serde(default)]
    pub lambda: f64,
    #[serde(default = "one_u32")]
    pub gamma: u32,
    /// Rows of the component coupling matrix; identity when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<Vec<Vec<f64>>>,
}

impl Default for NonlinearityConfig {
    fn default() -> Self {
        NonlinearityConfig {
            lambda: 0.0,
            gamma: 1,
            coupling: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_tol")]
    pub picard_tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub dealias: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    /// Write a CSV row every `cadence` steps.
    #[serde(default = "one")]
    pub cadence: usize,
    /// Sobolev order for the `Hs_u` column, the Lipschitz audit and the admissibility audit.
    #[serde(default = "one_f")]
    pub sobolev_order: f64,
    /// Power `α` in the `fracA_alpha_u` column.
    #[serde(default = "half")]
    pub alpha: f64,
    /// Stop once `‖u‖_∞` exceeds this multiple of its initial value.
    #[serde(
        default = "default_sup_factor",
        skip_serializing_if = "Option::is_none"
    )]
    pub sup_factor: Option<f64>,
    /// Stop once the Sobolev norm exceeds this value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sobolev_limit: Option<f64>,
    #[serde(default = "default_sector")]
    pub sector_angle: f64,
    #[serde(default = "one")]
    pub derivative_order: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blowup: Option<BlowupConfig>,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            cadence: 1,
            sobolev_order: 1.0,
            alpha: 0.5,
            sup_factor: default_sup_factor(),
            sobolev_limit: None,
            sector_angle: DEFAULT_SECTOR_ANGLE,
            derivative_order: 1,
            blowup: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlowupConfig {
    pub b: f64,
    pub t0: f64,
    #[serde(default = "default_nu_min")]
    pub nu_min: f64,
    #[serde(default = "default_nu_max")]
    pub nu_max: f64,
    #[serde(default = "default_nu_count")]
    pub nu_count: usize,
    #[serde(default = "default_certify_tol")]
    pub tol: f64,
    /// Fewest trace samples a certified window may contain.
    #[serde(default = "default_min_window")]
    pub min_window: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    /// Profiles for `u`: one shared entry or one per component.
    #[serde(default = "zero_profile")]
    pub u: Vec<InitialProfile>,
    /// Profiles for `u_t`.
    #[serde(default = "zero_profile")]
    pub ut: Vec<InitialProfile>,
    /// Remove the spatial mean of both fields.
    #[serde(default)]
    pub project_mean: bool,
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig {
            u: zero_profile(),
            ut: zero_profile(),
            project_mean: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Cos,
    Sin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialProfile {
    Zero,
    Gaussian {
        amplitude: f64,
        width: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    /// `amplitude · cos(k·x)` or `amplitude · sin(k·x)` with integer `k`.
    SingleMode {
        amplitude: f64,
        mode: [i64; 2],
        #[serde(default = "cos_phase")]
        phase: Phase,
    },
    /// One stored component of a snapshot file written by this tool. In run
    /// checkpoints components `N..2N` hold `u_t`.
    File {
        path: PathBuf,
        #[serde(default)]
        component: usize,
    },
}

/// `amplitude · sin/cos(k·x) · cos(ωt)` added to every component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForcingConfig {
    StandingWave {
        amplitude: f64,
        mode: [i64; 2],
        omega: f64,
        #[serde(default = "cos_phase")]
        phase: Phase,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
    /// Snapshot every `snapshot_cadence`-th CSV row; 0 disables snapshots.
    #[serde(default)]
    pub snapshot_cadence: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: default_out_dir(),
            snapshot_cadence: 0,
        }
    }
}

fn one() -> usize {
    1
}
fn one_u32() -> u32 {
    1
}
fn one_f() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn pi() -> f64 {
    std::f64::consts::PI
}
fn default_laplacian() -> LaplacianConfig {
    LaplacianConfig::Constant { c: 1.0 }
}
fn default_operator() -> Vec<OperatorConfig> {
    vec![OperatorConfig::Constant { m2: 1.0 }]
}
fn default_tol() -> f64 {
    1e-12
}
fn default_max_iter() -> usize {
    50
}
fn default_sup_factor() -> Option<f64> {
    Some(1e8)
}
fn default_sector() -> f64 {
    DEFAULT_SECTOR_ANGLE
}
fn default_nu_min() -> f64 {
    1e-3
}
fn default_nu_max() -> f64 {
    10.0
}
fn default_nu_count() -> usize {
    2000
}
fn default_certify_tol() -> f64 {
    1e-8
}
fn default_min_window() -> usize {
    10
}
fn zero_profile() -> Vec<InitialProfile> {
    vec![InitialProfile::Zero]
}
fn cos_phase() -> Phase {
    Phase::Cos
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Parses and validates a configuration document. Relative file paths are
/// resolved against `base` when given.
pub fn parse_config(text: &str, base: Option<&Path>) -> Result<RunConfig, ConfigError> {
    let mut config: RunConfig = toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map(|span| text[..span.start.min(text.len())].matches('\n').count() + 1)
            .unwrap_or(0);
        ConfigError::Parse {
            line,
            message: e.message().to_string(),
        }
    })?;
    if let Some(base) = base {
        config.resolve_paths(base);
    }
    config.validate()?;
    Ok(config)
}

/// Reads, parses and validates a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig, Box<dyn std::error::Error + Send + Sync>> {
    let text = std::fs::read_to_string(path)?;
    Ok(parse_config(&text, path.parent())?)
}

fn finite(field: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::invalid(field, "must be finite"))
    }
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::invalid(field, "must be positive"))
    }
}

impl RunConfig {
    fn resolve_paths(&mut self, base: &Path) {
        for p in self.initial.u.iter_mut().chain(self.initial.ut.iter_mut()) {
            if let InitialProfile::File { path, .. } = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        }
    }

    /// Serializes back to TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always serializable")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let g = &self.grid;
        if !(g.dim == 1 || g.dim == 2) {
            return Err(ConfigError::invalid("grid.dim", "must be 1 or 2"));
        }
        positive("grid.half_period", g.half_period)?;
        if g.points < 4 || !g.points.is_multiple_of(2) {
            return Err(ConfigError::invalid(
                "grid.points",
                "must be even and at least 4",
            ));
        }

        let n = self.kernel.components;
        if n == 0 {
            return Err(ConfigError::invalid(
                "kernel.components",
                "must be at least 1",
            ));
        }
        let ops = self.kernel.operator.len();
        if ops != 1 && ops != n {
            return Err(ConfigError::invalid(
                "kernel.operator",
                "needs one entry or one per component",
            ));
        }
        self.kernel_spec()
            .validate()
            .map_err(|e| ConfigError::invalid("kernel", e.to_string()))?;

        finite("nonlinearity.lambda", self.nonlinearity.lambda)?;
        if let Some(rows) = &self.nonlinearity.coupling {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(ConfigError::invalid(
                    "nonlinearity.coupling",
                    "must be a components x components matrix",
                ));
            }
            if rows.iter().flatten().any(|v| !v.is_finite()) {
                return Err(ConfigError::invalid(
                    "nonlinearity.coupling",
                    "must be finite",
                ));
            }
        }

        let t = &self.time;
        positive("time.dt", t.dt)?;
        if !(t.t_end.is_finite() && t.t_end >= 0.0) {
            return Err(ConfigError::invalid(
                "time.t_end",
                "must be finite and >= 0",
            ));
        }
        positive("time.picard_tol", t.picard_tol)?;
        if t.max_iter == 0 {
            return Err(ConfigError::invalid("time.max_iter", "must be at least 1"));
        }

        let d = &self.diagnostics;
        if d.cadence == 0 {
            return Err(ConfigError::invalid(
                "diagnostics.cadence",
                "must be at least 1",
            ));
        }
        finite("diagnostics.sobolev_order", d.sobolev_order)?;
        finite("diagnostics.alpha", d.alpha)?;
        if let Some(f) = d.sup_factor {
            positive("diagnostics.sup_factor", f)?;
        }
        if let Some(l) = d.sobolev_limit {
            positive("diagnostics.sobolev_limit", l)?;
        }
        if !(d.sector_angle.is_finite() && d.sector_angle >= 0.0) {
            return Err(ConfigError::invalid(
                "diagnostics.sector_angle",
                "must be finite and >= 0",
            ));
        }
        if let Some(b) = &d.blowup {
            positive("diagnostics.blowup.b", b.b)?;
            positive("diagnostics.blowup.t0", b.t0)?;
            positive("diagnostics.blowup.nu_min", b.nu_min)?;
            if !(b.nu_max.is_finite() && b.nu_max > b.nu_min) {
                return Err(ConfigError::invalid(
                    "diagnostics.blowup.nu_max",
                    "must exceed nu_min",
                ));
            }
            if b.nu_count < 2 {
                return Err(ConfigError::invalid(
                    "diagnostics.blowup.nu_count",
                    "must be at least 2",
                ));
            }
            positive("diagnostics.blowup.tol", b.tol)?;
            if b.min_window == 0 {
                return Err(ConfigError::invalid(
                    "diagnostics.blowup.min_window",
                    "must be at least 1",
                ));
            }
        }

        validate_profiles("initial.u", &self.initial.u, n, g)?;
        validate_profiles("initial.ut", &self.initial.ut, n, g)?;

        if let Some(ForcingConfig::StandingWave {
            amplitude,
            omega,
            mode,
            ..
        }) = &self.forcing
        {
            finite("forcing.amplitude", *amplitude)?;
            finite("forcing.omega", *omega)?;
            check_mode("forcing.mode", mode, g)?;
        }
        Ok(())
    }

    pub fn kernel_spec(&self) -> KernelSpec {
        let laplacian = match self.kernel.laplacian {
            LaplacianConfig::Constant { c } => LaplacianSymbol::Constant { c },
            LaplacianConfig::Gaussian { width } => LaplacianSymbol::Gaussian { width },
            LaplacianConfig::Rational { q } => LaplacianSymbol::Rational { q },
        };
        let operator = self
            .kernel
            .operator
            .iter()
            .map(|op| match *op {
                OperatorConfig::Constant { m2 } => OperatorSymbol::Constant { m2 },
                OperatorConfig::Dyadic {
                    profile,
                    sigma,
                    level,
                } => OperatorSymbol::Dyadic {
                    profile: match profile {
                        ProfileConfig::One => Profile::One,
                        ProfileConfig::Gaussian => Profile::Gaussian,
                        ProfileConfig::Lorentzian => Profile::Lorentzian,
                    },
                    sigma,
                    level,
                },
                OperatorConfig::Rational => OperatorSymbol::Rational,
                OperatorConfig::Sectorial { modulus, arg } => {
                    OperatorSymbol::Sectorial { modulus, arg }
                }
            })
            .collect();
        KernelSpec {
            components: self.kernel.components,
            laplacian,
            operator,
            smoothing: SmoothingSymbol {
                c_g: self.kernel.smoothing.c_g,
                r: self.kernel.smoothing.r,
            },
        }
    }

    pub fn nonlinearity_spec(&self) -> NonlinearitySpec {
        NonlinearitySpec {
            lambda: self.nonlinearity.lambda,
            gamma: self.nonlinearity.gamma,
            coupling: self
                .nonlinearity
                .coupling
                .as_ref()
                .map(|rows| rows.concat()),
        }
    }
}

fn check_mode(field: &str, mode: &[i64; 2], g: &GridConfig) -> Result<(), ConfigError> {
    let half = (g.points / 2) as i64;
    let used = if g.dim == 1 { &mode[..1] } else { &mode[..] };
    if used.iter().any(|k| *k <= -half || *k >= half) {
        return Err(ConfigError::invalid(
            field,
            "mode outside the resolved range",
        ));
    }
    if g.dim == 1 && mode[1] != 0 {
        return Err(ConfigError::invalid(
            field,
            "second index must be 0 in one dimension",
        ));
    }
    Ok(())
}

fn validate_profiles(
    field: &str,
    profiles: &[InitialProfile],
    n: usize,
    grid: &GridConfig,
) -> Result<(), ConfigError> {
    if profiles.len() != 1 && profiles.len() != n {
        return Err(ConfigError::invalid(
            field,
            "needs one profile or one per component",
        ));
    }
    for (i, p) in profiles.iter().enumerate() {
        let at = |name: &str| format!("{field}[{i}].{name}");
        match p {
            InitialProfile::Zero => {}
            InitialProfile::Gaussian {
                amplitude,
                width,
                center,
            } => {
                finite(&at("amplitude"), *amplitude)?;
                positive(&at("width"), *width)?;
                finite(&at("center"), center[0] + center[1])?;
            }
            InitialProfile::SingleMode {
                amplitude, mode, ..
            } => {
                finite(&at("amplitude"), *amplitude)?;
                check_mode(&at("mode"), mode, grid)?;
            }
            InitialProfile::File { path, .. } => {
                if !path.is_file() {
                    return Err(ConfigError::invalid(
                        at("path"),
                        format!("{} does not exist", path.display()),
                    ));
                }
            }
        }
    }
    Ok(())
}
