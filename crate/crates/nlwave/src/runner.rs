//! Experiment driver: builds the discretization from a [`RunConfig`], audits
//! it, runs the stepper and writes every output file.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use log::{info, warn};
use nlwave_core::diagnostics::{
    energy, frac_power_norm, sobolev_norm, BlowupMonitor, CertifyOptions, EnergyReport,
};
use nlwave_core::nonlinearity::{lipschitz_audit, LipschitzReport, NonlinearitySpec};
use nlwave_core::propagator::{
    run, Forcing, PicardOptions, RunOptions, SobolevLimit, State, Stepper, StopReason,
};
use nlwave_core::spectral::{Grid, RealField, SpectralTransform, Spectrum};
use nlwave_core::symbols::{
    audit_kernel, build_symbol_table, AdmissibilityReport, KernelSpec, SymbolTable,
};
use nlwave_core::Error as CoreError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ConfigError, ForcingConfig, InitialProfile, Phase, RunConfig};
use crate::output::{certificate_text, CertificateOutcome, CsvWriter, DiagnosticsRow};
use crate::snapshot::{self, SnapshotError};

/// Process exit codes. Values are stable across releases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum ExitCode {
    Completed = 0,
    Usage = 2,
    Config = 3,
    UnknownPreset = 4,
    RejectedAdmissibility = 5,
    Io = 6,
    Numerical = 7,
    StoppedNormThreshold = 10,
    StoppedSobolevThreshold = 11,
    StoppedNonContraction = 12,
}

impl ExitCode {
    pub const ALL: [ExitCode; 10] = [
        ExitCode::Completed,
        ExitCode::Usage,
        ExitCode::Config,
        ExitCode::UnknownPreset,
        ExitCode::RejectedAdmissibility,
        ExitCode::Io,
        ExitCode::Numerical,
        ExitCode::StoppedNormThreshold,
        ExitCode::StoppedSobolevThreshold,
        ExitCode::StoppedNonContraction,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn label(self) -> &'static str {
        match self {
            ExitCode::Completed => "completed",
            ExitCode::Usage => "error: usage",
            ExitCode::Config => "error: configuration",
            ExitCode::UnknownPreset => "error: unknown preset",
            ExitCode::RejectedAdmissibility => "rejected: admissibility",
            ExitCode::Io => "error: io",
            ExitCode::Numerical => "error: numerical",
            ExitCode::StoppedNormThreshold => "stopped: norm threshold",
            ExitCode::StoppedSobolevThreshold => "stopped: sobolev threshold",
            ExitCode::StoppedNonContraction => "stopped: non-contraction",
        }
    }

    pub fn from_stop(stop: StopReason) -> Self {
        match stop {
            StopReason::Completed => ExitCode::Completed,
            StopReason::SupNormThreshold => ExitCode::StoppedNormThreshold,
            StopReason::SobolevThreshold => ExitCode::StoppedSobolevThreshold,
            StopReason::NonContraction => ExitCode::StoppedNonContraction,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunnerError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("kernel rejected by the admissibility audit: {0}")]
    Rejected(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error("{}", match .t { Some(t) => format!("at t = {t}: {source}"), None => source.to_string() })]
    Numerical { t: Option<f64>, source: CoreError },
    #[error("{0}")]
    Invalid(String),
}

impl From<CoreError> for RunnerError {
    fn from(source: CoreError) -> Self {
        RunnerError::Numerical { t: None, source }
    }
}

impl RunnerError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            RunnerError::Config(_) | RunnerError::Invalid(_) => ExitCode::Config,
            RunnerError::UnknownPreset(_) => ExitCode::UnknownPreset,
            RunnerError::Rejected(_) => ExitCode::RejectedAdmissibility,
            RunnerError::Io(_) | RunnerError::Snapshot(_) => ExitCode::Io,
            RunnerError::Numerical { .. } => ExitCode::Numerical,
        }
    }
}

/// Grid, symbols, nonlinearity and transform for one configuration.
pub struct Setup {
    pub grid: Grid,
    pub kernel: KernelSpec,
    pub table: SymbolTable,
    pub nl: NonlinearitySpec,
    pub transform: SpectralTransform,
}

impl Setup {
    pub fn new(config: &RunConfig) -> Result<Self, RunnerError> {
        let grid = grid_of(config)?;
        let kernel = config.kernel_spec();
        let table = build_symbol_table(&grid, &kernel)?;
        let nl = config.nonlinearity_spec();
        nl.validate(kernel.components)?;
        let transform = SpectralTransform::new(&grid);
        Ok(Setup {
            grid,
            kernel,
            table,
            nl,
            transform,
        })
    }
}

fn grid_of(config: &RunConfig) -> Result<Grid, RunnerError> {
    Ok(Grid::new(
        config.grid.dim,
        config.grid.half_period,
        config.grid.points,
    )?)
}

fn wavevector(grid: &Grid, mode: [i64; 2]) -> [f64; 2] {
    let unit = grid.wavenumber_unit();
    [unit * mode[0] as f64, unit * mode[1] as f64]
}

fn harmonic(grid: &Grid, mode: [i64; 2], phase: Phase) -> impl Fn([f64; 2]) -> f64 {
    let k = wavevector(grid, mode);
    move |x| {
        let arg = k[0] * x[0] + k[1] * x[1];
        match phase {
            Phase::Cos => arg.cos(),
            Phase::Sin => arg.sin(),
        }
    }
}

fn profile_field(
    profiles: &[InitialProfile],
    grid: &Grid,
    components: usize,
) -> Result<RealField, RunnerError> {
    let mut field = RealField::zeros(components, grid.modes());
    for j in 0..components {
        let profile = if profiles.len() == 1 {
            &profiles[0]
        } else {
            &profiles[j]
        };
        let out = field.component_mut(j);
        match profile {
            InitialProfile::Zero => {}
            InitialProfile::Gaussian {
                amplitude,
                width,
                center,
            } => {
                for (p, v) in out.iter_mut().enumerate() {
                    let x = grid.coordinate(p);
                    let d0 = x[0] - center[0];
                    let d1 = if grid.dim() == 2 {
                        x[1] - center[1]
                    } else {
                        0.0
                    };
                    *v = amplitude * (-(d0 * d0 + d1 * d1) / (width * width)).exp();
                }
            }
            InitialProfile::SingleMode {
                amplitude,
                mode,
                phase,
            } => {
                let h = harmonic(grid, *mode, *phase);
                for (p, v) in out.iter_mut().enumerate() {
                    *v = amplitude * h(grid.coordinate(p));
                }
            }
            InitialProfile::File { path, component } => {
                let snap = snapshot::load(path)?;
                if snap.grid != *grid {
                    return Err(RunnerError::Invalid(format!(
                        "{}: snapshot grid differs from the configured grid",
                        path.display()
                    )));
                }
                if *component >= snap.field.components() {
                    return Err(RunnerError::Invalid(format!(
                        "{}: component {component} not present ({} stored)",
                        path.display(),
                        snap.field.components()
                    )));
                }
                out.copy_from_slice(snap.field.component(*component));
            }
        }
    }
    Ok(field)
}

/// Initial spectral state described by the `initial` section.
pub fn initial_state(config: &RunConfig, setup: &Setup) -> Result<State, RunnerError> {
    let n = setup.table.components();
    let u = profile_field(&config.initial.u, &setup.grid, n)?;
    let v = profile_field(&config.initial.ut, &setup.grid, n)?;
    let mut state = State::from_fields(0.0, &u, &v, &setup.transform)?;
    if config.initial.project_mean {
        state.u_hat.project_mean_zero();
        state.v_hat.project_mean_zero();
    }
    Ok(state)
}

/// `amplitude · h(k·x) · cos(ωt)` in every component.
pub struct StandingWave {
    shape: Spectrum,
    omega: f64,
}

impl StandingWave {
    pub fn new(forcing: &ForcingConfig, setup: &Setup) -> Result<Self, RunnerError> {
        let ForcingConfig::StandingWave {
            amplitude,
            mode,
            omega,
            phase,
        } = *forcing;
        let h = harmonic(&setup.grid, mode, phase);
        let field = RealField::from_fn(&setup.grid, setup.table.components(), |x, _| {
            amplitude * h(x)
        })?;
        Ok(StandingWave {
            shape: setup.transform.forward(&field)?,
            omega,
        })
    }
}

impl Forcing for StandingWave {
    fn spectrum(&self, t: f64) -> Spectrum {
        let mut s = Spectrum::zeros(self.shape.components(), self.shape.modes());
        s.add_scaled((self.omega * t).cos(), &self.shape);
        s
    }
}

/// Stepper for the configuration, with its external forcing attached.
pub fn build_stepper(config: &RunConfig) -> Result<Stepper, RunnerError> {
    let setup = Setup::new(config)?;
    let forcing = match &config.forcing {
        Some(f) => Some(StandingWave::new(f, &setup)?),
        None => None,
    };
    let options = PicardOptions {
        tol: config.time.picard_tol,
        max_iter: config.time.max_iter,
        dealias: config.time.dealias,
    };
    let stepper = Stepper::new(setup.table, setup.nl, config.time.dt, options)?;
    Ok(match forcing {
        Some(f) => stepper.with_forcing(Box::new(f)),
        None => stepper,
    })
}

pub fn admissibility(config: &RunConfig) -> Result<AdmissibilityReport, RunnerError> {
    let grid = grid_of(config)?;
    let d = &config.diagnostics;
    Ok(audit_kernel(
        &grid,
        &config.kernel_spec(),
        d.sobolev_order,
        d.sector_angle,
        d.derivative_order,
    )?)
}

fn rejection_summary(report: &AdmissibilityReport) -> String {
    let failed: Vec<String> = report
        .checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{} ({:e})", c.name, c.value))
        .collect();
    failed.join(", ")
}

pub struct AuditOutcome {
    pub report: AdmissibilityReport,
    pub lipschitz: Option<LipschitzReport>,
}

/// Smooth random field: a few low harmonics per component.
fn random_field(
    rng: &mut ChaCha8Rng,
    grid: &Grid,
    components: usize,
    scale: f64,
) -> Result<RealField, CoreError> {
    let terms: Vec<Vec<(f64, [f64; 2], f64)>> = (0..components)
        .map(|_| {
            (1..=4)
                .map(|k| {
                    let mode = if grid.dim() == 1 {
                        [k, 0]
                    } else {
                        [rng.gen_range(-k..=k), rng.gen_range(-k..=k)]
                    };
                    let amp = scale * rng.gen_range(-1.0..1.0) / k as f64;
                    let phase = rng.gen_range(0.0..std::f64::consts::TAU);
                    (amp, wavevector(grid, mode), phase)
                })
                .collect()
        })
        .collect();
    RealField::from_fn(grid, components, |x, j| {
        terms[j]
            .iter()
            .map(|(a, k, p)| a * (k[0] * x[0] + k[1] * x[1] + p).cos())
            .sum()
    })
}

/// Admissibility checks plus a seeded Lipschitz audit of the nonlinearity.
pub fn audit(config: &RunConfig) -> Result<AuditOutcome, RunnerError> {
    let report = admissibility(config)?;
    let grid = grid_of(config)?;
    let nl = config.nonlinearity_spec();
    let transform = SpectralTransform::new(&grid);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.kernel.components;
    let u = random_field(&mut rng, &grid, n, 1.0)?;
    let du = random_field(&mut rng, &grid, n, 0.1)?;
    let v_values = u
        .values()
        .iter()
        .zip(du.values())
        .map(|(a, b)| a + b)
        .collect();
    let v = RealField::new(n, grid.modes(), v_values)?;
    let lipschitz = match lipschitz_audit(&u, &v, &nl, config.diagnostics.sobolev_order, &transform)
    {
        Ok(r) => Some(r),
        Err(e) => {
            warn!("lipschitz audit skipped: {e}");
            None
        }
    };
    Ok(AuditOutcome { report, lipschitz })
}

pub fn audit_text(outcome: &AuditOutcome) -> String {
    let r = &outcome.report;
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k}={v}");
    };
    kv("admissible", r.overall.to_string());
    for c in &r.checks {
        kv(
            &format!("check.{}", c.name),
            format!("{} {:e}", if c.passed { "pass" } else { "fail" }, c.value),
        );
    }
    kv("eta_min", format!("{:e}", r.eta_min));
    kv("eta_at_zero", format!("{:e}", r.eta_at_zero));
    kv("sector_max_arg", format!("{:e}", r.sector_max_arg));
    kv("sector_angle", format!("{:e}", r.sector_angle));
    kv("derivative_order", r.derivative_order.to_string());
    kv(
        "derivative_order_required",
        format!("{:e}", r.derivative_order_required),
    );
    kv("decay_limit", format!("{:e}", r.decay_limit));
    if let Some(d) = r.decay {
        kv("decay_exponent", format!("{:e}", d.exponent));
        kv("decay_amplitude", format!("{:e}", d.amplitude));
        kv("decay_residual", format!("{:e}", d.residual));
        kv("decay_shells", d.shells.to_string());
    }
    if let Some(l) = &outcome.lipschitz {
        kv("lipschitz_ratio", format!("{:e}", l.lipschitz_ratio));
        kv("growth_ratio", format!("{:e}", l.growth_ratio));
        kv("sup_bound", format!("{:e}", l.sup_bound));
        kv(
            "l1_composition_ratio",
            format!("{:e}", l.l1_composition_ratio),
        );
    }
    s
}

/// Per-mode symbol table as CSV.
pub fn dump_symbols(config: &RunConfig) -> Result<String, RunnerError> {
    let setup = Setup::new(config)?;
    let (grid, table) = (&setup.grid, &setup.table);
    let n = table.components();
    let mut s = String::from("mode,k0,k1,xi_abs,a_hat");
    for j in 0..n {
        let _ = write!(s, ",A_hat_{j}");
    }
    s.push_str(",g_hat");
    for j in 0..n {
        let _ = write!(s, ",eta_{j}");
    }
    s.push('\n');
    for m in 0..grid.modes() {
        let [k0, k1] = grid.mode_index(m);
        let _ = write!(
            s,
            "{m},{k0},{k1},{:e},{:e}",
            grid.xi_sq()[m].sqrt(),
            table.a_hat()[m]
        );
        for j in 0..n {
            let _ = write!(s, ",{:e}", table.operator_hat(j)[m]);
        }
        let _ = write!(s, ",{:e}", table.g_hat()[m]);
        for j in 0..n {
            let _ = write!(s, ",{:e}", table.eta(j)[m]);
        }
        s.push('\n');
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunFlags {
    /// Run even when the admissibility audit fails.
    pub force: bool,
}

#[derive(Debug, Clone)]
pub struct ExitReport {
    pub stop: StopReason,
    pub steps: usize,
    pub t_final: f64,
    pub rows: usize,
    pub wall_time: Duration,
    /// Written files, relative to the output directory.
    pub files: Vec<PathBuf>,
    pub out_dir: PathBuf,
    pub admissibility: AdmissibilityReport,
    pub initial_energy: EnergyReport,
    pub certificate: Option<CertificateOutcome>,
    pub final_state: State,
    pub max_iterations: usize,
    pub max_contraction: f64,
}

impl ExitReport {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from_stop(self.stop)
    }

    pub fn manifest(&self) -> String {
        let mut s = String::new();
        let code = self.exit_code();
        let _ = writeln!(s, "status={}", code.label());
        let _ = writeln!(s, "exit_code={}", code.code());
        let _ = writeln!(s, "steps={}", self.steps);
        let _ = writeln!(s, "t_final={:e}", self.t_final);
        let _ = writeln!(s, "rows={}", self.rows);
        let _ = writeln!(s, "max_picard_iterations={}", self.max_iterations);
        let _ = writeln!(s, "max_contraction={:e}", self.max_contraction);
        let _ = writeln!(s, "admissible={}", self.admissibility.overall);
        let _ = writeln!(s, "wall_time_s={:.6}", self.wall_time.as_secs_f64());
        for f in &self.files {
            let _ = writeln!(s, "file={}", f.display());
        }
        s
    }
}

struct RowContext<'a> {
    setup: &'a Setup,
    sobolev_order: f64,
    alpha: f64,
}

impl RowContext<'_> {
    fn row(
        &self,
        state: &State,
        monitor: Option<&mut BlowupMonitor>,
    ) -> Result<DiagnosticsRow, CoreError> {
        let s = self.setup;
        let energy = energy(state, &s.table, &s.nl, &s.transform)?;
        let blowup = match monitor {
            Some(m) => Some(m.update(state, &s.table, &s.nl, &s.transform)?),
            None => None,
        };
        Ok(DiagnosticsRow {
            t: state.t,
            l2_u: state.u_hat.l2_norm(),
            l2_ut: state.v_hat.l2_norm(),
            hs_u: sobolev_norm(&state.u_hat, &s.grid, self.sobolev_order),
            frac_a_u: frac_power_norm(&state.u_hat, &s.table, self.alpha),
            energy,
            blowup,
        })
    }
}

fn numerical_at(t: f64) -> impl Fn(CoreError) -> RunnerError {
    move |source| RunnerError::Numerical { t: Some(t), source }
}

/// Audits, runs and writes `diagnostics.csv`, snapshots, `certificate.txt`
/// (with blow-up monitoring) and `manifest.txt` into `config.output.dir`.
pub fn run_experiment(config: &RunConfig, flags: RunFlags) -> Result<ExitReport, RunnerError> {
    let started = Instant::now();
    let report = admissibility(config)?;
    if !report.overall {
        if flags.force {
            warn!(
                "admissibility audit failed ({}); continuing under --force",
                rejection_summary(&report)
            );
        } else {
            return Err(RunnerError::Rejected(rejection_summary(&report)));
        }
    }
    let stepper = match build_stepper(config) {
        Err(RunnerError::Numerical {
            source: e @ (CoreError::NegativeSymbol { .. } | CoreError::ComplexSymbol { .. }),
            ..
        }) => return Err(RunnerError::Rejected(e.to_string())),
        other => other?,
    };
    let setup = Setup::new(config)?;
    let initial = initial_state(config, &setup)?;
    let initial_energy = energy(&initial, &setup.table, &setup.nl, &setup.transform)?;

    let out_dir = config.output.dir.clone();
    fs::create_dir_all(&out_dir)?;
    let snap_every = config.output.snapshot_cadence;
    if snap_every > 0 {
        fs::create_dir_all(out_dir.join("snapshots"))?;
    }
    let mut files = vec![PathBuf::from("diagnostics.csv")];
    let mut csv = CsvWriter::new(BufWriter::new(File::create(
        out_dir.join("diagnostics.csv"),
    )?))?;
    let mut monitor = match &config.diagnostics.blowup {
        Some(b) => Some(BlowupMonitor::new(b.b, b.t0, initial_energy.e_paper)?),
        None => None,
    };
    let ctx = RowContext {
        setup: &setup,
        sobolev_order: config.diagnostics.sobolev_order,
        alpha: config.diagnostics.alpha,
    };
    let mut rows = 0usize;
    let mut emit = |state: &State,
                    monitor: Option<&mut BlowupMonitor>,
                    rows: &mut usize,
                    files: &mut Vec<PathBuf>|
     -> Result<(), RunnerError> {
        let row = ctx.row(state, monitor).map_err(numerical_at(state.t))?;
        csv.row(&row)?;
        if snap_every > 0 && rows.is_multiple_of(snap_every) {
            let rel = PathBuf::from("snapshots").join(format!("{:04}.bin", *rows / snap_every));
            let to_real = |s| setup.transform.inverse(s).map_err(numerical_at(state.t));
            let (u, ut) = (to_real(&state.u_hat)?, to_real(&state.v_hat)?);
            snapshot::save_checkpoint(&out_dir.join(&rel), &u, &ut, &setup.grid, state.t)?;
            files.push(rel);
        }
        *rows += 1;
        Ok(())
    };
    emit(&initial, monitor.as_mut(), &mut rows, &mut files)?;

    let options = RunOptions {
        t_end: config.time.t_end,
        cadence: config.diagnostics.cadence,
        sup_factor: config.diagnostics.sup_factor,
        sobolev_limit: config.diagnostics.sobolev_limit.map(|limit| SobolevLimit {
            order: config.diagnostics.sobolev_order,
            limit,
        }),
    };
    let mut failure = None;
    let trajectory = run(&stepper, initial, &options, |state, _| {
        if failure.is_none() {
            if let Err(e) = emit(state, monitor.as_mut(), &mut rows, &mut files) {
                failure = Some(e);
            }
        }
    })
    .map_err(|e| RunnerError::Numerical {
        t: Some(e.t),
        source: e.error,
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    csv.finish()?;
    info!(
        "{} after {} steps at t = {}",
        trajectory.stop.label(),
        trajectory.steps,
        trajectory.final_state.t
    );

    let certificate = match (&mut monitor, &config.diagnostics.blowup) {
        (Some(m), Some(b)) => {
            let opts = CertifyOptions {
                nu_min: b.nu_min,
                nu_max: b.nu_max,
                nu_count: b.nu_count,
                tol: b.tol,
                min_window: b.min_window,
            };
            let outcome = match m.certify(&opts) {
                Ok(c) => CertificateOutcome::Decided(c),
                Err(CoreError::InsufficientTrace { samples }) => {
                    CertificateOutcome::InsufficientTrace { samples }
                }
                Err(e) => return Err(e.into()),
            };
            fs::write(out_dir.join("certificate.txt"), certificate_text(&outcome))?;
            files.push(PathBuf::from("certificate.txt"));
            Some(outcome)
        }
        _ => None,
    };

    let report = ExitReport {
        stop: trajectory.stop,
        steps: trajectory.steps,
        t_final: trajectory.final_state.t,
        rows,
        wall_time: started.elapsed(),
        files,
        out_dir: out_dir.clone(),
        admissibility: report,
        initial_energy,
        certificate,
        final_state: trajectory.final_state,
        max_iterations: trajectory.max_iterations,
        max_contraction: trajectory.max_contraction,
    };
    fs::write(out_dir.join("manifest.txt"), report.manifest())?;
    Ok(report)
}

/// Loads a configuration file and overrides the output directory and seed.
pub fn prepare_config(
    path: &Path,
    out: Option<&Path>,
    seed: Option<u64>,
) -> Result<RunConfig, RunnerError> {
    let text = fs::read_to_string(path)?;
    let mut config = crate::config::parse_config(&text, path.parent())?;
    apply_overrides(&mut config, out, seed);
    Ok(config)
}

pub fn apply_overrides(config: &mut RunConfig, out: Option<&Path>, seed: Option<u64>) {
    if let Some(out) = out {
        config.output.dir = out.to_path_buf();
    }
    if let Some(seed) = seed {
        config.seed = seed;
    }
}
