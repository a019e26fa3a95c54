//! Norms, the smoothing operator `B`, energy functionals and the
//! concavity-method blow-up monitor.
//!
//! `B` is the Fourier multiplier `|ξ|⁻¹ ĝ^{−1/2}`, so `B⁻²` is `−Δg∗` and
//! `‖Bw‖² = Σ_{ξ≠0} |ξ|⁻² ĝ⁻¹ |ŵ|²`. It is singular at `ξ = 0`; everything
//! here works on the mean-zero part of the state and reports the zero mode
//! separately.
//!
//! Two energies are tracked:
//!
//! ```text
//! E_paper     = ‖Bu_t‖² + (B[A∗u − a∗Δu], Bu) + (f(u), u)
//! E_conserved = ‖Bu_t‖² + (B[A∗u − a∗Δu], Bu) + 2∫F(u)
//! ```
//!
//! Only the second is a first integral of the flow when `f = λ|u|^γ u`; the
//! two coincide for `λ = 0`.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::nonlinearity::{pairing_eval, potential_eval, NonlinearitySpec};
use crate::propagator::State;
use crate::spectral::{Grid, SpectralTransform, Spectrum};
use crate::sum::pairwise_sum_by;
use crate::symbols::SymbolTable;
use crate::{Error, Result};

/// Relative size below which the zero mode counts as absent.
pub const MEAN_TOL: f64 = 1e-12;

/// `(Σ_ξ (1+|ξ|²)^s |û(ξ)|²)^{1/2}`, summed over components.
pub fn sobolev_norm(spectrum: &Spectrum, grid: &Grid, s: f64) -> f64 {
    let modes = spectrum.modes();
    let xi_sq = grid.xi_sq();
    let c = spectrum.coeffs();
    let weight = |m: usize| {
        if s == 0.0 {
            1.0
        } else {
            (1.0 + xi_sq[m]).powf(s)
        }
    };
    pairwise_sum_by(c.len(), |i| weight(i % modes) * c[i].norm_sqr()).sqrt()
}

/// `L²` norm of `Â_j^α û_j`.
pub fn frac_power_norm(spectrum: &Spectrum, table: &SymbolTable, alpha: f64) -> f64 {
    let modes = spectrum.modes();
    let c = spectrum.coeffs();
    pairwise_sum_by(c.len(), |i| {
        let op = table.operator_hat(i / modes)[i % modes];
        let mult = if op == 0.0 { 0.0 } else { op.powf(alpha) };
        mult * mult * c[i].norm_sqr()
    })
    .sqrt()
}

/// How [`apply_b`] treats a nonzero `ξ = 0` coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeanPolicy {
    /// Reject with [`Error::NonzeroMean`].
    Require,
    /// Drop the zero mode.
    Project,
}

fn check_mean(spectrum: &Spectrum, policy: MeanPolicy) -> Result<()> {
    if policy == MeanPolicy::Project {
        return Ok(());
    }
    let total = spectrum.l2_norm();
    for j in 0..spectrum.components() {
        let magnitude = spectrum.component(j)[0].norm();
        if magnitude > MEAN_TOL * total {
            return Err(Error::NonzeroMean {
                component: j,
                magnitude,
            });
        }
    }
    Ok(())
}

/// Squared multiplier of `B`, `|ξ|⁻² ĝ⁻¹`, with the zero mode set to 0.
fn b_weight(table: &SymbolTable, m: usize) -> f64 {
    let k2 = table.grid().xi_sq()[m];
    if k2 == 0.0 {
        0.0
    } else {
        1.0 / (k2 * table.g_hat()[m])
    }
}

/// `Bu = F⁻¹[|ξ|⁻¹ ĝ^{−1/2} û]`; the zero mode is left at zero.
pub fn apply_b(spectrum: &Spectrum, table: &SymbolTable, policy: MeanPolicy) -> Result<Spectrum> {
    check_mean(spectrum, policy)?;
    let mut out = spectrum.clone();
    let modes = out.modes();
    for (i, c) in out.coeffs_mut().iter_mut().enumerate() {
        *c *= b_weight(table, i % modes).sqrt();
    }
    Ok(out)
}

/// `B⁻¹u = F⁻¹[|ξ| ĝ^{1/2} û]`; annihilates the zero mode.
pub fn apply_b_inv(spectrum: &Spectrum, table: &SymbolTable) -> Spectrum {
    let xi_sq = table.grid().xi_sq();
    let g = table.g_hat();
    let mut out = spectrum.clone();
    let modes = out.modes();
    for (i, c) in out.coeffs_mut().iter_mut().enumerate() {
        let m = i % modes;
        *c *= (xi_sq[m] * g[m]).sqrt();
    }
    out
}

/// `Σ_{ξ≠0} |ξ|⁻²ĝ⁻¹ · weight(j, ξ) · Re(conj(a)·b)`.
fn b_form<W: Fn(usize, usize) -> f64>(
    a: &Spectrum,
    b: &Spectrum,
    table: &SymbolTable,
    weight: W,
) -> f64 {
    let modes = a.modes();
    let (ac, bc) = (a.coeffs(), b.coeffs());
    pairwise_sum_by(ac.len(), |i| {
        let (j, m) = (i / modes, i % modes);
        let w = b_weight(table, m);
        if w == 0.0 {
            0.0
        } else {
            w * weight(j, m) * (ac[i].conj() * bc[i]).re
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub t: f64,
    /// `‖Bu_t‖²`
    pub kinetic: f64,
    /// `(B[A∗u − a∗Δu], Bu) = Σ |ξ|⁻²ĝ⁻¹η²|û|²`
    pub elastic: f64,
    /// `(f(u), u)`
    pub interaction_paper: f64,
    /// `2∫F(u)`
    pub interaction_potential: f64,
    pub e_paper: f64,
    pub e_conserved: f64,
    /// Largest zero-mode modulus removed by the mean-zero projection.
    pub mean_mode: f64,
}

impl EnergyReport {
    /// `E_paper − E_conserved = (f(u),u) − 2∫F(u)`.
    pub fn gap(&self) -> f64 {
        self.interaction_paper - self.interaction_potential
    }

    /// Whether the state carried a mean that had to be projected out.
    pub fn projected(&self) -> bool {
        self.mean_mode > 0.0
    }
}

/// `((f(u), u), 2∫F(u))` for the mean-zero part of `u`; both vanish when `λ = 0`.
fn interaction_terms(
    state: &State,
    nl: &NonlinearitySpec,
    transform: &SpectralTransform,
) -> Result<(f64, f64)> {
    if nl.is_linear() {
        return Ok((0.0, 0.0));
    }
    let mut u_hat = state.u_hat.clone();
    u_hat.project_mean_zero();
    let u = transform.inverse(&u_hat)?;
    let grid = transform.grid();
    Ok((
        pairing_eval(&u, grid, nl)?,
        2.0 * potential_eval(&u, grid, nl)?,
    ))
}

/// Both energy functionals of the mean-zero part of `state`.
pub fn energy(
    state: &State,
    table: &SymbolTable,
    nl: &NonlinearitySpec,
    transform: &SpectralTransform,
) -> Result<EnergyReport> {
    let kinetic = b_form(&state.v_hat, &state.v_hat, table, |_, _| 1.0);
    let elastic = b_form(&state.u_hat, &state.u_hat, table, |j, m| table.eta_sq(j)[m]);
    let (interaction_paper, interaction_potential) = interaction_terms(state, nl, transform)?;
    let mean_mode = state.u_hat.mean_mode().max(state.v_hat.mean_mode());
    Ok(EnergyReport {
        t: state.t,
        kinetic,
        elastic,
        interaction_paper,
        interaction_potential,
        e_paper: kinetic + elastic + interaction_paper,
        e_conserved: kinetic + elastic + interaction_potential,
        mean_mode,
    })
}

/// One monitor sample. `bu_sq`/`but_sq` (`‖Bu‖²`, `‖Bu_t‖²`) are absent
/// for synthetic traces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowupSample {
    pub t: f64,
    pub h: f64,
    pub dh: f64,
    pub d2h: f64,
    pub bu_sq: Option<f64>,
    pub but_sq: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonitorStatus {
    Running,
    Certified,
    Refuted,
}

/// Running trace of `H(t) = ‖Bu‖² + b(t+t₀)²` and its first two derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct BlowupMonitor {
    pub b: f64,
    pub t0: f64,
    /// Initial energy (`E_paper` at the start of the run).
    pub e0: f64,
    pub trace: Vec<BlowupSample>,
    pub status: MonitorStatus,
}

impl BlowupMonitor {
    pub fn new(b: f64, t0: f64, e0: f64) -> Result<Self> {
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::InvalidArgument("blow-up weight b must be positive"));
        }
        if !(t0 > 0.0 && t0.is_finite()) {
            return Err(Error::InvalidArgument("blow-up shift t0 must be positive"));
        }
        Ok(BlowupMonitor {
            b,
            t0,
            e0,
            trace: Vec::new(),
            status: MonitorStatus::Running,
        })
    }

    /// Appends a sample, enforcing strictly increasing time and `H > 0`.
    pub fn push(&mut self, sample: BlowupSample) -> Result<()> {
        if let Some(last) = self.trace.last() {
            if !(sample.t > last.t) {
                return Err(Error::NonMonotoneTime {
                    last: last.t,
                    next: sample.t,
                });
            }
        }
        if !(sample.h > 0.0) {
            return Err(Error::InvalidArgument("H must stay positive"));
        }
        self.trace.push(sample);
        Ok(())
    }

    /// Evaluates `(H, H′, H″)` on `state` and appends it.
    ///
    /// `H″` uses the equation rather than differencing:
    /// `(Bu, Bu_tt) = −Σ|ξ|⁻²ĝ⁻¹η²|û|² − (f(u), u)`.
    pub fn update(
        &mut self,
        state: &State,
        table: &SymbolTable,
        nl: &NonlinearitySpec,
        transform: &SpectralTransform,
    ) -> Result<BlowupSample> {
        check_mean(&state.u_hat, MeanPolicy::Require)?;
        check_mean(&state.v_hat, MeanPolicy::Require)?;
        let bu_sq = b_form(&state.u_hat, &state.u_hat, table, |_, _| 1.0);
        let but_sq = b_form(&state.v_hat, &state.v_hat, table, |_, _| 1.0);
        let cross = b_form(&state.u_hat, &state.v_hat, table, |_, _| 1.0);
        let elastic = b_form(&state.u_hat, &state.u_hat, table, |j, m| table.eta_sq(j)[m]);
        let (pairing, _) = interaction_terms(state, nl, transform)?;
        let shift = state.t + self.t0;
        let sample = BlowupSample {
            t: state.t,
            h: bu_sq + self.b * shift * shift,
            dh: 2.0 * cross + 2.0 * self.b * shift,
            d2h: 2.0 * but_sq + 2.0 * (-elastic - pairing) + 2.0 * self.b,
            bu_sq: Some(bu_sq),
            but_sq: Some(but_sq),
        };
        self.push(sample)?;
        Ok(sample)
    }

    /// Runs [`blowup_certify`] and records the outcome in `status`.
    pub fn certify(&mut self, options: &CertifyOptions) -> Result<Certification> {
        let outcome = blowup_certify(self, options)?;
        self.status = match outcome {
            Certification::Certified(_) => MonitorStatus::Certified,
            Certification::Refuted(_) => MonitorStatus::Refuted,
        };
        Ok(outcome)
    }
}

/// Appends `(H, H′, H″)` for `state` to the monitor.
pub fn blowup_update(
    monitor: &mut BlowupMonitor,
    state: &State,
    table: &SymbolTable,
    nl: &NonlinearitySpec,
    transform: &SpectralTransform,
) -> Result<BlowupSample> {
    monitor.update(state, table, nl, transform)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyOptions {
    pub nu_min: f64,
    pub nu_max: f64,
    /// Number of log-spaced `ν` values scanned.
    pub nu_count: usize,
    /// Relative slack admitted in `H″H − (1+ν)H′² ≥ −tol·|H″H|`.
    pub tol: f64,
    /// Fewest samples a certified window may contain.
    pub min_window: usize,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            nu_min: 1e-3,
            nu_max: 10.0,
            nu_count: 2000,
            tol: 1e-8,
            min_window: 10,
        }
    }
}

impl CertifyOptions {
    fn grid(&self) -> Vec<f64> {
        let n = self.nu_count.max(2);
        let (lo, hi) = (self.nu_min.ln(), self.nu_max.ln());
        (0..n)
            .map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp())
            .collect()
    }
}

/// Side conditions of the energy blow-up criterion at one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SideSample {
    pub t: f64,
    /// `2b − 2E(0) − 4b(1+ν)(t+t₀)`
    pub growth_slack: f64,
    /// `κ₁‖Bu‖² + κ₂‖Bu_t‖² + φ(t) − 4ν‖Bu‖²‖Bu_t‖²`
    pub cross_slack: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SideConditions {
    /// `−E(0) − (1+2ν)b`
    pub energy_slack: f64,
    pub samples: Vec<SideSample>,
    pub min_growth_slack: f64,
    pub min_cross_slack: f64,
    pub all_hold: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlowupCertificate {
    pub nu: f64,
    pub window: (f64, f64),
    pub start_index: usize,
    /// `t_a + H(t_a) / (ν H′(t_a))`, an upper bound on the blow-up time.
    pub t1_bound: f64,
    /// Smallest `(H″H − (1+ν)H′²)/|H″H|` over the window.
    pub min_margin: f64,
    pub b: f64,
    pub t0: f64,
    pub e0: f64,
    /// Present when the trace carries `‖Bu‖²` and `‖Bu_t‖²`.
    pub side_conditions: Option<SideConditions>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Refutation {
    pub reason: &'static str,
    /// Most negative relative concavity margin at `ν = nu_min` over the
    /// candidate window (NaN when no sample had `H′ > 0`).
    pub worst_margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Certification {
    Certified(BlowupCertificate),
    Refuted(Refutation),
}

fn margin(s: &BlowupSample, nu: f64) -> f64 {
    let hh = s.d2h * s.h;
    let gap = hh - (1.0 + nu) * s.dh * s.dh;
    if hh == 0.0 {
        if gap >= 0.0 {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    } else {
        gap / hh.abs()
    }
}

/// Searches for the concavity exponent `ν` on a log grid.
///
/// A start `t_a` with `H(t_a) > 0`, `H′(t_a) > 0` admits a grid `ν` when
/// `H″H − (1+ν)(H′)² ≥ −tol·|H″H|` on every sample from `t_a` on; each
/// admissible pair bounds the blow-up time by `t_a + H(t_a)/(ν H′(t_a))`.
/// The certificate reports the pair with the smallest bound, using the
/// largest admissible `ν` for each start. Starts leaving fewer than
/// `min_window` samples are skipped.
pub fn blowup_certify(monitor: &BlowupMonitor, options: &CertifyOptions) -> Result<Certification> {
    let trace = &monitor.trace;
    if trace.len() < 10 {
        return Err(Error::InsufficientTrace {
            samples: trace.len(),
        });
    }
    let nus = options.grid();
    // samples from `first_ok[i]` on all satisfy the inequality at nus[i];
    // the margin decreases in ν, so first_ok is nondecreasing
    let first_ok: Vec<usize> = nus
        .iter()
        .map(|&nu| {
            trace
                .iter()
                .rposition(|s| margin(s, nu) < -options.tol)
                .map_or(0, |last_bad| last_bad + 1)
        })
        .collect();
    let mut best: Option<(usize, f64, f64)> = None;
    let mut first_candidate = None;
    let last_start = trace.len() - options.min_window.clamp(1, trace.len());
    for (start, s) in trace.iter().enumerate().take(last_start + 1) {
        if !(s.h > 0.0 && s.dh > 0.0) {
            continue;
        }
        first_candidate.get_or_insert(start);
        let admitted = first_ok.partition_point(|&ok| ok <= start);
        if admitted == 0 {
            continue;
        }
        let nu = nus[admitted - 1];
        let bound = s.t + s.h / (nu * s.dh);
        if best.is_none_or(|(_, _, b)| bound < b) {
            best = Some((start, nu, bound));
        }
    }
    if let Some((start, nu, t1_bound)) = best {
        let min_margin = trace[start..]
            .iter()
            .map(|s| margin(s, nu))
            .fold(f64::INFINITY, f64::min);
        return Ok(Certification::Certified(BlowupCertificate {
            nu,
            window: (trace[start].t, trace[trace.len() - 1].t),
            start_index: start,
            t1_bound,
            min_margin,
            b: monitor.b,
            t0: monitor.t0,
            e0: monitor.e0,
            side_conditions: side_conditions(monitor, start, nu),
        }));
    }
    let worst_margin = match first_candidate {
        Some(start) => trace[start..]
            .iter()
            .map(|s| margin(s, nus[0]))
            .fold(f64::INFINITY, f64::min),
        None => f64::NAN,
    };
    Ok(Certification::Refuted(Refutation {
        reason: if first_candidate.is_some() {
            "no scanned nu satisfies the concavity inequality on any tail of the trace"
        } else {
            "H' never positive along the trace"
        },
        worst_margin,
    }))
}

fn side_conditions(monitor: &BlowupMonitor, start: usize, nu: f64) -> Option<SideConditions> {
    let (b, t0, e0) = (monitor.b, monitor.t0, monitor.e0);
    let energy_slack = -e0 - (1.0 + 2.0 * nu) * b;
    let mut samples = Vec::new();
    for s in &monitor.trace[start..] {
        let (x, y) = (s.bu_sq?, s.but_sq?);
        let shift = s.t + t0;
        let kappa1 = 2.0 * b - 2.0 * e0 - 4.0 * b * (1.0 + nu) * shift;
        let kappa2 = 4.0 * b * shift * (shift - (1.0 + nu));
        let phi = 2.0 * b * energy_slack * shift * shift;
        samples.push(SideSample {
            t: s.t,
            growth_slack: kappa1,
            cross_slack: kappa1 * x + kappa2 * y + phi - 4.0 * nu * x * y,
        });
    }
    let min_growth_slack = samples
        .iter()
        .map(|s| s.growth_slack)
        .fold(f64::INFINITY, f64::min);
    let min_cross_slack = samples
        .iter()
        .map(|s| s.cross_slack)
        .fold(f64::INFINITY, f64::min);
    Some(SideConditions {
        energy_slack,
        all_hold: energy_slack >= 0.0 && min_growth_slack >= 0.0 && min_cross_slack >= 0.0,
        samples,
        min_growth_slack,
        min_cross_slack,
    })
}
