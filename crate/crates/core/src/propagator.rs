//! Per-mode propagation with the cosine/sine symbols and the Picard
//! midpoint-Duhamel stepper.
//!
//! Every mode of every component is an oscillator `û'' + η²û = F̂(t)`. Over
//! one step of length `Δt` the variation-of-constants formula gives
//!
//! ```text
//! û⁺ = C·û + S·v̂ + ∫₀^Δt S(Δt−τ) F̂(t+τ) dτ
//! v̂⁺ = −η²S·û + C·v̂ + ∫₀^Δt C(Δt−τ) F̂(t+τ) dτ
//! ```
//!
//! with `C = cos(ηΔt)` and `S = sin(ηΔt)/η`. The forcing is frozen at the
//! step midpoint, so the integrals become `W0·F̂` and `S·F̂` with the exact
//! weight `W0 = (1 − cos ηΔt)/η²`. The nonlinear forcing
//! `N̂(u) = −|ξ|² ĝ DFT(f(u))` is evaluated at the average of the current
//! state and the endpoint iterate, and the endpoint is found by Picard
//! iteration.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::diagnostics::sobolev_norm;
use crate::nonlinearity::{f_eval, NonlinearitySpec};
use crate::spectral::{RealField, SpectralTransform, Spectrum};
use crate::symbols::SymbolTable;
use crate::{Error, Result};

/// Below this value of `ηΔt` the weights `S` and `W0` are evaluated from
/// their Taylor series.
pub const SERIES_THRESHOLD: f64 = 1e-4;

/// Consecutive non-decreasing Picard residuals tolerated before giving up.
const STALL_LIMIT: usize = 3;

/// Spectral state `(û, û_t)` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub u_hat: Spectrum,
    pub v_hat: Spectrum,
}

impl State {
    pub fn new(t: f64, u_hat: Spectrum, v_hat: Spectrum) -> Result<Self> {
        if !u_hat.same_shape(&v_hat) {
            return Err(Error::ShapeMismatch {
                expected: u_hat.coeffs().len(),
                found: v_hat.coeffs().len(),
            });
        }
        if !t.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(State { t, u_hat, v_hat })
    }

    /// Transforms physical data `(u, u_t)` at time `t`.
    pub fn from_fields(
        t: f64,
        u: &RealField,
        v: &RealField,
        transform: &SpectralTransform,
    ) -> Result<Self> {
        State::new(t, transform.forward(u)?, transform.forward(v)?)
    }

    pub fn components(&self) -> usize {
        self.u_hat.components()
    }

    pub fn modes(&self) -> usize {
        self.u_hat.modes()
    }
}

/// Exact one-step trigonometric weights for every mode and component.
#[derive(Debug, Clone, PartialEq)]
pub struct StepWeights {
    dt: f64,
    modes: usize,
    cos: Vec<f64>,
    sin: Vec<f64>,
    w0: Vec<f64>,
    eta_sq: Vec<f64>,
}

/// Builds `C = cos(ηΔt)`, `S = sin(ηΔt)/η` and `W0 = (1−cos ηΔt)/η²`.
///
/// Panics unless `dt` is positive and finite.
pub fn make_weights(table: &SymbolTable, dt: f64) -> StepWeights {
    assert!(dt.is_finite() && dt > 0.0, "time step must be positive");
    let modes = table.modes();
    let n = table.components();
    let mut cos = Vec::with_capacity(n * modes);
    let mut sin = Vec::with_capacity(n * modes);
    let mut w0 = Vec::with_capacity(n * modes);
    let mut eta_sq = Vec::with_capacity(n * modes);
    for j in 0..n {
        for (&eta, &e2) in table.eta(j).iter().zip(table.eta_sq(j)) {
            let theta = eta * dt;
            cos.push(theta.cos());
            if theta < SERIES_THRESHOLD {
                let t2 = theta * theta;
                sin.push(dt * (1.0 - t2 / 6.0 * (1.0 - t2 / 20.0 * (1.0 - t2 / 42.0))));
                w0.push(dt * dt * (0.5 - t2 / 24.0 * (1.0 - t2 / 30.0 * (1.0 - t2 / 56.0))));
            } else {
                sin.push(theta.sin() / eta);
                // 1 − cos θ = 2 sin²(θ/2) without cancellation
                let half = (0.5 * theta).sin();
                w0.push(2.0 * half * half / e2);
            }
            eta_sq.push(e2);
        }
    }
    StepWeights {
        dt,
        modes,
        cos,
        sin,
        w0,
        eta_sq,
    }
}

impl StepWeights {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn cos(&self, j: usize) -> &[f64] {
        &self.cos[j * self.modes..(j + 1) * self.modes]
    }

    /// `S = sin(ηΔt)/η`.
    pub fn sin(&self, j: usize) -> &[f64] {
        &self.sin[j * self.modes..(j + 1) * self.modes]
    }

    /// `W0 = ∫₀^Δt S(s) ds = (1 − cos ηΔt)/η²`.
    pub fn w0(&self, j: usize) -> &[f64] {
        &self.w0[j * self.modes..(j + 1) * self.modes]
    }

    pub fn eta_sq(&self, j: usize) -> &[f64] {
        &self.eta_sq[j * self.modes..(j + 1) * self.modes]
    }

    fn check(&self, state: &State) {
        assert_eq!(
            state.u_hat.coeffs().len(),
            self.cos.len(),
            "state and weights built for different tables"
        );
    }
}

/// Free evolution over one step; exact when the forcing vanishes.
pub fn linear_step(state: &State, w: &StepWeights) -> State {
    w.check(state);
    let mut u = state.u_hat.clone();
    let mut v = state.v_hat.clone();
    for (i, (uu, vv)) in u.coeffs_mut().iter_mut().zip(v.coeffs_mut()).enumerate() {
        let (c, s, e2) = (w.cos[i], w.sin[i], w.eta_sq[i]);
        let (u0, v0) = (*uu, *vv);
        *uu = u0 * c + v0 * s;
        *vv = v0 * c - u0 * (e2 * s);
    }
    State {
        t: state.t + w.dt,
        u_hat: u,
        v_hat: v,
    }
}

/// Time-dependent spectral forcing `F̂(ξ, t)` added to the right-hand side.
pub trait Forcing {
    fn spectrum(&self, t: f64) -> Spectrum;
}

impl<F: Fn(f64) -> Spectrum> Forcing for F {
    fn spectrum(&self, t: f64) -> Spectrum {
        self(t)
    }
}

/// Adds `W0·F̂` to `û` and `S·F̂` to `v̂`.
fn add_impulse(u: &mut Spectrum, v: &mut Spectrum, forcing: &Spectrum, w: &StepWeights) {
    debug_assert!(u.same_shape(forcing));
    let f = forcing.coeffs();
    for (i, (uu, vv)) in u.coeffs_mut().iter_mut().zip(v.coeffs_mut()).enumerate() {
        *uu += f[i] * w.w0[i];
        *vv += f[i] * w.sin[i];
    }
}

/// Linear step plus the midpoint-Duhamel contribution of an external forcing.
pub fn forced_step(state: &State, w: &StepWeights, forcing: &dyn Forcing) -> State {
    let mut next = linear_step(state, w);
    let f = forcing.spectrum(state.t + 0.5 * w.dt);
    add_impulse(&mut next.u_hat, &mut next.v_hat, &f, w);
    next
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardOptions {
    /// Stop once the scaled successive-iterate difference drops below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Apply the 2/3-rule mask to the nonlinear forcing.
    pub dealias: bool,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions {
            tol: 1e-12,
            max_iter: 50,
            dealias: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PicardStats {
    pub iterations: usize,
    /// `sup |û^{(k)} − û^{(k−1)}| / max(1, sup |û_lin|)` at exit, where
    /// `û_lin` is the step's linear (plus external forcing) endpoint.
    pub residual: f64,
    /// Largest ratio of successive residuals (0 with fewer than two).
    pub contraction: f64,
}

/// `N̂(u) = −|ξ|² ĝ DFT(f(u))`, the spectral form of `Δ[g∗f(u)]`.
pub fn nonlinear_forcing(
    u_hat: &Spectrum,
    table: &SymbolTable,
    nl: &NonlinearitySpec,
    transform: &SpectralTransform,
    dealias: bool,
) -> Result<Spectrum> {
    let u = transform.inverse(u_hat)?;
    let fu = f_eval(&u, nl)?;
    let mut out = transform.forward(&fu)?;
    let grid = table.grid();
    let xi_sq = grid.xi_sq();
    let g = table.g_hat();
    for j in 0..out.components() {
        for (m, c) in out.component_mut(j).iter_mut().enumerate() {
            if dealias && !grid.dealias_keep(m) {
                *c = Complex64::new(0.0, 0.0);
            } else {
                *c *= -xi_sq[m] * g[m];
            }
        }
    }
    Ok(out)
}

/// Reusable stepper: symbol table, weights, transform and options for a
/// fixed step size.
pub struct Stepper {
    table: SymbolTable,
    nl: NonlinearitySpec,
    weights: StepWeights,
    transform: SpectralTransform,
    options: PicardOptions,
    forcing: Option<Box<dyn Forcing>>,
}

impl Stepper {
    pub fn new(
        table: SymbolTable,
        nl: NonlinearitySpec,
        dt: f64,
        options: PicardOptions,
    ) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidArgument("time step must be positive"));
        }
        if !(options.tol > 0.0) || options.max_iter == 0 {
            return Err(Error::InvalidArgument(
                "Picard tolerance and iteration cap must be positive",
            ));
        }
        nl.validate(table.components())?;
        let weights = make_weights(&table, dt);
        let transform = SpectralTransform::new(table.grid());
        Ok(Stepper {
            table,
            nl,
            weights,
            transform,
            options,
            forcing: None,
        })
    }

    /// Adds an external forcing evaluated at step midpoints.
    pub fn with_forcing(mut self, forcing: Box<dyn Forcing>) -> Self {
        self.forcing = Some(forcing);
        self
    }

    pub fn table(&self) -> &SymbolTable {
        &self.table
    }

    pub fn nonlinearity(&self) -> &NonlinearitySpec {
        &self.nl
    }

    pub fn transform(&self) -> &SpectralTransform {
        &self.transform
    }

    pub fn weights(&self) -> &StepWeights {
        &self.weights
    }

    pub fn dt(&self) -> f64 {
        self.weights.dt
    }

    pub fn options(&self) -> &PicardOptions {
        &self.options
    }

    /// One step of the configured size.
    pub fn step(&self, state: &State) -> Result<(State, PicardStats)> {
        self.step_with(state, &self.weights)
    }

    /// One step with externally supplied weights (e.g. a shortened final step).
    pub fn step_with(&self, state: &State, w: &StepWeights) -> Result<(State, PicardStats)> {
        picard_iterate(
            state,
            w,
            &self.table,
            &self.nl,
            &self.transform,
            &self.options,
            self.forcing.as_deref(),
        )
    }
}

/// One implicit midpoint-Duhamel step solved by Picard iteration.
///
/// Builds a transform plan per call; use [`Stepper`] inside time loops.
pub fn picard_step(
    state: &State,
    w: &StepWeights,
    table: &SymbolTable,
    nl: &NonlinearitySpec,
    options: &PicardOptions,
) -> Result<(State, PicardStats)> {
    if !(options.tol > 0.0) || options.max_iter == 0 {
        return Err(Error::InvalidArgument(
            "Picard tolerance and iteration cap must be positive",
        ));
    }
    let transform = SpectralTransform::new(table.grid());
    picard_iterate(state, w, table, nl, &transform, options, None)
}

fn picard_iterate(
    state: &State,
    w: &StepWeights,
    table: &SymbolTable,
    nl: &NonlinearitySpec,
    transform: &SpectralTransform,
    options: &PicardOptions,
    forcing: Option<&dyn Forcing>,
) -> Result<(State, PicardStats)> {
    let mut base = linear_step(state, w);
    if let Some(forcing) = forcing {
        let f = forcing.spectrum(state.t + 0.5 * w.dt);
        add_impulse(&mut base.u_hat, &mut base.v_hat, &f, w);
    }
    if nl.is_linear() {
        return Ok((
            base,
            PicardStats {
                iterations: 1,
                residual: 0.0,
                contraction: 0.0,
            },
        ));
    }
    let scale = base.u_hat.sup_norm().max(1.0);
    let eval = |u_hat: &Spectrum| nonlinear_forcing(u_hat, table, nl, transform, options.dealias);
    let endpoint = |n_hat: &Spectrum| {
        let mut u = base.u_hat.clone();
        for (i, (uu, f)) in u.coeffs_mut().iter_mut().zip(n_hat.coeffs()).enumerate() {
            *uu += f * w.w0[i];
        }
        u
    };

    // explicit predictor: forcing frozen at the current state
    let mut iterate = endpoint(&eval(&state.u_hat)?);
    let mut midpoint = Spectrum::zeros(state.components(), state.modes());
    let mut previous = f64::INFINITY;
    let mut stalled = 0;
    let mut contraction = 0.0f64;
    for k in 1..=options.max_iter {
        for ((m, a), b) in midpoint
            .coeffs_mut()
            .iter_mut()
            .zip(state.u_hat.coeffs())
            .zip(iterate.coeffs())
        {
            *m = (a + b) * 0.5;
        }
        let n_hat = match eval(&midpoint) {
            Ok(n) => n,
            Err(Error::Overflow { .. }) => {
                return Err(Error::NonContraction {
                    iterations: k,
                    residual: f64::INFINITY,
                })
            }
            Err(e) => return Err(e),
        };
        let next = endpoint(&n_hat);
        let diff = next
            .coeffs()
            .iter()
            .zip(iterate.coeffs())
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).norm()));
        let residual = diff / scale;
        iterate = next;
        if !residual.is_finite() {
            return Err(Error::NonContraction {
                iterations: k,
                residual,
            });
        }
        if previous.is_finite() && previous > 0.0 {
            contraction = contraction.max(residual / previous);
        }
        if residual < options.tol {
            let mut v = base.v_hat;
            for (i, (vv, f)) in v.coeffs_mut().iter_mut().zip(n_hat.coeffs()).enumerate() {
                *vv += f * w.sin[i];
            }
            let next_state = State {
                t: base.t,
                u_hat: iterate,
                v_hat: v,
            };
            return Ok((
                next_state,
                PicardStats {
                    iterations: k,
                    residual,
                    contraction,
                },
            ));
        }
        if residual >= previous {
            stalled += 1;
            if stalled >= STALL_LIMIT {
                return Err(Error::NonContraction {
                    iterations: k,
                    residual,
                });
            }
        } else {
            stalled = 0;
        }
        previous = residual;
    }
    Err(Error::MaxIterExceeded {
        iterations: options.max_iter,
        residual: previous,
    })
}

/// Optional Sobolev-norm stop trigger.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevLimit {
    pub order: f64,
    pub limit: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub t_end: f64,
    /// Record every `cadence`-th step (the final step is always recorded).
    pub cadence: usize,
    /// Stop once `‖u‖_∞` exceeds this multiple of its initial value.
    pub sup_factor: Option<f64>,
    pub sobolev_limit: Option<SobolevLimit>,
}

impl RunOptions {
    pub fn until(t_end: f64) -> Self {
        RunOptions {
            t_end,
            cadence: 1,
            sup_factor: Some(1e8),
            sobolev_limit: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Completed,
    SupNormThreshold,
    SobolevThreshold,
    NonContraction,
}

impl StopReason {
    pub fn label(self) -> &'static str {
        match self {
            StopReason::Completed => "completed",
            StopReason::SupNormThreshold => "stopped: norm threshold",
            StopReason::SobolevThreshold => "stopped: sobolev threshold",
            StopReason::NonContraction => "stopped: non-contraction",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub sup_norm: f64,
    pub stats: PicardStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub final_state: State,
    pub stop: StopReason,
    pub steps: usize,
    pub samples: Vec<TrajectorySample>,
    pub max_iterations: usize,
    pub max_residual: f64,
    pub max_contraction: f64,
}

/// Stepper failure together with the time the failing step started from.
#[derive(Debug, Clone, PartialEq)]
pub struct RunError {
    pub t: f64,
    pub error: Error,
}

impl core::fmt::Display for RunError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "at t = {}: {}", self.t, self.error)
    }
}

impl core::error::Error for RunError {}

/// Advances `initial` to `options.t_end` or until a stop trigger fires.
///
/// `observe` sees every recorded state (not the initial one). A final step
/// that does not fit a whole `Δt` is shortened to land on `t_end`.
pub fn run<F>(
    stepper: &Stepper,
    initial: State,
    options: &RunOptions,
    mut observe: F,
) -> core::result::Result<Trajectory, RunError>
where
    F: FnMut(&State, &PicardStats),
{
    let fail = |t: f64| move |error: Error| RunError { t, error };
    let t0 = initial.t;
    let dt = stepper.dt();
    let mut trajectory = Trajectory {
        final_state: initial,
        stop: StopReason::Completed,
        steps: 0,
        samples: Vec::new(),
        max_iterations: 0,
        max_residual: 0.0,
        max_contraction: 0.0,
    };
    let span = options.t_end - t0;
    if !(span > 0.0) {
        return Ok(trajectory);
    }
    let cadence = options.cadence.max(1);
    let steps = (span / dt - 1e-9).ceil().max(1.0) as usize;
    let last_dt = span - (steps - 1) as f64 * dt;
    let last_weights = if (last_dt - dt).abs() > 1e-12 * dt {
        Some(make_weights(stepper.table(), last_dt))
    } else {
        None
    };
    let transform = stepper.transform();
    let sup_of = |s: &State| -> Result<f64> { Ok(transform.inverse(&s.u_hat)?.sup_norm()) };
    let sup_limit = match options.sup_factor {
        Some(factor) => {
            let initial_sup = sup_of(&trajectory.final_state).map_err(fail(t0))?;
            Some(factor * initial_sup)
        }
        None => None,
    };
    let grid = stepper.table().grid().clone();

    for k in 1..=steps {
        let current = &trajectory.final_state;
        let weights = match (&last_weights, k == steps) {
            (Some(w), true) => w,
            _ => stepper.weights(),
        };
        let (mut next, stats) = match stepper.step_with(current, weights) {
            Ok(ok) => ok,
            Err(Error::NonContraction { .. }) => {
                trajectory.stop = StopReason::NonContraction;
                return Ok(trajectory);
            }
            Err(e) => return Err(fail(current.t)(e)),
        };
        next.t = if k == steps {
            options.t_end
        } else {
            t0 + k as f64 * dt
        };
        trajectory.steps = k;
        trajectory.max_iterations = trajectory.max_iterations.max(stats.iterations);
        trajectory.max_residual = trajectory.max_residual.max(stats.residual);
        trajectory.max_contraction = trajectory.max_contraction.max(stats.contraction);

        let sup = sup_of(&next).map_err(fail(next.t))?;
        let mut stop = None;
        if sup_limit.is_some_and(|limit| sup > limit) {
            stop = Some(StopReason::SupNormThreshold);
        } else if let Some(lim) = options.sobolev_limit {
            if sobolev_norm(&next.u_hat, &grid, lim.order) > lim.limit {
                stop = Some(StopReason::SobolevThreshold);
            }
        }
        if k % cadence == 0 || k == steps || stop.is_some() {
            trajectory.samples.push(TrajectorySample {
                t: next.t,
                sup_norm: sup,
                stats,
            });
            observe(&next, &stats);
        }
        trajectory.final_state = next;
        if let Some(reason) = stop {
            trajectory.stop = reason;
            return Ok(trajectory);
        }
    }
    Ok(trajectory)
}

/// Per-mode invariant `η²|û|² + |v̂|²` summed over modes and components.
pub fn quadratic_invariant(state: &State, table: &SymbolTable) -> f64 {
    let modes = state.modes();
    let mut terms = vec![0.0; state.u_hat.coeffs().len()];
    for j in 0..state.components() {
        let e2 = table.eta_sq(j);
        let u = state.u_hat.component(j);
        let v = state.v_hat.component(j);
        for m in 0..modes {
            terms[j * modes + m] = e2[m] * u[m].norm_sqr() + v[m].norm_sqr();
        }
    }
    crate::sum::pairwise_sum(&terms)
}
