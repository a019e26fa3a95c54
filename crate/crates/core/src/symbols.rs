//! Kernel symbols `â`, `Â_j`, `ĝ`, the frequency table `η_j` and the
//! numerical admissibility audit.
//!
//! Symbols are specified directly in Fourier space from named families; no
//! physical-space kernel is ever assembled. The operator `A` is diagonal in
//! components.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
// libm-backed float math; redundant whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;

use crate::spectral::Grid;
use crate::{Error, Result};

/// Symbol `â` multiplying `|ξ|²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LaplacianSymbol {
    /// `â ≡ c`, `c ≥ 0`.
    Constant { c: f64 },
    /// `â = exp(−|ξ|²/w)`.
    Gaussian { width: f64 },
    /// `â = (1+|ξ|²)^{−q/2}`.
    Rational { q: f64 },
}

/// Bounded nonnegative radial profile `b̂(ξ)` used by the dyadic family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// `b̂ ≡ 1`
    One,
    /// `b̂ = exp(−|ξ|²)`
    Gaussian,
    /// `b̂ = (1+|ξ|²)^{−1}`
    Lorentzian,
}

impl Profile {
    pub fn eval(self, xi_sq: f64) -> f64 {
        match self {
            Profile::One => 1.0,
            Profile::Gaussian => (-xi_sq).exp(),
            Profile::Lorentzian => 1.0 / (1.0 + xi_sq),
        }
    }
}

/// Symbol `Â_j` of the operator acting on one component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorSymbol {
    /// `Â ≡ m²`.
    Constant { m2: f64 },
    /// `Â_j = b̂(ξ)·2^{σ·level}` where `level` defaults to the 1-based
    /// component index.
    Dyadic {
        profile: Profile,
        sigma: f64,
        level: Option<u32>,
    },
    /// `Â = |ξ|²(1+|ξ|²)^{−1}`.
    Rational,
    /// Constant complex `Â ≡ modulus·e^{i·arg}`. Only the admissibility audit
    /// accepts a nonzero argument.
    Sectorial { modulus: f64, arg: f64 },
}

/// `ĝ = c_g (1+|ξ|²)^{−r/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingSymbol {
    pub c_g: f64,
    pub r: f64,
}

impl SmoothingSymbol {
    pub fn eval(&self, xi_sq: f64) -> f64 {
        if self.r == 0.0 {
            self.c_g
        } else {
            self.c_g * (1.0 + xi_sq).powf(-0.5 * self.r)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    pub components: usize,
    pub laplacian: LaplacianSymbol,
    /// Either one entry applied to every component or exactly `components` entries.
    pub operator: Vec<OperatorSymbol>,
    pub smoothing: SmoothingSymbol,
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        if self.components == 0 {
            return Err(Error::InvalidKernel("at least one component required"));
        }
        if self.operator.len() != 1 && self.operator.len() != self.components {
            return Err(Error::InvalidKernel(
                "operator list must have one entry or one per component",
            ));
        }
        match self.laplacian {
            LaplacianSymbol::Constant { c } if !(c.is_finite() && c >= 0.0) => {
                return Err(Error::InvalidKernel(
                    "laplacian constant must be finite and >= 0",
                ))
            }
            LaplacianSymbol::Gaussian { width } if !(width.is_finite() && width > 0.0) => {
                return Err(Error::InvalidKernel("gaussian width must be positive"))
            }
            LaplacianSymbol::Rational { q } if !(q.is_finite() && q >= 0.0) => {
                return Err(Error::InvalidKernel("rational exponent q must be >= 0"))
            }
            _ => {}
        }
        for op in &self.operator {
            match *op {
                OperatorSymbol::Constant { m2 } if !m2.is_finite() => {
                    return Err(Error::InvalidKernel("operator constant must be finite"))
                }
                OperatorSymbol::Dyadic { sigma, .. } if !(sigma.is_finite() && sigma > 0.0) => {
                    return Err(Error::InvalidKernel("dyadic sigma must be positive"))
                }
                OperatorSymbol::Sectorial { modulus, arg }
                    if !(modulus.is_finite() && modulus >= 0.0 && arg.is_finite()) =>
                {
                    return Err(Error::InvalidKernel(
                        "sectorial symbol needs finite modulus >= 0",
                    ))
                }
                _ => {}
            }
        }
        let g = self.smoothing;
        if !(g.c_g.is_finite() && g.c_g > 0.0) {
            return Err(Error::InvalidKernel(
                "smoothing amplitude c_g must be positive",
            ));
        }
        if !(g.r.is_finite() && g.r >= 0.0) {
            return Err(Error::InvalidKernel("smoothing decay r must be >= 0"));
        }
        Ok(())
    }

    pub fn operator_for(&self, component: usize) -> OperatorSymbol {
        if self.operator.len() == 1 {
            self.operator[0]
        } else {
            self.operator[component]
        }
    }

    pub fn laplacian_at(&self, xi_sq: f64) -> f64 {
        match self.laplacian {
            LaplacianSymbol::Constant { c } => c,
            LaplacianSymbol::Gaussian { width } => (-xi_sq / width).exp(),
            LaplacianSymbol::Rational { q } => (1.0 + xi_sq).powf(-0.5 * q),
        }
    }

    /// Complex value of `Â_j(ξ)` for a 0-based component index.
    pub fn operator_at(&self, component: usize, xi_sq: f64) -> Complex64 {
        match self.operator_for(component) {
            OperatorSymbol::Constant { m2 } => Complex64::new(m2, 0.0),
            OperatorSymbol::Dyadic {
                profile,
                sigma,
                level,
            } => {
                let level = level.unwrap_or(component as u32 + 1) as f64;
                Complex64::new(profile.eval(xi_sq) * (sigma * level).exp2(), 0.0)
            }
            OperatorSymbol::Rational => Complex64::new(xi_sq / (1.0 + xi_sq), 0.0),
            OperatorSymbol::Sectorial { modulus, arg } => Complex64::from_polar(modulus, arg),
        }
    }
}

/// Per-mode symbol values on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolTable {
    grid: Grid,
    components: usize,
    a_hat: Vec<f64>,
    g_hat: Vec<f64>,
    operator_hat: Vec<f64>,
    eta: Vec<f64>,
    eta_sq: Vec<f64>,
}

/// Builds the stepper table. Requires real `â|ξ|² + Â_j ≥ 0` everywhere.
pub fn build_symbol_table(grid: &Grid, spec: &KernelSpec) -> Result<SymbolTable> {
    build(grid, spec, false)
}

fn build(grid: &Grid, spec: &KernelSpec, audit: bool) -> Result<SymbolTable> {
    spec.validate()?;
    let modes = grid.modes();
    let n = spec.components;
    let xi_sq = grid.xi_sq();
    let a_hat: Vec<f64> = xi_sq.iter().map(|&k2| spec.laplacian_at(k2)).collect();
    let g_hat: Vec<f64> = xi_sq.iter().map(|&k2| spec.smoothing.eval(k2)).collect();
    let mut operator_hat = vec![0.0; n * modes];
    let mut eta_sq = vec![0.0; n * modes];
    for j in 0..n {
        if !audit {
            if let OperatorSymbol::Sectorial { arg, .. } = spec.operator_for(j) {
                if arg != 0.0 {
                    return Err(Error::ComplexSymbol { component: j });
                }
            }
        }
        for m in 0..modes {
            let op = spec.operator_at(j, xi_sq[m]);
            let total = op + a_hat[m] * xi_sq[m];
            let value = if audit { total.norm() } else { total.re };
            if !audit && value < 0.0 {
                return Err(Error::NegativeSymbol {
                    component: j,
                    mode: m,
                    value,
                });
            }
            operator_hat[j * modes + m] = if audit { op.norm() } else { op.re };
            eta_sq[j * modes + m] = value;
        }
    }
    let eta = eta_sq.iter().map(|v| v.sqrt()).collect();
    Ok(SymbolTable {
        grid: grid.clone(),
        components: n,
        a_hat,
        g_hat,
        operator_hat,
        eta,
        eta_sq,
    })
}

impl SymbolTable {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn modes(&self) -> usize {
        self.a_hat.len()
    }

    pub fn a_hat(&self) -> &[f64] {
        &self.a_hat
    }

    pub fn g_hat(&self) -> &[f64] {
        &self.g_hat
    }

    /// `Â_j` for component `j`.
    pub fn operator_hat(&self, j: usize) -> &[f64] {
        let m = self.modes();
        &self.operator_hat[j * m..(j + 1) * m]
    }

    pub fn eta(&self, j: usize) -> &[f64] {
        let m = self.modes();
        &self.eta[j * m..(j + 1) * m]
    }

    /// Replaces `Â_j` (and `η_j`) with raw per-mode values.
    #[cfg(test)]
    pub(crate) fn with_operator(mut self, j: usize, values: &[f64]) -> Self {
        let m = self.modes();
        let xi_sq = self.grid.xi_sq().to_vec();
        for (k, &v) in values.iter().enumerate() {
            self.operator_hat[j * m + k] = v;
            self.eta_sq[j * m + k] = self.a_hat[k] * xi_sq[k] + v;
            self.eta[j * m + k] = self.eta_sq[j * m + k].sqrt();
        }
        self
    }

    /// `η_j²`, stored exactly as `â|ξ|² + Â_j` (no square-root roundtrip).
    pub fn eta_sq(&self, j: usize) -> &[f64] {
        let m = self.modes();
        &self.eta_sq[j * m..(j + 1) * m]
    }
}

/// Least-squares fit of `ĝ ≈ c_g (1+|ξ|²)^{−r/2}` over distinct `|ξ|` shells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub exponent: f64,
    pub amplitude: f64,
    /// RMS residual of the log–log fit.
    pub residual: f64,
    pub shells: usize,
}

/// Fits `log ĝ` against `log(1+|ξ|²)`; `r̂ = −2·slope`.
pub fn fit_decay_exponent(g_hat: &[f64], grid: &Grid) -> Result<DecayFit> {
    if g_hat.len() != grid.modes() {
        return Err(Error::ShapeMismatch {
            expected: grid.modes(),
            found: g_hat.len(),
        });
    }
    let samples: Vec<(f64, f64)> = grid
        .xi_sq()
        .iter()
        .zip(g_hat)
        .map(|(&k2, &g)| (k2, g))
        .collect();
    fit_decay_samples(samples)
}

/// Decay fit from explicit `(|ξ|², ĝ)` samples.
pub fn fit_decay_samples(mut samples: Vec<(f64, f64)>) -> Result<DecayFit> {
    if samples.iter().any(|&(_, g)| !(g > 0.0 && g.is_finite())) {
        return Err(Error::InvalidArgument(
            "decay fit needs a positive finite symbol",
        ));
    }
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    // one sample per shell, averaged when the symbol is not exactly radial
    let mut shells: Vec<(f64, f64)> = Vec::new();
    let mut start = 0;
    while start < samples.len() {
        let k2 = samples[start].0;
        let mut end = start;
        let mut acc = 0.0;
        while end < samples.len() && (samples[end].0 - k2).abs() <= 1e-12 * (1.0 + k2) {
            acc += samples[end].1.ln();
            end += 1;
        }
        shells.push(((1.0 + k2).ln(), acc / (end - start) as f64));
        start = end;
    }
    if shells.len() < 3 {
        return Err(Error::DegenerateFit {
            shells: shells.len(),
        });
    }
    let count = shells.len() as f64;
    let mean_x = shells.iter().map(|s| s.0).sum::<f64>() / count;
    let mean_y = shells.iter().map(|s| s.1).sum::<f64>() / count;
    let sxx: f64 = shells.iter().map(|s| (s.0 - mean_x) * (s.0 - mean_x)).sum();
    let sxy: f64 = shells.iter().map(|s| (s.0 - mean_x) * (s.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let sse: f64 = shells
        .iter()
        .map(|s| {
            let e = s.1 - (intercept + slope * s.0);
            e * e
        })
        .sum();
    Ok(DecayFit {
        exponent: -2.0 * slope,
        amplitude: intercept.exp(),
        residual: (sse / count).sqrt(),
        shells: shells.len(),
    })
}

/// Outcome of one admissibility check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    /// `η_j(ξ) > 0` for every `ξ ≠ 0` and every component.
    pub eta_nonzero: bool,
    /// `min η_j(ξ)` over `ξ ≠ 0`.
    pub eta_min: f64,
    /// `min_j η_j(0)`; the zero mode is handled by mean projection.
    pub eta_at_zero: f64,
    pub g_positive: bool,
    pub sector_ok: bool,
    pub sector_max_arg: f64,
    pub sector_angle: f64,
    /// Approximate `sup (1+|ξ|²)^{−(s/2−2)} |D^β â|` for `|β| ≤ derivative_order`
    /// (central differences on the mode lattice).
    pub derivative_bound: f64,
    pub derivative_order: usize,
    /// Order `1 + n/2` the smoothness requirement asks for; reported, not certified.
    pub derivative_order_required: f64,
    /// Approximate `sup |D^β Â_j| η_j^{−1/2}` over `ξ ≠ 0`, one sample of the γ range.
    pub operator_growth_bound: f64,
    pub decay: Option<DecayFit>,
    /// Largest admissible decay exponent `2(s+1)`.
    pub decay_limit: f64,
    pub checks: Vec<Check>,
    pub overall: bool,
}

/// Audits a stepper table against the admissibility conditions.
///
/// `order` caps the derivative order audited (further capped by the grid
/// dimension). `sector_angle` is the half-angle `φ` of the sector the
/// operator symbol must lie in.
pub fn check_admissibility(
    table: &SymbolTable,
    spec: &KernelSpec,
    s: f64,
    sector_angle: f64,
    order: usize,
) -> AdmissibilityReport {
    let grid = table.grid();
    let modes = grid.modes();
    let xi_sq = grid.xi_sq();

    let mut eta_min = f64::INFINITY;
    let mut eta_at_zero = f64::INFINITY;
    let mut eta_max = 0.0f64;
    for j in 0..table.components() {
        for (m, &e) in table.eta(j).iter().enumerate() {
            eta_max = eta_max.max(e);
            if xi_sq[m] == 0.0 {
                eta_at_zero = eta_at_zero.min(e);
            } else {
                eta_min = eta_min.min(e);
            }
        }
    }
    let eta_floor = f64::EPSILON * eta_max.max(1.0);
    let eta_nonzero = eta_min > eta_floor;

    let g_min = table.g_hat().iter().cloned().fold(f64::INFINITY, f64::min);
    let g_positive = g_min > 0.0;

    let mut sector_max_arg = 0.0f64;
    for j in 0..table.components() {
        for &k2 in xi_sq {
            let z = spec.operator_at(j, k2);
            if z.norm() > 0.0 {
                sector_max_arg = sector_max_arg.max(z.arg().abs());
            }
        }
    }
    let sector_ok = sector_max_arg <= sector_angle;

    let derivative_order = order.min(grid.dim());
    let weight = |k2: f64| (1.0 + k2).powf(-(0.5 * s - 2.0));
    let mut derivative_bound = 0.0f64;
    for m in 0..modes {
        for d in lattice_derivatives(grid, table.a_hat(), m, derivative_order) {
            derivative_bound = derivative_bound.max(weight(xi_sq[m]) * d.abs());
        }
    }

    let mut operator_growth_bound = 0.0f64;
    for j in 0..table.components() {
        let op = table.operator_hat(j);
        let eta = table.eta(j);
        for m in 0..modes {
            if xi_sq[m] == 0.0 || eta[m] <= eta_floor {
                continue;
            }
            for d in lattice_derivatives(grid, op, m, grid.dim()) {
                operator_growth_bound = operator_growth_bound.max(d.abs() / eta[m].sqrt());
            }
        }
    }

    let decay = if g_positive {
        fit_decay_exponent(table.g_hat(), grid).ok()
    } else {
        None
    };
    let decay_limit = 2.0 * (s + 1.0);

    let checks = vec![
        Check {
            name: "eta_nonzero",
            passed: eta_nonzero,
            value: eta_min,
        },
        Check {
            name: "g_positive",
            passed: g_positive,
            value: g_min,
        },
        Check {
            name: "sector",
            passed: sector_ok,
            value: sector_max_arg,
        },
        Check {
            name: "derivative_bound",
            passed: derivative_bound.is_finite(),
            value: derivative_bound,
        },
        Check {
            name: "operator_growth_bound",
            passed: operator_growth_bound.is_finite(),
            value: operator_growth_bound,
        },
        Check {
            name: "g_decay",
            passed: decay
                .is_some_and(|d| d.exponent.is_finite() && d.exponent <= decay_limit + 1e-9),
            value: decay.map_or(f64::NAN, |d| d.exponent),
        },
    ];
    let overall = checks.iter().all(|c| c.passed);
    AdmissibilityReport {
        eta_nonzero,
        eta_min,
        eta_at_zero,
        g_positive,
        sector_ok,
        sector_max_arg,
        sector_angle,
        derivative_bound,
        derivative_order,
        derivative_order_required: 1.0 + grid.dim() as f64 / 2.0,
        operator_growth_bound,
        decay,
        decay_limit,
        checks,
        overall,
    }
}

/// Audit path that also accepts complex (sectorial) operator symbols: the
/// table stores moduli, so `η_j = |â|ξ|² + Â_j|^{1/2}`.
pub fn audit_kernel(
    grid: &Grid,
    spec: &KernelSpec,
    s: f64,
    sector_angle: f64,
    order: usize,
) -> Result<AdmissibilityReport> {
    let table = build(grid, spec, true)?;
    Ok(check_admissibility(&table, spec, s, sector_angle, order))
}

/// Default sector half-angle: the closed right half-plane.
pub const DEFAULT_SECTOR_ANGLE: f64 = PI / 2.0;

// Central-difference derivatives D^β of `values` at `mode` for 1 ≤ |β| ≤ order
// (plus the value itself for β = 0). Stencils never wrap across the Nyquist
// seam; modes at the lattice edge only report the derivatives they support.
fn lattice_derivatives(grid: &Grid, values: &[f64], mode: usize, order: usize) -> Vec<f64> {
    let mut out = vec![values[mode]];
    if order == 0 {
        return out;
    }
    let half = grid.points() as i64 / 2;
    let step = grid.wavenumber_unit();
    let idx = grid.mode_index(mode);
    let inside = |k: i64| k > -half && k < half - 1;
    let at = |k: [i64; 2]| values[grid.mode_at(k)];
    for axis in 0..grid.dim() {
        if inside(idx[axis]) {
            let mut plus = idx;
            let mut minus = idx;
            plus[axis] += 1;
            minus[axis] -= 1;
            out.push((at(plus) - at(minus)) / (2.0 * step));
        }
    }
    if order >= 2 && grid.dim() == 2 && inside(idx[0]) && inside(idx[1]) {
        let d = |a: i64, b: i64| at([idx[0] + a, idx[1] + b]);
        out.push((d(1, 1) - d(1, -1) - d(-1, 1) + d(-1, -1)) / (4.0 * step * step));
    }
    out
}
