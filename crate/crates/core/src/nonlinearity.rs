//! Power nonlinearities `f(u) = λ|w|^γ w` with `w = C·u`, their potentials
//! and empirical composition-operator audits.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::diagnostics::sobolev_norm;
use crate::spectral::{Grid, RealField, SpectralTransform};
use crate::sum::pairwise_sum_by;
use crate::{Error, Result};

/// Magnitude beyond which evaluation reports [`Error::Overflow`].
pub const OVERFLOW_LIMIT: f64 = 1e100;

#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearitySpec {
    /// Coupling `λ`; negative values are focusing.
    pub lambda: f64,
    /// Growth index `γ ≥ 1`.
    pub gamma: u32,
    /// Row-major `N×N` mixing matrix; `None` is the identity.
    pub coupling: Option<Vec<f64>>,
}

impl NonlinearitySpec {
    pub fn power(lambda: f64, gamma: u32) -> Self {
        NonlinearitySpec {
            lambda,
            gamma,
            coupling: None,
        }
    }

    pub fn validate(&self, components: usize) -> Result<()> {
        if self.gamma < 1 {
            return Err(Error::InvalidArgument("growth index gamma must be >= 1"));
        }
        if !self.lambda.is_finite() {
            return Err(Error::InvalidArgument("coupling lambda must be finite"));
        }
        if let Some(c) = &self.coupling {
            if c.len() != components * components {
                return Err(Error::ShapeMismatch {
                    expected: components * components,
                    found: c.len(),
                });
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(
                    "coupling matrix entries must be finite",
                ));
            }
        }
        Ok(())
    }

    /// `f ≡ 0`.
    pub fn is_linear(&self) -> bool {
        self.lambda == 0.0
    }

    /// Scalar branch `λ|w|^γ w`.
    pub fn scalar(&self, w: f64) -> f64 {
        self.lambda * w.abs().powi(self.gamma as i32) * w
    }

    /// Scalar potential `λ|w|^{γ+2}/(γ+2)`.
    pub fn scalar_potential(&self, w: f64) -> f64 {
        let p = self.gamma as i32 + 2;
        self.lambda * w.abs().powi(p) / p as f64
    }

    fn mixed(&self, u: &RealField) -> Result<RealField> {
        check_range(u.values())?;
        let Some(c) = &self.coupling else {
            return Ok(u.clone());
        };
        let n = u.components();
        if c.len() != n * n {
            return Err(Error::ShapeMismatch {
                expected: n * n,
                found: c.len(),
            });
        }
        let modes = u.modes();
        let mut w = RealField::zeros(n, modes);
        for i in 0..n {
            for k in 0..n {
                let cik = c[i * n + k];
                if cik == 0.0 {
                    continue;
                }
                let src = u.component(k);
                for (dst, &s) in w.component_mut(i).iter_mut().zip(src) {
                    *dst += cik * s;
                }
            }
        }
        check_range(w.values())?;
        Ok(w)
    }
}

fn check_range(values: &[f64]) -> Result<()> {
    let magnitude = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(magnitude <= OVERFLOW_LIMIT) {
        return Err(Error::Overflow { magnitude });
    }
    Ok(())
}

/// Pointwise `f(u)`.
pub fn f_eval(u: &RealField, spec: &NonlinearitySpec) -> Result<RealField> {
    let mut w = spec.mixed(u)?;
    for v in w.values_mut() {
        *v = spec.scalar(*v);
    }
    Ok(w)
}

/// Grid quadrature of `Σ_j F(w_j)`, `F(w) = λ|w|^{γ+2}/(γ+2)`.
///
/// With identity coupling this is the exact potential of [`f_eval`].
pub fn potential_eval(u: &RealField, grid: &Grid, spec: &NonlinearitySpec) -> Result<f64> {
    let w = spec.mixed(u)?;
    let values = w.values();
    Ok(grid.cell_volume() * pairwise_sum_by(values.len(), |i| spec.scalar_potential(values[i])))
}

/// Grid quadrature of `(f(u), u)`.
pub fn pairing_eval(u: &RealField, grid: &Grid, spec: &NonlinearitySpec) -> Result<f64> {
    let f = f_eval(u, spec)?;
    Ok(f.inner(u, grid.cell_volume()))
}

/// Empirical composition-operator ratios for one pair `(u, v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzReport {
    /// `‖f(u) − f(v)‖_s / ‖u − v‖_s`.
    pub lipschitz_ratio: f64,
    /// `‖f(u)‖_s / ‖u‖_s` (0 when `u ≡ 0`).
    pub growth_ratio: f64,
    /// `max(‖u‖_∞, ‖v‖_∞)`.
    pub sup_bound: f64,
    /// `‖f(u)‖_{L¹} / (‖u‖²_{L²} ‖u‖_∞^{γ−1})`, the stated form of the
    /// `L¹` composition bound at exponent 2.
    pub l1_composition_ratio: f64,
}

/// Ratios of `W^{s,2}` norms certifying the local Lipschitz and growth
/// bounds of `f` on one pair of fields. No pass/fail is attached.
pub fn lipschitz_audit(
    u: &RealField,
    v: &RealField,
    spec: &NonlinearitySpec,
    s: f64,
    transform: &SpectralTransform,
) -> Result<LipschitzReport> {
    if u.values().len() != v.values().len() {
        return Err(Error::ShapeMismatch {
            expected: u.values().len(),
            found: v.values().len(),
        });
    }
    if u == v {
        return Err(Error::InvalidArgument("lipschitz audit needs u != v"));
    }
    let grid = transform.grid();
    let fu = f_eval(u, spec)?;
    let fv = f_eval(v, spec)?;
    let diff = |a: &RealField, b: &RealField| -> Result<RealField> {
        let values = a
            .values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| x - y)
            .collect();
        RealField::new(a.components(), a.modes(), values)
    };
    let norm = |f: &RealField| -> Result<f64> { Ok(sobolev_norm(&transform.forward(f)?, grid, s)) };
    let lipschitz_ratio = norm(&diff(&fu, &fv)?)? / norm(&diff(u, v)?)?;
    let u_norm = norm(u)?;
    let growth_ratio = if u_norm > 0.0 {
        norm(&fu)? / u_norm
    } else {
        0.0
    };

    let h = grid.cell_volume();
    let l1 = h * pairwise_sum_by(fu.values().len(), |i| fu.values()[i].abs());
    let l2_sq = u.inner(u, h);
    let sup_u = u.sup_norm();
    let denom = l2_sq * sup_u.powi(spec.gamma as i32 - 1);
    let l1_composition_ratio = if denom > 0.0 { l1 / denom } else { 0.0 };
    Ok(LipschitzReport {
        lipschitz_ratio,
        growth_ratio,
        sup_bound: sup_u.max(v.sup_norm()),
        l1_composition_ratio,
    })
}
