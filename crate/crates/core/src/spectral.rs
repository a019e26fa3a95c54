//! Periodic grid, field containers and the unitary Fourier transform pair.
//!
//! The box is `[−L, L)ⁿ` sampled at `x_j = −L + j·h` with `h = 2L/M`.
//! Coefficients are the expansion weights in the orthonormal basis
//! `e_k(x) = exp(i ξ_k·x) / (2L)^{n/2}`:
//!
//! ```text
//! û_k = (2L)^{n/2} / Mⁿ · Σ_j u(x_j) exp(−i ξ_k·x_j)
//! ```
//!
//! so that `Σ_ξ |û|² = hⁿ Σ_x |u|²` (Parseval against grid quadrature) and a
//! single coefficient of modulus one at `|ξ| = 1` carries unit `L²` norm.
//! Multi-component data is stored component-major; a 2D component is stored
//! row-major with axis 0 varying slowest.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
// libm-backed float math; redundant whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;

use crate::fft::{Direction, FftPlan};
use crate::sum::pairwise_sum_by;
use crate::{Error, Result};

/// Imaginary residue (relative to the largest modulus) tolerated by the
/// inverse transform before a spectrum is declared not realizable.
pub const REALIZABILITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: usize,
    half_period: f64,
    points: usize,
    axis: Vec<f64>,
    xi_sq: Vec<f64>,
}

impl Grid {
    /// Builds the periodic grid `[−L, L)ⁿ` with `M` points per axis.
    pub fn new(dim: usize, half_period: f64, points: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid("dimension must be 1 or 2"));
        }
        if !(half_period.is_finite() && half_period > 0.0) {
            return Err(Error::InvalidGrid(
                "half-period must be positive and finite",
            ));
        }
        if !points.is_multiple_of(2) {
            return Err(Error::InvalidGrid("points per axis must be even"));
        }
        if points < 4 {
            return Err(Error::InvalidGrid("points per axis must be at least 4"));
        }
        let unit = PI / half_period;
        let axis: Vec<f64> = (0..points)
            .map(|i| unit * signed_index(i, points) as f64)
            .collect();
        let modes = points.pow(dim as u32);
        let xi_sq = (0..modes)
            .map(|m| {
                let (i0, i1) = split(m, points, dim);
                let k0 = axis[i0];
                match i1 {
                    Some(i1) => k0 * k0 + axis[i1] * axis[i1],
                    None => k0 * k0,
                }
            })
            .collect();
        Ok(Grid {
            dim,
            half_period,
            points,
            axis,
            xi_sq,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_period(&self) -> f64 {
        self.half_period
    }

    pub fn points(&self) -> usize {
        self.points
    }

    /// Total number of Fourier modes (and grid points), `Mⁿ`.
    pub fn modes(&self) -> usize {
        self.xi_sq.len()
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_period / self.points as f64
    }

    /// Quadrature weight `hⁿ`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Domain measure `(2L)ⁿ`.
    pub fn measure(&self) -> f64 {
        (2.0 * self.half_period).powi(self.dim as i32)
    }

    /// Wavenumber spacing `π/L`.
    pub fn wavenumber_unit(&self) -> f64 {
        PI / self.half_period
    }

    /// Per-axis wavenumbers in DFT order `0, 1, …, M/2−1, −M/2, …, −1` (times `π/L`).
    pub fn axis_wavenumbers(&self) -> &[f64] {
        &self.axis
    }

    /// `|ξ|²` for every mode.
    pub fn xi_sq(&self) -> &[f64] {
        &self.xi_sq
    }

    pub fn xi_norm(&self, mode: usize) -> f64 {
        self.xi_sq[mode].sqrt()
    }

    /// Upper bound `(π/L)(M/2)√n` on `|ξ|`.
    pub fn max_wavenumber(&self) -> f64 {
        self.wavenumber_unit() * (self.points / 2) as f64 * (self.dim as f64).sqrt()
    }

    /// Signed integer wavenumber index per axis (second entry 0 in 1D).
    pub fn mode_index(&self, mode: usize) -> [i64; 2] {
        let (i0, i1) = split(mode, self.points, self.dim);
        [
            signed_index(i0, self.points),
            i1.map_or(0, |i| signed_index(i, self.points)),
        ]
    }

    /// Linear mode position for signed indices (wrapped periodically).
    pub fn mode_at(&self, index: [i64; 2]) -> usize {
        let m = self.points as i64;
        let i0 = index[0].rem_euclid(m) as usize;
        if self.dim == 1 {
            i0
        } else {
            i0 * self.points + index[1].rem_euclid(m) as usize
        }
    }

    /// Wavevector `ξ` of a mode (second entry 0 in 1D).
    pub fn wavevector(&self, mode: usize) -> [f64; 2] {
        let (i0, i1) = split(mode, self.points, self.dim);
        [self.axis[i0], i1.map_or(0.0, |i| self.axis[i])]
    }

    /// Mode holding `−ξ`.
    pub fn conjugate_mode(&self, mode: usize) -> usize {
        let [k0, k1] = self.mode_index(mode);
        self.mode_at([-k0, -k1])
    }

    /// Physical coordinates of a grid point (second entry 0 in 1D).
    pub fn coordinate(&self, point: usize) -> [f64; 2] {
        let h = self.spacing();
        let (i0, i1) = split(point, self.points, self.dim);
        [
            -self.half_period + i0 as f64 * h,
            i1.map_or(0.0, |i| -self.half_period + i as f64 * h),
        ]
    }

    /// Whether the mode survives the 2/3-rule dealiasing mask.
    pub fn dealias_keep(&self, mode: usize) -> bool {
        let cutoff = self.points as i64 / 3;
        let [k0, k1] = self.mode_index(mode);
        k0.abs() <= cutoff && k1.abs() <= cutoff
    }
}

fn signed_index(i: usize, points: usize) -> i64 {
    if i < points / 2 {
        i as i64
    } else {
        i as i64 - points as i64
    }
}

fn split(index: usize, points: usize, dim: usize) -> (usize, Option<usize>) {
    if dim == 1 {
        (index, None)
    } else {
        (index / points, Some(index % points))
    }
}

/// Real samples of an `N`-component field, component-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    components: usize,
    modes: usize,
    values: Vec<f64>,
}

impl RealField {
    pub fn new(components: usize, modes: usize, values: Vec<f64>) -> Result<Self> {
        if components == 0 {
            return Err(Error::InvalidArgument("field needs at least one component"));
        }
        if values.len() != components * modes {
            return Err(Error::ShapeMismatch {
                expected: components * modes,
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(RealField {
            components,
            modes,
            values,
        })
    }

    pub fn zeros(components: usize, modes: usize) -> Self {
        RealField {
            components,
            modes,
            values: vec![0.0; components * modes],
        }
    }

    /// Samples `profile(x, component)` at every grid point.
    pub fn from_fn<F>(grid: &Grid, components: usize, profile: F) -> Result<Self>
    where
        F: Fn([f64; 2], usize) -> f64,
    {
        let modes = grid.modes();
        let mut values = Vec::with_capacity(components * modes);
        for j in 0..components {
            for p in 0..modes {
                values.push(profile(grid.coordinate(p), j));
            }
        }
        RealField::new(components, modes, values)
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn component(&self, j: usize) -> &[f64] {
        &self.values[j * self.modes..(j + 1) * self.modes]
    }

    pub fn component_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.values[j * self.modes..(j + 1) * self.modes]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Grid quadrature `hⁿ Σ u·w` summed over components.
    pub fn inner(&self, other: &RealField, cell_volume: f64) -> f64 {
        debug_assert_eq!(self.values.len(), other.values.len());
        cell_volume * pairwise_sum_by(self.values.len(), |i| self.values[i] * other.values[i])
    }
}

/// Complex Fourier coefficients of an `N`-component field, component-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    components: usize,
    modes: usize,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(components: usize, modes: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if components == 0 {
            return Err(Error::InvalidArgument(
                "spectrum needs at least one component",
            ));
        }
        if coeffs.len() != components * modes {
            return Err(Error::ShapeMismatch {
                expected: components * modes,
                found: coeffs.len(),
            });
        }
        Ok(Spectrum {
            components,
            modes,
            coeffs,
        })
    }

    pub fn zeros(components: usize, modes: usize) -> Self {
        Spectrum {
            components,
            modes,
            coeffs: vec![Complex64::new(0.0, 0.0); components * modes],
        }
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn component(&self, j: usize) -> &[Complex64] {
        &self.coeffs[j * self.modes..(j + 1) * self.modes]
    }

    pub fn component_mut(&mut self, j: usize) -> &mut [Complex64] {
        &mut self.coeffs[j * self.modes..(j + 1) * self.modes]
    }

    pub fn same_shape(&self, other: &Spectrum) -> bool {
        self.components == other.components && self.modes == other.modes
    }

    /// `‖û‖₂` over all modes and components.
    pub fn l2_norm(&self) -> f64 {
        pairwise_sum_by(self.coeffs.len(), |i| self.coeffs[i].norm_sqr()).sqrt()
    }

    /// Largest coefficient modulus.
    pub fn sup_norm(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    /// Largest `|û(ξ=0)|` over components.
    pub fn mean_mode(&self) -> f64 {
        (0..self.components)
            .map(|j| self.coeffs[j * self.modes].norm())
            .fold(0.0, f64::max)
    }

    /// Zeroes the `ξ = 0` coefficient of every component.
    pub fn project_mean_zero(&mut self) {
        for j in 0..self.components {
            self.coeffs[j * self.modes] = Complex64::new(0.0, 0.0);
        }
    }

    /// Largest `|û(−ξ) − conj(û(ξ))|` relative to the largest modulus.
    pub fn conjugate_symmetry_defect(&self, grid: &Grid) -> f64 {
        let scale = self.sup_norm();
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for j in 0..self.components {
            let c = self.component(j);
            for m in 0..self.modes {
                let d = (c[grid.conjugate_mode(m)] - c[m].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst / scale
    }

    /// Elementwise `self + alpha·other`.
    pub fn add_scaled(&mut self, alpha: f64, other: &Spectrum) {
        debug_assert!(self.same_shape(other));
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b * alpha;
        }
    }
}

/// Cached FFT plan and normalization for one grid.
#[derive(Debug, Clone)]
pub struct SpectralTransform {
    grid: Grid,
    plan: FftPlan,
    // (−1)^{k0+k1}: phase of the shift x_0 = −L
    parity: Vec<f64>,
    forward_scale: f64,
    inverse_scale: f64,
}

impl SpectralTransform {
    pub fn new(grid: &Grid) -> Self {
        let parity = (0..grid.modes())
            .map(|m| {
                let [k0, k1] = grid.mode_index(m);
                if (k0 + k1).rem_euclid(2) == 0 {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect();
        let root_measure = grid.measure().sqrt();
        SpectralTransform {
            grid: grid.clone(),
            plan: FftPlan::new(grid.points()),
            parity,
            forward_scale: root_measure / grid.modes() as f64,
            inverse_scale: 1.0 / root_measure,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn forward(&self, field: &RealField) -> Result<Spectrum> {
        let modes = self.grid.modes();
        if field.modes() != modes {
            return Err(Error::ShapeMismatch {
                expected: modes,
                found: field.modes(),
            });
        }
        let mut coeffs: Vec<Complex64> = field
            .values()
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        for chunk in coeffs.chunks_mut(modes) {
            self.transform(chunk, Direction::Forward);
            for (c, p) in chunk.iter_mut().zip(&self.parity) {
                *c *= p * self.forward_scale;
            }
        }
        Spectrum::new(field.components(), modes, coeffs)
    }

    /// Inverse transform; rejects spectra whose imaginary residue exceeds
    /// [`REALIZABILITY_TOL`] relative to the largest sample modulus.
    pub fn inverse(&self, spectrum: &Spectrum) -> Result<RealField> {
        let modes = self.grid.modes();
        if spectrum.modes() != modes {
            return Err(Error::ShapeMismatch {
                expected: modes,
                found: spectrum.modes(),
            });
        }
        let mut work = spectrum.coeffs().to_vec();
        for chunk in work.chunks_mut(modes) {
            for (c, p) in chunk.iter_mut().zip(&self.parity) {
                *c *= p * self.inverse_scale;
            }
            self.transform(chunk, Direction::Inverse);
        }
        let mut scale = 0.0f64;
        let mut residue = 0.0f64;
        for z in &work {
            scale = scale.max(z.norm());
            residue = residue.max(z.im.abs());
        }
        if !(scale.is_finite() && residue.is_finite()) {
            return Err(Error::NonFinite);
        }
        if scale > 0.0 && residue > REALIZABILITY_TOL * scale {
            return Err(Error::NotRealizable {
                residue: residue / scale,
            });
        }
        RealField::new(
            spectrum.components(),
            modes,
            work.into_iter().map(|z| z.re).collect(),
        )
    }

    fn transform(&self, data: &mut [Complex64], direction: Direction) {
        let m = self.grid.points();
        if self.grid.dim() == 1 {
            self.plan.process(data, direction);
            return;
        }
        for row in data.chunks_mut(m) {
            self.plan.process(row, direction);
        }
        let mut column = vec![Complex64::new(0.0, 0.0); m];
        for c in 0..m {
            for r in 0..m {
                column[r] = data[r * m + c];
            }
            self.plan.process(&mut column, direction);
            for r in 0..m {
                data[r * m + c] = column[r];
            }
        }
    }
}

/// One-shot forward transform (builds a plan per call).
pub fn forward_transform(field: &RealField, grid: &Grid) -> Result<Spectrum> {
    SpectralTransform::new(grid).forward(field)
}

/// One-shot inverse transform (builds a plan per call).
pub fn inverse_transform(spectrum: &Spectrum, grid: &Grid) -> Result<RealField> {
    SpectralTransform::new(grid).inverse(spectrum)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_grid_wavenumbers_are_integers_in_dft_order() {
        let g = Grid::new(1, PI, 4).unwrap();
        assert_eq!(g.axis_wavenumbers(), &[0.0, 1.0, -2.0, -1.0]);
        assert_eq!(g.modes(), 4);
    }

    #[test]
    fn max_wavenumber_of_unit_interval() {
        let g = Grid::new(1, 1.0, 8).unwrap();
        let observed = g
            .axis_wavenumbers()
            .iter()
            .fold(0.0f64, |m, k| m.max(k.abs()));
        assert!((observed - 4.0 * PI).abs() < 1e-12);
        assert!((g.max_wavenumber() - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn planar_lattice_enumeration() {
        let g = Grid::new(2, PI, 4).unwrap();
        assert_eq!(g.modes(), 16);
        // brute-force the 4x4 lattice of integer pairs in [−2, 2)
        let mut max_sq = 0.0f64;
        for a in -2i64..2 {
            for b in -2i64..2 {
                max_sq = max_sq.max((a * a + b * b) as f64);
            }
        }
        let observed = g.xi_sq().iter().cloned().fold(0.0, f64::max);
        assert_eq!(observed, max_sq);
        assert!(observed.sqrt() <= 2.0 * 2f64.sqrt() + 1e-15);
        assert!(g.max_wavenumber() >= observed.sqrt());
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(matches!(Grid::new(1, 1.0, 7), Err(Error::InvalidGrid(_))));
        assert!(matches!(Grid::new(1, 0.0, 8), Err(Error::InvalidGrid(_))));
        assert!(matches!(Grid::new(1, -1.0, 8), Err(Error::InvalidGrid(_))));
        assert!(matches!(Grid::new(3, 1.0, 8), Err(Error::InvalidGrid(_))));
        assert!(matches!(Grid::new(1, 1.0, 2), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn constant_field_has_only_mean_mode() {
        let g = Grid::new(1, 2.0, 16).unwrap();
        let f = RealField::from_fn(&g, 1, |_, _| 3.0).unwrap();
        let s = forward_transform(&f, &g).unwrap();
        // c · (2L)^{1/2}
        assert!((s.coeffs()[0].re - 3.0 * 2.0).abs() < 1e-13);
        for c in &s.coeffs()[1..] {
            assert!(c.norm() < 1e-14);
        }
    }

    #[test]
    fn cosine_occupies_the_two_unit_modes() {
        let g = Grid::new(1, PI, 8).unwrap();
        let f = RealField::from_fn(&g, 1, |x, _| x[0].cos()).unwrap();
        let s = forward_transform(&f, &g).unwrap();
        // direct DFT sum with the shifted phase, coefficient at k = ±1
        let direct = |k: f64| -> Complex64 {
            let mut acc = Complex64::new(0.0, 0.0);
            for p in 0..8 {
                let x = g.coordinate(p)[0];
                acc += Complex64::new(x.cos(), 0.0) * Complex64::new((k * x).cos(), -(k * x).sin());
            }
            acc * (2.0 * PI).sqrt() / 8.0
        };
        let plus = s.coeffs()[g.mode_at([1, 0])];
        let minus = s.coeffs()[g.mode_at([-1, 0])];
        assert!((plus - direct(1.0)).norm() < 1e-14);
        assert!((plus - minus).norm() < 1e-14);
        assert!((plus.re.abs() - (PI / 2.0).sqrt()).abs() < 1e-14);
        for m in 0..8 {
            if m != g.mode_at([1, 0]) && m != g.mode_at([-1, 0]) {
                assert!(s.coeffs()[m].norm() < 1e-14);
            }
        }
    }

    #[test]
    fn inverse_of_special_spectra() {
        let g = Grid::new(1, PI, 8).unwrap();
        let zero = inverse_transform(&Spectrum::zeros(1, 8), &g).unwrap();
        assert!(zero.values().iter().all(|&v| v == 0.0));

        let mut mean = Spectrum::zeros(1, 8);
        mean.coeffs_mut()[0] = Complex64::new(2.0, 0.0);
        let f = inverse_transform(&mean, &g).unwrap();
        let want = 2.0 / (2.0 * PI).sqrt();
        assert!(f.values().iter().all(|v| (v - want).abs() < 1e-15));

        let cos_spec =
            forward_transform(&RealField::from_fn(&g, 1, |x, _| x[0].cos()).unwrap(), &g).unwrap();
        let back = inverse_transform(&cos_spec, &g).unwrap();
        for p in 0..8 {
            assert!((back.values()[p] - g.coordinate(p)[0].cos()).abs() < 1e-13);
        }
    }

    #[test]
    fn one_sided_spectrum_is_not_realizable() {
        let g = Grid::new(1, PI, 8).unwrap();
        let mut s = Spectrum::zeros(1, 8);
        s.coeffs_mut()[1] = Complex64::new(1.0, 0.0);
        assert!(matches!(
            inverse_transform(&s, &g),
            Err(Error::NotRealizable { .. })
        ));
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let g = Grid::new(1, PI, 8).unwrap();
        let f = RealField::zeros(1, 16);
        assert!(matches!(
            forward_transform(&f, &g),
            Err(Error::ShapeMismatch {
                expected: 8,
                found: 16
            })
        ));
    }

    #[test]
    fn nonfinite_samples_are_rejected() {
        assert_eq!(
            RealField::new(1, 2, vec![1.0, f64::NAN]),
            Err(Error::NonFinite)
        );
    }

    #[test]
    fn dealias_mask_keeps_low_modes() {
        let g = Grid::new(1, PI, 12).unwrap();
        let kept: Vec<i64> = (0..12)
            .filter(|&m| g.dealias_keep(m))
            .map(|m| g.mode_index(m)[0])
            .collect();
        assert_eq!(kept, vec![0, 1, 2, 3, 4, -4, -3, -2, -1]);
    }
}
