//! Periodic spectral grid on [-L, L) and the field algebra built on it.
//!
//! Transform convention: û(k_j) = dx · Σ_i u(x_i) e^{-i k_j x_i}, k_j = π j / L,
//! which approximates the continuum transform ∫ u e^{-ikx} dx. Internally the
//! half spectrum is stored as normalized DFT coefficients c_j = X_j / n, so
//! u(x_i) = Σ_j c_j e^{i k_j (x_i + L)} and û(k_j) = 2L · (-1)^j · c_j.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

use crate::error::{invalid, Error, Result};

/// Zero-padding ratio for products. Degree-p products need (p+1)/2, the
/// worst nonlinearity here has degree 5.
pub const PAD_RATIO: usize = 3;

/// Relative coefficient level treated as transform rounding by
/// [`Grid::derivatives_denoised`].
pub const NOISE_FLOOR: f64 = 1e-15;

struct Plans {
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
}

impl Plans {
    fn new(n: usize) -> Self {
        let mut planner = RealFftPlanner::<f64>::new();
        Plans {
            r2c: planner.plan_fft_forward(n),
            c2r: planner.plan_fft_inverse(n),
        }
    }
}

struct GridInner {
    half_length: f64,
    n: usize,
    dx: f64,
    plans: Plans,
    padded: OnceLock<Plans>,
}

/// Scratch space for padded transforms of one grid.
pub struct PaddedWork {
    spec: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

/// Uniform periodic grid. Cheap to clone; FFT plans are shared.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid")
            .field("half_length", &self.inner.half_length)
            .field("n", &self.inner.n)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.n == other.inner.n
                && self.inner.half_length.to_bits() == other.inner.half_length.to_bits())
    }
}

impl Grid {
    pub fn new(half_length: f64, n: usize) -> Result<Grid> {
        if !(half_length > 0.0) || !half_length.is_finite() {
            return invalid(format!("half_length must be positive, got {half_length}"));
        }
        if n % 2 != 0 || n < 16 {
            return invalid(format!("n must be even and >= 16, got {n}"));
        }
        Ok(Grid {
            inner: Arc::new(GridInner {
                half_length,
                n,
                dx: 2.0 * half_length / n as f64,
                plans: Plans::new(n),
                padded: OnceLock::new(),
            }),
        })
    }

    pub fn half_length(&self) -> f64 {
        self.inner.half_length
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    pub fn dx(&self) -> f64 {
        self.inner.dx
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.inner.half_length + i as f64 * self.inner.dx
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.x(i)).collect()
    }

    /// Wavenumber of half-spectrum index j (0 ..= n/2).
    pub fn k(&self, j: usize) -> f64 {
        std::f64::consts::PI * j as f64 / self.inner.half_length
    }

    /// Full wavenumber vector in standard DFT ordering.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n() as i64;
        (0..n)
            .map(|j| {
                let m = if j < n / 2 { j } else { j - n };
                std::f64::consts::PI * m as f64 / self.inner.half_length
            })
            .collect()
    }

    pub fn k_max(&self) -> f64 {
        self.k(self.n() / 2)
    }

    pub fn padded_n(&self) -> usize {
        PAD_RATIO * self.n()
    }

    fn padded_plans(&self) -> &Plans {
        self.inner.padded.get_or_init(|| Plans::new(self.padded_n()))
    }

    /// Normalized half-spectrum coefficients c_j = X_j / n.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(values.len(), self.n());
        let mut input = values.to_vec();
        let mut out = self.inner.plans.r2c.make_output_vec();
        self.inner
            .plans
            .r2c
            .process(&mut input, &mut out)
            .expect("fft length mismatch");
        let s = 1.0 / self.n() as f64;
        out.iter_mut().for_each(|c| *c *= s);
        out
    }

    /// Inverse of [`Grid::forward`]. Imaginary parts of the DC and Nyquist
    /// coefficients are discarded.
    pub fn inverse(&self, mut coeffs: Vec<Complex64>) -> Vec<f64> {
        let n = self.n();
        coeffs[0].im = 0.0;
        coeffs[n / 2].im = 0.0;
        let mut out = self.inner.plans.c2r.make_output_vec();
        self.inner
            .plans
            .c2r
            .process(&mut coeffs, &mut out)
            .expect("ifft length mismatch");
        out
    }

    /// Zero-pad normalized coefficients onto the 3n grid. The Nyquist mode is
    /// split evenly between ±k_{n/2} so the padded signal stays real.
    pub fn pad(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let n = self.n();
        let m = self.padded_n();
        let mut out = vec![Complex64::new(0.0, 0.0); m / 2 + 1];
        out[..n / 2].copy_from_slice(&coeffs[..n / 2]);
        out[n / 2] = Complex64::new(0.5 * coeffs[n / 2].re, 0.0);
        out
    }

    /// Padded coefficients to padded physical values.
    pub fn inverse_padded(&self, mut coeffs: Vec<Complex64>) -> Vec<f64> {
        let m = self.padded_n();
        coeffs[0].im = 0.0;
        coeffs[m / 2].im = 0.0;
        let plans = self.padded_plans();
        let mut out = plans.c2r.make_output_vec();
        plans.c2r.process(&mut coeffs, &mut out).expect("ifft length mismatch");
        out
    }

    /// Padded physical values to coefficients truncated back to n modes.
    pub fn forward_truncated(&self, mut values: Vec<f64>) -> Vec<Complex64> {
        let n = self.n();
        let m = self.padded_n();
        let plans = self.padded_plans();
        let mut spec = plans.r2c.make_output_vec();
        plans.r2c.process(&mut values, &mut spec).expect("fft length mismatch");
        let s = 1.0 / m as f64;
        let mut out: Vec<Complex64> = spec[..=n / 2].iter().map(|c| c * s).collect();
        // ±k_{n/2} both land on the Nyquist slot of the coarse grid
        out[n / 2] = Complex64::new(2.0 * out[n / 2].re, 0.0);
        out
    }

    /// Reusable buffers for [`Grid::padded_derivative_into`] and
    /// [`Grid::forward_truncated_into`]; on large grids allocation otherwise
    /// costs as much as the transform itself.
    pub fn padded_work(&self) -> PaddedWork {
        let plans = self.padded_plans();
        let len = plans.c2r.get_scratch_len().max(plans.r2c.get_scratch_len());
        PaddedWork {
            spec: plans.c2r.make_input_vec(),
            scratch: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    /// (ik)^m c on the 3n grid, same result as
    /// `inverse_padded(pad(&apply_ik(c, m)))`.
    pub fn padded_derivative_into(&self, c: &[Complex64], m: u32, out: &mut [f64], w: &mut PaddedWork) {
        let n = self.n();
        let plans = self.padded_plans();
        w.spec.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        for j in 0..n / 2 {
            w.spec[j] = c[j] * ik_pow(self.k(j), m);
        }
        w.spec[0].im = 0.0;
        if m % 2 == 0 {
            w.spec[n / 2] = Complex64::new(0.5 * (c[n / 2] * ik_pow(self.k(n / 2), m)).re, 0.0);
        }
        plans
            .c2r
            .process_with_scratch(&mut w.spec, out, &mut w.scratch)
            .expect("ifft length mismatch");
    }

    /// Like [`Grid::forward_truncated`]; `values` is used as scratch.
    pub fn forward_truncated_into(&self, values: &mut [f64], out: &mut [Complex64], w: &mut PaddedWork) {
        let n = self.n();
        let plans = self.padded_plans();
        plans
            .r2c
            .process_with_scratch(values, &mut w.spec, &mut w.scratch)
            .expect("fft length mismatch");
        let s = 1.0 / self.padded_n() as f64;
        for j in 0..=n / 2 {
            out[j] = w.spec[j] * s;
        }
        out[n / 2] = Complex64::new(2.0 * out[n / 2].re, 0.0);
    }

    /// Several spectral derivatives of the same data from one transform.
    pub fn derivatives(&self, values: &[f64], orders: &[u32]) -> Vec<Vec<f64>> {
        let c = self.forward(values);
        orders.iter().map(|&m| self.inverse(self.apply_ik(&c, m))).collect()
    }

    /// Like [`Grid::derivatives`] but modes past the last coefficient above
    /// `floor`·max|c| are dropped first. Those modes hold only transform
    /// rounding, which (ik)^m would otherwise amplify by k_max^m. Used by the
    /// residual checks; not a linear operator, so never used for dynamics.
    pub fn derivatives_denoised(&self, values: &[f64], orders: &[u32], floor: f64) -> Vec<Vec<f64>> {
        let mut c = self.forward(values);
        let peak = c.iter().fold(0.0f64, |m, v| m.max(v.norm()));
        let last = c.iter().rposition(|v| v.norm() > floor * peak).unwrap_or(0);
        c.iter_mut().skip(last + 1).for_each(|v| *v = Complex64::new(0.0, 0.0));
        orders.iter().map(|&m| self.inverse(self.apply_ik(&c, m))).collect()
    }

    /// Multiply coefficients by (ik)^m; the Nyquist mode is zeroed for odd m.
    pub fn apply_ik(&self, c: &[Complex64], m: u32) -> Vec<Complex64> {
        let n = self.n();
        let mut out: Vec<Complex64> = c
            .iter()
            .enumerate()
            .map(|(j, cj)| cj * ik_pow(self.k(j), m))
            .collect();
        if m % 2 == 1 {
            out[n / 2] = Complex64::new(0.0, 0.0);
        }
        out
    }

    /// Continuum-normalized transform û(k_j) for j = 0 ..= n/2.
    pub fn continuum_transform(&self, values: &[f64]) -> Vec<Complex64> {
        let two_l = 2.0 * self.half_length();
        self.forward(values)
            .into_iter()
            .enumerate()
            .map(|(j, c)| if j % 2 == 0 { c * two_l } else { -c * two_l })
            .collect()
    }
}

pub(crate) fn ik_pow(k: f64, m: u32) -> Complex64 {
    let km = k.powi(m as i32);
    match m % 4 {
        0 => Complex64::new(km, 0.0),
        1 => Complex64::new(0.0, km),
        2 => Complex64::new(-km, 0.0),
        _ => Complex64::new(0.0, -km),
    }
}

/// Serializable description of a grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    #[serde(rename = "L")]
    pub half_length: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        Grid::new(self.half_length, self.n)
    }
}

impl From<&Grid> for GridSpec {
    fn from(g: &Grid) -> Self {
        GridSpec { half_length: g.half_length(), n: g.n() }
    }
}

/// Real samples on a [`Grid`]. All values are finite by construction.
#[derive(Clone, Debug)]
pub struct RealField {
    grid: Grid,
    values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<RealField> {
        if values.len() != grid.n() {
            return invalid(format!("{} values for a grid of {}", values.len(), grid.n()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return invalid(format!("non-finite value at node {i}"));
        }
        Ok(RealField { grid: grid.clone(), values })
    }

    /// Caller guarantees length and finiteness.
    pub(crate) fn from_parts(grid: &Grid, values: Vec<f64>) -> RealField {
        debug_assert_eq!(values.len(), grid.n());
        RealField { grid: grid.clone(), values }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Result<RealField> {
        RealField::new(grid, grid.nodes().into_iter().map(f).collect())
    }

    pub fn zeros(grid: &Grid) -> RealField {
        RealField::from_parts(grid, vec![0.0; grid.n()])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest magnitude over the two outermost nodes on each side, relative
    /// to the peak.
    pub fn boundary_ratio(&self) -> f64 {
        let n = self.values.len();
        let edge = [0, 1, n - 2, n - 1]
            .iter()
            .fold(0.0f64, |m, &i| m.max(self.values[i].abs()));
        let peak = self.max_abs();
        if peak == 0.0 {
            0.0
        } else {
            edge / peak
        }
    }

    /// Domain-too-small guard for whole-line checks.
    pub fn check_decay(&self, limit: f64) -> Result<()> {
        let ratio = self.boundary_ratio();
        if ratio < limit {
            Ok(())
        } else {
            Err(Error::DomainTooSmall { ratio, limit })
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<RealField> {
        RealField::new(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &RealField, f: impl Fn(f64, f64) -> f64) -> Result<RealField> {
        same_grid(self, other)?;
        RealField::new(
            &self.grid,
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        )
    }

    pub fn add(&self, other: &RealField) -> Result<RealField> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &RealField) -> Result<RealField> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> RealField {
        RealField::from_parts(&self.grid, self.values.iter().map(|v| v * s).collect())
    }

    /// Discrete L² norm (Σ u² dx)^{1/2}.
    pub fn norm_l2(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.dx()).sqrt()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,value\n");
        for (i, v) in self.values.iter().enumerate() {
            let _ = writeln!(s, "{},{}", fmt17(self.grid.x(i)), fmt17(*v));
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn same_grid(a: &RealField, b: &RealField) -> Result<()> {
    if a.grid != b.grid {
        return invalid("fields live on different grids");
    }
    Ok(())
}

pub fn spectral_derivative(u: &RealField, order: u32) -> Result<RealField> {
    if !(1..=5).contains(&order) {
        return invalid(format!("derivative order must be in 1..=5, got {order}"));
    }
    let g = u.grid();
    let c = g.forward(u.values());
    Ok(RealField::from_parts(g, g.inverse(g.apply_ik(&c, order))))
}

/// H^s norm with weight ⟨k⟩^{2s} = (1+k²)^s and the Plancherel factor 1/2π,
/// so that s = 0 is the L² norm.
pub fn sobolev_norm(u: &RealField, s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return invalid(format!("Sobolev index must be non-negative, got {s}"));
    }
    Ok(sobolev_norm_values(u.grid(), u.values(), s))
}

pub(crate) fn sobolev_norm_values(g: &Grid, values: &[f64], s: f64) -> f64 {
    let c = g.forward(values);
    let n = g.n();
    let mut acc = 0.0;
    for (j, cj) in c.iter().enumerate() {
        let w = if j == 0 || j == n / 2 { 1.0 } else { 2.0 };
        let k = g.k(j);
        acc += w * (1.0 + k * k).powf(s) * cj.norm_sqr();
    }
    // |û|² Δk / 2π = (2L)² |c|² (π/L) / 2π = 2L |c|²
    (acc * 2.0 * g.half_length()).sqrt()
}

pub fn inner_l2(u: &RealField, v: &RealField) -> Result<f64> {
    same_grid(u, v)?;
    Ok(dot(u.values(), v.values()) * u.grid().dx())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Product of 2..=5 fields evaluated on the 3n grid and truncated back.
/// Constant factors are applied as scalars.
pub fn dealiased_product(factors: &[&RealField]) -> Result<RealField> {
    if !(2..=5).contains(&factors.len()) {
        return invalid(format!("dealiased_product takes 2..=5 factors, got {}", factors.len()));
    }
    let g = factors[0].grid().clone();
    for f in &factors[1..] {
        same_grid(factors[0], f)?;
    }
    let mut scalar = 1.0;
    let mut varying: Vec<&RealField> = Vec::new();
    for f in factors {
        let v0 = f.values()[0];
        if f.values().iter().all(|&v| v == v0) {
            scalar *= v0;
        } else {
            varying.push(f);
        }
    }
    let values = match varying.len() {
        0 => vec![scalar; g.n()],
        1 if scalar == 1.0 => varying[0].values().to_vec(),
        1 => varying[0].values().iter().map(|v| v * scalar).collect(),
        _ => {
            let mut acc = vec![scalar; g.padded_n()];
            for f in varying {
                let p = g.inverse_padded(g.pad(&g.forward(f.values())));
                acc.iter_mut().zip(&p).for_each(|(a, b)| *a *= b);
            }
            g.inverse(g.forward_truncated(acc))
        }
    };
    RealField::new(&g, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn grid_basics() {
        let g = Grid::new(10.0, 16).unwrap();
        assert_eq!(g.dx(), 1.25);
        let g = Grid::new(40.0, 4096).unwrap();
        assert!((g.dx() - 0.01953125).abs() < 1e-15);
        assert!(Grid::new(1.0, 15).is_err());
        assert!(Grid::new(1.0, 14).is_err());
        assert!(Grid::new(0.0, 32).is_err());
        assert!(Grid::new(-2.0, 32).is_err());
    }

    #[test]
    fn integer_wavenumbers_on_2pi_box() {
        let g = Grid::new(PI, 32).unwrap();
        let mut k: Vec<i64> = g.wavenumbers().iter().map(|k| k.round() as i64).collect();
        for (a, b) in g.wavenumbers().iter().zip(&k) {
            assert!((a - *b as f64).abs() < 1e-13);
        }
        k.sort();
        assert_eq!(k, (-16..16).collect::<Vec<_>>());
    }

    #[test]
    fn derivative_of_sines() {
        let g = Grid::new(PI, 32).unwrap();
        let u = RealField::from_fn(&g, f64::sin).unwrap();
        let du = spectral_derivative(&u, 1).unwrap();
        let cos: Vec<f64> = g.nodes().iter().map(|x| x.cos()).collect();
        assert!(sup_diff(du.values(), &cos) < 1e-14);

        let u = RealField::from_fn(&g, |x| (2.0 * x).sin()).unwrap();
        let d5 = spectral_derivative(&u, 5).unwrap();
        let want: Vec<f64> = g.nodes().iter().map(|x| 32.0 * (2.0 * x).cos()).collect();
        // k_max⁵·eps noise floor
        let e = sup_diff(d5.values(), &want);
        assert!(e < 32.0 * 16f64.powi(5) * f64::EPSILON, "{e}");
        assert!(spectral_derivative(&u, 0).is_err());
        assert!(spectral_derivative(&u, 6).is_err());
    }

    #[test]
    fn gaussian_second_derivative() {
        let g = Grid::new(20.0, 1024).unwrap();
        let u = RealField::from_fn(&g, |x| (-x * x).exp()).unwrap();
        let d2 = spectral_derivative(&u, 2).unwrap();
        let want: Vec<f64> = g
            .nodes()
            .iter()
            .map(|x| (4.0 * x * x - 2.0) * (-x * x).exp())
            .collect();
        assert!(sup_diff(d2.values(), &want) < 1e-10);
    }

    #[test]
    fn sobolev_gaussian() {
        let g = Grid::new(20.0, 1024).unwrap();
        let u = RealField::from_fn(&g, |x| (-0.5 * x * x).exp()).unwrap();
        let n0 = sobolev_norm(&u, 0.0).unwrap();
        assert!((n0 - PI.powf(0.25)).abs() < 1e-12);
        let n1 = sobolev_norm(&u, 1.0).unwrap();
        let ux = spectral_derivative(&u, 1).unwrap();
        let nx = sobolev_norm(&ux, 0.0).unwrap();
        assert!((n1 * n1 - n0 * n0 - nx * nx).abs() < 1e-10 * n1 * n1);
        assert!(sobolev_norm(&u, -0.5).is_err());
        assert_eq!(sobolev_norm(&RealField::zeros(&g), 2.0).unwrap(), 0.0);
    }

    #[test]
    fn inner_products() {
        let g = Grid::new(PI, 64).unwrap();
        let s = RealField::from_fn(&g, f64::sin).unwrap();
        let c = RealField::from_fn(&g, f64::cos).unwrap();
        assert!(inner_l2(&s, &c).unwrap().abs() < 1e-15);
        assert_eq!(inner_l2(&s, &RealField::zeros(&g)).unwrap(), 0.0);

        let g = Grid::new(20.0, 1024).unwrap();
        let u = RealField::from_fn(&g, |x| (-x * x).exp()).unwrap();
        assert!((inner_l2(&u, &u).unwrap() - (PI / 2.0).sqrt()).abs() < 1e-14);

        let other = Grid::new(20.0, 512).unwrap();
        let v = RealField::zeros(&other);
        assert!(inner_l2(&u, &v).is_err());
    }

    #[test]
    fn product_identity_is_bitwise() {
        let g = Grid::new(20.0, 256).unwrap();
        let u = RealField::from_fn(&g, |x| (-x * x).exp() * (3.0 * x).sin()).unwrap();
        let one = RealField::from_fn(&g, |_| 1.0).unwrap();
        let p = dealiased_product(&[&one, &u]).unwrap();
        assert_eq!(p.values(), u.values());
    }

    #[test]
    fn product_double_angle_has_no_aliases() {
        let g = Grid::new(PI, 32).unwrap();
        let s = RealField::from_fn(&g, f64::sin).unwrap();
        let p = dealiased_product(&[&s, &s]).unwrap();
        let want: Vec<f64> = g.nodes().iter().map(|x| 0.5 * (1.0 - (2.0 * x).cos())).collect();
        assert!(sup_diff(p.values(), &want) < 1e-15);
        let c = g.forward(p.values());
        for (j, cj) in c.iter().enumerate() {
            if j != 0 && j != 2 {
                assert!(cj.norm() < 1e-16, "mode {j}: {cj}");
            }
        }
    }

    #[test]
    fn product_cos5_binomial() {
        // cos⁵θ = (10 cos θ + 5 cos 3θ + cos 5θ)/16
        let g = Grid::new(PI, 64).unwrap();
        let c3 = RealField::from_fn(&g, |x| (3.0 * x).cos()).unwrap();
        let p = dealiased_product(&[&c3, &c3, &c3, &c3, &c3]).unwrap();
        let coeffs = g.forward(p.values());
        let mut want = vec![0.0; 33];
        for (m, b) in [(3usize, 10.0), (9, 5.0), (15, 1.0)] {
            // cos(mx) with x = -π + i dx carries a (-1)^m phase
            want[m] = 0.5 * b / 16.0 * if m % 2 == 0 { 1.0 } else { -1.0 };
        }
        for (j, cj) in coeffs.iter().enumerate() {
            assert!((cj.re - want[j]).abs() < 1e-13 && cj.im.abs() < 1e-13, "mode {j}");
        }
    }

    #[test]
    fn product_guards() {
        let g = Grid::new(PI, 32).unwrap();
        let s = RealField::from_fn(&g, f64::sin).unwrap();
        assert!(dealiased_product(&[&s]).is_err());
        assert!(dealiased_product(&[&s, &s, &s, &s, &s, &s]).is_err());
        let h = Grid::new(PI, 64).unwrap();
        let t = RealField::from_fn(&h, f64::sin).unwrap();
        assert!(dealiased_product(&[&s, &t]).is_err());
    }

    #[test]
    fn continuum_transform_of_gaussian() {
        // ∫ e^{-x²/2} e^{-ikx} dx = √(2π) e^{-k²/2}
        let g = Grid::new(20.0, 512).unwrap();
        let u = RealField::from_fn(&g, |x| (-0.5 * x * x).exp()).unwrap();
        let uh = g.continuum_transform(u.values());
        for (j, c) in uh.iter().enumerate().take(40) {
            let k = g.k(j);
            let want = (2.0 * PI).sqrt() * (-0.5 * k * k).exp();
            assert!((c.re - want).abs() < 1e-12 && c.im.abs() < 1e-12);
        }
    }

    #[test]
    fn csv_round_trips() {
        let g = Grid::new(1.0, 16).unwrap();
        let u = RealField::from_fn(&g, |x| x / 3.0).unwrap();
        let csv = u.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("x,value"));
        for (i, line) in lines.enumerate() {
            let v: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
            assert_eq!(v.to_bits(), u.values()[i].to_bits());
        }
    }
}
