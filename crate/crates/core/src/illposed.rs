//! Wave packets behind weak ill-posedness, at desk scale.
//!
//! Two data differing only in a small, very wide low-frequency bump
//! ±εN⁻³φ̃_N carry the same high-frequency packet N^{−(4+δ)/2−s}φ_N cos(Nx).
//! The low part shifts the phase of the packet through the high-low term,
//! so the H^s distance of the two solutions grows like |sin(κt)| although
//! the initial distance is O(ε).

use serde::{Deserialize, Serialize};

use crate::dynamics::{advance_pair, Evolution, Scheme, Stepper, Terms};
use crate::error::{invalid, Error, Result};
use crate::field::{sobolev_norm_values, Grid, GridSpec, RealField};
use crate::functionals::{mass, GardnerParams};

/// Largest grid any construction here will allocate.
pub const MAX_POINTS: usize = 1 << 24;

fn glue(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// Smooth bump: 1 on |x| ≤ 1, 0 on |x| ≥ 2.
pub fn bump(x: f64) -> f64 {
    let a = x.abs();
    if a <= 1.0 {
        return 1.0;
    }
    if a >= 2.0 {
        return 0.0;
    }
    let (p, q) = (glue(2.0 - a), glue(a - 1.0));
    p / (p + q)
}

/// φ̃(x) = φ(x/2), identically 1 on the support of φ.
pub fn bump_tilde(x: f64) -> f64 {
    bump(0.5 * x)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IllposedParams {
    #[serde(rename = "N")]
    pub n: f64,
    pub delta: f64,
    pub s: f64,
    pub eps: f64,
    pub gardner: GardnerParams,
}

impl IllposedParams {
    pub fn validate(&self) -> Result<()> {
        self.gardner.validate()?;
        if !(self.n >= 4.0) || !self.n.is_finite() {
            return invalid(format!("carrier frequency N must be at least 4, got {}", self.n));
        }
        if !(self.s > 0.0) {
            return invalid(format!("s must be positive, got {}", self.s));
        }
        let lo = (2.0 - 2.0 * self.s).max(0.0);
        if !(self.delta > lo && self.delta < 1.0) {
            return invalid(format!("delta must lie in ({lo}, 1), got {}", self.delta));
        }
        // ε = 0 is admitted as the degenerate control (identical twins)
        if !(0.0..=0.1).contains(&self.eps) {
            return invalid(format!("eps must lie in [0, 0.1], got {}", self.eps));
        }
        Ok(())
    }

    /// Dilation N^{4+δ} of the bumps.
    pub fn dilation(&self) -> f64 {
        self.n.powf(4.0 + self.delta)
    }

    /// N^{−(4+δ)/2−s}
    pub fn high_amplitude(&self) -> f64 {
        self.n.powf(-(4.0 + self.delta) / 2.0 - self.s)
    }

    /// εN⁻³
    pub fn low_amplitude(&self) -> f64 {
        self.eps * self.n.powi(-3)
    }

    /// Phase rate of the packet induced by the low part,
    /// κ = ε(20m − 120m³/N²). The ansatz assumes κ = 1.
    pub fn phase_rate(&self) -> f64 {
        let m = self.gardner.mu_eff();
        self.eps * (20.0 * m - 120.0 * m.powi(3) / (self.n * self.n))
    }

    /// Smallest admissible grid: supp φ̃_N inside the box with a margin,
    /// dx ≤ π/(8N), n a power of two.
    pub fn grid_spec(&self) -> Result<GridSpec> {
        packet_grid(4.0 * self.dilation(), self.n)
    }

    pub fn check_grid(&self, g: &Grid) -> Result<()> {
        if g.half_length() < 4.0 * self.dilation() {
            return Err(Error::DomainTooSmall {
                ratio: g.half_length() / (4.0 * self.dilation()),
                limit: 1.0,
            });
        }
        if g.dx() > std::f64::consts::PI / (8.0 * self.n) {
            return invalid(format!("dx = {} does not resolve the carrier N = {}", g.dx(), self.n));
        }
        Ok(())
    }
}

fn packet_grid(support: f64, carrier: f64) -> Result<GridSpec> {
    let dx = std::f64::consts::PI / (8.0 * carrier);
    let need = 2.0 * (support * 1.02 + 10.0) / dx;
    if !(need <= MAX_POINTS as f64) {
        return Err(Error::Resource(format!(
            "packet needs {need:.3e} grid points, limit is {MAX_POINTS}"
        )));
    }
    let n = smooth_size(need.ceil() as usize).max(16);
    // widen the box to use the full carrier resolution
    Ok(GridSpec { half_length: 0.5 * n as f64 * dx * (1.0 - 1e-12), n })
}

/// Smallest even 2^a·3^b·5^c ≥ `min`; such lengths keep the transforms fast.
fn smooth_size(min: usize) -> usize {
    let mut best = min.next_power_of_two().max(2);
    let mut p5 = 1;
    while p5 < best {
        let mut p35 = p5;
        while p35 < best {
            let mut v = 2 * p35;
            while v < min {
                v *= 2;
            }
            best = best.min(v);
            p35 *= 3;
        }
        p5 *= 5;
    }
    best
}

/// Φ_N(t) = (N⁵ − 10m²N³)t
pub fn phase(p: &IllposedParams, t: f64) -> f64 {
    let m = p.gardner.mu_eff();
    (p.n.powi(5) - 10.0 * m * m * p.n.powi(3)) * t
}

/// u±(0) = ±εN⁻³φ̃_N + N^{−(4+δ)/2−s}φ_N cos(Nx).
pub fn build_initials(p: &IllposedParams, grid: &Grid) -> Result<(RealField, RealField)> {
    p.validate()?;
    p.check_grid(grid)?;
    let (a, lo, hi) = (p.dilation(), p.low_amplitude(), p.high_amplitude());
    let nodes = grid.nodes();
    let high: Vec<f64> = nodes.iter().map(|&x| hi * bump(x / a) * (p.n * x).cos()).collect();
    let low: Vec<f64> = nodes.iter().map(|&x| lo * bump_tilde(x / a)).collect();
    let plus = high.iter().zip(&low).map(|(h, l)| h + l).collect();
    let minus = high.iter().zip(&low).map(|(h, l)| h - l).collect();
    Ok((RealField::new(grid, plus)?, RealField::new(grid, minus)?))
}

/// The low part ±εN⁻³φ̃_N alone.
pub fn low_initial(p: &IllposedParams, grid: &Grid, sign: f64) -> Result<RealField> {
    let (a, lo) = (p.dilation(), p.low_amplitude());
    RealField::from_fn(grid, |x| sign * lo * bump_tilde(x / a))
}

/// High part of the approximate solution, N^{−(4+δ)/2−s}φ_N cos(Nx − Φ_N(t) ∓ t).
pub fn high_part(p: &IllposedParams, grid: &Grid, t: f64, sign: f64) -> Result<RealField> {
    let (a, hi, ph) = (p.dilation(), p.high_amplitude(), phase(p, t) + sign * t);
    RealField::from_fn(grid, |x| hi * bump(x / a) * (p.n * x - ph).cos())
}

/// ‖φ‖_{L²}, by quadrature on a fine grid.
pub fn bump_l2() -> f64 {
    let g = Grid::new(2.5, 1 << 14).expect("fixed grid");
    g.nodes().iter().map(|&x| bump(x).powi(2)).sum::<f64>().sqrt() * g.dx().sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMethod {
    /// Fourier-side quadrature of the modulated bump, valid for any N.
    Modulation,
    /// The H^s norm of the sampled packet on a full grid (small N only).
    Grid,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormRow {
    #[serde(rename = "N")]
    pub n: f64,
    pub scaled_norm: f64,
    pub target: f64,
    pub rel_err: f64,
    pub method: NormMethod,
}

#[derive(Clone, Debug, Serialize)]
pub struct NormScan {
    pub delta: f64,
    pub s: f64,
    pub gamma: f64,
    pub rows: Vec<NormRow>,
    /// ‖φ‖_{L²}/√2
    pub target: f64,
    /// Richardson-style limit from the last two rows, assuming error ∝ N⁻².
    pub extrapolated: Option<f64>,
}

/// Table of φ̂ on a uniform wavenumber grid (φ even, so φ̂ is real).
struct BumpTransform {
    dz: f64,
    values: Vec<f64>,
}

impl BumpTransform {
    fn new() -> BumpTransform {
        // box [−8, 8] is twice the support of φ∗φ, so the ζ-sums below are
        // exact Parseval sums up to the tail of φ̂
        let g = Grid::new(8.0, 1 << 16).expect("fixed grid");
        let v: Vec<f64> = g.nodes().iter().map(|&x| bump(x)).collect();
        let values = g.continuum_transform(&v).iter().map(|c| c.re).collect();
        BumpTransform { dz: g.k(1), values }
    }

    fn at_index(&self, j: i64) -> f64 {
        self.values.get(j.unsigned_abs() as usize).copied().unwrap_or(0.0)
    }
}

/// N^{−(4+δ)/2−s}‖φ_N sin(Nx+γ)‖_{H^s} from
/// ‖·‖² = (A/8π)∫⟨η/A⟩^{2s}|e^{iγ}φ̂(η−AN) − e^{−iγ}φ̂(η+AN)|²dη, A = N^{4+δ}.
/// The cross term couples φ̂ at wavenumbers 2AN apart; it is included when
/// 2AN falls inside the transform table and is below its tail otherwise.
fn scaled_norm_modulation(tr: &BumpTransform, n: f64, delta: f64, s: f64, gamma: f64) -> f64 {
    let a = n.powf(4.0 + delta);
    let dz = tr.dz;
    let top = tr.values.len() as i64 - 1;
    let weight = |z: f64| (1.0 + (n + z / a).powi(2)).powf(s);
    let mut j_sum = 0.0;
    for j in -top..=top {
        let z = j as f64 * dz;
        let f = tr.at_index(j);
        j_sum += weight(z) * f * f;
    }
    j_sum *= dz;
    let shift = 2.0 * a * n / dz;
    let mut cross = 0.0;
    if shift < top as f64 && (shift - shift.round()).abs() < 1e-9 {
        let sh = shift.round() as i64;
        for j in -top..=top {
            let z = j as f64 * dz;
            cross += weight(z) * tr.at_index(j) * tr.at_index(j + sh);
        }
        cross *= dz * (2.0 * gamma).cos();
    }
    // ‖·‖²_{H^s} = (A/4π)(J − cross), times N^{−(4+δ)−2s}
    ((j_sum - cross) / (4.0 * std::f64::consts::PI) * n.powf(-2.0 * s)).sqrt()
}

fn scaled_norm_grid(n: f64, delta: f64, s: f64, gamma: f64) -> Result<f64> {
    let a = n.powf(4.0 + delta);
    let spec = packet_grid(2.0 * a, n)?;
    let g = spec.build()?;
    let v: Vec<f64> = g.nodes().iter().map(|&x| bump(x / a) * (n * x + gamma).sin()).collect();
    Ok(n.powf(-(4.0 + delta) / 2.0 - s) * sobolev_norm_values(&g, &v, s))
}

pub fn norm_scan(delta: f64, s: f64, ns: &[f64], gamma: f64, method: NormMethod) -> Result<NormScan> {
    if !(delta > 0.0) || !(s >= 0.0) || ns.iter().any(|&n| !(n >= 1.0)) {
        return invalid(format!("norm_scan needs delta > 0, s >= 0, N >= 1 (delta={delta}, s={s})"));
    }
    let target = bump_l2() / 2f64.sqrt();
    let tr = match method {
        NormMethod::Modulation => Some(BumpTransform::new()),
        NormMethod::Grid => None,
    };
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let v = match &tr {
            Some(t) => scaled_norm_modulation(t, n, delta, s, gamma),
            None => scaled_norm_grid(n, delta, s, gamma)?,
        };
        rows.push(NormRow { n, scaled_norm: v, target, rel_err: (v - target).abs() / target, method });
    }
    let extrapolated = match rows.len() {
        0 | 1 => None,
        k => {
            let (r1, r2) = (&rows[k - 2], &rows[k - 1]);
            let w = (r2.n / r1.n).powi(2);
            Some((w * r2.scaled_norm - r1.scaled_norm) / (w - 1.0))
        }
    };
    Ok(NormScan { delta, s, gamma, rows, target, extrapolated })
}

/// Integrator settings for the twin runs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwinConfig {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "one")]
    pub diag_stride: usize,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default)]
    pub terms: Terms,
    /// Also evolve the low parts and report ‖u_N − u_ap‖_{H^s} at t_end.
    #[serde(default)]
    pub approx_report: bool,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, Serialize)]
pub struct Fit {
    pub amplitude: f64,
    /// ‖d − A|sin t|‖ / ‖d‖ over the samples.
    pub residual: f64,
}

/// Least squares d(t) ≈ A|sin t|.
pub fn fit_sine(t: &[f64], d: &[f64]) -> Fit {
    let (num, den) = t
        .iter()
        .zip(d)
        .fold((0.0, 0.0), |(a, b), (t, d)| (a + d * t.sin().abs(), b + t.sin().powi(2)));
    let amp = if den > 0.0 { num / den } else { 0.0 };
    let (res, norm) = t.iter().zip(d).fold((0.0, 0.0), |(r, n), (t, d)| {
        (r + (d - amp * t.sin().abs()).powi(2), n + d * d)
    });
    Fit { amplitude: amp, residual: if norm > 0.0 { (res / norm).sqrt() } else { 0.0 } }
}

#[derive(Clone, Debug, Serialize)]
pub struct TwinResult {
    pub params: IllposedParams,
    pub grid: GridSpec,
    pub terms: Terms,
    pub t: Vec<f64>,
    /// ‖u⁺(t) − u⁻(t)‖_{H^s}
    pub d: Vec<f64>,
    pub fit: Fit,
    /// 2εN⁻³‖φ̃_N‖_{H^s}
    pub d0_predicted: f64,
    pub phase_rate: f64,
    /// κ − 1: how far the packet phase rate is from the ansatz's ∓t.
    pub lambda_cancellation_residual: f64,
    pub mass_drift: [f64; 2],
    /// ‖u_N^± − u_ap^±‖_{H^s} at t_end when requested.
    pub approx_error: Option<[f64; 2]>,
    pub blow_up: Option<f64>,
}

fn hs_distance(g: &Grid, a: &RealField, b: &RealField, s: f64) -> f64 {
    let diff: Vec<f64> = a.values().iter().zip(b.values()).map(|(x, y)| x - y).collect();
    sobolev_norm_values(g, &diff, s)
}

/// Evolve u⁺ and u⁻ in lockstep under the rescaled equation and record
/// their H^s distance.
pub fn twin_divergence(p: &IllposedParams, cfg: &TwinConfig, grid: Option<&Grid>) -> Result<TwinResult> {
    p.validate()?;
    if !(cfg.dt > 0.0) || !(cfg.t_end > 0.0 && cfg.t_end <= 1.0) || cfg.dt > cfg.t_end || cfg.diag_stride == 0 {
        return invalid(format!("twin run needs 0 < dt <= t_end <= 1, got dt={} t_end={}", cfg.dt, cfg.t_end));
    }
    let g = match grid {
        Some(g) => g.clone(),
        None => p.grid_spec()?.build()?,
    };
    let (up, um) = build_initials(p, &g)?;
    let make = |u: &RealField| -> Result<Evolution> {
        Ok(Evolution::new(Stepper::new(&g, &p.gardner, cfg.dt, cfg.scheme, cfg.terms)?, u, 0.0))
    };
    let (mut ep, mut em) = (make(&up)?, make(&um)?);
    let (m0p, m0m) = (mass(&up), mass(&um));
    let mut ts = vec![0.0];
    let mut ds = vec![hs_distance(&g, &up, &um, p.s)];
    let steps = (cfg.t_end / cfg.dt).round() as u64;
    let mut blow_up = None;
    for i in 1..=steps {
        if let Err(e) = advance_pair(&mut ep, &mut em) {
            match e {
                Error::BlowUp { last_good_t } => {
                    blow_up = Some(last_good_t);
                    break;
                }
                other => return Err(other),
            }
        }
        if i % cfg.diag_stride as u64 == 0 || i == steps {
            ts.push(ep.t());
            ds.push(hs_distance(&g, &ep.field(), &em.field(), p.s));
        }
    }
    let (fp, fm) = (ep.field(), em.field());
    let mass_drift = [(mass(&fp) - m0p).abs() / m0p, (mass(&fm) - m0m).abs() / m0m];
    let approx_error = if cfg.approx_report && blow_up.is_none() {
        let (lp, lm) = (low_initial(p, &g, 1.0)?, low_initial(p, &g, -1.0)?);
        let (mut elp, mut elm) = (make(&lp)?, make(&lm)?);
        for _ in 0..steps {
            advance_pair(&mut elp, &mut elm)?;
        }
        let t = ep.t();
        let ap = elp.field().add(&high_part(p, &g, t, 1.0)?)?;
        let am = elm.field().add(&high_part(p, &g, t, -1.0)?)?;
        Some([hs_distance(&g, &fp, &ap, p.s), hs_distance(&g, &fm, &am, p.s)])
    } else {
        None
    };
    let a = p.dilation();
    let lt: Vec<f64> = g.nodes().iter().map(|&x| bump_tilde(x / a)).collect();
    let d0_predicted = 2.0 * p.low_amplitude() * sobolev_norm_values(&g, &lt, p.s);
    let kappa = p.phase_rate();
    Ok(TwinResult {
        params: *p,
        grid: (&g).into(),
        terms: cfg.terms,
        fit: fit_sine(&ts, &ds),
        t: ts,
        d: ds,
        d0_predicted,
        phase_rate: kappa,
        lambda_cancellation_residual: kappa - 1.0,
        mass_drift,
        approx_error,
        blow_up,
    })
}

/// ‖u_l(t) − u_l(0)‖_{L²} for the low part evolved alone on a grid sized to
/// the bump (the carrier is absent, so no N-resolution is needed).
pub fn low_part_drift(p: &IllposedParams, t: f64, dt: f64) -> Result<f64> {
    p.validate()?;
    let a = p.dilation();
    let half = 4.0 * a * 1.02 + 10.0;
    let n = ((2.0 * half / (a / 16.0)).ceil() as usize).next_power_of_two();
    let g = Grid::new(half, n)?;
    let u0 = low_initial(p, &g, 1.0)?;
    let mut ev = Evolution::new(Stepper::new(&g, &p.gardner, dt, Scheme::Etdrk4, Terms::Full)?, &u0, 0.0);
    for _ in 0..(t / dt).round() as u64 {
        ev.advance()?;
    }
    Ok(ev.field().sub(&u0)?.norm_l2())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: f64, eps: f64) -> IllposedParams {
        IllposedParams {
            n,
            delta: 0.5,
            s: 2.0,
            eps,
            gardner: GardnerParams::new(1.0, 1.0).unwrap(),
        }
    }

    #[test]
    fn bump_shape() {
        assert_eq!(bump(0.5), 1.0);
        assert_eq!(bump(2.5), 0.0);
        let mid = bump(1.5);
        assert!(mid > 0.0 && mid < 1.0);
        let xs: Vec<f64> = (0..=100).map(|i| 1.0 + i as f64 / 100.0).collect();
        assert!(xs.windows(2).all(|w| bump(w[1]) <= bump(w[0])));
        for i in 0..200 {
            let x = -3.0 + 6.0 * i as f64 / 199.0;
            assert!((bump_tilde(x) * bump(x) - bump(x)).abs() < 1e-15);
        }
    }

    #[test]
    fn phase_values() {
        let mut p = params(4.0, 0.01);
        p.gardner = GardnerParams::new(0.1, 1.0).unwrap();
        assert_eq!(phase(&p, 0.0), 0.0);
        assert!((phase(&p, 1.0) - 1017.6).abs() < 1e-10);
        assert!((phase(&p, 0.6) - 2.0 * phase(&p, 0.3)).abs() < 1e-10);
    }

    #[test]
    fn param_guards() {
        assert!(params(4.0, 0.01).validate().is_ok());
        assert!(params(3.0, 0.01).validate().is_err());
        assert!(params(4.0, 0.2).validate().is_err());
        let mut p = params(4.0, 0.01);
        p.s = 0.5;
        p.delta = 0.9;
        assert!(p.validate().is_err());
        p.delta = 1.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn initials_differ_by_low_part() {
        let p = params(4.0, 0.05);
        let g = p.grid_spec().unwrap().build().unwrap();
        let (a, b) = build_initials(&p, &g).unwrap();
        let diff = a.sub(&b).unwrap().norm_l2();
        let tilde = RealField::from_fn(&g, |x| bump_tilde(x / p.dilation())).unwrap().norm_l2();
        let want = 2.0 * p.low_amplitude() * tilde;
        assert!((diff - want).abs() < 1e-12 * want);
        // ‖φ̃_N‖ = N^{(4+δ)/2}‖φ̃‖ and ‖φ̃‖ = √2‖φ‖
        let scaled = p.n.powf((4.0 + p.delta) / 2.0) * 2f64.sqrt() * bump_l2();
        assert!((tilde - scaled).abs() < 1e-6 * scaled, "{tilde} vs {scaled}");
        let (a0, b0) = build_initials(&params(4.0, 0.0), &g).unwrap();
        assert_eq!(a0.values(), b0.values());
    }

    #[test]
    fn under_resolved_grid_is_refused() {
        let p = params(4.0, 0.01);
        let spec = p.grid_spec().unwrap();
        let coarse = Grid::new(spec.half_length, spec.n / 4).unwrap();
        assert!(build_initials(&p, &coarse).is_err());
        let small = Grid::new(100.0, spec.n).unwrap();
        assert!(matches!(build_initials(&p, &small), Err(Error::DomainTooSmall { .. })));
        assert!(matches!(params(32.0, 0.01).grid_spec(), Err(Error::Resource(_))));
    }

    #[test]
    fn smooth_sizes() {
        assert_eq!(smooth_size(16), 16);
        assert_eq!(smooth_size(17), 18);
        assert_eq!(smooth_size(1_926_300), 1_944_000);
        for n in [4.0, 6.0, 8.0] {
            let spec = params(n, 0.01).grid_spec().unwrap();
            let g = spec.build().unwrap();
            assert!(params(n, 0.01).check_grid(&g).is_ok());
        }
    }

    #[test]
    fn modulation_quadrature_matches_grid() {
        for (n, gamma) in [(4.0, 0.0), (4.0, 0.7), (6.0, 0.3)] {
            let m = norm_scan(0.5, 2.0, &[n], gamma, NormMethod::Modulation).unwrap();
            let g = norm_scan(0.5, 2.0, &[n], gamma, NormMethod::Grid).unwrap();
            let (a, b) = (m.rows[0].scaled_norm, g.rows[0].scaled_norm);
            assert!((a - b).abs() < 1e-9 * b, "N={n}: {a} vs {b}");
        }
    }

    #[test]
    fn norm_scan_limit() {
        let scan = norm_scan(0.5, 2.0, &[8.0, 16.0, 32.0], 0.0, NormMethod::Modulation).unwrap();
        let errs: Vec<f64> = scan.rows.iter().map(|r| r.rel_err).collect();
        assert!(errs[2] < 0.02, "{errs:?}");
        assert!(errs[0] > errs[1] && errs[1] > errs[2]);
        let shifted = norm_scan(0.5, 2.0, &[32.0], 1.3, NormMethod::Modulation).unwrap();
        assert!((shifted.rows[0].scaled_norm - scan.rows[2].scaled_norm).abs() < 0.01 * scan.target);
        let s0 = norm_scan(0.5, 0.0, &[4.0], 0.0, NormMethod::Modulation).unwrap();
        // s = 0: the L² norm of φ_N sin(Nx) scaled by N^{−(4+δ)/2}
        assert!(s0.rows[0].rel_err < 1e-6, "{:?}", s0.rows[0]);
    }

    #[test]
    fn sine_fit() {
        let t: Vec<f64> = (0..=10).map(|i| 0.05 * i as f64).collect();
        let d: Vec<f64> = t.iter().map(|t| 2.5 * t.sin()).collect();
        let f = fit_sine(&t, &d);
        assert!((f.amplitude - 2.5).abs() < 1e-12 && f.residual < 1e-12);
    }

    #[test]
    fn low_part_barely_moves() {
        let a = low_part_drift(&params(4.0, 0.05), 0.5, 0.05).unwrap();
        let b = low_part_drift(&params(5.0, 0.05), 0.5, 0.05).unwrap();
        assert!(b < a, "{a} vs {b}");
    }

    #[test]
    fn small_twin_run_separates() {
        let p = params(4.0, 0.05);
        let cfg = TwinConfig {
            dt: 2.5e-4,
            t_end: 0.05,
            diag_stride: 40,
            scheme: Scheme::Ifrk4,
            terms: Terms::Full,
            approx_report: false,
        };
        let r = twin_divergence(&p, &cfg, None).unwrap();
        assert!(r.blow_up.is_none());
        assert_eq!(r.t.len(), 6);
        assert!((r.d[0] - r.d0_predicted).abs() < 1e-9 * r.d0_predicted);
        assert!(r.d[5] > r.d[1], "{:?}", r.d);
        // IFRK4 error from the k³ high-low coupling dominates here, not conservation
        assert!(r.mass_drift.iter().all(|&m| m < 1e-4), "{:?}", r.mass_drift);
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn wide_bump_is_one_on_the_narrow_support(x in -3.0..3.0f64) {
            prop_assert_eq!(bump_tilde(x) * bump(x), bump(x));
            prop_assert!((0.0..=1.0).contains(&bump(x)));
            prop_assert_eq!(bump(x), bump(-x));
        }

        #[test]
        fn phase_is_linear_in_time(n in 2.0..16.0f64, eps in 0.0..0.1f64, t in -1.0..1.0f64) {
            let p = IllposedParams { n, delta: 0.5, s: 2.0, eps, gardner: GardnerParams::new(1.0, 1.0).unwrap() };
            let (a, b) = (phase(&p, t), phase(&p, 0.5 * t));
            prop_assert!((a - 2.0 * b).abs() <= 1e-9 * a.abs().max(1.0));
        }
    }
}
