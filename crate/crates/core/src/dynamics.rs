//! Time stepping for the equation and its rescaled form
//!
//! w_t + w_5x + 10m²w_3x + N₂(w) + N₃(w) + SN(w) = 0,  m = μλ,
//!
//! which is the original equation when λ = 1. The linear part is integrated
//! exactly in Fourier space; nonlinear terms are evaluated on the 3n grid,
//! which removes all aliasing up to the quintic term.

use std::path::PathBuf;
use std::sync::Mutex;
use std::thread;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exact::{breather_point, BreatherParams, SolitonParams};
use crate::field::{fmt17, sobolev_norm_values, Grid, GridSpec, PaddedWork, RealField};
use crate::functionals::{energy5_mu, energy_mu, mass, GardnerParams};
use crate::illposed::{build_initials, IllposedParams};

type C = Complex64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Equation {
    #[default]
    Original,
    General,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    Etdrk4,
    Ifrk4,
}

/// Which nonlinear terms are kept.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terms {
    #[default]
    Full,
    /// No nonlinearity at all.
    LinearOnly,
    /// Drop the high-low term 20m·w·w_3x (ablation control).
    NoHighLow,
}

/// Linear symbol ℓ(k) = −ik⁵ + 10im²k³, so that ŵ_t = ℓ(k)ŵ + N̂.
pub fn linear_symbol(k: f64, m: f64) -> C {
    C::new(0.0, -k.powi(5) + 10.0 * m * m * k.powi(3))
}

/// Buffers for one nonlinear evaluation on the padded grid.
struct NlWork {
    pad: PaddedWork,
    d: [Vec<f64>; 3],
}

impl NlWork {
    fn new(g: &Grid) -> NlWork {
        let m = g.padded_n();
        NlWork { pad: g.padded_work(), d: [vec![0.0; m], vec![0.0; m], vec![0.0; m]] }
    }
}

/// −(N₂ + N₃ + SN) in Fourier space from the half spectrum `c`, written to
/// `out`. Every term is a total derivative, N = ∂x F with
///
///   F = 20m·ww_xx + 10m·w_x² + 60m²w³ + 10w²w_xx + 10ww_x² + 6w⁵ + 60m³w² + 30m·w⁴,
///
/// so only w, w_x, w_xx go to the padded grid. Dropping 20m·ww_3x replaces
/// 20m·ww_xx + 10m·w_x² by 20m·w_x².
fn nonlinear_hat_into(g: &Grid, c: &[C], m: f64, terms: Terms, out: &mut [C], w: &mut NlWork) {
    let n = g.n();
    if terms == Terms::LinearOnly {
        out.iter_mut().for_each(|z| *z = C::new(0.0, 0.0));
        return;
    }
    for (k, d) in w.d.iter_mut().enumerate() {
        g.padded_derivative_into(c, k as u32, d, &mut w.pad);
    }
    let (m2, m3) = (m * m, m * m * m);
    let ablate = terms == Terms::NoHighLow;
    let [d0, d1, d2] = &mut w.d;
    for i in 0..d0.len() {
        let (u, u1, u2) = (d0[i], d1[i], d2[i]);
        let (uu, u11) = (u * u, u1 * u1);
        let mixed = if ablate { 20.0 * m * u11 } else { 20.0 * m * u * u2 + 10.0 * m * u11 };
        let f2 = mixed + 60.0 * m2 * uu * u;
        let f3 = 10.0 * uu * u2 + 10.0 * u * u11 + 6.0 * uu * uu * u;
        let fs = 60.0 * m3 * uu + 30.0 * m * uu * uu;
        d0[i] = f2 + f3 + fs;
    }
    g.forward_truncated_into(d0, out, &mut w.pad);
    for (j, z) in out.iter_mut().enumerate() {
        *z *= C::new(0.0, -g.k(j));
    }
    out[n / 2] = C::new(0.0, 0.0);
}

fn nonlinear_hat(g: &Grid, c: &[C], m: f64, terms: Terms) -> Vec<C> {
    let mut out = vec![C::new(0.0, 0.0); g.n() / 2 + 1];
    nonlinear_hat_into(g, c, m, terms, &mut out, &mut NlWork::new(g));
    out
}

/// w_t for the rescaled equation (linear and nonlinear parts).
pub fn rhs_general(w: &RealField, gp: &GardnerParams) -> RealField {
    rhs_general_with(w, gp, Terms::Full)
}

pub fn rhs_general_with(w: &RealField, gp: &GardnerParams, terms: Terms) -> RealField {
    let g = w.grid();
    let m = gp.mu_eff();
    let c = g.forward(w.values());
    let nl = nonlinear_hat(g, &c, m, terms);
    let hat: Vec<C> = c
        .iter()
        .zip(&nl)
        .enumerate()
        .map(|(j, (cj, nj))| linear_symbol(g.k(j), m) * cj + nj)
        .collect();
    let mut hat = hat;
    hat[g.n() / 2] = C::new(0.0, 0.0);
    RealField::from_parts(g, g.inverse(hat))
}

/// u_t for the original equation: the rescaled form at λ = 1.
pub fn rhs_original(u: &RealField, gp: &GardnerParams) -> RealField {
    rhs_general(u, &GardnerParams { mu: gp.mu, lambda: 1.0 })
}

/// Residual of u_λ(t, x) = λB(λ⁵t, λx) in the rescaled equation, with the
/// time derivative from the closed form through the chain rule. The grid is
/// in the rescaled variable x.
pub fn scaling_residual(bp: &BreatherParams, lambda: f64, t: f64, grid: &Grid) -> Result<f64> {
    let gp = GardnerParams::new(bp.mu, lambda)?;
    let inner = Grid::new(lambda * grid.half_length(), grid.n())?;
    let d = crate::exact::breather_derivs(bp, lambda.powi(5) * t, &inner)?;
    let w = RealField::new(grid, d.b[0].iter().map(|v| lambda * v).collect())?;
    w.check_decay(1e-12)?;
    let rhs = rhs_general(&w, &gp);
    let l6 = lambda.powi(6);
    Ok(d.b_t
        .iter()
        .zip(rhs.values())
        .fold(0.0f64, |acc, (bt, r)| acc.max((l6 * bt - r).abs())))
}

/// Contour-averaged φ-function coefficients for one time step. The symbol
/// is imaginary, so the mean runs over a full circle around L = ℓ·dt. A
/// fixed unit radius can put a node next to the removable singularity at 0
/// when |L| ≈ 1, so the radius shrinks to |L|/2 there.
struct Coefficients {
    e: Vec<C>,
    e2: Vec<C>,
    q: Vec<C>,
    f1: Vec<C>,
    f2: Vec<C>,
    f3: Vec<C>,
}

const CONTOUR_POINTS: usize = 32;

fn coefficients(g: &Grid, m: f64, dt: f64) -> Coefficients {
    let len = g.n() / 2 + 1;
    let roots: Vec<C> = (1..=CONTOUR_POINTS)
        .map(|j| C::from_polar(1.0, std::f64::consts::TAU * (j as f64 - 0.5) / CONTOUR_POINTS as f64))
        .collect();
    let mut c = Coefficients {
        e: Vec::with_capacity(len),
        e2: Vec::with_capacity(len),
        q: Vec::with_capacity(len),
        f1: Vec::with_capacity(len),
        f2: Vec::with_capacity(len),
        f3: Vec::with_capacity(len),
    };
    let inv = 1.0 / CONTOUR_POINTS as f64;
    for j in 0..len {
        let l = linear_symbol(g.k(j), m) * dt;
        let radius = if l.norm() < 0.5 { 1.0 } else { (0.5 * l.norm()).min(1.0) };
        c.e.push(l.exp());
        c.e2.push((l * 0.5).exp());
        let (mut q, mut f1, mut f2, mut f3) = (C::default(), C::default(), C::default(), C::default());
        for r in &roots {
            let z = l + r * radius;
            let ez = z.exp();
            let z3 = z * z * z;
            q += ((z * 0.5).exp() - 1.0) / z;
            f1 += (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3;
            f2 += (2.0 + z + ez * (z - 2.0)) / z3;
            f3 += (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3;
        }

        c.q.push(q * inv * dt);
        c.f1.push(f1 * inv * dt);
        c.f2.push(f2 * inv * dt);
        c.f3.push(f3 * inv * dt);
    }
    c
}

/// One-step map for a fixed grid, m and dt.
pub struct Stepper {
    grid: Grid,
    m: f64,
    dt: f64,
    scheme: Scheme,
    terms: Terms,
    c: Coefficients,
    work: Mutex<StepWork>,
}

struct StepWork {
    nl: NlWork,
    stage: [Vec<C>; 7],
}

impl Stepper {
    /// `dt` may be negative (backward stepping).
    pub fn new(grid: &Grid, gp: &GardnerParams, dt: f64, scheme: Scheme, terms: Terms) -> Result<Stepper> {
        if !(dt != 0.0 && dt.is_finite()) {
            return invalid(format!("time step must be finite and nonzero, got {dt}"));
        }
        let m = gp.mu_eff();
        let len = grid.n() / 2 + 1;
        let work = StepWork {
            nl: NlWork::new(grid),
            stage: std::array::from_fn(|_| vec![C::new(0.0, 0.0); len]),
        };
        let s = Stepper {
            grid: grid.clone(),
            m,
            dt,
            scheme,
            terms,
            c: coefficients(grid, m, dt),
            work: Mutex::new(work),
        };
        s.dispersion_self_test()?;
        Ok(s)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// Propagates cos(kx) by the linear factor and compares with
    /// cos(kx − ωdt), ω = k⁵ − 10m²k³, in physical space.
    fn dispersion_self_test(&self) -> Result<()> {
        let g = &self.grid;
        let j = 3.min(g.n() / 2 - 1);
        let k = g.k(j);
        let nodes = g.nodes();
        let u: Vec<f64> = nodes.iter().map(|x| (k * x).cos()).collect();
        let c: Vec<C> = g.forward(&u).iter().zip(&self.c.e).map(|(a, e)| a * e).collect();
        let out = g.inverse(c);
        let w = (k.powi(5) - 10.0 * self.m * self.m * k.powi(3)) * self.dt;
        let err = nodes
            .iter()
            .zip(&out)
            .fold(0.0f64, |acc, (x, v)| acc.max((v - (k * x - w).cos()).abs()));
        if err > 1e-10 * (1.0 + w.abs()) {
            return Err(Error::InternalConsistency(format!(
                "linear propagator disagrees with the dispersion relation by {err:.3e}"
            )));
        }
        Ok(())
    }

    /// Advance a half spectrum by one step in place.
    pub fn step_hat(&self, v: &mut [C]) {
        let c = &self.c;
        let (g, m, terms) = (&self.grid, self.m, self.terms);
        let mut guard = self.work.lock().unwrap_or_else(|e| e.into_inner());
        let StepWork { nl, stage } = &mut *guard;
        let len = v.len();
        let [s1, s2, s3, n1, n2, n3, n4] = stage;
        let mut nhat = |x: &[C], out: &mut [C]| nonlinear_hat_into(g, x, m, terms, out, nl);
        match self.scheme {
            Scheme::Etdrk4 => {
                nhat(v, n1);
                for j in 0..len {
                    s1[j] = c.e2[j] * v[j] + c.q[j] * n1[j];
                }
                nhat(s1, n2);
                for j in 0..len {
                    s2[j] = c.e2[j] * v[j] + c.q[j] * n2[j];
                }
                nhat(s2, n3);
                for j in 0..len {
                    s3[j] = c.e2[j] * s1[j] + c.q[j] * (2.0 * n3[j] - n1[j]);
                }
                nhat(s3, n4);
                for j in 0..len {
                    v[j] = c.e[j] * v[j] + c.f1[j] * n1[j] + 2.0 * c.f2[j] * (n2[j] + n3[j]) + c.f3[j] * n4[j];
                }
            }
            Scheme::Ifrk4 => {
                // stages in the interaction picture, k_i = dt·N(stage)
                let dt = self.dt;
                nhat(v, n1);
                for j in 0..len {
                    s1[j] = c.e2[j] * (v[j] + 0.5 * dt * n1[j]);
                }
                nhat(s1, n2);
                for j in 0..len {
                    s2[j] = c.e2[j] * v[j] + 0.5 * dt * n2[j];
                }
                nhat(s2, n3);
                for j in 0..len {
                    s3[j] = c.e[j] * v[j] + c.e2[j] * dt * n3[j];
                }
                nhat(s3, n4);
                for j in 0..len {
                    v[j] = c.e[j] * v[j]
                        + dt * (c.e[j] * n1[j] + 2.0 * c.e2[j] * (n2[j] + n3[j]) + n4[j]) / 6.0;
                }
            }
        }
        v[g.n() / 2] = C::new(0.0, 0.0);
    }

    /// One step of a physical field.
    pub fn step(&self, u: &RealField) -> Result<RealField> {
        let mut v = self.grid.forward(u.values());
        self.step_hat(&mut v);
        if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::BlowUp { last_good_t: 0.0 });
        }
        RealField::new(&self.grid, self.grid.inverse(v))
    }
}

/// A field advanced step by step, kept in Fourier space.
pub struct Evolution {
    stepper: Stepper,
    hat: Vec<C>,
    steps: u64,
    t0: f64,
}

impl Evolution {
    pub fn new(stepper: Stepper, u0: &RealField, t0: f64) -> Evolution {
        let mut hat = stepper.grid.forward(u0.values());
        let n = stepper.grid.n();
        hat[n / 2] = C::new(0.0, 0.0);
        Evolution { stepper, hat, steps: 0, t0 }
    }

    pub fn t(&self) -> f64 {
        self.t0 + self.steps as f64 * self.stepper.dt
    }

    pub fn spectrum(&self) -> &[C] {
        &self.hat
    }

    pub fn field(&self) -> RealField {
        let g = &self.stepper.grid;
        RealField::from_parts(g, g.inverse(self.hat.clone()))
    }

    /// On a non-finite result the state is left at the last good step.
    pub fn advance(&mut self) -> Result<()> {
        let mut next = self.hat.clone();
        self.stepper.step_hat(&mut next);
        if next.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::BlowUp { last_good_t: self.t() });
        }
        self.hat = next;
        self.steps += 1;
        Ok(())
    }
}

/// Advance two evolutions in lockstep, each step on its own thread.
pub fn advance_pair(a: &mut Evolution, b: &mut Evolution) -> Result<()> {
    let (ra, rb) = thread::scope(|s| {
        let ha = s.spawn(|| a.advance());
        let rb = b.advance();
        (ha.join().expect("stepper thread panicked"), rb)
    });
    ra.and(rb)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwinSign {
    Plus,
    Minus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Initial {
    Breather(BreatherParams),
    Soliton(SolitonParams),
    TwinPacket { packet: IllposedParams, sign: TwinSign },
    File { path: PathBuf },
}

fn one() -> usize {
    1
}

fn two() -> f64 {
    2.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    #[serde(default)]
    pub equation: Equation,
    pub gardner: GardnerParams,
    pub grid: GridSpec,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default = "one")]
    pub diag_stride: usize,
    pub initial: Initial,
    /// Sobolev index of the hs_norm column.
    #[serde(default = "two")]
    pub sobolev_s: f64,
    #[serde(default)]
    pub terms: Terms,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.effective_params().validate()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) || !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return invalid(format!("dt and t_end must be positive, got {} and {}", self.dt, self.t_end));
        }
        if self.dt > self.t_end {
            return invalid("dt exceeds t_end");
        }
        let steps = self.t_end / self.dt;
        if (steps - steps.round()).abs() > 1e-6 * steps {
            return invalid(format!("t_end / dt = {steps} is not an integer"));
        }
        if self.diag_stride == 0 {
            return invalid("diag_stride must be at least 1");
        }
        if !(self.sobolev_s >= 0.0) {
            return invalid("sobolev_s must be non-negative");
        }
        self.grid.build()?;
        match &self.initial {
            Initial::Breather(bp) => {
                bp.validate()?;
                self.same_mu(bp.mu)
            }
            Initial::Soliton(sp) => {
                sp.validate()?;
                self.same_mu(sp.mu)
            }
            Initial::TwinPacket { packet, .. } => packet.validate(),
            Initial::File { .. } => Ok(()),
        }
    }

    fn same_mu(&self, mu: f64) -> Result<()> {
        if mu != self.gardner.mu {
            return invalid(format!("initial data has mu = {mu}, equation has mu = {}", self.gardner.mu));
        }
        Ok(())
    }

    /// λ is forced to 1 for the original equation.
    pub fn effective_params(&self) -> GardnerParams {
        match self.equation {
            Equation::Original => GardnerParams { lambda: 1.0, ..self.gardner },
            Equation::General => self.gardner,
        }
    }

    pub fn steps(&self) -> u64 {
        (self.t_end / self.dt).round() as u64
    }

    /// Closed-form solution at time t, when one exists for this initial datum.
    pub fn exact(&self, t: f64, grid: &Grid) -> Option<RealField> {
        let lam = self.effective_params().lambda;
        let l5 = lam.powi(5);
        match &self.initial {
            Initial::Breather(bp) => Some(RealField::from_parts(
                grid,
                grid.nodes().iter().map(|&x| lam * breather_point(bp, l5 * t, lam * x)).collect(),
            )),
            Initial::Soliton(sp) => {
                let v = sp.velocity();
                Some(RealField::from_parts(
                    grid,
                    grid.nodes().iter().map(|&x| lam * sp.profile(lam * x - v * l5 * t + sp.x1)).collect(),
                ))
            }
            _ => None,
        }
    }

    pub fn initial_field(&self, grid: &Grid) -> Result<RealField> {
        match &self.initial {
            Initial::Breather(_) | Initial::Soliton(_) => Ok(self.exact(0.0, grid).expect("closed form")),
            Initial::TwinPacket { packet, sign } => {
                let (plus, minus) = build_initials(packet, grid)?;
                Ok(match sign {
                    TwinSign::Plus => plus,
                    TwinSign::Minus => minus,
                })
            }
            Initial::File { path } => read_field_csv(path, grid),
        }
    }
}

/// Reads the "x,value" CSV written by [`RealField::write_csv`].
pub fn read_field_csv(path: &std::path::Path, grid: &Grid) -> Result<RealField> {
    let text = std::fs::read_to_string(path)?;
    let mut values = Vec::with_capacity(grid.n());
    for (i, line) in text.lines().skip(1).filter(|l| !l.trim().is_empty()).enumerate() {
        let mut parts = line.split(',');
        let parse = |s: Option<&str>| -> Result<f64> {
            s.and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| Error::InvalidArgument(format!("bad CSV line {}: {line}", i + 2)))
        };
        let x = parse(parts.next())?;
        let v = parse(parts.next())?;
        if i < grid.n() && (x - grid.x(i)).abs() > 1e-9 * grid.half_length() {
            return invalid(format!("CSV node {i} at x = {x} does not match the grid"));
        }
        values.push(v);
    }
    RealField::new(grid, values)
}

/// One row of the diagnostics table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub energy5: f64,
    pub hs_norm: f64,
    pub l2_error: Option<f64>,
    pub peak_x: Option<f64>,
}

pub const DIAGNOSTICS_HEADER: &str = "t,mass,energy,energy5,hs_norm,l2_error,peak_x";

pub fn diagnostics_csv(rows: &[DiagnosticsRow]) -> String {
    let opt = |v: Option<f64>| v.map(fmt17).unwrap_or_default();
    let mut s = String::from(DIAGNOSTICS_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt17(r.t),
            fmt17(r.mass),
            fmt17(r.energy),
            fmt17(r.energy5),
            fmt17(r.hs_norm),
            opt(r.l2_error),
            opt(r.peak_x)
        ));
    }
    s
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    /// Last finite state.
    pub final_field: RealField,
    pub final_t: f64,
    pub diagnostics: Vec<DiagnosticsRow>,
    /// Set when the run stopped early on a non-finite value.
    pub blow_up: Option<f64>,
    pub runtime_seconds: f64,
}

impl RunOutput {
    /// Largest relative change of M, E, E₅ from the first row.
    pub fn max_drift(&self) -> f64 {
        let first = match self.diagnostics.first() {
            Some(r) => r,
            None => return 0.0,
        };
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE);
        self.diagnostics.iter().fold(0.0f64, |acc, r| {
            acc.max(rel(r.mass, first.mass))
                .max(rel(r.energy, first.energy))
                .max(rel(r.energy5, first.energy5))
        })
    }

    pub fn max_error(&self) -> Option<f64> {
        self.diagnostics
            .iter()
            .filter_map(|r| r.l2_error)
            .fold(None, |acc, e| Some(acc.map_or(e, |a: f64| a.max(e))))
    }
}

fn diagnostics(cfg: &SimConfig, u: &RealField, t: f64) -> DiagnosticsRow {
    let gp = cfg.effective_params();
    let g = u.grid();
    let l2_error = cfg.exact(t, g).map(|e| {
        let d: f64 = e.values().iter().zip(u.values()).map(|(a, b)| (a - b) * (a - b)).sum();
        (d * g.dx()).sqrt()
    });
    let peak_x = match cfg.initial {
        Initial::Soliton(_) => track_peak(u).ok(),
        _ => None,
    };
    DiagnosticsRow {
        t,
        mass: mass(u),
        energy: energy_mu(u, &gp),
        energy5: energy5_mu(u, &gp),
        hs_norm: sobolev_norm_values(g, u.values(), cfg.sobolev_s),
        l2_error,
        peak_x,
    }
}

/// Decay required of initial data at the box edges.
pub const INITIAL_DECAY: f64 = 1e-10;

pub fn run(cfg: &SimConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let start = Instant::now();
    let grid = cfg.grid.build()?;
    let u0 = cfg.initial_field(&grid)?;
    u0.check_decay(INITIAL_DECAY)?;
    let gp = cfg.effective_params();
    let stepper = Stepper::new(&grid, &gp, cfg.dt, cfg.scheme, cfg.terms)?;
    // pre-flight: one trial step must stay finite
    stepper.step(&u0).map_err(|_| Error::BlowUp { last_good_t: 0.0 })?;

    let mut ev = Evolution::new(stepper, &u0, 0.0);
    let mut rows = vec![diagnostics(cfg, &u0, 0.0)];
    let total = cfg.steps();
    let mut blow_up = None;
    for i in 1..=total {
        if let Err(e) = ev.advance() {
            match e {
                Error::BlowUp { last_good_t } => {
                    blow_up = Some(last_good_t);
                    break;
                }
                other => return Err(other),
            }
        }
        if i % cfg.diag_stride as u64 == 0 || i == total {
            rows.push(diagnostics(cfg, &ev.field(), ev.t()));
        }
    }
    Ok(RunOutput {
        final_field: ev.field(),
        final_t: ev.t(),
        diagnostics: rows,
        blow_up,
        runtime_seconds: start.elapsed().as_secs_f64(),
    })
}

/// One step of `state` under the configured scheme (convenience wrapper).
pub fn step(state: &RealField, cfg: &SimConfig) -> Result<RealField> {
    cfg.validate()?;
    Stepper::new(state.grid(), &cfg.effective_params(), cfg.dt, cfg.scheme, cfg.terms)?.step(state)
}

/// Position of the unique maximum by a parabola through the top three nodes.
pub fn track_peak(u: &RealField) -> Result<f64> {
    let v = u.values();
    let n = v.len();
    let (imax, vmax) = v
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &x)| if x > bv { (i, x) } else { (bi, bv) });
    let edge = v[..2].iter().chain(&v[n - 2..]).fold(0.0f64, |m, x| m.max(x.abs()));
    if !(vmax > 3.0 * edge) || vmax <= 0.0 {
        return Err(Error::NoPeak(format!("maximum {vmax:.3e} not above 3x edge level {edge:.3e}")));
    }
    let local_maxima = (0..n)
        .filter(|&i| {
            let (l, r) = (v[(i + n - 1) % n], v[(i + 1) % n]);
            v[i] > l && v[i] >= r && v[i] > 0.1 * vmax
        })
        .count();
    if local_maxima != 1 {
        return Err(Error::NoPeak(format!("{local_maxima} local maxima above 10% of the peak")));
    }
    let (l, c, r) = (v[(imax + n - 1) % n], v[imax], v[(imax + 1) % n]);
    let curv = l - 2.0 * c + r;
    let off = if curv < 0.0 { 0.5 * (l - r) / curv } else { 0.0 };
    Ok(u.grid().x(imax) + off * u.grid().dx())
}

/// Least-squares slope of the tracked peak over the diagnostics rows.
pub fn peak_velocity(rows: &[DiagnosticsRow]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = rows.iter().filter_map(|r| r.peak_x.map(|x| (r.t, x))).collect();
    if pts.len() < 2 {
        return Err(Error::NoPeak("fewer than two tracked peaks".into()));
    }
    let n = pts.len() as f64;
    let (mt, mx) = pts.iter().fold((0.0, 0.0), |(a, b), (t, x)| (a + t / n, b + x / n));
    let (num, den) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), (t, x)| (a + (t - mt) * (x - mx), b + (t - mt) * (t - mt)));
    Ok(num / den)
}
