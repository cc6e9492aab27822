//! The breather B = ∂x B̃, B̃ = 2 arctan(G/F), and the f/g bookkeeping behind
//! its derivatives.
//!
//! F and G grow like e^{|β y₂|}, so every evaluation that feeds a field works
//! with f, g multiplied by e^{-|β y₂|}. All quantities used downstream (B, B̃,
//! B̃_t, log-derivatives of D) are homogeneous of degree zero in (f, g), so the
//! rescaling is invisible to them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ad::{Dual, Jet, Scalar};
use crate::error::{invalid, Error, Result};
use crate::field::{Grid, RealField};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BreatherParams {
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
    #[serde(default)]
    pub x1: f64,
    #[serde(default)]
    pub x2: f64,
}

impl BreatherParams {
    pub fn new(alpha: f64, beta: f64, mu: f64, x1: f64, x2: f64) -> Result<BreatherParams> {
        let p = BreatherParams { alpha, beta, mu, x1, x2 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.alpha, self.beta, self.mu, self.x1, self.x2]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.alpha == 0.0 || self.beta == 0.0 || !(self.mu > 0.0) {
            return invalid(format!("breather needs alpha, beta != 0 and mu > 0: {self:?}"));
        }
        if !(self.delta() > 0.0) {
            return invalid(format!("breather needs Delta > 0, got {}", self.delta()));
        }
        Ok(())
    }

    /// Δ = α² + β² − 4μ²
    pub fn delta(&self) -> f64 {
        self.alpha * self.alpha + self.beta * self.beta - 4.0 * self.mu * self.mu
    }

    pub fn delta5(&self) -> f64 {
        shape(self.alpha, self.beta, self.mu).d5
    }

    pub fn gamma5(&self) -> f64 {
        shape(self.alpha, self.beta, self.mu).g5
    }

    /// A₁ = (α²+β²)²
    pub fn a1(&self) -> f64 {
        let s = self.alpha * self.alpha + self.beta * self.beta;
        s * s
    }

    /// A₂ = 2(α² − β² − 5μ²)
    pub fn a2(&self) -> f64 {
        2.0 * (self.alpha * self.alpha - self.beta * self.beta - 5.0 * self.mu * self.mu)
    }

    /// √(α²+β²)/2, the upper end of the μ range.
    pub fn mu_max(&self) -> f64 {
        (self.alpha * self.alpha + self.beta * self.beta).sqrt() / 2.0
    }

    pub fn in_stability_regime(&self) -> bool {
        self.mu > 0.0 && self.mu < self.mu_max()
    }

    pub fn require_regime(&self) -> Result<()> {
        if self.in_stability_regime() {
            Ok(())
        } else {
            Err(Error::Regime(format!(
                "mu = {} outside (0, {})",
                self.mu,
                self.mu_max()
            )))
        }
    }

    /// Centre of the envelope (y₂ = 0) at time t.
    pub fn envelope_centre(&self, t: f64) -> f64 {
        -(self.gamma5() * t + self.x2)
    }

    pub fn get(&self, which: Param) -> f64 {
        match which {
            Param::Alpha => self.alpha,
            Param::Beta => self.beta,
            Param::Mu => self.mu,
            Param::X1 => self.x1,
            Param::X2 => self.x2,
        }
    }

    pub fn with(&self, which: Param, v: f64) -> BreatherParams {
        let mut p = *self;
        match which {
            Param::Alpha => p.alpha = v,
            Param::Beta => p.beta = v,
            Param::Mu => p.mu = v,
            Param::X1 => p.x1 = v,
            Param::X2 => p.x2 = v,
        }
        p
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Param {
    Alpha,
    Beta,
    Mu,
    X1,
    X2,
}

pub(crate) struct Shape<T> {
    pub a: T,
    pub b: T,
    pub d5: T,
    pub g5: T,
    /// 2βμ/(√(α²+β²)√Δ)
    pub kf: T,
    /// β√(α²+β²)/√Δ
    pub kg: T,
    /// 2βμ/Δ
    pub eg: T,
}

pub(crate) fn shape<T: Scalar>(a: T, b: T, mu: T) -> Shape<T> {
    let (a2, b2, m2) = (a.sq(), b.sq(), mu.sq());
    let dl = a2 + b2 - m2.scale(4.0);
    let r = (a2 + b2).sqrt();
    let sd = dl.sqrt();
    let d5 = -a2.sq() + (a2 * b2).scale(10.0) - b2.sq().scale(5.0)
        + ((a2 - b2.scale(3.0)) * m2).scale(10.0);
    let g5 = -b2.sq() + (a2 * b2).scale(10.0) - a2.sq().scale(5.0)
        + ((a2.scale(3.0) - b2) * m2).scale(10.0);
    let two_b_mu = (b * mu).scale(2.0);
    Shape {
        a,
        b,
        d5,
        g5,
        kf: two_b_mu / (r * sd),
        kg: b * r / sd,
        eg: two_b_mu / dl,
    }
}

/// f, its x-derivatives f1 = f_x, f3 = f_xx, f4 = f_xxx, its t-derivative f2,
/// and the same for g; D = f² + g².
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FgParts {
    pub f: f64,
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub f4: f64,
    pub g: f64,
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
    pub g4: f64,
    #[serde(rename = "D")]
    pub d: f64,
}

#[derive(Clone, Copy)]
pub(crate) struct FgT<T> {
    pub f: T,
    pub f1: T,
    pub f2: T,
    pub f3: T,
    pub f4: T,
    pub g: T,
    pub g1: T,
    pub g2: T,
    pub g3: T,
    pub g4: T,
}

/// Trigonometric and hyperbolic building blocks at one point, optionally
/// multiplied by e^{-|β y₂|}.
struct Blocks<T> {
    cs: T,
    sn: T,
    ch: T,
    sh: T,
    ex: T,
}

fn blocks<T: Scalar>(sh_: &Shape<T>, y1: T, y2: T, scaled: bool) -> Blocks<T> {
    let th = sh_.a * y1;
    let z = sh_.b * y2;
    let one = T::cst(1.0);
    if scaled {
        let positive = z.re() > 0.0;
        let az = if positive { z } else { -z };
        let s = (-az).exp();
        let e2 = (-az.scale(2.0)).exp();
        let half_sum = (one + e2).scale(0.5);
        let half_diff = (one - e2).scale(0.5);
        Blocks {
            cs: th.cos() * s,
            sn: th.sin() * s,
            ch: half_sum,
            sh: if positive { half_diff } else { -half_diff },
            ex: if positive { one } else { z.scale(2.0).exp() },
        }
    } else {
        let ep = z.exp();
        let em = (-z).exp();
        Blocks {
            cs: th.cos(),
            sn: th.sin(),
            ch: (ep + em).scale(0.5),
            sh: (ep - em).scale(0.5),
            ex: ep,
        }
    }
}

pub(crate) fn fg_generic<T: Scalar>(
    a: T,
    b: T,
    mu: T,
    x1: T,
    x2: T,
    t: f64,
    x: f64,
    scaled: bool,
) -> FgT<T> {
    let s = shape(a, b, mu);
    let y1 = T::cst(x) + s.d5.scale(t) + x1;
    let y2 = T::cst(x) + s.g5.scale(t) + x2;
    let k = blocks(&s, y1, y2, scaled);
    let (a, b) = (s.a, s.b);
    let (kf, kg, eg) = (s.kf, s.kg, s.eg);
    let lin_f = a * k.cs - b * k.sn; // α cos − β sin
    let lin_f1 = b * k.cs + a * k.sn; // β cos + α sin
    FgT {
        f: k.ch - kf / a * lin_f,
        f1: b * k.sh + kf * lin_f1,
        f2: b * s.g5 * k.sh + kf * s.d5 * lin_f1,
        f3: b.sq() * k.ch + kf * a * lin_f,
        f4: b.sq() * b * k.sh - kf * a.sq() * lin_f1,
        g: kg / a * k.sn - eg * k.ex,
        g1: kg * k.cs - eg * b * k.ex,
        g2: kg * s.d5 * k.cs - eg * b * s.g5 * k.ex,
        g3: -(kg * a * k.sn) - eg * b.sq() * k.ex,
        g4: -(kg * a.sq() * k.cs) - eg * b.sq() * b * k.ex,
    }
}

fn to_parts(v: FgT<f64>) -> FgParts {
    FgParts {
        f: v.f,
        f1: v.f1,
        f2: v.f2,
        f3: v.f3,
        f4: v.f4,
        g: v.g,
        g1: v.g1,
        g2: v.g2,
        g3: v.g3,
        g4: v.g4,
        d: v.f * v.f + v.g * v.g,
    }
}

/// The f/g bundle at (t, x), unscaled. Overflows for |β y₂| ≳ 700.
pub fn breather_fg(p: &BreatherParams, t: f64, x: f64) -> FgParts {
    to_parts(fg_generic(p.alpha, p.beta, p.mu, p.x1, p.x2, t, x, false))
}

/// Same bundle multiplied through by e^{-|β y₂|} (D by its square).
pub fn breather_fg_scaled(p: &BreatherParams, t: f64, x: f64) -> FgParts {
    to_parts(fg_generic(p.alpha, p.beta, p.mu, p.x1, p.x2, t, x, true))
}

impl FgParts {
    /// B = 2(g₁f − f₁g)/D
    pub fn b(&self) -> f64 {
        2.0 * (self.g1 * self.f - self.f1 * self.g) / self.d
    }

    /// B̃_t = 2(g₂f − f₂g)/D
    pub fn btilde_t(&self) -> f64 {
        2.0 * (self.g2 * self.f - self.f2 * self.g) / self.d
    }

    /// B_x = (2/D²)(f³g₃ − f²(2f₁g₁ + f₃g) + fg(2f₁² + gg₃ − 2g₁²) + g²(2f₁g₁ − f₃g))
    pub fn bx(&self) -> f64 {
        let FgParts { f, f1, f3, g, g1, g3, d, .. } = *self;
        2.0 / (d * d)
            * (f.powi(3) * g3 - f * f * (2.0 * f1 * g1 + f3 * g)
                + f * g * (2.0 * f1 * f1 + g * g3 - 2.0 * g1 * g1)
                + g * g * (2.0 * f1 * g1 - f3 * g))
    }

    /// M₁ with B_xx = 2M₁/D³.
    pub fn m1(&self) -> f64 {
        let FgParts { f, f1, f3, f4, g, g1, g3, g4, .. } = *self;
        f.powi(5) * g4 - f.powi(4) * (3.0 * f1 * g3 + 3.0 * f3 * g1 + f4 * g)
            + 2.0 * f.powi(3)
                * (3.0 * f1 * f1 * g1 + 3.0 * f1 * f3 * g + g * g * g4
                    - 3.0 * g * g1 * g3
                    - g1.powi(3))
            - 2.0 * f * f * g * (3.0 * f1.powi(3) - 9.0 * f1 * g1 * g1 + f4 * g * g)
            + f * g * g
                * (-18.0 * f1 * f1 * g1 + 6.0 * f1 * f3 * g + g * g * g4 - 6.0 * g * g1 * g3
                    + 6.0 * g1.powi(3))
            + g.powi(3) * (2.0 * f1.powi(3) + f1 * (3.0 * g * g3 - 6.0 * g1 * g1)
                + g * (3.0 * f3 * g1 - f4 * g))
    }

    pub fn bxx(&self) -> f64 {
        2.0 * self.m1() / self.d.powi(3)
    }

    /// M₂ = 2(A₁D²(fg₁ − f₁g) + A₂(8(fg₁ − f₁g)³ + 12μD(f₁g − fg₁)² + M₁)),
    /// so that A₁B + A₂(B_xx + 2B³ + 6μB²) = M₂/D³.
    pub fn m2(&self, p: &BreatherParams) -> f64 {
        let w = self.f * self.g1 - self.f1 * self.g;
        let d = self.d;
        2.0 * (p.a1() * d * d * w
            + p.a2() * (8.0 * w.powi(3) + 12.0 * p.mu * d * w * w + self.m1()))
    }

    /// D_x = 2(f f₁ + g g₁)
    pub fn dx(&self) -> f64 {
        2.0 * (self.f * self.f1 + self.g * self.g1)
    }

    /// D_xx = 2(f₁² + f f₃ + g₁² + g g₃)
    pub fn dxx(&self) -> f64 {
        2.0 * (self.f1 * self.f1 + self.f * self.f3 + self.g1 * self.g1 + self.g * self.g3)
    }

    /// (log D)_xx
    pub fn log_d_xx(&self) -> f64 {
        let r = self.dx() / self.d;
        self.dxx() / self.d - r * r
    }
}

/// B at one point for any scalar type (used with duals for parameter
/// derivatives).
pub(crate) fn b_generic<T: Scalar>(a: T, b: T, mu: T, x1: T, x2: T, t: f64, x: f64) -> T {
    let v = fg_generic(a, b, mu, x1, x2, t, x, true);
    (v.g1 * v.f - v.f1 * v.g).scale(2.0) / (v.f.sq() + v.g.sq())
}

pub fn breather_point(p: &BreatherParams, t: f64, x: f64) -> f64 {
    breather_fg_scaled(p, t, x).b()
}

fn b_tilde_point(p: &BreatherParams, t: f64, x: f64) -> f64 {
    let v = breather_fg_scaled(p, t, x);
    2.0 * v.g.atan2(v.f)
}

fn unwrap_near(v: f64, reference: f64) -> f64 {
    let tau = 2.0 * std::f64::consts::PI;
    v - tau * ((v - reference) / tau).round()
}

/// Samples B(t, ·). Eight seeded nodes are cross-checked against a 6th-order
/// difference of 2·atan2(G, F), which catches transcription slips in the
/// f/g tables.
pub fn breather_eval(p: &BreatherParams, t: f64, grid: &Grid) -> Result<RealField> {
    p.validate()?;
    let values: Vec<f64> = grid.nodes().iter().map(|&x| breather_point(p, t, x)).collect();
    let field = RealField::new(grid, values)?;
    self_check(p, t, &field)?;
    Ok(field)
}

fn self_check(p: &BreatherParams, t: f64, b: &RealField) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_b7ea);
    let scale = b.max_abs().max(1.0);
    let h = 1e-2 / p.alpha.abs().max(p.beta.abs()).max(1.0);
    let weights = [-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0];
    let g = b.grid();
    for _ in 0..8 {
        let i = rng.random_range(0..g.n());
        let x = g.x(i);
        let centre = b_tilde_point(p, t, x);
        let mut fd = 0.0;
        for (j, w) in weights.iter().enumerate() {
            if *w != 0.0 {
                let v = unwrap_near(b_tilde_point(p, t, x + (j as f64 - 3.0) * h), centre);
                fd += w * v;
            }
        }
        fd /= 60.0 * h;
        let err = (fd - b.values()[i]).abs();
        if err > 1e-7 * scale {
            return Err(Error::InternalConsistency(format!(
                "B at x = {x}: closed form {} vs d/dx 2atan2(G,F) {fd}",
                b.values()[i]
            )));
        }
    }
    Ok(())
}

/// B̃ = 2·atan2(G, F), unwrapped along the grid from the left edge.
pub fn breather_tilde(p: &BreatherParams, t: f64, grid: &Grid) -> Result<RealField> {
    p.validate()?;
    let mut out = Vec::with_capacity(grid.n());
    let mut prev_theta: Option<f64> = None;
    for i in 0..grid.n() {
        let v = breather_fg_scaled(p, t, grid.x(i));
        let raw = v.g.atan2(v.f);
        let theta = match prev_theta {
            None => raw,
            Some(pt) => {
                let th = unwrap_near(raw, pt);
                let jump = 2.0 * (th - pt);
                if jump.abs() > std::f64::consts::PI {
                    return Err(Error::Branch { node: i, jump });
                }
                th
            }
        };
        prev_theta = Some(theta);
        out.push(2.0 * theta);
    }
    RealField::new(grid, out)
}

/// B̃_t = 2(g₂f − f₂g)/D.
pub fn breather_tilde_t(p: &BreatherParams, t: f64, grid: &Grid) -> Result<RealField> {
    p.validate()?;
    RealField::new(
        grid,
        grid.nodes()
            .iter()
            .map(|&x| breather_fg_scaled(p, t, x).btilde_t())
            .collect(),
    )
}

/// M[B] = 2β + 2μ arctan(4μβ/Δ)
pub fn breather_mass_closed(p: &BreatherParams) -> f64 {
    2.0 * p.beta + 2.0 * p.mu * (4.0 * p.mu * p.beta / p.delta()).atan()
}

/// Exact x-derivatives of B (orders 0..=5), B_t, and B̃_t at every node,
/// from Taylor jets of F and G.
#[derive(Clone, Debug)]
pub struct BreatherDerivs {
    pub b: [Vec<f64>; 6],
    pub b_t: Vec<f64>,
    pub btilde_t: Vec<f64>,
    /// (log D)_xx
    pub log_d_xx: Vec<f64>,
}

pub(crate) struct PointJets {
    pub b: Jet,
    pub btilde_t: Jet,
    /// D = F² + G² (scaled by a constant, so log-derivatives are exact)
    pub d: Jet,
}

/// Jets in h of B(t, x+h), B̃_t(t, x+h) and log D (up to a constant).
pub(crate) fn point_jets(p: &BreatherParams, t: f64, x: f64) -> PointJets {
    let s = shape(p.alpha, p.beta, p.mu);
    let y1 = x + s.d5 * t + p.x1;
    let y2 = x + s.g5 * t + p.x2;
    let (a, b) = (p.alpha, p.beta);
    let th = a * y1;
    let z = b * y2;
    let scale = (-z.abs()).exp();
    let e2 = (-2.0 * z.abs()).exp();
    let ch = 0.5 * (1.0 + e2);
    let sh = 0.5 * (1.0 - e2) * z.signum();
    let ex = if z > 0.0 { 1.0 } else { (2.0 * z).exp() };
    let (c0, s0) = (th.cos() * scale, th.sin() * scale);
    let cos_d = [c0, -s0, -c0, s0];
    let sin_d = [s0, c0, -s0, -c0];
    let ak = |k: usize| a.powi(k as i32);
    let bk = |k: usize| b.powi(k as i32);

    let cos_j = Jet::from_derivatives(|k| ak(k) * cos_d[k % 4]);
    let sin_j = Jet::from_derivatives(|k| ak(k) * sin_d[k % 4]);
    let fa = Jet::from_derivatives(|k| bk(k) * if k % 2 == 0 { ch } else { sh });
    let fb = (cos_j.scale(a) - sin_j.scale(b)).scale(-s.kf / a);
    let ga = Jet::from_derivatives(|k| bk(k) * ex).scale(-s.eg);
    let gb = sin_j.scale(s.kg / a);

    let f = fa + fb;
    let g = ga + gb;
    let fx = f.d();
    let gx = g.d();
    let ft = fa.d().scale(s.g5) + fb.d().scale(s.d5);
    let gt = ga.d().scale(s.g5) + gb.d().scale(s.d5);
    let d = f * f + g * g;
    let two = Jet::constant(2.0);
    PointJets {
        b: two * (gx * f - fx * g) / d,
        btilde_t: two * (gt * f - ft * g) / d,
        d,
    }
}

pub fn breather_derivs(p: &BreatherParams, t: f64, grid: &Grid) -> Result<BreatherDerivs> {
    p.validate()?;
    let n = grid.n();
    let mut b: [Vec<f64>; 6] = Default::default();
    for v in b.iter_mut() {
        v.reserve(n);
    }
    let mut b_t = Vec::with_capacity(n);
    let mut btilde_t = Vec::with_capacity(n);
    let mut log_d_xx = Vec::with_capacity(n);
    for x in grid.nodes() {
        let j = point_jets(p, t, x);
        for (m, v) in b.iter_mut().enumerate() {
            v.push(j.b.deriv(m));
        }
        b_t.push(j.btilde_t.deriv(1));
        btilde_t.push(j.btilde_t.deriv(0));
        let d = j.d;
        let r = d.deriv(1) / d.deriv(0);
        log_d_xx.push(d.deriv(2) / d.deriv(0) - r * r);
    }
    for v in b.iter().chain([&b_t, &btilde_t, &log_d_xx]) {
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InternalConsistency("non-finite breather jet".into()));
        }
    }
    Ok(BreatherDerivs { b, b_t, btilde_t, log_d_xx })
}

/// How parameter derivatives of B are computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamMethod {
    /// Forward-mode dual numbers through the closed form (exact to rounding).
    Dual,
    /// 4th-order central difference with Richardson extrapolation.
    FiniteDifference,
}

/// ∂B/∂(which) by dual numbers.
pub fn param_derivative_exact(
    p: &BreatherParams,
    t: f64,
    grid: &Grid,
    which: Param,
) -> Result<RealField> {
    p.validate()?;
    let seed = |w: Param, v: f64| {
        if w == which {
            Dual::var(v)
        } else {
            Dual::cst(v)
        }
    };
    let (a, b, mu) = (
        seed(Param::Alpha, p.alpha),
        seed(Param::Beta, p.beta),
        seed(Param::Mu, p.mu),
    );
    let (x1, x2) = (seed(Param::X1, p.x1), seed(Param::X2, p.x2));
    let values = grid
        .nodes()
        .iter()
        .map(|&x| b_generic(a, b, mu, x1, x2, t, x).d)
        .collect();
    RealField::new(grid, values)
}

/// Default step h = 1e-3·max(1, |parameter|).
pub fn default_step(p: &BreatherParams, which: Param) -> f64 {
    1e-3 * p.get(which).abs().max(1.0)
}

fn fd4(p: &BreatherParams, t: f64, grid: &Grid, which: Param, h: f64) -> Result<Vec<f64>> {
    let v0 = p.get(which);
    let mut stencil = Vec::with_capacity(4);
    for off in [2.0, 1.0, -1.0, -2.0] {
        let q = p.with(which, v0 + off * h);
        q.validate()?;
        stencil.push(grid.nodes().iter().map(|&x| breather_point(&q, t, x)).collect::<Vec<_>>());
    }
    Ok((0..grid.n())
        .map(|i| (-stencil[0][i] + 8.0 * stencil[1][i] - 8.0 * stencil[2][i] + stencil[3][i]) / (12.0 * h))
        .collect())
}

/// Finite-difference parameter derivative: 4th-order stencils at h and h/2
/// combined by Richardson extrapolation. If a stencil point leaves Δ > 0 the
/// step is halved once before giving up.
#[derive(Clone, Debug)]
pub struct FdDerivative {
    pub field: RealField,
    pub step: f64,
    /// sup |D(h) − D(h/2)|, the Richardson error indicator.
    pub richardson_change: f64,
}

pub fn param_derivative_fd(
    p: &BreatherParams,
    t: f64,
    grid: &Grid,
    which: Param,
    h: f64,
) -> Result<FdDerivative> {
    p.validate()?;
    let mut step = h;
    let mut attempt = fd4(p, t, grid, which, step);
    if attempt.is_err() {
        step *= 0.5;
        attempt = fd4(p, t, grid, which, step);
    }
    let coarse = attempt?;
    let fine = fd4(p, t, grid, which, 0.5 * step)?;
    let mut change = 0.0f64;
    let values = coarse
        .iter()
        .zip(&fine)
        .map(|(c, f)| {
            change = change.max((c - f).abs());
            (16.0 * f - c) / 15.0
        })
        .collect();
    Ok(FdDerivative {
        field: RealField::new(grid, values)?,
        step,
        richardson_change: change,
    })
}

/// ∂B/∂(which) with the chosen method (default step for finite differences).
pub fn param_derivative(
    p: &BreatherParams,
    t: f64,
    grid: &Grid,
    which: Param,
    method: ParamMethod,
) -> Result<RealField> {
    match method {
        ParamMethod::Dual => param_derivative_exact(p, t, grid, which),
        ParamMethod::FiniteDifference => {
            Ok(param_derivative_fd(p, t, grid, which, default_step(p, which))?.field)
        }
    }
}

/// Box and resolution for whole-line checks: L = 40/|β| beyond the envelope
/// centre, n doubled until the top quarter of the spectrum is below 1e-14
/// of the peak coefficient.
pub fn auto_grid(p: &BreatherParams, t: f64) -> Result<Grid> {
    p.validate()?;
    let half = 40.0 / p.beta.abs() + p.envelope_centre(t).abs();
    let mut n = 256;
    loop {
        let g = Grid::new(half, n)?;
        let values: Vec<f64> = g.nodes().iter().map(|&x| breather_point(p, t, x)).collect();
        let c = g.forward(&values);
        let peak = c.iter().fold(0.0f64, |m, v| m.max(v.norm()));
        let tail = c[3 * n / 8..].iter().fold(0.0f64, |m, v| m.max(v.norm()));
        if tail < 1e-14 * peak {
            return Ok(g);
        }
        if n >= 1 << 16 {
            return Err(Error::Resource(format!("breather needs more than {n} points")));
        }
        n *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::spectral_derivative;

    fn sample() -> BreatherParams {
        BreatherParams::new(1.0, 1.0, 0.3, 0.0, 0.0).unwrap()
    }

    fn sup(v: impl IntoIterator<Item = f64>) -> f64 {
        v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    #[test]
    fn invariants_enforced() {
        assert!(BreatherParams::new(1.0, 1.0, 0.8, 0.0, 0.0).is_err());
        assert!(BreatherParams::new(0.0, 1.0, 0.3, 0.0, 0.0).is_err());
        assert!(BreatherParams::new(1.0, 1.0, 0.0, 0.0, 0.0).is_err());
        let p = sample();
        assert!(p.in_stability_regime());
        assert!((p.delta() - 1.64).abs() < 1e-15);
        assert_eq!(p.a1(), 4.0);
        assert!((p.a2() + 0.9).abs() < 1e-15);
    }

    #[test]
    fn fg_at_origin() {
        // x = 0, t = 0, x1 = x2 = 0 puts y1 = y2 = 0
        let p = sample();
        let v = breather_fg(&p, 0.0, 0.0);
        let (a, b, mu) = (1.0f64, 1.0f64, 0.3f64);
        let r = (a * a + b * b).sqrt();
        let sd = p.delta().sqrt();
        assert!((v.f - (1.0 - 2.0 * b * mu / (r * sd))).abs() < 1e-15);
        assert!((v.g + 2.0 * b * mu / p.delta()).abs() < 1e-15);
        assert!((v.f1 - 0.6 / (2f64.sqrt() * 1.64f64.sqrt())).abs() < 1e-15);
        assert!((v.f1 - 0.331295).abs() < 1e-6);
        let direct = 2.0 * (v.g1 * v.f - v.f1 * v.g) / (v.f * v.f + v.g * v.g);
        assert!((breather_point(&p, 0.0, 0.0) - direct).abs() < 1e-15);
    }

    #[test]
    fn scaled_and_unscaled_agree() {
        let p = BreatherParams::new(1.3, 0.7, 0.4, 0.2, -0.5).unwrap();
        for &(t, x) in &[(0.0, -3.0), (0.4, 2.5), (1.0, 0.1)] {
            let u = breather_fg(&p, t, x);
            let s = breather_fg_scaled(&p, t, x);
            assert!((u.b() - s.b()).abs() < 1e-13);
            assert!((u.btilde_t() - s.btilde_t()).abs() < 1e-12);
        }
    }

    #[test]
    fn x_derivative_tables_match_differences() {
        let p = BreatherParams::new(1.2, 0.9, 0.35, 0.1, 0.3).unwrap();
        let (t, x, h) = (0.3, 0.4, 1e-4);
        let at = |x| breather_fg(&p, t, x);
        let c = at(x);
        let d1 = |s: fn(&FgParts) -> f64| (s(&at(x + h)) - s(&at(x - h))) / (2.0 * h);
        let d2 = |s: fn(&FgParts) -> f64| (s(&at(x + h)) - 2.0 * s(&c) + s(&at(x - h))) / (h * h);
        assert!((d1(|v| v.f) - c.f1).abs() < 1e-7);
        assert!((d2(|v| v.f) - c.f3).abs() < 1e-5);
        assert!((d1(|v| v.f3) - c.f4).abs() < 1e-7);
        assert!((d1(|v| v.g) - c.g1).abs() < 1e-7);
        assert!((d2(|v| v.g) - c.g3).abs() < 1e-5);
        assert!((d1(|v| v.g3) - c.g4).abs() < 1e-7);
        let dt = |s: fn(&FgParts) -> f64| {
            (s(&breather_fg(&p, t + h, x)) - s(&breather_fg(&p, t - h, x))) / (2.0 * h)
        };
        assert!((dt(|v| v.f) - c.f2).abs() < 1e-6);
        assert!((dt(|v| v.g) - c.g2).abs() < 1e-6);
    }

    #[test]
    fn derivative_bundle_closed_forms() {
        let p = BreatherParams::new(1.0, 1.3, 0.4, 0.0, 0.0).unwrap();
        for &x in &[-0.7, 0.3, 1.1] {
            let v = breather_fg_scaled(&p, 0.2, x);
            let j = point_jets(&p, 0.2, x);
            assert!((v.bx() - j.b.deriv(1)).abs() < 1e-12);
            assert!((v.bxx() - j.b.deriv(2)).abs() < 1e-11);
            let lhs = v.m2(&p) / v.d.powi(3);
            assert!((lhs - v.btilde_t()).abs() < 1e-11);
        }
    }

    #[test]
    fn jets_against_spectral() {
        let p = sample();
        let g = Grid::new(60.0, 2048).unwrap();
        let d = breather_derivs(&p, 0.37, &g).unwrap();
        let b = RealField::new(&g, d.b[0].clone()).unwrap();
        for m in 1..=3u32 {
            let s = spectral_derivative(&b, m).unwrap();
            let e = sup(s.values().iter().zip(&d.b[m as usize]).map(|(a, b)| a - b));
            assert!(e < 1e-9, "order {m}: {e}");
        }
    }

    #[test]
    fn eval_self_check_and_decay() {
        let p = sample();
        let g = Grid::new(40.0, 1024).unwrap();
        let b = breather_eval(&p, 0.0, &g).unwrap();
        assert!(b.boundary_ratio() < 1e-12);
        let bt = breather_tilde(&p, 0.0, &g).unwrap();
        let n = g.n();
        assert!((bt.values()[1] - bt.values()[0]).abs() < 1e-10);
        assert!((bt.values()[n - 1] - bt.values()[n - 2]).abs() < 1e-10);
    }

    #[test]
    fn tilde_t_matches_time_difference() {
        let p = sample();
        let g = Grid::new(40.0, 1024).unwrap();
        let h = 1e-4;
        let plus = breather_tilde(&p, 0.3 + h, &g).unwrap();
        let minus = breather_tilde(&p, 0.3 - h, &g).unwrap();
        let bt = breather_tilde_t(&p, 0.3, &g).unwrap();
        let e = sup((0..g.n()).map(|i| (plus.values()[i] - minus.values()[i]) / (2.0 * h) - bt.values()[i]));
        assert!(e < 1e-6, "{e}");
    }

    #[test]
    fn mass_closed_form_values() {
        let p = BreatherParams::new(1.0, 1.0, 1e-10, 0.0, 0.0).unwrap();
        assert!((breather_mass_closed(&p) - 2.0).abs() < 1e-15);
        let p = sample();
        let want = 2.0 + 0.6 * (1.2f64 / 1.64).atan();
        assert!((breather_mass_closed(&p) - want).abs() < 1e-15);
    }

    #[test]
    fn translation_derivatives_sum_to_x_derivative() {
        let p = sample();
        let g = Grid::new(40.0, 1024).unwrap();
        let b1 = param_derivative_exact(&p, 0.2, &g, Param::X1).unwrap();
        let b2 = param_derivative_exact(&p, 0.2, &g, Param::X2).unwrap();
        let bx = breather_derivs(&p, 0.2, &g).unwrap();
        let e = sup((0..g.n()).map(|i| b1.values()[i] + b2.values()[i] - bx.b[1][i]));
        assert!(e < 1e-12, "{e}");
    }

    #[test]
    fn dual_and_fd_agree() {
        let p = sample();
        let g = Grid::new(40.0, 512).unwrap();
        for which in [Param::Alpha, Param::Beta, Param::X1, Param::X2] {
            let exact = param_derivative_exact(&p, 0.0, &g, which).unwrap();
            let fd = param_derivative_fd(&p, 0.0, &g, which, default_step(&p, which)).unwrap();
            let e = sup((0..g.n()).map(|i| exact.values()[i] - fd.field.values()[i]));
            assert!(e < 1e-8, "{which:?}: {e}");
        }
    }

    #[test]
    fn fd_step_shrinks_near_regime_edge() {
        // Δ = 1e-3·… just above zero: the default stencil in mu would cross it
        let mu = (2.0f64).sqrt() / 2.0 - 1.2e-3;
        let p = BreatherParams::new(1.0, 1.0, mu, 0.0, 0.0).unwrap();
        let g = Grid::new(80.0, 512).unwrap();
        let r = param_derivative_fd(&p, 0.0, &g, Param::Mu, 1e-3);
        assert!(r.is_ok());
        assert_eq!(r.unwrap().step, 5e-4);
        let p = BreatherParams::new(1.0, 1.0, (2.0f64).sqrt() / 2.0 - 1e-4, 0.0, 0.0).unwrap();
        assert!(param_derivative_fd(&p, 0.0, &g, Param::Mu, 1e-3).is_err());
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    /// Regime points: α, β in [0.5, 2], μ a fraction of μ_max.
    fn regime() -> impl Strategy<Value = BreatherParams> {
        (0.5..2.0f64, 0.5..2.0f64, 0.1..0.9f64).prop_map(|(a, b, f)| {
            let mu = f * (a * a + b * b).sqrt() / 2.0;
            BreatherParams::new(a, b, mu, 0.0, 0.0).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn shifting_both_phases_shifts_x(p in regime(), m in -40i64..40, t in 0.0..0.5f64) {
            let g = Grid::new(36.0 / p.beta + p.envelope_centre(t).abs() + 4.0, 2048).unwrap();
            let a = m as f64 * g.dx();
            let moved = BreatherParams { x1: a, x2: a, ..p };
            let u = breather_eval(&p, t, &g).unwrap();
            let v = breather_eval(&moved, t, &g).unwrap();
            let mut expect = u.values().to_vec();
            expect.rotate_left(m.rem_euclid(g.n() as i64) as usize);
            let err = v.values().iter().zip(&expect).fold(0.0f64, |e, (x, y)| e.max((x - y).abs()));
            prop_assert!(err <= 1e-10 * u.max_abs(), "{err}");
        }

        #[test]
        fn fg_derivatives_match_differences(p in regime(), x in -3.0..3.0f64, t in 0.0..0.5f64) {
            let h = 1e-4;
            let at = |x| breather_fg(&p, t, x);
            let (c, l, r) = (at(x), at(x - h), at(x + h));
            prop_assert!(c.d > 0.0);
            let fd1 = (r.f - l.f) / (2.0 * h);
            let fd2 = (r.f - 2.0 * c.f + l.f) / (h * h);
            let fd3 = (r.f3 - l.f3) / (2.0 * h);
            let scale = 1.0 + c.f.abs() + c.f4.abs();
            prop_assert!((fd1 - c.f1).abs() <= 1e-6 * scale);
            prop_assert!((fd2 - c.f3).abs() <= 1e-4 * scale);
            prop_assert!((fd3 - c.f4).abs() <= 1e-6 * scale);
            let gd1 = (r.g - l.g) / (2.0 * h);
            prop_assert!((gd1 - c.g1).abs() <= 1e-6 * (1.0 + c.g.abs() + c.g3.abs()));
        }
    }
}
