use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::field::{Grid, RealField};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolitonParams {
    pub mu: f64,
    pub c: f64,
    #[serde(default)]
    pub x1: f64,
}

impl SolitonParams {
    pub fn new(mu: f64, c: f64, x1: f64) -> Result<SolitonParams> {
        let p = SolitonParams { mu, c, x1 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0) || !(self.c > 0.0) || !self.x1.is_finite() {
            return invalid(format!("soliton needs mu > 0, c > 0: {self:?}"));
        }
        Ok(())
    }

    /// v = c² + 10μ²c
    pub fn velocity(&self) -> f64 {
        self.c * self.c + 10.0 * self.mu * self.mu * self.c
    }

    /// Q(z) = c / (2μ + √(4μ²+c) cosh(√c z))
    pub fn profile(&self, z: f64) -> f64 {
        let (mu, c) = (self.mu, self.c);
        c / (2.0 * mu + (4.0 * mu * mu + c).sqrt() * (c.sqrt() * z).cosh())
    }

    /// Location of the maximum at time t.
    pub fn peak_position(&self, t: f64) -> f64 {
        self.velocity() * t - self.x1
    }
}

pub fn soliton_eval(p: &SolitonParams, t: f64, grid: &Grid) -> Result<RealField> {
    p.validate()?;
    let v = p.velocity();
    RealField::from_fn(grid, |x| p.profile(x - v * t + p.x1))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SolitonResiduals {
    pub ode2_sup: f64,
    pub ode4_sup: f64,
}

/// Residuals of Q'' - cQ + 6μQ² + 2Q³ = 0 and Q'''' - vQ + f̃₅(Q) = 0.
pub fn soliton_residuals(p: &SolitonParams, grid: &Grid) -> Result<SolitonResiduals> {
    let q = soliton_eval(p, 0.0, grid)?;
    q.check_decay(1e-12)?;
    let (mu, c, v) = (p.mu, p.c, p.velocity());
    let d = grid.derivatives_denoised(q.values(), &[1, 2, 4], crate::field::NOISE_FLOOR);
    let (q1, q2, q4) = (&d[0], &d[1], &d[2]);
    let mut ode2_sup = 0.0f64;
    let mut ode4_sup = 0.0f64;
    for (i, &u) in q.values().iter().enumerate() {
        let r2 = q2[i] - c * u + 6.0 * mu * u * u + 2.0 * u * u * u;
        let m = mu + u;
        let f5 = 10.0 * m * m * q2[i]
            + 10.0 * m * q1[i] * q1[i]
            + 60.0 * mu.powi(3) * u * u
            + 60.0 * mu * mu * u.powi(3)
            + 30.0 * mu * u.powi(4)
            + 6.0 * u.powi(5);
        let r4 = q4[i] - v * u + f5;
        ode2_sup = ode2_sup.max(r2.abs());
        ode4_sup = ode4_sup.max(r4.abs());
    }
    Ok(SolitonResiduals { ode2_sup, ode4_sup })
}
