//! Residuals of the identities satisfied by the breather.
//!
//! Time derivatives always come from closed forms (B̃_t = 2(g₂f − f₂g)/D and
//! its x-derivative), never from time stepping. Space derivatives come either
//! from Taylor jets of F, G (exact to rounding) or from spectral
//! differentiation of the sampled field; the spectral route is kept as an
//! independent cross-check.

use serde::{Deserialize, Serialize};

use super::breather::{auto_grid, breather_derivs, breather_fg_scaled, BreatherParams};
use crate::error::Result;
use crate::field::{Grid, GridSpec, RealField, NOISE_FLOOR};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentityKind {
    /// B² = ∂x² log D − 2μB
    Matsuno,
    /// B_4x + B̃_t + 10(μ+B)²B_xx + 10(μ+B)B_x² + 6(10μ³B² + 10μ²B³ + 5μB⁴ + B⁵) = 0
    Integrated,
    /// B̃_t = A₁B + A₂(B_xx + 2B³ + 6μB²)
    TimeIdentity,
    /// The stationary fourth-order equation of the breather.
    Stationary,
    /// The evolution equation itself with u_t = ∂x B̃_t.
    Pde,
}

impl IdentityKind {
    pub const ALL: [IdentityKind; 5] = [
        IdentityKind::Matsuno,
        IdentityKind::Integrated,
        IdentityKind::TimeIdentity,
        IdentityKind::Stationary,
        IdentityKind::Pde,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            IdentityKind::Matsuno => "matsuno",
            IdentityKind::Integrated => "integrated",
            IdentityKind::TimeIdentity => "time_identity",
            IdentityKind::Stationary => "stationary",
            IdentityKind::Pde => "pde",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceDerivs {
    #[default]
    Jet,
    Spectral,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityOptions {
    pub derivs: SpaceDerivs,
    /// Flip the sign of one term that is nonzero on the whole lattice, to
    /// show the check has power: 2μB (matsuno), B̃_t (integrated, pde uses
    /// u_t), A₂ (time identity), A₁B (stationary).
    pub negative_control: bool,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Residual {
    pub sup: f64,
    pub l2: f64,
}

struct Samples {
    b: [Vec<f64>; 6],
    b_t: Vec<f64>,
    btilde_t: Vec<f64>,
    log_d_xx: Vec<f64>,
}

fn samples(p: &BreatherParams, t: f64, grid: &Grid, derivs: SpaceDerivs) -> Result<Samples> {
    let exact = breather_derivs(p, t, grid)?;
    match derivs {
        SpaceDerivs::Jet => Ok(Samples {
            b: exact.b,
            b_t: exact.b_t,
            btilde_t: exact.btilde_t,
            log_d_xx: exact.log_d_xx,
        }),
        SpaceDerivs::Spectral => {
            let b0 = exact.b[0].clone();
            let d = grid.derivatives_denoised(&b0, &[1, 2, 3, 4, 5], NOISE_FLOOR);
            let [d1, d2, d3, d4, d5]: [Vec<f64>; 5] = d.try_into().expect("five orders");
            let bt = grid.derivatives_denoised(&exact.btilde_t, &[1], NOISE_FLOOR).remove(0);
            let log_d_xx = grid
                .nodes()
                .iter()
                .map(|&x| breather_fg_scaled(p, t, x).log_d_xx())
                .collect();
            Ok(Samples {
                b: [b0, d1, d2, d3, d4, d5],
                b_t: bt,
                btilde_t: exact.btilde_t,
                log_d_xx,
            })
        }
    }
}

/// Pointwise left-minus-right side of the chosen identity.
pub fn identity_field(
    kind: IdentityKind,
    p: &BreatherParams,
    t: f64,
    grid: &Grid,
    opts: IdentityOptions,
) -> Result<RealField> {
    p.validate()?;
    let b = RealField::new(grid, breather_derivs(p, t, grid)?.b[0].clone())?;
    b.check_decay(1e-12)?;
    let s = samples(p, t, grid, opts.derivs)?;
    let mu = p.mu;
    let sgn = if opts.negative_control { -1.0 } else { 1.0 };
    let (a1, a2) = (p.a1(), p.a2());
    let gap = 2.0 * (p.beta * p.beta - p.alpha * p.alpha);
    let out = (0..grid.n())
        .map(|i| {
            let u = s.b[0][i];
            let (u1, u2, u3, u4, u5) = (s.b[1][i], s.b[2][i], s.b[3][i], s.b[4][i], s.b[5][i]);
            let (uu, u3p, u4p, u5p) = (u * u, u.powi(3), u.powi(4), u.powi(5));
            match kind {
                IdentityKind::Matsuno => uu - (s.log_d_xx[i] - sgn * 2.0 * mu * u),
                IdentityKind::Integrated => {
                    let m = mu + u;
                    u4 + sgn * s.btilde_t[i]
                        + 10.0 * m * m * u2
                        + 10.0 * m * u1 * u1
                        + 6.0 * (10.0 * mu.powi(3) * uu + 10.0 * mu * mu * u3p + 5.0 * mu * u4p + u5p)
                }
                IdentityKind::TimeIdentity => {
                    s.btilde_t[i] - (a1 * u + sgn * a2 * (u2 + 2.0 * u3p + 6.0 * mu * uu))
                }
                IdentityKind::Stationary => {
                    u4 - gap * (u2 + 6.0 * mu * uu + 2.0 * u3p)
                        + sgn * a1 * u
                        + 10.0 * u * u1 * u1
                        + 10.0 * uu * u2
                        + 6.0 * u5p
                        + 10.0 * mu * u1 * u1
                        + 20.0 * mu * u * u2
                        + 40.0 * mu * mu * u3p
                        + 30.0 * mu * u4p
                }
                IdentityKind::Pde => {
                    sgn * s.b_t[i]
                        + u5
                        + 10.0 * mu * mu * u3
                        + 20.0 * mu * u * u3
                        + 10.0 * uu * u3
                        + 120.0 * mu.powi(3) * u * u1
                        + 180.0 * mu * mu * uu * u1
                        + 120.0 * mu * u3p * u1
                        + 10.0 * u1.powi(3)
                        + 40.0 * mu * u1 * u2
                        + 40.0 * u * u1 * u2
                        + 30.0 * u4p * u1
                }
            }
        })
        .collect();
    RealField::new(grid, out)
}

pub fn identity_residual(
    kind: IdentityKind,
    p: &BreatherParams,
    t: f64,
    grid: &Grid,
) -> Result<Residual> {
    identity_residual_with(kind, p, t, grid, IdentityOptions::default())
}

pub fn identity_residual_with(
    kind: IdentityKind,
    p: &BreatherParams,
    t: f64,
    grid: &Grid,
    opts: IdentityOptions,
) -> Result<Residual> {
    let r = identity_field(kind, p, t, grid, opts)?;
    Ok(Residual { sup: r.max_abs(), l2: r.norm_l2() })
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualReport {
    pub kind: IdentityKind,
    pub params: BreatherParams,
    pub t: f64,
    pub grid: GridSpec,
    pub sup: f64,
    pub l2: f64,
    pub pass: bool,
}

impl ResidualReport {
    pub fn build(
        kind: IdentityKind,
        p: &BreatherParams,
        t: f64,
        grid: &Grid,
        r: Residual,
        tol: f64,
    ) -> ResidualReport {
        ResidualReport {
            kind,
            params: *p,
            t,
            grid: grid.into(),
            sup: r.sup,
            l2: r.l2,
            pass: r.sup < tol,
        }
    }
}

/// The 3×3×3 lattice: α, β ∈ {0.5, 1, 2}, μ at 25/50/75% of √(α²+β²)/2.
pub fn regime_lattice() -> Vec<BreatherParams> {
    let mut out = Vec::with_capacity(27);
    for &alpha in &[0.5, 1.0, 2.0] {
        for &beta in &[0.5, 1.0, 2.0] {
            for &frac in &[0.25, 0.5, 0.75] {
                let mu = frac * (alpha * alpha + beta * beta as f64).sqrt() / 2.0;
                out.push(BreatherParams { alpha, beta, mu, x1: 0.0, x2: 0.0 });
            }
        }
    }
    out
}

/// Residuals of every kind at one lattice point on its automatic grid.
pub fn residual_suite(p: &BreatherParams, t: f64, opts: IdentityOptions) -> Result<Vec<(IdentityKind, Residual)>> {
    let grid = auto_grid(p, t)?;
    IdentityKind::ALL
        .iter()
        .map(|&k| Ok((k, identity_residual_with(k, p, t, &grid, opts)?)))
        .collect()
}
