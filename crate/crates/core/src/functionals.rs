//! Conserved quantities and the Lyapunov functional of the breather.
//!
//! All integrals are plain uniform sums over the periodic grid (spectrally
//! accurate for decaying fields); derivatives are spectral.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::exact::{breather_eval, BreatherParams};
use crate::field::{sobolev_norm, Grid, RealField};
use crate::specl::{quadratic_form, random_probe};

/// Coefficient μ of the equation and the rescaling parameter λ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GardnerParams {
    pub mu: f64,
    #[serde(default = "one")]
    pub lambda: f64,
}

fn one() -> f64 {
    1.0
}

impl GardnerParams {
    pub fn new(mu: f64, lambda: f64) -> Result<GardnerParams> {
        let gp = GardnerParams { mu, lambda };
        gp.validate()?;
        Ok(gp)
    }

    /// The unscaled equation (λ = 1).
    pub fn original(mu: f64) -> Result<GardnerParams> {
        GardnerParams::new(mu, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return invalid(format!("mu must be positive, got {}", self.mu));
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return invalid(format!("lambda must lie in (0, 1], got {}", self.lambda));
        }
        if self.mu * self.lambda > 1.0 {
            return invalid(format!("mu*lambda = {} exceeds 1", self.mu * self.lambda));
        }
        Ok(())
    }

    /// μλ, the only combination the rescaled equation sees.
    pub fn mu_eff(&self) -> f64 {
        self.mu * self.lambda
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FunctionalReport {
    pub mass: f64,
    pub energy: f64,
    pub energy5: f64,
    pub lyapunov: Option<f64>,
}

/// M = ½∫u²
pub fn mass(u: &RealField) -> f64 {
    0.5 * u.values().iter().map(|v| v * v).sum::<f64>() * u.grid().dx()
}

/// E = ∫ ½u_x² − 2μu³ − ½u⁴ with μ = μλ.
pub fn energy_mu(u: &RealField, gp: &GardnerParams) -> f64 {
    energy_with(u, gp.mu_eff())
}

pub fn energy_with(u: &RealField, mu: f64) -> f64 {
    let g = u.grid();
    let ux = g.derivatives(u.values(), &[1]).remove(0);
    let acc: f64 = u
        .values()
        .iter()
        .zip(&ux)
        .map(|(&v, &d)| 0.5 * d * d - 2.0 * mu * v * v * v - 0.5 * v.powi(4))
        .sum();
    acc * g.dx()
}

/// E₅ = ∫ ½u_xx² − 10μuu_x² + 10μ²u⁴ − 5u²u_x² + 6μu⁵ + u⁶ with μ = μλ.
pub fn energy5_mu(u: &RealField, gp: &GardnerParams) -> f64 {
    energy5_with(u, gp.mu_eff())
}

pub fn energy5_with(u: &RealField, mu: f64) -> f64 {
    let g = u.grid();
    let d = g.derivatives(u.values(), &[1, 2]);
    let acc: f64 = (0..g.n())
        .map(|i| {
            let (v, v1, v2) = (u.values()[i], d[0][i], d[1][i]);
            let v12 = v1 * v1;
            0.5 * v2 * v2 - 10.0 * mu * v * v12 + 10.0 * mu * mu * v.powi(4) - 5.0 * v * v * v12
                + 6.0 * mu * v.powi(5)
                + v.powi(6)
        })
        .sum();
    acc * g.dx()
}

/// H = E₅ + 2(β²−α²)E + (α²+β²)²M, whose critical point is the breather.
pub fn lyapunov(u: &RealField, bp: &BreatherParams) -> f64 {
    let gap = 2.0 * (bp.beta * bp.beta - bp.alpha * bp.alpha);
    energy5_with(u, bp.mu) + gap * energy_with(u, bp.mu) + bp.a1() * mass(u)
}

pub fn functional_report(
    u: &RealField,
    gp: &GardnerParams,
    bp: Option<&BreatherParams>,
) -> FunctionalReport {
    FunctionalReport {
        mass: mass(u),
        energy: energy_mu(u, gp),
        energy5: energy5_mu(u, gp),
        lyapunov: bp.map(|b| lyapunov(u, b)),
    }
}

/// Observed orders of the expansion H[B+εz] − H[B] = ½ε²Q[z] + O(ε³)
/// along random directions with ‖z‖_{H²} = 1.
#[derive(Clone, Debug, Serialize)]
pub struct CriticalityReport {
    pub eps: Vec<f64>,
    /// Smallest pairwise log-log slope of |H[B+εz] − H[B]| over all directions.
    pub first_variation_order: f64,
    /// Same for |H[B+εz] − H[B] − ½ε²Q[z]|.
    pub remainder_order: f64,
    pub directions: usize,
}

pub fn criticality_scan(
    bp: &BreatherParams,
    t: f64,
    grid: &Grid,
    directions: usize,
    eps: &[f64],
    seed: u64,
) -> Result<CriticalityReport> {
    use rand::SeedableRng;
    if eps.len() < 2 || eps.iter().any(|e| !(*e > 0.0)) {
        return invalid("criticality scan needs at least two positive step sizes");
    }
    let b = breather_eval(bp, t, grid)?;
    b.check_decay(1e-12)?;
    let h0 = lyapunov(&b, bp);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let width = 3.0 / bp.beta.abs();
    let centre = bp.envelope_centre(t);
    let (mut first, mut rem) = (f64::INFINITY, f64::INFINITY);
    let slope = |a: f64, b: f64, ea: f64, eb: f64| (a / b).ln() / (ea / eb).ln();
    for _ in 0..directions {
        let z = random_probe(grid, &mut rng, centre, width);
        let z = z.scale(1.0 / sobolev_norm(&z, 2.0)?);
        let q = quadratic_form(bp, t, &z)?;
        let mut rows = Vec::with_capacity(eps.len());
        for &e in eps {
            let dh = lyapunov(&b.add(&z.scale(e))?, bp) - h0;
            rows.push((e, dh.abs(), (dh - 0.5 * e * e * q).abs()));
        }
        for w in rows.windows(2) {
            let ((e0, f0, r0), (e1, f1, r1)) = (w[0], w[1]);
            first = first.min(slope(f0, f1, e0, e1));
            rem = rem.min(slope(r0, r1, e0, e1));
        }
    }
    Ok(CriticalityReport { eps: eps.to_vec(), first_variation_order: first, remainder_order: rem, directions })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{breather_eval, breather_mass_closed};
    use crate::field::Grid;
    use std::f64::consts::PI;

    /// ∫ x^{2k} e^{−a x²} dx = Γ(k+½) / a^{k+½}
    fn moment(k: u32, a: f64) -> f64 {
        let mut gamma = PI.sqrt();
        for j in 0..k {
            gamma *= j as f64 + 0.5;
        }
        gamma / a.powf(k as f64 + 0.5)
    }

    fn gaussian() -> RealField {
        let g = Grid::new(12.0, 512).unwrap();
        RealField::from_fn(&g, |x| (-x * x).exp()).unwrap()
    }

    #[test]
    fn params_guard() {
        assert!(GardnerParams::new(0.5, 1.0).is_ok());
        assert!(GardnerParams::new(0.0, 1.0).is_err());
        assert!(GardnerParams::new(0.5, 1.5).is_err());
        assert!(GardnerParams::new(0.5, 0.0).is_err());
        assert!(GardnerParams::new(2.0, 0.75).is_err());
        assert_eq!(GardnerParams::new(2.0, 0.5).unwrap().mu_eff(), 1.0);
    }

    #[test]
    fn zero_field() {
        let g = Grid::new(10.0, 64).unwrap();
        let z = RealField::zeros(&g);
        let gp = GardnerParams::original(0.3).unwrap();
        let bp = BreatherParams::new(1.0, 1.0, 0.3, 0.0, 0.0).unwrap();
        let r = functional_report(&z, &gp, Some(&bp));
        assert_eq!((r.mass, r.energy, r.energy5, r.lyapunov), (0.0, 0.0, 0.0, Some(0.0)));
    }

    #[test]
    fn gaussian_moments() {
        let u = gaussian();
        assert!((mass(&u) - 0.5 * moment(0, 2.0)).abs() < 1e-14);
        for mu in [0.0, 0.4] {
            let gp = GardnerParams { mu, lambda: 1.0 };
            // u_x = −2xu, u_xx = (4x² − 2)u
            let e = 0.5 * 4.0 * moment(1, 2.0) - 2.0 * mu * moment(0, 3.0) - 0.5 * moment(0, 4.0);
            assert!((energy_mu(&u, &gp) - e).abs() < 1e-13, "mu = {mu}");
            let e5 = 0.5 * (16.0 * moment(2, 2.0) - 16.0 * moment(1, 2.0) + 4.0 * moment(0, 2.0))
                - 40.0 * mu * moment(1, 3.0)
                + 10.0 * mu * mu * moment(0, 4.0)
                - 20.0 * moment(1, 4.0)
                + 6.0 * mu * moment(0, 5.0)
                + moment(0, 6.0);
            assert!((energy5_mu(&u, &gp) - e5).abs() < 1e-12, "mu = {mu}");
        }
    }

    #[test]
    fn small_amplitude_energy_is_kinetic() {
        let u = gaussian().scale(1e-3);
        let gp = GardnerParams::original(0.5).unwrap();
        let kinetic = 0.5 * 4.0 * moment(1, 2.0) * 1e-6;
        let e = energy_mu(&u, &gp);
        assert!(e > 0.0 && (e - kinetic).abs() < 1e-2 * kinetic);
    }

    #[test]
    fn plateau_energy5_term_by_term() {
        // flat top of height ε; on the plateau 10μ²ε⁴ dominates, and the
        // direct sum uses analytic derivatives of the profile
        let g = Grid::new(160.0, 4096).unwrap();
        let (eps, w, mu) = (0.05, 40.0, 0.7);
        let u = RealField::from_fn(&g, |x| eps * (-(x / w).powi(8)).exp()).unwrap();
        let direct: f64 = g
            .nodes()
            .iter()
            .map(|&x| {
                let e = (-(x / w).powi(8)).exp();
                let p1 = -8.0 * x.powi(7) / w.powi(8);
                let p2 = -56.0 * x.powi(6) / w.powi(8);
                let (v, v1, v2) = (eps * e, eps * e * p1, eps * e * (p1 * p1 + p2));
                0.5 * v2 * v2 - 10.0 * mu * v * v1 * v1 + 10.0 * mu * mu * v.powi(4)
                    - 5.0 * v * v * v1 * v1
                    + 6.0 * mu * v.powi(5)
                    + v.powi(6)
            })
            .sum::<f64>()
            * g.dx();
        let e5 = energy5_mu(&u, &GardnerParams::original(mu).unwrap());
        assert!((e5 - direct).abs() < 1e-12 * direct, "{e5} vs {direct}");
        // ∫e^{−4(x/w)⁸} = 2Γ(9/8)·w/4^{1/8}
        let plateau = 10.0 * mu * mu * eps.powi(4) * 2.0 * 0.941_742_699_6 * w / 4f64.powf(0.125);
        assert!((e5 - plateau).abs() < 0.05 * plateau, "{e5} vs {plateau}");
    }

    #[test]
    fn mass_scaling() {
        let g = Grid::new(30.0, 1024).unwrap();
        let f = |x: f64| 1.0 / (x * 0.7).cosh() * (1.0 + 0.3 * x.sin());
        let u = RealField::from_fn(&g, f).unwrap();
        let lam = 0.5;
        let g2 = Grid::new(60.0, 2048).unwrap();
        let ul2 = RealField::from_fn(&g2, |x| lam * f(lam * x)).unwrap();
        assert!((mass(&ul2) - lam * mass(&u)).abs() < 1e-10);
    }

    #[test]
    fn breather_mass_and_conservation() {
        let bp = BreatherParams::new(1.0, 1.0, 0.3, 0.0, 0.0).unwrap();
        let gp = GardnerParams::original(0.3).unwrap();
        let g = Grid::new(60.0, 4096).unwrap();
        let b0 = breather_eval(&bp, 0.0, &g).unwrap();
        let b1 = breather_eval(&bp, 0.5, &g).unwrap();
        let m = breather_mass_closed(&bp);
        assert!((mass(&b0) - m).abs() < 1e-8 * m);
        let (r0, r1) = (functional_report(&b0, &gp, Some(&bp)), functional_report(&b1, &gp, Some(&bp)));
        for (a, b) in [(r0.mass, r1.mass), (r0.energy, r1.energy), (r0.energy5, r1.energy5)] {
            assert!((a - b).abs() < 1e-10 * a.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn lyapunov_translation_invariant() {
        let bp = BreatherParams::new(1.0, 1.5, 0.3, 0.0, 0.0).unwrap();
        let g = Grid::new(50.0, 2048).unwrap();
        let a = breather_eval(&bp, 0.0, &g).unwrap();
        let b = breather_eval(&BreatherParams { x1: 1.7, x2: 1.7, ..bp }, 0.0, &g).unwrap();
        let (ha, hb) = (lyapunov(&a, &bp), lyapunov(&b, &bp));
        assert!((ha - hb).abs() < 1e-12 * ha.abs().max(1.0), "{ha} vs {hb}");
    }

    #[test]
    fn breather_is_critical() {
        let bp = BreatherParams::new(1.0, 1.0, 0.3, 0.0, 0.0).unwrap();
        let g = Grid::new(40.0, 1024).unwrap();
        let r = criticality_scan(&bp, 0.0, &g, 4, &[0.1, 0.05, 0.025, 0.0125], 7).unwrap();
        assert!(r.first_variation_order > 1.9, "{r:?}");
        assert!(r.remainder_order > 2.9, "{r:?}");
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use crate::exact::breather_eval;
    use crate::field::Grid;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn lyapunov_ignores_translation(shift in -200i64..200, t in 0.0..0.5f64) {
            let bp = BreatherParams::new(1.0, 1.0, 0.3, 0.0, 0.0).unwrap();
            let g = Grid::new(40.0, 1024).unwrap();
            let u = breather_eval(&bp, t, &g).unwrap();
            let n = g.n() as i64;
            let mut v = u.values().to_vec();
            v.rotate_left(shift.rem_euclid(n) as usize);
            let moved = RealField::new(&g, v).unwrap();
            let (a, b) = (lyapunov(&u, &bp), lyapunov(&moved, &bp));
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} vs {b}");
        }

        #[test]
        fn mass_is_quadratic(c in -3.0..3.0f64, w in 0.5..3.0f64) {
            let g = Grid::new(30.0, 256).unwrap();
            let u = RealField::from_fn(&g, |x| (-x * x / (w * w)).exp()).unwrap();
            let m = mass(&u);
            prop_assert!((mass(&u.scale(c)) - c * c * m).abs() <= 1e-14 * m.max(1.0) * (1.0 + c * c));
        }
    }
}
