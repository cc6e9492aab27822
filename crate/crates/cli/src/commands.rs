//! The six subcommands.

use std::path::PathBuf;

use gardner_core::dynamics::{diagnostics_csv, peak_velocity, run, Equation, Initial, Terms};
use gardner_core::exact::{
    auto_grid, breather_eval, breather_mass_closed, identity_residual_with, soliton_residuals, BreatherParams,
    IdentityKind, IdentityOptions, ResidualReport, SolitonParams,
};
use gardner_core::field::{fmt17, Grid};
use gardner_core::functionals::mass;
use gardner_core::illposed::{norm_scan, twin_divergence, Fit, NormMethod, NormScan, TwinConfig, TwinResult};
use gardner_core::specl::{closed_form_report, spectral_grid, spectrum_report, ClosedFormReport, SpectrumReport};
use serde::Serialize;
use serde_json::Value;

use crate::config::*;
use crate::{CliError, Outcome, Outputs, RunManifest, ARTIFACT_VERSION};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Residuals,
    Simulate,
    Spectrum,
    Illposed,
    NormsScan,
    MassCheck,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Residuals => "residuals",
            Command::Simulate => "simulate",
            Command::Spectrum => "spectrum",
            Command::Illposed => "illposed",
            Command::NormsScan => "norms-scan",
            Command::MassCheck => "mass-check",
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Options {
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub strict: bool,
}

fn echo<T: Serialize>(cfg: &T) -> Result<Value, CliError> {
    serde_json::to_value(cfg).map_err(|e| CliError::Run(e.to_string()))
}

/// Run one command end to end, manifest included.
pub fn execute(cmd: Command, opts: &Options) -> Result<Outcome, CliError> {
    let file = match &opts.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let seed = opts.seed.or(file.seed).unwrap_or(0);
    let mut out = Outputs::create(&opts.out)?;
    let (outcome, used) = match cmd {
        Command::Residuals => {
            let c = file.residuals.unwrap_or_default();
            (residuals(&c, &mut out)?, echo(&c)?)
        }
        Command::Simulate => {
            let c = file.simulate.unwrap_or_default();
            (simulate(&c, &mut out)?, echo(&c)?)
        }
        Command::Spectrum => {
            let c = file.spectrum.unwrap_or_default();
            (spectrum(&c, seed, &mut out)?, echo(&c)?)
        }
        Command::Illposed => {
            let c = file.illposed.unwrap_or_default();
            (illposed(&c, &mut out)?, echo(&c)?)
        }
        Command::NormsScan => {
            let c = file.norms_scan.unwrap_or_default();
            (norms_scan(&c, &mut out)?, echo(&c)?)
        }
        Command::MassCheck => {
            let c = file.mass_check.unwrap_or_default();
            (mass_check(&c, &mut out)?, echo(&c)?)
        }
    };
    let mut outputs = out.written().to_vec();
    outputs.push("manifest.json".into());
    let manifest = RunManifest {
        command: cmd.name().into(),
        config_path: opts.config.as_ref().map(|p| p.display().to_string()),
        seed,
        artifact_version: ARTIFACT_VERSION.into(),
        outputs,
        strict: opts.strict,
        pass: outcome.exit_code(opts.strict) == 0,
        warnings: outcome.warnings.clone(),
        config: used,
    };
    out.json("manifest.json", &manifest)?;
    Ok(outcome)
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be positive, got {v}")))
    }
}

#[derive(Serialize)]
struct ResidualEntry {
    #[serde(flatten)]
    report: ResidualReport,
    control_sup: f64,
    control_pass: bool,
}

#[derive(Serialize)]
struct SolitonEntry {
    mu: f64,
    c: f64,
    ode2_sup: f64,
    ode4_sup: f64,
    pass: bool,
}

#[derive(Serialize)]
struct ResidualsSummary {
    tolerance: f64,
    control_floor: f64,
    max_sup: f64,
    min_control_sup: f64,
    reports: Vec<ResidualEntry>,
    solitons: Vec<SolitonEntry>,
    pass: bool,
}

/// Box for the soliton ODE residuals: Q decays like e^{−√c|x|}.
pub fn soliton_grid(c: f64) -> Result<Grid, CliError> {
    Ok(Grid::new(36.0 / c.sqrt(), 2048)?)
}

pub fn residuals(c: &ResidualsConfig, out: &mut Outputs) -> Result<Outcome, CliError> {
    positive("tolerance", c.tolerance)?;
    let mut reports = Vec::new();
    for p in c.points() {
        p.validate()?;
        for &t in &c.times {
            let grid = auto_grid(&p, t)?;
            for kind in IdentityKind::ALL {
                let plain = IdentityOptions { derivs: c.derivs, negative_control: false };
                let flipped = IdentityOptions { negative_control: true, ..plain };
                let r = identity_residual_with(kind, &p, t, &grid, plain)?;
                let ctl = identity_residual_with(kind, &p, t, &grid, flipped)?;
                reports.push(ResidualEntry {
                    report: ResidualReport::build(kind, &p, t, &grid, r, c.tolerance),
                    control_sup: ctl.sup,
                    control_pass: ctl.sup > c.control_floor,
                });
            }
        }
    }
    let mut solitons = Vec::new();
    for &[mu, cc] in &c.solitons {
        let sp = SolitonParams::new(mu, cc, 0.0)?;
        let r = soliton_residuals(&sp, &soliton_grid(cc)?)?;
        let pass = r.ode2_sup < c.soliton_tolerance && r.ode4_sup < c.soliton_tolerance;
        solitons.push(SolitonEntry { mu, c: cc, ode2_sup: r.ode2_sup, ode4_sup: r.ode4_sup, pass });
    }
    let max_sup = reports.iter().map(|r| r.report.sup).fold(0.0, f64::max);
    let min_control = reports.iter().map(|r| r.control_sup).fold(f64::INFINITY, f64::min);
    let id_pass = reports.iter().all(|r| r.report.pass && r.control_pass);
    let sol_pass = solitons.iter().all(|s| s.pass);
    let mut csv = String::from("kind,alpha,beta,mu,t,sup,l2,control_sup,pass\n");
    for r in &reports {
        let p = &r.report.params;
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.report.kind.name(),
            fmt17(p.alpha),
            fmt17(p.beta),
            fmt17(p.mu),
            fmt17(r.report.t),
            fmt17(r.report.sup),
            fmt17(r.report.l2),
            fmt17(r.control_sup),
            r.report.pass && r.control_pass
        ));
    }
    out.text("residuals.csv", &csv)?;
    let mut warnings = Vec::new();
    if min_control.is_finite() && min_control < 10.0 * c.control_floor {
        warnings.push(format!("weakest negative control {min_control:.3e} is within 10x of its floor"));
    }
    let pass = id_pass && sol_pass;
    out.json(
        "residuals.json",
        &ResidualsSummary {
            tolerance: c.tolerance,
            control_floor: c.control_floor,
            max_sup,
            min_control_sup: min_control,
            reports,
            solitons,
            pass,
        },
    )?;
    Ok(Outcome {
        pass,
        warnings,
        lines: vec![
            format!("{} identities: max sup {max_sup:.3e}, weakest control {min_control:.3e}", verdict(id_pass)),
            format!("{} soliton residuals", verdict(sol_pass)),
        ],
    })
}

#[derive(Serialize)]
struct SimulateSummary {
    final_t: f64,
    steps: u64,
    blow_up: Option<f64>,
    max_drift: f64,
    max_error: Option<f64>,
    peak_velocity: Option<f64>,
    expected_velocity: Option<f64>,
    speed_rel_err: Option<f64>,
    pass: bool,
}

pub fn simulate(c: &SimulateConfig, out: &mut Outputs) -> Result<Outcome, CliError> {
    c.run.validate()?;
    let res = run(&c.run)?;
    out.text("diagnostics.csv", &diagnostics_csv(&res.diagnostics))?;
    let mut field = String::from("x,value\n");
    for (x, v) in res.final_field.grid().nodes().iter().zip(res.final_field.values()) {
        field.push_str(&format!("{},{}\n", fmt17(*x), fmt17(*v)));
    }
    out.text("final_field.csv", &field)?;
    let drift = res.max_drift();
    let err = res.max_error();
    let (vel, expected) = match &c.run.initial {
        Initial::Soliton(sp) => {
            let lam = match c.run.equation {
                Equation::Original => 1.0,
                Equation::General => c.run.gardner.lambda,
            };
            (peak_velocity(&res.diagnostics).ok(), Some(sp.velocity() * lam.powi(4)))
        }
        _ => (None, None),
    };
    let speed_err = match (vel, expected) {
        (Some(v), Some(e)) => Some((v - e).abs() / e.abs()),
        _ => None,
    };
    let drift_ok = drift < c.drift_tolerance;
    let err_ok = err.is_none_or(|e| e < c.error_tolerance);
    let speed_ok = speed_err.is_none_or(|e| e < c.speed_tolerance) && (expected.is_none() || vel.is_some());
    let pass = res.blow_up.is_none() && drift_ok && err_ok && speed_ok;
    out.json(
        "simulate.json",
        &SimulateSummary {
            final_t: res.final_t,
            steps: c.run.steps(),
            blow_up: res.blow_up,
            max_drift: drift,
            max_error: err,
            peak_velocity: vel,
            expected_velocity: expected,
            speed_rel_err: speed_err,
            pass,
        },
    )?;
    let mut lines = vec![
        format!("{} conservation: max relative drift {drift:.3e}", verdict(drift_ok)),
        format!("{} blow-up: {:?}", verdict(res.blow_up.is_none()), res.blow_up),
    ];
    if let Some(e) = err {
        lines.push(format!("{} L2 error against the closed form {e:.3e}", verdict(err_ok)));
    }
    if let Some(e) = speed_err {
        lines.push(format!("{} peak speed relative error {e:.3e}", verdict(speed_ok)));
    }
    Ok(Outcome { pass, warnings: Vec::new(), lines })
}

#[derive(Serialize)]
#[serde(untagged)]
enum SpectrumEntry {
    Full(SpectrumReport),
    ClosedForms {
        params: BreatherParams,
        t: f64,
        n: usize,
        #[serde(flatten)]
        report: ClosedFormReport,
        pass: bool,
    },
}

#[derive(Serialize)]
struct SpectrumSummary {
    t: f64,
    n: usize,
    trials: usize,
    seed: u64,
    reports: Vec<SpectrumEntry>,
    pass: bool,
}

pub fn spectrum(c: &SpectrumConfig, seed: u64, out: &mut Outputs) -> Result<Outcome, CliError> {
    let points = c.points();
    for p in &points {
        p.validate()?;
        p.require_regime()?;
    }
    let mut reports = Vec::new();
    let mut lines = Vec::new();
    let mut warnings = Vec::new();
    let mut csv = String::from("alpha,beta,mu,index,eigenvalue\n");
    for p in &points {
        let grid = spectral_grid(p, c.t, c.n)?;
        let entry = if c.eigen {
            let r = spectrum_report(p, c.t, &grid, c.trials, seed)?;
            for (i, v) in r.lowest.iter().enumerate() {
                csv.push_str(&format!("{},{},{},{i},{}\n", fmt17(p.alpha), fmt17(p.beta), fmt17(p.mu), fmt17(*v)));
            }
            if r.coercivity_min_ratio > 0.0 && r.coercivity_min_ratio < 1e-3 {
                warnings.push(format!("coercivity ratio {:.3e} is marginal at {p:?}", r.coercivity_min_ratio));
            }
            lines.push(format!(
                "{} alpha={} beta={} mu={}: negatives {}, kernel {:.2e}/{:.2e}, wronskian {:.2e}, coercivity {:.3}",
                verdict(r.pass),
                p.alpha,
                p.beta,
                p.mu,
                r.negative_count,
                r.kernel_residuals[0],
                r.kernel_residuals[1],
                r.wronskian_sup_mismatch,
                r.coercivity_min_ratio
            ));
            SpectrumEntry::Full(r)
        } else {
            let r = closed_form_report(p, c.t, &grid)?;
            let pass = [r.qf_alpha, r.qf_beta, r.b0_inner].iter().all(|q| q.rel_err < 1e-4)
                && r.qf_alpha.numeric > 0.0
                && r.qf_beta.numeric < 0.0
                && r.b0_inner.numeric > 0.0
                && r.b0_residual < 1e-4;
            lines.push(format!(
                "{} alpha={} beta={} mu={}: closed forms {:.1e}/{:.1e}/{:.1e}, L B0 + B {:.1e}",
                verdict(pass),
                p.alpha,
                p.beta,
                p.mu,
                r.qf_alpha.rel_err,
                r.qf_beta.rel_err,
                r.b0_inner.rel_err,
                r.b0_residual
            ));
            SpectrumEntry::ClosedForms { params: *p, t: c.t, n: c.n, report: r, pass }
        };
        reports.push(entry);
    }
    let pass = reports.iter().all(|e| match e {
        SpectrumEntry::Full(r) => r.pass,
        SpectrumEntry::ClosedForms { pass, .. } => *pass,
    });
    if c.eigen {
        out.text("eigenvalues.csv", &csv)?;
    }
    out.json("spectrum.json", &SpectrumSummary { t: c.t, n: c.n, trials: c.trials, seed, reports, pass })?;
    Ok(Outcome { pass, warnings, lines })
}

#[derive(Serialize)]
struct IllposedSummary {
    #[serde(flatten)]
    full: TwinResult,
    target_amplitude: f64,
    amplitude_rel_err: f64,
    ablation_fit: Option<Fit>,
    ablation_ratio: Option<f64>,
    fit_pass: bool,
    amplitude_pass: bool,
    ablation_pass: Option<bool>,
    pass: bool,
}

pub fn illposed(c: &IllposedConfig, out: &mut Outputs) -> Result<Outcome, CliError> {
    c.params.validate()?;
    let grid = c.params.grid_spec()?.build()?;
    let full = twin_divergence(&c.params, &c.twin, Some(&grid))?;
    let abl = if c.ablation {
        let cfg = TwinConfig { terms: Terms::NoHighLow, ..c.twin };
        Some(twin_divergence(&c.params, &cfg, Some(&grid))?)
    } else {
        None
    };
    let scan = norm_scan(c.params.delta, c.params.s, &[c.params.n], 0.0, NormMethod::Modulation)?;
    let target = 2.0 * scan.rows[0].scaled_norm;
    let amp = full.fit.amplitude;
    let amp_err = (amp - target).abs() / target;
    let ratio = abl.as_ref().map(|a| amp / a.fit.amplitude);
    let fit_pass = full.blow_up.is_none() && full.fit.residual < c.fit_tolerance;
    let amplitude_pass = amp_err < c.amplitude_tolerance;
    let ablation_pass = ratio.map(|r| r > c.ablation_drop);
    let pass = fit_pass && amplitude_pass && ablation_pass.unwrap_or(true);

    let mut csv = String::from(if abl.is_some() { "t,d,fit,d_ablation\n" } else { "t,d,fit\n" });
    for (i, (&t, &d)) in full.t.iter().zip(&full.d).enumerate() {
        csv.push_str(&format!("{},{},{}", fmt17(t), fmt17(d), fmt17(amp * t.sin().abs())));
        if let Some(a) = &abl {
            csv.push_str(&format!(",{}", a.d.get(i).map(|v| fmt17(*v)).unwrap_or_default()));
        }
        csv.push('\n');
    }
    out.text("divergence.csv", &csv)?;

    let mut warnings = Vec::new();
    for (name, r) in std::iter::once(("full", &full)).chain(abl.iter().map(|a| ("ablation", a))) {
        if let Some(tb) = r.blow_up {
            warnings.push(format!("{name} run blew up after t = {tb}"));
        }
        let drift = r.mass_drift[0].max(r.mass_drift[1]);
        if drift > 1e-8 {
            warnings.push(format!("{name} run mass drift {drift:.2e} exceeds 1e-8"));
        }
    }
    let mut lines = vec![
        format!("{} fit residual {:.3} (A = {amp:.4e})", verdict(fit_pass), full.fit.residual),
        format!("{} amplitude vs 2x norm scan {target:.4e}: rel err {amp_err:.3}", verdict(amplitude_pass)),
    ];
    if let Some(r) = ratio {
        lines.push(format!("{} ablation lowers A by {r:.2}x", verdict(ablation_pass == Some(true))));
    }
    lines.push(format!("info packet phase rate {:.4} (ansatz 1)", full.phase_rate));
    out.json(
        "illposed.json",
        &IllposedSummary {
            full,
            target_amplitude: target,
            amplitude_rel_err: amp_err,
            ablation_fit: abl.as_ref().map(|a| a.fit.clone()),
            ablation_ratio: ratio,
            fit_pass,
            amplitude_pass,
            ablation_pass,
            pass,
        },
    )?;
    Ok(Outcome { pass, warnings, lines })
}

#[derive(Serialize)]
struct NormsSummary {
    delta: f64,
    s: f64,
    method: NormMethod,
    target: f64,
    scans: Vec<NormScan>,
    max_n_rel_err: f64,
    gamma_spread: f64,
    monotone: bool,
    pass: bool,
}

pub fn norms_scan(c: &NormsScanConfig, out: &mut Outputs) -> Result<Outcome, CliError> {
    if c.ns.is_empty() || c.gammas.is_empty() {
        return Err(CliError::Config("norms_scan needs at least one N and one gamma".into()));
    }
    let scans: Vec<NormScan> = c
        .gammas
        .iter()
        .map(|&g| norm_scan(c.delta, c.s, &c.ns, g, c.method))
        .collect::<Result<_, _>>()?;
    let target = scans[0].target;
    let last: Vec<f64> = scans.iter().map(|s| s.rows.last().expect("non-empty").scaled_norm).collect();
    let max_err = scans.iter().map(|s| s.rows.last().expect("non-empty").rel_err).fold(0.0, f64::max);
    let lo = last.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = last.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let spread = (hi - lo) / target;
    let monotone = scans.iter().all(|s| s.rows.windows(2).all(|w| w[1].rel_err <= w[0].rel_err));
    let mut csv = String::from("N,gamma,scaled_norm,target,rel_err\n");
    for s in &scans {
        for r in &s.rows {
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt17(r.n),
                fmt17(s.gamma),
                fmt17(r.scaled_norm),
                fmt17(r.target),
                fmt17(r.rel_err)
            ));
        }
    }
    out.text("norm_scan.csv", &csv)?;
    let pass = max_err < c.tolerance && spread < c.gamma_tolerance;
    let warnings = if monotone { Vec::new() } else { vec!["convergence in N is not monotone".into()] };
    out.json(
        "norms_scan.json",
        &NormsSummary {
            delta: c.delta,
            s: c.s,
            method: c.method,
            target,
            scans,
            max_n_rel_err: max_err,
            gamma_spread: spread,
            monotone,
            pass,
        },
    )?;
    Ok(Outcome {
        pass,
        warnings,
        lines: vec![
            format!("{} limit at N = {}: worst rel err {max_err:.3e}", verdict(max_err < c.tolerance), c.ns.last().unwrap()),
            format!("{} gamma spread {spread:.3e}", verdict(spread < c.gamma_tolerance)),
        ],
    })
}

#[derive(Serialize)]
struct MassRow {
    params: BreatherParams,
    quadrature: f64,
    closed: f64,
    rel_err: f64,
}

#[derive(Serialize)]
struct MassSummary {
    t: f64,
    tolerance: f64,
    rows: Vec<MassRow>,
    max_rel_err: f64,
    pass: bool,
}

pub fn mass_check(c: &MassCheckConfig, out: &mut Outputs) -> Result<Outcome, CliError> {
    positive("tolerance", c.tolerance)?;
    let mut rows = Vec::new();
    let mut csv = String::from("alpha,beta,mu,quadrature,closed,rel_err\n");
    for p in c.points() {
        p.validate()?;
        let b = breather_eval(&p, c.t, &auto_grid(&p, c.t)?)?;
        let (q, m) = (mass(&b), breather_mass_closed(&p));
        let rel = (q - m).abs() / m.abs();
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt17(p.alpha),
            fmt17(p.beta),
            fmt17(p.mu),
            fmt17(q),
            fmt17(m),
            fmt17(rel)
        ));
        rows.push(MassRow { params: p, quadrature: q, closed: m, rel_err: rel });
    }
    out.text("mass_check.csv", &csv)?;
    let max = rows.iter().map(|r| r.rel_err).fold(0.0, f64::max);
    let pass = max < c.tolerance;
    out.json("mass_check.json", &MassSummary { t: c.t, tolerance: c.tolerance, rows, max_rel_err: max, pass })?;
    Ok(Outcome {
        pass,
        warnings: Vec::new(),
        lines: vec![format!("{} breather mass: max rel err {max:.3e}", verdict(pass))],
    })
}
