//! TOML configuration, one section per subcommand.
//!
//! A missing section falls back to the defaults below, which are the
//! reference settings used by the acceptance run.

use std::path::Path;

use gardner_core::dynamics::{Equation, Initial, Scheme, SimConfig, Terms};
use gardner_core::exact::{regime_lattice, BreatherParams, SpaceDerivs};
use gardner_core::field::GridSpec;
use gardner_core::illposed::{IllposedParams, NormMethod, TwinConfig};
use gardner_core::GardnerParams;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub residuals: Option<ResidualsConfig>,
    pub simulate: Option<SimulateConfig>,
    pub spectrum: Option<SpectrumConfig>,
    pub illposed: Option<IllposedConfig>,
    pub norms_scan: Option<NormsScanConfig>,
    pub mass_check: Option<MassCheckConfig>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<ConfigFile, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Breather parameter points: an explicit list, or the 27-point lattice.
fn points_or_lattice(points: &Option<Vec<BreatherParams>>) -> Vec<BreatherParams> {
    points.clone().unwrap_or_else(regime_lattice)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResidualsConfig {
    pub points: Option<Vec<BreatherParams>>,
    pub times: Vec<f64>,
    pub tolerance: f64,
    pub derivs: SpaceDerivs,
    /// Sign-flipped controls must exceed this floor.
    pub control_floor: f64,
    /// (μ, c) pairs for the soliton ODE residuals.
    pub solitons: Vec<[f64; 2]>,
    pub soliton_tolerance: f64,
}

impl Default for ResidualsConfig {
    fn default() -> Self {
        let vals = [0.1, 0.5, 1.0];
        ResidualsConfig {
            points: None,
            times: vec![0.0, 0.5],
            tolerance: 1e-6,
            derivs: SpaceDerivs::Jet,
            control_floor: 1e-2,
            solitons: vals.iter().flat_map(|&m| vals.iter().map(move |&c| [m, c])).collect(),
            soliton_tolerance: 1e-8,
        }
    }
}

impl ResidualsConfig {
    pub fn points(&self) -> Vec<BreatherParams> {
        points_or_lattice(&self.points)
    }
}

// serde cannot combine `flatten` with `deny_unknown_fields`
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimulateConfig {
    #[serde(flatten)]
    pub run: SimConfig,
    /// Largest allowed relative drift of M, E, E₅.
    pub drift_tolerance: f64,
    /// Largest allowed L² distance to the closed form, when there is one.
    pub error_tolerance: f64,
    /// Allowed relative error of the soliton peak speed.
    pub speed_tolerance: f64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            run: SimConfig {
                equation: Equation::Original,
                gardner: GardnerParams::original(0.3).expect("valid"),
                grid: GridSpec { half_length: 60.0, n: 4096 },
                dt: 1e-4,
                t_end: 1.0,
                scheme: Scheme::Etdrk4,
                diag_stride: 100,
                initial: Initial::Breather(BreatherParams { alpha: 1.0, beta: 1.0, mu: 0.3, x1: 0.0, x2: 0.0 }),
                sobolev_s: 2.0,
                terms: Terms::Full,
            },
            drift_tolerance: 1e-8,
            error_tolerance: 1e-6,
            speed_tolerance: 1e-3,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub points: Option<Vec<BreatherParams>>,
    pub t: f64,
    pub n: usize,
    pub trials: usize,
    /// Run the dense eigensolve and coercivity probe, not just the closed forms.
    pub eigen: bool,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig {
            points: Some(vec![BreatherParams { alpha: 1.0, beta: 1.0, mu: 0.3, x1: 0.0, x2: 0.0 }]),
            t: 0.0,
            n: 2048,
            trials: 100,
            eigen: true,
        }
    }
}

impl SpectrumConfig {
    pub fn points(&self) -> Vec<BreatherParams> {
        points_or_lattice(&self.points)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IllposedConfig {
    pub params: IllposedParams,
    pub twin: TwinConfig,
    /// Also run with the high-low term removed.
    pub ablation: bool,
    pub fit_tolerance: f64,
    /// Allowed relative distance of A from twice the norm-scan value.
    pub amplitude_tolerance: f64,
    /// Required factor by which the ablation lowers A.
    pub ablation_drop: f64,
}

impl Default for IllposedConfig {
    fn default() -> Self {
        IllposedConfig {
            params: IllposedParams {
                n: 8.0,
                delta: 0.5,
                s: 2.0,
                eps: 0.01,
                gardner: GardnerParams::new(1.0, 1.0).expect("valid"),
            },
            twin: TwinConfig {
                dt: 1.25e-3,
                t_end: 0.5,
                diag_stride: 10,
                scheme: Scheme::Ifrk4,
                terms: Terms::Full,
                approx_report: false,
            },
            ablation: true,
            fit_tolerance: 0.2,
            amplitude_tolerance: 0.35,
            ablation_drop: 5.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormsScanConfig {
    pub delta: f64,
    pub s: f64,
    #[serde(rename = "Ns")]
    pub ns: Vec<f64>,
    pub gammas: Vec<f64>,
    pub method: NormMethod,
    /// Allowed relative error at the largest N.
    pub tolerance: f64,
    /// Allowed spread across γ at the largest N.
    pub gamma_tolerance: f64,
}

impl Default for NormsScanConfig {
    fn default() -> Self {
        NormsScanConfig {
            delta: 0.5,
            s: 2.0,
            ns: vec![8.0, 16.0, 32.0],
            gammas: vec![0.0, 0.7, 1.9],
            method: NormMethod::Modulation,
            tolerance: 0.02,
            gamma_tolerance: 0.01,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MassCheckConfig {
    pub points: Option<Vec<BreatherParams>>,
    pub t: f64,
    pub tolerance: f64,
}

impl Default for MassCheckConfig {
    fn default() -> Self {
        MassCheckConfig { points: None, t: 0.0, tolerance: 1e-8 }
    }
}

impl MassCheckConfig {
    pub fn points(&self) -> Vec<BreatherParams> {
        points_or_lattice(&self.points)
    }
}
