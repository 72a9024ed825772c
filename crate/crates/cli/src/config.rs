//! The JSON run configuration.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use gburgers::fd_oracle::FdConfig;
use gburgers::invariants::Thresholds;
use gburgers::mild_solver::{certified_step, SolverConfig};
use gburgers::{Coefficient, DataSpec, InitialData, QuadratureSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Contraction,
    MaxPrinciple,
    Monotonicity,
    FarField,
    DerivativeDecay,
    Holder,
    PdeResidual,
    SmallTime,
    ContinuousDependence,
    FdAgreement,
}

impl Check {
    pub const ALL: [Check; 10] = [
        Check::Contraction,
        Check::MaxPrinciple,
        Check::Monotonicity,
        Check::FarField,
        Check::DerivativeDecay,
        Check::Holder,
        Check::PdeResidual,
        Check::SmallTime,
        Check::ContinuousDependence,
        Check::FdAgreement,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Contraction => "contraction",
            Check::MaxPrinciple => "max_principle",
            Check::Monotonicity => "monotonicity",
            Check::FarField => "far_field",
            Check::DerivativeDecay => "derivative_decay",
            Check::Holder => "holder",
            Check::PdeResidual => "pde_residual",
            Check::SmallTime => "small_time",
            Check::ContinuousDependence => "continuous_dependence",
            Check::FdAgreement => "fd_agreement",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Check {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        Check::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .with_context(|| format!("unknown check '{s}'"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Problem {
    pub alpha: f64,
    pub data: DataSpec,
    /// Final time; twice the certified step when absent.
    #[serde(default)]
    pub t_final: Option<f64>,
}

impl Default for Problem {
    fn default() -> Self {
        Self { alpha: 1.0, data: DataSpec::Step { u_minus: -1.0, u_plus: 1.0 }, t_final: None }
    }
}

impl Problem {
    pub fn coefficient(&self) -> Result<Coefficient> {
        Ok(Coefficient::new(self.alpha)?)
    }

    pub fn initial_data(&self) -> Result<InitialData> {
        Ok(self.data.build()?)
    }

    pub fn t_star(&self) -> Result<f64> {
        Ok(certified_step(self.initial_data()?.sup_norm(), &self.coefficient()?)?)
    }

    pub fn t_final(&self) -> Result<f64> {
        match self.t_final {
            Some(t) => Ok(t),
            None => Ok(2.0 * self.t_star()?),
        }
    }
}

/// Settings of the identity suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelSettings {
    pub quad: QuadratureSpec,
    pub dts: Vec<f64>,
}

impl Default for KernelSettings {
    fn default() -> Self {
        Self { quad: QuadratureSpec::default(), dts: vec![1e-4, 1e-2, 1.0, 1e2] }
    }
}

/// Parameters of the individual checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Study {
    pub seed: u64,
    pub holder_betas: Vec<f64>,
    pub holder_samples: usize,
    /// Ascending far-field probe positions.
    pub far_field_probes: Vec<f64>,
    /// Derivative fit window as fractions of the first patch length.
    pub derivative_window: (f64, f64),
    /// Grid sizes of the residual refinement study, coarse to fine.
    pub residual_nx: Vec<usize>,
    /// Residual time as a fraction of the first patch length.
    pub residual_time_fraction: f64,
    /// Uniform shift of the data levels for the dependence study.
    pub perturbation: f64,
    /// Horizon of the dependence study; the certified step when absent.
    pub dependence_t_final: Option<f64>,
    /// Solver comparison uses report times from this fraction of the final time on.
    pub compare_from_fraction: f64,
    /// Also compare with both grids refined.
    pub compare_refine: bool,
    /// Profiles drawn in the plot.
    pub plot_times: usize,
}

impl Default for Study {
    fn default() -> Self {
        Self {
            seed: 0,
            holder_betas: vec![0.25, 0.5, 0.75],
            holder_samples: 200,
            far_field_probes: vec![1.0, 1.5, 2.0],
            derivative_window: (10f64.powf(-2.5), 0.1),
            residual_nx: vec![201, 401, 801],
            residual_time_fraction: 0.5,
            perturbation: 0.01,
            dependence_t_final: None,
            compare_from_fraction: 0.1,
            compare_refine: true,
            plot_times: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    pub alphas: Vec<f64>,
    /// Data to combine with every alpha; the problem's data when empty.
    pub data: Vec<DataSpec>,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self { alphas: vec![0.5, 1.0, 2.0], data: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub problem: Problem,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub fd: FdConfig,
    #[serde(default = "all_checks")]
    pub checks: Vec<Check>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub kernel: KernelSettings,
    #[serde(default)]
    pub study: Study,
    #[serde(default)]
    pub sweep: SweepSettings,
}

fn all_checks() -> Vec<Check> {
    Check::ALL.to_vec()
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty config is valid")
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).context("malformed run configuration")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        self.problem.coefficient()?;
        self.problem.initial_data()?;
        if let Some(t) = self.problem.t_final {
            if !(t.is_finite() && t > 0.0) {
                bail!("t_final must be positive, got {t}");
            }
        }
        self.solver.validate()?;
        self.fd.validate()?;
        self.kernel.quad.validate()?;
        if self.kernel.dts.iter().any(|dt| !(*dt > 0.0 && dt.is_finite())) {
            bail!("kernel dts must be positive");
        }
        for &a in &self.sweep.alphas {
            Coefficient::new(a)?;
        }
        for d in &self.sweep.data {
            d.build()?;
        }
        let s = &self.study;
        if s.holder_betas.iter().any(|b| !(*b > 0.0 && *b < 1.0)) {
            bail!("holder betas must lie in (0, 1)");
        }
        if s.holder_samples == 0 {
            bail!("holder_samples must be positive");
        }
        if s.far_field_probes.windows(2).any(|w| w[0] >= w[1]) || s.far_field_probes.iter().any(|p| *p <= 0.0) {
            bail!("far-field probes must be positive and ascending");
        }
        if s.residual_nx.len() < 2 {
            bail!("the residual study needs at least two grid sizes");
        }
        if !(s.perturbation.is_finite() && s.perturbation != 0.0) {
            bail!("perturbation must be finite and nonzero");
        }
        if !(0.0..1.0).contains(&s.compare_from_fraction) {
            bail!("compare_from_fraction must lie in [0, 1)");
        }
        Ok(())
    }
}
