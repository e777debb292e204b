//! Experiment configuration: a flat key-value TOML file, fully overridable
//! from the command line. Every numeric field is validated against the
//! preconditions of the target operation before any computation starts.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

/// Which experiment to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    VerifyClass,
    SpectralReport,
    Hormander,
    Passthrough,
    Detd,
    Simulate,
    EnergyBalance,
    ExitTimes,
    Coercivity,
    Flux,
    SwitchChain,
}

impl Kind {
    pub fn name(&self) -> &'static str {
        match self {
            Kind::VerifyClass => "verify-class",
            Kind::SpectralReport => "spectral-report",
            Kind::Hormander => "hormander",
            Kind::Passthrough => "passthrough",
            Kind::Detd => "detd",
            Kind::Simulate => "simulate",
            Kind::EnergyBalance => "energy-balance",
            Kind::ExitTimes => "exit-times",
            Kind::Coercivity => "coercivity",
            Kind::Flux => "flux",
            Kind::SwitchChain => "switch-chain",
        }
    }
}

/// Where the coefficient tensor comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TensorSource {
    #[default]
    Sample,
    Lorenz96,
    Witness,
    File,
}

/// Flat experiment configuration. `None` means "use the kind's default".
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Option<Kind>,
    /// State dimension.
    pub d: Option<usize>,
    /// Undamped (kernel) dimension.
    pub j: Option<usize>,
    /// Noise amplitudes, one per coordinate.
    pub sigma: Option<Vec<f64>>,
    /// Damping rates for the damped coordinates (length `d - j`).
    pub damping_rates: Option<Vec<f64>>,
    pub tensor: Option<TensorSource>,
    pub tensor_file: Option<PathBuf>,
    pub tensor_scale: Option<f64>,
    pub tensor_seed: Option<u64>,
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub eps: Option<f64>,
    pub eps_grid: Option<Vec<f64>>,
    pub delta: Option<f64>,
    pub n_paths: Option<usize>,
    pub n_samples: Option<usize>,
    pub j_max: Option<usize>,
    pub burn_in: Option<usize>,
    pub n_steps: Option<usize>,
    pub c0: Option<f64>,
    pub horizon_factor: Option<f64>,
    pub x0: Option<Vec<f64>>,
    pub x0_norms: Option<Vec<f64>>,
    pub radius: Option<f64>,
    pub alpha: Option<f64>,
    pub tol: Option<f64>,
    pub moment_exponents: Option<Vec<f64>>,
    pub store_every: Option<usize>,
    pub master_seed: Option<u64>,
    pub threads: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

/// A configuration problem; maps to exit code 2 with a field-precise message.
#[derive(Debug, thiserror::Error)]
#[error("config error: {0}")]
pub struct ConfigError(pub String);

impl ExperimentConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config file {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| ConfigError(format!("config file {}: {e}", path.display())))
    }

    /// Overlays `other` (command-line overrides win over file values).
    pub fn merged_with(mut self, other: ExperimentConfig) -> Self {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if other.$field.is_some() { self.$field = other.$field; })*
            };
        }
        take!(
            kind, d, j, sigma, damping_rates, tensor, tensor_file, tensor_scale, tensor_seed,
            dt, t_final, eps, eps_grid, delta, n_paths, n_samples, j_max, burn_in, n_steps,
            c0, horizon_factor, x0, x0_norms, radius, alpha, tol, moment_exponents,
            store_every, master_seed, threads, out_dir
        );
        self
    }

    pub fn kind(&self) -> Result<Kind, ConfigError> {
        self.kind.ok_or_else(|| ConfigError("missing field `kind`".into()))
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed.unwrap_or(0)
    }

    fn require_d(&self) -> Result<usize, ConfigError> {
        let d = self.d.ok_or_else(|| ConfigError("missing field `d` (state dimension)".into()))?;
        if d < 3 {
            return Err(ConfigError(format!("field `d`: constraint class needs d >= 3, got {d}")));
        }
        Ok(d)
    }

    fn require_j(&self, d: usize) -> Result<usize, ConfigError> {
        let j = self.j.ok_or_else(|| ConfigError("missing field `j` (kernel dimension)".into()))?;
        if j >= d {
            return Err(ConfigError(format!("field `j`: kernel dimension must be < d = {d}, got {j}")));
        }
        Ok(j)
    }

    fn check_positive(&self, name: &str, value: Option<f64>) -> Result<(), ConfigError> {
        if let Some(v) = value {
            if !(v > 0.0) || !v.is_finite() {
                return Err(ConfigError(format!("field `{name}` must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }

    /// Validates the fields the chosen kind will read. Call before running.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let kind = self.kind()?;
        self.check_positive("dt", self.dt)?;
        self.check_positive("t-final", self.t_final)?;
        self.check_positive("tensor-scale", self.tensor_scale)?;
        self.check_positive("c0", self.c0)?;
        self.check_positive("horizon-factor", self.horizon_factor)?;
        if let Some(eps) = self.eps {
            if !(0.0..=1.0).contains(&eps) {
                return Err(ConfigError(format!("field `eps` must lie in [0, 1], got {eps}")));
            }
        }
        if let Some(grid) = &self.eps_grid {
            if grid.is_empty() {
                return Err(ConfigError("field `eps-grid` must not be empty".into()));
            }
            for &e in grid {
                if !(e > 0.0 && e < 1.0) {
                    return Err(ConfigError(format!("field `eps-grid`: entries must lie in (0, 1), got {e}")));
                }
            }
        }
        if let Some(delta) = self.delta {
            if !(delta > 0.0 && delta < 0.5) {
                return Err(ConfigError(format!("field `delta` must lie in (0, 1/2), got {delta}")));
            }
        }
        if self.tensor == Some(TensorSource::File) && self.tensor_file.is_none() {
            return Err(ConfigError("tensor source `file` needs field `tensor-file`".into()));
        }
        if let Some(sigma) = &self.sigma {
            if let Some(d) = self.d {
                if sigma.len() != d {
                    return Err(ConfigError(format!(
                        "field `sigma` must have one amplitude per coordinate ({} expected, got {})",
                        d,
                        sigma.len()
                    )));
                }
            }
        }

        match kind {
            Kind::VerifyClass | Kind::SpectralReport | Kind::Hormander | Kind::Detd => {
                self.require_d()?;
            }
            Kind::Passthrough => {
                let d = self.require_d()?;
                self.require_j(d)?;
            }
            Kind::Simulate | Kind::EnergyBalance | Kind::Flux => {
                let d = self.require_d()?;
                self.require_j(d)?;
                if let Some(x0) = &self.x0 {
                    if x0.len() != d {
                        return Err(ConfigError(format!(
                            "field `x0` must have length d = {d}, got {}",
                            x0.len()
                        )));
                    }
                }
            }
            Kind::ExitTimes | Kind::Coercivity => {
                let d = self.require_d()?;
                self.require_j(d)?;
            }
            Kind::SwitchChain => {
                let d = self.require_d()?;
                self.require_j(d)?;
                if let Some(norms) = &self.x0_norms {
                    for &r in norms {
                        if !(r > 0.0) {
                            return Err(ConfigError(format!(
                                "field `x0-norms`: entries must be positive, got {r}"
                            )));
                        }
                    }
                }
                if let Some(r) = self.radius {
                    if r < 0.0 {
                        return Err(ConfigError(format!("field `radius` must be nonnegative, got {r}")));
                    }
                }
            }
        }
        Ok(())
    }
}
