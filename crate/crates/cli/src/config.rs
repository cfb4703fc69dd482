//! Experiment configuration: a TOML file with one section per suite,
//! overridden field by field from the command line.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dist::parse_distribution;
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Single-site law, e.g. `bernoulli:0,1`, `uniform:0,1`, `atoms:0@0.3,2@0.7`.
    #[serde(default = "default_distribution")]
    pub distribution: String,
    #[serde(default)]
    pub lyapunov: LyapunovConfig,
    #[serde(default)]
    pub furstenberg: FurstenbergConfig,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub dynlocal: DynlocalConfig,
    #[serde(default)]
    pub spectral_avg: SpectralAvgConfig,
    #[serde(default)]
    pub ks: KsConfig,
    #[serde(default)]
    pub check: CheckConfig,
}

fn default_seed() -> u64 {
    1
}

fn default_distribution() -> String {
    "bernoulli:0,1".into()
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: default_seed(),
            distribution: default_distribution(),
            lyapunov: LyapunovConfig::default(),
            furstenberg: FurstenbergConfig::default(),
            spectrum: SpectrumConfig::default(),
            dynlocal: DynlocalConfig::default(),
            spectral_avg: SpectralAvgConfig::default(),
            ks: KsConfig::default(),
            check: CheckConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LyapunovConfig {
    /// `a:b:step`, both ends included.
    pub energy_grid: String,
    pub steps: usize,
    pub realizations: usize,
}

impl Default for LyapunovConfig {
    fn default() -> Self {
        Self {
            energy_grid: "-3:5:0.25".into(),
            steps: 100_000,
            realizations: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FurstenbergConfig {
    pub energy: f64,
    pub grid: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FurstenbergConfig {
    fn default() -> Self {
        Self {
            energy: 0.5,
            grid: 2048,
            tol: 1e-11,
            max_iter: 50_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    #[serde(rename = "L")]
    pub l: usize,
    pub realizations: usize,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self { l: 100, realizations: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynlocalConfig {
    #[serde(rename = "L")]
    pub l: usize,
    pub m_max: usize,
    pub realizations: usize,
}

impl Default for DynlocalConfig {
    fn default() -> Self {
        Self {
            l: 50,
            m_max: 30,
            realizations: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectralAvgConfig {
    /// Matrix size `2L + 1`.
    pub size: usize,
    /// `[re, im]`.
    pub z: [f64; 2],
    pub lambda_max: f64,
    pub tol: f64,
    pub max_intervals: usize,
}

impl Default for SpectralAvgConfig {
    fn default() -> Self {
        Self {
            size: 21,
            z: [0.5, 1.0],
            lambda_max: 1e4,
            tol: 1e-10,
            max_intervals: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KsConfig {
    #[serde(rename = "L")]
    pub l: usize,
    pub m_max: usize,
    pub grid_n: usize,
    pub grid_x: f64,
    pub e_points: usize,
    /// Monte Carlo realizations for the comparison column.
    pub realizations: usize,
    /// Grid for the norm certificate, which iterates to convergence and is
    /// far more expensive per point than the correlator.
    pub norm_grid_n: usize,
    pub norm_grid_x: f64,
    pub power_max_iter: usize,
    pub power_tol: f64,
}

impl Default for KsConfig {
    fn default() -> Self {
        Self {
            l: 6,
            m_max: 4,
            grid_n: 1 << 14,
            grid_x: 64.0,
            e_points: 64,
            realizations: 10_000,
            norm_grid_n: 4096,
            norm_grid_x: 16.0,
            power_max_iter: 200,
            power_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct CheckConfig {
    /// Run reduced sizes (seconds instead of minutes).
    pub quick: bool,
}

fn invalid(field: &str, reason: impl Into<String>) -> CliError {
    CliError::Validation {
        field: field.to_string(),
        reason: reason.into(),
    }
}

fn positive(field: &str, v: usize) -> Result<(), CliError> {
    if v == 0 {
        return Err(invalid(field, "must be at least 1"));
    }
    Ok(())
}

fn positive_real(field: &str, v: f64) -> Result<(), CliError> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(invalid(field, format!("must be a positive finite number, got {v}")));
    }
    Ok(())
}

/// Parses `a:b:step` into the energies `a, a + step, …` up to `b` inclusive.
pub fn parse_energy_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let field = "lyapunov.energy_grid";
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(invalid(field, format!("expected a:b:step, got `{s}`")));
    }
    let num = |p: &str| {
        p.trim()
            .parse::<f64>()
            .map_err(|_| invalid(field, format!("`{p}` is not a number")))
    };
    let (a, b, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(invalid(field, format!("need finite a <= b, got {a}:{b}")));
    }
    positive_real(field, step)?;
    let count = ((b - a) / step + 1e-9).floor() as usize + 1;
    if count > 100_000 {
        return Err(invalid(field, format!("{count} energies is more than 100000")));
    }
    Ok((0..count).map(|i| a + i as f64 * step).collect())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Validation {
            field: "config".into(),
            reason: e.message().to_string(),
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks every section, so a stored config is valid for any suite.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.seed > i64::MAX as u64 {
            return Err(invalid("seed", "must fit in a signed 64-bit integer"));
        }
        parse_distribution(&self.distribution)?;

        let ly = &self.lyapunov;
        parse_energy_grid(&ly.energy_grid)?;
        if ly.steps < 1000 {
            return Err(invalid("lyapunov.steps", format!("need at least 1000, got {}", ly.steps)));
        }
        positive("lyapunov.realizations", ly.realizations)?;

        let fu = &self.furstenberg;
        if !fu.energy.is_finite() {
            return Err(invalid("furstenberg.energy", "must be finite"));
        }
        if fu.grid < 64 {
            return Err(invalid("furstenberg.grid", format!("need at least 64 bins, got {}", fu.grid)));
        }
        positive_real("furstenberg.tol", fu.tol)?;
        positive("furstenberg.max_iter", fu.max_iter)?;

        let sp = &self.spectrum;
        if sp.l < 20 {
            return Err(invalid("spectrum.L", format!("need at least 20, got {}", sp.l)));
        }
        positive("spectrum.realizations", sp.realizations)?;

        let dy = &self.dynlocal;
        positive("dynlocal.L", dy.l)?;
        if dy.m_max > dy.l {
            return Err(invalid("dynlocal.m_max", format!("must not exceed L = {}", dy.l)));
        }
        positive("dynlocal.realizations", dy.realizations)?;

        let sa = &self.spectral_avg;
        if sa.size == 0 || sa.size.is_multiple_of(2) {
            return Err(invalid("spectral_avg.size", format!("must be odd (2L + 1), got {}", sa.size)));
        }
        if sa.size < 3 {
            return Err(invalid("spectral_avg.size", "need at least 3 sites for the δ₀, δ₁ pair"));
        }
        if !(sa.z[0].is_finite() && sa.z[1].is_finite()) || sa.z[1] == 0.0 {
            return Err(invalid("spectral_avg.z", "need finite re, im with im != 0"));
        }
        if sa.z == [0.0, -1.0] {
            return Err(invalid("spectral_avg.z", "z = -i is the reference point"));
        }
        positive_real("spectral_avg.lambda_max", sa.lambda_max)?;
        positive_real("spectral_avg.tol", sa.tol)?;
        positive("spectral_avg.max_intervals", sa.max_intervals)?;

        let ks = &self.ks;
        positive("ks.L", ks.l)?;
        positive("ks.m_max", ks.m_max)?;
        if ks.m_max > ks.l {
            return Err(invalid("ks.m_max", format!("must not exceed L = {}", ks.l)));
        }
        for (field, n) in [("ks.grid_n", ks.grid_n), ("ks.norm_grid_n", ks.norm_grid_n)] {
            if n < 16 || !n.is_multiple_of(2) {
                return Err(invalid(field, format!("need an even count of at least 16, got {n}")));
            }
        }
        positive_real("ks.grid_x", ks.grid_x)?;
        positive_real("ks.norm_grid_x", ks.norm_grid_x)?;
        if ks.e_points < 2 {
            return Err(invalid("ks.e_points", format!("need at least 2, got {}", ks.e_points)));
        }
        positive("ks.realizations", ks.realizations)?;
        positive("ks.power_max_iter", ks.power_max_iter)?;
        positive_real("ks.power_tol", ks.power_tol)?;
        Ok(())
    }

    /// Canonical TOML of the fields that determine one suite's output.
    pub fn canonical(&self, command: &str) -> String {
        let mut table = toml::Table::new();
        table.insert("command".into(), command.into());
        table.insert("seed".into(), toml::Value::Integer(self.seed as i64));
        table.insert("distribution".into(), self.distribution.clone().into());
        let section = match command {
            "lyapunov" => toml::Value::try_from(&self.lyapunov),
            "furstenberg" => toml::Value::try_from(&self.furstenberg),
            "spectrum" => toml::Value::try_from(&self.spectrum),
            "dynlocal" => toml::Value::try_from(&self.dynlocal),
            "spectral-avg" => toml::Value::try_from(&self.spectral_avg),
            "ks" => toml::Value::try_from(&self.ks),
            _ => toml::Value::try_from(&self.check),
        }
        .expect("section serializes");
        table.insert(command.replace('-', "_"), section);
        toml::to_string(&table).expect("table serializes")
    }

    /// SHA-256 of [`Self::canonical`], hex encoded.
    pub fn hash(&self, command: &str) -> String {
        let digest = Sha256::digest(self.canonical(command).as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
