//! Declarative run configuration: TOML model + algorithm settings, potential
//! construction, oracle dispatch, and config digests.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{LogzError, Result};
use crate::oracle;
use crate::potential::{builtin, PotentialSpec};
use crate::schedule::{Preset, RegimeChoice, ScheduleConfig};

/// Model selection block of the config file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelConfig {
    /// `U(x) = x'Qx/2` with `Q = diag(2, 1, ..., 1)` by default, or an
    /// explicit diagonal.
    Gaussian {
        #[serde(skip_serializing_if = "Option::is_none")]
        dim: Option<usize>,
        #[serde(skip_serializing_if = "Option::is_none")]
        diag: Option<Vec<f64>>,
    },
    /// Linear-regression evidence benchmark; `model` is 1 or 2.
    RadiataPine {
        model: u8,
        #[serde(skip_serializing_if = "Option::is_none")]
        data: Option<PathBuf>,
    },
    /// Logistic-regression evidence benchmark; `model` is 1 or 2.
    PimaLogistic {
        model: u8,
        #[serde(skip_serializing_if = "Option::is_none")]
        data: Option<PathBuf>,
    },
    /// 1-d `U(x) = x^2/2 + log cosh x`.
    LogCosh,
}

/// Optional output destination; the `--out` / `--format` flags win.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
}

fn default_stride() -> usize {
    1
}

fn default_regime() -> String {
    "auto".into()
}

fn default_preset() -> String {
    "theoretical".into()
}

/// Full run configuration; every field has a flag override in the CLI.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub eps: f64,
    pub mu: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_tilde: Option<f64>,
    #[serde(default = "default_regime")]
    pub regime: String,
    #[serde(default)]
    pub a3: bool,
    #[serde(default = "default_preset")]
    pub preset: String,
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| LogzError::Config(format!("bad config: {e}")))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn regime_choice(&self) -> Result<RegimeChoice> {
        match self.regime.as_str() {
            "auto" => Ok(RegimeChoice::Auto),
            "strong" => Ok(RegimeChoice::Strong),
            "convex" => Ok(RegimeChoice::Convex),
            other => Err(LogzError::Config(format!(
                "regime must be auto|strong|convex, got '{other}'"
            ))),
        }
    }

    pub fn schedule_config(&self) -> Result<ScheduleConfig> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(LogzError::Config(format!(
                "eps must lie in (0,1), got {}",
                self.eps
            )));
        }
        if !(self.mu > 0.0 && self.mu < 1.0) {
            return Err(LogzError::Config(format!(
                "mu must lie in (0,1), got {}",
                self.mu
            )));
        }
        if let Some(mt) = self.mu_tilde {
            if !(mt > 0.0 && mt < 1.0) {
                return Err(LogzError::Config(format!(
                    "mu_tilde must lie in (0,1), got {mt}"
                )));
            }
        }
        Ok(ScheduleConfig {
            eps: self.eps,
            mu: self.mu,
            regime: self.regime_choice()?,
            a3: self.a3,
            preset: Preset::parse(&self.preset)?,
            stride: self.stride,
        })
    }

    pub fn build_potential(&self) -> Result<PotentialSpec> {
        match &self.model {
            ModelConfig::Gaussian { dim, diag } => match (dim, diag) {
                (_, Some(diag)) => builtin::gaussian_diag(diag),
                (Some(d), None) => builtin::gaussian_benchmark(*d),
                (None, None) => Err(LogzError::Config(
                    "gaussian model needs 'dim' or 'diag'".into(),
                )),
            },
            ModelConfig::RadiataPine { model, data } => {
                builtin::radiata_model(*model, data.as_deref())
            }
            ModelConfig::PimaLogistic { model, data } => {
                builtin::pima_model(*model, data.as_deref())
            }
            ModelConfig::LogCosh => builtin::log_cosh_1d(),
        }
    }

    /// Ground-truth reference for this model, when one exists. For posterior
    /// models the value is the log evidence; for direct potentials it is
    /// log Z.
    pub fn oracle_value(&self) -> Result<f64> {
        match &self.model {
            ModelConfig::Gaussian { dim, diag } => {
                let diag = match (dim, diag) {
                    (_, Some(v)) => v.clone(),
                    (Some(d), None) => {
                        let mut v = vec![1.0; *d];
                        v[0] = 2.0;
                        v
                    }
                    (None, None) => {
                        return Err(LogzError::Config(
                            "gaussian model needs 'dim' or 'diag'".into(),
                        ))
                    }
                };
                let q = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag));
                oracle::gaussian_log_evidence(&q)
            }
            ModelConfig::RadiataPine { model, data } => {
                let raw = builtin::radiata_dataset(data.as_deref())?;
                let design = builtin::radiata_design(&raw, *model)?;
                let (mu0, p0, lam) = builtin::radiata_prior();
                oracle::conjugate_linear_log_evidence(&design, &mu0, &p0, lam)
            }
            ModelConfig::PimaLogistic { .. } => Err(LogzError::OracleUnavailable(
                "logistic evidence has no closed form and the dimension exceeds quadrature range"
                    .into(),
            )),
            ModelConfig::LogCosh => {
                let p = builtin::log_cosh_1d()?;
                oracle::quadrature_log_z(&p, 14.0, 4001)
            }
        }
    }

    /// SHA-256 of the resolved configuration, for traceable outputs.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        let out = hasher.finalize();
        out.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GAUSS10: &str = r#"
eps = 0.1
mu = 0.1
preset = "gaussian-fig1"

[model]
kind = "gaussian"
dim = 10
"#;

    #[test]
    fn parses_and_resolves() {
        let cfg = RunConfig::from_toml_str(GAUSS10).unwrap();
        assert_eq!(cfg.stride, 1);
        assert_eq!(cfg.seed, 0);
        let sc = cfg.schedule_config().unwrap();
        assert_eq!(sc.preset, Preset::GaussianFig1);
        let p = cfg.build_potential().unwrap();
        assert_eq!(p.dim, 10);
    }

    #[test]
    fn rejects_out_of_range_eps() {
        let cfg = RunConfig::from_toml_str(&GAUSS10.replace("eps = 0.1", "eps = 1.5")).unwrap();
        let err = cfg.schedule_config().unwrap_err();
        assert!(err.to_string().contains("eps"));
    }

    #[test]
    fn rejects_unknown_fields_and_presets() {
        assert!(RunConfig::from_toml_str(&format!("{GAUSS10}\nbogus = 1\n")).is_err());
        let cfg = RunConfig::from_toml_str(
            &GAUSS10.replace("gaussian-fig1", "not-a-preset"),
        )
        .unwrap();
        assert!(matches!(
            cfg.schedule_config(),
            Err(LogzError::Config(_))
        ));
    }

    #[test]
    fn digest_is_stable_and_sensitive() {
        let a = RunConfig::from_toml_str(GAUSS10).unwrap();
        let b = RunConfig::from_toml_str(GAUSS10).unwrap();
        assert_eq!(a.digest(), b.digest());
        let c = RunConfig::from_toml_str(&GAUSS10.replace("mu = 0.1", "mu = 0.2")).unwrap();
        assert_ne!(a.digest(), c.digest());
        assert_eq!(a.digest().len(), 64);
    }

    #[test]
    fn oracle_dispatch() {
        let g = RunConfig::from_toml_str(GAUSS10).unwrap();
        let v = g.oracle_value().unwrap();
        assert!((v - 8.842812).abs() < 1e-5);

        let r = RunConfig::from_toml_str(
            r#"
eps = 0.1
mu = 0.1
[model]
kind = "radiata-pine"
model = 1
"#,
        )
        .unwrap();
        assert!(r.oracle_value().unwrap().is_finite());

        let pima = RunConfig::from_toml_str(
            r#"
eps = 0.1
mu = 0.1
[model]
kind = "pima-logistic"
model = 1
"#,
        )
        .unwrap();
        assert!(matches!(
            pima.oracle_value(),
            Err(LogzError::OracleUnavailable(_))
        ));

        let lc = RunConfig::from_toml_str(
            r#"
eps = 0.25
mu = 0.25
[model]
kind = "log-cosh"
"#,
        )
        .unwrap();
        assert!(lc.oracle_value().unwrap().is_finite());
    }
}
