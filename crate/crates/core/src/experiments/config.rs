use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::tolerances::default_tolerance;
use super::{format_number as num, ExperimentError};
use crate::kernel::JumpKernel;
use crate::particles::Sign;

/// Environment variable that, when set, replaces the configured output
/// directory.
pub const OUT_DIR_ENV: &str = "RWSBI_OUT_DIR";

/// Suite configuration.
///
/// Read from a flat `key = value` file (`#` starts a comment); flag
/// overrides are applied afterwards with [`ExperimentConfig::set`], so they
/// win. Keys: `suite`, `kernel` (`ssrw` or a kernel file), `gamma`, `alpha`,
/// `epsilon`, `sign` (`plus`/`minus`), `t_max`, `n_max`, `replicas`, `seed`,
/// `out_dir` and `tol.<name>` for any entry of the tolerance table.
/// Unset `t_max`, `n_max` and `replicas` take each suite's own defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub suite: String,
    pub kernel: String,
    pub gamma: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub sign: Sign,
    pub t_max: Option<f64>,
    pub n_max: Option<usize>,
    pub replicas: Option<usize>,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub tolerances: BTreeMap<String, f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            suite: "smoke".into(),
            kernel: "ssrw".into(),
            gamma: 1.0,
            alpha: 1.0,
            epsilon: 0.5,
            sign: Sign::Plus,
            t_max: None,
            n_max: None,
            replicas: None,
            seed: 1,
            out_dir: PathBuf::from("rwsbi-out"),
            tolerances: BTreeMap::new(),
        }
    }
}

fn bad(key: &str, value: &str, what: &str) -> ExperimentError {
    ExperimentError::Config(format!("{key} = {value}: {what}"))
}

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ExperimentError> {
    value.parse().map_err(|_| bad(key, value, "not a number"))
}

impl ExperimentConfig {
    pub fn for_suite(suite: &str) -> Self {
        Self {
            suite: suite.into(),
            ..Self::default()
        }
    }

    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                ExperimentError::Config(format!("line {}: expected `key = value`", i + 1))
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ExperimentError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ExperimentError> {
        match key {
            "suite" => self.suite = value.into(),
            "kernel" => self.kernel = value.into(),
            "gamma" => self.gamma = number(key, value)?,
            "alpha" => self.alpha = number(key, value)?,
            "epsilon" => self.epsilon = number(key, value)?,
            "sign" => {
                self.sign = match value {
                    "plus" | "+" => Sign::Plus,
                    "minus" | "-" => Sign::Minus,
                    _ => return Err(bad(key, value, "expected plus or minus")),
                }
            }
            "t_max" => self.t_max = Some(number(key, value)?),
            "n_max" => self.n_max = Some(number(key, value)?),
            "replicas" => self.replicas = Some(number(key, value)?),
            "seed" => self.seed = number(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            _ => match key.strip_prefix("tol.") {
                Some(name) if default_tolerance(name).is_some() => {
                    self.tolerances.insert(name.into(), number(key, value)?);
                }
                Some(_) => return Err(bad(key, value, "no such tolerance")),
                None => return Err(ExperimentError::Config(format!("unknown key `{key}`"))),
            },
        }
        Ok(())
    }

    /// Checks ranges and resolves the kernel.
    pub fn validate(&self) -> Result<JumpKernel, ExperimentError> {
        let kernel = JumpKernel::resolve(&self.kernel)
            .map_err(|e| ExperimentError::Config(format!("kernel: {e}")))?;
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ExperimentError::Config(format!(
                    "{name} must be positive and finite, got {v}"
                )))
            }
        };
        positive("gamma", self.gamma)?;
        positive("alpha", self.alpha)?;
        if let Some(t) = self.t_max {
            positive("t_max", t)?;
        }
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(ExperimentError::Config(format!(
                "epsilon must lie in [0, 1), got {}",
                self.epsilon
            )));
        }
        if self.n_max == Some(0) || self.replicas.is_some_and(|r| r < 2) {
            return Err(ExperimentError::Config(
                "n_max must be >= 1 and replicas >= 2".into(),
            ));
        }
        Ok(kernel)
    }

    /// `RWSBI_OUT_DIR` if set, the configured directory otherwise.
    pub fn output_dir(&self) -> PathBuf {
        match std::env::var_os(OUT_DIR_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.out_dir.clone(),
        }
    }

    /// Effective tolerance: the override if present, else the default.
    /// Panics if `name` is not in the tolerance table.
    pub fn tolerance(&self, name: &str) -> f64 {
        self.tolerances
            .get(name)
            .copied()
            .or_else(|| default_tolerance(name))
            .unwrap_or_else(|| panic!("no tolerance named {name}"))
    }

    /// Every key with its value, in file order; unset options print as `default`.
    pub fn entries(&self) -> Vec<(String, String)> {
        let opt = |v: Option<String>| v.unwrap_or_else(|| "default".into());
        let mut out = vec![
            ("suite".into(), self.suite.clone()),
            ("kernel".into(), self.kernel.clone()),
            ("gamma".into(), num(self.gamma)),
            ("alpha".into(), num(self.alpha)),
            ("epsilon".into(), num(self.epsilon)),
            (
                "sign".into(),
                match self.sign {
                    Sign::Plus => "plus".into(),
                    Sign::Minus => "minus".into(),
                },
            ),
            ("t_max".into(), opt(self.t_max.map(num))),
            ("n_max".into(), opt(self.n_max.map(|v| v.to_string()))),
            ("replicas".into(), opt(self.replicas.map(|v| v.to_string()))),
            ("seed".into(), self.seed.to_string()),
        ];
        for (k, v) in &self.tolerances {
            out.push((format!("tol.{k}"), num(*v)));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_flags() {
        let mut cfg = ExperimentConfig::parse(
            "# comment\nsuite = blocking\ngamma = 2.5  # trailing\nreplicas = 40\ntol.blocking.level = 0.05\n",
        )
        .unwrap();
        assert_eq!(cfg.suite, "blocking");
        assert_eq!(cfg.gamma, 2.5);
        assert_eq!(cfg.replicas, Some(40));
        assert_eq!(cfg.tolerance("blocking.level"), 0.05);
        assert_eq!(cfg.tolerance("heat.duhamel"), 1e-5);
        cfg.set("gamma", "3").unwrap();
        assert_eq!(cfg.gamma, 3.0);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn bad_input_is_a_config_error() {
        for text in [
            "gamma",
            "colour = red",
            "gamma = fast",
            "sign = up",
            "tol.nothing = 1",
        ] {
            assert!(
                ExperimentConfig::parse(text).unwrap_err().is_config(),
                "{text}"
            );
        }
        let cfg = ExperimentConfig {
            kernel: "/nonexistent/kernel.txt".into(),
            ..Default::default()
        };
        assert!(cfg.validate().unwrap_err().is_config());
        let mut cfg = ExperimentConfig {
            epsilon: 1.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        cfg.epsilon = 0.5;
        cfg.replicas = Some(1);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn entries_list_every_key() {
        let keys: Vec<String> = ExperimentConfig::default()
            .entries()
            .into_iter()
            .map(|(k, _)| k)
            .collect();
        assert_eq!(
            keys,
            [
                "suite", "kernel", "gamma", "alpha", "epsilon", "sign", "t_max", "n_max",
                "replicas", "seed"
            ]
        );
    }
}
