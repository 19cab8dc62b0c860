//! Experiment configuration: a flat key=value text format whose keys mirror
//! the config fields one to one. CLI flags override file values, and the
//! resolved config is written back out as the run manifest, so a manifest
//! can be re-run verbatim.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use scenario_ucb::kernel::{Grid, KernelFamily, LengthscaleMap};
use scenario_ucb::scenario::{sample_count_redraw, AlphaSpec, DeltaDist, RedrawSchedule};

/// A configuration problem, reported with the offending field.
#[derive(Debug)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config field `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(field: &str, message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError {
        field: field.to_string(),
        message: message.into(),
    })
}

/// How many scenarios to draw: an explicit count or the robustness sizing
/// rule from the re-draw sample-complexity formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioCount {
    Fixed(usize),
    Auto,
}

/// Full experiment configuration. Defaults reproduce the reference
/// numerical study: grid 0:0.01:1, lengthscale 0.05 + 0.01 delta,
/// delta ~ U[0,1], N = 20.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub grid_min: f64,
    pub grid_max: f64,
    pub grid_step: f64,
    /// Explicit grid points; overrides min/max/step when present.
    pub grid_points: Option<Vec<f64>>,
    pub kernel_family: KernelFamily,
    pub lengthscale_base: f64,
    pub lengthscale_slope: f64,
    pub delta_dist: DeltaDist,
    pub n_scenarios: ScenarioCount,
    pub t_max: usize,
    pub noise_var: f64,
    pub epsilon: f64,
    pub eta: f64,
    pub zeta: f64,
    pub nu: f64,
    /// Explicit alpha table; overrides the exponent when present.
    pub alpha_table: Option<Vec<f64>>,
    /// Sweep series; used by the sweep command when no --nu list is given.
    pub nu_list: Option<Vec<f64>>,
    pub seed: u64,
    pub repetitions: usize,
    /// Execution context only: not part of the manifest.
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            grid_min: 0.0,
            grid_max: 1.0,
            grid_step: 0.01,
            grid_points: None,
            kernel_family: KernelFamily::SquaredExponential,
            lengthscale_base: 0.05,
            lengthscale_slope: 0.01,
            delta_dist: DeltaDist::Uniform { lo: 0.0, hi: 1.0 },
            n_scenarios: ScenarioCount::Fixed(20),
            t_max: 1000,
            noise_var: 0.01,
            epsilon: 0.1,
            eta: 0.1,
            zeta: 0.05,
            nu: 0.1,
            alpha_table: None,
            nu_list: None,
            seed: 42,
            repetitions: 20,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    /// Parse a key=value file over the defaults. Unknown keys are errors;
    /// `#` starts a comment.
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError {
                field: "--config".to_string(),
                message: format!("cannot read {}: {e}", path.display()),
            })?;
        Self::from_str_contents(&text)
    }

    pub fn from_str_contents(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ExperimentConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return err(
                    &format!("line {}", lineno + 1),
                    format!("expected key = value, got `{line}`"),
                );
            };
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "grid_min" => self.grid_min = parse_f64(key, value)?,
            "grid_max" => self.grid_max = parse_f64(key, value)?,
            "grid_step" => self.grid_step = parse_f64(key, value)?,
            "grid_points" => self.grid_points = Some(parse_f64_list(key, value)?),
            "kernel_family" => {
                self.kernel_family = match value {
                    "squared_exponential" => KernelFamily::SquaredExponential,
                    other => return err(key, format!("unknown kernel family `{other}`")),
                }
            }
            "lengthscale_base" => self.lengthscale_base = parse_f64(key, value)?,
            "lengthscale_slope" => self.lengthscale_slope = parse_f64(key, value)?,
            "delta_dist" => self.delta_dist = parse_dist(key, value)?,
            "n_scenarios" => {
                self.n_scenarios = if value == "auto" {
                    ScenarioCount::Auto
                } else {
                    ScenarioCount::Fixed(parse_usize(key, value)?)
                }
            }
            "t_max" => self.t_max = parse_usize(key, value)?,
            "noise_var" => self.noise_var = parse_f64(key, value)?,
            "epsilon" => self.epsilon = parse_f64(key, value)?,
            "eta" => self.eta = parse_f64(key, value)?,
            "zeta" => self.zeta = parse_f64(key, value)?,
            "nu" => self.nu = parse_f64(key, value)?,
            "alpha_table" => self.alpha_table = Some(parse_f64_list(key, value)?),
            "nu_list" => self.nu_list = Some(parse_f64_list(key, value)?),
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|e| ConfigError {
                        field: key.to_string(),
                        message: format!("invalid u64 `{value}`: {e}"),
                    })?
            }
            "repetitions" => self.repetitions = parse_usize(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            other => return err(other, "unknown key"),
        }
        Ok(())
    }

    /// Check every field against the preconditions of the operations it
    /// feeds, before any run starts.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.grid().map_err(|e| ConfigError {
            field: "grid".to_string(),
            message: e.to_string(),
        })?;
        if !(self.lengthscale_base > 0.0) {
            return err("lengthscale_base", "must be positive");
        }
        self.delta_dist.validate().map_err(|e| ConfigError {
            field: "delta_dist".to_string(),
            message: e.to_string(),
        })?;
        if let ScenarioCount::Fixed(0) = self.n_scenarios {
            return err("n_scenarios", "must be at least 1");
        }
        if self.t_max == 0 {
            return err("t_max", "must be at least 1");
        }
        if !(self.noise_var > 0.0) {
            return err("noise_var", "must be positive");
        }
        for (name, v) in [
            ("epsilon", self.epsilon),
            ("eta", self.eta),
            ("zeta", self.zeta),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return err(name, "must lie in (0, 1)");
            }
        }
        self.schedule().map_err(|e| ConfigError {
            field: if self.alpha_table.is_some() {
                "alpha_table".to_string()
            } else {
                "nu".to_string()
            },
            message: e.to_string(),
        })?;
        if let Some(list) = &self.nu_list {
            for &nu in list {
                if !(nu > 0.0 && nu <= 1.0) {
                    return err("nu_list", format!("nu = {nu} outside (0, 1]"));
                }
            }
        }
        if self.repetitions == 0 {
            return err("repetitions", "must be at least 1");
        }
        Ok(())
    }

    pub fn grid(&self) -> scenario_ucb::Result<Grid> {
        match &self.grid_points {
            Some(points) => Grid::new(points.clone()),
            None => Grid::from_range(self.grid_min, self.grid_max, self.grid_step),
        }
    }

    pub fn lengthscale_map(&self) -> LengthscaleMap {
        LengthscaleMap {
            base: self.lengthscale_base,
            slope: self.lengthscale_slope,
        }
    }

    pub fn alpha_spec(&self) -> AlphaSpec {
        match &self.alpha_table {
            Some(table) => AlphaSpec::Table(table.clone()),
            None => AlphaSpec::Exponent(self.nu),
        }
    }

    pub fn schedule(&self) -> scenario_ucb::Result<RedrawSchedule> {
        RedrawSchedule::new(self.alpha_spec(), self.t_max)
    }

    /// The scenario count, resolving `auto` through the re-draw
    /// sample-complexity rule at this config's horizon.
    pub fn resolved_n(&self) -> scenario_ucb::Result<usize> {
        match self.n_scenarios {
            ScenarioCount::Fixed(n) => Ok(n),
            ScenarioCount::Auto => {
                let alpha_t = self.schedule()?.alpha(self.t_max);
                Ok(sample_count_redraw(self.eta, self.zeta, alpha_t)? as usize)
            }
        }
    }

    /// Serialize as the manifest: every field except the output directory,
    /// in fixed order.
    pub fn manifest(&self, command: &str, version: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# scenario-ucb {version} manifest ({command})");
        let mut kv = BTreeMap::new();
        if let Some(points) = &self.grid_points {
            kv.insert("grid_points", join(points));
        } else {
            kv.insert("grid_min", format!("{}", self.grid_min));
            kv.insert("grid_max", format!("{}", self.grid_max));
            kv.insert("grid_step", format!("{}", self.grid_step));
        }
        kv.insert("kernel_family", "squared_exponential".to_string());
        kv.insert("lengthscale_base", format!("{}", self.lengthscale_base));
        kv.insert("lengthscale_slope", format!("{}", self.lengthscale_slope));
        kv.insert(
            "delta_dist",
            match self.delta_dist {
                DeltaDist::Uniform { lo, hi } => format!("uniform:{lo},{hi}"),
                DeltaDist::Constant(v) => format!("constant:{v}"),
            },
        );
        kv.insert(
            "n_scenarios",
            match self.n_scenarios {
                ScenarioCount::Fixed(n) => format!("{n}"),
                ScenarioCount::Auto => "auto".to_string(),
            },
        );
        kv.insert("t_max", format!("{}", self.t_max));
        kv.insert("noise_var", format!("{}", self.noise_var));
        kv.insert("epsilon", format!("{}", self.epsilon));
        kv.insert("eta", format!("{}", self.eta));
        kv.insert("zeta", format!("{}", self.zeta));
        if let Some(table) = &self.alpha_table {
            kv.insert("alpha_table", join(table));
        } else {
            kv.insert("nu", format!("{}", self.nu));
        }
        if let Some(list) = &self.nu_list {
            kv.insert("nu_list", join(list));
        }
        kv.insert("seed", format!("{}", self.seed));
        kv.insert("repetitions", format!("{}", self.repetitions));
        for (k, v) in kv {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

fn parse_f64(field: &str, value: &str) -> Result<f64, ConfigError> {
    value.parse().map_err(|e| ConfigError {
        field: field.to_string(),
        message: format!("invalid number `{value}`: {e}"),
    })
}

fn parse_usize(field: &str, value: &str) -> Result<usize, ConfigError> {
    value.parse().map_err(|e| ConfigError {
        field: field.to_string(),
        message: format!("invalid integer `{value}`: {e}"),
    })
}

fn parse_f64_list(field: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    let list = value
        .split(',')
        .map(|v| parse_f64(field, v.trim()))
        .collect::<Result<Vec<_>, _>>()?;
    if list.is_empty() {
        return err(field, "empty list");
    }
    Ok(list)
}

fn parse_dist(field: &str, value: &str) -> Result<DeltaDist, ConfigError> {
    if let Some(rest) = value.strip_prefix("uniform:") {
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.len() != 2 {
            return err(field, "expected uniform:LO,HI");
        }
        return Ok(DeltaDist::Uniform {
            lo: parse_f64(field, parts[0].trim())?,
            hi: parse_f64(field, parts[1].trim())?,
        });
    }
    if let Some(rest) = value.strip_prefix("constant:") {
        return Ok(DeltaDist::Constant(parse_f64(field, rest.trim())?));
    }
    err(
        field,
        format!("unsupported distribution spec `{value}` (use uniform:LO,HI or constant:V)"),
    )
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v}"))
        .collect::<Vec<_>>()
        .join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_reproduce_the_reference_study() {
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.grid().unwrap().len(), 101);
        assert_eq!(cfg.resolved_n().unwrap(), 20);
        assert_eq!(cfg.lengthscale_map().lengthscale(0.0), 0.05);
        assert!((cfg.lengthscale_map().lengthscale(1.0) - 0.06).abs() < 1e-12);
        assert!(matches!(
            cfg.delta_dist,
            DeltaDist::Uniform { lo, hi } if lo == 0.0 && hi == 1.0
        ));
        cfg.validate().unwrap();
    }

    #[test]
    fn manifest_round_trips() {
        let mut cfg = ExperimentConfig::default();
        cfg.seed = 7;
        cfg.nu = 0.4;
        cfg.nu_list = Some(vec![0.1, 0.4, 1.0]);
        let text = cfg.manifest("run", "0.1.0");
        let parsed = ExperimentConfig::from_str_contents(&text).unwrap();
        // out_dir is execution context and stays at its default
        assert_eq!(parsed, cfg);
        assert_eq!(parsed.manifest("run", "0.1.0"), text);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_field_errors() {
        assert!(ExperimentConfig::from_str_contents("bogus = 1")
            .unwrap_err()
            .to_string()
            .contains("bogus"));
        assert!(ExperimentConfig::from_str_contents("epsilon = 2.0")
            .unwrap_err()
            .to_string()
            .contains("epsilon"));
        assert!(ExperimentConfig::from_str_contents("nu = 1.5")
            .unwrap_err()
            .to_string()
            .contains("nu"));
        assert!(ExperimentConfig::from_str_contents("delta_dist = beta:1,1")
            .unwrap_err()
            .to_string()
            .contains("delta_dist"));
    }

    #[test]
    fn auto_scenario_count_uses_redraw_rule() {
        let mut cfg = ExperimentConfig::default();
        cfg.n_scenarios = ScenarioCount::Auto;
        cfg.t_max = 1;
        // alpha(1) = 1: ceil(1/0.1 * ln 20) = 30
        assert_eq!(cfg.resolved_n().unwrap(), 30);
    }
}
