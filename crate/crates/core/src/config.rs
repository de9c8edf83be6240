//! Flat `key = value` configuration files.
//!
//! Keys are the field names of [`SimulationConfig`] and [`ExposureParams`],
//! `phase = start_s,end_s,rate` lines (repeated, in order) for the arrival
//! schedule, `layout = <path>` resolved relative to the file, and the
//! comma-separated sweep lists. `#` starts a comment line.
//!
//! [`ExposureParams`]: crate::exposure::ExposureParams

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::arrivals::ArrivalSchedule;
use crate::engine::SimulationConfig;
use crate::grid::{default_layout, parse_layout, LayoutError, StoreLayout};
use crate::sweep::SweepSpec;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: invalid value `{value}` for `{key}`: {reason}")]
    BadValue {
        line: usize,
        key: String,
        value: String,
        reason: String,
    },
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("layout {path}: {source}")]
    Layout { path: PathBuf, source: LayoutError },
}

/// Sweep lists given in a file; absent lists fall back to the single base
/// value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepLists {
    pub distances_feet: Option<Vec<f64>>,
    pub thresholds_seconds: Option<Vec<u32>>,
    pub seed_fractions: Option<Vec<f64>>,
    pub spread_flags: Option<Vec<bool>>,
    pub seeds: Option<Vec<u64>>,
}

impl SweepLists {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }

    pub fn to_spec(&self, base: &SimulationConfig) -> SweepSpec {
        let mut spec = SweepSpec::single(base.clone());
        if let Some(v) = &self.distances_feet {
            spec.distances_feet = v.clone();
        }
        if let Some(v) = &self.thresholds_seconds {
            spec.thresholds_seconds = v.clone();
        }
        if let Some(v) = &self.seed_fractions {
            spec.seed_fractions = v.clone();
        }
        if let Some(v) = &self.spread_flags {
            spec.spread_flags = v.clone();
        }
        if let Some(v) = &self.seeds {
            spec.seeds = v.clone();
        }
        spec
    }
}

#[derive(Debug, Clone)]
pub struct ConfigFile {
    pub config: SimulationConfig,
    /// `default` or the resolved layout path.
    pub layout_source: String,
    pub sweep: SweepLists,
}

impl Default for ConfigFile {
    fn default() -> Self {
        Self {
            config: SimulationConfig::default(),
            layout_source: "default".into(),
            sweep: SweepLists::default(),
        }
    }
}

fn value<T: FromStr>(line: usize, key: &str, raw: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    raw.parse().map_err(|e: T::Err| ConfigError::BadValue {
        line,
        key: key.to_string(),
        value: raw.to_string(),
        reason: e.to_string(),
    })
}

fn list<T: FromStr>(line: usize, key: &str, raw: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| value(line, key, s))
        .collect()
}

/// Reads a layout file, or the built-in layout for `default`.
pub fn load_layout(source: &str) -> Result<StoreLayout, ConfigError> {
    if source == "default" {
        return Ok(default_layout());
    }
    let path = PathBuf::from(source);
    let text = std::fs::read_to_string(&path).map_err(|source| ConfigError::Io {
        path: path.clone(),
        source,
    })?;
    parse_layout(&text).map_err(|source| ConfigError::Layout { path, source })
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut file = Self::default();
        file.apply_text(&text, path.parent().unwrap_or(Path::new(".")))?;
        Ok(file)
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut file = Self::default();
        file.apply_text(text, base_dir)?;
        Ok(file)
    }

    /// Applies every line of `text`. The first `phase` line replaces the
    /// current schedule; later ones append.
    pub fn apply_text(&mut self, text: &str, base_dir: &Path) -> Result<(), ConfigError> {
        let mut phases_started = false;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, val) = trimmed.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                text: trimmed.to_string(),
            })?;
            let (key, val) = (key.trim(), val.trim());
            if key == "phase" && !phases_started {
                self.config.schedule = ArrivalSchedule::empty();
                phases_started = true;
            }
            self.set(line, key, val, base_dir)?;
        }
        Ok(())
    }

    /// Sets one key. `line` is only used in error messages.
    pub fn set(&mut self, line: usize, key: &str, val: &str, base_dir: &Path) -> Result<(), ConfigError> {
        let c = &mut self.config;
        match key {
            "layout" => {
                let source = if val == "default" {
                    val.to_string()
                } else {
                    base_dir.join(val).to_string_lossy().into_owned()
                };
                c.layout = Arc::new(load_layout(&source)?);
                self.layout_source = source;
            }
            "seed" => c.seed = value(line, key, val)?,
            "duration_seconds" => c.duration_seconds = value(line, key, val)?,
            "checkout_service_seconds" => c.checkout_service_seconds = value(line, key, val)?,
            "product_dwell_seconds" => c.product_dwell_seconds = value(line, key, val)?,
            "pathfind_mode" => c.pathfind_mode = value(line, key, val)?,
            "target_metric" => c.target_metric = value(line, key, val)?,
            "accrual" => c.accrual = value(line, key, val)?,
            "log_events" => c.log_events = value(line, key, val)?,
            "max_distance_feet" => c.exposure.max_distance_feet = value(line, key, val)?,
            "threshold_seconds" => c.exposure.threshold_seconds = value(line, key, val)?,
            "seed_fraction" => c.exposure.seed_fraction = value(line, key, val)?,
            "newly_infected_spread" => c.exposure.newly_infected_spread = value(line, key, val)?,
            "phase" => {
                let phase = ArrivalSchedule::parse_phase(val).map_err(|e| ConfigError::BadValue {
                    line,
                    key: key.to_string(),
                    value: val.to_string(),
                    reason: e.to_string(),
                })?;
                c.schedule.phases.push(phase);
            }
            "distances_feet" => self.sweep.distances_feet = Some(list(line, key, val)?),
            "thresholds_seconds" => self.sweep.thresholds_seconds = Some(list(line, key, val)?),
            "seed_fractions" => self.sweep.seed_fractions = Some(list(line, key, val)?),
            "spread_flags" => self.sweep.spread_flags = Some(list(line, key, val)?),
            "seeds" => self.sweep.seeds = Some(list(line, key, val)?),
            _ => {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                })
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exposure::Accrual;
    use crate::pathfind::PathfindMode;

    #[test]
    fn parses_fields_and_phases() {
        let text = "\
# comment
seed = 42
checkout_service_seconds = 60
pathfind_mode = paper_literal
accrual = per_infective
max_distance_feet = 8
threshold_seconds = 300
seed_fraction = 0.02
newly_infected_spread = true
phase = 0,100,1/2
phase = 100,200,0.25
";
        let f = ConfigFile::parse(text, Path::new(".")).unwrap();
        let c = &f.config;
        assert_eq!(c.seed, 42);
        assert_eq!(c.checkout_service_seconds, 60);
        assert_eq!(c.pathfind_mode, PathfindMode::PaperLiteral);
        assert_eq!(c.accrual, Accrual::PerInfective);
        assert_eq!(c.exposure.max_distance_feet, 8.0);
        assert_eq!(c.exposure.threshold_seconds, 300);
        assert!(c.exposure.newly_infected_spread);
        assert_eq!(c.schedule.phases.len(), 2);
        assert_eq!(c.schedule.phases[0].rate, 0.5);
        assert!(f.sweep.is_empty());
    }

    #[test]
    fn sweep_lists() {
        let text = "distances_feet = 6, 12\nseeds = 1,2,3\nspread_flags = false,true\n";
        let f = ConfigFile::parse(text, Path::new(".")).unwrap();
        let spec = f.sweep.to_spec(&f.config);
        assert_eq!(spec.distances_feet, vec![6.0, 12.0]);
        assert_eq!(spec.seeds, vec![1, 2, 3]);
        assert_eq!(spec.run_count(), 12);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = ConfigFile::parse("seed = 1\nbogus = 2\n", Path::new(".")).unwrap_err();
        assert!(matches!(err, ConfigError::UnknownKey { line: 2, .. }));
        let err = ConfigFile::parse("seed = x\n", Path::new(".")).unwrap_err();
        assert!(matches!(err, ConfigError::BadValue { line: 1, .. }));
        let err = ConfigFile::parse("just words\n", Path::new(".")).unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { line: 1, .. }));
    }

    #[test]
    fn manifest_reparses_to_same_config() {
        let mut cfg = SimulationConfig { seed: 77, ..SimulationConfig::default() };
        cfg.exposure.threshold_seconds = 120;
        let text = crate::report::RunManifest::new("simulate", &cfg, "default").render();
        let back = ConfigFile::parse(&text, Path::new(".")).unwrap();
        assert_eq!(back.config, cfg);
    }
}
