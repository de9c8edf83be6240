//! Factorial parameter sweeps over exposure settings and seeds.
//!
//! Movement does not depend on infection state, so each seed is simulated
//! once and every parameter combination is evaluated over the same
//! trajectories. Rows are sorted by (combo, seed) before they are returned,
//! which keeps the output independent of the worker count.

use rayon::prelude::*;
use thiserror::Error;

use crate::engine::{run_batch, EngineError, RunResult, SimulationConfig};
use crate::exposure::ExposureParams;

pub const PRESET_THRESHOLDS: [u32; 4] = [120, 300, 600, 900];
pub const PRESET_DISTANCES: [f64; 4] = [6.0, 8.0, 10.0, 12.0];
pub const PRESET_SEED_COUNT: u64 = 10;
pub const PRESET_NAMES: [&str; 4] = ["table2_5", "table6_7", "table8_9", "table10_11"];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub distances_feet: Vec<f64>,
    pub thresholds_seconds: Vec<u32>,
    pub seed_fractions: Vec<f64>,
    pub spread_flags: Vec<bool>,
    pub seeds: Vec<u64>,
    pub base: SimulationConfig,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepError {
    #[error("sweep list `{0}` is empty")]
    EmptyList(&'static str),
    #[error("combo {index} ({params}) is invalid: {reason}")]
    InvalidCombo { index: usize, params: String, reason: String },
    #[error("base configuration: {0}")]
    Base(EngineError),
    #[error("run failed for seed {seed} (first combo {params}): {source}")]
    Run {
        seed: u64,
        params: String,
        #[source]
        source: EngineError,
    },
    #[error("cannot start worker pool: {0}")]
    Pool(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
}

fn describe(p: &ExposureParams) -> String {
    format!(
        "distance_ft={} threshold_s={} seed_fraction={} spread={}",
        p.max_distance_feet, p.threshold_seconds, p.seed_fraction, p.newly_infected_spread
    )
}

impl SweepSpec {
    /// A spec over `base` with every list holding the base value.
    pub fn single(base: SimulationConfig) -> Self {
        let e = base.exposure;
        Self {
            distances_feet: vec![e.max_distance_feet],
            thresholds_seconds: vec![e.threshold_seconds],
            seed_fractions: vec![e.seed_fraction],
            spread_flags: vec![e.newly_infected_spread],
            seeds: vec![base.seed],
            base,
        }
    }

    /// Combinations in output order: seed fraction, then distance, then
    /// threshold, then spread flag.
    pub fn combos(&self) -> Vec<ExposureParams> {
        let mut out = Vec::with_capacity(self.combo_count());
        for &seed_fraction in &self.seed_fractions {
            for &max_distance_feet in &self.distances_feet {
                for &threshold_seconds in &self.thresholds_seconds {
                    for &newly_infected_spread in &self.spread_flags {
                        out.push(ExposureParams {
                            max_distance_feet,
                            threshold_seconds,
                            seed_fraction,
                            newly_infected_spread,
                        });
                    }
                }
            }
        }
        out
    }

    pub fn combo_count(&self) -> usize {
        self.distances_feet.len() * self.thresholds_seconds.len() * self.seed_fractions.len() * self.spread_flags.len()
    }

    pub fn run_count(&self) -> usize {
        self.combo_count() * self.seeds.len()
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        let lists = [
            ("distances_feet", self.distances_feet.is_empty()),
            ("thresholds_seconds", self.thresholds_seconds.is_empty()),
            ("seed_fractions", self.seed_fractions.is_empty()),
            ("spread_flags", self.spread_flags.is_empty()),
            ("seeds", self.seeds.is_empty()),
        ];
        if let Some((name, _)) = lists.iter().find(|(_, empty)| *empty) {
            return Err(SweepError::EmptyList(name));
        }
        for (index, p) in self.combos().iter().enumerate() {
            if let Err(e) = p.validate() {
                return Err(SweepError::InvalidCombo {
                    index,
                    params: describe(p),
                    reason: e.to_string(),
                });
            }
        }
        self.base.validate().map_err(SweepError::Base)
    }
}

/// Summary of one (combo, seed) run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub combo: usize,
    pub params: ExposureParams,
    pub seed: u64,
    pub starting_infective: usize,
    pub newly_infected: usize,
    pub total_customers: usize,
    pub spawned: usize,
    pub still_in_store: usize,
}

impl SweepRow {
    pub fn from_result(combo: usize, r: &RunResult) -> Self {
        Self {
            combo,
            params: r.config.exposure,
            seed: r.config.seed,
            starting_infective: r.starting_infective,
            newly_infected: r.newly_infected,
            total_customers: r.total_customers,
            spawned: r.spawned,
            still_in_store: r.still_in_store,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Sample standard deviation; zero for a single value.
    pub stddev: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let stddev = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, min, max, stddev }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub combo: usize,
    pub params: ExposureParams,
    pub runs: usize,
    pub newly_infected: Stats,
    pub starting_infective: Stats,
    pub total_customers: Stats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub aggregates: Vec<Aggregate>,
}

/// Per-combo statistics over `rows` (which must be grouped by combo).
pub fn aggregate(rows: &[SweepRow]) -> Vec<Aggregate> {
    rows.chunk_by(|a, b| a.combo == b.combo)
        .map(|group| {
            let col = |f: fn(&SweepRow) -> usize| group.iter().map(|r| f(r) as f64).collect::<Vec<_>>();
            Aggregate {
                combo: group[0].combo,
                params: group[0].params,
                runs: group.len(),
                newly_infected: Stats::of(&col(|r| r.newly_infected)),
                starting_infective: Stats::of(&col(|r| r.starting_infective)),
                total_customers: Stats::of(&col(|r| r.total_customers)),
            }
        })
        .collect()
}

/// Runs every combo for every seed on `parallelism` worker threads.
pub fn run_sweep(spec: &SweepSpec, parallelism: usize) -> Result<SweepResult, SweepError> {
    spec.validate()?;
    let combos = spec.combos();
    let one_seed = |&seed: &u64| -> Result<Vec<SweepRow>, SweepError> {
        let config = SimulationConfig {
            seed,
            exposure: combos[0],
            ..spec.base.clone()
        };
        let results = run_batch(config, &combos).map_err(|source| SweepError::Run {
            seed,
            params: describe(&combos[0]),
            source,
        })?;
        Ok(results
            .iter()
            .enumerate()
            .map(|(i, r)| SweepRow::from_result(i, r))
            .collect())
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| SweepError::Pool(e.to_string()))?;
    let per_seed: Vec<Vec<SweepRow>> =
        pool.install(|| spec.seeds.par_iter().map(one_seed).collect::<Result<_, _>>())?;

    let mut rows: Vec<SweepRow> = per_seed.into_iter().flatten().collect();
    rows.sort_by_key(|r| (r.combo, r.seed));
    let aggregates = aggregate(&rows);
    Ok(SweepResult { rows, aggregates })
}

/// The four published experiment grids, each over seeds `1..=10`.
pub fn paper_presets(base: &SimulationConfig) -> Vec<(&'static str, SweepSpec)> {
    PRESET_NAMES
        .iter()
        .map(|&name| (name, preset(name, base).expect("built-in preset")))
        .collect()
}

pub fn preset(name: &str, base: &SimulationConfig) -> Result<SweepSpec, SweepError> {
    let (fraction, spread) = match name {
        "table2_5" => (0.01, false),
        "table6_7" => (0.02, false),
        "table8_9" => (0.05, false),
        "table10_11" => (0.01, true),
        other => return Err(SweepError::UnknownPreset(other.to_string())),
    };
    Ok(SweepSpec {
        distances_feet: PRESET_DISTANCES.to_vec(),
        thresholds_seconds: PRESET_THRESHOLDS.to_vec(),
        seed_fractions: vec![fraction],
        spread_flags: vec![spread],
        seeds: (1..=PRESET_SEED_COUNT).collect(),
        base: base.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arrivals::{ArrivalSchedule, Phase};

    /// A short, light run on the default layout.
    fn quick_base() -> SimulationConfig {
        SimulationConfig {
            schedule: ArrivalSchedule {
                phases: vec![Phase { start_s: 0, end_s: 300, rate: 0.5 }],
            },
            duration_seconds: 600,
            ..SimulationConfig::default()
        }
    }

    #[test]
    fn preset_shapes() {
        let base = quick_base();
        let t = preset("table2_5", &base).unwrap();
        assert_eq!((t.combo_count(), t.seeds.len(), t.run_count()), (16, 10, 160));
        assert_eq!(t.seed_fractions, vec![0.01]);
        assert_eq!(t.spread_flags, vec![false]);
        assert_eq!(preset("table8_9", &base).unwrap().seed_fractions, vec![0.05]);
        assert_eq!(preset("table10_11", &base).unwrap().spread_flags, vec![true]);
        assert!(matches!(preset("table12", &base), Err(SweepError::UnknownPreset(_))));
        assert_eq!(paper_presets(&base).len(), 4);
    }

    #[test]
    fn grid_of_sixteen_with_one_seed() {
        let mut spec = preset("table6_7", &quick_base()).unwrap();
        spec.seeds = vec![3];
        let res = run_sweep(&spec, 1).unwrap();
        assert_eq!(res.rows.len(), 16);
        assert_eq!(res.aggregates.len(), 16);
    }

    #[test]
    fn aggregate_mean_is_row_mean() {
        let mut spec = SweepSpec::single(quick_base());
        spec.seed_fractions = vec![0.3];
        spec.thresholds_seconds = vec![20];
        spec.seeds = (1..=5).collect();
        let res = run_sweep(&spec, 2).unwrap();
        assert_eq!(res.rows.len(), 5);
        let mean = res.rows.iter().map(|r| r.newly_infected as f64).sum::<f64>() / 5.0;
        assert_eq!(res.aggregates[0].newly_infected.mean, mean);
        assert_eq!(res.aggregates[0].runs, 5);
    }

    #[test]
    fn repeat_and_jobs_do_not_change_result() {
        let mut spec = SweepSpec::single(quick_base());
        spec.distances_feet = vec![6.0, 12.0];
        spec.seed_fractions = vec![0.1];
        spec.seeds = vec![4, 1, 9];
        let a = run_sweep(&spec, 1).unwrap();
        let b = run_sweep(&spec, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, run_sweep(&spec, 1).unwrap());
        let seeds: Vec<u64> = a.rows.iter().map(|r| r.seed).collect();
        assert_eq!(seeds, vec![1, 4, 9, 1, 4, 9]);
    }

    #[test]
    fn invalid_combo_is_named() {
        let mut spec = SweepSpec::single(quick_base());
        spec.thresholds_seconds = vec![60, 0];
        match spec.validate() {
            Err(SweepError::InvalidCombo { index: 1, params, .. }) => assert!(params.contains("threshold_s=0")),
            other => panic!("{other:?}"),
        }
        spec.seeds.clear();
        assert_eq!(spec.validate(), Err(SweepError::EmptyList("seeds")));
    }

    #[test]
    fn stats_of_values() {
        let s = Stats::of(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert_eq!((s.mean, s.min, s.max), (5.0, 2.0, 9.0));
        assert!((s.stddev - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
        assert_eq!(Stats::of(&[3.0]).stddev, 0.0);
    }
}
