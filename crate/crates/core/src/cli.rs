//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on configuration,
//! validation or output errors.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{load_layout, ConfigError, ConfigFile};
use crate::engine::{run, SimulationConfig};
use crate::grid::{generate_default_layout, validate_layout, vulnerable_neighborhood, DEFAULT_CELL_FEET, DEFAULT_LAYOUT_SEED};
use crate::report::{self, ResultRow, RunManifest};
use crate::sweep::{preset, run_sweep, PRESET_NAMES};

pub const OUT_DIR_ENV: &str = "RUSHSIM_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "rushsim-out";

#[derive(Debug, Parser)]
#[command(name = "rushsim", version, about = "Customer exposure simulation on a gridded store floor")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the simulation for one or more seeds.
    Simulate(RunArgs),
    /// Run a parameter sweep from a preset or a spec file.
    Sweep(SweepArgs),
    /// Print a layout in the text format.
    RenderLayout(RenderArgs),
    /// Print the vulnerable neighborhood for a distance.
    Neighborhood(NeighborhoodArgs),
    /// Check a layout and list every violation.
    Validate(LayoutArg),
    /// Generate a store layout from a seed.
    GenLayout(GenArgs),
}

/// Flags shared by `simulate` and `sweep`; each maps to a config key.
#[derive(Debug, Args, Default)]
struct Overrides {
    /// Config file (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Layout file, or `default`.
    #[arg(long)]
    layout: Option<String>,
    /// Output directory (defaults to $RUSHSIM_OUT_DIR, then ./rushsim-out).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// A count N (seeds 1..=N) or a comma-separated list.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    distance_ft: Option<String>,
    #[arg(long)]
    threshold_s: Option<String>,
    #[arg(long)]
    seed_fraction: Option<String>,
    /// Whether newly infected customers spread exposure.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    spread: Option<String>,
    #[arg(long)]
    pathfind_mode: Option<String>,
    #[arg(long)]
    checkout_service_s: Option<String>,
    #[arg(long)]
    product_dwell_s: Option<String>,
    #[arg(long)]
    duration_s: Option<String>,
    #[arg(long)]
    accrual: Option<String>,
    #[arg(long)]
    log_events: bool,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    overrides: Overrides,
    /// Also write an occupancy snapshot at the start of this tick.
    #[arg(long)]
    snapshot_at: Option<u32>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    overrides: Overrides,
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(PRESET_NAMES))]
    preset: Option<String>,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Debug, Args)]
struct LayoutArg {
    /// Layout file, or `default`.
    #[arg(long, default_value = "default")]
    layout: String,
}

#[derive(Debug, Args)]
struct RenderArgs {
    #[command(flatten)]
    layout: LayoutArg,
    /// Write a P6 pixmap here as well.
    #[arg(long)]
    ppm: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    scale: usize,
}

#[derive(Debug, Args)]
struct NeighborhoodArgs {
    #[arg(long)]
    distance_ft: f64,
    #[arg(long, default_value_t = DEFAULT_CELL_FEET)]
    cell_ft: f64,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, default_value_t = DEFAULT_LAYOUT_SEED)]
    seed: u64,
    /// Destination file; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
struct Failure(String);

impl<E: std::error::Error> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

/// Runs the command line `args` (including the program name) and returns
/// the process exit code.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => sweep(a),
        Command::RenderLayout(a) => render_layout(a),
        Command::Neighborhood(a) => neighborhood(a),
        Command::Validate(a) => validate(a),
        Command::GenLayout(a) => gen_layout(a),
    };
    match outcome {
        Ok(()) => 0,
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    }
}

fn parse_seeds(raw: &str) -> Result<Vec<u64>, Failure> {
    let bad = || Failure(format!("--seeds expects a count or a comma-separated list, got `{raw}`"));
    if raw.contains(',') {
        return raw.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect();
    }
    let n: u64 = raw.trim().parse().map_err(|_| bad())?;
    if n == 0 {
        return Err(bad());
    }
    Ok((1..=n).collect())
}

impl Overrides {
    /// Config file first, then flags on top.
    fn resolve(&self) -> Result<ConfigFile, ConfigError> {
        let mut file = match &self.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let cwd = Path::new(".");
        let seed = self.seed.map(|s| s.to_string());
        let pairs = [
            ("layout", self.layout.as_deref()),
            ("seed", seed.as_deref()),
            ("max_distance_feet", self.distance_ft.as_deref()),
            ("threshold_seconds", self.threshold_s.as_deref()),
            ("seed_fraction", self.seed_fraction.as_deref()),
            ("newly_infected_spread", self.spread.as_deref()),
            ("pathfind_mode", self.pathfind_mode.as_deref()),
            ("checkout_service_seconds", self.checkout_service_s.as_deref()),
            ("product_dwell_seconds", self.product_dwell_s.as_deref()),
            ("duration_seconds", self.duration_s.as_deref()),
            ("accrual", self.accrual.as_deref()),
        ];
        for (key, val) in pairs {
            if let Some(val) = val {
                file.set(0, key, val, cwd)?;
            }
        }
        if self.log_events {
            file.config.log_events = true;
        }
        Ok(file)
    }

    fn out_dir(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }
}

fn simulate(args: RunArgs) -> Outcome {
    let o = &args.overrides;
    let mut file = o.resolve()?;
    if args.snapshot_at.is_some() {
        file.config.log_events = true;
    }
    let seeds = match (&o.seeds, &file.sweep.seeds) {
        (Some(raw), _) => parse_seeds(raw)?,
        (None, Some(list)) => list.clone(),
        (None, None) => vec![file.config.seed],
    };
    let out = o.out_dir();
    let single = seeds.len() == 1;
    let mut rows = Vec::new();
    for &seed in &seeds {
        let config = SimulationConfig {
            seed,
            ..file.config.clone()
        };
        let result = run(config)?;
        rows.push(ResultRow::from(&result));
        let suffix = if single { String::new() } else { format!("_seed{seed}") };
        report::write_file(
            &out.join(format!("customers{suffix}.csv")),
            report::customers_csv(&result.records).as_bytes(),
        )?;
        if result.config.log_events {
            report::write_file(
                &out.join(format!("events{suffix}.csv")),
                report::events_csv(&result.events).as_bytes(),
            )?;
        }
        if let Some(t) = args.snapshot_at {
            let snap = report::render_snapshot(&result, t)?;
            report::write_file(&out.join(format!("snapshot_t{t}{suffix}.txt")), snap.as_bytes())?;
        }
    }
    let csv = report::results_csv(&rows);
    report::write_file(&out.join("results.csv"), csv.as_bytes())?;
    let mut manifest = RunManifest::new("simulate", &file.config, &file.layout_source);
    manifest.extra.push(("seeds".into(), join(&seeds)));
    report::write_file(&out.join("manifest.txt"), manifest.render().as_bytes())?;
    print!("{csv}");
    Ok(())
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn sweep(args: SweepArgs) -> Outcome {
    let o = &args.overrides;
    let file = o.resolve()?;
    let mut spec = match &args.preset {
        Some(name) => preset(name, &file.config)?,
        None if !file.sweep.is_empty() => file.sweep.to_spec(&file.config),
        None => return Err(Failure("sweep needs --preset or a --config with sweep lists".into())),
    };
    if let Some(raw) = &o.seeds {
        spec.seeds = parse_seeds(raw)?;
    }
    let result = run_sweep(&spec, args.jobs)?;
    let out = o.out_dir();
    let csv = report::results_csv(&report::sweep_rows(&result));
    report::write_file(&out.join("results.csv"), csv.as_bytes())?;
    report::write_file(
        &out.join("aggregates.csv"),
        report::aggregates_csv(&result.aggregates).as_bytes(),
    )?;
    let mut manifest = RunManifest::new("sweep", &spec.base, &file.layout_source);
    manifest.extra = vec![
        ("distances_feet".into(), join(&spec.distances_feet)),
        ("thresholds_seconds".into(), join(&spec.thresholds_seconds)),
        ("seed_fractions".into(), join(&spec.seed_fractions)),
        ("spread_flags".into(), join(&spec.spread_flags)),
        ("seeds".into(), join(&spec.seeds)),
    ];
    report::write_file(&out.join("manifest.txt"), manifest.render().as_bytes())?;
    println!(
        "{} runs ({} combos x {} seeds) written to {}",
        result.rows.len(),
        spec.combo_count(),
        spec.seeds.len(),
        out.display()
    );
    Ok(())
}

fn render_layout(args: RenderArgs) -> Outcome {
    let layout = load_layout(&args.layout.layout)?;
    print!("{}", report::render_layout(&layout));
    if let Some(path) = &args.ppm {
        report::write_file(path, &report::render_layout_ppm(&layout, args.scale))?;
    }
    Ok(())
}

fn neighborhood(args: NeighborhoodArgs) -> Outcome {
    if !(args.distance_ft.is_finite() && args.distance_ft >= 0.0 && args.cell_ft > 0.0) {
        return Err(Failure("distance must be non-negative and cell size positive".into()));
    }
    print!(
        "{}",
        report::render_neighborhood(&vulnerable_neighborhood(args.distance_ft, args.cell_ft))
    );
    Ok(())
}

fn validate(args: LayoutArg) -> Outcome {
    let layout = load_layout(&args.layout)?;
    let report = validate_layout(&layout);
    if report.is_ok() {
        println!(
            "ok: {}x{} cells, {} products, {} lanes, {} entrances, {} exits",
            layout.width,
            layout.height,
            layout.products.len(),
            layout.checkouts.len(),
            layout.entrances.len(),
            layout.exits.len()
        );
        return Ok(());
    }
    for v in &report.violations {
        println!("violation: {v}");
    }
    Err(Failure(format!("{} violation(s)", report.violations.len())))
}

fn gen_layout(args: GenArgs) -> Outcome {
    let layout = generate_default_layout(args.seed)?;
    let text = report::render_layout(&layout);
    match &args.out {
        Some(path) => report::write_file(path, text.as_bytes())?,
        None => print!("{text}"),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_count_or_list() {
        assert_eq!(parse_seeds("3").unwrap(), vec![1, 2, 3]);
        assert_eq!(parse_seeds("7, 2,9").unwrap(), vec![7, 2, 9]);
        assert!(parse_seeds("0").is_err());
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(main(["rushsim"]), 1);
        assert_eq!(main(["rushsim", "frobnicate"]), 1);
        assert_eq!(main(["rushsim", "neighborhood"]), 1);
        assert_eq!(main(["rushsim", "--help"]), 0);
    }

    #[test]
    fn bad_values_exit_two() {
        assert_eq!(main(["rushsim", "validate", "--layout", "/nonexistent/layout.txt"]), 2);
        assert_eq!(main(["rushsim", "neighborhood", "--distance-ft=-1"]), 2);
    }
}
