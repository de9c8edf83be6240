//! CSV output, text and pixmap renderings, and run manifests.
//!
//! Every renderer is a pure function of its inputs. Floating point columns
//! use fixed six-decimal formatting so outputs diff cleanly across runs.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::agents::{AgentEvent, InfectionStatus, Tick};
use crate::engine::{CustomerRecord, RunResult, SimulationConfig};
use crate::grid::{CellKind, NeighborhoodMask, StoreLayout, LANE_GLYPHS};
use crate::sweep::{Aggregate, SweepResult, SweepRow};

pub const RESULTS_HEADER: [&str; 10] = [
    "distance_ft",
    "threshold_s",
    "seed_fraction",
    "spread",
    "seed",
    "starting_infective",
    "newly_infected",
    "total_customers",
    "spawned",
    "still_in_store",
];

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot write {path}: {source}")]
    DestinationUnwritable { path: PathBuf, source: io::Error },
    #[error("tick {tick} is outside the recorded run (0..={last})")]
    TickOutOfRange { tick: Tick, last: Tick },
    #[error("run has no trajectories; enable event logging")]
    NoTrajectories,
    #[error("malformed results csv at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// One line of the results CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResultRow {
    pub distance_ft: f64,
    pub threshold_s: u32,
    pub seed_fraction: f64,
    pub spread: bool,
    pub seed: u64,
    pub starting_infective: usize,
    pub newly_infected: usize,
    pub total_customers: usize,
    pub spawned: usize,
    pub still_in_store: usize,
}

impl From<&SweepRow> for ResultRow {
    fn from(r: &SweepRow) -> Self {
        Self {
            distance_ft: r.params.max_distance_feet,
            threshold_s: r.params.threshold_seconds,
            seed_fraction: r.params.seed_fraction,
            spread: r.params.newly_infected_spread,
            seed: r.seed,
            starting_infective: r.starting_infective,
            newly_infected: r.newly_infected,
            total_customers: r.total_customers,
            spawned: r.spawned,
            still_in_store: r.still_in_store,
        }
    }
}

impl From<&RunResult> for ResultRow {
    fn from(r: &RunResult) -> Self {
        Self::from(&SweepRow::from_result(0, r))
    }
}

fn f6(v: f64) -> String {
    format!("{v:.6}")
}

pub fn sweep_rows(result: &SweepResult) -> Vec<ResultRow> {
    result.rows.iter().map(ResultRow::from).collect()
}

pub fn write_results_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULTS_HEADER)?;
    for r in rows {
        w.write_record([
            f6(r.distance_ft),
            r.threshold_s.to_string(),
            f6(r.seed_fraction),
            r.spread.to_string(),
            r.seed.to_string(),
            r.starting_infective.to_string(),
            r.newly_infected.to_string(),
            r.total_customers.to_string(),
            r.spawned.to_string(),
            r.still_in_store.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn results_csv(rows: &[ResultRow]) -> String {
    let mut buf = Vec::new();
    write_results_csv(rows, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}

pub fn parse_results_csv(text: &str) -> Result<Vec<ResultRow>, ReportError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = rdr.headers()?.clone();
    if header.iter().ne(RESULTS_HEADER) {
        return Err(ReportError::Parse {
            line: 1,
            reason: format!("unexpected header `{}`", header.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let field = |k: usize| rec.get(k).unwrap_or("");
        macro_rules! num {
            ($k:expr) => {
                field($k).parse().map_err(|_| ReportError::Parse {
                    line,
                    reason: format!("bad {} `{}`", RESULTS_HEADER[$k], field($k)),
                })?
            };
        }
        rows.push(ResultRow {
            distance_ft: num!(0),
            threshold_s: num!(1),
            seed_fraction: num!(2),
            spread: num!(3),
            seed: num!(4),
            starting_infective: num!(5),
            newly_infected: num!(6),
            total_customers: num!(7),
            spawned: num!(8),
            still_in_store: num!(9),
        });
    }
    Ok(rows)
}

pub fn aggregates_csv(aggregates: &[Aggregate]) -> String {
    let mut out = String::from("distance_ft,threshold_s,seed_fraction,spread,runs");
    for metric in ["newly_infected", "starting_infective", "total_customers"] {
        for stat in ["mean", "min", "max", "stddev"] {
            let _ = write!(out, ",{metric}_{stat}");
        }
    }
    out.push('\n');
    for a in aggregates {
        let p = &a.params;
        let _ = write!(
            out,
            "{},{},{},{},{}",
            f6(p.max_distance_feet),
            p.threshold_seconds,
            f6(p.seed_fraction),
            p.newly_infected_spread,
            a.runs
        );
        for s in [a.newly_infected, a.starting_infective, a.total_customers] {
            let _ = write!(out, ",{},{},{},{}", f6(s.mean), f6(s.min), f6(s.max), f6(s.stddev));
        }
        out.push('\n');
    }
    out
}

fn status_name(s: InfectionStatus) -> &'static str {
    match s {
        InfectionStatus::Susceptible { .. } => "susceptible",
        InfectionStatus::SeedInfective => "seed_infective",
        InfectionStatus::NewlyInfected { .. } => "newly_infected",
    }
}

pub fn customers_csv(records: &[CustomerRecord]) -> String {
    let mut out = String::from(
        "customer_id,entry_tick,exit_tick,list_size,status,exposure_seconds,cells_traversed,wait_s,service_s,dwell_s\n",
    );
    for r in records {
        let exit = r.exit_tick.map_or(String::new(), |t| t.to_string());
        let b = &r.budget;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.id,
            r.entry_tick,
            exit,
            r.list_size,
            status_name(r.status),
            r.status.exposure_seconds(),
            b.cells_traversed,
            b.wait_ticks,
            b.service_ticks,
            b.dwell_ticks
        );
    }
    out
}

pub fn events_csv(events: &[AgentEvent]) -> String {
    let mut out = String::from("tick,customer_id,event,detail\n");
    for e in events {
        let _ = writeln!(out, "{},{},{},{}", e.tick, e.customer, e.kind.name(), e.kind.detail());
    }
    out
}

fn glyph(kind: CellKind) -> char {
    match kind {
        CellKind::Open => '.',
        CellKind::Blocked => '#',
        CellKind::Product(_) => 'P',
        CellKind::Entrance(_) => 'E',
        CellKind::Exit(_) => 'X',
        CellKind::Checkout { lane, .. } => LANE_GLYPHS[lane.0] as char,
    }
}

fn glyph_rows(layout: &StoreLayout) -> Vec<Vec<char>> {
    (0..layout.height)
        .rev()
        .map(|y| (0..layout.width).map(|x| glyph(layout.cells[y * layout.width + x])).collect())
        .collect()
}

/// The layout in its file format, top row first.
pub fn render_layout(layout: &StoreLayout) -> String {
    let mut out = format!("{} {} {}\n", layout.width, layout.height, layout.cell_size_feet);
    for row in glyph_rows(layout) {
        out.extend(row);
        out.push('\n');
    }
    out
}

fn rgb(kind: CellKind) -> [u8; 3] {
    match kind {
        CellKind::Open => [245, 245, 240],
        CellKind::Blocked => [60, 60, 60],
        CellKind::Product(_) => [40, 140, 60],
        CellKind::Checkout { .. } => [40, 90, 200],
        CellKind::Entrance(_) => [230, 160, 30],
        CellKind::Exit(_) => [200, 40, 40],
    }
}

/// Binary P6 pixmap, `scale` pixels per cell, top row first.
pub fn render_layout_ppm(layout: &StoreLayout, scale: usize) -> Vec<u8> {
    let scale = scale.max(1);
    let (w, h) = (layout.width * scale, layout.height * scale);
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    for py in 0..h {
        let y = layout.height - 1 - py / scale;
        for px in 0..w {
            out.extend_from_slice(&rgb(layout.cells[y * layout.width + px / scale]));
        }
    }
    out
}

/// Square grid centered on the infective (`@`); `o` marks the other
/// vulnerable cells.
pub fn render_neighborhood(mask: &NeighborhoodMask) -> String {
    let r = mask.radius();
    let mut out = String::new();
    for dy in (-r..=r).rev() {
        for dx in -r..=r {
            out.push(if (dx, dy) == (0, 0) {
                '@'
            } else if mask.contains(dx, dy) {
                'o'
            } else {
                '.'
            });
        }
        out.push('\n');
    }
    let _ = writeln!(
        out,
        "max distance {} ft: {} vulnerable cells",
        mask.max_distance_feet,
        mask.len()
    );
    out
}

/// Customer positions at the start of tick `tick` drawn over the layout.
/// Each occupied cell shows its head count, capped at 9.
pub fn render_snapshot(result: &RunResult, tick: Tick) -> Result<String, ReportError> {
    let traj = result.trajectories.as_ref().ok_or(ReportError::NoTrajectories)?;
    let last = result.config.duration_seconds;
    if tick > last {
        return Err(ReportError::TickOutOfRange { tick, last });
    }
    let layout = &result.config.layout;
    let mut counts = vec![0u32; layout.width * layout.height];
    if tick > 0 {
        let t = tick - 1;
        for rec in &result.records {
            if rec.entry_tick <= t && rec.exit_tick.is_none_or(|e| e > t) {
                let pos = traj[rec.id][(t - rec.entry_tick) as usize];
                counts[layout.index(pos)] += 1;
            }
        }
    }
    let mut out = String::new();
    for (row_idx, row) in glyph_rows(layout).into_iter().enumerate() {
        let y = layout.height - 1 - row_idx;
        for (x, g) in row.into_iter().enumerate() {
            match counts[y * layout.width + x] {
                0 => out.push(g),
                n => out.push(char::from_digit(n.min(9), 10).expect("digit")),
            }
        }
        out.push('\n');
    }
    Ok(out)
}

/// Number of customers drawn by [`render_snapshot`] at `tick`.
pub fn snapshot_population(result: &RunResult, tick: Tick) -> usize {
    if tick == 0 {
        0
    } else {
        result.in_store_at(tick - 1)
    }
}

pub fn layout_checksum(layout: &StoreLayout) -> String {
    Sha256::digest(render_layout(layout).as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Everything needed to repeat a run, as `key = value` lines whose keys
/// match the config file format.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub version: String,
    pub command: String,
    pub config: SimulationConfig,
    pub layout_source: String,
    pub layout_sha256: String,
    pub created_unix_s: u64,
    /// Extra entries such as sweep lists.
    pub extra: Vec<(String, String)>,
}

impl RunManifest {
    pub fn new(command: &str, config: &SimulationConfig, layout_source: &str) -> Self {
        let created_unix_s = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config: config.clone(),
            layout_source: layout_source.to_string(),
            layout_sha256: layout_checksum(&config.layout),
            created_unix_s,
            extra: Vec::new(),
        }
    }

    pub fn render(&self) -> String {
        let c = &self.config;
        let e = &c.exposure;
        let mut out = String::new();
        let mut kv = |k: &str, v: &dyn std::fmt::Display| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("# rushsim_version", &self.version);
        kv("# command", &self.command);
        kv("# created_unix_s", &self.created_unix_s);
        kv("# layout_sha256", &self.layout_sha256);
        kv("layout", &self.layout_source);
        kv("seed", &c.seed);
        kv("duration_seconds", &c.duration_seconds);
        kv("checkout_service_seconds", &c.checkout_service_seconds);
        kv("product_dwell_seconds", &c.product_dwell_seconds);
        kv("pathfind_mode", &c.pathfind_mode);
        kv("target_metric", &c.target_metric);
        kv("accrual", &c.accrual);
        kv("log_events", &c.log_events);
        kv("max_distance_feet", &e.max_distance_feet);
        kv("threshold_seconds", &e.threshold_seconds);
        kv("seed_fraction", &e.seed_fraction);
        kv("newly_infected_spread", &e.newly_infected_spread);
        for p in &c.schedule.phases {
            kv("phase", p);
        }
        for (k, v) in &self.extra {
            kv(k, v);
        }
        out
    }
}

/// Writes `bytes` to `path`, creating parent directories.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), ReportError> {
    let unwritable = |source| ReportError::DestinationUnwritable {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(unwritable)?;
    }
    std::fs::write(path, bytes).map_err(unwritable)
}
