//! One simulation run: a one-second tick loop of spawn, move, accrue and
//! infect phases.
//!
//! Movement never depends on infection state, so a single run can carry
//! several [`ExposureTracker`]s (one per parameter set) over the same
//! trajectories. [`run_batch`] uses this to evaluate a whole grid of
//! exposure parameters for one seed.

use std::sync::Arc;

use thiserror::Error;

use crate::agents::{
    advance_customer, spawn_customer, AgentError, AgentEvent, AgentEventKind, Customer, InfectionStatus,
    LaneBoard, Router, StepContext, TargetMetric, Tick, TimeBudget, MAX_LIST_SIZE,
};
use crate::arrivals::{arrivals_due, ArrivalSchedule};
use crate::exposure::{Accrual, ExposureParams, ExposureTracker, Occupancy};
use crate::grid::{default_layout, validate_layout, CellCoord, StoreLayout, Violation};
use crate::pathfind::PathfindMode;
use crate::rng::{self, SimRng};

pub const DEFAULT_DURATION_SECONDS: u32 = 14_400;
pub const DEFAULT_CHECKOUT_SERVICE_SECONDS: u32 = 10;
pub const DEFAULT_PRODUCT_DWELL_SECONDS: u32 = 35;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub layout: Arc<StoreLayout>,
    pub schedule: ArrivalSchedule,
    pub exposure: ExposureParams,
    pub duration_seconds: u32,
    pub seed: u64,
    pub checkout_service_seconds: u32,
    pub product_dwell_seconds: u32,
    pub pathfind_mode: PathfindMode,
    pub target_metric: TargetMetric,
    pub accrual: Accrual,
    pub log_events: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            layout: Arc::new(default_layout()),
            schedule: ArrivalSchedule::default(),
            exposure: ExposureParams::default(),
            duration_seconds: DEFAULT_DURATION_SECONDS,
            seed: 1,
            checkout_service_seconds: DEFAULT_CHECKOUT_SERVICE_SECONDS,
            product_dwell_seconds: DEFAULT_PRODUCT_DWELL_SECONDS,
            pathfind_mode: PathfindMode::Standard,
            target_metric: TargetMetric::Manhattan,
            accrual: Accrual::PerTick,
            log_events: false,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("invalid layout: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    LayoutInvalid(Vec<Violation>),
    #[error(transparent)]
    Agent(#[from] AgentError),
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        let invalid = |m: String| Err(EngineError::ConfigInvalid(m));
        if self.duration_seconds < 1 {
            return invalid("duration_seconds must be at least 1".into());
        }
        if let Err(e) = self.exposure.validate() {
            return invalid(e.to_string());
        }
        if let Err(e) = self.schedule.validate() {
            return invalid(e.to_string());
        }
        let report = validate_layout(&self.layout);
        if !report.is_ok() {
            return Err(EngineError::LayoutInvalid(report.violations));
        }
        let l = &self.layout;
        if l.products.len() < MAX_LIST_SIZE {
            return invalid(format!(
                "layout has {} products, shopping lists need {MAX_LIST_SIZE}",
                l.products.len()
            ));
        }
        if l.entrances.is_empty() || l.exits.is_empty() || l.checkouts.is_empty() {
            return invalid("layout needs at least one entrance, exit and checkout lane".into());
        }
        Ok(())
    }
}

/// Outcome of one customer at the end of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CustomerRecord {
    pub id: usize,
    pub entry_tick: Tick,
    pub exit_tick: Option<Tick>,
    pub list_size: usize,
    pub status: InfectionStatus,
    pub budget: TimeBudget,
}

impl CustomerRecord {
    pub fn ticks_in_store(&self, end: Tick) -> Tick {
        self.exit_tick.unwrap_or(end) - self.entry_tick
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub config: SimulationConfig,
    /// Customers who left within the run.
    pub total_customers: usize,
    /// Seed infectives among exited customers.
    pub starting_infective: usize,
    /// Newly infected among exited customers.
    pub newly_infected: usize,
    pub spawned: usize,
    pub still_in_store: usize,
    /// Newly infected still inside at the cutoff; not part of `newly_infected`.
    pub newly_infected_in_store: usize,
    pub records: Vec<CustomerRecord>,
    pub events: Vec<AgentEvent>,
    /// Per-customer position at the end of each tick spent inside, when
    /// event logging is on.
    pub trajectories: Option<Vec<Vec<CellCoord>>>,
}

impl RunResult {
    pub fn seed(&self) -> u64 {
        self.config.seed
    }

    pub fn exposure(&self) -> &ExposureParams {
        &self.config.exposure
    }

    /// Customers inside the store at the end of tick `t`.
    pub fn in_store_at(&self, t: Tick) -> usize {
        self.records
            .iter()
            .filter(|r| r.entry_tick <= t && r.exit_tick.is_none_or(|e| e > t))
            .count()
    }
}

/// A run in progress. Customers spawned during a tick first move on the
/// following tick, so `exit_tick - entry_tick` counts the seconds spent
/// moving, waiting and being served.
pub struct Engine {
    config: SimulationConfig,
    now: Tick,
    accumulator: f64,
    rng: SimRng,
    customers: Vec<Customer>,
    positions: Vec<CellCoord>,
    active: Vec<usize>,
    lanes: LaneBoard,
    router: Router,
    trackers: Vec<ExposureTracker>,
    occupancy: Occupancy,
    events: Vec<AgentEvent>,
    infections: Vec<Vec<AgentEvent>>,
    trajectories: Option<Vec<Vec<CellCoord>>>,
}

impl Engine {
    pub fn new(config: SimulationConfig) -> Result<Self, EngineError> {
        let exposure = config.exposure;
        Self::with_exposures(config, &[exposure])
    }

    /// An engine tracking several exposure parameter sets at once. The
    /// config's own `exposure` drives the seed status stored on customers
    /// only when it is also the first entry of `exposures`.
    pub fn with_exposures(config: SimulationConfig, exposures: &[ExposureParams]) -> Result<Self, EngineError> {
        config.validate()?;
        if exposures.is_empty() {
            return Err(EngineError::ConfigInvalid("no exposure parameter sets".into()));
        }
        for e in exposures {
            e.validate().map_err(|err| EngineError::ConfigInvalid(err.to_string()))?;
        }
        Ok(Self::unchecked(config, exposures))
    }

    /// An engine over an arbitrary valid layout with no entry requirements on
    /// products or doors; for scripted scenarios.
    pub fn scripted(config: SimulationConfig) -> Result<Self, EngineError> {
        let report = validate_layout(&config.layout);
        if !report.is_ok() {
            return Err(EngineError::LayoutInvalid(report.violations));
        }
        config
            .exposure
            .validate()
            .map_err(|e| EngineError::ConfigInvalid(e.to_string()))?;
        let exposure = config.exposure;
        Ok(Self::unchecked(config, &[exposure]))
    }

    fn unchecked(config: SimulationConfig, exposures: &[ExposureParams]) -> Self {
        let layout = Arc::clone(&config.layout);
        let trackers = exposures
            .iter()
            .map(|&p| ExposureTracker::new(p, config.accrual, layout.cell_size_feet))
            .collect::<Vec<_>>();
        Self {
            now: 0,
            accumulator: 0.0,
            rng: rng::seeded(config.seed),
            customers: Vec::new(),
            positions: Vec::new(),
            active: Vec::new(),
            lanes: LaneBoard::new(layout.checkouts.len()),
            router: Router::new(Arc::clone(&layout), config.pathfind_mode, config.target_metric),
            infections: vec![Vec::new(); trackers.len()],
            trackers,
            occupancy: Occupancy::new(layout.width, layout.height),
            events: Vec::new(),
            trajectories: config.log_events.then(Vec::new),
            config,
        }
    }

    pub fn config(&self) -> &SimulationConfig {
        &self.config
    }

    /// The next tick to run.
    pub fn now(&self) -> Tick {
        self.now
    }

    pub fn is_finished(&self) -> bool {
        self.now >= self.config.duration_seconds
    }

    pub fn customers(&self) -> &[Customer] {
        &self.customers
    }

    pub fn customer(&self, id: usize) -> &Customer {
        &self.customers[id]
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn lanes(&self) -> &LaneBoard {
        &self.lanes
    }

    pub fn tracker(&self, index: usize) -> &ExposureTracker {
        &self.trackers[index]
    }

    pub fn spawned(&self) -> usize {
        self.customers.len()
    }

    /// Places a customer in the store; it moves from the next tick on. Its
    /// id is reassigned to the next free one, which is returned.
    pub fn insert_customer(&mut self, mut customer: Customer) -> usize {
        let id = self.customers.len();
        customer.id = id;
        for tracker in &mut self.trackers {
            tracker.admit(id, customer.status);
        }
        self.admit(customer);
        id
    }

    fn admit(&mut self, customer: Customer) {
        let id = customer.id;
        self.positions.push(customer.position);
        self.customers.push(customer);
        self.active.push(id);
        if let Some(t) = &mut self.trajectories {
            t.push(Vec::new());
        }
    }

    /// Runs one second: spawn, move, accrue, infect, record.
    pub fn tick(&mut self) -> Result<(), EngineError> {
        let tick = self.now;
        let layout = Arc::clone(&self.config.layout);

        // Spawn.
        let movers = self.active.len();
        let (due, acc) = arrivals_due(&self.config.schedule, tick, self.accumulator);
        self.accumulator = acc;
        for _ in 0..due {
            let id = self.customers.len();
            let customer = spawn_customer(&mut self.rng, &layout, self.config.exposure.seed_fraction, tick, id);
            for tracker in &mut self.trackers {
                tracker.admit_drawn(id, customer.infective_draw);
            }
            if self.config.log_events {
                self.events.push(AgentEvent {
                    tick,
                    customer: id,
                    kind: AgentEventKind::Spawn { entrance: customer.entrance },
                });
            }
            self.admit(customer);
        }

        // Move, in ascending id order.
        let mut moved = Vec::new();
        {
            let mut ctx = StepContext {
                router: &mut self.router,
                lanes: &mut self.lanes,
                checkout_service_seconds: self.config.checkout_service_seconds,
                product_dwell_seconds: self.config.product_dwell_seconds,
            };
            let sink = if self.config.log_events { &mut self.events } else { &mut moved };
            for &id in &self.active[..movers] {
                let customer = &mut self.customers[id];
                advance_customer(customer, &mut ctx, tick, sink)?;
                self.positions[id] = customer.position;
            }
        }
        let customers = &self.customers;
        self.active.retain(|&id| !customers[id].is_exited());

        // Accrue and infect.
        let positions = &self.positions;
        self.occupancy
            .rebuild(self.active.iter().map(|&id| (id, positions[id])));
        for (i, tracker) in self.trackers.iter_mut().enumerate() {
            let infected = tracker.step(tick, &self.active, &self.positions, &self.occupancy);
            if self.config.log_events {
                self.infections[i].extend(infected.iter().map(|&id| AgentEvent {
                    tick,
                    customer: id,
                    kind: AgentEventKind::Infected,
                }));
            }
        }
        for &id in &self.active {
            self.customers[id].status = self.trackers[0].status(id);
        }

        // Record.
        if let Some(traj) = &mut self.trajectories {
            for &id in &self.active {
                traj[id].push(self.positions[id]);
            }
        }
        self.now += 1;
        Ok(())
    }

    pub fn run_to_end(&mut self) -> Result<(), EngineError> {
        while !self.is_finished() {
            self.tick()?;
        }
        Ok(())
    }

    /// Results for the first exposure parameter set.
    pub fn finish(self) -> RunResult {
        self.finish_all().swap_remove(0)
    }

    /// One result per exposure parameter set, in the order given.
    pub fn finish_all(self) -> Vec<RunResult> {
        let spawned = self.customers.len();
        let still_in_store = self.active.len();
        self.trackers
            .iter()
            .zip(&self.infections)
            .map(|(tracker, infections)| {
                let records: Vec<CustomerRecord> = self
                    .customers
                    .iter()
                    .map(|c| CustomerRecord {
                        id: c.id,
                        entry_tick: c.entry_tick,
                        exit_tick: c.exit_tick,
                        list_size: c.shopping_list.len(),
                        status: tracker.status(c.id),
                        budget: c.budget,
                    })
                    .collect();
                let exited = || records.iter().filter(|r| r.exit_tick.is_some());
                let newly = |r: &&CustomerRecord| matches!(r.status, InfectionStatus::NewlyInfected { .. });
                let events = if self.config.log_events {
                    merge_events(&self.events, infections)
                } else {
                    Vec::new()
                };
                RunResult {
                    config: SimulationConfig {
                        exposure: tracker.params,
                        ..self.config.clone()
                    },
                    total_customers: exited().count(),
                    starting_infective: exited()
                        .filter(|r| r.status == InfectionStatus::SeedInfective)
                        .count(),
                    newly_infected: exited().filter(newly).count(),
                    spawned,
                    still_in_store,
                    newly_infected_in_store: records
                        .iter()
                        .filter(|r| r.exit_tick.is_none())
                        .filter(newly)
                        .count(),
                    events,
                    trajectories: self.trajectories.clone(),
                    records,
                }
            })
            .collect()
    }
}

/// Movement events precede infection events of the same tick.
fn merge_events(movement: &[AgentEvent], infections: &[AgentEvent]) -> Vec<AgentEvent> {
    let mut out = Vec::with_capacity(movement.len() + infections.len());
    let (mut i, mut j) = (0, 0);
    while i < movement.len() || j < infections.len() {
        let take_movement = match (movement.get(i), infections.get(j)) {
            (Some(m), Some(inf)) => m.tick <= inf.tick,
            (Some(_), None) => true,
            _ => false,
        };
        if take_movement {
            out.push(movement[i]);
            i += 1;
        } else {
            out.push(infections[j]);
            j += 1;
        }
    }
    out
}

pub fn run(config: SimulationConfig) -> Result<RunResult, EngineError> {
    let mut engine = Engine::new(config)?;
    engine.run_to_end()?;
    Ok(engine.finish())
}

/// Simulates movement once and evaluates every exposure parameter set over
/// it. Equivalent to calling [`run`] once per parameter set.
pub fn run_batch(config: SimulationConfig, exposures: &[ExposureParams]) -> Result<Vec<RunResult>, EngineError> {
    let mut engine = Engine::with_exposures(config, exposures)?;
    engine.run_to_end()?;
    Ok(engine.finish_all())
}
