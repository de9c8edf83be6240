//! Customer lifecycle: spawn with a shopping list, visit products greedily,
//! queue at a checkout, leave through the nearest exit.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::index;
use rand::Rng;
use thiserror::Error;

use crate::grid::{CellCoord, LaneId, ProductId, StoreLayout};
use crate::pathfind::{bfs_distances, plan_path, Path, PathError, PathfindMode};

/// Simulation time in whole seconds.
pub type Tick = u32;

pub const MIN_LIST_SIZE: usize = 3;
pub const MAX_LIST_SIZE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckoutLeg {
    /// Shopping is done; no lane picked yet.
    Choosing,
    Walking(LaneId),
    /// Standing on the lane's queue cell, waiting for the register.
    Queued(LaneId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CustomerState {
    Shopping { remaining: Vec<ProductId> },
    ToCheckout(CheckoutLeg),
    CheckingOut { lane: LaneId, remaining: u32 },
    ToExit,
    Exited,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfectionStatus {
    Susceptible { exposure_seconds: u32 },
    SeedInfective,
    NewlyInfected {
        at_tick: Tick,
        infective: bool,
        exposure_seconds: u32,
    },
}

impl InfectionStatus {
    pub fn is_infective(self) -> bool {
        match self {
            InfectionStatus::SeedInfective => true,
            InfectionStatus::NewlyInfected { infective, .. } => infective,
            InfectionStatus::Susceptible { .. } => false,
        }
    }

    pub fn exposure_seconds(self) -> u32 {
        match self {
            InfectionStatus::Susceptible { exposure_seconds }
            | InfectionStatus::NewlyInfected { exposure_seconds, .. } => exposure_seconds,
            InfectionStatus::SeedInfective => 0,
        }
    }
}

/// Where a customer spent its ticks in the store.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TimeBudget {
    pub cells_traversed: u32,
    pub wait_ticks: u32,
    pub service_ticks: u32,
    pub dwell_ticks: u32,
}

impl TimeBudget {
    pub fn total(&self) -> u32 {
        self.cells_traversed + self.wait_ticks + self.service_ticks + self.dwell_ticks
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub path: Arc<Path>,
    /// Index of the next cell to step onto.
    pub next: usize,
}

impl Route {
    pub fn is_finished(&self) -> bool {
        self.next >= self.path.cells.len()
    }

    pub fn remaining(&self) -> &[CellCoord] {
        &self.path.cells[self.next.min(self.path.cells.len())..]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Customer {
    pub id: usize,
    pub position: CellCoord,
    pub state: CustomerState,
    pub route: Option<Route>,
    pub shopping_list: Vec<ProductId>,
    pub status: InfectionStatus,
    /// Uniform draw behind the seed-infective decision; infective iff
    /// `infective_draw < p`, so raising `p` only adds infectives.
    pub infective_draw: f64,
    pub entrance: usize,
    pub entry_tick: Tick,
    pub exit_tick: Option<Tick>,
    pub dwell_remaining: u32,
    pub budget: TimeBudget,
}

impl Customer {
    /// A customer placed by hand, already holding its remaining list.
    pub fn scripted(id: usize, position: CellCoord, state: CustomerState, status: InfectionStatus, entry_tick: Tick) -> Self {
        let shopping_list = match &state {
            CustomerState::Shopping { remaining } => remaining.clone(),
            _ => Vec::new(),
        };
        Self {
            id,
            position,
            state,
            route: None,
            shopping_list,
            status,
            infective_draw: if status == InfectionStatus::SeedInfective { 0.0 } else { 1.0 },
            entrance: 0,
            entry_tick,
            exit_tick: None,
            dwell_remaining: 0,
            budget: TimeBudget::default(),
        }
    }

    pub fn is_exited(&self) -> bool {
        self.state == CustomerState::Exited
    }
}

/// Draws a new customer. Draw order is fixed: list size, product sample,
/// entrance, infective uniform.
pub fn spawn_customer<R: Rng + ?Sized>(
    rng: &mut R,
    layout: &StoreLayout,
    p_infective: f64,
    entry_tick: Tick,
    id: usize,
) -> Customer {
    let size = rng.random_range(MIN_LIST_SIZE..=MAX_LIST_SIZE).min(layout.products.len());
    let shopping_list: Vec<ProductId> = index::sample(rng, layout.products.len(), size)
        .into_iter()
        .map(ProductId)
        .collect();
    let entrance = rng.random_range(0..layout.entrances.len());
    let infective_draw: f64 = rng.random();
    let status = if infective_draw < p_infective {
        InfectionStatus::SeedInfective
    } else {
        InfectionStatus::Susceptible { exposure_seconds: 0 }
    };
    Customer {
        id,
        position: layout.entrances[entrance],
        state: CustomerState::Shopping {
            remaining: shopping_list.clone(),
        },
        route: None,
        shopping_list,
        status,
        infective_draw,
        entrance,
        entry_tick,
        exit_tick: None,
        dwell_remaining: 0,
        budget: TimeBudget::default(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Product(ProductId),
    Lane(LaneId),
    Exit(usize),
}

impl Target {
    /// The cell a customer walks to: product cell, lane queue cell, or exit.
    pub fn cell(self, layout: &StoreLayout) -> CellCoord {
        match self {
            Target::Product(p) => layout.product_cell(p),
            Target::Lane(l) => layout.checkouts[l.0].queue,
            Target::Exit(e) => layout.exits[e],
        }
    }
}

/// Picks the next destination. `busy[lane]` is true while a lane's register
/// is occupied; `distance` ranks candidates (ties go to the lowest id).
pub fn next_target(
    customer: &Customer,
    layout: &StoreLayout,
    busy: &[bool],
    distance: &mut dyn FnMut(CellCoord, CellCoord) -> u32,
) -> Option<Target> {
    let here = customer.position;
    let nearest = |cells: &mut dyn Iterator<Item = (usize, CellCoord)>, distance: &mut dyn FnMut(CellCoord, CellCoord) -> u32| {
        cells
            .map(|(id, c)| (distance(here, c), id))
            .min()
            .map(|(_, id)| id)
    };
    match &customer.state {
        CustomerState::Shopping { remaining } => {
            let mut it = remaining.iter().map(|&p| (p.0, layout.product_cell(p)));
            nearest(&mut it, distance).map(|id| Target::Product(ProductId(id)))
        }
        CustomerState::ToCheckout(CheckoutLeg::Choosing) => {
            let mut open = layout
                .checkouts
                .iter()
                .filter(|l| !busy.get(l.id.0).copied().unwrap_or(false))
                .map(|l| (l.id.0, l.queue));
            let lane = nearest(&mut open, distance).or_else(|| {
                let mut all = layout.checkouts.iter().map(|l| (l.id.0, l.queue));
                nearest(&mut all, distance)
            });
            lane.map(|id| Target::Lane(LaneId(id)))
        }
        CustomerState::ToCheckout(CheckoutLeg::Walking(lane) | CheckoutLeg::Queued(lane)) => {
            Some(Target::Lane(*lane))
        }
        CustomerState::ToExit => {
            let mut exits = layout.exits.iter().copied().enumerate();
            nearest(&mut exits, distance).map(Target::Exit)
        }
        CustomerState::CheckingOut { lane, .. } => Some(Target::Lane(*lane)),
        CustomerState::Exited => None,
    }
}

/// How "closest" is measured when ordering destinations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum TargetMetric {
    #[default]
    Manhattan,
    /// Shortest walking distance through the layout.
    Walking,
}

impl fmt::Display for TargetMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TargetMetric::Manhattan => "manhattan",
            TargetMetric::Walking => "walking",
        })
    }
}

impl FromStr for TargetMetric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "manhattan" => Ok(TargetMetric::Manhattan),
            "walking" | "path" => Ok(TargetMetric::Walking),
            other => Err(format!("unknown target metric `{other}`")),
        }
    }
}

/// Plans and memoizes routes. The layout is static and routes ignore other
/// customers, so a route depends only on its endpoints.
#[derive(Debug)]
pub struct Router {
    layout: Arc<StoreLayout>,
    mode: PathfindMode,
    metric: TargetMetric,
    paths: HashMap<(CellCoord, CellCoord), Arc<Path>>,
    fields: HashMap<CellCoord, Vec<Option<u32>>>,
}

impl Router {
    pub fn new(layout: Arc<StoreLayout>, mode: PathfindMode, metric: TargetMetric) -> Self {
        Self {
            layout,
            mode,
            metric,
            paths: HashMap::new(),
            fields: HashMap::new(),
        }
    }

    pub fn layout(&self) -> &Arc<StoreLayout> {
        &self.layout
    }

    pub fn route(&mut self, from: CellCoord, to: CellCoord) -> Result<Arc<Path>, PathError> {
        if let Some(p) = self.paths.get(&(from, to)) {
            return Ok(Arc::clone(p));
        }
        let path = Arc::new(plan_path(&self.layout, from, to, self.mode)?);
        self.paths.insert((from, to), Arc::clone(&path));
        Ok(path)
    }

    pub fn distance(&mut self, from: CellCoord, to: CellCoord) -> u32 {
        match self.metric {
            TargetMetric::Manhattan => from.manhattan(to),
            TargetMetric::Walking => {
                let layout = &self.layout;
                let field = self
                    .fields
                    .entry(to)
                    .or_insert_with(|| bfs_distances(layout, to));
                field[layout.index(from)].unwrap_or(u32::MAX)
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LaneState {
    pub occupant: Option<usize>,
    pub queue: VecDeque<usize>,
}

/// Register occupancy and FIFO waiting lines per lane.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LaneBoard {
    pub lanes: Vec<LaneState>,
}

impl LaneBoard {
    pub fn new(count: usize) -> Self {
        Self {
            lanes: vec![LaneState::default(); count],
        }
    }

    pub fn busy_flags(&self) -> Vec<bool> {
        self.lanes.iter().map(|l| l.occupant.is_some()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentEventKind {
    Spawn { entrance: usize },
    Pickup(ProductId),
    QueueJoin(LaneId),
    CheckoutStart(LaneId),
    CheckoutEnd(LaneId),
    Exit(usize),
    Infected,
}

impl AgentEventKind {
    pub fn name(self) -> &'static str {
        match self {
            AgentEventKind::Spawn { .. } => "spawn",
            AgentEventKind::Pickup(_) => "pickup",
            AgentEventKind::QueueJoin(_) => "queue",
            AgentEventKind::CheckoutStart(_) => "checkout_start",
            AgentEventKind::CheckoutEnd(_) => "checkout_end",
            AgentEventKind::Exit(_) => "exit",
            AgentEventKind::Infected => "infected",
        }
    }

    pub fn detail(self) -> String {
        match self {
            AgentEventKind::Spawn { entrance } => format!("entrance={entrance}"),
            AgentEventKind::Pickup(p) => format!("product={}", p.0),
            AgentEventKind::QueueJoin(l)
            | AgentEventKind::CheckoutStart(l)
            | AgentEventKind::CheckoutEnd(l) => format!("lane={}", l.0),
            AgentEventKind::Exit(e) => format!("exit={e}"),
            AgentEventKind::Infected => String::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AgentEvent {
    pub tick: Tick,
    pub customer: usize,
    pub kind: AgentEventKind,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AgentError {
    #[error("customer {0} has no route and no target")]
    PathExhausted(usize),
    #[error("customer {0} already left the store")]
    AlreadyExited(usize),
    #[error("customer {customer}: {source}")]
    Route {
        customer: usize,
        #[source]
        source: PathError,
    },
}

/// Everything a customer touches while taking a step.
pub struct StepContext<'a> {
    pub router: &'a mut Router,
    pub lanes: &'a mut LaneBoard,
    pub checkout_service_seconds: u32,
    pub product_dwell_seconds: u32,
}

/// Advances one customer by one second: one cell of movement, one second of
/// waiting, dwelling or service.
pub fn advance_customer(
    customer: &mut Customer,
    ctx: &mut StepContext<'_>,
    tick: Tick,
    events: &mut Vec<AgentEvent>,
) -> Result<(), AgentError> {
    let id = customer.id;
    match customer.state {
        CustomerState::Exited => return Err(AgentError::AlreadyExited(id)),
        CustomerState::CheckingOut { lane, remaining } => {
            customer.budget.service_ticks += 1;
            if remaining <= 1 {
                finish_checkout(customer, ctx, lane, tick, events);
            } else {
                customer.state = CustomerState::CheckingOut {
                    lane,
                    remaining: remaining - 1,
                };
            }
            return Ok(());
        }
        CustomerState::ToCheckout(CheckoutLeg::Queued(lane)) => {
            let slot = &mut ctx.lanes.lanes[lane.0];
            if slot.occupant.is_none() && slot.queue.front() == Some(&id) {
                slot.queue.pop_front();
                slot.occupant = Some(id);
                customer.position = ctx.router.layout().checkouts[lane.0].register;
                customer.budget.cells_traversed += 1;
                events.push(AgentEvent {
                    tick,
                    customer: id,
                    kind: AgentEventKind::CheckoutStart(lane),
                });
                if ctx.checkout_service_seconds == 0 {
                    finish_checkout(customer, ctx, lane, tick, events);
                } else {
                    customer.state = CustomerState::CheckingOut {
                        lane,
                        remaining: ctx.checkout_service_seconds,
                    };
                }
            } else {
                customer.budget.wait_ticks += 1;
            }
            return Ok(());
        }
        _ => {}
    }

    if customer.dwell_remaining > 0 {
        customer.dwell_remaining -= 1;
        customer.budget.dwell_ticks += 1;
        return Ok(());
    }

    if customer.route.as_ref().is_none_or(Route::is_finished) {
        let busy = ctx.lanes.busy_flags();
        let router = &mut *ctx.router;
        let layout = Arc::clone(router.layout());
        let target = next_target(customer, &layout, &busy, &mut |a, b| router.distance(a, b))
            .ok_or(AgentError::PathExhausted(id))?;
        if let (CustomerState::ToCheckout(CheckoutLeg::Choosing), Target::Lane(lane)) =
            (&customer.state, target)
        {
            customer.state = CustomerState::ToCheckout(CheckoutLeg::Walking(lane));
        }
        let path = router
            .route(customer.position, target.cell(&layout))
            .map_err(|source| AgentError::Route { customer: id, source })?;
        customer.route = Some(Route { path, next: 1 });
    }

    let route = customer.route.as_mut().expect("route planned above");
    if let Some(&cell) = route.path.cells.get(route.next) {
        route.next += 1;
        customer.position = cell;
        customer.budget.cells_traversed += 1;
        pick_up_at(customer, ctx.router.layout(), tick, events);
    }
    if customer.route.as_ref().is_some_and(Route::is_finished) {
        arrive(customer, ctx, tick, events)?;
    }
    Ok(())
}

fn pick_up_at(customer: &mut Customer, layout: &StoreLayout, tick: Tick, events: &mut Vec<AgentEvent>) {
    if let CustomerState::Shopping { remaining } = &mut customer.state {
        if let Some(i) = remaining
            .iter()
            .position(|&p| layout.product_cell(p) == customer.position)
        {
            let product = remaining.remove(i);
            events.push(AgentEvent {
                tick,
                customer: customer.id,
                kind: AgentEventKind::Pickup(product),
            });
        }
    }
}

fn arrive(
    customer: &mut Customer,
    ctx: &mut StepContext<'_>,
    tick: Tick,
    events: &mut Vec<AgentEvent>,
) -> Result<(), AgentError> {
    let id = customer.id;
    match customer.state {
        CustomerState::Shopping { .. } => {
            // A zero-length route means the target product is underfoot.
            if customer.route.as_ref().is_some_and(|r| r.path.steps() == 0) {
                pick_up_at(customer, ctx.router.layout(), tick, events);
            }
            customer.route = None;
            customer.dwell_remaining = ctx.product_dwell_seconds;
            if matches!(&customer.state, CustomerState::Shopping { remaining } if remaining.is_empty()) {
                customer.state = CustomerState::ToCheckout(CheckoutLeg::Choosing);
            }
        }
        CustomerState::ToCheckout(CheckoutLeg::Walking(lane)) => {
            ctx.lanes.lanes[lane.0].queue.push_back(id);
            customer.state = CustomerState::ToCheckout(CheckoutLeg::Queued(lane));
            customer.route = None;
            events.push(AgentEvent {
                tick,
                customer: id,
                kind: AgentEventKind::QueueJoin(lane),
            });
        }
        CustomerState::ToExit => {
            let layout = ctx.router.layout();
            let exit = layout
                .exits
                .iter()
                .position(|&e| e == customer.position)
                .ok_or(AgentError::PathExhausted(id))?;
            customer.state = CustomerState::Exited;
            customer.exit_tick = Some(tick);
            customer.route = None;
            events.push(AgentEvent {
                tick,
                customer: id,
                kind: AgentEventKind::Exit(exit),
            });
        }
        _ => return Err(AgentError::PathExhausted(id)),
    }
    Ok(())
}

fn finish_checkout(
    customer: &mut Customer,
    ctx: &mut StepContext<'_>,
    lane: LaneId,
    tick: Tick,
    events: &mut Vec<AgentEvent>,
) {
    let slot = &mut ctx.lanes.lanes[lane.0];
    if slot.occupant == Some(customer.id) {
        slot.occupant = None;
    }
    customer.state = CustomerState::ToExit;
    customer.route = None;
    events.push(AgentEvent {
        tick,
        customer: customer.id,
        kind: AgentEventKind::CheckoutEnd(lane),
    });
}
