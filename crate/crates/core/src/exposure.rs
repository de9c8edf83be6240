//! Proximity exposure accrual and the threshold infection rule.
//!
//! Each second a susceptible customer stands within the maximum exposure
//! distance (center to center, inclusive) of at least one infective customer
//! adds one second to its exposure clock. Exposure from different infectives
//! and separate encounters adds up. Once the clock reaches the threshold the
//! customer is newly infected; whether it then spreads exposure itself is
//! governed by the spread flag.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::agents::{Customer, InfectionStatus, Tick};
use crate::grid::{CellCoord, NeighborhoodMask};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExposureParams {
    pub max_distance_feet: f64,
    pub threshold_seconds: u32,
    pub seed_fraction: f64,
    pub newly_infected_spread: bool,
}

impl Default for ExposureParams {
    fn default() -> Self {
        Self {
            max_distance_feet: 6.0,
            threshold_seconds: 900,
            seed_fraction: 0.01,
            newly_infected_spread: false,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExposureError {
    #[error("max_distance_feet must be positive, got {0}")]
    Distance(f64),
    #[error("threshold_seconds must be at least 1")]
    Threshold,
    #[error("seed_fraction must lie in [0, 1], got {0}")]
    SeedFraction(f64),
}

impl ExposureParams {
    pub fn validate(&self) -> Result<(), ExposureError> {
        if !(self.max_distance_feet.is_finite() && self.max_distance_feet > 0.0) {
            return Err(ExposureError::Distance(self.max_distance_feet));
        }
        if self.threshold_seconds < 1 {
            return Err(ExposureError::Threshold);
        }
        if !(0.0..=1.0).contains(&self.seed_fraction) {
            return Err(ExposureError::SeedFraction(self.seed_fraction));
        }
        Ok(())
    }
}

/// How simultaneous infectives combine within one tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Accrual {
    /// At most one second per tick however many infectives are near.
    #[default]
    PerTick,
    /// One second per nearby infective per tick.
    PerInfective,
}

impl fmt::Display for Accrual {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Accrual::PerTick => "per_tick",
            Accrual::PerInfective => "per_infective",
        })
    }
}

impl FromStr for Accrual {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "per_tick" => Ok(Accrual::PerTick),
            "per_infective" => Ok(Accrual::PerInfective),
            other => Err(format!("unknown accrual mode `{other}`")),
        }
    }
}

fn offset_of(from: CellCoord, to: CellCoord) -> (i32, i32) {
    (
        i32::from(to.x) - i32::from(from.x),
        i32::from(to.y) - i32::from(from.y),
    )
}

/// Exposure increments for one tick, aligned with `customers`. Only
/// susceptible customers receive non-zero increments.
pub fn accrue_exposure(customers: &[Customer], mask: &NeighborhoodMask, accrual: Accrual) -> Vec<u32> {
    let infectives: Vec<CellCoord> = customers
        .iter()
        .filter(|c| c.status.is_infective())
        .map(|c| c.position)
        .collect();
    customers
        .iter()
        .map(|c| {
            if !matches!(c.status, InfectionStatus::Susceptible { .. }) {
                return 0;
            }
            let near = infectives
                .iter()
                .filter(|&&src| {
                    let (dx, dy) = offset_of(src, c.position);
                    mask.contains(dx, dy)
                })
                .count() as u32;
            match accrual {
                Accrual::PerTick => near.min(1),
                Accrual::PerInfective => near,
            }
        })
        .collect()
}

/// Applies the inclusive threshold rule to a susceptible status.
pub fn check_infection(status: InfectionStatus, params: &ExposureParams, tick: Tick) -> InfectionStatus {
    match status {
        InfectionStatus::Susceptible { exposure_seconds } if exposure_seconds >= params.threshold_seconds => {
            InfectionStatus::NewlyInfected {
                at_tick: tick,
                infective: params.newly_infected_spread,
                exposure_seconds,
            }
        }
        other => other,
    }
}

/// Cell-indexed lists of the customers standing on each cell, rebuilt once
/// per tick and shared by every exposure tracker.
#[derive(Debug, Clone)]
pub struct Occupancy {
    width: usize,
    height: usize,
    head: Vec<u32>,
    next: Vec<u32>,
    ids: Vec<usize>,
    touched: Vec<usize>,
}

const NIL: u32 = u32::MAX;

impl Occupancy {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            head: vec![NIL; width * height],
            next: Vec::new(),
            ids: Vec::new(),
            touched: Vec::new(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn rebuild(&mut self, occupants: impl Iterator<Item = (usize, CellCoord)>) {
        for &cell in &self.touched {
            self.head[cell] = NIL;
        }
        self.touched.clear();
        self.next.clear();
        self.ids.clear();
        for (id, pos) in occupants {
            let cell = usize::from(pos.y) * self.width + usize::from(pos.x);
            if self.head[cell] == NIL {
                self.touched.push(cell);
            }
            self.next.push(self.head[cell]);
            self.ids.push(id);
            self.head[cell] = (self.ids.len() - 1) as u32;
        }
    }

    /// Customers on the cell with row-major index `cell`.
    pub fn on_cell(&self, cell: usize) -> impl Iterator<Item = usize> + '_ {
        let mut slot = self.head[cell];
        std::iter::from_fn(move || {
            if slot == NIL {
                return None;
            }
            let id = self.ids[slot as usize];
            slot = self.next[slot as usize];
            Some(id)
        })
    }
}

/// Infection bookkeeping for one parameter set over a run. Statuses are
/// indexed by customer id; movement lives elsewhere, so several trackers can
/// follow the same trajectories.
#[derive(Debug, Clone)]
pub struct ExposureTracker {
    pub params: ExposureParams,
    pub accrual: Accrual,
    mask: NeighborhoodMask,
    statuses: Vec<InfectionStatus>,
    /// Number of infectives covering each cell this tick.
    cover: Vec<u32>,
    covered: Vec<usize>,
    exposed: Vec<usize>,
}

impl ExposureTracker {
    pub fn new(params: ExposureParams, accrual: Accrual, cell_size_feet: f64) -> Self {
        Self {
            mask: crate::grid::vulnerable_neighborhood(params.max_distance_feet, cell_size_feet),
            params,
            accrual,
            statuses: Vec::new(),
            cover: Vec::new(),
            covered: Vec::new(),
            exposed: Vec::new(),
        }
    }

    pub fn mask(&self) -> &NeighborhoodMask {
        &self.mask
    }

    /// Registers customer `id` (ids are admitted in order).
    pub fn admit(&mut self, id: usize, status: InfectionStatus) {
        debug_assert_eq!(id, self.statuses.len());
        self.statuses.push(status);
    }

    /// Seed decision from the customer's shared uniform draw.
    pub fn admit_drawn(&mut self, id: usize, infective_draw: f64) {
        let status = if infective_draw < self.params.seed_fraction {
            InfectionStatus::SeedInfective
        } else {
            InfectionStatus::Susceptible { exposure_seconds: 0 }
        };
        self.admit(id, status);
    }

    pub fn status(&self, id: usize) -> InfectionStatus {
        self.statuses[id]
    }

    pub fn statuses(&self) -> &[InfectionStatus] {
        &self.statuses
    }

    /// Accrues one tick of exposure for the in-store customers `active`
    /// (placed on `occupancy`), then applies the threshold rule. Returns the
    /// ids infected this tick, ascending.
    pub fn step(
        &mut self,
        tick: Tick,
        active: &[usize],
        positions: &[CellCoord],
        occupancy: &Occupancy,
    ) -> Vec<usize> {
        let (w, h) = (occupancy.width() as i32, occupancy.height() as i32);
        if self.cover.len() != (w * h) as usize {
            self.cover = vec![0; (w * h) as usize];
        }
        for &id in active {
            if !self.statuses[id].is_infective() {
                continue;
            }
            let at = positions[id];
            for &(dx, dy) in &self.mask.offsets {
                let (x, y) = (i32::from(at.x) + dx, i32::from(at.y) + dy);
                if x < 0 || y < 0 || x >= w || y >= h {
                    continue;
                }
                let cell = (y * w + x) as usize;
                if self.cover[cell] == 0 {
                    self.covered.push(cell);
                }
                self.cover[cell] += 1;
            }
        }

        self.exposed.clear();
        for &cell in &self.covered {
            let gain = match self.accrual {
                Accrual::PerTick => 1,
                Accrual::PerInfective => self.cover[cell],
            };
            for id in occupancy.on_cell(cell) {
                if let InfectionStatus::Susceptible { exposure_seconds } = &mut self.statuses[id] {
                    *exposure_seconds += gain;
                    self.exposed.push(id);
                }
            }
            self.cover[cell] = 0;
        }
        self.covered.clear();

        // Threshold checks after all accrual; new infectives act next tick.
        let mut infected = Vec::new();
        for &id in &self.exposed {
            let next = check_infection(self.statuses[id], &self.params, tick);
            if next != self.statuses[id] {
                self.statuses[id] = next;
                infected.push(id);
            }
        }
        infected.sort_unstable();
        infected
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::CustomerState;
    use crate::grid::{center_distance, vulnerable_neighborhood};

    fn person(id: usize, x: u16, y: u16, status: InfectionStatus) -> Customer {
        Customer::scripted(id, CellCoord::new(x, y), CustomerState::ToExit, status, 0)
    }

    fn sus() -> InfectionStatus {
        InfectionStatus::Susceptible { exposure_seconds: 0 }
    }

    /// The worked example: infective at the origin, customer 1 one cell
    /// north (5'), customer 2 one cell diagonal (~7.07'), customer 3 two
    /// cells east and one north (~11.18').
    fn figure_five() -> Vec<Customer> {
        vec![
            person(0, 5, 5, InfectionStatus::SeedInfective),
            person(1, 5, 6, sus()),
            person(2, 6, 6, sus()),
            person(3, 7, 6, sus()),
        ]
    }

    #[test]
    fn six_feet_reaches_only_the_orthogonal_neighbor() {
        let inc = accrue_exposure(&figure_five(), &vulnerable_neighborhood(6.0, 5.0), Accrual::PerTick);
        assert_eq!(inc, vec![0, 1, 0, 0]);
    }

    #[test]
    fn eight_feet_adds_the_diagonal() {
        let inc = accrue_exposure(&figure_five(), &vulnerable_neighborhood(8.0, 5.0), Accrual::PerTick);
        assert_eq!(inc, vec![0, 1, 1, 0]);
    }

    #[test]
    fn no_infectives_no_increments() {
        let people = vec![person(0, 1, 1, sus()), person(1, 1, 1, sus())];
        let inc = accrue_exposure(&people, &vulnerable_neighborhood(12.0, 5.0), Accrual::PerTick);
        assert_eq!(inc, vec![0, 0]);
    }

    #[test]
    fn per_tick_caps_and_per_infective_counts() {
        let people = vec![
            person(0, 2, 2, InfectionStatus::SeedInfective),
            person(1, 2, 4, InfectionStatus::SeedInfective),
            person(2, 2, 3, sus()),
        ];
        let mask = vulnerable_neighborhood(6.0, 5.0);
        assert_eq!(accrue_exposure(&people, &mask, Accrual::PerTick), vec![0, 0, 1]);
        assert_eq!(accrue_exposure(&people, &mask, Accrual::PerInfective), vec![0, 0, 2]);
    }

    #[test]
    fn threshold_is_inclusive() {
        let params = ExposureParams {
            threshold_seconds: 120,
            ..ExposureParams::default()
        };
        assert_eq!(
            check_infection(InfectionStatus::Susceptible { exposure_seconds: 120 }, &params, 7),
            InfectionStatus::NewlyInfected { at_tick: 7, infective: false, exposure_seconds: 120 }
        );
        assert_eq!(
            check_infection(InfectionStatus::Susceptible { exposure_seconds: 119 }, &params, 7),
            InfectionStatus::Susceptible { exposure_seconds: 119 }
        );
        let spread = ExposureParams { newly_infected_spread: true, ..params };
        assert!(check_infection(InfectionStatus::Susceptible { exposure_seconds: 500 }, &spread, 1).is_infective());
    }

    #[test]
    fn newly_infected_without_spread_is_not_a_source() {
        let people = vec![
            person(0, 2, 2, InfectionStatus::NewlyInfected { at_tick: 1, infective: false, exposure_seconds: 9 }),
            person(1, 2, 3, sus()),
        ];
        let inc = accrue_exposure(&people, &vulnerable_neighborhood(6.0, 5.0), Accrual::PerTick);
        assert_eq!(inc, vec![0, 0]);
    }

    #[test]
    fn params_validation() {
        assert!(ExposureParams::default().validate().is_ok());
        let bad = [
            ExposureParams { max_distance_feet: 0.0, ..Default::default() },
            ExposureParams { threshold_seconds: 0, ..Default::default() },
            ExposureParams { seed_fraction: 1.5, ..Default::default() },
        ];
        for p in bad {
            assert!(p.validate().is_err(), "{p:?}");
        }
    }

    #[test]
    fn tracker_matches_pairwise_distance_oracle() {
        // Oracle: brute-force center distances, no masks or indexes.
        let mut rng = crate::rng::seeded(5);
        use rand::Rng;
        for accrual in [Accrual::PerTick, Accrual::PerInfective] {
            for &d in &[6.0, 8.0, 10.0, 12.0] {
                let params = ExposureParams { max_distance_feet: d, threshold_seconds: 10_000, ..Default::default() };
                let mut tracker = ExposureTracker::new(params, accrual, 5.0);
                let n = 60;
                let positions: Vec<CellCoord> = (0..n)
                    .map(|_| CellCoord::new(rng.random_range(0..12), rng.random_range(0..12)))
                    .collect();
                let infective: Vec<bool> = (0..n).map(|_| rng.random_bool(0.15)).collect();
                for (id, &inf) in infective.iter().enumerate() {
                    tracker.admit(id, if inf { InfectionStatus::SeedInfective } else { sus() });
                }
                let mut occ = Occupancy::new(12, 12);
                occ.rebuild(positions.iter().copied().enumerate());
                let active: Vec<usize> = (0..n).collect();
                tracker.step(0, &active, &positions, &occ);
                for id in 0..n {
                    let near = (0..n)
                        .filter(|&j| infective[j] && center_distance(positions[j], positions[id], 5.0) <= d)
                        .count() as u32;
                    let want = if infective[id] {
                        0
                    } else if accrual == Accrual::PerTick {
                        near.min(1)
                    } else {
                        near
                    };
                    assert_eq!(tracker.status(id).exposure_seconds(), want, "d={d} id={id}");
                }
            }
        }
    }

    #[test]
    fn tracker_infects_after_threshold() {
        let params = ExposureParams { threshold_seconds: 2, newly_infected_spread: true, ..Default::default() };
        let mut tracker = ExposureTracker::new(params, Accrual::PerTick, 5.0);
        tracker.admit(0, InfectionStatus::SeedInfective);
        tracker.admit(1, sus());
        let positions = vec![CellCoord::new(1, 1), CellCoord::new(1, 2)];
        let mut occ = Occupancy::new(4, 4);
        occ.rebuild(positions.iter().copied().enumerate());
        assert!(tracker.step(1, &[0, 1], &positions, &occ).is_empty());
        assert_eq!(tracker.step(2, &[0, 1], &positions, &occ), vec![1]);
        assert!(tracker.status(1).is_infective());
        assert_eq!(tracker.status(1).exposure_seconds(), 2);
    }
}
