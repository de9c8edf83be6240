//! Deterministic arrival stream driven by a fractional accumulator.

use std::fmt;

use thiserror::Error;

/// Absorbs floating-point drift in repeated rate sums such as 3 × (1/3).
const ROUNDING_GUARD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phase {
    pub start_s: u32,
    pub end_s: u32,
    /// Customers per second.
    pub rate: f64,
}

impl Phase {
    pub fn expected_arrivals(&self) -> f64 {
        f64::from(self.end_s - self.start_s) * self.rate
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.start_s, self.end_s, self.rate)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("phase {index} starts at {start}s, expected {expected}s")]
    Gap { index: usize, start: u32, expected: u32 },
    #[error("phase {index} is empty or reversed")]
    EmptyPhase { index: usize },
    #[error("phase {index} has invalid rate {rate}")]
    BadRate { index: usize, rate: f64 },
    #[error("cannot parse phase `{0}`, expected `start_s,end_s,rate_per_s`")]
    Parse(String),
}

/// Piecewise-constant arrival rates. Phases are contiguous from t = 0;
/// ticks past the last phase have no arrivals.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalSchedule {
    pub phases: Vec<Phase>,
}

impl Default for ArrivalSchedule {
    /// The Black Friday rush: two customers every 1.5 s for half an hour,
    /// one every 1.5 s for the next half hour, one every 3 s for an hour,
    /// then one every 6 s for two hours.
    fn default() -> Self {
        Self {
            phases: vec![
                Phase { start_s: 0, end_s: 1800, rate: 2.0 / 1.5 },
                Phase { start_s: 1800, end_s: 3600, rate: 1.0 / 1.5 },
                Phase { start_s: 3600, end_s: 7200, rate: 1.0 / 3.0 },
                Phase { start_s: 7200, end_s: 14400, rate: 1.0 / 6.0 },
            ],
        }
    }
}

impl ArrivalSchedule {
    pub fn empty() -> Self {
        Self { phases: Vec::new() }
    }

    pub fn validate(&self) -> Result<(), ScheduleError> {
        let mut expected = 0;
        for (index, p) in self.phases.iter().enumerate() {
            if p.start_s != expected {
                return Err(ScheduleError::Gap {
                    index,
                    start: p.start_s,
                    expected,
                });
            }
            if p.end_s <= p.start_s {
                return Err(ScheduleError::EmptyPhase { index });
            }
            if !(p.rate.is_finite() && p.rate >= 0.0) {
                return Err(ScheduleError::BadRate { index, rate: p.rate });
            }
            expected = p.end_s;
        }
        Ok(())
    }

    pub fn rate_at(&self, tick: u32) -> f64 {
        self.phases
            .iter()
            .find(|p| (p.start_s..p.end_s).contains(&tick))
            .map_or(0.0, |p| p.rate)
    }

    pub fn end_s(&self) -> u32 {
        self.phases.last().map_or(0, |p| p.end_s)
    }

    pub fn parse_phase(text: &str) -> Result<Phase, ScheduleError> {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        let err = || ScheduleError::Parse(text.to_string());
        if parts.len() != 3 {
            return Err(err());
        }
        Ok(Phase {
            start_s: parts[0].parse().map_err(|_| err())?,
            end_s: parts[1].parse().map_err(|_| err())?,
            rate: parse_rate(parts[2]).ok_or_else(err)?,
        })
    }
}

/// Accepts plain decimals and `a/b` fractions such as `1/1.5`.
fn parse_rate(s: &str) -> Option<f64> {
    match s.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().ok()?;
            let den: f64 = den.trim().parse().ok()?;
            (den != 0.0).then(|| num / den)
        }
        None => s.parse().ok(),
    }
}

/// Advances the accumulator by one second at `tick` and returns how many
/// customers spawn, together with the new accumulator value in [0, 1).
pub fn arrivals_due(schedule: &ArrivalSchedule, tick: u32, accumulator: f64) -> (u32, f64) {
    let acc = accumulator + schedule.rate_at(tick);
    let count = (acc + ROUNDING_GUARD).floor();
    let rest = acc - count;
    (count as u32, if rest < 0.0 { 0.0 } else { rest })
}
