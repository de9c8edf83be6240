use std::collections::{BTreeSet, HashMap};

use rushsim::agents::AgentEventKind;
use rushsim::arrivals::{ArrivalSchedule, Phase};
use rushsim::report::{customers_csv, render_snapshot, results_csv, snapshot_population, ResultRow};
use rushsim::{run, run_batch, Engine, ExposureParams, SimulationConfig};

fn exposure(d: f64, t: u32, p: f64, spread: bool) -> ExposureParams {
    ExposureParams {
        max_distance_feet: d,
        threshold_seconds: t,
        seed_fraction: p,
        newly_infected_spread: spread,
    }
}

/// The first hour of the rush, with time to drain.
fn short_config(seed: u64) -> SimulationConfig {
    SimulationConfig {
        seed,
        schedule: ArrivalSchedule {
            phases: vec![Phase { start_s: 0, end_s: 1200, rate: 2.0 / 1.5 }],
        },
        duration_seconds: 2400,
        log_events: true,
        ..SimulationConfig::default()
    }
}

#[test]
fn same_seed_same_bytes() {
    let a = run(short_config(5)).unwrap();
    let b = run(short_config(5)).unwrap();
    assert_eq!(results_csv(&[ResultRow::from(&a)]), results_csv(&[ResultRow::from(&b)]));
    assert_eq!(customers_csv(&a.records), customers_csv(&b.records));
    assert_eq!(a.events, b.events);
    let c = run(short_config(6)).unwrap();
    assert_ne!(customers_csv(&a.records), customers_csv(&c.records));
}

#[test]
fn exposure_settings_do_not_move_anyone() {
    let base = run(SimulationConfig {
        exposure: exposure(6.0, 900, 0.0, false),
        ..short_config(9)
    })
    .unwrap();
    for e in [exposure(12.0, 30, 0.2, true), exposure(8.0, 120, 0.05, false)] {
        let other = run(SimulationConfig { exposure: e, ..short_config(9) }).unwrap();
        assert_eq!(other.trajectories, base.trajectories);
        let exits = |r: &rushsim::RunResult| r.records.iter().map(|c| c.exit_tick).collect::<Vec<_>>();
        assert_eq!(exits(&other), exits(&base));
    }
}

#[test]
fn batch_equals_separate_runs() {
    let params = [exposure(6.0, 120, 0.05, false), exposure(12.0, 60, 0.02, true), exposure(10.0, 300, 0.1, false)];
    let batch = run_batch(short_config(3), &params).unwrap();
    for (p, b) in params.iter().zip(&batch) {
        let single = run(SimulationConfig { exposure: *p, ..short_config(3) }).unwrap();
        assert_eq!(single.records, b.records);
        assert_eq!(single.newly_infected, b.newly_infected);
        assert_eq!(single.starting_infective, b.starting_infective);
    }
}

#[test]
fn zero_seed_fraction_infects_nobody() {
    let r = run(SimulationConfig {
        exposure: exposure(12.0, 1, 0.0, true),
        ..short_config(2)
    })
    .unwrap();
    assert_eq!((r.starting_infective, r.newly_infected, r.newly_infected_in_store), (0, 0, 0));
}

#[test]
fn population_and_time_budget_accounting() {
    let cfg = SimulationConfig {
        exposure: exposure(12.0, 60, 0.05, true),
        ..short_config(11)
    };
    let mut engine = Engine::new(cfg.clone()).unwrap();
    while !engine.is_finished() {
        engine.tick().unwrap();
        let exited = engine.customers().iter().filter(|c| c.is_exited()).count();
        assert_eq!(engine.spawned(), exited + engine.active().len(), "tick {}", engine.now());
    }
    let r = engine.finish();
    assert_eq!(r.spawned, r.total_customers + r.still_in_store);
    assert!(r.newly_infected + r.starting_infective <= r.total_customers);
    for c in &r.records {
        let in_store = c.ticks_in_store(cfg.duration_seconds);
        assert!(c.status.exposure_seconds() <= in_store, "customer {}", c.id);
        if let Some(exit) = c.exit_tick {
            assert_eq!(exit - c.entry_tick, c.budget.total(), "customer {}", c.id);
        }
    }
}

#[test]
fn every_product_visited_once_before_checkout() {
    let r = run(short_config(21)).unwrap();
    let mut picked: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut queued = BTreeSet::new();
    for e in &r.events {
        match e.kind {
            AgentEventKind::Pickup(p) => {
                assert!(!queued.contains(&e.customer), "pickup after queueing");
                picked.entry(e.customer).or_default().push(p.0);
            }
            AgentEventKind::QueueJoin(_) => {
                queued.insert(e.customer);
            }
            _ => {}
        }
    }
    for rec in r.records.iter().filter(|c| c.exit_tick.is_some()) {
        let mut got = picked.remove(&rec.id).unwrap_or_default();
        assert_eq!(got.len(), rec.list_size, "customer {}", rec.id);
        got.sort_unstable();
        got.dedup();
        assert_eq!(got.len(), rec.list_size, "customer {} repeated a product", rec.id);
    }
}

#[test]
fn raising_parameters_never_lowers_infections() {
    for seed in [1, 2] {
        let grid = [
            exposure(6.0, 120, 0.05, false),
            exposure(12.0, 120, 0.05, false),
            exposure(12.0, 60, 0.05, false),
            exposure(12.0, 60, 0.10, false),
            exposure(12.0, 60, 0.10, true),
        ];
        let n: Vec<usize> = run_batch(short_config(seed), &grid)
            .unwrap()
            .iter()
            .map(|r| r.newly_infected)
            .collect();
        assert!(n.windows(2).all(|w| w[0] <= w[1]), "seed {seed}: {n:?}");
    }
}

#[test]
fn snapshots_count_the_people_inside() {
    let r = run(SimulationConfig {
        log_events: true,
        ..SimulationConfig::default()
    })
    .unwrap();
    let layout = &r.config.layout;
    let base: Vec<char> = rushsim::report::render_layout(layout)
        .lines()
        .skip(1)
        .flat_map(str::chars)
        .collect();
    assert_eq!(render_snapshot(&r, 0).unwrap().lines().flat_map(str::chars).collect::<Vec<_>>(), base);
    for t in [1, 600, 3600, 9000] {
        // Oracle: spawns minus exits strictly before tick t, from the event log.
        let spawned = r.events.iter().filter(|e| e.tick < t && matches!(e.kind, AgentEventKind::Spawn { .. })).count();
        let exited = r.events.iter().filter(|e| e.tick < t && matches!(e.kind, AgentEventKind::Exit(_))).count();
        assert_eq!(snapshot_population(&r, t), spawned - exited, "t={t}");

        let mut counts = vec![0u32; layout.width * layout.height];
        let traj = r.trajectories.as_ref().unwrap();
        for rec in r.records.iter().filter(|c| c.entry_tick < t && c.exit_tick.is_none_or(|e| e >= t)) {
            let pos = traj[rec.id][(t - 1 - rec.entry_tick) as usize];
            counts[usize::from(layout.height as u16 - 1 - pos.y) * layout.width + usize::from(pos.x)] += 1;
        }
        let drawn: Vec<char> = render_snapshot(&r, t).unwrap().lines().flat_map(str::chars).collect();
        for (i, (&d, &b)) in drawn.iter().zip(&base).enumerate() {
            let want = match counts[i] {
                0 => b,
                n => char::from_digit(n.min(9), 10).unwrap(),
            };
            assert_eq!(d, want, "t={t} cell {i}");
        }
        assert_eq!(counts.iter().sum::<u32>() as usize, spawned - exited);
    }
    let at_hour = snapshot_population(&r, 3600);
    assert!((200..1000).contains(&at_hour), "{at_hour}");
    assert!(render_snapshot(&r, 14_401).is_err());
}
