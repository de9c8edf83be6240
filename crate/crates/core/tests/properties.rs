use std::collections::VecDeque;

use proptest::prelude::*;
use rushsim::grid::{
    center_distance, generate_default_layout, parse_layout, vulnerable_neighborhood, CellCoord, CellKind, StoreLayout,
};
use rushsim::pathfind::{plan_path, PathfindMode};
use rushsim::report::{parse_results_csv, render_layout, results_csv, ResultRow};

fn coord() -> impl Strategy<Value = CellCoord> {
    (0u16..200, 0u16..200).prop_map(|(x, y)| CellCoord::new(x, y))
}

/// Open/blocked grid from a bit vector.
fn grid(width: usize, height: usize, blocked: &[bool]) -> StoreLayout {
    let cells = blocked
        .iter()
        .map(|&b| if b { CellKind::Blocked } else { CellKind::Open })
        .collect();
    StoreLayout::from_cells(width, height, 5.0, cells).unwrap()
}

/// Plain BFS over the blocked mask, independent of the library.
fn bfs_steps(w: usize, h: usize, blocked: &[bool], s: (usize, usize), g: (usize, usize)) -> Option<usize> {
    let mut dist = vec![usize::MAX; w * h];
    dist[s.1 * w + s.0] = 0;
    let mut q = VecDeque::from([s]);
    while let Some((x, y)) = q.pop_front() {
        if (x, y) == g {
            return Some(dist[y * w + x]);
        }
        let d = dist[y * w + x];
        let nbrs = [(x + 1, y), (x.wrapping_sub(1), y), (x, y + 1), (x, y.wrapping_sub(1))];
        for (nx, ny) in nbrs {
            if nx < w && ny < h && !blocked[ny * w + nx] && dist[ny * w + nx] == usize::MAX {
                dist[ny * w + nx] = d + 1;
                q.push_back((nx, ny));
            }
        }
    }
    None
}

proptest! {
    #[test]
    fn distance_is_symmetric(a in coord(), b in coord()) {
        prop_assert_eq!(center_distance(a, b, 5.0), center_distance(b, a, 5.0));
        prop_assert_eq!(center_distance(a, a, 5.0), 0.0);
    }

    #[test]
    fn distance_triangle_inequality(a in coord(), b in coord(), c in coord()) {
        let (ab, bc, ac) = (center_distance(a, b, 5.0), center_distance(b, c, 5.0), center_distance(a, c, 5.0));
        prop_assert!(ac <= ab + bc + 1e-9);
    }

    #[test]
    fn neighborhood_matches_distance_rule(d in 0.0f64..30.0) {
        let mask = vulnerable_neighborhood(d, 5.0);
        let o = CellCoord::new(10, 10);
        for dy in -7i32..=7 {
            for dx in -7i32..=7 {
                let c = CellCoord::new((10 + dx) as u16, (10 + dy) as u16);
                prop_assert_eq!(mask.contains(dx, dy), center_distance(o, c, 5.0) <= d + 1e-9);
            }
        }
    }

    #[test]
    fn standard_astar_equals_bfs(
        blocked in proptest::collection::vec(proptest::bool::weighted(0.2), 400),
        s in (0usize..20, 0usize..20),
        g in (0usize..20, 0usize..20),
    ) {
        let mut blocked = blocked;
        blocked[s.1 * 20 + s.0] = false;
        blocked[g.1 * 20 + g.0] = false;
        let layout = grid(20, 20, &blocked);
        let (sc, gc) = (CellCoord::new(s.0 as u16, s.1 as u16), CellCoord::new(g.0 as u16, g.1 as u16));
        match bfs_steps(20, 20, &blocked, s, g) {
            Some(steps) => {
                let p = plan_path(&layout, sc, gc, PathfindMode::Standard).unwrap();
                prop_assert_eq!(p.steps(), steps);
                prop_assert!(p.is_valid_in(&layout));
                let lit = plan_path(&layout, sc, gc, PathfindMode::PaperLiteral).unwrap();
                prop_assert!(lit.is_valid_in(&layout));
                prop_assert!(lit.steps() >= steps);
            }
            None => {
                prop_assert!(plan_path(&layout, sc, gc, PathfindMode::Standard).is_err());
                prop_assert!(plan_path(&layout, sc, gc, PathfindMode::PaperLiteral).is_err());
            }
        }
    }

    #[test]
    fn results_csv_round_trip(rows in proptest::collection::vec(
        (0u32..100_000, 1u32..4000, 0u32..=1_000_000, any::<bool>(), any::<u64>(), (0usize..7000, 0usize..7000, 0usize..7000, 0usize..7000, 0usize..7000)),
        0..20,
    )) {
        // Floats on a 1e-6 grid survive six-decimal formatting exactly.
        let rows: Vec<ResultRow> = rows
            .into_iter()
            .map(|(d, t, p, spread, seed, (a, b, c, e, f))| ResultRow {
                distance_ft: f64::from(d) / 1000.0,
                threshold_s: t,
                seed_fraction: f64::from(p) / 1_000_000.0,
                spread,
                seed,
                starting_infective: a,
                newly_infected: b,
                total_customers: c,
                spawned: e,
                still_in_store: f,
            })
            .collect();
        let text = results_csv(&rows);
        prop_assert_eq!(text.lines().count(), rows.len() + 1);
        prop_assert_eq!(parse_results_csv(&text).unwrap(), rows);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn generated_layouts_round_trip(seed in any::<u64>()) {
        let layout = generate_default_layout(seed).unwrap();
        let text = render_layout(&layout);
        prop_assert_eq!(parse_layout(&text).unwrap(), layout.clone());
        prop_assert_eq!(layout.products.len(), 34);
        prop_assert_eq!(layout.checkouts.len(), 21);
    }
}
