//! A* routing over a store layout.
//!
//! Two scoring modes share one search loop:
//!
//! * [`PathfindMode::PaperLiteral`] scores a node's `g` as the straight-line
//!   distance from the start cell, so `g` does not depend on the route taken
//!   and nodes are never relaxed. Routes are valid but not always shortest.
//! * [`PathfindMode::Standard`] uses the accumulated step cost as `g`, which
//!   with the Manhattan heuristic yields shortest 4-connected routes.
//!
//! In both modes the open node with the smallest `f` is expanded first, ties
//! go to the smaller `g`, and any remaining tie to the node discovered first
//! (neighbors are discovered North, East, South, West).

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::grid::{center_distance, CellCoord, StoreLayout};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum PathfindMode {
    PaperLiteral,
    #[default]
    Standard,
}

impl fmt::Display for PathfindMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PathfindMode::PaperLiteral => "paper_literal",
            PathfindMode::Standard => "standard",
        })
    }
}

impl FromStr for PathfindMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "paper_literal" | "literal" => Ok(PathfindMode::PaperLiteral),
            "standard" => Ok(PathfindMode::Standard),
            other => Err(format!("unknown pathfind mode `{other}`")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PathError {
    #[error("no path from {from} to {to}")]
    NoPath { from: CellCoord, to: CellCoord },
    #[error("endpoint {0} is blocked or outside the grid")]
    InvalidEndpoint(CellCoord),
}

/// A route from start to goal, both inclusive.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub cells: Vec<CellCoord>,
    pub cell_size_feet: f64,
}

impl Path {
    pub fn steps(&self) -> usize {
        self.cells.len().saturating_sub(1)
    }

    pub fn length_feet(&self) -> f64 {
        self.steps() as f64 * self.cell_size_feet
    }

    pub fn start(&self) -> CellCoord {
        self.cells[0]
    }

    pub fn goal(&self) -> CellCoord {
        *self.cells.last().expect("paths hold at least one cell")
    }

    /// Consecutive cells are 4-neighbors and every cell is traversable.
    pub fn is_valid_in(&self, layout: &StoreLayout) -> bool {
        !self.cells.is_empty()
            && self.cells.iter().all(|&c| layout.is_traversable(c))
            && self.cells.windows(2).all(|w| w[0].manhattan(w[1]) == 1)
    }
}

/// Straight-line distance between the start cell and the current cell.
pub fn g_score(initial: CellCoord, current: CellCoord, cell_size_feet: f64) -> f64 {
    center_distance(initial, current, cell_size_feet)
}

/// Manhattan distance to the target, in feet.
pub fn h_score(current: CellCoord, target: CellCoord, cell_size_feet: f64) -> f64 {
    f64::from(current.manhattan(target)) * cell_size_feet
}

pub fn f_score(g: f64, h: f64) -> f64 {
    g + h
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredNode {
    pub coord: CellCoord,
    pub g: f64,
    pub h: f64,
    pub f: f64,
    pub parent: Option<CellCoord>,
}

impl ScoredNode {
    fn new(coord: CellCoord, g: f64, h: f64, parent: Option<CellCoord>) -> Self {
        Self {
            coord,
            g,
            h,
            f: f_score(g, h),
            parent,
        }
    }
}

/// Heap entry; `BinaryHeap` is a max-heap so the ordering is reversed.
struct OpenEntry {
    f: f64,
    g: f64,
    seq: u64,
    index: usize,
}

impl Ord for OpenEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.g.total_cmp(&self.g))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for OpenEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for OpenEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for OpenEntry {}

fn check_endpoints(layout: &StoreLayout, start: CellCoord, goal: CellCoord) -> Result<(), PathError> {
    for c in [start, goal] {
        if !layout.is_traversable(c) {
            return Err(PathError::InvalidEndpoint(c));
        }
    }
    Ok(())
}

pub fn plan_path(
    layout: &StoreLayout,
    start: CellCoord,
    goal: CellCoord,
    mode: PathfindMode,
) -> Result<Path, PathError> {
    check_endpoints(layout, start, goal)?;
    let cell = layout.cell_size_feet;
    let n = layout.cells.len();
    let mut nodes: Vec<Option<ScoredNode>> = vec![None; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    let mut seq = 0u64;

    let start_idx = layout.index(start);
    let first = ScoredNode::new(start, 0.0, h_score(start, goal, cell), None);
    nodes[start_idx] = Some(first);
    open.push(OpenEntry {
        f: first.f,
        g: first.g,
        seq,
        index: start_idx,
    });

    while let Some(entry) = open.pop() {
        if closed[entry.index] {
            continue;
        }
        let node = nodes[entry.index].expect("queued nodes are scored");
        // Stale heap entry left behind by a relaxation.
        if node.g.total_cmp(&entry.g) != Ordering::Equal {
            continue;
        }
        closed[entry.index] = true;
        if node.coord == goal {
            return Ok(reconstruct(layout, &nodes, goal));
        }
        for next in layout.neighbors(node.coord) {
            let idx = layout.index(next);
            if closed[idx] {
                continue;
            }
            let g = match mode {
                PathfindMode::PaperLiteral => g_score(start, next, cell),
                PathfindMode::Standard => node.g + cell,
            };
            let improves = match (&nodes[idx], mode) {
                (None, _) => true,
                (Some(_), PathfindMode::PaperLiteral) => false,
                (Some(prev), PathfindMode::Standard) => g < prev.g,
            };
            if improves {
                let scored = ScoredNode::new(next, g, h_score(next, goal, cell), Some(node.coord));
                nodes[idx] = Some(scored);
                seq += 1;
                open.push(OpenEntry {
                    f: scored.f,
                    g: scored.g,
                    seq,
                    index: idx,
                });
            }
        }
    }
    Err(PathError::NoPath { from: start, to: goal })
}

fn reconstruct(layout: &StoreLayout, nodes: &[Option<ScoredNode>], goal: CellCoord) -> Path {
    let mut cells = vec![goal];
    let mut cur = goal;
    while let Some(parent) = nodes[layout.index(cur)].and_then(|n| n.parent) {
        cells.push(parent);
        cur = parent;
    }
    cells.reverse();
    Path {
        cells,
        cell_size_feet: layout.cell_size_feet,
    }
}

/// Exact 4-connected step count by breadth-first search. Test oracle for
/// [`plan_path`].
pub fn bfs_shortest_length(
    layout: &StoreLayout,
    start: CellCoord,
    goal: CellCoord,
) -> Result<usize, PathError> {
    check_endpoints(layout, start, goal)?;
    let dist = bfs_distances(layout, start);
    dist[layout.index(goal)]
        .map(|d| d as usize)
        .ok_or(PathError::NoPath { from: start, to: goal })
}

/// Step distance from `origin` to every cell; `None` where unreachable.
pub fn bfs_distances(layout: &StoreLayout, origin: CellCoord) -> Vec<Option<u32>> {
    let mut dist = vec![None; layout.cells.len()];
    if !layout.is_traversable(origin) {
        return dist;
    }
    dist[layout.index(origin)] = Some(0);
    let mut queue = VecDeque::from([origin]);
    while let Some(c) = queue.pop_front() {
        let d = dist[layout.index(c)].expect("queued cells have distances");
        for n in layout.neighbors(c) {
            let i = layout.index(n);
            if dist[i].is_none() {
                dist[i] = Some(d + 1);
                queue.push_back(n);
            }
        }
    }
    dist
}
