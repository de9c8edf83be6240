//! Discretized store world: cell semantics, layout files, generation,
//! validation and center-to-center distance geometry.

use std::collections::VecDeque;
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::rng::{self, SimRng};

/// Seed of the canonical default layout.
pub const DEFAULT_LAYOUT_SEED: u64 = 0x005E_EDB1_ACF2_1DA7;

pub const DEFAULT_WIDTH: usize = 80;
pub const DEFAULT_HEIGHT: usize = 60;
pub const DEFAULT_CELL_FEET: f64 = 5.0;
pub const DEFAULT_PRODUCTS: usize = 34;
pub const DEFAULT_LANES: usize = 21;

/// Lane glyphs in id order; a layout file can name at most this many lanes.
pub const LANE_GLYPHS: &[u8] = b"0123456789abcdefghijk";

/// Grid position. `x` grows rightward, `y` grows upward; (0,0) is the
/// bottom-left cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellCoord {
    pub x: u16,
    pub y: u16,
}

impl CellCoord {
    pub const fn new(x: u16, y: u16) -> Self {
        Self { x, y }
    }

    pub fn manhattan(self, other: CellCoord) -> u32 {
        u32::from(self.x.abs_diff(other.x)) + u32::from(self.y.abs_diff(other.y))
    }

    pub fn offset(self, dx: i32, dy: i32) -> Option<CellCoord> {
        let x = i32::from(self.x) + dx;
        let y = i32::from(self.y) + dy;
        if (0..=i32::from(u16::MAX)).contains(&x) && (0..=i32::from(u16::MAX)).contains(&y) {
            Some(CellCoord::new(x as u16, y as u16))
        } else {
            None
        }
    }
}

impl fmt::Display for CellCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProductId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LaneId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CheckoutSlot {
    Register,
    Queue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellKind {
    Open,
    Blocked,
    Product(ProductId),
    Checkout { lane: LaneId, slot: CheckoutSlot },
    Entrance(usize),
    Exit(usize),
}

impl CellKind {
    pub fn is_traversable(self) -> bool {
        !matches!(self, CellKind::Blocked)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CheckoutLane {
    pub id: LaneId,
    pub register: CellCoord,
    pub queue: CellCoord,
}

/// The discretized store. Registries are kept in scan order (ascending
/// `y`, then ascending `x`), which is also how ids are assigned.
#[derive(Debug, Clone, PartialEq)]
pub struct StoreLayout {
    pub width: usize,
    pub height: usize,
    pub cell_size_feet: f64,
    pub cells: Vec<CellKind>,
    pub products: Vec<CellCoord>,
    pub checkouts: Vec<CheckoutLane>,
    pub entrances: Vec<CellCoord>,
    pub exits: Vec<CellCoord>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LayoutError {
    #[error("malformed grid at line {line}: {reason}")]
    MalformedGrid { line: usize, reason: String },
    #[error("registry mismatch: {0}")]
    RegistryMismatch(String),
    #[error("cell {0} is not reachable from every entrance")]
    UnreachableCell(CellCoord),
    #[error("layout generation failed: {0}")]
    GenerationFailed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DimensionMismatch { expected: usize, actual: usize },
    RegistryMismatch { coord: Option<CellCoord>, detail: String },
    UnreachableCell(CellCoord),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DimensionMismatch { expected, actual } => {
                write!(f, "cell array holds {actual} cells, expected {expected}")
            }
            Violation::RegistryMismatch { coord: Some(c), detail } => {
                write!(f, "registry mismatch at {c}: {detail}")
            }
            Violation::RegistryMismatch { coord: None, detail } => {
                write!(f, "registry mismatch: {detail}")
            }
            Violation::UnreachableCell(c) => write!(f, "cell {c} unreachable from an entrance"),
        }
    }
}

impl From<Violation> for LayoutError {
    fn from(v: Violation) -> Self {
        match v {
            Violation::UnreachableCell(c) => LayoutError::UnreachableCell(c),
            other => LayoutError::RegistryMismatch(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl StoreLayout {
    /// Builds a layout from a dense cell array, deriving every registry
    /// from the cell kinds and validating the result.
    pub fn from_cells(
        width: usize,
        height: usize,
        cell_size_feet: f64,
        cells: Vec<CellKind>,
    ) -> Result<Self, LayoutError> {
        if cells.len() != width * height {
            return Err(LayoutError::MalformedGrid {
                line: 0,
                reason: format!("{} cells for a {width}x{height} grid", cells.len()),
            });
        }
        let mut products = Vec::new();
        let mut entrances = Vec::new();
        let mut exits = Vec::new();
        let mut lanes: Vec<(Option<CellCoord>, Option<CellCoord>)> = Vec::new();
        for y in 0..height {
            for x in 0..width {
                let c = CellCoord::new(x as u16, y as u16);
                match cells[y * width + x] {
                    CellKind::Product(_) => products.push(c),
                    CellKind::Entrance(_) => entrances.push(c),
                    CellKind::Exit(_) => exits.push(c),
                    CellKind::Checkout { lane, slot } => {
                        if lanes.len() <= lane.0 {
                            lanes.resize(lane.0 + 1, (None, None));
                        }
                        let entry = match slot {
                            CheckoutSlot::Register => &mut lanes[lane.0].0,
                            CheckoutSlot::Queue => &mut lanes[lane.0].1,
                        };
                        if entry.is_some() {
                            return Err(LayoutError::RegistryMismatch(format!(
                                "lane {} has two {slot:?} cells",
                                lane.0
                            )));
                        }
                        *entry = Some(c);
                    }
                    CellKind::Open | CellKind::Blocked => {}
                }
            }
        }
        let mut checkouts = Vec::with_capacity(lanes.len());
        for (i, lane) in lanes.into_iter().enumerate() {
            match lane {
                (Some(register), Some(queue)) => checkouts.push(CheckoutLane {
                    id: LaneId(i),
                    register,
                    queue,
                }),
                _ => {
                    return Err(LayoutError::RegistryMismatch(format!(
                        "checkout lane {i} is not a register/queue pair"
                    )))
                }
            }
        }
        let mut layout = StoreLayout {
            width,
            height,
            cell_size_feet,
            cells,
            products,
            checkouts,
            entrances,
            exits,
        };
        layout.renumber();
        if let Some(v) = validate_layout(&layout).violations.into_iter().next() {
            return Err(v.into());
        }
        Ok(layout)
    }

    /// Rewrites product/entrance/exit ids in the cell array so they match
    /// registry positions.
    fn renumber(&mut self) {
        for (i, c) in self.products.clone().into_iter().enumerate() {
            let idx = self.index(c);
            self.cells[idx] = CellKind::Product(ProductId(i));
        }
        for (i, c) in self.entrances.clone().into_iter().enumerate() {
            let idx = self.index(c);
            self.cells[idx] = CellKind::Entrance(i);
        }
        for (i, c) in self.exits.clone().into_iter().enumerate() {
            let idx = self.index(c);
            self.cells[idx] = CellKind::Exit(i);
        }
    }

    pub fn contains(&self, c: CellCoord) -> bool {
        usize::from(c.x) < self.width && usize::from(c.y) < self.height
    }

    pub fn index(&self, c: CellCoord) -> usize {
        usize::from(c.y) * self.width + usize::from(c.x)
    }

    pub fn coord(&self, index: usize) -> CellCoord {
        CellCoord::new((index % self.width) as u16, (index / self.width) as u16)
    }

    pub fn kind(&self, c: CellCoord) -> Option<CellKind> {
        self.contains(c).then(|| self.cells[self.index(c)])
    }

    pub fn is_traversable(&self, c: CellCoord) -> bool {
        self.kind(c).is_some_and(CellKind::is_traversable)
    }

    pub fn floor_area_sqft(&self) -> f64 {
        (self.width * self.height) as f64 * self.cell_size_feet * self.cell_size_feet
    }

    pub fn product_cell(&self, id: ProductId) -> CellCoord {
        self.products[id.0]
    }

    /// Traversable 4-neighbors in North, East, South, West order.
    pub fn neighbors(&self, c: CellCoord) -> impl Iterator<Item = CellCoord> + '_ {
        const DIRS: [(i32, i32); 4] = [(0, 1), (1, 0), (0, -1), (-1, 0)];
        DIRS.iter()
            .filter_map(move |&(dx, dy)| c.offset(dx, dy))
            .filter(move |&n| self.is_traversable(n))
    }

    /// Cells reachable from `start` over traversable cells.
    pub fn reachable_from(&self, start: CellCoord) -> Vec<bool> {
        let mut seen = vec![false; self.cells.len()];
        if !self.is_traversable(start) {
            return seen;
        }
        let mut queue = VecDeque::from([start]);
        seen[self.index(start)] = true;
        while let Some(c) = queue.pop_front() {
            for n in self.neighbors(c) {
                let i = self.index(n);
                if !seen[i] {
                    seen[i] = true;
                    queue.push_back(n);
                }
            }
        }
        seen
    }
}

/// Distance in feet between two cell centers.
pub fn center_distance(a: CellCoord, b: CellCoord, cell_size_feet: f64) -> f64 {
    let dx = f64::from(a.x) - f64::from(b.x);
    let dy = f64::from(a.y) - f64::from(b.y);
    cell_size_feet * dx.hypot(dy)
}

/// Offsets whose centers lie within `max_distance_feet` of the origin cell.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodMask {
    pub max_distance_feet: f64,
    pub offsets: Vec<(i32, i32)>,
}

impl NeighborhoodMask {
    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn radius(&self) -> i32 {
        self.offsets
            .iter()
            .map(|&(dx, dy)| dx.abs().max(dy.abs()))
            .max()
            .unwrap_or(0)
    }

    pub fn contains(&self, dx: i32, dy: i32) -> bool {
        self.offsets.contains(&(dx, dy))
    }
}

/// Inclusive comparison: an orthogonal two-cell offset at 5' cells is
/// exactly 10' and belongs to the 10' neighborhood.
pub fn vulnerable_neighborhood(max_distance_feet: f64, cell_size_feet: f64) -> NeighborhoodMask {
    let mut offsets = Vec::new();
    if max_distance_feet >= 0.0 && cell_size_feet > 0.0 {
        let reach = (max_distance_feet / cell_size_feet).floor() as i32;
        let limit = max_distance_feet * max_distance_feet * (1.0 + 1e-12);
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                let d2 = f64::from(dx * dx + dy * dy) * cell_size_feet * cell_size_feet;
                if d2 <= limit {
                    offsets.push((dx, dy));
                }
            }
        }
    }
    NeighborhoodMask {
        max_distance_feet,
        offsets,
    }
}

/// Parses the text layout format: a `cols rows cell_feet` header followed
/// by `rows` lines, the top row (highest `y`) first.
pub fn parse_layout(text: &str) -> Result<StoreLayout, LayoutError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(LayoutError::MalformedGrid {
        line: 1,
        reason: "missing header".into(),
    })?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let bad_header = || LayoutError::MalformedGrid {
        line: 1,
        reason: format!("expected `cols rows cell_feet`, got `{header}`"),
    };
    if fields.len() != 3 {
        return Err(bad_header());
    }
    let width: usize = fields[0].parse().map_err(|_| bad_header())?;
    let height: usize = fields[1].parse().map_err(|_| bad_header())?;
    let cell_size_feet: f64 = fields[2].parse().map_err(|_| bad_header())?;
    if width == 0 || height == 0 || width > usize::from(u16::MAX) || height > usize::from(u16::MAX) {
        return Err(bad_header());
    }
    if !(cell_size_feet.is_finite() && cell_size_feet > 0.0) {
        return Err(bad_header());
    }

    let mut cells = vec![CellKind::Open; width * height];
    let mut lane_seen = [0u8; LANE_GLYPHS.len()];
    let body: Vec<(usize, &str)> = lines.collect();
    if body.len() != height {
        return Err(LayoutError::MalformedGrid {
            line: body.last().map_or(1, |(i, _)| i + 1),
            reason: format!("expected {height} rows, found {}", body.len()),
        });
    }
    // Glyphs are first collected per cell; lane slots are resolved in scan
    // order (ascending y) afterwards.
    let mut lane_cells: Vec<(usize, usize)> = Vec::new();
    for (rows, (line_no, line)) in body.iter().enumerate() {
        let row = line.trim_end_matches('\r');
        let glyphs = row.as_bytes();
        if glyphs.len() != width {
            return Err(LayoutError::MalformedGrid {
                line: line_no + 1,
                reason: format!("row has {} glyphs, expected {width}", glyphs.len()),
            });
        }
        let y = height - 1 - rows;
        for (x, &g) in glyphs.iter().enumerate() {
            let kind = match g {
                b'.' => CellKind::Open,
                b'#' => CellKind::Blocked,
                b'P' => CellKind::Product(ProductId(0)),
                b'E' => CellKind::Entrance(0),
                b'X' => CellKind::Exit(0),
                _ => match LANE_GLYPHS.iter().position(|&l| l == g) {
                    Some(lane) => {
                        lane_cells.push((y * width + x, lane));
                        CellKind::Checkout {
                            lane: LaneId(lane),
                            slot: CheckoutSlot::Register,
                        }
                    }
                    None => {
                        return Err(LayoutError::MalformedGrid {
                            line: line_no + 1,
                            reason: format!("unknown glyph `{}` at column {x}", g as char),
                        })
                    }
                },
            };
            cells[y * width + x] = kind;
        }
    }
    lane_cells.sort_unstable();
    for (idx, lane) in lane_cells {
        lane_seen[lane] += 1;
        let slot = match lane_seen[lane] {
            1 => CheckoutSlot::Register,
            2 => CheckoutSlot::Queue,
            _ => {
                return Err(LayoutError::RegistryMismatch(format!(
                    "lane `{}` appears more than twice",
                    LANE_GLYPHS[lane] as char
                )))
            }
        };
        cells[idx] = CellKind::Checkout {
            lane: LaneId(lane),
            slot,
        };
    }
    if let Some(lane) = lane_seen.iter().position(|&n| n == 1) {
        return Err(LayoutError::RegistryMismatch(format!(
            "lane `{}` has no partner cell",
            LANE_GLYPHS[lane] as char
        )));
    }
    StoreLayout::from_cells(width, height, cell_size_feet, cells)
}

/// Checks every structural invariant of a layout. Violations are data.
pub fn validate_layout(layout: &StoreLayout) -> ValidationReport {
    let mut violations = Vec::new();
    let expected = layout.width * layout.height;
    if layout.cells.len() != expected {
        violations.push(Violation::DimensionMismatch {
            expected,
            actual: layout.cells.len(),
        });
        return ValidationReport { violations };
    }

    let mut mismatch = |coord: CellCoord, detail: String| {
        violations.push(Violation::RegistryMismatch {
            coord: Some(coord),
            detail,
        })
    };
    for (i, &c) in layout.products.iter().enumerate() {
        if layout.kind(c) != Some(CellKind::Product(ProductId(i))) {
            mismatch(c, format!("product {i} registered on {:?}", layout.kind(c)));
        }
    }
    for (i, &c) in layout.entrances.iter().enumerate() {
        if layout.kind(c) != Some(CellKind::Entrance(i)) {
            mismatch(c, format!("entrance {i} registered on {:?}", layout.kind(c)));
        }
    }
    for (i, &c) in layout.exits.iter().enumerate() {
        if layout.kind(c) != Some(CellKind::Exit(i)) {
            mismatch(c, format!("exit {i} registered on {:?}", layout.kind(c)));
        }
    }
    for (i, lane) in layout.checkouts.iter().enumerate() {
        if lane.id != LaneId(i) {
            mismatch(lane.register, format!("lane at index {i} carries id {}", lane.id.0));
        }
        for (c, slot) in [
            (lane.register, CheckoutSlot::Register),
            (lane.queue, CheckoutSlot::Queue),
        ] {
            let want = CellKind::Checkout { lane: lane.id, slot };
            if layout.kind(c) != Some(want) {
                mismatch(c, format!("lane {i} {slot:?} registered on {:?}", layout.kind(c)));
            }
        }
    }
    // Reverse direction: every special cell must be registered.
    for (idx, &kind) in layout.cells.iter().enumerate() {
        let c = layout.coord(idx);
        let registered = match kind {
            CellKind::Product(id) => layout.products.get(id.0) == Some(&c),
            CellKind::Entrance(id) => layout.entrances.get(id) == Some(&c),
            CellKind::Exit(id) => layout.exits.get(id) == Some(&c),
            CellKind::Checkout { lane, slot } => {
                layout.checkouts.get(lane.0).is_some_and(|l| match slot {
                    CheckoutSlot::Register => l.register == c,
                    CheckoutSlot::Queue => l.queue == c,
                })
            }
            CellKind::Open | CellKind::Blocked => true,
        };
        if !registered {
            mismatch(c, format!("{kind:?} cell missing from its registry"));
        }
    }

    let targets: Vec<CellCoord> = layout
        .products
        .iter()
        .copied()
        .chain(layout.checkouts.iter().flat_map(|l| [l.register, l.queue]))
        .chain(layout.exits.iter().copied())
        .filter(|&c| layout.is_traversable(c))
        .collect();
    let mut unreachable = Vec::new();
    for &entrance in &layout.entrances {
        if !layout.is_traversable(entrance) {
            continue;
        }
        let seen = layout.reachable_from(entrance);
        for &t in &targets {
            if !seen[layout.index(t)] && !unreachable.contains(&t) {
                unreachable.push(t);
            }
        }
    }
    violations.extend(unreachable.into_iter().map(Violation::UnreachableCell));
    ValidationReport { violations }
}

/// The canonical layout every default configuration uses.
pub fn default_layout() -> StoreLayout {
    generate_default_layout(DEFAULT_LAYOUT_SEED)
        .expect("built-in layout seed satisfies every constraint")
}

/// Generates an 80x60 store: shelving blocks in three bands, 21 checkout
/// lanes across the front, three entrances and three exits in the front wall,
/// and 34 products placed on aisle cells next to shelving.
pub fn generate_default_layout(seed: u64) -> Result<StoreLayout, LayoutError> {
    let mut rng = rng::seeded(seed);
    for _ in 0..64 {
        let cells = draft_store(&mut rng);
        match StoreLayout::from_cells(DEFAULT_WIDTH, DEFAULT_HEIGHT, DEFAULT_CELL_FEET, cells) {
            Ok(layout) => return Ok(layout),
            Err(LayoutError::UnreachableCell(_)) => continue,
            Err(e) => return Err(LayoutError::GenerationFailed(e.to_string())),
        }
    }
    Err(LayoutError::GenerationFailed(format!(
        "no connected layout within 64 attempts for seed {seed}"
    )))
}

fn draft_store(rng: &mut SimRng) -> Vec<CellKind> {
    const W: usize = DEFAULT_WIDTH;
    const H: usize = DEFAULT_HEIGHT;
    let mut cells = vec![CellKind::Open; W * H];
    let at = |x: usize, y: usize| y * W + x;

    // Outer walls; the front wall (y = 0) carries the doors.
    for x in 0..W {
        cells[at(x, 0)] = CellKind::Blocked;
        cells[at(x, H - 1)] = CellKind::Blocked;
    }
    for y in 0..H {
        cells[at(0, y)] = CellKind::Blocked;
        cells[at(W - 1, y)] = CellKind::Blocked;
    }
    for x in [4, 38, 75] {
        cells[at(x, 0)] = CellKind::Entrance(0);
    }
    for x in [20, 41, 60] {
        cells[at(x, 0)] = CellKind::Exit(0);
    }

    // Checkout lanes: register in row 5, queue cell behind it in row 6,
    // counters between lanes.
    for i in 0..DEFAULT_LANES {
        let x = 9 + 3 * i;
        cells[at(x, 5)] = CellKind::Checkout {
            lane: LaneId(i),
            slot: CheckoutSlot::Register,
        };
        cells[at(x, 6)] = CellKind::Checkout {
            lane: LaneId(i),
            slot: CheckoutSlot::Queue,
        };
        cells[at(x + 1, 5)] = CellKind::Blocked;
        cells[at(x + 1, 4)] = CellKind::Blocked;
    }

    // Shelving: vertical two-cell-wide runs with a random break, in three
    // bands separated by cross aisles.
    let bands = [(11usize, 24usize), (29, 42), (47, 55)];
    for &(y0, y1) in &bands {
        let mut x = 3;
        while x + 1 < W - 2 {
            let gap = if rng.random_bool(0.35) {
                Some(rng.random_range(y0 + 2..y1 - 1))
            } else {
                None
            };
            for y in y0..=y1 {
                if Some(y) == gap {
                    continue;
                }
                cells[at(x, y)] = CellKind::Blocked;
                cells[at(x + 1, y)] = CellKind::Blocked;
            }
            x += 4;
        }
    }

    // Products go on open aisle cells that face shelving.
    let mut candidates: Vec<(usize, usize)> = (9..H - 1)
        .flat_map(|y| (1..W - 1).map(move |x| (x, y)))
        .filter(|&(x, y)| {
            cells[at(x, y)] == CellKind::Open
                && [(x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)]
                    .iter()
                    .any(|&(nx, ny)| cells[at(nx, ny)] == CellKind::Blocked && ny > 0)
        })
        .collect();
    candidates.shuffle(rng);
    let mut placed: Vec<(usize, usize)> = Vec::new();
    for (x, y) in candidates {
        if placed.len() == DEFAULT_PRODUCTS {
            break;
        }
        if placed.iter().any(|&(px, py)| px.abs_diff(x) + py.abs_diff(y) < 4) {
            continue;
        }
        placed.push((x, y));
    }
    for (x, y) in placed {
        cells[at(x, y)] = CellKind::Product(ProductId(0));
    }
    cells
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: u16, y: u16) -> CellCoord {
        CellCoord::new(x, y)
    }

    #[test]
    fn center_distance_examples() {
        assert_eq!(center_distance(c(0, 0), c(0, 1), 5.0), 5.0);
        assert!((center_distance(c(0, 0), c(1, 1), 5.0) - 7.0710678).abs() < 1e-6);
        assert!((center_distance(c(0, 0), c(2, 1), 5.0) - 125f64.sqrt()).abs() < 1e-12);
        assert!((center_distance(c(0, 0), c(2, 1), 5.0) - 11.180).abs() < 1e-3);
    }

    #[test]
    fn neighborhood_sizes_match_heatmaps() {
        let sizes: Vec<usize> = [6.0, 8.0, 10.0, 12.0]
            .iter()
            .map(|&d| vulnerable_neighborhood(d, 5.0).len())
            .collect();
        assert_eq!(sizes, vec![5, 9, 13, 21]);
        assert_eq!(vulnerable_neighborhood(4.9, 5.0).offsets, vec![(0, 0)]);
        assert_eq!(vulnerable_neighborhood(0.0, 5.0).offsets, vec![(0, 0)]);
    }

    #[test]
    fn six_foot_mask_excludes_diagonals() {
        let m = vulnerable_neighborhood(6.0, 5.0);
        assert!(m.contains(0, 1) && m.contains(-1, 0));
        assert!(!m.contains(1, 1));
    }

    #[test]
    fn parse_minimal_layout() {
        let l = parse_layout("3 3 5\n..X\n...\nE..\n").unwrap();
        assert_eq!((l.entrances.len(), l.exits.len(), l.products.len()), (1, 1, 0));
        assert_eq!(l.entrances[0], c(0, 0));
        assert_eq!(l.exits[0], c(2, 2));
    }

    #[test]
    fn parse_rejects_unknown_glyph() {
        assert!(matches!(
            parse_layout("3 3 5\n..X\n.?.\nE..\n"),
            Err(LayoutError::MalformedGrid { line: 3, .. })
        ));
    }

    #[test]
    fn parse_rejects_ragged_rows() {
        assert!(matches!(
            parse_layout("3 3 5\n..X\n..\nE..\n"),
            Err(LayoutError::MalformedGrid { .. })
        ));
        assert!(matches!(
            parse_layout("3 3 5\n..X\nE..\n"),
            Err(LayoutError::MalformedGrid { .. })
        ));
    }

    #[test]
    fn parse_reports_walled_product() {
        let text = "5 5 5\n.....\n.###.\n.#P#.\n.###.\nE...X\n";
        assert_eq!(parse_layout(text), Err(LayoutError::UnreachableCell(c(2, 2))));
    }

    #[test]
    fn parse_rejects_unpaired_lane() {
        assert!(matches!(
            parse_layout("3 3 5\n..X\n.0.\nE..\n"),
            Err(LayoutError::RegistryMismatch(_))
        ));
        assert!(matches!(
            parse_layout("4 3 5\n..X.\n000.\nE...\n"),
            Err(LayoutError::RegistryMismatch(_))
        ));
    }

    #[test]
    fn lane_register_is_first_in_scan_order() {
        let l = parse_layout("3 3 5\n.0X\n.0.\nE..\n").unwrap();
        assert_eq!(l.checkouts.len(), 1);
        assert_eq!(l.checkouts[0].register, c(1, 1));
        assert_eq!(l.checkouts[0].queue, c(1, 2));
    }

    #[test]
    fn default_layout_counts() {
        let l = default_layout();
        assert_eq!((l.width, l.height), (80, 60));
        assert_eq!(l.cells.len(), 4800);
        assert_eq!(l.products.len(), 34);
        assert_eq!(l.checkouts.len(), 21);
        assert_eq!(l.entrances.len(), 3);
        assert_eq!(l.exits.len(), 3);
        assert_eq!(l.floor_area_sqft(), 120_000.0);
        assert!(validate_layout(&l).is_ok());
    }

    #[test]
    fn generation_is_deterministic() {
        assert_eq!(generate_default_layout(7).unwrap(), generate_default_layout(7).unwrap());
        for seed in 0..20 {
            let l = generate_default_layout(seed).unwrap();
            assert!(validate_layout(&l).is_ok(), "seed {seed}");
            assert_eq!(l.products.len(), 34);
        }
    }

    #[test]
    fn entrance_on_blocked_cell_is_a_mismatch() {
        let mut l = default_layout();
        let e = l.entrances[0];
        let idx = l.index(e);
        l.cells[idx] = CellKind::Blocked;
        let report = validate_layout(&l);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::RegistryMismatch { coord: Some(at), .. } if *at == e)));
    }

    #[test]
    fn walled_exit_is_unreachable() {
        let mut l = parse_layout("5 3 5\n....X\n.....\nE....\n").unwrap();
        for (x, y) in [(3, 2), (3, 1), (4, 1)] {
            let idx = l.index(c(x, y));
            l.cells[idx] = CellKind::Blocked;
        }
        // Oracle: plain flood fill from the entrance.
        let seen = l.reachable_from(l.entrances[0]);
        assert!(!seen[l.index(c(4, 2))]);
        assert_eq!(
            validate_layout(&l).violations,
            vec![Violation::UnreachableCell(c(4, 2))]
        );
    }
}
