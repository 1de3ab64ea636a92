//! Two-path disjoint route planning on a 2D mesh.
//!
//! For a (src, dst) pair the mesh is split into a *blue* and a *red* region;
//! one pivot router is drawn uniformly from each, and each packet travels
//! src → pivot → dst in two dimension-ordered segments. The region rules and
//! per-segment routing policies are chosen so that, for every admissible
//! pivot pair, the two realized paths share **no** intermediate router —
//! an eavesdropper sitting on any single router can never observe both.
//!
//! Region rules (strict inequalities throughout):
//!
//! * Diagonal pairs use the quadrant rule; e.g. when dst is below-right,
//!   blue = {y > src.y and x < dst.x} and red = everything else except the
//!   endpoints. Blue routes YX for both segments, red XY for both.
//! * Same-row pairs: blue = the half-plane strictly above the shared row
//!   (below if the row is the top border), red = the opposite half. The blue
//!   packet routes YX to its pivot, then **flips** to XY (`flip_route`).
//!   When the opposite half is empty (border row), red falls back to the
//!   shared row itself minus the endpoints: red traffic then stays on-row
//!   while blue arcs through the non-empty half, which keeps the paths
//!   disjoint.
//! * Same-column pairs mirror same-row: blue = strictly left half (right if
//!   on the left border), routed XY → YX with the flip at the pivot; an
//!   empty opposite half puts red on the shared column.
//!
//! The same-column blue policy is deliberately the mirror (XY then YX) of
//! same-row: starting YX on a same-column pair would ride the shared column
//! and collide with red's final approach. The exhaustive checker
//! ([`check_disjointness`]) verifies zero violations over every pair and
//! every pivot choice on the meshes we care about.
//!
//! Only genuinely degenerate geometries (e.g. a 2×2 mesh, where a same-row
//! pair leaves no cell for red) fall back to a single XY path, flagged
//! `protected: false`. On 4×4 and larger square meshes the fallback never
//! triggers.

use crate::rng::DetRng;
use thiserror::Error;

/// Router coordinate: `x` counts columns rightward, `y` rows downward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coord {
    pub x: u16,
    pub y: u16,
}

/// Shorthand constructor.
pub const fn xy(x: u16, y: u16) -> Coord {
    Coord { x, y }
}

impl std::fmt::Display for Coord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// Mesh dimensions, at least 2×2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeshDims {
    width: u16,
    height: u16,
}

/// Routing errors.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum RouteError {
    /// Mesh smaller than 2×2.
    #[error("mesh must be at least 2x2, got {0}x{1}")]
    BadDims(u16, u16),
    /// Coordinate outside the mesh.
    #[error("coordinate ({0}) outside {1}x{2} mesh")]
    OutOfBounds(Coord, u16, u16),
    /// src == dst.
    #[error("source and destination are the same router")]
    SameNode,
    /// Pivot requested from an empty region.
    #[error("cannot select a pivot from an empty region")]
    EmptyRegion,
}

impl MeshDims {
    /// Validates and constructs mesh dimensions.
    pub fn new(width: u16, height: u16) -> Result<Self, RouteError> {
        if width < 2 || height < 2 {
            return Err(RouteError::BadDims(width, height));
        }
        Ok(Self { width, height })
    }

    pub fn width(&self) -> u16 {
        self.width
    }

    pub fn height(&self) -> u16 {
        self.height
    }

    /// Total router count.
    pub fn node_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// Row-major node id (y * width + x).
    pub fn id(&self, c: Coord) -> usize {
        c.y as usize * self.width as usize + c.x as usize
    }

    /// Inverse of [`MeshDims::id`].
    pub fn coord(&self, id: usize) -> Coord {
        Coord {
            x: (id % self.width as usize) as u16,
            y: (id / self.width as usize) as u16,
        }
    }

    /// True if `c` lies inside the mesh.
    pub fn contains(&self, c: Coord) -> bool {
        c.x < self.width && c.y < self.height
    }

    /// All router coordinates in row-major order.
    pub fn nodes(&self) -> impl Iterator<Item = Coord> + '_ {
        (0..self.node_count()).map(|i| self.coord(i))
    }

    fn check(&self, c: Coord) -> Result<(), RouteError> {
        if self.contains(c) {
            Ok(())
        } else {
            Err(RouteError::OutOfBounds(c, self.width, self.height))
        }
    }
}

/// Relative position of dst with respect to src.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseKind {
    /// dst strictly below-right.
    QuadrantBr,
    /// dst strictly above-right.
    QuadrantTr,
    /// dst strictly above-left.
    QuadrantTl,
    /// dst strictly below-left.
    QuadrantBl,
    /// Same row, different column.
    SameRow,
    /// Same column, different row.
    SameCol,
}

impl CaseKind {
    /// True for the two special cases that set `flip_route`.
    pub fn flips(&self) -> bool {
        matches!(self, CaseKind::SameRow | CaseKind::SameCol)
    }
}

impl std::fmt::Display for CaseKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            CaseKind::QuadrantBr => "quadrant-BR",
            CaseKind::QuadrantTr => "quadrant-TR",
            CaseKind::QuadrantTl => "quadrant-TL",
            CaseKind::QuadrantBl => "quadrant-BL",
            CaseKind::SameRow => "same-row",
            CaseKind::SameCol => "same-col",
        };
        f.write_str(s)
    }
}

/// Blue/red pivot-candidate regions for one (src, dst) pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionAssignment {
    pub kind: CaseKind,
    pub blue: Vec<Coord>,
    pub red: Vec<Coord>,
}

/// A planned pair of routes.
///
/// When `protected` is false (degenerate mesh geometry only), both paths are
/// the same single XY route and the pivots are a placeholder equal to `src`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoutePlan {
    pub kind: CaseKind,
    /// Blue switches routing policy at its pivot (same-row/col cases).
    pub flip_route: bool,
    /// False when the degraded single-path fallback was taken.
    pub protected: bool,
    pub pivot_blue: Coord,
    pub pivot_red: Coord,
    /// Full hop walk src → … → dst, endpoints included. May revisit a
    /// router (the walk, not the set, is what flits traverse).
    pub path_blue: Vec<Coord>,
    pub path_red: Vec<Coord>,
}

/// Classifies the relative position of dst from src.
pub fn classify(src: Coord, dst: Coord) -> Result<CaseKind, RouteError> {
    if src == dst {
        return Err(RouteError::SameNode);
    }
    Ok(if src.y == dst.y {
        CaseKind::SameRow
    } else if src.x == dst.x {
        CaseKind::SameCol
    } else if dst.x > src.x {
        if dst.y > src.y {
            CaseKind::QuadrantBr
        } else {
            CaseKind::QuadrantTr
        }
    } else if dst.y > src.y {
        CaseKind::QuadrantBl
    } else {
        CaseKind::QuadrantTl
    })
}

/// Computes the blue and red pivot regions for a pair.
///
/// Either region may come back empty only on degenerate geometries; the
/// planner then takes the documented fallback.
pub fn regions(src: Coord, dst: Coord, dims: MeshDims) -> Result<RegionAssignment, RouteError> {
    dims.check(src)?;
    dims.check(dst)?;
    let kind = classify(src, dst)?;
    let cells = || dims.nodes().filter(|&c| c != src && c != dst);

    let (blue, red): (Vec<Coord>, Vec<Coord>) = match kind {
        CaseKind::QuadrantBr | CaseKind::QuadrantTr | CaseKind::QuadrantTl
        | CaseKind::QuadrantBl => {
            let in_blue = |c: Coord| match kind {
                CaseKind::QuadrantBr => c.y > src.y && c.x < dst.x,
                CaseKind::QuadrantTr => c.y < src.y && c.x < dst.x,
                CaseKind::QuadrantTl => c.y < src.y && c.x > dst.x,
                CaseKind::QuadrantBl => c.y > src.y && c.x > dst.x,
                _ => unreachable!(),
            };
            let blue: Vec<Coord> = cells().filter(|&c| in_blue(c)).collect();
            let red: Vec<Coord> = cells().filter(|&c| !in_blue(c)).collect();
            (blue, red)
        }
        CaseKind::SameRow => {
            let above: Vec<Coord> = cells().filter(|c| c.y < src.y).collect();
            let below: Vec<Coord> = cells().filter(|c| c.y > src.y).collect();
            let (blue, mut red) = if !above.is_empty() {
                (above, below)
            } else {
                (below, above)
            };
            if red.is_empty() {
                // Border row: red keeps to the shared row itself.
                red = cells().filter(|c| c.y == src.y).collect();
            }
            (blue, red)
        }
        CaseKind::SameCol => {
            let left: Vec<Coord> = cells().filter(|c| c.x < src.x).collect();
            let right: Vec<Coord> = cells().filter(|c| c.x > src.x).collect();
            let (blue, mut red) = if !left.is_empty() {
                (left, right)
            } else {
                (right, left)
            };
            if red.is_empty() {
                // Border column: red keeps to the shared column.
                red = cells().filter(|c| c.x == src.x).collect();
            }
            (blue, red)
        }
    };
    Ok(RegionAssignment { kind, blue, red })
}

/// Dimension-ordered path, horizontal first: a → (b.x, a.y) → b.
pub fn route_xy(a: Coord, b: Coord) -> Vec<Coord> {
    let mut path = vec![a];
    let mut cur = a;
    while cur.x != b.x {
        cur.x = if b.x > cur.x { cur.x + 1 } else { cur.x - 1 };
        path.push(cur);
    }
    while cur.y != b.y {
        cur.y = if b.y > cur.y { cur.y + 1 } else { cur.y - 1 };
        path.push(cur);
    }
    path
}

/// Dimension-ordered path, vertical first: a → (a.x, b.y) → b.
pub fn route_yx(a: Coord, b: Coord) -> Vec<Coord> {
    let mut path = vec![a];
    let mut cur = a;
    while cur.y != b.y {
        cur.y = if b.y > cur.y { cur.y + 1 } else { cur.y - 1 };
        path.push(cur);
    }
    while cur.x != b.x {
        cur.x = if b.x > cur.x { cur.x + 1 } else { cur.x - 1 };
        path.push(cur);
    }
    path
}

/// Draws one pivot uniformly from each region (blue first, then red).
pub fn select_pivots(
    regions: &RegionAssignment,
    rng: &mut DetRng,
) -> Result<(Coord, Coord), RouteError> {
    if regions.blue.is_empty() || regions.red.is_empty() {
        return Err(RouteError::EmptyRegion);
    }
    let pb = regions.blue[rng.gen_index(regions.blue.len())];
    let pr = regions.red[rng.gen_index(regions.red.len())];
    Ok((pb, pr))
}

fn join(mut first: Vec<Coord>, second: &[Coord]) -> Vec<Coord> {
    first.extend_from_slice(&second[1..]);
    first
}

/// Builds the blue walk src → pivot → dst for the given case kind.
pub fn blue_path(src: Coord, dst: Coord, pivot: Coord, kind: CaseKind) -> Vec<Coord> {
    match kind {
        CaseKind::SameRow => join(route_yx(src, pivot), &route_xy(pivot, dst)),
        CaseKind::SameCol => join(route_xy(src, pivot), &route_yx(pivot, dst)),
        _ => join(route_yx(src, pivot), &route_yx(pivot, dst)),
    }
}

/// Builds the red walk src → pivot → dst (XY on both segments).
pub fn red_path(src: Coord, dst: Coord, pivot: Coord) -> Vec<Coord> {
    join(route_xy(src, pivot), &route_xy(pivot, dst))
}

/// Deterministic core of the planner: paths for a fixed pivot pair.
pub fn plan_with_pivots(
    src: Coord,
    dst: Coord,
    kind: CaseKind,
    pivot_blue: Coord,
    pivot_red: Coord,
) -> RoutePlan {
    RoutePlan {
        kind,
        flip_route: kind.flips(),
        protected: true,
        pivot_blue,
        pivot_red,
        path_blue: blue_path(src, dst, pivot_blue, kind),
        path_red: red_path(src, dst, pivot_red),
    }
}

/// Plans both routes for a pair, drawing pivots from `rng`.
///
/// Falls back to a single unprotected XY path only when a pivot region is
/// empty (degenerate geometries such as 2×2; never on 4×4 or 8×8).
pub fn plan_routes(
    src: Coord,
    dst: Coord,
    dims: MeshDims,
    rng: &mut DetRng,
) -> Result<RoutePlan, RouteError> {
    let regions = regions(src, dst, dims)?;
    match select_pivots(&regions, rng) {
        Ok((pb, pr)) => Ok(plan_with_pivots(src, dst, regions.kind, pb, pr)),
        Err(RouteError::EmptyRegion) => {
            let path = route_xy(src, dst);
            Ok(RoutePlan {
                kind: regions.kind,
                flip_route: false,
                protected: false,
                pivot_blue: src,
                pivot_red: src,
                path_blue: path.clone(),
                path_red: path,
            })
        }
        Err(e) => Err(e),
    }
}

/// Bitmask of the walk's intermediate routers (everything except src and
/// dst), for meshes of at most 64 nodes.
pub fn intermediate_mask(path: &[Coord], src: Coord, dst: Coord, dims: MeshDims) -> u64 {
    debug_assert!(dims.node_count() <= 64);
    let mut mask = 0u64;
    for &c in path {
        if c != src && c != dst {
            mask |= 1u64 << dims.id(c);
        }
    }
    mask
}

/// The distinct intermediate routers of a walk, in first-visit order.
pub fn intermediates(path: &[Coord], src: Coord, dst: Coord) -> Vec<Coord> {
    let mut seen = Vec::new();
    for &c in path {
        if c != src && c != dst && !seen.contains(&c) {
            seen.push(c);
        }
    }
    seen
}

/// Outcome of the exhaustive disjointness sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DisjointnessSummary {
    /// Ordered (src, dst) pairs examined.
    pub pairs: usize,
    /// Pairs that had to take the degraded single-path fallback.
    pub fallbacks: usize,
    /// (pair, pivot-pair) combinations whose two paths shared an
    /// intermediate router.
    pub violations: u64,
    /// Total pivot pairs examined.
    pub pivot_pairs: u64,
}

/// Checks every ordered (src, dst) pair and every admissible pivot pair on
/// `dims` (≤ 64 nodes): counts any shared intermediate router as a
/// violation.
pub fn check_disjointness(dims: MeshDims) -> DisjointnessSummary {
    let mut summary = DisjointnessSummary {
        pairs: 0,
        fallbacks: 0,
        violations: 0,
        pivot_pairs: 0,
    };
    for src in dims.nodes() {
        for dst in dims.nodes() {
            if src == dst {
                continue;
            }
            summary.pairs += 1;
            let reg = regions(src, dst, dims).expect("valid pair");
            if reg.blue.is_empty() || reg.red.is_empty() {
                summary.fallbacks += 1;
                continue;
            }
            let blue_masks: Vec<u64> = reg
                .blue
                .iter()
                .map(|&pb| {
                    intermediate_mask(&blue_path(src, dst, pb, reg.kind), src, dst, dims)
                })
                .collect();
            let red_masks: Vec<u64> = reg
                .red
                .iter()
                .map(|&pr| intermediate_mask(&red_path(src, dst, pr), src, dst, dims))
                .collect();
            for &bm in &blue_masks {
                for &rm in &red_masks {
                    summary.pivot_pairs += 1;
                    if bm & rm != 0 {
                        summary.violations += 1;
                    }
                }
            }
        }
    }
    summary
}
