//! Level-shifter assignment.
//!
//! A shifter is needed on every net whose driver runs at a lower voltage
//! (larger level index) than its receiver. Room capacities come from an
//! area-based whitespace model; shifters are matched to rooms by a min-cost
//! max-flow over `s -> shifters -> rooms -> t`, then packed geometrically.
//! Shifters that end up without a room form the fallback set and are parked
//! next to their driver.

use num_rational::Ratio;

use crate::floorplan::{manhattan, whitespace_parts, Floorplan, Rect, Room};
use crate::flow::{self, FlowNetwork};
use crate::model::{ShifterSpec, TwoPinNet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shifter {
    pub id: usize,
    /// Index of the net in the two-pin net list.
    pub net: usize,
    pub source: usize,
    pub sink: usize,
    pub driver_level: u32,
}

/// One shifter per net whose source level index exceeds its sink's.
pub fn required_shifters(nets: &[TwoPinNet], levels: &[u32]) -> Vec<Shifter> {
    nets.iter()
        .enumerate()
        .filter(|(_, n)| levels[n.source] > levels[n.sink])
        .enumerate()
        .map(|(id, (net, n))| Shifter { id, net, source: n.source, sink: n.sink, driver_level: levels[n.source] })
        .collect()
}

/// Which strip absorbs the corner piece.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MergeTarget {
    P1,
    P2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LsCapacity {
    pub count: i64,
    pub merge: MergeTarget,
}

/// A part is too narrow when the shifter fits in neither orientation.
pub fn too_narrow(part: &Rect, spec: &ShifterSpec) -> bool {
    let (w, h) = (spec.width(), spec.height());
    !((part.w >= w && part.h >= h) || (part.w >= h && part.h >= w))
}

/// Capacity estimate from the three whitespace parts `[p1, p2, p3]`.
///
/// Too-narrow strips count as zero area, the corner joins the strip whose
/// area leaves the larger remainder modulo the shifter area (the top strip on
/// ties), and the result is the sum of the two floors.
pub fn num_ls_parts(parts: &[Rect; 3], spec: &ShifterSpec) -> LsCapacity {
    let a = spec.area();
    let mut p1 = if too_narrow(&parts[0], spec) { 0 } else { parts[0].area() };
    let mut p2 = if too_narrow(&parts[1], spec) { 0 } else { parts[1].area() };
    let p3 = parts[2].area().max(0);
    let merge = if p1 % a > p2 % a {
        p1 += p3;
        MergeTarget::P1
    } else {
        p2 += p3;
        MergeTarget::P2
    };
    LsCapacity { count: p1 / a + p2 / a, merge }
}

pub fn num_ls(room: &Room, spec: &ShifterSpec) -> i64 {
    num_ls_parts(&whitespace_parts(room), spec).count
}

/// The two placement regions after the corner merge. Both are rectangles.
pub fn merged_regions(room: &Room, merge: MergeTarget) -> [Rect; 2] {
    let r = room.rect;
    let (mw, mh) = (room.module_w, room.module_h);
    match merge {
        MergeTarget::P1 => [Rect::new(r.x + mw, r.y, r.w - mw, r.h), Rect::new(r.x, r.y + mh, mw, r.h - mh)],
        MergeTarget::P2 => [Rect::new(r.x + mw, r.y, r.w - mw, mh), Rect::new(r.x, r.y + mh, r.w, r.h - mh)],
    }
}

/// Half the mean room dimension, the default search window.
pub fn default_window(fp: &Floorplan) -> i64 {
    if fp.rooms.is_empty() {
        return 0;
    }
    let sum: i64 = fp.rooms.iter().map(|r| r.rect.w + r.rect.h).sum();
    sum / (4 * fp.rooms.len() as i64)
}

/// Bounding box of the shifter's driver and receiver centers, grown by
/// `window`, in doubled coordinates `(x0, y0, x1, y1)`.
fn search_box_x2(sh: &Shifter, fp: &Floorplan, window: i64) -> (i64, i64, i64, i64) {
    let a = fp.module_center_x2(sh.source);
    let b = fp.module_center_x2(sh.sink);
    (a.0.min(b.0) - 2 * window, a.1.min(b.1) - 2 * window, a.0.max(b.0) + 2 * window, a.1.max(b.1) + 2 * window)
}

/// Whether `sh` may go into `room`: the room has capacity and touches the
/// search box around the net.
pub fn feasible(sh: &Shifter, room: &Room, fp: &Floorplan, spec: &ShifterSpec, window: i64) -> bool {
    if num_ls(room, spec) < 1 {
        return false;
    }
    let (x0, y0, x1, y1) = search_box_x2(sh, fp, window);
    let r = room.rect;
    2 * r.x <= x1 && x0 <= 2 * r.right() && 2 * r.y <= y1 && y0 <= 2 * r.top()
}

/// Doubled Manhattan detour of routing `src -> p -> sink` instead of `src -> sink`.
fn detour_x2(src: (i64, i64), p: (i64, i64), sink: (i64, i64)) -> i64 {
    manhattan(src, p) + manhattan(p, sink) - manhattan(src, sink)
}

/// Detour through the room center.
pub fn assign_cost(sh: &Shifter, room: &Room, fp: &Floorplan) -> i64 {
    let d = detour_x2(fp.module_center_x2(sh.source), room.rect.center_x2(), fp.module_center_x2(sh.sink));
    debug_assert!(d % 2 == 0);
    d / 2
}

/// Row-major packing of up to `count` shifters into a region, in the
/// orientation that fits more.
fn pack_region(region: &Rect, count: usize, spec: &ShifterSpec, out: &mut Vec<Rect>) -> usize {
    if region.is_empty() || count == 0 {
        return 0;
    }
    let fits = |w: i64, h: i64| (region.w / w) * (region.h / h);
    let (w, h) = if fits(spec.height(), spec.width()) > fits(spec.width(), spec.height()) {
        (spec.height(), spec.width())
    } else {
        (spec.width(), spec.height())
    };
    let (cols, rows) = (region.w / w, region.h / h);
    let mut placed = 0;
    'rows: for r in 0..rows {
        for c in 0..cols {
            if placed == count {
                break 'rows;
            }
            out.push(Rect::new(region.x + c * w, region.y + r * h, w, h));
            placed += 1;
        }
    }
    placed
}

/// Geometric placement of `count` shifters into the room's merged whitespace,
/// first region first. May place fewer than requested.
pub fn place_in_room(room: &Room, count: usize, spec: &ShifterSpec) -> Vec<Rect> {
    let merge = num_ls_parts(&whitespace_parts(room), spec).merge;
    let mut out = Vec::with_capacity(count);
    for region in merged_regions(room, merge) {
        let left = count - out.len();
        pack_region(&region, left, spec, &mut out);
    }
    out
}

/// Parks a fallback shifter outside its driver, abutting the boundary point
/// nearest the receiver's center.
pub fn els_place(sh: &Shifter, fp: &Floorplan, spec: &ShifterSpec) -> Rect {
    let m = fp.rooms[sh.source].module_rect();
    let (tx, ty) = fp.module_center_x2(sh.sink);
    let (x0, y0, x1, y1) = (2 * m.x, 2 * m.y, 2 * m.right(), 2 * m.top());
    let (cx, cy) = (tx.clamp(x0, x1), ty.clamp(y0, y1));
    let (w, h) = (spec.width(), spec.height());
    let dx = (tx - cx).abs();
    let dy = (ty - cy).abs();
    // east/west when the receiver lies further out horizontally, or when it is
    // inside the module and the side edges are nearer
    let horizontal = if dx == 0 && dy == 0 {
        (x1 - tx).min(tx - x0) <= (y1 - ty).min(ty - y0)
    } else {
        dx >= dy
    };
    let half = |v: i64| v.div_euclid(2);
    if horizontal {
        let y = half(cy - h).clamp(m.y - h, m.top());
        let east = if dx == 0 { x1 - tx <= tx - x0 } else { tx > cx };
        let x = if east { m.right() } else { m.x - w };
        Rect::new(x, y, w, h)
    } else {
        let x = half(cx - w).clamp(m.x - w, m.right());
        let north = if dy == 0 { y1 - ty <= ty - y0 } else { ty > cy };
        let y = if north { m.top() } else { m.y - h };
        Rect::new(x, y, w, h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Site {
    Room(usize),
    Els,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Placement {
    pub shifter: Shifter,
    pub rect: Rect,
    pub site: Site,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShifterAssignment {
    /// One placement per shifter, in shifter order.
    pub placements: Vec<Placement>,
    /// Total room cost of the flow solution.
    pub flow_cost: i64,
    /// Shifters routed to some room by the flow (before geometric placement).
    pub flow_value: i64,
    /// Sum of doubled detours through the placed shifters.
    pub detour_x2: i64,
    pub ilo_percent: Ratio<i64>,
}

impl ShifterAssignment {
    pub fn assigned(&self) -> impl Iterator<Item = &Placement> {
        self.placements.iter().filter(|p| matches!(p.site, Site::Room(_)))
    }

    pub fn els(&self) -> impl Iterator<Item = &Placement> {
        self.placements.iter().filter(|p| p.site == Site::Els)
    }

    pub fn els_count(&self) -> usize {
        self.els().count()
    }
}

/// Min-cost maximum-cardinality assignment of rows to columns. `costs[i][j]`
/// is `None` where row `i` may not use column `j`; column `j` takes at most
/// `caps[j]` rows. Returns the column per row and the total cost.
pub fn solve_assignment(costs: &[Vec<Option<i64>>], caps: &[i64]) -> (Vec<Option<usize>>, i64) {
    let n = costs.len();
    let r = caps.len();
    let (s, t) = (0, n + r + 1);
    let mut net = FlowNetwork::new(n + r + 2);
    for i in 0..n {
        net.add_arc(s, 1 + i, 0, 0, 1, usize::MAX).expect("valid arc");
    }
    let mut pair_arcs = Vec::new();
    for (i, row) in costs.iter().enumerate() {
        for (j, c) in row.iter().enumerate() {
            if let Some(c) = *c {
                let a = net.add_arc(1 + i, 1 + n + j, c, 0, 1, j).expect("valid arc");
                pair_arcs.push((a, i, j));
            }
        }
    }
    for (j, &cap) in caps.iter().enumerate() {
        net.add_arc(1 + n + j, t, 0, 0, cap.max(0), usize::MAX).expect("valid arc");
    }
    let res = flow::solve_min_cost_max_flow(&net, s, t).expect("assignment network has no negative cycles");
    let mut out = vec![None; n];
    for (a, i, j) in pair_arcs {
        if res.flow[a] > 0 {
            out[i] = Some(j);
        }
    }
    (out, res.objective)
}

/// Assigns every shifter to a room where possible and places it.
pub fn assign_shifters(
    shifters: &[Shifter],
    fp: &Floorplan,
    nets: &[TwoPinNet],
    spec: &ShifterSpec,
    window: i64,
) -> ShifterAssignment {
    let caps: Vec<i64> = fp.rooms.iter().map(|r| num_ls(r, spec)).collect();
    let costs: Vec<Vec<Option<i64>>> = shifters
        .iter()
        .map(|sh| {
            fp.rooms
                .iter()
                .map(|room| feasible(sh, room, fp, spec, window).then(|| assign_cost(sh, room, fp)))
                .collect()
        })
        .collect();
    let (choice, flow_cost) = solve_assignment(&costs, &caps);
    let flow_value = choice.iter().flatten().count() as i64;

    let mut per_room: Vec<Vec<usize>> = vec![Vec::new(); fp.rooms.len()];
    for (i, c) in choice.iter().enumerate() {
        if let Some(j) = *c {
            per_room[j].push(i);
        }
    }
    let mut placed: Vec<Option<Placement>> = vec![None; shifters.len()];
    for (j, members) in per_room.iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        let rects = place_in_room(&fp.rooms[j], members.len(), spec);
        for (&i, rect) in members.iter().zip(rects) {
            placed[i] = Some(Placement { shifter: shifters[i], rect, site: Site::Room(j) });
        }
    }
    let placements: Vec<Placement> = placed
        .into_iter()
        .zip(shifters)
        .map(|(p, sh)| p.unwrap_or_else(|| Placement { shifter: *sh, rect: els_place(sh, fp, spec), site: Site::Els }))
        .collect();
    let detour = total_detour_x2(&placements, fp);
    let ilo_percent = compute_ilo(&placements, fp, nets);
    ShifterAssignment { placements, flow_cost, flow_value, detour_x2: detour, ilo_percent }
}

fn total_detour_x2(placements: &[Placement], fp: &Floorplan) -> i64 {
    placements
        .iter()
        .map(|p| detour_x2(fp.module_center_x2(p.shifter.source), p.rect.center_x2(), fp.module_center_x2(p.shifter.sink)))
        .sum()
}

/// Interconnect length overhead: detour through the shifters as a percentage
/// of the total net length.
pub fn compute_ilo(placements: &[Placement], fp: &Floorplan, nets: &[TwoPinNet]) -> Ratio<i64> {
    let total = crate::floorplan::hpwl_x2(fp, nets);
    let detour = total_detour_x2(placements, fp);
    if total == 0 || detour == 0 {
        return Ratio::from_integer(0);
    }
    Ratio::new(100 * detour, total)
}
