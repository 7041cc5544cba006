//! Voltage assignment over the split-node timing graph.
//!
//! Every module `i` becomes an edge `I_i -> O_i` whose delay is picked from its
//! (shifter-modified) curve; nets are fixed-delay edges `O_a -> I_b`; a source
//! `s` feeds modules without fan-in, modules without fan-out drain into `t`,
//! and the cycle-time bound is a reverse edge `t -> s` of length `-T_cycle`.
//!
//! The continuous relaxation (delays anywhere on the piecewise-linear curve) is
//! the dual of a min-cost circulation on an expanded network: each module edge
//! becomes `k` parallel arcs whose costs are the negated delays and whose
//! capacities are the slope breakpoints. Residual shortest-path distances of
//! the optimal circulation are the arrival times, and the potential gap across
//! a module edge is the delay budget it may use.
//!
//! The relaxation alone can leave a module between two breakpoints. Rounding
//! down keeps timing but may lose optimality, so [`assign_voltages`] runs a
//! small branch and bound: a fractional module's level range is split in two
//! and the flow relaxation of each sub-range gives the lower bound.

use num_integer::Integer;
use num_rational::Ratio;
use thiserror::Error;

use crate::flow::{self, FlowError, FlowNetwork};
use crate::model::{topological_order, DpCurve, ModelError, Netlist, TwoPinNet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VoltageError {
    #[error("timing infeasible: fastest assignment needs {fastest} > T_cycle {t_cycle}")]
    TimingInfeasible { fastest: i64, t_cycle: i64 },
    #[error("{modules} modules exceed the brute-force limit of {limit}")]
    TooLarge { modules: usize, limit: usize },
    #[error("{got} wire delays given for {nets} nets")]
    WireDelayCount { got: usize, nets: usize },
    #[error("negative wire delay on net {0}")]
    NegativeDelay(usize),
    #[error("{got} curves given for {modules} modules")]
    CurveCount { got: usize, modules: usize },
    #[error("arc capacities overflow after scaling breakpoints to integers")]
    Overflow,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

pub const SOURCE: usize = 0;
pub const SINK: usize = 1;

pub fn input_node(module: usize) -> usize {
    2 + 2 * module
}

pub fn output_node(module: usize) -> usize {
    3 + 2 * module
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeClass {
    /// Module edges `I_i -> O_i`.
    E1,
    /// Net edges `O_a -> I_b`.
    E2,
    /// Source, sink and cycle-time edges.
    E3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    Module(usize),
    Net { net: usize, delay: i64 },
    Source(usize),
    Sink(usize),
    /// `t -> s`, encoding `mu_s - mu_t >= -T_cycle`.
    Cycle,
}

impl EdgeKind {
    pub fn class(self) -> EdgeClass {
        match self {
            EdgeKind::Module(_) => EdgeClass::E1,
            EdgeKind::Net { .. } => EdgeClass::E2,
            EdgeKind::Source(_) | EdgeKind::Sink(_) | EdgeKind::Cycle => EdgeClass::E3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimingEdge {
    pub from: usize,
    pub to: usize,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimingGraph {
    modules: usize,
    edges: Vec<TimingEdge>,
    t_cycle: i64,
    order: Vec<usize>,
    fanin: Vec<Vec<(usize, i64)>>,
    is_sink: Vec<bool>,
}

impl TimingGraph {
    /// Builds the graph directly from module count, nets and per-net wire delays.
    pub fn new(modules: usize, nets: &[TwoPinNet], wire_delays: &[i64], t_cycle: i64) -> Result<Self, VoltageError> {
        if wire_delays.len() != nets.len() {
            return Err(VoltageError::WireDelayCount { got: wire_delays.len(), nets: nets.len() });
        }
        if let Some(i) = wire_delays.iter().position(|&d| d < 0) {
            return Err(VoltageError::NegativeDelay(i));
        }
        for n in nets {
            for v in [n.source, n.sink] {
                if v >= modules {
                    return Err(ModelError::UnknownModule(v).into());
                }
            }
        }
        let order = topological_order(modules, nets)?;
        let mut fanin = vec![Vec::new(); modules];
        let mut has_in = vec![false; modules];
        let mut has_out = vec![false; modules];
        for (n, &d) in nets.iter().zip(wire_delays) {
            fanin[n.sink].push((n.source, d));
            has_in[n.sink] = true;
            has_out[n.source] = true;
        }
        let mut edges = Vec::with_capacity(modules * 3 + nets.len() + 1);
        for i in 0..modules {
            if !has_in[i] {
                edges.push(TimingEdge { from: SOURCE, to: input_node(i), kind: EdgeKind::Source(i) });
            }
            edges.push(TimingEdge { from: input_node(i), to: output_node(i), kind: EdgeKind::Module(i) });
            if !has_out[i] {
                edges.push(TimingEdge { from: output_node(i), to: SINK, kind: EdgeKind::Sink(i) });
            }
        }
        for (net, (n, &delay)) in nets.iter().zip(wire_delays).enumerate() {
            edges.push(TimingEdge { from: output_node(n.source), to: input_node(n.sink), kind: EdgeKind::Net { net, delay } });
        }
        edges.push(TimingEdge { from: SINK, to: SOURCE, kind: EdgeKind::Cycle });
        let is_sink = has_out.iter().map(|&o| !o).collect();
        Ok(Self { modules, edges, t_cycle, order, fanin, is_sink })
    }

    pub fn modules(&self) -> usize {
        self.modules
    }
    pub fn node_count(&self) -> usize {
        2 * self.modules + 2
    }
    pub fn edges(&self) -> &[TimingEdge] {
        &self.edges
    }
    pub fn t_cycle(&self) -> i64 {
        self.t_cycle
    }

    pub fn edges_of(&self, class: EdgeClass) -> impl Iterator<Item = &TimingEdge> {
        self.edges.iter().filter(move |e| e.kind.class() == class)
    }

    /// Arrival time at every timing node given per-module delays (ASAP).
    pub fn arrival_times(&self, delays: &[i64]) -> Vec<i64> {
        let mut mu = vec![0i64; self.node_count()];
        for &i in &self.order {
            let start = self.fanin[i].iter().map(|&(src, w)| mu[output_node(src)] + w).max().unwrap_or(0);
            mu[input_node(i)] = start;
            mu[output_node(i)] = start + delays[i];
        }
        mu[SINK] = (0..self.modules).filter(|&i| self.is_sink[i]).map(|i| mu[output_node(i)]).max().unwrap_or(0);
        mu
    }

    /// Modules on one longest `s -> t` path, in path order.
    pub fn critical_path(&self, delays: &[i64]) -> Vec<usize> {
        let mu = self.arrival_times(delays);
        let Some(mut cur) = (0..self.modules).filter(|&i| self.is_sink[i]).max_by_key(|&i| (mu[output_node(i)], std::cmp::Reverse(i)))
        else {
            return Vec::new();
        };
        let mut path = vec![cur];
        while let Some(&(prev, _)) = self.fanin[cur].iter().find(|&&(src, w)| mu[output_node(src)] + w == mu[input_node(cur)]) {
            path.push(prev);
            cur = prev;
        }
        path.reverse();
        path
    }
}

/// Timing graph of a netlist with the given per-net wire delays.
pub fn build_timing_graph(netlist: &Netlist, wire_delays: &[i64]) -> Result<TimingGraph, VoltageError> {
    TimingGraph::new(netlist.modules().len(), netlist.nets(), wire_delays, netlist.t_cycle())
}

/// Slope magnitudes `b(2) .. b(k)` between consecutive curve points.
pub fn compute_breakpoints(curve: &DpCurve) -> Vec<Ratio<i64>> {
    curve.points().windows(2).map(|w| Ratio::new(w[0].power - w[1].power, w[1].delay - w[0].delay)).collect()
}

fn delays_at(curves: &[DpCurve], levels: &[u32]) -> Vec<i64> {
    curves.iter().zip(levels).map(|(c, &l)| c.delay(l)).collect()
}

fn power_at(curves: &[DpCurve], levels: &[u32]) -> i64 {
    curves.iter().zip(levels).map(|(c, &l)| c.power(l)).sum()
}

/// Exact longest `s -> t` path delay under the given levels.
pub fn longest_path_delay(tg: &TimingGraph, curves: &[DpCurve], levels: &[u32]) -> i64 {
    tg.arrival_times(&delays_at(curves, levels))[SINK]
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoltageAssignment {
    /// 1-based level per module.
    pub levels: Vec<u32>,
    /// Sum of the (modified) curve powers at the chosen levels.
    pub total_power: i64,
    /// Arrival time per timing node under the chosen delays.
    pub arrival: Vec<i64>,
    /// False when the search hit its node limit before closing the gap.
    pub proven_optimal: bool,
}

impl VoltageAssignment {
    fn from_levels(tg: &TimingGraph, curves: &[DpCurve], levels: Vec<u32>, proven_optimal: bool) -> Self {
        let arrival = tg.arrival_times(&delays_at(curves, &levels));
        let total_power = power_at(curves, &levels);
        Self { levels, total_power, arrival, proven_optimal }
    }
}

/// Expanded network plus the integer scaling applied to its capacities.
#[derive(Debug, Clone)]
pub struct ExpandedNetwork {
    pub network: FlowNetwork,
    /// Breakpoints are multiplied by `scale` so every capacity is an integer.
    pub scale: i64,
    pub big_m: i64,
}

/// Expanded network over the full curves.
pub fn build_expanded_network(tg: &TimingGraph, curves: &[DpCurve]) -> Result<ExpandedNetwork, VoltageError> {
    let ranges: Vec<(u32, u32)> = curves.iter().map(|c| (1, c.k() as u32)).collect();
    build_expanded_for_ranges(tg, curves, &ranges)
}

fn check_curves(tg: &TimingGraph, curves: &[DpCurve]) -> Result<(), VoltageError> {
    if curves.len() != tg.modules {
        return Err(VoltageError::CurveCount { got: curves.len(), modules: tg.modules });
    }
    Ok(())
}

/// Slope magnitudes of the sub-curve `lo..=hi`, with `b(hi + 1) = 0` appended.
fn range_breakpoints(curve: &DpCurve, (lo, hi): (u32, u32)) -> Vec<Ratio<i64>> {
    let pts = &curve.points()[lo as usize - 1..hi as usize];
    let mut b: Vec<Ratio<i64>> =
        pts.windows(2).map(|w| Ratio::new(w[0].power - w[1].power, w[1].delay - w[0].delay)).collect();
    b.push(Ratio::from_integer(0));
    b
}

fn build_expanded_for_ranges(tg: &TimingGraph, curves: &[DpCurve], ranges: &[(u32, u32)]) -> Result<ExpandedNetwork, VoltageError> {
    check_curves(tg, curves)?;
    let breakpoints: Vec<Vec<Ratio<i64>>> = curves.iter().zip(ranges).map(|(c, &r)| range_breakpoints(c, r)).collect();
    let scale = breakpoints
        .iter()
        .flatten()
        .try_fold(1i64, |acc, b| {
            let l = acc.lcm(b.denom());
            (l > 0 && l < i64::MAX / 4).then_some(l)
        })
        .ok_or(VoltageError::Overflow)?;
    let scaled = |b: &Ratio<i64>| -> Result<i64, VoltageError> {
        b.numer().checked_mul(scale / b.denom()).ok_or(VoltageError::Overflow)
    };
    let mut finite = 0i64;
    for b in &breakpoints {
        finite = finite.checked_add(scaled(&b[0])?).ok_or(VoltageError::Overflow)?;
    }
    let big_m = finite.checked_add(1).ok_or(VoltageError::Overflow)?;

    let mut net = FlowNetwork::new(tg.node_count());
    for (idx, e) in tg.edges.iter().enumerate() {
        match e.kind {
            EdgeKind::Module(i) => {
                let (lo, hi) = ranges[i];
                let b = &breakpoints[i];
                // slowest level first; b[j] is the slope into level lo + j + 1
                for q in (lo..=hi).rev() {
                    let j = (q - lo) as usize;
                    let cap = if q == lo {
                        big_m - scaled(&b[0])?
                    } else {
                        scaled(&b[j - 1])? - scaled(&b[j])?
                    };
                    net.add_arc(e.from, e.to, -curves[i].delay(q), 0, cap, idx)?;
                }
            }
            EdgeKind::Net { delay, .. } => {
                net.add_arc(e.from, e.to, -delay, 0, big_m, idx)?;
            }
            EdgeKind::Source(_) | EdgeKind::Sink(_) => {
                net.add_arc(e.from, e.to, 0, 0, big_m, idx)?;
            }
            EdgeKind::Cycle => {
                net.add_arc(e.from, e.to, tg.t_cycle, 0, big_m, idx)?;
            }
        }
    }
    Ok(ExpandedNetwork { network: net, scale, big_m })
}

/// Outcome of one flow relaxation over a set of level ranges.
#[derive(Debug, Clone)]
struct Relaxation {
    /// Potential gap across each module edge.
    gap: Vec<i64>,
    /// Largest level whose delay fits the gap.
    rounded: Vec<u32>,
    /// Relaxed optimum (interpolated power).
    bound: Ratio<i128>,
    /// Module with the largest rounding loss, if any module is off a breakpoint.
    fractional: Option<(usize, u32)>,
}

fn relax(tg: &TimingGraph, curves: &[DpCurve], ranges: &[(u32, u32)]) -> Result<Option<Relaxation>, VoltageError> {
    let fastest: Vec<u32> = ranges.iter().map(|r| r.0).collect();
    if longest_path_delay(tg, curves, &fastest) > tg.t_cycle {
        return Ok(None);
    }
    let expanded = build_expanded_for_ranges(tg, curves, ranges)?;
    let result = flow::solve_min_cost_circulation(&expanded.network)?;
    let dist = flow::residual_shortest_paths(&expanded.network, &result, SOURCE)?;
    let mut gap = Vec::with_capacity(tg.modules);
    let mut rounded = Vec::with_capacity(tg.modules);
    let mut bound = Ratio::<i128>::from_integer(0);
    let mut fractional: Option<(usize, u32, Ratio<i128>)> = None;
    for (i, (curve, &(lo, hi))) in curves.iter().zip(ranges).enumerate() {
        let (Some(din), Some(dout)) = (dist[input_node(i)], dist[output_node(i)]) else {
            unreachable!("every timing node is reachable from s through M-capacity arcs");
        };
        let g = din - dout;
        debug_assert!(g >= curve.delay(lo), "gap below fastest delay");
        let q = (lo..=hi).rev().find(|&q| curve.delay(q) <= g).unwrap_or(lo);
        let value = if q == hi || curve.delay(q) == g {
            Ratio::from_integer(curve.power(q) as i128)
        } else {
            let (d0, p0) = (curve.delay(q) as i128, curve.power(q) as i128);
            let (d1, p1) = (curve.delay(q + 1) as i128, curve.power(q + 1) as i128);
            let v = Ratio::from_integer(p0) - Ratio::new((p0 - p1) * (g as i128 - d0), d1 - d0);
            let loss = Ratio::from_integer(p0) - v;
            if fractional.as_ref().is_none_or(|f| loss > f.2) {
                fractional = Some((i, q, loss));
            }
            v
        };
        bound += value;
        gap.push(g);
        rounded.push(q);
    }
    Ok(Some(Relaxation { gap, rounded, bound, fractional: fractional.map(|(i, q, _)| (i, q)) }))
}

/// One relaxation followed by rounding each module down to the largest level
/// whose delay fits its potential gap. Always timing-feasible, not always optimal.
pub fn round_relaxation(tg: &TimingGraph, curves: &[DpCurve]) -> Result<VoltageAssignment, VoltageError> {
    check_curves(tg, curves)?;
    let ranges: Vec<(u32, u32)> = curves.iter().map(|c| (1, c.k() as u32)).collect();
    let r = relax(tg, curves, &ranges)?.ok_or_else(|| infeasible(tg, curves))?;
    let exact = r.fractional.is_none();
    Ok(VoltageAssignment::from_levels(tg, curves, r.rounded, exact))
}

/// Potential gaps across the module edges after one full-range relaxation.
pub fn relaxed_gaps(tg: &TimingGraph, curves: &[DpCurve]) -> Result<Vec<i64>, VoltageError> {
    check_curves(tg, curves)?;
    let ranges: Vec<(u32, u32)> = curves.iter().map(|c| (1, c.k() as u32)).collect();
    Ok(relax(tg, curves, &ranges)?.ok_or_else(|| infeasible(tg, curves))?.gap)
}

fn infeasible(tg: &TimingGraph, curves: &[DpCurve]) -> VoltageError {
    let fastest = vec![1u32; curves.len()];
    VoltageError::TimingInfeasible { fastest: longest_path_delay(tg, curves, &fastest), t_cycle: tg.t_cycle }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AssignOptions {
    /// Relaxations to solve before returning the best assignment found so far.
    pub max_nodes: usize,
}

impl Default for AssignOptions {
    fn default() -> Self {
        Self { max_nodes: 2_000 }
    }
}

/// Minimum-power level assignment meeting `T_cycle`.
pub fn assign_voltages(tg: &TimingGraph, curves: &[DpCurve]) -> Result<VoltageAssignment, VoltageError> {
    assign_voltages_with(tg, curves, AssignOptions::default())
}

pub fn assign_voltages_with(tg: &TimingGraph, curves: &[DpCurve], opts: AssignOptions) -> Result<VoltageAssignment, VoltageError> {
    check_curves(tg, curves)?;
    let root: Vec<(u32, u32)> = curves.iter().map(|c| (1, c.k() as u32)).collect();
    let mut best: Option<(i64, Vec<u32>)> = None;
    let mut stack = vec![root];
    let mut explored = 0usize;
    let mut proven = true;
    while let Some(ranges) = stack.pop() {
        if explored >= opts.max_nodes {
            proven = false;
            break;
        }
        explored += 1;
        let Some(r) = relax(tg, curves, &ranges)? else { continue };
        let power = power_at(curves, &r.rounded);
        debug_assert!(longest_path_delay(tg, curves, &r.rounded) <= tg.t_cycle);
        if best.as_ref().is_none_or(|b| power < b.0) {
            best = Some((power, r.rounded.clone()));
        }
        let incumbent = best.as_ref().map(|b| b.0 as i128).unwrap_or(i128::MAX);
        if r.bound.ceil().to_integer() >= incumbent {
            continue;
        }
        let Some((i, q)) = r.fractional else { continue };
        let (lo, hi) = ranges[i];
        let mut slow = ranges.clone();
        slow[i] = (q + 1, hi);
        let mut fast = ranges;
        fast[i] = (lo, q);
        stack.push(slow);
        stack.push(fast);
    }
    let (_, levels) = best.ok_or_else(|| infeasible(tg, curves))?;
    Ok(VoltageAssignment::from_levels(tg, curves, levels, proven))
}

/// Exhaustive search over all `k^m` level vectors. Ties keep the
/// lexicographically smallest vector.
pub fn brute_force_assign(tg: &TimingGraph, curves: &[DpCurve], max_modules: usize) -> Result<VoltageAssignment, VoltageError> {
    check_curves(tg, curves)?;
    let m = curves.len();
    if m > max_modules {
        return Err(VoltageError::TooLarge { modules: m, limit: max_modules });
    }
    let mut levels = vec![1u32; m];
    let mut best: Option<(i64, Vec<u32>)> = None;
    loop {
        if longest_path_delay(tg, curves, &levels) <= tg.t_cycle {
            let p = power_at(curves, &levels);
            if best.as_ref().is_none_or(|b| p < b.0) {
                best = Some((p, levels.clone()));
            }
        }
        // odometer, last module fastest-changing
        let mut pos = m;
        loop {
            if pos == 0 {
                let (_, lv) = best.ok_or_else(|| infeasible(tg, curves))?;
                return Ok(VoltageAssignment::from_levels(tg, curves, lv, true));
            }
            pos -= 1;
            if (levels[pos] as usize) < curves[pos].k() {
                levels[pos] += 1;
                break;
            }
            levels[pos] = 1;
        }
    }
}
