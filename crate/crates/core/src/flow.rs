//! Integer min-cost flow.
//!
//! Two solvers share one residual representation:
//!
//! * [`solve_min_cost_circulation`] handles negative arc costs and arbitrary
//!   (also negative) lower bounds. Every negative-cost arc starts saturated and
//!   every other arc at its lower bound; the resulting node imbalances are then
//!   routed by successive shortest paths. Starting this way leaves no negative
//!   residual arc, so Dijkstra with potentials is valid from the first round.
//! * [`solve_min_cost_max_flow`] is plain successive shortest paths from `s` to
//!   `t` with Bellman-Ford initial potentials.
//!
//! [`residual_shortest_paths`] recovers node distances on the residual network,
//! which doubles as the optimality certificate.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FlowError {
    #[error("arc {tail}->{head} has lower bound {lower} above upper bound {upper}")]
    BadBounds { tail: usize, head: usize, lower: i64, upper: i64 },
    #[error("self-loop arc at node {0}")]
    SelfLoop(usize),
    #[error("arc endpoint {node} out of range (network has {nodes} nodes)")]
    NodeOutOfRange { node: usize, nodes: usize },
    #[error("lower bounds cannot be satisfied by any circulation")]
    InfeasibleLowerBounds,
    #[error("max-flow mode requires all lower bounds to be zero")]
    NonZeroLowerBound,
    #[error("network has a negative-cost cycle reachable from the source")]
    NegativeCycle,
    #[error("residual network has a negative cycle; the flow is not optimal")]
    NegativeResidualCycle,
    #[error("integer overflow in flow arithmetic")]
    Overflow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arc {
    pub tail: usize,
    pub head: usize,
    pub cost: i64,
    pub lower: i64,
    pub upper: i64,
    /// Opaque caller label, carried through untouched.
    pub tag: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FlowNetwork {
    nodes: usize,
    arcs: Vec<Arc>,
}

impl FlowNetwork {
    pub fn new(nodes: usize) -> Self {
        Self { nodes, arcs: Vec::new() }
    }

    pub fn add_node(&mut self) -> usize {
        self.nodes += 1;
        self.nodes - 1
    }

    pub fn add_arc(&mut self, tail: usize, head: usize, cost: i64, lower: i64, upper: i64, tag: usize) -> Result<usize, FlowError> {
        for node in [tail, head] {
            if node >= self.nodes {
                return Err(FlowError::NodeOutOfRange { node, nodes: self.nodes });
            }
        }
        if tail == head {
            return Err(FlowError::SelfLoop(tail));
        }
        if lower > upper {
            return Err(FlowError::BadBounds { tail, head, lower, upper });
        }
        self.arcs.push(Arc { tail, head, cost, lower, upper, tag });
        Ok(self.arcs.len() - 1)
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    /// One arc per line: `tail head cost lower upper tag`.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for a in &self.arcs {
            let _ = writeln!(s, "{} {} {} {} {} {}", a.tail, a.head, a.cost, a.lower, a.upper, a.tag);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowResult {
    /// Flow per arc, in the network's arc order.
    pub flow: Vec<i64>,
    pub objective: i64,
    /// Flow value from source to sink (max-flow mode), zero for circulations.
    pub value: i64,
}

impl FlowResult {
    /// Checks bounds and conservation. In max-flow mode pass `Some((s, t))`.
    pub fn is_feasible(&self, net: &FlowNetwork, terminals: Option<(usize, usize)>) -> bool {
        let mut balance = vec![0i64; net.nodes];
        for (a, &f) in net.arcs.iter().zip(&self.flow) {
            if f < a.lower || f > a.upper {
                return false;
            }
            balance[a.tail] -= f;
            balance[a.head] += f;
        }
        balance.iter().enumerate().all(|(v, &b)| match terminals {
            Some((s, _)) if v == s => b == -self.value,
            Some((_, t)) if v == t => b == self.value,
            _ => b == 0,
        })
    }
}

/// Paired residual edges; edge `e ^ 1` is the reverse of `e`.
struct Residual {
    head: Vec<usize>,
    cap: Vec<i64>,
    cost: Vec<i64>,
    adj: Vec<Vec<usize>>,
}

impl Residual {
    fn new(nodes: usize) -> Self {
        Self { head: Vec::new(), cap: Vec::new(), cost: Vec::new(), adj: vec![Vec::new(); nodes] }
    }

    fn add(&mut self, tail: usize, head: usize, cap: i64, rev_cap: i64, cost: i64) -> usize {
        let e = self.head.len();
        self.head.extend([head, tail]);
        self.cap.extend([cap, rev_cap]);
        self.cost.extend([cost, -cost]);
        self.adj[tail].push(e);
        self.adj[head].push(e + 1);
        e
    }

    fn push(&mut self, e: usize, amount: i64) {
        self.cap[e] -= amount;
        self.cap[e ^ 1] += amount;
    }

    /// Dijkstra on reduced costs from `src`; returns distances and parent edges.
    fn dijkstra(&self, src: usize, potential: &[i64]) -> (Vec<Option<i64>>, Vec<usize>) {
        let n = self.adj.len();
        let mut dist: Vec<Option<i64>> = vec![None; n];
        let mut parent = vec![usize::MAX; n];
        let mut heap = BinaryHeap::new();
        dist[src] = Some(0);
        heap.push(Reverse((0i64, src)));
        while let Some(Reverse((d, v))) = heap.pop() {
            if dist[v] != Some(d) {
                continue;
            }
            for &e in &self.adj[v] {
                if self.cap[e] <= 0 {
                    continue;
                }
                let w = self.head[e];
                let nd = d + self.cost[e] + potential[v] - potential[w];
                debug_assert!(self.cost[e] + potential[v] - potential[w] >= 0);
                if dist[w].is_none_or(|old| nd < old) {
                    dist[w] = Some(nd);
                    parent[w] = e;
                    heap.push(Reverse((nd, w)));
                }
            }
        }
        (dist, parent)
    }

    /// Successive shortest paths from `s` to `t`, up to `limit` units.
    /// Requires `potential` to make every positive-capacity reduced cost nonnegative.
    fn augment_all(&mut self, s: usize, t: usize, limit: i64, potential: &mut [i64]) -> i64 {
        let mut sent = 0i64;
        while sent < limit {
            let (dist, parent) = self.dijkstra(s, potential);
            let Some(_) = dist[t] else { break };
            // unreached nodes move by the largest distance so arcs into the
            // reached set keep nonnegative reduced cost
            let far = dist.iter().flatten().copied().max().unwrap_or(0);
            for (p, d) in potential.iter_mut().zip(&dist) {
                *p += d.unwrap_or(far);
            }
            let mut amount = limit - sent;
            let mut v = t;
            while v != s {
                let e = parent[v];
                amount = amount.min(self.cap[e]);
                v = self.head[e ^ 1];
            }
            let mut v = t;
            while v != s {
                let e = parent[v];
                self.push(e, amount);
                v = self.head[e ^ 1];
            }
            sent += amount;
        }
        sent
    }
}

fn objective(net: &FlowNetwork, flow: &[i64]) -> Result<i64, FlowError> {
    net.arcs.iter().zip(flow).try_fold(0i64, |acc, (a, &f)| {
        a.cost.checked_mul(f).and_then(|c| acc.checked_add(c)).ok_or(FlowError::Overflow)
    })
}

/// Minimum-cost circulation with arbitrary integer costs and bounds.
pub fn solve_min_cost_circulation(net: &FlowNetwork) -> Result<FlowResult, FlowError> {
    let n = net.nodes;
    let (source, sink) = (n, n + 1);
    let mut res = Residual::new(n + 2);
    let mut base = Vec::with_capacity(net.arcs.len());
    let mut excess = vec![0i64; n];
    let mut edge_of = Vec::with_capacity(net.arcs.len());
    for a in &net.arcs {
        let span = a.upper.checked_sub(a.lower).ok_or(FlowError::Overflow)?;
        let start = if a.cost < 0 { a.upper } else { a.lower };
        let used = start - a.lower;
        edge_of.push(res.add(a.tail, a.head, span - used, used, a.cost));
        base.push(a.lower);
        excess[a.tail] = excess[a.tail].checked_sub(start).ok_or(FlowError::Overflow)?;
        excess[a.head] = excess[a.head].checked_add(start).ok_or(FlowError::Overflow)?;
    }
    let mut need = 0i64;
    for (v, &x) in excess.iter().enumerate() {
        if x > 0 {
            res.add(source, v, x, 0, 0);
            need = need.checked_add(x).ok_or(FlowError::Overflow)?;
        } else if x < 0 {
            res.add(v, sink, -x, 0, 0);
        }
    }
    let mut potential = vec![0i64; n + 2];
    let sent = res.augment_all(source, sink, need, &mut potential);
    if sent < need {
        return Err(FlowError::InfeasibleLowerBounds);
    }
    let flow: Vec<i64> = edge_of.iter().zip(&base).map(|(&e, &lo)| lo + res.cap[e ^ 1]).collect();
    let objective = objective(net, &flow)?;
    Ok(FlowResult { flow, objective, value: 0 })
}

/// Maximum `s`-`t` flow of minimum cost. All lower bounds must be zero.
pub fn solve_min_cost_max_flow(net: &FlowNetwork, s: usize, t: usize) -> Result<FlowResult, FlowError> {
    let n = net.nodes;
    for node in [s, t] {
        if node >= n {
            return Err(FlowError::NodeOutOfRange { node, nodes: n });
        }
    }
    if net.arcs.iter().any(|a| a.lower != 0) {
        return Err(FlowError::NonZeroLowerBound);
    }
    let mut res = Residual::new(n);
    let edge_of: Vec<usize> = net.arcs.iter().map(|a| res.add(a.tail, a.head, a.upper, 0, a.cost)).collect();
    // Bellman-Ford potentials so negative arc costs are allowed.
    let dist = bellman_ford(n, s, res_edges(&res))?;
    let mut potential: Vec<i64> = dist.iter().map(|d| d.unwrap_or(0)).collect();
    let value = if s == t { 0 } else { res.augment_all(s, t, i64::MAX, &mut potential) };
    let flow: Vec<i64> = edge_of.iter().map(|&e| res.cap[e ^ 1]).collect();
    let objective = objective(net, &flow)?;
    Ok(FlowResult { flow, objective, value })
}

fn res_edges(res: &Residual) -> impl Iterator<Item = (usize, usize, i64)> + Clone + '_ {
    (0..res.head.len()).filter(|&e| res.cap[e] > 0).map(|e| (res.head[e ^ 1], res.head[e], res.cost[e]))
}

/// Bellman-Ford from `src`; `None` marks unreachable nodes.
fn bellman_ford<I>(n: usize, src: usize, edges: I) -> Result<Vec<Option<i64>>, FlowError>
where
    I: Iterator<Item = (usize, usize, i64)> + Clone,
{
    let mut dist: Vec<Option<i64>> = vec![None; n];
    dist[src] = Some(0);
    for round in 0..=n {
        let mut changed = false;
        for (u, v, c) in edges.clone() {
            if let Some(du) = dist[u] {
                let nd = du + c;
                if dist[v].is_none_or(|dv| nd < dv) {
                    dist[v] = Some(nd);
                    changed = true;
                }
            }
        }
        if !changed {
            return Ok(dist);
        }
        if round == n {
            break;
        }
    }
    Err(FlowError::NegativeCycle)
}

/// Residual arcs of `result`: forward while below the upper bound, backward
/// while above the lower bound.
pub fn residual_arcs<'a>(net: &'a FlowNetwork, result: &'a FlowResult) -> impl Iterator<Item = (usize, usize, i64)> + Clone + 'a {
    net.arcs.iter().zip(&result.flow).flat_map(|(a, &f)| {
        let fwd = (f < a.upper).then_some((a.tail, a.head, a.cost));
        let back = (f > a.lower).then_some((a.head, a.tail, -a.cost));
        fwd.into_iter().chain(back)
    })
}

/// Shortest-path distances from `src` on the residual network of `result`.
/// Unreachable nodes are `None`.
pub fn residual_shortest_paths(net: &FlowNetwork, result: &FlowResult, src: usize) -> Result<Vec<Option<i64>>, FlowError> {
    bellman_ford(net.nodes, src, residual_arcs(net, result)).map_err(|_| FlowError::NegativeResidualCycle)
}

/// Node potentials certifying optimality: distances from a virtual root
/// joined to every node by a zero-cost arc.
pub fn residual_potentials(net: &FlowNetwork, result: &FlowResult) -> Result<Vec<i64>, FlowError> {
    let n = net.nodes;
    let root = (0..n).map(move |v| (n, v, 0));
    let dist = bellman_ford(n + 1, n, residual_arcs(net, result).chain(root)).map_err(|_| FlowError::NegativeResidualCycle)?;
    Ok(dist[..n].iter().map(|d| d.unwrap_or(0)).collect())
}

/// Reduced-cost optimality: `cost + d(tail) - d(head) >= 0` on every residual arc.
pub fn reduced_costs_nonnegative(net: &FlowNetwork, result: &FlowResult, dist: &[i64]) -> bool {
    residual_arcs(net, result).all(|(u, v, c)| c + dist[u] - dist[v] >= 0)
}
