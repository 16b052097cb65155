//! Minimum-cost flow with arc lower bounds, and the balanced assignment network.
//!
//! Solver: successive shortest augmenting paths with node potentials
//! (Dijkstra on reduced costs). Lower bounds are removed up front by routing
//! `lower(e)` units on every arc and turning the resulting imbalances into
//! supplies and demands on a super source and super sink. Capacities are
//! integral, so every returned flow is integral.

use alloc::collections::BinaryHeap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt::Write as _;

use crate::geometry::{squared_distance, BalanceBounds, CentroidSet, Dataset};
use crate::{Error, Result};

/// Slack allowed on reduced costs and cycle costs in float arithmetic.
const COST_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Arc {
    pub origin: usize,
    pub dest: usize,
    pub lower: i64,
    pub upper: i64,
    pub cost: f64,
}

/// Node layout of a network built by [`build_network`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClusterLayout {
    pub points: usize,
    pub centers: usize,
}

impl ClusterLayout {
    pub const SOURCE: usize = 0;

    #[inline]
    pub fn point_node(&self, i: usize) -> usize {
        1 + i
    }

    #[inline]
    pub fn center_node(&self, j: usize) -> usize {
        1 + self.points + j
    }

    #[inline]
    pub fn sink(&self) -> usize {
        1 + self.points + self.centers
    }

    /// Index of the point-to-center arc `(i, j)` in [`FlowNetwork::arcs`].
    #[inline]
    pub fn assignment_arc(&self, i: usize, j: usize) -> usize {
        self.points + i * self.centers + j
    }

    /// Index of the center-to-sink arc of center `j`.
    #[inline]
    pub fn center_arc(&self, j: usize) -> usize {
        self.points + self.points * self.centers + j
    }
}

/// A directed network; `demands[v]` is the required outflow minus inflow at `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowNetwork {
    node_count: usize,
    arcs: Vec<Arc>,
    demands: Vec<i64>,
    layout: Option<ClusterLayout>,
}

impl FlowNetwork {
    pub fn new(node_count: usize, demands: Vec<i64>) -> Result<Self> {
        if demands.len() != node_count {
            return Err(Error::InvalidParameter(format!(
                "{} demands for {node_count} nodes",
                demands.len()
            )));
        }
        if demands.iter().sum::<i64>() != 0 {
            return Err(Error::InvalidParameter("demands must sum to zero".into()));
        }
        Ok(Self {
            node_count,
            arcs: Vec::new(),
            demands,
            layout: None,
        })
    }

    pub fn add_arc(&mut self, origin: usize, dest: usize, lower: i64, upper: i64, cost: f64) -> Result<usize> {
        if origin >= self.node_count || dest >= self.node_count {
            return Err(Error::InvalidParameter(format!(
                "arc ({origin}, {dest}) leaves the node range"
            )));
        }
        if lower < 0 || lower > upper {
            return Err(Error::InvalidParameter(format!(
                "arc ({origin}, {dest}) needs 0 <= lower <= upper, got [{lower}, {upper}]"
            )));
        }
        if !cost.is_finite() || cost < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "arc ({origin}, {dest}) has cost {cost}, expected finite and nonnegative"
            )));
        }
        self.arcs.push(Arc {
            origin,
            dest,
            lower,
            upper,
            cost,
        });
        Ok(self.arcs.len() - 1)
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    #[inline]
    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    #[inline]
    pub fn demands(&self) -> &[i64] {
        &self.demands
    }

    #[inline]
    pub fn layout(&self) -> Option<ClusterLayout> {
        self.layout
    }

    /// One `origin dest lower upper cost` line per arc.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for a in &self.arcs {
            let _ = writeln!(out, "{} {} {} {} {}", a.origin, a.dest, a.lower, a.upper, a.cost);
        }
        out
    }
}

/// Integral flow values, one per arc, with their total cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Flow {
    pub values: Vec<i64>,
    pub cost: f64,
}

/// Point-to-center assignment `sigma`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub centers: Vec<usize>,
    pub k: usize,
}

impl Assignment {
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        self.centers.iter().for_each(|&j| sizes[j] += 1);
        sizes
    }
}

/// The assignment network: source to every point `[0,1]` at cost 0, every
/// point to every center `[0,1]` at the squared distance, every center to the
/// sink `[l,u]` at cost 0; the source supplies `n` and the sink absorbs `n`.
pub fn build_network(data: &Dataset, centers: &CentroidSet, bounds: BalanceBounds) -> Result<FlowNetwork> {
    if centers.dim() != data.dim() {
        return Err(Error::Dimension {
            expected: data.dim(),
            found: centers.dim(),
        });
    }
    let n = data.len();
    let k = centers.len();
    bounds.check_feasible(n, k)?;
    let layout = ClusterLayout { points: n, centers: k };
    let mut demands = vec![0i64; layout.sink() + 1];
    demands[ClusterLayout::SOURCE] = n as i64;
    demands[layout.sink()] = -(n as i64);
    let mut net = FlowNetwork::new(layout.sink() + 1, demands)?;
    net.arcs.reserve(n + n * k + k);
    for i in 0..n {
        net.add_arc(ClusterLayout::SOURCE, layout.point_node(i), 0, 1, 0.0)?;
    }
    for (i, x) in data.iter().enumerate() {
        for (j, c) in centers.iter().enumerate() {
            net.add_arc(
                layout.point_node(i),
                layout.center_node(j),
                0,
                1,
                squared_distance(x, c),
            )?;
        }
    }
    for j in 0..k {
        net.add_arc(
            layout.center_node(j),
            layout.sink(),
            bounds.lower as i64,
            bounds.upper as i64,
            0.0,
        )?;
    }
    net.layout = Some(layout);
    Ok(net)
}

#[derive(Debug, Clone, Copy)]
struct ResidualEdge {
    to: usize,
    cap: i64,
    cost: f64,
}

/// Residual graph with paired edges: edge `2e` is forward, `2e + 1` its reverse.
struct Residual {
    edges: Vec<ResidualEdge>,
    adjacency: Vec<Vec<usize>>,
}

impl Residual {
    fn with_nodes(nodes: usize) -> Self {
        Self {
            edges: Vec::new(),
            adjacency: vec![Vec::new(); nodes],
        }
    }

    fn add(&mut self, from: usize, to: usize, cap: i64, cost: f64) -> usize {
        let id = self.edges.len();
        self.edges.push(ResidualEdge { to, cap, cost });
        self.edges.push(ResidualEdge {
            to: from,
            cap: 0,
            cost: -cost,
        });
        self.adjacency[from].push(id);
        self.adjacency[to].push(id + 1);
        id
    }

    fn push(&mut self, edge: usize, amount: i64) {
        self.edges[edge].cap -= amount;
        self.edges[edge ^ 1].cap += amount;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapItem {
    dist: f64,
    node: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Minimum-cost integral flow meeting every demand and arc bound.
pub fn solve_min_cost_flow(net: &FlowNetwork) -> Result<Flow> {
    let nodes = net.node_count;
    let super_source = nodes;
    let super_sink = nodes + 1;
    let mut residual = Residual::with_nodes(nodes + 2);

    // Route every lower bound up front; what remains is a plain capacitated
    // problem with supplies in `balance`.
    let mut balance = net.demands.clone();
    let mut arc_edges = Vec::with_capacity(net.arcs.len());
    for a in &net.arcs {
        balance[a.origin] -= a.lower;
        balance[a.dest] += a.lower;
        arc_edges.push(residual.add(a.origin, a.dest, a.upper - a.lower, a.cost));
    }
    let mut required = 0i64;
    for (v, &b) in balance.iter().enumerate() {
        if b > 0 {
            residual.add(super_source, v, b, 0.0);
            required += b;
        } else if b < 0 {
            residual.add(v, super_sink, -b, 0.0);
        }
    }

    let total_nodes = nodes + 2;
    let cost_scale = net.arcs.iter().map(|a| a.cost).fold(1.0f64, f64::max) * total_nodes as f64;
    let mut potential = vec![0.0f64; total_nodes];
    let mut dist = vec![f64::INFINITY; total_nodes];
    let mut parent = vec![usize::MAX; total_nodes];
    let mut done = vec![false; total_nodes];
    let mut heap = BinaryHeap::new();
    let mut sent = 0i64;

    while sent < required {
        dist.fill(f64::INFINITY);
        parent.fill(usize::MAX);
        done.fill(false);
        dist[super_source] = 0.0;
        heap.clear();
        heap.push(HeapItem {
            dist: 0.0,
            node: super_source,
        });
        while let Some(HeapItem { dist: d, node: u }) = heap.pop() {
            if done[u] {
                continue;
            }
            done[u] = true;
            if u == super_sink {
                break;
            }
            for &e in &residual.adjacency[u] {
                let edge = residual.edges[e];
                if edge.cap <= 0 || done[edge.to] {
                    continue;
                }
                let reduced = edge.cost + potential[u] - potential[edge.to];
                debug_assert!(reduced >= -COST_EPS * cost_scale, "negative reduced cost {reduced}");
                // Reduced costs are nonnegative up to rounding.
                let reduced = reduced.max(0.0);
                let nd = d + reduced;
                if nd < dist[edge.to] {
                    dist[edge.to] = nd;
                    parent[edge.to] = e;
                    heap.push(HeapItem {
                        dist: nd,
                        node: edge.to,
                    });
                }
            }
        }
        if !done[super_sink] {
            break;
        }
        // Stopping at the sink leaves other distances tentative; capping them
        // at the sink's distance keeps every reduced cost nonnegative.
        let reach = dist[super_sink];
        for (p, &d) in potential.iter_mut().zip(&dist) {
            *p += d.min(reach);
        }
        let mut bottleneck = required - sent;
        let mut v = super_sink;
        while v != super_source {
            let e = parent[v];
            bottleneck = bottleneck.min(residual.edges[e].cap);
            v = residual.edges[e ^ 1].to;
        }
        let mut v = super_sink;
        while v != super_source {
            let e = parent[v];
            residual.push(e, bottleneck);
            v = residual.edges[e ^ 1].to;
        }
        sent += bottleneck;
    }

    if sent < required {
        let cut = (0..nodes).filter(|&v| done[v]).collect();
        return Err(Error::InfeasibleFlow {
            unrouted: required - sent,
            cut,
        });
    }

    let values: Vec<i64> = net
        .arcs
        .iter()
        .zip(&arc_edges)
        .map(|(a, &e)| a.lower + residual.edges[e ^ 1].cap)
        .collect();
    let cost = flow_cost(net, &values);
    Ok(Flow { values, cost })
}

/// `sum f(e) * c(e)`.
pub fn flow_cost(net: &FlowNetwork, values: &[i64]) -> f64 {
    net.arcs.iter().zip(values).map(|(a, &f)| f as f64 * a.cost).sum()
}

/// Checks arc bounds and conservation (`outflow - inflow = demand` everywhere).
pub fn check_flow(net: &FlowNetwork, flow: &Flow) -> Result<()> {
    if flow.values.len() != net.arcs.len() {
        return Err(Error::InvalidParameter(format!(
            "{} flow values for {} arcs",
            flow.values.len(),
            net.arcs.len()
        )));
    }
    let mut excess = vec![0i64; net.node_count];
    for (idx, (a, &f)) in net.arcs.iter().zip(&flow.values).enumerate() {
        if f < a.lower || f > a.upper {
            return Err(Error::InvalidParameter(format!(
                "arc {idx} carries {f}, outside [{}, {}]",
                a.lower, a.upper
            )));
        }
        excess[a.origin] += f;
        excess[a.dest] -= f;
    }
    if let Some(v) = (0..net.node_count).find(|&v| excess[v] != net.demands[v]) {
        return Err(Error::InvalidParameter(format!(
            "node {v} has net outflow {}, demand {}",
            excess[v], net.demands[v]
        )));
    }
    Ok(())
}

/// Bellman-Ford audit: true when the residual graph of `flow` has a cycle of
/// negative cost, i.e. the flow is not optimal.
pub fn residual_has_negative_cycle(net: &FlowNetwork, flow: &Flow) -> bool {
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    for (a, &f) in net.arcs.iter().zip(&flow.values) {
        if f < a.upper {
            edges.push((a.origin, a.dest, a.cost));
        }
        if f > a.lower {
            edges.push((a.dest, a.origin, -a.cost));
        }
    }
    let scale = net.arcs.iter().map(|a| a.cost).fold(1.0f64, f64::max);
    let eps = 1e-9 * scale;
    let mut dist = vec![0.0f64; net.node_count];
    for _ in 0..net.node_count {
        let mut changed = false;
        for &(u, v, w) in &edges {
            if dist[u] + w < dist[v] - eps {
                dist[v] = dist[u] + w;
                changed = true;
            }
        }
        if !changed {
            return false;
        }
    }
    true
}

/// Reads `sigma(i)` off the unit flow on the point-to-center arcs.
pub fn flow_to_assignment(net: &FlowNetwork, flow: &Flow) -> Result<Assignment> {
    let layout = net
        .layout
        .ok_or_else(|| Error::InvalidParameter("network was not built by build_network".into()))?;
    if flow.values.len() != net.arcs.len() {
        return Err(Error::Integrality(format!(
            "{} flow values for {} arcs",
            flow.values.len(),
            net.arcs.len()
        )));
    }
    let mut centers = Vec::with_capacity(layout.points);
    for i in 0..layout.points {
        let mut chosen = None;
        for j in 0..layout.centers {
            match flow.values[layout.assignment_arc(i, j)] {
                0 => {}
                1 if chosen.is_none() => chosen = Some(j),
                f => {
                    return Err(Error::Integrality(format!(
                        "point {i} sends {f} unit(s) to center {j} beyond its single unit"
                    )))
                }
            }
        }
        centers.push(chosen.ok_or_else(|| Error::Integrality(format!("point {i} is not assigned")))?);
    }
    let assignment = Assignment {
        centers,
        k: layout.centers,
    };
    for (j, size) in assignment.sizes().into_iter().enumerate() {
        let arc = &net.arcs[layout.center_arc(j)];
        if (size as i64) < arc.lower || (size as i64) > arc.upper {
            return Err(Error::Integrality(format!(
                "center {j} receives {size} points, outside [{}, {}]",
                arc.lower, arc.upper
            )));
        }
    }
    Ok(assignment)
}

/// The unit flow that realises `assignment` on a network from [`build_network`].
pub fn assignment_to_flow(net: &FlowNetwork, assignment: &Assignment) -> Result<Flow> {
    let layout = net
        .layout
        .ok_or_else(|| Error::InvalidParameter("network was not built by build_network".into()))?;
    if assignment.centers.len() != layout.points || assignment.k != layout.centers {
        return Err(Error::InvalidParameter(
            "assignment does not match the network layout".into(),
        ));
    }
    let mut values = vec![0i64; net.arcs.len()];
    for (i, &j) in assignment.centers.iter().enumerate() {
        values[i] = 1;
        values[layout.assignment_arc(i, j)] = 1;
    }
    for (j, size) in assignment.sizes().into_iter().enumerate() {
        values[layout.center_arc(j)] = size as i64;
    }
    let cost = flow_cost(net, &values);
    Ok(Flow { values, cost })
}

/// Cheapest assignment of `data` to `centers` with every center receiving
/// between `bounds.lower` and `bounds.upper` points.
///
/// Solves the same problem as [`build_network`] plus [`solve_min_cost_flow`],
/// with a solver specialised to this network's shape.
pub fn balanced_assignment(data: &Dataset, centers: &CentroidSet, bounds: BalanceBounds) -> Result<Assignment> {
    if centers.dim() != data.dim() {
        return Err(Error::Dimension {
            expected: data.dim(),
            found: centers.dim(),
        });
    }
    let k = centers.len();
    let mut dist = Vec::with_capacity(data.len() * k);
    for x in data.iter() {
        dist.extend(centers.iter().map(|c| squared_distance(x, c)));
    }
    let centers = crate::transport::assign_bounded(&dist, data.len(), k, bounds)?;
    Ok(Assignment { centers, k })
}
