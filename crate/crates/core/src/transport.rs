//! Size-bounded assignment of points to fixed centers.
//!
//! On the balanced assignment network every unit leaves a point for a center,
//! so successive shortest paths only need the centers as graph nodes: an arc
//! `a -> b` is priced by the cheapest point that could move from `a` to `b`,
//! kept in a lazily pruned heap per ordered pair. Each center offers `lower`
//! reserved seats and `upper - lower` open seats. Reserved seats are cheaper
//! in a leading integer tier, so an optimum fills all of them before it
//! compares distances, which is exactly the `[lower, upper]` constraint.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::ops::{Add, Sub};

use crate::geometry::BalanceBounds;
use crate::{Error, Result};

/// Lexicographic cost: seat tier first, then distance.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Cost {
    tier: i64,
    dist: f64,
}

impl Cost {
    const ZERO: Cost = Cost { tier: 0, dist: 0.0 };

    /// Reduced costs are nonnegative in exact arithmetic; this drops float noise.
    fn clamp_nonneg(self) -> Cost {
        if self.tier == 0 && self.dist < 0.0 {
            Cost::ZERO
        } else {
            self
        }
    }
}

impl Add for Cost {
    type Output = Cost;
    fn add(self, o: Cost) -> Cost {
        Cost {
            tier: self.tier + o.tier,
            dist: self.dist + o.dist,
        }
    }
}

impl Sub for Cost {
    type Output = Cost;
    fn sub(self, o: Cost) -> Cost {
        Cost {
            tier: self.tier - o.tier,
            dist: self.dist - o.dist,
        }
    }
}

impl Eq for Cost {}

impl Ord for Cost {
    fn cmp(&self, o: &Cost) -> Ordering {
        self.tier.cmp(&o.tier).then(self.dist.total_cmp(&o.dist))
    }
}

impl PartialOrd for Cost {
    fn partial_cmp(&self, o: &Cost) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// A point that could leave its seat, keyed by the cost change of moving.
#[derive(Debug, PartialEq, Eq)]
struct Move {
    delta: Cost,
    point: usize,
}

impl Ord for Move {
    // Reversed so that `BinaryHeap` pops the cheapest move, lowest point first.
    fn cmp(&self, o: &Move) -> Ordering {
        o.delta.cmp(&self.delta).then(o.point.cmp(&self.point))
    }
}

impl PartialOrd for Move {
    fn partial_cmp(&self, o: &Move) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

struct Seats<'a> {
    dist: &'a [f64],
    k: usize,
    center: Vec<usize>,
    tier: Vec<i64>,
    cap: Vec<usize>,
    load: Vec<usize>,
    seat_of: Vec<usize>,
    moves: Vec<BinaryHeap<Move>>,
}

impl Seats<'_> {
    fn cost(&self, point: usize, seat: usize) -> Cost {
        Cost {
            tier: self.tier[seat],
            dist: self.dist[point * self.k + self.center[seat]],
        }
    }

    fn count(&self) -> usize {
        self.center.len()
    }

    fn place(&mut self, point: usize, seat: usize) {
        if let Some(old) = self.seat_of.get(point).copied().filter(|&s| s != usize::MAX) {
            self.load[old] -= 1;
        }
        self.seat_of[point] = seat;
        self.load[seat] += 1;
        let here = self.cost(point, seat);
        let s = self.count();
        for other in (0..s).filter(|&o| o != seat) {
            let delta = self.cost(point, other) - here;
            self.moves[seat * s + other].push(Move { delta, point });
        }
    }

    /// Cheapest point currently in `from` that could move to `to`.
    fn best_move(&mut self, from: usize, to: usize) -> Option<(Cost, usize)> {
        let heap = &mut self.moves[from * self.center.len() + to];
        while let Some(top) = heap.peek() {
            if self.seat_of[top.point] == from {
                return Some((top.delta, top.point));
            }
            heap.pop();
        }
        None
    }
}

/// Optimal labels for `dist`, a row-major `n x k` matrix of point-to-center
/// costs, with every center receiving between `bounds.lower` and
/// `bounds.upper` points.
pub(crate) fn assign_bounded(dist: &[f64], n: usize, k: usize, bounds: BalanceBounds) -> Result<Vec<usize>> {
    bounds.check_feasible(n, k)?;
    debug_assert_eq!(dist.len(), n * k);
    let mut seats = Seats {
        dist,
        k,
        center: Vec::new(),
        tier: Vec::new(),
        cap: Vec::new(),
        load: Vec::new(),
        seat_of: vec![usize::MAX; n],
        moves: Vec::new(),
    };
    for j in 0..k {
        for (tier, cap) in [(-1, bounds.lower), (0, bounds.upper - bounds.lower)] {
            if cap > 0 {
                seats.center.push(j);
                seats.tier.push(tier);
                seats.cap.push(cap);
            }
        }
    }
    let s = seats.count();
    seats.load = vec![0; s];
    seats.moves = (0..s * s).map(|_| BinaryHeap::new()).collect();

    let mut potential = vec![Cost::ZERO; s];
    let mut reach = vec![Cost::ZERO; s];
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; s];
    let mut done = vec![false; s];
    for i in 0..n {
        // The source is new to the residual graph; pick its potential so
        // that all of its arcs have nonnegative reduced cost.
        let own = (0..s)
            .map(|t| potential[t] - seats.cost(i, t))
            .max()
            .unwrap_or(Cost::ZERO);
        for t in 0..s {
            reach[t] = (seats.cost(i, t) + own - potential[t]).clamp_nonneg();
            parent[t] = None;
            done[t] = false;
        }
        let target = loop {
            let a = (0..s)
                .filter(|&t| !done[t])
                .min_by(|&x, &y| reach[x].cmp(&reach[y]).then(x.cmp(&y)))
                .ok_or_else(|| Error::Integrality("no free seat reachable".into()))?;
            if seats.load[a] < seats.cap[a] {
                break a;
            }
            done[a] = true;
            for b in 0..s {
                if done[b] {
                    continue;
                }
                if let Some((delta, point)) = seats.best_move(a, b) {
                    let via = reach[a] + (delta + potential[a] - potential[b]).clamp_nonneg();
                    if via < reach[b] {
                        reach[b] = via;
                        parent[b] = Some((a, point));
                    }
                }
            }
        };
        let limit = reach[target];
        for (p, &r) in potential.iter_mut().zip(&reach) {
            *p = *p + r.min(limit);
        }
        let mut seat = target;
        while let Some((from, point)) = parent[seat] {
            seats.place(point, seat);
            seat = from;
        }
        seats.place(i, seat);
    }
    if (0..s).any(|t| seats.tier[t] < 0 && seats.load[t] != seats.cap[t]) {
        return Err(Error::Integrality("a reserved seat was left empty".into()));
    }
    Ok(seats.seat_of.iter().map(|&t| seats.center[t]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use rand::Rng;

    fn brute_force(dist: &[f64], n: usize, k: usize, bounds: BalanceBounds) -> f64 {
        let mut best = f64::INFINITY;
        let mut labels = vec![0usize; n];
        loop {
            let mut sizes = vec![0usize; k];
            labels.iter().for_each(|&j| sizes[j] += 1);
            if sizes.iter().all(|&c| c >= bounds.lower && c <= bounds.upper) {
                let cost: f64 = labels.iter().enumerate().map(|(i, &j)| dist[i * k + j]).sum();
                best = best.min(cost);
            }
            let Some(pos) = labels.iter().position(|&j| j + 1 < k) else {
                return best;
            };
            labels[..pos].iter_mut().for_each(|j| *j = 0);
            labels[pos] += 1;
        }
    }

    fn cost_of(dist: &[f64], k: usize, labels: &[usize]) -> f64 {
        labels.iter().enumerate().map(|(i, &j)| dist[i * k + j]).sum()
    }

    #[test]
    fn matches_brute_force_on_random_tables() {
        let mut rng = RngStream::new(11);
        for _ in 0..300 {
            let n: usize = rng.random_range(1..=7);
            let k = rng.random_range(1..=3);
            let lower = rng.random_range(0..=n / k);
            let upper = rng.random_range(n.div_ceil(k).max(lower).max(1)..=n);
            let bounds = BalanceBounds::new(lower, upper).unwrap();
            // Small integers force plenty of ties.
            let dist: Vec<f64> = (0..n * k).map(|_| rng.random_range(0..6) as f64).collect();
            let labels = assign_bounded(&dist, n, k, bounds).unwrap();
            let mut sizes = vec![0usize; k];
            labels.iter().for_each(|&j| sizes[j] += 1);
            assert!(
                sizes.iter().all(|&c| c >= lower && c <= upper),
                "{sizes:?} not in [{lower}, {upper}]"
            );
            assert_eq!(cost_of(&dist, k, &labels), brute_force(&dist, n, k, bounds));
        }
    }

    #[test]
    fn exact_sizes_force_a_costly_seat() {
        // Both points prefer center 0, but each center takes exactly one.
        let dist = [0.0, 5.0, 1.0, 9.0];
        assert_eq!(
            assign_bounded(&dist, 2, 2, BalanceBounds::new(1, 1).unwrap()).unwrap(),
            vec![1, 0]
        );
    }

    #[test]
    fn slack_bounds_pick_nearest() {
        let dist = [3.0, 1.0, 2.0, 0.0, 4.0, 7.0];
        let labels = assign_bounded(&dist, 3, 2, BalanceBounds::unconstrained(3)).unwrap();
        assert_eq!(labels, vec![1, 1, 0]);
    }

    #[test]
    fn lower_bound_pulls_points_to_a_far_center() {
        let dist = [0.0, 100.0, 0.0, 50.0, 0.0, 80.0, 0.0, 60.0];
        let labels = assign_bounded(&dist, 4, 2, BalanceBounds::new(2, 4).unwrap()).unwrap();
        assert_eq!(labels, vec![0, 1, 0, 1]);
    }

    #[test]
    fn infeasible_bounds_are_rejected() {
        let err = assign_bounded(&[0.0; 6], 3, 2, BalanceBounds::new(2, 3).unwrap()).unwrap_err();
        assert!(matches!(err, Error::InfeasibleBounds { .. }));
    }

    #[test]
    fn empty_input() {
        assert_eq!(
            assign_bounded(&[], 0, 2, BalanceBounds::new(0, 1).unwrap()).unwrap(),
            Vec::<usize>::new()
        );
    }
}
