//! Equal-weight transport as a sparse assignment problem.
//!
//! Two measures with the same number of equally weighted atoms have an
//! optimal coupling that is a permutation. It is found by the forward
//! auction algorithm with ε-scaling on a candidate arc set. Rows bid for the
//! column minimizing `c_ij + p_j`; at the end every row is within `ε` of its
//! best column, so with weights `1/n` the duality gap is at most `ε`.
//!
//! The candidate set starts from caller-supplied column ranges. After the
//! last phase every cell is priced against the duals; rows with a cheaper
//! column outside their arcs get those arcs and bid again, so the result is
//! optimal for the full problem.

use std::collections::VecDeque;

use super::simplex::{Pricing, SimplexSolution};
use crate::measure::neumaier_sum;

/// Violating arcs kept per row in one column-generation round.
const ADD_PER_ROW: usize = 8;
/// Column-generation rounds before giving up.
const MAX_ROUNDS: usize = 64;
/// ε reduction factor between phases.
const SCALING: f64 = 8.0;

const FREE: usize = usize::MAX;

struct Auction {
    /// Per row: `(column, cost)`.
    arcs: Vec<Vec<(usize, f64)>>,
    price: Vec<f64>,
    owner: Vec<usize>,
    assigned: Vec<usize>,
    queue: VecDeque<usize>,
    bids: usize,
    /// Price raise for a row with a single arc.
    lone_raise: f64,
}

impl Auction {
    fn unassign(&mut self, i: usize) {
        let j = self.assigned[i];
        if j != FREE {
            self.owner[j] = FREE;
            self.assigned[i] = FREE;
        }
        self.queue.push_back(i);
    }

    /// Bid until every row holds a column.
    fn run(&mut self, eps: f64) {
        while let Some(i) = self.queue.pop_front() {
            let (mut best, mut w1, mut w2) = (FREE, f64::INFINITY, f64::INFINITY);
            for &(j, c) in &self.arcs[i] {
                let w = c + self.price[j];
                if w < w1 {
                    w2 = w1;
                    w1 = w;
                    best = j;
                } else if w < w2 {
                    w2 = w;
                }
            }
            let raise = if w2.is_finite() { w2 - w1 } else { self.lone_raise };
            self.price[best] += raise + eps;
            let prev = self.owner[best];
            if prev != FREE {
                self.assigned[prev] = FREE;
                self.queue.push_back(prev);
            }
            self.owner[best] = i;
            self.assigned[i] = best;
            self.bids += 1;
        }
    }

    /// ε-scaling phases from `start` down to `tol`. A phase keeps the rows
    /// that are already within its ε of their best column.
    fn scale(&mut self, start: f64, tol: f64) {
        let mut eps = start.max(tol);
        loop {
            for i in 0..self.assigned.len() {
                let j = self.assigned[i];
                let keep = j != FREE && {
                    let c = self.arcs[i].iter().find(|a| a.0 == j).map_or(f64::INFINITY, |a| a.1);
                    c + self.price[j] <= self.row_min(i) + eps
                };
                if !keep {
                    self.unassign(i);
                }
            }
            self.run(eps);
            if eps <= tol {
                break;
            }
            eps = (eps / SCALING).max(tol);
        }
    }

    fn row_min(&self, i: usize) -> f64 {
        self.arcs[i].iter().map(|&(j, c)| c + self.price[j]).fold(f64::INFINITY, f64::min)
    }
}

/// Optimal assignment of `n` rows to `n` columns, each carrying `weight`.
///
/// Row `i` starts with the columns `ranges[i].0..ranges[i].1`, which must
/// include `i`, plus every `stride`-th column (none if `stride == 0`). `tol`
/// is both the final ε and the reduced-cost threshold of the full pricing
/// pass.
pub fn solve<C: Fn(usize, usize) -> f64>(
    weight: f64,
    cost: &C,
    pricing: &dyn Pricing,
    tol: f64,
    ranges: &[(usize, usize)],
    stride: usize,
) -> SimplexSolution {
    let n = ranges.len();
    let arcs: Vec<Vec<(usize, f64)>> = ranges
        .iter()
        .enumerate()
        .map(|(i, &(lo, hi))| {
            let mut row: Vec<(usize, f64)> = (lo..hi).map(|j| (j, cost(i, j))).collect();
            if stride > 0 {
                row.extend((i % stride..n).step_by(stride).filter(|j| !(lo..hi).contains(j)).map(|j| (j, cost(i, j))));
            }
            row
        })
        .collect();
    let c_max = arcs.iter().flatten().map(|a| a.1).fold(0.0, f64::max);
    let mut au = Auction {
        arcs,
        price: vec![0.0; n],
        owner: vec![FREE; n],
        assigned: vec![FREE; n],
        queue: VecDeque::new(),
        bids: 0,
        lone_raise: c_max + 1.0,
    };
    au.scale(c_max / SCALING, tol);

    let mut rounds = 0;
    let mut u = vec![0.0; n];
    let mut min_rc;
    loop {
        rounds += 1;
        for (i, ui) in u.iter_mut().enumerate() {
            *ui = au.row_min(i);
        }
        let v: Vec<f64> = au.price.iter().map(|p| -p).collect();
        min_rc = 0.0f64;
        let mut worst: Vec<Vec<(f64, usize)>> = vec![Vec::new(); n];
        pricing.scan(&u, &v, tol, &mut |i, j, rc| {
            min_rc = min_rc.min(rc);
            if rc < -tol {
                let w = &mut worst[i];
                if w.len() < ADD_PER_ROW {
                    w.push((rc, j));
                } else if let Some(m) = w.iter_mut().max_by(|a, b| a.0.total_cmp(&b.0)) {
                    if rc < m.0 {
                        *m = (rc, j);
                    }
                }
            }
        });
        if min_rc >= -tol || rounds >= MAX_ROUNDS {
            break;
        }
        let mut added = false;
        for (i, w) in worst.iter().enumerate() {
            let before = au.arcs[i].len();
            for &(_, j) in w {
                if !au.arcs[i].iter().any(|a| a.0 == j) {
                    au.arcs[i].push((j, cost(i, j)));
                }
            }
            added |= au.arcs[i].len() > before;
        }
        if !added {
            break;
        }
        // new arcs can start a price war at small ε; rescale from the violation size
        au.scale(-min_rc, tol);
    }

    let cells: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, au.assigned[i], weight)).collect();
    let primal = weight * neumaier_sum(cells.iter().map(|&(i, j, _)| cost(i, j)));
    let dual = weight * (neumaier_sum(u.iter().copied()) - neumaier_sum(au.price.iter().copied()));
    SimplexSolution {
        cells,
        row_potential: u,
        col_potential: au.price.iter().map(|p| -p).collect(),
        primal,
        dual,
        dual_infeasibility: (-min_rc).max(0.0),
        pivots: au.bids,
        degenerate_pivots: 0,
        rounds,
        optimal: min_rc >= -tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ot::simplex::Dense;

    fn brute(c: &[Vec<f64>]) -> f64 {
        fn rec(c: &[Vec<f64>], row: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
            if row == c.len() {
                *best = best.min(acc);
                return;
            }
            for j in 0..c.len() {
                if !used[j] {
                    used[j] = true;
                    rec(c, row + 1, used, acc + c[row][j], best);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        rec(c, 0, &mut vec![false; c.len()], 0.0, &mut best);
        best
    }

    #[test]
    fn matches_permutation_minimum() {
        let mut state = 7u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for n in 1..=6 {
            for _ in 0..20 {
                let c: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| next()).collect()).collect();
                let f = |i: usize, j: usize| c[i][j];
                // the diagonal alone forces column generation
                let ranges: Vec<_> = (0..n).map(|i| (i, i + 1)).collect();
                let s = solve(1.0 / n as f64, &f, &Dense { cost: &f }, 1e-13, &ranges, 0);
                assert!(s.optimal);
                let exact = brute(&c) / n as f64;
                assert!((s.primal - exact).abs() < 1e-12, "{} {exact}", s.primal);
                assert!((s.primal - s.dual).abs() < 1e-12);
            }
        }
    }
}
