//! Transportation-problem network simplex.
//!
//! Rows and columns form a bipartite graph; a basis is a spanning tree of
//! `m + n - 1` cells. The initial tree comes from the north-west corner rule
//! on the caller's ordering (callers sort 1-d supports first, which makes the
//! start the monotone coupling), which is strongly feasible when rooted at
//! row 0. Entering cells are chosen by block pricing over a candidate arc set
//! and the leaving cell by Cunningham's rule, so degenerate pivots cannot
//! cycle. Bland's rule is kept as a fallback for long degenerate runs, where
//! rounding may have broken strong feasibility.
//!
//! With a banded candidate set the restricted problem is re-solved after
//! adding every arc that prices out negative against its duals, so the final
//! basis is optimal for the full problem.

use std::collections::{HashSet, VecDeque};

/// Consecutive degenerate pivots, per node, tolerated before switching to Bland's rule.
const DEGENERATE_RUN: usize = 4;
/// Violating arcs kept per row in one column-generation round.
const ADD_PER_ROW: usize = 8;

/// Arcs offered to the pricing step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Candidates {
    All,
    /// Columns within this many positions of the monotone coupling in each row.
    Band(usize),
}

/// Full pricing pass used to certify a restricted optimum.
pub trait Pricing {
    /// Call `visit(i, j, reduced_cost)` for every cell that may have reduced
    /// cost below `-tol`, rows in nondecreasing order. Cells not visited must
    /// have reduced cost at least `-tol`.
    fn scan(&self, u: &[f64], v: &[f64], tol: f64, visit: &mut dyn FnMut(usize, usize, f64));
}

/// Prices every cell.
pub struct Dense<'a, C: Fn(usize, usize) -> f64> {
    pub cost: &'a C,
}

impl<C: Fn(usize, usize) -> f64> Pricing for Dense<'_, C> {
    fn scan(&self, u: &[f64], v: &[f64], _tol: f64, visit: &mut dyn FnMut(usize, usize, f64)) {
        for (i, ui) in u.iter().enumerate() {
            for (j, vj) in v.iter().enumerate() {
                visit(i, j, (self.cost)(i, j) - ui - vj);
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    row: usize,
    col: usize,
    flow: f64,
}

#[derive(Debug, Clone)]
pub struct SimplexSolution {
    /// Basic cells `(row, col, flow)`; zero flows included.
    pub cells: Vec<(usize, usize, f64)>,
    pub row_potential: Vec<f64>,
    pub col_potential: Vec<f64>,
    pub primal: f64,
    pub dual: f64,
    /// `max(0, -min reduced cost)` over all cells at termination.
    pub dual_infeasibility: f64,
    pub pivots: usize,
    pub degenerate_pivots: usize,
    /// Column-generation rounds (1 when every arc is a candidate).
    pub rounds: usize,
    pub optimal: bool,
}

struct Tree<'a, C: Fn(usize, usize) -> f64> {
    m: usize,
    cost: &'a C,
    cells: Vec<Cell>,
    adj: Vec<Vec<usize>>,
    pot: Vec<f64>,
    parent: Vec<(usize, usize)>,
    depth: Vec<usize>,
}

impl<'a, C: Fn(usize, usize) -> f64> Tree<'a, C> {
    fn link(&mut self, slot: usize) {
        let c = self.cells[slot];
        self.adj[c.row].push(slot);
        self.adj[self.m + c.col].push(slot);
    }

    fn unlink(&mut self, slot: usize) {
        let c = self.cells[slot];
        for node in [c.row, self.m + c.col] {
            let list = &mut self.adj[node];
            let pos = list.iter().position(|&s| s == slot).expect("slot present in adjacency");
            list.swap_remove(pos);
        }
    }

    fn other_end(&self, slot: usize, node: usize) -> usize {
        let c = self.cells[slot];
        if node == c.row {
            self.m + c.col
        } else {
            c.row
        }
    }

    fn slot_cost(&self, slot: usize) -> f64 {
        let c = self.cells[slot];
        (self.cost)(c.row, c.col)
    }

    /// Hang the component containing `start` below `anchor` through `slot`,
    /// recomputing potentials, parents and depths inside the component only.
    fn rehang(&mut self, start: usize, anchor: usize, slot: usize, seen: &mut [bool], queue: &mut VecDeque<usize>) {
        let mut touched = vec![start];
        seen[anchor] = true;
        seen[start] = true;
        self.pot[start] = self.slot_cost(slot) - self.pot[anchor];
        self.parent[start] = (anchor, slot);
        self.depth[start] = self.depth[anchor] + 1;
        queue.push_back(start);
        while let Some(node) = queue.pop_front() {
            for k in 0..self.adj[node].len() {
                let sl = self.adj[node][k];
                let other = self.other_end(sl, node);
                if seen[other] {
                    continue;
                }
                seen[other] = true;
                touched.push(other);
                self.pot[other] = self.slot_cost(sl) - self.pot[node];
                self.parent[other] = (node, sl);
                self.depth[other] = self.depth[node] + 1;
                queue.push_back(other);
            }
        }
        seen[anchor] = false;
        for t in touched {
            seen[t] = false;
        }
    }

    /// Full BFS from row 0.
    fn refresh(&mut self) {
        let total = self.pot.len();
        let mut seen = vec![false; total];
        let mut queue = VecDeque::with_capacity(total);
        self.pot[0] = 0.0;
        self.depth[0] = 0;
        self.parent[0] = (usize::MAX, usize::MAX);
        seen[0] = true;
        queue.push_back(0);
        while let Some(node) = queue.pop_front() {
            for k in 0..self.adj[node].len() {
                let slot = self.adj[node][k];
                let other = self.other_end(slot, node);
                if seen[other] {
                    continue;
                }
                seen[other] = true;
                self.pot[other] = self.slot_cost(slot) - self.pot[node];
                self.parent[other] = (node, slot);
                self.depth[other] = self.depth[node] + 1;
                queue.push_back(other);
            }
        }
        debug_assert!(seen.iter().all(|s| *s), "basis is not a spanning tree");
    }

    fn is_below(&self, mut node: usize, top: usize) -> bool {
        while self.depth[node] > self.depth[top] {
            node = self.parent[node].0;
        }
        node == top
    }

    /// Tree path from column node of `j` to row `i`, as cell slots in order,
    /// and the number of slots before the apex.
    fn path(&self, i: usize, j: usize) -> (Vec<usize>, usize) {
        let mut a = i;
        let mut b = self.m + j;
        let mut from_row = Vec::new();
        let mut from_col = Vec::new();
        while self.depth[a] > self.depth[b] {
            from_row.push(self.parent[a].1);
            a = self.parent[a].0;
        }
        while self.depth[b] > self.depth[a] {
            from_col.push(self.parent[b].1);
            b = self.parent[b].0;
        }
        while a != b {
            from_row.push(self.parent[a].1);
            a = self.parent[a].0;
            from_col.push(self.parent[b].1);
            b = self.parent[b].0;
        }
        let split = from_col.len();
        from_col.extend(from_row.into_iter().rev());
        (from_col, split)
    }
}

fn north_west(a: &[f64], b: &[f64]) -> Vec<Cell> {
    let (m, n) = (a.len(), b.len());
    let mut s = a.to_vec();
    let mut d = b.to_vec();
    let mut cells = Vec::with_capacity(m + n - 1);
    let (mut i, mut j) = (0, 0);
    loop {
        if i == m - 1 && j == n - 1 {
            cells.push(Cell { row: i, col: j, flow: s[i].min(d[j]).max(0.0) });
            break;
        }
        if i == m - 1 {
            let x = d[j].max(0.0);
            cells.push(Cell { row: i, col: j, flow: x });
            s[i] -= x;
            j += 1;
        } else if j == n - 1 {
            let x = s[i].max(0.0);
            cells.push(Cell { row: i, col: j, flow: x });
            d[j] -= x;
            i += 1;
        } else if s[i] < d[j] {
            let x = s[i];
            cells.push(Cell { row: i, col: j, flow: x });
            d[j] -= x;
            i += 1;
        } else {
            let x = d[j];
            cells.push(Cell { row: i, col: j, flow: x });
            s[i] -= x;
            j += 1;
        }
    }
    debug_assert_eq!(cells.len(), m + n - 1);
    cells
}

/// Candidate arcs with cached costs.
struct Arcs {
    row: Vec<u32>,
    col: Vec<u32>,
    cost: Vec<f64>,
    present: HashSet<u64>,
}

impl Arcs {
    fn push<C: Fn(usize, usize) -> f64>(&mut self, i: usize, j: usize, n: usize, cost: &C) {
        if self.present.insert((i * n + j) as u64) {
            self.row.push(i as u32);
            self.col.push(j as u32);
            self.cost.push(cost(i, j));
        }
    }

    fn len(&self) -> usize {
        self.row.len()
    }
}

fn initial_arcs<C: Fn(usize, usize) -> f64>(cells: &[Cell], m: usize, n: usize, cost: &C, cand: Candidates) -> Arcs {
    let mut arcs = Arcs { row: Vec::new(), col: Vec::new(), cost: Vec::new(), present: HashSet::new() };
    match cand {
        Candidates::All => {
            arcs.row.reserve(m * n);
            for i in 0..m {
                for j in 0..n {
                    arcs.row.push(i as u32);
                    arcs.col.push(j as u32);
                    arcs.cost.push(cost(i, j));
                }
            }
        }
        Candidates::Band(w) => {
            let mut lo = vec![usize::MAX; m];
            let mut hi = vec![0; m];
            for c in cells {
                lo[c.row] = lo[c.row].min(c.col);
                hi[c.row] = hi[c.row].max(c.col);
            }
            for i in 0..m {
                for j in lo[i].saturating_sub(w)..=(hi[i] + w).min(n - 1) {
                    arcs.push(i, j, n, cost);
                }
            }
        }
    }
    arcs
}

/// Solve `min Σ c(i,j) π_ij` over couplings of `a` and `b`, pricing every arc.
///
/// `a` and `b` must have (numerically) equal totals; `tol` is the
/// reduced-cost threshold for optimality.
pub fn solve<C: Fn(usize, usize) -> f64>(
    a: &[f64],
    b: &[f64],
    cost: &C,
    tol: f64,
    max_pivots: usize,
) -> SimplexSolution {
    solve_with(a, b, cost, &Dense { cost }, tol, max_pivots, Candidates::All)
}

pub fn solve_with<C: Fn(usize, usize) -> f64>(
    a: &[f64],
    b: &[f64],
    cost: &C,
    pricing: &dyn Pricing,
    tol: f64,
    max_pivots: usize,
    candidates: Candidates,
) -> SimplexSolution {
    let (m, n) = (a.len(), b.len());
    let cells = north_west(a, b);
    let mut arcs = initial_arcs(&cells, m, n, cost, candidates);
    let mut tree = Tree {
        m,
        cost,
        cells,
        adj: vec![Vec::new(); m + n],
        pot: vec![0.0; m + n],
        parent: vec![(usize::MAX, usize::MAX); m + n],
        depth: vec![0; m + n],
    };
    for slot in 0..tree.cells.len() {
        tree.link(slot);
    }
    tree.refresh();

    let bland_after = DEGENERATE_RUN * (m + n);
    let mut seen = vec![false; m + n];
    let mut queue = VecDeque::new();
    let mut next = 0usize;
    let mut pivots = 0usize;
    let mut degenerate = 0usize;
    let mut degenerate_run = 0usize;
    let mut rounds = 0usize;
    let mut optimal = false;
    let mut min_rc = 0.0f64;

    'outer: loop {
        rounds += 1;
        let count = arcs.len();
        let block = ((count as f64).sqrt() as usize).clamp(64.min(count), count);
        let reduced = |tree: &Tree<C>, k: usize| {
            arcs.cost[k] - tree.pot[arcs.row[k] as usize] - tree.pot[m + arcs.col[k] as usize]
        };
        while pivots < max_pivots {
            let entering = if degenerate_run >= bland_after {
                // same cell order as the leaving-cell tie break
                (0..count)
                    .filter(|&k| reduced(&tree, k) < -tol)
                    .min_by_key(|&k| arcs.row[k] as usize * n + arcs.col[k] as usize)
            } else {
                let mut best = None;
                let mut best_rc = -tol;
                let mut scanned = 0;
                while scanned < count {
                    let end = (scanned + block).min(count);
                    for _ in scanned..end {
                        let k = next;
                        next = if next + 1 >= count { 0 } else { next + 1 };
                        let rc = reduced(&tree, k);
                        if rc < best_rc {
                            best_rc = rc;
                            best = Some(k);
                        }
                    }
                    scanned = end;
                    if best.is_some() {
                        break;
                    }
                }
                best
            };
            let Some(k) = entering else {
                break;
            };
            let (ei, ej) = (arcs.row[k] as usize, arcs.col[k] as usize);
            let theta = pivot(&mut tree, ei, ej, n, degenerate_run >= bland_after, &mut seen, &mut queue);
            pivots += 1;
            if theta == 0.0 {
                degenerate += 1;
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
        }
        if pivots >= max_pivots {
            break;
        }

        // price every arc against the restricted optimum
        min_rc = 0.0;
        let mut added = false;
        let mut worst: Vec<(f64, usize)> = Vec::with_capacity(ADD_PER_ROW);
        let mut current = usize::MAX;
        let mut flush = |i: usize, worst: &mut Vec<(f64, usize)>, arcs: &mut Arcs| {
            for &(_, j) in worst.iter() {
                let before = arcs.len();
                arcs.push(i, j, n, cost);
                added |= arcs.len() > before;
            }
            worst.clear();
        };
        let (u, v) = tree.pot.split_at(m);
        pricing.scan(u, v, tol, &mut |i, j, rc| {
            min_rc = min_rc.min(rc);
            if rc >= -tol || candidates == Candidates::All {
                return;
            }
            if i != current {
                if current != usize::MAX {
                    flush(current, &mut worst, &mut arcs);
                }
                current = i;
            }
            if worst.len() < ADD_PER_ROW {
                worst.push((rc, j));
            } else if let Some(slot) = worst.iter_mut().max_by(|x, y| x.0.total_cmp(&y.0)) {
                if rc < slot.0 {
                    *slot = (rc, j);
                }
            }
        });
        if current != usize::MAX {
            flush(current, &mut worst, &mut arcs);
        }
        if min_rc >= -tol || !added {
            optimal = min_rc >= -tol;
            break 'outer;
        }
    }

    let primal = crate::measure::neumaier_sum(tree.cells.iter().map(|c| c.flow * cost(c.row, c.col)));
    let dual = crate::measure::neumaier_sum(
        a.iter().zip(&tree.pot[..m]).map(|(w, u)| w * u).chain(b.iter().zip(&tree.pot[m..]).map(|(w, v)| w * v)),
    );
    SimplexSolution {
        cells: tree.cells.iter().map(|c| (c.row, c.col, c.flow)).collect(),
        row_potential: tree.pot[..m].to_vec(),
        col_potential: tree.pot[m..].to_vec(),
        primal,
        dual,
        dual_infeasibility: (-min_rc).max(0.0),
        pivots,
        degenerate_pivots: degenerate,
        rounds,
        optimal,
    }
}

/// Bring cell `(ei, ej)` into the basis; returns the flow moved.
fn pivot<C: Fn(usize, usize) -> f64>(
    tree: &mut Tree<C>,
    ei: usize,
    ej: usize,
    n: usize,
    bland: bool,
    seen: &mut [bool],
    queue: &mut VecDeque<usize>,
) -> f64 {
    let (path, split) = tree.path(ei, ej);
    // even positions along the path (0, 2, ...) lose flow. Walking the cycle
    // from the apex in the direction of the entering cell and keeping the last
    // blocking cell preserves a strongly feasible tree.
    let mut theta = f64::INFINITY;
    let mut leave: Option<usize> = None;
    for pos in (split..path.len()).chain(0..split) {
        if pos % 2 == 0 {
            let c = tree.cells[path[pos]];
            let better = match (bland, leave) {
                (_, None) => true,
                (false, Some(_)) => c.flow <= theta,
                (true, Some(l)) => {
                    let lc = tree.cells[l];
                    c.flow < theta || (c.flow == theta && c.row * n + c.col < lc.row * n + lc.col)
                }
            };
            if better {
                theta = c.flow;
                leave = Some(path[pos]);
            }
        }
    }
    let leave = leave.expect("cycle has a decreasing cell");
    for (pos, &slot) in path.iter().enumerate() {
        if slot == leave {
            continue;
        }
        let c = &mut tree.cells[slot];
        if pos % 2 == 0 {
            c.flow -= theta;
        } else {
            c.flow += theta;
        }
    }
    // the endpoint of the leaving cell farther from the root heads the detached subtree
    let lc = tree.cells[leave];
    let (r, cn) = (lc.row, tree.m + lc.col);
    let head = if tree.parent[r].1 == leave { r } else { cn };
    let col_node = tree.m + ej;
    let (start, anchor) = if tree.is_below(ei, head) { (ei, col_node) } else { (col_node, ei) };
    tree.unlink(leave);
    tree.cells[leave] = Cell { row: ei, col: ej, flow: theta };
    tree.link(leave);
    tree.rehang(start, anchor, leave, seen, queue);
    theta
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn north_west_is_a_spanning_staircase() {
        let cells = north_west(&[0.5, 0.5], &[0.25, 0.25, 0.5]);
        assert_eq!(cells.len(), 4);
        let flows: Vec<_> = cells.iter().map(|c| (c.row, c.col, c.flow)).collect();
        assert_eq!(flows, vec![(0, 0, 0.25), (0, 1, 0.25), (0, 2, 0.0), (1, 2, 0.5)]);
    }

    #[test]
    fn solves_a_textbook_instance() {
        // supplies 20/30/25, demands 10/35/30 (scaled to probability)
        let a = [20.0 / 75.0, 30.0 / 75.0, 25.0 / 75.0];
        let b = [10.0 / 75.0, 35.0 / 75.0, 30.0 / 75.0];
        let c = [[8.0, 6.0, 10.0], [9.0, 12.0, 13.0], [14.0, 9.0, 16.0]];
        let sol = solve(&a, &b, &|i, j| c[i][j], 1e-12, 1000);
        assert!(sol.optimal);
        // LP optimum of the unscaled instance is 735 (checked with an external LP solver)
        assert!((sol.primal - 735.0 / 75.0).abs() < 1e-12, "{}", sol.primal);
        assert!((sol.primal - sol.dual).abs() < 1e-12);
    }

    #[test]
    fn single_row_or_column() {
        let sol = solve(&[1.0], &[0.2, 0.3, 0.5], &|_, j| j as f64, 1e-12, 10);
        assert!(sol.optimal);
        assert!((sol.primal - (0.3 + 1.0)).abs() < 1e-15);
        let sol = solve(&[0.6, 0.4], &[1.0], &|i, _| 2.0 * i as f64, 1e-12, 10);
        assert!((sol.primal - 0.8).abs() < 1e-15);
    }
}
