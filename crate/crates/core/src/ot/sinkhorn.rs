//! Stabilized Sinkhorn scaling with ε-scaling.
//!
//! Potentials are kept in the log domain; between absorptions the iteration
//! runs on the kernel `exp((f_i + g_j - c_ij)/ε)` with multiplicative scalings
//! `u`, `v`, which are folded back into `f`, `g` once they leave a safe range.

/// Result of an entropic solve on a dense cost matrix.
#[derive(Debug, Clone)]
pub struct SinkhornSolution {
    /// Row-major plan over the retained (positive-weight) atoms.
    pub plan: Vec<f64>,
    pub transport_cost: f64,
    /// L1 row-marginal violation after the final column update.
    pub marginal_error: f64,
    pub iterations: usize,
    pub converged: bool,
}

const STAGE_MAX_ITER: usize = 500;
const STAGE_TOL: f64 = 1e-3;
const CHECK_EVERY: usize = 10;
const ABSORB_AT: f64 = 1e30;
const OVERRELAX: f64 = 1.8;
const OVERRELAX_SWITCH: f64 = 1e-2;

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

struct State<'a> {
    cost: &'a [f64],
    m: usize,
    n: usize,
    eps: f64,
    f: Vec<f64>,
    g: Vec<f64>,
    u: Vec<f64>,
    v: Vec<f64>,
    kernel: Vec<f64>,
}

impl State<'_> {
    fn absorb(&mut self) {
        for (fi, ui) in self.f.iter_mut().zip(&mut self.u) {
            *fi += self.eps * ui.ln();
            *ui = 1.0;
        }
        for (gj, vj) in self.g.iter_mut().zip(&mut self.v) {
            *gj += self.eps * vj.ln();
            *vj = 1.0;
        }
        for i in 0..self.m {
            for j in 0..self.n {
                let k = i * self.n + j;
                self.kernel[k] = ((self.f[i] + self.g[j] - self.cost[k]) / self.eps).exp();
            }
        }
    }

    /// Exact log-domain half steps; used when the kernel underflows a whole row or column.
    fn log_step(&mut self, log_a: &[f64], log_b: &[f64]) {
        self.absorb();
        let (m, n, eps) = (self.m, self.n, self.eps);
        for i in 0..m {
            let row = &self.cost[i * n..(i + 1) * n];
            self.f[i] = eps * (log_a[i] - log_sum_exp(row.iter().zip(&self.g).map(|(c, gj)| (gj - c) / eps)));
        }
        for j in 0..n {
            let lse = log_sum_exp(self.f.iter().enumerate().map(|(i, fi)| (fi - self.cost[i * n + j]) / eps));
            self.g[j] = eps * (log_b[j] - lse);
        }
        self.absorb();
    }

    /// One scaling sweep; returns false if a marginal sum vanished.
    fn sweep(&mut self, a: &[f64], b: &[f64], omega: f64) -> bool {
        let n = self.n;
        for i in 0..self.m {
            let row = &self.kernel[i * n..(i + 1) * n];
            let s: f64 = row.iter().zip(&self.v).map(|(k, v)| k * v).sum();
            if !(s > 0.0 && s.is_finite()) {
                return false;
            }
            let target = a[i] / s;
            self.u[i] = if omega == 1.0 { target } else { self.u[i].powf(1.0 - omega) * target.powf(omega) };
        }
        let mut col = vec![0.0; n];
        for i in 0..self.m {
            let ui = self.u[i];
            for (c, k) in col.iter_mut().zip(&self.kernel[i * n..(i + 1) * n]) {
                *c += ui * k;
            }
        }
        for j in 0..n {
            if !(col[j] > 0.0 && col[j].is_finite()) {
                return false;
            }
            let target = b[j] / col[j];
            self.v[j] = if omega == 1.0 { target } else { self.v[j].powf(1.0 - omega) * target.powf(omega) };
        }
        true
    }

    fn needs_absorb(&self) -> bool {
        let out = |x: &f64| !(*x < ABSORB_AT && *x > 1.0 / ABSORB_AT);
        self.u.iter().any(out) || self.v.iter().any(out)
    }

    fn row_error(&self, a: &[f64]) -> f64 {
        let n = self.n;
        (0..self.m)
            .map(|i| {
                let s: f64 = self.kernel[i * n..(i + 1) * n].iter().zip(&self.v).map(|(k, v)| k * v).sum();
                (self.u[i] * s - a[i]).abs()
            })
            .sum()
    }
}

/// `cost` is `m × n` row-major; `a`, `b` strictly positive and summing to 1.
pub fn solve(a: &[f64], b: &[f64], cost: &[f64], reg: f64, max_iter: usize, tol: f64) -> SinkhornSolution {
    let (m, n) = (a.len(), b.len());
    let log_a: Vec<f64> = a.iter().map(|w| w.ln()).collect();
    let log_b: Vec<f64> = b.iter().map(|w| w.ln()).collect();

    let c_max = cost.iter().copied().fold(0.0, f64::max);
    // ε-scaling ladder: halve from the cost scale down to the target
    let mut stages = Vec::new();
    let mut eps = c_max.max(reg);
    while eps > reg {
        stages.push(eps);
        eps *= 0.5;
    }
    stages.push(reg);

    let mut st = State {
        cost,
        m,
        n,
        eps: stages[0],
        f: vec![0.0; m],
        g: vec![0.0; n],
        u: vec![1.0; m],
        v: vec![1.0; n],
        kernel: vec![0.0; m * n],
    };
    let mut iterations = 0;
    let mut marginal_error = f64::INFINITY;
    let mut converged = false;
    let last = stages.len() - 1;
    for (s, &eps) in stages.iter().enumerate() {
        st.absorb();
        st.eps = eps;
        st.absorb();
        let final_stage = s == last;
        let (budget, stage_tol) =
            if final_stage { (max_iter.saturating_sub(iterations), tol) } else { (STAGE_MAX_ITER, STAGE_TOL.max(tol)) };
        let mut omega = 1.0;
        for it in 0..budget {
            if !st.sweep(a, b, omega) {
                st.u.iter_mut().for_each(|x| *x = 1.0);
                st.v.iter_mut().for_each(|x| *x = 1.0);
                st.log_step(&log_a, &log_b);
                omega = 1.0;
            } else if st.needs_absorb() {
                st.absorb();
            }
            iterations += 1;
            if it % CHECK_EVERY == CHECK_EVERY - 1 || it + 1 == budget {
                marginal_error = st.row_error(a);
                if marginal_error <= stage_tol {
                    converged = final_stage;
                    break;
                }
                // over-relax only near the fixed point
                if final_stage && marginal_error < OVERRELAX_SWITCH {
                    omega = OVERRELAX;
                }
            }
        }
    }

    let mut plan = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            plan[i * n + j] = st.u[i] * st.kernel[i * n + j] * st.v[j];
        }
    }
    let transport_cost = crate::measure::neumaier_sum(plan.iter().zip(cost).map(|(p, c)| p * c));
    SinkhornSolution { plan, transport_cost, marginal_error, iterations, converged }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn converges_on_small_problem() {
        let a = [0.5, 0.5];
        let b = [0.5, 0.5];
        let cost = [0.0, 1.0, 1.0, 0.0];
        let sol = solve(&a, &b, &cost, 0.01, 1000, 1e-12);
        assert!(sol.converged);
        assert!(sol.transport_cost < 1e-10);
        let s = solve(&a, &b, &cost, 10.0, 1000, 1e-12);
        // independent coupling at large regularization
        assert!((s.transport_cost - 1.0 / (1.0 + 0.1f64.exp())).abs() < 1e-9);
    }

    #[test]
    fn survives_tiny_regularization() {
        let a = [0.25; 4];
        let cost: Vec<f64> = (0..16).map(|k| ((k / 4) as f64 - (k % 4) as f64).powi(2)).collect();
        let s = solve(&a, &a, &cost, 1e-4, 2000, 1e-10);
        assert!(s.converged);
        assert!(s.transport_cost.abs() < 1e-12);
    }
}
