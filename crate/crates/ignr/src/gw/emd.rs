//! Exact solver for the dense transportation problem
//! `min <C, X>  s.t.  X 1 = s,  X^T 1 = d,  X >= 0`
//! via the network simplex method on the bipartite source/sink graph.
//!
//! The initial basis connects every node to an artificial root through
//! high-cost arcs; a block pivot rule then drives those out. Node counts
//! here are small (hundreds) while arc counts reach the tens of thousands,
//! so per-pivot tree maintenance is done in `O(nodes)` and the entering-arc
//! search dominates.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// Optimal plan for a balanced transportation instance, with the dual
/// potentials that certify optimality (`u[i] + v[j] <= c[i][j]`, equality
/// on the support).
#[derive(Debug, Clone)]
pub struct EmdResult {
    pub plan: Array2<f64>,
    pub cost: f64,
    pub u: Array1<f64>,
    pub v: Array1<f64>,
}

const NONE: usize = usize::MAX;

/// Solve `min <cost, X>` over couplings of `supplies` and `demands`.
///
/// Both marginals must be strictly positive and sum to the same total
/// (within 1e-8); the tiny residual imbalance left by float accumulation
/// is folded into the largest demand.
pub fn emd(supplies: &Array1<f64>, demands: &Array1<f64>, cost: &Array2<f64>) -> Result<EmdResult> {
    let m = supplies.len();
    let n = demands.len();
    if cost.nrows() != m || cost.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "cost matrix {}x{} vs marginals {m} and {n}",
            cost.nrows(),
            cost.ncols()
        )));
    }
    if m == 0 || n == 0 {
        return Err(Error::InputDomain("empty marginals".into()));
    }
    if supplies.iter().chain(demands.iter()).any(|&x| x <= 0.0 || !x.is_finite()) {
        return Err(Error::InputDomain(
            "marginals must be strictly positive and finite".into(),
        ));
    }
    let total_s: f64 = supplies.sum();
    let total_d: f64 = demands.sum();
    if (total_s - total_d).abs() > 1e-8 * total_s.max(total_d) {
        return Err(Error::InputDomain(format!(
            "unbalanced problem: supply {total_s} vs demand {total_d}"
        )));
    }

    // One-sided instances have a unique feasible plan; the duals that make
    // every arc tight certify it.
    if m == 1 {
        let plan = demands.clone().insert_axis(ndarray::Axis(0));
        let c = plan.iter().zip(cost.iter()).map(|(x, c)| x * c).sum();
        let v = cost.row(0).to_owned();
        let u = Array1::zeros(1);
        return Ok(EmdResult { plan, cost: c, u, v });
    }
    if n == 1 {
        let plan = supplies.clone().insert_axis(ndarray::Axis(1));
        let c = plan.iter().zip(cost.iter()).map(|(x, c)| x * c).sum();
        let u = cost.column(0).to_owned();
        let v = Array1::zeros(1);
        return Ok(EmdResult { plan, cost: c, u, v });
    }

    let mut demands = demands.clone();
    let imbalance = total_s - total_d;
    let jmax = demands
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(j, _)| j)
        .unwrap();
    demands[jmax] += imbalance;

    let simplex = Simplex::new(supplies, &demands, cost);
    simplex.run()
}

struct Simplex<'a> {
    m: usize,
    n: usize,
    nodes: usize, // m + n + 1, root last
    arcs: usize,  // m*n real + m+n artificial
    cost: &'a Array2<f64>,
    big: f64,
    eps: f64,
    flow: Vec<f64>,
    in_tree: Vec<bool>,
    parent: Vec<usize>,
    pred: Vec<usize>,    // arc connecting node to parent
    forward: Vec<bool>,  // node is the tail of its pred arc
    depth: Vec<u32>,
    pi: Vec<f64>,
}

impl<'a> Simplex<'a> {
    fn new(supplies: &Array1<f64>, demands: &Array1<f64>, cost: &'a Array2<f64>) -> Self {
        let m = supplies.len();
        let n = demands.len();
        let nodes = m + n + 1;
        let root = nodes - 1;
        let real = m * n;
        let arcs = real + m + n;
        let max_c = cost.iter().fold(0.0_f64, |a, &c| a.max(c.abs()));
        let big = (1.0 + max_c) * nodes as f64;
        let eps = 1e-11 * (1.0 + max_c);

        let mut flow = vec![0.0; arcs];
        let mut in_tree = vec![false; arcs];
        let mut parent = vec![NONE; nodes];
        let mut pred = vec![NONE; nodes];
        let mut forward = vec![false; nodes];
        let mut depth = vec![0u32; nodes];
        let mut pi = vec![0.0; nodes];

        // Initial basis: every source sends its supply to the root, every
        // sink draws its demand from the root, all through BIG-cost arcs.
        for i in 0..m {
            let a = real + i;
            flow[a] = supplies[i];
            in_tree[a] = true;
            parent[i] = root;
            pred[i] = a;
            forward[i] = true; // arc i -> root
            depth[i] = 1;
            pi[i] = big; // rc = big - pi[i] + pi[root] = 0
        }
        for j in 0..n {
            let a = real + m + j;
            let node = m + j;
            flow[a] = demands[j];
            in_tree[a] = true;
            parent[node] = root;
            pred[node] = a;
            forward[node] = false; // arc root -> node
            depth[node] = 1;
            pi[node] = -big;
        }

        Self {
            m,
            n,
            nodes,
            arcs,
            cost,
            big,
            eps,
            flow,
            in_tree,
            parent,
            pred,
            forward,
            depth,
            pi,
        }
    }

    fn tail(&self, a: usize) -> usize {
        let real = self.m * self.n;
        if a < real {
            a / self.n
        } else if a < real + self.m {
            a - real // source -> root
        } else {
            self.nodes - 1 // root -> sink
        }
    }

    fn head(&self, a: usize) -> usize {
        let real = self.m * self.n;
        if a < real {
            self.m + a % self.n
        } else if a < real + self.m {
            self.nodes - 1
        } else {
            self.m + (a - real - self.m)
        }
    }

    fn arc_cost(&self, a: usize) -> f64 {
        let real = self.m * self.n;
        if a < real {
            self.cost[[a / self.n, a % self.n]]
        } else {
            self.big
        }
    }

    fn reduced_cost(&self, a: usize) -> f64 {
        self.arc_cost(a) - self.pi[self.tail(a)] + self.pi[self.head(a)]
    }

    fn run(mut self) -> Result<EmdResult> {
        let block = ((self.arcs as f64).sqrt() as usize).max(64);
        let mut next_arc = 0usize;
        let max_pivots = 200 * self.nodes + 10 * self.arcs;
        let mut pivots = 0usize;

        loop {
            // Block search: best candidate within consecutive blocks,
            // wrapping once around the whole arc set before declaring
            // optimality.
            let mut entering = NONE;
            let mut best = -self.eps;
            let mut scanned = 0usize;
            while scanned < self.arcs {
                let hi = (next_arc + block).min(self.arcs);
                for a in next_arc..hi {
                    if self.in_tree[a] {
                        continue;
                    }
                    let rc = self.reduced_cost(a);
                    if rc < best {
                        best = rc;
                        entering = a;
                    }
                }
                scanned += hi - next_arc;
                next_arc = if hi == self.arcs { 0 } else { hi };
                if entering != NONE {
                    break;
                }
            }
            if entering == NONE {
                break;
            }

            self.pivot(entering)?;
            pivots += 1;
            if pivots > max_pivots {
                return Err(Error::Numerical(
                    "network simplex exceeded its pivot budget".into(),
                ));
            }
        }

        self.extract()
    }

    fn pivot(&mut self, e: usize) -> Result<()> {
        let eu = self.tail(e);
        let ev = self.head(e);

        // Apex of the cycle formed by e and the tree path between its ends.
        let (mut x, mut y) = (eu, ev);
        while self.depth[x] > self.depth[y] {
            x = self.parent[x];
        }
        while self.depth[y] > self.depth[x] {
            y = self.parent[y];
        }
        while x != y {
            x = self.parent[x];
            y = self.parent[y];
        }
        let apex = x;

        // Flow limit along the cycle: pushing t units along e means the
        // tree path from ev back to eu carries t. Arcs traversed against
        // their own orientation lose flow.
        let mut limit = f64::INFINITY;
        let mut leave = NONE;
        let mut leave_on_u_side = false;
        let mut node = ev;
        while node != apex {
            // returning flow moves node -> parent
            let a = self.pred[node];
            if !self.forward[node] && self.flow[a] < limit {
                limit = self.flow[a];
                leave = node;
                leave_on_u_side = false;
            }
            node = self.parent[node];
        }
        let mut node = eu;
        while node != apex {
            // returning flow moves parent -> node
            let a = self.pred[node];
            if self.forward[node] && self.flow[a] <= limit {
                limit = self.flow[a];
                leave = node;
                leave_on_u_side = true;
            }
            node = self.parent[node];
        }
        if leave == NONE {
            return Err(Error::Numerical("unbounded pivot cycle".into()));
        }
        let t = limit;

        // Apply the flow change around the cycle.
        self.flow[e] += t;
        let mut node = ev;
        while node != apex {
            let a = self.pred[node];
            if self.forward[node] {
                self.flow[a] += t;
            } else {
                self.flow[a] -= t;
            }
            node = self.parent[node];
        }
        let mut node = eu;
        while node != apex {
            let a = self.pred[node];
            if self.forward[node] {
                self.flow[a] -= t;
            } else {
                self.flow[a] += t;
            }
            node = self.parent[node];
        }

        // Swap basis arcs: the leaving arc is pred[leave]; its subtree is
        // re-rooted at the entering arc's endpoint on that side.
        let f = self.pred[leave];
        self.flow[f] = 0.0;
        self.in_tree[f] = false;
        self.in_tree[e] = true;

        let (side_node, attach_to) = if leave_on_u_side { (eu, ev) } else { (ev, eu) };
        let mut x = side_node;
        let mut new_parent = attach_to;
        let mut new_arc = e;
        let mut new_fwd = side_node == eu; // real/artificial arcs: tail side
        loop {
            let old_parent = self.parent[x];
            let old_arc = self.pred[x];
            let old_fwd = self.forward[x];
            self.parent[x] = new_parent;
            self.pred[x] = new_arc;
            self.forward[x] = new_fwd;
            if x == leave {
                break;
            }
            new_parent = x;
            new_arc = old_arc;
            new_fwd = !old_fwd;
            x = old_parent;
        }

        self.refresh_potentials();
        Ok(())
    }

    /// Recompute depths and potentials from the tree in one pass.
    fn refresh_potentials(&mut self) {
        let root = self.nodes - 1;
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); self.nodes];
        for v in 0..self.nodes {
            if v != root {
                children[self.parent[v]].push(v);
            }
        }
        let mut stack = vec![root];
        self.pi[root] = 0.0;
        self.depth[root] = 0;
        while let Some(v) = stack.pop() {
            for &c in &children[v] {
                self.depth[c] = self.depth[v] + 1;
                let a = self.pred[c];
                // tree arcs have zero reduced cost
                self.pi[c] = if self.forward[c] {
                    self.arc_cost(a) + self.pi[v]
                } else {
                    self.pi[v] - self.arc_cost(a)
                };
                stack.push(c);
            }
        }
    }

    fn extract(self) -> Result<EmdResult> {
        let real = self.m * self.n;
        let mass: f64 = self.flow[..real].iter().sum();
        for a in real..self.arcs {
            if self.flow[a].abs() > 1e-9 * (1.0 + mass) {
                return Err(Error::Numerical(format!(
                    "artificial arc retained flow {}",
                    self.flow[a]
                )));
            }
        }
        let mut plan = Array2::zeros((self.m, self.n));
        let mut cost = 0.0;
        for i in 0..self.m {
            for j in 0..self.n {
                let x = self.flow[i * self.n + j].max(0.0);
                plan[[i, j]] = x;
                cost += x * self.cost[[i, j]];
            }
        }
        let u = Array1::from_iter((0..self.m).map(|i| self.pi[i]));
        let v = Array1::from_iter((0..self.n).map(|j| -self.pi[self.m + j]));
        Ok(EmdResult { plan, cost, u, v })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gw::test_util::{seeded, uniform_hist};
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::Rng;

    fn check_duality(res: &EmdResult, s: &Array1<f64>, d: &Array1<f64>, c: &Array2<f64>) {
        let scale = 1.0 + c.iter().fold(0.0_f64, |a, &x| a.max(x.abs()));
        // dual feasibility
        for i in 0..s.len() {
            for j in 0..d.len() {
                assert!(
                    res.u[i] + res.v[j] <= c[[i, j]] + 1e-7 * scale,
                    "dual infeasible at ({i},{j}): {} + {} > {}",
                    res.u[i],
                    res.v[j],
                    c[[i, j]]
                );
            }
        }
        // strong duality
        let dual: f64 = res.u.dot(s) + res.v.dot(d);
        assert_abs_diff_eq!(res.cost, dual, epsilon = 1e-7 * scale);
        // marginals
        let rows = res.plan.sum_axis(ndarray::Axis(1));
        let cols = res.plan.sum_axis(ndarray::Axis(0));
        for i in 0..s.len() {
            assert_abs_diff_eq!(rows[i], s[i], epsilon = 1e-10);
        }
        for j in 0..d.len() {
            assert_abs_diff_eq!(cols[j], d[j], epsilon = 1e-10);
        }
    }

    /// Exhaustive minimum over permutation matrices; for uniform marginals
    /// on a square problem the optimum is attained at one of them.
    fn brute_force_square_uniform(c: &Array2<f64>) -> f64 {
        let n = c.nrows();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best = f64::INFINITY;
        permute(&mut perm, 0, &mut |p| {
            let cost: f64 = p.iter().enumerate().map(|(i, &j)| c[[i, j]]).sum();
            best = best.min(cost / n as f64);
        });
        best
    }

    fn permute(p: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
        if k == p.len() {
            f(p);
            return;
        }
        for i in k..p.len() {
            p.swap(k, i);
            permute(p, k + 1, f);
            p.swap(k, i);
        }
    }

    #[test]
    fn forced_plans() {
        let s = uniform_hist(2);
        let d = uniform_hist(1);
        let c = array![[3.0], [5.0]];
        let res = emd(&s, &d, &c).unwrap();
        assert_abs_diff_eq!(res.plan[[0, 0]], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(res.cost, 4.0, epsilon = 1e-12);
        check_duality(&res, &s, &d, &c);
    }

    #[test]
    fn identity_is_optimal_for_zero_diagonal() {
        let n = 6;
        let s = uniform_hist(n);
        let mut c = Array2::from_elem((n, n), 1.0);
        for i in 0..n {
            c[[i, i]] = 0.0;
        }
        let res = emd(&s, &s, &c).unwrap();
        assert_abs_diff_eq!(res.cost, 0.0, epsilon = 1e-12);
        for i in 0..n {
            assert_abs_diff_eq!(res.plan[[i, i]], 1.0 / n as f64, epsilon = 1e-12);
        }
        check_duality(&res, &s, &s, &c);
    }

    #[test]
    fn matches_brute_force_on_square_uniform_instances() {
        let mut rng = seeded(31);
        for n in 2..=6 {
            for _ in 0..6 {
                let c = Array2::from_shape_fn((n, n), |_| rng.random::<f64>());
                let s = uniform_hist(n);
                let res = emd(&s, &s, &c).unwrap();
                let best = brute_force_square_uniform(&c);
                assert!(
                    (res.cost - best).abs() <= 1e-9,
                    "n={n}: simplex {} vs brute force {best}",
                    res.cost
                );
                check_duality(&res, &s, &s, &c);
            }
        }
    }

    #[test]
    fn duality_certificate_on_rectangular_instances() {
        let mut rng = seeded(37);
        for _ in 0..20 {
            let m = rng.random_range(2..12);
            let n = rng.random_range(2..12);
            let c = Array2::from_shape_fn((m, n), |_| rng.random::<f64>() * 3.0);
            let mut s = Array1::from_shape_fn(m, |_| 0.05 + rng.random::<f64>());
            let mut d = Array1::from_shape_fn(n, |_| 0.05 + rng.random::<f64>());
            let ts: f64 = s.sum();
            let td: f64 = d.sum();
            s.mapv_inplace(|x| x / ts);
            d.mapv_inplace(|x| x / td);
            let res = emd(&s, &d, &c).unwrap();
            check_duality(&res, &s, &d, &c);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let s = uniform_hist(2);
        let d = uniform_hist(3);
        let c = Array2::zeros((2, 2));
        assert!(emd(&s, &d, &c).is_err()); // shape mismatch
        let z = array![0.5, 0.0, 0.5];
        let c = Array2::zeros((2, 3));
        assert!(emd(&s, &z, &c).is_err()); // zero marginal entry
    }

    #[test]
    fn medium_instance_runs_and_certifies() {
        let mut rng = seeded(41);
        let (m, n) = (60, 45);
        let c = Array2::from_shape_fn((m, n), |_| rng.random::<f64>());
        let s = uniform_hist(m);
        let d = uniform_hist(n);
        let res = emd(&s, &d, &c).unwrap();
        check_duality(&res, &s, &d, &c);
    }
}
