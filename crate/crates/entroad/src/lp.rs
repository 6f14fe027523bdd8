//! A small dense linear-programming solver.
//!
//! Two-phase primal simplex with Bland's rule on problems with free
//! variables, equality rows and `≤` rows. Free variables are split into
//! positive and negative parts internally; the problems fed to this solver
//! stay tiny (tens of variables), so the doubling is irrelevant and Bland's
//! rule keeps pivoting deterministic and cycle-free.

/// `max c · x` subject to `eq_i · x = b_i`, `ineq_j · x ≤ d_j`, `x` free.
#[derive(Debug, Clone, Default)]
pub struct LpProblem {
    pub n: usize,
    pub eq: Vec<(Vec<f64>, f64)>,
    pub ineq: Vec<(Vec<f64>, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Infeasible,
    /// The objective increases without bound along `ray` from `from`.
    Unbounded {
        from: Vec<f64>,
        ray: Vec<f64>,
    },
    Optimal {
        x: Vec<f64>,
        value: f64,
    },
}

const PIVOT_TOL: f64 = 1e-10;

impl LpProblem {
    pub fn new(n: usize) -> Self {
        LpProblem {
            n,
            eq: Vec::new(),
            ineq: Vec::new(),
        }
    }

    pub fn maximize(&self, objective: &[f64]) -> LpOutcome {
        assert_eq!(objective.len(), self.n);
        Tableau::assemble(self).solve(objective)
    }

    /// Feasibility check: any point satisfying all rows.
    pub fn feasible_point(&self) -> Option<Vec<f64>> {
        match self.maximize(&vec![0.0; self.n]) {
            LpOutcome::Optimal { x, .. } => Some(x),
            LpOutcome::Unbounded { from, .. } => Some(from),
            LpOutcome::Infeasible => None,
        }
    }
}

/// Dense tableau over columns `[x⁺ (n), x⁻ (n), slack (m_ineq)]`.
struct Tableau {
    n: usize,
    cols: usize,
    rows: Vec<Vec<f64>>, // m rows of length cols, plus rhs at the end
    rhs: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn assemble(p: &LpProblem) -> Tableau {
        let n = p.n;
        let m = p.eq.len() + p.ineq.len();
        let cols = 2 * n + p.ineq.len();
        let mut rows = vec![vec![0.0; cols]; m];
        let mut rhs = vec![0.0; m];
        for (r, (coeffs, b)) in p.eq.iter().enumerate() {
            for (j, &c) in coeffs.iter().enumerate() {
                rows[r][j] = c;
                rows[r][n + j] = -c;
            }
            rhs[r] = *b;
        }
        for (k, (coeffs, b)) in p.ineq.iter().enumerate() {
            let r = p.eq.len() + k;
            for (j, &c) in coeffs.iter().enumerate() {
                rows[r][j] = c;
                rows[r][n + j] = -c;
            }
            rows[r][2 * n + k] = 1.0;
            rhs[r] = *b;
        }
        // Normalize right-hand sides to be nonnegative for phase one.
        for r in 0..m {
            if rhs[r] < 0.0 {
                for v in &mut rows[r] {
                    *v = -*v;
                }
                rhs[r] = -rhs[r];
            }
        }
        Tableau {
            n,
            cols,
            rows,
            rhs,
            basis: Vec::new(),
        }
    }

    fn solve(mut self, objective: &[f64]) -> LpOutcome {
        let m = self.rows.len();
        // Phase one over artificial variables appended after the real columns.
        let art0 = self.cols;
        self.cols += m;
        for (r, row) in self.rows.iter_mut().enumerate() {
            row.resize(art0 + m, 0.0);
            row[art0 + r] = 1.0;
        }
        self.basis = (art0..art0 + m).collect();
        let phase1_cost: Vec<f64> = (0..self.cols)
            .map(|j| if j >= art0 { 1.0 } else { 0.0 })
            .collect();
        if self.run(&phase1_cost).is_some() {
            unreachable!("phase one is bounded below by zero");
        }
        let residual: f64 = self
            .basis
            .iter()
            .zip(&self.rhs)
            .filter(|(&b, _)| b >= art0)
            .map(|(_, &v)| v)
            .sum();
        if residual > 1e-7 {
            return LpOutcome::Infeasible;
        }
        self.drive_out_artificials(art0);
        // Drop artificial columns.
        self.cols = art0;
        for row in &mut self.rows {
            row.truncate(art0);
        }

        // Phase two: minimize the negated objective over [x⁺, x⁻, s].
        let mut cost = vec![0.0; self.cols];
        for j in 0..self.n {
            cost[j] = -objective[j];
            cost[self.n + j] = objective[j];
        }
        match self.run(&cost) {
            Some(enter) => {
                let from = self.extract();
                let ray = self.ray(enter);
                LpOutcome::Unbounded { from, ray }
            }
            None => {
                let x = self.extract();
                let value = x.iter().zip(objective).map(|(a, b)| a * b).sum();
                LpOutcome::Optimal { x, value }
            }
        }
    }

    /// Simplex iterations with Bland's rule; returns the entering column on
    /// unboundedness, `None` at optimality.
    fn run(&mut self, cost: &[f64]) -> Option<usize> {
        loop {
            let reduced = self.reduced_costs(cost);
            let enter =
                (0..self.cols).find(|&j| !self.basis.contains(&j) && reduced[j] < -PIVOT_TOL);
            let Some(enter) = enter else {
                return None;
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows.len() {
                let a = self.rows[r][enter];
                if a > PIVOT_TOL {
                    let ratio = self.rhs[r] / a;
                    let better = match leave {
                        None => true,
                        Some((lr, lratio)) => {
                            ratio < lratio - PIVOT_TOL
                                || (ratio < lratio + PIVOT_TOL && self.basis[r] < self.basis[lr])
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            match leave {
                None => return Some(enter),
                Some((r, _)) => self.pivot(r, enter),
            }
        }
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        // y = c_B B⁻¹ is implicit: rows already hold B⁻¹ A, so the reduced
        // cost of column j is c_j − Σ_r c_{basis r} · rows[r][j].
        let mut reduced = cost.to_vec();
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for j in 0..self.cols {
                    reduced[j] -= cb * self.rows[r][j];
                }
            }
        }
        reduced
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let piv = self.rows[row][col];
        for v in &mut self.rows[row] {
            *v /= piv;
        }
        self.rhs[row] /= piv;
        for r in 0..self.rows.len() {
            if r != row {
                let factor = self.rows[r][col];
                if factor != 0.0 {
                    for j in 0..self.cols {
                        let sub = factor * self.rows[row][j];
                        self.rows[r][j] -= sub;
                    }
                    self.rhs[r] -= factor * self.rhs[row];
                }
            }
        }
        self.basis[row] = col;
    }

    /// Pivots zero-level artificials out of the basis where possible and
    /// deletes the redundant rows where it is not.
    fn drive_out_artificials(&mut self, art0: usize) {
        for r in 0..self.rows.len() {
            if self.basis[r] >= art0 {
                if let Some(col) = (0..art0).find(|&j| self.rows[r][j].abs() > 1e-8) {
                    self.pivot(r, col);
                }
            }
        }
        let mut r = 0;
        while r < self.rows.len() {
            if self.basis[r] >= art0 {
                self.rows.remove(r);
                self.rhs.remove(r);
                self.basis.remove(r);
            } else {
                r += 1;
            }
        }
    }

    fn extract(&self) -> Vec<f64> {
        let mut z = vec![0.0; self.cols];
        for (r, &b) in self.basis.iter().enumerate() {
            z[b] = self.rhs[r];
        }
        (0..self.n).map(|j| z[j] - z[self.n + j]).collect()
    }

    /// Recession direction in the original variables for an entering column
    /// with no blocking row.
    fn ray(&self, enter: usize) -> Vec<f64> {
        let mut dz = vec![0.0; self.cols];
        dz[enter] = 1.0;
        for (r, &b) in self.basis.iter().enumerate() {
            dz[b] = -self.rows[r][enter];
        }
        (0..self.n).map(|j| dz[j] - dz[self.n + j]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounded_box_max() {
        // max x + y over 0 ≤ x ≤ 2, 0 ≤ y ≤ 3.
        let mut p = LpProblem::new(2);
        p.ineq.push((vec![1.0, 0.0], 2.0));
        p.ineq.push((vec![0.0, 1.0], 3.0));
        p.ineq.push((vec![-1.0, 0.0], 0.0));
        p.ineq.push((vec![0.0, -1.0], 0.0));
        match p.maximize(&[1.0, 1.0]) {
            LpOutcome::Optimal { x, value } => {
                assert!((value - 5.0).abs() < 1e-9);
                assert!((x[0] - 2.0).abs() < 1e-9);
                assert!((x[1] - 3.0).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn equality_plus_bounds() {
        // max x1 subject to x1 + x2 = 3, x ≥ 0.
        let mut p = LpProblem::new(2);
        p.eq.push((vec![1.0, 1.0], 3.0));
        p.ineq.push((vec![-1.0, 0.0], 0.0));
        p.ineq.push((vec![0.0, -1.0], 0.0));
        match p.maximize(&[1.0, 0.0]) {
            LpOutcome::Optimal { x, value } => {
                assert!((value - 3.0).abs() < 1e-9);
                assert!((x[0] - 3.0).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn infeasible_detected() {
        let mut p = LpProblem::new(1);
        p.ineq.push((vec![1.0], 0.0));
        p.ineq.push((vec![-1.0], -1.0)); // x ≥ 1 and x ≤ 0
        assert_eq!(p.maximize(&[1.0]), LpOutcome::Infeasible);
    }

    #[test]
    fn unbounded_with_ray() {
        // max x with x ≥ 1 only.
        let mut p = LpProblem::new(1);
        p.ineq.push((vec![-1.0], -1.0));
        match p.maximize(&[1.0]) {
            LpOutcome::Unbounded { from, ray } => {
                assert!(from[0] >= 1.0 - 1e-9);
                assert!(ray[0] > 0.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn free_variables_go_negative() {
        // max -x over x ≥ -5: optimum at x = -5.
        let mut p = LpProblem::new(1);
        p.ineq.push((vec![-1.0], 5.0));
        match p.maximize(&[-1.0]) {
            LpOutcome::Optimal { x, value } => {
                assert!((x[0] + 5.0).abs() < 1e-9);
                assert!((value - 5.0).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn degenerate_redundant_rows() {
        // Duplicated equality rows must not break phase one.
        let mut p = LpProblem::new(2);
        p.eq.push((vec![1.0, 1.0], 2.0));
        p.eq.push((vec![2.0, 2.0], 4.0));
        p.ineq.push((vec![-1.0, 0.0], 0.0));
        p.ineq.push((vec![0.0, -1.0], 0.0));
        match p.maximize(&[0.0, 1.0]) {
            LpOutcome::Optimal { x, value } => {
                assert!((value - 2.0).abs() < 1e-9);
                assert!((x[0] + x[1] - 2.0).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }
}
