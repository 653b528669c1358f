//! Dense two-phase simplex for the exact-LP oracles.
//!
//! Scope is deliberately small: minimize `c x` subject to `A x = b`, `x >= 0`,
//! with at most a few hundred rows/columns. Pivoting uses Bland's rule
//! (smallest eligible entering index, smallest basic-variable leaving index on
//! ratio ties), which cannot cycle, so the degenerate bases that the joint
//! decoding polytope produces are handled without perturbation tricks.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SimplexError {
    #[error("constraints are infeasible (phase-1 optimum {0:.3e} > 0)")]
    Infeasible(f64),
    #[error("objective is unbounded below")]
    Unbounded,
    #[error("pivot limit {0} exceeded")]
    IterationLimit(usize),
    #[error("constraint references variable {var} outside 0..{num_vars}")]
    BadIndex { var: usize, num_vars: usize },
}

/// Equality-form linear program over nonnegative variables.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    num_vars: usize,
    objective: Vec<f64>,
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SimplexSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

const EPS: f64 = 1e-9;
const FEAS_EPS: f64 = 1e-7;
const PIVOT_LIMIT: usize = 200_000;

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        Self { num_vars, objective: vec![0.0; num_vars], rows: Vec::new(), rhs: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn set_objective_coeff(&mut self, var: usize, coeff: f64) -> Result<(), SimplexError> {
        self.check_var(var)?;
        self.objective[var] = coeff;
        Ok(())
    }

    /// Adds `sum coeff_k x_k = rhs`. Repeated variables accumulate.
    pub fn add_equality(&mut self, coeffs: &[(usize, f64)], rhs: f64) -> Result<(), SimplexError> {
        let mut row = vec![0.0; self.num_vars];
        for &(var, c) in coeffs {
            self.check_var(var)?;
            row[var] += c;
        }
        self.rows.push(row);
        self.rhs.push(rhs);
        Ok(())
    }

    fn check_var(&self, var: usize) -> Result<(), SimplexError> {
        if var >= self.num_vars {
            return Err(SimplexError::BadIndex { var, num_vars: self.num_vars });
        }
        Ok(())
    }

    /// Two-phase solve; returns the optimal vertex and objective value.
    pub fn solve(&self) -> Result<SimplexSolution, SimplexError> {
        let n = self.num_vars;
        let m = self.rows.len();
        // Tableau: n structural + m artificial columns, rhs kept separately.
        let width = n + m;
        let mut t: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut rhs = vec![0.0; m];
        for r in 0..m {
            let flip = if self.rhs[r] < 0.0 { -1.0 } else { 1.0 };
            let mut row = vec![0.0; width];
            for c in 0..n {
                row[c] = flip * self.rows[r][c];
            }
            row[n + r] = 1.0;
            rhs[r] = flip * self.rhs[r];
            t.push(row);
        }
        let mut basis: Vec<usize> = (n..n + m).collect();
        let mut pivots = 0usize;

        // Phase 1: minimize the sum of artificials. Reduced costs start as
        // d_j - sum_r t[r][j] with d = 1 on artificial columns; `obj_val`
        // holds -z throughout, per the usual tableau convention.
        let mut obj = vec![0.0; width];
        let mut obj_val = 0.0;
        for j in 0..width {
            let colsum: f64 = t.iter().map(|row| row[j]).sum();
            obj[j] = if j >= n { 1.0 } else { 0.0 } - colsum;
        }
        for r in 0..m {
            obj_val -= rhs[r];
        }
        run_pivots(&mut t, &mut rhs, &mut basis, &mut obj, &mut obj_val, width, &mut pivots)?;
        if -obj_val > FEAS_EPS {
            return Err(SimplexError::Infeasible(-obj_val));
        }

        // Drive artificials out of the basis; rows that cannot pivot onto a
        // structural column are redundant and get dropped.
        let mut r = 0;
        while r < t.len() {
            if basis[r] >= n {
                if let Some(c) = (0..n).find(|&c| t[r][c].abs() > EPS) {
                    pivot(&mut t, &mut rhs, &mut basis, &mut obj, &mut obj_val, r, c);
                    pivots += 1;
                } else {
                    t.remove(r);
                    rhs.remove(r);
                    basis.remove(r);
                    continue;
                }
            }
            r += 1;
        }

        // Phase 2 prices only structural columns; artificial columns are
        // locked out by a +inf-like reduced cost of 0 exclusion below.
        let mut obj = vec![0.0; width];
        let mut obj_val = 0.0;
        for j in 0..n {
            obj[j] = self.objective[j];
        }
        for (r, &b) in basis.iter().enumerate() {
            let cb = self.objective[b];
            if cb != 0.0 {
                obj_val -= cb * rhs[r];
                let row = t[r].clone();
                for j in 0..width {
                    obj[j] -= cb * row[j];
                }
            }
        }
        for j in n..width {
            obj[j] = 0.0; // artificial columns never re-enter
        }
        run_pivots(&mut t, &mut rhs, &mut basis, &mut obj, &mut obj_val, n, &mut pivots)?;

        let mut x = vec![0.0; n];
        for (r, &b) in basis.iter().enumerate() {
            if b < n {
                x[b] = rhs[r].max(0.0);
            }
        }
        let objective = self.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(SimplexSolution { x, objective, pivots })
    }
}

/// Bland-rule pivot loop over columns `0..allowed`.
fn run_pivots(
    t: &mut Vec<Vec<f64>>,
    rhs: &mut Vec<f64>,
    basis: &mut [usize],
    obj: &mut [f64],
    obj_val: &mut f64,
    allowed: usize,
    pivots: &mut usize,
) -> Result<(), SimplexError> {
    loop {
        let Some(enter) = (0..allowed).find(|&j| obj[j] < -EPS) else {
            return Ok(());
        };
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..t.len() {
            let a = t[r][enter];
            if a > EPS {
                let ratio = rhs[r] / a;
                let better = match leave {
                    None => true,
                    Some((lr, lratio)) => {
                        ratio < lratio - EPS
                            || (ratio < lratio + EPS && basis[r] < basis[lr])
                    }
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        let Some((row, _)) = leave else {
            return Err(SimplexError::Unbounded);
        };
        pivot(t, rhs, basis, obj, obj_val, row, enter);
        *pivots += 1;
        if *pivots > PIVOT_LIMIT {
            return Err(SimplexError::IterationLimit(PIVOT_LIMIT));
        }
    }
}

fn pivot(
    t: &mut [Vec<f64>],
    rhs: &mut [f64],
    basis: &mut [usize],
    obj: &mut [f64],
    obj_val: &mut f64,
    row: usize,
    col: usize,
) {
    let scale = t[row][col];
    for v in t[row].iter_mut() {
        *v /= scale;
    }
    rhs[row] /= scale;
    let pivot_row = t[row].clone();
    let pivot_rhs = rhs[row];
    for r in 0..t.len() {
        if r == row {
            continue;
        }
        let f = t[r][col];
        if f != 0.0 {
            for (v, p) in t[r].iter_mut().zip(&pivot_row) {
                *v -= f * p;
            }
            t[r][col] = 0.0;
            rhs[r] -= f * pivot_rhs;
        }
    }
    let f = obj[col];
    if f != 0.0 {
        for (v, p) in obj.iter_mut().zip(&pivot_row) {
            *v -= f * p;
        }
        obj[col] = 0.0;
        *obj_val -= f * pivot_rhs;
    }
    basis[row] = col;
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn one_constraint_minimum_sits_at_a_vertex() {
        // min -x over x + y + s = 1.
        let mut lp = LinearProgram::new(3);
        lp.set_objective_coeff(0, -1.0).unwrap();
        lp.add_equality(&[(0, 1.0), (1, 1.0), (2, 1.0)], 1.0).unwrap();
        let sol = lp.solve().unwrap();
        assert_relative_eq!(sol.objective, -1.0, epsilon = 1e-9);
        assert_relative_eq!(sol.x[0], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn transportation_style_lp_reaches_known_optimum() {
        // Two supplies (1, 2), two demands (2, 1), costs (1, 3 / 2, 1):
        // optimum ships supply 1 to demand 1 and splits supply 2.
        let mut lp = LinearProgram::new(4); // x11 x12 x21 x22
        for (v, c) in [(0, 1.0), (1, 3.0), (2, 2.0), (3, 1.0)] {
            lp.set_objective_coeff(v, c).unwrap();
        }
        lp.add_equality(&[(0, 1.0), (1, 1.0)], 1.0).unwrap();
        lp.add_equality(&[(2, 1.0), (3, 1.0)], 2.0).unwrap();
        lp.add_equality(&[(0, 1.0), (2, 1.0)], 2.0).unwrap();
        lp.add_equality(&[(1, 1.0), (3, 1.0)], 1.0).unwrap();
        let sol = lp.solve().unwrap();
        assert_relative_eq!(sol.objective, 4.0, epsilon = 1e-9);
        assert_relative_eq!(sol.x[0], 1.0, epsilon = 1e-9);
        assert_relative_eq!(sol.x[2], 1.0, epsilon = 1e-9);
        assert_relative_eq!(sol.x[3], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn infeasible_and_unbounded_are_reported() {
        let mut lp = LinearProgram::new(2);
        lp.add_equality(&[(0, 1.0), (1, 1.0)], -1.0).unwrap();
        assert!(matches!(lp.solve(), Err(SimplexError::Infeasible(_))));

        let mut lp = LinearProgram::new(2);
        lp.set_objective_coeff(0, -1.0).unwrap();
        lp.add_equality(&[(1, 1.0)], 1.0).unwrap();
        assert!(matches!(lp.solve(), Err(SimplexError::Unbounded)));
    }

    #[test]
    fn redundant_rows_are_tolerated() {
        let mut lp = LinearProgram::new(2);
        lp.set_objective_coeff(0, 1.0).unwrap();
        lp.set_objective_coeff(1, 2.0).unwrap();
        lp.add_equality(&[(0, 1.0), (1, 1.0)], 1.0).unwrap();
        lp.add_equality(&[(0, 1.0), (1, 1.0)], 1.0).unwrap();
        lp.add_equality(&[(0, 2.0), (1, 2.0)], 2.0).unwrap();
        let sol = lp.solve().unwrap();
        assert_relative_eq!(sol.objective, 1.0, epsilon = 1e-9);
        assert_relative_eq!(sol.x[0], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn degenerate_vertices_do_not_cycle() {
        // A classic degenerate configuration: multiple bases describe the
        // same vertex; Bland's rule must terminate.
        let mut lp = LinearProgram::new(4);
        lp.set_objective_coeff(0, -0.75).unwrap();
        lp.set_objective_coeff(1, 150.0).unwrap();
        lp.set_objective_coeff(2, -0.02).unwrap();
        lp.set_objective_coeff(3, 6.0).unwrap();
        lp.add_equality(&[(0, 0.25), (1, -60.0), (2, -0.04), (3, 9.0)], 0.0).unwrap();
        lp.add_equality(&[(0, 0.5), (1, -90.0), (2, -0.02), (3, 3.0)], 0.0).unwrap();
        lp.add_equality(&[(2, 1.0)], 1.0).unwrap();
        let sol = lp.solve().unwrap();
        assert!(sol.objective < 0.0);
    }

    #[test]
    fn zero_rows_and_zero_rhs_are_fine() {
        let mut lp = LinearProgram::new(2);
        lp.set_objective_coeff(0, 1.0).unwrap();
        lp.add_equality(&[(0, 1.0), (1, -1.0)], 0.0).unwrap();
        lp.add_equality(&[(1, 1.0)], 0.5).unwrap();
        let sol = lp.solve().unwrap();
        assert_relative_eq!(sol.x[0], 0.5, epsilon = 1e-9);
    }
}
