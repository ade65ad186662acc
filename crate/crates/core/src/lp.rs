//! Small dense linear programs, solved with `minilp`.
//!
//! The model is kept as plain data so the same constraint system can be
//! re-solved under different objectives (used for lexicographic tie-breaking)
//! and evaluated at an arbitrary point.

use minilp::{ComparisonOp, OptimizationDirection, Problem};

use crate::error::{Error, Result};

/// Feasibility tolerance shared by every LP-backed check.
pub const FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(pub usize);

#[derive(Debug, Clone)]
pub struct Constraint {
    pub terms: Vec<(Var, f64)>,
    pub cmp: Cmp,
    pub rhs: f64,
    pub label: String,
}

impl Constraint {
    pub fn lhs(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(v, c)| c * x[v.0]).sum()
    }

    /// Amount by which the constraint is violated at `x` (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.lhs(x);
        match self.cmp {
            Cmp::Le => (lhs - self.rhs).max(0.0),
            Cmp::Ge => (self.rhs - lhs).max(0.0),
            Cmp::Eq => (lhs - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Model {
    bounds: Vec<(f64, f64)>,
    names: Vec<String>,
    constraints: Vec<Constraint>,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub objective: f64,
    pub values: Vec<f64>,
}

impl Solution {
    pub fn get(&self, v: Var) -> f64 {
        self.values[v.0]
    }
}

impl Model {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn var(&mut self, name: impl Into<String>, lo: f64, hi: f64) -> Var {
        self.bounds.push((lo, hi));
        self.names.push(name.into());
        Var(self.bounds.len() - 1)
    }

    pub fn nonneg(&mut self, name: impl Into<String>) -> Var {
        self.var(name, 0.0, f64::INFINITY)
    }

    pub fn constrain(
        &mut self,
        label: impl Into<String>,
        terms: Vec<(Var, f64)>,
        cmp: Cmp,
        rhs: f64,
    ) {
        self.constraints.push(Constraint {
            terms,
            cmp,
            rhs,
            label: label.into(),
        });
    }

    pub fn num_vars(&self) -> usize {
        self.bounds.len()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn name(&self, v: Var) -> &str {
        &self.names[v.0]
    }

    /// True iff `x` satisfies bounds and constraints within `tol`.
    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        self.worst_violation(x) <= tol
    }

    pub fn worst_violation(&self, x: &[f64]) -> f64 {
        let bound_viol = self
            .bounds
            .iter()
            .zip(x)
            .map(|(&(lo, hi), &v)| (lo - v).max(v - hi).max(0.0))
            .fold(0.0, f64::max);
        self.constraints
            .iter()
            .map(|c| c.violation(x))
            .fold(bound_viol, f64::max)
    }

    pub fn maximize(&self, objective: &[(Var, f64)]) -> Result<Solution> {
        self.solve(objective, OptimizationDirection::Maximize)
    }

    pub fn minimize(&self, objective: &[(Var, f64)]) -> Result<Solution> {
        self.solve(objective, OptimizationDirection::Minimize)
    }

    fn solve(&self, objective: &[(Var, f64)], dir: OptimizationDirection) -> Result<Solution> {
        let mut coef = vec![0.0; self.num_vars()];
        for (v, c) in objective {
            coef[v.0] += c;
        }
        let mut problem = Problem::new(dir);
        let vars: Vec<_> = self
            .bounds
            .iter()
            .zip(&coef)
            .map(|(&bounds, &c)| problem.add_var(c, bounds))
            .collect();
        for c in &self.constraints {
            let expr: Vec<_> = c.terms.iter().map(|(v, k)| (vars[v.0], *k)).collect();
            let op = match c.cmp {
                Cmp::Le => ComparisonOp::Le,
                Cmp::Ge => ComparisonOp::Ge,
                Cmp::Eq => ComparisonOp::Eq,
            };
            problem.add_constraint(expr.as_slice(), op, c.rhs);
        }
        let sol = problem.solve().map_err(|e| Error::Lp(e.to_string()))?;
        Ok(Solution {
            objective: sol.objective(),
            values: vars.iter().map(|v| sol[*v]).collect(),
        })
    }

    /// Maximize `objective`, then among (near-)optimal points minimize each
    /// variable of `tie_break` in turn. Returns the final point; its
    /// `objective` field is the primary optimum.
    pub fn maximize_lexicographic(
        &self,
        objective: &[(Var, f64)],
        tie_break: &[Var],
    ) -> Result<Solution> {
        let first = self.maximize(objective)?;
        if tie_break.is_empty() {
            return Ok(first);
        }
        let mut model = self.clone();
        let slack = FEAS_TOL * first.objective.abs().max(1.0);
        model.constrain(
            "optimum",
            objective.to_vec(),
            Cmp::Ge,
            first.objective - slack,
        );
        let mut last = first.clone();
        for &v in tie_break {
            let sol = model.minimize(&[(v, 1.0)])?;
            let value = sol.get(v);
            model.constrain(
                format!("fix {}", self.name(v)),
                vec![(v, 1.0)],
                Cmp::Le,
                value + FEAS_TOL,
            );
            last = sol;
        }
        Ok(Solution {
            objective: first.objective,
            values: last.values,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_lp() {
        // max 3x + 2y, x + y <= 4, x + 3y <= 6, x <= 3
        let mut m = Model::new();
        let x = m.var("x", 0.0, 3.0);
        let y = m.nonneg("y");
        m.constrain("a", vec![(x, 1.0), (y, 1.0)], Cmp::Le, 4.0);
        m.constrain("b", vec![(x, 1.0), (y, 3.0)], Cmp::Le, 6.0);
        let s = m.maximize(&[(x, 3.0), (y, 2.0)]).unwrap();
        assert!((s.objective - 11.0).abs() < 1e-9);
        assert!(m.is_feasible(&s.values, 1e-9));
    }

    #[test]
    fn lexicographic_picks_smallest() {
        // max x s.t. x <= 1, x - y - z <= 1: optimum x=1 for any y,z >= 0
        let mut m = Model::new();
        let x = m.var("x", 0.0, 1.0);
        let y = m.var("y", 0.0, 5.0);
        let z = m.var("z", 0.0, 5.0);
        m.constrain("c", vec![(x, 1.0), (y, -1.0), (z, -1.0)], Cmp::Le, 1.0);
        m.constrain("d", vec![(y, 1.0), (z, 1.0)], Cmp::Ge, 2.0);
        let s = m.maximize_lexicographic(&[(x, 1.0)], &[y, z]).unwrap();
        assert!(s.get(y).abs() < 1e-8);
        assert!((s.get(z) - 2.0).abs() < 1e-8);
    }

    #[test]
    fn infeasible_reports_error() {
        let mut m = Model::new();
        let x = m.nonneg("x");
        m.constrain("c", vec![(x, 1.0)], Cmp::Le, -1.0);
        assert!(matches!(m.maximize(&[(x, 1.0)]), Err(Error::Lp(_))));
    }
}
