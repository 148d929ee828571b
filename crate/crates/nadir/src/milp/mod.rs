//! Linear-program and branch-and-bound mixed-integer solver.
//!
//! The model layer is declarative: create variables with bounds, add linear
//! rows and an objective, then call [`MilpModel::solve_lp`] (integrality
//! relaxed) or [`MilpModel::solve_mip`]. The LP engine is a bounded-variable
//! primal simplex with an explicit basis inverse and Bland's rule engaged
//! after degeneracy detection; the MIP driver is best-bound branch and bound
//! with most-fractional branching and depth-first plunges for incumbents.
//!
//! Models can be dumped to and restored from an LP-format-compatible text
//! file for external cross-checks (see [`MilpModel::write_lp`]).

mod branch;
mod lpfile;
mod simplex;

pub use lpfile::parse_lp;

use thiserror::Error;

/// Integer feasibility tolerance: binaries must sit within this of {0, 1}.
pub const INT_TOL: f64 = 1e-6;
/// Row feasibility tolerance (relative, scaled by row magnitude).
pub const FEAS_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("lp parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Handle to a model variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VarId(pub(crate) usize);

impl VarId {
    pub fn index(&self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub(crate) struct Var {
    pub name: String,
    pub lb: f64,
    pub ub: f64,
    pub binary: bool,
}

#[derive(Debug, Clone)]
pub(crate) struct Row {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// A mixed-integer linear program in minimization form.
#[derive(Debug, Clone, Default)]
pub struct MilpModel {
    pub(crate) vars: Vec<Var>,
    pub(crate) rows: Vec<Row>,
    pub(crate) obj: Vec<(usize, f64)>,
    pub(crate) obj_const: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    GapLimit,
    TimeLimit,
}

/// Result of an LP or MIP solve.
#[derive(Debug, Clone)]
pub struct MilpSolution {
    pub status: Status,
    /// Objective value of the returned assignment (incumbent for MIP).
    pub objective: f64,
    /// Value per variable, aligned with creation order.
    pub x: Vec<f64>,
    /// Proven lower bound on the optimum (equals `objective` when optimal).
    pub bound: f64,
    /// Branch-and-bound nodes explored (1 for a plain LP solve).
    pub nodes: u64,
    /// Total simplex iterations across all node solves.
    pub iterations: u64,
}

impl MilpSolution {
    pub fn value(&self, v: VarId) -> f64 {
        self.x[v.0]
    }

    pub fn is_ok(&self) -> bool {
        matches!(self.status, Status::Optimal | Status::GapLimit)
    }
}

/// Options for [`MilpModel::solve_mip`].
#[derive(Debug, Clone)]
pub struct MipOptions {
    /// Relative optimality gap at which the search stops.
    pub gap: f64,
    /// Wall-clock budget; best incumbent is returned on expiry.
    pub time_limit: Option<std::time::Duration>,
    /// Known feasible assignment used to seed the incumbent.
    pub incumbent_hint: Option<Vec<f64>>,
}

impl Default for MipOptions {
    fn default() -> Self {
        Self {
            gap: 1e-6,
            time_limit: None,
            incumbent_hint: None,
        }
    }
}

impl MilpModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lb: f64, ub: f64) -> VarId {
        let id = self.vars.len();
        self.vars.push(Var {
            name: name.into(),
            lb,
            ub,
            binary: false,
        });
        VarId(id)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> VarId {
        let id = self.vars.len();
        self.vars.push(Var {
            name: name.into(),
            lb: 0.0,
            ub: 1.0,
            binary: true,
        });
        VarId(id)
    }

    /// Tighten the bounds of an existing variable (used to fix decisions).
    pub fn set_bounds(&mut self, v: VarId, lb: f64, ub: f64) {
        self.vars[v.0].lb = lb;
        self.vars[v.0].ub = ub;
    }

    pub fn bounds(&self, v: VarId) -> (f64, f64) {
        (self.vars[v.0].lb, self.vars[v.0].ub)
    }

    pub fn var_name(&self, v: VarId) -> &str {
        &self.vars[v.0].name
    }

    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        terms: &[(VarId, f64)],
        sense: Sense,
        rhs: f64,
    ) {
        let mut combined: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
        for &(v, c) in terms {
            if c == 0.0 {
                continue;
            }
            match combined.iter_mut().find(|(i, _)| *i == v.0) {
                Some((_, acc)) => *acc += c,
                None => combined.push((v.0, c)),
            }
        }
        self.rows.push(Row {
            name: name.into(),
            terms: combined,
            sense,
            rhs,
        });
    }

    /// Replace the objective; minimization of `terms + constant`.
    pub fn set_objective(&mut self, terms: &[(VarId, f64)], constant: f64) {
        let mut combined: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
        for &(v, c) in terms {
            if c == 0.0 {
                continue;
            }
            match combined.iter_mut().find(|(i, _)| *i == v.0) {
                Some((_, acc)) => *acc += c,
                None => combined.push((v.0, c)),
            }
        }
        self.obj = combined;
        self.obj_const = constant;
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_binaries(&self) -> usize {
        self.vars.iter().filter(|v| v.binary).count()
    }

    pub fn binary_ids(&self) -> Vec<VarId> {
        self.vars
            .iter()
            .enumerate()
            .filter(|(_, v)| v.binary)
            .map(|(i, _)| VarId(i))
            .collect()
    }

    /// Check structural validity: finite binary bounds, no NaN/inf data.
    pub fn validate(&self) -> Result<(), ModelError> {
        for (i, v) in self.vars.iter().enumerate() {
            if v.lb.is_nan() || v.ub.is_nan() {
                return Err(ModelError::Invalid(format!("var {} has NaN bound", i)));
            }
            if v.lb > v.ub + 1e-12 {
                return Err(ModelError::Invalid(format!(
                    "var {} ({}) has crossed bounds [{}, {}]",
                    i, v.name, v.lb, v.ub
                )));
            }
            if v.binary && (!v.lb.is_finite() || !v.ub.is_finite() || v.lb < -1e-9 || v.ub > 1.0 + 1e-9)
            {
                return Err(ModelError::Invalid(format!(
                    "binary var {} ({}) has bounds outside [0, 1]",
                    i, v.name
                )));
            }
        }
        for (r, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(ModelError::Invalid(format!("row {} has non-finite rhs", r)));
            }
            for &(v, c) in &row.terms {
                if !c.is_finite() {
                    return Err(ModelError::Invalid(format!(
                        "row {} has non-finite coefficient on var {}",
                        r, v
                    )));
                }
                if v >= self.vars.len() {
                    return Err(ModelError::Invalid(format!("row {} references unknown var", r)));
                }
            }
        }
        for &(v, c) in &self.obj {
            if !c.is_finite() || v >= self.vars.len() {
                return Err(ModelError::Invalid("bad objective term".into()));
            }
        }
        Ok(())
    }

    /// Evaluate the objective at an assignment.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.obj_const + self.obj.iter().map(|&(v, c)| c * x[v]).sum::<f64>()
    }

    /// Largest scaled violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, v) in self.vars.iter().enumerate() {
            let scale = x[i].abs().max(1.0);
            worst = worst.max((v.lb - x[i]) / scale).max((x[i] - v.ub) / scale);
        }
        for row in &self.rows {
            let mut act = 0.0;
            let mut scale: f64 = row.rhs.abs().max(1.0);
            for &(v, c) in &row.terms {
                act += c * x[v];
                scale = scale.max((c * x[v]).abs());
            }
            let viol = match row.sense {
                Sense::Le => act - row.rhs,
                Sense::Ge => row.rhs - act,
                Sense::Eq => (act - row.rhs).abs(),
            };
            worst = worst.max(viol / scale);
        }
        worst
    }

    /// Solve the LP relaxation (integrality dropped).
    pub fn solve_lp(&self) -> Result<MilpSolution, ModelError> {
        self.validate()?;
        Ok(simplex::solve_relaxation(self, None))
    }

    /// Solve as a MIP with the given options.
    pub fn solve_mip(&self, opts: &MipOptions) -> Result<MilpSolution, ModelError> {
        self.validate()?;
        Ok(branch::solve_mip(self, opts))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lp_single_var_lower_bounded() {
        // min x s.t. x >= 3, x in [0, 10]
        let mut m = MilpModel::new();
        let x = m.add_var("x", 0.0, 10.0);
        m.add_row("c0", &[(x, 1.0)], Sense::Ge, 3.0);
        m.set_objective(&[(x, 1.0)], 0.0);
        let s = m.solve_lp().unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert!((s.objective - 3.0).abs() < 1e-9);
        assert!((s.value(x) - 3.0).abs() < 1e-9);
    }

    #[test]
    fn lp_two_var_packing() {
        // min -x - y s.t. x + y <= 1, x, y in [0, 1]  ->  -1
        let mut m = MilpModel::new();
        let x = m.add_var("x", 0.0, 1.0);
        let y = m.add_var("y", 0.0, 1.0);
        m.add_row("cap", &[(x, 1.0), (y, 1.0)], Sense::Le, 1.0);
        m.set_objective(&[(x, -1.0), (y, -1.0)], 0.0);
        let s = m.solve_lp().unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert!((s.objective + 1.0).abs() < 1e-9);
    }

    #[test]
    fn lp_infeasible_reported() {
        let mut m = MilpModel::new();
        let x = m.add_var("x", 0.0, 1.0);
        m.add_row("hi", &[(x, 1.0)], Sense::Ge, 2.0);
        m.set_objective(&[(x, 1.0)], 0.0);
        let s = m.solve_lp().unwrap();
        assert_eq!(s.status, Status::Infeasible);
    }

    #[test]
    fn lp_unbounded_reported() {
        let mut m = MilpModel::new();
        let x = m.add_var("x", 0.0, f64::INFINITY);
        m.set_objective(&[(x, -1.0)], 0.0);
        let s = m.solve_lp().unwrap();
        assert_eq!(s.status, Status::Unbounded);
    }

    #[test]
    fn lp_equality_and_free_vars() {
        // min x + y s.t. x + y = 2, x - y = 0 -> x = y = 1
        let mut m = MilpModel::new();
        let x = m.add_var("x", f64::NEG_INFINITY, f64::INFINITY);
        let y = m.add_var("y", f64::NEG_INFINITY, f64::INFINITY);
        m.add_row("sum", &[(x, 1.0), (y, 1.0)], Sense::Eq, 2.0);
        m.add_row("diff", &[(x, 1.0), (y, -1.0)], Sense::Eq, 0.0);
        m.set_objective(&[(x, 1.0), (y, 1.0)], 0.0);
        let s = m.solve_lp().unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert!((s.value(x) - 1.0).abs() < 1e-8);
        assert!((s.value(y) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn mip_fixed_binaries_reduce_to_lp() {
        let mut m = MilpModel::new();
        let b = m.add_binary("b");
        let x = m.add_var("x", 0.0, 2.0);
        m.set_bounds(b, 1.0, 1.0);
        m.add_row("link", &[(x, 1.0), (b, -1.0)], Sense::Le, 0.5);
        m.set_objective(&[(x, -1.0)], 0.0);
        let mip = m.solve_mip(&MipOptions::default()).unwrap();
        let lp = m.solve_lp().unwrap();
        assert_eq!(mip.status, Status::Optimal);
        assert!((mip.objective - lp.objective).abs() < 1e-9);
    }

    #[test]
    fn mip_infeasible_binary_system() {
        // x1 + x2 = 1.5 over binaries is infeasible.
        let mut m = MilpModel::new();
        let a = m.add_binary("x1");
        let b = m.add_binary("x2");
        m.add_row("half", &[(a, 1.0), (b, 1.0)], Sense::Eq, 1.5);
        m.set_objective(&[(a, 1.0)], 0.0);
        let s = m.solve_mip(&MipOptions::default()).unwrap();
        assert_eq!(s.status, Status::Infeasible);
    }

    #[test]
    fn validate_rejects_bad_binary_bounds() {
        let mut m = MilpModel::new();
        let b = m.add_binary("b");
        m.set_bounds(b, 0.0, 2.0);
        assert!(m.validate().is_err());
    }

    #[test]
    fn mip_determinism() {
        let m = knapsack_model();
        let a = m.solve_mip(&MipOptions::default()).unwrap();
        let b = m.solve_mip(&MipOptions::default()).unwrap();
        assert_eq!(a.nodes, b.nodes);
        assert_eq!(a.objective, b.objective);
        assert_eq!(a.x, b.x);
    }

    #[test]
    fn mip_knapsack_matches_enumeration() {
        let m = knapsack_model();
        let s = m.solve_mip(&MipOptions::default()).unwrap();
        assert_eq!(s.status, Status::Optimal);
        // Exhaustive 2^10 enumeration.
        let values = [12.0, 5.0, 9.0, 14.0, 3.0, 8.0, 11.0, 6.0, 7.0, 10.0];
        let weights = [4.0, 2.0, 3.0, 5.0, 1.0, 3.0, 4.0, 2.0, 3.0, 4.0];
        let mut best = 0.0f64;
        for mask in 0u32..1 << 10 {
            let (mut v, mut w) = (0.0, 0.0);
            for i in 0..10 {
                if mask >> i & 1 == 1 {
                    v += values[i];
                    w += weights[i];
                }
            }
            if w <= 12.0 {
                best = best.max(v);
            }
        }
        assert!((s.objective + best).abs() < 1e-9, "mip {} vs brute {}", s.objective, -best);
        // Bound sanity at completion.
        assert!(s.bound <= s.objective + 1e-9);
    }

    fn knapsack_model() -> MilpModel {
        let values = [12.0, 5.0, 9.0, 14.0, 3.0, 8.0, 11.0, 6.0, 7.0, 10.0];
        let weights = [4.0, 2.0, 3.0, 5.0, 1.0, 3.0, 4.0, 2.0, 3.0, 4.0];
        let mut m = MilpModel::new();
        let xs: Vec<VarId> = (0..10).map(|i| m.add_binary(format!("x{}", i))).collect();
        let wrow: Vec<(VarId, f64)> = xs.iter().copied().zip(weights).collect();
        m.add_row("cap", &wrow, Sense::Le, 12.0);
        let obj: Vec<(VarId, f64)> = xs.iter().copied().zip(values.map(|v| -v)).collect();
        m.set_objective(&obj, 0.0);
        m
    }
}
