//! Bounded-variable primal simplex with an explicit dense basis inverse.
//!
//! Rows are augmented with one slack each, so the initial slack basis is
//! always available. Phase 1 minimizes the sum of basic bound violations
//! (composite costs), phase 2 the true objective. Bland's rule is engaged
//! after a run of degenerate pivots and released once progress resumes.

use super::{MilpModel, Sense, Status};

const PIVOT_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const BOUND_TOL: f64 = 1e-9;
const DEGEN_LIMIT: u32 = 200;
const REFACTOR_EVERY: u64 = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VState {
    Basic,
    AtLower,
    AtUpper,
    /// Free variable resting at zero.
    FreeZero,
}

/// Warm-start data: basis membership plus the bound each nonbasic rests at.
#[derive(Debug, Clone)]
pub(crate) struct Basis {
    pub vars: Vec<u32>,
    pub nb_upper: Vec<bool>,
}

pub(crate) struct LpOutcome {
    pub status: Status,
    pub objective: f64,
    /// Structural variable values.
    pub x: Vec<f64>,
    pub basis: Basis,
    pub iterations: u64,
}

/// Prebuilt column-wise form of a model, reused across node solves.
pub(crate) struct LpEngine {
    m: usize,
    n: usize,
    /// Structural columns (row, coeff).
    cols: Vec<Vec<(usize, f64)>>,
    cost: Vec<f64>,
    rhs: Vec<f64>,
    slack_lb: Vec<f64>,
    slack_ub: Vec<f64>,
    obj_const: f64,
}

impl LpEngine {
    pub fn new(model: &MilpModel) -> Self {
        let n = model.vars.len();
        let m = model.rows.len();
        let mut cols = vec![Vec::new(); n];
        for (r, row) in model.rows.iter().enumerate() {
            for &(v, c) in &row.terms {
                cols[v].push((r, c));
            }
        }
        let mut cost = vec![0.0; n];
        for &(v, c) in &model.obj {
            cost[v] += c;
        }
        let mut slack_lb = vec![0.0; m];
        let mut slack_ub = vec![0.0; m];
        for (r, row) in model.rows.iter().enumerate() {
            match row.sense {
                Sense::Le => {
                    slack_lb[r] = 0.0;
                    slack_ub[r] = f64::INFINITY;
                }
                Sense::Ge => {
                    slack_lb[r] = f64::NEG_INFINITY;
                    slack_ub[r] = 0.0;
                }
                Sense::Eq => {
                    slack_lb[r] = 0.0;
                    slack_ub[r] = 0.0;
                }
            }
        }
        Self {
            m,
            n,
            cols,
            cost,
            rhs: model.rows.iter().map(|r| r.rhs).collect(),
            slack_lb,
            slack_ub,
            obj_const: model.obj_const,
        }
    }

    /// Solve with the given structural bounds, optionally warm-started.
    pub fn solve(&self, lb: &[f64], ub: &[f64], warm: Option<&Basis>) -> LpOutcome {
        let nt = self.n + self.m;
        let mut full_lb = Vec::with_capacity(nt);
        let mut full_ub = Vec::with_capacity(nt);
        full_lb.extend_from_slice(lb);
        full_ub.extend_from_slice(ub);
        full_lb.extend_from_slice(&self.slack_lb);
        full_ub.extend_from_slice(&self.slack_ub);
        for j in 0..nt {
            if full_lb[j] > full_ub[j] + 1e-12 {
                return LpOutcome {
                    status: Status::Infeasible,
                    objective: f64::INFINITY,
                    x: lb.to_vec(),
                    basis: Basis {
                        vars: (0..self.m).map(|r| (self.n + r) as u32).collect(),
                        nb_upper: vec![false; nt],
                    },
                    iterations: 0,
                };
            }
        }
        let mut w = Work::new(self, full_lb, full_ub, warm);
        w.run()
    }

    fn column(&self, j: usize) -> ColRef<'_> {
        if j < self.n {
            ColRef::Structural(&self.cols[j])
        } else {
            ColRef::Slack(j - self.n)
        }
    }
}

enum ColRef<'a> {
    Structural(&'a [(usize, f64)]),
    Slack(usize),
}

struct Work<'a> {
    eng: &'a LpEngine,
    lb: Vec<f64>,
    ub: Vec<f64>,
    state: Vec<VState>,
    basis: Vec<usize>,
    binv: Vec<f64>,
    xb: Vec<f64>,
    // scratch
    cb: Vec<f64>,
    y: Vec<f64>,
    w: Vec<f64>,
    iters: u64,
    pivots_since_refactor: u64,
    degen_run: u32,
    bland: bool,
}

impl<'a> Work<'a> {
    fn new(eng: &'a LpEngine, lb: Vec<f64>, ub: Vec<f64>, warm: Option<&Basis>) -> Self {
        let nt = eng.n + eng.m;
        let m = eng.m;
        let mut state: Vec<VState> = (0..nt).map(|j| nonbasic_rest(lb[j], ub[j], false)).collect();
        let mut basis: Vec<usize> = (eng.n..nt).collect();
        if let Some(wb) = warm {
            if wb.vars.len() == m && wb.nb_upper.len() == nt {
                let mut seen = vec![false; nt];
                let mut ok = true;
                for &v in &wb.vars {
                    let v = v as usize;
                    if v >= nt || seen[v] {
                        ok = false;
                        break;
                    }
                    seen[v] = true;
                }
                if ok {
                    basis = wb.vars.iter().map(|&v| v as usize).collect();
                    for j in 0..nt {
                        if !seen[j] {
                            state[j] = nonbasic_rest(lb[j], ub[j], wb.nb_upper[j]);
                        }
                    }
                }
            }
        }
        for &v in &basis {
            state[v] = VState::Basic;
        }
        let mut w = Self {
            eng,
            lb,
            ub,
            state,
            basis,
            binv: vec![0.0; m * m],
            xb: vec![0.0; m],
            cb: vec![0.0; m],
            y: vec![0.0; m],
            w: vec![0.0; m],
            iters: 0,
            pivots_since_refactor: 0,
            degen_run: 0,
            bland: false,
        };
        if !w.refactorize() {
            w.reset_to_slack_basis();
            let ok = w.refactorize();
            debug_assert!(ok, "slack basis must factorize");
        }
        w
    }

    fn reset_to_slack_basis(&mut self) {
        let nt = self.eng.n + self.eng.m;
        for j in 0..nt {
            self.state[j] = nonbasic_rest(self.lb[j], self.ub[j], false);
        }
        self.basis = (self.eng.n..nt).collect();
        for &v in &self.basis {
            self.state[v] = VState::Basic;
        }
    }

    /// Rebuild the dense basis inverse by Gauss-Jordan with partial pivoting.
    fn refactorize(&mut self) -> bool {
        let m = self.eng.m;
        if m == 0 {
            self.pivots_since_refactor = 0;
            return true;
        }
        let mut a = vec![0.0; m * m];
        for (r, &v) in self.basis.iter().enumerate() {
            match self.eng.column(v) {
                ColRef::Structural(col) => {
                    for &(row, coef) in col {
                        a[row * m + r] = coef;
                    }
                }
                ColRef::Slack(row) => a[row * m + r] = 1.0,
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for col in 0..m {
            let mut piv_row = col;
            let mut piv_val = a[col * m + col].abs();
            for r in col + 1..m {
                let v = a[r * m + col].abs();
                if v > piv_val {
                    piv_val = v;
                    piv_row = r;
                }
            }
            if piv_val < 1e-12 {
                return false;
            }
            if piv_row != col {
                for k in 0..m {
                    a.swap(piv_row * m + k, col * m + k);
                    inv.swap(piv_row * m + k, col * m + k);
                }
            }
            let p = a[col * m + col];
            for k in 0..m {
                a[col * m + k] /= p;
                inv[col * m + k] /= p;
            }
            for r in 0..m {
                if r == col {
                    continue;
                }
                let f = a[r * m + col];
                if f != 0.0 {
                    for k in 0..m {
                        a[r * m + k] -= f * a[col * m + k];
                        inv[r * m + k] -= f * inv[col * m + k];
                    }
                }
            }
        }
        self.binv = inv;
        self.pivots_since_refactor = 0;
        self.recompute_basics();
        true
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.state[j] {
            VState::AtLower => self.lb[j],
            VState::AtUpper => self.ub[j],
            VState::FreeZero => 0.0,
            VState::Basic => unreachable!(),
        }
    }

    /// xb = Binv * (b - N x_N)
    fn recompute_basics(&mut self) {
        let m = self.eng.m;
        let mut resid = self.eng.rhs.clone();
        let nt = self.eng.n + m;
        for j in 0..nt {
            if self.state[j] == VState::Basic {
                continue;
            }
            let xj = self.nonbasic_value(j);
            if xj == 0.0 {
                continue;
            }
            match self.eng.column(j) {
                ColRef::Structural(col) => {
                    for &(row, coef) in col {
                        resid[row] -= coef * xj;
                    }
                }
                ColRef::Slack(row) => resid[row] -= xj,
            }
        }
        for r in 0..m {
            let mut acc = 0.0;
            let row = &self.binv[r * m..(r + 1) * m];
            for k in 0..m {
                acc += row[k] * resid[k];
            }
            self.xb[r] = acc;
        }
    }

    /// w = Binv * A_q
    fn ftran(&mut self, q: usize) {
        let m = self.eng.m;
        self.w.iter_mut().for_each(|v| *v = 0.0);
        match self.eng.column(q) {
            ColRef::Structural(col) => {
                for k in 0..m {
                    let row = &self.binv[k * m..(k + 1) * m];
                    let mut acc = 0.0;
                    for &(r, coef) in col {
                        acc += row[r] * coef;
                    }
                    self.w[k] = acc;
                }
            }
            ColRef::Slack(r) => {
                for k in 0..m {
                    self.w[k] = self.binv[k * m + r];
                }
            }
        }
    }

    /// y^T = cb^T * Binv
    fn btran(&mut self) {
        let m = self.eng.m;
        self.y.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..m {
            let ck = self.cb[k];
            if ck == 0.0 {
                continue;
            }
            let row = &self.binv[k * m..(k + 1) * m];
            for i in 0..m {
                self.y[i] += ck * row[i];
            }
        }
    }

    fn reduced_cost(&self, j: usize, cj: f64) -> f64 {
        match self.eng.column(j) {
            ColRef::Structural(col) => {
                let mut acc = cj;
                for &(r, coef) in col {
                    acc -= self.y[r] * coef;
                }
                acc
            }
            ColRef::Slack(r) => cj - self.y[r],
        }
    }

    fn total_infeasibility(&self) -> f64 {
        let mut inf = 0.0;
        for r in 0..self.eng.m {
            let v = self.basis[r];
            let x = self.xb[r];
            if x < self.lb[v] - BOUND_TOL {
                inf += self.lb[v] - x;
            } else if x > self.ub[v] + BOUND_TOL {
                inf += x - self.ub[v];
            }
        }
        inf
    }

    fn run(&mut self) -> LpOutcome {
        let max_iters = 2000 + 400 * (self.eng.m as u64 + self.eng.n as u64);
        // Phase 1: drive basic bound violations to zero.
        loop {
            if self.total_infeasibility() < 1e-8 {
                break;
            }
            match self.iterate(true) {
                StepResult::Moved => {
                    if self.iters > max_iters {
                        return self.finish(Status::TimeLimit);
                    }
                }
                StepResult::NoDirection => {
                    if self.total_infeasibility() < 1e-6 {
                        break;
                    }
                    return self.finish(Status::Infeasible);
                }
                StepResult::Unbounded => {
                    // A phase-1 ray cannot reduce infeasibility forever;
                    // refactorize once, then give up as infeasible.
                    if self.pivots_since_refactor > 0 {
                        if !self.refactorize() {
                            return self.finish(Status::Infeasible);
                        }
                    } else {
                        return self.finish(Status::Infeasible);
                    }
                }
            }
        }
        // Phase 2: optimize the true objective.
        loop {
            match self.iterate(false) {
                StepResult::Moved => {
                    if self.iters > max_iters {
                        return self.finish(Status::TimeLimit);
                    }
                }
                StepResult::NoDirection => {
                    if self.total_infeasibility() > 1e-6 {
                        // Numerical drift re-introduced infeasibility; one
                        // refactorization pass, then report honestly.
                        if self.refactorize() && self.total_infeasibility() > 1e-6 {
                            return self.finish(Status::Infeasible);
                        }
                        continue;
                    }
                    return self.finish(Status::Optimal);
                }
                StepResult::Unbounded => {
                    if self.pivots_since_refactor > 0 {
                        self.refactorize();
                        continue;
                    }
                    return self.finish(Status::Unbounded);
                }
            }
        }
    }

    fn phase_costs(&mut self, phase1: bool) {
        for r in 0..self.eng.m {
            let v = self.basis[r];
            self.cb[r] = if phase1 {
                let x = self.xb[r];
                if x < self.lb[v] - BOUND_TOL {
                    -1.0
                } else if x > self.ub[v] + BOUND_TOL {
                    1.0
                } else {
                    0.0
                }
            } else if v < self.eng.n {
                self.eng.cost[v]
            } else {
                0.0
            };
        }
    }

    fn iterate(&mut self, phase1: bool) -> StepResult {
        let m = self.eng.m;
        let nt = self.eng.n + m;
        self.iters += 1;

        self.phase_costs(phase1);
        self.btran();

        // Entering variable selection (Dantzig, or Bland when stalling).
        let mut enter: Option<(usize, f64, i8)> = None; // (var, score, dir)
        for j in 0..nt {
            let st = self.state[j];
            if st == VState::Basic || self.lb[j] == self.ub[j] {
                continue;
            }
            let cj = if phase1 {
                0.0
            } else if j < self.eng.n {
                self.eng.cost[j]
            } else {
                0.0
            };
            let d = self.reduced_cost(j, cj);
            let (improving, dir) = match st {
                VState::AtLower => (d < -DUAL_TOL, 1i8),
                VState::AtUpper => (d > DUAL_TOL, -1i8),
                VState::FreeZero => {
                    if d < -DUAL_TOL {
                        (true, 1)
                    } else if d > DUAL_TOL {
                        (true, -1)
                    } else {
                        (false, 1)
                    }
                }
                VState::Basic => unreachable!(),
            };
            if !improving {
                continue;
            }
            if self.bland {
                enter = Some((j, d.abs(), dir));
                break;
            }
            match enter {
                Some((_, best, _)) if d.abs() <= best => {}
                _ => enter = Some((j, d.abs(), dir)),
            }
        }
        let Some((q, _, dir)) = enter else {
            return StepResult::NoDirection;
        };
        let dirf = dir as f64;

        self.ftran(q);

        // Ratio test: first blocking basic bound, or the entering variable's
        // own opposite bound (bound flip). In phase 1, a basic variable that
        // is outside its bounds blocks only when moving toward feasibility.
        let mut t_best = f64::INFINITY;
        let mut leave: Option<(usize, bool)> = None; // (row, leaves at upper?)
        for r in 0..m {
            let rate = -dirf * self.w[r]; // d xb[r] / d t
            if rate.abs() <= PIVOT_TOL {
                continue;
            }
            let v = self.basis[r];
            let x = self.xb[r];
            let below = x < self.lb[v] - BOUND_TOL;
            let above = x > self.ub[v] + BOUND_TOL;
            let (block, at_upper) = if rate < 0.0 {
                // decreasing
                if above {
                    (self.ub[v], true)
                } else if below {
                    continue; // moving away below; phase-1 cost covers it
                } else if self.lb[v].is_finite() {
                    (self.lb[v], false)
                } else {
                    continue;
                }
            } else {
                // increasing
                if below {
                    (self.lb[v], false)
                } else if above {
                    continue;
                } else if self.ub[v].is_finite() {
                    (self.ub[v], true)
                } else {
                    continue;
                }
            };
            let t = ((block - x) / rate).max(0.0);
            if t < t_best - 1e-10 {
                t_best = t;
                leave = Some((r, at_upper));
            } else if t < t_best + 1e-10 {
                if let Some((r0, _)) = leave {
                    let better = if self.bland {
                        self.basis[r] < self.basis[r0]
                    } else {
                        self.w[r].abs() > self.w[r0].abs()
                    };
                    if better {
                        t_best = t.min(t_best);
                        leave = Some((r, at_upper));
                    }
                } else {
                    t_best = t;
                    leave = Some((r, at_upper));
                }
            }
        }
        let t_own = if self.state[q] == VState::FreeZero {
            f64::INFINITY
        } else {
            self.ub[q] - self.lb[q]
        };

        if t_own <= t_best {
            if !t_own.is_finite() {
                return StepResult::Unbounded;
            }
            // Bound flip: entering variable traverses to its other bound.
            for r in 0..m {
                self.xb[r] -= dirf * t_own * self.w[r];
            }
            self.state[q] = if dir > 0 { VState::AtUpper } else { VState::AtLower };
            self.note_progress(t_own);
            return StepResult::Moved;
        }
        if !t_best.is_finite() {
            if phase1 {
                return StepResult::Unbounded;
            }
            return StepResult::Unbounded;
        }
        let (r, at_upper) = leave.expect("finite step requires a blocking row");

        // Update basic values and swap basis membership.
        for k in 0..m {
            self.xb[k] -= dirf * t_best * self.w[k];
        }
        let entering_val = match self.state[q] {
            VState::AtLower => self.lb[q] + dirf * t_best,
            VState::AtUpper => self.ub[q] + dirf * t_best,
            VState::FreeZero => dirf * t_best,
            VState::Basic => unreachable!(),
        };
        let old = self.basis[r];
        self.state[old] = if at_upper { VState::AtUpper } else { VState::AtLower };
        self.basis[r] = q;
        self.state[q] = VState::Basic;
        self.xb[r] = entering_val;

        // Product-form update of the inverse.
        let piv = self.w[r];
        let (before, rest) = self.binv.split_at_mut(r * m);
        let (prow, after) = rest.split_at_mut(m);
        for x in prow.iter_mut() {
            *x /= piv;
        }
        for (k, chunk) in before.chunks_exact_mut(m).enumerate() {
            let f = self.w[k];
            if f != 0.0 {
                for (c, p) in chunk.iter_mut().zip(prow.iter()) {
                    *c -= f * p;
                }
            }
        }
        for (k, chunk) in after.chunks_exact_mut(m).enumerate() {
            let f = self.w[r + 1 + k];
            if f != 0.0 {
                for (c, p) in chunk.iter_mut().zip(prow.iter()) {
                    *c -= f * p;
                }
            }
        }

        self.pivots_since_refactor += 1;
        if self.pivots_since_refactor >= REFACTOR_EVERY {
            self.refactorize();
        }
        self.note_progress(t_best);
        StepResult::Moved
    }

    fn note_progress(&mut self, step: f64) {
        if step > 1e-10 {
            self.degen_run = 0;
            self.bland = false;
        } else {
            self.degen_run += 1;
            if self.degen_run >= DEGEN_LIMIT {
                self.bland = true;
            }
        }
    }

    fn finish(&mut self, status: Status) -> LpOutcome {
        let nt = self.eng.n + self.eng.m;
        let mut x = vec![0.0; nt];
        for j in 0..nt {
            if self.state[j] != VState::Basic {
                x[j] = self.nonbasic_value(j);
            }
        }
        for (r, &v) in self.basis.iter().enumerate() {
            x[v] = self.xb[r];
        }
        let objective = match status {
            Status::Optimal | Status::TimeLimit => {
                self.eng.obj_const
                    + (0..self.eng.n).map(|j| self.eng.cost[j] * x[j]).sum::<f64>()
            }
            Status::Infeasible => f64::INFINITY,
            Status::Unbounded => f64::NEG_INFINITY,
            Status::GapLimit => unreachable!(),
        };
        let nb_upper = (0..nt).map(|j| self.state[j] == VState::AtUpper).collect();
        LpOutcome {
            status,
            objective,
            x: x[..self.eng.n].to_vec(),
            basis: Basis {
                vars: self.basis.iter().map(|&v| v as u32).collect(),
                nb_upper,
            },
            iterations: self.iters,
        }
    }
}

enum StepResult {
    Moved,
    NoDirection,
    Unbounded,
}

fn nonbasic_rest(lb: f64, ub: f64, prefer_upper: bool) -> VState {
    match (lb.is_finite(), ub.is_finite()) {
        (true, true) => {
            if prefer_upper {
                VState::AtUpper
            } else {
                VState::AtLower
            }
        }
        (true, false) => VState::AtLower,
        (false, true) => VState::AtUpper,
        (false, false) => VState::FreeZero,
    }
}

/// Tighten variable bounds from singleton rows (the only node preprocessing).
pub(crate) fn singleton_tighten(model: &MilpModel, lb: &mut [f64], ub: &mut [f64]) -> bool {
    for row in &model.rows {
        if row.terms.len() != 1 {
            continue;
        }
        let (v, c) = row.terms[0];
        if c.abs() < 1e-12 {
            continue;
        }
        let r = row.rhs / c;
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        match (row.sense, c > 0.0) {
            (Sense::Le, true) | (Sense::Ge, false) => hi = r,
            (Sense::Le, false) | (Sense::Ge, true) => lo = r,
            (Sense::Eq, _) => {
                lo = r;
                hi = r;
            }
        }
        lb[v] = lb[v].max(lo);
        ub[v] = ub[v].min(hi);
        if lb[v] > ub[v] + 1e-9 {
            return false;
        }
    }
    true
}

/// Solve the LP relaxation of `model`, with optional bound overrides.
pub(crate) fn solve_relaxation(
    model: &MilpModel,
    bounds: Option<(&[f64], &[f64])>,
) -> super::MilpSolution {
    let eng = LpEngine::new(model);
    let (mut lb, mut ub): (Vec<f64>, Vec<f64>) = match bounds {
        Some((l, u)) => (l.to_vec(), u.to_vec()),
        None => (
            model.vars.iter().map(|v| v.lb).collect(),
            model.vars.iter().map(|v| v.ub).collect(),
        ),
    };
    if !singleton_tighten(model, &mut lb, &mut ub) {
        return super::MilpSolution {
            status: Status::Infeasible,
            objective: f64::INFINITY,
            x: model.vars.iter().map(|v| v.lb.max(0.0).min(v.ub)).collect(),
            bound: f64::INFINITY,
            nodes: 1,
            iterations: 0,
        };
    }
    let out = eng.solve(&lb, &ub, None);
    super::MilpSolution {
        status: out.status,
        objective: out.objective,
        x: out.x,
        bound: out.objective,
        nodes: 1,
        iterations: out.iterations,
    }
}

pub(crate) use self::LpEngine as Engine;
