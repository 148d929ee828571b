//! Best-bound branch and bound over binary variables.
//!
//! Node selection is best-first on the parent LP bound; from each selected
//! node the search plunges depth-first, diving on the child that matches the
//! rounded fractional value to find incumbents early. Branching picks the
//! most fractional binary, ties broken by lowest variable index so runs are
//! deterministic. Child LPs warm-start from the parent basis.

use super::simplex::{singleton_tighten, Basis, Engine};
use super::{MilpModel, MilpSolution, MipOptions, Status, FEAS_TOL, INT_TOL};
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

struct Node {
    parent: usize,
    branch_var: usize,
    fix_to: u8,
    /// LP objective of the parent (a valid lower bound for this node).
    bound: f64,
    basis: Option<Basis>,
}

const ROOT: usize = usize::MAX;

struct HeapEntry {
    bound: f64,
    seq: u64,
    node: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.bound == other.bound && self.seq == other.seq
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; invert so the smallest bound pops first,
        // ties resolved by insertion order.
        other
            .bound
            .partial_cmp(&self.bound)
            .unwrap_or(Ordering::Equal)
            .then(other.seq.cmp(&self.seq))
    }
}

pub(crate) fn solve_mip(model: &MilpModel, opts: &MipOptions) -> MilpSolution {
    let start = Instant::now();
    let binaries: Vec<usize> = model
        .vars
        .iter()
        .enumerate()
        .filter(|(_, v)| v.binary)
        .map(|(i, _)| i)
        .collect();
    if binaries.is_empty() {
        return super::simplex::solve_relaxation(model, None);
    }

    let mut base_lb: Vec<f64> = model.vars.iter().map(|v| v.lb).collect();
    let mut base_ub: Vec<f64> = model.vars.iter().map(|v| v.ub).collect();
    let fallback_x: Vec<f64> = model
        .vars
        .iter()
        .map(|v| v.lb.max(0.0).min(v.ub))
        .collect();
    if !singleton_tighten(model, &mut base_lb, &mut base_ub) {
        return MilpSolution {
            status: Status::Infeasible,
            objective: f64::INFINITY,
            x: fallback_x,
            bound: f64::INFINITY,
            nodes: 0,
            iterations: 0,
        };
    }

    let engine = Engine::new(model);

    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    if let Some(hint) = &opts.incumbent_hint {
        if hint.len() == model.vars.len()
            && model.max_violation(hint) <= FEAS_TOL
            && binaries
                .iter()
                .all(|&b| (hint[b] - hint[b].round()).abs() <= INT_TOL)
            && (0..model.vars.len()).all(|j| {
                hint[j] >= base_lb[j] - 1e-9 && hint[j] <= base_ub[j] + 1e-9
            })
        {
            incumbent = Some((model.objective_value(hint), hint.clone()));
        }
    }

    let mut arena: Vec<Node> = vec![Node {
        parent: ROOT,
        branch_var: 0,
        fix_to: 0,
        bound: f64::NEG_INFINITY,
        basis: None,
    }];
    let mut heap: BinaryHeap<HeapEntry> = BinaryHeap::new();
    heap.push(HeapEntry {
        bound: f64::NEG_INFINITY,
        seq: 0,
        node: 0,
    });
    let mut seq = 1u64;
    let mut nodes = 0u64;
    let mut iterations = 0u64;
    let mut best_bound = f64::NEG_INFINITY;
    let mut lb = vec![0.0; model.vars.len()];
    let mut ub = vec![0.0; model.vars.len()];

    while let Some(entry) = heap.pop() {
        best_bound = entry.bound;
        if let Some((inc_obj, inc_x)) = &incumbent {
            if best_bound >= inc_obj - 1e-9 {
                // Remaining nodes cannot improve on the incumbent.
                best_bound = *inc_obj;
                break;
            }
            if inc_obj - best_bound <= opts.gap * inc_obj.abs().max(1.0) {
                return MilpSolution {
                    status: Status::GapLimit,
                    objective: *inc_obj,
                    x: inc_x.clone(),
                    bound: best_bound,
                    nodes,
                    iterations,
                };
            }
        }

        // Depth-first plunge from the selected node.
        let mut current = entry.node;
        let mut warm: Option<Basis> = arena[current].basis.take();
        loop {
            if let Some(limit) = opts.time_limit {
                if start.elapsed() > limit {
                    let bound = best_bound;
                    return match incumbent {
                        Some((obj, x)) => MilpSolution {
                            status: Status::TimeLimit,
                            objective: obj,
                            x,
                            bound,
                            nodes,
                            iterations,
                        },
                        None => MilpSolution {
                            status: Status::TimeLimit,
                            objective: f64::INFINITY,
                            x: fallback_x,
                            bound,
                            nodes,
                            iterations,
                        },
                    };
                }
            }
            // Reconstruct bounds along the ancestor chain.
            lb.copy_from_slice(&base_lb);
            ub.copy_from_slice(&base_ub);
            let mut walk = current;
            while walk != 0 {
                let n = &arena[walk];
                let v = n.branch_var;
                let f = n.fix_to as f64;
                lb[v] = f;
                ub[v] = f;
                walk = n.parent;
            }

            nodes += 1;
            let mut out = engine.solve(&lb, &ub, warm.as_ref());
            if out.status == Status::TimeLimit {
                // Stalled simplex: retry cold once before giving up.
                out = engine.solve(&lb, &ub, None);
            }
            iterations += out.iterations;
            match out.status {
                Status::Infeasible => break,
                Status::Unbounded => {
                    return MilpSolution {
                        status: Status::Unbounded,
                        objective: f64::NEG_INFINITY,
                        x: out.x,
                        bound: f64::NEG_INFINITY,
                        nodes,
                        iterations,
                    }
                }
                Status::TimeLimit => {
                    let (objective, x) = match &incumbent {
                        Some((o, x)) => (*o, x.clone()),
                        None => (f64::INFINITY, fallback_x.clone()),
                    };
                    return MilpSolution {
                        status: Status::TimeLimit,
                        objective,
                        x,
                        bound: best_bound,
                        nodes,
                        iterations,
                    };
                }
                Status::Optimal => {}
                Status::GapLimit => unreachable!(),
            }
            if let Some((inc_obj, _)) = &incumbent {
                if out.objective >= inc_obj - 1e-9 {
                    break; // bound prune
                }
            }
            // Most fractional binary, lowest index on ties.
            let mut pick: Option<(usize, f64)> = None;
            for &b in &binaries {
                let frac = (out.x[b] - out.x[b].round()).abs();
                if frac > INT_TOL {
                    let score = (out.x[b] - out.x[b].floor() - 0.5).abs();
                    match pick {
                        Some((_, best)) if score >= best => {}
                        _ => pick = Some((b, score)),
                    }
                }
            }
            let Some((bvar, _)) = pick else {
                // Integral: new incumbent.
                let obj = out.objective;
                let better = match &incumbent {
                    Some((cur, _)) => obj < cur - 1e-12,
                    None => true,
                };
                if better {
                    incumbent = Some((obj, out.x.clone()));
                }
                break;
            };
            let frac_val = out.x[bvar];
            let prefer = if frac_val >= 0.5 { 1u8 } else { 0u8 };
            let node_bound = out.objective;
            // Sibling goes to the frontier; dive continues on the preferred side.
            arena.push(Node {
                parent: current,
                branch_var: bvar,
                fix_to: 1 - prefer,
                bound: node_bound,
                basis: Some(out.basis.clone()),
            });
            heap.push(HeapEntry {
                bound: node_bound,
                seq,
                node: arena.len() - 1,
            });
            seq += 1;
            arena.push(Node {
                parent: current,
                branch_var: bvar,
                fix_to: prefer,
                bound: node_bound,
                basis: None,
            });
            current = arena.len() - 1;
            warm = Some(out.basis);
            continue;
        }
        if incumbent.is_none() && heap.is_empty() {
            break 'outer;
        }
    }

    match incumbent {
        Some((obj, x)) => {
            debug_assert!(model.max_violation(&x) <= 1e-5);
            MilpSolution {
                status: Status::Optimal,
                objective: obj,
                x,
                bound: if best_bound.is_finite() { obj.min(best_bound.max(obj - 0.0)) } else { obj },
                nodes,
                iterations,
            }
        }
        None => MilpSolution {
            status: Status::Infeasible,
            objective: f64::INFINITY,
            x: fallback_x,
            bound: f64::INFINITY,
            nodes,
            iterations,
        },
    }
}
