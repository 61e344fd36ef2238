//! Default backend: the Clarabel interior-point solver.
//!
//! Shared expressions become auxiliary columns tied to the original variables
//! by equality rows, which keeps the KKT system sparse when many cone entries
//! reuse the same dense inner products.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use std::time::Instant;

use super::{ConicProgram, LinExpr, Sense, SolveReport, SolveStatus, SolverOptions};

struct Rows {
    i: Vec<usize>,
    j: Vec<usize>,
    v: Vec<f64>,
    b: Vec<f64>,
}

impl Rows {
    fn push(&mut self, entries: impl IntoIterator<Item = (usize, f64)>, rhs: f64) {
        let r = self.b.len();
        for (col, val) in entries {
            if val != 0.0 {
                self.i.push(r);
                self.j.push(col);
                self.v.push(val);
            }
        }
        self.b.push(rhs);
    }

    fn len(&self) -> usize {
        self.b.len()
    }
}

fn expr_entries(e: &LinExpr, n: usize, sign: f64) -> impl Iterator<Item = (usize, f64)> + '_ {
    e.terms
        .iter()
        .map(move |&(i, c)| (i, sign * c))
        .chain(e.shared.iter().map(move |&(k, c)| (n + k, sign * c)))
}

/// Solves `p` (maximization) and reports status, point and residuals.
pub fn solve(p: &ConicProgram, opts: &SolverOptions) -> SolveReport {
    let start = Instant::now();
    let n = p.num_vars;
    let total = n + p.expressions.len();
    let mut rows = Rows { i: vec![], j: vec![], v: vec![], b: vec![] };
    let mut cones = Vec::new();

    // Zero cone: shared-expression definitions, equalities, pinned variables.
    for (k, e) in p.expressions.iter().enumerate() {
        rows.push(e.iter().copied().chain([(n + k, -1.0)]), 0.0);
    }
    for c in p.constraints.iter().filter(|c| c.sense == Sense::Eq) {
        rows.push(expr_entries(&c.expr, n, 1.0), c.rhs - c.expr.constant);
    }
    for i in 0..n {
        if p.lower[i] == p.upper[i] {
            rows.push([(i, 1.0)], p.lower[i]);
        }
    }
    let zero = rows.len();
    if zero > 0 {
        cones.push(SupportedConeT::ZeroConeT(zero));
    }

    // Nonnegative cone: inequality rows and one-sided bounds.
    for c in p.constraints.iter().filter(|c| c.sense == Sense::Le) {
        rows.push(expr_entries(&c.expr, n, 1.0), c.rhs - c.expr.constant);
    }
    for i in 0..n {
        if p.lower[i] == p.upper[i] {
            continue;
        }
        if p.lower[i].is_finite() {
            rows.push([(i, -1.0)], -p.lower[i]);
        }
        if p.upper[i].is_finite() {
            rows.push([(i, 1.0)], p.upper[i]);
        }
    }
    let nonneg = rows.len() - zero;
    if nonneg > 0 {
        cones.push(SupportedConeT::NonnegativeConeT(nonneg));
    }

    for k in &p.cones {
        rows.push(expr_entries(&k.head, n, -1.0), k.head.constant);
        for e in &k.body {
            rows.push(expr_entries(e, n, -1.0), e.constant);
        }
        cones.push(SupportedConeT::SecondOrderConeT(k.body.len() + 1));
    }

    let mut q = vec![0.0; total];
    for (i, c) in p.objective.iter().enumerate() {
        q[i] = -c;
    }

    let failure = |status: SolveStatus| SolveReport {
        status,
        x: vec![0.0; n],
        objective: f64::NAN,
        primal_residual: f64::INFINITY,
        dual_residual: f64::INFINITY,
        gap: f64::INFINITY,
        iterations: 0,
        wall_time_s: start.elapsed().as_secs_f64(),
        reduced_accuracy: false,
    };

    if total == 0 {
        let x: Vec<f64> = vec![];
        let infeasible = rows.b.iter().take(zero).any(|b| *b != 0.0)
            || rows.b.iter().skip(zero).take(nonneg).any(|b| *b < 0.0);
        if infeasible {
            return failure(SolveStatus::Infeasible);
        }
        let r = p.residuals(&x);
        return SolveReport {
            status: SolveStatus::Optimal,
            objective: p.objective_value(&x),
            x,
            primal_residual: r.max(),
            dual_residual: 0.0,
            gap: 0.0,
            iterations: 0,
            wall_time_s: start.elapsed().as_secs_f64(),
            reduced_accuracy: false,
        };
    }

    let m = rows.len();
    let a = CscMatrix::new_from_triplets(m, total, rows.i, rows.j, rows.v);
    let pmat = CscMatrix::zeros((total, total));
    let settings = DefaultSettingsBuilder::default()
        .verbose(opts.verbose)
        .max_iter(opts.max_iter)
        .tol_feas(opts.feas_tol)
        .tol_gap_abs(opts.gap_tol)
        .tol_gap_rel(opts.gap_tol)
        .presolve_enable(false)
        .max_threads(1)
        .build()
        .expect("solver settings");
    let mut solver = match DefaultSolver::new(&pmat, &q, &a, &rows.b, &cones, settings) {
        Ok(s) => s,
        Err(_) => return failure(SolveStatus::NumericalFailure),
    };
    solver.solve();

    let status = match solver.solution.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => SolveStatus::Optimal,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => SolveStatus::Infeasible,
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => SolveStatus::Unbounded,
        SolverStatus::MaxIterations | SolverStatus::MaxTime => SolveStatus::IterationLimit,
        _ => SolveStatus::NumericalFailure,
    };
    let x: Vec<f64> = solver.solution.x[..n].to_vec();
    let info = &solver.info;
    let r = p.residuals(&x);
    SolveReport {
        status,
        objective: p.objective_value(&x),
        x,
        primal_residual: r.max(),
        dual_residual: info.res_dual,
        gap: info.gap_rel,
        iterations: info.iterations,
        wall_time_s: start.elapsed().as_secs_f64(),
        reduced_accuracy: solver.solution.status == SolverStatus::AlmostSolved,
    }
}
