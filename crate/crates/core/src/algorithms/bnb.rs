use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{find_initial_point, AlgoParams, Algorithm, BranchingRule, InitMode, Instance, RrmSolution, SolutionStatus, SolveStats};
use crate::channel::ChannelSet;
use crate::conic::{ConicProgram, SolveStatus};
use crate::formulation::{extract_point, BinaryState, Fix, LayoutKind, Objective};
use crate::system::SystemConfig;
use crate::verify::Allocation;
use crate::Result;

/// Distance from {0, 1} below which a relaxed binary counts as integral.
const INTEGRAL_TOL: f64 = 1e-6;
/// Relative slack allowed before a child bound counts as exceeding its parent's.
const BOUND_TOL: f64 = 1e-6;

/// An open node: pins over the program's binary columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchNode {
    pub fixes: Vec<Fix>,
    /// Relaxation value of the parent (`+∞` at the root).
    pub parent_bound: f64,
    pub depth: usize,
}

impl BranchNode {
    fn pins(&self, binaries: &[usize]) -> Vec<(usize, f64)> {
        self.fixes
            .iter()
            .zip(binaries)
            .filter_map(|(f, &c)| match f {
                Fix::Free => None,
                Fix::Zero => Some((c, 0.0)),
                Fix::One => Some((c, 1.0)),
            })
            .collect()
    }

    fn child(&self, pos: usize, fix: Fix, bound: f64) -> Self {
        let mut fixes = self.fixes.clone();
        fixes[pos] = fix;
        Self { fixes, parent_bound: bound, depth: self.depth + 1 }
    }
}

struct Queued {
    bound: f64,
    seq: usize,
    node: BranchNode,
}

impl PartialEq for Queued {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Queued {
    // Highest bound first, then deepest, then oldest.
    fn cmp(&self, o: &Self) -> Ordering {
        self.bound
            .total_cmp(&o.bound)
            .then(self.node.depth.cmp(&o.node.depth))
            .then(o.seq.cmp(&self.seq))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BnbStatus {
    /// Relative gap closed to the tolerance.
    Optimal,
    /// Node limit hit before the gap closed.
    NodeLimit,
    /// Every node was infeasible.
    Infeasible,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BnbOutcome {
    pub status: BnbStatus,
    /// Objective and primal point of the best integral solution.
    pub incumbent: Option<(f64, Vec<f64>)>,
    /// Largest bound among unexplored nodes (or the incumbent when none remain).
    pub bound: f64,
    pub nodes: usize,
    pub solves: usize,
    /// Nodes whose relaxation value exceeded the parent's beyond tolerance.
    pub bound_violations: usize,
    /// Nodes whose relaxation ended neither optimal nor infeasible.
    pub numerical_failures: usize,
}

fn branch_position(x: &[f64], binaries: &[usize], fixes: &[Fix], rule: BranchingRule) -> Option<usize> {
    match rule {
        BranchingRule::MostFractional => {
            let mut best: Option<(usize, f64)> = None;
            for (pos, &c) in binaries.iter().enumerate() {
                if fixes[pos] != Fix::Free {
                    continue;
                }
                let frac = x[c].clamp(0.0, 1.0);
                let dist = frac.min(1.0 - frac);
                if dist <= INTEGRAL_TOL {
                    continue;
                }
                if best.is_none_or(|(_, d)| dist > d) {
                    best = Some((pos, dist));
                }
            }
            best.map(|(p, _)| p)
        }
    }
}

/// Best-first branch-and-bound over the listed binary columns of a maximization program.
///
/// Integral nodes are re-solved with every binary pinned to its rounded value;
/// that solve's value becomes the incumbent candidate. `start` is an optional
/// known feasible point (objective, primal vector) used as the first incumbent.
pub fn branch_and_bound(
    root: &ConicProgram,
    binaries: &[usize],
    params: &AlgoParams,
    start: Option<(f64, Vec<f64>)>,
) -> BnbOutcome {
    let gap = params.gap_tol;
    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    heap.push(Queued {
        bound: f64::INFINITY,
        seq,
        node: BranchNode { fixes: vec![Fix::Free; binaries.len()], parent_bound: f64::INFINITY, depth: 0 },
    });
    let mut out = BnbOutcome {
        status: BnbStatus::Infeasible,
        incumbent: start,
        bound: f64::NEG_INFINITY,
        nodes: 0,
        solves: 0,
        bound_violations: 0,
        numerical_failures: 0,
    };
    let prunable = |bound: f64, inc: &Option<(f64, Vec<f64>)>| match inc {
        Some((v, _)) => bound <= v + gap * v.abs(),
        None => false,
    };

    while let Some(q) = heap.pop() {
        if prunable(q.bound, &out.incumbent) {
            // Best-first: every remaining node is dominated as well.
            heap.clear();
            break;
        }
        if out.nodes >= params.node_limit {
            heap.push(q);
            break;
        }
        out.nodes += 1;
        if out.nodes % 100 == 0 {
            log::debug!(
                "bnb: {} nodes, open {}, bound {:.6}, incumbent {:?}",
                out.nodes,
                heap.len(),
                q.bound,
                out.incumbent.as_ref().map(|(v, _)| *v)
            );
        }
        let node = q.node;
        let program = root.pinned(&node.pins(binaries));
        let report = crate::conic::solve(&program, &params.solver);
        out.solves += 1;
        match report.status {
            SolveStatus::Infeasible => continue,
            SolveStatus::Optimal => {}
            _ => {
                // No usable point: split on the first free binary and keep the parent's bound.
                out.numerical_failures += 1;
                if let Some(pos) = node.fixes.iter().position(|f| *f == Fix::Free) {
                    for fix in [Fix::One, Fix::Zero] {
                        seq += 1;
                        heap.push(Queued { bound: q.bound, seq, node: node.child(pos, fix, q.bound) });
                    }
                }
                continue;
            }
        }
        let bound = report.objective;
        if bound > node.parent_bound + BOUND_TOL * node.parent_bound.abs().max(1.0) {
            out.bound_violations += 1;
        }
        if prunable(bound, &out.incumbent) {
            continue;
        }
        match branch_position(&report.x, binaries, &node.fixes, params.branching) {
            Some(pos) => {
                for fix in [Fix::One, Fix::Zero] {
                    seq += 1;
                    heap.push(Queued { bound, seq, node: node.child(pos, fix, bound) });
                }
            }
            None => {
                let pins: Vec<(usize, f64)> =
                    binaries.iter().map(|&c| (c, if report.x[c] > 0.5 { 1.0 } else { 0.0 })).collect();
                let fixed = crate::conic::solve(&root.pinned(&pins), &params.solver);
                out.solves += 1;
                if fixed.is_optimal() && out.incumbent.as_ref().is_none_or(|(v, _)| fixed.objective > *v) {
                    out.incumbent = Some((fixed.objective, fixed.x));
                }
            }
        }
    }

    let open = heap.iter().map(|q| q.bound).fold(f64::NEG_INFINITY, f64::max);
    let inc = out.incumbent.as_ref().map(|(v, _)| *v);
    out.bound = match inc {
        Some(v) => open.max(v),
        None => open,
    };
    out.status = if heap.is_empty() || inc.is_some_and(|v| out.bound <= v + gap * v.abs()) {
        if inc.is_some() { BnbStatus::Optimal } else { BnbStatus::Infeasible }
    } else {
        BnbStatus::NodeLimit
    };
    out
}

/// Exact solution of the full mixed-integer program by branch-and-bound.
pub fn solve_bnc_misocp(cfg: &SystemConfig, channels: &ChannelSet, params: &AlgoParams) -> Result<RrmSolution> {
    let start = Instant::now();
    let inst = Instance::new(cfg, channels, None, params)?;
    let (root, lay) = inst.build(InitMode::Full, &BinaryState::free(cfg), Objective::WeightedRate)?;
    let binaries = lay.binary_columns();
    // A random feasible assignment gives the search an incumbent to prune against.
    let mut start_solves = 0;
    let start_point = find_initial_point(cfg, channels, params, InitMode::Full, None).ok().and_then(|init| {
        start_solves = init.solves + 1;
        let pins: Vec<(usize, f64)> = binaries.iter().copied().zip(init.state.values()).collect();
        let r = inst.solve(&root.pinned(&pins));
        r.is_optimal().then_some((r.objective, r.x))
    });
    let mut res = branch_and_bound(&root, &binaries, params, start_point);
    res.solves += start_solves;

    let mut sol = match &res.incumbent {
        Some((_, x)) => {
            let pt = extract_point(cfg, &lay, None, x);
            let alloc = Allocation { multicast: pt.multicast, unicast: pt.unicast, power: pt.power, binaries: pt.state.rounded() };
            let status = if res.status == BnbStatus::Optimal { SolutionStatus::Optimal } else { SolutionStatus::Feasible };
            let mut s = RrmSolution::with_allocation(Algorithm::Bnc, status, cfg, alloc);
            if res.status == BnbStatus::NodeLimit {
                s.message = Some(format!("node limit reached; bound {:.6e}", res.bound));
            }
            s
        }
        None => match res.status {
            BnbStatus::Infeasible => RrmSolution::empty(Algorithm::Bnc, SolutionStatus::Infeasible, "no feasible allocation"),
            _ => RrmSolution::empty(Algorithm::Bnc, SolutionStatus::Failed, "node limit reached without an incumbent"),
        },
    };
    sol.stats = SolveStats {
        iterations: 0,
        conic_solves: res.solves,
        nodes: res.nodes,
        repairs: 0,
        num_vars: root.num_vars,
        wall_time_s: start.elapsed().as_secs_f64(),
        bound: Some(res.bound),
        bound_violations: res.bound_violations,
    };
    Ok(sol)
}

/// Result of the backhaul-only bound program.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpperBound {
    pub status: SolutionStatus,
    /// `W_backhaul · Σ_l R^SBS_{j(l)}` in bps.
    pub throughput_bps: f64,
    /// Sum of selected cluster rates (bps/Hz).
    pub rate_sum: f64,
    pub multicast: Vec<Vec<Complex64>>,
    pub beta: Vec<f64>,
    /// Largest open bound when the search stopped, in bps.
    pub bound_bps: f64,
    pub nodes: usize,
    pub wall_time_s: f64,
}

/// Upper bound on access throughput: the best backhaul throughput alone.
pub fn solve_upper_bound(cfg: &SystemConfig, channels: &ChannelSet, params: &AlgoParams) -> Result<UpperBound> {
    let start = Instant::now();
    let inst = Instance::new(cfg, channels, None, params)?;
    let (root, lay) = crate::formulation::build_program(
        cfg,
        channels,
        &inst.bigm,
        LayoutKind::Backhaul,
        None,
        &BinaryState::free(cfg),
        Objective::BackhaulRate,
        Default::default(),
    )?;
    let res = branch_and_bound(&root, &lay.binary_columns(), params, None);
    let w = cfg.backhaul_bandwidth_hz;
    let mut ub = UpperBound {
        status: match res.status {
            BnbStatus::Optimal => SolutionStatus::Optimal,
            BnbStatus::NodeLimit if res.incumbent.is_some() => SolutionStatus::Feasible,
            BnbStatus::NodeLimit => SolutionStatus::Failed,
            BnbStatus::Infeasible => SolutionStatus::Infeasible,
        },
        throughput_bps: 0.0,
        rate_sum: 0.0,
        multicast: vec![],
        beta: vec![],
        bound_bps: res.bound * w,
        nodes: res.nodes,
        wall_time_s: 0.0,
    };
    if let Some((_, x)) = &res.incumbent {
        let pt = extract_point(cfg, &lay, None, x);
        let beta = pt.state.rounded().beta;
        let js = cfg.sbs_rates.len();
        ub.rate_sum = beta.iter().enumerate().map(|(i, b)| b * cfg.sbs_rates.rate(i % js)).sum();
        ub.throughput_bps = ub.rate_sum * w;
        ub.multicast = pt.multicast;
        ub.beta = beta;
    }
    ub.wall_time_s = start.elapsed().as_secs_f64();
    Ok(ub)
}
