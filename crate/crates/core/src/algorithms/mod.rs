//! Solution strategies: exact branch-and-bound, the backhaul upper bound, and
//! the two relax-and-penalize heuristics (full beamformers and gain-only).

mod beams;
mod bnb;
mod init;
mod mm;
mod repair;

pub use beams::predesign_beams;
pub use bnb::{branch_and_bound, solve_bnc_misocp, solve_upper_bound, BnbOutcome, BnbStatus, BranchNode, UpperBound};
pub use init::{find_initial_point, InitialPoint};
pub use mm::{solve_rnp1, solve_rnp2};
pub use repair::round_and_repair;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::channel::ChannelSet;
use crate::conic::{self, SolveReport, SolverOptions};
use crate::formulation::{
    build_program, compute_bigm, extract_point, BigMConstants, BinaryState, BuildOptions, LayoutKind, Objective,
    PredesignedBeams, VariableLayout,
};
use crate::system::{validate_config, SystemConfig};
use crate::verify::{access_throughput, backhaul_throughput, weighted_rate, Allocation};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BranchingRule {
    /// Entry closest to 1/2; ties by family (α, β, κ) then index.
    MostFractional,
}

/// Which relaxation the heuristics work on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitMode {
    /// Full beamformers.
    Full,
    /// Gains of predesigned beams.
    Gains,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlgoParams {
    /// Majorization iteration cap.
    pub max_iterations: usize,
    /// Stop (or escalate) when the penalized objective improves by at most this fraction.
    pub improvement_tol: f64,
    /// Initial penalty weight for every family; `None` uses `10⁻²·ω_max·R_max·L·U`.
    pub lambda_init: Option<f64>,
    pub lambda_growth: f64,
    /// Upper limit on the penalty weight as a multiple of its initial value.
    pub lambda_cap_factor: f64,
    /// Binary MSE below which the relaxed binaries count as converged.
    pub binary_tol: f64,
    pub node_limit: usize,
    pub gap_tol: f64,
    pub branching: BranchingRule,
    /// Random binary samples tried when looking for a starting point.
    pub init_attempts: usize,
    /// Feasible samples to collect before keeping the best one.
    pub init_feasible_target: usize,
    /// Demote/promote rounds in the repair step; `None` uses B.
    pub repair_rounds: Option<usize>,
    pub zf_epsilon: f64,
    pub seed: u64,
    pub solver: SolverOptions,
}

impl Default for AlgoParams {
    fn default() -> Self {
        Self {
            max_iterations: 30,
            improvement_tol: 1e-4,
            lambda_init: None,
            lambda_growth: 5.0,
            lambda_cap_factor: 1e4,
            binary_tol: 1e-4,
            node_limit: 20_000,
            gap_tol: 1e-4,
            branching: BranchingRule::MostFractional,
            init_attempts: 100,
            init_feasible_target: 1,
            repair_rounds: None,
            zf_epsilon: 1e-3,
            seed: 0,
            solver: SolverOptions::default(),
        }
    }
}

impl AlgoParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_iterations > 0
            && self.improvement_tol > 0.0
            && self.lambda_init.is_none_or(|l| l > 0.0)
            && self.lambda_growth > 1.0
            && self.lambda_cap_factor >= 1.0
            && self.binary_tol > 0.0
            && self.node_limit > 0
            && self.gap_tol > 0.0
            && self.init_attempts > 0
            && self.init_feasible_target > 0
            && self.zf_epsilon > 0.0
            && self.solver.feas_tol > 0.0
            && self.solver.gap_tol > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig("algorithm parameters must be positive (growth > 1)".into()))
        }
    }

    /// Penalty weight used when `lambda_init` is not set.
    pub fn default_lambda(cfg: &SystemConfig) -> f64 {
        let wmax = cfg.weight_vector().into_iter().fold(0.0, f64::max);
        1e-2 * wmax * cfg.ue_rates.max_rate() * cfg.num_ues() as f64
    }

    pub fn initial_lambda(&self, cfg: &SystemConfig) -> f64 {
        self.lambda_init.unwrap_or_else(|| Self::default_lambda(cfg))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "BnC")]
    Bnc,
    #[serde(rename = "RnP1")]
    Rnp1,
    #[serde(rename = "RnP2")]
    Rnp2,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Bnc => "BnC",
            Algorithm::Rnp1 => "RnP1",
            Algorithm::Rnp2 => "RnP2",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolutionStatus {
    /// Branch-and-bound closed the gap.
    Optimal,
    /// A verified feasible allocation (heuristics, or BnB stopped at its node limit with an incumbent).
    Feasible,
    /// The search proved that no allocation exists.
    Infeasible,
    /// No allocation was produced.
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Penalized objective `R − Σλ f(x)` at the new iterate.
    pub objective: f64,
    /// Value of the linearized surrogate returned by the solver.
    pub surrogate: f64,
    pub binary_mse: f64,
    pub lambda: f64,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub conic_solves: usize,
    pub nodes: usize,
    pub repairs: usize,
    pub num_vars: usize,
    pub wall_time_s: f64,
    /// Branch-and-bound only: best remaining bound when the search stopped.
    pub bound: Option<f64>,
    /// Branch-and-bound only: nodes whose bound exceeded their parent's beyond tolerance.
    pub bound_violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RrmSolution {
    pub algorithm: Algorithm,
    pub status: SolutionStatus,
    pub allocation: Option<Allocation>,
    /// `(t_l, v_{b,u})` for the gain-only variant.
    pub gains: Option<(Vec<Complex64>, Vec<Complex64>)>,
    /// Weighted sum rate (bps/Hz).
    pub objective: f64,
    pub access_throughput_bps: f64,
    pub backhaul_throughput_bps: f64,
    pub trace: Vec<IterationRecord>,
    pub stats: SolveStats,
    pub message: Option<String>,
}

impl RrmSolution {
    pub fn has_allocation(&self) -> bool {
        self.allocation.is_some() && matches!(self.status, SolutionStatus::Optimal | SolutionStatus::Feasible)
    }

    fn empty(algorithm: Algorithm, status: SolutionStatus, message: impl Into<String>) -> Self {
        Self {
            algorithm,
            status,
            allocation: None,
            gains: None,
            objective: 0.0,
            access_throughput_bps: 0.0,
            backhaul_throughput_bps: 0.0,
            trace: vec![],
            stats: SolveStats::default(),
            message: Some(message.into()),
        }
    }

    fn with_allocation(algorithm: Algorithm, status: SolutionStatus, cfg: &SystemConfig, alloc: Allocation) -> Self {
        Self {
            algorithm,
            status,
            objective: weighted_rate(cfg, &alloc.binaries),
            access_throughput_bps: access_throughput(cfg, &alloc.binaries),
            backhaul_throughput_bps: backhaul_throughput(cfg, &alloc.binaries),
            allocation: Some(alloc),
            gains: None,
            trace: vec![],
            stats: SolveStats::default(),
            message: None,
        }
    }

    /// Writes the per-iteration trace as CSV.
    pub fn write_trace_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["iteration", "objective", "surrogate", "binary_mse", "lambda", "wall_time_s"])?;
        for r in &self.trace {
            w.write_record([
                r.iteration.to_string(),
                format!("{:e}", r.objective),
                format!("{:e}", r.surrogate),
                format!("{:e}", r.binary_mse),
                format!("{:e}", r.lambda),
                format!("{:e}", r.wall_time_s),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Problem data shared by every solve on one channel realization.
pub(crate) struct Instance<'a> {
    pub cfg: &'a SystemConfig,
    pub channels: &'a ChannelSet,
    pub bigm: BigMConstants,
    pub beams: Option<&'a PredesignedBeams>,
    pub params: &'a AlgoParams,
}

impl<'a> Instance<'a> {
    pub fn new(
        cfg: &'a SystemConfig,
        channels: &'a ChannelSet,
        beams: Option<&'a PredesignedBeams>,
        params: &'a AlgoParams,
    ) -> Result<Self> {
        params.validate()?;
        let report = validate_config(cfg);
        // Power values are not required to be positive here: zero power is a
        // legitimate (infeasible) instance rather than a malformed one.
        let structural: Vec<_> =
            report.violations.iter().filter(|v| !v.field.ends_with("power_w")).map(|v| v.to_owned()).collect();
        if !structural.is_empty() {
            let msg = structural.iter().map(|v| format!("{}: {}", v.field, v.message)).collect::<Vec<_>>().join("; ");
            return Err(Error::InvalidConfig(msg));
        }
        if !channels.matches(cfg) {
            return Err(Error::DimensionMismatch("channel set does not match the configuration".into()));
        }
        Ok(Self { cfg, channels, bigm: compute_bigm(channels, cfg), beams, params })
    }

    pub fn kind(&self, mode: InitMode) -> LayoutKind {
        match mode {
            InitMode::Full => LayoutKind::Full,
            InitMode::Gains => LayoutKind::Gains,
        }
    }

    pub fn build(
        &self,
        mode: InitMode,
        state: &BinaryState,
        objective: Objective,
    ) -> Result<(conic::ConicProgram, VariableLayout)> {
        build_program(
            self.cfg,
            self.channels,
            &self.bigm,
            self.kind(mode),
            self.beams,
            state,
            objective,
            BuildOptions::default(),
        )
    }

    pub fn solve(&self, program: &conic::ConicProgram) -> SolveReport {
        conic::solve(program, &self.params.solver)
    }

    /// Whether the MBS can deliver the state's cluster rates (access side ignored).
    pub fn backhaul_feasible(&self, state: &BinaryState) -> Result<bool> {
        let (program, _) = build_program(
            self.cfg,
            self.channels,
            &self.bigm,
            LayoutKind::Backhaul,
            None,
            &state.rounded(),
            Objective::BackhaulRate,
            BuildOptions::default(),
        )?;
        Ok(self.solve(&program).is_optimal())
    }

    /// Fixed-binary continuous solve; `Some` when feasible.
    pub fn solve_fixed(
        &self,
        mode: InitMode,
        state: &BinaryState,
    ) -> Result<Option<(Allocation, Option<(Vec<Complex64>, Vec<Complex64>)>)>> {
        let pinned = state.rounded();
        let (program, lay) = self.build(mode, &pinned, Objective::WeightedRate)?;
        let report = self.solve(&program);
        if !report.is_optimal() {
            return Ok(None);
        }
        let pt = extract_point(self.cfg, &lay, self.beams, &report.x);
        let alloc = Allocation { multicast: pt.multicast, unicast: pt.unicast, power: pt.power, binaries: pinned };
        Ok(Some((alloc, pt.gains)))
    }
}
