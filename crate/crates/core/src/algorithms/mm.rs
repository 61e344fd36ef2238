use std::time::Instant;

use super::repair::ACCEPT_TOL;
use super::{
    find_initial_point, round_and_repair, AlgoParams, Algorithm, InitMode, InitialPoint, Instance, IterationRecord,
    RrmSolution, SolutionStatus,
};
use crate::channel::ChannelSet;
use crate::formulation::{extract_point, Objective, Penalties, PredesignedBeams};
use crate::system::SystemConfig;
use crate::verify::{check_feasibility_pprime, weighted_rate};
use crate::{Error, Result};

/// Majorization-minimization over the penalized relaxation, then rounding.
///
/// Each step maximizes the weighted rate minus the penalty with its concave
/// part linearized at the previous iterate. A step that no longer improves
/// while binaries are still fractional multiplies the penalty weights.
fn run(
    cfg: &SystemConfig,
    channels: &ChannelSet,
    params: &AlgoParams,
    mode: InitMode,
    beams: Option<&PredesignedBeams>,
) -> Result<RrmSolution> {
    let start = Instant::now();
    let algorithm = match mode {
        InitMode::Full => Algorithm::Rnp1,
        InitMode::Gains => Algorithm::Rnp2,
    };
    let inst = Instance::new(cfg, channels, beams, params)?;
    let init = find_initial_point(cfg, channels, params, mode, beams)?;
    let mut solves = init.solves;

    let lambda0 = params.initial_lambda(cfg);
    let lambda_cap = lambda0 * params.lambda_cap_factor;
    let mut penalties = Penalties::uniform(lambda0);
    let mut reference = init.state.unpinned();
    let mut prev = init.objective;
    let mut trace = vec![IterationRecord {
        iteration: 0,
        objective: prev,
        surrogate: prev,
        binary_mse: reference.binary_mse(),
        lambda: lambda0,
        wall_time_s: start.elapsed().as_secs_f64(),
    }];
    let mut num_vars = 0;
    let mut failure = None;

    for it in 1..=params.max_iterations {
        let (program, lay) = inst.build(mode, &reference, Objective::Penalized { reference: &reference, penalties })?;
        num_vars = program.num_vars;
        let report = inst.solve(&program);
        solves += 1;
        if !report.is_optimal() {
            failure = Some(format!("subproblem {it} ended with status {:?}", report.status));
            break;
        }
        let state = extract_point(cfg, &lay, beams, &report.x).state;
        let value = weighted_rate(cfg, &state) - penalties.exact(&state);
        let mse = state.binary_mse();
        trace.push(IterationRecord {
            iteration: it,
            objective: value,
            surrogate: report.objective,
            binary_mse: mse,
            lambda: penalties.max(),
            wall_time_s: start.elapsed().as_secs_f64(),
        });
        log::debug!("mm {it}: value {value:.6} mse {mse:.2e} lambda {:.4}", penalties.max());
        reference = state;
        if mse <= params.binary_tol {
            break;
        }
        if (value - prev).abs() <= params.improvement_tol * value.abs().max(f64::MIN_POSITIVE) {
            let next = penalties.max() * params.lambda_growth;
            if next > lambda_cap * (1.0 + 1e-12) {
                break;
            }
            penalties = penalties.scaled(params.lambda_growth);
            // The penalized value changes with λ; compare the next step against the same weights.
            prev = weighted_rate(cfg, &reference) - penalties.exact(&reference);
        } else {
            prev = value;
        }
    }

    let mut sol = match failure {
        Some(msg) => {
            let mut s = RrmSolution::empty(algorithm, SolutionStatus::Failed, msg);
            s.trace = trace.clone();
            s
        }
        None => match round_and_repair(cfg, channels, &reference, params, mode, beams) {
            Err(Error::Unrepairable { rounds }) => keep_initial(cfg, channels, algorithm, &init, rounds)?,
            other => other?,
        },
    };
    sol.stats.iterations = trace.len() - 1;
    sol.stats.conic_solves += solves;
    sol.stats.num_vars = num_vars;
    sol.stats.wall_time_s = start.elapsed().as_secs_f64();
    sol.trace = trace;
    Ok(sol)
}

/// Falls back to the feasible starting point when rounding cannot be repaired.
fn keep_initial(
    cfg: &SystemConfig,
    channels: &ChannelSet,
    algorithm: Algorithm,
    init: &InitialPoint,
    rounds: usize,
) -> Result<RrmSolution> {
    if !check_feasibility_pprime(cfg, channels, &init.allocation, ACCEPT_TOL)?.feasible {
        return Err(Error::Unrepairable { rounds });
    }
    let mut sol = RrmSolution::with_allocation(algorithm, SolutionStatus::Feasible, cfg, init.allocation.clone());
    sol.gains = init.gains.clone();
    sol.stats.repairs = rounds;
    sol.message = Some(format!("rounding unrepairable after {rounds} step(s); kept the initial point"));
    Ok(sol)
}

/// Relax-and-penalize over full beamformers.
pub fn solve_rnp1(cfg: &SystemConfig, channels: &ChannelSet, params: &AlgoParams) -> Result<RrmSolution> {
    run(cfg, channels, params, InitMode::Full, None)
}

/// Relax-and-penalize over the complex gains of predesigned beams.
pub fn solve_rnp2(
    cfg: &SystemConfig,
    channels: &ChannelSet,
    params: &AlgoParams,
    beams: &PredesignedBeams,
) -> Result<RrmSolution> {
    run(cfg, channels, params, InitMode::Gains, Some(beams))
}
