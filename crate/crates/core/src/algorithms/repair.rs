use super::{AlgoParams, Algorithm, InitMode, Instance, RrmSolution, SolutionStatus};
use crate::channel::ChannelSet;
use crate::formulation::{BinaryState, PredesignedBeams};
use crate::system::SystemConfig;
use crate::verify::check_feasibility_pprime;
use crate::{Error, Result};

/// Relative tolerance for accepting a re-solved allocation.
pub(crate) const ACCEPT_TOL: f64 = 1e-5;
/// Search nodes before the association search settles for its best so far.
const MASK_SEARCH_LIMIT: usize = 200_000;

/// First index of the largest entry.
fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Per-cluster rounded decision.
#[derive(Clone, Debug)]
struct ClusterPlan {
    beta: usize,
    /// (global UE, rate index), in admission order.
    served: Vec<(usize, usize)>,
}

/// Serving masks for the admitted UEs closest to the relaxed association.
fn nearest_masks(cfg: &SystemConfig, l: usize, ues: &[usize], kappa: &[f64]) -> Option<Vec<u32>> {
    let b = cfg.sbs_per_cluster;
    let sbs0 = cfg.cluster_sbs(l).start;
    let bmax = cfg.max_serving_sbs.min(b);
    let valid: Vec<u32> =
        (1u32..(1 << b)).filter(|m| (cfg.min_serving_sbs..=bmax).contains(&(m.count_ones() as usize))).collect();
    // Agreement of a mask with the relaxed values: Σ_s (2κ − 1) over the chosen SBSs.
    let score = |u: usize, m: u32| -> f64 {
        (0..b).filter(|s| m & (1 << s) != 0).map(|s| 2.0 * kappa[cfg.link(sbs0 + s, u)] - 1.0).sum()
    };
    let scores: Vec<Vec<f64>> = ues.iter().map(|&u| valid.iter().map(|&m| score(u, m)).collect()).collect();
    let best_rest: Vec<f64> = (0..=ues.len())
        .map(|i| scores[i..].iter().map(|s| s.iter().cloned().fold(f64::NEG_INFINITY, f64::max)).sum())
        .collect();

    struct Search<'a> {
        cfg: &'a SystemConfig,
        valid: &'a [u32],
        scores: &'a [Vec<f64>],
        best_rest: &'a [f64],
        load: Vec<usize>,
        cur: Vec<u32>,
        best: Option<(f64, Vec<u32>)>,
        nodes: usize,
    }
    impl Search<'_> {
        fn run(&mut self, i: usize, acc: f64) {
            self.nodes += 1;
            if self.nodes > MASK_SEARCH_LIMIT {
                return;
            }
            if let Some((v, _)) = &self.best {
                if acc + self.best_rest[i] <= *v {
                    return;
                }
            }
            if i == self.scores.len() {
                if self.load.iter().all(|&c| c >= 1) {
                    self.best = Some((acc, self.cur.clone()));
                }
                return;
            }
            // Remaining UEs must still be able to cover SBSs left without a UE.
            let uncovered = self.load.iter().filter(|&&c| c == 0).count();
            if uncovered > (self.scores.len() - i) * self.cfg.max_serving_sbs {
                return;
            }
            let mut order: Vec<usize> = (0..self.valid.len()).collect();
            order.sort_by(|&a, &b| self.scores[i][b].total_cmp(&self.scores[i][a]).then(a.cmp(&b)));
            for k in order {
                let m = self.valid[k];
                let fits = (0..self.load.len()).all(|s| m & (1 << s) == 0 || self.load[s] < self.cfg.sbs_streams);
                if !fits {
                    continue;
                }
                for s in 0..self.load.len() {
                    if m & (1 << s) != 0 {
                        self.load[s] += 1;
                    }
                }
                self.cur.push(m);
                self.run(i + 1, acc + self.scores[i][k]);
                self.cur.pop();
                for s in 0..self.load.len() {
                    if m & (1 << s) != 0 {
                        self.load[s] -= 1;
                    }
                }
            }
        }
    }
    let mut s = Search {
        cfg,
        valid: &valid,
        scores: &scores,
        best_rest: &best_rest,
        load: vec![0; b],
        cur: vec![],
        best: None,
        nodes: 0,
    };
    s.run(0, 0.0);
    s.best.map(|(_, m)| m)
}

fn backhaul_capacity(cfg: &SystemConfig, j: usize) -> f64 {
    cfg.backhaul_bandwidth_hz * cfg.sbs_rates.rate(j)
}

fn access_load(cfg: &SystemConfig, served: &[(usize, usize)]) -> f64 {
    served.iter().map(|&(_, j)| cfg.ue_rates.rate(j)).sum::<f64>() * cfg.access_bandwidth_hz
}

/// Lowers UE rates (highest first) and then raises the cluster rate until the
/// access load fits the backhaul.
fn enforce_coupling(cfg: &SystemConfig, plan: &mut ClusterPlan) {
    while access_load(cfg, &plan.served) > backhaul_capacity(cfg, plan.beta) {
        let top = plan.served.iter().enumerate().filter(|(_, (_, j))| *j > 0).max_by(|a, b| {
            (a.1 .1).cmp(&b.1 .1).then(cfg.weight(b.1 .0).total_cmp(&cfg.weight(a.1 .0)))
        });
        match top {
            Some((i, _)) => plan.served[i].1 -= 1,
            None => break,
        }
    }
    while access_load(cfg, &plan.served) > backhaul_capacity(cfg, plan.beta) && plan.beta + 1 < cfg.sbs_rates.len() {
        plan.beta += 1;
    }
}

fn assemble(cfg: &SystemConfig, plans: &[ClusterPlan], relaxed: &BinaryState) -> Option<BinaryState> {
    let (ju, js) = (cfg.ue_rates.len(), cfg.sbs_rates.len());
    let mut alpha = vec![0.0; cfg.num_ues() * ju];
    let mut beta = vec![0.0; cfg.clusters * js];
    let mut kappa = vec![0.0; cfg.num_links()];
    for (l, p) in plans.iter().enumerate() {
        beta[l * js + p.beta] = 1.0;
        let ues: Vec<usize> = p.served.iter().map(|&(u, _)| u).collect();
        let masks = nearest_masks(cfg, l, &ues, &relaxed.kappa)?;
        let sbs0 = cfg.cluster_sbs(l).start;
        for (&(u, j), m) in p.served.iter().zip(masks) {
            alpha[u * ju + j] = 1.0;
            for s in 0..cfg.sbs_per_cluster {
                if m & (1 << s) != 0 {
                    kappa[cfg.link(sbs0 + s, u)] = 1.0;
                }
            }
        }
    }
    Some(BinaryState::fixed(alpha, beta, kappa))
}

fn round_plans(cfg: &SystemConfig, relaxed: &BinaryState) -> Vec<ClusterPlan> {
    let (ju, js) = (cfg.ue_rates.len(), cfg.sbs_rates.len());
    (0..cfg.clusters)
        .map(|l| {
            let beta = argmax(&relaxed.beta[l * js..(l + 1) * js]);
            let mass = |u: usize| relaxed.alpha[u * ju..(u + 1) * ju].iter().sum::<f64>();
            let mut ues: Vec<usize> = cfg.cluster_ues(l).collect();
            ues.sort_by(|&a, &b| mass(b).total_cmp(&mass(a)).then(a.cmp(&b)));
            let mut served: Vec<(usize, usize)> = ues[..cfg.ues_served]
                .iter()
                .map(|&u| (u, argmax(&relaxed.alpha[u * ju..(u + 1) * ju])))
                .collect();
            served.sort_unstable();
            let mut plan = ClusterPlan { beta, served };
            enforce_coupling(cfg, &mut plan);
            plan
        })
        .collect()
}

/// Relaxed mass strictly below index `j` in a row.
fn mass_below(row: &[f64], j: usize) -> f64 {
    row[..j].iter().sum()
}

/// Rounds relaxed binaries to a valid assignment, re-solves the fixed-binary
/// program and repairs infeasible roundings.
///
/// Rounding keeps, per cluster, the `U_served` UEs with the largest rate mass at
/// their largest rate entry (ties to the lowest index), lowers rates until the
/// backhaul coupling holds, and picks the closest valid association.
///
/// Repair first backs rates off one level at a time: a cluster rate when the
/// MBS alone cannot deliver the chosen cluster rates, otherwise the UE rate
/// with the most relaxed mass below it. Once every rate sits at its floor, up to
/// `repair_rounds` rounds swap the served UE with the smallest weighted rate for
/// the best unserved candidate.
pub fn round_and_repair(
    cfg: &SystemConfig,
    channels: &ChannelSet,
    relaxed: &BinaryState,
    params: &AlgoParams,
    mode: InitMode,
    beams: Option<&PredesignedBeams>,
) -> Result<RrmSolution> {
    let inst = Instance::new(cfg, channels, beams, params)?;
    let algorithm = match mode {
        InitMode::Full => Algorithm::Rnp1,
        InitMode::Gains => Algorithm::Rnp2,
    };
    let (ju, js) = (cfg.ue_rates.len(), cfg.sbs_rates.len());
    if relaxed.alpha.len() != cfg.num_ues() * ju
        || relaxed.beta.len() != cfg.clusters * js
        || relaxed.kappa.len() != cfg.num_links()
    {
        return Err(Error::DimensionMismatch("relaxed state does not match the configuration".into()));
    }
    let rounds = params.repair_rounds.unwrap_or(cfg.sbs_per_cluster);
    let alpha_row = |u: usize| &relaxed.alpha[u * ju..(u + 1) * ju];
    let beta_row = |l: usize| &relaxed.beta[l * js..(l + 1) * js];
    let mut plans = round_plans(cfg, relaxed);
    let mut solves = 0;
    let mut repairs = 0;

    let attempt = |plans: &[ClusterPlan], solves: &mut usize| -> Result<Option<RrmSolution>> {
        let Some(state) = assemble(cfg, plans, relaxed) else { return Ok(None) };
        *solves += 1;
        let Some((alloc, gains)) = inst.solve_fixed(mode, &state)? else { return Ok(None) };
        if !check_feasibility_pprime(cfg, channels, &alloc, ACCEPT_TOL)?.feasible {
            return Ok(None);
        }
        let mut sol = RrmSolution::with_allocation(algorithm, SolutionStatus::Feasible, cfg, alloc);
        sol.gains = gains;
        Ok(Some(sol))
    };
    let finish = |mut sol: RrmSolution, repairs: usize, solves: usize| {
        sol.stats.repairs = repairs;
        sol.stats.conic_solves = solves;
        if repairs > 0 {
            sol.message = Some(format!("{repairs} repair step(s)"));
        }
        sol
    };

    // Rate back-off.
    loop {
        if let Some(sol) = attempt(&plans, &mut solves)? {
            return Ok(finish(sol, repairs, solves));
        }
        let Some(state) = assemble(cfg, &plans, relaxed) else { break };
        solves += 1;
        if !inst.backhaul_feasible(&state)? {
            let pick = plans
                .iter()
                .enumerate()
                .filter(|(_, p)| p.beta > 0)
                .max_by(|a, b| {
                    mass_below(beta_row(a.0), a.1.beta)
                        .total_cmp(&mass_below(beta_row(b.0), b.1.beta))
                        .then(a.1.beta.cmp(&b.1.beta))
                        .then(b.0.cmp(&a.0))
                })
                .map(|(l, _)| l);
            let Some(l) = pick else { break };
            plans[l].beta -= 1;
            enforce_coupling(cfg, &mut plans[l]);
        } else {
            let pick = plans
                .iter()
                .enumerate()
                .flat_map(|(l, p)| p.served.iter().enumerate().map(move |(i, &(u, j))| (l, i, u, j)))
                .filter(|x| x.3 > 0)
                .max_by(|a, b| {
                    mass_below(alpha_row(a.2), a.3)
                        .total_cmp(&mass_below(alpha_row(b.2), b.3))
                        .then(a.3.cmp(&b.3))
                        .then(cfg.weight(b.2).total_cmp(&cfg.weight(a.2)))
                        .then(b.2.cmp(&a.2))
                });
            let Some((l, i, _, _)) = pick else { break };
            plans[l].served[i].1 -= 1;
        }
        repairs += 1;
    }

    // Swap rounds at the rate floor.
    let mut demoted = vec![false; cfg.num_ues()];
    for _ in 0..rounds {
        let victim = plans
            .iter()
            .enumerate()
            .flat_map(|(l, p)| p.served.iter().enumerate().map(move |(i, &(u, j))| (l, i, u, j)))
            .min_by(|a, b| {
                let wa = cfg.weight(a.2) * cfg.ue_rates.rate(a.3);
                let wb = cfg.weight(b.2) * cfg.ue_rates.rate(b.3);
                wa.total_cmp(&wb).then(a.2.cmp(&b.2))
            });
        let Some((l, i, u, _)) = victim else { break };
        demoted[u] = true;
        let served: Vec<usize> = plans[l].served.iter().map(|&(v, _)| v).collect();
        let mass = |v: usize| alpha_row(v).iter().sum::<f64>();
        let Some(replacement) = cfg
            .cluster_ues(l)
            .filter(|v| !served.contains(v) && !demoted[*v])
            .max_by(|&a, &b| mass(a).total_cmp(&mass(b)).then(b.cmp(&a)))
        else {
            break;
        };
        plans[l].served[i] = (replacement, 0);
        plans[l].served.sort_unstable();
        repairs += 1;
        if let Some(sol) = attempt(&plans, &mut solves)? {
            return Ok(finish(sol, repairs, solves));
        }
    }
    Err(Error::Unrepairable { rounds: repairs })
}
