//! Independent checks of candidate solutions against the original problem.
//!
//! SINRs are evaluated directly from channels and effective beamformers
//! `κ_{b,u}·w_{b,u}`, never through the conic reformulation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelSet;
use crate::conic::{self, SolveStatus, SolverOptions};
use crate::formulation::{build_p0_relaxation, compute_bigm, extract_point, BinaryState, LayoutKind, VariableLayout};
use crate::system::SystemConfig;
use crate::{Error, Result};

/// Beamformers, powers and binaries in physical units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    /// `m_l` per cluster.
    pub multicast: Vec<Vec<Complex64>>,
    /// `w_{b,u}` per in-cluster link.
    pub unicast: Vec<Vec<Complex64>>,
    /// `p_{b,u}` per in-cluster link (watts).
    pub power: Vec<f64>,
    pub binaries: BinaryState,
}

impl Allocation {
    /// Reads a fixed-binary P0 solution vector.
    pub fn from_p0(cfg: &SystemConfig, x: &[f64]) -> Self {
        let lay = VariableLayout::new(cfg, LayoutKind::Full);
        let pt = extract_point(cfg, &lay, None, x);
        Self { multicast: pt.multicast, unicast: pt.unicast, power: pt.power, binaries: pt.state }
    }

    /// Rate index per UE (None when unserved).
    pub fn ue_rates(&self, cfg: &SystemConfig) -> Vec<Option<usize>> {
        (0..cfg.num_ues()).map(|u| self.binaries.ue_rate(u, cfg.ue_rates.len())).collect()
    }

    pub fn cluster_rates(&self, cfg: &SystemConfig) -> Vec<Option<usize>> {
        (0..cfg.clusters).map(|l| self.binaries.cluster_rate(l, cfg.sbs_rates.len())).collect()
    }
}

/// `Σ_u ω_u Σ_j R_j α_{u,j}` (bps/Hz).
pub fn weighted_rate(cfg: &SystemConfig, binaries: &BinaryState) -> f64 {
    let j = cfg.ue_rates.len();
    (0..cfg.num_ues())
        .map(|u| cfg.weight(u) * (0..j).map(|r| binaries.alpha[u * j + r] * cfg.ue_rates.rate(r)).sum::<f64>())
        .sum()
}

/// `W_access Σ_u Σ_j R_j α_{u,j}` (bps).
pub fn access_throughput(cfg: &SystemConfig, binaries: &BinaryState) -> f64 {
    let j = cfg.ue_rates.len();
    cfg.access_bandwidth_hz * binaries.alpha.iter().enumerate().map(|(i, a)| a * cfg.ue_rates.rate(i % j)).sum::<f64>()
}

/// `W_backhaul Σ_l Σ_j R_j β_{l,j}` (bps).
pub fn backhaul_throughput(cfg: &SystemConfig, binaries: &BinaryState) -> f64 {
    let j = cfg.sbs_rates.len();
    cfg.backhaul_bandwidth_hz * binaries.beta.iter().enumerate().map(|(i, b)| b * cfg.sbs_rates.rate(i % j)).sum::<f64>()
}

fn inner(a: &[Complex64], x: &[Complex64]) -> Complex64 {
    a.iter().zip(x).map(|(a, x)| a.conj() * x).sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SbsSinr {
    pub per_sbs: Vec<f64>,
    pub cluster_min: Vec<f64>,
}

/// Multicast SINR at every SBS and the worst SBS of each cluster.
pub fn sinr_sbs(cfg: &SystemConfig, channels: &ChannelSet, multicast: &[Vec<Complex64>]) -> SbsSinr {
    let per_sbs: Vec<f64> = (0..cfg.num_sbs())
        .map(|b| {
            let l = cfg.sbs_cluster(b);
            let g = channels.g(b);
            let mut signal = 0.0;
            let mut interference = 0.0;
            for (lp, m) in multicast.iter().enumerate() {
                let p = inner(g, m).norm_sqr();
                if lp == l {
                    signal = p;
                } else {
                    interference += p;
                }
            }
            signal / (interference + cfg.sbs_noise_w)
        })
        .collect();
    let cluster_min =
        (0..cfg.clusters).map(|l| cfg.cluster_sbs(l).map(|b| per_sbs[b]).fold(f64::INFINITY, f64::min)).collect();
    SbsSinr { per_sbs, cluster_min }
}

/// Unicast SINR at every UE with coherent combining over its serving SBSs.
pub fn sinr_ue(cfg: &SystemConfig, channels: &ChannelSet, unicast: &[Vec<Complex64>], kappa: &[f64]) -> Vec<f64> {
    let amplitude = |u: usize, v: usize| -> Complex64 {
        cfg.cluster_sbs(cfg.ue_cluster(v))
            .map(|b| {
                let k = cfg.link(b, v);
                inner(channels.h(b, u), &unicast[k]) * kappa[k]
            })
            .sum()
    };
    (0..cfg.num_ues())
        .map(|u| {
            let signal = amplitude(u, u).norm_sqr();
            let interference: f64 = (0..cfg.num_ues()).filter(|&v| v != u).map(|v| amplitude(u, v).norm_sqr()).sum();
            signal / (interference + cfg.ue_noise_w)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyCheck {
    pub family: String,
    pub passed: bool,
    /// Smallest margin found (negative means violated); relative for powers,
    /// SINRs and throughputs, absolute for counts and integrality.
    pub worst_slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub families: Vec<FamilyCheck>,
    pub ue_sinr: Vec<f64>,
    pub cluster_sinr: Vec<f64>,
    pub objective: f64,
    pub access_throughput_bps: f64,
}

impl FeasibilityReport {
    pub fn family(&self, name: &str) -> Option<&FamilyCheck> {
        self.families.iter().find(|f| f.family == name)
    }

    pub fn failures(&self) -> Vec<&FamilyCheck> {
        self.families.iter().filter(|f| !f.passed).collect()
    }
}

const INTEGRALITY_TOL: f64 = 1e-9;

struct Families {
    tol: f64,
    list: Vec<FamilyCheck>,
}

impl Families {
    fn check(&mut self, name: &str, slacks: impl IntoIterator<Item = f64>, tol: f64) {
        let worst = slacks.into_iter().fold(f64::INFINITY, |a, s| if s.is_nan() { f64::NEG_INFINITY } else { a.min(s) });
        self.list.push(FamilyCheck { family: name.to_string(), passed: worst >= -tol, worst_slack: worst });
    }
}

fn integrality(v: &[f64]) -> impl Iterator<Item = f64> + '_ {
    v.iter().map(|x| -(x.abs().min((x - 1.0).abs())))
}

/// Checks every constraint of the original problem at tolerance `tol`.
pub fn check_feasibility_pprime(
    cfg: &SystemConfig,
    channels: &ChannelSet,
    alloc: &Allocation,
    tol: f64,
) -> Result<FeasibilityReport> {
    let (ju, js) = (cfg.ue_rates.len(), cfg.sbs_rates.len());
    let s = &alloc.binaries;
    if alloc.multicast.len() != cfg.clusters
        || alloc.unicast.len() != cfg.num_links()
        || s.alpha.len() != cfg.num_ues() * ju
        || s.beta.len() != cfg.clusters * js
        || s.kappa.len() != cfg.num_links()
        || !channels.matches(cfg)
    {
        return Err(Error::DimensionMismatch("allocation does not match the configuration".into()));
    }
    let bin = |v: f64| if v > 0.5 { 1.0 } else { 0.0 };
    let alpha: Vec<f64> = s.alpha.iter().map(|&x| bin(x)).collect();
    let beta: Vec<f64> = s.beta.iter().map(|&x| bin(x)).collect();
    let kappa: Vec<f64> = s.kappa.iter().map(|&x| bin(x)).collect();
    let row_sum = |v: &[f64], i: usize, n: usize| v[i * n..(i + 1) * n].iter().sum::<f64>();

    let mut f = Families { tol, list: Vec::new() };
    f.check("C1", integrality(&s.alpha), INTEGRALITY_TOL);
    f.check("C2", (0..cfg.num_ues()).map(|u| 1.0 - row_sum(&alpha, u, ju)), 0.0);
    let mbs_power: f64 = alloc.multicast.iter().flatten().map(|c| c.norm_sqr()).sum();
    f.check("C3", [(cfg.mbs_power_w - mbs_power) / cfg.mbs_power_w], tol);
    f.check(
        "C4",
        (0..cfg.num_sbs()).map(|b| {
            let used: f64 = cfg
                .cluster_ues(cfg.sbs_cluster(b))
                .map(|u| {
                    let k = cfg.link(b, u);
                    kappa[k] * alloc.unicast[k].iter().map(|c| c.norm_sqr()).sum::<f64>()
                })
                .sum();
            (cfg.sbs_power_w - used) / cfg.sbs_power_w
        }),
        tol,
    );
    let ue_sinr = sinr_ue(cfg, channels, &alloc.unicast, &kappa);
    f.check(
        "C5",
        (0..cfg.num_ues()).map(|u| match (0..ju).find(|&j| alpha[u * ju + j] > 0.5) {
            Some(j) => (ue_sinr[u] - cfg.ue_rates.sinr(j)) / cfg.ue_rates.sinr(j),
            None => f64::INFINITY,
        }),
        tol,
    );
    f.check("C6", integrality(&s.kappa), INTEGRALITY_TOL);
    let served_by = |b: usize| cfg.cluster_ues(cfg.sbs_cluster(b)).map(|u| kappa[cfg.link(b, u)]).sum::<f64>();
    f.check("C7", (0..cfg.num_sbs()).map(|b| cfg.sbs_streams as f64 - served_by(b)), 0.0);
    f.check("C8", (0..cfg.num_sbs()).map(|b| served_by(b) - 1.0), 0.0);
    let serving = |u: usize| cfg.cluster_sbs(cfg.ue_cluster(u)).map(|b| kappa[cfg.link(b, u)]).sum::<f64>();
    f.check(
        "C9",
        (0..cfg.num_ues()).map(|u| cfg.max_serving_sbs as f64 * row_sum(&alpha, u, ju) - serving(u)),
        0.0,
    );
    f.check(
        "C10",
        (0..cfg.num_ues()).map(|u| serving(u) - cfg.min_serving_sbs as f64 * row_sum(&alpha, u, ju)),
        0.0,
    );
    f.check("C11", integrality(&s.beta), INTEGRALITY_TOL);
    f.check("C12", (0..cfg.clusters).map(|l| -(row_sum(&beta, l, js) - 1.0).abs()), 0.0);
    f.check(
        "C13",
        (0..cfg.clusters).map(|l| {
            let access: f64 = cfg
                .cluster_ues(l)
                .map(|u| (0..ju).map(|j| alpha[u * ju + j] * cfg.ue_rates.rate(j)).sum::<f64>())
                .sum::<f64>()
                * cfg.access_bandwidth_hz;
            let backhaul = (0..js).map(|j| beta[l * js + j] * cfg.sbs_rates.rate(j)).sum::<f64>() * cfg.backhaul_bandwidth_hz;
            (backhaul - access) / backhaul.max(access).max(1.0)
        }),
        tol,
    );
    f.check(
        "C14",
        (0..cfg.clusters).map(|l| {
            -(cfg.cluster_ues(l).map(|u| row_sum(&alpha, u, ju)).sum::<f64>() - cfg.ues_served as f64).abs()
        }),
        0.0,
    );
    let sbs = sinr_sbs(cfg, channels, &alloc.multicast);
    f.check(
        "C15",
        (0..cfg.clusters).map(|l| match (0..js).find(|&j| beta[l * js + j] > 0.5) {
            Some(j) => (sbs.cluster_min[l] - cfg.sbs_rates.sinr(j)) / cfg.sbs_rates.sinr(j),
            None => f64::INFINITY,
        }),
        tol,
    );
    let _ = f.tol;
    let feasible = f.list.iter().all(|c| c.passed);
    Ok(FeasibilityReport {
        feasible,
        families: f.list,
        ue_sinr,
        cluster_sinr: sbs.cluster_min,
        objective: weighted_rate(cfg, s),
        access_throughput_bps: access_throughput(cfg, s),
    })
}

/// Throughput an allocation actually delivers on a given channel realization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Delivered {
    /// `W_access · Σ R_j` over UEs whose own SINR and cluster backhaul SINR both meet their targets.
    pub throughput_bps: f64,
    /// Per-UE delivered rate index (`None` when unserved or dropped).
    pub ue_rates: Vec<Option<usize>>,
    /// Clusters whose multicast stream was decodable at the chosen rate.
    pub backhaul_ok: Vec<bool>,
}

/// Evaluates an allocation on `channels` with discrete-rate semantics: a stream
/// below its SINR target is not decoded, and a cluster whose backhaul fails
/// delivers nothing to its UEs.
pub fn delivered_throughput(cfg: &SystemConfig, channels: &ChannelSet, alloc: &Allocation) -> Delivered {
    const SLACK: f64 = 1e-6;
    let (ju, js) = (cfg.ue_rates.len(), cfg.sbs_rates.len());
    let kappa: Vec<f64> = alloc.binaries.kappa.iter().map(|&k| if k > 0.5 { 1.0 } else { 0.0 }).collect();
    let ue_sinr = sinr_ue(cfg, channels, &alloc.unicast, &kappa);
    let sbs = sinr_sbs(cfg, channels, &alloc.multicast);
    let backhaul_ok: Vec<bool> = (0..cfg.clusters)
        .map(|l| match alloc.binaries.cluster_rate(l, js) {
            Some(j) => sbs.cluster_min[l] >= cfg.sbs_rates.sinr(j) * (1.0 - SLACK),
            None => false,
        })
        .collect();
    let ue_rates: Vec<Option<usize>> = (0..cfg.num_ues())
        .map(|u| {
            alloc
                .binaries
                .ue_rate(u, ju)
                .filter(|&j| backhaul_ok[cfg.ue_cluster(u)] && ue_sinr[u] >= cfg.ue_rates.sinr(j) * (1.0 - SLACK))
        })
        .collect();
    let throughput_bps = cfg.access_bandwidth_hz * ue_rates.iter().flatten().map(|&j| cfg.ue_rates.rate(j)).sum::<f64>();
    Delivered { throughput_bps, ue_rates, backhaul_ok }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BruteForceParams {
    /// Maximum number of admissible binary tuples.
    pub cap: u128,
    pub solver: SolverOptions,
}

impl Default for BruteForceParams {
    fn default() -> Self {
        Self { cap: 1 << 20, solver: SolverOptions::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BruteForceResult {
    pub feasible: bool,
    pub objective: f64,
    pub best: Option<Allocation>,
    /// Tuples satisfying the counting constraints (rate selection, streams,
    /// association bounds, one cluster rate, served-UE count).
    pub admissible: u128,
    /// Admissible tuples that also pass the static throughput-coupling check.
    pub candidates: usize,
    /// Fixed-binary programs solved before the optimum was certified.
    pub solves: usize,
    /// Solves that ended neither optimal nor infeasible (treated as infeasible).
    pub inconclusive: usize,
}

/// One cluster's binary choice.
#[derive(Clone, Debug)]
struct ClusterChoice {
    beta_j: usize,
    /// (local UE, rate index)
    rates: Vec<(usize, usize)>,
    /// Serving SBS bitmask per admitted UE, aligned with `rates`.
    serving: Vec<u32>,
    value: f64,
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Valid serving masks: one mask per admitted UE with popcount in `[B_min, B_max]`,
/// and every SBS serving between 1 and `N_streams` admitted UEs.
fn association_patterns(cfg: &SystemConfig, admitted: usize) -> Vec<Vec<u32>> {
    let b = cfg.sbs_per_cluster;
    let masks: Vec<u32> = (1u32..(1 << b))
        .filter(|m| (cfg.min_serving_sbs..=cfg.max_serving_sbs).contains(&(m.count_ones() as usize)))
        .collect();
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(admitted);
    fn rec(masks: &[u32], n: usize, b: usize, streams: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == n {
            let ok = (0..b).all(|s| {
                let c = cur.iter().filter(|m| *m & (1 << s) != 0).count();
                c >= 1 && c <= streams
            });
            if ok {
                out.push(cur.clone());
            }
            return;
        }
        for &m in masks {
            cur.push(m);
            rec(masks, n, b, streams, cur, out);
            cur.pop();
        }
    }
    rec(&masks, admitted, b, cfg.sbs_streams, &mut cur, &mut out);
    out
}

fn cluster_choices(cfg: &SystemConfig, l: usize) -> (u128, Vec<ClusterChoice>) {
    let (ju, js) = (cfg.ue_rates.len(), cfg.sbs_rates.len());
    let patterns = association_patterns(cfg, cfg.ues_served);
    let subsets = combinations(cfg.ues_per_cluster, cfg.ues_served);
    let rate_tuples = (ju as u128).pow(cfg.ues_served as u32);
    let count = js as u128 * subsets.len() as u128 * rate_tuples * patterns.len() as u128;
    let mut out = Vec::new();
    if count > 1 << 24 {
        return (count, out);
    }
    let wmax = cfg.access_bandwidth_hz.max(cfg.backhaul_bandwidth_hz);
    for beta_j in 0..js {
        let backhaul = cfg.backhaul_bandwidth_hz / wmax * cfg.sbs_rates.rate(beta_j);
        for subset in &subsets {
            for code in 0..rate_tuples {
                let mut c = code;
                let rates: Vec<(usize, usize)> = subset
                    .iter()
                    .map(|&u| {
                        let j = (c % ju as u128) as usize;
                        c /= ju as u128;
                        (u, j)
                    })
                    .collect();
                let access: f64 = rates.iter().map(|&(_, j)| cfg.ue_rates.rate(j)).sum::<f64>() * cfg.access_bandwidth_hz / wmax;
                if access > backhaul * (1.0 + 1e-12) {
                    continue;
                }
                let value: f64 =
                    rates.iter().map(|&(u, j)| cfg.weight(l * cfg.ues_per_cluster + u) * cfg.ue_rates.rate(j)).sum();
                for p in &patterns {
                    out.push(ClusterChoice { beta_j, rates: rates.clone(), serving: p.clone(), value });
                }
            }
        }
    }
    (count, out)
}

fn assemble(cfg: &SystemConfig, picks: &[&ClusterChoice]) -> BinaryState {
    let (ju, js) = (cfg.ue_rates.len(), cfg.sbs_rates.len());
    let mut alpha = vec![0.0; cfg.num_ues() * ju];
    let mut beta = vec![0.0; cfg.clusters * js];
    let mut kappa = vec![0.0; cfg.num_links()];
    for (l, c) in picks.iter().enumerate() {
        beta[l * js + c.beta_j] = 1.0;
        for (&(lu, j), &mask) in c.rates.iter().zip(&c.serving) {
            let u = l * cfg.ues_per_cluster + lu;
            alpha[u * ju + j] = 1.0;
            for (i, b) in cfg.cluster_sbs(l).enumerate() {
                if mask & (1 << i) != 0 {
                    kappa[cfg.link(b, u)] = 1.0;
                }
            }
        }
    }
    BinaryState::fixed(alpha, beta, kappa)
}

/// Exhaustive search: every admissible binary tuple, best objective first,
/// each checked with a fixed-binary conic solve. The first feasible tuple is optimal.
pub fn brute_force_optimum(cfg: &SystemConfig, channels: &ChannelSet, params: &BruteForceParams) -> Result<BruteForceResult> {
    let mut admissible: u128 = 1;
    let mut per_cluster = Vec::with_capacity(cfg.clusters);
    for l in 0..cfg.clusters {
        let (count, choices) = cluster_choices(cfg, l);
        admissible = admissible.saturating_mul(count);
        if admissible > params.cap {
            return Err(Error::InstanceTooLarge(admissible));
        }
        per_cluster.push(choices);
    }
    let mut tuples: Vec<(f64, Vec<usize>)> = vec![(0.0, vec![])];
    for choices in &per_cluster {
        let mut next = Vec::with_capacity(tuples.len() * choices.len());
        for (v, idx) in &tuples {
            for (i, c) in choices.iter().enumerate() {
                let mut idx = idx.clone();
                idx.push(i);
                next.push((v + c.value, idx));
            }
        }
        tuples = next;
    }
    tuples.sort_by(|a, b| b.0.total_cmp(&a.0));
    let bigm = compute_bigm(channels, cfg);
    let mut result = BruteForceResult {
        feasible: false,
        objective: f64::NEG_INFINITY,
        best: None,
        admissible,
        candidates: tuples.len(),
        solves: 0,
        inconclusive: 0,
    };
    for (_, idx) in &tuples {
        let picks: Vec<&ClusterChoice> = idx.iter().enumerate().map(|(l, &i)| &per_cluster[l][i]).collect();
        let state = assemble(cfg, &picks);
        let program = build_p0_relaxation(cfg, channels, &bigm, &state)?;
        let report = conic::solve(&program, &params.solver);
        result.solves += 1;
        match report.status {
            SolveStatus::Optimal => {
                result.feasible = true;
                result.objective = weighted_rate(cfg, &state);
                let mut alloc = Allocation::from_p0(cfg, &report.x);
                alloc.binaries = state;
                result.best = Some(alloc);
                return Ok(result);
            }
            SolveStatus::Infeasible => {}
            _ => result.inconclusive += 1,
        }
    }
    Ok(result)
}
