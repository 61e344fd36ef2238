//! Scenario specs, Monte-Carlo sweeps and the slotted fairness run.

mod slotted;

pub use slotted::{run_slotted, SlotRecord, SlottedOutput, SlottedSettings, SlottedState};

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{
    predesign_beams, solve_bnc_misocp, solve_rnp1, solve_rnp2, solve_upper_bound, AlgoParams, RrmSolution,
    SolutionStatus,
};
use crate::channel::{perturb_channels, ChannelParams, ChannelSet, PerturbationScope, PerturbationSpec};
use crate::rng::derive_seed;
use crate::system::{
    dbm_to_watts, lower_bound_rate, validate_config, watts_to_dbm, ArrayShape, SystemConfig, Topology, TopologyParams,
};
use crate::verify::{check_feasibility_pprime, delivered_throughput};
use crate::{Error, Result};

/// Relative tolerance of the feasibility check applied to every reported allocation.
pub const VERIFY_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AlgorithmKind {
    #[serde(rename = "UB")]
    Ub,
    #[serde(rename = "LB")]
    Lb,
    #[serde(rename = "BnC")]
    Bnc,
    #[serde(rename = "RnP1")]
    Rnp1,
    #[serde(rename = "RnP2")]
    Rnp2,
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 5] =
        [AlgorithmKind::Ub, AlgorithmKind::Lb, AlgorithmKind::Bnc, AlgorithmKind::Rnp1, AlgorithmKind::Rnp2];

    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmKind::Ub => "UB",
            AlgorithmKind::Lb => "LB",
            AlgorithmKind::Bnc => "BnC",
            AlgorithmKind::Rnp1 => "RnP1",
            AlgorithmKind::Rnp2 => "RnP2",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown algorithm '{s}'")))
    }
}

/// A scenario: a base configuration, sweep axes, seeds and algorithms.
///
/// Sweep points are the cartesian product of the power, cluster, cluster-size
/// and antenna axes. The two χ grids are swept one at a time: every backhaul
/// value with exact access channels, then every nonzero access value with exact
/// backhaul channels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub id: String,
    #[serde(default = "SystemConfig::small")]
    pub system: SystemConfig,
    #[serde(default)]
    pub mbs_power_dbm: Vec<f64>,
    #[serde(default)]
    pub sbs_power_dbm: Vec<f64>,
    #[serde(default)]
    pub clusters: Vec<usize>,
    #[serde(default)]
    pub sbs_per_cluster: Vec<usize>,
    /// MBS antenna counts; the array keeps the base row count.
    #[serde(default)]
    pub mbs_antennas: Vec<usize>,
    #[serde(default = "zero_grid")]
    pub chi_backhaul: Vec<f64>,
    #[serde(default = "zero_grid")]
    pub chi_access: Vec<f64>,
    pub realizations: usize,
    #[serde(default)]
    pub seed_base: u64,
    pub algorithms: Vec<AlgorithmKind>,
    #[serde(default)]
    pub params: AlgoParams,
    #[serde(default)]
    pub topology: TopologyParams,
    #[serde(default)]
    pub channel: ChannelParams,
    /// Channel draws averaged into the multicast directions of the gain-only heuristic.
    #[serde(default = "default_beam_realizations")]
    pub beam_realizations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slotted: Option<SlottedSettings>,
    /// Directory for output files when none is given on the command line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn zero_grid() -> Vec<f64> {
    vec![0.0]
}

fn default_beam_realizations() -> usize {
    50
}

/// One combination of sweep-axis values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub index: usize,
    pub mbs_power_dbm: f64,
    pub sbs_power_dbm: f64,
    pub clusters: usize,
    pub sbs_per_cluster: usize,
    pub mbs_antennas: usize,
    pub chi_backhaul: f64,
    pub chi_access: f64,
}

impl ScenarioSpec {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// Structural checks plus validation of every sweep point's configuration.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.realizations == 0 {
            problems.push("realizations must be at least 1".to_string());
        }
        if self.algorithms.is_empty() && self.slotted.is_none() {
            problems.push("no algorithms selected".to_string());
        }
        for (name, empty) in [
            ("chi_backhaul", self.chi_backhaul.is_empty()),
            ("chi_access", self.chi_access.is_empty()),
        ] {
            if empty {
                problems.push(format!("{name} must not be empty"));
            }
        }
        if self.chi_backhaul.iter().chain(&self.chi_access).any(|c| !(0.0..=1.0).contains(c)) {
            problems.push("chi values must lie in [0, 1]".to_string());
        }
        if self.beam_realizations == 0 {
            problems.push("beam_realizations must be at least 1".to_string());
        }
        if let Err(e) = self.params.validate() {
            problems.push(e.to_string());
        }
        if let Some(s) = &self.slotted {
            if let Err(e) = s.validate(&self.system) {
                problems.push(e.to_string());
            }
        }
        for p in self.points() {
            match self.config_for(&p) {
                Ok(cfg) => {
                    let report = validate_config(&cfg);
                    if !report.is_valid() {
                        problems.push(format!("sweep point {}: {report}", p.index));
                    }
                }
                Err(e) => problems.push(format!("sweep point {}: {e}", p.index)),
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(problems.join("; ")))
        }
    }

    pub fn points(&self) -> Vec<SweepPoint> {
        let base = &self.system;
        let or = |v: &Vec<f64>, d: f64| if v.is_empty() { vec![d] } else { v.clone() };
        let oru = |v: &Vec<usize>, d: usize| if v.is_empty() { vec![d] } else { v.clone() };
        let pm = or(&self.mbs_power_dbm, watts_to_dbm(base.mbs_power_w));
        let ps = or(&self.sbs_power_dbm, watts_to_dbm(base.sbs_power_w));
        let ls = oru(&self.clusters, base.clusters);
        let bs = oru(&self.sbs_per_cluster, base.sbs_per_cluster);
        let ns = oru(&self.mbs_antennas, base.n_mbs());
        let mut chis: Vec<(f64, f64)> = self.chi_backhaul.iter().map(|&c| (c, 0.0)).collect();
        chis.extend(self.chi_access.iter().filter(|&&c| c > 0.0).map(|&c| (0.0, c)));
        if chis.is_empty() {
            chis.push((0.0, 0.0));
        }
        let mut out = Vec::new();
        for &l in &ls {
            for &b in &bs {
                for &n in &ns {
                    for &m in &pm {
                        for &s in &ps {
                            for &(cb, ca) in &chis {
                                out.push(SweepPoint {
                                    index: out.len(),
                                    mbs_power_dbm: m,
                                    sbs_power_dbm: s,
                                    clusters: l,
                                    sbs_per_cluster: b,
                                    mbs_antennas: n,
                                    chi_backhaul: cb,
                                    chi_access: ca,
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }

    pub fn config_for(&self, p: &SweepPoint) -> Result<SystemConfig> {
        let rows = self.system.mbs_array.rows;
        if p.mbs_antennas == 0 || p.mbs_antennas % rows != 0 {
            return Err(Error::InvalidConfig(format!(
                "{} MBS antennas do not fill {rows} array rows",
                p.mbs_antennas
            )));
        }
        let mut cfg = self.system.clone();
        cfg.mbs_power_w = dbm_to_watts(p.mbs_power_dbm);
        cfg.sbs_power_w = dbm_to_watts(p.sbs_power_dbm);
        cfg.clusters = p.clusters;
        cfg.sbs_per_cluster = p.sbs_per_cluster;
        cfg.max_serving_sbs = cfg.max_serving_sbs.min(p.sbs_per_cluster);
        cfg.mbs_array = ArrayShape::new(rows, p.mbs_antennas / rows);
        if cfg.weights.as_ref().is_some_and(|w| w.len() != cfg.num_ues()) {
            cfg.weights = None;
        }
        Ok(cfg)
    }
}

/// One (sweep point, seed, algorithm) result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scenario: String,
    pub point: usize,
    pub mbs_power_dbm: f64,
    pub sbs_power_dbm: f64,
    pub clusters: usize,
    pub sbs_per_cluster: usize,
    pub mbs_antennas: usize,
    pub chi_backhaul: f64,
    pub chi_access: f64,
    pub seed: u64,
    pub algorithm: AlgorithmKind,
    pub status: SolutionStatus,
    /// Throughput the algorithm plans for (bound value for UB and LB), bps.
    pub throughput_bps: f64,
    /// Throughput delivered on the exact channels, bps.
    pub delivered_bps: f64,
    pub backhaul_throughput_bps: f64,
    /// Weighted sum rate, bps/Hz.
    pub objective: f64,
    /// Rate index per UE, `-1` when unserved; empty for bounds.
    pub ue_rates: Vec<i64>,
    pub iterations: usize,
    pub nodes: usize,
    pub wall_time_s: f64,
    /// Binary MSE after the last majorization step (heuristics only).
    pub final_mse: Option<f64>,
    /// Whether every step of the penalized objective was nondecreasing within a weight phase.
    pub monotone: Option<bool>,
    pub channel_hash: String,
}

/// A run that produced no allocation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub point: usize,
    pub seed: u64,
    pub algorithm: AlgorithmKind,
    pub status: String,
    pub message: String,
    pub channel_hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub point: SweepPoint,
    pub algorithm: AlgorithmKind,
    pub runs: usize,
    pub failures: usize,
    pub mean_throughput_bps: f64,
    pub std_throughput_bps: f64,
    pub mean_delivered_bps: f64,
    pub std_delivered_bps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOutput {
    pub scenario: String,
    pub records: Vec<RunRecord>,
    pub failures: Vec<FailureRecord>,
    pub summary: Vec<SummaryRow>,
}

/// Fixed CSV column order of [`RunRecord`]. Wall times go to a separate file so
/// that reruns reproduce the records byte for byte.
pub const RECORD_COLUMNS: [&str; 22] = [
    "scenario",
    "point",
    "mbs_power_dbm",
    "sbs_power_dbm",
    "clusters",
    "sbs_per_cluster",
    "mbs_antennas",
    "chi_backhaul",
    "chi_access",
    "seed",
    "algorithm",
    "status",
    "throughput_bps",
    "delivered_bps",
    "backhaul_throughput_bps",
    "objective",
    "ue_rates",
    "iterations",
    "nodes",
    "final_mse",
    "monotone",
    "channel_hash",
];

fn num(x: f64) -> String {
    // Shortest representation that round-trips.
    format!("{x:?}")
}

impl RunRecord {
    fn csv_row(&self) -> Vec<String> {
        vec![
            self.scenario.clone(),
            self.point.to_string(),
            num(self.mbs_power_dbm),
            num(self.sbs_power_dbm),
            self.clusters.to_string(),
            self.sbs_per_cluster.to_string(),
            self.mbs_antennas.to_string(),
            num(self.chi_backhaul),
            num(self.chi_access),
            self.seed.to_string(),
            self.algorithm.name().to_string(),
            serde_json::to_value(self.status).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default(),
            num(self.throughput_bps),
            num(self.delivered_bps),
            num(self.backhaul_throughput_bps),
            num(self.objective),
            self.ue_rates.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(";"),
            self.iterations.to_string(),
            self.nodes.to_string(),
            self.final_mse.map(num).unwrap_or_default(),
            self.monotone.map(|m| m.to_string()).unwrap_or_default(),
            self.channel_hash.clone(),
        ]
    }
}

/// Whether the penalized objective never decreases between consecutive steps
/// that share a penalty weight.
pub fn trace_is_monotone(sol: &RrmSolution, tol: f64) -> bool {
    sol.trace
        .windows(2)
        .filter(|w| w[0].lambda == w[1].lambda)
        .all(|w| w[1].objective >= w[0].objective - tol * w[0].objective.abs().max(1.0))
}

struct Realization {
    truth: ChannelSet,
    estimate: ChannelSet,
    topology: Topology,
}

fn realize(spec: &ScenarioSpec, cfg: &SystemConfig, p: &SweepPoint, seed: u64) -> Result<Realization> {
    let topology = Topology::generate(cfg, &spec.topology, seed);
    let truth = ChannelSet::generate(&topology, cfg, &spec.channel, seed);
    let pseed = derive_seed(seed, "scenario/perturbation", 0);
    let mut estimate = truth.clone();
    if p.chi_backhaul > 0.0 {
        estimate = perturb_channels(
            &estimate,
            &PerturbationSpec { chi: p.chi_backhaul, scope: PerturbationScope::Backhaul, seed: pseed },
        )?;
    }
    if p.chi_access > 0.0 {
        estimate = perturb_channels(
            &estimate,
            &PerturbationSpec { chi: p.chi_access, scope: PerturbationScope::Access, seed: pseed },
        )?;
    }
    Ok(Realization { truth, estimate, topology })
}

/// Runs one allocation algorithm. For the gain-only heuristic, beam design is
/// offline work and is not charged to the reported wall time.
pub(crate) fn solve_allocation(
    alg: AlgorithmKind,
    spec: &ScenarioSpec,
    cfg: &SystemConfig,
    channels: &ChannelSet,
    topology: &Topology,
    params: &AlgoParams,
) -> Result<RrmSolution> {
    match alg {
        AlgorithmKind::Bnc => solve_bnc_misocp(cfg, channels, params),
        AlgorithmKind::Rnp1 => solve_rnp1(cfg, channels, params),
        AlgorithmKind::Rnp2 => {
            let beams = predesign_beams(
                cfg,
                channels,
                topology,
                &spec.channel,
                spec.beam_realizations,
                derive_seed(params.seed, "scenario/beams", 0),
                params,
            )?;
            let t = Instant::now();
            let mut sol = solve_rnp2(cfg, channels, params, &beams)?;
            sol.stats.wall_time_s = t.elapsed().as_secs_f64();
            Ok(sol)
        }
        AlgorithmKind::Ub | AlgorithmKind::Lb => {
            Err(Error::InvalidConfig(format!("{} does not produce an allocation", alg.name())))
        }
    }
}

type JobResult = Vec<std::result::Result<RunRecord, FailureRecord>>;

fn run_one(spec: &ScenarioSpec, p: &SweepPoint, seed: u64) -> JobResult {
    let hash_fail = |alg: AlgorithmKind, msg: String, hash: &str| FailureRecord {
        point: p.index,
        seed,
        algorithm: alg,
        status: "failed".into(),
        message: msg,
        channel_hash: hash.to_string(),
    };
    let cfg = match spec.config_for(p) {
        Ok(c) => c,
        Err(e) => return spec.algorithms.iter().map(|&a| Err(hash_fail(a, e.to_string(), ""))).collect(),
    };
    let real = match realize(spec, &cfg, p, seed) {
        Ok(r) => r,
        Err(e) => return spec.algorithms.iter().map(|&a| Err(hash_fail(a, e.to_string(), ""))).collect(),
    };
    let hash = real.estimate.content_hash();
    let params = AlgoParams { seed, ..spec.params.clone() };
    let base = |alg: AlgorithmKind| RunRecord {
        scenario: spec.id.clone(),
        point: p.index,
        mbs_power_dbm: p.mbs_power_dbm,
        sbs_power_dbm: p.sbs_power_dbm,
        clusters: p.clusters,
        sbs_per_cluster: p.sbs_per_cluster,
        mbs_antennas: p.mbs_antennas,
        chi_backhaul: p.chi_backhaul,
        chi_access: p.chi_access,
        seed,
        algorithm: alg,
        status: SolutionStatus::Feasible,
        throughput_bps: 0.0,
        delivered_bps: 0.0,
        backhaul_throughput_bps: 0.0,
        objective: 0.0,
        ue_rates: vec![],
        iterations: 0,
        nodes: 0,
        wall_time_s: 0.0,
        final_mse: None,
        monotone: None,
        channel_hash: hash.clone(),
    };

    let mut out = Vec::new();
    for &alg in &spec.algorithms {
        let start = Instant::now();
        let result: Result<RunRecord> = (|| match alg {
            AlgorithmKind::Lb => {
                let lb = lower_bound_rate(&cfg);
                Ok(RunRecord {
                    status: SolutionStatus::Optimal,
                    throughput_bps: lb,
                    delivered_bps: lb,
                    ..base(alg)
                })
            }
            AlgorithmKind::Ub => {
                let ub = solve_upper_bound(&cfg, &real.estimate, &params)?;
                if !matches!(ub.status, SolutionStatus::Optimal | SolutionStatus::Feasible) {
                    return Err(Error::Solver(format!("upper bound status {:?}", ub.status)));
                }
                Ok(RunRecord {
                    status: ub.status,
                    throughput_bps: ub.throughput_bps,
                    delivered_bps: ub.throughput_bps,
                    backhaul_throughput_bps: ub.throughput_bps,
                    objective: ub.rate_sum,
                    nodes: ub.nodes,
                    ..base(alg)
                })
            }
            AlgorithmKind::Bnc | AlgorithmKind::Rnp1 | AlgorithmKind::Rnp2 => {
                let sol = solve_allocation(alg, spec, &cfg, &real.estimate, &real.topology, &params)?;
                let Some(alloc) = sol.allocation.as_ref().filter(|_| sol.has_allocation()) else {
                    return Err(Error::Solver(format!(
                        "{:?}: {}",
                        sol.status,
                        sol.message.clone().unwrap_or_default()
                    )));
                };
                let report = check_feasibility_pprime(&cfg, &real.estimate, alloc, VERIFY_TOL)?;
                if !report.feasible {
                    let failed: Vec<_> = report.failures().iter().map(|f| f.family.clone()).collect();
                    return Err(Error::Solver(format!("allocation fails {}", failed.join(","))));
                }
                let delivered = delivered_throughput(&cfg, &real.truth, alloc);
                let heuristic = alg != AlgorithmKind::Bnc;
                Ok(RunRecord {
                    status: sol.status,
                    throughput_bps: sol.access_throughput_bps,
                    delivered_bps: delivered.throughput_bps,
                    backhaul_throughput_bps: sol.backhaul_throughput_bps,
                    objective: sol.objective,
                    ue_rates: alloc.ue_rates(&cfg).iter().map(|r| r.map_or(-1, |j| j as i64)).collect(),
                    iterations: sol.stats.iterations,
                    nodes: sol.stats.nodes,
                    wall_time_s: sol.stats.wall_time_s,
                    final_mse: heuristic.then(|| sol.trace.last().map_or(0.0, |r| r.binary_mse)),
                    monotone: heuristic.then(|| trace_is_monotone(&sol, 1e-7)),
                    ..base(alg)
                })
            }
        })();
        let elapsed = start.elapsed().as_secs_f64();
        out.push(match result {
            Ok(mut r) => {
                if r.wall_time_s == 0.0 {
                    r.wall_time_s = elapsed;
                }
                Ok(r)
            }
            Err(e) => Err(hash_fail(alg, e.to_string(), &hash)),
        });
    }
    out
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64;
    (m, var.sqrt())
}

fn summarize(spec: &ScenarioSpec, records: &[RunRecord], failures: &[FailureRecord]) -> Vec<SummaryRow> {
    let mut out = Vec::new();
    for p in spec.points() {
        for &alg in &spec.algorithms {
            let rs: Vec<&RunRecord> = records.iter().filter(|r| r.point == p.index && r.algorithm == alg).collect();
            let thr: Vec<f64> = rs.iter().map(|r| r.throughput_bps).collect();
            let del: Vec<f64> = rs.iter().map(|r| r.delivered_bps).collect();
            let (mt, st) = mean_std(&thr);
            let (md, sd) = mean_std(&del);
            out.push(SummaryRow {
                point: p.clone(),
                algorithm: alg,
                runs: rs.len(),
                failures: failures.iter().filter(|f| f.point == p.index && f.algorithm == alg).count(),
                mean_throughput_bps: mt,
                std_throughput_bps: st,
                mean_delivered_bps: md,
                std_delivered_bps: sd,
            });
        }
    }
    out
}

/// Runs every selected algorithm for every sweep point and seed.
///
/// All algorithms of one (point, seed) share the same channel estimate; allocations
/// are verified on the estimate and their delivered throughput is measured on the
/// exact channels. `threads > 1` fans realizations out over a thread pool;
/// results keep (point, seed, algorithm) order either way.
pub fn run_scenario(spec: &ScenarioSpec, threads: usize) -> Result<ScenarioOutput> {
    spec.validate()?;
    let jobs: Vec<(SweepPoint, u64)> = spec
        .points()
        .into_iter()
        .flat_map(|p| (0..spec.realizations as u64).map(move |i| (p.clone(), spec.seed_base + i)))
        .collect();
    let results: Vec<JobResult> = if threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        pool.install(|| jobs.par_iter().map(|(p, s)| run_one(spec, p, *s)).collect())
    } else {
        jobs.iter()
            .map(|(p, s)| {
                log::info!("{}: point {} seed {s}", spec.id, p.index);
                run_one(spec, p, *s)
            })
            .collect()
    };
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for r in results.into_iter().flatten() {
        match r {
            Ok(rec) => records.push(rec),
            Err(f) => failures.push(f),
        }
    }
    let summary = summarize(spec, &records, &failures);
    Ok(ScenarioOutput { scenario: spec.id.clone(), records, failures, summary })
}

impl ScenarioOutput {
    /// Writes `<id>_records.csv`, `<id>_failures.csv`, `<id>_summary.json` and
    /// `<id>_timings.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let rec_path = dir.join(format!("{}_records.csv", self.scenario));
        let mut w = csv::Writer::from_path(&rec_path)?;
        w.write_record(RECORD_COLUMNS)?;
        for r in &self.records {
            w.write_record(r.csv_row())?;
        }
        w.flush()?;

        let fail_path = dir.join(format!("{}_failures.csv", self.scenario));
        let mut w = csv::Writer::from_path(&fail_path)?;
        w.write_record(["point", "seed", "algorithm", "status", "message", "channel_hash"])?;
        for f in &self.failures {
            w.write_record([
                f.point.to_string(),
                f.seed.to_string(),
                f.algorithm.name().to_string(),
                f.status.clone(),
                f.message.clone(),
                f.channel_hash.clone(),
            ])?;
        }
        w.flush()?;

        let sum_path = dir.join(format!("{}_summary.json", self.scenario));
        fs::write(&sum_path, serde_json::to_string_pretty(&self.summary)?)?;

        let time_path = dir.join(format!("{}_timings.csv", self.scenario));
        let mut w = csv::Writer::from_path(&time_path)?;
        w.write_record(["point", "seed", "algorithm", "wall_time_s"])?;
        for r in &self.records {
            w.write_record([r.point.to_string(), r.seed.to_string(), r.algorithm.name().to_string(), num(r.wall_time_s)])?;
        }
        w.flush()?;
        Ok(vec![rec_path, fail_path, sum_path, time_path])
    }
}
