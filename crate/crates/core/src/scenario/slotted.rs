use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{solve_allocation, AlgorithmKind, ScenarioSpec};
use crate::algorithms::AlgoParams;
use crate::channel::ChannelSet;
use crate::rng::derive_seed;
use crate::system::{SystemConfig, Topology};
use crate::verify::delivered_throughput;
use crate::{Error, Result};

/// Settings of the round-robin slotted run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SlottedSettings {
    /// Number of full rounds; one round serves every UE once.
    pub rounds: usize,
    pub slot_duration_s: f64,
    pub algorithm: AlgorithmKind,
    /// Added to each UE's cumulative bits before taking the reciprocal.
    pub floor_bits: f64,
    /// Draw a new channel realization at the start of every round instead of keeping one.
    pub fresh_channels: bool,
}

impl Default for SlottedSettings {
    fn default() -> Self {
        Self {
            rounds: 10,
            slot_duration_s: 1e-3,
            algorithm: AlgorithmKind::Rnp1,
            floor_bits: 1.0,
            fresh_channels: true,
        }
    }
}

impl SlottedSettings {
    pub fn validate(&self, cfg: &SystemConfig) -> Result<()> {
        if cfg.ues_served == 0 || cfg.ues_per_cluster % cfg.ues_served != 0 {
            return Err(Error::InvalidConfig(format!(
                "slotted run needs ues_per_cluster ({}) divisible by ues_served ({})",
                cfg.ues_per_cluster, cfg.ues_served
            )));
        }
        if self.rounds == 0 {
            return Err(Error::InvalidConfig("slotted rounds must be at least 1".into()));
        }
        if !(self.slot_duration_s > 0.0) || !(self.floor_bits > 0.0) {
            return Err(Error::InvalidConfig("slot duration and floor must be positive".into()));
        }
        if !matches!(self.algorithm, AlgorithmKind::Bnc | AlgorithmKind::Rnp1) {
            return Err(Error::InvalidConfig("slotted run supports BnC and RnP1".into()));
        }
        Ok(())
    }
}

/// Scheduler state between slots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlottedState {
    pub slot: usize,
    pub slot_duration_s: f64,
    pub cumulative_bits: Vec<f64>,
    pub weights: Vec<f64>,
    /// UEs served in each past slot.
    pub served: Vec<Vec<usize>>,
}

impl SlottedState {
    pub fn new(cfg: &SystemConfig, slot_duration_s: f64) -> Self {
        Self {
            slot: 0,
            slot_duration_s,
            cumulative_bits: vec![0.0; cfg.num_ues()],
            weights: cfg.weight_vector(),
            served: Vec::new(),
        }
    }

    /// Reciprocal-cumulative-throughput weights, normalized to sum 1.
    pub fn update_weights(&mut self, floor_bits: f64) {
        let raw: Vec<f64> = self.cumulative_bits.iter().map(|&c| 1.0 / (c + floor_bits)).collect();
        let total: f64 = raw.iter().sum();
        self.weights = raw.into_iter().map(|w| w / total).collect();
    }
}

/// Per-UE outcome of one slot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub seed: u64,
    pub round: usize,
    pub slot: usize,
    pub ue: usize,
    pub served: bool,
    /// Delivered rate index, `None` when unserved or not decoded.
    pub rate_index: Option<usize>,
    pub bits: f64,
    pub cumulative_bits: f64,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlottedOutput {
    pub scenario: String,
    pub seed: u64,
    pub records: Vec<SlotRecord>,
    /// `[round][cluster]` max/min cumulative throughput among the cluster's UEs after the round.
    pub fairness: Vec<Vec<f64>>,
    /// Slots where the algorithm produced no allocation; their batch is served at zero rate.
    pub failed_slots: Vec<(usize, String)>,
    pub final_state: SlottedState,
}

fn max_min_ratio(v: &[f64]) -> f64 {
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
    if min > 0.0 { max / min } else { f64::INFINITY }
}

/// Serves disjoint batches of `U_served` UEs per cluster until every UE has been
/// served once, then refreshes the weights and starts the next round.
///
/// Within a round each slot solves the allocation problem restricted to the UEs
/// not yet served, so the optimizer picks which of them go first.
pub fn run_slotted(spec: &ScenarioSpec, seed: u64) -> Result<SlottedOutput> {
    let settings = spec.slotted.clone().unwrap_or_default();
    let point = spec
        .points()
        .into_iter()
        .next()
        .ok_or_else(|| Error::Empty("sweep points".into()))?;
    let cfg = spec.config_for(&point)?;
    settings.validate(&cfg)?;
    let topology = Topology::generate(&cfg, &spec.topology, seed);
    let fixed = ChannelSet::generate(&topology, &cfg, &spec.channel, seed);
    let params = AlgoParams { seed, ..spec.params.clone() };

    let (l_count, u_per, served) = (cfg.clusters, cfg.ues_per_cluster, cfg.ues_served);
    let slots_per_round = u_per / served;
    let mut state = SlottedState::new(&cfg, settings.slot_duration_s);
    let mut records = Vec::new();
    let mut fairness = Vec::new();
    let mut failed_slots = Vec::new();

    for round in 0..settings.rounds {
        let mut remaining: Vec<Vec<usize>> = (0..l_count).map(|l| cfg.cluster_ues(l).collect()).collect();
        let channels = if settings.fresh_channels && round > 0 {
            ChannelSet::generate(&topology, &cfg, &spec.channel, derive_seed(seed, "slotted/channels", round as u64))
        } else {
            fixed.clone()
        };
        for _ in 0..slots_per_round {
            let slot = state.slot;
            let ues: Vec<usize> = remaining.iter().flatten().copied().collect();
            let mut sub = cfg.clone();
            sub.ues_per_cluster = remaining[0].len();
            let w: Vec<f64> = ues.iter().map(|&u| state.weights[u]).collect();
            let total: f64 = w.iter().sum();
            sub.weights = Some(w.into_iter().map(|x| x / total).collect());
            let sub_ch = channels.restrict_ues(&ues);
            let sub_params = AlgoParams { seed: derive_seed(seed, "slotted/params", slot as u64), ..params.clone() };

            // Sub-UE index -> (delivered rate index) for the batch chosen this slot.
            let mut chosen: Vec<(usize, Option<usize>)> = Vec::new();
            let outcome = solve_allocation(settings.algorithm, spec, &sub, &sub_ch, &topology, &sub_params)
                .and_then(|sol| {
                    let ok = sol.has_allocation();
                    sol.allocation
                        .filter(|_| ok)
                        .ok_or_else(|| Error::Solver(sol.message.unwrap_or_else(|| format!("{:?}", sol.status))))
                });
            match outcome {
                Ok(alloc) => {
                    let planned = alloc.ue_rates(&sub);
                    let got = delivered_throughput(&sub, &sub_ch, &alloc);
                    for (i, p) in planned.iter().enumerate() {
                        if p.is_some() {
                            chosen.push((i, got.ue_rates[i]));
                        }
                    }
                }
                Err(e) => {
                    log::warn!("slot {slot}: {e}");
                    failed_slots.push((slot, e.to_string()));
                    for l in 0..l_count {
                        for k in 0..served {
                            chosen.push((l * sub.ues_per_cluster + k, None));
                        }
                    }
                }
            }

            let mut bits = vec![0.0; cfg.num_ues()];
            let mut rate_of = vec![None; cfg.num_ues()];
            let mut served_now = Vec::new();
            for &(i, rate) in &chosen {
                let u = ues[i];
                served_now.push(u);
                rate_of[u] = rate;
                if let Some(j) = rate {
                    bits[u] = cfg.ue_rates.rate(j) * cfg.access_bandwidth_hz * settings.slot_duration_s;
                }
            }
            served_now.sort_unstable();
            for l in 0..l_count {
                remaining[l].retain(|u| !served_now.contains(u));
            }
            for u in 0..cfg.num_ues() {
                state.cumulative_bits[u] += bits[u];
                records.push(SlotRecord {
                    seed,
                    round,
                    slot,
                    ue: u,
                    served: served_now.contains(&u),
                    rate_index: rate_of[u],
                    bits: bits[u],
                    cumulative_bits: state.cumulative_bits[u],
                    weight: state.weights[u],
                });
            }
            state.served.push(served_now);
            state.slot += 1;
        }
        fairness.push(
            (0..l_count)
                .map(|l| max_min_ratio(&state.cumulative_bits[cfg.cluster_ues(l)]))
                .collect(),
        );
        state.update_weights(settings.floor_bits);
    }
    Ok(SlottedOutput { scenario: spec.id.clone(), seed, records, fairness, failed_slots, final_state: state })
}

impl SlottedOutput {
    /// Writes `<id>_slots_<seed>.csv` and `<id>_fairness_<seed>.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let slots = dir.join(format!("{}_slots_{}.csv", self.scenario, self.seed));
        let mut w = csv::Writer::from_path(&slots)?;
        w.write_record(["seed", "round", "slot", "ue", "served", "rate_index", "bits", "cumulative_bits", "weight"])?;
        for r in &self.records {
            w.write_record([
                r.seed.to_string(),
                r.round.to_string(),
                r.slot.to_string(),
                r.ue.to_string(),
                r.served.to_string(),
                r.rate_index.map_or("-1".to_string(), |j| j.to_string()),
                format!("{:?}", r.bits),
                format!("{:?}", r.cumulative_bits),
                format!("{:?}", r.weight),
            ])?;
        }
        w.flush()?;
        let fair = dir.join(format!("{}_fairness_{}.csv", self.scenario, self.seed));
        let mut w = csv::Writer::from_path(&fair)?;
        w.write_record(["seed", "round", "cluster", "max_min_ratio"])?;
        for (round, row) in self.fairness.iter().enumerate() {
            for (l, ratio) in row.iter().enumerate() {
                w.write_record([
                    self.seed.to_string(),
                    round.to_string(),
                    l.to_string(),
                    format!("{ratio:?}"),
                ])?;
            }
        }
        w.flush()?;
        Ok(vec![slots, fair])
    }
}
