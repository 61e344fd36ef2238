#![allow(dead_code)]

use rrm_core::channel::{ChannelParams, ChannelSet};
use rrm_core::system::{default_rate_table, dbm_to_watts, ArrayShape, SystemConfig, Topology, TopologyParams};

/// Small instance with the first `j` table entries for both rate tables.
pub fn tiny(l: usize, b: usize, u: usize, served: usize, j: usize) -> SystemConfig {
    let idx: Vec<usize> = (0..j).collect();
    tiny_rates(l, b, u, served, &idx)
}

/// Small instance whose rate tables keep the listed entries of the default table.
pub fn tiny_rates(l: usize, b: usize, u: usize, served: usize, entries: &[usize]) -> SystemConfig {
    let table = default_rate_table().subset(entries);
    SystemConfig {
        clusters: l,
        sbs_per_cluster: b,
        ues_per_cluster: u,
        ues_served: served,
        mbs_array: ArrayShape::new(2, 2),
        sbs_array: ArrayShape::new(2, 2),
        max_serving_sbs: b,
        mbs_power_w: dbm_to_watts(27.0),
        sbs_power_w: dbm_to_watts(14.0),
        ue_rates: table.clone(),
        sbs_rates: table,
        ..SystemConfig::small()
    }
}

/// S1 sizes with the given powers in dBm.
pub fn s1(mbs_dbm: f64, sbs_dbm: f64) -> SystemConfig {
    SystemConfig { mbs_power_w: dbm_to_watts(mbs_dbm), sbs_power_w: dbm_to_watts(sbs_dbm), ..SystemConfig::small() }
}

pub fn draw(cfg: &SystemConfig, seed: u64) -> (Topology, ChannelSet) {
    let topo = Topology::generate(cfg, &TopologyParams::default(), seed);
    let ch = ChannelSet::generate(&topo, cfg, &ChannelParams::default(), seed);
    (topo, ch)
}

pub fn channels(cfg: &SystemConfig, seed: u64) -> ChannelSet {
    draw(cfg, seed).1
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-12)
}
