//! Static problem data: dimensions, powers, rate tables, weights and geometry.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::rng;
use rand::Rng;

/// Converts dBm to linear watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

/// Thermal noise power (watts) over `bandwidth_hz` with the given noise figure.
pub fn thermal_noise_watts(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    dbm_to_watts(-174.0 + 10.0 * bandwidth_hz.log10() + noise_figure_db)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrayShape {
    pub rows: usize,
    pub cols: usize,
}

impl ArrayShape {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self { rows, cols }
    }

    pub fn count(&self) -> usize {
        self.rows * self.cols
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateEntry {
    /// Spectral efficiency in bps/Hz.
    pub rate: f64,
    /// Target SINR, linear.
    pub sinr: f64,
}

/// Discrete rate/SINR pairs, ordered from lowest to highest rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RateTable {
    pub entries: Vec<RateEntry>,
}

impl RateTable {
    pub fn new(pairs: &[(f64, f64)]) -> Self {
        Self { entries: pairs.iter().map(|&(rate, sinr)| RateEntry { rate, sinr }).collect() }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn rate(&self, j: usize) -> f64 {
        self.entries[j].rate
    }

    pub fn sinr(&self, j: usize) -> f64 {
        self.entries[j].sinr
    }

    pub fn max_rate(&self) -> f64 {
        self.entries.iter().map(|e| e.rate).fold(0.0, f64::max)
    }

    /// Largest index whose target SINR is met by `sinr`.
    pub fn best_supported(&self, sinr: f64) -> Option<usize> {
        self.entries.iter().rposition(|e| e.sinr <= sinr)
    }

    /// Keeps only the listed entries (in the given order).
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self { entries: indices.iter().map(|&j| self.entries[j]).collect() }
    }

    fn violations(&self, name: &str, out: &mut Vec<Violation>) {
        if self.entries.is_empty() {
            out.push(Violation::new(name, "rate table is empty"));
        }
        for (j, e) in self.entries.iter().enumerate() {
            if !(e.rate > 0.0 && e.sinr > 0.0) || !e.rate.is_finite() || !e.sinr.is_finite() {
                out.push(Violation::new(name, &format!("entry {j} must be positive and finite")));
            }
        }
        for (j, w) in self.entries.windows(2).enumerate() {
            if !(w[1].rate > w[0].rate && w[1].sinr > w[0].sinr) {
                out.push(Violation::new(
                    name,
                    &format!("entries {j} and {} are not strictly increasing", j + 1),
                ));
            }
        }
    }
}

/// Five-level MCS table shared by UEs and SBS clusters.
pub fn default_rate_table() -> RateTable {
    RateTable::new(&[
        (0.2344, 0.2159),
        (0.6016, 0.6610),
        (1.1758, 1.7474),
        (2.7305, 10.6316),
        (5.5547, 95.6974),
    ])
}

/// Every scalar parameter of the network plus the two rate tables.
///
/// SBS `b` belongs to cluster `b / sbs_per_cluster`, UE `u` to cluster
/// `u / ues_per_cluster`. Powers and noise are linear watts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub clusters: usize,
    pub sbs_per_cluster: usize,
    pub ues_per_cluster: usize,
    pub ues_served: usize,
    pub mbs_array: ArrayShape,
    pub sbs_array: ArrayShape,
    pub sbs_streams: usize,
    pub min_serving_sbs: usize,
    pub max_serving_sbs: usize,
    pub mbs_power_w: f64,
    pub sbs_power_w: f64,
    pub access_bandwidth_hz: f64,
    pub backhaul_bandwidth_hz: f64,
    pub sbs_noise_w: f64,
    pub ue_noise_w: f64,
    /// Per-UE priority weights; uniform `1/(L·U)` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default = "default_rate_table")]
    pub ue_rates: RateTable,
    #[serde(default = "default_rate_table")]
    pub sbs_rates: RateTable,
}

impl Default for SystemConfig {
    /// The large evaluation setting: 5 clusters of 3 SBSs and 20 UEs.
    fn default() -> Self {
        let bw = 100e6;
        Self {
            clusters: 5,
            sbs_per_cluster: 3,
            ues_per_cluster: 20,
            ues_served: 4,
            mbs_array: ArrayShape::new(4, 16),
            sbs_array: ArrayShape::new(4, 4),
            sbs_streams: 4,
            min_serving_sbs: 1,
            max_serving_sbs: 3,
            mbs_power_w: dbm_to_watts(36.0),
            sbs_power_w: dbm_to_watts(14.0),
            access_bandwidth_hz: bw,
            backhaul_bandwidth_hz: bw,
            sbs_noise_w: thermal_noise_watts(bw, 7.0),
            ue_noise_w: thermal_noise_watts(bw, 7.0),
            weights: None,
            ue_rates: default_rate_table(),
            sbs_rates: default_rate_table(),
        }
    }
}

impl SystemConfig {
    /// The two-cluster desk-scale setting (2 clusters, 3 SBSs, 6 UEs, 3 served).
    pub fn small() -> Self {
        Self {
            clusters: 2,
            ues_per_cluster: 6,
            ues_served: 3,
            mbs_power_w: dbm_to_watts(27.0),
            ..Self::default()
        }
    }

    pub fn num_sbs(&self) -> usize {
        self.clusters * self.sbs_per_cluster
    }

    pub fn num_ues(&self) -> usize {
        self.clusters * self.ues_per_cluster
    }

    pub fn n_mbs(&self) -> usize {
        self.mbs_array.count()
    }

    pub fn n_sbs(&self) -> usize {
        self.sbs_array.count()
    }

    pub fn sbs_cluster(&self, b: usize) -> usize {
        b / self.sbs_per_cluster
    }

    pub fn ue_cluster(&self, u: usize) -> usize {
        u / self.ues_per_cluster
    }

    pub fn cluster_sbs(&self, l: usize) -> std::ops::Range<usize> {
        l * self.sbs_per_cluster..(l + 1) * self.sbs_per_cluster
    }

    pub fn cluster_ues(&self, l: usize) -> std::ops::Range<usize> {
        l * self.ues_per_cluster..(l + 1) * self.ues_per_cluster
    }

    /// Number of (SBS, UE) pairs inside a cluster, summed over clusters.
    pub fn num_links(&self) -> usize {
        self.clusters * self.sbs_per_cluster * self.ues_per_cluster
    }

    /// Flat index of the in-cluster pair (b, u); both must be in the same cluster.
    pub fn link(&self, b: usize, u: usize) -> usize {
        debug_assert_eq!(self.sbs_cluster(b), self.ue_cluster(u));
        b * self.ues_per_cluster + u % self.ues_per_cluster
    }

    /// Inverse of [`SystemConfig::link`].
    pub fn link_pair(&self, k: usize) -> (usize, usize) {
        let b = k / self.ues_per_cluster;
        let u = self.sbs_cluster(b) * self.ues_per_cluster + k % self.ues_per_cluster;
        (b, u)
    }

    pub fn weight(&self, u: usize) -> f64 {
        match &self.weights {
            Some(w) => w[u],
            None => 1.0 / self.num_ues() as f64,
        }
    }

    pub fn weight_vector(&self) -> Vec<f64> {
        (0..self.num_ues()).map(|u| self.weight(u)).collect()
    }
}

/// One failed check: the offending field and a human-readable reason.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    fn new(field: &str, message: &str) -> Self {
        Self { field: field.to_string(), message: message.to_string() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn mentions(&self, field: &str) -> bool {
        self.violations.iter().any(|v| v.field == field)
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for v in &self.violations {
            writeln!(f, "{}: {}", v.field, v.message)?;
        }
        Ok(())
    }
}

/// Lists every violated invariant of `cfg`; an empty report means valid.
pub fn validate_config(cfg: &SystemConfig) -> ValidationReport {
    let mut out = Vec::new();
    let mut check = |ok: bool, field: &str, msg: &str| {
        if !ok {
            out.push(Violation::new(field, msg));
        }
    };
    check(cfg.clusters >= 1, "clusters", "need at least one cluster");
    check(cfg.sbs_per_cluster >= 1, "sbs_per_cluster", "need at least one SBS per cluster");
    check(cfg.ues_served >= 1, "ues_served", "need at least one served UE");
    check(cfg.ues_per_cluster >= cfg.ues_served, "ues_per_cluster", "fewer UEs than served UEs");
    check(cfg.min_serving_sbs >= 1, "min_serving_sbs", "must be at least 1");
    check(
        cfg.min_serving_sbs <= cfg.max_serving_sbs,
        "max_serving_sbs",
        "must not be below min_serving_sbs",
    );
    check(cfg.max_serving_sbs <= cfg.sbs_per_cluster, "max_serving_sbs", "exceeds SBSs per cluster");
    check(cfg.sbs_streams >= 1, "sbs_streams", "must be at least 1");
    check(
        cfg.ues_served * cfg.min_serving_sbs <= cfg.sbs_per_cluster * cfg.sbs_streams,
        "C7/C14 conflict",
        "served UEs need more streams than the cluster's SBSs provide",
    );
    check(
        cfg.sbs_per_cluster <= cfg.ues_served * cfg.max_serving_sbs,
        "C8/C9 conflict",
        "some SBS cannot serve any admitted UE",
    );
    check(cfg.mbs_array.count() >= 1, "mbs_array", "empty array");
    check(cfg.sbs_array.count() >= 1, "sbs_array", "empty array");
    for (name, v) in [
        ("mbs_power_w", cfg.mbs_power_w),
        ("sbs_power_w", cfg.sbs_power_w),
        ("access_bandwidth_hz", cfg.access_bandwidth_hz),
        ("backhaul_bandwidth_hz", cfg.backhaul_bandwidth_hz),
        ("sbs_noise_w", cfg.sbs_noise_w),
        ("ue_noise_w", cfg.ue_noise_w),
    ] {
        check(v > 0.0 && v.is_finite(), name, "must be positive and finite");
    }
    if let Some(w) = &cfg.weights {
        check(w.len() == cfg.num_ues(), "weights", "length must equal L·U");
        check(w.iter().all(|&x| x >= 0.0 && x.is_finite()), "weights", "must be nonnegative");
        let sum: f64 = w.iter().sum();
        check((sum - 1.0).abs() <= 1e-12, "weights", "must sum to 1");
    }
    cfg.ue_rates.violations("ue_rates", &mut out);
    cfg.sbs_rates.violations("sbs_rates", &mut out);
    ValidationReport { violations: out }
}

/// Access throughput (bps) when every cluster serves `U_served` UEs at the lowest rate.
pub fn lower_bound_rate(cfg: &SystemConfig) -> f64 {
    let r1 = cfg.ue_rates.entries.first().map(|e| e.rate).unwrap_or(0.0);
    r1 * cfg.access_bandwidth_hz * (cfg.ues_served * cfg.clusters) as f64
}

/// Geometry knobs of the default topology generator (meters, degrees).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologyParams {
    pub mbs_height_m: f64,
    pub sbs_height_m: f64,
    pub ue_height_m: f64,
    /// Horizontal distance from the MBS to every cluster center.
    pub cluster_distance_m: f64,
    /// Azimuth step between neighboring cluster centers.
    pub cluster_spacing_deg: f64,
    /// Radius of the circle the cluster's SBSs sit on.
    pub sbs_radius_m: f64,
    /// Radius of the disk UEs are dropped in.
    pub ue_radius_m: f64,
}

impl Default for TopologyParams {
    fn default() -> Self {
        Self {
            mbs_height_m: 25.0,
            sbs_height_m: 10.0,
            ue_height_m: 1.5,
            cluster_distance_m: 150.0,
            cluster_spacing_deg: 25.0,
            sbs_radius_m: 20.0,
            ue_radius_m: 30.0,
        }
    }
}

/// Unit boresight direction of an array.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Orientation {
    pub azimuth: f64,
    pub elevation: f64,
}

impl Orientation {
    /// Orientation pointing from `from` to `to`.
    pub fn toward(from: [f64; 3], to: [f64; 3]) -> Self {
        let d = [to[0] - from[0], to[1] - from[1], to[2] - from[2]];
        let horiz = d[0].hypot(d[1]);
        Self { azimuth: d[1].atan2(d[0]), elevation: d[2].atan2(horiz) }
    }

    pub fn unit(&self) -> [f64; 3] {
        let (ce, se) = (self.elevation.cos(), self.elevation.sin());
        [ce * self.azimuth.cos(), ce * self.azimuth.sin(), se]
    }

    /// Azimuth/elevation of `dir` measured in the frame whose x axis is this boresight.
    pub fn local_angles(&self, dir: [f64; 3]) -> (f64, f64) {
        let n = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
        let d = [dir[0] / n, dir[1] / n, dir[2] / n];
        let (ca, sa) = (self.azimuth.cos(), self.azimuth.sin());
        let (ce, se) = (self.elevation.cos(), self.elevation.sin());
        let x = [ce * ca, ce * sa, se];
        let y = [-sa, ca, 0.0];
        let z = [-se * ca, -se * sa, ce];
        let dot = |a: [f64; 3]| a[0] * d[0] + a[1] * d[1] + a[2] * d[2];
        let (dx, dy, dz) = (dot(x), dot(y), dot(z));
        (dy.atan2(dx), dz.clamp(-1.0, 1.0).asin())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterGeometry {
    pub center: [f64; 3],
    pub sbs: Vec<[f64; 3]>,
    pub sbs_boresight: Vec<Orientation>,
    pub ues: Vec<[f64; 3]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub mbs: [f64; 3],
    pub mbs_boresight: Orientation,
    pub clusters: Vec<ClusterGeometry>,
}

impl Topology {
    /// Places clusters on an arc in front of the MBS, SBSs on a circle around
    /// each center (facing it) and UEs uniformly in a disk. SBS positions are
    /// deterministic; only UE drops depend on `seed`.
    pub fn generate(cfg: &SystemConfig, params: &TopologyParams, seed: u64) -> Self {
        let mut rng = rng::stream(seed, "topology/ue");
        let mbs = [0.0, 0.0, params.mbs_height_m];
        let spacing = params.cluster_spacing_deg.to_radians();
        let mut clusters = Vec::with_capacity(cfg.clusters);
        for l in 0..cfg.clusters {
            let az = (l as f64 - (cfg.clusters as f64 - 1.0) / 2.0) * spacing;
            let c = [
                params.cluster_distance_m * az.cos(),
                params.cluster_distance_m * az.sin(),
                params.ue_height_m,
            ];
            let mut sbs = Vec::new();
            let mut sbs_boresight = Vec::new();
            for i in 0..cfg.sbs_per_cluster {
                // Start the ring facing the MBS so one SBS always has the shortest backhaul hop.
                let phi = az + PI + 2.0 * PI * i as f64 / cfg.sbs_per_cluster as f64;
                let p = [
                    c[0] + params.sbs_radius_m * phi.cos(),
                    c[1] + params.sbs_radius_m * phi.sin(),
                    params.sbs_height_m,
                ];
                sbs_boresight.push(Orientation::toward(p, c));
                sbs.push(p);
            }
            let ues = (0..cfg.ues_per_cluster)
                .map(|_| {
                    let r = params.ue_radius_m * rng.random::<f64>().sqrt();
                    let t = 2.0 * PI * rng.random::<f64>();
                    [c[0] + r * t.cos(), c[1] + r * t.sin(), params.ue_height_m]
                })
                .collect();
            clusters.push(ClusterGeometry { center: c, sbs, sbs_boresight, ues });
        }
        let centroid = [params.cluster_distance_m, 0.0, params.sbs_height_m];
        Self { mbs, mbs_boresight: Orientation::toward(mbs, centroid), clusters }
    }

    pub fn sbs_position(&self, cfg: &SystemConfig, b: usize) -> [f64; 3] {
        self.clusters[cfg.sbs_cluster(b)].sbs[b % cfg.sbs_per_cluster]
    }

    pub fn sbs_orientation(&self, cfg: &SystemConfig, b: usize) -> Orientation {
        self.clusters[cfg.sbs_cluster(b)].sbs_boresight[b % cfg.sbs_per_cluster]
    }

    pub fn ue_position(&self, cfg: &SystemConfig, u: usize) -> [f64; 3] {
        self.clusters[cfg.ue_cluster(u)].ues[u % cfg.ues_per_cluster]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        assert!(validate_config(&SystemConfig::default()).is_valid());
        assert!(validate_config(&SystemConfig::small()).is_valid());
    }

    #[test]
    fn stream_conflict_is_reported() {
        let cfg = SystemConfig {
            sbs_per_cluster: 1,
            max_serving_sbs: 1,
            ues_served: 5,
            ..SystemConfig::default()
        };
        let report = validate_config(&cfg);
        assert!(report.mentions("C7/C14 conflict"), "{report}");
    }

    #[test]
    fn weights_must_be_normalized() {
        let n = SystemConfig::default().num_ues();
        let cfg = SystemConfig { weights: Some(vec![0.9 / n as f64; n]), ..SystemConfig::default() };
        assert!(validate_config(&cfg).mentions("weights"));
    }

    #[test]
    fn rate_table_values() {
        let t = default_rate_table();
        assert_eq!(t.entries[0], RateEntry { rate: 0.2344, sinr: 0.2159 });
        assert_eq!(t.entries[3], RateEntry { rate: 2.7305, sinr: 10.6316 });
        assert!(t.entries.windows(2).all(|w| w[1].rate > w[0].rate && w[1].sinr > w[0].sinr));
    }

    #[test]
    fn lower_bound_examples() {
        let cfg = SystemConfig::default();
        assert!((lower_bound_rate(&cfg) - 468.8e6).abs() < 1e-6);
        let one = SystemConfig { clusters: 1, ues_served: 1, ..cfg.clone() };
        assert!((lower_bound_rate(&one) - 23.44e6).abs() < 1e-6);
        let double = SystemConfig { ues_served: 8, ..cfg.clone() };
        assert_eq!(lower_bound_rate(&double), 2.0 * lower_bound_rate(&cfg));
    }

    #[test]
    fn best_supported_is_monotone() {
        let t = default_rate_table();
        assert_eq!(t.best_supported(0.1), None);
        assert_eq!(t.best_supported(0.2159), Some(0));
        assert_eq!(t.best_supported(1e6), Some(4));
        let mut prev = None;
        for k in 0..2000 {
            let cur = t.best_supported(k as f64 * 0.06);
            assert!(cur >= prev);
            prev = cur;
        }
    }

    #[test]
    fn link_indexing_roundtrips() {
        let cfg = SystemConfig::small();
        for k in 0..cfg.num_links() {
            let (b, u) = cfg.link_pair(k);
            assert_eq!(cfg.sbs_cluster(b), cfg.ue_cluster(u));
            assert_eq!(cfg.link(b, u), k);
        }
    }

    #[test]
    fn config_json_roundtrip() {
        let cfg = SystemConfig::small();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: SystemConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn local_angles_of_boresight_are_zero() {
        let o = Orientation::toward([0.0, 0.0, 25.0], [100.0, 30.0, 10.0]);
        let (az, el) = o.local_angles(o.unit());
        assert!(az.abs() < 1e-12 && el.abs() < 1e-12);
    }

    #[test]
    fn topology_has_one_owner_per_node() {
        let cfg = SystemConfig::small();
        let topo = Topology::generate(&cfg, &TopologyParams::default(), 3);
        assert_eq!(topo.clusters.len(), cfg.clusters);
        for c in &topo.clusters {
            assert_eq!(c.sbs.len(), cfg.sbs_per_cluster);
            assert_eq!(c.ues.len(), cfg.ues_per_cluster);
            let n = c.sbs_boresight.iter().map(|o| o.unit()).map(|v| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt());
            assert!(n.into_iter().all(|x| (x - 1.0).abs() < 1e-12));
        }
    }
}
