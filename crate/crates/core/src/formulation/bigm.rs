use serde::{Deserialize, Serialize};

use crate::channel::ChannelSet;
use crate::system::SystemConfig;

/// Big-M constants that switch the SINR cones off when their selector is 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BigMConstants {
    /// Per UE, in units of sqrt(watts).
    pub q_ue: Vec<f64>,
    /// Per SBS, in units of sqrt(watts).
    pub q_sbs: Vec<f64>,
}

fn norm(v: &[num_complex::Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Upper bounds on the interference-plus-noise amplitude seen by each UE and SBS.
///
/// `Q_b² = P_MBS‖g_b‖² + σ²_SBS`. For UEs the bound has to cover coherent
/// combining of the SBSs of a cluster, so the per-cluster channel norms are
/// summed before squaring: `Q_u² = P_SBS Σ_l (Σ_{b∈B_l} ‖h_{b,u}‖)² + σ²_UE`.
/// With one SBS per cluster this is `P_SBS Σ_b ‖h_{b,u}‖² + σ²_UE`.
pub fn compute_bigm(channels: &ChannelSet, cfg: &SystemConfig) -> BigMConstants {
    let q_ue = (0..cfg.num_ues())
        .map(|u| {
            let coherent: f64 = (0..cfg.clusters)
                .map(|l| cfg.cluster_sbs(l).map(|b| norm(channels.h(b, u))).sum::<f64>().powi(2))
                .sum();
            (cfg.sbs_power_w * coherent + cfg.ue_noise_w).sqrt()
        })
        .collect();
    let q_sbs = (0..cfg.num_sbs())
        .map(|b| (cfg.mbs_power_w * norm(channels.g(b)).powi(2) + cfg.sbs_noise_w).sqrt())
        .collect();
    BigMConstants { q_ue, q_sbs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn tiny() -> SystemConfig {
        SystemConfig {
            clusters: 1,
            sbs_per_cluster: 1,
            ues_per_cluster: 1,
            ues_served: 1,
            max_serving_sbs: 1,
            mbs_array: crate::system::ArrayShape::new(1, 2),
            sbs_array: crate::system::ArrayShape::new(1, 2),
            sbs_power_w: 1.0,
            ue_noise_w: 1.0,
            ..SystemConfig::small()
        }
    }

    #[test]
    fn zero_channels_leave_noise() {
        let cfg = SystemConfig::small();
        let m = compute_bigm(&ChannelSet::zeros(&cfg), &cfg);
        assert!(m.q_ue.iter().all(|&q| (q - cfg.ue_noise_w.sqrt()).abs() < 1e-18));
        assert!(m.q_sbs.iter().all(|&q| (q - cfg.sbs_noise_w.sqrt()).abs() < 1e-18));
    }

    #[test]
    fn single_link_hand_value() {
        let cfg = tiny();
        let mut ch = ChannelSet::zeros(&cfg);
        *ch.h_mut(0, 0) = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)];
        let m = compute_bigm(&ch, &cfg);
        assert!((m.q_ue[0] - 3f64.sqrt()).abs() < 1e-15);
        let cfg2 = SystemConfig { sbs_power_w: 2.0, ue_noise_w: 1e-300, ..cfg };
        let m2 = compute_bigm(&ch, &cfg2);
        let m1 = compute_bigm(&ch, &SystemConfig { ue_noise_w: 1e-300, ..tiny() });
        assert!((m2.q_ue[0] / m1.q_ue[0] - 2f64.sqrt()).abs() < 1e-12);
    }
}
