use serde::{Deserialize, Serialize};

use crate::system::SystemConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayoutKind {
    /// Full beamformers `m_l`, `w_{b,u}` plus powers and all binaries.
    Full,
    /// Complex gains `t_l`, `v_{b,u}` on predesigned beams plus powers and all binaries.
    Gains,
    /// Multicast beamformers and cluster rate binaries only.
    Backhaul,
}

/// Index map from semantic variables to program columns.
///
/// Complex variables occupy two consecutive columns (real, imaginary).
/// Links `k` follow [`SystemConfig::link`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariableLayout {
    pub kind: LayoutKind,
    pub clusters: usize,
    pub links: usize,
    pub ues: usize,
    pub n_mbs: usize,
    pub n_sbs: usize,
    pub j_ue: usize,
    pub j_sbs: usize,
    multicast: usize,
    unicast: usize,
    power: usize,
    kappa: usize,
    beta: usize,
    alpha: usize,
    total: usize,
}

impl VariableLayout {
    pub fn new(cfg: &SystemConfig, kind: LayoutKind) -> Self {
        let (l, links, ues) = (cfg.clusters, cfg.num_links(), cfg.num_ues());
        let (j_ue, j_sbs) = (cfg.ue_rates.len(), cfg.sbs_rates.len());
        let (mc_len, uc_len) = match kind {
            LayoutKind::Full => (2 * l * cfg.n_mbs(), 2 * links * cfg.n_sbs()),
            LayoutKind::Gains => (2 * l, 2 * links),
            LayoutKind::Backhaul => (2 * l * cfg.n_mbs(), 0),
        };
        let with_access = kind != LayoutKind::Backhaul;
        let multicast = 0;
        let unicast = multicast + mc_len;
        let power = unicast + uc_len;
        let kappa = power + if with_access { links } else { 0 };
        let beta = kappa + if with_access { links } else { 0 };
        let alpha = beta + l * j_sbs;
        let total = alpha + if with_access { ues * j_ue } else { 0 };
        Self {
            kind,
            clusters: l,
            links,
            ues,
            n_mbs: cfg.n_mbs(),
            n_sbs: cfg.n_sbs(),
            j_ue,
            j_sbs,
            multicast,
            unicast,
            power,
            kappa,
            beta,
            alpha,
            total,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.total
    }

    /// Antennas per multicast variable block (1 for gains).
    pub fn multicast_width(&self) -> usize {
        match self.kind {
            LayoutKind::Gains => 1,
            _ => self.n_mbs,
        }
    }

    pub fn unicast_width(&self) -> usize {
        match self.kind {
            LayoutKind::Gains => 1,
            _ => self.n_sbs,
        }
    }

    /// (re, im) columns of element `n` of the multicast variable of cluster `l`.
    pub fn multicast(&self, l: usize, n: usize) -> (usize, usize) {
        let i = self.multicast + 2 * (l * self.multicast_width() + n);
        (i, i + 1)
    }

    /// (re, im) columns of element `n` of the unicast variable of link `k`.
    pub fn unicast(&self, k: usize, n: usize) -> (usize, usize) {
        debug_assert!(self.kind != LayoutKind::Backhaul);
        let i = self.unicast + 2 * (k * self.unicast_width() + n);
        (i, i + 1)
    }

    pub fn power(&self, k: usize) -> usize {
        self.power + k
    }

    pub fn kappa(&self, k: usize) -> usize {
        self.kappa + k
    }

    pub fn beta(&self, l: usize, j: usize) -> usize {
        self.beta + l * self.j_sbs + j
    }

    pub fn alpha(&self, u: usize, j: usize) -> usize {
        self.alpha + u * self.j_ue + j
    }

    pub fn has_access(&self) -> bool {
        self.kind != LayoutKind::Backhaul
    }

    pub fn num_alpha(&self) -> usize {
        if self.has_access() { self.ues * self.j_ue } else { 0 }
    }

    pub fn num_kappa(&self) -> usize {
        if self.has_access() { self.links } else { 0 }
    }

    pub fn num_beta(&self) -> usize {
        self.clusters * self.j_sbs
    }

    /// Binary columns in branching order: α, then β, then κ.
    pub fn binary_columns(&self) -> Vec<usize> {
        let mut out: Vec<usize> = (0..self.num_alpha()).map(|i| self.alpha + i).collect();
        out.extend((0..self.num_beta()).map(|i| self.beta + i));
        out.extend((0..self.num_kappa()).map(|i| self.kappa + i));
        out
    }

    /// Variable count of the full mixed-integer program, in closed form.
    pub fn closed_form_full(cfg: &SystemConfig) -> usize {
        let (l, b, u) = (cfg.clusters, cfg.sbs_per_cluster, cfg.ues_per_cluster);
        2 * l * cfg.n_mbs() + 2 * l * b * u * cfg.n_sbs() + 2 * l * b * u
            + l * cfg.sbs_rates.len()
            + l * u * cfg.ue_rates.len()
    }

    /// Variable count of the gain-only program, in closed form.
    pub fn closed_form_gains(cfg: &SystemConfig) -> usize {
        let (l, b, u) = (cfg.clusters, cfg.sbs_per_cluster, cfg.ues_per_cluster);
        2 * l + 4 * l * b * u + l * cfg.sbs_rates.len() + l * u * cfg.ue_rates.len()
    }

    /// Variable count of the backhaul-only bound program, in closed form.
    pub fn closed_form_backhaul(cfg: &SystemConfig) -> usize {
        cfg.clusters * cfg.sbs_rates.len() + 2 * cfg.clusters * cfg.n_mbs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_a_bijection() {
        let cfg = SystemConfig { clusters: 2, ues_per_cluster: 3, ues_served: 2, ..SystemConfig::small() };
        for kind in [LayoutKind::Full, LayoutKind::Gains, LayoutKind::Backhaul] {
            let lay = VariableLayout::new(&cfg, kind);
            let mut seen = vec![false; lay.num_vars()];
            let mut mark = |i: usize| {
                assert!(!seen[i], "{kind:?}: column {i} mapped twice");
                seen[i] = true;
            };
            for l in 0..cfg.clusters {
                for n in 0..lay.multicast_width() {
                    let (r, i) = lay.multicast(l, n);
                    mark(r);
                    mark(i);
                }
                for j in 0..lay.j_sbs {
                    mark(lay.beta(l, j));
                }
            }
            if lay.has_access() {
                for k in 0..lay.links {
                    for n in 0..lay.unicast_width() {
                        let (r, i) = lay.unicast(k, n);
                        mark(r);
                        mark(i);
                    }
                    mark(lay.power(k));
                    mark(lay.kappa(k));
                }
                for u in 0..lay.ues {
                    for j in 0..lay.j_ue {
                        mark(lay.alpha(u, j));
                    }
                }
            }
            assert!(seen.iter().all(|&s| s), "{kind:?}: unmapped column");
        }
    }

    #[test]
    fn closed_forms() {
        assert_eq!(VariableLayout::closed_form_full(&SystemConfig::small()), 1550);
        assert_eq!(VariableLayout::closed_form_gains(&SystemConfig::default()), 1735);
        let cfg = SystemConfig::small();
        assert_eq!(VariableLayout::new(&cfg, LayoutKind::Full).num_vars(), 1550);
    }
}
