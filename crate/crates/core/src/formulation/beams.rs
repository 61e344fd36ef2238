use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelSet;
use crate::system::SystemConfig;
use crate::{Error, Result};

/// Unit-norm beam directions whose complex gains the reduced program optimizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredesignedBeams {
    /// One direction per in-cluster link, indexed like [`SystemConfig::link`].
    pub unicast: Vec<Vec<Complex64>>,
    /// One direction per cluster.
    pub multicast: Vec<Vec<Complex64>>,
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn unit_or_first_axis(v: Vec<Complex64>) -> Vec<Complex64> {
    let n = norm(&v);
    if n > 0.0 && n.is_finite() {
        v.into_iter().map(|c| c / n).collect()
    } else {
        let mut e = vec![Complex64::default(); v.len()];
        e[0] = Complex64::new(1.0, 0.0);
        e
    }
}

/// Regularized zero-forcing directions, computed per SBS over its cluster's UEs:
/// `W = H (H^H H + ε‖H‖²_F I)^{-1}` with columns normalized.
pub fn design_zf_beams(channels: &ChannelSet, cfg: &SystemConfig, epsilon: f64) -> Vec<Vec<Complex64>> {
    let n = cfg.n_sbs();
    let mut out = vec![Vec::new(); cfg.num_links()];
    for b in 0..cfg.num_sbs() {
        let ues: Vec<usize> = cfg.cluster_ues(cfg.sbs_cluster(b)).collect();
        let h = DMatrix::from_fn(n, ues.len(), |r, c| channels.h(b, ues[c])[r]);
        let fro2: f64 = h.iter().map(|c| c.norm_sqr()).sum();
        let gram = h.adjoint() * &h + DMatrix::identity(ues.len(), ues.len()) * Complex64::new(epsilon * fro2, 0.0);
        let w = gram.try_inverse().map(|inv| &h * inv);
        for (c, &u) in ues.iter().enumerate() {
            let col: Vec<Complex64> = match &w {
                Some(w) => w.column(c).iter().copied().collect(),
                None => vec![Complex64::default(); n],
            };
            out[cfg.link(b, u)] = unit_or_first_axis(col);
        }
    }
    out
}

/// Rotates `v` so that its first entry is real and nonnegative.
pub fn phase_align(v: &[Complex64]) -> Vec<Complex64> {
    let a = v[0].norm();
    if a == 0.0 {
        return v.to_vec();
    }
    let rot = v[0].conj() / a;
    v.iter().map(|c| c * rot).collect()
}

/// Averages phase-aligned, normalized multicast beamformers over realizations.
///
/// `solutions[r][l]` is the beamformer of cluster `l` in realization `r`.
pub fn design_multicast_beams(solutions: &[Vec<Vec<Complex64>>]) -> Result<Vec<Vec<Complex64>>> {
    let first = solutions.first().ok_or_else(|| Error::Empty("no multicast solutions".into()))?;
    let (clusters, dim) = (first.len(), first.first().map_or(0, |v| v.len()));
    let mut acc = vec![vec![Complex64::default(); dim]; clusters];
    for sol in solutions {
        if sol.len() != clusters || sol.iter().any(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch("multicast solutions differ in shape".into()));
        }
        for (l, m) in sol.iter().enumerate() {
            let n = norm(m);
            if n == 0.0 {
                continue;
            }
            for (a, c) in acc[l].iter_mut().zip(phase_align(m)) {
                *a += c / n;
            }
        }
    }
    acc.into_iter()
        .map(|v| {
            let n = norm(&v) / solutions.len() as f64;
            if n < 1e-9 {
                Err(Error::DegenerateAverage)
            } else {
                Ok(unit_or_first_axis(v))
            }
        })
        .collect()
}
