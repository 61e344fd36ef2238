use num_complex::Complex64;
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AlgoParams, InitMode, Instance};
use crate::channel::ChannelSet;
use crate::formulation::{BinaryState, PredesignedBeams};
use crate::rng;
use crate::system::SystemConfig;
use crate::verify::{weighted_rate, Allocation};
use crate::{Error, Result};

/// Draws per attempt before a rejection sampler gives up on one cluster.
const REJECTION_LIMIT: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialPoint {
    /// Binary assignment, every entry pinned.
    pub state: BinaryState,
    pub allocation: Allocation,
    pub gains: Option<(Vec<Complex64>, Vec<Complex64>)>,
    pub objective: f64,
    /// Samples drawn, including ones rejected before any solve.
    pub attempts: usize,
    pub solves: usize,
}

/// Whether the counting constraints admit any assignment at all.
fn counting_feasible(cfg: &SystemConfig) -> bool {
    let (b, us) = (cfg.sbs_per_cluster, cfg.ues_served);
    let bmax = cfg.max_serving_sbs.min(b);
    us <= cfg.ues_per_cluster
        && us >= 1
        && cfg.min_serving_sbs <= bmax
        && us * cfg.min_serving_sbs <= b * cfg.sbs_streams
        && b <= us * bmax
        && cfg.ue_rates.len() > 0
        && smallest_cluster_rate(cfg).is_some()
}

/// Lowest cluster rate index that carries `U_served` UEs at the lowest UE rate.
fn smallest_cluster_rate(cfg: &SystemConfig) -> Option<usize> {
    let need = cfg.access_bandwidth_hz * cfg.ues_served as f64 * cfg.ue_rates.rate(0);
    (0..cfg.sbs_rates.len()).find(|&j| cfg.backhaul_bandwidth_hz * cfg.sbs_rates.rate(j) >= need)
}

/// One cluster's sampled choice: cluster rate, (local UE, rate) pairs and per-UE serving masks.
struct ClusterDraw {
    beta: usize,
    rates: Vec<(usize, usize)>,
    masks: Vec<u32>,
}

fn draw_cluster(cfg: &SystemConfig, rng: &mut ChaCha8Rng) -> Option<ClusterDraw> {
    let (b, us, ju, js) = (cfg.sbs_per_cluster, cfg.ues_served, cfg.ue_rates.len(), cfg.sbs_rates.len());
    let jmin = smallest_cluster_rate(cfg)?;
    let beta = rng.random_range(jmin..js);
    let cap = cfg.backhaul_bandwidth_hz * cfg.sbs_rates.rate(beta);
    let mut ues: Vec<usize> = sample(rng, cfg.ues_per_cluster, us).into_vec();
    ues.sort_unstable();

    let mut rates = None;
    for _ in 0..REJECTION_LIMIT {
        let js_: Vec<usize> = (0..us).map(|_| rng.random_range(0..ju)).collect();
        let load: f64 = js_.iter().map(|&j| cfg.ue_rates.rate(j)).sum::<f64>() * cfg.access_bandwidth_hz;
        if load <= cap {
            rates = Some(js_);
            break;
        }
    }
    let rates = rates?;

    let bmax = cfg.max_serving_sbs.min(b);
    let valid: Vec<u32> = (1u32..(1 << b))
        .filter(|m| (cfg.min_serving_sbs..=bmax).contains(&(m.count_ones() as usize)))
        .collect();
    for _ in 0..REJECTION_LIMIT {
        let masks: Vec<u32> = (0..us).map(|_| valid[rng.random_range(0..valid.len())]).collect();
        let ok = (0..b).all(|s| {
            let load = masks.iter().filter(|m| *m & (1 << s) != 0).count();
            load >= 1 && load <= cfg.sbs_streams
        });
        if ok {
            return Some(ClusterDraw { beta, rates: ues.into_iter().zip(rates).collect(), masks });
        }
    }
    None
}

fn assemble(cfg: &SystemConfig, draws: &[ClusterDraw]) -> BinaryState {
    let (ju, js) = (cfg.ue_rates.len(), cfg.sbs_rates.len());
    let mut alpha = vec![0.0; cfg.num_ues() * ju];
    let mut beta = vec![0.0; cfg.clusters * js];
    let mut kappa = vec![0.0; cfg.num_links()];
    for (l, d) in draws.iter().enumerate() {
        beta[l * js + d.beta] = 1.0;
        let sbs0 = cfg.cluster_sbs(l).start;
        for (&(lu, j), &mask) in d.rates.iter().zip(&d.masks) {
            let u = l * cfg.ues_per_cluster + lu;
            alpha[u * ju + j] = 1.0;
            for s in 0..cfg.sbs_per_cluster {
                if mask & (1 << s) != 0 {
                    kappa[cfg.link(sbs0 + s, u)] = 1.0;
                }
            }
        }
    }
    BinaryState::fixed(alpha, beta, kappa)
}

/// Random binary assignments satisfying the counting constraints, each tested by a
/// fixed-binary continuous solve. Sampling is uniform per cluster; the UE rate
/// tuple is drawn conditional on fitting the sampled cluster rate.
pub fn find_initial_point(
    cfg: &SystemConfig,
    channels: &ChannelSet,
    params: &AlgoParams,
    mode: InitMode,
    beams: Option<&PredesignedBeams>,
) -> Result<InitialPoint> {
    if !counting_feasible(cfg) {
        return Err(Error::NoInitialPoint { attempts: 0 });
    }
    let inst = Instance::new(cfg, channels, beams, params)?;
    if mode == InitMode::Gains && beams.is_none() {
        return Err(Error::InvalidConfig("gain mode needs predesigned beams".into()));
    }
    let mut rng = rng::stream(params.seed, "algorithms/initial-point");
    let mut best: Option<InitialPoint> = None;
    let mut found = 0;
    let mut solves = 0;
    let mut attempts = 0;
    for attempt in 1..=params.init_attempts {
        attempts = attempt;
        let draws: Option<Vec<ClusterDraw>> = (0..cfg.clusters).map(|_| draw_cluster(cfg, &mut rng)).collect();
        let Some(draws) = draws else { continue };
        let state = assemble(cfg, &draws);
        solves += 1;
        if let Some((allocation, gains)) = inst.solve_fixed(mode, &state)? {
            let objective = weighted_rate(cfg, &state);
            found += 1;
            if best.as_ref().is_none_or(|b| objective > b.objective) {
                best = Some(InitialPoint { state, allocation, gains, objective, attempts, solves });
            }
            if found >= params.init_feasible_target {
                break;
            }
        }
    }
    best.map(|mut b| {
        b.solves = solves;
        b.attempts = attempts;
        b
    })
    .ok_or(Error::NoInitialPoint { attempts: params.init_attempts })
}
