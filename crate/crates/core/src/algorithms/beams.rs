use super::{solve_upper_bound, AlgoParams};
use crate::channel::{ChannelParams, ChannelSet};
use crate::formulation::{design_multicast_beams, design_zf_beams, PredesignedBeams};
use crate::rng::derive_seed;
use crate::system::{SystemConfig, Topology};
use crate::{Error, Result};

/// Beams for the gain-only heuristic.
///
/// Unicast directions are zero-forcing on `channels`. Multicast directions
/// average the backhaul-bound beamformers over `realizations` fresh fading and
/// shadowing draws on the same topology.
pub fn predesign_beams(
    cfg: &SystemConfig,
    channels: &ChannelSet,
    topology: &Topology,
    channel_params: &ChannelParams,
    realizations: usize,
    seed: u64,
    params: &AlgoParams,
) -> Result<PredesignedBeams> {
    if realizations == 0 {
        return Err(Error::Empty("multicast beam realizations".into()));
    }
    let mut solutions = Vec::with_capacity(realizations);
    for i in 0..realizations {
        let ch = ChannelSet::generate(topology, cfg, channel_params, derive_seed(seed, "beams/realization", i as u64));
        let ub = solve_upper_bound(cfg, &ch, params)?;
        if !ub.multicast.is_empty() {
            solutions.push(ub.multicast);
        }
    }
    if solutions.is_empty() {
        return Err(Error::Empty("no realization produced multicast beams".into()));
    }
    Ok(PredesignedBeams {
        unicast: design_zf_beams(channels, cfg, params.zf_epsilon),
        multicast: design_multicast_beams(&solutions)?,
    })
}
