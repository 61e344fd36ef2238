//! Backhaul and access channel realizations.
//!
//! The propagation model is a reduced form of the 3GPP urban macro/micro
//! models: distance-based path loss, log-normal shadowing, and a
//! planar-array steering vector (LOS) or i.i.d. Rayleigh scattering (NLOS).
//! Backhaul links are always LOS; access links draw LOS/NLOS from the UMi
//! distance-based probability.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::PI;

use crate::rng;
use crate::system::{ArrayShape, Orientation, SystemConfig, Topology};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanarArray {
    pub rows: usize,
    pub cols: usize,
    /// Element pitch in wavelengths.
    pub spacing: f64,
    pub boresight: Orientation,
}

impl PlanarArray {
    pub fn new(shape: ArrayShape, spacing: f64, boresight: Orientation) -> Self {
        Self { rows: shape.rows, cols: shape.cols, spacing, boresight }
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Response toward a direction given in global coordinates.
    pub fn response_toward(&self, dir: [f64; 3]) -> Vec<Complex64> {
        let (az, el) = self.boresight.local_angles(dir);
        steering_vector(self, az, el)
    }
}

/// UPA response for array-frame angles; element (m, n) is stored at `m·cols + n`.
pub fn steering_vector(array: &PlanarArray, azimuth: f64, elevation: f64) -> Vec<Complex64> {
    let v = elevation.sin();
    let h = azimuth.sin() * elevation.cos();
    let mut out = Vec::with_capacity(array.len());
    for m in 0..array.rows {
        for n in 0..array.cols {
            let phase = 2.0 * PI * array.spacing * (m as f64 * v + n as f64 * h);
            out.push(Complex64::from_polar(1.0, phase));
        }
    }
    out
}

/// Propagation knobs. Shadowing deviations are in dB.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    pub carrier_hz: f64,
    pub element_spacing: f64,
    pub shadowing: bool,
    pub backhaul_shadowing_db: f64,
    pub access_los_shadowing_db: f64,
    pub access_nlos_shadowing_db: f64,
    /// Rician K-factor of LOS access links; `None` means purely specular.
    pub rician_k_db: Option<f64>,
    /// Overrides the LOS draw for every access link when set.
    pub force_los: Option<bool>,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            carrier_hz: 41e9,
            element_spacing: 0.5,
            shadowing: true,
            backhaul_shadowing_db: 4.0,
            access_los_shadowing_db: 4.0,
            access_nlos_shadowing_db: 7.82,
            rician_k_db: Some(10.0),
            force_los: None,
        }
    }
}

fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn distance_2d(a: [f64; 3], b: [f64; 3]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// UMa LOS path loss in dB (3-D distance in meters).
pub fn uma_los_db(d3d: f64, carrier_hz: f64) -> f64 {
    28.0 + 22.0 * d3d.max(1.0).log10() + 20.0 * (carrier_hz / 1e9).log10()
}

/// UMi LOS path loss in dB.
pub fn umi_los_db(d3d: f64, carrier_hz: f64) -> f64 {
    32.4 + 21.0 * d3d.max(1.0).log10() + 20.0 * (carrier_hz / 1e9).log10()
}

/// UMi NLOS path loss in dB, never below the LOS value.
pub fn umi_nlos_db(d3d: f64, carrier_hz: f64, ue_height: f64) -> f64 {
    let nlos = 35.3 * d3d.max(1.0).log10() + 22.4 + 21.3 * (carrier_hz / 1e9).log10()
        - 0.3 * (ue_height - 1.5);
    nlos.max(umi_los_db(d3d, carrier_hz))
}

/// UMi LOS probability for a 2-D distance in meters.
pub fn umi_los_probability(d2d: f64) -> f64 {
    if d2d <= 18.0 {
        1.0
    } else {
        18.0 / d2d + (-d2d / 36.0).exp() * (1.0 - 18.0 / d2d)
    }
}

/// Mean of the linear shadowing factor `10^(X/10)` with `X ~ N(0, σ²)` dB.
pub fn mean_shadow_gain(sigma_db: f64) -> f64 {
    let s = sigma_db * std::f64::consts::LN_10 / 10.0;
    (s * s / 2.0).exp()
}

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn shadow(rng: &mut impl Rng, enabled: bool, sigma_db: f64) -> f64 {
    if !enabled || sigma_db == 0.0 {
        return 1.0;
    }
    let x: f64 = Normal::new(0.0, sigma_db).unwrap().sample(rng);
    db_to_linear(x)
}

fn cn(rng: &mut impl Rng, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(s * re, s * im)
}

/// One channel realization: `g_b` for every SBS and `h_{b,u}` for every
/// (SBS, UE) pair in the network, including pairs across clusters.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSet {
    pub num_sbs: usize,
    pub num_ues: usize,
    pub mbs_antennas: usize,
    pub sbs_antennas: usize,
    pub backhaul: Vec<Vec<Complex64>>,
    /// Indexed by `b · num_ues + u`.
    pub access: Vec<Vec<Complex64>>,
    pub carrier_hz: f64,
    pub seed: u64,
}

impl ChannelSet {
    pub fn generate(topology: &Topology, cfg: &SystemConfig, params: &ChannelParams, seed: u64) -> Self {
        Self {
            num_sbs: cfg.num_sbs(),
            num_ues: cfg.num_ues(),
            mbs_antennas: cfg.n_mbs(),
            sbs_antennas: cfg.n_sbs(),
            backhaul: generate_backhaul_channels(topology, cfg, params, seed),
            access: generate_access_channels(topology, cfg, params, seed),
            carrier_hz: params.carrier_hz,
            seed,
        }
    }

    /// All-zero channels of the right shape.
    pub fn zeros(cfg: &SystemConfig) -> Self {
        Self {
            num_sbs: cfg.num_sbs(),
            num_ues: cfg.num_ues(),
            mbs_antennas: cfg.n_mbs(),
            sbs_antennas: cfg.n_sbs(),
            backhaul: vec![vec![Complex64::default(); cfg.n_mbs()]; cfg.num_sbs()],
            access: vec![vec![Complex64::default(); cfg.n_sbs()]; cfg.num_sbs() * cfg.num_ues()],
            carrier_hz: 0.0,
            seed: 0,
        }
    }

    pub fn g(&self, b: usize) -> &[Complex64] {
        &self.backhaul[b]
    }

    pub fn h(&self, b: usize, u: usize) -> &[Complex64] {
        &self.access[b * self.num_ues + u]
    }

    pub fn h_mut(&mut self, b: usize, u: usize) -> &mut Vec<Complex64> {
        &mut self.access[b * self.num_ues + u]
    }

    pub fn matches(&self, cfg: &SystemConfig) -> bool {
        self.num_sbs == cfg.num_sbs()
            && self.num_ues == cfg.num_ues()
            && self.backhaul.len() == self.num_sbs
            && self.access.len() == self.num_sbs * self.num_ues
            && self.backhaul.iter().all(|g| g.len() == cfg.n_mbs())
            && self.access.iter().all(|h| h.len() == cfg.n_sbs())
    }

    pub fn is_finite(&self) -> bool {
        self.backhaul.iter().chain(&self.access).flatten().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Channels of the listed UEs only, in the listed order (backhaul unchanged).
    pub fn restrict_ues(&self, ues: &[usize]) -> ChannelSet {
        let mut access = Vec::with_capacity(self.num_sbs * ues.len());
        for b in 0..self.num_sbs {
            for &u in ues {
                access.push(self.h(b, u).to_vec());
            }
        }
        ChannelSet { num_ues: ues.len(), access, backhaul: self.backhaul.clone(), ..*self }
    }

    /// Short content hash used to prove that paired runs saw the same channels.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        for c in self.backhaul.iter().chain(&self.access).flatten() {
            hasher.update(c.re.to_bits().to_le_bytes());
            hasher.update(c.im.to_bits().to_le_bytes());
        }
        let digest = hasher.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// `g_b = sqrt(PL·shadow) · a_MBS(direction to SBS b)`.
pub fn generate_backhaul_channels(
    topology: &Topology,
    cfg: &SystemConfig,
    params: &ChannelParams,
    seed: u64,
) -> Vec<Vec<Complex64>> {
    let mut rng = rng::stream(seed, "channel/backhaul");
    let array = PlanarArray::new(cfg.mbs_array, params.element_spacing, topology.mbs_boresight);
    (0..cfg.num_sbs())
        .map(|b| {
            let p = topology.sbs_position(cfg, b);
            let d = distance(topology.mbs, p);
            let gain = db_to_linear(-uma_los_db(d, params.carrier_hz))
                * shadow(&mut rng, params.shadowing, params.backhaul_shadowing_db);
            let dir = [p[0] - topology.mbs[0], p[1] - topology.mbs[1], p[2] - topology.mbs[2]];
            let amp = gain.sqrt();
            array.response_toward(dir).into_iter().map(|a| a * amp).collect()
        })
        .collect()
}

/// Access channels for every SBS/UE pair: Rician around the steering vector
/// when LOS, Rayleigh when NLOS, scaled by path loss and shadowing.
pub fn generate_access_channels(
    topology: &Topology,
    cfg: &SystemConfig,
    params: &ChannelParams,
    seed: u64,
) -> Vec<Vec<Complex64>> {
    let mut rng = rng::stream(seed, "channel/access");
    let n = cfg.n_sbs();
    let mut out = Vec::with_capacity(cfg.num_sbs() * cfg.num_ues());
    for b in 0..cfg.num_sbs() {
        let sp = topology.sbs_position(cfg, b);
        let array = PlanarArray::new(cfg.sbs_array, params.element_spacing, topology.sbs_orientation(cfg, b));
        for u in 0..cfg.num_ues() {
            let up = topology.ue_position(cfg, u);
            let d3 = distance(sp, up);
            let los = match params.force_los {
                Some(v) => v,
                None => rng.random::<f64>() < umi_los_probability(distance_2d(sp, up)),
            };
            let (pl_db, sigma) = if los {
                (umi_los_db(d3, params.carrier_hz), params.access_los_shadowing_db)
            } else {
                (umi_nlos_db(d3, params.carrier_hz, up[2]), params.access_nlos_shadowing_db)
            };
            let amp = (db_to_linear(-pl_db) * shadow(&mut rng, params.shadowing, sigma)).sqrt();
            let h: Vec<Complex64> = if los {
                let dir = [up[0] - sp[0], up[1] - sp[1], up[2] - sp[2]];
                let a = array.response_toward(dir);
                let phase = Complex64::from_polar(1.0, 2.0 * PI * rng.random::<f64>());
                match params.rician_k_db {
                    None => a.into_iter().map(|x| x * phase * amp).collect(),
                    Some(kdb) => {
                        let k = db_to_linear(kdb);
                        let spec = (k / (k + 1.0)).sqrt();
                        let diff = (1.0 / (k + 1.0)).sqrt();
                        a.into_iter()
                            .map(|x| (x * phase * spec + cn(&mut rng, 1.0) * diff) * amp)
                            .collect()
                    }
                }
            } else {
                (0..n).map(|_| cn(&mut rng, 1.0) * amp).collect()
            };
            out.push(h);
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerturbationScope {
    Backhaul,
    Access,
    Both,
}

/// Channel-estimate contamination `c = sqrt(1−χ²)·ĉ + χ·p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub chi: f64,
    pub scope: PerturbationScope,
    pub seed: u64,
}

fn perturb_vector(c: &[Complex64], chi: f64, rng: &mut impl Rng) -> Vec<Complex64> {
    let k = c.len() as f64;
    let energy: f64 = c.iter().map(|x| x.norm_sqr()).sum();
    let keep = (1.0 - chi * chi).sqrt();
    c.iter().map(|&x| x * keep + cn(rng, energy / k) * chi).collect()
}

/// Replaces every in-scope vector with its contaminated version; other vectors are copied.
pub fn perturb_channels(channels: &ChannelSet, spec: &PerturbationSpec) -> crate::Result<ChannelSet> {
    if !(0.0..=1.0).contains(&spec.chi) {
        return Err(crate::Error::InvalidConfig(format!("chi {} outside [0, 1]", spec.chi)));
    }
    let mut out = channels.clone();
    if spec.chi == 0.0 {
        return Ok(out);
    }
    if matches!(spec.scope, PerturbationScope::Backhaul | PerturbationScope::Both) {
        let mut rng = rng::stream(spec.seed, "perturb/backhaul");
        for g in &mut out.backhaul {
            *g = perturb_vector(g, spec.chi, &mut rng);
        }
    }
    if matches!(spec.scope, PerturbationScope::Access | PerturbationScope::Both) {
        let mut rng = rng::stream(spec.seed, "perturb/access");
        for h in &mut out.access {
            *h = perturb_vector(h, spec.chi, &mut rng);
        }
    }
    Ok(out)
}

/// JSON form: complex vectors as interleaved `[re0, im0, re1, im1, ...]`.
#[derive(Serialize, Deserialize)]
struct ChannelSetJson {
    num_sbs: usize,
    num_ues: usize,
    mbs_antennas: usize,
    sbs_antennas: usize,
    carrier_hz: f64,
    seed: u64,
    backhaul: Vec<Vec<f64>>,
    access: Vec<Vec<f64>>,
}

fn interleave(v: &[Complex64]) -> Vec<f64> {
    v.iter().flat_map(|c| [c.re, c.im]).collect()
}

fn deinterleave(v: &[f64], expected: usize) -> crate::Result<Vec<Complex64>> {
    if v.len() != 2 * expected {
        return Err(crate::Error::DimensionMismatch(format!(
            "expected {} interleaved values, got {}",
            2 * expected,
            v.len()
        )));
    }
    Ok(v.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect())
}

impl Serialize for ChannelSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ChannelSetJson {
            num_sbs: self.num_sbs,
            num_ues: self.num_ues,
            mbs_antennas: self.mbs_antennas,
            sbs_antennas: self.sbs_antennas,
            carrier_hz: self.carrier_hz,
            seed: self.seed,
            backhaul: self.backhaul.iter().map(|g| interleave(g)).collect(),
            access: self.access.iter().map(|h| interleave(h)).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ChannelSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = ChannelSetJson::deserialize(d)?;
        if j.backhaul.len() != j.num_sbs || j.access.len() != j.num_sbs * j.num_ues {
            return Err(D::Error::custom("channel list lengths do not match the declared counts"));
        }
        let backhaul = j
            .backhaul
            .iter()
            .map(|v| deinterleave(v, j.mbs_antennas))
            .collect::<crate::Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        let access = j
            .access
            .iter()
            .map(|v| deinterleave(v, j.sbs_antennas))
            .collect::<crate::Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        Ok(Self {
            num_sbs: j.num_sbs,
            num_ues: j.num_ues,
            mbs_antennas: j.mbs_antennas,
            sbs_antennas: j.sbs_antennas,
            backhaul,
            access,
            carrier_hz: j.carrier_hz,
            seed: j.seed,
        })
    }
}
