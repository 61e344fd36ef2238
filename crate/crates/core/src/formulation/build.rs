//! Program builders.
//!
//! Internally every program works in normalized units: channels are divided
//! by the receiver noise amplitude and multiplied by the square root of the
//! transmitter's power budget, so beamformer variables are fractions of the
//! budget and noise is 1. [`extract_point`] converts back to watts.

use num_complex::Complex64;

use super::beams::PredesignedBeams;
use super::bigm::BigMConstants;
use super::layout::{LayoutKind, VariableLayout};
use super::state::{BinaryState, Fix, Penalties};
use crate::channel::ChannelSet;
use crate::conic::{ConicProgram, LinExpr, ProgramBuilder};
use crate::system::SystemConfig;
use crate::{Error, Result};

/// Rows with more nonzeros than this reference a shared expression instead of inlining.
const INLINE_LIMIT: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BuildOptions {
    /// Adds the linear lower bounds on the useful-signal real parts.
    pub include_cuts: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self { include_cuts: true }
    }
}

/// What the program maximizes.
#[derive(Clone, Copy, Debug)]
pub enum Objective<'a> {
    /// `Σ_u ω_u Σ_j R_j α_{u,j}`.
    WeightedRate,
    /// Weighted rate minus the per-family penalty with its concave part
    /// linearized at `reference`.
    Penalized { reference: &'a BinaryState, penalties: Penalties },
    /// `Σ_l Σ_j R_j^SBS β_{l,j}` (bps/Hz; multiply by the backhaul bandwidth for bps).
    BackhaulRate,
}

struct Normalized {
    h: Vec<Vec<Complex64>>,
    g: Vec<Vec<Complex64>>,
    q_ue: Vec<f64>,
    q_sbs: Vec<f64>,
    num_ues: usize,
}

impl Normalized {
    fn new(cfg: &SystemConfig, channels: &ChannelSet, bigm: &BigMConstants) -> Result<Self> {
        if !channels.matches(cfg) {
            return Err(Error::DimensionMismatch("channel set does not match the configuration".into()));
        }
        if bigm.q_ue.len() != cfg.num_ues() || bigm.q_sbs.len() != cfg.num_sbs() {
            return Err(Error::DimensionMismatch("missing big-M constants".into()));
        }
        let (su, ss) = (cfg.ue_noise_w.sqrt(), cfg.sbs_noise_w.sqrt());
        let hs = cfg.sbs_power_w.max(0.0).sqrt() / su;
        let gs = cfg.mbs_power_w.max(0.0).sqrt() / ss;
        Ok(Self {
            h: channels.access.iter().map(|v| v.iter().map(|c| c * hs).collect()).collect(),
            g: channels.backhaul.iter().map(|v| v.iter().map(|c| c * gs).collect()).collect(),
            q_ue: bigm.q_ue.iter().map(|q| q / su).collect(),
            q_sbs: bigm.q_sbs.iter().map(|q| q / ss).collect(),
            num_ues: cfg.num_ues(),
        })
    }

    fn h(&self, b: usize, u: usize) -> &[Complex64] {
        &self.h[b * self.num_ues + u]
    }
}

fn inner(a: &[Complex64], x: &[Complex64]) -> Complex64 {
    a.iter().zip(x).map(|(a, x)| a.conj() * x).sum()
}

/// `Σ c·x` over complex variables given as (coefficient, re column, im column).
type ComplexForm = Vec<(Complex64, usize, usize)>;

fn re_terms(f: &ComplexForm) -> Vec<(usize, f64)> {
    let mut t = Vec::with_capacity(2 * f.len());
    for &(c, r, i) in f {
        if c.re != 0.0 {
            t.push((r, c.re));
        }
        if c.im != 0.0 {
            t.push((i, -c.im));
        }
    }
    t
}

fn im_terms(f: &ComplexForm) -> Vec<(usize, f64)> {
    let mut t = Vec::with_capacity(2 * f.len());
    for &(c, r, i) in f {
        if c.re != 0.0 {
            t.push((i, c.re));
        }
        if c.im != 0.0 {
            t.push((r, c.im));
        }
    }
    t
}

fn as_expr(b: &mut ProgramBuilder, terms: Vec<(usize, f64)>) -> LinExpr {
    if terms.len() > INLINE_LIMIT {
        LinExpr::shared(b.add_expression(terms), 1.0)
    } else {
        LinExpr { terms, ..LinExpr::default() }
    }
}

struct Ctx<'a> {
    cfg: &'a SystemConfig,
    lay: VariableLayout,
    nz: Normalized,
    beams: Option<&'a PredesignedBeams>,
}

impl Ctx<'_> {
    /// `Σ_{b'∈B_l'} h_{b',u}^H w_{b',u'}` with `l'` the cluster of `u'`.
    fn ue_signal(&self, u: usize, v: usize) -> ComplexForm {
        let cfg = self.cfg;
        let mut f = Vec::new();
        for b in cfg.cluster_sbs(cfg.ue_cluster(v)) {
            let k = cfg.link(b, v);
            let h = self.nz.h(b, u);
            match self.beams {
                None => {
                    for (n, hn) in h.iter().enumerate() {
                        let (r, i) = self.lay.unicast(k, n);
                        f.push((hn.conj(), r, i));
                    }
                }
                Some(beams) => {
                    let (r, i) = self.lay.unicast(k, 0);
                    f.push((inner(h, &beams.unicast[k]), r, i));
                }
            }
        }
        f
    }

    /// `g_b^H m_l`.
    fn sbs_signal(&self, b: usize, l: usize) -> ComplexForm {
        let g = &self.nz.g[b];
        match self.beams {
            None => g
                .iter()
                .enumerate()
                .map(|(n, gn)| {
                    let (r, i) = self.lay.multicast(l, n);
                    (gn.conj(), r, i)
                })
                .collect(),
            Some(beams) => {
                let (r, i) = self.lay.multicast(l, 0);
                vec![(inner(g, &beams.multicast[l]), r, i)]
            }
        }
    }
}

fn bounds_for(fix: Fix) -> (f64, f64) {
    match fix {
        Fix::Free => (0.0, 1.0),
        Fix::Zero => (0.0, 0.0),
        Fix::One => (1.0, 1.0),
    }
}

fn declare_variables(b: &mut ProgramBuilder, ctx: &Ctx, state: &BinaryState) -> Result<()> {
    let (cfg, lay) = (ctx.cfg, &ctx.lay);
    let access_mismatch =
        lay.has_access() && (state.alpha.len() != lay.num_alpha() || state.kappa.len() != lay.num_kappa());
    if state.beta.len() != lay.num_beta() || access_mismatch {
        return Err(Error::DimensionMismatch("binary state does not match the layout".into()));
    }
    let mc = if lay.kind == LayoutKind::Gains { "t" } else { "m" };
    for l in 0..cfg.clusters {
        for n in 0..lay.multicast_width() {
            let name = if lay.kind == LayoutKind::Gains { format!("{mc}[{l}]") } else { format!("{mc}[{l},{n}]") };
            b.free_var(format!("{name}.re"));
            b.free_var(format!("{name}.im"));
        }
    }
    if lay.has_access() {
        let uc = if lay.kind == LayoutKind::Gains { "v" } else { "w" };
        for k in 0..cfg.num_links() {
            let (sb, u) = cfg.link_pair(k);
            for n in 0..lay.unicast_width() {
                let name =
                    if lay.kind == LayoutKind::Gains { format!("{uc}[{sb},{u}]") } else { format!("{uc}[{sb},{u},{n}]") };
                b.free_var(format!("{name}.re"));
                b.free_var(format!("{name}.im"));
            }
        }
        for k in 0..cfg.num_links() {
            let (sb, u) = cfg.link_pair(k);
            b.add_var(format!("p[{sb},{u}]"), 0.0, f64::INFINITY);
        }
        for k in 0..cfg.num_links() {
            let (sb, u) = cfg.link_pair(k);
            let (lo, hi) = bounds_for(state.kappa_fix[k]);
            b.add_var(format!("kappa[{sb},{u}]"), lo, hi);
        }
    }
    for l in 0..cfg.clusters {
        for j in 0..lay.j_sbs {
            let (lo, hi) = bounds_for(state.beta_fix[l * lay.j_sbs + j]);
            b.add_var(format!("beta[{l},{j}]"), lo, hi);
        }
    }
    if lay.has_access() {
        for u in 0..cfg.num_ues() {
            for j in 0..lay.j_ue {
                let (lo, hi) = bounds_for(state.alpha_fix[u * lay.j_ue + j]);
                b.add_var(format!("alpha[{u},{j}]"), lo, hi);
            }
        }
    }
    debug_assert_eq!(b.num_vars(), lay.num_vars());
    Ok(())
}

/// MBS power cone and the per-SBS multicast SINR inner approximation with its cut.
fn add_backhaul_constraints(b: &mut ProgramBuilder, ctx: &Ctx, opts: BuildOptions) {
    let (cfg, lay) = (ctx.cfg, &ctx.lay);
    let mut all = Vec::new();
    for l in 0..cfg.clusters {
        for n in 0..lay.multicast_width() {
            let (r, i) = lay.multicast(l, n);
            all.push(LinExpr::var(r));
            all.push(LinExpr::var(i));
        }
    }
    b.add_cone(LinExpr::constant(1.0), all);

    for l in 0..cfg.clusters {
        b.add_eq(LinExpr { terms: (0..lay.j_sbs).map(|j| (lay.beta(l, j), 1.0)).collect(), ..LinExpr::default() }, 1.0);
    }

    for sb in 0..cfg.num_sbs() {
        let l = cfg.sbs_cluster(sb);
        let mut body = Vec::new();
        let mut own_re = LinExpr::default();
        for lp in 0..cfg.clusters {
            let f = ctx.sbs_signal(sb, lp);
            let re = as_expr(b, re_terms(&f));
            let im = as_expr(b, im_terms(&f));
            if lp == l {
                own_re = re.clone();
            }
            body.push(re);
            body.push(im);
        }
        body.push(LinExpr::constant(1.0));
        let q = ctx.nz.q_sbs[sb];
        for j in 0..lay.j_sbs {
            let gamma = cfg.sbs_rates.sinr(j);
            let head = own_re.clone().scaled((1.0 + 1.0 / gamma).sqrt()).term(lay.beta(l, j), -q).plus(q);
            b.add_cone(head, body.clone());
            if opts.include_cuts {
                b.add_ge(own_re.clone().term(lay.beta(l, j), -gamma.sqrt()), 0.0);
            }
        }
    }
}

fn sum_expr(terms: impl IntoIterator<Item = (usize, f64)>) -> LinExpr {
    LinExpr { terms: terms.into_iter().collect(), ..LinExpr::default() }
}

fn add_access_constraints(b: &mut ProgramBuilder, ctx: &Ctx, opts: BuildOptions) {
    let (cfg, lay) = (ctx.cfg, &ctx.lay);
    let (ju, js) = (lay.j_ue, lay.j_sbs);
    let admitted = |u: usize| (0..ju).map(move |j| (lay.alpha(u, j), 1.0));

    for u in 0..cfg.num_ues() {
        b.add_le(sum_expr(admitted(u)), 1.0);
    }
    for sb in 0..cfg.num_sbs() {
        let l = cfg.sbs_cluster(sb);
        let row = sum_expr(cfg.cluster_ues(l).map(|u| (lay.kappa(cfg.link(sb, u)), 1.0)));
        b.add_le(row.clone(), cfg.sbs_streams as f64);
        b.add_ge(row, 1.0);
    }
    for u in 0..cfg.num_ues() {
        let l = cfg.ue_cluster(u);
        let serving: Vec<(usize, f64)> = cfg.cluster_sbs(l).map(|sb| (lay.kappa(cfg.link(sb, u)), 1.0)).collect();
        let bmax = cfg.max_serving_sbs as f64;
        let bmin = cfg.min_serving_sbs as f64;
        b.add_le(sum_expr(serving.iter().copied().chain(admitted(u).map(|(i, _)| (i, -bmax)))), 0.0);
        b.add_le(sum_expr(admitted(u).map(|(i, _)| (i, bmin)).chain(serving.iter().map(|&(i, c)| (i, -c)))), 0.0);
    }
    let wmax = cfg.access_bandwidth_hz.max(cfg.backhaul_bandwidth_hz);
    let (wa, wb) = (cfg.access_bandwidth_hz / wmax, cfg.backhaul_bandwidth_hz / wmax);
    for l in 0..cfg.clusters {
        let mut terms = Vec::new();
        for u in cfg.cluster_ues(l) {
            for j in 0..ju {
                terms.push((lay.alpha(u, j), wa * cfg.ue_rates.rate(j)));
            }
        }
        for j in 0..js {
            terms.push((lay.beta(l, j), -wb * cfg.sbs_rates.rate(j)));
        }
        b.add_le(sum_expr(terms), 0.0);
        b.add_eq(sum_expr(cfg.cluster_ues(l).flat_map(admitted)), cfg.ues_served as f64);
    }

    for sb in 0..cfg.num_sbs() {
        let l = cfg.sbs_cluster(sb);
        b.add_le(sum_expr(cfg.cluster_ues(l).map(|u| (lay.power(cfg.link(sb, u)), 1.0))), 1.0);
    }
    for k in 0..cfg.num_links() {
        let (p, kap) = (lay.power(k), lay.kappa(k));
        b.add_le(sum_expr([(p, 1.0), (kap, -1.0)]), 0.0);
        let mut body = Vec::new();
        for n in 0..lay.unicast_width() {
            let (r, i) = lay.unicast(k, n);
            body.push(LinExpr::var(r).scaled(2.0));
            body.push(LinExpr::var(i).scaled(2.0));
        }
        body.push(sum_expr([(kap, 1.0), (p, -1.0)]));
        b.add_cone(sum_expr([(kap, 1.0), (p, 1.0)]), body);
    }

    // UE SINR cones: the body stacks the contribution of every UE's beam at u.
    for u in 0..cfg.num_ues() {
        let mut body = Vec::new();
        let mut own_re = LinExpr::default();
        let mut own_im = LinExpr::default();
        for v in 0..cfg.num_ues() {
            let f = ctx.ue_signal(u, v);
            let re = as_expr(b, re_terms(&f));
            let im = as_expr(b, im_terms(&f));
            if v == u {
                own_re = re.clone();
                own_im = im.clone();
            }
            body.push(re);
            body.push(im);
        }
        body.push(LinExpr::constant(1.0));
        let q = ctx.nz.q_ue[u];
        for j in 0..ju {
            let gamma = cfg.ue_rates.sinr(j);
            let head = own_re.clone().scaled((1.0 + 1.0 / gamma).sqrt()).term(lay.alpha(u, j), -q).plus(q);
            b.add_cone(head, body.clone());
            if opts.include_cuts {
                b.add_ge(own_re.clone().term(lay.alpha(u, j), -gamma.sqrt()), 0.0);
            }
        }
        b.add_eq(own_im, 0.0);
    }
}

fn add_objective(b: &mut ProgramBuilder, ctx: &Ctx, objective: Objective) {
    let (cfg, lay) = (ctx.cfg, &ctx.lay);
    match objective {
        Objective::BackhaulRate => {
            for l in 0..cfg.clusters {
                for j in 0..lay.j_sbs {
                    b.add_objective(lay.beta(l, j), cfg.sbs_rates.rate(j));
                }
            }
        }
        Objective::WeightedRate | Objective::Penalized { .. } => {
            for u in 0..cfg.num_ues() {
                for j in 0..lay.j_ue {
                    b.add_objective(lay.alpha(u, j), cfg.weight(u) * cfg.ue_rates.rate(j));
                }
            }
        }
    }
    if let Objective::Penalized { reference, penalties } = objective {
        let mut add = |col: usize, lambda: f64, r: f64| {
            b.add_objective(col, -lambda * (1.0 - 2.0 * r));
            b.add_objective_offset(-lambda * r * r);
        };
        for u in 0..cfg.num_ues() {
            for j in 0..lay.j_ue {
                add(lay.alpha(u, j), penalties.alpha, reference.alpha[u * lay.j_ue + j]);
            }
        }
        for l in 0..cfg.clusters {
            for j in 0..lay.j_sbs {
                add(lay.beta(l, j), penalties.beta, reference.beta[l * lay.j_sbs + j]);
            }
        }
        for k in 0..cfg.num_links() {
            add(lay.kappa(k), penalties.kappa, reference.kappa[k]);
        }
    }
}

/// Builds any of the four program families.
#[allow(clippy::too_many_arguments)]
pub fn build_program(
    cfg: &SystemConfig,
    channels: &ChannelSet,
    bigm: &BigMConstants,
    kind: LayoutKind,
    beams: Option<&PredesignedBeams>,
    state: &BinaryState,
    objective: Objective,
    opts: BuildOptions,
) -> Result<(ConicProgram, VariableLayout)> {
    let nz = Normalized::new(cfg, channels, bigm)?;
    if kind == LayoutKind::Gains {
        let beams = beams.ok_or_else(|| Error::InvalidConfig("gain program needs predesigned beams".into()))?;
        if beams.unicast.len() != cfg.num_links()
            || beams.multicast.len() != cfg.clusters
            || beams.unicast.iter().any(|w| w.len() != cfg.n_sbs())
            || beams.multicast.iter().any(|m| m.len() != cfg.n_mbs())
        {
            return Err(Error::DimensionMismatch("predesigned beams do not match the configuration".into()));
        }
    }
    if let Objective::Penalized { reference, .. } = objective {
        if reference.alpha.len() != state.alpha.len()
            || reference.beta.len() != state.beta.len()
            || reference.kappa.len() != state.kappa.len()
        {
            return Err(Error::DimensionMismatch("reference state does not match the layout".into()));
        }
    }
    let ctx = Ctx {
        cfg,
        lay: VariableLayout::new(cfg, kind),
        nz,
        beams: if kind == LayoutKind::Gains { beams } else { None },
    };
    let mut b = ProgramBuilder::new();
    declare_variables(&mut b, &ctx, state)?;
    add_backhaul_constraints(&mut b, &ctx, opts);
    if ctx.lay.has_access() {
        add_access_constraints(&mut b, &ctx, opts);
    }
    add_objective(&mut b, &ctx, objective);
    Ok((b.build()?, ctx.lay))
}

/// Continuous relaxation of the full mixed-integer program under the state's pins.
pub fn build_p0_relaxation(
    cfg: &SystemConfig,
    channels: &ChannelSet,
    bigm: &BigMConstants,
    state: &BinaryState,
) -> Result<ConicProgram> {
    build_program(cfg, channels, bigm, LayoutKind::Full, None, state, Objective::WeightedRate, BuildOptions::default())
        .map(|(p, _)| p)
}

/// Relaxation of the backhaul-only bound program; only the state's β entries are used.
pub fn build_pub_relaxation(
    cfg: &SystemConfig,
    channels: &ChannelSet,
    bigm: &BigMConstants,
    state: &BinaryState,
) -> Result<ConicProgram> {
    build_program(cfg, channels, bigm, LayoutKind::Backhaul, None, state, Objective::BackhaulRate, BuildOptions::default())
        .map(|(p, _)| p)
}

/// One majorization step of the penalized relaxation over full beamformers.
pub fn build_rnp1_subproblem(
    cfg: &SystemConfig,
    channels: &ChannelSet,
    bigm: &BigMConstants,
    reference: &BinaryState,
    penalties: Penalties,
) -> Result<ConicProgram> {
    let free = reference.unpinned();
    build_program(
        cfg,
        channels,
        bigm,
        LayoutKind::Full,
        None,
        &free,
        Objective::Penalized { reference, penalties },
        BuildOptions::default(),
    )
    .map(|(p, _)| p)
}

/// One majorization step over the complex gains of predesigned beams.
pub fn build_rnp2_subproblem(
    cfg: &SystemConfig,
    channels: &ChannelSet,
    beams: &PredesignedBeams,
    bigm: &BigMConstants,
    reference: &BinaryState,
    penalties: Penalties,
) -> Result<ConicProgram> {
    let free = reference.unpinned();
    build_program(
        cfg,
        channels,
        bigm,
        LayoutKind::Gains,
        Some(beams),
        &free,
        Objective::Penalized { reference, penalties },
        BuildOptions::default(),
    )
    .map(|(p, _)| p)
}

/// A primal point mapped back to physical units.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtractedPoint {
    /// Multicast beamformers `m_l` (sqrt-watts).
    pub multicast: Vec<Vec<Complex64>>,
    /// Unicast beamformers `w_{b,u}` per link (sqrt-watts); empty for backhaul programs.
    pub unicast: Vec<Vec<Complex64>>,
    /// Powers `p_{b,u}` in watts.
    pub power: Vec<f64>,
    /// Relaxed binary values (pins cleared).
    pub state: BinaryState,
    /// Complex gains `t_l`, `v_{b,u}` (sqrt-watts) for gain programs.
    pub gains: Option<(Vec<Complex64>, Vec<Complex64>)>,
}

pub fn extract_point(
    cfg: &SystemConfig,
    lay: &VariableLayout,
    beams: Option<&PredesignedBeams>,
    x: &[f64],
) -> ExtractedPoint {
    let (sm, ss) = (cfg.mbs_power_w.max(0.0).sqrt(), cfg.sbs_power_w.max(0.0).sqrt());
    let c = |(r, i): (usize, usize)| Complex64::new(x[r], x[i]);
    let mut state = BinaryState::free(cfg);
    for (i, v) in state.beta.iter_mut().enumerate() {
        *v = x[lay.beta(i / lay.j_sbs, i % lay.j_sbs)];
    }
    if !lay.has_access() {
        let multicast = (0..cfg.clusters)
            .map(|l| (0..cfg.n_mbs()).map(|n| c(lay.multicast(l, n)) * sm).collect())
            .collect();
        return ExtractedPoint { multicast, unicast: vec![], power: vec![], state, gains: None };
    }
    for (i, v) in state.alpha.iter_mut().enumerate() {
        *v = x[lay.alpha(i / lay.j_ue, i % lay.j_ue)];
    }
    for (k, v) in state.kappa.iter_mut().enumerate() {
        *v = x[lay.kappa(k)];
    }
    let power = (0..cfg.num_links()).map(|k| x[lay.power(k)] * cfg.sbs_power_w).collect();
    match (lay.kind, beams) {
        (LayoutKind::Gains, Some(beams)) => {
            let t: Vec<Complex64> = (0..cfg.clusters).map(|l| c(lay.multicast(l, 0)) * sm).collect();
            let v: Vec<Complex64> = (0..cfg.num_links()).map(|k| c(lay.unicast(k, 0)) * ss).collect();
            let multicast = beams.multicast.iter().zip(&t).map(|(m, t)| m.iter().map(|e| e * t).collect()).collect();
            let unicast = beams.unicast.iter().zip(&v).map(|(w, v)| w.iter().map(|e| e * v).collect()).collect();
            ExtractedPoint { multicast, unicast, power, state, gains: Some((t, v)) }
        }
        _ => {
            let multicast = (0..cfg.clusters)
                .map(|l| (0..cfg.n_mbs()).map(|n| c(lay.multicast(l, n)) * sm).collect())
                .collect();
            let unicast = (0..cfg.num_links())
                .map(|k| (0..cfg.n_sbs()).map(|n| c(lay.unicast(k, n)) * ss).collect())
                .collect();
            ExtractedPoint { multicast, unicast, power, state, gains: None }
        }
    }
}
