mod common;

use rrm_core::channel::{
    perturb_channels, steering_vector, ChannelParams, ChannelSet, PerturbationScope, PerturbationSpec, PlanarArray,
};
use rrm_core::system::{ClusterGeometry, Orientation, Topology};
use rrm_core::Complex64;

fn one_link_topology(sbs: [f64; 3], ue: [f64; 3]) -> Topology {
    let mbs = [0.0, 0.0, 25.0];
    Topology {
        mbs,
        mbs_boresight: Orientation::toward(mbs, sbs),
        clusters: vec![ClusterGeometry {
            center: ue,
            sbs: vec![sbs],
            sbs_boresight: vec![Orientation::toward(sbs, ue)],
            ues: vec![ue],
        }],
    }
}

fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[test]
fn same_seed_same_channels() {
    let cfg = common::s1(27.0, 14.0);
    let (_, a) = common::draw(&cfg, 17);
    let (_, b) = common::draw(&cfg, 17);
    assert_eq!(a, b);
    assert_eq!(a.content_hash(), b.content_hash());
    assert!(a.is_finite() && a.matches(&cfg));
    let (_, c) = common::draw(&cfg, 18);
    assert_ne!(a.content_hash(), c.content_hash());
}

#[test]
fn backhaul_norm_follows_path_loss_exponent() {
    let cfg = common::tiny(1, 1, 1, 1, 2);
    let params = ChannelParams { shadowing: false, ..ChannelParams::default() };
    // Same direction from the MBS, twice the 3-D distance.
    let mbs = [0.0, 0.0, 25.0];
    let dir = [80.0, 30.0, -15.0];
    let near = [mbs[0] + dir[0], mbs[1] + dir[1], mbs[2] + dir[2]];
    let far = [mbs[0] + 2.0 * dir[0], mbs[1] + 2.0 * dir[1], mbs[2] + 2.0 * dir[2]];
    let ue = [100.0, 0.0, 1.5];
    let g1 = ChannelSet::generate(&one_link_topology(near, ue), &cfg, &params, 3).backhaul[0].clone();
    let g2 = ChannelSet::generate(&one_link_topology(far, ue), &cfg, &params, 3).backhaul[0].clone();
    // UMa LOS: 22·log10(d) dB, so amplitude scales by 2^(-22/20).
    let expected = 2f64.powf(-1.1);
    let ratio = norm_sqr(&g2).sqrt() / norm_sqr(&g1).sqrt();
    assert!((ratio - expected).abs() < 1e-9, "{ratio} vs {expected}");
}

#[test]
fn infinite_k_factor_aligns_with_steering_vector() {
    let cfg = common::tiny(1, 1, 1, 1, 2);
    let params = ChannelParams { rician_k_db: None, force_los: Some(true), ..ChannelParams::default() };
    let sbs = [140.0, 20.0, 10.0];
    let ue = [152.0, 9.0, 1.5];
    let topo = one_link_topology(sbs, ue);
    let ori = topo.clusters[0].sbs_boresight[0];
    let (az, el) = ori.local_angles([ue[0] - sbs[0], ue[1] - sbs[1], ue[2] - sbs[2]]);
    let a = steering_vector(&PlanarArray::new(cfg.sbs_array, 0.5, ori), az, el);
    for seed in 0..5 {
        let h = ChannelSet::generate(&topo, &cfg, &params, seed).access[0].clone();
        let cos = inner(&a, &h).norm() / (norm_sqr(&a) * norm_sqr(&h)).sqrt();
        assert!((cos - 1.0).abs() < 1e-9, "cosine {cos}");
    }
}

/// Mean of `10^(X/10)` for `X ~ N(0, σ²)` evaluated from the log-normal moment formula.
fn lognormal_mean(sigma_db: f64) -> f64 {
    let s = sigma_db * 10f64.ln() / 10.0;
    (0.5 * s * s).exp()
}

#[test]
fn access_energy_matches_path_loss_and_shadowing() {
    let cfg = common::tiny(1, 1, 1, 1, 2);
    let sbs = [140.0, 20.0, 10.0];
    let ue = [160.0, 5.0, 1.5];
    let topo = one_link_topology(sbs, ue);
    let d = ((ue[0] - sbs[0]).powi(2) + (ue[1] - sbs[1]).powi(2) + (ue[2] - sbs[2]).powi(2)).sqrt();
    let n = cfg.n_sbs() as f64;
    let fghz: f64 = 41.0;
    let draws = 10_000;

    let los = ChannelParams { force_los: Some(true), ..ChannelParams::default() };
    let pl_los = 10f64.powf(-(32.4 + 21.0 * d.log10() + 20.0 * fghz.log10()) / 10.0);
    let predicted = n * pl_los * lognormal_mean(4.0);
    let mean = (0..draws).map(|s| norm_sqr(&ChannelSet::generate(&topo, &cfg, &los, s).access[0])).sum::<f64>()
        / draws as f64;
    assert!((mean / predicted - 1.0).abs() < 0.05, "LOS mean {mean:e} vs {predicted:e}");

    let nlos = ChannelParams { force_los: Some(false), shadowing: false, ..ChannelParams::default() };
    let pl_nlos_db = (35.3 * d.log10() + 22.4 + 21.3 * fghz.log10()).max(32.4 + 21.0 * d.log10() + 20.0 * fghz.log10());
    let predicted = n * 10f64.powf(-pl_nlos_db / 10.0);
    let mean = (0..draws).map(|s| norm_sqr(&ChannelSet::generate(&topo, &cfg, &nlos, s).access[0])).sum::<f64>()
        / draws as f64;
    assert!((mean / predicted - 1.0).abs() < 0.05, "NLOS mean {mean:e} vs {predicted:e}");
}

#[test]
fn full_contamination_keeps_energy_and_drops_direction() {
    let cfg = common::tiny(1, 1, 1, 1, 2);
    let ch = common::channels(&cfg, 5);
    let c = ch.backhaul[0].clone();
    let energy = norm_sqr(&c);
    let draws = 10_000;
    let mut total = 0.0;
    let mut corr = Complex64::new(0.0, 0.0);
    for seed in 0..draws {
        let out = perturb_channels(&ch, &PerturbationSpec { chi: 1.0, scope: PerturbationScope::Backhaul, seed })
            .unwrap();
        total += norm_sqr(&out.backhaul[0]);
        corr += inner(&c, &out.backhaul[0]);
    }
    let mean = total / draws as f64;
    assert!((mean / energy - 1.0).abs() < 0.05, "{mean:e} vs {energy:e}");
    assert!(corr.norm() / draws as f64 <= 0.05 * energy);
}

#[test]
fn partial_contamination_keeps_energy_on_average() {
    let cfg = common::tiny(1, 1, 1, 1, 2);
    let ch = common::channels(&cfg, 9);
    let energy = norm_sqr(ch.h(0, 0));
    for chi in [0.3, 0.7] {
        let draws = 10_000;
        let mean = (0..draws)
            .map(|seed| {
                let out = perturb_channels(&ch, &PerturbationSpec { chi, scope: PerturbationScope::Both, seed }).unwrap();
                norm_sqr(out.h(0, 0))
            })
            .sum::<f64>()
            / draws as f64;
        assert!((mean / energy - 1.0).abs() < 0.05, "chi {chi}: {mean:e} vs {energy:e}");
    }
}

#[test]
fn chi_outside_unit_interval_is_rejected() {
    let cfg = common::tiny(1, 1, 1, 1, 2);
    let ch = common::channels(&cfg, 1);
    for chi in [-0.1, 1.5] {
        assert!(perturb_channels(&ch, &PerturbationSpec { chi, scope: PerturbationScope::Both, seed: 0 }).is_err());
    }
}

#[test]
fn channel_json_roundtrip_is_lossless() {
    let cfg = common::tiny(1, 2, 3, 2, 2);
    let ch = common::channels(&cfg, 44);
    let text = serde_json::to_string(&ch).unwrap();
    let back: ChannelSet = serde_json::from_str(&text).unwrap();
    assert_eq!(back.content_hash(), ch.content_hash());
}
