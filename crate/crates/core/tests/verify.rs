mod common;

use rrm_core::channel::ChannelSet;
use rrm_core::formulation::BinaryState;
use rrm_core::system::SystemConfig;
use rrm_core::verify::{
    brute_force_optimum, check_feasibility_pprime, delivered_throughput, sinr_sbs, sinr_ue, Allocation,
    BruteForceParams,
};
use rrm_core::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn e1(n: usize, scale: Complex64) -> Vec<Complex64> {
    let mut v = vec![Complex64::default(); n];
    v[0] = scale;
    v
}

#[test]
fn sbs_sinr_without_interference() {
    let mut cfg = common::tiny(1, 1, 1, 1, 2);
    cfg.sbs_noise_w = 0.5;
    let mut ch = ChannelSet::zeros(&cfg);
    ch.backhaul[0] = e1(cfg.n_mbs(), c(1.0, 0.0));
    let s = sinr_sbs(&cfg, &ch, &[e1(cfg.n_mbs(), c(1.0, 0.0))]);
    assert!((s.per_sbs[0] - 2.0).abs() < 1e-12);
    assert!((s.cluster_min[0] - 2.0).abs() < 1e-12);
}

#[test]
fn sbs_sinr_with_other_cluster_interference() {
    let mut cfg = common::tiny(2, 1, 1, 1, 2);
    cfg.sbs_noise_w = 1.0;
    let n = cfg.n_mbs();
    let mut ch = ChannelSet::zeros(&cfg);
    ch.backhaul[0] = vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
    ch.backhaul[1] = e1(n, c(3.0, 0.0));
    // g_0^H m_0 = 2, g_0^H m_1 = 1.
    let m0 = vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
    let m1 = vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
    let s = sinr_sbs(&cfg, &ch, &[m0, m1]);
    assert!((s.per_sbs[0] - 2.0).abs() < 1e-12);
    assert_eq!(s.cluster_min[0], s.per_sbs[0]);
}

#[test]
fn ue_sinr_single_link() {
    let mut cfg = common::tiny(1, 1, 1, 1, 2);
    cfg.ue_noise_w = 1.0;
    let mut ch = ChannelSet::zeros(&cfg);
    *ch.h_mut(0, 0) = e1(cfg.n_sbs(), c(2.0, 0.0));
    let w = vec![e1(cfg.n_sbs(), c(1.0, 0.0))];
    assert!((sinr_ue(&cfg, &ch, &w, &[1.0])[0] - 4.0).abs() < 1e-12);
    assert_eq!(sinr_ue(&cfg, &ch, &w, &[0.0])[0], 0.0);
}

#[test]
fn ue_sinr_combines_coherently() {
    let mut cfg = common::tiny(1, 2, 1, 1, 2);
    cfg.ue_noise_w = 1.0;
    let n = cfg.n_sbs();
    let mut ch = ChannelSet::zeros(&cfg);
    *ch.h_mut(0, 0) = e1(n, c(1.0, 0.0));
    *ch.h_mut(1, 0) = e1(n, c(0.0, 1.0));
    // h^H w = 1 on both links.
    let w = vec![e1(n, c(1.0, 0.0)), e1(n, c(0.0, 1.0))];
    let k0 = cfg.link(0, 0);
    let k1 = cfg.link(1, 0);
    let mut wk = vec![Vec::new(); 2];
    wk[k0] = w[0].clone();
    wk[k1] = w[1].clone();
    assert!((sinr_ue(&cfg, &ch, &wk, &[1.0, 1.0])[0] - 4.0).abs() < 1e-12);
    assert!((sinr_ue(&cfg, &ch, &wk, &[1.0, 0.0])[0] - 1.0).abs() < 1e-12);
    assert_eq!(sinr_ue(&cfg, &ch, &wk, &[0.0, 0.0])[0], 0.0);
}

fn optimum(cfg: &SystemConfig, seed: u64) -> (ChannelSet, Allocation) {
    let ch = common::channels(cfg, seed);
    let bf = brute_force_optimum(cfg, &ch, &BruteForceParams::default()).unwrap();
    assert!(bf.feasible, "seed {seed} infeasible");
    (ch, bf.best.unwrap())
}

#[test]
fn enumerated_optimum_passes_every_family() {
    let cfg = common::tiny(1, 2, 3, 2, 2);
    for seed in 0..3 {
        let (ch, best) = optimum(&cfg, seed);
        let rep = check_feasibility_pprime(&cfg, &ch, &best, 1e-6).unwrap();
        assert!(rep.feasible, "{:?}", rep.failures());
        assert_eq!(rep.families.len(), 15);
        let d = delivered_throughput(&cfg, &ch, &best);
        assert!(common::rel_close(d.throughput_bps, rep.access_throughput_bps, 1e-12));
    }
}

#[test]
fn raising_a_rate_beyond_the_sinr_breaks_c5() {
    let mut cfg = common::tiny(1, 1, 2, 1, 2);
    cfg.ue_rates = rrm_core::system::default_rate_table();
    let (ch, mut best) = optimum(&cfg, 1);
    let ju = cfg.ue_rates.len();
    let u = (0..cfg.num_ues()).find(|&u| best.binaries.ue_rate(u, ju).is_some()).unwrap();
    let j = best.binaries.ue_rate(u, ju).unwrap();
    // Pick the smallest rate whose target the current SINR misses.
    let sinr = sinr_ue(&cfg, &ch, &best.unicast, &best.binaries.kappa)[u];
    let bad = (j + 1..ju).find(|&i| cfg.ue_rates.sinr(i) > sinr * 1.01);
    let bad = bad.expect("a higher rate above the current SINR");
    best.binaries.alpha[u * ju + j] = 0.0;
    best.binaries.alpha[u * ju + bad] = 1.0;
    let rep = check_feasibility_pprime(&cfg, &ch, &best, 1e-6).unwrap();
    let c5 = rep.family("C5").unwrap();
    assert!(!c5.passed && c5.worst_slack < 0.0);
}

#[test]
fn zero_solution_fails_admission_count() {
    let cfg = common::tiny(1, 2, 3, 2, 2);
    let ch = common::channels(&cfg, 0);
    let zero = Allocation {
        multicast: vec![vec![Complex64::default(); cfg.n_mbs()]; cfg.clusters],
        unicast: vec![vec![Complex64::default(); cfg.n_sbs()]; cfg.num_links()],
        power: vec![0.0; cfg.num_links()],
        binaries: BinaryState::fixed(vec![0.0; 6], vec![0.0; 2], vec![0.0; 6]),
    };
    let rep = check_feasibility_pprime(&cfg, &ch, &zero, 1e-6).unwrap();
    assert!(!rep.feasible);
    assert!(!rep.family("C14").unwrap().passed);
}

#[test]
fn zero_sbs_power_has_no_feasible_tuple() {
    let mut cfg = common::tiny(1, 1, 2, 1, 2);
    cfg.sbs_power_w = 0.0;
    let ch = common::channels(&cfg, 3);
    let bf = brute_force_optimum(&cfg, &ch, &BruteForceParams::default()).unwrap();
    assert!(!bf.feasible);
    assert!(bf.best.is_none());
}

/// Counts binary tuples meeting the counting constraints by walking every bit pattern.
fn count_by_bits(cfg: &SystemConfig) -> u128 {
    assert_eq!(cfg.clusters, 1);
    let (u_n, b_n) = (cfg.ues_per_cluster, cfg.sbs_per_cluster);
    let (ju, js) = (cfg.ue_rates.len(), cfg.sbs_rates.len());
    let bits = u_n * ju + js + u_n * b_n;
    let mut count = 0u128;
    for code in 0u64..(1 << bits) {
        let bit = |i: usize| (code >> i) & 1 == 1;
        let alpha = |u: usize, j: usize| bit(u * ju + j);
        let beta = |j: usize| bit(u_n * ju + j);
        let kappa = |b: usize, u: usize| bit(u_n * ju + js + b * u_n + u);
        let rates: Vec<usize> = (0..u_n).map(|u| (0..ju).filter(|&j| alpha(u, j)).count()).collect();
        if rates.iter().any(|&r| r > 1) || rates.iter().sum::<usize>() != cfg.ues_served {
            continue;
        }
        if (0..js).filter(|&j| beta(j)).count() != 1 {
            continue;
        }
        let streams_ok = (0..b_n).all(|b| {
            let n = (0..u_n).filter(|&u| kappa(b, u)).count();
            n >= 1 && n <= cfg.sbs_streams
        });
        let assoc_ok = (0..u_n).all(|u| {
            let n = (0..b_n).filter(|&b| kappa(b, u)).count();
            n <= cfg.max_serving_sbs * rates[u] && n >= cfg.min_serving_sbs * rates[u]
        });
        if streams_ok && assoc_ok {
            count += 1;
        }
    }
    count
}

#[test]
fn admissible_count_matches_bitwise_enumeration() {
    for cfg in [common::tiny(1, 1, 2, 1, 2), common::tiny(1, 2, 3, 2, 2), common::tiny(1, 2, 2, 2, 2)] {
        let ch = common::channels(&cfg, 0);
        let bf = brute_force_optimum(&cfg, &ch, &BruteForceParams::default()).unwrap();
        assert_eq!(bf.admissible, count_by_bits(&cfg));
    }
}

#[test]
fn enumeration_cap_is_enforced() {
    let cfg = common::s1(27.0, 14.0);
    let ch = common::channels(&cfg, 0);
    let params = BruteForceParams { cap: 1000, ..BruteForceParams::default() };
    assert!(brute_force_optimum(&cfg, &ch, &params).is_err());
}

#[test]
fn phase_rotation_leaves_sinrs_unchanged() {
    let cfg = common::tiny(2, 2, 2, 1, 2);
    let ch = common::channels(&cfg, 21);
    let alloc = brute_force_optimum(&cfg, &ch, &BruteForceParams::default()).unwrap().best.unwrap();
    let rot = Complex64::from_polar(1.0, 1.234);
    let m: Vec<Vec<Complex64>> = alloc.multicast.iter().map(|v| v.iter().map(|x| x * rot).collect()).collect();
    // Rotate every link of UE 0 together: its coherent beam is one beamformer.
    let mut w = alloc.unicast.clone();
    for b in cfg.cluster_sbs(0) {
        for x in &mut w[cfg.link(b, 0)] {
            *x *= rot;
        }
    }
    let a = sinr_sbs(&cfg, &ch, &alloc.multicast);
    let b = sinr_sbs(&cfg, &ch, &m);
    for (x, y) in a.per_sbs.iter().zip(&b.per_sbs) {
        assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
    }
    let a = sinr_ue(&cfg, &ch, &alloc.unicast, &alloc.binaries.kappa);
    let b = sinr_ue(&cfg, &ch, &w, &alloc.binaries.kappa);
    for u in 0..cfg.num_ues() {
        assert!((a[u] - b[u]).abs() <= 1e-12 * a[u].abs().max(1.0), "ue {u}: {} vs {}", a[u], b[u]);
    }
}
