mod common;

use rrm_core::algorithms::{solve_upper_bound, AlgoParams};
use rrm_core::conic::{solve, SolveStatus, SolverOptions};
use rrm_core::formulation::{
    build_p0_relaxation, build_program, build_rnp1_subproblem, build_rnp2_subproblem, compute_bigm,
    design_multicast_beams, design_zf_beams, extract_point, BinaryState, BuildOptions, Fix, LayoutKind, Objective,
    Penalties, PredesignedBeams, VariableLayout,
};
use rrm_core::system::{default_rate_table, dbm_to_watts, SystemConfig};
use rrm_core::Complex64;

fn unit_beams(cfg: &SystemConfig) -> PredesignedBeams {
    let e = |n: usize| {
        let mut v = vec![Complex64::default(); n];
        v[0] = Complex64::new(1.0, 0.0);
        v
    };
    PredesignedBeams { unicast: vec![e(cfg.n_sbs()); cfg.num_links()], multicast: vec![e(cfg.n_mbs()); cfg.clusters] }
}

fn beams_for(cfg: &SystemConfig, ch: &rrm_core::channel::ChannelSet) -> PredesignedBeams {
    let ub = solve_upper_bound(cfg, ch, &AlgoParams::default()).unwrap();
    PredesignedBeams {
        unicast: design_zf_beams(ch, cfg, 1e-3),
        multicast: design_multicast_beams(&[ub.multicast]).unwrap(),
    }
}

#[test]
fn full_program_size_for_two_cluster_setting() {
    let cfg = common::s1(27.0, 14.0);
    let ch = common::channels(&cfg, 1);
    let p = build_p0_relaxation(&cfg, &ch, &compute_bigm(&ch, &cfg), &BinaryState::free(&cfg)).unwrap();
    // 2·2·64 + 2·2·3·6·16 + 2·2·3·6 + 2·5 + 2·6·5
    assert_eq!(p.num_vars, 256 + 1152 + 72 + 10 + 60);
    assert_eq!(p.num_vars, 1550);
}

#[test]
fn gain_program_size_for_default_setting() {
    let cfg = SystemConfig::default();
    let ch = common::channels(&cfg, 1);
    let bigm = compute_bigm(&ch, &cfg);
    let beams = unit_beams(&cfg);
    let free = BinaryState::free(&cfg);
    let p = build_rnp2_subproblem(&cfg, &ch, &beams, &bigm, &free, Penalties::uniform(1.0)).unwrap();
    assert_eq!(p.num_vars, 2 * 5 + 4 * 5 * 3 * 20 + 5 * 5 + 5 * 20 * 5);
    assert_eq!(p.num_vars, 1735);
    let full = build_rnp1_subproblem(&cfg, &ch, &bigm, &free, Penalties::uniform(1.0)).unwrap();
    assert!(p.num_vars < full.num_vars);
}

#[test]
fn backhaul_program_size() {
    let cfg = common::s1(27.0, 14.0);
    let ch = common::channels(&cfg, 1);
    let (p, lay) = build_program(
        &cfg,
        &ch,
        &compute_bigm(&ch, &cfg),
        LayoutKind::Backhaul,
        None,
        &BinaryState::free(&cfg),
        Objective::BackhaulRate,
        BuildOptions::default(),
    )
    .unwrap();
    assert_eq!(p.num_vars, 2 * 2 * 64 + 2 * 5);
    assert_eq!(lay.binary_columns().len(), 10);
}

#[test]
fn all_binaries_off_is_infeasible() {
    let cfg = common::tiny(1, 2, 3, 2, 2);
    let ch = common::channels(&cfg, 2);
    let zeros = BinaryState::fixed(
        vec![0.0; cfg.num_ues() * 2],
        vec![0.0; cfg.clusters * 2],
        vec![0.0; cfg.num_links()],
    );
    let p = build_p0_relaxation(&cfg, &ch, &compute_bigm(&ch, &cfg), &zeros).unwrap();
    assert_eq!(solve(&p, &SolverOptions::default()).status, SolveStatus::Infeasible);
}

#[test]
fn switched_off_link_has_zero_beam_and_power() {
    let cfg = common::tiny(1, 2, 3, 2, 2);
    let ch = common::channels(&cfg, 4);
    let mut state = BinaryState::free(&cfg);
    let k = cfg.link(1, 0);
    state.kappa[k] = 0.0;
    state.kappa_fix[k] = Fix::Zero;
    let p = build_p0_relaxation(&cfg, &ch, &compute_bigm(&ch, &cfg), &state).unwrap();
    let rep = solve(&p, &SolverOptions::default());
    assert!(rep.is_optimal(), "{:?}", rep.status);
    let lay = VariableLayout::new(&cfg, LayoutKind::Full);
    let pt = extract_point(&cfg, &lay, None, &rep.x);
    assert!(pt.power[k].abs() <= 1e-6 * cfg.sbs_power_w);
    let w: f64 = pt.unicast[k].iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    assert!(w <= 1e-6 * cfg.sbs_power_w.sqrt(), "{w}");
}

#[test]
fn strong_single_link_selects_top_backhaul_rate() {
    let mut cfg = common::tiny(1, 1, 1, 1, 2);
    cfg.sbs_rates = default_rate_table();
    cfg.mbs_power_w = dbm_to_watts(60.0);
    let ch = common::channels(&cfg, 6);
    let ub = solve_upper_bound(&cfg, &ch, &AlgoParams::default()).unwrap();
    assert_eq!(ub.beta, vec![0.0, 0.0, 0.0, 0.0, 1.0]);
    assert!(common::rel_close(ub.throughput_bps, cfg.backhaul_bandwidth_hz * 5.5547, 1e-12));

    cfg.backhaul_bandwidth_hz *= 2.0;
    let doubled = solve_upper_bound(&cfg, &ch, &AlgoParams::default()).unwrap();
    assert_eq!(doubled.beta, ub.beta);
    assert!(common::rel_close(doubled.throughput_bps, 2.0 * ub.throughput_bps, 1e-12));
}

#[test]
fn no_mbs_power_makes_backhaul_infeasible() {
    let mut cfg = common::tiny(1, 1, 1, 1, 2);
    cfg.mbs_power_w = 0.0;
    let ch = common::channels(&cfg, 6);
    let ub = solve_upper_bound(&cfg, &ch, &AlgoParams::default()).unwrap();
    assert_eq!(ub.status, rrm_core::algorithms::SolutionStatus::Infeasible);
    assert_eq!(ub.throughput_bps, 0.0);
}

fn random_point(n: usize, seed: u64) -> Vec<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random::<f64>()).collect()
}

/// Weighted rate minus `λ·Σ[x − 2·r·x + r²]` over all binary columns, evaluated directly.
fn surrogate_oracle(cfg: &SystemConfig, lay: &VariableLayout, x: &[f64], r: &BinaryState, lambda: f64) -> f64 {
    let ju = cfg.ue_rates.len();
    let mut rate = 0.0;
    for u in 0..cfg.num_ues() {
        for j in 0..ju {
            rate += cfg.weight(u) * cfg.ue_rates.rate(j) * x[lay.alpha(u, j)];
        }
    }
    let refs: Vec<f64> = r.alpha.iter().chain(&r.beta).chain(&r.kappa).copied().collect();
    let pen: f64 = lay.binary_columns().iter().zip(&refs).map(|(&c, &rv)| x[c] - 2.0 * rv * x[c] + rv * rv).sum();
    rate - lambda * pen
}

#[test]
fn penalized_objective_at_zero_reference_is_linear() {
    let cfg = common::tiny(1, 2, 3, 2, 2);
    let ch = common::channels(&cfg, 8);
    let reference = BinaryState::fixed(vec![0.0; 6], vec![0.0; 2], vec![0.0; 6]);
    let lambda = 0.37;
    let p = build_rnp1_subproblem(&cfg, &ch, &compute_bigm(&ch, &cfg), &reference, Penalties::uniform(lambda)).unwrap();
    let lay = VariableLayout::new(&cfg, LayoutKind::Full);
    let x = random_point(p.num_vars, 1);
    let sum: f64 = lay.binary_columns().iter().map(|&c| x[c]).sum();
    let rate = surrogate_oracle(&cfg, &lay, &x, &reference, 0.0);
    assert!((p.objective_value(&x) - (rate - lambda * sum)).abs() < 1e-12);
}

#[test]
fn penalized_objective_matches_linearization() {
    let cfg = common::tiny(1, 2, 3, 2, 2);
    let ch = common::channels(&cfg, 8);
    let bigm = compute_bigm(&ch, &cfg);
    let lay = VariableLayout::new(&cfg, LayoutKind::Full);
    let lambda = 1.3;
    for seed in 0..5 {
        let rv = random_point(14, 100 + seed);
        let reference = BinaryState::fixed(rv[..6].to_vec(), rv[6..8].to_vec(), rv[8..].to_vec());
        let p = build_rnp1_subproblem(&cfg, &ch, &bigm, &reference, Penalties::uniform(lambda)).unwrap();
        let x = random_point(p.num_vars, seed);
        let expected = surrogate_oracle(&cfg, &lay, &x, &reference, lambda);
        assert!((p.objective_value(&x) - expected).abs() < 1e-12);
    }
}

#[test]
fn penalty_vanishes_on_binary_reference() {
    let cfg = common::tiny(1, 2, 3, 2, 2);
    let ch = common::channels(&cfg, 8);
    let bigm = compute_bigm(&ch, &cfg);
    let lay = VariableLayout::new(&cfg, LayoutKind::Full);
    let ones = BinaryState::fixed(vec![1.0; 6], vec![1.0; 2], vec![1.0; 6]);
    let p = build_rnp1_subproblem(&cfg, &ch, &bigm, &ones, Penalties::uniform(2.0)).unwrap();
    let mut x = random_point(p.num_vars, 3);
    for &c in &lay.binary_columns() {
        x[c] = 1.0;
    }
    let rate = surrogate_oracle(&cfg, &lay, &x, &ones, 0.0);
    assert!((p.objective_value(&x) - rate).abs() < 1e-12);

    let mixed = BinaryState::fixed(
        vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0],
        vec![1.0, 0.0],
        vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0],
    );
    let p = build_rnp1_subproblem(&cfg, &ch, &bigm, &mixed, Penalties::uniform(2.0)).unwrap();
    let vals: Vec<f64> = mixed.alpha.iter().chain(&mixed.beta).chain(&mixed.kappa).copied().collect();
    for (&c, &v) in lay.binary_columns().iter().zip(&vals) {
        x[c] = v;
    }
    let rate = surrogate_oracle(&cfg, &lay, &x, &mixed, 0.0);
    assert!((p.objective_value(&x) - rate).abs() < 1e-12);
}

#[test]
fn zero_multicast_gains_block_the_backhaul() {
    let cfg = common::tiny(1, 2, 2, 1, 2);
    let ch = common::channels(&cfg, 10);
    let beams = beams_for(&cfg, &ch);
    let bigm = compute_bigm(&ch, &cfg);
    let free = BinaryState::free(&cfg);
    let p = build_rnp2_subproblem(&cfg, &ch, &beams, &bigm, &free, Penalties::uniform(0.1)).unwrap();
    assert!(solve(&p, &SolverOptions::default()).is_optimal());
    let lay = VariableLayout::new(&cfg, LayoutKind::Gains);
    let (re, im) = lay.multicast(0, 0);
    let pinned = p.pinned(&[(re, 0.0), (im, 0.0)]);
    assert_eq!(solve(&pinned, &SolverOptions::default()).status, SolveStatus::Infeasible);
}

#[test]
fn zero_unicast_gains_block_an_admitted_ue() {
    let cfg = common::tiny(1, 2, 2, 1, 2);
    let ch = common::channels(&cfg, 10);
    let beams = beams_for(&cfg, &ch);
    let bigm = compute_bigm(&ch, &cfg);
    let free = BinaryState::free(&cfg);
    let p = build_rnp2_subproblem(&cfg, &ch, &beams, &bigm, &free, Penalties::uniform(0.1)).unwrap();
    let lay = VariableLayout::new(&cfg, LayoutKind::Gains);
    let u = 0;
    let mut pins = vec![(lay.alpha(u, 0), 1.0)];
    for b in cfg.cluster_sbs(0) {
        let (re, im) = lay.unicast(cfg.link(b, u), 0);
        pins.push((re, 0.0));
        pins.push((im, 0.0));
    }
    assert_eq!(solve(&p.pinned(&pins), &SolverOptions::default()).status, SolveStatus::Infeasible);
}

#[test]
fn program_json_roundtrip() {
    let cfg = common::tiny(1, 1, 2, 1, 2);
    let ch = common::channels(&cfg, 12);
    let p = build_p0_relaxation(&cfg, &ch, &compute_bigm(&ch, &cfg), &BinaryState::free(&cfg)).unwrap();
    let back = rrm_core::conic::ConicProgram::from_json(&p.to_json().unwrap()).unwrap();
    let a = solve(&p, &SolverOptions::default());
    let b = solve(&back, &SolverOptions::default());
    assert_eq!(a.status, b.status);
    assert!((a.objective - b.objective).abs() <= 1e-9 * a.objective.abs().max(1.0));
}
