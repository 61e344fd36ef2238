mod common;

use rrm_core::algorithms::{
    find_initial_point, predesign_beams, round_and_repair, solve_bnc_misocp, solve_rnp1, solve_rnp2,
    solve_upper_bound, AlgoParams, InitMode, SolutionStatus,
};
use rrm_core::channel::ChannelParams;
use rrm_core::formulation::BinaryState;
use rrm_core::system::{dbm_to_watts, lower_bound_rate};
use rrm_core::verify::{brute_force_optimum, check_feasibility_pprime, BruteForceParams};
use rrm_core::Error;

fn params(seed: u64) -> AlgoParams {
    AlgoParams { seed, ..AlgoParams::default() }
}

#[test]
fn branch_and_bound_matches_enumeration_on_tiny_instances() {
    let cfg = common::tiny(1, 1, 2, 1, 2);
    for seed in 0..6 {
        let ch = common::channels(&cfg, seed);
        let bf = brute_force_optimum(&cfg, &ch, &BruteForceParams::default()).unwrap();
        let bnc = solve_bnc_misocp(&cfg, &ch, &params(seed)).unwrap();
        assert_eq!(bf.feasible, bnc.has_allocation(), "seed {seed}");
        if bf.feasible {
            assert_eq!(bnc.status, SolutionStatus::Optimal);
            assert!(common::rel_close(bnc.objective, bf.objective, 1e-6), "seed {seed}: {} vs {}", bnc.objective, bf.objective);
            let rep = check_feasibility_pprime(&cfg, &ch, bnc.allocation.as_ref().unwrap(), 1e-6).unwrap();
            assert!(rep.feasible, "{:?}", rep.failures());
        }
        assert_eq!(bnc.stats.bound_violations, 0);
    }
}

#[test]
fn branch_and_bound_reports_infeasible_without_sbs_power() {
    let mut cfg = common::tiny(1, 1, 2, 1, 2);
    cfg.sbs_power_w = 0.0;
    let ch = common::channels(&cfg, 1);
    let sol = solve_bnc_misocp(&cfg, &ch, &params(1)).unwrap();
    assert_eq!(sol.status, SolutionStatus::Infeasible);
    assert!(!sol.has_allocation());
}

#[test]
fn loose_gap_tolerance_bounds_the_ratio() {
    let cfg = common::tiny(1, 2, 3, 2, 2);
    let ch = common::channels(&cfg, 4);
    let p = AlgoParams { gap_tol: 0.5, ..params(4) };
    let sol = solve_bnc_misocp(&cfg, &ch, &p).unwrap();
    assert!(sol.has_allocation());
    let bound = sol.stats.bound.unwrap();
    assert!(bound / sol.objective <= 1.5 + 1e-9, "{bound} / {}", sol.objective);
}

#[test]
fn backhaul_bound_dominates_access_throughput() {
    let cfg = common::tiny(1, 2, 3, 2, 2);
    for seed in 0..3 {
        let ch = common::channels(&cfg, seed);
        let ub = solve_upper_bound(&cfg, &ch, &params(seed)).unwrap();
        let bnc = solve_bnc_misocp(&cfg, &ch, &params(seed)).unwrap();
        let rnp = solve_rnp1(&cfg, &ch, &params(seed)).unwrap();
        for s in [&bnc, &rnp] {
            if s.has_allocation() {
                assert!(s.access_throughput_bps <= ub.bound_bps * (1.0 + 1e-6));
                assert!(s.access_throughput_bps >= lower_bound_rate(&cfg) * (1.0 - 1e-6));
            }
        }
    }
}

#[test]
fn initial_point_fails_fast_on_counting_conflict() {
    let mut cfg = common::tiny(1, 1, 6, 5, 2);
    cfg.sbs_streams = 4;
    let ch = common::channels(&cfg, 0);
    match find_initial_point(&cfg, &ch, &params(0), InitMode::Full, None) {
        Err(Error::NoInitialPoint { attempts }) => assert_eq!(attempts, 0),
        other => panic!("expected a counting failure, got {other:?}"),
    }
}

#[test]
fn initial_point_found_with_generous_power() {
    let mut cfg = common::tiny(1, 2, 3, 2, 2);
    cfg.mbs_power_w = dbm_to_watts(40.0);
    cfg.sbs_power_w = dbm_to_watts(30.0);
    let mut found = 0;
    for seed in 0..100 {
        let ch = common::channels(&cfg, seed);
        if let Ok(init) = find_initial_point(&cfg, &ch, &params(seed), InitMode::Full, None) {
            found += 1;
            let rep = check_feasibility_pprime(&cfg, &ch, &init.allocation, 1e-6).unwrap();
            assert!(rep.feasible, "seed {seed}: {:?}", rep.failures());
            assert!(init.state.is_binary(0.0));
        }
    }
    assert!(found >= 95, "{found}/100");
}

fn nondecreasing_within_lambda(sol: &rrm_core::algorithms::RrmSolution) -> bool {
    sol.trace.windows(2).skip(1).all(|w| w[0].lambda != w[1].lambda || w[1].objective >= w[0].objective - 1e-7 * w[0].objective.abs().max(1.0))
}

#[test]
fn rnp1_is_feasible_monotone_and_below_optimum() {
    let cfg = common::tiny_rates(2, 2, 2, 1, &[0, 2]);
    let mut runs = 0;
    for seed in 0..6 {
        let ch = common::channels(&cfg, seed);
        let bnc = solve_bnc_misocp(&cfg, &ch, &params(seed)).unwrap();
        let Ok(sol) = solve_rnp1(&cfg, &ch, &params(seed)) else { continue };
        if !sol.has_allocation() {
            continue;
        }
        runs += 1;
        let rep = check_feasibility_pprime(&cfg, &ch, sol.allocation.as_ref().unwrap(), 1e-6).unwrap();
        assert!(rep.feasible, "{:?}", rep.failures());
        assert!(nondecreasing_within_lambda(&sol), "{:?}", sol.trace);
        assert!(sol.objective <= bnc.objective * (1.0 + 1e-6));
    }
    assert!(runs >= 4, "{runs} runs");
}

#[test]
fn rnp1_is_deterministic() {
    let cfg = common::tiny(1, 2, 3, 2, 2);
    let ch = common::channels(&cfg, 5);
    let mut a = solve_rnp1(&cfg, &ch, &params(5)).unwrap();
    let mut b = solve_rnp1(&cfg, &ch, &params(5)).unwrap();
    a.stats.wall_time_s = 0.0;
    b.stats.wall_time_s = 0.0;
    for r in a.trace.iter_mut().chain(b.trace.iter_mut()) {
        r.wall_time_s = 0.0;
    }
    assert_eq!(a, b);
}

#[test]
fn gain_only_variant_does_not_beat_full_beamformers_on_average() {
    let cfg = common::tiny_rates(2, 2, 2, 1, &[0, 2]);
    let (mut full, mut gains, mut n) = (0.0, 0.0, 0);
    for seed in 0..20 {
        let (topo, ch) = common::draw(&cfg, seed);
        let p = params(seed);
        let beams = predesign_beams(&cfg, &ch, &topo, &ChannelParams::default(), 5, seed, &p).unwrap();
        let (Ok(r1), Ok(r2)) = (solve_rnp1(&cfg, &ch, &p), solve_rnp2(&cfg, &ch, &p, &beams)) else { continue };
        if r2.has_allocation() {
            let rep = check_feasibility_pprime(&cfg, &ch, r2.allocation.as_ref().unwrap(), 1e-6).unwrap();
            assert!(rep.feasible, "{:?}", rep.failures());
            assert!(nondecreasing_within_lambda(&r2));
        }
        if r1.has_allocation() && r2.has_allocation() {
            full += r1.objective;
            gains += r2.objective;
            n += 1;
        }
    }
    assert!(n >= 10, "only {n} paired runs");
    assert!(gains <= full * (1.0 + 1e-9), "gains {gains} vs full {full}");
}

fn optimum_binaries(cfg: &rrm_core::system::SystemConfig, seed: u64) -> (rrm_core::channel::ChannelSet, BinaryState) {
    let ch = common::channels(cfg, seed);
    let bf = brute_force_optimum(cfg, &ch, &BruteForceParams::default()).unwrap();
    (ch, bf.best.unwrap().binaries)
}

#[test]
fn repair_keeps_binary_input() {
    let cfg = common::tiny(1, 2, 3, 2, 2);
    let (ch, best) = optimum_binaries(&cfg, 2);
    let sol = round_and_repair(&cfg, &ch, &best, &params(2), InitMode::Full, None).unwrap();
    let got = &sol.allocation.as_ref().unwrap().binaries;
    assert_eq!((&got.alpha, &got.beta, &got.kappa), (&best.alpha, &best.beta, &best.kappa));
    assert_eq!(sol.stats.conic_solves, 1);
    assert_eq!(sol.stats.repairs, 0);
}

#[test]
fn repair_rounds_rows_to_their_argmax() {
    let cfg = common::tiny(1, 2, 3, 2, 2);
    let (ch, best) = optimum_binaries(&cfg, 2);
    let u = (0..3).find(|&u| best.ue_rate(u, 2).is_some()).unwrap();
    let j = best.ue_rate(u, 2).unwrap();
    let mut relaxed = best.clone();
    relaxed.alpha[u * 2 + j] = 0.6;
    relaxed.alpha[u * 2 + (1 - j)] = 0.4;
    let sol = round_and_repair(&cfg, &ch, &relaxed, &params(2), InitMode::Full, None).unwrap();
    assert_eq!(sol.allocation.unwrap().binaries.alpha, best.alpha);
}

#[test]
fn repair_breaks_ties_toward_the_lowest_index() {
    let cfg = common::tiny(1, 2, 3, 2, 2);
    let (ch, best) = optimum_binaries(&cfg, 2);
    let u = (0..3).find(|&u| best.ue_rate(u, 2).is_some()).unwrap();
    let mut relaxed = best.clone();
    relaxed.alpha[u * 2] = 0.5;
    relaxed.alpha[u * 2 + 1] = 0.5;
    let sol = round_and_repair(&cfg, &ch, &relaxed, &params(2), InitMode::Full, None).unwrap();
    assert_eq!(sol.allocation.unwrap().binaries.ue_rate(u, 2), Some(0));
}

#[test]
fn repair_rejects_mismatched_state() {
    let cfg = common::tiny(1, 2, 3, 2, 2);
    let ch = common::channels(&cfg, 0);
    let wrong = BinaryState::fixed(vec![0.0; 2], vec![0.0; 2], vec![0.0; 6]);
    assert!(round_and_repair(&cfg, &ch, &wrong, &params(0), InitMode::Full, None).is_err());
}
