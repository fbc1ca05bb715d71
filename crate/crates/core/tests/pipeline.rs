use std::sync::Arc;

use proptest::prelude::*;
use sfma::bench::DropSetup;
use sfma::channel::db_to_linear;
use sfma::pairing::{pair_users, UserTerminal};
use sfma::power::{
    extreme_point_min_rate, groups_from_pairing, inter_group_allocate, intra_group_allocate, solve, Group, Member,
    SolverConfig,
};
use sfma::semantic_rate::{pair_sum_rate, InterferenceProfile, Link};

fn drop_users(m: usize, seed: u64) -> Vec<UserTerminal> {
    DropSetup::default().users(m, seed).unwrap()
}

fn table() -> Arc<InterferenceProfile> {
    Arc::new(InterferenceProfile::default_table())
}

fn feasible_seeds(m: usize, p_max: f64, count: usize) -> Vec<u64> {
    let cfg = SolverConfig::new(p_max, table());
    (0..500u64)
        .filter(|&s| solve(&drop_users(m, s), &cfg).is_ok())
        .take(count)
        .collect()
}

#[test]
fn two_users_take_the_whole_budget() {
    let users = drop_users(2, 1);
    let cfg = SolverConfig::new(1000.0, table());
    let s = solve(&users, &cfg).unwrap();
    assert_eq!(s.pairing.pairs.len(), 1);
    assert!((s.allocation.total_power() - 1000.0).abs() <= 1e-6 * 1000.0);
    let (x, y) = s.allocation.splits[0];
    let direct = pair_sum_rate(x, y, &cfg.profile, &users[0].link, &users[1].link);
    assert!((s.sum_rate - direct).abs() < 1e-12);
}

#[test]
fn optimized_beats_equal_power() {
    let p_max = 1000.0;
    let cfg = SolverConfig::new(p_max, table());
    for seed in feasible_seeds(10, p_max, 5) {
        let users = drop_users(10, seed);
        let s = solve(&users, &cfg).unwrap();
        let per_group = p_max / s.groups.len() as f64;
        let equal: f64 = s
            .pairing
            .pairs
            .iter()
            .map(|&(a, b)| pair_sum_rate(per_group / 2.0, per_group / 2.0, &cfg.profile, &users[a].link, &users[b].link))
            .sum();
        assert!(s.sum_rate > equal, "seed {seed}: {} vs {equal}", s.sum_rate);
    }
}

#[test]
fn more_budget_never_hurts() {
    let mut worse = 0;
    let mut compared = 0;
    for seed in feasible_seeds(10, 1000.0, 20) {
        let users = drop_users(10, seed);
        let a = solve(&users, &SolverConfig::new(1000.0, table())).unwrap();
        let b = solve(&users, &SolverConfig::new(2000.0, table())).unwrap();
        compared += 1;
        if b.sum_rate < a.sum_rate {
            worse += 1;
        }
    }
    assert!(compared >= 10);
    assert_eq!(worse, 0);
}

#[test]
fn rho_one_reduces_to_conventional_noma() {
    let one = Arc::new(InterferenceProfile::Constant(1.0));
    for (g, n) in [(3e-11, 4e-11), (8e-10, 4e-11), (1e-12, 1e-13)] {
        let u = |id| UserTerminal {
            id,
            link: Link::new(g * (1.0 + id as f64), n).unwrap(),
            min_rate: 0.5,
            frame_time: 0,
        };
        let group = Group::new(u(0), u(1), one.clone());
        for m in [Member::First, Member::Second] {
            let link = group.users[m as usize].link;
            // p g / 2 = (2^R - 1)(p g / 2 + n) solved for p
            let t = 2f64.powf(0.5);
            let closed = 2.0 * (t - 1.0) * n / (link.gain * (1.0 - (t - 1.0)));
            let got = extreme_point_min_rate(&group, m, 1.0).unwrap();
            assert!(((got - closed) / closed).abs() < 1e-9, "{got} vs {closed}");
        }
    }

    let users = drop_users(10, 3);
    let mut cfg = SolverConfig::new(1e4, one);
    cfg.delta_max = 100;
    let users: Vec<UserTerminal> = users.into_iter().map(|u| UserTerminal { min_rate: 0.2, ..u }).collect();
    let s = solve(&users, &cfg).unwrap();
    for ((&(a, b), &(x, y)), r) in s.pairing.pairs.iter().zip(&s.allocation.splits).zip(&s.rates) {
        let conv = |p: f64, q: f64, l: &Link| (1.0 + p * l.gain / (q * l.gain + l.noise)).log2();
        let ra = conv(x, y, &users[a].link);
        let rb = conv(y, x, &users[b].link);
        assert!(((r[0] - ra) / ra).abs() < 1e-9);
        assert!(((r[1] - rb) / rb).abs() < 1e-9);
    }
}

#[test]
fn sfma_beats_baselines_on_most_drops() {
    use sfma::baselines::{fnoma_sum_rate, ofdma_sum_rate, ojscc_sum_rate, pair_distinctive};
    let p_max = db_to_linear(30.0);
    let cfg = SolverConfig::new(p_max, table());
    let (mut feasible, mut wins) = (0, 0);
    for seed in 0..1000u64 {
        let users = drop_users(10, seed ^ 0x5eed);
        let Ok(s) = solve(&users, &cfg) else { continue };
        feasible += 1;
        let pairs = pair_distinctive(&users).unwrap();
        let best = fnoma_sum_rate(&users, &pairs, p_max, 0.8)
            .unwrap()
            .max(ojscc_sum_rate(&users, &pairs, p_max).unwrap())
            .max(ofdma_sum_rate(&users, p_max).unwrap());
        if s.sum_rate >= best {
            wins += 1;
        }
    }
    assert!(feasible >= 900, "{feasible}");
    assert!(wins as f64 >= 0.95 * feasible as f64, "{wins}/{feasible}");
}

fn arb_group() -> impl Strategy<Value = Group> {
    (-11.5f64..-9.0, -11.5f64..-9.0, 0.0f64..=1.0, 0.0f64..1.5, any::<bool>()).prop_map(|(a, b, rho, r, use_table)| {
        let u = |id, e: f64| UserTerminal {
            id,
            link: Link::new(10f64.powf(e), 4e-11).unwrap(),
            min_rate: r,
            frame_time: 0,
        };
        let profile = if use_table {
            Arc::new(InterferenceProfile::default_table())
        } else {
            Arc::new(InterferenceProfile::Constant(rho))
        };
        Group::new(u(0, a), u(1, b), profile)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn allocation_invariants(groups in prop::collection::vec(arb_group(), 1..5), p_dbw in 20.0f64..40.0) {
        let p_max = db_to_linear(p_dbw);
        let tol = 1e-6 * p_max;
        let Ok(a) = inter_group_allocate(&groups, p_max, tol) else { return Ok(()) };
        prop_assert!(a.total_power() <= p_max + tol);
        prop_assert!(a.mu >= 0.0);
        prop_assert!(a.group_totals.iter().all(|&p| p >= 0.0));
        prop_assert!(a.lambdas.iter().all(|&(x, y)| x >= 0.0 && y >= 0.0));
        if a.mu > 0.0 {
            prop_assert!((a.total_power() - p_max).abs() <= tol);
        }
        for (g, &p) in groups.iter().zip(&a.group_totals) {
            if p == 0.0 { continue; }
            let (x, y) = intra_group_allocate(g, p, 1e-7 * p).unwrap();
            prop_assert!(x >= 0.0 && y >= 0.0);
            prop_assert!((x + y - p).abs() <= 2.0 * f64::EPSILON * p);
            let [r1, r2] = g.rates(x, y);
            prop_assert!(r1 >= g.users[0].min_rate - 1e-6 && r2 >= g.users[1].min_rate - 1e-6);
        }
    }

    #[test]
    fn pairing_is_a_perfect_matching_on_matched_users(seed in 0u64..10_000, half in 1usize..8) {
        let users = drop_users(2 * half, seed);
        let a = pair_users(&users, 10.0, &InterferenceProfile::default_table(), 0.1, 4).unwrap();
        let mut seen = vec![0; users.len()];
        for &(x, y) in &a.pairs {
            prop_assert!(x < y);
            seen[x] += 1;
            seen[y] += 1;
        }
        for &u in &a.unmatched {
            seen[u] += 1;
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
        prop_assert!(a.gaps.iter().all(|&g| g <= 4));
        let again = pair_users(&users, 10.0, &InterferenceProfile::default_table(), 0.1, 4).unwrap();
        prop_assert_eq!(a, again);
    }

    #[test]
    fn solve_groups_follow_pairing(seed in 0u64..2_000) {
        let users = drop_users(6, seed);
        let cfg = SolverConfig::new(db_to_linear(30.0), table());
        if let Ok(s) = solve(&users, &cfg) {
            let rebuilt = groups_from_pairing(&users, &s.pairing, &cfg.profile);
            prop_assert_eq!(rebuilt.len(), s.groups.len());
            for (g, r) in s.groups.iter().zip(&s.rates) {
                prop_assert!(r[0] >= g.users[0].min_rate - 1e-6);
                prop_assert!(r[1] >= g.users[1].min_rate - 1e-6);
            }
        }
    }
}
