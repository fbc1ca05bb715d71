//! Brute-force oracles on small random instances, used by the `verify`
//! command as a quick self-check of an installed build.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::pairing::{pair_users, temporal_gap, PairingAssignment, UserTerminal};
use crate::power::{inter_group_allocate, intra_group_allocate, kkt_residuals, split_objective, Group};
use crate::seed::{stream_rng, Stream};
use crate::semantic_rate::{
    calibrate_rho, pair_sum_rate, sinr_conventional, sinr_semantic, InterferenceProfile, Link,
};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, worst: f64, limit: f64, unit: &str) -> CheckOutcome {
    CheckOutcome {
        name,
        passed: worst <= limit,
        detail: format!("worst {worst:.3e} {unit} (limit {limit:.1e})"),
    }
}

fn random_link(rng: &mut ChaCha8Rng) -> Link {
    let gain = 10f64.powf(rng.random_range(-12.0..-9.0));
    let noise = 10f64.powf(rng.random_range(-11.5..-10.0));
    Link::new(gain, noise).expect("positive draws")
}

fn random_users(rng: &mut ChaCha8Rng, m: usize, min_rate: f64) -> Vec<UserTerminal> {
    (0..m)
        .map(|id| UserTerminal {
            id,
            link: random_link(rng),
            min_rate,
            frame_time: rng.random_range(0..8),
        })
        .collect()
}

/// Gap-feasible pair that both members strictly prefer to their partner,
/// checked against every pair of users.
pub fn brute_force_blocking_pair(
    users: &[UserTerminal],
    assignment: &PairingAssignment,
    user_power: f64,
    profile: &InterferenceProfile,
    alpha: f64,
    delta_max: u64,
) -> Option<(usize, usize)> {
    let value = |a: usize, b: usize| {
        pair_sum_rate(user_power, user_power, profile, &users[a].link, &users[b].link)
            - alpha * users[a].frame_time.abs_diff(users[b].frame_time) as f64
    };
    let partners = assignment.partners(users.len());
    let current = |a: usize| partners[a].map_or(f64::NEG_INFINITY, |b| value(a, b));
    for i in 0..users.len() {
        for j in (i + 1)..users.len() {
            if partners[i] == Some(j) || temporal_gap(&users[i], &users[j]) > delta_max {
                continue;
            }
            let v = value(i, j);
            if v > current(i) && v > current(j) {
                return Some((i, j));
            }
        }
    }
    None
}

/// Best sum rate over a uniform simplex grid of group totals (`K <= 3`) with
/// each group at its equal split; points violating a minimum rate are skipped.
pub fn simplex_grid_best(groups: &[Group], p_max: f64, steps: usize) -> Option<f64> {
    let k = groups.len();
    let h = p_max / steps as f64;
    let feasible_rate = |g: &Group, p: f64| {
        let [a, b] = g.rates(g.eta[0] * p, g.eta[1] * p);
        (a >= g.users[0].min_rate - 1e-12 && b >= g.users[1].min_rate - 1e-12).then_some(a + b)
    };
    let mut best: Option<f64> = None;
    let mut visit = |ps: &[f64]| {
        let mut total = 0.0;
        for (g, &p) in groups.iter().zip(ps) {
            match feasible_rate(g, p) {
                Some(r) => total += r,
                None => return,
            }
        }
        best = Some(best.map_or(total, |b: f64| b.max(total)));
    };
    match k {
        1 => visit(&[p_max]),
        2 => (0..=steps).for_each(|i| visit(&[i as f64 * h, (steps - i) as f64 * h])),
        3 => {
            for i in 0..=steps {
                for j in 0..=(steps - i) {
                    visit(&[i as f64 * h, j as f64 * h, (steps - i - j) as f64 * h]);
                }
            }
        }
        _ => return None,
    }
    best
}

/// Runs every oracle with `cases` random instances each.
pub fn run_all(seed: u64, cases: usize) -> Vec<CheckOutcome> {
    let mut rng = stream_rng(seed, Stream::Placement);
    let mut out = Vec::new();

    let mut worst = 0.0f64;
    for _ in 0..cases * 10 {
        let link = random_link(&mut rng);
        let (a, b) = (rng.random_range(0.01..100.0), rng.random_range(0.01..100.0));
        let (s, c) = (sinr_semantic(a, b, 1.0, &link), sinr_conventional(a, b, &link));
        worst = worst.max(((s - c) / c).abs());
    }
    out.push(outcome("rho = 1 reduces to conventional SINR", worst, 1e-12, "relative"));

    let mut worst = 0.0f64;
    for _ in 0..cases {
        let link = random_link(&mut rng);
        let (a, b) = (rng.random_range(0.1..50.0), rng.random_range(0.1..50.0));
        let target: f64 = rng.random_range(0.0..=1.0);
        let mse = target * b * link.gain + link.noise;
        let got = calibrate_rho(a, b, &link, mse).map_or(f64::INFINITY, |c| c.rho);
        worst = worst.max((got - target).abs());
    }
    out.push(outcome("calibration round trip", worst, 1e-9, "absolute"));

    let profile = InterferenceProfile::default_table();
    let mut blocking = 0usize;
    let mut gap_violations = 0usize;
    for case in 0..cases {
        let m = 4 + 2 * (case % 4);
        let users = random_users(&mut rng, m, 1.0);
        let Ok(a) = pair_users(&users, 5.0, &profile, 0.1, 4) else {
            blocking += 1;
            continue;
        };
        if brute_force_blocking_pair(&users, &a, 5.0, &profile, 0.1, 4).is_some() {
            blocking += 1;
        }
        gap_violations += a.gaps.iter().filter(|&&g| g > 4).count();
    }
    out.push(CheckOutcome {
        name: "pairing has no blocking pair",
        passed: blocking == 0 && gap_violations == 0,
        detail: format!("{blocking} unstable, {gap_violations} gap violations over {cases} instances"),
    });

    let mut worst_gap = 0.0f64;
    let mut worst_kkt = 0.0f64;
    for _ in 0..cases {
        let k = rng.random_range(1..=3usize);
        let rho_val = rng.random_range(0.0..=1.0);
        let shared = Arc::new(InterferenceProfile::Constant(rho_val));
        let groups: Vec<Group> = (0..k)
            .map(|_| {
                let u = random_users(&mut rng, 2, 0.5);
                Group::new(u[0], UserTerminal { id: 1, ..u[1] }, shared.clone())
            })
            .collect();
        let p_max = 100.0;
        let Ok(alloc) = inter_group_allocate(&groups, p_max, 1e-7 * p_max) else {
            continue;
        };
        let ours: f64 = groups.iter().zip(&alloc.group_totals).map(|(g, &p)| g.sum_rate(p)).sum();
        if let Some(best) = simplex_grid_best(&groups, p_max, 300) {
            worst_gap = worst_gap.max(best - ours);
        }
        worst_kkt = worst_kkt.max(kkt_residuals(&groups, &alloc, p_max).max_normalized);
    }
    out.push(outcome("inter-group beats simplex grid", worst_gap, 1e-3, "bits/s/Hz short"));
    out.push(outcome("inter-group KKT residual", worst_kkt, 1e-4, "normalized"));

    let mut worst = 0.0f64;
    for _ in 0..cases {
        let shared = Arc::new(InterferenceProfile::Constant(rng.random_range(0.0..=1.0)));
        let u = random_users(&mut rng, 2, 0.0);
        let g = Group::new(u[0], UserTerminal { id: 1, ..u[1] }, shared);
        let p_k = rng.random_range(1.0..100.0);
        let Ok((x, _)) = intra_group_allocate(&g, p_k, 1e-7 * p_k) else {
            worst = f64::INFINITY;
            continue;
        };
        let f = split_objective(&g, p_k);
        let n = 20_000;
        let best = (0..=n).map(|i| f(p_k * i as f64 / n as f64)).fold(f64::NEG_INFINITY, f64::max);
        worst = worst.max(best - f(x));
    }
    out.push(outcome("intra-group beats split grid", worst, 1e-6, "bits/s/Hz short"));
    out
}
