//! Preference-driven user pairing.
//!
//! Each candidate pair is scored by its group sum rate under a fixed equal
//! power split minus `alpha` times the temporal gap between the frames the two
//! users request. Pairing runs a proposal dynamic over one homogeneous user set
//! (a roommates instance): free users propose down their preference lists and a
//! matched user switches partner only for a strictly better, gap-feasible
//! proposer. Once proposals are exhausted, any remaining blocking pair is
//! resolved directly. Scores are symmetric, so every accepted move strictly
//! increases the descending-sorted vector of matched scores and the process
//! terminates in a stable matching.

use crate::error::{Error, Result};
use crate::semantic_rate::{pair_sum_rate, InterferenceProfile, Link};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserTerminal {
    pub id: usize,
    pub link: Link,
    /// Minimum rate in bits/s/Hz.
    pub min_rate: f64,
    /// Index of the frame this user requests.
    pub frame_time: i64,
}

/// Result of pairing. `pairs` hold user ids with the lower id first.
#[derive(Debug, Clone, PartialEq)]
pub struct PairingAssignment {
    pub pairs: Vec<(usize, usize)>,
    pub gaps: Vec<u64>,
    /// Users left without a gap-feasible partner.
    pub unmatched: Vec<usize>,
}

impl PairingAssignment {
    pub fn is_feasible(&self) -> bool {
        self.unmatched.is_empty()
    }

    /// Partner of each user id, `None` for unmatched users.
    pub fn partners(&self, n: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; n];
        for &(a, b) in &self.pairs {
            out[a] = Some(b);
            out[b] = Some(a);
        }
        out
    }
}

pub fn temporal_gap(u: &UserTerminal, v: &UserTerminal) -> u64 {
    u.frame_time.abs_diff(v.frame_time)
}

/// `V_uv = R_uv(p_u, p_v) - alpha * D_uv`.
pub fn preference_value(
    u: &UserTerminal,
    v: &UserTerminal,
    p_u: f64,
    p_v: f64,
    profile: &InterferenceProfile,
    alpha: f64,
) -> f64 {
    pair_sum_rate(p_u, p_v, profile, &u.link, &v.link) - alpha * temporal_gap(u, v) as f64
}

/// Symmetric matrix of preference values under a common per-user power.
#[derive(Debug, Clone)]
pub struct PreferenceMatrix {
    n: usize,
    values: Vec<f64>,
}

impl PreferenceMatrix {
    pub fn new(
        users: &[UserTerminal],
        user_power: f64,
        profile: &InterferenceProfile,
        alpha: f64,
    ) -> Self {
        let n = users.len();
        let mut values = vec![f64::NEG_INFINITY; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = preference_value(&users[i], &users[j], user_power, user_power, profile, alpha);
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        PreferenceMatrix { n, values }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Every other user sorted by descending preference, ties by ascending id.
    pub fn ranked_lists(&self) -> Vec<Vec<usize>> {
        (0..self.n)
            .map(|i| {
                let mut others: Vec<usize> = (0..self.n).filter(|&j| j != i).collect();
                others.sort_by(|&a, &b| self.get(i, b).total_cmp(&self.get(i, a)).then(a.cmp(&b)));
                others
            })
            .collect()
    }
}

fn check_users(users: &[UserTerminal]) -> Result<()> {
    if users.len() < 2 {
        return Err(Error::invalid("pairing needs at least two users"));
    }
    for (k, u) in users.iter().enumerate() {
        if u.id != k {
            return Err(Error::invalid(format!(
                "user ids must be dense and ordered, found id {} at position {k}",
                u.id
            )));
        }
        if !(u.min_rate >= 0.0) {
            return Err(Error::invalid(format!("user {k} has negative min rate")));
        }
    }
    Ok(())
}

pub fn build_preference_lists(
    users: &[UserTerminal],
    user_power: f64,
    profile: &InterferenceProfile,
    alpha: f64,
) -> Result<Vec<Vec<usize>>> {
    check_users(users)?;
    Ok(PreferenceMatrix::new(users, user_power, profile, alpha).ranked_lists())
}

/// Pairs users with `user_power` watts assumed for everybody.
pub fn pair_users(
    users: &[UserTerminal],
    user_power: f64,
    profile: &InterferenceProfile,
    alpha: f64,
    delta_max: u64,
) -> Result<PairingAssignment> {
    check_users(users)?;
    if !users.len().is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "pairing needs an even user count, got {}",
            users.len()
        )));
    }
    if !(alpha >= 0.0) {
        return Err(Error::invalid(format!("alpha must be non-negative, got {alpha}")));
    }
    let prefs = PreferenceMatrix::new(users, user_power, profile, alpha);
    Ok(match_with_preferences(users, &prefs, delta_max))
}

/// Runs the matching on precomputed preferences.
pub fn match_with_preferences(
    users: &[UserTerminal],
    prefs: &PreferenceMatrix,
    delta_max: u64,
) -> PairingAssignment {
    let n = users.len();
    let lists = prefs.ranked_lists();
    let feasible = |i: usize, j: usize| temporal_gap(&users[i], &users[j]) <= delta_max;

    let mut partner: Vec<Option<usize>> = vec![None; n];
    let mut cursor = vec![0usize; n];
    // Guards against non-finite scores breaking the potential argument.
    let mut budget = 4 * n * n * n.max(4);

    loop {
        // Proposal phase: lowest-id free user with candidates left proposes.
        while let Some(i) = (0..n).find(|&i| partner[i].is_none() && cursor[i] < lists[i].len()) {
            if budget == 0 {
                break;
            }
            budget -= 1;
            let j = lists[i][cursor[i]];
            cursor[i] += 1;
            if !feasible(i, j) {
                continue;
            }
            match partner[j] {
                None => {
                    partner[i] = Some(j);
                    partner[j] = Some(i);
                }
                Some(l) if prefs.get(i, j) > prefs.get(j, l) => {
                    partner[l] = None;
                    partner[i] = Some(j);
                    partner[j] = Some(i);
                }
                Some(_) => {}
            }
        }

        let Some((i, j)) = find_blocking_pair(&partner, prefs, &feasible) else {
            break;
        };
        if budget == 0 {
            log::warn!("pairing stopped at proposal budget with blocking pair ({i}, {j})");
            break;
        }
        budget -= 1;
        for u in [i, j] {
            if let Some(old) = partner[u].take() {
                partner[old] = None;
                cursor[old] = 0;
            }
        }
        partner[i] = Some(j);
        partner[j] = Some(i);
    }

    let mut pairs = Vec::with_capacity(n / 2);
    let mut gaps = Vec::with_capacity(n / 2);
    let mut unmatched = Vec::new();
    for (i, p) in partner.iter().enumerate() {
        match *p {
            Some(j) if i < j => {
                pairs.push((i, j));
                gaps.push(temporal_gap(&users[i], &users[j]));
            }
            Some(_) => {}
            None => unmatched.push(i),
        }
    }
    PairingAssignment { pairs, gaps, unmatched }
}

fn current_value(partner: &[Option<usize>], prefs: &PreferenceMatrix, i: usize) -> f64 {
    partner[i].map_or(f64::NEG_INFINITY, |p| prefs.get(i, p))
}

// First (lowest i, then j) gap-feasible pair that both strictly prefer to
// their current situation.
fn find_blocking_pair(
    partner: &[Option<usize>],
    prefs: &PreferenceMatrix,
    feasible: &impl Fn(usize, usize) -> bool,
) -> Option<(usize, usize)> {
    let n = partner.len();
    for i in 0..n {
        let vi = current_value(partner, prefs, i);
        for j in (i + 1)..n {
            if partner[i] == Some(j) {
                continue;
            }
            let v = prefs.get(i, j);
            if v > vi && v > current_value(partner, prefs, j) && feasible(i, j) {
                return Some((i, j));
            }
        }
    }
    None
}
