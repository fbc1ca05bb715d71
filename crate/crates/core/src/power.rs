//! Inter- and intra-group power allocation.
//!
//! The inter-group stage fixes each group's split fractions (equal split) and
//! water-fills the base-station budget across groups: for a water level `mu`
//! every group takes the largest of its two minimum-rate powers and the
//! stationary point of its sum rate at slope `mu`, and `mu` is bisected until
//! the totals exhaust the budget. The intra-group stage then re-splits each
//! group total with a golden-section search over the minimum-rate-feasible
//! interval, holding the interference factors at their group-total values.

use std::sync::Arc;

use crate::error::{Error, Result, Stage};
use crate::pairing::{pair_users, PairingAssignment, UserTerminal};
use crate::semantic_rate::{rho, rho_derivative, user_rate, InterferenceProfile, Link};

const LN_2: f64 = std::f64::consts::LN_2;

/// Damping factor of the minimum-rate fixed-point iteration.
pub const FIXED_POINT_DAMPING: f64 = 0.5;
pub const FIXED_POINT_MAX_ITER: usize = 200;
pub const FIXED_POINT_REL_TOL: f64 = 1e-12;

/// Two paired users with their split fractions and interference profiles.
#[derive(Debug, Clone)]
pub struct Group {
    pub users: [UserTerminal; 2],
    /// Power fractions `(eta_1, eta_2)`, `p_{k,i} = eta_i * p_k`.
    pub eta: [f64; 2],
    /// `profiles[0]` gives rho_21 (seen by user 1), `profiles[1]` rho_12.
    pub profiles: [Arc<InterferenceProfile>; 2],
}

/// Which member of a group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Member {
    First = 0,
    Second = 1,
}

impl Member {
    fn other(self) -> Member {
        match self {
            Member::First => Member::Second,
            Member::Second => Member::First,
        }
    }
}

impl Group {
    /// Equal split and one shared profile.
    pub fn new(first: UserTerminal, second: UserTerminal, profile: Arc<InterferenceProfile>) -> Self {
        Group {
            users: [first, second],
            eta: [0.5, 0.5],
            profiles: [profile.clone(), profile],
        }
    }

    pub fn with_eta(mut self, eta_first: f64) -> Result<Self> {
        if !(eta_first > 0.0 && eta_first < 1.0) {
            return Err(Error::invalid(format!("eta must lie in (0, 1), got {eta_first}")));
        }
        self.eta = [eta_first, 1.0 - eta_first];
        Ok(self)
    }

    pub fn link(&self, m: Member) -> &Link {
        &self.users[m as usize].link
    }

    pub fn rho(&self, m: Member, group_power: f64) -> f64 {
        rho(&self.profiles[m as usize], group_power, self.link(m))
    }

    pub fn rho_prime(&self, m: Member, group_power: f64) -> f64 {
        rho_derivative(&self.profiles[m as usize], group_power, self.link(m))
    }

    /// Rates of both members for split `(p1, p2)`, rho taken at `p1 + p2`.
    pub fn rates(&self, p1: f64, p2: f64) -> [f64; 2] {
        let total = p1 + p2;
        [
            user_rate(p1, p2, self.rho(Member::First, total), self.link(Member::First)),
            user_rate(p2, p1, self.rho(Member::Second, total), self.link(Member::Second)),
        ]
    }

    /// Sum rate at group total `p` split by `eta`.
    pub fn sum_rate(&self, p: f64) -> f64 {
        let [a, b] = self.rates(self.eta[0] * p, self.eta[1] * p);
        a + b
    }

    /// `d/dp` of [`Group::sum_rate`] in bits/s/Hz per watt, including the
    /// dependence of rho on the group total.
    pub fn sum_rate_derivative(&self, p: f64) -> f64 {
        [Member::First, Member::Second]
            .into_iter()
            .map(|m| {
                let link = self.link(m);
                let (es, eo) = (self.eta[m as usize], self.eta[m.other() as usize]);
                let r = self.rho(m, p);
                let dr = self.rho_prime(m, p);
                let g = link.gain;
                // r_i = log2(N) - log2(D), N = (es + r eo) p g + s, D = r eo p g + s
                let n = (es + r * eo) * p * g + link.noise;
                let d = r * eo * p * g + link.noise;
                let dn = (es + r * eo) * g + dr * eo * p * g;
                let dd = r * eo * g + dr * eo * p * g;
                (dn / n - dd / d) / LN_2
            })
            .sum()
    }

    /// Minimum-rate constraint `c_i >= 0` at group total `p` under `eta`, and
    /// the magnitude of its terms (for normalization).
    fn rate_constraint(&self, m: Member, p: f64) -> (f64, f64) {
        let link = self.link(m);
        let (ps, po) = (self.eta[m as usize] * p, self.eta[m.other() as usize] * p);
        let r = self.rho(m, p);
        let t = 2f64.powf(self.users[m as usize].min_rate);
        let lhs = (ps + r * po) * link.gain + link.noise;
        let rhs = t * (r * po * link.gain + link.noise);
        (lhs - rhs, lhs + rhs)
    }

    /// `d c_i / d p_k`.
    fn rate_constraint_derivative(&self, m: Member, p: f64) -> f64 {
        let (es, eo) = (self.eta[m as usize], self.eta[m.other() as usize]);
        let t = 2f64.powf(self.users[m as usize].min_rate);
        let g = self.link(m).gain;
        g * ((1.0 - t) * (eo * self.rho(m, p) + self.rho_prime(m, p) * eo * p) + es)
    }
}

/// Group power at which member `m` meets its minimum rate with equality under
/// the group's split fractions.
pub fn extreme_point_min_rate(group: &Group, m: Member, p_guess: f64) -> Result<f64> {
    let user = &group.users[m as usize];
    if user.min_rate == 0.0 {
        return Ok(0.0);
    }
    if !(p_guess > 0.0 && p_guess.is_finite()) {
        return Err(Error::invalid(format!("initial guess must be positive, got {p_guess}")));
    }
    let (es, eo) = (group.eta[m as usize], group.eta[m.other() as usize]);
    let t = 2f64.powf(user.min_rate);
    let numerator = user.link.noise * (t - 1.0);
    let denominator = |p: f64| user.link.gain * (es + eo * group.rho(m, p) * (1.0 - t));
    let unreachable = || Error::Infeasible {
        stage: Stage::InterGroup,
        reason: format!(
            "user {} cannot reach rate {} at any power under its rho profile",
            user.id, user.min_rate
        ),
    };
    let constant = matches!(*group.profiles[m as usize], InterferenceProfile::Constant(_));

    let mut p = p_guess;
    let mut doublings = 0;
    for _ in 0..FIXED_POINT_MAX_ITER {
        let den = denominator(p);
        if !(den > 0.0) {
            // Rate unreachable at this power; rho may fall at higher power.
            if constant || doublings >= 64 {
                return Err(unreachable());
            }
            p *= 2.0;
            doublings += 1;
            continue;
        }
        let next = (1.0 - FIXED_POINT_DAMPING) * p + FIXED_POINT_DAMPING * numerator / den;
        let done = ((next - p) / p).abs() < FIXED_POINT_REL_TOL;
        p = next;
        if done {
            return Ok(p);
        }
    }
    log::debug!("damped fixed point stalled for user {}, bisecting", user.id);
    fixed_point_bisect(numerator, &denominator, p).ok_or(Error::NoConvergence {
        iterations: FIXED_POINT_MAX_ITER,
        last: p,
    })
}

// Root of p * den(p) - num = 0, bracketed by expanding around `start`.
fn fixed_point_bisect(num: f64, den: &impl Fn(f64) -> f64, start: f64) -> Option<f64> {
    let h = |p: f64| p * den(p) - num;
    let (mut lo, mut hi) = (start, start);
    for _ in 0..200 {
        if h(lo) < 0.0 {
            break;
        }
        lo /= 2.0;
    }
    for _ in 0..200 {
        if h(hi) > 0.0 {
            break;
        }
        hi *= 2.0;
    }
    if !(h(lo) < 0.0 && h(hi) > 0.0) {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Outcome of the stationary-point search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stationary {
    /// Sum-rate slope equals `mu` here.
    Root(f64),
    /// No crossing inside the bracket. `slope_above_mu` tells whether the slope
    /// stays above `mu` at the top of the bracket (the group wants more power).
    NoneFound { slope_above_mu: bool },
}

const SCAN_POINTS: usize = 48;

/// Solves `d(r_1 + r_2)/dp_k = mu` on `bracket`.
pub fn extreme_point_stationary(group: &Group, mu: f64, bracket: (f64, f64)) -> Result<Stationary> {
    let (lo, hi) = bracket;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::invalid(format!("invalid bracket [{lo}, {hi}]")));
    }
    if !(mu >= 0.0) {
        return Err(Error::invalid(format!("mu must be non-negative, got {mu}")));
    }
    let excess = |p: f64| group.sum_rate_derivative(p) - mu;
    let ratio = (hi / lo).powf(1.0 / (SCAN_POINTS - 1) as f64);
    let grid: Vec<f64> = (0..SCAN_POINTS)
        .map(|i| if i + 1 == SCAN_POINTS { hi } else { lo * ratio.powi(i as i32) })
        .collect();
    let values: Vec<f64> = grid.iter().map(|&p| excess(p)).collect();

    let objective = |p: f64| group.sum_rate(p) - mu * p;
    let mut best: Option<(f64, f64)> = None;
    let mut consider = |p: f64| {
        let v = objective(p);
        if best.is_none_or(|(_, bv)| v > bv) {
            best = Some((p, v));
        }
    };
    for i in 1..SCAN_POINTS {
        if values[i - 1] > 0.0 && values[i] <= 0.0 {
            consider(bisect_decreasing(&excess, grid[i - 1], grid[i]));
        }
    }
    let top_positive = values[SCAN_POINTS - 1] > 0.0;
    if top_positive {
        consider(hi);
    }
    Ok(match best {
        Some((p, _)) if p == hi && top_positive => Stationary::NoneFound { slope_above_mu: true },
        Some((p, _)) => Stationary::Root(p),
        None => Stationary::NoneFound { slope_above_mu: false },
    })
}

fn bisect_decreasing(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if f(mid) > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
        if b - a <= 1e-14 * b {
            break;
        }
    }
    0.5 * (a + b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetState {
    /// Totals exhaust the budget and `mu > 0`.
    Active,
    /// Totals stay below the budget even at `mu = 0`.
    Slack,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    pub group_totals: Vec<f64>,
    pub splits: Vec<(f64, f64)>,
    /// Water level in bits/s/Hz per watt.
    pub mu: f64,
    pub lambdas: Vec<(f64, f64)>,
    pub budget: BudgetState,
}

impl PowerAllocation {
    pub fn total_power(&self) -> f64 {
        self.group_totals.iter().sum()
    }
}

#[derive(Debug, Clone, Copy)]
struct GroupCandidate {
    power: f64,
    saturated: bool,
}

struct InterGroupProblem<'a> {
    groups: &'a [Group],
    floors: Vec<f64>,
    bracket: (f64, f64),
}

impl InterGroupProblem<'_> {
    fn candidate(&self, k: usize, mu: f64) -> GroupCandidate {
        let (stationary, saturated) =
            match extreme_point_stationary(&self.groups[k], mu, self.bracket).expect("validated bracket") {
                Stationary::Root(p) => (p, false),
                Stationary::NoneFound { slope_above_mu: true } => (self.bracket.1, true),
                Stationary::NoneFound { slope_above_mu: false } => (0.0, false),
            };
        if self.floors[k] >= stationary {
            GroupCandidate { power: self.floors[k], saturated: false }
        } else {
            GroupCandidate { power: stationary, saturated }
        }
    }

    fn evaluate(&self, mu: f64) -> (Vec<f64>, f64, bool) {
        let cands: Vec<GroupCandidate> = (0..self.groups.len()).map(|k| self.candidate(k, mu)).collect();
        let total = cands.iter().map(|c| c.power).sum();
        let saturated = cands.iter().any(|c| c.saturated);
        (cands.into_iter().map(|c| c.power).collect(), total, saturated)
    }
}

/// Water-fills `p_max` across groups at their fixed split fractions.
pub fn inter_group_allocate(groups: &[Group], p_max: f64, tol: f64) -> Result<PowerAllocation> {
    if groups.is_empty() {
        return Err(Error::invalid("need at least one group"));
    }
    if !(p_max > 0.0 && p_max.is_finite()) {
        return Err(Error::invalid(format!("p_max must be positive, got {p_max}")));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tolerance must be positive, got {tol}")));
    }
    let k = groups.len();
    let guess = p_max / k as f64;
    let floors = groups
        .iter()
        .map(|g| {
            let a = extreme_point_min_rate(g, Member::First, guess)?;
            let b = extreme_point_min_rate(g, Member::Second, guess)?;
            Ok(a.max(b))
        })
        .collect::<Result<Vec<f64>>>()?;
    let floor_sum: f64 = floors.iter().sum();
    if floor_sum > p_max {
        return Err(Error::Infeasible {
            stage: Stage::InterGroup,
            reason: format!("minimum-rate powers need {floor_sum:.6e} W, budget is {p_max:.6e} W"),
        });
    }
    let problem = InterGroupProblem {
        groups,
        floors,
        bracket: (1e-6 * p_max, p_max),
    };

    let (p_zero, t_zero, _) = problem.evaluate(0.0);
    if t_zero < p_max - tol {
        return Ok(finish(groups, &problem, p_zero, 0.0, BudgetState::Slack));
    }

    let mut mu_hi = groups
        .iter()
        .map(|g| g.sum_rate_derivative(guess * 1e-3))
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let (mut p_hi, mut t_hi, _) = problem.evaluate(mu_hi);
    for _ in 0..200 {
        if t_hi <= p_max {
            break;
        }
        mu_hi *= 2.0;
        (p_hi, t_hi, _) = problem.evaluate(mu_hi);
    }
    let (mut mu_lo, mut p_lo, mut t_lo) = (0.0, p_zero, t_zero);

    for _ in 0..200 {
        let mid = 0.5 * (mu_lo + mu_hi);
        let (p, t, saturated) = problem.evaluate(mid);
        if (t - p_max).abs() < tol && !saturated {
            return Ok(finish(groups, &problem, p, mid, BudgetState::Active));
        }
        if t > p_max || saturated {
            (mu_lo, p_lo, t_lo) = (mid, p, t);
        } else {
            (mu_hi, p_hi, t_hi) = (mid, p, t);
        }
        if mu_hi - mu_lo <= 1e-15 * mu_hi {
            break;
        }
    }
    // The total jumps across the budget at this mu (flat or saturated slope);
    // blend the two sides so the budget is met exactly.
    let theta = if t_lo > t_hi { (p_max - t_hi) / (t_lo - t_hi) } else { 0.0 };
    let blended = p_hi
        .iter()
        .zip(&p_lo)
        .map(|(h, l)| h + theta.clamp(0.0, 1.0) * (l - h))
        .collect();
    Ok(finish(groups, &problem, blended, 0.5 * (mu_lo + mu_hi), BudgetState::Active))
}

fn finish(
    groups: &[Group],
    problem: &InterGroupProblem<'_>,
    totals: Vec<f64>,
    mu: f64,
    budget: BudgetState,
) -> PowerAllocation {
    let lambdas = groups
        .iter()
        .zip(&totals)
        .zip(&problem.floors)
        .map(|((g, &p), &floor)| recover_lambdas(g, p, floor, mu))
        .collect();
    let splits = groups
        .iter()
        .zip(&totals)
        .map(|(g, &p)| (g.eta[0] * p, p - g.eta[0] * p))
        .collect();
    PowerAllocation {
        group_totals: totals,
        splits,
        mu,
        lambdas,
        budget,
    }
}

// Multipliers of the minimum-rate constraints: nonzero only when the group sits
// on its floor and the sum-rate slope alone falls short of mu.
fn recover_lambdas(group: &Group, p: f64, floor: f64, mu: f64) -> (f64, f64) {
    if p <= 0.0 || (p - floor).abs() > 1e-9 * floor.max(f64::MIN_POSITIVE) {
        return (0.0, 0.0);
    }
    let shortfall = mu - group.sum_rate_derivative(p);
    if shortfall <= 0.0 {
        return (0.0, 0.0);
    }
    // The binding member is the one whose constraint is tighter at p.
    let (c1, s1) = group.rate_constraint(Member::First, p);
    let (c2, s2) = group.rate_constraint(Member::Second, p);
    let binding = if c1 / s1 <= c2 / s2 { Member::First } else { Member::Second };
    let slope = group.rate_constraint_derivative(binding, p);
    if !(slope > 0.0) {
        return (0.0, 0.0);
    }
    let lambda = shortfall / slope;
    match binding {
        Member::First => (lambda, 0.0),
        Member::Second => (0.0, lambda),
    }
}

/// Golden-section maximization of a unimodal `f` on `[a, b]` down to width `tol`.
pub fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        }
    }
    0.5 * (a + b)
}

/// Range of `p_{k,1}` in which both members meet their minimum rates, with
/// rho held at its value for group total `p_k`.
pub fn feasible_split_interval(group: &Group, p_k: f64) -> Option<(f64, f64)> {
    let need = |m: Member| {
        let link = group.link(m);
        let c = 2f64.powf(group.users[m as usize].min_rate) - 1.0;
        let r = group.rho(m, p_k);
        c * (r * p_k * link.gain + link.noise) / (link.gain * (1.0 + c * r))
    };
    let lo = need(Member::First).max(0.0);
    let hi = (p_k - need(Member::Second)).min(p_k);
    (lo <= hi).then_some((lo, hi))
}

/// Objective of the intra-group split: sum rate as a function of `p_{k,1}`.
pub fn split_objective(group: &Group, p_k: f64) -> impl Fn(f64) -> f64 + '_ {
    let r1 = group.rho(Member::First, p_k);
    let r2 = group.rho(Member::Second, p_k);
    move |x: f64| {
        let y = p_k - x;
        user_rate(x, y, r1, group.link(Member::First)) + user_rate(y, x, r2, group.link(Member::Second))
    }
}

const SPLIT_SCAN_POINTS: usize = 33;

/// Largest amount by which a midpoint of equally spaced samples falls below
/// the chord of its neighbours; zero for a concave sequence.
pub fn midpoint_concavity_violation(samples: &[f64]) -> f64 {
    samples
        .windows(3)
        .map(|w| 0.5 * (w[0] + w[2]) - w[1])
        .fold(0.0, f64::max)
}

/// Best split `(p_{k,1}, p_{k,2})` of `p_k` subject to both minimum rates.
pub fn intra_group_allocate(group: &Group, p_k: f64, tol: f64) -> Result<(f64, f64)> {
    if !(p_k > 0.0 && p_k.is_finite()) {
        return Err(Error::invalid(format!("group power must be positive, got {p_k}")));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tolerance must be positive, got {tol}")));
    }
    let (lo, hi) = feasible_split_interval(group, p_k).ok_or_else(|| Error::Infeasible {
        stage: Stage::IntraGroup,
        reason: format!(
            "no split of {p_k:.6e} W meets the minimum rates of users {} and {}",
            group.users[0].id, group.users[1].id
        ),
    })?;
    let f = split_objective(group, p_k);
    if hi - lo <= tol {
        let x = 0.5 * (lo + hi);
        return Ok((x, p_k - x));
    }
    // Coarse scan picks the bracket; golden section refines inside it.
    let step = (hi - lo) / (SPLIT_SCAN_POINTS - 1) as f64;
    let at = |i: usize| if i + 1 == SPLIT_SCAN_POINTS { hi } else { lo + step * i as f64 };
    let scan: Vec<f64> = (0..SPLIT_SCAN_POINTS).map(|i| f(at(i))).collect();
    let dip = midpoint_concavity_violation(&scan);
    if dip > 1e-9 * scan.iter().fold(1.0f64, |m, v| m.max(v.abs())) {
        log::debug!(
            "split objective of users {} and {} is not concave at {p_k:.3e} W (dip {dip:.3e})",
            group.users[0].id,
            group.users[1].id
        );
    }
    let best = scan
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let a = at(best.0.saturating_sub(1));
    let b = at((best.0 + 1).min(SPLIT_SCAN_POINTS - 1));
    let refined = golden_section_max(&f, a, b, tol);
    let x = [refined, lo, hi, at(best.0)]
        .into_iter()
        .fold((refined, f(refined)), |acc, x| {
            let v = f(x);
            if v > acc.1 {
                (x, v)
            } else {
                acc
            }
        })
        .0;
    Ok((x, p_k - x))
}

/// Residuals of the inter-group KKT system at a given allocation, evaluated at
/// each group's fixed split fractions.
#[derive(Debug, Clone, PartialEq)]
pub struct KktReport {
    /// `|dR/dp + sum lambda dc/dp - mu|` per group.
    pub stationarity: Vec<f64>,
    /// `|lambda_i c_i|` per group and member.
    pub slackness: Vec<(f64, f64)>,
    /// `|mu (P_max - sum p)|`.
    pub budget_slackness: f64,
    /// `max(0, sum p - P_max)`.
    pub budget_excess: f64,
    /// `max(0, -c_i)` per group and member.
    pub rate_violation: Vec<(f64, f64)>,
    /// `max(0, -p_k)` over groups.
    pub negative_power: f64,
    /// Largest scale-free residual over all conditions.
    pub max_normalized: f64,
}

pub fn kkt_residuals(groups: &[Group], alloc: &PowerAllocation, p_max: f64) -> KktReport {
    let mu = alloc.mu;
    let mut stationarity = Vec::with_capacity(groups.len());
    let mut slackness = Vec::with_capacity(groups.len());
    let mut rate_violation = Vec::with_capacity(groups.len());
    let mut worst = 0.0f64;
    let mut negative_power = 0.0f64;

    for ((g, &p), &(l1, l2)) in groups.iter().zip(&alloc.group_totals).zip(&alloc.lambdas) {
        negative_power = negative_power.max(-p);
        let slope = g.sum_rate_derivative(p);
        let t1 = l1 * g.rate_constraint_derivative(Member::First, p);
        let t2 = l2 * g.rate_constraint_derivative(Member::Second, p);
        let s = (slope + t1 + t2 - mu).abs();
        let scale = slope.abs().max(t1.abs()).max(t2.abs()).max(mu).max(f64::MIN_POSITIVE);
        stationarity.push(s);
        worst = worst.max(s / scale);

        let mut slack = [0.0; 2];
        let mut viol = [0.0; 2];
        for (i, (m, l)) in [(Member::First, l1), (Member::Second, l2)].into_iter().enumerate() {
            let (c, size) = g.rate_constraint(m, p);
            slack[i] = (l * c).abs();
            viol[i] = (-c).max(0.0);
            if l > 0.0 {
                worst = worst.max(c.abs() / size);
            }
            worst = worst.max(viol[i] / size);
            if l < 0.0 {
                worst = f64::INFINITY;
            }
        }
        slackness.push((slack[0], slack[1]));
        rate_violation.push((viol[0], viol[1]));
    }

    let total = alloc.total_power();
    let budget_excess = (total - p_max).max(0.0);
    let budget_slackness = (mu * (p_max - total)).abs();
    worst = worst.max(budget_excess / p_max);
    if mu > 0.0 {
        worst = worst.max((p_max - total).abs() / p_max);
    }
    if mu < 0.0 {
        worst = f64::INFINITY;
    }
    worst = worst.max(negative_power / p_max);

    KktReport {
        stationarity,
        slackness,
        budget_slackness,
        budget_excess,
        rate_violation,
        negative_power,
        max_normalized: worst,
    }
}

/// Parameters of the full pairing + allocation pipeline.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub p_max: f64,
    pub alpha: f64,
    pub delta_max: u64,
    /// Inter-group budget tolerance as a fraction of `p_max`.
    pub budget_tol: f64,
    /// Intra-group split tolerance as a fraction of the group total.
    pub split_tol: f64,
    pub profile: Arc<InterferenceProfile>,
}

impl SolverConfig {
    pub fn new(p_max: f64, profile: Arc<InterferenceProfile>) -> Self {
        SolverConfig {
            p_max,
            alpha: 0.1,
            delta_max: 4,
            budget_tol: 1e-6,
            split_tol: 1e-6,
            profile,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub pairing: PairingAssignment,
    pub groups: Vec<Group>,
    pub allocation: PowerAllocation,
    /// Per group, rates of both members at the final split.
    pub rates: Vec<[f64; 2]>,
    pub sum_rate: f64,
}

/// Builds the groups of a pairing, lower id first, one shared profile.
pub fn groups_from_pairing(
    users: &[UserTerminal],
    pairing: &PairingAssignment,
    profile: &Arc<InterferenceProfile>,
) -> Vec<Group> {
    pairing
        .pairs
        .iter()
        .map(|&(a, b)| Group::new(users[a], users[b], profile.clone()))
        .collect()
}

/// Pairs users under equal power, then allocates power across and within groups.
pub fn solve(users: &[UserTerminal], config: &SolverConfig) -> Result<Solution> {
    if users.is_empty() || !users.len().is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "solve needs an even, non-zero user count, got {}",
            users.len()
        )));
    }
    let k = users.len() / 2;
    let user_power = config.p_max / k as f64 / 2.0;
    let pairing = pair_users(users, user_power, &config.profile, config.alpha, config.delta_max)?;
    if !pairing.is_feasible() {
        return Err(Error::Infeasible {
            stage: Stage::Pairing,
            reason: format!("no gap-feasible partner for users {:?}", pairing.unmatched),
        });
    }
    let groups = groups_from_pairing(users, &pairing, &config.profile);
    let mut allocation = inter_group_allocate(&groups, config.p_max, config.budget_tol * config.p_max)?;

    let mut rates = Vec::with_capacity(k);
    for (g, (&p, split)) in groups.iter().zip(allocation.group_totals.iter().zip(&mut allocation.splits)) {
        if p <= 0.0 {
            *split = (0.0, 0.0);
            rates.push([0.0, 0.0]);
            continue;
        }
        let (x, y) = intra_group_allocate(g, p, config.split_tol * p)?;
        *split = (x, y);
        rates.push(g.rates(x, y));
    }
    for (g, r) in groups.iter().zip(&rates) {
        for (u, &rate) in g.users.iter().zip(r) {
            if rate < u.min_rate - 1e-6 {
                return Err(Error::Infeasible {
                    stage: Stage::IntraGroup,
                    reason: format!("user {} reaches {rate:.6} < {}", u.id, u.min_rate),
                });
            }
        }
    }
    let sum_rate = rates.iter().flatten().sum();
    Ok(Solution {
        pairing,
        groups,
        allocation,
        rates,
        sum_rate,
    })
}
