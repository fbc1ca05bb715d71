//! Comparison schemes: fixed-split NOMA with SIC (F-NOMA), half-band
//! orthogonal JSCC (O-JSCC) and equal-share OFDMA.
//!
//! Orthogonal schemes scale noise with the bandwidth share, so a single user
//! holding the full band sees the same capacity under every scheme.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::pairing::{temporal_gap, PairingAssignment, UserTerminal};
use crate::semantic_rate::{sinr_conventional, Link};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    Fnoma,
    Ojscc,
    Ofdma,
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaselineKind::Fnoma => "fnoma",
            BaselineKind::Ojscc => "ojscc",
            BaselineKind::Ofdma => "ofdma",
        })
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fnoma" => Ok(BaselineKind::Fnoma),
            "ojscc" => Ok(BaselineKind::Ojscc),
            "ofdma" => Ok(BaselineKind::Ofdma),
            other => Err(Error::invalid(format!("unknown baseline {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineScheme {
    pub kind: BaselineKind,
    /// Power fraction given to the weaker user of an F-NOMA group.
    pub fnoma_eta: f64,
}

impl BaselineScheme {
    pub fn new(kind: BaselineKind, fnoma_eta: f64) -> Result<Self> {
        check_eta(fnoma_eta)?;
        Ok(BaselineScheme { kind, fnoma_eta })
    }

    /// Sum rate of this scheme. Grouped schemes pair users with
    /// [`pair_distinctive`].
    pub fn sum_rate(&self, users: &[UserTerminal], p_max: f64) -> Result<f64> {
        match self.kind {
            BaselineKind::Ofdma => ofdma_sum_rate(users, p_max),
            BaselineKind::Fnoma => fnoma_sum_rate(users, &pair_distinctive(users)?, p_max, self.fnoma_eta),
            BaselineKind::Ojscc => ojscc_sum_rate(users, &pair_distinctive(users)?, p_max),
        }
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("fnoma_eta must lie in (0, 1), got {eta}")))
    }
}

fn check_budget(p_max: f64) -> Result<()> {
    if p_max >= 0.0 && p_max.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("p_max must be non-negative, got {p_max}")))
    }
}

/// Pairs the strongest user with the weakest, the second strongest with the
/// second weakest, and so on. Equal gains keep id order.
pub fn pair_distinctive(users: &[UserTerminal]) -> Result<PairingAssignment> {
    if users.is_empty() || !users.len().is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "pairing needs an even, non-zero user count, got {}",
            users.len()
        )));
    }
    let mut order: Vec<usize> = (0..users.len()).collect();
    order.sort_by(|&a, &b| users[b].link.gain.total_cmp(&users[a].link.gain));
    let m = order.len();
    let mut pairs = Vec::with_capacity(m / 2);
    let mut gaps = Vec::with_capacity(m / 2);
    for i in 0..m / 2 {
        let (a, b) = (order[i], order[m - 1 - i]);
        let (a, b) = (a.min(b), a.max(b));
        gaps.push(temporal_gap(&users[a], &users[b]));
        pairs.push((users[a].id, users[b].id));
    }
    Ok(PairingAssignment {
        pairs,
        gaps,
        unmatched: Vec::new(),
    })
}

/// Rates `(weak, strong)` of one F-NOMA group: the strong user cancels the
/// weak user's signal, the weak user decodes under the strong user's power.
pub fn fnoma_group_rates(weak: &Link, strong: &Link, p_k: f64, eta: f64) -> (f64, f64) {
    let p_weak = eta * p_k;
    let p_strong = p_k - p_weak;
    (
        sinr_conventional(p_weak, p_strong, weak).log2_1p(),
        sinr_conventional(p_strong, 0.0, strong).log2_1p(),
    )
}

trait Log2OnePlus {
    fn log2_1p(self) -> f64;
}

impl Log2OnePlus for f64 {
    fn log2_1p(self) -> f64 {
        self.ln_1p() / std::f64::consts::LN_2
    }
}

fn by_id(users: &[UserTerminal], id: usize) -> Result<&UserTerminal> {
    users
        .iter()
        .find(|u| u.id == id)
        .ok_or_else(|| Error::invalid(format!("pair refers to unknown user {id}")))
}

pub fn fnoma_sum_rate(
    users: &[UserTerminal],
    pairing: &PairingAssignment,
    p_max: f64,
    eta: f64,
) -> Result<f64> {
    check_eta(eta)?;
    check_budget(p_max)?;
    if pairing.pairs.is_empty() {
        return Ok(0.0);
    }
    let p_k = p_max / pairing.pairs.len() as f64;
    pairing.pairs.iter().try_fold(0.0, |acc, &(a, b)| {
        let (ua, ub) = (by_id(users, a)?, by_id(users, b)?);
        // ties: the second member is treated as the weak one
        let (weak, strong) = if ua.link.gain > ub.link.gain { (ub, ua) } else { (ua, ub) };
        let (rw, rs) = fnoma_group_rates(&weak.link, &strong.link, p_k, eta);
        Ok(acc + rw + rs)
    })
}

/// Rate of one user holding `fraction` of the band and power `p`.
pub fn orthogonal_rate(p: f64, link: &Link, fraction: f64) -> f64 {
    fraction * (p * link.gain / (link.noise * fraction)).log2_1p()
}

pub fn ojscc_sum_rate(users: &[UserTerminal], pairing: &PairingAssignment, p_max: f64) -> Result<f64> {
    check_budget(p_max)?;
    if pairing.pairs.is_empty() {
        return Ok(0.0);
    }
    let p_k = p_max / pairing.pairs.len() as f64;
    pairing.pairs.iter().try_fold(0.0, |acc, &(a, b)| {
        let (ua, ub) = (by_id(users, a)?, by_id(users, b)?);
        Ok(acc + orthogonal_rate(p_k / 2.0, &ua.link, 0.5) + orthogonal_rate(p_k / 2.0, &ub.link, 0.5))
    })
}

pub fn ofdma_sum_rate(users: &[UserTerminal], p_max: f64) -> Result<f64> {
    check_budget(p_max)?;
    if users.is_empty() {
        return Err(Error::invalid("OFDMA needs at least one user"));
    }
    let m = users.len() as f64;
    Ok(users.iter().map(|u| orthogonal_rate(p_max / m, &u.link, 1.0 / m)).sum())
}
