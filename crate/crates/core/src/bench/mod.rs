//! Monte Carlo sweeps over user count and base-station power.
//!
//! Each drop places users, draws a channel and requested frames from a seed
//! derived from `(root_seed, users, power index, drop index)`, then evaluates
//! SFMA and the three baselines on the same users. Drops are independent, so
//! they run in parallel and are merged back in index order.

pub mod config;
pub mod csv;

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;

use crate::baselines::{fnoma_sum_rate, ofdma_sum_rate, ojscc_sum_rate, pair_distinctive};
use crate::channel::{db_to_linear, place_users, ChannelModel};
use crate::error::{Error, Result};
use crate::pairing::UserTerminal;
use crate::power::{solve, SolverConfig};
use crate::seed::{derive, stream_rng, Stream};
use crate::semantic_rate::{InterferenceProfile, Link};

pub use config::{RhoProfileSpec, ScenarioConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scheme {
    Sfma,
    Fnoma,
    Ojscc,
    Ofdma,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Sfma, Scheme::Fnoma, Scheme::Ojscc, Scheme::Ofdma];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Sfma => "sfma",
            Scheme::Fnoma => "fnoma",
            Scheme::Ojscc => "ojscc",
            Scheme::Ofdma => "ofdma",
        }
    }

    pub fn from_name(s: &str) -> Option<Scheme> {
        Scheme::ALL.into_iter().find(|x| x.name() == s)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Physical setup shared by all drops of a sweep.
#[derive(Debug, Clone)]
pub struct DropSetup {
    pub area_side_m: f64,
    pub channel: ChannelModel,
    pub min_rate: f64,
    pub frame_window: u32,
}

impl DropSetup {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        DropSetup {
            area_side_m: cfg.area_side_m,
            channel: ChannelModel {
                shadow_sigma_db: cfg.shadow_sigma_db,
                noise_dbw: cfg.noise_dbw,
                rayleigh: cfg.rayleigh,
            },
            min_rate: cfg.min_rate,
            frame_window: cfg.frame_window,
        }
    }

    /// Users of one drop.
    pub fn users(&self, m: usize, seed: u64) -> Result<Vec<UserTerminal>> {
        let topo = place_users(m, self.area_side_m, seed)?;
        let ch = self.channel.draw(&topo, seed)?;
        let mut frames = stream_rng(seed, Stream::FrameTimes);
        (0..m)
            .map(|id| {
                Ok(UserTerminal {
                    id,
                    link: Link::new(ch.gains[id], ch.noise_powers[id])?,
                    min_rate: self.min_rate,
                    frame_time: i64::from(frames.random_range(0..self.frame_window)),
                })
            })
            .collect()
    }
}

impl Default for DropSetup {
    fn default() -> Self {
        DropSetup::from_config(&ScenarioConfig::new(vec![2], vec![0.0], 1, 0))
    }
}

/// Sum rates of one drop. `sfma` is `None` when SFMA was infeasible.
#[derive(Debug, Clone, PartialEq)]
pub struct DropRecord {
    pub users: usize,
    pub p_max_dbw: f64,
    pub drop: usize,
    pub seed: u64,
    pub sfma: Option<f64>,
    pub fnoma: f64,
    pub ojscc: f64,
    pub ofdma: f64,
}

impl DropRecord {
    pub fn rate(&self, scheme: Scheme) -> Option<f64> {
        match scheme {
            Scheme::Sfma => self.sfma,
            Scheme::Fnoma => Some(self.fnoma),
            Scheme::Ojscc => Some(self.ojscc),
            Scheme::Ofdma => Some(self.ofdma),
        }
    }
}

/// Aggregate of one `(scheme, users, p_max)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub scheme: Scheme,
    pub users: usize,
    pub p_max_dbw: f64,
    pub mean_sum_rate: f64,
    pub std_sum_rate: f64,
    /// Drops included in the statistics.
    pub drops: usize,
    /// Drops excluded because SFMA was infeasible.
    pub infeasible: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunReport {
    /// Sorted by scheme, then users, then power.
    pub cells: Vec<CellSummary>,
    pub records: Vec<DropRecord>,
}

impl RunReport {
    pub fn cell(&self, scheme: Scheme, users: usize, p_max_dbw: f64) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.scheme == scheme && c.users == users && c.p_max_dbw == p_max_dbw)
    }
}

/// Evaluates SFMA and the baselines on one drop.
pub fn evaluate_drop(
    users: &[UserTerminal],
    solver: &SolverConfig,
    fnoma_eta: f64,
) -> Result<(Option<f64>, f64, f64, f64)> {
    let sfma = match solve(users, solver) {
        Ok(s) => Some(s.sum_rate),
        Err(e @ (Error::Infeasible { .. } | Error::NoConvergence { .. })) => {
            log::debug!("sfma drop excluded: {e}");
            None
        }
        Err(e) => return Err(e),
    };
    let pairs = pair_distinctive(users)?;
    Ok((
        sfma,
        fnoma_sum_rate(users, &pairs, solver.p_max, fnoma_eta)?,
        ojscc_sum_rate(users, &pairs, solver.p_max)?,
        ofdma_sum_rate(users, solver.p_max)?,
    ))
}

/// Runs every `(users, p_max, drop)` combination of `cfg`.
pub fn run_sweep(cfg: &ScenarioConfig) -> Result<RunReport> {
    cfg.validate()?;
    let profile = cfg.profile(None)?;
    run_sweep_with_profile(cfg, profile)
}

/// As [`run_sweep`] with an already-built profile.
pub fn run_sweep_with_profile(cfg: &ScenarioConfig, profile: Arc<InterferenceProfile>) -> Result<RunReport> {
    cfg.validate()?;
    let setup = DropSetup::from_config(cfg);
    let mut records = Vec::with_capacity(cfg.user_counts.len() * cfg.p_max_dbw.len() * cfg.drops);
    for &m in &cfg.user_counts {
        for (pi, &p_dbw) in cfg.p_max_dbw.iter().enumerate() {
            let mut solver = SolverConfig::new(db_to_linear(p_dbw), profile.clone());
            solver.alpha = cfg.alpha;
            solver.delta_max = cfg.delta_max;
            let one = |d: usize| -> Result<DropRecord> {
                let seed = derive(cfg.root_seed, &[m as u64, pi as u64, d as u64]);
                let users = setup.users(m, seed)?;
                let (sfma, fnoma, ojscc, ofdma) = evaluate_drop(&users, &solver, cfg.fnoma_eta)?;
                Ok(DropRecord {
                    users: m,
                    p_max_dbw: p_dbw,
                    drop: d,
                    seed,
                    sfma,
                    fnoma,
                    ojscc,
                    ofdma,
                })
            };
            let cell: Vec<DropRecord> = if cfg.parallel {
                (0..cfg.drops).into_par_iter().map(one).collect::<Result<_>>()?
            } else {
                (0..cfg.drops).map(one).collect::<Result<_>>()?
            };
            records.extend(cell);
        }
    }
    Ok(RunReport {
        cells: summarize(&records),
        records,
    })
}

/// Mean and sample standard deviation; a single value has zero spread.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Aggregates records per cell. Drops where SFMA was infeasible are left out
/// of every scheme so all schemes average over the same channel draws.
pub fn summarize(records: &[DropRecord]) -> Vec<CellSummary> {
    let mut keys: Vec<(usize, f64)> = Vec::new();
    for r in records {
        if !keys.iter().any(|&(m, p)| m == r.users && p == r.p_max_dbw) {
            keys.push((r.users, r.p_max_dbw));
        }
    }
    keys.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut cells = Vec::with_capacity(keys.len() * Scheme::ALL.len());
    for scheme in Scheme::ALL {
        for &(m, p) in &keys {
            let in_cell = records.iter().filter(|r| r.users == m && r.p_max_dbw == p);
            let infeasible = in_cell.clone().filter(|r| r.sfma.is_none()).count();
            let values: Vec<f64> = in_cell.filter(|r| r.sfma.is_some()).filter_map(|r| r.rate(scheme)).collect();
            let (mean, std) = mean_std(&values);
            cells.push(CellSummary {
                scheme,
                users: m,
                p_max_dbw: p,
                mean_sum_rate: mean,
                std_sum_rate: std,
                drops: values.len(),
                infeasible,
            });
        }
    }
    cells
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(parallel: bool) -> ScenarioConfig {
        let mut cfg = ScenarioConfig::new(vec![2, 4], vec![20.0, 30.0], 3, 42);
        cfg.parallel = parallel;
        cfg
    }

    #[test]
    fn one_drop_two_users() {
        let cfg = ScenarioConfig::new(vec![2], vec![30.0], 1, 1);
        let report = run_sweep(&cfg).unwrap();
        assert_eq!(report.cells.len(), 4);
        assert_eq!(report.records.len(), 1);
        let names: Vec<&str> = report.cells.iter().map(|c| c.scheme.name()).collect();
        assert_eq!(names, ["sfma", "fnoma", "ojscc", "ofdma"]);
    }

    #[test]
    fn parallel_matches_serial() {
        assert_eq!(run_sweep(&tiny(true)).unwrap(), run_sweep(&tiny(false)).unwrap());
    }

    #[test]
    fn means_match_records() {
        let report = run_sweep(&tiny(true)).unwrap();
        for c in &report.cells {
            let vals: Vec<f64> = report
                .records
                .iter()
                .filter(|r| r.users == c.users && r.p_max_dbw == c.p_max_dbw && r.sfma.is_some())
                .map(|r| r.rate(c.scheme).unwrap())
                .collect();
            assert_eq!(vals.len(), c.drops);
            if !vals.is_empty() {
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                assert!((mean - c.mean_sum_rate).abs() <= 1e-12 * mean.abs().max(1.0));
            }
        }
    }

    #[test]
    fn drops_are_reproducible_in_isolation() {
        let setup = DropSetup::default();
        let seed = derive(7, &[10, 0, 3]);
        assert_eq!(setup.users(10, seed).unwrap(), setup.users(10, seed).unwrap());
        let frames: Vec<i64> = setup.users(10, seed).unwrap().iter().map(|u| u.frame_time).collect();
        assert!(frames.iter().all(|&t| (0..6).contains(&t)));
    }

    #[test]
    fn mean_std_values() {
        assert_eq!(mean_std(&[3.0]), (3.0, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!(mean_std(&[]).0.is_nan());
    }
}
