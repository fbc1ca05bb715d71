//! User placement and large-scale channel realizations.
//!
//! Users are dropped uniformly in a square cell with the base station at its
//! center. Each link sees log-distance path loss `37 + 30 log10(d)` plus
//! log-normal shadowing, and optionally a unit-mean exponential (Rayleigh power)
//! multiplier.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Normal};

use crate::error::{Error, Result};
use crate::seed::{stream_rng, Stream};

/// Distances below this are clamped before evaluating path loss (meters).
pub const MIN_DISTANCE_M: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub bs_position: [f64; 2],
    pub users: Vec<[f64; 2]>,
    pub area_side: f64,
}

impl Topology {
    pub fn distance(&self, user: usize) -> f64 {
        let [x, y] = self.users[user];
        (x - self.bs_position[0]).hypot(y - self.bs_position[1])
    }

    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }
}

/// Per-user linear power gains `|h|^2` and noise powers in watts.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub gains: Vec<f64>,
    pub noise_powers: Vec<f64>,
}

/// Drops `n` users uniformly in a square of side `area_side` centered on the
/// base station at the origin.
pub fn place_users(n: usize, area_side: f64, seed: u64) -> Result<Topology> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "user count must be even and at least 2, got {n}"
        )));
    }
    if !(area_side > 0.0 && area_side.is_finite()) {
        return Err(Error::invalid(format!(
            "area side must be positive, got {area_side}"
        )));
    }
    let mut rng = stream_rng(seed, Stream::Placement);
    let half = area_side / 2.0;
    let users = (0..n)
        .map(|_| {
            [
                rng.random_range(-half..=half),
                rng.random_range(-half..=half),
            ]
        })
        .collect();
    Ok(Topology {
        bs_position: [0.0, 0.0],
        users,
        area_side,
    })
}

/// Path loss in dB at distance `d` meters.
pub fn path_loss_db(d: f64) -> f64 {
    37.0 + 30.0 * d.max(MIN_DISTANCE_M).log10()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// SNR in dB of a signal of power `p` over `noise`. Zero power maps to `-inf`.
pub fn snr_db(p: f64, noise: f64) -> Result<f64> {
    if !(noise > 0.0) {
        return Err(Error::invalid(format!("noise must be positive, got {noise}")));
    }
    if p < 0.0 {
        return Err(Error::invalid(format!("power must be non-negative, got {p}")));
    }
    if p == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(linear_to_db(p / noise))
}

/// Large-scale propagation parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    pub shadow_sigma_db: f64,
    pub noise_dbw: f64,
    /// Multiply each gain by an Exp(1) draw.
    pub rayleigh: bool,
}

impl Default for ChannelModel {
    fn default() -> Self {
        ChannelModel {
            shadow_sigma_db: 4.0,
            noise_dbw: -104.0,
            rayleigh: false,
        }
    }
}

impl ChannelModel {
    pub fn draw(&self, topology: &Topology, seed: u64) -> Result<ChannelRealization> {
        if !(self.shadow_sigma_db >= 0.0 && self.shadow_sigma_db.is_finite()) {
            return Err(Error::invalid(format!(
                "shadowing std must be non-negative, got {}",
                self.shadow_sigma_db
            )));
        }
        let shadows = shadowing_db(topology.len(), self.shadow_sigma_db, seed);
        let mut fading = stream_rng(seed, Stream::Fading);
        let gains = (0..topology.len())
            .zip(shadows)
            .map(|(u, s)| {
                let g = db_to_linear(-(path_loss_db(topology.distance(u)) + s));
                if self.rayleigh {
                    let f: f64 = Exp1.sample(&mut fading);
                    // Exp1 can return exactly 0; keep gains strictly positive.
                    g * f.max(f64::MIN_POSITIVE)
                } else {
                    g
                }
            })
            .collect();
        let noise = db_to_linear(self.noise_dbw);
        Ok(ChannelRealization {
            gains,
            noise_powers: vec![noise; topology.len()],
        })
    }
}

/// Draws a channel with path loss and shadowing only.
pub fn draw_channel(
    topology: &Topology,
    shadow_sigma_db: f64,
    noise_dbw: f64,
    seed: u64,
) -> Result<ChannelRealization> {
    ChannelModel {
        shadow_sigma_db,
        noise_dbw,
        rayleigh: false,
    }
    .draw(topology, seed)
}

/// Shadowing samples in dB for `n` users.
pub fn shadowing_db(n: usize, sigma_db: f64, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, Stream::Shadowing);
    if sigma_db == 0.0 {
        return vec![0.0; n];
    }
    let normal = Normal::new(0.0, sigma_db).expect("finite non-negative sigma");
    (0..n).map(|_| normal.sample(&mut rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn placement_stays_in_the_cell() {
        let topo = place_users(10, 500.0, 7).unwrap();
        assert_eq!(topo.len(), 10);
        for [x, y] in &topo.users {
            assert!((-250.0..=250.0).contains(x));
            assert!((-250.0..=250.0).contains(y));
        }
    }

    #[test]
    fn placement_rejects_bad_input() {
        assert!(place_users(2, 0.0, 1).is_err());
        assert!(place_users(3, 500.0, 1).is_err());
        assert!(place_users(0, 500.0, 1).is_err());
    }

    #[test]
    fn placement_is_deterministic() {
        let a = place_users(12, 500.0, 99).unwrap();
        let b = place_users(12, 500.0, 99).unwrap();
        assert_eq!(a, b);
        let c = place_users(12, 500.0, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn path_loss_values() {
        assert_eq!(path_loss_db(1.0), 37.0);
        assert!((path_loss_db(100.0) - 97.0).abs() < 1e-12);
        // 37 + 30 * log10(250) = 37 + 30 * 2.397940008672037...
        assert!((path_loss_db(250.0) - 108.938_200_260_161_1).abs() < 1e-9);
        assert_eq!(path_loss_db(0.0), 37.0);
        assert_eq!(path_loss_db(0.5), 37.0);
    }

    #[test]
    fn noise_conversion() {
        let topo = Topology {
            bs_position: [0.0, 0.0],
            users: vec![[100.0, 0.0], [0.0, 100.0]],
            area_side: 500.0,
        };
        let ch = draw_channel(&topo, 0.0, -104.0, 1).unwrap();
        for &n in &ch.noise_powers {
            assert!((n - 3.981_071_705_534_972e-11).abs() < 1e-22);
        }
        for &g in &ch.gains {
            assert!((g - 10f64.powf(-9.7)).abs() <= 1e-24);
        }
    }

    #[test]
    fn seeds_change_shadowing_only() {
        let topo = place_users(6, 500.0, 3).unwrap();
        let a = draw_channel(&topo, 4.0, -104.0, 10).unwrap();
        let b = draw_channel(&topo, 4.0, -104.0, 11).unwrap();
        assert_ne!(a.gains, b.gains);
        let pa = draw_channel(&topo, 0.0, -104.0, 10).unwrap();
        let pb = draw_channel(&topo, 0.0, -104.0, 11).unwrap();
        assert_eq!(pa.gains, pb.gains);
    }

    #[test]
    fn shadowing_statistics() {
        let s = shadowing_db(100_000, 4.0, 2024);
        let n = s.len() as f64;
        let mean = s.iter().sum::<f64>() / n;
        let var = s.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 0.05, "mean {mean}");
        assert!((var.sqrt() / 4.0 - 1.0).abs() < 0.02, "std {}", var.sqrt());
    }

    #[test]
    fn rayleigh_keeps_gains_positive() {
        let topo = place_users(20, 500.0, 5).unwrap();
        let model = ChannelModel {
            rayleigh: true,
            ..Default::default()
        };
        let ch = model.draw(&topo, 5).unwrap();
        assert!(ch.gains.iter().all(|&g| g > 0.0));
        let plain = draw_channel(&topo, 4.0, -104.0, 5).unwrap();
        assert_ne!(ch.gains, plain.gains);
    }

    #[test]
    fn snr_conversion() {
        assert_eq!(snr_db(1.0, 1.0).unwrap(), 0.0);
        assert!((snr_db(10.0, 1.0).unwrap() - 10.0).abs() < 1e-12);
        assert!((snr_db(3.981e-11 * 10.0, 3.981e-11).unwrap() - 10.0).abs() < 1e-9);
        assert_eq!(snr_db(0.0, 1.0).unwrap(), f64::NEG_INFINITY);
        assert!(snr_db(1.0, 0.0).is_err());
        assert!(snr_db(1.0, -1.0).is_err());
    }

    proptest::proptest! {
        #[test]
        fn path_loss_monotone(a in 1.0f64..1e4, b in 1.0f64..1e4) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            proptest::prop_assert!(path_loss_db(lo) <= path_loss_db(hi));
        }
    }
}
