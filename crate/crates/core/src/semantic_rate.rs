//! Semantic interference factor and SINR/rate arithmetic.
//!
//! The semantic decoder suppresses part of the co-scheduled user's signal, so
//! the partner's received power enters the SINR denominator scaled by an
//! interference factor `rho` in `[0, 1]`. `rho = 1` recovers the conventional
//! NOMA SINR and `rho = 0` an interference-free link.
//!
//! `rho` is modelled as a function of the group's total power and of the
//! receiver's SNR at an equal power split. Three profile kinds are supported:
//! a constant, a bilinear table (loaded from CSV), and a logistic decay.

use std::path::Path;

use crate::channel::linear_to_db;
use crate::error::{Error, Result};

/// Bundled calibration table used when no other profile is configured.
pub const DEFAULT_TABLE_CSV: &str = include_str!("../data/default_rho.csv");

/// One receiver's channel: linear power gain and noise power in watts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub gain: f64,
    pub noise: f64,
}

impl Link {
    pub fn new(gain: f64, noise: f64) -> Result<Self> {
        if !(gain > 0.0 && gain.is_finite()) {
            return Err(Error::invalid(format!("link gain must be positive, got {gain}")));
        }
        if !(noise > 0.0 && noise.is_finite()) {
            return Err(Error::invalid(format!("link noise must be positive, got {noise}")));
        }
        Ok(Link { gain, noise })
    }

    /// SNR in dB this receiver sees from `p` watts of its own signal.
    pub fn snr_db(&self, p: f64) -> f64 {
        linear_to_db(p * self.gain / self.noise)
    }
}

/// Semantic interference factor model.
#[derive(Debug, Clone, PartialEq)]
pub enum InterferenceProfile {
    Constant(f64),
    Table(RhoTable),
    Parametric(LogisticRho),
}

impl InterferenceProfile {
    pub fn constant(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::invalid(format!("constant rho must lie in [0, 1], got {value}")));
        }
        Ok(InterferenceProfile::Constant(value))
    }

    pub fn default_table() -> Self {
        InterferenceProfile::Table(
            RhoTable::parse_csv(DEFAULT_TABLE_CSV).expect("bundled rho table is valid"),
        )
    }
}

/// Logistic decay `rho_max / (1 + exp(a (snr_db - b) + c * 10 log10(p / p_ref)))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticRho {
    pub rho_max: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub p_ref: f64,
}

impl LogisticRho {
    pub fn new(rho_max: f64, a: f64, b: f64, c: f64, p_ref: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho_max) {
            return Err(Error::invalid(format!("rho_max must lie in [0, 1], got {rho_max}")));
        }
        if !(p_ref > 0.0) || ![a, b, c, p_ref].iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("logistic rho parameters must be finite with p_ref > 0"));
        }
        Ok(LogisticRho { rho_max, a, b, c, p_ref })
    }

    // Exponent and its derivative with respect to the group power.
    fn exponent(&self, group_power: f64, link: &Link) -> (f64, f64) {
        let snr = link.snr_db(group_power / 2.0);
        let pw = linear_to_db(group_power / self.p_ref);
        let e = self.a * (snr - self.b) + self.c * pw;
        let de = (self.a + self.c) * 10.0 / (group_power * std::f64::consts::LN_10);
        (e, de)
    }

    fn eval(&self, group_power: f64, link: &Link) -> f64 {
        if group_power <= 0.0 {
            // Both log terms diverge to -inf; the sign of a + c picks the limit.
            let slope = self.a + self.c;
            return if slope > 0.0 {
                self.rho_max
            } else if slope < 0.0 {
                0.0
            } else {
                self.eval(self.p_ref, &Link { gain: link.gain, noise: link.noise })
            };
        }
        let (e, _) = self.exponent(group_power, link);
        self.rho_max * logistic(-e)
    }

    fn derivative(&self, group_power: f64, link: &Link) -> f64 {
        let (e, de) = self.exponent(group_power, link);
        let s = logistic(-e);
        // d/de [rho_max * sigma(-e)] = -rho_max * sigma(-e) * (1 - sigma(-e))
        -self.rho_max * s * (1.0 - s) * de
    }
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let ex = x.exp();
        ex / (1.0 + ex)
    }
}

/// Rectangular grid of rho values keyed by group power (dBW, rows) and
/// receiver SNR at an equal split (dB, columns).
#[derive(Debug, Clone, PartialEq)]
pub struct RhoTable {
    power_axis_dbw: Vec<f64>,
    snr_axis_db: Vec<f64>,
    values: Vec<f64>,
}

impl RhoTable {
    pub fn new(power_axis_dbw: Vec<f64>, snr_axis_db: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if power_axis_dbw.is_empty() || snr_axis_db.is_empty() {
            return Err(Error::InvalidTable("table axes must be non-empty".into()));
        }
        for (name, axis) in [("power", &power_axis_dbw), ("snr", &snr_axis_db)] {
            if axis.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidTable(format!("{name} axis has non-finite entries")));
            }
            if axis.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidTable(format!("{name} axis must be strictly increasing")));
            }
        }
        if values.len() != power_axis_dbw.len() * snr_axis_db.len() {
            return Err(Error::InvalidTable(format!(
                "expected {}x{} values, got {}",
                power_axis_dbw.len(),
                snr_axis_db.len(),
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidTable(format!("rho value {v} outside [0, 1]")));
        }
        Ok(RhoTable { power_axis_dbw, snr_axis_db, values })
    }

    /// Parses the CSV layout: the first row holds the SNR axis after a corner
    /// cell, every following row starts with its group power in dBW.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut rows = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = rows
            .next()
            .ok_or_else(|| Error::InvalidTable("empty table file".into()))?;
        let snr_axis = header
            .split(',')
            .skip(1)
            .map(|c| parse_cell(c, 1))
            .collect::<Result<Vec<_>>>()?;
        let mut power_axis = Vec::new();
        let mut values = Vec::new();
        for (i, row) in rows.enumerate() {
            let cells = row.split(',').collect::<Vec<_>>();
            if cells.len() != snr_axis.len() + 1 {
                return Err(Error::InvalidTable(format!(
                    "row {} has {} cells, expected {}",
                    i + 2,
                    cells.len(),
                    snr_axis.len() + 1
                )));
            }
            power_axis.push(parse_cell(cells[0], i + 2)?);
            for c in &cells[1..] {
                values.push(parse_cell(c, i + 2)?);
            }
        }
        RhoTable::new(power_axis, snr_axis, values)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("power_dbw\\snr_db");
        for s in &self.snr_axis_db {
            out.push_str(&format!(",{s}"));
        }
        out.push('\n');
        for (r, p) in self.power_axis_dbw.iter().enumerate() {
            out.push_str(&p.to_string());
            for v in self.row(r) {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn power_axis_dbw(&self) -> &[f64] {
        &self.power_axis_dbw
    }

    pub fn snr_axis_db(&self) -> &[f64] {
        &self.snr_axis_db
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.snr_axis_db.len() + col]
    }

    fn row(&self, r: usize) -> &[f64] {
        let n = self.snr_axis_db.len();
        &self.values[r * n..(r + 1) * n]
    }

    /// Bilinear interpolation, clamped to the grid edges.
    pub fn interpolate(&self, power_dbw: f64, snr_db: f64) -> f64 {
        let (r0, r1, tr) = bracket(&self.power_axis_dbw, power_dbw);
        let (c0, c1, tc) = bracket(&self.snr_axis_db, snr_db);
        let top = lerp(self.value(r0, c0), self.value(r0, c1), tc);
        let bottom = lerp(self.value(r1, c0), self.value(r1, c1), tc);
        lerp(top, bottom, tr).clamp(0.0, 1.0)
    }
}

fn parse_cell(cell: &str, line: usize) -> Result<f64> {
    cell.trim()
        .parse::<f64>()
        .map_err(|_| Error::InvalidTable(format!("line {line}: cannot parse {:?}", cell.trim())))
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

// Returns the two neighbouring indices and the interpolation weight; values
// outside the axis (including NaN and -inf) clamp to the nearest edge.
fn bracket(axis: &[f64], x: f64) -> (usize, usize, f64) {
    let last = axis.len() - 1;
    if !(x > axis[0]) {
        return (0, 0, 0.0);
    }
    if x >= axis[last] {
        return (last, last, 0.0);
    }
    let hi = axis.partition_point(|&a| a <= x);
    let lo = hi - 1;
    (lo, hi, (x - axis[lo]) / (axis[hi] - axis[lo]))
}

/// Interference factor for a receiver on `link` in a group carrying
/// `group_power` watts in total.
pub fn rho(profile: &InterferenceProfile, group_power: f64, link: &Link) -> f64 {
    let v = match profile {
        InterferenceProfile::Constant(c) => *c,
        InterferenceProfile::Table(t) => {
            t.interpolate(linear_to_db(group_power), link.snr_db(group_power / 2.0))
        }
        InterferenceProfile::Parametric(l) => l.eval(group_power, link),
    };
    v.clamp(0.0, 1.0)
}

/// `d rho / d group_power` in 1/W.
pub fn rho_derivative(profile: &InterferenceProfile, group_power: f64, link: &Link) -> f64 {
    match profile {
        InterferenceProfile::Constant(_) => 0.0,
        InterferenceProfile::Parametric(l) => l.derivative(group_power, link),
        InterferenceProfile::Table(_) => {
            let h = (1e-4 * group_power).max(1e-9);
            let lo = (group_power - h).max(0.0);
            let hi = group_power + h;
            (rho(profile, hi, link) - rho(profile, lo, link)) / (hi - lo)
        }
    }
}

pub fn sinr_conventional(p_self: f64, p_other: f64, link: &Link) -> f64 {
    p_self * link.gain / (p_other * link.gain + link.noise)
}

pub fn sinr_semantic(p_self: f64, p_other: f64, rho_val: f64, link: &Link) -> f64 {
    p_self * link.gain / (rho_val * p_other * link.gain + link.noise)
}

/// Achievable rate in bits/s/Hz.
pub fn user_rate(p_self: f64, p_other: f64, rho_val: f64, link: &Link) -> f64 {
    sinr_semantic(p_self, p_other, rho_val, link).ln_1p() / std::f64::consts::LN_2
}

/// Result of inverting a measured distortion into an interference factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub rho: f64,
    pub clamped: bool,
}

/// Solves `mse = rho * p_other * gain + noise` for `rho`, clamping to `[0, 1]`.
pub fn calibrate_rho(p_self: f64, p_other: f64, link: &Link, mse: f64) -> Result<Calibration> {
    // p_self cancels: both SINR forms share the numerator p_self * gain.
    let _ = p_self;
    if !(mse > 0.0) {
        return Err(Error::invalid(format!("mse must be positive, got {mse}")));
    }
    let interference = p_other * link.gain;
    if !(interference > 0.0) {
        return Err(Error::invalid("p_other * gain must be positive to calibrate rho"));
    }
    let raw = (mse - link.noise) / interference;
    let rho = raw.clamp(0.0, 1.0);
    Ok(Calibration { rho, clamped: rho != raw })
}

/// Two-user group sum rate; each receiver's `rho` is evaluated from the shared
/// profile on its own link at the group total `p1 + p2`.
pub fn pair_sum_rate(
    p1: f64,
    p2: f64,
    profile: &InterferenceProfile,
    link1: &Link,
    link2: &Link,
) -> f64 {
    pair_sum_rate_with(p1, p2, profile, profile, link1, link2)
}

/// As [`pair_sum_rate`] with distinct profiles for `rho_21` (seen by user 1)
/// and `rho_12` (seen by user 2).
pub fn pair_sum_rate_with(
    p1: f64,
    p2: f64,
    profile_first: &InterferenceProfile,
    profile_second: &InterferenceProfile,
    link1: &Link,
    link2: &Link,
) -> f64 {
    let total = p1 + p2;
    let rho21 = rho(profile_first, total, link1);
    let rho12 = rho(profile_second, total, link2);
    user_rate(p1, p2, rho21, link1) + user_rate(p2, p1, rho12, link2)
}

/// One measured distortion at an equal power split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MseSample {
    pub group_power_dbw: f64,
    pub snr_db: f64,
    pub noise_w: f64,
    pub mse: f64,
}

/// Reads `group_power_dbw,snr_db,noise_w,mse` rows (header required).
pub fn parse_mse_csv(text: &str) -> Result<Vec<MseSample>> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines.next().ok_or_else(|| Error::InvalidTable("empty MSE file".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols != ["group_power_dbw", "snr_db", "noise_w", "mse"] {
        return Err(Error::InvalidTable(format!("unexpected MSE header {header:?}")));
    }
    lines
        .map(|line| {
            let v: Vec<f64> = line
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::InvalidTable(format!("bad MSE row {line:?}")))?;
            match v[..] {
                [group_power_dbw, snr_db, noise_w, mse] => Ok(MseSample { group_power_dbw, snr_db, noise_w, mse }),
                _ => Err(Error::InvalidTable(format!("MSE row needs 4 fields: {line:?}"))),
            }
        })
        .collect()
}

/// Builds a table from a full grid of distortion samples. Each sample fixes
/// the receiver gain through its SNR at the equal split `p_k / 2`. Returns the
/// table and the number of values clamped into `[0, 1]`.
pub fn calibrate_table(samples: &[MseSample]) -> Result<(RhoTable, usize)> {
    let axis = |f: fn(&MseSample) -> f64| {
        let mut a: Vec<f64> = samples.iter().map(f).collect();
        a.sort_by(f64::total_cmp);
        a.dedup();
        a
    };
    let powers = axis(|s| s.group_power_dbw);
    let snrs = axis(|s| s.snr_db);
    let mut values = vec![f64::NAN; powers.len() * snrs.len()];
    let mut clamped = 0;
    for s in samples {
        let half = 10f64.powf(s.group_power_dbw / 10.0) / 2.0;
        let gain = 10f64.powf(s.snr_db / 10.0) * s.noise_w / half;
        let link = Link::new(gain, s.noise_w)?;
        let c = calibrate_rho(half, half, &link, s.mse)?;
        clamped += usize::from(c.clamped);
        let r = powers.iter().position(|&p| p == s.group_power_dbw).expect("axis built from samples");
        let col = snrs.iter().position(|&x| x == s.snr_db).expect("axis built from samples");
        let slot = &mut values[r * snrs.len() + col];
        if !slot.is_nan() {
            return Err(Error::InvalidTable(format!(
                "duplicate sample at {} dBW, {} dB",
                s.group_power_dbw, s.snr_db
            )));
        }
        *slot = c.rho;
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidTable("MSE samples do not cover the full power x SNR grid".into()));
    }
    Ok((RhoTable::new(powers, snrs, values)?, clamped))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit() -> Link {
        Link::new(1.0, 1.0).unwrap()
    }

    #[test]
    fn table_calibration_round_trip() {
        let noise = 4e-11;
        let truth = |p: f64, s: f64| 0.8 / (1.0 + (0.4 * (s - 5.0) + 0.01 * p).exp());
        let mut text = String::from("group_power_dbw,snr_db,noise_w,mse\n");
        for p in [0.0, 10.0, 20.0] {
            for s in [-5.0, 5.0, 15.0, 25.0] {
                // mse = rho * (p_k / 2) * g + noise with (p_k / 2) g = snr * noise
                let mse = truth(p, s) * 10f64.powf(s / 10.0) * noise + noise;
                text.push_str(&format!("{p},{s},{noise},{mse:e}\n"));
            }
        }
        let (t, clamped) = calibrate_table(&parse_mse_csv(&text).unwrap()).unwrap();
        assert_eq!(clamped, 0);
        assert_eq!(t.power_axis_dbw(), &[0.0, 10.0, 20.0]);
        for (r, &p) in t.power_axis_dbw().iter().enumerate() {
            for (c, &s) in t.snr_axis_db().iter().enumerate() {
                assert!((t.value(r, c) - truth(p, s)).abs() < 1e-9);
            }
        }
        let missing: String = text.lines().take(6).collect::<Vec<_>>().join("\n");
        assert!(calibrate_table(&parse_mse_csv(&missing).unwrap()).is_err());
        assert!(parse_mse_csv("a,b,c,d\n1,2,3,4\n").is_err());
    }

    #[test]
    fn constant_profiles() {
        let link = Link::new(3e-10, 4e-11).unwrap();
        for p in [0.0, 0.1, 1.0, 1e3] {
            assert_eq!(rho(&InterferenceProfile::Constant(1.0), p, &link), 1.0);
            assert_eq!(rho(&InterferenceProfile::Constant(0.0), p, &link), 0.0);
            assert_eq!(rho_derivative(&InterferenceProfile::Constant(0.4), p.max(1e-3), &link), 0.0);
        }
        assert!(InterferenceProfile::constant(1.2).is_err());
    }

    #[test]
    fn sinr_examples() {
        let l = Link::new(2.0, 0.5).unwrap();
        assert_eq!(sinr_conventional(3.0, 0.0, &l), 3.0 * 2.0 / 0.5);
        assert_eq!(sinr_conventional(0.0, 3.0, &l), 0.0);
        assert_eq!(sinr_conventional(1.0, 1.0, &unit()), 0.5);
        assert!((sinr_semantic(1.0, 1.0, 0.5, &unit()) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(sinr_semantic(3.0, 7.0, 0.0, &l), 3.0 * 2.0 / 0.5);
        assert_eq!(sinr_semantic(3.0, 7.0, 1.0, &l), sinr_conventional(3.0, 7.0, &l));
    }

    #[test]
    fn rate_examples() {
        assert_eq!(user_rate(1.0, 0.0, 0.0, &unit()), 1.0);
        assert_eq!(user_rate(0.0, 1.0, 0.3, &unit()), 0.0);
        let l = Link::new(3.0, 1.0).unwrap();
        assert!((user_rate(1.0, 0.0, 0.7, &l) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn calibration_examples() {
        let l = Link::new(2.0, 0.25).unwrap();
        let p_other = 1.5;
        let full = p_other * l.gain;
        assert_eq!(calibrate_rho(1.0, p_other, &l, 0.25).unwrap().rho, 0.0);
        assert_eq!(calibrate_rho(1.0, p_other, &l, full + 0.25).unwrap().rho, 1.0);
        let c = calibrate_rho(1.0, p_other, &l, 0.5 * full + 0.25).unwrap();
        assert!((c.rho - 0.5).abs() < 1e-15 && !c.clamped);
        let c = calibrate_rho(1.0, p_other, &l, 0.1).unwrap();
        assert!(c.clamped && c.rho == 0.0);
        let c = calibrate_rho(1.0, p_other, &l, 10.0).unwrap();
        assert!(c.clamped && c.rho == 1.0);
        assert!(calibrate_rho(1.0, 0.0, &l, 1.0).is_err());
        assert!(calibrate_rho(1.0, 1.0, &l, 0.0).is_err());
    }

    #[test]
    fn pair_sum_rate_reductions() {
        let l1 = Link::new(2.0, 0.5).unwrap();
        let l2 = Link::new(0.7, 0.3).unwrap();
        let one = InterferenceProfile::Constant(1.0);
        assert_eq!(pair_sum_rate(0.0, 0.0, &one, &l1, &l2), 0.0);
        let (p1, p2) = (0.8, 1.9);
        let classic = (1.0f64 + p1 * 2.0 / (p2 * 2.0 + 0.5)).log2()
            + (1.0f64 + p2 * 0.7 / (p1 * 0.7 + 0.3)).log2();
        assert!((pair_sum_rate(p1, p2, &one, &l1, &l2) - classic).abs() < 1e-12);
        let table = InterferenceProfile::default_table();
        let l = Link::new(1e-11, 4e-11).unwrap();
        let a = pair_sum_rate(30.0, 70.0, &table, &l, &l);
        let b = pair_sum_rate(70.0, 30.0, &table, &l, &l);
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn table_parsing_and_nodes() {
        let csv = "p\\snr,0,10,20\n0,0.9,0.5,0.1\n10,0.8,0.4,0.05\n";
        let t = RhoTable::parse_csv(csv).unwrap();
        assert_eq!(t.interpolate(0.0, 10.0), 0.5);
        assert_eq!(t.interpolate(10.0, 20.0), 0.05);
        assert!((t.interpolate(5.0, 5.0) - (0.9 + 0.5 + 0.8 + 0.4) / 4.0).abs() < 1e-15);
        // clamped outside the grid
        assert_eq!(t.interpolate(-50.0, -50.0), 0.9);
        assert_eq!(t.interpolate(f64::NEG_INFINITY, f64::NEG_INFINITY), 0.9);
        assert_eq!(t.interpolate(50.0, 50.0), 0.05);
        let again = RhoTable::parse_csv(&t.to_csv()).unwrap();
        assert_eq!(again, t);
    }

    #[test]
    fn table_rejects_malformed() {
        assert!(RhoTable::parse_csv("").is_err());
        assert!(RhoTable::parse_csv("x,0,10\n0,0.5\n").is_err());
        assert!(RhoTable::parse_csv("x,10,0\n0,0.5,0.5\n").is_err());
        assert!(RhoTable::parse_csv("x,0,10\n0,0.5,1.5\n").is_err());
        assert!(RhoTable::parse_csv("x,0,10\n0,0.5,abc\n").is_err());
        assert!(RhoTable::parse_csv("x,0,10\n").is_err());
    }

    #[test]
    fn table_zero_power_uses_lowest_row() {
        let table = InterferenceProfile::default_table();
        let InterferenceProfile::Table(t) = &table else { unreachable!() };
        let v = rho(&table, 0.0, &Link::new(1e-10, 4e-11).unwrap());
        assert_eq!(v, t.value(0, 0));
    }

    #[test]
    fn default_table_shape() {
        let InterferenceProfile::Table(t) = InterferenceProfile::default_table() else {
            unreachable!()
        };
        let rows = t.power_axis_dbw().len();
        let cols = t.snr_axis_db().len();
        for r in 0..rows {
            for c in 0..cols {
                let v = t.value(r, c);
                assert!(v < 1.0 && v > 0.0);
                if c + 1 < cols {
                    assert!(t.value(r, c + 1) <= v, "rho must not increase with SNR");
                }
                if r + 1 < rows {
                    assert!(t.value(r + 1, c) <= v, "rho must not increase with power");
                }
            }
        }
        assert!(t.value(0, 0) > 0.8);
        assert!(t.value(rows - 1, cols - 1) < 0.1);
    }

    #[test]
    fn parametric_derivative_matches_finite_difference() {
        let l = LogisticRho::new(0.95, 0.3, 10.0, 0.05, 1.0).unwrap();
        let profile = InterferenceProfile::Parametric(l);
        let link = Link::new(2e-11, 4e-11).unwrap();
        for p in [0.5, 3.0, 20.0, 150.0, 900.0] {
            let h = 1e-6 * p;
            let fd = (rho(&profile, p + h, &link) - rho(&profile, p - h, &link)) / (2.0 * h);
            let an = rho_derivative(&profile, p, &link);
            assert!((an - fd).abs() <= 1e-6 * an.abs().max(1e-12), "p={p}: {an} vs {fd}");
        }
        assert_eq!(rho(&profile, 0.0, &link), 0.95);
    }

    #[test]
    fn table_derivative_matches_secant() {
        let profile = InterferenceProfile::default_table();
        let link = Link::new(2e-11, 4e-11).unwrap();
        for p in [3.7, 17.0, 55.5, 230.0] {
            let d = rho_derivative(&profile, p, &link);
            let h = 1e-3 * p;
            let secant = (rho(&profile, p + h, &link) - rho(&profile, p - h, &link)) / (2.0 * h);
            assert!((d - secant).abs() < 1e-4, "p={p}: {d} vs {secant}");
        }
    }

    fn arb_profile() -> impl Strategy<Value = InterferenceProfile> {
        prop_oneof![
            (0.0f64..=1.0).prop_map(InterferenceProfile::Constant),
            Just(InterferenceProfile::default_table()),
            (0.0f64..=1.0, -1.0f64..1.0, -10.0f64..30.0, -0.5f64..0.5).prop_map(|(m, a, b, c)| {
                InterferenceProfile::Parametric(LogisticRho::new(m, a, b, c, 1.0).unwrap())
            }),
        ]
    }

    proptest! {
        #[test]
        fn rho_is_bounded(profile in arb_profile(), p in 0.0f64..1e4, g in 1e-14f64..1e-6) {
            let link = Link::new(g, 4e-11).unwrap();
            let v = rho(&profile, p, &link);
            prop_assert!((0.0..=1.0).contains(&v));
        }

        #[test]
        fn sinr_monotonicity(
            ps in 0.0f64..10.0, po in 0.0f64..10.0, r in 0.0f64..=1.0,
            dps in 0.0f64..1.0, dpo in 0.0f64..1.0, dr in 0.0f64..1.0,
            g in 1e-3f64..1e3, n in 1e-3f64..1e3,
        ) {
            let l = Link::new(g, n).unwrap();
            let base = sinr_semantic(ps, po, r, &l);
            prop_assert!(sinr_semantic(ps + dps, po, r, &l) >= base);
            prop_assert!(sinr_semantic(ps, po + dpo, r, &l) <= base);
            prop_assert!(sinr_semantic(ps, po, (r + dr).min(1.0), &l) <= base);
            prop_assert!(user_rate(ps, po, r, &l) >= 0.0);
        }

        #[test]
        fn calibration_round_trip(
            target in 0.0f64..=1.0, po in 1e-3f64..1e3, g in 1e-12f64..1.0, inr_db in -30.0f64..60.0,
        ) {
            let n = po * g / 10f64.powf(inr_db / 10.0);
            let l = Link::new(g, n).unwrap();
            let mse = target * po * g + n;
            let c = calibrate_rho(1.0, po, &l, mse).unwrap();
            prop_assert!((c.rho - target).abs() <= 1e-9 * target.max(1e-3));
        }
    }
}
