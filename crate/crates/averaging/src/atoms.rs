//! Measure evolution restricted to atoms on dyadic rationals.
//!
//! The state is a mass vector over `{k / 2^J : k = 0..2^J}` after an affine
//! normalization of the original support to `[0, 1]`. One evolution step
//! convolves the measure with itself (atoms at pairwise sums, values in
//! `[0, 2]`), pushes every sum atom to half its value, and relaxes toward
//! that image: `rhs = 2 (half(mu * mu) - mu)`. A halved atom with odd
//! numerator sits at level `J + 1`; its mass is split equally between the
//! two flanking level-`J` atoms, which preserves mass and mean, and the
//! amount moved accumulates into a snapping diagnostic.

use crate::error::{Error, Result};
use crate::fft;

/// Nonnegative masses on the dyadic grid of a fixed level.
#[derive(Debug, Clone)]
pub struct AtomicMeasure {
    level: u32,
    masses: Vec<f64>,
    /// Original coordinates are `offset + scale * value`.
    offset: f64,
    scale: f64,
    /// Total mass routed through odd-numerator snapping so far.
    snapped_mass_total: f64,
    time: f64,
}

impl AtomicMeasure {
    /// Builds a measure from weighted points, normalizing their span to
    /// `[0, 1]`. Every normalized point must land exactly on a level-`J`
    /// dyadic.
    pub fn from_weighted_points(points: &[(f64, f64)], level: u32) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidDistribution("no atoms given".into()));
        }
        if level == 0 || level > 26 {
            return Err(Error::InvalidConfig(format!(
                "dyadic level {level} outside 1..=26"
            )));
        }
        let total: f64 = points.iter().map(|&(_, m)| m).sum();
        if points.iter().any(|&(_, m)| m < 0.0) || !(total > 0.0) {
            return Err(Error::InvalidDistribution(
                "atom masses must be nonnegative with positive total".into(),
            ));
        }
        let lo = points.iter().map(|&(v, _)| v).fold(f64::INFINITY, f64::min);
        let hi = points
            .iter()
            .map(|&(v, _)| v)
            .fold(f64::NEG_INFINITY, f64::max);
        let (offset, scale) = if hi > lo { (lo, hi - lo) } else { (lo, 1.0) };

        let size = (1usize << level) + 1;
        let mut masses = vec![0.0; size];
        let denom = (1u64 << level) as f64;
        for &(v, m) in points {
            let x = (v - offset) / scale;
            let k = (x * denom).round();
            if (x * denom - k).abs() > 1e-9 || !(0.0..=denom).contains(&k) {
                return Err(Error::InvalidDistribution(format!(
                    "value {v} does not sit on a level-{level} dyadic after normalization"
                )));
            }
            masses[k as usize] += m;
        }
        Ok(Self {
            level,
            masses,
            offset,
            scale,
            snapped_mass_total: 0.0,
            time: 0.0,
        })
    }

    /// Mass `1 - p` at 0 and `p` at 1.
    pub fn bernoulli(p: f64, level: u32) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidDistribution(format!(
                "Bernoulli parameter {p} outside [0, 1]"
            )));
        }
        Self::from_weighted_points(&[(0.0, 1.0 - p), (1.0, p)], level)
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn snapped_mass_total(&self) -> f64 {
        self.snapped_mass_total
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// Value of atom `k` in original coordinates.
    pub fn atom_value(&self, k: usize) -> f64 {
        self.offset + self.scale * k as f64 / (1u64 << self.level) as f64
    }

    /// Mean in normalized `[0, 1]` coordinates.
    pub fn normalized_mean(&self) -> f64 {
        let denom = (1u64 << self.level) as f64;
        self.masses
            .iter()
            .enumerate()
            .map(|(k, &m)| m * k as f64 / denom)
            .sum()
    }
}

/// Self-convolution: masses on `{k / 2^J : k = 0..2^{J+1}}` (values in
/// `[0, 2]`), where the mass at `s` is `sum_{a+b=s} mu(a) mu(b)`.
pub fn atomic_self_convolve(mu: &AtomicMeasure) -> Vec<f64> {
    fft::self_convolve(&mu.masses)
}

/// `2 (half(mu * mu) - mu)` together with the rate at which mass crosses
/// odd-numerator atoms (the snapping diagnostic).
pub fn atomic_rhs(mu: &AtomicMeasure) -> (Vec<f64>, f64) {
    let conv = atomic_self_convolve(mu);
    let mut halved = vec![0.0; mu.masses.len()];
    let mut odd_mass = 0.0;
    for (s, &m) in conv.iter().enumerate() {
        if m == 0.0 {
            continue;
        }
        if s % 2 == 0 {
            halved[s / 2] += m;
        } else {
            halved[s / 2] += 0.5 * m;
            halved[s / 2 + 1] += 0.5 * m;
            odd_mass += m;
        }
    }
    let rhs = halved
        .iter()
        .zip(&mu.masses)
        .map(|(&h, &m)| 2.0 * (h - m))
        .collect();
    (rhs, 2.0 * odd_mass)
}

/// RK4 integration of the atomic evolution with snapshots at the requested
/// times. Masses may dip to `-1e-12` through rounding (setting them to zero
/// would bias the conserved total); anything below that aborts.
pub fn integrate_atoms(
    mu0: &AtomicMeasure,
    dt: f64,
    horizon: f64,
    snapshot_times: &[f64],
) -> Result<Vec<AtomicMeasure>> {
    const CLIP_TOL: f64 = 1e-12;
    if horizon < mu0.time {
        return Err(Error::InvalidSchedule(format!(
            "horizon {horizon} before initial time {}",
            mu0.time
        )));
    }
    if !(dt > 0.0 && dt <= 1e-3) {
        return Err(Error::InvalidTimeStep { dt, dt_max: 1e-3 });
    }
    let mut times = snapshot_times.to_vec();
    for &t in &times {
        if t < mu0.time || t > horizon {
            return Err(Error::InvalidSchedule(format!(
                "snapshot time {t} outside [{}, {horizon}]",
                mu0.time
            )));
        }
    }
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup();

    let mut state = mu0.clone();
    let mut snapshots = Vec::with_capacity(times.len());
    let mut next_snap = 0;
    while next_snap < times.len() && times[next_snap] <= state.time {
        snapshots.push(state.clone());
        next_snap += 1;
    }

    while state.time < horizon {
        let target = if next_snap < times.len() {
            times[next_snap].min(horizon)
        } else {
            horizon
        };
        let step = dt.min(target - state.time);
        if step <= 0.0 {
            break;
        }

        let y = state.masses.clone();
        let (k1, s1) = atomic_rhs(&state);
        state.masses = axpy(&y, 0.5 * step, &k1);
        let (k2, s2) = atomic_rhs(&state);
        state.masses = axpy(&y, 0.5 * step, &k2);
        let (k3, s3) = atomic_rhs(&state);
        state.masses = axpy(&y, step, &k3);
        let (k4, s4) = atomic_rhs(&state);

        let mut new_masses = Vec::with_capacity(y.len());
        for i in 0..y.len() {
            let incr = (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0;
            new_masses.push(y[i] + step * incr);
        }
        state.time += step;
        state.snapped_mass_total += step * (s1 + 2.0 * s2 + 2.0 * s3 + s4) / 6.0;

        if let Some(&worst) = new_masses
            .iter()
            .filter(|&&m| m < -CLIP_TOL)
            .min_by(|a, b| a.partial_cmp(b).unwrap())
        {
            return Err(Error::Instability {
                t: state.time,
                value: worst,
                tol: -CLIP_TOL,
            });
        }
        state.masses = new_masses;

        while next_snap < times.len() && times[next_snap] <= state.time {
            snapshots.push(state.clone());
            next_snap += 1;
        }
    }
    Ok(snapshots)
}

fn axpy(y: &[f64], a: f64, k: &[f64]) -> Vec<f64> {
    y.iter().zip(k).map(|(&yi, &ki)| yi + a * ki).collect()
}
