//! Averaging process on the d-dimensional discrete torus, sped up so that
//! every nearest-neighbor edge rings at rate N^2, with a spectral
//! heat-equation reference.
//!
//! Edges are enumerated as (site, positive direction) pairs; a single
//! aggregate clock of rate `d N^{d+2}` picks one uniformly per event, which
//! is identical in law to independent edge clocks. The matching continuum
//! reference evolves a finite Fourier profile by the heat semigroup
//! `d rho / dt = Laplacian(rho) / 2`, i.e. mode `k` decays by
//! `exp(-2 pi^2 |k|^2 t)`; no time stepping enters the reference.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::measure::EmpiricalMeasure;
use crate::rng::RngStream;

/// Opinions on the lattice `(Z / NZ)^d`, stored row-major.
#[derive(Debug, Clone)]
pub struct TorusConfig {
    dim: usize,
    side: usize,
    pub opinions: Vec<f64>,
    pub time: f64,
}

impl TorusConfig {
    pub fn new(dim: usize, side: usize, opinions: Vec<f64>, time: f64) -> Result<Self> {
        if dim == 0 || side < 2 {
            return Err(Error::InvalidConfig(format!(
                "torus needs dim >= 1 and side >= 2, got {dim}, {side}"
            )));
        }
        let expected = side.pow(dim as u32);
        if opinions.len() != expected {
            return Err(Error::InvalidConfig(format!(
                "expected {expected} lattice values, got {}",
                opinions.len()
            )));
        }
        Ok(Self {
            dim,
            side,
            opinions,
            time,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn n_sites(&self) -> usize {
        self.opinions.len()
    }

    pub fn sum(&self) -> f64 {
        self.opinions.iter().sum()
    }

    /// Multi-index of a flat site index.
    pub fn coords(&self, mut flat: usize) -> Vec<usize> {
        let mut c = vec![0usize; self.dim];
        for i in (0..self.dim).rev() {
            c[i] = flat % self.side;
            flat /= self.side;
        }
        c
    }

    /// Flat index of the neighbor one step in the positive `dir` axis.
    fn neighbor(&self, flat: usize, dir: usize) -> usize {
        let stride = self.side.pow((self.dim - 1 - dir) as u32);
        let axis_pos = (flat / stride) % self.side;
        if axis_pos + 1 == self.side {
            flat + stride - stride * self.side
        } else {
            flat + stride
        }
    }
}

/// Real-valued profile on the continuous torus given by finitely many
/// Fourier modes `sum_k c_k exp(2 pi i k . u)`.
#[derive(Debug, Clone)]
pub struct FourierProfile {
    dim: usize,
    /// Sorted by frequency vector; conjugate-symmetric so values are real.
    modes: Vec<(Vec<i64>, Complex64)>,
}

impl FourierProfile {
    pub fn from_modes(dim: usize, mut modes: Vec<(Vec<i64>, Complex64)>) -> Result<Self> {
        for (k, _) in &modes {
            if k.len() != dim {
                return Err(Error::InvalidConfig(format!(
                    "frequency {k:?} has wrong dimension (want {dim})"
                )));
            }
        }
        modes.sort_by(|a, b| a.0.cmp(&b.0));
        // Merge duplicate frequencies.
        let mut merged: Vec<(Vec<i64>, Complex64)> = Vec::new();
        for (k, c) in modes {
            match merged.last_mut() {
                Some((lk, lc)) if *lk == k => *lc += c,
                _ => merged.push((k, c)),
            }
        }
        let p = Self { dim, modes: merged };
        p.check_real()?;
        Ok(p)
    }

    fn check_real(&self) -> Result<()> {
        for (k, c) in &self.modes {
            let neg: Vec<i64> = k.iter().map(|&x| -x).collect();
            let partner = self.coefficient(&neg);
            if (partner - c.conj()).norm() > 1e-12 * (1.0 + c.norm()) {
                return Err(Error::InvalidConfig(format!(
                    "profile is not real-valued: coefficient at {k:?} lacks its conjugate"
                )));
            }
        }
        Ok(())
    }

    pub fn coefficient(&self, k: &[i64]) -> Complex64 {
        match self
            .modes
            .binary_search_by(|(mk, _)| mk.as_slice().cmp(k))
        {
            Ok(i) => self.modes[i].1,
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self {
            dim,
            modes: vec![(vec![0; dim], Complex64::new(c, 0.0))],
        }
    }

    /// `sin(2 pi k u)` on the one-dimensional torus.
    pub fn sin_1d(k: i64) -> Self {
        Self::sin_axis(1, 0, k).unwrap()
    }

    /// `cos(2 pi k u)` on the one-dimensional torus.
    pub fn cos_1d(k: i64) -> Self {
        Self::cos_axis(1, 0, k).unwrap()
    }

    /// `sin(2 pi k u_axis)` on the d-dimensional torus.
    pub fn sin_axis(dim: usize, axis: usize, k: i64) -> Result<Self> {
        if axis >= dim || k == 0 {
            return Err(Error::InvalidConfig(format!(
                "sine mode needs axis < {dim} and k != 0"
            )));
        }
        let mut plus = vec![0i64; dim];
        let mut minus = vec![0i64; dim];
        plus[axis] = k;
        minus[axis] = -k;
        let half = Complex64::new(0.0, -0.5);
        Self::from_modes(dim, vec![(plus, half), (minus, half.conj())])
    }

    /// `cos(2 pi k u_axis)` on the d-dimensional torus.
    pub fn cos_axis(dim: usize, axis: usize, k: i64) -> Result<Self> {
        if axis >= dim || k == 0 {
            return Err(Error::InvalidConfig(format!(
                "cosine mode needs axis < {dim} and k != 0"
            )));
        }
        let mut plus = vec![0i64; dim];
        let mut minus = vec![0i64; dim];
        plus[axis] = k;
        minus[axis] = -k;
        let half = Complex64::new(0.5, 0.0);
        Self::from_modes(dim, vec![(plus, half), (minus, half)])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Point evaluation; `u` has one coordinate per dimension.
    pub fn evaluate(&self, u: &[f64]) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, c) in &self.modes {
            let phase: f64 = k
                .iter()
                .zip(u)
                .map(|(&ki, &ui)| ki as f64 * ui)
                .sum::<f64>()
                * 2.0
                * std::f64::consts::PI;
            acc += c * Complex64::new(phase.cos(), phase.sin());
        }
        acc.re
    }

    /// Profile evolved by the heat semigroup for time `t`: mode `k` decays
    /// by `exp(-2 pi^2 |k|^2 t)`.
    pub fn heat_evolved(&self, t: f64) -> Self {
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let modes = self
            .modes
            .iter()
            .map(|(k, c)| {
                let k2: f64 = k.iter().map(|&ki| (ki * ki) as f64).sum();
                (k.clone(), c * (-2.0 * pi2 * k2 * t).exp())
            })
            .collect();
        Self {
            dim: self.dim,
            modes,
        }
    }

    /// Parseval pairing `<self, other> = integral self(u) other(u) du`.
    pub fn pairing(&self, other: &FourierProfile) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, c) in &self.modes {
            acc += c * other.coefficient(k).conj();
        }
        acc.re
    }
}

/// Pairing of the evolved profile with a test profile:
/// `<rho_t, G>` where `rho_t` solves the heat equation from `profile`.
pub fn heat_pairing(profile: &FourierProfile, g: &FourierProfile, t: f64) -> f64 {
    profile.heat_evolved(t).pairing(g)
}

/// Lattice initial condition `omega_0(x) = profile(x / N)`.
pub fn init_from_profile(profile: &FourierProfile, side: usize) -> Result<TorusConfig> {
    let dim = profile.dim();
    if side < 2 {
        return Err(Error::InvalidConfig(format!("side {side} too small")));
    }
    let n_sites = side.pow(dim as u32);
    let mut opinions = Vec::with_capacity(n_sites);
    let mut coords = vec![0usize; dim];
    for flat in 0..n_sites {
        let mut rem = flat;
        for i in (0..dim).rev() {
            coords[i] = rem % side;
            rem /= side;
        }
        let u: Vec<f64> = coords.iter().map(|&c| c as f64 / side as f64).collect();
        opinions.push(profile.evaluate(&u));
    }
    TorusConfig::new(dim, side, opinions, 0.0)
}

/// Discrete pairing `<pi_hat, G> = N^{-d} sum_x omega(x) G(x / N)`.
pub fn lattice_pairing(config: &TorusConfig, g: &FourierProfile) -> Result<f64> {
    if g.dim() != config.dim {
        return Err(Error::InvalidConfig(
            "test profile dimension mismatch".into(),
        ));
    }
    let side = config.side;
    let dim = config.dim;
    let mut acc = 0.0;
    let mut coords = vec![0usize; dim];
    for (flat, &w) in config.opinions.iter().enumerate() {
        let mut rem = flat;
        for i in (0..dim).rev() {
            coords[i] = rem % side;
            rem /= side;
        }
        let u: Vec<f64> = coords.iter().map(|&c| c as f64 / side as f64).collect();
        acc += w * g.evaluate(&u);
    }
    Ok(acc / config.n_sites() as f64)
}

/// Signed measure with an atom of weight `omega(x) / N^d` at `x / N`
/// (one-dimensional lattices only; higher dimensions pair through
/// [`lattice_pairing`]).
pub fn weighted_empirical(config: &TorusConfig) -> Result<EmpiricalMeasure> {
    if config.dim != 1 {
        return Err(Error::InvalidConfig(
            "weighted empirical measure on the line needs dim = 1".into(),
        ));
    }
    let n = config.side as f64;
    let atoms = config
        .opinions
        .iter()
        .enumerate()
        .map(|(x, &w)| (x as f64 / n, w / n))
        .collect();
    EmpiricalMeasure::from_atoms(atoms, false)
}

/// Runs the torus dynamics to `horizon`, recording the state at the last
/// event at or before each requested snapshot time.
pub fn run_torus(
    config: &TorusConfig,
    horizon: f64,
    snapshot_times: &[f64],
    rng: &mut RngStream,
) -> Result<Vec<TorusConfig>> {
    if horizon < config.time {
        return Err(Error::InvalidSchedule(format!(
            "horizon {horizon} before initial time {}",
            config.time
        )));
    }
    let mut times = snapshot_times.to_vec();
    for &t in &times {
        if t < config.time || t > horizon {
            return Err(Error::InvalidSchedule(format!(
                "snapshot time {t} outside [{}, {horizon}]",
                config.time
            )));
        }
    }
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup();

    let mut state = config.clone();
    let n_sites = state.n_sites();
    let dim = state.dim;
    // d N^d edges, each at rate N^2.
    let rate = dim as f64 * n_sites as f64 * (state.side as f64) * (state.side as f64);

    let mut snapshots = Vec::with_capacity(times.len());
    let mut next_snap = 0;
    let mut t = state.time;

    loop {
        let wait = rng.exponential(rate);
        let t_next = t + wait;
        while next_snap < times.len() && times[next_snap] < t_next {
            let mut snap = state.clone();
            snap.time = times[next_snap];
            snapshots.push(snap);
            next_snap += 1;
        }
        if t_next > horizon {
            break;
        }
        let site = rng.index(n_sites);
        let dir = rng.index(dim);
        let nb = state.neighbor(site, dir);
        let m = 0.5 * (state.opinions[site] + state.opinions[nb]);
        state.opinions[site] = m;
        state.opinions[nb] = m;
        t = t_next;
    }
    while next_snap < times.len() {
        let mut snap = state.clone();
        snap.time = times[next_snap];
        snapshots.push(snap);
        next_snap += 1;
    }
    Ok(snapshots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats;

    #[test]
    fn constant_profile_constant_lattice() {
        let p = FourierProfile::constant(1, 3.25);
        let c = init_from_profile(&p, 16).unwrap();
        assert!(c.opinions.iter().all(|&v| (v - 3.25).abs() < 1e-15));
    }

    #[test]
    fn sin_profile_point_values() {
        let p = FourierProfile::sin_1d(1);
        let c = init_from_profile(&p, 8).unwrap();
        // Entry at x = 2 is sin(pi / 2) = 1.
        assert!((c.opinions[2] - 1.0).abs() < 1e-12);
        assert!(c.opinions[0].abs() < 1e-12);
    }

    #[test]
    fn sin_profile_zero_mean() {
        let p = FourierProfile::sin_1d(1);
        let c = init_from_profile(&p, 256).unwrap();
        let mean = c.sum() / c.n_sites() as f64;
        assert!(mean.abs() < 1e-12, "mean {mean}");
    }

    #[test]
    fn non_real_profile_rejected() {
        let r = FourierProfile::from_modes(1, vec![(vec![1], Complex64::new(1.0, 0.0))]);
        assert!(r.is_err());
    }

    #[test]
    fn heat_pairing_values() {
        let rho = FourierProfile::sin_1d(1);
        let g = FourierProfile::sin_1d(1);
        // <sin, sin> = 1/2 at t = 0; mode 1 decays by exp(-2 pi^2 t).
        assert!((heat_pairing(&rho, &g, 0.0) - 0.5).abs() < 1e-15);
        let t = 0.3;
        let want = 0.5 * (-2.0 * std::f64::consts::PI.powi(2) * t).exp();
        assert!((heat_pairing(&rho, &g, t) - want).abs() < 1e-15);
        // Orthogonal test function pairs to zero for all t.
        let cos = FourierProfile::cos_1d(1);
        assert!(heat_pairing(&rho, &cos, 0.7).abs() < 1e-15);
    }

    #[test]
    fn constant_configuration_is_fixed() {
        let c = TorusConfig::new(1, 8, vec![2.0; 8], 0.0).unwrap();
        let mut rng = RngStream::new(31, 0);
        let snaps = run_torus(&c, 0.001, &[0.001], &mut rng).unwrap();
        assert!(snaps[0].opinions.iter().all(|&v| v == 2.0));
    }

    #[test]
    fn ring_consensus_at_mean() {
        let c = TorusConfig::new(1, 4, vec![0.0, 1.0, 0.0, 1.0], 0.0).unwrap();
        let mut rng = RngStream::new(32, 0);
        // Rate 4^3 = 64 per unit time; t = 2 gives ~128 events on 4 sites.
        let snaps = run_torus(&c, 2.0, &[2.0], &mut rng).unwrap();
        for &v in &snaps[0].opinions {
            assert!((v - 0.5).abs() < 1e-6, "{v}");
        }
    }

    #[test]
    fn sum_conserved_on_torus_2d() {
        let vals: Vec<f64> = (0..64).map(|i| (i % 7) as f64).collect();
        let c = TorusConfig::new(2, 8, vals, 0.0).unwrap();
        let s0 = c.sum();
        let mut rng = RngStream::new(33, 0);
        let snaps = run_torus(&c, 0.01, &[0.01], &mut rng).unwrap();
        assert!((snaps[0].sum() - s0).abs() < 1e-9 * (1.0 + s0.abs()));
    }

    #[test]
    fn neighbor_wraps() {
        let c = TorusConfig::new(2, 4, vec![0.0; 16], 0.0).unwrap();
        // Site (3, 3) = flat 15; +1 in axis 1 wraps to (3, 0) = flat 12,
        // +1 in axis 0 wraps to (0, 3) = flat 3.
        assert_eq!(c.neighbor(15, 1), 12);
        assert_eq!(c.neighbor(15, 0), 3);
    }

    #[test]
    fn weighted_empirical_atoms() {
        let c = TorusConfig::new(1, 2, vec![3.0, 5.0], 0.0).unwrap();
        let mu = weighted_empirical(&c).unwrap();
        assert_eq!(mu.atoms(), &[(0.0, 1.5), (0.5, 2.5)]);
        // Pairing with G = 1 is the spatial mean.
        let total: f64 = mu.atoms().iter().map(|&(_, w)| w).sum();
        assert!((total - 4.0).abs() < 1e-15);
    }

    #[test]
    fn mode_decay_matches_heat_reference() {
        // Small lattice, many replicas: replica-mean pairing of sin(2 pi u)
        // within 3 standard errors of the heat prediction.
        let side = 64;
        let t = 0.05;
        let profile = FourierProfile::sin_1d(1);
        let g = FourierProfile::sin_1d(1);
        let initial = init_from_profile(&profile, side).unwrap();
        let reps = 40;
        let mut pairings = Vec::with_capacity(reps);
        for r in 0..reps {
            let mut rng = RngStream::new(77, r as u64);
            let snaps = run_torus(&initial, t, &[t], &mut rng).unwrap();
            pairings.push(lattice_pairing(&snaps[0], &g).unwrap());
        }
        let mean = stats::mean(&pairings);
        let se = stats::standard_error(&pairings);
        let want = heat_pairing(&profile, &g, t);
        assert!(
            (mean - want).abs() <= 3.0 * se,
            "pairing {mean} vs heat {want} (se {se})"
        );
    }
}
