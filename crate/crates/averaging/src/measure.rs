//! Measure pairings, convolution pairings, Wasserstein-1 distance, and the
//! martingale-residual diagnostic.
//!
//! An [`EmpiricalMeasure`] is a finite list of weighted atoms: the empirical
//! opinion distribution carries weight 1/N per vertex, while signed weights
//! cover the lattice-weighted variant. Pairings integrate a time-dependent
//! [`TestFunction`] against the measure or against the self-convolution of
//! the measure; the latter supports an exact quadratic route, a
//! linear-binning route for large atom counts, and a subsampling route.

use crate::error::{Error, Result};
use crate::fft;
use crate::pde::DensityGrid;
use crate::rng::RngStream;

/// Atom count above which the exact O(n^2) convolution pairing refuses to
/// run.
pub const EXACT_PAIRING_CAP: usize = 20_000;

/// Finite collection of (value, weight) atoms.
#[derive(Debug, Clone)]
pub struct EmpiricalMeasure {
    atoms: Vec<(f64, f64)>,
    normalized: bool,
}

impl EmpiricalMeasure {
    /// Probability measure with one atom of weight 1/N per value.
    pub fn from_values(values: &[f64]) -> Self {
        let w = 1.0 / values.len() as f64;
        Self {
            atoms: values.iter().map(|&v| (v, w)).collect(),
            normalized: true,
        }
    }

    /// General atom list; `normalized` asserts that weights sum to 1.
    pub fn from_atoms(atoms: Vec<(f64, f64)>, normalized: bool) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("no atoms".into()));
        }
        if normalized {
            let total: f64 = atoms.iter().map(|&(_, w)| w).sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidMeasure(format!(
                    "weights sum to {total}, expected 1"
                )));
            }
        }
        Ok(Self { atoms, normalized })
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn total_weight(&self) -> f64 {
        self.atoms.iter().map(|&(_, w)| w).sum()
    }

    /// Total weight on atoms whose value equals `v` exactly.
    pub fn weight_at(&self, v: f64) -> f64 {
        self.atoms
            .iter()
            .filter(|&&(value, _)| value == v)
            .map(|&(_, w)| w)
            .sum()
    }
}

/// Time-dependent test function `G(t, u)` with its time derivative.
pub struct TestFunction {
    pub name: String,
    evaluate: Box<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    time_derivative: Box<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

impl TestFunction {
    pub fn new(
        name: &str,
        evaluate: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        time_derivative: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.to_string(),
            evaluate: Box::new(evaluate),
            time_derivative: Box::new(time_derivative),
        }
    }

    /// Time-independent test function (zero time derivative).
    pub fn steady(name: &str, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(name, move |_, u| f(u), |_, _| 0.0)
    }

    pub fn eval(&self, t: f64, u: f64) -> f64 {
        (self.evaluate)(t, u)
    }

    pub fn eval_dt(&self, t: f64, u: f64) -> f64 {
        (self.time_derivative)(t, u)
    }
}

/// `<mu, G(t, .)> = sum_i w_i G(t, v_i)`.
pub fn pair(mu: &EmpiricalMeasure, g: &TestFunction, t: f64) -> f64 {
    mu.atoms.iter().map(|&(v, w)| w * g.eval(t, v)).sum()
}

/// How to evaluate the convolution pairing.
#[derive(Debug, Clone)]
pub enum ConvMethod {
    /// Full double sum; capped at [`EXACT_PAIRING_CAP`] atoms.
    Exact,
    /// Linear binning onto this many bin centers, then an FFT convolution of
    /// bin masses. Linear binning preserves total weight and first moment,
    /// so degree-one test functions pair exactly.
    Binned(usize),
    /// Monte Carlo over `pairs` i.i.d. atom pairs drawn from the stream
    /// address `(seed, stream)`.
    Subsample { pairs: usize, seed: u64, stream: u64 },
}

impl ConvMethod {
    /// Binned above the exact-pairing cap, exact below: the default used by
    /// comparison drivers.
    pub fn auto(atom_count: usize) -> Self {
        if atom_count > EXACT_PAIRING_CAP {
            ConvMethod::Binned(4096)
        } else {
            ConvMethod::Exact
        }
    }
}

/// `<mu * mu, G(t, . / 2)>`: integrates `G(t, (v_x + v_y) / 2)` over
/// independent atom pairs.
pub fn pair_convolution(
    mu: &EmpiricalMeasure,
    g: &TestFunction,
    t: f64,
    method: &ConvMethod,
) -> Result<f64> {
    match method {
        ConvMethod::Exact => {
            let n = mu.atoms.len();
            if n > EXACT_PAIRING_CAP {
                return Err(Error::SizeCap {
                    atoms: n,
                    cap: EXACT_PAIRING_CAP,
                });
            }
            let mut acc = 0.0;
            for &(vx, wx) in &mu.atoms {
                let mut inner = 0.0;
                for &(vy, wy) in &mu.atoms {
                    inner += wy * g.eval(t, 0.5 * (vx + vy));
                }
                acc += wx * inner;
            }
            Ok(acc)
        }
        ConvMethod::Binned(bins) => {
            let b = *bins;
            if b < 2 {
                return Err(Error::InvalidConfig("need at least 2 bins".into()));
            }
            let lo = mu
                .atoms
                .iter()
                .map(|&(v, _)| v)
                .fold(f64::INFINITY, f64::min);
            let hi = mu
                .atoms
                .iter()
                .map(|&(v, _)| v)
                .fold(f64::NEG_INFINITY, f64::max);
            if !(hi - lo).is_finite() {
                return Err(Error::InvalidMeasure("non-finite atom values".into()));
            }
            if hi - lo < 1e-300 {
                // Degenerate support: (v + v) / 2 = v.
                let w = mu.total_weight();
                return Ok(w * w * g.eval(t, lo));
            }
            let dx = (hi - lo) / (b - 1) as f64;
            let mut masses = vec![0.0; b];
            for &(v, w) in &mu.atoms {
                let p = (v - lo) / dx;
                let i = (p.floor() as usize).min(b - 2);
                let frac = p - i as f64;
                masses[i] += w * (1.0 - frac);
                masses[i + 1] += w * frac;
            }
            let conv = fft::self_convolve(&masses);
            // Bin centers c_i = lo + i dx; pair sums land on the half-step
            // grid lo + s dx / 2 with no interpolation.
            Ok(conv
                .iter()
                .enumerate()
                .map(|(s, &m)| m * g.eval(t, lo + 0.5 * s as f64 * dx))
                .sum())
        }
        ConvMethod::Subsample {
            pairs,
            seed,
            stream,
        } => {
            if !mu.normalized {
                return Err(Error::InvalidMeasure(
                    "subsampled pairing needs a normalized measure".into(),
                ));
            }
            let mut rng = RngStream::new(*seed, *stream);
            let n = mu.atoms.len();
            let mut acc = 0.0;
            for _ in 0..*pairs {
                let (vx, _) = mu.atoms[rng.index(n)];
                let (vy, _) = mu.atoms[rng.index(n)];
                acc += g.eval(t, 0.5 * (vx + vy));
            }
            Ok(acc / *pairs as f64)
        }
    }
}

/// Piecewise-linear CDF with jumps encoded as repeated breakpoints.
#[derive(Debug, Clone)]
pub struct PiecewiseCdf {
    /// Ascending breakpoints; a repeated value encodes a jump.
    xs: Vec<f64>,
    /// CDF value at each breakpoint, nondecreasing, ending at 1.
    fs: Vec<f64>,
}

impl PiecewiseCdf {
    pub fn new(xs: Vec<f64>, fs: Vec<f64>) -> Result<Self> {
        if xs.len() != fs.len() || xs.len() < 2 {
            return Err(Error::InvalidMeasure("malformed CDF table".into()));
        }
        for w in xs.windows(2) {
            if w[1] < w[0] {
                return Err(Error::InvalidMeasure("CDF breakpoints not sorted".into()));
            }
        }
        for w in fs.windows(2) {
            if w[1] < w[0] - 1e-12 {
                return Err(Error::InvalidMeasure("CDF not monotone".into()));
            }
        }
        Ok(Self { xs, fs })
    }

    /// Unit step at `c` (the CDF of a point mass).
    pub fn step_at(c: f64) -> Self {
        Self {
            xs: vec![c, c],
            fs: vec![0.0, 1.0],
        }
    }

    /// CDF of a nonnegative density grid via trapezoidal accumulation,
    /// normalized to total mass 1.
    pub fn from_density_grid(grid: &DensityGrid) -> Result<Self> {
        let h = grid.spacing();
        let v = grid.values();
        let mut fs = Vec::with_capacity(v.len());
        let mut acc = 0.0;
        fs.push(0.0);
        for i in 1..v.len() {
            acc += 0.5 * h * (v[i - 1] + v[i]);
            fs.push(acc);
        }
        let total = acc;
        if !(total > 0.0) {
            return Err(Error::InvalidMeasure("grid has no mass".into()));
        }
        for f in fs.iter_mut() {
            *f /= total;
        }
        let xs = (0..v.len()).map(|i| grid.node(i)).collect();
        Self::new(xs, fs)
    }

    /// Empirical CDF of a normalized, nonnegatively weighted measure.
    pub fn from_empirical(mu: &EmpiricalMeasure) -> Result<Self> {
        if !mu.is_normalized() {
            return Err(Error::InvalidMeasure(
                "Wasserstein distance needs a normalized measure".into(),
            ));
        }
        let mut atoms = mu.atoms().to_vec();
        if atoms.iter().any(|&(_, w)| w < 0.0) {
            return Err(Error::InvalidMeasure(
                "Wasserstein distance needs nonnegative weights".into(),
            ));
        }
        atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut xs = Vec::new();
        let mut fs = Vec::new();
        let mut acc = 0.0;
        let mut i = 0;
        while i < atoms.len() {
            let v = atoms[i].0;
            let mut w = 0.0;
            while i < atoms.len() && atoms[i].0 == v {
                w += atoms[i].1;
                i += 1;
            }
            xs.push(v);
            fs.push(acc);
            acc += w;
            xs.push(v);
            fs.push(acc);
        }
        // Close any rounding gap so the CDF ends exactly at 1.
        if let Some(last) = fs.last_mut() {
            *last = 1.0;
        }
        Self::new(xs, fs)
    }

    fn support(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    /// CDF value just left / just right of `x` (piecewise-linear between
    /// breakpoints, constant outside).
    fn eval_sided(&self, x: f64, from_right: bool) -> f64 {
        if x < self.xs[0] || (x == self.xs[0] && !from_right) {
            return 0.0;
        }
        let n = self.xs.len();
        if x > self.xs[n - 1] || (x == self.xs[n - 1] && from_right) {
            return *self.fs.last().unwrap();
        }
        // Find a segment [xs[i], xs[i+1]] containing x on the requested side.
        let mut idx = match self
            .xs
            .binary_search_by(|p| p.partial_cmp(&x).unwrap())
        {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        if from_right {
            // Skip to the last breakpoint equal to x.
            while idx + 1 < n && self.xs[idx + 1] == x {
                idx += 1;
            }
            if idx + 1 >= n {
                return self.fs[n - 1];
            }
            let (x0, x1) = (self.xs[idx], self.xs[idx + 1]);
            let (f0, f1) = (self.fs[idx], self.fs[idx + 1]);
            if x1 == x0 {
                return f1;
            }
            f0 + (f1 - f0) * (x - x0) / (x1 - x0)
        } else {
            // Skip to the first breakpoint equal to x.
            while idx > 0 && self.xs[idx - 1] == x {
                idx -= 1;
            }
            if self.xs[idx] == x {
                return self.fs[idx];
            }
            let (x0, x1) = (self.xs[idx], self.xs[idx + 1]);
            let (f0, f1) = (self.fs[idx], self.fs[idx + 1]);
            if x1 == x0 {
                return f1;
            }
            f0 + (f1 - f0) * (x - x0) / (x1 - x0)
        }
    }
}

/// Exact integral of `|F - G|` between two piecewise-linear CDFs, evaluated
/// on the merged breakpoint grid with sign-change splitting.
pub fn w1_between_cdfs(a: &PiecewiseCdf, b: &PiecewiseCdf) -> f64 {
    let mut points: Vec<f64> = a.xs.iter().chain(b.xs.iter()).copied().collect();
    points.sort_by(|p, q| p.partial_cmp(q).unwrap());
    points.dedup();

    let (alo, ahi) = a.support();
    let (blo, bhi) = b.support();
    let lo = alo.min(blo);
    let hi = ahi.max(bhi);

    let mut total = 0.0;
    for w in points.windows(2) {
        let (x0, x1) = (w[0], w[1]);
        if x1 <= lo || x0 >= hi || x0 == x1 {
            continue;
        }
        let g0 = a.eval_sided(x0, true) - b.eval_sided(x0, true);
        let g1 = a.eval_sided(x1, false) - b.eval_sided(x1, false);
        let dx = x1 - x0;
        total += if g0 * g1 >= 0.0 {
            0.5 * (g0.abs() + g1.abs()) * dx
        } else {
            // Linear sign change: split at the root.
            let r = g0 / (g0 - g1);
            0.5 * (g0.abs() * r + g1.abs() * (1.0 - r)) * dx
        };
    }
    total
}

/// Wasserstein-1 distance between a normalized empirical measure and a
/// reference CDF.
pub fn wasserstein1(mu: &EmpiricalMeasure, reference: &PiecewiseCdf) -> Result<f64> {
    let emp = PiecewiseCdf::from_empirical(mu)?;
    Ok(w1_between_cdfs(&emp, reference))
}

/// Residual of the integrated drift identity along a snapshot sequence.
///
/// For each snapshot time the drift integrand
/// `2 (<pi * pi, G(., /2)> - <pi, G>) + <pi, dG/dt>` is evaluated and
/// accumulated by trapezoidal quadrature; the residual
/// `R(t_k) = <pi_k, G> - <pi_0, G> - quad` estimates the martingale
/// fluctuation plus quadrature error and vanishes as the population grows.
pub fn martingale_residual(
    snapshots: &[(f64, EmpiricalMeasure)],
    g: &TestFunction,
    method: &ConvMethod,
) -> Result<Vec<(f64, f64)>> {
    if snapshots.len() < 3 {
        return Err(Error::InvalidSchedule(format!(
            "martingale residual needs at least 3 snapshots, got {}",
            snapshots.len()
        )));
    }
    for w in snapshots.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(Error::InvalidSchedule(
                "snapshot times must be strictly increasing".into(),
            ));
        }
    }

    let integrand: Vec<f64> = snapshots
        .iter()
        .map(|(t, mu)| -> Result<f64> {
            let conv = pair_convolution(mu, g, *t, method)?;
            let direct = pair(mu, g, *t);
            let dt_term = mu
                .atoms()
                .iter()
                .map(|&(v, w)| w * g.eval_dt(*t, v))
                .sum::<f64>();
            Ok(2.0 * (conv - direct) + dt_term)
        })
        .collect::<Result<_>>()?;

    let base = pair(&snapshots[0].1, g, snapshots[0].0);
    let mut out = Vec::with_capacity(snapshots.len());
    let mut quad = 0.0;
    out.push((snapshots[0].0, 0.0));
    for k in 1..snapshots.len() {
        let dt = snapshots[k].0 - snapshots[k - 1].0;
        quad += 0.5 * dt * (integrand[k] + integrand[k - 1]);
        let value = pair(&snapshots[k].1, g, snapshots[k].0);
        out.push((snapshots[k].0, value - base - quad));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::InitialDistribution;
    use crate::opinion::sample_initial;

    fn ber_half() -> EmpiricalMeasure {
        EmpiricalMeasure::from_atoms(vec![(0.0, 0.5), (1.0, 0.5)], true).unwrap()
    }

    #[test]
    fn pair_basics() {
        let mu = ber_half();
        let one = TestFunction::steady("1", |_| 1.0);
        let id = TestFunction::steady("u", |u| u);
        assert_eq!(pair(&mu, &one, 0.0), 1.0);
        assert_eq!(pair(&mu, &id, 0.0), 0.5);
    }

    #[test]
    fn pair_sample_mean() {
        let d = InitialDistribution::Linear2x;
        let mut rng = RngStream::new(21, 0);
        let n = 100_000;
        let cfg = sample_initial(&d, n, &mut rng).unwrap();
        let mu = EmpiricalMeasure::from_values(&cfg.opinions);
        let id = TestFunction::steady("u", |u| u);
        let got = pair(&mu, &id, 0.0);
        let band = 3.0 * (1.0 / 18.0_f64).sqrt() / (n as f64).sqrt();
        assert!((got - 2.0 / 3.0).abs() < band);
    }

    #[test]
    fn conv_pairing_point_mass() {
        let mu = EmpiricalMeasure::from_atoms(vec![(0.7, 1.0)], true).unwrap();
        let sq = TestFunction::steady("u^2", |u| u * u);
        let got = pair_convolution(&mu, &sq, 0.0, &ConvMethod::Exact).unwrap();
        assert!((got - 0.49).abs() < 1e-15);
    }

    #[test]
    fn conv_pairing_bernoulli_exact() {
        // Pair midpoints {0, 1/2, 1} with probabilities {1/4, 1/2, 1/4}.
        let mu = ber_half();
        let sq = TestFunction::steady("u^2", |u| u * u);
        let got = pair_convolution(&mu, &sq, 0.0, &ConvMethod::Exact).unwrap();
        assert!((got - 3.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn conv_pairing_constant_is_total_mass() {
        let mu = ber_half();
        let one = TestFunction::steady("1", |_| 1.0);
        for method in [ConvMethod::Exact, ConvMethod::Binned(64)] {
            let got = pair_convolution(&mu, &one, 0.0, &method).unwrap();
            assert!((got - 1.0).abs() < 1e-12, "{method:?}: {got}");
        }
    }

    #[test]
    fn binned_matches_exact() {
        let d = InitialDistribution::Linear2x;
        let mut rng = RngStream::new(22, 0);
        let cfg = sample_initial(&d, 10_000, &mut rng).unwrap();
        let mu = EmpiricalMeasure::from_values(&cfg.opinions);
        let sq = TestFunction::steady("u^2", |u| u * u);
        let exact = pair_convolution(&mu, &sq, 0.0, &ConvMethod::Exact).unwrap();
        let binned = pair_convolution(&mu, &sq, 0.0, &ConvMethod::Binned(4096)).unwrap();
        assert!((exact - binned).abs() < 1e-3, "{exact} vs {binned}");
    }

    #[test]
    fn binned_preserves_first_moment_exactly_in_structure() {
        // Linear binning preserves the mean, so degree-one pairings agree
        // with the exact route to rounding.
        let d = InitialDistribution::Uniform(-2.0, 3.0);
        let mut rng = RngStream::new(23, 0);
        let cfg = sample_initial(&d, 5_000, &mut rng).unwrap();
        let mu = EmpiricalMeasure::from_values(&cfg.opinions);
        let id = TestFunction::steady("u", |u| u);
        let exact = pair_convolution(&mu, &id, 0.0, &ConvMethod::Exact).unwrap();
        let binned = pair_convolution(&mu, &id, 0.0, &ConvMethod::Binned(512)).unwrap();
        assert!((exact - binned).abs() < 1e-10, "{exact} vs {binned}");
        // And both equal the plain mean.
        let mean = pair(&mu, &id, 0.0);
        assert!((exact - mean).abs() < 1e-12);
    }

    #[test]
    fn subsample_converges() {
        let mu = ber_half();
        let sq = TestFunction::steady("u^2", |u| u * u);
        let got = pair_convolution(
            &mu,
            &sq,
            0.0,
            &ConvMethod::Subsample {
                pairs: 200_000,
                seed: 5,
                stream: 0,
            },
        )
        .unwrap();
        // sd of G over pairs is ~0.33; 4 sigma band.
        assert!((got - 0.375).abs() < 4.0 * 0.35 / (200_000f64).sqrt());
    }

    #[test]
    fn exact_cap_enforced() {
        let values: Vec<f64> = (0..EXACT_PAIRING_CAP + 1).map(|i| i as f64).collect();
        let mu = EmpiricalMeasure::from_values(&values);
        let one = TestFunction::steady("1", |_| 1.0);
        assert!(matches!(
            pair_convolution(&mu, &one, 0.0, &ConvMethod::Exact),
            Err(Error::SizeCap { .. })
        ));
    }

    #[test]
    fn w1_identical_measures() {
        let mu = ber_half();
        let cdf = PiecewiseCdf::from_empirical(&mu).unwrap();
        assert!(wasserstein1(&mu, &cdf).unwrap() < 1e-12);
    }

    #[test]
    fn w1_point_masses() {
        let mu = EmpiricalMeasure::from_atoms(vec![(0.0, 1.0)], true).unwrap();
        let got = wasserstein1(&mu, &PiecewiseCdf::step_at(1.0)).unwrap();
        assert!((got - 1.0).abs() < 1e-12);
    }

    #[test]
    fn w1_bernoulli_vs_uniform() {
        // int_0^1 |u - 1/2| du = 1/4.
        let mu = ber_half();
        let uniform = PiecewiseCdf::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        let got = wasserstein1(&mu, &uniform).unwrap();
        assert!((got - 0.25).abs() < 1e-12, "{got}");
    }

    #[test]
    fn w1_rejects_signed_measures() {
        let mu = EmpiricalMeasure::from_atoms(vec![(0.0, 2.0), (1.0, -1.0)], true).unwrap();
        assert!(wasserstein1(&mu, &PiecewiseCdf::step_at(0.0)).is_err());
    }

    #[test]
    fn residual_constant_test_function() {
        let mus: Vec<(f64, EmpiricalMeasure)> = (0..5)
            .map(|k| (k as f64 * 0.1, ber_half()))
            .collect();
        let one = TestFunction::steady("1", |_| 1.0);
        let res = martingale_residual(&mus, &one, &ConvMethod::Exact).unwrap();
        for (_, r) in res {
            assert_eq!(r, 0.0);
        }
    }

    #[test]
    fn residual_needs_three_snapshots() {
        let mus: Vec<(f64, EmpiricalMeasure)> =
            (0..2).map(|k| (k as f64, ber_half())).collect();
        let one = TestFunction::steady("1", |_| 1.0);
        assert!(martingale_residual(&mus, &one, &ConvMethod::Exact).is_err());
    }
}
