//! Catalog of initial opinion distributions.
//!
//! Each kind exposes a CDF, inverse-CDF sampling from an [`RngStream`], and a
//! pointwise density used to initialize the grid solver. Density evaluation
//! at a jump discontinuity returns the mean of the one-sided limits; this
//! half-jump convention is what makes trapezoidal mass of discontinuous
//! initial data (Bernoulli-free kinds like the 2u ramp) exact on node-aligned
//! grids.

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Initial opinion law.
///
/// All kinds except `Cauchy` have compact support contained in
/// `[-support_bound(), support_bound()]`. The Cauchy kind is admitted only as
/// solver initial data, not for simulator acceptance runs.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialDistribution {
    /// All mass at a single value.
    PointMass(f64),
    /// Mass `1 - p` at 0 and `p` at 1.
    Bernoulli(f64),
    /// Uniform density on `[a, b]`.
    Uniform(f64, f64),
    /// Density `2u` on `[0, 1]`.
    Linear2x,
    /// Cauchy density `a / (pi (a^2 + u^2))`; unbounded support, no mean.
    Cauchy { scale: f64 },
    /// Piecewise-linear density through `(u, f)` knots, normalized to mass 1.
    PiecewiseLinear(Vec<(f64, f64)>),
}

impl InitialDistribution {
    /// Validates parameters; piecewise densities are checked for
    /// normalizability (finite positive mass, nonnegative values).
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::PointMass(c) => {
                if !c.is_finite() {
                    return Err(Error::InvalidDistribution("non-finite point mass".into()));
                }
            }
            Self::Bernoulli(p) => {
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::InvalidDistribution(format!(
                        "Bernoulli parameter {p} outside [0, 1]"
                    )));
                }
            }
            Self::Uniform(a, b) => {
                if !(a.is_finite() && b.is_finite() && a < b) {
                    return Err(Error::InvalidDistribution(format!(
                        "uniform bounds ({a}, {b}) must be finite with a < b"
                    )));
                }
            }
            Self::Linear2x => {}
            Self::Cauchy { scale } => {
                if !(scale.is_finite() && *scale > 0.0) {
                    return Err(Error::InvalidDistribution(format!(
                        "Cauchy scale {scale} must be positive"
                    )));
                }
            }
            Self::PiecewiseLinear(knots) => {
                if knots.len() < 2 {
                    return Err(Error::InvalidDistribution(
                        "piecewise density needs at least two knots".into(),
                    ));
                }
                for w in knots.windows(2) {
                    if !(w[0].0 < w[1].0) {
                        return Err(Error::InvalidDistribution(
                            "knot positions must be strictly increasing".into(),
                        ));
                    }
                }
                for &(u, f) in knots {
                    if !u.is_finite() || !f.is_finite() || f < 0.0 {
                        return Err(Error::InvalidDistribution(
                            "knot values must be finite and nonnegative".into(),
                        ));
                    }
                }
                let mass = pwl_raw_mass(knots);
                if !(mass.is_finite() && mass > 0.0) {
                    return Err(Error::InvalidDistribution(format!(
                        "piecewise density is not normalizable (raw mass {mass})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Smallest `M` with support contained in `[-M, M]`; infinite for Cauchy.
    pub fn support_bound(&self) -> f64 {
        match self {
            Self::PointMass(c) => c.abs(),
            Self::Bernoulli(_) => 1.0,
            Self::Uniform(a, b) => a.abs().max(b.abs()),
            Self::Linear2x => 1.0,
            Self::Cauchy { .. } => f64::INFINITY,
            Self::PiecewiseLinear(knots) => knots
                .iter()
                .map(|&(u, _)| u.abs())
                .fold(0.0_f64, f64::max),
        }
    }

    /// Right-continuous CDF.
    pub fn cdf(&self, u: f64) -> f64 {
        match self {
            Self::PointMass(c) => {
                if u >= *c {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Bernoulli(p) => {
                if u < 0.0 {
                    0.0
                } else if u < 1.0 {
                    1.0 - p
                } else {
                    1.0
                }
            }
            Self::Uniform(a, b) => ((u - a) / (b - a)).clamp(0.0, 1.0),
            Self::Linear2x => {
                let v = u.clamp(0.0, 1.0);
                v * v
            }
            Self::Cauchy { scale } => 0.5 + (u / scale).atan() / std::f64::consts::PI,
            Self::PiecewiseLinear(knots) => pwl_cdf(knots, u),
        }
    }

    /// Density value; at a jump the mean of the one-sided limits.
    ///
    /// Atomic kinds (point mass, Bernoulli) have no density and return an
    /// error when used as grid initial data.
    pub fn density(&self, u: f64) -> Result<f64> {
        match self {
            Self::PointMass(_) | Self::Bernoulli(_) => Err(Error::InvalidDistribution(
                "atomic distribution has no density".into(),
            )),
            Self::Uniform(a, b) => {
                let height = 1.0 / (b - a);
                Ok(if u == *a || u == *b {
                    height / 2.0
                } else if u > *a && u < *b {
                    height
                } else {
                    0.0
                })
            }
            Self::Linear2x => Ok(if u == 1.0 {
                1.0
            } else if u > 0.0 && u < 1.0 {
                2.0 * u
            } else {
                0.0
            }),
            Self::Cauchy { scale } => {
                Ok(scale / (std::f64::consts::PI * (scale * scale + u * u)))
            }
            Self::PiecewiseLinear(knots) => Ok(pwl_density(knots, u)),
        }
    }

    /// One inverse-CDF draw.
    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        match self {
            Self::PointMass(c) => *c,
            Self::Bernoulli(p) => {
                if rng.uniform() < *p {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Uniform(a, b) => rng.uniform_in(*a, *b),
            Self::Linear2x => rng.uniform().sqrt(),
            Self::Cauchy { scale } => {
                scale * (std::f64::consts::PI * (rng.uniform() - 0.5)).tan()
            }
            Self::PiecewiseLinear(knots) => pwl_sample(knots, rng.uniform()),
        }
    }

    /// Parses a compact textual spec:
    /// `point:c | ber:p | uniform:a,b | linear2x | cauchy:a | pwl:u0,f0;u1,f1;...`
    pub fn parse(spec: &str) -> Result<Self> {
        let (kind, args) = match spec.split_once(':') {
            Some((k, a)) => (k.trim(), a.trim()),
            None => (spec.trim(), ""),
        };
        let dist = match kind {
            "point" => Self::PointMass(parse_f64(args)?),
            "ber" | "bernoulli" => Self::Bernoulli(parse_f64(args)?),
            "uniform" => {
                let (a, b) = args.split_once(',').ok_or_else(|| {
                    Error::InvalidDistribution("uniform needs two bounds a,b".into())
                })?;
                Self::Uniform(parse_f64(a)?, parse_f64(b)?)
            }
            "linear2x" => Self::Linear2x,
            "cauchy" => Self::Cauchy {
                scale: parse_f64(args)?,
            },
            "pwl" => {
                let mut knots = Vec::new();
                for pair in args.split(';') {
                    let (u, f) = pair.split_once(',').ok_or_else(|| {
                        Error::InvalidDistribution(format!("bad knot `{pair}`"))
                    })?;
                    knots.push((parse_f64(u)?, parse_f64(f)?));
                }
                Self::PiecewiseLinear(knots)
            }
            other => {
                return Err(Error::InvalidDistribution(format!(
                    "unknown distribution kind `{other}`"
                )))
            }
        };
        dist.validate()?;
        Ok(dist)
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::InvalidDistribution(format!("expected a number, got `{s}`")))
}

fn pwl_raw_mass(knots: &[(f64, f64)]) -> f64 {
    knots
        .windows(2)
        .map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0))
        .sum()
}

fn pwl_density(knots: &[(f64, f64)], u: f64) -> f64 {
    let mass = pwl_raw_mass(knots);
    let first = knots[0];
    let last = knots[knots.len() - 1];
    if u < first.0 || u > last.0 {
        return 0.0;
    }
    // Half-jump at the outer edges where the density drops to zero.
    if u == first.0 {
        return first.1 / (2.0 * mass);
    }
    if u == last.0 {
        return last.1 / (2.0 * mass);
    }
    for w in knots.windows(2) {
        if u <= w[1].0 {
            let s = (u - w[0].0) / (w[1].0 - w[0].0);
            return (w[0].1 + s * (w[1].1 - w[0].1)) / mass;
        }
    }
    0.0
}

fn pwl_cdf(knots: &[(f64, f64)], u: f64) -> f64 {
    let mass = pwl_raw_mass(knots);
    if u <= knots[0].0 {
        return 0.0;
    }
    let mut acc = 0.0;
    for w in knots.windows(2) {
        let (u0, f0) = w[0];
        let (u1, f1) = w[1];
        if u >= u1 {
            acc += 0.5 * (f0 + f1) * (u1 - u0);
        } else {
            let s = (u - u0) / (u1 - u0);
            let fu = f0 + s * (f1 - f0);
            acc += 0.5 * (f0 + fu) * (u - u0);
            break;
        }
    }
    (acc / mass).min(1.0)
}

fn pwl_sample(knots: &[(f64, f64)], q: f64) -> f64 {
    let mass = pwl_raw_mass(knots);
    let target = q * mass;
    let mut acc = 0.0;
    let last_seg = knots.len() - 2;
    for (i, w) in knots.windows(2).enumerate() {
        let (u0, f0) = w[0];
        let (u1, f1) = w[1];
        let seg = 0.5 * (f0 + f1) * (u1 - u0);
        if acc + seg >= target || i == last_seg {
            let rem = (target - acc).max(0.0);
            let du = u1 - u0;
            let slope = (f1 - f0) / du;
            // Solve f0 x + slope x^2 / 2 = rem for x in [0, du].
            let x = if slope.abs() * du < 1e-300 {
                if f0 > 0.0 {
                    rem / f0
                } else {
                    0.0
                }
            } else {
                let disc = (f0 * f0 + 2.0 * slope * rem).max(0.0);
                (-f0 + disc.sqrt()) / slope
            };
            return u0 + x.clamp(0.0, du);
        }
        acc += seg;
    }
    knots[knots.len() - 1].0
}
