//! Snapshot-density stability of the martingale residual: once snapshots
//! are dense enough, the residual magnitude is dominated by the martingale
//! fluctuation, not the quadrature, so doubling the density barely moves
//! the per-replica sup.

use averaging::init::InitialDistribution;
use averaging::measure::{martingale_residual, ConvMethod, EmpiricalMeasure, TestFunction};
use averaging::rng::RngStream;
use averaging::sim_complete;
use averaging::stats;
use rayon::prelude::*;

#[test]
fn quadrature_density_stability() {
    // The optimized profile runs the stated size; the unoptimized one a
    // reduced smoke version of the same paired comparison.
    let (n, reps) = if cfg!(debug_assertions) {
        (2_000usize, 12u64)
    } else {
        (10_000usize, 50u64)
    };
    let horizon = 1.0;
    let coarse: Vec<f64> = (0..=100).map(|i| i as f64 * 0.01).collect();
    let fine: Vec<f64> = (0..=200).map(|i| i as f64 * 0.005).collect();
    let dist = InitialDistribution::Bernoulli(0.5);
    let method = ConvMethod::Binned(4096);

    let sups: Vec<(f64, f64)> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::new(7301, r);
            let run = sim_complete::run(&dist, n, horizon, &fine, &mut rng).unwrap();
            let g = TestFunction::steady("u^2", |u| u * u);
            let sup_on = |times: &[f64]| -> f64 {
                let snaps: Vec<(f64, EmpiricalMeasure)> = run
                    .snapshots
                    .iter()
                    .filter(|s| times.contains(&s.t))
                    .map(|s| (s.t, EmpiricalMeasure::from_values(&s.opinions)))
                    .collect();
                martingale_residual(&snaps, &g, &method)
                    .unwrap()
                    .iter()
                    .map(|&(_, v)| v.abs())
                    .fold(0.0_f64, f64::max)
            };
            (sup_on(&coarse), sup_on(&fine))
        })
        .collect();

    let coarse_meds: Vec<f64> = sups.iter().map(|s| s.0).collect();
    let fine_meds: Vec<f64> = sups.iter().map(|s| s.1).collect();
    let med_coarse = stats::median(&coarse_meds);
    let med_fine = stats::median(&fine_meds);
    let change = (med_fine / med_coarse - 1.0).abs();
    assert!(
        change < 0.10,
        "doubling snapshot density moved the median sup|R| by {:.1}% \
         ({med_coarse:.3e} -> {med_fine:.3e})",
        100.0 * change
    );
}
