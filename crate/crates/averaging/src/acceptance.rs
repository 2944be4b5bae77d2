//! End-to-end acceptance checks cross-validating the simulators against the
//! limit solvers.
//!
//! Each criterion is a standalone function returning a [`CriterionReport`];
//! [`run_all`] executes the whole battery in order. Criteria use fixed seeds
//! so a pass or failure is reproducible, and each records its wall time
//! against the stated budget.

use std::time::Instant;

use rayon::prelude::*;

use crate::atoms::{self, AtomicMeasure};
use crate::error::Result;
use crate::export;
use crate::init::InitialDistribution;
use crate::measure::{
    martingale_residual, wasserstein1, ConvMethod, EmpiricalMeasure, PiecewiseCdf, TestFunction,
};
use crate::pde::{self, DensityGrid};
use crate::rng::RngStream;
use crate::sim_complete::{self, expected_xj, perturbed_replay, xj_counts};
use crate::sim_torus::{self, FourierProfile};
use crate::stats;

/// Outcome of one criterion.
#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub details: Vec<String>,
    pub seconds: f64,
}

impl CriterionReport {
    pub fn summary_line(&self) -> String {
        format!(
            "[{}] criterion {:2} {:<28} ({:.1}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.seconds
        )
    }
}

/// Scale knobs for the battery. `full` runs every check at its stated size;
/// `quick` trims the grid and replica counts for a fast smoke pass.
#[derive(Debug, Clone)]
pub struct AcceptanceParams {
    pub pde_base_cells: usize,
    pub martingale_reps: usize,
    pub torus_main_reps: usize,
    pub torus_batch_reps: usize,
}

impl AcceptanceParams {
    pub fn full() -> Self {
        Self {
            pde_base_cells: 1 << 14,
            martingale_reps: 50,
            torus_main_reps: 50,
            torus_batch_reps: 50,
        }
    }

    pub fn quick() -> Self {
        Self {
            pde_base_cells: 1 << 12,
            martingale_reps: 30,
            torus_main_reps: 30,
            torus_batch_reps: 20,
        }
    }
}

struct Check {
    passed: bool,
    details: Vec<String>,
}

impl Check {
    fn new() -> Self {
        Self {
            passed: true,
            details: Vec::new(),
        }
    }

    fn assert(&mut self, ok: bool, line: String) {
        self.passed &= ok;
        self.details
            .push(format!("{} {line}", if ok { "  ok" } else { "FAIL" }));
    }

    fn note(&mut self, line: String) {
        self.details.push(format!("     {line}"));
    }

    fn finish(
        mut self,
        id: u32,
        name: &'static str,
        started: Instant,
        budget_seconds: f64,
    ) -> CriterionReport {
        let seconds = started.elapsed().as_secs_f64();
        let in_budget = seconds < budget_seconds;
        // Budgets describe the optimized artifact; unoptimized builds only
        // report.
        if cfg!(not(debug_assertions)) {
            self.passed &= in_budget;
        }
        self.details.push(format!(
            "     runtime {seconds:.1}s (budget {budget_seconds:.0}s){}",
            if in_budget { "" } else { " EXCEEDED" }
        ));
        CriterionReport {
            id,
            name,
            passed: self.passed,
            details: self.details,
            seconds,
        }
    }
}

/// Criterion 1: sum conservation and range contraction on a single large run.
pub fn criterion_conservation(_p: &AcceptanceParams) -> CriterionReport {
    let started = Instant::now();
    let mut c = Check::new();
    let dist = InitialDistribution::Bernoulli(0.5);
    let times: Vec<f64> = (0..=8).map(|i| i as f64 * 0.25).collect();
    let mut rng = RngStream::new(1001, 0);
    match sim_complete::run(&dist, 10_000, 2.0, &times, &mut rng) {
        Ok(run) => {
            let s0 = &run.snapshots[0];
            let sum0: f64 = s0.opinions.iter().sum();
            let min0 = s0.opinions.iter().cloned().fold(f64::INFINITY, f64::min);
            let max0 = s0
                .opinions
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max);
            let mut worst_drift = 0.0_f64;
            let mut range_ok = true;
            for s in &run.snapshots {
                let sum: f64 = s.opinions.iter().sum();
                worst_drift = worst_drift.max((sum - sum0).abs() / (1.0 + sum0.abs()));
                let mn = s.opinions.iter().cloned().fold(f64::INFINITY, f64::min);
                let mx = s
                    .opinions
                    .iter()
                    .cloned()
                    .fold(f64::NEG_INFINITY, f64::max);
                range_ok &= mn >= min0 && mx <= max0;
            }
            c.assert(
                worst_drift <= 1e-9,
                format!("relative sum drift {worst_drift:.2e} <= 1e-9 at every snapshot"),
            );
            c.assert(range_ok, "opinion range never expands".into());
        }
        Err(e) => c.assert(false, format!("run failed: {e}")),
    }
    c.finish(1, "conservation", started, 10.0)
}

/// Criterion 2: replica means of the interaction-count histogram match the Poisson
/// formula `N (2t)^j / j! (1 - 1/2N)^j e^{-2t(1 - 1/2N)}`.
pub fn criterion_xj_statistics(_p: &AcceptanceParams) -> CriterionReport {
    let started = Instant::now();
    let mut c = Check::new();
    let n = 10_000;
    let t = 1.0;
    let reps = 100u64;
    let dist = InitialDistribution::Bernoulli(0.5);

    let per_rep: Vec<[f64; 4]> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::new(1002, r);
            let run = sim_complete::run(&dist, n, t, &[t], &mut rng).unwrap();
            let xj = xj_counts(&run, t).unwrap();
            let mut row = [0.0; 4];
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = xj.counts.get(j).copied().unwrap_or(0) as f64;
            }
            row
        })
        .collect();

    for j in 0..4 {
        let vals: Vec<f64> = per_rep.iter().map(|r| r[j]).collect();
        let mean = stats::mean(&vals);
        let se = stats::standard_error(&vals);
        let want = expected_xj(n, t, j as u32);
        let ok = (mean - want).abs() <= 3.0 * se;
        c.assert(
            ok,
            format!("j={j}: replica mean {mean:.2} within 3 se ({se:.2}) of {want:.2}"),
        );
    }
    c.finish(2, "interaction-count law", started, 120.0)
}

/// Criterion 3: initial perturbations propagate with the exact `delta / 2^j` bound
/// under coupled replay.
pub fn criterion_perturbation(_p: &AcceptanceParams) -> CriterionReport {
    let started = Instant::now();
    let mut c = Check::new();
    let dist = InitialDistribution::Uniform(0.0, 1.0);
    let n = 100;
    let t = 1.0;
    let delta = 0.1;

    let failures: usize = (0..1000u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = RngStream::new(1003, k);
            let (_, initial, log) =
                sim_complete::run_recorded(&dist, n, t, &[t], &mut rng).unwrap();
            let x = rng.index(n);
            let mut bad = 0usize;
            for sign in [1.0, -1.0] {
                let d = sign * delta;
                let r = perturbed_replay(&initial, &log, x, d, t).unwrap();
                let gap = r.perturbed - r.original;
                let bound = d / 2f64.powi(r.j as i32);
                // One-ulp slack per halving covers rounding of the coupled
                // trajectories; the bound itself is exact in real arithmetic.
                let slack = 1e-12 * bound.abs();
                let ok = if d > 0.0 {
                    gap > 0.0 && gap >= bound - slack
                } else {
                    gap < 0.0 && gap <= bound + slack
                };
                if !ok {
                    bad += 1;
                }
            }
            bad
        })
        .sum();

    c.assert(
        failures == 0,
        format!("perturbation bound held in all 2000 replays ({failures} violations)"),
    );
    c.finish(3, "perturbation bound", started, 60.0)
}

/// Criterion 4: solver versus the stationary scaled-Cauchy oracle, with the grid
/// refinement clause and the alternative mass-factor report.
pub fn criterion_cauchy_oracle(p: &AcceptanceParams) -> CriterionReport {
    let started = Instant::now();
    let mut c = Check::new();
    let a = 1.0;
    let l = 200.0;
    let dt = 1e-3;
    let horizon = 1.0;

    let window_error = |cells: usize| -> Result<f64> {
        let grid = pde::scaled_cauchy_grid(a, 0.0, 0.0, l, cells)?;
        let traj = pde::integrate(&grid, dt, horizon, &[horizon])?;
        let end = &traj.snapshots[0];
        let mut worst = 0.0_f64;
        for (i, &v) in end.values().iter().enumerate() {
            let u = end.node(i);
            if u.abs() <= 10.0 {
                worst = worst.max((v - pde::scaled_cauchy_solution(a, 0.0, 0.0, u)).abs());
            }
        }
        Ok(worst)
    };

    match (window_error(p.pde_base_cells), window_error(p.pde_base_cells * 2)) {
        (Ok(err_h), Ok(err_h2)) => {
            c.assert(
                err_h <= 1e-3,
                format!(
                    "stationary drift sup_(|u|<=10) {err_h:.3e} <= 1e-3 at n={}",
                    p.pde_base_cells
                ),
            );
            let ratio = err_h / err_h2;
            c.assert(
                ratio >= 3.0,
                format!(
                    "halving h shrinks the error {ratio:.2}x (>= 3x required; \
                     the error here sits on the h-independent domain-truncation \
                     floor, so no spatial order is observable against this \
                     analytic oracle)"
                ),
            );
            c.note(format!("error at n={}: {err_h2:.3e}", p.pde_base_cells * 2));
        }
        (e1, e2) => c.assert(false, format!("solver failed: {e1:?} / {e2:?}")),
    }

    // Mass-factor candidates, evaluated against the same run from unit mass.
    let cells = p.pde_base_cells;
    if let Ok(grid) = pde::scaled_cauchy_grid(a, 0.0, 0.0, l, cells) {
        if let Ok(traj) = pde::integrate(&grid, dt, horizon, &[horizon]) {
            let end = &traj.snapshots[0];
            let mut res_family = 0.0_f64;
            let mut res_alt = 0.0_f64;
            let alt_mass = pde::mass_candidate_alt(horizon);
            for (i, &v) in end.values().iter().enumerate() {
                let u = end.node(i);
                if u.abs() <= 10.0 {
                    res_family =
                        res_family.max((v - pde::scaled_cauchy_solution(a, 0.0, horizon, u)).abs());
                    res_alt = res_alt.max((v - alt_mass * pde::cauchy_density(a, u)).abs());
                }
            }
            c.note(format!(
                "mass-law residuals at t=1: family 1/(1+c e^2t) -> {res_family:.3e}, \
                 alternative 1/(2 e^2t - 1) -> {res_alt:.3e} (reported, not gated)"
            ));
        }
    }

    // Decaying family member (c = 1): mass falls from 1/2 to 1/(1+e^2),
    // exercising the time integrator rather than a fixed point.
    let family_cells = 4096.min(p.pde_base_cells);
    match pde::scaled_cauchy_grid(a, 1.0, 0.0, l, family_cells)
        .and_then(|g| pde::integrate(&g, dt, horizon, &[horizon]))
    {
        Ok(traj) => {
            let end = &traj.snapshots[0];
            let mut worst = 0.0_f64;
            for (i, &v) in end.values().iter().enumerate() {
                let u = end.node(i);
                if u.abs() <= 10.0 {
                    worst =
                        worst.max((v - pde::scaled_cauchy_solution(a, 1.0, horizon, u)).abs());
                }
            }
            c.assert(
                worst <= 1e-3,
                format!("decaying family (c=1) tracked to {worst:.3e} <= 1e-3"),
            );
        }
        Err(e) => c.assert(false, format!("decaying-family run failed: {e}")),
    }

    c.finish(4, "Cauchy solver oracle", started, 120.0)
}

/// Criterion 5: moment laws of the solver for the 2u ramp: conserved mass and mean,
/// exponentially decaying variance.
pub fn criterion_pde_moments(_p: &AcceptanceParams) -> CriterionReport {
    let started = Instant::now();
    let mut c = Check::new();
    let grid = match DensityGrid::from_distribution(&InitialDistribution::Linear2x, 2.0, 4096) {
        Ok(g) => g,
        Err(e) => {
            c.assert(false, format!("grid construction failed: {e}"));
            return c.finish(5, "solver moment laws", started, 60.0);
        }
    };
    let m0 = grid.moments().unwrap();
    match pde::integrate(&grid, 1e-3, 2.0, &[0.5, 1.0, 2.0]) {
        Ok(traj) => {
            let mut worst_mass = 0.0_f64;
            let mut worst_mean = 0.0_f64;
            let mut worst_var = 0.0_f64;
            for s in &traj.snapshots {
                let m = s.moments().unwrap();
                worst_mass = worst_mass.max((m.mass - m0.mass).abs());
                worst_mean = worst_mean.max((m.mean - m0.mean).abs());
                let want = (1.0 / 18.0) * (-s.time()).exp();
                worst_var = worst_var.max((m.variance / want - 1.0).abs());
            }
            c.assert(
                worst_mass <= 1e-6,
                format!("mass drift {worst_mass:.2e} <= 1e-6"),
            );
            c.assert(
                worst_mean <= 1e-6,
                format!("mean drift {worst_mean:.2e} <= 1e-6"),
            );
            c.assert(
                worst_var <= 1e-4,
                format!("variance matches (1/18) e^-t to {worst_var:.2e} relative (<= 1e-4)"),
            );
            c.note(format!(
                "per-step pairing-identity residual {:.2e}",
                traj.max_weak_residual
            ));
        }
        Err(e) => c.assert(false, format!("integration failed: {e}")),
    }
    c.finish(5, "solver moment laws", started, 60.0)
}

/// Criterion 6: empirical measure of a large run is Wasserstein-close to the solved
/// density, tightening as the population grows.
pub fn criterion_hydrodynamic_w1(_p: &AcceptanceParams) -> CriterionReport {
    let started = Instant::now();
    let mut c = Check::new();
    let dist = InitialDistribution::Linear2x;
    let t = 1.0;

    let reference = DensityGrid::from_distribution(&dist, 2.0, 4096)
        .and_then(|g| pde::integrate(&g, 1e-3, t, &[t]))
        .and_then(|traj| PiecewiseCdf::from_density_grid(&traj.snapshots[0]));
    let reference = match reference {
        Ok(r) => r,
        Err(e) => {
            c.assert(false, format!("reference solve failed: {e}"));
            return c.finish(6, "hydrodynamic limit (W1)", started, 300.0);
        }
    };

    let w1_of = |n: usize, stream: u64| -> Result<f64> {
        let mut rng = RngStream::new(1006, stream);
        let run = sim_complete::run(&dist, n, t, &[t], &mut rng)?;
        let mu = EmpiricalMeasure::from_values(&run.snapshot_at(t)?.opinions);
        wasserstein1(&mu, &reference)
    };

    match w1_of(100_000, 0) {
        Ok(w) => c.assert(w <= 0.01, format!("W1 at N=1e5: {w:.4} <= 0.01")),
        Err(e) => c.assert(false, format!("large run failed: {e}")),
    }

    let sizes = [1_000usize, 10_000, 100_000];
    let medians: Vec<f64> = sizes
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let w1s: Vec<f64> = (0..5u64)
                .into_par_iter()
                .map(|s| w1_of(n, 10 + i as u64 * 5 + s).unwrap())
                .collect();
            stats::median(&w1s)
        })
        .collect();
    c.assert(
        medians[0] > medians[1] && medians[1] > medians[2],
        format!(
            "median W1 over 5 seeds decreases: {:.4} > {:.4} > {:.4} for N=1e3,1e4,1e5",
            medians[0], medians[1], medians[2]
        ),
    );
    c.finish(6, "hydrodynamic limit (W1)", started, 300.0)
}

/// Criterion 7: atomic solver against the closed-form extreme-atom mass and against
/// the simulated fraction of never-diluted opinions.
pub fn criterion_atomic_limit(_p: &AcceptanceParams) -> CriterionReport {
    let started = Instant::now();
    let mut c = Check::new();
    let t: f64 = 1.0;
    let level = 12;
    let zero_mass_exact = 1.0 / (1.0 + (2.0 * t).exp());

    match AtomicMeasure::bernoulli(0.5, level)
        .and_then(|mu| atoms::integrate_atoms(&mu, 1e-3, t, &[t]))
    {
        Ok(snaps) => {
            let end = &snaps[0];
            let got = end.masses()[0];
            c.assert(
                (got - zero_mass_exact).abs() <= 1e-6,
                format!("solver mass at 0: {got:.8} vs 1/(1+e^2) = {zero_mass_exact:.8}"),
            );
            let drift = (end.total_mass() - 1.0).abs();
            c.assert(drift <= 1e-9, format!("solver mass drift {drift:.2e} <= 1e-9"));
            c.note(format!(
                "snapped (level-overflow) mass through t=1: {:.3e}",
                end.snapped_mass_total()
            ));

            let n = 100_000;
            let mut rng = RngStream::new(1007, 0);
            match sim_complete::run(&InitialDistribution::Bernoulli(0.5), n, t, &[t], &mut rng)
            {
                Ok(run) => {
                    let zeros = run
                        .snapshot_at(t)
                        .unwrap()
                        .opinions
                        .iter()
                        .filter(|&&v| v == 0.0)
                        .count();
                    let frac = zeros as f64 / n as f64;
                    let se = (zero_mass_exact * (1.0 - zero_mass_exact) / n as f64).sqrt();
                    c.assert(
                        (frac - got).abs() <= 3.0 * se,
                        format!(
                            "simulated zero fraction {frac:.5} within 3 binomial se \
                             ({se:.5}) of solver mass {got:.5}"
                        ),
                    );
                }
                Err(e) => c.assert(false, format!("simulation failed: {e}")),
            }
        }
        Err(e) => c.assert(false, format!("atomic solve failed: {e}")),
    }
    c.finish(7, "atomic limit", started, 180.0)
}

/// Criterion 8: martingale residual shrinks like 1/sqrt(N) for `G = u^2` and vanishes
/// identically for `G = u`.
pub fn criterion_martingale(p: &AcceptanceParams) -> CriterionReport {
    let started = Instant::now();
    let mut c = Check::new();
    let dist = InitialDistribution::Bernoulli(0.5);
    let horizon = 1.0;
    let times: Vec<f64> = (0..=100).map(|i| i as f64 * 0.01).collect();
    let reps = p.martingale_reps as u64;
    let method = ConvMethod::Binned(4096);

    let sup_residuals = |n: usize, seed: u64| -> (Vec<f64>, f64) {
        let rows: Vec<(f64, f64)> = (0..reps)
            .into_par_iter()
            .map(|r| {
                let mut rng = RngStream::new(seed, r);
                let run = sim_complete::run(&dist, n, horizon, &times, &mut rng).unwrap();
                let snaps: Vec<(f64, EmpiricalMeasure)> = run
                    .snapshots
                    .iter()
                    .map(|s| (s.t, EmpiricalMeasure::from_values(&s.opinions)))
                    .collect();
                let g2 = TestFunction::steady("u^2", |u| u * u);
                let res2 = martingale_residual(&snaps, &g2, &method).unwrap();
                let sup2 = res2.iter().map(|&(_, r)| r.abs()).fold(0.0_f64, f64::max);
                let g1 = TestFunction::steady("u", |u| u);
                let res1 = martingale_residual(&snaps, &g1, &method).unwrap();
                let sup1 = res1.iter().map(|&(_, r)| r.abs()).fold(0.0_f64, f64::max);
                (sup2, sup1)
            })
            .collect();
        let sup2: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let worst1 = rows.iter().map(|r| r.1).fold(0.0_f64, f64::max);
        (sup2, worst1)
    };

    let (sup_small, linear_small) = sup_residuals(1_000, 1008);
    let (sup_large, linear_large) = sup_residuals(10_000, 1009);
    let med_small = stats::median(&sup_small);
    let med_large = stats::median(&sup_large);
    let ratio = med_small / med_large;
    c.assert(
        (2.2..=4.5).contains(&ratio),
        format!(
            "median sup|R| {med_small:.2e} (N=1e3) / {med_large:.2e} (N=1e4) \
             = {ratio:.2} in [2.2, 4.5]"
        ),
    );
    let worst_linear = linear_small.max(linear_large);
    c.assert(
        worst_linear <= 1e-9,
        format!("G=u residual {worst_linear:.2e} <= 1e-9 in every replica"),
    );
    c.finish(8, "martingale residual decay", started, 300.0)
}

/// Criterion 9: lattice pairings track the heat semigroup, tightening with the side
/// length.
pub fn criterion_torus_heat(p: &AcceptanceParams) -> CriterionReport {
    let started = Instant::now();
    let mut c = Check::new();
    let t = 0.05;
    let profile = FourierProfile::sin_1d(1);
    let g = FourierProfile::sin_1d(1);
    let reference = sim_torus::heat_pairing(&profile, &g, t);

    let batch_mean = |side: usize, seed: u64, reps: u64| -> Vec<f64> {
        let initial = sim_torus::init_from_profile(&profile, side).unwrap();
        (0..reps)
            .into_par_iter()
            .map(|r| {
                let mut rng = RngStream::new(seed, r);
                let snaps = sim_torus::run_torus(&initial, t, &[t], &mut rng).unwrap();
                sim_torus::lattice_pairing(&snaps[0], &g).unwrap()
            })
            .collect()
    };

    let main = batch_mean(256, 1010, p.torus_main_reps as u64);
    let mean = stats::mean(&main);
    let se = stats::standard_error(&main);
    c.assert(
        (mean - reference).abs() <= 3.0 * se,
        format!(
            "pairing at N=256: {mean:.6} within 3 se ({se:.6}) of heat value {reference:.6}"
        ),
    );

    let sides = [64usize, 128, 256];
    let med_err: Vec<f64> = sides
        .iter()
        .enumerate()
        .map(|(i, &side)| {
            let errs: Vec<f64> = (0..5u64)
                .map(|b| {
                    let vals =
                        batch_mean(side, 2000 + 10 * i as u64 + b, p.torus_batch_reps as u64);
                    (stats::mean(&vals) - reference).abs()
                })
                .collect();
            stats::median(&errs)
        })
        .collect();
    c.assert(
        med_err[0] > med_err[1] && med_err[1] > med_err[2],
        format!(
            "median pairing error decreases with N: {:.2e} > {:.2e} > {:.2e}",
            med_err[0], med_err[1], med_err[2]
        ),
    );
    c.finish(9, "torus heat reference", started, 600.0)
}

/// Criterion 10: re-running every exporter with the same seeds yields identical bytes.
pub fn criterion_determinism(_p: &AcceptanceParams) -> CriterionReport {
    let started = Instant::now();
    let mut c = Check::new();

    let render_complete = || -> Result<Vec<u8>> {
        let dist = InitialDistribution::Bernoulli(0.5);
        let mut buf = Vec::new();
        let mut runs = Vec::new();
        for r in 0..2u64 {
            let mut rng = RngStream::new(1011, r);
            runs.push(sim_complete::run(&dist, 500, 1.0, &[0.5, 1.0], &mut rng)?);
        }
        let refs: Vec<(u64, &sim_complete::CompleteGraphRun)> =
            runs.iter().enumerate().map(|(i, r)| (i as u64, r)).collect();
        export::write_complete_snapshots(&mut buf, &refs)?;
        for (i, run) in runs.iter().enumerate() {
            let xj = xj_counts(run, 1.0)?;
            export::write_xj_counts(&mut buf, &[(i as u64, 1.0, &xj.counts)])?;
        }
        Ok(buf)
    };

    let render_torus = || -> Result<Vec<u8>> {
        let profile = FourierProfile::sin_1d(1);
        let initial = sim_torus::init_from_profile(&profile, 32)?;
        let mut buf = Vec::new();
        let mut all = Vec::new();
        for r in 0..2u64 {
            let mut rng = RngStream::new(1012, r);
            all.push(sim_torus::run_torus(&initial, 0.02, &[0.01, 0.02], &mut rng)?);
        }
        let refs: Vec<(u64, &[sim_torus::TorusConfig])> = all
            .iter()
            .enumerate()
            .map(|(i, s)| (i as u64, s.as_slice()))
            .collect();
        export::write_torus_snapshots(&mut buf, &refs)?;
        Ok(buf)
    };

    let render_pde = || -> Result<Vec<u8>> {
        let grid = DensityGrid::from_distribution(&InitialDistribution::Linear2x, 2.0, 256)?;
        let traj = pde::integrate(&grid, 1e-3, 0.2, &[0.1, 0.2])?;
        let mut buf = Vec::new();
        export::write_density_snapshots(&mut buf, &traj.snapshots)?;
        export::write_density_moments(&mut buf, &traj.snapshots)?;
        Ok(buf)
    };

    let render_atoms = || -> Result<Vec<u8>> {
        let mu = AtomicMeasure::bernoulli(0.5, 6)?;
        let snaps = atoms::integrate_atoms(&mu, 1e-3, 0.5, &[0.25, 0.5])?;
        let mut buf = Vec::new();
        export::write_atom_snapshots(&mut buf, &snaps)?;
        Ok(buf)
    };

    type Render = Box<dyn Fn() -> Result<Vec<u8>>>;
    let pairs: [(&str, Render); 4] = [
        ("complete-graph", Box::new(render_complete)),
        ("torus", Box::new(render_torus)),
        ("density", Box::new(render_pde)),
        ("atomic", Box::new(render_atoms)),
    ];
    for (name, render) in &pairs {
        match (render(), render()) {
            (Ok(a), Ok(b)) => c.assert(
                a == b,
                format!("{name} export byte-identical across reruns ({} bytes)", a.len()),
            ),
            (ea, eb) => c.assert(false, format!("{name} export failed: {ea:?} / {eb:?}")),
        }
    }
    c.finish(10, "export determinism", started, 60.0)
}

/// Runs the full battery in criterion order.
pub fn run_all(params: &AcceptanceParams) -> Vec<CriterionReport> {
    vec![
        criterion_conservation(params),
        criterion_xj_statistics(params),
        criterion_perturbation(params),
        criterion_cauchy_oracle(params),
        criterion_pde_moments(params),
        criterion_hydrodynamic_w1(params),
        criterion_atomic_limit(params),
        criterion_martingale(params),
        criterion_torus_heat(params),
        criterion_determinism(params),
    ]
}
