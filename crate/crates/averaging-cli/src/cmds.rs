//! Implementations of the run-producing subcommands.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use averaging::acceptance::{self, AcceptanceParams};
use averaging::atoms::{self, AtomicMeasure};
use averaging::export;
use averaging::pde::{self, DensityGrid};
use averaging::sim_complete::{self, xj_counts};
use averaging::sim_torus;
use averaging::stats;
use averaging::{Error, InitialDistribution, Result, RngStream};
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::json;

use crate::manifest::{self, parse_times};
use crate::{profile, SimulateArgs, SolveAtomsArgs, SolvePdeArgs, TorusArgs, VerifyArgs};

/// Flat TOML config shared by all subcommands; flags override any value
/// set here.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    n: Option<usize>,
    t: Option<f64>,
    dist: Option<String>,
    seed: Option<u64>,
    replicas: Option<u64>,
    snapshots: Option<String>,
    d: Option<usize>,
    profile: Option<String>,
    test_fn: Option<String>,
    l: Option<f64>,
    dt: Option<f64>,
    j: Option<u32>,
}

fn load_config(path: Option<&Path>) -> Result<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            toml::from_str(&text)
                .map_err(|e| Error::InvalidConfig(format!("{}: {e}", p.display())))
        }
    }
}

fn require<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| Error::InvalidConfig(format!("missing required parameter `{flag}`")))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

pub fn simulate(args: SimulateArgs) -> Result<ExitCode> {
    let started = Instant::now();
    let file = load_config(args.output.config.as_deref())?;
    let n = require(args.n.or(file.n), "--n")?;
    let horizon = require(args.t.or(file.t), "--t")?;
    let dist_spec = require(args.dist.or(file.dist), "--dist")?;
    let dist = InitialDistribution::parse(&dist_spec)?;
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let replicas = args.replicas.or(file.replicas).unwrap_or(1).max(1);
    let times = parse_times(
        args.snapshots.as_deref().or(file.snapshots.as_deref()),
        horizon,
    )?;
    if n == 0 || horizon < 0.0 {
        return Err(Error::InvalidConfig(
            "need n >= 1 and a nonnegative horizon".into(),
        ));
    }
    if dist.support_bound().is_infinite() {
        return Err(Error::InvalidConfig(
            "simulator runs need compactly supported initial data".into(),
        ));
    }

    let dir = manifest::run_dir(&args.output, "simulate")?;
    let runs: Vec<sim_complete::CompleteGraphRun> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::new(seed, r);
            sim_complete::run(&dist, n, horizon, &times, &mut rng)
        })
        .collect::<Result<_>>()?;

    let mut snap_out = create(&dir.join("snapshots.csv"))?;
    let refs: Vec<(u64, &sim_complete::CompleteGraphRun)> =
        runs.iter().enumerate().map(|(i, r)| (i as u64, r)).collect();
    export::write_complete_snapshots(&mut snap_out, &refs)?;
    snap_out.flush()?;

    let mut xj_out = create(&dir.join("xj.csv"))?;
    let mut rows: Vec<(u64, f64, Vec<u64>)> = Vec::new();
    for (i, run) in runs.iter().enumerate() {
        for &t in &times {
            let xj = xj_counts(run, t)?;
            rows.push((i as u64, t, xj.counts));
        }
    }
    let row_refs: Vec<(u64, f64, &[u64])> = rows
        .iter()
        .map(|(r, t, c)| (*r, *t, c.as_slice()))
        .collect();
    export::write_xj_counts(&mut xj_out, &row_refs)?;
    xj_out.flush()?;

    manifest::write(
        &dir,
        "simulate",
        Some(seed),
        json!({
            "n": n, "t": horizon, "dist": dist_spec,
            "replicas": replicas, "snapshots": times,
        }),
        &["snapshots.csv", "xj.csv"],
        started.elapsed().as_millis(),
    )?;
    println!("wrote {}", dir.display());
    Ok(ExitCode::SUCCESS)
}

pub fn simulate_torus(args: TorusArgs) -> Result<ExitCode> {
    let started = Instant::now();
    let file = load_config(args.output.config.as_deref())?;
    let dim = require(args.d.or(file.d), "--d")?;
    let side = require(args.n.or(file.n), "--n")?;
    let horizon = require(args.t.or(file.t), "--t")?;
    let profile_spec = require(args.profile.or(file.profile), "--profile")?;
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let replicas = args.replicas.or(file.replicas).unwrap_or(1).max(1);
    let times = parse_times(
        args.snapshots.as_deref().or(file.snapshots.as_deref()),
        horizon,
    )?;
    let test_spec = args
        .test_fn
        .or(file.test_fn)
        .unwrap_or_else(|| profile_spec.clone());

    let rho0 = profile::parse(&profile_spec, dim)?;
    let g = profile::parse(&test_spec, dim)?;
    let initial = sim_torus::init_from_profile(&rho0, side)?;

    let dir = manifest::run_dir(&args.output, "simulate-torus")?;
    let all: Vec<Vec<sim_torus::TorusConfig>> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::new(seed, r);
            sim_torus::run_torus(&initial, horizon, &times, &mut rng)
        })
        .collect::<Result<_>>()?;

    let mut outputs = vec!["pairing.csv"];
    if args.sites {
        let mut site_out = create(&dir.join("torus.csv"))?;
        let refs: Vec<(u64, &[sim_torus::TorusConfig])> = all
            .iter()
            .enumerate()
            .map(|(i, s)| (i as u64, s.as_slice()))
            .collect();
        export::write_torus_snapshots(&mut site_out, &refs)?;
        site_out.flush()?;
        outputs.push("torus.csv");
    }

    let mut pairing_rows = Vec::new();
    for (k, &t) in times.iter().enumerate() {
        let vals: Vec<f64> = all
            .iter()
            .map(|snaps| sim_torus::lattice_pairing(&snaps[k], &g))
            .collect::<Result<_>>()?;
        let reference = sim_torus::heat_pairing(&rho0, &g, t);
        pairing_rows.push(export::PairingRow {
            t,
            g_name: test_spec.clone(),
            simulated: stats::mean(&vals),
            reference,
            stderr: if vals.len() > 1 {
                stats::standard_error(&vals)
            } else {
                0.0
            },
        });
    }
    let mut pair_out = create(&dir.join("pairing.csv"))?;
    export::write_pairings(&mut pair_out, &pairing_rows)?;
    pair_out.flush()?;

    manifest::write(
        &dir,
        "simulate-torus",
        Some(seed),
        json!({
            "d": dim, "n": side, "t": horizon, "profile": profile_spec,
            "test_fn": test_spec, "replicas": replicas, "snapshots": times,
            "sites": args.sites,
        }),
        &outputs,
        started.elapsed().as_millis(),
    )?;
    println!("wrote {}", dir.display());
    Ok(ExitCode::SUCCESS)
}

pub fn solve_pde(args: SolvePdeArgs) -> Result<ExitCode> {
    let started = Instant::now();
    let file = load_config(args.output.config.as_deref())?;
    let dist_spec = require(args.dist.or(file.dist), "--dist")?;
    let dist = InitialDistribution::parse(&dist_spec)?;
    let l = require(args.l.or(file.l), "--l")?;
    let cells = require(args.n.or(file.n), "--n")?;
    let dt = args.dt.or(file.dt).unwrap_or(1e-3);
    let horizon = require(args.t.or(file.t), "--t")?;
    let times = parse_times(
        args.snapshots.as_deref().or(file.snapshots.as_deref()),
        horizon,
    )?;

    let grid = DensityGrid::from_distribution(&dist, l, cells)?;
    let tail_mass = 1.0 - grid.moments()?.mass;
    let dir = manifest::run_dir(&args.output, "solve-pde")?;

    let traj = pde::integrate(&grid, dt, horizon, &times)?;

    let mut dens_out = create(&dir.join("density.csv"))?;
    export::write_density_snapshots(&mut dens_out, &traj.snapshots)?;
    dens_out.flush()?;
    let mut mom_out = create(&dir.join("moments.csv"))?;
    export::write_density_moments(&mut mom_out, &traj.snapshots)?;
    mom_out.flush()?;

    let grid_header = json!({
        "half_width": l,
        "n_cells": cells,
        "spacing": grid.spacing(),
        "dt": dt,
        "initial_tail_mass": tail_mass,
        "max_weak_residual": traj.max_weak_residual,
        "steps": traj.steps,
    });
    std::fs::write(
        dir.join("grid.json"),
        serde_json::to_string_pretty(&grid_header)
            .map_err(|e| Error::InvalidConfig(e.to_string()))?,
    )?;

    manifest::write(
        &dir,
        "solve-pde",
        None,
        json!({
            "dist": dist_spec, "l": l, "n": cells, "dt": dt,
            "t": horizon, "snapshots": times,
        }),
        &["density.csv", "moments.csv", "grid.json"],
        started.elapsed().as_millis(),
    )?;
    println!("wrote {}", dir.display());
    Ok(ExitCode::SUCCESS)
}

pub fn solve_atoms(args: SolveAtomsArgs) -> Result<ExitCode> {
    let started = Instant::now();
    let file = load_config(args.output.config.as_deref())?;
    let dist_spec = require(args.dist.or(file.dist), "--dist")?;
    let level = require(args.j.or(file.j), "--j")?;
    let dt = args.dt.or(file.dt).unwrap_or(1e-3);
    let horizon = require(args.t.or(file.t), "--t")?;
    let times = parse_times(
        args.snapshots.as_deref().or(file.snapshots.as_deref()),
        horizon,
    )?;

    let mu0 = match InitialDistribution::parse(&dist_spec)? {
        InitialDistribution::Bernoulli(p) => AtomicMeasure::bernoulli(p, level)?,
        InitialDistribution::PointMass(c) => {
            AtomicMeasure::from_weighted_points(&[(c, 1.0)], level)?
        }
        other => {
            return Err(Error::InvalidConfig(format!(
                "atomic solver needs atomic initial data (ber or point), got {other:?}"
            )))
        }
    };

    let dir = manifest::run_dir(&args.output, "solve-atoms")?;
    let snaps = atoms::integrate_atoms(&mu0, dt, horizon, &times)?;
    let mut out = create(&dir.join("atoms.csv"))?;
    export::write_atom_snapshots(&mut out, &snaps)?;
    out.flush()?;

    manifest::write(
        &dir,
        "solve-atoms",
        None,
        json!({
            "dist": dist_spec, "j": level, "dt": dt, "t": horizon,
            "snapshots": times,
        }),
        &["atoms.csv"],
        started.elapsed().as_millis(),
    )?;
    println!("wrote {}", dir.display());
    Ok(ExitCode::SUCCESS)
}

pub fn verify(args: VerifyArgs) -> Result<ExitCode> {
    let params = if args.quick {
        AcceptanceParams::quick()
    } else {
        AcceptanceParams::full()
    };
    println!(
        "running acceptance battery ({})",
        if args.quick { "quick" } else { "full" }
    );
    let reports = acceptance::run_all(&params);
    let mut all_pass = true;
    for r in &reports {
        println!("{}", r.summary_line());
        for line in &r.details {
            println!("    {line}");
        }
        all_pass &= r.passed;
    }
    if all_pass {
        println!("all criteria passed");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("acceptance failures present");
        Ok(ExitCode::from(3))
    }
}
