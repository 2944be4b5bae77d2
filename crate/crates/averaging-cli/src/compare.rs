//! Cross-comparison of run outputs: simulation against solver (or solver
//! against solver), per matching snapshot time.

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use averaging::export::ReportRow;
use averaging::measure::{w1_between_cdfs, EmpiricalMeasure, PiecewiseCdf};
use averaging::pde::DensityGrid;
use averaging::{export, Error, Result};
use serde_json::json;

use crate::manifest;
use crate::CompareArgs;

/// Parsed content of one run directory.
enum RunData {
    /// Pooled opinions per snapshot time.
    Sim(Vec<(f64, Vec<f64>)>),
    /// Density nodes per snapshot time.
    Density(Vec<(f64, DensityGrid)>),
    /// (value, mass) atoms per snapshot time plus the solver's accumulated
    /// level-truncation (snapped) mass.
    Atoms(Vec<(f64, Vec<(f64, f64)>, f64)>),
}

impl RunData {
    fn times(&self) -> Vec<f64> {
        match self {
            RunData::Sim(v) => v.iter().map(|(t, _)| *t).collect(),
            RunData::Density(v) => v.iter().map(|(t, _)| *t).collect(),
            RunData::Atoms(v) => v.iter().map(|(t, _, _)| *t).collect(),
        }
    }

    fn label(&self) -> &'static str {
        match self {
            RunData::Sim(_) => "simulation",
            RunData::Density(_) => "density",
            RunData::Atoms(_) => "atoms",
        }
    }
}

fn parse_f64(tok: &str, path: &Path, what: &str) -> Result<f64> {
    tok.parse::<f64>().map_err(|_| {
        Error::InvalidConfig(format!("{}: bad {what} `{tok}`", path.display()))
    })
}

fn load_dir(dir: &Path) -> Result<RunData> {
    let snap = dir.join("snapshots.csv");
    let dens = dir.join("density.csv");
    let atoms = dir.join("atoms.csv");
    if snap.exists() {
        load_sim(&snap)
    } else if dens.exists() {
        load_density(&dens)
    } else if atoms.exists() {
        load_atoms(&atoms)
    } else {
        Err(Error::InvalidConfig(format!(
            "{}: no snapshots.csv, density.csv, or atoms.csv found",
            dir.display()
        )))
    }
}

fn load_sim(path: &Path) -> Result<RunData> {
    let text = std::fs::read_to_string(path)?;
    let mut blocks: Vec<(f64, Vec<f64>)> = Vec::new();
    for line in text.lines().skip(1) {
        let mut cols = line.split(',');
        let (_rep, t, _vertex, opinion) = (
            cols.next(),
            cols.next().ok_or_else(|| bad_row(path, line))?,
            cols.next(),
            cols.next().ok_or_else(|| bad_row(path, line))?,
        );
        let t = parse_f64(t, path, "time")?;
        let op = parse_f64(opinion, path, "opinion")?;
        match blocks.iter_mut().find(|(bt, _)| *bt == t) {
            Some((_, ops)) => ops.push(op),
            None => blocks.push((t, vec![op])),
        }
    }
    if blocks.is_empty() {
        return Err(Error::InvalidConfig(format!("{}: empty run", path.display())));
    }
    Ok(RunData::Sim(blocks))
}

fn load_density(path: &Path) -> Result<RunData> {
    let text = std::fs::read_to_string(path)?;
    let mut blocks: Vec<(f64, Vec<(f64, f64)>)> = Vec::new();
    for line in text.lines().skip(1) {
        let mut cols = line.split(',');
        let t = parse_f64(cols.next().ok_or_else(|| bad_row(path, line))?, path, "time")?;
        let u = parse_f64(cols.next().ok_or_else(|| bad_row(path, line))?, path, "node")?;
        let rho = parse_f64(cols.next().ok_or_else(|| bad_row(path, line))?, path, "rho")?;
        match blocks.iter_mut().find(|(bt, _)| *bt == t) {
            Some((_, rows)) => rows.push((u, rho)),
            None => blocks.push((t, vec![(u, rho)])),
        }
    }
    let mut grids = Vec::new();
    for (t, rows) in blocks {
        let n = rows.len().checked_sub(1).ok_or_else(|| bad_row(path, "empty block"))?;
        let half_width = rows.last().unwrap().0;
        if n < 2 || (rows[0].0 + half_width).abs() > 1e-9 * (1.0 + half_width) {
            return Err(Error::InvalidGrid(format!(
                "{}: nodes at t={t} are not symmetric about zero",
                path.display()
            )));
        }
        let values: Vec<f64> = rows.iter().map(|&(_, r)| r).collect();
        grids.push((t, DensityGrid::new(half_width, values, t)?));
    }
    Ok(RunData::Density(grids))
}

fn load_atoms(path: &Path) -> Result<RunData> {
    let text = std::fs::read_to_string(path)?;
    let mut blocks: Vec<(f64, Vec<(f64, f64)>, f64)> = Vec::new();
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 6 {
            return Err(bad_row(path, line));
        }
        let t = parse_f64(cols[0], path, "time")?;
        let value = parse_f64(cols[3], path, "value")?;
        let mass = parse_f64(cols[4], path, "mass")?;
        let snapped = parse_f64(cols[5], path, "snapped mass")?;
        match blocks.iter_mut().find(|(bt, _, _)| *bt == t) {
            Some((_, rows, s)) => {
                rows.push((value, mass));
                *s = snapped;
            }
            None => blocks.push((t, vec![(value, mass)], snapped)),
        }
    }
    if blocks.is_empty() {
        return Err(Error::InvalidConfig(format!("{}: empty run", path.display())));
    }
    Ok(RunData::Atoms(blocks))
}

fn bad_row(path: &Path, line: &str) -> Error {
    Error::InvalidConfig(format!("{}: malformed row `{line}`", path.display()))
}

struct Side {
    cdf: PiecewiseCdf,
    mean: f64,
    variance: f64,
    /// Present for simulation sides: (pooled sample count, exact-value
    /// lookup for atom-mass comparison).
    sim_values: Option<Vec<f64>>,
}

fn side_at(data: &RunData, t: f64) -> Result<Option<Side>> {
    match data {
        RunData::Sim(blocks) => {
            let Some((_, ops)) = blocks.iter().find(|(bt, _)| *bt == t) else {
                return Ok(None);
            };
            let mu = EmpiricalMeasure::from_values(ops);
            let n = ops.len() as f64;
            let mean = ops.iter().sum::<f64>() / n;
            let variance = ops.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / n;
            Ok(Some(Side {
                cdf: PiecewiseCdf::from_empirical(&mu)?,
                mean,
                variance,
                sim_values: Some(ops.clone()),
            }))
        }
        RunData::Density(grids) => {
            let Some((_, grid)) = grids.iter().find(|(bt, _)| *bt == t) else {
                return Ok(None);
            };
            let m = grid.moments()?;
            Ok(Some(Side {
                cdf: PiecewiseCdf::from_density_grid(grid)?,
                mean: m.mean,
                variance: m.variance,
                sim_values: None,
            }))
        }
        RunData::Atoms(blocks) => {
            let Some((_, rows, _)) = blocks.iter().find(|(bt, _, _)| *bt == t) else {
                return Ok(None);
            };
            let total: f64 = rows.iter().map(|&(_, m)| m).sum();
            if !(total > 0.0) {
                return Err(Error::InvalidMeasure("atomic side has no mass".into()));
            }
            let atoms: Vec<(f64, f64)> = rows
                .iter()
                .filter(|&&(_, m)| m > 0.0)
                .map(|&(v, m)| (v, m / total))
                .collect();
            let mean: f64 = atoms.iter().map(|&(v, m)| v * m).sum();
            let variance: f64 = atoms.iter().map(|&(v, m)| v * v * m).sum::<f64>() - mean * mean;
            let mu = EmpiricalMeasure::from_atoms(atoms, true)?;
            Ok(Some(Side {
                cdf: PiecewiseCdf::from_empirical(&mu)?,
                mean,
                variance,
                sim_values: None,
            }))
        }
    }
}

pub fn run(args: CompareArgs) -> Result<ExitCode> {
    let started = Instant::now();
    let sim_dir = args
        .sim
        .clone()
        .ok_or_else(|| Error::InvalidConfig("missing `--sim` run directory".into()))?;
    let ref_dir = args
        .reference
        .clone()
        .ok_or_else(|| Error::InvalidConfig("missing `--reference` run directory".into()))?;
    let w1_tol = args.w1_tol.unwrap_or(0.01);
    let moment_tol = args.moment_tol.unwrap_or(0.01);

    let left = load_dir(&sim_dir)?;
    let right = load_dir(&ref_dir)?;

    let common: Vec<f64> = left
        .times()
        .into_iter()
        .filter(|t| right.times().contains(t))
        .collect();
    if common.is_empty() {
        return Err(Error::Alignment(format!(
            "no shared snapshot times between {:?} ({}) and {:?} ({})",
            left.times(),
            left.label(),
            right.times(),
            right.label()
        )));
    }

    let experiment_id = args.output.id.clone().unwrap_or_else(|| "compare".into());
    let mut rows: Vec<ReportRow> = Vec::new();
    for &t in &common {
        let a = side_at(&left, t)?.expect("time filtered to common set");
        let b = side_at(&right, t)?.expect("time filtered to common set");

        let w1 = w1_between_cdfs(&a.cdf, &b.cdf);
        rows.push(ReportRow {
            experiment_id: experiment_id.clone(),
            t,
            metric_name: "w1".into(),
            value: w1,
            tolerance: w1_tol,
            pass: w1 <= w1_tol,
        });
        let dm = (a.mean - b.mean).abs();
        rows.push(ReportRow {
            experiment_id: experiment_id.clone(),
            t,
            metric_name: "mean_abs_diff".into(),
            value: dm,
            tolerance: moment_tol,
            pass: dm <= moment_tol,
        });
        let dv = (a.variance - b.variance).abs();
        rows.push(ReportRow {
            experiment_id: experiment_id.clone(),
            t,
            metric_name: "variance_abs_diff".into(),
            value: dv,
            tolerance: moment_tol,
            pass: dv <= moment_tol,
        });

        // Atomic reference against a simulation: per-atom mass agreement at
        // the heavy atoms. The budget is 3 binomial standard errors plus the
        // solver's accumulated snapped mass, which bounds the level-
        // truncation bias of each atom.
        if let (Some(values), RunData::Atoms(blocks)) = (&a.sim_values, &right) {
            let (_, atom_rows, snapped) =
                blocks.iter().find(|(bt, _, _)| *bt == t).unwrap();
            let n = values.len() as f64;
            let total: f64 = atom_rows.iter().map(|&(_, m)| m).sum();
            for &(value, mass) in atom_rows {
                let p = mass / total;
                if p < 0.01 {
                    continue;
                }
                let frac = values.iter().filter(|&&v| v == value).count() as f64 / n;
                let se = (p * (1.0 - p) / n).sqrt();
                let tol = 3.0 * se + snapped;
                let diff = (frac - p).abs();
                rows.push(ReportRow {
                    experiment_id: experiment_id.clone(),
                    t,
                    metric_name: format!("atom_mass_{value}"),
                    value: diff,
                    tolerance: tol,
                    pass: diff <= tol,
                });
            }
        }
    }

    let dir = manifest::run_dir(&args.output, "compare")?;
    let mut out = std::io::BufWriter::new(std::fs::File::create(dir.join("report.csv"))?);
    export::write_report(&mut out, &rows)?;
    use std::io::Write;
    out.flush()?;

    manifest::write(
        &dir,
        "compare",
        None,
        json!({
            "sim": sim_dir.display().to_string(),
            "reference": ref_dir.display().to_string(),
            "w1_tol": w1_tol,
            "moment_tol": moment_tol,
            "times": common,
        }),
        &["report.csv"],
        started.elapsed().as_millis(),
    )?;

    let failures = rows.iter().filter(|r| !r.pass).count();
    println!(
        "compared {} snapshot time(s), {} metric(s), {failures} failure(s); report in {}",
        common.len(),
        rows.len(),
        dir.display()
    );
    if failures == 0 {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(3))
    }
}
