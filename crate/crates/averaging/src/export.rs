//! CSV and JSON writers with stable schemas and deterministic row order.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a rerun
//! with the same seeds produces byte-identical files. Schemas (fixed column
//! order):
//!
//! - complete-graph snapshots: `replica_id,t,vertex,opinion,xi`
//! - interaction-count histogram: `replica_id,t,j,count`
//! - torus snapshots: `replica_id,t,x0[,x1,...],opinion`
//! - torus pairings: `t,G_name,simulated,reference,stderr`
//! - density snapshots: `t,u,rho`
//! - density moments: `t,mass,mean,variance`
//! - atomic snapshots: `t,k,level,value,mass,snapped_mass_total`
//! - comparison report: `experiment_id,t,metric_name,value,tolerance,pass_flag`

use std::io::Write;

use crate::atoms::AtomicMeasure;
use crate::error::Result;
use crate::pde::DensityGrid;
use crate::sim_complete::CompleteGraphRun;
use crate::sim_torus::TorusConfig;

pub fn write_complete_snapshots<W: Write>(
    out: &mut W,
    runs: &[(u64, &CompleteGraphRun)],
) -> Result<()> {
    writeln!(out, "replica_id,t,vertex,opinion,xi")?;
    for (replica, run) in runs {
        for snap in &run.snapshots {
            for (v, (&op, &xi)) in snap.opinions.iter().zip(&snap.xi).enumerate() {
                writeln!(out, "{replica},{},{v},{op},{xi}", snap.t)?;
            }
        }
    }
    Ok(())
}

pub fn write_xj_counts<W: Write>(
    out: &mut W,
    rows: &[(u64, f64, &[u64])],
) -> Result<()> {
    writeln!(out, "replica_id,t,j,count")?;
    for (replica, t, counts) in rows {
        for (j, &count) in counts.iter().enumerate() {
            writeln!(out, "{replica},{t},{j},{count}")?;
        }
    }
    Ok(())
}

pub fn write_torus_snapshots<W: Write>(
    out: &mut W,
    runs: &[(u64, &[TorusConfig])],
) -> Result<()> {
    let dim = runs
        .first()
        .and_then(|(_, snaps)| snaps.first())
        .map(|c| c.dim())
        .unwrap_or(1);
    let coord_cols: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
    writeln!(out, "replica_id,t,{},opinion", coord_cols.join(","))?;
    for (replica, snaps) in runs {
        for snap in *snaps {
            for (flat, &op) in snap.opinions.iter().enumerate() {
                let coords = snap.coords(flat);
                let coord_str = coords
                    .iter()
                    .map(|c| c.to_string())
                    .collect::<Vec<_>>()
                    .join(",");
                writeln!(out, "{replica},{},{coord_str},{op}", snap.time)?;
            }
        }
    }
    Ok(())
}

pub struct PairingRow {
    pub t: f64,
    pub g_name: String,
    pub simulated: f64,
    pub reference: f64,
    pub stderr: f64,
}

pub fn write_pairings<W: Write>(out: &mut W, rows: &[PairingRow]) -> Result<()> {
    writeln!(out, "t,G_name,simulated,reference,stderr")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.t, r.g_name, r.simulated, r.reference, r.stderr
        )?;
    }
    Ok(())
}

pub fn write_density_snapshots<W: Write>(out: &mut W, grids: &[DensityGrid]) -> Result<()> {
    writeln!(out, "t,u,rho")?;
    for grid in grids {
        for (i, &v) in grid.values().iter().enumerate() {
            writeln!(out, "{},{},{v}", grid.time(), grid.node(i))?;
        }
    }
    Ok(())
}

pub fn write_density_moments<W: Write>(out: &mut W, grids: &[DensityGrid]) -> Result<()> {
    writeln!(out, "t,mass,mean,variance")?;
    for grid in grids {
        let m = grid.moments()?;
        writeln!(out, "{},{},{},{}", grid.time(), m.mass, m.mean, m.variance)?;
    }
    Ok(())
}

pub fn write_atom_snapshots<W: Write>(out: &mut W, snaps: &[AtomicMeasure]) -> Result<()> {
    writeln!(out, "t,k,level,value,mass,snapped_mass_total")?;
    for mu in snaps {
        for (k, &m) in mu.masses().iter().enumerate() {
            writeln!(
                out,
                "{},{k},{},{},{m},{}",
                mu.time(),
                mu.level(),
                mu.atom_value(k),
                mu.snapped_mass_total()
            )?;
        }
    }
    Ok(())
}

pub struct ReportRow {
    pub experiment_id: String,
    pub t: f64,
    pub metric_name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn write_report<W: Write>(out: &mut W, rows: &[ReportRow]) -> Result<()> {
    writeln!(out, "experiment_id,t,metric_name,value,tolerance,pass_flag")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.experiment_id,
            r.t,
            r.metric_name,
            r.value,
            r.tolerance,
            if r.pass { 1 } else { 0 }
        )?;
    }
    Ok(())
}
