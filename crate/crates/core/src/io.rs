//! File formats for sweeps, gap curves, tensors and conjugate analyses.
//!
//! CSV files start with a `#` line holding JSON metadata, followed by a header row.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::conjugate::GAnalysis;
use crate::error::{Error, Result};
use crate::geometry::GeometrySpec;
use crate::permeability::{
    PermeabilitySample, SampleDiagnostics, SampleStatus, Sampling, SweepResult, SymmetryCheck,
};
use crate::taylor::GapRecord;
use crate::viscosity::ViscosityLaw;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SweepMeta {
    sampling: Sampling,
    law: ViscosityLaw,
    mesh_hash: String,
    geometry: Option<GeometrySpec>,
    symmetry_check: Option<SymmetryCheck>,
    status: Vec<SampleStatus>,
    epsilon: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SweepRow {
    xi_x: f64,
    xi_y: f64,
    #[serde(rename = "U_x")]
    u_x: f64,
    #[serde(rename = "U_y")]
    u_y: f64,
    newton_iters: usize,
    div_norm: f64,
    residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct GapMeta {
    mesh_hash: String,
    law: ViscosityLaw,
}

#[derive(Debug, Serialize, Deserialize)]
struct GapRow {
    xi_x: f64,
    xi_y: f64,
    delta1: Option<f64>,
    delta3: Option<f64>,
    delta5: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PlotRow {
    angle: f64,
    xi_x: f64,
    xi_y: f64,
    #[serde(rename = "G")]
    g: f64,
    fit: f64,
    gap: f64,
}

fn write_with_meta<M: Serialize, R: Serialize>(out: impl Write, meta: &M, rows: impl IntoIterator<Item = R>) -> Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "# {}", serde_json::to_string(meta)?)?;
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn read_with_meta<M: DeserializeOwned, R: DeserializeOwned>(input: impl std::io::Read) -> Result<(M, Vec<R>)> {
    let mut reader = BufReader::new(input);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let meta_json = first
        .trim_end()
        .strip_prefix("# ")
        .ok_or_else(|| Error::ProvenanceMismatch("CSV file lacks its metadata line".into()))?;
    let meta: M = serde_json::from_str(meta_json)?;
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(reader);
    let rows = rd.deserialize().collect::<std::result::Result<Vec<R>, _>>()?;
    Ok((meta, rows))
}

pub fn write_sweep_csv(out: impl Write, sweep: &SweepResult) -> Result<()> {
    let meta = SweepMeta {
        sampling: sweep.sampling,
        law: sweep.law,
        mesh_hash: sweep.mesh_hash.clone(),
        geometry: sweep.geometry,
        symmetry_check: sweep.symmetry_check.clone(),
        status: sweep.samples.iter().map(|s| s.status.clone()).collect(),
        epsilon: sweep.samples.iter().map(|s| s.diagnostics.epsilon).collect(),
    };
    let rows = sweep.samples.iter().map(|s| SweepRow {
        xi_x: s.xi[0],
        xi_y: s.xi[1],
        u_x: s.u[0],
        u_y: s.u[1],
        newton_iters: s.diagnostics.newton_iterations,
        div_norm: s.diagnostics.div_norm,
        residual: s.diagnostics.residual,
    });
    write_with_meta(out, &meta, rows)
}

pub fn read_sweep_csv(input: impl std::io::Read) -> Result<SweepResult> {
    let (meta, rows): (SweepMeta, Vec<SweepRow>) = read_with_meta(input)?;
    if meta.status.len() != rows.len() || meta.epsilon.len() != rows.len() {
        return Err(Error::ProvenanceMismatch(format!(
            "sweep metadata lists {} samples, file has {} rows",
            meta.status.len(),
            rows.len()
        )));
    }
    let samples = rows
        .into_iter()
        .zip(meta.status)
        .zip(meta.epsilon)
        .map(|((r, status), epsilon)| PermeabilitySample {
            xi: [r.xi_x, r.xi_y],
            u: [r.u_x, r.u_y],
            law: meta.law,
            diagnostics: SampleDiagnostics {
                newton_iterations: r.newton_iters,
                div_norm: r.div_norm,
                residual: r.residual,
                epsilon,
            },
            status,
        })
        .collect();
    Ok(SweepResult {
        samples,
        sampling: meta.sampling,
        law: meta.law,
        mesh_hash: meta.mesh_hash,
        geometry: meta.geometry,
        symmetry_check: meta.symmetry_check,
    })
}

pub fn write_gaps_csv(out: impl Write, records: &[GapRecord], mesh_hash: &str, law: &ViscosityLaw) -> Result<()> {
    let meta = GapMeta { mesh_hash: mesh_hash.to_string(), law: *law };
    let rows = records.iter().map(|g| GapRow { xi_x: g.xi[0], xi_y: g.xi[1], delta1: g.delta1, delta3: g.delta3, delta5: g.delta5 });
    write_with_meta(out, &meta, rows)
}

/// Gap records together with the mesh hash and law they were computed for.
pub fn read_gaps_csv(input: impl std::io::Read) -> Result<(Vec<GapRecord>, String, ViscosityLaw)> {
    let (meta, rows): (GapMeta, Vec<GapRow>) = read_with_meta(input)?;
    let recs = rows
        .into_iter()
        .map(|r| GapRecord {
            xi: [r.xi_x, r.xi_y],
            skipped: r.delta1.is_none() && r.delta3.is_none() && r.delta5.is_none(),
            delta1: r.delta1,
            delta3: r.delta3,
            delta5: r.delta5,
        })
        .collect();
    Ok((recs, meta.mesh_hash, meta.law))
}

/// Plot data mirroring the samples of an analysis.
pub fn write_analysis_csv(out: impl Write, analysis: &GAnalysis) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(out));
    for r in &analysis.samples {
        w.serialize(PlotRow { angle: r.angle, xi_x: r.xi[0], xi_y: r.xi[1], g: r.g, fit: r.fit, gap: r.gap })?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

pub fn write_sweep_file(path: &Path, sweep: &SweepResult) -> Result<()> {
    write_sweep_csv(File::create(path)?, sweep)
}

pub fn read_sweep_file(path: &Path) -> Result<SweepResult> {
    read_sweep_csv(File::open(path)?)
}
