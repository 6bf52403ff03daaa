//! CSV and JSON serialization of experiment output.
//!
//! Floats are written in shortest round-trip form, so identical runs give
//! byte-identical files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::experiments::{OptimalTau, OutputSummary, SweepRecord};

pub const SWEEP_COLUMNS: [&str; 10] =
    ["tau", "overlap", "eta", "purity", "delta_phi", "n_a", "n_b", "n_c", "lambda_re", "lambda_im"];

pub const SCALING_COLUMNS: [&str; 7] = ["n_in", "n_out", "tau_opt", "overlap", "eta", "delta_phi", "purity"];

/// Flat form of a [`SweepRecord`] as it appears in files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecordRow {
    pub tau: f64,
    pub overlap: f64,
    pub eta: f64,
    pub purity: Option<f64>,
    pub delta_phi: Option<f64>,
    pub n_a: f64,
    pub n_b: f64,
    pub n_c: f64,
    pub lambda_re: f64,
    pub lambda_im: f64,
}

impl From<&SweepRecord> for RecordRow {
    fn from(r: &SweepRecord) -> Self {
        Self {
            tau: r.tau,
            overlap: r.overlap,
            eta: r.eta,
            purity: r.purity,
            delta_phi: r.delta_phi,
            n_a: r.n_a,
            n_b: r.n_b,
            n_c: r.n_c,
            lambda_re: r.reference.re,
            lambda_im: r.reference.im,
        }
    }
}

impl RecordRow {
    fn fields(&self) -> Vec<String> {
        vec![
            num(self.tau),
            num(self.overlap),
            num(self.eta),
            opt(self.purity),
            opt(self.delta_phi),
            num(self.n_a),
            num(self.n_b),
            num(self.n_c),
            num(self.lambda_re),
            num(self.lambda_im),
        ]
    }
}

/// One optimized point of the scaling study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingRow {
    pub n_in: f64,
    pub n_out: f64,
    pub tau_opt: f64,
    pub overlap: f64,
    pub eta: f64,
    pub delta_phi: f64,
    pub purity: f64,
}

impl From<&OptimalTau> for ScalingRow {
    fn from(p: &OptimalTau) -> Self {
        Self {
            n_in: p.n_in,
            n_out: p.n_out,
            tau_opt: p.tau_opt,
            overlap: p.overlap_max,
            eta: p.eta_at_opt,
            delta_phi: p.delta_phi,
            purity: p.purity,
        }
    }
}

impl ScalingRow {
    fn fields(&self) -> Vec<String> {
        [self.n_in, self.n_out, self.tau_opt, self.overlap, self.eta, self.delta_phi, self.purity]
            .into_iter()
            .map(num)
            .collect()
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn write_csv<W: Write>(out: W, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> std::io::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()
}

pub fn write_sweep_csv<W: Write>(out: W, records: &[SweepRecord], reference: &str) -> std::io::Result<()> {
    let mut header = SWEEP_COLUMNS.to_vec();
    let (re, im) = (format!("{reference}_re"), format!("{reference}_im"));
    header[8] = &re;
    header[9] = &im;
    write_csv(out, &header, records.iter().map(|r| RecordRow::from(r).fields()))
}

pub fn write_scaling_csv<W: Write>(out: W, points: &[OptimalTau]) -> std::io::Result<()> {
    write_csv(out, &SCALING_COLUMNS, points.iter().map(|p| ScalingRow::from(p).fields()))
}

pub const PIPELINE_COLUMNS: [&str; 8] =
    ["tau1", "tau2", "overlap", "purity", "delta_phi", "n_c", "lambda_re", "lambda_im"];

/// Single-row summary of a pipeline run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PipelineRow {
    pub tau1: f64,
    pub tau2: f64,
    pub overlap: f64,
    pub purity: f64,
    pub delta_phi: f64,
    pub n_c: f64,
    pub lambda_re: f64,
    pub lambda_im: f64,
}

impl PipelineRow {
    pub fn new(tau1: f64, tau2: f64, s: &OutputSummary) -> Self {
        Self {
            tau1,
            tau2,
            overlap: s.overlap,
            purity: s.purity,
            delta_phi: s.delta_phi,
            n_c: s.n_c,
            lambda_re: s.lambda.re,
            lambda_im: s.lambda.im,
        }
    }

    fn fields(&self) -> Vec<String> {
        [self.tau1, self.tau2, self.overlap, self.purity, self.delta_phi, self.n_c, self.lambda_re, self.lambda_im]
            .into_iter()
            .map(num)
            .collect()
    }
}

pub fn write_pipeline_csv<W: Write>(out: W, rows: &[PipelineRow]) -> std::io::Result<()> {
    write_csv(out, &PIPELINE_COLUMNS, rows.iter().map(PipelineRow::fields))
}

/// JSON document `{ "config": .., "records": .., "fits": .. }`.
#[derive(Debug, Serialize)]
pub struct RunDocument<'a, C: Serialize, R: Serialize, F: Serialize> {
    pub config: &'a C,
    pub records: &'a [R],
    pub fits: &'a F,
}

pub fn write_json<W: Write, T: Serialize>(mut out: W, doc: &T) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut out, doc)?;
    out.write_all(b"\n")?;
    out.flush()
}

pub fn create(path: &Path) -> std::io::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}
