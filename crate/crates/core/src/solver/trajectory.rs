//! Recorded observables along a run and their CSV form.

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{DnlsError, Result};
use crate::field::Field;
use crate::functionals::{blowup_functional, total_density};

pub const CSV_HEADER: [&str; 6] = ["t", "M", "total_density_abs", "l2", "lp1", "sup"];

/// Observables of one sample. `l1` and `tail_fraction` exist only for
/// in-memory trajectories; they are not part of the CSV export.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub m: f64,
    pub total_density_abs: f64,
    pub l2: f64,
    pub lp1: f64,
    pub sup: f64,
    pub l1: Option<f64>,
    pub tail_fraction: Option<f64>,
}

impl Sample {
    pub fn observe(u: &Field, t: f64, alpha: Complex64, p: f64) -> Result<Self> {
        Ok(Self {
            t,
            m: blowup_functional(u, alpha)?,
            total_density_abs: total_density(u).norm(),
            l2: u.norm(2.0)?,
            lp1: u.norm(p + 1.0)?,
            sup: u.sup_norm(),
            l1: Some(u.norm(1.0)?),
            tail_fraction: Some(u.tail_energy_fraction()),
        })
    }
}

/// Time-ordered samples of a run. `states` is either empty (trajectory read
/// back from CSV) or holds one field per sample.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub sample_interval: f64,
    pub samples: Vec<Sample>,
    pub states: Vec<Field>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn has_states(&self) -> bool {
        !self.states.is_empty() && self.states.len() == self.samples.len()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(CSV_HEADER)?;
        for s in &self.samples {
            out.write_record(
                [s.t, s.m, s.total_density_abs, s.l2, s.lp1, s.sup]
                    .iter()
                    .map(|v| format!("{v:.16e}")),
            )?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| DnlsError::MalformedTrajectory(e.to_string()))
    }

    /// Reads a trajectory CSV. The sample interval is taken from the first
    /// two rows.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        let mut columns = [0usize; 6];
        for (slot, name) in columns.iter_mut().zip(CSV_HEADER) {
            *slot = headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| DnlsError::MalformedTrajectory(format!("missing column `{name}`")))?;
        }
        let mut samples = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            let mut values = [0.0f64; 6];
            for (v, &col) in values.iter_mut().zip(&columns) {
                let raw = record.get(col).ok_or_else(|| {
                    DnlsError::MalformedTrajectory(format!("row {} is too short", row + 2))
                })?;
                *v = raw.trim().parse().map_err(|_| {
                    DnlsError::MalformedTrajectory(format!("row {}: cannot parse `{raw}`", row + 2))
                })?;
            }
            samples.push(Sample {
                t: values[0],
                m: values[1],
                total_density_abs: values[2],
                l2: values[3],
                lp1: values[4],
                sup: values[5],
                l1: None,
                tail_fraction: None,
            });
        }
        if samples.is_empty() {
            return Err(DnlsError::MalformedTrajectory("no samples".to_string()));
        }
        if samples.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(DnlsError::MalformedTrajectory(
                "times are not strictly increasing".to_string(),
            ));
        }
        let sample_interval = if samples.len() > 1 {
            samples[1].t - samples[0].t
        } else {
            0.0
        };
        Ok(Self {
            sample_interval,
            samples,
            states: Vec::new(),
        })
    }
}
