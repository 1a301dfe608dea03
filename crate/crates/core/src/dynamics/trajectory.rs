use std::io::Write;

use serde::{Deserialize, Serialize};

use super::params::FlowParams;
use super::schedule::ScheduleRef;
use crate::error::{Error, Result};
use crate::torus::Configuration;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FlowKind {
    Deterministic,
    /// Only vortex `i` (0-based) moves.
    Single { i: usize },
    Jumping { m: usize },
    Interpolated { m: usize },
}

/// Time-stamped configurations produced by one flow.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    samples: Vec<Configuration>,
    kind: FlowKind,
    schedule: Option<ScheduleRef>,
}

/// Trajectory metadata written next to the CSV payload.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub flow: FlowKind,
    pub n: usize,
    pub intensities: Vec<f64>,
    pub samples: usize,
    pub schedule: Option<ScheduleRef>,
    pub params: FlowParams,
    pub kernel_table_hash: Option<String>,
}

impl Trajectory {
    pub fn new(
        times: Vec<f64>,
        samples: Vec<Configuration>,
        kind: FlowKind,
        schedule: Option<ScheduleRef>,
    ) -> Result<Self> {
        if times.len() != samples.len() || times.is_empty() {
            return Err(Error::invalid("trajectory needs matching, nonempty times and samples"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("trajectory timestamps must be strictly increasing"));
        }
        for s in &samples[1..] {
            samples[0].check_compatible(s)?;
        }
        Ok(Trajectory {
            times,
            samples,
            kind,
            schedule,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn samples(&self) -> &[Configuration] {
        &self.samples
    }

    pub fn kind(&self) -> FlowKind {
        self.kind
    }

    pub fn schedule(&self) -> Option<&ScheduleRef> {
        self.schedule.as_ref()
    }

    pub fn n(&self) -> usize {
        self.samples[0].len()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &Configuration {
        self.samples.last().expect("nonempty")
    }

    /// CSV with header `t,vortex,u,v`; values use shortest round-trip formatting.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,vortex,u,v")?;
        for (t, x) in self.times.iter().zip(&self.samples) {
            for (k, p) in x.positions().iter().enumerate() {
                writeln!(w, "{t:?},{k},{:?},{:?}", p.u(), p.v())?;
            }
        }
        Ok(())
    }

    pub fn metadata(&self, params: &FlowParams, kernel_table_hash: Option<String>) -> TrajectoryMeta {
        TrajectoryMeta {
            flow: self.kind,
            n: self.n(),
            intensities: self.samples[0].intensities().to_vec(),
            samples: self.len(),
            schedule: self.schedule.clone(),
            params: *params,
            kernel_table_hash,
        }
    }
}

/// `n` equispaced times on [0, 1] (inclusive).
pub fn time_grid(n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n).map(|k| k as f64 / (n - 1) as f64).collect()
}
