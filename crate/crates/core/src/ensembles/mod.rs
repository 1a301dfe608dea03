//! Canonical and microcanonical samplers and flow-invariance tests.

mod invariance;
mod mcmc;
mod stats;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use invariance::{
    invariance_test, InvarianceReport, InvarianceRow, InvarianceSpec, ObservableKind,
    MIN_INVARIANCE_SAMPLES,
};
pub use mcmc::{
    beta_limit, metropolis_accept, sample_canonical, sample_microcanonical, CanonicalParams,
    ChainStep, DiskProposal, MetropolisChain, MicrocanonicalParams, Proposal,
};
pub use stats::{
    integrated_autocorrelation, ks_coefficient, ks_critical_one_sample, ks_critical_two_sample,
    ks_two_sample, ks_uniform,
};

use crate::error::{Error, Result};
use crate::torus::Configuration;

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleSample {
    configurations: Vec<Configuration>,
    accepted: usize,
    proposed: usize,
    /// Integrated autocorrelation time (in thinned samples) per observable.
    autocorrelation: Vec<(String, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleFooter {
    pub count: usize,
    pub accepted: usize,
    pub proposed: usize,
    pub acceptance_rate: f64,
    pub autocorrelation: Vec<(String, f64)>,
}

impl EnsembleSample {
    pub fn new(
        configurations: Vec<Configuration>,
        accepted: usize,
        proposed: usize,
        autocorrelation: Vec<(String, f64)>,
    ) -> Self {
        EnsembleSample {
            configurations,
            accepted,
            proposed,
            autocorrelation,
        }
    }

    /// Wrap externally produced configurations (no chain diagnostics).
    pub fn from_configurations(configurations: Vec<Configuration>) -> Result<Self> {
        let first = configurations
            .first()
            .ok_or_else(|| Error::invalid("empty sample"))?;
        for c in &configurations[1..] {
            first.check_compatible(c)?;
        }
        Ok(Self::new(configurations, 0, 0, Vec::new()))
    }

    pub fn configurations(&self) -> &[Configuration] {
        &self.configurations
    }

    pub fn len(&self) -> usize {
        self.configurations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configurations.is_empty()
    }

    pub fn accepted(&self) -> usize {
        self.accepted
    }

    pub fn proposed(&self) -> usize {
        self.proposed
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    pub fn autocorrelation(&self) -> &[(String, f64)] {
        &self.autocorrelation
    }

    pub fn footer(&self) -> SampleFooter {
        SampleFooter {
            count: self.len(),
            accepted: self.accepted,
            proposed: self.proposed,
            acceptance_rate: self.acceptance_rate(),
            autocorrelation: self.autocorrelation.clone(),
        }
    }

    /// One configuration per line, then a `{"diagnostics": …}` footer line.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for c in &self.configurations {
            writeln!(w, "{}", c.to_json()?)?;
        }
        writeln!(
            w,
            "{}",
            serde_json::json!({ "diagnostics": self.footer() })
        )?;
        Ok(())
    }
}
