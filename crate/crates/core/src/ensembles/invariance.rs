use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{ks_critical_two_sample, ks_two_sample};
use super::EnsembleSample;
use crate::dynamics::{FlowEngine, TauDistribution, TauSchedule};
use crate::error::{Error, Result};
use crate::observables::{center_of_vorticity, mean_same_sign_nearest, min_pair_distance};
use crate::torus::Configuration;

pub const MIN_INVARIANCE_SAMPLES: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservableKind {
    MinPairDistance,
    SameSignNearest,
    CenterOfVorticityU,
    CenterOfVorticityV,
}

impl ObservableKind {
    pub const ALL: [ObservableKind; 4] = [
        ObservableKind::MinPairDistance,
        ObservableKind::SameSignNearest,
        ObservableKind::CenterOfVorticityU,
        ObservableKind::CenterOfVorticityV,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ObservableKind::MinPairDistance => "min_pair_distance",
            ObservableKind::SameSignNearest => "same_sign_nearest",
            ObservableKind::CenterOfVorticityU => "center_of_vorticity_u",
            ObservableKind::CenterOfVorticityV => "center_of_vorticity_v",
        }
    }

    pub fn eval(self, x: &Configuration) -> f64 {
        match self {
            ObservableKind::MinPairDistance => min_pair_distance(x),
            ObservableKind::SameSignNearest => mean_same_sign_nearest(x),
            ObservableKind::CenterOfVorticityU => center_of_vorticity(x)[0],
            ObservableKind::CenterOfVorticityV => center_of_vorticity(x)[1],
        }
    }
}

/// Push every sample through Ψ^m_t, each with its own schedule stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvarianceSpec {
    pub m: usize,
    pub t: f64,
    #[serde(default)]
    pub distribution: TauDistribution,
    pub seed: u64,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default = "default_observables")]
    pub observables: Vec<ObservableKind>,
}

fn default_level() -> f64 {
    0.01
}

fn default_observables() -> Vec<ObservableKind> {
    ObservableKind::ALL.to_vec()
}

impl InvarianceSpec {
    pub fn new(m: usize, t: f64, seed: u64) -> Self {
        InvarianceSpec {
            m,
            t,
            distribution: TauDistribution::Exponential,
            seed,
            level: default_level(),
            observables: default_observables(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvarianceRow {
    pub observable: ObservableKind,
    pub ks: f64,
    pub critical: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub samples: usize,
    pub m: usize,
    pub t: f64,
    pub level: f64,
    pub rows: Vec<InvarianceRow>,
}

impl InvarianceReport {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn row(&self, o: ObservableKind) -> Option<&InvarianceRow> {
        self.rows.iter().find(|r| r.observable == o)
    }
}

pub fn invariance_test(
    engine: &FlowEngine,
    sample: &EnsembleSample,
    spec: &InvarianceSpec,
) -> Result<InvarianceReport> {
    let n = sample.len();
    if n < MIN_INVARIANCE_SAMPLES {
        return Err(Error::invalid(format!(
            "invariance test needs at least {MIN_INVARIANCE_SAMPLES} samples, got {n}"
        )));
    }
    if !(spec.level > 0.0 && spec.level < 1.0) {
        return Err(Error::invalid("level must lie in (0, 1)"));
    }
    let pushed: Vec<Configuration> = sample
        .configurations()
        .par_iter()
        .enumerate()
        .map(|(k, x)| {
            let mut sched = TauSchedule::with_stream(spec.distribution, spec.seed, k as u64);
            engine.interpolated_flow(x, spec.t, spec.m, &mut sched)
        })
        .collect::<Result<_>>()?;
    let critical = ks_critical_two_sample(spec.level, n, n);
    let rows = spec
        .observables
        .iter()
        .map(|&o| {
            let before: Vec<f64> = sample.configurations().iter().map(|x| o.eval(x)).collect();
            let after: Vec<f64> = pushed.iter().map(|x| o.eval(x)).collect();
            let ks = ks_two_sample(&before, &after);
            InvarianceRow {
                observable: o,
                ks,
                critical,
                passed: ks < critical,
            }
        })
        .collect();
    Ok(InvarianceReport {
        samples: n,
        m: spec.m,
        t: spec.t,
        level: spec.level,
        rows,
    })
}
