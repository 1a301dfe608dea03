//! m → ∞ convergence of Ψ^m to Φ, and the Lipschitz constant of the
//! regularized single-vortex flows.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::schedule::{TauDistribution, TauSchedule};
use super::FlowEngine;
use crate::error::{Error, Result};
use crate::kernel::{GreenEvaluator, KernelMode, Mollifier};
use crate::observables::min_pair_distance;
use crate::torus::{config_distance_unchecked, Configuration};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub m_list: Vec<usize>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub distribution: TauDistribution,
    /// Sample times for the sup over t.
    pub times: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub m: usize,
    /// Seed average of `sup_t d_T(Ψ^m_t(x), Φ_t(x))`.
    pub mean_error: f64,
    pub per_seed: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// Consecutive pairs of rows (in the given m order) whose error decreased.
    pub decreasing_pairs: usize,
    /// Last row's error over the first row's.
    pub last_over_first: f64,
}

pub fn convergence_sweep(
    engine: &FlowEngine,
    x: &Configuration,
    spec: &SweepSpec,
) -> Result<ConvergenceTable> {
    if spec.m_list.is_empty() || spec.seeds.is_empty() {
        return Err(Error::invalid("convergence sweep needs at least one m and one seed"));
    }
    if let KernelMode::Regularized { delta } = engine.params().kernel_mode {
        let d = min_pair_distance(x);
        if d <= 2.0 * delta {
            return Err(Error::invalid(format!(
                "minimum pair distance {d} must exceed 2·delta = {}",
                2.0 * delta
            )));
        }
    }
    let reference = engine.deterministic_trajectory(x, &spec.times)?;
    let mut rows = Vec::with_capacity(spec.m_list.len());
    for &m in &spec.m_list {
        let per_seed = spec
            .seeds
            .par_iter()
            .map(|&seed| {
                let mut sched = TauSchedule::new(spec.distribution, seed);
                let traj = engine.interpolated_trajectory(x, &spec.times, m, &mut sched)?;
                Ok(traj
                    .samples()
                    .iter()
                    .zip(reference.samples())
                    .map(|(a, b)| config_distance_unchecked(a, b))
                    .fold(0.0, f64::max))
            })
            .collect::<Result<Vec<f64>>>()?;
        let mean_error = per_seed.iter().sum::<f64>() / per_seed.len() as f64;
        log::info!("m = {m}: mean sup error {mean_error:e}");
        rows.push(ConvergenceRow {
            m,
            mean_error,
            per_seed,
        });
    }
    let decreasing_pairs = rows
        .windows(2)
        .filter(|w| w[1].mean_error < w[0].mean_error)
        .count();
    let first = rows[0].mean_error;
    let last = rows.last().expect("nonempty").mean_error;
    let last_over_first = if first > 0.0 { last / first } else { 0.0 };
    Ok(ConvergenceTable {
        rows,
        decreasing_pairs,
        last_over_first,
    })
}

/// Grid estimate of `M = sup_{x,i} max(|v_i(x)|, ‖D_x v_i(x)‖)` for the
/// regularized kernel and the given intensities, with a 10% safety factor.
pub fn lipschitz_bound(
    ge: &GreenEvaluator,
    delta: f64,
    intensities: &[f64],
    grid: usize,
) -> Result<f64> {
    let m = Mollifier::new(delta)?;
    if grid < 16 {
        return Err(Error::invalid("grid too coarse"));
    }
    let h = 1e-5;
    let mut sup_k: f64 = 0.0;
    let mut sup_dk: f64 = 0.0;
    for a in 0..grid {
        for b in 0..grid {
            let x = [a as f64 / grid as f64 - 0.5, b as f64 / grid as f64 - 0.5];
            let k = ge.regularized_at(x, &m);
            sup_k = sup_k.max(k[0].hypot(k[1]));
            let ku = [
                ge.regularized_at([x[0] + h, x[1]], &m),
                ge.regularized_at([x[0] - h, x[1]], &m),
            ];
            let kv = [
                ge.regularized_at([x[0], x[1] + h], &m),
                ge.regularized_at([x[0], x[1] - h], &m),
            ];
            let d = [
                (ku[0][0] - ku[1][0]) / (2.0 * h),
                (kv[0][0] - kv[1][0]) / (2.0 * h),
                (ku[0][1] - ku[1][1]) / (2.0 * h),
                (kv[0][1] - kv[1][1]) / (2.0 * h),
            ];
            sup_dk = sup_dk.max(d.iter().map(|v| v * v).sum::<f64>().sqrt());
        }
    }
    let mut m_hat: f64 = 0.0;
    for i in 0..intensities.len() {
        let others = intensities.iter().enumerate().filter(|&(j, _)| j != i);
        let l1: f64 = others.clone().map(|(_, x)| x.abs()).sum();
        let l2: f64 = others.map(|(_, x)| x * x).sum();
        m_hat = m_hat
            .max(l1 * sup_k)
            .max(sup_dk * (l1 * l1 + l2).sqrt());
    }
    Ok(1.1 * m_hat)
}
