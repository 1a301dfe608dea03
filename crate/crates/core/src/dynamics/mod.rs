//! The deterministic point-vortex flow and its random splittings.

mod convergence;
mod flows;
mod params;
mod schedule;
mod single;
mod trajectory;

use std::sync::Arc;

pub use convergence::{
    convergence_sweep, lipschitz_bound, ConvergenceRow, ConvergenceTable, SweepSpec,
};
pub use params::FlowParams;
pub use schedule::{ScheduleRef, TauDistribution, TauSchedule};
pub use trajectory::{time_grid, FlowKind, Trajectory, TrajectoryMeta};

use crate::error::{Error, Result};
use crate::kernel::{GreenEvaluator, PairKernel, SINGULAR_RADIUS};
use crate::torus::{min_displacement, norm, Configuration, Vec2};

/// Deliberate corruption of the single-vortex field, for negative controls.
///
/// With a fault installed, a single-vortex segment ends early, without error,
/// when the moving vortex comes within `collision_radius` of another one or
/// when the integrator gives up (step budget or step underflow).
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum Fault {
    /// Multiply one coordinate of the moving vortex's velocity by `factor`.
    ScaleVelocity { axis: usize, factor: f64 },
}

/// Evaluates the flows for one kernel and parameter set.
#[derive(Clone, Debug)]
pub struct FlowEngine {
    kernel: PairKernel,
    params: FlowParams,
    fault: Option<Fault>,
}

impl FlowEngine {
    pub fn new(green: Arc<GreenEvaluator>, params: FlowParams) -> Result<Self> {
        params.validate()?;
        let kernel = PairKernel::new(green, params.kernel_mode)?;
        Ok(FlowEngine {
            kernel,
            params,
            fault: None,
        })
    }

    /// Reuse an already built kernel (and its table).
    pub fn with_kernel(kernel: PairKernel, mut params: FlowParams) -> Result<Self> {
        params.kernel_mode = kernel.mode();
        params.validate()?;
        Ok(FlowEngine {
            kernel,
            params,
            fault: None,
        })
    }

    pub fn with_fault(mut self, fault: Fault) -> Result<Self> {
        let Fault::ScaleVelocity { axis, factor } = fault;
        if axis > 1 || !factor.is_finite() {
            return Err(Error::invalid("fault needs axis 0 or 1 and a finite factor"));
        }
        self.fault = Some(fault);
        Ok(self)
    }

    pub fn params(&self) -> &FlowParams {
        &self.params
    }

    pub fn kernel(&self) -> &PairKernel {
        &self.kernel
    }

    pub fn green(&self) -> &GreenEvaluator {
        self.kernel.green()
    }

    pub fn table_hash(&self) -> Option<String> {
        self.kernel.table().map(|t| t.content_hash())
    }

    /// `v_i(x) = Σ_{j≠i} ξ_j K(x_i − x_j)` for every vortex.
    pub fn velocity(&self, x: &Configuration) -> Result<Vec<Vec2>> {
        let p = x.positions();
        let xi = x.intensities();
        let singular = self.kernel.is_singular();
        let mut v = vec![[0.0; 2]; p.len()];
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                let d = min_displacement(p[i], p[j]);
                if singular {
                    let distance = norm(d);
                    if distance < SINGULAR_RADIUS {
                        return Err(Error::SingularConfiguration { i, j, distance });
                    }
                }
                let k = self.kernel.velocity_at(d);
                v[i][0] += xi[j] * k[0];
                v[i][1] += xi[j] * k[1];
                v[j][0] -= xi[i] * k[0];
                v[j][1] -= xi[i] * k[1];
            }
        }
        Ok(v)
    }

    /// `v_i(x)` alone.
    pub fn single_component_velocity(&self, x: &Configuration, i: usize) -> Result<Vec2> {
        check_index(x, i)?;
        let p = x.positions();
        let xi = x.intensities();
        let mut v = [0.0; 2];
        for j in (0..p.len()).filter(|&j| j != i) {
            let d = min_displacement(p[i], p[j]);
            if self.kernel.is_singular() {
                let distance = norm(d);
                if distance < SINGULAR_RADIUS {
                    return Err(Error::SingularConfiguration {
                        i: i.min(j),
                        j: i.max(j),
                        distance,
                    });
                }
            }
            let k = self.kernel.velocity_at(d);
            v[0] += xi[j] * k[0];
            v[1] += xi[j] * k[1];
        }
        Ok(v)
    }
}

pub(crate) fn check_index(x: &Configuration, i: usize) -> Result<()> {
    if i >= x.len() {
        return Err(Error::invalid(format!(
            "vortex index {i} out of range for N = {}",
            x.len()
        )));
    }
    Ok(())
}

pub(crate) fn check_time(t: f64) -> Result<()> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::invalid(format!("time must be finite and nonnegative, got {t}")));
    }
    Ok(())
}
