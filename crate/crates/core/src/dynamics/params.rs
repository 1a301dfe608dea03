use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelMode;
use crate::ode::OdeOptions;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowParams {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    /// Deterministic flow stops with `NearCollision` below this pair distance.
    pub collision_radius: f64,
    pub kernel_mode: KernelMode,
    /// Integrator step budget per flow segment.
    pub max_steps: usize,
    /// Newton projection of the moving vortex back onto its stream-function
    /// level set (singular kernels only).
    pub projection: bool,
    /// Skip whole revolutions once a single-vortex orbit is seen to close.
    pub period_reduction: bool,
}

impl Default for FlowParams {
    fn default() -> Self {
        FlowParams {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: 0.05,
            collision_radius: 1e-6,
            kernel_mode: KernelMode::Exact,
            max_steps: 2_000_000,
            projection: true,
            period_reduction: true,
        }
    }
}

impl FlowParams {
    pub fn regularized(delta: f64) -> Self {
        FlowParams {
            kernel_mode: KernelMode::Regularized { delta },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let tol_ok = |t: f64| (1e-14..=1e-3).contains(&t);
        if !tol_ok(self.rel_tol) || !tol_ok(self.abs_tol) {
            return Err(Error::invalid(format!(
                "tolerances must lie in [1e-14, 1e-3], got rel {} abs {}",
                self.rel_tol, self.abs_tol
            )));
        }
        if !(self.max_step > 0.0 && self.max_step.is_finite()) {
            return Err(Error::invalid("max_step must be positive"));
        }
        if !(self.collision_radius > 0.0 && self.collision_radius < 0.5) {
            return Err(Error::invalid("collision_radius must lie in (0, 1/2)"));
        }
        if self.max_steps == 0 {
            return Err(Error::invalid("max_steps must be positive"));
        }
        if let KernelMode::Regularized { delta } = self.kernel_mode {
            crate::kernel::Mollifier::new(delta)?;
        }
        Ok(())
    }

    /// Integrator options for a field scaled by `speed`; `max_step` is measured
    /// in unscaled flow time.
    pub(crate) fn ode_options(&self, speed: f64) -> OdeOptions {
        OdeOptions {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_step: self.max_step / speed.max(f64::MIN_POSITIVE),
            max_steps: self.max_steps,
        }
    }
}
