//! Periodic Green function, Biot–Savart kernel and its regularized and
//! tabulated variants.

mod green;
mod mollifier;
mod table;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use green::{
    probe_points, EwaldParams, GreenEvaluator, GreenExtrema, DEFAULT_TARGET_ACCURACY,
    SINGULAR_RADIUS,
};
pub use mollifier::Mollifier;
pub use table::{build_kernel_table, KernelTable, TableSidecar, MIN_GRID_SIZE};

use crate::error::Result;
use crate::torus::Vec2;

/// Which kernel drives the flows.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum KernelMode {
    #[default]
    Exact,
    Table {
        grid_size: usize,
    },
    Regularized {
        delta: f64,
    },
}

impl KernelMode {
    pub fn is_singular(&self) -> bool {
        !matches!(self, KernelMode::Regularized { .. })
    }
}

#[derive(Clone, Debug)]
enum Backend {
    Exact,
    Table(Arc<KernelTable>),
    Regularized(Mollifier),
}

/// A kernel mode bound to its evaluator (and table, when tabulated).
#[derive(Clone, Debug)]
pub struct PairKernel {
    green: Arc<GreenEvaluator>,
    mode: KernelMode,
    backend: Backend,
}

impl PairKernel {
    pub fn new(green: Arc<GreenEvaluator>, mode: KernelMode) -> Result<Self> {
        let backend = match mode {
            KernelMode::Exact => Backend::Exact,
            KernelMode::Table { grid_size } => {
                Backend::Table(Arc::new(build_kernel_table(&green, grid_size)?))
            }
            KernelMode::Regularized { delta } => Backend::Regularized(Mollifier::new(delta)?),
        };
        Ok(PairKernel {
            green,
            mode,
            backend,
        })
    }

    /// Reuse an existing table for `KernelMode::Table`.
    pub fn with_table(green: Arc<GreenEvaluator>, table: Arc<KernelTable>) -> Self {
        PairKernel {
            green,
            mode: KernelMode::Table {
                grid_size: table.grid_size(),
            },
            backend: Backend::Table(table),
        }
    }

    pub fn exact(green: Arc<GreenEvaluator>) -> Self {
        PairKernel {
            green,
            mode: KernelMode::Exact,
            backend: Backend::Exact,
        }
    }

    pub fn mode(&self) -> KernelMode {
        self.mode
    }

    pub fn green(&self) -> &GreenEvaluator {
        &self.green
    }

    pub fn green_arc(&self) -> Arc<GreenEvaluator> {
        self.green.clone()
    }

    pub fn table(&self) -> Option<&KernelTable> {
        match &self.backend {
            Backend::Table(t) => Some(t),
            _ => None,
        }
    }

    pub fn is_singular(&self) -> bool {
        self.mode.is_singular()
    }

    /// Velocity induced at displacement `d` by a unit vortex at the origin.
    #[inline]
    pub fn velocity_at(&self, d: Vec2) -> Vec2 {
        match &self.backend {
            Backend::Exact => self.green.biot_savart_at(d),
            Backend::Table(t) => t.eval_at(d),
            Backend::Regularized(m) => self.green.regularized_at(d, m),
        }
    }
}
