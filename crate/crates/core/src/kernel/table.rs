//! Tabulated Biot–Savart kernel.
//!
//! Only the smooth remainder `K − K_sing` is tabulated, with
//! `K_sing(x) = (−x₂, x₁) / (2π|x|²)` added back analytically, so the table
//! stays accurate arbitrarily close to the origin.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::green::{probe_points, GreenEvaluator, SINGULAR_RADIUS};
use crate::error::{Error, Result};
use crate::torus::{norm, reduce, TorusPoint, Vec2};

const MAGIC: &[u8; 4] = b"PVKT";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 8;
pub const MIN_GRID_SIZE: usize = 64;
const VALIDATION_PROBES: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct KernelTable {
    grid_size: usize,
    target_accuracy: f64,
    /// Samples on the `(grid_size + 1)²` nodes of [-1/2, 1/2]², row-major in u.
    values: Vec<Vec2>,
    singular: bool,
}

/// Build parameters written next to the binary table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableSidecar {
    pub format: String,
    pub version: u32,
    pub grid_size: usize,
    pub target_accuracy: f64,
    pub interpolation: String,
    pub ewald_alpha: f64,
    pub real_cutoff: usize,
    pub fourier_cutoff: usize,
    pub max_probe_error: f64,
    pub content_hash: String,
}

#[inline]
fn lagrange4(p: f64) -> [f64; 4] {
    let (a, b, c) = (p - 1.0, p - 2.0, p - 3.0);
    [
        -a * b * c / 6.0,
        p * b * c / 2.0,
        -p * a * c / 2.0,
        p * a * b / 6.0,
    ]
}

#[inline]
fn stencil(x: f64, n: usize) -> (usize, [f64; 4]) {
    let t = (x + 0.5) * n as f64;
    let cell = (t.floor().max(0.0) as usize).min(n - 1);
    let start = cell.saturating_sub(1).min(n - 3);
    (start, lagrange4(t - start as f64))
}

/// Singular part of K, `(−x₂, x₁) / (2π|x|²)`.
#[inline]
pub(crate) fn singular_part(x: Vec2) -> Vec2 {
    let r2 = x[0] * x[0] + x[1] * x[1];
    let f = 1.0 / (2.0 * PI * r2);
    [-x[1] * f, x[0] * f]
}

/// Tabulate `ge`'s kernel on a `grid_size` grid and validate against direct
/// evaluation at quasi-random probes.
pub fn build_kernel_table(ge: &GreenEvaluator, grid_size: usize) -> Result<KernelTable> {
    let table = KernelTable::from_fn(grid_size, ge.target_accuracy(), true, |x| {
        let g = ge.regular_grad_at(x);
        [g[1], -g[0]]
    })?;
    let max_error = table.probe_error(ge);
    let tolerance = 10.0 * ge.target_accuracy();
    if max_error > tolerance {
        return Err(Error::TableAccuracy {
            max_error,
            tolerance,
        });
    }
    log::debug!("kernel table {grid_size}: max probe error {max_error:e}");
    Ok(table)
}

impl KernelTable {
    /// Tabulate an arbitrary smooth field; `singular` adds the analytic
    /// point-vortex part on evaluation.
    pub fn from_fn(
        grid_size: usize,
        target_accuracy: f64,
        singular: bool,
        f: impl Fn(Vec2) -> Vec2,
    ) -> Result<Self> {
        if grid_size < MIN_GRID_SIZE {
            return Err(Error::invalid(format!(
                "grid_size must be at least {MIN_GRID_SIZE}, got {grid_size}"
            )));
        }
        if grid_size > 1 << 14 {
            return Err(Error::invalid("grid_size too large"));
        }
        let h = 1.0 / grid_size as f64;
        let mut values = Vec::with_capacity((grid_size + 1) * (grid_size + 1));
        for a in 0..=grid_size {
            for b in 0..=grid_size {
                values.push(f([a as f64 * h - 0.5, b as f64 * h - 0.5]));
            }
        }
        Ok(KernelTable {
            grid_size,
            target_accuracy,
            values,
            singular,
        })
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn target_accuracy(&self) -> f64 {
        self.target_accuracy
    }

    /// Largest deviation from direct evaluation over the validation probes.
    pub fn probe_error(&self, ge: &GreenEvaluator) -> f64 {
        probe_points(VALIDATION_PROBES)
            .into_iter()
            .filter(|p| norm(reduce(*p)) > 1e-3)
            .map(|p| {
                let a = self.eval_at(p);
                let b = ge.biot_savart_at(p);
                (a[0] - b[0]).abs().max((a[1] - b[1]).abs())
            })
            .fold(0.0, f64::max)
    }

    /// Interpolated kernel at a raw displacement, without the singularity check.
    #[inline]
    pub fn eval_at(&self, d: Vec2) -> Vec2 {
        let x = reduce(d);
        let n = self.grid_size;
        let (sa, wa) = stencil(x[0], n);
        let (sb, wb) = stencil(x[1], n);
        let mut acc = [0.0, 0.0];
        for (i, wi) in wa.iter().enumerate() {
            let row = (sa + i) * (n + 1) + sb;
            let mut r = [0.0, 0.0];
            for (j, wj) in wb.iter().enumerate() {
                let v = self.values[row + j];
                r[0] += wj * v[0];
                r[1] += wj * v[1];
            }
            acc[0] += wi * r[0];
            acc[1] += wi * r[1];
        }
        if self.singular && (x[0] != 0.0 || x[1] != 0.0) {
            let s = singular_part(x);
            acc[0] += s[0];
            acc[1] += s[1];
        }
        acc
    }

    pub fn eval(&self, p: TorusPoint) -> Result<Vec2> {
        let distance = p.distance_to_origin();
        if self.singular && distance < SINGULAR_RADIUS {
            return Err(Error::SingularPoint { distance });
        }
        Ok(self.eval_at(p.coords()))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.values.len() * 16);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.grid_size as u32).to_le_bytes());
        out.extend_from_slice(&self.target_accuracy.to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v[0].to_le_bytes());
            out.extend_from_slice(&v[1].to_le_bytes());
        }
        out
    }

    /// Parse a table written by [`KernelTable::to_bytes`]. Tables on disk
    /// always carry the singular part.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::invalid(format!("malformed kernel table: {m}"));
        if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
            return Err(bad("bad magic"));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        if u32_at(4) != VERSION {
            return Err(bad("unsupported version"));
        }
        let grid_size = u32_at(8) as usize;
        let target_accuracy = f64::from_le_bytes(bytes[12..20].try_into().unwrap());
        let count = (grid_size + 1) * (grid_size + 1);
        if grid_size < MIN_GRID_SIZE || bytes.len() != HEADER_LEN + 16 * count {
            return Err(bad("size mismatch"));
        }
        let values = bytes[HEADER_LEN..]
            .chunks_exact(16)
            .map(|c| {
                [
                    f64::from_le_bytes(c[..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..].try_into().unwrap()),
                ]
            })
            .collect();
        Ok(KernelTable {
            grid_size,
            target_accuracy,
            values,
            singular: true,
        })
    }

    /// Git-style blob hash of the binary encoding.
    pub fn content_hash(&self) -> String {
        let bytes = self.to_bytes();
        let mut h = Sha256::new();
        h.update(format!("blob {}\0", bytes.len()).as_bytes());
        h.update(&bytes);
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn sidecar(&self, ge: &GreenEvaluator) -> TableSidecar {
        let p = ge.params();
        TableSidecar {
            format: "PVKT".into(),
            version: VERSION,
            grid_size: self.grid_size,
            target_accuracy: self.target_accuracy,
            interpolation: "bicubic-lagrange".into(),
            ewald_alpha: p.ewald_alpha,
            real_cutoff: p.real_cutoff,
            fourier_cutoff: p.fourier_cutoff,
            max_probe_error: self.probe_error(ge),
            content_hash: self.content_hash(),
        }
    }

    /// Write `<path>` (binary) and `<path>.json` (sidecar).
    pub fn write(&self, path: &Path, ge: &GreenEvaluator) -> Result<TableSidecar> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        f.sync_all()?;
        let sidecar = self.sidecar(ge);
        let mut json = path.as_os_str().to_owned();
        json.push(".json");
        std::fs::write(json, serde_json::to_string_pretty(&sidecar)?)?;
        Ok(sidecar)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}
