//! Ewald evaluation of the zero-mean periodic Green function of −Δ on T².
//!
//! With the heat-kernel split at time `s0 = 1/(4α²)`:
//!
//! ```text
//! G(x) = (1/4π) Σ_n E₁(α²|x − n|²)  −  s0  +  Σ_{k≠0} e^{−π²|k|²/α²} cos(2π k·x) / (4π²|k|²)
//! ```
//!
//! The real-space images decay like `e^{−α²r²}` and the reciprocal terms like
//! `e^{−π²|k|²/α²}`, so a handful of shells on each side reach machine precision.
//! The constant `−s0` is the exact mean of the image sum, so G has zero average.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{exp1, exp1_plus_log};
use crate::torus::{norm, reduce, TorusPoint, Vec2};

/// Distance to the origin below which the kernels report a singular point.
pub const SINGULAR_RADIUS: f64 = 1e-14;

/// Image terms with `α²r²` above this are below 1e-23 and skipped.
const IMAGE_EXPONENT_CUTOFF: f64 = 52.0;

/// `∫_{[-1/2,1/2]²} ln|x| dx`, closed form `ln(1/2)/2 − 3/2 + π/4`.
const LOG_NORM_CELL_INTEGRAL: f64 = -1.061_175_426_882_524_4;

const DEFAULT_ALPHA: f64 = 4.0;
pub const DEFAULT_TARGET_ACCURACY: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EwaldParams {
    pub ewald_alpha: f64,
    pub real_cutoff: usize,
    pub fourier_cutoff: usize,
    pub target_accuracy: f64,
}

impl EwaldParams {
    /// Cutoffs chosen so that the first omitted image and reciprocal terms are
    /// a couple of orders of magnitude below `target_accuracy`.
    pub fn for_accuracy(target_accuracy: f64) -> Self {
        let alpha = DEFAULT_ALPHA;
        let exponent = (1.0 / target_accuracy).ln() + 5.0;
        let real_cutoff = ((exponent.sqrt() / alpha) - 0.5).ceil().max(1.0) as usize;
        let fourier_cutoff = ((exponent.sqrt() * alpha / PI) - 1.0).ceil().max(1.0) as usize;
        EwaldParams {
            ewald_alpha: alpha,
            real_cutoff,
            fourier_cutoff,
            target_accuracy,
        }
    }
}

impl Default for EwaldParams {
    fn default() -> Self {
        Self::for_accuracy(DEFAULT_TARGET_ACCURACY)
    }
}

/// Grid extrema of G used to calibrate the L-functional.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreenExtrema {
    /// Minimum of G over the sweep grid (attained away from the origin).
    pub green_min: f64,
    /// Maximum over the cell of the regular part `G(x) + ln|x| / 2π`.
    pub regular_max: f64,
}

#[derive(Debug)]
pub struct GreenEvaluator {
    params: EwaldParams,
    alpha2: f64,
    s0: f64,
    log_alpha_term: f64,
    images: Vec<Vec2>,
    /// Doubled reciprocal weights for the half lattice, indexed `[k1][k2 + K]`.
    weights: Vec<f64>,
    extrema: OnceLock<GreenExtrema>,
}

impl Default for GreenEvaluator {
    fn default() -> Self {
        Self::new(EwaldParams::default()).expect("default Ewald parameters are valid")
    }
}

impl GreenEvaluator {
    pub fn with_accuracy(target_accuracy: f64) -> Result<Self> {
        Self::new(EwaldParams::for_accuracy(target_accuracy))
    }

    /// Build and validate an evaluator: zero mean within `10·target` and evenness
    /// within `target` are checked before returning.
    pub fn new(params: EwaldParams) -> Result<Self> {
        let EwaldParams {
            ewald_alpha: alpha,
            real_cutoff,
            fourier_cutoff,
            target_accuracy,
        } = params;
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::invalid(format!("ewald_alpha must be positive, got {alpha}")));
        }
        if !(target_accuracy > 0.0 && target_accuracy < 1.0) {
            return Err(Error::invalid(format!(
                "target_accuracy must lie in (0, 1), got {target_accuracy}"
            )));
        }
        if fourier_cutoff > 64 || real_cutoff > 8 {
            return Err(Error::invalid("Ewald cutoffs too large"));
        }
        let alpha2 = alpha * alpha;
        let r = real_cutoff as i64;
        let images = (-r..=r)
            .flat_map(|a| (-r..=r).map(move |b| [a as f64, b as f64]))
            .collect();
        let k = fourier_cutoff as i64;
        let width = 2 * fourier_cutoff + 1;
        let mut weights = vec![0.0; (fourier_cutoff + 1) * width];
        for k1 in 0..=k {
            for k2 in -k..=k {
                if k1 == 0 && k2 <= 0 {
                    continue;
                }
                let kk = (k1 * k1 + k2 * k2) as f64;
                weights[k1 as usize * width + (k2 + k) as usize] =
                    2.0 * (-PI * PI * kk / alpha2).exp() / (4.0 * PI * PI * kk);
            }
        }
        let ge = GreenEvaluator {
            params,
            alpha2,
            s0: 1.0 / (4.0 * alpha2),
            log_alpha_term: alpha.ln() / (2.0 * PI),
            images,
            weights,
            extrema: OnceLock::new(),
        };
        ge.validate()?;
        Ok(ge)
    }

    pub fn params(&self) -> &EwaldParams {
        &self.params
    }

    pub fn target_accuracy(&self) -> f64 {
        self.params.target_accuracy
    }

    fn validate(&self) -> Result<()> {
        let tol = self.params.target_accuracy;
        let mean = self.cell_mean();
        if mean.abs() > 10.0 * tol {
            return Err(Error::invalid(format!(
                "Ewald parameters give a Green function with mean {mean:e}"
            )));
        }
        for p in probe_points(64) {
            if norm(reduce(p)) < 1e-3 {
                continue;
            }
            let a = self.green_at(p);
            let b = self.green_at([-p[0], -p[1]]);
            if (a - b).abs() > tol {
                return Err(Error::invalid(format!(
                    "Ewald parameters break evenness at {p:?}: {:e}",
                    a - b
                )));
            }
        }
        Ok(())
    }

    /// Average of G over the cell: Gauss–Legendre on the smooth regular part plus
    /// the closed-form integral of the logarithm.
    pub fn cell_mean(&self) -> f64 {
        let (nodes, wts) = gauss_legendre(24);
        let mut acc = 0.0;
        for (a, wa) in nodes.iter().zip(&wts) {
            for (b, wb) in nodes.iter().zip(&wts) {
                acc += wa * wb * self.regular_part_at([0.5 * a, 0.5 * b]);
            }
        }
        0.25 * acc - LOG_NORM_CELL_INTEGRAL / (2.0 * PI)
    }

    /// Reciprocal-space sum: returns (value, d/du, d/dv) of Σ w_k cos(2πk·x).
    #[inline]
    fn reciprocal(&self, x: Vec2) -> (f64, f64, f64) {
        const MAXK: usize = 65;
        let k = self.params.fourier_cutoff;
        let width = 2 * k + 1;
        let mut cx = [0.0; MAXK];
        let mut sx = [0.0; MAXK];
        let mut cy = [0.0; MAXK];
        let mut sy = [0.0; MAXK];
        let (s1x, c1x) = (2.0 * PI * x[0]).sin_cos();
        let (s1y, c1y) = (2.0 * PI * x[1]).sin_cos();
        cx[0] = 1.0;
        cy[0] = 1.0;
        for i in 0..k {
            cx[i + 1] = cx[i] * c1x - sx[i] * s1x;
            sx[i + 1] = sx[i] * c1x + cx[i] * s1x;
            cy[i + 1] = cy[i] * c1y - sy[i] * s1y;
            sy[i + 1] = sy[i] * c1y + cy[i] * s1y;
        }
        let (mut g, mut gu, mut gv) = (0.0, 0.0, 0.0);
        for k1 in 0..=k {
            let row = &self.weights[k1 * width..(k1 + 1) * width];
            let (ca, sa) = (cx[k1], sx[k1]);
            let mut row_sin_u = 0.0;
            for (idx, &w) in row.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let k2 = idx as isize - k as isize;
                let m = k2.unsigned_abs();
                let (cb, sb) = if k2 >= 0 { (cy[m], sy[m]) } else { (cy[m], -sy[m]) };
                let cosv = ca * cb - sa * sb;
                let sinv = sa * cb + ca * sb;
                g += w * cosv;
                row_sin_u += w * sinv;
                gv += w * k2 as f64 * sinv;
            }
            gu += k1 as f64 * row_sin_u;
        }
        (g, -2.0 * PI * gu, -2.0 * PI * gv)
    }

    /// Image sum excluding the primary image, plus the primary image
    /// term handled by the caller. Returns (value, gradient) of the secondary images.
    #[inline]
    fn secondary_images(&self, x: Vec2, with_value: bool) -> (f64, Vec2) {
        let mut g = 0.0;
        let mut grad = [0.0, 0.0];
        for n in &self.images {
            if n[0] == 0.0 && n[1] == 0.0 {
                continue;
            }
            let d = [x[0] - n[0], x[1] - n[1]];
            let r2 = d[0] * d[0] + d[1] * d[1];
            let z = self.alpha2 * r2;
            if z > IMAGE_EXPONENT_CUTOFF {
                continue;
            }
            if with_value {
                g += exp1(z);
            }
            let f = (-z).exp() / r2;
            grad[0] += f * d[0];
            grad[1] += f * d[1];
        }
        (g / (4.0 * PI), [-grad[0] / (2.0 * PI), -grad[1] / (2.0 * PI)])
    }

    /// Regular part `h(x) = G(x) + ln|x|/2π` on the reduced displacement; smooth at 0.
    pub fn regular_part_at(&self, d: Vec2) -> f64 {
        let x = reduce_closed(d);
        let r2 = x[0] * x[0] + x[1] * x[1];
        let z = self.alpha2 * r2;
        let primary = exp1_plus_log(z) / (4.0 * PI) - self.log_alpha_term;
        let (sec, _) = self.secondary_images(x, true);
        let (rec, _, _) = self.reciprocal(x);
        primary + sec - self.s0 + rec
    }

    /// Gradient of the regular part; smooth at 0.
    pub fn regular_grad_at(&self, d: Vec2) -> Vec2 {
        let x = reduce_closed(d);
        let r2 = x[0] * x[0] + x[1] * x[1];
        let z = self.alpha2 * r2;
        // (1 − e^{−z}) / r², with its limit α² at the origin
        let f = if z < 1e-8 {
            self.alpha2 * (1.0 - 0.5 * z)
        } else {
            -(-z).exp_m1() / r2
        };
        let (_, sg) = self.secondary_images(x, false);
        let (_, ru, rv) = self.reciprocal(x);
        [
            f * x[0] / (2.0 * PI) + sg[0] + ru,
            f * x[1] / (2.0 * PI) + sg[1] + rv,
        ]
    }

    /// G at a raw displacement, without the singularity check.
    #[inline]
    pub fn green_at(&self, d: Vec2) -> f64 {
        let x = reduce(d);
        let r2 = x[0] * x[0] + x[1] * x[1];
        let (sec, _) = self.secondary_images(x, true);
        let (rec, _, _) = self.reciprocal(x);
        exp1(self.alpha2 * r2) / (4.0 * PI) + sec - self.s0 + rec
    }

    /// ∇G at a raw displacement, without the singularity check.
    #[inline]
    pub fn grad_at(&self, d: Vec2) -> Vec2 {
        let x = reduce(d);
        let r2 = x[0] * x[0] + x[1] * x[1];
        let z = self.alpha2 * r2;
        let f = -(-z).exp() / (2.0 * PI * r2);
        let (_, sg) = self.secondary_images(x, false);
        let (_, ru, rv) = self.reciprocal(x);
        [f * x[0] + sg[0] + ru, f * x[1] + sg[1] + rv]
    }

    /// G and ∇G together at a raw displacement, without the singularity check.
    #[inline]
    pub fn value_and_grad_at(&self, d: Vec2) -> (f64, Vec2) {
        let x = reduce(d);
        let r2 = x[0] * x[0] + x[1] * x[1];
        let z = self.alpha2 * r2;
        let f = -(-z).exp() / (2.0 * PI * r2);
        let (sec, sg) = self.secondary_images(x, true);
        let (rec, ru, rv) = self.reciprocal(x);
        (
            exp1(z) / (4.0 * PI) + sec - self.s0 + rec,
            [f * x[0] + sg[0] + ru, f * x[1] + sg[1] + rv],
        )
    }

    /// Biot–Savart kernel `K = −∇⊥G = (∂₂G, −∂₁G)` at a raw displacement.
    #[inline]
    pub fn biot_savart_at(&self, d: Vec2) -> Vec2 {
        let g = self.grad_at(d);
        [g[1], -g[0]]
    }

    fn check_regular(p: TorusPoint) -> Result<()> {
        let distance = p.distance_to_origin();
        if distance < SINGULAR_RADIUS {
            Err(Error::SingularPoint { distance })
        } else {
            Ok(())
        }
    }

    pub fn green(&self, p: TorusPoint) -> Result<f64> {
        Self::check_regular(p)?;
        Ok(self.green_at(p.coords()))
    }

    pub fn grad_green(&self, p: TorusPoint) -> Result<Vec2> {
        Self::check_regular(p)?;
        Ok(self.grad_at(p.coords()))
    }

    pub fn biot_savart(&self, p: TorusPoint) -> Result<Vec2> {
        Self::check_regular(p)?;
        Ok(self.biot_savart_at(p.coords()))
    }

    /// Minimum of G and maximum of its regular part over a 1024² grid,
    /// computed once and cached. The sweep uses the square symmetries of G
    /// and only visits the triangle `0 <= v <= u <= 1/2`.
    pub fn extrema(&self) -> GreenExtrema {
        *self.extrema.get_or_init(|| {
            const GRID: usize = 1024;
            let half = GRID / 2;
            let h = 1.0 / GRID as f64;
            let mut green_min = f64::INFINITY;
            let mut regular_max = f64::NEG_INFINITY;
            for a in 0..=half {
                for b in 0..=a {
                    let p = [a as f64 * h, b as f64 * h];
                    regular_max = regular_max.max(self.regular_part_at(p));
                    if a > 0 {
                        green_min = green_min.min(self.green_at(p));
                    }
                }
            }
            GreenExtrema {
                green_min,
                regular_max,
            }
        })
    }
}

/// Like `reduce`, but leaves the closed cell [-1/2, 1/2]² untouched so that the
/// (non-periodic) regular part is continuous up to the cell boundary.
#[inline]
fn reduce_closed(d: Vec2) -> Vec2 {
    let r = |t: f64| if (-0.5..=0.5).contains(&t) { t } else { crate::torus::reduce_coord(t) };
    [r(d[0]), r(d[1])]
}

/// Deterministic low-discrepancy points in [0,1)² (R2 sequence).
pub fn probe_points(n: usize) -> Vec<Vec2> {
    const G: f64 = 1.324_717_957_244_746;
    let a1 = 1.0 / G;
    let a2 = 1.0 / (G * G);
    (1..=n)
        .map(|i| {
            let i = i as f64;
            [(0.5 + a1 * i).fract(), (0.5 + a2 * i).fract()]
        })
        .collect()
}

/// Gauss–Legendre nodes and weights on [-1, 1].
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}
