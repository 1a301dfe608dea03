//! Scalar functionals of configurations and trajectories.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::kernel::{GreenEvaluator, SINGULAR_RADIUS};
use crate::torus::{min_displacement, torus_distance, Configuration};

fn check_distinct(x: &Configuration) -> Result<()> {
    if let Some((i, j, distance)) = x.closest_pair() {
        if distance < SINGULAR_RADIUS {
            return Err(Error::SingularConfiguration { i, j, distance });
        }
    }
    Ok(())
}

/// `Σ_{i<j} ξ_i ξ_j G(x_i − x_j)` without the collision check.
pub(crate) fn pair_energy_unchecked(ge: &GreenEvaluator, x: &Configuration) -> f64 {
    let p = x.positions();
    let xi = x.intensities();
    let mut h = 0.0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            h += xi[i] * xi[j] * ge.green_at(min_displacement(p[i], p[j]));
        }
    }
    h
}

/// `H(x) = Σ_{i≠j} ξ_i ξ_j G(x_i − x_j)`, summed over ordered pairs.
pub fn hamiltonian(ge: &GreenEvaluator, x: &Configuration) -> Result<f64> {
    check_distinct(x)?;
    Ok(2.0 * pair_energy_unchecked(ge, x))
}

/// `|H₁ − H₀| / max(1, |H₀|)`.
pub fn relative_drift(h0: f64, h1: f64) -> f64 {
    (h1 - h0).abs() / h0.abs().max(1.0)
}

pub fn min_pair_distance(x: &Configuration) -> f64 {
    x.closest_pair().map_or(f64::INFINITY, |(_, _, d)| d)
}

/// Distance from each vortex to its nearest neighbour of the same sign
/// (infinite when it has none).
pub fn same_sign_nearest(x: &Configuration) -> Vec<f64> {
    let p = x.positions();
    let xi = x.intensities();
    (0..p.len())
        .map(|i| {
            (0..p.len())
                .filter(|&j| j != i && xi[j].signum() == xi[i].signum())
                .map(|j| torus_distance(p[i], p[j]))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Mean over vortices of the same-sign nearest-neighbour distance (vortices
/// without a same-sign partner are skipped).
pub fn mean_same_sign_nearest(x: &Configuration) -> f64 {
    let d: Vec<f64> = same_sign_nearest(x).into_iter().filter(|d| d.is_finite()).collect();
    if d.is_empty() {
        f64::NAN
    } else {
        d.iter().sum::<f64>() / d.len() as f64
    }
}

/// Circular center of vorticity per axis, `arg(Σ ξ_k e^{2πi u_k}) / 2π` in [0,1).
pub fn center_of_vorticity(x: &Configuration) -> [f64; 2] {
    let mut out = [0.0; 2];
    for (axis, o) in out.iter_mut().enumerate() {
        let (mut re, mut im) = (0.0, 0.0);
        for (p, xi) in x.positions().iter().zip(x.intensities()) {
            let a = 2.0 * PI * p.coords()[axis];
            re += xi * a.cos();
            im += xi * a.sin();
        }
        let t = im.atan2(re) / (2.0 * PI);
        *o = t - t.floor();
        if *o >= 1.0 {
            *o = 0.0;
        }
    }
    out
}

/// The collision-controlling functional `L(x) = Σ_{i≠j} G(x_i − x_j) + c`
/// together with the constants of the bound `L(x) ≤ −Ĉ log d_min + offset`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LFunctional {
    pub n: usize,
    /// Additive constant making L nonnegative.
    pub c: f64,
    /// Slope of the logarithmic bound.
    pub c_hat: f64,
    /// Additive constant of the logarithmic bound.
    pub offset: f64,
}

impl LFunctional {
    pub fn new(ge: &GreenEvaluator, n: usize) -> Self {
        let pairs = (n * n.saturating_sub(1)) as f64;
        let ext = ge.extrema();
        let c = pairs * (-ext.green_min).max(0.0);
        // G(d) ≤ −log|d|/2π + sup h for every pair, so the bound holds with
        // any slope ≥ pairs/2π once the regular part is bounded above
        let regular_sup = ext.regular_max + REGULAR_SUP_MARGIN;
        LFunctional {
            n,
            c,
            c_hat: pairs * 1.1 / (2.0 * PI),
            offset: pairs * regular_sup + c,
        }
    }

    pub fn eval(&self, ge: &GreenEvaluator, x: &Configuration) -> Result<f64> {
        check_distinct(x)?;
        let p = x.positions();
        let mut s = 0.0;
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                s += ge.green_at(min_displacement(p[i], p[j]));
            }
        }
        Ok(2.0 * s + self.c)
    }

    /// `L(x) + Ĉ log d_min(x) − offset`; nonpositive whenever the bound holds.
    pub fn bound_slack(&self, ge: &GreenEvaluator, x: &Configuration) -> Result<f64> {
        Ok(self.eval(ge, x)? + self.c_hat * min_pair_distance(x).ln() - self.offset)
    }
}

/// Grid-to-continuum allowance on the maximum of the regular part.
const REGULAR_SUP_MARGIN: f64 = 1e-4;

pub fn l_functional(ge: &GreenEvaluator, x: &Configuration) -> Result<f64> {
    LFunctional::new(ge, x.len()).eval(ge, x)
}

/// Supremum of L over the sample times of a trajectory.
pub fn sup_l_along(ge: &GreenEvaluator, traj: &Trajectory) -> Result<f64> {
    let l = LFunctional::new(ge, traj.n());
    traj.samples()
        .iter()
        .map(|x| l.eval(ge, x))
        .try_fold(f64::NEG_INFINITY, |m, v| v.map(|v| m.max(v)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// `sup_t |value(t) − value(t₀)| / max(1, |value(t₀)|)`.
    pub sup_drift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableReport {
    pub name: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub summary: Summary,
}

impl ObservableReport {
    pub fn new(name: impl Into<String>, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() || times.is_empty() {
            return Err(Error::invalid("report needs matching, nonempty times and values"));
        }
        let v0 = values[0];
        let summary = Summary {
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean: values.iter().sum::<f64>() / values.len() as f64,
            sup_drift: values.iter().map(|&v| relative_drift(v0, v)).fold(0.0, f64::max),
        };
        Ok(ObservableReport {
            name: name.into(),
            times,
            values,
            summary,
        })
    }

    pub fn from_trajectory(
        name: impl Into<String>,
        traj: &Trajectory,
        f: impl Fn(&Configuration) -> Result<f64>,
    ) -> Result<Self> {
        let values = traj.samples().iter().map(f).collect::<Result<Vec<_>>>()?;
        Self::new(name, traj.times().to_vec(), values)
    }

    pub fn hamiltonian(ge: &GreenEvaluator, traj: &Trajectory) -> Result<Self> {
        Self::from_trajectory("hamiltonian", traj, |x| hamiltonian(ge, x))
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,value")?;
        for (t, v) in self.times.iter().zip(&self.values) {
            writeln!(w, "{t:?},{v:?}")?;
        }
        Ok(())
    }

    pub fn summary_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&serde_json::json!({
            "name": self.name,
            "samples": self.times.len(),
            "summary": self.summary,
        }))?)
    }
}
