//! Dormand–Prince 5(4) with PI step-size control and continuous output.
//!
//! The integrator is driven one accepted step at a time so callers can
//! project the state, inspect the dense output, or stop early between steps.

use crate::error::Error;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: 0.05,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Debug)]
pub enum OdeFailure {
    StepLimit { t: f64, steps: usize },
    /// The controller drove the step below roundoff resolution of `t`.
    StepUnderflow { t: f64 },
    Rhs(Error),
}

impl From<Error> for OdeFailure {
    fn from(e: Error) -> Self {
        OdeFailure::Rhs(e)
    }
}

impl From<OdeFailure> for Error {
    fn from(f: OdeFailure) -> Self {
        match f {
            OdeFailure::StepLimit { t, steps } => Error::StepLimit { t, steps },
            OdeFailure::StepUnderflow { t } => Error::StepLimit { t, steps: 0 },
            OdeFailure::Rhs(e) => e,
        }
    }
}

pub type OdeResult<T> = std::result::Result<T, OdeFailure>;

/// Integrator state for `y' = f(t, y)`.
#[derive(Clone, Debug)]
pub struct Dopri5 {
    opts: OdeOptions,
    t: f64,
    y: Vec<f64>,
    k: [Vec<f64>; 7],
    ytmp: Vec<f64>,
    ynew: Vec<f64>,
    cont: [Vec<f64>; 5],
    t_old: f64,
    h_old: f64,
    h: f64,
    err_old: f64,
    last_rejected: bool,
    steps: usize,
    rejected: usize,
}

impl Dopri5 {
    pub fn new<F>(t0: f64, y0: &[f64], opts: OdeOptions, f: &mut F) -> OdeResult<Self>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> crate::Result<()>,
    {
        let n = y0.len();
        let z = || vec![0.0; n];
        let mut s = Dopri5 {
            opts,
            t: t0,
            y: y0.to_vec(),
            k: [z(), z(), z(), z(), z(), z(), z()],
            ytmp: z(),
            ynew: z(),
            cont: [z(), z(), z(), z(), z()],
            t_old: t0,
            h_old: 0.0,
            h: 0.0,
            err_old: 1e-4,
            last_rejected: false,
            steps: 0,
            rejected: 0,
        };
        f(t0, &s.y, &mut s.k[0])?;
        s.h = s.initial_step(f)?;
        Ok(s)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn rejected(&self) -> usize {
        self.rejected
    }

    /// Start of the last accepted step.
    pub fn t_prev(&self) -> f64 {
        self.t_old
    }

    fn scale(&self, a: f64, b: f64) -> f64 {
        self.opts.abs_tol + self.opts.rel_tol * a.abs().max(b.abs())
    }

    fn rms_scaled(&self, v: &[f64]) -> f64 {
        let n = v.len().max(1) as f64;
        (v.iter()
            .zip(&self.y)
            .map(|(a, y)| {
                let s = self.scale(*y, *y);
                (a / s) * (a / s)
            })
            .sum::<f64>()
            / n)
            .sqrt()
    }

    /// Starting step from the local Lipschitz estimate (Hairer–Wanner, II.4).
    fn initial_step<F>(&mut self, f: &mut F) -> OdeResult<f64>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> crate::Result<()>,
    {
        let d0 = self.rms_scaled(&self.y);
        let d1 = self.rms_scaled(&self.k[0]);
        let mut h0 = if d0 < 1e-10 || d1 < 1e-10 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        h0 = h0.min(self.opts.max_step);
        for i in 0..self.y.len() {
            self.ytmp[i] = self.y[i] + h0 * self.k[0][i];
        }
        let (head, tail) = self.k.split_at_mut(1);
        f(self.t + h0, &self.ytmp, &mut tail[0])?;
        let diff: Vec<f64> = tail[0].iter().zip(&head[0]).map(|(a, b)| a - b).collect();
        let d2 = self.rms_scaled(&diff) / h0;
        let m = d1.max(d2);
        let h1 = if m <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / m).powf(0.2)
        };
        Ok((100.0 * h0).min(h1).min(self.opts.max_step))
    }

    /// Advance by one accepted step without passing `t_end`.
    pub fn step<F>(&mut self, t_end: f64, f: &mut F) -> OdeResult<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> crate::Result<()>,
    {
        let n = self.y.len();
        let expo1 = 0.2 - BETA * 0.75;
        loop {
            if self.steps + self.rejected >= self.opts.max_steps {
                return Err(OdeFailure::StepLimit {
                    t: self.t,
                    steps: self.steps,
                });
            }
            let mut h = self.h.min(self.opts.max_step);
            let remaining = t_end - self.t;
            let last = h >= remaining * (1.0 - 1e-12);
            if last {
                h = remaining;
            }
            if h <= 1e-15 * self.t.abs().max(1.0) {
                return Err(OdeFailure::StepUnderflow { t: self.t });
            }
            let t = self.t;
            let y = &self.y;
            let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
            let yt = &mut self.ytmp;
            for i in 0..n {
                yt[i] = y[i] + h * A21 * k1[i];
            }
            f(t + C2 * h, yt, k2)?;
            for i in 0..n {
                yt[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
            }
            f(t + C3 * h, yt, k3)?;
            for i in 0..n {
                yt[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            f(t + C4 * h, yt, k4)?;
            for i in 0..n {
                yt[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            f(t + C5 * h, yt, k5)?;
            for i in 0..n {
                yt[i] = y[i]
                    + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            f(t + h, yt, k6)?;
            let yn = &mut self.ynew;
            for i in 0..n {
                yn[i] = y[i]
                    + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
            }
            f(t + h, yn, k7)?;
            let mut err = 0.0;
            for i in 0..n {
                let e = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i]
                        + E7 * k7[i]);
                let sk = self.opts.abs_tol + self.opts.rel_tol * y[i].abs().max(yn[i].abs());
                err += (e / sk) * (e / sk);
            }
            let err = (err / n.max(1) as f64).sqrt();
            let fac11 = err.powf(expo1);
            if err <= 1.0 {
                let fac = (fac11 / self.err_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                let mut hnew = h / fac;
                if self.last_rejected {
                    hnew = hnew.min(h);
                }
                self.err_old = err.max(1e-4);
                for i in 0..n {
                    let ydiff = yn[i] - y[i];
                    let bspl = h * k1[i] - ydiff;
                    self.cont[0][i] = y[i];
                    self.cont[1][i] = ydiff;
                    self.cont[2][i] = bspl;
                    self.cont[3][i] = ydiff - h * k7[i] - bspl;
                    self.cont[4][i] = h
                        * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i]
                            + D7 * k7[i]);
                }
                std::mem::swap(k1, k7);
                std::mem::swap(&mut self.y, &mut self.ynew);
                self.t_old = t;
                self.h_old = h;
                self.t = if last { t_end } else { t + h };
                // keep the proposal for the next step even when the last one was clipped
                if !last || hnew < self.h {
                    self.h = hnew;
                }
                self.last_rejected = false;
                self.steps += 1;
                return Ok(());
            }
            self.h = h / (fac11 / SAFETY).min(1.0 / FAC_MIN);
            self.last_rejected = true;
            self.rejected += 1;
        }
    }

    /// Continuous extension over the last accepted step.
    pub fn dense_into(&self, t: f64, out: &mut [f64]) {
        let theta = (t - self.t_old) / self.h_old;
        let theta1 = 1.0 - theta;
        for (i, o) in out.iter_mut().enumerate() {
            let c = |j: usize| self.cont[j][i];
            *o = c(0) + theta * (c(1) + theta1 * (c(2) + theta * (c(3) + theta1 * c(4))));
        }
    }

    /// Replace the current state (after a projection) and refresh the FSAL stage.
    pub fn set_state<F>(&mut self, y: &[f64], f: &mut F) -> OdeResult<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> crate::Result<()>,
    {
        self.y.copy_from_slice(y);
        f(self.t, &self.y, &mut self.k[0])?;
        Ok(())
    }

    /// Integrate to `t_end`, calling `after_step` after each accepted step.
    /// The hook may return a replacement state.
    pub fn integrate<F, H>(&mut self, t_end: f64, f: &mut F, mut after_step: H) -> OdeResult<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> crate::Result<()>,
        H: FnMut(&Self) -> OdeResult<Option<Vec<f64>>>,
    {
        while self.t < t_end {
            self.step(t_end, f)?;
            if let Some(y) = after_step(self)? {
                self.set_state(&y, f)?;
            }
        }
        Ok(())
    }
}
