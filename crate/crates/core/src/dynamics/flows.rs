use super::schedule::TauSchedule;
use super::trajectory::{FlowKind, Trajectory};
use super::{check_index, check_time, FlowEngine};
use crate::error::{Error, Result};
use crate::kernel::SINGULAR_RADIUS;
use crate::observables::{pair_energy_unchecked, relative_drift};
use crate::ode::{Dopri5, OdeFailure};
use crate::torus::{norm, reduce, Configuration, Vec2};

/// Slack when converting `m·t` to a whole number of sweeps or slots.
const SLOT_EPS: f64 = 1e-9;

fn whole(x: f64) -> usize {
    (x + SLOT_EPS).floor().max(0.0) as usize
}

fn check_m(m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::invalid("m must be at least 1"));
    }
    Ok(())
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::invalid("no sample times"));
    }
    for &t in times {
        check_time(t)?;
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("sample times must be strictly increasing"));
    }
    Ok(())
}

fn flat_min_distance(y: &[f64]) -> f64 {
    let n = y.len() / 2;
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            best = best.min(norm(reduce([y[2 * i] - y[2 * j], y[2 * i + 1] - y[2 * j + 1]])));
        }
    }
    best
}

impl FlowEngine {
    /// Φ_t: the full point-vortex dynamics.
    pub fn deterministic_flow(&self, x: &Configuration, t: f64) -> Result<Configuration> {
        check_time(t)?;
        if t == 0.0 {
            return Ok(x.clone());
        }
        Ok(self.deterministic_states(x, &[t])?.pop().expect("one sample"))
    }

    pub fn deterministic_trajectory(&self, x: &Configuration, times: &[f64]) -> Result<Trajectory> {
        check_times(times)?;
        let samples = self.deterministic_states(x, times)?;
        Trajectory::new(times.to_vec(), samples, FlowKind::Deterministic, None)
    }

    fn deterministic_states(&self, x: &Configuration, times: &[f64]) -> Result<Vec<Configuration>> {
        let radius = self.params.collision_radius;
        if let Some((_, _, distance)) = x.closest_pair() {
            if distance < radius {
                return Err(Error::NearCollision { t: 0.0, distance });
            }
        }
        let n = x.len();
        let xi = x.intensities().to_vec();
        let singular = self.kernel.is_singular();
        let mut f = |t: f64, y: &[f64], dy: &mut [f64]| {
            dy.iter_mut().for_each(|d| *d = 0.0);
            for i in 0..n {
                for j in i + 1..n {
                    let d: Vec2 = [y[2 * i] - y[2 * j], y[2 * i + 1] - y[2 * j + 1]];
                    if singular {
                        let distance = norm(reduce(d));
                        if distance < SINGULAR_RADIUS {
                            return Err(Error::NearCollision { t, distance });
                        }
                    }
                    let k = self.kernel.velocity_at(d);
                    dy[2 * i] += xi[j] * k[0];
                    dy[2 * i + 1] += xi[j] * k[1];
                    dy[2 * j] -= xi[i] * k[0];
                    dy[2 * j + 1] -= xi[i] * k[1];
                }
            }
            Ok(())
        };
        let fail = |e: OdeFailure, y: &[f64]| match e {
            OdeFailure::StepUnderflow { t } => Error::NearCollision {
                t,
                distance: flat_min_distance(y),
            },
            other => Error::from(other),
        };
        let y0 = x.flat_coords();
        let mut ode = Dopri5::new(0.0, &y0, self.params.ode_options(1.0), &mut f)
            .map_err(|e| fail(e, &y0))?;
        let mut out = Vec::with_capacity(times.len());
        for &t_end in times {
            while ode.t() < t_end {
                if let Err(e) = ode.step(t_end, &mut f) {
                    return Err(fail(e, ode.y()));
                }
                let distance = flat_min_distance(ode.y());
                if distance < radius {
                    return Err(Error::NearCollision { t: ode.t(), distance });
                }
            }
            out.push(x.with_flat_coords(ode.y()));
        }
        if singular && x.is_admissible() {
            let h0 = pair_energy_unchecked(self.green(), x);
            let h1 = pair_energy_unchecked(self.green(), out.last().expect("nonempty"));
            let drift = relative_drift(2.0 * h0, 2.0 * h1);
            if drift > 1e-8 {
                log::warn!("deterministic flow: relative energy drift {drift:e}");
            } else {
                log::debug!("deterministic flow: relative energy drift {drift:e}");
            }
        }
        Ok(out)
    }

    pub fn single_vortex_trajectory(
        &self,
        x: &Configuration,
        i: usize,
        times: &[f64],
    ) -> Result<Trajectory> {
        check_index(x, i)?;
        check_times(times)?;
        let mut samples = Vec::with_capacity(times.len());
        let mut state = x.clone();
        let mut at = 0.0;
        for &t in times {
            state = self.advance_single(&state, i, 1.0, t - at)?;
            at = t;
            samples.push(state.clone());
        }
        Trajectory::new(times.to_vec(), samples, FlowKind::Single { i }, None)
    }

    /// One full sweep `Φ^(N)_{τ/m} ∘ … ∘ Φ^(1)_{τ/m}` starting at slot `first`.
    fn sweep(
        &self,
        x: &Configuration,
        m: usize,
        sched: &mut TauSchedule,
        first: usize,
    ) -> Result<Configuration> {
        let mut state = x.clone();
        for s in first..first + x.len() {
            let tau = sched.get(s);
            state = self.advance_single(&state, s % x.len(), 1.0, tau / m as f64)?;
        }
        Ok(state)
    }

    /// Φ^m_t: ⌊mt⌋ sweeps of single-vortex flows with durations τ_k/m.
    pub fn jumping_flow(
        &self,
        x: &Configuration,
        t: f64,
        m: usize,
        sched: &mut TauSchedule,
    ) -> Result<Configuration> {
        check_time(t)?;
        check_m(m)?;
        let sweeps = whole(m as f64 * t);
        let mut state = x.clone();
        for l in 0..sweeps {
            state = self.sweep(&state, m, sched, l * x.len())?;
        }
        Ok(state)
    }

    pub fn jumping_trajectory(
        &self,
        x: &Configuration,
        times: &[f64],
        m: usize,
        sched: &mut TauSchedule,
    ) -> Result<Trajectory> {
        check_times(times)?;
        check_m(m)?;
        let mut state = x.clone();
        let mut done = 0;
        let mut samples = Vec::with_capacity(times.len());
        for &t in times {
            let target = whole(m as f64 * t);
            while done < target {
                state = self.sweep(&state, m, sched, done * x.len())?;
                done += 1;
            }
            samples.push(state.clone());
        }
        Trajectory::new(
            times.to_vec(),
            samples,
            FlowKind::Jumping { m },
            Some(sched.reference()),
        )
    }

    /// Slot `k` of Ψ^m: vortex `k mod N` moves with speed `N τ_{k+1}` for
    /// `dt ≤ 1/(Nm)` units of time.
    fn slot(
        &self,
        x: &Configuration,
        sched: &mut TauSchedule,
        k: usize,
        dt: f64,
    ) -> Result<Configuration> {
        let n = x.len();
        let speed = n as f64 * sched.get(k);
        self.advance_single(x, k % n, speed, dt)
    }

    /// Ψ^m_t: on slot `[k/(Nm), (k+1)/(Nm))` only vortex `k mod N` moves, with
    /// velocity `N τ_{k+1} v_{k mod N}`.
    pub fn interpolated_flow(
        &self,
        x: &Configuration,
        t: f64,
        m: usize,
        sched: &mut TauSchedule,
    ) -> Result<Configuration> {
        Ok(self
            .interpolated_states(x, &[t], m, sched)?
            .pop()
            .expect("one sample"))
    }

    pub fn interpolated_trajectory(
        &self,
        x: &Configuration,
        times: &[f64],
        m: usize,
        sched: &mut TauSchedule,
    ) -> Result<Trajectory> {
        let samples = self.interpolated_states(x, times, m, sched)?;
        Trajectory::new(
            times.to_vec(),
            samples,
            FlowKind::Interpolated { m },
            Some(sched.reference()),
        )
    }

    fn interpolated_states(
        &self,
        x: &Configuration,
        times: &[f64],
        m: usize,
        sched: &mut TauSchedule,
    ) -> Result<Vec<Configuration>> {
        check_times(times)?;
        check_m(m)?;
        let nm = (x.len() * m) as f64;
        let slot_len = 1.0 / nm;
        let mut state = x.clone();
        let mut done = 0;
        let mut out = Vec::with_capacity(times.len());
        for &t in times {
            let target = whole(nm * t);
            while done < target {
                state = self.slot(&state, sched, done, slot_len)?;
                done += 1;
            }
            let rest = t - done as f64 / nm;
            if rest > SLOT_EPS * slot_len {
                out.push(self.slot(&state, sched, done, rest)?);
            } else {
                out.push(state.clone());
            }
        }
        Ok(out)
    }
}
