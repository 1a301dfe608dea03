//! Single-component flows: one vortex advected by the frozen field of the others.

use super::{check_index, check_time, Fault, FlowEngine};
use crate::error::{Error, Result};
use crate::kernel::SINGULAR_RADIUS;
use crate::ode::{Dopri5, OdeFailure};
use crate::torus::{norm, reduce, torus_distance, Configuration, TorusPoint, Vec2};

/// Newton iterations per projection.
const PROJECTION_ITERS: usize = 4;
/// Closure is accepted when the return point lies this close (relative to the
/// orbit size) to the start.
const CLOSURE_REL_TOL: f64 = 1e-6;

struct Sources {
    pos: Vec<Vec2>,
    xi: Vec<f64>,
}

impl FlowEngine {
    #[inline]
    fn frozen_field(&self, s: &Sources, y: Vec2, speed: f64) -> Vec2 {
        let mut v = [0.0; 2];
        for (p, xi) in s.pos.iter().zip(&s.xi) {
            let k = self.kernel.velocity_at([y[0] - p[0], y[1] - p[1]]);
            v[0] += xi * k[0];
            v[1] += xi * k[1];
        }
        if let Some(Fault::ScaleVelocity { axis, factor }) = self.fault {
            v[axis] *= factor;
        }
        [speed * v[0], speed * v[1]]
    }

    /// Stream function `ψ(y) = Σ_j ξ_j G(y − x_j)` and its gradient.
    fn stream(&self, s: &Sources, y: Vec2) -> (f64, Vec2, f64) {
        let g = self.green();
        let (mut psi, mut grad, mut scale) = (0.0, [0.0; 2], 0.0);
        for (p, xi) in s.pos.iter().zip(&s.xi) {
            let (v, d) = g.value_and_grad_at([y[0] - p[0], y[1] - p[1]]);
            psi += xi * v;
            scale += (xi * v).abs();
            grad[0] += xi * d[0];
            grad[1] += xi * d[1];
        }
        (psi, grad, scale)
    }

    /// Newton projection along ∇ψ onto `{ψ = psi0}`.
    fn project(&self, s: &Sources, mut y: Vec2, psi0: f64) -> Vec2 {
        for _ in 0..PROJECTION_ITERS {
            let (psi, grad, scale) = self.stream(s, y);
            let r = psi - psi0;
            let g2 = grad[0] * grad[0] + grad[1] * grad[1];
            if r.abs() <= 4.0 * f64::EPSILON * (scale + 1.0) || g2 == 0.0 {
                break;
            }
            y[0] -= r * grad[0] / g2;
            y[1] -= r * grad[1] / g2;
        }
        y
    }

    fn captured(&self, sources: &Sources, y: Vec2) -> bool {
        sources
            .pos
            .iter()
            .any(|p| norm(reduce([y[0] - p[0], y[1] - p[1]])) < self.params.collision_radius)
    }

    /// Φ^(i)_s: move vortex `i` for time `s` in the field of the others.
    pub fn single_vortex_flow(&self, x: &Configuration, i: usize, s: f64) -> Result<Configuration> {
        check_time(s)?;
        self.advance_single(x, i, 1.0, s)
    }

    /// Integrate `dy/dθ = speed · v_i(y)` for `θ ∈ [0, duration]`.
    pub(crate) fn advance_single(
        &self,
        x: &Configuration,
        i: usize,
        speed: f64,
        duration: f64,
    ) -> Result<Configuration> {
        check_index(x, i)?;
        if duration == 0.0 || speed == 0.0 {
            return Ok(x.clone());
        }
        let singular = self.kernel.is_singular();
        let pos = x.positions();
        if singular {
            for j in 0..pos.len() {
                for k in j + 1..pos.len() {
                    let distance = torus_distance(pos[j], pos[k]);
                    if distance < SINGULAR_RADIUS {
                        return Err(Error::SingularConfiguration { i: j, j: k, distance });
                    }
                }
            }
        }
        let sources = Sources {
            pos: (0..pos.len()).filter(|&j| j != i).map(|j| pos[j].coords()).collect(),
            xi: (0..pos.len()).filter(|&j| j != i).map(|j| x.intensity(j)).collect(),
        };
        let y0 = pos[i].coords();
        let mut f = |_t: f64, y: &[f64], dy: &mut [f64]| {
            let v = self.frozen_field(&sources, [y[0], y[1]], speed);
            dy[0] = v[0];
            dy[1] = v[1];
            Ok(())
        };
        let project = singular && self.params.projection && self.fault.is_none();
        let psi0 = project.then(|| self.stream(&sources, y0).0);
        let v0 = self.frozen_field(&sources, y0, speed);
        let v0n = norm(v0);
        let e = if v0n > 0.0 { [v0[0] / v0n, v0[1] / v0n] } else { [0.0; 2] };
        let mut watch_closure = self.params.period_reduction && v0n > 0.0;

        let opts = self.params.ode_options(speed);
        let mut ode = Dopri5::new(0.0, &y0, opts, &mut f).map_err(Error::from)?;
        let mut t_end = duration;
        let mut q_prev = 0.0;
        let mut max_disp: f64 = 0.0;
        while ode.t() < t_end {
            match ode.step(t_end, &mut f) {
                Ok(()) => {}
                Err(e) if self.fault.is_some() => {
                    // a faulty field may collapse onto a source; leave the vortex there
                    log::debug!("faulty flow stalled at θ = {}: {e:?}", ode.t());
                    break;
                }
                Err(e) => return Err(step_error(e)),
            }
            let mut y = [ode.y()[0], ode.y()[1]];
            if self.fault.is_some() && self.captured(&sources, y) {
                log::debug!("faulty flow collapsed onto a source at θ = {}", ode.t());
                break;
            }
            if let Some(p0) = psi0 {
                y = self.project(&sources, y, p0);
                ode.set_state(&y, &mut f).map_err(Error::from)?;
            }
            if !watch_closure {
                continue;
            }
            let d = reduce([y[0] - y0[0], y[1] - y0[1]]);
            let q = d[0] * e[0] + d[1] * e[1];
            max_disp = max_disp.max(norm(d));
            if q_prev < 0.0 && q >= 0.0 {
                let (period, miss) = locate_return(&ode, y0, e);
                if miss <= CLOSURE_REL_TOL * max_disp {
                    watch_closure = false;
                    if duration > 2.0 * period {
                        let rem = duration - (duration / period).floor() * period;
                        log::trace!("orbit closes after {period:e}; skipping to remainder {rem:e}");
                        ode = Dopri5::new(0.0, &y0, opts, &mut f).map_err(Error::from)?;
                        t_end = rem;
                        continue;
                    }
                }
            }
            q_prev = q;
        }
        let y = ode.y();
        Ok(x.with_position(i, TorusPoint::wrap([y[0], y[1]])?))
    }
}

fn step_error(f: OdeFailure) -> Error {
    Error::from(f)
}

/// Bisect the dense output of the last step for the zero of
/// `(y(t) − y0)·e`; returns the crossing time and the distance to `y0` there.
fn locate_return(ode: &Dopri5, y0: Vec2, e: Vec2) -> (f64, f64) {
    let mut buf = [0.0; 2];
    let mut at = |t: f64| {
        ode.dense_into(t, &mut buf);
        reduce([buf[0] - y0[0], buf[1] - y0[1]])
    };
    let q = |d: Vec2| d[0] * e[0] + d[1] * e[1];
    let (mut a, mut b) = (ode.t_prev(), ode.t());
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if q(at(mid)) < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    let t = 0.5 * (a + b);
    (t, norm(at(t)))
}
