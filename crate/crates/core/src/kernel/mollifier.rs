//! Radial cutoff χ_δ and the regularized kernel K_δ = (1 − χ_δ)K.

use serde::{Deserialize, Serialize};

use super::green::GreenEvaluator;
use crate::error::{Error, Result};
use crate::torus::{reduce, TorusPoint, Vec2};

/// Quintic smoothstep bump: 1 for `r <= δ/2`, 0 for `r >= δ`, C² in between.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mollifier {
    delta: f64,
}

impl Mollifier {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 0.25) {
            return Err(Error::invalid(format!("delta must lie in (0, 1/4], got {delta}")));
        }
        Ok(Mollifier { delta })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// χ_δ as a function of the distance to the origin.
    #[inline]
    pub fn chi_radial(&self, r: f64) -> f64 {
        let s = r / self.delta;
        if s <= 0.5 {
            1.0
        } else if s >= 1.0 {
            0.0
        } else {
            let t = 2.0 * s - 1.0;
            1.0 - t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
        }
    }

    pub fn chi(&self, p: TorusPoint) -> f64 {
        self.chi_radial(p.distance_to_origin())
    }
}

impl GreenEvaluator {
    /// K_δ at a raw displacement. Never singular.
    #[inline]
    pub fn regularized_at(&self, d: Vec2, m: &Mollifier) -> Vec2 {
        let x = reduce(d);
        let r = x[0].hypot(x[1]);
        let damp = 1.0 - m.chi_radial(r);
        if damp == 0.0 {
            return [0.0, 0.0];
        }
        let k = self.biot_savart_at(x);
        [damp * k[0], damp * k[1]]
    }

    pub fn regularized_kernel(&self, p: TorusPoint, delta: f64) -> Result<Vec2> {
        let m = Mollifier::new(delta)?;
        Ok(self.regularized_at(p.coords(), &m))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_delta() {
        assert!(Mollifier::new(0.0).is_err());
        assert!(Mollifier::new(0.3).is_err());
        assert!(Mollifier::new(f64::NAN).is_err());
        assert!(Mollifier::new(0.25).is_ok());
    }

    #[test]
    fn bump_shape() {
        let m = Mollifier::new(0.1).unwrap();
        assert_eq!(m.chi_radial(0.0), 1.0);
        assert_eq!(m.chi_radial(0.05), 1.0);
        assert_eq!(m.chi_radial(0.1), 0.0);
        assert_eq!(m.chi_radial(0.3), 0.0);
        assert!((m.chi_radial(0.075) - 0.5).abs() < 1e-15);
        // C¹ and C² at the junctions: one-sided difference quotients vanish
        let h = 1e-6;
        for edge in [0.05, 0.1] {
            let d1 = (m.chi_radial(edge + h) - m.chi_radial(edge - h)) / (2.0 * h);
            assert!(d1.abs() < 1e-4, "derivative at {edge}: {d1}");
        }
    }
}
