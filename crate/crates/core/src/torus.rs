//! Geometry of the flat torus T² = [0,1)² and of vortex configurations on it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Plain 2-vector used for displacements and velocities.
pub type Vec2 = [f64; 2];

#[inline]
fn wrap_coord(x: f64) -> f64 {
    let r = x - x.floor();
    // x slightly below an integer rounds up to exactly 1.0
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Minimal lift of a coordinate difference into (-1/2, 1/2].
#[inline]
pub fn reduce_coord(d: f64) -> f64 {
    d - (d - 0.5).ceil()
}

/// Minimal lift of a raw displacement, componentwise in (-1/2, 1/2].
#[inline]
pub fn reduce(d: Vec2) -> Vec2 {
    [reduce_coord(d[0]), reduce_coord(d[1])]
}

#[inline]
pub fn norm(v: Vec2) -> f64 {
    v[0].hypot(v[1])
}

/// A point of T², always stored in its canonical representative in [0,1)².
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(into = "[f64; 2]")]
pub struct TorusPoint {
    u: f64,
    v: f64,
}

impl From<TorusPoint> for [f64; 2] {
    fn from(p: TorusPoint) -> Self {
        [p.u, p.v]
    }
}

impl<'de> Deserialize<'de> for TorusPoint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = <[f64; 2]>::deserialize(d)?;
        TorusPoint::wrap(raw).map_err(serde::de::Error::custom)
    }
}

impl TorusPoint {
    pub const ORIGIN: TorusPoint = TorusPoint { u: 0.0, v: 0.0 };

    /// Canonical representative of a raw planar point.
    pub fn wrap(p: Vec2) -> Result<Self> {
        if !(p[0].is_finite() && p[1].is_finite()) {
            return Err(Error::invalid(format!("non-finite coordinates {p:?}")));
        }
        Ok(Self::wrap_finite(p))
    }

    /// `wrap` without the finiteness check, for integrator hot paths.
    #[inline]
    pub(crate) fn wrap_finite(p: Vec2) -> Self {
        TorusPoint {
            u: wrap_coord(p[0]),
            v: wrap_coord(p[1]),
        }
    }

    #[inline]
    pub fn u(&self) -> f64 {
        self.u
    }

    #[inline]
    pub fn v(&self) -> f64 {
        self.v
    }

    #[inline]
    pub fn coords(&self) -> Vec2 {
        [self.u, self.v]
    }

    #[inline]
    pub fn neg(&self) -> TorusPoint {
        TorusPoint::wrap_finite([-self.u, -self.v])
    }

    #[inline]
    pub fn translate(&self, by: Vec2) -> TorusPoint {
        TorusPoint::wrap_finite([self.u + by[0], self.v + by[1]])
    }

    /// Euclidean distance to the origin of T².
    #[inline]
    pub fn distance_to_origin(&self) -> f64 {
        norm(reduce(self.coords()))
    }
}

/// Shortest lift `r` of `a - b`: `wrap(b + r) == a` and each `|r_i| <= 1/2`.
///
/// Components at exactly one half are returned as `+1/2`.
#[inline]
pub fn min_displacement(a: TorusPoint, b: TorusPoint) -> Vec2 {
    reduce([a.u - b.u, a.v - b.v])
}

/// Geodesic distance between two points of T².
#[inline]
pub fn torus_distance(a: TorusPoint, b: TorusPoint) -> f64 {
    norm(min_displacement(a, b))
}

/// A point-vortex configuration: N >= 2 positions with nonzero intensities.
///
/// Coincident positions are representable; [`Configuration::is_admissible`]
/// tells whether the configuration lies in the collision-free set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConfigurationRepr", into = "ConfigurationRepr")]
pub struct Configuration {
    positions: Vec<TorusPoint>,
    intensities: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigurationRepr {
    xi: Vec<f64>,
    pos: Vec<[f64; 2]>,
}

impl TryFrom<ConfigurationRepr> for Configuration {
    type Error = Error;

    fn try_from(r: ConfigurationRepr) -> Result<Self> {
        let positions = r
            .pos
            .into_iter()
            .map(TorusPoint::wrap)
            .collect::<Result<Vec<_>>>()?;
        Configuration::new(positions, r.xi)
    }
}

impl From<Configuration> for ConfigurationRepr {
    fn from(c: Configuration) -> Self {
        ConfigurationRepr {
            xi: c.intensities,
            pos: c.positions.into_iter().map(Into::into).collect(),
        }
    }
}

impl Configuration {
    pub fn new(positions: Vec<TorusPoint>, intensities: Vec<f64>) -> Result<Self> {
        if positions.len() != intensities.len() {
            return Err(Error::invalid(format!(
                "{} positions but {} intensities",
                positions.len(),
                intensities.len()
            )));
        }
        if positions.len() < 2 {
            return Err(Error::invalid("a configuration needs at least two vortices"));
        }
        if let Some(k) = intensities.iter().position(|xi| *xi == 0.0 || !xi.is_finite()) {
            return Err(Error::invalid(format!(
                "intensity {k} must be finite and nonzero, got {}",
                intensities[k]
            )));
        }
        Ok(Configuration {
            positions,
            intensities,
        })
    }

    /// Build from raw planar coordinates, wrapping each onto T².
    pub fn from_raw(raw: &[Vec2], intensities: &[f64]) -> Result<Self> {
        let positions = raw
            .iter()
            .map(|p| TorusPoint::wrap(*p))
            .collect::<Result<Vec<_>>>()?;
        Configuration::new(positions, intensities.to_vec())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    #[inline]
    pub fn positions(&self) -> &[TorusPoint] {
        &self.positions
    }

    #[inline]
    pub fn position(&self, i: usize) -> TorusPoint {
        self.positions[i]
    }

    #[inline]
    pub fn intensities(&self) -> &[f64] {
        &self.intensities
    }

    #[inline]
    pub fn intensity(&self, i: usize) -> f64 {
        self.intensities[i]
    }

    /// Copy with vortex `i` moved to `p`.
    pub fn with_position(&self, i: usize, p: TorusPoint) -> Configuration {
        let mut out = self.clone();
        out.positions[i] = p;
        out
    }

    /// Copy with the given intensities (same N required).
    pub fn with_intensities(&self, intensities: &[f64]) -> Result<Configuration> {
        if intensities.len() != self.len() {
            return Err(Error::invalid("intensity count mismatch"));
        }
        Configuration::new(self.positions.clone(), intensities.to_vec())
    }

    /// Rigid translation of every vortex by `by`.
    pub fn translate(&self, by: Vec2) -> Configuration {
        Configuration {
            positions: self.positions.iter().map(|p| p.translate(by)).collect(),
            intensities: self.intensities.clone(),
        }
    }

    /// Whether all positions are pairwise distinct.
    pub fn is_admissible(&self) -> bool {
        self.closest_pair().is_none_or(|(_, _, d)| d > 0.0)
    }

    /// The closest unordered pair `(i, j, distance)` with `i < j`.
    pub fn closest_pair(&self) -> Option<(usize, usize, f64)> {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                let d = torus_distance(self.positions[i], self.positions[j]);
                if best.is_none_or(|b| d < b.2) {
                    best = Some((i, j, d));
                }
            }
        }
        best
    }

    /// Row-major flat coordinates `[u_1, v_1, u_2, v_2, ...]`.
    pub fn flat_coords(&self) -> Vec<f64> {
        self.positions.iter().flat_map(|p| p.coords()).collect()
    }

    /// Same intensities, positions wrapped from the flat coordinate vector.
    pub(crate) fn with_flat_coords(&self, flat: &[f64]) -> Configuration {
        debug_assert_eq!(flat.len(), 2 * self.len());
        Configuration {
            positions: flat
                .chunks_exact(2)
                .map(|c| TorusPoint::wrap_finite([c[0], c[1]]))
                .collect(),
            intensities: self.intensities.clone(),
        }
    }

    pub(crate) fn check_compatible(&self, other: &Configuration) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::invalid(format!(
                "configurations have {} and {} vortices",
                self.len(),
                other.len()
            )));
        }
        if self.intensities != other.intensities {
            return Err(Error::invalid("configurations carry different intensities"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Product torus metric: square root of the summed squared per-coordinate
/// periodic distances over all vortices.
pub fn config_distance(x: &Configuration, y: &Configuration) -> Result<f64> {
    x.check_compatible(y)?;
    Ok(config_distance_unchecked(x, y))
}

pub(crate) fn config_distance_unchecked(x: &Configuration, y: &Configuration) -> f64 {
    x.positions
        .iter()
        .zip(&y.positions)
        .map(|(a, b)| {
            let r = min_displacement(*a, *b);
            r[0] * r[0] + r[1] * r[1]
        })
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(u: f64, v: f64) -> TorusPoint {
        TorusPoint::wrap([u, v]).unwrap()
    }

    #[test]
    fn wrap_examples() {
        assert_eq!(pt(0.3, 0.7).coords(), [0.3, 0.7]);
        assert_eq!(pt(1.25, -0.25).coords(), [0.25, 0.75]);
        assert_eq!(pt(3.0, -2.0).coords(), [0.0, 0.0]);
        assert!(TorusPoint::wrap([f64::NAN, 0.0]).is_err());
        assert!(TorusPoint::wrap([0.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn wrap_tiny_negative_stays_below_one() {
        let p = pt(-1e-18, -0.0);
        assert!(p.u() < 1.0 && p.u() >= 0.0);
        assert!(p.v() >= 0.0);
    }

    #[test]
    fn wrap_large_coordinates_without_drift() {
        let p = pt(1e6 + 0.25, -1e6 - 0.25);
        assert!((p.u() - 0.25).abs() < 1e-9);
        assert!((p.v() - 0.75).abs() < 1e-9);
    }

    #[test]
    fn min_displacement_examples() {
        let r = min_displacement(pt(0.1, 0.1), pt(0.9, 0.1));
        assert!((r[0] - 0.2).abs() < 1e-15 && r[1] == 0.0);
        assert_eq!(min_displacement(pt(0.4, 0.2), pt(0.4, 0.2)), [0.0, 0.0]);
        // exact half-period ties resolve to +1/2
        assert_eq!(min_displacement(pt(0.6, 0.0), pt(0.1, 0.5)), [0.5, 0.5]);
        assert_eq!(min_displacement(pt(0.1, 0.5), pt(0.6, 0.0)), [0.5, 0.5]);
    }

    #[test]
    fn config_distance_examples() {
        let x = Configuration::from_raw(&[[0.1, 0.2], [0.3, 0.4]], &[1.0, -1.0]).unwrap();
        assert_eq!(config_distance(&x, &x).unwrap(), 0.0);

        let y = Configuration::from_raw(&[[0.0, 0.2], [0.3, 0.4]], &[1.0, -1.0]).unwrap();
        let a = Configuration::from_raw(&[[0.9, 0.2], [0.3, 0.4]], &[1.0, -1.0]).unwrap();
        assert!((config_distance(&y, &a).unwrap() - 0.1).abs() < 1e-15);

        let p = Configuration::from_raw(&[[0.0, 0.0], [0.25, 0.25]], &[1.0, 1.0]).unwrap();
        let q = Configuration::from_raw(&[[0.5, 0.5], [0.75, 0.75]], &[1.0, 1.0]).unwrap();
        assert!((config_distance(&p, &q).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn config_distance_rejects_mismatch() {
        let x = Configuration::from_raw(&[[0.1, 0.2], [0.3, 0.4]], &[1.0, -1.0]).unwrap();
        let y = Configuration::from_raw(&[[0.1, 0.2], [0.3, 0.4], [0.5, 0.5]], &[1.0, -1.0, 1.0])
            .unwrap();
        assert!(matches!(config_distance(&x, &y), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn configuration_invariants() {
        assert!(Configuration::from_raw(&[[0.1, 0.2]], &[1.0]).is_err());
        assert!(Configuration::from_raw(&[[0.1, 0.2], [0.2, 0.2]], &[1.0, 0.0]).is_err());
        let c = Configuration::from_raw(&[[0.1, 0.2], [0.1, 0.2]], &[1.0, 2.0]).unwrap();
        assert!(!c.is_admissible());
    }

    #[test]
    fn json_shape_and_round_trip() {
        let c = Configuration::from_raw(
            &[[0.1, 0.2], [1.0 / 3.0, std::f64::consts::FRAC_1_SQRT_2]],
            &[1.5, -0.1],
        )
        .unwrap();
        let s = c.to_json().unwrap();
        assert!(s.starts_with("{\"xi\":[1.5,-0.1],\"pos\":[[0.1,0.2],"), "{s}");
        let back = Configuration::from_json(&s).unwrap();
        assert_eq!(back, c);
        assert!(Configuration::from_json(r#"{"xi":[1,1],"pos":[[0,0],[0.5,0.5]],"x":1}"#).is_err());
        assert!(Configuration::from_json(r#"{"xi":[1],"pos":[[0,0]]}"#).is_err());
    }

    fn arb_point() -> impl Strategy<Value = TorusPoint> {
        (0.0..1.0f64, 0.0..1.0f64).prop_map(|(u, v)| pt(u, v))
    }

    fn arb_config(n: usize) -> impl Strategy<Value = Configuration> {
        prop::collection::vec(arb_point(), n)
            .prop_map(move |p| Configuration::new(p, vec![1.0; n]).unwrap())
    }

    proptest! {
        #[test]
        fn displacement_lifts_back(a in arb_point(), b in arb_point()) {
            let r = min_displacement(a, b);
            prop_assert!(r[0].abs() <= 0.5 && r[1].abs() <= 0.5);
            let back = b.translate(r);
            prop_assert!(torus_distance(back, a) < 1e-15);
        }

        #[test]
        fn displacement_antisymmetric(a in arb_point(), b in arb_point()) {
            let r = min_displacement(a, b);
            let s = min_displacement(b, a);
            if r[0].abs() != 0.5 { prop_assert_eq!(r[0], -s[0]); }
            if r[1].abs() != 0.5 { prop_assert_eq!(r[1], -s[1]); }
        }

        #[test]
        fn distance_is_a_metric(x in arb_config(3), y in arb_config(3), z in arb_config(3)) {
            let dxy = config_distance(&x, &y).unwrap();
            let dyx = config_distance(&y, &x).unwrap();
            let dxz = config_distance(&x, &z).unwrap();
            let dzy = config_distance(&z, &y).unwrap();
            prop_assert!(dxy >= 0.0);
            prop_assert!((dxy - dyx).abs() < 1e-15);
            prop_assert!(dxy <= dxz + dzy + 1e-14);
        }

        #[test]
        fn distance_shift_invariant(
            x in arb_config(2), y in arb_config(2),
            k in -3i32..3, l in -3i32..3, idx in 0usize..2,
        ) {
            let shift = |c: &Configuration| {
                let mut raw: Vec<Vec2> = c.positions().iter().map(|p| p.coords()).collect();
                raw[idx][0] += f64::from(k);
                raw[idx][1] += f64::from(l);
                Configuration::from_raw(&raw, c.intensities()).unwrap()
            };
            let d0 = config_distance(&x, &y).unwrap();
            let d1 = config_distance(&shift(&x), &shift(&y)).unwrap();
            prop_assert!((d0 - d1).abs() < 1e-12);
        }
    }
}
