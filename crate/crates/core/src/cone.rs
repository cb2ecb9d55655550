//! Normed cones supported by the estimators, their norms, polar decomposition
//! and measurable subsets of the unit sphere.
//!
//! Every supported cone is either `R^d` with an `l_p`, Euclidean or sup norm,
//! or the scalar max-cone `([0, inf), max)` whose unit sphere is the single
//! point `{1}`. Elements are plain coordinate slices; the origin is the zero
//! vector and has no direction.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the norm of unit-sphere points supplied by callers.
pub const UNIT_INPUT_TOL: f64 = 1e-9;
/// Tolerance on the norm of directions produced by [`ConeSpec::direction`].
pub const UNIT_OUTPUT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConeKind {
    EuclideanRd,
    LpRd,
    SupRd,
    MaxConeRplus,
}

/// A validated cone description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConeSpecRepr", into = "ConeSpecRepr")]
pub struct ConeSpec {
    kind: ConeKind,
    dimension: usize,
    p: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct ConeSpecRepr {
    kind: ConeKind,
    dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
}

impl TryFrom<ConeSpecRepr> for ConeSpec {
    type Error = Error;

    fn try_from(r: ConeSpecRepr) -> Result<Self> {
        ConeSpec::new(r.kind, r.dimension, r.p)
    }
}

impl From<ConeSpec> for ConeSpecRepr {
    fn from(c: ConeSpec) -> Self {
        ConeSpecRepr {
            kind: c.kind,
            dimension: c.dimension,
            p: c.p,
        }
    }
}

impl ConeSpec {
    pub fn new(kind: ConeKind, dimension: usize, p: Option<f64>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Input("cone dimension must be at least 1".into()));
        }
        match kind {
            ConeKind::LpRd => match p {
                Some(p) if p >= 1.0 && p.is_finite() => {}
                Some(p) => return Err(Error::Input(format!("lp_rd needs finite p >= 1, got {p}"))),
                None => return Err(Error::Input("lp_rd requires p".into())),
            },
            ConeKind::MaxConeRplus if dimension != 1 => {
                return Err(Error::Input("max_cone_rplus has dimension 1".into()));
            }
            _ if p.is_some() => {
                return Err(Error::Input("p is only meaningful for lp_rd".into()));
            }
            _ => {}
        }
        Ok(ConeSpec { kind, dimension, p })
    }

    pub fn euclidean(dimension: usize) -> Result<Self> {
        Self::new(ConeKind::EuclideanRd, dimension, None)
    }

    pub fn lp(dimension: usize, p: f64) -> Result<Self> {
        Self::new(ConeKind::LpRd, dimension, Some(p))
    }

    pub fn sup(dimension: usize) -> Result<Self> {
        Self::new(ConeKind::SupRd, dimension, None)
    }

    pub fn max_cone() -> Self {
        ConeSpec {
            kind: ConeKind::MaxConeRplus,
            dimension: 1,
            p: None,
        }
    }

    pub fn kind(&self) -> ConeKind {
        self.kind
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn p(&self) -> Option<f64> {
        self.p
    }

    /// Checks dimension, finiteness and (for the max-cone) nonnegativity.
    pub fn check_element(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: x.len(),
            });
        }
        if let Some(v) = x.iter().find(|v| !v.is_finite()) {
            return Err(Error::Input(format!("non-finite coordinate {v}")));
        }
        if self.kind == ConeKind::MaxConeRplus && x[0] < 0.0 {
            return Err(Error::Input(format!(
                "max-cone elements are nonnegative, got {}",
                x[0]
            )));
        }
        Ok(())
    }

    pub fn norm(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: x.len(),
            });
        }
        Ok(self.norm_unchecked(x))
    }

    /// Norm without the dimension check; `x.len()` must equal the dimension.
    #[inline]
    pub fn norm_unchecked(&self, x: &[f64]) -> f64 {
        match self.kind {
            ConeKind::EuclideanRd => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
            ConeKind::SupRd => sup_abs(x),
            ConeKind::LpRd => {
                let p = self.p.unwrap_or(2.0);
                let scale = sup_abs(x);
                if scale == 0.0 || !scale.is_finite() {
                    return scale;
                }
                let s: f64 = x.iter().map(|v| (v.abs() / scale).powf(p)).sum();
                scale * s.powf(1.0 / p)
            }
            ConeKind::MaxConeRplus => x[0],
        }
    }

    /// Polar direction `x / ||x||`.
    pub fn direction(&self, x: &[f64]) -> Result<Vec<f64>> {
        let r = self.norm(x)?;
        if r == 0.0 {
            return Err(Error::DegenerateElement(
                "the origin has no direction".into(),
            ));
        }
        if !r.is_finite() {
            return Err(Error::DegenerateElement("infinite norm".into()));
        }
        Ok(self.direction_with_norm(x, r))
    }

    #[inline]
    pub(crate) fn direction_with_norm(&self, x: &[f64], r: f64) -> Vec<f64> {
        match self.kind {
            // The sphere of the max-cone is the single point {1}.
            ConeKind::MaxConeRplus => vec![1.0],
            _ => x.iter().map(|v| v / r).collect(),
        }
    }

    pub fn check_unit(&self, u: &[f64]) -> Result<()> {
        let r = self.norm(u)?;
        if (r - 1.0).abs() > UNIT_INPUT_TOL {
            return Err(Error::Input(format!(
                "point is not on the unit sphere (norm {r})"
            )));
        }
        Ok(())
    }

    pub fn sphere_contains(&self, set: &SphereSet, u: &[f64]) -> Result<bool> {
        self.check_unit(u)?;
        Ok(set.contains_unchecked(u))
    }
}

fn sup_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Owned cone element.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeElement(Vec<f64>);

impl ConeElement {
    pub fn new(spec: &ConeSpec, coords: Vec<f64>) -> Result<Self> {
        spec.check_element(&coords)?;
        Ok(ConeElement(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Deref for ConeElement {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Bound on one coordinate of a unit-sphere point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordBound {
    pub axis: usize,
    pub lo: f64,
    pub hi: f64,
}

/// Subset of the unit sphere.
///
/// Caps use the Euclidean angle between center and point whatever the cone
/// norm is. Caps and boxes are closed; a complement of a closed set is open.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SphereSet {
    Cap {
        center: Vec<f64>,
        angular_radius: f64,
    },
    Box {
        bounds: Vec<CoordBound>,
    },
    FiniteUnion(Vec<SphereSet>),
    Complement(std::boxed::Box<SphereSet>),
    WholeSphere,
}

impl SphereSet {
    pub fn cap(center: Vec<f64>, angular_radius: f64) -> Self {
        SphereSet::Cap {
            center,
            angular_radius,
        }
    }

    pub fn complement(set: SphereSet) -> Self {
        SphereSet::Complement(std::boxed::Box::new(set))
    }

    pub fn union(sets: Vec<SphereSet>) -> Self {
        SphereSet::FiniteUnion(sets)
    }

    pub fn coord_box(bounds: Vec<CoordBound>) -> Self {
        SphereSet::Box { bounds }
    }

    pub fn validate(&self, spec: &ConeSpec) -> Result<()> {
        match self {
            SphereSet::Cap {
                center,
                angular_radius,
            } => {
                spec.check_unit(center)
                    .map_err(|e| Error::Input(format!("cap center: {e}")))?;
                if !(*angular_radius > 0.0 && *angular_radius <= PI) {
                    return Err(Error::Input(format!(
                        "cap radius must lie in (0, pi], got {angular_radius}"
                    )));
                }
                Ok(())
            }
            SphereSet::Box { bounds } => {
                for b in bounds {
                    if b.axis >= spec.dimension() {
                        return Err(Error::Input(format!(
                            "box axis {} out of range for dimension {}",
                            b.axis,
                            spec.dimension()
                        )));
                    }
                    if b.lo.is_nan() || b.hi.is_nan() || b.lo > b.hi {
                        return Err(Error::Input(format!(
                            "box bounds [{}, {}] are not an interval",
                            b.lo, b.hi
                        )));
                    }
                }
                Ok(())
            }
            SphereSet::FiniteUnion(sets) => sets.iter().try_for_each(|s| s.validate(spec)),
            SphereSet::Complement(s) => s.validate(spec),
            SphereSet::WholeSphere => Ok(()),
        }
    }

    /// Membership for a point already known to be on the sphere.
    pub fn contains_unchecked(&self, u: &[f64]) -> bool {
        match self {
            SphereSet::Cap {
                center,
                angular_radius,
            } => euclidean_angle(center, u) <= *angular_radius,
            SphereSet::Box { bounds } => bounds
                .iter()
                .all(|b| u[b.axis] >= b.lo && u[b.axis] <= b.hi),
            SphereSet::FiniteUnion(sets) => sets.iter().any(|s| s.contains_unchecked(u)),
            SphereSet::Complement(s) => !s.contains_unchecked(u),
            SphereSet::WholeSphere => true,
        }
    }

    /// Smallest distance from `u` to a boundary of any constituent cap or
    /// box, in radians for caps and coordinate units for boxes.
    pub fn boundary_distance(&self, u: &[f64]) -> f64 {
        match self {
            SphereSet::Cap {
                center,
                angular_radius,
            } => (euclidean_angle(center, u) - angular_radius).abs(),
            SphereSet::Box { bounds } => bounds
                .iter()
                .map(|b| (u[b.axis] - b.lo).abs().min((u[b.axis] - b.hi).abs()))
                .fold(f64::INFINITY, f64::min),
            SphereSet::FiniteUnion(sets) => sets
                .iter()
                .map(|s| s.boundary_distance(u))
                .fold(f64::INFINITY, f64::min),
            SphereSet::Complement(s) => s.boundary_distance(u),
            SphereSet::WholeSphere => f64::INFINITY,
        }
    }
}

fn euclidean_angle(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return PI;
    }
    (dot / (na * nb)).clamp(-1.0, 1.0).acos()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_norm_of_3_4() {
        let spec = ConeSpec::euclidean(2).unwrap();
        assert_eq!(spec.norm(&[3.0, 4.0]).unwrap(), 5.0);
    }

    #[test]
    fn max_cone_norm_is_identity() {
        assert_eq!(ConeSpec::max_cone().norm(&[2.5]).unwrap(), 2.5);
    }

    #[test]
    fn sup_norm() {
        let spec = ConeSpec::sup(3).unwrap();
        assert_eq!(spec.norm(&[1.0, -2.0, 0.5]).unwrap(), 2.0);
    }

    #[test]
    fn lp_norm_matches_definition() {
        let spec = ConeSpec::lp(3, 3.0).unwrap();
        let x = [1.0, -2.0, 0.5];
        let expected = (1.0f64 + 8.0 + 0.125).powf(1.0 / 3.0);
        assert!((spec.norm(&x).unwrap() - expected).abs() < 1e-14);
        let l1 = ConeSpec::lp(3, 1.0).unwrap();
        assert!((l1.norm(&x).unwrap() - 3.5).abs() < 1e-15);
    }

    #[test]
    fn norm_rejects_wrong_dimension() {
        let spec = ConeSpec::euclidean(2).unwrap();
        assert!(matches!(
            spec.norm(&[1.0, 2.0, 3.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                got: 3
            })
        ));
    }

    #[test]
    fn direction_examples() {
        let spec = ConeSpec::euclidean(2).unwrap();
        let u = spec.direction(&[3.0, 4.0]).unwrap();
        assert!((u[0] - 0.6).abs() < 1e-15 && (u[1] - 0.8).abs() < 1e-15);
        assert!(matches!(
            spec.direction(&[0.0, 0.0]),
            Err(Error::DegenerateElement(_))
        ));
        assert_eq!(ConeSpec::max_cone().direction(&[7.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn spec_validation() {
        assert!(ConeSpec::euclidean(0).is_err());
        assert!(ConeSpec::lp(2, 0.5).is_err());
        assert!(ConeSpec::new(ConeKind::LpRd, 2, None).is_err());
        assert!(ConeSpec::new(ConeKind::MaxConeRplus, 2, None).is_err());
        assert!(ConeSpec::new(ConeKind::SupRd, 2, Some(2.0)).is_err());
    }

    #[test]
    fn element_validation() {
        let spec = ConeSpec::euclidean(2).unwrap();
        assert!(ConeElement::new(&spec, vec![f64::NAN, 1.0]).is_err());
        assert!(ConeElement::new(&spec, vec![f64::INFINITY, 1.0]).is_err());
        assert!(ConeElement::new(&ConeSpec::max_cone(), vec![-1.0]).is_err());
        assert!(ConeElement::new(&ConeSpec::max_cone(), vec![0.0]).is_ok());
    }

    #[test]
    fn sphere_set_examples() {
        let spec = ConeSpec::euclidean(2).unwrap();
        let u = [0.6, 0.8];
        let cap = SphereSet::cap(vec![1.0, 0.0], PI / 2.0);
        assert!(spec.sphere_contains(&cap, &u).unwrap());
        let empty = SphereSet::complement(SphereSet::WholeSphere);
        assert!(!spec.sphere_contains(&empty, &u).unwrap());
        let b = SphereSet::coord_box(vec![CoordBound {
            axis: 0,
            lo: 0.5,
            hi: 1.0,
        }]);
        assert!(spec.sphere_contains(&b, &u).unwrap());
        assert!(matches!(
            spec.sphere_contains(&cap, &[1.0, 1.0]),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn set_validation() {
        let spec = ConeSpec::euclidean(2).unwrap();
        assert!(SphereSet::cap(vec![2.0, 0.0], 0.5).validate(&spec).is_err());
        assert!(SphereSet::cap(vec![1.0, 0.0], 0.0).validate(&spec).is_err());
        assert!(SphereSet::cap(vec![1.0, 0.0], 4.0).validate(&spec).is_err());
        let bad_axis = SphereSet::coord_box(vec![CoordBound {
            axis: 2,
            lo: 0.0,
            hi: 1.0,
        }]);
        assert!(bad_axis.validate(&spec).is_err());
        let nested = SphereSet::union(vec![
            SphereSet::WholeSphere,
            SphereSet::complement(SphereSet::cap(vec![0.0, 1.0], 1.0)),
        ]);
        assert!(nested.validate(&spec).is_ok());
    }

    #[test]
    fn json_shapes() {
        let spec: ConeSpec =
            serde_json::from_str(r#"{"kind":"lp_rd","dimension":3,"p":1.5}"#).unwrap();
        assert_eq!(spec.p(), Some(1.5));
        assert!(serde_json::from_str::<ConeSpec>(r#"{"kind":"lp_rd","dimension":3}"#).is_err());
        let s = serde_json::to_string(&ConeSpec::euclidean(2).unwrap()).unwrap();
        assert_eq!(s, r#"{"kind":"euclidean_rd","dimension":2}"#);

        let set = SphereSet::union(vec![
            SphereSet::cap(vec![1.0, 0.0], 0.5),
            SphereSet::complement(SphereSet::WholeSphere),
        ]);
        let json = serde_json::to_string(&set).unwrap();
        assert_eq!(
            json,
            r#"{"finite_union":[{"cap":{"center":[1.0,0.0],"angular_radius":0.5}},{"complement":"whole_sphere"}]}"#
        );
        let back: SphereSet = serde_json::from_str(&json).unwrap();
        assert_eq!(back, set);
    }
}
