//! Diffeomorphisms of space and the push-forward of material tensors, fields,
//! sources, and tangential boundary data.
//!
//! For `y = T(x)` with Jacobian `A = ∇T(x)` and `J = det A`:
//!
//! | quantity | image at `y` |
//! |---|---|
//! | tensor `m` | `A m Aᵀ / J` |
//! | field `E` | `A⁻ᵀ E` |
//! | source `j` | `j / J` |
//! | tangential data `g` on a surface with normal `ν` | `sign(J) A g / (|J| |A⁻ᵀ ν|)` |
//!
//! If `(E, H)` solves `∇×E = ikμH`, `∇×H = -ikεE + j` then the pushed fields
//! solve the same system with the pushed tensors and source.

mod admissible;
mod residual;

pub use admissible::{check_admissible_pair, inner_radius, AdmissibilityReport};
pub use residual::{
    change_of_variables_residual, curl_residual, elliptic_residual, levi_civita, CovResidual,
    Patch,
};

use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;

pub type Point = Vector3<f64>;
pub type CVector = Vector3<Complex64>;
pub type CMatrix = Matrix3<Complex64>;

/// Relative size of `|det A| / ‖A‖³` below which a Jacobian is treated as singular.
const SINGULAR_RATIO: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeomapError {
    #[error("map is singular at {point:?}")]
    Singular { point: [f64; 3] },
    #[error("point {point:?} is outside the {region} of the map")]
    OutsideRegion { point: [f64; 3], region: &'static str },
    #[error("boundary data is not tangential: |g·ν| = {normal_component:e}")]
    NotTangential { normal_component: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("admissibility condition failed: {condition} ({detail})")]
    Admissibility { condition: &'static str, detail: String },
    #[error("grid too coarse: {points} points per direction, need at least 5")]
    GridTooCoarse { points: usize },
}

/// Coarse description of where a map is defined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    Whole,
    /// Everything except the origin.
    Punctured,
    Ball { radius: f64 },
    Annulus { inner: f64, outer: f64 },
    Exterior { radius: f64 },
}

impl Region {
    pub fn contains(&self, x: &Point) -> bool {
        let r = x.norm();
        match *self {
            Region::Whole => true,
            Region::Punctured => r > 0.0,
            Region::Ball { radius } => r < radius,
            Region::Annulus { inner, outer } => r > inner && r < outer,
            Region::Exterior { radius } => r > radius,
        }
    }
}

type PointFn = dyn Fn(&Point) -> Point + Send + Sync;
type JacobianFn = dyn Fn(&Point) -> Matrix3<f64> + Send + Sync;

/// A user-supplied map. Without an explicit Jacobian, central differences are used.
pub struct CustomMap {
    pub name: String,
    pub forward: Box<PointFn>,
    pub inverse: Box<PointFn>,
    pub jacobian: Option<Box<JacobianFn>>,
}

#[derive(Clone)]
enum MapKind {
    Identity,
    Kelvin { radius: f64 },
    Scaling { factor: f64 },
    /// `outer ∘ inner`
    Composition { outer: Box<DiffeoMap>, inner: Box<DiffeoMap> },
    Inverse(Box<DiffeoMap>),
    Custom(Arc<CustomMap>),
}

/// An invertible smooth map with its domain and codomain descriptors.
#[derive(Clone)]
pub struct DiffeoMap {
    kind: MapKind,
    pub domain: Region,
    pub codomain: Region,
}

impl fmt::Debug for DiffeoMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            MapKind::Identity => write!(f, "Identity"),
            MapKind::Kelvin { radius } => write!(f, "Kelvin(R = {radius})"),
            MapKind::Scaling { factor } => write!(f, "Scaling({factor})"),
            MapKind::Composition { outer, inner } => write!(f, "({outer:?} ∘ {inner:?})"),
            MapKind::Inverse(m) => write!(f, "Inverse({m:?})"),
            MapKind::Custom(c) => write!(f, "Custom({})", c.name),
        }
    }
}

fn arr(x: &Point) -> [f64; 3] {
    [x[0], x[1], x[2]]
}

impl DiffeoMap {
    pub fn identity() -> Self {
        Self {
            kind: MapKind::Identity,
            domain: Region::Whole,
            codomain: Region::Whole,
        }
    }

    /// Inversion in the sphere of the given radius: `x ↦ R² x / |x|²`.
    pub fn kelvin(radius: f64) -> Result<Self, GeomapError> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(GeomapError::InvalidParameter(format!(
                "Kelvin radius must be positive, got {radius}"
            )));
        }
        Ok(Self {
            kind: MapKind::Kelvin { radius },
            domain: Region::Punctured,
            codomain: Region::Punctured,
        })
    }

    /// `x ↦ c x`.
    pub fn scaling(factor: f64) -> Result<Self, GeomapError> {
        if factor == 0.0 || !factor.is_finite() {
            return Err(GeomapError::InvalidParameter(format!(
                "scaling factor must be finite and nonzero, got {factor}"
            )));
        }
        Ok(Self {
            kind: MapKind::Scaling { factor },
            domain: Region::Whole,
            codomain: Region::Whole,
        })
    }

    pub fn custom(map: CustomMap, domain: Region, codomain: Region) -> Self {
        Self {
            kind: MapKind::Custom(Arc::new(map)),
            domain,
            codomain,
        }
    }

    /// Radial map `x ↦ φ(|x|) x/|x|` with analytic Jacobian
    /// `φ'(r) x̂x̂ᵀ + (φ(r)/r)(I - x̂x̂ᵀ)`.
    pub fn radial<P, D, Q>(name: &str, phi: P, dphi: D, phi_inv: Q, domain: Region, codomain: Region) -> Self
    where
        P: Fn(f64) -> f64 + Send + Sync + Clone + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
        Q: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let phi_j = phi.clone();
        Self::custom(
            CustomMap {
                name: name.to_string(),
                forward: Box::new(move |x: &Point| {
                    let r = x.norm();
                    x * (phi(r) / r)
                }),
                inverse: Box::new(move |y: &Point| {
                    let r = y.norm();
                    y * (phi_inv(r) / r)
                }),
                jacobian: Some(Box::new(move |x: &Point| {
                    let r = x.norm();
                    let u = x / r;
                    let uu = u * u.transpose();
                    uu * dphi(r) + (Matrix3::identity() - uu) * (phi_j(r) / r)
                })),
            },
            domain,
            codomain,
        )
    }

    pub fn with_regions(mut self, domain: Region, codomain: Region) -> Self {
        self.domain = domain;
        self.codomain = codomain;
        self
    }

    /// `self ∘ inner`: apply `inner` first.
    pub fn after(&self, inner: &DiffeoMap) -> DiffeoMap {
        DiffeoMap {
            kind: MapKind::Composition {
                outer: Box::new(self.clone()),
                inner: Box::new(inner.clone()),
            },
            domain: inner.domain,
            codomain: self.codomain,
        }
    }

    pub fn inverse_map(&self) -> DiffeoMap {
        let kind = match &self.kind {
            MapKind::Inverse(m) => return (**m).clone(),
            MapKind::Identity => MapKind::Identity,
            MapKind::Kelvin { radius } => MapKind::Kelvin { radius: *radius },
            MapKind::Scaling { factor } => MapKind::Scaling {
                factor: 1.0 / factor,
            },
            _ => MapKind::Inverse(Box::new(self.clone())),
        };
        DiffeoMap {
            kind,
            domain: self.codomain,
            codomain: self.domain,
        }
    }

    /// Radius of the sphere if this is a Kelvin inversion.
    pub fn kelvin_radius(&self) -> Option<f64> {
        match self.kind {
            MapKind::Kelvin { radius } => Some(radius),
            _ => None,
        }
    }

    pub fn scaling_factor(&self) -> Option<f64> {
        match self.kind {
            MapKind::Scaling { factor } => Some(factor),
            MapKind::Identity => Some(1.0),
            _ => None,
        }
    }

    pub fn forward(&self, x: &Point) -> Result<Point, GeomapError> {
        if !self.domain.contains(x) {
            return Err(GeomapError::OutsideRegion {
                point: arr(x),
                region: "domain",
            });
        }
        self.forward_unchecked(x)
    }

    pub fn inverse(&self, y: &Point) -> Result<Point, GeomapError> {
        if !self.codomain.contains(y) {
            return Err(GeomapError::OutsideRegion {
                point: arr(y),
                region: "codomain",
            });
        }
        self.inverse_unchecked(y)
    }

    fn forward_unchecked(&self, x: &Point) -> Result<Point, GeomapError> {
        match &self.kind {
            MapKind::Identity => Ok(*x),
            MapKind::Kelvin { radius } => {
                let r2 = x.norm_squared();
                if r2 == 0.0 {
                    return Err(GeomapError::Singular { point: arr(x) });
                }
                Ok(x * (radius * radius / r2))
            }
            MapKind::Scaling { factor } => Ok(x * *factor),
            MapKind::Composition { outer, inner } => {
                outer.forward_unchecked(&inner.forward_unchecked(x)?)
            }
            MapKind::Inverse(m) => m.inverse_unchecked(x),
            MapKind::Custom(c) => finite((c.forward)(x), x),
        }
    }

    fn inverse_unchecked(&self, y: &Point) -> Result<Point, GeomapError> {
        match &self.kind {
            MapKind::Identity | MapKind::Kelvin { .. } => self.forward_unchecked(y),
            MapKind::Scaling { factor } => Ok(y / *factor),
            MapKind::Composition { outer, inner } => {
                inner.inverse_unchecked(&outer.inverse_unchecked(y)?)
            }
            MapKind::Inverse(m) => m.forward_unchecked(y),
            MapKind::Custom(c) => finite((c.inverse)(y), y),
        }
    }

    /// Jacobian `∇T(x)`, rows indexed by output component.
    pub fn jacobian(&self, x: &Point) -> Result<Matrix3<f64>, GeomapError> {
        match &self.kind {
            MapKind::Identity => Ok(Matrix3::identity()),
            MapKind::Kelvin { radius } => {
                let r2 = x.norm_squared();
                if r2 == 0.0 {
                    return Err(GeomapError::Singular { point: arr(x) });
                }
                let s = radius * radius / r2;
                let u = x / r2.sqrt();
                Ok((Matrix3::identity() - u * u.transpose() * 2.0) * s)
            }
            MapKind::Scaling { factor } => Ok(Matrix3::identity() * *factor),
            MapKind::Composition { outer, inner } => {
                let a = inner.jacobian(x)?;
                let b = outer.jacobian(&inner.forward_unchecked(x)?)?;
                Ok(b * a)
            }
            MapKind::Inverse(m) => {
                let pre = m.inverse_unchecked(x)?;
                m.jacobian(&pre)?
                    .try_inverse()
                    .ok_or(GeomapError::Singular { point: arr(x) })
            }
            MapKind::Custom(c) => match &c.jacobian {
                Some(jac) => Ok(jac(x)),
                None => Ok(central_jacobian(&*c.forward, x)),
            },
        }
    }

    /// `det ∇T(x)` with sign.
    pub fn signed_det(&self, x: &Point) -> Result<f64, GeomapError> {
        Ok(self.jacobian(x)?.determinant())
    }

    /// Jacobian and determinant, rejecting numerically singular points.
    fn regular_jacobian(&self, x: &Point) -> Result<(Matrix3<f64>, f64), GeomapError> {
        let a = self.jacobian(x)?;
        let det = a.determinant();
        let scale = a.norm().powi(3);
        if !det.is_finite() || det.abs() <= SINGULAR_RATIO * scale || scale == 0.0 {
            return Err(GeomapError::Singular { point: arr(x) });
        }
        Ok((a, det))
    }
}

fn finite(y: Point, x: &Point) -> Result<Point, GeomapError> {
    if y.iter().all(|v| v.is_finite()) {
        Ok(y)
    } else {
        Err(GeomapError::Singular { point: arr(x) })
    }
}

fn central_jacobian(f: &PointFn, x: &Point) -> Matrix3<f64> {
    let h = 1e-6 * (1.0 + x.norm());
    let mut a = Matrix3::zeros();
    for j in 0..3 {
        let mut e = Point::zeros();
        e[j] = h;
        let d = (f(&(x + e)) - f(&(x - e))) / (2.0 * h);
        a.set_column(j, &d);
    }
    a
}

pub(crate) fn complexify(a: &Matrix3<f64>) -> CMatrix {
    a.map(|v| Complex64::new(v, 0.0))
}

/// Permittivity and permeability tensors at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TensorPair {
    pub eps: CMatrix,
    pub mu: CMatrix,
}

impl TensorPair {
    pub fn identity() -> Self {
        Self {
            eps: CMatrix::identity(),
            mu: CMatrix::identity(),
        }
    }

    pub fn isotropic(eps: Complex64, mu: Complex64) -> Self {
        Self {
            eps: CMatrix::identity() * eps,
            mu: CMatrix::identity() * mu,
        }
    }

    /// `A m Aᵀ / det A` applied to both tensors.
    pub fn transformed(&self, a: &Matrix3<f64>, det: f64) -> Self {
        let ac = complexify(a);
        let at = ac.transpose();
        Self {
            eps: ac * self.eps * at / Complex64::new(det, 0.0),
            mu: ac * self.mu * at / Complex64::new(det, 0.0),
        }
    }

    /// Largest Frobenius distance over the two tensors.
    pub fn distance(&self, other: &TensorPair) -> f64 {
        (self.eps - other.eps)
            .norm()
            .max((self.mu - other.mu).norm())
    }
}

/// Pushed tensors `T_*(ε, μ)` at `y`, given the tensors as a function on the domain.
pub fn push_tensor<F>(map: &DiffeoMap, tensor: F, y: &Point) -> Result<TensorPair, GeomapError>
where
    F: Fn(&Point) -> TensorPair,
{
    let x = map.inverse(y)?;
    let (a, det) = map.regular_jacobian(&x)?;
    Ok(tensor(&x).transformed(&a, det))
}

/// `(T(x), ∇T(x)⁻ᵀ E)`.
pub fn push_field(map: &DiffeoMap, x: &Point, e: &CVector) -> Result<(Point, CVector), GeomapError> {
    let y = map.forward(x)?;
    let (a, _) = map.regular_jacobian(x)?;
    let inv_t = a
        .try_inverse()
        .ok_or(GeomapError::Singular { point: arr(x) })?
        .transpose();
    Ok((y, complexify(&inv_t) * e))
}

/// `(T(x), j / det ∇T(x))`.
pub fn push_source(map: &DiffeoMap, x: &Point, j: &CVector) -> Result<(Point, CVector), GeomapError> {
    let y = map.forward(x)?;
    let (_, det) = map.regular_jacobian(x)?;
    Ok((y, j / Complex64::new(det, 0.0)))
}

/// Push tangential data `g` at a surface point `x` with unit normal `normal`.
///
/// The image uses Nanson's formula for the surface Jacobian.
pub fn push_boundary(
    map: &DiffeoMap,
    x: &Point,
    normal: &Point,
    g: &CVector,
) -> Result<(Point, CVector), GeomapError> {
    let nu = normal.normalize();
    let gn = g
        .iter()
        .zip(nu.iter())
        .fold(Complex64::new(0.0, 0.0), |acc, (gi, ni)| acc + gi * *ni);
    if gn.norm() > 1e-10 * g.norm().max(f64::MIN_POSITIVE) {
        return Err(GeomapError::NotTangential {
            normal_component: gn.norm(),
        });
    }
    let y = map.forward(x)?;
    let (a, det) = map.regular_jacobian(x)?;
    let inv_t = a
        .try_inverse()
        .ok_or(GeomapError::Singular { point: arr(x) })?
        .transpose();
    let surface = det.abs() * (inv_t * nu).norm();
    let factor = det.signum() / surface;
    Ok((y, complexify(&a) * g * Complex64::new(factor, 0.0)))
}
