//! Material layouts: the object, its complementary layer, the core, and the
//! vacuum exterior.
//!
//! Radially symmetric isotropic coefficients are sums of power laws
//! `Σ cᵢ rᵖⁱ`. That class is closed under the Kelvin push-forward, so layouts
//! built from such objects have closed-form layers that the mode solver can
//! integrate directly. Anisotropic or non-radial objects are carried as tensor
//! closures and support the algebraic checks only.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::geomap::{
    check_admissible_pair, push_tensor, DiffeoMap, GeomapError, Point, TensorPair,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MediaError {
    #[error("invalid radii: {0}")]
    Radii(String),
    #[error("delta must be finite and nonnegative, got {0}")]
    Delta(f64),
    #[error("object is not uniformly elliptic with constant {constant}: eigenvalue {value} at r = {radius}")]
    Ellipticity {
        constant: f64,
        value: f64,
        radius: f64,
    },
    #[error("object profile must cover [{expected_min}, {expected_max}] without gaps: {detail}")]
    Profile {
        expected_min: f64,
        expected_max: f64,
        detail: String,
    },
    #[error("layout contains anisotropic or non-radial regions and cannot be {0}")]
    NotRadial(&'static str),
    #[error("layout was built without reflecting maps")]
    NoMaps,
    #[error(transparent)]
    Geomap(#[from] GeomapError),
}

/// `coef · r^power`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerTerm {
    pub coef: Complex64,
    pub power: f64,
}

/// Sum of power-law terms in the radius.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RadialCoefficient {
    pub terms: Vec<PowerTerm>,
}

impl RadialCoefficient {
    pub fn constant(c: Complex64) -> Self {
        Self {
            terms: vec![PowerTerm { coef: c, power: 0.0 }],
        }
    }

    pub fn real(c: f64) -> Self {
        Self::constant(Complex64::new(c, 0.0))
    }

    pub fn eval(&self, r: f64) -> Complex64 {
        self.terms.iter().fold(Complex64::new(0.0, 0.0), |acc, t| {
            acc + if t.power == 0.0 {
                t.coef
            } else {
                t.coef * r.powf(t.power)
            }
        })
    }

    pub fn derivative(&self, r: f64) -> Complex64 {
        self.terms.iter().fold(Complex64::new(0.0, 0.0), |acc, t| {
            acc + if t.power == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                t.coef * (t.power * r.powf(t.power - 1.0))
            }
        })
    }

    /// `Some(c)` if every term is constant (the sum is then `c`).
    pub fn as_constant(&self) -> Option<Complex64> {
        if self.terms.iter().all(|t| t.power == 0.0) {
            Some(self.terms.iter().map(|t| t.coef).sum())
        } else {
            None
        }
    }

    /// Coefficient of the Kelvin image about the sphere of radius `radius`:
    /// `a(r) ↦ -(R²/r²) a(R²/r)`.
    pub fn kelvin_image(&self, radius: f64) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|t| PowerTerm {
                    coef: -t.coef * radius.powf(2.0 * t.power + 2.0),
                    power: -t.power - 2.0,
                })
                .collect(),
        }
        .simplified()
    }

    pub fn plus_constant(&self, c: Complex64) -> Self {
        let mut terms = self.terms.clone();
        terms.push(PowerTerm { coef: c, power: 0.0 });
        Self { terms }.simplified()
    }

    /// Merge terms with equal powers and drop zero coefficients.
    pub fn simplified(&self) -> Self {
        let mut terms: Vec<PowerTerm> = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            match terms.iter_mut().find(|u| u.power == t.power) {
                Some(u) => u.coef += t.coef,
                None => terms.push(*t),
            }
        }
        terms.retain(|t| t.coef != Complex64::new(0.0, 0.0));
        if terms.is_empty() {
            terms.push(PowerTerm {
                coef: Complex64::new(0.0, 0.0),
                power: 0.0,
            });
        }
        terms.sort_by(|a, b| a.power.total_cmp(&b.power));
        Self { terms }
    }

    fn to_json(&self) -> Value {
        match self.as_constant() {
            Some(c) => json!([c.re, c.im]),
            None => Value::Array(
                self.terms
                    .iter()
                    .map(|t| json!({"coef": [t.coef.re, t.coef.im], "power": t.power}))
                    .collect(),
            ),
        }
    }
}

pub type TensorField = Arc<dyn Fn(&Point) -> TensorPair + Send + Sync>;

/// Material in one radial region.
#[derive(Clone)]
pub enum Material {
    Isotropic {
        eps: RadialCoefficient,
        mu: RadialCoefficient,
    },
    Tensor(TensorField),
}

impl fmt::Debug for Material {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Material::Isotropic { eps, mu } => f
                .debug_struct("Isotropic")
                .field("eps", eps)
                .field("mu", mu)
                .finish(),
            Material::Tensor(_) => write!(f, "Tensor(..)"),
        }
    }
}

impl Material {
    pub fn vacuum() -> Self {
        Self::constant(Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0))
    }

    pub fn constant(eps: Complex64, mu: Complex64) -> Self {
        Material::Isotropic {
            eps: RadialCoefficient::constant(eps),
            mu: RadialCoefficient::constant(mu),
        }
    }

    pub fn at(&self, y: &Point) -> TensorPair {
        match self {
            Material::Isotropic { eps, mu } => {
                let r = y.norm();
                TensorPair::isotropic(eps.eval(r), mu.eval(r))
            }
            Material::Tensor(f) => f(y),
        }
    }
}

/// A material on a radial shell `r_min <= r < r_max`.
#[derive(Debug, Clone)]
pub struct ProfilePiece {
    pub r_min: f64,
    pub r_max: f64,
    pub material: Material,
}

/// The object to hide, given on `[r₂, 2r₂]`, with its ellipticity constant `Λ`.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    pub pieces: Vec<ProfilePiece>,
    pub ellipticity: f64,
}

impl RadialProfile {
    /// Vacuum object: the trivial case whose cloak must be invisible.
    pub fn vacuum(r2: f64) -> Self {
        Self::constant(r2, Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0), 1.0)
    }

    pub fn constant(r2: f64, eps: Complex64, mu: Complex64, ellipticity: f64) -> Self {
        Self {
            pieces: vec![ProfilePiece {
                r_min: r2,
                r_max: 2.0 * r2,
                material: Material::constant(eps, mu),
            }],
            ellipticity,
        }
    }

    pub fn tensor(r2: f64, field: TensorField, ellipticity: f64) -> Self {
        Self {
            pieces: vec![ProfilePiece {
                r_min: r2,
                r_max: 2.0 * r2,
                material: Material::Tensor(field),
            }],
            ellipticity,
        }
    }

    fn check(&self, r2: f64) -> Result<(), MediaError> {
        let err = |detail: String| MediaError::Profile {
            expected_min: r2,
            expected_max: 2.0 * r2,
            detail,
        };
        let first = self.pieces.first().ok_or_else(|| err("no pieces".into()))?;
        let last = self.pieces.last().unwrap();
        let tol = 1e-12 * r2;
        if (first.r_min - r2).abs() > tol || (last.r_max - 2.0 * r2).abs() > tol {
            return Err(err(format!("spans [{}, {}]", first.r_min, last.r_max)));
        }
        for w in self.pieces.windows(2) {
            if (w[0].r_max - w[1].r_min).abs() > tol {
                return Err(err(format!("gap at r = {}", w[0].r_max)));
            }
        }
        if self.pieces.iter().any(|p| !(p.r_max > p.r_min)) {
            return Err(err("empty piece".into()));
        }
        self.check_ellipticity()
    }

    /// Real parts of the tensors must have eigenvalues in `[1/Λ, Λ]`.
    pub fn check_ellipticity(&self) -> Result<(), MediaError> {
        let lam = self.ellipticity;
        if !(lam >= 1.0) {
            return Err(MediaError::Ellipticity {
                constant: lam,
                value: lam,
                radius: f64::NAN,
            });
        }
        let dirs = [
            Point::new(0.0, 0.0, 1.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(0.0, 1.0, 0.0),
            Point::new(1.0, 1.0, 1.0).normalize(),
            Point::new(-0.3, 0.8, -0.52).normalize(),
        ];
        for p in &self.pieces {
            for i in 0..=16 {
                let r = p.r_min + (p.r_max - p.r_min) * (i as f64 + 0.5) / 17.5;
                for d in &dirs {
                    let t = p.material.at(&(d * r));
                    for m in [t.eps, t.mu] {
                        let re = m.map(|c| c.re);
                        let sym = (re + re.transpose()) * 0.5;
                        for v in sym.symmetric_eigenvalues().iter() {
                            if *v < 1.0 / lam - 1e-12 || *v > lam + 1e-12 {
                                return Err(MediaError::Ellipticity {
                                    constant: lam,
                                    value: *v,
                                    radius: r,
                                });
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Role of a region inside a layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionRole {
    Core,
    Complementary,
    Object,
    Buffer,
    Exterior,
}

#[derive(Debug, Clone)]
pub struct LayoutRegion {
    pub r_min: f64,
    /// `f64::INFINITY` for the exterior.
    pub r_max: f64,
    pub role: RegionRole,
    pub material: Material,
}

/// Isotropic radial layer, the form consumed by the mode solver.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialLayer {
    pub r_min: f64,
    pub r_max: f64,
    pub eps: RadialCoefficient,
    pub mu: RadialCoefficient,
}

/// Full-space material description.
#[derive(Clone)]
pub struct MaterialLayout {
    /// `[r₁, r₂, r₃]`; all zero for layouts that are not cloaking schemes.
    pub radii: [f64; 3],
    pub delta: f64,
    pub regions: Vec<LayoutRegion>,
    maps: Option<(DiffeoMap, DiffeoMap)>,
    object: Option<RadialProfile>,
}

impl fmt::Debug for MaterialLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MaterialLayout")
            .field("radii", &self.radii)
            .field("delta", &self.delta)
            .field("regions", &self.regions)
            .finish()
    }
}

fn check_scheme_inputs(r2: f64, r3: f64, delta: f64) -> Result<(), MediaError> {
    if !(r2 > 0.0 && r2.is_finite() && r3.is_finite()) || r3 <= 2.0 * r2 {
        return Err(MediaError::Radii(format!(
            "need r3 > 2 r2 > 0, got r2 = {r2}, r3 = {r3}"
        )));
    }
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(MediaError::Delta(delta));
    }
    Ok(())
}

/// Object pieces followed by the vacuum buffer `[2r₂, r₃]`.
fn extended_object(object: &RadialProfile, r2: f64, r3: f64) -> Vec<ProfilePiece> {
    let mut pieces = object.pieces.clone();
    pieces.push(ProfilePiece {
        r_min: 2.0 * r2,
        r_max: r3,
        material: Material::vacuum(),
    });
    pieces
}

/// Complementary layer, core, object, buffer and exterior for the Kelvin maps
/// `F` about `r₂` and `G` about `r₃`.
pub fn build_kelvin_scheme(
    object: &RadialProfile,
    r2: f64,
    r3: f64,
    delta: f64,
) -> Result<MaterialLayout, MediaError> {
    check_scheme_inputs(r2, r3, delta)?;
    object.check(r2)?;
    let r1 = r2 * r2 / r3;
    let lambda = r3 * r3 / (r2 * r2);
    let f = DiffeoMap::kelvin(r2)?;
    let g = DiffeoMap::kelvin(r3)?;
    let f_inv = f.inverse_map();
    let ext = extended_object(object, r2, r3);
    let idelta = Complex64::new(0.0, delta);

    let mut regions = vec![LayoutRegion {
        r_min: 0.0,
        r_max: r1,
        role: RegionRole::Core,
        material: Material::constant(Complex64::new(lambda, 0.0), Complex64::new(lambda, 0.0)),
    }];
    // Images of the extended object pieces, innermost image first.
    for piece in ext.iter().rev() {
        let material = match &piece.material {
            Material::Isotropic { eps, mu } => Material::Isotropic {
                eps: eps.kelvin_image(r2).plus_constant(idelta),
                mu: mu.kelvin_image(r2).plus_constant(idelta),
            },
            Material::Tensor(field) => {
                complementary_tensor(f_inv.clone(), field.clone(), delta)
            }
        };
        regions.push(LayoutRegion {
            r_min: r2 * r2 / piece.r_max,
            r_max: r2 * r2 / piece.r_min,
            role: RegionRole::Complementary,
            material,
        });
    }
    for (i, piece) in ext.iter().enumerate() {
        regions.push(LayoutRegion {
            r_min: piece.r_min,
            r_max: piece.r_max,
            role: if i + 1 == ext.len() {
                RegionRole::Buffer
            } else {
                RegionRole::Object
            },
            material: piece.material.clone(),
        });
    }
    regions.push(LayoutRegion {
        r_min: r3,
        r_max: f64::INFINITY,
        role: RegionRole::Exterior,
        material: Material::vacuum(),
    });
    snap_boundaries(&mut regions);
    Ok(MaterialLayout {
        radii: [r1, r2, r3],
        delta,
        regions,
        maps: Some((f, g)),
        object: Some(object.clone()),
    })
}

fn complementary_tensor(f_inv: DiffeoMap, field: TensorField, delta: f64) -> Material {
    let idelta = Complex64::new(0.0, delta);
    Material::Tensor(Arc::new(move |y: &Point| {
        let mut t = push_tensor(&f_inv, |x: &Point| field(x), y).unwrap_or(TensorPair {
            eps: nan_matrix(),
            mu: nan_matrix(),
        });
        for i in 0..3 {
            t.eps[(i, i)] += idelta;
            t.mu[(i, i)] += idelta;
        }
        t
    }))
}

fn nan_matrix() -> crate::geomap::CMatrix {
    crate::geomap::CMatrix::repeat(Complex64::new(f64::NAN, f64::NAN))
}

/// Make adjacent region boundaries bitwise equal.
fn snap_boundaries(regions: &mut [LayoutRegion]) {
    for i in 1..regions.len() {
        regions[i].r_min = regions[i - 1].r_max;
    }
}

/// Layout for an admissible reflecting pair `(F, G)`: core `F⁻¹_* G⁻¹_* I`,
/// complementary layer `F⁻¹_*(object) + iδI`, object, buffer and exterior.
///
/// Kelvin pairs with isotropic radial objects are routed to the closed form.
pub fn build_general_scheme(
    object: &RadialProfile,
    r2: f64,
    r3: f64,
    delta: f64,
    f: &DiffeoMap,
    g: &DiffeoMap,
) -> Result<MaterialLayout, MediaError> {
    check_scheme_inputs(r2, r3, delta)?;
    object.check(r2)?;
    if f.kelvin_radius() == Some(r2) && g.kelvin_radius() == Some(r3) {
        return build_kelvin_scheme(object, r2, r3, delta);
    }
    let report = check_admissible_pair(f, g, r2, r3, 64, 0x5eed)?;
    let r1 = report.inner_radius;
    let ext = extended_object(object, r2, r3);
    let ext_field = {
        let ext = ext.clone();
        move |x: &Point| {
            let r = x.norm();
            ext.iter()
                .find(|p| r >= p.r_min && r < p.r_max)
                .unwrap_or(ext.last().unwrap())
                .material
                .at(x)
        }
    };
    let core_map = f.inverse_map().after(&g.inverse_map());
    let core = Material::Tensor(Arc::new(move |y: &Point| {
        push_tensor(&core_map, |_: &Point| TensorPair::identity(), y).unwrap_or(TensorPair {
            eps: nan_matrix(),
            mu: nan_matrix(),
        })
    }));
    let middle = complementary_tensor(f.inverse_map(), Arc::new(ext_field), delta);
    let mut regions = vec![
        LayoutRegion {
            r_min: 0.0,
            r_max: r1,
            role: RegionRole::Core,
            material: core,
        },
        LayoutRegion {
            r_min: r1,
            r_max: r2,
            role: RegionRole::Complementary,
            material: middle,
        },
    ];
    for (i, piece) in ext.iter().enumerate() {
        regions.push(LayoutRegion {
            r_min: piece.r_min,
            r_max: piece.r_max,
            role: if i + 1 == ext.len() {
                RegionRole::Buffer
            } else {
                RegionRole::Object
            },
            material: piece.material.clone(),
        });
    }
    regions.push(LayoutRegion {
        r_min: r3,
        r_max: f64::INFINITY,
        role: RegionRole::Exterior,
        material: Material::vacuum(),
    });
    snap_boundaries(&mut regions);
    Ok(MaterialLayout {
        radii: [r1, r2, r3],
        delta,
        regions,
        maps: Some((f.clone(), g.clone())),
        object: Some(object.clone()),
    })
}

/// Result of the complementary-identity check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityReport {
    /// Largest Frobenius deviation over both checks and both tensors.
    pub max_deviation: f64,
    /// Deviation of `(G∘F)_*` of the core from the identity.
    pub core_deviation: f64,
    /// Deviation of `F_*` of the complementary layer from the extended object.
    pub layer_deviation: f64,
    pub samples: usize,
    /// True when no points were sampled; the deviation is then vacuous.
    pub degenerate: bool,
}

impl MaterialLayout {
    /// Vacuum everywhere.
    pub fn vacuum() -> Self {
        Self::layered(&[]).expect("empty layer list is valid")
    }

    /// Concentric isotropic layers `(r_max, ε, μ)` from the origin outwards,
    /// vacuum beyond the last one.
    pub fn layered(layers: &[(f64, RadialCoefficient, RadialCoefficient)]) -> Result<Self, MediaError> {
        let mut regions = Vec::with_capacity(layers.len() + 1);
        let mut r_min = 0.0;
        for (r_max, eps, mu) in layers {
            if !(*r_max > r_min) {
                return Err(MediaError::Radii(format!("layer radii must increase, got {r_max} after {r_min}")));
            }
            regions.push(LayoutRegion {
                r_min,
                r_max: *r_max,
                role: RegionRole::Object,
                material: Material::Isotropic {
                    eps: eps.clone(),
                    mu: mu.clone(),
                },
            });
            r_min = *r_max;
        }
        regions.push(LayoutRegion {
            r_min,
            r_max: f64::INFINITY,
            role: RegionRole::Exterior,
            material: Material::vacuum(),
        });
        Ok(Self {
            radii: [0.0; 3],
            delta: 0.0,
            regions,
            maps: None,
            object: None,
        })
    }

    /// The object alone in vacuum, without core or complementary layer.
    pub fn object_only(object: &RadialProfile, r2: f64) -> Result<Self, MediaError> {
        object.check(r2)?;
        let mut regions = vec![LayoutRegion {
            r_min: 0.0,
            r_max: r2,
            role: RegionRole::Buffer,
            material: Material::vacuum(),
        }];
        for p in &object.pieces {
            regions.push(LayoutRegion {
                r_min: p.r_min,
                r_max: p.r_max,
                role: RegionRole::Object,
                material: p.material.clone(),
            });
        }
        regions.push(LayoutRegion {
            r_min: 2.0 * r2,
            r_max: f64::INFINITY,
            role: RegionRole::Exterior,
            material: Material::vacuum(),
        });
        snap_boundaries(&mut regions);
        Ok(Self {
            radii: [0.0, r2, 0.0],
            delta: 0.0,
            regions,
            maps: None,
            object: Some(object.clone()),
        })
    }

    pub fn region_at(&self, r: f64) -> &LayoutRegion {
        self.regions
            .iter()
            .find(|g| r >= g.r_min && r < g.r_max)
            .unwrap_or_else(|| self.regions.last().unwrap())
    }

    pub fn tensor_at(&self, y: &Point) -> TensorPair {
        self.region_at(y.norm()).material.at(y)
    }

    /// Radius beyond which the layout is vacuum.
    pub fn outer_radius(&self) -> f64 {
        self.regions.last().map(|g| g.r_min).unwrap_or(0.0)
    }

    pub fn maps(&self) -> Option<&(DiffeoMap, DiffeoMap)> {
        self.maps.as_ref()
    }

    pub fn object(&self) -> Option<&RadialProfile> {
        self.object.as_ref()
    }

    /// True when some region has a coefficient with negative real part.
    pub fn has_negative_region(&self) -> bool {
        self.regions.iter().any(|g| match &g.material {
            Material::Isotropic { eps, mu } => {
                let r = if g.r_max.is_finite() {
                    0.5 * (g.r_min + g.r_max)
                } else {
                    g.r_min + 1.0
                };
                eps.eval(r).re < 0.0 || mu.eval(r).re < 0.0
            }
            Material::Tensor(_) => g.role == RegionRole::Complementary,
        })
    }

    /// Isotropic layers inside the outer radius, if every region is isotropic.
    pub fn radial_layers(&self) -> Result<Vec<RadialLayer>, MediaError> {
        let mut out = Vec::with_capacity(self.regions.len());
        for g in &self.regions {
            match &g.material {
                Material::Isotropic { eps, mu } => {
                    if g.r_max.is_finite() {
                        out.push(RadialLayer {
                            r_min: g.r_min,
                            r_max: g.r_max,
                            eps: eps.clone(),
                            mu: mu.clone(),
                        });
                    }
                }
                Material::Tensor(_) => return Err(MediaError::NotRadial("solved by the mode solver")),
            }
        }
        Ok(out)
    }

    /// Check `(G∘F)_*` of the core against `I` and `F_*` of the complementary
    /// layer against the extended object at `samples` random points each.
    pub fn verify_key_identity(&self, samples: usize, seed: u64) -> Result<IdentityReport, MediaError> {
        let (f, g) = self.maps.as_ref().ok_or(MediaError::NoMaps)?;
        let object = self.object.as_ref().ok_or(MediaError::NoMaps)?;
        let [_, r2, r3] = self.radii;
        let ext = extended_object(object, r2, r3);
        let gf = g.after(f);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tensor = |x: &Point| self.tensor_at(x);
        let mut core_dev: f64 = 0.0;
        let mut layer_dev: f64 = 0.0;
        for _ in 0..samples {
            let d = loop {
                let v = Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                if v.norm() > 1e-3 && v.norm() <= 1.0 {
                    break v.normalize();
                }
            };
            let y = d * (r3 * rng.gen_range(0.01..0.99));
            let pushed = push_tensor(&gf, tensor, &y)?;
            core_dev = core_dev.max(pushed.distance(&TensorPair::identity()));

            let y = d * rng.gen_range(r2 * (1.0 + 1e-9)..r3 * (1.0 - 1e-9));
            let pushed = push_tensor(f, tensor, &y)?;
            let rr = y.norm();
            let want = ext
                .iter()
                .find(|p| rr >= p.r_min && rr < p.r_max)
                .unwrap_or(ext.last().unwrap())
                .material
                .at(&y);
            layer_dev = layer_dev.max(pushed.distance(&want));
        }
        Ok(IdentityReport {
            max_deviation: core_dev.max(layer_dev),
            core_deviation: core_dev,
            layer_deviation: layer_dev,
            samples,
            degenerate: samples == 0,
        })
    }

    /// `{radii, delta, regions: [{r_min, r_max, eps, mu}]}`. Constant coefficients
    /// are `[re, im]`; radial ones are lists of `{coef: [re, im], power}` terms.
    /// The exterior has `r_max: null`.
    pub fn to_json(&self) -> Result<Value, MediaError> {
        let mut regions = Vec::with_capacity(self.regions.len());
        for g in &self.regions {
            let (eps, mu) = match &g.material {
                Material::Isotropic { eps, mu } => (eps.to_json(), mu.to_json()),
                Material::Tensor(_) => return Err(MediaError::NotRadial("serialized")),
            };
            regions.push(json!({
                "r_min": g.r_min,
                "r_max": if g.r_max.is_finite() { json!(g.r_max) } else { Value::Null },
                "role": g.role,
                "eps": eps,
                "mu": mu,
            }));
        }
        Ok(json!({
            "radii": self.radii,
            "delta": self.delta,
            "regions": regions,
        }))
    }
}
