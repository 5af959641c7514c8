//! Cylinders `C = B + H` with base `B` in `E = H⊥`, and the cross-sectional
//! volume `crv_K(C) = vol(B) / vol(P_E K)`.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::body::{ConvexBody, Polytope};
use crate::error::{Error, Result};
use crate::frame::{orthonormalize, Frame};
use crate::sampling::{rng_for, uniform_sphere, Estimate};
use crate::special::{cap_volume, omega};

/// Margin used by strict-interior membership (tangency stays legal).
pub const INTERIOR_MARGIN: f64 = 1e-12;
/// Slack used by closed membership.
pub const BOUNDARY_SLACK: f64 = 1e-12;

/// A base region, written in the coordinates of the cylinder's frame.
#[derive(Debug, Clone, PartialEq)]
pub enum CylinderBase {
    Polytope(Polytope),
    Disk { center: DVector<f64>, radius: f64 },
    /// `{z ∈ B_2 : ⟨z, pole⟩ ≥ cos δ}`; with `two_sided` the mirror cap
    /// `⟨z, pole⟩ ≤ -cos δ` is included as well.
    Cap { pole: DVector<f64>, delta: f64, two_sided: bool },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
enum BaseRepr {
    Polytope { vertices: Vec<Vec<f64>> },
    Disk { center: Vec<f64>, radius: f64 },
    Cap { pole: Vec<f64>, delta: f64, #[serde(default)] two_sided: bool },
}

impl CylinderBase {
    /// Interval `[a, b]` as a one-dimensional polytope base.
    pub fn interval(a: f64, b: f64) -> Result<CylinderBase> {
        if !(b > a) {
            return Err(Error::DegenerateBody(format!("interval [{a}, {b}]")));
        }
        Ok(CylinderBase::Polytope(Polytope::new(vec![
            DVector::from_element(1, a),
            DVector::from_element(1, b),
        ])?))
    }

    pub fn disk(center: DVector<f64>, radius: f64) -> Result<CylinderBase> {
        if !(radius > 0.0) {
            return Err(Error::DegenerateBody(format!("disk radius {radius}")));
        }
        Ok(CylinderBase::Disk { center, radius })
    }

    pub fn cap(pole: DVector<f64>, delta: f64, two_sided: bool) -> Result<CylinderBase> {
        if !(delta > 0.0 && delta < FRAC_PI_2) {
            return Err(Error::Domain(format!("cap angle {delta} outside (0, π/2)")));
        }
        if (pole.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::Invalid("cap pole must be a unit vector".into()));
        }
        Ok(CylinderBase::Cap { pole, delta, two_sided })
    }

    pub fn dim(&self) -> usize {
        match self {
            CylinderBase::Polytope(p) => p.dim(),
            CylinderBase::Disk { center, .. } => center.len(),
            CylinderBase::Cap { pole, .. } => pole.len(),
        }
    }

    pub fn contains(&self, z: &[f64], slack: f64) -> bool {
        match self {
            CylinderBase::Polytope(p) => p.hull().contains_slice(z, slack),
            CylinderBase::Disk { center, radius } => {
                let r2: f64 = center.iter().zip(z).map(|(c, y)| (y - c) * (y - c)).sum();
                r2.sqrt() <= radius + slack
            }
            CylinderBase::Cap { pole, delta, two_sided } => {
                let t: f64 = pole.iter().zip(z).map(|(a, b)| a * b).sum();
                let t = if *two_sided { t.abs() } else { t };
                let n2: f64 = z.iter().map(|y| y * y).sum();
                t >= delta.cos() - slack && n2.sqrt() <= 1.0 + slack
            }
        }
    }

    /// Volume in the base's own dimension (exact for disks and caps).
    pub fn volume(&self) -> Result<Estimate> {
        let m = self.dim();
        match self {
            CylinderBase::Polytope(p) => ConvexBody::Polytope(p.clone()).volume(),
            CylinderBase::Disk { radius, .. } => Ok(Estimate::exact(omega(m) * radius.powi(m as i32))),
            CylinderBase::Cap { delta, two_sided, .. } => {
                let one = cap_volume(m, *delta)?;
                Ok(Estimate::exact(if *two_sided { 2.0 * one } else { one }))
            }
        }
    }

    /// Support function of the base (for arbitrary, not necessarily unit, `u`).
    pub fn support(&self, u: &DVector<f64>) -> f64 {
        match self {
            CylinderBase::Polytope(p) => p.points().iter().map(|v| v.dot(u)).fold(f64::NEG_INFINITY, f64::max),
            CylinderBase::Disk { center, radius } => center.dot(u) + radius * u.norm(),
            CylinderBase::Cap { pole, delta, two_sided } => {
                let n = u.norm();
                if n == 0.0 {
                    return 0.0;
                }
                let one = |p: &DVector<f64>| {
                    let theta = (p.dot(u) / n).clamp(-1.0, 1.0).acos();
                    n * (theta - delta).max(0.0).cos()
                };
                if *two_sided {
                    one(pole).max(one(&-pole))
                } else {
                    one(pole)
                }
            }
        }
    }

    /// Linear image `A B`; disks and caps only admit similarities.
    pub fn linear_image(&self, a: &DMatrix<f64>) -> Result<CylinderBase> {
        match self {
            CylinderBase::Polytope(p) => Ok(CylinderBase::Polytope(Polytope::new(
                p.points().iter().map(|v| a * v).collect(),
            )?)),
            CylinderBase::Disk { center, radius } => {
                let s = similarity_scale(a).ok_or_else(|| {
                    Error::UnsupportedBase("a disk base maps to an ellipse under a non-conformal map".into())
                })?;
                CylinderBase::disk(a * center, radius * s)
            }
            CylinderBase::Cap { pole, delta, two_sided } => {
                let s = similarity_scale(a)
                    .filter(|s| (s - 1.0).abs() < 1e-9)
                    .ok_or_else(|| Error::UnsupportedBase("a cap base only admits orthogonal maps".into()))?;
                let _ = s;
                CylinderBase::cap((a * pole).normalize(), *delta, *two_sided)
            }
        }
    }

    /// Axis-aligned box containing the base.
    pub fn bounding_box(&self) -> (DVector<f64>, DVector<f64>) {
        let m = self.dim();
        let mut lo = DVector::zeros(m);
        let mut hi = DVector::zeros(m);
        for i in 0..m {
            let e = DVector::from_fn(m, |r, _| if r == i { 1.0 } else { 0.0 });
            hi[i] = self.support(&e);
            lo[i] = -self.support(&-e);
        }
        (lo, hi)
    }
}

fn similarity_scale(a: &DMatrix<f64>) -> Option<f64> {
    let g = a.tr_mul(a);
    let s2 = g[(0, 0)];
    let dev = (&g - DMatrix::identity(g.nrows(), g.ncols()) * s2).amax();
    (s2 > 0.0 && dev <= 1e-9 * s2).then(|| s2.sqrt())
}

impl From<CylinderBase> for BaseRepr {
    fn from(b: CylinderBase) -> BaseRepr {
        let vec = |v: &DVector<f64>| v.iter().copied().collect::<Vec<_>>();
        match b {
            CylinderBase::Polytope(p) => BaseRepr::Polytope {
                vertices: p.points().iter().map(vec).collect(),
            },
            CylinderBase::Disk { center, radius } => BaseRepr::Disk {
                center: vec(&center),
                radius,
            },
            CylinderBase::Cap { pole, delta, two_sided } => BaseRepr::Cap {
                pole: vec(&pole),
                delta,
                two_sided,
            },
        }
    }
}

impl TryFrom<BaseRepr> for CylinderBase {
    type Error = Error;
    fn try_from(r: BaseRepr) -> Result<CylinderBase> {
        match r {
            BaseRepr::Polytope { vertices } => Ok(CylinderBase::Polytope(Polytope::new(
                vertices.into_iter().map(DVector::from_vec).collect(),
            )?)),
            BaseRepr::Disk { center, radius } => CylinderBase::disk(DVector::from_vec(center), radius),
            BaseRepr::Cap { pole, delta, two_sided } => CylinderBase::cap(DVector::from_vec(pole), delta, two_sided),
        }
    }
}

/// A k-codimensional cylinder: `x ∈ C ⇔ Eᵀx ∈ B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CylinderRepr", into = "CylinderRepr")]
pub struct Cylinder {
    k: usize,
    frame: Frame,
    base: CylinderBase,
    /// `E · pole` for cap bases, used as a cheap first membership test.
    pole_ambient: Option<DVector<f64>>,
}

#[derive(Serialize, Deserialize)]
struct CylinderRepr {
    k: usize,
    frame: Frame,
    base: BaseRepr,
}

impl From<Cylinder> for CylinderRepr {
    fn from(c: Cylinder) -> CylinderRepr {
        CylinderRepr {
            k: c.k,
            frame: c.frame,
            base: c.base.into(),
        }
    }
}

impl TryFrom<CylinderRepr> for Cylinder {
    type Error = Error;
    fn try_from(r: CylinderRepr) -> Result<Cylinder> {
        let cyl = Cylinder::new(r.frame, r.base.try_into()?)?;
        if cyl.k != r.k {
            return Err(Error::Invalid(format!("k = {} but the frame implies {}", r.k, cyl.k)));
        }
        Ok(cyl)
    }
}

impl Cylinder {
    /// Cylinder over `base` (in `frame` coordinates); `k = d - rank(frame)`.
    pub fn new(frame: Frame, base: CylinderBase) -> Result<Cylinder> {
        let d = frame.ambient_dim();
        let m = frame.rank();
        if m >= d {
            return Err(Error::FullDimensional(d));
        }
        if base.dim() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: base.dim(),
            });
        }
        let pole_ambient = match &base {
            CylinderBase::Cap { pole, .. } => Some(frame.embed(pole)),
            _ => None,
        };
        Ok(Cylinder {
            k: d - m,
            frame,
            base,
            pole_ambient,
        })
    }

    /// Slab `{x : a ≤ ⟨x, u⟩ ≤ b}` for a unit vector `u`.
    pub fn plank(u: &DVector<f64>, a: f64, b: f64) -> Result<Cylinder> {
        let frame = orthonormalize(std::slice::from_ref(u))?;
        if (u.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::Invalid("plank normal must be a unit vector".into()));
        }
        Cylinder::new(frame, CylinderBase::interval(a, b)?)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn ambient_dim(&self) -> usize {
        self.frame.ambient_dim()
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn base(&self) -> &CylinderBase {
        &self.base
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Closed membership.
    pub fn contains(&self, x: &DVector<f64>) -> Result<bool> {
        self.check(x.as_slice())?;
        let mut buf = vec![0.0; self.frame.rank()];
        Ok(self.contains_with(x.as_slice(), &mut buf, BOUNDARY_SLACK))
    }

    /// Strict-interior membership (packing semantics).
    pub fn contains_strict(&self, x: &DVector<f64>) -> Result<bool> {
        self.check(x.as_slice())?;
        let mut buf = vec![0.0; self.frame.rank()];
        Ok(self.contains_with(x.as_slice(), &mut buf, -INTERIOR_MARGIN))
    }

    /// Membership with signed slack (positive widens, negative shrinks),
    /// using `buf` (length `d - k`) as scratch. No dimension checks.
    pub fn contains_with(&self, x: &[f64], buf: &mut [f64], slack: f64) -> bool {
        if let (Some(p), CylinderBase::Cap { delta, two_sided, .. }) = (&self.pole_ambient, &self.base) {
            let t: f64 = p.iter().zip(x).map(|(a, b)| a * b).sum();
            let t = if *two_sided { t.abs() } else { t };
            if t < delta.cos() - slack {
                return false;
            }
        }
        self.frame.coords_into(x, buf);
        self.base.contains(buf, slack)
    }

    /// `crv_K(C) = vol_{d-k}(B) / vol_{d-k}(P_E K)`.
    pub fn crv(&self, body: &ConvexBody) -> Result<Estimate> {
        let shadow = body.project(&self.frame)?;
        let den = shadow.volume()?;
        if !(den.value > 0.0) {
            return Err(Error::DegenerateProjection);
        }
        Ok(self.base.volume()?.ratio(den))
    }

    /// Whether `B ⊆ P_E K` up to `tol`. Exact for polytope bases and for any
    /// base inside a polytope or ball shadow; otherwise support functions are
    /// compared along at least 10³ directions.
    pub fn base_contained(&self, body: &ConvexBody, tol: f64) -> Result<bool> {
        let shadow = body.project(&self.frame)?;
        let m = self.frame.rank();
        if let CylinderBase::Polytope(p) = &self.base {
            return Ok(p.points().iter().all(|v| shadow.contains(v, tol)));
        }
        match &shadow {
            ConvexBody::Polytope(sp) => Ok(sp
                .hull()
                .halfspaces()
                .iter()
                .all(|(a, b)| self.base.support(a) <= b + tol)),
            ConvexBody::Ball(b) => Ok(match &self.base {
                CylinderBase::Disk { center, radius } => (center - &b.center).norm() + radius <= b.radius + tol,
                CylinderBase::Cap { .. } if b.center.norm() == 0.0 => b.radius >= 1.0 - tol,
                _ => support_dominated(&self.base, &shadow, m, tol),
            }),
            ConvexBody::Ellipsoid(_) => Ok(support_dominated(&self.base, &shadow, m, tol)),
        }
    }

    /// Image `T C` of the cylinder under an invertible linear map.
    pub fn transform(&self, t: &DMatrix<f64>) -> Result<Cylinder> {
        let d = self.ambient_dim();
        if t.nrows() != d || t.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: t.nrows() });
        }
        let inv_t = t
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::DegenerateBody("singular transform".into()))?;
        // y ∈ TC ⇔ Eᵀ T⁻¹ y ∈ B; with M = T⁻ᵀ E = E' R this reads E'ᵀ y ∈ R⁻ᵀ B
        let m = inv_t.transpose() * self.frame.matrix();
        let cols: Vec<DVector<f64>> = m.column_iter().map(|c| c.into_owned()).collect();
        let new_frame = orthonormalize(&cols)?;
        let r = new_frame.matrix().tr_mul(&m);
        let a = r
            .transpose()
            .try_inverse()
            .ok_or_else(|| Error::DegenerateBody("singular frame transform".into()))?;
        Cylinder::new(new_frame, self.base.linear_image(&a)?)
    }

    /// `C̄ = C ∩ K`, with membership predicates and a rejection sampler.
    pub fn restrict<'a>(&'a self, body: &'a ConvexBody) -> Restricted<'a> {
        Restricted { cylinder: self, body }
    }
}

fn support_dominated(base: &CylinderBase, shadow: &ConvexBody, m: usize, tol: f64) -> bool {
    let dirs: Vec<DVector<f64>> = match m {
        1 => vec![DVector::from_element(1, 1.0), DVector::from_element(1, -1.0)],
        2 => (0..1024)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / 1024.0;
                DVector::from_column_slice(&[t.cos(), t.sin()])
            })
            .collect(),
        _ => {
            let mut rng = rng_for(0xba5e, m as u64);
            (0..4096).map(|_| uniform_sphere(&mut rng, m)).collect()
        }
    };
    dirs.iter().all(|u| base.support(u) <= shadow.support(u) + tol)
}

/// Budget of consecutive misses before a restricted sampler gives up.
pub const RESTRICT_BUDGET: usize = 100_000;

pub struct Restricted<'a> {
    cylinder: &'a Cylinder,
    body: &'a ConvexBody,
}

impl Restricted<'_> {
    pub fn contains(&self, x: &DVector<f64>) -> bool {
        self.body.contains(x, BOUNDARY_SLACK) && self.cylinder.contains(x).unwrap_or(false)
    }

    pub fn contains_interior(&self, x: &DVector<f64>) -> bool {
        self.body.contains_strict_slice(x.as_slice(), INTERIOR_MARGIN) && self.cylinder.contains_strict(x).unwrap_or(false)
    }

    /// Uniform point of `C ∩ K`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DVector<f64>> {
        let s = self.body.sampler();
        for _ in 0..RESTRICT_BUDGET {
            let x = s.sample(rng)?;
            if self.cylinder.contains(&x)? {
                return Ok(x);
            }
        }
        Err(Error::EmptyIntersection(RESTRICT_BUDGET))
    }

    /// Monte Carlo volume of `C ∩ K` from `n` uniform points of `K`.
    pub fn volume_mc<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Result<Estimate> {
        let s = self.body.sampler();
        let mut hits = 0usize;
        for _ in 0..n {
            if self.cylinder.contains(&s.sample(rng)?)? {
                hits += 1;
            }
        }
        let p = hits as f64 / n as f64;
        let vol = self.body.volume()?.value;
        Ok(Estimate {
            value: p * vol,
            std_error: (p * (1.0 - p) / n as f64).sqrt() * vol,
        })
    }
}
