//! Convex bodies in closed form (ball, ellipsoid) or as vertex hulls.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::hull::Hull;
use crate::sampling::{mean_and_se, rng_for, uniform_ball, Estimate};
use crate::special::omega;

/// Monte Carlo settings for volumes that have no exact path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub samples: usize,
    pub seed: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            samples: 200_000,
            seed: 0x5eed_cafe,
        }
    }
}

/// Polytopes above this dimension get Monte Carlo volumes.
pub const EXACT_POLYTOPE_DIM: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: DVector<f64>,
    pub radius: f64,
}

/// `{x : (x - c)ᵀ Q (x - c) ≤ 1}` with `Q` symmetric positive definite.
#[derive(Debug, Clone)]
pub struct Ellipsoid {
    center: DVector<f64>,
    shape: DMatrix<f64>,
    inv_shape: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl PartialEq for Ellipsoid {
    fn eq(&self, o: &Self) -> bool {
        self.center == o.center && self.shape == o.shape
    }
}

impl Ellipsoid {
    pub fn new(center: DVector<f64>, shape: DMatrix<f64>) -> Result<Ellipsoid> {
        let d = center.len();
        if shape.nrows() != d || shape.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: shape.nrows(),
            });
        }
        if (&shape - shape.transpose()).amax() > 1e-12 * shape.amax().max(1.0) {
            return Err(Error::Invalid("ellipsoid shape form is not symmetric".into()));
        }
        let shape = (&shape + shape.transpose()) * 0.5;
        let eig = shape.clone().symmetric_eigenvalues();
        if eig.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::DegenerateBody("ellipsoid shape form is not positive definite".into()));
        }
        let chol = Cholesky::new(shape.clone())
            .ok_or_else(|| Error::DegenerateBody("Cholesky factorization failed".into()))?;
        let inv_shape = chol.inverse();
        Ok(Ellipsoid {
            center,
            shape,
            inv_shape,
            chol,
        })
    }

    /// The image `c + T B_2^d` of the unit ball.
    pub fn from_map(center: DVector<f64>, map: &DMatrix<f64>) -> Result<Ellipsoid> {
        let inv = map
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::DegenerateBody("map is singular".into()))?;
        Ellipsoid::new(center, inv.tr_mul(&inv))
    }

    /// Axis-aligned ellipsoid with the given semi-axes.
    pub fn axis_aligned(center: DVector<f64>, semi_axes: &[f64]) -> Result<Ellipsoid> {
        let q = DMatrix::from_diagonal(&DVector::from_iterator(
            semi_axes.len(),
            semi_axes.iter().map(|a| 1.0 / (a * a)),
        ));
        Ellipsoid::new(center, q)
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    /// The form `Q`.
    pub fn shape(&self) -> &DMatrix<f64> {
        &self.shape
    }

    /// `Q⁻¹`, whose Gram restriction describes shadows.
    pub fn inv_shape(&self) -> &DMatrix<f64> {
        &self.inv_shape
    }

    /// A linear map `T` with `self = c + T B_2^d` (`T = L⁻ᵀ` for `Q = LLᵀ`).
    pub fn map(&self) -> DMatrix<f64> {
        let l = self.chol.l();
        l.transpose().try_inverse().expect("Cholesky factor is invertible")
    }

    /// `(x - c)ᵀ Q (x - c)`, at most 1 inside.
    pub fn gauge(&self, x: &DVector<f64>) -> f64 {
        let y = x - &self.center;
        y.dot(&(&self.shape * &y))
    }

    fn gauge_slice(&self, x: &[f64]) -> f64 {
        let d = self.center.len();
        let mut s = 0.0;
        let q = self.shape.as_slice();
        for j in 0..d {
            let yj = x[j] - self.center[j];
            let col = &q[j * d..(j + 1) * d];
            let mut t = 0.0;
            for i in 0..d {
                t += col[i] * (x[i] - self.center[i]);
            }
            s += yj * t;
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct Polytope {
    hull: Hull,
}

impl PartialEq for Polytope {
    fn eq(&self, o: &Self) -> bool {
        self.hull.points() == o.hull.points()
    }
}

impl Polytope {
    pub fn new(vertices: Vec<DVector<f64>>) -> Result<Polytope> {
        let d = vertices.first().map(|v| v.len()).unwrap_or(0);
        if vertices.len() < d + 1 {
            return Err(Error::DegenerateBody(format!(
                "{} vertices cannot span R^{d}",
                vertices.len()
            )));
        }
        let hull = Hull::new(vertices)?;
        if hull.volume() <= 1e-14 * hull.scale().powi(hull.dim() as i32) {
            return Err(Error::DegenerateBody("hull volume is numerically zero".into()));
        }
        Ok(Polytope { hull })
    }

    /// Axis-aligned box `[lo_i, hi_i]`.
    pub fn axis_box(lo: &[f64], hi: &[f64]) -> Result<Polytope> {
        let d = lo.len();
        let verts = (0..1usize << d)
            .map(|m| DVector::from_fn(d, |i, _| if (m >> i) & 1 == 1 { hi[i] } else { lo[i] }))
            .collect();
        Polytope::new(verts)
    }

    pub fn dim(&self) -> usize {
        self.hull.dim()
    }

    /// The points the polytope was built from (not all need be extreme).
    pub fn points(&self) -> &[DVector<f64>] {
        self.hull.points()
    }

    pub fn vertices(&self) -> Vec<DVector<f64>> {
        self.hull.vertex_indices().into_iter().map(|i| self.hull.points()[i].clone()).collect()
    }

    pub fn hull(&self) -> &Hull {
        &self.hull
    }

    /// Volume from the hull triangulation, in any dimension.
    pub fn exact_volume(&self) -> f64 {
        self.hull.volume()
    }

    pub fn bounding_box(&self) -> (DVector<f64>, DVector<f64>) {
        let d = self.dim();
        let mut lo = DVector::from_element(d, f64::INFINITY);
        let mut hi = DVector::from_element(d, f64::NEG_INFINITY);
        for p in self.hull.points() {
            for i in 0..d {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        (lo, hi)
    }
}

/// A convex body in R^d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BodyRepr", into = "BodyRepr")]
pub enum ConvexBody {
    Ball(Ball),
    Ellipsoid(Ellipsoid),
    Polytope(Polytope),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum BodyRepr {
    Ball { center: Vec<f64>, radius: f64 },
    Ellipsoid { center: Vec<f64>, shape: Vec<Vec<f64>> },
    Polytope { vertices: Vec<Vec<f64>> },
}

impl TryFrom<BodyRepr> for ConvexBody {
    type Error = Error;
    fn try_from(r: BodyRepr) -> Result<ConvexBody> {
        match r {
            BodyRepr::Ball { center, radius } => ConvexBody::ball(DVector::from_vec(center), radius),
            BodyRepr::Ellipsoid { center, shape } => {
                let d = center.len();
                if shape.len() != d || shape.iter().any(|row| row.len() != d) {
                    return Err(Error::Invalid("ellipsoid shape must be d × d".into()));
                }
                let q = DMatrix::from_fn(d, d, |i, j| shape[i][j]);
                Ok(ConvexBody::Ellipsoid(Ellipsoid::new(DVector::from_vec(center), q)?))
            }
            BodyRepr::Polytope { vertices } => Ok(ConvexBody::Polytope(Polytope::new(
                vertices.into_iter().map(DVector::from_vec).collect(),
            )?)),
        }
    }
}

impl From<ConvexBody> for BodyRepr {
    fn from(b: ConvexBody) -> BodyRepr {
        match b {
            ConvexBody::Ball(b) => BodyRepr::Ball {
                center: b.center.iter().copied().collect(),
                radius: b.radius,
            },
            ConvexBody::Ellipsoid(e) => BodyRepr::Ellipsoid {
                center: e.center.iter().copied().collect(),
                shape: e.shape.row_iter().map(|r| r.iter().copied().collect()).collect(),
            },
            ConvexBody::Polytope(p) => BodyRepr::Polytope {
                vertices: p.points().iter().map(|v| v.iter().copied().collect()).collect(),
            },
        }
    }
}

impl ConvexBody {
    pub fn ball(center: DVector<f64>, radius: f64) -> Result<ConvexBody> {
        if !(radius > 0.0) || center.is_empty() {
            return Err(Error::DegenerateBody(format!("ball radius {radius}")));
        }
        Ok(ConvexBody::Ball(Ball { center, radius }))
    }

    pub fn unit_ball(d: usize) -> ConvexBody {
        ConvexBody::Ball(Ball {
            center: DVector::zeros(d),
            radius: 1.0,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexBody::Ball(b) => b.center.len(),
            ConvexBody::Ellipsoid(e) => e.center.len(),
            ConvexBody::Polytope(p) => p.dim(),
        }
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: n,
            });
        }
        Ok(())
    }

    /// Support function `h_K(u) = sup_{x ∈ K} ⟨x, u⟩` (positively homogeneous in `u`).
    pub fn support(&self, u: &DVector<f64>) -> f64 {
        match self {
            ConvexBody::Ball(b) => b.center.dot(u) + b.radius * u.norm(),
            ConvexBody::Ellipsoid(e) => e.center.dot(u) + u.dot(&(&e.inv_shape * u)).max(0.0).sqrt(),
            ConvexBody::Polytope(p) => p.points().iter().map(|v| v.dot(u)).fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// Closed membership with slack `tol` (in gauge units for ellipsoids).
    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.contains_slice(x.as_slice(), tol)
    }

    pub fn contains_slice(&self, x: &[f64], tol: f64) -> bool {
        match self {
            ConvexBody::Ball(b) => {
                let r2: f64 = b.center.iter().zip(x).map(|(c, y)| (y - c) * (y - c)).sum();
                r2.sqrt() <= b.radius + tol
            }
            ConvexBody::Ellipsoid(e) => e.gauge_slice(x) <= 1.0 + tol,
            ConvexBody::Polytope(p) => p.hull.contains_slice(x, tol),
        }
    }

    /// Interior membership with margin `margin`.
    pub fn contains_strict_slice(&self, x: &[f64], margin: f64) -> bool {
        match self {
            ConvexBody::Ball(b) => {
                let r2: f64 = b.center.iter().zip(x).map(|(c, y)| (y - c) * (y - c)).sum();
                r2.sqrt() < b.radius - margin
            }
            ConvexBody::Ellipsoid(e) => e.gauge_slice(x) < 1.0 - margin,
            ConvexBody::Polytope(p) => p.hull.contains_slice(x, -margin),
        }
    }

    /// The shadow `P_E K` written in the coordinates of `frame`.
    pub fn project(&self, frame: &Frame) -> Result<ConvexBody> {
        self.check_dim(frame.ambient_dim())?;
        match self {
            ConvexBody::Ball(b) => Ok(ConvexBody::Ball(Ball {
                center: frame.coords(&b.center),
                radius: b.radius,
            })),
            ConvexBody::Ellipsoid(e) => {
                let m = frame.matrix();
                let inv = m.tr_mul(&(&e.inv_shape * m));
                let inv = (&inv + inv.transpose()) * 0.5;
                let shape = inv.try_inverse().ok_or(Error::DegenerateProjection)?;
                let shape = (&shape + shape.transpose()) * 0.5;
                Ok(ConvexBody::Ellipsoid(
                    Ellipsoid::new(frame.coords(&e.center), shape).map_err(|_| Error::DegenerateProjection)?,
                ))
            }
            ConvexBody::Polytope(p) => {
                let pts: Vec<_> = p.vertices().iter().map(|v| frame.coords(v)).collect();
                Polytope::new(pts)
                    .map(ConvexBody::Polytope)
                    .map_err(|_| Error::DegenerateProjection)
            }
        }
    }

    /// Volume in the body's own dimension. Exact for balls, ellipsoids and
    /// polytopes of dimension ≤ 3; Monte Carlo (default settings) otherwise.
    pub fn volume(&self) -> Result<Estimate> {
        self.volume_with(McConfig::default())
    }

    pub fn volume_with(&self, mc: McConfig) -> Result<Estimate> {
        let m = self.dim();
        match self {
            ConvexBody::Ball(b) => Ok(Estimate::exact(omega(m) * b.radius.powi(m as i32))),
            ConvexBody::Ellipsoid(e) => Ok(Estimate::exact(omega(m) / e.shape.determinant().sqrt())),
            ConvexBody::Polytope(p) if m <= EXACT_POLYTOPE_DIM => {
                let v = p.exact_volume();
                if v <= 0.0 {
                    return Err(Error::DegenerateBody("zero volume".into()));
                }
                Ok(Estimate::exact(v))
            }
            ConvexBody::Polytope(p) => polytope_volume_mc(p, mc),
        }
    }

    /// Smallest axis-aligned box containing the body.
    pub fn bounding_box(&self) -> (DVector<f64>, DVector<f64>) {
        let d = self.dim();
        let mut lo = DVector::zeros(d);
        let mut hi = DVector::zeros(d);
        for i in 0..d {
            let e = DVector::from_fn(d, |r, _| if r == i { 1.0 } else { 0.0 });
            hi[i] = self.support(&e);
            lo[i] = -self.support(&-e);
        }
        (lo, hi)
    }

    /// Linear image `T K`.
    pub fn transform(&self, t: &DMatrix<f64>) -> Result<ConvexBody> {
        self.check_dim(t.ncols())?;
        if t.nrows() != t.ncols() {
            return Err(Error::Invalid("transform must be square".into()));
        }
        let inv = t
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::DegenerateBody("singular transform".into()))?;
        Ok(match self {
            ConvexBody::Ball(b) => {
                let q = inv.tr_mul(&inv) / (b.radius * b.radius);
                ConvexBody::Ellipsoid(Ellipsoid::new(t * &b.center, (&q + q.transpose()) * 0.5)?)
            }
            ConvexBody::Ellipsoid(e) => {
                let q = inv.tr_mul(&(&e.shape * &inv));
                ConvexBody::Ellipsoid(Ellipsoid::new(t * &e.center, (&q + q.transpose()) * 0.5)?)
            }
            ConvexBody::Polytope(p) => ConvexBody::Polytope(Polytope::new(p.points().iter().map(|v| t * v).collect())?),
        })
    }

    /// A point of the interior (center for quadrics).
    pub fn interior_point(&self) -> DVector<f64> {
        match self {
            ConvexBody::Ball(b) => b.center.clone(),
            ConvexBody::Ellipsoid(e) => e.center.clone(),
            ConvexBody::Polytope(p) => p.hull.interior_point().clone(),
        }
    }

    /// Uniform sampler over the body.
    pub fn sampler(&self) -> BodySampler<'_> {
        BodySampler {
            body: self,
            bbox: self.bounding_box(),
        }
    }
}

/// Uniform sampling inside a body: direct for quadrics, box rejection for polytopes.
pub struct BodySampler<'a> {
    body: &'a ConvexBody,
    bbox: (DVector<f64>, DVector<f64>),
}

/// Minimum acceptance rate tolerated by rejection samplers.
pub const MIN_ACCEPTANCE: f64 = 1e-4;

impl BodySampler<'_> {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DVector<f64>> {
        let d = self.body.dim();
        match self.body {
            ConvexBody::Ball(b) => Ok(&b.center + uniform_ball(rng, d) * b.radius),
            ConvexBody::Ellipsoid(e) => {
                let y = uniform_ball(rng, d);
                // x = c + L⁻ᵀ y solves (x-c)ᵀ L Lᵀ (x-c) = |y|²
                let lt = e.chol.l().transpose();
                let x = lt.solve_upper_triangular(&y).expect("triangular factor is invertible");
                Ok(&e.center + x)
            }
            ConvexBody::Polytope(_) => {
                let (lo, hi) = &self.bbox;
                let budget = (10.0 / MIN_ACCEPTANCE) as usize;
                for _ in 0..budget {
                    let x = DVector::from_fn(d, |i, _| lo[i] + (hi[i] - lo[i]) * rng.random::<f64>());
                    if self.body.contains(&x, 0.0) {
                        return Ok(x);
                    }
                }
                Err(Error::SamplingFailure(1.0 / budget as f64))
            }
        }
    }
}

fn polytope_volume_mc(p: &Polytope, mc: McConfig) -> Result<Estimate> {
    let (lo, hi) = p.bounding_box();
    let d = p.dim();
    let box_vol: f64 = (0..d).map(|i| hi[i] - lo[i]).product();
    let mut rng = rng_for(mc.seed, 0);
    let mut x = vec![0.0; d];
    let mut hits = 0usize;
    for _ in 0..mc.samples {
        for i in 0..d {
            x[i] = lo[i] + (hi[i] - lo[i]) * rng.random::<f64>();
        }
        if p.hull.contains_slice(&x, 0.0) {
            hits += 1;
        }
    }
    let (mean, se) = mean_and_se(hits as f64, hits as f64, mc.samples);
    if mean < MIN_ACCEPTANCE {
        return Err(Error::SamplingFailure(mean));
    }
    Ok(Estimate {
        value: mean * box_vol,
        std_error: se * box_vol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::orthonormalize;
    use crate::sampling::gaussian_vector;
    use std::f64::consts::PI;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn supports() {
        let b = ConvexBody::unit_ball(3);
        assert!((b.support(&v(&[0.0, 0.6, 0.8])) - 1.0).abs() < 1e-15);
        let e = ConvexBody::Ellipsoid(Ellipsoid::axis_aligned(v(&[0.0, 0.0]), &[1.0, 2.0]).unwrap());
        assert!((e.support(&v(&[0.0, 1.0])) - 2.0).abs() < 1e-15);
        let sq = ConvexBody::Polytope(Polytope::axis_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap());
        let s = 0.5f64.sqrt();
        assert!((sq.support(&v(&[s, s])) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn projections() {
        let mut rng = rng_for(1, 0);
        let e = orthonormalize(&[gaussian_vector(&mut rng, 3), gaussian_vector(&mut rng, 3)]).unwrap();
        match ConvexBody::unit_ball(3).project(&e).unwrap() {
            ConvexBody::Ball(b) => assert_eq!(b.radius, 1.0),
            _ => panic!("ball must project to a ball"),
        }
        let ell = ConvexBody::Ellipsoid(Ellipsoid::axis_aligned(v(&[0.0, 0.0]), &[1.0, 2.0]).unwrap());
        let y = Frame::coordinate(2, &[1]).unwrap();
        let seg = ell.project(&y).unwrap();
        assert!((seg.volume().unwrap().value - 4.0).abs() < 1e-12);
    }

    #[test]
    fn cube_shadow_is_hexagon_of_area_sqrt3() {
        let cube = ConvexBody::Polytope(Polytope::axis_box(&[0.0; 3], &[1.0; 3]).unwrap());
        let n = v(&[1.0, 1.0, 1.0]).normalize();
        let plane = orthonormalize(&[n]).unwrap().complement().unwrap();
        let shadow = cube.project(&plane).unwrap();
        // ½ Σ_f A_f |⟨u, n_f⟩| over the six unit faces with normals ±e_i
        let oracle = 0.5 * 6.0 * (1.0 / 3f64.sqrt());
        assert!((oracle - 3f64.sqrt()).abs() < 1e-15);
        assert!((shadow.volume().unwrap().value - oracle).abs() < 1e-12);
    }

    #[test]
    fn closed_form_volumes() {
        assert!((ConvexBody::unit_ball(3).volume().unwrap().value - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!((ConvexBody::unit_ball(2).volume().unwrap().value - PI).abs() < 1e-15);
        assert_eq!(ConvexBody::unit_ball(1).volume().unwrap().value, 2.0);
        let ell = Ellipsoid::axis_aligned(v(&[1.0, 2.0, 3.0]), &[1.0, 2.0, 3.0]).unwrap();
        let vol = ConvexBody::Ellipsoid(ell).volume().unwrap();
        assert!((vol.value - 4.0 * PI / 3.0 * 6.0).abs() < 1e-12);
    }

    #[test]
    fn four_dim_mc_volume_within_three_sigma_of_triangulation() {
        let mut rng = rng_for(21, 0);
        let pts: Vec<_> = (0..14).map(|_| gaussian_vector(&mut rng, 4)).collect();
        let p = Polytope::new(pts).unwrap();
        let oracle = p.exact_volume();
        let est = ConvexBody::Polytope(p).volume().unwrap();
        assert!(est.std_error > 0.0);
        assert!((est.value - oracle).abs() <= 3.0 * est.std_error, "{est:?} vs {oracle}");
    }

    #[test]
    fn ellipsoid_sampler_stays_inside() {
        let mut rng = rng_for(2, 0);
        let t = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.1, 0.5, 0.2, 0.0, -0.4, 1.5]);
        let e = ConvexBody::Ellipsoid(Ellipsoid::from_map(v(&[1.0, -1.0, 0.5]), &t).unwrap());
        let s = e.sampler();
        let mut mean = DVector::zeros(3);
        for _ in 0..20_000 {
            let x = s.sample(&mut rng).unwrap();
            assert!(e.contains(&x, 1e-12));
            mean += x;
        }
        mean /= 20_000.0;
        assert!((mean - v(&[1.0, -1.0, 0.5])).amax() < 0.05);
    }

    #[test]
    fn transform_ball_to_ellipsoid() {
        let t = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 1.0]);
        let e = ConvexBody::unit_ball(2).transform(&t).unwrap();
        assert!((e.volume().unwrap().value - PI * 2.0).abs() < 1e-12);
        let s = 0.5f64.sqrt();
        // T (s, s) lies on the boundary
        assert!(e.contains(&v(&[3.0 * s, s]), 1e-12));
        assert!(!e.contains(&v(&[3.0 * s, 1.01 * s]), 1e-9));
    }

    #[test]
    fn serde_round_trip() {
        let t = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 1.0]);
        for b in [
            ConvexBody::unit_ball(3),
            ConvexBody::unit_ball(2).transform(&t).unwrap(),
            ConvexBody::Polytope(Polytope::axis_box(&[0.0, 0.0], &[1.0, 3.0]).unwrap()),
        ] {
            let s = serde_json::to_string(&b).unwrap();
            let back: ConvexBody = serde_json::from_str(&s).unwrap();
            assert_eq!(back, b);
        }
    }
}
