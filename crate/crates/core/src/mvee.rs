//! Minimum-volume enclosing ellipsoids (Khachiyan's algorithm with
//! Todd–Yıldırım away steps) and the Banach–Mazur factor they certify.

use nalgebra::{DMatrix, DVector};

use crate::body::{ConvexBody, Ellipsoid};
use crate::error::{Error, Result};

/// Iteration cap for the weight ascent.
pub const MAX_ITERATIONS: usize = 200_000;

#[derive(Debug, Clone)]
pub struct EnclosingEllipsoid {
    pub ellipsoid: Ellipsoid,
    pub containment_tolerance: f64,
    pub iterations: usize,
}

impl EnclosingEllipsoid {
    pub fn body(&self) -> ConvexBody {
        ConvexBody::Ellipsoid(self.ellipsoid.clone())
    }
}

/// Minimum-volume ellipsoid containing `points`, up to a `(1 + tol)` factor.
/// The result is scaled so that the outermost point lies on its boundary.
pub fn mvee(points: &[DVector<f64>], tol: f64) -> Result<EnclosingEllipsoid> {
    if !(tol > 0.0 && tol <= 1e-3) {
        return Err(Error::Domain(format!("mvee tolerance {tol} outside (0, 1e-3]")));
    }
    let n = points.len();
    let d = points.first().map(|p| p.len()).ok_or(Error::RankDeficient {
        column: 0,
        residual: 0.0,
    })?;
    if let Some(p) = points.iter().find(|p| p.len() != d) {
        return Err(Error::DimensionMismatch { expected: d, got: p.len() });
    }
    if n < d + 1 {
        return Err(Error::RankDeficient {
            column: n,
            residual: 0.0,
        });
    }
    let lifted: Vec<DVector<f64>> = points.iter().map(|p| p.clone().push(1.0)).collect();
    let dim = (d + 1) as f64;
    let mut u = vec![1.0 / n as f64; n];

    let moment = |u: &[f64]| {
        let mut x = DMatrix::zeros(d + 1, d + 1);
        for (q, &w) in lifted.iter().zip(u) {
            if w > 0.0 {
                x.ger(w, q, q, 1.0);
            }
        }
        x
    };
    {
        let x = moment(&u);
        let eig = x.clone().symmetric_eigenvalues();
        let (min, max) = eig.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &l| (a.min(l), b.max(l.abs())));
        if min <= 1e-12 * max {
            return Err(Error::RankDeficient {
                column: d,
                residual: min / max.max(f64::MIN_POSITIVE),
            });
        }
    }

    let mut iterations = 0;
    loop {
        let x = moment(&u);
        let chol = x.cholesky().ok_or(Error::RankDeficient {
            column: d,
            residual: 0.0,
        })?;
        let m: Vec<f64> = lifted.iter().map(|q| q.dot(&chol.solve(q))).collect();
        let (jmax, &kmax) = m.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("n > 0");
        let (jmin, &kmin) = m
            .iter()
            .enumerate()
            .filter(|(i, _)| u[*i] > 0.0)
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("support is nonempty");
        let up = (kmax - dim) / dim;
        let down = (dim - kmin) / dim;
        if up <= tol && down <= tol {
            break;
        }
        iterations += 1;
        if iterations > MAX_ITERATIONS {
            return Err(Error::NoConvergence { iterations: MAX_ITERATIONS });
        }
        if up >= down {
            let alpha = (kmax - dim) / (dim * (kmax - 1.0));
            for w in u.iter_mut() {
                *w *= 1.0 - alpha;
            }
            u[jmax] += alpha;
        } else {
            // away step: shift weight off the point deepest inside
            let uj = u[jmin];
            let mut alpha = (dim - kmin) / (dim * (kmin - 1.0));
            let drop = alpha >= uj / (1.0 - uj);
            if drop {
                alpha = uj / (1.0 - uj);
            }
            for w in u.iter_mut() {
                *w *= 1.0 + alpha;
            }
            u[jmin] -= alpha;
            if drop {
                u[jmin] = 0.0;
            }
        }
    }

    let c = points.iter().zip(&u).fold(DVector::zeros(d), |acc, (p, &w)| acc + p * w);
    let mut sigma = DMatrix::zeros(d, d);
    for (p, &w) in points.iter().zip(&u) {
        let y = p - &c;
        sigma.ger(w, &y, &y, 1.0);
    }
    let mut q = sigma
        .try_inverse()
        .ok_or(Error::RankDeficient {
            column: d,
            residual: 0.0,
        })?
        / d as f64;
    q = (&q + q.transpose()) * 0.5;
    let worst = points
        .iter()
        .map(|p| {
            let y = p - &c;
            y.dot(&(&q * &y))
        })
        .fold(0.0f64, f64::max);
    q /= worst;
    Ok(EnclosingEllipsoid {
        ellipsoid: Ellipsoid::new(c, q)?,
        containment_tolerance: tol,
        iterations,
    })
}

/// Upper bound on the Banach–Mazur distance of `K` to the ball together with
/// the ellipsoid `T B_2^d + c` realizing it: `λ (T B + c) ⊂ K ⊂ T B + c`
/// (with the homothety about `c`) gives `d_K ≤ 1/λ`.
#[derive(Debug, Clone)]
pub struct BanachMazurBound {
    pub ellipsoid: Ellipsoid,
    /// Largest computed `λ`.
    pub inner_factor: f64,
    /// `1/λ`.
    pub bound: f64,
    /// John's bound: `d`, or `√d` for centrally symmetric bodies.
    pub john_bound: f64,
    pub symmetric: bool,
}

/// The MVEE-derived Banach–Mazur bound for a body.
pub fn banach_mazur_bound(body: &ConvexBody, tol: f64) -> Result<BanachMazurBound> {
    let d = body.dim() as f64;
    match body {
        ConvexBody::Ball(b) => {
            let e = Ellipsoid::new(b.center.clone(), DMatrix::identity(b.center.len(), b.center.len()) / (b.radius * b.radius))?;
            Ok(BanachMazurBound {
                ellipsoid: e,
                inner_factor: 1.0,
                bound: 1.0,
                john_bound: d.sqrt(),
                symmetric: true,
            })
        }
        ConvexBody::Ellipsoid(e) => Ok(BanachMazurBound {
            ellipsoid: e.clone(),
            inner_factor: 1.0,
            bound: 1.0,
            john_bound: d.sqrt(),
            symmetric: true,
        }),
        ConvexBody::Polytope(p) => {
            let verts = p.vertices();
            let enc = mvee(&verts, tol)?;
            let e = enc.ellipsoid;
            let c = e.center();
            let inv = e.inv_shape();
            // λ = min_f (b_f - ⟨a_f, c⟩) / √(a_fᵀ Q⁻¹ a_f)
            let lambda = p
                .hull()
                .halfspaces()
                .iter()
                .map(|(a, b)| (b - a.dot(c)) / a.dot(&(inv * a)).sqrt())
                .fold(f64::INFINITY, f64::min);
            let symmetric = is_centrally_symmetric(&verts);
            Ok(BanachMazurBound {
                ellipsoid: e,
                inner_factor: lambda,
                bound: 1.0 / lambda,
                john_bound: if symmetric { d.sqrt() } else { d },
                symmetric,
            })
        }
    }
}

fn is_centrally_symmetric(verts: &[DVector<f64>]) -> bool {
    let n = verts.len() as f64;
    let c = verts.iter().fold(DVector::zeros(verts[0].len()), |acc, v| acc + v) / n;
    let scale = verts.iter().map(|v| (v - &c).norm()).fold(0.0f64, f64::max);
    verts.iter().all(|v| {
        let mirror = &c * 2.0 - v;
        verts.iter().any(|w| (w - &mirror).norm() <= 1e-9 * scale)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{gaussian_vector, rng_for};
    use crate::special::omega;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn square_gives_circumscribed_ball() {
        let pts = vec![v(&[1.0, 1.0]), v(&[-1.0, 1.0]), v(&[1.0, -1.0]), v(&[-1.0, -1.0])];
        let e = mvee(&pts, 1e-7).unwrap().ellipsoid;
        assert!(e.center().norm() < 1e-9);
        let target = DMatrix::identity(2, 2) * 0.5;
        assert!((e.shape() - target).amax() < 1e-6);
    }

    #[test]
    fn triangle_gives_circumcircle() {
        let pts: Vec<_> = (0..3)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * i as f64 / 3.0;
                v(&[t.cos(), t.sin()])
            })
            .collect();
        let e = mvee(&pts, 1e-8).unwrap().ellipsoid;
        assert!(e.center().norm() < 1e-6);
        assert!((e.shape() - DMatrix::identity(2, 2)).amax() < 1e-6);
    }

    #[test]
    fn degenerate_input() {
        let pts = vec![v(&[0.0, 0.0]), v(&[1.0, 1.0]), v(&[2.0, 2.0]), v(&[3.0, 3.0])];
        assert!(matches!(mvee(&pts, 1e-6), Err(Error::RankDeficient { .. })));
        assert!(mvee(&pts, 0.1).is_err());
    }

    /// Titterington's multiplicative D-optimal weight update, run to a tight
    /// gap, as an independent route to the same optimum.
    fn titterington_volume(points: &[DVector<f64>]) -> f64 {
        let d = points[0].len();
        let lifted: Vec<_> = points.iter().map(|p| p.clone().push(1.0)).collect();
        let mut u = vec![1.0 / points.len() as f64; points.len()];
        for _ in 0..200_000 {
            let mut x = DMatrix::zeros(d + 1, d + 1);
            for (q, &w) in lifted.iter().zip(&u) {
                x.ger(w, q, q, 1.0);
            }
            let xi = x.try_inverse().unwrap();
            let m: Vec<f64> = lifted.iter().map(|q| q.dot(&(&xi * q))).collect();
            if m.iter().cloned().fold(0.0, f64::max) < (d as f64 + 1.0) * (1.0 + 1e-9) {
                break;
            }
            for (w, mi) in u.iter_mut().zip(&m) {
                *w *= mi / (d as f64 + 1.0);
            }
        }
        let c = points.iter().zip(&u).fold(DVector::zeros(d), |a, (p, &w)| a + p * w);
        let mut s = DMatrix::zeros(d, d);
        for (p, &w) in points.iter().zip(&u) {
            let y = p - &c;
            s.ger(w, &y, &y, 1.0);
        }
        let q = s.try_inverse().unwrap() / d as f64;
        let worst = points.iter().map(|p| (p - &c).dot(&(&q * (p - &c)))).fold(0.0, f64::max);
        omega(d) / (q / worst).determinant().sqrt()
    }

    #[test]
    fn random_cloud_matches_independent_solver() {
        let mut rng = rng_for(50, 0);
        let pts: Vec<_> = (0..50).map(|_| gaussian_vector(&mut rng, 3)).collect();
        let enc = mvee(&pts, 1e-6).unwrap();
        let e = &enc.ellipsoid;
        for p in &pts {
            assert!(e.gauge(p) <= 1.0 + 1e-12);
        }
        let shrunk = e.shape() / (1.0 - 10.0 * 1e-6f64).powi(2);
        let c = e.center();
        assert!(pts.iter().any(|p| (p - c).dot(&(&shrunk * (p - c))) > 1.0));
        let vol = omega(3) / e.shape().determinant().sqrt();
        let oracle = titterington_volume(&pts);
        assert!((vol - oracle).abs() / oracle < 1e-3, "{vol} vs {oracle}");
    }

    #[test]
    fn banach_mazur_factors() {
        let sq = ConvexBody::Polytope(crate::body::Polytope::axis_box(&[-1.0, -1.0], &[1.0, 1.0]).unwrap());
        let bm = banach_mazur_bound(&sq, 1e-7).unwrap();
        assert!(bm.symmetric);
        assert!((bm.bound - 2f64.sqrt()).abs() < 1e-5);
        let tri = ConvexBody::Polytope(
            crate::body::Polytope::new(vec![v(&[0.0, 0.0]), v(&[3.0, 0.2]), v(&[1.0, 2.0])]).unwrap(),
        );
        let bm = banach_mazur_bound(&tri, 1e-7).unwrap();
        assert!(!bm.symmetric);
        assert!((bm.bound - 2.0).abs() < 1e-4, "{}", bm.bound);
        assert_eq!(bm.john_bound, 2.0);
    }
}
