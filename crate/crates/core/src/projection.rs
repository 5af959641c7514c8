//! Hyperplane shadows: their volumes, the maximal shadow over directions, and
//! surface area recovered through Cauchy's formula.

use std::f64::consts::PI;

use nalgebra::DVector;

use crate::body::ConvexBody;
use crate::error::{Error, Result};
use crate::special::omega;

/// `vol_{d-1}(P_{u⊥} K)` for a unit vector `u`.
pub fn shadow_volume(body: &ConvexBody, u: &DVector<f64>) -> f64 {
    let d = body.dim();
    match body {
        ConvexBody::Ball(b) => omega(d - 1) * b.radius.powi(d as i32 - 1),
        ConvexBody::Ellipsoid(e) => {
            // K = c + T B with Q = T^{-T} T^{-1}: ω_{d-1} |det T| |T^{-1} u|
            let q = e.shape();
            omega(d - 1) * u.dot(&(q * u)).sqrt() / q.determinant().sqrt()
        }
        ConvexBody::Polytope(p) => {
            let h = p.hull();
            0.5 * h
                .facets()
                .iter()
                .enumerate()
                .map(|(i, f)| h.facet_area(i) * f.normal.dot(u).abs())
                .sum::<f64>()
        }
    }
}

/// Unit vector from hyperspherical angles; `angles.len() = d - 1`.
fn direction(angles: &[f64]) -> DVector<f64> {
    let d = angles.len() + 1;
    let mut u = DVector::zeros(d);
    let mut s = 1.0;
    for (i, &a) in angles.iter().enumerate() {
        u[i] = s * a.cos();
        s *= a.sin();
    }
    u[d - 1] = s;
    u
}

#[derive(Debug, Clone)]
pub struct MaxShadow {
    pub direction: DVector<f64>,
    pub value: f64,
    /// Best value seen on the initial grid.
    pub grid_value: f64,
}

/// Approximate maximizer of `vol_{d-1}(P_{u⊥} K)` over unit `u`, for `d ∈ {2,3,4}`:
/// a `grid`-per-angle sweep of a hemisphere, then `refine_iters` rounds of
/// golden-section search along each angle around the incumbent.
pub fn max_hyperplane_projection(body: &ConvexBody, grid: usize, refine_iters: usize) -> Result<MaxShadow> {
    let d = body.dim();
    if !(2..=4).contains(&d) {
        return Err(Error::UnsupportedDimension(d));
    }
    let grid = grid.max(2);
    let m = d - 1;
    // the shadow is even in u, so the first angle only needs [0, π/2]
    let ranges: Vec<f64> = (0..m).map(|i| if i == 0 { PI / 2.0 } else if i == m - 1 { 2.0 * PI } else { PI }).collect();
    let f = |a: &[f64]| shadow_volume(body, &direction(a));
    let mut counter = vec![0usize; m];
    let mut best_a = vec![0.0; m];
    let mut best = f(&best_a);
    loop {
        let a: Vec<f64> = (0..m).map(|i| ranges[i] * counter[i] as f64 / (grid - 1) as f64).collect();
        let v = f(&a);
        if v > best {
            best = v;
            best_a = a;
        }
        let mut i = 0;
        while i < m {
            counter[i] += 1;
            if counter[i] < grid {
                break;
            }
            counter[i] = 0;
            i += 1;
        }
        if i == m {
            break;
        }
    }
    let grid_value = best;
    let mut width: Vec<f64> = ranges.iter().map(|r| r / (grid - 1) as f64).collect();
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..refine_iters {
        for i in 0..m {
            let mut lo = best_a[i] - width[i];
            let mut hi = best_a[i] + width[i];
            let eval = |t: f64| {
                let mut a = best_a.clone();
                a[i] = t;
                f(&a)
            };
            let mut x1 = hi - g * (hi - lo);
            let mut x2 = lo + g * (hi - lo);
            let (mut f1, mut f2) = (eval(x1), eval(x2));
            for _ in 0..60 {
                if f1 < f2 {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + g * (hi - lo);
                    f2 = eval(x2);
                } else {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - g * (hi - lo);
                    f1 = eval(x1);
                }
            }
            let t = 0.5 * (lo + hi);
            let v = eval(t);
            if v > best {
                best = v;
                best_a[i] = t;
            }
        }
        for w in width.iter_mut() {
            *w *= 0.5;
        }
    }
    Ok(MaxShadow {
        direction: direction(&best_a),
        value: best,
        grid_value,
    })
}

/// Surface area (perimeter for `d = 2`) by Cauchy's formula
/// `S(K) = (1/ω_{d-1}) ∫_{S^{d-1}} vol_{d-1}(P_{u⊥} K) du`, for `d ∈ {2,3}`.
pub fn cauchy_surface_area(body: &ConvexBody, nodes: usize) -> Result<f64> {
    let d = body.dim();
    let n = nodes.max(8);
    match d {
        2 => {
            let h = 2.0 * PI / n as f64;
            let s: f64 = (0..n)
                .map(|i| {
                    let t = h * i as f64;
                    shadow_volume(body, &DVector::from_column_slice(&[t.cos(), t.sin()]))
                })
                .sum();
            Ok(s * h / omega(1))
        }
        3 => {
            // dσ = dz dφ with z = cos θ, midpoint rule in z, trapezoid in φ
            let nz = n;
            let nphi = 2 * n;
            let hz = 2.0 / nz as f64;
            let hphi = 2.0 * PI / nphi as f64;
            let mut s = 0.0;
            for i in 0..nz {
                let z = -1.0 + hz * (i as f64 + 0.5);
                let r = (1.0 - z * z).sqrt();
                for j in 0..nphi {
                    let phi = hphi * j as f64;
                    s += shadow_volume(body, &DVector::from_column_slice(&[r * phi.cos(), r * phi.sin(), z]));
                }
            }
            Ok(s * hz * hphi / omega(2))
        }
        _ => Err(Error::UnsupportedDimension(d)),
    }
}

/// `c_d = d ω_d / (2 ω_{d-1})`.
pub fn plank_constant(d: usize) -> f64 {
    d as f64 * omega(d) / (2.0 * omega(d - 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::Polytope;
    use crate::frame::orthonormalize;
    use crate::sampling::{gaussian_vector, rng_for, uniform_sphere};

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn ball_shadow_is_constant() {
        let m = max_hyperplane_projection(&ConvexBody::unit_ball(3), 10, 2).unwrap();
        assert!((m.value - PI).abs() < 1e-12);
        assert!(max_hyperplane_projection(&ConvexBody::unit_ball(5), 10, 2).is_err());
    }

    #[test]
    fn cube_maximum_on_main_diagonal() {
        let cube = ConvexBody::Polytope(Polytope::axis_box(&[0.0; 3], &[1.0; 3]).unwrap());
        let m = max_hyperplane_projection(&cube, 40, 4).unwrap();
        assert!((m.value - 3f64.sqrt()).abs() < 1e-9, "{}", m.value);
        let u = m.direction.map(f64::abs);
        assert!((u - v(&[1.0, 1.0, 1.0]) / 3f64.sqrt()).amax() < 1e-4);
        // brute force over random directions never beats it
        let mut rng = rng_for(3, 0);
        let brute = (0..100_000)
            .map(|_| shadow_volume(&cube, &uniform_sphere(&mut rng, 3)))
            .fold(0.0, f64::max);
        assert!(brute <= m.value + 1e-12);
        assert!(brute > m.value - 1e-2);
    }

    #[test]
    fn shadow_formula_matches_projected_hull() {
        let mut rng = rng_for(6, 0);
        // a flat, segment-like polytope
        let pts: Vec<_> = (0..10)
            .map(|_| {
                let g = gaussian_vector(&mut rng, 3);
                v(&[5.0 * g[0], 0.1 * g[1], 0.05 * g[2]])
            })
            .collect();
        let body = ConvexBody::Polytope(Polytope::new(pts).unwrap());
        for _ in 0..20 {
            let u = uniform_sphere(&mut rng, 3);
            let plane = orthonormalize(std::slice::from_ref(&u)).unwrap().complement().unwrap();
            let oracle = body.project(&plane).unwrap().volume().unwrap().value;
            assert!((shadow_volume(&body, &u) - oracle).abs() < 1e-9);
        }
        let m = max_hyperplane_projection(&body, 30, 4).unwrap();
        let plane = orthonormalize(std::slice::from_ref(&m.direction)).unwrap().complement().unwrap();
        let oracle = body.project(&plane).unwrap().volume().unwrap().value;
        assert!((m.value - oracle).abs() < 1e-4);
    }

    #[test]
    fn ellipsoid_shadow() {
        let e = ConvexBody::Ellipsoid(crate::body::Ellipsoid::axis_aligned(v(&[0.0; 3]), &[1.0, 2.0, 3.0]).unwrap());
        assert!((shadow_volume(&e, &v(&[1.0, 0.0, 0.0])) - 6.0 * PI).abs() < 1e-12);
        let m = max_hyperplane_projection(&e, 20, 3).unwrap();
        assert!((m.value - 6.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn cauchy_formula() {
        let sq = ConvexBody::Polytope(Polytope::axis_box(&[0.0, 0.0], &[1.0, 2.0]).unwrap());
        assert!((cauchy_surface_area(&sq, 4000).unwrap() - 6.0).abs() < 1e-3);
        let cube = ConvexBody::Polytope(Polytope::axis_box(&[0.0; 3], &[1.0; 3]).unwrap());
        let s = cauchy_surface_area(&cube, 200).unwrap();
        assert!((s - 6.0).abs() / 6.0 < 5e-3, "{s}");
        assert!((cauchy_surface_area(&ConvexBody::unit_ball(3), 50).unwrap() - 4.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn plank_constants() {
        assert!((plank_constant(2) - PI / 2.0).abs() < 1e-15);
        for d in [10usize, 20, 40] {
            let ratio = plank_constant(d) / (PI * d as f64 / 2.0).sqrt();
            assert!((0.95..=1.05).contains(&ratio), "d={d}: {ratio}");
        }
    }
}
