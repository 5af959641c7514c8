//! Random and structured instances: plank partitions, layered packings,
//! redundant coverings, random bodies.
//!
//! Packings are built in layers. Inside a layer all cylinders share one frame
//! and have disjoint bases in the shadow of `K`, so the layer is a packing
//! exactly, not just up to sampling; `r` layers form an `r`-fold packing.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::body::{ConvexBody, Ellipsoid, Polytope};
use crate::cylinder::{Cylinder, CylinderBase};
use crate::error::{Error, Result};
use crate::frame::{orthonormalize, Frame};
use crate::sampling::{gaussian_vector, uniform_sphere};

const PROPOSALS_PER_DISK: usize = 200;

/// `n` parallel planks of equal width partitioning the width of `K` in direction `u`.
pub fn plank_partition(body: &ConvexBody, u: &DVector<f64>, n: usize) -> Result<Vec<Cylinder>> {
    if n == 0 {
        return Err(Error::Invalid("partition into zero planks".into()));
    }
    let u = u.normalize();
    let hi = body.support(&u);
    let lo = -body.support(&-&u);
    (0..n)
        .map(|i| {
            let a = lo + (hi - lo) * i as f64 / n as f64;
            let b = lo + (hi - lo) * (i + 1) as f64 / n as f64;
            Cylinder::plank(&u, a, b)
        })
        .collect()
}

/// `r` copies of a family.
pub fn repeat(family: &[Cylinder], r: usize) -> Vec<Cylinder> {
    (0..r).flat_map(|_| family.iter().cloned()).collect()
}

/// Uniformly random `m`-dimensional frame in `R^d`.
pub fn random_frame<R: Rng + ?Sized>(rng: &mut R, d: usize, m: usize) -> Frame {
    loop {
        let v: Vec<_> = (0..m).map(|_| gaussian_vector(rng, d)).collect();
        if let Ok(f) = orthonormalize(&v) {
            return f;
        }
    }
}

/// Radius of the largest ball about `c` inside the shadow; conservative for ellipsoids.
fn room(shadow: &ConvexBody, c: &DVector<f64>) -> f64 {
    match shadow {
        ConvexBody::Ball(b) => b.radius - (c - &b.center).norm(),
        ConvexBody::Ellipsoid(e) => {
            // c + (1 - g(c)) (E - center) ⊂ E contains a ball of radius (1 - g) a_min
            let lmax = e.shape().clone().symmetric_eigenvalues().max();
            (1.0 - e.gauge(c).sqrt()) / lmax.sqrt()
        }
        ConvexBody::Polytope(p) => p
            .hull()
            .halfspaces()
            .iter()
            .map(|(a, b)| (b - a.dot(c)) / a.norm())
            .fold(f64::INFINITY, f64::min),
    }
}

fn round_base(center: DVector<f64>, radius: f64) -> Result<CylinderBase> {
    if center.len() == 1 {
        CylinderBase::interval(center[0] - radius, center[0] + radius)
    } else {
        CylinderBase::disk(center, radius)
    }
}

/// Up to `count` cylinders over the frame `e` whose round bases are pairwise
/// disjoint and inside `P_E K`: a 1-fold packing of `K`.
pub fn random_parallel_packing<R: Rng + ?Sized>(body: &ConvexBody, e: &Frame, count: usize, rng: &mut R) -> Result<Vec<Cylinder>> {
    let shadow = body.project(e)?;
    let sampler = shadow.sampler();
    let mut disks: Vec<(DVector<f64>, f64)> = Vec::new();
    let mut misses = 0;
    while disks.len() < count && misses < PROPOSALS_PER_DISK * count {
        let c = sampler.sample(rng)?;
        let free = disks
            .iter()
            .map(|(d, r)| (&c - d).norm() - r)
            .fold(room(&shadow, &c), f64::min);
        if free <= 1e-6 {
            misses += 1;
            continue;
        }
        let t: f64 = rng.random_range(0.3..0.95);
        disks.push((c, free * t));
    }
    disks
        .into_iter()
        .map(|(c, r)| Cylinder::new(e.clone(), round_base(c, r)?))
        .collect()
}

/// `r` layers, each a random-frame parallel packing with `per_layer` cylinders
/// of codimension `k` (`dim H = k`).
pub fn random_packing<R: Rng + ?Sized>(body: &ConvexBody, k: usize, r: usize, per_layer: usize, rng: &mut R) -> Result<Vec<Cylinder>> {
    let d = body.dim();
    if k == 0 || k >= d {
        return Err(Error::Domain(format!("codimension {k} outside [1, {}]", d - 1)));
    }
    let mut out = Vec::new();
    for _ in 0..r {
        let e = random_frame(rng, d, d - k);
        out.extend(random_parallel_packing(body, &e, per_layer, rng)?);
    }
    Ok(out)
}

/// `r` layers of parallel planks with random gaps, each layer in its own random direction.
pub fn random_plank_packing<R: Rng + ?Sized>(body: &ConvexBody, r: usize, per_layer: usize, rng: &mut R) -> Result<Vec<Cylinder>> {
    let d = body.dim();
    let mut out = Vec::new();
    for _ in 0..r {
        let u = uniform_sphere(rng, d);
        let hi = body.support(&u);
        let lo = -body.support(&-&u);
        // random cut points; every other gap stays empty with probability 1/2
        let mut cuts: Vec<f64> = (0..2 * per_layer).map(|_| rng.random_range(lo..hi)).collect();
        cuts.push(lo);
        cuts.push(hi);
        cuts.sort_by(f64::total_cmp);
        for w in cuts.windows(2) {
            if w[1] - w[0] > 1e-9 * (hi - lo) && rng.random_bool(0.5) {
                out.push(Cylinder::plank(&u, w[0], w[1])?);
            }
        }
    }
    if out.is_empty() {
        let u = uniform_sphere(rng, d);
        let (lo, hi) = (-body.support(&-&u), body.support(&u));
        out.push(Cylinder::plank(&u, lo + (hi - lo) / 3.0, hi - (hi - lo) / 3.0)?);
    }
    Ok(out)
}

/// Boxes of a `cells^m` grid over the bounding box of `P_E K`, dropping those
/// provably disjoint from a ball shadow: a covering of `K`.
pub fn box_tiling(body: &ConvexBody, e: &Frame, cells: usize) -> Result<Vec<Cylinder>> {
    let shadow = body.project(e)?;
    let (lo, hi) = shadow.bounding_box();
    let m = e.rank();
    let cells = cells.max(1);
    let step: DVector<f64> = (&hi - &lo) / cells as f64;
    let mut out = Vec::new();
    let mut counter = vec![0usize; m];
    loop {
        let a: Vec<f64> = (0..m).map(|i| lo[i] + step[i] * counter[i] as f64).collect();
        let b: Vec<f64> = (0..m).map(|i| a[i] + step[i]).collect();
        let keep = match &shadow {
            ConvexBody::Ball(ball) => {
                let near = DVector::from_fn(m, |i, _| ball.center[i].clamp(a[i], b[i]));
                (near - &ball.center).norm() <= ball.radius
            }
            _ => true,
        };
        if keep {
            let base = if m == 1 {
                CylinderBase::interval(a[0], b[0])?
            } else {
                CylinderBase::Polytope(Polytope::axis_box(&a, &b)?)
            };
            out.push(Cylinder::new(e.clone(), base)?);
        }
        let mut i = 0;
        while i < m {
            counter[i] += 1;
            if counter[i] < cells {
                break;
            }
            counter[i] = 0;
            i += 1;
        }
        if i == m {
            return Ok(out);
        }
    }
}

/// `r` box tilings over random frames plus `extra` random round-base
/// cylinders: a redundant `r`-fold covering.
pub fn random_covering<R: Rng + ?Sized>(body: &ConvexBody, k: usize, r: usize, cells: usize, extra: usize, rng: &mut R) -> Result<Vec<Cylinder>> {
    let d = body.dim();
    if k == 0 || k >= d {
        return Err(Error::Domain(format!("codimension {k} outside [1, {}]", d - 1)));
    }
    let mut out = Vec::new();
    for _ in 0..r {
        let e = random_frame(rng, d, d - k);
        out.extend(box_tiling(body, &e, cells)?);
    }
    for _ in 0..extra {
        let e = random_frame(rng, d, d - k);
        out.extend(random_parallel_packing(body, &e, 1, rng)?);
    }
    Ok(out)
}

/// Hull of `n ≥ 3` points at random angles and radii in `[0.5, 1.5]`.
pub fn random_polygon<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Polytope> {
    let n = n.max(3);
    loop {
        let pts: Vec<_> = (0..n)
            .map(|_| {
                let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                let r: f64 = rng.random_range(0.5..1.5);
                DVector::from_column_slice(&[r * t.cos(), r * t.sin()])
            })
            .collect();
        if let Ok(p) = Polytope::new(pts) {
            return Ok(p);
        }
    }
}

/// Hull of `n` Gaussian points in `R^d`.
pub fn random_polytope<R: Rng + ?Sized>(d: usize, n: usize, rng: &mut R) -> Result<Polytope> {
    let n = n.max(d + 1);
    loop {
        let pts: Vec<_> = (0..n).map(|_| gaussian_vector(rng, d)).collect();
        if let Ok(p) = Polytope::new(pts) {
            return Ok(p);
        }
    }
}

/// Randomly rotated ellipsoid with semi-axes in `[0.5, 2]`, centred near the origin.
pub fn random_ellipsoid<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Ellipsoid> {
    let rot = random_frame(rng, d, d);
    let axes = DMatrix::from_diagonal(&DVector::from_fn(d, |_, _| rng.random_range(0.5..2.0)));
    let center = gaussian_vector(rng, d) * 0.3;
    Ellipsoid::from_map(center, &(rot.matrix() * axes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::sum_crv;
    use crate::multiplicity::{verify_covering, verify_packing};
    use crate::sampling::rng_for;

    #[test]
    fn partition_crv_sums_to_one() {
        let mut rng = rng_for(1, 0);
        let e = ConvexBody::Ellipsoid(random_ellipsoid(3, &mut rng).unwrap());
        let fam = plank_partition(&e, &uniform_sphere(&mut rng, 3), 7).unwrap();
        assert!((sum_crv(&e, &fam).unwrap().value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn layered_packings_verify() {
        let mut rng = rng_for(2, 0);
        for (d, k, r) in [(2, 1, 2), (3, 1, 1), (3, 2, 3), (4, 2, 2), (5, 1, 1)] {
            let body = if d % 2 == 0 {
                ConvexBody::unit_ball(d)
            } else {
                ConvexBody::Ellipsoid(random_ellipsoid(d, &mut rng).unwrap())
            };
            let fam = random_packing(&body, k, r, 6, &mut rng).unwrap();
            assert!(!fam.is_empty());
            let v = verify_packing(&body, &fam, r, 20_000, 3).unwrap();
            assert!(v.pass, "d={d} k={k} r={r}: {:?}", v.report.max_mult);
            assert!(sum_crv(&body, &fam).unwrap().value <= r as f64);
        }
    }

    #[test]
    fn plank_packings_in_polygons() {
        let mut rng = rng_for(3, 0);
        for r in 1..=3 {
            let poly = ConvexBody::Polytope(random_polygon(8, &mut rng).unwrap());
            let fam = random_plank_packing(&poly, r, 4, &mut rng).unwrap();
            assert!(verify_packing(&poly, &fam, r, 20_000, 1).unwrap().pass);
        }
    }

    #[test]
    fn tilings_cover() {
        let mut rng = rng_for(4, 0);
        let ball = ConvexBody::unit_ball(3);
        let fam = random_covering(&ball, 1, 2, 4, 3, &mut rng).unwrap();
        assert!(verify_covering(&ball, &fam, 2, 20_000, 5).unwrap().pass);
        let poly = ConvexBody::Polytope(random_polytope(3, 12, &mut rng).unwrap());
        let fam = random_covering(&poly, 2, 1, 5, 0, &mut rng).unwrap();
        assert!(verify_covering(&poly, &fam, 1, 20_000, 5).unwrap().pass);
        // corner cells of an 8×8 grid miss the disk shadow
        let e = Frame::coordinate(3, &[0, 1]).unwrap();
        let tiles = box_tiling(&ball, &e, 8).unwrap();
        assert!(tiles.len() < 64);
        assert!(verify_covering(&ball, &tiles, 1, 20_000, 6).unwrap().pass);
    }
}
