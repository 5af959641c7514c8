//! Sections of convex bodies by affine flats and their maximal volumes.
//!
//! Slice volumes are exact: closed form for quadrics, and for polytopes the
//! hull of the points where the flat meets the boundary triangulation.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};

use crate::body::{ConvexBody, Polytope};
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::hull::Hull;
use crate::special::omega;

/// Evaluates `vol_j(K ∩ (p + span W))` for a fixed body and direction frame `W`.
pub struct Slicer<'a> {
    body: &'a ConvexBody,
    dirs: Frame,
    faces: Vec<Vec<usize>>,
    vertices: Vec<DVector<f64>>,
}

impl<'a> Slicer<'a> {
    pub fn new(body: &'a ConvexBody, dirs: &Frame) -> Result<Slicer<'a>> {
        if dirs.ambient_dim() != body.dim() {
            return Err(Error::DimensionMismatch {
                expected: body.dim(),
                got: dirs.ambient_dim(),
            });
        }
        let (faces, vertices) = match body {
            ConvexBody::Polytope(p) => (boundary_faces(p, body.dim() - dirs.rank()), p.points().to_vec()),
            _ => (Vec::new(), Vec::new()),
        };
        Ok(Slicer {
            body,
            dirs: dirs.clone(),
            faces,
            vertices,
        })
    }

    pub fn slice_dim(&self) -> usize {
        self.dirs.rank()
    }

    /// Volume of the section through the point `p` of R^d.
    pub fn volume_at(&self, p: &DVector<f64>) -> f64 {
        let j = self.dirs.rank();
        let w = self.dirs.matrix();
        match self.body {
            ConvexBody::Ball(b) => {
                let a = p - &b.center;
                let along = w.tr_mul(&a);
                let level = b.radius * b.radius - (a.norm_squared() - along.norm_squared());
                if level <= 0.0 {
                    0.0
                } else {
                    omega(j) * level.powf(j as f64 / 2.0)
                }
            }
            ConvexBody::Ellipsoid(e) => {
                let q = e.shape();
                let a = p - e.center();
                let qa = q * &a;
                let am = w.tr_mul(&(q * w));
                let b = w.tr_mul(&qa);
                let Some(chol) = am.clone().cholesky() else {
                    return 0.0;
                };
                let level = 1.0 - (a.dot(&qa) - b.dot(&chol.solve(&b)));
                if level <= 0.0 {
                    0.0
                } else {
                    omega(j) * level.powf(j as f64 / 2.0) / chol.determinant().sqrt()
                }
            }
            ConvexBody::Polytope(_) => self.polytope_section(p),
        }
    }

    fn polytope_section(&self, p: &DVector<f64>) -> f64 {
        let d = self.body.dim();
        let j = self.dirs.rank();
        let k = d - j;
        let w = self.dirs.matrix();
        let scale = self.vertices.iter().map(|v| v.amax()).fold(0.0f64, f64::max).max(1.0);
        let eps = 1e-10 * scale;
        let mut pts: Vec<DVector<f64>> = Vec::new();
        for v in &self.vertices {
            let rel = v - p;
            let y = w.tr_mul(&rel);
            if (&rel - w * &y).norm() <= eps {
                pts.push(y);
            }
        }
        // p + W y = v_0 + Σ λ_i (v_i - v_0)
        let mut m = DMatrix::zeros(d, d);
        m.view_mut((0, 0), (d, j)).copy_from(w);
        for face in &self.faces {
            let v0 = &self.vertices[face[0]];
            for (c, &vi) in face[1..].iter().enumerate() {
                let col = -(&self.vertices[vi] - v0);
                m.set_column(j + c, &col);
            }
            let rhs = v0 - p;
            let Some(sol) = m.clone().lu().solve(&rhs) else { continue };
            if !sol.iter().all(|x| x.is_finite()) {
                continue;
            }
            let lam = sol.rows(j, k);
            let tol = 1e-12;
            if lam.iter().all(|&l| l >= -tol) && lam.sum() <= 1.0 + tol {
                // reject near-singular systems whose solution does not reproduce the flat point
                let y = sol.rows(0, j).into_owned();
                let mut on_face = v0.clone();
                for (c, &vi) in face[1..].iter().enumerate() {
                    on_face += (&self.vertices[vi] - v0) * lam[c];
                }
                if (&(p + w * &y) - on_face).norm() <= 1e-9 * scale {
                    pts.push(y);
                }
            }
        }
        section_volume(pts, j)
    }
}

fn section_volume(pts: Vec<DVector<f64>>, j: usize) -> f64 {
    if pts.len() < j + 1 {
        return 0.0;
    }
    if j == 1 {
        let lo = pts.iter().map(|y| y[0]).fold(f64::INFINITY, f64::min);
        let hi = pts.iter().map(|y| y[0]).fold(f64::NEG_INFINITY, f64::max);
        return (hi - lo).max(0.0);
    }
    match Hull::new(pts) {
        Ok(h) => h.volume(),
        Err(_) => 0.0,
    }
}

/// All k-simplices of the triangulated boundary, deduplicated.
fn boundary_faces(p: &Polytope, k: usize) -> Vec<Vec<usize>> {
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut out = Vec::new();
    for f in p.hull().facets() {
        let mut verts = f.vertices.clone();
        verts.sort_unstable();
        for combo in combinations(&verts, k + 1) {
            if seen.insert(combo.clone()) {
                out.push(combo);
            }
        }
    }
    out
}

fn combinations(items: &[usize], size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..size).collect();
    if size > items.len() {
        return out;
    }
    loop {
        out.push(idx.iter().map(|&i| items[i]).collect());
        let mut i = size;
        while i > 0 && idx[i - 1] == items.len() - size + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for t in i..size {
            idx[t] = idx[t - 1] + 1;
        }
    }
}

/// `vol_j(K ∩ (p + span W))`.
pub fn slice_volume(body: &ConvexBody, p: &DVector<f64>, dirs: &Frame) -> Result<f64> {
    Ok(Slicer::new(body, dirs)?.volume_at(p))
}

/// Where the section maximum was searched.
pub struct SearchRegion<'a> {
    /// Membership in E-coordinates.
    pub contains: &'a dyn Fn(&DVector<f64>) -> bool,
    pub lo: DVector<f64>,
    pub hi: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct MaxSlice {
    pub value: f64,
    /// Maximizer in the coordinates of the offset frame.
    pub argmax: DVector<f64>,
    /// Best value after each grid level, then after the final polish.
    pub levels: Vec<f64>,
}

/// Relative change between the last grid level and the polished maximum that
/// flags the search as unstable.
pub const INSTABILITY: f64 = 0.05;
const GRID_POINTS: f64 = 500.0;
const LEVELS: usize = 3;

/// `max_z vol_k(K ∩ (E z + H))` over `z` in the region, where `H` is spanned by
/// `dirs` and `E` by `offsets` (normally its complement). Coarse-to-fine grid,
/// then compass search. Sections of a convex body have a concave `1/k`-th
/// power of volume in the offset, so local polishing finds the global maximum.
pub fn max_slice(body: &ConvexBody, offsets: &Frame, dirs: &Frame, region: &SearchRegion<'_>) -> Result<MaxSlice> {
    let slicer = Slicer::new(body, dirs)?;
    let m = offsets.rank();
    let f = |z: &DVector<f64>| -> f64 {
        if !(region.contains)(z) {
            return -1.0;
        }
        slicer.volume_at(&offsets.embed(z))
    };
    let per_axis = (GRID_POINTS.powf(1.0 / m as f64).ceil() as usize).max(3);
    let mut lo = region.lo.clone();
    let mut hi = region.hi.clone();
    let mut best_z = (&lo + &hi) * 0.5;
    let mut best = f(&best_z);
    let mut levels = Vec::with_capacity(LEVELS + 1);
    for _ in 0..LEVELS {
        let step: DVector<f64> = (&hi - &lo) / (per_axis - 1) as f64;
        let mut counter = vec![0usize; m];
        loop {
            let z = DVector::from_fn(m, |i, _| lo[i] + step[i] * counter[i] as f64);
            let v = f(&z);
            if v > best {
                best = v;
                best_z = z;
            }
            let mut i = 0;
            while i < m {
                counter[i] += 1;
                if counter[i] < per_axis {
                    break;
                }
                counter[i] = 0;
                i += 1;
            }
            if i == m {
                break;
            }
        }
        levels.push(best.max(0.0));
        // zoom onto two grid cells around the incumbent
        lo = DVector::from_fn(m, |i, _| (best_z[i] - 2.0 * step[i]).max(region.lo[i]));
        hi = DVector::from_fn(m, |i, _| (best_z[i] + 2.0 * step[i]).min(region.hi[i]));
    }
    let mut h = (&region.hi - &region.lo).amax() / (per_axis as f64).powi(LEVELS as i32);
    let floor = 1e-12 * (&region.hi - &region.lo).amax().max(1e-300);
    let mut stall = 0;
    while h > floor && stall < 10_000 {
        stall += 1;
        let mut improved = false;
        for i in 0..m {
            for s in [-1.0, 1.0] {
                let mut z = best_z.clone();
                z[i] += s * h;
                let v = f(&z);
                if v > best {
                    best = v;
                    best_z = z;
                    improved = true;
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    let value = best.max(0.0);
    levels.push(value);
    let last_grid = levels[LEVELS - 1];
    if value > 0.0 && (value - last_grid) / value > INSTABILITY {
        return Err(Error::SliceEstimateUnstable((value - last_grid) / value));
    }
    Ok(MaxSlice {
        value,
        argmax: best_z,
        levels,
    })
}

/// Maximal section of `K` by translates of `H = E⊥`, searched over all of `P_E K`.
pub fn max_slice_over_projection(body: &ConvexBody, e: &Frame) -> Result<MaxSlice> {
    let h = e.complement()?;
    let shadow = body.project(e)?;
    let (lo, hi) = shadow.bounding_box();
    let contains = |z: &DVector<f64>| shadow.contains(z, 1e-12);
    max_slice(body, e, &h, &SearchRegion { contains: &contains, lo, hi })
}
