//! Convex hulls in arbitrary dimension by incremental beneath–beyond insertion.
//!
//! The boundary is kept as a simplicial complex: every facet is a (d-1)-simplex
//! with an outward unit normal. Coplanar input produces several coplanar
//! facets, which is harmless for volumes, facet-area sums and membership.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Facet {
    pub vertices: Vec<usize>,
    pub normal: DVector<f64>,
    pub offset: f64,
}

impl Facet {
    pub fn signed_distance(&self, x: &DVector<f64>) -> f64 {
        self.normal.dot(x) - self.offset
    }
}

#[derive(Debug, Clone)]
pub struct Hull {
    dim: usize,
    points: Vec<DVector<f64>>,
    facets: Vec<Facet>,
    interior: DVector<f64>,
    scale: f64,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Unit normal of the hyperplane through `pts` (d points in R^d) via cofactors.
fn hyperplane_normal(pts: &[&DVector<f64>]) -> DVector<f64> {
    let d = pts[0].len();
    let rows = d - 1;
    let a = DMatrix::from_fn(rows, d, |i, j| pts[i + 1][j] - pts[0][j]);
    let mut n = DVector::zeros(d);
    for j in 0..d {
        let minor = a.clone().remove_column(j);
        let det = if rows == 0 { 1.0 } else { minor.determinant() };
        n[j] = if j % 2 == 0 { det } else { -det };
    }
    let norm = n.norm();
    if norm > 0.0 {
        n / norm
    } else {
        n
    }
}

impl Hull {
    /// Hull of a full-dimensional point set.
    pub fn new(points: Vec<DVector<f64>>) -> Result<Hull> {
        let d = points.first().map(|p| p.len()).ok_or_else(|| Error::DegenerateBody("no points".into()))?;
        if d == 0 {
            return Err(Error::DegenerateBody("zero-dimensional points".into()));
        }
        if let Some(p) = points.iter().find(|p| p.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: p.len() });
        }
        let scale = points
            .iter()
            .flat_map(|p| p.iter())
            .fold(0.0f64, |m, x| m.max(x.abs()))
            .max(1e-300);
        if d == 1 {
            return Self::interval(points, scale);
        }
        let simplex = initial_simplex(&points, scale)?;
        let interior = simplex.iter().fold(DVector::zeros(d), |acc, &i| acc + &points[i]) / (d + 1) as f64;
        let mut hull = Hull {
            dim: d,
            points,
            facets: Vec::new(),
            interior,
            scale,
        };
        for skip in 0..=d {
            let verts: Vec<usize> = simplex.iter().enumerate().filter(|(j, _)| *j != skip).map(|(_, &i)| i).collect();
            let f = hull.make_facet(verts);
            hull.facets.push(f);
        }
        let eps = 1e-11 * scale;
        for p in 0..hull.points.len() {
            if simplex.contains(&p) {
                continue;
            }
            let visible: Vec<usize> = (0..hull.facets.len())
                .filter(|&f| hull.facets[f].signed_distance(&hull.points[p]) > eps)
                .collect();
            if visible.is_empty() {
                continue;
            }
            let mut ridges: HashMap<Vec<usize>, usize> = HashMap::new();
            for &f in &visible {
                let verts = &hull.facets[f].vertices;
                for skip in 0..verts.len() {
                    let mut r: Vec<usize> = verts.iter().enumerate().filter(|(j, _)| *j != skip).map(|(_, &v)| v).collect();
                    r.sort_unstable();
                    *ridges.entry(r).or_insert(0) += 1;
                }
            }
            let mut horizon: Vec<Vec<usize>> = ridges.into_iter().filter(|(_, c)| *c == 1).map(|(r, _)| r).collect();
            horizon.sort();
            let mut keep = vec![true; hull.facets.len()];
            for &f in &visible {
                keep[f] = false;
            }
            let mut it = keep.iter();
            hull.facets.retain(|_| *it.next().unwrap());
            for mut r in horizon {
                r.push(p);
                let f = hull.make_facet(r);
                hull.facets.push(f);
            }
        }
        Ok(hull)
    }

    fn interval(points: Vec<DVector<f64>>, scale: f64) -> Result<Hull> {
        let (mut lo, mut hi) = (0, 0);
        for (i, p) in points.iter().enumerate() {
            if p[0] < points[lo][0] {
                lo = i;
            }
            if p[0] > points[hi][0] {
                hi = i;
            }
        }
        let (a, b) = (points[lo][0], points[hi][0]);
        if b - a <= 1e-12 * scale {
            return Err(Error::DegenerateBody("interval has zero length".into()));
        }
        let facets = vec![
            Facet {
                vertices: vec![lo],
                normal: DVector::from_element(1, -1.0),
                offset: -a,
            },
            Facet {
                vertices: vec![hi],
                normal: DVector::from_element(1, 1.0),
                offset: b,
            },
        ];
        Ok(Hull {
            dim: 1,
            points,
            facets,
            interior: DVector::from_element(1, 0.5 * (a + b)),
            scale,
        })
    }

    fn make_facet(&self, vertices: Vec<usize>) -> Facet {
        let pts: Vec<&DVector<f64>> = vertices.iter().map(|&i| &self.points[i]).collect();
        let mut normal = hyperplane_normal(&pts);
        let mut offset = normal.dot(pts[0]);
        if normal.dot(&self.interior) - offset > 0.0 {
            normal = -normal;
            offset = -offset;
        }
        Facet { vertices, normal, offset }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[DVector<f64>] {
        &self.points
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    /// A point strictly inside the hull.
    pub fn interior_point(&self) -> &DVector<f64> {
        &self.interior
    }

    /// Coordinate magnitude used to scale tolerances.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Indices of input points that appear on some facet, sorted.
    pub fn vertex_indices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.facets.iter().flat_map(|f| f.vertices.iter().copied()).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Exact d-volume as a sum of cones over the facets.
    pub fn volume(&self) -> f64 {
        if self.dim == 1 {
            return self.facets[1].offset + self.facets[0].offset;
        }
        let d = self.dim;
        let total: f64 = self
            .facets
            .iter()
            .map(|f| {
                let m = DMatrix::from_fn(d, d, |r, c| self.points[f.vertices[c]][r] - self.interior[r]);
                m.determinant().abs()
            })
            .sum();
        total / factorial(d)
    }

    /// (d-1)-volume of facet `i`.
    pub fn facet_area(&self, i: usize) -> f64 {
        let f = &self.facets[i];
        let k = f.vertices.len() - 1;
        if k == 0 {
            return 1.0;
        }
        let p0 = &self.points[f.vertices[0]];
        let w = DMatrix::from_fn(self.dim, k, |r, c| self.points[f.vertices[c + 1]][r] - p0[r]);
        (w.tr_mul(&w).determinant().max(0.0)).sqrt() / factorial(k)
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.facets.len()).map(|i| self.facet_area(i)).sum()
    }

    /// Closed membership with absolute slack `tol`.
    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.facets.iter().all(|f| f.signed_distance(x) <= tol)
    }

    /// Slice-free membership test on a raw coordinate slice.
    pub fn contains_slice(&self, x: &[f64], tol: f64) -> bool {
        self.facets
            .iter()
            .all(|f| f.normal.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - f.offset <= tol)
    }

    /// Distinct supporting halfspaces `(normal, offset)`, merging coplanar facets.
    pub fn halfspaces(&self) -> Vec<(DVector<f64>, f64)> {
        let mut out: Vec<(DVector<f64>, f64)> = Vec::new();
        let tol = 1e-10 * self.scale;
        for f in &self.facets {
            let dup = out
                .iter()
                .any(|(n, o)| n.dot(&f.normal) > 1.0 - 1e-10 && (o - f.offset).abs() <= tol);
            if !dup {
                out.push((f.normal.clone(), f.offset));
            }
        }
        out
    }
}

fn initial_simplex(points: &[DVector<f64>], scale: f64) -> Result<Vec<usize>> {
    let d = points[0].len();
    let first = (0..points.len())
        .min_by(|&a, &b| points[a][0].total_cmp(&points[b][0]))
        .expect("nonempty");
    let mut chosen = vec![first];
    let mut dirs: Vec<DVector<f64>> = Vec::new();
    while chosen.len() < d + 1 {
        let origin = &points[first];
        let mut best = (0.0, usize::MAX, None);
        for (i, p) in points.iter().enumerate() {
            let mut w = p - origin;
            for _ in 0..2 {
                for b in &dirs {
                    let c = b.dot(&w);
                    w.axpy(-c, b, 1.0);
                }
            }
            let n = w.norm();
            if n > best.0 {
                best = (n, i, Some(w));
            }
        }
        if best.0 <= 1e-10 * scale {
            return Err(Error::DegenerateBody(format!(
                "points span only {} dimensions of {d}",
                chosen.len() - 1
            )));
        }
        let w = best.2.unwrap();
        dirs.push(&w / best.0);
        chosen.push(best.1);
    }
    Ok(chosen)
}
