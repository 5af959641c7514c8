//! Planar disk families: separability, NS-diameter against circumradius,
//! plank packings of the hull and the ridge-function estimates behind the
//! dual Falconer bound.
//!
//! A family is NS (non-separable) when no line disjoint from every closed
//! disk leaves disks on both of its sides. `K` is the convex hull of the
//! union of the disks.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{digest, BoundReport, Direction};
use crate::error::{Error, Result};
use crate::hull::Hull;
use crate::quad::integrate;
use crate::sampling::{rng_for, Estimate};

pub type Point = [f64; 2];

fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn add_scaled(a: Point, t: f64, b: Point) -> Point {
    [a[0] + t * b[0], a[1] + t * b[1]]
}

fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

fn unit(theta: f64) -> Point {
    [theta.cos(), theta.sin()]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub center: Point,
    /// Zero is allowed: a point as a degenerate disk.
    pub radius: f64,
}

impl Disk {
    pub fn new(center: Point, radius: f64) -> Result<Disk> {
        if !(radius >= 0.0 && radius.is_finite() && center.iter().all(|c| c.is_finite())) {
            return Err(Error::Invalid(format!("disk radius {radius}")));
        }
        Ok(Disk { center, radius })
    }

    fn encloses(&self, other: &Disk, tol: f64) -> bool {
        norm(sub(other.center, self.center)) + other.radius <= self.radius + tol
    }
}

/// The strip `a ≤ ⟨x, u⟩ ≤ b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plank2D {
    pub u: Point,
    pub interval: [f64; 2],
}

impl Plank2D {
    pub fn new(u: Point, a: f64, b: f64) -> Result<Plank2D> {
        let n = norm(u);
        if !(n > 0.0) || !(b > a) {
            return Err(Error::Invalid(format!("plank with normal {u:?} and interval [{a}, {b}]")));
        }
        Ok(Plank2D {
            u: [u[0] / n, u[1] / n],
            interval: [a, b],
        })
    }

    pub fn width(&self) -> f64 {
        self.interval[1] - self.interval[0]
    }

    pub fn contains_open(&self, x: Point) -> bool {
        let t = dot(self.u, x);
        t > self.interval[0] && t < self.interval[1]
    }
}

/// The line `⟨x, u⟩ = s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub s: f64,
    pub u: Point,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityMode {
    /// `(1/π)(r² - |x - c|²)^{-1/2}`: every full chord integrates to 1.
    Normalized,
    /// `(1/(π r))(r² - |x - c|²)^{-1/2}`: chords integrate to `1/r`.
    Printed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiskFamily {
    pub disks: Vec<Disk>,
}

/// `K` as the union of its disks and the polygon spanned by the outer
/// tangent points; the pieces outside the polygon are circular segments of
/// single disks.
#[derive(Debug, Clone)]
pub struct DiskHull {
    disks: Vec<Disk>,
    /// `(n, b)` with `⟨n, x⟩ ≤ b`, `|n| = 1`.
    polygon: Vec<(Point, f64)>,
    vertices: Vec<Point>,
}

impl DiskHull {
    pub fn contains(&self, x: Point, margin: f64) -> bool {
        self.disks.iter().any(|d| norm(sub(x, d.center)) < d.radius - margin)
            || (!self.polygon.is_empty() && self.polygon.iter().all(|(n, b)| dot(*n, x) < b - margin))
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Parameter range of `{p + t v} ∩ K`, if nonempty.
    fn chord(&self, p: Point, v: Point) -> Option<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for d in &self.disks {
            let w = sub(d.center, p);
            let tc = dot(w, v);
            let h2 = d.radius * d.radius - (dot(w, w) - tc * tc);
            if h2 > 0.0 {
                lo = lo.min(tc - h2.sqrt());
                hi = hi.max(tc + h2.sqrt());
            }
        }
        if !self.polygon.is_empty() {
            let (mut a, mut b) = (f64::NEG_INFINITY, f64::INFINITY);
            for (n, off) in &self.polygon {
                let nv = dot(*n, v);
                let rest = off - dot(*n, p);
                if nv.abs() < 1e-300 {
                    if rest < 0.0 {
                        a = f64::INFINITY;
                    }
                } else if nv > 0.0 {
                    b = b.min(rest / nv);
                } else {
                    a = a.max(rest / nv);
                }
            }
            if a < b {
                lo = lo.min(a);
                hi = hi.max(b);
            }
        }
        (lo < hi).then_some((lo, hi))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Separation {
    pub separable: bool,
    pub line: Option<Line>,
    /// Directions tested, one per cell of the critical-angle partition.
    pub directions_tested: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circumcircle {
    pub center: Point,
    pub radius: f64,
    /// Disks internally tangent to the circle.
    pub support: Vec<usize>,
    /// Largest `|R - |C - c_i| - r_i|` over the support.
    pub tangency_residual: f64,
    /// Largest `|C - c_i| + r_i - R` over all disks; at most 0 up to rounding.
    pub containment_excess: f64,
}

impl DiskFamily {
    pub fn new(disks: Vec<Disk>) -> Result<DiskFamily> {
        if disks.is_empty() {
            return Err(Error::Invalid("empty disk family".into()));
        }
        for d in &disks {
            Disk::new(d.center, d.radius)?;
        }
        Ok(DiskFamily { disks })
    }

    pub fn len(&self) -> usize {
        self.disks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.disks.is_empty()
    }

    /// Length scale used for tolerances.
    pub fn scale(&self) -> f64 {
        self.disks
            .iter()
            .map(|d| norm(d.center) + d.radius)
            .fold(1.0, f64::max)
    }

    /// `h_K(u) = max_i ⟨c_i, u⟩ + r_i |u|`.
    pub fn support(&self, u: Point) -> f64 {
        let n = norm(u);
        self.disks
            .iter()
            .map(|d| dot(d.center, u) + d.radius * n)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `[-h_K(-u), h_K(u)]`.
    pub fn width_interval(&self, u: Point) -> (f64, f64) {
        (-self.support([-u[0], -u[1]]), self.support(u))
    }

    /// Sum of the diameters.
    pub fn ns_diameter(&self) -> f64 {
        self.disks.iter().map(|d| 2.0 * d.radius).sum()
    }

    pub fn hull(&self) -> DiskHull {
        let tol = 1e-12 * self.scale();
        let mut pts: Vec<Point> = Vec::new();
        for (i, a) in self.disks.iter().enumerate() {
            for b in &self.disks[..i] {
                // outer common tangents: ⟨c_a - c_b, u⟩ = r_b - r_a
                let w = sub(a.center, b.center);
                let rho = norm(w);
                let c = b.radius - a.radius;
                if rho <= c.abs() + tol {
                    continue;
                }
                let phi = w[1].atan2(w[0]);
                let alpha = (c / rho).clamp(-1.0, 1.0).acos();
                for theta in [phi + alpha, phi - alpha] {
                    let u = unit(theta);
                    let h = dot(a.center, u) + a.radius;
                    if self.support(u) <= h + tol {
                        pts.push(add_scaled(a.center, a.radius, u));
                        pts.push(add_scaled(b.center, b.radius, u));
                    }
                }
            }
        }
        let mut polygon = Vec::new();
        let mut vertices = Vec::new();
        if pts.len() >= 3 {
            if let Ok(h) = Hull::new(pts.iter().map(|p| DVector::from_column_slice(p)).collect()) {
                if h.volume() > 1e-14 * self.scale() * self.scale() {
                    polygon = h
                        .halfspaces()
                        .into_iter()
                        .map(|(n, b)| {
                            let l = n.norm();
                            ([n[0] / l, n[1] / l], b / l)
                        })
                        .collect();
                    vertices = h.vertex_indices().into_iter().map(|i| pts[i]).collect();
                }
            }
        }
        DiskHull {
            disks: self.disks.clone(),
            polygon,
            vertices,
        }
    }

    /// Offset of a strictly separating line with normal `u`, if any.
    fn gap(&self, u: Point) -> Option<f64> {
        let tol = 1e-12 * self.scale();
        let mut iv: Vec<(f64, f64)> = self
            .disks
            .iter()
            .map(|d| {
                let t = dot(d.center, u);
                (t - d.radius, t + d.radius)
            })
            .collect();
        iv.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut reach = iv[0].1;
        for w in &iv[1..] {
            if w.0 > reach + tol {
                return Some(0.5 * (reach + w.0));
            }
            reach = reach.max(w.1);
        }
        None
    }

    /// Angles in `[0, π)` where two projected endpoints coincide.
    fn critical_angles(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (i, a) in self.disks.iter().enumerate() {
            for b in &self.disks[..i] {
                let w = sub(a.center, b.center);
                let rho = norm(w);
                if rho == 0.0 {
                    continue;
                }
                let phi = w[1].atan2(w[0]);
                let s = a.radius + b.radius;
                let dr = a.radius - b.radius;
                for c in [s, -s, dr, -dr] {
                    if c.abs() <= rho {
                        let alpha = (c / rho).acos();
                        for t in [phi + alpha, phi - alpha] {
                            out.push(t.rem_euclid(PI));
                        }
                    }
                }
            }
        }
        out.sort_by(f64::total_cmp);
        out.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        out
    }

    /// Exact separability: the order of the projected endpoints is constant
    /// between consecutive critical angles, so one direction per cell decides.
    pub fn is_separable(&self) -> Separation {
        if self.disks.len() < 2 {
            return Separation {
                separable: false,
                line: None,
                directions_tested: 0,
            };
        }
        let crit = self.critical_angles();
        let mut dirs: Vec<f64> = if crit.is_empty() {
            vec![0.0, FRAC_PI_2]
        } else {
            let mut v: Vec<f64> = crit.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
            v.push(0.5 * (crit[crit.len() - 1] + crit[0] + PI));
            v
        };
        dirs.extend_from_slice(&crit);
        for (i, &t) in dirs.iter().enumerate() {
            let u = unit(t);
            if let Some(s) = self.gap(u) {
                return Separation {
                    separable: true,
                    line: Some(Line { s, u }),
                    directions_tested: i + 1,
                };
            }
        }
        Separation {
            separable: false,
            line: None,
            directions_tested: dirs.len(),
        }
    }

    /// Whether `line` misses every closed disk and has disks on both sides.
    pub fn line_separates(&self, line: &Line) -> bool {
        let mut neg = false;
        let mut pos = false;
        for d in &self.disks {
            let t = dot(d.center, line.u) - line.s;
            if t.abs() <= d.radius {
                return false;
            }
            if t < 0.0 {
                neg = true;
            } else {
                pos = true;
            }
        }
        neg && pos
    }

    /// Smallest disk containing all disks.
    pub fn circumradius(&self) -> Circumcircle {
        let tol = 1e-12 * self.scale();
        let ds = &self.disks;
        let welzl = || -> Option<Disk> {
            let mut c = ds[0];
            for i in 1..ds.len() {
                if c.encloses(&ds[i], tol) {
                    continue;
                }
                c = ds[i];
                for j in 0..i {
                    if c.encloses(&ds[j], tol) {
                        continue;
                    }
                    c = circle2(&ds[i], &ds[j]);
                    for k in 0..j {
                        if c.encloses(&ds[k], tol) {
                            continue;
                        }
                        c = circle3(&ds[i], &ds[j], &ds[k], tol)?;
                    }
                }
            }
            ds.iter().all(|d| c.encloses(d, 1e3 * tol)).then_some(c)
        };
        let c = welzl().unwrap_or_else(|| brute_force_enclosing(ds, tol));
        certify(ds, c, self.scale())
    }

    /// Normalized or printed density of the family at `x` (0 outside the open disks).
    pub fn density_at(&self, mode: DensityMode, x: Point) -> f64 {
        self.disks
            .iter()
            .map(|d| {
                let q = d.radius * d.radius - dot(sub(x, d.center), sub(x, d.center));
                if q <= 0.0 {
                    0.0
                } else {
                    let k = match mode {
                        DensityMode::Normalized => 1.0 / PI,
                        DensityMode::Printed => 1.0 / (PI * d.radius),
                    };
                    k / q.sqrt()
                }
            })
            .sum()
    }

    /// `∫_{H(s,u) ∩ int K} f`: each open disk the line crosses contributes its
    /// full chord, `1` (normalized) or `1/r` (printed).
    pub fn sectional_integral(&self, mode: DensityMode, line: &Line) -> Result<f64> {
        let (lo, hi) = self.width_interval(line.u);
        if !(line.s > lo && line.s < hi) {
            return Err(Error::LineMissesBody);
        }
        Ok(self
            .disks
            .iter()
            .filter(|d| (dot(d.center, line.u) - line.s).abs() < d.radius)
            .map(|d| match mode {
                DensityMode::Normalized => 1.0,
                DensityMode::Printed => 1.0 / d.radius,
            })
            .sum())
    }

    /// The same integral by quadrature along each chord, after `t = a sin φ`.
    pub fn sectional_integral_quadrature(&self, mode: DensityMode, line: &Line) -> Result<f64> {
        self.sectional_integral(mode, line)?;
        let v = [-line.u[1], line.u[0]];
        let p = [line.s * line.u[0], line.s * line.u[1]];
        let mut total = 0.0;
        for d in &self.disks {
            let off = (dot(d.center, line.u) - line.s).abs();
            if off >= d.radius {
                continue;
            }
            let a = (d.radius * d.radius - off * off).sqrt();
            let t0 = dot(sub(d.center, p), v);
            // only this disk's density: the others are integrated over their own chords
            let single = DiskFamily { disks: vec![*d] };
            let h = |phi: f64| {
                let x = add_scaled(p, t0 + a * phi.sin(), v);
                single.density_at(mode, x) * a * phi.cos()
            };
            total += integrate(h, -FRAC_PI_2, FRAC_PI_2, 1e-13, 1e-13).value;
        }
        Ok(total)
    }

    /// `∫ f`: `Σ 2 r_j` (normalized) or `2N` (printed).
    pub fn total_mass(&self, mode: DensityMode) -> f64 {
        self.disks
            .iter()
            .filter(|d| d.radius > 0.0)
            .map(|d| match mode {
                DensityMode::Normalized => 2.0 * d.radius,
                DensityMode::Printed => 2.0,
            })
            .sum()
    }

    /// Polar quadrature of each disk's mass with `ρ = r sin φ`.
    pub fn total_mass_quadrature(&self, mode: DensityMode) -> f64 {
        self.disks
            .iter()
            .filter(|d| d.radius > 0.0)
            .map(|d| {
                let r = d.radius;
                let single = DiskFamily { disks: vec![*d] };
                let f = |phi: f64| {
                    let rho = r * phi.sin();
                    let x = add_scaled(d.center, rho, [1.0, 0.0]);
                    TAU * rho * single.density_at(mode, x) * r * phi.cos()
                };
                integrate(f, 0.0, FRAC_PI_2, 1e-13, 1e-13).value
            })
            .sum()
    }

    /// Interior point of `K`: the centre of the largest disk, or the vertex
    /// centroid when every radius is zero.
    pub fn interior_point(&self) -> Point {
        let big = self.disks.iter().max_by(|a, b| a.radius.total_cmp(&b.radius)).expect("nonempty");
        if big.radius > 0.0 {
            return big.center;
        }
        let n = self.disks.len() as f64;
        let s = self.disks.iter().fold([0.0, 0.0], |acc, d| add_scaled(acc, 1.0, d.center));
        [s[0] / n, s[1] / n]
    }
}

fn circle2(a: &Disk, b: &Disk) -> Disk {
    let w = sub(b.center, a.center);
    let dist = norm(w);
    if a.encloses(b, 0.0) {
        return *a;
    }
    if b.encloses(a, 0.0) {
        return *b;
    }
    let r = 0.5 * (dist + a.radius + b.radius);
    Disk {
        center: add_scaled(a.center, (r - a.radius) / dist, w),
        radius: r,
    }
}

/// Circle internally tangent to three disks; the smallest valid solution.
fn circle3(a: &Disk, b: &Disk, c: &Disk, tol: f64) -> Option<Disk> {
    // translate so a sits at the origin; rows: 2⟨C, c_i⟩ - 2R (r_i - r_a) = |c_i|² - r_i² + r_a²
    let o = a.center;
    let (pb, pc) = (sub(b.center, o), sub(c.center, o));
    let (ra, rb, rc) = (a.radius, b.radius, c.radius);
    let det = pb[0] * pc[1] - pb[1] * pc[0];
    let mut cands = Vec::new();
    if det.abs() > 1e-14 * (dot(pb, pb) + dot(pc, pc)).max(1e-300) {
        let kb = dot(pb, pb) - rb * rb + ra * ra;
        let kc = dot(pc, pc) - rc * rc + ra * ra;
        let (db, dc) = (2.0 * (rb - ra), 2.0 * (rc - ra));
        // C = P + Q R from ⟨C, c_b⟩ = x/2, ⟨C, c_c⟩ = y/2
        let solve = |x: f64, y: f64| -> Point { [0.5 * (x * pc[1] - y * pb[1]) / det, 0.5 * (pb[0] * y - pc[0] * x) / det] };
        let p = solve(kb, kc);
        let q = solve(db, dc);
        // |P + Q R|² = (R - r_a)²
        let qa = dot(q, q) - 1.0;
        let qb = 2.0 * (dot(p, q) + ra);
        let qc = dot(p, p) - ra * ra;
        let mut roots = Vec::new();
        if qa.abs() < 1e-14 {
            if qb.abs() > 1e-300 {
                roots.push(-qc / qb);
            }
        } else {
            let disc = qb * qb - 4.0 * qa * qc;
            if disc >= -1e-12 * qb * qb {
                let sq = disc.max(0.0).sqrt();
                roots.push((-qb + sq) / (2.0 * qa));
                roots.push((-qb - sq) / (2.0 * qa));
            }
        }
        for r in roots {
            if r.is_finite() && r >= ra.max(rb).max(rc) - tol {
                let cen = add_scaled(o, 1.0, add_scaled(p, r, q));
                cands.push(newton_polish([a, b, c], Disk { center: cen, radius: r }));
            }
        }
    }
    cands
        .into_iter()
        .filter(|d| [a, b, c].iter().all(|x| d.encloses(x, 1e3 * tol)))
        .min_by(|x, y| x.radius.total_cmp(&y.radius))
}

/// Newton steps on `|C - c_i| - R + r_i = 0` for three tangent disks.
fn newton_polish(ds: [&Disk; 3], mut d: Disk) -> Disk {
    for _ in 0..4 {
        let mut jac = nalgebra::Matrix3::zeros();
        let mut f = nalgebra::Vector3::zeros();
        for (i, x) in ds.iter().enumerate() {
            let w = sub(d.center, x.center);
            let n = norm(w);
            if n < 1e-300 {
                return d;
            }
            f[i] = n - d.radius + x.radius;
            jac[(i, 0)] = w[0] / n;
            jac[(i, 1)] = w[1] / n;
            jac[(i, 2)] = -1.0;
        }
        match jac.lu().solve(&f) {
            Some(step) if step.iter().all(|s| s.is_finite()) => {
                d.center = [d.center[0] - step[0], d.center[1] - step[1]];
                d.radius -= step[2];
            }
            _ => return d,
        }
    }
    d
}

/// Smallest enclosing circle over all bases of one, two or three disks.
fn brute_force_enclosing(ds: &[Disk], tol: f64) -> Disk {
    let n = ds.len();
    let mut best: Option<Disk> = None;
    let mut consider = |c: Disk| {
        if ds.iter().all(|d| c.encloses(d, 1e3 * tol)) && best.is_none_or(|b| c.radius < b.radius) {
            best = Some(c);
        }
    };
    for i in 0..n {
        consider(ds[i]);
        for j in 0..i {
            consider(circle2(&ds[i], &ds[j]));
            for k in 0..j {
                if let Some(c) = circle3(&ds[i], &ds[j], &ds[k], tol) {
                    consider(c);
                }
            }
        }
    }
    best.unwrap_or_else(|| {
        // rounding left every basis short: grow the widest pair until all fit
        let c = ds[0];
        let r = ds.iter().map(|d| norm(sub(d.center, c.center)) + d.radius).fold(0.0, f64::max);
        Disk { center: c.center, radius: r }
    })
}

fn certify(ds: &[Disk], c: Disk, scale: f64) -> Circumcircle {
    let excess: Vec<f64> = ds.iter().map(|d| norm(sub(d.center, c.center)) + d.radius - c.radius).collect();
    let support: Vec<usize> = (0..ds.len()).filter(|&i| excess[i].abs() <= 1e-9 * scale).collect();
    Circumcircle {
        center: c.center,
        radius: c.radius,
        tangency_residual: support.iter().map(|&i| excess[i].abs()).fold(0.0, f64::max),
        containment_excess: excess.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        support,
    }
}

/// Maximum number of open planks over `int K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrangementMultiplicity {
    pub max_mult: usize,
    pub witness: Point,
    /// Points evaluated, one per side of every edge of the arrangement inside `K`.
    pub cells_tested: usize,
}

/// Exact maximum plank multiplicity inside `int K`.
///
/// The count of open planks is constant on each cell of the arrangement of
/// plank boundary lines. A cell meeting `int K` either contains `int K` or has
/// an edge on a boundary line inside `K`, so testing both sides of the midpoint
/// of every edge piece (plus one interior point) reaches every cell.
pub fn plank_multiplicity(family: &DiskFamily, planks: &[Plank2D]) -> ArrangementMultiplicity {
    let hull = family.hull();
    let scale = family.scale();
    let count = |x: Point| planks.iter().filter(|p| p.contains_open(x)).count();
    let mut lines: Vec<(Point, f64)> = Vec::new();
    for p in planks {
        for s in p.interval {
            // canonical orientation so coincident boundaries merge
            let (n, s) = if p.u[0] < 0.0 || (p.u[0] == 0.0 && p.u[1] < 0.0) {
                ([-p.u[0], -p.u[1]], -s)
            } else {
                (p.u, s)
            };
            let dup = lines
                .iter()
                .any(|(m, t)| (m[0] - n[0]).abs() + (m[1] - n[1]).abs() < 1e-12 && (t - s).abs() < 1e-12 * scale);
            if !dup {
                lines.push((n, s));
            }
        }
    }
    let q = family.interior_point();
    let mut best = (count(q), q);
    let mut tested = 1;
    for (li, &(n, s)) in lines.iter().enumerate() {
        let v = [-n[1], n[0]];
        let p0 = [s * n[0], s * n[1]];
        let Some((tmin, tmax)) = hull.chord(p0, v) else { continue };
        let mut cuts = vec![tmin, tmax];
        for (lj, &(m, t)) in lines.iter().enumerate() {
            let mv = dot(m, v);
            if lj != li && mv.abs() > 1e-12 {
                let tc = (t - dot(m, p0)) / mv;
                if tc > tmin && tc < tmax {
                    cuts.push(tc);
                }
            }
        }
        cuts.sort_by(f64::total_cmp);
        for w in cuts.windows(2) {
            if w[1] - w[0] <= 1e-14 * scale {
                continue;
            }
            let x = add_scaled(p0, 0.5 * (w[0] + w[1]), v);
            let eta = lines
                .iter()
                .enumerate()
                .filter(|&(lj, _)| lj != li)
                .map(|(_, &(m, t))| (dot(m, x) - t).abs())
                .fold(0.25 * (w[1] - w[0]), f64::min)
                * 0.5;
            for side in [-1.0, 1.0] {
                let mut e = eta;
                for _ in 0..80 {
                    let y = add_scaled(x, side * e, n);
                    if hull.contains(y, 0.0) {
                        tested += 1;
                        let c = count(y);
                        if c > best.0 {
                            best = (c, y);
                        }
                        break;
                    }
                    e *= 0.5;
                }
            }
        }
    }
    ArrangementMultiplicity {
        max_mult: best.0,
        witness: best.1,
        cells_tested: tested,
    }
}

/// Uniform point of `K` by rejection from its bounding box.
pub fn sample_hull<R: Rng + ?Sized>(family: &DiskFamily, hull: &DiskHull, rng: &mut R) -> Point {
    let (x0, x1) = family.width_interval([1.0, 0.0]);
    let (y0, y1) = family.width_interval([0.0, 1.0]);
    loop {
        let x = [rng.random_range(x0..=x1), rng.random_range(y0..=y1)];
        if hull.contains(x, 0.0) {
            return x;
        }
    }
}

/// Sampled maximum of open-plank multiplicity.
pub fn plank_multiplicity_mc(family: &DiskFamily, planks: &[Plank2D], samples: usize, seed: u64) -> (usize, Point) {
    let hull = family.hull();
    let mut rng = rng_for(seed, 0);
    let mut best = (0, family.interior_point());
    for _ in 0..samples {
        let x = sample_hull(family, &hull, &mut rng);
        let c = planks.iter().filter(|p| p.contains_open(x)).count();
        if c > best.0 {
            best = (c, x);
        }
    }
    best
}

#[derive(Serialize)]
struct FalconerInstance<'a> {
    disks: &'a [Disk],
    planks: &'a [Plank2D],
    r: usize,
}

fn falconer_digest(family: &DiskFamily, planks: &[Plank2D], r: usize) -> String {
    digest(&FalconerInstance {
        disks: &family.disks,
        planks,
        r,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualFalconerReport {
    /// `Σ w_i ≤ r diam_NS`.
    pub widths: BoundReport,
    /// `2 R_K ≤ diam_NS`.
    pub circumradius: BoundReport,
    pub exact: ArrangementMultiplicity,
    pub mc_max_mult: usize,
}

/// Checks the planks against K's width and the r-fold packing condition,
/// exactly on the arrangement and by sampling.
pub fn verify_plank_packing(family: &DiskFamily, planks: &[Plank2D], r: usize, samples: usize, seed: u64) -> Result<(ArrangementMultiplicity, usize)> {
    let tol = 1e-9 * family.scale();
    for (i, p) in planks.iter().enumerate() {
        let (lo, hi) = family.width_interval(p.u);
        if p.interval[0] < lo - tol || p.interval[1] > hi + tol {
            return Err(Error::NotAPacking(format!("plank {i} is wider than K in its direction")));
        }
    }
    let exact = plank_multiplicity(family, planks);
    let (mc, mc_witness) = plank_multiplicity_mc(family, planks, samples, seed);
    if exact.max_mult > r || mc > r {
        let (m, w) = if exact.max_mult >= mc { (exact.max_mult, exact.witness) } else { (mc, mc_witness) };
        return Err(Error::NotAPacking(format!("multiplicity {m} > {r}; witness {w:?}")));
    }
    Ok((exact, mc))
}

/// The plank bound for NS domains and the companion `2 R_K ≤ diam_NS`.
pub fn verify_dual_falconer(family: &DiskFamily, planks: &[Plank2D], r: usize, samples: usize, seed: u64) -> Result<DualFalconerReport> {
    if family.is_separable().separable {
        return Err(Error::NotNS);
    }
    let (exact, mc) = verify_plank_packing(family, planks, r, samples, seed)?;
    let dig = falconer_digest(family, planks, r);
    let lhs: f64 = planks.iter().map(Plank2D::width).sum();
    let diam = family.ns_diameter();
    let mut widths = BoundReport::new("dual_falconer", Estimate::exact(lhs), Estimate::exact(r as f64 * diam), Direction::Le, dig.clone());
    if widths.is_tight() {
        widths = widths.note("equality");
    }
    let cc = family.circumradius();
    let circumradius = BoundReport::new(
        "ns_circumradius",
        Estimate::exact(2.0 * cc.radius),
        Estimate::exact(diam),
        Direction::Le,
        dig,
    );
    Ok(DualFalconerReport {
        widths,
        circumradius,
        exact,
        mc_max_mult: mc,
    })
}

/// Ridge estimate: with `g_i = (1/r) χ_[a_i, b_i]` the packing makes
/// `Σ g_i(⟨x, u_i⟩) ≤ 1` on `K`, and then `(1/r) Σ w_i ≤ ∫ f = diam_NS`.
pub fn ridge_bound_check(family: &DiskFamily, planks: &[Plank2D], r: usize, samples: usize, seed: u64) -> Result<BoundReport> {
    if r == 0 {
        return Err(Error::Domain("r must be positive".into()));
    }
    let exact = plank_multiplicity(family, planks);
    let (mc, w) = plank_multiplicity_mc(family, planks, samples, seed);
    let (m, witness) = if exact.max_mult >= mc { (exact.max_mult, exact.witness) } else { (mc, w) };
    let value = m as f64 / r as f64;
    if value > 1.0 {
        return Err(Error::PointwiseViolated {
            witness: witness.to_vec(),
            value,
        });
    }
    let lhs: f64 = planks.iter().map(Plank2D::width).sum::<f64>() / r as f64;
    Ok(BoundReport::new(
        "ridge_bound",
        Estimate::exact(lhs),
        Estimate::exact(family.total_mass(DensityMode::Normalized)),
        Direction::Le,
        falconer_digest(family, planks, r),
    ))
}

/// `m(L⁺_1(K)) ≥ 2 R_K` with the normalized density as the admissible function:
/// `2 R_K ≤ ∫ f = diam_NS`.
pub fn inf_estimate_check(family: &DiskFamily) -> BoundReport {
    let cc = family.circumradius();
    let mass = family.total_mass(DensityMode::Normalized);
    BoundReport::new(
        "inf_estimate",
        Estimate::exact(mass),
        Estimate::exact(2.0 * cc.radius),
        Direction::Ge,
        digest(&family.disks),
    )
    .note(format!("diam_NS = {}, R_K = {}", family.ns_diameter(), cc.radius))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariationalCheck {
    /// `√(2 M Δ)`.
    pub value: f64,
    /// `√(2 M / Δ)`.
    pub argmin: f64,
    pub discrete_value: f64,
    pub discrete_argmin: f64,
    pub relative_gap: f64,
}

/// `inf { ∫_0^A F : F ≥ Δ on [0, A], ∫_0^A t F ≥ M } = √(2 M Δ)`, with a
/// discretized minimizer: for each `A` on a grid, `F = Δ` on a cell grid of
/// `[0, A]` plus the missing moment placed on the last cell.
pub fn variational_inf(m: f64, delta: f64) -> Result<VariationalCheck> {
    if !(m > 0.0 && delta > 0.0 && m.is_finite() && delta.is_finite()) {
        return Err(Error::Domain(format!("M = {m}, Δ = {delta}")));
    }
    let value = (2.0 * m * delta).sqrt();
    let argmin = (2.0 * m / delta).sqrt();
    const CELLS: usize = 400;
    const LENGTHS: usize = 2000;
    let mut best = (f64::INFINITY, 0.0);
    for j in 1..=LENGTHS {
        let a = 3.0 * argmin * j as f64 / LENGTHS as f64;
        let h = a / CELLS as f64;
        let mut mass = 0.0;
        let mut moment = 0.0;
        for i in 0..CELLS {
            let t = (i as f64 + 0.5) * h;
            mass += delta * h;
            moment += delta * t * h;
        }
        let t_last = (CELLS as f64 - 0.5) * h;
        let extra = (m - moment).max(0.0) / t_last;
        let total = mass + extra;
        if total < best.0 {
            best = (total, a);
        }
    }
    Ok(VariationalCheck {
        value,
        argmin,
        discrete_value: best.0,
        discrete_argmin: best.1,
        relative_gap: (best.0 - value).abs() / value,
    })
}

/// `n` disks, each placed near a previous one; repeated until non-separable.
pub fn random_ns_family<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DiskFamily {
    loop {
        let f = random_family(n, rng);
        if !f.is_separable().separable {
            return f;
        }
    }
}

/// `n` disks with radii in `[0.3, 1.5]`, each centred at distance
/// `(r_i + r_j) · U(0.6, 1.4)` from a random earlier disk `j`.
pub fn random_family<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DiskFamily {
    let n = n.max(1);
    let mut disks: Vec<Disk> = Vec::with_capacity(n);
    for i in 0..n {
        let r = rng.random_range(0.3..1.5);
        let center = if i == 0 {
            [0.0, 0.0]
        } else {
            let j = rng.random_range(0..i);
            let dist = (r + disks[j].radius) * rng.random_range(0.6..1.4);
            add_scaled(disks[j].center, dist, unit(rng.random_range(0.0..TAU)))
        };
        disks.push(Disk { center, radius: r });
    }
    DiskFamily { disks }
}

/// `r` layers of parallel planks inside the width of `K`, each layer in a random direction.
pub fn random_plank_packing<R: Rng + ?Sized>(family: &DiskFamily, r: usize, per_layer: usize, rng: &mut R) -> Vec<Plank2D> {
    let mut out = Vec::new();
    for _ in 0..r {
        let u = unit(rng.random_range(0.0..PI));
        let (lo, hi) = family.width_interval(u);
        let mut cuts: Vec<f64> = (0..2 * per_layer).map(|_| rng.random_range(lo..hi)).collect();
        cuts.push(lo);
        cuts.push(hi);
        cuts.sort_by(f64::total_cmp);
        for w in cuts.windows(2) {
            if w[1] - w[0] > 1e-9 * (hi - lo) && rng.random_bool(0.5) {
                out.push(Plank2D { u, interval: [w[0], w[1]] });
            }
        }
    }
    out
}

/// Random line meeting `int K`.
pub fn random_line_through<R: Rng + ?Sized>(family: &DiskFamily, rng: &mut R) -> Line {
    let u = unit(rng.random_range(0.0..TAU));
    let (lo, hi) = family.width_interval(u);
    loop {
        let s = rng.random_range(lo..hi);
        if s > lo && s < hi {
            return Line { s, u };
        }
    }
}

/// Static SVG of the disks, the outline of `K`, planks and an optional line.
pub fn to_svg(family: &DiskFamily, planks: &[Plank2D], line: Option<&Line>) -> String {
    use std::fmt::Write;
    let (x0, x1) = family.width_interval([1.0, 0.0]);
    let (y0, y1) = family.width_interval([0.0, 1.0]);
    let pad = 0.1 * (x1 - x0).max(y1 - y0);
    let (bx0, bx1, by0, by1) = (x0 - pad, x1 + pad, y0 - pad, y1 + pad);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}" width="600" height="{}">"#,
        bx0,
        -by1,
        bx1 - bx0,
        by1 - by0,
        (600.0 * (by1 - by0) / (bx1 - bx0)).round()
    );
    let sw = 0.004 * (bx1 - bx0);
    // flip y so the picture uses mathematical orientation
    let _ = writeln!(s, r#"<g transform="scale(1,-1)">"#);
    let clip = |u: Point, t: f64, lenv: f64| -> (Point, Point) {
        let v = [-u[1], u[0]];
        let p = [t * u[0], t * u[1]];
        (add_scaled(p, -lenv, v), add_scaled(p, lenv, v))
    };
    let big = 2.0 * ((bx1 - bx0).hypot(by1 - by0) + norm([bx0.abs().max(bx1.abs()), by0.abs().max(by1.abs())]));
    for p in planks {
        let (a0, a1) = clip(p.u, p.interval[0], big);
        let (b0, b1) = clip(p.u, p.interval[1], big);
        let _ = writeln!(
            s,
            r##"<polygon points="{},{} {},{} {},{} {},{}" fill="#3b82f6" fill-opacity="0.25" stroke="#1d4ed8" stroke-width="{sw}"/>"##,
            a0[0], a0[1], a1[0], a1[1], b1[0], b1[1], b0[0], b0[1]
        );
    }
    let outline: Vec<String> = (0..720)
        .map(|i| {
            let u = unit(TAU * i as f64 / 720.0);
            let d = family
                .disks
                .iter()
                .max_by(|a, b| (dot(a.center, u) + a.radius).total_cmp(&(dot(b.center, u) + b.radius)))
                .expect("nonempty");
            let p = add_scaled(d.center, d.radius, u);
            format!("{},{}", p[0], p[1])
        })
        .collect();
    let _ = writeln!(
        s,
        r##"<polygon points="{}" fill="none" stroke="#111827" stroke-width="{sw}"/>"##,
        outline.join(" ")
    );
    for d in &family.disks {
        let _ = writeln!(
            s,
            r##"<circle cx="{}" cy="{}" r="{}" fill="#f59e0b" fill-opacity="0.35" stroke="#b45309" stroke-width="{sw}"/>"##,
            d.center[0], d.center[1], d.radius
        );
    }
    if let Some(l) = line {
        let (a, b) = clip(l.u, l.s, big);
        let _ = writeln!(
            s,
            r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#dc2626" stroke-width="{}"/>"##,
            a[0],
            a[1],
            b[0],
            b[1],
            2.0 * sw
        );
    }
    s.push_str("</g>\n</svg>\n");
    s
}
