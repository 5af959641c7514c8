//! Both sides of the cylinder inequalities evaluated on concrete instances,
//! reported with slack, tolerance and a digest of the instance.

use std::collections::HashMap;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::body::ConvexBody;
use crate::cap_packing::chain_rhs;
use crate::cylinder::{Cylinder, CylinderBase};
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::multiplicity::{verify_covering, verify_packing, Verification};
use crate::mvee::banach_mazur_bound;
use crate::projection::{cauchy_surface_area, max_hyperplane_projection, plank_constant};
use crate::sampling::Estimate;
use crate::slice::{max_slice, max_slice_over_projection, SearchRegion};
use crate::special::{binomial, omega};

/// Relative tolerance on exact paths.
pub const EXACT_TOL: f64 = 1e-9;
/// Standard errors allowed on Monte Carlo paths.
pub const SIGMAS: f64 = 3.0;
/// Relative agreement required between Cauchy quadrature and exact surface area.
pub const CAUCHY_TOL: f64 = 5e-3;
/// MVEE tolerance used for the Banach–Mazur bound.
pub const MVEE_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    /// `|lhs - rhs| ≤ tolerance`.
    #[serde(rename = "~")]
    Approx,
}

impl Direction {
    pub fn symbol(&self) -> &'static str {
        match self {
            Direction::Le => "<=",
            Direction::Ge => ">=",
            Direction::Approx => "~",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub theorem_id: String,
    pub lhs: f64,
    pub rhs: f64,
    pub direction: Direction,
    /// `rhs - lhs` for `<=`, `lhs - rhs` for `>=`, `-|lhs - rhs|` for `~`.
    pub slack: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// A side carries Monte Carlo error and the tolerance is a 3σ band.
    pub probabilistic: bool,
    pub lhs_std_error: f64,
    pub rhs_std_error: f64,
    /// SHA-256 of the canonical JSON of the instance.
    pub instance_digest: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl BoundReport {
    pub fn new(theorem_id: &str, lhs: Estimate, rhs: Estimate, direction: Direction, instance_digest: String) -> BoundReport {
        let scale = 1f64.max(lhs.value.abs()).max(rhs.value.abs());
        let sigma = lhs.std_error.hypot(rhs.std_error);
        let tolerance = EXACT_TOL * scale + SIGMAS * sigma;
        Self::with_tolerance(theorem_id, lhs, rhs, direction, tolerance, instance_digest)
    }

    pub fn with_tolerance(
        theorem_id: &str,
        lhs: Estimate,
        rhs: Estimate,
        direction: Direction,
        tolerance: f64,
        instance_digest: String,
    ) -> BoundReport {
        let slack = match direction {
            Direction::Le => rhs.value - lhs.value,
            Direction::Ge => lhs.value - rhs.value,
            Direction::Approx => -(lhs.value - rhs.value).abs(),
        };
        BoundReport {
            theorem_id: theorem_id.to_string(),
            lhs: lhs.value,
            rhs: rhs.value,
            direction,
            slack,
            tolerance,
            pass: slack >= -tolerance,
            probabilistic: !(lhs.is_exact() && rhs.is_exact()),
            lhs_std_error: lhs.std_error,
            rhs_std_error: rhs.std_error,
            instance_digest,
            notes: Vec::new(),
        }
    }

    pub fn note(mut self, s: impl Into<String>) -> BoundReport {
        self.notes.push(s.into());
        self
    }

    /// Replaces the relative exact-path tolerance by `rel`, keeping the
    /// sampling band. Fixed-tolerance comparisons are left alone.
    pub fn retolerate(mut self, rel: f64) -> BoundReport {
        if self.direction != Direction::Approx {
            let scale = 1f64.max(self.lhs.abs()).max(self.rhs.abs());
            self.tolerance = rel * scale + SIGMAS * self.lhs_std_error.hypot(self.rhs_std_error);
            self.pass = self.slack >= -self.tolerance;
        }
        self
    }

    /// Equality up to the exact-path tolerance.
    pub fn is_tight(&self) -> bool {
        self.slack.abs() <= EXACT_TOL * 1f64.max(self.lhs.abs()).max(self.rhs.abs())
    }
}

/// Hex SHA-256 of the JSON encoding of `value`.
pub fn digest<T: Serialize + ?Sized>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("instances serialize");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Sampling budget of the multiplicity precondition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sampling {
    pub samples: usize,
    pub seed: u64,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling { samples: 100_000, seed: 0 }
    }
}

#[derive(Serialize)]
struct Instance<'a> {
    body: &'a ConvexBody,
    cylinders: &'a [Cylinder],
    r: usize,
}

fn instance_digest(body: &ConvexBody, family: &[Cylinder], r: usize) -> String {
    digest(&Instance { body, cylinders: family, r })
}

/// The common `k` of a nonempty family living in `body`'s space.
pub fn family_k(body: &ConvexBody, family: &[Cylinder]) -> Result<usize> {
    let first = family.first().ok_or_else(|| Error::Invalid("empty cylinder family".into()))?;
    for c in family {
        if c.ambient_dim() != body.dim() {
            return Err(Error::DimensionMismatch {
                expected: body.dim(),
                got: c.ambient_dim(),
            });
        }
        if c.k() != first.k() {
            return Err(Error::Invalid("cylinders of mixed codimension".into()));
        }
    }
    Ok(first.k())
}

pub fn sum_crv(body: &ConvexBody, family: &[Cylinder]) -> Result<Estimate> {
    family.iter().map(|c| c.crv(body)).sum()
}

fn witness_text(v: &Verification) -> String {
    match (&v.witness, v.uncontained) {
        (Some(w), _) => format!("witness {w:?}"),
        (None, Some(i)) => format!("base of cylinder {i} leaves the projection of K"),
        _ => String::new(),
    }
}

fn require_packing(body: &ConvexBody, family: &[Cylinder], r: usize, s: Sampling) -> Result<Verification> {
    let v = verify_packing(body, family, r, s.samples, s.seed)?;
    if !v.pass {
        return Err(Error::NotAPacking(format!(
            "multiplicity {} > {r}; {}",
            v.report.max_mult,
            witness_text(&v)
        )));
    }
    Ok(v)
}

fn require_covering(body: &ConvexBody, family: &[Cylinder], r: usize, s: Sampling) -> Result<Verification> {
    let v = verify_covering(body, family, r, s.samples, s.seed)?;
    if !v.pass {
        return Err(Error::NotACovering(format!(
            "multiplicity {} < {r}; {}",
            v.report.min_mult,
            witness_text(&v)
        )));
    }
    Ok(v)
}

fn is_quadric(body: &ConvexBody) -> bool {
    matches!(body, ConvexBody::Ball(_) | ConvexBody::Ellipsoid(_))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoveringMode {
    /// `Σ crv ≥ r / C(d, k)` for any body.
    General,
    /// `Σ crv ≥ r` for `k = 1` and an ellipsoid.
    Ellipsoid,
}

/// Lower bound on `Σ crv` of an r-fold covering.
pub fn check_covering_lower(
    body: &ConvexBody,
    family: &[Cylinder],
    r: usize,
    mode: CoveringMode,
    s: Sampling,
) -> Result<BoundReport> {
    let k = family_k(body, family)?;
    let d = body.dim();
    if mode == CoveringMode::Ellipsoid && !(k == 1 && is_quadric(body)) {
        return Err(Error::Domain("ellipsoid covering mode needs k = 1 and an ellipsoid".into()));
    }
    require_covering(body, family, r, s)?;
    let lhs = sum_crv(body, family)?;
    let (id, rhs) = match mode {
        CoveringMode::General => ("covering_lower", r as f64 / binomial(d, k)),
        CoveringMode::Ellipsoid => ("covering_lower_ellipsoid", r as f64),
    };
    Ok(BoundReport::new(id, lhs, Estimate::exact(rhs), Direction::Ge, instance_digest(body, family, r)))
}

/// `Σ crv ≤ r` for r-fold packings of an ellipsoid with `k ∈ {1, 2}`.
pub fn check_packing_upper_ellipsoid(body: &ConvexBody, family: &[Cylinder], r: usize, s: Sampling) -> Result<BoundReport> {
    let k = family_k(body, family)?;
    if !is_quadric(body) {
        return Err(Error::Domain("packing bound needs an ellipsoid".into()));
    }
    if !(k == 1 || k == 2) {
        return Err(Error::Domain(format!("packing bound needs k ∈ {{1, 2}}, got {k}")));
    }
    require_packing(body, family, r, s)?;
    let lhs = sum_crv(body, family)?;
    Ok(BoundReport::new(
        "packing_upper_ellipsoid",
        lhs,
        Estimate::exact(r as f64),
        Direction::Le,
        instance_digest(body, family, r),
    ))
}

/// `Σ crv_K ≤ r d_K^{d-k}` for `k ∈ {1, 2}`, with `d_K` replaced by the
/// smaller of the MVEE-certified bound and John's bound.
pub fn check_packing_scaled(body: &ConvexBody, family: &[Cylinder], r: usize, s: Sampling) -> Result<BoundReport> {
    let k = family_k(body, family)?;
    if !(k == 1 || k == 2) {
        return Err(Error::Domain(format!("packing bound needs k ∈ {{1, 2}}, got {k}")));
    }
    require_packing(body, family, r, s)?;
    let bm = banach_mazur_bound(body, MVEE_TOL)?;
    let dk = bm.bound.min(bm.john_bound);
    let lhs = sum_crv(body, family)?;
    let rhs = r as f64 * dk.powi((body.dim() - k) as i32);
    Ok(BoundReport::new(
        "packing_scaled",
        lhs,
        Estimate::exact(rhs),
        Direction::Le,
        instance_digest(body, family, r),
    )
    .note(format!("d_K <= {dk} (mvee {}, john {})", bm.bound, bm.john_bound)))
}

fn frame_key(f: &Frame) -> Vec<u64> {
    f.matrix().iter().map(|x| x.to_bits()).collect()
}

/// `max_z vol_k(K ∩ (E z + H))` and the same over `z ∈ B` (the section of
/// `C̄ = C ∩ K`), with the relative grid-to-polish change of each search.
fn section_ratio(body: &ConvexBody, c: &Cylinder, cache: &mut HashMap<Vec<u64>, (f64, f64)>) -> Result<(f64, f64)> {
    let k = c.k();
    let e = c.frame();
    let key = frame_key(e);
    let (of_body, spread_body) = match (cache.get(&key), body) {
        (Some(&v), _) => v,
        (None, ConvexBody::Ball(b)) => {
            let v = (omega(k) * b.radius.powi(k as i32), 0.0);
            cache.insert(key, v);
            v
        }
        (None, _) => {
            let m = max_slice_over_projection(body, e)?;
            let v = (m.value, spread(&m.levels));
            cache.insert(key, v);
            v
        }
    };
    // the unit ball cut by a cap cylinder: largest section at cos δ · pole
    if let (ConvexBody::Ball(b), CylinderBase::Cap { delta, .. }) = (body, c.base()) {
        if b.radius == 1.0 && b.center.iter().all(|&x| x == 0.0) {
            return Ok((of_body / (delta.sin().powi(k as i32) * omega(k)), spread_body));
        }
    }
    let h = e.complement()?;
    let (lo, hi) = c.base().bounding_box();
    let shadow = body.project(e)?;
    let contains = |z: &DVector<f64>| c.base().contains(z.as_slice(), 0.0) && shadow.contains(z, 1e-12);
    let m = max_slice(body, e, &h, &SearchRegion { contains: &contains, lo, hi })?;
    if !(m.value > 0.0) {
        return Err(Error::DegenerateProjection);
    }
    Ok((of_body / m.value, spread_body.max(spread(&m.levels))))
}

fn spread(levels: &[f64]) -> f64 {
    let last = *levels.last().unwrap_or(&0.0);
    let grid = levels.len().checked_sub(2).map_or(last, |i| levels[i]);
    if last > 0.0 {
        (last - grid) / last
    } else {
        0.0
    }
}

/// `Σ crv ≤ r C(d, k) max_i maxslice(K, H_i) / maxslice(C̄_i, H_i)` for r-fold packings.
pub fn check_covcylgen(body: &ConvexBody, family: &[Cylinder], r: usize, s: Sampling) -> Result<BoundReport> {
    let k = family_k(body, family)?;
    require_packing(body, family, r, s)?;
    let mut cache = HashMap::new();
    let mut worst = 0f64;
    let mut worst_spread = 0f64;
    for c in family {
        let (ratio, sp) = section_ratio(body, c, &mut cache)?;
        worst = worst.max(ratio);
        worst_spread = worst_spread.max(sp);
    }
    let lhs = sum_crv(body, family)?;
    let rhs = r as f64 * binomial(body.dim(), k) * worst;
    Ok(BoundReport::new(
        "covcylgen",
        lhs,
        Estimate::exact(rhs),
        Direction::Le,
        instance_digest(body, family, r),
    )
    .note(format!("section search relative spread {worst_spread:.3e}")))
}

#[derive(Serialize)]
struct RsInstance<'a> {
    body: &'a ConvexBody,
    frame: &'a Frame,
}

/// Rogers–Shephard for the `k`-dimensional subspace `E`:
/// `vol K ≤ maxslice(K, E⊥) vol_k(P_E K) ≤ C(d, k) vol K`.
/// Returns the upper and the lower (Fubini) report.
pub fn check_rogers_shephard(body: &ConvexBody, e: &Frame) -> Result<(BoundReport, BoundReport)> {
    let d = body.dim();
    if e.ambient_dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: e.ambient_dim(),
        });
    }
    let k = e.rank();
    if k == 0 || k >= d {
        return Err(Error::Domain(format!("subspace dimension {k} outside [1, {}]", d - 1)));
    }
    let section = max_slice_over_projection(body, e)?;
    let proj = body.project(e)?.volume()?;
    let lhs = proj.scale(section.value);
    let vol = body.volume()?;
    let dig = digest(&RsInstance { body, frame: e });
    let sp = format!("section search relative spread {:.3e}", spread(&section.levels));
    let upper = BoundReport::new("rsh_upper", lhs, vol.scale(binomial(d, k)), Direction::Le, dig.clone()).note(sp.clone());
    let lower = BoundReport::new("rsh_lower", lhs, vol, Direction::Ge, dig).note(sp);
    Ok((upper, lower))
}

/// `Σ vol_{d-1}(B_i) ≤ c_d r max_L vol_{d-1}(P_L K)` for r-fold packings by
/// cylinders with one-dimensional `H`, `d ∈ {2, 3, 4}`.
pub fn check_pack1cyl(body: &ConvexBody, family: &[Cylinder], r: usize, s: Sampling) -> Result<BoundReport> {
    let k = family_k(body, family)?;
    if k != 1 {
        return Err(Error::Domain(format!("needs one-dimensional H, got k = {k}")));
    }
    require_packing(body, family, r, s)?;
    let d = body.dim();
    let lhs: Estimate = family.iter().map(|c| c.base().volume()).sum::<Result<Estimate>>()?;
    let shadow = max_hyperplane_projection(body, 60, 6)?;
    let rhs = plank_constant(d) * r as f64 * shadow.value;
    Ok(BoundReport::new(
        "pack1cyl",
        lhs,
        Estimate::exact(rhs),
        Direction::Le,
        instance_digest(body, family, r),
    )
    .note(format!("c_d = {}, max shadow {}", plank_constant(d), shadow.value)))
}

/// Cauchy-formula surface area against the exact one, relative tolerance [`CAUCHY_TOL`].
pub fn check_cauchy_surface(body: &ConvexBody, nodes: usize) -> Result<BoundReport> {
    let exact = match body {
        ConvexBody::Polytope(p) => p.hull().surface_area(),
        ConvexBody::Ball(b) => {
            let d = b.center.len();
            d as f64 * omega(d) * b.radius.powi(d as i32 - 1)
        }
        ConvexBody::Ellipsoid(_) => return Err(Error::Domain("no closed-form surface area for ellipsoids".into())),
    };
    let q = cauchy_surface_area(body, nodes)?;
    Ok(BoundReport::with_tolerance(
        "cauchy_surface",
        Estimate::exact(q),
        Estimate::exact(exact),
        Direction::Approx,
        CAUCHY_TOL * exact,
        digest(body),
    ))
}

/// `Σ crv ≥ chain_rhs(d, k, δ)` for a family of cap cylinders of common
/// angle `δ` in the unit ball.
pub fn check_cap_chain(body: &ConvexBody, family: &[Cylinder]) -> Result<BoundReport> {
    let k = family_k(body, family)?;
    match body {
        ConvexBody::Ball(b) if b.radius == 1.0 && b.center.iter().all(|&x| x == 0.0) => {}
        _ => return Err(Error::Domain("the cap chain lives in the centred unit ball".into())),
    }
    let mut delta = None;
    for c in family {
        match (c.base(), delta) {
            (CylinderBase::Cap { delta: dc, .. }, None) => delta = Some(*dc),
            (CylinderBase::Cap { delta: dc, .. }, Some(dl)) if *dc == dl => {}
            _ => return Err(Error::Domain("cap chain needs caps of one common angle".into())),
        }
    }
    let delta = delta.expect("family is nonempty");
    let rhs = chain_rhs(body.dim(), k, delta)?;
    Ok(BoundReport::new(
        "cap_chain",
        sum_crv(body, family)?,
        Estimate::exact(rhs),
        Direction::Ge,
        instance_digest(body, family, 1),
    )
    .note(format!("N = {}, delta = {delta}", family.len())))
}

/// Header of the summary table.
pub fn csv_header() -> &'static str {
    "theorem_id,lhs,rhs,direction,slack,tolerance,pass,probabilistic,instance_digest"
}

/// One row of the summary table.
pub fn csv_row(r: &BoundReport) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{}",
        r.theorem_id,
        r.lhs,
        r.rhs,
        r.direction.symbol(),
        r.slack,
        r.tolerance,
        r.pass,
        r.probabilistic,
        r.instance_digest
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::{Ellipsoid, Polytope};
    use std::f64::consts::PI;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    fn partition(u: &DVector<f64>, lo: f64, hi: f64, n: usize) -> Vec<Cylinder> {
        (0..n)
            .map(|i| {
                let a = lo + (hi - lo) * i as f64 / n as f64;
                let b = lo + (hi - lo) * (i + 1) as f64 / n as f64;
                Cylinder::plank(u, a, b).unwrap()
            })
            .collect()
    }

    fn repeat(f: &[Cylinder], r: usize) -> Vec<Cylinder> {
        (0..r).flat_map(|_| f.iter().cloned()).collect()
    }

    const S: Sampling = Sampling { samples: 20_000, seed: 1 };

    #[test]
    fn plank_partition_is_tight_both_ways() {
        let disk = ConvexBody::unit_ball(2);
        let fam = partition(&v(&[0.6, 0.8]), -1.0, 1.0, 5);
        let cov = check_covering_lower(&disk, &fam, 1, CoveringMode::Ellipsoid, S).unwrap();
        let pack = check_packing_upper_ellipsoid(&disk, &fam, 1, S).unwrap();
        assert!(cov.pass && pack.pass && cov.is_tight() && pack.is_tight());
        assert!(!cov.probabilistic);
        let three = repeat(&fam, 3);
        let cov3 = check_covering_lower(&disk, &three, 3, CoveringMode::Ellipsoid, S).unwrap();
        assert!(cov3.pass && (cov3.lhs - 3.0).abs() < 1e-12);
        let two = repeat(&fam, 2);
        assert!(check_packing_upper_ellipsoid(&disk, &two, 2, S).unwrap().is_tight());
        assert!(matches!(
            check_packing_upper_ellipsoid(&disk, &two, 1, S),
            Err(Error::NotAPacking(_))
        ));
        let gap: Vec<_> = fam.iter().skip(1).cloned().collect();
        assert!(matches!(
            check_covering_lower(&disk, &gap, 1, CoveringMode::General, S),
            Err(Error::NotACovering(_))
        ));
    }

    #[test]
    fn redundant_covering_of_an_ellipse() {
        let e = ConvexBody::Ellipsoid(Ellipsoid::axis_aligned(v(&[0.0, 0.0]), &[2.0, 1.0]).unwrap());
        let mut fam = partition(&v(&[1.0, 0.0]), -2.0, 2.0, 4);
        fam.push(Cylinder::plank(&v(&[1.0, 0.0]), -0.5, 0.7).unwrap());
        let rep = check_covering_lower(&e, &fam, 1, CoveringMode::Ellipsoid, S).unwrap();
        assert!(rep.pass && rep.slack > 0.2);
        let gen = check_covering_lower(&e, &fam, 1, CoveringMode::General, S).unwrap();
        assert!((gen.rhs - 0.5).abs() < 1e-15);
    }

    #[test]
    fn scaled_packing_bounds() {
        let sq = ConvexBody::Polytope(Polytope::axis_box(&[-1.0, -1.0], &[1.0, 1.0]).unwrap());
        let fam = partition(&v(&[1.0, 0.0]), -1.0, 1.0, 4);
        let rep = check_packing_scaled(&sq, &fam, 1, S).unwrap();
        assert!(rep.pass);
        assert!((rep.rhs - 2f64.sqrt()).abs() < 1e-5, "{}", rep.rhs);
        let tri = ConvexBody::Polytope(Polytope::new(vec![v(&[0.0, 0.0]), v(&[3.0, 0.0]), v(&[1.0, 2.0])]).unwrap());
        let fam = vec![Cylinder::plank(&v(&[0.0, 1.0]), 0.0, 1.0).unwrap()];
        let rep = check_packing_scaled(&tri, &fam, 1, S).unwrap();
        assert!(rep.pass && rep.rhs <= 2.0 + 1e-9);
        let disk = ConvexBody::unit_ball(2);
        let rep = check_packing_scaled(&disk, &partition(&v(&[0.0, 1.0]), -1.0, 1.0, 3), 1, S).unwrap();
        assert_eq!(rep.rhs, 1.0);
    }

    #[test]
    fn covcylgen_examples() {
        let ball = ConvexBody::unit_ball(3);
        let e = Frame::coordinate(3, &[0, 1]).unwrap();
        let c = Cylinder::new(e, CylinderBase::disk(v(&[0.0, 0.0]), 1.0).unwrap()).unwrap();
        let rep = check_covcylgen(&ball, &[c], 1, S).unwrap();
        assert!((rep.lhs - 1.0).abs() < 1e-12 && (rep.rhs - 3.0).abs() < 1e-9 && rep.pass);
        // off-centre thin disk: the C̄ section is shorter, the ratio exceeds 1
        let e = Frame::coordinate(3, &[0, 1]).unwrap();
        let c = Cylinder::new(e, CylinderBase::disk(v(&[0.6, 0.0]), 0.2).unwrap()).unwrap();
        let rep = check_covcylgen(&ball, &[c], 1, S).unwrap();
        assert!((rep.rhs - 3.0 / (1.0 - 0.16f64).sqrt()).abs() < 1e-6, "{}", rep.rhs);
        // box partitioned by box cylinders: Σ crv = 1, ratio 1
        let cube = ConvexBody::Polytope(Polytope::axis_box(&[0.0; 3], &[1.0; 3]).unwrap());
        let e = Frame::coordinate(3, &[0, 1]).unwrap();
        let fam: Vec<_> = [(0.0, 0.5), (0.5, 1.0)]
            .iter()
            .map(|&(a, b)| {
                let base = Polytope::axis_box(&[a, 0.0], &[b, 1.0]).unwrap();
                Cylinder::new(e.clone(), CylinderBase::Polytope(base)).unwrap()
            })
            .collect();
        let rep = check_covcylgen(&cube, &fam, 1, S).unwrap();
        assert!((rep.lhs - 1.0).abs() < 1e-12 && (rep.slack - 2.0).abs() < 1e-6, "{rep:?}");
    }

    #[test]
    fn rogers_shephard_closed_forms() {
        let cube = ConvexBody::Polytope(Polytope::axis_box(&[0.0; 3], &[1.0, 2.0, 3.0]).unwrap());
        let (up, lo) = check_rogers_shephard(&cube, &Frame::coordinate(3, &[1]).unwrap()).unwrap();
        assert!(up.pass && lo.pass && lo.is_tight(), "{lo:?}");
        assert!((up.rhs - 18.0).abs() < 1e-9);
        let ball = ConvexBody::unit_ball(3);
        let (up, lo) = check_rogers_shephard(&ball, &Frame::coordinate(3, &[2]).unwrap()).unwrap();
        assert!((up.lhs - 2.0 * PI).abs() < 1e-9);
        assert!((up.rhs - 4.0 * PI).abs() < 1e-12 && (lo.rhs - 4.0 * PI / 3.0).abs() < 1e-12);
        assert!(up.pass && lo.pass);
    }

    #[test]
    fn pack1cyl_and_cauchy() {
        let disk = ConvexBody::unit_ball(2);
        let rep = check_pack1cyl(&disk, &partition(&v(&[1.0, 0.0]), -1.0, 1.0, 4), 1, S).unwrap();
        assert!((rep.lhs - 2.0).abs() < 1e-12 && (rep.rhs - PI).abs() < 1e-9 && rep.pass);
        let hexagon = ConvexBody::Polytope(
            Polytope::new((0..6).map(|i| {
                let t = PI / 3.0 * i as f64;
                v(&[t.cos(), t.sin()])
            }).collect())
            .unwrap(),
        );
        let c = check_cauchy_surface(&hexagon, 2000).unwrap();
        assert!(c.pass && (c.rhs - 6.0).abs() < 1e-12);
    }

    #[test]
    fn digests_track_instances() {
        let disk = ConvexBody::unit_ball(2);
        let a = partition(&v(&[1.0, 0.0]), -1.0, 1.0, 2);
        let b = partition(&v(&[1.0, 0.0]), -1.0, 1.0, 3);
        assert_eq!(instance_digest(&disk, &a, 1), instance_digest(&disk, &a, 1));
        assert_ne!(instance_digest(&disk, &a, 1), instance_digest(&disk, &b, 1));
        assert_eq!(instance_digest(&disk, &a, 1).len(), 64);
    }

    #[test]
    fn tolerance_widens_for_sampled_sides() {
        let r = BoundReport::new("x", Estimate { value: 1.01, std_error: 0.01 }, Estimate::exact(1.0), Direction::Le, String::new());
        assert!(r.pass && r.probabilistic);
        let r = BoundReport::new("x", Estimate::exact(1.01), Estimate::exact(1.0), Direction::Le, String::new());
        assert!(!r.pass && !r.probabilistic);
    }

    #[test]
    fn cap_chain_matches_the_example_report() {
        use crate::cap_packing::{cap_example_report, Metric};
        let ball = ConvexBody::unit_ball(4);
        let (_, fam, rep) = cap_example_report(4, 1, 0.3, Metric::Projective, 3).unwrap();
        let chain = check_cap_chain(&ball, &fam.cylinders).unwrap();
        assert!(chain.pass);
        assert!((chain.rhs - rep.chain_rhs).abs() < 1e-12);
        assert!((chain.lhs - rep.sum_crv).abs() < 1e-9 * rep.sum_crv);
        let planks = partition(&v(&[1.0, 0.0, 0.0, 0.0]), -1.0, 1.0, 3);
        assert!(check_cap_chain(&ball, &planks).is_err());
    }
}
