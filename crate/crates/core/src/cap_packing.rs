//! Maximal separated point sets on the sphere and the packings of the unit
//! ball by cap cylinders `C(x) = S(x, δ, E_x) + E_x⊥` built from them.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::cylinder::{Cylinder, CylinderBase};
use crate::error::{Error, Result};
use crate::frame::{orthonormalize, Frame};
use crate::par::map_indexed;
use crate::sampling::{gaussian_vector, rng_for, uniform_sphere};
use crate::special::{cap_volume, cos_power_integral, cos_power_bracket, omega, spherical_cap_fraction};

/// Consecutive rejected proposals that end greedy insertion.
pub const REJECTION_BUDGET: usize = 10_000;
/// Uniform test points per maximality pass.
pub const MAXIMALITY_TRIALS: usize = 100_000;
/// Saturation passes before the set is reported as not (yet) maximal.
pub const MAX_SATURATION_PASSES: usize = 60;
const SEPARATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// `arccos ⟨x, y⟩`.
    Geodesic,
    /// `arccos |⟨x, y⟩|`: antipodal points coincide.
    Projective,
}

impl Metric {
    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        let t: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
        let t = match self {
            Metric::Geodesic => t,
            Metric::Projective => t.abs(),
        };
        t.clamp(-1.0, 1.0).acos()
    }

    /// Whether `t = ⟨x, y⟩` puts the points farther apart than the separation with cosine `c`.
    fn separated(&self, t: f64, c: f64) -> bool {
        let t = match self {
            Metric::Geodesic => t,
            Metric::Projective => t.abs(),
        };
        t < c
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparatedSet {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
    /// Required pairwise distance `2δ`.
    pub separation: f64,
    pub metric: Metric,
    /// No uniform test point of the last saturation pass was addable.
    pub maximal: bool,
    pub proposals: usize,
    pub saturation_passes: usize,
    pub seed: u64,
}

impl SeparatedSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Smallest pairwise distance in the set's metric (`π` for a single point).
    pub fn min_distance(&self) -> f64 {
        let mut best = std::f64::consts::PI;
        for i in 0..self.points.len() {
            for j in 0..i {
                best = best.min(self.metric.distance(&self.points[i], &self.points[j]));
            }
        }
        best
    }
}

struct Packer {
    d: usize,
    cos_sep: f64,
    metric: Metric,
    flat: Vec<f64>,
}

impl Packer {
    fn addable(&self, x: &[f64]) -> bool {
        self.flat
            .chunks_exact(self.d)
            .all(|p| self.metric.separated(p.iter().zip(x).map(|(a, b)| a * b).sum(), self.cos_sep))
    }

    fn push(&mut self, x: &[f64]) {
        self.flat.extend_from_slice(x);
    }
}

/// Greedy `2δ`-separated set on `S^{d-1}`: uniform proposals are inserted
/// whenever they keep the separation, until [`REJECTION_BUDGET`] consecutive
/// rejections. Saturation passes then test [`MAXIMALITY_TRIALS`] fresh uniform
/// points, insert any that are still addable, and repeat until a pass adds
/// nothing, which sets `maximal`.
pub fn build_separated_set(d: usize, two_delta: f64, metric: Metric, seed: u64) -> Result<SeparatedSet> {
    if d < 2 {
        return Err(Error::UnsupportedDimension(d));
    }
    if !(two_delta > 0.0 && two_delta < FRAC_PI_2) {
        return Err(Error::Domain(format!("separation {two_delta} outside (0, π/2)")));
    }
    // distance > 2δ - tol  ⇔  cosine < cos(2δ - tol)
    let mut packer = Packer {
        d,
        cos_sep: (two_delta - SEPARATION_TOL).cos(),
        metric,
        flat: Vec::new(),
    };
    let mut rng = rng_for(seed, 0);
    let mut misses = 0;
    let mut proposals = 0;
    while misses < REJECTION_BUDGET {
        let x = uniform_sphere(&mut rng, d);
        proposals += 1;
        if packer.addable(x.as_slice()) {
            packer.push(x.as_slice());
            misses = 0;
        } else {
            misses += 1;
        }
    }
    let mut maximal = false;
    let mut passes = 0;
    while passes < MAX_SATURATION_PASSES {
        passes += 1;
        let trials: Vec<DVector<f64>> = {
            let mut r = rng_for(seed, passes as u64);
            (0..MAXIMALITY_TRIALS).map(|_| uniform_sphere(&mut r, d)).collect()
        };
        let open = map_indexed(trials.len(), |i| packer.addable(trials[i].as_slice()));
        let mut added = 0;
        for (x, free) in trials.iter().zip(open) {
            if free && packer.addable(x.as_slice()) {
                packer.push(x.as_slice());
                added += 1;
            }
        }
        if added == 0 {
            maximal = true;
            break;
        }
    }
    Ok(SeparatedSet {
        dim: d,
        points: packer.flat.chunks_exact(d).map(|c| c.to_vec()).collect(),
        separation: two_delta,
        metric,
        maximal,
        proposals,
        saturation_passes: passes,
        seed,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CapCylinderFamily {
    pub delta: f64,
    pub k: usize,
    pub two_sided: bool,
    /// `C(x_i) = S(x_i, δ, E_i) + E_i⊥`; the first column of each frame is `x_i`,
    /// so each pole is `e_1` in frame coordinates.
    pub cylinders: Vec<Cylinder>,
    /// Set for `k = d - 1`, where every base is a segment.
    pub degenerate: bool,
}

impl CapCylinderFamily {
    pub fn frames(&self) -> Vec<&Frame> {
        self.cylinders.iter().map(|c| c.frame()).collect()
    }
}

/// `E_x`: `x` completed to an orthonormal `(d-k)`-frame by seeded Gaussian vectors.
pub fn cap_frame(x: &DVector<f64>, m: usize, seed: u64, index: u64) -> Result<Frame> {
    let mut rng = rng_for(seed, index);
    loop {
        let mut vecs = vec![x.clone()];
        vecs.extend((1..m).map(|_| gaussian_vector(&mut rng, x.len())));
        match orthonormalize(&vecs) {
            Ok(f) => return Ok(f),
            Err(Error::RankDeficient { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
}

/// One cap cylinder per point of the set, with caps of angular radius `δ`.
pub fn build_cap_family(set: &SeparatedSet, delta: f64, k: usize, two_sided: bool, seed: u64) -> Result<CapCylinderFamily> {
    let d = set.dim;
    if !(delta > 0.0 && delta < FRAC_PI_2) {
        return Err(Error::Domain(format!("cap angle {delta} outside (0, π/2)")));
    }
    if (2.0 * delta - set.separation).abs() > 1e-12 {
        return Err(Error::Domain("cap angle must be half the separation".into()));
    }
    if k < 1 || k >= d {
        return Err(Error::Domain(format!("codimension {k} outside [1, {}]", d - 1)));
    }
    let m = d - k;
    let mut pole = DVector::zeros(m);
    pole[0] = 1.0;
    let cylinders = set
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let x = DVector::from_column_slice(p);
            let frame = cap_frame(&x, m, seed, i as u64)?;
            Cylinder::new(frame, CylinderBase::cap(pole.clone(), delta, two_sided)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CapCylinderFamily {
        delta,
        k,
        two_sided,
        cylinders,
        degenerate: k == d - 1,
    })
}

/// Every quantity of the cap construction's lower-bound chain, named.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CapExampleReport {
    pub d: usize,
    pub k: usize,
    pub delta: f64,
    pub seed: u64,
    pub metric: Metric,
    pub maximal: bool,
    pub n: usize,
    /// One-sided normalized measure of a cap of radius `2δ`.
    pub sigma_one_2delta: f64,
    /// The same for the antipodal pair of caps.
    pub sigma_two_2delta: f64,
    pub counting_bound_one_sided: f64,
    pub counting_bound_two_sided: f64,
    pub n_ge_counting_one_sided: bool,
    pub n_ge_counting_two_sided: bool,
    /// `vol_{d-k}(S(x, δ, E))` (one-sided cap).
    pub cap_volume: f64,
    /// `Σ crv = N · cap_volume / ω_{d-k}`.
    pub sum_crv: f64,
    /// `(ω_{d-k-1}/ω_{d-k})(ω_{d-2}/ω_{d-3}) I_{d-k}(δ) / I_{d-2}(2δ)`.
    pub chain_rhs: f64,
    pub chain_holds: bool,
    /// `chain_rhs` with `I_{d-k}(δ)` replaced by its lower and `I_{d-2}(2δ)` by its upper sandwich value.
    pub chain_rhs_sandwiched: f64,
    pub sandwich_preserves_direction: bool,
    /// `√d (sin δ)^{d-k} / ((d-k)^{3/2} (sin 2δ)^{d-2})`, the estimate before the last step.
    pub intermediate: f64,
    /// `√d (sin δ)^{2-k} / (2^{d-2} (d-k)^{3/2})`, without the absolute constant.
    pub threshold: f64,
    /// `sum_crv / intermediate`: an empirical lower bound for the constant.
    pub ratio_intermediate: f64,
    /// `sum_crv / threshold`.
    pub empirical_constant: f64,
    /// `(sin δ)^k ω_k`: the largest `E_x⊥`-section of one `C̄(x)`.
    pub max_section: f64,
    /// `C(d, k) (sin δ)^{-k}`: the general-cylinder upper bound specialised to caps.
    pub upper_bound: f64,
    pub degenerate: bool,
}

/// Builds the separated set and the cap family, and evaluates the chain.
pub fn cap_example_report(
    d: usize,
    k: usize,
    delta: f64,
    metric: Metric,
    seed: u64,
) -> Result<(SeparatedSet, CapCylinderFamily, CapExampleReport)> {
    if d < 4 {
        return Err(Error::Domain(format!("the cap construction needs d > 3, got {d}")));
    }
    if k < 1 || k >= d {
        return Err(Error::Domain(format!("codimension {k} outside [1, {}]", d - 1)));
    }
    if !(delta > 0.0 && delta < FRAC_PI_4) {
        return Err(Error::Domain(format!("δ = {delta} outside (0, π/4)")));
    }
    let set = build_separated_set(d, 2.0 * delta, metric, seed)?;
    let family = build_cap_family(&set, delta, k, false, seed)?;
    let report = chain_report(&set, d, k, delta, seed)?;
    Ok((set, family, report))
}

/// `(ω_{d-k-1}/ω_{d-k})(ω_{d-2}/ω_{d-3}) I_{d-k}(δ) / I_{d-2}(2δ)`, for `d > 3`.
pub fn chain_rhs(d: usize, k: usize, delta: f64) -> Result<f64> {
    if d < 4 || k < 1 || k >= d {
        return Err(Error::Domain(format!("chain needs d > 3 and 1 ≤ k < d, got d = {d}, k = {k}")));
    }
    let m = d - k;
    let omegas = omega(m - 1) / omega(m) * omega(d - 2) / omega(d - 3);
    Ok(omegas * cos_power_integral(m as u32, delta)? / cos_power_integral((d - 2) as u32, 2.0 * delta)?)
}

fn chain_report(set: &SeparatedSet, d: usize, k: usize, delta: f64, seed: u64) -> Result<CapExampleReport> {
    let n = set.len();
    let m = d - k;
    let sigma_one = spherical_cap_fraction(d, 2.0 * delta, false)?;
    let sigma_two = spherical_cap_fraction(d, 2.0 * delta, true)?;
    let cap = cap_volume(m, delta)?;
    let sum_crv = n as f64 * cap / omega(m);
    let omegas = omega(m - 1) / omega(m) * omega(d - 2) / omega(d - 3);
    let chain_rhs = chain_rhs(d, k, delta)?;
    let (top_lo, _) = cos_power_bracket(m as u32, delta)?;
    let (_, bottom_hi) = cos_power_bracket((d - 2) as u32, 2.0 * delta)?;
    let chain_rhs_sandwiched = omegas * top_lo / bottom_hi;
    let (s1, s2) = (delta.sin(), (2.0 * delta).sin());
    let df = d as f64;
    let mf = m as f64;
    let intermediate = df.sqrt() * s1.powi(m as i32) / (mf.powf(1.5) * s2.powi(d as i32 - 2));
    let threshold = df.sqrt() * s1.powi(2 - k as i32) / (2f64.powi(d as i32 - 2) * mf.powf(1.5));
    Ok(CapExampleReport {
        d,
        k,
        delta,
        seed,
        metric: set.metric,
        maximal: set.maximal,
        n,
        sigma_one_2delta: sigma_one,
        sigma_two_2delta: sigma_two,
        counting_bound_one_sided: 1.0 / sigma_one,
        counting_bound_two_sided: 1.0 / sigma_two,
        n_ge_counting_one_sided: n as f64 >= 1.0 / sigma_one,
        n_ge_counting_two_sided: n as f64 >= 1.0 / sigma_two,
        cap_volume: cap,
        sum_crv,
        chain_rhs,
        chain_holds: sum_crv >= chain_rhs,
        chain_rhs_sandwiched,
        sandwich_preserves_direction: chain_rhs_sandwiched <= chain_rhs,
        intermediate,
        threshold,
        ratio_intermediate: sum_crv / intermediate,
        empirical_constant: sum_crv / threshold,
        max_section: s1.powi(k as i32) * omega(k),
        upper_bound: crate::special::binomial(d, k) / s1.powi(k as i32),
        degenerate: k == d - 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::ConvexBody;
    use crate::multiplicity::verify_packing;
    use std::f64::consts::PI;

    #[test]
    fn circle_near_quarter_separation() {
        // gaps just under π/2 allow four points only with near-even spacing
        let s = build_separated_set(2, PI / 2.0 - 1e-3, Metric::Geodesic, 1).unwrap();
        assert!(s.min_distance() > PI / 2.0 - 1e-3);
        assert!((3..=4).contains(&s.len()), "{}", s.len());
        assert!(s.maximal);
    }

    #[test]
    fn sphere_counting_bound() {
        let s = build_separated_set(3, PI / 3.0, Metric::Geodesic, 2).unwrap();
        assert!(s.maximal);
        let sigma = spherical_cap_fraction(3, PI / 3.0, false).unwrap();
        assert!(s.len() as f64 >= 1.0 / sigma);
        assert!(s.min_distance() > PI / 3.0 - 1e-12);
    }

    #[test]
    fn projective_sets_have_no_antipodes() {
        let s = build_separated_set(3, 1.4, Metric::Projective, 3).unwrap();
        for i in 0..s.len() {
            for j in 0..i {
                let t: f64 = s.points[i].iter().zip(&s.points[j]).map(|(a, b)| a * b).sum();
                assert!(t.abs() < 1.4f64.cos());
            }
        }
    }

    #[test]
    fn single_cap_max_section() {
        let set = SeparatedSet {
            dim: 4,
            points: vec![vec![1.0, 0.0, 0.0, 0.0]],
            separation: 0.6,
            metric: Metric::Projective,
            maximal: false,
            proposals: 0,
            saturation_passes: 0,
            seed: 0,
        };
        let fam = build_cap_family(&set, 0.3, 1, false, 0).unwrap();
        let c = &fam.cylinders[0];
        assert_eq!(c.frame().column(0), DVector::from_column_slice(&[1.0, 0.0, 0.0, 0.0]));
        // section of C̄ by y + E⊥ at y = cos δ · x: a segment of half-length sin δ
        let ball = ConvexBody::unit_ball(4);
        let y = c.frame().column(0) * 0.3f64.cos();
        let h = c.frame().complement().unwrap();
        let sec = crate::slice::slice_volume(&ball, &y, &h).unwrap();
        assert!((sec - 0.3f64.sin() * omega(1)).abs() < 1e-12);
    }

    #[test]
    fn small_pipeline() {
        let (set, fam, rep) = cap_example_report(4, 1, 0.3, Metric::Projective, 7).unwrap();
        assert!(set.maximal);
        assert!(rep.chain_holds && rep.sandwich_preserves_direction);
        assert!(rep.n_ge_counting_two_sided);
        assert!((rep.sum_crv - fam.cylinders.len() as f64 * cap_volume(3, 0.3).unwrap() / omega(3)).abs() < 1e-12);
        let ball = ConvexBody::unit_ball(4);
        let ver = verify_packing(&ball, &fam.cylinders, 1, 20_000, 7).unwrap();
        assert!(ver.pass, "{:?}", ver.report);
        // the family also respects the ellipsoid packing bound
        assert!(rep.sum_crv <= 1.0);
    }

    #[test]
    fn domain_errors() {
        assert!(cap_example_report(3, 1, 0.3, Metric::Projective, 0).is_err());
        assert!(cap_example_report(4, 1, 0.9, Metric::Projective, 0).is_err());
        assert!(cap_example_report(4, 4, 0.3, Metric::Projective, 0).is_err());
        assert!(build_separated_set(3, 2.0, Metric::Geodesic, 0).is_err());
    }
}
