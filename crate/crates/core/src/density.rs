//! Two measures whose fibres over cylinder bases have constant mass:
//! `p(x) = (1 - |x|²)^{-1/2}` on the unit ball (mass π on every chord) and
//! surface measure on the unit sphere (mass 2π on every plane section).

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::body::ConvexBody;
use crate::cylinder::Cylinder;
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::quad::integrate;
use crate::sampling::{mean_and_se, rng_for, uniform_sphere, Estimate};
use crate::special::omega;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityKind {
    /// Density `(1 - |x|²)^{-1/2}` on the open unit ball (codimension 1).
    BangCodim1,
    /// Surface measure of the unit sphere (codimension 2).
    SphereCodim2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DensityMeasure {
    pub kind: DensityKind,
    pub ambient_dim: usize,
}

impl DensityMeasure {
    pub fn new(kind: DensityKind, ambient_dim: usize) -> Result<DensityMeasure> {
        let min = match kind {
            DensityKind::BangCodim1 => 2,
            DensityKind::SphereCodim2 => 3,
        };
        if ambient_dim < min {
            return Err(Error::UnsupportedDimension(ambient_dim));
        }
        Ok(DensityMeasure { kind, ambient_dim })
    }

    /// Codimension of the cylinders this measure is built for.
    pub fn codim(&self) -> usize {
        match self.kind {
            DensityKind::BangCodim1 => 1,
            DensityKind::SphereCodim2 => 2,
        }
    }

    /// Mass of every fibre: π for chords, 2π for plane sections.
    pub fn fibre_mass(&self) -> f64 {
        self.codim() as f64 * PI
    }

    /// `μ(B_2^d)`: `π ω_{d-1}` for the chord density, `2π ω_{d-2} = d ω_d` for the sphere.
    pub fn total_mass(&self) -> f64 {
        self.fibre_mass() * omega(self.ambient_dim - self.codim())
    }

    /// Pointwise value of the chord density. The sphere measure has no
    /// Lebesgue density, so this is a domain error for it.
    pub fn density_at(&self, x: &DVector<f64>) -> Result<f64> {
        if self.kind != DensityKind::BangCodim1 {
            return Err(Error::Domain("the sphere measure is singular; integrate it instead".into()));
        }
        let r2 = x.norm_squared();
        if r2 == 1.0 {
            return Err(Error::OnUnitSphere);
        }
        Ok(if r2 < 1.0 { 1.0 / (1.0 - r2).sqrt() } else { 0.0 })
    }

    /// `∫_{ℓ + z} p` for the line through `z` with unit direction `dir ⊥ z`,
    /// integrated after the substitution `t = a sin θ` (`a` the half chord).
    pub fn line_integral(&self, z: &DVector<f64>, dir: &DVector<f64>) -> Result<f64> {
        if self.kind != DensityKind::BangCodim1 {
            return Err(Error::Domain("line integrals belong to the chord density".into()));
        }
        self.check_point(z)?;
        let zn = z.norm();
        if zn >= 1.0 {
            return Err(Error::ChordMissesBall(zn));
        }
        let a = (1.0 - zn * zn).sqrt();
        let f = |theta: f64| {
            let x = z + dir * (a * theta.sin());
            self.density_at(&x).unwrap_or(0.0) * a * theta.cos()
        };
        Ok(integrate(f, -FRAC_PI_2, FRAC_PI_2, 1e-12, 1e-12).value)
    }

    /// Sphere-measure mass of `S^{d-1} ∩ (H + z)`: the circle of radius
    /// `ρ = √(1 - |z|²)` weighted by `1/cos α = 1/|P_H y|` (the inverse normal
    /// Jacobian of `P_{H⊥}` on the sphere), integrated over its angle.
    pub fn plane_section_integral(&self, h: &Frame, z: &DVector<f64>) -> Result<f64> {
        if self.kind != DensityKind::SphereCodim2 {
            return Err(Error::Domain("plane sections belong to the sphere measure".into()));
        }
        self.check_point(z)?;
        if h.rank() != 2 || h.ambient_dim() != self.ambient_dim {
            return Err(Error::Invalid("plane section needs a 2-frame in the ambient space".into()));
        }
        if h.coords(z).amax() > 1e-9 {
            return Err(Error::Invalid("offset must be orthogonal to the plane".into()));
        }
        let zn = z.norm();
        if zn >= 1.0 {
            return Err(Error::PlaneMissesSphere(zn));
        }
        let rho = (1.0 - zn * zn).sqrt();
        let (h1, h2) = (h.column(0), h.column(1));
        let f = |phi: f64| {
            let y = z + (&h1 * phi.cos() + &h2 * phi.sin()) * rho;
            let along = h.coords(&y).norm();
            // arc length element ρ dφ over cos α
            rho / along
        };
        Ok(integrate(f, 0.0, 2.0 * PI, 1e-12, 1e-12).value)
    }

    fn check_point(&self, z: &DVector<f64>) -> Result<()> {
        if z.len() != self.ambient_dim {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim,
                got: z.len(),
            });
        }
        Ok(())
    }

    /// Monte Carlo estimate of `μ(A ∩ B_2^d)` for a membership predicate `A`.
    ///
    /// Chord density: `x = r ω` with `r = 1 - u²` turns the radial integrand
    /// `r^{d-1}/√(1-r²)` into the bounded `2 r^{d-1}/√(1+r)` in `u`.
    /// Sphere measure: uniform points on the sphere times its area.
    pub fn mass_mc<F: FnMut(&DVector<f64>) -> bool>(&self, mut inside: F, samples: usize, seed: u64) -> Estimate {
        let d = self.ambient_dim;
        let area = d as f64 * omega(d);
        let mut rng = rng_for(seed, 0);
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..samples {
            let w = uniform_sphere(&mut rng, d);
            let val = match self.kind {
                DensityKind::BangCodim1 => {
                    let u: f64 = rng.random();
                    let r = 1.0 - u * u;
                    let x = &w * r;
                    if inside(&x) {
                        area * 2.0 * r.powi(d as i32 - 1) / (1.0 + r).sqrt()
                    } else {
                        0.0
                    }
                }
                DensityKind::SphereCodim2 => {
                    if inside(&w) {
                        area
                    } else {
                        0.0
                    }
                }
            };
            s += val;
            s2 += val * val;
        }
        let (value, std_error) = mean_and_se(s, s2, samples);
        Estimate { value, std_error }
    }

    /// `μ(C)` for a cylinder of the matching codimension inside the unit ball:
    /// the fibre identity gives `fibre_mass · vol(B)`; an independent Monte
    /// Carlo estimate is returned alongside.
    pub fn mu_of_cylinder(&self, c: &Cylinder, samples: usize, seed: u64) -> Result<MuOfCylinder> {
        if c.ambient_dim() != self.ambient_dim {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim,
                got: c.ambient_dim(),
            });
        }
        if c.k() != self.codim() {
            return Err(Error::Invalid(format!(
                "this measure needs codimension {}, got {}",
                self.codim(),
                c.k()
            )));
        }
        let ball = ConvexBody::unit_ball(self.ambient_dim);
        if !c.base_contained(&ball, 1e-12)? {
            return Err(Error::NotAPacking("base leaves the projection of the unit ball".into()));
        }
        let exact = self.fibre_mass() * c.base().volume()?.value;
        let mut buf = vec![0.0; self.ambient_dim - c.k()];
        let mc = self.mass_mc(|x| c.contains_with(x.as_slice(), &mut buf, 0.0), samples, seed);
        Ok(MuOfCylinder { exact, mc })
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MuOfCylinder {
    pub exact: f64,
    pub mc: Estimate,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cylinder::CylinderBase;
    use crate::frame::orthonormalize;
    use crate::sampling::gaussian_vector;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    fn bang(d: usize) -> DensityMeasure {
        DensityMeasure::new(DensityKind::BangCodim1, d).unwrap()
    }

    #[test]
    fn pointwise() {
        let m = bang(2);
        assert_eq!(m.density_at(&v(&[0.0, 0.0])).unwrap(), 1.0);
        assert!((m.density_at(&v(&[0.8, 0.0])).unwrap() - 1.0 / 0.6).abs() < 1e-14);
        assert_eq!(m.density_at(&v(&[1.2, 0.0])).unwrap(), 0.0);
        assert_eq!(m.density_at(&v(&[0.6, 0.8])), Err(Error::OnUnitSphere));
    }

    #[test]
    fn chord_integrals_are_pi() {
        let m = bang(2);
        let dir = v(&[0.0, 1.0]);
        for z in [0.0, 0.5, 0.999] {
            let got = m.line_integral(&v(&[z, 0.0]), &dir).unwrap();
            assert!((got - PI).abs() < 1e-9, "z={z}: {got}");
        }
        assert_eq!(m.line_integral(&v(&[1.0, 0.0]), &dir), Err(Error::ChordMissesBall(1.0)));
    }

    #[test]
    fn plane_sections_are_two_pi() {
        let m = DensityMeasure::new(DensityKind::SphereCodim2, 3).unwrap();
        let h = Frame::coordinate(3, &[0, 1]).unwrap();
        for z in [0.0, 0.6] {
            let got = m.plane_section_integral(&h, &v(&[0.0, 0.0, z])).unwrap();
            assert!((got - 2.0 * PI).abs() < 1e-10);
        }
        let m4 = DensityMeasure::new(DensityKind::SphereCodim2, 4).unwrap();
        let mut rng = rng_for(4, 0);
        let h = orthonormalize(&[gaussian_vector(&mut rng, 4), gaussian_vector(&mut rng, 4)]).unwrap();
        let e = h.complement().unwrap();
        let z = e.embed(&uniform_sphere(&mut rng, 2)) * 0.3;
        let got = m4.plane_section_integral(&h, &z).unwrap();
        assert!((got - 2.0 * PI).abs() < 1e-6);
        assert!(matches!(
            m.plane_section_integral(&Frame::coordinate(3, &[0, 1]).unwrap(), &v(&[0.0, 0.0, 1.5])),
            Err(Error::PlaneMissesSphere(_))
        ));
    }

    #[test]
    fn mu_of_cylinders() {
        let m = bang(2);
        let strip = Cylinder::plank(&v(&[1.0, 0.0]), -0.5, 0.5).unwrap();
        let r = m.mu_of_cylinder(&strip, 200_000, 1).unwrap();
        assert!((r.exact - PI).abs() < 1e-14);
        assert!((r.mc.value - r.exact).abs() < 3.0 * r.mc.std_error);

        let m3 = bang(3);
        let disk = Cylinder::new(Frame::coordinate(3, &[0, 1]).unwrap(), CylinderBase::disk(v(&[0.0, 0.0]), 0.5).unwrap())
            .unwrap();
        let r = m3.mu_of_cylinder(&disk, 400_000, 2).unwrap();
        assert!((r.exact - PI * PI / 4.0).abs() < 1e-14);
        assert!((r.mc.value - r.exact).abs() < 3.0 * r.mc.std_error, "{r:?}");

        let full = Cylinder::new(Frame::coordinate(3, &[0, 1]).unwrap(), CylinderBase::disk(v(&[0.0, 0.0]), 1.0).unwrap())
            .unwrap();
        assert!((m3.mu_of_cylinder(&full, 1000, 3).unwrap().exact - m3.total_mass()).abs() < 1e-14);

        let s4 = DensityMeasure::new(DensityKind::SphereCodim2, 4).unwrap();
        let c = Cylinder::new(Frame::coordinate(4, &[0, 1]).unwrap(), CylinderBase::disk(v(&[0.2, 0.1]), 0.4).unwrap())
            .unwrap();
        let r = s4.mu_of_cylinder(&c, 400_000, 4).unwrap();
        assert!((r.exact - 2.0 * PI * PI * 0.16).abs() < 1e-13);
        assert!((r.mc.value - r.exact).abs() < 3.0 * r.mc.std_error, "{r:?}");
    }

    #[test]
    fn total_masses() {
        for d in 2..=5 {
            let m = bang(d);
            let est = m.mass_mc(|_| true, 200_000, d as u64);
            assert!((est.value - PI * omega(d - 1)).abs() < 3.0 * est.std_error, "d={d}");
        }
        let s = DensityMeasure::new(DensityKind::SphereCodim2, 5).unwrap();
        assert!((s.total_mass() - 5.0 * omega(5)).abs() < 1e-12);
    }

    #[test]
    fn disjoint_cylinders_share_the_mass() {
        let m = bang(3);
        let e = Frame::coordinate(3, &[0, 1]).unwrap();
        let cyls: Vec<Cylinder> = [(-0.55, 0.0), (0.55, 0.0), (0.0, 0.6)]
            .iter()
            .map(|&(a, b)| Cylinder::new(e.clone(), CylinderBase::disk(v(&[a, b]), 0.35).unwrap()).unwrap())
            .collect();
        let total: f64 = cyls.iter().map(|c| m.mu_of_cylinder(c, 1000, 0).unwrap().exact).sum();
        assert!(total <= m.total_mass());
    }
}
