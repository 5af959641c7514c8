//! Versioned instance files and the evaluation of every applicable bound on
//! one instance.

use serde::{Deserialize, Serialize};

use crate::body::ConvexBody;
use crate::bounds::{
    check_cap_chain, check_cauchy_surface, check_covcylgen, check_covering_lower, check_pack1cyl, check_packing_scaled,
    check_packing_upper_ellipsoid, check_rogers_shephard, digest, family_k, BoundReport, CoveringMode, Sampling,
};
use crate::cylinder::{Cylinder, CylinderBase};
use crate::error::{Error, Result};
use crate::falconer::{inf_estimate_check, ridge_bound_check, verify_dual_falconer, verify_plank_packing, Disk, DiskFamily, Plank2D};
use crate::multiplicity::{verify_covering, verify_packing};

pub const SCHEMA_VERSION: u32 = 1;

/// Quadrature nodes of the Cauchy surface-area check.
const CAUCHY_NODES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Packing,
    Covering,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylinderInstance {
    pub body: ConvexBody,
    pub r: usize,
    pub mode: Mode,
    pub cylinders: Vec<Cylinder>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Whatever the generator reported about the construction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub construction: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiskInstance {
    pub disks: Vec<Disk>,
    #[serde(default)]
    pub planks: Vec<Plank2D>,
    pub r: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub construction: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Instance {
    CylinderFamily(CylinderInstance),
    DiskFamily(DiskInstance),
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    schema_version: u32,
    #[serde(flatten)]
    instance: Instance,
}

#[derive(Serialize)]
struct InstanceFileRef<'a> {
    schema_version: u32,
    #[serde(flatten)]
    instance: &'a Instance,
}

impl Instance {
    pub fn from_json(text: &str) -> Result<Instance> {
        let v: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Invalid(format!("malformed JSON: {e}")))?;
        match v.get("schema_version").and_then(serde_json::Value::as_u64) {
            Some(n) if n == SCHEMA_VERSION as u64 => {}
            Some(n) => return Err(Error::Invalid(format!("unsupported schema_version {n}"))),
            None => return Err(Error::Invalid("missing schema_version".into())),
        }
        let file: InstanceFile = serde_json::from_str(text).map_err(|e| Error::Invalid(format!("bad instance: {e}")))?;
        file.instance.validate()?;
        Ok(file.instance)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&InstanceFileRef {
            schema_version: SCHEMA_VERSION,
            instance: self,
        })
        .expect("instances serialize");
        s.push('\n');
        s
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Instance::CylinderFamily(c) => {
                if c.r == 0 {
                    return Err(Error::Invalid("r must be positive".into()));
                }
                family_k(&c.body, &c.cylinders)?;
            }
            Instance::DiskFamily(f) => {
                if f.r == 0 {
                    return Err(Error::Invalid("r must be positive".into()));
                }
                if f.disks.is_empty() {
                    return Err(Error::Invalid("empty disk family".into()));
                }
                for d in &f.disks {
                    Disk::new(d.center, d.radius)?;
                }
                for p in &f.planks {
                    let n = p.u[0].hypot(p.u[1]);
                    if (n - 1.0).abs() > 1e-12 || !(p.interval[1] > p.interval[0]) {
                        return Err(Error::Invalid(format!("plank {:?} {:?} needs a unit normal and a < b", p.u, p.interval)));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn digest(&self) -> String {
        digest(self)
    }
}

/// The r-fold packing or covering condition an instance must meet before any
/// bound applies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Precondition {
    /// `packing`, `covering` or `plank_packing`.
    pub kind: String,
    pub r: usize,
    pub pass: bool,
    pub samples: usize,
    /// Sampled maximum interior multiplicity, or the exact arrangement one for planks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_mult: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_mult: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub instance_digest: String,
    pub precondition: Precondition,
    pub reports: Vec<BoundReport>,
    /// Bounds that do not apply to this instance, with the reason.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<String>,
    pub pass: bool,
}

/// Every theorem id [`evaluate`] can produce.
pub const THEOREM_IDS: &[&str] = &[
    "covering_lower",
    "covering_lower_ellipsoid",
    "packing_upper_ellipsoid",
    "packing_scaled",
    "covcylgen",
    "rsh_upper",
    "rsh_lower",
    "pack1cyl",
    "cauchy_surface",
    "cap_chain",
    "dual_falconer",
    "ns_circumradius",
    "ridge_bound",
    "inf_estimate",
];

struct Plan<'a> {
    filter: Option<&'a str>,
    reports: Vec<BoundReport>,
    skipped: Vec<String>,
}

impl Plan<'_> {
    fn wants(&self, id: &str) -> bool {
        self.filter.is_none_or(|f| f == id)
    }

    fn run(&mut self, ids: &[&str], ok: std::result::Result<(), String>, f: impl FnOnce() -> Result<Vec<BoundReport>>) -> Result<()> {
        if !ids.iter().any(|id| self.wants(id)) {
            return Ok(());
        }
        match ok {
            Ok(()) => {
                let filter = self.filter;
                self.reports.extend(f()?.into_iter().filter(|r| filter.is_none_or(|x| x == r.theorem_id)));
            }
            Err(why) => self.skipped.push(format!("{}: {why}", ids.join("/"))),
        }
        Ok(())
    }
}

fn need(cond: bool, why: &str) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(why.to_string())
    }
}

fn is_quadric(body: &ConvexBody) -> bool {
    matches!(body, ConvexBody::Ball(_) | ConvexBody::Ellipsoid(_))
}

fn is_cap_family(body: &ConvexBody, family: &[Cylinder]) -> bool {
    let unit = matches!(body, ConvexBody::Ball(b) if b.radius == 1.0 && b.center.iter().all(|&x| x == 0.0));
    let delta = match family.first().map(Cylinder::base) {
        Some(CylinderBase::Cap { delta, .. }) => *delta,
        _ => return false,
    };
    unit && body.dim() > 3
        && family
            .iter()
            .all(|c| matches!(c.base(), CylinderBase::Cap { delta: d, .. } if *d == delta))
}

/// Runs the precondition and, when it holds, every bound applicable to the
/// instance (restricted to `filter` when given). Reports come in a fixed order.
pub fn evaluate(instance: &Instance, s: Sampling, filter: Option<&str>) -> Result<Evaluation> {
    if let Some(f) = filter {
        if !THEOREM_IDS.contains(&f) {
            return Err(Error::Invalid(format!("unknown theorem id {f}")));
        }
    }
    match instance {
        Instance::CylinderFamily(c) => evaluate_cylinders(instance.digest(), c, s, filter),
        Instance::DiskFamily(f) => evaluate_disks(instance.digest(), f, s, filter),
    }
}

fn evaluate_cylinders(instance_digest: String, c: &CylinderInstance, s: Sampling, filter: Option<&str>) -> Result<Evaluation> {
    let (body, fam, r) = (&c.body, c.cylinders.as_slice(), c.r);
    let k = family_k(body, fam)?;
    let d = body.dim();
    let precondition = match c.mode {
        Mode::Packing => {
            let v = verify_packing(body, fam, r, s.samples, s.seed)?;
            Precondition {
                kind: "packing".into(),
                r,
                pass: v.pass,
                samples: v.report.samples,
                max_mult: Some(v.report.max_mult),
                min_mult: None,
                witness: v.witness,
                message: v.uncontained.map(|i| format!("base of cylinder {i} leaves the projection of K")),
            }
        }
        Mode::Covering => {
            let v = verify_covering(body, fam, r, s.samples, s.seed)?;
            Precondition {
                kind: "covering".into(),
                r,
                pass: v.pass,
                samples: v.report.samples,
                max_mult: None,
                min_mult: Some(v.report.min_mult),
                witness: v.witness,
                message: None,
            }
        }
    };
    let mut plan = Plan {
        filter,
        reports: Vec::new(),
        skipped: Vec::new(),
    };
    if precondition.pass {
        match c.mode {
            Mode::Covering => {
                plan.run(&["covering_lower"], Ok(()), || {
                    Ok(vec![check_covering_lower(body, fam, r, CoveringMode::General, s)?])
                })?;
                plan.run(
                    &["covering_lower_ellipsoid"],
                    need(k == 1 && is_quadric(body), "needs k = 1 and an ellipsoid"),
                    || Ok(vec![check_covering_lower(body, fam, r, CoveringMode::Ellipsoid, s)?]),
                )?;
            }
            Mode::Packing => {
                plan.run(
                    &["packing_upper_ellipsoid"],
                    need(is_quadric(body) && (k == 1 || k == 2), "needs an ellipsoid and k in {1, 2}"),
                    || Ok(vec![check_packing_upper_ellipsoid(body, fam, r, s)?]),
                )?;
                plan.run(&["packing_scaled"], need(k == 1 || k == 2, "needs k in {1, 2}"), || {
                    Ok(vec![check_packing_scaled(body, fam, r, s)?])
                })?;
                plan.run(&["covcylgen"], Ok(()), || Ok(vec![check_covcylgen(body, fam, r, s)?]))?;
                plan.run(&["pack1cyl"], need(k == 1 && d <= 4, "needs k = 1 and d <= 4"), || {
                    Ok(vec![check_pack1cyl(body, fam, r, s)?])
                })?;
                plan.run(&["cap_chain"], need(is_cap_family(body, fam), "needs caps of one angle in the unit ball, d > 3"), || {
                    Ok(vec![check_cap_chain(body, fam)?])
                })?;
            }
        }
        plan.run(&["rsh_upper", "rsh_lower"], Ok(()), || {
            let (u, l) = check_rogers_shephard(body, fam[0].frame())?;
            Ok(vec![u, l])
        })?;
        plan.run(
            &["cauchy_surface"],
            need(matches!(body, ConvexBody::Polytope(_)) && d <= 3, "needs a polytope with d <= 3"),
            || Ok(vec![check_cauchy_surface(body, CAUCHY_NODES)?]),
        )?;
    }
    let pass = precondition.pass && plan.reports.iter().all(|r| r.pass);
    Ok(Evaluation {
        instance_digest,
        precondition,
        reports: plan.reports,
        skipped: plan.skipped,
        pass,
    })
}

fn evaluate_disks(instance_digest: String, f: &DiskInstance, s: Sampling, filter: Option<&str>) -> Result<Evaluation> {
    let family = DiskFamily::new(f.disks.clone())?;
    let r = f.r;
    let precondition = match verify_plank_packing(&family, &f.planks, r, s.samples, s.seed) {
        Ok((exact, _)) => Precondition {
            kind: "plank_packing".into(),
            r,
            pass: true,
            samples: s.samples,
            max_mult: Some(exact.max_mult),
            min_mult: None,
            witness: None,
            message: None,
        },
        Err(Error::NotAPacking(msg)) => Precondition {
            kind: "plank_packing".into(),
            r,
            pass: false,
            samples: s.samples,
            max_mult: None,
            min_mult: None,
            witness: None,
            message: Some(msg),
        },
        Err(e) => return Err(e),
    };
    let mut plan = Plan {
        filter,
        reports: Vec::new(),
        skipped: Vec::new(),
    };
    if precondition.pass {
        let ns = need(!family.is_separable().separable, "the family is separable");
        plan.run(&["dual_falconer", "ns_circumradius"], ns.clone(), || {
            let rep = verify_dual_falconer(&family, &f.planks, r, s.samples, s.seed)?;
            Ok(vec![rep.widths, rep.circumradius])
        })?;
        plan.run(&["ridge_bound"], ns.clone(), || {
            Ok(vec![ridge_bound_check(&family, &f.planks, r, s.samples, s.seed)?])
        })?;
        plan.run(&["inf_estimate"], ns, || Ok(vec![inf_estimate_check(&family)]))?;
    }
    let pass = precondition.pass && plan.reports.iter().all(|r| r.pass);
    Ok(Evaluation {
        instance_digest,
        precondition,
        reports: plan.reports,
        skipped: plan.skipped,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::plank_partition;
    use nalgebra::DVector;

    fn partition_instance(r_copies: usize, r: usize) -> Instance {
        let disk = ConvexBody::unit_ball(2);
        let u = DVector::from_vec(vec![1.0, 0.0]);
        let strips = plank_partition(&disk, &u, 5).unwrap();
        let cylinders = (0..r_copies).flat_map(|_| strips.iter().cloned()).collect();
        Instance::CylinderFamily(CylinderInstance {
            body: disk,
            r,
            mode: Mode::Packing,
            cylinders,
            seed: None,
            construction: None,
        })
    }

    const S: Sampling = Sampling { samples: 20_000, seed: 5 };

    #[test]
    fn round_trip_and_schema_version() {
        let inst = partition_instance(1, 1);
        let text = inst.to_json();
        assert_eq!(Instance::from_json(&text).unwrap(), inst);
        assert_eq!(Instance::from_json(&text).unwrap().to_json(), text);
        let bumped = text.replace("\"schema_version\": 1", "\"schema_version\": 2");
        assert!(Instance::from_json(&bumped).is_err());
        assert!(Instance::from_json("{\"schema_version\": 1, \"kind\": \"cylinder_family\"").is_err());
    }

    #[test]
    fn partition_passes_every_applicable_bound() {
        let ev = evaluate(&partition_instance(1, 1), S, None).unwrap();
        assert!(ev.pass && ev.precondition.pass);
        let ids: Vec<_> = ev.reports.iter().map(|r| r.theorem_id.as_str()).collect();
        for id in ["packing_upper_ellipsoid", "packing_scaled", "covcylgen", "pack1cyl", "rsh_upper", "rsh_lower"] {
            assert!(ids.contains(&id), "{id} missing from {ids:?}");
        }
        let one = evaluate(&partition_instance(1, 1), S, Some("pack1cyl")).unwrap();
        assert_eq!(one.reports.len(), 1);
        assert!(evaluate(&partition_instance(1, 1), S, Some("nope")).is_err());
    }

    #[test]
    fn over_packing_fails_with_witness() {
        let ev = evaluate(&partition_instance(2, 1), S, None).unwrap();
        assert!(!ev.pass && ev.reports.is_empty());
        assert!(ev.precondition.witness.is_some());
        assert_eq!(ev.precondition.max_mult, Some(2));
    }
}
