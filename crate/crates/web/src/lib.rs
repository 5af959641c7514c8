//! Browser bindings: a disk-family explorer, the cos-power sandwich curves and
//! separated sets on the 2-sphere. Every export returns a JSON string.

use cylpack::cap_packing::{build_separated_set, Metric};
use cylpack::falconer::{random_family, random_plank_packing, to_svg, verify_dual_falconer, DensityMode};
use cylpack::sampling::rng_for;
use cylpack::special::{cos_power_integral, cos_power_bracket, spherical_cap_fraction};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn error(e: impl std::fmt::Display) -> String {
    json!({ "error": e.to_string() }).to_string()
}

/// A random family of `n` disks (`seed`) with an `r`-fold plank packing:
/// separability, circumcircle, masses, the plank bound when non-separable, and an SVG.
#[wasm_bindgen]
pub fn disk_family(n: usize, r: usize, seed: u64) -> String {
    if !(1..=12).contains(&n) || !(1..=4).contains(&r) {
        return error("need 1 ≤ n ≤ 12 and 1 ≤ r ≤ 4");
    }
    let mut rng = rng_for(seed, 0);
    let family = random_family(n, &mut rng);
    let planks = random_plank_packing(&family, r, 2, &mut rng);
    let sep = family.is_separable();
    let cc = family.circumradius();
    let bound: Value = if sep.separable {
        Value::Null
    } else {
        match verify_dual_falconer(&family, &planks, r, 4096, seed) {
            Ok(rep) => json!({
                "widths": rep.widths.lhs,
                "r_diam_ns": rep.widths.rhs,
                "pass": rep.widths.pass && rep.circumradius.pass,
                "max_mult": rep.exact.max_mult,
            }),
            Err(e) => json!({ "error": e.to_string() }),
        }
    };
    json!({
        "separable": sep.separable,
        "ns_diameter": family.ns_diameter(),
        "circumradius": cc.radius,
        "mass_normalized": family.total_mass(DensityMode::Normalized),
        "mass_printed": family.total_mass(DensityMode::Printed),
        "planks": planks.len(),
        "bound": bound,
        "svg": to_svg(&family, &planks, sep.line.as_ref()),
    })
    .to_string()
}

/// `I_n(δ)` against its lower and upper bracket on a grid of `steps` angles in `(0, π/2)`.
#[wasm_bindgen]
pub fn sandwich_curves(n: u32, steps: usize) -> String {
    if !(1..=60).contains(&n) || !(2..=2000).contains(&steps) {
        return error("need 1 ≤ n ≤ 60 and 2 ≤ steps ≤ 2000");
    }
    let mut rows = Vec::with_capacity(steps);
    for i in 1..=steps {
        let delta = std::f64::consts::FRAC_PI_2 * i as f64 / (steps + 1) as f64;
        match (cos_power_integral(n, delta), cos_power_bracket(n, delta)) {
            (Ok(v), Ok((lo, hi))) => rows.push([delta, lo, v, hi]),
            (Err(e), _) | (_, Err(e)) => return error(e),
        }
    }
    json!({ "n": n, "rows": rows }).to_string()
}

/// A maximal `2δ`-separated set on `S²` and its counting bound.
#[wasm_bindgen]
pub fn sphere_points(two_delta: f64, projective: bool, seed: u64) -> String {
    if !(0.15..std::f64::consts::FRAC_PI_2).contains(&two_delta) {
        return error("need 0.15 ≤ 2δ < π/2");
    }
    let metric = if projective { Metric::Projective } else { Metric::Geodesic };
    let set = match build_separated_set(3, two_delta, metric, seed) {
        Ok(s) => s,
        Err(e) => return error(e),
    };
    let sigma = match spherical_cap_fraction(3, two_delta, projective) {
        Ok(s) => s,
        Err(e) => return error(e),
    };
    json!({
        "points": set.points,
        "n": set.len(),
        "maximal": set.maximal,
        "min_distance": set.min_distance(),
        "counting_bound": 1.0 / sigma,
    })
    .to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exports_return_json() {
        let v: Value = serde_json::from_str(&disk_family(4, 2, 3)).unwrap();
        assert!(v["svg"].as_str().unwrap().starts_with("<svg"));
        let v: Value = serde_json::from_str(&sandwich_curves(5, 20)).unwrap();
        for row in v["rows"].as_array().unwrap() {
            let r: Vec<f64> = row.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
            assert!(r[1] < r[2] && r[2] < r[3]);
        }
        let v: Value = serde_json::from_str(&sphere_points(0.6, true, 1)).unwrap();
        assert!(v["n"].as_f64().unwrap() >= v["counting_bound"].as_f64().unwrap());
        assert!(serde_json::from_str::<Value>(&disk_family(0, 1, 0)).unwrap()["error"].is_string());
    }
}
