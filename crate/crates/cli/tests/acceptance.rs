//! Acceptance run: one line per criterion, exit status 1 if any fails.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use cylpack::bounds::{
    check_cap_chain, check_covering_lower, check_pack1cyl, check_packing_upper_ellipsoid, check_rogers_shephard,
    check_cauchy_surface, CoveringMode, Sampling,
};
use cylpack::cap_packing::{cap_example_report, Metric};
use cylpack::density::{DensityKind, DensityMeasure};
use cylpack::falconer::{
    random_family, random_line_through, random_ns_family, variational_inf, verify_dual_falconer, DensityMode, Line,
};
use cylpack::generate::{
    plank_partition, random_covering, random_ellipsoid, random_frame, random_packing, random_polygon, random_polytope,
    repeat,
};
use cylpack::multiplicity::verify_packing;
use cylpack::projection::{cauchy_surface_area, plank_constant};
use cylpack::sampling::{rng_for, uniform_ball, uniform_sphere};
use cylpack::special::{cos_power_integral, cos_power_integral_recurrence, cos_power_bracket, omega};
use cylpack::{ConvexBody, Frame, Polytope};
use nalgebra::DVector;
use rand::Rng;

type Criterion = (&'static str, u64, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn unit(rng: &mut impl Rng, d: usize) -> DVector<f64> {
    uniform_sphere(rng, d)
}

/// Unit vector orthogonal to `z`.
fn orthogonal_unit(rng: &mut impl Rng, z: &DVector<f64>) -> DVector<f64> {
    loop {
        let v = unit(rng, z.len());
        let n2 = z.norm_squared();
        let w = if n2 > 0.0 { &v - z * (z.dot(&v) / n2) } else { v };
        if w.norm() > 1e-3 {
            return w.normalize();
        }
    }
}

fn density_identities() -> Outcome {
    let mut rng = rng_for(101, 0);
    let mut worst_line = 0f64;
    for i in 0..100 {
        let d = 2 + i % 5;
        let m = DensityMeasure::new(DensityKind::BangCodim1, d).unwrap();
        let z = uniform_ball(&mut rng, d) * 0.999;
        let dir = orthogonal_unit(&mut rng, &z);
        worst_line = worst_line.max((m.line_integral(&z, &dir).unwrap() - PI).abs());
    }
    let mut worst_plane = 0f64;
    for i in 0..100 {
        let d = 3 + i % 4;
        let m = DensityMeasure::new(DensityKind::SphereCodim2, d).unwrap();
        let h = random_frame(&mut rng, d, 2);
        let z = h.complement().unwrap().embed(&(uniform_ball(&mut rng, d - 2) * 0.999));
        worst_plane = worst_plane.max((m.plane_section_integral(&h, &z).unwrap() - 2.0 * PI).abs());
    }
    let mut worst_sigma = 0f64;
    for d in 2..=5 {
        let m = DensityMeasure::new(DensityKind::BangCodim1, d).unwrap();
        let est = m.mass_mc(|_| true, 200_000, d as u64);
        let expected = PI * omega(d - 1);
        assert_eq!(m.total_mass(), expected);
        worst_sigma = worst_sigma.max((est.value - expected).abs() / est.std_error);
    }
    outcome(
        worst_line <= 1e-6 && worst_plane <= 1e-6 && worst_sigma <= 3.0,
        format!("line err {worst_line:.1e}, plane err {worst_plane:.1e}, mass {worst_sigma:.2}σ"),
    )
}

fn sandwich() -> Outcome {
    let mut violations = 0;
    let mut worst = 0f64;
    for n in 1..=30u32 {
        for j in 1..=150 {
            let delta = j as f64 * 0.01;
            let q = cos_power_integral(n, delta).unwrap();
            let rec = cos_power_integral_recurrence(n, delta).unwrap();
            let (lo, hi) = cos_power_bracket(n, delta).unwrap();
            if !(lo < q && q < hi) {
                violations += 1;
            }
            worst = worst.max((q - rec).abs());
        }
    }
    outcome(
        violations == 0 && worst <= 1e-10,
        format!("4500 pairs, {violations} violations, quadrature vs recurrence {worst:.1e}"),
    )
}

fn quadric(rng: &mut impl Rng, d: usize, i: usize) -> ConvexBody {
    if i.is_multiple_of(2) {
        ConvexBody::unit_ball(d)
    } else {
        ConvexBody::Ellipsoid(random_ellipsoid(d, rng).unwrap())
    }
}

const S: Sampling = Sampling { samples: 20_000, seed: 3 };

fn packing_bounds() -> Outcome {
    let mut rng = rng_for(303, 0);
    let (mut fails, mut max_ratio) = (0, 0f64);
    for i in 0..200 {
        let k = 1 + i % 2;
        let d = rng.random_range(k + 1..=5);
        let r = 1 + (i / 2) % 3;
        let body = quadric(&mut rng, d, i / 6);
        let fam = random_packing(&body, k, r, 3, &mut rng).unwrap();
        match check_packing_upper_ellipsoid(&body, &fam, r, Sampling { samples: 20_000, seed: i as u64 }) {
            Ok(rep) if rep.pass => max_ratio = max_ratio.max(rep.lhs / rep.rhs),
            _ => fails += 1,
        }
    }
    let mut not_tight = 0;
    for (i, d) in [2usize, 3].iter().cycle().take(12).enumerate() {
        let r = 1 + i % 3;
        let body = quadric(&mut rng, *d, i / 2);
        let u = unit(&mut rng, *d);
        let fam = repeat(&plank_partition(&body, &u, 4 + i % 3).unwrap(), r);
        match check_packing_upper_ellipsoid(&body, &fam, r, S) {
            Ok(rep) if rep.pass && (rep.lhs - r as f64).abs() <= 1e-9 * r as f64 => {}
            _ => not_tight += 1,
        }
    }
    outcome(
        fails == 0 && not_tight == 0,
        format!("200 random packings, {fails} failures, max Σcrv/r {max_ratio:.3}; 12 partitions, {not_tight} off equality"),
    )
}

fn covering_bounds() -> Outcome {
    let mut rng = rng_for(404, 0);
    let mut fails = 0;
    for i in 0..12 {
        let r = 1 + i % 3;
        let d = 2 + (i / 3) % 2;
        let body = ConvexBody::Ellipsoid(random_ellipsoid(d, &mut rng).unwrap());
        let u = unit(&mut rng, d);
        let fam = repeat(&plank_partition(&body, &u, 5).unwrap(), r);
        let mode = if d == 2 { CoveringMode::Ellipsoid } else { CoveringMode::General };
        match check_covering_lower(&body, &fam, r, mode, S) {
            Ok(rep) if rep.pass && (rep.lhs - r as f64).abs() <= 1e-9 * r as f64 => {}
            _ => fails += 1,
        }
    }
    let mut random_fails = 0;
    let mut min_ratio = f64::INFINITY;
    for i in 0..40 {
        let d = 2 + i % 3;
        let k = 1 + (i / 3) % (d - 1);
        let r = 1 + i % 2;
        let body = match i % 3 {
            0 => ConvexBody::unit_ball(d),
            1 => ConvexBody::Ellipsoid(random_ellipsoid(d, &mut rng).unwrap()),
            _ => ConvexBody::Polytope(random_polytope(d, 3 * d, &mut rng).unwrap()),
        };
        let fam = random_covering(&body, k, r, 4, 2, &mut rng).unwrap();
        match check_covering_lower(&body, &fam, r, CoveringMode::General, Sampling { samples: 20_000, seed: i as u64 }) {
            Ok(rep) if rep.pass => min_ratio = min_ratio.min(rep.lhs / rep.rhs),
            _ => random_fails += 1,
        }
    }
    outcome(
        fails == 0 && random_fails == 0,
        format!("12 partitions, {fails} off Σcrv = r; 40 random coverings, {random_fails} violations, min lhs/rhs {min_ratio:.3}"),
    )
}

fn cap_pipeline() -> Outcome {
    let mut ok = true;
    let mut consts = Vec::new();
    for d in [4usize, 5, 6] {
        for k in [1usize, 2] {
            for delta in [0.2, 0.3] {
                let (_, fam, rep) = cap_example_report(d, k, delta, Metric::Projective, 7).unwrap();
                let ball = ConvexBody::unit_ball(d);
                let v = verify_packing(&ball, &fam.cylinders, 1, 100_000, 11).unwrap();
                let chain = check_cap_chain(&ball, &fam.cylinders).unwrap();
                let counting = rep.n as f64 >= rep.counting_bound_one_sided;
                let case = v.pass && v.report.max_mult <= 1 && counting && chain.pass;
                if !case {
                    println!("    cap case d={d} k={k} δ={delta}: packing {} counting {counting} chain {}", v.pass, chain.pass);
                }
                ok &= case;
                consts.push(format!("{:.3}", rep.empirical_constant));
            }
        }
    }
    outcome(ok, format!("12 cases; empirical constants [{}]", consts.join(", ")))
}

fn rogers_shephard() -> Outcome {
    let mut rng = rng_for(606, 0);
    let mut fails = 0;
    for i in 0..100 {
        let d = 2 + i % 3;
        let k = 1 + (i / 3) % (d - 1);
        let body = ConvexBody::Polytope(random_polytope(d, 2 * d + 2, &mut rng).unwrap());
        let e = random_frame(&mut rng, d, k);
        match check_rogers_shephard(&body, &e) {
            Ok((u, l)) if u.pass && l.pass => {}
            _ => fails += 1,
        }
    }
    let mut closed = 0;
    for d in 2..=5 {
        for k in 1..d {
            let e = Frame::coordinate(d, &(0..k).collect::<Vec<_>>()).unwrap();
            let (u, l) = check_rogers_shephard(&ConvexBody::unit_ball(d), &e).unwrap();
            let expected = omega(k) * omega(d - k);
            if !(u.pass && l.pass && (u.lhs - expected).abs() <= 1e-9 * expected) {
                closed += 1;
            }
            if d <= 3 {
                let lo: Vec<f64> = (0..d).map(|j| -0.5 - j as f64 * 0.25).collect();
                let hi: Vec<f64> = lo.iter().map(|x| -x).collect();
                let cube = ConvexBody::Polytope(Polytope::axis_box(&lo, &hi).unwrap());
                let (u, l) = check_rogers_shephard(&cube, &e).unwrap();
                if !(u.pass && l.pass && l.is_tight()) {
                    closed += 1;
                }
            }
        }
    }
    outcome(
        fails == 0 && closed == 0,
        format!("100 random polytopes, {fails} failures; ball and box cases, {closed} failures"),
    )
}

fn plank_packing_2d() -> Outcome {
    let c2_ok = (plank_constant(2) - FRAC_PI_2).abs() < 1e-15;
    let mut rng = rng_for(707, 0);
    let (mut fails, mut worst_cauchy) = (0, 0f64);
    for i in 0..50 {
        let poly = random_polygon(5 + i % 6, &mut rng).unwrap();
        let exact = poly.hull().surface_area();
        let body = ConvexBody::Polytope(poly);
        let r = 1 + i % 3;
        let fam = cylpack::generate::random_plank_packing(&body, r, 3, &mut rng).unwrap();
        match check_pack1cyl(&body, &fam, r, Sampling { samples: 20_000, seed: i as u64 }) {
            Ok(rep) if rep.pass => {}
            _ => fails += 1,
        }
        let q = cauchy_surface_area(&body, 4096).unwrap();
        worst_cauchy = worst_cauchy.max((q - exact).abs() / exact);
        if !check_cauchy_surface(&body, 4096).unwrap().pass {
            fails += 1;
        }
    }
    let ratios: Vec<f64> = [10usize, 20, 40]
        .iter()
        .map(|&d| plank_constant(d) / (PI * d as f64 / 2.0).sqrt())
        .collect();
    let ratios_ok = ratios.iter().all(|r| (0.95..=1.05).contains(r));
    outcome(
        c2_ok && fails == 0 && worst_cauchy <= 5e-3 && ratios_ok,
        format!("c_2 = π/2 {c2_ok}; 50 polygons, {fails} failures, Cauchy rel err {worst_cauchy:.1e}; c_d/√(πd/2) {ratios:.4?}"),
    )
}

fn falconer_suite() -> Outcome {
    let mut rng = rng_for(808, 0);
    let mut disagree = 0;
    let mut worst_residual = 0f64;
    for i in 0..200 {
        let f = random_family(2 + i % 6, &mut rng);
        let exact = f.is_separable();
        if let Some(l) = &exact.line {
            if !f.line_separates(l) {
                disagree += 1;
            }
        }
        let (x0, x1) = f.width_interval([1.0, 0.0]);
        let (y0, y1) = f.width_interval([0.0, 1.0]);
        let span = (x1 - x0).max(y1 - y0);
        let oracle = (0..4000).any(|_| {
            let t: f64 = rng.random_range(0.0..PI);
            let u = [t.cos(), t.sin()];
            let (lo, hi) = f.width_interval(u);
            let s = rng.random_range(lo..hi);
            f.line_separates(&Line { s, u })
        });
        if oracle && !exact.separable {
            disagree += 1;
        }
        let cc = f.circumradius();
        worst_residual = worst_residual.max(cc.tangency_residual / span).max(cc.containment_excess / span);
    }
    let mut ns_fails = 0;
    for i in 0..100 {
        let f = random_ns_family(2 + i % 5, &mut rng);
        let r = 1 + i % 3;
        let planks = cylpack::falconer::random_plank_packing(&f, r, 3, &mut rng);
        match verify_dual_falconer(&f, &planks, r, 20_000, i as u64) {
            Ok(rep) if rep.widths.pass && rep.circumradius.pass => {}
            _ => ns_fails += 1,
        }
    }
    let mut min_section = f64::INFINITY;
    for i in 0..500 {
        let f = random_ns_family(2 + i % 4, &mut rng);
        let line = random_line_through(&f, &mut rng);
        min_section = min_section.min(f.sectional_integral(DensityMode::Normalized, &line).unwrap());
    }
    let mut worst_gap = 0f64;
    for i in 0..20 {
        let m = 0.25 + 0.5 * i as f64;
        let delta = 0.1 + 0.2 * ((i * 7) % 20) as f64;
        worst_gap = worst_gap.max(variational_inf(m, delta).unwrap().relative_gap);
    }
    outcome(
        disagree == 0 && worst_residual <= 1e-10 && ns_fails == 0 && min_section >= 1.0 - 1e-9 && worst_gap <= 0.01,
        format!(
            "{disagree} separability disagreements; tangency residual {worst_residual:.1e}; {ns_fails} NS failures; min sectional integral {min_section:.12}; variational gap {worst_gap:.1e}"
        ),
    )
}

fn fixtures() -> Vec<String> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let mut v: Vec<String> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json") && !p.ends_with("malformed.json") && !p.ends_with("over_packed.json"))
        .map(|p| p.display().to_string())
        .collect();
    v.sort();
    v
}

fn determinism() -> Outcome {
    let files = fixtures();
    let run = |threads: &str, format: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_cylpack"))
            .env("CYLPACK_THREADS", threads)
            .args(["--seed", "9", "--format", format, "bounds"])
            .args(&files)
            .output()
            .unwrap();
        (o.status.code(), o.stdout)
    };
    let a = run("1", "json");
    let b = run("4", "json");
    let c = run("2", "csv");
    let d = run("3", "csv");
    let rows = c.1.iter().filter(|&&b| b == b'\n').count().saturating_sub(1);
    outcome(
        a.0 == Some(0) && a == b && c == d && !a.1.is_empty(),
        format!("{} fixtures, {rows} rows, {} report bytes, identical across runs and thread counts", files.len(), a.1.len()),
    )
}

fn main() {
    let start = Instant::now();
    let criteria: [Criterion; 8] = [
        ("density identities", 30, density_identities),
        ("cos-power sandwich", 10, sandwich),
        ("packing bounds in ellipsoids", 120, packing_bounds),
        ("covering bounds", 60, covering_bounds),
        ("cap construction", 180, cap_pipeline),
        ("Rogers–Shephard", 120, rogers_shephard),
        ("plank packings of polygons", 60, plank_packing_2d),
        ("disk families", 120, falconer_suite),
    ];
    let mut all = true;
    for (i, (name, budget, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = f();
        let el = t.elapsed();
        let pass = o.pass && el <= Duration::from_secs(*budget);
        all &= pass;
        println!("[{}] {}. {name}: {} ({:.1}s, budget {budget}s)", if pass { "PASS" } else { "FAIL" }, i + 1, o.detail, el.as_secs_f64());
    }
    let t = Instant::now();
    let o = determinism();
    let total = start.elapsed();
    let pass = o.pass && total <= Duration::from_secs(600);
    all &= pass;
    println!(
        "[{}] 9. determinism: {} ({:.1}s; whole run {:.1}s, budget 600s)",
        if pass { "PASS" } else { "FAIL" },
        o.detail,
        t.elapsed().as_secs_f64(),
        total.as_secs_f64()
    );
    if !all {
        std::process::exit(1);
    }
}
