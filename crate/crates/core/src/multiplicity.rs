//! Sampled multiplicities of cylinder families inside a body, and the r-fold
//! packing and covering verdicts built on them.
//!
//! Samples depend only on `(K, n, seed)`: they are drawn in fixed-size blocks,
//! block `b` from stream `b + 1` of the seed, and blocks are reduced in order,
//! so reports are bit-identical with or without threads.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::body::ConvexBody;
use crate::cylinder::{Cylinder, BOUNDARY_SLACK, INTERIOR_MARGIN};
use crate::error::{Error, Result};
use crate::par::map_indexed;
use crate::sampling::rng_for;

/// Samples per block.
pub const BLOCK: usize = 4096;
/// Smallest accepted sample count.
pub const MIN_SAMPLES: usize = 1000;
/// Tolerance used for base containment during verification.
pub const CONTAINMENT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplicityReport {
    pub samples: usize,
    /// Largest number of cylinder interiors containing a sample (packing count).
    pub max_mult: usize,
    /// Smallest number of closed cylinders containing a sample (covering count).
    pub min_mult: usize,
    /// Fraction of samples in at least one closed cylinder.
    pub coverage_fraction: f64,
    pub witness_max: Vec<f64>,
    pub witness_min: Vec<f64>,
    pub seed: u64,
    pub max_mult_closed: usize,
    pub min_mult_strict: usize,
}

#[derive(Debug, Clone)]
struct Partial {
    n: usize,
    covered: usize,
    max_strict: (usize, Vec<f64>),
    min_closed: (usize, Vec<f64>),
    max_closed: usize,
    min_strict: usize,
}

fn run_block(body: &ConvexBody, family: &[Cylinder], seed: u64, block: usize, size: usize) -> Result<Partial> {
    let mut rng = rng_for(seed, block as u64 + 1);
    let sampler = body.sampler();
    let width = family.iter().map(|c| c.ambient_dim() - c.k()).max().unwrap_or(0);
    let mut buf = vec![0.0; width];
    let mut p = Partial {
        n: size,
        covered: 0,
        max_strict: (0, Vec::new()),
        min_closed: (usize::MAX, Vec::new()),
        max_closed: 0,
        min_strict: usize::MAX,
    };
    for _ in 0..size {
        let x: DVector<f64> = sampler.sample(&mut rng)?;
        let xs = x.as_slice();
        let interior = body.contains_strict_slice(xs, INTERIOR_MARGIN);
        let (mut closed, mut strict) = (0usize, 0usize);
        for c in family {
            let m = c.ambient_dim() - c.k();
            if c.contains_with(xs, &mut buf[..m], BOUNDARY_SLACK) {
                closed += 1;
                if interior && c.contains_with(xs, &mut buf[..m], -INTERIOR_MARGIN) {
                    strict += 1;
                }
            }
        }
        if closed > 0 {
            p.covered += 1;
        }
        if strict > p.max_strict.0 || p.max_strict.1.is_empty() {
            p.max_strict = (strict, xs.to_vec());
        }
        if closed < p.min_closed.0 {
            p.min_closed = (closed, xs.to_vec());
        }
        p.max_closed = p.max_closed.max(closed);
        p.min_strict = p.min_strict.min(strict);
    }
    Ok(p)
}

fn run_blocks(body: &ConvexBody, family: &[Cylinder], n: usize, seed: u64) -> Result<Vec<Partial>> {
    let blocks = n.div_ceil(BLOCK);
    map_indexed(blocks, |b| run_block(body, family, seed, b, BLOCK.min(n - b * BLOCK)))
        .into_iter()
        .collect()
}

/// Multiplicity statistics of `family` over `n` uniform samples of `K`.
pub fn estimate_multiplicity(body: &ConvexBody, family: &[Cylinder], n: usize, seed: u64) -> Result<MultiplicityReport> {
    if n < MIN_SAMPLES {
        return Err(Error::Invalid(format!("need at least {MIN_SAMPLES} samples, got {n}")));
    }
    let d = body.dim();
    if let Some(c) = family.iter().find(|c| c.ambient_dim() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: c.ambient_dim(),
        });
    }
    let parts = run_blocks(body, family, n, seed)?;
    let mut it = parts.into_iter();
    let mut acc = it.next().expect("n ≥ 1 gives one block");
    for p in it {
        acc.n += p.n;
        acc.covered += p.covered;
        if p.max_strict.0 > acc.max_strict.0 {
            acc.max_strict = p.max_strict;
        }
        if p.min_closed.0 < acc.min_closed.0 {
            acc.min_closed = p.min_closed;
        }
        acc.max_closed = acc.max_closed.max(p.max_closed);
        acc.min_strict = acc.min_strict.min(p.min_strict);
    }
    Ok(MultiplicityReport {
        samples: acc.n,
        max_mult: acc.max_strict.0,
        min_mult: acc.min_closed.0,
        coverage_fraction: acc.covered as f64 / acc.n as f64,
        witness_max: acc.max_strict.1,
        witness_min: acc.min_closed.1,
        seed,
        max_mult_closed: acc.max_closed,
        min_mult_strict: acc.min_strict,
    })
}

/// Outcome of a sampled packing or covering check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub pass: bool,
    /// Sample violating the multiplicity requirement, if any.
    pub witness: Option<Vec<f64>>,
    /// Index of a cylinder whose base leaves the projection of the body.
    pub uncontained: Option<usize>,
    pub report: MultiplicityReport,
    /// Sampling can refute but never prove; always `true`.
    pub probabilistic: bool,
}

/// r-fold packing: every base inside its shadow of `K` and no sample in more
/// than `r` cylinder interiors.
pub fn verify_packing(body: &ConvexBody, family: &[Cylinder], r: usize, n: usize, seed: u64) -> Result<Verification> {
    let mut uncontained = None;
    for (i, c) in family.iter().enumerate() {
        if !c.base_contained(body, CONTAINMENT_TOL)? {
            uncontained = Some(i);
            break;
        }
    }
    let report = estimate_multiplicity(body, family, n, seed)?;
    let over = report.max_mult > r;
    Ok(Verification {
        pass: !over && uncontained.is_none(),
        witness: over.then(|| report.witness_max.clone()),
        uncontained,
        report,
        probabilistic: true,
    })
}

/// r-fold covering: every sample in at least `r` closed cylinders.
pub fn verify_covering(body: &ConvexBody, family: &[Cylinder], r: usize, n: usize, seed: u64) -> Result<Verification> {
    let report = estimate_multiplicity(body, family, n, seed)?;
    let under = report.min_mult < r;
    Ok(Verification {
        pass: !under,
        witness: under.then(|| report.witness_min.clone()),
        uncontained: None,
        report,
        probabilistic: true,
    })
}
