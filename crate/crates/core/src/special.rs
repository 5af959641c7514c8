//! Ball volumes, cos-power integrals, cap volumes and spherical cap measures.
//!
//! `I_n(δ) = ∫_{π/2-δ}^{π/2} cos^n t dt` has two evaluation paths that are
//! kept side by side: adaptive quadrature ([`cos_power_integral`]) and the
//! integration-by-parts recurrence ([`cos_power_integral_recurrence`]).
//! Downstream code uses the quadrature path; tests pin the two together.

use std::f64::consts::{E, FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::quad::integrate;

/// Volume of the m-dimensional Euclidean unit ball, `ω_m = π^{m/2} / Γ(m/2 + 1)`.
pub fn omega(m: usize) -> f64 {
    // ω_m = (2π/m) ω_{m-2}
    let (mut w, mut j) = if m.is_multiple_of(2) { (1.0, 0) } else { (2.0, 1) };
    while j < m {
        j += 2;
        w *= 2.0 * PI / j as f64;
    }
    w
}

/// Binomial coefficient as a float (exact for the small arguments used here).
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta <= FRAC_PI_2) {
        return Err(Error::Domain(format!("angle {delta} outside (0, π/2]")));
    }
    Ok(())
}

/// `I_n(δ)` by adaptive quadrature (absolute error ≤ 1e-12, relative 1e-13).
pub fn cos_power_integral(n: u32, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    let q = integrate(
        |t: f64| t.cos().max(0.0).powi(n as i32),
        FRAC_PI_2 - delta,
        FRAC_PI_2,
        1e-14,
        1e-13,
    );
    Ok(q.value)
}

/// `I_n(δ)` from `I_n = -(sin δ)^{n-1} cos δ / n + (n-1)/n · I_{n-2}` with
/// `I_0 = δ` and `I_1 = 1 - cos δ`. Accurate in absolute terms; loses relative
/// accuracy when `I_n` is tiny.
pub fn cos_power_integral_recurrence(n: u32, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    let (s, c) = delta.sin_cos();
    let mut value = if n.is_multiple_of(2) { delta } else { 1.0 - c };
    let mut j = if n.is_multiple_of(2) { 0 } else { 1 };
    while j < n {
        j += 2;
        let jf = j as f64;
        value = -s.powi(j as i32 - 1) * c / jf + (jf - 1.0) / jf * value;
    }
    Ok(value)
}

/// `∫_{-π/2}^{π/2} cos^n t dt`, by quadrature.
pub fn full_cos_power_integral(n: u32) -> f64 {
    integrate(|t: f64| t.cos().max(0.0).powi(n as i32), -FRAC_PI_2, FRAC_PI_2, 1e-14, 1e-14).value
}

/// Bracket `[δ (sin δ)^n / (e (n+1)), δ (sin δ)^n]` around `I_n(δ)`.
pub fn cos_power_bracket(n: u32, delta: f64) -> Result<(f64, f64)> {
    if n < 1 {
        return Err(Error::Domain("sandwich needs n ≥ 1".into()));
    }
    check_delta(delta)?;
    if delta >= FRAC_PI_2 {
        return Err(Error::Domain("sandwich needs δ < π/2".into()));
    }
    let upper = delta * delta.sin().powi(n as i32);
    Ok((upper / (E * (n as f64 + 1.0)), upper))
}

/// `(1 - β) β^n` at `β = n/(n+1)`, the factor behind the sandwich's lower end.
pub fn sandwich_beta_factor(n: u32) -> f64 {
    let beta = n as f64 / (n as f64 + 1.0);
    (1.0 - beta) * beta.powi(n as i32)
}

/// Volume of the one-sided solid cap `{z ∈ B_2^m : ⟨z, x⟩ ≥ cos δ}`,
/// `ω_{m-1} · I_m(δ)`.
pub fn cap_volume(m: usize, delta: f64) -> Result<f64> {
    if m < 1 {
        return Err(Error::Domain("cap dimension must be ≥ 1".into()));
    }
    Ok(omega(m - 1) * cos_power_integral(m as u32, delta)?)
}

/// Normalized surface measure of a cap of angular radius `δ` on `S^{d-1}`,
/// `I_{d-2}(δ) / ∫_{-π/2}^{π/2} cos^{d-2}`. With `antipodal` the cap and its
/// mirror image `{|⟨z, x⟩| ≥ cos δ}` are measured together.
pub fn spherical_cap_fraction(d: usize, delta: f64, antipodal: bool) -> Result<f64> {
    if d < 2 {
        return Err(Error::Domain("sphere dimension must be ≥ 2".into()));
    }
    let n = (d - 2) as u32;
    let one_sided = cos_power_integral(n, delta)? / full_cos_power_integral(n);
    Ok(if antipodal { (2.0 * one_sided).min(1.0) } else { one_sided })
}

/// One-sided cap fraction through the ball-volume ratio `(ω_{d-3}/ω_{d-2}) I_{d-2}(δ)`;
/// defined for `d ≥ 4`.
pub fn spherical_cap_fraction_ratio_form(d: usize, delta: f64) -> Result<f64> {
    if d < 4 {
        return Err(Error::Domain("ratio form needs d ≥ 4".into()));
    }
    Ok(omega(d - 3) / omega(d - 2) * cos_power_integral((d - 2) as u32, delta)?)
}
