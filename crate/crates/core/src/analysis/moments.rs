use crate::numerics::{apodized_tail_integral, neville_at_zero, osc_tail_integral, NeumaierSum, TailIntegral};
use crate::transfer::{CharFunction, MixedDistribution};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Exponential window e^{−|℘|/κ} on the ladder κ_j = κ₀·2^j.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApodizationSpec {
    pub kappa0: f64,
    pub rungs: usize,
    /// Degree of a least-squares polynomial in 1/κ; `None` interpolates
    /// through every rung.
    pub order: Option<usize>,
    /// Momentum unit ħ/s for the residual tolerance.
    pub scale: f64,
}

pub const MAX_MOMENT_ORDER: u32 = 8;

impl ApodizationSpec {
    pub fn new(kappa0: f64, rungs: usize, order: Option<usize>, scale: f64) -> Result<Self> {
        if !(kappa0 > 0.0) || rungs < 2 || !(scale > 0.0) {
            return Err(Error::Domain(format!("bad apodization ladder: κ₀ = {kappa0}, {rungs} rungs")));
        }
        if order.is_some_and(|p| p + 1 >= rungs) {
            return Err(Error::Domain("polynomial order needs fewer coefficients than rungs".into()));
        }
        Ok(ApodizationSpec { kappa0, rungs, order, scale })
    }

    /// κ₀ = 64ħ/s, 6 rungs, full interpolation.
    pub fn default_for(s: f64, hbar: f64) -> Self {
        ApodizationSpec { kappa0: 64.0 * hbar / s, rungs: 6, order: None, scale: hbar / s }
    }

    /// κ₀ = 8ħ/s, 6 rungs, quadratic least squares.
    pub fn coarse(s: f64, hbar: f64) -> Self {
        ApodizationSpec { kappa0: 8.0 * hbar / s, rungs: 6, order: Some(2), scale: hbar / s }
    }

    pub fn ladder(&self) -> Vec<f64> {
        (0..self.rungs).map(|j| self.kappa0 * 2f64.powi(j as i32)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentResult {
    pub order: u32,
    /// Extrapolated limit; `None` when the ladder does not settle.
    pub value: Option<f64>,
    pub residual: f64,
    pub defined_without_apodization: bool,
    /// Plain integral when it converges.
    pub unapodized: Option<f64>,
    /// (κ, apodized integral) per rung.
    pub ladder: Vec<(f64, f64)>,
}

fn weight(p: f64, n: u32, absolute: bool) -> f64 {
    if absolute { p.abs().powi(n as i32) } else { p.powi(n as i32) }
}

/// ∫D(℘)℘ⁿe^{−|℘|/κ}d℘ (|℘|ⁿ when `absolute`); κ = ∞ gives the plain
/// integral, `None` if a tail diverges.
pub fn apodized_integral(d: &MixedDistribution, n: u32, kappa: f64, absolute: bool) -> Option<f64> {
    let window = |p: f64| if kappa.is_finite() { (-p.abs() / kappa).exp() } else { 1.0 };
    let mut s = NeumaierSum::new();
    for a in &d.atoms {
        s.add(a.weight * weight(a.location, n, absolute) * window(a.location));
    }
    s.add(d.core_integral(|p| weight(p, n, absolute) * window(p)));
    let (lo, hi) = d.core();
    let tail = |t, start| {
        if kappa.is_finite() {
            apodized_tail_integral(t, n, start, kappa)
        } else {
            osc_tail_integral(t, n, start)
        }
    };
    for t in &d.right_tail {
        match tail(t, hi) {
            TailIntegral::Converged(v) => s.add(v),
            TailIntegral::Divergent => return None,
        }
    }
    let sign = if absolute || n % 2 == 0 { 1.0 } else { -1.0 };
    for t in &d.left_tail {
        match tail(t, -lo) {
            TailIntegral::Converged(v) => s.add(sign * v),
            TailIntegral::Divergent => return None,
        }
    }
    Some(s.value())
}

/// Value at 0 of a degree-`order` least-squares polynomial in u, with the
/// same coarsest-rung-dropped residual as the interpolating case.
fn lsq_at_zero(u: &[f64], y: &[f64], order: usize) -> (f64, f64) {
    let fit = |u: &[f64], y: &[f64]| {
        let a = DMatrix::from_fn(u.len(), order + 1, |i, j| u[i].powi(j as i32));
        let b = DVector::from_column_slice(y);
        a.svd(true, true).solve(&b, 1e-14).map(|c| c[0]).unwrap_or(f64::NAN)
    };
    let full = fit(u, y);
    if u.len() <= order + 1 {
        return (full, f64::INFINITY);
    }
    (full, (full - fit(&u[1..], &y[1..])).abs())
}

fn ladder_moment(d: &MixedDistribution, n: u32, spec: &ApodizationSpec, absolute: bool) -> Result<MomentResult> {
    if n > MAX_MOMENT_ORDER {
        return Err(Error::Domain(format!("moment order {n} exceeds {MAX_MOMENT_ORDER}")));
    }
    let kappas = spec.ladder();
    let mut ladder = Vec::with_capacity(kappas.len());
    for &k in &kappas {
        let v = apodized_integral(d, n, k, absolute)
            .ok_or_else(|| Error::Domain(format!("apodized tail integral failed at κ = {k}")))?;
        ladder.push((k, v));
    }
    let u: Vec<f64> = kappas.iter().map(|k| 1.0 / k).collect();
    let y: Vec<f64> = ladder.iter().map(|l| l.1).collect();
    let (value, residual) = match spec.order {
        None => {
            let e = neville_at_zero(&u, &y);
            (e.value, e.error)
        }
        Some(p) => lsq_at_zero(&u, &y, p),
    };
    let unapodized = apodized_integral(d, n, f64::INFINITY, absolute);
    // compact support: the plain integral is the limit, no extrapolation needed
    let (value, residual) = match (d.has_tails(), unapodized) {
        (false, Some(v)) => (v, 0.0),
        _ => (value, residual),
    };
    let tol = 1e-4 * spec.scale.powi(n as i32);
    Ok(MomentResult {
        order: n,
        value: (residual <= tol && value.is_finite()).then_some(value),
        residual,
        defined_without_apodization: unapodized.is_some(),
        unapodized,
        ladder,
    })
}

/// lim_{κ→∞} ∫D(℘)℘ⁿe^{−|℘|/κ}d℘.
pub fn apodized_moment(d: &MixedDistribution, n: u32, spec: &ApodizationSpec) -> Result<MomentResult> {
    ladder_moment(d, n, spec, false)
}

/// [∫D(℘)|℘|ⁿd℘]^{1/n}, apodized; a negative integral keeps its sign.
pub fn n_norm(d: &MixedDistribution, n: u32, spec: &ApodizationSpec) -> Result<MomentResult> {
    if n == 0 {
        return Err(Error::Domain("n-norm needs n ≥ 1".into()));
    }
    let root = |v: f64| v.signum() * v.abs().powf(1.0 / n as f64);
    let mut r = ladder_moment(d, n, spec, true)?;
    r.value = r.value.map(root);
    r.unapodized = r.unapodized.map(root);
    Ok(r)
}

/// ⟨℘ⁿ⟩ = (−iħ d/dq)ⁿΦ(q)|₀ from a least-squares polynomial of degree
/// n + 4 fitted to Φ on |q| ≤ `window`.
pub fn moment_from_char(phi: &CharFunction, n: u32, window: f64) -> f64 {
    let deg = n as usize + 4;
    let pts: Vec<(f64, crate::C64)> = phi
        .q_grid
        .points()
        .zip(&phi.values)
        .filter(|(q, _)| q.abs() <= window)
        .map(|(q, v)| (q / window, *v))
        .collect();
    let a = DMatrix::from_fn(pts.len(), deg + 1, |i, j| pts[i].0.powi(j as i32));
    let svd = a.svd(true, true);
    let solve = |f: &dyn Fn(crate::C64) -> f64| {
        let b = DVector::from_iterator(pts.len(), pts.iter().map(|p| f(p.1)));
        svd.solve(&b, 1e-14).map(|c| c[n as usize]).unwrap_or(f64::NAN)
    };
    let (re, im) = (solve(&|v| v.re), solve(&|v| v.im));
    let fact: f64 = (1..=n).map(|k| k as f64).product();
    // n-th derivative at 0 is n!·c_n/windowⁿ; (−iħ)ⁿ picks Re or Im
    let c = crate::C64::new(re, im) * fact / window.powi(n as i32);
    let factor = crate::C64::new(0.0, -phi.hbar).powu(n);
    (factor * c).re
}
