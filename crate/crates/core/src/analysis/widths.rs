use super::moments::{n_norm, ApodizationSpec};
use crate::numerics::{tail_partial_integral, NeumaierSum, TailModel};
use crate::physics::min_disturbance_bound;
use crate::transfer::MixedDistribution;
use crate::{Error, Result};
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Extent {
    Finite(f64),
    Infinite,
}

const DENSITY_FLOOR: f64 = 1e-9;
const TAIL_LOBES: f64 = 1000.0;

/// Smallest p with every atom and all above-floor density in [−p, p].
pub fn support_halfwidth(d: &MixedDistribution) -> Extent {
    if d.has_tails() {
        return Extent::Infinite;
    }
    let mut p = d.atoms.iter().filter(|a| a.weight != 0.0).fold(0.0f64, |m, a| m.max(a.location.abs()));
    let g = d.density.grid;
    let h = g.spacing();
    for (x, v) in g.points().zip(&d.density.values) {
        if v.abs() > DENSITY_FLOOR {
            p = p.max(x.abs() + h);
        }
    }
    Extent::Finite(p)
}

/// Shortest half-period among the tail tones, used as the scan step in
/// the tail region.
fn tail_half_period(d: &MixedDistribution) -> Option<f64> {
    d.left_tail
        .iter()
        .chain(&d.right_tail)
        .filter(|t| t.amplitude != 0.0 && t.wavenumber != 0.0)
        .map(|t| PI / t.wavenumber.abs())
        .reduce(f64::min)
}

/// Cumulative mass C(p) = atoms in [−p, p] + ∫_{−p}^{p} D, accumulated
/// shell by shell.
struct Cumulative<'a> {
    d: &'a MixedDistribution,
    atoms: Vec<(f64, f64)>,
}

impl<'a> Cumulative<'a> {
    fn new(d: &'a MixedDistribution) -> Self {
        let mut atoms: Vec<(f64, f64)> = d.atoms.iter().map(|a| (a.location.abs(), a.weight)).collect();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        Cumulative { d, atoms }
    }

    /// Mass in the shell a < |℘| ≤ b (atoms at |℘| = 0 count for a < 0).
    fn shell(&self, a: f64, b: f64) -> f64 {
        let mut s = NeumaierSum::new();
        for &(r, w) in &self.atoms {
            if r > a && r <= b {
                s.add(w);
            }
        }
        if b > a.max(0.0) {
            let lo = a.max(0.0);
            s.add(self.d.density_integral(lo, b));
            s.add(self.d.density_integral(-b, -lo));
        }
        s.value()
    }
}

/// First p where C(p) reaches ε (ties toward smaller p), scanning the core
/// and up to 10³ tail lobes; `None` when not attained.
pub fn confidence_halfwidth(d: &MixedDistribution, eps: f64) -> Result<Option<f64>> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Domain(format!("confidence level must be in (0, 1], got {eps}")));
    }
    let target = eps - 1e-12;
    let cum = Cumulative::new(d);
    let (lo, hi) = d.core();
    let core_edge = hi.max(-lo);
    let grid_step = d.density.grid.spacing();
    let tail_step = tail_half_period(d).map(|h| h / 8.0);
    let end = match tail_half_period(d) {
        Some(hp) => core_edge + TAIL_LOBES * hp,
        None => core_edge.max(cum.atoms.last().map(|a| a.0).unwrap_or(0.0)),
    };
    let mut ladder: Vec<f64> = Vec::new();
    let mut p = 0.0;
    while p < core_edge {
        ladder.push(p);
        p += grid_step;
    }
    let step = tail_step.unwrap_or(grid_step);
    while p <= end {
        ladder.push(p);
        p += step;
    }
    ladder.extend(cum.atoms.iter().map(|a| a.0));
    ladder.push(core_edge);
    ladder.sort_by(f64::total_cmp);
    ladder.dedup();

    let mut c = cum.shell(-1.0, 0.0);
    if c >= target {
        return Ok(Some(0.0));
    }
    let mut prev = 0.0;
    for &p in ladder.iter().filter(|p| **p > 0.0) {
        // atoms exactly at p are taken at p, so check the open shell first
        let open = c + cum.shell(prev, p) - cum.atoms.iter().filter(|a| a.0 == p).map(|a| a.1).sum::<f64>();
        let closed = c + cum.shell(prev, p);
        if open >= target || closed >= target {
            if open < target {
                return Ok(Some(p));
            }
            // bisect the smooth part inside (prev, p)
            let (mut a, mut b) = (prev, p);
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                if c + cum.shell(prev, m) >= target {
                    b = m;
                } else {
                    a = m;
                }
            }
            return Ok(Some(b));
        }
        c = closed;
        prev = p;
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SupportCheck {
    pub bound: f64,
    pub outside_mass: f64,
    pub pass: bool,
    /// Location of the largest contribution outside (−bound, bound).
    pub witness: Option<f64>,
}

fn tail_abs_mass(t: &TailModel, from: f64, to: f64) -> f64 {
    // |sin| integrated lobe by lobe between consecutive zeros
    let mut s = NeumaierSum::new();
    let mut a = from;
    while a < to {
        let z = t.next_zero(a).min(to);
        let b = if z > a { z } else { (a + t.half_period().unwrap_or(to - a)).min(to) };
        s.add(tail_partial_integral(t, 0, a, b).abs());
        a = b;
    }
    s.value()
}

/// Eq.-style support test: |mass| of D outside (−b, b) with b the minimum
/// disturbance for visibility `v` must exceed 1e−3.
pub fn verify_support_bound(d: &MixedDistribution, v: f64, s: f64, hbar: f64) -> Result<SupportCheck> {
    let bound = min_disturbance_bound(v, s, hbar)?;
    let mut mass = NeumaierSum::new();
    let mut best: Option<(f64, f64)> = None;
    let note = |loc: f64, m: f64, best: &mut Option<(f64, f64)>| {
        if best.is_none_or(|(_, bm)| m > bm) {
            *best = Some((loc, m));
        }
    };
    for a in &d.atoms {
        if a.location.abs() >= bound && a.weight != 0.0 {
            mass.add(a.weight.abs());
            note(a.location, a.weight.abs(), &mut best);
        }
    }
    for &(p, wd) in d.core_nodes().iter() {
        if p.abs() >= bound {
            mass.add(wd.abs());
            note(p, wd.abs(), &mut best);
        }
    }
    if mass.value() <= 1e-3 {
        let (lo, hi) = d.core();
        for (tails, edge, sign) in [(&d.right_tail, hi, 1.0), (&d.left_tail, -lo, -1.0)] {
            for t in tails {
                let start = edge.max(bound);
                let span = TAIL_LOBES * t.half_period().unwrap_or(edge.max(1.0));
                let m = tail_abs_mass(t, start, start + span);
                mass.add(m);
                note(sign * (start + 0.5 * span), m, &mut best);
            }
        }
    }
    let outside_mass = mass.value();
    Ok(SupportCheck { bound, outside_mass, pass: outside_mass > 1e-3, witness: best.map(|b| b.0) })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormEntry {
    pub n: u32,
    pub value: Option<f64>,
    pub defined_without_apodization: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WidthReport {
    pub support_halfwidth: Extent,
    pub n_norms: Vec<NormEntry>,
    /// (ε, half-width), `None` when not attained.
    pub confidence_halfwidth: Vec<(f64, Option<f64>)>,
    pub bound_h_over_6s: SupportCheck,
    /// confidence_halfwidth(1) ≥ h/4s − 1e−3·ħ/s.
    pub conjecture_h_over_4s: bool,
}

pub fn width_report(
    d: &MixedDistribution,
    visibility: f64,
    s: f64,
    hbar: f64,
    spec: &ApodizationSpec,
    eps_levels: &[f64],
) -> Result<WidthReport> {
    let n_norms = (1..=4)
        .map(|n| {
            n_norm(d, n, spec).map(|r| NormEntry {
                n,
                value: r.value,
                defined_without_apodization: r.defined_without_apodization,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let levels = eps_levels
        .iter()
        .map(|&e| confidence_halfwidth(d, e).map(|w| (e, w)))
        .collect::<Result<Vec<_>>>()?;
    let unit = confidence_halfwidth(d, 1.0)?;
    let h = 2.0 * PI * hbar;
    Ok(WidthReport {
        support_halfwidth: support_halfwidth(d),
        n_norms,
        confidence_halfwidth: levels,
        bound_h_over_6s: verify_support_bound(d, visibility, s, hbar)?,
        conjecture_h_over_4s: unit.is_some_and(|w| w >= h / (4.0 * s) - 1e-3 * hbar / s),
    })
}
