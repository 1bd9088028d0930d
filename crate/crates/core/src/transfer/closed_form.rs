use super::mixed::{Atom, DensityFn, MixedDistribution};
use crate::numerics::{Expansion, GridSpec, PowerTerm};
use crate::physics::{MeasurementSet, SlitKind, SlitSpec, Wavefunction, TAIL_POWERS};
use crate::{Error, Result, C64};
use statrs::function::gamma::gamma;
use std::f64::consts::PI;
use std::sync::Arc;

/// Single-slit profile for the closed forms: ½δ (narrow) or c_m cos^m(πy/w)
/// normalized to mass ½.
#[derive(Clone, Copy, Debug)]
pub struct Profile {
    pub w: f64,
    /// None for the narrow-slit limit.
    pub m: Option<u32>,
}

fn binom(m: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (m - i) as f64 / (i + 1) as f64)
}

impl Profile {
    fn c_m(&self, m: u32) -> f64 {
        let i_m = self.w / PI.sqrt() * gamma((m as f64 + 1.0) / 2.0) / gamma(m as f64 / 2.0 + 1.0);
        1.0 / (2.0 * i_m)
    }

    fn a_k(&self, m: u32, k: u32) -> f64 {
        (m as f64 - 2.0 * k as f64) * PI / self.w
    }

    /// ρ̂(b) = ∫ρ_slit(y) cos(by) dy via the binomial sum.
    pub fn cos_transform(&self, b: f64) -> f64 {
        let Some(m) = self.m else { return 0.5 };
        let w = self.w;
        let sum: f64 = (0..=m)
            .map(|k| {
                let d = b - self.a_k(m, k);
                let t = if (d * w).abs() < 1e-8 { 0.5 * w * (1.0 - (d * w).powi(2) / 24.0) } else { (0.5 * d * w).sin() / d };
                binom(m, k) * t
            })
            .sum();
        self.c_m(m) * 2f64.powi(1 - m as i32) * sum
    }

    /// Same quantity from the product forms (sin for even m, cos for odd m).
    pub fn cos_transform_parity_form(&self, b: f64) -> f64 {
        let Some(m) = self.m else { return 0.5 };
        let h = PI / self.w;
        let fact: f64 = (1..=m).map(|j| j as f64).product();
        let prod: f64 = (0..=m).map(|k| b - self.a_k(m, k)).product();
        let (sign, trig) = if m % 2 == 0 {
            (if (m / 2) % 2 == 0 { 1.0 } else { -1.0 }, (0.5 * b * self.w).sin())
        } else {
            (if m.div_ceil(2) % 2 == 0 { 1.0 } else { -1.0 }, (0.5 * b * self.w).cos())
        };
        self.c_m(m) * 2.0 * sign * fact * h.powi(m as i32) * trig / prod
    }

    /// Largest |a_k|.
    fn rate(&self) -> f64 {
        self.m.map_or(0.0, |m| m as f64 * PI / self.w)
    }
}

/// P_wv density for symmetric slits under the sign measurement:
/// sin(℘s/2ħ)·ρ̂(℘/ħ)/(π℘), plus ½δ(℘).
pub fn closed_form_profile(profile: Profile, s: f64, hbar: f64) -> MixedDistribution {
    let dens: DensityFn = Arc::new(move |p: f64| {
        let x = 0.5 * p * s / hbar;
        let sinc = if x.abs() < 1e-6 { 1.0 - x * x / 6.0 } else { x.sin() / x };
        sinc * s / (2.0 * PI * hbar) * profile.cos_transform(p / hbar)
    });
    let reach = (40.0 * hbar / s).max(3.0 * hbar * profile.rate()).max(12.0 * PI * hbar / s);
    let dp = 0.05 * 2.0 * PI * hbar / s;
    let n = ((2.0 * reach / dp).ceil() as usize + 1) | 1;
    let grid = GridSpec::symmetric(reach, n).expect("positive reach");
    let d = MixedDistribution::from_exact(vec![Atom { location: 0.0, weight: 0.5 }], grid, dens);
    let (l, r) = tail_expansion(profile, s, hbar).real_tails();
    d.with_tails(l, r)
}

/// Exact large-|℘| expansion of the closed-form density.
fn tail_expansion(profile: Profile, s: f64, hbar: f64) -> Expansion {
    let Some(m) = profile.m else {
        return Expansion {
            terms: vec![PowerTerm { z: C64::new(0.0, -1.0 / (2.0 * PI)), wavenumber: 0.5 * s / hbar, power: 1 }],
        };
    };
    let w = profile.w;
    let mut terms = Vec::new();
    let lead = profile.c_m(m) * 2f64.powi(1 - m as i32) / PI * 0.5 * hbar;
    for k in 0..=m {
        let a = profile.a_k(m, k);
        let coef = lead * binom(m, k);
        for j in 0..=(TAIL_POWERS - 2) {
            let c = coef * (hbar * a).powi(j as i32);
            if c == 0.0 {
                continue;
            }
            // ½[cos(℘(s-w)/2ħ + a w/2) - cos(℘(s+w)/2ħ - a w/2)]
            terms.push(PowerTerm {
                z: C64::from_polar(c, 0.5 * a * w),
                wavenumber: 0.5 * (s - w) / hbar,
                power: j + 2,
            });
            terms.push(PowerTerm {
                z: C64::from_polar(-c, -0.5 * a * w),
                wavenumber: 0.5 * (s + w) / hbar,
                power: j + 2,
            });
        }
    }
    Expansion { terms }.simplified()
}

pub fn profile_of(spec: &SlitSpec) -> Profile {
    match spec.kind {
        SlitKind::Narrow => Profile { w: 0.0, m: None },
        SlitKind::Rectangular => Profile { w: spec.w, m: Some(0) },
        SlitKind::CosinePower => Profile { w: spec.w, m: Some(spec.density_power()) },
    }
}

/// Closed-form P_wv of a catalog state under the sign measurement. Narrow
/// slits are taken in the sigma_slit → 0 limit.
pub fn closed_form_pwv(spec: &SlitSpec, hbar: f64) -> Result<MixedDistribution> {
    spec.validate()?;
    Ok(closed_form_profile(profile_of(spec), spec.s, hbar))
}

/// Closed form for a state/measurement pair if one exists.
pub fn closed_form_for(psi: &Wavefunction, m: &MeasurementSet) -> Result<MixedDistribution> {
    let spec = psi
        .spec()
        .ok_or_else(|| Error::Unsupported("no closed form for tabulated states".into()))?;
    if *m != MeasurementSet::heaviside_sign() {
        return Err(Error::Unsupported("closed forms exist only for the sign measurement".into()));
    }
    closed_form_pwv(spec, psi.hbar)
}
