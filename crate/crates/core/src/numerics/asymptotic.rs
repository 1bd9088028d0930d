use super::jet::Jet;
use super::oscillatory::TailModel;
use crate::C64;
use std::f64::consts::{FRAC_PI_2, PI};

/// Large-|p| expansion `Σ z·e^{ikp}/p^m`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Expansion {
    pub terms: Vec<PowerTerm>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerTerm {
    pub z: C64,
    pub wavenumber: f64,
    pub power: u32,
}

/// Smooth piece of a function for the edge expansion: jets of the function
/// at both interval ends.
pub struct EdgePiece {
    pub a: f64,
    pub b: f64,
    pub jet_a: Jet,
    pub jet_b: Jet,
}

impl Expansion {
    /// Expansion of (2πħ)^{-1/2} ∫ h(x) e^{-ixp/ħ} dx for h smooth on each
    /// piece and zero outside, by repeated integration by parts.
    pub fn fourier_edges(pieces: &[EdgePiece], hbar: f64, max_power: u32) -> Expansion {
        let norm = 1.0 / (2.0 * PI * hbar).sqrt();
        let mut terms = Vec::new();
        for pc in pieces {
            for (x, jet, sign) in [(pc.a, &pc.jet_a, 1.0), (pc.b, &pc.jet_b, -1.0)] {
                for r in 0..max_power as usize {
                    if r > jet.order() {
                        break;
                    }
                    let d = jet.derivative(r);
                    if d == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let z = d * sign * norm * hbar.powi(r as i32 + 1) / C64::new(0.0, 1.0).powu(r as u32 + 1);
                    terms.push(PowerTerm { z, wavenumber: -x / hbar, power: r as u32 + 1 });
                }
            }
        }
        Expansion { terms }.simplified()
    }

    /// `z / (p - p0)` expanded in powers of 1/p.
    pub fn pole(z: C64, p0: f64, max_power: u32) -> Expansion {
        let terms = (1..=max_power)
            .map(|m| PowerTerm { z: z * p0.powi(m as i32 - 1), wavenumber: 0.0, power: m })
            .filter(|t| t.z.norm() > 0.0)
            .collect();
        Expansion { terms }
    }

    pub fn conj(&self) -> Expansion {
        let terms = self
            .terms
            .iter()
            .map(|t| PowerTerm { z: t.z.conj(), wavenumber: -t.wavenumber, power: t.power })
            .collect();
        Expansion { terms }
    }

    pub fn scale(&self, a: C64) -> Expansion {
        let terms = self.terms.iter().map(|t| PowerTerm { z: t.z * a, ..*t }).collect();
        Expansion { terms }
    }

    pub fn add(&self, o: &Expansion) -> Expansion {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&o.terms);
        Expansion { terms }.simplified()
    }

    pub fn mul(&self, o: &Expansion, max_power: u32) -> Expansion {
        let mut terms = Vec::new();
        for a in &self.terms {
            for b in &o.terms {
                if a.power + b.power <= max_power {
                    terms.push(PowerTerm {
                        z: a.z * b.z,
                        wavenumber: a.wavenumber + b.wavenumber,
                        power: a.power + b.power,
                    });
                }
            }
        }
        Expansion { terms }.simplified()
    }

    /// Merge equal (wavenumber, power) pairs and drop cancelled terms.
    pub fn simplified(&self) -> Expansion {
        let mut out: Vec<(PowerTerm, f64)> = Vec::new();
        for t in &self.terms {
            let slot = out.iter_mut().find(|(o, _)| {
                o.power == t.power && (o.wavenumber - t.wavenumber).abs() <= 1e-12 * (1.0 + t.wavenumber.abs())
            });
            match slot {
                Some((o, mag)) => {
                    o.z += t.z;
                    *mag += t.z.norm();
                }
                None => out.push((*t, t.z.norm())),
            }
        }
        let mut terms: Vec<PowerTerm> = out
            .into_iter()
            .filter(|(t, mag)| t.z.norm() > 1e-10 * mag && t.z.norm() > 1e-300)
            .map(|(t, _)| t)
            .collect();
        terms.sort_by(|a, b| a.power.cmp(&b.power).then(a.wavenumber.total_cmp(&b.wavenumber)));
        Expansion { terms }
    }

    pub fn eval(&self, p: f64) -> C64 {
        self.terms
            .iter()
            .map(|t| t.z * C64::new(0.0, t.wavenumber * p).exp() / p.powi(t.power as i32))
            .sum()
    }

    /// Tails (left in u = -p, right in p) of the real part.
    pub fn real_tails(&self) -> (Vec<TailModel>, Vec<TailModel>) {
        let s = self.simplified();
        let mut left = Vec::new();
        let mut right = Vec::new();
        for t in &s.terms {
            let phase = t.z.arg() + FRAC_PI_2;
            let m = t.power as f64;
            right.push(TailModel { amplitude: t.z.norm(), wavenumber: t.wavenumber, phase, decay_power: m });
            let sign = if t.power % 2 == 0 { 1.0 } else { -1.0 };
            left.push(TailModel { amplitude: sign * t.z.norm(), wavenumber: -t.wavenumber, phase, decay_power: m });
        }
        (left, right)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{gauss_legendre, integrate_pieces};

    #[test]
    fn box_function_transform() {
        // h = 1 on [0.2, 0.7]: exact transform has only first-order terms.
        let one = Jet::constant(C64::new(1.0, 0.0), 4);
        let pcs = [EdgePiece { a: 0.2, b: 0.7, jet_a: one.clone(), jet_b: one }];
        let e = Expansion::fourier_edges(&pcs, 1.0, 6);
        for p in [3.0, -17.0, 50.0] {
            let exact = (C64::new(0.0, -0.2 * p).exp() - C64::new(0.0, -0.7 * p).exp())
                / C64::new(0.0, p)
                / (2.0 * PI).sqrt();
            assert!((e.eval(p) - exact).norm() < 1e-14);
        }
    }

    #[test]
    fn smooth_piece_matches_quadrature_at_large_p() {
        let pcs = [EdgePiece {
            a: -0.3,
            b: 0.4,
            jet_a: Jet::polynomial(&[1.0, 2.0, -3.0], -0.3, 10),
            jet_b: Jet::polynomial(&[1.0, 2.0, -3.0], 0.4, 10),
        }];
        let hbar = 0.8;
        let e = Expansion::fourier_edges(&pcs, hbar, 8);
        let r = gauss_legendre(40);
        for p in [60.0, -90.0] {
            let num: C64 = integrate_pieces(&r, &[-0.3, 0.4], 20, |x: f64| {
                C64::new(1.0 + 2.0 * x - 3.0 * x * x, 0.0) * C64::new(0.0, -x * p / hbar).exp()
            }) / (2.0 * PI * hbar).sqrt();
            assert!((e.eval(p) - num).norm() < 1e-12, "{} {}", e.eval(p), num);
        }
    }

    #[test]
    fn real_tails_reproduce_real_part() {
        let e = Expansion {
            terms: vec![
                PowerTerm { z: C64::new(0.3, -1.2), wavenumber: 0.7, power: 1 },
                PowerTerm { z: C64::new(-0.5, 0.1), wavenumber: -1.3, power: 2 },
            ],
        };
        let (l, r) = e.real_tails();
        for p in [5.0, 13.7] {
            let rv: f64 = r.iter().map(|t| t.eval(p)).sum();
            let lv: f64 = l.iter().map(|t| t.eval(p)).sum();
            assert!((rv - e.eval(p).re).abs() < 1e-14);
            assert!((lv - e.eval(-p).re).abs() < 1e-14);
        }
    }
}
