use crate::numerics::{AsymptoticSplit, Jet, SampledComplexFunction};
use crate::{Error, Result, C64};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

#[derive(Clone, Debug, PartialEq)]
pub enum BranchKind {
    /// O(x) = e^{ikx}·(left·Θ(-x) + right·Θ(x)).
    Step { left: C64, right: C64, wavenumber: f64 },
    /// O(x) = √weight·e^{iφ(x)}, φ a real polynomial `Σ phase[j] x^j`.
    PhaseKick { weight: f64, phase: Vec<f64> },
    /// Samples on a grid, continued outside by the declared split.
    Tabulated { samples: SampledComplexFunction, split: AsymptoticSplit },
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementBranch {
    pub label: String,
    pub kind: BranchKind,
}

/// O, O', O'', O''' at a point.
pub type Derivs = [C64; 4];

impl MeasurementBranch {
    pub fn step(label: &str, left: C64, right: C64, wavenumber: f64) -> Self {
        MeasurementBranch { label: label.into(), kind: BranchKind::Step { left, right, wavenumber } }
    }

    pub fn kick(label: &str, weight: f64, phase: Vec<f64>) -> Self {
        MeasurementBranch { label: label.into(), kind: BranchKind::PhaseKick { weight, phase } }
    }

    pub fn value(&self, x: f64) -> C64 {
        match &self.kind {
            BranchKind::Step { left, right, wavenumber } => {
                let c = if x < 0.0 {
                    *left
                } else if x > 0.0 {
                    *right
                } else {
                    // magnitude shared so that |O(0)|² = (|l|²+|r|²)/2
                    let mag = (0.5 * (left.norm_sqr() + right.norm_sqr())).sqrt();
                    let dir = if left.norm() >= right.norm() { *left } else { *right };
                    if dir.norm() == 0.0 {
                        C64::new(0.0, 0.0)
                    } else {
                        dir / dir.norm() * mag
                    }
                };
                c * C64::new(0.0, wavenumber * x).exp()
            }
            BranchKind::PhaseKick { weight, phase } => C64::from_polar(weight.sqrt(), poly(phase, x, 0)),
            BranchKind::Tabulated { samples, split } => {
                samples.interpolate(x).unwrap_or_else(|| split.eval(x))
            }
        }
    }

    /// Taylor jet at `x` (one-sided branch of a step when `x` is 0 is
    /// chosen by `side`); `None` for tabulated branches.
    pub fn jet(&self, x: f64, order: usize, side: f64) -> Option<Jet> {
        match &self.kind {
            BranchKind::Step { left, right, wavenumber } => {
                let c = if x < 0.0 || (x == 0.0 && side < 0.0) { *left } else { *right };
                let lin = Jet::from_coeffs(vec![C64::new(0.0, wavenumber * x), C64::new(0.0, *wavenumber)], order);
                Some(lin.exp().scale(c))
            }
            BranchKind::PhaseKick { weight, phase } => {
                let ph = Jet::polynomial(phase, x, order).scale(C64::new(0.0, 1.0));
                Some(ph.exp().scale(C64::new(weight.sqrt(), 0.0)))
            }
            BranchKind::Tabulated { .. } => None,
        }
    }

    pub fn derivs(&self, x: f64) -> Option<Derivs> {
        let j = self.jet(x, 3, 1.0)?;
        Some([j.derivative(0), j.derivative(1), j.derivative(2), j.derivative(3)])
    }

    /// Local phase gradient φ'(x) where |O| is locally constant.
    pub fn phase_gradient(&self, x: f64) -> Option<f64> {
        match &self.kind {
            BranchKind::Step { wavenumber, .. } => Some(*wavenumber),
            BranchKind::PhaseKick { phase, .. } => Some(poly(phase, x, 1)),
            BranchKind::Tabulated { .. } => None,
        }
    }

    pub fn phase_derivative(&self, x: f64, order: usize) -> Option<f64> {
        match &self.kind {
            BranchKind::Step { wavenumber, .. } => Some(if order == 1 { *wavenumber } else { 0.0 }),
            BranchKind::PhaseKick { phase, .. } => Some(poly(phase, x, order)),
            BranchKind::Tabulated { .. } => None,
        }
    }

    /// Constant-at-infinity split when the branch is a step or plane wave.
    pub fn split(&self) -> Option<AsymptoticSplit> {
        match &self.kind {
            BranchKind::Step { left, right, wavenumber } => {
                Some(AsymptoticSplit { c_minus: *left, c_plus: *right, wavenumber: *wavenumber })
            }
            BranchKind::PhaseKick { weight, phase } => {
                if phase.iter().skip(2).any(|c| *c != 0.0) {
                    return None;
                }
                let c = C64::from_polar(weight.sqrt(), phase.first().copied().unwrap_or(0.0));
                Some(AsymptoticSplit::plane_wave(c, phase.get(1).copied().unwrap_or(0.0)))
            }
            BranchKind::Tabulated { split, .. } => Some(*split),
        }
    }

    /// |O| constant on each connected region away from x = 0.
    pub fn locally_unitary(&self) -> bool {
        !matches!(self.kind, BranchKind::Tabulated { .. })
    }
}

/// j-th derivative of the polynomial `Σ c_i x^i` at x.
fn poly(c: &[f64], x: f64, j: usize) -> f64 {
    let mut acc = 0.0;
    for (i, &ci) in c.iter().enumerate().skip(j).rev() {
        let f: f64 = ((i - j + 1)..=i).map(|t| t as f64).product();
        acc = acc * x + ci * f;
    }
    acc
}

/// Family {O_ξ} obeying Σ|O_ξ|² = 1.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementSet {
    pub branches: Vec<MeasurementBranch>,
}

pub const COMPLETENESS_TOL: f64 = 1e-9;

impl MeasurementSet {
    pub fn new(branches: Vec<MeasurementBranch>) -> Self {
        MeasurementSet { branches }
    }

    pub fn identity() -> Self {
        let one = C64::new(1.0, 0.0);
        Self::new(vec![MeasurementBranch::step("identity", one, one, 0.0)])
    }

    /// O₋ = Θ(-x), O₊ = Θ(x).
    pub fn heaviside_sign() -> Self {
        let (z, one) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
        Self::new(vec![MeasurementBranch::step("-", one, z, 0.0), MeasurementBranch::step("+", z, one, 0.0)])
    }

    /// Kicks √N_ξ e^{ik_ξx}, each transferring ħk_ξ.
    pub fn pure_kicks(kicks: &[(f64, f64)]) -> Self {
        let b = kicks
            .iter()
            .enumerate()
            .map(|(i, &(n, k))| MeasurementBranch::kick(&format!("k{i}"), n, vec![0.0, k]))
            .collect();
        Self::new(b)
    }

    /// Weighted unitary set √N_ξ e^{iφ_ξ(x)}.
    pub fn phase_kicks(branches: &[(f64, Vec<f64>)]) -> Self {
        let b = branches
            .iter()
            .enumerate()
            .map(|(i, (n, p))| MeasurementBranch::kick(&format!("phi{i}"), *n, p.clone()))
            .collect();
        Self::new(b)
    }

    /// O₁ = Θ(-x) + cos α Θ(x), O₂ = sin α Θ(x).
    pub fn partial(alpha: f64) -> Self {
        let z = C64::new(0.0, 0.0);
        Self::new(vec![
            MeasurementBranch::step("1", C64::new(1.0, 0.0), C64::new(alpha.cos(), 0.0), 0.0),
            MeasurementBranch::step("2", z, C64::new(alpha.sin(), 0.0), 0.0),
        ])
    }

    /// Random K-branch step set with cross-slit coherence of modulus `v`:
    /// O_ξ = e^{iθ_ξ}(l_ξ Θ(-x) + r_ξ Θ(x)) with unit vectors l, r and
    /// ⟨r, l⟩ = v. With `complex_amplitudes` the vectors are complex.
    pub fn random_steps<R: Rng + ?Sized>(rng: &mut R, k: usize, v: f64, complex_amplitudes: bool) -> Self {
        let draw = |rng: &mut R| -> Vec<C64> {
            (0..k)
                .map(|_| {
                    let re: f64 = StandardNormal.sample(rng);
                    let im: f64 = if complex_amplitudes { StandardNormal.sample(rng) } else { 0.0 };
                    C64::new(re, im)
                })
                .collect()
        };
        let normalize = |v: Vec<C64>| {
            let n = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            v.into_iter().map(|c| c / n).collect::<Vec<_>>()
        };
        let l = normalize(draw(rng));
        let r0 = draw(rng);
        let dot: C64 = l.iter().zip(&r0).map(|(a, b)| a.conj() * b).sum();
        let perp = normalize(r0.iter().zip(&l).map(|(b, a)| b - a * dot).collect());
        let c = (1.0 - v * v).max(0.0).sqrt();
        let r: Vec<C64> = l.iter().zip(&perp).map(|(a, p)| a * v + p * c).collect();
        let branches = (0..k)
            .map(|i| {
                let th = C64::from_polar(1.0, rng.random_range(0.0..2.0 * PI));
                MeasurementBranch::step(&format!("r{i}"), l[i] * th, r[i] * th, 0.0)
            })
            .collect();
        Self::new(branches)
    }

    /// Random classical kick set with K branches, |k| ≤ k_max.
    pub fn random_pure_kicks<R: Rng + ?Sized>(rng: &mut R, k: usize, k_max: f64) -> Self {
        let w: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = w.iter().sum();
        let kicks: Vec<(f64, f64)> = w.iter().map(|wi| (wi / total, rng.random_range(-k_max..k_max))).collect();
        Self::pure_kicks(&kicks)
    }

    pub fn completeness_at(&self, x: f64) -> f64 {
        self.branches.iter().map(|b| b.value(x).norm_sqr()).sum()
    }

    /// Largest |Σ|O_ξ|² - 1| over the points.
    pub fn completeness_residual(&self, points: impl IntoIterator<Item = f64>) -> f64 {
        points.into_iter().map(|x| (self.completeness_at(x) - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Check completeness on [-8s, 8s] (2¹⁴ points), at 0 and at extra points.
    pub fn check_complete(&self, s: f64, extra: &[f64]) -> Result<()> {
        let g = crate::numerics::GridSpec::default_position(s);
        let res = self.completeness_residual(g.points().chain([0.0]).chain(extra.iter().copied()));
        if res > COMPLETENESS_TOL {
            return Err(Error::Precondition(format!("measurement set incomplete: residual {res:.3e}")));
        }
        Ok(())
    }

    pub fn locally_unitary(&self) -> bool {
        self.branches.iter().all(|b| b.locally_unitary())
    }
}

/// V = |Σ_ξ O_ξ(-s/2) O_ξ*(s/2)|.
pub fn visibility(m: &MeasurementSet, s: f64) -> f64 {
    let z: C64 = m.branches.iter().map(|b| b.value(-0.5 * s) * b.value(0.5 * s).conj()).sum();
    z.norm().min(1.0)
}

/// (ħ/s)·arccos[(V+1)/2].
pub fn min_disturbance_bound(v: f64, s: f64, hbar: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::Domain(format!("visibility {v} outside [0, 1]")));
    }
    Ok(hbar / s * (0.5 * (v + 1.0)).acos())
}

/// O_±(0) magnitude for the sign measurement.
pub const HEAVISIDE_AT_ZERO: f64 = FRAC_1_SQRT_2;

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shipped_sets_are_complete() {
        let sets = [
            MeasurementSet::identity(),
            MeasurementSet::heaviside_sign(),
            MeasurementSet::partial(0.7),
            MeasurementSet::pure_kicks(&[(0.2, 1.0), (0.5, -3.0), (0.3, 0.0)]),
            MeasurementSet::phase_kicks(&[(0.5, vec![0.0, 0.0, 0.0, 2.0]), (0.5, vec![0.3, -1.0])]),
        ];
        for m in &sets {
            assert!(m.check_complete(1.0, &[]).is_ok());
        }
        let h = MeasurementSet::heaviside_sign();
        assert!((h.branches[1].value(0.0).norm() - HEAVISIDE_AT_ZERO).abs() < 1e-15);
    }

    #[test]
    fn incomplete_set_is_reported() {
        let m = MeasurementSet::pure_kicks(&[(0.5, 1.0)]);
        assert!(matches!(m.check_complete(1.0, &[]), Err(Error::Precondition(_))));
    }

    #[test]
    fn visibility_examples() {
        assert!((visibility(&MeasurementSet::identity(), 1.0) - 1.0).abs() < 1e-15);
        assert_eq!(visibility(&MeasurementSet::heaviside_sign(), 1.0), 0.0);
        for a in [0.1, 0.9, 1.4] {
            assert!((visibility(&MeasurementSet::partial(a), 1.0) - a.cos()).abs() < 1e-15);
        }
    }

    #[test]
    fn disturbance_bound_examples() {
        assert!((min_disturbance_bound(0.0, 1.0, 1.0).unwrap() - PI / 3.0).abs() < 1e-15);
        assert_eq!(min_disturbance_bound(1.0, 1.0, 1.0).unwrap(), 0.0);
        assert!((min_disturbance_bound(0.5, 1.0, 1.0).unwrap() - 0.75f64.acos()).abs() < 1e-15);
        assert!((0.75f64.acos() - 0.7227).abs() < 1e-4);
        assert!(matches!(min_disturbance_bound(1.5, 1.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn jets_agree_with_values() {
        let b = MeasurementBranch::kick("c", 0.3, vec![0.2, -1.0, 0.5, 2.0]);
        let x = 0.37;
        let d = b.derivs(x).unwrap();
        let h = 1e-5;
        let fd = (b.value(x + h) - b.value(x - h)) / (2.0 * h);
        assert!((d[0] - b.value(x)).norm() < 1e-14);
        assert!((d[1] - fd).norm() < 1e-8);
        assert!((b.phase_gradient(x).unwrap() - (-1.0 + 1.0 * x + 6.0 * x * x)).abs() < 1e-14);
        assert!((b.phase_derivative(x, 3).unwrap() - 12.0).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn random_step_sets_have_requested_visibility(seed in 0u64..1000, k in 2usize..6, v in 0.0..1.0f64, cplx: bool) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = MeasurementSet::random_steps(&mut rng, k, v, cplx);
            prop_assert!(m.check_complete(1.0, &[]).is_ok());
            prop_assert!((visibility(&m, 1.0) - v).abs() < 1e-9);
        }

        #[test]
        fn visibility_ignores_branch_phase(theta in 0.0..6.3f64, a in 0.0..1.5f64) {
            let mut m = MeasurementSet::partial(a);
            let v0 = visibility(&m, 1.0);
            if let BranchKind::Step { left, right, .. } = &mut m.branches[0].kind {
                *left *= C64::from_polar(1.0, theta);
                *right *= C64::from_polar(1.0, theta);
            }
            prop_assert!((visibility(&m, 1.0) - v0).abs() < 1e-12);
        }
    }
}
