//! First three moments of the momentum transfer under five formalisms:
//! weak values, the change of the momentum distribution (ΔP), the
//! Heisenberg-picture operator p_f − p_i, and the local Wigner and Bohm
//! transfer distributions.

use crate::numerics::{GridSpec, SampledRealFunction};
use crate::physics::{BranchKind, Derivs, MeasurementBranch, MeasurementSet, SlitKind, Wavefunction};
use crate::transfer::{Atom, MixedDistribution};
use crate::{Error, Result, C64};
use serde::Serialize;

/// Twin (or multi) delta-slit approximation ψ = Σ_k ψ_k ε(x − x_k), with
/// ε² a Gaussian of width `sigma`.
#[derive(Clone, Debug, PartialEq)]
pub struct DeltaSlitEnsemble {
    /// (x_k, |ψ_k|²)
    pub points: Vec<(f64, f64)>,
    pub sigma: f64,
    pub hbar: f64,
}

impl DeltaSlitEnsemble {
    pub fn new(points: Vec<(f64, f64)>, sigma: f64) -> Result<Self> {
        let total: f64 = points.iter().map(|p| p.1).sum();
        if points.is_empty() || (total - 1.0).abs() > 1e-12 {
            return Err(Error::Construction(format!("slit weights sum to {total}, not 1")));
        }
        if points.iter().any(|p| !(p.1 >= 0.0) || !p.0.is_finite()) {
            return Err(Error::Construction("slit weights must be non-negative".into()));
        }
        if !(sigma > 0.0) {
            return Err(Error::Construction(format!("sigma must be positive, got {sigma}")));
        }
        Ok(DeltaSlitEnsemble { points, sigma, hbar: 1.0 })
    }

    /// Equal-weight slits at ±s/2.
    pub fn twin(s: f64, sigma: f64) -> Result<Self> {
        Self::new(vec![(-0.5 * s, 0.5), (0.5 * s, 0.5)], sigma)
    }

    pub fn with_hbar(mut self, hbar: f64) -> Self {
        self.hbar = hbar;
        self
    }
}

/// Initial state fed to the moment formulas.
#[derive(Clone, Copy, Debug)]
pub enum Initial<'a> {
    State(&'a Wavefunction),
    Ensemble(&'a DeltaSlitEnsemble),
}

impl<'a> From<&'a Wavefunction> for Initial<'a> {
    fn from(psi: &'a Wavefunction) -> Self {
        Initial::State(psi)
    }
}

impl<'a> From<&'a DeltaSlitEnsemble> for Initial<'a> {
    fn from(e: &'a DeltaSlitEnsemble) -> Self {
        Initial::Ensemble(e)
    }
}

impl Initial<'_> {
    fn hbar(&self) -> f64 {
        match self {
            Initial::State(psi) => psi.hbar,
            Initial::Ensemble(e) => e.hbar,
        }
    }

    /// ∫|ψ|² f dx.
    fn average(&self, f: impl Fn(f64) -> C64) -> C64 {
        match self {
            Initial::State(psi) => psi.expect(&[0.0], f),
            Initial::Ensemble(e) => e.points.iter().map(|&(x, w)| f(x) * w).sum(),
        }
    }

    /// Regularization width of the slits, where there is one.
    fn slit_sigma(&self) -> Option<f64> {
        match self {
            Initial::Ensemble(e) => Some(e.sigma),
            Initial::State(psi) => psi.spec().filter(|s| s.kind == SlitKind::Narrow).map(|s| s.sigma_slit),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Formalism {
    Wv,
    DeltaP,
    Heisenberg,
    WignerLocal,
    BohmLocal,
}

impl Formalism {
    pub const ALL: [Formalism; 5] =
        [Formalism::Wv, Formalism::DeltaP, Formalism::Heisenberg, Formalism::WignerLocal, Formalism::BohmLocal];
}

fn check_order(n: u32) -> Result<()> {
    if (1..=3).contains(&n) {
        Ok(())
    } else {
        Err(Error::Domain(format!("moment order {n} not in 1..=3")))
    }
}

fn require_jets(m: &MeasurementSet) -> Result<()> {
    match m.branches.iter().find(|b| matches!(b.kind, BranchKind::Tabulated { .. })) {
        Some(b) => Err(Error::Precondition(format!("branch '{}' has no derivatives", b.label))),
        None => Ok(()),
    }
}

fn derivs(b: &MeasurementBranch, x: f64) -> Derivs {
    let j = b.jet(x, 3, if x < 0.0 { -1.0 } else { 1.0 }).expect("checked by require_jets");
    [j.derivative(0), j.derivative(1), j.derivative(2), j.derivative(3)]
}

fn binom(n: u32, k: u32) -> f64 {
    (1..=k).map(|j| (n + 1 - j) as f64 / j as f64).product()
}

/// (−iħ)ⁿ as a complex factor.
fn minus_i_hbar_pow(hbar: f64, n: u32) -> C64 {
    C64::new(0.0, -hbar).powu(n)
}

/// Σ_ξ ⟨ g(O_ξ jets) ⟩ over the initial density.
fn branch_average(input: &Initial, m: &MeasurementSet, g: impl Fn(&Derivs) -> C64) -> C64 {
    input.average(|x| m.branches.iter().map(|b| g(&derivs(b, x))).sum())
}

/// nth derivative at q = 0 of ½[O(x)O*(x−q) + O*(x)O(x+q)].
fn wv_kernel(n: u32, d: &Derivs) -> C64 {
    let k = n as usize;
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    0.5 * (d[0] * d[k].conj() * sign + d[0].conj() * d[k])
}

/// nth derivative at q = 0 of O*(x−q/2)O(x+q/2).
fn wigner_kernel(n: u32, d: &Derivs) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..=n {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        acc += d[j as usize].conj() * d[(n - j) as usize] * (sign * binom(n, j));
    }
    acc / 2f64.powi(n as i32)
}

/// Local phase gradient φ' = Im(O*O')/|O|² (zero where O vanishes).
fn phase_gradient(d: &Derivs) -> f64 {
    let m2 = d[0].norm_sqr();
    if m2 > 0.0 {
        (d[0].conj() * d[1]).im / m2
    } else {
        0.0
    }
}

/// nth moment of P_wv.
pub fn moments_wv<'a>(input: impl Into<Initial<'a>>, m: &MeasurementSet, n: u32) -> Result<f64> {
    let input = input.into();
    check_order(n)?;
    require_jets(m)?;
    let avg = branch_average(&input, m, |d| wv_kernel(n, d));
    Ok((minus_i_hbar_pow(input.hbar(), n) * avg).re)
}

/// ⟨p_fⁿ⟩ − ⟨p_iⁿ⟩ for a delta-slit ensemble, split as
/// `finite + inv_sigma2/σ²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DeltaPMoment {
    pub value: f64,
    pub finite: f64,
    /// Coefficient of 1/σ²; nonzero marks a moment that diverges as σ → 0.
    pub inv_sigma2: f64,
    pub divergent: bool,
}

impl DeltaPMoment {
    fn regular(value: f64) -> Self {
        DeltaPMoment { value, finite: value, inv_sigma2: 0.0, divergent: false }
    }
}

/// Change of the nth moment of the momentum distribution.
pub fn moments_delta_p<'a>(input: impl Into<Initial<'a>>, m: &MeasurementSet, n: u32) -> Result<DeltaPMoment> {
    let input = input.into();
    check_order(n)?;
    require_jets(m)?;
    let hbar = input.hbar();
    match input {
        Initial::Ensemble(e) => {
            let avg = |g: &dyn Fn(&Derivs) -> C64| branch_average(&input, m, g).re;
            Ok(match n {
                1 => DeltaPMoment::regular(hbar * avg(&|d| (d[0].conj() * d[1]) * C64::new(0.0, -1.0))),
                2 => DeltaPMoment::regular(hbar * hbar * avg(&|d| C64::new(d[1].norm_sqr(), 0.0))),
                _ => {
                    let i3 = C64::new(0.0, hbar.powi(3));
                    let finite = avg(&|d| i3 * (0.25 * d[0].conj() * d[3] + 0.75 * d[2].conj() * d[1]));
                    let inv_sigma2 = avg(&|d| i3 * (-0.75 * d[0].conj() * d[1]));
                    DeltaPMoment {
                        value: finite + inv_sigma2 / (e.sigma * e.sigma),
                        finite,
                        inv_sigma2,
                        divergent: inv_sigma2.abs() > 1e-12 * hbar.powi(3) * (1.0 + finite.abs()),
                    }
                }
            })
        }
        Initial::State(psi) => {
            // ψ^(n-1) must be continuous for ⟨pⁿ⟩ to stay finite
            if n >= 2 && psi.has_edges() {
                let spec = psi.spec().expect("edged states come from a slit spec");
                let smooth_to = if spec.kind == SlitKind::CosinePower { spec.n } else { 0 };
                if smooth_to + 1 < n {
                    return Err(Error::Unsupported(format!(
                        "⟨p^{n}⟩ diverges for this slit profile; use a smoother state"
                    )));
                }
            }
            if psi.jet(psi.pieces()[0].0 + 1e-9, 0).is_none() {
                return Err(Error::Precondition("state has no derivatives".into()));
            }
            let f = |x: f64| -> C64 {
                let Some(pj) = psi.jet(x, 2) else { return C64::new(0.0, 0.0) };
                let p: [C64; 3] = [pj.derivative(0), pj.derivative(1), pj.derivative(2)];
                let mut acc = C64::new(0.0, 0.0);
                for b in &m.branches {
                    let d = derivs(b, x);
                    for j in 1..=n {
                        acc += p[0].conj() * p[(n - j) as usize] * d[0].conj() * d[j as usize] * binom(n, j);
                    }
                }
                acc
            };
            let value = (minus_i_hbar_pow(hbar, n) * psi.integrate_support(&[0.0], 8, f)).re;
            if n == 3 {
                if let Some(sg) = input.slit_sigma() {
                    let inv_sigma2 = 0.75 * hbar * hbar * moments_wv(input, m, 1)?;
                    return Ok(DeltaPMoment {
                        value,
                        finite: value - inv_sigma2 / (sg * sg),
                        inv_sigma2,
                        divergent: inv_sigma2 != 0.0,
                    });
                }
            }
            Ok(DeltaPMoment::regular(value))
        }
    }
}

/// ⟨(p_f − p_i)ⁿ⟩ in the Heisenberg picture. The third moment is taken
/// with the dilation that acts as a controlled phase on the meter, which
/// exists when every |O_ξ| is locally constant.
pub fn moments_heisenberg<'a>(input: impl Into<Initial<'a>>, m: &MeasurementSet, n: u32) -> Result<f64> {
    let input = input.into();
    check_order(n)?;
    require_jets(m)?;
    if n < 3 {
        return moments_wv(input, m, n);
    }
    if !m.locally_unitary() {
        return Err(Error::Unsupported("third Heisenberg moment needs a locally unitary set".into()));
    }
    let hbar = input.hbar();
    let avg = branch_average(&input, m, |d| C64::new(d[0].norm_sqr() * (hbar * phase_gradient(d)).powi(3), 0.0));
    Ok(avg.re)
}

/// nth moment of the local Wigner transfer distribution, from its
/// characteristic function with half lags O*(x−q/2)O(x+q/2).
pub fn moments_wigner_local<'a>(input: impl Into<Initial<'a>>, m: &MeasurementSet, n: u32) -> Result<f64> {
    let input = input.into();
    check_order(n)?;
    require_jets(m)?;
    let avg = branch_average(&input, m, |d| wigner_kernel(n, d));
    Ok((minus_i_hbar_pow(input.hbar(), n) * avg).re)
}

/// (N_ξ, branch) for a weighted unitary set O_ξ = √N_ξ e^{iφ_ξ}.
fn unitary_weights(m: &MeasurementSet) -> Result<Vec<(f64, &MeasurementBranch)>> {
    m.branches
        .iter()
        .map(|b| match &b.kind {
            BranchKind::PhaseKick { weight, .. } => Ok((*weight, b)),
            BranchKind::Step { left, right, .. } if (left.norm_sqr() - right.norm_sqr()).abs() <= 1e-12 => {
                Ok((left.norm_sqr(), b))
            }
            _ => Err(Error::Unsupported(format!("branch '{}' is not of the form √N e^(iφ)", b.label))),
        })
        .collect()
}

/// nth moment of the local Bohmian transfer Σ_ξ N_ξ∫|ψ|²δ(℘ − ħφ_ξ').
pub fn moments_bohm_local<'a>(input: impl Into<Initial<'a>>, m: &MeasurementSet, n: u32) -> Result<f64> {
    let input = input.into();
    check_order(n)?;
    let branches = unitary_weights(m)?;
    let hbar = input.hbar();
    let avg = input.average(|x| {
        let s: f64 = branches
            .iter()
            .map(|(w, b)| w * (hbar * b.phase_derivative(x, 1).expect("unitary branch")).powi(n as i32))
            .sum();
        C64::new(s, 0.0)
    });
    Ok(avg.re)
}

const BOHM_BINS: usize = 400;
const BOHM_SAMPLES: usize = 40_000;

/// Local Bohmian transfer distribution. Constant gradients give atoms;
/// varying ones are pushed forward onto `BOHM_BINS` bins.
pub fn bohm_local_distribution<'a>(input: impl Into<Initial<'a>>, m: &MeasurementSet) -> Result<MixedDistribution> {
    let input = input.into();
    let branches = unitary_weights(m)?;
    let hbar = input.hbar();
    // (℘, mass) samples of the pushforward
    let mut samples: Vec<(f64, f64)> = Vec::new();
    match input {
        Initial::Ensemble(e) => {
            for &(x, w) in &e.points {
                for (nw, b) in &branches {
                    samples.push((hbar * b.phase_derivative(x, 1).expect("unitary branch"), w * nw));
                }
            }
        }
        Initial::State(psi) => {
            let pieces = psi.pieces();
            let per_piece = BOHM_SAMPLES / pieces.len();
            for (a, bnd) in pieces {
                let h = (bnd - a) / per_piece as f64;
                for i in 0..per_piece {
                    let x = a + (i as f64 + 0.5) * h;
                    let mass = psi.density(x) * h;
                    for (nw, b) in &branches {
                        samples.push((hbar * b.phase_derivative(x, 1).expect("unitary branch"), mass * nw));
                    }
                }
            }
        }
    }
    let constant = |b: &MeasurementBranch| match &b.kind {
        BranchKind::PhaseKick { phase, .. } => phase.iter().skip(2).all(|c| *c == 0.0),
        _ => true,
    };
    let total: f64 = samples.iter().map(|s| s.1).sum();
    let mut atoms: Vec<Atom> = Vec::new();
    let mut continuous: Vec<(f64, f64)> = Vec::new();
    if matches!(input, Initial::Ensemble(_)) || branches.iter().all(|(_, b)| constant(b)) {
        for (p, w) in samples {
            match atoms.iter_mut().find(|a| (a.location - p).abs() <= 1e-12 * (1.0 + p.abs())) {
                Some(a) => a.weight += w,
                None => atoms.push(Atom { location: p, weight: w }),
            }
        }
    } else {
        continuous = samples;
    }
    atoms.retain(|a| a.weight != 0.0);
    atoms.sort_by(|a, b| a.location.total_cmp(&b.location));
    let renorm = |w: f64| if total > 0.0 { w / total } else { w };
    for a in &mut atoms {
        a.weight = renorm(a.weight);
    }
    if continuous.is_empty() {
        let half = atoms.iter().map(|a| a.location.abs()).fold(hbar, f64::max) * 2.0;
        return Ok(MixedDistribution::atoms_only(atoms, half));
    }
    let lo = continuous.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let hi = continuous.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    let span = (hi - lo).max(1e-9 * hbar);
    let width = span / BOHM_BINS as f64;
    let mut mass = vec![0.0; BOHM_BINS];
    for (p, w) in continuous {
        let i = (((p - lo) / width) as usize).min(BOHM_BINS - 1);
        mass[i] += renorm(w);
    }
    let grid = GridSpec::new(lo + 0.5 * width, hi - 0.5 * width, BOHM_BINS)?;
    let values = mass.iter().map(|w| w / width).collect();
    Ok(MixedDistribution::new(atoms, SampledRealFunction { grid, values }))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentRow {
    pub formalism: Formalism,
    pub m1: Option<f64>,
    pub m2: Option<f64>,
    pub m3: Option<f64>,
    pub divergent: bool,
    /// Coefficient of 1/σ² in the third moment.
    pub sigma_dependence: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentTable {
    pub rows: Vec<MomentRow>,
    /// Points where the measurement is not slowly varying on the slit scale.
    pub warnings: Vec<String>,
}

impl MomentTable {
    pub fn row(&self, f: Formalism) -> &MomentRow {
        self.rows.iter().find(|r| r.formalism == f).expect("every formalism has a row")
    }
}

/// Flags slit points where |φ'''|σ² is not small against |φ'|.
fn slow_variation_warnings(input: &Initial, m: &MeasurementSet) -> Vec<String> {
    let Some(sigma) = input.slit_sigma() else { return Vec::new() };
    let xs: Vec<f64> = match input {
        Initial::Ensemble(e) => e.points.iter().map(|p| p.0).collect(),
        Initial::State(psi) => psi.pieces().iter().map(|(a, b)| 0.5 * (a + b)).collect(),
    };
    let mut out = Vec::new();
    for b in &m.branches {
        for &x in &xs {
            let (Some(d1), Some(d3)) = (b.phase_derivative(x, 1), b.phase_derivative(x, 3)) else { continue };
            if d3.abs() * sigma * sigma > 1e-2 * d1.abs() {
                out.push(format!("branch '{}' at x = {x}: |φ'''|σ² = {:e} vs |φ'| = {:e}", b.label, d3.abs() * sigma * sigma, d1.abs()));
            }
        }
    }
    out
}

/// First three moments under every formalism.
pub fn compare_report<'a>(input: impl Into<Initial<'a>>, m: &MeasurementSet) -> Result<MomentTable> {
    let input = input.into();
    require_jets(m)?;
    let mut rows = Vec::new();
    for f in Formalism::ALL {
        let mut row = MomentRow { formalism: f, m1: None, m2: None, m3: None, divergent: false, sigma_dependence: 0.0 };
        let mut vals = [None; 3];
        for n in 1..=3u32 {
            let v = match f {
                Formalism::Wv => moments_wv(input, m, n),
                Formalism::DeltaP => moments_delta_p(input, m, n).map(|r| {
                    if n == 3 {
                        row.divergent = r.divergent;
                        row.sigma_dependence = r.inv_sigma2;
                    }
                    r.value
                }),
                Formalism::Heisenberg => moments_heisenberg(input, m, n),
                Formalism::WignerLocal => moments_wigner_local(input, m, n),
                Formalism::BohmLocal => moments_bohm_local(input, m, n),
            };
            vals[n as usize - 1] = v.ok();
        }
        [row.m1, row.m2, row.m3] = vals;
        rows.push(row);
    }
    Ok(MomentTable { rows, warnings: slow_variation_warnings(&input, m) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::SlitSpec;

    fn cubic(beta: f64) -> MeasurementSet {
        MeasurementSet::phase_kicks(&[(1.0, vec![0.0, 0.0, 0.0, beta])])
    }

    #[test]
    fn linear_phase_gives_kick_powers() {
        let e = DeltaSlitEnsemble::twin(1.0, 1e-3).unwrap();
        let k = 2.5;
        let m = MeasurementSet::phase_kicks(&[(1.0, vec![0.0, k])]);
        for n in 1..=3 {
            let want = k.powi(n as i32);
            assert!((moments_wv(&e, &m, n).unwrap() - want).abs() < 1e-12);
            assert!((moments_heisenberg(&e, &m, n).unwrap() - want).abs() < 1e-12);
            assert!((moments_wigner_local(&e, &m, n).unwrap() - want).abs() < 1e-12);
            assert!((moments_bohm_local(&e, &m, n).unwrap() - want).abs() < 1e-12);
        }
        let dp = moments_delta_p(&e, &m, 3).unwrap();
        assert!((dp.finite - k.powi(3)).abs() < 1e-12);
        assert!((dp.inv_sigma2 - 0.75 * k).abs() < 1e-12);
        assert!(dp.divergent);
    }

    #[test]
    fn cubic_phase_third_moments() {
        let (beta, s) = (0.7, 1.0);
        let e = DeltaSlitEnsemble::twin(s, 1e-3).unwrap();
        let m = cubic(beta);
        let g = 3.0 * beta * s * s / 4.0;
        assert!((moments_wv(&e, &m, 3).unwrap() - (g.powi(3) - 6.0 * beta)).abs() < 1e-12);
        assert!((moments_wigner_local(&e, &m, 3).unwrap() - (g.powi(3) - 1.5 * beta)).abs() < 1e-12);
        assert!((moments_heisenberg(&e, &m, 3).unwrap() - g.powi(3)).abs() < 1e-12);
        assert!((moments_bohm_local(&e, &m, 3).unwrap() - g.powi(3)).abs() < 1e-12);
        let dp = moments_delta_p(&e, &m, 3).unwrap();
        assert!((dp.finite - (g.powi(3) - 1.5 * beta)).abs() < 1e-12);
        assert!((dp.inv_sigma2 - 0.75 * g).abs() < 1e-12);
    }

    #[test]
    fn flat_measurement_moves_nothing() {
        let psi = Wavefunction::new(&SlitSpec::cosine_power(1.0, 0.3, 3), 1.0).unwrap();
        let m = MeasurementSet::heaviside_sign();
        let t = compare_report(&psi, &m).unwrap();
        for r in &t.rows {
            if r.formalism == Formalism::BohmLocal {
                continue;
            }
            for v in [r.m1, r.m2, r.m3] {
                assert!(v.unwrap().abs() < 1e-12, "{:?}", r);
            }
        }
    }

    #[test]
    fn bohm_pushforward_atoms() {
        let beta = 0.4;
        let e = DeltaSlitEnsemble::twin(1.0, 1e-3).unwrap();
        let d = bohm_local_distribution(&e, &cubic(beta)).unwrap();
        assert_eq!(d.atoms.len(), 1);
        assert!((d.atoms[0].location - 0.75 * beta).abs() < 1e-12);
        assert!((d.atoms[0].weight - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bohm_rejects_localizing_sets() {
        let e = DeltaSlitEnsemble::twin(1.0, 1e-3).unwrap();
        let err = bohm_local_distribution(&e, &MeasurementSet::heaviside_sign()).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }

    #[test]
    fn ensemble_weights_validated() {
        assert!(DeltaSlitEnsemble::new(vec![(0.5, 0.6)], 1e-3).is_err());
        assert!(DeltaSlitEnsemble::new(vec![(0.5, 1.0)], 0.0).is_err());
    }
}
