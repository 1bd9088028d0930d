use crate::{Error, Result, C64};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeterSpec {
    pub sigma: f64,
    pub trials: u64,
    pub seed: u64,
}

impl MeterSpec {
    pub fn new(sigma: f64, trials: u64, seed: u64) -> Result<Self> {
        if !(sigma > 0.0) || trials == 0 {
            return Err(Error::Domain(format!("meter needs σ > 0 and trials ≥ 1 (σ = {sigma}, trials = {trials})")));
        }
        Ok(MeterSpec { sigma, trials, seed })
    }
}

/// Pre-selected state, observable, evolution and post-selected state.
#[derive(Clone, Debug)]
pub struct FiniteSystem {
    pub psi: DVector<C64>,
    pub x: DMatrix<C64>,
    pub u: DMatrix<C64>,
    pub phi: DVector<C64>,
}

const TOL: f64 = 1e-12;

impl FiniteSystem {
    pub fn new(psi: Vec<C64>, x: DMatrix<C64>, u: DMatrix<C64>, phi: Vec<C64>) -> Result<Self> {
        let d = psi.len();
        let bad = |m: String| Err(Error::Construction(m));
        if d == 0 || phi.len() != d || x.shape() != (d, d) || u.shape() != (d, d) {
            return bad(format!("inconsistent dimensions for d = {d}"));
        }
        let psi = DVector::from_vec(psi);
        let phi = DVector::from_vec(phi);
        for (name, v) in [("ψ", &psi), ("φ", &phi)] {
            if (v.norm() - 1.0).abs() > TOL {
                return bad(format!("{name} is not normalized (norm {})", v.norm()));
            }
        }
        if (&x - x.adjoint()).camax() > TOL {
            return bad("observable is not Hermitian".into());
        }
        if (u.adjoint() * &u - DMatrix::identity(d, d)).camax() > TOL {
            return bad("evolution is not unitary".into());
        }
        Ok(FiniteSystem { psi, x, u, phi })
    }

    /// Diagonal observable, identity evolution.
    pub fn diagonal(psi: Vec<C64>, eigenvalues: &[f64], phi: Vec<C64>) -> Result<Self> {
        let d = eigenvalues.len();
        let x = DMatrix::from_diagonal(&DVector::from_iterator(d, eigenvalues.iter().map(|&v| C64::new(v, 0.0))));
        Self::new(psi, x, DMatrix::identity(d, d), phi)
    }

    pub fn dimension(&self) -> usize {
        self.psi.len()
    }

    /// Distinct eigenvalues λ with ‖Π_λψ‖² and ⟨φ|UΠ_λ|ψ⟩.
    fn spectral(&self) -> Vec<(f64, f64, C64)> {
        let eig = self.x.clone().symmetric_eigen();
        let mut groups: Vec<(f64, DVector<C64>)> = Vec::new();
        for (k, &lam) in eig.eigenvalues.iter().enumerate() {
            let v = eig.eigenvectors.column(k).into_owned();
            let proj = &v * v.dotc(&self.psi);
            match groups.iter_mut().find(|(l, _)| (l - lam).abs() < 1e-9) {
                Some((_, acc)) => *acc += proj,
                None => groups.push((lam, proj)),
            }
        }
        groups
            .into_iter()
            .map(|(lam, p)| (lam, p.norm_squared(), self.phi.dotc(&(&self.u * p))))
            .collect()
    }

    fn postselection_amplitude(&self) -> Result<C64> {
        let a = self.phi.dotc(&(&self.u * &self.psi));
        if a.norm() <= TOL {
            return Err(Error::UndefinedWeakValue(a.norm()));
        }
        Ok(a)
    }
}

/// Re[⟨φ|UX|ψ⟩/⟨φ|U|ψ⟩].
pub fn weak_value(sys: &FiniteSystem) -> Result<f64> {
    let den = sys.postselection_amplitude()?;
    let num = sys.phi.dotc(&(&sys.u * (&sys.x * &sys.psi)));
    Ok((num / den).re)
}

/// Post-selected mean of a projective measurement of X.
pub fn strong_value(sys: &FiniteSystem) -> Result<f64> {
    let spec = sys.spectral();
    let den: f64 = spec.iter().map(|(_, _, a)| a.norm_sqr()).sum();
    if den <= TOL {
        return Err(Error::UndefinedWeakValue(den));
    }
    Ok(spec.iter().map(|(l, _, a)| l * a.norm_sqr()).sum::<f64>() / den)
}

/// Exact post-selected meter mean for Gaussian imprecision σ:
/// Σ a_λ a_μ* e^{−(λ−μ)²/8σ²}(λ+μ)/2 / Σ a_λ a_μ* e^{−(λ−μ)²/8σ²}.
pub fn exact_postselected_mean(sys: &FiniteSystem, sigma: f64) -> Result<f64> {
    let spec = sys.spectral();
    let (mut num, mut den) = (0.0, 0.0);
    for (l, _, a) in &spec {
        for (m, _, b) in &spec {
            let w = (a * b.conj()).re * (-(l - m).powi(2) / (8.0 * sigma * sigma)).exp();
            num += w * 0.5 * (l + m);
            den += w;
        }
    }
    if den <= TOL {
        return Err(Error::UndefinedWeakValue(den));
    }
    Ok(num / den)
}

/// Per-trial generator keyed by (seed, tag, index).
pub(crate) fn trial_rng(seed: u64, tag: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(index);
    rng
}

const CHUNK: u64 = 4096;

/// Monte-Carlo post-selected meter mean at a single σ: draw the pointer x
/// from ⟨ψ|E_σ(x)|ψ⟩, apply E_σ^{1/2}(x), evolve, post-select on φ, and
/// average the accepted x. Returns (estimate, stderr).
pub fn simulate_postselected_mean(sys: &FiniteSystem, meter: &MeterSpec) -> Result<(f64, f64)> {
    simulate_tagged(sys, meter, 0)
}

fn simulate_tagged(sys: &FiniteSystem, meter: &MeterSpec, tag: u64) -> Result<(f64, f64)> {
    MeterSpec::new(meter.sigma, meter.trials, meter.seed)?;
    sys.postselection_amplitude()?;
    let spec = sys.spectral();
    let sigma = meter.sigma;
    let gauss = |x: f64| (-0.5 * x * x / (sigma * sigma)).exp();
    let trial = |t: u64| -> Option<f64> {
        let mut rng = trial_rng(meter.seed, tag, t);
        let mut pick: f64 = rng.random();
        let mut lam = spec[spec.len() - 1].0;
        for (l, p, _) in &spec {
            if pick < *p {
                lam = *l;
                break;
            }
            pick -= p;
        }
        let z: f64 = StandardNormal.sample(&mut rng);
        let x = lam + sigma * z;
        let mut amp = C64::new(0.0, 0.0);
        let mut px = 0.0;
        for (l, p, a) in &spec {
            let g = gauss(x - l);
            amp += a * g.sqrt();
            px += g * p;
        }
        let u: f64 = rng.random();
        (u * px < amp.norm_sqr()).then_some(x)
    };
    let chunks = meter.trials.div_ceil(CHUNK);
    let partial: Vec<(u64, f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let (mut n, mut s, mut ss) = (0u64, 0.0, 0.0);
            for t in c * CHUNK..((c + 1) * CHUNK).min(meter.trials) {
                if let Some(x) = trial(t) {
                    n += 1;
                    s += x;
                    ss += x * x;
                }
            }
            (n, s, ss)
        })
        .collect();
    let (n, s, ss) = partial.iter().fold((0u64, 0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    if n < 100 {
        return Err(Error::InsufficientStatistics(format!("{n} accepted trials (need ≥ 100)")));
    }
    let nf = n as f64;
    let mean = s / nf;
    let var = (ss / nf - mean * mean) * nf / (nf - 1.0);
    Ok((mean, (var / nf).sqrt()))
}

/// Ladder estimate: per-rung results and the fit a + b/σ².
#[derive(Clone, Debug, Serialize)]
pub struct LadderEstimate {
    pub sigmas: Vec<f64>,
    pub rungs: Vec<(f64, f64)>,
    pub estimate: f64,
    pub stderr: f64,
}

pub const DEFAULT_LADDER: [f64; 3] = [1.0, 1.5, 2.0];

/// Weighted least-squares fit y = a + b u; returns (a, stderr of a).
pub(crate) fn fit_intercept(u: &[f64], y: &[f64], se: &[f64]) -> (f64, f64) {
    let (mut s0, mut s1, mut s2, mut t0, mut t1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((&ui, &yi), &ei) in u.iter().zip(y).zip(se) {
        let w = 1.0 / (ei * ei);
        s0 += w;
        s1 += w * ui;
        s2 += w * ui * ui;
        t0 += w * yi;
        t1 += w * ui * yi;
    }
    let det = s0 * s2 - s1 * s1;
    ((s2 * t0 - s1 * t1) / det, (s2 / det).sqrt())
}

/// Runs the meter at σ·factor for each ladder factor (independent
/// streams) and extrapolates to σ → ∞.
pub fn simulate_ladder(sys: &FiniteSystem, meter: &MeterSpec, factors: &[f64]) -> Result<LadderEstimate> {
    if factors.len() < 2 {
        return Err(Error::Domain("σ ladder needs at least two rungs".into()));
    }
    let sigmas: Vec<f64> = factors.iter().map(|f| meter.sigma * f).collect();
    let rungs = sigmas
        .iter()
        .enumerate()
        .map(|(r, &s)| simulate_tagged(sys, &MeterSpec { sigma: s, ..*meter }, r as u64 + 1))
        .collect::<Result<Vec<_>>>()?;
    let u: Vec<f64> = sigmas.iter().map(|s| 1.0 / (s * s)).collect();
    let (y, se): (Vec<f64>, Vec<f64>) = rungs.iter().copied().unzip();
    let (estimate, stderr) = fit_intercept(&u, &y, &se);
    Ok(LadderEstimate { sigmas, rungs, estimate, stderr })
}

/// The two-level configuration with weak value −7.
pub fn anomalous_two_level() -> FiniteSystem {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    FiniteSystem::diagonal(
        vec![C64::new(h, 0.0), C64::new(h, 0.0)],
        &[1.0, -1.0],
        vec![C64::new(0.6, 0.0), C64::new(-0.8, 0.0)],
    )
    .expect("valid configuration")
}
