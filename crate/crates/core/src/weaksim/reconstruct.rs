use super::finite::{fit_intercept, trial_rng, MeterSpec, DEFAULT_LADDER};
use crate::numerics::GridSpec;
use crate::physics::{MeasurementSet, Wavefunction};
use crate::transfer::{MixedDistribution, MomentumLattice};
use crate::{Error, Result};
use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

/// Lattice momenta per ℘ bin. Even, so that the alternating lattice
/// artefacts of a step measurement cancel within a bin.
pub const POINTS_PER_BIN: usize = 4;

/// Reconstructed bin probabilities of P_wv (mass per bin, not density).
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ReconstructionResult {
    pub centers: Vec<f64>,
    pub bin_width: f64,
    pub estimates: Vec<f64>,
    pub stderr: Vec<f64>,
    pub sigma_ladder: Vec<f64>,
    /// Bins with fewer than 100 outcomes on some rung.
    pub flagged: Vec<bool>,
    /// Per rung: (estimates, stderr) before extrapolation.
    pub rungs: Vec<(Vec<f64>, Vec<f64>)>,
}

impl ReconstructionResult {
    pub fn chi2_against(&self, oracle: &[f64]) -> Vec<f64> {
        self.estimates
            .iter()
            .zip(&self.stderr)
            .zip(oracle)
            .map(|((e, s), o)| ((e - o) / s).powi(2))
            .collect()
    }
}

/// Mass of a distribution in bins of width `width` centred on `centers`.
pub fn bin_masses(d: &MixedDistribution, centers: &[f64], width: f64) -> Vec<f64> {
    centers
        .iter()
        .map(|&c| {
            let (a, b) = (c - 0.5 * width, c + 0.5 * width);
            let atoms: f64 = d.atoms.iter().filter(|at| at.location >= a && at.location < b).map(|at| at.weight).sum();
            atoms + d.density_integral(a, b)
        })
        .collect()
}

/// Outcome categories: interior of bin b is 2b+1, the edge between bins
/// b−1 and b is 2b, everything outside is the last one.
struct Categories {
    of_offset: Vec<usize>,
    n_bins: usize,
}

impl Categories {
    fn new(lat: &MomentumLattice, grid: &GridSpec) -> Self {
        let n = lat.n as i64;
        let width = grid.spacing();
        let n_bins = grid.n_points;
        let lo = grid.x_min - 0.5 * width;
        let overflow = 2 * n_bins + 1;
        let of_offset = (-(n - 1)..n)
            .map(|d| {
                let t = (d as f64 * lat.dp() - lo) / width;
                let r = t.round();
                if (t - r).abs() < 1e-6 {
                    if r >= 0.0 && r <= n_bins as f64 { 2 * r as usize } else { overflow }
                } else {
                    let b = t.floor();
                    if b >= 0.0 && b < n_bins as f64 { 2 * b as usize + 1 } else { overflow }
                }
            })
            .collect();
        Categories { of_offset, n_bins }
    }

    fn count(&self) -> usize {
        2 * self.n_bins + 2
    }

    /// (category, weight) pairs contributing to bin b.
    fn members(&self, b: usize) -> [(usize, f64); 3] {
        [(2 * b, 0.5), (2 * b + 1, 1.0), (2 * b + 2, 0.5)]
    }
}

/// Σ|A|², Σ|B|², ΣRe(A*B) per category for the run at lattice index i,
/// with B = ⟨ξ,p_f|Ôπ(p_i)|ψ⟩ and A = ⟨ξ,p_f|Ô(1−π(p_i))|ψ⟩.
fn run_weights(lat: &MomentumLattice, cats: &Categories, i: usize) -> Vec<[f64; 3]> {
    let mut w = vec![[0.0; 3]; cats.count()];
    let n = lat.n;
    for xi in 0..lat.o_hat.len() {
        for f in 0..n {
            let b = lat.matrix_element(xi, i, f) * lat.psi_hat[i];
            let a = lat.opsi_hat[xi][f] - b;
            let c = cats.of_offset[f + n - 1 - i];
            w[c][0] += a.norm_sqr();
            w[c][1] += b.norm_sqr();
            w[c][2] += (a.conj() * b).re;
        }
    }
    w
}

/// Raw moments E x^k, k = 1..4, of N(c, σ²).
fn gauss_moments(c: f64, s: f64) -> [f64; 4] {
    let s2 = s * s;
    [c, c * c + s2, c.powi(3) + 3.0 * c * s2, c.powi(4) + 6.0 * c * c * s2 + 3.0 * s2 * s2]
}

/// Sum and sum of squares of `n` pointer readings drawn from the signed
/// mixture q0·N(0,σ²) + q1·N(1,σ²) + qh·N(½,σ²). Small counts are drawn one
/// by one (rejection against the positive components); large counts use
/// the bivariate normal law of (Σx, Σx²) with the exact mixture moments.
fn pointer_sums<R: Rng>(rng: &mut R, n: u64, q: [f64; 3], sigma: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 0.0);
    }
    let centres = [0.0, 1.0, 0.5];
    if n < 1000 {
        let g = |x: f64| (-0.5 * x * x / (sigma * sigma)).exp();
        let pos = [q[0].max(0.0), q[1].max(0.0), q[2].max(0.0)];
        let total: f64 = pos.iter().sum();
        let (mut s, mut ss) = (0.0, 0.0);
        let mut k = 0;
        while k < n {
            let mut pick = rng.random::<f64>() * total;
            let mut j = 2;
            for (idx, p) in pos.iter().enumerate() {
                if pick < *p {
                    j = idx;
                    break;
                }
                pick -= p;
            }
            let z: f64 = StandardNormal.sample(rng);
            let x = centres[j] + sigma * z;
            let prop: f64 = (0..3).map(|m| pos[m] * g(x - centres[m])).sum();
            let target: f64 = (0..3).map(|m| q[m] * g(x - centres[m])).sum();
            if rng.random::<f64>() * prop <= target {
                s += x;
                ss += x * x;
                k += 1;
            }
        }
        return (s, ss);
    }
    let mut m = [0.0; 4];
    for j in 0..3 {
        let gm = gauss_moments(centres[j], sigma);
        for k in 0..4 {
            m[k] += q[j] * gm[k];
        }
    }
    let nf = n as f64;
    let c11 = nf * (m[1] - m[0] * m[0]);
    let c12 = nf * (m[2] - m[0] * m[1]);
    let c22 = nf * (m[3] - m[1] * m[1]);
    let l11 = c11.max(0.0).sqrt();
    let l21 = if l11 > 0.0 { c12 / l11 } else { 0.0 };
    let l22 = (c22 - l21 * l21).max(0.0).sqrt();
    let z1: f64 = StandardNormal.sample(rng);
    let z2: f64 = StandardNormal.sample(rng);
    (nf * m[0] + l11 * z1, nf * m[1] + l21 * z1 + l22 * z2)
}

/// Per-bin (Σ estimate, Σ variance, outcome count) for one run and rung.
fn simulate_run(
    weights: &[[f64; 3]],
    cats: &Categories,
    sigma: f64,
    trials: u64,
    rng: &mut impl Rng,
) -> Vec<(f64, f64, u64)> {
    let damp = (-1.0 / (8.0 * sigma * sigma)).exp();
    let probs: Vec<f64> = weights.iter().map(|w| (w[0] + w[1] + 2.0 * damp * w[2]).max(0.0)).collect();
    let total: f64 = probs.iter().sum();
    let mut left = trials;
    let mut rest = total;
    let mut sums = vec![(0.0, 0.0, 0u64); probs.len()];
    for (c, &p) in probs.iter().enumerate() {
        if left == 0 || rest <= 0.0 {
            break;
        }
        let frac = (p / rest).clamp(0.0, 1.0);
        let k = if c + 1 == probs.len() { left } else { Binomial::new(left, frac).map(|b| b.sample(rng)).unwrap_or(0) };
        left -= k;
        rest -= p;
        if k > 0 && p > 0.0 {
            let w = weights[c];
            let q = [w[0] / p, w[1] / p, 2.0 * damp * w[2] / p];
            let (s, ss) = pointer_sums(rng, k, q, sigma);
            sums[c] = (s, ss, k);
        }
    }
    let t = trials as f64;
    (0..cats.n_bins)
        .map(|b| {
            let (mut e, mut e2, mut cnt) = (0.0, 0.0, 0u64);
            for (c, w) in cats.members(b) {
                let (s, ss, k) = sums[c];
                e += w * s / t;
                e2 += w * w * ss / t;
                cnt += k;
            }
            (e, (e2 - e * e).max(0.0) / t, cnt)
        })
        .collect()
}

/// Simulated protocol: for every lattice p_i, a weak measurement of the
/// momentum projector π(p_i) (Gaussian pointer, Kraus E_σ^{1/2}), then the
/// which-way measurement and a strong measurement of p_f. Pointer readings
/// are accumulated by ℘ = p_f − p_i and summed over ξ and p_i; the bias in
/// σ is removed by the a + b/σ² ladder fit.
pub fn reconstruct_pwv(
    psi: &Wavefunction,
    m: &MeasurementSet,
    p_grid: GridSpec,
    meter: &MeterSpec,
) -> Result<ReconstructionResult> {
    let width = p_grid.spacing();
    let lat = MomentumLattice::with_spacing(psi, m, width / POINTS_PER_BIN as f64)?;
    reconstruct_on_lattice(&lat, p_grid, meter, &DEFAULT_LADDER)
}

pub fn reconstruct_on_lattice(
    lat: &MomentumLattice,
    p_grid: GridSpec,
    meter: &MeterSpec,
    factors: &[f64],
) -> Result<ReconstructionResult> {
    MeterSpec::new(meter.sigma, meter.trials, meter.seed)?;
    if factors.len() < 2 {
        return Err(Error::Domain("σ ladder needs at least two rungs".into()));
    }
    let cats = Categories::new(lat, &p_grid);
    let nb = cats.n_bins;
    let sigmas: Vec<f64> = factors.iter().map(|f| meter.sigma * f).collect();
    const CHUNK: usize = 64;
    let runs: Vec<usize> = (0..lat.n).collect();
    let partial: Vec<Vec<Vec<(f64, f64, u64)>>> = runs
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = vec![vec![(0.0, 0.0, 0u64); nb]; sigmas.len()];
            for &i in chunk {
                let w = run_weights(lat, &cats, i);
                for (r, &s) in sigmas.iter().enumerate() {
                    let mut rng = trial_rng(meter.seed, 1000 + r as u64, i as u64);
                    for (a, v) in acc[r].iter_mut().zip(simulate_run(&w, &cats, s, meter.trials, &mut rng)) {
                        a.0 += v.0;
                        a.1 += v.1;
                        a.2 += v.2;
                    }
                }
            }
            acc
        })
        .collect();
    let mut totals = vec![vec![(0.0, 0.0, 0u64); nb]; sigmas.len()];
    for p in &partial {
        for (t, q) in totals.iter_mut().zip(p) {
            for (a, v) in t.iter_mut().zip(q) {
                a.0 += v.0;
                a.1 += v.1;
                a.2 += v.2;
            }
        }
    }
    let floor_se = sigmas.iter().fold(0.0f64, |a, s| a.max(*s)) / (meter.trials as f64).sqrt();
    let rungs: Vec<(Vec<f64>, Vec<f64>)> = totals
        .iter()
        .map(|t| t.iter().map(|(e, v, _)| (*e, v.sqrt().max(floor_se))).unzip())
        .collect();
    let u: Vec<f64> = sigmas.iter().map(|s| 1.0 / (s * s)).collect();
    let mut estimates = Vec::with_capacity(nb);
    let mut stderr = Vec::with_capacity(nb);
    let mut flagged = Vec::with_capacity(nb);
    for b in 0..nb {
        let y: Vec<f64> = rungs.iter().map(|r| r.0[b]).collect();
        let se: Vec<f64> = rungs.iter().map(|r| r.1[b]).collect();
        let (a, sa) = fit_intercept(&u, &y, &se);
        estimates.push(a);
        stderr.push(sa);
        flagged.push(totals.iter().any(|t| t[b].2 < 100));
    }
    Ok(ReconstructionResult {
        centers: p_grid.points().collect(),
        bin_width: p_grid.spacing(),
        estimates,
        stderr,
        sigma_ladder: sigmas,
        flagged,
        rungs,
    })
}

/// Deterministic lattice value of the binned P_wv (no meter noise), for
/// comparison with the reconstruction.
pub fn lattice_bin_masses(lat: &MomentumLattice, p_grid: GridSpec) -> Vec<f64> {
    let cats = Categories::new(lat, &p_grid);
    let t = lat.transfer_distribution();
    let mut cat_mass = vec![0.0; cats.count()];
    for (d, v) in t.iter().enumerate() {
        cat_mass[cats.of_offset[d]] += v;
    }
    (0..cats.n_bins).map(|b| cats.members(b).iter().map(|(c, w)| w * cat_mass[*c]).sum()).collect()
}

