use crate::physics::{MeasurementSet, SlitKind, Wavefunction};
use crate::{Error, Result, C64};
use rayon::prelude::*;
use std::f64::consts::PI;

/// Periodic position box of N points with its momentum lattice
/// p_n = nΔp, Δp = 2πħ/L. Momentum-bin projectors are the lattice
/// projectors |p_n⟩⟨p_n|.
#[derive(Clone, Debug)]
pub struct MomentumLattice {
    pub hbar: f64,
    pub box_len: f64,
    pub n: usize,
    pub labels: Vec<String>,
    /// ⟨p_n|ψ⟩, n in lattice order −N/2..N/2−1.
    pub psi_hat: Vec<C64>,
    /// Per branch, ⟨p_{n+d}|Ô|p_n⟩ indexed by d mod N.
    pub o_hat: Vec<Vec<C64>>,
    /// Per branch, ⟨p_n|Ôψ⟩.
    pub opsi_hat: Vec<Vec<C64>>,
}

fn dft(values: &[C64], x0: f64, dx: f64, dp: f64, hbar: f64) -> Vec<C64> {
    let n = values.len();
    let half = (n / 2) as i64;
    (0..n)
        .into_par_iter()
        .map(|k| {
            let p = (k as i64 - half) as f64 * dp;
            let step = C64::from_polar(1.0, -p * dx / hbar);
            let mut ph = C64::from_polar(1.0, -p * x0 / hbar);
            let mut acc = C64::new(0.0, 0.0);
            for (j, v) in values.iter().enumerate() {
                if j % 256 == 0 {
                    ph = C64::from_polar(1.0, -p * (x0 + j as f64 * dx) / hbar);
                }
                acc += v * ph;
                ph *= step;
            }
            acc
        })
        .collect()
}

impl MomentumLattice {
    /// Default lattice: box 20s (so Δp = 0.05·2πħ/s).
    pub fn for_state(psi: &Wavefunction, m: &MeasurementSet) -> Result<Self> {
        let s = psi.separation().unwrap_or(1.0);
        Self::with_spacing(psi, m, 0.05 * 2.0 * PI * psi.hbar / s)
    }

    /// Lattice with momentum spacing `dp` and a position spacing resolving
    /// the narrowest feature of the state.
    pub fn with_spacing(psi: &Wavefunction, m: &MeasurementSet, dp: f64) -> Result<Self> {
        if !(dp > 0.0) {
            return Err(Error::Domain(format!("momentum spacing must be positive, got {dp}")));
        }
        let dx = match psi.spec() {
            Some(sp) if sp.kind == SlitKind::Narrow => sp.sigma_slit / 4.0,
            Some(sp) => sp.s.min(sp.w) / 64.0,
            None => psi.pieces().iter().map(|(a, b)| b - a).fold(f64::INFINITY, f64::min) / 64.0,
        };
        let l = 2.0 * PI * psi.hbar / dp;
        let n = 2 * ((l / dx) / 2.0).ceil() as usize;
        Self::new(psi, m, l, n)
    }

    pub fn new(psi: &Wavefunction, m: &MeasurementSet, box_len: f64, n: usize) -> Result<Self> {
        if n < 4 || n % 2 != 0 || box_len <= 0.0 {
            return Err(Error::Domain(format!("lattice needs an even N ≥ 4 and L > 0 (N = {n}, L = {box_len})")));
        }
        let s = psi.separation().unwrap_or(1.0);
        let edges: Vec<f64> = psi.pieces().iter().flat_map(|(a, b)| [*a, *b]).collect();
        m.check_complete(s, &edges)?;
        let hbar = psi.hbar;
        let dx = box_len / n as f64;
        let x0 = -0.5 * box_len;
        let dp = 2.0 * PI * hbar / box_len;
        let xs: Vec<f64> = (0..n).map(|j| x0 + j as f64 * dx).collect();
        // cell averages, so that slit edges inside a cell enter with their
        // covered fraction
        let sub = 16;
        let mut amp: Vec<C64> = xs
            .iter()
            .map(|&x| {
                (0..sub).map(|k| psi.amplitude(x + dx * ((k as f64 + 0.5) / sub as f64 - 0.5))).sum::<C64>()
                    / sub as f64
            })
            .collect();
        let norm = amp.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Domain("state vanishes on the lattice".into()));
        }
        amp.iter_mut().for_each(|a| *a /= norm);
        let unit = 1.0 / (n as f64).sqrt();
        let psi_hat: Vec<C64> = dft(&amp, x0, dx, dp, hbar).into_iter().map(|v| v * unit).collect();
        let mut o_hat = Vec::new();
        let mut opsi_hat = Vec::new();
        for b in &m.branches {
            let mut o: Vec<C64> = xs.iter().map(|&x| b.value(x)).collect();
            // the box edge is shared by ±L/2
            o[0] = 0.5 * (b.value(x0) + b.value(-x0));
            // DFT in lattice order, then rotate so that index d holds offset d mod N
            let lat = dft(&o, x0, dx, dp, hbar);
            let mut by_offset = vec![C64::new(0.0, 0.0); n];
            for (k, v) in lat.into_iter().enumerate() {
                let d = (k + n - n / 2) % n;
                by_offset[d] = v / n as f64;
            }
            o_hat.push(by_offset);
            let op: Vec<C64> = o.iter().zip(&amp).map(|(a, b)| a * b).collect();
            opsi_hat.push(dft(&op, x0, dx, dp, hbar).into_iter().map(|v| v * unit).collect());
        }
        Ok(MomentumLattice {
            hbar,
            box_len,
            n,
            labels: m.branches.iter().map(|b| b.label.clone()).collect(),
            psi_hat,
            o_hat,
            opsi_hat,
        })
    }

    pub fn dp(&self) -> f64 {
        2.0 * PI * self.hbar / self.box_len
    }

    pub fn momentum(&self, idx: usize) -> f64 {
        (idx as i64 - (self.n / 2) as i64) as f64 * self.dp()
    }

    /// Lattice index of the bin containing `p`.
    pub fn index_of(&self, p: f64) -> Result<usize> {
        let k = (p / self.dp()).round() as i64 + (self.n / 2) as i64;
        if k < 0 || k >= self.n as i64 {
            return Err(Error::Range(format!("momentum {p} outside the lattice")));
        }
        Ok(k as usize)
    }

    pub fn branch_index(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::Domain(format!("no branch labelled {label}")))
    }

    /// ⟨p_f|Ô_ξ|p_i⟩.
    pub fn matrix_element(&self, xi: usize, i: usize, f: usize) -> C64 {
        self.o_hat[xi][(f + self.n - i) % self.n]
    }

    /// Re{⟨p_f|Ô|p_i⟩⟨p_i|ψ⟩⟨ψ|Ô†|p_f⟩} at lattice indices.
    pub fn joint(&self, xi: usize, i: usize, f: usize) -> f64 {
        (self.matrix_element(xi, i, f) * self.psi_hat[i] * self.opsi_hat[xi][f].conj()).re
    }

    /// Σ over i, f and ξ of the joint values with p_f − p_i = d·Δp, for
    /// d = −(N−1)..N−1 (index d + N − 1).
    pub fn transfer_distribution(&self) -> Vec<f64> {
        let n = self.n as i64;
        (-(n - 1)..n)
            .into_par_iter()
            .map(|d| {
                let mut acc = 0.0;
                for xi in 0..self.o_hat.len() {
                    for i in 0..n {
                        let f = i + d;
                        if (0..n).contains(&f) {
                            acc += self.joint(xi, i as usize, f as usize);
                        }
                    }
                }
                acc
            })
            .collect()
    }
}

/// Binned weak-valued joint probability for (p_i, ξ, p_f) on the default
/// lattice of the state.
pub fn weak_joint_probability(p_i: f64, xi: &str, p_f: f64, psi: &Wavefunction, m: &MeasurementSet) -> Result<f64> {
    let lat = MomentumLattice::for_state(psi, m)?;
    let (i, f) = (lat.index_of(p_i)?, lat.index_of(p_f)?);
    Ok(lat.joint(lat.branch_index(xi)?, i, f))
}
