use super::measurement::MeasurementSet;
use super::slit::Wavefunction;
use crate::numerics::{Expansion, GridSpec, Jet};
use crate::transfer::{DensityFn, MixedDistribution};
use crate::{Result, C64};
use std::f64::consts::PI;
use std::sync::Arc;

/// Number of inverse powers kept in tail expansions.
pub(crate) const TAIL_POWERS: u32 = 24;

/// Momentum grid [-reach, reach] resolving fringes of period 2πħ/s.
pub(crate) fn momentum_grid(psi: &Wavefunction, extra_reach: f64) -> GridSpec {
    let reach = psi.momentum_reach() + extra_reach;
    let fringe = 2.0 * PI * psi.hbar / psi.separation().unwrap_or(1.0);
    let dp = 0.05 * fringe;
    let n = ((2.0 * reach / dp).ceil() as usize + 1) | 1;
    GridSpec::symmetric(reach, n).expect("positive reach")
}

/// Largest ħ|φ'| any branch applies over the support.
pub(crate) fn kick_reach(psi: &Wavefunction, m: &MeasurementSet) -> f64 {
    let mut k: f64 = 0.0;
    for (a, b) in psi.pieces() {
        for i in 0..=32 {
            let x = a + (b - a) * i as f64 / 32.0;
            for br in &m.branches {
                if let Some(g) = br.phase_gradient(x) {
                    k = k.max(g.abs());
                }
            }
        }
    }
    psi.hbar * k
}

/// Edge expansion of (2πħ)^{-1/2}∫ O ψ^{power} e^{-ixp/ħ} dx, if available.
pub(crate) fn branch_expansion(
    psi: &Wavefunction,
    branch: &crate::physics::MeasurementBranch,
    power: u32,
) -> Option<Expansion> {
    if !psi.has_edges() {
        return Some(Expansion::default());
    }
    branch.jet(0.5, 0, 1.0)?;
    let order = TAIL_POWERS as usize;
    let pieces = psi.edge_pieces(power, order, |x, o| branch.jet(x, o, 1.0).expect("jet checked"));
    Some(Expansion::fourier_edges(&pieces, psi.hbar, TAIL_POWERS))
}

/// P_i(p) = |ψ̃_i(p)|².
pub fn momentum_distribution(psi: &Wavefunction) -> MixedDistribution {
    let grid = momentum_grid(psi, 0.0);
    let w = Arc::new(psi.clone());
    let f: DensityFn = Arc::new(move |p| w.momentum_amplitude(p).norm_sqr());
    let d = MixedDistribution::from_exact(vec![], grid, f);
    if psi.has_edges() {
        let one = Jet::constant(C64::new(1.0, 0.0), TAIL_POWERS as usize);
        let pieces = psi.edge_pieces(1, TAIL_POWERS as usize, |_, _| one.clone());
        let e = Expansion::fourier_edges(&pieces, psi.hbar, TAIL_POWERS);
        let (l, r) = e.mul(&e.conj(), TAIL_POWERS).real_tails();
        return d.with_tails(l, r);
    }
    d
}

/// P_f(p) = Σ_ξ |⟨p|Ô_ξ|ψ_i⟩|².
pub fn final_momentum_distribution(psi: &Wavefunction, m: &MeasurementSet) -> Result<MixedDistribution> {
    let s = psi.separation().unwrap_or(1.0);
    let edges: Vec<f64> = psi.pieces().iter().flat_map(|(a, b)| [*a, *b]).collect();
    m.check_complete(s, &edges)?;
    let grid = momentum_grid(psi, kick_reach(psi, m));
    let w = Arc::new(psi.clone());
    let mm = Arc::new(m.clone());
    let f: DensityFn = Arc::new(move |p| {
        mm.branches.iter().map(|b| w.transform_with(p, 1, |x| b.value(x)).norm_sqr()).sum()
    });
    let d = MixedDistribution::from_exact(vec![], grid, f);
    let mut total = Expansion::default();
    for b in &m.branches {
        match branch_expansion(psi, b, 1) {
            Some(e) => total = total.add(&e.mul(&e.conj(), TAIL_POWERS)),
            None => return Ok(d),
        }
    }
    let (l, r) = total.real_tails();
    Ok(d.with_tails(l, r))
}
