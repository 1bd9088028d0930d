use super::mixed::{Atom, DensityFn, MixedDistribution};
use crate::numerics::{AsymptoticSplit, Expansion};
use crate::physics::{
    branch_expansion, kick_reach, momentum_grid, BranchKind, MeasurementSet, Wavefunction, TAIL_POWERS,
};
use crate::{Error, Result, C64};
use std::f64::consts::PI;
use std::sync::Arc;

/// Per-branch pieces of Õ_ξ: atom amplitude and PV residue at ħk, and the
/// sampled remainder for tabulated branches.
struct BranchTransform {
    idx: usize,
    split: AsymptoticSplit,
    pole: f64,
    atom: C64,
    residue: C64,
}

fn transforms(m: &MeasurementSet, hbar: f64) -> Result<Vec<BranchTransform>> {
    let norm = 1.0 / (2.0 * PI * hbar).sqrt();
    m.branches
        .iter()
        .enumerate()
        .map(|(idx, b)| {
            let split = b.split().ok_or_else(|| {
                Error::Unsupported(format!(
                    "branch {} has no constant-at-infinity split (non-linear phase); use the characteristic-function route",
                    b.label
                ))
            })?;
            Ok(BranchTransform {
                idx,
                split,
                pole: hbar * split.wavenumber,
                atom: (split.c_minus + split.c_plus) * (0.5 / norm),
                residue: (split.c_plus - split.c_minus) * C64::new(0.0, -hbar) * norm,
            })
        })
        .collect()
}

/// Remainder Õ_rem(℘) of a tabulated branch by direct summation.
fn tabulated_remainder(b: &crate::physics::MeasurementBranch, split: &AsymptoticSplit, p: f64, hbar: f64) -> C64 {
    let BranchKind::Tabulated { samples, .. } = &b.kind else { return C64::new(0.0, 0.0) };
    let g = samples.grid;
    let dx = g.spacing();
    let mut acc = C64::new(0.0, 0.0);
    for (j, (x, v)) in g.points().zip(&samples.values).enumerate() {
        let w = if j == 0 || j + 1 == g.n_points { 0.5 } else { 1.0 };
        acc += (v - split.eval(x)) * C64::new(0.0, -x * p / hbar).exp() * w;
    }
    acc * dx / (2.0 * PI * hbar).sqrt()
}

/// P_wv(℘) = Σ_ξ Re{Õ_ξ(℘) Q̃_ξ*(℘)}, Q_ξ = O_ξ|ψ_i|².
pub fn compute_pwv(psi: &Wavefunction, m: &MeasurementSet) -> Result<MixedDistribution> {
    let s = psi.separation().unwrap_or(1.0);
    let edges: Vec<f64> = psi.pieces().iter().flat_map(|(a, b)| [*a, *b]).collect();
    m.check_complete(s, &edges)?;
    let hbar = psi.hbar;
    let parts = transforms(m, hbar)?;
    let psi = Arc::new(psi.clone());
    let m = Arc::new(m.clone());
    let q_tilde = {
        let psi = psi.clone();
        let m = m.clone();
        move |i: usize, p: f64| psi.transform_with(p, 2, |x| m.branches[i].value(x))
    };
    // dQ̃/d℘ = FT of (-ix/ħ)·Q
    let dq_tilde = {
        let psi = psi.clone();
        let m = m.clone();
        move |i: usize, p: f64| psi.transform_with(p, 2, |x| m.branches[i].value(x) * C64::new(0.0, -x / hbar))
    };

    // atoms, merged by location
    let mut atoms: Vec<Atom> = Vec::new();
    for bt in &parts {
        if bt.atom.norm() == 0.0 {
            continue;
        }
        let w = (bt.atom * q_tilde(bt.idx, bt.pole).conj()).re;
        match atoms.iter_mut().find(|a| (a.location - bt.pole).abs() < 1e-12 * (1.0 + bt.pole.abs())) {
            Some(a) => a.weight += w,
            None => atoms.push(Atom { location: bt.pole, weight: w }),
        }
    }
    atoms.retain(|a| a.weight.abs() > 1e-15);
    atoms.sort_by(|a, b| a.location.total_cmp(&b.location));

    // principal-value poles must cancel between branches
    let mut poles: Vec<f64> = Vec::new();
    for bt in parts.iter().filter(|b| b.residue.norm() > 0.0) {
        if !poles.iter().any(|p| (p - bt.pole).abs() < 1e-12 * (1.0 + p.abs())) {
            poles.push(bt.pole);
        }
    }
    for &pole in &poles {
        let r: f64 = parts
            .iter()
            .filter(|b| b.pole == pole)
            .map(|b| (b.residue * q_tilde(b.idx, pole).conj()).re)
            .sum();
        let scale: f64 = parts.iter().map(|b| b.residue.norm()).sum::<f64>() / (2.0 * PI * hbar).sqrt();
        if r.abs() > 1e-9 * scale.max(1e-300) {
            return Err(Error::Unsupported(format!(
                "P_wv has a non-integrable 1/(℘ - {pole}) pole with residue {r:.3e}"
            )));
        }
    }

    let tabulated = m.branches.iter().any(|b| matches!(b.kind, BranchKind::Tabulated { .. }));
    let max_k = parts.iter().map(|b| b.pole.abs()).fold(0.0, f64::max);
    if poles.is_empty() && !tabulated {
        return Ok(MixedDistribution::atoms_only(atoms, max_k + hbar / s));
    }

    let parts = Arc::new(parts);
    let density: DensityFn = {
        let parts = parts.clone();
        let m = m.clone();
        let poles = poles.clone();
        Arc::new(move |p: f64| {
            let mut total = 0.0;
            for &pole in &poles {
                let group = parts.iter().filter(|b| b.pole == pole && b.residue.norm() > 0.0);
                let d = p - pole;
                if d.abs() < 1e-7 * hbar / s {
                    total += group.map(|b| (b.residue * dq_tilde(b.idx, pole).conj()).re).sum::<f64>();
                } else {
                    total += group.map(|b| (b.residue * q_tilde(b.idx, p).conj()).re).sum::<f64>() / d;
                }
            }
            for b in parts.iter() {
                if matches!(m.branches[b.idx].kind, BranchKind::Tabulated { .. }) {
                    let rem = tabulated_remainder(&m.branches[b.idx], &b.split, p, hbar);
                    total += (rem * q_tilde(b.idx, p).conj()).re;
                }
            }
            total
        })
    };
    let grid = momentum_grid(&psi, kick_reach(&psi, &m) + max_k);
    let mut d = MixedDistribution::from_exact(atoms, grid, density);
    d.kinks = poles.clone();

    if !tabulated {
        let mut total = Expansion::default();
        let mut ok = true;
        for b in parts.iter().filter(|b| b.residue.norm() > 0.0) {
            match branch_expansion(&psi, &m.branches[b.idx], 2) {
                Some(e) => {
                    let pole = Expansion::pole(b.residue, b.pole, TAIL_POWERS);
                    total = total.add(&pole.mul(&e.conj(), TAIL_POWERS));
                }
                None => ok = false,
            }
        }
        if ok {
            let (l, r) = total.real_tails();
            d = d.with_tails(l, r);
        }
    }
    Ok(d)
}

/// P_cl(℘) = Σ_ξ N_ξ δ(℘ - ħk_ξ) for a pure-kick set.
pub fn classical_pwv(m: &MeasurementSet, hbar: f64) -> Result<MixedDistribution> {
    let mut atoms: Vec<Atom> = Vec::new();
    for b in &m.branches {
        let BranchKind::PhaseKick { weight, phase } = &b.kind else {
            return Err(Error::Unsupported(format!("branch {} is not a pure kick", b.label)));
        };
        if phase.iter().skip(2).any(|c| *c != 0.0) {
            return Err(Error::Unsupported(format!("branch {} has a non-linear phase", b.label)));
        }
        let loc = hbar * phase.get(1).copied().unwrap_or(0.0);
        match atoms.iter_mut().find(|a| (a.location - loc).abs() < 1e-12 * (1.0 + loc.abs())) {
            Some(a) => a.weight += weight,
            None => atoms.push(Atom { location: loc, weight: *weight }),
        }
    }
    atoms.sort_by(|a, b| a.location.total_cmp(&b.location));
    let reach = atoms.iter().map(|a| a.location.abs()).fold(0.0, f64::max) + hbar;
    Ok(MixedDistribution::atoms_only(atoms, reach))
}
