use super::mixed::{Atom, DensityFn, MixedDistribution};
use super::tailfit::fit_tail;
use crate::numerics::GridSpec;
use crate::physics::{MeasurementSet, SlitKind, Wavefunction};
use crate::{Error, Result, C64};
use rayon::prelude::*;
use std::f64::consts::PI;
use std::sync::Arc;

/// Φ(q) sampled on a lag grid.
#[derive(Clone, Debug)]
pub struct CharFunction {
    pub q_grid: GridSpec,
    pub values: Vec<C64>,
    /// Cesàro mean of Re Φ over the outer third of the grid.
    pub asymptotic_mean: f64,
    pub hbar: f64,
}

/// Symmetric lag grid reaching four times the support extent, fine enough
/// to resolve the narrowest feature of |ψ|².
pub fn default_q_grid(psi: &Wavefunction) -> GridSpec {
    let extent = psi.pieces().iter().fold(0.0f64, |m, (a, b)| m.max(a.abs()).max(b.abs()));
    let dq = match psi.spec() {
        Some(s) if s.kind == SlitKind::Narrow => s.sigma_slit / 5.0,
        Some(s) => s.s.min(s.w) / 200.0,
        None => psi.pieces().iter().map(|(a, b)| b - a).fold(f64::INFINITY, f64::min) / 400.0,
    };
    let half = 4.0 * extent;
    let n = 2 * (half / dq).ceil() as usize + 1;
    GridSpec::symmetric(half, n).expect("positive extent")
}

fn panels_for(psi: &Wavefunction) -> usize {
    match psi.spec() {
        Some(s) if s.kind == SlitKind::Narrow => 6,
        Some(_) => 4,
        None => 16,
    }
}

/// Φ(q) = Σ_ξ ∫|ψ|² ½[O_ξ(x)O_ξ*(x−q) + O_ξ*(x)O_ξ(x+q)] dx.
pub fn char_function(psi: &Wavefunction, m: &MeasurementSet, q_grid: GridSpec) -> Result<CharFunction> {
    let s = psi.separation().unwrap_or(1.0);
    let edges: Vec<f64> = psi.pieces().iter().flat_map(|(a, b)| [*a, *b]).collect();
    m.check_complete(s, &edges)?;
    let panels = panels_for(psi);
    let qs: Vec<f64> = q_grid.points().collect();
    let values: Vec<C64> = qs
        .par_iter()
        .map(|&q| {
            let breaks = [0.0, q, -q];
            psi.integrate_support(&breaks, panels, |x| {
                let d = psi.density(x);
                let mut acc = C64::new(0.0, 0.0);
                for b in &m.branches {
                    let o = b.value(x);
                    acc += o * b.value(x - q).conj() + o.conj() * b.value(x + q);
                }
                acc * (0.5 * d)
            })
        })
        .collect();
    let asymptotic_mean = cesaro(&qs, &values, 1.0 / 3.0);
    Ok(CharFunction { q_grid, values, asymptotic_mean, hbar: psi.hbar })
}

/// Mean of Re Φ over lags with |q| ≥ (1 − frac)·q_max.
fn cesaro(qs: &[f64], values: &[C64], frac: f64) -> f64 {
    let qmax = qs.iter().fold(0.0f64, |m, q| m.max(q.abs()));
    let cut = (1.0 - frac) * qmax;
    let (sum, n) = qs
        .iter()
        .zip(values)
        .filter(|(q, _)| q.abs() >= cut)
        .fold((0.0, 0usize), |(s, n), (_, v)| (s + v.re, n + 1));
    sum / n.max(1) as f64
}

impl CharFunction {
    pub fn at_zero(&self) -> C64 {
        let i = (0..self.q_grid.n_points)
            .min_by(|&a, &b| self.q_grid.point(a).abs().total_cmp(&self.q_grid.point(b).abs()))
            .unwrap_or(0);
        self.values[i]
    }

    pub fn max_modulus(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// Cesàro means over the outer third and outer sixth.
    pub fn atom_estimates(&self) -> (f64, f64) {
        let qs: Vec<f64> = self.q_grid.points().collect();
        (cesaro(&qs, &self.values, 1.0 / 3.0), cesaro(&qs, &self.values, 1.0 / 6.0))
    }

    /// Mean of Im Φ over the positive outer third (nonzero when Φ has
    /// conjugate constants at ±∞, i.e. a principal-value density).
    fn asymptotic_imag(&self) -> f64 {
        let qmax = self.q_grid.x_max;
        let (s, n) = self
            .q_grid
            .points()
            .zip(&self.values)
            .filter(|(q, _)| *q >= 2.0 * qmax / 3.0)
            .fold((0.0, 0usize), |(s, n), (_, v)| (s + v.im, n + 1));
        s / n.max(1) as f64
    }
}

/// Invert Φ: atom at 0 from its asymptotic mean, density from the
/// trapezoid transform of Φ − mean, tails fitted on the outer quarter.
pub fn pwv_from_char(phi: &CharFunction, p_grid: Option<GridSpec>) -> Result<MixedDistribution> {
    let hbar = phi.hbar;
    let z = phi.at_zero();
    if (z - 1.0).norm() > 1e-6 {
        return Err(Error::Precondition(format!("Φ(0) = {z} differs from 1")));
    }
    let (third, sixth) = phi.atom_estimates();
    if (third - sixth).abs() > 1e-3 {
        return Err(Error::AtomExtraction(format!(
            "Cesàro means disagree: outer third {third}, outer sixth {sixth}"
        )));
    }
    let im = phi.asymptotic_imag();
    if im.abs() > 1e-6 {
        return Err(Error::Unsupported(format!(
            "Φ has imaginary asymptote {im}; the density has a principal-value pole"
        )));
    }
    let a = phi.asymptotic_mean;
    let g = phi.q_grid;
    let dq = g.spacing();
    let n = g.n_points;
    let q0 = g.x_min;
    let centred: Arc<Vec<C64>> = Arc::new(
        phi.values
            .iter()
            .enumerate()
            .map(|(j, v)| (v - a) * if j == 0 || j + 1 == n { 0.5 } else { 1.0 })
            .collect(),
    );
    let scale = dq / (2.0 * PI * hbar);
    let transform = {
        let c = centred.clone();
        move |p: f64| -> C64 {
            let step = C64::from_polar(1.0, -p * dq / hbar);
            let mut ph = C64::from_polar(1.0, -p * q0 / hbar);
            let mut acc = C64::new(0.0, 0.0);
            for (j, v) in c.iter().enumerate() {
                if j % 256 == 0 {
                    ph = C64::from_polar(1.0, -p * (q0 + j as f64 * dq) / hbar);
                }
                acc += v * ph;
                ph *= step;
            }
            acc * scale
        }
    };
    let p_grid = match p_grid {
        Some(pg) => pg,
        None => {
            let half = PI * hbar / (2.0 * dq);
            let s_scale = 0.5 * (g.x_max - g.x_min) / 4.0;
            let spacing = 0.05 * 2.0 * PI * hbar / s_scale.max(1e-300);
            let n = 2 * (half / spacing).ceil() as usize + 1;
            GridSpec::symmetric(half, n)?
        }
    };
    let t = transform.clone();
    let density: DensityFn = Arc::new(move |p| t(p).re);
    let atoms = if a.abs() > 0.0 { vec![Atom { location: 0.0, weight: a }] } else { Vec::new() };
    let mut dist = MixedDistribution::from_exact(atoms, p_grid, density);
    let pts: Vec<f64> = p_grid.points().collect();
    dist.max_imag = pts.par_iter().map(|&p| transform(p).im.abs()).reduce(|| 0.0, f64::max);

    // tails from the outer quarter of each side
    let vals = &dist.density.values;
    let peak = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = 1e-9 * peak;
    let n_p = pts.len();
    let quarter = n_p / 8;
    let right_u: Vec<f64> = pts[n_p - quarter..].to_vec();
    let right_y: Vec<f64> = vals[n_p - quarter..].to_vec();
    let left_u: Vec<f64> = pts[..quarter].iter().rev().map(|p| -p).collect();
    let left_y: Vec<f64> = vals[..quarter].iter().rev().copied().collect();
    let right = fit_tail(&right_u, &right_y, 4, floor);
    let left = fit_tail(&left_u, &left_y, 4, floor);
    Ok(dist.with_tails(left, right))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{SlitSpec, Wavefunction};

    fn rect() -> Wavefunction {
        Wavefunction::new(&SlitSpec::rectangular(1.0, 0.5), 1.0).unwrap()
    }

    #[test]
    fn phi_is_one_at_zero_and_bounded() {
        let psi = rect();
        let phi = char_function(&psi, &MeasurementSet::heaviside_sign(), default_q_grid(&psi)).unwrap();
        assert!((phi.at_zero() - 1.0).norm() < 1e-9);
        assert!(phi.max_modulus() <= 1.0 + 1e-9);
    }

    #[test]
    fn identity_gives_unit_phi_and_single_atom() {
        let psi = rect();
        let phi = char_function(&psi, &MeasurementSet::identity(), default_q_grid(&psi)).unwrap();
        assert!(phi.values.iter().all(|v| (v - 1.0).norm() < 1e-9));
        let d = pwv_from_char(&phi, None).unwrap();
        assert_eq!(d.atoms.len(), 1);
        assert!((d.atoms[0].weight - 1.0).abs() < 1e-9);
        assert!(d.density.values.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn narrow_slit_phi_at_separation_is_at_most_half() {
        let psi = Wavefunction::new(&SlitSpec::narrow(1.0, 1.0 / 200.0), 1.0).unwrap();
        let q = GridSpec::new(0.0, 1.0, 3).unwrap();
        let phi = char_function(&psi, &MeasurementSet::heaviside_sign(), q).unwrap();
        assert!(phi.values[2].norm() <= 0.5 + 1e-9);
    }

    fn agreement(spec: SlitSpec) {
        let psi = Wavefunction::new(&spec, 1.0).unwrap();
        let phi = char_function(&psi, &MeasurementSet::heaviside_sign(), default_q_grid(&psi)).unwrap();
        let d = pwv_from_char(&phi, None).unwrap();
        let exact = crate::transfer::closed_form_pwv(&spec, 1.0).unwrap();
        let peak = (0..=800).map(|i| exact.density_at(-40.0 + 0.1 * i as f64).abs()).fold(0.0, f64::max);
        let err = (0..=800)
            .map(|i| -40.0 + 0.1 * i as f64 + 0.013)
            .map(|p| (d.density_at(p) - exact.density_at(p)).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-3 * peak, "{err} vs {peak}");
        assert!((d.atoms[0].weight - 0.5).abs() < 1e-3);
        let mass = d.total_mass();
        assert!((mass - 1.0).abs() < 1e-6, "mass {mass}");
        assert!(d.max_imag < 1e-9);
    }

    #[test]
    fn rectangular_route_agreement() {
        agreement(SlitSpec::rectangular(1.0, 0.5));
    }

    #[test]
    fn narrow_route_agreement() {
        agreement(SlitSpec::narrow(1.0, 1.0 / 200.0));
    }
}
