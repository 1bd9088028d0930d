use super::grid::{GridSpec, Sampled, SampledComplexFunction};
use crate::{Error, Result, C64};
use std::f64::consts::PI;

/// Non-decaying part of a function: `e^{ikx}·(c₋Θ(-x) + c₊Θ(x))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AsymptoticSplit {
    pub c_minus: C64,
    pub c_plus: C64,
    pub wavenumber: f64,
}

impl AsymptoticSplit {
    pub fn constant(c: C64) -> Self {
        AsymptoticSplit { c_minus: c, c_plus: c, wavenumber: 0.0 }
    }

    pub fn plane_wave(c: C64, k: f64) -> Self {
        AsymptoticSplit { c_minus: c, c_plus: c, wavenumber: k }
    }

    pub fn eval(&self, x: f64) -> C64 {
        let step = if x < 0.0 {
            self.c_minus
        } else if x > 0.0 {
            self.c_plus
        } else {
            (self.c_minus + self.c_plus) * 0.5
        };
        step * C64::new(0.0, self.wavenumber * x).exp()
    }
}

/// Transform of a split function: atoms, a principal-value pole
/// `residue / (p - pole)` and the sampled transform of the remainder.
#[derive(Clone, Debug)]
pub struct Transformed {
    pub atoms: Vec<(f64, C64)>,
    pub pv: Option<(C64, f64)>,
    pub continuous: SampledComplexFunction,
}

impl Transformed {
    /// Regular part at `p` (continuous + PV term), `None` off the grid.
    pub fn density_at(&self, p: f64) -> Option<C64> {
        let mut v = self.continuous.interpolate(p)?;
        if let Some((res, pole)) = self.pv {
            v += res / (p - pole);
        }
        Some(v)
    }
}

/// (2πħ)^{-1/2} ∫ f(x) e^{-ixp/ħ} dx with the declared non-decaying part
/// transformed analytically and the remainder by direct trapezoid summation.
pub fn fourier_transform(
    f: &SampledComplexFunction,
    p_grid: GridSpec,
    split: Option<AsymptoticSplit>,
    hbar: f64,
) -> Result<Transformed> {
    let split = split.unwrap_or(AsymptoticSplit::constant(C64::new(0.0, 0.0)));
    let g = f.grid;
    let scale = f.values.iter().fold(1.0f64, |m, v| m.max(v.norm()));
    let tol = 1e-6 * scale;
    let end_l = (f.values[0] - split.eval(g.x_min)).norm();
    let end_r = (f.values[g.n_points - 1] - split.eval(g.x_max)).norm();
    if end_l > tol || end_r > tol {
        return Err(Error::Precondition(format!(
            "undeclared non-decaying component: endpoint residuals {end_l:.3e}, {end_r:.3e}"
        )));
    }
    let remainder: Vec<C64> = g
        .points()
        .zip(&f.values)
        .map(|(x, v)| v - split.eval(x))
        .collect();
    let norm = 1.0 / (2.0 * PI * hbar).sqrt();
    let dx = g.spacing();
    let xs: Vec<f64> = g.points().collect();
    let values = p_grid
        .points()
        .map(|p| {
            let mut acc = C64::new(0.0, 0.0);
            for (j, (x, r)) in xs.iter().zip(&remainder).enumerate() {
                let w = if j == 0 || j + 1 == xs.len() { 0.5 } else { 1.0 };
                acc += r * C64::new(0.0, -x * p / hbar).exp() * w;
            }
            acc * dx * norm
        })
        .collect();
    let pole = hbar * split.wavenumber;
    let mut atoms = Vec::new();
    let a = (split.c_minus + split.c_plus) * (0.5 * (2.0 * PI * hbar).sqrt());
    if a.norm() > 0.0 {
        atoms.push((pole, a));
    }
    let d = split.c_plus - split.c_minus;
    let pv = (d.norm() > 0.0).then(|| (d * C64::new(0.0, -hbar) * norm, pole));
    Ok(Transformed { atoms, pv, continuous: Sampled { grid: p_grid, values } })
}

/// (2πħ)^{-1/2} ∫ f̃(p) e^{ixp/ħ} dp for an atom-free sampled transform.
pub fn inverse_fourier_transform(ft: &SampledComplexFunction, x_grid: GridSpec, hbar: f64) -> SampledComplexFunction {
    let g = ft.grid;
    let dp = g.spacing();
    let norm = 1.0 / (2.0 * PI * hbar).sqrt();
    let ps: Vec<f64> = g.points().collect();
    Sampled::from_fn(x_grid, |x| {
        let mut acc = C64::new(0.0, 0.0);
        for (j, (p, v)) in ps.iter().zip(&ft.values).enumerate() {
            let w = if j == 0 || j + 1 == ps.len() { 0.5 } else { 1.0 };
            acc += v * C64::new(0.0, x * p / hbar).exp() * w;
        }
        acc * dp * norm
    })
}
