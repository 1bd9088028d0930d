use crate::numerics::{
    gauss_legendre, osc_tail_integral, tail_partial_integral, GaussLegendre, GridSpec, NeumaierSum,
    SampledRealFunction, TailIntegral, TailModel,
};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::{Arc, OnceLock};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub weight: f64,
}

pub type DensityFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Dirac atoms + density on a core window + oscillatory tails beyond it.
///
/// The right tail is a function of ℘ for ℘ > core max, the left one a
/// function of u = -℘ for ℘ < core min.
#[derive(Clone)]
pub struct MixedDistribution {
    pub atoms: Vec<Atom>,
    pub density: SampledRealFunction,
    pub exact: Option<DensityFn>,
    pub left_tail: Vec<TailModel>,
    pub right_tail: Vec<TailModel>,
    /// Largest |Im| seen while forming the density.
    pub max_imag: f64,
    /// Points inside the core where the density is not smooth.
    pub kinks: Vec<f64>,
    nodes: OnceLock<Arc<Vec<(f64, f64)>>>,
}

impl fmt::Debug for MixedDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MixedDistribution")
            .field("atoms", &self.atoms)
            .field("grid", &self.density.grid)
            .field("exact", &self.exact.is_some())
            .field("left_tail", &self.left_tail)
            .field("right_tail", &self.right_tail)
            .finish()
    }
}

fn rule() -> &'static GaussLegendre {
    static R: OnceLock<GaussLegendre> = OnceLock::new();
    R.get_or_init(|| gauss_legendre(16))
}

impl MixedDistribution {
    pub fn new(atoms: Vec<Atom>, density: SampledRealFunction) -> Self {
        MixedDistribution {
            atoms,
            density,
            exact: None,
            left_tail: Vec::new(),
            right_tail: Vec::new(),
            max_imag: 0.0,
            kinks: Vec::new(),
            nodes: OnceLock::new(),
        }
    }

    /// Density sampled from an exact evaluator (kept for quadrature).
    pub fn from_exact(atoms: Vec<Atom>, grid: GridSpec, f: DensityFn) -> Self {
        use rayon::prelude::*;
        let xs: Vec<f64> = grid.points().collect();
        let values = xs.par_iter().map(|&x| f(x)).collect();
        let mut d = Self::new(atoms, SampledRealFunction { grid, values });
        d.exact = Some(f);
        d
    }

    pub fn atoms_only(atoms: Vec<Atom>, half: f64) -> Self {
        let grid = GridSpec::symmetric(half, 3).expect("positive half-width");
        Self::new(atoms, SampledRealFunction { grid, values: vec![0.0; 3] })
    }

    /// Attaches tail models, dropping terms that are roundoff relative to
    /// the largest term at the core edge (they would otherwise make
    /// moments look undefined).
    pub fn with_tails(mut self, left: Vec<TailModel>, right: Vec<TailModel>) -> Self {
        let (lo, hi) = self.core();
        let edge = lo.abs().max(hi.abs());
        let prune = |t: Vec<TailModel>| {
            let size = |m: &TailModel| m.amplitude.abs() * edge.powf(-m.decay_power);
            let top = t.iter().map(size).fold(0.0, f64::max);
            t.into_iter().filter(|m| size(m) > 1e-13 * top).collect()
        };
        self.left_tail = prune(left);
        self.right_tail = prune(right);
        self
    }

    pub fn core(&self) -> (f64, f64) {
        (self.density.grid.x_min, self.density.grid.x_max)
    }

    pub fn has_tails(&self) -> bool {
        self.left_tail.iter().chain(&self.right_tail).any(|t| t.amplitude != 0.0)
    }

    pub fn density_at(&self, p: f64) -> f64 {
        let (lo, hi) = self.core();
        if p > hi {
            self.right_tail.iter().map(|t| t.eval(p)).sum()
        } else if p < lo {
            self.left_tail.iter().map(|t| t.eval(-p)).sum()
        } else if let Some(f) = &self.exact {
            f(p)
        } else {
            self.density.interpolate(p).unwrap_or(0.0)
        }
    }

    /// Quadrature nodes `(℘, w·D(℘))` for the core window: Gauss panels on
    /// the exact density, trapezoid weights on samples otherwise.
    pub fn core_nodes(&self) -> Arc<Vec<(f64, f64)>> {
        self.nodes
            .get_or_init(|| {
                let g = self.density.grid;
                let nodes = match &self.exact {
                    Some(f) => {
                        use rayon::prelude::*;
                        let mut bps: Vec<f64> = (0..g.n_points).step_by(8).map(|i| g.point(i)).collect();
                        bps.push(g.x_max);
                        bps.extend(self.kinks.iter().copied().filter(|k| g.contains(*k)));
                        bps.sort_by(f64::total_cmp);
                        bps.dedup();
                        let r = rule();
                        let panels: Vec<(f64, f64)> = bps.windows(2).map(|w| (w[0], w[1])).collect();
                        panels
                            .par_iter()
                            .flat_map_iter(|&(a, b)| {
                                let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
                                r.nodes
                                    .iter()
                                    .zip(&r.weights)
                                    .map(move |(x, w)| {
                                        let p = c + h * x;
                                        (p, w * h * f(p))
                                    })
                                    .collect::<Vec<_>>()
                            })
                            .collect()
                    }
                    None => {
                        let h = g.spacing();
                        g.points()
                            .zip(&self.density.values)
                            .enumerate()
                            .map(|(i, (p, v))| {
                                let w = if i == 0 || i + 1 == g.n_points { 0.5 * h } else { h };
                                (p, w * v)
                            })
                            .collect()
                    }
                };
                Arc::new(nodes)
            })
            .clone()
    }

    /// ∫_core D(℘) g(℘) d℘.
    pub fn core_integral(&self, g: impl Fn(f64) -> f64) -> f64 {
        let nodes = self.core_nodes();
        let mut s = NeumaierSum::new();
        for &(p, wd) in nodes.iter() {
            s.add(wd * g(p));
        }
        s.value()
    }

    /// ∫ over both tails of D(℘)℘^n, `None` when divergent.
    pub fn tail_moment(&self, n: u32) -> Option<f64> {
        let (lo, hi) = self.core();
        let mut s = NeumaierSum::new();
        for t in &self.right_tail {
            match osc_tail_integral(t, n, hi) {
                TailIntegral::Converged(v) => s.add(v),
                TailIntegral::Divergent => return None,
            }
        }
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        for t in &self.left_tail {
            match osc_tail_integral(t, n, -lo) {
                TailIntegral::Converged(v) => s.add(sign * v),
                TailIntegral::Divergent => return None,
            }
        }
        Some(s.value())
    }

    pub fn atom_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    /// Atoms + core quadrature + tail integrals.
    pub fn total_mass(&self) -> f64 {
        self.atom_mass() + self.core_integral(|_| 1.0) + self.tail_moment(0).unwrap_or(f64::NAN)
    }

    /// ∫_a^b D over any window, using tails outside the core.
    pub fn density_integral(&self, a: f64, b: f64) -> f64 {
        if b < a {
            return -self.density_integral(b, a);
        }
        let (lo, hi) = self.core();
        let mut s = NeumaierSum::new();
        if b > hi {
            let from = a.max(hi);
            for t in &self.right_tail {
                s.add(tail_partial_integral(t, 0, from, b));
            }
        }
        if a < lo {
            let to = b.min(lo);
            for t in &self.left_tail {
                s.add(tail_partial_integral(t, 0, -to, -a));
            }
        }
        let (ca, cb) = (a.max(lo), b.min(hi));
        if cb > ca {
            s.add(self.core_window_integral(ca, cb));
        }
        s.value()
    }

    fn core_window_integral(&self, a: f64, b: f64) -> f64 {
        match &self.exact {
            Some(f) => {
                let g = self.density.grid;
                let step = 8.0 * g.spacing();
                let mut bps = vec![a, b];
                let mut x = g.x_min + ((a - g.x_min) / step).ceil() * step;
                while x < b {
                    bps.push(x);
                    x += step;
                }
                bps.extend(self.kinks.iter().copied().filter(|k| *k > a && *k < b));
                crate::numerics::integrate_pieces(rule(), &bps, 1, |p: f64| f(p))
            }
            None => self.density.integrate(a, b).unwrap_or(f64::NAN),
        }
    }

    /// Apply `f` to every atom weight and density value (e.g. scaling).
    pub fn scaled(&self, c: f64) -> Self {
        let mut d = self.clone();
        for a in &mut d.atoms {
            a.weight *= c;
        }
        for v in &mut d.density.values {
            *v *= c;
        }
        if let Some(f) = &self.exact {
            let f = f.clone();
            d.exact = Some(Arc::new(move |p| c * f(p)));
        }
        for t in d.left_tail.iter_mut().chain(d.right_tail.iter_mut()) {
            t.amplitude *= c;
        }
        d.nodes = OnceLock::new();
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// ½δ + sin(℘/2)/(2π℘) with its exact 1/℘ tails.
    fn narrow_closed() -> MixedDistribution {
        let f: DensityFn = Arc::new(|p: f64| if p == 0.0 { 0.25 / PI } else { (0.5 * p).sin() / (2.0 * PI * p) });
        let g = GridSpec::symmetric(40.0, 2001).unwrap();
        let tail = TailModel { amplitude: 0.5 / PI, wavenumber: 0.5, phase: 0.0, decay_power: 1.0 };
        MixedDistribution::from_exact(vec![Atom { location: 0.0, weight: 0.5 }], g, f).with_tails(vec![tail], vec![tail])
    }

    #[test]
    fn narrow_closed_form_has_unit_mass() {
        let d = narrow_closed();
        assert!((d.total_mass() - 1.0).abs() < 1e-9, "{}", d.total_mass());
    }

    #[test]
    fn density_integral_matches_sine_integral() {
        let d = narrow_closed();
        for p in [3.0, 39.0, 41.0, 300.0] {
            let v = d.density_integral(-p, p);
            let want = crate::numerics::sine_integral(0.5 * p) / PI;
            assert!((v - want).abs() < 1e-10, "p={p} {v} {want}");
        }
    }

    #[test]
    fn sampled_density_integrates_by_trapezoid() {
        let g = GridSpec::symmetric(10.0, 4001).unwrap();
        let d = MixedDistribution::new(
            vec![],
            SampledRealFunction::from_fn(g, |x| (-x * x / 2.0).exp() / (2.0 * PI).sqrt()),
        );
        assert!((d.total_mass() - 1.0).abs() < 1e-10);
    }
}
