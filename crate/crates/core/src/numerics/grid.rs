use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};

/// Uniform grid `x_min, x_min + Δ, …, x_max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        if n_points < 2 {
            return Err(Error::Construction(format!("grid needs at least 2 points, got {n_points}")));
        }
        if !(x_min.is_finite() && x_max.is_finite()) || x_max <= x_min {
            return Err(Error::Construction(format!("grid span [{x_min}, {x_max}] is empty")));
        }
        Ok(GridSpec { x_min, x_max, n_points })
    }

    /// Symmetric grid `[-half, half]`.
    pub fn symmetric(half: f64, n_points: usize) -> Result<Self> {
        Self::new(-half, half, n_points)
    }

    /// Default position grid: `[-8s, 8s]`, 2¹⁴ points.
    pub fn default_position(s: f64) -> Self {
        GridSpec { x_min: -8.0 * s, x_max: 8.0 * s, n_points: 1 << 14 }
    }

    /// Default momentum grid: `[-40ħ/s, 40ħ/s]`, 4001 points.
    pub fn default_momentum(hbar: f64, s: f64) -> Self {
        GridSpec { x_min: -40.0 * hbar / s, x_max: 40.0 * hbar / s, n_points: 4001 }
    }

    pub fn spacing(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_points - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.x_max
        } else {
            self.x_min + i as f64 * self.spacing()
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.point(i))
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x_min && x <= self.x_max
    }
}

/// Values sampled on a [`GridSpec`].
#[derive(Clone, Debug, PartialEq)]
pub struct Sampled<T> {
    pub grid: GridSpec,
    pub values: Vec<T>,
}

pub type SampledComplexFunction = Sampled<C64>;
pub type SampledRealFunction = Sampled<f64>;

impl<T> Sampled<T>
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
{
    pub fn new(grid: GridSpec, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.n_points {
            return Err(Error::Construction(format!(
                "{} values for a {}-point grid",
                values.len(),
                grid.n_points
            )));
        }
        Ok(Sampled { grid, values })
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> T) -> Self {
        let values = grid.points().map(f).collect();
        Sampled { grid, values }
    }

    /// Linear interpolation; `None` outside the grid.
    pub fn interpolate(&self, x: f64) -> Option<T> {
        if !self.grid.contains(x) {
            return None;
        }
        let h = self.grid.spacing();
        let t = (x - self.grid.x_min) / h;
        let i = (t.floor() as usize).min(self.grid.n_points - 2);
        let frac = t - i as f64;
        Some(self.values[i] * (1.0 - frac) + self.values[i + 1] * frac)
    }

    /// Trapezoid integral over `[a, b]`, partial end cells by linear
    /// interpolation. Error is O(Δ²) for twice-differentiable integrands.
    pub fn integrate(&self, a: f64, b: f64) -> Result<T> {
        let g = &self.grid;
        let tol = 1e-12 * (g.x_max - g.x_min);
        if a < g.x_min - tol || b > g.x_max + tol || a > b {
            return Err(Error::Range(format!(
                "interval [{a}, {b}] not inside grid [{}, {}]",
                g.x_min, g.x_max
            )));
        }
        let a = a.max(g.x_min);
        let b = b.min(g.x_max);
        let h = g.spacing();
        let first = ((a - g.x_min) / h).ceil() as usize;
        let last = (((b - g.x_min) / h).floor() as usize).min(g.n_points - 1);
        let fa = self.interpolate(a).expect("inside");
        let fb = self.interpolate(b).expect("inside");
        if first > last {
            return Ok((fa + fb) * (0.5 * (b - a)));
        }
        let xf = g.point(first);
        let xl = g.point(last);
        let mut acc = (fa + self.values[first]) * (0.5 * (xf - a));
        for i in first..last {
            acc = acc + (self.values[i] + self.values[i + 1]) * (0.5 * h);
        }
        acc = acc + (self.values[last] + fb) * (0.5 * (b - xl));
        Ok(acc)
    }
}

impl Sampled<C64> {
    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

/// Composite trapezoid approximation of `∫_a^b f dx`.
pub fn quad(f: &SampledComplexFunction, a: f64, b: f64) -> Result<C64> {
    f.integrate(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_on_unit_interval() {
        let g = GridSpec::new(0.0, 1.0, 11).unwrap();
        let f = Sampled::from_fn(g, |_| C64::new(1.0, 0.0));
        assert!((quad(&f, 0.0, 1.0).unwrap() - C64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn odd_function_vanishes() {
        let g = GridSpec::new(-1.0, 1.0, 101).unwrap();
        let f = Sampled::from_fn(g, |x| C64::new(x, 0.0));
        assert!(quad(&f, -1.0, 1.0).unwrap().norm() < 1e-14);
    }

    #[test]
    fn plane_wave_half_period() {
        // ∫_0^π e^{ix} dx = 2i
        let g = GridSpec::new(0.0, std::f64::consts::PI, 4001).unwrap();
        let f = Sampled::from_fn(g, |x| C64::new(0.0, x).exp());
        let v = quad(&f, 0.0, std::f64::consts::PI).unwrap();
        assert!((v - C64::new(0.0, 2.0)).norm() < 1e-6);
    }

    #[test]
    fn trapezoid_error_is_second_order() {
        let exact = 1.0 - (1.0f64).cos();
        let err = |n| {
            let g = GridSpec::new(0.0, 1.0, n).unwrap();
            let f = Sampled::from_fn(g, |x: f64| x.sin());
            (f.integrate(0.0, 1.0).unwrap() - exact).abs()
        };
        let ratio = err(51) / err(101);
        assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn partial_cells_are_interpolated() {
        let g = GridSpec::new(0.0, 1.0, 11).unwrap();
        let f = Sampled::from_fn(g, |x| x);
        assert!((f.integrate(0.05, 0.73).unwrap() - 0.5 * (0.73f64.powi(2) - 0.0025)).abs() < 1e-14);
    }

    #[test]
    fn out_of_range_interval_is_rejected() {
        let g = GridSpec::new(0.0, 1.0, 11).unwrap();
        let f = Sampled::from_fn(g, |_| C64::new(1.0, 0.0));
        assert!(matches!(quad(&f, -0.5, 1.0), Err(Error::Range(_))));
    }

    #[test]
    fn degenerate_grids_are_rejected() {
        assert!(GridSpec::new(0.0, 1.0, 1).is_err());
        assert!(GridSpec::new(1.0, 1.0, 10).is_err());
    }
}
