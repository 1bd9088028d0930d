use super::gauss::{gauss_legendre, GaussLegendre};
use super::special::upper_gamma;
use super::sum::NeumaierSum;
use crate::C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Asymptotic form `amplitude · sin(wavenumber·u + phase) / u^decay_power`
/// for u → ∞. On the left side of a distribution u = -℘.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailModel {
    pub amplitude: f64,
    pub wavenumber: f64,
    pub phase: f64,
    pub decay_power: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TailIntegral {
    Converged(f64),
    Divergent,
}

impl TailIntegral {
    pub fn value(self) -> Option<f64> {
        match self {
            TailIntegral::Converged(v) => Some(v),
            TailIntegral::Divergent => None,
        }
    }
}

fn rule() -> &'static GaussLegendre {
    static R: OnceLock<GaussLegendre> = OnceLock::new();
    R.get_or_init(|| gauss_legendre(24))
}

impl TailModel {
    pub fn eval(&self, u: f64) -> f64 {
        self.amplitude * (self.wavenumber * u + self.phase).sin() / u.powf(self.decay_power)
    }

    /// Same function written with a nonnegative wavenumber.
    fn canonical(&self) -> TailModel {
        if self.wavenumber < 0.0 {
            TailModel {
                amplitude: -self.amplitude,
                wavenumber: -self.wavenumber,
                phase: -self.phase,
                decay_power: self.decay_power,
            }
        } else {
            *self
        }
    }

    /// First zero of the oscillating factor strictly above `u` (∞ for a
    /// non-oscillating tail).
    pub fn next_zero(&self, u: f64) -> f64 {
        if self.wavenumber == 0.0 {
            return f64::INFINITY;
        }
        if self.wavenumber < 0.0 {
            return self.canonical().next_zero(u);
        }
        let j = ((self.wavenumber * u + self.phase) / PI).floor() + 1.0;
        let z = (j * PI - self.phase) / self.wavenumber;
        if z <= u + 1e-12 * (1.0 + u.abs()) {
            ((j + 1.0) * PI - self.phase) / self.wavenumber
        } else {
            z
        }
    }

    /// Half-period length 2π/k / 2.
    pub fn half_period(&self) -> Option<f64> {
        (self.wavenumber != 0.0).then(|| PI / self.wavenumber.abs())
    }
}

fn weighted(env: &TailModel, n: i32) -> impl Fn(f64) -> f64 + '_ {
    move |u: f64| env.eval(u) * u.powi(n)
}

/// ∫_a^b tail(u)·u^n du, integrated lobe by lobe.
pub fn tail_partial_integral(env: &TailModel, weight_power: u32, a: f64, b: f64) -> f64 {
    if b <= a {
        return -tail_partial_integral(env, weight_power, b, a);
    }
    let env = env.canonical();
    let f = weighted(&env, weight_power as i32);
    let r = rule();
    let mut acc = NeumaierSum::new();
    if env.wavenumber == 0.0 {
        let panels = 64;
        let h = (b - a) / panels as f64;
        for j in 0..panels {
            acc.add(r.integrate(a + j as f64 * h, a + (j + 1) as f64 * h, &f));
        }
        return acc.value();
    }
    let mut lo = a;
    while lo < b {
        let hi = env.next_zero(lo).min(b);
        acc.add(r.integrate(lo, hi, &f));
        lo = hi;
    }
    acc.value()
}

/// ∫_start^∞ tail(u)·u^n du by half-period partial sums accelerated with
/// Wynn's ε-algorithm. Non-decaying lobes give [`TailIntegral::Divergent`].
pub fn osc_tail_integral(env: &TailModel, weight_power: u32, start: f64) -> TailIntegral {
    let env = env.canonical();
    let e = weight_power as f64 - env.decay_power;
    if env.amplitude == 0.0 {
        return TailIntegral::Converged(0.0);
    }
    if env.wavenumber == 0.0 {
        let c = env.amplitude * env.phase.sin();
        if c == 0.0 {
            return TailIntegral::Converged(0.0);
        }
        if e >= -1.0 || start <= 0.0 {
            return TailIntegral::Divergent;
        }
        return TailIntegral::Converged(-c * start.powf(e + 1.0) / (e + 1.0));
    }
    let f = weighted(&env, weight_power as i32);
    let r = rule();
    let first = env.next_zero(start);
    let mut partial = vec![r.integrate(start, first, &f)];
    let mut lobes = Vec::new();
    let mut lo = first;
    let hp = PI / env.wavenumber;
    let n_lobes = 48;
    for _ in 0..n_lobes {
        let hi = lo + hp;
        let l = r.integrate(lo, hi, &f);
        lobes.push(l);
        partial.push(partial.last().unwrap() + l);
        lo = hi;
    }
    let decaying = lobes.windows(2).skip(1).all(|w| w[1].abs() < w[0].abs());
    let alternating = lobes.windows(2).all(|w| w[0] * w[1] <= 0.0);
    if !decaying || !alternating {
        return TailIntegral::Divergent;
    }
    TailIntegral::Converged(wynn_epsilon(&partial))
}

/// Wynn ε-table limit of a sequence, taking the last even-column entry.
fn wynn_epsilon(s: &[f64]) -> f64 {
    let n = s.len();
    let mut prev = vec![0.0; n + 1];
    let mut cur: Vec<f64> = s.to_vec();
    let mut best = *s.last().unwrap();
    let mut col = 0;
    while cur.len() > 1 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for i in 0..cur.len() - 1 {
            let d = cur[i + 1] - cur[i];
            if d == 0.0 {
                return cur[i + 1];
            }
            next.push(prev[i + 1] + 1.0 / d);
        }
        prev = cur;
        cur = next;
        col += 1;
        if col % 2 == 0 && !cur.is_empty() && cur.last().unwrap().is_finite() {
            best = *cur.last().unwrap();
        }
    }
    best
}

/// ∫_start^∞ tail(u)·u^n·e^{-u/κ} du in closed form via Γ(a, z); with
/// `kappa = ∞` it falls back to [`osc_tail_integral`].
pub fn apodized_tail_integral(env: &TailModel, weight_power: u32, start: f64, kappa: f64) -> TailIntegral {
    if !kappa.is_finite() {
        return osc_tail_integral(env, weight_power, start);
    }
    let a = weight_power as f64 - env.decay_power + 1.0;
    let lam = C64::new(1.0 / kappa, -env.wavenumber);
    let g = upper_gamma(a, lam * start) * lam.powf(-a);
    let v = (C64::from_polar(1.0, env.phase) * g).im * env.amplitude;
    TailIntegral::Converged(v)
}
