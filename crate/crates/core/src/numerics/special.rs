use crate::C64;
use std::f64::consts::FRAC_PI_2;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Si(x) = ∫₀ˣ sin t / t dt.
///
/// Power series for |x| ≤ 4, continued fraction for E₁(ix) up to 50,
/// asymptotic auxiliary functions beyond.
pub fn sine_integral(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax <= 4.0 {
        si_series(ax)
    } else if ax <= 50.0 {
        FRAC_PI_2 + upper_gamma(0.0, C64::new(0.0, ax)).im
    } else {
        si_asymptotic(ax)
    };
    v.copysign(x)
}

fn si_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut k = 0usize;
    loop {
        k += 1;
        let j = (2 * k) as f64;
        term *= -x2 / (j * (j + 1.0));
        let add = term / (j + 1.0);
        sum += add;
        if add.abs() < 1e-17 * sum.abs().max(1e-300) {
            return sum;
        }
    }
}

fn si_asymptotic(x: f64) -> f64 {
    let inv2 = 1.0 / (x * x);
    let (mut f, mut g) = (0.0, 0.0);
    let mut tf = 1.0;
    let mut tg = 1.0;
    for k in 0..20 {
        f += tf;
        g += tg;
        let k2 = 2.0 * k as f64;
        let nf = -tf * (k2 + 1.0) * (k2 + 2.0) * inv2;
        let ng = -tg * (k2 + 2.0) * (k2 + 3.0) * inv2;
        if nf.abs() > tf.abs() {
            break;
        }
        tf = nf;
        tg = ng;
    }
    FRAC_PI_2 - f / x * x.cos() - g * inv2 * x.sin()
}

/// Upper incomplete gamma Γ(a, z) = ∫_z^∞ t^{a-1} e^{-t} dt for real `a` and
/// complex `z` off the negative real axis (principal branch).
pub fn upper_gamma(a: f64, z: C64) -> C64 {
    if z.norm() > 1.5 {
        return upper_gamma_cf(a, z);
    }
    if a > 0.0 {
        let lower = lower_gamma_series(a, z);
        return C64::new(statrs::function::gamma::gamma(a), 0.0) - lower;
    }
    // downward recurrence Γ(a, z) = (Γ(a+1, z) - z^a e^{-z}) / a
    let frac = a - a.floor();
    let (mut b, mut val) = if frac == 0.0 {
        (0.0, e1_series(z))
    } else {
        let b = frac;
        (b, C64::new(statrs::function::gamma::gamma(b), 0.0) - lower_gamma_series(b, z))
    };
    let ez = (-z).exp();
    while b > a + 0.5 {
        b -= 1.0;
        val = (val - z.powf(b) * ez) / b;
    }
    val
}

fn upper_gamma_cf(a: f64, z: C64) -> C64 {
    let tiny = C64::new(1e-150, 0.0);
    let mut b = z + 1.0 - a;
    let mut c = C64::new(1e150, 0.0);
    let mut d = C64::new(1.0, 0.0) / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = d * an + b;
        if d.norm() < 1e-150 {
            d = tiny;
        }
        c = b + c.inv() * an;
        if c.norm() < 1e-150 {
            c = tiny;
        }
        d = d.inv();
        let del = d * c;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            break;
        }
    }
    (-z).exp() * z.powf(a) * h
}

fn lower_gamma_series(a: f64, z: C64) -> C64 {
    let mut term = C64::new(1.0 / a, 0.0);
    let mut sum = term;
    let mut ap = a;
    for _ in 0..500 {
        ap += 1.0;
        term = term * z / ap;
        sum += term;
        if term.norm() < 1e-17 * sum.norm() {
            break;
        }
    }
    sum * z.powf(a) * (-z).exp()
}

fn e1_series(z: C64) -> C64 {
    let mut sum = C64::new(0.0, 0.0);
    let mut term = C64::new(1.0, 0.0);
    for k in 1..500 {
        term = term * (-z) / k as f64;
        let add = term / k as f64;
        sum += add;
        if add.norm() < 1e-17 * sum.norm().max(1e-300) {
            break;
        }
    }
    -sum - z.ln() - EULER_GAMMA
}
