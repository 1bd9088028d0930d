use crate::numerics::TailModel;
use std::f64::consts::PI;

/// Solve the small symmetric system `a x = b` by Gaussian elimination with
/// partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[piv][c].abs() < 1e-300 {
            return None;
        }
        a.swap(c, piv);
        b.swap(c, piv);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Least-squares amplitudes of cos/sin at fixed wavenumbers.
fn fit_amplitudes(u: &[f64], y: &[f64], ks: &[f64]) -> Option<Vec<(f64, f64)>> {
    let nb = 2 * ks.len();
    let mut a = vec![vec![0.0; nb]; nb];
    let mut b = vec![0.0; nb];
    let mut row = vec![0.0; nb];
    for (&x, &v) in u.iter().zip(y) {
        for (j, k) in ks.iter().enumerate() {
            let (s, c) = (k * x).sin_cos();
            row[2 * j] = c;
            row[2 * j + 1] = s;
        }
        for i in 0..nb {
            b[i] += row[i] * v;
            for j in i..nb {
                a[i][j] += row[i] * row[j];
            }
        }
    }
    for i in 0..nb {
        for j in 0..i {
            a[i][j] = a[j][i];
        }
    }
    let c = solve(a, b)?;
    Some(c.chunks(2).map(|p| (p[0], p[1])).collect())
}

/// Envelope power from a log-log fit of lobe extrema |y| against u.
fn envelope_power(u: &[f64], y: &[f64]) -> Option<f64> {
    let ext: Vec<(f64, f64)> = (1..y.len().saturating_sub(1))
        .filter(|&i| y[i].abs() >= y[i - 1].abs() && y[i].abs() > y[i + 1].abs() && y[i] != 0.0)
        .map(|i| (u[i].ln(), y[i].abs().ln()))
        .collect();
    if ext.len() < 3 {
        return None;
    }
    let n = ext.len() as f64;
    let (mx, my) = ext.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let sxy: f64 = ext.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = ext.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    (sxx > 0.0).then(|| -sxy / sxx)
}

/// Fit `Σ A_j sin(k_j u + φ_j)/u^m` to samples on the outer part of a tail
/// (u > 0 increasing). Wavenumbers are found one by one from the
/// periodogram peak of the residual; amplitudes and phases by linear least
/// squares. The power m is the integer near the lobe-extrema estimate that
/// leaves the smallest residual. Returns an empty list when the samples are
/// negligible.
pub fn fit_tail(u: &[f64], y: &[f64], max_tones: usize, floor: f64) -> Vec<TailModel> {
    let peak = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if u.len() < 16 || peak <= floor {
        return Vec::new();
    }
    let Some(m_raw) = envelope_power(u, y) else { return Vec::new() };
    let centre = m_raw.round().max(1.0);
    let mut best: Option<(f64, Vec<TailModel>)> = None;
    for m in [centre, centre - 1.0, centre + 1.0] {
        if m < 0.0 || best.as_ref().is_some_and(|(r, _)| *r < 1e-4) {
            continue;
        }
        let (models, resid) = fit_with_power(u, y, m, max_tones);
        if best.as_ref().is_none_or(|(r, _)| resid < *r) {
            best = Some((resid, models));
        }
    }
    best.map(|(_, m)| m).unwrap_or_default()
}

/// Coordinate-wise golden search on each wavenumber, minimising the
/// least-squares residual of the joint fit.
fn refine_wavenumbers(u: &[f64], y: &[f64], ks: &mut [f64], which: std::ops::Range<usize>, sweeps: usize, width: f64) {
    let cost = |ks: &[f64]| -> f64 {
        match fit_amplitudes(u, y, ks) {
            Some(fit) => u
                .iter()
                .zip(y)
                .map(|(x, v)| {
                    let r = v - ks.iter().zip(&fit).map(|(k, (c, s))| c * (k * x).cos() + s * (k * x).sin()).sum::<f64>();
                    r * r
                })
                .sum(),
            None => f64::INFINITY,
        }
    };
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..sweeps {
        for j in which.clone() {
            let centre = ks[j];
            let (mut a, mut b) = (centre - width, centre + width);
            for _ in 0..40 {
                let (c, d) = (b - g * (b - a), a + g * (b - a));
                ks[j] = c;
                let fc = cost(ks);
                ks[j] = d;
                if fc < cost(ks) {
                    b = d;
                } else {
                    a = c;
                }
            }
            ks[j] = 0.5 * (a + b);
        }
    }
}

fn residual(u: &[f64], y: &[f64], ks: &[f64], fit: &[(f64, f64)]) -> Vec<f64> {
    y.iter()
        .zip(u)
        .map(|(v, x)| v - ks.iter().zip(fit).map(|(k, (c, s))| c * (k * x).cos() + s * (k * x).sin()).sum::<f64>())
        .collect()
}

fn fit_with_power(u: &[f64], y: &[f64], m: f64, max_tones: usize) -> (Vec<TailModel>, f64) {
    let scaled: Vec<f64> = u.iter().zip(y).map(|(x, v)| v * x.powf(m)).collect();
    let span = u[u.len() - 1] - u[0];
    let du = span / (u.len() - 1) as f64;
    let k_max = PI / du;
    let dk = PI / span / 4.0;
    let rms = |v: &[f64]| (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt();
    let base = rms(&scaled);
    let mut ks: Vec<f64> = Vec::new();
    let mut amps = Vec::new();
    let mut resid = scaled.clone();
    for _ in 0..max_tones {
        let power = |k: f64| {
            let (mut c, mut s) = (0.0, 0.0);
            for (x, v) in u.iter().zip(&resid) {
                c += v * (k * x).cos();
                s += v * (k * x).sin();
            }
            c * c + s * s
        };
        let mut top = (0.0, dk);
        let mut k = dk;
        while k < k_max {
            let p = power(k);
            if p > top.0 {
                top = (p, k);
            }
            k += dk;
        }
        // golden-section refinement around the grid peak
        let (mut a, mut b) = (top.1 - dk, top.1 + dk);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..60 {
            let (c, d) = (b - g * (b - a), a + g * (b - a));
            if power(c) > power(d) {
                b = d;
            } else {
                a = c;
            }
        }
        ks.push(0.5 * (a + b));
        let last = ks.len() - 1;
        refine_wavenumbers(u, &scaled, &mut ks, last..last + 1, 1, dk);
        let Some(fit) = fit_amplitudes(u, &scaled, &ks) else {
            ks.pop();
            break;
        };
        resid = residual(u, &scaled, &ks, &fit);
        amps = fit;
        if rms(&resid) < 1e-6 * base {
            break;
        }
    }
    if ks.len() > 1 {
        let all = 0..ks.len();
        refine_wavenumbers(u, &scaled, &mut ks, all, 2, dk / 4.0);
        if let Some(fit) = fit_amplitudes(u, &scaled, &ks) {
            resid = residual(u, &scaled, &ks, &fit);
            amps = fit;
        }
    }
    let models = ks
        .iter()
        .zip(&amps)
        .map(|(&k, &(c, s))| TailModel {
            amplitude: (c * c + s * s).sqrt(),
            wavenumber: k,
            phase: c.atan2(s),
            decay_power: m,
        })
        .collect();
    let rel = if base > 0.0 { rms(&resid) / base } else { 0.0 };
    (models, rel)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_two_tone_inverse_square_tail() {
        let u: Vec<f64> = (0..2000).map(|i| 400.0 + 0.1 * i as f64).collect();
        let f = |x: f64| (0.7 * (0.25 * x + 0.3).sin() - 0.4 * (0.75 * x).cos()) / (x * x);
        let y: Vec<f64> = u.iter().map(|&x| f(x)).collect();
        let t = fit_tail(&u, &y, 4, 1e-15);
        assert!(t.len() >= 2);
        for x in [450.0, 700.0, 5000.0] {
            let v: f64 = t.iter().map(|m| m.eval(x)).sum();
            assert!((v - f(x)).abs() < 1e-4 * (1.0 / (x * x)), "x={x} {v} {}", f(x));
        }
        assert!(t.iter().all(|m| m.decay_power == 2.0));
    }

    #[test]
    fn negligible_tail_is_dropped() {
        let u: Vec<f64> = (0..100).map(|i| 10.0 + i as f64).collect();
        let y = vec![1e-20; 100];
        assert!(fit_tail(&u, &y, 3, 1e-12).is_empty());
    }
}
