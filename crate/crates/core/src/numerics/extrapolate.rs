/// Polynomial extrapolation to u = 0 with an error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NevilleEstimate {
    pub value: f64,
    /// Difference to the extrapolation that omits the point with largest |u|.
    pub error: f64,
}

fn neville(u: &[f64], y: &[f64]) -> f64 {
    let mut p = y.to_vec();
    let n = u.len();
    for k in 1..n {
        for i in 0..n - k {
            p[i] = (u[i + k] * p[i] - u[i] * p[i + 1]) / (u[i + k] - u[i]);
        }
    }
    p[0]
}

/// Value at u = 0 of the interpolating polynomial through `(u_i, y_i)`.
pub fn neville_at_zero(u: &[f64], y: &[f64]) -> NevilleEstimate {
    assert_eq!(u.len(), y.len());
    assert!(!u.is_empty());
    let value = neville(u, y);
    if u.len() == 1 {
        return NevilleEstimate { value, error: f64::INFINITY };
    }
    let far = (0..u.len())
        .max_by(|&a, &b| u[a].abs().total_cmp(&u[b].abs()))
        .expect("non-empty");
    let (us, ys): (Vec<f64>, Vec<f64>) = u
        .iter()
        .zip(y)
        .enumerate()
        .filter(|(i, _)| *i != far)
        .map(|(_, (a, b))| (*a, *b))
        .unzip();
    let reduced = neville(&us, &ys);
    NevilleEstimate { value, error: (value - reduced).abs() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_cubic() {
        let u = [1.0, 0.5, 0.25, 0.125, 0.0625];
        let y: Vec<f64> = u.iter().map(|x| 3.0 - 2.0 * x + x * x * x).collect();
        let e = neville_at_zero(&u, &y);
        assert!((e.value - 3.0).abs() < 1e-12);
        assert!(e.error < 1e-12);
    }
}
