use crate::C64;
use std::ops::{Add, Mul};

/// Truncated Taylor series `Σ c_j t^j` about a point.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub coeffs: Vec<C64>,
}

impl Jet {
    pub fn constant(c: C64, order: usize) -> Self {
        let mut coeffs = vec![C64::new(0.0, 0.0); order + 1];
        coeffs[0] = c;
        Jet { coeffs }
    }

    pub fn from_coeffs(mut coeffs: Vec<C64>, order: usize) -> Self {
        coeffs.resize(order + 1, C64::new(0.0, 0.0));
        Jet { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// r-th derivative at the expansion point.
    pub fn derivative(&self, r: usize) -> C64 {
        let f: f64 = (1..=r).map(|j| j as f64).product();
        self.coeffs.get(r).copied().unwrap_or_default() * f
    }

    pub fn conj(&self) -> Jet {
        Jet { coeffs: self.coeffs.iter().map(|c| c.conj()).collect() }
    }

    pub fn scale(&self, a: C64) -> Jet {
        Jet { coeffs: self.coeffs.iter().map(|c| c * a).collect() }
    }

    /// e^{f}, by g' = f'g.
    pub fn exp(&self) -> Jet {
        let n = self.coeffs.len();
        let mut g = vec![C64::new(0.0, 0.0); n];
        g[0] = self.coeffs[0].exp();
        for k in 1..n {
            let mut acc = C64::new(0.0, 0.0);
            for j in 1..=k {
                acc += self.coeffs[j] * g[k - j] * j as f64;
            }
            g[k] = acc / k as f64;
        }
        Jet { coeffs: g }
    }

    pub fn powi(&self, n: u32) -> Jet {
        let mut out = Jet::constant(C64::new(1.0, 0.0), self.order());
        for _ in 0..n {
            out = &out * self;
        }
        out
    }

    /// Jet of sin(a t + b) about t = 0.
    pub fn sin_affine(a: f64, b: f64, order: usize) -> Jet {
        let coeffs = (0..=order)
            .scan(1.0, |fact, j| {
                if j > 0 {
                    *fact *= j as f64;
                }
                let d = (b + j as f64 * std::f64::consts::FRAC_PI_2).sin() * a.powi(j as i32);
                Some(C64::new(d / *fact, 0.0))
            })
            .collect();
        Jet { coeffs }
    }

    /// Jet of a real polynomial `Σ p_j x^j` about `x0`.
    pub fn polynomial(p: &[f64], x0: f64, order: usize) -> Jet {
        let mut c = vec![C64::new(0.0, 0.0); order + 1];
        for (j, &pj) in p.iter().enumerate() {
            // x^j = Σ_i C(j,i) x0^{j-i} t^i
            let mut binom = 1.0;
            for i in 0..=j.min(order) {
                c[i] += C64::new(pj * binom * x0.powi((j - i) as i32), 0.0);
                binom = binom * (j - i) as f64 / (i + 1) as f64;
            }
        }
        Jet { coeffs: c }
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, o: &Jet) -> Jet {
        let n = self.coeffs.len().min(o.coeffs.len());
        let mut c = vec![C64::new(0.0, 0.0); n];
        for (i, ci) in c.iter_mut().enumerate() {
            for j in 0..=i {
                *ci += self.coeffs[j] * o.coeffs[i - j];
            }
        }
        Jet { coeffs: c }
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, o: &Jet) -> Jet {
        let n = self.coeffs.len().min(o.coeffs.len());
        Jet { coeffs: (0..n).map(|i| self.coeffs[i] + o.coeffs[i]).collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_of_linear_is_plane_wave() {
        let k = 1.7;
        let f = Jet::from_coeffs(vec![C64::new(0.0, 0.3), C64::new(0.0, k)], 8);
        let g = f.exp();
        for r in 0..=8 {
            let expect = C64::new(0.0, 0.3).exp() * C64::new(0.0, k).powu(r as u32);
            assert!((g.derivative(r) - expect).norm() < 1e-10);
        }
    }

    #[test]
    fn sin_power_leading_term() {
        // sin³(at) = a³t³ - (a⁵/2) t⁵ + ...
        let a = 2.0;
        let j = Jet::sin_affine(a, 0.0, 7).powi(3);
        assert!(j.coeffs[..3].iter().all(|c| c.norm() < 1e-15));
        assert!((j.coeffs[3].re - 8.0).abs() < 1e-12);
        assert!((j.coeffs[5].re + 16.0).abs() < 1e-12);
    }

    #[test]
    fn shifted_polynomial() {
        let j = Jet::polynomial(&[1.0, 0.0, 0.0, 2.0], 1.5, 4);
        // p(x) = 1 + 2x³, p(1.5)=7.75, p'=13.5, p''/2 = 9, p'''/6 = 2
        let want = [7.75, 13.5, 9.0, 2.0, 0.0];
        for (c, w) in j.coeffs.iter().zip(want) {
            assert!((c.re - w).abs() < 1e-12);
        }
    }
}
