use crate::numerics::{gauss_legendre, integrate_pieces, EdgePiece, GaussLegendre, Jet, SampledComplexFunction};
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;
use statrs::function::gamma::gamma;
use std::f64::consts::{PI, SQRT_2};
use std::sync::OnceLock;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlitKind {
    Narrow,
    Rectangular,
    CosinePower,
}

/// Twin-slit geometry; slits centred at ±s/2.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlitSpec {
    pub kind: SlitKind,
    pub s: f64,
    pub w: f64,
    pub n: u32,
    pub sigma_slit: f64,
}

impl SlitSpec {
    pub fn narrow(s: f64, sigma_slit: f64) -> Self {
        SlitSpec { kind: SlitKind::Narrow, s, w: 0.0, n: 0, sigma_slit }
    }

    pub fn rectangular(s: f64, w: f64) -> Self {
        SlitSpec { kind: SlitKind::Rectangular, s, w, n: 0, sigma_slit: 0.0 }
    }

    pub fn cosine(s: f64, w: f64) -> Self {
        Self::cosine_power(s, w, 1)
    }

    pub fn cosine_power(s: f64, w: f64, n: u32) -> Self {
        SlitSpec { kind: SlitKind::CosinePower, s, w, n, sigma_slit: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s > 0.0 && self.s.is_finite()) {
            return Err(Error::Construction(format!("slit separation must be positive, got {}", self.s)));
        }
        if self.w < 0.0 || !self.w.is_finite() {
            return Err(Error::Construction(format!("slit width must be nonnegative, got {}", self.w)));
        }
        if self.w >= self.s {
            return Err(Error::Construction(format!("slits overlap: w = {} ≥ s = {}", self.w, self.s)));
        }
        match self.kind {
            SlitKind::Narrow if !(self.sigma_slit > 0.0) => {
                Err(Error::Construction("narrow slits need sigma_slit > 0".into()))
            }
            SlitKind::Rectangular | SlitKind::CosinePower if self.w <= 0.0 => {
                Err(Error::Construction("finite slits need w > 0".into()))
            }
            _ => Ok(()),
        }
    }

    /// Power m of the single-slit probability profile cos^m(πy/w).
    pub fn density_power(&self) -> u32 {
        match self.kind {
            SlitKind::CosinePower => 2 * self.n,
            _ => 0,
        }
    }
}

#[derive(Clone, Debug)]
enum Repr {
    Slits(SlitSpec),
    Tabulated(SampledComplexFunction),
}

/// Initial transverse state ψ_i(x).
#[derive(Clone, Debug)]
pub struct Wavefunction {
    repr: Repr,
    /// ∫|unnormalized ψ|² dx, computed numerically.
    pub norm_constant: f64,
    /// ∫|ψ|² dx after normalization.
    pub norm_check: f64,
    pub hbar: f64,
}

const NARROW_CUT: f64 = 12.0;

pub(crate) fn rule() -> &'static GaussLegendre {
    static R: OnceLock<GaussLegendre> = OnceLock::new();
    R.get_or_init(|| gauss_legendre(16))
}

/// ε(x) with ε² the normal density of width σ.
fn eps(x: f64, sigma: f64) -> f64 {
    (2.0 * PI * sigma * sigma).powf(-0.25) * (-x * x / (4.0 * sigma * sigma)).exp()
}

/// Normalized twin-slit state, ħ = 1.
pub fn build_state(spec: &SlitSpec) -> Result<Wavefunction> {
    Wavefunction::new(spec, 1.0)
}

impl Wavefunction {
    pub fn new(spec: &SlitSpec, hbar: f64) -> Result<Self> {
        spec.validate()?;
        let mut wf = Wavefunction { repr: Repr::Slits(*spec), norm_constant: 1.0, norm_check: 0.0, hbar };
        let raw: f64 = wf.integrate_support(&[], 8, |x| C64::new(wf.raw_amplitude(x).norm_sqr(), 0.0)).re;
        wf.norm_constant = raw;
        wf.norm_check = wf.integrate_support(&[], 8, |x| C64::new(wf.density(x), 0.0)).re;
        Ok(wf)
    }

    /// State given by samples; zero outside the grid. Normalized numerically.
    pub fn tabulated(samples: SampledComplexFunction, hbar: f64) -> Result<Self> {
        if !samples.all_finite() {
            return Err(Error::Construction("tabulated state has non-finite samples".into()));
        }
        let raw = samples.values.iter().map(|v| C64::new(v.norm_sqr(), 0.0)).collect();
        let n = crate::numerics::Sampled { grid: samples.grid, values: raw }
            .integrate(samples.grid.x_min, samples.grid.x_max)?
            .re;
        if !(n > 0.0) {
            return Err(Error::Construction("tabulated state has zero norm".into()));
        }
        let mut wf = Wavefunction { repr: Repr::Tabulated(samples), norm_constant: n, norm_check: 0.0, hbar };
        wf.norm_check = wf.integrate_support(&[], 64, |x| C64::new(wf.density(x), 0.0)).re;
        Ok(wf)
    }

    pub fn with_hbar(mut self, hbar: f64) -> Self {
        self.hbar = hbar;
        self
    }

    pub fn spec(&self) -> Option<&SlitSpec> {
        match &self.repr {
            Repr::Slits(s) => Some(s),
            Repr::Tabulated(_) => None,
        }
    }

    pub fn separation(&self) -> Option<f64> {
        self.spec().map(|s| s.s)
    }

    /// The paper's closed-form constant (4w/√π)Γ(1/2+n)/Γ(1+n) for cosⁿ
    /// states, reported next to the numerical one.
    pub fn paper_norm_constant(&self) -> Option<f64> {
        let s = self.spec()?;
        (s.kind == SlitKind::CosinePower)
            .then(|| 4.0 * s.w / PI.sqrt() * gamma(0.5 + s.n as f64) / gamma(1.0 + s.n as f64))
    }

    fn centres(s: &SlitSpec) -> [f64; 2] {
        [-0.5 * s.s, 0.5 * s.s]
    }

    fn raw_amplitude(&self, x: f64) -> C64 {
        match &self.repr {
            Repr::Slits(s) => {
                let v: f64 = Self::centres(s)
                    .iter()
                    .map(|c| {
                        let y = x - c;
                        match s.kind {
                            SlitKind::Narrow => eps(y, s.sigma_slit),
                            _ if y.abs() > 0.5 * s.w => 0.0,
                            SlitKind::Rectangular => 1.0,
                            SlitKind::CosinePower => (PI * y / s.w).cos().powi(s.n as i32),
                        }
                    })
                    .sum();
                C64::new(v, 0.0)
            }
            Repr::Tabulated(t) => t.interpolate(x).unwrap_or_default(),
        }
    }

    pub fn amplitude(&self, x: f64) -> C64 {
        self.raw_amplitude(x) / self.norm_constant.sqrt()
    }

    pub fn density(&self, x: f64) -> f64 {
        self.amplitude(x).norm_sqr()
    }

    /// Closed intervals carrying the support, each smooth inside.
    pub fn pieces(&self) -> Vec<(f64, f64)> {
        match &self.repr {
            Repr::Slits(s) => {
                let h = match s.kind {
                    SlitKind::Narrow => NARROW_CUT * s.sigma_slit,
                    _ => 0.5 * s.w,
                };
                Self::centres(s).iter().map(|c| (c - h, c + h)).collect()
            }
            Repr::Tabulated(t) => vec![(t.grid.x_min, t.grid.x_max)],
        }
    }

    /// Whether the pieces end in genuine discontinuities of some derivative.
    pub fn has_edges(&self) -> bool {
        matches!(&self.repr, Repr::Slits(s) if s.kind != SlitKind::Narrow)
    }

    /// Taylor jet of ψ at `x` using the smooth branch of the piece with
    /// index `piece`; `None` for tabulated states.
    pub fn jet_in_piece(&self, piece: usize, x: f64, order: usize) -> Option<Jet> {
        let Repr::Slits(s) = &self.repr else { return None };
        let c = Self::centres(s)[piece];
        let y = x - c;
        let nrm = 1.0 / self.norm_constant.sqrt();
        let j = match s.kind {
            SlitKind::Narrow => {
                let sg2 = 4.0 * s.sigma_slit * s.sigma_slit;
                let lead = (2.0 * PI * s.sigma_slit * s.sigma_slit).powf(-0.25) * nrm;
                // exp(-(y + t)²/4σ²)
                let e = Jet::from_coeffs(
                    vec![C64::new(-y * y / sg2, 0.0), C64::new(-2.0 * y / sg2, 0.0), C64::new(-1.0 / sg2, 0.0)],
                    order,
                );
                let y2 = x - Self::centres(s)[1 - piece];
                let e2 = Jet::from_coeffs(
                    vec![C64::new(-y2 * y2 / sg2, 0.0), C64::new(-2.0 * y2 / sg2, 0.0), C64::new(-1.0 / sg2, 0.0)],
                    order,
                );
                (&e.exp() + &e2.exp()).scale(C64::new(lead, 0.0))
            }
            SlitKind::Rectangular => Jet::constant(C64::new(nrm, 0.0), order),
            SlitKind::CosinePower => {
                let a = PI / s.w;
                Jet::sin_affine(a, a * y + 0.5 * PI, order).powi(s.n).scale(C64::new(nrm, 0.0))
            }
        };
        Some(j)
    }

    /// Jet of ψ at an interior point, picking the piece containing `x`.
    pub fn jet(&self, x: f64, order: usize) -> Option<Jet> {
        let idx = self.pieces().iter().position(|(a, b)| x >= *a && x <= *b)?;
        self.jet_in_piece(idx, x, order)
    }

    /// Edge data for tail expansions of ∫ g(x)·h(x) e^{-ixp/ħ} dx where
    /// `g_jet(x, order)` supplies the other factor. `power` selects
    /// h = ψ (1) or h = |ψ|² (2). Empty when the state has no edges.
    pub fn edge_pieces(
        &self,
        power: u32,
        order: usize,
        g_jet: impl Fn(f64, usize) -> Jet,
    ) -> Vec<EdgePiece> {
        if !self.has_edges() {
            return Vec::new();
        }
        self.pieces()
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| {
                let mk = |x: f64| {
                    let psi = self.jet_in_piece(i, x, order).expect("slit state");
                    let h = if power == 2 { &psi * &psi.conj() } else { psi };
                    &h * &g_jet(x, order)
                };
                EdgePiece { a, b, jet_a: mk(a), jet_b: mk(b) }
            })
            .collect()
    }

    /// ∫ f(x) dx over the support pieces, split at `breaks`, with `panels`
    /// Gauss panels per sub-interval.
    pub fn integrate_support(&self, breaks: &[f64], panels: usize, f: impl Fn(f64) -> C64) -> C64 {
        let mut total = C64::new(0.0, 0.0);
        for (a, b) in self.pieces() {
            let mut bps = vec![a, b];
            bps.extend(breaks.iter().copied().filter(|x| *x > a && *x < b));
            total += integrate_pieces(rule(), &bps, panels, &f);
        }
        total
    }

    /// ⟨f⟩ = ∫|ψ|² f dx.
    pub fn expect(&self, breaks: &[f64], f: impl Fn(f64) -> C64) -> C64 {
        self.integrate_support(breaks, 8, |x| f(x) * self.density(x))
    }

    /// Probability in [a, b].
    pub fn prob_mass(&self, a: f64, b: f64) -> f64 {
        if let Repr::Slits(s) = &self.repr {
            if s.kind == SlitKind::Narrow {
                let sg = s.sigma_slit;
                let cdf = |x: f64, m: f64| 0.5 * (1.0 + erf((x - m) / (SQRT_2 * sg)));
                let mass = |m: f64| cdf(b, m) - cdf(a, m);
                let cross = 2.0 * (-s.s * s.s / (8.0 * sg * sg)).exp() * mass(0.0);
                return (mass(-0.5 * s.s) + mass(0.5 * s.s) + cross) / self.norm_constant;
            }
        }
        let mut total = 0.0;
        for (lo, hi) in self.pieces() {
            let (l, h) = (lo.max(a), hi.min(b));
            if h > l {
                total += integrate_pieces(rule(), &[l, h], 8, |x: f64| self.density(x));
            }
        }
        total
    }

    /// ∫ψ*(x)ψ(x + shift) dx.
    pub fn overlap(&self, shift: f64) -> C64 {
        let breaks: Vec<f64> = self.pieces().iter().flat_map(|(a, b)| [a - shift, b - shift]).collect();
        self.integrate_support(&breaks, 8, |x| self.amplitude(x).conj() * self.amplitude(x + shift))
    }

    /// (2πħ)^{-1/2} ∫ g(x) ψ(x) e^{-ixp/ħ} dx (or with |ψ|² when
    /// `power == 2`), by piecewise Gauss–Legendre.
    pub fn transform_with(&self, p: f64, power: u32, g: impl Fn(f64) -> C64) -> C64 {
        let norm = 1.0 / (2.0 * PI * self.hbar).sqrt();
        let mut total = C64::new(0.0, 0.0);
        for (a, b) in self.pieces() {
            let base = match &self.repr {
                Repr::Slits(s) if s.kind == SlitKind::Narrow => 6,
                Repr::Tabulated(t) => t.grid.n_points / 4 + 1,
                _ => 4,
            };
            let osc = ((p.abs() * (b - a) / self.hbar) / 3.0).ceil() as usize;
            let panels = base + osc;
            total += integrate_pieces(rule(), &[a, b], panels, |x: f64| {
                let amp = self.amplitude(x);
                let h = if power == 2 { C64::new(amp.norm_sqr(), 0.0) } else { amp };
                h * g(x) * C64::new(0.0, -x * p / self.hbar).exp()
            });
        }
        total * norm
    }

    /// ψ̃(p).
    pub fn momentum_amplitude(&self, p: f64) -> C64 {
        self.transform_with(p, 1, |_| C64::new(1.0, 0.0))
    }

    /// Half-width of a momentum window holding essentially all of P_i.
    pub fn momentum_reach(&self) -> f64 {
        match &self.repr {
            Repr::Slits(s) if s.kind == SlitKind::Narrow => 7.0 * self.hbar / s.sigma_slit,
            Repr::Slits(s) => {
                let scale = s.s.min(s.w.max(1e-300));
                let rate = (2 * s.n + 2) as f64 * PI / s.w;
                (40.0 * self.hbar / s.s).max(3.0 * self.hbar * rate).max(4.0 * PI * self.hbar / scale)
            }
            Repr::Tabulated(t) => PI * self.hbar / t.grid.spacing(),
        }
    }

    /// Largest derivative growth rate of the profile at its edges, used to
    /// choose where edge expansions become accurate.
    pub fn edge_rate(&self) -> f64 {
        match &self.repr {
            Repr::Slits(s) if s.kind != SlitKind::Narrow => (2 * s.n + 2) as f64 * PI / s.w,
            _ => 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rectangular_is_normalized() {
        let wf = build_state(&SlitSpec::rectangular(1.0, 0.5)).unwrap();
        assert!((wf.norm_check - 1.0).abs() < 1e-12);
        assert!((wf.amplitude(0.5).re - 1.0).abs() < 1e-12);
        assert!((wf.norm_constant - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cos_zero_is_rectangular() {
        let a = build_state(&SlitSpec::rectangular(1.0, 0.4)).unwrap();
        let b = build_state(&SlitSpec::cosine_power(1.0, 0.4, 0)).unwrap();
        for i in 0..200 {
            let x = -1.0 + i as f64 * 0.01;
            assert!((a.amplitude(x) - b.amplitude(x)).norm() < 1e-14);
        }
    }

    #[test]
    fn cos_power_normalization_constants() {
        for n in 0..5u32 {
            let wf = build_state(&SlitSpec::cosine_power(1.0, 0.5, n)).unwrap();
            let closed = 2.0 * 0.5 / PI.sqrt() * gamma(0.5 + n as f64) / gamma(1.0 + n as f64);
            assert!((wf.norm_constant - closed).abs() < 1e-12, "n={n}");
            assert!((wf.paper_norm_constant().unwrap() / wf.norm_constant - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn narrow_overlap_is_half() {
        let s = 1.0;
        let wf = build_state(&SlitSpec::narrow(s, s / 200.0)).unwrap();
        assert!((wf.norm_check - 1.0).abs() < 1e-9);
        // oracle: Gaussian overlap ∫ε(x)ε(x-s)... gives e^{-s²/8σ²}; ψ = (ε₋+ε₊)/√N
        let n_exact = 2.0 + 2.0 * (-s * s / (8.0 * (s / 200.0f64).powi(2))).exp();
        assert!((wf.norm_constant - n_exact).abs() < 1e-9);
        assert!((wf.overlap(s).re - 0.5).abs() < 1e-4);
    }

    #[test]
    fn narrow_prob_mass_matches_quadrature() {
        let wf = build_state(&SlitSpec::narrow(1.0, 0.02)).unwrap();
        let a = wf.prob_mass(-0.51, 0.47);
        let b = integrate_pieces(rule(), &[-0.51, -0.5, 0.47], 40, |x: f64| wf.density(x));
        assert!((a - b).abs() < 1e-10);
        assert!((wf.prob_mass(-10.0, 10.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn overlapping_slits_are_rejected() {
        assert!(build_state(&SlitSpec::rectangular(1.0, 1.0)).is_err());
        assert!(build_state(&SlitSpec::narrow(1.0, 0.0)).is_err());
        assert!(build_state(&SlitSpec::rectangular(-1.0, 0.2)).is_err());
    }

    #[test]
    fn jets_match_finite_differences() {
        for spec in [SlitSpec::narrow(1.0, 0.05), SlitSpec::cosine_power(1.0, 0.5, 3)] {
            let wf = build_state(&spec).unwrap();
            let x = 0.43;
            let j = wf.jet(x, 3).unwrap();
            let h = 1e-4;
            let d1 = (wf.amplitude(x + h) - wf.amplitude(x - h)) / (2.0 * h);
            let d2 = (wf.amplitude(x + h) - wf.amplitude(x) * 2.0 + wf.amplitude(x - h)) / (h * h);
            assert!((j.derivative(0) - wf.amplitude(x)).norm() < 1e-12);
            assert!((j.derivative(1) - d1).norm() < 1e-5 * (1.0 + d1.norm()));
            assert!((j.derivative(2) - d2).norm() < 1e-3 * (1.0 + d2.norm()));
        }
    }

    #[test]
    fn gaussian_momentum_amplitude_matches_closed_form() {
        let sg = 0.01;
        let wf = build_state(&SlitSpec::narrow(1.0, sg)).unwrap();
        for p in [0.0, 3.0, 57.0, 180.0] {
            // each slit: e^{-icp}(2πσ²)^{-1/4}(2π)^{-1/2}√(4πσ²)e^{-σ²p²}
            let g = (2.0 * PI * sg * sg).powf(-0.25) / (2.0 * PI).sqrt() * (4.0 * PI * sg * sg).sqrt()
                * (-sg * sg * p * p).exp();
            let exact = C64::new(2.0 * g * (0.5 * p).cos() / wf.norm_constant.sqrt(), 0.0);
            assert!((wf.momentum_amplitude(p) - exact).norm() < 1e-10, "p={p}");
        }
    }
}
