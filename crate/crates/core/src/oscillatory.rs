//! Regularized spectral integrals ∫ e^{itμ} ψ_L(μ) g(μ) dμ.
//!
//! All integrals substitute μ = k², which makes the kernel phases e^{±ikr}
//! linear in k. Resolvent-kernel integrands are integrated on the real k axis up
//! to a point K past every stationary point, then along the ray k = K + e^{±iπ/4}y
//! where e^{itk²} decays. This avoids truncating the slowly decaying Fejér cutoff.
//! Panel layouts depend only on the integral's parameters, never on integrand
//! values, so every integral is exactly linear in its integrand.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, PI};

use num_complex::Complex64;

use crate::kernel_calculus::TransformExpr;
use crate::quad::{gk15, GaussLegendre};
use crate::resolvent::{kernel_complex, kernel_negative_energy, kernel_value, Dimension, Sign};

pub const DEFAULT_TOL: f64 = 1e-6;
pub const MAX_PANELS: usize = 200_000;

/// k·r at which even-dimension kernels switch to the large-argument expansion on the contour.
const CONTOUR_MIN_KR: f64 = 30.0;
/// Exponential decay reached at the far end of a contour or negative-energy tail.
const TAIL_DECAY: f64 = 46.0;
/// Geometric subdivisions of the first panel at k = 0.
const GRADING_LEVELS: i32 = 6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OscError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("quadrature did not converge: error estimate {error:e} after {panels} panels (partial value {partial})")]
    NonConvergence {
        partial: Complex64,
        error: f64,
        panels: usize,
    },
}

pub type Result<T> = std::result::Result<T, OscError>;

/// Fejér profile ψ(x) = (sin(x/2)/(x/2))².
pub fn fejer(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 12.0
    } else {
        let h = 0.5 * x;
        let s = h.sin() / h;
        s * s
    }
}

/// ψ at a complex argument, (2 − 2cos z)/z².
pub fn fejer_complex(z: Complex64) -> Complex64 {
    if z.norm() < 1e-4 {
        1.0 - z * z / 12.0
    } else {
        (2.0 - 2.0 * z.cos()) / (z * z)
    }
}

/// ψ̂(ξ) = ∫ψ(x)e^{−iξx}dx = 2π max(0, 1 − |ξ|).
pub fn fejer_hat(xi: f64) -> f64 {
    2.0 * PI * (1.0 - xi.abs()).max(0.0)
}

/// The dilated cutoff ψ_L(μ) = ψ(μ/L).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiCutoff {
    l: f64,
}

impl PsiCutoff {
    pub fn new(l: f64) -> Result<Self> {
        if !(l >= 1.0 && l.is_finite()) {
            return Err(OscError::Precondition(format!("L = {l} must be ≥ 1")));
        }
        Ok(PsiCutoff { l })
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn psi(&self, mu: f64) -> f64 {
        fejer(mu / self.l)
    }

    pub fn psi_complex(&self, mu: Complex64) -> Complex64 {
        fejer_complex(mu / self.l)
    }

    /// Fourier transform of ψ_L, supported in [−1/L, 1/L].
    pub fn psi_hat(&self, xi: f64) -> f64 {
        self.l * fejer_hat(self.l * xi)
    }
}

/// Parameters of one regularized spectral integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscIntegralSpec {
    pub n: Dimension,
    pub t: f64,
    pub r: f64,
    /// Second distance for products of two kernels.
    pub s: Option<f64>,
    pub l: f64,
    pub tol: f64,
    /// Divides every panel width; 1 is the default layout.
    pub refine: u32,
}

impl OscIntegralSpec {
    pub fn new(n: Dimension, t: f64, r: f64, s: Option<f64>, l: f64) -> Result<Self> {
        let spec = OscIntegralSpec {
            n,
            t,
            r,
            s,
            l,
            tol: DEFAULT_TOL,
            refine: 1,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_tol(mut self, tol: f64) -> Result<Self> {
        self.tol = tol;
        self.validate()?;
        Ok(self)
    }

    pub fn with_refine(mut self, refine: u32) -> Result<Self> {
        self.refine = refine;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if !(self.t.is_finite() && self.t != 0.0) {
            return Err(OscError::Precondition(format!("t = {} must be nonzero", self.t)));
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(OscError::Precondition(format!("r = {} must be positive", self.r)));
        }
        if let Some(s) = self.s {
            if !(s > 0.0 && s.is_finite()) {
                return Err(OscError::Precondition(format!("s = {s} must be positive")));
            }
        }
        PsiCutoff::new(self.l)?;
        if !(self.tol > 0.0) {
            return Err(OscError::Precondition("tol must be positive".into()));
        }
        if self.refine == 0 {
            return Err(OscError::Precondition("refine must be ≥ 1".into()));
        }
        Ok(())
    }

    fn psi(&self) -> PsiCutoff {
        PsiCutoff { l: self.l }
    }

    fn radius_sum(&self) -> f64 {
        self.r + self.s.unwrap_or(0.0)
    }
}

/// A computed integral with its quadrature error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralValue {
    pub value: Complex64,
    /// Sum over panels of |K15 − G7|.
    pub error: f64,
    /// Kronrod estimate of ∫|integrand|, the scale the tolerance is relative to.
    pub scale: f64,
    pub panels: usize,
}

impl SpectralValue {
    fn zero() -> Self {
        SpectralValue {
            value: Complex64::new(0.0, 0.0),
            error: 0.0,
            scale: 0.0,
            panels: 0,
        }
    }

    fn merge(self, o: SpectralValue) -> SpectralValue {
        SpectralValue {
            value: self.value + o.value,
            error: self.error + o.error,
            scale: self.scale + o.scale,
            panels: self.panels + o.panels,
        }
    }

    fn check(self, tol: f64) -> Result<SpectralValue> {
        if self.error <= tol * self.scale.max(f64::MIN_POSITIVE) {
            Ok(self)
        } else {
            Err(OscError::NonConvergence {
                partial: self.value,
                error: self.error,
                panels: self.panels,
            })
        }
    }
}

/// Panels on [a, b] with local width `width(k)`, the first one graded geometrically toward `a`.
fn layout(a: f64, b: f64, width: impl Fn(f64) -> f64, grade: bool) -> Vec<(f64, f64)> {
    layout_capped(a, b, width, grade, usize::MAX)
}

/// [`layout`], stopping once more than `cap` panels exist.
fn layout_capped(
    a: f64,
    b: f64,
    width: impl Fn(f64) -> f64,
    grade: bool,
    cap: usize,
) -> Vec<(f64, f64)> {
    let mut panels = Vec::new();
    let mut x = a;
    let mut first = true;
    while x < b && panels.len() <= cap {
        let w = width(x).max(1e-12 * (1.0 + x.abs()));
        let end = (x + w).min(b);
        let end = if b - end < 0.25 * w { b } else { end };
        if first && grade {
            let mut lo = x;
            for j in (1..=GRADING_LEVELS).rev() {
                let hi = x + (end - x) * 2f64.powi(-j);
                panels.push((lo, hi));
                lo = hi;
            }
            panels.push((lo, end));
        } else {
            panels.push((x, end));
        }
        first = false;
        x = end;
    }
    panels
}

fn integrate_panels<F: Fn(f64) -> Complex64>(panels: &[(f64, f64)], f: F) -> SpectralValue {
    let mut out = SpectralValue::zero();
    for &(a, b) in panels {
        let est = gk15(&f, a, b);
        out.value += est.value;
        out.error += est.error;
        out.scale += est.abs_value;
    }
    out.panels = panels.len();
    out
}

/// ∫₀^∞ e^{itμ}ψ_L(μ) g(μ) dμ for a general integrand, on the real k axis only.
///
/// Truncates where the Fejér envelope 4/(μ/L)² falls below tol·10⁻²; a layout
/// needing more than [`MAX_PANELS`] panels is reported as non-convergence with
/// the partial value over the first [`MAX_PANELS`] panels.
pub fn integrate_spectral(
    spec: &OscIntegralSpec,
    integrand: &dyn Fn(f64) -> Complex64,
) -> Result<SpectralValue> {
    let psi = spec.psi();
    let t = spec.t;
    let mu_max = spec.l * (400.0 / spec.tol).sqrt();
    let k_max = mu_max.sqrt();
    let c = spec.radius_sum();
    let refine = f64::from(spec.refine);
    let mut panels = layout_capped(
        0.0,
        k_max,
        |k| (PI / (2.0 * t.abs() * k + c + 2.0 * k / spec.l)).min(1.0) / refine,
        true,
        MAX_PANELS,
    );
    let truncated = panels.len() > MAX_PANELS;
    panels.truncate(MAX_PANELS);
    let f = |k: f64| {
        let mu = k * k;
        Complex64::from_polar(2.0 * k * psi.psi(mu), t * mu) * integrand(mu)
    };
    let v = integrate_panels(&panels, f);
    if truncated {
        return Err(OscError::NonConvergence {
            partial: v.value,
            error: v.error,
            panels: v.panels,
        });
    }
    v.check(spec.tol)
}

/// coeff · Π_j R^{sign_j}(k, r_j).
#[derive(Debug, Clone, PartialEq)]
pub struct KernelProduct {
    pub coeff: Complex64,
    pub factors: Vec<(Sign, f64)>,
}

impl KernelProduct {
    pub fn new(coeff: Complex64, factors: Vec<(Sign, f64)>) -> Self {
        KernelProduct { coeff, factors }
    }

    fn radius_sum(&self) -> f64 {
        self.factors.iter().map(|f| f.1).sum()
    }
}

fn eval_real(n: u32, k: f64, terms: &[KernelProduct]) -> Complex64 {
    terms
        .iter()
        .map(|p| {
            p.factors
                .iter()
                .fold(p.coeff, |acc, &(sg, r)| acc * kernel_value(sg, n, k, r))
        })
        .sum()
}

fn eval_complex(n: u32, k: Complex64, terms: &[KernelProduct]) -> Complex64 {
    terms
        .iter()
        .map(|p| {
            p.factors
                .iter()
                .fold(p.coeff, |acc, &(sg, r)| acc * kernel_complex(sg, n, k, r))
        })
        .sum()
}

fn eval_negative(n: u32, kappa: f64, terms: &[KernelProduct]) -> Complex64 {
    terms
        .iter()
        .map(|p| {
            p.factors
                .iter()
                .fold(p.coeff, |acc, &(_, r)| acc * kernel_negative_energy(n, kappa, r))
        })
        .sum()
}

/// ∫₀^∞ e^{itμ}ψ_L(μ) Σ terms dμ: real axis up to K, then the ray K + e^{±iπ/4}y.
pub fn positive_axis(
    n: Dimension,
    t: f64,
    l: f64,
    terms: &[KernelProduct],
    tol: f64,
    refine: u32,
) -> Result<SpectralValue> {
    let psi = PsiCutoff::new(l)?;
    let margin = t.abs() - 1.0 / l;
    if !(margin > 0.0) {
        return Err(OscError::Precondition(format!(
            "|t| = {} must exceed 1/L = {}",
            t.abs(),
            1.0 / l
        )));
    }
    if terms.is_empty() {
        return Ok(SpectralValue::zero());
    }
    let nn = n.get();
    let c = terms.iter().map(KernelProduct::radius_sum).fold(0.0, f64::max);
    let r_min = terms
        .iter()
        .flat_map(|p| p.factors.iter().map(|f| f.1))
        .fold(f64::INFINITY, f64::min);
    let mut k_split = (c / margin).max(1.0);
    if nn % 2 == 0 {
        k_split = k_split.max(CONTOUR_MIN_KR / r_min);
    }
    let refine = f64::from(refine.max(1));
    let width = |k: f64| (PI / (2.0 * t.abs() * k + c + 2.0 * k / l)).min(1.0) / refine;

    let real_panels = layout(0.0, k_split, width, true);
    let f_real = |k: f64| {
        let mu = k * k;
        Complex64::from_polar(2.0 * k * psi.psi(mu), t * mu) * eval_real(nn, k, terms)
    };
    let near = integrate_panels(&real_panels, f_real);

    // contour k = K + dir·y
    let dir = Complex64::from_polar(1.0, t.signum() * FRAC_PI_4);
    let a = margin * std::f64::consts::SQRT_2 * k_split - c * FRAC_1_SQRT_2;
    let b = margin;
    let y_end = (-a + (a * a + 4.0 * b * TAIL_DECAY).sqrt()) / (2.0 * b);
    let contour_panels = layout(
        0.0,
        y_end,
        |y| width(k_split + y).min(y_end / 8.0),
        false,
    );
    let f_tail = |y: f64| {
        let k = k_split + dir * y;
        let mu = k * k;
        let e = (Complex64::new(0.0, t) * mu).exp();
        e * psi.psi_complex(mu) * 2.0 * k * eval_complex(nn, k, terms) * dir
    };
    let tail = integrate_panels(&contour_panels, f_tail);
    Ok(near.merge(tail)).and_then(|v| v.check(tol))
}

/// ∫_{−∞}^0 e^{itλ}ψ_L(λ) Σ terms dλ, where both boundary values equal the real
/// negative-energy kernel.
pub fn negative_axis(
    n: Dimension,
    t: f64,
    l: f64,
    terms: &[KernelProduct],
    tol: f64,
    refine: u32,
) -> Result<SpectralValue> {
    let psi = PsiCutoff::new(l)?;
    if terms.is_empty() {
        return Ok(SpectralValue::zero());
    }
    let c_min = terms
        .iter()
        .map(KernelProduct::radius_sum)
        .fold(f64::INFINITY, f64::min);
    let k_max = TAIL_DECAY / c_min;
    let refine = f64::from(refine.max(1));
    let panels = layout(
        0.0,
        k_max,
        |k| {
            (PI / (2.0 * t.abs() * k + 2.0 * k / l + 1e-300))
                .min(1.0)
                .min(k_max / 16.0)
                / refine
        },
        true,
    );
    let nn = n.get();
    let f = |k: f64| {
        let mu = k * k;
        Complex64::from_polar(2.0 * k * psi.psi(mu), -t * mu) * eval_negative(nn, k, terms)
    };
    integrate_panels(&panels, f).check(tol)
}

fn full_line(spec: &OscIntegralSpec, terms: &[KernelProduct]) -> Result<SpectralValue> {
    let pos = positive_axis(spec.n, spec.t, spec.l, terms, spec.tol, spec.refine)?;
    let neg = negative_axis(spec.n, spec.t, spec.l, terms, spec.tol, spec.refine)?;
    Ok(pos.merge(neg))
}

/// ∫_ℝ e^{itλ}ψ_L(λ) R_n^{sign}(λ, r) dλ over the whole spectral line.
pub fn transform_single_signed(sign: Sign, spec: &OscIntegralSpec) -> Result<SpectralValue> {
    let terms = [KernelProduct::new(Complex64::new(1.0, 0.0), vec![(sign, spec.r)])];
    full_line(spec, &terms)
}

/// ∫ e^{itλ}ψ_L(λ) R_n⁻(λ, r) dλ, which tends to −2πi(−4πit)^{−n/2}e^{−ir²/(4t)} for t > 0
/// and to 0 for t < 0 as L → ∞.
pub fn transform_single(n: Dimension, t: f64, r: f64, l: f64) -> Result<SpectralValue> {
    transform_single_signed(Sign::Minus, &OscIntegralSpec::new(n, t, r, None, l)?)
}

/// The same transform from positive energies only, as ∫₀^∞ e^{itμ}ψ_L(R⁻ − R⁺)dμ.
/// Agrees with [`transform_single`] for t > 1/L because the R⁺ transform vanishes there.
pub fn transform_single_difference(n: Dimension, t: f64, r: f64, l: f64) -> Result<SpectralValue> {
    let spec = OscIntegralSpec::new(n, t, r, None, l)?;
    if t <= 1.0 / l {
        return Err(OscError::Precondition("t must exceed 1/L".into()));
    }
    let terms = [
        KernelProduct::new(Complex64::new(1.0, 0.0), vec![(Sign::Minus, r)]),
        KernelProduct::new(Complex64::new(-1.0, 0.0), vec![(Sign::Plus, r)]),
    ];
    positive_axis(spec.n, t, l, &terms, spec.tol, spec.refine)
}

/// ∫_ℝ e^{itλ}ψ_L(λ) R_n^{sign}(λ, r) R_n^{sign}(λ, s) dλ.
pub fn transform_product_signed(sign: Sign, spec: &OscIntegralSpec) -> Result<SpectralValue> {
    let s = spec
        .s
        .ok_or_else(|| OscError::Precondition("product transform needs s".into()))?;
    let terms = [KernelProduct::new(
        Complex64::new(1.0, 0.0),
        vec![(sign, spec.r), (sign, s)],
    )];
    full_line(spec, &terms)
}

/// ∫_ℝ e^{itλ}ψ_L(λ) R_n⁻(λ, r) R_n⁻(λ, s) dλ, the regularized product transform.
pub fn transform_product(spec: &OscIntegralSpec) -> Result<SpectralValue> {
    transform_product_signed(Sign::Minus, spec)
}

/// I_L(t, r, s) = ∫₀^∞ e^{itμ}ψ_L(μ)[R⁺(μ,r)R⁺(μ,s) − R⁻(μ,r)R⁻(μ,s)]dμ, the
/// integrand being 2i·Im(R⁺R⁺) on the real axis. Requires t > 1/L.
pub fn i_l_spec(spec: &OscIntegralSpec) -> Result<SpectralValue> {
    let s = spec
        .s
        .ok_or_else(|| OscError::Precondition("I_L needs s".into()))?;
    if spec.t <= 1.0 / spec.l {
        return Err(OscError::Precondition(format!(
            "t = {} must exceed 1/L = {}",
            spec.t,
            1.0 / spec.l
        )));
    }
    let terms = [
        KernelProduct::new(
            Complex64::new(1.0, 0.0),
            vec![(Sign::Plus, spec.r), (Sign::Plus, s)],
        ),
        KernelProduct::new(
            Complex64::new(-1.0, 0.0),
            vec![(Sign::Minus, spec.r), (Sign::Minus, s)],
        ),
    ];
    positive_axis(spec.n, spec.t, spec.l, &terms, spec.tol, spec.refine)
}

/// [`i_l_spec`] with default tolerance.
pub fn i_l(n: Dimension, t: f64, r: f64, s: f64, l: f64) -> Result<SpectralValue> {
    i_l_spec(&OscIntegralSpec::new(n, t, r, Some(s), l)?)
}

/// Stone formula for the free propagator kernel: (1/π)∫₀^∞ e^{itμ}ψ_L(μ) Im R⁺(μ, r) dμ,
/// with Im R⁺ = (R⁺ − R⁻)/(2i).
pub fn stone_free_kernel(n: Dimension, t: f64, r: f64, l: f64) -> Result<SpectralValue> {
    let spec = OscIntegralSpec::new(n, t, r, None, l)?;
    let c = Complex64::new(0.0, -0.5 / PI);
    let terms = [
        KernelProduct::new(c, vec![(Sign::Plus, r)]),
        KernelProduct::new(-c, vec![(Sign::Minus, r)]),
    ];
    positive_axis(n, t, l, &terms, spec.tol, spec.refine)
}

/// −2πi(−4πit)^{−n/2}e^{−ir²/(4t)}, the L → ∞ limit of [`transform_single`] for t > 0.
pub fn transform_single_limit(n: Dimension, t: f64, r: f64) -> Complex64 {
    let p = crate::kernel_calculus::BranchConvention::pow(t, -f64::from(n.get()) / 2.0);
    Complex64::new(0.0, -2.0 * PI) * p * Complex64::from_polar(1.0, -r * r / (4.0 * t))
}

/// The closed form convolved in t with the cutoff's Fourier transform:
/// ∫ (L/2π)ψ̂(Lτ)·T(t + τ) dτ over |τ| ≤ 1/L. This is what a ψ_L-regularized
/// integral of R⁻R⁻ approximates at finite L. Requires t > 1/L.
pub fn smoothed_transform(expr: &TransformExpr, r: f64, s: f64, t: f64, l: f64) -> Result<Complex64> {
    if t <= 1.0 / l {
        return Err(OscError::Precondition("t must exceed 1/L".into()));
    }
    let gl = GaussLegendre::new(48);
    let mut acc = Complex64::new(0.0, 0.0);
    for (lo, hi) in [(-1.0, 0.0), (0.0, 1.0)] {
        for (u, w) in gl.mapped(lo, hi) {
            let weight = 1.0 - f64::abs(u);
            let v = expr
                .eval(r, s, t + u / l)
                .map_err(|e| OscError::Precondition(e.to_string()))?;
            acc += v * (weight * w);
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fejer_values() {
        assert_eq!(fejer(0.0), 1.0);
        assert!(fejer(2.0 * PI).abs() < 1e-30);
        assert!((fejer(1.0) - 0.919_395_388_7).abs() < 1e-9);
        let z = Complex64::new(1.3, 0.7);
        let direct = {
            let h = z / 2.0;
            let s = h.sin() / h;
            s * s
        };
        assert!((fejer_complex(z) - direct).norm() < 1e-14);
    }

    #[test]
    fn layout_covers_interval() {
        let p = layout(0.0, 10.0, |_| 0.7, true);
        assert_eq!(p.first().unwrap().0, 0.0);
        assert_eq!(p.last().unwrap().1, 10.0);
        for w in p.windows(2) {
            assert_eq!(w[0].1, w[1].0);
        }
    }

    #[test]
    fn psi_cutoff_rejects_small_l() {
        assert!(PsiCutoff::new(0.5).is_err());
        assert!(PsiCutoff::new(1.0).is_ok());
    }
}
