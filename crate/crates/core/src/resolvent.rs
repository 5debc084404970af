//! Free resolvent kernels R₀^±(k², r) in any dimension n ≥ 2, their imaginary
//! parts, the scaling identity, symbol envelopes, and the weighted convolution
//! integral ∫ ⟨y⟩^{−σ} |x−y|^{−μ} dy.

use std::f64::consts::PI;

use num_complex::Complex64;
use statrs::function::gamma::gamma;

use crate::quad::{adaptive, GaussLegendre};
use crate::specfun::{self, HankelKind, Order};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ResolventError {
    #[error("dimension {0} is not supported (n ≥ 2 required)")]
    Dimension(u32),
    #[error("{what} = {value} is outside the domain")]
    Domain { what: &'static str, value: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, ResolventError>;

/// Spatial dimension n ≥ 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Dimension(u32);

impl Dimension {
    pub fn new(n: u32) -> Result<Self> {
        if n >= 2 {
            Ok(Dimension(n))
        } else {
            Err(ResolventError::Dimension(n))
        }
    }

    pub fn get(self) -> u32 {
        self.0
    }

    /// Hankel order ν = n/2 − 1 of the kernel.
    pub fn order(self) -> Order {
        Order::for_dimension(self.0)
    }
}

/// Boundary value of the resolvent: `Plus` is R₀(λ + i0), `Minus` is R₀(λ − i0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

/// A point on the positive spectrum, stored both as energy μ and wavenumber k = √μ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPoint {
    mu: f64,
    k: f64,
}

impl SpectralPoint {
    pub fn from_energy(mu: f64) -> Result<Self> {
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(ResolventError::Domain { what: "energy", value: mu });
        }
        Ok(SpectralPoint { mu, k: mu.sqrt() })
    }

    pub fn from_wavenumber(k: f64) -> Result<Self> {
        if !(k >= 0.0 && k.is_finite()) {
            return Err(ResolventError::Domain { what: "wavenumber", value: k });
        }
        Ok(SpectralPoint { mu: k * k, k })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn k(&self) -> f64 {
        self.k
    }
}

/// R₀^±(k², r) = ±(i/4)(k/(2πr))^ν H^{(1|2)}_ν(kr), ν = n/2 − 1.
pub fn free_kernel(sign: Sign, n: Dimension, p: SpectralPoint, r: f64) -> Result<Complex64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(ResolventError::Domain { what: "r", value: r });
    }
    if p.k == 0.0 {
        if n.get() <= 2 {
            return Err(ResolventError::Domain { what: "k", value: 0.0 });
        }
        return Ok(Complex64::new(zero_energy_kernel(n.get(), r), 0.0));
    }
    Ok(kernel_value(sign, n.get(), p.k, r))
}

/// Γ(n/2 − 1) / (4 π^{n/2} r^{n−2}), the k → 0 limit for n ≥ 3.
fn zero_energy_kernel(n: u32, r: f64) -> f64 {
    let nf = f64::from(n);
    gamma(nf / 2.0 - 1.0) / (4.0 * PI.powf(nf / 2.0) * r.powi(n as i32 - 2))
}

/// Kernel at real k > 0 and r > 0 without argument checks.
pub fn kernel_value(sign: Sign, n: u32, k: f64, r: f64) -> Complex64 {
    let plus = match n {
        2 => Complex64::new(0.0, 0.25) * specfun::hankel1_unchecked(Order::ZERO, k * r),
        3 => Complex64::from_polar(1.0 / (4.0 * PI * r), k * r),
        _ => {
            let nu = Order::for_dimension(n);
            let pre = 0.25 * (k / (2.0 * PI * r)).powf(nu.value());
            Complex64::new(0.0, pre) * specfun::hankel1_unchecked(nu, k * r)
        }
    };
    match sign {
        Sign::Plus => plus,
        Sign::Minus => plus.conj(),
    }
}

/// Analytic continuation of the kernel to complex k near the positive real axis,
/// through the large-argument Hankel expansion (exact for odd n). For even n the
/// caller must keep |k r| large.
pub fn kernel_complex(sign: Sign, n: u32, k: Complex64, r: f64) -> Complex64 {
    if n == 3 {
        let phase = match sign {
            Sign::Plus => Complex64::new(0.0, r) * k,
            Sign::Minus => Complex64::new(0.0, -r) * k,
        };
        return phase.exp() / (4.0 * PI * r);
    }
    let nu = Order::for_dimension(n);
    let pre = (k / (2.0 * PI * r)).powf(nu.value()) * 0.25;
    match sign {
        Sign::Plus => {
            Complex64::new(0.0, 1.0) * pre * specfun::hankel_asymptotic(HankelKind::First, nu, k * r)
        }
        Sign::Minus => {
            Complex64::new(0.0, -1.0)
                * pre
                * specfun::hankel_asymptotic(HankelKind::Second, nu, k * r)
        }
    }
}

/// Kernel at negative energy −κ², where both boundary values coincide:
/// R₀(−κ², r) = (2π)^{−n/2}(κ/r)^ν K_ν(κr).
pub fn kernel_negative_energy(n: u32, kappa: f64, r: f64) -> f64 {
    if n == 3 {
        return (-kappa * r).exp() / (4.0 * PI * r);
    }
    let nu = Order::for_dimension(n);
    let nf = f64::from(n);
    let kv = specfun::bessel_k(nu, kappa * r).unwrap_or(0.0);
    (2.0 * PI).powf(-nf / 2.0) * (kappa / r).powf(nu.value()) * kv
}

/// The constant c_n in Im R₀⁺ = c_n k^{n−2}(kr)^{(2−n)/2}J_{(n−2)/2}(kr), equal to (2π)^{1−n/2}/4.
pub fn im_kernel_bessel_constant(n: Dimension) -> f64 {
    0.25 * (2.0 * PI).powf(1.0 - f64::from(n.get()) / 2.0)
}

/// Im R₀⁺(k², r), evaluated through the Bessel form so it stays smooth as r → 0.
pub fn im_kernel(n: Dimension, p: SpectralPoint, r: f64) -> Result<f64> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(ResolventError::Domain { what: "r", value: r });
    }
    let nu = n.order();
    let scaled = specfun::besselj_scaled(nu, p.k * r)
        .map_err(|_| ResolventError::Domain { what: "k·r", value: p.k * r })?;
    Ok(im_kernel_bessel_constant(n) * p.k.powf(2.0 * nu.value()) * scaled)
}

/// Relative defect of λ^{n−2} R₀⁺(1, λr) = R₀⁺(λ², r).
pub fn check_scaling(n: Dimension, lam: f64, r: f64) -> Result<f64> {
    if !(lam > 0.0 && r > 0.0) {
        return Err(ResolventError::Precondition("λ and r must be positive".into()));
    }
    let lhs = lam.powi(n.get() as i32 - 2) * kernel_value(Sign::Plus, n.get(), 1.0, lam * r);
    let rhs = kernel_value(Sign::Plus, n.get(), lam, r);
    Ok((lhs - rhs).norm() / rhs.norm())
}

/// Bounds c_k x^{i−k} on (0, 1] and c_k x^{j−k} on (1, ∞) for the k-th derivative
/// of a symbol in the class S^{i,j}.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolEnvelope {
    pub i: f64,
    pub j: f64,
    pub c: Vec<f64>,
}

impl SymbolEnvelope {
    pub fn new(i: f64, j: f64, c: Vec<f64>) -> Result<Self> {
        if c.is_empty() || c.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(ResolventError::Precondition(
                "envelope constants must be positive".into(),
            ));
        }
        Ok(SymbolEnvelope { i, j, c })
    }

    /// Envelope of the class S^{0,(n−3)/2} holding the free kernel times r^{n−2}.
    pub fn free_kernel_class(n: Dimension, c0: f64) -> Result<Self> {
        Self::new(0.0, (f64::from(n.get()) - 3.0) / 2.0, vec![c0])
    }

    /// Value of the bound for the `k`-th derivative at `x > 0`.
    pub fn eval(&self, x: f64, k: usize) -> f64 {
        let ck = self.c[k.min(self.c.len() - 1)];
        let kf = k as f64;
        if x <= 1.0 {
            ck * x.powf(self.i - kf)
        } else {
            ck * x.powf(self.j - kf)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeReport {
    /// max over samples of |R₀⁺| r^{n−2} / envelope(kr).
    pub max_ratio: f64,
    /// (k, r) at the maximum.
    pub argmax: (f64, f64),
    pub samples: usize,
    pub within: bool,
}

/// Compares |R₀⁺(k², r)| r^{n−2} against `env(kr, 0)` on the given (k, r) samples.
pub fn check_envelope(
    n: Dimension,
    env: &SymbolEnvelope,
    samples: &[(f64, f64)],
) -> Result<EnvelopeReport> {
    let mut max_ratio = 0.0;
    let mut argmax = (f64::NAN, f64::NAN);
    for &(k, r) in samples {
        let x = k * r;
        if !(x > 0.0 && x <= 1e3) || r <= 0.0 {
            return Err(ResolventError::Precondition(format!(
                "sample (k={k}, r={r}) has k·r outside (0, 1e3]"
            )));
        }
        let v = kernel_value(Sign::Plus, n.get(), k, r).norm() * r.powi(n.get() as i32 - 2);
        let ratio = v / env.eval(x, 0);
        if ratio > max_ratio {
            max_ratio = ratio;
            argmax = (k, r);
        }
    }
    Ok(EnvelopeReport {
        max_ratio,
        argmax,
        samples: samples.len(),
        within: max_ratio <= 1.0,
    })
}

/// Envelope constant c₀ set to 1.5 times the largest observed ratio.
pub fn calibrate_envelope(n: Dimension, samples: &[(f64, f64)]) -> Result<SymbolEnvelope> {
    let unit = SymbolEnvelope::free_kernel_class(n, 1.0)?;
    let report = check_envelope(n, &unit, samples)?;
    SymbolEnvelope::free_kernel_class(n, 1.5 * report.max_ratio)
}

/// Parameters of ∫_{ℝⁿ} ⟨y⟩^{−σ} |x−y|^{−μ} dy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EasylemParams {
    n: Dimension,
    sigma: f64,
    mu_exp: f64,
}

impl EasylemParams {
    pub fn new(n: Dimension, sigma: f64, mu_exp: f64) -> Result<Self> {
        let nf = f64::from(n.get());
        if !(mu_exp >= 0.0 && mu_exp < nf) {
            return Err(ResolventError::Precondition(format!(
                "μ = {mu_exp} must satisfy 0 ≤ μ < n = {nf}"
            )));
        }
        if sigma + mu_exp <= nf {
            return Err(ResolventError::Precondition(format!(
                "σ + μ = {} must exceed n = {nf}",
                sigma + mu_exp
            )));
        }
        Ok(EasylemParams { n, sigma, mu_exp })
    }

    pub fn n(&self) -> Dimension {
        self.n
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn mu_exp(&self) -> f64 {
        self.mu_exp
    }
}

/// Area of the unit sphere S^m ⊂ ℝ^{m+1}.
pub fn sphere_area(m: u32) -> f64 {
    let h = f64::from(m + 1) / 2.0;
    2.0 * PI.powf(h) / gamma(h)
}

fn japanese(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

const EXCLUDED_RADIUS: f64 = 0.1;
const EASYLEM_TOL: f64 = 1e-10;

/// ∫_{ℝⁿ} ⟨y⟩^{−σ}|x−y|^{−μ} dy at |x| = `x_abs`.
///
/// The integrand is axially symmetric about the x direction. Outside the ball
/// B(x, 0.1) it is integrated in (|y|, angle) coordinates about the origin; inside
/// the ball it is integrated in polar coordinates about x, where the substitution
/// w = δ v^{1/(n−μ)} absorbs the point singularity.
pub fn easylem_integral(p: &EasylemParams, x_abs: f64) -> Result<f64> {
    if !(x_abs >= 0.0 && x_abs.is_finite()) {
        return Err(ResolventError::Domain { what: "|x|", value: x_abs });
    }
    let n = p.n.get();
    let (sigma, mu) = (p.sigma, p.mu_exp);
    let a = x_abs;
    let delta = EXCLUDED_RADIUS;
    let area = if n >= 2 { sphere_area(n - 2) } else { 1.0 };
    let sin_pow = n as i32 - 2;

    // Angular integral about the origin at radius ρ, excluding the ball.
    let angular = |rho: f64| -> f64 {
        let lo = if a == 0.0 {
            if rho < delta {
                return 0.0;
            }
            0.0
        } else {
            let c = (a * a + rho * rho - delta * delta) / (2.0 * a * rho);
            if c >= 1.0 {
                0.0
            } else if c <= -1.0 {
                return 0.0;
            } else {
                c.acos()
            }
        };
        let f = |th: f64| {
            let d2 = (a * a + rho * rho - 2.0 * a * rho * th.cos()).max(delta * delta);
            th.sin().powi(sin_pow) * d2.powf(-mu / 2.0)
        };
        let mut bps = vec![];
        if rho > 0.0 && a > 0.0 {
            let w = (delta / rho.max(a)).min(1.0);
            bps.extend([lo + w, lo + 4.0 * w]);
        }
        adaptive(f, lo, PI, &bps, 0.0, EASYLEM_TOL, 400).value
    };
    let radial = |rho: f64| rho.powi(n as i32 - 1) * japanese(rho).powf(-sigma) * angular(rho);

    let big = 2.0 * (a + delta) + 10.0;
    let mut bps = vec![1.0, a - delta, a, a + delta, 0.5 * a, 2.0 * a];
    bps.retain(|&b| b > 0.0 && b < big);
    let near = adaptive(radial, 0.0, big, &bps, 0.0, EASYLEM_TOL, 2000);
    // tail ρ = big/u
    let tail = adaptive(
        |u: f64| {
            if u <= 0.0 {
                return 0.0;
            }
            let rho = big / u;
            radial(rho) * big / (u * u)
        },
        0.0,
        1.0,
        &[0.1, 0.5],
        0.0,
        EASYLEM_TOL,
        2000,
    );

    // Ball about x: y = x + w(cos β, sin β ·), w = δ v^{1/(n−μ)}.
    let gl = GaussLegendre::new(24);
    let expo = 1.0 / (f64::from(n) - mu);
    let ball = adaptive(
        |v: f64| {
            let w = delta * v.powf(expo);
            let ang = gl.integrate(
                |beta: f64| {
                    let y2 = a * a + w * w + 2.0 * a * w * beta.cos();
                    beta.sin().powi(sin_pow) * (1.0 + y2).powf(-sigma / 2.0)
                },
                0.0,
                PI,
            );
            ang
        },
        0.0,
        1.0,
        &[],
        0.0,
        EASYLEM_TOL,
        200,
    );
    let ball_value = ball.value * delta.powf(f64::from(n) - mu) * expo;

    Ok(area * (near.value + tail.value + ball_value))
}

/// The decay rate predicted for [`easylem_integral`]: ⟨x⟩^{n−σ−μ} when σ < n and
/// ⟨x⟩^{−μ} when σ > n. The borderline σ = n is not covered.
pub fn easylem_bound(p: &EasylemParams, x_abs: f64) -> Result<f64> {
    let nf = f64::from(p.n.get());
    if p.sigma < nf {
        Ok(japanese(x_abs).powf(nf - p.sigma - p.mu_exp))
    } else if p.sigma > nf {
        Ok(japanese(x_abs).powf(-p.mu_exp))
    } else {
        Err(ResolventError::Precondition("σ = n has no power-law bound".into()))
    }
}
