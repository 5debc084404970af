//! Bessel and Hankel functions of integer and half-integer order.
//!
//! Real-axis evaluation uses power series below [`SERIES_LIMIT`] and the
//! large-argument Hankel expansion above it. Half-integer orders go through the
//! terminating form of the same expansion, which is exact. The expansion is also
//! exposed for complex arguments of large modulus, which the contour quadrature
//! in [`crate::oscillatory`] needs.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;

use num_complex::Complex64;

/// Real arguments at or below this use power series for integer orders.
pub const SERIES_LIMIT: f64 = 12.0;

/// |z| at or above this evaluates ω and its derivatives from the asymptotic series.
pub const OMEGA_ASYMPTOTIC_LIMIT: f64 = 15.0;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const MAX_ASYMPTOTIC_TERMS: usize = 120;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum SpecfunError {
    #[error("argument {0} is outside the domain of the function")]
    Domain(f64),
}

pub type Result<T> = std::result::Result<T, SpecfunError>;

/// Non-negative integer or half-integer order, stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Order {
    twice: u32,
}

impl Order {
    pub const ZERO: Order = Order { twice: 0 };

    pub const fn integer(m: u32) -> Self {
        Order { twice: 2 * m }
    }

    /// The order `m + 1/2`.
    pub const fn half(m: u32) -> Self {
        Order { twice: 2 * m + 1 }
    }

    pub const fn from_twice(twice: u32) -> Self {
        Order { twice }
    }

    /// ν = n/2 − 1, the order of the free resolvent kernel in dimension `n ≥ 2`.
    pub fn for_dimension(n: u32) -> Self {
        assert!(n >= 2, "dimension must be at least 2");
        Order { twice: n - 2 }
    }

    pub fn value(self) -> f64 {
        f64::from(self.twice) / 2.0
    }

    pub fn twice(self) -> u32 {
        self.twice
    }

    pub fn is_integer(self) -> bool {
        self.twice % 2 == 0
    }

    /// ⌊ν⌋.
    pub fn floor(self) -> u32 {
        self.twice / 2
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HankelKind {
    First,
    Second,
}

fn check_positive(z: f64) -> Result<()> {
    if z > 0.0 && z.is_finite() {
        Ok(())
    } else {
        Err(SpecfunError::Domain(z))
    }
}

/// Γ(ν + 1) for integer or half-integer ν ≥ 0.
pub fn gamma_order_plus_one(nu: Order) -> f64 {
    let (mut x, mut g) = if nu.is_integer() {
        (1.0, 1.0)
    } else {
        (0.5, PI.sqrt())
    };
    let target = nu.value() + 1.0;
    while x + 0.5 < target {
        g *= x;
        x += 1.0;
    }
    g
}

/// Large-argument expansion of H^(1)_ν or H^(2)_ν at complex `z`.
///
/// For half-integer ν the series terminates and every term is summed, giving
/// the closed form at any `z ≠ 0`. Otherwise terms are summed until they stop
/// decreasing or drop below round-off.
pub fn hankel_asymptotic(kind: HankelKind, nu: Order, z: Complex64) -> Complex64 {
    let nu_f = nu.value();
    let mu = 4.0 * nu_f * nu_f;
    let sgn = match kind {
        HankelKind::First => 1.0,
        HankelKind::Second => -1.0,
    };
    let step = Complex64::new(0.0, sgn) / z;
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut prev = f64::INFINITY;
    let exact = !nu.is_integer();
    for k in 1..=MAX_ASYMPTOTIC_TERMS {
        let j = (2 * k - 1) as f64;
        let factor = (mu - j * j) / (8.0 * k as f64);
        if factor == 0.0 {
            break;
        }
        let next = term * step * factor;
        let mag = next.norm();
        if !exact && mag >= prev {
            break;
        }
        sum += next;
        term = next;
        prev = mag;
        if !exact && mag <= 1e-17 * sum.norm() {
            break;
        }
    }
    let phase = z - (nu_f * FRAC_PI_2 + FRAC_PI_4);
    let prefactor = (Complex64::new(2.0 / PI, 0.0) / z).sqrt();
    prefactor * (Complex64::new(0.0, sgn) * phase).exp() * sum
}

/// Power series for J_ν, valid for any order, used at small and moderate z.
fn besselj_series(nu: Order, z: f64) -> f64 {
    let half = 0.5 * z;
    let q = -half * half;
    let nu_f = nu.value();
    let mut term = half.powf(nu_f) / gamma_order_plus_one(nu);
    let mut sum = term;
    let mut k = 1.0;
    loop {
        term *= q / (k * (k + nu_f));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() && k > -q {
            break;
        }
        if k > 400.0 {
            break;
        }
        k += 1.0;
    }
    sum
}

/// z^{−ν} J_ν(z) from the power series; smooth through z = 0.
fn besselj_scaled_series(nu: Order, z: f64) -> f64 {
    let half = 0.5 * z;
    let q = -half * half;
    let nu_f = nu.value();
    let mut term = 0.5_f64.powf(nu_f) / gamma_order_plus_one(nu);
    let mut sum = term;
    let mut k = 1.0;
    loop {
        term *= q / (k * (k + nu_f));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() && k > -q {
            break;
        }
        if k > 400.0 {
            break;
        }
        k += 1.0;
    }
    sum
}

/// Y_n for integer n by the limit formula with digamma coefficients.
fn bessely_series(n: u32, z: f64) -> f64 {
    let half = 0.5 * z;
    let q = half * half;
    let mut finite = 0.0;
    if n > 0 {
        // (n−k−1)!/k! q^k, k = 0..n−1
        let mut fact_hi: f64 = (1..n).map(f64::from).product();
        let mut fact_lo = 1.0;
        let mut qk = 1.0;
        for k in 0..n {
            if k > 0 {
                fact_lo *= f64::from(k);
                fact_hi /= f64::from(n - k);
                qk *= q;
            }
            finite += fact_hi / fact_lo * qk;
        }
        finite /= half.powi(n as i32);
    }
    let jn = besselj_series(Order::integer(n), z);
    // digamma(m) = −γ + H_{m−1}
    let mut psi_a = -EULER_GAMMA;
    let mut psi_b = -EULER_GAMMA + (1..=n).map(|j| 1.0 / f64::from(j)).sum::<f64>();
    let mut term = 1.0 / (1..=n).map(f64::from).product::<f64>();
    let mut sum = term * (psi_a + psi_b);
    let mut k = 1.0_f64;
    loop {
        term *= -q / (k * (k + f64::from(n)));
        psi_a += 1.0 / k;
        psi_b += 1.0 / (k + f64::from(n));
        let contrib = term * (psi_a + psi_b);
        sum += contrib;
        if contrib.abs() <= 1e-18 * sum.abs() && k > q {
            break;
        }
        if k > 400.0 {
            break;
        }
        k += 1.0;
    }
    -finite / PI + 2.0 / PI * half.ln() * jn - half.powi(n as i32) / PI * sum
}

/// H^(1)_ν(z) for real z > 0.
pub fn hankel1(nu: Order, z: f64) -> Result<Complex64> {
    check_positive(z)?;
    Ok(hankel1_unchecked(nu, z))
}

pub(crate) fn hankel1_unchecked(nu: Order, z: f64) -> Complex64 {
    if nu.is_integer() && z <= SERIES_LIMIT {
        let n = nu.floor();
        Complex64::new(besselj_series(nu, z), bessely_series(n, z))
    } else {
        hankel_asymptotic(HankelKind::First, nu, Complex64::new(z, 0.0))
    }
}

/// H^(2)_ν(z) = conj(H^(1)_ν(z)) for real z > 0.
pub fn hankel2(nu: Order, z: f64) -> Result<Complex64> {
    Ok(hankel1(nu, z)?.conj())
}

/// H^(1)_ν at the negative real point −x, continued from the upper half-plane:
/// H^(1)_ν(x e^{iπ}) = −e^{−iνπ} H^(2)_ν(x).
pub fn hankel1_negreal(nu: Order, x: f64) -> Result<Complex64> {
    check_positive(x)?;
    Ok(hankel1_negreal_unchecked(nu, x))
}

pub(crate) fn hankel1_negreal_unchecked(nu: Order, x: f64) -> Complex64 {
    let rot = Complex64::from_polar(1.0, -nu.value() * PI);
    -rot * hankel1_unchecked(nu, x).conj()
}

/// J_ν(z) for z ≥ 0.
pub fn besselj(nu: Order, z: f64) -> Result<f64> {
    if !(z >= 0.0 && z.is_finite()) {
        return Err(SpecfunError::Domain(z));
    }
    if z == 0.0 {
        return Ok(if nu == Order::ZERO { 1.0 } else { 0.0 });
    }
    // Half-integer closed forms lose digits to cancellation at small z for ν > 1/2.
    let use_series = if nu.is_integer() {
        z <= SERIES_LIMIT
    } else {
        nu.twice() > 1 && z < 1.0 + nu.value()
    };
    if use_series {
        Ok(besselj_series(nu, z))
    } else {
        Ok(hankel1_unchecked(nu, z).re)
    }
}

/// z^{−ν} J_ν(z), finite at z = 0 where it equals 1/(2^ν Γ(ν+1)).
pub fn besselj_scaled(nu: Order, z: f64) -> Result<f64> {
    if !(z >= 0.0 && z.is_finite()) {
        return Err(SpecfunError::Domain(z));
    }
    if z < 1.0 + nu.value() {
        Ok(besselj_scaled_series(nu, z))
    } else {
        Ok(besselj(nu, z)? / z.powf(nu.value()))
    }
}

/// Y_ν(z) for z > 0.
pub fn bessely(nu: Order, z: f64) -> Result<f64> {
    Ok(hankel1(nu, z)?.im)
}

/// Modified Bessel function K_ν(x) for x > 0, from K_ν(x) = ∫₀^∞ e^{−x cosh u} cosh(νu) du
/// by the trapezoidal rule, which converges geometrically for this integrand.
pub fn bessel_k(nu: Order, x: f64) -> Result<f64> {
    check_positive(x)?;
    let nu_f = nu.value();
    let h = (0.5 / x.sqrt()).min(0.05);
    // scaled integrand e^{−x(cosh u − 1)} cosh(νu)
    let f = |u: f64| (-x * (u.cosh() - 1.0)).exp() * (nu_f * u).cosh();
    let mut sum = 0.5 * f(0.0);
    let mut i = 1.0;
    loop {
        let v = f(i * h);
        sum += v;
        if v <= 1e-18 * sum && x * ((i * h).cosh() - 1.0) > 10.0 {
            break;
        }
        i += 1.0;
    }
    Ok(sum * h * (-x).exp())
}

/// ω(z) = H^(1)_0(z) (πiz/2)^{1/2} e^{−iz}, which tends to 1 as |z| → ∞.
///
/// For z < 0 the square root is continued from the upper half-plane,
/// z^{1/2} = i|z|^{1/2}, consistent with [`hankel1_negreal`].
pub fn omega(z: f64) -> Result<Complex64> {
    omega_deriv(0, z)
}

/// The `order`-th derivative of ω at real z ≠ 0.
pub fn omega_deriv(order: u32, z: f64) -> Result<Complex64> {
    if z == 0.0 || !z.is_finite() {
        return Err(SpecfunError::Domain(z));
    }
    if z.abs() >= OMEGA_ASYMPTOTIC_LIMIT {
        Ok(omega_deriv_asymptotic(order, z))
    } else {
        Ok(omega_deriv_leibniz(order, z))
    }
}

/// Termwise derivative of ω(z) ~ Σ_j i^j a_j(0) z^{−j}.
fn omega_deriv_asymptotic(order: u32, z: f64) -> Complex64 {
    let m = order as usize;
    let mut a = Complex64::new(1.0, 0.0); // i^j a_j(0)
    let mut sum = if m == 0 {
        Complex64::new(1.0, 0.0)
    } else {
        Complex64::new(0.0, 0.0)
    };
    let mut prev = f64::INFINITY;
    for j in 1..MAX_ASYMPTOTIC_TERMS {
        let jf = j as f64;
        let odd = 2.0 * jf - 1.0;
        a *= Complex64::new(0.0, -odd * odd / (8.0 * jf));
        // d^m/dz^m z^{−j} = (−1)^m j(j+1)…(j+m−1) z^{−j−m}
        let rising: f64 = (0..m).map(|l| jf + l as f64).product();
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        let term = a * (sign * rising * z.powi(-(j as i32) - m as i32));
        let mag = term.norm();
        if mag >= prev && j > m + 1 {
            break;
        }
        sum += term;
        prev = mag;
        if mag <= 1e-17 * sum.norm().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    sum
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

/// H^(1)_p at a real nonzero argument for any integer p, using H_{−p} = (−1)^p H_p.
fn hankel1_signed_arg(p: i32, z: f64) -> Complex64 {
    let order = Order::integer(p.unsigned_abs());
    let h = if z > 0.0 {
        hankel1_unchecked(order, z)
    } else {
        hankel1_negreal_unchecked(order, -z)
    };
    if p < 0 && p % 2 != 0 {
        -h
    } else {
        h
    }
}

/// ω^{(m)} = Σ_j C(m,j) g^{(j)} H_0^{(m−j)} with g(z) = (πi/2)^{1/2} z^{1/2} e^{−iz} and
/// H_0^{(q)} = 2^{−q} Σ_l (−1)^l C(q,l) H_{2l−q}.
fn omega_deriv_leibniz(order: u32, z: f64) -> Complex64 {
    let c = Complex64::from_polar((FRAC_PI_2).sqrt(), FRAC_PI_4);
    let sqrt_z = if z > 0.0 {
        Complex64::new(z.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, (-z).sqrt())
    };
    let e = Complex64::from_polar(1.0, -z);
    let minus_i = Complex64::new(0.0, -1.0);
    let mut total = Complex64::new(0.0, 0.0);
    for j in 0..=order {
        // g^{(j)} = c e^{−iz} Σ_m C(j,m) (z^{1/2})^{(m)} (−i)^{j−m}
        let mut gj = Complex64::new(0.0, 0.0);
        let mut falling = 1.0;
        for m in 0..=j {
            if m > 0 {
                falling *= 0.5 - f64::from(m - 1);
            }
            let dsqrt = sqrt_z * (falling * z.powi(-(m as i32)));
            gj += dsqrt * binomial(j, m) * minus_i.powu(j - m);
        }
        gj *= c * e;
        let q = order - j;
        let mut hq = Complex64::new(0.0, 0.0);
        for l in 0..=q {
            let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
            hq += hankel1_signed_arg(2 * l as i32 - q as i32, z) * (sign * binomial(q, l));
        }
        hq /= 2f64.powi(q as i32);
        total += gj * hq * binomial(order, j);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_for_dimension() {
        assert_eq!(Order::for_dimension(2), Order::ZERO);
        assert_eq!(Order::for_dimension(3), Order::half(0));
        assert_eq!(Order::for_dimension(6), Order::integer(2));
        assert_eq!(Order::half(1).to_string(), "3/2");
    }

    #[test]
    fn gamma_values() {
        assert!((gamma_order_plus_one(Order::integer(4)) - 24.0).abs() < 1e-12);
        // Γ(5/2) = 3√π/4
        let expect = 0.75 * PI.sqrt();
        assert!((gamma_order_plus_one(Order::half(1)) - expect).abs() < 1e-14);
    }

    #[test]
    fn negative_or_zero_argument_is_domain_error() {
        assert!(hankel1(Order::ZERO, 0.0).is_err());
        assert!(hankel1(Order::ZERO, -1.0).is_err());
        assert!(hankel1_negreal(Order::ZERO, 0.0).is_err());
        assert!(omega(0.0).is_err());
        assert!(bessel_k(Order::ZERO, 0.0).is_err());
    }

    #[test]
    fn series_and_asymptotic_meet_at_crossover() {
        for n in 0..5 {
            let nu = Order::integer(n);
            let z = SERIES_LIMIT;
            let s = Complex64::new(besselj_series(nu, z), bessely_series(n, z));
            let a = hankel_asymptotic(HankelKind::First, nu, Complex64::new(z, 0.0));
            assert!((s - a).norm() < 1e-10 * a.norm(), "n={n}: {s} vs {a}");
        }
    }

    #[test]
    fn omega_branches_meet() {
        for &z in &[OMEGA_ASYMPTOTIC_LIMIT, -OMEGA_ASYMPTOTIC_LIMIT] {
            for m in 0..4 {
                let a = omega_deriv_asymptotic(m, z);
                let b = omega_deriv_leibniz(m, z);
                assert!((a - b).norm() < 1e-9 * a.norm().max(1e-3), "m={m} z={z}: {a} vs {b}");
            }
        }
    }
}
