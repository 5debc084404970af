//! Symbolic closed forms for time-domain transforms of free resolvent kernels.
//!
//! The product transform T_n(r, s, t) = ∫ e^{itλ} R_n⁻(λ, r) R_n⁻(λ, s) dλ is known
//! in closed form for n = 2 and n = 3. Higher dimensions follow from
//! T_{n+2} = (4π²rs)^{−1} ∂_r ∂_s T_n, which this module applies symbolically.
//! Single kernels are raised the same way with R_{n+2} = −(2πr)^{−1} ∂_r R_n.

mod expr;
mod normal;

use std::f64::consts::PI;

use num_complex::Complex64;
use num_traits::{One, Zero};

pub use expr::{cq, cq_real, q, Argument, Coeff, Env, Expr, Monomial, Phase, Special, Var, CQ, Q};
pub use normal::{NormalForm, TermKey};

use crate::resolvent::Dimension;
use crate::specfun::SpecfunError;

/// Largest dimension the builders accept.
pub const MAX_DIMENSION: u32 = 11;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CalculusError {
    #[error("dimension {0} is not available here")]
    UnsupportedDimension(u32),
    #[error("expression outside the supported family: {0}")]
    Normalize(String),
    #[error("special function evaluation failed: {0}")]
    Special(#[from] SpecfunError),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, CalculusError>;

/// (−4πit)^p for t > 0 on the principal branch, arg(−4πit) = −π/2:
/// (4πt)^p e^{−iπp/2}. Multiplicative in p.
#[derive(Debug, Clone, Copy, Default)]
pub struct BranchConvention;

impl BranchConvention {
    pub fn pow(t: f64, p: f64) -> Complex64 {
        Complex64::from_polar((4.0 * PI * t).powf(p), -PI * p / 2.0)
    }

    /// (−4πi)^p, the t = 1 value.
    pub fn unit_pow(p: f64) -> Complex64 {
        Self::pow(1.0, p)
    }
}

/// Closed form of the product transform in a fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformExpr {
    dimension: u32,
    expr: Expr,
    normal: NormalForm,
}

impl TransformExpr {
    fn from_expr(dimension: u32, e: Expr) -> Result<Self> {
        let normal = NormalForm::from_expr(&e)?;
        Ok(TransformExpr {
            dimension,
            expr: normal.to_expr(),
            normal,
        })
    }

    pub fn dimension(&self) -> u32 {
        self.dimension
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn normal(&self) -> &NormalForm {
        &self.normal
    }

    pub fn eval(&self, r: f64, s: f64, t: f64) -> Result<Complex64> {
        check_rst(r, s, t)?;
        self.normal.eval(&Env::rst(r, s, t))
    }

    /// Terms of the most singular order in t, and the rest.
    pub fn split_leading(&self) -> (NormalForm, NormalForm) {
        self.normal.split_leading()
    }
}

fn check_rst(r: f64, s: f64, t: f64) -> Result<()> {
    if r > 0.0 && s > 0.0 && t > 0.0 && r.is_finite() && s.is_finite() && t.is_finite() {
        Ok(())
    } else {
        Err(CalculusError::Precondition(format!(
            "r, s, t must be positive (got {r}, {s}, {t})"
        )))
    }
}

fn minus_half_i() -> CQ {
    // 1/(2i)
    cq(Q::zero(), q(-1, 2))
}

/// Exact transform for n = 2 (through ω) or n = 3.
pub fn base_case(n: u32) -> Result<TransformExpr> {
    let e = match n {
        2 => Expr::Product(vec![
            Expr::constant(minus_half_i(), 0),
            Expr::BranchPow(q(-1, 2)),
            Expr::pow(Expr::var(Var::R), q(-1, 2)),
            Expr::pow(Expr::var(Var::S), q(-1, 2)),
            Expr::Exp(Phase::gaussian_rs()),
            Expr::Special(Special::Omega {
                deriv: 0,
                arg: Argument::omega_rs(),
            }),
        ]),
        3 => Expr::Product(vec![
            Expr::constant(minus_half_i(), 0),
            Expr::BranchPow(q(-3, 2)),
            Expr::Sum(vec![
                Expr::pow(Expr::var(Var::R), Q::from(-1)),
                Expr::pow(Expr::var(Var::S), Q::from(-1)),
            ]),
            Expr::Exp(Phase::gaussian_rs()),
        ]),
        other => return Err(CalculusError::UnsupportedDimension(other)),
    };
    TransformExpr::from_expr(n, e)
}

/// Applies (4π²rs)^{−1}∂_r∂_s `steps` times, simplifying after each step.
pub fn raise_dimension(e: &TransformExpr, steps: u32) -> Result<TransformExpr> {
    let target = e.dimension + 2 * steps;
    if target > MAX_DIMENSION {
        return Err(CalculusError::UnsupportedDimension(target));
    }
    let mut cur = e.clone();
    for _ in 0..steps {
        let dr = NormalForm::from_expr(&cur.expr.derivative(Var::R))?.to_expr();
        let drs = dr.derivative(Var::S);
        let raised = Expr::Product(vec![
            Expr::constant(cq_real(q(1, 4)), -2),
            Expr::pow(Expr::var(Var::R), Q::from(-1)),
            Expr::pow(Expr::var(Var::S), Q::from(-1)),
            drs,
        ]);
        cur = TransformExpr::from_expr(cur.dimension + 2, raised)?;
    }
    Ok(cur)
}

/// Product transform in dimension `n`, raised from the base case of the same parity.
pub fn transform_expr(n: u32) -> Result<TransformExpr> {
    if !(2..=MAX_DIMENSION).contains(&n) {
        return Err(CalculusError::UnsupportedDimension(n));
    }
    let base = if n % 2 == 0 { 2 } else { 3 };
    raise_dimension(&base_case(base)?, (n - base) / 2)
}

/// (1/(2i)) (−4πit)^{−(n−3/2)} (r+s)^{n−2} (rs)^{−(n−1)/2} e^{−i(r+s)²/(4t)} as a tree.
pub fn leading_term_expr(n: u32) -> Result<Expr> {
    if !(2..=MAX_DIMENSION).contains(&n) {
        return Err(CalculusError::UnsupportedDimension(n));
    }
    let nn = i64::from(n);
    Ok(Expr::Product(vec![
        Expr::constant(minus_half_i(), 0),
        Expr::BranchPow(q(3 - 2 * nn, 2)),
        Expr::pow(
            Expr::Sum(vec![Expr::var(Var::R), Expr::var(Var::S)]),
            Q::from(nn - 2),
        ),
        Expr::pow(Expr::var(Var::R), q(1 - nn, 2)),
        Expr::pow(Expr::var(Var::S), q(1 - nn, 2)),
        Expr::Exp(Phase::gaussian_rs()),
    ]))
}

/// Numerical value of the leading term, computed directly from the formula.
pub fn leading_term(n: u32, r: f64, s: f64, t: f64) -> Result<Complex64> {
    if n < 2 {
        return Err(CalculusError::UnsupportedDimension(n));
    }
    check_rst(r, s, t)?;
    let nf = f64::from(n);
    let amp = (r + s).powf(nf - 2.0) / (r * s).powf((nf - 1.0) / 2.0);
    let phase = Complex64::from_polar(1.0, -(r + s) * (r + s) / (4.0 * t));
    Ok(Complex64::new(0.0, -0.5) * BranchConvention::pow(t, 1.5 - nf) * amp * phase)
}

/// Exact transform minus the leading term, as a normal form. Identically zero for n = 3.
pub fn remainder_expr(n: u32) -> Result<NormalForm> {
    let full = transform_expr(n)?;
    let lead = NormalForm::from_expr(&leading_term_expr(n)?)?;
    Ok(full.normal().sub(&lead))
}

/// G(r, s, t) = T_n(r, s, t) − leading_term(n, r, s, t).
#[allow(non_snake_case)]
pub fn remainder_G(n: Dimension, r: f64, s: f64, t: f64) -> Result<Complex64> {
    check_rst(r, s, t)?;
    remainder_expr(n.get())?.eval(&Env::rst(r, s, t))
}

/// Single resolvent kernel R_n⁺(k, r) as an expression in r and k.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleKernel {
    dimension: u32,
    expr: Expr,
}

impl SingleKernel {
    pub fn dimension(&self) -> u32 {
        self.dimension
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn eval(&self, k: f64, r: f64) -> Result<Complex64> {
        if !(k > 0.0 && r > 0.0) {
            return Err(CalculusError::Precondition("k and r must be positive".into()));
        }
        self.expr.eval(&Env::rk(r, k))
    }
}

/// R_n⁺ for n = 2, (i/4)H^(1)_0(kr), or n = 3, e^{ikr}/(4πr), raised as needed.
pub fn single_kernel_expr(n: u32) -> Result<SingleKernel> {
    if !(2..=MAX_DIMENSION).contains(&n) {
        return Err(CalculusError::UnsupportedDimension(n));
    }
    let base = if n % 2 == 0 {
        Expr::Product(vec![
            Expr::constant(cq(Q::zero(), q(1, 4)), 0),
            Expr::Special(Special::Hankel1 {
                order: 0,
                arg: Argument::kr(),
            }),
        ])
    } else {
        Expr::Product(vec![
            Expr::constant(cq_real(q(1, 4)), -1),
            Expr::pow(Expr::var(Var::R), Q::from(-1)),
            Expr::Exp(Phase::from_terms(&[(Q::one(), Monomial::new(1, 0, 0, 1))])),
        ])
    };
    let mut k = SingleKernel {
        dimension: if n % 2 == 0 { 2 } else { 3 },
        expr: base.simplify()?,
    };
    while k.dimension < n {
        k = raise_single(&k)?;
    }
    Ok(k)
}

fn raise_single(k: &SingleKernel) -> Result<SingleKernel> {
    let e = Expr::Product(vec![
        Expr::constant(cq_real(q(-1, 2)), -1),
        Expr::pow(Expr::var(Var::R), Q::from(-1)),
        k.expr.derivative(Var::R),
    ]);
    Ok(SingleKernel {
        dimension: k.dimension + 2,
        expr: e.simplify()?,
    })
}

/// The dimension n + 2 kernel −(2πr)^{−1}∂_r R_n⁺, built symbolically.
pub fn single_kernel_raise(n: Dimension) -> Result<SingleKernel> {
    if n.get() + 2 > MAX_DIMENSION {
        return Err(CalculusError::UnsupportedDimension(n.get() + 2));
    }
    raise_single(&single_kernel_expr(n.get())?)
}
