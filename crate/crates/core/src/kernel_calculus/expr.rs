use std::collections::BTreeMap;
use std::fmt;

use num_complex::{Complex, Complex64};
use num_rational::Rational64;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{BranchConvention, CalculusError};
use crate::specfun::{self, Order};

pub type Q = Rational64;
/// Exact complex rational.
pub type CQ = Complex<Q>;

pub fn q(num: i64, den: i64) -> Q {
    Q::new(num, den)
}

pub fn cq(re: Q, im: Q) -> CQ {
    CQ::new(re, im)
}

pub fn cq_real(v: Q) -> CQ {
    CQ::new(v, Q::zero())
}

pub(crate) fn cq_to_c64(c: &CQ) -> Complex64 {
    Complex64::new(c.re.to_f64().unwrap_or(f64::NAN), c.im.to_f64().unwrap_or(f64::NAN))
}

/// Exact integer power of a complex rational, negative exponents included.
pub(crate) fn cq_powi(c: &CQ, m: i64) -> CQ {
    let mut acc = CQ::one();
    for _ in 0..m.unsigned_abs() {
        acc = acc * *c;
    }
    if m < 0 {
        CQ::one() / acc
    } else {
        acc
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    R,
    S,
    T,
    K,
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Var::R => "r",
            Var::S => "s",
            Var::T => "t",
            Var::K => "k",
        };
        f.write_str(c)
    }
}

/// Point at which expressions are evaluated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Env {
    pub r: f64,
    pub s: f64,
    pub t: f64,
    pub k: f64,
}

impl Env {
    pub fn rst(r: f64, s: f64, t: f64) -> Self {
        Env { r, s, t, k: 0.0 }
    }

    pub fn rk(r: f64, k: f64) -> Self {
        Env { r, s: 0.0, t: 0.0, k }
    }

    pub fn get(&self, v: Var) -> f64 {
        match v {
            Var::R => self.r,
            Var::S => self.s,
            Var::T => self.t,
            Var::K => self.k,
        }
    }
}

/// r^a s^b t^c k^d with integer exponents.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial {
    pub r: i32,
    pub s: i32,
    pub t: i32,
    pub k: i32,
}

impl Monomial {
    pub fn new(r: i32, s: i32, t: i32, k: i32) -> Self {
        Monomial { r, s, t, k }
    }

    pub fn exponent(&self, v: Var) -> i32 {
        match v {
            Var::R => self.r,
            Var::S => self.s,
            Var::T => self.t,
            Var::K => self.k,
        }
    }

    fn with_exponent(mut self, v: Var, e: i32) -> Self {
        match v {
            Var::R => self.r = e,
            Var::S => self.s = e,
            Var::T => self.t = e,
            Var::K => self.k = e,
        }
        self
    }

    pub fn mul(&self, o: &Monomial) -> Monomial {
        Monomial::new(self.r + o.r, self.s + o.s, self.t + o.t, self.k + o.k)
    }

    pub fn eval(&self, env: &Env) -> f64 {
        env.r.powi(self.r) * env.s.powi(self.s) * env.t.powi(self.t) * env.k.powi(self.k)
    }

    /// ∂_v of the monomial as (integer factor, monomial).
    pub fn derivative(&self, v: Var) -> Option<(i32, Monomial)> {
        let e = self.exponent(v);
        if e == 0 {
            None
        } else {
            Some((e, self.with_exponent(v, e - 1)))
        }
    }

    pub fn swap_rs(&self) -> Monomial {
        Monomial::new(self.s, self.r, self.t, self.k)
    }

    fn write(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (name, e) in [("r", self.r), ("s", self.s), ("t", self.t), ("k", self.k)] {
            if e == 0 {
                continue;
            }
            if !first {
                f.write_str("*")?;
            }
            first = false;
            if e == 1 {
                f.write_str(name)?;
            } else {
                write!(f, "{name}^{e}")?;
            }
        }
        if first {
            f.write_str("1")?;
        }
        Ok(())
    }
}

/// Rational polynomial φ in monomials; stands for the factor exp(iφ).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Phase(pub BTreeMap<Monomial, Q>);

impl Phase {
    pub fn zero() -> Self {
        Phase(BTreeMap::new())
    }

    pub fn from_terms(terms: &[(Q, Monomial)]) -> Self {
        let mut p = Phase::zero();
        for (c, m) in terms {
            p.add_term(*c, *m);
        }
        p
    }

    /// −(r + s)²/(4t).
    pub fn gaussian_rs() -> Self {
        Phase::from_terms(&[
            (q(-1, 4), Monomial::new(2, 0, -1, 0)),
            (q(-1, 2), Monomial::new(1, 1, -1, 0)),
            (q(-1, 4), Monomial::new(0, 2, -1, 0)),
        ])
    }

    fn add_term(&mut self, c: Q, m: Monomial) {
        let e = self.0.entry(m).or_insert_with(Q::zero);
        *e += c;
        if e.is_zero() {
            self.0.remove(&m);
        }
    }

    pub fn add(&self, o: &Phase) -> Phase {
        let mut p = self.clone();
        for (m, c) in &o.0 {
            p.add_term(*c, *m);
        }
        p
    }

    pub fn scale(&self, s: Q) -> Phase {
        if s.is_zero() {
            return Phase::zero();
        }
        Phase(self.0.iter().map(|(m, c)| (*m, *c * s)).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn eval(&self, env: &Env) -> f64 {
        self.0
            .iter()
            .map(|(m, c)| c.to_f64().unwrap_or(f64::NAN) * m.eval(env))
            .sum()
    }

    pub fn swap_rs(&self) -> Phase {
        let mut p = Phase::zero();
        for (m, c) in &self.0 {
            p.add_term(*c, m.swap_rs());
        }
        p
    }

    fn derivative(&self, v: Var) -> Option<Expr> {
        let terms: Vec<Expr> = self
            .0
            .iter()
            .filter_map(|(m, c)| {
                m.derivative(v)
                    .map(|(e, dm)| Expr::monomial(*c * Q::from(i64::from(e)), dm))
            })
            .collect();
        if terms.is_empty() {
            None
        } else {
            Some(Expr::Sum(terms))
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("0");
        }
        for (idx, (m, c)) in self.0.iter().enumerate() {
            if idx > 0 {
                f.write_str(if c.is_negative() { " - " } else { " + " })?;
            } else if c.is_negative() {
                f.write_str("-")?;
            }
            write!(f, "{}*", c.abs())?;
            m.write(f)?;
        }
        Ok(())
    }
}

/// Argument c·m of a special-function node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Argument {
    pub coeff: Q,
    pub mono: Monomial,
}

impl Argument {
    /// −rs/(2t), the argument of the even-dimension Hankel remainder.
    pub fn omega_rs() -> Self {
        Argument {
            coeff: q(-1, 2),
            mono: Monomial::new(1, 1, -1, 0),
        }
    }

    /// k·r.
    pub fn kr() -> Self {
        Argument {
            coeff: Q::one(),
            mono: Monomial::new(1, 0, 0, 1),
        }
    }

    pub fn eval(&self, env: &Env) -> f64 {
        self.coeff.to_f64().unwrap_or(f64::NAN) * self.mono.eval(env)
    }

    fn derivative(&self, v: Var) -> Option<Expr> {
        self.mono
            .derivative(v)
            .map(|(e, dm)| Expr::monomial(self.coeff * Q::from(i64::from(e)), dm))
    }

    pub fn swap_rs(&self) -> Argument {
        Argument {
            coeff: self.coeff,
            mono: self.mono.swap_rs(),
        }
    }
}

impl fmt::Display for Argument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeff != Q::one() {
            write!(f, "{}*", self.coeff)?;
        }
        self.mono.write(f)
    }
}

/// Special-function leaf.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Special {
    /// The `deriv`-th derivative of ω(z) = H^(1)_0(z)(πiz/2)^{1/2}e^{−iz}.
    Omega { deriv: u32, arg: Argument },
    /// H^(1)_order.
    Hankel1 { order: u32, arg: Argument },
}

impl Special {
    pub fn eval(&self, env: &Env) -> Result<Complex64, CalculusError> {
        match *self {
            Special::Omega { deriv, arg } => Ok(specfun::omega_deriv(deriv, arg.eval(env))?),
            Special::Hankel1 { order, arg } => {
                let x = arg.eval(env);
                let nu = Order::integer(order);
                if x > 0.0 {
                    Ok(specfun::hankel1(nu, x)?)
                } else {
                    Ok(specfun::hankel1_negreal(nu, -x)?)
                }
            }
        }
    }

    pub fn swap_rs(&self) -> Special {
        match *self {
            Special::Omega { deriv, arg } => Special::Omega {
                deriv,
                arg: arg.swap_rs(),
            },
            Special::Hankel1 { order, arg } => Special::Hankel1 {
                order,
                arg: arg.swap_rs(),
            },
        }
    }

    fn derivative(&self, v: Var) -> Option<Expr> {
        match *self {
            Special::Omega { deriv, arg } => {
                let da = arg.derivative(v)?;
                Some(Expr::Product(vec![
                    Expr::Special(Special::Omega {
                        deriv: deriv + 1,
                        arg,
                    }),
                    da,
                ]))
            }
            Special::Hankel1 { order, arg } => {
                let da = arg.derivative(v)?;
                let h = |m: u32| Expr::Special(Special::Hankel1 { order: m, arg });
                // H_m' = (H_{m−1} − H_{m+1})/2, H_{−1} = −H_1
                let dh = if order == 0 {
                    Expr::Product(vec![Expr::integer(-1), h(1)])
                } else {
                    Expr::Product(vec![
                        Expr::rational(q(1, 2)),
                        Expr::Sum(vec![
                            h(order - 1),
                            Expr::Product(vec![Expr::integer(-1), h(order + 1)]),
                        ]),
                    ])
                };
                Some(Expr::Product(vec![dh, da]))
            }
        }
    }
}

impl fmt::Display for Special {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Special::Omega { deriv, arg } => write!(f, "omega[{deriv}]({arg})"),
            Special::Hankel1 { order, arg } => write!(f, "H1[{order}]({arg})"),
        }
    }
}

/// Exact constant c·π^p.
#[derive(Clone, Debug, PartialEq)]
pub struct Coeff {
    pub value: CQ,
    pub pi: i32,
}

impl Coeff {
    pub fn eval(&self) -> Complex64 {
        cq_to_c64(&self.value) * std::f64::consts::PI.powi(self.pi)
    }
}

pub(crate) fn write_cq(f: &mut fmt::Formatter<'_>, c: &CQ) -> fmt::Result {
    if c.im.is_zero() {
        write!(f, "{}", c.re)
    } else if c.re.is_zero() {
        write!(f, "{}*i", c.im)
    } else {
        write!(f, "({}{}{}*i)", c.re, if c.im.is_negative() { "-" } else { "+" }, c.im.abs())
    }
}

impl fmt::Display for Coeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_cq(f, &self.value)?;
        if self.pi != 0 {
            write!(f, "*pi^{}", self.pi)?;
        }
        Ok(())
    }
}

/// Expression tree over r, s, t (and k for single kernels).
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(Coeff),
    Var(Var),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    /// Rational power of a positive quantity.
    Pow(Box<Expr>, Q),
    /// exp(iφ).
    Exp(Phase),
    Special(Special),
    /// (−4πit)^p under [`BranchConvention`].
    BranchPow(Q),
}

impl Expr {
    pub fn constant(value: CQ, pi: i32) -> Expr {
        Expr::Const(Coeff { value, pi })
    }

    pub fn rational(v: Q) -> Expr {
        Expr::constant(cq_real(v), 0)
    }

    pub fn integer(v: i64) -> Expr {
        Expr::rational(Q::from(v))
    }

    pub fn zero() -> Expr {
        Expr::integer(0)
    }

    pub fn one() -> Expr {
        Expr::integer(1)
    }

    pub fn var(v: Var) -> Expr {
        Expr::Var(v)
    }

    pub fn pow(base: Expr, e: Q) -> Expr {
        Expr::Pow(Box::new(base), e)
    }

    /// c·m as a product of variable powers.
    pub fn monomial(c: Q, m: Monomial) -> Expr {
        let mut factors = vec![Expr::rational(c)];
        for v in [Var::R, Var::S, Var::T, Var::K] {
            let e = m.exponent(v);
            if e != 0 {
                factors.push(Expr::pow(Expr::Var(v), Q::from(i64::from(e))));
            }
        }
        Expr::Product(factors)
    }

    /// ∂_v of the expression, unsimplified.
    pub fn derivative(&self, v: Var) -> Expr {
        self.d(v).unwrap_or_else(Expr::zero)
    }

    /// `None` when the derivative vanishes identically by structure.
    fn d(&self, v: Var) -> Option<Expr> {
        match self {
            Expr::Const(_) => None,
            Expr::Var(w) => (*w == v).then(Expr::one),
            Expr::Sum(items) => {
                let ds: Vec<Expr> = items.iter().filter_map(|e| e.d(v)).collect();
                (!ds.is_empty()).then(|| Expr::Sum(ds))
            }
            Expr::Product(items) => {
                let mut terms = Vec::new();
                for (i, item) in items.iter().enumerate() {
                    if let Some(di) = item.d(v) {
                        let mut factors = items.clone();
                        factors[i] = di;
                        terms.push(Expr::Product(factors));
                    }
                }
                (!terms.is_empty()).then(|| Expr::Sum(terms))
            }
            Expr::Pow(base, e) => {
                let db = base.d(v)?;
                if e.is_zero() {
                    return None;
                }
                Some(Expr::Product(vec![
                    Expr::rational(*e),
                    Expr::pow((**base).clone(), *e - Q::one()),
                    db,
                ]))
            }
            Expr::Exp(phase) => {
                let dp = phase.derivative(v)?;
                Some(Expr::Product(vec![
                    Expr::Exp(phase.clone()),
                    Expr::constant(cq(Q::zero(), Q::one()), 0),
                    dp,
                ]))
            }
            Expr::Special(sp) => sp.derivative(v),
            Expr::BranchPow(p) => {
                if v != Var::T || p.is_zero() {
                    return None;
                }
                // d/dt (−4πit)^p = p(−4πi)(−4πit)^{p−1}
                Some(Expr::Product(vec![
                    Expr::constant(cq(Q::zero(), *p * Q::from(-4)), 1),
                    Expr::BranchPow(*p - Q::one()),
                ]))
            }
        }
    }

    /// Numerical value at `env`.
    pub fn eval(&self, env: &Env) -> Result<Complex64, CalculusError> {
        Ok(match self {
            Expr::Const(c) => c.eval(),
            Expr::Var(v) => Complex64::new(env.get(*v), 0.0),
            Expr::Sum(items) => {
                let mut acc = Complex64::new(0.0, 0.0);
                for e in items {
                    acc += e.eval(env)?;
                }
                acc
            }
            Expr::Product(items) => {
                let mut acc = Complex64::new(1.0, 0.0);
                for e in items {
                    acc *= e.eval(env)?;
                }
                acc
            }
            Expr::Pow(base, e) => {
                let b = base.eval(env)?;
                if e.is_integer() {
                    b.powi(e.to_integer() as i32)
                } else if b.im == 0.0 && b.re > 0.0 {
                    Complex64::new(b.re.powf(e.to_f64().unwrap_or(f64::NAN)), 0.0)
                } else {
                    b.powf(e.to_f64().unwrap_or(f64::NAN))
                }
            }
            Expr::Exp(phase) => Complex64::from_polar(1.0, phase.eval(env)),
            Expr::Special(sp) => sp.eval(env)?,
            Expr::BranchPow(p) => BranchConvention::pow(env.t, p.to_f64().unwrap_or(f64::NAN)),
        })
    }

    /// Canonical form: monomials collected, exponentials with equal phase merged.
    pub fn simplify(&self) -> Result<Expr, CalculusError> {
        Ok(super::NormalForm::from_expr(self)?.to_expr())
    }

    /// Exchanges the roles of r and s.
    pub fn swap_rs(&self) -> Expr {
        match self {
            Expr::Const(_) | Expr::BranchPow(_) => self.clone(),
            Expr::Var(Var::R) => Expr::Var(Var::S),
            Expr::Var(Var::S) => Expr::Var(Var::R),
            Expr::Var(v) => Expr::Var(*v),
            Expr::Sum(items) => Expr::Sum(items.iter().map(Expr::swap_rs).collect()),
            Expr::Product(items) => Expr::Product(items.iter().map(Expr::swap_rs).collect()),
            Expr::Pow(b, e) => Expr::pow(b.swap_rs(), *e),
            Expr::Exp(p) => Expr::Exp(p.swap_rs()),
            Expr::Special(sp) => Expr::Special(sp.swap_rs()),
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Expr::Sum(items) | Expr::Product(items) => 1 + items.iter().map(Expr::size).sum::<usize>(),
            Expr::Pow(b, _) => 1 + b.size(),
            _ => 1,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Sum(items) => {
                if items.is_empty() {
                    return f.write_str("0");
                }
                f.write_str("(")?;
                for (i, e) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" + ")?;
                    }
                    write!(f, "{e}")?;
                }
                f.write_str(")")
            }
            Expr::Product(items) => {
                if items.is_empty() {
                    return f.write_str("1");
                }
                for (i, e) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str("*")?;
                    }
                    write!(f, "{e}")?;
                }
                Ok(())
            }
            Expr::Pow(b, e) => {
                let base = b.to_string();
                let wrapped = matches!(**b, Expr::Var(_) | Expr::Sum(_));
                if wrapped {
                    write!(f, "{base}")?;
                } else {
                    write!(f, "({base})")?;
                }
                if e.is_integer() {
                    write!(f, "^{e}")
                } else {
                    write!(f, "^({e})")
                }
            }
            Expr::Exp(p) => write!(f, "exp(i*({p}))"),
            Expr::Special(sp) => write!(f, "{sp}"),
            Expr::BranchPow(p) => write!(f, "(-4*pi*i*t)^({p})"),
        }
    }
}
