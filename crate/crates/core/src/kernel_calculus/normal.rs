use std::collections::BTreeMap;

use num_complex::Complex64;
use num_traits::{One, ToPrimitive, Zero};

use super::expr::{cq, cq_powi, cq_to_c64, Env, Expr, Phase, Special, Var, CQ, Q};
use super::{BranchConvention, CalculusError};

/// Everything in a term except its coefficient:
/// π^pi r^r s^s t^t k^k (−4πit)^branch exp(i·phase) Π specials, with branch ∈ [0, 1).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TermKey {
    pub pi: i32,
    pub r: Q,
    pub s: Q,
    pub t: Q,
    pub k: Q,
    pub branch: Q,
    pub phase: Phase,
    pub specials: Vec<Special>,
}

impl TermKey {
    fn unit() -> Self {
        TermKey {
            pi: 0,
            r: Q::zero(),
            s: Q::zero(),
            t: Q::zero(),
            k: Q::zero(),
            branch: Q::zero(),
            phase: Phase::zero(),
            specials: Vec::new(),
        }
    }

    fn var_mut(&mut self, v: Var) -> &mut Q {
        match v {
            Var::R => &mut self.r,
            Var::S => &mut self.s,
            Var::T => &mut self.t,
            Var::K => &mut self.k,
        }
    }

    /// Power of t the term behaves like as t → 0, counting ω^{(d)}(−rs/2t) as t^d.
    pub fn t_order(&self) -> Q {
        let omega: u32 = self
            .specials
            .iter()
            .map(|sp| match sp {
                Special::Omega { deriv, .. } => *deriv,
                Special::Hankel1 { .. } => 0,
            })
            .sum();
        self.t + self.branch + Q::from(i64::from(omega))
    }

    fn swap_rs(&self) -> TermKey {
        let mut k = self.clone();
        std::mem::swap(&mut k.r, &mut k.s);
        k.phase = self.phase.swap_rs();
        k.specials = self.specials.iter().map(Special::swap_rs).collect();
        k.specials.sort();
        k
    }
}

/// Absorbs integer parts of the branch exponent as (−4πi)^m t^m.
fn normalize_branch(key: &mut TermKey, coeff: &mut CQ) {
    let m = key.branch.floor().to_integer();
    if m != 0 {
        key.branch -= Q::from(m);
        key.pi += m as i32;
        key.t += Q::from(m);
        *coeff = *coeff * cq_powi(&cq(Q::zero(), Q::from(-4)), m);
    }
}

fn multiply_keys(a: &TermKey, b: &TermKey) -> (TermKey, CQ) {
    let mut key = TermKey {
        pi: a.pi + b.pi,
        r: a.r + b.r,
        s: a.s + b.s,
        t: a.t + b.t,
        k: a.k + b.k,
        branch: a.branch + b.branch,
        phase: a.phase.add(&b.phase),
        specials: a.specials.iter().chain(&b.specials).copied().collect(),
    };
    key.specials.sort();
    let mut c = CQ::one();
    normalize_branch(&mut key, &mut c);
    (key, c)
}

/// Sum of monomial terms; the canonical form behind [`Expr::simplify`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NormalForm {
    terms: BTreeMap<TermKey, CQ>,
}

impl NormalForm {
    pub fn zero() -> Self {
        NormalForm::default()
    }

    fn single(key: TermKey, c: CQ) -> Self {
        let mut nf = NormalForm::zero();
        nf.add_term(key, c);
        nf
    }

    fn add_term(&mut self, key: TermKey, c: CQ) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(key) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = *o.get() + c;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&TermKey, &CQ)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, o: &NormalForm) -> NormalForm {
        let mut out = self.clone();
        for (k, c) in &o.terms {
            out.add_term(k.clone(), *c);
        }
        out
    }

    pub fn sub(&self, o: &NormalForm) -> NormalForm {
        let mut out = self.clone();
        for (k, c) in &o.terms {
            out.add_term(k.clone(), -*c);
        }
        out
    }

    pub fn mul(&self, o: &NormalForm) -> NormalForm {
        let mut out = NormalForm::zero();
        for (ka, ca) in &self.terms {
            for (kb, cb) in &o.terms {
                let (key, extra) = multiply_keys(ka, kb);
                out.add_term(key, *ca * *cb * extra);
            }
        }
        out
    }

    fn pow_uint(&self, m: u64) -> NormalForm {
        let mut acc = NormalForm::single(TermKey::unit(), CQ::one());
        for _ in 0..m {
            acc = acc.mul(self);
        }
        acc
    }

    fn pow_rational(&self, e: Q) -> Result<NormalForm, CalculusError> {
        if e.is_integer() && e >= Q::zero() {
            return Ok(self.pow_uint(e.to_integer() as u64));
        }
        if self.terms.len() != 1 {
            return Err(CalculusError::Normalize(format!(
                "power {e} of a sum of {} terms",
                self.terms.len()
            )));
        }
        let (key, c) = self.terms.iter().next().expect("one term");
        let integer = e.is_integer();
        if !integer && *c != CQ::one() {
            return Err(CalculusError::Normalize(format!(
                "fractional power {e} of a non-unit coefficient"
            )));
        }
        if !integer && (!key.phase.is_zero() || !key.specials.is_empty()) {
            return Err(CalculusError::Normalize(format!(
                "fractional power {e} of an oscillatory factor"
            )));
        }
        if !key.specials.is_empty() {
            return Err(CalculusError::Normalize(
                "negative power of a special function".into(),
            ));
        }
        let pi = Q::from(i64::from(key.pi)) * e;
        if !pi.is_integer() {
            return Err(CalculusError::Normalize(format!("π to the power {pi}")));
        }
        let mut out = TermKey {
            pi: pi.to_integer() as i32,
            r: key.r * e,
            s: key.s * e,
            t: key.t * e,
            k: key.k * e,
            branch: key.branch * e,
            phase: key.phase.scale(e),
            specials: Vec::new(),
        };
        let mut coeff = if integer {
            cq_powi(c, e.to_integer())
        } else {
            CQ::one()
        };
        normalize_branch(&mut out, &mut coeff);
        Ok(NormalForm::single(out, coeff))
    }

    pub fn from_expr(e: &Expr) -> Result<NormalForm, CalculusError> {
        Ok(match e {
            Expr::Const(c) => {
                let mut key = TermKey::unit();
                key.pi = c.pi;
                NormalForm::single(key, c.value)
            }
            Expr::Var(v) => {
                let mut key = TermKey::unit();
                *key.var_mut(*v) = Q::one();
                NormalForm::single(key, CQ::one())
            }
            Expr::Sum(items) => {
                let mut acc = NormalForm::zero();
                for it in items {
                    let nf = NormalForm::from_expr(it)?;
                    for (k, c) in nf.terms {
                        acc.add_term(k, c);
                    }
                }
                acc
            }
            Expr::Product(items) => {
                let mut acc = NormalForm::single(TermKey::unit(), CQ::one());
                for it in items {
                    acc = acc.mul(&NormalForm::from_expr(it)?);
                    if acc.is_empty() {
                        break;
                    }
                }
                acc
            }
            Expr::Pow(base, p) => NormalForm::from_expr(base)?.pow_rational(*p)?,
            Expr::Exp(phase) => {
                let mut key = TermKey::unit();
                key.phase = phase.clone();
                NormalForm::single(key, CQ::one())
            }
            Expr::Special(sp) => {
                let mut key = TermKey::unit();
                key.specials.push(*sp);
                NormalForm::single(key, CQ::one())
            }
            Expr::BranchPow(p) => {
                let mut key = TermKey::unit();
                key.branch = *p;
                let mut c = CQ::one();
                normalize_branch(&mut key, &mut c);
                NormalForm::single(key, c)
            }
        })
    }

    fn term_expr(key: &TermKey, c: &CQ) -> Expr {
        let mut factors = Vec::new();
        if *c != CQ::one() || key.pi != 0 {
            factors.push(Expr::constant(*c, key.pi));
        }
        if !key.branch.is_zero() {
            factors.push(Expr::BranchPow(key.branch));
        }
        for (v, e) in [(Var::R, key.r), (Var::S, key.s), (Var::T, key.t), (Var::K, key.k)] {
            if e.is_zero() {
                continue;
            }
            if e == Q::one() {
                factors.push(Expr::Var(v));
            } else {
                factors.push(Expr::pow(Expr::Var(v), e));
            }
        }
        factors.extend(key.specials.iter().map(|sp| Expr::Special(*sp)));
        match factors.len() {
            0 => Expr::one(),
            1 => factors.pop().expect("one factor"),
            _ => Expr::Product(factors),
        }
    }

    /// Tree form with terms grouped under a shared exponential factor per phase.
    pub fn to_expr(&self) -> Expr {
        if self.terms.is_empty() {
            return Expr::zero();
        }
        let mut groups: BTreeMap<&Phase, Vec<Expr>> = BTreeMap::new();
        for (key, c) in &self.terms {
            groups
                .entry(&key.phase)
                .or_default()
                .push(NormalForm::term_expr(key, c));
        }
        let mut out: Vec<Expr> = groups
            .into_iter()
            .map(|(phase, mut terms)| {
                let body = if terms.len() == 1 {
                    terms.pop().expect("one term")
                } else {
                    Expr::Sum(terms)
                };
                if phase.is_zero() {
                    body
                } else {
                    Expr::Product(vec![Expr::Exp(phase.clone()), body])
                }
            })
            .collect();
        if out.len() == 1 {
            out.pop().expect("one group")
        } else {
            Expr::Sum(out)
        }
    }

    pub fn eval(&self, env: &Env) -> Result<Complex64, CalculusError> {
        let mut acc = Complex64::new(0.0, 0.0);
        for (key, c) in &self.terms {
            acc += eval_term(key, c, env)?;
        }
        Ok(acc)
    }

    pub fn swap_rs(&self) -> NormalForm {
        let mut out = NormalForm::zero();
        for (k, c) in &self.terms {
            out.add_term(k.swap_rs(), *c);
        }
        out
    }

    /// Smallest [`TermKey::t_order`] among the terms.
    pub fn min_t_order(&self) -> Option<Q> {
        self.terms.keys().map(TermKey::t_order).min()
    }

    /// Splits into the terms of minimal t-order and the rest.
    pub fn split_leading(&self) -> (NormalForm, NormalForm) {
        let Some(min) = self.min_t_order() else {
            return (NormalForm::zero(), NormalForm::zero());
        };
        let mut lead = NormalForm::zero();
        let mut rest = NormalForm::zero();
        for (k, c) in &self.terms {
            if k.t_order() == min {
                lead.add_term(k.clone(), *c);
            } else {
                rest.add_term(k.clone(), *c);
            }
        }
        (lead, rest)
    }

    /// Multiplies every term by a constant.
    pub fn scale(&self, c: CQ) -> NormalForm {
        let mut out = NormalForm::zero();
        for (k, v) in &self.terms {
            out.add_term(k.clone(), *v * c);
        }
        out
    }
}

fn eval_term(key: &TermKey, c: &CQ, env: &Env) -> Result<Complex64, CalculusError> {
    let f = |x: Q| x.to_f64().unwrap_or(f64::NAN);
    let mut v = cq_to_c64(c) * std::f64::consts::PI.powi(key.pi);
    let mut real = 1.0;
    for (x, e) in [(env.r, key.r), (env.s, key.s), (env.t, key.t), (env.k, key.k)] {
        if e.is_zero() {
            continue;
        }
        real *= if e.is_integer() {
            x.powi(e.to_integer() as i32)
        } else {
            x.powf(f(e))
        };
    }
    v *= real;
    if !key.branch.is_zero() {
        v *= BranchConvention::pow(env.t, f(key.branch));
    }
    if !key.phase.is_zero() {
        v *= Complex64::from_polar(1.0, key.phase.eval(env));
    }
    for sp in &key.specials {
        v *= sp.eval(env)?;
    }
    Ok(v)
}
