use std::collections::HashMap;

use num_bigint::BigInt;

use super::poly::{Coeff, Poly, Var};
use super::ratfunc::{RatFunc, RootAtom};
use super::symbol::Symbol;
use super::{Expr, ExprError};

/// d/ds of a root atom `t = g^(1/k)`: `t * g' / (k g)`.
fn atom_derivative(a: &RootAtom, s: &Symbol) -> RatFunc {
    let dg = derivative(&a.base, s);
    if dg.is_zero() {
        return RatFunc::zero();
    }
    let t = RatFunc::new(Poly::var(Var::Root(std::sync::Arc::new(a.clone()))), Poly::one()).expect("unit den");
    let k = RatFunc::constant(Coeff::from_integer(BigInt::from(a.index)));
    t.mul(&dg).div(&a.base.mul(&k)).expect("atom base is nonzero")
}

fn poly_derivative(p: &Poly, s: &Symbol) -> RatFunc {
    let mut out = RatFunc::from_poly(p.derivative(&Var::Sym(s.clone())));
    for v in p.vars() {
        if let Var::Root(a) = &v {
            if !a.base.symbols().contains(s) {
                continue;
            }
            let outer = RatFunc::from_poly(p.derivative(&v));
            out = out.add(&outer.mul(&atom_derivative(a, s)));
        }
    }
    out
}

pub(super) fn derivative(r: &RatFunc, s: &Symbol) -> RatFunc {
    let dn = poly_derivative(&r.num, s);
    if r.den.is_one() {
        return dn;
    }
    let dd = poly_derivative(&r.den, s);
    let n = RatFunc::from_poly(r.num.clone());
    let d = RatFunc::from_poly(r.den.clone());
    dn.mul(&d)
        .sub(&n.mul(&dd))
        .div(&d.mul(&d))
        .expect("canonical denominator is nonzero")
}

fn substitute_poly(p: &Poly, map: &HashMap<Symbol, Expr>) -> Result<RatFunc, ExprError> {
    let mut acc = RatFunc::zero();
    let mut cache: HashMap<Var, RatFunc> = HashMap::new();
    for (m, c) in p.terms() {
        let mut t = RatFunc::constant(c.clone());
        for (v, e) in m.factors() {
            let val = match cache.get(v) {
                Some(x) => x.clone(),
                None => {
                    let x = match v {
                        Var::Sym(s) => match map.get(s) {
                            Some(x) => x.rf().clone(),
                            None => RatFunc::symbol(s.clone()),
                        },
                        Var::Root(a) => substitute_rf(&a.base, map)?.root(a.index),
                    };
                    cache.insert(v.clone(), x.clone());
                    x
                }
            };
            t = t.mul(&val.pow_int(*e as i64)?);
        }
        acc = acc.add(&t);
    }
    Ok(acc)
}

fn substitute_rf(r: &RatFunc, map: &HashMap<Symbol, Expr>) -> Result<RatFunc, ExprError> {
    let n = substitute_poly(&r.num, map)?;
    if r.den.is_one() {
        return Ok(n);
    }
    let d = substitute_poly(&r.den, map)?;
    Ok(n.div(&d)?)
}

/// Antiderivative in `s` for integrands `Σ c_i s^i / (D s^j)` with `D`, `c_i`
/// free of `s` and no `1/s` term.
fn antiderivative(r: &RatFunc, s: &Symbol) -> Option<RatFunc> {
    if r.atoms().iter().any(|a| a.base.symbols().contains(s)) {
        return None;
    }
    let v = Var::Sym(s.clone());
    let j = r.den.degree_in(&v);
    if (0..j).any(|k| !r.den.coeff_in(&v, k).is_zero()) {
        return None;
    }
    let rest = RatFunc::from_poly(r.den.coeff_in(&v, j));
    let sym = RatFunc::symbol(s.clone());
    let mut acc = RatFunc::zero();
    for i in 0..=r.num.degree_in(&v) {
        let c = r.num.coeff_in(&v, i);
        if c.is_zero() {
            continue;
        }
        let e = i as i64 - j as i64 + 1;
        if e == 0 {
            return None;
        }
        let k = RatFunc::constant(Coeff::from_integer(BigInt::from(e)));
        let term = RatFunc::from_poly(c).mul(&sym.pow_int(e).ok()?).div(&rest.mul(&k)).ok()?;
        acc = acc.add(&term);
    }
    Some(acc)
}

impl Expr {
    /// Antiderivative in `s`, supported for polynomials in `s` plus negative
    /// powers `s^-k` with `k >= 2`. Returns `None` outside that class.
    pub fn antiderivative(&self, s: &Symbol) -> Option<Expr> {
        antiderivative(self.rf(), s).map(Expr::from_rf)
    }

    /// Simultaneous substitution of symbols by expressions.
    ///
    /// Fails with [`ExprError::DivisionByZero`] when a denominator collapses to
    /// zero under the substitution.
    pub fn substitute(&self, map: &HashMap<Symbol, Expr>) -> Result<Expr, ExprError> {
        if map.is_empty() || !self.symbols().iter().any(|s| map.contains_key(s)) {
            return Ok(self.clone());
        }
        Ok(Expr::from_rf(substitute_rf(self.rf(), map)?))
    }

    /// Substitutes a single symbol.
    pub fn subs(&self, s: &Symbol, value: &Expr) -> Result<Expr, ExprError> {
        let mut map = HashMap::new();
        map.insert(s.clone(), value.clone());
        self.substitute(&map)
    }
}
