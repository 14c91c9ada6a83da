//! Canonical rational functions `num / den`.
//!
//! Canonical means: `gcd(num, den) = 1`, the lex-leading coefficient of `den`
//! is 1, zero is `0/1`, and no root atom `g^(1/k)` appears to a power `>= k`.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::poly::{gcd, Coeff, Monomial, Poly, Var};
use super::symbol::Symbol;

/// Opaque leaf `base^(1/index)` with `index >= 2`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) struct RootAtom {
    pub base: RatFunc,
    pub index: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) struct RatFunc {
    pub num: Poly,
    pub den: Poly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct ZeroDenominator;

/// Replaces `t^e` (`e >= k`) by `base^(e div k) * t^(e mod k)` for every root
/// atom `t = base^(1/k)`. Returns `None` when nothing needs reducing.
fn reduce_roots(p: &Poly) -> Option<(Poly, Poly)> {
    let overflow = p.terms().any(|(m, _)| {
        m.factors()
            .iter()
            .any(|(v, e)| matches!(v, Var::Root(a) if *e >= a.index))
    });
    if !overflow {
        return None;
    }
    let mut acc: Vec<(Poly, Poly)> = Vec::new();
    for (m, c) in p.terms() {
        let mut kept = Vec::new();
        let mut fnum = Poly::one();
        let mut fden = Poly::one();
        for (v, e) in m.factors() {
            match v {
                Var::Root(a) if *e >= a.index => {
                    let q = e / a.index;
                    kept.push((v.clone(), e % a.index));
                    fnum = fnum.mul(&a.base.num.pow(q));
                    fden = fden.mul(&a.base.den.pow(q));
                }
                _ => kept.push((v.clone(), *e)),
            }
        }
        let term = Poly::term(c.clone(), Monomial::from_factors(kept)).mul(&fnum);
        match acc.iter_mut().find(|(_, d)| *d == fden) {
            Some((n, _)) => *n = n.add(&term),
            None => acc.push((term, fden)),
        }
    }
    let mut num = Poly::zero();
    let mut den = Poly::one();
    for (n, d) in acc {
        if d == den {
            num = num.add(&n);
        } else {
            num = num.mul(&d).add(&n.mul(&den));
            den = den.mul(&d);
        }
    }
    Some((num, den))
}

/// Clears one root atom from the denominator: `c t^e` is multiplied by
/// `t^(k-e)`, and a square-root binomial `a + b t` by its conjugate.
fn rationalize_den(num: &Poly, den: &Poly) -> Option<(Poly, Poly)> {
    for v in den.vars() {
        let Var::Root(a) = &v else { continue };
        let deg = den.degree_in(&v);
        if deg == 0 {
            continue;
        }
        let present: Vec<u32> = (0..=deg).filter(|&e| !den.coeff_in(&v, e).is_zero()).collect();
        let factor = if let [e] = present[..] {
            Poly::term(Coeff::one(), Monomial::var(v.clone(), a.index - e))
        } else if a.index == 2 && deg == 1 {
            den.coeff_in(&v, 0).sub(&den.coeff_in(&v, 1).mul(&Poly::var(v.clone())))
        } else {
            continue;
        };
        return Some((num.mul(&factor), den.mul(&factor)));
    }
    None
}

impl RatFunc {
    pub fn zero() -> Self {
        RatFunc { num: Poly::zero(), den: Poly::one() }
    }

    pub fn one() -> Self {
        RatFunc::constant(Coeff::one())
    }

    pub fn constant(c: Coeff) -> Self {
        RatFunc { num: Poly::constant(c), den: Poly::one() }
    }

    pub fn symbol(s: Symbol) -> Self {
        RatFunc { num: Poly::var(Var::Sym(s)), den: Poly::one() }
    }

    pub fn from_poly(p: Poly) -> Self {
        RatFunc::new(p, Poly::one()).expect("unit denominator")
    }

    pub fn new(mut num: Poly, mut den: Poly) -> Result<Self, ZeroDenominator> {
        for _ in 0..32 {
            let mut changed = false;
            if let Some((n, d)) = reduce_roots(&num) {
                num = n;
                den = den.mul(&d);
                changed = true;
            }
            if let Some((n, d)) = reduce_roots(&den) {
                den = n;
                num = num.mul(&d);
                changed = true;
            }
            if !changed && !den.is_zero() {
                if let Some((n, d)) = rationalize_den(&num, &den) {
                    num = n;
                    den = d;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        if den.is_zero() {
            return Err(ZeroDenominator);
        }
        if num.is_zero() {
            return Ok(RatFunc::zero());
        }
        if let Some(c) = den.as_constant() {
            let k = c.recip();
            return Ok(RatFunc { num: num.scale(&k), den: Poly::one() });
        }
        let g = gcd(&num, &den);
        if !g.is_one() {
            num = num.div_exact(&g).expect("gcd divides numerator");
            den = den.div_exact(&g).expect("gcd divides denominator");
        }
        let (den, c) = den.monic();
        let num = num.scale(&c.recip());
        Ok(RatFunc { num, den })
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn as_constant(&self) -> Option<Coeff> {
        if self.num.is_zero() {
            return Some(Coeff::zero());
        }
        if self.den.is_one() {
            return self.num.as_constant().cloned();
        }
        None
    }

    pub fn add(&self, o: &RatFunc) -> RatFunc {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        if self.den == o.den {
            return RatFunc::new(self.num.add(&o.num), self.den.clone()).expect("nonzero den");
        }
        RatFunc::new(
            self.num.mul(&o.den).add(&o.num.mul(&self.den)),
            self.den.mul(&o.den),
        )
        .expect("nonzero den")
    }

    pub fn neg(&self) -> RatFunc {
        RatFunc { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn sub(&self, o: &RatFunc) -> RatFunc {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &RatFunc) -> RatFunc {
        if self.is_zero() || o.is_zero() {
            return RatFunc::zero();
        }
        RatFunc::new(self.num.mul(&o.num), self.den.mul(&o.den)).expect("nonzero den")
    }

    pub fn div(&self, o: &RatFunc) -> Result<RatFunc, ZeroDenominator> {
        if o.is_zero() {
            return Err(ZeroDenominator);
        }
        RatFunc::new(self.num.mul(&o.den), self.den.mul(&o.num))
    }

    pub fn pow_int(&self, k: i64) -> Result<RatFunc, ZeroDenominator> {
        let e = u32::try_from(k.unsigned_abs()).map_err(|_| ZeroDenominator)?;
        if k >= 0 {
            RatFunc::new(self.num.pow(e), self.den.pow(e))
        } else {
            RatFunc::new(self.den.pow(e), self.num.pow(e))
        }
    }

    /// `self^(1/index)`, exact when the base is a perfect power of a rational
    /// constant, otherwise an opaque atom.
    pub fn root(&self, index: u32) -> RatFunc {
        if index <= 1 || self.is_zero() {
            return self.clone();
        }
        if let Some(c) = self.as_constant() {
            if let Some(r) = exact_rational_root(&c, index) {
                return RatFunc::constant(r);
            }
        }
        // (g^(1/a))^(1/b) = g^(1/(a b))
        if self.den.is_one() && self.num.is_monomial() {
            let (m, c) = self.num.terms().next().expect("one term");
            if c.is_one() {
                if let [(Var::Root(a), 1)] = m.factors() {
                    return a.base.root(a.index * index);
                }
            }
        }
        let atom = RootAtom { base: self.clone(), index };
        RatFunc::new(Poly::var(Var::Root(Arc::new(atom))), Poly::one()).expect("unit denominator")
    }

    pub fn pow_rational(&self, r: &Coeff) -> Result<RatFunc, ZeroDenominator> {
        let den = r.denom();
        if den.is_one() {
            let k: i64 = r.numer().try_into().map_err(|_| ZeroDenominator)?;
            return self.pow_int(k);
        }
        let index: u32 = den.try_into().map_err(|_| ZeroDenominator)?;
        let k: i64 = r.numer().try_into().map_err(|_| ZeroDenominator)?;
        if self.is_zero() {
            return if k > 0 { Ok(RatFunc::zero()) } else { Err(ZeroDenominator) };
        }
        self.root(index).pow_int(k)
    }

    pub fn has_atoms(&self) -> bool {
        self.num.vars().iter().chain(self.den.vars().iter()).any(|v| matches!(v, Var::Root(_)))
    }

    pub fn atoms(&self) -> BTreeSet<Arc<RootAtom>> {
        self.num
            .vars()
            .into_iter()
            .chain(self.den.vars())
            .filter_map(|v| match v {
                Var::Root(a) => Some(a),
                Var::Sym(_) => None,
            })
            .collect()
    }

    /// All symbols, including those inside atom bases.
    pub fn symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        collect_symbols(&self.num, &mut out);
        collect_symbols(&self.den, &mut out);
        out
    }
}

fn collect_symbols(p: &Poly, out: &mut BTreeSet<Symbol>) {
    for v in p.vars() {
        match v {
            Var::Sym(s) => {
                out.insert(s);
            }
            Var::Root(a) => {
                out.extend(a.base.symbols());
            }
        }
    }
}

fn exact_int_root(n: &BigInt, k: u32) -> Option<BigInt> {
    if n.is_negative() {
        if k % 2 == 0 {
            return None;
        }
        return exact_int_root(&-n, k).map(|r| -r);
    }
    let r = n.nth_root(k);
    (num_traits::pow(r.clone(), k as usize) == *n).then_some(r)
}

fn exact_rational_root(c: &Coeff, k: u32) -> Option<Coeff> {
    let n = exact_int_root(c.numer(), k)?;
    let d = exact_int_root(c.denom(), k)?;
    Some(Coeff::new(n, d))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(name: &str) -> RatFunc {
        RatFunc::symbol(Symbol::new(name))
    }

    fn rat(n: i64, d: i64) -> Coeff {
        Coeff::new(n.into(), d.into())
    }

    #[test]
    fn cancels_common_factor() {
        let q1 = sym("q1");
        let p2 = sym("p2");
        let e = q1.mul(&p2.div(&q1).unwrap());
        assert_eq!(e, p2);
    }

    #[test]
    fn root_power_reduces() {
        let y = sym("y1");
        let t = y.root(2);
        assert_eq!(t.mul(&t), y);
        let y32 = y.pow_rational(&rat(3, 2)).unwrap();
        assert_eq!(y32, y.mul(&t));
    }

    #[test]
    fn exact_constant_roots() {
        let four = RatFunc::constant(rat(4, 9));
        assert_eq!(four.root(2), RatFunc::constant(rat(2, 3)));
        assert!(RatFunc::constant(rat(2, 1)).root(2).has_atoms());
    }

    #[test]
    fn nested_root_collapses() {
        let y = sym("y1");
        assert_eq!(y.root(2).root(2), y.root(4));
    }

    #[test]
    fn zero_denominator_rejected() {
        assert!(sym("q1").div(&RatFunc::zero()).is_err());
    }
}
