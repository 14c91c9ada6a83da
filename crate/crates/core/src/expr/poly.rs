//! Sparse multivariate polynomials with exact rational coefficients.
//!
//! Generators are frame symbols plus opaque root atoms (`g^(1/k)`). Atoms are
//! independent generators as far as this module is concerned; the relation
//! `atom^k = g` is applied one level up, in [`super::ratfunc`].

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::ratfunc::RootAtom;
use super::symbol::Symbol;

pub(crate) type Coeff = BigRational;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) enum Var {
    Sym(Symbol),
    Root(Arc<RootAtom>),
}

/// Power product, kept sorted by variable with strictly positive exponents.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) struct Monomial(Vec<(Var, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(v: Var, e: u32) -> Self {
        if e == 0 {
            Monomial::one()
        } else {
            Monomial(vec![(v, e)])
        }
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn factors(&self) -> &[(Var, u32)] {
        &self.0
    }

    pub fn from_factors(mut f: Vec<(Var, u32)>) -> Self {
        f.retain(|(_, e)| *e > 0);
        f.sort_by(|a, b| a.0.cmp(&b.0));
        let mut out: Vec<(Var, u32)> = Vec::with_capacity(f.len());
        for (v, e) in f {
            match out.last_mut() {
                Some((lv, le)) if *lv == v => *le += e,
                _ => out.push((v, e)),
            }
        }
        Monomial(out)
    }

    pub fn degree(&self, v: &Var) -> u32 {
        self.0.iter().find(|(w, _)| w == v).map(|(_, e)| *e).unwrap_or(0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a[i].0.clone(), a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial(out)
    }

    /// `self / other` if `other` divides `self`.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut out = Vec::with_capacity(self.0.len());
        let mut j = 0;
        for (v, e) in &self.0 {
            let d = if j < other.0.len() && other.0[j].0 == *v {
                j += 1;
                other.0[j - 1].1
            } else {
                0
            };
            if d > *e {
                return None;
            }
            if *e > d {
                out.push((v.clone(), e - d));
            }
        }
        if j < other.0.len() {
            return None;
        }
        Some(Monomial(out))
    }

    /// Componentwise minimum of exponents.
    pub fn gcd(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::new();
        for (v, e) in &self.0 {
            let d = other.degree(v);
            if d > 0 {
                out.push((v.clone(), (*e).min(d)));
            }
        }
        Monomial(out)
    }

    pub fn without(&self, v: &Var) -> Monomial {
        Monomial(self.0.iter().filter(|(w, _)| w != v).cloned().collect())
    }

    /// Lexicographic monomial order in which a smaller variable is more
    /// significant. Compatible with multiplication.
    pub fn lex_cmp(&self, other: &Monomial) -> Ordering {
        let (a, b) = (&self.0, &other.0);
        let (mut i, mut j) = (0, 0);
        loop {
            match (a.get(i), b.get(j)) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some((va, ea)), Some((vb, eb))) => match va.cmp(vb) {
                    Ordering::Less => return Ordering::Greater,
                    Ordering::Greater => return Ordering::Less,
                    Ordering::Equal => {
                        if ea != eb {
                            return ea.cmp(eb);
                        }
                        i += 1;
                        j += 1;
                    }
                },
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) struct Poly {
    terms: BTreeMap<Monomial, Coeff>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn one() -> Self {
        Poly::constant(Coeff::one())
    }

    pub fn constant(c: Coeff) -> Self {
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.terms.insert(Monomial::one(), c);
        }
        p
    }

    pub fn var(v: Var) -> Self {
        Poly::term(Coeff::one(), Monomial::var(v, 1))
    }

    pub fn term(c: Coeff, m: Monomial) -> Self {
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Coeff)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.as_constant().is_some_and(|c| c.is_one())
    }

    pub fn as_constant(&self) -> Option<&Coeff> {
        match self.terms.len() {
            0 => None,
            1 => self.terms.get(&Monomial::one()),
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.is_zero() || self.as_constant().is_some()
    }

    pub fn is_monomial(&self) -> bool {
        self.terms.len() == 1
    }

    fn add_term(&mut self, m: Monomial, c: Coeff) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect(),
        }
    }

    pub fn scale(&self, k: &Coeff) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect(),
        }
    }

    pub fn mul_monomial(&self, m: &Monomial, k: &Coeff) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(n, c)| (n.mul(m), c * k)).collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        if let Some(c) = self.as_constant() {
            return other.scale(c);
        }
        if let Some(c) = other.as_constant() {
            return self.scale(c);
        }
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut acc = Poly::one();
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.terms
            .keys()
            .flat_map(|m| m.factors().iter().map(|(v, _)| v.clone()))
            .collect()
    }

    pub fn contains(&self, v: &Var) -> bool {
        self.terms.keys().any(|m| m.degree(v) > 0)
    }

    pub fn degree_in(&self, v: &Var) -> u32 {
        self.terms.keys().map(|m| m.degree(v)).max().unwrap_or(0)
    }

    /// Coefficient of `v^k`, as a polynomial free of `v`.
    pub fn coeff_in(&self, v: &Var, k: u32) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            if m.degree(v) == k {
                out.add_term(m.without(v), c.clone());
            }
        }
        out
    }

    /// Partial derivative treating every generator as independent.
    pub fn derivative(&self, v: &Var) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let e = m.degree(v);
            if e == 0 {
                continue;
            }
            let rest: Vec<(Var, u32)> = m
                .factors()
                .iter()
                .map(|(w, k)| if w == v { (w.clone(), k - 1) } else { (w.clone(), *k) })
                .collect();
            out.add_term(Monomial::from_factors(rest), c * Coeff::from_integer(BigInt::from(e)));
        }
        out
    }

    pub fn leading(&self) -> Option<(&Monomial, &Coeff)> {
        self.terms.iter().max_by(|a, b| a.0.lex_cmp(b.0))
    }

    /// Exact division; `None` when `divisor` does not divide `self`.
    pub fn div_exact(&self, divisor: &Poly) -> Option<Poly> {
        if divisor.is_zero() {
            return None;
        }
        if let Some(c) = divisor.as_constant() {
            return Some(self.scale(&c.recip()));
        }
        let (lm, lc) = divisor.leading()?;
        let (lm, lc) = (lm.clone(), lc.clone());
        let mut rem = self.clone();
        let mut quot = Poly::zero();
        while let Some((rm, rc)) = rem.leading() {
            let m = rm.div(&lm)?;
            let c = rc / &lc;
            rem = rem.sub(&divisor.mul_monomial(&m, &c));
            quot.add_term(m, c);
        }
        Some(quot)
    }

    /// Gcd of all monomials (minimum exponent per variable).
    pub fn monomial_content(&self) -> Monomial {
        let mut it = self.terms.keys();
        let Some(first) = it.next() else {
            return Monomial::one();
        };
        it.fold(first.clone(), |acc, m| acc.gcd(m))
    }

    /// Scales so that the lex-leading coefficient is 1. Returns the scaled
    /// polynomial and the factor that was divided out.
    pub fn monic(&self) -> (Poly, Coeff) {
        match self.leading() {
            None => (Poly::zero(), Coeff::one()),
            Some((_, c)) => {
                let c = c.clone();
                (self.scale(&c.recip()), c)
            }
        }
    }

    /// Primitive integer form: integer coefficients with gcd 1 and positive
    /// leading coefficient.
    pub fn primitive_integer(&self) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let den_lcm = self
            .terms
            .values()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let scaled = self.scale(&Coeff::from_integer(den_lcm));
        let g = scaled
            .terms
            .values()
            .fold(BigInt::zero(), |acc, c| acc.gcd(c.numer()));
        let mut k = Coeff::from_integer(g).recip();
        if scaled.leading().is_some_and(|(_, c)| c.is_negative()) {
            k = -k;
        }
        scaled.scale(&k)
    }
}

/// Content with respect to `v`: gcd of the coefficients of the powers of `v`.
fn content_in(p: &Poly, v: &Var) -> Poly {
    let d = p.degree_in(v);
    let mut g = Poly::zero();
    for k in 0..=d {
        let c = p.coeff_in(v, k);
        if c.is_zero() {
            continue;
        }
        g = gcd(&g, &c);
        if g.is_constant() {
            return Poly::one();
        }
    }
    g
}

fn pseudo_rem(a: &Poly, b: &Poly, v: &Var) -> Poly {
    let db = b.degree_in(v);
    let lb = b.coeff_in(v, db);
    let mut r = a.clone();
    while !r.is_zero() && r.contains(v) && r.degree_in(v) >= db {
        let dr = r.degree_in(v);
        let lr = r.coeff_in(v, dr);
        let shift = Poly::term(Coeff::one(), Monomial::var(v.clone(), dr - db));
        r = r.mul(&lb).sub(&lr.mul(&shift).mul(b));
    }
    r
}

fn primitive_in(p: &Poly, v: &Var) -> Poly {
    let c = content_in(p, v);
    if c.is_constant() {
        return p.clone();
    }
    p.div_exact(&c).expect("content divides polynomial")
}

/// `gcd(a, b)` for `v` absent from `a`: folds `a` with the coefficients of
/// the powers of `v` in `b`.
fn gcd_with_coeffs(a: &Poly, b: &Poly, v: &Var) -> Poly {
    let mut g = a.clone();
    for k in 0..=b.degree_in(v) {
        let c = b.coeff_in(v, k);
        if c.is_zero() {
            continue;
        }
        g = gcd(&g, &c);
        if g.is_one() {
            break;
        }
    }
    g.primitive_integer()
}

/// Greatest common divisor over Q, normalized to primitive integer form.
/// `gcd(0, 0) = 0`; a constant result is reported as `1`.
pub(crate) fn gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return b.primitive_integer();
    }
    if b.is_zero() {
        return a.primitive_integer();
    }
    if a.is_constant() || b.is_constant() {
        return Poly::one();
    }
    if a.is_monomial() || b.is_monomial() {
        let m = a.monomial_content().gcd(&b.monomial_content());
        return Poly::term(Coeff::one(), m);
    }
    let va = a.vars();
    let vb = b.vars();
    // a variable present in only one argument cannot occur in the gcd
    if let Some(v) = vb.difference(&va).next() {
        return gcd_with_coeffs(a, b, v);
    }
    if let Some(v) = va.difference(&vb).next() {
        return gcd_with_coeffs(b, a, v);
    }
    let v = va
        .iter()
        .min_by_key(|v| (a.degree_in(v).max(b.degree_in(v)), (*v).clone()))
        .expect("non-constant")
        .clone();
    let ca = content_in(a, &v);
    let cb = content_in(b, &v);
    let c = gcd(&ca, &cb);
    let pa = a.div_exact(&ca).expect("content divides");
    let pb = b.div_exact(&cb).expect("content divides");
    let (mut r0, mut r1) = if pa.degree_in(&v) >= pb.degree_in(&v) { (pa, pb) } else { (pb, pa) };
    let g = loop {
        let r = pseudo_rem(&r0, &r1, &v);
        if r.is_zero() {
            break r1;
        }
        if !r.contains(&v) {
            break Poly::one();
        }
        r0 = r1;
        r1 = primitive_in(&r, &v);
    };
    let g = primitive_in(&g, &v);
    c.mul(&g).primitive_integer()
}
