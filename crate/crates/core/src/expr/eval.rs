use std::collections::BTreeMap;

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use super::poly::{Poly, Var};
use super::ratfunc::RatFunc;
use super::symbol::Symbol;
use super::{Expr, ExprError};

/// Denominators at or below this magnitude are treated as a division by zero.
const DEN_TOL: f64 = 1e-300;

/// Numeric assignment of values to symbols.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(BTreeMap<Symbol, f64>);

impl Point {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a Symbol, f64)>) -> Self {
        Point(pairs.into_iter().map(|(s, v)| (s.clone(), v)).collect())
    }

    /// Zips an ordered symbol list with a value slice.
    pub fn from_slices(symbols: &[Symbol], values: &[f64]) -> Self {
        Point(symbols.iter().cloned().zip(values.iter().copied()).collect())
    }

    pub fn get(&self, s: &Symbol) -> Option<f64> {
        self.0.get(s).copied()
    }

    pub fn insert(&mut self, s: Symbol, v: f64) {
        self.0.insert(s, v);
    }

    pub fn with(mut self, s: &Symbol, v: f64) -> Self {
        self.insert(s.clone(), v);
        self
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Symbol, f64)> {
        self.0.iter().map(|(s, v)| (s, *v))
    }

    /// Values in the order of `symbols`; missing entries are `NaN`.
    pub fn values(&self, symbols: &[Symbol]) -> Vec<f64> {
        symbols.iter().map(|s| self.get(s).unwrap_or(f64::NAN)).collect()
    }

    /// Merges `other` into a copy of `self`; `other` wins on conflicts.
    pub fn merged(&self, other: &Point) -> Point {
        let mut out = self.clone();
        out.0.extend(other.0.iter().map(|(s, v)| (s.clone(), *v)));
        out
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn eval_var(v: &Var, pt: &Point) -> Result<f64, ExprError> {
    match v {
        Var::Sym(s) => pt
            .get(s)
            .ok_or_else(|| ExprError::EvalDomain(format!("no value for `{s}`"))),
        Var::Root(a) => {
            let b = eval_rf(&a.base, pt)?;
            if b < 0.0 {
                if a.index % 2 == 0 {
                    return Err(ExprError::EvalDomain(format!(
                        "negative argument {b} under a root of even index {}",
                        a.index
                    )));
                }
                return Ok(-(-b).powf(1.0 / a.index as f64));
            }
            Ok(if a.index == 2 { b.sqrt() } else { b.powf(1.0 / a.index as f64) })
        }
    }
}

fn eval_poly(p: &Poly, pt: &Point) -> Result<f64, ExprError> {
    let mut acc = 0.0;
    for (m, c) in p.terms() {
        let mut t = c.to_f64().unwrap_or(f64::NAN);
        for (v, e) in m.factors() {
            t *= eval_var(v, pt)?.powi(*e as i32);
        }
        acc += t;
    }
    Ok(acc)
}

pub(super) fn eval_rf(r: &RatFunc, pt: &Point) -> Result<f64, ExprError> {
    let n = eval_poly(&r.num, pt)?;
    if r.den.is_one() {
        return finite(n);
    }
    let d = eval_poly(&r.den, pt)?;
    if !(d.abs() > DEN_TOL) {
        return Err(ExprError::EvalDomain(format!("division by {d}")));
    }
    finite(n / d)
}

fn finite(v: f64) -> Result<f64, ExprError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ExprError::EvalDomain(format!("non-finite value {v}")))
    }
}

impl Expr {
    /// Floating-point evaluation at `point`.
    pub fn eval(&self, point: &Point) -> Result<f64, ExprError> {
        eval_rf(self.rf(), point)
    }
}
