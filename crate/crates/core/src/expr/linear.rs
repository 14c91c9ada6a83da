use std::collections::BTreeSet;

use super::poly::{Poly, Var};
use super::ratfunc::RatFunc;
use super::{Expr, ExprError, Symbol};

fn affine_parts(e: &Expr, unknowns: &[Symbol]) -> Result<(Vec<Expr>, Expr), ExprError> {
    let rf = e.rf();
    let unknown_set: BTreeSet<&Symbol> = unknowns.iter().collect();
    let not_linear = || ExprError::NotLinear(e.to_string());
    if RatFunc::from_poly(rf.den.clone()).symbols().iter().any(|s| unknown_set.contains(s)) {
        return Err(not_linear());
    }
    for a in rf.atoms() {
        if a.base.symbols().iter().any(|s| unknown_set.contains(s)) {
            return Err(not_linear());
        }
    }
    let mut rest = Poly::zero();
    for (m, c) in rf.num.terms() {
        let deg: u32 = m
            .factors()
            .iter()
            .filter(|(v, _)| matches!(v, Var::Sym(s) if unknown_set.contains(s)))
            .map(|(_, k)| k)
            .sum();
        if deg > 1 {
            return Err(not_linear());
        }
        if deg == 0 {
            rest = rest.add(&Poly::term(c.clone(), m.clone()));
        }
    }
    let den = RatFunc::from_poly(rf.den.clone());
    let over_den = |p: Poly| Expr::from_rf(RatFunc::from_poly(p).div(&den).expect("nonzero den"));
    let coeffs = unknowns
        .iter()
        .map(|u| over_den(rf.num.coeff_in(&Var::Sym(u.clone()), 1)))
        .collect();
    Ok((coeffs, over_den(rest)))
}

impl Expr {
    /// Degree in `s` when `s` enters only polynomially (not in a denominator
    /// or under a root).
    pub fn polynomial_degree(&self, s: &Symbol) -> Option<u32> {
        let rf = self.rf();
        let v = Var::Sym(s.clone());
        if rf.den.contains(&v) || rf.atoms().iter().any(|a| a.base.symbols().contains(s)) {
            return None;
        }
        Some(rf.num.degree_in(&v))
    }

    /// Coefficient of `s^k`, meaningful when [`Expr::polynomial_degree`] is
    /// `Some`.
    pub fn coefficient(&self, s: &Symbol, k: u32) -> Expr {
        let rf = self.rf();
        let c = RatFunc::from_poly(rf.num.coeff_in(&Var::Sym(s.clone()), k));
        Expr::from_rf(c.div(&RatFunc::from_poly(rf.den.clone())).expect("nonzero den"))
    }
}

/// Gauss–Jordan reduction in place; returns pivot columns by row.
fn reduce(a: &mut [Vec<Expr>], b: &mut [Expr]) -> Vec<usize> {
    let rows = a.len();
    let cols = a.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(pr) = (r..rows).find(|&i| !a[i][c].is_zero()) else { continue };
        a.swap(r, pr);
        b.swap(r, pr);
        let piv = a[r][c].clone();
        for i in 0..rows {
            if i == r || a[i][c].is_zero() {
                continue;
            }
            let f = a[i][c].checked_div(&piv).expect("pivot is nonzero");
            for k in c..cols {
                let t = &a[r][k] * &f;
                a[i][k] = &a[i][k] - t;
            }
            b[i] = &b[i] - &b[r] * &f;
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Solves a system of equations `e_i = 0` that is affine in `unknowns`.
///
/// Returns one expression per unknown, in order.
pub fn solve_linear(equations: &[Expr], unknowns: &[Symbol]) -> Result<Vec<Expr>, ExprError> {
    for u in unknowns {
        if !equations.iter().any(|e| e.depends_on(u)) {
            return Err(ExprError::NoSolution(format!("`{u}` does not appear in the equations")));
        }
    }
    let mut a = Vec::with_capacity(equations.len());
    let mut b = Vec::with_capacity(equations.len());
    for e in equations {
        let (row, c) = affine_parts(e, unknowns)?;
        a.push(row);
        b.push(-c);
    }
    let pivots = reduce(&mut a, &mut b);
    if pivots.len() < unknowns.len() {
        return Err(ExprError::Singular { rank: pivots.len(), size: unknowns.len() });
    }
    if b[pivots.len()..].iter().any(|x| !x.is_zero()) {
        return Err(ExprError::NoSolution("inconsistent equations".into()));
    }
    let mut sol = vec![Expr::zero(); unknowns.len()];
    for (row, &col) in pivots.iter().enumerate() {
        sol[col] = b[row].checked_div(&a[row][col])?;
    }
    Ok(sol)
}

/// Rank over the field of rational functions (generic rank).
pub fn symbolic_rank(matrix: &[Vec<Expr>]) -> usize {
    let mut a = matrix.to_vec();
    let mut b = vec![Expr::zero(); a.len()];
    reduce(&mut a, &mut b).len()
}
