//! Poisson brackets, Lie derivatives along the canonical field, and 1-form
//! utilities on the canonical frame.

use std::collections::HashMap;

use num_rational::BigRational;
use serde::Serialize;
use thiserror::Error;

use crate::control::{canonical_equations, HamiltonianSystem};
use crate::expr::{is_zero, Expr, ExprError, OneForm, Point, Symbol, ZeroVerdict};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SymplecticError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("1-form is not closed: mixed partials in ({0}, {1}) differ")]
    NotClosed(Symbol, Symbol, Option<Point>),
    #[error("no supported antiderivative of `{term}` in `{coordinate}`")]
    NonIntegrableTerm { coordinate: Symbol, term: String },
    #[error("base point is missing coordinate `{0}` or is not finite")]
    BadBase(Symbol),
}

/// `(f, g) = Σ ∂f/∂q^i ∂g/∂p_i − ∂f/∂p_i ∂g/∂q^i`, so that `(f, H)` is the
/// derivative of `f` along the canonical flow.
pub fn poisson_bracket(f: &Expr, g: &Expr, costates: &[Symbol], states: &[Symbol]) -> Expr {
    costates
        .iter()
        .zip(states)
        .map(|(p, q)| f.diff(q) * g.diff(p) - f.diff(p) * g.diff(q))
        .sum()
}

/// `L_h f = (f, H)`.
pub fn lie_derivative_fn(hs: &HamiltonianSystem, f: &Expr) -> Expr {
    poisson_bracket(f, &hs.hamiltonian, &hs.costates, &hs.states)
}

/// `L_h(Σ a_w dw) = Σ (L_h a_w) dw + Σ a_w d(L_h w)` on the canonical frame.
pub fn lie_derivative_oneform(hs: &HamiltonianSystem, rho: &OneForm) -> OneForm {
    let coords = rho.symbols().to_vec();
    let velocity: HashMap<Symbol, Expr> = canonical_equations(hs).into_iter().collect();
    let mut out: Vec<Expr> = rho.coeffs().iter().map(|a| lie_derivative_fn(hs, a)).collect();
    for (w, a) in coords.iter().zip(rho.coeffs()) {
        if a.is_zero() {
            continue;
        }
        let Some(wdot) = velocity.get(w) else { continue };
        for (k, z) in coords.iter().enumerate() {
            out[k] = &out[k] + a * wdot.diff(z);
        }
    }
    OneForm::new(coords, out)
}

/// `Σ dx_i ∧ dy^i` pulled back to the canonical frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PulledBackTwoForm {
    pub xs: Vec<Expr>,
    pub ys: Vec<Expr>,
}

impl PulledBackTwoForm {
    pub fn new(xs: Vec<Expr>, ys: Vec<Expr>) -> Self {
        assert_eq!(xs.len(), ys.len(), "one x per y");
        PulledBackTwoForm { xs, ys }
    }

    /// `Σ x_i dy^i`.
    pub fn primitive(&self, coords: &[Symbol]) -> OneForm {
        self.xs
            .iter()
            .zip(&self.ys)
            .fold(OneForm::zero(coords), |acc, (x, y)| acc.add(&OneForm::exact(y, coords).scale(x)))
    }
}

/// `Σ (y^i, H) dx_i − (x_i, H) dy^i`.
pub fn interior_product(hs: &HamiltonianSystem, omega: &PulledBackTwoForm) -> OneForm {
    let coords = hs.coords();
    let mut acc = OneForm::zero(&coords);
    for (x, y) in omega.xs.iter().zip(&omega.ys) {
        let dx = OneForm::exact(x, &coords).scale(&lie_derivative_fn(hs, y));
        let dy = OneForm::exact(y, &coords).scale(&lie_derivative_fn(hs, x));
        acc = acc.add(&dx).sub(&dy);
    }
    acc
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Closedness {
    pub verdict: ZeroVerdict,
    /// First coordinate pair with unequal mixed partials.
    pub pair: Option<(Symbol, Symbol)>,
    /// `∂a_i/∂w_j − ∂a_j/∂w_i` for that pair.
    #[serde(skip)]
    pub difference: Option<Expr>,
}

impl Closedness {
    pub fn holds(&self) -> bool {
        self.verdict.holds()
    }
}

/// Tests `∂a_w/∂w' = ∂a_w'/∂w` for every pair of coordinates.
pub fn is_closed(rho: &OneForm, samples: &[Point]) -> Closedness {
    let (ws, a) = (rho.symbols(), rho.coeffs());
    let mut verdicts = Vec::new();
    for i in 0..ws.len() {
        for j in i + 1..ws.len() {
            let d = a[i].diff(&ws[j]) - a[j].diff(&ws[i]);
            let v = is_zero(&d, samples);
            if v.is_no() {
                return Closedness { verdict: v, pair: Some((ws[i].clone(), ws[j].clone())), difference: Some(d) };
            }
            verdicts.push(v);
        }
    }
    Closedness { verdict: ZeroVerdict::all(verdicts), pair: None, difference: None }
}

/// Potential `Q` with `dQ = ρ` and `Q(base) = 0`, by integrating along
/// axis-parallel segments in frame order.
pub fn reconstruct_potential(rho: &OneForm, base: &Point, samples: &[Point]) -> Result<Expr, SymplecticError> {
    let closed = is_closed(rho, samples);
    if !closed.holds() {
        let (a, b) = closed.pair.clone().unwrap_or_else(|| (rho.symbols()[0].clone(), rho.symbols()[0].clone()));
        let witness = match closed.verdict {
            ZeroVerdict::No { witness, .. } => witness,
            _ => None,
        };
        return Err(SymplecticError::NotClosed(a, b, witness));
    }
    let ws = rho.symbols();
    let mut b = Vec::with_capacity(ws.len());
    for w in ws {
        let v = base.get(w).and_then(BigRational::from_float).ok_or_else(|| SymplecticError::BadBase(w.clone()))?;
        b.push(Expr::constant(v));
    }
    let mut q = Expr::zero();
    for (k, (w, a)) in ws.iter().zip(rho.coeffs()).enumerate() {
        if a.is_zero() {
            continue;
        }
        let later: HashMap<Symbol, Expr> = ws[k + 1..].iter().cloned().zip(b[k + 1..].iter().cloned()).collect();
        let integrand = a.substitute(&later)?;
        let anti = integrand.antiderivative(w).ok_or_else(|| SymplecticError::NonIntegrableTerm {
            coordinate: w.clone(),
            term: integrand.to_string(),
        })?;
        q = q + &anti - anti.subs(w, &b[k])?;
    }
    Ok(q)
}
