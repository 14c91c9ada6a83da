use serde::Serialize;

use super::{FactorizationCandidate, FactorizationError};
use crate::control::{HamiltonianSystem, LagrangianSystem, Synthesis};
use crate::expr::{is_zero, jacobian_at, numeric_rank, Expr, OneForm, Point, ZeroVerdict};
use crate::numeric::{on_charts, CHART_MARGIN};
use crate::symplectic::{
    interior_product, is_closed, lie_derivative_fn, lie_derivative_oneform, reconstruct_potential, Closedness,
};

fn max_abs(exprs: &[Expr], samples: &[Point]) -> f64 {
    let mut m: f64 = 0.0;
    for pt in samples {
        for e in exprs {
            if let Ok(v) = e.eval(pt) {
                m = m.max(v.abs());
            }
        }
    }
    m
}

/// Rank of the `2ν` maps must be `2ν` at every sample; returns that rank.
pub fn check_independence(
    c: &FactorizationCandidate,
    hs: &HamiltonianSystem,
    samples: &[Point],
) -> Result<usize, FactorizationError> {
    let expected = 2 * c.nu();
    let maps = c.map_exprs();
    let coords = hs.coords();
    for pt in samples {
        let Ok(j) = jacobian_at(&maps, &coords, pt) else { continue };
        let rank = numeric_rank(&j);
        if rank < expected {
            return Err(FactorizationError::RankDeficient { rank, expected, witness: Some(pt.clone()) });
        }
    }
    Ok(expected)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualCheck {
    pub verdict: ZeroVerdict,
    #[serde(skip)]
    pub residual: OneForm,
    pub max_abs: f64,
}

/// Residual `L_h(Σ x_i dy^i) − dQ̃`.
pub fn verify_factorization_equation(
    hs: &HamiltonianSystem,
    c: &FactorizationCandidate,
    qtilde: &Expr,
    samples: &[Point],
) -> ResidualCheck {
    let coords = hs.coords();
    let lie = lie_derivative_oneform(hs, &c.two_form().primitive(&coords));
    let residual = lie.sub(&OneForm::exact(qtilde, &coords));
    ResidualCheck { verdict: residual.is_zero(samples), max_abs: residual.max_abs(samples), residual }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InteriorRoute {
    pub closed: Closedness,
    /// `i_hΩ² − dḠ`, i.e. the potential of `i_hΩ²` equals `Ḡ` up to a constant.
    pub potential_match: ZeroVerdict,
    pub verdict: ZeroVerdict,
    pub max_abs: f64,
}

/// The same condition stated through the interior product: `i_hΩ²` is
/// closed and its potential is `Ḡ`.
pub fn verify_via_interior_product(
    hs: &HamiltonianSystem,
    c: &FactorizationCandidate,
    qtilde: &Expr,
    samples: &[Point],
) -> InteriorRoute {
    let coords = hs.coords();
    let ip = interior_product(hs, &c.two_form());
    let closed = is_closed(&ip, samples);
    let diff = ip.sub(&OneForm::exact(&build_gbar(hs, c, qtilde), &coords));
    let potential_match = diff.is_zero(samples);
    let verdict = if closed.holds() { potential_match.clone() } else { closed.verdict.clone() };
    InteriorRoute { closed, potential_match, verdict, max_abs: diff.max_abs(samples) }
}

fn choose_base(hs: &HamiltonianSystem, rho: &OneForm, samples: &[Point]) -> Point {
    let coords = hs.coords();
    let ok = |pt: &Point| on_charts(&hs.charts, pt, CHART_MARGIN) && rho.coeffs().iter().all(|a| a.eval(pt).is_ok());
    let mut tries = vec![
        Point::from_slices(&coords, &vec![0.0; coords.len()]),
        Point::from_slices(&coords, &vec![1.0; coords.len()]),
    ];
    tries.extend(samples.iter().map(|p| {
        Point::from_slices(&coords, &p.values(&coords).iter().map(|v| (v * 16.0).round() / 16.0).collect::<Vec<_>>())
    }));
    tries.into_iter().find(ok).unwrap_or_else(|| samples.first().cloned().unwrap_or_default())
}

/// `Q̃` with `dQ̃ = L_h(Σ x_i dy^i)`, normalized to vanish at a base point.
pub fn reconstruct_qtilde(
    hs: &HamiltonianSystem,
    c: &FactorizationCandidate,
    samples: &[Point],
) -> Result<Expr, FactorizationError> {
    let coords = hs.coords();
    let rho = lie_derivative_oneform(hs, &c.two_form().primitive(&coords));
    let base = choose_base(hs, &rho, samples);
    Ok(reconstruct_potential(&rho, &base, samples)?)
}

/// `Ḡ = Σ x_i (y^i, H) − Q̃`.
pub fn build_gbar(hs: &HamiltonianSystem, c: &FactorizationCandidate, qtilde: &Expr) -> Expr {
    c.xs.iter().zip(&c.ys).map(|(x, y)| x * lie_derivative_fn(hs, y)).sum::<Expr>() - qtilde
}

/// `(Ḡ, H) = 0`, with the largest sampled value of the bracket.
pub fn check_first_integral(hs: &HamiltonianSystem, gbar: &Expr, samples: &[Point]) -> (ZeroVerdict, f64) {
    let b = lie_derivative_fn(hs, gbar);
    let m = max_abs(std::slice::from_ref(&b), samples);
    (is_zero(&b, samples), m)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiCheck {
    pub verdict: ZeroVerdict,
    pub max_abs: f64,
    #[serde(skip)]
    pub residuals: Vec<Expr>,
}

/// `(y^i, H) = (∂G/∂x_i)∘φ` and `(x_i, H) = −(∂G/∂y^i)∘φ`.
pub fn check_phi_related(
    hs: &HamiltonianSystem,
    c: &FactorizationCandidate,
    g: &Expr,
    samples: &[Point],
) -> Result<PhiCheck, FactorizationError> {
    let mut residuals = Vec::with_capacity(2 * c.nu());
    for (i, (x, y)) in c.xs.iter().zip(&c.ys).enumerate() {
        let (xs, ys) = (super::factor_x(i + 1), super::factor_y(i + 1));
        residuals.push(lie_derivative_fn(hs, y) - c.pull_back(&g.diff(&xs))?);
        residuals.push(lie_derivative_fn(hs, x) + c.pull_back(&g.diff(&ys))?);
    }
    let verdict = ZeroVerdict::all(residuals.iter().map(|r| is_zero(r, samples)));
    Ok(PhiCheck { verdict, max_abs: max_abs(&residuals, samples), residuals })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Observability {
    pub observable: bool,
    /// Function whose differential leaves `span{dq, dû}`.
    pub failing: Option<String>,
    pub witness: Option<Point>,
    pub base_rank: Option<usize>,
    pub extended_rank: Option<usize>,
}

/// Each `f` in `fns` and each `L_h f` must factor through `(q, û(p, q))`:
/// appending it to `(q, û)` must not raise the Jacobian rank.
pub fn check_observability(
    ls: &LagrangianSystem,
    s: &Synthesis,
    hs: &HamiltonianSystem,
    fns: &[Expr],
    samples: &[Point],
) -> Result<Observability, FactorizationError> {
    let coords = hs.coords();
    let base: Vec<Expr> = ls.states.iter().map(Expr::symbol).chain(s.values.iter().cloned()).collect();
    let mut family: Vec<Expr> = Vec::new();
    for f in fns {
        family.push(f.clone());
        family.push(lie_derivative_fn(hs, f));
    }
    for f in &family {
        let mut ext = base.clone();
        ext.push(f.clone());
        for pt in samples {
            let (Ok(jb), Ok(je)) = (jacobian_at(&base, &coords, pt), jacobian_at(&ext, &coords, pt)) else {
                continue;
            };
            let (rb, re) = (numeric_rank(&jb), numeric_rank(&je));
            if re > rb {
                return Ok(Observability {
                    observable: false,
                    failing: Some(f.to_string()),
                    witness: Some(pt.clone()),
                    base_rank: Some(rb),
                    extended_rank: Some(re),
                });
            }
        }
    }
    Ok(Observability { observable: true, failing: None, witness: None, base_rank: None, extended_rank: None })
}
