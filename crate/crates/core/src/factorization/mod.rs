//! Verification and construction of factorizations.
//!
//! A candidate is a map `φ: (p, q) ↦ (x, y)` onto a `2ν`-dimensional factor
//! frame, optionally with the potential `Q̃`. It is a factorization when
//! `L_h(Σ x_i dy^i) = dQ̃`; the factor Hamiltonian `G` then satisfies
//! `Ḡ = G∘φ = Σ x_i (y^i, H) − Q̃`.

mod boundary;
mod build;
mod checks;
mod eliminate;
mod report;

use std::collections::HashMap;

use thiserror::Error;

use crate::control::{canonical_equations, HamiltonianSystem};
use crate::expr::{Expr, ExprError, Point, Symbol};
use crate::numeric::{sample_points, NumericError, SamplePlan};
use crate::symplectic::{PulledBackTwoForm, SymplecticError};

pub use boundary::{classify_boundary, sample_fibers, Determinacy, FiberVerdict};
pub use build::{build_factor_system, declared_factor_hamiltonian, FactorSystem};
pub use checks::{
    build_gbar, check_first_integral, check_independence, check_observability, check_phi_related,
    reconstruct_qtilde, verify_factorization_equation, verify_via_interior_product, InteriorRoute, Observability,
    PhiCheck, ResidualCheck,
};
pub use eliminate::express_through_map;
pub use report::{reduce, verify, Check, ReduceError, Reduction, Status, Symbolic, VerificationReport, VerifyOptions, DRIFT_TOL, RESIDUAL_TOL};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FactorizationError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Symplectic(#[from] SymplecticError),
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error("candidate maps are dependent: rank {rank} < {expected}")]
    RankDeficient { rank: usize, expected: usize, witness: Option<Point> },
    #[error("function is not constant on the fibers of the candidate map")]
    FiberObstruction { witness: Point, other: Point, values: (f64, f64) },
    #[error("elimination failed: {0}")]
    EliminationFailure(String),
    #[error("invalid candidate: {0}")]
    Invalid(String),
}

pub fn factor_x(i: usize) -> Symbol {
    Symbol::indexed("x", i)
}

pub fn factor_y(i: usize) -> Symbol {
    Symbol::indexed("y", i)
}

pub fn factor_v(i: usize) -> Symbol {
    Symbol::indexed("v", i)
}

/// Factor system declared next to a candidate: `ẏ^i = F^i(y, v)`, cost `Q(y, v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeclaredFactor {
    pub dynamics: Vec<Expr>,
    pub cost: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorizationCandidate {
    pub name: String,
    pub xs: Vec<Expr>,
    pub ys: Vec<Expr>,
    pub qtilde: Option<Expr>,
    pub declared: Option<DeclaredFactor>,
}

impl FactorizationCandidate {
    pub fn new(name: impl Into<String>, xs: Vec<Expr>, ys: Vec<Expr>) -> Result<Self, FactorizationError> {
        if xs.is_empty() || xs.len() != ys.len() {
            return Err(FactorizationError::Invalid(format!("{} x maps and {} y maps", xs.len(), ys.len())));
        }
        Ok(FactorizationCandidate { name: name.into(), xs, ys, qtilde: None, declared: None })
    }

    /// `x = p`, `y = q`.
    pub fn identity(hs: &HamiltonianSystem) -> Self {
        FactorizationCandidate {
            name: "identity".into(),
            xs: hs.costates.iter().map(Expr::symbol).collect(),
            ys: hs.states.iter().map(Expr::symbol).collect(),
            qtilde: None,
            declared: None,
        }
    }

    pub fn with_qtilde(mut self, q: Expr) -> Self {
        self.qtilde = Some(q);
        self
    }

    pub fn with_declared(mut self, d: DeclaredFactor) -> Self {
        self.declared = Some(d);
        self
    }

    pub fn nu(&self) -> usize {
        self.xs.len()
    }

    pub fn x_symbols(&self) -> Vec<Symbol> {
        (1..=self.nu()).map(factor_x).collect()
    }

    pub fn y_symbols(&self) -> Vec<Symbol> {
        (1..=self.nu()).map(factor_y).collect()
    }

    pub fn two_form(&self) -> PulledBackTwoForm {
        PulledBackTwoForm::new(self.xs.clone(), self.ys.clone())
    }

    /// Map components: `x1..xν` then `y1..yν`.
    pub fn maps(&self) -> Vec<(Symbol, Expr)> {
        self.x_symbols()
            .into_iter()
            .zip(self.xs.iter().cloned())
            .chain(self.y_symbols().into_iter().zip(self.ys.iter().cloned()))
            .collect()
    }

    pub fn map_exprs(&self) -> Vec<Expr> {
        self.xs.iter().chain(&self.ys).cloned().collect()
    }

    /// `g∘φ` for `g` on the factor frame.
    pub fn pull_back(&self, g: &Expr) -> Result<Expr, ExprError> {
        let sub: HashMap<Symbol, Expr> = self.maps().into_iter().collect();
        g.substitute(&sub)
    }

    /// Factor-frame coordinates of a canonical point.
    pub fn map_point(&self, pt: &Point) -> Result<Point, ExprError> {
        let mut out = Point::new();
        for (s, e) in self.maps() {
            out.insert(s, e.eval(pt)?);
        }
        Ok(out)
    }

    /// Images of those points at which every map evaluates.
    pub fn map_points(&self, pts: &[Point]) -> Vec<Point> {
        pts.iter().filter_map(|p| self.map_point(p).ok()).collect()
    }
}

/// Canonical-frame samples on the charts at which `H` and the canonical
/// equations evaluate.
pub fn sample_canonical(hs: &HamiltonianSystem, count: usize, seed: u64) -> Result<Vec<Point>, NumericError> {
    let mut checks = vec![hs.hamiltonian.clone()];
    checks.extend(canonical_equations(hs).into_iter().map(|(_, e)| e));
    let plan = SamplePlan::new(hs.coords(), hs.charts.clone()).count(count).seed(seed).must_evaluate(checks);
    sample_points(&plan)
}

/// Rounds to a multiple of 1/16 so that substituted values stay short.
pub(crate) fn nice_value(v: f64) -> Expr {
    let k = (v * 16.0).round() as i64;
    Expr::rational(if k == 0 { 1 } else { k }, 16)
}
