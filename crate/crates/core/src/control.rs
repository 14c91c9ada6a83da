//! Lagrangian systems and the Pontryagin pipeline.

use std::collections::HashMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::expr::{
    is_zero, jacobian_rank, numeric_rank, jacobian_at, solve_linear, CoordinateFrame, Expr, ExprError,
    Point, Role, Symbol, ZeroVerdict, ZERO_TOL,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControlError {
    #[error(transparent)]
    Expr(ExprError),
    #[error("malformed system: {0}")]
    Malformed(String),
    #[error("stationarity system is not affine in the controls ({0}); supply a synthesis")]
    NotLinear(String),
    #[error("degenerate system: {0}")]
    Degenerate(String),
    #[error("singular point: the canonical vector field vanishes")]
    SingularPoint { point: Point },
    #[error("rank of the iterated Lie derivatives is not locally constant ({rank} vs {nearby})")]
    RankUnstable { rank: usize, nearby: usize, witness: Point },
}

impl From<ExprError> for ControlError {
    fn from(e: ExprError) -> Self {
        match e {
            ExprError::NotLinear(s) => ControlError::NotLinear(s),
            ExprError::Singular { rank, size } => {
                ControlError::Degenerate(format!("stationarity system has rank {rank} < {size}"))
            }
            other => ControlError::Expr(other),
        }
    }
}

/// Costate symbols `p1..pn` paired with the states.
pub fn costates_for(n: usize) -> Vec<Symbol> {
    (1..=n).map(|i| Symbol::indexed("p", i)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianSystem {
    pub name: String,
    pub states: Vec<Symbol>,
    pub controls: Vec<Symbol>,
    pub dynamics: Vec<Expr>,
    pub cost: Expr,
    /// Open working region: every chart expression is positive.
    pub charts: Vec<Expr>,
}

impl LagrangianSystem {
    pub fn new(
        name: impl Into<String>,
        states: Vec<Symbol>,
        controls: Vec<Symbol>,
        dynamics: Vec<Expr>,
        cost: Expr,
        charts: Vec<Expr>,
    ) -> Result<Self, ControlError> {
        if states.is_empty() {
            return Err(ControlError::Malformed("no states".into()));
        }
        if dynamics.len() != states.len() {
            return Err(ControlError::Malformed(format!(
                "{} dynamics for {} states",
                dynamics.len(),
                states.len()
            )));
        }
        let ls = LagrangianSystem { name: name.into(), states, controls, dynamics, cost, charts };
        let frame = ls.frame();
        if frame.len() != ls.states.len() + ls.controls.len() {
            return Err(ControlError::Malformed("duplicate symbol among states and controls".into()));
        }
        for e in ls.dynamics.iter().chain([&ls.cost]) {
            if let Some(s) = e.symbols().into_iter().find(|s| !frame.contains(s)) {
                return Err(ControlError::Malformed(format!("`{s}` is neither a state nor a control")));
            }
        }
        for c in &ls.charts {
            if let Some(s) = c.symbols().into_iter().find(|s| !ls.states.contains(s)) {
                return Err(ControlError::Malformed(format!("chart depends on non-state `{s}`")));
            }
        }
        Ok(ls)
    }

    pub fn n(&self) -> usize {
        self.states.len()
    }

    pub fn m(&self) -> usize {
        self.controls.len()
    }

    pub fn frame(&self) -> CoordinateFrame {
        CoordinateFrame::new()
            .with(self.states.iter().cloned(), Role::State)
            .with(self.controls.iter().cloned(), Role::Control)
    }

    pub fn costates(&self) -> Vec<Symbol> {
        costates_for(self.n())
    }

    /// Costates, states and controls.
    pub fn extended_frame(&self) -> CoordinateFrame {
        CoordinateFrame::new()
            .with(self.costates(), Role::Costate)
            .with(self.states.iter().cloned(), Role::State)
            .with(self.controls.iter().cloned(), Role::Control)
    }

    /// Canonical coordinates `p1..pn, q1..qn`.
    pub fn canonical_frame(&self) -> CoordinateFrame {
        CoordinateFrame::new()
            .with(self.costates(), Role::Costate)
            .with(self.states.iter().cloned(), Role::State)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PontryaginData {
    pub costates: Vec<Symbol>,
    pub controls: Vec<Symbol>,
    /// `Σ p_i f^i − L`.
    pub function: Expr,
    /// `∂𝓗/∂u^k`, one per control.
    pub stationarity: Vec<Expr>,
}

pub fn pontryagin_function(ls: &LagrangianSystem) -> PontryaginData {
    let costates = ls.costates();
    let function: Expr = costates.iter().zip(&ls.dynamics).map(|(p, f)| Expr::symbol(p) * f).sum::<Expr>() - &ls.cost;
    let stationarity = ls.controls.iter().map(|u| function.diff(u)).collect();
    PontryaginData { costates, controls: ls.controls.clone(), function, stationarity }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthesisOrigin {
    Solved,
    UserSupplied,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Synthesis {
    pub controls: Vec<Symbol>,
    pub values: Vec<Expr>,
    pub origin: SynthesisOrigin,
}

impl Synthesis {
    pub fn user_supplied(controls: Vec<Symbol>, values: Vec<Expr>) -> Self {
        Synthesis { controls, values, origin: SynthesisOrigin::UserSupplied }
    }

    pub fn substitution(&self) -> HashMap<Symbol, Expr> {
        self.controls.iter().cloned().zip(self.values.iter().cloned()).collect()
    }

    /// Extends a `(p, q)` point with the control values `û(p, q)`.
    pub fn extend_point(&self, pt: &Point) -> Result<Point, ExprError> {
        let mut out = pt.clone();
        for (u, e) in self.controls.iter().zip(&self.values) {
            out.insert(u.clone(), e.eval(pt)?);
        }
        Ok(out)
    }
}

/// Solves the stationarity system, which must be affine in the controls.
pub fn solve_synthesis(p: &PontryaginData) -> Result<Synthesis, ControlError> {
    if p.controls.is_empty() {
        return Ok(Synthesis { controls: vec![], values: vec![], origin: SynthesisOrigin::Solved });
    }
    let values = solve_linear(&p.stationarity, &p.controls)?;
    let s = Synthesis { controls: p.controls.clone(), values, origin: SynthesisOrigin::Solved };
    let sub = s.substitution();
    for e in &p.stationarity {
        if !e.substitute(&sub)?.is_zero() {
            return Err(ControlError::Degenerate("back-substitution of the synthesis failed".into()));
        }
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NondegeneracyReport {
    pub n: usize,
    pub m: usize,
    pub rank_fu: usize,
    pub stationarity: Vec<ZeroVerdict>,
    /// Numeric rank of `∂²𝓗/∂u²`, checked for user-supplied syntheses.
    pub hessian_rank: Option<usize>,
}

/// Checks `rank f_u = m`, `m ≤ n` and stationarity of `û`. Points are on the
/// canonical frame.
pub fn check_nondegenerate(
    ls: &LagrangianSystem,
    p: &PontryaginData,
    s: &Synthesis,
    points: &[Point],
) -> Result<NondegeneracyReport, ControlError> {
    let (n, m) = (ls.n(), ls.m());
    if m > n {
        return Err(ControlError::Degenerate(format!("m = {m} controls exceed n = {n} states")));
    }
    let extended: Vec<Point> = points.iter().filter_map(|pt| s.extend_point(pt).ok()).collect();
    let rank_fu = jacobian_rank(&ls.dynamics, &ls.controls, &extended)?;
    if rank_fu < m {
        return Err(ControlError::Degenerate(format!("rank f_u = {rank_fu} < m = {m}")));
    }
    let sub = s.substitution();
    let mut stationarity = Vec::with_capacity(m);
    for e in &p.stationarity {
        let v = is_zero(&e.substitute(&sub)?, points);
        if !v.holds() {
            return Err(ControlError::Degenerate("stationarity fails at the synthesis".into()));
        }
        stationarity.push(v);
    }
    let hessian_rank = if s.origin == SynthesisOrigin::UserSupplied && m > 0 {
        let grad: Vec<Expr> = p.stationarity.clone();
        let mut worst = m;
        for pt in &extended {
            worst = worst.min(numeric_rank(&jacobian_at(&grad, &ls.controls, pt)?));
        }
        if worst < m {
            return Err(ControlError::Degenerate(format!("Hessian in u has rank {worst} < {m} at a sample")));
        }
        Some(worst)
    } else {
        None
    };
    Ok(NondegeneracyReport { n, m, rank_fu, stationarity, hessian_rank })
}

/// Canonical system with Hamiltonian `H(p, q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSystem {
    pub costates: Vec<Symbol>,
    pub states: Vec<Symbol>,
    pub hamiltonian: Expr,
    pub charts: Vec<Expr>,
    pub source: Option<Arc<(LagrangianSystem, Synthesis)>>,
}

impl HamiltonianSystem {
    /// A bare Hamiltonian system, e.g. on a factor frame.
    pub fn from_parts(costates: Vec<Symbol>, states: Vec<Symbol>, hamiltonian: Expr, charts: Vec<Expr>) -> Self {
        HamiltonianSystem { costates, states, hamiltonian, charts, source: None }
    }

    pub fn n(&self) -> usize {
        self.states.len()
    }

    /// `p1..pn, q1..qn`.
    pub fn coords(&self) -> Vec<Symbol> {
        self.costates.iter().chain(&self.states).cloned().collect()
    }

    pub fn frame(&self) -> CoordinateFrame {
        CoordinateFrame::new()
            .with(self.costates.iter().cloned(), Role::Costate)
            .with(self.states.iter().cloned(), Role::State)
    }

    pub fn lagrangian(&self) -> Option<&LagrangianSystem> {
        self.source.as_ref().map(|s| &s.0)
    }

    pub fn synthesis(&self) -> Option<&Synthesis> {
        self.source.as_ref().map(|s| &s.1)
    }
}

pub fn hamiltonianize(
    ls: &LagrangianSystem,
    p: &PontryaginData,
    s: &Synthesis,
) -> Result<HamiltonianSystem, ControlError> {
    let h = p.function.substitute(&s.substitution())?;
    if let Some(u) = ls.controls.iter().find(|u| h.depends_on(u)) {
        return Err(ControlError::Degenerate(format!("Hamiltonian still depends on `{u}`")));
    }
    Ok(HamiltonianSystem {
        costates: p.costates.clone(),
        states: ls.states.clone(),
        hamiltonian: h,
        charts: ls.charts.clone(),
        source: Some(Arc::new((ls.clone(), s.clone()))),
    })
}

/// Right-hand sides in frame order: `ṗ_i = −∂H/∂q^i`, then `q̇^i = ∂H/∂p_i`.
pub fn canonical_equations(hs: &HamiltonianSystem) -> Vec<(Symbol, Expr)> {
    let h = &hs.hamiltonian;
    let pdot = hs.costates.iter().zip(&hs.states).map(|(p, q)| (p.clone(), -h.diff(q)));
    let qdot = hs.costates.iter().zip(&hs.states).map(|(p, q)| (q.clone(), h.diff(p)));
    pdot.chain(qdot).collect()
}

/// Runs the whole pipeline with a solved synthesis.
pub fn pipeline(ls: &LagrangianSystem) -> Result<(PontryaginData, Synthesis, HamiltonianSystem), ControlError> {
    let p = pontryagin_function(ls);
    let s = solve_synthesis(&p)?;
    let hs = hamiltonianize(ls, &p, &s)?;
    Ok((p, s, hs))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityReport {
    pub field: Vec<f64>,
    pub depth: usize,
    pub rank: usize,
    pub perturbed_ranks: Vec<usize>,
}

pub const PERTURBATION_RADIUS: f64 = 1e-3;
pub const PERTURBATIONS: usize = 10;

/// Regularity at a point: the canonical field is nonzero and the rank of
/// `{L_h^s q^i : 0 ≤ s ≤ depth}` is the same at nearby points. `depth`
/// defaults to `2n`.
pub fn check_regularity(
    hs: &HamiltonianSystem,
    point: &Point,
    depth: Option<usize>,
) -> Result<RegularityReport, ControlError> {
    let eqs = canonical_equations(hs);
    let field: Vec<f64> = eqs.iter().map(|(_, e)| e.eval(point)).collect::<Result<_, _>>()?;
    if field.iter().all(|v| v.abs() <= ZERO_TOL) {
        return Err(ControlError::SingularPoint { point: point.clone() });
    }
    let depth = depth.unwrap_or(2 * hs.n());
    let lie = |f: &Expr| -> Expr { eqs.iter().map(|(w, rhs)| f.diff(w) * rhs).sum() };
    let mut family: Vec<Expr> = hs.states.iter().map(Expr::symbol).collect();
    let mut layer = family.clone();
    for _ in 0..depth {
        layer = layer.iter().map(lie).collect();
        family.extend(layer.iter().cloned());
    }
    let coords = hs.coords();
    let rank = numeric_rank(&jacobian_at(&family, &coords, point)?);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut perturbed_ranks = Vec::with_capacity(PERTURBATIONS);
    for _ in 0..PERTURBATIONS {
        let mut nearby = point.clone();
        for s in &coords {
            let v = point.get(s).unwrap_or(0.0) + rng.random_range(-PERTURBATION_RADIUS..=PERTURBATION_RADIUS);
            nearby.insert(s.clone(), v);
        }
        let r = numeric_rank(&jacobian_at(&family, &coords, &nearby)?);
        if r != rank {
            return Err(ControlError::RankUnstable { rank, nearby: r, witness: nearby });
        }
        perturbed_ranks.push(r);
    }
    Ok(RegularityReport { field, depth, rank, perturbed_ranks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expression;

    fn sym(n: &str) -> Symbol {
        Symbol::new(n)
    }

    fn e1() -> LagrangianSystem {
        let f = CoordinateFrame::new().with(["q1", "q2", "u1", "u2"].map(sym), Role::State);
        let p = |s: &str| parse_expression(s, &f).unwrap();
        LagrangianSystem::new(
            "e1",
            vec![sym("q1"), sym("q2")],
            vec![sym("u1"), sym("u2")],
            vec![p("u1"), p("u2")],
            p("q1*u1*u2 + q1*q2"),
            vec![p("q1")],
        )
        .unwrap()
    }

    fn canon(s: &str) -> Expr {
        let f = CoordinateFrame::new().with(["p1", "p2", "q1", "q2"].map(sym), Role::State);
        parse_expression(s, &f).unwrap()
    }

    #[test]
    fn example_one_pipeline() {
        let ls = e1();
        let (p, s, hs) = pipeline(&ls).unwrap();
        assert_eq!(p.function.to_string(), (canon("p1") * Expr::var("u1") + canon("p2") * Expr::var("u2")
            - Expr::var("q1") * Expr::var("u1") * Expr::var("u2") - canon("q1*q2")).to_string());
        assert_eq!(s.values, vec![canon("p2/q1"), canon("p1/q1")]);
        assert_eq!(hs.hamiltonian, canon("p1*p2/q1 - q1*q2"));
        let eqs = canonical_equations(&hs);
        assert_eq!(eqs[0].1, canon("p1*p2/q1^2 + q2"));
        assert_eq!(eqs[1].1, canon("q1"));
        assert_eq!(eqs[2].1, canon("p2/q1"));
        assert_eq!(eqs[3].1, canon("p1/q1"));
    }

    #[test]
    fn regularity_example_one() {
        let (_, _, hs) = pipeline(&e1()).unwrap();
        let pt = Point::from_slices(&hs.coords(), &[1.0, 1.0, 1.0, 1.0]);
        let r = check_regularity(&hs, &pt, None).unwrap();
        assert_eq!(r.field, vec![2.0, 1.0, 1.0, 1.0]);
        assert_eq!(r.depth, 4);
    }

    #[test]
    fn duplicated_control_is_degenerate() {
        let f = CoordinateFrame::new().with(["q1", "q2", "u1", "u2"].map(sym), Role::State);
        let p = |s: &str| parse_expression(s, &f).unwrap();
        let ls = LagrangianSystem::new(
            "dup",
            vec![sym("q1"), sym("q2")],
            vec![sym("u1"), sym("u2")],
            vec![p("u1"), p("u1")],
            p("u1^2 + u2^2"),
            vec![],
        )
        .unwrap();
        let pd = pontryagin_function(&ls);
        let s = solve_synthesis(&pd).unwrap();
        let pts = [Point::from_slices(&ls.costates(), &[1.0, 2.0]).merged(&Point::from_slices(&ls.states, &[0.5, 0.5]))];
        let err = check_nondegenerate(&ls, &pd, &s, &pts).unwrap_err();
        assert_eq!(err, ControlError::Degenerate("rank f_u = 1 < m = 2".into()));
    }
}
