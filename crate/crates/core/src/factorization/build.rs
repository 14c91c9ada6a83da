use std::collections::HashMap;

use super::eliminate::{drop_inert, eliminate};
use super::{factor_v, factor_x, factor_y, DeclaredFactor, FactorizationCandidate, FactorizationError};
use crate::control::{HamiltonianSystem, LagrangianSystem};
use crate::expr::{is_zero, jacobian_rank, solve_linear, Expr, ExprError, Point, Symbol, ZeroVerdict};

/// Factor Hamiltonian system together with its factor Lagrangian system.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorSystem {
    pub nu: usize,
    pub mu: usize,
    pub xs: Vec<Symbol>,
    pub ys: Vec<Symbol>,
    pub vs: Vec<Symbol>,
    /// `G(x, y)`.
    pub g: Expr,
    /// `∂G/∂x_i`.
    pub ftilde: Vec<Expr>,
    /// Indices into `ftilde` chosen as the synthesis.
    pub selected: Vec<usize>,
    /// `v̂(x, y)`.
    pub synthesis: Vec<Expr>,
    /// `F^i(y, v)`.
    pub dynamics: Vec<Expr>,
    /// `Q(y, v)`.
    pub cost: Expr,
    /// `∂𝓣/∂v` at `v̂` for `𝓣 = x_i F^i − Q`.
    pub stationarity: ZeroVerdict,
    /// `F^i(y, v̂) − ∂G/∂x_i`.
    pub consistency: ZeroVerdict,
    /// Rank of `∂F/∂v`.
    pub rank_fv: usize,
}

impl FactorSystem {
    pub fn hamiltonian_system(&self) -> HamiltonianSystem {
        HamiltonianSystem::from_parts(self.xs.clone(), self.ys.clone(), self.g.clone(), vec![])
    }

    pub fn lagrangian(&self, name: &str) -> Result<LagrangianSystem, FactorizationError> {
        LagrangianSystem::new(name, self.ys.clone(), self.vs.clone(), self.dynamics.clone(), self.cost.clone(), vec![])
            .map_err(|e| FactorizationError::Invalid(e.to_string()))
    }

    pub fn declared(&self) -> DeclaredFactor {
        DeclaredFactor { dynamics: self.dynamics.clone(), cost: self.cost.clone() }
    }
}

fn with_v(points: &[Point], vs: &[Symbol], vhat: &[Expr]) -> Vec<Point> {
    points
        .iter()
        .filter_map(|p| {
            let mut out = p.clone();
            for (v, e) in vs.iter().zip(vhat) {
                out.insert(v.clone(), e.eval(p).ok()?);
            }
            Some(out)
        })
        .collect()
}

/// Builds the factor system from `G(x, y)`: `F̃ = ∂G/∂x`, `μ` is the rank of
/// `∂²G/∂x²`, `v̂` the lowest-index independent subset of `F̃`, and `F`, `Q`
/// are `F̃` and `x·F̃ − G` rewritten through `(y, v)`.
pub fn build_factor_system(
    hs: &HamiltonianSystem,
    c: &FactorizationCandidate,
    g: &Expr,
    samples: &[Point],
) -> Result<FactorSystem, FactorizationError> {
    let nu = c.nu();
    let xs: Vec<Symbol> = (1..=nu).map(factor_x).collect();
    let ys: Vec<Symbol> = (1..=nu).map(factor_y).collect();
    let fpts = c.map_points(samples);
    let frame = hs.frame();
    if let Some(s) = c.map_exprs().iter().flat_map(|e| e.symbols()).find(|s| !frame.contains(s)) {
        return Err(FactorizationError::Invalid(format!("map uses `{s}` outside the canonical frame")));
    }
    let ftilde: Vec<Expr> = xs.iter().map(|x| g.diff(x)).collect();
    let mu = jacobian_rank(&ftilde, &xs, &fpts)?;
    let mut selected = Vec::with_capacity(mu);
    let mut current = 0;
    for i in 0..nu {
        if current == mu {
            break;
        }
        let mut trial: Vec<Expr> = selected.iter().map(|&k: &usize| ftilde[k].clone()).collect();
        trial.push(ftilde[i].clone());
        let r = jacobian_rank(&trial, &xs, &fpts)?;
        if r > current {
            selected.push(i);
            current = r;
        }
    }
    let vs: Vec<Symbol> = (1..=mu).map(factor_v).collect();
    let synthesis: Vec<Expr> = selected.iter().map(|&k| ftilde[k].clone()).collect();
    let mixed = with_v(&fpts, &vs, &synthesis);
    let eqs: Vec<Expr> = vs.iter().zip(&synthesis).map(|(v, e)| Expr::symbol(v) - e).collect();
    let sol = eliminate(&eqs, &xs, &mixed)?;
    let through = |e: &Expr| -> Result<Expr, FactorizationError> { drop_inert(e.substitute(&sol)?, &xs, &mixed) };
    let dynamics: Vec<Expr> = ftilde.iter().map(through).collect::<Result<_, _>>()?;
    let legendre = xs.iter().zip(&ftilde).map(|(x, f)| Expr::symbol(x) * f).sum::<Expr>() - g;
    let cost = through(&legendre)?;

    let at_vhat: HashMap<Symbol, Expr> = vs.iter().cloned().zip(synthesis.iter().cloned()).collect();
    let t = xs.iter().zip(&dynamics).map(|(x, f)| Expr::symbol(x) * f).sum::<Expr>() - &cost;
    let mut stat = Vec::with_capacity(mu);
    for v in &vs {
        stat.push(is_zero(&t.diff(v).substitute(&at_vhat)?, &fpts));
    }
    let stationarity = ZeroVerdict::all(stat);
    let mut cons = Vec::with_capacity(nu);
    for (f, ft) in dynamics.iter().zip(&ftilde) {
        cons.push(is_zero(&(f.substitute(&at_vhat)? - ft), &fpts));
    }
    let consistency = ZeroVerdict::all(cons);
    let rank_fv = if mu == 0 { 0 } else { jacobian_rank(&dynamics, &vs, &mixed)? };
    Ok(FactorSystem {
        nu,
        mu,
        xs,
        ys,
        vs,
        g: g.clone(),
        ftilde,
        selected,
        synthesis,
        dynamics,
        cost,
        stationarity,
        consistency,
        rank_fv,
    })
}

/// `G` of a declared factor system: `𝓣 = x_i F^i − Q` at the solution of
/// `∂𝓣/∂v = 0`, which must be affine in `v`. Returns `(G, v̂)`.
pub fn declared_factor_hamiltonian(
    d: &DeclaredFactor,
    nu: usize,
) -> Result<(Expr, Vec<(Symbol, Expr)>), FactorizationError> {
    if d.dynamics.len() != nu {
        return Err(FactorizationError::Invalid(format!("{} factor dynamics for ν = {nu}", d.dynamics.len())));
    }
    let t = (1..=nu).map(factor_x).zip(&d.dynamics).map(|(x, f)| Expr::symbol(&x) * f).sum::<Expr>() - &d.cost;
    let vs: Vec<Symbol> = (1..=nu).map(factor_v).filter(|v| t.depends_on(v)).collect();
    if vs.is_empty() {
        return Ok((t, vec![]));
    }
    let grad: Vec<Expr> = vs.iter().map(|v| t.diff(v)).collect();
    let vhat = solve_linear(&grad, &vs).map_err(|e| match e {
        ExprError::NotLinear(s) => FactorizationError::EliminationFailure(format!("factor stationarity not affine in v: {s}")),
        other => FactorizationError::Expr(other),
    })?;
    let sub: HashMap<Symbol, Expr> = vs.iter().cloned().zip(vhat.iter().cloned()).collect();
    Ok((t.substitute(&sub)?, vs.into_iter().zip(vhat).collect()))
}
