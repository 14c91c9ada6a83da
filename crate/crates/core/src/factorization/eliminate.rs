use std::collections::HashMap;

use nalgebra::DVector;
use num_rational::BigRational;

use super::{nice_value, FactorizationCandidate, FactorizationError};
use crate::control::HamiltonianSystem;
use crate::expr::{is_zero, jacobian_at, ranks_at_points, Expr, Point, Symbol};

enum Step {
    Affine(Expr),
    Root { value: Expr, index: u32 },
}

fn try_affine(e: &Expr, w: &Symbol, constant_only: bool) -> Option<Expr> {
    if e.polynomial_degree(w)? != 1 {
        return None;
    }
    let c = e.coefficient(w, 1);
    if c.is_zero() || (constant_only && c.as_constant().is_none()) {
        return None;
    }
    (-e.coefficient(w, 0)).checked_div(&c).ok()
}

/// `c w^k + r = 0` with `k >= 2`: returns `w^k = −r / c`.
fn try_monomial(e: &Expr, w: &Symbol) -> Option<(Expr, u32)> {
    let k = e.polynomial_degree(w)?;
    if k < 2 || (1..k).any(|j| !e.coefficient(w, j).is_zero()) {
        return None;
    }
    let rhs = (-e.coefficient(w, 0)).checked_div(&e.coefficient(w, k)).ok()?;
    Some((rhs, k))
}

fn pick(eqs: &[Expr], unknowns: &[Symbol]) -> Option<(usize, Symbol, Step)> {
    for constant_only in [true, false] {
        for (i, e) in eqs.iter().enumerate() {
            for w in unknowns {
                if let Some(v) = try_affine(e, w, constant_only) {
                    return Some((i, w.clone(), Step::Affine(v)));
                }
            }
        }
    }
    for (i, e) in eqs.iter().enumerate() {
        for w in unknowns {
            if let Some((value, index)) = try_monomial(e, w) {
                return Some((i, w.clone(), Step::Root { value, index }));
            }
        }
    }
    None
}

/// Solves `eqs = 0` for some of `unknowns`, one equation per unknown, using
/// affine steps where possible and real roots otherwise. The branch of an
/// even root is the sign the unknown has at every sample.
pub(crate) fn eliminate(
    equations: &[Expr],
    unknowns: &[Symbol],
    samples: &[Point],
) -> Result<HashMap<Symbol, Expr>, FactorizationError> {
    let mut eqs: Vec<Expr> = equations.iter().filter(|e| !e.is_zero()).cloned().collect();
    let mut open: Vec<Symbol> = unknowns.to_vec();
    let mut sol: HashMap<Symbol, Expr> = HashMap::new();
    while !eqs.is_empty() {
        let Some((i, w, step)) = pick(&eqs, &open) else {
            let left: Vec<String> = eqs.iter().map(|e| format!("{e} = 0")).collect();
            return Err(FactorizationError::EliminationFailure(format!(
                "no affine or monomial equation left to solve: {}",
                left.join(", ")
            )));
        };
        let value = match step {
            Step::Affine(v) => v,
            Step::Root { value, index } => {
                let root = value.pow_rational(&BigRational::new(1.into(), (index as i64).into()))?;
                if index % 2 == 1 {
                    root
                } else {
                    let signs: Vec<f64> = samples.iter().filter_map(|p| p.get(&w)).map(f64::signum).collect();
                    if !signs.is_empty() && signs.iter().all(|s| *s > 0.0) {
                        root
                    } else if !signs.is_empty() && signs.iter().all(|s| *s < 0.0) {
                        -root
                    } else {
                        return Err(FactorizationError::EliminationFailure(format!(
                            "`{w}` changes sign on the samples; no single branch of the root"
                        )));
                    }
                }
            }
        };
        eqs.remove(i);
        open.retain(|s| *s != w);
        let one: HashMap<Symbol, Expr> = [(w.clone(), value.clone())].into_iter().collect();
        for s in sol.values_mut() {
            *s = s.substitute(&one)?;
        }
        sol.insert(w, value);
        let mut next = Vec::with_capacity(eqs.len());
        for e in &eqs {
            let e = e.substitute(&one)?;
            if !e.is_zero() {
                next.push(e);
            }
        }
        eqs = next;
    }
    Ok(sol)
}

/// Replaces leftover symbols in `g` by constants, provided `g` does not
/// depend on them at `points`.
pub(crate) fn drop_inert(g: Expr, leftover: &[Symbol], points: &[Point]) -> Result<Expr, FactorizationError> {
    let mut g = g;
    for s in leftover {
        if !g.depends_on(s) {
            continue;
        }
        if !is_zero(&g.diff(s), points).holds() {
            return Err(FactorizationError::EliminationFailure(format!("result still depends on `{s}`")));
        }
        let v = points.iter().find_map(|p| p.get(s)).map(nice_value).unwrap_or_else(Expr::one);
        g = g.subs(s, &v)?;
    }
    Ok(g)
}

/// Witness pair for a fiber obstruction: `pt` and a nearby point displaced
/// along the component of `∇f` orthogonal to the rows of the map Jacobian.
fn obstruction(f: &Expr, maps: &[Expr], coords: &[Symbol], pt: &Point) -> Result<FactorizationError, FactorizationError> {
    let j = jacobian_at(maps, coords, pt)?;
    let grad = DVector::from_vec(coords.iter().map(|s| f.diff(s).eval(pt)).collect::<Result<Vec<_>, _>>()?);
    let jjt_inv = (&j * j.transpose())
        .pseudo_inverse(1e-12)
        .map_err(|e| FactorizationError::EliminationFailure(e.to_string()))?;
    let dir = &grad - j.transpose() * (jjt_inv * (&j * &grad));
    let norm = dir.norm();
    let eps = 1e-3;
    let mut other = pt.clone();
    for (k, s) in coords.iter().enumerate() {
        let d = if norm > 0.0 { dir[k] / norm } else { 0.0 };
        other.insert(s.clone(), pt.get(s).unwrap_or(0.0) + eps * d);
    }
    let values = (f.eval(pt)?, f.eval(&other).unwrap_or(f64::NAN));
    Ok(FactorizationError::FiberObstruction { witness: pt.clone(), other, values })
}

/// Writes `f(p, q)` as `g(x, y)` with `g∘φ = f`.
///
/// Fiber constancy is tested first: the Jacobian rank of the maps must not
/// grow when `f` is appended.
pub fn express_through_map(
    f: &Expr,
    c: &FactorizationCandidate,
    hs: &HamiltonianSystem,
    samples: &[Point],
) -> Result<Expr, FactorizationError> {
    let coords = hs.coords();
    let maps = c.map_exprs();
    let mut with_f = maps.clone();
    with_f.push(f.clone());
    let base = ranks_at_points(&maps, &coords, samples)?;
    let ext = ranks_at_points(&with_f, &coords, samples)?;
    if let Some(k) = (0..samples.len()).find(|&k| ext[k] > base[k]) {
        return Err(obstruction(f, &maps, &coords, &samples[k])?);
    }
    let eqs: Vec<Expr> = c.maps().into_iter().map(|(s, e)| Expr::symbol(&s) - e).collect();
    let sol = eliminate(&eqs, &coords, samples)?;
    let g = f.substitute(&sol)?;
    let mixed: Vec<Point> = samples
        .iter()
        .filter_map(|p| c.map_point(p).ok().map(|m| m.merged(p)))
        .collect();
    let g = drop_inert(g, &coords, &mixed)?;
    let back = c.pull_back(&g)?;
    if !is_zero(&(back - f), samples).holds() {
        return Err(FactorizationError::EliminationFailure("eliminated form does not reproduce the function".into()));
    }
    Ok(g)
}
