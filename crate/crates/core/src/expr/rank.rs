use nalgebra::DMatrix;

use super::{symbolic_rank, Expr, ExprError, Point, Symbol};

/// Singular values below `RANK_TOL * σ_max` count as zero.
pub const RANK_TOL: f64 = 1e-8;

pub fn numeric_rank(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > RANK_TOL * max).count()
}

pub(crate) fn symbolic_jacobian(fns: &[Expr], vars: &[Symbol]) -> Vec<Vec<Expr>> {
    fns.iter().map(|f| vars.iter().map(|v| f.diff(v)).collect()).collect()
}

fn eval_matrix(j: &[Vec<Expr>], cols: usize, pt: &Point) -> Result<DMatrix<f64>, ExprError> {
    let mut m = DMatrix::zeros(j.len(), cols);
    for (r, row) in j.iter().enumerate() {
        for (c, e) in row.iter().enumerate() {
            m[(r, c)] = e.eval(pt)?;
        }
    }
    Ok(m)
}

/// Jacobian of `fns` with respect to `vars`, evaluated at `point`.
pub fn jacobian_at(fns: &[Expr], vars: &[Symbol], point: &Point) -> Result<DMatrix<f64>, ExprError> {
    eval_matrix(&symbolic_jacobian(fns, vars), vars.len(), point)
}

/// Numeric Jacobian rank at each point.
pub fn ranks_at_points(fns: &[Expr], vars: &[Symbol], points: &[Point]) -> Result<Vec<usize>, ExprError> {
    let j = symbolic_jacobian(fns, vars);
    points.iter().map(|pt| Ok(numeric_rank(&eval_matrix(&j, vars.len(), pt)?))).collect()
}

/// Generic Jacobian rank.
///
/// Small atom-free systems (at most 4×4) are ranked symbolically; otherwise
/// the rank is the maximum numeric rank over `points`.
pub fn jacobian_rank(fns: &[Expr], vars: &[Symbol], points: &[Point]) -> Result<usize, ExprError> {
    let j = symbolic_jacobian(fns, vars);
    let small = fns.len() <= 4 && vars.len() <= 4;
    if small && j.iter().flatten().all(|e| !e.has_atoms()) {
        return Ok(symbolic_rank(&j));
    }
    if points.is_empty() {
        return Err(ExprError::EvalDomain("no sample points for a numeric rank".into()));
    }
    let mut best = 0;
    for pt in points {
        best = best.max(numeric_rank(&eval_matrix(&j, vars.len(), pt)?));
    }
    Ok(best)
}
