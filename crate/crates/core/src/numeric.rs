//! Sampling and trajectory-based cross-checks.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::expr::{Expr, ExprError, Point, Symbol};

pub const DEFAULT_BOX: (f64, f64) = (-2.0, 2.0);
pub const CHART_MARGIN: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("trajectory left the charts at t = {t}")]
    ChartExit { t: f64, state: Point },
    #[error("step rejected at t = {t}: {reason}")]
    StepRejected { t: f64, reason: String },
    #[error("sampling exhausted: {accepted} of {requested} points after {attempts} draws")]
    ExhaustedSampling { accepted: usize, requested: usize, attempts: usize },
    #[error("invalid integration parameters: {0}")]
    InvalidParameters(String),
}

/// True when every chart expression is at least `margin` at `pt`.
pub fn on_charts(charts: &[Expr], pt: &Point, margin: f64) -> bool {
    charts.iter().all(|c| c.eval(pt).is_ok_and(|v| v >= margin))
}

#[derive(Debug, Clone)]
pub struct SamplePlan {
    pub seed: u64,
    pub count: usize,
    pub symbols: Vec<Symbol>,
    pub bounds: BTreeMap<Symbol, (f64, f64)>,
    pub charts: Vec<Expr>,
    pub margin: f64,
    /// Points whose expressions fail to evaluate are rejected too.
    pub must_evaluate: Vec<Expr>,
}

impl SamplePlan {
    pub fn new(symbols: Vec<Symbol>, charts: Vec<Expr>) -> Self {
        SamplePlan {
            seed: 42,
            count: 100,
            symbols,
            bounds: BTreeMap::new(),
            charts,
            margin: CHART_MARGIN,
            must_evaluate: Vec::new(),
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn count(mut self, count: usize) -> Self {
        self.count = count;
        self
    }

    pub fn bound(mut self, s: &Symbol, lo: f64, hi: f64) -> Self {
        self.bounds.insert(s.clone(), (lo, hi));
        self
    }

    pub fn must_evaluate(mut self, exprs: impl IntoIterator<Item = Expr>) -> Self {
        self.must_evaluate.extend(exprs);
        self
    }
}

/// Draws `plan.count` points uniformly from the box, keeping those that lie on
/// the charts with the plan's margin. Deterministic for a fixed seed.
pub fn sample_points(plan: &SamplePlan) -> Result<Vec<Point>, NumericError> {
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let max_attempts = plan.count.max(1) * 1000;
    let mut out = Vec::with_capacity(plan.count);
    let mut attempts = 0;
    while out.len() < plan.count {
        if attempts == max_attempts {
            return Err(NumericError::ExhaustedSampling {
                accepted: out.len(),
                requested: plan.count,
                attempts,
            });
        }
        attempts += 1;
        let mut pt = Point::new();
        for s in &plan.symbols {
            let (lo, hi) = plan.bounds.get(s).copied().unwrap_or(DEFAULT_BOX);
            pt.insert(s.clone(), rng.random_range(lo..=hi));
        }
        if on_charts(&plan.charts, &pt, plan.margin) && plan.must_evaluate.iter().all(|e| e.eval(&pt).is_ok()) {
            out.push(pt);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub symbols: Vec<Symbol>,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub horizon: f64,
    pub step: f64,
}

impl Trajectory {
    pub fn point(&self, k: usize) -> Point {
        Point::from_slices(&self.symbols, &self.states[k])
    }

    pub fn first(&self) -> Point {
        self.point(0)
    }

    pub fn last(&self) -> Point {
        self.point(self.states.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

fn eval_rhs(rhs: &[Expr], symbols: &[Symbol], z: &[f64], t: f64) -> Result<Vec<f64>, NumericError> {
    let pt = Point::from_slices(symbols, z);
    rhs.iter()
        .map(|e| {
            e.eval(&pt).map_err(|err| match err {
                ExprError::EvalDomain(reason) => NumericError::StepRejected { t, reason },
                other => NumericError::Expr(other),
            })
        })
        .collect()
}

fn axpy(z: &[f64], k: &[f64], a: f64) -> Vec<f64> {
    z.iter().zip(k).map(|(z, k)| z + a * k).collect()
}

/// Classical fixed-step RK4 for `ż_i = rhs_i(z)`.
///
/// The step is adjusted to `T / ceil(T / h)` so the grid ends exactly at `T`.
/// State increments are accumulated with compensated summation.
pub fn integrate(
    symbols: &[Symbol],
    rhs: &[Expr],
    z0: &Point,
    horizon: f64,
    h: f64,
    charts: &[Expr],
) -> Result<Trajectory, NumericError> {
    if symbols.len() != rhs.len() {
        return Err(NumericError::InvalidParameters("one right-hand side per coordinate".into()));
    }
    if !(h > 0.0 && horizon >= 0.0 && h.is_finite() && horizon.is_finite()) {
        return Err(NumericError::InvalidParameters(format!("T = {horizon}, h = {h}")));
    }
    if !on_charts(charts, z0, 0.0) {
        return Err(NumericError::ChartExit { t: 0.0, state: z0.clone() });
    }
    let steps = ((horizon / h).ceil() as usize).max(1);
    let step = horizon / steps as f64;
    let mut z: Vec<f64> = symbols
        .iter()
        .map(|s| z0.get(s).ok_or_else(|| ExprError::UnknownSymbol(s.to_string())))
        .collect::<Result<_, _>>()?;
    let mut carry = vec![0.0; z.len()];
    let mut times = vec![0.0];
    let mut states = vec![z.clone()];
    for k in 0..steps {
        let t = k as f64 * step;
        let k1 = eval_rhs(rhs, symbols, &z, t)?;
        let k2 = eval_rhs(rhs, symbols, &axpy(&z, &k1, step / 2.0), t)?;
        let k3 = eval_rhs(rhs, symbols, &axpy(&z, &k2, step / 2.0), t)?;
        let k4 = eval_rhs(rhs, symbols, &axpy(&z, &k3, step), t)?;
        for i in 0..z.len() {
            let dz = step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) - carry[i];
            let next = z[i] + dz;
            carry[i] = (next - z[i]) - dz;
            z[i] = next;
        }
        let t = (k + 1) as f64 * step;
        if z.iter().any(|v| !v.is_finite()) {
            return Err(NumericError::StepRejected { t, reason: "non-finite state".into() });
        }
        let pt = Point::from_slices(symbols, &z);
        if !on_charts(charts, &pt, 0.0) {
            return Err(NumericError::ChartExit { t, state: pt });
        }
        times.push(t);
        states.push(z.clone());
    }
    Ok(Trajectory { symbols: symbols.to_vec(), times, states, horizon, step })
}

/// Pointwise image of a trajectory under `maps` (target symbol, expression).
pub fn map_trajectory(maps: &[(Symbol, Expr)], traj: &Trajectory) -> Result<Trajectory, NumericError> {
    let symbols: Vec<Symbol> = maps.iter().map(|(s, _)| s.clone()).collect();
    let mut states = Vec::with_capacity(traj.len());
    for k in 0..traj.len() {
        let pt = traj.point(k);
        states.push(maps.iter().map(|(_, e)| e.eval(&pt)).collect::<Result<Vec<_>, _>>()?);
    }
    Ok(Trajectory { symbols, times: traj.times.clone(), states, horizon: traj.horizon, step: traj.step })
}

/// Max over interior grid points of |central difference − rhs|.
pub fn residual_dynamics(rhs: &[(Symbol, Expr)], mapped: &Trajectory) -> Result<f64, NumericError> {
    let mut worst: f64 = 0.0;
    let idx: Vec<usize> = rhs
        .iter()
        .map(|(s, _)| {
            mapped
                .symbols
                .iter()
                .position(|w| w == s)
                .ok_or_else(|| NumericError::Expr(ExprError::UnknownSymbol(s.to_string())))
        })
        .collect::<Result<_, _>>()?;
    for k in 1..mapped.len().saturating_sub(1) {
        let dt = mapped.times[k + 1] - mapped.times[k - 1];
        let pt = mapped.point(k);
        for ((_, e), &i) in rhs.iter().zip(&idx) {
            let fd = (mapped.states[k + 1][i] - mapped.states[k - 1][i]) / dt;
            worst = worst.max((fd - e.eval(&pt)?).abs());
        }
    }
    Ok(worst)
}

/// max_k |f(z(t_k)) − f(z(0))|.
pub fn conservation_drift(f: &Expr, traj: &Trajectory) -> Result<f64, NumericError> {
    let f0 = f.eval(&traj.first())?;
    let mut worst: f64 = 0.0;
    for k in 1..traj.len() {
        worst = worst.max((f.eval(&traj.point(k))? - f0).abs());
    }
    Ok(worst)
}

fn endpoint_distance(a: &Trajectory, b: &Trajectory) -> f64 {
    let (za, zb) = (a.states.last().expect("nonempty"), b.states.last().expect("nonempty"));
    za.iter().zip(zb).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Richardson ratio `|z_h − z_{h/2}| / |z_{h/2} − z_{h/4}|` of endpoints;
/// about 16 for a fourth-order method in its asymptotic range.
pub fn step_halving_ratio(
    symbols: &[Symbol],
    rhs: &[Expr],
    z0: &Point,
    horizon: f64,
    h: f64,
    charts: &[Expr],
) -> Result<f64, NumericError> {
    let t1 = integrate(symbols, rhs, z0, horizon, h, charts)?;
    let t2 = integrate(symbols, rhs, z0, horizon, h / 2.0, charts)?;
    let t4 = integrate(symbols, rhs, z0, horizon, h / 4.0, charts)?;
    Ok(endpoint_distance(&t1, &t2) / endpoint_distance(&t2, &t4))
}

/// Endpoint distance between runs with steps `h` and `h / 2`.
pub fn step_halving_gap(
    symbols: &[Symbol],
    rhs: &[Expr],
    z0: &Point,
    horizon: f64,
    h: f64,
    charts: &[Expr],
) -> Result<f64, NumericError> {
    let t1 = integrate(symbols, rhs, z0, horizon, h, charts)?;
    let t2 = integrate(symbols, rhs, z0, horizon, h / 2.0, charts)?;
    Ok(endpoint_distance(&t1, &t2))
}
