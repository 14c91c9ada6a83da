use serde::{Deserialize, Serialize};

use super::{
    build_gbar, check_first_integral, check_independence, check_observability, check_phi_related,
    build_factor_system, declared_factor_hamiltonian, express_through_map, FactorSystem, reconstruct_qtilde, sample_canonical,
    verify_factorization_equation, verify_via_interior_product, FactorizationCandidate, FactorizationError,
};
use crate::control::{canonical_equations, check_nondegenerate, pontryagin_function, HamiltonianSystem};
use crate::expr::{Expr, Point, ZeroVerdict};
use crate::numeric::{conservation_drift, integrate, map_trajectory, residual_dynamics, Trajectory};
use crate::symplectic::{is_closed, lie_derivative_oneform, SymplecticError};

/// Largest tolerated drift of a first integral along a trajectory.
pub const DRIFT_TOL: f64 = 1e-6;
/// Largest tolerated central-difference residual of a mapped trajectory.
pub const RESIDUAL_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Symbolic {
    Yes,
    No,
    Unknown,
    #[serde(rename = "n/a")]
    NotApplicable,
}

impl From<&ZeroVerdict> for Symbolic {
    fn from(v: &ZeroVerdict) -> Self {
        match v {
            ZeroVerdict::Yes => Symbolic::Yes,
            ZeroVerdict::No { .. } => Symbolic::No,
            ZeroVerdict::Unknown { .. } => Symbolic::Unknown,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    PassNumeric,
    Fail,
    Inconclusive,
}

impl Status {
    pub fn is_fail(self) -> bool {
        self == Status::Fail
    }

    /// 0 pass, 1 fail, 3 inconclusive.
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass | Status::PassNumeric => 0,
            Status::Fail => 1,
            Status::Inconclusive => 3,
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::PassNumeric => "pass (numeric)",
            Status::Fail => "FAIL",
            Status::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub symbolic: Symbolic,
    pub numeric_residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Point>,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    fn new(name: &str, symbolic: Symbolic, status: Status) -> Self {
        Check { name: name.into(), symbolic, numeric_residual: None, witness: None, status, detail: None }
    }

    fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = Some(d.into());
        self
    }

    fn witness(mut self, w: Option<Point>) -> Self {
        self.witness = w;
        self
    }

    fn residual(mut self, r: f64) -> Self {
        self.numeric_residual = Some(r);
        self
    }

    /// Status from a zero verdict and a sampled residual.
    fn zero(name: &str, v: &ZeroVerdict, residual: f64, tol: f64) -> Self {
        let status = match v {
            ZeroVerdict::No { .. } => Status::Fail,
            _ if residual > tol => Status::Fail,
            ZeroVerdict::Yes => Status::Pass,
            ZeroVerdict::Unknown { .. } if v.holds() => Status::PassNumeric,
            ZeroVerdict::Unknown { .. } => Status::Inconclusive,
        };
        let witness = match v {
            ZeroVerdict::No { witness, .. } => witness.clone().filter(|w| !w.is_empty()),
            _ => None,
        };
        let mut c = Check::new(name, v.into(), status).residual(residual).witness(witness);
        if let ZeroVerdict::Unknown { samples, zero, .. } = v {
            c = c.detail(format!("{zero}/{samples} samples zero"));
        }
        c
    }

    /// A numeric-only bound check.
    fn bound(name: &str, value: f64, tol: f64) -> Self {
        let status = if value <= tol { Status::PassNumeric } else { Status::Fail };
        Check::new(name, Symbolic::NotApplicable, status).residual(value).detail(format!("tolerance {tol:e}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub system: String,
    pub candidate: String,
    pub nu: usize,
    pub checks: Vec<Check>,
    pub qtilde: Option<String>,
    pub qtilde_reconstructed: bool,
    pub gbar: Option<String>,
    pub g: Option<String>,
    pub overall: Status,
}

impl VerificationReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn exit_code(&self) -> i32 {
        self.overall.exit_code()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub horizon: f64,
    pub step: f64,
    /// Run the trajectory-based cross-checks.
    pub trajectory: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { samples: 100, seed: 42, tol: 1e-8, horizon: 1.0, step: 1e-3, trajectory: true }
    }
}

struct Builder {
    report: VerificationReport,
}

impl Builder {
    fn push(&mut self, c: Check) -> Status {
        let s = c.status;
        self.report.checks.push(c);
        s
    }

    fn failed(&self) -> bool {
        self.report.checks.iter().any(|c| c.status.is_fail())
    }

    fn finish(mut self) -> VerificationReport {
        let statuses: Vec<Status> = self.report.checks.iter().map(|c| c.status).collect();
        self.report.overall = if statuses.contains(&Status::Fail) {
            Status::Fail
        } else if statuses.contains(&Status::Inconclusive) || statuses.is_empty() {
            Status::Inconclusive
        } else {
            Status::Pass
        };
        self.report
    }
}

/// First trajectory from the all-ones point or a sample that stays on the
/// charts for the whole horizon.
fn trajectory(hs: &HamiltonianSystem, samples: &[Point], opts: &VerifyOptions) -> Option<Trajectory> {
    let coords = hs.coords();
    let eqs = canonical_equations(hs);
    let rhs: Vec<Expr> = eqs.into_iter().map(|(_, e)| e).collect();
    let ones = Point::from_slices(&coords, &vec![1.0; coords.len()]);
    std::iter::once(&ones)
        .chain(samples.iter().take(10))
        .find_map(|z0| integrate(&coords, &rhs, z0, opts.horizon, opts.step, &hs.charts).ok())
}

/// Runs the full check pipeline on a candidate.
///
/// Order: non-degeneracy, independence, factorization equation (after
/// reconstructing `Q̃` when absent) and its interior-product form, first
/// integral, fiber constancy of `Ḡ`, φ-relatedness, observability, declared
/// factor system, trajectory cross-checks. The pipeline stops after a failed
/// independence or factorization-equation check.
pub fn verify(
    hs: &HamiltonianSystem,
    c: &FactorizationCandidate,
    opts: &VerifyOptions,
) -> Result<VerificationReport, FactorizationError> {
    let samples = sample_canonical(hs, opts.samples, opts.seed)?;
    let tol = opts.tol;
    let mut b = Builder {
        report: VerificationReport {
            system: hs.lagrangian().map(|l| l.name.clone()).unwrap_or_default(),
            candidate: c.name.clone(),
            nu: c.nu(),
            checks: vec![],
            qtilde: None,
            qtilde_reconstructed: false,
            gbar: None,
            g: None,
            overall: Status::Inconclusive,
        },
    };

    if let Some(src) = &hs.source {
        let (ls, s) = (&src.0, &src.1);
        let pd = pontryagin_function(ls);
        match check_nondegenerate(ls, &pd, s, &samples) {
            Ok(r) => b.push(
                Check::new("nondegenerate", Symbolic::Yes, Status::Pass)
                    .detail(format!("rank f_u = {} = m, n = {}", r.rank_fu, r.n)),
            ),
            Err(e) => b.push(Check::new("nondegenerate", Symbolic::No, Status::Fail).detail(e.to_string())),
        };
    }

    match check_independence(c, hs, &samples) {
        Ok(r) => b.push(Check::new("independence", Symbolic::NotApplicable, Status::Pass).detail(format!("rank {r}"))),
        Err(FactorizationError::RankDeficient { rank, expected, witness }) => {
            b.push(
                Check::new("independence", Symbolic::NotApplicable, Status::Fail)
                    .witness(witness)
                    .detail(format!("rank {rank} < {expected}")),
            );
            return Ok(b.finish());
        }
        Err(e) => return Err(e),
    };

    let qtilde = match &c.qtilde {
        Some(q) => q.clone(),
        None => {
            let coords = hs.coords();
            let rho = lie_derivative_oneform(hs, &c.two_form().primitive(&coords));
            let cl = is_closed(&rho, &samples);
            let gap = match &cl.verdict {
                ZeroVerdict::No { value: Some(v), .. } => v.abs(),
                _ => 0.0,
            };
            let mut chk = Check::zero("closedness", &cl.verdict, gap, tol);
            if let (Some((a, w)), Some(d)) = (&cl.pair, &cl.difference) {
                chk = chk.detail(format!("mixed partials in ({a}, {w}) differ by {d}"));
            }
            if b.push(chk).is_fail() {
                return Ok(b.finish());
            }
            match reconstruct_qtilde(hs, c, &samples) {
                Ok(q) => {
                    b.report.qtilde_reconstructed = true;
                    q
                }
                Err(FactorizationError::Symplectic(e @ SymplecticError::NonIntegrableTerm { .. })) => {
                    b.push(Check::new("reconstruct-qtilde", Symbolic::NotApplicable, Status::Inconclusive).detail(e.to_string()));
                    return Ok(b.finish());
                }
                Err(e) => return Err(e),
            }
        }
    };
    b.report.qtilde = Some(qtilde.to_string());

    let fe = verify_factorization_equation(hs, c, &qtilde, &samples);
    let mut chk = Check::zero("factorization-equation", &fe.verdict, fe.max_abs, tol);
    if chk.status.is_fail() {
        chk = chk.detail(format!("residual {}", fe.residual));
    }
    b.push(chk);
    let ir = verify_via_interior_product(hs, c, &qtilde, &samples);
    b.push(Check::zero("interior-product-route", &ir.verdict, ir.max_abs, tol));
    if b.failed() {
        return Ok(b.finish());
    }

    let gbar = build_gbar(hs, c, &qtilde);
    b.report.gbar = Some(gbar.to_string());
    let (fi, m) = check_first_integral(hs, &gbar, &samples);
    b.push(Check::zero("first-integral", &fi, m, tol));

    let g = match express_through_map(&gbar, c, hs, &samples) {
        Ok(g) => {
            b.push(Check::new("fiber-constancy", Symbolic::NotApplicable, Status::Pass).detail(format!("G = {g}")));
            b.report.g = Some(g.to_string());
            Some(g)
        }
        Err(FactorizationError::FiberObstruction { witness, other, values }) => {
            b.push(
                Check::new("fiber-constancy", Symbolic::No, Status::Fail)
                    .witness(Some(witness))
                    .residual((values.0 - values.1).abs())
                    .detail(format!("same image at {other:?}, values {} and {}", values.0, values.1)),
            );
            None
        }
        Err(FactorizationError::EliminationFailure(msg)) => {
            b.push(Check::new("fiber-constancy", Symbolic::Unknown, Status::Inconclusive).detail(msg));
            None
        }
        Err(e) => return Err(e),
    };

    if let Some(g) = &g {
        let phi = check_phi_related(hs, c, g, &samples)?;
        b.push(Check::zero("phi-related", &phi.verdict, phi.max_abs, tol));
    }

    if let Some(src) = &hs.source {
        let o = check_observability(&src.0, &src.1, hs, &c.ys, &samples)?;
        let chk = if o.observable {
            Check::new("observability", Symbolic::NotApplicable, Status::Pass)
        } else {
            Check::new("observability", Symbolic::NotApplicable, Status::Fail).witness(o.witness).detail(format!(
                "`{}` not observable: rank {} -> {}",
                o.failing.unwrap_or_default(),
                o.base_rank.unwrap_or(0),
                o.extended_rank.unwrap_or(0)
            ))
        };
        b.push(chk);
    }

    let mut factor_g = g.clone();
    if let Some(d) = &c.declared {
        match declared_factor_hamiltonian(d, c.nu()) {
            Ok((gd, _)) => {
                let phi = check_phi_related(hs, c, &gd, &samples)?;
                b.push(Check::zero("declared-factor-system", &phi.verdict, phi.max_abs, tol).detail(format!("G = {gd}")));
                factor_g = Some(gd);
            }
            Err(e) => {
                b.push(Check::new("declared-factor-system", Symbolic::NotApplicable, Status::Inconclusive).detail(e.to_string()));
            }
        }
    }

    if opts.trajectory {
        match trajectory(hs, &samples, opts) {
            Some(tr) => {
                b.push(Check::bound("conservation-h", conservation_drift(&hs.hamiltonian, &tr)?, DRIFT_TOL));
                b.push(Check::bound("conservation-gbar", conservation_drift(&gbar, &tr)?, DRIFT_TOL));
                if let Some(g) = &factor_g {
                    let factor = HamiltonianSystem::from_parts(c.x_symbols(), c.y_symbols(), g.clone(), vec![]);
                    let mapped = map_trajectory(&c.maps(), &tr)?;
                    let r = residual_dynamics(&canonical_equations(&factor), &mapped)?;
                    b.push(Check::bound("mapped-residual", r, RESIDUAL_TOL));
                }
            }
            None => {
                b.push(
                    Check::new("trajectory", Symbolic::NotApplicable, Status::Inconclusive)
                        .detail("no start point kept the flow on the charts"),
                );
            }
        }
    }
    Ok(b.finish())
}

/// Outcome of a reduction: the verification report and, when the candidate
/// passed, the factor system.
#[derive(Debug, Clone, PartialEq)]
pub struct Reduction {
    pub report: VerificationReport,
    pub qtilde: Expr,
    pub gbar: Expr,
    pub g: Expr,
    pub factor: FactorSystem,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReduceError {
    #[error("candidate did not pass verification ({})", .0.overall)]
    Rejected(Box<VerificationReport>),
    #[error(transparent)]
    Failed(#[from] FactorizationError),
}

/// Verifies the candidate and, when it passes, builds its factor system.
pub fn reduce(
    hs: &HamiltonianSystem,
    c: &FactorizationCandidate,
    opts: &VerifyOptions,
) -> Result<Reduction, ReduceError> {
    let report = verify(hs, c, opts)?;
    if report.overall != Status::Pass {
        return Err(ReduceError::Rejected(Box::new(report)));
    }
    let samples = sample_canonical(hs, opts.samples, opts.seed).map_err(FactorizationError::from)?;
    let qtilde = match &c.qtilde {
        Some(q) => q.clone(),
        None => reconstruct_qtilde(hs, c, &samples)?,
    };
    let gbar = build_gbar(hs, c, &qtilde);
    let g = express_through_map(&gbar, c, hs, &samples)?;
    let factor = build_factor_system(hs, c, &g, &samples)?;
    Ok(Reduction { report, qtilde, gbar, g, factor })
}
