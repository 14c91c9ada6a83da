use serde::{Deserialize, Serialize};

use super::{FactorizationCandidate, FactorizationError};
use crate::control::HamiltonianSystem;
use crate::expr::{jacobian_at, numeric_rank, Point};
use crate::numeric::{sample_points, NumericError, SamplePlan};

/// How fixed-end conditions on `q` constrain the factor problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Determinacy {
    OverDetermined,
    WellDetermined,
    UnderDetermined,
}

impl std::fmt::Display for Determinacy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Determinacy::OverDetermined => "Over",
            Determinacy::WellDetermined => "Well",
            Determinacy::UnderDetermined => "Under",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiberVerdict {
    pub fiber: Point,
    pub rank: usize,
    pub nu: usize,
    pub class: Determinacy,
}

/// `count` fibers `q = q₀` on the charts and `per_fiber` costate samples.
pub fn sample_fibers(
    hs: &HamiltonianSystem,
    count: usize,
    per_fiber: usize,
    seed: u64,
) -> Result<(Vec<Point>, Vec<Point>), NumericError> {
    let fibers = sample_points(&SamplePlan::new(hs.states.clone(), hs.charts.clone()).count(count).seed(seed))?;
    let ps = sample_points(&SamplePlan::new(hs.costates.clone(), vec![]).count(per_fiber).seed(seed ^ 0x5eed))?;
    Ok((fibers, ps))
}

/// Per fiber, the generic rank `d` of `p ↦ (x, y)(p, q₀)`: `d < ν` is
/// over-, `d = ν` well- and `d > ν` under-determined.
pub fn classify_boundary(
    c: &FactorizationCandidate,
    hs: &HamiltonianSystem,
    fibers: &[Point],
    p_samples: &[Point],
) -> Result<Vec<FiberVerdict>, FactorizationError> {
    let maps = c.map_exprs();
    let nu = c.nu();
    let mut out = Vec::with_capacity(fibers.len());
    for q0 in fibers {
        let mut rank = 0;
        for p in p_samples {
            if let Ok(j) = jacobian_at(&maps, &hs.costates, &p.merged(q0)) {
                rank = rank.max(numeric_rank(&j));
            }
        }
        let class = match rank.cmp(&nu) {
            std::cmp::Ordering::Less => Determinacy::OverDetermined,
            std::cmp::Ordering::Equal => Determinacy::WellDetermined,
            std::cmp::Ordering::Greater => Determinacy::UnderDetermined,
        };
        out.push(FiberVerdict { fiber: q0.clone(), rank, nu, class });
    }
    Ok(out)
}
