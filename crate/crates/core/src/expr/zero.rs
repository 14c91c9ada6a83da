use serde::{Deserialize, Serialize};

use super::{Expr, Point, Symbol};

/// Absolute threshold under which a sampled value counts as zero.
pub const ZERO_TOL: f64 = 1e-9;

/// Outcome of a zero test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum ZeroVerdict {
    /// Exact: the canonical form is zero.
    Yes,
    /// Definitely nonzero; `witness` is a point where the value is nonzero.
    No { witness: Option<Point>, value: Option<f64> },
    /// Atom-bearing expression that vanished at every evaluable sample.
    Unknown { samples: usize, zero: usize, max_abs: f64 },
}

impl ZeroVerdict {
    pub fn is_yes(&self) -> bool {
        matches!(self, ZeroVerdict::Yes)
    }

    pub fn is_no(&self) -> bool {
        matches!(self, ZeroVerdict::No { .. })
    }

    /// Yes, or Unknown backed by at least one sample and no nonzero value.
    pub fn holds(&self) -> bool {
        match self {
            ZeroVerdict::Yes => true,
            ZeroVerdict::No { .. } => false,
            ZeroVerdict::Unknown { samples, zero, .. } => *samples > 0 && zero == samples,
        }
    }

    /// Combines componentwise verdicts: any No wins, then Unknown, then Yes.
    pub fn all(verdicts: impl IntoIterator<Item = ZeroVerdict>) -> ZeroVerdict {
        let mut out = ZeroVerdict::Yes;
        for v in verdicts {
            match (&out, v) {
                (ZeroVerdict::No { .. }, _) => {}
                (_, v @ ZeroVerdict::No { .. }) => out = v,
                (ZeroVerdict::Yes, v) => out = v,
                (
                    ZeroVerdict::Unknown { samples, zero, max_abs },
                    ZeroVerdict::Unknown { samples: s2, zero: z2, max_abs: m2 },
                ) => {
                    out = ZeroVerdict::Unknown {
                        samples: (*samples).min(s2),
                        zero: (*zero).min(z2),
                        max_abs: max_abs.max(m2),
                    }
                }
                (ZeroVerdict::Unknown { .. }, ZeroVerdict::Yes) => {}
            }
        }
        out
    }
}

fn probe_points(symbols: &[Symbol]) -> Vec<Point> {
    let mut out = Vec::new();
    for i in 0..symbols.len() {
        let vals: Vec<f64> = (0..symbols.len()).map(|j| if i == j { 1.0 } else { 0.0 }).collect();
        out.push(Point::from_slices(symbols, &vals));
    }
    for k in [1.0, 2.0, -1.0] {
        out.push(Point::from_slices(symbols, &vec![k; symbols.len()]));
    }
    let primes = [2.0, 3.0, 5.0, 7.0, 11.0, 13.0, 17.0, 19.0, 23.0, 29.0];
    let vals: Vec<f64> = (0..symbols.len()).map(|j| 1.0 / primes[j % primes.len()] + j as f64).collect();
    out.push(Point::from_slices(symbols, &vals));
    out
}

/// Decides whether `e` is zero.
///
/// Atom-free expressions are decided exactly from the canonical form. Atom-
/// bearing ones are evaluated at `samples`; a single value above
/// [`ZERO_TOL`] yields `No` with that sample as witness.
pub fn is_zero(e: &Expr, samples: &[Point]) -> ZeroVerdict {
    if e.is_zero() {
        return ZeroVerdict::Yes;
    }
    if !e.has_atoms() {
        let syms: Vec<Symbol> = e.symbols().into_iter().collect();
        let candidates = probe_points(&syms).into_iter().chain(samples.iter().cloned());
        for pt in candidates {
            if let Ok(v) = e.eval(&pt) {
                if v.abs() > 1e-12 {
                    return ZeroVerdict::No { witness: Some(pt), value: Some(v) };
                }
            }
        }
        return ZeroVerdict::No { witness: None, value: None };
    }
    let mut evaluated = 0;
    let mut max_abs: f64 = 0.0;
    for pt in samples {
        let Ok(v) = e.eval(pt) else { continue };
        evaluated += 1;
        if v.abs() > ZERO_TOL {
            return ZeroVerdict::No { witness: Some(pt.clone()), value: Some(v) };
        }
        max_abs = max_abs.max(v.abs());
    }
    ZeroVerdict::Unknown { samples: evaluated, zero: evaluated, max_abs }
}
