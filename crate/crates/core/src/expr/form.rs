use std::fmt;

use super::{is_zero, Expr, Point, Symbol, ZeroVerdict};

/// `Σ a_w dw` over an ordered coordinate list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OneForm {
    symbols: Vec<Symbol>,
    coeffs: Vec<Expr>,
}

impl OneForm {
    pub fn new(symbols: Vec<Symbol>, coeffs: Vec<Expr>) -> Self {
        assert_eq!(symbols.len(), coeffs.len(), "one coefficient per coordinate");
        OneForm { symbols, coeffs }
    }

    pub fn zero(symbols: &[Symbol]) -> Self {
        OneForm { symbols: symbols.to_vec(), coeffs: vec![Expr::zero(); symbols.len()] }
    }

    /// Exterior derivative of a function.
    pub fn exact(f: &Expr, symbols: &[Symbol]) -> Self {
        OneForm { symbols: symbols.to_vec(), coeffs: symbols.iter().map(|s| f.diff(s)).collect() }
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn coeffs(&self) -> &[Expr] {
        &self.coeffs
    }

    pub fn coeff(&self, s: &Symbol) -> Option<&Expr> {
        self.symbols.iter().position(|w| w == s).map(|i| &self.coeffs[i])
    }

    fn zip_with(&self, other: &OneForm, f: impl Fn(&Expr, &Expr) -> Expr) -> OneForm {
        assert_eq!(self.symbols, other.symbols, "forms on different frames");
        OneForm {
            symbols: self.symbols.clone(),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| f(a, b)).collect(),
        }
    }

    pub fn add(&self, other: &OneForm) -> OneForm {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &OneForm) -> OneForm {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, k: &Expr) -> OneForm {
        OneForm { symbols: self.symbols.clone(), coeffs: self.coeffs.iter().map(|a| a * k).collect() }
    }

    /// Componentwise zero test.
    pub fn is_zero(&self, samples: &[Point]) -> ZeroVerdict {
        ZeroVerdict::all(self.coeffs.iter().map(|a| is_zero(a, samples)))
    }

    /// Largest absolute coefficient value over `samples`, skipping points
    /// where a coefficient cannot be evaluated.
    pub fn max_abs(&self, samples: &[Point]) -> f64 {
        let mut m: f64 = 0.0;
        for pt in samples {
            for a in &self.coeffs {
                if let Ok(v) = a.eval(pt) {
                    m = m.max(v.abs());
                }
            }
        }
        m
    }
}

impl fmt::Display for OneForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (s, a) in self.symbols.iter().zip(&self.coeffs) {
            if a.is_zero() {
                continue;
            }
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            write!(f, "({a}) d{s}")?;
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}
