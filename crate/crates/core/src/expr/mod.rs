//! Exact symbolic expressions.
//!
//! An [`Expr`] is always stored in canonical rational normal form over exact
//! rationals, with square roots and fractional powers kept as opaque atoms
//! whose arguments are themselves normalized. Structural equality therefore
//! coincides with algebraic equality for atom-free expressions.

mod calculus;
mod display;
mod eval;
mod form;
mod linear;
mod parse;
mod poly;
mod rank;
mod ratfunc;
mod symbol;
mod zero;

use std::collections::BTreeSet;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use thiserror::Error;

pub use eval::Point;
pub use form::OneForm;
pub use linear::{solve_linear, symbolic_rank};
pub use parse::{parse_ast, parse_expression, simplify, Node};
pub use rank::{jacobian_at, jacobian_rank, numeric_rank, ranks_at_points, RANK_TOL};
pub use symbol::{CoordinateFrame, Role, Symbol};
pub use zero::{is_zero, ZeroVerdict, ZERO_TOL};

use ratfunc::RatFunc;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at column {col}: expected {expected}, found {found}", col = .pos + 1, expected = .expected.join(" or "))]
    Syntax { pos: usize, expected: Vec<String>, found: String },
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("division by an expression that is identically zero")]
    DivisionByZero,
    #[error("exponent must be a rational constant")]
    NonConstantExponent,
    #[error("evaluation outside the domain: {0}")]
    EvalDomain(String),
    #[error("`{0}` is not affine in the unknowns")]
    NotLinear(String),
    #[error("coefficient matrix is singular (rank {rank} of {size})")]
    Singular { rank: usize, size: usize },
    #[error("no solution: {0}")]
    NoSolution(String),
}

impl From<ratfunc::ZeroDenominator> for ExprError {
    fn from(_: ratfunc::ZeroDenominator) -> Self {
        ExprError::DivisionByZero
    }
}

/// Immutable symbolic expression in canonical form. Cheap to clone.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Expr(Arc<RatFunc>);

impl Expr {
    pub(crate) fn from_rf(r: RatFunc) -> Self {
        Expr(Arc::new(r))
    }

    pub(crate) fn rf(&self) -> &RatFunc {
        &self.0
    }

    pub fn zero() -> Self {
        Expr::from_rf(RatFunc::zero())
    }

    pub fn one() -> Self {
        Expr::from_rf(RatFunc::one())
    }

    pub fn int(k: i64) -> Self {
        Expr::constant(BigRational::from_integer(BigInt::from(k)))
    }

    pub fn rational(n: i64, d: i64) -> Self {
        Expr::constant(BigRational::new(n.into(), d.into()))
    }

    pub fn constant(c: BigRational) -> Self {
        Expr::from_rf(RatFunc::constant(c))
    }

    pub fn symbol(s: &Symbol) -> Self {
        Expr::from_rf(RatFunc::symbol(s.clone()))
    }

    /// Shorthand for `Expr::symbol(&Symbol::new(name))`.
    pub fn var(name: &str) -> Self {
        Expr::symbol(&Symbol::new(name))
    }

    /// True when the canonical form is the zero rational function.
    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn as_constant(&self) -> Option<BigRational> {
        self.0.as_constant()
    }

    /// True when the expression contains a square root or fractional power.
    pub fn has_atoms(&self) -> bool {
        self.0.has_atoms()
    }

    pub fn symbols(&self) -> BTreeSet<Symbol> {
        self.0.symbols()
    }

    pub fn depends_on(&self, s: &Symbol) -> bool {
        self.symbols().contains(s)
    }

    pub fn checked_div(&self, other: &Expr) -> Result<Expr, ExprError> {
        Ok(Expr::from_rf(self.0.div(&other.0)?))
    }

    pub fn pow_int(&self, k: i64) -> Result<Expr, ExprError> {
        Ok(Expr::from_rf(self.0.pow_int(k)?))
    }

    pub fn pow_rational(&self, r: &BigRational) -> Result<Expr, ExprError> {
        Ok(Expr::from_rf(self.0.pow_rational(r)?))
    }

    pub fn sqrt(&self) -> Expr {
        Expr::from_rf(self.0.root(2))
    }

    /// Exact partial derivative.
    pub fn diff(&self, s: &Symbol) -> Expr {
        Expr::from_rf(calculus::derivative(&self.0, s))
    }

    /// Idempotent re-normalization.
    pub fn simplify(&self) -> Expr {
        self.clone()
    }
}

impl std::fmt::Debug for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Expr({self})")
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $inner:ident) => {
        impl $tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                Expr::from_rf(self.0.$inner(&rhs.0))
            }
        }
        impl $tr<Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                (&self).$m(rhs)
            }
        }
        impl $tr<Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                self.$m(&rhs)
            }
        }
    };
}

binop!(Add, add, add);
binop!(Sub, sub, sub);
binop!(Mul, mul, mul);

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::from_rf(self.0.neg())
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

impl std::iter::Sum for Expr {
    fn sum<I: Iterator<Item = Expr>>(iter: I) -> Expr {
        iter.fold(Expr::zero(), |a, b| a + b)
    }
}
