use std::fmt;

use num_traits::{One, Signed};

use super::poly::{Coeff, Monomial, Poly, Var};
use super::ratfunc::RatFunc;
use super::Expr;

fn fmt_monomial(m: &Monomial) -> String {
    let factors = m.factors();
    let mut parts = Vec::new();
    for (v, e) in factors {
        match v {
            Var::Sym(s) => {
                // y^k * (y^(1/b))^r prints as y^((k b + r)/b)
                let root = factors.iter().find_map(|(w, r)| match w {
                    Var::Root(a) if single_symbol(&a.base).is_some_and(|t| t == s.name()) => Some((a.index, *r)),
                    _ => None,
                });
                match root {
                    Some((b, r)) => {
                        parts.push(format!("{s}^({}/{b})", e * b + r));
                    }
                    None if *e == 1 => parts.push(s.to_string()),
                    None => parts.push(format!("{s}^{e}")),
                }
            }
            Var::Root(a) => {
                if let Some(name) = single_symbol(&a.base) {
                    if factors.iter().any(|(w, _)| matches!(w, Var::Sym(s) if s.name() == name)) {
                        continue;
                    }
                    parts.push(if a.index == 2 && *e == 1 {
                        format!("sqrt({name})")
                    } else {
                        format!("{name}^({e}/{})", a.index)
                    });
                    continue;
                }
                let base = fmt_ratfunc(&a.base);
                parts.push(match (a.index, e) {
                    (2, 1) => format!("sqrt({base})"),
                    (2, e) => format!("sqrt({base})^{e}"),
                    (b, e) => format!("({base})^({e}/{b})"),
                });
            }
        }
    }
    parts.join("*")
}

fn single_symbol(r: &RatFunc) -> Option<&str> {
    if !r.den.is_one() || !r.num.is_monomial() {
        return None;
    }
    let (m, c) = r.num.terms().next()?;
    match (m.factors(), c.is_one()) {
        ([(Var::Sym(s), 1)], true) => Some(s.name()),
        _ => None,
    }
}

fn fmt_coeff_abs(c: &Coeff) -> String {
    let c = c.abs();
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

pub(super) fn fmt_poly(p: &Poly) -> String {
    if p.is_zero() {
        return "0".into();
    }
    let mut terms: Vec<(&Monomial, &Coeff)> = p.terms().collect();
    terms.sort_by(|a, b| b.0.lex_cmp(a.0));
    let mut out = String::new();
    for (i, (m, c)) in terms.iter().enumerate() {
        let neg = c.is_negative();
        if i == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        let abs = c.abs();
        if m.is_one() {
            out.push_str(&fmt_coeff_abs(&abs));
        } else if abs.is_one() {
            out.push_str(&fmt_monomial(m));
        } else if abs.is_integer() {
            out.push_str(&format!("{}*{}", fmt_coeff_abs(&abs), fmt_monomial(m)));
        } else {
            out.push_str(&format!("({})*{}", fmt_coeff_abs(&abs), fmt_monomial(m)));
        }
    }
    out
}

fn needs_parens_as_divisor(p: &Poly) -> bool {
    if !p.is_monomial() {
        return true;
    }
    let (m, c) = p.terms().next().expect("one term");
    !c.is_one() || m.factors().len() > 1
}

pub(super) fn fmt_ratfunc(r: &RatFunc) -> String {
    let num = fmt_poly(&r.num);
    if r.den.is_one() {
        return num;
    }
    let num = if r.num.num_terms() > 1 { format!("({num})") } else { num };
    let den = fmt_poly(&r.den);
    if needs_parens_as_divisor(&r.den) {
        format!("{num}/({den})")
    } else {
        format!("{num}/{den}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&fmt_ratfunc(self.rf()))
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::{parse_expression, CoordinateFrame, Role, Symbol};

    fn frame() -> CoordinateFrame {
        CoordinateFrame::new()
            .with(["p1", "p2", "q1", "q2", "y1", "v1"].map(Symbol::new), Role::State)
    }

    fn roundtrip(s: &str) {
        let f = frame();
        let e = parse_expression(s, &f).unwrap();
        let shown = e.to_string();
        let back = parse_expression(&shown, &f).unwrap();
        assert_eq!(e, back, "{s} -> {shown}");
    }

    #[test]
    fn printed_forms_reparse() {
        for s in [
            "p1*p2/q1 - q1*q2",
            "(1/2)*v1^2 + (4/3)*y1^(3/2)",
            "-p1/(q1*q2)",
            "sqrt(q1^2 + 1) - 2",
            "(p1 + 3)^(1/3)",
            "y1^(-1/2)",
            "4/3",
        ] {
            roundtrip(s);
        }
    }

    #[test]
    fn fractional_power_notation() {
        let e = parse_expression("(1/2)*v1^2 + (4/3)*y1^(3/2)", &frame()).unwrap();
        assert_eq!(e.to_string(), "(1/2)*v1^2 + (4/3)*y1^(3/2)");
    }
}
