//! Ground evaluation of numeral arithmetic on `nat`.

use num_bigint::BigUint;
use num_traits::Zero;

use crate::term::{logic, Term, Type};

pub const PLUS: &str = "+";
pub const MINUS: &str = "-";
pub const TIMES: &str = "*";
pub const LT: &str = "<";
pub const LE: &str = "<=";
pub const GT: &str = ">";
pub const GE: &str = ">=";
pub const DVD: &str = "dvd";

pub fn nat_binop(op: &str) -> Term {
    Term::cnst(op, Type::curried(&[Type::nat(), Type::nat()], Type::nat()))
}

pub fn nat_rel(op: &str) -> Term {
    Term::cnst(op, Type::curried(&[Type::nat(), Type::nat()], Type::bool()))
}

pub fn mk_minus(a: Term, b: Term) -> Term {
    Term::apps(nat_binop(MINUS), [a, b])
}

pub fn mk_lt(a: Term, b: Term) -> Term {
    Term::apps(nat_rel(LT), [a, b])
}

fn is_nat_op(t: &Term, op: &str) -> bool {
    matches!(t, Term::Const(n, ty) if &**n == op && *ty == Type::curried(&[Type::nat(), Type::nat()], Type::nat()))
}

fn is_nat_rel(t: &Term, op: &str) -> bool {
    matches!(t, Term::Const(n, ty) if &**n == op && *ty == Type::curried(&[Type::nat(), Type::nat()], Type::bool()))
}

/// Value of a closed numeral expression built from `+`, `-`
/// (truncated) and `*`.
pub fn eval_nat(t: &Term) -> Option<BigUint> {
    if let Term::Num(n) = t {
        return Some(n.clone());
    }
    let (h, args) = t.strip_app();
    let [a, b] = args.as_slice() else { return None };
    let (x, y) = (eval_nat(a)?, eval_nat(b)?);
    if is_nat_op(h, PLUS) {
        Some(x + y)
    } else if is_nat_op(h, TIMES) {
        Some(x * y)
    } else if is_nat_op(h, MINUS) {
        Some(if x >= y { x - y } else { BigUint::zero() })
    } else {
        None
    }
}

/// Truth value of a closed boolean combination of numeral comparisons.
pub fn eval_bool(t: &Term) -> Option<bool> {
    if logic::is_true(t) {
        return Some(true);
    }
    if logic::is_false(t) {
        return Some(false);
    }
    if let Some(a) = logic::dest_not(t) {
        return eval_bool(a).map(|v| !v);
    }
    if let Some((a, b)) = logic::dest_and(t) {
        return Some(eval_bool(a)? && eval_bool(b)?);
    }
    if let Some((a, b)) = logic::dest_or(t) {
        return Some(eval_bool(a)? || eval_bool(b)?);
    }
    if let Some((a, b)) = logic::dest_eq(t) {
        return Some(eval_nat(a)? == eval_nat(b)?);
    }
    let (h, args) = t.strip_app();
    let [a, b] = args.as_slice() else { return None };
    let (x, y) = (eval_nat(a)?, eval_nat(b)?);
    if is_nat_rel(h, LT) {
        Some(x < y)
    } else if is_nat_rel(h, LE) {
        Some(x <= y)
    } else if is_nat_rel(h, GT) {
        Some(x > y)
    } else if is_nat_rel(h, GE) {
        Some(x >= y)
    } else if is_nat_rel(h, DVD) {
        Some(if x.is_zero() { y.is_zero() } else { (&y % &x).is_zero() })
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates() {
        let t = Term::apps(nat_binop(PLUS), [Term::num(2), Term::num(3)]);
        assert_eq!(eval_nat(&t), Some(BigUint::from(5u32)));
        assert_eq!(eval_bool(&logic::mk_eq(t, Term::num(5))), Some(true));
        assert_eq!(eval_bool(&logic::mk_eq(Term::num(2), Term::num(1))), Some(false));
        assert_eq!(eval_nat(&mk_minus(Term::num(1), Term::num(4))), Some(BigUint::zero()));
        let dvd = Term::apps(nat_rel(DVD), [Term::num(3), Term::num(12)]);
        assert_eq!(eval_bool(&dvd), Some(true));
        assert_eq!(eval_bool(&mk_lt(Term::num(0), Term::free("n", Type::nat()))), None);
    }
}
