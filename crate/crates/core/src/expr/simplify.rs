use super::Expr;

impl Expr {
    /// Light algebraic cleanup: constant folding, 0/1 identities, double
    /// negation, `e^0 -> 1` and `e^1 -> e`.
    ///
    /// The result evaluates identically to `self` wherever `self` is defined.
    /// There is no canonical form; zero-testing is done by sampling
    /// ([`crate::expr::is_numerically_zero`]).
    pub fn simplify(&self) -> Expr {
        self.rebuild(&mut |_| None)
    }
}
