//! Closed-form analytic expressions: parsing, printing and evaluation over
//! reals, forward-mode duals, second-order jets and complex arguments.

mod ast;
mod parse;
mod scalar;

use thiserror::Error;

pub use ast::{BinOp, Expr, Func, Node};
pub use parse::parse_expr;
pub use scalar::{ComplexDual, DomainKind, Dual, Jet2, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown identifier '{name}' at byte {pos}")]
    UnknownIdentifier { name: String, pos: usize },
    #[error("unknown function '{name}' at byte {pos}")]
    UnknownFunction { name: String, pos: usize },
    #[error("{kind} in '{subexpr}'")]
    Domain { kind: DomainKind, subexpr: String },
    #[error("variable '{0}' is not bound")]
    MissingVariable(String),
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashMap;

    const X: [&str; 3] = ["x1", "x2", "x3"];

    #[test]
    fn single_variable() {
        let e = parse_expr("x3", &X).unwrap();
        assert_eq!(e.root(), &Node::Var(2));
    }

    #[test]
    fn leading_minus_negates_the_quotient() {
        let e = parse_expr("-x2/2", &X).unwrap();
        let expected = Node::Neg(Box::new(Node::Binary(
            BinOp::Div,
            Box::new(Node::Var(1)),
            Box::new(Node::Const(2.0)),
        )));
        assert_eq!(e.root(), &expected);
    }

    #[test]
    fn minus_binds_looser_than_power() {
        let e = parse_expr("-x1^2", &X).unwrap();
        assert_eq!(e.eval(&[3.0, 0.0, 0.0]).unwrap(), -9.0);
        let e = parse_expr("2*-x1^2", &X).unwrap();
        assert_eq!(e.eval(&[3.0, 0.0, 0.0]).unwrap(), -18.0);
    }

    #[test]
    fn pythagorean_identity() {
        let e = parse_expr("cos(u)^2 + sin(u)^2", &["u"]).unwrap();
        assert!((e.eval(&[0.7]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn whitespace_is_insignificant() {
        let a = parse_expr(" x1 *\t( x2+1 ) ", &X).unwrap();
        let b = parse_expr("x1*(x2+1)", &X).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn eval_with_environment() {
        let e = parse_expr("x3", &X).unwrap();
        let env = HashMap::from([("x3".to_string(), 2.0)]);
        assert_eq!(e.eval_env(&env).unwrap(), 2.0);
    }

    #[test]
    fn division_by_zero_names_the_subexpression() {
        let e = parse_expr("1 + 1/x3", &X).unwrap();
        let env = HashMap::from([("x3".to_string(), 0.0)]);
        match e.eval_env(&env) {
            Err(ExprError::Domain { kind: DomainKind::DivisionByZero, subexpr }) => {
                assert_eq!(subexpr, "(1.0 / x3)")
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sqrt_and_log_domain_errors() {
        let e = parse_expr("sqrt(x1)", &X).unwrap();
        assert!(matches!(
            e.eval(&[-1.0, 0.0, 0.0]),
            Err(ExprError::Domain { kind: DomainKind::SqrtNegative, .. })
        ));
        let e = parse_expr("log(x1)", &X).unwrap();
        assert!(matches!(
            e.eval(&[0.0, 0.0, 0.0]),
            Err(ExprError::Domain { kind: DomainKind::LogNonPositive, .. })
        ));
    }

    #[test]
    fn sinh_reference_value() {
        // reference from an independent libm evaluation: (e - 1/e) / 2
        let e = parse_expr("sinh(1)", &X).unwrap();
        let reference = (std::f64::consts::E - 1.0 / std::f64::consts::E) / 2.0;
        assert!((e.eval(&[0.0; 3]).unwrap() - reference).abs() < 1e-15);
        assert!((reference - 1.1752011936438014).abs() < 1e-15);
    }

    #[test]
    fn dual_power_rule() {
        let e = parse_expr("x3^2", &X).unwrap();
        let d = e.eval_with(&[Dual::constant(0.0), Dual::constant(0.0), Dual::variable(3.0, 2)]).unwrap();
        assert_eq!(d.value, 9.0);
        assert_eq!(d.partials[2], 6.0);
    }

    #[test]
    fn dual_cos_at_zero() {
        let e = parse_expr("cos(u)", &["u"]).unwrap();
        let d = e.eval_with(&[Dual::variable(0.0, 0)]).unwrap();
        assert_eq!(d.partials[0], 0.0);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(parse_expr("x4", &X), Err(ExprError::UnknownIdentifier { pos: 0, .. })));
        assert!(matches!(parse_expr("foo(x1)", &X), Err(ExprError::UnknownFunction { .. })));
        assert!(matches!(parse_expr("x1 +", &X), Err(ExprError::Syntax { pos: 4, .. })));
        assert!(matches!(parse_expr("x1^1.5", &X), Err(ExprError::Syntax { .. })));
        assert!(matches!(parse_expr("(x1", &X), Err(ExprError::Syntax { .. })));
        assert!(matches!(parse_expr("x1 x2", &X), Err(ExprError::Syntax { .. })));
        assert!(matches!(parse_expr("x1 $ 2", &X), Err(ExprError::Syntax { pos: 3, .. })));
    }

    #[test]
    fn free_variables_are_declared() {
        let e = parse_expr("x1*sin(x3)", &X).unwrap();
        assert_eq!(e.free_variables(), vec!["x1", "x3"]);
    }

    #[test]
    fn complex_extension_of_cos() {
        use num_complex::Complex64;
        let e = parse_expr("cos(u)*2", &["u"]).unwrap();
        let z = Complex64::new(0.4, 0.3);
        let v: Complex64 = e.eval_with(&[z]).unwrap();
        assert!((v - 2.0 * z.cos()).norm() < 1e-15);
    }

    /// Random expression text over x1..x3 built from analytic pieces whose
    /// values stay moderate on the sampling box.
    fn expr_text() -> impl Strategy<Value = String> {
        let leaf = prop_oneof![
            (-2.0..2.0f64).prop_map(|c| format!("{c:.3}")),
            Just("x1".to_string()),
            Just("x2".to_string()),
            Just("x3".to_string()),
        ];
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) + ({b})")),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) - ({b})")),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) * ({b})")),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) / (2 + sin({b})^2)")),
                inner.clone().prop_map(|a| format!("sin({a})")),
                inner.clone().prop_map(|a| format!("cos({a})")),
                inner.clone().prop_map(|a| format!("exp(cos({a}))")),
                inner.clone().prop_map(|a| format!("sqrt(1 + ({a})^2)")),
                inner.clone().prop_map(|a| format!("log(2 + cos({a}))")),
                inner.clone().prop_map(|a| format!("-({a})^3")),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn dual_partials_match_central_differences(
            text in expr_text(),
            p in proptest::array::uniform3(-1.0..1.0f64),
        ) {
            let e = parse_expr(&text, &X).unwrap();
            let v = e.eval(&p).unwrap();
            prop_assume!(v.abs() < 1e3);
            let duals: Vec<Dual> = (0..3).map(|k| Dual::variable(p[k], k)).collect();
            let d = e.eval_with(&duals).unwrap();
            prop_assert_eq!(d.value, v);
            // the difference oracle is only trustworthy for moderate slopes
            prop_assume!(d.partials.iter().all(|g| g.abs() < 1e2));
            let h = 1e-3;
            for k in 0..3 {
                let at = |s: f64| {
                    let mut q = p;
                    q[k] += s * h;
                    e.eval(&q).unwrap()
                };
                let fd = (8.0 * (at(1.0) - at(-1.0)) - (at(2.0) - at(-2.0))) / (12.0 * h);
                prop_assert!(
                    (d.partials[k] - fd).abs() <= 1e-5 * (1.0 + d.partials[k].abs()),
                    "{} partial {} = {} vs fd {}", text, k, d.partials[k], fd
                );
            }
        }

        #[test]
        fn print_parse_round_trip(text in expr_text()) {
            let once = parse_expr(&text, &X).unwrap();
            let printed = once.to_string();
            let twice = parse_expr(&printed, &X).unwrap();
            prop_assert_eq!(&once, &twice);
            prop_assert_eq!(printed, twice.to_string());
        }
    }
}
