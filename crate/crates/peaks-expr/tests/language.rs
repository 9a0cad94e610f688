use std::collections::HashMap;

use peaks_expr::{parse, EvalError, Node, ParseError};

#[test]
fn objective_at_first_table_entry() {
    let e = parse("y^2 - x1^2 + p*x1", &["x1", "y", "p"]).unwrap();
    let b: HashMap<String, f64> =
        [("x1", 1.0), ("y", 0.5), ("p", 30.0)].iter().map(|(k, v)| (k.to_string(), *v)).collect();
    assert_eq!(e.evaluate(&b).unwrap(), 29.25);
}

#[test]
fn klgen_expression_spot_check() {
    let e = parse("min(s, 900*exp(t*ln(2/3)/10))", &["s", "t"]).unwrap();
    assert_eq!(e.eval(&[5.0, 0.0]).unwrap(), 5.0);
    let v = e.eval(&[1e9, 10.0]).unwrap();
    assert!((v - 600.0).abs() < 1e-9, "{v}");
    assert_eq!(e.free_vars(), ["s", "t"]);
}

#[test]
fn precedence_and_associativity() {
    let eval = |s: &str| parse(s, &[]).unwrap().eval(&[]).unwrap();
    assert_eq!(eval("2^3^2"), 512.0);
    assert_eq!(eval("-2^2"), -4.0);
    assert_eq!(eval("2^-1"), 0.5);
    assert_eq!(eval("8 - 3 - 2"), 3.0);
    assert_eq!(eval("8 / 4 / 2"), 1.0);
    assert_eq!(eval("1 + 2 * 3"), 7.0);
    assert_eq!(eval("max(1, 4, 2) + min(3)"), 7.0);
}

#[test]
fn piecewise_first_match() {
    let e = parse("piecewise(x < 0: -1, x < 10: 1, else: 2)", &["x"]).unwrap();
    assert_eq!(e.eval(&[-3.0]).unwrap(), -1.0);
    assert_eq!(e.eval(&[3.0]).unwrap(), 1.0);
    assert_eq!(e.eval(&[30.0]).unwrap(), 2.0);
    let g = parse("piecewise((x > 0 && x < 1) || x == 5: x, (x) >= 1: 0)", &["x"]).unwrap();
    assert_eq!(g.eval(&[0.5]).unwrap(), 0.5);
    assert_eq!(g.eval(&[5.0]).unwrap(), 5.0);
    assert_eq!(g.eval(&[2.0]).unwrap(), 0.0);
    assert!(matches!(g.eval(&[-1.0]), Err(EvalError::NoBranch { .. })));
}

#[test]
fn syntax_errors_carry_offsets() {
    assert_eq!(parse("x1 +", &["x1"]).unwrap_err().offset(), 4);
    assert_eq!(parse("2 * (x1", &["x1"]).unwrap_err().offset(), 7);
    assert_eq!(parse("2 $ 3", &[]).unwrap_err().offset(), 2);
    assert!(matches!(parse("2 x", &["x"]), Err(ParseError::Syntax { offset: 2, .. })));
    match parse("y + q", &["y"]) {
        Err(ParseError::Undeclared { name, offset }) => assert_eq!((name.as_str(), offset), ("q", 4)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn domain_errors_surface() {
    let e = parse("1 + ln(x)", &["x"]).unwrap();
    assert!(matches!(e.eval(&[0.0]), Err(EvalError::LnDomain { offset: 4, .. })));
    let d = parse("1/(x - 1)", &["x"]).unwrap();
    assert!(matches!(d.eval(&[1.0]), Err(EvalError::DivisionByZero { offset: 1 })));
    assert!(matches!(parse("sqrt(-1)", &[]).unwrap().eval(&[]), Err(EvalError::SqrtDomain { .. })));
    assert!(matches!(parse("(-8)^0.5", &[]).unwrap().eval(&[]), Err(EvalError::PowDomain { .. })));
}

#[test]
fn unbound_variable_reported() {
    let e = parse("x + y", &["x", "y"]).unwrap();
    let b: HashMap<String, f64> = [("x".to_string(), 1.0)].into();
    assert_eq!(e.evaluate(&b), Err(EvalError::Unbound { name: "y".into() }));
    assert_eq!(e.eval(&[1.0]), Err(EvalError::Unbound { name: "y".into() }));
}

#[test]
fn display_is_parenthesized() {
    let e = parse("-x^2 + 1", &["x"]).unwrap();
    assert_eq!(e.to_string(), "((-(x ^ 2.0)) + 1.0)");
    assert!(matches!(e.root(), Node::Bin { .. }));
}
