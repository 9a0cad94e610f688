use peaks_expr::{parse, BinOp, CmpOp, Cond, Expression, Func, Node};
use proptest::prelude::*;

const VARS: [&str; 3] = ["x1", "x2", "t"];

fn leaf() -> impl Strategy<Value = Node> {
    prop_oneof![
        // Printed literals are nonnegative; a negative one reads back as Neg(Num).
        (0.0..1e3f64).prop_map(Node::Num),
        prop::sample::select(vec![0.0, 0.5, 1.0, 2.0, 1e-12, 3e300]).prop_map(Node::Num),
        (0..VARS.len()).prop_map(Node::Var),
    ]
}

fn cond(node: BoxedStrategy<Node>) -> impl Strategy<Value = Cond> {
    let op = prop::sample::select(vec![CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge, CmpOp::Eq, CmpOp::Ne]);
    let cmp = (op, node.clone(), node).prop_map(|(op, lhs, rhs)| Cond::Cmp { op, lhs, rhs });
    cmp.prop_recursive(2, 4, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Cond::And(Box::new(a), Box::new(b))),
            (inner.clone(), inner).prop_map(|(a, b)| Cond::Or(Box::new(a), Box::new(b))),
        ]
    })
}

fn tree() -> impl Strategy<Value = Node> {
    leaf().prop_recursive(5, 48, 3, |inner| {
        let bin = prop::sample::select(vec![BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Pow]);
        let unary = prop::sample::select(vec![Func::Exp, Func::Ln, Func::Abs, Func::Floor, Func::Sqrt]);
        let variadic = prop::sample::select(vec![Func::Min, Func::Max]);
        let boxed = inner.clone().boxed();
        prop_oneof![
            inner.clone().prop_map(|a| Node::Neg { arg: Box::new(a), offset: 0 }),
            (bin, inner.clone(), inner.clone()).prop_map(|(op, l, r)| Node::Bin {
                op,
                lhs: Box::new(l),
                rhs: Box::new(r),
                offset: 0
            }),
            (unary, inner.clone()).prop_map(|(func, a)| Node::Call { func, args: vec![a], offset: 0 }),
            (variadic, prop::collection::vec(inner.clone(), 1..4)).prop_map(|(func, args)| Node::Call {
                func,
                args,
                offset: 0
            }),
            (prop::collection::vec((cond(boxed), inner.clone()), 1..3), prop::option::of(inner))
                .prop_map(|(branches, o)| Node::Piecewise { branches, otherwise: o.map(Box::new), offset: 0 }),
        ]
    })
}

fn same_value(a: &Result<f64, peaks_expr::EvalError>, b: &Result<f64, peaks_expr::EvalError>) -> bool {
    match (a, b) {
        (Ok(x), Ok(y)) => x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan()),
        (Err(_), Err(_)) => true,
        _ => false,
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 512, ..ProptestConfig::default() })]

    #[test]
    fn print_parse_is_identity(root in tree(), x in prop::array::uniform3(-5.0..5.0f64)) {
        let e = Expression::from_node(root, VARS.iter().map(|s| s.to_string()).collect());
        let printed = e.to_string();
        let back = parse(&printed, &VARS).unwrap_or_else(|err| panic!("{printed}: {err}"));
        prop_assert!(back.root().same_shape(e.root()), "{printed}");
        prop_assert_eq!(back.to_string(), printed);
        prop_assert!(same_value(&e.eval(&x), &back.eval(&x)));
    }
}

// Independent oracles are the same formulas written directly in Rust.
proptest! {
    #[test]
    fn objective_matches_direct(x1 in -10.0..10.0f64, y in -10.0..10.0f64, p in 1.5..50.0f64) {
        let e = parse("y^2 - x1^2 + p*x1", &["x1", "y", "p"]).unwrap();
        let direct = y * y - x1 * x1 + p * x1;
        let got = e.eval(&[x1, y, p]).unwrap();
        prop_assert!((got - direct).abs() <= 4.0 * f64::EPSILON * direct.abs().max(1.0));
    }

    #[test]
    fn klgen_matches_direct(s in 0.0..1e4f64, t in 0.0..200.0f64) {
        let e = parse("min(s, 900*exp(t*ln(2/3)/10))", &["s", "t"]).unwrap();
        let direct = s.min(900.0 * (t * (2.0f64 / 3.0).ln() / 10.0).exp());
        let got = e.eval(&[s, t]).unwrap();
        prop_assert!((got - direct).abs() <= 8.0 * f64::EPSILON * direct.abs().max(1.0));
    }

    #[test]
    fn piecewise_line_guard(x2 in 1e-3..10.0f64, off in -1.0..1.0f64) {
        let e = parse("piecewise(abs(x1 - 2*x2) <= 1e-12: 2*0.01/(x1*x2), else: 0)", &["x1", "x2"]).unwrap();
        prop_assert_eq!(e.eval(&[2.0 * x2, x2]).unwrap(), 0.02 / (2.0 * x2 * x2));
        if off.abs() > 1e-9 {
            prop_assert_eq!(e.eval(&[2.0 * x2 + off, x2]).unwrap(), 0.0);
        }
    }

    #[test]
    fn constant_ignores_bindings(a in -1e3..1e3f64, b in -1e3..1e3f64) {
        let e = parse("3*exp(0) - 2^3^0 + floor(2.5)", &["a", "b"]).unwrap();
        prop_assert_eq!(e.eval(&[a, b]).unwrap(), 3.0);
    }
}
