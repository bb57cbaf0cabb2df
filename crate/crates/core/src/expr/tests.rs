use std::collections::BTreeMap;

use proptest::prelude::*;

use super::*;
use crate::jet::{seed_variables, JetConfig};

fn eval_at(src: &str, x: &[f64], y: &[f64], params: &BTreeMap<String, Vec<f64>>) -> Result<f64, ExprError> {
    let e = parse_str(src)?;
    eval(&e, &Env { x, y, params })
}

fn no_params() -> BTreeMap<String, Vec<f64>> {
    BTreeMap::new()
}

fn funk_params(a: &[f64]) -> BTreeMap<String, Vec<f64>> {
    BTreeMap::from([("a".to_string(), a.to_vec())])
}

const FUNK: &str = "(sqrt(abs2(y) - (abs2(x)*abs2(y) - dot(x,y)^2)) + dot(x,y) + dot(a,y)) / (1 - abs2(x))";

#[test]
fn parses_sum_of_squares() {
    let e = parse_str("y1^2+y2^2").unwrap();
    let sq = |i| Expr::Pow(Box::new(Expr::Y(i)), Box::new(Expr::Num(2.0)));
    assert_eq!(e, Expr::Bin(BinOp::Add, Box::new(sq(1)), Box::new(sq(2))));
}

#[test]
fn power_is_right_associative() {
    let v = eval_at("2^3^2", &[0.0], &[1.0], &no_params()).unwrap();
    assert_eq!(v, 512.0);
}

#[test]
fn power_binds_tighter_than_unary_minus() {
    assert_eq!(eval_at("-2^2", &[0.0], &[1.0], &no_params()).unwrap(), -4.0);
    assert_eq!(eval_at("2^-1", &[0.0], &[1.0], &no_params()).unwrap(), 0.5);
    assert_eq!(eval_at("1 - 2 - 3", &[0.0], &[1.0], &no_params()).unwrap(), -4.0);
    assert_eq!(eval_at("8 / 2 / 2", &[0.0], &[1.0], &no_params()).unwrap(), 2.0);
}

#[test]
fn empty_call_is_arity_error() {
    assert!(matches!(
        parse_str("sqrt()"),
        Err(ExprError::Arity {
            expected: 1,
            found: 0,
            ..
        })
    ));
    assert!(matches!(parse_str("dot(x)"), Err(ExprError::Arity { found: 1, .. })));
    assert!(matches!(parse_str("exp(y1, y2)"), Err(ExprError::Arity { found: 2, .. })));
}

#[test]
fn parse_errors_carry_expected_sets() {
    match parse_str("y1 + ").unwrap_err() {
        ExprError::Parse {
            position, expected, ..
        } => {
            assert_eq!(position, 4);
            assert!(expected.contains(&"number".to_string()));
        }
        e => panic!("unexpected error {e:?}"),
    }
    match parse_str("(y1 + y2").unwrap_err() {
        ExprError::Parse { expected, .. } => assert_eq!(expected, vec![")".to_string()]),
        e => panic!("unexpected error {e:?}"),
    }
    assert!(matches!(parse_str("y1 y2"), Err(ExprError::Parse { position: 3, .. })));
    assert!(matches!(parse_str("foo(y1)"), Err(ExprError::Parse { position: 0, .. })));
    assert!(matches!(parse_str("y1^y2"), Err(ExprError::Parse { position: 3, .. })));
    assert!(matches!(parse_str("x + 1"), Err(ExprError::Parse { .. })));
    assert!(matches!(parse_str("y0"), Err(ExprError::Parse { .. })));
    assert!(matches!(parse_str("dot(y1, y)"), Err(ExprError::Parse { position: 4, .. })));
}

#[test]
fn error_positions_lie_inside_source() {
    for src in ["", "(", "sqrt(", "y1 +* y2", "dot(x,", "1 2", ")"] {
        let err = parse_str(src).unwrap_err();
        let pos = err.position().unwrap();
        assert!(pos <= src.len(), "{src:?} -> {err:?}");
    }
}

#[test]
fn euclidean_norm_value() {
    let v = eval_at("sqrt(y1^2+y2^2)", &[0.0, 0.0], &[3.0, 4.0], &no_params()).unwrap();
    assert_eq!(v, 5.0);
}

#[test]
fn funk_expression_at_origin_is_euclidean() {
    let v = eval_at(FUNK, &[0.0, 0.0], &[1.0, 0.0], &funk_params(&[0.0, 0.0])).unwrap();
    assert!((v - 1.0).abs() < 1e-15);
    let v = eval_at(FUNK, &[0.5, 0.0], &[1.0, 0.0], &funk_params(&[0.0, 0.0])).unwrap();
    assert!((v - 2.0).abs() < 1e-15);
}

#[test]
fn unbound_names() {
    assert_eq!(
        eval_at("y3", &[0.0, 0.0], &[1.0, 0.0], &no_params()),
        Err(ExprError::UnboundVariable("y3".into()))
    );
    assert_eq!(
        eval_at("dot(b, y)", &[0.0, 0.0], &[1.0, 0.0], &no_params()),
        Err(ExprError::UnboundVariable("b".into()))
    );
    assert!(matches!(
        eval_at("sqrt(y1 - 2)", &[0.0], &[1.0], &no_params()),
        Err(ExprError::Domain(_))
    ));
}

#[test]
fn scalar_and_vector_parameters() {
    let params = BTreeMap::from([("k".to_string(), vec![3.0]), ("b".to_string(), vec![0.5, -1.0])]);
    let v = eval_at("k*y1 + b2*y2 + dot(b, y)", &[0.0, 0.0], &[1.0, 2.0], &params).unwrap();
    assert_eq!(v, 3.0 - 2.0 + (0.5 - 2.0));
    let e = parse_str("k*y1 + dot(b, y)").unwrap();
    assert_eq!(e.params(), BTreeMap::from([("b".to_string(), true), ("k".to_string(), false)]));
}

const CORPUS: &[&str] = &[
    "sqrt(y1^2+y2^2)",
    "sqrt(abs2(y)) + 0.3*y1",
    "(y1^4 + y2^4)^0.25",
    "sqrt(exp(x1)*y1^2 + y2^2) + 0.1*sin(x2)*y2",
    "sqrt((1 + x1^2)*y1^2 + 2*0.1*y1*y2 + (1 + cos(x2)^2)*y2^2)",
    "(abs2(y)^2 + 0.5*y1^2*y2^2)^(1/4)",
    "sqrt(abs2(y))*exp(0.2*dot(x,y)/sqrt(abs2(y)))",
    "log(1 + abs2(x)) + sqrt(abs2(y))",
    "-y1^2/(2+x1) + 3*y2^2",
    FUNK,
];

#[test]
fn jet_value_matches_scalar_evaluation() {
    let params = funk_params(&[0.1, -0.2]);
    let x = [0.2, -0.3];
    let y = [0.7, 1.1];
    let jets = seed_variables(&x, &y, JetConfig::new(2, 4)).unwrap();
    for src in CORPUS {
        let e = parse_str(src).unwrap();
        let s = eval(&e, &Env { x: &x, y: &y, params: &params }).unwrap();
        let j = eval(
            &e,
            &Env {
                x: &jets[..2],
                y: &jets[2..],
                params: &params,
            },
        )
        .unwrap();
        assert!((j.value() - s).abs() <= 1e-14 * s.abs().max(1.0), "{src}");
    }
}

#[test]
fn corpus_metrics_are_homogeneous() {
    let params = funk_params(&[0.1, -0.2]);
    let x = [0.2, -0.3];
    let y = [0.7, 1.1];
    for src in CORPUS.iter().filter(|s| !s.starts_with('-') && !s.starts_with("log")) {
        let e = parse_str(src).unwrap();
        let f = |y: &[f64]| eval(&e, &Env { x: &x, y, params: &params }).unwrap();
        let base = f(&y);
        for lam in [0.5, 2.0, 3.0] {
            let scaled: Vec<f64> = y.iter().map(|v| v * lam).collect();
            assert!((f(&scaled) - lam * base).abs() <= 1e-10 * base.abs(), "{src}");
        }
    }
}

#[test]
fn printer_round_trips_corpus() {
    for src in CORPUS {
        let e = parse_str(src).unwrap();
        let printed = e.to_string();
        assert_eq!(parse_str(&printed).unwrap(), e, "{printed}");
    }
}

fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (prop::num::f64::POSITIVE | prop::num::f64::ZERO).prop_map(Expr::Num),
        (1usize..4).prop_map(Expr::X),
        (1usize..4).prop_map(Expr::Y),
        prop_oneof![Just("a"), Just("k"), Just("beta")].prop_map(|n| Expr::Param {
            name: n.to_string(),
            index: None
        }),
        (1usize..4).prop_map(|i| Expr::Param {
            name: "b".into(),
            index: Some(i)
        }),
    ];
    let vec_ref = prop_oneof![Just(VecRef::X), Just(VecRef::Y), Just(VecRef::Param("a".into()))];
    leaf.prop_recursive(5, 48, 3, move |inner| {
        prop_oneof![
            inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
            (
                prop_oneof![Just(BinOp::Add), Just(BinOp::Sub), Just(BinOp::Mul), Just(BinOp::Div)],
                inner.clone(),
                inner.clone()
            )
                .prop_map(|(op, a, b)| Expr::Bin(op, Box::new(a), Box::new(b))),
            (inner.clone(), 0.0f64..5.0).prop_map(|(a, p)| Expr::Pow(Box::new(a), Box::new(Expr::Num(p)))),
            (
                prop_oneof![
                    Just(Func::Sqrt),
                    Just(Func::Exp),
                    Just(Func::Log),
                    Just(Func::Sin),
                    Just(Func::Cos)
                ],
                inner.clone()
            )
                .prop_map(|(f, a)| Expr::Call(f, vec![a])),
            vec_ref.clone().prop_map(|v| Expr::VecCall(Func::Abs2, vec![v])),
            (vec_ref.clone(), vec_ref.clone()).prop_map(|(u, v)| Expr::VecCall(Func::Dot, vec![u, v])),
        ]
    })
}

proptest! {
    #[test]
    fn printed_ast_reparses_identically(e in arb_expr()) {
        let printed = e.to_string();
        let back = parse_str(&printed).unwrap();
        prop_assert_eq!(back, e);
    }

    #[test]
    fn token_positions_increase(src in "[a-z0-9+*/^(), .-]{0,40}") {
        if let Ok(toks) = tokenize(&src) {
            for w in toks.windows(2) {
                prop_assert!(w[0].position < w[1].position);
            }
        }
    }
}
