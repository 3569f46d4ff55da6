//! Property-based tests.
//!
//! The closed-form identities (Christoffel families, F components, Lee form,
//! inverse coefficients) are pointwise algebraic identities in the fifteen
//! scalars (A, B, C and their partials), constrained only by the positivity
//! chain. Random jet bundles therefore exercise them far more broadly than
//! corpus sampling, and any wrong coefficient in a closed form shows up
//! immediately.

use proptest::prelude::*;

use circulant_manifold::classifier::{identity_residuals, TensorFrame};
use circulant_manifold::connection::{christoffel_closed, christoffel_generic};
use circulant_manifold::expr::{Constants, Expr, Func, ScalarField};
use circulant_manifold::fundamental::{f_closed, theta_closed, theta_oracle};
use circulant_manifold::jet::{Jet, Point4};
use circulant_manifold::manifold::{inverse_closed, metric_at, PointJetBundle};

// ---------------------------------------------------------------------------
// Expression round-trip through the canonical printer
// ---------------------------------------------------------------------------

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (0u32..1000u32, 0u32..100u32).prop_map(|(a, b)| Expr::Num(a as f64 + b as f64 / 100.0)),
        (1usize..=4usize).prop_map(Expr::Var),
        prop_oneof![Just("a"), Just("b"), Just("c"), Just("kappa")]
            .prop_map(|s| Expr::Const(s.to_string())),
    ]
}

fn arb_expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(5, 64, 4, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone())
                .prop_map(|(l, r)| Expr::Add(Box::new(l), Box::new(r))),
            (inner.clone(), inner.clone())
                .prop_map(|(l, r)| Expr::Sub(Box::new(l), Box::new(r))),
            (inner.clone(), inner.clone())
                .prop_map(|(l, r)| Expr::Mul(Box::new(l), Box::new(r))),
            (inner.clone(), inner.clone())
                .prop_map(|(l, r)| Expr::Div(Box::new(l), Box::new(r))),
            (inner.clone(), 0u32..5u32)
                .prop_map(|(b, n)| Expr::Pow(Box::new(b), Box::new(Expr::Num(n as f64)))),
            inner.clone().prop_map(|c| Expr::Neg(Box::new(c))),
            (
                prop_oneof![
                    Just(Func::Exp),
                    Just(Func::Ln),
                    Just(Func::Sinh),
                    Just(Func::Cosh),
                    Just(Func::Sqrt)
                ],
                inner
            )
                .prop_map(|(f, c)| Expr::Call(f, Box::new(c))),
        ]
    })
}

proptest! {
    #[test]
    fn printer_roundtrips_structurally(ast in arb_expr()) {
        let field = ScalarField::from_ast(ast.clone()).unwrap();
        let printed = field.to_string();
        let reparsed = ScalarField::parse(&printed)
            .unwrap_or_else(|e| panic!("`{printed}` failed to parse: {e}"));
        prop_assert_eq!(reparsed.ast(), &ast, "printed form `{}`", printed);
    }
}

// ---------------------------------------------------------------------------
// Closed forms versus oracles on random ordered jet bundles
// ---------------------------------------------------------------------------

prop_compose! {
    fn arb_bundle()(
        b in 0.2f64..2.0,
        gap_cb in 0.2f64..2.0,
        gap_ac in 0.2f64..2.0,
        da in prop::array::uniform4(-3.0f64..3.0),
        db in prop::array::uniform4(-3.0f64..3.0),
        dc in prop::array::uniform4(-3.0f64..3.0),
    ) -> PointJetBundle {
        let c = b + gap_cb;
        let a = c + gap_ac;
        PointJetBundle::from_jets(
            Point4::new([1.0, 1.0, 1.0, 1.0]).unwrap(),
            Jet { value: a, partials: da },
            Jet { value: b, partials: db },
            Jet { value: c, partials: dc },
        )
        .expect("ordered chain holds by construction")
    }
}

proptest! {
    #[test]
    fn inverse_data_positive_and_consistent(bundle in arb_bundle()) {
        let (closed, data) = inverse_closed(&bundle).unwrap();
        prop_assert!(data.d > 0.0);
        let g = metric_at(&bundle);
        let numeric = g.inverse_numeric().unwrap();
        prop_assert!(closed.max_rel_dev(&numeric) < 1e-10);
    }

    #[test]
    fn christoffel_closed_equals_generic_for_any_jets(bundle in arb_bundle()) {
        let closed = christoffel_closed(&bundle);
        let generic = christoffel_generic(&bundle).unwrap();
        prop_assert!(closed.max_rel_dev(&generic) < 1e-9);
    }

    #[test]
    fn f_closed_equals_oracle_for_any_jets(bundle in arb_bundle()) {
        let frame = TensorFrame::at(&bundle).unwrap();
        let closed = f_closed(&bundle);
        prop_assert!(closed.max_rel_dev(&frame.f) < 1e-9);
        // symmetries are exact on the closed form, tight on the oracle
        prop_assert_eq!(closed.symmetry_violation_yz(), 0.0);
        prop_assert_eq!(closed.symmetry_violation_p_anti(), 0.0);
        prop_assert!(frame.f.symmetry_violation_yz() < 1e-10);
        prop_assert!(frame.f.symmetry_violation_p_anti() < 1e-10);
        // the cyclic identity is unconditional for this construction
        prop_assert!(frame.f.cyclic_violation() < 1e-9);
    }

    #[test]
    fn theta_closed_equals_contraction_for_any_jets(bundle in arb_bundle()) {
        let frame = TensorFrame::at(&bundle).unwrap();
        let closed = theta_closed(&bundle);
        let oracle = theta_oracle(&frame.f, &frame.g_inv_numeric);
        prop_assert!(closed.max_rel_dev(&oracle) < 1e-9);
    }

    #[test]
    fn c3_identity_is_unconditional(bundle in arb_bundle()) {
        let frame = TensorFrame::at(&bundle).unwrap();
        let residuals = identity_residuals(&frame);
        let c3 = residuals[&circulant_manifold::classifier::IdentityId::C3];
        prop_assert!(c3.normalized < 1e-9, "c3 residual {}", c3.normalized);
    }
}

// ---------------------------------------------------------------------------
// Evaluation consistency
// ---------------------------------------------------------------------------

proptest! {
    #[test]
    fn eval_matches_jet_value(
        ast in arb_expr(),
        coords in prop::array::uniform4(0.5f64..2.5),
    ) {
        let field = ScalarField::from_ast(ast).unwrap();
        let mut consts = Constants::new();
        for name in ["a", "b", "c", "kappa"] {
            consts.insert(name.to_string(), 1.25);
        }
        let p = Point4::new(coords).unwrap();
        // domains may legitimately fail (ln of a negative subexpression);
        // the property only constrains agreeing successes
        match (field.eval(&p, &consts), field.eval_jet(&p, &consts)) {
            (Ok(v), Ok(jet)) => prop_assert!(
                (v - jet.value).abs() <= 1e-12 * (1.0 + v.abs()),
                "value {} vs jet {}", v, jet.value
            ),
            (Err(_), _) | (_, Err(_)) => {}
        }
    }
}
