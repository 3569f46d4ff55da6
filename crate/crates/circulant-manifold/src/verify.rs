//! Cross-validation driver: runs every closed-form-versus-oracle check
//! over sampled points of a metric and reports per-check maxima.
//!
//! A [`Defect`] can be injected to corrupt one closed-form value before
//! comparison; the test suite uses this to confirm that each check actually
//! has the power to reject a wrong coefficient.

use serde::{Deserialize, Serialize};

use crate::classifier::{sample_admitted, SamplePlan};
use crate::connection::{christoffel_closed, christoffel_generic, covariant_derivative_02};
use crate::error::Result;
use crate::fundamental::{f_closed, f_oracle, nijenhuis_p, theta_closed, theta_oracle};
use crate::manifold::{inverse_closed, metric_at, MetricSpec};
use crate::tensor::{Matrix4, Tensor3};

/// Which closed-form object to corrupt (adds 1e-3 to one component).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Defect {
    FClosed,
    ChristoffelClosed,
    InverseClosed,
    ThetaClosed,
}

impl Defect {
    pub fn parse(name: &str) -> Option<Defect> {
        match name {
            "f-closed" => Some(Defect::FClosed),
            "christoffel-closed" => Some(Defect::ChristoffelClosed),
            "inverse-closed" => Some(Defect::InverseClosed),
            "theta-closed" => Some(Defect::ThetaClosed),
            _ => None,
        }
    }
}

const DEFECT_SIZE: f64 = 1e-3;

/// One cross-check outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyCheck {
    pub name: String,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// All checks for one metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricVerification {
    pub metric: String,
    pub samples_used: usize,
    pub checks: Vec<VerifyCheck>,
    pub all_passed: bool,
}

/// Runs the full cross-check battery for one metric. `tolerance` is the
/// base tolerance for closed-versus-oracle agreement; the identity-level
/// checks (inverse, ∇g, symmetries) run one decade tighter and the
/// Nijenhuis check at 1e-12, matching their exactness.
pub fn verify_metric(
    label: &str,
    spec: &MetricSpec,
    plan: &SamplePlan,
    tolerance: f64,
    defect: Option<Defect>,
) -> Result<MetricVerification> {
    let bundles = sample_admitted(spec, plan)?;
    let tight = tolerance * 0.1;

    let mut christoffel_dev = 0.0f64;
    let mut f_dev = 0.0f64;
    let mut theta_dev = 0.0f64;
    let mut inverse_dev = 0.0f64;
    let mut inverse_identity_dev = 0.0f64;
    let mut nabla_g_dev = 0.0f64;
    let mut sym_yz_dev = 0.0f64;
    let mut sym_p_dev = 0.0f64;
    let mut cyclic_dev = 0.0f64;
    let nijenhuis_dev = nijenhuis_p().max_abs();

    for b in &bundles {
        let generic = christoffel_generic(b)?;
        let mut closed = christoffel_closed(b).as_tensor().to_owned();
        if defect == Some(Defect::ChristoffelClosed) {
            bump_tensor(&mut closed);
        }
        christoffel_dev = christoffel_dev.max(closed.max_rel_dev(generic.as_tensor()));

        let oracle_f = f_oracle(b)?;
        let mut closed_f = f_closed(b).as_tensor().to_owned();
        if defect == Some(Defect::FClosed) {
            bump_tensor(&mut closed_f);
        }
        f_dev = f_dev.max(closed_f.max_rel_dev(oracle_f.as_tensor()));

        let g = metric_at(b);
        let ginv_numeric = g.inverse_numeric()?;
        let (mut inv_closed, _) = inverse_closed(b)?;
        if defect == Some(Defect::InverseClosed) {
            inv_closed = bump_matrix(&inv_closed);
        }
        inverse_dev = inverse_dev.max(inv_closed.max_rel_dev(&ginv_numeric));
        inverse_identity_dev =
            inverse_identity_dev.max(g.mul(&inv_closed).max_rel_dev(&Matrix4::identity()));

        let mut closed_theta = theta_closed(b).components();
        if defect == Some(Defect::ThetaClosed) {
            closed_theta[0] += DEFECT_SIZE;
        }
        let oracle_theta = theta_oracle(&oracle_f, &ginv_numeric);
        theta_dev = theta_dev.max(
            crate::fundamental::ThetaForm::new(closed_theta).max_rel_dev(&oracle_theta),
        );

        let dg = crate::connection::metric_partials(b);
        let scale = 1.0 + dg.max_abs();
        let nabla_g = covariant_derivative_02(&g, &dg, &generic);
        nabla_g_dev = nabla_g_dev.max(nabla_g.max_abs() / scale);

        sym_yz_dev = sym_yz_dev.max(oracle_f.symmetry_violation_yz());
        sym_p_dev = sym_p_dev.max(oracle_f.symmetry_violation_p_anti());
        cyclic_dev = cyclic_dev.max(oracle_f.cyclic_violation());
    }

    let checks = vec![
        check("christoffel_closed_vs_generic", christoffel_dev, tolerance),
        check("f_closed_vs_oracle", f_dev, tolerance),
        check("theta_closed_vs_contraction", theta_dev, tolerance),
        check("inverse_closed_vs_elimination", inverse_dev, tight),
        check("metric_times_inverse_identity", inverse_identity_dev, tight),
        check("nabla_g_zero", nabla_g_dev, tight),
        check("f_symmetry_yz", sym_yz_dev, tight),
        check("f_symmetry_p_anti", sym_p_dev, tight),
        check("cyclic_identity_c3", cyclic_dev, tolerance),
        check("nijenhuis_of_p_zero", nijenhuis_dev, 1e-12),
    ];
    let all_passed = checks.iter().all(|c| c.pass);
    Ok(MetricVerification {
        metric: label.to_string(),
        samples_used: bundles.len(),
        checks,
        all_passed,
    })
}

fn check(name: &str, max_deviation: f64, tolerance: f64) -> VerifyCheck {
    VerifyCheck {
        name: name.to_string(),
        max_deviation,
        tolerance,
        pass: max_deviation <= tolerance,
    }
}

fn bump_tensor(t: &mut Tensor3) {
    t.set(1, 1, 1, t.get(1, 1, 1) + DEFECT_SIZE);
}

fn bump_matrix(m: &Matrix4) -> Matrix4 {
    Matrix4::from_fn(|i, j| {
        if (i, j) == (1, 1) {
            m.get(1, 1) + DEFECT_SIZE
        } else {
            m.get(i, j)
        }
    })
}
