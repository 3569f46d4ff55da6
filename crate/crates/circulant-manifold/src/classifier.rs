//! Class membership diagnostics.
//!
//! Membership in each class of the trace-free almost product classification
//! is characterized by a small system of equalities between the coefficient
//! partials (evaluated from jets), and equivalently by an identity on the
//! tensors F, θ, g, g̃. Both routes are evaluated at sampled domain points;
//! the derivative conditions drive the verdicts and the tensor identities
//! serve as an independent cross-check.
//!
//! Verdicts use a two-threshold scheme: a residual (scaled against the
//! magnitude of its operands) at or below the hold tolerance supports
//! membership, one at or above the reject margin refutes it, and anything
//! in between is reported as indeterminate rather than silently coerced.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::connection::{
    christoffel_closed, christoffel_generic, covariant_derivative_02, covariant_derivative_11,
    metric_partials,
};
use crate::error::{Error, Result};
use crate::fundamental::{
    f_closed, f_oracle, nijenhuis_p, theta_closed, theta_oracle, theta_tilde, FTensor, ThetaForm,
};
use crate::jet::Point4;
use crate::manifold::{
    associated_metric_at, inverse_closed, metric_at, p_matrix, q_matrix, shift2, MetricSpec,
    PointJetBundle,
};
use crate::tensor::{rel_dev, Matrix4, DIM};

/// Class identifiers. `W1plusW2` is the integrable (Riemannian product)
/// class; `NablaQ0` is the stronger condition that the circulant structure
/// Q itself is parallel.
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, Hash,
)]
pub enum ClassId {
    #[serde(rename = "W0")]
    W0,
    #[serde(rename = "W3bar")]
    W3bar,
    #[serde(rename = "W6bar")]
    W6bar,
    #[serde(rename = "W1")]
    W1,
    #[serde(rename = "W2")]
    W2,
    #[serde(rename = "W1plusW2")]
    W1plusW2,
    #[serde(rename = "nablaQ0")]
    NablaQ0,
}

impl ClassId {
    pub const ALL: [ClassId; 7] = [
        ClassId::W0,
        ClassId::W3bar,
        ClassId::W6bar,
        ClassId::W1,
        ClassId::W2,
        ClassId::W1plusW2,
        ClassId::NablaQ0,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClassId::W0 => "W0",
            ClassId::W3bar => "W3bar",
            ClassId::W6bar => "W6bar",
            ClassId::W1 => "W1",
            ClassId::W2 => "W2",
            ClassId::W1plusW2 => "W1plusW2",
            ClassId::NablaQ0 => "nablaQ0",
        }
    }

    /// Partial order of the class lattice: `a.is_subclass_of(b)` iff every
    /// manifold in a is in b. `NablaQ0` sits below `W0`.
    pub fn is_subclass_of(self, other: ClassId) -> bool {
        use ClassId::*;
        if self == other {
            return true;
        }
        match (self, other) {
            (NablaQ0, W0) => true,
            (NablaQ0 | W0, _) => other != NablaQ0 && other != W0,
            (W3bar | W6bar, W1 | W1plusW2) => true,
            (W1 | W2, W1plusW2) => true,
            _ => false,
        }
    }

    /// Greatest lower bound in the lattice. Incomparable pairs meet at W0
    /// (the intersection of all basic classes).
    pub fn meet(self, other: ClassId) -> ClassId {
        if self.is_subclass_of(other) {
            self
        } else if other.is_subclass_of(self) {
            other
        } else {
            ClassId::W0
        }
    }
}

/// Scaled residual of a system of equalities: the worst violation together
/// with the raw (unscaled) one.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub raw: f64,
    pub normalized: f64,
}

impl Residual {
    fn absorb(&mut self, other: Residual) {
        self.raw = self.raw.max(other.raw);
        self.normalized = self.normalized.max(other.normalized);
    }

    /// Residual of a single equality lhs = rhs.
    fn of(lhs: f64, rhs: f64) -> Residual {
        Residual {
            raw: (lhs - rhs).abs(),
            normalized: rel_dev(lhs, rhs),
        }
    }

    fn over(pairs: impl IntoIterator<Item = (f64, f64)>) -> Residual {
        let mut r = Residual::default();
        for (lhs, rhs) in pairs {
            r.absorb(Residual::of(lhs, rhs));
        }
        r
    }
}

/// Hold tolerance and reject margin for the two-threshold verdict scheme.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub hold: f64,
    pub reject: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            hold: 1e-9,
            reject: 1e-6,
        }
    }
}

impl Tolerances {
    /// Derives the margin from a hold tolerance, keeping the default ratio.
    pub fn from_hold(hold: f64) -> Self {
        Tolerances {
            hold,
            reject: hold * 1e3,
        }
    }

    pub fn verdict(&self, normalized_residual: f64) -> Verdict {
        if normalized_residual <= self.hold {
            Verdict::Holds
        } else if normalized_residual >= self.reject {
            Verdict::Fails
        } else {
            Verdict::Indeterminate
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Fails,
    Indeterminate,
}

/// Outcome of one class predicate over the whole sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredicateOutcome {
    pub residual: f64,
    pub normalized_residual: f64,
    pub verdict: Verdict,
}

// ---------------------------------------------------------------------------
// Derivative-condition predicates (pointwise residuals)
// ---------------------------------------------------------------------------

/// Class W0 (parallel P): A₃=C₁, A₁=C₃, B₃=B₁, B₄=B₂, A₂=C₄, A₄=C₂.
pub fn predicate_w0(b: &PointJetBundle) -> Residual {
    let (a, bb, c) = (b.a.partials, b.b.partials, b.c.partials);
    Residual::over([
        (a[2], c[0]),
        (a[0], c[2]),
        (bb[2], bb[0]),
        (bb[3], bb[1]),
        (a[1], c[3]),
        (a[3], c[1]),
    ])
}

/// Parallel Q: the six W0 equalities plus 2B₁ = C₄+C₂ and 2B₂ = C₁+C₃.
pub fn predicate_nabla_q_zero(b: &PointJetBundle) -> Residual {
    let (bb, c) = (b.b.partials, b.c.partials);
    let mut r = predicate_w0(b);
    r.absorb(Residual::over([
        (2.0 * bb[0], c[3] + c[1]),
        (2.0 * bb[1], c[0] + c[2]),
    ]));
    r
}

/// Class W1 (conformally parallel):
/// (A+C)(B₄−B₂) = B(A₄−C₂+C₄−A₂) and (A+C)(B₃−B₁) = B(A₃−C₁+C₃−A₁).
pub fn predicate_w1(b: &PointJetBundle) -> Residual {
    let (a, bb, c) = (b.a.partials, b.b.partials, b.c.partials);
    let (av, bv, cv) = (b.a.value, b.b.value, b.c.value);
    Residual::over([
        (
            (av + cv) * (bb[3] - bb[1]),
            bv * (a[3] - c[1] + c[3] - a[1]),
        ),
        (
            (av + cv) * (bb[2] - bb[0]),
            bv * (a[2] - c[0] + c[2] - a[0]),
        ),
    ])
}

/// Class W̄₃: A₄−C₂ = C₄−A₂, (A+C)(B₄−B₂) = 2B(A₄−C₂), and the (3,1)
/// analogues.
pub fn predicate_w3bar(b: &PointJetBundle) -> Residual {
    let (a, bb, c) = (b.a.partials, b.b.partials, b.c.partials);
    let (av, bv, cv) = (b.a.value, b.b.value, b.c.value);
    Residual::over([
        (a[3] - c[1], c[3] - a[1]),
        ((av + cv) * (bb[3] - bb[1]), 2.0 * bv * (a[3] - c[1])),
        (a[2] - c[0], c[2] - a[0]),
        ((av + cv) * (bb[2] - bb[0]), 2.0 * bv * (a[2] - c[0])),
    ])
}

/// Class W̄₆: A₄−C₂ = A₂−C₄, B₄ = B₂, A₃−C₁ = A₁−C₃, B₃ = B₁.
pub fn predicate_w6bar(b: &PointJetBundle) -> Residual {
    let (a, bb, c) = (b.a.partials, b.b.partials, b.c.partials);
    Residual::over([
        (a[3] - c[1], a[1] - c[3]),
        (bb[3], bb[1]),
        (a[2] - c[0], a[0] - c[2]),
        (bb[2], bb[0]),
    ])
}

/// Class W2 (trace-free): (A+C)(C₃−A₁) = 2B(B₃−B₁), C₃−A₁ = A₃−C₁, and
/// the (4,2) analogues.
pub fn predicate_w2(b: &PointJetBundle) -> Residual {
    let (a, bb, c) = (b.a.partials, b.b.partials, b.c.partials);
    let (av, bv, cv) = (b.a.value, b.b.value, b.c.value);
    Residual::over([
        ((av + cv) * (c[2] - a[0]), 2.0 * bv * (bb[2] - bb[0])),
        (c[2] - a[0], a[2] - c[0]),
        ((av + cv) * (c[3] - a[1]), 2.0 * bv * (bb[3] - bb[1])),
        (c[3] - a[1], a[3] - c[1]),
    ])
}

// ---------------------------------------------------------------------------
// Tensor-identity residuals
// ---------------------------------------------------------------------------

/// The defining tensor identities, evaluated on coordinate basis vectors
/// (multilinearity makes basis evaluation sufficient).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, Hash)]
pub enum IdentityId {
    /// F = 0 (class W0).
    #[serde(rename = "c0")]
    C0,
    /// F_kij = ¼(g_kj θ_i + g_ki θ_j − g̃_kj θ̃_i − g̃_ki θ̃_j) (class W1).
    #[serde(rename = "c1")]
    C1,
    /// Cyclic identity plus θ = 0 (class W2).
    #[serde(rename = "c2")]
    C2,
    /// Cyclic identity F(x,y,Pz) + F(y,z,Px) + F(z,x,Py) = 0 (class W1⊕W2).
    #[serde(rename = "c3")]
    C3,
    /// F_kij = ¼[(g_ki+g̃_ki)θ_j + (g_kj+g̃_kj)θ_i], θ̃ = −θ (class W̄₃).
    #[serde(rename = "usl_w3")]
    UslW3,
    /// F_kij = ¼[(g_ki−g̃_ki)θ_j + (g_kj−g̃_kj)θ_i], θ̃ = θ (class W̄₆).
    #[serde(rename = "usl_w6")]
    UslW6,
}

impl IdentityId {
    pub const ALL: [IdentityId; 6] = [
        IdentityId::C0,
        IdentityId::C1,
        IdentityId::C2,
        IdentityId::C3,
        IdentityId::UslW3,
        IdentityId::UslW6,
    ];

    pub fn name(self) -> &'static str {
        match self {
            IdentityId::C0 => "c0",
            IdentityId::C1 => "c1",
            IdentityId::C2 => "c2",
            IdentityId::C3 => "c3",
            IdentityId::UslW3 => "usl_w3",
            IdentityId::UslW6 => "usl_w6",
        }
    }
}

/// All tensor objects needed by the identity checks at one point, computed
/// through the oracle (first-principles) routes only.
pub struct TensorFrame {
    pub g: Matrix4,
    pub g_tilde: Matrix4,
    pub g_inv_numeric: Matrix4,
    pub f: FTensor,
    pub theta: ThetaForm,
    pub theta_tilde: ThetaForm,
}

impl TensorFrame {
    pub fn at(b: &PointJetBundle) -> Result<TensorFrame> {
        let g = metric_at(b);
        let g_tilde = associated_metric_at(b);
        let g_inv_numeric = g.inverse_numeric()?;
        let f = f_oracle(b)?;
        let theta = theta_oracle(&f, &g_inv_numeric);
        let tt = theta_tilde(&theta);
        Ok(TensorFrame {
            g,
            g_tilde,
            g_inv_numeric,
            f,
            theta,
            theta_tilde: tt,
        })
    }
}

/// Evaluates every defining identity at one point and returns the residual
/// per identity.
pub fn identity_residuals(frame: &TensorFrame) -> BTreeMap<IdentityId, Residual> {
    let TensorFrame {
        g,
        g_tilde,
        f,
        theta,
        theta_tilde: tt,
        ..
    } = frame;

    let mut out = BTreeMap::new();

    // (c0): every component of F vanishes
    let mut c0 = Residual::default();
    for i in 1..=DIM {
        for j in 1..=DIM {
            for k in 1..=DIM {
                c0.absorb(Residual::of(f.get(i, j, k), 0.0));
            }
        }
    }
    out.insert(IdentityId::C0, c0);

    // (c1): F_kij = ¼(g_kj θ_i + g_ki θ_j − g̃_kj θ̃_i − g̃_ki θ̃_j)
    let mut c1 = Residual::default();
    for k in 1..=DIM {
        for i in 1..=DIM {
            for j in 1..=DIM {
                let rhs = 0.25
                    * (g.get(k, j) * theta.get(i) + g.get(k, i) * theta.get(j)
                        - g_tilde.get(k, j) * tt.get(i)
                        - g_tilde.get(k, i) * tt.get(j));
                c1.absorb(Residual::of(f.get(k, i, j), rhs));
            }
        }
    }
    out.insert(IdentityId::C1, c1);

    // cyclic sum, shared by (c2) and (c3)
    let mut cyclic = Residual::default();
    for i in 1..=DIM {
        for j in 1..=DIM {
            for k in 1..=DIM {
                let sum = f.get(i, j, shift2(k)) + f.get(j, k, shift2(i)) + f.get(k, i, shift2(j));
                let scale = f
                    .get(i, j, shift2(k))
                    .abs()
                    .max(f.get(j, k, shift2(i)).abs())
                    .max(f.get(k, i, shift2(j)).abs());
                cyclic.absorb(Residual {
                    raw: sum.abs(),
                    normalized: sum.abs() / (1.0 + scale),
                });
            }
        }
    }
    out.insert(IdentityId::C3, cyclic);

    // (c2): cyclic identity together with θ = 0
    let mut c2 = cyclic;
    for k in 1..=DIM {
        c2.absorb(Residual::of(theta.get(k), 0.0));
    }
    out.insert(IdentityId::C2, c2);

    // (usl-w3): F_kij = ¼[(g_ki+g̃_ki)θ_j + (g_kj+g̃_kj)θ_i] and θ̃ = −θ
    let mut w3 = Residual::default();
    for k in 1..=DIM {
        for i in 1..=DIM {
            for j in 1..=DIM {
                let rhs = 0.25
                    * ((g.get(k, i) + g_tilde.get(k, i)) * theta.get(j)
                        + (g.get(k, j) + g_tilde.get(k, j)) * theta.get(i));
                w3.absorb(Residual::of(f.get(k, i, j), rhs));
            }
        }
    }
    for k in 1..=DIM {
        w3.absorb(Residual::of(tt.get(k), -theta.get(k)));
    }
    out.insert(IdentityId::UslW3, w3);

    // (usl-w6): F_kij = ¼[(g_ki−g̃_ki)θ_j + (g_kj−g̃_kj)θ_i] and θ̃ = θ
    let mut w6 = Residual::default();
    for k in 1..=DIM {
        for i in 1..=DIM {
            for j in 1..=DIM {
                let rhs = 0.25
                    * ((g.get(k, i) - g_tilde.get(k, i)) * theta.get(j)
                        + (g.get(k, j) - g_tilde.get(k, j)) * theta.get(i));
                w6.absorb(Residual::of(f.get(k, i, j), rhs));
            }
        }
    }
    for k in 1..=DIM {
        w6.absorb(Residual::of(tt.get(k), theta.get(k)));
    }
    out.insert(IdentityId::UslW6, w6);

    out
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// Per-coordinate sampling intervals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SampleBox(pub [(f64, f64); 4]);

impl SampleBox {
    pub fn cube(lo: f64, hi: f64) -> Self {
        SampleBox([(lo, hi); 4])
    }
}

/// Deterministic sampling plan: N points, a seed, a box, and rejection
/// against the domain constraints (plus the positivity ordering).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub samples: usize,
    pub seed: u64,
    pub bbox: SampleBox,
}

impl SamplePlan {
    pub const DEFAULT_SAMPLES: usize = 100;
    pub const DEFAULT_SEED: u64 = 42;

    pub fn new(samples: usize, seed: u64, bbox: SampleBox) -> Self {
        SamplePlan { samples, seed, bbox }
    }
}

/// Draws up to `plan.samples` admitted points (in the domain, positivity
/// chain satisfied). Candidates where a domain expression cannot even be
/// evaluated count as rejected. Errors if no point is admitted within the
/// retry budget of 1000 attempts per requested sample.
pub fn sample_admitted(
    spec: &MetricSpec,
    plan: &SamplePlan,
) -> Result<Vec<PointJetBundle>> {
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let budget = plan.samples.max(1) * 1000;
    let mut bundles = Vec::with_capacity(plan.samples);
    let mut attempts = 0;
    while bundles.len() < plan.samples && attempts < budget {
        attempts += 1;
        let mut coords = [0.0; 4];
        for (slot, &(lo, hi)) in coords.iter_mut().zip(plan.bbox.0.iter()) {
            *slot = rng.random_range(lo..=hi);
        }
        let p = match Point4::new(coords) {
            Ok(p) => p,
            Err(_) => continue,
        };
        match spec.bundle_at(&p) {
            Ok(bundle) => bundles.push(bundle),
            Err(
                Error::OutsideDomain { .. } | Error::Ordering { .. } | Error::Domain(_),
            ) => continue,
            Err(other) => return Err(other),
        }
    }
    if bundles.is_empty() {
        return Err(Error::EmptySample { attempts });
    }
    Ok(bundles)
}

// ---------------------------------------------------------------------------
// Classification
// ---------------------------------------------------------------------------

/// Maximum deviations between the closed-form route and the oracle route
/// for each cross-validated object, over the whole sample.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CrossChecks {
    pub christoffel_closed_vs_generic: f64,
    pub f_closed_vs_oracle: f64,
    pub f_from_lowered_nabla_p: f64,
    pub theta_closed_vs_contraction: f64,
    pub inverse_closed_vs_elimination: f64,
    pub metric_times_inverse_identity: f64,
    pub nabla_g_max: f64,
    pub nijenhuis_p_max: f64,
    pub f_symmetry_yz: f64,
    pub f_symmetry_p_anti: f64,
    pub theta_max_abs: f64,
    pub nabla_q_max: f64,
}

/// One point's worth of theorem-equivalence data: the derivative-condition
/// residual paired with the corresponding tensor-identity residual.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EquivalencePair {
    pub class: ClassId,
    pub derivative: f64,
    pub identity: f64,
}

/// Full classification report for one metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub samples_requested: usize,
    pub samples_used: usize,
    pub seed: u64,
    pub bbox: SampleBox,
    pub hold_tolerance: f64,
    pub reject_margin: f64,
    pub classes: BTreeMap<ClassId, PredicateOutcome>,
    pub most_specific: Option<ClassId>,
    pub identity_checks: BTreeMap<IdentityId, PredicateOutcome>,
    pub cross_checks: CrossChecks,
}

impl ClassReport {
    pub fn class(&self, id: ClassId) -> &PredicateOutcome {
        &self.classes[&id]
    }

    pub fn has_indeterminate(&self) -> bool {
        self.classes
            .values()
            .chain(self.identity_checks.values())
            .any(|o| o.verdict == Verdict::Indeterminate)
    }
}

/// Evaluates every predicate, identity, and cross-check over the sampled
/// points and aggregates verdicts. A predicate holds only if it holds at
/// every point, fails if it is firmly violated at any point, and is
/// indeterminate otherwise. The most specific class is the lattice meet of
/// all held classes (NablaQ0 excluded: it refines W0 but concerns Q, and is
/// reported separately).
pub fn classify(spec: &MetricSpec, plan: &SamplePlan, tol: &Tolerances) -> Result<ClassReport> {
    let bundles = sample_admitted(spec, plan)?;
    let evaluation = evaluate_sample(&bundles)?;
    let mut classes = BTreeMap::new();
    for (id, residual) in evaluation.class_residuals {
        classes.insert(
            id,
            PredicateOutcome {
                residual: residual.raw,
                normalized_residual: residual.normalized,
                verdict: tol.verdict(residual.normalized),
            },
        );
    }
    let mut identity_checks = BTreeMap::new();
    for (id, residual) in evaluation.identity_residuals {
        identity_checks.insert(
            id,
            PredicateOutcome {
                residual: residual.raw,
                normalized_residual: residual.normalized,
                verdict: tol.verdict(residual.normalized),
            },
        );
    }

    let most_specific = classes
        .iter()
        .filter(|(id, o)| **id != ClassId::NablaQ0 && o.verdict == Verdict::Holds)
        .map(|(id, _)| *id)
        .reduce(ClassId::meet);

    Ok(ClassReport {
        samples_requested: plan.samples,
        samples_used: bundles.len(),
        seed: plan.seed,
        bbox: plan.bbox,
        hold_tolerance: tol.hold,
        reject_margin: tol.reject,
        classes,
        most_specific,
        identity_checks,
        cross_checks: evaluation.cross_checks,
    })
}

/// Residuals and cross-checks aggregated over a sample.
pub struct SampleEvaluation {
    pub class_residuals: BTreeMap<ClassId, Residual>,
    pub identity_residuals: BTreeMap<IdentityId, Residual>,
    pub cross_checks: CrossChecks,
    /// Per-point theorem-equivalence pairs, in sample order.
    pub equivalence_pairs: Vec<Vec<EquivalencePair>>,
}

/// Evaluates everything at every bundle of a sample.
pub fn evaluate_sample(bundles: &[PointJetBundle]) -> Result<SampleEvaluation> {
    let mut class_residuals: BTreeMap<ClassId, Residual> = ClassId::ALL
        .iter()
        .map(|id| (*id, Residual::default()))
        .collect();
    let mut identity_totals: BTreeMap<IdentityId, Residual> = IdentityId::ALL
        .iter()
        .map(|id| (*id, Residual::default()))
        .collect();
    let mut cross = CrossChecks::default();
    let mut equivalence_pairs = Vec::with_capacity(bundles.len());

    for b in bundles {
        let point = evaluate_point(b)?;

        for (id, r) in &point.class_residuals {
            class_residuals.get_mut(id).unwrap().absorb(*r);
        }
        for (id, r) in &point.identity_residuals {
            identity_totals.get_mut(id).unwrap().absorb(*r);
        }

        let c = &point.cross_checks;
        cross.christoffel_closed_vs_generic = cross
            .christoffel_closed_vs_generic
            .max(c.christoffel_closed_vs_generic);
        cross.f_closed_vs_oracle = cross.f_closed_vs_oracle.max(c.f_closed_vs_oracle);
        cross.f_from_lowered_nabla_p = cross
            .f_from_lowered_nabla_p
            .max(c.f_from_lowered_nabla_p);
        cross.theta_closed_vs_contraction = cross
            .theta_closed_vs_contraction
            .max(c.theta_closed_vs_contraction);
        cross.inverse_closed_vs_elimination = cross
            .inverse_closed_vs_elimination
            .max(c.inverse_closed_vs_elimination);
        cross.metric_times_inverse_identity = cross
            .metric_times_inverse_identity
            .max(c.metric_times_inverse_identity);
        cross.nabla_g_max = cross.nabla_g_max.max(c.nabla_g_max);
        cross.nijenhuis_p_max = cross.nijenhuis_p_max.max(c.nijenhuis_p_max);
        cross.f_symmetry_yz = cross.f_symmetry_yz.max(c.f_symmetry_yz);
        cross.f_symmetry_p_anti = cross.f_symmetry_p_anti.max(c.f_symmetry_p_anti);
        cross.theta_max_abs = cross.theta_max_abs.max(c.theta_max_abs);
        cross.nabla_q_max = cross.nabla_q_max.max(c.nabla_q_max);

        equivalence_pairs.push(point.equivalence_pairs);
    }

    Ok(SampleEvaluation {
        class_residuals,
        identity_residuals: identity_totals,
        cross_checks: cross,
        equivalence_pairs,
    })
}

/// Everything evaluated at a single point.
pub struct PointEvaluation {
    pub class_residuals: BTreeMap<ClassId, Residual>,
    pub identity_residuals: BTreeMap<IdentityId, Residual>,
    pub cross_checks: CrossChecks,
    pub equivalence_pairs: Vec<EquivalencePair>,
}

pub fn evaluate_point(b: &PointJetBundle) -> Result<PointEvaluation> {
    // derivative-condition route
    let mut class_residuals = BTreeMap::new();
    class_residuals.insert(ClassId::W0, predicate_w0(b));
    class_residuals.insert(ClassId::W3bar, predicate_w3bar(b));
    class_residuals.insert(ClassId::W6bar, predicate_w6bar(b));
    class_residuals.insert(ClassId::W1, predicate_w1(b));
    class_residuals.insert(ClassId::W2, predicate_w2(b));
    class_residuals.insert(ClassId::NablaQ0, predicate_nabla_q_zero(b));

    // tensor route
    let frame = TensorFrame::at(b)?;
    let identities = identity_residuals(&frame);

    // the integrable class is characterized by the cyclic identity
    class_residuals.insert(ClassId::W1plusW2, identities[&IdentityId::C3]);

    // cross-checks: every closed form against its oracle
    let gamma_generic = christoffel_generic(b)?;
    let gamma_closed = christoffel_closed(b);
    let f_c = f_closed(b);
    let theta_c = theta_closed(b);
    let (inv_closed, _) = inverse_closed(b)?;
    let nabla_g =
        covariant_derivative_02(&frame.g, &metric_partials(b), &gamma_generic);
    let nabla_q = covariant_derivative_11(&q_matrix(), &gamma_generic);
    // third route to F: lower ∇P with the metric, F_ijk = g((∇_i P)e_j, e_k)
    let nabla_p = covariant_derivative_11(&p_matrix(), &gamma_generic);
    let f_from_nabla_p = crate::tensor::Tensor3::from_fn(|i, j, k| {
        (1..=DIM)
            .map(|a| nabla_p.get(i, j, a) * frame.g.get(a, k))
            .sum()
    });
    // scale ∇-residuals against the size of the metric derivatives
    let dg_scale = 1.0 + metric_partials(b).max_abs();

    let cross_checks = CrossChecks {
        christoffel_closed_vs_generic: gamma_closed.max_rel_dev(&gamma_generic),
        f_closed_vs_oracle: f_c.max_rel_dev(&frame.f),
        f_from_lowered_nabla_p: f_from_nabla_p.max_rel_dev(frame.f.as_tensor()),
        theta_closed_vs_contraction: theta_c.max_rel_dev(&frame.theta),
        inverse_closed_vs_elimination: inv_closed.max_rel_dev(&frame.g_inv_numeric),
        metric_times_inverse_identity: frame
            .g
            .mul(&inv_closed)
            .max_rel_dev(&Matrix4::identity()),
        nabla_g_max: nabla_g.max_abs() / dg_scale,
        nijenhuis_p_max: nijenhuis_p().max_abs(),
        f_symmetry_yz: frame.f.symmetry_violation_yz().max(f_c.symmetry_violation_yz()),
        f_symmetry_p_anti: frame
            .f
            .symmetry_violation_p_anti()
            .max(f_c.symmetry_violation_p_anti()),
        theta_max_abs: frame.theta.max_abs(),
        nabla_q_max: nabla_q.max_abs() / dg_scale,
    };

    // theorem equivalences: derivative conditions versus tensor identities.
    // For the parallel-Q theorem the tensor side is ‖∇Q‖ itself; for W0 it
    // is ‖F‖ (identity c0).
    let equivalence_pairs = vec![
        EquivalencePair {
            class: ClassId::W0,
            derivative: class_residuals[&ClassId::W0].normalized,
            identity: identities[&IdentityId::C0].normalized,
        },
        EquivalencePair {
            class: ClassId::W1,
            derivative: class_residuals[&ClassId::W1].normalized,
            identity: identities[&IdentityId::C1].normalized,
        },
        EquivalencePair {
            class: ClassId::W2,
            derivative: class_residuals[&ClassId::W2].normalized,
            identity: identities[&IdentityId::C2].normalized,
        },
        EquivalencePair {
            class: ClassId::W3bar,
            derivative: class_residuals[&ClassId::W3bar].normalized,
            identity: identities[&IdentityId::UslW3].normalized,
        },
        EquivalencePair {
            class: ClassId::W6bar,
            derivative: class_residuals[&ClassId::W6bar].normalized,
            identity: identities[&IdentityId::UslW6].normalized,
        },
        EquivalencePair {
            class: ClassId::NablaQ0,
            derivative: class_residuals[&ClassId::NablaQ0].normalized,
            identity: cross_checks.nabla_q_max,
        },
    ];

    Ok(PointEvaluation {
        class_residuals,
        identity_residuals: identities,
        cross_checks,
        equivalence_pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::Jet;

    fn pt(x: [f64; 4]) -> Point4 {
        Point4::new(x).unwrap()
    }

    fn w0_spec() -> MetricSpec {
        MetricSpec::parse_str(
            "A = x1^2 + x2^2 + x3^2 + x4^2\n\
             B = x1 + x2 + x3 + x4\n\
             C = 2*x1*x3 + 2*x2*x4\n\
             domain: 1 < x1\ndomain: 1 < x2\ndomain: 1 < x3\ndomain: 1 < x4\n",
        )
        .unwrap()
    }

    fn constant_bundle() -> PointJetBundle {
        PointJetBundle::from_jets(
            pt([1.0, 1.0, 1.0, 1.0]),
            Jet::constant(3.0),
            Jet::constant(1.0),
            Jet::constant(2.0),
        )
        .unwrap()
    }

    #[test]
    fn w0_predicate_values() {
        let spec = w0_spec();
        let b = spec.bundle_at(&pt([2.0, 3.0, 4.0, 5.0])).unwrap();
        assert!(predicate_w0(&b).raw < 1e-14);
        assert!(predicate_w0(&constant_bundle()).raw == 0.0);

        // linear coefficients with distinct slopes violate A₂ = C₄ by a - c
        let lin = PointJetBundle::from_jets(
            pt([1.0, 1.0, 1.0, 1.0]),
            Jet { value: 12.0, partials: [3.0; 4] },
            Jet { value: 4.0, partials: [1.0; 4] },
            Jet { value: 8.0, partials: [2.0; 4] },
        )
        .unwrap();
        assert!(predicate_w0(&lin).raw >= 1.0);
    }

    #[test]
    fn nabla_q_predicate_value() {
        let spec = w0_spec();
        let b = spec.bundle_at(&pt([2.0, 3.0, 4.0, 5.0])).unwrap();
        // 2B₁ = 2 versus C₄ + C₂ = 2x² + 2x⁴ = 16
        assert!((predicate_nabla_q_zero(&b).raw - 14.0).abs() < 1e-12);
        assert_eq!(predicate_nabla_q_zero(&constant_bundle()).raw, 0.0);
    }

    #[test]
    fn lattice_meets() {
        use ClassId::*;
        assert_eq!(W3bar.meet(W6bar), W0);
        assert_eq!(W3bar.meet(W1), W3bar);
        assert_eq!(W1.meet(W2), W0);
        assert_eq!(W2.meet(W1plusW2), W2);
        assert_eq!(W1plusW2.meet(W1plusW2), W1plusW2);
        assert!(NablaQ0.is_subclass_of(W0));
        assert!(NablaQ0.is_subclass_of(W2));
        assert!(!W0.is_subclass_of(NablaQ0));
    }

    #[test]
    fn verdict_thresholds() {
        let tol = Tolerances::default();
        assert_eq!(tol.verdict(1e-12), Verdict::Holds);
        assert_eq!(tol.verdict(1e-7), Verdict::Indeterminate);
        assert_eq!(tol.verdict(0.5), Verdict::Fails);
    }

    #[test]
    fn sampling_is_deterministic_and_rejects() {
        let spec = w0_spec();
        let plan = SamplePlan::new(40, 7, SampleBox::cube(1.1, 5.0));
        let a = sample_admitted(&spec, &plan).unwrap();
        let b = sample_admitted(&spec, &plan).unwrap();
        assert_eq!(a.len(), 40);
        assert_eq!(
            a.iter().map(|x| x.point).collect::<Vec<_>>(),
            b.iter().map(|x| x.point).collect::<Vec<_>>()
        );
        for bundle in &a {
            assert!(spec.admits(&bundle.point).unwrap());
        }

        // a box entirely outside the domain yields an empty-sample error
        let bad = SamplePlan::new(10, 7, SampleBox::cube(0.1, 0.9));
        assert!(matches!(
            sample_admitted(&spec, &bad),
            Err(Error::EmptySample { .. })
        ));
    }

    #[test]
    fn classify_the_parallel_example() {
        let spec = w0_spec();
        let plan = SamplePlan::new(60, SamplePlan::DEFAULT_SEED, SampleBox::cube(1.1, 5.0));
        let report = classify(&spec, &plan, &Tolerances::default()).unwrap();
        assert_eq!(report.most_specific, Some(ClassId::W0));
        assert_eq!(report.class(ClassId::W0).verdict, Verdict::Holds);
        assert_eq!(report.class(ClassId::W1).verdict, Verdict::Holds);
        assert_eq!(report.class(ClassId::W2).verdict, Verdict::Holds);
        assert_eq!(report.class(ClassId::NablaQ0).verdict, Verdict::Fails);
        assert!(!report.has_indeterminate());
        assert!(report.cross_checks.f_closed_vs_oracle < 1e-9);
        assert!(report.cross_checks.christoffel_closed_vs_generic < 1e-9);
    }
}
