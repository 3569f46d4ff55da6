//! Levi-Civita connection of the circulant metric.
//!
//! Two independent routes produce the Christoffel symbols:
//!
//! * [`christoffel_generic`] — the textbook formula
//!   `2Γ^k_ij = g^{ak}(∂_i g_aj + ∂_j g_ai − ∂_a g_ij)` with the inverse
//!   metric obtained by numeric elimination. This is the source of truth.
//! * [`christoffel_closed`] — the seven closed-form coefficient families
//!   specific to the circulant metric pattern, a validated secondary path.
//!
//! The closed forms use a compressed index convention: for a component the
//! indices i and k always form a same-parity pair ((1,3) or (2,4)), and j, s
//! form the complementary pair. Wherever a formula is not symmetric in j
//! and s, the index named in the component pins j and s is the remaining
//! one; the cross-validation against the generic route adjudicates the
//! reading.

use crate::error::Result;
use crate::manifold::{
    associated_slot, metric_at, metric_slot, shift2, PointJetBundle,
};
use crate::tensor::{Matrix4, Tensor3, DIM};

/// Christoffel symbols Γ^k_ij, symmetric in the two lower indices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Christoffel {
    t: Tensor3,
}

impl Christoffel {
    /// Γ^k_ij with lower indices (i, j) and upper index k.
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.t.get(i, j, k)
    }

    pub fn as_tensor(&self) -> &Tensor3 {
        &self.t
    }

    pub fn max_abs(&self) -> f64 {
        self.t.max_abs()
    }

    pub fn max_rel_dev(&self, other: &Christoffel) -> f64 {
        self.t.max_rel_dev(&other.t)
    }
}

/// Partial derivatives of the metric, `t(i, j, k) = ∂_i g_jk`, assembled
/// from the circulant pattern: the derivative of each slot is the matching
/// partial of the coefficient occupying it.
pub fn metric_partials(b: &PointJetBundle) -> Tensor3 {
    Tensor3::from_fn(|i, j, k| b.coeff(metric_slot(j, k)).partial(i))
}

/// Partial derivatives of the associated metric, `t(i, j, k) = ∂_i g̃_jk`.
pub fn associated_partials(b: &PointJetBundle) -> Tensor3 {
    Tensor3::from_fn(|i, j, k| b.coeff(associated_slot(j, k)).partial(i))
}

/// Christoffel symbols from the generic formula with a numerically
/// inverted metric.
pub fn christoffel_generic(b: &PointJetBundle) -> Result<Christoffel> {
    let g = metric_at(b);
    let ginv = g.inverse_numeric()?;
    let dg = metric_partials(b);
    let t = Tensor3::from_fn(|i, j, k| {
        0.5 * (1..=DIM)
            .map(|a| ginv.get(a, k) * (dg.get(i, a, j) + dg.get(j, a, i) - dg.get(a, i, j)))
            .sum::<f64>()
    });
    Ok(Christoffel { t })
}

/// Christoffel symbols from the closed-form families of the circulant
/// metric. All 40 independent symbols are populated; the lower-index
/// symmetry holds exactly because both orderings evaluate the same family
/// expression.
pub fn christoffel_closed(b: &PointJetBundle) -> Christoffel {
    let ctx = ClosedFormContext::new(b);
    let t = Tensor3::from_fn(|l1, l2, upper| ctx.component(l1, l2, upper));
    Christoffel { t }
}

/// Scalars shared by every closed-form family: coefficient values, their
/// partials, and the common prefactor 1/(2D).
struct ClosedFormContext {
    a: f64,
    b: f64,
    c: f64,
    da: [f64; 4],
    db: [f64; 4],
    dc: [f64; 4],
    half_inv_d: f64,
}

impl ClosedFormContext {
    fn new(bundle: &PointJetBundle) -> Self {
        let (a, b, c) = (bundle.a.value, bundle.b.value, bundle.c.value);
        let d = (a - c) * ((a + c) * (a + c) - 4.0 * b * b);
        ClosedFormContext {
            a,
            b,
            c,
            da: bundle.a.partials,
            db: bundle.b.partials,
            dc: bundle.c.partials,
            half_inv_d: 0.5 / d,
        }
    }

    fn a_(&self, i: usize) -> f64 {
        self.da[i - 1]
    }
    fn b_(&self, i: usize) -> f64 {
        self.db[i - 1]
    }
    fn c_(&self, i: usize) -> f64 {
        self.dc[i - 1]
    }

    /// Dispatches a component Γ^upper_(l1 l2) to its family. The same-parity
    /// partner of an index is `shift2` of it; `j` is pinned by whichever
    /// opposite-parity index the component names, and `s` is the remaining
    /// one.
    fn component(&self, l1: usize, l2: usize, upper: usize) -> f64 {
        if l1 == l2 {
            let i = l1;
            let k = shift2(i);
            if upper == i {
                // Γ_ii^i; j and s enter symmetrically
                let (j, s) = opposite_pair(i);
                self.gamma_ii_i(i, j, k, s)
            } else if upper == k {
                // Γ_ii^k; j and s enter symmetrically
                let (j, s) = opposite_pair(i);
                self.gamma_ii_k(i, j, k, s)
            } else {
                // Γ_ii^j with j = upper
                let j = upper;
                let s = shift2(j);
                self.gamma_ii_j(i, j, k, s)
            }
        } else if l2 == shift2(l1) {
            // lower indices form a same-parity pair
            if upper == l1 || upper == l2 {
                // Γ_ik^i with i = upper
                let i = upper;
                let k = if upper == l1 { l2 } else { l1 };
                let (j, s) = opposite_pair(i);
                self.gamma_ik_i(i, j, k, s)
            } else {
                // Γ_ik^j with j = upper; symmetric in i ↔ k
                let (i, k) = (l1, l2);
                let j = upper;
                let s = shift2(j);
                self.gamma_ik_j(i, j, k, s)
            }
        } else {
            // lower indices of opposite parity
            let (i, j) = if upper == l1 || upper == shift2(l1) {
                (l1, l2)
            } else {
                (l2, l1)
            };
            let k = shift2(i);
            let s = shift2(j);
            if upper == i {
                self.gamma_ij_i(i, j, k, s)
            } else {
                self.gamma_ij_k(i, j, k, s)
            }
        }
    }

    fn gamma_ii_i(&self, i: usize, j: usize, k: usize, s: usize) -> f64 {
        let (a, b, c) = (self.a, self.b, self.c);
        self.half_inv_d
            * (b * (c - a) * (4.0 * self.b_(i) - self.a_(j) - self.a_(s))
                + 2.0 * b * b * (2.0 * self.c_(i) - self.a_(i) - self.a_(k))
                + a * (a + c) * self.a_(i)
                - c * (a + c) * (2.0 * self.c_(i) - self.a_(k)))
    }

    fn gamma_ii_j(&self, i: usize, j: usize, k: usize, s: usize) -> f64 {
        let (a, b, c) = (self.a, self.b, self.c);
        self.half_inv_d
            * (b * (c - a) * (self.a_(i) + 2.0 * self.c_(i) - self.a_(k))
                + 2.0 * b * b * (self.a_(j) - self.a_(s))
                + a * (a + c) * (2.0 * self.b_(i) - self.a_(j))
                - c * (a + c) * (2.0 * self.b_(i) - self.a_(s)))
    }

    fn gamma_ii_k(&self, i: usize, j: usize, k: usize, s: usize) -> f64 {
        let (a, b, c) = (self.a, self.b, self.c);
        self.half_inv_d
            * (b * (c - a) * (4.0 * self.b_(i) - self.a_(j) - self.a_(s))
                + 2.0 * b * b * (self.a_(i) + self.a_(k) - 2.0 * self.c_(i))
                + a * (a + c) * (2.0 * self.c_(i) - self.a_(k))
                - c * (a + c) * self.a_(i))
    }

    fn gamma_ij_i(&self, i: usize, j: usize, k: usize, s: usize) -> f64 {
        let (a, b, c) = (self.a, self.b, self.c);
        self.half_inv_d
            * (b * (c - a) * (self.a_(i) + self.c_(i) + self.b_(j) - self.b_(s))
                + 2.0 * b * b * (self.b_(i) + self.c_(j) - self.b_(k) - self.a_(j))
                + a * (a + c) * self.a_(j)
                - c * (a + c) * (self.b_(i) + self.c_(j) - self.b_(k)))
    }

    fn gamma_ij_k(&self, i: usize, j: usize, k: usize, s: usize) -> f64 {
        let (a, b, c) = (self.a, self.b, self.c);
        self.half_inv_d
            * (b * (c - a) * (self.a_(i) + self.c_(i) + self.b_(j) - self.b_(s))
                + 2.0 * b * b * (self.b_(k) - self.c_(j) - self.b_(i) + self.a_(j))
                + a * (a + c) * (self.b_(i) + self.c_(j) - self.b_(k))
                - c * (a + c) * self.a_(j))
    }

    fn gamma_ik_j(&self, i: usize, j: usize, k: usize, s: usize) -> f64 {
        let (a, b, c) = (self.a, self.b, self.c);
        self.half_inv_d
            * (b * (c - a) * (self.a_(i) + self.a_(k))
                + 2.0 * b * b * (self.c_(j) - self.c_(s))
                + a * (a + c) * (self.b_(i) + self.b_(k) - self.c_(j))
                - c * (a + c) * (self.b_(i) + self.b_(k) - self.c_(s)))
    }

    fn gamma_ik_i(&self, i: usize, j: usize, k: usize, s: usize) -> f64 {
        let (a, b, c) = (self.a, self.b, self.c);
        self.half_inv_d
            * (b * (c - a) * (2.0 * self.b_(i) + 2.0 * self.b_(k) - self.c_(j) - self.c_(s))
                + 2.0 * b * b * (self.a_(i) - self.a_(k))
                + a * (a + c) * self.a_(k)
                - c * (a + c) * self.a_(i))
    }
}

/// The opposite-parity pair to index i, in ascending order.
fn opposite_pair(i: usize) -> (usize, usize) {
    if i % 2 == 1 {
        (2, 4)
    } else {
        (1, 3)
    }
}

/// Covariant derivative of a (0,2)-tensor field:
/// `∇_i h_jk = ∂_i h_jk − Γ^a_ij h_ak − Γ^a_ik h_aj`.
/// `values` holds h and `partials(i, j, k) = ∂_i h_jk`.
pub fn covariant_derivative_02(
    values: &Matrix4,
    partials: &Tensor3,
    gamma: &Christoffel,
) -> Tensor3 {
    Tensor3::from_fn(|i, j, k| {
        partials.get(i, j, k)
            - (1..=DIM)
                .map(|a| {
                    gamma.get(i, j, a) * values.get(a, k) + gamma.get(i, k, a) * values.get(a, j)
                })
                .sum::<f64>()
    })
}

/// Covariant derivative of a constant (1,1)-tensor field S (the ∂ term
/// vanishes): `∇_i S^k_j = Γ^k_ia S^a_j − Γ^a_ij S^k_a`. The result is
/// indexed `t(i, j, k) = ∇_i S^k_j`, and `s.get(j, k) = S^k_j`.
pub fn covariant_derivative_11(s: &Matrix4, gamma: &Christoffel) -> Tensor3 {
    Tensor3::from_fn(|i, j, k| {
        (1..=DIM)
            .map(|a| gamma.get(i, a, k) * s.get(j, a) - gamma.get(i, j, a) * s.get(a, k))
            .sum()
    })
}

/// ∇_i h for the metric itself (pattern h = g).
pub fn nabla_g(b: &PointJetBundle) -> Result<Tensor3> {
    let gamma = christoffel_generic(b)?;
    Ok(covariant_derivative_02(
        &metric_at(b),
        &metric_partials(b),
        &gamma,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::{Jet, Point4};
    use crate::manifold::{associated_metric_at, p_matrix, q_matrix, MetricSpec};

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
    fn constant_coefficients_are_flat() {
        let b = constant_bundle();
        assert_eq!(metric_partials(&b).max_abs(), 0.0);
        assert_eq!(christoffel_generic(&b).unwrap().max_abs(), 0.0);
        assert_eq!(christoffel_closed(&b).max_abs(), 0.0);
    }

    #[test]
    fn metric_partials_from_pattern() {
        let spec = w0_spec();
        let b = spec.bundle_at(&pt([2.0, 3.0, 4.0, 5.0])).unwrap();
        let dg = metric_partials(&b);
        // ∂₁ g₁₁ = A₁ = 2x¹ = 4
        assert_eq!(dg.get(1, 1, 1), 4.0);
        // ∂₁ g₁₃ = C₁ = 2x³ = 8
        assert_eq!(dg.get(1, 1, 3), 8.0);
        // symmetry in the last two slots
        for i in 1..=4 {
            for j in 1..=4 {
                for k in 1..=4 {
                    assert_eq!(dg.get(i, j, k), dg.get(i, k, j));
                }
            }
        }
    }

    #[test]
    fn generic_connection_is_metric_compatible() {
        let spec = w0_spec();
        for point in [[2.0, 3.0, 4.0, 5.0], [1.5, 2.5, 3.5, 1.2], [4.0, 2.0, 3.0, 5.0]] {
            let b = spec.bundle_at(&pt(point)).unwrap();
            let ng = nabla_g(&b).unwrap();
            let scale = 1.0 + metric_partials(&b).max_abs();
            assert!(ng.max_abs() < 1e-10 * scale, "∇g = {}", ng.max_abs());
        }
    }

    #[test]
    fn closed_matches_generic_spot_values() {
        // hand-computed values: Γ^1_11 = 11/56 on the linear metric at
        // (1,1,1,1) with a=3, b=1, c=2; Γ^3_11 = Γ^1_13 = 1/6 on the
        // quadratic metric at (2,3,4,5)
        let lin = PointJetBundle::from_jets(
            pt([1.0, 1.0, 1.0, 1.0]),
            Jet { value: 12.0, partials: [3.0; 4] },
            Jet { value: 4.0, partials: [1.0; 4] },
            Jet { value: 8.0, partials: [2.0; 4] },
        )
        .unwrap();
        let closed = christoffel_closed(&lin);
        assert!((closed.get(1, 1, 1) - 11.0 / 56.0).abs() < 1e-14);
        assert!((closed.get(1, 3, 2) + 1.0 / 28.0).abs() < 1e-14);
        assert!((closed.get(1, 2, 1) - 3.0 / 28.0).abs() < 1e-14);
        assert!((closed.get(1, 1, 2) + 3.0 / 56.0).abs() < 1e-14);

        let spec = w0_spec();
        let b = spec.bundle_at(&pt([2.0, 3.0, 4.0, 5.0])).unwrap();
        let closed = christoffel_closed(&b);
        assert!((closed.get(1, 1, 3) - 1.0 / 6.0).abs() < 1e-14);
        assert!((closed.get(1, 3, 1) - 1.0 / 6.0).abs() < 1e-14);
        assert!((closed.get(1, 2, 3) - 23488.0 / 147456.0).abs() < 1e-14);

        let generic = christoffel_generic(&b).unwrap();
        assert!(closed.max_rel_dev(&generic) < 1e-12);
    }

    #[test]
    fn closed_is_lower_symmetric_exactly() {
        let spec = w0_spec();
        let b = spec.bundle_at(&pt([2.0, 3.0, 4.0, 5.0])).unwrap();
        let gamma = christoffel_closed(&b);
        for i in 1..=4 {
            for j in 1..=4 {
                for k in 1..=4 {
                    assert_eq!(gamma.get(i, j, k), gamma.get(j, i, k));
                }
            }
        }
    }

    #[test]
    fn covariant_derivative_of_g_vanishes_and_of_q_does_not() {
        let spec = w0_spec();
        let b = spec.bundle_at(&pt([2.0, 3.0, 4.0, 5.0])).unwrap();
        let gamma = christoffel_generic(&b).unwrap();

        let ng = covariant_derivative_02(&metric_at(&b), &metric_partials(&b), &gamma);
        assert!(ng.max_abs() < 1e-12);

        // ∇Q ≠ 0 on this metric, while ∇P = 0 (the metric is in the class
        // with parallel P)
        let nq = covariant_derivative_11(&q_matrix(), &gamma);
        assert!(nq.max_abs() > 0.01);
        let np = covariant_derivative_11(&p_matrix(), &gamma);
        assert!(np.max_abs() < 1e-12);
    }

    #[test]
    fn nabla_p_lowered_equals_nabla_g_tilde() {
        // g((∇_i P)e_j, e_k) must agree with ∇_i g̃_jk componentwise
        let spec = w0_spec();
        let b = spec.bundle_at(&pt([1.3, 2.7, 4.1, 3.3])).unwrap();
        let gamma = christoffel_generic(&b).unwrap();
        let np = covariant_derivative_11(&p_matrix(), &gamma);
        let g = metric_at(&b);
        let lowered = Tensor3::from_fn(|i, j, k| {
            (1..=DIM).map(|a| np.get(i, j, a) * g.get(a, k)).sum()
        });
        let ngt = covariant_derivative_02(
            &associated_metric_at(&b),
            &associated_partials(&b),
            &gamma,
        );
        assert!(lowered.max_rel_dev(&ngt) < 1e-12);
    }

    #[test]
    fn closed_equals_generic_on_random_jets() {
        // the closed forms are pointwise algebraic identities in the jet
        // values, so random (ordered) coefficients exercise them fully
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..200 {
            let bb = 0.2 + 1.5 * next();
            let cc = bb + 0.2 + 2.0 * next();
            let aa = cc + 0.2 + 2.0 * next();
            let mut partial = || [0; 4].map(|_| 6.0 * next() - 3.0);
            let bundle = PointJetBundle::from_jets(
                pt([1.0, 1.0, 1.0, 1.0]),
                Jet { value: aa, partials: partial() },
                Jet { value: bb, partials: partial() },
                Jet { value: cc, partials: partial() },
            )
            .unwrap();
            let closed = christoffel_closed(&bundle);
            let generic = christoffel_generic(&bundle).unwrap();
            let dev = closed.max_rel_dev(&generic);
            assert!(dev < 1e-9, "deviation {dev} for A={aa} B={bb} C={cc}");
        }
    }

    #[test]
    fn works_via_spec_constants() {
        let spec = MetricSpec::parse_str(
            "const a = 1\nconst c = 1\n\
             A = a*exp(x1 - x2)\n\
             C = c*exp(x4 - x3)\n\
             B = a*exp(x1 - x2) - c*exp(x4 - x3)\n\
             domain: ln(c/a) < x1 - x2 + x3 - x4\n\
             domain: x1 - x2 + x3 - x4 < ln(2*c/a)\n",
        )
        .unwrap();
        let b = spec.bundle_at(&pt([1.4, 1.1, 1.3, 1.2])).unwrap();
        let closed = christoffel_closed(&b);
        let generic = christoffel_generic(&b).unwrap();
        assert!(closed.max_rel_dev(&generic) < 1e-12);
    }
}
