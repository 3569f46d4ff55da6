//! The fundamental tensor F, the Lee form θ, and the Nijenhuis tensor.
//!
//! F(x, y, z) = g((∇_x P)y, z) measures how far the almost product
//! structure is from being parallel; it equals the covariant derivative of
//! the associated metric componentwise, F_ijk = ∇_i g̃_jk. Both a closed
//! form specific to the circulant metric and a first-principles oracle
//! route are provided, and they are cross-validated corpus-wide.

use serde::{Deserialize, Serialize};

use crate::connection::{
    associated_partials, christoffel_generic, covariant_derivative_02,
};
use crate::error::Result;
use crate::manifold::{associated_metric_at, shift2, PointJetBundle};
use crate::tensor::{rel_dev, Matrix4, Tensor3, DIM};

/// The fundamental tensor with components F_ijk.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct FTensor {
    t: Tensor3,
}

impl FTensor {
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.t.get(i, j, k)
    }

    pub fn as_tensor(&self) -> &Tensor3 {
        &self.t
    }

    pub fn max_abs(&self) -> f64 {
        self.t.max_abs()
    }

    pub fn max_rel_dev(&self, other: &FTensor) -> f64 {
        self.t.max_rel_dev(&other.t)
    }

    /// Largest violation of the symmetry F(x, y, z) = F(x, z, y).
    pub fn symmetry_violation_yz(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 1..=DIM {
            for j in 1..=DIM {
                for k in 1..=DIM {
                    worst = worst.max(rel_dev(self.get(i, j, k), self.get(i, k, j)));
                }
            }
        }
        worst
    }

    /// Largest violation of F(x, Py, Pz) = −F(x, y, z).
    pub fn symmetry_violation_p_anti(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 1..=DIM {
            for j in 1..=DIM {
                for k in 1..=DIM {
                    worst = worst.max(rel_dev(
                        self.get(i, shift2(j), shift2(k)),
                        -self.get(i, j, k),
                    ));
                }
            }
        }
        worst
    }

    /// Largest violation of the cyclic identity
    /// F(x, y, Pz) + F(y, z, Px) + F(z, x, Py) = 0 over basis triples,
    /// scaled against the largest operand.
    pub fn cyclic_violation(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 1..=DIM {
            for j in 1..=DIM {
                for k in 1..=DIM {
                    let terms = [
                        self.get(i, j, shift2(k)),
                        self.get(j, k, shift2(i)),
                        self.get(k, i, shift2(j)),
                    ];
                    let sum: f64 = terms.iter().sum();
                    let scale = 1.0 + terms.iter().fold(0.0f64, |m, t| m.max(t.abs()));
                    worst = worst.max(sum.abs() / scale);
                }
            }
        }
        worst
    }
}

/// Closed-form components of F. The sixteen coefficient families populate
/// every nonzero slot; the remaining slots (those whose last two indices
/// form a same-parity pair) are zero. The y↔z symmetry and the
/// P-antisymmetry hold exactly by construction.
pub fn f_closed(b: &PointJetBundle) -> FTensor {
    let a = b.a.partials;
    let bb = b.b.partials;
    let c = b.c.partials;
    // partials are 0-based here; a[0] is A_1 and so on
    let mut t = Tensor3::zeros();

    // block i = 1
    let f111 = a[2] - c[0];
    let f122 = bb[3] - bb[1];
    let f112 = 0.5 * (a[3] - bb[0] - c[1] + bb[2]);
    let f114 = 0.5 * (a[1] - bb[0] - c[3] + bb[2]);
    fill_block(&mut t, 1, f111, f122, f112, f114);

    // block i = 2
    let f211 = bb[2] - bb[0];
    let f222 = a[3] - c[1];
    let f212 = 0.5 * (a[2] - bb[1] - c[0] + bb[3]);
    let f223 = 0.5 * (a[0] + bb[3] - c[2] - bb[1]);
    fill_block_even(&mut t, 2, f211, f222, f212, f223);

    // block i = 3: the displayed families pin F_334 and F_323, so the
    // (1,2) and (1,4) slots get the negated values
    let f311 = c[2] - a[0];
    let f322 = bb[3] - bb[1];
    let f334 = 0.5 * (a[1] + bb[0] - c[3] - bb[2]);
    let f323 = 0.5 * (a[3] + bb[0] - c[1] - bb[2]);
    fill_block(&mut t, 3, f311, f322, -f334, -f323);

    // block i = 4: the displayed families pin F_434 and F_414
    let f411 = bb[2] - bb[0];
    let f422 = c[3] - a[1];
    let f434 = 0.5 * (a[0] + bb[1] - c[2] - bb[3]);
    let f414 = 0.5 * (a[2] - bb[3] - c[0] + bb[1]);
    fill_block_even(&mut t, 4, f411, f422, -f434, -f414);

    FTensor { t }
}

/// Fills the (j,k)-block for an odd first index given the four independent
/// values F_i11, F_i22, F_i12, F_i14. The paired slots follow from
/// F_i33 = −F_i11, F_i44 = −F_i22, F_i34 = −F_i12, F_i23 = −F_i14,
/// plus the y↔z symmetry.
fn fill_block(t: &mut Tensor3, i: usize, f11: f64, f22: f64, f12: f64, f14: f64) {
    let pairs = [
        (1, 1, f11),
        (3, 3, -f11),
        (2, 2, f22),
        (4, 4, -f22),
        (1, 2, f12),
        (3, 4, -f12),
        (1, 4, f14),
        (2, 3, -f14),
    ];
    for (j, k, v) in pairs {
        t.set(i, j, k, v);
        t.set(i, k, j, v);
    }
}

/// Same as [`fill_block`] but for an even first index, where the displayed
/// families pin F_i12 and F_i23 instead (F_i34 = −F_i12, F_i14 = −F_i23).
fn fill_block_even(t: &mut Tensor3, i: usize, f11: f64, f22: f64, f12: f64, f23: f64) {
    let pairs = [
        (1, 1, f11),
        (3, 3, -f11),
        (2, 2, f22),
        (4, 4, -f22),
        (1, 2, f12),
        (3, 4, -f12),
        (2, 3, f23),
        (1, 4, -f23),
    ];
    for (j, k, v) in pairs {
        t.set(i, j, k, v);
        t.set(i, k, j, v);
    }
}

/// Oracle route for F: the covariant derivative of the associated metric,
/// F_ijk = ∇_i g̃_jk, evaluated with the generic connection. Independent of
/// the closed-form algebra.
pub fn f_oracle(b: &PointJetBundle) -> Result<FTensor> {
    let gamma = christoffel_generic(b)?;
    let t = covariant_derivative_02(&associated_metric_at(b), &associated_partials(b), &gamma);
    Ok(FTensor { t })
}

/// The Lee form θ with components θ_k.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ThetaForm {
    theta: [f64; 4],
}

impl ThetaForm {
    pub fn new(theta: [f64; 4]) -> Self {
        ThetaForm { theta }
    }

    /// Component θ_k, 1-based.
    pub fn get(&self, k: usize) -> f64 {
        self.theta[k - 1]
    }

    pub fn components(&self) -> [f64; 4] {
        self.theta
    }

    pub fn max_abs(&self) -> f64 {
        self.theta.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn max_rel_dev(&self, other: &ThetaForm) -> f64 {
        (1..=4)
            .map(|k| rel_dev(self.get(k), other.get(k)))
            .fold(0.0, f64::max)
    }
}

/// Closed-form Lee form: each component is a combination of the inverse
/// coefficients Ā, B̄, C̄, D with differences of the coefficient partials.
pub fn theta_closed(b: &PointJetBundle) -> ThetaForm {
    let a = b.a.partials;
    let bb = b.b.partials;
    let c = b.c.partials;
    let (av, bv, cv) = (b.a.value, b.b.value, b.c.value);
    let a_bar = av * (av + cv) - 2.0 * bv * bv;
    let b_bar = bv * (cv - av);
    let c_bar = 2.0 * bv * bv - cv * (av + cv);
    let d = (av - cv) * ((av + cv) * (av + cv) - 4.0 * bv * bv);

    let theta1 = (c_bar * (2.0 * c[2] - 2.0 * a[0])
        + b_bar * (4.0 * bb[2] - 4.0 * bb[0])
        + a_bar * (2.0 * a[2] - 2.0 * c[0]))
        / d;
    let theta2 = (a_bar * (2.0 * a[3] - 2.0 * c[1])
        + b_bar * (4.0 * bb[3] - 4.0 * bb[1])
        + c_bar * (2.0 * c[3] - 2.0 * a[1]))
        / d;
    let theta3 = (c_bar * (2.0 * c[0] - 2.0 * a[2])
        + b_bar * (4.0 * bb[0] - 4.0 * bb[2])
        + a_bar * (2.0 * a[0] - 2.0 * c[2]))
        / d;
    let theta4 = (a_bar * (2.0 * a[1] - 2.0 * c[3])
        + b_bar * (4.0 * bb[1] - 4.0 * bb[3])
        + c_bar * (2.0 * c[1] - 2.0 * a[3]))
        / d;
    ThetaForm {
        theta: [theta1, theta2, theta3, theta4],
    }
}

/// Oracle route for θ: the metric trace θ_k = g^{ij} F_ijk.
pub fn theta_oracle(f: &FTensor, ginv: &Matrix4) -> ThetaForm {
    let mut theta = [0.0; 4];
    for (slot, th) in theta.iter_mut().enumerate() {
        let k = slot + 1;
        let mut sum = 0.0;
        for i in 1..=DIM {
            for j in 1..=DIM {
                sum += ginv.get(i, j) * f.get(i, j, k);
            }
        }
        *th = sum;
    }
    ThetaForm { theta }
}

/// The associated form θ̃_i = P_i^a θ_a, i.e. θ with indices 1↔3, 2↔4.
pub fn theta_tilde(theta: &ThetaForm) -> ThetaForm {
    ThetaForm {
        theta: [theta.get(3), theta.get(4), theta.get(1), theta.get(2)],
    }
}

/// Nijenhuis tensor of an arbitrary (1,1)-tensor field:
///
/// ```text
/// N_ij^k = S_i^a (∂_a S_j^k − ∂_j S_a^k) − S_j^a (∂_a S_i^k − ∂_i S_a^k)
/// ```
///
/// `value.get(j, k) = S_j^k` and `partials.get(a, j, k) = ∂_a S_j^k`; the
/// result is indexed `t(i, j, k) = N_ij^k`. For a constant field the
/// partials are the zero tensor and the contraction is still carried out,
/// so a vanishing result is computed rather than assumed.
pub fn nijenhuis(value: &Matrix4, partials: &Tensor3) -> Tensor3 {
    Tensor3::from_fn(|i, j, k| {
        (1..=DIM)
            .map(|a| {
                value.get(i, a) * (partials.get(a, j, k) - partials.get(j, a, k))
                    - value.get(j, a) * (partials.get(a, i, k) - partials.get(i, a, k))
            })
            .sum()
    })
}

/// Nijenhuis tensor of the manifold's almost product structure P. P has
/// constant components, so its partial-derivative tensor is identically
/// zero and the result vanishes — computed through the general contraction.
pub fn nijenhuis_p() -> Tensor3 {
    nijenhuis(&crate::manifold::p_matrix(), &Tensor3::zeros())
}
