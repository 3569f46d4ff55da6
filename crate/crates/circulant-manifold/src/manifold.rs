//! Structure tensors and pointwise metric objects of the circulant manifold.
//!
//! The metric is determined by three scalar coefficients A, B, C through the
//! circulant pattern
//!
//! ```text
//!         ( A  B  C  B )
//! (g_ij) = ( B  A  B  C )
//!         ( C  B  A  B )
//!         ( B  C  B  A )
//! ```
//!
//! together with the constant cyclic-shift structure Q and the almost
//! product structure P = Q². Positive definiteness is enforced through the
//! strict chain A > C > B > 0 at every admitted point.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Constants, ConstraintSet, ScalarField};
use crate::jet::{Jet, Point4};
use crate::tensor::Matrix4;

/// Index shift by two positions, the permutation underlying P: 1↔3, 2↔4.
pub fn shift2(i: usize) -> usize {
    ((i + 1) % 4) + 1
}

/// The coefficient occupying a metric slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coeff {
    A,
    B,
    C,
}

/// Which coefficient sits in slot (j, k) of the metric: A on the diagonal,
/// C two steps off it (cyclically), B otherwise.
pub fn metric_slot(j: usize, k: usize) -> Coeff {
    if j == k {
        Coeff::A
    } else if shift2(j) == k {
        Coeff::C
    } else {
        Coeff::B
    }
}

/// Slot pattern of the associated metric g̃(x, y) = g(x, Py), i.e. the
/// metric pattern with the column index shifted by two.
pub fn associated_slot(j: usize, k: usize) -> Coeff {
    metric_slot(j, shift2(k))
}

/// The circulant structure matrix Q (cyclic shift by one).
pub fn q_matrix() -> Matrix4 {
    Matrix4::from_rows([
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [1.0, 0.0, 0.0, 0.0],
    ])
}

/// The almost product structure P = Q², computed by matrix multiplication.
/// Satisfies P² = id and tr P = 0.
pub fn p_matrix() -> Matrix4 {
    let q = q_matrix();
    q.mul(&q)
}

/// A metric specification: the three coefficient fields, the numeric
/// bindings for named constants, and the domain restrictions.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricSpec {
    pub a: ScalarField,
    pub b: ScalarField,
    pub c: ScalarField,
    pub constants: Constants,
    pub domain: ConstraintSet,
}

impl MetricSpec {
    pub fn new(
        a: ScalarField,
        b: ScalarField,
        c: ScalarField,
        constants: Constants,
        domain: ConstraintSet,
    ) -> Result<Self> {
        let spec = MetricSpec {
            a,
            b,
            c,
            constants,
            domain,
        };
        spec.check_bindings()?;
        Ok(spec)
    }

    /// Parses the `.mspec` key-value format:
    ///
    /// ```text
    /// # comment
    /// const a = 3
    /// A = a*(x1 + x2 - x3 - x4)
    /// B = ...
    /// C = ...
    /// domain: 0 < x1 + x2 - x3 - x4 < ln(sqrt(3))
    /// ```
    ///
    /// `A`, `B`, `C` must each appear exactly once. `domain:` lines carry a
    /// chain of one or more strict `<` comparisons. Every named constant
    /// referenced by an expression must have a `const` line (or be supplied
    /// later via [`MetricSpec::override_constant`]).
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut a = None;
        let mut b = None;
        let mut c = None;
        let mut constants = Constants::new();
        let mut domain = ConstraintSet::default();

        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw_line.find('#') {
                Some(p) => &raw_line[..p],
                None => raw_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }

            let err = |message: String| Error::MetricFile {
                line: line_no,
                message,
            };

            if let Some(rest) = line.strip_prefix("const ") {
                let (name, value) = rest
                    .split_once('=')
                    .ok_or_else(|| err("expected `const <name> = <number>`".into()))?;
                let name = name.trim();
                if name.is_empty()
                    || !name
                        .chars()
                        .all(|ch| ch.is_ascii_alphanumeric() || ch == '_')
                    || name.chars().next().is_some_and(|ch| ch.is_ascii_digit())
                {
                    return Err(err(format!("bad constant name `{name}`")));
                }
                if is_reserved(name) {
                    return Err(err(format!(
                        "constant name `{name}` collides with a builtin identifier"
                    )));
                }
                let value: f64 = value
                    .trim()
                    .parse()
                    .map_err(|_| err(format!("bad numeric value `{}`", value.trim())))?;
                if constants.insert(name.to_string(), value).is_some() {
                    return Err(err(format!("constant `{name}` defined twice")));
                }
            } else if let Some(rest) = line.strip_prefix("domain:") {
                // Expressions cannot contain `<`, so splitting on it is safe.
                let parts: Vec<&str> = rest.split('<').collect();
                if parts.len() < 2 {
                    return Err(err("domain line needs at least one `<`".into()));
                }
                let fields: Vec<ScalarField> = parts
                    .iter()
                    .map(|p| ScalarField::parse(p))
                    .collect::<Result<_>>()
                    .map_err(|e| err(e.to_string()))?;
                for pair in fields.windows(2) {
                    domain.push(pair[0].clone(), pair[1].clone());
                }
            } else if let Some((key, value)) = line.split_once('=') {
                let key = key.trim();
                let field = ScalarField::parse(value).map_err(|e| err(e.to_string()))?;
                let slot = match key {
                    "A" => &mut a,
                    "B" => &mut b,
                    "C" => &mut c,
                    _ => return Err(err(format!("unknown key `{key}`"))),
                };
                if slot.replace(field).is_some() {
                    return Err(err(format!("coefficient `{key}` defined twice")));
                }
            } else {
                return Err(err(format!("unrecognized line `{line}`")));
            }
        }

        let missing = |k: &str| Error::MetricFile {
            line: 0,
            message: format!("missing coefficient `{k}`"),
        };
        MetricSpec::new(
            a.ok_or_else(|| missing("A"))?,
            b.ok_or_else(|| missing("B"))?,
            c.ok_or_else(|| missing("C"))?,
            constants,
            domain,
        )
    }

    /// Inserts or replaces a constant binding (CLI `--const` override).
    pub fn override_constant(&mut self, name: &str, value: f64) {
        self.constants.insert(name.to_string(), value);
    }

    fn check_bindings(&self) -> Result<()> {
        let mut referenced = BTreeSet::new();
        self.a.constant_names(&mut referenced);
        self.b.constant_names(&mut referenced);
        self.c.constant_names(&mut referenced);
        self.domain.constant_names(&mut referenced);
        for name in referenced {
            if !self.constants.contains_key(&name) {
                return Err(Error::UnboundConstant(name));
            }
        }
        Ok(())
    }

    /// True iff `p` satisfies every domain constraint.
    pub fn admits(&self, p: &Point4) -> Result<bool> {
        self.domain.satisfies(p, &self.constants)
    }

    /// Evaluates the coefficient jets at `p`, enforcing that the point is in
    /// the domain and that the positivity chain A > C > B > 0 holds.
    pub fn bundle_at(&self, p: &Point4) -> Result<PointJetBundle> {
        if let Some(violated) = self.domain.first_violated(p, &self.constants)? {
            return Err(Error::OutsideDomain {
                point: p.to_string(),
                constraint: violated.to_string(),
            });
        }
        let a = self.a.eval_jet(p, &self.constants)?;
        let b = self.b.eval_jet(p, &self.constants)?;
        let c = self.c.eval_jet(p, &self.constants)?;
        PointJetBundle::from_jets(*p, a, b, c)
    }
}

/// Values and first partials of A, B, C at a point: the complete input to
/// every pointwise tensor formula.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PointJetBundle {
    pub point: Point4,
    pub a: Jet,
    pub b: Jet,
    pub c: Jet,
}

impl PointJetBundle {
    /// Validates the positivity chain A > C > B > 0 and finiteness.
    pub fn from_jets(point: Point4, a: Jet, b: Jet, c: Jet) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && c.is_finite()) {
            return Err(Error::Domain("non-finite coefficient jet".into()));
        }
        let ordering: [(&'static str, &'static str, &'static str, f64, f64); 3] = [
            ("A > C", "A", "C", a.value, c.value),
            ("C > B", "C", "B", c.value, b.value),
            ("B > 0", "B", "0", b.value, 0.0),
        ];
        for (relation, lhs, rhs, lhs_value, rhs_value) in ordering {
            if lhs_value <= rhs_value {
                return Err(Error::Ordering {
                    relation,
                    lhs,
                    rhs,
                    lhs_value,
                    rhs_value,
                    point: point.to_string(),
                });
            }
        }
        Ok(PointJetBundle { point, a, b, c })
    }

    pub fn coeff(&self, which: Coeff) -> Jet {
        match which {
            Coeff::A => self.a,
            Coeff::B => self.b,
            Coeff::C => self.c,
        }
    }
}

/// Coefficients of the closed-form inverse metric: g⁻¹ is the circulant
/// matrix with first row (Ā, B̄, C̄, B̄)/D.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InverseData {
    pub a_bar: f64,
    pub b_bar: f64,
    pub c_bar: f64,
    pub d: f64,
}

/// The metric matrix at a point.
pub fn metric_at(b: &PointJetBundle) -> Matrix4 {
    Matrix4::from_fn(|j, k| b.coeff(metric_slot(j, k)).value)
}

/// The associated metric g̃(x, y) = g(x, Py) at a point; equals g·P.
pub fn associated_metric_at(b: &PointJetBundle) -> Matrix4 {
    Matrix4::from_fn(|j, k| b.coeff(associated_slot(j, k)).value)
}

/// Closed-form inverse metric:
///
/// ```text
/// Ā = A(A+C) - 2B²,  B̄ = B(C-A),  C̄ = 2B² - C(A+C),
/// D = (A-C)[(A+C)² - 4B²]
/// ```
///
/// D > 0 whenever A > C > B > 0, which the bundle already guarantees.
pub fn inverse_closed(b: &PointJetBundle) -> Result<(Matrix4, InverseData)> {
    let (a, bb, c) = (b.a.value, b.b.value, b.c.value);
    let data = InverseData {
        a_bar: a * (a + c) - 2.0 * bb * bb,
        b_bar: bb * (c - a),
        c_bar: 2.0 * bb * bb - c * (a + c),
        d: (a - c) * ((a + c) * (a + c) - 4.0 * bb * bb),
    };
    if data.d == 0.0 {
        return Err(Error::Singular("inverse coefficient D is zero".into()));
    }
    let entry = |which: Coeff| match which {
        Coeff::A => data.a_bar,
        Coeff::B => data.b_bar,
        Coeff::C => data.c_bar,
    };
    let matrix = Matrix4::from_fn(|j, k| entry(metric_slot(j, k)) / data.d);
    Ok((matrix, data))
}

fn is_reserved(name: &str) -> bool {
    matches!(name, "exp" | "ln" | "sinh" | "cosh" | "sqrt")
        || (name.starts_with('x')
            && name.len() > 1
            && name[1..].chars().all(|ch| ch.is_ascii_digit()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Constants;

    fn w0_spec() -> MetricSpec {
        MetricSpec::parse_str(
            "A = x1^2 + x2^2 + x3^2 + x4^2\n\
             B = x1 + x2 + x3 + x4\n\
             C = 2*x1*x3 + 2*x2*x4\n\
             domain: 1 < x1\n\
             domain: 1 < x2\n\
             domain: 1 < x3\n\
             domain: 1 < x4\n",
        )
        .unwrap()
    }

    fn pt(x: [f64; 4]) -> Point4 {
        Point4::new(x).unwrap()
    }

    #[test]
    fn q_is_the_cyclic_shift() {
        let q = q_matrix();
        assert_eq!(q.rows()[0], [0.0, 1.0, 0.0, 0.0]);
        let q2 = q.mul(&q);
        let q4 = q2.mul(&q2);
        assert_eq!(q4, Matrix4::identity());
        // Q² is neither the identity nor its negative
        assert_ne!(q2, Matrix4::identity());
        assert_ne!(q2, Matrix4::from_fn(|i, j| if i == j { -1.0 } else { 0.0 }));
    }

    #[test]
    fn p_is_q_squared_with_involution_and_zero_trace() {
        let p = p_matrix();
        assert_eq!(p, q_matrix().mul(&q_matrix()));
        assert_eq!(p.mul(&p), Matrix4::identity());
        assert_eq!(p.trace(), 0.0);
        assert_eq!(
            p.rows(),
            [
                [0.0, 0.0, 1.0, 0.0],
                [0.0, 0.0, 0.0, 1.0],
                [1.0, 0.0, 0.0, 0.0],
                [0.0, 1.0, 0.0, 0.0],
            ]
        );
    }

    #[test]
    fn bundle_values_on_examples() {
        let spec = w0_spec();
        let b = spec.bundle_at(&pt([2.0, 3.0, 4.0, 5.0])).unwrap();
        assert_eq!(b.a.value, 54.0);
        assert_eq!(b.b.value, 14.0);
        assert_eq!(b.c.value, 46.0);

        // A = C = 16 at the diagonal point: ordering violated
        let err = spec.bundle_at(&pt([2.0, 2.0, 2.0, 2.0])).unwrap_err();
        match err {
            Error::Ordering { relation, lhs_value, .. } => {
                assert_eq!(relation, "A > C");
                assert_eq!(lhs_value, 16.0);
            }
            other => panic!("unexpected error {other:?}"),
        }

        // outside the declared domain
        assert!(matches!(
            spec.bundle_at(&pt([0.5, 3.0, 4.0, 5.0])),
            Err(Error::OutsideDomain { .. })
        ));
    }

    #[test]
    fn linear_coefficient_bundle() {
        let spec = MetricSpec::parse_str(
            "const a = 3\nconst b = 1\nconst c = 2\n\
             A = a*(x1 + x2 + x3 + x4)\n\
             B = b*(x1 + x2 + x3 + x4)\n\
             C = c*(x1 + x2 + x3 + x4)\n\
             domain: 0 < x1 + x2 + x3 + x4\n",
        )
        .unwrap();
        let b = spec.bundle_at(&pt([1.0, 1.0, 1.0, 1.0])).unwrap();
        assert_eq!(b.a.value, 12.0);
        assert_eq!(b.b.value, 4.0);
        assert_eq!(b.c.value, 8.0);
        assert_eq!(b.a.partials, [3.0; 4]);
    }

    #[test]
    fn metric_rows_and_invariance() {
        let spec = w0_spec();
        let b = spec.bundle_at(&pt([2.0, 3.0, 4.0, 5.0])).unwrap();
        let g = metric_at(&b);
        assert_eq!(g.rows()[0], [54.0, 14.0, 46.0, 14.0]);
        assert_eq!(g, g.transpose());

        // g(Qx, Qy) = g(x, y) and g(Px, Py) = g(x, y)
        let q = q_matrix();
        assert!(q.transpose().mul(&g).mul(&q).max_rel_dev(&g) < 1e-15);
        let p = p_matrix();
        assert!(p.transpose().mul(&g).mul(&p).max_rel_dev(&g) < 1e-15);

        // positive definite at this point
        for k in 1..=4 {
            assert!(g.leading_minor(k) > 0.0, "minor {k} not positive");
        }
    }

    #[test]
    fn associated_metric_is_g_times_p() {
        let spec = w0_spec();
        let b = spec.bundle_at(&pt([2.0, 3.0, 4.0, 5.0])).unwrap();
        let g = metric_at(&b);
        let gt = associated_metric_at(&b);
        assert_eq!(gt.rows()[0], [46.0, 14.0, 54.0, 14.0]);
        assert_eq!(gt, gt.transpose());
        assert!(gt.max_rel_dev(&g.mul(&p_matrix())) < 1e-15);
        assert!(gt.max_rel_dev(&p_matrix().transpose().mul(&g)) < 1e-15);
    }

    #[test]
    fn closed_inverse_matches_hand_values_and_elimination() {
        let spec = w0_spec();
        let b = spec.bundle_at(&pt([2.0, 3.0, 4.0, 5.0])).unwrap();
        let (inv, data) = inverse_closed(&b).unwrap();
        assert_eq!(data.d, 73728.0);
        assert_eq!(data.a_bar, 5008.0);
        assert_eq!(data.b_bar, -112.0);
        assert_eq!(data.c_bar, -4208.0);

        let g = metric_at(&b);
        assert!(g.mul(&inv).max_rel_dev(&Matrix4::identity()) < 1e-12);
        let numeric = g.inverse_numeric().unwrap();
        assert!(inv.max_rel_dev(&numeric) < 1e-10);
    }

    #[test]
    fn mspec_parse_errors() {
        assert!(matches!(
            MetricSpec::parse_str("A = x1\nB = x1\n"),
            Err(Error::MetricFile { .. })
        ));
        assert!(matches!(
            MetricSpec::parse_str("A = x1\nA = x2\nB = x1\nC = x1\n"),
            Err(Error::MetricFile { line: 2, .. })
        ));
        assert!(matches!(
            MetricSpec::parse_str("A = q*x1\nB = x1\nC = x1\n"),
            Err(Error::UnboundConstant(_))
        ));
        assert!(matches!(
            MetricSpec::parse_str("const exp = 1\nA = x1\nB = x1\nC = x1\n"),
            Err(Error::MetricFile { .. })
        ));
        // comments and blank lines are fine
        let ok = MetricSpec::parse_str(
            "# sample\n\nA = x1 + 2 # trailing comment\nB = x1\nC = x1 + 1\n",
        );
        assert!(ok.is_ok());
    }

    #[test]
    fn invariances_hold_across_the_corpus() {
        // ~1000 random admitted points over all builtin metrics
        use crate::classifier::{sample_admitted, SamplePlan};
        let q = q_matrix();
        let p = p_matrix();
        for entry in crate::corpus::corpus() {
            let plan = SamplePlan::new(200, 11, entry.bbox);
            for b in sample_admitted(&entry.spec, &plan).unwrap() {
                let g = metric_at(&b);
                let scale = 1.0 + g.max_abs();
                let qgq = q.transpose().mul(&g).mul(&q);
                let pgp = p.transpose().mul(&g).mul(&p);
                assert!(qgq.max_rel_dev(&g) * scale < 1e-10 * scale);
                assert!(pgp.max_rel_dev(&g) * scale < 1e-10 * scale);

                let (inv, data) = inverse_closed(&b).unwrap();
                assert!(data.d > 0.0, "{}: D = {}", entry.name, data.d);
                assert!(
                    g.mul(&inv).max_rel_dev(&Matrix4::identity()) < 1e-10,
                    "{}: inverse product off at {}",
                    entry.name,
                    b.point
                );

                let gt = associated_metric_at(&b);
                assert!(gt.max_rel_dev(&g.mul(&p)) < 1e-12);
                assert!(gt.max_rel_dev(&p.transpose().mul(&g)) < 1e-12);
            }
        }
    }

    #[test]
    fn corpus_expressions_roundtrip_through_printer() {
        for entry in crate::corpus::corpus() {
            for field in [&entry.spec.a, &entry.spec.b, &entry.spec.c] {
                let printed = field.to_string();
                let reparsed = crate::expr::ScalarField::parse(&printed).unwrap();
                assert_eq!(&reparsed, field, "{}: `{printed}`", entry.name);
            }
            for constraint in entry.spec.domain.iter() {
                for field in [&constraint.lhs, &constraint.rhs] {
                    let reparsed =
                        crate::expr::ScalarField::parse(&field.to_string()).unwrap();
                    assert_eq!(&reparsed, field);
                }
            }
        }
    }

    #[test]
    fn constants_override() {
        let mut spec = MetricSpec::parse_str(
            "const a = 3\nA = a*x1\nB = x1\nC = 2*x1\ndomain: 1 < x1\n",
        )
        .unwrap();
        spec.override_constant("a", 5.0);
        let b = spec.bundle_at(&pt([2.0, 1.0, 1.0, 1.0])).unwrap();
        assert_eq!(b.a.value, 10.0);
        assert_eq!(Constants::from([("a".to_string(), 5.0)]), spec.constants);
    }
}
