//! The built-in metric corpus: one representative for each class, shipped
//! as `.mspec` files and embedded into the binary. Each entry carries its
//! default sampling box and the expected classification outcome, which the
//! regression suite reproduces.

use std::collections::BTreeMap;

use crate::classifier::{ClassId, SampleBox, Verdict};
use crate::error::{Error, Result};
use crate::manifold::MetricSpec;

pub const W0_SOURCE: &str = include_str!("../corpus/w0.mspec");
pub const W3BAR_SOURCE: &str = include_str!("../corpus/w3bar.mspec");
pub const W6BAR_SOURCE: &str = include_str!("../corpus/w6bar.mspec");
pub const W1_SOURCE: &str = include_str!("../corpus/w1.mspec");
pub const W2_SOURCE: &str = include_str!("../corpus/w2.mspec");

/// A built-in metric with its documented defaults and expected outcome.
#[derive(Clone, Debug)]
pub struct CorpusEntry {
    pub name: &'static str,
    pub source: &'static str,
    pub spec: MetricSpec,
    pub bbox: SampleBox,
    pub expected_most_specific: ClassId,
    /// Expected verdict for every class predicate.
    pub expected: BTreeMap<ClassId, Verdict>,
}

fn expectations(holds: &[ClassId]) -> BTreeMap<ClassId, Verdict> {
    ClassId::ALL
        .iter()
        .map(|id| {
            let verdict = if holds.contains(id) {
                Verdict::Holds
            } else {
                Verdict::Fails
            };
            (*id, verdict)
        })
        .collect()
}

/// The five built-in entries in a fixed order.
pub fn corpus() -> Vec<CorpusEntry> {
    use ClassId::*;
    let parse = |name: &str, source: &'static str| {
        MetricSpec::parse_str(source)
            .unwrap_or_else(|e| panic!("builtin metric `{name}` failed to parse: {e}"))
    };
    vec![
        CorpusEntry {
            name: "w0",
            source: W0_SOURCE,
            spec: parse("w0", W0_SOURCE),
            bbox: SampleBox::cube(1.1, 5.0),
            expected_most_specific: W0,
            // everything in the lattice holds; parallel Q still fails
            expected: expectations(&[W0, W3bar, W6bar, W1, W2, W1plusW2]),
        },
        CorpusEntry {
            name: "w3bar",
            source: W3BAR_SOURCE,
            spec: parse("w3bar", W3BAR_SOURCE),
            bbox: SampleBox([(2.0, 5.0), (2.0, 5.0), (0.1, 1.0), (0.1, 1.0)]),
            expected_most_specific: W3bar,
            expected: expectations(&[W3bar, W1, W1plusW2]),
        },
        CorpusEntry {
            name: "w6bar",
            source: W6BAR_SOURCE,
            spec: parse("w6bar", W6BAR_SOURCE),
            bbox: SampleBox::cube(0.5, 3.0),
            expected_most_specific: W6bar,
            expected: expectations(&[W6bar, W1, W1plusW2]),
        },
        CorpusEntry {
            name: "w1",
            source: W1_SOURCE,
            spec: parse("w1", W1_SOURCE),
            bbox: SampleBox([(1.2, 1.5), (1.0, 1.2), (1.2, 1.5), (1.0, 1.2)]),
            expected_most_specific: W1,
            expected: expectations(&[W1, W1plusW2]),
        },
        CorpusEntry {
            name: "w2",
            source: W2_SOURCE,
            spec: parse("w2", W2_SOURCE),
            bbox: SampleBox([(1.05, 1.15), (1.05, 1.15), (0.95, 1.05), (0.95, 1.05)]),
            expected_most_specific: W2,
            expected: expectations(&[W2, W1plusW2]),
        },
    ]
}

/// Looks up a built-in entry by name.
pub fn by_name(name: &str) -> Option<CorpusEntry> {
    corpus().into_iter().find(|e| e.name == name)
}

/// Resolves a CLI metric argument: `builtin:<name>` or a file path.
pub fn load_metric(arg: &str) -> Result<(String, MetricSpec, Option<SampleBox>)> {
    if let Some(name) = arg.strip_prefix("builtin:") {
        let entry = by_name(name).ok_or_else(|| {
            Error::Io(format!(
                "unknown builtin metric `{name}` (available: w0, w3bar, w6bar, w1, w2)"
            ))
        })?;
        Ok((format!("builtin:{name}"), entry.spec, Some(entry.bbox)))
    } else {
        let text = std::fs::read_to_string(arg)
            .map_err(|e| Error::Io(format!("cannot read `{arg}`: {e}")))?;
        Ok((arg.to_string(), MetricSpec::parse_str(&text)?, None))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{classify, SamplePlan, Tolerances};

    #[test]
    fn all_entries_parse_and_sample() {
        let entries = corpus();
        assert_eq!(entries.len(), 5);
        for entry in &entries {
            let plan = SamplePlan::new(20, SamplePlan::DEFAULT_SEED, entry.bbox);
            let bundles = crate::classifier::sample_admitted(&entry.spec, &plan).unwrap();
            assert_eq!(bundles.len(), 20, "entry {} under-sampled", entry.name);
        }
    }

    #[test]
    fn corpus_expectations_reproduced_at_small_n() {
        // the acceptance suite runs the full N = 100; a smaller N keeps the
        // unit test fast while still covering every entry
        for entry in corpus() {
            let plan = SamplePlan::new(25, SamplePlan::DEFAULT_SEED, entry.bbox);
            let report = classify(&entry.spec, &plan, &Tolerances::default()).unwrap();
            assert_eq!(
                report.most_specific,
                Some(entry.expected_most_specific),
                "most specific class mismatch for {}",
                entry.name
            );
            for (id, expected) in &entry.expected {
                assert_eq!(
                    report.class(*id).verdict,
                    *expected,
                    "verdict mismatch for {} / {:?}",
                    entry.name,
                    id
                );
            }
        }
    }

    #[test]
    fn lattice_consistency_of_reports() {
        // a report may never hold a class while rejecting one of its
        // superclasses
        use crate::classifier::Verdict;
        for entry in corpus() {
            let plan = SamplePlan::new(25, SamplePlan::DEFAULT_SEED, entry.bbox);
            let report = classify(&entry.spec, &plan, &Tolerances::default()).unwrap();
            for (id, outcome) in &report.classes {
                if outcome.verdict != Verdict::Holds {
                    continue;
                }
                for (other, other_outcome) in &report.classes {
                    if id.is_subclass_of(*other) {
                        assert_ne!(
                            other_outcome.verdict,
                            Verdict::Fails,
                            "{}: {id:?} holds but superclass {other:?} fails",
                            entry.name
                        );
                    }
                }
            }
            if let Some(most) = report.most_specific {
                assert_ne!(
                    report.class(most).verdict,
                    Verdict::Fails,
                    "{}: most specific class was rejected",
                    entry.name
                );
            }
        }
    }

    #[test]
    fn builtin_lookup() {
        assert!(by_name("w2").is_some());
        assert!(by_name("nope").is_none());
        assert!(load_metric("builtin:w0").is_ok());
        assert!(load_metric("builtin:zzz").is_err());
        assert!(load_metric("/no/such/file.mspec").is_err());
    }
}
