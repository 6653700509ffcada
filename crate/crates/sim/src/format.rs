//! Line-oriented instance files.
//!
//! ```text
//! # comment
//! n m
//! i j w      (m lines, 0 <= i < j < n, w in [-15, 15] and w != 0)
//! ```
//!
//! Two comment forms carry metadata and are written back on output:
//! `# seed=<u64>` and `# label=<text>`. Blank lines are skipped; anything
//! else after the `m` edge lines is an error.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use cim_core::{ProblemInstance, COEFF_MAX, MAX_SPINS};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}: non-ASCII input")]
    NotAscii { line: usize },
    #[error("missing header line \"n m\"")]
    MissingHeader,
    #[error("line {line}: malformed header, expected \"n m\"")]
    MalformedHeader { line: usize },
    #[error("line {line}: spin count {n} outside [1, {MAX_SPINS}]")]
    SpinCount { line: usize, n: usize },
    #[error("line {line}: malformed edge, expected \"i j w\"")]
    MalformedEdge { line: usize },
    #[error("line {line}: self-loop on node {i}")]
    SelfLoop { line: usize, i: usize },
    #[error("line {line}: edge ({i}, {j}) must have i < j")]
    Unordered { line: usize, i: usize, j: usize },
    #[error("line {line}: node index {index} out of range for {n} spins")]
    IndexRange { line: usize, index: usize, n: usize },
    #[error("line {line}: weight {w} outside [-15, 15]")]
    WeightRange { line: usize, w: i64 },
    #[error("line {line}: zero weight")]
    ZeroWeight { line: usize },
    #[error("line {line}: duplicate edge ({i}, {j})")]
    DuplicateEdge { line: usize, i: usize, j: usize },
    #[error("header declares {expected} edges, found {found}")]
    EdgeCount { expected: usize, found: usize },
    #[error("line {line}: unexpected data after the last edge")]
    TrailingData { line: usize },
    #[error("line {line}: bad metadata: {reason}")]
    Metadata { line: usize, reason: String },
}

pub fn write_instance(inst: &ProblemInstance) -> String {
    let mut out = String::new();
    if !inst.label().is_empty() {
        writeln!(out, "# label={}", inst.label()).unwrap();
    }
    if inst.seed() != 0 {
        writeln!(out, "# seed={}", inst.seed()).unwrap();
    }
    writeln!(out, "{} {}", inst.n(), inst.edge_count()).unwrap();
    for (i, j, w) in inst.edges() {
        writeln!(out, "{i} {j} {w}").unwrap();
    }
    out
}

fn parse_fields<const N: usize, T: std::str::FromStr>(line: &str) -> Option<[T; N]> {
    let mut it = line.split_whitespace();
    let mut out = Vec::with_capacity(N);
    for _ in 0..N {
        out.push(it.next()?.parse().ok()?);
    }
    if it.next().is_some() {
        return None;
    }
    out.try_into().ok()
}

pub fn read_instance(text: &str) -> Result<ProblemInstance, FormatError> {
    let mut seed = 0u64;
    let mut label = String::new();
    let mut header: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    let mut seen = BTreeSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if !raw.is_ascii() {
            return Err(FormatError::NotAscii { line });
        }
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(v) = comment.strip_prefix("seed=") {
                seed = v.trim().parse().map_err(|_| FormatError::Metadata {
                    line,
                    reason: format!("seed {v:?} is not an unsigned integer"),
                })?;
            } else if let Some(v) = comment.strip_prefix("label=") {
                label = v.to_string();
            }
            continue;
        }
        let Some((n, m)) = header else {
            let [n, m] =
                parse_fields::<2, usize>(trimmed).ok_or(FormatError::MalformedHeader { line })?;
            if !(1..=MAX_SPINS).contains(&n) {
                return Err(FormatError::SpinCount { line, n });
            }
            header = Some((n, m));
            continue;
        };
        if edges.len() == m {
            return Err(FormatError::TrailingData { line });
        }
        let [i, j, w] =
            parse_fields::<3, i64>(trimmed).ok_or(FormatError::MalformedEdge { line })?;
        if i < 0 || j < 0 {
            return Err(FormatError::MalformedEdge { line });
        }
        let (i, j) = (i as usize, j as usize);
        for index in [i, j] {
            if index >= n {
                return Err(FormatError::IndexRange { line, index, n });
            }
        }
        if i == j {
            return Err(FormatError::SelfLoop { line, i });
        }
        if i > j {
            return Err(FormatError::Unordered { line, i, j });
        }
        if w.abs() > COEFF_MAX as i64 {
            return Err(FormatError::WeightRange { line, w });
        }
        if w == 0 {
            return Err(FormatError::ZeroWeight { line });
        }
        if !seen.insert((i, j)) {
            return Err(FormatError::DuplicateEdge { line, i, j });
        }
        edges.push((i, j, w));
    }

    let (n, m) = header.ok_or(FormatError::MissingHeader)?;
    if edges.len() != m {
        return Err(FormatError::EdgeCount {
            expected: m,
            found: edges.len(),
        });
    }
    let inst = ProblemInstance::from_edges(n, &edges).expect("edges validated above");
    Ok(inst.with_seed(seed).with_label(label))
}

#[cfg(test)]
mod tests {
    use super::*;
    use cim_core::generate_random_qubo;
    use proptest::prelude::*;

    #[test]
    fn writes_minimal_files() {
        let inst = ProblemInstance::from_edges(2, &[(0, 1, 3)]).unwrap();
        assert_eq!(write_instance(&inst), "2 1\n0 1 3\n");
        assert_eq!(write_instance(&ProblemInstance::zeros(3)), "3 0\n");
    }

    #[test]
    fn reads_minimal_file() {
        let inst = read_instance("2 1\n0 1 3").unwrap();
        assert_eq!(inst.n(), 2);
        assert_eq!(inst.coupling(0, 1), 3);
        assert_eq!(inst.coupling(1, 0), 3);
        let inst = read_instance("# a comment\n\n3 0\n").unwrap();
        assert_eq!(inst, ProblemInstance::zeros(3));
    }

    #[test]
    fn distinct_diagnostics() {
        use FormatError::*;
        type Check = fn(&FormatError) -> bool;
        let cases: &[(&str, Check)] = &[
            ("2 1\n0 0 3", |e| matches!(e, SelfLoop { .. })),
            ("2 1\n0 1 99", |e| matches!(e, WeightRange { w: 99, .. })),
            ("2 1\n0 1 0", |e| matches!(e, ZeroWeight { .. })),
            ("3 2\n0 1 3\n0 1 4", |e| matches!(e, DuplicateEdge { .. })),
            ("2 1\n0 2 3", |e| matches!(e, IndexRange { index: 2, .. })),
            ("2 1\n1 0 3", |e| matches!(e, Unordered { .. })),
            ("2", |e| matches!(e, MalformedHeader { .. })),
            ("2 x", |e| matches!(e, MalformedHeader { .. })),
            ("", |e| matches!(e, MissingHeader)),
            ("# only comments", |e| matches!(e, MissingHeader)),
            ("65 0", |e| matches!(e, SpinCount { .. })),
            ("2 1\n0 1", |e| matches!(e, MalformedEdge { .. })),
            ("2 1\n0 1 3 4", |e| matches!(e, MalformedEdge { .. })),
            ("2 1\n0 1 3\n0 1 3", |e| matches!(e, TrailingData { .. })),
            ("3 2\n0 1 3", |e| {
                matches!(
                    e,
                    EdgeCount {
                        expected: 2,
                        found: 1
                    }
                )
            }),
            ("2 1\n0 1 3 # x", |e| matches!(e, MalformedEdge { .. })),
            ("2 1\n0 1 \u{e9}", |e| matches!(e, NotAscii { .. })),
            ("# seed=abc\n2 0", |e| matches!(e, Metadata { .. })),
        ];
        for (text, check) in cases {
            let err = read_instance(text).unwrap_err();
            assert!(check(&err), "{text:?} gave {err:?}");
        }
    }

    #[test]
    fn metadata_survives() {
        let inst = generate_random_qubo(8, 0.5, 15, 1234).unwrap();
        let text = write_instance(&inst);
        assert!(text.starts_with("# label=q8_d0.5_s1234\n# seed=1234\n"));
        assert_eq!(read_instance(&text).unwrap(), inst);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn round_trip(n in 2usize..=64, d in 0.01f64..=1.0, seed in any::<u64>()) {
            let inst = generate_random_qubo(n, d, 15, seed).unwrap();
            prop_assert_eq!(read_instance(&write_instance(&inst)).unwrap(), inst);
        }
    }
}
