//! Fusion of character-level and text-line-level recognition results.
//!
//! The two transcriptions of one column are aligned with a minimal edit
//! script. When they differ only by substitutions, each substituted position
//! keeps the more confident symbol; when the script mixes substitutions with
//! insertions or deletions, the whole sequence with the higher mean
//! confidence wins; pure insertions/deletions keep the character result.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoredSequence {
    pub symbols: Vec<String>,
    pub probs: Vec<f64>,
}

impl ScoredSequence {
    pub fn new(symbols: Vec<String>, probs: Vec<f64>) -> Result<Self> {
        let s = Self { symbols, probs };
        s.validate()?;
        Ok(s)
    }

    /// One symbol per `char` of `text`, all at probability `prob`.
    pub fn from_text(text: &str, prob: f64) -> Result<Self> {
        let symbols: Vec<String> = text.chars().map(String::from).collect();
        let probs = vec![prob; symbols.len()];
        Self::new(symbols, probs)
    }

    pub fn validate(&self) -> Result<()> {
        if self.symbols.len() != self.probs.len() {
            return Err(Error::InvalidSequence(format!(
                "{} symbols but {} probabilities",
                self.symbols.len(),
                self.probs.len()
            )));
        }
        if let Some(p) = self.probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidSequence(format!("probability {p} outside [0, 1]")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn text(&self) -> String {
        self.symbols.concat()
    }

    pub fn mean_prob(&self) -> f64 {
        if self.probs.is_empty() {
            0.0
        } else {
            self.probs.iter().sum::<f64>() / self.probs.len() as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditKind {
    Equal,
    Replace,
    Insert,
    Delete,
}

/// One step of a script turning `a` into `b`. `Delete` carries only `a_index`,
/// `Insert` only `b_index`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditOp {
    pub kind: EditKind,
    pub a_index: Option<usize>,
    pub b_index: Option<usize>,
}

/// Minimal unit-cost edit script from `a` to `b`.
///
/// The backtrace runs from the end of both sequences and prefers, among
/// cost-consistent moves, equal, then replace, then delete, then insert.
pub fn edit_script<T: PartialEq>(a: &[T], b: &[T]) -> Vec<EditOp> {
    let (n, m) = (a.len(), b.len());
    let w = m + 1;
    let mut dist = vec![0u32; (n + 1) * w];
    for j in 0..=m {
        dist[j] = j as u32;
    }
    for i in 1..=n {
        dist[i * w] = i as u32;
        for j in 1..=m {
            let sub = dist[(i - 1) * w + j - 1] + u32::from(a[i - 1] != b[j - 1]);
            let del = dist[(i - 1) * w + j] + 1;
            let ins = dist[i * w + j - 1] + 1;
            dist[i * w + j] = sub.min(del).min(ins);
        }
    }

    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = dist[i * w + j];
        if i > 0 && j > 0 {
            let diag = dist[(i - 1) * w + j - 1];
            if a[i - 1] == b[j - 1] && here == diag {
                ops.push(EditOp {
                    kind: EditKind::Equal,
                    a_index: Some(i - 1),
                    b_index: Some(j - 1),
                });
                i -= 1;
                j -= 1;
                continue;
            }
            if a[i - 1] != b[j - 1] && here == diag + 1 {
                ops.push(EditOp {
                    kind: EditKind::Replace,
                    a_index: Some(i - 1),
                    b_index: Some(j - 1),
                });
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && here == dist[(i - 1) * w + j] + 1 {
            ops.push(EditOp {
                kind: EditKind::Delete,
                a_index: Some(i - 1),
                b_index: None,
            });
            i -= 1;
        } else {
            ops.push(EditOp {
                kind: EditKind::Insert,
                a_index: None,
                b_index: Some(j - 1),
            });
            j -= 1;
        }
    }
    ops.reverse();
    ops
}

/// Number of non-equal operations, i.e. the Levenshtein distance.
pub fn edit_distance(ops: &[EditOp]) -> usize {
    ops.iter().filter(|o| o.kind != EditKind::Equal).count()
}

/// Which symbols the mean-probability comparison averages over.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanScope {
    /// Every symbol of each sequence.
    #[default]
    Whole,
    /// Only symbols touched by a non-equal operation.
    Mismatched,
}

impl std::str::FromStr for MeanScope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "whole" => Ok(Self::Whole),
            "mismatched" => Ok(Self::Mismatched),
            other => Err(format!("unknown mean scope {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Char,
    Line,
}

/// The rule that produced a fused sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FuseRule {
    AllEqual,
    ReplaceOnly,
    MeanProbability(Source),
    IndelOnly,
    EmptyChar,
    EmptyLine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuseOutcome {
    pub sequence: ScoredSequence,
    pub rule: FuseRule,
    /// Set when the character sequence was empty and the line result was
    /// taken as-is.
    pub warning: Option<String>,
}

pub fn fuse(char_seq: &ScoredSequence, line_seq: &ScoredSequence) -> FuseOutcome {
    fuse_with(char_seq, line_seq, MeanScope::Whole)
}

pub fn fuse_with(
    char_seq: &ScoredSequence,
    line_seq: &ScoredSequence,
    scope: MeanScope,
) -> FuseOutcome {
    let outcome = |sequence: &ScoredSequence, rule| FuseOutcome {
        sequence: sequence.clone(),
        rule,
        warning: None,
    };
    if char_seq.is_empty() && !line_seq.is_empty() {
        return FuseOutcome {
            warning: Some("empty character sequence; using line recognition".into()),
            ..outcome(line_seq, FuseRule::EmptyChar)
        };
    }
    if line_seq.is_empty() {
        return outcome(char_seq, FuseRule::EmptyLine);
    }

    let script = edit_script(&line_seq.symbols, &char_seq.symbols);
    let has = |k| script.iter().any(|o| o.kind == k);
    let replace = has(EditKind::Replace);
    let indel = has(EditKind::Insert) || has(EditKind::Delete);

    match (replace, indel) {
        (false, false) => outcome(char_seq, FuseRule::AllEqual),
        (false, true) => outcome(char_seq, FuseRule::IndelOnly),
        (true, false) => {
            let mut fused = char_seq.clone();
            for op in script.iter().filter(|o| o.kind == EditKind::Replace) {
                let (li, ci) = (op.a_index.unwrap(), op.b_index.unwrap());
                if line_seq.probs[li] > char_seq.probs[ci] {
                    fused.symbols[ci] = line_seq.symbols[li].clone();
                    fused.probs[ci] = line_seq.probs[li];
                }
            }
            outcome(&fused, FuseRule::ReplaceOnly)
        }
        (true, true) => {
            let (char_mean, line_mean) = match scope {
                MeanScope::Whole => (char_seq.mean_prob(), line_seq.mean_prob()),
                MeanScope::Mismatched => {
                    let mean = |idx: Vec<usize>, probs: &[f64]| {
                        if idx.is_empty() {
                            0.0
                        } else {
                            idx.iter().map(|&i| probs[i]).sum::<f64>() / idx.len() as f64
                        }
                    };
                    let mismatched = script.iter().filter(|o| o.kind != EditKind::Equal);
                    let line_idx = mismatched.clone().filter_map(|o| o.a_index).collect();
                    let char_idx = mismatched.filter_map(|o| o.b_index).collect();
                    (
                        mean(char_idx, &char_seq.probs),
                        mean(line_idx, &line_seq.probs),
                    )
                }
            };
            if line_mean > char_mean {
                outcome(line_seq, FuseRule::MeanProbability(Source::Line))
            } else {
                outcome(char_seq, FuseRule::MeanProbability(Source::Char))
            }
        }
    }
}
