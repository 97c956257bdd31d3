//! Output-frequency distributions built from full-space checkpoints.
//!
//! Counts stay integral; probabilities are computed on demand as
//! `count / halting_total`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::checkpoint::{BlankMode, ShardCheckpoint};
use crate::enumeration::machine_count;
use crate::error::{CtmError, Result};

pub const DIST_MAGIC: &str = "ctm-dist v1";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Distribution {
    pub states: u32,
    pub halting_total: u64,
    pub counts: BTreeMap<String, u64>,
}

/// Canonical ranking: descending count, then ascending length, then
/// lexicographic.
pub fn canonical_order(a: (&str, u64), b: (&str, u64)) -> Ordering {
    b.1.cmp(&a.1)
        .then(a.0.len().cmp(&b.0.len()))
        .then(a.0.cmp(b.0))
}

pub fn validate_binary(s: &str) -> Result<()> {
    if s.is_empty() || !s.bytes().all(|b| b == b'0' || b == b'1') {
        Err(CtmError::InvalidString(s.to_string()))
    } else {
        Ok(())
    }
}

pub fn complement(s: &str) -> String {
    s.chars()
        .map(|c| if c == '0' { '1' } else { '0' })
        .collect()
}

pub fn reverse(s: &str) -> String {
    s.chars().rev().collect()
}

impl Distribution {
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn count(&self, s: &str) -> Option<u64> {
        self.counts.get(s).copied()
    }

    pub fn probability(&self, s: &str) -> Option<f64> {
        self.count(s).map(|c| self.ratio(c))
    }

    pub fn ratio(&self, count: u64) -> f64 {
        count as f64 / self.halting_total as f64
    }

    /// Entries in canonical rank order.
    pub fn ranked(&self) -> Vec<(&str, u64)> {
        let mut rows: Vec<(&str, u64)> =
            self.counts.iter().map(|(s, &c)| (s.as_str(), c)).collect();
        rows.sort_by(|a, b| canonical_order(*a, *b));
        rows
    }

    pub fn max_length(&self) -> usize {
        self.counts.keys().map(String::len).max().unwrap_or(0)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{DIST_MAGIC} n={} d={}\n", self.states, self.halting_total);
        for (s, c) in self.ranked() {
            writeln!(out, "{s}\t{c}\t{}", format_sig(self.ratio(c))).unwrap();
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (ln, header) = lines
            .next()
            .ok_or_else(|| CtmError::parse(1, "empty file"))?;
        let rest = header
            .strip_prefix(DIST_MAGIC)
            .ok_or_else(|| CtmError::parse(ln, format!("expected {DIST_MAGIC:?}")))?;
        let mut states = None;
        let mut total = None;
        for token in rest.split_whitespace() {
            match token.split_once('=') {
                Some(("n", v)) => states = v.parse().ok(),
                Some(("d", v)) => total = v.parse().ok(),
                _ => return Err(CtmError::parse(ln, format!("bad token {token:?}"))),
            }
        }
        let states = states.ok_or_else(|| CtmError::parse(ln, "missing n"))?;
        let halting_total = total.ok_or_else(|| CtmError::parse(ln, "missing d"))?;
        let mut counts = BTreeMap::new();
        for (ln, line) in lines {
            let mut cols = line.split('\t');
            let (Some(s), Some(c)) = (cols.next(), cols.next()) else {
                return Err(CtmError::parse(
                    ln,
                    "expected <string>\\t<count>\\t<probability>",
                ));
            };
            validate_binary(s)?;
            let c: u64 = c
                .parse()
                .map_err(|_| CtmError::parse(ln, format!("bad count {c:?}")))?;
            if c == 0 || counts.insert(s.to_string(), c).is_some() {
                return Err(CtmError::parse(ln, format!("bad or duplicate entry {s}")));
            }
        }
        let sum: u64 = counts.values().sum();
        if sum != halting_total {
            return Err(CtmError::Invariant(format!(
                "counts sum to {sum}, header says d={halting_total}"
            )));
        }
        Ok(Distribution {
            states,
            halting_total,
            counts,
        })
    }
}

/// Twelve significant digits.
pub fn format_sig(x: f64) -> String {
    format!("{x:.11e}")
}

pub fn build_distribution(checkpoint: &ShardCheckpoint) -> Result<Distribution> {
    let header = &checkpoint.header;
    if !checkpoint.is_full_range(machine_count(header.states)?) {
        return Err(CtmError::PartialRange(
            header
                .ranges
                .iter()
                .map(|r| r.to_string())
                .collect::<Vec<_>>()
                .join(","),
        ));
    }
    if header.blank_mode == BlankMode::ZeroOnly {
        return Err(CtmError::NeedsCompletion);
    }
    checkpoint.validate()?;
    Ok(Distribution {
        states: header.states,
        halting_total: checkpoint.halting,
        counts: checkpoint.strings.clone(),
    })
}

/// Credits every output of a zero-blank sweep to its complement as well,
/// standing in for the blank-1 runs. Reversals are not added: mirrored
/// machines are already part of the enumeration.
pub fn complete_by_symmetry(checkpoint: &ShardCheckpoint) -> Result<ShardCheckpoint> {
    let header = &checkpoint.header;
    if header.blank_mode == BlankMode::Dual {
        return Err(CtmError::AlreadyDual);
    }
    if !checkpoint.is_full_range(machine_count(header.states)?) {
        return Err(CtmError::PartialRange(format!("{:?}", header.ranges)));
    }
    let mut out = ShardCheckpoint::empty(header.clone());
    out.header.blank_mode = BlankMode::Dual;
    out.halting = 2 * checkpoint.halting;
    out.nonhalting = 2 * checkpoint.nonhalting;
    for (s, &c) in &checkpoint.strings {
        *out.strings.entry(s.clone()).or_insert(0) += c;
        *out.strings.entry(complement(s)).or_insert(0) += c;
    }
    for (&k, &c) in &checkpoint.joint {
        out.joint.insert(k, 2 * c);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StringGroup {
    /// Lexicographically smallest member.
    pub representative: String,
    /// Sorted closure under reversal and complementation.
    pub members: Vec<String>,
    pub group_count: u64,
}

pub fn string_group(s: &str) -> Result<StringGroup> {
    validate_binary(s)?;
    let c = complement(s);
    let members: BTreeSet<String> = [reverse(s), reverse(&c), c, s.to_string()].into();
    let members: Vec<String> = members.into_iter().collect();
    Ok(StringGroup {
        representative: members[0].clone(),
        members,
        group_count: 0,
    })
}

/// All string groups of a distribution with their total counts, ordered by
/// descending count, then by representative.
pub fn string_groups(dist: &Distribution) -> Vec<StringGroup> {
    let mut groups: BTreeMap<String, StringGroup> = BTreeMap::new();
    for (s, &c) in &dist.counts {
        let g = string_group(s).expect("distribution keys are binary strings");
        groups
            .entry(g.representative.clone())
            .or_insert(g)
            .group_count += c;
    }
    let mut out: Vec<StringGroup> = groups.into_values().collect();
    out.sort_by(|a, b| {
        b.group_count
            .cmp(&a.group_count)
            .then(a.representative.len().cmp(&b.representative.len()))
            .then(a.representative.cmp(&b.representative))
    });
    out
}

pub fn length_distribution(dist: &Distribution) -> BTreeMap<usize, f64> {
    let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
    for (s, &c) in &dist.counts {
        *counts.entry(s.len()).or_insert(0) += c;
    }
    counts
        .into_iter()
        .map(|(l, c)| (l, dist.ratio(c)))
        .collect()
}

pub fn strings_per_length(dist: &Distribution) -> BTreeMap<usize, usize> {
    let mut out = BTreeMap::new();
    for s in dist.counts.keys() {
        *out.entry(s.len()).or_insert(0) += 1;
    }
    out
}

/// Probability of producing a string with exactly `k` ones, for every `k`
/// that occurs (including 0).
pub fn ones_count_distribution(dist: &Distribution) -> BTreeMap<usize, f64> {
    let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
    for (s, &c) in &dist.counts {
        *counts
            .entry(s.bytes().filter(|&b| b == b'1').count())
            .or_insert(0) += c;
    }
    counts
        .into_iter()
        .map(|(k, c)| (k, dist.ratio(c)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checkpoint::{CheckpointHeader, IndexRange};

    fn toy() -> Distribution {
        let counts = [
            ("0", 6),
            ("1", 6),
            ("01", 2),
            ("10", 2),
            ("00", 1),
            ("11", 1),
        ];
        Distribution {
            states: 1,
            halting_total: 18,
            counts: counts.iter().map(|&(s, c)| (s.to_string(), c)).collect(),
        }
    }

    #[test]
    fn groups() {
        let g = string_group("001").unwrap();
        assert_eq!(g.representative, "001");
        assert_eq!(g.members, ["001", "011", "100", "110"]);
        let g = string_group("0110").unwrap();
        assert_eq!(g.members, ["0110", "1001"]);
        let g = string_group("1").unwrap();
        assert_eq!(g.representative, "0");
        assert_eq!(g.members.len(), 2);
        assert!(string_group("").is_err());
        assert!(string_group("012").is_err());
    }

    #[test]
    fn group_totals() {
        let groups = string_groups(&toy());
        assert_eq!(groups[0].representative, "0");
        assert_eq!(groups[0].group_count, 12);
        assert_eq!(groups[1].group_count, 4);
        assert_eq!(groups[2].members, ["00", "11"]);
    }

    #[test]
    fn marginals() {
        let d = toy();
        let lengths = length_distribution(&d);
        assert!((lengths[&1] - 12.0 / 18.0).abs() < 1e-15);
        assert!((lengths.values().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(strings_per_length(&d), BTreeMap::from([(1, 2), (2, 4)]));
        let ones = ones_count_distribution(&d);
        assert!((ones[&0] - 7.0 / 18.0).abs() < 1e-15);
        assert!((ones[&1] - 10.0 / 18.0).abs() < 1e-15);
        assert!((ones[&2] - 1.0 / 18.0).abs() < 1e-15);
    }

    #[test]
    fn ranking_and_text_round_trip() {
        let d = toy();
        let ranked: Vec<&str> = d.ranked().into_iter().map(|r| r.0).collect();
        assert_eq!(ranked, ["0", "1", "01", "10", "00", "11"]);
        let text = d.to_text();
        assert!(text.starts_with("ctm-dist v1 n=1 d=18\n0\t6\t3.33333333333e-1\n"));
        assert_eq!(Distribution::parse(&text).unwrap(), d);
        assert!(Distribution::parse(&text.replace("d=18", "d=19")).is_err());
    }

    fn zero_only(halting: &[(&str, u64)], nonhalting: u64) -> ShardCheckpoint {
        let mut c = ShardCheckpoint::empty(CheckpointHeader {
            states: 1,
            blank_mode: BlankMode::ZeroOnly,
            max_steps: 1,
            ranges: vec![IndexRange::new(0, 36)],
            below_busy_beaver: false,
        });
        for &(s, n) in halting {
            c.strings.insert(s.into(), n);
            c.halting += n;
            *c.joint.entry((s.len() as u32, 1)).or_insert(0) += n;
        }
        c.nonhalting = nonhalting;
        c
    }

    #[test]
    fn completion_swaps_complements() {
        let c = zero_only(&[("0", 5), ("1", 7)], 24);
        let done = complete_by_symmetry(&c).unwrap();
        assert_eq!(done.header.blank_mode, BlankMode::Dual);
        assert_eq!(done.strings["0"], 12);
        assert_eq!(done.strings["1"], 12);
        assert_eq!(done.halting, 24);
        assert_eq!(done.joint[&(1, 1)], 24);
        done.validate().unwrap();
        assert!(matches!(
            complete_by_symmetry(&done),
            Err(CtmError::AlreadyDual)
        ));
    }

    #[test]
    fn build_rejects_partial_and_uncompleted() {
        let c = zero_only(&[("0", 5), ("1", 7)], 24);
        assert!(matches!(
            build_distribution(&c),
            Err(CtmError::NeedsCompletion)
        ));
        let mut partial = complete_by_symmetry(&c).unwrap();
        partial.header.ranges = vec![IndexRange::new(0, 35)];
        assert!(matches!(
            build_distribution(&partial),
            Err(CtmError::PartialRange(_))
        ));
        let d = build_distribution(&complete_by_symmetry(&c).unwrap()).unwrap();
        assert_eq!(d.halting_total, 24);
        assert_eq!(d.probability("0"), Some(0.5));
    }
}
