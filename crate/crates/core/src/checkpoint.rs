//! Sweep checkpoints: the integer tallies of a sweep over an index range,
//! their text format, and the deterministic merge.
//!
//! ```text
//! ctm-checkpoint v1
//! n=<n> blank=<zero|dual> max_steps=<t> range=<lo>:<hi>[,<lo>:<hi>...]
//! halting=<count> nonhalting=<count>
//! <string>\t<count>          (sorted lexicographically)
//! #joint
//! <length>\t<steps>\t<count> (sorted by length, then steps)
//! ```

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{CtmError, Result};

pub const CHECKPOINT_MAGIC: &str = "ctm-checkpoint v1";
const JOINT_SENTINEL: &str = "#joint";
const BELOW_BB_WARNING: &str = "warning=max_steps_below_busy_beaver";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BlankMode {
    /// Every machine runs once, on a tape of 0s.
    ZeroOnly,
    /// Every machine runs on a tape of 0s and again on a tape of 1s.
    Dual,
}

impl BlankMode {
    pub fn runs_per_machine(self) -> u64 {
        match self {
            BlankMode::ZeroOnly => 1,
            BlankMode::Dual => 2,
        }
    }

    pub fn blanks(self) -> &'static [u8] {
        match self {
            BlankMode::ZeroOnly => &[0],
            BlankMode::Dual => &[0, 1],
        }
    }
}

impl fmt::Display for BlankMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BlankMode::ZeroOnly => "zero",
            BlankMode::Dual => "dual",
        })
    }
}

impl FromStr for BlankMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "zero" | "0" => Ok(BlankMode::ZeroOnly),
            "dual" => Ok(BlankMode::Dual),
            other => Err(format!("unknown blank mode {other:?}")),
        }
    }
}

/// Half-open index range `[lo, hi)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IndexRange {
    pub lo: u64,
    pub hi: u64,
}

impl IndexRange {
    pub fn new(lo: u64, hi: u64) -> Self {
        IndexRange { lo, hi }
    }

    pub fn len(&self) -> u64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo
    }

    /// Shard `k` of `total`: `[floor(k N / T), floor((k+1) N / T))`.
    pub fn shard(count: u64, shard_id: u32, shard_total: u32) -> Result<Self> {
        if shard_total == 0 || shard_id >= shard_total {
            return Err(CtmError::InvalidShard {
                shard_id,
                shard_total,
            });
        }
        let bound = |k: u32| (count as u128 * k as u128 / shard_total as u128) as u64;
        Ok(IndexRange::new(bound(shard_id), bound(shard_id + 1)))
    }
}

impl fmt::Display for IndexRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.lo, self.hi)
    }
}

/// Sorts ranges, rejects overlaps and joins adjacent ones.
pub fn normalize_ranges(mut ranges: Vec<IndexRange>) -> Result<Vec<IndexRange>> {
    ranges.sort();
    let mut out: Vec<IndexRange> = Vec::with_capacity(ranges.len());
    for r in ranges {
        match out.last_mut() {
            Some(last) if r.lo < last.hi => {
                return Err(CtmError::OverlappingRanges(last.to_string(), r.to_string()))
            }
            Some(last) if r.lo == last.hi => last.hi = r.hi,
            _ => out.push(r),
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckpointHeader {
    pub states: u32,
    pub blank_mode: BlankMode,
    pub max_steps: u32,
    pub ranges: Vec<IndexRange>,
    /// Set when `max_steps` is below the busy-beaver step count, in which
    /// case halters are undercounted.
    pub below_busy_beaver: bool,
}

impl CheckpointHeader {
    pub fn machines(&self) -> u64 {
        self.ranges.iter().map(IndexRange::len).sum()
    }

    pub fn expected_runs(&self) -> u64 {
        self.machines() * self.blank_mode.runs_per_machine()
    }

    fn compatible(&self, other: &CheckpointHeader) -> Result<()> {
        if self.states != other.states
            || self.blank_mode != other.blank_mode
            || self.max_steps != other.max_steps
        {
            return Err(CtmError::IncompatibleCheckpoints(format!(
                "n={} blank={} max_steps={} vs n={} blank={} max_steps={}",
                self.states,
                self.blank_mode,
                self.max_steps,
                other.states,
                other.blank_mode,
                other.max_steps
            )));
        }
        Ok(())
    }

    fn ranges_text(&self) -> String {
        self.ranges
            .iter()
            .map(IndexRange::to_string)
            .collect::<Vec<_>>()
            .join(",")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShardCheckpoint {
    pub header: CheckpointHeader,
    pub halting: u64,
    pub nonhalting: u64,
    pub strings: BTreeMap<String, u64>,
    /// `(output length, halting step) -> count`.
    pub joint: BTreeMap<(u32, u32), u64>,
}

impl ShardCheckpoint {
    pub fn empty(header: CheckpointHeader) -> Self {
        ShardCheckpoint {
            header,
            halting: 0,
            nonhalting: 0,
            strings: BTreeMap::new(),
            joint: BTreeMap::new(),
        }
    }

    pub fn is_full_range(&self, count: u64) -> bool {
        self.header.ranges == [IndexRange::new(0, count)]
    }

    pub fn validate(&self) -> Result<()> {
        let string_total: u64 = self.strings.values().sum();
        if string_total != self.halting {
            return Err(CtmError::Invariant(format!(
                "string counts sum to {string_total}, halting={}",
                self.halting
            )));
        }
        let joint_total: u64 = self.joint.values().sum();
        if joint_total != self.halting {
            return Err(CtmError::Invariant(format!(
                "joint histogram sums to {joint_total}, halting={}",
                self.halting
            )));
        }
        let runs = self.halting + self.nonhalting;
        if runs != self.header.expected_runs() {
            return Err(CtmError::Invariant(format!(
                "{runs} runs recorded, {} expected for {}",
                self.header.expected_runs(),
                self.header.ranges_text()
            )));
        }
        if let Some(s) = self
            .strings
            .keys()
            .find(|s| s.is_empty() || !s.bytes().all(|b| b == b'0' || b == b'1'))
        {
            return Err(CtmError::InvalidString(s.clone()));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let h = &self.header;
        let mut out = String::new();
        out.push_str(CHECKPOINT_MAGIC);
        out.push('\n');
        write!(
            out,
            "n={} blank={} max_steps={} range={}",
            h.states,
            h.blank_mode,
            h.max_steps,
            h.ranges_text()
        )
        .unwrap();
        if h.below_busy_beaver {
            out.push(' ');
            out.push_str(BELOW_BB_WARNING);
        }
        writeln!(
            out,
            "\nhalting={} nonhalting={}",
            self.halting, self.nonhalting
        )
        .unwrap();
        for (s, c) in &self.strings {
            writeln!(out, "{s}\t{c}").unwrap();
        }
        out.push_str(JOINT_SENTINEL);
        out.push('\n');
        for ((len, steps), c) in &self.joint {
            writeln!(out, "{len}\t{steps}\t{c}").unwrap();
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| CtmError::parse(0, format!("missing {what}")))
        };
        let (ln, magic) = next("magic line")?;
        if magic != CHECKPOINT_MAGIC {
            return Err(CtmError::parse(
                ln,
                format!("expected {CHECKPOINT_MAGIC:?}"),
            ));
        }

        let (ln, line) = next("header line")?;
        let mut states = None;
        let mut blank_mode = None;
        let mut max_steps = None;
        let mut ranges = None;
        let mut below_busy_beaver = false;
        for token in line.split_whitespace() {
            if token == BELOW_BB_WARNING {
                below_busy_beaver = true;
                continue;
            }
            let (key, value) = token
                .split_once('=')
                .ok_or_else(|| CtmError::parse(ln, format!("bad token {token:?}")))?;
            match key {
                "n" => states = Some(parse_num::<u32>(ln, value)?),
                "blank" => blank_mode = Some(value.parse().map_err(|e| CtmError::parse(ln, e))?),
                "max_steps" => max_steps = Some(parse_num::<u32>(ln, value)?),
                "range" => ranges = Some(parse_ranges(ln, value)?),
                other => return Err(CtmError::parse(ln, format!("unknown key {other:?}"))),
            }
        }
        let missing = |k: &str| CtmError::parse(ln, format!("missing {k}"));
        let header = CheckpointHeader {
            states: states.ok_or_else(|| missing("n"))?,
            blank_mode: blank_mode.ok_or_else(|| missing("blank"))?,
            max_steps: max_steps.ok_or_else(|| missing("max_steps"))?,
            ranges: ranges.ok_or_else(|| missing("range"))?,
            below_busy_beaver,
        };

        let (ln, line) = next("totals line")?;
        let (h, nh) = line
            .split_once(' ')
            .ok_or_else(|| CtmError::parse(ln, "expected halting=<c> nonhalting=<c>"))?;
        let halting = parse_num::<u64>(ln, field(ln, h, "halting")?)?;
        let nonhalting = parse_num::<u64>(ln, field(ln, nh, "nonhalting")?)?;

        let mut strings = BTreeMap::new();
        let mut joint = BTreeMap::new();
        let mut in_joint = false;
        for (ln, line) in lines {
            if line == JOINT_SENTINEL {
                in_joint = true;
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if in_joint {
                let [len, steps, count] = cols[..] else {
                    return Err(CtmError::parse(ln, "expected <length>\\t<steps>\\t<count>"));
                };
                let key = (parse_num(ln, len)?, parse_num(ln, steps)?);
                if joint.insert(key, parse_num(ln, count)?).is_some() {
                    return Err(CtmError::parse(ln, "duplicate joint row"));
                }
            } else {
                let [s, count] = cols[..] else {
                    return Err(CtmError::parse(ln, "expected <string>\\t<count>"));
                };
                if strings
                    .insert(s.to_string(), parse_num(ln, count)?)
                    .is_some()
                {
                    return Err(CtmError::parse(ln, format!("duplicate string {s}")));
                }
            }
        }
        if !in_joint {
            return Err(CtmError::parse(0, "missing #joint section"));
        }
        let ckpt = ShardCheckpoint {
            header,
            halting,
            nonhalting,
            strings,
            joint,
        };
        ckpt.validate()?;
        Ok(ckpt)
    }

    /// Writes to a temporary sibling and renames it into place.
    pub fn save_atomic(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        let write = || -> std::io::Result<()> {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            let mut f = fs::File::create(&tmp)?;
            f.write_all(self.to_text().as_bytes())?;
            f.sync_all()?;
            fs::rename(&tmp, path)
        };
        write().map_err(|e| CtmError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CtmError::io(path, e))?;
        ShardCheckpoint::parse(&text).map_err(|e| CtmError::CorruptCheckpoint {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Adds another tally over the same header into this one.
    pub(crate) fn absorb(&mut self, other: &ShardCheckpoint) {
        self.halting += other.halting;
        self.nonhalting += other.nonhalting;
        for (s, c) in &other.strings {
            *self.strings.entry(s.clone()).or_insert(0) += c;
        }
        for (k, c) in &other.joint {
            *self.joint.entry(*k).or_insert(0) += c;
        }
    }
}

fn field<'a>(ln: usize, token: &'a str, key: &str) -> Result<&'a str> {
    token
        .strip_prefix(key)
        .and_then(|t| t.strip_prefix('='))
        .ok_or_else(|| CtmError::parse(ln, format!("expected {key}=<count>")))
}

fn parse_num<T: FromStr>(ln: usize, s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| CtmError::parse(ln, format!("bad number {s:?}")))
}

fn parse_ranges(ln: usize, s: &str) -> Result<Vec<IndexRange>> {
    let ranges = s
        .split(',')
        .map(|r| {
            let (lo, hi) = r
                .split_once(':')
                .ok_or_else(|| CtmError::parse(ln, format!("bad range {r:?}")))?;
            let range = IndexRange::new(parse_num(ln, lo)?, parse_num(ln, hi)?);
            if range.is_empty() {
                return Err(CtmError::parse(ln, format!("empty range {r:?}")));
            }
            Ok(range)
        })
        .collect::<Result<Vec<_>>>()?;
    let normalized = normalize_ranges(ranges.clone())?;
    if normalized != ranges {
        return Err(CtmError::parse(ln, "ranges not in canonical form"));
    }
    Ok(ranges)
}

/// Field-wise sum of checkpoints over disjoint ranges of one sweep.
pub fn merge_checkpoints(parts: &[ShardCheckpoint]) -> Result<ShardCheckpoint> {
    let (first, rest) = parts.split_first().ok_or(CtmError::EmptyMerge)?;
    for p in rest {
        first.header.compatible(&p.header)?;
    }
    let ranges = normalize_ranges(
        parts
            .iter()
            .flat_map(|p| p.header.ranges.iter().copied())
            .collect(),
    )?;
    let mut merged = ShardCheckpoint::empty(CheckpointHeader {
        ranges,
        below_busy_beaver: parts.iter().any(|p| p.header.below_busy_beaver),
        ..first.header.clone()
    });
    for p in parts {
        merged.absorb(p);
    }
    Ok(merged)
}
