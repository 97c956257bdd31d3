//! Exhaustive sweeps over an `(n,2)` machine space.
//!
//! Two engines produce identical checkpoints:
//!
//! * [`Engine::Exhaustive`] decodes and simulates every index in the range.
//! * [`Engine::Prefix`] simulates partially specified machines, fixing a
//!   transition only when a run first reads it. Every machine that agrees
//!   with a partial table on the transitions actually read behaves the same,
//!   so each leaf of the search is credited with the number of indices in
//!   the range matching it. A run reading a fresh slot that is given a
//!   halting transition halts right there, so once every slot is fixed the
//!   machine has no halting transition left and is tallied as non-halting.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::checkpoint::{BlankMode, CheckpointHeader, IndexRange, ShardCheckpoint};
use crate::enumeration::{decode_digit, machine_count, radix, IndexCursor};
use crate::error::{CtmError, Result};
use crate::machine::{symbols_to_string, Rule, Simulator, MAX_STATES};

/// Busy-beaver values: most 1s `sigma` and most steps `max_steps` over the
/// halting machines of `(n,2)` started on a blank tape.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BusyBeaver {
    pub sigma: u32,
    pub max_steps: u32,
}

pub const BUSY_BEAVER: [BusyBeaver; 4] = [
    BusyBeaver {
        sigma: 1,
        max_steps: 1,
    },
    BusyBeaver {
        sigma: 4,
        max_steps: 6,
    },
    BusyBeaver {
        sigma: 6,
        max_steps: 21,
    },
    BusyBeaver {
        sigma: 13,
        max_steps: 107,
    },
];

/// Known values for `n` in `1..=4`.
pub fn busy_beaver(states: u32) -> Option<BusyBeaver> {
    (1..=4)
        .contains(&states)
        .then(|| BUSY_BEAVER[states as usize - 1])
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Engine {
    Exhaustive,
    #[default]
    Prefix,
}

impl std::str::FromStr for Engine {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "exhaustive" | "brute" => Ok(Engine::Exhaustive),
            "prefix" | "tree" => Ok(Engine::Prefix),
            other => Err(format!("unknown engine {other:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepConfig {
    pub states: u32,
    pub blank_mode: BlankMode,
    pub max_steps: u32,
    pub range: IndexRange,
    /// Worker threads; 0 uses the available parallelism.
    pub jobs: usize,
    pub engine: Engine,
}

impl SweepConfig {
    /// Full-space sweep cut off at the busy-beaver step count.
    pub fn new(states: u32, blank_mode: BlankMode) -> Result<Self> {
        let bb = busy_beaver(states).ok_or(CtmError::UnsupportedStates(states))?;
        Self::with_bound(states, blank_mode, bb.max_steps)
    }

    pub fn with_bound(states: u32, blank_mode: BlankMode, max_steps: u32) -> Result<Self> {
        if states as usize > MAX_STATES {
            return Err(CtmError::UnsupportedStates(states));
        }
        let count = machine_count(states)?;
        Ok(SweepConfig {
            states,
            blank_mode,
            max_steps,
            range: IndexRange::new(0, count),
            jobs: 0,
            engine: Engine::default(),
        })
    }

    pub fn max_steps(mut self, max_steps: u32) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn range(mut self, range: IndexRange) -> Self {
        self.range = range;
        self
    }

    pub fn shard(mut self, shard_id: u32, shard_total: u32) -> Result<Self> {
        self.range = IndexRange::shard(machine_count(self.states)?, shard_id, shard_total)?;
        Ok(self)
    }

    pub fn jobs(mut self, jobs: usize) -> Self {
        self.jobs = jobs;
        self
    }

    pub fn engine(mut self, engine: Engine) -> Self {
        self.engine = engine;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let count = machine_count(self.states)?;
        if self.max_steps == 0 {
            return Err(CtmError::ZeroStepBound);
        }
        if self.range.is_empty() || self.range.hi > count {
            return Err(CtmError::InvalidRange {
                lo: self.range.lo,
                hi: self.range.hi,
                count,
            });
        }
        Ok(())
    }

    /// True when `max_steps` is below the known busy-beaver step count.
    pub fn below_busy_beaver(&self) -> bool {
        busy_beaver(self.states).is_some_and(|bb| self.max_steps < bb.max_steps)
    }

    fn header(&self) -> CheckpointHeader {
        CheckpointHeader {
            states: self.states,
            blank_mode: self.blank_mode,
            max_steps: self.max_steps,
            ranges: vec![self.range],
            below_busy_beaver: self.below_busy_beaver(),
        }
    }
}

/// Longest-running halting machine seen by a sweep; ties go to the smallest
/// index, then to blank 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Champion {
    pub steps: u32,
    pub index: u64,
    pub blank: u8,
}

impl Champion {
    fn better_than(&self, other: &Champion) -> bool {
        (
            other.steps,
            std::cmp::Reverse(other.index),
            std::cmp::Reverse(other.blank),
        ) < (
            self.steps,
            std::cmp::Reverse(self.index),
            std::cmp::Reverse(self.blank),
        )
    }
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub checkpoint: ShardCheckpoint,
    pub champion: Option<Champion>,
}

/// Per-worker accumulator. Outputs up to 128 cells are keyed by their
/// packed bits.
#[derive(Default)]
struct Tally {
    halting: u64,
    nonhalting: u64,
    packed: HashMap<(u8, u128), u64>,
    long: HashMap<String, u64>,
    joint: HashMap<(u32, u32), u64>,
    champion: Option<Champion>,
}

impl Tally {
    #[inline]
    fn record(&mut self, window: &[u8], steps: u32, weight: u64) {
        self.halting += weight;
        if window.len() <= 128 {
            let bits = window.iter().fold(0u128, |acc, &c| (acc << 1) | c as u128);
            *self.packed.entry((window.len() as u8, bits)).or_insert(0) += weight;
        } else {
            *self.long.entry(symbols_to_string(window)).or_insert(0) += weight;
        }
        *self.joint.entry((window.len() as u32, steps)).or_insert(0) += weight;
    }

    fn offer(&mut self, candidate: Champion) {
        if self.champion.is_none_or(|c| candidate.better_than(&c)) {
            self.champion = Some(candidate);
        }
    }

    fn needs_witness(&self, steps: u32) -> bool {
        self.champion.is_none_or(|c| steps >= c.steps)
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.halting += other.halting;
        self.nonhalting += other.nonhalting;
        for (k, c) in other.packed {
            *self.packed.entry(k).or_insert(0) += c;
        }
        for (k, c) in other.long {
            *self.long.entry(k).or_insert(0) += c;
        }
        for (k, c) in other.joint {
            *self.joint.entry(k).or_insert(0) += c;
        }
        if let Some(c) = other.champion {
            self.offer(c);
        }
        self
    }

    fn into_report(self, header: CheckpointHeader) -> SweepReport {
        let mut checkpoint = ShardCheckpoint::empty(header);
        checkpoint.halting = self.halting;
        checkpoint.nonhalting = self.nonhalting;
        for ((len, bits), c) in self.packed {
            let s: String = (0..len)
                .rev()
                .map(|i| if (bits >> i) & 1 == 1 { '1' } else { '0' })
                .collect();
            checkpoint.strings.insert(s, c);
        }
        checkpoint.strings.extend(self.long);
        checkpoint.joint.extend(self.joint);
        SweepReport {
            checkpoint,
            champion: self.champion,
        }
    }
}

pub fn run_sweep(config: &SweepConfig) -> Result<ShardCheckpoint> {
    run_sweep_report(config).map(|r| r.checkpoint)
}

pub fn run_sweep_report(config: &SweepConfig) -> Result<SweepReport> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| CtmError::Invariant(format!("thread pool: {e}")))?;
    let tally = pool.install(|| match config.engine {
        Engine::Exhaustive => exhaustive(config),
        Engine::Prefix => prefix(config),
    })?;
    let report = tally.into_report(config.header());
    report.checkpoint.validate()?;
    Ok(report)
}

fn exhaustive(config: &SweepConfig) -> Result<Tally> {
    const CHUNK: u64 = 1 << 16;
    let range = config.range;
    let chunks: Vec<IndexRange> = (range.lo..range.hi)
        .step_by(CHUNK as usize)
        .map(|lo| IndexRange::new(lo, (lo + CHUNK).min(range.hi)))
        .collect();
    chunks
        .into_par_iter()
        .map(|chunk| exhaustive_chunk(config, chunk))
        .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))
}

fn exhaustive_chunk(config: &SweepConfig, chunk: IndexRange) -> Result<Tally> {
    let blanks = config.blank_mode.blanks();
    let mut sims = blanks
        .iter()
        .map(|_| Simulator::new(config.max_steps))
        .collect::<Result<Vec<_>>>()?;
    let mut cursor = IndexCursor::new(config.states, chunk.lo)?;
    let mut tally = Tally::default();
    for index in chunk.lo..chunk.hi {
        for (sim, &blank) in sims.iter_mut().zip(blanks) {
            let run = sim.run(cursor.rules(), blank);
            if run.halted {
                tally.record(sim.window(&run), run.steps, 1);
                if tally.needs_witness(run.steps) {
                    tally.offer(Champion {
                        steps: run.steps,
                        index,
                        blank,
                    });
                }
            } else {
                tally.nonhalting += 1;
            }
        }
        cursor.advance();
    }
    Ok(tally)
}

const FREE: u8 = u8::MAX;

/// Counts indices of a range whose base-`radix` digits agree with a partial
/// assignment.
#[derive(Clone, Debug)]
struct DigitCounter {
    slots: usize,
    powers: Vec<u64>,
    full: bool,
    lo: Option<Vec<u8>>,
    hi: Option<Vec<u8>>,
}

impl DigitCounter {
    fn new(states: u32, range: IndexRange) -> Result<Self> {
        let base = radix(states);
        let slots = 2 * states as usize;
        let count = machine_count(states)?;
        let powers = (0..=slots as u32).map(|k| base.pow(k)).collect();
        let digits = |mut x: u64| {
            (0..slots)
                .map(|_| {
                    let d = (x % base) as u8;
                    x /= base;
                    d
                })
                .collect::<Vec<_>>()
        };
        Ok(DigitCounter {
            slots,
            powers,
            full: range.lo == 0 && range.hi == count,
            lo: (range.lo > 0).then(|| digits(range.lo)),
            hi: (range.hi < count).then(|| digits(range.hi)),
        })
    }

    fn free(&self, assignment: &[u8]) -> usize {
        assignment.iter().filter(|&&d| d == FREE).count()
    }

    /// Matching indices in `[0, bound)`, where `None` stands for the size of
    /// the whole space.
    fn below(&self, bound: Option<&[u8]>, assignment: &[u8]) -> u64 {
        let Some(bound) = bound else {
            return self.powers[self.free(assignment)];
        };
        let mut free_below = self.free(assignment);
        let mut count = 0;
        for p in (0..self.slots).rev() {
            let limit = bound[p];
            let fixed = assignment[p];
            if fixed == FREE {
                free_below -= 1;
                count += limit as u64 * self.powers[free_below];
            } else if fixed < limit {
                return count + self.powers[free_below];
            } else if fixed > limit {
                return count;
            }
        }
        count
    }

    fn weight(&self, assignment: &[u8]) -> u64 {
        if self.full {
            return self.powers[self.free(assignment)];
        }
        let below_lo = match self.lo.as_deref() {
            Some(lo) => self.below(Some(lo), assignment),
            None => 0,
        };
        self.below(self.hi.as_deref(), assignment) - below_lo
    }

    /// Smallest matching index at or above the range start. Only called for
    /// assignments with nonzero weight, so the result lies inside the range.
    fn first_match(&self, base: u64, assignment: &[u8]) -> u64 {
        let value = |digits: &[u8]| {
            digits
                .iter()
                .rev()
                .fold(0u64, |acc, &d| acc * base + d as u64)
        };
        let Some(lo) = self.lo.as_deref() else {
            let zeros: Vec<u8> = assignment
                .iter()
                .map(|&d| if d == FREE { 0 } else { d })
                .collect();
            return value(&zeros);
        };
        let mut out = vec![0u8; self.slots];
        // Deepest free position whose digit can still be raised above lo's.
        let mut bump: Option<usize> = None;
        for p in (0..self.slots).rev() {
            let fixed = assignment[p];
            if fixed == FREE {
                out[p] = lo[p];
                if (lo[p] as u64) + 1 < base {
                    bump = Some(p);
                }
            } else if fixed == lo[p] {
                out[p] = fixed;
            } else if fixed > lo[p] {
                out[p] = fixed;
                fill_rest(&mut out, assignment, p);
                return value(&out);
            } else {
                let q = bump.expect("assignment with nonzero weight has a match");
                out[q] += 1;
                fill_rest(&mut out, assignment, q);
                return value(&out);
            }
        }
        value(&out)
    }
}

/// Below position `p`: fixed digits keep their value, free digits become 0.
fn fill_rest(out: &mut [u8], assignment: &[u8], p: usize) {
    for q in 0..p {
        out[q] = if assignment[q] == FREE {
            0
        } else {
            assignment[q]
        };
    }
}

/// A run suspended at a branch point, used to split the search into tasks.
#[derive(Clone, Debug)]
struct Frontier {
    assignment: Vec<u8>,
    tape: Vec<u8>,
    head: Head,
}

#[derive(Clone, Copy, Debug)]
struct Head {
    pos: usize,
    lo: usize,
    hi: usize,
    state: u8,
    steps: u32,
}

struct PrefixSearch<'a> {
    config: &'a SweepConfig,
    counter: &'a DigitCounter,
    blank: u8,
    base: u64,
    decoded: Vec<Rule>,
    assignment: Vec<u8>,
    tape_len: usize,
    /// One tape per branching depth.
    tapes: Vec<u8>,
    split_at: Option<usize>,
    frontier: Vec<Frontier>,
    tally: Tally,
}

impl<'a> PrefixSearch<'a> {
    fn new(config: &'a SweepConfig, counter: &'a DigitCounter, blank: u8) -> Self {
        let base = radix(config.states);
        let slots = 2 * config.states as usize;
        let tape_len = 2 * config.max_steps as usize + 3;
        PrefixSearch {
            config,
            counter,
            blank,
            base,
            decoded: (0..base)
                .map(|d| Rule::from(decode_digit(config.states, d)))
                .collect(),
            assignment: vec![FREE; slots],
            tape_len,
            tapes: vec![blank; tape_len * (slots + 1)],
            split_at: None,
            frontier: Vec::new(),
            tally: Tally::default(),
        }
    }

    fn start(&mut self) {
        let origin = self.tape_len / 2;
        let head = Head {
            pos: origin,
            lo: origin,
            hi: origin,
            state: 1,
            steps: 0,
        };
        self.explore(0, head);
    }

    fn resume(&mut self, node: Frontier) {
        let depth = self.depth_of(&node.assignment);
        self.assignment = node.assignment;
        let start = depth * self.tape_len;
        self.tapes[start..start + self.tape_len].copy_from_slice(&node.tape);
        self.explore(depth, node.head);
    }

    fn depth_of(&self, assignment: &[u8]) -> usize {
        assignment.iter().filter(|&&d| d != FREE).count()
    }

    fn explore(&mut self, depth: usize, mut head: Head) {
        let slots = self.assignment.len();
        let tape_off = depth * self.tape_len;
        loop {
            if head.steps == self.config.max_steps {
                self.tally.nonhalting += self.counter.weight(&self.assignment);
                return;
            }
            let symbol = self.tapes[tape_off + head.pos];
            let slot = (head.state as usize - 1) * 2 + symbol as usize;
            let digit = self.assignment[slot];
            if digit != FREE {
                let rule = self.decoded[digit as usize];
                self.tapes[tape_off + head.pos] = rule.write;
                advance(&mut head, rule);
                continue;
            }

            if self.split_at == Some(depth) {
                self.frontier.push(Frontier {
                    assignment: self.assignment.clone(),
                    tape: self.tapes[tape_off..tape_off + self.tape_len].to_vec(),
                    head,
                });
                return;
            }

            let last = depth + 1 == slots;
            for d in 0..self.base as u8 {
                self.assignment[slot] = d;
                let weight = self.counter.weight(&self.assignment);
                if weight == 0 {
                    continue;
                }
                let rule = self.decoded[d as usize];
                if rule.next == 0 {
                    let cell = tape_off + head.pos;
                    let saved = self.tapes[cell];
                    self.tapes[cell] = rule.write;
                    let steps = head.steps + 1;
                    let window = &self.tapes[tape_off + head.lo..=tape_off + head.hi];
                    self.tally.record(window, steps, weight);
                    self.tapes[cell] = saved;
                    if self.tally.needs_witness(steps) {
                        let index = self.counter.first_match(self.base, &self.assignment);
                        self.tally.offer(Champion {
                            steps,
                            index,
                            blank: self.blank,
                        });
                    }
                } else if last {
                    self.tally.nonhalting += weight;
                } else {
                    let child_off = tape_off + self.tape_len;
                    self.tapes.copy_within(tape_off..child_off, child_off);
                    self.tapes[child_off + head.pos] = rule.write;
                    let mut child = head;
                    advance(&mut child, rule);
                    self.explore(depth + 1, child);
                }
            }
            self.assignment[slot] = FREE;
            return;
        }
    }
}

#[inline]
fn advance(head: &mut Head, rule: Rule) {
    head.steps += 1;
    head.pos = head.pos.wrapping_add_signed(rule.delta as isize);
    head.lo = head.lo.min(head.pos);
    head.hi = head.hi.max(head.pos);
    head.state = rule.next;
}

/// Branching depth at which the search is cut into parallel tasks.
const SPLIT_DEPTH: usize = 2;

fn prefix(config: &SweepConfig) -> Result<Tally> {
    let counter = DigitCounter::new(config.states, config.range)?;
    let mut total = Tally::default();
    for &blank in config.blank_mode.blanks() {
        let mut seed = PrefixSearch::new(config, &counter, blank);
        seed.split_at = Some(SPLIT_DEPTH.min(counter.slots - 1));
        seed.start();
        let frontier = std::mem::take(&mut seed.frontier);
        let tally = frontier
            .into_par_iter()
            .fold(
                || PrefixSearch::new(config, &counter, blank),
                |mut search, node| {
                    search.resume(node);
                    search
                },
            )
            .map(|search| search.tally)
            .reduce(Tally::default, Tally::merge);
        total = total.merge(seed.tally).merge(tally);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assignment(states: u32, fixed: &[(usize, u8)]) -> Vec<u8> {
        let mut a = vec![FREE; 2 * states as usize];
        for &(p, d) in fixed {
            a[p] = d;
        }
        a
    }

    /// Brute-force oracle for the digit counter.
    fn matching(states: u32, range: IndexRange, a: &[u8]) -> Vec<u64> {
        let base = radix(states);
        (range.lo..range.hi)
            .filter(|&i| {
                let mut x = i;
                a.iter().all(|&d| {
                    let digit = (x % base) as u8;
                    x /= base;
                    d == FREE || d == digit
                })
            })
            .collect()
    }

    #[test]
    fn digit_counter_matches_enumeration() {
        let states = 2;
        let count = machine_count(states).unwrap();
        let ranges = [
            IndexRange::new(0, count),
            IndexRange::new(0, 777),
            IndexRange::new(1234, count),
            IndexRange::new(999, 5001),
            IndexRange::new(4321, 4322),
        ];
        let assignments = [
            assignment(2, &[]),
            assignment(2, &[(0, 3)]),
            assignment(2, &[(3, 0)]),
            assignment(2, &[(1, 9), (2, 4)]),
            assignment(2, &[(0, 1), (1, 2), (2, 1), (3, 4)]),
            assignment(2, &[(3, 9), (0, 0)]),
        ];
        for r in ranges {
            let counter = DigitCounter::new(states, r).unwrap();
            for a in &assignments {
                let hits = matching(states, r, a);
                assert_eq!(counter.weight(a), hits.len() as u64, "{r} {a:?}");
                if let Some(&first) = hits.first() {
                    assert_eq!(counter.first_match(radix(states), a), first, "{r} {a:?}");
                }
            }
        }
    }

    #[test]
    fn busy_beaver_table() {
        assert_eq!(
            busy_beaver(3),
            Some(BusyBeaver {
                sigma: 6,
                max_steps: 21
            })
        );
        assert_eq!(busy_beaver(4).unwrap().max_steps, 107);
        assert_eq!(busy_beaver(5), None);
    }

    #[test]
    fn one_state_dual_sweep() {
        for engine in [Engine::Exhaustive, Engine::Prefix] {
            let cfg = SweepConfig::new(1, BlankMode::Dual).unwrap().engine(engine);
            let c = run_sweep(&cfg).unwrap();
            assert_eq!(c.halting, 24);
            assert_eq!(c.nonhalting, 48);
            assert_eq!(c.strings.len(), 2);
            assert_eq!(c.strings["0"], 12);
            assert_eq!(c.strings["1"], 12);
        }
    }

    #[test]
    fn engines_agree_on_sub_ranges() {
        let count = machine_count(2).unwrap();
        for (lo, hi) in [(0, count), (17, 4000), (5000, 5001), (9000, count)] {
            for mode in [BlankMode::ZeroOnly, BlankMode::Dual] {
                let cfg = SweepConfig::new(2, mode)
                    .unwrap()
                    .range(IndexRange::new(lo, hi));
                let a = run_sweep_report(&cfg.clone().engine(Engine::Exhaustive)).unwrap();
                let b = run_sweep_report(&cfg.engine(Engine::Prefix)).unwrap();
                assert_eq!(a.checkpoint, b.checkpoint);
                assert_eq!(a.champion, b.champion);
            }
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let cfg = SweepConfig::new(1, BlankMode::Dual).unwrap();
        assert!(matches!(
            run_sweep(&cfg.clone().max_steps(0)),
            Err(CtmError::ZeroStepBound)
        ));
        assert!(run_sweep(&cfg.clone().range(IndexRange::new(0, 37))).is_err());
        assert!(run_sweep(&cfg.clone().range(IndexRange::new(5, 5))).is_err());
        assert!(cfg.shard(4, 4).is_err());
    }

    #[test]
    fn short_bound_sets_warning() {
        let cfg = SweepConfig::new(2, BlankMode::ZeroOnly)
            .unwrap()
            .max_steps(3);
        let c = run_sweep(&cfg).unwrap();
        assert!(c.header.below_busy_beaver);
        assert!(c.halting < 3044);
        let c = run_sweep(&cfg.max_steps(6)).unwrap();
        assert!(!c.header.below_busy_beaver);
        assert_eq!(c.halting, 3044);
    }
}
