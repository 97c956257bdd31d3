//! Machine representation and the bounded two-way-tape simulator.
//!
//! Machines follow Rado's busy-beaver conventions: `n` operating states
//! numbered `1..=n`, a halt state `0`, a binary alphabet, and one transition
//! per `(state, read symbol)` pair. A transition into the halt state writes
//! its symbol and does not move.

use std::fmt;

use crate::enumeration;
use crate::error::{CtmError, Result};

/// Largest state count whose machine space still fits a `u64` index.
pub const MAX_STATES: usize = 6;

/// Head movement of one transition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Move {
    Left,
    Right,
    /// Only used by halting transitions.
    Stay,
}

impl Move {
    pub fn delta(self) -> isize {
        match self {
            Move::Left => -1,
            Move::Right => 1,
            Move::Stay => 0,
        }
    }

    pub fn reversed(self) -> Move {
        match self {
            Move::Left => Move::Right,
            Move::Right => Move::Left,
            Move::Stay => Move::Stay,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TransitionEntry {
    pub write: u8,
    pub movement: Move,
    /// `0` is the halt state.
    pub next_state: u8,
}

impl TransitionEntry {
    pub const fn new(write: u8, movement: Move, next_state: u8) -> Self {
        TransitionEntry {
            write,
            movement,
            next_state,
        }
    }

    pub const fn halt(write: u8) -> Self {
        TransitionEntry::new(write, Move::Stay, 0)
    }

    pub fn is_halting(&self) -> bool {
        self.next_state == 0
    }

    fn validate(&self, states: u32) -> Result<()> {
        if self.write > 1 {
            return Err(CtmError::MalformedMachine(format!(
                "write symbol {} is not binary",
                self.write
            )));
        }
        if u32::from(self.next_state) > states {
            return Err(CtmError::MalformedMachine(format!(
                "next state {} exceeds state count {}",
                self.next_state, states
            )));
        }
        if (self.movement == Move::Stay) != self.is_halting() {
            return Err(CtmError::MalformedMachine(
                "a transition stays in place iff it halts".into(),
            ));
        }
        Ok(())
    }
}

impl fmt::Display for TransitionEntry {
    /// Busy-beaver shorthand: `1RB` writes 1, moves right, enters state 2;
    /// `1-H` writes 1 and halts.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dir = match self.movement {
            Move::Left => 'L',
            Move::Right => 'R',
            Move::Stay => '-',
        };
        let state = if self.is_halting() {
            'H'
        } else {
            (b'A' + self.next_state - 1) as char
        };
        write!(f, "{}{}{}", self.write, dir, state)
    }
}

/// One `(n,2)` machine: `2n` transitions ordered `(1,0), (1,1), ..., (n,1)`
/// plus its enumeration index.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MachineDescriptor {
    states: u32,
    table: Vec<TransitionEntry>,
    index: u64,
}

impl MachineDescriptor {
    /// Validates the table and derives the enumeration index from it.
    pub fn new(states: u32, table: Vec<TransitionEntry>) -> Result<Self> {
        if states == 0 || states as usize > MAX_STATES {
            return Err(CtmError::UnsupportedStates(states));
        }
        if table.len() != 2 * states as usize {
            return Err(CtmError::MalformedMachine(format!(
                "expected {} transitions, got {}",
                2 * states,
                table.len()
            )));
        }
        for entry in &table {
            entry.validate(states)?;
        }
        let index = enumeration::encode_table(states, &table);
        Ok(MachineDescriptor {
            states,
            table,
            index,
        })
    }

    pub(crate) fn from_parts_unchecked(
        states: u32,
        table: Vec<TransitionEntry>,
        index: u64,
    ) -> Self {
        MachineDescriptor {
            states,
            table,
            index,
        }
    }

    pub fn states(&self) -> u32 {
        self.states
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn table(&self) -> &[TransitionEntry] {
        &self.table
    }

    /// Transition for `state` in `1..=n` reading `symbol`.
    pub fn entry(&self, state: u32, symbol: u8) -> TransitionEntry {
        self.table[slot(state, symbol)]
    }

    pub fn rules(&self) -> Rules {
        Rules::from_table(&self.table)
    }
}

impl fmt::Display for MachineDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "   ")?;
        for s in 0..self.states {
            write!(f, "\t{}", (b'A' + s as u8) as char)?;
        }
        for symbol in 0..2u8 {
            write!(f, "\n{}  ", symbol)?;
            for s in 1..=self.states {
                write!(f, "\t{}", self.entry(s, symbol))?;
            }
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn slot(state: u32, symbol: u8) -> usize {
    (state as usize - 1) * 2 + symbol as usize
}

/// Compact transition: head delta and next state packed for the hot loop.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Rule {
    pub write: u8,
    pub delta: i8,
    pub next: u8,
}

impl From<TransitionEntry> for Rule {
    fn from(e: TransitionEntry) -> Self {
        Rule {
            write: e.write,
            delta: e.movement.delta() as i8,
            next: e.next_state,
        }
    }
}

/// Fixed-capacity rule table indexed by `(state - 1) * 2 + symbol`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Rules {
    pub slots: [Rule; 2 * MAX_STATES],
}

impl Rules {
    pub fn from_table(table: &[TransitionEntry]) -> Self {
        let mut rules = Rules::default();
        for (dst, src) in rules.slots.iter_mut().zip(table) {
            *dst = Rule::from(*src);
        }
        rules
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SimulationOutcome {
    pub halted: bool,
    /// Steps executed, counting the halting transition. Equals the step
    /// bound when the run was cut off.
    pub steps: u32,
    /// Tape over the visited window, left to right; `None` unless halted.
    pub output: Option<String>,
}

/// Result of one run on a [`Simulator`]; the output window stays on the
/// simulator's tape until the next run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunResult {
    pub halted: bool,
    pub steps: u32,
    lo: usize,
    hi: usize,
}

impl RunResult {
    pub fn output_len(&self) -> usize {
        self.hi - self.lo + 1
    }
}

/// Reusable simulator owning a tape of `2 * max_steps + 3` cells with the
/// head starting at the center, which a run bounded by `max_steps` cannot
/// leave.
#[derive(Clone, Debug)]
pub struct Simulator {
    tape: Vec<u8>,
    max_steps: u32,
    blank: u8,
    dirty: (usize, usize),
}

impl Simulator {
    pub fn new(max_steps: u32) -> Result<Self> {
        if max_steps == 0 {
            return Err(CtmError::ZeroStepBound);
        }
        let len = 2 * max_steps as usize + 3;
        Ok(Simulator {
            tape: vec![0; len],
            max_steps,
            blank: 0,
            dirty: (len / 2, len / 2),
        })
    }

    pub fn max_steps(&self) -> u32 {
        self.max_steps
    }

    pub fn origin(&self) -> usize {
        self.tape.len() / 2
    }

    fn reset(&mut self, blank: u8) {
        if blank == self.blank {
            let (lo, hi) = self.dirty;
            self.tape[lo..=hi].fill(blank);
        } else {
            self.tape.fill(blank);
            self.blank = blank;
        }
    }

    #[inline]
    pub fn run(&mut self, rules: &Rules, blank: u8) -> RunResult {
        self.reset(blank);
        let tape = &mut self.tape[..];
        let mut pos = tape.len() / 2;
        let (mut lo, mut hi) = (pos, pos);
        let mut state = 1usize;
        let mut steps = 0u32;
        let mut halted = false;
        while steps < self.max_steps {
            steps += 1;
            let rule = rules.slots[(state - 1) * 2 + tape[pos] as usize];
            tape[pos] = rule.write;
            if rule.next == 0 {
                halted = true;
                break;
            }
            pos = pos.wrapping_add_signed(rule.delta as isize);
            lo = lo.min(pos);
            hi = hi.max(pos);
            state = rule.next as usize;
        }
        self.dirty = (lo, hi);
        RunResult {
            halted,
            steps,
            lo,
            hi,
        }
    }

    /// Tape cells over the window visited by the last run.
    pub fn window(&self, result: &RunResult) -> &[u8] {
        &self.tape[result.lo..=result.hi]
    }

    pub fn outcome(&self, result: &RunResult) -> SimulationOutcome {
        SimulationOutcome {
            halted: result.halted,
            steps: result.steps,
            output: result
                .halted
                .then(|| symbols_to_string(self.window(result))),
        }
    }
}

pub fn symbols_to_string(cells: &[u8]) -> String {
    cells
        .iter()
        .map(|&c| if c == 0 { '0' } else { '1' })
        .collect()
}

/// Runs `machine` from state 1 on a tape filled with `blank`, for at most
/// `max_steps` steps.
pub fn simulate(
    machine: &MachineDescriptor,
    blank: u8,
    max_steps: u32,
) -> Result<SimulationOutcome> {
    if blank > 1 {
        return Err(CtmError::MalformedMachine(format!(
            "blank symbol {blank} is not binary"
        )));
    }
    let mut sim = Simulator::new(max_steps)?;
    let result = sim.run(&machine.rules(), blank);
    Ok(sim.outcome(&result))
}
