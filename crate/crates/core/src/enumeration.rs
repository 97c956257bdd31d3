//! Bijection between enumeration indices and machines.
//!
//! An index is read as `2n` base-`(4n+2)` digits, least significant first,
//! one per slot `(1,0), (1,1), ..., (n,1)`. Digit `d < 4n` is the moving
//! transition `write = d % 2`, right if `(d / 2) % 2 == 0` else left,
//! `next = d / 4 + 1`; digits `4n` and `4n+1` halt writing 0 and 1.
//! Checkpoint ranges refer to these indices, so the layout is fixed.

use crate::error::{CtmError, Result};
use crate::machine::{MachineDescriptor, Move, Rule, Rules, TransitionEntry, MAX_STATES};

fn check_states(states: u32) -> Result<()> {
    if states == 0 || states as usize > MAX_STATES {
        Err(CtmError::UnsupportedStates(states))
    } else {
        Ok(())
    }
}

/// Options per transition slot: `4n` moving plus 2 halting.
pub fn radix(states: u32) -> u64 {
    4 * states as u64 + 2
}

/// `(4n+2)^(2n)`.
pub fn machine_count(states: u32) -> Result<u64> {
    if states == 0 {
        return Err(CtmError::UnsupportedStates(states));
    }
    radix(states)
        .checked_pow(2 * states)
        .ok_or(CtmError::UnsupportedStates(states))
}

pub fn decode_digit(states: u32, digit: u64) -> TransitionEntry {
    let moving = 4 * states as u64;
    if digit >= moving {
        TransitionEntry::halt((digit - moving) as u8)
    } else {
        let movement = if (digit / 2).is_multiple_of(2) {
            Move::Right
        } else {
            Move::Left
        };
        TransitionEntry::new((digit % 2) as u8, movement, (digit / 4 + 1) as u8)
    }
}

pub fn encode_entry(states: u32, entry: &TransitionEntry) -> u64 {
    if entry.is_halting() {
        4 * states as u64 + entry.write as u64
    } else {
        let dir = u64::from(entry.movement == Move::Left);
        (entry.next_state as u64 - 1) * 4 + dir * 2 + entry.write as u64
    }
}

pub(crate) fn encode_table(states: u32, table: &[TransitionEntry]) -> u64 {
    let base = radix(states);
    table
        .iter()
        .rev()
        .fold(0u64, |acc, e| acc * base + encode_entry(states, e))
}

pub fn index_to_machine(states: u32, index: u64) -> Result<MachineDescriptor> {
    check_states(states)?;
    let count = machine_count(states)?;
    if index >= count {
        return Err(CtmError::IndexOutOfRange {
            states,
            index,
            count,
        });
    }
    let base = radix(states);
    let mut rest = index;
    let table = (0..2 * states)
        .map(|_| {
            let d = rest % base;
            rest /= base;
            decode_digit(states, d)
        })
        .collect();
    Ok(MachineDescriptor::from_parts_unchecked(
        states, table, index,
    ))
}

pub fn machine_to_index(machine: &MachineDescriptor) -> u64 {
    encode_table(machine.states(), machine.table())
}

/// Swaps the read-0 and read-1 transitions of every state and complements
/// every written symbol. On blank 0 the result behaves like the original on
/// blank 1 with every cell complemented.
pub fn complement_machine(machine: &MachineDescriptor) -> MachineDescriptor {
    let table: Vec<TransitionEntry> = machine
        .table()
        .chunks_exact(2)
        .flat_map(|pair| [pair[1], pair[0]])
        .map(|e| TransitionEntry {
            write: 1 - e.write,
            ..e
        })
        .collect();
    let index = encode_table(machine.states(), &table);
    MachineDescriptor::from_parts_unchecked(machine.states(), table, index)
}

/// Reverses the direction of every moving transition.
pub fn mirror_machine(machine: &MachineDescriptor) -> MachineDescriptor {
    let table: Vec<TransitionEntry> = machine
        .table()
        .iter()
        .map(|e| TransitionEntry {
            movement: e.movement.reversed(),
            ..*e
        })
        .collect();
    let index = encode_table(machine.states(), &table);
    MachineDescriptor::from_parts_unchecked(machine.states(), table, index)
}

/// Walks consecutive indices, updating only the slots whose digit changed.
#[derive(Clone, Debug)]
pub struct IndexCursor {
    states: u32,
    base: u8,
    digits: [u8; 2 * MAX_STATES],
    decoded: Vec<Rule>,
    rules: Rules,
    index: u64,
}

impl IndexCursor {
    pub fn new(states: u32, start: u64) -> Result<Self> {
        let machine = index_to_machine(states, start)?;
        let base = radix(states);
        let mut digits = [0u8; 2 * MAX_STATES];
        let mut rest = start;
        for d in digits.iter_mut().take(2 * states as usize) {
            *d = (rest % base) as u8;
            rest /= base;
        }
        let decoded = (0..base)
            .map(|d| Rule::from(decode_digit(states, d)))
            .collect();
        Ok(IndexCursor {
            states,
            base: base as u8,
            digits,
            decoded,
            rules: machine.rules(),
            index: start,
        })
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn rules(&self) -> &Rules {
        &self.rules
    }

    /// Moves to the next index; wraps to 0 after the last machine.
    #[inline]
    pub fn advance(&mut self) {
        self.index += 1;
        for slot in 0..2 * self.states as usize {
            let d = self.digits[slot] + 1;
            if d < self.base {
                self.digits[slot] = d;
                self.rules.slots[slot] = self.decoded[d as usize];
                return;
            }
            self.digits[slot] = 0;
            self.rules.slots[slot] = self.decoded[0];
        }
        self.index = 0;
    }
}
