//! Algorithmic-probability estimates for short binary strings, obtained by
//! running every small two-symbol Turing machine and counting what the
//! halting ones leave on the tape.

pub mod analysis;
pub mod checkpoint;
pub mod cli;
pub mod distribution;
pub mod enumeration;
pub mod error;
pub mod machine;
pub mod sweep;

pub use checkpoint::{merge_checkpoints, BlankMode, IndexRange, ShardCheckpoint};
pub use distribution::{build_distribution, complete_by_symmetry, Distribution};
pub use enumeration::{index_to_machine, machine_count, machine_to_index};
pub use error::{CtmError, Result};
pub use machine::{simulate, MachineDescriptor, SimulationOutcome};
pub use sweep::{run_sweep, Engine, SweepConfig};
