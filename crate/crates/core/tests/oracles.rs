use std::collections::HashMap;

use ctm::analysis::runtime_tables;
use ctm::distribution::{complement, reverse};
use ctm::enumeration::{complement_machine, mirror_machine};
use ctm::machine::Move;
use ctm::sweep::{busy_beaver, run_sweep_report};
use ctm::{
    build_distribution, complete_by_symmetry, index_to_machine, machine_count, merge_checkpoints,
    simulate, BlankMode, Engine, IndexRange, MachineDescriptor, ShardCheckpoint, SweepConfig,
};

/// Straightforward simulator on a sparse tape.
fn reference_run(m: &MachineDescriptor, blank: u8, max_steps: u32) -> (bool, u32, Option<String>) {
    let mut tape: HashMap<i64, u8> = HashMap::new();
    let (mut pos, mut state, mut lo, mut hi) = (0i64, 1u32, 0i64, 0i64);
    for step in 1..=max_steps {
        let read = *tape.get(&pos).unwrap_or(&blank);
        let e = m.entry(state, read);
        tape.insert(pos, e.write);
        if e.is_halting() {
            let out = (lo..=hi)
                .map(|p| {
                    if *tape.get(&p).unwrap_or(&blank) == 1 {
                        '1'
                    } else {
                        '0'
                    }
                })
                .collect();
            return (true, step, Some(out));
        }
        pos += match e.movement {
            Move::Left => -1,
            Move::Right => 1,
            Move::Stay => 0,
        };
        lo = lo.min(pos);
        hi = hi.max(pos);
        state = e.next_state as u32;
    }
    (false, max_steps, None)
}

fn sweep(states: u32, mode: BlankMode) -> ShardCheckpoint {
    run_sweep_report(&SweepConfig::new(states, mode).unwrap())
        .unwrap()
        .checkpoint
}

#[test]
fn simulator_matches_reference_on_all_2_state_machines() {
    for index in 0..machine_count(2).unwrap() {
        let m = index_to_machine(2, index).unwrap();
        for blank in [0, 1] {
            let got = simulate(&m, blank, 6).unwrap();
            let want = reference_run(&m, blank, 6);
            assert_eq!(
                (got.halted, got.steps, got.output),
                want,
                "#{index} blank {blank}"
            );
        }
    }
}

#[test]
fn simulator_matches_reference_on_3_state_samples() {
    let count = machine_count(3).unwrap();
    for index in (0..count).step_by(997) {
        let m = index_to_machine(3, index).unwrap();
        for blank in [0, 1] {
            let got = simulate(&m, blank, 21).unwrap();
            assert_eq!(
                (got.halted, got.steps, got.output),
                reference_run(&m, blank, 21)
            );
        }
    }
}

#[test]
fn complement_and_mirror_conjugacy_on_all_2_state_machines() {
    for index in 0..machine_count(2).unwrap() {
        let m = index_to_machine(2, index).unwrap();
        let c = complement_machine(&m);
        let r = mirror_machine(&m);
        for blank in [0u8, 1] {
            let base = simulate(&m, blank, 6).unwrap();
            let comp = simulate(&c, 1 - blank, 6).unwrap();
            let mirr = simulate(&r, blank, 6).unwrap();
            assert_eq!((base.halted, base.steps), (comp.halted, comp.steps));
            assert_eq!((base.halted, base.steps), (mirr.halted, mirr.steps));
            assert_eq!(comp.output, base.output.as_deref().map(complement));
            assert_eq!(mirr.output, base.output.as_deref().map(reverse));
        }
    }
}

#[test]
fn symmetry_completion_equals_dual_sweep() {
    for n in 1..=3 {
        let completed = complete_by_symmetry(&sweep(n, BlankMode::ZeroOnly)).unwrap();
        assert_eq!(
            completed.to_text(),
            sweep(n, BlankMode::Dual).to_text(),
            "n={n}"
        );
    }
}

#[test]
fn engines_agree_on_the_full_3_state_space() {
    for mode in [BlankMode::ZeroOnly, BlankMode::Dual] {
        let config = SweepConfig::new(3, mode).unwrap();
        let tree = run_sweep_report(&config.clone().engine(Engine::Prefix)).unwrap();
        let brute = run_sweep_report(&config.engine(Engine::Exhaustive)).unwrap();
        assert_eq!(tree.checkpoint.to_text(), brute.checkpoint.to_text());
        assert_eq!(tree.champion, brute.champion);
    }
}

#[test]
fn shard_counts_merge_to_identical_checkpoints() {
    let reference = sweep(3, BlankMode::Dual).to_text();
    for total in [1u32, 7, 256] {
        let parts: Vec<_> = (0..total)
            .map(|k| {
                let config = SweepConfig::new(3, BlankMode::Dual)
                    .unwrap()
                    .shard(k, total)
                    .unwrap();
                run_sweep_report(&config).unwrap().checkpoint
            })
            .collect();
        assert_eq!(
            merge_checkpoints(&parts).unwrap().to_text(),
            reference,
            "{total} shards"
        );
    }
}

#[test]
fn two_shards_merge_in_any_order() {
    for mode in [BlankMode::ZeroOnly, BlankMode::Dual] {
        let whole = sweep(2, mode);
        let half = |k| {
            let config = SweepConfig::new(2, mode).unwrap().shard(k, 2).unwrap();
            run_sweep_report(&config).unwrap().checkpoint
        };
        let (a, b) = (half(0), half(1));
        assert_eq!(merge_checkpoints(&[a.clone(), b.clone()]).unwrap(), whole);
        assert_eq!(merge_checkpoints(&[b, a]).unwrap(), whole);
    }
}

#[test]
fn checkpoints_survive_a_save_and_load() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("n3.ckpt");
    let ckpt = sweep(3, BlankMode::Dual);
    ckpt.save_atomic(&path).unwrap();
    assert_eq!(ShardCheckpoint::load(&path).unwrap(), ckpt);
}

#[test]
fn string_sets_grow_with_states() {
    let dists: Vec<_> = (1..=3)
        .map(|n| build_distribution(&sweep(n, BlankMode::Dual)).unwrap())
        .collect();
    for pair in dists.windows(2) {
        for s in pair[0].counts.keys() {
            assert!(
                pair[1].count(s).is_some(),
                "{s} lost from D({})",
                pair[1].states
            );
        }
    }
}

#[test]
fn champions_reach_the_busy_beaver_values() {
    for n in 1..=3 {
        let bb = busy_beaver(n).unwrap();
        let report = run_sweep_report(&SweepConfig::new(n, BlankMode::ZeroOnly).unwrap()).unwrap();
        let champion = report.champion.unwrap();
        assert_eq!(champion.steps, bb.max_steps);
        let m = index_to_machine(n, champion.index).unwrap();
        let out = simulate(&m, 0, bb.max_steps).unwrap();
        assert!(out.halted && out.steps == bb.max_steps);
        let most_ones = report
            .checkpoint
            .strings
            .keys()
            .map(|s| s.bytes().filter(|&b| b == b'1').count() as u32)
            .max()
            .unwrap();
        assert_eq!(most_ones, bb.sigma, "n={n}");
    }
}

#[test]
fn champion_of_2_state_space() {
    let zero = run_sweep_report(&SweepConfig::new(2, BlankMode::ZeroOnly).unwrap()).unwrap();
    let ch = zero.champion.unwrap();
    assert_eq!((ch.steps, ch.index, ch.blank), (6, 1487, 0));
    let dual = run_sweep_report(&SweepConfig::new(2, BlankMode::Dual).unwrap()).unwrap();
    let ch = dual.champion.unwrap();
    assert_eq!((ch.steps, ch.index, ch.blank), (6, 678, 1));
}

#[test]
fn runtime_histogram_matches_direct_counting() {
    let ckpt = sweep(2, BlankMode::Dual);
    let tables = runtime_tables(&ckpt);
    let mut direct: HashMap<(u32, u32), u64> = HashMap::new();
    for index in 0..machine_count(2).unwrap() {
        let m = index_to_machine(2, index).unwrap();
        for blank in [0, 1] {
            let (halted, steps, out) = reference_run(&m, blank, 6);
            if halted {
                *direct
                    .entry((out.unwrap().len() as u32, steps))
                    .or_default() += 1;
            }
        }
    }
    assert_eq!(tables.joint.len(), direct.len());
    for (key, count) in &tables.joint {
        assert_eq!(direct[key], *count, "{key:?}");
    }
}

#[test]
fn a_short_bound_only_loses_halting_runs() {
    let short = run_sweep_report(&SweepConfig::with_bound(3, BlankMode::ZeroOnly, 10).unwrap())
        .unwrap()
        .checkpoint;
    let full = sweep(3, BlankMode::ZeroOnly);
    assert!(short.header.below_busy_beaver);
    assert!(short.halting < full.halting);
    assert_eq!(
        short.halting + short.nonhalting,
        full.halting + full.nonhalting
    );
    for (s, &k) in &short.strings {
        assert!(full.strings[s] >= k);
    }
    let range = IndexRange::new(0, machine_count(3).unwrap());
    assert_eq!(short.header.ranges, vec![range]);
}
