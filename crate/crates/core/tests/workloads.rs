use std::collections::HashMap;
use std::path::PathBuf;

use proptest::prelude::*;

use demsim_core::trace::{parse_workload, replay, timeline_stats, Timeline, Workload};
use demsim_core::{AccessCategory, Scheduler, UserId};

use AccessCategory::{BestEffort as BE, Voice as VO};

fn load(name: &str) -> Workload {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "workloads", name].iter().collect();
    parse_workload(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn starts(t: &Timeline, user: u32, ac: AccessCategory) -> Vec<u32> {
    let u = UserId::new(user).unwrap();
    t.absolute()
        .into_iter()
        .filter(|(_, p)| p.frame.dest == u && p.frame.ac == ac)
        .map(|(s, _)| s)
        .collect()
}

#[test]
fn three_user_blocking_example() {
    let w = load("fig4.wl");
    let fifo = timeline_stats(&replay(&w, Scheduler::Fifo));
    assert_eq!(fifo.periods, 6);
    assert_eq!(fifo.completion[VO], 4);
    let dems = timeline_stats(&replay(&w, Scheduler::Dems));
    assert_eq!(dems.periods, 5);
    assert_eq!(dems.completion[VO], 3);
    assert_eq!(format!("{dems}").split(' ').take(2).collect::<Vec<_>>(), ["periods=5", "vo_done=3"]);
}

#[test]
fn padding_example() {
    let w = load("fig5.wl");
    assert_eq!(w.fifo[BE][0].frame.duration, 2 * w.fifo[VO][0].frame.duration);
    let dems = timeline_stats(&replay(&w, Scheduler::Dems));
    assert_eq!(dems.padding_units, 0);
    let fifo = timeline_stats(&replay(&w, Scheduler::Fifo));
    assert!(fifo.padding_units >= 1);
    assert!(fifo.airtime > dems.airtime);
}

#[test]
fn long_primary_sharing_example() {
    let w = load("fig6.wl");
    let dems = replay(&w, Scheduler::Dems);
    dems.check().unwrap();
    let (vo, be) = (starts(&dems, 2, VO), starts(&dems, 2, BE));
    assert!(vo.iter().max().unwrap() <= be.iter().min().unwrap());
    assert_eq!(dems.txops[0].primary_ac, AccessCategory::Video);
    assert_eq!(dems.txops[0].duration, 3);

    let fifo = replay(&w, Scheduler::Fifo);
    fifo.check().unwrap();
    let (vo, be) = (starts(&fifo, 2, VO), starts(&fifo, 2, BE));
    assert!(be.iter().min().unwrap() < vo.iter().max().unwrap());
}

#[test]
fn shipped_workloads_conserve_frames() {
    for name in ["fig4.wl", "fig5.wl", "fig6.wl"] {
        let w = load(name);
        for s in Scheduler::BOTH {
            let t = replay(&w, s);
            t.check().unwrap();
            assert_eq!(t.absolute().len(), w.frame_count(s), "{name} {s}");
            assert_eq!(replay(&w, s), t);
        }
    }
}

fn workload_text() -> impl Strategy<Value = String> {
    let frame = (0usize..4, 1u32..=3, 1u32..=3);
    (1u32..=3, proptest::collection::vec(frame, 1..14), proptest::option::of(0usize..4)).prop_map(
        |(streams, frames, primary)| {
            let acs = ["VO", "VI", "BE", "BK"];
            let mut text = format!("streams={streams}\n");
            if let Some(p) = primary {
                text += &format!("primary={}\n", acs[p]);
            }
            for (k, (ac, dest, dur)) in frames.iter().enumerate() {
                let label = format!("{}{k}", acs[*ac]);
                text += &format!("[fifo.{}]\n{label} u{dest} {dur}\n", acs[*ac]);
                text += &format!("[dems.u{dest}.{}]\n{label} u{dest} {dur}\n", acs[*ac]);
            }
            text
        },
    )
}

proptest! {
    #[test]
    fn replay_invariants(text in workload_text()) {
        let w = parse_workload(&text).unwrap();
        for s in Scheduler::BOTH {
            let t = replay(&w, s);
            t.check().unwrap();
            prop_assert_eq!(&replay(&w, s), &t);

            // each frame exactly once
            let placed = t.absolute();
            prop_assert_eq!(placed.len(), w.frame_count(s));
            let mut seen = HashMap::new();
            for (_, p) in &placed {
                prop_assert!(seen.insert(p.frame.id, ()).is_none());
            }

            // source-queue order is kept in time
            let order: HashMap<u64, u32> = placed.iter().map(|(at, p)| (p.frame.id, *at)).collect();
            let queues: Vec<Vec<u64>> = match s {
                Scheduler::Fifo => w.fifo.iter().map(|(_, q)| q.iter().map(|f| f.frame.id).collect()).collect(),
                Scheduler::Dems => w
                    .dems
                    .iter()
                    .flat_map(|u| u.iter().map(|(_, q)| q.iter().map(|f| f.frame.id).collect()))
                    .collect(),
            };
            for q in queues {
                prop_assert!(q.windows(2).all(|p| order[&p[0]] <= order[&p[1]]));
            }

            let stats = timeline_stats(&t);
            let lanes: u32 = t.txops.iter().map(|x| x.duration * t.n_streams).sum();
            let busy: u32 = placed.iter().map(|(_, p)| p.frame.duration).sum();
            prop_assert_eq!(stats.padding_units, lanes - busy);
        }
    }
}
