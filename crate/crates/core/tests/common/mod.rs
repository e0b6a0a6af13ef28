#![allow(dead_code)]

use proptest::prelude::*;
use rankone::{ParamSchedule, Stage, Word};

/// Explicit stages with `q` in `2..=4` and `a` in `0..=3`, repeated as a periodic tail.
pub fn schedule() -> impl Strategy<Value = ParamSchedule> {
    let stage = (2usize..=4).prop_flat_map(|q| {
        proptest::collection::vec(0u64..=3, q).prop_map(move |a| Stage::new(q, a))
    });
    proptest::collection::vec(stage, 1..=4).prop_map(|stages| {
        let period = stages.len();
        ParamSchedule::periodic(stages, period)
    })
}

/// `B_{n+1}` spelled out directly from the definition.
pub fn naive_block(schedule: &ParamSchedule, n: usize) -> Word {
    let mut b = String::from("0");
    for k in 0..n {
        let s = schedule.stage(k).unwrap();
        let mut next = String::new();
        for &a in &s.a {
            next.push_str(&b);
            next.push_str(&"1".repeat(a as usize));
        }
        b = next;
    }
    b.parse().unwrap()
}

/// Like [`schedule`], but every stage ends with a strictly largest spacer count.
pub fn pea_schedule() -> impl Strategy<Value = ParamSchedule> {
    let stage = (2usize..=4).prop_flat_map(|q| {
        (proptest::collection::vec(0u64..=3, q - 1), 1u64..=3).prop_map(move |(mut a, extra)| {
            let top = a.iter().copied().max().unwrap_or(0) + extra;
            a.push(top);
            Stage::new(q, a)
        })
    });
    proptest::collection::vec(stage, 1..=4).prop_map(|stages| {
        let period = stages.len();
        ParamSchedule::periodic(stages, period)
    })
}
