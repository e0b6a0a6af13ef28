mod common;

use num_bigint::BigUint;
use proptest::prelude::*;
use rankone::params::{choose_telescoping_levels, heights};
use rankone::symbolic::{build_block, pea_condition};
use rankone::transform::{expansive_replace, one_tower_variant};
use rankone::word::DEFAULT_BUDGET;
use rankone::{build_expansive, telescope, Growth, Word};

proptest! {
    /// Telescoping only regroups: the new `n`-block is the old `m_n`-block.
    #[test]
    fn telescoped_blocks_agree(s in common::schedule(), extra in proptest::collection::vec(1usize..3, 1..4)) {
        let mut levels = vec![0usize];
        for e in extra {
            levels.push(levels.last().unwrap() + e);
        }
        let t = telescope(&s, &levels).unwrap();
        let ts = t.as_schedule();
        for (n, &m) in levels.iter().enumerate() {
            let a = build_block(&ts, n, DEFAULT_BUDGET).unwrap();
            let b = build_block(&s, m, DEFAULT_BUDGET).unwrap();
            prop_assert_eq!(a, b);
            let h = heights(&s, m).unwrap();
            prop_assert_eq!(&t.heights[n], h.last());
        }
    }

    #[test]
    fn replacement_invariants(s in common::schedule(), n_stages in 1usize..4) {
        let levels = choose_telescoping_levels(&s, n_stages, Growth::default()).unwrap();
        let t = telescope(&s, &levels).unwrap();
        let m = expansive_replace(&t, n_stages).unwrap();
        let y = m.replaced_schedule();
        let hy = heights(&y, n_stages).unwrap();
        prop_assert_eq!(hy.as_slice(), &t.heights[..]);
        let pea = pea_condition(&y, n_stages).unwrap();
        for (n, r) in m.replaced.iter().enumerate() {
            let old = &t.stages[n];
            prop_assert!(r.replacement_run > r.max_spacers);
            prop_assert!(r.stage.spacer_total() <= 2 * old.spacer_total() + u64::try_from(&t.heights[n]).unwrap());
            prop_assert_eq!(&r.stage.a[..r.cut_index], &old.a[..r.cut_index]);
            if r.stage.q >= 2 {
                prop_assert!(pea[n]);
            }
        }
    }

    /// The new blocks are prefixes of the old ones up to the final spacer run.
    #[test]
    fn replaced_block_is_truncated_prefix(s in common::schedule(), n_stages in 1usize..4) {
        let m = build_expansive(&s, n_stages, Growth::default()).unwrap();
        let y = m.replaced_schedule();
        let old = build_block(&m.telescoped.as_schedule(), n_stages, DEFAULT_BUDGET).unwrap();
        let new = build_block(&y, n_stages, DEFAULT_BUDGET).unwrap();
        prop_assert_eq!(old.len(), new.len());
        let run = m.replaced.last().unwrap().replacement_run as usize;
        let keep = new.len() - run;
        prop_assert!(new.slice(keep, new.len()).iter().all(|b| b));
        let top = n_stages - 1;
        let prev = build_block(&y, top, DEFAULT_BUDGET).unwrap();
        prop_assert!(new.starts_with(&prev));
    }

    /// Each picked copy is overwritten by exactly `H_n` spacers.
    #[test]
    fn variant_blanks_the_picked_copy(s in common::schedule(), n_stages in 1usize..4, seed in any::<u64>()) {
        let levels = choose_telescoping_levels(&s, n_stages, Growth::default()).unwrap();
        let t = telescope(&s, &levels).unwrap();
        let picks: Vec<usize> = t.stages.iter().enumerate()
            .map(|(n, st)| 1 + (seed as usize >> n) % (st.q - 1))
            .collect();
        let v = one_tower_variant(&t, &picks).unwrap();
        let mut block = Word::zero();
        for (n, st) in t.stages.iter().enumerate() {
            let h = u64::try_from(&t.heights[n]).unwrap();
            let mut next = Word::new();
            for i in 0..st.q {
                if i == picks[n] {
                    next.push_ones(h);
                } else {
                    next.extend_from(&block);
                }
                next.push_ones(st.a[i]);
            }
            block = next;
            prop_assert_eq!(&block, &build_block(&v, n + 1, DEFAULT_BUDGET).unwrap());
            prop_assert_eq!(BigUint::from(block.len()), t.heights[n + 1].clone());
        }
    }
}
