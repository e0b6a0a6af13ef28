//! Symbolic blocks `B_n`, word statistics, and expansiveness checks.

use crate::error::{Error, Result};
use crate::params::{heights, ParamSchedule, Tail};
use crate::word::Word;
use num_bigint::BigUint;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

/// `B_0 = 0`, `B_{k+1} = B_k 1^{a_{k,0}} B_k 1^{a_{k,1}} ... B_k 1^{a_{k,q_k-1}}`.
///
/// The required length `h_n` is checked against `budget` (in bits) before
/// anything is materialized.
pub fn build_block(schedule: &ParamSchedule, n: usize, budget: u64) -> Result<Word> {
    let h = heights(schedule, n)?;
    let required = h.last();
    if *required > BigUint::from(budget) {
        return Err(Error::BudgetExceeded {
            required: required.to_string(),
            budget,
        });
    }
    let mut block = Word::zero();
    for (k, next_len) in h.as_slice().iter().enumerate().skip(1) {
        let stage = schedule.stage(k - 1)?;
        let len = usize::try_from(next_len).expect("length within budget");
        let mut next = Word::with_capacity(len);
        for &spacers in &stage.a {
            next.extend_from(&block);
            next.push_ones(spacers);
        }
        block = next;
    }
    Ok(block)
}

/// Prefix-function (failure links) of a bit sequence.
fn prefix_function(bits: &[bool]) -> Vec<usize> {
    let mut pi = vec![0usize; bits.len()];
    for i in 1..bits.len() {
        let mut k = pi[i - 1];
        while k > 0 && bits[i] != bits[k] {
            k = pi[k - 1];
        }
        if bits[i] == bits[k] {
            k += 1;
        }
        pi[i] = k;
    }
    pi
}

/// Least period `p` of `w`, reported only when `w` shows two full repetitions
/// (`p <= |w| / 2`).
pub fn detect_period(w: &Word) -> Option<usize> {
    if w.len() < 2 {
        return None;
    }
    let bits = w.to_bools();
    let border = *prefix_function(&bits).last().expect("non-empty");
    let p = bits.len() - border;
    (2 * p <= bits.len()).then_some(p)
}

/// Per stage `k < depth`: does `a_{k,q_k-1}` strictly exceed every other `a_{k,i}`?
pub fn pea_condition(schedule: &ParamSchedule, depth: usize) -> Result<Vec<bool>> {
    (0..depth)
        .map(|k| {
            let s = schedule.checked_stage(k)?;
            let (last, rest) = s.a.split_last().expect("q >= 1");
            Ok(rest.iter().all(|x| last > x))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KalikowWitness {
    /// For each `n <= depth`, the max over `m <= n` and `i < q_{n+1}` of
    /// `a_{m,last} + ... + a_{n,last} + a_{n+1,i}`.
    pub values: Vec<u64>,
    /// Decided from the periodic tail; `None` without one.
    pub unbounded: Option<bool>,
}

/// Witness values for the unbounded-spacer-run condition.
pub fn kalikow_sup_condition(schedule: &ParamSchedule, depth: usize) -> Result<KalikowWitness> {
    let overflow = || Error::Overflow("spacer run witness exceeds u64".to_string());
    let mut values = Vec::with_capacity(depth + 1);
    // All terms are nonnegative, so the sum starting at m = 0 dominates.
    let mut run: u64 = 0;
    for n in 0..=depth {
        run = run
            .checked_add(schedule.checked_stage(n)?.last_spacers())
            .ok_or_else(overflow)?;
        let next_max = schedule
            .checked_stage(n + 1)?
            .a
            .iter()
            .copied()
            .max()
            .unwrap_or(0);
        values.push(run.checked_add(next_max).ok_or_else(overflow)?);
    }
    let unbounded = match schedule.tail {
        Tail::None => None,
        Tail::Periodic { .. } => schedule
            .tail_stages()
            .map(|t| t.iter().any(|s| s.last_spacers() > 0)),
    };
    Ok(KalikowWitness { values, unbounded })
}

/// First `len` symbols of the fixed point of `0 -> 01, 1 -> 00`.
pub fn period_doubling_prefix(len: usize) -> Word {
    let mut w = Word::zero();
    while w.len() < len {
        let mut next = Word::with_capacity(2 * w.len());
        for b in w.iter() {
            next.push(false);
            next.push(!b);
        }
        w = next;
    }
    w.truncate(len);
    w
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Occurrences {
    pub positions: Vec<usize>,
    pub gaps: Vec<usize>,
}

/// All (possibly overlapping) start positions of `pattern` in `w`.
pub fn occurrence_spacing(w: &Word, pattern: &Word) -> Occurrences {
    let positions = find_all(w, pattern);
    let gaps = positions.windows(2).map(|p| p[1] - p[0]).collect();
    Occurrences { positions, gaps }
}

fn find_all(w: &Word, pattern: &Word) -> Vec<usize> {
    let m = pattern.len();
    if m == 0 || m > w.len() {
        return Vec::new();
    }
    let pat = pattern.to_bools();
    let pi = prefix_function(&pat);
    let mut out = Vec::new();
    let mut k = 0usize;
    for (i, b) in w.iter().enumerate() {
        while k > 0 && b != pat[k] {
            k = pi[k - 1];
        }
        if b == pat[k] {
            k += 1;
        }
        if k == m {
            out.push(i + 1 - m);
            k = pi[k - 1];
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frequency {
    pub count: u64,
    pub windows: u64,
}

impl Frequency {
    /// `None` when there are no windows (pattern longer than the word).
    pub fn ratio(&self) -> Option<Ratio<u64>> {
        (self.windows > 0).then(|| Ratio::new(self.count, self.windows))
    }
}

/// Overlapping occurrence count over the number of window positions.
pub fn symbol_frequency(w: &Word, pattern: &Word) -> Frequency {
    let windows = if pattern.is_empty() || pattern.len() > w.len() {
        0
    } else {
        (w.len() - pattern.len() + 1) as u64
    };
    Frequency {
        count: find_all(w, pattern).len() as u64,
        windows,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpansivenessReport {
    pub depth: usize,
    pub pea: Vec<bool>,
    pub kalikow: KalikowWitness,
    /// Length of the block the period search ran on; `None` if over budget.
    pub evidence_length: Option<usize>,
    pub block_period: Option<usize>,
}

impl ExpansivenessReport {
    pub fn pea_everywhere(&self) -> bool {
        self.pea.iter().all(|&b| b)
    }
}

/// Gathers the expansiveness evidence available at `depth`. Nothing here
/// certifies expansiveness; a missing period only says none was seen.
pub fn expansiveness_report(
    schedule: &ParamSchedule,
    depth: usize,
    budget: u64,
) -> Result<ExpansivenessReport> {
    let pea = pea_condition(schedule, depth)?;
    // The witness at n needs stage n + 1; stop where the schedule does.
    let kalikow = match (0..=depth).rev().find(|&n| schedule.is_resolvable(n + 1)) {
        Some(n) => kalikow_sup_condition(schedule, n)?,
        None => KalikowWitness {
            values: Vec::new(),
            unbounded: None,
        },
    };
    let (evidence_length, block_period) = match build_block(schedule, depth, budget) {
        Ok(b) => (Some(b.len()), detect_period(&b)),
        Err(Error::BudgetExceeded { .. }) => (None, None),
        Err(e) => return Err(e),
    };
    Ok(ExpansivenessReport {
        depth,
        pea,
        kalikow,
        evidence_length,
        block_period,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Stage;
    use crate::word::DEFAULT_BUDGET;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn chacon_blocks() {
        let s = ParamSchedule::chacon();
        assert_eq!(build_block(&s, 0, DEFAULT_BUDGET).unwrap(), w("0"));
        assert_eq!(build_block(&s, 1, DEFAULT_BUDGET).unwrap(), w("0010"));
        assert_eq!(
            build_block(&s, 2, DEFAULT_BUDGET).unwrap(),
            w("0010001010010")
        );
    }

    #[test]
    fn odometer_block_is_all_zeros() {
        let b = build_block(&ParamSchedule::dyadic_odometer(), 3, DEFAULT_BUDGET).unwrap();
        assert_eq!(b, w("00000000"));
    }

    #[test]
    fn mixed_spacer_block() {
        let s = ParamSchedule::finite(vec![Stage::new(2, vec![0, 1]), Stage::new(2, vec![0, 2])]);
        assert_eq!(build_block(&s, 2, DEFAULT_BUDGET).unwrap(), w("00100111"));
    }

    #[test]
    fn block_budget_is_checked_first() {
        let err = build_block(&ParamSchedule::dyadic_odometer(), 40, 1 << 20).unwrap_err();
        assert_eq!(
            err,
            Error::BudgetExceeded {
                required: (1u64 << 40).to_string(),
                budget: 1 << 20
            }
        );
    }

    #[test]
    fn periods() {
        assert_eq!(detect_period(&w("01010101")), Some(2));
        assert_eq!(detect_period(&w("0")), None);
        assert_eq!(detect_period(&w("0000")), Some(1));
        // Least period 3 but only 1.66 repetitions.
        assert_eq!(detect_period(&w("00100")), None);
        let b3 = build_block(&ParamSchedule::chacon(), 3, DEFAULT_BUDGET).unwrap();
        assert_eq!(detect_period(&b3), None);
    }

    #[test]
    fn pea_flags() {
        assert_eq!(
            pea_condition(&ParamSchedule::chacon(), 3).unwrap(),
            vec![false; 3]
        );
        assert_eq!(
            pea_condition(&ParamSchedule::dyadic_odometer(), 2).unwrap(),
            vec![false; 2]
        );
        let s = ParamSchedule::periodic(vec![Stage::new(3, vec![0, 1, 4])], 1);
        assert_eq!(pea_condition(&s, 2).unwrap(), vec![true; 2]);
        // q = 1 holds vacuously.
        let s = ParamSchedule::finite(vec![Stage::new(1, vec![0])]);
        assert_eq!(pea_condition(&s, 1).unwrap(), vec![true]);
    }

    #[test]
    fn kalikow_odometer_and_chacon() {
        let k = kalikow_sup_condition(&ParamSchedule::dyadic_odometer(), 5).unwrap();
        assert_eq!(k.values, vec![0; 6]);
        assert_eq!(k.unbounded, Some(false));
        let k = kalikow_sup_condition(&ParamSchedule::chacon(), 5).unwrap();
        assert_eq!(k.values, vec![1; 6]);
        assert_eq!(k.unbounded, Some(false));
    }

    #[test]
    fn period_doubling() {
        assert_eq!(period_doubling_prefix(1), w("0"));
        assert_eq!(period_doubling_prefix(4), w("0100"));
        assert_eq!(period_doubling_prefix(8), w("01000101"));
        assert_eq!(period_doubling_prefix(10), w("0100010101"));
    }

    #[test]
    fn spacing() {
        let occ = occurrence_spacing(&w("01000100"), &w("0100"));
        assert_eq!(occ.positions, vec![0, 4]);
        assert_eq!(occ.gaps, vec![4]);
        assert!(occurrence_spacing(&w("111"), &w("0")).positions.is_empty());
        let pd = period_doubling_prefix(16);
        let occ = occurrence_spacing(&pd, &w("0100"));
        assert!(!occ.gaps.is_empty());
        assert!(occ.gaps.iter().all(|g| g % 4 == 0));
        // Overlaps are counted.
        assert_eq!(
            occurrence_spacing(&w("0000"), &w("00")).positions,
            vec![0, 1, 2]
        );
    }

    #[test]
    fn frequencies() {
        let b2 = build_block(&ParamSchedule::chacon(), 2, DEFAULT_BUDGET).unwrap();
        assert_eq!(
            symbol_frequency(&b2, &w("1")).ratio(),
            Some(Ratio::new(4, 13))
        );
        assert_eq!(
            symbol_frequency(&w("0000"), &w("0")).ratio(),
            Some(Ratio::new(1, 1))
        );
        assert_eq!(
            symbol_frequency(&w("0101"), &w("01")).ratio(),
            Some(Ratio::new(2, 3))
        );
        let none = symbol_frequency(&w("01"), &w("010"));
        assert_eq!(
            none,
            Frequency {
                count: 0,
                windows: 0
            }
        );
        assert_eq!(none.ratio(), None);
    }

    #[test]
    fn report_collects_evidence() {
        let rep = expansiveness_report(&ParamSchedule::chacon(), 4, DEFAULT_BUDGET).unwrap();
        assert_eq!(rep.evidence_length, Some(121));
        assert_eq!(rep.block_period, None);
        assert!(!rep.pea_everywhere());
        let rep = expansiveness_report(&ParamSchedule::dyadic_odometer(), 30, 1 << 10).unwrap();
        assert_eq!(rep.evidence_length, None);
    }
}
