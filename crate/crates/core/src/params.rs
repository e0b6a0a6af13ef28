//! Cutting-and-stacking parameter schedules.
//!
//! A schedule is an explicit list of stages `(q_n, a_{n,0..q_n})` followed by
//! an optional periodic tail that repeats the last `p` explicit stages. Heights
//! and spacer sums are computed exactly.

use crate::error::{Error, Result};
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

/// One cutting stage: `q` columns, with `a[i]` spacers stacked above column `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stage {
    pub q: usize,
    pub a: Vec<u64>,
}

impl Stage {
    pub fn new(q: usize, a: Vec<u64>) -> Self {
        Stage { q, a }
    }

    /// Stage with `q` columns and no spacers.
    pub fn plain(q: usize) -> Self {
        Stage { q, a: vec![0; q] }
    }

    pub fn spacer_total(&self) -> u64 {
        self.a.iter().sum()
    }

    /// Spacer count above the last column.
    pub fn last_spacers(&self) -> u64 {
        self.a.last().copied().unwrap_or(0)
    }

    fn is_well_formed(&self) -> bool {
        self.q >= 1 && self.a.len() == self.q
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Tail {
    #[default]
    None,
    /// Repeat the last `period` explicit stages forever.
    Periodic { period: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSchedule {
    pub stages: Vec<Stage>,
    #[serde(default)]
    pub tail: Tail,
}

impl ParamSchedule {
    pub fn new(stages: Vec<Stage>, tail: Tail) -> Self {
        ParamSchedule { stages, tail }
    }

    pub fn finite(stages: Vec<Stage>) -> Self {
        Self::new(stages, Tail::None)
    }

    pub fn periodic(stages: Vec<Stage>, period: usize) -> Self {
        Self::new(stages, Tail::Periodic { period })
    }

    /// The dyadic odometer: `q_n = 2`, no spacers.
    pub fn dyadic_odometer() -> Self {
        Self::periodic(vec![Stage::plain(2)], 1)
    }

    /// Chacon's map: `B_{n+1} = B_n B_n 1 B_n`.
    pub fn chacon() -> Self {
        Self::periodic(vec![Stage::new(3, vec![0, 1, 0])], 1)
    }

    pub fn explicit_len(&self) -> usize {
        self.stages.len()
    }

    /// Index into `stages` of the stage at level `n`, if resolvable.
    fn resolve_index(&self, n: usize) -> Option<usize> {
        let len = self.stages.len();
        if n < len {
            return Some(n);
        }
        match self.tail {
            Tail::None => None,
            Tail::Periodic { period } if period >= 1 && period <= len => {
                Some(len - period + (n - len) % period)
            }
            Tail::Periodic { .. } => None,
        }
    }

    pub fn is_resolvable(&self, n: usize) -> bool {
        self.resolve_index(n).is_some()
    }

    /// Stage `n`, reading through the periodic tail.
    pub fn stage(&self, n: usize) -> Result<&Stage> {
        self.resolve_index(n)
            .map(|i| &self.stages[i])
            .ok_or(Error::Depth {
                requested: n,
                available: self.stages.len(),
            })
    }

    /// Stages `0..n`, cloned out of the schedule.
    pub fn stages_upto(&self, n: usize) -> Result<Vec<Stage>> {
        (0..n).map(|k| self.stage(k).cloned()).collect()
    }

    /// The stages making up the periodic tail, in order.
    pub fn tail_stages(&self) -> Option<&[Stage]> {
        match self.tail {
            Tail::Periodic { period } if period >= 1 && period <= self.stages.len() => {
                Some(&self.stages[self.stages.len() - period..])
            }
            _ => None,
        }
    }

    pub fn structural_violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (stage, s) in self.stages.iter().enumerate() {
            if s.q == 0 {
                out.push(Violation::ZeroCuts { stage });
            }
            if s.a.len() != s.q {
                out.push(Violation::LengthMismatch {
                    stage,
                    q: s.q,
                    len: s.a.len(),
                });
            }
        }
        if let Tail::Periodic { period } = self.tail {
            if period == 0 || period > self.stages.len() {
                out.push(Violation::BadPeriod {
                    period,
                    explicit: self.stages.len(),
                });
            }
        }
        out
    }

    /// Fails on the first structural violation.
    pub fn check(&self) -> Result<()> {
        match self.structural_violations().first() {
            None => Ok(()),
            Some(v) => Err(Error::InvalidSchedule(v.to_string())),
        }
    }

    /// Stage `n`, failing if it is not well formed.
    pub(crate) fn checked_stage(&self, n: usize) -> Result<&Stage> {
        let s = self.stage(n)?;
        if !s.is_well_formed() {
            return Err(Error::InvalidSchedule(format!(
                "stage {n} has q = {} and {} spacer counts",
                s.q,
                s.a.len()
            )));
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    ZeroCuts { stage: usize },
    LengthMismatch { stage: usize, q: usize, len: usize },
    BadPeriod { period: usize, explicit: usize },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::ZeroCuts { stage } => write!(f, "stage {stage}: q must be at least 1"),
            Violation::LengthMismatch { stage, q, len } => {
                write!(f, "stage {stage}: q = {q} but {len} spacer counts given")
            }
            Violation::BadPeriod { period, explicit } => write!(
                f,
                "periodic tail of length {period} with {explicit} explicit stages"
            ),
        }
    }
}

/// Tower heights `h_0..=h_n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HeightVector(#[serde(with = "crate::num::biguint_vec")] pub Vec<BigUint>);

impl HeightVector {
    pub fn get(&self, n: usize) -> Option<&BigUint> {
        self.0.get(n)
    }

    pub fn last(&self) -> &BigUint {
        self.0.last().expect("height vector always holds h_0")
    }

    pub fn depth(&self) -> usize {
        self.0.len() - 1
    }

    pub fn as_slice(&self) -> &[BigUint] {
        &self.0
    }
}

/// `h_0 = 1`, `h_{k+1} = q_k h_k + sum_i a_{k,i}`, for `k < n`.
pub fn heights(schedule: &ParamSchedule, n: usize) -> Result<HeightVector> {
    let mut h = Vec::with_capacity(n + 1);
    h.push(BigUint::one());
    for k in 0..n {
        let s = schedule.checked_stage(k)?;
        let next = &h[k] * BigUint::from(s.q) + BigUint::from(s.spacer_total());
        h.push(next);
    }
    Ok(HeightVector(h))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum TailVerdict {
    ProvedConvergent {
        /// Upper bound on the full infinite sum.
        #[serde(with = "crate::num::rational")]
        upper_bound: BigRational,
    },
    ProvedDivergent,
    UnknownAtDepth,
}

impl TailVerdict {
    pub fn is_convergent(&self) -> bool {
        matches!(self, TailVerdict::ProvedConvergent { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpacerRatioSum {
    pub depth: usize,
    #[serde(with = "crate::num::rational")]
    pub partial: BigRational,
    pub tail: TailVerdict,
}

fn ratio(num: u64, den: &BigUint) -> BigRational {
    BigRational::new(BigUint::from(num).into(), den.clone().into())
}

/// Shape of a periodic tail, as far as summability is concerned.
enum TailGrowth {
    /// Heights multiply by at least `factor > 1` per period.
    Geometric { factor: BigUint, period: usize },
    /// All `q = 1` and at least one spacer per period: heights grow linearly.
    Linear,
    /// All `q = 1`, no spacers: heights are eventually constant.
    Frozen,
}

fn tail_growth(schedule: &ParamSchedule) -> Option<TailGrowth> {
    let tail = schedule.tail_stages()?;
    let factor: BigUint = tail.iter().map(|s| BigUint::from(s.q)).product();
    if factor > BigUint::one() {
        Some(TailGrowth::Geometric {
            factor,
            period: tail.len(),
        })
    } else if tail.iter().any(|s| s.spacer_total() > 0) {
        Some(TailGrowth::Linear)
    } else {
        Some(TailGrowth::Frozen)
    }
}

/// Exact terms `s_k / h_{k+1}` for `k in from..to`, with `h` extended as needed.
fn ratio_terms(
    schedule: &ParamSchedule,
    h: &mut Vec<BigUint>,
    from: usize,
    to: usize,
) -> Result<Vec<BigRational>> {
    while h.len() <= to {
        let k = h.len() - 1;
        let s = schedule.checked_stage(k)?;
        let next = &h[k] * BigUint::from(s.q) + BigUint::from(s.spacer_total());
        h.push(next);
    }
    (from..to)
        .map(|k| Ok(ratio(schedule.checked_stage(k)?.spacer_total(), &h[k + 1])))
        .collect()
}

/// Upper bound on `sum_{k >= d} s_k / h_{k+1}`; `None` unless the tail is
/// periodic and provably summable.
pub fn tail_mass_bound(schedule: &ParamSchedule, d: usize) -> Result<Option<BigRational>> {
    schedule.check()?;
    let len = schedule.explicit_len();
    let mut h = heights(schedule, d.min(len))?.0;
    match tail_growth(schedule) {
        Some(TailGrowth::Geometric { factor, period }) => {
            // For k past the prefix the next `period` stages are a rotation of the
            // tail, so h_{k+1+p} >= factor * h_{k+1} and the tail is dominated by a
            // geometric series with ratio 1/factor.
            let start = d.max(len);
            let mut bound: BigRational = ratio_terms(schedule, &mut h, d, start)?
                .into_iter()
                .fold(BigRational::zero(), |acc, t| acc + t);
            let window: BigRational = ratio_terms(schedule, &mut h, start, start + period)?
                .into_iter()
                .fold(BigRational::zero(), |acc, t| acc + t);
            let f: BigRational = BigRational::from_integer(factor.into());
            bound += window * f.clone() / (f - BigRational::one());
            Ok(Some(bound))
        }
        Some(TailGrowth::Frozen) => {
            let start = d.max(len);
            let exact = ratio_terms(schedule, &mut h, d, start)?
                .into_iter()
                .fold(BigRational::zero(), |acc, t| acc + t);
            Ok(Some(exact))
        }
        Some(TailGrowth::Linear) | None => Ok(None),
    }
}

/// Partial sum `sum_{k<n} (sum_i a_{k,i}) / h_{k+1}` and a verdict on the whole series.
pub fn spacer_ratio_sum(schedule: &ParamSchedule, n: usize) -> Result<SpacerRatioSum> {
    schedule.check()?;
    let mut h = vec![BigUint::one()];
    let partial = ratio_terms(schedule, &mut h, 0, n)?
        .into_iter()
        .fold(BigRational::zero(), |acc, t| acc + t);
    let tail = match tail_growth(schedule) {
        Some(TailGrowth::Linear) => TailVerdict::ProvedDivergent,
        Some(_) => {
            let rest = tail_mass_bound(schedule, n)?.expect("summable tail has a bound");
            TailVerdict::ProvedConvergent {
                upper_bound: &partial + rest,
            }
        }
        None => TailVerdict::UnknownAtDepth,
    };
    Ok(SpacerRatioSum {
        depth: n,
        partial,
        tail,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub depth: usize,
    pub violations: Vec<Violation>,
    /// Explicit stages with `q > 1`.
    pub cut_stages: Vec<usize>,
    /// Whether the periodic part has a stage with `q > 1`; `None` without a tail.
    pub cut_in_tail: Option<bool>,
    /// Exact answer to "q > 1 for infinitely many n" when decidable.
    pub cuts_infinitely_often: Option<bool>,
    /// Partial sums of the spacer ratio series for `n = 0..=depth`.
    #[serde(with = "crate::num::rational_vec")]
    pub partial_sums: Vec<BigRational>,
    pub tail: TailVerdict,
    pub warnings: Vec<String>,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
            && self.cuts_infinitely_often != Some(false)
            && !matches!(self.tail, TailVerdict::ProvedDivergent)
    }
}

pub fn validate(schedule: &ParamSchedule, depth: usize) -> ValidityReport {
    let violations = schedule.structural_violations();
    let cut_stages: Vec<usize> = schedule
        .stages
        .iter()
        .enumerate()
        .filter(|(_, s)| s.q > 1)
        .map(|(k, _)| k)
        .collect();
    let cut_in_tail = schedule.tail_stages().map(|t| t.iter().any(|s| s.q > 1));
    let mut warnings = Vec::new();
    match cut_in_tail {
        Some(false) => warnings.push(
            "q = 1 at every tail stage: q > 1 only finitely often, so T would not be defined almost everywhere"
                .to_string(),
        ),
        None if violations.is_empty() => warnings.push(
            "no tail: whether q > 1 infinitely often cannot be decided from a finite prefix".to_string(),
        ),
        _ => {}
    }

    let (partial_sums, tail) = if violations.is_empty() {
        let reachable = if schedule.tail == Tail::None {
            depth.min(schedule.explicit_len())
        } else {
            depth
        };
        if reachable < depth {
            warnings.push(format!(
                "partial sums stop at depth {reachable}: no stages beyond the explicit prefix"
            ));
        }
        let mut h = vec![BigUint::one()];
        let terms = ratio_terms(schedule, &mut h, 0, reachable).unwrap_or_default();
        let mut acc = BigRational::zero();
        let mut sums = vec![acc.clone()];
        for t in terms {
            acc += t;
            sums.push(acc.clone());
        }
        let verdict = spacer_ratio_sum(schedule, reachable)
            .map(|r| r.tail)
            .unwrap_or(TailVerdict::UnknownAtDepth);
        if matches!(verdict, TailVerdict::ProvedDivergent) {
            warnings.push("spacer ratio series diverges: no finite invariant measure".to_string());
        }
        (sums, verdict)
    } else {
        (Vec::new(), TailVerdict::UnknownAtDepth)
    };

    ValidityReport {
        depth,
        violations,
        cut_stages,
        cut_in_tail,
        cuts_infinitely_often: cut_in_tail,
        partial_sums,
        tail,
        warnings,
    }
}

/// Growth rule for [`choose_telescoping_levels`]: level `n+1` must be at least
/// `base^(n+1)` times taller than level `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Growth {
    pub base: u64,
}

impl Default for Growth {
    fn default() -> Self {
        Growth { base: 2 }
    }
}

impl Growth {
    pub fn factor(&self, n: usize) -> BigUint {
        num_traits::pow(BigUint::from(self.base), n + 1)
    }
}

// Stop searching after this many levels past the last chosen one.
const MAX_LEVEL_SEARCH: usize = 1 << 16;

/// Greedy `m_0 = 0`, `m_{n+1}` = least `m > m_n` with `h_m >= factor(n) * h_{m_n}`.
pub fn choose_telescoping_levels(
    schedule: &ParamSchedule,
    count: usize,
    growth: Growth,
) -> Result<Vec<usize>> {
    schedule.check()?;
    if growth.base < 2 {
        return Err(Error::InvalidLevels(format!(
            "growth base must be at least 2, got {}",
            growth.base
        )));
    }
    if count > 0 && matches!(tail_growth(schedule), Some(TailGrowth::Frozen)) {
        // Heights are eventually constant; fail fast instead of scanning.
        let len = schedule.explicit_len();
        let h = heights(schedule, len)?;
        let need = growth.factor(0);
        if h.last() < &need {
            return Err(Error::InsufficientGrowth {
                what: "heights are eventually constant".to_string(),
            });
        }
    }
    let mut levels = vec![0usize];
    let mut h = vec![BigUint::one()];
    for n in 0..count {
        let prev = levels[n];
        let target = growth.factor(n) * &h[prev];
        let mut m = prev + 1;
        loop {
            if m - prev > MAX_LEVEL_SEARCH {
                return Err(Error::InsufficientGrowth {
                    what: format!("{target} within {MAX_LEVEL_SEARCH} levels of {prev}"),
                });
            }
            if h.len() <= m {
                let s = schedule.checked_stage(m - 1)?;
                let next = &h[m - 1] * BigUint::from(s.q) + BigUint::from(s.spacer_total());
                h.push(next);
            }
            if h[m] >= target {
                break;
            }
            m += 1;
        }
        levels.push(m);
    }
    Ok(levels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn hv(v: &[u64]) -> Vec<BigUint> {
        v.iter().map(|&x| BigUint::from(x)).collect()
    }

    #[test]
    fn odometer_heights_are_powers_of_two() {
        let h = heights(&ParamSchedule::dyadic_odometer(), 5).unwrap();
        assert_eq!(h.0, hv(&[1, 2, 4, 8, 16, 32]));
    }

    #[test]
    fn chacon_heights_match_closed_form() {
        let h = heights(&ParamSchedule::chacon(), 3).unwrap();
        assert_eq!(h.0, hv(&[1, 4, 13, 40]));
        let h = heights(&ParamSchedule::chacon(), 12).unwrap();
        for (n, x) in h.0.iter().enumerate() {
            let closed = (num_traits::pow(BigUint::from(3u32), n + 1) - 1u32) / 2u32;
            assert_eq!(*x, closed);
        }
    }

    #[test]
    fn depth_zero_is_unit() {
        let s = ParamSchedule::finite(vec![]);
        assert_eq!(heights(&s, 0).unwrap().0, hv(&[1]));
    }

    #[test]
    fn finite_schedule_depth_error() {
        let s = ParamSchedule::finite(vec![Stage::plain(2)]);
        assert!(heights(&s, 1).is_ok());
        assert_eq!(
            heights(&s, 2).unwrap_err(),
            Error::Depth {
                requested: 1,
                available: 1
            }
        );
    }

    #[test]
    fn periodic_tail_repeats_last_stages() {
        let s = ParamSchedule::periodic(vec![Stage::plain(5), Stage::plain(2), Stage::plain(3)], 2);
        let qs: Vec<usize> = (0..7).map(|k| s.stage(k).unwrap().q).collect();
        assert_eq!(qs, vec![5, 2, 3, 2, 3, 2, 3]);
    }

    #[test]
    fn odometer_ratio_sum_is_zero() {
        let r0 = spacer_ratio_sum(&ParamSchedule::dyadic_odometer(), 7).unwrap();
        assert!(r0.partial.is_zero());
        assert!(r0.tail.is_convergent());
    }

    #[test]
    fn chacon_ratio_sum() {
        let s = spacer_ratio_sum(&ParamSchedule::chacon(), 3).unwrap();
        assert_eq!(s.partial, r(1, 4) + r(1, 13) + r(1, 40));
        assert_eq!(s.partial, r(183, 520));
        match s.tail {
            TailVerdict::ProvedConvergent { upper_bound } => {
                // True value is sum 2/(3^{k+2}-1) ~ 0.3613...
                assert!(upper_bound > s.partial);
                assert!(upper_bound < r(37, 100));
            }
            other => panic!("expected convergence, got {other:?}"),
        }
    }

    #[test]
    fn spacer_equal_to_height_diverges() {
        // a_n = h_n for the first three stages, then q = 1 with constant spacers.
        let s = ParamSchedule::periodic(
            vec![
                Stage::new(1, vec![1]),
                Stage::new(1, vec![2]),
                Stage::new(1, vec![4]),
            ],
            1,
        );
        let out = spacer_ratio_sum(&s, 3).unwrap();
        assert_eq!(out.partial, r(3, 2));
        assert_eq!(out.tail, TailVerdict::ProvedDivergent);
    }

    #[test]
    fn finite_tail_is_unknown() {
        let s = ParamSchedule::finite(vec![Stage::new(2, vec![0, 1])]);
        assert_eq!(
            spacer_ratio_sum(&s, 1).unwrap().tail,
            TailVerdict::UnknownAtDepth
        );
    }

    #[test]
    fn validate_odometer() {
        let rep = validate(&ParamSchedule::dyadic_odometer(), 4);
        assert!(rep.is_valid());
        assert_eq!(rep.cuts_infinitely_often, Some(true));
        assert_eq!(rep.partial_sums.len(), 5);
    }

    #[test]
    fn validate_flags_length_mismatch() {
        let s = ParamSchedule::finite(vec![Stage::new(2, vec![0])]);
        let rep = validate(&s, 2);
        assert_eq!(
            rep.violations,
            vec![Violation::LengthMismatch {
                stage: 0,
                q: 2,
                len: 1
            }]
        );
        assert!(!rep.is_valid());
    }

    #[test]
    fn validate_flags_trivial_tail() {
        let s = ParamSchedule::periodic(vec![Stage::plain(2), Stage::new(1, vec![0])], 1);
        let rep = validate(&s, 3);
        assert_eq!(rep.cuts_infinitely_often, Some(false));
        assert!(rep.warnings.iter().any(|w| w.contains("almost everywhere")));
        assert!(!rep.is_valid());
    }

    #[test]
    fn validate_flags_bad_period() {
        let s = ParamSchedule::periodic(vec![Stage::plain(2)], 3);
        assert!(matches!(
            validate(&s, 1).violations[..],
            [Violation::BadPeriod { period: 3, .. }]
        ));
    }

    #[test]
    fn telescoping_levels_odometer() {
        let m = choose_telescoping_levels(&ParamSchedule::dyadic_odometer(), 4, Growth::default())
            .unwrap();
        assert_eq!(m, vec![0, 1, 3, 6, 10]);
    }

    #[test]
    fn telescoping_levels_chacon() {
        let m = choose_telescoping_levels(&ParamSchedule::chacon(), 2, Growth::default()).unwrap();
        assert_eq!(m, vec![0, 1, 3]);
        let m = choose_telescoping_levels(&ParamSchedule::chacon(), 0, Growth::default()).unwrap();
        assert_eq!(m, vec![0]);
    }

    #[test]
    fn telescoping_levels_run_out() {
        let s = ParamSchedule::finite(vec![Stage::plain(2); 3]);
        assert!(matches!(
            choose_telescoping_levels(&s, 3, Growth::default()),
            Err(Error::Depth { .. })
        ));
        let frozen = ParamSchedule::periodic(vec![Stage::new(1, vec![0])], 1);
        assert!(matches!(
            choose_telescoping_levels(&frozen, 1, Growth::default()),
            Err(Error::InsufficientGrowth { .. })
        ));
    }

    #[test]
    fn schedule_json_shape() {
        let text = r#"{"stages":[{"q":2,"a":[0,0]}],"tail":{"kind":"periodic","period":1}}"#;
        let s: ParamSchedule = serde_json::from_str(text).unwrap();
        assert_eq!(s, ParamSchedule::dyadic_odometer());
        assert_eq!(serde_json::to_string(&s).unwrap(), text);
        let none: ParamSchedule =
            serde_json::from_str(r#"{"stages":[],"tail":{"kind":"none"}}"#).unwrap();
        assert_eq!(none.tail, Tail::None);
        assert!(serde_json::from_str::<ParamSchedule>(r#"{"stages":[],"foo":1}"#).is_err());
        assert!(
            serde_json::from_str::<ParamSchedule>(r#"{"stages":[{"q":2,"a":[0,-1]}]}"#).is_err()
        );
    }
}
