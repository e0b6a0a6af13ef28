//! Telescoping and the essentially expansive spacer replacement.
//!
//! Telescoping at levels `m_0 = 0 < m_1 < ...` collapses the stages between
//! consecutive levels into one stage `(Q_n, A_{n,*})` with the same towers.
//! The replacement then cuts each telescoped stage after copy `i_n` and turns
//! the remaining copies and spacers into a single spacer run of length
//! `Hbar_n`, which is longer than every other run at that stage.

use crate::error::{Error, Result};
use crate::params::{choose_telescoping_levels, Growth, ParamSchedule, Stage};
use num_bigint::{BigInt, BigUint};
use serde::{Deserialize, Serialize};

// Telescoped stages are materialized as explicit spacer lists.
const MAX_TELESCOPED_COPIES: usize = 1 << 24;

/// Mixed-radix digits of `i`, least significant first: `i = g_0 + g_1 q_0 + g_2 q_0 q_1 + ...`.
pub fn digit_decomposition(i: usize, radices: &[usize]) -> Result<Vec<usize>> {
    let mut rest = i;
    let mut digits = Vec::with_capacity(radices.len());
    for &q in radices {
        if q == 0 {
            return Err(Error::InvalidSchedule("radix 0".to_string()));
        }
        digits.push(rest % q);
        rest /= q;
    }
    if rest != 0 {
        let bound = radices
            .iter()
            .try_fold(1usize, |acc, &q| acc.checked_mul(q))
            .map_or_else(|| "overflow".to_string(), |b| b.to_string());
        return Err(Error::Range {
            value: i.to_string(),
            bound,
        });
    }
    Ok(digits)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TelescopedSchedule {
    pub base: ParamSchedule,
    /// `m_0, ..., m_N`.
    pub levels: Vec<usize>,
    /// `(Q_n, A_{n,*})` for `n < N`.
    pub stages: Vec<Stage>,
    /// `H_n = h_{m_n}` for `n <= N`.
    #[serde(with = "crate::num::biguint_vec")]
    pub heights: Vec<BigUint>,
}

impl TelescopedSchedule {
    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    pub fn as_schedule(&self) -> ParamSchedule {
        ParamSchedule::finite(self.stages.clone())
    }

    fn height_u64(&self, n: usize) -> Result<u64> {
        u64::try_from(&self.heights[n])
            .map_err(|_| Error::Overflow(format!("H_{n} = {} exceeds u64", self.heights[n])))
    }
}

fn check_levels(levels: &[usize]) -> Result<()> {
    match levels.first() {
        Some(0) => {}
        Some(m) => return Err(Error::InvalidLevels(format!("m_0 must be 0, got {m}"))),
        None => return Err(Error::InvalidLevels("no levels given".to_string())),
    }
    if let Some(w) = levels.windows(2).find(|w| w[0] >= w[1]) {
        return Err(Error::InvalidLevels(format!(
            "levels must increase strictly ({} then {})",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// Collapses `schedule` onto the levels `m`.
///
/// For copy `i` of the `m_n`-tower inside the `m_{n+1}`-tower, with digits
/// `g` of `i` in the radices `q_{m_n}, q_{m_n+1}, ...`, let `l` be the first
/// digit that is not maximal (the last digit if all are). The spacers above
/// that copy are `a_{m_n,g_0} + ... + a_{m_n+l,g_l}`.
pub fn telescope(schedule: &ParamSchedule, levels: &[usize]) -> Result<TelescopedSchedule> {
    schedule.check()?;
    check_levels(levels)?;
    let top = *levels.last().expect("checked non-empty");
    let h = crate::params::heights(schedule, top)?;
    let mut stages = Vec::with_capacity(levels.len() - 1);
    for w in levels.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let block: Vec<&Stage> = (lo..hi)
            .map(|k| schedule.checked_stage(k))
            .collect::<Result<_>>()?;
        let radices: Vec<usize> = block.iter().map(|s| s.q).collect();
        let copies = radices
            .iter()
            .try_fold(1usize, |acc, &q| acc.checked_mul(q))
            .filter(|&c| c <= MAX_TELESCOPED_COPIES)
            .ok_or_else(|| {
                Error::Overflow(format!(
                    "telescoped stage over levels {lo}..{hi} has more than {MAX_TELESCOPED_COPIES} copies"
                ))
            })?;
        let mut a = Vec::with_capacity(copies);
        for i in 0..copies {
            let g = digit_decomposition(i, &radices)?;
            let l = g
                .iter()
                .zip(&radices)
                .position(|(&d, &q)| d != q - 1)
                .unwrap_or(g.len() - 1);
            let mut total = 0u64;
            for k in 0..=l {
                total = total
                    .checked_add(block[k].a[g[k]])
                    .ok_or_else(|| Error::Overflow("telescoped spacer count".to_string()))?;
            }
            a.push(total);
        }
        stages.push(Stage::new(copies, a));
    }
    let heights = levels.iter().map(|&m| h.as_slice()[m].clone()).collect();
    Ok(TelescopedSchedule {
        base: schedule.clone(),
        levels: levels.to_vec(),
        stages,
        heights,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplacedStage {
    /// `Abar_n`: the largest spacer count at this stage.
    pub max_spacers: u64,
    /// `i_n`: the last copy kept.
    pub cut_index: usize,
    /// `Hbar_n`: length of the final spacer run.
    pub replacement_run: u64,
    /// `(Q'_n, A'_{n,*})`.
    pub stage: Stage,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelWarning {
    /// `Q'_n = 1`: this stage does not cut.
    SingleCopy { stage: usize },
    /// The builder raised the growth base after a trailing single-copy stage.
    GrowthRaised { from: u64, to: u64 },
}

impl std::fmt::Display for ModelWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelWarning::SingleCopy { stage } => {
                write!(f, "stage {stage} keeps a single copy (Q' = 1)")
            }
            ModelWarning::GrowthRaised { from, to } => {
                write!(f, "growth base raised from {from} to {to}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpansiveModel {
    pub telescoped: TelescopedSchedule,
    pub replaced: Vec<ReplacedStage>,
    pub growth: Option<Growth>,
    pub warnings: Vec<ModelWarning>,
}

impl ExpansiveModel {
    pub fn len(&self) -> usize {
        self.replaced.len()
    }

    pub fn is_empty(&self) -> bool {
        self.replaced.is_empty()
    }

    /// The schedule `(Q'_n, A'_{n,*})` of the new system.
    pub fn replaced_schedule(&self) -> ParamSchedule {
        ParamSchedule::finite(self.replaced.iter().map(|r| r.stage.clone()).collect())
    }

    pub fn cut_indices(&self) -> Vec<usize> {
        self.replaced.iter().map(|r| r.cut_index).collect()
    }

    pub fn has_single_copy_stage(&self) -> bool {
        self.warnings
            .iter()
            .any(|w| matches!(w, ModelWarning::SingleCopy { .. }))
    }
}

/// Replaces stages `0..n_stages` of `t`.
///
/// `i_n` is the greatest `i` with `(Q_n - i - 1) H_n + sum_{j >= i} A_{n,j} > Abar_n`
/// (strict), and that quantity is `Hbar_n`. Copies above `i_n`, with their
/// spacers, become one run of `Hbar_n` spacers.
pub fn expansive_replace(t: &TelescopedSchedule, n_stages: usize) -> Result<ExpansiveModel> {
    if n_stages > t.len() {
        return Err(Error::Depth {
            requested: n_stages,
            available: t.len(),
        });
    }
    let mut replaced = Vec::with_capacity(n_stages);
    let mut warnings = Vec::new();
    for n in 0..n_stages {
        let stage = &t.stages[n];
        let h = &t.heights[n];
        let r = replace_stage(stage, h, &t.heights[n + 1]).map_err(|e| match e {
            Error::Invariant(msg) => Error::Invariant(format!("stage {n}: {msg}")),
            other => other,
        })?;
        if r.stage.q == 1 {
            warnings.push(ModelWarning::SingleCopy { stage: n });
        }
        replaced.push(r);
    }
    Ok(ExpansiveModel {
        telescoped: t.clone(),
        replaced,
        growth: None,
        warnings,
    })
}

fn replace_stage(stage: &Stage, h: &BigUint, next_h: &BigUint) -> Result<ReplacedStage> {
    let q = stage.q;
    if q < 2 {
        return Err(Error::Invariant(
            "telescoped stage has a single copy, so no cut index exists".to_string(),
        ));
    }
    let max_spacers = *stage.a.iter().max().expect("q >= 2");
    let a_max = BigUint::from(max_spacers);
    // value(i) = (Q - i - 1) H + sum_{j >= i} A_j, decreasing in i.
    let mut suffix = BigUint::from(0u32);
    let mut found = None;
    for i in (0..q).rev() {
        suffix += stage.a[i];
        let value = BigUint::from(q - i - 1) * h + &suffix;
        if value > a_max {
            found = Some((i, value));
            break;
        }
    }
    let (cut, run) = found.ok_or_else(|| {
        Error::Invariant("no copy index satisfies the cut inequality".to_string())
    })?;

    // (Q - i_n - 2) H + sum_{j > i_n} A_j <= Abar, checked in signed arithmetic.
    let tail: u64 = stage.a[cut + 1..].iter().sum();
    let below = (BigInt::from(q as i64 - cut as i64 - 2)) * BigInt::from(h.clone()) + tail;
    if below > BigInt::from(max_spacers) {
        return Err(Error::Invariant(format!(
            "cut index {cut} is not the last one satisfying the inequality"
        )));
    }

    let replacement_run = u64::try_from(&run)
        .map_err(|_| Error::Overflow(format!("replacement run {run} exceeds u64")))?;
    let mut a: Vec<u64> = stage.a[..cut].to_vec();
    a.push(replacement_run);
    let new_stage = Stage::new(cut + 1, a);

    let new_h = BigUint::from(new_stage.q) * h + BigUint::from(new_stage.spacer_total());
    if &new_h != next_h {
        return Err(Error::Invariant(format!(
            "height changed from {next_h} to {new_h}"
        )));
    }
    let old_total = BigUint::from(stage.spacer_total());
    if BigUint::from(new_stage.spacer_total()) > old_total * 2u32 + h {
        return Err(Error::Invariant("spacer growth bound violated".to_string()));
    }
    Ok(ReplacedStage {
        max_spacers,
        cut_index: cut,
        replacement_run,
        stage: new_stage,
    })
}

/// Replaces a single copy per stage by a run of `H_n` spacers.
///
/// Copy `picks[n]` of the `n`-tower inside the `n+1`-tower is overwritten by
/// `H_n` spacers, which merge with the runs on either side. Copy 0 cannot be
/// picked: the new block must still begin with `B_n`. Stages past
/// `picks.len()` are kept as they are.
pub fn one_tower_variant(t: &TelescopedSchedule, picks: &[usize]) -> Result<ParamSchedule> {
    if picks.len() > t.len() {
        return Err(Error::InvalidPick(format!(
            "{} picks for {} stages",
            picks.len(),
            t.len()
        )));
    }
    let mut stages = Vec::with_capacity(t.len());
    for (n, stage) in t.stages.iter().enumerate() {
        let Some(&p) = picks.get(n) else {
            stages.push(stage.clone());
            continue;
        };
        if stage.q < 2 {
            return Err(Error::InvalidPick(format!("stage {n} has a single copy")));
        }
        if p == 0 || p >= stage.q {
            return Err(Error::InvalidPick(format!(
                "stage {n}: copy {p} must lie in 1..{}",
                stage.q
            )));
        }
        let h = t.height_u64(n)?;
        let merged = stage.a[p - 1]
            .checked_add(h)
            .and_then(|x| x.checked_add(stage.a[p]))
            .ok_or_else(|| Error::Overflow("merged spacer run".to_string()))?;
        let mut a = Vec::with_capacity(stage.q - 1);
        a.extend_from_slice(&stage.a[..p - 1]);
        a.push(merged);
        a.extend_from_slice(&stage.a[p + 1..]);
        stages.push(Stage::new(stage.q - 1, a));
    }
    Ok(ParamSchedule::finite(stages))
}

/// Picks the top copy at every stage.
pub fn last_copy_picks(t: &TelescopedSchedule) -> Vec<usize> {
    t.stages.iter().map(|s| s.q - 1).collect()
}

const MAX_GROWTH_RETRIES: usize = 4;

/// Levels, telescoping and replacement in one go.
///
/// A single-copy stage is allowed anywhere except the last computed stage;
/// there the growth base is doubled and the construction repeated, since
/// faster height growth pushes the cut index up.
pub fn build_expansive(
    schedule: &ParamSchedule,
    n_stages: usize,
    growth: Growth,
) -> Result<ExpansiveModel> {
    let mut growth = growth;
    let mut raised = Vec::new();
    let mut attempt = 0;
    loop {
        let levels = choose_telescoping_levels(schedule, n_stages, growth)?;
        let t = telescope(schedule, &levels)?;
        let mut model = expansive_replace(&t, n_stages)?;
        model.growth = Some(growth);
        let last_single = model.replaced.last().is_some_and(|r| r.stage.q == 1);
        if !last_single || attempt == MAX_GROWTH_RETRIES {
            model.warnings.splice(0..0, raised);
            return Ok(model);
        }
        let next = Growth {
            base: growth.base * 2,
        };
        raised.push(ModelWarning::GrowthRaised {
            from: growth.base,
            to: next.base,
        });
        growth = next;
        attempt += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::build_block;
    use crate::word::DEFAULT_BUDGET;

    #[test]
    fn digits() {
        assert_eq!(digit_decomposition(3, &[2, 2]).unwrap(), vec![1, 1]);
        assert_eq!(digit_decomposition(5, &[2, 2, 2]).unwrap(), vec![1, 0, 1]);
        assert_eq!(digit_decomposition(0, &[3, 4, 5]).unwrap(), vec![0, 0, 0]);
        assert!(matches!(
            digit_decomposition(4, &[2, 2]),
            Err(Error::Range { .. })
        ));
    }

    #[test]
    fn two_stage_telescope() {
        let (c, d) = (1, 2);
        let s = ParamSchedule::finite(vec![Stage::new(2, vec![0, c]), Stage::new(2, vec![0, d])]);
        let t = telescope(&s, &[0, 2]).unwrap();
        assert_eq!(t.stages, vec![Stage::new(4, vec![0, c, 0, c + d])]);
        let b = build_block(&t.as_schedule(), 1, DEFAULT_BUDGET).unwrap();
        assert_eq!(b.to_string(), "00100111");
    }

    #[test]
    fn odometer_telescope() {
        let t = telescope(&ParamSchedule::dyadic_odometer(), &[0, 1, 3]).unwrap();
        assert_eq!(t.stages, vec![Stage::plain(2), Stage::plain(4)]);
        let hs: Vec<u32> = t
            .heights
            .iter()
            .map(|h| u32::try_from(h).unwrap())
            .collect();
        assert_eq!(hs, vec![1, 2, 8]);
    }

    #[test]
    fn trivial_levels_are_identity() {
        let s = ParamSchedule::chacon();
        let t = telescope(&s, &[0, 1]).unwrap();
        assert_eq!(t.stages, vec![s.stages[0].clone()]);
    }

    #[test]
    fn malformed_levels() {
        let s = ParamSchedule::chacon();
        assert!(matches!(
            telescope(&s, &[1, 2]),
            Err(Error::InvalidLevels(_))
        ));
        assert!(matches!(
            telescope(&s, &[0, 2, 2]),
            Err(Error::InvalidLevels(_))
        ));
        assert!(matches!(telescope(&s, &[]), Err(Error::InvalidLevels(_))));
        let finite = ParamSchedule::finite(vec![Stage::plain(2)]);
        assert!(matches!(
            telescope(&finite, &[0, 2]),
            Err(Error::Depth { .. })
        ));
    }

    fn single_stage(q: usize, a: Vec<u64>, h0: u64) -> TelescopedSchedule {
        let stage = Stage::new(q, a);
        let h1 = q as u64 * h0 + stage.spacer_total();
        TelescopedSchedule {
            base: ParamSchedule::finite(vec![stage.clone()]),
            levels: vec![0, 1],
            stages: vec![stage],
            heights: vec![BigUint::from(h0), BigUint::from(h1)],
        }
    }

    #[test]
    fn replace_mixed_stage() {
        let t = single_stage(4, vec![0, 1, 0, 3], 1);
        let m = expansive_replace(&t, 1).unwrap();
        let r = &m.replaced[0];
        assert_eq!(r.max_spacers, 3);
        assert_eq!(r.cut_index, 2);
        assert_eq!(r.replacement_run, 4);
        assert_eq!(r.stage, Stage::new(3, vec![0, 1, 4]));
        assert!(m.warnings.is_empty());
    }

    #[test]
    fn replace_single_copy_warns() {
        let t = single_stage(2, vec![0, 0], 1);
        let m = expansive_replace(&t, 1).unwrap();
        assert_eq!(m.replaced[0].cut_index, 0);
        assert_eq!(m.replaced[0].stage, Stage::new(1, vec![1]));
        assert_eq!(m.warnings, vec![ModelWarning::SingleCopy { stage: 0 }]);
    }

    #[test]
    fn replace_odometer() {
        let levels: Vec<usize> = (0..=5).map(|n| n * (n + 1) / 2).collect();
        let t = telescope(&ParamSchedule::dyadic_odometer(), &levels).unwrap();
        let m = expansive_replace(&t, 5).unwrap();
        for (n, r) in m.replaced.iter().enumerate() {
            let q = 1usize << (n + 1);
            assert_eq!(r.max_spacers, 0);
            assert_eq!(r.cut_index, q - 2);
            assert_eq!(r.stage.q, q - 1);
            assert_eq!(r.replacement_run, 1u64 << (n * (n + 1) / 2));
        }
    }

    #[test]
    fn variant_examples() {
        let t = single_stage(4, vec![0, 0, 0, 0], 1);
        let v = one_tower_variant(&t, &[3]).unwrap();
        assert_eq!(v.stages, vec![Stage::new(3, vec![0, 0, 1])]);

        let t = single_stage(4, vec![0, 1, 0, 3], 5);
        let v = one_tower_variant(&t, &[1]).unwrap();
        assert_eq!(v.stages, vec![Stage::new(3, vec![6, 0, 3])]);

        assert!(matches!(
            one_tower_variant(&t, &[0]),
            Err(Error::InvalidPick(_))
        ));
        assert!(matches!(
            one_tower_variant(&t, &[4]),
            Err(Error::InvalidPick(_))
        ));
        assert!(matches!(
            one_tower_variant(&t, &[1, 1]),
            Err(Error::InvalidPick(_))
        ));
    }

    #[test]
    fn build_odometer_model() {
        let m = build_expansive(&ParamSchedule::dyadic_odometer(), 2, Growth::default()).unwrap();
        assert_eq!(m.telescoped.levels, vec![0, 1, 3]);
        let y = m.replaced_schedule();
        let b1 = build_block(&y, 1, DEFAULT_BUDGET).unwrap();
        let b2 = build_block(&y, 2, DEFAULT_BUDGET).unwrap();
        assert_eq!(b1.to_string(), "01");
        assert_eq!(b2.to_string(), "01010111");
        assert_eq!(m.warnings, vec![ModelWarning::SingleCopy { stage: 0 }]);
    }

    #[test]
    fn build_chacon_model_satisfies_pea() {
        let m = build_expansive(&ParamSchedule::chacon(), 2, Growth::default()).unwrap();
        let flags = crate::symbolic::pea_condition(&m.replaced_schedule(), 2).unwrap();
        assert_eq!(flags, vec![true, true]);
    }

    #[test]
    fn build_short_schedule_fails() {
        let s = ParamSchedule::finite(vec![Stage::plain(2); 2]);
        assert!(matches!(
            build_expansive(&s, 3, Growth::default()),
            Err(Error::Depth { .. })
        ));
    }

    #[test]
    fn model_json_round_trip() {
        let m = build_expansive(&ParamSchedule::chacon(), 3, Growth::default()).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        let back: ExpansiveModel = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
    }
}
