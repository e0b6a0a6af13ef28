//! The map from the telescoped system onto its essentially expansive model.
//!
//! `X` is the diagram of the telescoped schedule and `Y` that of the replaced
//! schedule; both have heights `H_n`. A path of `X` lies in `E_n` when its
//! level-`n` edge is a spacer edge or a tower edge above the cut `i_n`. The
//! map sends paths outside every `E_n` to the same tower edges of `Y` and
//! routes the rest through the long spacer run `Hbar_N` at the top level `N`
//! where they meet `E_N`.
//!
//! Finite paths are read with the canonical extension, so `N(x)` is exact.

use crate::adic::{AdicPath, Column, Diagram, Neighbor, Step};
use crate::error::{Error, Result};
use crate::transform::ExpansiveModel;
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IsoContext {
    source: Diagram,
    target: Diagram,
    cut: Vec<usize>,
    run: Vec<u64>,
    max_spacers: Vec<u64>,
}

impl IsoContext {
    /// Both diagrams truncated at `depth`.
    pub fn new(model: &ExpansiveModel, depth: usize) -> Result<Self> {
        if depth > model.len() {
            return Err(Error::Depth {
                requested: depth,
                available: model.len(),
            });
        }
        let source = Diagram::from_stages(model.telescoped.stages[..depth].to_vec())?;
        let target = Diagram::from_stages(
            model.replaced[..depth]
                .iter()
                .map(|r| r.stage.clone())
                .collect(),
        )?;
        if source.heights() != target.heights() {
            return Err(Error::Invariant(
                "source and target heights differ".to_string(),
            ));
        }
        Ok(IsoContext {
            source,
            target,
            cut: model.replaced[..depth]
                .iter()
                .map(|r| r.cut_index)
                .collect(),
            run: model.replaced[..depth]
                .iter()
                .map(|r| r.replacement_run)
                .collect(),
            max_spacers: model.replaced[..depth]
                .iter()
                .map(|r| r.max_spacers)
                .collect(),
        })
    }

    pub fn depth(&self) -> usize {
        self.source.depth()
    }

    pub fn source(&self) -> &Diagram {
        &self.source
    }

    pub fn target(&self) -> &Diagram {
        &self.target
    }

    pub fn cut_indices(&self) -> &[usize] {
        &self.cut
    }

    pub fn replacement_runs(&self) -> &[u64] {
        &self.run
    }

    /// Overrides `i_n` without touching the diagrams. Only useful for
    /// checking that the verifier notices a broken construction.
    pub fn with_cut_index(mut self, n: usize, i: usize) -> Self {
        self.cut[n] = i;
        self
    }

    /// `x` is in `E_n`: its level-`n` edge is a spacer edge or a tower edge above `i_n`.
    pub fn in_e_n(&self, x: &AdicPath, n: usize) -> bool {
        if n >= x.depth() || n >= self.depth() {
            return false;
        }
        match x.step(n) {
            Step::Spacer { .. } => true,
            Step::Tower { i } => i > self.cut[n],
            Step::Down => false,
        }
    }

    /// `N(x)`: the greatest `n` with `x` in `E_n`, or `-1`.
    pub fn spacer_index(&self, x: &AdicPath) -> isize {
        (0..x.depth())
            .rev()
            .find(|&n| self.in_e_n(x, n))
            .map_or(-1, |n| n as isize)
    }

    /// The image of `x` in `Y`.
    pub fn phi(&self, x: &AdicPath) -> Result<AdicPath> {
        self.source.check_path(x)?;
        if x.end_column() == Column::Spacer {
            return Err(Error::OpenSpacerPath(x.depth()));
        }
        let big_n = self.spacer_index(x);
        if big_n < 0 {
            return AdicPath::new(Column::Tower, x.steps().to_vec())
                .and_then(|y| self.checked_image(y));
        }
        let n = big_n as usize;
        let mut steps = vec![Step::Down; n];
        let top = match x.step(n) {
            Step::Spacer { i, j } if i <= self.cut[n] => Step::Spacer { i, j },
            _ => {
                let j_next =
                    self.source.level_indices(x)?.j(n + 1).ok_or_else(|| {
                        Error::Invariant(format!("J_{} undefined for {x}", n + 1))
                    })?;
                let h_next = self.source.height(n + 1);
                let index = i128::from(j_next) - i128::from(h_next) + i128::from(self.run[n]);
                if index < 0 || index >= i128::from(self.run[n]) {
                    return Err(Error::Invariant(format!(
                        "spacer index {index} outside [0, {}) at level {n}",
                        self.run[n]
                    )));
                }
                Step::Spacer {
                    i: self.cut[n],
                    j: index as u64,
                }
            }
        };
        steps.push(top);
        steps.extend_from_slice(&x.steps()[n + 1..]);
        AdicPath::new(Column::Spacer, steps).and_then(|y| self.checked_image(y))
    }

    fn checked_image(&self, y: AdicPath) -> Result<AdicPath> {
        self.target
            .check_path(&y)
            .map_err(|e| Error::Invariant(format!("image {y} is not a path of the model: {e}")))?;
        Ok(y)
    }

    /// The preimage of `y`: the `X` path with the same level index just above
    /// `M'(y)` and the same tower edges from there on.
    pub fn phi_inverse(&self, y: &AdicPath) -> Result<AdicPath> {
        self.target.check_path(y)?;
        let indices = self.target.level_indices(y)?;
        let first = indices.first_level();
        let mut x = self
            .source
            .from_tower_coordinates(first, indices.values[0])?;
        let mut steps = x.steps().to_vec();
        steps.extend_from_slice(&y.steps()[first..]);
        x = AdicPath::new(x.root(), steps)?;
        self.source.check_path(&x)?;
        Ok(x)
    }

    /// `sum_n (sum_i A_{n,i} + Abar_n + H_n) / H_{n+1}` for `n < depth`, termwise.
    pub fn measure_zero_terms(&self) -> Vec<BigRational> {
        (0..self.depth())
            .map(|n| {
                let num = self.source.stage(n).spacer_total()
                    + self.max_spacers[n]
                    + self.source.height(n);
                BigRational::new(BigInt::from(num), BigInt::from(self.source.height(n + 1)))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Mode {
    Exhaustive,
    Sample { count: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureKind {
    /// `phi` itself failed.
    Mapping,
    /// `M'(phi(x)) != N(x)`.
    SpacerLevel,
    /// `J'_n(phi(x)) != J_n(x)` for some `N(x) < n <= D`.
    LevelIndex,
    /// Two tested paths share an image.
    Collision,
    /// `phi_inverse(phi(x)) != x`.
    RoundTrip,
    /// `phi(Tx) != S(phi(x))`.
    Equivariance,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub kind: FailureKind,
    pub path: AdicPath,
    pub detail: String,
}

const WITNESS_CAP: usize = 8;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureCounts {
    pub mapping: usize,
    pub spacer_level: usize,
    pub level_index: usize,
    pub collision: usize,
    pub round_trip: usize,
    pub equivariance: usize,
}

impl FailureCounts {
    pub fn total(&self) -> usize {
        self.mapping
            + self.spacer_level
            + self.level_index
            + self.collision
            + self.round_trip
            + self.equivariance
    }

    fn bump(&mut self, kind: FailureKind) -> usize {
        let slot = match kind {
            FailureKind::Mapping => &mut self.mapping,
            FailureKind::SpacerLevel => &mut self.spacer_level,
            FailureKind::LevelIndex => &mut self.level_index,
            FailureKind::Collision => &mut self.collision,
            FailureKind::RoundTrip => &mut self.round_trip,
            FailureKind::Equivariance => &mut self.equivariance,
        };
        *slot += 1;
        *slot
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsoReport {
    pub depth: usize,
    pub mode: Mode,
    pub paths_tested: usize,
    /// Tested paths that start with the spacer root edge.
    pub spacer_paths_tested: usize,
    /// Tested paths lying in some `E_n`.
    pub paths_in_e: usize,
    pub equivariance_checked: usize,
    /// `x` is the top path of `X` at this depth.
    pub excluded_source_overflow: usize,
    /// `phi(x)` is the top path of `Y` at this depth.
    pub excluded_target_overflow: usize,
    pub failures: FailureCounts,
    pub witnesses: Vec<Witness>,
    #[serde(with = "crate::num::rational_vec")]
    pub measure_zero_terms: Vec<BigRational>,
    #[serde(with = "crate::num::rational")]
    pub measure_zero_sum: BigRational,
    pub passed: bool,
}

impl IsoReport {
    fn fail(&mut self, kind: FailureKind, path: &AdicPath, detail: String) {
        if self.failures.bump(kind) <= WITNESS_CAP {
            self.witnesses.push(Witness {
                kind,
                path: path.clone(),
                detail,
            });
        }
    }
}

/// Checks the map on paths into `v_{depth,0}`: every one of them, or a
/// seeded uniform sample by level index.
pub fn verify_iso(ctx: &IsoContext, depth: usize, mode: Mode) -> Result<IsoReport> {
    if depth > ctx.depth() {
        return Err(Error::Depth {
            requested: depth,
            available: ctx.depth(),
        });
    }
    let paths: Vec<AdicPath> = match mode {
        Mode::Exhaustive => ctx.source.enumerate_paths(depth, Column::Tower)?,
        Mode::Sample { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = ctx.source.height(depth);
            (0..count)
                .map(|_| {
                    ctx.source
                        .from_tower_coordinates(depth, rng.gen_range(0..h))
                })
                .collect::<Result<_>>()?
        }
    };
    let terms = ctx.measure_zero_terms();
    let sum = terms
        .iter()
        .fold(BigRational::from_integer(BigInt::from(0)), |acc, t| acc + t);
    let mut report = IsoReport {
        depth,
        mode,
        paths_tested: 0,
        spacer_paths_tested: 0,
        paths_in_e: 0,
        equivariance_checked: 0,
        excluded_source_overflow: 0,
        excluded_target_overflow: 0,
        failures: FailureCounts::default(),
        witnesses: Vec::new(),
        measure_zero_terms: terms,
        measure_zero_sum: sum,
        passed: false,
    };
    let mut images: HashMap<AdicPath, AdicPath> = HashMap::new();
    for x in &paths {
        check_one(ctx, x, &mut report, &mut images)?;
    }
    report.passed = report.failures.total() == 0;
    Ok(report)
}

fn check_one(
    ctx: &IsoContext,
    x: &AdicPath,
    report: &mut IsoReport,
    images: &mut HashMap<AdicPath, AdicPath>,
) -> Result<()> {
    report.paths_tested += 1;
    if x.is_spacer_path() {
        report.spacer_paths_tested += 1;
    }
    let big_n = ctx.spacer_index(x);
    if big_n >= 0 {
        report.paths_in_e += 1;
    }
    let y = match ctx.phi(x) {
        Ok(y) => y,
        Err(e) => {
            report.fail(FailureKind::Mapping, x, e.to_string());
            return Ok(());
        }
    };

    let m_prime = y.spacer_level();
    if m_prime != Some(big_n) {
        report.fail(
            FailureKind::SpacerLevel,
            x,
            format!("N(x) = {big_n}, M'(phi(x)) = {m_prime:?}"),
        );
    }

    let jx = ctx.source.level_indices(x)?;
    let jy = ctx.target.level_indices(&y)?;
    let first = (big_n + 1) as usize;
    for n in first..=x.depth() {
        if jx.j(n) != jy.j(n) {
            report.fail(
                FailureKind::LevelIndex,
                x,
                format!("J_{n}: {:?} in X, {:?} in Y", jx.j(n), jy.j(n)),
            );
            break;
        }
    }

    if let Some(prev) = images.insert(y.clone(), x.clone()) {
        if &prev != x {
            report.fail(
                FailureKind::Collision,
                x,
                format!("same image {y} as {prev}"),
            );
        }
    }

    match ctx.phi_inverse(&y) {
        Ok(back) if &back == x => {}
        Ok(back) => report.fail(FailureKind::RoundTrip, x, format!("returned {back}")),
        Err(e) => report.fail(FailureKind::RoundTrip, x, e.to_string()),
    }

    let Neighbor::Path(tx) = ctx.source.successor(x)? else {
        report.excluded_source_overflow += 1;
        return Ok(());
    };
    let Neighbor::Path(sy) = ctx.target.successor(&y)? else {
        report.excluded_target_overflow += 1;
        return Ok(());
    };
    report.equivariance_checked += 1;
    match ctx.phi(&tx) {
        Ok(image) if image == sy => {}
        Ok(image) => report.fail(
            FailureKind::Equivariance,
            x,
            format!("phi(Tx) = {image}, S(phi(x)) = {sy}"),
        ),
        Err(e) => report.fail(FailureKind::Equivariance, x, e.to_string()),
    }
    Ok(())
}
