//! The two-column ordered Bratteli diagram of a rank-one schedule.
//!
//! Vertices are the root `v_{-1}` and `v_{n,0}`, `v_{n,1}` for `n >= 0`.
//! Edges from level `n` to level `n+1` are the tower edges `e_{n,i}`
//! (`v_{n,0} -> v_{n+1,0}`), the spacer edges `e_{n,i,j}` (`v_{n,1} -> v_{n+1,0}`)
//! and the single down edge `d_n` (`v_{n,1} -> v_{n+1,1}`). Edges entering
//! `v_{n+1,0}` are ordered
//!
//! ```text
//! e_{n,0} < e_{n,0,0} < ... < e_{n,0,a_{n,0}-1} < e_{n,1} < e_{n,1,0} < ...
//! ```
//!
//! A finite path of depth `D` stands for the infinite path that continues with
//! `e_{n,0}` at every level `n >= D`.

use crate::error::{Error, Result};
use crate::params::{heights, tail_mass_bound, ParamSchedule, Stage};
use crate::word::Word;
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Column {
    /// `v_{n,0}`: the tower column.
    Tower,
    /// `v_{n,1}`: the spacer column.
    Spacer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Vertex {
    /// `-1` for the root.
    pub level: isize,
    pub column: Column,
}

/// The edge a path takes from level `n` to level `n + 1` (`n >= 0`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Step {
    Tower { i: usize },
    Spacer { i: usize, j: u64 },
    Down,
}

impl Step {
    pub fn source_column(self) -> Column {
        match self {
            Step::Tower { .. } => Column::Tower,
            Step::Spacer { .. } | Step::Down => Column::Spacer,
        }
    }

    pub fn target_column(self) -> Column {
        match self {
            Step::Tower { .. } | Step::Spacer { .. } => Column::Tower,
            Step::Down => Column::Spacer,
        }
    }
}

/// An edge with its level, for display and export.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Edge {
    RootNonspacer,
    RootSpacer,
    Tower { level: usize, i: usize },
    Spacer { level: usize, i: usize, j: u64 },
    Down { level: usize },
}

impl Edge {
    fn at(level: usize, step: Step) -> Edge {
        match step {
            Step::Tower { i } => Edge::Tower { level, i },
            Step::Spacer { i, j } => Edge::Spacer { level, i, j },
            Step::Down => Edge::Down { level },
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Edge::RootNonspacer => write!(f, "e_{{-1,0}}"),
            Edge::RootSpacer => write!(f, "e_{{-1,1}}"),
            Edge::Tower { level, i } => write!(f, "e_{{{level},{i}}}"),
            Edge::Spacer { level, i, j } => write!(f, "e_{{{level},{i},{j}}}"),
            Edge::Down { level } => write!(f, "d_{level}"),
        }
    }
}

/// A finite path from the root. `steps[n]` is the edge from level `n` to `n + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "PathRepr", into = "PathRepr")]
pub struct AdicPath {
    root: Column,
    steps: Vec<Step>,
}

impl AdicPath {
    /// Checks vertex compatibility only; bounds are checked by [`Diagram::check_path`].
    pub fn new(root: Column, steps: Vec<Step>) -> Result<Self> {
        let mut column = root;
        for (n, s) in steps.iter().enumerate() {
            if s.source_column() != column {
                return Err(Error::InvalidPath(format!(
                    "edge {} leaves the wrong column at level {n}",
                    Edge::at(n, *s)
                )));
            }
            column = s.target_column();
        }
        Ok(AdicPath { root, steps })
    }

    pub fn depth(&self) -> usize {
        self.steps.len()
    }

    pub fn root(&self) -> Column {
        self.root
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    /// Edge at `level`; `-1` is the root edge. Levels past the depth read the
    /// canonical extension.
    pub fn edge(&self, level: isize) -> Edge {
        if level < 0 {
            return match self.root {
                Column::Tower => Edge::RootNonspacer,
                Column::Spacer => Edge::RootSpacer,
            };
        }
        let n = level as usize;
        match self.steps.get(n) {
            Some(&s) => Edge::at(n, s),
            None => Edge::Tower { level: n, i: 0 },
        }
    }

    /// Step at level `n`, reading the canonical extension past the depth.
    pub fn step(&self, n: usize) -> Step {
        self.steps.get(n).copied().unwrap_or(Step::Tower { i: 0 })
    }

    pub fn end(&self) -> Vertex {
        Vertex {
            level: self.steps.len() as isize,
            column: self.end_column(),
        }
    }

    pub fn end_column(&self) -> Column {
        self.steps.last().map_or(self.root, |s| s.target_column())
    }

    /// Starts with the spacer root edge (symbol `1` in the orbit coding).
    pub fn is_spacer_path(&self) -> bool {
        self.root == Column::Spacer
    }

    /// Level of the spacer edge through which the path leaves column 1;
    /// `-1` for nonspacer paths and `None` if it never leaves within its depth.
    pub fn spacer_level(&self) -> Option<isize> {
        match self.root {
            Column::Tower => Some(-1),
            Column::Spacer => self
                .steps
                .iter()
                .position(|s| matches!(s, Step::Spacer { .. }))
                .map(|m| m as isize),
        }
    }

    /// The same point, written out to `depth` with the canonical extension.
    pub fn extended(&self, depth: usize) -> Result<AdicPath> {
        if depth < self.depth() {
            return Err(Error::InvalidPath(format!(
                "cannot extend a depth-{} path to depth {depth}",
                self.depth()
            )));
        }
        if self.end_column() != Column::Tower {
            return Err(Error::OpenSpacerPath(self.depth()));
        }
        let mut steps = self.steps.clone();
        steps.resize(depth, Step::Tower { i: 0 });
        Ok(AdicPath {
            root: self.root,
            steps,
        })
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        (-1..self.steps.len() as isize).map(|l| self.edge(l))
    }
}

impl fmt::Display for AdicPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (k, e) in self.edges().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{e}")?;
        }
        f.write_str(")")
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum RootRepr {
    Spacer,
    Nonspacer,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum EdgeRepr {
    Tower { level: usize, i: usize },
    Spacer { level: usize, i: usize, j: u64 },
    Down { level: usize },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PathRepr {
    root: RootRepr,
    edges: Vec<EdgeRepr>,
}

impl From<AdicPath> for PathRepr {
    fn from(p: AdicPath) -> Self {
        PathRepr {
            root: match p.root {
                Column::Tower => RootRepr::Nonspacer,
                Column::Spacer => RootRepr::Spacer,
            },
            edges: p
                .steps
                .iter()
                .enumerate()
                .map(|(level, s)| match *s {
                    Step::Tower { i } => EdgeRepr::Tower { level, i },
                    Step::Spacer { i, j } => EdgeRepr::Spacer { level, i, j },
                    Step::Down => EdgeRepr::Down { level },
                })
                .collect(),
        }
    }
}

impl TryFrom<PathRepr> for AdicPath {
    type Error = Error;

    fn try_from(r: PathRepr) -> Result<Self> {
        let root = match r.root {
            RootRepr::Nonspacer => Column::Tower,
            RootRepr::Spacer => Column::Spacer,
        };
        let mut steps = Vec::with_capacity(r.edges.len());
        for (n, e) in r.edges.into_iter().enumerate() {
            let (level, step) = match e {
                EdgeRepr::Tower { level, i } => (level, Step::Tower { i }),
                EdgeRepr::Spacer { level, i, j } => (level, Step::Spacer { i, j }),
                EdgeRepr::Down { level } => (level, Step::Down),
            };
            if level != n {
                return Err(Error::InvalidPath(format!(
                    "edge {n} is labelled with level {level}"
                )));
            }
            steps.push(step);
        }
        AdicPath::new(root, steps)
    }
}

/// Outcome of moving one step along the adic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Neighbor {
    Path(AdicPath),
    /// Every edge within this depth is extremal; the finite truncation cannot
    /// represent the neighbor.
    Overflow(usize),
}

impl Neighbor {
    pub fn path(self) -> Option<AdicPath> {
        match self {
            Neighbor::Path(p) => Some(p),
            Neighbor::Overflow(_) => None,
        }
    }
}

/// `J_n` for `n = M+1 ..= depth`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelIndices {
    /// `M`: the spacer level, `-1` for nonspacer paths.
    pub spacer_level: isize,
    pub depth: usize,
    /// `values[k]` is `J_{M+1+k}`.
    pub values: Vec<u64>,
}

impl LevelIndices {
    pub fn first_level(&self) -> usize {
        (self.spacer_level + 1) as usize
    }

    /// `J_n`; constant past the depth under the canonical extension.
    pub fn j(&self, n: usize) -> Option<u64> {
        let first = self.first_level();
        if n < first {
            return None;
        }
        let k = (n - first).min(self.values.len() - 1);
        Some(self.values[k])
    }

    pub fn top(&self) -> u64 {
        *self.values.last().expect("J at M+1 always exists")
    }
}

/// The diagram truncated at a fixed depth, with per-level offsets precomputed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagram {
    stages: Vec<Stage>,
    heights: Vec<u64>,
    /// `spacer_prefix[n][i] = a_{n,0} + ... + a_{n,i-1}`, length `q_n + 1`.
    spacer_prefix: Vec<Vec<u64>>,
}

impl Diagram {
    pub fn new(schedule: &ParamSchedule, depth: usize) -> Result<Self> {
        let mut stages = Vec::with_capacity(depth);
        for n in 0..depth {
            stages.push(schedule.checked_stage(n)?.clone());
        }
        Self::from_stages(stages)
    }

    pub fn from_stages(stages: Vec<Stage>) -> Result<Self> {
        let mut heights = vec![1u64];
        let mut spacer_prefix = Vec::with_capacity(stages.len());
        for (n, s) in stages.iter().enumerate() {
            if s.q == 0 || s.a.len() != s.q {
                return Err(Error::InvalidSchedule(format!("stage {n} is malformed")));
            }
            let mut prefix = Vec::with_capacity(s.q + 1);
            let mut acc = 0u64;
            prefix.push(0);
            for &x in &s.a {
                acc = acc
                    .checked_add(x)
                    .ok_or_else(|| Error::Overflow(format!("spacer total at level {n}")))?;
                prefix.push(acc);
            }
            let h = (s.q as u64)
                .checked_mul(heights[n])
                .and_then(|t| t.checked_add(acc))
                .ok_or_else(|| Error::Overflow(format!("height h_{} exceeds u64", n + 1)))?;
            heights.push(h);
            spacer_prefix.push(prefix);
        }
        Ok(Diagram {
            stages,
            heights,
            spacer_prefix,
        })
    }

    pub fn depth(&self) -> usize {
        self.stages.len()
    }

    pub fn height(&self, n: usize) -> u64 {
        self.heights[n]
    }

    pub fn heights(&self) -> &[u64] {
        &self.heights
    }

    pub fn stage(&self, n: usize) -> &Stage {
        &self.stages[n]
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    /// Position of the bottom of copy `i` of the `n`-tower inside the `n+1`-tower.
    pub fn copy_offset(&self, n: usize, i: usize) -> u64 {
        i as u64 * self.heights[n] + self.spacer_prefix[n][i]
    }

    /// Zero-based position of an edge among the edges entering its target.
    pub fn rank(&self, n: usize, step: Step) -> u64 {
        match step {
            Step::Tower { i } => i as u64 + self.spacer_prefix[n][i],
            Step::Spacer { i, j } => i as u64 + 1 + self.spacer_prefix[n][i] + j,
            Step::Down => 0,
        }
    }

    fn require_depth(&self, depth: usize) -> Result<()> {
        if depth > self.depth() {
            return Err(Error::Depth {
                requested: depth,
                available: self.depth(),
            });
        }
        Ok(())
    }

    /// Full validity: vertex compatibility and index bounds at every level.
    pub fn check_path(&self, path: &AdicPath) -> Result<()> {
        self.require_depth(path.depth())?;
        let mut column = path.root;
        for (n, &s) in path.steps.iter().enumerate() {
            if s.source_column() != column {
                return Err(Error::InvalidPath(format!(
                    "{} leaves the wrong column",
                    Edge::at(n, s)
                )));
            }
            let stage = &self.stages[n];
            let ok = match s {
                Step::Tower { i } => i < stage.q,
                Step::Spacer { i, j } => i < stage.q && j < stage.a[i],
                Step::Down => true,
            };
            if !ok {
                return Err(Error::InvalidPath(format!(
                    "{} does not exist in this diagram",
                    Edge::at(n, s)
                )));
            }
            column = s.target_column();
        }
        Ok(())
    }

    fn minimal_steps(column: Column, depth: usize) -> (Column, Vec<Step>) {
        match column {
            Column::Tower => (Column::Tower, vec![Step::Tower { i: 0 }; depth]),
            Column::Spacer => (Column::Spacer, vec![Step::Down; depth]),
        }
    }

    fn maximal_steps(&self, column: Column, depth: usize) -> (Column, Vec<Step>) {
        let mut rev = Vec::with_capacity(depth);
        let mut col = column;
        for n in (0..depth).rev() {
            let step = match col {
                Column::Spacer => Step::Down,
                Column::Tower => {
                    let s = &self.stages[n];
                    let last = s.q - 1;
                    match s.a[last] {
                        0 => Step::Tower { i: last },
                        a => Step::Spacer { i: last, j: a - 1 },
                    }
                }
            };
            col = step.source_column();
            rev.push(step);
        }
        rev.reverse();
        (col, rev)
    }

    /// The least path into `v_{depth,column}`.
    pub fn minimal_path(&self, depth: usize, column: Column) -> Result<AdicPath> {
        self.require_depth(depth)?;
        let (root, steps) = Self::minimal_steps(column, depth);
        Ok(AdicPath { root, steps })
    }

    /// The greatest path into `v_{depth,column}`.
    pub fn maximal_path(&self, depth: usize, column: Column) -> Result<AdicPath> {
        self.require_depth(depth)?;
        let (root, steps) = self.maximal_steps(column, depth);
        Ok(AdicPath { root, steps })
    }

    fn next_step(&self, n: usize, step: Step) -> Option<Step> {
        let s = &self.stages[n];
        match step {
            Step::Tower { i } if s.a[i] > 0 => Some(Step::Spacer { i, j: 0 }),
            Step::Spacer { i, j } if j + 1 < s.a[i] => Some(Step::Spacer { i, j: j + 1 }),
            Step::Tower { i } | Step::Spacer { i, .. } if i + 1 < s.q => {
                Some(Step::Tower { i: i + 1 })
            }
            _ => None,
        }
    }

    fn prev_step(&self, n: usize, step: Step) -> Option<Step> {
        let s = &self.stages[n];
        match step {
            Step::Spacer { i, j } if j > 0 => Some(Step::Spacer { i, j: j - 1 }),
            Step::Spacer { i, .. } => Some(Step::Tower { i }),
            Step::Tower { i } if i > 0 => match s.a[i - 1] {
                0 => Some(Step::Tower { i: i - 1 }),
                a => Some(Step::Spacer { i: i - 1, j: a - 1 }),
            },
            _ => None,
        }
    }

    /// The Vershik successor: bump the lowest non-maximal edge and reset
    /// everything below it to the minimal path into the new source vertex.
    pub fn successor(&self, path: &AdicPath) -> Result<Neighbor> {
        self.check_path(path)?;
        for n in 0..path.depth() {
            if let Some(next) = self.next_step(n, path.steps[n]) {
                let (root, mut steps) = Self::minimal_steps(next.source_column(), n);
                steps.push(next);
                steps.extend_from_slice(&path.steps[n + 1..]);
                return Ok(Neighbor::Path(AdicPath { root, steps }));
            }
        }
        Ok(Neighbor::Overflow(path.depth()))
    }

    /// Mirror of [`Diagram::successor`].
    pub fn predecessor(&self, path: &AdicPath) -> Result<Neighbor> {
        self.check_path(path)?;
        for n in 0..path.depth() {
            if let Some(prev) = self.prev_step(n, path.steps[n]) {
                let (root, mut steps) = self.maximal_steps(prev.source_column(), n);
                steps.push(prev);
                steps.extend_from_slice(&path.steps[n + 1..]);
                return Ok(Neighbor::Path(AdicPath { root, steps }));
            }
        }
        Ok(Neighbor::Overflow(path.depth()))
    }

    /// Lexicographic comparison from the top level down; `None` when the paths
    /// end at different vertices.
    pub fn compare(&self, x: &AdicPath, y: &AdicPath) -> Option<Ordering> {
        if x.depth() != y.depth() || x.end_column() != y.end_column() {
            return None;
        }
        for n in (0..x.depth()).rev() {
            let (a, b) = (x.steps[n], y.steps[n]);
            if a != b {
                return Some(self.rank(n, a).cmp(&self.rank(n, b)));
            }
        }
        Some(x.root.cmp(&y.root))
    }

    /// `M` and `J_{M+1}, ..., J_D` from the path's edges.
    pub fn level_indices(&self, path: &AdicPath) -> Result<LevelIndices> {
        self.check_path(path)?;
        if path.end_column() == Column::Spacer {
            return Err(Error::OpenSpacerPath(path.depth()));
        }
        let m = path.spacer_level().expect("path ends in the tower column");
        let mut values = Vec::with_capacity(path.depth() + 1);
        let first = if m < 0 {
            values.push(0);
            0
        } else {
            let mu = m as usize;
            let Step::Spacer { i, j } = path.steps[mu] else {
                unreachable!("spacer level points at a spacer edge")
            };
            values.push((i as u64 + 1) * self.heights[mu] + self.spacer_prefix[mu][i] + j);
            mu + 1
        };
        for n in first..path.depth() {
            let Step::Tower { i } = path.steps[n] else {
                unreachable!("only tower edges follow the spacer level")
            };
            let j = self.copy_offset(n, i) + values.last().expect("non-empty");
            values.push(j);
        }
        Ok(LevelIndices {
            spacer_level: m,
            depth: path.depth(),
            values,
        })
    }

    /// The depth-`n` path into `v_{n,0}` with `J_n = k`.
    pub fn from_tower_coordinates(&self, n: usize, k: u64) -> Result<AdicPath> {
        self.require_depth(n)?;
        if k >= self.heights[n] {
            return Err(Error::Range {
                value: k.to_string(),
                bound: self.heights[n].to_string(),
            });
        }
        let mut rev = Vec::with_capacity(n);
        let mut k = k;
        let mut column = Column::Tower;
        for level in (0..n).rev() {
            if column == Column::Spacer {
                rev.push(Step::Down);
                continue;
            }
            let q = self.stages[level].q;
            // Copy i together with its spacers covers [offset(i), offset(i + 1)).
            let (mut i, mut hi) = (0usize, q);
            while hi - i > 1 {
                let mid = (i + hi) / 2;
                if self.copy_offset(level, mid) <= k {
                    i = mid;
                } else {
                    hi = mid;
                }
            }
            let r = k - self.copy_offset(level, i);
            let h = self.heights[level];
            if r < h {
                rev.push(Step::Tower { i });
                k = r;
            } else {
                rev.push(Step::Spacer { i, j: r - h });
                column = Column::Spacer;
            }
        }
        rev.reverse();
        Ok(AdicPath {
            root: column,
            steps: rev,
        })
    }

    /// Orbit coding: `steps` symbols, `1` for each spacer path visited.
    pub fn code_orbit(&self, path: &AdicPath, steps: usize) -> Result<Word> {
        let mut word = Word::with_capacity(steps);
        let mut current = path.clone();
        self.check_path(&current)?;
        for k in 0..steps {
            word.push(current.is_spacer_path());
            if k + 1 == steps {
                break;
            }
            match self.successor(&current)? {
                Neighbor::Path(p) => current = p,
                Neighbor::Overflow(depth) => {
                    return Err(Error::OrbitOverflow {
                        depth,
                        partial: word.to_string(),
                    })
                }
            }
        }
        Ok(word)
    }

    /// All paths into `v_{depth,column}`, generated level by level in edge order.
    pub fn enumerate_paths(&self, depth: usize, column: Column) -> Result<Vec<AdicPath>> {
        self.require_depth(depth)?;
        Ok(self.paths_into(depth, column))
    }

    fn paths_into(&self, level: usize, column: Column) -> Vec<AdicPath> {
        if level == 0 {
            return vec![AdicPath {
                root: column,
                steps: Vec::new(),
            }];
        }
        let n = level - 1;
        let mut out = Vec::new();
        let extend = |below: Vec<AdicPath>, step: Step, out: &mut Vec<AdicPath>| {
            for mut p in below {
                p.steps.push(step);
                out.push(p);
            }
        };
        match column {
            Column::Spacer => extend(self.paths_into(n, Column::Spacer), Step::Down, &mut out),
            Column::Tower => {
                let s = &self.stages[n];
                for i in 0..s.q {
                    extend(
                        self.paths_into(n, Column::Tower),
                        Step::Tower { i },
                        &mut out,
                    );
                    for j in 0..s.a[i] {
                        extend(
                            self.paths_into(n, Column::Spacer),
                            Step::Spacer { i, j },
                            &mut out,
                        );
                    }
                }
            }
        }
        out
    }

    /// DOT rendering of levels `-1..=depth`, both columns, with edges labelled by
    /// name and 1-based position among the edges entering their target.
    pub fn export_dot(&self, depth: usize, style: &DotStyle) -> Result<String> {
        self.require_depth(depth)?;
        let v = style.vertex;
        let vid = |level: usize, c: usize| format!("{v}_{level}_{c}");
        let root = format!("{v}_root");
        let mut out = String::new();
        out.push_str(&format!("digraph {} {{\n", style.graph_name));
        out.push_str("  rankdir=TB;\n  node [shape=circle];\n");
        out.push_str(&format!(
            "  {{ rank=same; \"{root}\" [label=\"{v}_{{-1}}\"]; }}\n"
        ));
        for level in 0..=depth {
            out.push_str(&format!(
                "  {{ rank=same; \"{}\" [label=\"{v}_{{{level},0}}\"]; \"{}\" [label=\"{v}_{{{level},1}}\"]; }}\n",
                vid(level, 0),
                vid(level, 1)
            ));
        }
        let (t, s) = (style.tower, style.spacer);
        out.push_str(&format!(
            "  \"{root}\" -> \"{}\" [label=\"{t}_{{-1,0}} (1)\"];\n",
            vid(0, 0)
        ));
        out.push_str(&format!(
            "  \"{root}\" -> \"{}\" [label=\"{t}_{{-1,1}} (1)\"];\n",
            vid(0, 1)
        ));
        for n in 0..depth {
            let stage = &self.stages[n];
            for i in 0..stage.q {
                let step = Step::Tower { i };
                out.push_str(&format!(
                    "  \"{}\" -> \"{}\" [label=\"{t}_{{{n},{i}}} ({})\"];\n",
                    vid(n, 0),
                    vid(n + 1, 0),
                    self.rank(n, step) + 1
                ));
                for j in 0..stage.a[i] {
                    let step = Step::Spacer { i, j };
                    out.push_str(&format!(
                        "  \"{}\" -> \"{}\" [label=\"{s}_{{{n},{i},{j}}} ({})\"];\n",
                        vid(n, 1),
                        vid(n + 1, 0),
                        self.rank(n, step) + 1
                    ));
                }
            }
            out.push_str(&format!(
                "  \"{}\" -> \"{}\" [label=\"d_{n} (1)\"];\n",
                vid(n, 1),
                vid(n + 1, 1)
            ));
        }
        out.push_str("}\n");
        Ok(out)
    }
}

/// Letters used for vertices and edges in DOT output.
#[derive(Debug, Clone, Copy)]
pub struct DotStyle {
    pub graph_name: &'static str,
    pub vertex: &'static str,
    pub tower: &'static str,
    pub spacer: &'static str,
}

impl DotStyle {
    /// `v`, `e` as for an input system.
    pub const SOURCE: DotStyle = DotStyle {
        graph_name: "bratteli",
        vertex: "v",
        tower: "e",
        spacer: "e",
    };
    /// `u`, `r`, `s` as for a constructed model.
    pub const MODEL: DotStyle = DotStyle {
        graph_name: "bratteli_model",
        vertex: "u",
        tower: "r",
        spacer: "s",
    };
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasureBounds {
    pub level: usize,
    pub depth: usize,
    #[serde(with = "crate::num::rational")]
    pub lo: BigRational,
    #[serde(with = "crate::num::rational")]
    pub hi: BigRational,
    /// Bound on the spacer mass added past `depth`, when one is available.
    #[serde(with = "crate::num::rational_opt")]
    pub tail_bound: Option<BigRational>,
    pub note: Option<String>,
}

impl MeasureBounds {
    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, x: &BigRational) -> bool {
        &self.lo <= x && x <= &self.hi
    }
}

/// Bracket for the mass of any cylinder ending at `v_{n,0}`.
///
/// `hi = (q_n ... q_{D-1}) / h_D`, and the true value is `hi` times the product
/// over `k >= D` of `q_k h_k / h_{k+1}`, which is at least `1 - tail` where
/// `tail` bounds the remaining spacer ratio series.
pub fn cylinder_measure_bounds(
    schedule: &ParamSchedule,
    n: usize,
    depth: usize,
) -> Result<MeasureBounds> {
    if n > depth {
        return Err(Error::Range {
            value: n.to_string(),
            bound: format!("{} (depth + 1)", depth + 1),
        });
    }
    let h = heights(schedule, depth)?;
    let copies: BigUint = (n..depth)
        .map(|k| schedule.stage(k).map(|s| BigUint::from(s.q)))
        .product::<Result<BigUint>>()?;
    let hi = BigRational::new(copies.into(), h.last().clone().into());
    let tail_bound = tail_mass_bound(schedule, depth)?;
    let (lo, note) = match &tail_bound {
        Some(t) => {
            let factor = BigRational::one() - t;
            let lo = if factor.is_zero() || factor < BigRational::zero() {
                BigRational::zero()
            } else {
                &hi * factor
            };
            (lo, None)
        }
        None => (BigRational::zero(), Some("no tail bound".to_string())),
    };
    Ok(MeasureBounds {
        level: n,
        depth,
        lo,
        hi,
        tail_bound,
        note,
    })
}
