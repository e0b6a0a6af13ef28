use clap::{Args, Parser, Subcommand, ValueEnum};
use rankone::adic::{cylinder_measure_bounds, DotStyle};
use rankone::isomorphism::Mode;
use rankone::params::{heights, spacer_ratio_sum, validate, TailVerdict};
use rankone::symbolic::{build_block, occurrence_spacing, period_doubling_prefix};
use rankone::transform::{expansive_replace, last_copy_picks, one_tower_variant};
use rankone::word::DEFAULT_BUDGET;
use rankone::{
    build_expansive, telescope, verify_iso, Diagram, ExpansiveModel, Growth, IsoContext, Neighbor,
    ParamSchedule, Word,
};
use rankone_cli::{read_spec, Preset, SystemSpecFile};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

/// Rank-one systems: blocks, Bratteli-Vershik diagrams and essentially expansive models.
#[derive(Parser)]
#[command(name = "rankone", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// JSON system-spec file.
    #[arg(long, value_name = "FILE")]
    spec: Option<PathBuf>,
    #[arg(long, value_name = "NAME")]
    preset: Option<Preset>,
}

impl Source {
    fn load(&self) -> Result<SystemSpecFile, String> {
        match (&self.spec, self.preset) {
            (Some(path), _) => read_spec(path).map_err(|e| e.to_string()),
            (None, Some(p)) => Ok(SystemSpecFile::from_preset(p)),
            (None, None) => Err("one of --spec or --preset is required".to_string()),
        }
    }
}

#[derive(Args)]
struct Output {
    /// Write to this file instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
    Dot,
}

#[derive(Subcommand)]
enum Command {
    /// Tower heights h_0..h_D.
    Heights {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 5)]
        depth: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Structural checks and the spacer ratio series.
    Validate {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 5)]
        depth: usize,
        #[command(flatten)]
        output: Output,
    },
    /// The block B_D.
    Block {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        /// Largest block length to materialize, in symbols.
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Telescope onto given or greedily chosen levels.
    Telescope {
        #[command(flatten)]
        source: Source,
        /// Comma-separated m_0 = 0 < m_1 < ...; overrides the spec file.
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<usize>>,
        /// Number of telescoped stages when levels are chosen greedily.
        #[arg(long, default_value_t = 3)]
        stages: usize,
        #[arg(long, default_value_t = 2)]
        growth: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Build the essentially expansive model.
    Expand {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 3)]
        stages: usize,
        #[arg(long, default_value_t = 2)]
        growth: u64,
        /// Also print the model blocks B'_1..B'_N.
        #[arg(long)]
        emit_blocks: bool,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Replace one copy per telescoped stage by spacers.
    Variant {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 3)]
        stages: usize,
        #[arg(long, default_value_t = 2)]
        growth: u64,
        /// Comma-separated copy per stage; defaults to the top copy.
        #[arg(long, value_delimiter = ',')]
        picks: Option<Vec<usize>>,
        #[command(flatten)]
        output: Output,
    },
    /// Iterate the Vershik map and code the orbit.
    Vershik {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        /// Number of symbols; defaults to h_D.
        #[arg(long)]
        length: Option<usize>,
        /// Level index of the starting path in the depth-D tower.
        #[arg(long, default_value_t = 0)]
        start: u64,
        /// Use the essentially expansive model instead of the system.
        #[arg(long)]
        model: bool,
        #[arg(long, default_value_t = 2)]
        growth: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Bracket the mass of a level-n cylinder using depth D.
    Measure {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 0)]
        level: usize,
        #[arg(long, default_value_t = 10)]
        depth: usize,
        #[command(flatten)]
        output: Output,
    },
    /// The truncated diagram in DOT.
    Dot {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 2)]
        depth: usize,
        /// Draw the essentially expansive model instead of the system.
        #[arg(long)]
        model: bool,
        #[arg(long, default_value_t = 2)]
        growth: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Check the isomorphism onto the model at finite depth.
    Verify {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        /// Check every path; otherwise a seeded sample.
        #[arg(long)]
        exhaustive: bool,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        growth: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Gaps between occurrences of 0100 in the period-doubling sequence.
    PdCheck {
        #[arg(long, default_value_t = 4096)]
        length: usize,
        #[arg(long, default_value = "0100")]
        pattern: String,
        #[arg(long, default_value_t = 4)]
        modulus: usize,
        #[command(flatten)]
        output: Output,
    },
}

/// What a command produced: text to write and whether its check passed.
struct Outcome {
    text: String,
    passed: bool,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Outcome { text, passed: true }
    }
}

fn json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| e.to_string())
}

fn err<E: ToString>(e: E) -> String {
    e.to_string()
}

fn pick(format: Option<Format>, default: Format, allowed: &[Format]) -> Result<Format, String> {
    let f = format.unwrap_or(default);
    if allowed.contains(&f) {
        Ok(f)
    } else {
        Err("this command does not support the requested format".to_string())
    }
}

fn model_for(
    spec: &SystemSpecFile,
    schedule: &ParamSchedule,
    stages: usize,
    growth: u64,
) -> Result<ExpansiveModel, String> {
    match &spec.telescope_levels {
        Some(levels) => {
            if levels.len() <= stages {
                return Err(format!(
                    "{stages} stages need {} telescope levels, the spec gives {}",
                    stages + 1,
                    levels.len()
                ));
            }
            let t = telescope(schedule, &levels[..=stages]).map_err(err)?;
            expansive_replace(&t, stages).map_err(err)
        }
        None => build_expansive(schedule, stages, Growth { base: growth }).map_err(err),
    }
}

fn run(command: Command) -> Result<(Outcome, Option<PathBuf>), String> {
    use Format::*;
    let (outcome, out) = match command {
        Command::Heights {
            source,
            depth,
            output,
        } => {
            let h = heights(&source.load()?.schedule(), depth).map_err(err)?;
            let text = match pick(output.format, Json, &[Json, Text])? {
                Json => json(&h)?,
                _ => h.as_slice().iter().map(|x| format!("{x}\n")).collect(),
            };
            (Outcome::ok(text), output.out)
        }
        Command::Validate {
            source,
            depth,
            output,
        } => {
            let schedule = source.load()?.schedule();
            let report = validate(&schedule, depth);
            let text = match pick(output.format, Json, &[Json, Text])? {
                Json => json(&report)?,
                _ => {
                    let tail = match &report.tail {
                        TailVerdict::ProvedConvergent { upper_bound } => {
                            format!("proved convergent, total <= {upper_bound}")
                        }
                        TailVerdict::ProvedDivergent => "proved divergent".to_string(),
                        TailVerdict::UnknownAtDepth => "unknown at this depth".to_string(),
                    };
                    let mut s = format!(
                        "valid: {}\nspacer ratio series: {tail}\n",
                        report.is_valid()
                    );
                    if let Ok(sum) = spacer_ratio_sum(&schedule, depth) {
                        let _ = writeln!(s, "partial sum at {depth}: {}", sum.partial);
                    }
                    for v in &report.violations {
                        let _ = writeln!(s, "violation: {v}");
                    }
                    for w in &report.warnings {
                        let _ = writeln!(s, "warning: {w}");
                    }
                    s
                }
            };
            (
                Outcome {
                    text,
                    passed: report.is_valid(),
                },
                output.out,
            )
        }
        Command::Block {
            source,
            depth,
            budget,
            output,
        } => {
            let b = build_block(&source.load()?.schedule(), depth, budget).map_err(err)?;
            let text = match pick(output.format, Text, &[Json, Text])? {
                Json => json(&serde_json::json!({
                    "depth": depth,
                    "length": b.len(),
                    "block": b.to_string(),
                }))?,
                _ => format!("{b}\n"),
            };
            (Outcome::ok(text), output.out)
        }
        Command::Telescope {
            source,
            levels,
            stages,
            growth,
            output,
        } => {
            let spec = source.load()?;
            let schedule = spec.schedule();
            let levels = match levels.or(spec.telescope_levels) {
                Some(l) => l,
                None => rankone::params::choose_telescoping_levels(
                    &schedule,
                    stages,
                    Growth { base: growth },
                )
                .map_err(err)?,
            };
            let t = telescope(&schedule, &levels).map_err(err)?;
            let text = match pick(output.format, Json, &[Json, Text])? {
                Json => json(&t)?,
                _ => {
                    let mut s = format!("levels: {:?}\n", t.levels);
                    for (n, st) in t.stages.iter().enumerate() {
                        let _ = writeln!(s, "Q_{n} = {}  A_{n} = {:?}", st.q, st.a);
                    }
                    s
                }
            };
            (Outcome::ok(text), output.out)
        }
        Command::Expand {
            source,
            stages,
            growth,
            emit_blocks,
            budget,
            output,
        } => {
            let spec = source.load()?;
            let model = model_for(&spec, &spec.schedule(), stages, growth)?;
            for w in &model.warnings {
                eprintln!("warning: {w}");
            }
            let y = model.replaced_schedule();
            let blocks: Vec<Word> = if emit_blocks {
                (1..=stages)
                    .map(|n| build_block(&y, n, budget))
                    .collect::<Result<_, _>>()
                    .map_err(err)?
            } else {
                Vec::new()
            };
            let default = if emit_blocks { Text } else { Json };
            let text = match pick(output.format, default, &[Json, Text])? {
                Json if emit_blocks => json(&serde_json::json!({
                    "model": model,
                    "blocks": blocks.iter().map(Word::to_string).collect::<Vec<_>>(),
                }))?,
                Json => json(&model)?,
                _ => {
                    let mut s = String::new();
                    if emit_blocks {
                        for b in &blocks {
                            let _ = writeln!(s, "{b}");
                        }
                    } else {
                        let _ = writeln!(s, "levels: {:?}", model.telescoped.levels);
                        for (n, r) in model.replaced.iter().enumerate() {
                            let _ = writeln!(
                                s,
                                "stage {n}: i = {}  Hbar = {}  Q' = {}  A' = {:?}",
                                r.cut_index, r.replacement_run, r.stage.q, r.stage.a
                            );
                        }
                    }
                    s
                }
            };
            (Outcome::ok(text), output.out)
        }
        Command::Variant {
            source,
            stages,
            growth,
            picks,
            output,
        } => {
            let spec = source.load()?;
            let schedule = spec.schedule();
            let levels = match &spec.telescope_levels {
                Some(l) if l.len() > stages => l[..=stages].to_vec(),
                Some(l) => {
                    return Err(format!(
                        "{stages} stages need {} telescope levels, the spec gives {}",
                        stages + 1,
                        l.len()
                    ))
                }
                None => rankone::params::choose_telescoping_levels(
                    &schedule,
                    stages,
                    Growth { base: growth },
                )
                .map_err(err)?,
            };
            let t = telescope(&schedule, &levels).map_err(err)?;
            let picks = picks.unwrap_or_else(|| last_copy_picks(&t));
            let v = one_tower_variant(&t, &picks).map_err(err)?;
            let text = match pick(output.format, Json, &[Json, Text])? {
                Json => json(&v)?,
                _ => v
                    .stages
                    .iter()
                    .enumerate()
                    .map(|(n, st)| format!("stage {n}: q = {}  a = {:?}\n", st.q, st.a))
                    .collect(),
            };
            (Outcome::ok(text), output.out)
        }
        Command::Vershik {
            source,
            depth,
            length,
            start,
            model,
            growth,
            output,
        } => {
            let spec = source.load()?;
            let schedule = spec.schedule();
            let d = if model {
                let m = model_for(&spec, &schedule, depth, growth)?;
                Diagram::new(&m.replaced_schedule(), depth)
            } else {
                Diagram::new(&schedule, depth)
            }
            .map_err(err)?;
            let x = d.from_tower_coordinates(depth, start).map_err(err)?;
            let steps = match length {
                Some(l) => l,
                None => usize::try_from(d.height(depth) - start).map_err(err)?,
            };
            let code = d.code_orbit(&x, steps).map_err(err)?;
            let text = match pick(output.format, Text, &[Json, Text])? {
                Json => {
                    let mut end = x.clone();
                    for _ in 1..steps {
                        match d.successor(&end).map_err(err)? {
                            Neighbor::Path(p) => end = p,
                            Neighbor::Overflow(_) => break,
                        }
                    }
                    json(&serde_json::json!({
                        "depth": depth,
                        "start": x,
                        "end": end,
                        "code": code.to_string(),
                    }))?
                }
                _ => format!("{code}\n"),
            };
            (Outcome::ok(text), output.out)
        }
        Command::Measure {
            source,
            level,
            depth,
            output,
        } => {
            let b =
                cylinder_measure_bounds(&source.load()?.schedule(), level, depth).map_err(err)?;
            let text = match pick(output.format, Json, &[Json, Text])? {
                Json => json(&b)?,
                _ => format!(
                    "lo = {}\nhi = {}\nwidth = {:e}\n",
                    b.lo,
                    b.hi,
                    rankone::num::rational_to_f64(&b.width())
                ),
            };
            (Outcome::ok(text), output.out)
        }
        Command::Dot {
            source,
            depth,
            model,
            growth,
            output,
        } => {
            pick(output.format, Dot, &[Dot])?;
            let spec = source.load()?;
            let schedule = spec.schedule();
            let text = if model {
                let m = model_for(&spec, &schedule, depth, growth)?;
                Diagram::new(&m.replaced_schedule(), depth)
                    .and_then(|d| d.export_dot(depth, &DotStyle::MODEL))
            } else {
                Diagram::new(&schedule, depth).and_then(|d| d.export_dot(depth, &DotStyle::SOURCE))
            }
            .map_err(err)?;
            (Outcome::ok(text), output.out)
        }
        Command::Verify {
            source,
            depth,
            exhaustive,
            samples,
            seed,
            growth,
            output,
        } => {
            let spec = source.load()?;
            let m = model_for(&spec, &spec.schedule(), depth, growth)?;
            let ctx = IsoContext::new(&m, depth).map_err(err)?;
            let mode = if exhaustive {
                Mode::Exhaustive
            } else {
                Mode::Sample {
                    count: samples,
                    seed,
                }
            };
            let r = verify_iso(&ctx, depth, mode).map_err(err)?;
            let text = match pick(output.format, Text, &[Json, Text])? {
                Json => json(&r)?,
                _ => {
                    let f = &r.failures;
                    let mut s = format!(
                        "{} at depth {}: {} paths ({} spacer, {} in E), {} equivariance pairs\n",
                        if r.passed { "PASS" } else { "FAIL" },
                        r.depth,
                        r.paths_tested,
                        r.spacer_paths_tested,
                        r.paths_in_e,
                        r.equivariance_checked
                    );
                    let _ = writeln!(
                        s,
                        "failures: mapping {}, spacer level {}, level index {}, collision {}, round trip {}, equivariance {}",
                        f.mapping, f.spacer_level, f.level_index, f.collision, f.round_trip, f.equivariance
                    );
                    let _ = writeln!(
                        s,
                        "excluded: {} top of X, {} top of Y",
                        r.excluded_source_overflow, r.excluded_target_overflow
                    );
                    let _ = writeln!(s, "E mass partial sum: {}", r.measure_zero_sum);
                    for w in &r.witnesses {
                        let _ = writeln!(s, "  {:?} at {}: {}", w.kind, w.path, w.detail);
                    }
                    s
                }
            };
            (
                Outcome {
                    text,
                    passed: r.passed,
                },
                output.out,
            )
        }
        Command::PdCheck {
            length,
            pattern,
            modulus,
            output,
        } => {
            if modulus == 0 {
                return Err("--modulus must be positive".to_string());
            }
            let pattern: Word = pattern.parse().map_err(err)?;
            let w = period_doubling_prefix(length);
            let occ = occurrence_spacing(&w, &pattern);
            let bad: Vec<usize> = occ
                .gaps
                .iter()
                .copied()
                .filter(|g| g % modulus != 0)
                .collect();
            let passed = bad.is_empty();
            let mut distinct = occ.gaps.clone();
            distinct.sort_unstable();
            distinct.dedup();
            let text = match pick(output.format, Text, &[Json, Text])? {
                Json => json(&serde_json::json!({
                    "length": length,
                    "pattern": pattern.to_string(),
                    "modulus": modulus,
                    "occurrences": occ.positions.len(),
                    "distinct_gaps": distinct,
                    "passed": passed,
                }))?,
                _ if passed => format!(
                    "{} occurrences of {pattern} in {length} symbols; all gaps ≡ 0 mod {modulus}\n",
                    occ.positions.len()
                ),
                _ => format!(
                    "{} gaps not ≡ 0 mod {modulus}, first {}\n",
                    bad.len(),
                    bad[0]
                ),
            };
            (Outcome { text, passed }, output.out)
        }
    };
    Ok((outcome, out))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok((outcome, out)) => {
            let written = match out {
                Some(path) => std::fs::write(&path, &outcome.text)
                    .map_err(|e| format!("{}: {e}", path.display())),
                None => {
                    print!("{}", outcome.text);
                    Ok(())
                }
            };
            match written {
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
                Ok(()) if outcome.passed => ExitCode::SUCCESS,
                Ok(()) => ExitCode::from(1),
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
