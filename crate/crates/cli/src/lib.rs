//! `morph` command-line tool: tension analysis, pattern extraction and
//! pattern-constrained morphing of MIDI or text point-set files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use morph_core::optimizer::{vns, MorphOptions, MorphProblem, ProblemSummary};
use morph_core::patterns::{encode_tec, Cover, LengthFilter, PatternAlgo};
use morph_core::score::{parse_midi_with, parse_pointset_text, write_midi, MidiOptions, TatumGrid};
use morph_core::spiral::{SpiralArray, SpiralConfig};
use morph_core::tension::{self, correlations, DistanceKind, TensionProfile};
use morph_core::Piece;
use num_rational::Ratio;
use serde::Serialize;

pub mod plot;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Input {
        path: PathBuf,
        #[source]
        source: morph_core::Error,
    },
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("infeasible problem: {0}")]
    Infeasible(morph_core::Error),
    #[error(transparent)]
    Core(morph_core::Error),
}

impl CliError {
    /// 2 usage, 3 unreadable or malformed input, 4 infeasible, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            Self::Input { .. } | Self::Read { .. } => 3,
            Self::Infeasible(_) => 4,
            Self::Write { .. } | Self::Core(_) => 1,
        }
    }
}

impl From<morph_core::Error> for CliError {
    fn from(e: morph_core::Error) -> Self {
        use morph_core::Error as E;
        match e {
            E::Infeasible { .. } => Self::Infeasible(e),
            E::InvalidOption(m) => Self::Usage(m),
            E::BadSegment => Self::Usage(e.to_string()),
            other => Self::Core(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "morph", version, about = "Tonal tension, repeated patterns and pattern-preserving pitch morphing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-segment cloud diameter, momentum and tensile strain.
    Tension(TensionArgs),
    /// Repeated translational patterns and the resulting compression.
    Patterns(PatternArgs),
    /// Re-pitch the input toward a tension profile, keeping its patterns.
    Morph(MorphArgs),
}

#[derive(Debug, Args, Clone)]
pub struct InputArgs {
    /// MIDI file (.mid/.midi) or text point set (`onset duration pitch velocity track` lines).
    pub input: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// MIDI tatum grid in tatums per beat, or `auto`.
    #[arg(long, default_value = "auto", value_parser = parse_tatum)]
    pub tatum: TatumGrid,
}

#[derive(Debug, Args, Clone)]
pub struct TensionArgs {
    #[command(flatten)]
    pub io: InputArgs,
    /// Segment length in beats (`1/2`, `1`, `0.25`).
    #[arg(long, default_value = "1/2", value_parser = parse_ratio)]
    pub segment_beats: Ratio<u32>,
}

#[derive(Debug, Args, Clone)]
pub struct PatternFlags {
    #[arg(long, default_value = "cosiatec", value_parser = parse_algo)]
    pub pattern_algo: PatternAlgo,
    #[arg(long, default_value_t = 1)]
    pub min_pattern_len: usize,
    #[arg(long)]
    pub max_pattern_len: Option<usize>,
}

impl PatternFlags {
    fn filter(&self) -> Result<LengthFilter> {
        Ok(LengthFilter::new(self.min_pattern_len, self.max_pattern_len)?)
    }
}

#[derive(Debug, Args, Clone)]
pub struct PatternArgs {
    #[command(flatten)]
    pub io: InputArgs,
    #[command(flatten)]
    pub patterns: PatternFlags,
}

#[derive(Debug, Args, Clone)]
pub struct MorphArgs {
    #[command(flatten)]
    pub io: InputArgs,
    #[command(flatten)]
    pub patterns: PatternFlags,
    #[arg(long, default_value = "1/2", value_parser = parse_ratio)]
    pub segment_beats: Ratio<u32>,
    /// Weights of diameter, momentum and strain.
    #[arg(long, default_value = "1,1,1", value_parser = parse_weights)]
    pub weights: [f64; 3],
    /// Cost per note that misses its fixed pitch.
    #[arg(long, default_value_t = 1e6)]
    pub penalty: f64,
    /// Descents to a local optimum; perturbations happen between them.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
    pub max_iters: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "l1", value_parser = parse_distance)]
    pub distance: DistanceKind,
    /// Target tension CSV as written by `morph tension`; defaults to the input's own profile.
    #[arg(long)]
    pub target_profile: Option<PathBuf>,
    /// Lines of `note_index midi_pitch`.
    #[arg(long)]
    pub fixed_pitches: Option<PathBuf>,
}

fn parse_tatum(s: &str) -> std::result::Result<TatumGrid, String> {
    if s == "auto" {
        return Ok(TatumGrid::Infer);
    }
    match s.parse::<u32>() {
        Ok(n) if (1..=morph_core::score::MAX_TATUMS_PER_BEAT).contains(&n) => Ok(TatumGrid::Fixed(n)),
        _ => Err(format!("expected `auto` or a tatum count per beat, got {s:?}")),
    }
}

/// `n/d`, an integer, or a decimal with up to six places.
pub fn parse_ratio(s: &str) -> std::result::Result<Ratio<u32>, String> {
    let bad = || format!("expected a positive number of beats like 1/2 or 0.5, got {s:?}");
    let r = if let Some((n, d)) = s.split_once('/') {
        let n: u32 = n.trim().parse().map_err(|_| bad())?;
        let d: u32 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        Ratio::new(n, d)
    } else if let Some((int, frac)) = s.split_once('.') {
        if frac.len() > 6 || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let scale = 10u32.pow(frac.len() as u32);
        let int: u32 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
        let frac: u32 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
        Ratio::new(int.checked_mul(scale).and_then(|x| x.checked_add(frac)).ok_or_else(bad)?, scale)
    } else {
        Ratio::from_integer(s.trim().parse().map_err(|_| bad())?)
    };
    if *r.numer() == 0 {
        return Err(bad());
    }
    Ok(r)
}

fn parse_weights(s: &str) -> std::result::Result<[f64; 3], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| e.to_string())?;
    match parts.as_slice() {
        &[a, b, c] if parts.iter().all(|w| w.is_finite() && *w >= 0.0) => Ok([a, b, c]),
        _ => Err(format!("expected three non-negative weights like 1,1,1, got {s:?}")),
    }
}

fn parse_algo(s: &str) -> std::result::Result<PatternAlgo, String> {
    s.parse().map_err(|e: morph_core::Error| e.to_string())
}

fn parse_distance(s: &str) -> std::result::Result<DistanceKind, String> {
    s.parse().map_err(|e: morph_core::Error| e.to_string())
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| CliError::Read {
        path: path.to_owned(),
        source,
    })
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_owned(),
        source,
    })
}

fn input_error(path: &Path) -> impl FnOnce(morph_core::Error) -> CliError + '_ {
    move |source| CliError::Input {
        path: path.to_owned(),
        source,
    }
}

/// Reads MIDI by extension, anything else as a text point set.
pub fn load_piece(path: &Path, tatum: TatumGrid) -> Result<Piece> {
    let is_midi = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("mid") || e.eq_ignore_ascii_case("midi"));
    if is_midi {
        parse_midi_with(&read_bytes(path)?, MidiOptions { tatum }).map_err(input_error(path))
    } else {
        let mut piece = parse_pointset_text(&read_text(path)?).map_err(input_error(path))?;
        if let TatumGrid::Fixed(n) = tatum {
            if n != piece.tatums_per_beat() {
                return Err(CliError::Usage(format!(
                    "--tatum {n} does not apply to text input; {} declares {} tatums per beat",
                    path.display(),
                    piece.tatums_per_beat()
                )));
            }
        }
        if piece.title.is_empty() {
            piece.title = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        }
        Ok(piece)
    }
}

/// `note_index midi_pitch` per line; `#` starts a comment.
pub fn parse_fixed_pitches(text: &str) -> morph_core::Result<BTreeMap<usize, u8>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| morph_core::Error::TextParse { line: i + 1, message };
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [note, pitch] = fields.as_slice() else {
            return Err(err(format!("expected `note_index midi_pitch`, found {} fields", fields.len())));
        };
        let note: usize = note.parse().map_err(|_| err(format!("bad note index {note:?}")))?;
        let pitch: u8 = pitch
            .parse()
            .ok()
            .filter(|p| *p <= 127)
            .ok_or_else(|| err(format!("bad MIDI pitch {pitch:?}")))?;
        if out.insert(note, pitch).is_some() {
            return Err(err(format!("note {note} is fixed twice")));
        }
    }
    Ok(out)
}

struct OutDir(PathBuf);

impl OutDir {
    fn create(path: &Path) -> Result<Self> {
        fs::create_dir_all(path).map_err(|source| CliError::Write {
            path: path.to_owned(),
            source,
        })?;
        Ok(Self(path.to_owned()))
    }

    fn write(&self, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
        let path = self.0.join(name);
        fs::write(&path, contents).map_err(|source| CliError::Write {
            path: path.clone(),
            source,
        })?;
        Ok(path)
    }
}

fn tec_lines(cover: &Cover) -> String {
    cover.tecs.iter().map(|t| encode_tec(t) + "\n").collect()
}

pub fn cmd_tension(args: &TensionArgs) -> Result<String> {
    let piece = load_piece(&args.io.input, args.io.tatum)?;
    let spiral = SpiralArray::new(SpiralConfig::default());
    let profile = tension::profile(&piece, args.segment_beats, &spiral)?;
    let out = OutDir::create(&args.io.out_dir)?;
    out.write("tension.csv", profile.to_csv())?;
    out.write("tension.plot", plot::tension_script(&piece.title, "tension.csv"))?;
    let key = profile.key.map(|k| k.name()).unwrap_or_else(|| "-".into());
    Ok(format!("segments={} key={key}", profile.len()))
}

pub struct PatternSummary {
    pub cover: Cover,
    pub up: usize,
}

impl PatternSummary {
    pub fn line(&self) -> String {
        format!(
            "CR={:.3} TECs={} UP={}",
            self.cover.compression_ratio(),
            self.cover.tecs.len(),
            self.up
        )
    }
}

fn discover(piece: &Piece, flags: &PatternFlags) -> Result<PatternSummary> {
    let cover = flags.pattern_algo.run(&piece.to_pointset(), flags.filter()?);
    let up = morph_core::optimizer::count_free(piece, &cover)?;
    Ok(PatternSummary { cover, up })
}

pub fn cmd_patterns(args: &PatternArgs) -> Result<String> {
    let piece = load_piece(&args.io.input, args.io.tatum)?;
    let summary = discover(&piece, &args.patterns)?;
    let out = OutDir::create(&args.io.out_dir)?;
    out.write("patterns.tec", tec_lines(&summary.cover))?;
    Ok(summary.line())
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub title: String,
    pub seed: u64,
    pub max_iters: u32,
    pub tatums_per_beat: u32,
    pub segment_beats: String,
    pub weights: [f64; 3],
    pub penalty: f64,
    pub distance: String,
    pub pattern_algo: PatternAlgo,
    pub problem: ProblemSummary,
    pub initial_objective: f64,
    pub final_objective: f64,
    pub violations: usize,
    pub moves: usize,
    pub perturbations: usize,
    /// Pearson correlation with the target per measure; null when a series is constant.
    pub initial_correlation: BTreeMap<String, Option<f64>>,
    pub final_correlation: BTreeMap<String, Option<f64>>,
}

fn named(c: [Option<f64>; 3]) -> BTreeMap<String, Option<f64>> {
    tension::MEASURE_NAMES
        .iter()
        .zip(c)
        .map(|(n, v)| (n.to_string(), v))
        .collect()
}

pub fn cmd_morph(args: &MorphArgs) -> Result<String> {
    let piece = load_piece(&args.io.input, args.io.tatum)?;
    if piece.is_empty() {
        return Err(CliError::Input {
            path: args.io.input.clone(),
            source: morph_core::Error::EmptyPiece,
        });
    }
    let patterns = discover(&piece, &args.patterns)?;
    let mut options = MorphOptions {
        segment_beats: args.segment_beats,
        weights: args.weights,
        penalty: args.penalty,
        distance: args.distance,
        ..MorphOptions::default()
    };
    if let Some(path) = &args.fixed_pitches {
        options.fixed = parse_fixed_pitches(&read_text(path)?).map_err(input_error(path))?;
    }
    let problem = match &args.target_profile {
        Some(path) => {
            let target = TensionProfile::from_csv(&read_text(path)?, args.segment_beats).map_err(input_error(path))?;
            MorphProblem::new(piece.clone(), patterns.cover.clone(), target, options).map_err(|e| match e {
                morph_core::Error::ProfileLength { .. } => input_error(path)(e),
                other => other.into(),
            })?
        }
        None => MorphProblem::with_template_target(piece.clone(), patterns.cover.clone(), options)?,
    };

    let result = vns(&problem, args.max_iters as usize, args.seed);
    let output = problem.to_piece(&result.best);
    let before = problem.profile_of(&problem.template_assignment());
    let initial = problem.profile_of(&result.initial);
    let after = problem.profile_of(&result.best);

    let out = OutDir::create(&args.io.out_dir)?;
    out.write("output.mid", write_midi(&output))?;
    out.write("trace.csv", result.trace.to_csv())?;
    out.write("patterns.tec", tec_lines(&patterns.cover))?;
    out.write("tension_before.csv", before.to_csv())?;
    out.write("tension_after.csv", after.to_csv())?;
    out.write("tension_target.csv", problem.target().to_csv())?;
    out.write("mapping.csv", mapping_csv(&piece, &output))?;
    out.write("morph.plot", plot::morph_script(&piece.title))?;

    let report = Report {
        title: piece.title.clone(),
        seed: args.seed,
        max_iters: args.max_iters,
        tatums_per_beat: piece.tatums_per_beat(),
        segment_beats: args.segment_beats.to_string(),
        weights: args.weights,
        penalty: args.penalty,
        distance: format!("{:?}", args.distance).to_lowercase(),
        pattern_algo: args.patterns.pattern_algo,
        problem: problem.summary(),
        initial_objective: result.initial_objective,
        final_objective: result.best_objective,
        violations: problem.violations(&result.best),
        moves: result.trace.rows.iter().filter(|r| r.neighborhood.is_some()).count(),
        perturbations: result.trace.perturbations(),
        initial_correlation: named(correlations(&initial, problem.target())),
        final_correlation: named(correlations(&after, problem.target())),
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    out.write("report.json", json)?;
    Ok(format!(
        "{} objective {:.6} -> {:.6} ({} moves, {} perturbations)",
        patterns.line(),
        report.initial_objective,
        report.final_objective,
        report.moves,
        report.perturbations
    ))
}

/// One row per note in template order: timing, track, template and
/// output pitch.
pub fn mapping_csv(template: &Piece, output: &Piece) -> String {
    let mut s = String::from("note,onset,duration,track,template_pitch,pitch\n");
    for (i, (a, b)) in template.notes().iter().zip(output.notes()).enumerate() {
        let _ = writeln!(s, "{i},{},{},{},{},{}", a.onset, a.duration, a.track, a.pitch, b.pitch);
    }
    s
}

pub fn run(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Tension(a) => cmd_tension(a),
        Command::Patterns(a) => cmd_patterns(a),
        Command::Morph(a) => cmd_morph(a),
    }
}
