//! Browser bindings. Every export takes the text point-set format and
//! returns JSON; the plain functions underneath are tested natively.

use morph_core::optimizer::{count_free, vns, MorphOptions, MorphProblem};
use morph_core::patterns::{encode_tec, Cover, LengthFilter, PatternAlgo};
use morph_core::score::{parse_pointset_text, write_midi, write_pointset_text};
use morph_core::spiral::{SpiralArray, SpiralConfig};
use morph_core::tension::{self, correlations, TensionProfile};
use morph_core::Piece;
use num_rational::Ratio;
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct NoteView {
    pub onset: u32,
    pub duration: u32,
    pub pitch: u8,
    pub track: u16,
    /// Index of the TEC covering the note, if patterns were computed.
    pub group: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct Analysis {
    pub title: String,
    pub tatums_per_beat: u32,
    pub notes: Vec<NoteView>,
    pub profile: TensionProfile,
    pub key: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct PatternView {
    pub notes: Vec<NoteView>,
    pub tatums_per_beat: u32,
    pub tecs: Vec<String>,
    /// Occurrence count per TEC, parallel to `tecs`.
    pub occurrences: Vec<usize>,
    pub compression_ratio: f64,
    pub up: usize,
}

#[derive(Debug, Serialize)]
pub struct MorphView {
    pub tatums_per_beat: u32,
    pub before: Vec<NoteView>,
    pub after: Vec<NoteView>,
    pub target: TensionProfile,
    pub result: TensionProfile,
    pub objective: Vec<f64>,
    pub best: Vec<f64>,
    pub perturbation: Vec<bool>,
    pub initial_correlation: [Option<f64>; 3],
    pub final_correlation: [Option<f64>; 3],
    pub up: usize,
}

fn parse(text: &str) -> Result<Piece, String> {
    parse_pointset_text(text).map_err(|e| e.to_string())
}

fn segment(num: u32, den: u32) -> Result<Ratio<u32>, String> {
    if num == 0 || den == 0 {
        return Err("segment length must be positive".into());
    }
    Ok(Ratio::new(num, den))
}

fn views(piece: &Piece, cover: Option<&Cover>) -> Vec<NoteView> {
    let ps = piece.to_pointset();
    let mut group = vec![None; piece.len()];
    if let Some(cover) = cover {
        for (g, tec) in cover.tecs.iter().enumerate() {
            for p in tec.coverage() {
                if let Some(i) = ps.index_of(&p) {
                    for &n in ps.notes_at(i) {
                        group[n].get_or_insert(g);
                    }
                }
            }
        }
    }
    piece
        .notes()
        .iter()
        .zip(group)
        .map(|(n, group)| NoteView {
            onset: n.onset,
            duration: n.duration,
            pitch: n.pitch,
            track: n.track,
            group,
        })
        .collect()
}

pub fn analyze_text(text: &str, num: u32, den: u32) -> Result<Analysis, String> {
    let piece = parse(text)?;
    let spiral = SpiralArray::new(SpiralConfig::default());
    let profile = tension::profile(&piece, segment(num, den)?, &spiral).map_err(|e| e.to_string())?;
    Ok(Analysis {
        title: piece.title.clone(),
        tatums_per_beat: piece.tatums_per_beat(),
        notes: views(&piece, None),
        key: profile.key.map(|k| k.name()),
        profile,
    })
}

fn algo(name: &str) -> Result<PatternAlgo, String> {
    name.parse().map_err(|e: morph_core::Error| e.to_string())
}

fn cover_of(piece: &Piece, min_len: usize, algorithm: &str) -> Result<Cover, String> {
    let filter = LengthFilter::new(min_len, None).map_err(|e| e.to_string())?;
    Ok(algo(algorithm)?.run(&piece.to_pointset(), filter))
}

pub fn patterns_text(text: &str, min_len: usize, algorithm: &str) -> Result<PatternView, String> {
    let piece = parse(text)?;
    let cover = cover_of(&piece, min_len, algorithm)?;
    Ok(PatternView {
        notes: views(&piece, Some(&cover)),
        tatums_per_beat: piece.tatums_per_beat(),
        tecs: cover.tecs.iter().map(encode_tec).collect(),
        occurrences: cover.tecs.iter().map(|t| t.translators.len()).collect(),
        compression_ratio: cover.compression_ratio(),
        up: count_free(&piece, &cover).map_err(|e| e.to_string())?,
    })
}

fn problem(text: &str, min_len: usize) -> Result<MorphProblem, String> {
    let piece = parse(text)?;
    if piece.is_empty() {
        return Err("nothing to morph: the piece has no notes".into());
    }
    let cover = cover_of(&piece, min_len, "cosiatec")?;
    MorphProblem::with_template_target(piece, cover, MorphOptions::default()).map_err(|e| e.to_string())
}

/// Morph toward the template's own profile from a random start.
pub fn morph_text(text: &str, min_len: usize, iters: usize, seed: u64) -> Result<MorphView, String> {
    let problem = problem(text, min_len)?;
    let run = vns(&problem, iters.max(1), seed);
    let initial = problem.profile_of(&run.initial);
    let result = problem.profile_of(&run.best);
    let rows = &run.trace.rows;
    Ok(MorphView {
        tatums_per_beat: problem.template().tatums_per_beat(),
        before: views(problem.template(), Some(problem.cover())),
        after: views(&problem.to_piece(&run.best), Some(problem.cover())),
        target: problem.target().clone(),
        initial_correlation: correlations(&initial, problem.target()),
        final_correlation: correlations(&result, problem.target()),
        result,
        objective: rows.iter().map(|r| r.objective).collect(),
        best: rows.iter().map(|r| r.best_objective).collect(),
        perturbation: rows.iter().map(|r| r.perturbation).collect(),
        up: problem.up(),
    })
}

pub fn morph_midi_bytes(text: &str, min_len: usize, iters: usize, seed: u64) -> Result<Vec<u8>, String> {
    let problem = problem(text, min_len)?;
    let run = vns(&problem, iters.max(1), seed);
    Ok(write_midi(&problem.to_piece(&run.best)))
}

fn json<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    r.map(|v| serde_json::to_string(&v).expect("view serializes"))
        .map_err(|e| JsError::new(&e))
}

/// The built-in two-voice example in text form.
#[wasm_bindgen]
pub fn demo_text() -> String {
    write_pointset_text(&morph_core::demo::desk_piece())
}

#[wasm_bindgen]
pub fn analyze(text: &str, num: u32, den: u32) -> Result<String, JsError> {
    json(analyze_text(text, num, den))
}

#[wasm_bindgen]
pub fn patterns(text: &str, min_len: usize, algorithm: &str) -> Result<String, JsError> {
    json(patterns_text(text, min_len, algorithm))
}

#[wasm_bindgen]
pub fn morph(text: &str, min_len: usize, iters: usize, seed: u32) -> Result<String, JsError> {
    json(morph_text(text, min_len, iters, seed as u64))
}

#[wasm_bindgen]
pub fn morph_midi(text: &str, min_len: usize, iters: usize, seed: u32) -> Result<Vec<u8>, JsError> {
    morph_midi_bytes(text, min_len, iters, seed as u64).map_err(|e| JsError::new(&e))
}
