//! Scoring for the short performance test: duration-based attention
//! subtests, missing-count memory subtests, age/IQ norm conversion, and the
//! attention/memory/total summary with severity bands.

use serde::Deserialize;
use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::lexicon::{normalize, LemmaTable, LetterNames, NumberMap, Stoplist, TargetList};
use crate::matching::{find_letters, find_numbers, match_targets, Match, RankPolicy};
use crate::transcript::{Segment, SubjectMetadata, SubtestId};

/// Task time limit in seconds; durations are clamped here.
pub const TIME_LIMIT_S: f64 = 60.0;
/// Default gap after which late repeat mentions are excluded from the
/// naming-task endpoint computation.
pub const DEFAULT_REINSTRUCTION_GAP_S: f64 = 10.0;

#[derive(Debug, Clone, Copy)]
pub struct SktConfig {
    pub time_limit_s: f64,
    pub reinstruction_gap_s: f64,
}

impl Default for SktConfig {
    fn default() -> Self {
        SktConfig {
            time_limit_s: TIME_LIMIT_S,
            reinstruction_gap_s: DEFAULT_REINSTRUCTION_GAP_S,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SktScoreKind {
    DurationSeconds,
    MissingCount,
}

/// A raw subtest score with its evidence. `value` is seconds for attention
/// subtests and a missing count for memory subtests. Confabulations are
/// reported but never enter the score.
#[derive(Debug, Clone)]
pub struct SktRaw {
    pub subtest: SubtestId,
    pub kind: SktScoreKind,
    pub value: f64,
    pub clamped: bool,
    pub confabulations: Vec<String>,
    pub evidence: Vec<Match>,
    pub notes: Vec<String>,
}

fn clamp_duration(duration: f64, cfg: &SktConfig) -> (f64, bool) {
    if duration > cfg.time_limit_s {
        (cfg.time_limit_s, true)
    } else {
        (duration, false)
    }
}

/// Score the object-naming task: the time from the start of the first
/// recognized object to the end of the last.
///
/// Patients sometimes name the objects again after further instruction by
/// the examiner; mentions more than `reinstruction_gap_s` after the final
/// distinct match or after a mid-task examiner utterance are excluded from
/// the endpoint computation.
pub fn score_skt1(
    segment: &Segment<'_>,
    targets: &TargetList,
    lemmas: &LemmaTable,
    policy: RankPolicy,
    cfg: &SktConfig,
) -> Result<SktRaw> {
    let ml = match_targets(segment, targets, lemmas, policy)?;
    if ml.matches.is_empty() {
        return Err(Error::Unscorable {
            subtest: segment.subtest,
            reason: "no target objects recognized".into(),
        });
    }
    let mut events: Vec<&Match> = ml.matches.iter().chain(ml.duplicates.iter()).collect();
    events.sort_by(|a, b| {
        a.start_s
            .total_cmp(&b.start_s)
            .then(a.token_index.cmp(&b.token_index))
    });
    let first_start = events[0].start_s;

    let mut anchors: Vec<f64> = Vec::new();
    if ml.matches.len() == targets.len() {
        anchors.push(ml.matches.last().expect("non-empty").end_s);
    }
    anchors.extend(
        segment
            .examiner_tokens()
            .filter(|t| t.start_s > first_start)
            .map(|t| t.end_s),
    );

    let gap = cfg.reinstruction_gap_s;
    let kept: Vec<&&Match> = events
        .iter()
        .filter(|e| !anchors.iter().any(|a| e.start_s > a + gap))
        .collect();
    let excluded = events.len() - kept.len();
    let duration = kept.last().expect("first event always kept").end_s
        - kept.first().expect("non-empty").start_s;
    let (value, clamped) = clamp_duration(duration, cfg);

    let mut notes = vec![format!(
        "{} of {} objects named",
        ml.matches.len(),
        targets.len()
    )];
    if excluded > 0 {
        notes.push(format!(
            "{excluded} late repeat mention(s) excluded from endpoints"
        ));
    }
    Ok(SktRaw {
        subtest: segment.subtest,
        kind: SktScoreKind::DurationSeconds,
        value,
        clamped,
        confabulations: Vec::new(),
        evidence: ml.matches,
        notes,
    })
}

/// Score a memory subtest (immediate recall, delayed recall, recognition):
/// the number of missing objects out of the target list, with confabulated
/// mentions reported alongside.
pub fn score_skt_memory(
    segment: &Segment<'_>,
    targets: &TargetList,
    lemmas: &LemmaTable,
    stoplist: &Stoplist,
    policy: RankPolicy,
) -> Result<SktRaw> {
    let ml = match_targets(segment, targets, lemmas, policy)?;
    let missing = targets.len() - ml.matches.len();
    let confabulations = distinct_content_forms(segment, &ml.unmatched_tokens, stoplist);
    Ok(SktRaw {
        subtest: segment.subtest,
        kind: SktScoreKind::MissingCount,
        value: missing as f64,
        clamped: false,
        confabulations,
        evidence: ml.matches,
        notes: Vec::new(),
    })
}

/// Distinct normalized forms of unmatched tokens that are not fillers, in
/// first-mention order.
fn distinct_content_forms(
    segment: &Segment<'_>,
    unmatched: &[usize],
    stoplist: &Stoplist,
) -> Vec<String> {
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for &idx in unmatched {
        let form = normalize(segment.tokens[idx].rank1());
        if form.is_empty() || stoplist.contains(&form) {
            continue;
        }
        if seen.insert(form.clone()) {
            out.push(form);
        }
    }
    out
}

fn number_evidence(hits: &[crate::matching::NumberHit], segment: &Segment<'_>) -> Vec<Match> {
    hits.iter()
        .map(|h| Match {
            target_canonical: h.value.to_string(),
            token_index: h.token_index,
            matched_surface: segment.tokens[h.token_index].rank1().to_string(),
            matched_rank: 1,
            start_s: h.start_s,
            end_s: h.end_s,
        })
        .collect()
}

/// Score the number-reading task: time from the first two-digit number to
/// the last. Ten numbers are expected; fewer than two leave the task
/// unscorable, fewer than ten flag low evidence.
pub fn score_skt3(
    segment: &Segment<'_>,
    numbers: &NumberMap,
    policy: RankPolicy,
    cfg: &SktConfig,
) -> Result<SktRaw> {
    let hits = find_numbers(segment, numbers, policy);
    if hits.len() < 2 {
        return Err(Error::Unscorable {
            subtest: segment.subtest,
            reason: format!(
                "{} two-digit number(s) recognized, need at least 2",
                hits.len()
            ),
        });
    }
    let duration = hits.last().expect("non-empty").end_s - hits[0].start_s;
    let (value, clamped) = clamp_duration(duration, cfg);
    let mut notes = vec![format!("{} two-digit numbers recognized", hits.len())];
    if hits.len() < 10 {
        notes.push("low evidence: fewer than the 10 expected numbers".into());
    }
    Ok(SktRaw {
        subtest: segment.subtest,
        kind: SktScoreKind::DurationSeconds,
        value,
        clamped,
        confabulations: Vec::new(),
        evidence: number_evidence(&hits, segment),
        notes,
    })
}

/// Score the symbol-counting task: time from the start of the task span to
/// the end of the last two-digit number named. Whether the counted total is
/// correct is recorded as evidence only.
pub fn score_skt6(
    segment: &Segment<'_>,
    numbers: &NumberMap,
    policy: RankPolicy,
    cfg: &SktConfig,
) -> Result<SktRaw> {
    let hits = find_numbers(segment, numbers, policy);
    let Some(last) = hits.last().copied() else {
        return Err(Error::Unscorable {
            subtest: segment.subtest,
            reason: "no two-digit number recognized".into(),
        });
    };
    let duration = last.end_s - segment.start_s;
    let (value, clamped) = clamp_duration(duration, cfg);
    let notes = vec![format!(
        "final counted value {} (correctness noted, not scored)",
        last.value
    )];
    Ok(SktRaw {
        subtest: segment.subtest,
        kind: SktScoreKind::DurationSeconds,
        value,
        clamped,
        confabulations: Vec::new(),
        evidence: number_evidence(&hits, segment),
        notes,
    })
}

/// Score the interference task: time from the first to the last letter of
/// the task alphabet.
pub fn score_skt7(
    segment: &Segment<'_>,
    alphabet: &[char],
    letter_names: &LetterNames,
    policy: RankPolicy,
    cfg: &SktConfig,
) -> Result<SktRaw> {
    let hits = find_letters(segment, alphabet, letter_names, policy)?;
    if hits.len() < 2 {
        return Err(Error::Unscorable {
            subtest: segment.subtest,
            reason: format!(
                "{} alphabet letter(s) recognized, need at least 2",
                hits.len()
            ),
        });
    }
    let duration = hits.last().expect("non-empty").end_s - hits[0].start_s;
    let (value, clamped) = clamp_duration(duration, cfg);
    let evidence = hits
        .iter()
        .map(|h| Match {
            target_canonical: h.letter.to_string(),
            token_index: h.token_index,
            matched_surface: segment.tokens[h.token_index].rank1().to_string(),
            matched_rank: 1,
            start_s: h.start_s,
            end_s: h.end_s,
        })
        .collect();
    Ok(SktRaw {
        subtest: segment.subtest,
        kind: SktScoreKind::DurationSeconds,
        value,
        clamped,
        confabulations: Vec::new(),
        evidence,
        notes: vec![format!("{} letters recognized", hits.len())],
    })
}

// ── Norm conversion ──────────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Synthetic,
    Clinical,
}

/// Raw-to-norm conversion table keyed by subtest, age band, and IQ band.
///
/// Within a cell, breakpoints are upper bounds (closed below): raw values at
/// or below the first breakpoint take its norm value, values above the last
/// breakpoint take 3.
#[derive(Debug, Clone)]
pub struct SktNormTable {
    pub provenance: Provenance,
    cells: Vec<NormCell>,
}

#[derive(Debug, Clone)]
struct NormCell {
    subtests: Vec<SubtestId>,
    age_min: u32,
    age_max: u32,
    iq: Vec<crate::transcript::IqBand>,
    breakpoints: Vec<(f64, u8)>,
}

#[derive(Debug, Deserialize)]
struct NormTableFile {
    provenance: String,
    #[serde(default)]
    cell: Vec<NormCellFile>,
}

#[derive(Debug, Deserialize)]
struct NormCellFile {
    subtests: Vec<String>,
    age_min: u32,
    age_max: u32,
    iq: Vec<String>,
    breakpoints: Vec<(f64, u8)>,
}

impl SktNormTable {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read norm table {}: {e}", path.display()))
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    /// The synthetic example table shipped with the crate. NON-CLINICAL.
    pub fn builtin_synthetic() -> Self {
        Self::parse(
            include_str!("../data/norm_table_synthetic.toml"),
            "builtin norm table",
        )
        .expect("embedded norm table must be valid")
    }

    pub fn parse(text: &str, name: &str) -> Result<Self> {
        let file: NormTableFile =
            toml::from_str(text).map_err(|e| Error::Config(format!("{name}: {e}")))?;
        let provenance = match file.provenance.as_str() {
            "SYNTHETIC" => Provenance::Synthetic,
            "CLINICAL" => Provenance::Clinical,
            other => {
                return Err(Error::Config(format!(
                    "{name}: provenance must be SYNTHETIC or CLINICAL, got {other:?}"
                )))
            }
        };
        let mut cells = Vec::new();
        for (i, c) in file.cell.iter().enumerate() {
            let subtests: Vec<SubtestId> = c
                .subtests
                .iter()
                .map(|s| s.parse())
                .collect::<Result<_>>()
                .map_err(|e| Error::Config(format!("{name} cell {i}: {e}")))?;
            let iq = c
                .iq
                .iter()
                .map(|s| match s.as_str() {
                    "below_avg" => Ok(crate::transcript::IqBand::BelowAvg),
                    "avg" => Ok(crate::transcript::IqBand::Avg),
                    "above_avg" => Ok(crate::transcript::IqBand::AboveAvg),
                    other => Err(Error::Config(format!(
                        "{name} cell {i}: unknown iq band {other:?}"
                    ))),
                })
                .collect::<Result<_>>()?;
            if c.breakpoints.is_empty() {
                return Err(Error::Config(format!("{name} cell {i}: no breakpoints")));
            }
            for w in c.breakpoints.windows(2) {
                if w[1].0 <= w[0].0 {
                    return Err(Error::Config(format!(
                        "{name} cell {i}: breakpoints must be strictly increasing"
                    )));
                }
                if w[1].1 < w[0].1 {
                    return Err(Error::Config(format!(
                        "{name} cell {i}: norm values must be non-decreasing"
                    )));
                }
            }
            if c.breakpoints.iter().any(|(_, n)| *n > 3) {
                return Err(Error::Config(format!(
                    "{name} cell {i}: norm values must be 0-3"
                )));
            }
            if c.age_min > c.age_max {
                return Err(Error::Config(format!("{name} cell {i}: age_min > age_max")));
            }
            cells.push(NormCell {
                subtests,
                age_min: c.age_min,
                age_max: c.age_max,
                iq,
                breakpoints: c.breakpoints.clone(),
            });
        }
        Ok(SktNormTable { provenance, cells })
    }

    fn cell_for(&self, subtest: SubtestId, meta: &SubjectMetadata) -> Result<&NormCell> {
        self.cells
            .iter()
            .find(|c| {
                c.subtests.contains(&subtest)
                    && (c.age_min..=c.age_max).contains(&meta.age)
                    && c.iq.contains(&meta.iq_band)
            })
            .ok_or_else(|| {
                Error::Config(format!(
                    "norm table has no cell for {subtest} at age {} / iq {:?}",
                    meta.age, meta.iq_band
                ))
            })
    }
}

/// Convert a raw score to its norm value (0 best .. 3 worst) for the
/// subject's age and IQ band.
pub fn raw_to_norm(raw: &SktRaw, meta: &SubjectMetadata, table: &SktNormTable) -> Result<u8> {
    let cell = table.cell_for(raw.subtest, meta)?;
    for (bp, norm) in &cell.breakpoints {
        if raw.value <= *bp {
            return Ok(*norm);
        }
    }
    Ok(3)
}

// ── Summary ──────────────────────────────────────────────────────────────────

/// All nine subtests of the battery; the two non-verbal ones can only carry
/// externally supplied norm values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SktSubtest {
    NamingObjects,
    RecallImmediate,
    ReadingNumbers,
    OrderingNumbers,
    ReorderingNumbers,
    CountingSymbols,
    Interference,
    RecallDelayed,
    Recognition,
}

impl SktSubtest {
    pub const ALL: [SktSubtest; 9] = [
        SktSubtest::NamingObjects,
        SktSubtest::RecallImmediate,
        SktSubtest::ReadingNumbers,
        SktSubtest::OrderingNumbers,
        SktSubtest::ReorderingNumbers,
        SktSubtest::CountingSymbols,
        SktSubtest::Interference,
        SktSubtest::RecallDelayed,
        SktSubtest::Recognition,
    ];

    pub fn from_subtest_id(id: SubtestId) -> Option<Self> {
        match id {
            SubtestId::Skt1 => Some(SktSubtest::NamingObjects),
            SubtestId::Skt2 => Some(SktSubtest::RecallImmediate),
            SubtestId::Skt3 => Some(SktSubtest::ReadingNumbers),
            SubtestId::Skt6 => Some(SktSubtest::CountingSymbols),
            SubtestId::Skt7 => Some(SktSubtest::Interference),
            SubtestId::Skt8 => Some(SktSubtest::RecallDelayed),
            SubtestId::Skt9 => Some(SktSubtest::Recognition),
            _ => None,
        }
    }

    pub fn is_memory(&self) -> bool {
        matches!(
            self,
            SktSubtest::RecallImmediate | SktSubtest::RecallDelayed | SktSubtest::Recognition
        )
    }

    pub fn label(&self) -> &'static str {
        match self {
            SktSubtest::NamingObjects => "naming objects",
            SktSubtest::RecallImmediate => "reproducing objects",
            SktSubtest::ReadingNumbers => "reading numbers",
            SktSubtest::OrderingNumbers => "ordering numbers",
            SktSubtest::ReorderingNumbers => "reordering numbers",
            SktSubtest::CountingSymbols => "counting symbols",
            SktSubtest::Interference => "interference test",
            SktSubtest::RecallDelayed => "naming after distraction",
            SktSubtest::Recognition => "recognizing objects",
        }
    }
}

impl fmt::Display for SktSubtest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    None,
    Mci,
    Mild,
    Moderate,
    Severe,
    VerySevere,
}

impl Severity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Severity::None => "none",
            Severity::Mci => "mci",
            Severity::Mild => "mild",
            Severity::Moderate => "moderate",
            Severity::Severe => "severe",
            Severity::VerySevere => "very_severe",
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Severity band of a total norm score 0-27: 0-4 no impairment, 5-8 mild
/// cognitive impairment, then mild (9-13), moderate (14-18), severe (19-23),
/// and very severe (24-27) syndrome.
pub fn severity_band(total: u32) -> Severity {
    match total {
        0..=4 => Severity::None,
        5..=8 => Severity::Mci,
        9..=13 => Severity::Mild,
        14..=18 => Severity::Moderate,
        19..=23 => Severity::Severe,
        _ => Severity::VerySevere,
    }
}

#[derive(Debug, Clone)]
pub struct SktSummary {
    pub attention_score: u32,
    pub memory_score: u32,
    pub total_score: u32,
    pub severity: Severity,
    pub unscored_subtests: Vec<SktSubtest>,
}

impl SktSummary {
    /// True when any subtest is missing, making the sums lower bounds.
    pub fn is_partial(&self) -> bool {
        !self.unscored_subtests.is_empty()
    }
}

/// Sum norm values into memory, attention, and total scores. Norms for the
/// two non-verbal subtests may be supplied externally in the same map; any
/// subtest absent from the map is listed as unscored and the sums are
/// partial.
pub fn skt_summary(norms: &BTreeMap<SktSubtest, u8>) -> SktSummary {
    let mut attention = 0u32;
    let mut memory = 0u32;
    let mut unscored = Vec::new();
    for subtest in SktSubtest::ALL {
        match norms.get(&subtest) {
            Some(&norm) => {
                let norm = norm.min(3) as u32;
                if subtest.is_memory() {
                    memory += norm;
                } else {
                    attention += norm;
                }
            }
            None => unscored.push(subtest),
        }
    }
    let total = attention + memory;
    SktSummary {
        attention_score: attention,
        memory_score: memory,
        total_score: total,
        severity: severity_band(total),
        unscored_subtests: unscored,
    }
}
