//! Timed-token session model: parsing, validation, serialization, and
//! segment slicing.
//!
//! A session file is UTF-8 with one JSON object per line: a single `header`
//! record, then `token` records in time order, then `span` records labeling
//! subtest intervals, plus optional structured `recognition` records for the
//! word-list recognition task. Spans are half-open `[start_s, end_s)` so that
//! adjacent spans partition time; small overlaps (up to a configurable slack)
//! are tolerated, with overlapping tokens assigned to the earlier span.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Default number of word alternatives kept per token.
pub const DEFAULT_MAX_ALTERNATIVES: u32 = 5;
/// Default tolerated overlap between labeled subtest spans, in seconds.
pub const DEFAULT_SPAN_OVERLAP_SLACK_S: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    Patient,
    Examiner,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sex {
    Female,
    Male,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IqBand {
    BelowAvg,
    Avg,
    AboveAvg,
}

/// The speech-scorable subtests of the two batteries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SubtestId {
    #[serde(rename = "SKT1")]
    Skt1,
    #[serde(rename = "SKT2")]
    Skt2,
    #[serde(rename = "SKT3")]
    Skt3,
    #[serde(rename = "SKT6")]
    Skt6,
    #[serde(rename = "SKT7")]
    Skt7,
    #[serde(rename = "SKT8")]
    Skt8,
    #[serde(rename = "SKT9")]
    Skt9,
    #[serde(rename = "CERAD1")]
    Cerad1,
    #[serde(rename = "CERAD2")]
    Cerad2,
    #[serde(rename = "CERAD3")]
    Cerad3,
    #[serde(rename = "CERAD4")]
    Cerad4,
    #[serde(rename = "CERAD6")]
    Cerad6,
    #[serde(rename = "CERAD7")]
    Cerad7,
}

impl SubtestId {
    pub const ALL: [SubtestId; 13] = [
        SubtestId::Skt1,
        SubtestId::Skt2,
        SubtestId::Skt3,
        SubtestId::Skt6,
        SubtestId::Skt7,
        SubtestId::Skt8,
        SubtestId::Skt9,
        SubtestId::Cerad1,
        SubtestId::Cerad2,
        SubtestId::Cerad3,
        SubtestId::Cerad4,
        SubtestId::Cerad6,
        SubtestId::Cerad7,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SubtestId::Skt1 => "SKT1",
            SubtestId::Skt2 => "SKT2",
            SubtestId::Skt3 => "SKT3",
            SubtestId::Skt6 => "SKT6",
            SubtestId::Skt7 => "SKT7",
            SubtestId::Skt8 => "SKT8",
            SubtestId::Skt9 => "SKT9",
            SubtestId::Cerad1 => "CERAD1",
            SubtestId::Cerad2 => "CERAD2",
            SubtestId::Cerad3 => "CERAD3",
            SubtestId::Cerad4 => "CERAD4",
            SubtestId::Cerad6 => "CERAD6",
            SubtestId::Cerad7 => "CERAD7",
        }
    }
}

impl fmt::Display for SubtestId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SubtestId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SubtestId::ALL
            .iter()
            .copied()
            .find(|id| id.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Contract(format!("unknown subtest id {s:?}")))
    }
}

/// One ranked recognition alternative for a token. Rank 1 is the 1-best
/// hypothesis and always equals the token surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordAlt {
    pub surface: String,
    pub rank: u32,
}

/// One recognized word with timing, speaker attribution, and ranked
/// alternatives. The atom of all scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedToken {
    pub surface: String,
    pub start_s: f64,
    pub end_s: f64,
    pub speaker: Speaker,
    /// Non-empty; ranks strictly increasing; rank 1 equals `surface`.
    pub alternatives: Vec<WordAlt>,
}

impl TimedToken {
    /// Convenience constructor for a token with only its 1-best surface.
    pub fn one_best(
        surface: impl Into<String>,
        start_s: f64,
        end_s: f64,
        speaker: Speaker,
    ) -> Self {
        let surface = surface.into();
        let alternatives = vec![WordAlt {
            surface: surface.clone(),
            rank: 1,
        }];
        TimedToken {
            surface,
            start_s,
            end_s,
            speaker,
            alternatives,
        }
    }

    pub fn rank1(&self) -> &str {
        &self.surface
    }
}

/// A labeled subtest interval, half-open `[start_s, end_s)`.
///
/// `part` distinguishes repeated administrations of the same subtest within
/// one session (the word-list learning task runs three passes); it defaults
/// to 1 and is omitted from files when 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubtestSpan {
    pub subtest: SubtestId,
    pub part: u32,
    pub start_s: f64,
    pub end_s: f64,
}

impl SubtestSpan {
    pub fn new(subtest: SubtestId, start_s: f64, end_s: f64) -> Self {
        SubtestSpan {
            subtest,
            part: 1,
            start_s,
            end_s,
        }
    }

    pub fn contains(&self, time_s: f64) -> bool {
        self.start_s <= time_s && time_s < self.end_s
    }
}

/// Subject facts needed for norm lookups and z-models, plus optional expert
/// scores attached by the evaluation harness (never serialized with the
/// session).
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectMetadata {
    pub age: u32,
    pub sex: Sex,
    pub iq_band: IqBand,
    pub education_years: u32,
    pub expert_scores: BTreeMap<String, f64>,
}

impl SubjectMetadata {
    pub fn new(age: u32, sex: Sex, iq_band: IqBand, education_years: u32) -> Self {
        SubjectMetadata {
            age,
            sex,
            iq_band,
            education_years,
            expert_scores: BTreeMap::new(),
        }
    }
}

/// A structured yes/no answer for the word-list recognition task. Answer
/// extraction from free speech is out of scope; these arrive pre-structured.
#[derive(Debug, Clone, PartialEq)]
pub struct RecognitionResponse {
    pub word: String,
    pub answer_yes: bool,
}

/// A full screening recording: time-ordered tokens, labeled subtest spans,
/// optional recognition answers, and subject metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub subject_id: String,
    pub tokens: Vec<TimedToken>,
    pub spans: Vec<SubtestSpan>,
    pub recognition_responses: Vec<RecognitionResponse>,
    pub metadata: SubjectMetadata,
}

/// Options for session parsing and construction.
#[derive(Debug, Clone)]
pub struct ParseOptions {
    pub max_alternatives: u32,
    pub span_overlap_slack_s: f64,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            max_alternatives: DEFAULT_MAX_ALTERNATIVES,
            span_overlap_slack_s: DEFAULT_SPAN_OVERLAP_SLACK_S,
        }
    }
}

// ── File records ─────────────────────────────────────────────────────────────

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Answer {
    Yes,
    No,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum Record {
    Header {
        subject_id: String,
        age: u32,
        sex: Sex,
        iq_band: IqBand,
        education_years: u32,
    },
    Token {
        surface: String,
        start_s: f64,
        end_s: f64,
        speaker: Speaker,
        #[serde(default)]
        alts: Vec<WordAlt>,
    },
    Span {
        subtest: SubtestId,
        start_s: f64,
        end_s: f64,
        #[serde(default)]
        part: Option<u32>,
    },
    Recognition {
        word: String,
        answer: Answer,
    },
}

/// Parse a session file with the default overlap slack.
pub fn parse_session(path: impl AsRef<Path>, max_alternatives: u32) -> Result<Session> {
    parse_session_with(
        path,
        &ParseOptions {
            max_alternatives,
            ..ParseOptions::default()
        },
    )
}

/// Parse a session file, validating every type invariant. Errors carry the
/// offending line number.
pub fn parse_session_with(path: impl AsRef<Path>, opts: &ParseOptions) -> Result<Session> {
    let path = path.as_ref();
    let name = path.display().to_string();
    let text = fs::read_to_string(path)?;
    parse_session_str(&text, &name, opts)
}

/// Parse session records from an in-memory string; `name` labels errors.
pub fn parse_session_str(text: &str, name: &str, opts: &ParseOptions) -> Result<Session> {
    if opts.max_alternatives < 1 {
        return Err(Error::Contract("max_alternatives must be >= 1".into()));
    }
    let mut header: Option<(String, SubjectMetadata)> = None;
    let mut tokens: Vec<TimedToken> = Vec::new();
    let mut spans: Vec<SubtestSpan> = Vec::new();
    let mut responses: Vec<RecognitionResponse> = Vec::new();

    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(line)
            .map_err(|e| Error::parse(name, line_no, e.to_string()))?;
        match record {
            Record::Header {
                subject_id,
                age,
                sex,
                iq_band,
                education_years,
            } => {
                if header.is_some() {
                    return Err(Error::parse(name, line_no, "duplicate header record"));
                }
                if subject_id.is_empty() {
                    return Err(Error::parse(name, line_no, "subject_id must be non-empty"));
                }
                if age == 0 {
                    return Err(Error::parse(name, line_no, "age must be > 0"));
                }
                header = Some((
                    subject_id,
                    SubjectMetadata::new(age, sex, iq_band, education_years),
                ));
            }
            Record::Token {
                surface,
                start_s,
                end_s,
                speaker,
                alts,
            } => {
                if header.is_none() {
                    return Err(Error::parse(name, line_no, "token record before header"));
                }
                let token =
                    build_token(surface, start_s, end_s, speaker, alts, opts.max_alternatives)
                        .map_err(|msg| Error::parse(name, line_no, msg))?;
                if let Some(prev) = tokens.last() {
                    if token.start_s < prev.start_s {
                        return Err(Error::Structural(format!(
                            "{name} line {line_no}: token at {:.2} starts before previous token at {:.2}",
                            token.start_s, prev.start_s
                        )));
                    }
                }
                tokens.push(token);
            }
            Record::Span {
                subtest,
                start_s,
                end_s,
                part,
            } => {
                if header.is_none() {
                    return Err(Error::parse(name, line_no, "span record before header"));
                }
                if !(end_s > start_s) {
                    return Err(Error::parse(
                        name,
                        line_no,
                        format!("span for {subtest} must satisfy end_s > start_s"),
                    ));
                }
                let part = part.unwrap_or(1);
                if part == 0 {
                    return Err(Error::parse(name, line_no, "span part must be >= 1"));
                }
                if spans.iter().any(|s| s.subtest == subtest && s.part == part) {
                    return Err(Error::Structural(format!(
                        "{name} line {line_no}: more than one span for {subtest} part {part}"
                    )));
                }
                spans.push(SubtestSpan {
                    subtest,
                    part,
                    start_s,
                    end_s,
                });
            }
            Record::Recognition { word, answer } => {
                if header.is_none() {
                    return Err(Error::parse(
                        name,
                        line_no,
                        "recognition record before header",
                    ));
                }
                responses.push(RecognitionResponse {
                    word,
                    answer_yes: matches!(answer, Answer::Yes),
                });
            }
        }
    }

    let (subject_id, metadata) =
        header.ok_or_else(|| Error::parse(name, 1, "missing header record"))?;
    check_span_overlaps(&spans, opts.span_overlap_slack_s)?;
    Ok(Session {
        subject_id,
        tokens,
        spans,
        recognition_responses: responses,
        metadata,
    })
}

fn build_token(
    surface: String,
    start_s: f64,
    end_s: f64,
    speaker: Speaker,
    mut alts: Vec<WordAlt>,
    max_alternatives: u32,
) -> std::result::Result<TimedToken, String> {
    if !start_s.is_finite() || !end_s.is_finite() || start_s < 0.0 {
        return Err(format!("token {surface:?} has invalid times"));
    }
    if end_s < start_s {
        return Err(format!(
            "token {surface:?} has end_s {end_s} before start_s {start_s}"
        ));
    }
    if alts.is_empty() {
        alts.push(WordAlt {
            surface: surface.clone(),
            rank: 1,
        });
    }
    if alts[0].rank != 1 || alts[0].surface != surface {
        return Err(format!(
            "token {surface:?}: rank-1 alternative must equal the surface"
        ));
    }
    for pair in alts.windows(2) {
        if pair[1].rank <= pair[0].rank {
            return Err(format!(
                "token {surface:?}: alternative ranks must be strictly increasing"
            ));
        }
    }
    alts.retain(|a| a.rank <= max_alternatives);
    Ok(TimedToken {
        surface,
        start_s,
        end_s,
        speaker,
        alternatives: alts,
    })
}

fn check_span_overlaps(spans: &[SubtestSpan], slack_s: f64) -> Result<()> {
    for (i, a) in spans.iter().enumerate() {
        for b in spans.iter().skip(i + 1) {
            let overlap = a.end_s.min(b.end_s) - a.start_s.max(b.start_s);
            if overlap > slack_s {
                return Err(Error::Structural(format!(
                    "spans {} and {} overlap by {overlap:.2} s (more than the {slack_s:.2} s slack)",
                    a.subtest, b.subtest
                )));
            }
        }
    }
    Ok(())
}

// ── Serialization ─────────────────────────────────────────────────────────────

/// Format seconds with at least two fractional digits, preserving full
/// precision for values that need more.
fn fmt_seconds(x: f64) -> String {
    let s = format!("{x}");
    match s.split_once('.') {
        Some((_, frac)) if frac.len() >= 2 => s,
        _ => format!("{x:.2}"),
    }
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("string serialization cannot fail")
}

/// Serialize a session to its line-oriented file form. Deterministic:
/// identical sessions produce identical bytes.
pub fn session_to_jsonl(session: &Session) -> String {
    let mut out = String::new();
    let m = &session.metadata;
    out.push_str(&format!(
        "{{\"kind\":\"header\",\"subject_id\":{},\"age\":{},\"sex\":{},\"iq_band\":{},\"education_years\":{}}}\n",
        json_str(&session.subject_id),
        m.age,
        serde_json::to_string(&m.sex).unwrap(),
        serde_json::to_string(&m.iq_band).unwrap(),
        m.education_years,
    ));
    for t in &session.tokens {
        let alts: Vec<String> = t
            .alternatives
            .iter()
            .map(|a| format!("{{\"surface\":{},\"rank\":{}}}", json_str(&a.surface), a.rank))
            .collect();
        out.push_str(&format!(
            "{{\"kind\":\"token\",\"surface\":{},\"start_s\":{},\"end_s\":{},\"speaker\":{},\"alts\":[{}]}}\n",
            json_str(&t.surface),
            fmt_seconds(t.start_s),
            fmt_seconds(t.end_s),
            serde_json::to_string(&t.speaker).unwrap(),
            alts.join(","),
        ));
    }
    for s in &session.spans {
        if s.part == 1 {
            out.push_str(&format!(
                "{{\"kind\":\"span\",\"subtest\":\"{}\",\"start_s\":{},\"end_s\":{}}}\n",
                s.subtest,
                fmt_seconds(s.start_s),
                fmt_seconds(s.end_s),
            ));
        } else {
            out.push_str(&format!(
                "{{\"kind\":\"span\",\"subtest\":\"{}\",\"start_s\":{},\"end_s\":{},\"part\":{}}}\n",
                s.subtest,
                fmt_seconds(s.start_s),
                fmt_seconds(s.end_s),
                s.part,
            ));
        }
    }
    for r in &session.recognition_responses {
        out.push_str(&format!(
            "{{\"kind\":\"recognition\",\"word\":{},\"answer\":\"{}\"}}\n",
            json_str(&r.word),
            if r.answer_yes { "yes" } else { "no" },
        ));
    }
    out
}

pub fn write_session(session: &Session, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, session_to_jsonl(session))?;
    Ok(())
}

// ── Segment slicing ──────────────────────────────────────────────────────────

/// The tokens of one subtest administration, sliced from a session.
///
/// `tokens` honors the speaker filter; `filtered_out` keeps the span's other
/// tokens so scorers can still see examiner activity (the naming-task
/// re-instruction rule needs it).
#[derive(Debug, Clone)]
pub struct Segment<'a> {
    pub subtest: SubtestId,
    pub part: u32,
    pub start_s: f64,
    pub end_s: f64,
    pub tokens: Vec<&'a TimedToken>,
    pub filtered_out: Vec<&'a TimedToken>,
}

impl<'a> Segment<'a> {
    /// Examiner tokens inside the span regardless of the speaker filter.
    pub fn examiner_tokens(&self) -> impl Iterator<Item = &'a TimedToken> + '_ {
        self.tokens
            .iter()
            .chain(self.filtered_out.iter())
            .copied()
            .filter(|t| t.speaker == Speaker::Examiner)
    }

    /// Rank-1 surfaces of the filtered tokens, in time order.
    pub fn surfaces(&self) -> Vec<&'a str> {
        self.tokens.iter().map(|t| t.rank1()).collect()
    }

    /// Build a segment directly from tokens, for tests and synthesis.
    pub fn from_parts(
        subtest: SubtestId,
        start_s: f64,
        end_s: f64,
        tokens: Vec<&'a TimedToken>,
    ) -> Self {
        Segment {
            subtest,
            part: 1,
            start_s,
            end_s,
            tokens,
            filtered_out: Vec::new(),
        }
    }
}

impl Session {
    pub fn span(&self, subtest: SubtestId, part: u32) -> Option<&SubtestSpan> {
        self.spans
            .iter()
            .find(|s| s.subtest == subtest && s.part == part)
    }

    /// Parts labeled for a subtest, ascending.
    pub fn parts(&self, subtest: SubtestId) -> Vec<u32> {
        let mut parts: Vec<u32> = self
            .spans
            .iter()
            .filter(|s| s.subtest == subtest)
            .map(|s| s.part)
            .collect();
        parts.sort_unstable();
        parts
    }

    /// The span owning a time point: the earliest-starting span containing
    /// it. Tokens in a tolerated overlap region go to the earlier span.
    fn owning_span(&self, time_s: f64) -> Option<&SubtestSpan> {
        self.spans
            .iter()
            .filter(|s| s.contains(time_s))
            .min_by(|a, b| a.start_s.total_cmp(&b.start_s))
    }
}

/// Slice the tokens of one subtest (part 1) out of a session.
///
/// Returns exactly the tokens whose start time falls in the half-open span
/// interval and which are not claimed by an earlier overlapping span,
/// filtered to `speaker_filter` when given. A missing span is reported as
/// `SpanNotPresent` so scorers mark the subtest unscored rather than zero.
pub fn slice_segment<'a>(
    session: &'a Session,
    subtest: SubtestId,
    speaker_filter: Option<Speaker>,
) -> Result<Segment<'a>> {
    slice_segment_part(session, subtest, 1, speaker_filter)
}

/// Slice one administration (`part`) of a subtest.
pub fn slice_segment_part<'a>(
    session: &'a Session,
    subtest: SubtestId,
    part: u32,
    speaker_filter: Option<Speaker>,
) -> Result<Segment<'a>> {
    let span = session
        .span(subtest, part)
        .ok_or(Error::SpanNotPresent { subtest })?;
    let mut tokens = Vec::new();
    let mut filtered_out = Vec::new();
    for t in &session.tokens {
        if !span.contains(t.start_s) {
            continue;
        }
        match session.owning_span(t.start_s) {
            Some(owner) if std::ptr::eq(owner, span) => {}
            _ => continue,
        }
        match speaker_filter {
            Some(speaker) if t.speaker != speaker => filtered_out.push(t),
            _ => tokens.push(t),
        }
    }
    Ok(Segment {
        subtest,
        part,
        start_s: span.start_s,
        end_s: span.end_s,
        tokens,
        filtered_out,
    })
}
