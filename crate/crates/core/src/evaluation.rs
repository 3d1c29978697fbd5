//! Cohort evaluation: word accuracy per subject, Pearson correlations of
//! automatic vs. reference scores per subtest and transcript source,
//! accuracy-threshold cohort filtering, and deterministic report tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matching::RankPolicy;
use crate::session::{keys, score_session, ScoringContext};
use crate::transcript::{Session, Speaker, SubtestId};

/// Default accuracy threshold (percent) for the filtered cohort column.
pub const DEFAULT_ACCURACY_THRESHOLD_PCT: f64 = 20.0;

// ── Word accuracy ────────────────────────────────────────────────────────────

/// Percent correct: reference words aligned as matches under a unit-cost
/// minimum-edit alignment, over the reference length. Hypothesis insertions
/// are not penalized.
pub fn word_accuracy<S: AsRef<str>>(reference: &[S], hypothesis: &[S]) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::Contract(
            "word accuracy needs a non-empty reference".into(),
        ));
    }
    let n = reference.len();
    let m = hypothesis.len();
    // DP over (edit distance, -matches): minimize distance, then maximize
    // matches among minimum-distance alignments.
    #[derive(Clone, Copy)]
    struct Cell {
        dist: u32,
        matches: u32,
    }
    fn better(a: Cell, b: Cell) -> Cell {
        if a.dist < b.dist || (a.dist == b.dist && a.matches > b.matches) {
            a
        } else {
            b
        }
    }
    let mut prev: Vec<Cell> = (0..=m)
        .map(|j| Cell {
            dist: j as u32,
            matches: 0,
        })
        .collect();
    let mut cur = vec![
        Cell {
            dist: 0,
            matches: 0
        };
        m + 1
    ];
    for i in 1..=n {
        cur[0] = Cell {
            dist: i as u32,
            matches: 0,
        };
        for j in 1..=m {
            let eq = reference[i - 1].as_ref() == hypothesis[j - 1].as_ref();
            let diag = Cell {
                dist: prev[j - 1].dist + if eq { 0 } else { 1 },
                matches: prev[j - 1].matches + if eq { 1 } else { 0 },
            };
            let del = Cell {
                dist: prev[j].dist + 1,
                matches: prev[j].matches,
            };
            let ins = Cell {
                dist: cur[j - 1].dist + 1,
                matches: cur[j - 1].matches,
            };
            cur[j] = better(better(diag, del), ins);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m].matches as f64 / n as f64 * 100.0)
}

// ── Pearson correlation ──────────────────────────────────────────────────────

/// Product-moment correlation. Needs at least 3 pairs and non-constant
/// vectors.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::Contract(format!(
            "length mismatch: {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 3 {
        return Err(Error::Contract(format!(
            "need at least 3 pairs, got {}",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Undefined(
            "correlation undefined for a constant vector".into(),
        ));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

// ── Accuracy records and filtering ───────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TranscriptSource {
    Manual,
    Asr1,
    AsrN,
}

#[derive(Debug, Clone)]
pub struct AccuracyRecord {
    pub subject_id: String,
    pub percent_correct: f64,
    pub source: TranscriptSource,
}

/// Subjects whose accuracy is strictly above the threshold.
pub fn filter_by_accuracy(
    cohort: &[AccuracyRecord],
    threshold_pct: f64,
) -> Vec<&AccuracyRecord> {
    cohort
        .iter()
        .filter(|r| r.percent_correct > threshold_pct)
        .collect()
}

// ── Expert / reference scores ────────────────────────────────────────────────

/// Reference scores keyed by subject, then score key. The CSV form is
/// `subject_id,key,value` with a header line.
#[derive(Debug, Clone, Default)]
pub struct ExpertScores {
    pub by_subject: BTreeMap<String, BTreeMap<String, f64>>,
}

impl ExpertScores {
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        Self::parse_csv(&text, &path.display().to_string())
    }

    pub fn parse_csv(text: &str, name: &str) -> Result<Self> {
        let mut by_subject: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            if line.trim().is_empty() || (line_no == 1 && line.starts_with("subject_id")) {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::parse(
                    name,
                    line_no,
                    "expected subject_id,key,value",
                ));
            }
            let value: f64 = fields[2].trim().parse().map_err(|_| {
                Error::parse(name, line_no, format!("bad value {:?}", fields[2]))
            })?;
            by_subject
                .entry(fields[0].trim().to_string())
                .or_default()
                .insert(fields[1].trim().to_string(), value);
        }
        Ok(ExpertScores { by_subject })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("subject_id,key,value\n");
        for (subject, scores) in &self.by_subject {
            for (key, value) in scores {
                let _ = writeln!(out, "{subject},{key},{}", fmt_value(*value));
            }
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }
}

fn fmt_value(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{v:.1}")
    } else {
        format!("{v}")
    }
}

// ── Correlation table ────────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellStat {
    pub r: Option<f64>,
    pub n: usize,
    pub unstable: bool,
}

#[derive(Debug, Clone)]
pub struct CorrelationRow {
    pub key: String,
    pub label: String,
    pub cells: Vec<CellStat>,
}

/// Per-subtest correlations for each transcript source plus the filtered
/// cohort, mirroring the evaluation tables: one row per subtest or summary
/// score, one column per source.
#[derive(Debug, Clone)]
pub struct CorrelationTable {
    pub columns: Vec<String>,
    pub rows: Vec<CorrelationRow>,
    pub cohort_size: usize,
    pub filtered_cohort_size: usize,
    pub threshold_pct: f64,
}

/// Fixed report row order: battery order with summary rows after their
/// battery.
pub fn report_rows() -> Vec<(String, String)> {
    let mut rows = Vec::new();
    for id in [
        SubtestId::Skt1,
        SubtestId::Skt2,
        SubtestId::Skt3,
        SubtestId::Skt6,
        SubtestId::Skt7,
        SubtestId::Skt8,
        SubtestId::Skt9,
    ] {
        let label = crate::skt::SktSubtest::from_subtest_id(id)
            .expect("speech subtest")
            .label();
        rows.push((id.to_string(), label.to_string()));
    }
    rows.push((keys::SKT_ATTENTION.into(), "attention score".into()));
    rows.push((keys::SKT_MEMORY.into(), "memory score".into()));
    rows.push((keys::SKT_TOTAL.into(), "total score".into()));
    for (id, label) in [
        (SubtestId::Cerad1, "verbal fluency test"),
        (SubtestId::Cerad2, "Boston Naming Test"),
        (SubtestId::Cerad3, "MMSE"),
        (SubtestId::Cerad4, "word list learning"),
        (SubtestId::Cerad6, "word list recall"),
        (SubtestId::Cerad7, "word list recognition"),
    ] {
        rows.push((id.to_string(), label.to_string()));
    }
    rows.push((keys::CERAD_SAVINGS.into(), "word list savings".into()));
    rows.push((keys::CERAD_TOTAL.into(), "total".into()));
    rows
}

// ── Batch evaluation ─────────────────────────────────────────────────────────

/// One cohort member: the manual transcript and the recognizer transcript of
/// the same recording.
#[derive(Debug, Clone)]
pub struct CohortSubject {
    pub subject_id: String,
    pub manual: Session,
    pub asr: Session,
}

/// Flat score maps per source for one subject.
#[derive(Debug, Clone)]
pub struct SubjectScores {
    pub subject_id: String,
    pub manual: BTreeMap<String, f64>,
    pub asr1: BTreeMap<String, f64>,
    pub asr_n: BTreeMap<String, f64>,
    pub accuracy_pct: f64,
}

fn patient_surfaces(session: &Session) -> Vec<String> {
    session
        .tokens
        .iter()
        .filter(|t| t.speaker == Speaker::Patient)
        .map(|t| t.rank1().to_string())
        .collect()
}

/// Score one subject under all three sources. The manual transcript is
/// scored 1-best (it carries no alternatives); the recognizer transcript is
/// scored once with alternatives disabled and once with them enabled.
pub fn score_subject(
    subject: &CohortSubject,
    ctx: &ScoringContext,
    max_rank: u32,
) -> Result<SubjectScores> {
    let manual_ctx = ctx.with_policy(RankPolicy::one_best());
    let asr1_ctx = ctx.with_policy(RankPolicy::one_best());
    let asrn_ctx = ctx.with_policy(RankPolicy::with_alternatives(max_rank));
    let manual = score_session(&subject.manual, &manual_ctx)?.values();
    let asr1 = score_session(&subject.asr, &asr1_ctx)?.values();
    let asr_n = score_session(&subject.asr, &asrn_ctx)?.values();
    let reference = patient_surfaces(&subject.manual);
    let hypothesis = patient_surfaces(&subject.asr);
    let accuracy_pct = if reference.is_empty() {
        0.0
    } else {
        word_accuracy(&reference, &hypothesis)?
    };
    Ok(SubjectScores {
        subject_id: subject.subject_id.clone(),
        manual,
        asr1,
        asr_n,
        accuracy_pct,
    })
}

/// Score a whole cohort sequentially, ordered by subject id.
pub fn score_cohort_seq(
    cohort: &[CohortSubject],
    ctx: &ScoringContext,
    max_rank: u32,
) -> Result<Vec<SubjectScores>> {
    let mut scored: Vec<SubjectScores> = cohort
        .iter()
        .map(|s| score_subject(s, ctx, max_rank))
        .collect::<Result<_>>()?;
    scored.sort_by(|a, b| a.subject_id.cmp(&b.subject_id));
    Ok(scored)
}

/// Score a whole cohort with one task per subject, ordered by subject id.
/// Identical output to [`score_cohort_seq`].
#[cfg(feature = "parallel")]
pub fn score_cohort_par(
    cohort: &[CohortSubject],
    ctx: &ScoringContext,
    max_rank: u32,
) -> Result<Vec<SubjectScores>> {
    use rayon::prelude::*;
    let mut scored: Vec<SubjectScores> = cohort
        .par_iter()
        .map(|s| score_subject(s, ctx, max_rank))
        .collect::<Result<_>>()?;
    scored.sort_by(|a, b| a.subject_id.cmp(&b.subject_id));
    Ok(scored)
}

/// Score a cohort, in parallel when the `parallel` feature is enabled.
pub fn score_cohort(
    cohort: &[CohortSubject],
    ctx: &ScoringContext,
    max_rank: u32,
) -> Result<Vec<SubjectScores>> {
    #[cfg(feature = "parallel")]
    {
        score_cohort_par(cohort, ctx, max_rank)
    }
    #[cfg(not(feature = "parallel"))]
    {
        score_cohort_seq(cohort, ctx, max_rank)
    }
}

/// Build the correlation table from scored subjects and reference scores.
///
/// Per cell, subjects missing either value are dropped pairwise (`n`
/// reflects it); cells with n < 3 or an undefined correlation are marked
/// unstable rather than failing the table. The filtered column re-evaluates
/// the alternatives-enabled source on the subjects whose accuracy is
/// strictly above the threshold.
pub fn correlation_table(
    scored: &[SubjectScores],
    expert: &ExpertScores,
    threshold_pct: f64,
    max_rank: u32,
) -> CorrelationTable {
    let accuracy: Vec<AccuracyRecord> = scored
        .iter()
        .map(|s| AccuracyRecord {
            subject_id: s.subject_id.clone(),
            percent_correct: s.accuracy_pct,
            source: TranscriptSource::Asr1,
        })
        .collect();
    let kept: std::collections::BTreeSet<&str> = filter_by_accuracy(&accuracy, threshold_pct)
        .into_iter()
        .map(|r| r.subject_id.as_str())
        .collect();

    let mut rows = Vec::new();
    for (key, label) in report_rows() {
        let mut cells = Vec::new();
        for source in 0..4usize {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for s in scored {
                if source == 3 && !kept.contains(s.subject_id.as_str()) {
                    continue;
                }
                let auto = match source {
                    0 => s.manual.get(&key),
                    1 => s.asr1.get(&key),
                    _ => s.asr_n.get(&key),
                };
                let reference = expert
                    .by_subject
                    .get(&s.subject_id)
                    .and_then(|m| m.get(&key));
                if let (Some(a), Some(e)) = (auto, reference) {
                    xs.push(*e);
                    ys.push(*a);
                }
            }
            let n = xs.len();
            let cell = match pearson(&xs, &ys) {
                Ok(r) => CellStat {
                    r: Some(r),
                    n,
                    unstable: n < 3,
                },
                Err(_) => CellStat {
                    r: None,
                    n,
                    unstable: true,
                },
            };
            cells.push(cell);
        }
        rows.push(CorrelationRow { key, label, cells });
    }
    CorrelationTable {
        columns: vec![
            "Trans.".to_string(),
            "ASR-1".to_string(),
            format!("ASR-{max_rank}"),
            format!("Top-{}", kept.len()),
        ],
        rows,
        cohort_size: scored.len(),
        filtered_cohort_size: kept.len(),
        threshold_pct,
    }
}

/// Score a cohort and correlate against reference scores in one step.
pub fn evaluate_batch(
    cohort: &[CohortSubject],
    expert: &ExpertScores,
    ctx: &ScoringContext,
    threshold_pct: f64,
    max_rank: u32,
) -> Result<CorrelationTable> {
    let scored = score_cohort(cohort, ctx, max_rank)?;
    Ok(correlation_table(&scored, expert, threshold_pct, max_rank))
}

impl CorrelationTable {
    /// Machine-readable form: one row per score key, `r`/`n` per column,
    /// `NA` for unstable correlations. Byte-deterministic.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("key,label");
        for c in &self.columns {
            let slug = c.to_lowercase().replace(['.', '-'], "");
            let _ = write!(out, ",{slug}_r,{slug}_n");
        }
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "{},{}", row.key, row.label.replace(',', ";"));
            for cell in &row.cells {
                match cell.r {
                    Some(r) if !cell.unstable => {
                        let _ = write!(out, ",{r:.6},{}", cell.n);
                    }
                    Some(r) => {
                        let _ = write!(out, ",{r:.6}?,{}", cell.n);
                    }
                    None => {
                        let _ = write!(out, ",NA,{}", cell.n);
                    }
                }
            }
            out.push('\n');
        }
        out
    }

    /// Aligned text table in the usual two-decimal style; unstable cells are
    /// flagged with `?` and reported pair counts.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "Correlation of automatic scores with reference scores (n = {}; filtered column: accuracy > {}%, n = {})",
            self.cohort_size, self.threshold_pct, self.filtered_cohort_size
        );
        let _ = write!(out, "{:<14}{:<26}", "ID", "Test/Task");
        for c in &self.columns {
            let _ = write!(out, "{c:>12}");
        }
        out.push('\n');
        let width = 14 + 26 + 12 * self.columns.len();
        out.push_str(&"-".repeat(width));
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "{:<14}{:<26}", row.key, row.label);
            for cell in &row.cells {
                let text = match cell.r {
                    Some(r) if !cell.unstable => format!("{r:.2} ({})", cell.n),
                    Some(r) => format!("{r:.2}?({})", cell.n),
                    None => format!("NA ({})", cell.n),
                };
                let _ = write!(out, "{text:>12}");
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn accuracy_identical_is_100() {
        let r = s(&["a", "b", "c"]);
        assert_eq!(word_accuracy(&r, &r).unwrap(), 100.0);
    }

    #[test]
    fn accuracy_disjoint_is_0() {
        let r = s(&["a", "b", "c"]);
        let h = s(&["x", "y", "z"]);
        assert_eq!(word_accuracy(&r, &h).unwrap(), 0.0);
    }

    #[test]
    fn accuracy_insertions_not_penalized() {
        let r = s(&["a", "b", "c", "d"]);
        let h = s(&["a", "x", "c", "d", "e"]);
        assert_eq!(word_accuracy(&r, &h).unwrap(), 75.0);
    }

    #[test]
    fn accuracy_empty_reference_is_contract_error() {
        let r: Vec<String> = Vec::new();
        let h = s(&["a"]);
        assert!(matches!(
            word_accuracy(&r, &h).unwrap_err(),
            Error::Contract(_)
        ));
    }

    #[test]
    fn pearson_known_values() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson(&[1.0, 2.0, 3.0], &[-1.0, -2.0, -3.0]).unwrap() + 1.0).abs() < 1e-12);
        assert!((pearson(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn pearson_error_cases() {
        assert!(matches!(
            pearson(&[1.0, 2.0], &[1.0, 2.0]).unwrap_err(),
            Error::Contract(_)
        ));
        assert!(matches!(
            pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0]).unwrap_err(),
            Error::Contract(_)
        ));
        assert!(matches!(
            pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap_err(),
            Error::Undefined(_)
        ));
    }

    #[test]
    fn filter_thresholds() {
        let cohort: Vec<AccuracyRecord> = [15.0, 25.0, 30.0]
            .iter()
            .enumerate()
            .map(|(i, pc)| AccuracyRecord {
                subject_id: format!("s{i}"),
                percent_correct: *pc,
                source: TranscriptSource::Asr1,
            })
            .collect();
        assert_eq!(filter_by_accuracy(&cohort, 0.0).len(), 3);
        assert_eq!(filter_by_accuracy(&cohort, 100.0).len(), 0);
        assert_eq!(filter_by_accuracy(&cohort, 20.0).len(), 2);
        // Strictly greater: a subject exactly at the threshold is dropped.
        assert_eq!(filter_by_accuracy(&cohort, 15.0).len(), 2);
    }

    #[test]
    fn expert_scores_roundtrip() {
        let text = "subject_id,key,value\np1,SKT1,12.5\np1,CERAD1,17.0\np2,SKT1,30.0\n";
        let scores = ExpertScores::parse_csv(text, "mem").unwrap();
        assert_eq!(scores.by_subject["p1"]["SKT1"], 12.5);
        let back = ExpertScores::parse_csv(&scores.to_csv(), "mem").unwrap();
        assert_eq!(scores.by_subject, back.by_subject);
    }

    proptest! {
        #[test]
        fn pearson_invariant_under_positive_affine(
            xs in proptest::collection::vec(-100.0f64..100.0, 3..20),
            scale in 0.01f64..50.0,
            shift in -100.0f64..100.0,
        ) {
            let ys: Vec<f64> = xs.iter().map(|x| x * 1.7 - 3.0).collect();
            if let Ok(r0) = pearson(&xs, &ys) {
                let xs2: Vec<f64> = xs.iter().map(|x| x * scale + shift).collect();
                let r1 = pearson(&xs2, &ys).unwrap();
                prop_assert!((r0 - r1).abs() < 1e-12, "r0 {r0} r1 {r1}");
            }
        }

        #[test]
        fn accuracy_insertion_never_lowers(
            reference in proptest::collection::vec(0u8..5, 1..10),
            hypothesis in proptest::collection::vec(0u8..5, 0..10),
            pos in 0usize..20,
            word in 0u8..5,
        ) {
            let r: Vec<String> = reference.iter().map(|x| x.to_string()).collect();
            let h: Vec<String> = hypothesis.iter().map(|x| x.to_string()).collect();
            let before = word_accuracy(&r, &h).unwrap();
            let mut h2 = h.clone();
            h2.insert(pos % (h.len() + 1), word.to_string());
            let after = word_accuracy(&r, &h2).unwrap();
            prop_assert!(after + 1e-12 >= before, "before {before} after {after}");
        }

        #[test]
        fn accuracy_substitution_strictly_lowers_matched_pair(
            reference in proptest::collection::vec(0u8..5, 2..10),
            pos in 0usize..10,
        ) {
            // Start from a perfectly matched pair and corrupt one word with
            // a token outside the vocabulary.
            let r: Vec<String> = reference.iter().map(|x| x.to_string()).collect();
            let mut h = r.clone();
            let p = pos % h.len();
            h[p] = "qq".to_string();
            let acc = word_accuracy(&r, &h).unwrap();
            let expected = (r.len() - 1) as f64 / r.len() as f64 * 100.0;
            prop_assert!((acc - expected).abs() < 1e-9);
        }
    }
}
