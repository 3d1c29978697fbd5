//! Whole-session scoring: slice every labeled subtest, run its scorer, and
//! assemble raw scores, norm values, summaries, and the flat key/value map
//! the evaluation harness and report writers consume.

use std::collections::BTreeMap;

use crate::cerad::{
    self, cerad_total, score_bnt, score_fluency, score_mmse, score_recognition,
    score_word_list_learning, score_word_list_recall, CeradTotal, FluencyResult, LearningResult,
    MmseInventory, MmseResult, RecallResult, RecognitionResult, TotalRecipe, WordListMetrics,
    ZModel,
};
use crate::error::{Error, Result};
use crate::lexicon::{LexiconSet, SktForm};
use crate::matching::{EditCosts, MatchList, RankPolicy};
use crate::skt::{
    raw_to_norm, score_skt1, score_skt3, score_skt6, score_skt7, score_skt_memory, skt_summary,
    SktConfig, SktNormTable, SktRaw, SktSubtest, SktSummary,
};
use crate::transcript::{slice_segment, slice_segment_part, Session, Speaker, SubtestId};

/// Score keys used in flat score maps, expert-score files, and report rows.
pub mod keys {
    pub const SKT_ATTENTION: &str = "skt_attention";
    pub const SKT_MEMORY: &str = "skt_memory";
    pub const SKT_TOTAL: &str = "skt_total";
    pub const CERAD_SAVINGS: &str = "cerad_savings";
    pub const CERAD_TOTAL: &str = "cerad_total";
    pub const INVERTED_D: &str = "CERAD7_inv";

    /// Keys whose scores are counts of matched words or points derived from
    /// them (as opposed to stopwatch durations or structured answers).
    pub const COUNT_BASED: [&str; 8] = [
        "SKT2", "SKT8", "SKT9", "CERAD1", "CERAD2", "CERAD3", "CERAD4", "CERAD6",
    ];
}

/// Everything needed to score sessions. Immutable; share freely across
/// threads.
#[derive(Debug, Clone)]
pub struct ScoringContext {
    pub lexicons: LexiconSet,
    pub norm_table: SktNormTable,
    pub mmse_items: MmseInventory,
    pub recipe: TotalRecipe,
    pub z_model: Option<ZModel>,
    pub options: ScoringOptions,
}

#[derive(Debug, Clone)]
pub struct ScoringOptions {
    pub policy: RankPolicy,
    /// Which speaker's tokens the scorers see. Patient-only by default.
    pub speaker_filter: Option<Speaker>,
    pub form: SktForm,
    pub skt: SktConfig,
    pub edit_costs: EditCosts,
    /// Also report 100 - D for the recognition task.
    pub report_inverted_discriminability: bool,
}

impl Default for ScoringOptions {
    fn default() -> Self {
        ScoringOptions {
            policy: RankPolicy::one_best(),
            speaker_filter: Some(Speaker::Patient),
            form: SktForm::A,
            skt: SktConfig::default(),
            edit_costs: EditCosts::default(),
            report_inverted_discriminability: false,
        }
    }
}

impl ScoringContext {
    /// Context built entirely from the embedded seed data. The norm table is
    /// the synthetic example; clinical work must load real tables.
    pub fn builtin(options: ScoringOptions) -> Self {
        ScoringContext {
            lexicons: LexiconSet::builtin(),
            norm_table: SktNormTable::builtin_synthetic(),
            mmse_items: MmseInventory::builtin(),
            recipe: TotalRecipe::builtin(),
            z_model: None,
            options,
        }
    }

    pub fn with_policy(&self, policy: RankPolicy) -> Self {
        let mut ctx = self.clone();
        ctx.options.policy = policy;
        ctx
    }
}

/// Scores and evidence for the second battery.
#[derive(Debug, Clone, Default)]
pub struct CeradReport {
    pub fluency: Option<FluencyResult>,
    pub bnt: Option<(u32, MatchList)>,
    pub mmse: Option<MmseResult>,
    pub learning: Option<LearningResult>,
    pub recall: Option<RecallResult>,
    pub recognition: Option<RecognitionResult>,
    pub total: Option<CeradTotal>,
    pub z_values: BTreeMap<String, f64>,
}

impl CeradReport {
    /// The combined word-list view, available once learning, recall, and
    /// recognition all scored.
    pub fn word_list_metrics(&self) -> Option<WordListMetrics> {
        let learning = self.learning.as_ref()?;
        let recall = self.recall.as_ref()?;
        let recog = self.recognition.as_ref()?;
        Some(WordListMetrics {
            pass_scores: learning.pass_scores,
            learning_total: learning.learning_total,
            recall_score: recall.recall_score,
            savings_pct: recall.savings_pct,
            intrusions_total: learning.pass_intrusions.iter().sum::<u32>()
                + recall.intrusion_count,
            hits: recog.hits,
            correct_rejections: recog.correct_rejections,
            discriminability_pct: recog.discriminability_pct,
        })
    }
}

/// The full outcome of scoring one session.
#[derive(Debug, Clone)]
pub struct SessionReport {
    pub subject_id: String,
    pub skt_raw: BTreeMap<SubtestId, SktRaw>,
    pub skt_norms: BTreeMap<SktSubtest, u8>,
    pub skt_summary: SktSummary,
    pub cerad: CeradReport,
    /// Subtests that produced no score, with the reason.
    pub unscored: Vec<(SubtestId, String)>,
    /// Non-fatal issues worth surfacing (norm-table gaps, total not
    /// computable).
    pub warnings: Vec<String>,
}

impl SessionReport {
    /// Flat key -> value map: raw subtest scores plus summary scores.
    /// Summary keys appear only when every contributing subtest scored.
    pub fn values(&self) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        for (id, raw) in &self.skt_raw {
            out.insert(id.to_string(), raw.value);
        }
        let complete = |ids: &[SubtestId]| ids.iter().all(|id| self.skt_raw.contains_key(id));
        let speech_norms_present = |ids: &[SubtestId]| {
            ids.iter().all(|id| {
                SktSubtest::from_subtest_id(*id)
                    .map(|s| self.skt_norms.contains_key(&s))
                    .unwrap_or(false)
            })
        };
        let attention = [SubtestId::Skt1, SubtestId::Skt3, SubtestId::Skt6, SubtestId::Skt7];
        let memory = [SubtestId::Skt2, SubtestId::Skt8, SubtestId::Skt9];
        if complete(&attention) && speech_norms_present(&attention) {
            out.insert(keys::SKT_ATTENTION.into(), self.skt_summary.attention_score as f64);
        }
        if complete(&memory) && speech_norms_present(&memory) {
            out.insert(keys::SKT_MEMORY.into(), self.skt_summary.memory_score as f64);
        }
        if out.contains_key(keys::SKT_ATTENTION) && out.contains_key(keys::SKT_MEMORY) {
            out.insert(keys::SKT_TOTAL.into(), self.skt_summary.total_score as f64);
        }
        if let Some(f) = &self.cerad.fluency {
            out.insert(SubtestId::Cerad1.to_string(), f.count as f64);
        }
        if let Some((score, _)) = &self.cerad.bnt {
            out.insert(SubtestId::Cerad2.to_string(), *score as f64);
        }
        if let Some(m) = &self.cerad.mmse {
            out.insert(SubtestId::Cerad3.to_string(), m.scaled_score);
        }
        if let Some(l) = &self.cerad.learning {
            out.insert(SubtestId::Cerad4.to_string(), l.learning_total as f64);
        }
        if let Some(r) = &self.cerad.recall {
            out.insert(SubtestId::Cerad6.to_string(), r.recall_score as f64);
            if let Some(s) = r.savings_pct {
                out.insert(keys::CERAD_SAVINGS.into(), s);
            }
        }
        if let Some(r) = &self.cerad.recognition {
            out.insert(SubtestId::Cerad7.to_string(), r.discriminability_pct);
        }
        if let Some(t) = &self.cerad.total {
            out.insert(keys::CERAD_TOTAL.into(), t.total);
        }
        for (k, v) in &self.cerad.z_values {
            out.insert(format!("z_{k}"), *v);
        }
        out
    }
}

/// Score every labeled subtest of a session. Missing spans and insufficient
/// evidence become `unscored` entries; real configuration or data errors
/// propagate.
pub fn score_session(session: &Session, ctx: &ScoringContext) -> Result<SessionReport> {
    let opts = &ctx.options;
    let lex = &ctx.lexicons;
    let filter = opts.speaker_filter;
    let mut report = SessionReport {
        subject_id: session.subject_id.clone(),
        skt_raw: BTreeMap::new(),
        skt_norms: BTreeMap::new(),
        skt_summary: skt_summary(&BTreeMap::new()),
        cerad: CeradReport::default(),
        unscored: Vec::new(),
        warnings: Vec::new(),
    };

    // First battery.
    let objects = lex.objects_for(opts.form)?;
    let letters = lex.letters_for(opts.form)?;
    for subtest in [
        SubtestId::Skt1,
        SubtestId::Skt2,
        SubtestId::Skt3,
        SubtestId::Skt6,
        SubtestId::Skt7,
        SubtestId::Skt8,
        SubtestId::Skt9,
    ] {
        let outcome = slice_segment(session, subtest, filter).and_then(|seg| match subtest {
            SubtestId::Skt1 => score_skt1(&seg, objects, &lex.lemmas, opts.policy, &opts.skt),
            SubtestId::Skt2 | SubtestId::Skt8 | SubtestId::Skt9 => {
                score_skt_memory(&seg, objects, &lex.lemmas, &lex.stoplist, opts.policy)
            }
            SubtestId::Skt3 => score_skt3(&seg, &lex.numbers, opts.policy, &opts.skt),
            SubtestId::Skt6 => score_skt6(&seg, &lex.numbers, opts.policy, &opts.skt),
            SubtestId::Skt7 => {
                score_skt7(&seg, &letters, &lex.letter_names, opts.policy, &opts.skt)
            }
            _ => unreachable!(),
        });
        match outcome {
            Ok(raw) => {
                report.skt_raw.insert(subtest, raw);
            }
            Err(e) if e.is_unscored_outcome() => {
                report.unscored.push((subtest, e.to_string()));
            }
            Err(e) => return Err(e),
        }
    }
    for (id, raw) in &report.skt_raw {
        let subtest = SktSubtest::from_subtest_id(*id).expect("speech subtest");
        match raw_to_norm(raw, &session.metadata, &ctx.norm_table) {
            Ok(norm) => {
                report.skt_norms.insert(subtest, norm);
            }
            Err(e) => report
                .warnings
                .push(format!("{id}: raw scored but no norm value: {e}")),
        }
    }
    report.skt_summary = skt_summary(&report.skt_norms);

    // Second battery.
    match slice_segment(session, SubtestId::Cerad1, filter) {
        Ok(seg) => {
            report.cerad.fluency = Some(score_fluency(
                &seg,
                &lex.animals,
                &lex.lemmas,
                &lex.stoplist,
                opts.policy,
            ));
        }
        Err(e) if e.is_unscored_outcome() => report.unscored.push((SubtestId::Cerad1, e.to_string())),
        Err(e) => return Err(e),
    }
    match slice_segment(session, SubtestId::Cerad2, filter) {
        Ok(seg) => {
            report.cerad.bnt = Some(score_bnt(&seg, &lex.bnt, &lex.lemmas, opts.policy)?);
        }
        Err(e) if e.is_unscored_outcome() => report.unscored.push((SubtestId::Cerad2, e.to_string())),
        Err(e) => return Err(e),
    }
    match slice_segment(session, SubtestId::Cerad3, filter) {
        Ok(seg) => {
            report.cerad.mmse = Some(score_mmse(
                &seg,
                &ctx.mmse_items,
                &opts.edit_costs,
                &lex.lemmas,
                &lex.letter_names,
                opts.policy,
            )?);
        }
        Err(e) if e.is_unscored_outcome() => report.unscored.push((SubtestId::Cerad3, e.to_string())),
        Err(e) => return Err(e),
    }

    let learning_parts = session.parts(SubtestId::Cerad4);
    if learning_parts.is_empty() {
        report.unscored.push((
            SubtestId::Cerad4,
            Error::SpanNotPresent {
                subtest: SubtestId::Cerad4,
            }
            .to_string(),
        ));
    } else if learning_parts != [1, 2, 3] {
        report.unscored.push((
            SubtestId::Cerad4,
            format!("expected learning pass parts 1-3, found {learning_parts:?}"),
        ));
    } else {
        let segs: Vec<_> = learning_parts
            .iter()
            .map(|p| slice_segment_part(session, SubtestId::Cerad4, *p, filter))
            .collect::<Result<_>>()?;
        report.cerad.learning = Some(score_word_list_learning(
            &segs,
            &lex.cerad_words,
            &lex.lemmas,
            &lex.stoplist,
            opts.policy,
        )?);
    }

    match slice_segment(session, SubtestId::Cerad6, filter) {
        Ok(seg) => match &report.cerad.learning {
            Some(learning) => {
                report.cerad.recall = Some(score_word_list_recall(
                    &seg,
                    &lex.cerad_words,
                    &lex.lemmas,
                    &lex.stoplist,
                    opts.policy,
                    learning.pass_scores[2],
                )?);
            }
            None => report.unscored.push((
                SubtestId::Cerad6,
                "recall needs the learning passes for the savings denominator".into(),
            )),
        },
        Err(e) if e.is_unscored_outcome() => report.unscored.push((SubtestId::Cerad6, e.to_string())),
        Err(e) => return Err(e),
    }

    if session.recognition_responses.is_empty() {
        report.unscored.push((
            SubtestId::Cerad7,
            "no structured recognition responses in session".into(),
        ));
    } else {
        report.cerad.recognition = Some(score_recognition(
            &session.recognition_responses,
            &lex.cerad_words,
            &lex.cerad_distractors,
            &lex.lemmas,
        )?);
    }

    let score_values: BTreeMap<String, f64> = {
        // Total and z-values read from the flat map built so far.
        report.cerad.total = None;
        report.values()
    };
    match cerad_total(&score_values, &ctx.recipe) {
        Ok(total) => report.cerad.total = Some(total),
        Err(Error::Contract(msg)) => report
            .warnings
            .push(format!("composite total not computed: {msg}")),
        Err(e) => return Err(e),
    }
    if let Some(model) = &ctx.z_model {
        for (key, value) in &score_values {
            if let Some(z) = cerad::cerad_z(key, *value, &session.metadata, model) {
                report.cerad.z_values.insert(key.clone(), z);
            }
        }
    }
    Ok(report)
}
