//! Scoring for the neuropsychological battery: animal fluency, confrontation
//! naming, the embedded 30-point screen, word-list learning/recall with
//! savings, recognition discriminability, the configurable composite total,
//! and pluggable z-value normalization.

use serde::Deserialize;
use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::lexicon::{
    normalize, AnimalLexicon, LemmaTable, LetterNames, Stoplist, TargetItem, TargetList,
};
use crate::matching::{match_targets, weighted_levenshtein, EditCosts, MatchList, RankPolicy};
use crate::transcript::{RecognitionResponse, Segment, Sex, SubjectMetadata};

/// Combined word-list measures across learning, delayed recall, and
/// recognition.
///
/// `savings_pct` is recall / third-pass score x 100, undefined (None) when
/// the third pass scored zero. `discriminability_pct` is
/// ((10 - hits) + (10 - correct rejections)) / 20 x 100 exactly as the
/// published formula states it, which makes it an error percentage: 0 is a
/// perfect result.
#[derive(Debug, Clone, PartialEq)]
pub struct WordListMetrics {
    pub pass_scores: [u32; 3],
    pub learning_total: u32,
    pub recall_score: u32,
    pub savings_pct: Option<f64>,
    pub intrusions_total: u32,
    pub hits: u32,
    pub correct_rejections: u32,
    pub discriminability_pct: f64,
}

/// savings = recall / pass3 x 100; undefined when pass3 is zero (never
/// reported as 0).
pub fn savings_pct(recall_score: u32, pass3_score: u32) -> Option<f64> {
    (pass3_score > 0).then(|| recall_score as f64 / pass3_score as f64 * 100.0)
}

/// D = ((10 - hits) + (10 - correct rejections)) / 20 x 100, verbatim from
/// the published recognition formula. Inputs are counts out of 10.
pub fn discriminability_pct(hits: u32, correct_rejections: u32) -> f64 {
    assert!(
        hits <= 10 && correct_rejections <= 10,
        "recognition counts are out of 10"
    );
    ((10 - hits) as f64 + (10 - correct_rejections) as f64) / 20.0 * 100.0
}

// ── Verbal fluency ───────────────────────────────────────────────────────────

#[derive(Debug, Clone)]
pub struct FluencyResult {
    pub count: u32,
    /// Distinct animal lemmas in first-mention order.
    pub lemmas: Vec<String>,
}

/// Count distinct animals named in the segment. Every consulted alternative
/// is lemmatized independently; the lowest-ranked alternative that is an
/// animal lemma wins for its token, and duplicates collapse by lemma.
pub fn score_fluency(
    segment: &Segment<'_>,
    animals: &AnimalLexicon,
    lemmas: &LemmaTable,
    stoplist: &Stoplist,
    policy: RankPolicy,
) -> FluencyResult {
    let mut seen = BTreeSet::new();
    let mut ordered = Vec::new();
    for token in &segment.tokens {
        if stoplist.contains(&normalize(token.rank1())) {
            continue;
        }
        for alt in policy.consult(token) {
            let lemma = lemmas.lemma_of(&alt.surface);
            if animals.contains_lemma(&lemma) {
                if seen.insert(lemma.clone()) {
                    ordered.push(lemma);
                }
                break;
            }
        }
    }
    FluencyResult {
        count: ordered.len() as u32,
        lemmas: ordered,
    }
}

// ── Confrontation naming ─────────────────────────────────────────────────────

/// Count correctly named drawing items (hand-picked alternatives live in the
/// target list). Returns the score with its match evidence.
pub fn score_bnt(
    segment: &Segment<'_>,
    targets: &TargetList,
    lemmas: &LemmaTable,
    policy: RankPolicy,
) -> Result<(u32, MatchList)> {
    let ml = match_targets(segment, targets, lemmas, policy)?;
    Ok((ml.matches.len() as u32, ml))
}

// ── Embedded 30-point screen ─────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmseItemKind {
    /// Score by counting matched target words, capped at the item points.
    WordCount,
    /// Full points when the spoken sequence reaches the reference within
    /// tolerance under the weighted edit distance (extra tokens free).
    Repeat,
    /// Like `Repeat`, but symbols are letters and spoken letter names are
    /// resolved first.
    SpellBackward,
}

/// One scorable item of the screen. `targets` are the expected words (or
/// letters for spelling), each entry optionally `|`-separated alternates.
#[derive(Debug, Clone)]
pub struct MmseItem {
    pub id: String,
    pub kind: MmseItemKind,
    pub points: u32,
    pub tolerance: f64,
    pub targets: Vec<Vec<String>>,
}

#[derive(Debug, Clone)]
pub struct MmseInventory {
    pub items: Vec<MmseItem>,
}

impl MmseInventory {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn builtin() -> Self {
        Self::parse(include_str!("../data/lexicon/mmse_items.tsv"), "builtin")
            .expect("embedded item inventory must be valid")
    }

    pub fn parse(text: &str, name: &str) -> Result<Self> {
        let mut items = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            if fields.len() < 5 {
                return Err(Error::parse(
                    name,
                    line_no,
                    "expected id, kind, points, tolerance, targets...",
                ));
            }
            let kind = match fields[1] {
                "word_count" => MmseItemKind::WordCount,
                "repeat" => MmseItemKind::Repeat,
                "spell_backward" => MmseItemKind::SpellBackward,
                other => {
                    return Err(Error::parse(
                        name,
                        line_no,
                        format!("unknown item kind {other:?}"),
                    ))
                }
            };
            let points: u32 = fields[2]
                .parse()
                .map_err(|_| Error::parse(name, line_no, "bad points value"))?;
            let tolerance: f64 = fields[3]
                .parse()
                .map_err(|_| Error::parse(name, line_no, "bad tolerance value"))?;
            if tolerance < 0.0 {
                return Err(Error::parse(name, line_no, "tolerance must be >= 0"));
            }
            let targets: Vec<Vec<String>> = fields[4..]
                .iter()
                .filter(|f| !f.is_empty())
                .map(|f| f.split('|').map(normalize).collect())
                .collect();
            if targets.is_empty() {
                return Err(Error::parse(name, line_no, "item has no targets"));
            }
            items.push(MmseItem {
                id: fields[0].to_string(),
                kind,
                points,
                tolerance,
                targets,
            });
        }
        Ok(MmseInventory { items })
    }

    pub fn scorable_max(&self) -> u32 {
        self.items.iter().map(|i| i.points).sum()
    }
}

#[derive(Debug, Clone)]
pub struct MmseItemOutcome {
    pub id: String,
    pub points_earned: u32,
    pub points_possible: u32,
    pub detail: String,
}

/// Result of the screen, scaled to the instrument's 30-point range over the
/// scorable items.
#[derive(Debug, Clone)]
pub struct MmseResult {
    pub scorable_points: u32,
    pub scorable_max: u32,
    pub scaled_score: f64,
    pub items: Vec<MmseItemOutcome>,
}

/// scaled = points x 30 / max, rounded half up to one decimal.
pub fn scale_mmse(scorable_points: u32, scorable_max: u32) -> f64 {
    let raw = scorable_points as f64 * 30.0 / scorable_max as f64;
    (raw * 10.0).round() / 10.0
}

/// Score the screen's items against the whole task segment.
///
/// Word-count items match anywhere in the segment; repeat and
/// spell-backwards items earn their points when the weighted edit distance
/// from the reference to the spoken sequence (extra tokens free) stays
/// within the item tolerance.
pub fn score_mmse(
    segment: &Segment<'_>,
    inventory: &MmseInventory,
    costs: &EditCosts,
    lemmas: &LemmaTable,
    letter_names: &LetterNames,
    policy: RankPolicy,
) -> Result<MmseResult> {
    if inventory.items.is_empty() {
        return Err(Error::Config("item inventory is empty".into()));
    }
    let scorable_max = inventory.scorable_max();
    if scorable_max == 0 {
        return Err(Error::Config("item inventory has zero total points".into()));
    }
    let costs = costs.with_free_extras();
    let mut outcomes = Vec::new();
    let mut total = 0u32;
    for item in &inventory.items {
        let outcome = match item.kind {
            MmseItemKind::WordCount => score_word_count_item(segment, item, lemmas, policy)?,
            MmseItemKind::Repeat => {
                score_sequence_item(segment, item, &costs, letter_names, policy, false)
            }
            MmseItemKind::SpellBackward => {
                score_sequence_item(segment, item, &costs, letter_names, policy, true)
            }
        };
        total += outcome.points_earned;
        outcomes.push(outcome);
    }
    Ok(MmseResult {
        scorable_points: total,
        scorable_max,
        scaled_score: scale_mmse(total, scorable_max),
        items: outcomes,
    })
}

fn score_word_count_item(
    segment: &Segment<'_>,
    item: &MmseItem,
    lemmas: &LemmaTable,
    policy: RankPolicy,
) -> Result<MmseItemOutcome> {
    let list = TargetList {
        name: item.id.clone(),
        items: item
            .targets
            .iter()
            .map(|alts| {
                let refs: Vec<&str> = alts[1..].iter().map(|s| s.as_str()).collect();
                TargetItem::new(&alts[0], &refs, lemmas)
            })
            .collect(),
    };
    let ml = match_targets(segment, &list, lemmas, policy)?;
    let earned = (ml.matches.len() as u32).min(item.points);
    Ok(MmseItemOutcome {
        id: item.id.clone(),
        points_earned: earned,
        points_possible: item.points,
        detail: format!("{} of {} words matched", ml.matches.len(), list.len()),
    })
}

/// Map a token to the symbol the edit distance sees: the lowest-ranked
/// consulted alternative whose (letter-resolved) normalized form is in the
/// reference symbol set, or the rank-1 form when none is.
fn token_symbol(
    token: &crate::transcript::TimedToken,
    ref_set: &BTreeSet<String>,
    letter_names: &LetterNames,
    policy: RankPolicy,
    letters: bool,
) -> String {
    let map = |surface: &str| -> String {
        let n = normalize(surface);
        if letters {
            if let Some(c) = letter_names.resolve(&n) {
                return c.to_string();
            }
        }
        n
    };
    for alt in policy.consult(token) {
        let sym = map(&alt.surface);
        if ref_set.contains(&sym) {
            return sym;
        }
    }
    map(token.rank1())
}

fn score_sequence_item(
    segment: &Segment<'_>,
    item: &MmseItem,
    costs: &EditCosts,
    letter_names: &LetterNames,
    policy: RankPolicy,
    letters: bool,
) -> MmseItemOutcome {
    let reference: Vec<String> = item.targets.iter().map(|alts| alts[0].clone()).collect();
    let ref_set: BTreeSet<String> = item.targets.iter().flatten().cloned().collect();
    let hypothesis: Vec<String> = segment
        .tokens
        .iter()
        .map(|t| token_symbol(t, &ref_set, letter_names, policy, letters))
        .collect();
    let distance = weighted_levenshtein(&reference, &hypothesis, costs);
    let pass = distance <= item.tolerance + 1e-12;
    MmseItemOutcome {
        id: item.id.clone(),
        points_earned: if pass { item.points } else { 0 },
        points_possible: item.points,
        detail: format!(
            "edit distance {distance:.1} (tolerance {:.1})",
            item.tolerance
        ),
    }
}

// ── Word list learning / recall / recognition ────────────────────────────────

#[derive(Debug, Clone)]
pub struct LearningResult {
    pub pass_scores: [u32; 3],
    pub learning_total: u32,
    pub pass_intrusions: [u32; 3],
    /// Distinct intrusion forms per pass, flattened in pass order.
    pub intrusions: Vec<String>,
}

/// Score the three learning passes: per pass the number of recalled words,
/// plus distinct intrusions (content words outside the list).
pub fn score_word_list_learning(
    segments: &[Segment<'_>],
    targets: &TargetList,
    lemmas: &LemmaTable,
    stoplist: &Stoplist,
    policy: RankPolicy,
) -> Result<LearningResult> {
    if segments.len() != 3 {
        return Err(Error::Contract(format!(
            "word-list learning needs exactly 3 pass segments, got {}",
            segments.len()
        )));
    }
    let mut pass_scores = [0u32; 3];
    let mut pass_intrusions = [0u32; 3];
    let mut intrusions = Vec::new();
    for (i, segment) in segments.iter().enumerate() {
        let ml = match_targets(segment, targets, lemmas, policy)?;
        pass_scores[i] = ml.matches.len() as u32;
        let forms = distinct_intrusions(segment, &ml, stoplist);
        pass_intrusions[i] = forms.len() as u32;
        intrusions.extend(forms);
    }
    Ok(LearningResult {
        pass_scores,
        learning_total: pass_scores.iter().sum(),
        pass_intrusions,
        intrusions,
    })
}

fn distinct_intrusions(segment: &Segment<'_>, ml: &MatchList, stoplist: &Stoplist) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for &idx in &ml.unmatched_tokens {
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

#[derive(Debug, Clone)]
pub struct RecallResult {
    pub recall_score: u32,
    pub savings_pct: Option<f64>,
    pub intrusion_count: u32,
    pub intrusions: Vec<String>,
}

/// Score delayed recall and derive savings relative to the third learning
/// pass.
pub fn score_word_list_recall(
    segment: &Segment<'_>,
    targets: &TargetList,
    lemmas: &LemmaTable,
    stoplist: &Stoplist,
    policy: RankPolicy,
    pass3_score: u32,
) -> Result<RecallResult> {
    let ml = match_targets(segment, targets, lemmas, policy)?;
    let recall_score = ml.matches.len() as u32;
    let intrusions = distinct_intrusions(segment, &ml, stoplist);
    Ok(RecallResult {
        recall_score,
        savings_pct: savings_pct(recall_score, pass3_score),
        intrusion_count: intrusions.len() as u32,
        intrusions,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecognitionResult {
    pub hits: u32,
    pub correct_rejections: u32,
    pub discriminability_pct: f64,
}

impl RecognitionResult {
    pub fn inverted_discriminability_pct(&self) -> f64 {
        100.0 - self.discriminability_pct
    }
}

/// Score structured yes/no recognition answers over the 20-word set (10
/// list words, 10 distractors). Every word of both lists must be answered
/// exactly once.
pub fn score_recognition(
    responses: &[RecognitionResponse],
    targets: &TargetList,
    distractors: &TargetList,
    lemmas: &LemmaTable,
) -> Result<RecognitionResult> {
    if targets.len() != 10 || distractors.len() != 10 {
        return Err(Error::Contract(format!(
            "recognition needs 10 list words and 10 distractors, got {} and {}",
            targets.len(),
            distractors.len()
        )));
    }
    let mut target_answers: BTreeMap<String, bool> = BTreeMap::new();
    let mut distractor_answers: BTreeMap<String, bool> = BTreeMap::new();
    for r in responses {
        let key = lemmas.lemma_of(&r.word);
        let slot = if let Some(item) = targets.find_accepting(&key) {
            target_answers.entry(item.canonical.clone())
        } else if let Some(item) = distractors.find_accepting(&key) {
            distractor_answers.entry(item.canonical.clone())
        } else {
            return Err(Error::Contract(format!(
                "response word {:?} is neither a list word nor a distractor",
                r.word
            )));
        };
        match slot {
            std::collections::btree_map::Entry::Occupied(_) => {
                return Err(Error::Contract(format!(
                    "duplicate response for word {:?}",
                    r.word
                )))
            }
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(r.answer_yes);
            }
        }
    }
    if target_answers.len() != 10 || distractor_answers.len() != 10 {
        return Err(Error::Contract(format!(
            "responses must cover all 20 words; got {} list words and {} distractors",
            target_answers.len(),
            distractor_answers.len()
        )));
    }
    let hits = target_answers.values().filter(|yes| **yes).count() as u32;
    let correct_rejections = distractor_answers.values().filter(|yes| !**yes).count() as u32;
    Ok(RecognitionResult {
        hits,
        correct_rejections,
        discriminability_pct: discriminability_pct(hits, correct_rejections),
    })
}

// ── Composite total ──────────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComponentTransform {
    Identity,
    /// cap x (1 - D/100): converts the error-oriented discriminability
    /// percentage into points.
    DiscriminabilityToPoints,
}

#[derive(Debug, Clone)]
pub struct RecipeComponent {
    pub id: String,
    pub source: String,
    pub cap: f64,
    pub transform: ComponentTransform,
}

/// Composite-total recipe: capped component sum rescaled to `full_max` over
/// the caps of the included components.
#[derive(Debug, Clone)]
pub struct TotalRecipe {
    pub full_max: f64,
    pub rescale_on_missing: bool,
    pub components: Vec<RecipeComponent>,
}

#[derive(Debug, Deserialize)]
struct RecipeFile {
    full_max: f64,
    #[serde(default)]
    rescale_on_missing: bool,
    #[serde(default)]
    component: Vec<RecipeComponentFile>,
}

#[derive(Debug, Deserialize)]
struct RecipeComponentFile {
    id: String,
    source: String,
    cap: f64,
    #[serde(default)]
    transform: Option<String>,
}

impl TotalRecipe {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn builtin() -> Self {
        Self::parse(include_str!("../data/chandler_recipe.toml"), "builtin")
            .expect("embedded recipe must be valid")
    }

    pub fn parse(text: &str, name: &str) -> Result<Self> {
        let file: RecipeFile =
            toml::from_str(text).map_err(|e| Error::Config(format!("{name}: {e}")))?;
        if !(file.full_max > 0.0) {
            return Err(Error::Config(format!("{name}: full_max must be > 0")));
        }
        if file.component.is_empty() {
            return Err(Error::Config(format!("{name}: recipe has no components")));
        }
        let mut components = Vec::new();
        for c in file.component {
            if !(c.cap > 0.0) {
                return Err(Error::Config(format!(
                    "{name}: component {} must have cap > 0",
                    c.id
                )));
            }
            let transform = match c.transform.as_deref() {
                None | Some("identity") => ComponentTransform::Identity,
                Some("discriminability_to_points") => ComponentTransform::DiscriminabilityToPoints,
                Some(other) => {
                    return Err(Error::Config(format!(
                        "{name}: unknown transform {other:?} on component {}",
                        c.id
                    )))
                }
            };
            components.push(RecipeComponent {
                id: c.id,
                source: c.source,
                cap: c.cap,
                transform,
            });
        }
        Ok(TotalRecipe {
            full_max: file.full_max,
            rescale_on_missing: file.rescale_on_missing,
            components,
        })
    }
}

/// A computed composite total with the applied recipe echoed back.
#[derive(Debug, Clone)]
pub struct CeradTotal {
    pub total: f64,
    pub contributions: Vec<(String, f64)>,
    pub included_max: f64,
    pub full_max: f64,
    pub missing_components: Vec<String>,
}

/// Combine per-subtest scores into the composite total. A missing component
/// score is a contract error unless the recipe permits rescaling over the
/// present components.
pub fn cerad_total(scores: &BTreeMap<String, f64>, recipe: &TotalRecipe) -> Result<CeradTotal> {
    let mut contributions = Vec::new();
    let mut missing = Vec::new();
    let mut included_max = 0.0;
    let mut sum = 0.0;
    for c in &recipe.components {
        match scores.get(&c.source) {
            Some(&value) => {
                let transformed = match c.transform {
                    ComponentTransform::Identity => value,
                    ComponentTransform::DiscriminabilityToPoints => c.cap * (1.0 - value / 100.0),
                };
                let capped = transformed.clamp(0.0, c.cap);
                contributions.push((c.id.clone(), capped));
                included_max += c.cap;
                sum += capped;
            }
            None => missing.push(c.id.clone()),
        }
    }
    if !missing.is_empty() && !recipe.rescale_on_missing {
        return Err(Error::Contract(format!(
            "scores missing for recipe component(s) {} and the recipe does not permit rescaling",
            missing.join(", ")
        )));
    }
    if included_max == 0.0 {
        return Err(Error::Contract(
            "no recipe component could be scored".into(),
        ));
    }
    Ok(CeradTotal {
        total: sum * recipe.full_max / included_max,
        contributions,
        included_max,
        full_max: recipe.full_max,
        missing_components: missing,
    })
}

// ── z-values ─────────────────────────────────────────────────────────────────

/// Linear normalization model for one score key:
/// z = (raw - (b0 + b_age*age + b_edu*education + b_sex*sex)) / sd,
/// with sex coded female = 1, male = 0.
#[derive(Debug, Clone, Copy, Deserialize)]
pub struct ZModelEntry {
    pub b0: f64,
    pub b_age: f64,
    pub b_edu: f64,
    pub b_sex: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ZModel {
    entries: BTreeMap<String, ZModelEntry>,
}

#[derive(Debug, Deserialize)]
struct ZModelFile {
    #[serde(default)]
    entry: Vec<ZModelEntryFile>,
}

#[derive(Debug, Deserialize)]
struct ZModelEntryFile {
    key: String,
    #[serde(flatten)]
    entry: ZModelEntry,
}

impl ZModel {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, name: &str) -> Result<Self> {
        let file: ZModelFile =
            toml::from_str(text).map_err(|e| Error::Config(format!("{name}: {e}")))?;
        let mut entries = BTreeMap::new();
        for e in file.entry {
            if !(e.entry.sd > 0.0) {
                return Err(Error::Config(format!(
                    "{name}: sd for {} must be > 0",
                    e.key
                )));
            }
            entries.insert(e.key, e.entry);
        }
        Ok(ZModel { entries })
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|k| k.as_str())
    }

    pub fn entry(&self, key: &str) -> Option<&ZModelEntry> {
        self.entries.get(key)
    }
}

/// z-value for a raw score under the model entry for its key. Returns None
/// (omitted, never defaulted) when the model has no entry.
pub fn cerad_z(key: &str, raw: f64, meta: &SubjectMetadata, model: &ZModel) -> Option<f64> {
    let e = model.entry(key)?;
    let sex = match meta.sex {
        Sex::Female => 1.0,
        Sex::Male => 0.0,
    };
    let predicted =
        e.b0 + e.b_age * meta.age as f64 + e.b_edu * meta.education_years as f64 + e.b_sex * sex;
    Some((raw - predicted) / e.sd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::LexiconSet;
    use crate::transcript::{IqBand, Speaker, SubtestId, TimedToken, WordAlt};
    use proptest::prelude::*;

    fn lex() -> &'static LexiconSet {
        use std::sync::OnceLock;
        static LEX: OnceLock<LexiconSet> = OnceLock::new();
        LEX.get_or_init(LexiconSet::builtin)
    }

    fn toks(surfaces: &[&str]) -> Vec<TimedToken> {
        surfaces
            .iter()
            .enumerate()
            .map(|(i, s)| TimedToken::one_best(*s, i as f64, i as f64 + 0.4, Speaker::Patient))
            .collect()
    }

    fn seg<'a>(subtest: SubtestId, tokens: &'a [TimedToken]) -> Segment<'a> {
        Segment::from_parts(subtest, 0.0, 1000.0, tokens.iter().collect())
    }

    #[test]
    fn fluency_dedupes_animals() {
        let tokens = toks(&["hund", "katze", "maus", "hund"]);
        let s = seg(SubtestId::Cerad1, &tokens);
        let r = score_fluency(
            &s,
            &lex().animals,
            &lex().lemmas,
            &lex().stoplist,
            RankPolicy::one_best(),
        );
        assert_eq!(r.count, 3);
    }

    #[test]
    fn fluency_dedupes_by_lemma() {
        let tokens = toks(&["hunde", "hund"]);
        let s = seg(SubtestId::Cerad1, &tokens);
        let r = score_fluency(
            &s,
            &lex().animals,
            &lex().lemmas,
            &lex().stoplist,
            RankPolicy::one_best(),
        );
        assert_eq!(r.count, 1);
        assert_eq!(r.lemmas, vec!["hund".to_string()]);
    }

    #[test]
    fn fluency_recovers_animal_from_alternatives() {
        let mut t = TimedToken::one_best("hunt", 0.0, 0.4, Speaker::Patient);
        t.alternatives.push(WordAlt {
            surface: "hund".into(),
            rank: 2,
        });
        let tokens = vec![t];
        let s = seg(SubtestId::Cerad1, &tokens);
        let with = score_fluency(
            &s,
            &lex().animals,
            &lex().lemmas,
            &lex().stoplist,
            RankPolicy::with_alternatives(5),
        );
        assert_eq!(with.count, 1);
        let without = score_fluency(
            &s,
            &lex().animals,
            &lex().lemmas,
            &lex().stoplist,
            RankPolicy::one_best(),
        );
        assert_eq!(without.count, 0);
    }

    #[test]
    fn fluency_empty_segment_scores_zero() {
        let tokens: Vec<TimedToken> = Vec::new();
        let s = seg(SubtestId::Cerad1, &tokens);
        let r = score_fluency(
            &s,
            &lex().animals,
            &lex().lemmas,
            &lex().stoplist,
            RankPolicy::one_best(),
        );
        assert_eq!(r.count, 0);
    }

    #[test]
    fn bnt_counts_and_accepts_alternates() {
        let names: Vec<String> = lex().bnt.items.iter().map(|i| i.canonical.clone()).collect();
        let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        let tokens = toks(&refs);
        let s = seg(SubtestId::Cerad2, &tokens);
        let (score, _) = score_bnt(&s, &lex().bnt, &lex().lemmas, RankPolicy::one_best()).unwrap();
        assert_eq!(score, 15);

        let tokens = toks(&["dromedar"]);
        let s = seg(SubtestId::Cerad2, &tokens);
        let (score, ml) = score_bnt(&s, &lex().bnt, &lex().lemmas, RankPolicy::one_best()).unwrap();
        assert_eq!(score, 1);
        assert_eq!(ml.matches[0].target_canonical, "kamel");

        let tokens: Vec<TimedToken> = Vec::new();
        let s = seg(SubtestId::Cerad2, &tokens);
        let (score, _) = score_bnt(&s, &lex().bnt, &lex().lemmas, RankPolicy::one_best()).unwrap();
        assert_eq!(score, 0);
    }

    fn mmse_all_correct_tokens() -> Vec<TimedToken> {
        toks(&[
            "zitrone", "schlüssel", "ball", // word_repeat
            "uhr", "bleistift", // naming
            "keine", "wenns", "unds", "oder", "abers", // sentence
            "s", "i", "e", "r", "p", // spelling
        ])
    }

    #[test]
    fn mmse_all_items_correct_scales_to_30() {
        let tokens = mmse_all_correct_tokens();
        let s = seg(SubtestId::Cerad3, &tokens);
        let r = score_mmse(
            &s,
            &MmseInventory::builtin(),
            &EditCosts::default(),
            &lex().lemmas,
            &lex().letter_names,
            RankPolicy::one_best(),
        )
        .unwrap();
        assert_eq!(r.scorable_points, r.scorable_max);
        assert_eq!(r.scaled_score, 30.0);
    }

    #[test]
    fn mmse_spelling_tolerates_fillers_and_letter_names() {
        let tokens = toks(&["s", "wie", "siegfried", "i", "e", "äh", "er", "p"]);
        let s = seg(SubtestId::Cerad3, &tokens);
        let r = score_mmse(
            &s,
            &MmseInventory::builtin(),
            &EditCosts::default(),
            &lex().lemmas,
            &lex().letter_names,
            RankPolicy::one_best(),
        )
        .unwrap();
        let spell = r.items.iter().find(|i| i.id == "spell_backward").unwrap();
        assert_eq!(spell.points_earned, 5, "{}", spell.detail);
    }

    #[test]
    fn mmse_half_points_scale_to_15() {
        let inv = MmseInventory::parse(
            "a\tword_count\t2\t0\tzitrone\tball\nb\tword_count\t2\t0\tuhr\tstift\n",
            "test",
        )
        .unwrap();
        let tokens = toks(&["zitrone", "ball"]);
        let s = seg(SubtestId::Cerad3, &tokens);
        let r = score_mmse(
            &s,
            &inv,
            &EditCosts::default(),
            &lex().lemmas,
            &lex().letter_names,
            RankPolicy::one_best(),
        )
        .unwrap();
        assert_eq!(r.scorable_points, 2);
        assert_eq!(r.scorable_max, 4);
        assert_eq!(r.scaled_score, 15.0);
    }

    #[test]
    fn mmse_empty_inventory_is_config_error() {
        let inv = MmseInventory { items: Vec::new() };
        let tokens = toks(&["zitrone"]);
        let s = seg(SubtestId::Cerad3, &tokens);
        let err = score_mmse(
            &s,
            &inv,
            &EditCosts::default(),
            &lex().lemmas,
            &lex().letter_names,
            RankPolicy::one_best(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn scaled_score_rounds_half_up_to_one_decimal() {
        assert_eq!(scale_mmse(7, 11), 19.1); // 19.0909...
        assert_eq!(scale_mmse(1, 8), 3.8); // 3.75 rounds up
        assert_eq!(scale_mmse(0, 11), 0.0);
    }

    fn learning_segments<'a>(passes: &'a [Vec<TimedToken>; 3]) -> Vec<Segment<'a>> {
        passes
            .iter()
            .map(|p| Segment::from_parts(SubtestId::Cerad4, 0.0, 1000.0, p.iter().collect()))
            .collect()
    }

    fn words(n: usize) -> Vec<&'static str> {
        [
            "butter", "arm", "strand", "brief", "königin", "hütte", "stange", "karte", "gras",
            "motor",
        ][..n]
            .to_vec()
    }

    #[test]
    fn learning_sums_pass_scores() {
        let passes = [toks(&words(4)), toks(&words(6)), toks(&words(8))];
        let segs = learning_segments(&passes);
        let r = score_word_list_learning(
            &segs,
            &lex().cerad_words,
            &lex().lemmas,
            &lex().stoplist,
            RankPolicy::one_best(),
        )
        .unwrap();
        assert_eq!(r.pass_scores, [4, 6, 8]);
        assert_eq!(r.learning_total, 18);
        assert_eq!(r.pass_intrusions, [0, 0, 0]);
    }

    #[test]
    fn learning_counts_intrusions() {
        let mut pass1 = words(3);
        pass1.push("zigarette");
        let passes = [toks(&pass1), toks(&words(3)), toks(&words(3))];
        let segs = learning_segments(&passes);
        let r = score_word_list_learning(
            &segs,
            &lex().cerad_words,
            &lex().lemmas,
            &lex().stoplist,
            RankPolicy::one_best(),
        )
        .unwrap();
        assert_eq!(r.pass_intrusions, [1, 0, 0]);
        assert_eq!(r.intrusions, vec!["zigarette".to_string()]);
    }

    #[test]
    fn learning_perfect_is_thirty() {
        let passes = [toks(&words(10)), toks(&words(10)), toks(&words(10))];
        let segs = learning_segments(&passes);
        let r = score_word_list_learning(
            &segs,
            &lex().cerad_words,
            &lex().lemmas,
            &lex().stoplist,
            RankPolicy::one_best(),
        )
        .unwrap();
        assert_eq!(r.learning_total, 30);
    }

    #[test]
    fn learning_wrong_segment_count_is_contract_error() {
        let passes = [toks(&words(3)), toks(&words(3)), toks(&words(3))];
        let segs = learning_segments(&passes);
        let err = score_word_list_learning(
            &segs[..2],
            &lex().cerad_words,
            &lex().lemmas,
            &lex().stoplist,
            RankPolicy::one_best(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn recall_savings() {
        let tokens = toks(&words(8));
        let s = seg(SubtestId::Cerad6, &tokens);
        let r = score_word_list_recall(
            &s,
            &lex().cerad_words,
            &lex().lemmas,
            &lex().stoplist,
            RankPolicy::one_best(),
            10,
        )
        .unwrap();
        assert_eq!(r.recall_score, 8);
        assert_eq!(r.savings_pct, Some(80.0));

        let tokens = toks(&words(10));
        let s = seg(SubtestId::Cerad6, &tokens);
        let r = score_word_list_recall(
            &s,
            &lex().cerad_words,
            &lex().lemmas,
            &lex().stoplist,
            RankPolicy::one_best(),
            10,
        )
        .unwrap();
        assert_eq!(r.savings_pct, Some(100.0));

        let tokens = toks(&words(6));
        let s = seg(SubtestId::Cerad6, &tokens);
        let r = score_word_list_recall(
            &s,
            &lex().cerad_words,
            &lex().lemmas,
            &lex().stoplist,
            RankPolicy::one_best(),
            0,
        )
        .unwrap();
        assert_eq!(r.recall_score, 6);
        assert_eq!(r.savings_pct, None);
    }

    fn full_responses(yes_targets: usize, no_distractors: usize) -> Vec<RecognitionResponse> {
        let mut out = Vec::new();
        for (i, item) in lex().cerad_words.items.iter().enumerate() {
            out.push(RecognitionResponse {
                word: item.canonical.clone(),
                answer_yes: i < yes_targets,
            });
        }
        for (i, item) in lex().cerad_distractors.items.iter().enumerate() {
            out.push(RecognitionResponse {
                word: item.canonical.clone(),
                answer_yes: i < 10 - no_distractors,
            });
        }
        out
    }

    #[test]
    fn recognition_formula_values() {
        let r = score_recognition(
            &full_responses(10, 10),
            &lex().cerad_words,
            &lex().cerad_distractors,
            &lex().lemmas,
        )
        .unwrap();
        assert_eq!((r.hits, r.correct_rejections), (10, 10));
        assert_eq!(r.discriminability_pct, 0.0);
        assert_eq!(r.inverted_discriminability_pct(), 100.0);

        let r = score_recognition(
            &full_responses(0, 0),
            &lex().cerad_words,
            &lex().cerad_distractors,
            &lex().lemmas,
        )
        .unwrap();
        assert_eq!(r.discriminability_pct, 100.0);

        let r = score_recognition(
            &full_responses(8, 6),
            &lex().cerad_words,
            &lex().cerad_distractors,
            &lex().lemmas,
        )
        .unwrap();
        assert_eq!(r.discriminability_pct, 30.0);
    }

    #[test]
    fn recognition_requires_full_coverage() {
        let mut responses = full_responses(10, 10);
        responses.pop();
        let err = score_recognition(
            &responses,
            &lex().cerad_words,
            &lex().cerad_distractors,
            &lex().lemmas,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Contract(_)));

        let mut responses = full_responses(10, 10);
        responses.push(RecognitionResponse {
            word: "qqfremd".into(),
            answer_yes: false,
        });
        let err = score_recognition(
            &responses,
            &lex().cerad_words,
            &lex().cerad_distractors,
            &lex().lemmas,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    fn scores_at_max() -> BTreeMap<String, f64> {
        let mut m = BTreeMap::new();
        m.insert("CERAD1".into(), 30.0); // above the 24 cap
        m.insert("CERAD2".into(), 15.0);
        m.insert("CERAD4".into(), 30.0);
        m.insert("CERAD6".into(), 10.0);
        m.insert("CERAD7".into(), 0.0); // perfect discriminability
        m
    }

    #[test]
    fn total_rescales_to_full_max() {
        let recipe = TotalRecipe::builtin();
        let t = cerad_total(&scores_at_max(), &recipe).unwrap();
        assert!((t.total - 100.0).abs() < 1e-9, "total {}", t.total);
        assert_eq!(t.included_max, 89.0);
        // Before the rescale the capped sum is full_max * included/full.
        let raw: f64 = t.contributions.iter().map(|(_, v)| v).sum();
        assert!((raw - 89.0).abs() < 1e-9);
        let fluency = t
            .contributions
            .iter()
            .find(|(id, _)| id == "fluency")
            .unwrap();
        assert_eq!(fluency.1, 24.0);
    }

    #[test]
    fn total_all_zeros() {
        let mut scores = scores_at_max();
        for v in scores.values_mut() {
            *v = 0.0;
        }
        scores.insert("CERAD7".into(), 100.0); // worst discriminability
        let t = cerad_total(&scores, &TotalRecipe::builtin()).unwrap();
        assert_eq!(t.total, 0.0);
    }

    #[test]
    fn total_missing_component_without_permission_errors() {
        let mut scores = scores_at_max();
        scores.remove("CERAD6");
        let err = cerad_total(&scores, &TotalRecipe::builtin()).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));

        let mut recipe = TotalRecipe::builtin();
        recipe.rescale_on_missing = true;
        let t = cerad_total(&scores, &recipe).unwrap();
        assert!((t.total - 100.0).abs() < 1e-9);
        assert_eq!(t.missing_components, vec!["recall".to_string()]);
        assert_eq!(t.included_max, 79.0);
    }

    fn meta() -> SubjectMetadata {
        SubjectMetadata::new(70, Sex::Female, IqBand::Avg, 12)
    }

    #[test]
    fn z_values() {
        let model = ZModel::parse(
            "[[entry]]\nkey = \"CERAD1\"\nb0 = 10.0\nb_age = 0.1\nb_edu = 0.0\nb_sex = 1.0\nsd = 4.0\n",
            "test",
        )
        .unwrap();
        // predicted = 10 + 0.1*70 + 0 + 1 = 18
        assert_eq!(cerad_z("CERAD1", 18.0, &meta(), &model), Some(0.0));
        assert_eq!(cerad_z("CERAD1", 22.0, &meta(), &model), Some(1.0));
        assert_eq!(cerad_z("CERAD4", 18.0, &meta(), &model), None);
    }

    #[test]
    fn z_model_zero_sd_is_config_error() {
        let err = ZModel::parse(
            "[[entry]]\nkey = \"CERAD1\"\nb0 = 10.0\nb_age = 0.1\nb_edu = 0.0\nb_sex = 1.0\nsd = 0.0\n",
            "test",
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    proptest! {
        #[test]
        fn savings_matches_recomputation(recall in 0u32..=10, pass3 in 0u32..=10) {
            match savings_pct(recall, pass3) {
                Some(s) => {
                    prop_assert!(pass3 > 0);
                    prop_assert!((s - recall as f64 / pass3 as f64 * 100.0).abs() < 1e-9);
                }
                None => prop_assert_eq!(pass3, 0),
            }
        }

        #[test]
        fn discriminability_is_symmetric_and_affine(h in 0u32..=10, cr in 0u32..=10) {
            let d = discriminability_pct(h, cr);
            prop_assert!((d - discriminability_pct(cr, h)).abs() < 1e-12);
            let affine = (20 - h - cr) as f64 / 20.0 * 100.0;
            prop_assert!((d - affine).abs() < 1e-9);
        }

        #[test]
        fn fluency_invariant_under_duplication_and_fillers(
            animal_picks in proptest::collection::vec(0usize..8, 1..10),
            dup_positions in proptest::collection::vec(0usize..10, 0..5),
            filler_positions in proptest::collection::vec(0usize..12, 0..5),
        ) {
            let pool = ["hund", "katze", "maus", "pferd", "kuh", "esel", "ziege", "gans"];
            let base: Vec<&str> = animal_picks.iter().map(|i| pool[*i]).collect();
            let base_toks = toks(&base);
            let s = seg(SubtestId::Cerad1, &base_toks);
            let base_score = score_fluency(&s, &lex().animals, &lex().lemmas, &lex().stoplist, RankPolicy::one_best()).count;

            let mut mutated: Vec<&str> = base.clone();
            for p in &dup_positions {
                let dup = base[p % base.len()];
                mutated.insert((*p).min(mutated.len()), dup);
            }
            for p in &filler_positions {
                mutated.insert((*p).min(mutated.len()), "äh");
            }
            let mut_toks = toks(&mutated);
            let s2 = seg(SubtestId::Cerad1, &mut_toks);
            let mutated_score = score_fluency(&s2, &lex().animals, &lex().lemmas, &lex().stoplist, RankPolicy::one_best()).count;
            prop_assert_eq!(base_score, mutated_score);
        }

        #[test]
        fn scaled_mmse_tracks_exact_fraction(points in 0u32..=21, max in 1u32..=21) {
            let points = points.min(max);
            let scaled = scale_mmse(points, max);
            let exact = points as f64 * 30.0 / max as f64;
            prop_assert!((scaled - exact).abs() <= 0.05 + 1e-12);
            if points > 0 {
                prop_assert!(scale_mmse(points - 1, max) <= scaled);
            }
        }
    }
}
