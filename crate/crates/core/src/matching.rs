//! Token-stream matching: target-list lookup through ranked word
//! alternatives, timestamped number and letter extraction, and the weighted
//! edit distance used for repeat/spell items.

use crate::error::{Error, Result};
use crate::lexicon::{normalize, LemmaTable, LetterNames, NumberMap, TargetList};
use crate::transcript::{Segment, TimedToken, WordAlt};

/// How many recognition alternatives matching may consult.
///
/// One policy applies uniformly to object, number, and letter matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankPolicy {
    use_alternatives: bool,
    max_rank: u32,
}

impl RankPolicy {
    /// Consult only the 1-best surface.
    pub fn one_best() -> Self {
        RankPolicy {
            use_alternatives: false,
            max_rank: 1,
        }
    }

    /// Consult alternatives up to `max_rank` (>= 1).
    pub fn with_alternatives(max_rank: u32) -> Self {
        RankPolicy {
            use_alternatives: true,
            max_rank: max_rank.max(1),
        }
    }

    pub fn effective_max_rank(&self) -> u32 {
        if self.use_alternatives {
            self.max_rank
        } else {
            1
        }
    }

    /// The alternatives of a token this policy consults, rank ascending.
    pub fn consult<'t>(&self, token: &'t TimedToken) -> impl Iterator<Item = &'t WordAlt> {
        let max = self.effective_max_rank();
        token.alternatives.iter().filter(move |a| a.rank <= max)
    }
}

/// One recognized target mention with its evidence.
#[derive(Debug, Clone, PartialEq)]
pub struct Match {
    pub target_canonical: String,
    /// Index into the segment's (filtered) token list.
    pub token_index: usize,
    pub matched_surface: String,
    pub matched_rank: u32,
    pub start_s: f64,
    pub end_s: f64,
}

/// The outcome of scanning a segment against a target list. Each target
/// appears at most once in `matches`; repeat mentions land in `duplicates`;
/// `unmatched_tokens` indexes tokens that matched nothing (stoplist filtering
/// is the caller's concern).
#[derive(Debug, Clone, Default)]
pub struct MatchList {
    pub matches: Vec<Match>,
    pub duplicates: Vec<Match>,
    pub unmatched_tokens: Vec<usize>,
}

/// Scan a segment's tokens in time order against a target list.
///
/// A token matches when any consulted alternative, after normalization and
/// lemma lookup, is in a target's accepted set. The lowest-ranked matching
/// alternative wins within a token (ties broken by target list order); the
/// first mention of a target wins overall, later mentions become duplicates.
pub fn match_targets(
    segment: &Segment<'_>,
    targets: &TargetList,
    lemmas: &LemmaTable,
    policy: RankPolicy,
) -> Result<MatchList> {
    if targets.is_empty() {
        return Err(Error::Contract(format!(
            "target list {:?} is empty",
            targets.name
        )));
    }
    let mut out = MatchList::default();
    let mut matched: Vec<bool> = vec![false; targets.len()];
    for (idx, token) in segment.tokens.iter().enumerate() {
        let mut hit: Option<(usize, &WordAlt)> = None;
        'alts: for alt in policy.consult(token) {
            let key = lemmas.lemma_of(&alt.surface);
            for (tidx, item) in targets.items.iter().enumerate() {
                if item.accepts(&key) {
                    hit = Some((tidx, alt));
                    break 'alts;
                }
            }
        }
        match hit {
            Some((tidx, alt)) => {
                let m = Match {
                    target_canonical: targets.items[tidx].canonical.clone(),
                    token_index: idx,
                    matched_surface: alt.surface.clone(),
                    matched_rank: alt.rank,
                    start_s: token.start_s,
                    end_s: token.end_s,
                };
                if matched[tidx] {
                    out.duplicates.push(m);
                } else {
                    matched[tidx] = true;
                    out.matches.push(m);
                }
            }
            None => out.unmatched_tokens.push(idx),
        }
    }
    Ok(out)
}

/// A two-digit number heard in the segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumberHit {
    pub value: u8,
    pub token_index: usize,
    pub start_s: f64,
    pub end_s: f64,
}

/// Extract two-digit numbers in time order, repeats allowed. The same rank
/// policy as target matching applies; the lowest-ranked parseable
/// alternative of each token wins.
pub fn find_numbers(
    segment: &Segment<'_>,
    numbers: &NumberMap,
    policy: RankPolicy,
) -> Vec<NumberHit> {
    let mut hits = Vec::new();
    for (idx, token) in segment.tokens.iter().enumerate() {
        for alt in policy.consult(token) {
            if let Some(value) = numbers.parse(&alt.surface) {
                hits.push(NumberHit {
                    value,
                    token_index: idx,
                    start_s: token.start_s,
                    end_s: token.end_s,
                });
                break;
            }
        }
    }
    hits
}

/// A letter of the task alphabet heard in the segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LetterHit {
    pub letter: char,
    pub token_index: usize,
    pub start_s: f64,
    pub end_s: f64,
}

/// Extract alphabet letters in time order. A token counts when a consulted
/// alternative normalizes to a single letter of the alphabet or to a
/// configured letter-name form ("be" for b).
pub fn find_letters(
    segment: &Segment<'_>,
    alphabet: &[char],
    letter_names: &LetterNames,
    policy: RankPolicy,
) -> Result<Vec<LetterHit>> {
    if alphabet.is_empty() {
        return Err(Error::Contract("letter alphabet is empty".into()));
    }
    let mut hits = Vec::new();
    for (idx, token) in segment.tokens.iter().enumerate() {
        for alt in policy.consult(token) {
            let n = normalize(&alt.surface);
            if let Some(letter) = letter_names.resolve(&n) {
                if alphabet.contains(&letter) {
                    hits.push(LetterHit {
                        letter,
                        token_index: idx,
                        start_s: token.start_s,
                        end_s: token.end_s,
                    });
                    break;
                }
            }
        }
    }
    Ok(hits)
}

/// Alignment costs for the weighted edit distance. Omitting a reference
/// symbol costs `omission`, a substitution costs `substitution`, and an
/// extra hypothesis symbol costs `extra_token` (zero by default: fillers and
/// letter-name elaborations are spoken material absent from the reference).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EditCosts {
    substitution: f64,
    omission: f64,
    extra_token: f64,
}

impl Default for EditCosts {
    fn default() -> Self {
        EditCosts {
            substitution: 1.0,
            omission: 1.0,
            extra_token: 0.0,
        }
    }
}

impl EditCosts {
    pub fn new(substitution: f64, omission: f64, extra_token: f64) -> Result<Self> {
        for (name, v) in [
            ("substitution", substitution),
            ("omission", omission),
            ("extra_token", extra_token),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Contract(format!(
                    "{name} cost must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(EditCosts {
            substitution,
            omission,
            extra_token,
        })
    }

    pub fn substitution(&self) -> f64 {
        self.substitution
    }

    pub fn omission(&self) -> f64 {
        self.omission
    }

    pub fn extra_token(&self) -> f64 {
        self.extra_token
    }

    /// Same substitution/omission weights with free extra tokens.
    pub fn with_free_extras(&self) -> Self {
        EditCosts {
            extra_token: 0.0,
            ..*self
        }
    }
}

/// Minimal total cost of aligning `reference` to `hypothesis` under the
/// given costs, by standard dynamic programming.
pub fn weighted_levenshtein<S: PartialEq>(
    reference: &[S],
    hypothesis: &[S],
    costs: &EditCosts,
) -> f64 {
    let m = hypothesis.len();
    let mut prev: Vec<f64> = (0..=m).map(|j| j as f64 * costs.extra_token).collect();
    let mut cur = vec![0.0f64; m + 1];
    for i in 1..=reference.len() {
        cur[0] = i as f64 * costs.omission;
        for j in 1..=m {
            let sub = prev[j - 1]
                + if reference[i - 1] == hypothesis[j - 1] {
                    0.0
                } else {
                    costs.substitution
                };
            let omit = prev[j] + costs.omission;
            let extra = cur[j - 1] + costs.extra_token;
            cur[j] = sub.min(omit).min(extra);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::LexiconSet;
    use crate::transcript::{Speaker, SubtestId, TimedToken};
    use proptest::prelude::*;

    fn tokens(surfaces: &[&str]) -> Vec<TimedToken> {
        surfaces
            .iter()
            .enumerate()
            .map(|(i, s)| TimedToken::one_best(*s, i as f64, i as f64 + 0.4, Speaker::Patient))
            .collect()
    }

    fn segment<'a>(toks: &'a [TimedToken]) -> Segment<'a> {
        Segment::from_parts(SubtestId::Cerad1, 0.0, 100.0, toks.iter().collect())
    }

    fn word_list(words: &[&str]) -> TargetList {
        let lemmas = LemmaTable::default();
        TargetList {
            name: "test".into(),
            items: words
                .iter()
                .map(|w| crate::lexicon::TargetItem::new(w, &[], &lemmas))
                .collect(),
        }
    }

    #[test]
    fn dedupes_repeat_mentions() {
        let toks = tokens(&["hund", "katze", "hund"]);
        let seg = segment(&toks);
        let targets = word_list(&["hund", "katze", "maus"]);
        let ml = match_targets(&seg, &targets, &LemmaTable::default(), RankPolicy::one_best())
            .unwrap();
        assert_eq!(ml.matches.len(), 2);
        assert_eq!(ml.matches[0].target_canonical, "hund");
        assert_eq!(ml.matches[0].start_s, 0.0);
        assert_eq!(ml.matches[1].target_canonical, "katze");
        assert_eq!(ml.duplicates.len(), 1);
        assert_eq!(ml.duplicates[0].start_s, 2.0);
        assert!(ml.unmatched_tokens.is_empty());
    }

    #[test]
    fn alternatives_match_at_their_rank() {
        let mut token = TimedToken::one_best("kamm", 0.0, 0.4, Speaker::Patient);
        token.alternatives.push(WordAlt {
            surface: "kamel".into(),
            rank: 3,
        });
        let toks = vec![token];
        let seg = Segment::from_parts(SubtestId::Cerad2, 0.0, 10.0, toks.iter().collect());
        let targets = word_list(&["kamel"]);
        let lemmas = LemmaTable::default();

        let with = match_targets(&seg, &targets, &lemmas, RankPolicy::with_alternatives(5))
            .unwrap();
        assert_eq!(with.matches.len(), 1);
        assert_eq!(with.matches[0].matched_rank, 3);
        assert_eq!(with.matches[0].matched_surface, "kamel");

        let without =
            match_targets(&seg, &targets, &lemmas, RankPolicy::one_best()).unwrap();
        assert!(without.matches.is_empty());
        assert_eq!(without.unmatched_tokens, vec![0]);
    }

    #[test]
    fn all_twelve_objects_match_without_duplicates() {
        let lex = LexiconSet::builtin();
        let list = lex.objects_for(crate::lexicon::SktForm::A).unwrap();
        let surfaces: Vec<String> = list.items.iter().map(|i| i.canonical.clone()).collect();
        let refs: Vec<&str> = surfaces.iter().map(|s| s.as_str()).collect();
        let toks = tokens(&refs);
        let seg = segment(&toks);
        let ml = match_targets(&seg, list, &lex.lemmas, RankPolicy::one_best()).unwrap();
        assert_eq!(ml.matches.len(), 12);
        assert!(ml.duplicates.is_empty());
    }

    #[test]
    fn empty_target_list_is_contract_error() {
        let toks = tokens(&["hund"]);
        let seg = segment(&toks);
        let targets = word_list(&[]);
        let err = match_targets(&seg, &targets, &LemmaTable::default(), RankPolicy::one_best())
            .unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn number_extraction() {
        let lex = LexiconSet::builtin();
        let toks = tokens(&["dreiundzwanzig", "pause", "47"]);
        let seg = segment(&toks);
        let hits = find_numbers(&seg, &lex.numbers, RankPolicy::one_best());
        assert_eq!(hits.len(), 2);
        assert_eq!((hits[0].value, hits[0].start_s), (23, 0.0));
        assert_eq!((hits[1].value, hits[1].start_s), (47, 2.0));

        assert!(find_numbers(&segment(&tokens(&["kein", "wort"])), &lex.numbers, RankPolicy::one_best()).is_empty());
        assert!(find_numbers(&segment(&tokens(&["7"])), &lex.numbers, RankPolicy::one_best()).is_empty());
    }

    #[test]
    fn letter_extraction() {
        let lex = LexiconSet::builtin();
        let toks = tokens(&["a", "b", "a", "b"]);
        let seg = segment(&toks);
        let hits = find_letters(&seg, &['a', 'b'], &lex.letter_names, RankPolicy::one_best())
            .unwrap();
        assert_eq!(hits.len(), 4);
        assert_eq!(hits[0].letter, 'a');

        let toks = tokens(&["und"]);
        let hits = find_letters(&segment(&toks), &['a', 'b'], &lex.letter_names, RankPolicy::one_best()).unwrap();
        assert!(hits.is_empty());

        let toks = tokens(&["be"]);
        let hits = find_letters(&segment(&toks), &['a', 'b'], &lex.letter_names, RankPolicy::one_best()).unwrap();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].letter, 'b');
    }

    fn sym(s: &str) -> Vec<char> {
        s.chars().collect()
    }

    #[test]
    fn levenshtein_identity_is_zero() {
        let c = EditCosts::default();
        assert_eq!(weighted_levenshtein(&sym("sierp"), &sym("sierp"), &c), 0.0);
    }

    #[test]
    fn levenshtein_filler_tokens_are_free() {
        let reference: Vec<&str> = vec!["s", "i", "e", "r", "p"];
        let hypothesis: Vec<&str> = vec!["s", "wie", "siegfried", "i", "e", "r", "p"];
        let c = EditCosts::default();
        assert_eq!(weighted_levenshtein(&reference, &hypothesis, &c), 0.0);
    }

    #[test]
    fn levenshtein_transposition_costs_one_with_free_extras() {
        let c = EditCosts::default();
        assert_eq!(weighted_levenshtein(&sym("ab"), &sym("ba"), &c), 1.0);
    }

    /// Plain recursive reference, no memoization tricks.
    fn brute_force<S: PartialEq>(r: &[S], h: &[S], c: &EditCosts) -> f64 {
        match (r.is_empty(), h.is_empty()) {
            (true, true) => 0.0,
            (true, false) => h.len() as f64 * c.extra_token(),
            (false, true) => r.len() as f64 * c.omission(),
            (false, false) => {
                let sub = brute_force(&r[1..], &h[1..], c)
                    + if r[0] == h[0] { 0.0 } else { c.substitution() };
                let omit = brute_force(&r[1..], h, c) + c.omission();
                let extra = brute_force(r, &h[1..], c) + c.extra_token();
                sub.min(omit).min(extra)
            }
        }
    }

    proptest! {
        #[test]
        fn matches_brute_force_on_short_sequences(
            r in proptest::collection::vec(0u8..3, 0..5),
            h in proptest::collection::vec(0u8..3, 0..5),
            sub in 0.0f64..3.0,
            omit in 0.0f64..3.0,
            extra in 0.0f64..3.0,
        ) {
            let c = EditCosts::new(sub, omit, extra).unwrap();
            let fast = weighted_levenshtein(&r, &h, &c);
            let slow = brute_force(&r, &h, &c);
            prop_assert!((fast - slow).abs() < 1e-9, "fast {fast} slow {slow}");
        }

        #[test]
        fn empty_hypothesis_costs_all_omissions(r in proptest::collection::vec(0u8..5, 0..8)) {
            let c = EditCosts::default();
            let d = weighted_levenshtein(&r, &[], &c);
            prop_assert_eq!(d, r.len() as f64 * c.omission());
        }

        #[test]
        fn insertion_never_increases_distance_with_free_extras(
            r in proptest::collection::vec(0u8..3, 0..6),
            h in proptest::collection::vec(0u8..3, 0..6),
            pos_seed in 0usize..16,
            inserted in 0u8..3,
        ) {
            let c = EditCosts::default();
            let before = weighted_levenshtein(&r, &h, &c);
            let mut h2 = h.clone();
            h2.insert(pos_seed % (h.len() + 1), inserted);
            let after = weighted_levenshtein(&r, &h2, &c);
            prop_assert!(after <= before + 1e-12, "before {before} after {after}");
        }

        #[test]
        fn enlarging_max_rank_never_loses_matches(
            seed_words in proptest::collection::vec(0usize..6, 1..12),
            alt_words in proptest::collection::vec(0usize..6, 1..12),
            max_rank in 1u32..5,
        ) {
            let vocab = ["hund", "katze", "maus", "pferd", "kuh", "qqx"];
            let lemmas = LemmaTable::default();
            let targets = word_list(&["hund", "katze", "maus"]);
            let toks: Vec<TimedToken> = seed_words
                .iter()
                .zip(alt_words.iter().chain(std::iter::repeat(&0)))
                .enumerate()
                .map(|(i, (w, a))| {
                    let mut t = TimedToken::one_best(
                        vocab[*w],
                        i as f64,
                        i as f64 + 0.4,
                        Speaker::Patient,
                    );
                    t.alternatives.push(WordAlt { surface: vocab[*a].into(), rank: 2 + (i as u32 % 3) });
                    t
                })
                .collect();
            let seg = Segment::from_parts(SubtestId::Cerad1, 0.0, 1000.0, toks.iter().collect());
            let lo = match_targets(&seg, &targets, &lemmas, RankPolicy::with_alternatives(max_rank)).unwrap();
            let hi = match_targets(&seg, &targets, &lemmas, RankPolicy::with_alternatives(max_rank + 1)).unwrap();
            prop_assert!(hi.matches.len() >= lo.matches.len());
        }
    }

    #[test]
    fn disabled_alternatives_equal_rank_one() {
        let mut t = TimedToken::one_best("kamm", 0.0, 0.4, Speaker::Patient);
        t.alternatives.push(WordAlt {
            surface: "kamel".into(),
            rank: 2,
        });
        let toks = vec![t];
        let seg = Segment::from_parts(SubtestId::Cerad2, 0.0, 10.0, toks.iter().collect());
        let targets = word_list(&["kamel", "kamm"]);
        let lemmas = LemmaTable::default();
        let off = match_targets(&seg, &targets, &lemmas, RankPolicy::one_best()).unwrap();
        let rank1 = match_targets(&seg, &targets, &lemmas, RankPolicy::with_alternatives(1)).unwrap();
        assert_eq!(off.matches.len(), rank1.matches.len());
        assert_eq!(off.matches[0].target_canonical, rank1.matches[0].target_canonical);
    }
}
