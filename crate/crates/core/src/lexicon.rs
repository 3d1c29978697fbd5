//! Word-list resources consumed by the scorers: target lists with accepted
//! surface alternatives, a German number-word map, an animal-lemma set, a
//! lemma table, a filler stoplist, and letter-name forms.
//!
//! Files are plain UTF-8, one entry per line, tab-separated, so clinicians
//! can edit them without code changes. `#`-prefixed lines are comments.
//! The crate ships a seed set (embedded at compile time) which
//! [`LexiconSet::builtin`] exposes; [`load_lexicons`] reads the same layout
//! from a directory, and every file is optional there — missing files load
//! as empty structures with a warning, and scorers that need a missing list
//! fail at the point of use.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// The five parallel forms of the object-naming material.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SktForm {
    A,
    B,
    C,
    D,
    E,
}

impl SktForm {
    pub const ALL: [SktForm; 5] = [SktForm::A, SktForm::B, SktForm::C, SktForm::D, SktForm::E];

    pub fn as_str(&self) -> &'static str {
        match self {
            SktForm::A => "A",
            SktForm::B => "B",
            SktForm::C => "C",
            SktForm::D => "D",
            SktForm::E => "E",
        }
    }
}

impl fmt::Display for SktForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SktForm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SktForm::ALL
            .iter()
            .copied()
            .find(|f| f.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Contract(format!("unknown form {s:?}, expected A-E")))
    }
}

/// Case-fold, strip punctuation, and trim/collapse whitespace. Umlauts are
/// preserved; transliterated variants belong in the accepted-surface lists.
/// Idempotent.
pub fn normalize(surface: &str) -> String {
    let mut out = String::with_capacity(surface.len());
    let mut pending_space = false;
    for c in surface.chars() {
        if c.is_alphanumeric() {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.extend(c.to_lowercase());
        } else if c.is_whitespace() {
            pending_space = true;
        }
    }
    out
}

/// Surface-to-lemma table. Lookups normalize first; unknown surfaces map to
/// themselves.
#[derive(Debug, Clone, Default)]
pub struct LemmaTable {
    map: HashMap<String, String>,
}

impl LemmaTable {
    pub fn lemma_of(&self, surface: &str) -> String {
        let n = normalize(surface);
        self.map.get(&n).cloned().unwrap_or(n)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.map.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    fn from_rows(rows: &[(usize, Vec<String>)], file: &str) -> Result<Self> {
        let mut map = HashMap::new();
        for (line, fields) in rows {
            if fields.len() != 2 {
                return Err(Error::parse(
                    file,
                    *line,
                    "expected exactly two tab-separated fields (surface, lemma)",
                ));
            }
            let surface = normalize(&fields[0]);
            let lemma = normalize(&fields[1]);
            if surface.is_empty() || lemma.is_empty() {
                return Err(Error::parse(file, *line, "empty surface or lemma"));
            }
            map.insert(surface, lemma);
        }
        // Lemma-closure: a lemma that is itself a key must map to itself,
        // otherwise lemma_of would not be a fixed point on its own output.
        for (surface, lemma) in &map {
            if let Some(next) = map.get(lemma) {
                if next != lemma {
                    return Err(Error::Structural(format!(
                        "{file}: lemma {lemma:?} (of {surface:?}) maps further to {next:?}; table must be lemma-closed"
                    )));
                }
            }
        }
        Ok(LemmaTable { map })
    }
}

/// One target word with its accepted surface forms. The accepted set holds
/// normalized forms and is closed under the lemma table at load time.
#[derive(Debug, Clone)]
pub struct TargetItem {
    pub canonical: String,
    pub accepted: BTreeSet<String>,
}

impl TargetItem {
    pub fn new(canonical: &str, alternates: &[&str], lemmas: &LemmaTable) -> Self {
        let canonical = normalize(canonical);
        let mut accepted = BTreeSet::new();
        for s in std::iter::once(canonical.as_str()).chain(alternates.iter().copied()) {
            let n = normalize(s);
            accepted.insert(lemmas.lemma_of(&n));
            accepted.insert(n);
        }
        TargetItem {
            canonical,
            accepted,
        }
    }

    pub fn accepts(&self, normalized_lemma: &str) -> bool {
        self.accepted.contains(normalized_lemma)
    }
}

/// An ordered target word list for one subtest.
#[derive(Debug, Clone)]
pub struct TargetList {
    pub name: String,
    pub items: Vec<TargetItem>,
}

impl TargetList {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// First item (in list order) accepting the given normalized/lemma form.
    pub fn find_accepting(&self, key: &str) -> Option<&TargetItem> {
        self.items.iter().find(|item| item.accepts(key))
    }

    pub fn from_rows(
        name: &str,
        rows: &[(usize, Vec<String>)],
        lemmas: &LemmaTable,
        file: &str,
    ) -> Result<Self> {
        let mut items: Vec<TargetItem> = Vec::new();
        let mut seen = BTreeSet::new();
        for (line, fields) in rows {
            let canonical = normalize(&fields[0]);
            if canonical.is_empty() {
                return Err(Error::parse(file, *line, "empty canonical form"));
            }
            if !seen.insert(canonical.clone()) {
                return Err(Error::Structural(format!(
                    "{file} line {line}: duplicate canonical {canonical:?}"
                )));
            }
            let alts: Vec<&str> = fields[1..].iter().map(|s| s.as_str()).collect();
            items.push(TargetItem::new(&canonical, &alts, lemmas));
        }
        Ok(TargetList {
            name: name.to_string(),
            items,
        })
    }
}

/// Animal membership, queried by lemma only.
#[derive(Debug, Clone, Default)]
pub struct AnimalLexicon {
    lemmas: HashSet<String>,
}

impl AnimalLexicon {
    pub fn contains_lemma(&self, lemma: &str) -> bool {
        self.lemmas.contains(lemma)
    }

    pub fn len(&self) -> usize {
        self.lemmas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lemmas.is_empty()
    }

    pub fn lemmas(&self) -> impl Iterator<Item = &str> {
        self.lemmas.iter().map(|s| s.as_str())
    }
}

/// Bidirectional map between German number words and the integers 10-99.
/// Two-digit digit strings are always accepted.
#[derive(Debug, Clone, Default)]
pub struct NumberMap {
    word_to_value: HashMap<String, u8>,
    value_to_words: BTreeMap<u8, Vec<String>>,
}

impl NumberMap {
    /// Parse a surface as a two-digit number: a known number word or a
    /// two-digit digit string.
    pub fn parse(&self, surface: &str) -> Option<u8> {
        let n = normalize(surface);
        if n.len() == 2 && n.bytes().all(|b| b.is_ascii_digit()) {
            let v: u8 = n.parse().ok()?;
            if (10..=99).contains(&v) {
                return Some(v);
            }
        }
        self.word_to_value.get(&n).copied()
    }

    /// The canonical word form for a value, if the map covers it.
    pub fn word_for(&self, value: u8) -> Option<&str> {
        self.value_to_words
            .get(&value)
            .and_then(|ws| ws.first())
            .map(|s| s.as_str())
    }

    pub fn is_empty(&self) -> bool {
        self.word_to_value.is_empty()
    }

    pub fn word_forms(&self) -> impl Iterator<Item = (&str, u8)> {
        self.word_to_value.iter().map(|(w, v)| (w.as_str(), *v))
    }

    fn from_rows(rows: &[(usize, Vec<String>)], file: &str) -> Result<Self> {
        let mut word_to_value = HashMap::new();
        let mut value_to_words: BTreeMap<u8, Vec<String>> = BTreeMap::new();
        for (line, fields) in rows {
            if fields.len() < 2 {
                return Err(Error::parse(
                    file,
                    *line,
                    "expected value followed by at least one word form",
                ));
            }
            let value: u8 = fields[0].trim().parse().map_err(|_| {
                Error::parse(file, *line, format!("bad number value {:?}", fields[0]))
            })?;
            if !(10..=99).contains(&value) {
                return Err(Error::parse(file, *line, "number values must be 10-99"));
            }
            for word in &fields[1..] {
                let w = normalize(word);
                if let Some(prev) = word_to_value.insert(w.clone(), value) {
                    if prev != value {
                        return Err(Error::Structural(format!(
                            "{file} line {line}: word {w:?} maps to both {prev} and {value}"
                        )));
                    }
                }
                value_to_words.entry(value).or_default().push(w);
            }
        }
        if !word_to_value.is_empty() {
            for v in 10..=99u8 {
                if !value_to_words.contains_key(&v) {
                    return Err(Error::Structural(format!(
                        "{file}: no word form for {v}; the map must cover 10-99"
                    )));
                }
            }
        }
        Ok(NumberMap {
            word_to_value,
            value_to_words,
        })
    }
}

/// Filler and function words excluded from intrusion/confabulation candidacy.
#[derive(Debug, Clone, Default)]
pub struct Stoplist {
    words: HashSet<String>,
}

impl Stoplist {
    pub fn contains(&self, normalized: &str) -> bool {
        self.words.contains(normalized)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(|s| s.as_str())
    }
}

/// Spoken letter-name forms ("be" or "berta" for b).
#[derive(Debug, Clone, Default)]
pub struct LetterNames {
    map: HashMap<String, char>,
}

impl LetterNames {
    /// Resolve a normalized surface to a letter: a single-letter surface is
    /// itself, otherwise the letter-name table decides.
    pub fn resolve(&self, normalized: &str) -> Option<char> {
        let mut chars = normalized.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) if c.is_alphabetic() => Some(c),
            _ => self.map.get(normalized).copied(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    fn from_rows(rows: &[(usize, Vec<String>)], file: &str) -> Result<Self> {
        let mut map = HashMap::new();
        for (line, fields) in rows {
            if fields.len() != 2 {
                return Err(Error::parse(
                    file,
                    *line,
                    "expected two fields (name, letter)",
                ));
            }
            let name = normalize(&fields[0]);
            let letter = normalize(&fields[1]);
            let mut chars = letter.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => {
                    map.insert(name, c);
                }
                _ => {
                    return Err(Error::parse(
                        file,
                        *line,
                        format!("letter field must be a single character, got {letter:?}"),
                    ))
                }
            }
        }
        Ok(LetterNames { map })
    }
}

/// Everything the scorers read: immutable after load, shareable across
/// threads without synchronization.
#[derive(Debug, Clone)]
pub struct LexiconSet {
    pub skt_objects: BTreeMap<SktForm, TargetList>,
    pub skt_letters: BTreeMap<SktForm, [char; 2]>,
    pub bnt: TargetList,
    pub cerad_words: TargetList,
    pub cerad_distractors: TargetList,
    pub animals: AnimalLexicon,
    pub numbers: NumberMap,
    pub lemmas: LemmaTable,
    pub stoplist: Stoplist,
    pub letter_names: LetterNames,
    /// Notes about optional files that were missing or empty at load time.
    pub warnings: Vec<String>,
}

impl LexiconSet {
    pub fn lemma_of(&self, surface: &str) -> String {
        self.lemmas.lemma_of(surface)
    }

    pub fn objects_for(&self, form: SktForm) -> Result<&TargetList> {
        self.skt_objects
            .get(&form)
            .filter(|l| !l.is_empty())
            .ok_or_else(|| Error::Config(format!("no object list loaded for form {form}")))
    }

    pub fn letters_for(&self, form: SktForm) -> Result<[char; 2]> {
        self.skt_letters
            .get(&form)
            .copied()
            .ok_or_else(|| Error::Config(format!("no letter pair loaded for form {form}")))
    }

    /// The seed lexicon set embedded in the crate.
    pub fn builtin() -> LexiconSet {
        let mut src = SourceSet::default();
        src.insert("skt_objects_A.tsv", include_str!("../data/lexicon/skt_objects_A.tsv"));
        src.insert("skt_objects_B.tsv", include_str!("../data/lexicon/skt_objects_B.tsv"));
        src.insert("skt_objects_C.tsv", include_str!("../data/lexicon/skt_objects_C.tsv"));
        src.insert("skt_objects_D.tsv", include_str!("../data/lexicon/skt_objects_D.tsv"));
        src.insert("skt_objects_E.tsv", include_str!("../data/lexicon/skt_objects_E.tsv"));
        src.insert("skt_letters.tsv", include_str!("../data/lexicon/skt_letters.tsv"));
        src.insert("bnt_items.tsv", include_str!("../data/lexicon/bnt_items.tsv"));
        src.insert("cerad_wordlist.tsv", include_str!("../data/lexicon/cerad_wordlist.tsv"));
        src.insert(
            "cerad_recognition_distractors.tsv",
            include_str!("../data/lexicon/cerad_recognition_distractors.tsv"),
        );
        src.insert("animals.txt", include_str!("../data/lexicon/animals.txt"));
        src.insert("lemmas.tsv", include_str!("../data/lexicon/lemmas.tsv"));
        src.insert("numbers.tsv", include_str!("../data/lexicon/numbers.tsv"));
        src.insert("stoplist.txt", include_str!("../data/lexicon/stoplist.txt"));
        src.insert("letter_names.tsv", include_str!("../data/lexicon/letter_names.tsv"));
        build_lexicons(&src).expect("embedded lexicon data must be valid")
    }
}

/// Load a lexicon directory. Missing files yield empty structures plus a
/// warning on the returned set; malformed files are errors naming file and
/// line.
pub fn load_lexicons(dir: impl AsRef<Path>) -> Result<LexiconSet> {
    let dir = dir.as_ref();
    if !dir.is_dir() {
        return Err(Error::Config(format!(
            "lexicon directory {} does not exist",
            dir.display()
        )));
    }
    let mut src = SourceSet::default();
    for name in FILE_NAMES {
        let path = dir.join(name);
        if path.is_file() {
            src.insert(name, fs::read_to_string(&path)?);
        }
    }
    build_lexicons(&src)
}

const FILE_NAMES: [&str; 14] = [
    "skt_objects_A.tsv",
    "skt_objects_B.tsv",
    "skt_objects_C.tsv",
    "skt_objects_D.tsv",
    "skt_objects_E.tsv",
    "skt_letters.tsv",
    "bnt_items.tsv",
    "cerad_wordlist.tsv",
    "cerad_recognition_distractors.tsv",
    "animals.txt",
    "lemmas.tsv",
    "numbers.tsv",
    "stoplist.txt",
    "letter_names.tsv",
];

#[derive(Default)]
struct SourceSet {
    files: BTreeMap<&'static str, String>,
}

impl SourceSet {
    fn insert(&mut self, name: &'static str, text: impl Into<String>) {
        self.files.insert(name, text.into());
    }

    /// Tab-separated rows of a file, with 1-based line numbers; comments and
    /// blank lines skipped. `None` when the file was not provided.
    fn rows(&self, name: &str) -> Option<Vec<(usize, Vec<String>)>> {
        self.files.get(name).map(|text| {
            text.lines()
                .enumerate()
                .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
                .map(|(i, l)| {
                    (
                        i + 1,
                        l.split('\t')
                            .map(|f| f.trim().to_string())
                            .filter(|f| !f.is_empty())
                            .collect(),
                    )
                })
                .collect()
        })
    }
}

fn build_lexicons(src: &SourceSet) -> Result<LexiconSet> {
    let mut warnings = Vec::new();
    let mut warn_if_empty = |name: &str, rows: &Option<Vec<(usize, Vec<String>)>>| match rows {
        None => warnings.push(format!("{name}: file missing, loaded empty")),
        Some(r) if r.is_empty() => warnings.push(format!("{name}: file empty")),
        _ => {}
    };

    let lemma_rows = src.rows("lemmas.tsv");
    warn_if_empty("lemmas.tsv", &lemma_rows);
    let lemmas = LemmaTable::from_rows(&lemma_rows.unwrap_or_default(), "lemmas.tsv")?;

    let mut skt_objects = BTreeMap::new();
    for form in SktForm::ALL {
        let name = format!("skt_objects_{form}.tsv");
        let rows = src.rows(&name);
        warn_if_empty(&name, &rows);
        let list = TargetList::from_rows(
            &format!("skt_objects_{form}"),
            &rows.unwrap_or_default(),
            &lemmas,
            &name,
        )?;
        skt_objects.insert(form, list);
    }

    let mut skt_letters = BTreeMap::new();
    let letter_rows = src.rows("skt_letters.tsv");
    warn_if_empty("skt_letters.tsv", &letter_rows);
    for (line, fields) in letter_rows.unwrap_or_default() {
        if fields.len() != 3 {
            return Err(Error::parse(
                "skt_letters.tsv",
                line,
                "expected form and two letters",
            ));
        }
        let form: SktForm = fields[0].parse()?;
        let mut letters = [' '; 2];
        for (i, f) in fields[1..].iter().enumerate() {
            let n = normalize(f);
            let mut chars = n.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => letters[i] = c,
                _ => {
                    return Err(Error::parse(
                        "skt_letters.tsv",
                        line,
                        "letters must be single characters",
                    ))
                }
            }
        }
        skt_letters.insert(form, letters);
    }

    let mut load_list = |file: &'static str, name: &str| -> Result<TargetList> {
        let rows = src.rows(file);
        warn_if_empty(file, &rows);
        TargetList::from_rows(name, &rows.unwrap_or_default(), &lemmas, file)
    };
    let bnt = load_list("bnt_items.tsv", "bnt")?;
    let cerad_words = load_list("cerad_wordlist.tsv", "cerad_wordlist")?;
    let cerad_distractors = load_list(
        "cerad_recognition_distractors.tsv",
        "cerad_recognition_distractors",
    )?;

    let animal_rows = src.rows("animals.txt");
    warn_if_empty("animals.txt", &animal_rows);
    let mut animal_lemmas = HashSet::new();
    for (line, fields) in animal_rows.unwrap_or_default() {
        if fields.is_empty() {
            continue;
        }
        let lemma = lemmas.lemma_of(&fields[0]);
        if lemma.is_empty() {
            return Err(Error::parse("animals.txt", line, "empty animal entry"));
        }
        animal_lemmas.insert(lemma);
    }

    let number_rows = src.rows("numbers.tsv");
    warn_if_empty("numbers.tsv", &number_rows);
    let numbers = NumberMap::from_rows(&number_rows.unwrap_or_default(), "numbers.tsv")?;

    let stop_rows = src.rows("stoplist.txt");
    warn_if_empty("stoplist.txt", &stop_rows);
    let stoplist = Stoplist {
        words: stop_rows
            .unwrap_or_default()
            .into_iter()
            .filter_map(|(_, f)| f.first().map(|w| normalize(w)))
            .filter(|w| !w.is_empty())
            .collect(),
    };

    let name_rows = src.rows("letter_names.tsv");
    warn_if_empty("letter_names.tsv", &name_rows);
    let letter_names = LetterNames::from_rows(&name_rows.unwrap_or_default(), "letter_names.tsv")?;

    Ok(LexiconSet {
        skt_objects,
        skt_letters,
        bnt,
        cerad_words,
        cerad_distractors,
        animals: AnimalLexicon {
            lemmas: animal_lemmas,
        },
        numbers,
        lemmas,
        stoplist,
        letter_names,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_skt_a_has_twelve_items() {
        let lex = LexiconSet::builtin();
        assert_eq!(lex.objects_for(SktForm::A).unwrap().len(), 12);
        for form in SktForm::ALL {
            assert_eq!(lex.objects_for(form).unwrap().len(), 12, "form {form}");
            lex.letters_for(form).unwrap();
        }
        assert_eq!(lex.bnt.len(), 15);
        assert_eq!(lex.cerad_words.len(), 10);
        assert_eq!(lex.cerad_distractors.len(), 10);
        assert!(lex.warnings.is_empty(), "{:?}", lex.warnings);
    }

    #[test]
    fn missing_optional_file_warns_and_loads_empty() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("cerad_wordlist.tsv"), "butter\narm\n").unwrap();
        let lex = load_lexicons(dir.path()).unwrap();
        assert_eq!(lex.cerad_words.len(), 2);
        assert!(lex.stoplist.is_empty());
        assert!(lex
            .warnings
            .iter()
            .any(|w| w.contains("stoplist.txt") && w.contains("missing")));
    }

    #[test]
    fn empty_stoplist_file_warns() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("stoplist.txt"), "").unwrap();
        let lex = load_lexicons(dir.path()).unwrap();
        assert!(lex.stoplist.is_empty());
        assert!(lex
            .warnings
            .iter()
            .any(|w| w.contains("stoplist.txt") && w.contains("empty")));
    }

    #[test]
    fn duplicate_canonical_is_structural_error() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("bnt_items.tsv"), "kamel\nkamel\n").unwrap();
        let err = load_lexicons(dir.path()).unwrap_err();
        assert!(matches!(err, Error::Structural(_)), "got {err:?}");
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize("Kamel,"), "kamel");
        assert_eq!(normalize("DREIUNDZWANZIG"), "dreiundzwanzig");
        assert_eq!(normalize(""), "");
        assert_eq!(normalize("  Grün-Zeug!  "), "grünzeug");
        assert_eq!(normalize("a  b"), "a b");
    }

    #[test]
    fn lemma_examples() {
        let lex = LexiconSet::builtin();
        assert_eq!(lex.lemma_of("hunde"), "hund");
        assert_eq!(lex.lemma_of("hund"), "hund");
        assert_eq!(lex.lemma_of("xyzzy"), "xyzzy");
        assert_eq!(lex.lemma_of("Hunde,"), "hund");
    }

    #[test]
    fn lemma_table_is_closed() {
        let lex = LexiconSet::builtin();
        for (_, lemma) in lex.lemmas.entries() {
            assert_eq!(lex.lemma_of(lemma), lemma, "lemma {lemma:?} not a fixed point");
        }
    }

    #[test]
    fn parse_number_examples() {
        let lex = LexiconSet::builtin();
        assert_eq!(lex.numbers.parse("dreiundzwanzig"), Some(23));
        assert_eq!(lex.numbers.parse("23"), Some(23));
        assert_eq!(lex.numbers.parse("hund"), None);
        assert_eq!(lex.numbers.parse("7"), None);
        assert_eq!(lex.numbers.parse("07"), None);
        assert_eq!(lex.numbers.parse("100"), None);
        assert_eq!(lex.numbers.parse("dreißig"), Some(30));
        assert_eq!(lex.numbers.parse("dreissig"), Some(30));
    }

    #[test]
    fn incomplete_number_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("numbers.tsv"), "23\tdreiundzwanzig\n").unwrap();
        let err = load_lexicons(dir.path()).unwrap_err();
        assert!(matches!(err, Error::Structural(_)), "got {err:?}");
    }

    #[test]
    fn letter_name_resolution() {
        let lex = LexiconSet::builtin();
        assert_eq!(lex.letter_names.resolve("be"), Some('b'));
        assert_eq!(lex.letter_names.resolve("berta"), Some('b'));
        assert_eq!(lex.letter_names.resolve("a"), Some('a'));
        assert_eq!(lex.letter_names.resolve("und"), None);
    }

    #[test]
    fn target_alternates_are_accepted() {
        let lex = LexiconSet::builtin();
        let item = lex.bnt.find_accepting("dromedar").unwrap();
        assert_eq!(item.canonical, "kamel");
    }
}
