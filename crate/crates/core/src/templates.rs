//! Relation-indexed sentence templates: rendering and exact inverse parsing.
//!
//! A bank file holds one template per line as `direction<TAB>pattern`, where
//! the pattern contains `<HEAD>` and `<TAIL>` exactly once each. Lines tagged
//! `question` hold question templates over `<X>` and `<Y>`. Blank lines and
//! lines starting with `#` are ignored.
//!
//! Parsing is exact: a sentence matches a template only if the literal text
//! around the placeholders is identical and each placeholder binds a maximal
//! run of entity characters.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::spatial::{is_entity_char, is_entity_token, Direction, Entity, RelationTriple};

const BUILTIN_SOURCE: &str = include_str!("../data/templates.tsv");
const BUILTIN_VERSION: &str = "builtin-v1";

#[derive(Debug, Error)]
pub enum BankError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("no template for direction `{0}`")]
    EmptyDirection(Direction),
    #[error("no question template")]
    NoQuestions,
    #[error("templates are not injective: {0}")]
    NotInjective(String),
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("no template matches `{0}`")]
    NoMatch(String),
    #[error("{count} templates match `{sentence}`")]
    Ambiguous { sentence: String, count: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    First,
    Second,
}

/// A literal pattern with two entity slots.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Pattern {
    prefix: String,
    middle: String,
    suffix: String,
    /// Which named slot (first or second placeholder name) appears first.
    leading: Slot,
}

impl Pattern {
    fn compile(text: &str, first: &str, second: &str) -> Result<Pattern, String> {
        let find_once = |ph: &str| -> Result<usize, String> {
            let mut hits = text.match_indices(ph);
            let pos = hits.next().map(|(i, _)| i).ok_or_else(|| format!("missing placeholder {ph}"))?;
            if hits.next().is_some() {
                return Err(format!("placeholder {ph} appears more than once"));
            }
            Ok(pos)
        };
        let p1 = find_once(first)?;
        let p2 = find_once(second)?;
        let (leading, (a, alen), (b, blen)) = if p1 < p2 {
            (Slot::First, (p1, first.len()), (p2, second.len()))
        } else {
            (Slot::Second, (p2, second.len()), (p1, first.len()))
        };
        let prefix = &text[..a];
        let middle = &text[a + alen..b];
        let suffix = &text[b + blen..];
        if prefix.ends_with(is_entity_char)
            || middle.is_empty()
            || middle.starts_with(is_entity_char)
            || middle.ends_with(is_entity_char)
            || suffix.starts_with(is_entity_char)
        {
            return Err("placeholders must be separated from word characters".to_string());
        }
        Ok(Pattern {
            prefix: prefix.to_string(),
            middle: middle.to_string(),
            suffix: suffix.to_string(),
            leading,
        })
    }

    fn fill(&self, first: &str, second: &str) -> String {
        let (a, b) = match self.leading {
            Slot::First => (first, second),
            Slot::Second => (second, first),
        };
        let mut s = String::with_capacity(self.prefix.len() + self.middle.len() + self.suffix.len() + a.len() + b.len());
        s.push_str(&self.prefix);
        s.push_str(a);
        s.push_str(&self.middle);
        s.push_str(b);
        s.push_str(&self.suffix);
        s
    }

    /// Returns the (first, second) slot bindings if `s` matches exactly.
    fn bind<'s>(&self, s: &'s str) -> Option<(&'s str, &'s str)> {
        let inner = s.strip_prefix(self.prefix.as_str())?.strip_suffix(self.suffix.as_str())?;
        let split = inner.find(|c: char| !is_entity_char(c)).unwrap_or(inner.len());
        let (a, rest) = inner.split_at(split);
        let b = rest.strip_prefix(self.middle.as_str())?;
        if a.is_empty() || !is_entity_token(b) {
            return None;
        }
        Some(match self.leading {
            Slot::First => (a, b),
            Slot::Second => (b, a),
        })
    }
}

#[derive(Debug, Clone)]
pub struct Template {
    pub id: u32,
    pub rel: Direction,
    pub text: String,
    pattern: Pattern,
}

#[derive(Debug, Clone)]
pub struct QuestionTemplate {
    pub id: u32,
    pub text: String,
    pattern: Pattern,
}

/// A sentence together with the template that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rendered {
    pub text: String,
    pub template_id: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BankStats {
    pub version: String,
    pub per_direction: Vec<(Direction, usize)>,
    pub questions: usize,
}

impl fmt::Display for BankStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "bank {}:", self.version)?;
        for (d, n) in &self.per_direction {
            write!(f, " {d}={n}")?;
        }
        write!(f, " question={}", self.questions)
    }
}

/// Immutable, validated set of relation and question templates.
#[derive(Debug, Clone)]
pub struct TemplateBank {
    templates: Vec<Template>,
    by_rel: [Vec<usize>; 8],
    questions: Vec<QuestionTemplate>,
    version: String,
}

fn dir_index(d: Direction) -> usize {
    Direction::ALL.iter().position(|&x| x == d).expect("direction listed in ALL")
}

fn default_questions() -> Vec<QuestionTemplate> {
    TemplateBank::builtin().questions
}

impl TemplateBank {
    /// The bank shipped with the crate.
    pub fn builtin() -> TemplateBank {
        Self::from_source(BUILTIN_SOURCE, BUILTIN_VERSION.to_string(), false)
            .expect("built-in template bank is valid")
    }

    /// Loads and validates a bank file. The version tag is derived from the
    /// file contents.
    pub fn load(path: impl AsRef<Path>) -> Result<TemplateBank, BankError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| BankError::Io { path: path.to_path_buf(), source })?;
        Self::parse_str(&text)
    }

    /// Parses bank text. If it has no `question` lines the built-in question
    /// templates are used.
    pub fn parse_str(text: &str) -> Result<TemplateBank, BankError> {
        let digest = Sha256::digest(text.as_bytes());
        let hex: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
        Self::from_source(text, format!("sha256:{hex}"), true)
    }

    fn from_source(text: &str, version: String, fallback_questions: bool) -> Result<TemplateBank, BankError> {
        let mut templates = Vec::new();
        let mut questions = Vec::new();
        let mut seen: Vec<(&str, &str)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let raw = raw.trim_end_matches('\r');
            if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
                continue;
            }
            let perr = |message: String| BankError::Parse { line, message };
            let (tag, body) = raw.split_once('\t').ok_or_else(|| perr("expected `direction<TAB>pattern`".into()))?;
            let (tag, body) = (tag.trim(), body.trim());
            if seen.contains(&(tag, body)) {
                return Err(perr(format!("duplicate pattern `{body}`")));
            }
            seen.push((tag, body));
            if tag == "question" {
                let pattern = Pattern::compile(body, "<X>", "<Y>").map_err(perr)?;
                questions.push(QuestionTemplate { id: questions.len() as u32, text: body.to_string(), pattern });
            } else {
                let rel: Direction = tag.parse().map_err(|e| perr(format!("{e}")))?;
                let pattern = Pattern::compile(body, "<HEAD>", "<TAIL>").map_err(perr)?;
                templates.push(Template { id: templates.len() as u32, rel, text: body.to_string(), pattern });
            }
        }
        if questions.is_empty() {
            if !fallback_questions {
                return Err(BankError::NoQuestions);
            }
            questions = default_questions();
        }
        let mut by_rel: [Vec<usize>; 8] = Default::default();
        for (i, t) in templates.iter().enumerate() {
            by_rel[dir_index(t.rel)].push(i);
        }
        if let Some(d) = Direction::ALL.into_iter().find(|&d| by_rel[dir_index(d)].is_empty()) {
            return Err(BankError::EmptyDirection(d));
        }
        let bank = TemplateBank { templates, by_rel, questions, version };
        bank.check_injective()?;
        Ok(bank)
    }

    /// Every template, rendered with a few probe entity pairs, must parse back
    /// through exactly one template to the triple it was rendered from.
    fn check_injective(&self) -> Result<(), BankError> {
        const PROBES: [(&str, &str); 3] = [("A", "B"), ("Q", "Z"), ("ab_1", "X9")];
        for t in &self.templates {
            for (h, tl) in PROBES {
                let triple = RelationTriple::new(h, t.rel, tl);
                let s = t.pattern.fill(h, tl);
                match self.parse(&s) {
                    Ok(back) if back == triple => {}
                    Ok(back) => {
                        return Err(BankError::NotInjective(format!("`{s}` parses as {back}, rendered from {triple}")))
                    }
                    Err(e) => return Err(BankError::NotInjective(e.to_string())),
                }
            }
        }
        for q in &self.questions {
            for (x, y) in PROBES {
                let s = q.pattern.fill(x, y);
                match self.parse_question(&s) {
                    Ok((a, b)) if a.as_str() == x && b.as_str() == y => {}
                    Ok(_) => return Err(BankError::NotInjective(format!("question `{s}` binds the wrong entities"))),
                    Err(e) => return Err(BankError::NotInjective(e.to_string())),
                }
            }
        }
        Ok(())
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn templates(&self) -> &[Template] {
        &self.templates
    }

    pub fn questions(&self) -> &[QuestionTemplate] {
        &self.questions
    }

    pub fn templates_for(&self, rel: Direction) -> impl Iterator<Item = &Template> {
        self.by_rel[dir_index(rel)].iter().map(|&i| &self.templates[i])
    }

    pub fn stats(&self) -> BankStats {
        BankStats {
            version: self.version.clone(),
            per_direction: Direction::ALL.iter().map(|&d| (d, self.by_rel[dir_index(d)].len())).collect(),
            questions: self.questions.len(),
        }
    }

    /// Renders `t` with a uniformly chosen template for its relation.
    pub fn render<R: Rng + ?Sized>(&self, t: &RelationTriple, rng: &mut R) -> Rendered {
        let choices = &self.by_rel[dir_index(t.rel)];
        let tpl = &self.templates[choices[rng.gen_range(0..choices.len())]];
        Rendered { text: tpl.pattern.fill(t.head.as_str(), t.tail.as_str()), template_id: tpl.id }
    }

    pub fn render_with(&self, template_id: u32, t: &RelationTriple) -> Option<String> {
        let tpl = self.templates.get(template_id as usize)?;
        (tpl.rel == t.rel).then(|| tpl.pattern.fill(t.head.as_str(), t.tail.as_str()))
    }

    /// Inverts [`render`](Self::render).
    pub fn parse(&self, sentence: &str) -> Result<RelationTriple, ParseError> {
        let mut found: Option<RelationTriple> = None;
        let mut count = 0;
        for t in &self.templates {
            if let Some((h, tl)) = t.pattern.bind(sentence) {
                count += 1;
                found = Some(RelationTriple::new(h, t.rel, tl));
            }
        }
        match (count, found) {
            (1, Some(t)) => Ok(t),
            (0, _) => Err(ParseError::NoMatch(sentence.to_string())),
            (count, _) => Err(ParseError::Ambiguous { sentence: sentence.to_string(), count }),
        }
    }

    /// Renders the question "where is `x` relative to `y`".
    pub fn render_question<R: Rng + ?Sized>(&self, x: &Entity, y: &Entity, rng: &mut R) -> Rendered {
        let q = &self.questions[rng.gen_range(0..self.questions.len())];
        Rendered { text: q.pattern.fill(x.as_str(), y.as_str()), template_id: q.id }
    }

    /// Returns the (asked, reference) entity pair of a rendered question.
    pub fn parse_question(&self, sentence: &str) -> Result<(Entity, Entity), ParseError> {
        let hits: Vec<_> = self.questions.iter().filter_map(|q| q.pattern.bind(sentence)).collect();
        match hits.as_slice() {
            [(x, y)] => Ok((Entity::from(*x), Entity::from(*y))),
            [] => Err(ParseError::NoMatch(sentence.to_string())),
            _ => Err(ParseError::Ambiguous { sentence: sentence.to_string(), count: hits.len() }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single_left_bank() -> TemplateBank {
        let mut src = String::from("left\t<HEAD> is to the left of <TAIL>\n");
        for d in Direction::ALL.iter().filter(|&&d| d != Direction::Left) {
            src.push_str(&format!("{d}\t<HEAD> is {d} of <TAIL>\n"));
        }
        TemplateBank::parse_str(&src).unwrap()
    }

    #[test]
    fn builtin_bank_covers_every_direction() {
        let bank = TemplateBank::builtin();
        for d in Direction::ALL {
            assert!(bank.templates_for(d).count() >= 3, "{d}");
        }
        assert_eq!(bank.version(), "builtin-v1");
        assert!(!bank.questions().is_empty());
    }

    #[test]
    fn single_template_render_and_parse() {
        let bank = single_left_bank();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = RelationTriple::new("A", Direction::Left, "B");
        assert_eq!(bank.render(&t, &mut rng).text, "A is to the left of B");
        assert_eq!(bank.parse("A is to the left of B").unwrap(), t);
        assert!(matches!(bank.parse("A flies over B"), Err(ParseError::NoMatch(_))));
    }

    #[test]
    fn seeded_render_is_deterministic() {
        let bank = TemplateBank::builtin();
        let t = RelationTriple::new("K", Direction::DownRight, "M");
        let a: Vec<_> = {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            (0..20).map(|_| bank.render(&t, &mut rng)).collect()
        };
        let b: Vec<_> = {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            (0..20).map(|_| bank.render(&t, &mut rng)).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn malformed_lines_are_rejected() {
        let err = TemplateBank::parse_str("left\t<HEAD> is left of B\n").unwrap_err();
        assert!(matches!(err, BankError::Parse { line: 1, .. }), "{err}");

        let err = TemplateBank::parse_str("# c\n\nleft\t<HEAD> is left of <TAIL>\nleft\t<HEAD> is left of <TAIL>\n")
            .unwrap_err();
        assert!(matches!(err, BankError::Parse { line: 4, .. }), "{err}");

        let err = TemplateBank::parse_str("up\t<HEAD> is up of <TAIL>\n").unwrap_err();
        assert!(matches!(err, BankError::Parse { line: 1, .. }));

        let err = TemplateBank::parse_str("left <HEAD> is left of <TAIL>\n").unwrap_err();
        assert!(matches!(err, BankError::Parse { line: 1, .. }));

        let err = TemplateBank::parse_str("left\t<HEAD><TAIL>\n").unwrap_err();
        assert!(matches!(err, BankError::Parse { line: 1, .. }));

        let err = TemplateBank::parse_str("left\t<HEAD> is left of <TAIL> and <TAIL>\n").unwrap_err();
        assert!(matches!(err, BankError::Parse { line: 1, .. }));

        let err = TemplateBank::parse_str("left\t<HEAD> is left of <TAIL>\n").unwrap_err();
        assert!(matches!(err, BankError::EmptyDirection(_)));
    }

    #[test]
    fn colliding_templates_are_rejected() {
        let mut src = String::new();
        for d in Direction::ALL {
            src.push_str(&format!("{d}\t<HEAD> is {d} of <TAIL>\n"));
        }
        // same surface form as `right` with the roles swapped
        src.push_str("left\t<TAIL> is right of <HEAD>\n");
        let err = TemplateBank::parse_str(&src).unwrap_err();
        assert!(matches!(err, BankError::NotInjective(_)), "{err}");
    }

    #[test]
    fn tail_first_patterns() {
        let bank = TemplateBank::builtin();
        let t = RelationTriple::new("A", Direction::Top, "B");
        let s = bank.templates_for(Direction::Top).find(|t| t.text.starts_with("Above")).unwrap();
        let text = bank.render_with(s.id, &t).unwrap();
        assert_eq!(text, "Above B is A.");
        assert_eq!(bank.parse(&text).unwrap(), t);
    }

    #[test]
    fn question_round_trip() {
        let bank = TemplateBank::builtin();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let q = bank.render_question(&"C".into(), &"Alpha".into(), &mut rng);
            let (x, y) = bank.parse_question(&q.text).unwrap();
            assert_eq!((x.as_str(), y.as_str()), ("C", "Alpha"));
        }
        assert!(bank.parse_question("A is above B.").is_err());
    }

    #[test]
    fn stats_report_counts() {
        let mut src = String::new();
        for i in 0..23 {
            src.push_str(&format!("left\t<HEAD> is left of <TAIL> ({i})\n"));
            src.push_str(&format!("right\t<HEAD> is right of <TAIL> ({i})\n"));
        }
        for d in [Direction::Top, Direction::Down] {
            for i in 0..27 {
                src.push_str(&format!("{d}\t<HEAD> is {d} of <TAIL> ({i})\n"));
            }
        }
        for d in [Direction::TopLeft, Direction::TopRight, Direction::DownLeft, Direction::DownRight] {
            for i in 0..26 {
                src.push_str(&format!("{d}\t<HEAD> is {d} of <TAIL> ({i})\n"));
            }
        }
        let bank = TemplateBank::parse_str(&src).unwrap();
        let stats = bank.stats();
        let count = |d| stats.per_direction.iter().find(|(x, _)| *x == d).unwrap().1;
        assert_eq!(count(Direction::Left), 23);
        assert_eq!(count(Direction::Right), 23);
        assert_eq!(count(Direction::Top), 27);
        assert_eq!(count(Direction::DownRight), 26);
        assert!(bank.version().starts_with("sha256:"));
        // no question lines: built-in questions are used
        assert_eq!(bank.questions().len(), TemplateBank::builtin().questions().len());
    }
}
