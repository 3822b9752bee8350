//! Word vocabulary for the model, built from a template bank and a lexicon.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::generator::Lexicon;
use crate::spatial::AnswerLabel;
use crate::templates::TemplateBank;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown token `{0}`")]
pub struct UnknownToken(pub String);

/// Splits text into words and single punctuation marks. Apostrophes stay
/// inside words, so "o'clock" is one token.
pub fn tokenize(text: &str) -> Vec<&str> {
    let word = |c: char| c.is_alphanumeric() || c == '_' || c == '\'' || c == '-';
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        if word(c) {
            start.get_or_insert(i);
            continue;
        }
        if let Some(s) = start.take() {
            out.push(&text[s..i]);
        }
        if !c.is_whitespace() {
            out.push(&text[i..i + c.len_utf8()]);
        }
    }
    if let Some(s) = start {
        out.push(&text[s..]);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: BTreeMap<String, usize>,
    max_sentence: usize,
}

const PLACEHOLDERS: [&str; 4] = ["<HEAD>", "<TAIL>", "<X>", "<Y>"];

impl Vocabulary {
    /// Every word any rendered sentence, question or answer can contain.
    /// Ids follow sorted order so the mapping is stable.
    pub fn build(bank: &TemplateBank, lexicon: &Lexicon) -> Vocabulary {
        let mut words = BTreeSet::new();
        let mut max_sentence = 0;
        let patterns = bank.templates().iter().map(|t| t.text.as_str()).chain(bank.questions().iter().map(|q| q.text.as_str()));
        for p in patterns {
            let mut filled = p.to_string();
            for ph in PLACEHOLDERS {
                filled = filled.replace(ph, " \u{0} ");
            }
            let toks = tokenize(&filled);
            max_sentence = max_sentence.max(toks.len());
            words.extend(toks.into_iter().filter(|t| *t != "\u{0}").map(str::to_string));
        }
        words.extend(lexicon.entities().iter().map(|e| e.as_str().to_string()));
        words.extend(AnswerLabel::ALL.iter().map(|l| l.as_str().to_string()));
        let words: Vec<String> = words.into_iter().collect();
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        Vocabulary { words, index, max_sentence }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Longest sentence or question in tokens.
    pub fn max_sentence(&self) -> usize {
        self.max_sentence
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: usize) -> Option<&str> {
        self.words.get(id).map(String::as_str)
    }

    pub fn encode(&self, text: &str) -> Result<Vec<usize>, UnknownToken> {
        tokenize(text).into_iter().map(|t| self.id(t).ok_or_else(|| UnknownToken(t.to_string()))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::SampleGenerator;
    use crate::noise::NoisePolicy;
    use crate::sample::RngSeed;

    #[test]
    fn tokenizer_splits_punctuation() {
        assert_eq!(tokenize("A is at the 10 o'clock position of B."), ["A", "is", "at", "the", "10", "o'clock", "position", "of", "B", "."]);
        assert_eq!(tokenize("Where is X?"), ["Where", "is", "X", "?"]);
        assert!(tokenize("  ").is_empty());
    }

    #[test]
    fn generated_text_is_covered() {
        let bank = TemplateBank::builtin();
        let vocab = Vocabulary::build(&bank, &Lexicon::default());
        let g = SampleGenerator::new(bank).with_noise(NoisePolicy::default());
        for i in 0..500 {
            let s = g.generate(1 + i % 10, RngSeed { master: 3, stream: i as u64 }).unwrap();
            for line in s.story.iter().chain([&s.question]) {
                let ids = vocab.encode(line).unwrap();
                assert!(ids.len() <= vocab.max_sentence());
            }
            assert!(vocab.id(s.answer.as_str()).is_some());
        }
    }

    #[test]
    fn unknown_words_are_rejected() {
        let vocab = Vocabulary::build(&TemplateBank::builtin(), &Lexicon::default());
        assert_eq!(vocab.encode("A zzyzx B"), Err(UnknownToken("zzyzx".into())));
    }
}
