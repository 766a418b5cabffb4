use std::collections::HashSet;
use std::sync::OnceLock;

pub const URL_TOKEN: &str = "<url>";

const STOPWORDS_TXT: &str = include_str!("stopwords.txt");

fn stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        STOPWORDS_TXT
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect()
    })
}

pub fn is_stopword(token: &str) -> bool {
    stopwords().contains(token)
}

fn is_url(token: &str) -> bool {
    ["http://", "https://", "ftp://", "www."]
        .iter()
        .any(|p| token.starts_with(p))
}

/// Stems until the word stops changing; the stemmer is not idempotent on its
/// own (e.g. "agreed" -> "agre" -> "agr").
fn stem_fixpoint(word: &str) -> String {
    let mut current = word.to_string();
    loop {
        let next = porter_stemmer::stem(&current);
        if next == current || next.is_empty() {
            return current;
        }
        current = next;
    }
}

/// Lowercases, collapses URLs to `<url>`, strips non-alphanumerics, drops
/// stop words and Porter-stems what is left.
pub fn preprocess_message(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    let mut tokens = Vec::new();
    for raw in lower.split_whitespace() {
        if raw == URL_TOKEN {
            tokens.push(URL_TOKEN.to_string());
            continue;
        }
        // URLs may follow punctuation such as "(https://...".
        let (head, url) = match raw
            .char_indices()
            .find(|&(i, _)| is_url(&raw[i..]))
            .map(|(i, _)| i)
        {
            Some(i) => (&raw[..i], true),
            None => (raw, false),
        };
        for word in head
            .split(|c: char| !c.is_ascii_alphanumeric())
            .filter(|w| !w.is_empty())
        {
            if is_stopword(word) {
                continue;
            }
            let stemmed = stem_fixpoint(word);
            if !stemmed.is_empty() && !is_stopword(&stemmed) {
                tokens.push(stemmed);
            }
        }
        if url {
            tokens.push(URL_TOKEN.to_string());
        }
    }
    tokens
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty() {
        assert!(preprocess_message("").is_empty());
    }

    #[test]
    fn five_steps() {
        assert_eq!(
            preprocess_message("Fixed NPE, see https://x.y/z"),
            vec!["fix", "npe", "<url>"]
        );
        assert_eq!(preprocess_message("BUG bug Bug"), vec!["bug", "bug", "bug"]);
        assert_eq!(preprocess_message("(www.example.com)"), vec!["<url>"]);
    }

    #[test]
    fn stemming_reaches_a_fixpoint() {
        let once = preprocess_message("agreed");
        assert_eq!(preprocess_message(&once.join(" ")), once);
    }

    proptest! {
        #[test]
        fn idempotent_on_own_output(s in "[a-zA-Z0-9 ,.:/'()-]{0,80}") {
            let once = preprocess_message(&s);
            let twice = preprocess_message(&once.join(" "));
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn idempotent_on_word_soup(words in proptest::collection::vec("[a-z]{1,12}", 0..12)) {
            let once = preprocess_message(&words.join(" "));
            prop_assert_eq!(preprocess_message(&once.join(" ")), once);
        }
    }
}
