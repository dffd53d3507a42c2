/// Identifier mixed into histogram fingerprints; bump when the rule below changes.
pub const TOKENIZER_ID: &str = "alnum-lower-min2/v1";

/// A counted token and the byte range of the raw run it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSpan {
    pub start: usize,
    pub end: usize,
    pub token: String,
}

/// Splits on every non-alphanumeric character, lowercases, and drops tokens
/// shorter than two characters.
pub fn tokenize(text: &str) -> Vec<String> {
    token_spans(text).into_iter().map(|s| s.token).collect()
}

/// Like [`tokenize`] but keeps byte offsets of each token's run in `text`.
///
/// Runs are maximal sequences of alphanumeric chars in the original text. The
/// lowercase form keeps only alphanumeric chars, since some lowercase mappings
/// emit combining marks.
pub fn token_spans(text: &str) -> Vec<TokenSpan> {
    let mut out = Vec::new();
    let mut run_start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        match (c.is_alphanumeric(), run_start) {
            (true, None) => run_start = Some(i),
            (false, Some(s)) => {
                push_run(text, s, i, &mut out);
                run_start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = run_start {
        push_run(text, s, text.len(), &mut out);
    }
    out
}

fn push_run(text: &str, start: usize, end: usize, out: &mut Vec<TokenSpan>) {
    let token: String = text[start..end]
        .chars()
        .flat_map(char::to_lowercase)
        .filter(|c| c.is_alphanumeric())
        .collect();
    if token.chars().count() >= 2 {
        out.push(TokenSpan { start, end, token });
    }
}
