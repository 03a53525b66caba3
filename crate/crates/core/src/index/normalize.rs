use unicode_segmentation::UnicodeSegmentation;

/// Canonical key form for surface strings: Unicode lowercase, whitespace runs
/// collapsed, punctuation trimmed from both ends of every token. Tokens that
/// consist only of punctuation disappear.
pub fn normalize_surface_form(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for token in s.split_whitespace() {
        let trimmed = token.trim_matches(is_punctuation);
        if trimmed.is_empty() {
            continue;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        out.extend(trimmed.chars().flat_map(char::to_lowercase));
    }
    out
}

/// Word tokens of free text, normalized like surface forms.
pub fn tokenize(text: &str) -> Vec<String> {
    text.unicode_words()
        .map(normalize_surface_form)
        .filter(|t| !t.is_empty())
        .collect()
}

pub(crate) fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(c,
            '\u{00A1}' | '\u{00A7}' | '\u{00AB}' | '\u{00B6}' | '\u{00B7}' | '\u{00BB}' | '\u{00BF}'
            | '\u{037E}' | '\u{0387}'
            | '\u{055A}'..='\u{055F}'
            | '\u{060C}' | '\u{061B}' | '\u{061F}' | '\u{06D4}'
            | '\u{0964}' | '\u{0965}'
            | '\u{2010}'..='\u{2027}'
            | '\u{2030}'..='\u{205E}'
            | '\u{3001}'..='\u{3003}'
            | '\u{3008}'..='\u{3011}'
            | '\u{3014}'..='\u{301F}'
            | '\u{FF01}'..='\u{FF0F}'
            | '\u{FF1A}'..='\u{FF20}'
            | '\u{FF3B}'..='\u{FF40}'
            | '\u{FF5B}'..='\u{FF65}')
}
