//! The ICU `SimpleDateFormat` pattern language, restricted to the field
//! codes this crate can infer and parse.
//!
//! A pattern is a sequence of [`FormatToken`]s: runs of one pattern letter
//! become a [`FieldCode`] whose width is the run length, everything else is
//! literal text. ASCII letters must be quoted to appear literally, and a
//! doubled single quote stands for one quote character, inside or outside a
//! quoted span.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("unbalanced quote starting at byte {offset}")]
    UnbalancedQuote { offset: usize },
    #[error("unknown field code '{letter}' at byte {offset}")]
    UnknownFieldCode { letter: char, offset: usize },
    #[error("unsupported width {width} for field code '{letter}' at byte {offset}")]
    UnsupportedWidth {
        letter: char,
        width: usize,
        offset: usize,
    },
}

/// Pattern letters understood by the tokenizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FieldLetter {
    Year,
    Quarter,
    Month,
    Day,
    Weekday,
    Meridian,
    Hour12,
    Hour24,
    Minute,
    Second,
    Fraction,
    ZoneName,
    ZoneOffset,
}

impl FieldLetter {
    pub const ALL: [FieldLetter; 13] = [
        FieldLetter::Year,
        FieldLetter::Quarter,
        FieldLetter::Month,
        FieldLetter::Day,
        FieldLetter::Weekday,
        FieldLetter::Meridian,
        FieldLetter::Hour12,
        FieldLetter::Hour24,
        FieldLetter::Minute,
        FieldLetter::Second,
        FieldLetter::Fraction,
        FieldLetter::ZoneName,
        FieldLetter::ZoneOffset,
    ];

    pub fn from_char(c: char) -> Option<FieldLetter> {
        Some(match c {
            'y' => FieldLetter::Year,
            'Q' => FieldLetter::Quarter,
            'M' => FieldLetter::Month,
            'd' => FieldLetter::Day,
            'E' => FieldLetter::Weekday,
            'a' => FieldLetter::Meridian,
            'h' => FieldLetter::Hour12,
            'H' => FieldLetter::Hour24,
            'm' => FieldLetter::Minute,
            's' => FieldLetter::Second,
            'S' => FieldLetter::Fraction,
            'z' => FieldLetter::ZoneName,
            'Z' => FieldLetter::ZoneOffset,
            _ => return None,
        })
    }

    pub fn as_char(self) -> char {
        match self {
            FieldLetter::Year => 'y',
            FieldLetter::Quarter => 'Q',
            FieldLetter::Month => 'M',
            FieldLetter::Day => 'd',
            FieldLetter::Weekday => 'E',
            FieldLetter::Meridian => 'a',
            FieldLetter::Hour12 => 'h',
            FieldLetter::Hour24 => 'H',
            FieldLetter::Minute => 'm',
            FieldLetter::Second => 's',
            FieldLetter::Fraction => 'S',
            FieldLetter::ZoneName => 'z',
            FieldLetter::ZoneOffset => 'Z',
        }
    }

    /// Widths accepted when reading a pattern.
    pub fn accepts_width(self, width: usize) -> bool {
        match self {
            FieldLetter::Year => width == 2 || width == 4,
            FieldLetter::Quarter | FieldLetter::Month | FieldLetter::Weekday => (1..=4).contains(&width),
            FieldLetter::Day
            | FieldLetter::Hour12
            | FieldLetter::Hour24
            | FieldLetter::Minute
            | FieldLetter::Second => (1..=2).contains(&width),
            FieldLetter::Meridian => width == 1,
            FieldLetter::Fraction => (1..=9).contains(&width),
            FieldLetter::ZoneName => (1..=3).contains(&width),
            FieldLetter::ZoneOffset => (1..=5).contains(&width),
        }
    }
}

/// Inclusive legal range of a numeric field, or `Textual` for word forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldRange {
    Numeric { min: u32, max: u32 },
    Textual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FieldCode {
    letter: FieldLetter,
    width: u8,
}

impl FieldCode {
    pub fn new(letter: FieldLetter, width: usize) -> Result<FieldCode, FormatError> {
        if !letter.accepts_width(width) {
            return Err(FormatError::UnsupportedWidth {
                letter: letter.as_char(),
                width,
                offset: 0,
            });
        }
        Ok(FieldCode {
            letter,
            width: width as u8,
        })
    }

    /// Panics on an unsupported width. Intended for literal code in tables.
    pub fn of(letter: FieldLetter, width: usize) -> FieldCode {
        FieldCode::new(letter, width).expect("valid field width")
    }

    pub fn letter(self) -> FieldLetter {
        self.letter
    }

    pub fn width(self) -> usize {
        self.width as usize
    }

    pub fn is_textual(self) -> bool {
        matches!(self.value_range(), FieldRange::Textual)
    }

    pub fn value_range(self) -> FieldRange {
        use FieldLetter::*;
        let w = self.width;
        let numeric = |min, max| FieldRange::Numeric { min, max };
        match self.letter {
            Year if w == 2 => numeric(0, 99),
            Year => numeric(0, 9999),
            Quarter if w <= 2 => numeric(1, 4),
            Month if w <= 2 => numeric(1, 12),
            Day => numeric(1, 31),
            Hour12 => numeric(1, 12),
            Hour24 => numeric(0, 23),
            Minute | Second => numeric(0, 59),
            Fraction => numeric(0, 10u32.pow(w as u32) - 1),
            Quarter | Month | Weekday | Meridian | ZoneName | ZoneOffset => FieldRange::Textual,
        }
    }

    /// The width this code is written with in emitted formats. Codes whose
    /// widths parse the same value language collapse onto one width.
    pub fn canonical(self) -> FieldCode {
        use FieldLetter::*;
        let width = match (self.letter, self.width) {
            (Quarter, 1) => 2,
            (Month, 1) => 2,
            (Day | Hour12 | Hour24 | Minute | Second, _) => 2,
            (Weekday, 1..=3) => 3,
            (ZoneName, _) => 3,
            (ZoneOffset, 1..=3) => 1,
            (_, w) => w,
        };
        FieldCode {
            letter: self.letter,
            width,
        }
    }
}

impl fmt::Display for FieldCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = self.letter.as_char();
        for _ in 0..self.width {
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FormatToken {
    Field(FieldCode),
    Literal(String),
}

/// An ordered token sequence with adjacent literals merged.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FormatString {
    tokens: Vec<FormatToken>,
}

impl FormatString {
    pub fn new() -> FormatString {
        FormatString::default()
    }

    pub fn from_tokens<I: IntoIterator<Item = FormatToken>>(tokens: I) -> FormatString {
        let mut fs = FormatString::new();
        for t in tokens {
            fs.push(t);
        }
        fs
    }

    pub fn push(&mut self, token: FormatToken) {
        match token {
            FormatToken::Literal(text) if text.is_empty() => {}
            FormatToken::Literal(text) => {
                if let Some(FormatToken::Literal(prev)) = self.tokens.last_mut() {
                    prev.push_str(&text);
                } else {
                    self.tokens.push(FormatToken::Literal(text));
                }
            }
            field => self.tokens.push(field),
        }
    }

    pub fn push_field(&mut self, letter: FieldLetter, width: usize) {
        self.push(FormatToken::Field(FieldCode::of(letter, width)));
    }

    pub fn push_literal(&mut self, text: &str) {
        self.push(FormatToken::Literal(text.to_string()));
    }

    pub fn tokens(&self) -> &[FormatToken] {
        &self.tokens
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn fields(&self) -> impl Iterator<Item = FieldCode> + '_ {
        self.tokens.iter().filter_map(|t| match t {
            FormatToken::Field(fc) => Some(*fc),
            FormatToken::Literal(_) => None,
        })
    }

    pub fn has_letter(&self, letter: FieldLetter) -> bool {
        self.fields().any(|fc| fc.letter() == letter)
    }

    /// Same tokens with every field written at its canonical width.
    pub fn canonical_widths(&self) -> FormatString {
        FormatString::from_tokens(self.tokens.iter().map(|t| match t {
            FormatToken::Field(fc) => FormatToken::Field(fc.canonical()),
            lit => lit.clone(),
        }))
    }
}

impl fmt::Display for FormatString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_format(self))
    }
}

impl FromStr for FormatString {
    type Err = FormatError;

    fn from_str(s: &str) -> Result<FormatString, FormatError> {
        tokenize_format(s)
    }
}

impl Serialize for FormatString {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&render_format(self))
    }
}

impl<'de> Deserialize<'de> for FormatString {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<FormatString, D::Error> {
        let text = String::deserialize(deserializer)?;
        tokenize_format(&text).map_err(serde::de::Error::custom)
    }
}

pub fn tokenize_format(pattern: &str) -> Result<FormatString, FormatError> {
    let mut fs = FormatString::new();
    let mut chars = pattern.char_indices().peekable();
    while let Some((offset, c)) = chars.next() {
        if c == '\'' {
            if matches!(chars.peek(), Some((_, '\''))) {
                chars.next();
                fs.push_literal("'");
                continue;
            }
            let mut text = String::new();
            loop {
                match chars.next() {
                    None => return Err(FormatError::UnbalancedQuote { offset }),
                    Some((_, '\'')) => {
                        if matches!(chars.peek(), Some((_, '\''))) {
                            chars.next();
                            text.push('\'');
                        } else {
                            break;
                        }
                    }
                    Some((_, ch)) => text.push(ch),
                }
            }
            fs.push(FormatToken::Literal(text));
        } else if c.is_ascii_alphabetic() {
            let letter =
                FieldLetter::from_char(c).ok_or(FormatError::UnknownFieldCode { letter: c, offset })?;
            let mut width = 1;
            while matches!(chars.peek(), Some((_, n)) if *n == c) {
                chars.next();
                width += 1;
            }
            let code = FieldCode::new(letter, width).map_err(|_| FormatError::UnsupportedWidth {
                letter: c,
                width,
                offset,
            })?;
            fs.push(FormatToken::Field(code));
        } else {
            let mut buf = [0u8; 4];
            fs.push_literal(c.encode_utf8(&mut buf));
        }
    }
    Ok(fs)
}

pub fn render_format(fs: &FormatString) -> String {
    let mut out = String::new();
    for token in fs.tokens() {
        match token {
            FormatToken::Field(fc) => out.push_str(&fc.to_string()),
            FormatToken::Literal(text) => render_literal(text, &mut out),
        }
    }
    out
}

/// Quotes the minimal spans: maximal runs of letters and apostrophes that
/// contain a letter. Apostrophes elsewhere are doubled.
fn render_literal(text: &str, out: &mut String) {
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_ascii_alphabetic() || c == '\'' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphabetic() || chars[i] == '\'') {
                i += 1;
            }
            let run = &chars[start..i];
            let quoted = run.iter().any(|c| c.is_ascii_alphabetic());
            if quoted {
                out.push('\'');
            }
            for &ch in run {
                if ch == '\'' {
                    out.push_str("''");
                } else {
                    out.push(ch);
                }
            }
            if quoted {
                out.push('\'');
            }
        } else {
            out.push(c);
            i += 1;
        }
    }
}

/// Canonical text for equivalence checks: width-equivalent codes unified
/// and whitespace runs inside literals collapsed to one space.
pub fn normalize_for_comparison(fs: &FormatString) -> String {
    let unified = FormatString::from_tokens(fs.canonical_widths().tokens().iter().map(|t| match t {
        FormatToken::Literal(text) => {
            let mut out = String::new();
            let mut in_space = false;
            for c in text.chars() {
                if c.is_whitespace() {
                    if !in_space {
                        out.push(' ');
                    }
                    in_space = true;
                } else {
                    out.push(c);
                    in_space = false;
                }
            }
            FormatToken::Literal(out)
        }
        field => field.clone(),
    }));
    render_format(&unified)
}

pub fn field_value_range(fc: FieldCode) -> FieldRange {
    fc.value_range()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use FieldLetter::*;

    fn f(letter: FieldLetter, width: usize) -> FormatToken {
        FormatToken::Field(FieldCode::of(letter, width))
    }

    fn lit(s: &str) -> FormatToken {
        FormatToken::Literal(s.to_string())
    }

    #[test]
    fn tokenizes_iso_date() {
        let fs = tokenize_format("yyyy-MM-dd").unwrap();
        assert_eq!(
            fs.tokens(),
            &[f(Year, 4), lit("-"), f(Month, 2), lit("-"), f(Day, 2)]
        );
    }

    #[test]
    fn doubled_quote_is_a_literal_quote() {
        let fs = tokenize_format("MM ''yyyy").unwrap();
        assert_eq!(fs.tokens(), &[f(Month, 2), lit(" '"), f(Year, 4)]);
        assert_eq!(render_format(&fs), "MM ''yyyy");
    }

    #[test]
    fn empty_pattern() {
        assert!(tokenize_format("").unwrap().is_empty());
        assert_eq!(render_format(&FormatString::new()), "");
    }

    #[test]
    fn renders_unix_date_layout() {
        let fs = FormatString::from_tokens([
            f(Weekday, 3),
            lit(" "),
            f(Month, 3),
            lit(" "),
            f(Day, 2),
            lit(" "),
            f(Hour24, 2),
            lit(":"),
            f(Minute, 2),
            lit(":"),
            f(Second, 2),
            lit(" "),
            f(ZoneName, 3),
            lit(" "),
            f(Year, 4),
        ]);
        assert_eq!(render_format(&fs), "EEE MMM dd HH:mm:ss zzz yyyy");
    }

    #[test]
    fn literal_words_are_quoted() {
        let fs = FormatString::from_tokens([lit("at")]);
        assert_eq!(render_format(&fs), "'at'");
        assert_eq!(tokenize_format("'at'").unwrap(), fs);
        let apostrophe = FormatString::from_tokens([lit("o'clock")]);
        assert_eq!(render_format(&apostrophe), "'o''clock'");
        assert_eq!(tokenize_format("'o''clock'").unwrap(), apostrophe);
    }

    #[test]
    fn quoted_spans_merge_with_neighbours() {
        let fs = tokenize_format("yyyy-MM-dd'T'HH").unwrap();
        assert_eq!(
            fs.tokens(),
            &[f(Year, 4), lit("-"), f(Month, 2), lit("-"), f(Day, 2), lit("T"), f(Hour24, 2)]
        );
    }

    #[test]
    fn errors() {
        assert_eq!(
            tokenize_format("yyyy 'at"),
            Err(FormatError::UnbalancedQuote { offset: 5 })
        );
        assert_eq!(
            tokenize_format("yyyy-ww"),
            Err(FormatError::UnknownFieldCode { letter: 'w', offset: 5 })
        );
        assert_eq!(
            tokenize_format("yyy"),
            Err(FormatError::UnsupportedWidth { letter: 'y', width: 3, offset: 0 })
        );
        assert!(tokenize_format("MMMMM").is_err());
        assert!(tokenize_format("ddd").is_err());
        assert!(tokenize_format("aa").is_err());
    }

    #[test]
    fn value_ranges() {
        assert_eq!(field_value_range(FieldCode::of(Hour24, 2)), FieldRange::Numeric { min: 0, max: 23 });
        assert_eq!(field_value_range(FieldCode::of(Hour12, 2)), FieldRange::Numeric { min: 1, max: 12 });
        assert_eq!(field_value_range(FieldCode::of(Minute, 2)), FieldRange::Numeric { min: 0, max: 59 });
        assert_eq!(field_value_range(FieldCode::of(Second, 2)), FieldRange::Numeric { min: 0, max: 59 });
        assert_eq!(field_value_range(FieldCode::of(Month, 2)), FieldRange::Numeric { min: 1, max: 12 });
        assert_eq!(field_value_range(FieldCode::of(Day, 2)), FieldRange::Numeric { min: 1, max: 31 });
        assert_eq!(field_value_range(FieldCode::of(Quarter, 2)), FieldRange::Numeric { min: 1, max: 4 });
        assert_eq!(field_value_range(FieldCode::of(Month, 4)), FieldRange::Textual);
        assert_eq!(field_value_range(FieldCode::of(Month, 3)), FieldRange::Textual);
        assert_eq!(field_value_range(FieldCode::of(Weekday, 4)), FieldRange::Textual);
        assert_eq!(field_value_range(FieldCode::of(Meridian, 1)), FieldRange::Textual);
        assert_eq!(field_value_range(FieldCode::of(ZoneName, 3)), FieldRange::Textual);
    }

    #[test]
    fn table_one_formats_round_trip() {
        for p in [
            "EEE MMM dd HH:mm:ss zzz yyyy",
            "[dd/MMM/yyyy:HH:mm:ss",
            "dd-MMM-yy hh.mm.ss.SSSSSS a",
            "MM ''yyyy",
            "MM/dd/yyyy - HH:mm",
        ] {
            let fs = tokenize_format(p).unwrap();
            assert_eq!(render_format(&fs), p);
            assert_eq!(tokenize_format(&render_format(&fs)).unwrap(), fs);
        }
    }

    #[test]
    fn comparison_normal_form() {
        let n = |p: &str| normalize_for_comparison(&tokenize_format(p).unwrap());
        assert_eq!(n("yyyy-MM-dd"), n("yyyy-MM-dd"));
        assert_eq!(n("M/d/yyyy"), n("MM/dd/yyyy"));
        assert_eq!(n("dd  MMM yyyy"), "dd MMM yyyy");
        assert_ne!(n("MMyyyy"), n("HHmmss"));
        assert_ne!(n("yy"), n("yyyy"));
        assert_eq!(n("MM/dd/yyyy - HH:mm"), "MM/dd/yyyy - HH:mm");
    }

    #[test]
    fn canonical_widths_unify_padding() {
        let a = tokenize_format("d/M/yyyy h:m").unwrap().canonical_widths();
        let b = tokenize_format("dd/MM/yyyy hh:mm").unwrap();
        assert_eq!(a, b);
        let words = tokenize_format("MMM").unwrap().canonical_widths();
        assert_eq!(render_format(&words), "MMM");
    }

    fn arb_token() -> impl Strategy<Value = FormatToken> {
        let field = (0usize..FieldLetter::ALL.len(), 1usize..=9).prop_filter_map("width", |(i, w)| {
            let letter = FieldLetter::ALL[i];
            FieldCode::new(letter, w).ok().map(FormatToken::Field)
        });
        let literal = "[ -~]{1,4}".prop_map(FormatToken::Literal);
        prop_oneof![field, literal]
    }

    fn no_adjacent_same_letter(tokens: &[FormatToken]) -> bool {
        tokens.windows(2).all(|w| match (&w[0], &w[1]) {
            (FormatToken::Field(a), FormatToken::Field(b)) => a.letter() != b.letter(),
            _ => true,
        })
    }

    proptest! {
        #[test]
        fn render_then_tokenize_is_identity(tokens in proptest::collection::vec(arb_token(), 0..10)) {
            let fs = FormatString::from_tokens(tokens);
            prop_assume!(no_adjacent_same_letter(fs.tokens()));
            let text = render_format(&fs);
            prop_assert_eq!(tokenize_format(&text).unwrap(), fs);
        }

        #[test]
        fn tokenize_never_panics(text in "\\PC{0,24}") {
            let _ = tokenize_format(&text);
        }
    }
}
