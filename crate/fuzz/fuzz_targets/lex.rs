#![no_main]

use dateform::grammar::lex;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    let tokens = lex(text);
    let joined: String = tokens.iter().map(|t| t.text).collect();
    assert_eq!(joined, text);
    for t in &tokens {
        assert_eq!(&text[t.start..t.start + t.text.len()], t.text);
    }
});
