#![no_main]

use std::sync::OnceLock;

use dateform::grammar::{lex, Grammar};
use dateform::locale::Locale;
use dateform::pcfg::{cyk_parse, default_weights, tree_to_format};
use libfuzzer_sys::fuzz_target;

fn grammar() -> &'static Grammar {
    static G: OnceLock<Grammar> = OnceLock::new();
    G.get_or_init(|| default_weights(&Locale::english()))
}

fuzz_target!(|text: &str| {
    if text.len() > 64 {
        return;
    }
    let g = grammar();
    let tokens = lex(text);
    if let Ok(trees) = cyk_parse(&tokens, g, 8) {
        for t in &trees {
            let _ = tree_to_format(t, &tokens, g);
        }
    }
});
