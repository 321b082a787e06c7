#![no_main]

use std::sync::OnceLock;

use dateform::grammar::Grammar;
use dateform::locale::Locale;
use dateform::pcfg::default_weights;
use libfuzzer_sys::fuzz_target;

fn base() -> &'static (Locale, Grammar) {
    static BASE: OnceLock<(Locale, Grammar)> = OnceLock::new();
    BASE.get_or_init(|| {
        let en = Locale::english();
        let g = default_weights(&en);
        (en, g)
    })
}

fuzz_target!(|text: &str| {
    let (en, g) = base();
    if let Ok(parsed) = Grammar::from_dump(text, en) {
        let _ = Grammar::from_dump(&parsed.dump(), en).expect("dump re-parses");
    }
    let _ = g.load_weights(text);
});
