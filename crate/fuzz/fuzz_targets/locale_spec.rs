#![no_main]

use dateform::locale::{Locale, LocaleSpec};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(spec) = LocaleSpec::parse(text) {
        let locale = Locale::from_spec(spec);
        for line in text.lines().take(8) {
            let _ = locale.month_prefixes(line);
            let _ = locale.weekday_prefixes(line);
        }
    }
});
