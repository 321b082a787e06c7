#![no_main]

use dateform::icu::tokenize_format;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|pattern: &str| {
    if let Ok(fs) = tokenize_format(pattern) {
        let rendered = fs.to_string();
        let again = tokenize_format(&rendered).expect("rendered pattern tokenizes");
        assert_eq!(again, fs, "{pattern:?} -> {rendered:?}");
    }
});
