#![no_main]

// Input is `pattern\nvalue`.
use dateform::dateparse::{apply_defaults, dateparse, format_instant};
use dateform::icu::tokenize_format;
use dateform::locale::Locale;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    let Some((pattern, value)) = data.split_once('\n') else {
        return;
    };
    let Ok(fs) = tokenize_format(pattern) else {
        return;
    };
    let en = Locale::english();
    match dateparse(value, &fs, &en) {
        Ok(v) => {
            let r = apply_defaults(&v);
            let _ = r.to_string();
            let _ = format_instant(&r, &fs, &en);
        }
        Err(e) => assert!(e.offset <= value.len()),
    }
});
