#![no_main]

// Each line is one sample value.
use dateform::detection::DetectOptions;
use dateform::locale::Locale;
use dateform::mdl::MdlDetector;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    let values: Vec<&str> = text.lines().take(8).filter(|v| v.len() <= 40).collect();
    if values.is_empty() {
        return;
    }
    let detector = MdlDetector::new(&Locale::english(), DetectOptions::default());
    if let Ok(candidates) = detector.propose(&values) {
        for c in &candidates {
            assert!((0.0..=1.0).contains(&c.error_rate));
        }
    }
});
