#![no_main]

// Each line is one column value.
use std::sync::OnceLock;

use dateform::corpus::column_from_values;
use dateform::detection::DetectOptions;
use dateform::locale::Locale;
use dateform::pcfg::NlpDetector;
use libfuzzer_sys::fuzz_target;

fn setup() -> &'static (Locale, NlpDetector) {
    static S: OnceLock<(Locale, NlpDetector)> = OnceLock::new();
    S.get_or_init(|| {
        let en = Locale::english();
        let d = NlpDetector::new(&en, DetectOptions::default());
        (en, d)
    })
}

fuzz_target!(|text: &str| {
    let values: Vec<&str> = text.lines().take(16).filter(|v| v.len() <= 48).collect();
    let (en, detector) = setup();
    if let Ok(sample) = column_from_values("fuzz", &values, en, 32) {
        if let Ok(result) = detector.detect(&sample) {
            assert!(result.candidates.iter().all(|c| (0.0..=1.0).contains(&c.error_rate)));
        }
    }
});
