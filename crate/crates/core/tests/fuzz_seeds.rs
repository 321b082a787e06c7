//! Replays the checked-in fuzz seeds through the same entry points the fuzz
//! targets drive, so the corpora stay meaningful as the parsers change.

use std::fs;
use std::path::{Path, PathBuf};

use dateform::corpus::{column_from_values, read_column};
use dateform::dateparse::{apply_defaults, dateparse};
use dateform::detection::DetectOptions;
use dateform::grammar::{lex, Grammar};
use dateform::icu::tokenize_format;
use dateform::locale::{Locale, LocaleSpec};
use dateform::mdl::MdlDetector;
use dateform::pcfg::{cyk_parse, default_weights, NlpDetector};

fn seeds(target: &str) -> Vec<(PathBuf, Vec<u8>)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            let bytes = fs::read(&p).unwrap();
            (p, bytes)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

fn text_seeds(target: &str) -> Vec<String> {
    seeds(target).into_iter().map(|(_, b)| String::from_utf8(b).unwrap()).collect()
}

#[test]
fn tokenize_format_seeds() {
    let mut ok = 0;
    for s in text_seeds("tokenize_format") {
        if let Ok(fs) = tokenize_format(&s) {
            assert_eq!(tokenize_format(&fs.to_string()).unwrap(), fs);
            ok += 1;
        }
    }
    assert!(ok >= 5);
}

#[test]
fn dateparse_seeds() {
    let en = Locale::english();
    let mut parsed = 0;
    for s in text_seeds("dateparse") {
        let (pattern, value) = s.split_once('\n').unwrap();
        let fs = tokenize_format(pattern).unwrap();
        if let Ok(v) = dateparse(value, &fs, &en) {
            let _ = apply_defaults(&v).to_string();
            parsed += 1;
        }
    }
    assert!(parsed >= 8);
}

#[test]
fn lex_seeds() {
    for s in text_seeds("lex") {
        let joined: String = lex(&s).iter().map(|t| t.text).collect();
        assert_eq!(joined, s);
    }
}

#[test]
fn locale_spec_seeds() {
    let specs = text_seeds("locale_spec");
    assert!(LocaleSpec::parse(&specs[0]).is_ok());
    for s in &specs {
        if let Ok(spec) = LocaleSpec::parse(s) {
            let _ = Locale::from_spec(spec);
        }
    }
}

#[test]
fn grammar_dump_seeds() {
    let en = Locale::english();
    let g = default_weights(&en);
    let dumps = text_seeds("grammar_dump");
    let full = Grammar::from_dump(&dumps[0], &en).unwrap();
    assert_eq!(full.dump(), dumps[0]);
    assert!(g.load_weights(&dumps[0]).is_ok());
    for s in &dumps {
        if let Ok(parsed) = Grammar::from_dump(s, &en) {
            Grammar::from_dump(&parsed.dump(), &en).unwrap();
        }
    }
}

#[test]
fn read_column_seeds() {
    let en = Locale::english();
    for (_, bytes) in seeds("read_column") {
        let (_, body) = bytes.split_first().unwrap();
        for csv in [true, false] {
            if let Ok((name, values)) = read_column(body, csv, "seed", None) {
                let _ = column_from_values(&name, &values, &en, 32);
            }
        }
    }
}

#[test]
fn cyk_parse_seeds() {
    let g = default_weights(&Locale::english());
    for s in text_seeds("cyk_parse") {
        let trees = cyk_parse(&lex(&s), &g, 8).unwrap_or_else(|e| panic!("{s:?}: {e}"));
        assert!(!trees.is_empty(), "{s:?}");
    }
}

#[test]
fn detector_seeds() {
    let en = Locale::english();
    let mdl = MdlDetector::new(&en, DetectOptions::default());
    let nlp = NlpDetector::new(&en, DetectOptions::default());
    for s in text_seeds("mdl_detect") {
        let values: Vec<&str> = s.lines().collect();
        if let Ok(cands) = mdl.propose(&values) {
            assert!(cands.iter().all(|c| (0.0..=1.0).contains(&c.error_rate)));
        }
    }
    for s in text_seeds("nlp_detect") {
        let values: Vec<&str> = s.lines().collect();
        if let Ok(sample) = column_from_values("seed", &values, &en, 32) {
            let _ = nlp.detect(&sample);
        }
    }
}
