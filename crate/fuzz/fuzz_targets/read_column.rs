#![no_main]

use dateform::corpus::{column_from_values, read_column, Selector};
use dateform::locale::Locale;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Some((&sel, bytes)) = data.split_first() else {
        return;
    };
    let selector = match sel % 3 {
        0 => None,
        1 => Some(Selector::Index(usize::from(sel >> 2))),
        _ => Some(Selector::Name("date".into())),
    };
    let en = Locale::english();
    for csv in [true, false] {
        if let Ok((name, values)) = read_column(bytes, csv, "fuzz", selector.as_ref()) {
            let _ = column_from_values(&name, &values, &en, 32);
        }
    }
});
