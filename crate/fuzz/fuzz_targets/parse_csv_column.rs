#![no_main]

use libfuzzer_sys::fuzz_target;
use recordsel::input::{parse_csv_column, ColumnSelector};

// first line picks the column, the rest is the CSV body
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let (sel, body) = text.split_once('\n').unwrap_or((text, ""));
    if let Ok(values) = parse_csv_column(body, &ColumnSelector::parse(sel)) {
        assert!(!values.is_empty());
        assert!(values.iter().all(|x| x.is_finite()));
    }
});
