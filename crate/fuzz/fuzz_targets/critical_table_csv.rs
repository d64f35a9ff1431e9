#![no_main]

use libfuzzer_sys::fuzz_target;
use recordsel::CriticalValueTable;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(table) = CriticalValueTable::from_csv(text) {
        let again = CriticalValueTable::from_csv(&table.to_csv(17)).expect("round trip");
        assert_eq!(again.n_values, table.n_values);
    }
});
