#![no_main]

use libfuzzer_sys::fuzz_target;
use recordsel::input::parse_sequence;
use recordsel::records::extract_records;
use recordsel::Direction;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(seq) = parse_sequence(text) {
        assert!(seq.iter().all(|x| x.is_finite()));
        let up = extract_records(&seq, Direction::Upper).unwrap();
        assert!(up.values.windows(2).all(|w| w[0] < w[1]));
    }
});
