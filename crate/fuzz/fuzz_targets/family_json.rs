#![no_main]

use libfuzzer_sys::fuzz_target;
use recordsel::FamilySpec;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(fam) = FamilySpec::from_json(text) {
        let again = FamilySpec::from_json(&fam.to_json()).expect("round trip");
        assert_eq!(again, fam);
        let (lo, hi) = fam.support();
        for x in [lo, 0.5 * (lo + hi), hi, 1.0, 10.0] {
            let _ = fam.statistic(x);
        }
    }
});
