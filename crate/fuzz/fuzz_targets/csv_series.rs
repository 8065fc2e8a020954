#![no_main]

use binseq_core::{read_csv, CsvSchema};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    for intercept in [false, true] {
        let schema = CsvSchema::default().with_intercept(intercept);
        if let Ok(series) = read_csv(data, &schema) {
            // A validated series honours its own invariants.
            assert_eq!(series.y().len(), series.n());
            assert_eq!(series.x().nrows(), series.n());
            assert!(series.y().iter().zip(series.m()).all(|(y, m)| y <= m && *m >= 1));
            assert!(series.x().iter().all(|v| v.is_finite()));
            let mut buf = Vec::new();
            series.write_csv(&mut buf).expect("write to memory");
        }
    }
});
