#![no_main]

use binseq_core::NuisanceGrid;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(grid) = text.parse::<NuisanceGrid>() else { return };
    assert!(!grid.is_empty());
    assert!(grid.points.iter().all(|w| w.abs() < 1.0));
    assert!(grid.points.windows(2).all(|w| w[0] <= w[1]));
});
