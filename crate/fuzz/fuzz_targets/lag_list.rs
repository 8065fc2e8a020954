#![no_main]

use binseq_core::{parse_lags, ModelSpec, Residuals};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(lags) = parse_lags(text) else { return };
    assert!(lags.windows(2).all(|w| w[0] < w[1]));
    assert!(lags.first().is_none_or(|&l| l >= 1));
    let rendered: Vec<String> = lags.iter().map(usize::to_string).collect();
    assert_eq!(parse_lags(&rendered.join(",")).unwrap(), lags);
    if let Ok(spec) = ModelSpec::glarma(lags.clone(), lags.clone(), Residuals::Pearson) {
        assert_eq!(spec.partition().overlap, lags);
    }
});
