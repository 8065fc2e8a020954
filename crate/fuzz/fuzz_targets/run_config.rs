#![no_main]

use binseq_cli::ConfigFile;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = ConfigFile::parse(text) {
        assert!(cfg.threads != Some(0));
        assert!(!(cfg.omega.is_some() && cfg.omega_grid.is_some()));
    }
});
