#![no_main]

use asiaudit::panel::{read_csv, SchemaMode};
use asiaudit::{diagnose, PrepConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(panel) = read_csv(data, SchemaMode::Level, "fuzz") {
        let _ = diagnose(&panel, &PrepConfig::default());
    }
});
