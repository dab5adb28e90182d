#![no_main]

use asiaudit::panel::{read_csv, SchemaMode};
use asiaudit::{diagnose, PrepConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(panel) = read_csv(data, SchemaMode::Flow, "fuzz") else {
        return;
    };
    // Errors are fine; panics are not.
    let _ = diagnose(&panel, &PrepConfig::default());
});
