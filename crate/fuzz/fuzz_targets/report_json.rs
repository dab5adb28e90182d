#![no_main]

use asiaudit::report::{parse_report, render_table, Format};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(report) = parse_report(text) {
        for format in [Format::Text, Format::Csv, Format::Json, Format::Markdown] {
            let _ = render_table(&report.diagnostics, format);
        }
    }
});
