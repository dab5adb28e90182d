//! Replays the checked-in fuzz seeds through the same entry points the
//! fuzz targets drive, so the corpus stays exercised on stable.

use std::path::PathBuf;

use asiaudit::panel::{read_csv, SchemaMode};
use asiaudit::report::{parse_report, render_table, Format};
use asiaudit::{diagnose, simulate_panel, PrepConfig, SimulationConfig};

fn seeds(target: &str) -> Vec<(PathBuf, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let path = e.unwrap().path();
            let bytes = std::fs::read(&path).unwrap();
            (path, bytes)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn csv_seeds() {
    let mut parsed = 0;
    for (mode, target) in [(SchemaMode::Flow, "flow_csv"), (SchemaMode::Level, "level_csv")] {
        for (_, bytes) in seeds(target) {
            if let Ok(panel) = read_csv(&bytes[..], mode, "seed") {
                parsed += 1;
                let _ = diagnose(&panel, &PrepConfig::default());
            }
        }
    }
    assert!(parsed >= 3);
}

#[test]
fn config_seeds() {
    let mut valid = 0;
    for (_, bytes) in seeds("sim_config") {
        if let Ok(config) = SimulationConfig::from_json(std::str::from_utf8(&bytes).unwrap()) {
            valid += 1;
            assert!(simulate_panel(&config).is_ok());
        }
    }
    assert_eq!(valid, 2);
}

#[test]
fn report_seeds() {
    for (path, bytes) in seeds("report_json") {
        let report = parse_report(std::str::from_utf8(&bytes).unwrap())
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        for format in [Format::Text, Format::Csv, Format::Json, Format::Markdown] {
            assert!(!render_table(&report.diagnostics, format).is_empty());
        }
    }
}
