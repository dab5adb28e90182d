#![no_main]

use asiaudit::{simulate_panel, SimulationConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(config) = SimulationConfig::from_json(text) else {
        return;
    };
    // Only simulate what finishes quickly.
    if config.n_firms.saturating_mul(config.n_years) <= 2_000 {
        let _ = simulate_panel(&config);
    }
});
