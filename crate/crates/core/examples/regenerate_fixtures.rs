//! Re-records the scripted oracle fixtures and the mock dataset from
//! `assets/fixtures/scenarios.toml`. Run after editing templates, exemplars
//! or scenarios.

use std::path::Path;

use waypoint::assets::{self, FIXTURES_DIR};
use waypoint::oracle::serialize_oracle_fixtures;

fn main() {
    let dir = Path::new(FIXTURES_DIR);
    let source = std::fs::read_to_string(dir.join("scenarios.toml")).expect("read scenarios");
    let scenarios = assets::parse_scenarios(&source).expect("parse scenarios");
    let fixtures = match assets::record_scenario_fixtures(&scenarios) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    };
    std::fs::write(dir.join("oracle.jsonl"), serialize_oracle_fixtures(&fixtures)).expect("write oracle fixtures");
    std::fs::write(dir.join("dataset.jsonl"), assets::scenario_dataset(&scenarios)).expect("write dataset");
    println!("{} scenarios, {} oracle fixtures written to {}", scenarios.len(), fixtures.len(), dir.display());
}
